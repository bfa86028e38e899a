use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::gauss::quadrature::{integrate, QuadratureSpec};
use crate::gauss::scalar::{cdf, density};
use crate::simplex::{InterfaceAreaTable, SimplexShift};

fn check_index(q: usize, i: usize) -> Result<()> {
    if i >= q {
        return Err(Error::InvalidDimension(format!("cell index {i} out of range for q = {q}")));
    }
    Ok(())
}

/// `Psi_i(x) = int phi(t) prod_{j != i} Phi(t + x_j - x_i) dt`, the Gaussian
/// measure of cell `i` of the shifted model cluster `x + Omega^m`.
pub fn model_cell_measure(x: &SimplexShift, i: usize, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    check_index(x.q(), i)?;
    let c = x.as_slice();
    let xi = c[i];
    let offsets: Vec<f64> = c
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, xj)| xj - xi)
        .collect();
    integrate(
        |t| density(t) * offsets.iter().map(|d| cdf(t + d)).product::<f64>(),
        spec,
    )
}

/// All `q` cell measures.
pub fn model_cell_measures(x: &SimplexShift, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    (0..x.q()).map(|i| model_cell_measure(x, i, spec)).collect()
}

/// Gaussian `(q-2)`-measure of the interface `x + Sigma^m_ij`.
///
/// Equals `phi(c0) * E[prod_{k != i,j} Phi(s - (x_i + x_j)/2 + x_k)]` with
/// `s ~ N(0, 1/2)` and `c0 = (x_i - x_j)/sqrt(2)`. For `q = 2` the product is
/// empty and the area is the density weight `phi(c0)` of the single point.
pub fn model_interface_area(x: &SimplexShift, i: usize, j: usize, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let q = x.q();
    check_index(q, i)?;
    check_index(q, j)?;
    if i == j {
        return Err(Error::Domain(format!("interface needs distinct cells, got {i} twice")));
    }
    // evaluate in a fixed order so A_ij and A_ji agree bit for bit
    let (i, j) = (i.min(j), i.max(j));
    let c = x.as_slice();
    let weight = density((c[i] - c[j]) * FRAC_1_SQRT_2);
    if q == 2 {
        return Ok(weight);
    }
    let mid = 0.5 * (c[i] + c[j]);
    let offsets: Vec<f64> = (0..q)
        .filter(|&k| k != i && k != j)
        .map(|k| c[k] - mid)
        .collect();
    // substitute s = t / sqrt(2) with t standard normal
    let conditional = integrate(
        |t| {
            let s = t * FRAC_1_SQRT_2;
            density(t) * offsets.iter().map(|d| cdf(s + d)).product::<f64>()
        },
        spec,
    )?;
    Ok(weight * conditional)
}

/// The full table `A^m(x)`.
pub fn model_area_table(x: &SimplexShift, spec: &QuadratureSpec) -> Result<InterfaceAreaTable> {
    let q = x.q();
    let mut values = Vec::with_capacity(q * (q - 1) / 2);
    for i in 0..q {
        for j in (i + 1)..q {
            values.push(model_interface_area(x, i, j, spec)?);
        }
    }
    let mut it = values.into_iter();
    InterfaceAreaTable::from_pairs(q, |_, _| it.next().expect("one value per pair"))
}
