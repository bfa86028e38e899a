//! Seeded Monte-Carlo measures and areas of pull-back clusters.
//!
//! `Y = B^T y` with `y` standard Gaussian on `R^n` is `N(0, B^T B)` on `E`, so
//! everything is sampled in the `q`-dimensional `Y` coordinates. Interface
//! areas condition `Y` on `<n_ij, y> = c_ij` by the Schur complement of the
//! joint covariance of `(Y, <n_ij, y>)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::gauss::{chunked_sum, density, model_area_table, model_cell_measures, Estimate, McSpec, QuadratureSpec};
use crate::pullback::{PullbackCluster, EDGE_NORM_TOL};
use crate::simplex::InterfaceAreaTable;

/// Symmetric square root `F` with `F F^T = cov` (negative eigenvalues clipped).
fn covariance_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new((cov + cov.transpose()) * 0.5);
    let mut f = eig.eigenvectors.clone();
    for (k, ev) in eig.eigenvalues.iter().enumerate() {
        let s = ev.max(0.0).sqrt();
        f.column_mut(k).scale_mut(s);
    }
    f
}

fn argmax_shifted(y: &DVector<f64>, lambda: &DVector<f64>) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for k in 0..y.len() {
        let s = y[k] - lambda[k];
        if s > best {
            best = s;
            arg = k;
        }
    }
    arg
}

fn draw(rng: &mut rand_chacha::ChaCha8Rng, z: &mut DVector<f64>) {
    for v in z.iter_mut() {
        *v = crate::gauss::mc_normal(rng);
    }
}

/// Monte-Carlo estimates of all cell measures from one sample stream.
pub fn pb_cell_measures(c: &PullbackCluster, spec: &McSpec) -> Result<Vec<Estimate>> {
    spec.validate()?;
    let q = c.q();
    let factor = covariance_factor(&c.gram());
    let lambda = c.lambda().clone();
    let sums = chunked_sum(spec, q, |rng, out| {
        let mut z = DVector::zeros(q);
        draw(rng, &mut z);
        let y = &factor * &z;
        out.fill(0.0);
        out[argmax_shifted(&y, &lambda)] = 1.0;
    });
    Ok((0..q).map(|i| sums.estimate(i)).collect())
}

/// Monte-Carlo estimate of the measure of cell `i`.
pub fn pb_cell_measure(c: &PullbackCluster, i: usize, spec: &McSpec) -> Result<Estimate> {
    if i >= c.q() {
        return Err(Error::InvalidDimension(format!("cell index {i} out of range")));
    }
    Ok(pb_cell_measures(c, spec)?[i])
}

/// Exact cell measures of an isotropic cluster (`B^T B = sigma^2 Id_E`):
/// the model measures `psi(lambda / sigma)`. `None` otherwise.
pub fn reduced_cell_measures(c: &PullbackCluster, quad: &QuadratureSpec) -> Result<Option<Vec<f64>>> {
    match c.model_shift() {
        Some(shift) => Ok(Some(model_cell_measures(&shift, quad)?)),
        None => Ok(None),
    }
}

/// Exact area table of an isotropic cluster, `A^m(lambda / sigma)`.
pub fn reduced_area_table(c: &PullbackCluster, quad: &QuadratureSpec) -> Result<Option<InterfaceAreaTable>> {
    match c.model_shift() {
        Some(shift) => Ok(Some(model_area_table(&shift, quad)?)),
        None => Ok(None),
    }
}

/// An interface area estimate; `empty` marks an infeasible constraint system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceArea {
    pub estimate: Estimate,
    pub empty: bool,
}

fn pair_stream(spec: &McSpec, q: usize, i: usize, j: usize) -> McSpec {
    spec.with_stream(
        spec.stream_id
            .wrapping_mul(1_000_003)
            .wrapping_add((1 + i * q + j) as u64),
    )
}

/// `phi(c_ij)` times the conditional probability of the remaining constraints
/// given `<n_ij, y> = c_ij`.
pub fn pb_interface_area(c: &PullbackCluster, i: usize, j: usize, spec: &McSpec) -> Result<InterfaceArea> {
    spec.validate()?;
    let q = c.q();
    if i >= q || j >= q || i == j {
        return Err(Error::Domain(format!("invalid interface ({i}, {j}) for q = {q}")));
    }
    let (i, j) = (i.min(j), i.max(j));
    if c.edge_norm(i, j) <= EDGE_NORM_TOL {
        return Err(Error::DegenerateCluster(format!(
            "interface ({i}, {j}) has a vanishing edge vector"
        )));
    }
    if !c.interface_is_nonempty(i, j) {
        return Ok(InterfaceArea {
            estimate: Estimate::exact(0.0),
            empty: true,
        });
    }
    let normal = c.normal(i, j)?;
    let offset = c.offset(i, j)?;
    let weight = density(offset);
    let others: Vec<usize> = (0..q).filter(|&k| k != i && k != j).collect();
    if others.is_empty() {
        return Ok(InterfaceArea {
            estimate: Estimate::exact(weight),
            empty: false,
        });
    }
    // (Y, s) with s = <n, y>: Cov(Y) = B^T B, Cov(Y, s) = B^T n, Var(s) = 1
    let cross = c.b().transpose() * &normal;
    let mean = &cross * offset;
    let cov = c.gram() - &cross * cross.transpose();
    let factor = covariance_factor(&cov);
    let lambda = c.lambda().clone();
    let sums = chunked_sum(&pair_stream(spec, q, i, j), 1, |rng, out| {
        let mut z = DVector::zeros(q);
        draw(rng, &mut z);
        let y = &mean + &factor * &z;
        let level = y[i] - lambda[i];
        let inside = others.iter().all(|&k| y[k] - lambda[k] < level);
        out[0] = if inside { 1.0 } else { 0.0 };
    });
    Ok(InterfaceArea {
        estimate: sums.estimate(0).scaled(weight),
        empty: false,
    })
}

/// Area table with per-pair standard errors.
#[derive(Debug, Clone)]
pub struct AreaEstimates {
    pub table: InterfaceAreaTable,
    pub std_err: DMatrix<f64>,
}

impl AreaEstimates {
    pub fn max_std_err(&self) -> f64 {
        self.std_err.amax()
    }
}

/// Every pair's area. Pairs with a vanishing edge vector get zero area.
pub fn pb_area_table(c: &PullbackCluster, spec: &McSpec) -> Result<AreaEstimates> {
    let q = c.q();
    let mut values = DMatrix::zeros(q, q);
    let mut errs = DMatrix::zeros(q, q);
    for i in 0..q {
        for j in (i + 1)..q {
            if c.edge_norm(i, j) <= EDGE_NORM_TOL {
                continue;
            }
            let a = pb_interface_area(c, i, j, spec)?.estimate;
            values[(i, j)] = a.value;
            values[(j, i)] = a.value;
            errs[(i, j)] = a.std_err;
            errs[(j, i)] = a.std_err;
        }
    }
    Ok(AreaEstimates {
        table: InterfaceAreaTable::new(values)?,
        std_err: errs,
    })
}

/// `sum_{i<j} A_ij` with the pair errors combined in quadrature.
pub fn pb_perimeter(c: &PullbackCluster, spec: &McSpec) -> Result<Estimate> {
    let areas = pb_area_table(c, spec)?;
    let var: f64 = areas
        .table
        .pairs()
        .map(|(i, j)| areas.std_err[(i, j)].powi(2))
        .sum();
    Ok(Estimate {
        value: areas.table.total(),
        std_err: var.sqrt(),
    })
}

/// Central difference of the cell measures under the translation `y -> y + t w`,
/// with common random numbers for the two translated clusters.
///
/// Translating by `t w` replaces `lambda` with `lambda + t B^T w`.
pub fn translation_response(c: &PullbackCluster, w: &DVector<f64>, t: f64, spec: &McSpec) -> Result<Vec<Estimate>> {
    spec.validate()?;
    if w.len() != c.n() {
        return Err(Error::InvalidDimension(format!(
            "translation has length {}, expected {}",
            w.len(),
            c.n()
        )));
    }
    let q = c.q();
    let factor = covariance_factor(&c.gram());
    let shift = c.b().transpose() * w * t;
    let plus = c.lambda() + &shift;
    let minus = c.lambda() - &shift;
    let sums = chunked_sum(spec, q, |rng, out| {
        let mut z = DVector::zeros(q);
        draw(rng, &mut z);
        let y = &factor * &z;
        out.fill(0.0);
        out[argmax_shifted(&y, &plus)] += 0.5 / t;
        out[argmax_shifted(&y, &minus)] -= 0.5 / t;
    });
    Ok((0..q).map(|i| sums.estimate(i)).collect())
}
