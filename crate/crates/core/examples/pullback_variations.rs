//! Pull-back clusters `Omega_i = {y : i maximizes (B^T y - lambda)_i}` and
//! their first and second variation algebra.

use multibubble::gauss::FRAC_1_SQRT_2PI;
use multibubble::profile::{profile_value, psi, ProfileOptions};
use multibubble::pullback::{
    pb_area_table, pb_perimeter, q_inward, q_translation, variation_report, PullbackCluster,
};
use multibubble::{McSpec, QuadratureSpec, SimplexShift};
use nalgebra::{DMatrix, DVector};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let quad = QuadratureSpec::default();
    let spec = McSpec::new(100_000, 3);

    // a simplicial cluster: sqrt2 B is an isometry of E into R^2
    let lambda = SimplexShift::from_slice(&[0.2, -0.05, -0.15])?;
    let c = PullbackCluster::simplicial(2, &lambda)?;
    let p = pb_perimeter(&c, &spec)?;
    let v = psi(&lambda.scaled(2f64.sqrt()), &quad)?;
    let model = profile_value(&v, &ProfileOptions::default())?;
    println!("simplicial: perimeter {:.5} +- {:.1e}, model profile {model:.6}", p.value, p.std_err);

    let areas = pb_area_table(&c, &spec)?;
    let report = variation_report(&c, &areas.table)?;
    println!("  effective dimension {}, |cs gap| {:.1e}", report.effective_dimension, report.cs_gap_norm());
    println!("  stationarity residual {:.1e}", report.stationarity_residual().unwrap_or(f64::NAN));

    // stretching one direction breaks stationarity
    let stretch = DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 1.0]);
    let stretched = PullbackCluster::new(stretch * c.b(), c.lambda().clone())?;
    let areas = pb_area_table(&stretched, &spec)?;
    let report = variation_report(&stretched, &areas.table)?;
    println!("stretched: stationarity residual {:.3e}", report.stationarity_residual().unwrap_or(f64::NAN));

    // index forms at the planar barycenter
    let bary = PullbackCluster::simplicial(2, &SimplexShift::zeros(3)?)?;
    let areas = multibubble::InterfaceAreaTable::uniform(3, FRAC_1_SQRT_2PI * 0.5)?;
    let report = variation_report(&bary, &areas)?;
    let w = DVector::from_column_slice(&[0.6, 0.8]);
    println!("barycenter: Q(translation) = {:.7}", q_translation(&report, &w)?);
    let inward = q_inward(&areas, &DVector::from_column_slice(&[1.0, 0.0, 0.0]))?;
    println!("            Q(inward e_1) = {:.7}, delta V = {:?}", inward.q_value, inward.delta_v.as_slice());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
