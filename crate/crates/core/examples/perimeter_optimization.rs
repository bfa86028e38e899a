//! Minimizing Gaussian perimeter over all pull-back clusters in the plane with
//! three cells of prescribed measure, and comparing the result with the model
//! simplicial cluster.

use multibubble::homology::{build_complex, homology_ranks};
use multibubble::optimizer::{compare_to_model, minimize_perimeter, OptProblem};
use multibubble::{MeasureVector, QuadratureSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let v = MeasureVector::from_slice(&[0.5, 0.3, 0.2])?;
    let problem = OptProblem::new(3, 2, v)?.with_starts(3);
    let r = minimize_perimeter(&problem)?;
    println!("perimeter       {:.6}", r.perimeter);
    println!("I_m(v)          {:.6}", r.profile_value);
    println!("measure error   {:.1e}", r.measure_error);
    println!("isometry defect {:.2e}", r.isometry_defect);
    println!("MC check        {:.5} +- {:.1e}", r.mc_perimeter.value, r.mc_perimeter.std_err);

    let cmp = compare_to_model(&r, &QuadratureSpec::default())?;
    for a in &cmp.pairs {
        println!("  A_{}{}: {:.6} vs model {:.6}", a.i, a.j, a.area, a.model);
    }
    let s = build_complex(&r.cluster()?)?;
    println!("incidence complex Betti numbers {:?}", homology_ranks(&s));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
