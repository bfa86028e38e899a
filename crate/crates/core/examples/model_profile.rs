//! The model isoperimetric profile `I_m(v)` with its gradient and Hessian.

use multibubble::gauss::{density, quantile};
use multibubble::profile::{model_profile, ProfileOptions};
use multibubble::MeasureVector;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let opts = ProfileOptions::default();

    // two cells: a half-space, whose boundary has weight phi(Phi^-1(v_1))
    for p in [0.1, 0.5, 0.7] {
        let v = MeasureVector::from_slice(&[p, 1.0 - p])?;
        let r = model_profile(&v, &opts)?;
        println!("q=2 v1={p}: I = {:.9}, closed form {:.9}", r.value, density(quantile(p)?));
    }

    for v in [vec![1.0 / 3.0; 3], vec![0.5, 0.3, 0.2], vec![0.25; 4]] {
        let v = MeasureVector::from_slice(&v)?;
        let r = model_profile(&v, &opts)?;
        println!("v = {:?}", v.as_slice());
        println!("  I_m(v)         = {:.9}", r.value);
        println!("  gradient       = {:?}", r.gradient.as_slice());
        println!("  hessian spectrum on E = {:?}", r.hessian.eigenvalues_on_e());
        println!("  |2I + tr H^-1| = {:.2e}", r.trace_residual);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
