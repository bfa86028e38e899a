//! Inverting the measure map with damped Newton steps, and the derivative
//! `D psi = -L / sqrt 2` checked by finite differences.

use multibubble::profile::{dpsi, invert_psi, psi, ProfileOptions};
use multibubble::{MeasureVector, SimplexShift};
use nalgebra::DVector;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let opts = ProfileOptions::default();
    let v = MeasureVector::from_slice(&[0.05, 0.15, 0.3, 0.5])?;
    let inv = invert_psi(&v, &opts)?;
    let back = psi(&inv.x, &opts.quad)?;
    println!("v         = {:?}", v.as_slice());
    println!("psi^-1(v) = {:?}", inv.x.as_slice());
    println!("iterations {}, round trip error {:.2e}", inv.iterations, (back.values() - v.values()).amax());

    let u = DVector::from_column_slice(&[1.0, -1.0, 0.0, 0.0]) / 2f64.sqrt();
    let h = 1e-5;
    let plus = psi(&SimplexShift::new(inv.x.coords() + &u * h)?, &opts.quad)?;
    let minus = psi(&SimplexShift::new(inv.x.coords() - &u * h)?, &opts.quad)?;
    let fd = (plus.values() - minus.values()) / (2.0 * h);
    let exact = dpsi(&inv.x, &opts.quad)?.apply(&u);
    println!("D psi u: analytic {:?}", exact.as_slice());
    println!("         max FD gap {:.2e}", (fd - exact).amax());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
