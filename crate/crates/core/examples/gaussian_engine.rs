//! Cell measures and interface areas of the model simplicial cluster, by
//! adaptive quadrature and by Monte Carlo.

use multibubble::gauss::{
    mc_model_cell_measure, mc_model_interface_area, model_cell_measures, model_interface_area,
};
use multibubble::{McSpec, QuadratureSpec, SimplexShift};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let quad = QuadratureSpec::default();
    let x = SimplexShift::from_slice(&[0.4, -0.1, -0.3])?;
    let measures = model_cell_measures(&x, &quad)?;
    println!("shift x = {:?}", x.as_slice());
    for (i, m) in measures.iter().enumerate() {
        let mc = mc_model_cell_measure(&x, i, &McSpec::new(200_000, 7).with_stream(i as u64))?;
        println!("  cell {i}: quadrature {m:.9}  mc {:.5} +- {:.1e}", mc.value, mc.std_err);
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let a = model_interface_area(&x, i, j, &quad)?;
        let mc = mc_model_interface_area(&x, i, j, &McSpec::new(200_000, 7).with_stream(10 + i as u64))?;
        println!("  area {i}{j}: quadrature {a:.9}  mc {:.5} +- {:.1e}", mc.value, mc.std_err);
    }
    let total: f64 = measures.iter().sum();
    assert!((total - 1.0).abs() < 1e-10);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
