//! The singular cones of the model clusters and cell membership of points.

use multibubble::simplex::{cone_frame, equidistant_points, model_cell_membership, ConeKind};
use multibubble::SimplexShift;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let y = cone_frame(ConeKind::Y);
    let t = cone_frame(ConeKind::T);
    println!("Y cone: angle defect vs 120 deg  {:.1e}", y.max_angle_defect(-0.5));
    println!("T cone: angle defect vs acos(-1/3) {:.1e}", t.max_angle_defect(-1.0 / 3.0));

    let points = equidistant_points(4, 3)?;
    for (i, p) in points.iter().enumerate() {
        println!("p_{i} = {:?}", p.as_slice());
    }
    let x = SimplexShift::from_slice(&[0.1, 0.0, -0.1])?;
    for z in [[1.0, -0.5, -0.5], [0.0, 0.05, -0.05]] {
        let z = SimplexShift::from_slice(&z)?;
        println!("z = {:?} -> {:?}", z.as_slice(), model_cell_membership(&z, &x)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
