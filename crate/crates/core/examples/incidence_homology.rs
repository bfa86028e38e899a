//! Incidence complexes of clusters, their Betti numbers, and recovering the
//! linear map `B` from the interface normals.

use multibubble::homology::{
    build_complex, homology_ranks, recover_b, EdgeNormalAssignment, IncidenceComplex,
};
use multibubble::pullback::PullbackCluster;
use multibubble::SimplexShift;
use nalgebra::{DMatrix, DVector};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let c = PullbackCluster::simplicial(3, &SimplexShift::from_slice(&[0.3, 0.0, -0.1, -0.2])?)?;
    let s = build_complex(&c)?;
    println!("simplicial q=4: {} vertices, {} edges, {} triangles, {:?}",
        s.vertices().len(), s.edges().len(), s.triangles().len(), homology_ranks(&s));

    let normals = EdgeNormalAssignment::from_cluster(&c, s.edges())?;
    let rec = recover_b(&s, &normals)?;
    println!("recovered B, residual {:.1e}, max |B - B_true| {:.1e}", rec.residual, (&rec.b - c.b()).amax());

    // a three-cell cluster that is a product with a line
    let b = DMatrix::from_row_slice(3, 3, &[0.5, -0.5, 0.0, 0.0, 0.5, -0.5, 0.0, 0.0, 0.0]);
    let product = PullbackCluster::new(b, DVector::zeros(3))?;
    let s = build_complex(&product)?;
    println!("product cluster: triangles {:?}", s.triangles());

    let circle = IncidenceComplex::from_json_str(r#"{"q": 3, "edges": [[0,1],[1,2],[0,2]], "triangles": []}"#)?;
    println!("hollow triangle: {:?}", homology_ranks(&circle));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
