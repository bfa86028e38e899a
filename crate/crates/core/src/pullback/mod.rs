//! Flat polyhedral clusters pulled back from a model cluster.
//!
//! A [`PullbackCluster`] is given by a linear map `B: E -> R^n` (stored as an
//! `n x q` matrix with `B 1 = 0`) and an offset `lambda` in `E`. Its cells are
//!
//! ```text
//! Omega_i = { y in R^n : <e_j - e_i, B^T y - lambda> < 0 for all j != i },
//! ```
//!
//! so `y` lies in cell `i` when `i` maximizes `(B^T y)_j - lambda_j`. The
//! interface `Sigma_ij` sits in the hyperplane `<n_ij, y> = c_ij` with
//! `n_ij = B(e_j - e_i) / |B(e_j - e_i)|` pointing from `Omega_i` into
//! `Omega_j` and `c_ij = (lambda_j - lambda_i) / |B(e_j - e_i)|`.

mod directional;
mod sampling;
mod variation;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lp::PolySystem;
use crate::simplex::{equidistant_points, projector, SimplexShift, RANK_RTOL};

pub use directional::{line_mass, DirectionSet, SmoothEstimator, SmoothEvaluation};
pub use sampling::{
    pb_area_table, pb_cell_measure, pb_cell_measures, pb_interface_area, pb_perimeter,
    reduced_area_table, reduced_cell_measures, translation_response, AreaEstimates, InterfaceArea,
};
pub use variation::{
    q_inward, q_translation, stationarity_residual, variation_from_normals, variation_report,
    InwardVariation, Stationarity, VariationReport,
};

/// Edge vectors shorter than this make an interface degenerate.
pub const EDGE_NORM_TOL: f64 = 1e-12;
/// Margin required of the strict inequalities in emptiness tests.
pub const LP_SLACK: f64 = 1e-9;
/// Tolerance of the isotropy test `B^T B = sigma^2 Id_E`.
pub const ISOTROPY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackCluster {
    b: DMatrix<f64>,
    lambda: DVector<f64>,
}

impl PullbackCluster {
    /// Validates `B 1 = 0` and `rank B >= 1`, then fixes the gauge `sum lambda = 0`.
    pub fn new(b: DMatrix<f64>, lambda: DVector<f64>) -> Result<Self> {
        let q = b.ncols();
        if q < 2 || b.nrows() == 0 {
            return Err(Error::InvalidDimension(format!(
                "B must be n x q with n >= 1 and q >= 2, got {} x {q}",
                b.nrows()
            )));
        }
        if lambda.len() != q {
            return Err(Error::InvalidDimension(format!(
                "lambda has length {}, expected {q}",
                lambda.len()
            )));
        }
        if b.iter().chain(lambda.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("cluster parameters must be finite".into()));
        }
        let scale = b.amax().max(1.0);
        let kernel_defect = b.column_sum().amax();
        if kernel_defect > 1e-10 * scale {
            return Err(Error::Domain(format!(
                "B must annihilate the ones vector (|B 1| = {kernel_defect:e})"
            )));
        }
        let b = &b * projector(q);
        if b.amax() <= EDGE_NORM_TOL {
            return Err(Error::DegenerateCluster("rank(B) = 0".into()));
        }
        let mean = lambda.mean();
        let lambda = lambda.add_scalar(-mean);
        Ok(Self { b, lambda })
    }

    /// Projects an arbitrary `n x q` matrix and offset onto the admissible set.
    pub fn projected(b: &DMatrix<f64>, lambda: &DVector<f64>) -> Result<Self> {
        Self::new(b * projector(b.ncols()), lambda.clone())
    }

    /// The simplicial cluster: `sqrt(2) B` maps `E` isometrically onto the span
    /// of `q` equidistant points in `R^n`.
    pub fn simplicial(n: usize, lambda: &SimplexShift) -> Result<Self> {
        let q = lambda.q();
        let points = equidistant_points(q, n)?;
        let b = DMatrix::from_fn(n, q, |r, c| points[c][r] * std::f64::consts::FRAC_1_SQRT_2);
        Self::new(b, lambda.coords().clone())
    }

    pub fn q(&self) -> usize {
        self.b.ncols()
    }

    pub fn n(&self) -> usize {
        self.b.nrows()
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }

    /// `B(e_j - e_i)`.
    pub fn edge(&self, i: usize, j: usize) -> DVector<f64> {
        self.b.column(j) - self.b.column(i)
    }

    pub fn edge_norm(&self, i: usize, j: usize) -> f64 {
        self.edge(i, j).norm()
    }

    /// Unit normal `n_ij` pointing from cell `i` into cell `j`.
    pub fn normal(&self, i: usize, j: usize) -> Result<DVector<f64>> {
        let e = self.edge(i, j);
        let norm = e.norm();
        if norm <= EDGE_NORM_TOL {
            return Err(Error::DegenerateCluster(format!(
                "|B(e_{j} - e_{i})| = {norm:e} vanishes"
            )));
        }
        Ok(e / norm)
    }

    /// Offset `c_ij` of the hyperplane `<n_ij, y> = c_ij`.
    pub fn offset(&self, i: usize, j: usize) -> Result<f64> {
        let norm = self.edge_norm(i, j);
        if norm <= EDGE_NORM_TOL {
            return Err(Error::DegenerateCluster(format!(
                "|B(e_{j} - e_{i})| = {norm:e} vanishes"
            )));
        }
        Ok((self.lambda[j] - self.lambda[i]) / norm)
    }

    /// `B^T B`, the covariance of `B^T y` for standard Gaussian `y`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.b.transpose() * &self.b
    }

    /// Numerical rank of `B`.
    pub fn rank(&self) -> usize {
        let sv = self.b.singular_values();
        let largest = sv.amax();
        sv.iter().filter(|s| **s > RANK_RTOL * largest).count()
    }

    /// `sigma` when `B^T B = sigma^2 Id_E` within [`ISOTROPY_TOL`].
    pub fn isotropic_scale(&self) -> Option<f64> {
        let q = self.q();
        let gram = self.gram();
        let sigma2 = gram.trace() / (q - 1) as f64;
        let defect = (gram - projector(q) * sigma2).amax();
        (sigma2 > 0.0 && defect <= ISOTROPY_TOL).then(|| sigma2.sqrt())
    }

    /// The model shift `lambda / sigma` of an isotropic cluster: its cells and
    /// interfaces have the measures of the model cluster at that shift.
    pub fn model_shift(&self) -> Option<SimplexShift> {
        let sigma = self.isotropic_scale()?;
        SimplexShift::new(&self.lambda / sigma).ok()
    }

    /// `|2 B^T B - Id_E|` in operator norm on `E`.
    pub fn isometry_defect(&self) -> f64 {
        let q = self.q();
        let m = self.gram() * 2.0 - projector(q);
        SymmetricEigen::new((&m + m.transpose()) * 0.5)
            .eigenvalues
            .amax()
    }

    /// Rescales `(B, lambda)` so that `tr(B^T B) = (q - 1)/2`; the cells do not change.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.gram().trace();
        if tr <= 0.0 {
            return Err(Error::DegenerateCluster("rank(B) = 0".into()));
        }
        let s = (0.5 * (self.q() - 1) as f64 / tr).sqrt();
        Self::new(&self.b * s, &self.lambda * s)
    }

    /// Row `B(e_k - e_i)` and bound `lambda_k - lambda_i` of the constraint
    /// "cell `i` beats cell `k`".
    fn row(&self, i: usize, k: usize) -> (DVector<f64>, f64) {
        (self.edge(i, k), self.lambda[k] - self.lambda[i])
    }

    fn system(&self, anchor: usize, tied: &[usize]) -> PolySystem {
        let mut sys = PolySystem::default();
        for k in 0..self.q() {
            if k == anchor {
                continue;
            }
            let row = self.row(anchor, k);
            if tied.contains(&k) {
                sys.equalities.push(row);
            } else {
                sys.strict.push(row);
            }
        }
        sys
    }

    /// Whether cell `i` has nonempty interior.
    pub fn cell_is_nonempty(&self, i: usize) -> bool {
        self.system(i, &[]).is_strictly_feasible(LP_SLACK)
    }

    /// Whether `Sigma_ij` has nonempty relative interior.
    pub fn interface_is_nonempty(&self, i: usize, j: usize) -> bool {
        i != j && self.edge_norm(i, j) > EDGE_NORM_TOL && self.system(i, &[j]).is_strictly_feasible(LP_SLACK)
    }

    /// Whether the triple junction `Sigma_ijk` is nonempty with codimension two.
    pub fn junction_is_nonempty(&self, i: usize, j: usize, k: usize) -> bool {
        if i == j || j == k || i == k {
            return false;
        }
        let (a, b) = (self.edge(i, j), self.edge(i, k));
        // the two hyperplanes must be transversal
        let cross = a.norm_squared() * b.norm_squared() - a.dot(&b).powi(2);
        if cross <= 1e-12 * a.norm_squared().max(1.0) * b.norm_squared().max(1.0) {
            return false;
        }
        self.system(i, &[j, k]).is_strictly_feasible(LP_SLACK)
    }

    /// Interfaces `i < j` with nonempty relative interior.
    pub fn nonempty_interfaces(&self) -> Vec<(usize, usize)> {
        let q = self.q();
        (0..q)
            .flat_map(|i| ((i + 1)..q).map(move |j| (i, j)))
            .filter(|&(i, j)| self.interface_is_nonempty(i, j))
            .collect()
    }

    /// Cell containing `y`, or `None` on a tie.
    pub fn locate(&self, y: &DVector<f64>) -> Option<usize> {
        let scores = self.b.transpose() * y - &self.lambda;
        let best = scores.imax();
        let ties = scores.iter().filter(|s| **s == scores[best]).count();
        (ties == 1).then_some(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplicial_geometry() {
        let c = PullbackCluster::simplicial(3, &SimplexShift::zeros(3).unwrap()).unwrap();
        assert!((c.gram() - projector(3) * 0.5).amax() < 1e-15);
        assert!(c.isometry_defect() < 1e-15);
        let sigma = c.isotropic_scale().unwrap();
        assert!((sigma - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!((c.edge_norm(i, j) - 1.0).abs() < 1e-15);
                    let nij = c.normal(i, j).unwrap();
                    let nji = c.normal(j, i).unwrap();
                    assert!((nij + nji).norm() < 1e-15);
                    assert!(c.interface_is_nonempty(i, j));
                }
            }
            assert!(c.cell_is_nonempty(i));
        }
        assert!(c.junction_is_nonempty(0, 1, 2));
        assert_eq!(c.rank(), 2);
    }

    #[test]
    fn cells_follow_argmax() {
        let lambda = SimplexShift::from_slice(&[0.2, -0.1, -0.1]).unwrap();
        let c = PullbackCluster::simplicial(2, &lambda).unwrap();
        for (y, expect) in [([3.0, 0.0], 0usize), ([-2.0, 2.0], 1), ([-2.0, -2.0], 2)] {
            let y = DVector::from_column_slice(&y);
            let cell = c.locate(&y).unwrap();
            assert_eq!(cell, expect);
            // the located cell satisfies its defining inequalities
            for j in 0..3 {
                if j != cell {
                    let (row, bound) = c.row(cell, j);
                    assert!(row.dot(&y) < bound);
                }
            }
        }
    }

    #[test]
    fn offsets_define_interfaces() {
        let lambda = SimplexShift::from_slice(&[0.3, -0.5, 0.2]).unwrap();
        let c = PullbackCluster::simplicial(2, &lambda).unwrap();
        let (i, j) = (0, 1);
        let n = c.normal(i, j).unwrap();
        let y = &n * c.offset(i, j).unwrap();
        let scores = c.b().transpose() * &y - c.lambda();
        assert!((scores[i] - scores[j]).abs() < 1e-14);
    }

    #[test]
    fn validation() {
        let bad = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert!(PullbackCluster::new(bad, DVector::zeros(2)).is_err());
        let zero = DMatrix::zeros(2, 3);
        assert!(matches!(
            PullbackCluster::new(zero, DVector::zeros(3)),
            Err(Error::DegenerateCluster(_))
        ));
        // collapsing two cells: B(e_2 - e_1) = 0
        let b = DMatrix::from_row_slice(1, 3, &[0.5, 0.5, -1.0]);
        let c = PullbackCluster::new(b, DVector::zeros(3)).unwrap();
        assert!(matches!(c.normal(0, 1), Err(Error::DegenerateCluster(_))));
        assert!(!c.interface_is_nonempty(0, 1));
    }

    #[test]
    fn normalization_preserves_cells() {
        let b = DMatrix::from_row_slice(2, 3, &[1.0, -0.3, -0.7, 0.2, 0.9, -1.1]);
        let c = PullbackCluster::new(b, DVector::from_column_slice(&[0.1, 0.4, -0.5])).unwrap();
        let nc = c.normalized().unwrap();
        assert!((nc.gram().trace() - 1.0).abs() < 1e-14);
        for y in [[0.3, -0.2], [-1.0, 0.5], [2.0, 2.0]] {
            let y = DVector::from_column_slice(&y);
            assert_eq!(c.locate(&y), nc.locate(&y));
        }
    }

    #[test]
    fn lambda_gauge() {
        let b = DMatrix::from_row_slice(1, 2, &[0.5, -0.5]);
        let c = PullbackCluster::new(b, DVector::from_column_slice(&[1.0, 2.0])).unwrap();
        assert_eq!(c.lambda().as_slice(), &[-0.5, 0.5]);
    }
}
