//! Linear algebra on the simplex tangent space `E^(q-1)`.
//!
//! Vectors of `E` are stored in ambient `R^q` coordinates with zero mean, and
//! every operator keeps the all-ones vector in its kernel explicitly.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the coordinate sum of a [`SimplexShift`].
pub const SHIFT_SUM_TOL: f64 = 1e-12;
/// Tolerance on the sum of a [`MeasureVector`].
pub const MEASURE_SUM_TOL: f64 = 1e-12;
/// Row-sum tolerance of an [`EOperator`].
pub const OPERATOR_ROW_SUM_TOL: f64 = 1e-10;
/// Ties in [`model_cell_membership`] are decided at this absolute tolerance.
pub const TIE_TOL: f64 = 1e-12;
/// Relative singular-value cutoff used for numerical rank decisions.
pub const RANK_RTOL: f64 = 1e-10;

fn check_q(q: usize) -> Result<()> {
    if q < 2 {
        return Err(Error::InvalidDimension(format!("q must be >= 2, got {q}")));
    }
    Ok(())
}

/// A point of `E^(q-1)`: a length-`q` vector with zero coordinate sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexShift {
    coords: DVector<f64>,
}

impl SimplexShift {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        check_q(coords.len())?;
        let sum = coords.sum();
        if !sum.is_finite() || sum.abs() > SHIFT_SUM_TOL {
            return Err(Error::Domain(format!(
                "shift coordinates must sum to zero (sum = {sum:e})"
            )));
        }
        Ok(Self { coords })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    pub fn zeros(q: usize) -> Result<Self> {
        check_q(q)?;
        Ok(Self {
            coords: DVector::zeros(q),
        })
    }

    pub fn q(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.coords
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coords: &self.coords * factor,
        }
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }
}

/// Orthogonal projection of `w` onto `E`: subtract the coordinate mean.
pub fn project_to_e(w: &DVector<f64>) -> Result<SimplexShift> {
    check_q(w.len())?;
    let mean = w.mean();
    let mut coords = w.map(|c| c - mean);
    // one compensated pass so the sum lands well inside SHIFT_SUM_TOL
    let residual = coords.sum() / coords.len() as f64;
    coords.add_scalar_mut(-residual);
    Ok(SimplexShift { coords })
}

/// A point of the probability simplex `Delta^(q-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureVector {
    values: DVector<f64>,
}

impl MeasureVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        check_q(values.len())?;
        if values
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0)
        {
            return Err(Error::Domain(format!(
                "measure entries must lie in [0, 1]: {:?}",
                values.as_slice()
            )));
        }
        let sum = values.sum();
        if (sum - 1.0).abs() > MEASURE_SUM_TOL {
            return Err(Error::Domain(format!(
                "measure entries must sum to 1 (sum = {sum})"
            )));
        }
        Ok(Self { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(values))
    }

    /// Wraps computed cell measures whose sum carries quadrature or sampling
    /// error; entries are clamped to `[0, 1]` but not renormalized.
    pub(crate) fn from_computed(values: DVector<f64>) -> Self {
        Self {
            values: values.map(|v| v.clamp(0.0, 1.0)),
        }
    }

    /// The barycenter `(1/q, ..., 1/q)`.
    pub fn uniform(q: usize) -> Result<Self> {
        check_q(q)?;
        Ok(Self {
            values: DVector::from_element(q, 1.0 / q as f64),
        })
    }

    /// Renormalizes `values` when their sum is within `tol` of one.
    pub fn renormalized(values: &[f64], tol: f64) -> Result<Self> {
        check_q(values.len())?;
        let sum: f64 = values.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > tol {
            return Err(Error::Domain(format!(
                "measure entries sum to {sum}, not within {tol:e} of 1"
            )));
        }
        let v = DVector::from_iterator(values.len(), values.iter().map(|x| x / sum));
        Self::new(v)
    }

    pub fn q(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn is_interior(&self) -> bool {
        self.values.iter().all(|v| *v > 0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }
}

/// Symmetric table of interface weights `A_ij` with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceAreaTable {
    areas: DMatrix<f64>,
}

impl InterfaceAreaTable {
    pub fn new(areas: DMatrix<f64>) -> Result<Self> {
        let q = areas.nrows();
        check_q(q)?;
        if areas.ncols() != q {
            return Err(Error::InvalidDimension("area table must be square".into()));
        }
        for i in 0..q {
            if areas[(i, i)] != 0.0 {
                return Err(Error::Domain(format!("A_{i}{i} must be zero")));
            }
            for j in 0..q {
                let a = areas[(i, j)];
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::Domain(format!("A_{i}{j} = {a} is not >= 0")));
                }
                if a != areas[(j, i)] {
                    return Err(Error::Domain(format!("area table not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { areas })
    }

    /// Builds a table from a function of unordered pairs `i < j`.
    pub fn from_pairs(q: usize, mut area: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_q(q)?;
        let mut m = DMatrix::zeros(q, q);
        for i in 0..q {
            for j in (i + 1)..q {
                let a = area(i, j);
                m[(i, j)] = a;
                m[(j, i)] = a;
            }
        }
        Self::new(m)
    }

    /// All pairs share the weight `a`.
    pub fn uniform(q: usize, a: f64) -> Result<Self> {
        Self::from_pairs(q, |_, _| a)
    }

    pub fn q(&self) -> usize {
        self.areas.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.areas[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.areas
    }

    /// `sum_{i<j} A_ij`, the weighted perimeter.
    pub fn total(&self) -> f64 {
        self.pairs().map(|(i, j)| self.areas[(i, j)]).sum()
    }

    /// Unordered pairs `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let q = self.q();
        (0..q).flat_map(move |i| ((i + 1)..q).map(move |j| (i, j)))
    }

    /// Pairs with `A_ij > 0`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.pairs().filter(|&(i, j)| self.areas[(i, j)] > 0.0).collect()
    }

    /// Whether the graph with edges `{A_ij > 0}` is connected.
    pub fn is_connected(&self) -> bool {
        let q = self.q();
        let mut seen = vec![false; q];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..q {
                if !seen[j] && self.areas[(i, j)] > 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// A symmetric `q x q` matrix acting on `E`, with the ones vector in its kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct EOperator {
    matrix: DMatrix<f64>,
}

impl EOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let q = matrix.nrows();
        check_q(q)?;
        if matrix.ncols() != q {
            return Err(Error::InvalidDimension("operator must be square".into()));
        }
        let scale = matrix.amax().max(1.0);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > OPERATOR_ROW_SUM_TOL * scale {
            return Err(Error::Domain(format!("operator not symmetric ({asym:e})")));
        }
        let row_sum = matrix.column_sum().amax();
        if row_sum > OPERATOR_ROW_SUM_TOL * scale {
            return Err(Error::Domain(format!(
                "ones vector not in kernel (row sum {row_sum:e})"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn q(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * factor,
        }
    }

    pub fn apply(&self, a: &DVector<f64>) -> DVector<f64> {
        &self.matrix * a
    }

    pub fn quadratic_form(&self, a: &DVector<f64>) -> f64 {
        a.dot(&(&self.matrix * a))
    }

    /// Trace of the restriction to `E`. The ones direction contributes zero.
    pub fn trace_on_e(&self) -> f64 {
        self.matrix.trace()
    }

    /// Eigenvalues of the restriction to `E`, ascending.
    pub fn eigenvalues_on_e(&self) -> Vec<f64> {
        let basis = e_basis(self.q());
        let restricted = basis.transpose() * &self.matrix * &basis;
        let mut ev: Vec<f64> = SymmetricEigen::new(restricted).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Operator norm of the restriction to `E`.
    pub fn norm_on_e(&self) -> f64 {
        self.eigenvalues_on_e()
            .into_iter()
            .fold(0.0, |m, e| m.max(e.abs()))
    }
}

/// `L_A = sum_{i<j} A_ij (e_i - e_j)(e_i - e_j)^T`.
pub fn build_la(areas: &InterfaceAreaTable) -> EOperator {
    let q = areas.q();
    let mut m = DMatrix::zeros(q, q);
    for (i, j) in areas.pairs() {
        let a = areas.get(i, j);
        m[(i, i)] += a;
        m[(j, j)] += a;
        m[(i, j)] -= a;
        m[(j, i)] -= a;
    }
    EOperator { matrix: m }
}

/// Moore-Penrose inverse of an [`EOperator`] together with its rank on `E`.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub operator: EOperator,
    pub rank: usize,
    /// `true` when the rank on `E` is below `q - 1`.
    pub degenerate: bool,
}

pub fn pinv_on_e(op: &EOperator) -> PseudoInverse {
    let q = op.q();
    let eig = SymmetricEigen::new(op.matrix.clone());
    let largest = eig.eigenvalues.amax();
    let cutoff = RANK_RTOL * largest;
    let mut inv = DMatrix::zeros(q, q);
    let mut rank = 0;
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        if largest > 0.0 && ev.abs() > cutoff {
            let u = eig.eigenvectors.column(k);
            inv += (u * u.transpose()) / ev;
            rank += 1;
        }
    }
    // the ones direction never survives the cutoff, but scrub round-off
    let p = projector(q);
    let inv = &p * inv * &p;
    let inv = (&inv + inv.transpose()) * 0.5;
    PseudoInverse {
        operator: EOperator { matrix: inv },
        rank,
        degenerate: rank < q - 1,
    }
}

/// The orthogonal projector `Id - ones ones^T / q` onto `E`.
pub fn projector(q: usize) -> DMatrix<f64> {
    DMatrix::identity(q, q) - DMatrix::from_element(q, q, 1.0 / q as f64)
}

/// Orthonormal (Helmert) basis of `E` as the columns of a `q x (q-1)` matrix.
pub(crate) fn e_basis(q: usize) -> DMatrix<f64> {
    let mut u = DMatrix::zeros(q, q - 1);
    for k in 1..q {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            u[(i, k - 1)] = 1.0 / norm;
        }
        u[(k, k - 1)] = -(k as f64) / norm;
    }
    u
}

/// `q` points in `R^n`, centered at the origin, with pairwise distances `sqrt(2)`.
///
/// Point `i` is the image of `e_i - ones/q` under an isometric embedding of
/// `E` into the first `q - 1` coordinates of `R^n`.
pub fn equidistant_points(q: usize, n: usize) -> Result<Vec<DVector<f64>>> {
    check_q(q)?;
    if n + 1 < q {
        return Err(Error::InvalidDimension(format!(
            "need n >= q - 1 for {q} equidistant points, got n = {n}"
        )));
    }
    let basis = e_basis(q);
    Ok((0..q)
        .map(|i| {
            let mut p = DVector::zeros(n);
            for k in 0..q - 1 {
                p[k] = basis[(i, k)];
            }
            p
        })
        .collect())
}

/// Which model singular cone to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeKind {
    /// Three half-lines at 120 degrees.
    Y,
    /// Four half-lines meeting at `arccos(-1/3)`.
    T,
}

/// Unit directions of a model cone, in `E` coordinates, with their Gram matrix.
#[derive(Debug, Clone)]
pub struct ConeFrame {
    pub kind: ConeKind,
    pub directions: Vec<DVector<f64>>,
    pub inner_products: DMatrix<f64>,
}

impl ConeFrame {
    /// Largest deviation of an off-diagonal inner product from `target`.
    pub fn max_angle_defect(&self, target: f64) -> f64 {
        let k = self.directions.len();
        let mut worst: f64 = 0.0;
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    worst = worst.max((self.inner_products[(a, b)] - target).abs());
                }
            }
        }
        worst
    }
}

/// Directions of `Y` (in `E^(2)`) or `T` (in `E^(3)`): normalized projections of `e_i`.
pub fn cone_frame(kind: ConeKind) -> ConeFrame {
    let q = match kind {
        ConeKind::Y => 3,
        ConeKind::T => 4,
    };
    let directions: Vec<DVector<f64>> = (0..q)
        .map(|i| {
            let mut e = DVector::from_element(q, -1.0);
            e[i] = (q - 1) as f64;
            e.normalize()
        })
        .collect();
    let inner_products = DMatrix::from_fn(q, q, |a, b| directions[a].dot(&directions[b]));
    ConeFrame {
        kind,
        directions,
        inner_products,
    }
}

/// Result of locating a point among the cells of a shifted model cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Membership {
    Cell(usize),
    /// The maximum is attained (within [`TIE_TOL`]) at all listed indices.
    Boundary(Vec<usize>),
}

/// Locates `z` in the model cluster `x + Omega^m`: the argmax of `z_i - x_i`.
pub fn model_cell_membership(z: &SimplexShift, x: &SimplexShift) -> Result<Membership> {
    if z.q() != x.q() {
        return Err(Error::InvalidDimension(format!(
            "point has q = {}, shift has q = {}",
            z.q(),
            x.q()
        )));
    }
    let diff = z.coords() - x.coords();
    let best = diff.max();
    let tied: Vec<usize> = (0..diff.len())
        .filter(|&i| best - diff[i] <= TIE_TOL)
        .collect();
    Ok(if tied.len() == 1 {
        Membership::Cell(tied[0])
    } else {
        Membership::Boundary(tied)
    })
}
