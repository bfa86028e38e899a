//! First and second variation data of flat clusters.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::homology::EdgeNormalAssignment;
use crate::pullback::{PullbackCluster, EDGE_NORM_TOL};
use crate::simplex::{build_la, pinv_on_e, EOperator, InterfaceAreaTable, SimplexShift};

/// Relative singular value cutoff used for the rank of `M`.
const M_RANK_RTOL: f64 = 1e-8;

/// Least-squares fit of the Lagrange multipliers to the mean curvatures.
#[derive(Debug, Clone)]
pub struct Stationarity {
    /// `sqrt(sum (H_ij - (fit_i - fit_j))^2)` over the edges used.
    pub residual: f64,
    pub lambda_fit: SimplexShift,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct VariationReport {
    pub areas: InterfaceAreaTable,
    pub l: EOperator,
    /// `q x n`, `sum A_ij (e_i - e_j) n_ij^T`.
    pub m: DMatrix<f64>,
    /// `n x n`, `sum A_ij n_ij n_ij^T`.
    pub n: DMatrix<f64>,
    /// `N - M^T L^+ M`.
    pub cs_gap: DMatrix<f64>,
    pub effective_dimension: usize,
    /// Present when the report was built from a cluster.
    pub stationarity: Option<Stationarity>,
}

fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues
}

impl VariationReport {
    pub fn n_min_eigenvalue(&self) -> f64 {
        sym_eigenvalues(&self.n).min()
    }

    pub fn cs_gap_min_eigenvalue(&self) -> f64 {
        sym_eigenvalues(&self.cs_gap).min()
    }

    /// Operator norm of the Cauchy-Schwarz gap.
    pub fn cs_gap_norm(&self) -> f64 {
        sym_eigenvalues(&self.cs_gap).amax()
    }

    /// First variation `M w` of the measure vector under the translation by `w`.
    pub fn translation_first_variation(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.m * w
    }

    pub fn stationarity_residual(&self) -> Option<f64> {
        self.stationarity.as_ref().map(|s| s.residual)
    }
}

fn assemble(areas: &InterfaceAreaTable, dim: usize, normals: &[((usize, usize), DVector<f64>)]) -> VariationReport {
    let q = areas.q();
    let mut m = DMatrix::zeros(q, dim);
    let mut n = DMatrix::zeros(dim, dim);
    for ((i, j), nij) in normals {
        let a = areas.get(*i, *j);
        for c in 0..dim {
            m[(*i, c)] += a * nij[c];
            m[(*j, c)] -= a * nij[c];
        }
        n += nij * nij.transpose() * a;
    }
    let l = build_la(areas);
    let pinv = pinv_on_e(&l);
    let gap = &n - m.transpose() * pinv.operator.matrix() * &m;
    let cs_gap = (&gap + gap.transpose()) * 0.5;
    let sv = m.singular_values();
    let largest = sv.amax();
    let effective_dimension = sv.iter().filter(|s| largest > 0.0 && **s > M_RANK_RTOL * largest).count();
    VariationReport {
        areas: areas.clone(),
        l,
        m,
        n,
        cs_gap,
        effective_dimension,
        stationarity: None,
    }
}

/// Variation matrices of a cluster with the given interface areas. Normals are
/// taken from `B` on every pair with positive area.
pub fn variation_report(c: &PullbackCluster, areas: &InterfaceAreaTable) -> Result<VariationReport> {
    if areas.q() != c.q() {
        return Err(Error::InvalidDimension(format!(
            "area table for q = {}, cluster has q = {}",
            areas.q(),
            c.q()
        )));
    }
    let mut normals = Vec::new();
    for (i, j) in areas.pairs() {
        if areas.get(i, j) > 0.0 && c.edge_norm(i, j) > EDGE_NORM_TOL {
            normals.push(((i, j), c.normal(i, j)?));
        }
    }
    let mut report = assemble(areas, c.n(), &normals);
    report.stationarity = stationarity_residual(c).ok();
    Ok(report)
}

/// Variation matrices from an abstract assignment of unit normals to edges.
pub fn variation_from_normals(areas: &InterfaceAreaTable, normals: &EdgeNormalAssignment) -> Result<VariationReport> {
    if areas.q() != normals.q() {
        return Err(Error::InvalidDimension(format!(
            "area table for q = {}, normals for q = {}",
            areas.q(),
            normals.q()
        )));
    }
    let mut list = Vec::new();
    for (i, j) in areas.pairs() {
        if areas.get(i, j) > 0.0 {
            let nij = normals.get(i, j).ok_or_else(|| {
                Error::InvalidDimension(format!("no normal assigned to edge ({i}, {j}) of positive area"))
            })?;
            list.push(((i, j), nij));
        }
    }
    Ok(assemble(areas, normals.n(), &list))
}

/// Fits `lambda'` to `H_ij = -c_ij` on the nonempty interfaces.
pub fn stationarity_residual(c: &PullbackCluster) -> Result<Stationarity> {
    let edges = c.nonempty_interfaces();
    if edges.is_empty() {
        return Err(Error::DegenerateCluster("no nonempty interface".into()));
    }
    let q = c.q();
    let mut rhs = DVector::zeros(q);
    let mut h = Vec::with_capacity(edges.len());
    for &(i, j) in &edges {
        let hij = -c.offset(i, j)?;
        rhs[i] += hij;
        rhs[j] -= hij;
        h.push(hij);
    }
    let unit = InterfaceAreaTable::from_pairs(q, |i, j| if edges.contains(&(i, j)) { 1.0 } else { 0.0 })?;
    let fit = pinv_on_e(&build_la(&unit)).operator.apply(&rhs);
    let residual = edges
        .iter()
        .zip(&h)
        .map(|(&(i, j), hij)| (hij - (fit[i] - fit[j])).powi(2))
        .sum::<f64>()
        .sqrt();
    let mean = fit.mean();
    Ok(Stationarity {
        residual,
        lambda_fit: SimplexShift::new(fit.add_scalar(-mean))?,
        edges,
    })
}

/// `Q(w) = -w^T N w` for the translation field `w`.
pub fn q_translation(report: &VariationReport, w: &DVector<f64>) -> Result<f64> {
    if w.len() != report.n.nrows() {
        return Err(Error::InvalidDimension(format!(
            "w has length {}, expected {}",
            w.len(),
            report.n.nrows()
        )));
    }
    Ok(-(w.transpose() * &report.n * w)[(0, 0)])
}

#[derive(Debug, Clone)]
pub struct InwardVariation {
    pub q_value: f64,
    pub delta_v: DVector<f64>,
}

/// Index form of the inward field with coefficient vector `a`.
pub fn q_inward(areas: &InterfaceAreaTable, a: &DVector<f64>) -> Result<InwardVariation> {
    if a.len() != areas.q() {
        return Err(Error::InvalidDimension(format!(
            "a has length {}, expected {}",
            a.len(),
            areas.q()
        )));
    }
    let l = build_la(areas);
    Ok(InwardVariation {
        q_value: -l.quadratic_form(a),
        delta_v: -l.apply(a),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::{model_area_table, QuadratureSpec, FRAC_1_SQRT_2PI};
    use crate::profile::{model_profile, psi, ProfileOptions};
    use crate::pullback::reduced_area_table;

    fn simplicial(n: usize, lambda: &[f64]) -> PullbackCluster {
        PullbackCluster::simplicial(n, &SimplexShift::from_slice(lambda).unwrap()).unwrap()
    }

    #[test]
    fn simplicial_cs_gap_vanishes() {
        let quad = QuadratureSpec::default();
        for (n, lambda) in [
            (2, vec![0.0, 0.0, 0.0]),
            (2, vec![0.3, -0.1, -0.2]),
            (3, vec![0.1, 0.2, -0.05, -0.25]),
            (4, vec![0.1, 0.2, -0.05, -0.25]),
        ] {
            let c = simplicial(n, &lambda);
            let areas = reduced_area_table(&c, &quad).unwrap().unwrap();
            let r = variation_report(&c, &areas).unwrap();
            assert!(r.cs_gap_norm() <= 1e-8, "{}", r.cs_gap_norm());
            assert_eq!(r.effective_dimension, lambda.len() - 1);
            assert!(r.stationarity.unwrap().residual <= 1e-10);
            assert!(r.m.row_sum().amax() < 1e-14);
        }
    }

    #[test]
    fn planar_translation_form() {
        let c = simplicial(2, &[0.0, 0.0, 0.0]);
        let areas = InterfaceAreaTable::uniform(3, FRAC_1_SQRT_2PI * 0.5).unwrap();
        let r = variation_report(&c, &areas).unwrap();
        for angle in [0.0f64, 0.4, 2.0] {
            let w = DVector::from_column_slice(&[angle.cos(), angle.sin()]);
            let value = q_translation(&r, &w).unwrap();
            assert!((value + 1.5 * FRAC_1_SQRT_2PI * 0.5).abs() < 1e-12);
        }
        assert_eq!(q_translation(&r, &DVector::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn q_equals_two_is_rank_one() {
        let c = simplicial(3, &[0.2, -0.2]);
        let areas = reduced_area_table(&c, &QuadratureSpec::default()).unwrap().unwrap();
        let r = variation_report(&c, &areas).unwrap();
        assert_eq!(r.effective_dimension, 1);
        assert!(r.cs_gap_norm() < 1e-12);
        let rank_n = sym_eigenvalues(&r.n).iter().filter(|e| e.abs() > 1e-12).count();
        assert_eq!(rank_n, 1);
        // a direction orthogonal to the single normal
        let w = DVector::from_column_slice(&[0.0, 0.0, 1.0]);
        assert!(q_translation(&r, &w).unwrap().abs() < 1e-15);
    }

    #[test]
    fn product_cluster_has_deficient_rank() {
        let b = DMatrix::from_row_slice(3, 3, &[
            0.5, -0.5, 0.0,
            0.0, 0.5, -0.5,
            0.0, 0.0, 0.0,
        ]);
        let c = PullbackCluster::new(b, DVector::zeros(3)).unwrap();
        let areas = InterfaceAreaTable::uniform(3, 0.2).unwrap();
        let r = variation_report(&c, &areas).unwrap();
        assert_eq!(r.effective_dimension, 2);
        let e3 = DVector::from_column_slice(&[0.0, 0.0, 1.0]);
        assert!((&r.m * e3).amax() < 1e-15);
    }

    #[test]
    fn perturbed_normals_give_positive_gap() {
        let areas = InterfaceAreaTable::from_pairs(4, |i, j| 0.1 + 0.02 * (i + 2 * j) as f64).unwrap();
        let angles = [0.1, 0.9, 1.7, 2.8, 3.9, 5.1];
        let mut entries = Vec::new();
        for (k, (i, j)) in areas.pairs().enumerate() {
            let t: f64 = angles[k];
            entries.push(((i, j), DVector::from_column_slice(&[t.cos(), t.sin()])));
        }
        let normals = EdgeNormalAssignment::new(4, 2, entries).unwrap();
        let r = variation_from_normals(&areas, &normals).unwrap();
        assert!(r.cs_gap_min_eigenvalue() > 1e-6, "{}", r.cs_gap_min_eigenvalue());
    }

    #[test]
    fn stretched_cluster_is_not_stationary() {
        let base = simplicial(2, &[0.1, 0.0, -0.1]);
        let stretch = DMatrix::from_row_slice(2, 2, &[1.6, 0.0, 0.0, 1.0]);
        let c = PullbackCluster::new(stretch * base.b(), base.lambda().clone()).unwrap();
        assert!(stationarity_residual(&c).unwrap().residual > 1e-6);
        let line = simplicial(1, &[0.3, -0.3]);
        assert!(stationarity_residual(&line).unwrap().residual < 1e-14);
    }

    #[test]
    fn stationarity_recovers_lambda() {
        let lambda = [0.2, -0.05, -0.15];
        let c = simplicial(2, &lambda);
        let s = stationarity_residual(&c).unwrap();
        for (a, b) in s.lambda_fit.as_slice().iter().zip(&lambda) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inward_form_at_barycenter() {
        let quad = QuadratureSpec::default();
        let x = SimplexShift::zeros(3).unwrap();
        let areas = model_area_table(&x, &quad).unwrap();
        let a = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        let iv = q_inward(&areas, &a).unwrap();
        let base = areas.get(0, 1);
        assert!((iv.q_value + 2.0 * base).abs() < 1e-12);
        for (d, e) in iv.delta_v.iter().zip([-2.0, 1.0, 1.0]) {
            assert!((d - e * base).abs() < 1e-12);
        }
        let ones = q_inward(&areas, &DVector::from_element(3, 1.0)).unwrap();
        assert!(ones.q_value.abs() < 1e-14 && ones.delta_v.amax() < 1e-14);
    }

    #[test]
    fn inward_form_matches_shift_family() {
        let quad = QuadratureSpec::default();
        let opts = ProfileOptions::default();
        let x = SimplexShift::from_slice(&[0.3, -0.1, -0.2]).unwrap();
        let v = psi(&x, &quad).unwrap();
        let report = model_profile(&v, &opts).unwrap();
        let a = DVector::from_column_slice(&[0.4, -0.7, 0.3]);
        let slope = report.x.coords() / std::f64::consts::SQRT_2;
        let f = |t: f64| -> f64 {
            let shifted = SimplexShift::new(report.x.coords() + &a * (std::f64::consts::SQRT_2 * t)).unwrap();
            let m = psi(&shifted, &quad).unwrap();
            let perimeter = model_area_table(&shifted, &quad).unwrap().total();
            perimeter - slope.dot(m.values())
        };
        let h = 1e-3;
        let fd = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        let q = q_inward(&report.areas, &a).unwrap().q_value;
        assert!(((fd - q) / q).abs() < 1e-4, "{fd} vs {q}");
    }
}
