//! The measure map `psi`, its inverse, and the model isoperimetric profile.
//!
//! `psi(x)` is the vector of Gaussian measures of the cells of the shifted
//! model cluster `x + Omega^m`. Its differential is `-(1/sqrt 2) L_A` with `A`
//! the interface areas at `x`, so it is inverted by damped Newton steps
//! `x <- x + sqrt(2) L_A^+ (psi(x) - v)`. The model profile is the total
//! interface area at `psi^{-1}(v)`; its gradient is `psi^{-1}(v) / sqrt 2` and
//! its Hessian is `-L_A^+`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gauss::{model_area_table, model_cell_measures, QuadratureSpec};
use crate::simplex::{
    build_la, pinv_on_e, project_to_e, EOperator, InterfaceAreaTable, MeasureVector, SimplexShift,
};

/// Step halvings allowed per Newton iteration before giving up.
const MAX_HALVINGS: usize = 30;

/// Quadrature and Newton settings shared by the profile routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    pub quad: QuadratureSpec,
    /// Sup-norm tolerance on `psi(x) - v`.
    pub newton_tol: f64,
    pub max_iter: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            quad: QuadratureSpec::default(),
            newton_tol: 1e-10,
            max_iter: 100,
        }
    }
}

/// `psi(x)`, the cell measures of `x + Omega^m`.
pub fn psi(x: &SimplexShift, quad: &QuadratureSpec) -> Result<MeasureVector> {
    Ok(MeasureVector::from_computed(psi_raw(x, quad)?))
}

fn psi_raw(x: &SimplexShift, quad: &QuadratureSpec) -> Result<DVector<f64>> {
    Ok(DVector::from_vec(model_cell_measures(x, quad)?))
}

/// `D psi(x) = -(1/sqrt 2) L_{A^m(x)}`.
pub fn dpsi(x: &SimplexShift, quad: &QuadratureSpec) -> Result<EOperator> {
    let areas = model_area_table(x, quad)?;
    Ok(build_la(&areas).scaled(-FRAC_1_SQRT_2))
}

/// Outcome of [`invert_psi`].
#[derive(Debug, Clone)]
pub struct Inversion {
    pub x: SimplexShift,
    pub iterations: usize,
    /// `|psi(x) - v|_inf` at the returned point.
    pub residual: f64,
}

fn require_interior(v: &MeasureVector) -> Result<()> {
    if !v.is_interior() {
        return Err(Error::Domain(format!(
            "measure vector {:?} is not strictly interior",
            v.as_slice()
        )));
    }
    Ok(())
}

/// Solves `psi(x) = v` by damped Newton iteration started at `x = 0`.
pub fn invert_psi(v: &MeasureVector, opts: &ProfileOptions) -> Result<Inversion> {
    require_interior(v)?;
    let q = v.q();
    let target = v.values();
    let mut x = SimplexShift::zeros(q)?;
    let mut diff = psi_raw(&x, &opts.quad)? - target;
    for iteration in 0..=opts.max_iter {
        let residual = diff.amax();
        if residual <= opts.newton_tol {
            return Ok(Inversion {
                x,
                iterations: iteration,
                residual,
            });
        }
        if iteration == opts.max_iter {
            break;
        }
        let areas = model_area_table(&x, &opts.quad)?;
        let step = pinv_on_e(&build_la(&areas)).operator.apply(&diff) * SQRT_2;
        let current = diff.norm();
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate = project_to_e(&(x.coords() + &step * scale))?;
            let cand_diff = psi_raw(&candidate, &opts.quad)? - target;
            if cand_diff.norm() < current {
                accepted = Some((candidate, cand_diff));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((next, next_diff)) => {
                x = next;
                diff = next_diff;
            }
            None => {
                return Err(Error::Convergence {
                    iterations: iteration + 1,
                    residual,
                })
            }
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual: diff.amax(),
    })
}

/// The model profile at `v` with its derivatives.
#[derive(Debug, Clone)]
pub struct ProfileReport {
    pub v: MeasureVector,
    /// `psi^{-1}(v)`.
    pub x: SimplexShift,
    pub value: f64,
    /// `x / sqrt 2`.
    pub gradient: SimplexShift,
    /// `-L_A^+` on `E`.
    pub hessian: EOperator,
    pub areas: InterfaceAreaTable,
    /// `|2 I_m(v) + tr_E[(hessian)^{-1}]|`.
    pub trace_residual: f64,
    pub newton_iterations: usize,
}

/// Evaluates `I_m(v)`, its gradient and Hessian.
pub fn model_profile(v: &MeasureVector, opts: &ProfileOptions) -> Result<ProfileReport> {
    let inversion = invert_psi(v, opts)?;
    let x = inversion.x;
    let areas = model_area_table(&x, &opts.quad)?;
    let value = areas.total();
    let la = build_la(&areas);
    let hessian = pinv_on_e(&la).operator.scaled(-1.0);
    let hessian_inverse = pinv_on_e(&hessian).operator;
    let trace_residual = (2.0 * value + hessian_inverse.trace_on_e()).abs();
    Ok(ProfileReport {
        v: v.clone(),
        gradient: x.scaled(FRAC_1_SQRT_2),
        x,
        value,
        hessian,
        areas,
        trace_residual,
        newton_iterations: inversion.iterations,
    })
}

/// `I_m(v)` alone.
pub fn profile_value(v: &MeasureVector, opts: &ProfileOptions) -> Result<f64> {
    let inversion = invert_psi(v, opts)?;
    Ok(model_area_table(&inversion.x, &opts.quad)?.total())
}

/// A face of the simplex approached from the interior: the last cell's
/// measure `eps` shrinks to zero while the others stay proportional to `face`.
#[derive(Debug, Clone)]
pub struct FaceFixture {
    pub face: Vec<f64>,
    pub epsilons: Vec<f64>,
}

impl FaceFixture {
    pub fn new(face: &[f64]) -> Self {
        Self {
            face: face.to_vec(),
            epsilons: vec![1e-2, 1e-3, 1e-4],
        }
    }

    /// `((1 - eps) v_face, eps)`.
    pub fn interior_point(&self, eps: f64) -> Result<MeasureVector> {
        let mut values: Vec<f64> = self.face.iter().map(|f| f * (1.0 - eps)).collect();
        values.push(eps);
        MeasureVector::renormalized(&values, 1e-12)
    }
}

/// Distances between the profile near a face and the lower-order profile on it.
#[derive(Debug, Clone)]
pub struct FaceLimitReport {
    pub target: f64,
    /// `(eps, |I(v_eps) - I(v_face)|)` in fixture order.
    pub gaps: Vec<(f64, f64)>,
    pub decreasing: bool,
    pub final_gap: f64,
    pub passed: bool,
}

/// Largest gap allowed at the smallest `eps`.
pub const FACE_LIMIT_TOL: f64 = 0.02;

pub fn face_limit_check(fixture: &FaceFixture, opts: &ProfileOptions) -> Result<FaceLimitReport> {
    if fixture.face.len() < 2 || fixture.epsilons.is_empty() {
        return Err(Error::InvalidDimension(
            "face fixture needs at least two face cells and one epsilon".into(),
        ));
    }
    let face = MeasureVector::renormalized(&fixture.face, 1e-12)?;
    let target = profile_value(&face, opts)?;
    let gaps = fixture
        .epsilons
        .iter()
        .map(|&eps| {
            let v = fixture.interior_point(eps)?;
            Ok((eps, (profile_value(&v, opts)? - target).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let decreasing = gaps.windows(2).all(|w| w[1].1 < w[0].1);
    let final_gap = gaps.last().map(|g| g.1).unwrap_or(f64::INFINITY);
    Ok(FaceLimitReport {
        target,
        passed: decreasing && final_gap <= FACE_LIMIT_TOL,
        gaps,
        decreasing,
        final_gap,
    })
}
