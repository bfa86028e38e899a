//! Perimeter minimization over pull-back clusters with prescribed measures.
//!
//! The search space is all `(B, lambda)` with `B` an `n x q` matrix killing the
//! ones vector. Both are stored in coordinates of an orthonormal basis of `E`,
//! and the scale gauge `(B, lambda) -> (sB, s lambda)` is removed inside the
//! objective by normalizing `tr(B^T B) = (q - 1)/2`. Cell measures and areas
//! come from a [`SmoothEstimator`] with a fixed direction set, so the
//! objective is a deterministic function of the parameters and every
//! finite-difference evaluation uses the same random numbers.
//!
//! The objective `P(B, lambda) + rho |gamma(Omega) - v|^2` is minimized by BFGS
//! with central finite-difference gradients for each `rho` in the penalty
//! schedule, from several starting clusters.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss::{model_area_table, stream_rng, Estimate, McSpec, QuadratureSpec};
use crate::profile::{invert_psi, profile_value, ProfileOptions};
use crate::pullback::{pb_cell_measures, pb_perimeter, PullbackCluster, SmoothEstimator};
use crate::simplex::{e_basis, equidistant_points, InterfaceAreaTable, MeasureVector};

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
const STALL_ROUNDS: usize = 3;
const GRADIENT_TOL: f64 = 1e-9;

/// Default number of line directions for the smooth estimator in `R^n`.
pub fn default_directions(n: usize) -> usize {
    match n {
        1 => 1,
        2 => 2048,
        3 => 8192,
        _ => 16384,
    }
}

#[derive(Debug, Clone)]
pub struct OptProblem {
    pub q: usize,
    pub n: usize,
    pub v: MeasureVector,
    /// Increasing penalty weights, one BFGS run each.
    pub penalties: Vec<f64>,
    /// Used for the independent Monte Carlo check of the result.
    pub mc: McSpec,
    pub seed: u64,
    pub starts: usize,
    pub directions: usize,
    pub max_inner: usize,
    pub fd_step: f64,
    /// Sup-norm measure tolerance for feasibility.
    pub tol_v: f64,
    /// Objective decrease below which an iteration counts as stalled.
    pub stall_tol: f64,
    pub profile: ProfileOptions,
}

impl OptProblem {
    pub fn new(q: usize, n: usize, v: MeasureVector) -> Result<Self> {
        if q < 2 || n == 0 || q > n + 1 {
            return Err(Error::InvalidDimension(format!(
                "need 2 <= q <= n + 1, got q = {q}, n = {n}"
            )));
        }
        if v.q() != q {
            return Err(Error::InvalidDimension(format!("v has {} entries, expected {q}", v.q())));
        }
        if !v.is_interior() {
            return Err(Error::Domain("target measures must be strictly positive".into()));
        }
        Ok(Self {
            q,
            n,
            v,
            penalties: vec![1e2, 1e3, 1e4],
            mc: McSpec::new(100_000, 42),
            seed: 42,
            starts: 5,
            directions: default_directions(n),
            max_inner: 200,
            fd_step: 1e-3,
            tol_v: 1e-4,
            stall_tol: 1e-6,
            profile: ProfileOptions::default(),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mc(mut self, mc: McSpec) -> Self {
        self.mc = mc;
        self
    }

    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = starts.max(1);
        self
    }

    /// Seed for everything random in a run, mixing the problem data.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.q as u64);
        eat(self.n as u64);
        for x in self.v.as_slice() {
            eat(x.to_bits());
        }
        eat(self.seed);
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub rho: f64,
    pub objective: f64,
    pub perimeter: f64,
    /// Sup-norm distance of the cell measures to `v`.
    pub feasibility: f64,
}

#[derive(Debug, Clone)]
pub struct OptResult {
    pub v: MeasureVector,
    pub b: DMatrix<f64>,
    pub lambda: DVector<f64>,
    pub perimeter: f64,
    pub measures: DVector<f64>,
    pub measure_error: f64,
    pub areas: InterfaceAreaTable,
    pub isometry_defect: f64,
    pub profile_value: f64,
    pub profile_gap: f64,
    /// Independent Monte Carlo estimates at the final cluster.
    pub mc_perimeter: Estimate,
    pub mc_measures: Vec<Estimate>,
    /// Index of the start that produced this result.
    pub start: usize,
    pub history: Vec<HistoryEntry>,
}

impl OptResult {
    pub fn cluster(&self) -> Result<PullbackCluster> {
        PullbackCluster::new(self.b.clone(), self.lambda.clone())
    }

    pub fn feasible(&self, tol_v: f64) -> bool {
        self.measure_error <= tol_v
    }
}

/// Coordinates `(C, mu)` with `B = C H^T`, `lambda = H mu`.
struct Layout {
    q: usize,
    n: usize,
    h: DMatrix<f64>,
}

impl Layout {
    fn new(q: usize, n: usize) -> Self {
        Self { q, n, h: e_basis(q) }
    }

    fn len(&self) -> usize {
        (self.n + 1) * (self.q - 1)
    }

    fn split(&self, z: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let k = self.q - 1;
        let c = DMatrix::from_column_slice(self.n, k, &z.as_slice()[..self.n * k]);
        let mu = DVector::from_column_slice(&z.as_slice()[self.n * k..]);
        (c, mu)
    }

    /// Normalized `(B, lambda)`, or `None` when `B = 0`.
    fn cluster(&self, z: &DVector<f64>) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let (c, mu) = self.split(z);
        let tr = c.norm_squared();
        if !(tr > 1e-24) || !tr.is_finite() {
            return None;
        }
        let s = (0.5 * (self.q - 1) as f64 / tr).sqrt();
        Some((c * self.h.transpose() * s, &self.h * mu * s))
    }

    fn encode(&self, b: &DMatrix<f64>, lambda: &DVector<f64>) -> DVector<f64> {
        let c = b * &self.h;
        let mu = self.h.transpose() * lambda;
        let mut z = DVector::zeros(self.len());
        z.as_mut_slice()[..c.len()].copy_from_slice(c.as_slice());
        z.as_mut_slice()[c.len()..].copy_from_slice(mu.as_slice());
        z
    }

    fn normalize(&self, z: &DVector<f64>) -> DVector<f64> {
        match self.cluster(z) {
            Some((b, lambda)) => self.encode(&b, &lambda),
            None => z.clone(),
        }
    }
}

struct Objective<'a> {
    layout: Layout,
    estimator: SmoothEstimator,
    v: &'a DVector<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Evaluation {
    objective: f64,
    perimeter: f64,
    feasibility: f64,
}

impl Objective<'_> {
    fn eval(&self, z: &DVector<f64>, rho: f64) -> Evaluation {
        let Some((b, lambda)) = self.layout.cluster(z) else {
            return Evaluation {
                objective: f64::INFINITY,
                perimeter: f64::INFINITY,
                feasibility: f64::INFINITY,
            };
        };
        let Ok(e) = self.estimator.evaluate_raw(&b, &lambda) else {
            return Evaluation {
                objective: f64::INFINITY,
                perimeter: f64::INFINITY,
                feasibility: f64::INFINITY,
            };
        };
        let m = e.measure_values();
        let diff = m - self.v;
        let perimeter = e.perimeter();
        Evaluation {
            objective: perimeter + rho * diff.norm_squared(),
            perimeter,
            feasibility: diff.amax(),
        }
    }

    fn gradient(&self, z: &DVector<f64>, rho: f64, h: f64) -> DVector<f64> {
        let parts: Vec<f64> = (0..z.len())
            .into_par_iter()
            .map(|k| {
                let mut plus = z.clone();
                let mut minus = z.clone();
                plus[k] += h;
                minus[k] -= h;
                (self.eval(&plus, rho).objective - self.eval(&minus, rho).objective) / (2.0 * h)
            })
            .collect();
        DVector::from_vec(parts)
    }
}

/// BFGS with Armijo backtracking from `z` at a fixed penalty weight.
fn bfgs(
    obj: &Objective,
    z: DVector<f64>,
    rho: f64,
    p: &OptProblem,
    history: &mut Vec<HistoryEntry>,
) -> DVector<f64> {
    let dim = z.len();
    let mut x = z;
    let mut fx = obj.eval(&x, rho);
    let mut g = obj.gradient(&x, rho, p.fd_step);
    let mut inv_h = DMatrix::<f64>::identity(dim, dim);
    let mut scaled = false;
    let mut stalls = 0;
    for _ in 0..p.max_inner {
        if g.norm() < GRADIENT_TOL {
            break;
        }
        let mut d = -(&inv_h * &g);
        if g.dot(&d) >= 0.0 {
            inv_h = DMatrix::identity(dim, dim);
            scaled = false;
            d = -&g;
        }
        if !scaled {
            // unscaled first step: move at most 0.1 in parameter space
            d *= (0.1 / d.norm()).min(1.0);
        }
        let slope = g.dot(&d);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = &x + &d * t;
            let ft = obj.eval(&trial, rho);
            if ft.objective <= fx.objective + ARMIJO * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            break;
        };
        let g_new = obj.gradient(&x_new, rho, p.fd_step);
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-14 * s.norm() * y.norm() && sy > 0.0 {
            if !scaled {
                inv_h *= sy / y.norm_squared();
                scaled = true;
            }
            let rho_k = 1.0 / sy;
            let hy = &inv_h * &y;
            let yhy = y.dot(&hy);
            inv_h += (&s * s.transpose()) * (rho_k * rho_k * yhy + rho_k) - (&hy * s.transpose() + &s * hy.transpose()) * rho_k;
        }
        let decrease = fx.objective - f_new.objective;
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(HistoryEntry {
            iteration: history.len(),
            rho,
            objective: fx.objective,
            perimeter: fx.perimeter,
            feasibility: fx.feasibility,
        });
        if decrease < p.stall_tol {
            stalls += 1;
            if stalls >= STALL_ROUNDS {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    x
}

fn run_from(p: &OptProblem, b: &DMatrix<f64>, lambda: &DVector<f64>, start: usize, estimator: &SmoothEstimator) -> Result<OptResult> {
    let layout = Layout::new(p.q, p.n);
    let target = p.v.values().clone();
    let obj = Objective {
        layout,
        estimator: estimator.clone(),
        v: &target,
    };
    let mut z = obj.layout.normalize(&obj.layout.encode(b, lambda));
    let mut history = Vec::new();
    for &rho in &p.penalties {
        z = bfgs(&obj, z, rho, p, &mut history);
        z = obj.layout.normalize(&z);
    }
    let (b, lambda) = obj
        .layout
        .cluster(&z)
        .ok_or_else(|| Error::DegenerateCluster("optimizer collapsed B to zero".into()))?;
    finish(p, b, lambda, start, history, estimator)
}

fn finish(
    p: &OptProblem,
    b: DMatrix<f64>,
    lambda: DVector<f64>,
    start: usize,
    history: Vec<HistoryEntry>,
    estimator: &SmoothEstimator,
) -> Result<OptResult> {
    let cluster = PullbackCluster::new(b, lambda)?;
    let eval = estimator.evaluate(&cluster)?;
    let measures = eval.measure_values();
    let measure_error = (&measures - p.v.values()).amax();
    let perimeter = eval.perimeter();
    let profile_value = profile_value(&p.v, &p.profile)?;
    let mc = p.mc.with_stream(p.mc.stream_id ^ start as u64);
    let mc_perimeter = pb_perimeter(&cluster, &mc)?;
    let mc_measures = pb_cell_measures(&cluster, &mc)?;
    Ok(OptResult {
        v: p.v.clone(),
        perimeter,
        measures,
        measure_error,
        areas: eval.areas,
        isometry_defect: cluster.isometry_defect(),
        profile_value,
        profile_gap: perimeter - profile_value,
        mc_perimeter,
        mc_measures,
        start,
        history,
        b: cluster.b().clone(),
        lambda: cluster.lambda().clone(),
    })
}

/// Starting clusters: the simplicial one with `lambda = 0`, then random ones.
fn starts(p: &OptProblem) -> Result<Vec<(DMatrix<f64>, DVector<f64>)>> {
    let points = equidistant_points(p.q, p.n)?;
    let simplicial = DMatrix::from_fn(p.n, p.q, |a, i| points[i][a] / std::f64::consts::SQRT_2);
    let mut out = vec![(simplicial, DVector::zeros(p.q))];
    let mut rng = stream_rng(p.hash(), 0x5747_2a11, 0);
    while out.len() < p.starts {
        let b = DMatrix::from_fn(p.n, p.q, |_, _| rng.sample::<f64, _>(StandardNormal));
        let lambda = DVector::from_fn(p.q, |_, _| 0.3 * rng.sample::<f64, _>(StandardNormal));
        out.push((b, lambda));
    }
    Ok(out)
}

fn estimator_for(p: &OptProblem) -> SmoothEstimator {
    SmoothEstimator::new(p.n, p.directions, p.hash())
}

fn select(p: &OptProblem, results: Vec<OptResult>) -> Result<OptResult> {
    let outer = p.penalties.len();
    let mut feasible: Vec<&OptResult> = results.iter().filter(|r| r.feasible(p.tol_v)).collect();
    feasible.sort_by(|a, b| a.perimeter.total_cmp(&b.perimeter));
    if let Some(best) = feasible.first() {
        return Ok((*best).clone());
    }
    let best = results
        .into_iter()
        .min_by(|a, b| a.measure_error.total_cmp(&b.measure_error))
        .ok_or_else(|| Error::DegenerateCluster("no start produced a cluster".into()))?;
    Err(Error::Infeasible {
        outer_iterations: outer,
        best_measure_error: best.measure_error,
        best: Box::new(best),
    })
}

/// Multi-start penalty minimization of the perimeter at measures `p.v`.
pub fn minimize_perimeter(p: &OptProblem) -> Result<OptResult> {
    let estimator = estimator_for(p);
    let results = starts(p)?
        .par_iter()
        .enumerate()
        .map(|(k, (b, lambda))| run_from(p, b, lambda, k, &estimator))
        .collect::<Vec<_>>();
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    select(p, results)
}

/// Runs the penalty schedule from one given cluster.
pub fn minimize_from(p: &OptProblem, initial: &PullbackCluster) -> Result<OptResult> {
    if initial.q() != p.q || initial.n() != p.n {
        return Err(Error::InvalidDimension(format!(
            "initial cluster has (q, n) = ({}, {}), problem has ({}, {})",
            initial.q(),
            initial.n(),
            p.q,
            p.n
        )));
    }
    let estimator = estimator_for(p);
    let result = run_from(p, initial.b(), initial.lambda(), 0, &estimator)?;
    select(p, vec![result])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaComparison {
    pub i: usize,
    pub j: usize,
    pub area: f64,
    pub model: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct ModelComparison {
    pub pairs: Vec<AreaComparison>,
    pub max_deviation: f64,
    pub all_positive: bool,
}

/// Interface areas of a result against those of the model cluster with the same measures.
pub fn compare_to_model(r: &OptResult, quad: &QuadratureSpec) -> Result<ModelComparison> {
    let opts = ProfileOptions {
        quad: *quad,
        ..ProfileOptions::default()
    };
    let x = invert_psi(&r.v, &opts)?.x;
    let model = model_area_table(&x, quad)?;
    let pairs: Vec<AreaComparison> = model
        .pairs()
        .map(|(i, j)| {
            let (area, m) = (r.areas.get(i, j), model.get(i, j));
            AreaComparison {
                i,
                j,
                area,
                model: m,
                deviation: (area - m).abs(),
            }
        })
        .collect();
    Ok(ModelComparison {
        max_deviation: pairs.iter().map(|c| c.deviation).fold(0.0, f64::max),
        all_positive: pairs.iter().all(|c| c.area > 0.0),
        pairs,
    })
}
