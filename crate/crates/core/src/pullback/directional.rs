//! Directional (line-conditioned) estimators of cell measures and interface
//! areas.
//!
//! A standard Gaussian vector in `R^m` is `r * theta` with `theta` uniform on
//! the sphere and `r` two-sided chi-distributed. Along each line through the
//! origin the cells are intervals (the upper envelope of `q` affine
//! functions), so the measure of a cell is the average over directions of the
//! exact chi mass of its interval. With a fixed direction set the estimate is
//! a continuous, piecewise smooth function of `(B, lambda)`, which is what a
//! finite-difference optimizer needs. Interface areas do the same inside the
//! hyperplane of the interface, with directions projected onto it.

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::gauss::{density, stream_rng, Estimate};
use crate::pullback::{PullbackCluster, EDGE_NORM_TOL};
use crate::simplex::InterfaceAreaTable;

/// `P(|g| <= t)` for `g` standard Gaussian in `R^m`, i.e. the regularized
/// lower incomplete gamma function at `(m/2, t^2/2)`.
fn chi_cdf(m: usize, t: f64) -> f64 {
    if t.is_infinite() {
        return 1.0;
    }
    let x = 0.5 * t * t;
    let ex = (-x).exp();
    let upper = if m % 2 == 0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..m / 2 {
            term *= x / k as f64;
            sum += term;
        }
        ex * sum
    } else {
        // Q(1/2, x) = erfc(sqrt x); Q(s + 1, x) = Q(s, x) + x^s e^-x / Gamma(s + 1)
        let mut upper = libm::erfc(x.sqrt());
        let mut term = (x.sqrt() * ex) / (std::f64::consts::PI.sqrt() * 0.5);
        for k in 0..(m.saturating_sub(1)) / 2 {
            upper += term;
            term *= x / (k as f64 + 2.5);
        }
        upper
    };
    (1.0 - upper).clamp(0.0, 1.0)
}

fn signed_chi_cdf(m: usize, t: f64) -> f64 {
    t.signum() * chi_cdf(m, t.abs())
}

/// Probability that `r` lies in `(a, b)` when `r theta` is standard Gaussian in
/// `R^m`, `r` ranging over the whole line.
pub fn line_mass(m: usize, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    0.5 * (signed_chi_cdf(m, b) - signed_chi_cdf(m, a))
}

/// Intersects `{ r : alpha_k + r beta_k < 0 }` over all `k`.
fn feasible_interval(rows: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (alpha, beta) in rows {
        if beta > 0.0 {
            hi = hi.min(-alpha / beta);
        } else if beta < 0.0 {
            lo = lo.max(-alpha / beta);
        } else if alpha >= 0.0 {
            return (0.0, 0.0);
        }
    }
    (lo, hi)
}

/// A fixed set of unit directions in `R^dim`.
///
/// One direction for `dim = 1`, equally spaced angles with a seeded offset for
/// `dim = 2`, a randomly rotated Fibonacci lattice for `dim = 3`, and seeded
/// Gaussian directions above that.
#[derive(Debug, Clone)]
pub struct DirectionSet {
    dim: usize,
    directions: Vec<DVector<f64>>,
}

impl DirectionSet {
    pub fn new(dim: usize, count: usize, seed: u64) -> Self {
        let count = count.max(1);
        let mut rng = stream_rng(seed, 0x0d1e_c710, 0);
        let mut gaussian = || -> f64 { StandardNormal.sample(&mut rng) };
        let directions = match dim {
            0 => Vec::new(),
            1 => vec![DVector::from_element(1, 1.0)],
            2 => {
                let offset = gaussian().abs().fract();
                (0..count)
                    .map(|k| {
                        let angle = std::f64::consts::PI * (k as f64 + offset) / count as f64;
                        DVector::from_column_slice(&[angle.cos(), angle.sin()])
                    })
                    .collect()
            }
            3 => {
                let rotation = nalgebra::Matrix3::from_fn(|_, _| gaussian()).qr().q();
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..count)
                    .map(|k| {
                        let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                        let rho = (1.0 - z * z).sqrt();
                        let phi = golden * k as f64;
                        let p = rotation * nalgebra::Vector3::new(rho * phi.cos(), rho * phi.sin(), z);
                        DVector::from_column_slice(p.as_slice())
                    })
                    .collect()
            }
            _ => (0..count)
                .map(|_| {
                    let g = DVector::from_fn(dim, |_, _| gaussian());
                    g.normalize()
                })
                .collect(),
        };
        Self { dim, directions }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.directions.iter()
    }
}

/// Running sums of per-direction samples.
#[derive(Debug, Clone, Default)]
struct Moments {
    count: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn estimate(&self, scale: f64) -> Estimate {
        if self.count == 0 {
            return Estimate::exact(0.0);
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0);
        Estimate {
            value: mean,
            std_err: (var / n).sqrt(),
        }
        .scaled(scale)
    }
}

/// Cell measures and interface areas from one direction set.
#[derive(Debug, Clone)]
pub struct SmoothEvaluation {
    pub measures: Vec<Estimate>,
    pub areas: InterfaceAreaTable,
    /// Standard errors of the areas across directions, indexed like the table.
    pub area_std_err: nalgebra::DMatrix<f64>,
}

impl SmoothEvaluation {
    pub fn perimeter(&self) -> f64 {
        self.areas.total()
    }

    pub fn measure_values(&self) -> DVector<f64> {
        DVector::from_iterator(self.measures.len(), self.measures.iter().map(|m| m.value))
    }
}

/// Per-pair quantities that do not depend on the direction.
struct PairGeometry {
    i: usize,
    j: usize,
    norm: f64,
    weight: f64,
    /// `<B(e_k - e_i), n_ij>` for every `k`.
    g: Vec<f64>,
    /// Row offsets `alpha_k` at the foot point `c_ij n_ij`.
    alpha: Vec<f64>,
}

/// Deterministic directional estimator over a fixed [`DirectionSet`] in `R^n`.
#[derive(Debug, Clone)]
pub struct SmoothEstimator {
    directions: DirectionSet,
    flat: Vec<f64>,
}

impl SmoothEstimator {
    pub fn new(n: usize, count: usize, seed: u64) -> Self {
        let directions = DirectionSet::new(n, count, seed);
        let flat = directions.iter().flat_map(|d| d.iter().copied()).collect();
        Self { directions, flat }
    }

    pub fn directions(&self) -> &DirectionSet {
        &self.directions
    }

    fn pair_geometry(b: &nalgebra::DMatrix<f64>, gram: &nalgebra::DMatrix<f64>, lambda: &DVector<f64>, i: usize, j: usize) -> Option<PairGeometry> {
        let q = b.ncols();
        let norm = (b.column(j) - b.column(i)).norm();
        if norm <= EDGE_NORM_TOL {
            return None;
        }
        let offset = (lambda[j] - lambda[i]) / norm;
        let g: Vec<f64> = (0..q)
            .map(|k| ((gram[(k, j)] - gram[(k, i)]) - (gram[(i, j)] - gram[(i, i)])) / norm)
            .collect();
        let alpha = (0..q).map(|k| offset * g[k] - (lambda[k] - lambda[i])).collect();
        Some(PairGeometry {
            i,
            j,
            norm,
            weight: density(offset),
            g,
            alpha,
        })
    }

    /// One pass over the directions for `B` (`n x q`, columns summing to zero)
    /// and `lambda`. Returns measure and area moments.
    fn accumulate(&self, b: &nalgebra::DMatrix<f64>, lambda: &DVector<f64>) -> (Vec<Moments>, Vec<(usize, usize, f64, Moments)>) {
        let (n, q) = b.shape();
        let gram = b.transpose() * b;
        let pairs: Vec<PairGeometry> = (0..q)
            .flat_map(|i| ((i + 1)..q).map(move |j| (i, j)))
            .filter_map(|(i, j)| Self::pair_geometry(b, &gram, lambda, i, j))
            .collect();
        let mut cells = vec![Moments::default(); q];
        let mut areas: Vec<Moments> = vec![Moments::default(); pairs.len()];
        let mut slopes = vec![0.0; q];
        for theta in self.flat.chunks_exact(n) {
            for (k, s) in slopes.iter_mut().enumerate() {
                *s = b.column(k).iter().zip(theta).map(|(x, t)| x * t).sum();
            }
            for (i, cell) in cells.iter_mut().enumerate() {
                // cell i wins where (s_k - s_i) r - (lambda_k - lambda_i) < 0 for all k
                let (lo, hi) = feasible_interval(
                    (0..q)
                        .filter(|&k| k != i)
                        .map(|k| (lambda[i] - lambda[k], slopes[k] - slopes[i])),
                );
                cell.push(line_mass(n, lo, hi));
            }
            if n == 1 {
                continue;
            }
            for (pair, acc) in pairs.iter().zip(areas.iter_mut()) {
                let (i, j) = (pair.i, pair.j);
                let along = (slopes[j] - slopes[i]) / pair.norm;
                let len = (1.0 - along * along).max(0.0).sqrt();
                if len <= 1e-12 {
                    continue;
                }
                let (lo, hi) = feasible_interval(
                    (0..q)
                        .filter(|&k| k != i && k != j)
                        .map(|k| (pair.alpha[k], ((slopes[k] - slopes[i]) - along * pair.g[k]) / len)),
                );
                acc.push(line_mass(n - 1, lo, hi));
            }
        }
        let areas = pairs
            .iter()
            .zip(areas)
            .map(|(pair, mut acc)| {
                if n == 1 {
                    let inside = (0..q).filter(|&k| k != pair.i && k != pair.j).all(|k| pair.alpha[k] < 0.0);
                    acc.push(if inside { 1.0 } else { 0.0 });
                }
                (pair.i, pair.j, pair.weight, acc)
            })
            .collect();
        (cells, areas)
    }

    pub fn cell_measures(&self, c: &PullbackCluster) -> Vec<Estimate> {
        let (cells, _) = self.accumulate(c.b(), c.lambda());
        cells.iter().map(|m| m.estimate(1.0)).collect()
    }

    /// Area of `Sigma_ij`; zero for a vanishing edge vector.
    pub fn interface_area(&self, c: &PullbackCluster, i: usize, j: usize) -> Estimate {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let (_, areas) = self.accumulate(c.b(), c.lambda());
        areas
            .iter()
            .find(|(a, b, _, _)| (*a, *b) == (i, j))
            .map_or(Estimate::exact(0.0), |(_, _, w, m)| m.estimate(*w))
    }

    pub fn area_table(&self, c: &PullbackCluster) -> Result<InterfaceAreaTable> {
        Ok(self.evaluate(c)?.areas)
    }

    pub fn evaluate(&self, c: &PullbackCluster) -> Result<SmoothEvaluation> {
        self.evaluate_raw(c.b(), c.lambda())
    }

    /// Like [`Self::evaluate`] for any `B` with `B 1 = 0`, without validation.
    pub fn evaluate_raw(&self, b: &nalgebra::DMatrix<f64>, lambda: &DVector<f64>) -> Result<SmoothEvaluation> {
        let q = b.ncols();
        let (cells, pairs) = self.accumulate(b, lambda);
        let mut table = nalgebra::DMatrix::zeros(q, q);
        let mut se = nalgebra::DMatrix::zeros(q, q);
        for (i, j, w, m) in pairs {
            let e = m.estimate(w);
            table[(i, j)] = e.value;
            table[(j, i)] = e.value;
            se[(i, j)] = e.std_err;
            se[(j, i)] = e.std_err;
        }
        Ok(SmoothEvaluation {
            measures: cells.iter().map(|m| m.estimate(1.0)).collect(),
            areas: InterfaceAreaTable::new(table)?,
            area_std_err: se,
        })
    }
}
