//! Reference computations for the integration tests, written without the
//! crate's own numerics: normal functions from `statrs`, composite Simpson
//! integration, finite-difference Newton steps and `nalgebra` linear algebra.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

pub fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

pub fn phi(t: f64) -> f64 {
    std_normal().pdf(t)
}

pub fn big_phi(t: f64) -> f64 {
    std_normal().cdf(t)
}

pub fn big_phi_inv(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Composite Simpson rule on `[a, b]` with `panels` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

const PANELS: usize = 6000;
const HALF_WIDTH: f64 = 12.0;

/// `P(argmax_k (Z_k - x_k) = i)` for `Z` standard Gaussian in `R^q`.
pub fn psi_oracle(x: &[f64]) -> Vec<f64> {
    let q = x.len();
    (0..q)
        .map(|i| {
            simpson(
                |t| {
                    let mut p = phi(t);
                    for j in 0..q {
                        if j != i {
                            p *= big_phi(t - x[i] + x[j]);
                        }
                    }
                    p
                },
                -HALF_WIDTH,
                HALF_WIDTH,
                PANELS,
            )
        })
        .collect()
}

/// Gaussian area of the interface `{Z_i - x_i = Z_j - x_j >= Z_k - x_k}`,
/// by conditioning on `u = (Z_i - Z_j)/sqrt2` and integrating over
/// `s = (Z_i + Z_j)/2 ~ N(0, 1/2)`.
pub fn area_oracle(x: &[f64], i: usize, j: usize) -> f64 {
    let q = x.len();
    let u0 = (x[i] - x[j]) / 2f64.sqrt();
    let sd = 0.5f64.sqrt();
    let cond = simpson(
        |s| {
            let mut p = phi(s / sd) / sd;
            for k in 0..q {
                if k != i && k != j {
                    p *= big_phi(s - 0.5 * (x[i] + x[j]) + x[k]);
                }
            }
            p
        },
        -HALF_WIDTH * sd,
        HALF_WIDTH * sd,
        PANELS,
    );
    phi(u0) * cond
}

pub fn perimeter_oracle(x: &[f64]) -> f64 {
    let q = x.len();
    let mut total = 0.0;
    for i in 0..q {
        for j in (i + 1)..q {
            total += area_oracle(x, i, j);
        }
    }
    total
}

/// Orthonormal basis of `{sum = 0}` in `R^q`, columns.
pub fn basis_e(q: usize) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for k in 0..q - 1 {
        let mut v = DVector::zeros(q);
        v[k] = 1.0;
        v[k + 1] = -1.0;
        for c in &cols {
            let proj = c.dot(&v);
            v -= c * proj;
        }
        cols.push(v.normalize());
    }
    DMatrix::from_columns(&cols)
}

/// Solves `psi_oracle(x) = v` by Newton steps with a finite-difference
/// Jacobian in an orthonormal basis of `E`.
pub fn invert_oracle(v: &[f64]) -> Vec<f64> {
    let q = v.len();
    let basis = basis_e(q);
    let target = DVector::from_column_slice(v);
    let mut x = DVector::<f64>::zeros(q);
    for _ in 0..50 {
        let f = DVector::from_vec(psi_oracle(x.as_slice())) - &target;
        if f.amax() < 1e-12 {
            break;
        }
        let h = 1e-6;
        let mut jac = DMatrix::zeros(q - 1, q - 1);
        for k in 0..q - 1 {
            let dir = basis.column(k).into_owned();
            let fp = DVector::from_vec(psi_oracle((&x + &dir * h).as_slice()));
            let fm = DVector::from_vec(psi_oracle((&x - &dir * h).as_slice()));
            let col = basis.transpose() * ((fp - fm) / (2.0 * h));
            jac.set_column(k, &col);
        }
        let rhs = basis.transpose() * &f;
        let step = jac.lu().solve(&rhs).expect("jacobian invertible");
        x -= &basis * step;
    }
    x.as_slice().to_vec()
}

/// `I_m(v)` from the reference measure map and areas.
pub fn profile_oracle(v: &[f64]) -> f64 {
    perimeter_oracle(&invert_oracle(v))
}

/// `L_A = sum_{i<j} A_ij (e_i - e_j)(e_i - e_j)^T`.
pub fn laplacian(areas: &DMatrix<f64>) -> DMatrix<f64> {
    let q = areas.nrows();
    let mut l = DMatrix::zeros(q, q);
    for i in 0..q {
        for j in (i + 1)..q {
            let a = areas[(i, j)];
            l[(i, i)] += a;
            l[(j, j)] += a;
            l[(i, j)] -= a;
            l[(j, i)] -= a;
        }
    }
    l
}

/// Moore-Penrose inverse restricted to `E`, via the basis.
pub fn pinv_e(l: &DMatrix<f64>) -> DMatrix<f64> {
    let basis = basis_e(l.nrows());
    let restricted = basis.transpose() * l * &basis;
    let inv = restricted.pseudo_inverse(1e-12).unwrap();
    &basis * inv * basis.transpose()
}

pub fn projector(q: usize) -> DMatrix<f64> {
    DMatrix::identity(q, q) - DMatrix::from_element(q, q, 1.0 / q as f64)
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Uniform on the simplex conditioned on every entry being at least 0.01.
pub fn random_interior(q: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    loop {
        let e: Vec<f64> = (0..q).map(|_| -rng.random::<f64>().ln()).collect();
        let s: f64 = e.iter().sum();
        let v: Vec<f64> = e.iter().map(|x| x / s).collect();
        if v.iter().all(|x| *x >= 0.01) {
            return v;
        }
    }
}

pub fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Mean-zero vector with entries of size about `scale`.
pub fn random_shift(q: usize, scale: f64, rng: &mut ChaCha20Rng) -> Vec<f64> {
    let g: Vec<f64> = (0..q).map(|_| scale * gaussian(rng)).collect();
    let mean = g.iter().sum::<f64>() / q as f64;
    g.iter().map(|x| x - mean).collect()
}

/// Random orthogonal `n x n` matrix.
pub fn random_rotation(n: usize, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    g.qr().q()
}

/// `B` (`n x q`) with `B^T B = P_E / 2`: columns are `q` points at mutual
/// distance 1, centered, rotated at random.
pub fn isometric_b(q: usize, n: usize, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    let basis = basis_e(q);
    let mut b = DMatrix::zeros(n, q);
    let rows = basis.transpose();
    for a in 0..q - 1 {
        for i in 0..q {
            b[(a, i)] = rows[(a, i)] / 2f64.sqrt();
        }
    }
    random_rotation(n, rng) * b
}

/// Rank over Z/2 by Gaussian elimination on bit rows.
pub fn rank_z2(mut rows: Vec<u64>) -> usize {
    let mut rank = 0;
    for bit in 0..64 {
        let mask = 1u64 << bit;
        if let Some(p) = (rank..rows.len()).find(|&r| rows[r] & mask != 0) {
            rows.swap(rank, p);
            for r in 0..rows.len() {
                if r != rank && rows[r] & mask != 0 {
                    rows[r] ^= rows[rank];
                }
            }
            rank += 1;
        }
    }
    rank
}

/// Number of connected components on `vertices` by union-find.
pub fn components(vertices: &[usize], edges: &[(usize, usize)]) -> usize {
    let max = vertices.iter().copied().max().map_or(0, |m| m + 1);
    let mut parent: Vec<usize> = (0..max).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    let mut count = vertices.len();
    for &(i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

/// `(b0, b1)` over Z/2 of a downward-closed 2-complex.
pub fn betti_z2(vertices: &[usize], edges: &[(usize, usize)], triangles: &[(usize, usize, usize)]) -> (usize, usize) {
    // boundary of each edge as a bitmask over vertex labels
    let d1: Vec<u64> = edges.iter().map(|&(i, j)| (1u64 << i) | (1u64 << j)).collect();
    let edge_bit = |e: (usize, usize)| 1u64 << edges.iter().position(|&x| x == e).unwrap();
    let d2: Vec<u64> = triangles
        .iter()
        .map(|&(i, j, k)| edge_bit((i, j)) | edge_bit((i, k)) | edge_bit((j, k)))
        .collect();
    let r1 = rank_z2(d1);
    let r2 = rank_z2(d2);
    let b0 = components(vertices, edges);
    assert_eq!(b0, vertices.len() - r1);
    (b0, edges.len() - r1 - r2)
}
