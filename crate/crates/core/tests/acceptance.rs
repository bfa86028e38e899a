//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Reference values come from `common` (statrs normals, Simpson integration,
//! closed forms) or from finite differences, never from the routine under test.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use multibubble::gauss::mc_model_interface_area;
use multibubble::homology::{build_complex, homology_ranks, recover_b, EdgeNormalAssignment, IncidenceComplex};
use multibubble::optimizer::{minimize_perimeter, OptProblem, OptResult};
use multibubble::profile::{face_limit_check, invert_psi, model_profile, profile_value, psi, FaceFixture, ProfileOptions};
use multibubble::pullback::{pb_area_table, pb_perimeter, q_inward, q_translation, variation_from_normals, variation_report, PullbackCluster};
use multibubble::{InterfaceAreaTable, McSpec, MeasureVector, QuadratureSpec, SimplexShift};
use nalgebra::{DMatrix, DVector};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn opts() -> ProfileOptions {
    ProfileOptions::default()
}

fn mv(v: &[f64]) -> MeasureVector {
    MeasureVector::from_slice(v).expect("valid measure vector")
}

fn c01_single_bubble() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 1..10 {
        let p = k as f64 / 10.0;
        let value = profile_value(&mv(&[p, 1.0 - p]), &opts()).unwrap();
        worst = worst.max((value - phi(big_phi_inv(p))).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-8 && elapsed < Duration::from_secs(1),
        format!("max |I_m - phi(Phi^-1(v1))| = {worst:.2e} (tol 1e-8), {:.3}s (limit 1s)", elapsed.as_secs_f64()),
    )
}

fn c02_barycenter() -> Outcome {
    let start = Instant::now();
    let quad = QuadratureSpec::default();
    // q=3: each of three rays has weight phi(0)/2; q=4: six 2D wedges with
    // conditional probability 1/4 + asin(1/3)/(2 pi) of the orthant pair
    let oracle3 = 3.0 * phi(0.0) * 0.5;
    let oracle4 = 6.0 * phi(0.0) * (0.25 + (1.0f64 / 3.0).asin() / (2.0 * std::f64::consts::PI));
    let tabulated4 = 0.727_876_8;
    let mut pass = true;
    let mut parts = Vec::new();
    for (q, oracle) in [(3usize, oracle3), (4, oracle4)] {
        let v = MeasureVector::uniform(q).unwrap();
        let value = profile_value(&v, &opts()).unwrap();
        let x = SimplexShift::zeros(q).unwrap();
        let mut mc = 0.0;
        let mut var = 0.0;
        for i in 0..q {
            for j in (i + 1)..q {
                let spec = McSpec::new(1_000_000, 42).with_stream((q * 100 + i * q + j) as u64);
                let e = mc_model_interface_area(&x, i, j, &spec).unwrap();
                mc += e.value;
                var += e.std_err * e.std_err;
            }
        }
        let sigma = var.sqrt();
        let ok = (value - oracle).abs() <= 1e-6 && (mc - value).abs() <= 4.0 * sigma;
        pass &= ok;
        let _ = quad;
        parts.push(format!(
            "q={q}: {value:.9} vs oracle {oracle:.9} (|d|={:.1e}), MC {mc:.6} ({:.2} sigma)",
            (value - oracle).abs(),
            (mc - value).abs() / sigma
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    parts.push(format!(
        "tabulated q=4 value 0.7278768 differs from the oracle by {:.2e}",
        (oracle4 - tabulated4).abs()
    ));
    parts.push(format!("{:.2}s (limit 10s)", elapsed.as_secs_f64()));
    outcome(pass, parts.join("; "))
}

fn c03_differential_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(3);
    let (mut grad_worst, mut hess_worst) = (0.0f64, 0.0f64);
    for q in 2..=4 {
        let basis = basis_e(q);
        for _ in 0..20 {
            let v = random_interior(q, &mut rng);
            let v = DVector::from_vec(v);
            let report = model_profile(&MeasureVector::new(v.clone()).unwrap(), &opts()).unwrap();
            let grad = report.x.coords() / 2f64.sqrt();
            let hess = report.hessian.matrix().clone();
            let mut fd_grad = DVector::zeros(q - 1);
            let mut fd_hess = DMatrix::zeros(q - 1, q - 1);
            for k in 0..q - 1 {
                let u: DVector<f64> = basis.column(k).into_owned();
                let h = 1e-5;
                let f = |t: f64| profile_value(&MeasureVector::new(&v + &u * t).unwrap(), &opts()).unwrap();
                fd_grad[k] = (f(h) - f(-h)) / (2.0 * h);
                let h = 1e-4;
                let g = |t: f64| {
                    let r = model_profile(&MeasureVector::new(&v + &u * t).unwrap(), &opts()).unwrap();
                    basis.transpose() * r.gradient.coords()
                };
                fd_hess.set_column(k, &((g(h) - g(-h)) / (2.0 * h)));
            }
            let exact_grad = basis.transpose() * &grad;
            let exact_hess = basis.transpose() * &hess * &basis;
            let scale = exact_grad.norm().max(1e-3);
            grad_worst = grad_worst.max((&fd_grad - &exact_grad).norm() / scale);
            let sym = (&fd_hess + fd_hess.transpose()) * 0.5;
            hess_worst = hess_worst.max((&sym - &exact_hess).norm() / exact_hess.norm());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        grad_worst <= 1e-5 && hess_worst <= 1e-4 && elapsed < Duration::from_secs(120),
        format!(
            "60 points: gradient rel err {grad_worst:.2e} (tol 1e-5), Hessian rel err {hess_worst:.2e} (tol 1e-4), {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c04_trace_pde() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(4);
    let mut worst = 0.0f64;
    for q in 2..=5 {
        let basis = basis_e(q);
        for _ in 0..50 {
            let v = mv(&random_interior(q, &mut rng));
            let r = model_profile(&v, &opts()).unwrap();
            let h = basis.transpose() * r.hessian.matrix() * &basis;
            let tr = h.try_inverse().unwrap().trace();
            worst = worst.max((2.0 * r.value + tr).abs() / r.value);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-6 && elapsed < Duration::from_secs(120),
        format!("200 points: max |2I + tr H^-1|/I = {worst:.2e} (tol 1e-6), {:.1}s", elapsed.as_secs_f64()),
    )
}

fn c05_newton() -> Outcome {
    let mut rng = rng(5);
    let (mut worst, mut iters) = (0.0f64, 0usize);
    let mut oracle_gap = 0.0f64;
    for q in 2..=6 {
        for k in 0..100 {
            let v = mv(&random_interior(q, &mut rng));
            let inv = invert_psi(&v, &opts()).unwrap();
            let back = psi(&inv.x, &QuadratureSpec::default()).unwrap();
            worst = worst.max((back.values() - v.values()).amax());
            iters = iters.max(inv.iterations);
            if k < 3 {
                let reference = psi_oracle(inv.x.as_slice());
                let gap = reference.iter().zip(v.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                oracle_gap = oracle_gap.max(gap);
            }
        }
    }
    outcome(
        worst <= 1e-9 && iters <= 25 && oracle_gap <= 1e-9,
        format!(
            "500 inversions: round trip {worst:.2e} (tol 1e-9), max iterations {iters} (limit 25), reference measure map gap {oracle_gap:.1e}"
        ),
    )
}

fn c06_face_continuity() -> Outcome {
    let fixtures: [&[f64]; 3] = [&[0.5, 0.5], &[0.3, 0.7], &[0.2, 0.3, 0.5]];
    let mut pass = true;
    let mut parts = Vec::new();
    for face in fixtures {
        let fixture = FaceFixture::new(face);
        let target = profile_value(&mv(face), &opts()).unwrap();
        let gaps: Vec<f64> = fixture
            .epsilons
            .iter()
            .map(|&eps| (profile_value(&fixture.interior_point(eps).unwrap(), &opts()).unwrap() - target).abs())
            .collect();
        let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
        let last = *gaps.last().unwrap();
        let lib = face_limit_check(&fixture, &opts()).unwrap();
        let ok = decreasing && last <= 0.02 && lib.passed;
        pass &= ok;
        parts.push(format!("{face:?}: gaps {:.1e}/{:.1e}/{:.1e}", gaps[0], gaps[1], gaps[2]));
    }
    outcome(pass, format!("{} (decreasing, final <= 0.02)", parts.join(", ")))
}

fn c07_pullback_consistency() -> Outcome {
    let mut rng = rng(7);
    let mut worst_ratio = 0.0f64;
    let mut count = 0;
    let mut pass = true;
    for q in 2..=4 {
        for n in [q - 1, q + 1] {
            for k in 0..20 {
                let lambda = DVector::from_vec(random_shift(q, 0.3, &mut rng));
                let b = isometric_b(q, n, &mut rng);
                let c = PullbackCluster::new(b, lambda.clone()).unwrap();
                let spec = McSpec::new(200_000, 7).with_stream((q * 1000 + n * 100 + k) as u64);
                let p = pb_perimeter(&c, &spec).unwrap();
                let x: Vec<f64> = lambda.iter().map(|l| l * 2f64.sqrt()).collect();
                let raw = psi_oracle(&x);
                // quadrature truncation leaves the sum a few 1e-12 short of 1
                let total: f64 = raw.iter().sum();
                let v: Vec<f64> = raw.iter().map(|r| r / total).collect();
                let model = profile_value(&mv(&v), &opts()).unwrap();
                let reference = perimeter_oracle(&x);
                let tol = (4.0 * p.std_err).max(1e-6);
                let ok = (p.value - model).abs() <= tol && (model - reference).abs() <= 1e-8;
                pass &= ok;
                worst_ratio = worst_ratio.max((p.value - model).abs() / tol);
                count += 1;
            }
        }
    }
    outcome(
        pass,
        format!("{count} clusters (q=2..4, n=q-1 and q+1): max |P - I_m(psi(sqrt2 lambda))| / max(1e-6, 4 sigma) = {worst_ratio:.2}"),
    )
}

fn reference_gap(areas: &DMatrix<f64>, normals: &[((usize, usize), DVector<f64>)], n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let q = areas.nrows();
    let mut m = DMatrix::zeros(q, n);
    let mut nn = DMatrix::zeros(n, n);
    for ((i, j), nij) in normals {
        let a = areas[(*i, *j)];
        let mut e = DVector::zeros(q);
        e[*i] = 1.0;
        e[*j] = -1.0;
        m += &e * nij.transpose() * a;
        nn += nij * nij.transpose() * a;
    }
    let gap = &nn - m.transpose() * pinv_e(&laplacian(areas)) * &m;
    (m, gap)
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    nalgebra::SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues.min()
}

fn c08_variation_algebra() -> Outcome {
    let mut rng = rng(8);
    let mut psd_worst = f64::INFINITY;
    let mut agree = 0.0f64;
    // arbitrary clusters
    for k in 0..20 {
        let (q, n) = [(3, 2), (4, 2), (4, 3), (3, 3)][k % 4];
        let b = DMatrix::from_fn(n, q, |_, _| gaussian(&mut rng));
        let c = PullbackCluster::projected(&b, &DVector::from_vec(random_shift(q, 0.3, &mut rng))).unwrap();
        let areas = pb_area_table(&c, &McSpec::new(50_000, 8).with_stream(k as u64)).unwrap().table;
        let r = variation_report(&c, &areas).unwrap();
        let normals: Vec<_> = areas
            .pairs()
            .filter(|&(i, j)| areas.get(i, j) > 0.0)
            .map(|(i, j)| {
                let e = c.b().column(j) - c.b().column(i);
                ((i, j), e.normalize())
            })
            .collect();
        let (m, gap) = reference_gap(areas.matrix(), &normals, n);
        agree = agree.max((&m - &r.m).amax()).max((&gap - &r.cs_gap).amax());
        psd_worst = psd_worst.min(min_eig(&r.cs_gap));
    }
    // perturbed normals, q = 4 in the plane
    let areas = InterfaceAreaTable::from_pairs(4, |i, j| 0.1 + 0.02 * (i + 2 * j) as f64).unwrap();
    let angles = [0.1f64, 0.9, 1.7, 2.8, 3.9, 5.1];
    let entries: Vec<_> = areas
        .pairs()
        .zip(angles)
        .map(|((i, j), t)| ((i, j), DVector::from_column_slice(&[t.cos(), t.sin()])))
        .collect();
    let strict = min_eig(&variation_from_normals(&areas, &EdgeNormalAssignment::new(4, 2, entries).unwrap()).unwrap().cs_gap);

    // simplicial clusters
    let (mut zero_worst, mut stat_worst) = (0.0f64, 0.0f64);
    let mut simplicial_ok = true;
    for q in 2..=5 {
        for n in [q - 1, q] {
            let lambda = DVector::from_vec(random_shift(q, 0.3, &mut rng));
            let c = PullbackCluster::new(isometric_b(q, n, &mut rng), lambda).unwrap();
            let areas = pb_area_table(&c, &McSpec::new(50_000, 8).with_stream(100 + q as u64)).unwrap().table;
            let r = variation_report(&c, &areas).unwrap();
            zero_worst = zero_worst.max(r.cs_gap.amax());
            psd_worst = psd_worst.min(min_eig(&r.cs_gap));
            stat_worst = stat_worst.max(r.stationarity_residual().unwrap());
            let all_positive = areas.pairs().all(|(i, j)| areas.get(i, j) > 0.0);
            simplicial_ok &= all_positive && r.effective_dimension == q - 1;
        }
    }
    let pass = psd_worst >= -1e-8 && zero_worst <= 1e-8 && stat_worst <= 1e-10 && simplicial_ok && strict > 0.0 && agree <= 1e-10;
    outcome(
        pass,
        format!(
            "min eig cs_gap {psd_worst:.1e} (>= -1e-8), simplicial |cs_gap| {zero_worst:.1e} (<= 1e-8), \
             rank M = q-1 and A > 0: {simplicial_ok}, stationarity {stat_worst:.1e} (<= 1e-10), \
             perturbed-normal min eig {strict:.2e} (> 0), reference agreement {agree:.1e}"
        ),
    )
}

fn c09_index_forms() -> Outcome {
    let quad = QuadratureSpec::default();
    let x0 = SimplexShift::zeros(3).unwrap();
    let areas = multibubble::gauss::model_area_table(&x0, &quad).unwrap();
    let mut rel = 0.0f64;
    for a in [[1.0, 0.0, 0.0], [0.4, -0.7, 0.3], [0.0, 1.0, -1.0]] {
        let a = DVector::from_column_slice(&a);
        let q = q_inward(&areas, &a).unwrap().q_value;
        // F(t) = perimeter of the model cluster at x(t) = sqrt2 t a; at the
        // barycenter the measure term has zero weight
        let f = |t: f64| {
            let x: Vec<f64> = a.iter().map(|ai| 2f64.sqrt() * t * ai).collect();
            perimeter_oracle(&x)
        };
        let second = |h: f64| (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        let fd = (4.0 * second(0.01) - second(0.02)) / 3.0;
        rel = rel.max(((fd - q) / q).abs());
    }
    let c = PullbackCluster::simplicial(2, &x0).unwrap();
    let report = variation_report(&c, &areas).unwrap();
    let n_oracle = 1.5 * phi(0.0) * 0.5;
    let mut qt = 0.0f64;
    for t in [0.0f64, 0.7, 2.1, 4.0] {
        let w = DVector::from_column_slice(&[t.cos(), t.sin()]);
        qt = qt.max((q_translation(&report, &w).unwrap() + n_oracle).abs());
    }
    outcome(
        rel <= 1e-4 && qt <= 1e-6,
        format!("q_inward vs FD relative {rel:.1e} (tol 1e-4); q_translation vs -(3/2)(0.1994711)|w|^2: {qt:.1e} (tol 1e-6)"),
    )
}

fn isometry_defect_reference(b: &DMatrix<f64>) -> f64 {
    let q = b.ncols();
    let basis = basis_e(q);
    let tr = (b.transpose() * b).trace();
    let s2 = 0.5 * (q - 1) as f64 / tr;
    let g = basis.transpose() * (b.transpose() * b * (2.0 * s2)) * &basis - DMatrix::identity(q - 1, q - 1);
    nalgebra::SymmetricEigen::new(g).eigenvalues.amax()
}

fn c10_optimizer() -> (Outcome, Vec<OptResult>) {
    let start = Instant::now();
    let cases: Vec<(usize, usize, Vec<f64>, f64, f64)> = vec![
        (2, 2, vec![0.7, 0.3], phi(big_phi_inv(0.7)), 5e-3),
        (3, 2, vec![1.0 / 3.0; 3], 1.5 * phi(0.0), 5e-3),
        (3, 2, vec![0.5, 0.3, 0.2], profile_oracle(&[0.5, 0.3, 0.2]), 5e-3),
        (4, 3, vec![0.25; 4], 6.0 * phi(0.0) * (0.25 + (1.0f64 / 3.0).asin() / (2.0 * std::f64::consts::PI)), 8e-3),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut results = Vec::new();
    for (q, n, v, oracle, tol) in cases {
        let p = OptProblem::new(q, n, mv(&v)).unwrap();
        match minimize_perimeter(&p) {
            Ok(r) => {
                let defect = isometry_defect_reference(&r.b);
                let c = r.cluster().unwrap();
                let nonempty = c.nonempty_interfaces().len() == q * (q - 1) / 2
                    && r.areas.pairs().all(|(i, j)| r.areas.get(i, j) > 0.0);
                let floor = r
                    .history
                    .iter()
                    .filter(|h| h.feasibility <= p.tol_v)
                    .map(|h| h.perimeter)
                    .fold(f64::INFINITY, f64::min);
                let ok = (r.perimeter - oracle).abs() <= tol
                    && defect <= 5e-2
                    && nonempty
                    && floor >= oracle - 5e-3
                    && r.measure_error <= p.tol_v;
                pass &= ok;
                parts.push(format!(
                    "q={q} n={n}: P-I={:+.1e} defect {defect:.1e} nonempty {nonempty} history floor-I={:+.1e}",
                    r.perimeter - oracle,
                    floor - oracle
                ));
                results.push(r);
            }
            Err(e) => {
                pass = false;
                parts.push(format!("q={q} n={n}: {e}"));
            }
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed <= Duration::from_secs(900);
    parts.push(format!("{:.0}s (limit 900s)", elapsed.as_secs_f64()));
    (outcome(pass, parts.join("; ")), results)
}

fn downward_closed_complexes(max_vertices: usize, mut visit: impl FnMut(&[usize], &[(usize, usize)], &[(usize, usize, usize)])) {
    for vmask in 0u32..(1 << max_vertices) {
        let vertices: Vec<usize> = (0..max_vertices).filter(|v| vmask & (1 << v) != 0).collect();
        let pairs: Vec<(usize, usize)> = vertices
            .iter()
            .flat_map(|&i| vertices.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect();
        for emask in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> = pairs.iter().enumerate().filter(|(k, _)| emask & (1 << k) != 0).map(|(_, &e)| e).collect();
            let mut tris: Vec<(usize, usize, usize)> = Vec::new();
            for &i in &vertices {
                for &j in &vertices {
                    for &k in &vertices {
                        if i < j && j < k && edges.contains(&(i, j)) && edges.contains(&(i, k)) && edges.contains(&(j, k)) {
                            tris.push((i, j, k));
                        }
                    }
                }
            }
            for tmask in 0u32..(1 << tris.len()) {
                let triangles: Vec<_> = tris.iter().enumerate().filter(|(k, _)| tmask & (1 << k) != 0).map(|(_, &t)| t).collect();
                visit(&vertices, &edges, &triangles);
            }
        }
    }
}

fn c11_homology(optimized: &[OptResult]) -> Outcome {
    let mut rng = rng(11);
    let mut b1_ok = true;
    for r in optimized {
        let s = build_complex(&r.cluster().unwrap()).unwrap();
        b1_ok &= homology_ranks(&s).b1 == 0;
    }
    for q in 2..=6 {
        let lambda = DVector::from_vec(random_shift(q, 0.3, &mut rng));
        let c = PullbackCluster::new(isometric_b(q, q - 1, &mut rng), lambda).unwrap();
        b1_ok &= homology_ranks(&build_complex(&c).unwrap()).b1 == 0;
    }

    let mut checked = 0usize;
    let mut mismatches = 0usize;
    downward_closed_complexes(5, |vertices, edges, triangles| {
        let s = IncidenceComplex::new(5, vertices.iter().copied(), edges.iter().copied(), triangles.iter().copied()).unwrap();
        let lib = homology_ranks(&s);
        let (b0, b1) = betti_z2(vertices, edges, triangles);
        checked += 1;
        if (lib.b0, lib.b1) != (b0, b1) {
            mismatches += 1;
        }
    });

    let (mut residual, mut isometry) = (0.0f64, 0.0f64);
    for q in 2..=6 {
        let lambda = DVector::from_vec(random_shift(q, 0.3, &mut rng));
        let c = PullbackCluster::new(isometric_b(q, q - 1, &mut rng), lambda).unwrap();
        let s = build_complex(&c).unwrap();
        let normals = EdgeNormalAssignment::from_cluster(&c, s.edges()).unwrap();
        let rec = recover_b(&s, &normals).unwrap();
        residual = residual.max(rec.residual);
        isometry = isometry.max((rec.b.transpose() * &rec.b * 2.0 - projector(q)).amax());
    }
    outcome(
        b1_ok && mismatches == 0 && residual <= 1e-8 && isometry <= 1e-8,
        format!(
            "b1 = 0 on {} optimized and 5 simplicial complexes: {b1_ok}; {checked} complexes on <= 5 vertices, {mismatches} mismatches vs Z/2 oracle; recover_B residual {residual:.1e}, |2B^TB - Id_E| {isometry:.1e}",
            optimized.len()
        ),
    )
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_multibubble"))
        .args(args)
        .env_remove("MULTIBUBBLE_SEED")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn c12_reproducibility() -> Outcome {
    let dir = std::env::temp_dir().join(format!("multibubble-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let complex = dir.join("k4.json");
    std::fs::write(&complex, IncidenceComplex::complete(4).to_json_string()).unwrap();
    let complex = complex.to_string_lossy().into_owned();
    let commands: Vec<Vec<&str>> = vec![
        vec!["profile", "--v", "0.5,0.3,0.2"],
        vec!["check", "--q", "3", "--mc-samples", "200000", "--seed", "42"],
        vec!["optimize", "--q", "3", "--n", "2", "--v", "0.4,0.35,0.25", "--mc-samples", "100000", "--seed", "42"],
        vec!["homology", &complex],
    ];
    let mut identical = 0;
    let mut failures = Vec::new();
    for args in &commands {
        let (c1, o1) = run_cli(args);
        let (c2, o2) = run_cli(args);
        if c1 == 0 && c2 == 0 && o1 == o2 && !o1.is_empty() {
            identical += 1;
        } else {
            failures.push(args[0]);
        }
    }
    let in_process = {
        let c = PullbackCluster::simplicial(3, &SimplexShift::from_slice(&[0.1, -0.2, 0.0, 0.1]).unwrap()).unwrap();
        let spec = McSpec::new(100_000, 9);
        let a = pb_perimeter(&c, &spec).unwrap();
        let b = pb_perimeter(&c, &spec).unwrap();
        a.value.to_bits() == b.value.to_bits() && a.std_err.to_bits() == b.std_err.to_bits()
    };
    let _ = std::fs::remove_dir_all(&dir);
    outcome(
        identical == commands.len() && in_process,
        format!(
            "{identical}/{} CLI commands byte-identical on rerun{}; in-process MC rerun bit-identical: {in_process}",
            commands.len(),
            if failures.is_empty() { String::new() } else { format!(" (differs: {failures:?})") }
        ),
    )
}

fn main() {
    let mut all = true;
    let mut report = |n: usize, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        all &= o.pass;
        println!(
            "criterion {n:>2} {} [{:>6.1}s] {title}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    };
    report(1, "closed-form single bubble", &mut c01_single_bubble);
    report(2, "barycenter values", &mut c02_barycenter);
    report(3, "differential identities", &mut c03_differential_identities);
    report(4, "trace identity", &mut c04_trace_pde);
    report(5, "Newton inversion", &mut c05_newton);
    report(6, "face continuity", &mut c06_face_continuity);
    report(7, "pull-back consistency", &mut c07_pullback_consistency);
    report(8, "variation algebra", &mut c08_variation_algebra);
    report(9, "index forms", &mut c09_index_forms);
    let mut optimized = Vec::new();
    report(10, "optimizer", &mut || {
        let (o, r) = c10_optimizer();
        optimized = r;
        o
    });
    report(11, "homology", &mut || c11_homology(&optimized));
    report(12, "reproducibility", &mut c12_reproducibility);
    if !all {
        std::process::exit(1);
    }
}
