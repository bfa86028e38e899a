//! Incidence complexes of clusters, their Betti numbers, and reconstruction of
//! the linear map `B` from edge normals.
//!
//! Vertices are nonempty cells, edges are interfaces of positive area and
//! triangles are nonempty triple junctions. Cell indices are 0-based
//! everywhere, including the JSON form.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pullback::PullbackCluster;
use crate::simplex::{build_la, pinv_on_e, InterfaceAreaTable};

/// Unit-norm tolerance of edge normals.
pub const NORMAL_UNIT_TOL: f64 = 1e-10;
/// Cycle defects above this make a normal assignment inconsistent.
pub const CYCLE_DEFECT_TOL: f64 = 1e-3;

fn sorted2(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

fn sorted3(i: usize, j: usize, k: usize) -> (usize, usize, usize) {
    let mut t = [i, j, k];
    t.sort_unstable();
    (t[0], t[1], t[2])
}

/// A two-dimensional simplicial complex on the cell labels `0..q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceComplex {
    q: usize,
    vertices: Vec<usize>,
    edges: Vec<(usize, usize)>,
    triangles: Vec<(usize, usize, usize)>,
}

impl IncidenceComplex {
    /// Sorts and deduplicates the simplices and checks downward closure.
    pub fn new(
        q: usize,
        vertices: impl IntoIterator<Item = usize>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        triangles: impl IntoIterator<Item = (usize, usize, usize)>,
    ) -> Result<Self> {
        let vertices: BTreeSet<usize> = vertices.into_iter().collect();
        let mut edge_set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidComplex(format!("edge ({i}, {j}) is a loop")));
            }
            edge_set.insert(sorted2(i, j));
        }
        let mut tri_set = BTreeSet::new();
        for (i, j, k) in triangles {
            if i == j || j == k || i == k {
                return Err(Error::InvalidComplex(format!("triangle ({i}, {j}, {k}) repeats a vertex")));
            }
            tri_set.insert(sorted3(i, j, k));
        }
        if let Some(&v) = vertices.iter().find(|&&v| v >= q) {
            return Err(Error::InvalidComplex(format!("vertex {v} out of range for q = {q}")));
        }
        for &(i, j) in &edge_set {
            for v in [i, j] {
                if !vertices.contains(&v) {
                    return Err(Error::InvalidComplex(format!("edge ({i}, {j}) uses missing vertex {v}")));
                }
            }
        }
        for &(i, j, k) in &tri_set {
            for e in [(i, j), (i, k), (j, k)] {
                if !edge_set.contains(&e) {
                    return Err(Error::InvalidComplex(format!(
                        "triangle ({i}, {j}, {k}) uses missing edge ({}, {})",
                        e.0, e.1
                    )));
                }
            }
        }
        Ok(Self {
            q,
            vertices: vertices.into_iter().collect(),
            edges: edge_set.into_iter().collect(),
            triangles: tri_set.into_iter().collect(),
        })
    }

    /// All simplices on `q` vertices up to dimension two.
    pub fn complete(q: usize) -> Self {
        let edges: Vec<_> = (0..q).flat_map(|i| ((i + 1)..q).map(move |j| (i, j))).collect();
        let triangles: Vec<_> = (0..q)
            .flat_map(|i| ((i + 1)..q).flat_map(move |j| ((j + 1)..q).map(move |k| (i, j, k))))
            .collect();
        Self {
            q,
            vertices: (0..q).collect(),
            edges,
            triangles,
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn triangles(&self) -> &[(usize, usize, usize)] {
        &self.triangles
    }

    /// Boundary matrix from edges to vertices, rows indexed like [`Self::vertices`].
    fn boundary1(&self) -> Vec<Vec<i128>> {
        let index: BTreeMap<usize, usize> = self.vertices.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let mut m = vec![vec![0i128; self.edges.len()]; self.vertices.len()];
        for (col, &(i, j)) in self.edges.iter().enumerate() {
            m[index[&j]][col] += 1;
            m[index[&i]][col] -= 1;
        }
        m
    }

    /// Boundary matrix from triangles to edges.
    fn boundary2(&self) -> Vec<Vec<i128>> {
        let index: BTreeMap<(usize, usize), usize> = self.edges.iter().enumerate().map(|(k, &e)| (e, k)).collect();
        let mut m = vec![vec![0i128; self.triangles.len()]; self.edges.len()];
        for (col, &(i, j, k)) in self.triangles.iter().enumerate() {
            m[index[&(j, k)]][col] += 1;
            m[index[&(i, k)]][col] -= 1;
            m[index[&(i, j)]][col] += 1;
        }
        m
    }

    fn to_json(&self) -> ComplexJson {
        ComplexJson {
            q: self.q,
            vertices: Some(self.vertices.clone()),
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
            triangles: self.triangles.iter().map(|&(i, j, k)| [i, j, k]).collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("complex serializes")
    }

    /// Parses `{"q": .., "edges": [[i, j], ..], "triangles": [[i, j, k], ..]}`
    /// with an optional `"vertices"` list; all of `0..q` when it is absent.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: ComplexJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidComplex(format!("malformed complex JSON: {e}")))?;
        let vertices = raw.vertices.unwrap_or_else(|| (0..raw.q).collect());
        Self::new(
            raw.q,
            vertices,
            raw.edges.into_iter().map(|[i, j]| (i, j)),
            raw.triangles.into_iter().map(|[i, j, k]| (i, j, k)),
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexJson {
    q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<usize>>,
    edges: Vec<[usize; 2]>,
    #[serde(default)]
    triangles: Vec<[usize; 3]>,
}

/// Rank of an integer matrix by fraction-free elimination. Falls back to
/// elimination modulo a large prime if intermediate values overflow.
fn exact_rank(mut m: Vec<Vec<i128>>) -> usize {
    let original = m.clone();
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev = 1i128;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        for r in (rank + 1)..rows {
            for c in (col + 1)..cols {
                let value = m[rank][col]
                    .checked_mul(m[r][c])
                    .zip(m[r][col].checked_mul(m[rank][c]))
                    .and_then(|(a, b)| a.checked_sub(b));
                match value {
                    Some(v) => m[r][c] = v / prev,
                    None => return modular_rank(original),
                }
            }
            m[r][col] = 0;
        }
        prev = m[rank][col];
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

fn modular_rank(m: Vec<Vec<i128>>) -> usize {
    const P: i128 = (1 << 61) - 1;
    let pow = |mut b: i128, mut e: i128| {
        let mut acc = 1i128;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % P;
            }
            b = b * b % P;
            e >>= 1;
        }
        acc
    };
    let mut m: Vec<Vec<i128>> = m.into_iter().map(|r| r.into_iter().map(|x| x.rem_euclid(P)).collect()).collect();
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = pow(m[rank][col], P - 2);
        for r in (rank + 1)..rows {
            let f = m[r][col] * inv % P;
            for c in col..cols {
                m[r][c] = (m[r][c] - f * m[rank][c]).rem_euclid(P);
            }
        }
        rank += 1;
    }
    rank
}

/// Rational Betti numbers `b0` and `b1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Betti {
    pub b0: usize,
    pub b1: usize,
}

pub fn homology_ranks(s: &IncidenceComplex) -> Betti {
    let r1 = exact_rank(s.boundary1());
    let r2 = exact_rank(s.boundary2());
    Betti {
        b0: s.vertices.len() - r1,
        b1: s.edges.len() - r1 - r2,
    }
}

/// Incidence complex of a pull-back cluster, every stratum decided by exact
/// feasibility of its linear system.
pub fn build_complex(c: &PullbackCluster) -> Result<IncidenceComplex> {
    let q = c.q();
    let vertices: Vec<usize> = (0..q).filter(|&i| c.cell_is_nonempty(i)).collect();
    let edges = c.nonempty_interfaces();
    let mut triangles = Vec::new();
    for &(i, j) in &edges {
        for k in (j + 1)..q {
            if c.junction_is_nonempty(i, j, k) {
                triangles.push((i, j, k));
            }
        }
    }
    IncidenceComplex::new(q, vertices, edges, triangles)
}

/// Unit normals on edges, antisymmetric in the edge orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeNormalAssignment {
    q: usize,
    n: usize,
    normals: BTreeMap<(usize, usize), DVector<f64>>,
}

impl EdgeNormalAssignment {
    /// Entries are directed: `((i, j), n_ij)`. Giving both orientations of an
    /// edge requires `n_ji = -n_ij` exactly.
    pub fn new(q: usize, n: usize, entries: impl IntoIterator<Item = ((usize, usize), DVector<f64>)>) -> Result<Self> {
        let mut normals = BTreeMap::new();
        for ((i, j), v) in entries {
            if i == j || i >= q || j >= q {
                return Err(Error::InvalidDimension(format!("bad edge ({i}, {j}) for q = {q}")));
            }
            if v.len() != n {
                return Err(Error::InvalidDimension(format!(
                    "normal on ({i}, {j}) has length {}, expected {n}",
                    v.len()
                )));
            }
            if (v.norm() - 1.0).abs() > NORMAL_UNIT_TOL {
                return Err(Error::Domain(format!("normal on ({i}, {j}) has norm {}", v.norm())));
            }
            let (key, value) = if i < j { ((i, j), v) } else { ((j, i), -v) };
            if let Some(existing) = normals.get(&key) {
                if existing != &value {
                    return Err(Error::Domain(format!(
                        "normals on ({}, {}) and ({}, {}) are not opposite",
                        key.0, key.1, key.1, key.0
                    )));
                }
            }
            normals.insert(key, value);
        }
        Ok(Self { q, n, normals })
    }

    /// Normals `B(e_j - e_i)/|B(e_j - e_i)|` of a cluster on the given edges.
    pub fn from_cluster(c: &PullbackCluster, edges: &[(usize, usize)]) -> Result<Self> {
        let entries = edges
            .iter()
            .map(|&(i, j)| c.normal(i, j).map(|v| ((i, j), v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(c.q(), c.n(), entries)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `n_ij`, oriented from `i` to `j`.
    pub fn get(&self, i: usize, j: usize) -> Option<DVector<f64>> {
        if i < j {
            self.normals.get(&(i, j)).cloned()
        } else {
            self.normals.get(&(j, i)).map(|v| -v)
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.normals.keys().copied()
    }
}

#[derive(Debug, Clone)]
pub struct Recovery {
    /// `n x q`, with `B 1 = 0`.
    pub b: DMatrix<f64>,
    /// `sqrt(sum |n_ij - B(e_j - e_i)|^2)` over the edges.
    pub residual: f64,
    /// Largest defect `|sum n_ij|` over the fundamental cycles.
    pub cycle_defect: f64,
}

/// Least-squares `B` with `B(e_j - e_i) = n_ij` on every edge of `s`.
pub fn recover_b(s: &IncidenceComplex, normals: &EdgeNormalAssignment) -> Result<Recovery> {
    let q = s.q();
    if normals.q() != q {
        return Err(Error::InvalidDimension(format!(
            "normals are for q = {}, complex has q = {q}",
            normals.q()
        )));
    }
    if s.vertices().len() != q {
        return Err(Error::Underdetermined(format!(
            "only {} of {q} cells are vertices",
            s.vertices().len()
        )));
    }
    let n = normals.n();
    let mut edge_normals = Vec::with_capacity(s.edges().len());
    for &(i, j) in s.edges() {
        let v = normals
            .get(i, j)
            .ok_or_else(|| Error::InvalidDimension(format!("edge ({i}, {j}) has no normal")))?;
        edge_normals.push(((i, j), v));
    }

    // potentials along a BFS tree; every other edge closes one fundamental cycle
    let mut adjacency = vec![Vec::new(); q];
    for (k, &((i, j), _)) in edge_normals.iter().enumerate() {
        adjacency[i].push((j, k));
        adjacency[j].push((i, k));
    }
    let mut potential: Vec<Option<DVector<f64>>> = vec![None; q];
    let mut tree_edge = vec![false; edge_normals.len()];
    potential[0] = Some(DVector::zeros(n));
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &(w, k) in &adjacency[u] {
            if potential[w].is_none() {
                let ((i, _), ref v) = edge_normals[k];
                let step = if i == u { v.clone() } else { -v };
                potential[w] = Some(potential[u].as_ref().unwrap() + step);
                tree_edge[k] = true;
                queue.push_back(w);
            }
        }
    }
    if potential.iter().any(Option::is_none) {
        return Err(Error::Underdetermined("the edge graph is disconnected".into()));
    }
    let cycle_defect = edge_normals
        .iter()
        .zip(&tree_edge)
        .filter(|(_, tree)| !**tree)
        .map(|(((i, j), v), _)| {
            let (pi, pj) = (potential[*i].as_ref().unwrap(), potential[*j].as_ref().unwrap());
            (pj - pi - v).norm()
        })
        .fold(0.0, f64::max);
    if cycle_defect > CYCLE_DEFECT_TOL {
        return Err(Error::Inconsistent { defect: cycle_defect });
    }

    let unit = InterfaceAreaTable::from_pairs(q, |i, j| if s.edges().contains(&(i, j)) { 1.0 } else { 0.0 })?;
    let pinv = pinv_on_e(&build_la(&unit));
    let mut rhs = DMatrix::zeros(q, n);
    for ((i, j), v) in &edge_normals {
        for a in 0..n {
            rhs[(*j, a)] += v[a];
            rhs[(*i, a)] -= v[a];
        }
    }
    let b = (pinv.operator.matrix() * rhs).transpose();
    let residual = edge_normals
        .iter()
        .map(|((i, j), v)| (v - (b.column(*j) - b.column(*i))).norm_squared())
        .sum::<f64>()
        .sqrt();
    Ok(Recovery {
        b,
        residual,
        cycle_defect,
    })
}
