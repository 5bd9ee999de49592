//! Finite multigraphs in dart form and their certification.
//!
//! Every undirected edge `i` is stored as the dart pair `2i` (as given) and
//! `2i + 1` (reversed); the involution is `d ^ 1`. The even dart of a pair is
//! the designated one wherever a canonical orientation is needed.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::mc;

pub type VertexId = usize;
pub type DartId = usize;

/// Attempts made by the random generators before giving up.
pub const REJECTION_BUDGET: usize = 1000;

/// Graphs with at most this many vertices get a dense eigensolve.
pub const DENSE_SPECTRUM_LIMIT: usize = 1024;

const POWER_ITERATION_BUDGET: usize = 200_000;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    NoVertices,
    #[error("vertex {vertex} out of range for {vertex_count} vertices")]
    VertexOutOfRange { vertex: usize, vertex_count: usize },
    #[error("n*deg = {n}*{deg} is odd")]
    Parity { n: usize, deg: usize },
    #[error("invalid regular-graph request: {0}")]
    InvalidDegree(String),
    #[error("no simple connected graph found after {attempts} attempts")]
    RejectionBudgetExhausted { attempts: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("power iteration did not reach tolerance {tol} within {iterations} iterations")]
    NonConvergence { tol: f64, iterations: usize },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("graph file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dart {
    pub source: VertexId,
    pub target: VertexId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertex_count: usize,
    darts: Vec<Dart>,
    out: Vec<Vec<DartId>>,
}

/// Builds a graph from undirected edges; each edge becomes a dart pair.
pub fn build_graph(edges: &[(VertexId, VertexId)], vertex_count: usize) -> Result<Graph, GraphError> {
    Graph::from_edges(vertex_count, edges)
}

impl Graph {
    pub fn from_edges(vertex_count: usize, edges: &[(VertexId, VertexId)]) -> Result<Self, GraphError> {
        if vertex_count == 0 {
            return Err(GraphError::NoVertices);
        }
        let mut darts = Vec::with_capacity(2 * edges.len());
        let mut out = vec![Vec::new(); vertex_count];
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= vertex_count {
                    return Err(GraphError::VertexOutOfRange { vertex: x, vertex_count });
                }
            }
            out[u].push(darts.len());
            darts.push(Dart { source: u, target: v });
            out[v].push(darts.len());
            darts.push(Dart { source: v, target: u });
        }
        Ok(Graph { vertex_count, darts, out })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn dart_count(&self) -> usize {
        self.darts.len()
    }

    pub fn edge_count(&self) -> usize {
        self.darts.len() / 2
    }

    pub fn dart(&self, d: DartId) -> Dart {
        self.darts[d]
    }

    pub fn darts(&self) -> &[Dart] {
        &self.darts
    }

    /// The involution pairing a dart with its reverse.
    #[inline]
    pub fn reverse(&self, d: DartId) -> DartId {
        d ^ 1
    }

    /// Darts leaving `v`.
    pub fn out_darts(&self, v: VertexId) -> &[DartId] {
        &self.out[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.out[v].len()
    }

    pub fn min_degree(&self) -> usize {
        self.out.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.out.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Undirected edges in insertion order, read off the designated darts.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.darts.iter().step_by(2).map(|d| (d.source, d.target))
    }

    /// No loops and no parallel edges.
    pub fn is_simple(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.edge_count());
        self.edges().all(|(u, v)| u != v && seen.insert((u.min(v), u.max(v))))
    }

    /// Hop distances from `source`; `None` marks unreachable vertices.
    pub fn bfs_distances(&self, source: VertexId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.vertex_count];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &d in &self.out[u] {
                let w = self.darts[d].target;
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(Option::is_some)
    }

    /// Whether the vertex map `perm` is a graph automorphism (multiplicities respected).
    pub fn is_automorphism(&self, perm: &[VertexId]) -> bool {
        if perm.len() != self.vertex_count {
            return false;
        }
        let mut hit = vec![false; self.vertex_count];
        for &p in perm {
            if p >= self.vertex_count || std::mem::replace(&mut hit[p], true) {
                return false;
            }
        }
        let mut count = std::collections::HashMap::new();
        for (u, v) in self.edges() {
            *count.entry((u.min(v), u.max(v))).or_insert(0i64) += 1;
        }
        for (u, v) in self.edges() {
            let (a, b) = (perm[u], perm[v]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) -= 1;
        }
        count.values().all(|&c| c == 0)
    }

    /// Short content hash identifying the graph in labeling files.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_text().as_bytes());
        let digest = hasher.finalize();
        let mut s = format!("v{}e{}-", self.vertex_count, self.edge_count());
        for b in &digest[..8] {
            write!(s, "{b:02x}").unwrap();
        }
        s
    }

    /// Parses the `vertices <n>` / `edge <u> <v>` text format.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut vertex_count = None;
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| GraphError::Parse { line: line_no, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad integer {s:?}")));
            match fields.as_slice() {
                ["vertices", n] => {
                    if vertex_count.is_some() {
                        return Err(err("duplicate vertices line".into()));
                    }
                    vertex_count = Some(num(n)?);
                }
                ["edge", u, v] => {
                    if vertex_count.is_none() {
                        return Err(err("edge before vertices line".into()));
                    }
                    edges.push((num(u)?, num(v)?));
                }
                _ => return Err(err(format!("unrecognized line {line:?}"))),
            }
        }
        let n = vertex_count.ok_or(GraphError::Parse { line: 0, message: "missing vertices line".into() })?;
        Graph::from_edges(n, &edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
        Graph::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("vertices {}\n", self.vertex_count);
        for (u, v) in self.edges() {
            writeln!(s, "edge {u} {v}").unwrap();
        }
        s
    }

    // Small named graphs used by tests, examples and the CLI.

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Graph::from_edges(n, &edges).expect("valid complete graph")
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges).expect("valid cycle")
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_edges(n, &edges).expect("valid path")
    }

    /// Star with `leaves` leaves around center 0.
    pub fn star(leaves: usize) -> Self {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::from_edges(leaves + 1, &edges).expect("valid star")
    }

    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        let edges: Vec<_> = (0..a).flat_map(|u| (0..b).map(move |v| (u, a + v))).collect();
        Graph::from_edges(a + b, &edges).expect("valid complete bipartite graph")
    }

    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, i + 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Graph::from_edges(10, &edges).expect("valid Petersen graph")
    }
}

fn canonical_edges(mut edges: Vec<(VertexId, VertexId)>) -> Vec<(VertexId, VertexId)> {
    for e in edges.iter_mut() {
        if e.0 > e.1 {
            *e = (e.1, e.0);
        }
    }
    edges.sort_unstable();
    edges
}

fn has_loop_or_multi(edges: &[(VertexId, VertexId)]) -> bool {
    edges.iter().any(|&(u, v)| u == v) || edges.windows(2).any(|w| w[0] == w[1])
}

/// Simple connected `deg`-regular graph on `n` vertices from the configuration
/// model, rejecting loops, multi-edges and disconnected outcomes.
pub fn random_regular(n: usize, deg: usize, seed: u64) -> Result<Graph, GraphError> {
    if (n * deg) % 2 == 1 {
        return Err(GraphError::Parity { n, deg });
    }
    if deg < 3 {
        return Err(GraphError::InvalidDegree(format!("degree {deg} < 3")));
    }
    if n <= deg {
        return Err(GraphError::InvalidDegree(format!("need n > deg, got n={n}, deg={deg}")));
    }
    let mut rng = mc::stream(seed, mc::tags::GRAPH, 0);
    let mut stubs: Vec<VertexId> = (0..n).flat_map(|v| std::iter::repeat_n(v, deg)).collect();
    for _ in 0..REJECTION_BUDGET {
        stubs.shuffle(&mut rng);
        let edges = canonical_edges(stubs.chunks_exact(2).map(|p| (p[0], p[1])).collect());
        if has_loop_or_multi(&edges) {
            continue;
        }
        let g = Graph::from_edges(n, &edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::RejectionBudgetExhausted { attempts: REJECTION_BUDGET })
}

/// Simple connected bipartite `deg`-regular graph with `side` vertices per
/// class (vertices `0..side` and `side..2*side`), by matching stubs across the
/// classes and rejecting multi-edges and disconnected outcomes.
pub fn random_bipartite_regular(side: usize, deg: usize, seed: u64) -> Result<Graph, GraphError> {
    if deg < 3 {
        return Err(GraphError::InvalidDegree(format!("degree {deg} < 3")));
    }
    if side < deg {
        return Err(GraphError::InvalidDegree(format!("need side >= deg, got side={side}, deg={deg}")));
    }
    let mut rng = mc::stream(seed, mc::tags::GRAPH, 1);
    let left: Vec<VertexId> = (0..side).flat_map(|v| std::iter::repeat_n(v, deg)).collect();
    let mut right: Vec<VertexId> = (side..2 * side).flat_map(|v| std::iter::repeat_n(v, deg)).collect();
    for _ in 0..REJECTION_BUDGET {
        right.shuffle(&mut rng);
        let edges = canonical_edges(left.iter().copied().zip(right.iter().copied()).collect());
        if has_loop_or_multi(&edges) {
            continue;
        }
        let g = Graph::from_edges(2 * side, &edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::RejectionBudgetExhausted { attempts: REJECTION_BUDGET })
}

/// Shortest cycle through `source`'s BFS tree, ignoring cycles of length
/// `>= cap`. Loops count as length 1, parallel edges as length 2.
fn shortest_cycle_from(g: &Graph, source: VertexId, cap: u32) -> Option<u32> {
    let mut dist = vec![u32::MAX; g.vertex_count];
    let mut parent_dart = vec![usize::MAX; g.vertex_count];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    let mut best = cap;
    while let Some(u) = queue.pop_front() {
        if 2 * dist[u] + 1 >= best {
            break;
        }
        for &d in g.out_darts(u) {
            if parent_dart[u] != usize::MAX && d == g.reverse(parent_dart[u]) {
                continue;
            }
            let w = g.darts[d].target;
            if dist[w] == u32::MAX {
                dist[w] = dist[u] + 1;
                parent_dart[w] = d;
                queue.push_back(w);
            } else {
                best = best.min(dist[u] + dist[w] + 1);
            }
        }
    }
    (best < cap).then_some(best)
}

/// Length of the shortest cycle, `None` for forests.
pub fn girth(g: &Graph) -> Option<u32> {
    (0..g.vertex_count).into_par_iter().filter_map(|s| shortest_cycle_from(g, s, u32::MAX)).min()
}

/// Maximum BFS eccentricity.
pub fn diameter(g: &Graph) -> Result<u32, GraphError> {
    (0..g.vertex_count)
        .into_par_iter()
        .map(|s| g.bfs_distances(s).into_iter().try_fold(0u32, |m, d| d.map(|d| m.max(d))).ok_or(GraphError::Disconnected))
        .try_reduce(|| 0, |a, b| Ok(a.max(b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpectralMethod {
    Dense,
    PowerIteration,
}

/// Nontrivial spectrum summary of the simple-random-walk transition operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    /// Second-largest eigenvalue by signed value.
    pub lambda2: f64,
    /// Largest absolute value among the nontrivial eigenvalues.
    pub lambda_max_abs: f64,
    pub method: SpectralMethod,
}

/// Second-largest eigenvalue of the transition operator.
pub fn spectral_gap(g: &Graph, tol: f64) -> Result<f64, GraphError> {
    spectrum(g, tol).map(|s| s.lambda2)
}

/// Dense eigensolve for small graphs, deflated power iteration otherwise.
pub fn spectrum(g: &Graph, tol: f64) -> Result<SpectralEstimate, GraphError> {
    if g.vertex_count <= DENSE_SPECTRUM_LIMIT {
        spectrum_dense(g, tol)
    } else {
        spectrum_power(g, tol)
    }
}

fn walk_preconditions(g: &Graph, tol: f64) -> Result<(), GraphError> {
    if !(tol > 0.0) {
        return Err(GraphError::BadTolerance(tol));
    }
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    Ok(())
}

/// Eigenvalues of `D^{-1/2} A D^{-1/2}`, which shares its spectrum with `D^{-1} A`.
pub fn spectrum_dense(g: &Graph, tol: f64) -> Result<SpectralEstimate, GraphError> {
    walk_preconditions(g, tol)?;
    let n = g.vertex_count;
    if n == 1 {
        return Ok(SpectralEstimate { lambda2: 0.0, lambda_max_abs: 0.0, method: SpectralMethod::Dense });
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for d in &g.darts {
        let w = 1.0 / ((g.degree(d.source) * g.degree(d.target)) as f64).sqrt();
        m[(d.source, d.target)] += w;
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let nontrivial = &eig[1..];
    Ok(SpectralEstimate {
        lambda2: nontrivial[0],
        lambda_max_abs: nontrivial.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        method: SpectralMethod::Dense,
    })
}

struct SymmetricWalk<'a> {
    g: &'a Graph,
    inv_sqrt_deg: Vec<f64>,
    /// Unit top eigenvector, proportional to `sqrt(deg)`.
    top: Vec<f64>,
}

impl<'a> SymmetricWalk<'a> {
    fn new(g: &'a Graph) -> Self {
        let inv_sqrt_deg: Vec<f64> = (0..g.vertex_count).map(|v| 1.0 / (g.degree(v) as f64).sqrt()).collect();
        let norm = (g.dart_count() as f64).sqrt();
        let top = (0..g.vertex_count).map(|v| (g.degree(v) as f64).sqrt() / norm).collect();
        SymmetricWalk { g, inv_sqrt_deg, top }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (v, yv) in y.iter_mut().enumerate() {
            let s: f64 = self.g.out[v]
                .iter()
                .map(|&d| {
                    let w = self.g.darts[d].target;
                    x[w] * self.inv_sqrt_deg[w]
                })
                .sum();
            *yv = s * self.inv_sqrt_deg[v];
        }
    }

    fn deflate(&self, x: &mut [f64]) {
        let c = dot(x, &self.top);
        for (xi, ti) in x.iter_mut().zip(&self.top) {
            *xi -= c * ti;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

/// Power iteration on the deflated operator `(S + s I)` (or `S^2` when
/// `square`), stopping when the eigen-residual of `S` (resp. `S^2`) drops
/// below `tol`. Returns the Rayleigh quotient.
fn deflated_power(op: &SymmetricWalk<'_>, tol: f64, square: bool) -> Result<f64, GraphError> {
    let n = op.g.vertex_count;
    let mut rng = mc::stream(0x5eed, mc::tags::GRAPH, 2);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    op.deflate(&mut x);
    normalize(&mut x);
    let mut sx = vec![0.0; n];
    let mut ssx = vec![0.0; n];
    for _ in 0..POWER_ITERATION_BUDGET {
        op.apply(&x, &mut sx);
        let (theta, residual) = if square {
            op.apply(&sx, &mut ssx);
            let theta = dot(&x, &ssx);
            let r = ssx.iter().zip(&x).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
            (theta, r)
        } else {
            let theta = dot(&x, &sx);
            let r = sx.iter().zip(&x).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
            (theta, r)
        };
        if residual <= tol {
            return Ok(theta);
        }
        if square {
            x.copy_from_slice(&ssx);
        } else {
            // shift by +1 so the top of the deflated spectrum dominates in value
            for (xi, si) in x.iter_mut().zip(&sx) {
                *xi += si;
            }
        }
        op.deflate(&mut x);
        if normalize(&mut x) == 0.0 {
            return Ok(0.0);
        }
    }
    Err(GraphError::NonConvergence { tol, iterations: POWER_ITERATION_BUDGET })
}

pub fn spectrum_power(g: &Graph, tol: f64) -> Result<SpectralEstimate, GraphError> {
    walk_preconditions(g, tol)?;
    if g.vertex_count == 1 {
        return Ok(SpectralEstimate { lambda2: 0.0, lambda_max_abs: 0.0, method: SpectralMethod::PowerIteration });
    }
    let op = SymmetricWalk::new(g);
    let lambda2 = deflated_power(&op, tol, false)?;
    // residual tol on S^2 gives roughly tol/(2|lambda|) on |lambda|
    let squared = deflated_power(&op, tol, true)?;
    Ok(SpectralEstimate {
        lambda2,
        lambda_max_abs: squared.max(0.0).sqrt().max(lambda2.abs()),
        method: SpectralMethod::PowerIteration,
    })
}

/// Measured hypotheses on a candidate graph.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphCertificate {
    pub vertex_count: usize,
    pub edge_count: usize,
    /// `null` encodes an infinite girth (forest).
    pub girth: Option<u32>,
    pub diameter: u32,
    pub min_degree: usize,
    pub max_degree: usize,
    pub lambda2: f64,
    pub lambda_max_abs: f64,
    pub admissible: bool,
    /// diameter / girth, 0 for forests.
    pub ratio_C: f64,
    /// girth / ln(vertex_count), the implied logarithmic girth constant.
    pub log_girth_constant: Option<f64>,
    pub d: usize,
    pub C: f64,
}

pub const CERTIFICATE_TOL: f64 = 1e-9;

/// Certifies degree bounds, the diameter/girth ratio, and the spectrum.
/// Inadmissibility is reported in the certificate; only disconnected input errors.
pub fn check_admissible(g: &Graph, d: usize, c: f64) -> Result<GraphCertificate, GraphError> {
    let diameter = diameter(g)?;
    let girth = girth(g);
    let spec = spectrum(g, CERTIFICATE_TOL)?;
    let (min_degree, max_degree) = (g.min_degree(), g.max_degree());
    let fits_ratio = match girth {
        Some(gi) => diameter as f64 <= c * gi as f64,
        None => true,
    };
    let ln_n = (g.vertex_count as f64).ln();
    Ok(GraphCertificate {
        vertex_count: g.vertex_count,
        edge_count: g.edge_count(),
        girth,
        diameter,
        min_degree,
        max_degree,
        lambda2: spec.lambda2,
        lambda_max_abs: spec.lambda_max_abs,
        admissible: min_degree >= 3 && max_degree <= d && fits_ratio,
        ratio_C: girth.map_or(0.0, |gi| diameter as f64 / gi as f64),
        log_girth_constant: match girth {
            Some(gi) if ln_n > 0.0 => Some(gi as f64 / ln_n),
            _ => None,
        },
        d,
        C: c,
    })
}
