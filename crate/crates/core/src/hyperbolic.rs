//! Isometric actions of `F_k` seen through orbit points: distances, Gromov
//! products, the four-point hyperbolicity constant and the chaining bound.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{DartId, Graph, GraphError, VertexId};
use crate::labeling::{pushforward, Labeling, LabelingError, Presentation};
use crate::word::{tree_dist, Generator, Word};

/// Largest space for which δ is computed by brute force when not supplied.
pub const AUTO_DELTA_LIMIT: usize = 64;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HyperbolicError {
    #[error("point {0} does not belong to this action")]
    UnknownPoint(String),
    #[error("word uses generator a{index} but the action only defines k = {k}")]
    GeneratorOutOfRange { index: u16, k: u16 },
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("need {expected} junction products for {segments} segments, got {found}")]
    LengthMismatch { segments: usize, expected: usize, found: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Labeling(#[from] LabelingError),
    #[error("i/o error: {0}")]
    Io(String),
}

/// A point of the space acted on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Point {
    Trivial,
    Tree(Word),
    Vertex(VertexId),
}

/// Action on a finite graph by automorphisms, one permutation per letter.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteAction {
    space: Graph,
    basepoint: VertexId,
    /// `perms[2(i-1)]` is `ai`, `perms[2(i-1)+1]` is `Ai`.
    perms: Vec<Vec<VertexId>>,
    dist: Vec<u32>,
    delta: f64,
}

fn slot(g: Generator) -> usize {
    2 * (g.index() as usize - 1) + usize::from(!g.is_positive())
}

fn invert(perm: &[VertexId]) -> Vec<VertexId> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

impl FiniteAction {
    /// `images[i]` is the permutation for generator `a(i+1)`; inverses are derived.
    pub fn new(
        space: Graph,
        basepoint: VertexId,
        images: Vec<Vec<VertexId>>,
        delta: Option<f64>,
    ) -> Result<Self, HyperbolicError> {
        let n = space.vertex_count();
        if basepoint >= n {
            return Err(HyperbolicError::InvalidAction(format!("basepoint {basepoint} out of range")));
        }
        if images.is_empty() {
            return Err(HyperbolicError::InvalidAction("no generator images".into()));
        }
        let mut perms = Vec::with_capacity(2 * images.len());
        for (i, perm) in images.into_iter().enumerate() {
            if !space.is_automorphism(&perm) {
                return Err(HyperbolicError::InvalidAction(format!("image of a{} is not an automorphism", i + 1)));
            }
            let inv = invert(&perm);
            perms.push(perm);
            perms.push(inv);
        }
        let mut dist = vec![0u32; n * n];
        for s in 0..n {
            for (t, d) in space.bfs_distances(s).into_iter().enumerate() {
                dist[s * n + t] = d.ok_or(GraphError::Disconnected)?;
            }
        }
        let mut action = FiniteAction { space, basepoint, perms, dist, delta: 0.0 };
        action.delta = match delta {
            Some(d) if d >= 0.0 => d,
            Some(d) => return Err(HyperbolicError::InvalidAction(format!("negative delta {d}"))),
            None if n <= AUTO_DELTA_LIMIT => {
                let all: Vec<Point> = (0..n).map(Point::Vertex).collect();
                four_point_delta_dense(&all, |p, q| action.vertex_dist(p, q))
            }
            None => {
                return Err(HyperbolicError::InvalidAction(format!(
                    "space has {n} vertices; supply delta explicitly above {AUTO_DELTA_LIMIT}"
                )))
            }
        };
        Ok(action)
    }

    /// Each generator `a(i+1)` rotates the `m`-cycle by `shifts[i]`.
    pub fn rotation(m: usize, basepoint: VertexId, shifts: &[usize]) -> Result<Self, HyperbolicError> {
        let images = shifts.iter().map(|s| (0..m).map(|v| (v + s) % m).collect()).collect();
        FiniteAction::new(Graph::cycle(m), basepoint, images, None)
    }

    pub fn space(&self) -> &Graph {
        &self.space
    }

    pub fn basepoint(&self) -> VertexId {
        self.basepoint
    }

    pub fn rank(&self) -> u16 {
        (self.perms.len() / 2) as u16
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn perm(&self, g: Generator) -> Result<&[VertexId], HyperbolicError> {
        self.perms
            .get(slot(g))
            .map(Vec::as_slice)
            .ok_or(HyperbolicError::GeneratorOutOfRange { index: g.index(), k: self.rank() })
    }

    /// `w . x` with letters applied right to left.
    pub fn act(&self, w: &Word, x: VertexId) -> Result<VertexId, HyperbolicError> {
        w.letters().iter().rev().try_fold(x, |x, &g| Ok(self.perm(g)?[x]))
    }

    /// The permutation of `w` on all vertices.
    pub fn permutation(&self, w: &Word) -> Result<Vec<VertexId>, HyperbolicError> {
        let mut p: Vec<VertexId> = (0..self.space.vertex_count()).collect();
        for &g in w.letters().iter().rev() {
            let s = self.perm(g)?;
            p.iter_mut().for_each(|x| *x = s[*x]);
        }
        Ok(p)
    }

    fn vertex_dist(&self, p: &Point, q: &Point) -> f64 {
        match (p, q) {
            (Point::Vertex(a), Point::Vertex(b)) => self.dist[a * self.space.vertex_count() + b] as f64,
            _ => f64::NAN,
        }
    }

    pub fn to_file(&self, graph_ref: &str) -> ActionFile {
        let images = (0..self.rank() as usize).map(|i| (format!("a{}", i + 1), self.perms[2 * i].clone())).collect();
        ActionFile { graph: graph_ref.to_string(), basepoint: self.basepoint, images, delta: Some(self.delta) }
    }
}

/// On-disk finite-graph action:
/// `{graph: <graph reference>, basepoint, images: {generator-name: permutation}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionFile {
    pub graph: String,
    pub basepoint: VertexId,
    pub images: BTreeMap<String, Vec<VertexId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl ActionFile {
    /// Resolves the graph reference relative to `base_dir`.
    pub fn into_action(self, base_dir: &Path) -> Result<FiniteAction, HyperbolicError> {
        let space = crate::graph_ref::resolve(&self.graph, base_dir)?;
        let mut positive: BTreeMap<u16, Vec<VertexId>> = BTreeMap::new();
        let mut negative: BTreeMap<u16, Vec<VertexId>> = BTreeMap::new();
        for (name, perm) in self.images {
            let g: Generator = name.parse().map_err(|e| HyperbolicError::InvalidAction(format!("image key {name:?}: {e}")))?;
            let target = if g.is_positive() { &mut positive } else { &mut negative };
            target.insert(g.index(), perm);
        }
        let k = positive.keys().copied().max().unwrap_or(0);
        if positive.len() != k as usize {
            return Err(HyperbolicError::InvalidAction("generator images must cover a1..ak".into()));
        }
        for (i, inv) in &negative {
            match positive.get(i) {
                Some(p) if p.len() == inv.len() && invert(p) == *inv => {}
                _ => return Err(HyperbolicError::InvalidAction(format!("image of A{i} is not the inverse of a{i}"))),
            }
        }
        FiniteAction::new(space, self.basepoint, positive.into_values().collect(), self.delta)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<FiniteAction, HyperbolicError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HyperbolicError::Io(format!("{}: {e}", path.display())))?;
        let file: ActionFile = serde_json::from_str(&text).map_err(|e| HyperbolicError::InvalidAction(e.to_string()))?;
        file.into_action(path.parent().unwrap_or(Path::new(".")))
    }
}

/// An isometric action of `F_k` with a basepoint.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionOracle {
    /// Everything acts as the identity on a single point.
    Trivial,
    /// The left action on the Cayley tree, basepoint the identity.
    Tree {
        k: u16,
    },
    FiniteGraph(FiniteAction),
}

impl ActionOracle {
    pub fn kind(&self) -> &'static str {
        match self {
            ActionOracle::Trivial => "trivial",
            ActionOracle::Tree { .. } => "tree",
            ActionOracle::FiniteGraph(_) => "finite-graph",
        }
    }

    pub fn basepoint(&self) -> Point {
        match self {
            ActionOracle::Trivial => Point::Trivial,
            ActionOracle::Tree { .. } => Point::Tree(Word::identity()),
            ActionOracle::FiniteGraph(a) => Point::Vertex(a.basepoint),
        }
    }

    /// Hyperbolicity constant of the space (0 for trees and the point).
    pub fn delta(&self) -> f64 {
        match self {
            ActionOracle::FiniteGraph(a) => a.delta,
            _ => 0.0,
        }
    }

    /// The orbit point `w . x0`.
    pub fn apply(&self, w: &Word) -> Result<Point, HyperbolicError> {
        match self {
            ActionOracle::Trivial => Ok(Point::Trivial),
            ActionOracle::Tree { k } => match w.rank_used() {
                i if i > *k => Err(HyperbolicError::GeneratorOutOfRange { index: i, k: *k }),
                _ => Ok(Point::Tree(w.clone())),
            },
            ActionOracle::FiniteGraph(a) => a.act(w, a.basepoint).map(Point::Vertex),
        }
    }

    pub fn dist(&self, p: &Point, q: &Point) -> Result<f64, HyperbolicError> {
        let unknown = |x: &Point| HyperbolicError::UnknownPoint(format!("{x:?}"));
        match (self, p, q) {
            (ActionOracle::Trivial, Point::Trivial, Point::Trivial) => Ok(0.0),
            (ActionOracle::Tree { .. }, Point::Tree(x), Point::Tree(y)) => Ok(tree_dist(x, y) as f64),
            (ActionOracle::FiniteGraph(a), Point::Vertex(x), Point::Vertex(y)) => {
                let n = a.space.vertex_count();
                if *x >= n {
                    return Err(unknown(p));
                }
                if *y >= n {
                    return Err(unknown(q));
                }
                Ok(a.dist[x * n + y] as f64)
            }
            (_, Point::Trivial | Point::Tree(_) | Point::Vertex(_), _) => Err(unknown(if self.owns(p) { q } else { p })),
        }
    }

    fn owns(&self, p: &Point) -> bool {
        matches!(
            (self, p),
            (ActionOracle::Trivial, Point::Trivial)
                | (ActionOracle::Tree { .. }, Point::Tree(_))
                | (ActionOracle::FiniteGraph(_), Point::Vertex(_))
        )
    }

    /// `d(x0, w . x0)`.
    pub fn displacement(&self, w: &Word) -> Result<f64, HyperbolicError> {
        match self {
            ActionOracle::Trivial => Ok(0.0),
            ActionOracle::Tree { .. } => {
                self.apply(w)?;
                Ok(w.len() as f64)
            }
            ActionOracle::FiniteGraph(_) => self.dist(&self.basepoint(), &self.apply(w)?),
        }
    }

    /// `(x|y)_base`.
    pub fn gromov_product(&self, x: &Point, y: &Point, base: &Point) -> Result<f64, HyperbolicError> {
        Ok((self.dist(base, x)? + self.dist(base, y)? - self.dist(x, y)?) / 2.0)
    }

    /// Whether every relator acts as the identity, i.e. the action factors
    /// through the quotient by the relators.
    pub fn kills_relators(&self, p: &Presentation) -> Result<bool, HyperbolicError> {
        match self {
            ActionOracle::Trivial => Ok(true),
            // the action on the tree is free
            ActionOracle::Tree { .. } => Ok(p.relators.iter().all(Word::is_empty)),
            ActionOracle::FiniteGraph(a) => {
                for r in &p.relators {
                    let perm = a.permutation(r)?;
                    if perm.iter().enumerate().any(|(i, &x)| i != x) {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

/// Pull-back distance between the ends of a path:
/// `d(x0, beta(path) . x0)`.
pub fn pullback_delta(o: &ActionOracle, g: &Graph, l: &Labeling, path: &[DartId]) -> Result<f64, HyperbolicError> {
    let w = pushforward(g, l, path)?;
    o.displacement(&w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    /// Distances between consecutive chain points.
    pub segment_dists: Vec<f64>,
    /// Gromov products at the chain points, both ends included (zero by convention).
    pub products: Vec<f64>,
    pub lower_bound: f64,
}

/// `sum_i (D_i - G_i - G_{i+1} - 50 delta)` over the `xi = D.len()` segments;
/// `G` has `xi + 1` entries and every interior product is subtracted twice.
pub fn chaining_lower_bound(segments: &[f64], products: &[f64], delta: f64) -> Result<f64, HyperbolicError> {
    let xi = segments.len();
    if products.len() != xi + 1 {
        return Err(HyperbolicError::LengthMismatch { segments: xi, expected: xi + 1, found: products.len() });
    }
    Ok(segments.iter().enumerate().map(|(i, d)| d - products[i] - products[i + 1] - 50.0 * delta).sum())
}

/// Segment distances, junction products and the chaining bound of a chain of
/// points `p_0, ..., p_xi`; the end products are 0 by convention.
pub fn chain_stats(o: &ActionOracle, points: &[Point]) -> Result<ChainStats, HyperbolicError> {
    let xi = points.len().saturating_sub(1);
    let segment_dists = points.windows(2).map(|w| o.dist(&w[0], &w[1])).collect::<Result<Vec<_>, _>>()?;
    let mut products = vec![0.0; xi + 1];
    for i in 1..xi {
        products[i] = o.gromov_product(&points[i - 1], &points[i + 1], &points[i])?;
    }
    let lower_bound = chaining_lower_bound(&segment_dists, &products, o.delta())?;
    Ok(ChainStats { segment_dists, products, lower_bound })
}

fn four_point_delta_dense(points: &[Point], dist: impl Fn(&Point, &Point) -> f64) -> f64 {
    let n = points.len();
    if n < 4 {
        return 0.0;
    }
    let mut d = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            d[a * n + b] = dist(&points[a], &points[b]);
        }
    }
    let mut best = 0.0f64;
    for w in 0..n {
        let gp = |x: usize, y: usize| (d[w * n + x] + d[w * n + y] - d[x * n + y]) / 2.0;
        for x in 0..n {
            for y in 0..n {
                let xy = gp(x, y);
                for z in 0..n {
                    best = best.max(gp(x, z).min(gp(y, z)) - xy);
                }
            }
        }
    }
    best
}

/// `max min((x|z)_w, (y|z)_w) - (x|y)_w` over all quadruples; 0 for fewer than 4 points.
pub fn four_point_delta(points: &[Point], o: &ActionOracle) -> Result<f64, HyperbolicError> {
    for p in points {
        o.dist(p, p)?;
    }
    Ok(four_point_delta_dense(points, |p, q| o.dist(p, q).expect("validated points")))
}
