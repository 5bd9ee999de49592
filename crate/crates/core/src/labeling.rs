//! Symmetric random labelings of graph edges by raw strings over the
//! generators, pushforward of paths, and the relator basis of the quotient.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{DartId, Graph, VertexId};
use crate::mc;
use crate::word::{format_letters, parse_letters, Generator, Word};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LabelingError {
    #[error("j must be at least 1")]
    ZeroLength,
    #[error("k must be at least 2, got {0}")]
    RankTooSmall(u16),
    #[error("path is not contiguous at position {position}")]
    NonContiguousPath { position: usize },
    #[error("dart {0} does not exist")]
    UnknownDart(DartId),
    #[error("labeling was made for graph {expected}, not {found}")]
    GraphMismatch { expected: String, found: String },
    #[error("bad labeling: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// A sample point of the symmetric labeling space: one raw string of
/// exactly `j` letters per dart, reversed and inverted across each pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    graph: String,
    j: usize,
    k: u16,
    seed: u64,
    labels: Vec<Vec<Generator>>,
}

fn formal_inverse(raw: &[Generator]) -> Vec<Generator> {
    raw.iter().rev().map(|g| g.inverse()).collect()
}

/// Draws a uniform string in `S^j` for every designated dart; edge `i` uses
/// its own RNG stream so the result does not depend on sampling order.
pub fn sample_labeling(g: &Graph, j: usize, k: u16, seed: u64) -> Result<Labeling, LabelingError> {
    if j == 0 {
        return Err(LabelingError::ZeroLength);
    }
    if k < 2 {
        return Err(LabelingError::RankTooSmall(k));
    }
    let mut labels = Vec::with_capacity(g.dart_count());
    for edge in 0..g.edge_count() {
        let mut rng = mc::stream(seed, mc::tags::LABEL_EDGE, edge as u64);
        let forward: Vec<Generator> = (0..j).map(|_| Generator::random(k, &mut rng)).collect();
        let backward = formal_inverse(&forward);
        labels.push(forward);
        labels.push(backward);
    }
    Ok(Labeling { graph: g.fingerprint(), j, k, seed, labels })
}

impl Labeling {
    /// Builds a labeling from explicit strings for the designated (even) darts.
    pub fn from_edge_labels(g: &Graph, k: u16, edge_labels: &[Vec<Generator>]) -> Result<Labeling, LabelingError> {
        if k < 2 {
            return Err(LabelingError::RankTooSmall(k));
        }
        if edge_labels.len() != g.edge_count() {
            return Err(LabelingError::Invalid(format!("{} labels for {} edges", edge_labels.len(), g.edge_count())));
        }
        let j = edge_labels.first().map_or(1, Vec::len);
        if j == 0 {
            return Err(LabelingError::ZeroLength);
        }
        let mut labels = Vec::with_capacity(g.dart_count());
        for l in edge_labels {
            if l.len() != j {
                return Err(LabelingError::Invalid("labels of unequal length".into()));
            }
            if l.iter().any(|x| x.index() > k) {
                return Err(LabelingError::Invalid(format!("label {} exceeds rank {k}", format_letters(l))));
            }
            labels.push(l.clone());
            labels.push(formal_inverse(l));
        }
        Ok(Labeling { graph: g.fingerprint(), j, k, seed: 0, labels })
    }

    pub fn graph_id(&self) -> &str {
        &self.graph
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn k(&self) -> u16 {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self, d: DartId) -> &[Generator] {
        &self.labels[d]
    }

    pub fn dart_count(&self) -> usize {
        self.labels.len()
    }

    /// Every dart carries the reversed inverse of its partner's label.
    pub fn is_symmetric(&self) -> bool {
        self.labels.len().is_multiple_of(2)
            && (0..self.labels.len()).all(|d| self.labels[d ^ 1] == formal_inverse(&self.labels[d]))
    }

    pub fn check_graph(&self, g: &Graph) -> Result<(), LabelingError> {
        let found = g.fingerprint();
        if found != self.graph || g.dart_count() != self.labels.len() {
            return Err(LabelingError::GraphMismatch { expected: self.graph.clone(), found });
        }
        Ok(())
    }

    pub fn to_file(&self) -> LabelingFile {
        LabelingFile {
            graph: self.graph.clone(),
            j: self.j,
            k: self.k,
            seed: self.seed,
            labels: self.labels.iter().enumerate().map(|(d, l)| (d, format_letters(l))).collect(),
        }
    }

    pub fn from_file(file: LabelingFile) -> Result<Labeling, LabelingError> {
        if file.j == 0 {
            return Err(LabelingError::ZeroLength);
        }
        if file.k < 2 {
            return Err(LabelingError::RankTooSmall(file.k));
        }
        let n = file.labels.len();
        let mut labels = Vec::with_capacity(n);
        for (expected, (d, text)) in file.labels.into_iter().enumerate() {
            if d != expected {
                return Err(LabelingError::Invalid(format!("missing dart {expected}")));
            }
            let raw = parse_letters(&text).map_err(|e| LabelingError::Invalid(e.to_string()))?;
            if raw.len() != file.j {
                return Err(LabelingError::Invalid(format!("dart {d}: {} letters, expected {}", raw.len(), file.j)));
            }
            if raw.iter().any(|g| g.index() > file.k) {
                return Err(LabelingError::Invalid(format!("dart {d}: generator above rank {}", file.k)));
            }
            labels.push(raw);
        }
        let l = Labeling { graph: file.graph, j: file.j, k: file.k, seed: file.seed, labels };
        if !l.is_symmetric() {
            return Err(LabelingError::Invalid("labels are not symmetric".into()));
        }
        Ok(l)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("labeling serializes")
    }

    pub fn from_json(text: &str) -> Result<Labeling, LabelingError> {
        let file: LabelingFile = serde_json::from_str(text).map_err(|e| LabelingError::Invalid(e.to_string()))?;
        Labeling::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Labeling, LabelingError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| LabelingError::Io(format!("{}: {e}", path.display())))?;
        Labeling::from_json(&text)
    }
}

/// On-disk labeling: `{graph, j, k, seed, labels: {dart-id: word-text}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingFile {
    pub graph: String,
    pub j: usize,
    pub k: u16,
    pub seed: u64,
    pub labels: BTreeMap<DartId, String>,
}

/// Checks that `path` is a chain of darts.
pub fn check_path(g: &Graph, path: &[DartId]) -> Result<(), LabelingError> {
    for (i, &d) in path.iter().enumerate() {
        if d >= g.dart_count() {
            return Err(LabelingError::UnknownDart(d));
        }
        if i > 0 && g.dart(path[i - 1]).target != g.dart(d).source {
            return Err(LabelingError::NonContiguousPath { position: i });
        }
    }
    Ok(())
}

/// Reduced product of the labels along a dart path: the endpoint of its lift
/// to the Cayley tree starting at the identity.
pub fn pushforward(g: &Graph, l: &Labeling, path: &[DartId]) -> Result<Word, LabelingError> {
    check_path(g, path)?;
    if l.dart_count() != g.dart_count() {
        return Err(LabelingError::GraphMismatch { expected: l.graph.clone(), found: g.fingerprint() });
    }
    let mut w = Word::identity();
    for &d in path {
        w.extend(l.label(d));
    }
    Ok(w)
}

/// Relator basis for the quotient defined by a labeled graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub k: u16,
    /// Nontrivial basis relators, freely reduced.
    pub relators: Vec<Word>,
    /// `E - V + 1`, the number of fundamental cycles (trivial ones included).
    pub cycle_rank: usize,
}

/// BFS spanning tree from vertex 0, as the parent dart of every vertex.
pub fn bfs_tree(g: &Graph) -> Vec<Option<DartId>> {
    let n = g.vertex_count();
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &d in g.out_darts(u) {
            let w = g.dart(d).target;
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(d);
                queue.push_back(w);
            }
        }
    }
    parent
}

/// Dart path from vertex 0 to `v` along the BFS tree.
pub fn tree_path(g: &Graph, parent: &[Option<DartId>], v: VertexId) -> Vec<DartId> {
    let mut path = Vec::new();
    let mut x = v;
    while let Some(d) = parent[x] {
        path.push(d);
        x = g.dart(d).source;
    }
    path.reverse();
    path
}

/// One relator per non-tree edge `u -> v`: the label of
/// (tree path to `u`) + edge + (tree path from `v` back to the root).
pub fn relators(g: &Graph, l: &Labeling) -> Result<Presentation, LabelingError> {
    if l.dart_count() != g.dart_count() {
        return Err(LabelingError::GraphMismatch { expected: l.graph.clone(), found: g.fingerprint() });
    }
    if !g.is_connected() {
        return Err(LabelingError::Invalid("relators need a connected graph".into()));
    }
    let parent = bfs_tree(g);
    let mut prefix = vec![Word::identity(); g.vertex_count()];
    // BFS order guarantees parents come first
    let mut order: Vec<VertexId> = (0..g.vertex_count()).collect();
    let depth: Vec<u32> = g.bfs_distances(0).into_iter().map(|d| d.unwrap()).collect();
    order.sort_by_key(|&v| depth[v]);
    for &v in &order {
        if let Some(d) = parent[v] {
            let mut w = prefix[g.dart(d).source].clone();
            w.extend(l.label(d));
            prefix[v] = w;
        }
    }
    let is_tree = |d: DartId| parent[g.dart(d).target] == Some(d) || parent[g.dart(d).source] == Some(d ^ 1);
    let mut out = Vec::new();
    let mut cycle_rank = 0;
    for d in (0..g.dart_count()).step_by(2) {
        if is_tree(d) {
            continue;
        }
        cycle_rank += 1;
        let dart = g.dart(d);
        let mut r = prefix[dart.source].clone();
        r.extend(l.label(d));
        let r = r.mul(&prefix[dart.target].inv());
        if !r.is_empty() {
            out.push(r);
        }
    }
    Ok(Presentation { k: l.k, relators: out, cycle_rank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::random_regular;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn gen(s: &str) -> Generator {
        s.parse().unwrap()
    }

    fn raw(s: &str) -> Vec<Generator> {
        parse_letters(s).unwrap()
    }

    #[test]
    fn single_edge_label_is_symmetric() {
        let g = Graph::path(2);
        let l = sample_labeling(&g, 1, 2, 3).unwrap();
        assert_eq!(l.label(0).len(), 1);
        assert_eq!(l.label(1), &[l.label(0)[0].inverse()]);
        assert!(l.is_symmetric());
    }

    #[test]
    fn sampling_is_deterministic_and_validated() {
        let g = Graph::petersen();
        assert_eq!(sample_labeling(&g, 3, 2, 8).unwrap(), sample_labeling(&g, 3, 2, 8).unwrap());
        assert_ne!(sample_labeling(&g, 3, 2, 8).unwrap(), sample_labeling(&g, 3, 2, 9).unwrap());
        assert_eq!(sample_labeling(&g, 0, 2, 1), Err(LabelingError::ZeroLength));
        assert_eq!(sample_labeling(&g, 1, 1, 1), Err(LabelingError::RankTooSmall(1)));
    }

    #[test]
    fn labels_have_exact_length_and_stay_unreduced() {
        let g = random_regular(20, 3, 1).unwrap();
        let l = sample_labeling(&g, 4, 2, 77).unwrap();
        assert!(l.is_symmetric());
        assert!((0..l.dart_count()).all(|d| l.label(d).len() == 4));
        // some raw string of length 4 over 4 letters contains a cancelling pair
        let any_unreduced = (0..l.dart_count()).any(|d| Word::reduce(l.label(d)).len() < 4);
        assert!(any_unreduced);
    }

    #[test]
    fn letter_frequencies_are_uniform() {
        // chi-square over 4 letters, 3 degrees of freedom; 16.27 is the 0.999 quantile
        let g = Graph::path(2);
        let mut counts = [0f64; 4];
        let trials = 100_000u64;
        for seed in 0..trials {
            let l = sample_labeling(&g, 1, 2, seed).unwrap();
            let x = l.label(0)[0];
            counts[(x.index() as usize - 1) * 2 + usize::from(!x.is_positive())] += 1.0;
        }
        let expected = trials as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        assert!(chi2 < 16.27, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn pushforward_examples() {
        let g = Graph::path(3);
        let l = Labeling::from_edge_labels(&g, 2, &[raw("a1 a2"), raw("a2 a1")]).unwrap();
        assert_eq!(pushforward(&g, &l, &[]).unwrap(), Word::identity());
        assert_eq!(pushforward(&g, &l, &[0, 1]).unwrap(), Word::identity());
        assert_eq!(pushforward(&g, &l, &[0, 2]).unwrap().to_string(), "a1 a2 a2 a1");
        assert_eq!(pushforward(&g, &l, &[0, 3]), Err(LabelingError::NonContiguousPath { position: 1 }));
        assert_eq!(pushforward(&g, &l, &[9]), Err(LabelingError::UnknownDart(9)));
    }

    #[test]
    fn relator_examples() {
        let tree = Graph::star(3);
        let l = sample_labeling(&tree, 2, 2, 1).unwrap();
        let p = relators(&tree, &l).unwrap();
        assert!(p.relators.is_empty());
        assert_eq!(p.cycle_rank, 0);

        let tri = Graph::cycle(3);
        let l = Labeling::from_edge_labels(&tri, 3, &[raw("a1"), raw("a2"), raw("a3")]).unwrap();
        let p = relators(&tri, &l).unwrap();
        assert_eq!(p.relators.len(), 1);
        // a cyclic conjugate of a1 a2 a3 (or its inverse), depending on the tree
        let r = &p.relators[0];
        let rotations: HashSet<String> =
            ["a1 a2 a3", "a2 a3 a1", "a3 a1 a2", "A3 A2 A1", "A2 A1 A3", "A1 A3 A2"].into_iter().map(String::from).collect();
        assert!(rotations.contains(&r.to_string()), "{r}");
    }

    #[test]
    fn relator_count_is_cycle_rank() {
        for seed in 0..10 {
            let g = random_regular(30, 3, seed).unwrap();
            let l = sample_labeling(&g, 2, 2, seed).unwrap();
            let p = relators(&g, &l).unwrap();
            assert_eq!(p.cycle_rank, g.edge_count() - g.vertex_count() + 1);
            assert!(p.relators.len() <= p.cycle_rank);
            assert!(p.relators.iter().all(|r| !r.is_empty()));
        }
    }

    #[test]
    fn trivial_fundamental_cycles_are_omitted() {
        let sq = Graph::cycle(4);
        let l = Labeling::from_edge_labels(&sq, 2, &[raw("a1"), raw("A1"), raw("a2"), raw("A2")]).unwrap();
        let p = relators(&sq, &l).unwrap();
        assert_eq!(p.cycle_rank, 1);
        assert!(p.relators.is_empty());
    }

    #[test]
    fn file_round_trip_and_validation() {
        let g = Graph::petersen();
        let l = sample_labeling(&g, 2, 3, 5).unwrap();
        let text = l.to_json();
        assert_eq!(Labeling::from_json(&text).unwrap(), l);
        l.check_graph(&g).unwrap();
        assert!(l.check_graph(&Graph::complete(4)).is_err());

        let mut file = l.to_file();
        file.labels.insert(1, "a1 a1".into());
        assert!(matches!(Labeling::from_file(file), Err(LabelingError::Invalid(_))));
        let mut file = l.to_file();
        file.labels.insert(0, "a1".into());
        assert!(matches!(Labeling::from_file(file), Err(LabelingError::Invalid(_))));
    }

    #[test]
    fn labeling_generators_respect_rank() {
        let g = Graph::complete(5);
        let l = sample_labeling(&g, 3, 2, 4).unwrap();
        assert!((0..l.dart_count()).all(|d| l.label(d).iter().all(|x| x.index() <= 2)));
        assert!(Labeling::from_edge_labels(&Graph::path(2), 2, &[vec![gen("a3")]]).is_err());
    }

    fn random_path(g: &Graph, start: usize, choices: &[usize]) -> Vec<DartId> {
        let mut v = start;
        let mut path = Vec::new();
        for &c in choices {
            let out = g.out_darts(v);
            let d = out[c % out.len()];
            path.push(d);
            v = g.dart(d).target;
        }
        path
    }

    proptest! {
        #[test]
        fn pushforward_properties(seed in 0u64..1000, start in 0usize..10, a in prop::collection::vec(0usize..3, 0..12), b in prop::collection::vec(0usize..3, 0..12)) {
            let g = Graph::petersen();
            let l = sample_labeling(&g, 2, 2, seed).unwrap();
            let p = random_path(&g, start, &a);
            let end = p.last().map_or(start, |&d| g.dart(d).target);
            let q = random_path(&g, end, &b);

            let back: Vec<DartId> = p.iter().rev().map(|&d| g.reverse(d)).collect();
            let there_and_back: Vec<DartId> = p.iter().chain(&back).copied().collect();
            prop_assert_eq!(pushforward(&g, &l, &there_and_back).unwrap(), Word::identity());

            let pq: Vec<DartId> = p.iter().chain(&q).copied().collect();
            let lhs = pushforward(&g, &l, &pq).unwrap();
            let rhs = pushforward(&g, &l, &p).unwrap().mul(&pushforward(&g, &l, &q).unwrap());
            prop_assert_eq!(lhs, rhs);
            prop_assert!(pushforward(&g, &l, &p).unwrap().len() <= 2 * p.len());
        }
    }
}
