//! End-to-end replay of the non-existence argument against a candidate
//! action: estimate the drift, choose the chaining scale and length, bound the
//! failure probability, and search the labeled graph for a chain of walk
//! segments whose image would be longer than the graph allows.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::graph::{check_admissible, diameter, DartId, Graph, GraphCertificate, GraphError, VertexId};
use crate::hyperbolic::{chain_stats, chaining_lower_bound, ActionFile, ActionOracle, ChainStats, HyperbolicError, Point};
use crate::labeling::{pushforward, relators, sample_labeling, Labeling, LabelingError};
use crate::mc::{self, Rng};
use crate::walks::{comparison_test, stationary_start_with, step_from, ComparisonRow, Event, EventEstimate, WalkError};
use crate::word::{srw_endpoint, Word};

/// Divisor turning the measured speed into the scale `ell`, so that
/// `6 * ell` sits strictly below the speed.
pub const DRIFT_DIVISOR: f64 = 7.0;

/// Additive hyperbolicity slack per chain segment.
pub const CHAIN_DELTA_FACTOR: f64 = 50.0;

/// Default cap on labeling re-draws while looking for a relator-killing sample.
pub const DEFAULT_LABEL_RETRIES: u64 = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Labeling(#[from] LabelingError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Hyperbolic(#[from] HyperbolicError),
    #[error("ell must be positive; ell = 0 signals an elementary action")]
    ZeroEll,
    #[error("C' must be positive, got {0}")]
    BadCPrime(f64),
    #[error("need n >= 1, got 0")]
    ZeroLength,
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("the action does not kill the relators, so it does not factor through the quotient")]
    RelatorsNotKilled,
    #[error("inconsistent parameters: N * xi = {n} * {xi} must be positive")]
    InconsistentParameters { n: usize, xi: usize },
    #[error("bad config: {0}")]
    Config(String),
}

#[derive(Debug, thiserror::Error)]
#[error("pipeline stage `{stage}` failed: {source}")]
pub struct PipelineError {
    pub stage: &'static str,
    #[source]
    pub source: HarnessError,
}

fn at<T>(stage: &'static str, r: Result<T, impl Into<HarnessError>>) -> Result<T, PipelineError> {
    r.map_err(|e| PipelineError { stage, source: e.into() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub n: usize,
    pub trials: u64,
    /// Empirical mean of `d_X(1, w_n) / n`.
    pub mean_speed: f64,
    pub stderr: f64,
    pub ell_hat: f64,
}

/// Measures the speed of the simple random walk in the orbit and sets
/// `ell_hat = speed / 7`; exactly 0 when no trial moved the basepoint.
pub fn estimate_drift(o: &ActionOracle, k: u16, n: usize, trials: u64, seed: u64) -> Result<DriftEstimate, HarnessError> {
    if n == 0 {
        return Err(HarnessError::ZeroLength);
    }
    if trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    let blocks = mc::run_blocks(seed, mc::tags::DRIFT, trials, |rng, range| -> Result<(f64, f64), HarnessError> {
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in range {
            let x = o.displacement(&srw_endpoint(n, k, rng))? / n as f64;
            s += x;
            s2 += x * x;
        }
        Ok((s, s2))
    });
    let (mut s, mut s2) = (0.0, 0.0);
    for b in blocks {
        let (a, b) = b?;
        s += a;
        s2 += b;
    }
    let t = trials as f64;
    let mean = s / t;
    let var = (s2 / t - mean * mean).max(0.0);
    Ok(DriftEstimate { n, trials, mean_speed: mean, stderr: (var / t).sqrt(), ell_hat: mean / DRIFT_DIVISOR })
}

/// The Gromov product `(1|w_2n)_{w_n}` computed two ways: directly at the
/// orbit points, and as `(w_n^{-1} | w_n^{-1} w_2n)_1` using the independent
/// increment `u = w_n^{-1} w_2n`.
pub fn gp_decay_routes(o: &ActionOracle, k: u16, n: usize, rng: &mut Rng) -> Result<(f64, f64), HarnessError> {
    let wn = srw_endpoint(n, k, rng);
    let u = srw_endpoint(n, k, rng);
    let w2n = wn.mul(&u);
    let direct = o.gromov_product(&o.basepoint(), &o.apply(&w2n)?, &o.apply(&wn)?)?;
    let shifted = o.gromov_product(&o.apply(&wn.inv())?, &o.apply(&u)?, &o.basepoint())?;
    Ok((direct, shifted))
}

/// Frequency of `(1|w_2n)_{w_n} >= ell n / 3`.
pub fn estimate_gp_decay(
    o: &ActionOracle,
    k: u16,
    ell: f64,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<EventEstimate, HarnessError> {
    if !(ell > 0.0) {
        return Err(HarnessError::ZeroEll);
    }
    if trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    let threshold = ell * n as f64 / 3.0;
    let blocks = mc::run_blocks(seed, mc::tags::GP_DECAY, trials, |rng, range| -> Result<u64, HarnessError> {
        let mut hits = 0;
        for _ in range {
            let (_, gp) = gp_decay_routes(o, k, n, rng)?;
            hits += u64::from(gp >= threshold);
        }
        Ok(hits)
    });
    let hits = blocks.into_iter().sum::<Result<u64, _>>()?;
    Ok(EventEstimate::from_counts(format!("gp_ge n={n}"), hits, trials))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    /// Segment length `floor(C' ln |V|)`.
    #[serde(rename = "N")]
    pub n: usize,
    /// Number of segments, the least integer above `8 C / (ell C')`.
    pub xi: usize,
    /// `sqrt(1 - 1/(2 xi))`.
    pub lambda_min: f64,
}

// floor that forgives representation error just below an integer
fn floor_tol(x: f64) -> f64 {
    (x + 1e-9 * x.abs().max(1.0)).floor()
}

/// Parameter choice from raw quantities; `vertex_count` may be non-integral.
pub fn choose_parameters_raw(vertex_count: f64, c: f64, ell: f64, c_prime: f64) -> Result<Parameters, HarnessError> {
    if !(ell > 0.0) {
        return Err(HarnessError::ZeroEll);
    }
    if !(c_prime > 0.0) {
        return Err(HarnessError::BadCPrime(c_prime));
    }
    let n = floor_tol(c_prime * vertex_count.ln()).max(0.0) as usize;
    let xi = (floor_tol(8.0 * c / (ell * c_prime)) as usize + 1).max(1);
    Ok(Parameters { n, xi, lambda_min: lambda_min(xi) })
}

pub fn choose_parameters(cert: &GraphCertificate, ell: f64, c_prime: f64) -> Result<Parameters, HarnessError> {
    choose_parameters_raw(cert.vertex_count as f64, cert.C, ell, c_prime)
}

pub fn lambda_min(xi: usize) -> f64 {
    (1.0 - 1.0 / (2.0 * xi as f64)).sqrt()
}

/// Default `C'` putting the segment length at half the girth.
pub fn default_c_prime(cert: &GraphCertificate) -> Option<f64> {
    let ln = (cert.vertex_count as f64).ln();
    match cert.girth {
        Some(g) if ln > 0.0 => Some(g as f64 / (2.0 * ln)),
        _ => None,
    }
}

/// `2 xi (1 - lambda^2 (1 - e^{-N/18}))`, unclamped.
pub fn feasibility_bound_raw(xi: usize, lambda: f64, n: usize) -> f64 {
    2.0 * xi as f64 * (1.0 - lambda * lambda * (1.0 - (-(n as f64) / 18.0).exp()))
}

/// Upper bound on `1 - P`, clamped to `[0, 1]`. Below 1 means some walk
/// satisfies every chaining condition at once.
pub fn feasibility_bound(xi: usize, lambda: f64, n: usize) -> f64 {
    feasibility_bound_raw(xi, lambda, n).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub xi: usize,
    pub ell: f64,
}

/// A walk whose chaining bound exceeds what the graph can map onto.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: u64,
    pub start: VertexId,
    pub path: Vec<DartId>,
    pub chain: ChainStats,
    pub lower_bound: f64,
    /// `j * diam(graph)`.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub trials: u64,
    /// Walks meeting every segment and junction condition.
    pub event_hits: u64,
    pub event_frequency: f64,
    /// Walks meeting the conditions whose bound still stayed below the threshold.
    pub near_misses: u64,
    pub near_miss_frequency: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum WitnessOutcome {
    Found { witness: Witness, summary: WitnessSummary },
    NotFound { summary: WitnessSummary },
}

impl WitnessOutcome {
    pub fn summary(&self) -> &WitnessSummary {
        match self {
            WitnessOutcome::Found { summary, .. } | WitnessOutcome::NotFound { summary } => summary,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            WitnessOutcome::Found { witness, .. } => Some(witness),
            WitnessOutcome::NotFound { .. } => None,
        }
    }
}

struct BlockResult {
    witness: Option<Witness>,
    hits: u64,
    near: u64,
}

enum Trial {
    Failed,
    Passed { path: Vec<DartId>, start: VertexId, chain: ChainStats },
}

/// Walks `N * xi` steps segment by segment. Segment `i` reads the word `s_i`;
/// by isometry `D_i = d(x0, s_i x0)` and the junction product at the start of
/// segment `i` is `(s_{i-1}^{-1} x0 | s_i x0)_{x0}`.
fn run_trial(g: &Graph, l: &Labeling, o: &ActionOracle, p: &WitnessParams, rng: &mut Rng) -> Result<Trial, HarnessError> {
    let start = stationary_start_with(g, rng)?;
    let mut v = start;
    let mut path = Vec::with_capacity(p.n * p.xi);
    let mut segments = Vec::with_capacity(p.xi);
    let mut products = vec![0.0; p.xi + 1];
    let seg_min = p.ell * p.n as f64;
    let gp_max = seg_min / 3.0;
    let mut prev_inverse: Option<Point> = None;
    for i in 0..p.xi {
        let mut s = Word::identity();
        for _ in 0..p.n {
            let d = step_from(g, v, rng);
            s.extend(l.label(d));
            v = g.dart(d).target;
            path.push(d);
        }
        let here = o.apply(&s)?;
        let base = o.basepoint();
        let dist = o.dist(&base, &here)?;
        if dist < seg_min {
            return Ok(Trial::Failed);
        }
        if let Some(back) = &prev_inverse {
            let gp = o.gromov_product(back, &here, &base)?;
            if gp > gp_max {
                return Ok(Trial::Failed);
            }
            products[i] = gp;
        }
        segments.push(dist);
        prev_inverse = Some(o.apply(&s.inv())?);
    }
    let lower_bound = chaining_lower_bound(&segments, &products, o.delta())?;
    Ok(Trial::Passed { path, start, chain: ChainStats { segment_dists: segments, products, lower_bound } })
}

/// Searches `trials` stationary walks of length `N * xi` for one meeting all
/// segment-distance and junction conditions with chaining bound above
/// `j * diam(g)`. Returns the lowest-indexed such walk.
pub fn witness_search(
    g: &Graph,
    l: &Labeling,
    o: &ActionOracle,
    params: WitnessParams,
    trials: u64,
    seed: u64,
) -> Result<WitnessOutcome, HarnessError> {
    if params.n == 0 || params.xi == 0 {
        return Err(HarnessError::InconsistentParameters { n: params.n, xi: params.xi });
    }
    if trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    l.check_graph(g)?;
    if !o.kills_relators(&relators(g, l)?)? {
        return Err(HarnessError::RelatorsNotKilled);
    }
    let threshold = l.j() as f64 * diameter(g)? as f64;
    let blocks = mc::run_blocks(seed, mc::tags::WITNESS, trials, |rng, range| -> Result<BlockResult, HarnessError> {
        let mut out = BlockResult { witness: None, hits: 0, near: 0 };
        for trial in range {
            if let Trial::Passed { path, start, chain } = run_trial(g, l, o, &params, rng)? {
                out.hits += 1;
                if chain.lower_bound > threshold {
                    let lower_bound = chain.lower_bound;
                    out.witness = Some(Witness { trial, start, path, chain, lower_bound, threshold });
                    break;
                }
                out.near += 1;
            }
        }
        Ok(out)
    });
    let mut witness = None;
    let (mut hits, mut near, mut ran) = (0u64, 0u64, 0u64);
    for (b, block) in blocks.into_iter().enumerate() {
        let block = block?;
        hits += block.hits;
        near += block.near;
        match block.witness {
            Some(w) => {
                ran += w.trial + 1 - b as u64 * mc::BLOCK_SIZE;
                witness = Some(w);
                break;
            }
            None => ran += mc::BLOCK_SIZE.min(trials - b as u64 * mc::BLOCK_SIZE),
        }
    }
    let summary = WitnessSummary {
        trials: ran,
        event_hits: hits,
        event_frequency: hits as f64 / ran as f64,
        near_misses: near,
        near_miss_frequency: near as f64 / ran as f64,
        threshold,
    };
    Ok(match witness {
        Some(witness) => WitnessOutcome::Found { witness, summary },
        None => WitnessOutcome::NotFound { summary },
    })
}

/// Re-evaluates a witness from its stored path: absolute orbit points of the
/// full prefixes at multiples of `N`, then the chain statistics at those points.
pub fn recompute_witness(g: &Graph, l: &Labeling, o: &ActionOracle, n: usize, w: &Witness) -> Result<ChainStats, HarnessError> {
    if n == 0 || !w.path.len().is_multiple_of(n) {
        return Err(HarnessError::InconsistentParameters { n, xi: w.path.len() / n.max(1) });
    }
    if w.path.first().map(|&d| g.dart(d).source) != Some(w.start) {
        return Err(HarnessError::Config("witness path does not start at its start vertex".into()));
    }
    let points = (0..=w.path.len() / n)
        .map(|i| Ok(o.apply(&pushforward(g, l, &w.path[..i * n])?)?))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(chain_stats(o, &points)?)
}

/// Which action the pipeline tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OracleSpec {
    Trivial,
    Tree,
    FiniteGraph {
        /// Path to an action file, relative to the config file.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        action_file: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        action: Option<ActionFile>,
    },
}

impl OracleSpec {
    pub fn build(&self, k: u16, base_dir: &Path) -> Result<ActionOracle, HarnessError> {
        match self {
            OracleSpec::Trivial => Ok(ActionOracle::Trivial),
            OracleSpec::Tree => Ok(ActionOracle::Tree { k }),
            OracleSpec::FiniteGraph { action_file, action } => {
                let a = match (action_file, action) {
                    (Some(f), None) => ActionFile::load(base_dir.join(f))?,
                    (None, Some(a)) => a.clone().into_action(base_dir)?,
                    _ => return Err(HarnessError::Config("finite-graph oracle needs exactly one of action_file, action".into())),
                };
                if a.rank() < k {
                    return Err(HarnessError::Config(format!("action defines {} generators, need k = {k}", a.rank())));
                }
                Ok(ActionOracle::FiniteGraph(a))
            }
        }
    }
}

fn default_drift_n() -> usize {
    200
}
fn default_gp_ns() -> Vec<usize> {
    vec![25, 50, 100]
}
fn default_events() -> Vec<Event> {
    vec![Event::LenGe(1), Event::LenGe(2), Event::LenGe(3)]
}
fn default_n_max() -> usize {
    4
}
fn default_label_retries() -> u64 {
    DEFAULT_LABEL_RETRIES
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Graph reference (see [`crate::graph_ref`]).
    pub graph: String,
    /// Maximum vertex degree allowed.
    pub d: usize,
    /// Diameter/girth bound.
    pub C: f64,
    pub j: usize,
    pub k: u16,
    /// Scale constant; defaults to `girth / (2 ln |V|)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub C_prime: Option<f64>,
    pub lambda: f64,
    pub trials: u64,
    pub seed: u64,
    pub oracle: OracleSpec,
    #[serde(default = "default_drift_n")]
    pub drift_n: usize,
    #[serde(default = "default_gp_ns")]
    pub gp_ns: Vec<usize>,
    #[serde(default = "default_events")]
    pub events: Vec<Event>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_trials: Option<u64>,
    #[serde(default = "default_label_retries")]
    pub label_retries: u64,
    /// Directory that relative references resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, HarnessError> {
        let mut cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        PipelineConfig::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.j == 0 {
            return bad("j must be at least 1".into());
        }
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad(format!("lambda must lie in (0, 1), got {}", self.lambda));
        }
        if !(self.C > 0.0) {
            return bad(format!("C must be positive, got {}", self.C));
        }
        if let Some(c) = self.C_prime {
            if !(c > 0.0) {
                return bad(format!("C_prime must be positive, got {c}"));
            }
        }
        if self.trials == 0 || self.witness_trials == Some(0) {
            return bad("trial counts must be positive".into());
        }
        if self.drift_n == 0 {
            return bad("drift_n must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ElementaryActionDetected,
    RelatorViolation,
    NoWitnessFoundConsistentWithTheorem,
    WitnessFoundContradictionCertificate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("verdict serializes");
        f.write_str(s.as_str().expect("string verdict"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: String,
    pub detail: String,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: PipelineConfig,
    pub certificate: GraphCertificate,
    pub oracle_kind: String,
    pub labeling_seed: Option<u64>,
    pub label_attempts: u64,
    pub relator_count: Option<usize>,
    pub cycle_rank: Option<usize>,
    pub drift_estimate: Option<DriftEstimate>,
    pub gp_decay: Vec<EventEstimate>,
    pub comparison_results: Vec<ComparisonRow>,
    pub C_prime: Option<f64>,
    pub parameters: Option<Parameters>,
    pub lambda_above_min: Option<bool>,
    pub feasibility: Option<f64>,
    pub witness: Option<Witness>,
    pub witness_summary: Option<WitnessSummary>,
    pub stages: Vec<StageRecord>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn comparison_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.comparison_results {
            w.serialize(row)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
    }

    pub fn stages_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.stages {
            w.serialize(row)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
    }
}

struct Draft {
    cfg: PipelineConfig,
    certificate: GraphCertificate,
    oracle_kind: String,
    labeling_seed: Option<u64>,
    label_attempts: u64,
    relator_count: Option<usize>,
    cycle_rank: Option<usize>,
    drift: Option<DriftEstimate>,
    gp_decay: Vec<EventEstimate>,
    comparison: Vec<ComparisonRow>,
    c_prime: Option<f64>,
    parameters: Option<Parameters>,
    lambda_ok: Option<bool>,
    feasibility: Option<f64>,
    witness: Option<Witness>,
    witness_summary: Option<WitnessSummary>,
    stages: Vec<StageRecord>,
    notes: Vec<String>,
}

impl Draft {
    fn stage(&mut self, stage: &str, status: &str, detail: impl Into<String>) {
        self.stages.push(StageRecord { stage: stage.into(), status: status.into(), detail: detail.into() });
    }

    fn finish(self, verdict: Verdict) -> Report {
        Report {
            config: self.cfg,
            certificate: self.certificate,
            oracle_kind: self.oracle_kind,
            labeling_seed: self.labeling_seed,
            label_attempts: self.label_attempts,
            relator_count: self.relator_count,
            cycle_rank: self.cycle_rank,
            drift_estimate: self.drift,
            gp_decay: self.gp_decay,
            comparison_results: self.comparison,
            C_prime: self.c_prime,
            parameters: self.parameters,
            lambda_above_min: self.lambda_ok,
            feasibility: self.feasibility,
            witness: self.witness,
            witness_summary: self.witness_summary,
            stages: self.stages,
            notes: self.notes,
            verdict,
        }
    }
}

/// Certify, label, extract relators, check the action against them, estimate
/// drift and Gromov-product decay, compare the two walk measures, choose
/// parameters, bound feasibility, and search for a witness.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Report, PipelineError> {
    at("config", cfg.validate())?;
    let g = at("certify", crate::graph_ref::resolve(&cfg.graph, &cfg.base_dir))?;
    let certificate = at("certify", check_admissible(&g, cfg.d, cfg.C))?;
    let oracle = at("oracle", cfg.oracle.build(cfg.k, &cfg.base_dir))?;
    let mut r = Draft {
        cfg: cfg.clone(),
        certificate: certificate.clone(),
        oracle_kind: oracle.kind().into(),
        labeling_seed: None,
        label_attempts: 0,
        relator_count: None,
        cycle_rank: None,
        drift: None,
        gp_decay: Vec::new(),
        comparison: Vec::new(),
        c_prime: None,
        parameters: None,
        lambda_ok: None,
        feasibility: None,
        witness: None,
        witness_summary: None,
        stages: Vec::new(),
        notes: vec![
            "ell_hat is the measured speed divided by 7; its relation to the asymptotic ell is heuristic".into(),
            "witness threshold is j * diam(graph), the diameter bound for a j-Lipschitz image".into(),
        ],
    };
    let detail = format!(
        "girth={:?} diameter={} degrees=[{},{}] lambda2={:.6}",
        certificate.girth, certificate.diameter, certificate.min_degree, certificate.max_degree, certificate.lambda2
    );
    r.stage("certify", if certificate.admissible { "admissible" } else { "inadmissible" }, detail);
    if !certificate.admissible {
        r.notes.push("graph fails the degree or diameter/girth hypotheses; the non-existence argument does not apply".into());
    }

    // Labeling and relators. A finite action is re-tried over labeling seeds
    // until it kills every relator; the tree and the point need one draw.
    let attempts = match oracle {
        ActionOracle::FiniteGraph(_) => cfg.label_retries.max(1),
        _ => 1,
    };
    let mut accepted = None;
    for attempt in 0..attempts {
        let seed = cfg.seed.wrapping_add(attempt);
        let l = at("label", sample_labeling(&g, cfg.j, cfg.k, seed))?;
        let p = at("presentation", relators(&g, &l))?;
        r.label_attempts = attempt + 1;
        r.relator_count = Some(p.relators.len());
        r.cycle_rank = Some(p.cycle_rank);
        if at("presentation", oracle.kills_relators(&p))? {
            r.labeling_seed = Some(seed);
            accepted = Some(l);
            break;
        }
    }
    let Some(labeling) = accepted else {
        r.stage(
            "presentation",
            "relator-violation",
            format!("no labeling among {} draws is killed by the action", r.label_attempts),
        );
        return Ok(r.finish(Verdict::RelatorViolation));
    };
    r.stage(
        "presentation",
        "ok",
        format!("{} relators, labeling seed {}", r.relator_count.unwrap_or(0), r.labeling_seed.unwrap_or(0)),
    );

    let drift = at("drift", estimate_drift(&oracle, cfg.k, cfg.drift_n, cfg.trials, cfg.seed))?;
    r.drift = Some(drift.clone());
    if drift.ell_hat == 0.0 {
        r.stage("drift", "elementary", "no trial moved the basepoint");
        return Ok(r.finish(Verdict::ElementaryActionDetected));
    }
    r.stage("drift", "ok", format!("speed={:.6} ell_hat={:.6}", drift.mean_speed, drift.ell_hat));

    for &n in &cfg.gp_ns {
        let e = at("gp_decay", estimate_gp_decay(&oracle, cfg.k, drift.ell_hat, n, cfg.trials, cfg.seed))?;
        r.gp_decay.push(e);
    }
    r.stage("gp_decay", "ok", format!("{} lengths", r.gp_decay.len()));

    r.comparison = at("comparison", comparison_test(&g, &labeling, cfg.lambda, &cfg.events, cfg.n_max, cfg.trials, cfg.seed))?;
    let passed = r.comparison.iter().filter(|x| x.pass).count();
    r.stage("comparison", "ok", format!("{passed}/{} rows pass", r.comparison.len()));

    let c_prime = match cfg.C_prime.or_else(|| default_c_prime(&certificate)) {
        Some(c) => c,
        None => {
            return Err(PipelineError {
                stage: "parameters",
                source: HarnessError::Config("C_prime is required for graphs without cycles".into()),
            })
        }
    };
    r.c_prime = Some(c_prime);
    let params = at("parameters", choose_parameters(&certificate, drift.ell_hat, c_prime))?;
    r.parameters = Some(params);
    r.lambda_ok = Some(cfg.lambda > params.lambda_min);
    r.stage("parameters", "ok", format!("N={} xi={} lambda_min={:.6}", params.n, params.xi, params.lambda_min));
    if cfg.lambda <= params.lambda_min {
        r.notes.push(format!("lambda = {} does not exceed lambda_min = {:.6}", cfg.lambda, params.lambda_min));
    }

    let feasibility = feasibility_bound(params.xi, cfg.lambda, params.n);
    r.feasibility = Some(feasibility);
    r.stage("feasibility", if feasibility < 1.0 { "certified" } else { "not-certified" }, format!("1-P <= {feasibility:.6}"));

    let wp = WitnessParams { n: params.n, xi: params.xi, ell: drift.ell_hat };
    let outcome = at("witness", witness_search(&g, &labeling, &oracle, wp, cfg.witness_trials.unwrap_or(cfg.trials), cfg.seed))?;
    r.witness_summary = Some(outcome.summary().clone());
    let verdict = match outcome {
        WitnessOutcome::Found { witness, .. } => {
            r.stage("witness", "found", format!("lower bound {} > {}", witness.lower_bound, witness.threshold));
            r.witness = Some(witness);
            Verdict::WitnessFoundContradictionCertificate
        }
        WitnessOutcome::NotFound { summary } => {
            r.stage("witness", "not-found", format!("{} of {} walks met the conditions", summary.event_hits, summary.trials));
            Verdict::NoWitnessFoundConsistentWithTheorem
        }
    };
    Ok(r.finish(verdict))
}
