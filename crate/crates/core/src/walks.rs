//! Random walks on a labeled graph started from the stationary measure, their
//! lift to the universal cover, and Monte Carlo estimators for the measures
//! `mu^n` (pushforward of the graph walk) and `mu_bar^n` (free-group walk run
//! for `j * l` steps, `l` the lifted distance of the graph walk).

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::graph::{DartId, Graph, VertexId};
use crate::labeling::{Labeling, LabelingError};
use crate::mc::{self, Rng};
use crate::word::{Generator, Word};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum WalkError {
    #[error("graph has no edges to walk on")]
    NoEdges,
    #[error("lambda must lie in (0, 1), got {0}")]
    BadLambda(f64),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Labeling(#[from] LabelingError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkTrace {
    pub vertices: Vec<VertexId>,
    pub darts: Vec<DartId>,
    /// Universal-cover distance from the start after each step.
    pub lifted_distance_profile: Vec<u32>,
}

impl WalkTrace {
    pub fn steps(&self) -> usize {
        self.darts.len()
    }

    /// Lifted distance after the last step (0 for the empty walk).
    pub fn lifted_distance(&self) -> u32 {
        self.lifted_distance_profile.last().copied().unwrap_or(0)
    }
}

/// Vertex drawn with probability `deg(v) / sum(deg)`: the source of a uniform dart.
pub fn stationary_start_with(g: &Graph, rng: &mut Rng) -> Result<VertexId, WalkError> {
    if g.dart_count() == 0 {
        return Err(WalkError::NoEdges);
    }
    Ok(g.dart(rng.random_range(0..g.dart_count())).source)
}

pub fn stationary_start(g: &Graph, seed: u64) -> Result<VertexId, WalkError> {
    stationary_start_with(g, &mut mc::single(seed))
}

/// Non-backtracking reduction of a dart sequence: the stack holds the
/// geodesic from the start in the universal cover.
#[derive(Debug, Clone, Default)]
pub struct LiftStack(Vec<DartId>);

impl LiftStack {
    #[inline]
    pub fn push(&mut self, g: &Graph, d: DartId) {
        if self.0.last() == Some(&g.reverse(d)) {
            self.0.pop();
        } else {
            self.0.push(d);
        }
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

/// Uniform out-dart of `v`.
#[inline]
pub fn step_from(g: &Graph, v: VertexId, rng: &mut Rng) -> DartId {
    let out = g.out_darts(v);
    out[rng.random_range(0..out.len())]
}

pub fn sample_walk_with(g: &Graph, n: usize, rng: &mut Rng) -> Result<WalkTrace, WalkError> {
    let start = stationary_start_with(g, rng)?;
    let mut trace = WalkTrace {
        vertices: Vec::with_capacity(n + 1),
        darts: Vec::with_capacity(n),
        lifted_distance_profile: Vec::with_capacity(n),
    };
    trace.vertices.push(start);
    let mut stack = LiftStack::default();
    let mut v = start;
    for _ in 0..n {
        let d = step_from(g, v, rng);
        stack.push(g, d);
        v = g.dart(d).target;
        trace.darts.push(d);
        trace.vertices.push(v);
        trace.lifted_distance_profile.push(stack.depth() as u32);
    }
    Ok(trace)
}

pub fn sample_walk(g: &Graph, n: usize, seed: u64) -> Result<WalkTrace, WalkError> {
    sample_walk_with(g, n, &mut mc::single(seed))
}

/// Lifted distances after each of `n` steps, without recording the trace.
fn lifted_profile(g: &Graph, n: usize, rng: &mut Rng, out: &mut Vec<u32>) -> Result<(), WalkError> {
    out.clear();
    let mut v = stationary_start_with(g, rng)?;
    let mut stack = LiftStack::default();
    for _ in 0..n {
        let d = step_from(g, v, rng);
        stack.push(g, d);
        v = g.dart(d).target;
        out.push(stack.depth() as u32);
    }
    Ok(())
}

/// One draw from `mu^n`: the pushforward of a fresh stationary walk.
pub fn sample_mu_with(g: &Graph, l: &Labeling, n: usize, rng: &mut Rng) -> Result<Word, WalkError> {
    if l.dart_count() != g.dart_count() {
        return Err(LabelingError::GraphMismatch { expected: l.graph_id().into(), found: g.fingerprint() }.into());
    }
    let mut v = stationary_start_with(g, rng)?;
    let mut w = Word::identity();
    for _ in 0..n {
        let d = step_from(g, v, rng);
        w.extend(l.label(d));
        v = g.dart(d).target;
    }
    Ok(w)
}

pub fn sample_mu(g: &Graph, l: &Labeling, n: usize, seed: u64) -> Result<Word, WalkError> {
    sample_mu_with(g, l, n, &mut mc::single(seed))
}

/// One draw from `mu_bar^n`: read the lifted distance `l` of an `n`-step walk,
/// then run the free-group walk for `j * l` steps.
pub fn sample_mu_bar_with(g: &Graph, n: usize, j: usize, k: u16, rng: &mut Rng) -> Result<Word, WalkError> {
    let l = sample_walk_with(g, n, rng)?.lifted_distance() as usize;
    Ok(crate::word::srw_endpoint(j * l, k, rng))
}

pub fn sample_mu_bar(g: &Graph, n: usize, j: usize, k: u16, seed: u64) -> Result<Word, WalkError> {
    sample_mu_bar_with(g, n, j, k, &mut mc::single(seed))
}

/// Length-based events on `F_k`, selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Event {
    /// `|w| >= t`
    LenGe(usize),
    /// `|w| <= t`
    LenLe(usize),
    /// Membership in the radius-`r` ball about the identity.
    Ball(usize),
}

impl Event {
    pub fn holds_len(self, len: usize) -> bool {
        match self {
            Event::LenGe(t) => len >= t,
            Event::LenLe(t) | Event::Ball(t) => len <= t,
        }
    }

    pub fn holds(self, w: &Word) -> bool {
        self.holds_len(w.len())
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::LenGe(t) => write!(f, "len_ge {t}"),
            Event::LenLe(t) => write!(f, "len_le {t}"),
            Event::Ball(r) => write!(f, "ball {r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EventParseError {
    #[error("unknown event {0:?}; expected len_ge, len_le or ball")]
    UnknownName(String),
    #[error("event {0:?} needs one non-negative integer parameter")]
    MissingParameter(String),
}

impl FromStr for Event {
    type Err = EventParseError;

    /// Accepts `len_ge 3`, `len_ge:3` or `len_ge=3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(|c: char| c.is_whitespace() || c == ':' || c == '=').filter(|p| !p.is_empty()).collect();
        let name = parts.first().copied().unwrap_or("");
        let ctor: fn(usize) -> Event = match name {
            "len_ge" => Event::LenGe,
            "len_le" => Event::LenLe,
            "ball" => Event::Ball,
            _ => return Err(EventParseError::UnknownName(s.trim().to_string())),
        };
        match parts.as_slice() {
            [_, t] => t.parse().map(ctor).map_err(|_| EventParseError::MissingParameter(s.trim().to_string())),
            _ => Err(EventParseError::MissingParameter(s.trim().to_string())),
        }
    }
}

impl TryFrom<String> for Event {
    type Error = EventParseError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Event> for String {
    fn from(e: Event) -> String {
        e.to_string()
    }
}

/// Comma-separated event list.
pub fn parse_events(s: &str) -> Result<Vec<Event>, EventParseError> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEstimate {
    pub event_name: String,
    pub probability: f64,
    pub trials: u64,
    pub stderr: f64,
}

impl EventEstimate {
    pub fn from_counts(event_name: impl Into<String>, hits: u64, trials: u64) -> Self {
        let p = hits as f64 / trials as f64;
        EventEstimate { event_name: event_name.into(), probability: p, trials, stderr: (p * (1.0 - p) / trials as f64).sqrt() }
    }
}

/// Empirical frequency of `event` under `sampler`, over seeded blocks.
pub fn estimate_event<S, E>(name: &str, sampler: S, event: E, trials: u64, seed: u64) -> Result<EventEstimate, WalkError>
where
    S: Fn(&mut Rng) -> Result<Word, WalkError> + Sync,
    E: Fn(&Word) -> bool + Sync,
{
    if trials == 0 {
        return Err(WalkError::NoTrials);
    }
    let blocks = mc::run_blocks(seed, mc::tags::EVENT, trials, |rng, range| -> Result<u64, WalkError> {
        let mut hits = 0;
        for _ in range {
            if event(&sampler(rng)?) {
                hits += 1;
            }
        }
        Ok(hits)
    });
    let hits = blocks.into_iter().sum::<Result<u64, _>>()?;
    Ok(EventEstimate::from_counts(name, hits, trials))
}

/// One row of the event-level comparison `mu^n(A) >= lambda * mu_bar^n(A)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub event: String,
    pub n: usize,
    pub mu_hat: f64,
    pub mu_bar_hat: f64,
    /// `mu_hat - lambda * mu_bar_hat`.
    pub margin: f64,
    pub pass: bool,
}

/// Hit counts `[event][n]` for `n = 0..=n_max`, for both measures.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonCounts {
    pub mu: Vec<Vec<u64>>,
    pub mu_bar: Vec<Vec<u64>>,
    pub trials: u64,
}

fn add_counts(acc: &mut [Vec<u64>], other: &[Vec<u64>]) {
    for (a, b) in acc.iter_mut().zip(other) {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
    }
}

/// Runs both samplers once per trial for all `n <= n_max` at once: every
/// prefix of one `n_max`-step walk is a draw at its own `n`.
pub fn comparison_counts(
    g: &Graph,
    l: &Labeling,
    events: &[Event],
    n_max: usize,
    trials: u64,
    seed: u64,
) -> Result<ComparisonCounts, WalkError> {
    if trials == 0 {
        return Err(WalkError::NoTrials);
    }
    if l.dart_count() != g.dart_count() {
        return Err(LabelingError::GraphMismatch { expected: l.graph_id().into(), found: g.fingerprint() }.into());
    }
    if g.dart_count() == 0 {
        return Err(WalkError::NoEdges);
    }
    let zero = || vec![vec![0u64; n_max + 1]; events.len()];
    let (j, k) = (l.j(), l.k());

    let mu_blocks = mc::run_blocks(seed, mc::tags::MU, trials, |rng, range| {
        let mut counts = zero();
        for _ in range {
            let mut v = stationary_start_with(g, rng).expect("graph has darts");
            let mut w = Word::identity();
            for n in 0..=n_max {
                if n > 0 {
                    let d = step_from(g, v, rng);
                    w.extend(l.label(d));
                    v = g.dart(d).target;
                }
                for (e, ev) in events.iter().enumerate() {
                    counts[e][n] += u64::from(ev.holds(&w));
                }
            }
        }
        counts
    });

    let bar_blocks = mc::run_blocks(seed, mc::tags::MU_BAR, trials, |rng, range| {
        let mut counts = zero();
        let mut lifted = Vec::with_capacity(n_max);
        let mut lens = Vec::with_capacity(j * n_max + 1);
        for _ in range {
            lifted_profile(g, n_max, rng, &mut lifted).expect("graph has darts");
            let steps = j * lifted.iter().copied().max().unwrap_or(0) as usize;
            lens.clear();
            let mut w = Word::identity();
            lens.push(0);
            for _ in 0..steps {
                w.push(Generator::random(k, rng));
                lens.push(w.len());
            }
            for n in 0..=n_max {
                let depth = if n == 0 { 0 } else { lifted[n - 1] as usize };
                let len = lens[j * depth];
                for (e, ev) in events.iter().enumerate() {
                    counts[e][n] += u64::from(ev.holds_len(len));
                }
            }
        }
        counts
    });

    let mut mu = zero();
    let mut mu_bar = zero();
    for b in &mu_blocks {
        add_counts(&mut mu, b);
    }
    for b in &bar_blocks {
        add_counts(&mut mu_bar, b);
    }
    Ok(ComparisonCounts { mu, mu_bar, trials })
}

/// Tests `mu^n(A) >= lambda * mu_bar^n(A) - 3 sigma` for every event and
/// `1 <= n <= n_max`, `sigma` the combined standard error.
pub fn comparison_test(
    g: &Graph,
    l: &Labeling,
    lambda: f64,
    events: &[Event],
    n_max: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<ComparisonRow>, WalkError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(WalkError::BadLambda(lambda));
    }
    let counts = comparison_counts(g, l, events, n_max, trials, seed)?;
    let t = trials as f64;
    let mut rows = Vec::with_capacity(events.len() * n_max);
    for (e, ev) in events.iter().enumerate() {
        for n in 1..=n_max {
            let mu = counts.mu[e][n] as f64 / t;
            let bar = counts.mu_bar[e][n] as f64 / t;
            let var = mu * (1.0 - mu) / t + lambda * lambda * bar * (1.0 - bar) / t;
            let margin = mu - lambda * bar;
            rows.push(ComparisonRow {
                event: ev.to_string(),
                n,
                mu_hat: mu,
                mu_bar_hat: bar,
                margin,
                pass: margin >= -3.0 * var.sqrt(),
            });
        }
    }
    Ok(rows)
}
