use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use monsterlab::graph::check_admissible;
use monsterlab::graph_ref;
use monsterlab::harness::{estimate_drift, estimate_gp_decay, run_pipeline, PipelineConfig, Verdict};
use monsterlab::hyperbolic::{four_point_delta, ActionFile, ActionOracle};
use monsterlab::labeling::{relators, sample_labeling, Labeling};
use monsterlab::mc;
use monsterlab::walks::{comparison_test, parse_events, sample_walk_with, Event};
use monsterlab::Graph;

#[derive(Parser)]
#[command(name = "monsterlab", version, about = "Labeled-graph walks and hyperbolic chaining checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Labeled {
    /// Graph file or built-in reference such as `petersen` or `random_regular:30:3:1`.
    #[arg(long)]
    graph: String,
    #[arg(long, default_value_t = 1)]
    j: usize,
    #[arg(long, default_value_t = 2)]
    k: u16,
    /// Read the labeling from a file instead of sampling it from --seed.
    #[arg(long)]
    labeling: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check degree and diameter/girth hypotheses; exit 2 when not admissible.
    Certify {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        d: usize,
        #[arg(long = "C")]
        c: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Sample a symmetric labeling, or print the relators with --relators.
    Label {
        #[command(flatten)]
        labeled: Labeled,
        #[arg(long)]
        relators: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Sample stationary walks and their pushforward words.
    Walk {
        #[command(flatten)]
        labeled: Labeled,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Event-level comparison of the two walk measures, as CSV.
    Compare {
        #[command(flatten)]
        labeled: Labeled,
        #[arg(long)]
        lambda: f64,
        /// Comma-separated, e.g. `len_ge 1,len_ge 2,ball 3`.
        #[arg(long)]
        events: String,
        #[arg(long, default_value_t = 4)]
        nmax: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Drift, Gromov-product decay and hyperbolicity of an action.
    Geometry {
        /// `trivial`, `tree`, or a path to an action file.
        #[arg(long)]
        oracle: String,
        #[arg(long, default_value_t = 2)]
        k: u16,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Full run from a JSON config; exit code reflects the verdict.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the comparison and stage tables as `<prefix>.comparison.csv`, `<prefix>.stages.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

type Failure = Box<dyn std::error::Error>;

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn load_labeled(a: &Labeled, seed: u64) -> Result<(Graph, Labeling), Failure> {
    let g = graph_ref::resolve(&a.graph, Path::new("."))?;
    let l = match &a.labeling {
        Some(p) => {
            let l = Labeling::load(p)?;
            l.check_graph(&g)?;
            l
        }
        None => sample_labeling(&g, a.j, a.k, seed)?,
    };
    Ok((g, l))
}

fn oracle(spec: &str, k: u16) -> Result<ActionOracle, Failure> {
    Ok(match spec {
        "trivial" => ActionOracle::Trivial,
        "tree" => ActionOracle::Tree { k },
        path => {
            let a = ActionFile::load(path)?;
            if a.rank() < k {
                return Err(format!("action defines {} generators, need k = {k}", a.rank()).into());
            }
            ActionOracle::FiniteGraph(a)
        }
    })
}

#[derive(Serialize)]
struct WalkRecord {
    trial: u64,
    vertices: Vec<usize>,
    darts: Vec<usize>,
    lifted_distance: u32,
    word: monsterlab::Word,
}

#[derive(Serialize)]
struct GeometryReport {
    oracle: String,
    k: u16,
    delta: f64,
    four_point_delta: Option<f64>,
    drift: monsterlab::harness::DriftEstimate,
    gp_decay: Vec<monsterlab::walks::EventEstimate>,
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.cmd {
        Cmd::Certify { graph, d, c, common } => {
            let g = graph_ref::resolve(&graph, Path::new("."))?;
            let cert = check_admissible(&g, d, c)?;
            emit(common.out.as_deref(), &json(&cert))?;
            Ok(if cert.admissible { 0 } else { 2 })
        }
        Cmd::Label { labeled, relators: want_relators, common } => {
            let (g, l) = load_labeled(&labeled, common.seed)?;
            let text = if want_relators { json(&relators(&g, &l)?) } else { l.to_json() + "\n" };
            emit(common.out.as_deref(), &text)?;
            Ok(0)
        }
        Cmd::Walk { labeled, steps, trials, common } => {
            let (g, l) = load_labeled(&labeled, common.seed)?;
            let mut records = Vec::new();
            for trial in 0..trials {
                let mut rng = mc::stream(common.seed, mc::tags::SINGLE, trial);
                let t = sample_walk_with(&g, steps, &mut rng)?;
                let word = monsterlab::labeling::pushforward(&g, &l, &t.darts)?;
                records.push(WalkRecord {
                    trial,
                    lifted_distance: t.lifted_distance(),
                    vertices: t.vertices,
                    darts: t.darts,
                    word,
                });
            }
            emit(common.out.as_deref(), &json(&records))?;
            Ok(0)
        }
        Cmd::Compare { labeled, lambda, events, nmax, trials, common } => {
            let events: Vec<Event> = parse_events(&events)?;
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(format!("--lambda must lie in (0, 1), got {lambda}").into());
            }
            let (g, l) = load_labeled(&labeled, common.seed)?;
            let rows = comparison_test(&g, &l, lambda, &events, nmax, trials, common.seed)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r)?;
            }
            emit(common.out.as_deref(), &String::from_utf8(w.into_inner()?)?)?;
            Ok(0)
        }
        Cmd::Geometry { oracle: spec, k, steps, trials, common } => {
            let o = oracle(&spec, k)?;
            let drift = estimate_drift(&o, k, steps, trials, common.seed)?;
            let four_point = match &o {
                ActionOracle::FiniteGraph(a) if a.space().vertex_count() <= 64 => {
                    let pts: Vec<_> = (0..a.space().vertex_count()).map(monsterlab::hyperbolic::Point::Vertex).collect();
                    Some(four_point_delta(&pts, &o)?)
                }
                _ => None,
            };
            let mut gp_decay = Vec::new();
            if drift.ell_hat > 0.0 {
                for n in [steps / 8, steps / 4, steps / 2] {
                    gp_decay.push(estimate_gp_decay(&o, k, drift.ell_hat, n, trials, common.seed)?);
                }
            }
            let report =
                GeometryReport { oracle: o.kind().into(), k, delta: o.delta(), four_point_delta: four_point, drift, gp_decay };
            emit(common.out.as_deref(), &json(&report))?;
            Ok(0)
        }
        Cmd::Pipeline { config, seed, out, csv } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_pipeline(&cfg)?;
            emit(out.as_deref(), &(report.to_json() + "\n"))?;
            if let Some(prefix) = csv {
                let p = prefix.display();
                std::fs::write(format!("{p}.comparison.csv"), report.comparison_csv()?)?;
                std::fs::write(format!("{p}.stages.csv"), report.stages_csv()?)?;
            }
            Ok(match report.verdict {
                Verdict::NoWitnessFoundConsistentWithTheorem => 0,
                Verdict::WitnessFoundContradictionCertificate => 3,
                Verdict::RelatorViolation => 4,
                Verdict::ElementaryActionDetected => 5,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
