//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{Matrix2, Vector2};

use crate::dynamics::{ClosedLoop, Model, Trajectory};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::io::{self, Mode, RunConfig};
use crate::normalize::normalize_ns;
use crate::orbit::{min_half_period, synthesize_di, synthesize_ns, DiOptions, OrbitPlan, PatternSpec};
use crate::scalar::Scalar;
use crate::verify::{verify_trajectory, VerificationReport};
use crate::Exact;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_GATE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::GainGate(_) => EXIT_GATE,
        Error::EmptyInterval { .. }
        | Error::Infeasible(_)
        | Error::ConflictingEquality { .. }
        | Error::KeyInequality { .. } => EXIT_INFEASIBLE,
        _ => EXIT_USAGE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "satorbit", version, about = "Saturated periodic orbits of multi-agent networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the parity classes of a graph.
    Partition {
        graph: PathBuf,
        #[arg(long, default_value_t = 1)]
        root: usize,
    },
    /// Construct a periodic orbit and write its plan.
    Synthesize {
        graph: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Write the plan here; the plan goes to stdout otherwise.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Simulate the closed loop and emit a trajectory CSV.
    Simulate {
        graph: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Initial states, model and gains from a plan file.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Check a plan or a trajectory CSV for periodicity and saturation.
    Verify {
        graph: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Expected period; taken from the plan or configuration otherwise.
        #[arg(long)]
        period: Option<u64>,
    },
    /// Bring a planar pair (A0, B0) into companion form.
    Normalize {
        /// Entries of A0, row by row.
        #[arg(long, num_args = 4, allow_negative_numbers = true, required = true)]
        a0: Vec<f64>,
        #[arg(long, num_args = 2, allow_negative_numbers = true, required = true)]
        b0: Vec<f64>,
    },
}

/// Run configuration flags. They override the `--config` file.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long)]
    pub root: Option<String>,
    /// Half-period override.
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub steps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub base: Option<String>,
    #[arg(long)]
    pub anchor: Option<String>,
    /// exact or float.
    #[arg(long)]
    pub mode: Option<String>,
    /// Initial states as `x:v,x:v,...`.
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<String>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::parse(&read(path)?)?,
            None => RunConfig::default(),
        };
        let flags = [
            ("model", &self.model),
            ("a", &self.a),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("root", &self.root),
            ("m", &self.m),
            ("steps", &self.steps),
            ("base", &self.base),
            ("anchor", &self.anchor),
            ("mode", &self.mode),
            ("init", &self.init),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<WeightedGraph> {
    WeightedGraph::parse(&read(path)?)
}

fn emit(text: &str, dest: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match dest {
        Some(p) => fs::write(p, text).map_err(|e| Error::Invalid(format!("{}: {e}", p.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

/// Runs one command, writing its report to `out`, and returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Partition { graph, root } => {
            if root == 0 {
                return Err(Error::Invalid("root is 1-based".into()));
            }
            let g = load_graph(&graph)?;
            let p = g.partition(root - 1)?;
            out.write_all(io::partition_report(&g, &p).as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Synthesize { graph, config, out: dest } => {
            let g = load_graph(&graph)?;
            let cfg = config.load()?;
            match cfg.mode {
                Mode::Exact => synthesize_cmd::<Exact>(&g, &cfg, dest.as_deref(), out),
                Mode::Float => synthesize_cmd::<f64>(&g, &cfg, dest.as_deref(), out),
            }
        }
        Command::Simulate { graph, config, plan, out: dest } => {
            let g = load_graph(&graph)?;
            let cfg = config.load()?;
            let plan_text = plan.as_deref().map(read).transpose()?;
            match cfg.mode {
                Mode::Exact => simulate_cmd::<Exact>(&g, &cfg, plan_text.as_deref(), dest.as_deref(), out),
                Mode::Float => simulate_cmd::<f64>(&g, &cfg, plan_text.as_deref(), dest.as_deref(), out),
            }
        }
        Command::Verify { graph, config, plan, csv, period } => {
            let g = load_graph(&graph)?;
            let cfg = config.load()?;
            let plan_text = plan.as_deref().map(read).transpose()?;
            let csv_text = csv.as_deref().map(read).transpose()?;
            if plan_text.is_none() && csv_text.is_none() {
                return Err(Error::Invalid("verify needs --plan or --csv".into()));
            }
            let inputs = VerifyInputs { plan: plan_text.as_deref(), csv: csv_text.as_deref(), period };
            match cfg.mode {
                Mode::Exact => verify_cmd::<Exact>(&g, &cfg, inputs, out),
                Mode::Float => verify_cmd::<f64>(&g, &cfg, inputs, out),
            }
        }
        Command::Normalize { a0, b0 } => {
            let a0 = Matrix2::new(a0[0], a0[1], a0[2], a0[3]);
            let b0 = Vector2::new(b0[0], b0[1]);
            let (model, t) = normalize_ns(&a0, &b0)?;
            writeln!(out, "a = {}", model.a())?;
            writeln!(out, "T = [[{}, {}], [{}, {}]]", t[(0, 0)], t[(0, 1)], t[(1, 0)], t[(1, 1)])?;
            Ok(EXIT_OK)
        }
    }
}

fn synthesize<S: Scalar>(g: &WeightedGraph, cfg: &RunConfig) -> Result<OrbitPlan<S>> {
    let gains = cfg.gains::<S>()?;
    match cfg.model::<S>()? {
        Model::DoubleIntegrator => {
            let opts = DiOptions {
                root: cfg.root_index(),
                m_override: cfg.m_override,
                anchor: cfg.anchor.map(|a| a - 1),
                base: S::from_rational(&cfg.base),
            };
            synthesize_di(g, &gains, &opts)
        }
        Model::NeutrallyStable(m) => synthesize_ns(g, &m, &gains, cfg.root_index()),
    }
}

fn synthesize_cmd<S: Scalar>(
    g: &WeightedGraph,
    cfg: &RunConfig,
    dest: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let plan = synthesize::<S>(g, cfg)?;
    let text = io::write_plan(&plan);
    emit(&text, dest, out)?;
    if dest.is_some() {
        out.write_all(text.as_bytes())?;
    }
    Ok(EXIT_OK)
}

/// Plan from a plan file, or synthesized from the configuration. Explicit
/// `init` in the configuration replaces the plan's initial states.
fn resolve_plan<S: Scalar>(g: &WeightedGraph, cfg: &RunConfig, plan_text: Option<&str>) -> Result<OrbitPlan<S>> {
    let mut plan = match plan_text {
        Some(text) => io::parse_plan::<S>(text)?.into_plan(g)?,
        None if cfg.init.is_some() => plan_from_config(g, cfg, None)?,
        None => synthesize::<S>(g, cfg)?,
    };
    if let Some(init) = cfg.init_states::<S>() {
        plan.init = init;
    }
    if plan.init.len() != g.n() {
        return Err(Error::Invalid(format!("{} initial states for a graph with {} agents", plan.init.len(), g.n())));
    }
    Ok(plan)
}

/// Expectations for a trajectory that did not come from synthesis.
fn plan_from_config<S: Scalar>(g: &WeightedGraph, cfg: &RunConfig, period: Option<u64>) -> Result<OrbitPlan<S>> {
    let model = cfg.model::<S>()?;
    let gains = cfg.gains::<S>()?;
    let partition = g.partition(cfg.root_index())?;
    let half = match (period, &model) {
        (Some(t), _) => {
            if t == 0 || t % 2 == 1 {
                return Err(Error::Invalid(format!("period {t} must be even and positive")));
            }
            t / 2
        }
        (None, Model::NeutrallyStable(_)) => 2,
        (None, Model::DoubleIntegrator) => match cfg.m_override {
            Some(m) => m,
            None => min_half_period(&gains, &S::from_rational(&partition.a_bar))?,
        },
    };
    Ok(OrbitPlan {
        model,
        gains,
        partition,
        half_period: half,
        period: 2 * half,
        init: cfg.init_states::<S>().unwrap_or_default(),
        pattern: PatternSpec::two_phase(half),
        intervals: Vec::new(),
        equalities: Vec::new(),
    })
}

fn simulate_cmd<S: Scalar>(
    g: &WeightedGraph,
    cfg: &RunConfig,
    plan_text: Option<&str>,
    dest: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let plan = resolve_plan::<S>(g, cfg, plan_text)?;
    let steps = cfg.steps.unwrap_or(2 * plan.period as usize);
    let sys = ClosedLoop::new(plan.model.clone(), g, plan.gains.clone());
    let t = sys.simulate(&plan.init, steps)?;
    emit(&io::csv_string(&t), dest, out)?;
    Ok(EXIT_OK)
}

struct VerifyInputs<'a> {
    plan: Option<&'a str>,
    csv: Option<&'a str>,
    period: Option<u64>,
}

fn verify_cmd<S: Scalar>(g: &WeightedGraph, cfg: &RunConfig, inputs: VerifyInputs, out: &mut dyn Write) -> Result<i32> {
    let mut plan = match inputs.plan {
        Some(text) => io::parse_plan::<S>(text)?.into_plan(g)?,
        None => plan_from_config::<S>(g, cfg, inputs.period)?,
    };
    if let Some(t) = inputs.period {
        if t == 0 || t % 2 == 1 {
            return Err(Error::Invalid(format!("period {t} must be even and positive")));
        }
        plan.period = t;
        plan.half_period = t / 2;
        plan.pattern = PatternSpec::two_phase(t / 2);
    }
    let sys = ClosedLoop::new(plan.model.clone(), g, plan.gains.clone());
    let t: Trajectory<S> = match inputs.csv {
        Some(text) => io::parse_csv(text, plan.model.clone())?,
        None => sys.simulate(&plan.init, cfg.steps.unwrap_or(2 * plan.period as usize))?,
    };
    if t.n() != g.n() {
        return Err(Error::Invalid(format!("trajectory has {} agents, graph has {}", t.n(), g.n())));
    }
    let report: VerificationReport = verify_trajectory(&sys, &plan, &t)?;
    write!(out, "{report}")?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_VERIFY })
}
