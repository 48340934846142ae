//! Text formats: run configuration, plan files and trajectory CSV.

use std::fmt::Write as _;

use num_rational::BigRational;

use crate::dynamics::{AgentState, GainParams, Model, NsModel, Trajectory};
use crate::error::{Error, Result};
use crate::graph::{Partition, WeightedGraph};
use crate::orbit::{position_constraints, OrbitPlan, PatternSpec};
use crate::scalar::{parse_rational, render_fixed, render_rational, Scalar};

pub const CSV_HEADER: [&str; 6] = ["k", "agent", "x", "v", "u_raw", "u_sat"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelKind {
    #[default]
    Di,
    Ns,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Di => "di",
            ModelKind::Ns => "ns",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "di" => Ok(ModelKind::Di),
            "ns" => Ok(ModelKind::Ns),
            other => Err(Error::Invalid(format!("unknown model '{other}', expected di or ns"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Exact,
    Float,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(Error::Invalid(format!("unknown mode '{other}', expected exact or float"))),
        }
    }
}

/// Run configuration. Numbers are kept exact and converted on use.
/// `root` is 1-based, as written by users.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub a: Option<BigRational>,
    pub alpha: Option<BigRational>,
    pub beta: Option<BigRational>,
    pub root: usize,
    pub m_override: Option<u64>,
    pub steps: Option<usize>,
    pub base: BigRational,
    pub anchor: Option<usize>,
    pub mode: Mode,
    pub init: Option<Vec<(BigRational, BigRational)>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Di,
            a: None,
            alpha: None,
            beta: None,
            root: 1,
            m_override: None,
            steps: None,
            base: BigRational::from_integer(0.into()),
            anchor: None,
            mode: Mode::Exact,
            init: None,
        }
    }
}

fn parse_count<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Invalid(format!("{key} must be a non-negative integer, got '{value}'")))
}

/// `x:v` pairs separated by commas or semicolons.
pub fn parse_init_list(text: &str) -> Result<Vec<(BigRational, BigRational)>> {
    text.split([',', ';'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (x, v) = pair
                .split_once(':')
                .ok_or_else(|| Error::Invalid(format!("init entry '{pair}' must look like x:v")))?;
            Ok((parse_rational(x)?, parse_rational(v)?))
        })
        .collect()
}

impl RunConfig {
    /// Parses a flat `key = value` file. Blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: idx + 1, msg: format!("expected key=value, got '{line}'") })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "model" => self.model = value.parse()?,
            "a" => self.a = Some(parse_rational(value)?),
            "alpha" => self.alpha = Some(parse_rational(value)?),
            "beta" => self.beta = Some(parse_rational(value)?),
            "root" => self.root = parse_count(key, value)?,
            "m" | "m_override" => self.m_override = Some(parse_count(key, value)?),
            "steps" => self.steps = Some(parse_count(key, value)?),
            "base" | "base_position" => self.base = parse_rational(value)?,
            "anchor" => self.anchor = Some(parse_count(key, value)?),
            "mode" => self.mode = value.parse()?,
            "init" => self.init = Some(parse_init_list(value)?),
            other => return Err(Error::Invalid(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.root == 0 {
            return Err(Error::Invalid("root is 1-based".into()));
        }
        if self.anchor == Some(0) {
            return Err(Error::Invalid("anchor is 1-based".into()));
        }
        if self.model == ModelKind::Ns {
            let a = self.a.as_ref().ok_or_else(|| Error::InvalidModel("model=ns needs a".into()))?;
            NsModel::new(a.clone())?;
        }
        Ok(())
    }

    pub fn root_index(&self) -> usize {
        self.root.saturating_sub(1)
    }

    pub fn gains<S: Scalar>(&self) -> Result<GainParams<S>> {
        let alpha = self.alpha.as_ref().ok_or_else(|| Error::Invalid("alpha is not set".into()))?;
        let beta = self.beta.as_ref().ok_or_else(|| Error::Invalid("beta is not set".into()))?;
        Ok(GainParams::new(S::from_rational(alpha), S::from_rational(beta)))
    }

    pub fn model<S: Scalar>(&self) -> Result<Model<S>> {
        self.validate()?;
        Ok(match self.model {
            ModelKind::Di => Model::DoubleIntegrator,
            ModelKind::Ns => {
                Model::NeutrallyStable(NsModel::new(S::from_rational(self.a.as_ref().expect("validated")))?)
            }
        })
    }

    pub fn init_states<S: Scalar>(&self) -> Option<Vec<AgentState<S>>> {
        self.init
            .as_ref()
            .map(|list| list.iter().map(|(x, v)| AgentState::new(S::from_rational(x), S::from_rational(v))).collect())
    }
}

fn list(agents: &[usize]) -> String {
    agents.iter().map(|a| (a + 1).to_string()).collect::<Vec<_>>().join(",")
}

pub fn partition_report(g: &WeightedGraph, p: &Partition) -> String {
    let mut out = String::new();
    writeln!(out, "S_e = {{{}}}; S_o = {{{}}}; a_bar = {}", list(&p.s_even), list(&p.s_odd), render_rational(&p.a_bar))
        .unwrap();
    writeln!(out, "root: {}", p.root + 1).unwrap();
    let dist: Vec<String> = p.dist.iter().enumerate().map(|(i, d)| format!("{}:{}", i + 1, d)).collect();
    writeln!(out, "distances: {}", dist.join(" ")).unwrap();
    for &(i, j) in &p.cross_edges {
        writeln!(out, "cross {}-{} w={}", i + 1, j + 1, render_rational(g.weight(i, j).unwrap())).unwrap();
    }
    for &(i, j) in &p.intra_edges {
        writeln!(out, "intra {}-{} w={}", i + 1, j + 1, render_rational(g.weight(i, j).unwrap())).unwrap();
    }
    out
}

/// Deterministic plan text. Comment lines carry the interval report and are
/// ignored on parse-back.
pub fn write_plan<S: Scalar>(plan: &OrbitPlan<S>) -> String {
    let mut out = String::new();
    let a = match &plan.model {
        Model::NeutrallyStable(m) => format!(", a={}", m.a().render()),
        Model::DoubleIntegrator => String::new(),
    };
    writeln!(
        out,
        "model={}{}, T={}, m={}, alpha={}, beta={}, root={}",
        plan.model.name(),
        a,
        plan.period,
        plan.half_period,
        plan.gains.alpha.render(),
        plan.gains.beta.render(),
        plan.partition.root + 1
    )
    .unwrap();
    for c in &plan.intervals {
        writeln!(
            out,
            "# interval {}-{}: {} <= x_{}(0) - x_{}(0) <= {}",
            c.i + 1,
            c.j + 1,
            render_fixed(&c.lower, 4),
            c.i + 1,
            c.j + 1,
            render_fixed(&c.upper, 4)
        )
        .unwrap();
    }
    for &(i, j) in &plan.equalities {
        writeln!(out, "# equal {}-{}: x_{}(0) = x_{}(0)", i + 1, j + 1, i + 1, j + 1).unwrap();
    }
    for (i, s) in plan.init.iter().enumerate() {
        writeln!(out, "agent {}: x={}, v={}", i + 1, s.x.render(), s.v.render()).unwrap();
    }
    out
}

/// A plan read back from text.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanFile<S> {
    pub model: Model<S>,
    pub gains: GainParams<S>,
    pub period: u64,
    pub half_period: u64,
    /// 0-based.
    pub root: usize,
    pub init: Vec<AgentState<S>>,
}

fn fields(line: &str, lineno: usize) -> Result<Vec<(&str, &str)>> {
    line.split(',')
        .map(|f| {
            f.trim()
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Parse { line: lineno, msg: format!("expected key=value, got '{}'", f.trim()) })
        })
        .collect()
}

pub fn parse_plan<S: Scalar>(text: &str) -> Result<PlanFile<S>> {
    let mut header: Option<(usize, Vec<(&str, &str)>)> = None;
    let mut init: Vec<AgentState<S>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: lineno, msg };
        if let Some(rest) = line.strip_prefix("agent") {
            let (id, body) = rest.split_once(':').ok_or_else(|| perr("expected 'agent i: x=…, v=…'".into()))?;
            let id: usize = id.trim().parse().map_err(|_| perr(format!("bad agent id '{}'", id.trim())))?;
            if id != init.len() + 1 {
                return Err(perr(format!("expected agent {}, got {id}", init.len() + 1)));
            }
            let kv = fields(body, lineno)?;
            let get = |k: &str| {
                kv.iter().find(|(key, _)| *key == k).map(|(_, v)| *v).ok_or_else(|| perr(format!("missing {k}")))
            };
            let x = S::parse(get("x")?).map_err(|e| perr(e.to_string()))?;
            let v = S::parse(get("v")?).map_err(|e| perr(e.to_string()))?;
            init.push(AgentState::new(x, v));
        } else if header.is_none() {
            header = Some((lineno, fields(line, lineno)?));
        } else {
            return Err(perr(format!("unexpected line '{line}'")));
        }
    }
    let (lineno, kv) = header.ok_or(Error::Parse { line: 1, msg: "missing plan header".into() })?;
    let perr = |msg: String| Error::Parse { line: lineno, msg };
    let get = |k: &str| kv.iter().find(|(key, _)| *key == k).map(|(_, v)| *v);
    let need = |k: &str| get(k).ok_or_else(|| perr(format!("header is missing {k}")));
    let num = |k: &str| -> Result<S> { S::parse(need(k)?).map_err(|e| perr(e.to_string())) };
    let int =
        |k: &str| -> Result<u64> { need(k)?.parse().map_err(|_| perr(format!("{k} must be a non-negative integer"))) };
    let model = match need("model")?.parse::<ModelKind>()? {
        ModelKind::Di => Model::DoubleIntegrator,
        ModelKind::Ns => Model::NeutrallyStable(NsModel::new(num("a")?)?),
    };
    let period = int("T")?;
    let half_period = int("m")?;
    if period != 2 * half_period {
        return Err(perr(format!("T={period} is not twice m={half_period}")));
    }
    let root = int("root")? as usize;
    if root == 0 {
        return Err(perr("root is 1-based".into()));
    }
    if init.is_empty() {
        return Err(perr("plan lists no agents".into()));
    }
    Ok(PlanFile {
        model,
        gains: GainParams::new(num("alpha")?, num("beta")?),
        period,
        half_period,
        root: root - 1,
        init,
    })
}

impl<S: Scalar> PlanFile<S> {
    /// Rebuilds the full plan against a graph.
    pub fn into_plan(self, g: &WeightedGraph) -> Result<OrbitPlan<S>> {
        if self.init.len() != g.n() {
            return Err(Error::Invalid(format!("plan has {} agents but the graph has {}", self.init.len(), g.n())));
        }
        let partition = g.partition(self.root)?;
        let (intervals, equalities) = match self.model {
            Model::DoubleIntegrator => {
                let sys = position_constraints(g, &partition, &self.gains, self.half_period);
                (sys.intervals, sys.equalities)
            }
            Model::NeutrallyStable(_) => (Vec::new(), Vec::new()),
        };
        Ok(OrbitPlan {
            model: self.model,
            gains: self.gains,
            partition,
            half_period: self.half_period,
            period: self.period,
            init: self.init,
            pattern: PatternSpec::two_phase(self.half_period),
            intervals,
            equalities,
        })
    }
}

/// One row per `(k, agent)`; the last step has no inputs and leaves the
/// `u` columns empty.
pub fn write_csv<S: Scalar, W: std::io::Write>(t: &Trajectory<S>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for (k, states) in t.states.iter().enumerate() {
        for (i, s) in states.iter().enumerate() {
            let (raw, sat) = match (t.raw_u.get(k), t.sat_u.get(k)) {
                (Some(r), Some(u)) => (r[i].render(), u[i].render()),
                _ => (String::new(), String::new()),
            };
            w.write_record([k.to_string(), (i + 1).to_string(), s.x.render(), s.v.render(), raw, sat])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<S: Scalar>(t: &Trajectory<S>) -> String {
    let mut buf = Vec::new();
    write_csv(t, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Reads a trajectory CSV. Rows must be ordered by step, then agent.
pub fn parse_csv<S: Scalar>(text: &str, model: Model<S>) -> Result<Trajectory<S>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
    if headers.iter().ne(CSV_HEADER) {
        return Err(Error::Parse { line: 1, msg: format!("expected header '{}'", CSV_HEADER.join(",")) });
    }
    let mut states: Vec<Vec<AgentState<S>>> = Vec::new();
    let mut raw_u: Vec<Vec<S>> = Vec::new();
    let mut sat_u: Vec<Vec<S>> = Vec::new();
    let mut n: Option<usize> = None;
    for (idx, rec) in r.records().enumerate() {
        let line = idx + 2;
        let perr = |msg: String| Error::Parse { line, msg };
        let rec = rec.map_err(|e| perr(e.to_string()))?;
        if rec.len() != 6 {
            return Err(perr(format!("expected 6 fields, got {}", rec.len())));
        }
        let k: usize = rec[0].parse().map_err(|_| perr(format!("bad step '{}'", &rec[0])))?;
        let agent: usize = rec[1].parse().map_err(|_| perr(format!("bad agent '{}'", &rec[1])))?;
        let num = |s: &str| S::parse(s).map_err(|e| perr(e.to_string()));
        if agent == 1 {
            if let (Some(count), Some(last)) = (n, states.last()) {
                if last.len() != count {
                    return Err(perr(format!("step {} has {} agents, expected {count}", k - 1, last.len())));
                }
            } else if let Some(last) = states.last() {
                n = Some(last.len());
            }
            if k != states.len() {
                return Err(perr(format!("expected step {}, got {k}", states.len())));
            }
            states.push(Vec::new());
            raw_u.push(Vec::new());
            sat_u.push(Vec::new());
        }
        let row = states.len().checked_sub(1).ok_or_else(|| perr("first row must be agent 1".into()))?;
        if k != row || agent != states[row].len() + 1 {
            return Err(perr(format!("out of order row k={k}, agent={agent}")));
        }
        if n.is_some_and(|n| agent > n) {
            return Err(perr(format!("agent {agent} exceeds agent count {}", n.unwrap())));
        }
        states[row].push(AgentState::new(num(&rec[2])?, num(&rec[3])?));
        if !rec[4].is_empty() || !rec[5].is_empty() {
            raw_u[row].push(num(&rec[4])?);
            sat_u[row].push(num(&rec[5])?);
        }
    }
    let n = match (n, states.last()) {
        (Some(n), Some(last)) if last.len() != n => {
            let line = 2 + (states.len() - 1) * n;
            return Err(Error::Parse { line, msg: format!("final step has {} agents, expected {n}", last.len()) });
        }
        (_, Some(last)) => last.len(),
        (_, None) => return Err(Error::Parse { line: 2, msg: "no trajectory rows".into() }),
    };
    let steps = states.len() - 1;
    if let Some(k) = raw_u[..steps].iter().position(|u| u.len() != n) {
        return Err(Error::Parse { line: 2 + k * n, msg: format!("step {k} is missing inputs") });
    }
    raw_u.truncate(steps);
    sat_u.truncate(steps);
    Ok(Trajectory { model, states, raw_u, sat_u })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ClosedLoop;
    use crate::orbit::{synthesize_di, synthesize_ns, DiOptions};

    type Q = BigRational;

    fn example() -> WeightedGraph {
        WeightedGraph::parse(crate::test_fixtures::EXAMPLE_GRAPH).unwrap()
    }

    fn q(s: &str) -> Q {
        parse_rational(s).unwrap()
    }

    #[test]
    fn config_parsing() {
        let cfg = RunConfig::parse("# gains\nmodel = di\nalpha=0.4\nbeta = 0.42 # tail\nroot=1\n").unwrap();
        assert_eq!(cfg.alpha, Some(q("21/50") - q("0.02")));
        assert_eq!(cfg.beta, Some(q("21/50")));
        assert_eq!(cfg.mode, Mode::Exact);
        let err = RunConfig::parse("alpha=0.4\nbogus=1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let ns = RunConfig::parse("model=ns\nalpha=-0.5\nbeta=2\n").unwrap();
        assert!(ns.validate().is_err());
        let ns = RunConfig::parse("model=ns\na=1\n").unwrap();
        assert!(ns.validate().is_err());
        let init = RunConfig::parse("init = 21:-5.5, 16.02:5.5").unwrap().init.unwrap();
        assert_eq!(init[1], (q("16.02"), q("5.5")));
    }

    #[test]
    fn partition_report_lists_classes() {
        let g = example();
        let report = partition_report(&g, &g.partition(0).unwrap());
        assert!(report.starts_with("S_e = {1,5,6,7}; S_o = {2,3,4}; a_bar = 0.5\n"));
        assert!(report.contains("intra 2-3 w=1"));
    }

    #[test]
    fn plan_text_and_parse_back() {
        let g = example();
        let plan = synthesize_di(&g, &GainParams::new(q("0.4"), q("0.42")), &DiOptions::default()).unwrap();
        let text = write_plan(&plan);
        assert!(text.starts_with("model=di, T=22, m=11, alpha=0.4, beta=0.42, root=1\n"));
        assert!(text.contains("# interval 6-3: 5.4500 <= x_6(0) - x_3(0) <= 5.5500\n"));
        assert!(text.contains("# interval 1-2: 2.1167 <= x_1(0) - x_2(0) <= 8.8833\n"));
        let back = parse_plan::<Q>(&text).unwrap().into_plan(&g).unwrap();
        assert_eq!(back.init, plan.init);
        assert_eq!(back.intervals, plan.intervals);
        assert_eq!(write_plan(&back), text);

        let ns = synthesize_ns(&g, &NsModel::new(q("0.5")).unwrap(), &GainParams::new(q("-0.5"), q("2")), 0).unwrap();
        let text = write_plan(&ns);
        assert!(text.starts_with("model=ns, a=0.5, T=4, m=2"));
        assert!(text.contains("agent 1: x=1, v=-1\n"));
        assert!(text.contains("agent 2: x=-1, v=1\n"));
        assert_eq!(parse_plan::<Q>(&text).unwrap().into_plan(&g).unwrap().init, ns.init);
    }

    #[test]
    fn plan_errors() {
        assert!(matches!(parse_plan::<Q>("agent 1: x=0, v=0\n"), Err(Error::Parse { .. })));
        let bad = "model=di, T=5, m=2, alpha=0.4, beta=0.42, root=1\nagent 1: x=0, v=0\n";
        assert!(matches!(parse_plan::<Q>(bad), Err(Error::Parse { line: 1, .. })));
        let skip = "model=di, T=4, m=2, alpha=0.4, beta=0.42, root=1\nagent 2: x=0, v=0\n";
        assert!(matches!(parse_plan::<Q>(skip), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn csv_round_trip() {
        let g = example();
        let plan = synthesize_di(&g, &GainParams::new(q("0.4"), q("0.42")), &DiOptions::default()).unwrap();
        let sys = ClosedLoop::new(plan.model.clone(), &g, plan.gains.clone());
        let t = sys.simulate(&plan.init, 5).unwrap();
        let text = csv_string(&t);
        assert!(text.starts_with("k,agent,x,v,u_raw,u_sat\n"));
        assert_eq!(text.lines().count(), 1 + 6 * 7);
        assert!(text.lines().last().unwrap().ends_with(",,"));
        let back = parse_csv(&text, Model::DoubleIntegrator).unwrap();
        assert_eq!(back, t);

        let zero = sys.simulate(&plan.init, 0).unwrap();
        assert_eq!(csv_string(&zero).lines().count(), 8);
    }

    #[test]
    fn csv_errors() {
        let m = || Model::<Q>::DoubleIntegrator;
        assert!(parse_csv("a,b\n", m()).is_err());
        let short = "k,agent,x,v,u_raw,u_sat\n0,1,0,0,,\n0,2,0,0,,\n1,1,0,0,,\n";
        assert!(matches!(parse_csv(short, m()), Err(Error::Parse { .. })));
        let bad = "k,agent,x,v,u_raw,u_sat\n0,1,zz,0,,\n";
        assert!(matches!(parse_csv(bad, m()), Err(Error::Parse { line: 2, .. })));
        let gap = "k,agent,x,v,u_raw,u_sat\n0,1,0,0,0,0\n2,1,0,0,,\n";
        assert!(matches!(parse_csv(gap, m()), Err(Error::Parse { line: 3, .. })));
    }
}
