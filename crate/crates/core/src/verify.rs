//! Checks that a trajectory realizes a planned periodic orbit.

use std::fmt;

use crate::dynamics::{saturate, AgentState, ClosedLoop, Model, Trajectory};
use crate::error::{Error, Result};
use crate::graph::{Class, Partition};
use crate::orbit::{OrbitPlan, PatternSpec, Sign};
use crate::scalar::Scalar;

/// First disagreement between two network states, 1-based agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub k: usize,
    pub agent: usize,
    pub detail: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={} agent={} {}", self.k, self.agent, self.detail)
    }
}

fn compare<S: Scalar>(k: usize, got: &[AgentState<S>], want: &[AgentState<S>]) -> Option<Mismatch> {
    got.iter().zip(want).enumerate().find(|(_, (g, w))| !g.close(w)).map(|(i, (g, w))| Mismatch {
        k,
        agent: i + 1,
        detail: format!("(x,v)=({},{}) expected ({},{})", g.x.render(), g.v.render(), w.x.render(), w.v.render()),
    })
}

/// `states[k + period] == states[k]` for every `k` the trajectory covers.
pub fn check_periodicity<S: Scalar>(t: &Trajectory<S>, period: usize) -> Result<Option<Mismatch>> {
    if period == 0 {
        return Err(Error::Invalid("period must be positive".into()));
    }
    if t.states.len() < period + 1 {
        return Err(Error::TrajectoryTooShort { len: t.states.len(), needed: period + 1 });
    }
    Ok((0..t.states.len() - period).find_map(|k| compare(k + period, &t.states[k + period], &t.states[k])))
}

/// Runs one period backwards from `states[0]` with the recorded inputs,
/// confirming at every step that the reconstructed predecessor really
/// produces that saturated input, and that the walk closes on `states[0]`.
pub fn check_backward_period<S: Scalar>(
    sys: &ClosedLoop<S>,
    t: &Trajectory<S>,
    period: usize,
) -> Result<Option<Mismatch>> {
    if t.sat_u.len() < period {
        return Err(Error::TrajectoryTooShort { len: t.states.len(), needed: period + 1 });
    }
    let mut cur = t.states[0].clone();
    for back in 1..=period {
        let k = period - back;
        let applied = &t.sat_u[k];
        let prev: Vec<_> = cur.iter().zip(applied).map(|(s, u)| sys.model.step_back(s, u)).collect();
        let produced = sys.coupling.inputs(&sys.gains, &prev);
        if let Some((i, u)) = produced.iter().enumerate().find(|(i, u)| !saturate(*u).close(&applied[*i])) {
            return Ok(Some(Mismatch {
                k,
                agent: i + 1,
                detail: format!(
                    "backward step -{back}: input saturates to {} not {}",
                    saturate(u).render(),
                    applied[i].render()
                ),
            }));
        }
        cur = prev;
    }
    Ok(compare(0, &cur, &t.states[0]).map(|mut m| {
        m.detail = format!("after one backward period {}", m.detail);
        m
    }))
}

/// Re-steps every recorded state and compares with its successor.
pub fn check_consistency<S: Scalar>(sys: &ClosedLoop<S>, t: &Trajectory<S>) -> Option<Mismatch> {
    for k in 0..t.steps() {
        let (raw, _, next) = sys.step(&t.states[k]);
        if let Some(u) = t.raw_u.get(k) {
            if let Some(i) = (0..raw.len()).find(|&i| !raw[i].close(&u[i])) {
                return Some(Mismatch {
                    k,
                    agent: i + 1,
                    detail: format!("recorded u={} but state gives {}", u[i].render(), raw[i].render()),
                });
            }
        }
        if let Some(m) = compare(k + 1, &t.states[k + 1], &next) {
            return Some(m);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternViolation {
    pub k: usize,
    pub agent: usize,
    pub value: String,
    pub expected: Sign,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternReport {
    pub checked: usize,
    pub violation: Option<PatternViolation>,
}

impl PatternReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Raw inputs must be `>= 1` in `+` phases and `<= -1` in `-` phases.
pub fn check_pattern<S: Scalar>(t: &Trajectory<S>, p: &Partition, spec: &PatternSpec) -> Result<PatternReport> {
    let period = spec.period() as usize;
    if t.raw_u.len() < period {
        return Err(Error::TrajectoryTooShort { len: t.states.len(), needed: period + 1 });
    }
    let one = S::one();
    let tol = S::tolerance();
    let mut checked = 0;
    for k in 0..period {
        for (agent, u) in t.raw_u[k].iter().enumerate() {
            let expected = spec.sign_at(p.class(agent), k as u64);
            let ok = match expected {
                Sign::Positive => *u >= one.clone() - tol.clone(),
                Sign::Negative => *u <= -one.clone() + tol.clone(),
            };
            checked += 1;
            if !ok {
                return Ok(PatternReport {
                    checked,
                    violation: Some(PatternViolation { k, agent: agent + 1, value: u.render(), expected }),
                });
            }
        }
    }
    Ok(PatternReport { checked, violation: None })
}

/// Piecewise closed form of a saturated double-integrator agent over one
/// period `2m`: drift `+1` then `-1` for the even class, mirrored for the
/// odd class.
pub fn closed_form_di<S: Scalar>(x0: &S, v0: &S, class: Class, m: u64, k: u64) -> Result<AgentState<S>> {
    if k > 2 * m {
        return Err(Error::Invalid(format!("step {k} outside 0..={}", 2 * m)));
    }
    let drift = match class {
        Class::Even => S::one(),
        Class::Odd => -S::one(),
    };
    let phase = |x: &S, v: &S, d: &S, j: u64| {
        let j_s = S::from_int(j as i64);
        let tri = S::ratio(j as i64 * (j as i64 - 1), 2);
        AgentState::new(x.clone() + j_s.clone() * v.clone() + d.clone() * tri, v.clone() + d.clone() * j_s)
    };
    if k <= m {
        Ok(phase(x0, v0, &drift, k))
    } else {
        let mid = phase(x0, v0, &drift, m);
        Ok(phase(&mid.x, &mid.v, &-drift, k - m))
    }
}

fn first_oracle_mismatch<S: Scalar>(t: &Trajectory<S>, plan: &OrbitPlan<S>) -> Option<Mismatch> {
    let m = plan.half_period;
    let horizon = (2 * m as usize).min(t.steps());
    for k in 0..=horizon {
        for (i, got) in t.states[k].iter().enumerate() {
            let init = &t.states[0][i];
            let want =
                closed_form_di(&init.x, &init.v, plan.partition.class(i), m, k as u64).expect("k within the period");
            if !got.close(&want) {
                return Some(Mismatch {
                    k,
                    agent: i + 1,
                    detail: format!(
                        "stepper ({},{}) vs closed form ({},{})",
                        got.x.render(),
                        got.v.render(),
                        want.x.render(),
                        want.v.render()
                    ),
                });
            }
        }
    }
    None
}

/// Every state over one period equals the closed form, and the closed form
/// returns to the start after `2m` steps.
pub fn oracle_check_di<S: Scalar>(t: &Trajectory<S>, plan: &OrbitPlan<S>) -> bool {
    oracle_report_di(t, plan).is_none()
}

pub fn oracle_report_di<S: Scalar>(t: &Trajectory<S>, plan: &OrbitPlan<S>) -> Option<Mismatch> {
    if let Some(m) = first_oracle_mismatch(t, plan) {
        return Some(m);
    }
    let m = plan.half_period as usize;
    if t.steps() < 2 * m {
        return Some(Mismatch { k: t.steps(), agent: 0, detail: "trajectory shorter than 2m".into() });
    }
    compare(2 * m, &t.states[2 * m], &t.states[0])
}

/// Smallest `t` in `1..=t_max` with `states[t] == states[0]`.
pub fn minimal_period_of<S: Scalar>(t: &Trajectory<S>, t_max: usize) -> Option<usize> {
    (1..=t_max.min(t.steps())).find(|&k| compare(k, &t.states[k], &t.states[0]).is_none())
}

pub fn minimal_period<S: Scalar>(sys: &ClosedLoop<S>, init: &[AgentState<S>], t_max: usize) -> Result<Option<usize>> {
    if t_max == 0 {
        return Err(Error::Invalid("t_max must be at least 1".into()));
    }
    let t = sys.simulate(init, t_max)?;
    Ok(minimal_period_of(&t, t_max))
}

/// `states[k + shift] == -states[k]` for `0 <= k <= steps - shift`.
pub fn check_antisymmetry<S: Scalar>(t: &Trajectory<S>, shift: usize) -> Option<Mismatch> {
    (0..t.states.len().saturating_sub(shift)).find_map(|k| {
        let negated: Vec<_> = t.states[k].iter().cloned().map(|s| -s).collect();
        compare(k + shift, &t.states[k + shift], &negated)
    })
}

/// `v_i(k + shift) == -v_i(k)` for `0 <= k <= shift`.
pub fn check_velocity_antisymmetry<S: Scalar>(t: &Trajectory<S>, shift: usize) -> Option<Mismatch> {
    (0..=shift).filter(|k| k + shift < t.states.len()).find_map(|k| {
        t.states[k].iter().zip(&t.states[k + shift]).enumerate().find_map(|(i, (a, b))| {
            (!b.v.close(&-a.v.clone())).then(|| Mismatch {
                k: k + shift,
                agent: i + 1,
                detail: format!("v={} expected {}", b.v.render(), (-a.v.clone()).render()),
            })
        })
    })
}

/// Agents joined by an intra-class edge follow identical trajectories.
pub fn check_intra_class_equality<S: Scalar>(t: &Trajectory<S>, p: &Partition) -> Option<Mismatch> {
    for (k, states) in t.states.iter().enumerate() {
        for &(i, j) in &p.intra_edges {
            if !states[i].close(&states[j]) {
                return Some(Mismatch {
                    k,
                    agent: j + 1,
                    detail: format!("differs from agent {} on intra edge", i + 1),
                });
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub minimal_period: Option<usize>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, outcome: Option<Mismatch>, ok_detail: String) {
        let (passed, detail) = match outcome {
            None => (true, ok_detail),
            Some(m) => (false, m.to_string()),
        };
        self.checks.push(CheckResult { name, passed, detail });
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "FAIL" };
            if c.detail.is_empty() {
                writeln!(f, "{}: {status}", c.name)?;
            } else {
                writeln!(f, "{}: {status} ({})", c.name, c.detail)?;
            }
        }
        match self.minimal_period {
            Some(p) => writeln!(f, "minimal_period: {p}")?,
            None => writeln!(f, "minimal_period: none")?,
        }
        writeln!(f, "verdict: {}", if self.passed() { "pass" } else { "FAIL" })
    }
}

/// Runs every applicable check of `t` against `plan`.
pub fn verify_trajectory<S: Scalar>(
    sys: &ClosedLoop<S>,
    plan: &OrbitPlan<S>,
    t: &Trajectory<S>,
) -> Result<VerificationReport> {
    let period = plan.period as usize;
    let mut report = VerificationReport { checks: Vec::new(), minimal_period: None };

    report.push("consistency", check_consistency(sys, t), format!("{} steps", t.steps()));
    report.push("periodicity", check_periodicity(t, period)?, format!("T={period}"));
    if S::EXACT {
        report.push("backward_period", check_backward_period(sys, t, period)?, String::new());
    }
    let pattern = check_pattern(t, &plan.partition, &plan.pattern)?;
    let checked = pattern.checked;
    report.push(
        "pattern",
        pattern.violation.map(|v| Mismatch {
            k: v.k,
            agent: v.agent,
            detail: format!("u={} violates sign {}", v.value, v.expected.symbol()),
        }),
        format!("{checked} inequalities"),
    );
    match &plan.model {
        Model::DoubleIntegrator => {
            report.push("oracle_di", oracle_report_di(t, plan), String::new());
            report.push(
                "velocity_antisymmetry",
                check_velocity_antisymmetry(t, plan.half_period as usize),
                String::new(),
            );
        }
        Model::NeutrallyStable(_) => {
            report.push("antisymmetry", check_antisymmetry(t, 2), String::new());
        }
    }
    report.push("intra_class_equality", check_intra_class_equality(t, &plan.partition), String::new());

    report.minimal_period = minimal_period_of(t, t.steps());
    Ok(report)
}

/// Simulates two periods of `plan` and verifies them.
pub fn verify_plan<S: Scalar>(sys: &ClosedLoop<S>, plan: &OrbitPlan<S>) -> Result<VerificationReport> {
    let t = sys.simulate(&plan.init, 2 * plan.period as usize)?;
    verify_trajectory(sys, plan, &t)
}
