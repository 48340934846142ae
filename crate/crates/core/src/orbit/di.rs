use super::positions::{solve_positions, IntervalConstraint};
use super::{OrbitPlan, PatternSpec};
use crate::dynamics::{AgentState, GainParams, Model};
use crate::error::{Error, Result};
use crate::graph::{Class, Partition, WeightedGraph};
use crate::scalar::Scalar;

/// Infeasible position systems are retried with `m` doubled at most this
/// many times.
pub const MAX_RETRY_DOUBLINGS: u32 = 10;

/// `0 < alpha < beta < 3 alpha / 2`.
pub fn check_gains_di<S: Scalar>(gains: &GainParams<S>) -> bool {
    let GainParams { alpha, beta } = gains;
    let bound = alpha.clone() * S::ratio(3, 2);
    alpha.is_positive() && alpha < beta && *beta < bound
}

/// Smallest `m >= 3` with `m >= (4(alpha - beta) + 2 / a_bar) / (3 alpha - 2 beta)`.
pub fn min_half_period<S: Scalar>(gains: &GainParams<S>, a_bar: &S) -> Result<u64> {
    if !check_gains_di(gains) {
        return Err(gate_error(gains));
    }
    if !a_bar.is_positive() {
        return Err(Error::Invalid("minimum cross-edge weight must be positive".into()));
    }
    let GainParams { alpha, beta } = gains;
    let four = S::from_int(4);
    let numer = four * (alpha.clone() - beta.clone()) + S::from_int(2) / a_bar.clone();
    let denom = S::from_int(3) * alpha.clone() - S::from_int(2) * beta.clone();
    let bound =
        (numer / denom).ceil_i64().ok_or_else(|| Error::Invalid("half-period bound does not fit in 64 bits".into()))?;
    Ok(bound.max(3) as u64)
}

fn gate_error<S: Scalar>(gains: &GainParams<S>) -> Error {
    Error::GainGate(format!(
        "need 0 < alpha < beta < 3 alpha / 2, got alpha = {}, beta = {}",
        gains.alpha.render(),
        gains.beta.render()
    ))
}

/// `-m/2` on the even class, `+m/2` on the odd class.
pub fn velocity_init<S: Scalar>(m: u64, p: &Partition) -> Vec<S> {
    let half = S::ratio(m as i64, 2);
    (0..p.n())
        .map(|i| match p.class(i) {
            Class::Even => -half.clone(),
            Class::Odd => half.clone(),
        })
        .collect()
}

/// Bounds on `x_i(0) - x_j(0)` for a cross edge of weight `w`:
/// `[(1/w + (beta - alpha)(m - 2)) / alpha, (2 alpha (m - 1) - beta (m - 2) - 1/w) / alpha]`.
pub fn edge_interval<S: Scalar>(w: &S, gains: &GainParams<S>, m: u64) -> (S, S) {
    let GainParams { alpha, beta } = gains;
    let inv_w = S::one() / w.clone();
    let m_minus_2 = S::from_int(m as i64 - 2);
    let m_minus_1 = S::from_int(m as i64 - 1);
    let lower = (inv_w.clone() + (beta.clone() - alpha.clone()) * m_minus_2.clone()) / alpha.clone();
    let upper = (S::from_int(2) * alpha.clone() * m_minus_1 - beta.clone() * m_minus_2 - inv_w) / alpha.clone();
    (lower, upper)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionSystem<S> {
    pub equalities: Vec<(usize, usize)>,
    pub intervals: Vec<IntervalConstraint<S>>,
}

/// One equality per intra-class edge and one interval per cross edge,
/// oriented (even, odd).
pub fn position_constraints<S: Scalar>(
    g: &WeightedGraph,
    p: &Partition,
    gains: &GainParams<S>,
    m: u64,
) -> PositionSystem<S> {
    let intervals = p
        .cross_edges
        .iter()
        .map(|&(i, j)| {
            let w = S::from_rational(g.weight(i, j).expect("cross edge is a graph edge"));
            let (lower, upper) = edge_interval(&w, gains, m);
            IntervalConstraint { i, j, lower, upper }
        })
        .collect();
    PositionSystem { equalities: p.intra_edges.clone(), intervals }
}

#[derive(Debug, Clone)]
pub struct DiOptions<S> {
    /// Agent whose BFS distance defines the parity classes.
    pub root: usize,
    pub m_override: Option<u64>,
    /// Agent pinned to `base`; the root when absent.
    pub anchor: Option<usize>,
    pub base: S,
}

impl<S: Scalar> Default for DiOptions<S> {
    fn default() -> Self {
        Self { root: 0, m_override: None, anchor: None, base: S::zero() }
    }
}

/// Builds a period-`2m` orbit of the saturated double-integrator network.
pub fn synthesize_di<S: Scalar>(g: &WeightedGraph, gains: &GainParams<S>, opts: &DiOptions<S>) -> Result<OrbitPlan<S>> {
    if !check_gains_di(gains) {
        return Err(gate_error(gains));
    }
    if g.n() < 2 {
        return Err(Error::Invalid("a periodic orbit needs at least two agents".into()));
    }
    let partition = g.partition(opts.root)?;
    let a_bar = S::from_rational(&partition.a_bar);

    let mut m = match opts.m_override {
        Some(m) => {
            if m < 3 {
                return Err(Error::Invalid(format!("half-period m={m} must be at least 3")));
            }
            let system = position_constraints(g, &partition, gains, m);
            if let Some(c) = system.intervals.iter().find(|c| !c.is_nonempty()) {
                return Err(Error::EmptyInterval { m, i: c.i + 1, j: c.j + 1 });
            }
            m
        }
        None => min_half_period(gains, &a_bar)?,
    };

    let anchor = opts.anchor.unwrap_or(opts.root);
    let mut attempt = 0;
    let (system, positions) = loop {
        let system = position_constraints(g, &partition, gains, m);
        match solve_positions(g.n(), &system.equalities, &system.intervals, anchor, &opts.base) {
            Ok(x) => break (system, x),
            Err(Error::Infeasible(_)) if attempt < MAX_RETRY_DOUBLINGS => {
                attempt += 1;
                m *= 2;
            }
            Err(e) => return Err(e),
        }
    };

    let velocities = velocity_init::<S>(m, &partition);
    let init = positions.into_iter().zip(velocities).map(|(x, v)| AgentState::new(x, v)).collect();
    Ok(OrbitPlan {
        model: Model::DoubleIntegrator,
        gains: gains.clone(),
        partition,
        half_period: m,
        period: 2 * m,
        init,
        pattern: PatternSpec::two_phase(m),
        intervals: system.intervals,
        equalities: system.equalities,
    })
}
