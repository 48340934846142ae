//! Agent models, the saturated diffusive controller and the closed-loop
//! network map.

use std::ops::Neg;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::scalar::Scalar;

/// Default cap on the size of any exact state component, in bits.
pub const DEFAULT_BIT_LIMIT: u64 = 1 << 16;

/// `sgn(u) * min(1, |u|)`.
pub fn saturate<S: Scalar>(u: &S) -> S {
    let one = S::one();
    if *u > one {
        one
    } else if *u < -one.clone() {
        -one
    } else {
        u.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState<S> {
    pub x: S,
    pub v: S,
}

impl<S: Scalar> AgentState<S> {
    pub fn new(x: S, v: S) -> Self {
        Self { x, v }
    }

    pub fn zero() -> Self {
        Self { x: S::zero(), v: S::zero() }
    }

    pub fn close(&self, other: &Self) -> bool {
        self.x.close(&other.x) && self.v.close(&other.v)
    }

    fn size_bits(&self) -> u64 {
        self.x.size_bits().max(self.v.size_bits())
    }
}

impl<S: Scalar> Neg for AgentState<S> {
    type Output = Self;

    fn neg(self) -> Self {
        Self { x: -self.x, v: -self.v }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainParams<S> {
    pub alpha: S,
    pub beta: S,
}

impl<S: Scalar> GainParams<S> {
    pub fn new(alpha: S, beta: S) -> Self {
        Self { alpha, beta }
    }
}

/// `A = [[0, 1], [-1, 2a]]`, `B = [0, 1]^T` with `-1 < a < 1`, `a != 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NsModel<S> {
    a: S,
}

impl<S: Scalar> NsModel<S> {
    pub fn new(a: S) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidModel(format!("a = {} is not finite", a.render())));
        }
        let one = S::one();
        if a <= -one.clone() || a >= one || a.is_zero() {
            return Err(Error::InvalidModel(format!("a = {} must satisfy -1 < a < 1 and a != 0", a.render())));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> &S {
        &self.a
    }

    pub fn matrix(&self) -> [[S; 2]; 2] {
        [[S::zero(), S::one()], [-S::one(), self.two_a()]]
    }

    fn two_a(&self) -> S {
        self.a.clone() + self.a.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model<S> {
    DoubleIntegrator,
    NeutrallyStable(NsModel<S>),
}

impl<S: Scalar> Model<S> {
    pub fn step(&self, s: &AgentState<S>, u_sat: &S) -> AgentState<S> {
        match self {
            Model::DoubleIntegrator => step_di(s, u_sat),
            Model::NeutrallyStable(m) => step_ns(s, u_sat, m),
        }
    }

    /// Inverse of [`Model::step`] for a known saturated input.
    pub fn step_back(&self, next: &AgentState<S>, u_sat: &S) -> AgentState<S> {
        match self {
            Model::DoubleIntegrator => {
                let v = next.v.clone() - u_sat.clone();
                AgentState { x: next.x.clone() - v.clone(), v }
            }
            Model::NeutrallyStable(m) => {
                AgentState { x: m.two_a() * next.x.clone() - next.v.clone() + u_sat.clone(), v: next.x.clone() }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::DoubleIntegrator => "di",
            Model::NeutrallyStable(_) => "ns",
        }
    }
}

/// `x' = x + v`, `v' = v + u`.
pub fn step_di<S: Scalar>(s: &AgentState<S>, u_sat: &S) -> AgentState<S> {
    AgentState { x: s.x.clone() + s.v.clone(), v: s.v.clone() + u_sat.clone() }
}

/// `x' = v`, `v' = -x + 2a v + u`.
pub fn step_ns<S: Scalar>(s: &AgentState<S>, u_sat: &S, m: &NsModel<S>) -> AgentState<S> {
    AgentState { x: s.v.clone(), v: m.two_a() * s.v.clone() - s.x.clone() + u_sat.clone() }
}

/// Graph weights converted once into the scalar type.
#[derive(Debug, Clone)]
pub struct Coupling<S> {
    adj: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> Coupling<S> {
    pub fn new(g: &WeightedGraph) -> Self {
        let adj = (0..g.n()).map(|i| g.neighbors(i).iter().map(|(j, w)| (*j, S::from_rational(w))).collect()).collect();
        Self { adj }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn inputs(&self, gains: &GainParams<S>, states: &[AgentState<S>]) -> Vec<S> {
        self.adj
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let (mut dx, mut dv) = (S::zero(), S::zero());
                for (j, w) in row {
                    dx = dx + w.clone() * (states[*j].x.clone() - states[i].x.clone());
                    dv = dv + w.clone() * (states[*j].v.clone() - states[i].v.clone());
                }
                gains.alpha.clone() * dx + gains.beta.clone() * dv
            })
            .collect()
    }
}

/// `u_i = alpha * sum_j a_ij (x_j - x_i) + beta * sum_j a_ij (v_j - v_i)`.
pub fn control_inputs<S: Scalar>(g: &WeightedGraph, gains: &GainParams<S>, states: &[AgentState<S>]) -> Vec<S> {
    Coupling::new(g).inputs(gains, states)
}

/// A network of identical agents under the saturated relative-state
/// feedback.
#[derive(Debug, Clone)]
pub struct ClosedLoop<S> {
    pub model: Model<S>,
    pub coupling: Coupling<S>,
    pub gains: GainParams<S>,
    pub bit_limit: u64,
}

impl<S: Scalar> ClosedLoop<S> {
    pub fn new(model: Model<S>, g: &WeightedGraph, gains: GainParams<S>) -> Self {
        Self { model, coupling: Coupling::new(g), gains, bit_limit: DEFAULT_BIT_LIMIT }
    }

    pub fn n(&self) -> usize {
        self.coupling.n()
    }

    /// Raw inputs, saturated inputs and the successor state.
    pub fn step(&self, states: &[AgentState<S>]) -> (Vec<S>, Vec<S>, Vec<AgentState<S>>) {
        let raw = self.coupling.inputs(&self.gains, states);
        let sat: Vec<S> = raw.iter().map(saturate).collect();
        let next = states.iter().zip(&sat).map(|(s, u)| self.model.step(s, u)).collect();
        (raw, sat, next)
    }

    pub fn simulate(&self, init: &[AgentState<S>], steps: usize) -> Result<Trajectory<S>> {
        if init.len() != self.n() {
            return Err(Error::Invalid(format!("initial state has {} agents, graph has {}", init.len(), self.n())));
        }
        let mut traj = Trajectory {
            model: self.model.clone(),
            states: Vec::with_capacity(steps + 1),
            raw_u: Vec::with_capacity(steps),
            sat_u: Vec::with_capacity(steps),
        };
        traj.states.push(init.to_vec());
        for k in 0..steps {
            let (raw, sat, next) = self.step(&traj.states[k]);
            if S::EXACT && next.iter().any(|s| s.size_bits() > self.bit_limit) {
                return Err(Error::ResourceLimit { step: k + 1, limit: self.bit_limit });
            }
            traj.raw_u.push(raw);
            traj.sat_u.push(sat);
            traj.states.push(next);
        }
        Ok(traj)
    }
}

/// Runs the closed loop for `steps` steps from `init`.
pub fn simulate<S: Scalar>(
    model: Model<S>,
    g: &WeightedGraph,
    gains: GainParams<S>,
    init: &[AgentState<S>],
    steps: usize,
) -> Result<Trajectory<S>> {
    ClosedLoop::new(model, g, gains).simulate(init, steps)
}

/// States at `0..=steps` plus the raw and saturated inputs applied at
/// `0..steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub model: Model<S>,
    pub states: Vec<Vec<AgentState<S>>>,
    pub raw_u: Vec<Vec<S>>,
    pub sat_u: Vec<Vec<S>>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn n(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// Walks the recorded inputs backwards from the final state.
    pub fn rewind(&self) -> Vec<AgentState<S>> {
        let mut cur = self.states.last().cloned().unwrap_or_default();
        for sat in self.sat_u.iter().rev() {
            cur = cur.iter().zip(sat).map(|(s, u)| self.model.step_back(s, u)).collect();
        }
        cur
    }
}

/// Quadratic form `x^2 - 2a x v + v^2`, invariant under the free NS map.
pub fn ns_energy<S: Scalar>(m: &NsModel<S>, s: &AgentState<S>) -> S {
    s.x.clone() * s.x.clone() - m.two_a() * s.x.clone() * s.v.clone() + s.v.clone() * s.v.clone()
}
