//! Constructive synthesis of saturated periodic orbits.
//!
//! Both constructions keep every agent saturated for the whole period, with
//! a two-phase input sign pattern: even-class agents push `+1` then `-1`,
//! odd-class agents the mirror image. The double-integrator orbit has
//! period `2m` for a half-period `m` chosen from the gains and the weakest
//! cross edge; the neutrally stable orbit always has period 4.

mod di;
mod ns;
mod positions;

pub use di::{
    check_gains_di, edge_interval, min_half_period, position_constraints, synthesize_di, velocity_init, DiOptions,
    PositionSystem, MAX_RETRY_DOUBLINGS,
};
pub use ns::{check_gains_ns, init_states_ns, key_inequalities_ns, synthesize_ns, KeyInequality};
pub use positions::{satisfies, solve_positions, IntervalConstraint};

use crate::dynamics::{AgentState, GainParams, Model};
use crate::graph::{Class, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn flip(self) -> Self {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phase {
    pub len: u64,
    pub sign: Sign,
}

/// Required sign of the raw input, per class and phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSpec {
    pub even: Vec<Phase>,
    pub odd: Vec<Phase>,
}

impl PatternSpec {
    /// `half` steps of `+` then `half` of `-` on the even class, mirrored on
    /// the odd class.
    pub fn two_phase(half: u64) -> Self {
        let even = vec![Phase { len: half, sign: Sign::Positive }, Phase { len: half, sign: Sign::Negative }];
        let odd = even.iter().map(|p| Phase { len: p.len, sign: p.sign.flip() }).collect();
        Self { even, odd }
    }

    pub fn period(&self) -> u64 {
        self.even.iter().map(|p| p.len).sum()
    }

    pub fn is_consistent(&self) -> bool {
        self.period() == self.odd.iter().map(|p| p.len).sum::<u64>()
    }

    /// Sign required at step `k` (taken modulo the period).
    pub fn sign_at(&self, class: Class, k: u64) -> Sign {
        let phases = match class {
            Class::Even => &self.even,
            Class::Odd => &self.odd,
        };
        let mut k = k % self.period().max(1);
        for p in phases {
            if k < p.len {
                return p.sign;
            }
            k -= p.len;
        }
        unreachable!("k reduced modulo the period")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitPlan<S> {
    pub model: Model<S>,
    pub gains: GainParams<S>,
    pub partition: Partition,
    /// `m` for the double integrator, 2 for the neutrally stable model.
    pub half_period: u64,
    pub period: u64,
    pub init: Vec<AgentState<S>>,
    pub pattern: PatternSpec,
    /// Cross-edge intervals on `x_i(0) - x_j(0)`; empty for the NS model.
    pub intervals: Vec<IntervalConstraint<S>>,
    /// Intra-class edges whose endpoints start at the same position.
    pub equalities: Vec<(usize, usize)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_phase_pattern() {
        let p = PatternSpec::two_phase(3);
        assert_eq!(p.period(), 6);
        assert!(p.is_consistent());
        assert_eq!(p.sign_at(Class::Even, 0), Sign::Positive);
        assert_eq!(p.sign_at(Class::Even, 2), Sign::Positive);
        assert_eq!(p.sign_at(Class::Even, 3), Sign::Negative);
        assert_eq!(p.sign_at(Class::Odd, 0), Sign::Negative);
        assert_eq!(p.sign_at(Class::Odd, 5), Sign::Positive);
        assert_eq!(p.sign_at(Class::Odd, 6), Sign::Negative);
    }
}
