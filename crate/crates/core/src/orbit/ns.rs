use super::{OrbitPlan, PatternSpec};
use crate::dynamics::{AgentState, GainParams, Model, NsModel};
use crate::error::{Error, Result};
use crate::graph::{Class, Partition, WeightedGraph};
use crate::scalar::Scalar;

/// `|alpha| <= sgn(a) (beta - a / a_bar)`.
pub fn check_gains_ns<S: Scalar>(model: &NsModel<S>, gains: &GainParams<S>, a_bar: &S) -> bool {
    let a = model.a();
    let margin = gains.beta.clone() - a.clone() / a_bar.clone();
    let bound = if a.is_positive() { margin } else { -margin };
    gains.alpha.abs() <= bound
}

/// `(1/(2a), -1/(2a))` on the even class and its negation on the odd class.
pub fn init_states_ns<S: Scalar>(model: &NsModel<S>, p: &Partition) -> Vec<AgentState<S>> {
    let c = S::one() / (S::from_int(2) * model.a().clone());
    let even = AgentState::new(c.clone(), -c);
    (0..p.n())
        .map(|i| match p.class(i) {
            Class::Even => even.clone(),
            Class::Odd => -even.clone(),
        })
        .collect()
}

/// Per cross edge `(i, j)`: `a_ij (alpha - beta) / a <= -1` and
/// `a_ij (-alpha - beta) / a <= -1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyInequality {
    pub i: usize,
    pub j: usize,
    pub first: bool,
    pub second: bool,
}

impl KeyInequality {
    pub fn holds(&self) -> bool {
        self.first && self.second
    }
}

pub fn key_inequalities_ns<S: Scalar>(
    g: &WeightedGraph,
    p: &Partition,
    model: &NsModel<S>,
    gains: &GainParams<S>,
) -> Vec<KeyInequality> {
    let a = model.a();
    let minus_one = -S::one();
    let tol = S::tolerance();
    p.cross_edges
        .iter()
        .map(|&(i, j)| {
            let w = S::from_rational(g.weight(i, j).expect("cross edge is a graph edge"));
            let first = w.clone() * (gains.alpha.clone() - gains.beta.clone()) / a.clone();
            let second = w * (-gains.alpha.clone() - gains.beta.clone()) / a.clone();
            KeyInequality {
                i,
                j,
                first: first <= minus_one.clone() + tol.clone(),
                second: second <= minus_one.clone() + tol.clone(),
            }
        })
        .collect()
}

/// Builds the period-4 orbit of the saturated neutrally stable network.
pub fn synthesize_ns<S: Scalar>(
    g: &WeightedGraph,
    model: &NsModel<S>,
    gains: &GainParams<S>,
    root: usize,
) -> Result<OrbitPlan<S>> {
    if g.n() < 2 {
        return Err(Error::Invalid("a periodic orbit needs at least two agents".into()));
    }
    let partition = g.partition(root)?;
    let a_bar = S::from_rational(&partition.a_bar);
    if !check_gains_ns(model, gains, &a_bar) {
        return Err(Error::GainGate(format!(
            "need |alpha| <= sgn(a) (beta - a / a_bar), got a = {}, alpha = {}, beta = {}, a_bar = {}",
            model.a().render(),
            gains.alpha.render(),
            gains.beta.render(),
            a_bar.render()
        )));
    }
    if let Some(bad) = key_inequalities_ns(g, &partition, model, gains).iter().find(|k| !k.holds()) {
        return Err(Error::KeyInequality { i: bad.i + 1, j: bad.j + 1 });
    }
    let init = init_states_ns(model, &partition);
    Ok(OrbitPlan {
        model: Model::NeutrallyStable(model.clone()),
        gains: gains.clone(),
        partition,
        half_period: 2,
        period: 4,
        init,
        pattern: PatternSpec::two_phase(2),
        intervals: Vec::new(),
        equalities: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Vector2};
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::ratio(n, d)
    }

    fn example() -> WeightedGraph {
        WeightedGraph::parse(crate::test_fixtures::EXAMPLE_GRAPH).unwrap()
    }

    #[test]
    fn gate_examples() {
        let half = NsModel::new(q(1, 2)).unwrap();
        let a_bar = q(1, 2);
        assert!(check_gains_ns(&half, &GainParams::new(q(-1, 2), q(2, 1)), &a_bar));
        assert!(!check_gains_ns(&half, &GainParams::new(q(-11, 10), q(2, 1)), &a_bar));
        let neg = NsModel::new(q(-1, 2)).unwrap();
        assert!(check_gains_ns(&neg, &GainParams::new(q(0, 1), q(-2, 1)), &a_bar));
        // Boundary |alpha| = bound is admitted.
        assert!(check_gains_ns(&half, &GainParams::new(q(1, 1), q(2, 1)), &a_bar));
    }

    #[test]
    fn zero_beta_never_passes() {
        for a in [q(1, 2), q(-1, 2), q(9, 10), q(-1, 10)] {
            let m = NsModel::new(a).unwrap();
            for a_bar in [q(1, 10), q(1, 1), q(7, 2)] {
                assert!(!check_gains_ns(&m, &GainParams::new(q(0, 1), q(0, 1)), &a_bar));
            }
        }
        let r = synthesize_ns(&example(), &NsModel::new(q(1, 2)).unwrap(), &GainParams::new(q(0, 1), q(0, 1)), 0);
        assert!(matches!(r, Err(Error::GainGate(_))));
    }

    #[test]
    fn initial_states() {
        let p = example().partition(0).unwrap();
        let s = init_states_ns(&NsModel::new(q(1, 2)).unwrap(), &p);
        for i in [0, 4, 5, 6] {
            assert_eq!(s[i], AgentState::new(q(1, 1), q(-1, 1)));
        }
        for i in [1, 2, 3] {
            assert_eq!(s[i], AgentState::new(q(-1, 1), q(1, 1)));
        }
        let s = init_states_ns(&NsModel::new(q(1, 4)).unwrap(), &p);
        assert_eq!(s[0], AgentState::new(q(2, 1), q(-2, 1)));
        assert_eq!(s[1], AgentState::new(q(-2, 1), q(2, 1)));
    }

    /// Independent route: solve `(I - A^4) s = (A^2 - I)(I + A) B` directly.
    fn solve_fixed_point(a: f64) -> Vector2<f64> {
        let am = Matrix2::new(0.0, 1.0, -1.0, 2.0 * a);
        let b = Vector2::new(0.0, 1.0);
        let i = Matrix2::identity();
        let a2 = am * am;
        let lhs = i - a2 * a2;
        let rhs = (a2 - i) * (i + am) * b;
        lhs.lu().solve(&rhs).unwrap()
    }

    #[test]
    fn initial_states_match_linear_solve() {
        for a in [0.25, 0.5, -0.3, 0.9, -0.75] {
            let solved = solve_fixed_point(a);
            let p = WeightedGraph::parse("1 2 1").unwrap().partition(0).unwrap();
            let s = init_states_ns(&NsModel::new(a).unwrap(), &p);
            assert!((solved[0] - s[0].x).abs() < 1e-12 && (solved[1] - s[0].v).abs() < 1e-12);

            // Half-period antisymmetry form: s = -(I + A^2)^-1 (I + A) B.
            let am = Matrix2::new(0.0, 1.0, -1.0, 2.0 * a);
            let i = Matrix2::identity();
            let anti = -(i + am * am).try_inverse().unwrap() * (i + am) * Vector2::new(0.0, 1.0);
            assert!((anti - solved).norm() < 1e-12);
        }
    }

    #[test]
    fn key_inequalities_on_example() {
        let g = example();
        let p = g.partition(0).unwrap();
        let m = NsModel::new(q(1, 2)).unwrap();
        let gains = GainParams::new(q(-1, 2), q(2, 1));
        let keys = key_inequalities_ns(&g, &p, &m, &gains);
        assert_eq!(keys.len(), 6);
        assert!(keys.iter().all(KeyInequality::holds));
        let e36 = keys.iter().find(|k| (k.i, k.j) == (5, 2)).unwrap();
        assert!(e36.first && e36.second);

        // A vanishing weight makes both sides tend to zero.
        let weak = WeightedGraph::parse("1 2 1/1000").unwrap();
        let wp = weak.partition(0).unwrap();
        let k = &key_inequalities_ns(&weak, &wp, &m, &gains)[0];
        assert!(!k.first && !k.second);
    }

    #[test]
    fn key_inequalities_match_state_differences() {
        let g = example();
        let p = g.partition(0).unwrap();
        let m = NsModel::new(q(1, 2)).unwrap();
        let gains = GainParams::new(q(-1, 2), q(2, 1));
        let s0 = init_states_ns(&m, &p);
        let ones: Vec<Q> = (0..7).map(|i| if p.class(i) == Class::Even { q(1, 1) } else { q(-1, 1) }).collect();
        let s1: Vec<_> = s0.iter().zip(&ones).map(|(s, u)| crate::dynamics::step_ns(s, u, &m)).collect();
        for &(i, j) in &p.cross_edges {
            let w = g.weight(i, j).unwrap().clone();
            let term = |s: &[AgentState<Q>]| {
                w.clone()
                    * (gains.alpha.clone() * (s[i].x.clone() - s[j].x.clone())
                        + gains.beta.clone() * (s[i].v.clone() - s[j].v.clone()))
            };
            assert_eq!(term(&s0), w.clone() * (gains.alpha.clone() - gains.beta.clone()) / q(1, 2));
            assert_eq!(term(&s1), w.clone() * (-gains.alpha.clone() - gains.beta.clone()) / q(1, 2));
        }
    }

    #[test]
    fn plans() {
        let g = example();
        let plan = synthesize_ns(&g, &NsModel::new(q(1, 2)).unwrap(), &GainParams::new(q(-1, 2), q(2, 1)), 0).unwrap();
        assert_eq!(plan.period, 4);
        let plan = synthesize_ns(&g, &NsModel::new(q(-1, 2)).unwrap(), &GainParams::new(q(0, 1), q(-2, 1)), 0).unwrap();
        assert_eq!(plan.init[0], AgentState::new(q(-1, 1), q(1, 1)));
        assert_eq!(plan.init[1], AgentState::new(q(1, 1), q(-1, 1)));
    }
}
