use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

use satorbit::io::{csv_string, parse_csv, parse_plan, write_plan};
use satorbit::orbit::{
    check_gains_ns, edge_interval, key_inequalities_ns, satisfies, solve_positions, synthesize_di, synthesize_ns,
    DiOptions, IntervalConstraint,
};
use satorbit::scalar::parse_rational;
use satorbit::{Class, ClosedLoop, Error, Exact, GainParams, Model, NsModel, Scalar, WeightedGraph};

type Q = BigRational;

fn hundredths(k: i64) -> Q {
    Q::new(k.into(), 100.into())
}

/// Connected graphs on 2..=max_n agents: a random spanning tree plus extra
/// edges, weights in [0.2, 3] with two decimals.
fn connected_graph(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|v| 0..v).collect();
            let pairs = n * (n - 1) / 2;
            (Just(n), parents, prop::collection::vec(any::<bool>(), pairs), prop::collection::vec(20i64..=300, n * n))
        })
        .prop_map(|(n, parents, extra, weights)| {
            let mut set = BTreeSet::new();
            for (v, p) in parents.into_iter().enumerate() {
                set.insert((p, v + 1));
            }
            let mut idx = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if extra[idx] && idx % 3 == 0 {
                        set.insert((i, j));
                    }
                    idx += 1;
                }
            }
            let edges = set.into_iter().enumerate().map(|(k, (i, j))| (i, j, hundredths(weights[k])));
            WeightedGraph::from_edges(n, edges).unwrap()
        })
}

/// All-pairs hop counts by repeated relaxation over the edge list.
fn hop_distances(g: &WeightedGraph) -> Vec<Vec<Option<usize>>> {
    let n = g.n();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for (i, j, _) in g.edges() {
        d[i][j] = Some(1);
        d[j][i] = Some(1);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_rows_sum_to_zero(g in connected_graph(9)) {
        let l = g.laplacian::<Q>();
        for (i, row) in l.iter().enumerate() {
            prop_assert!(row.iter().fold(Q::zero(), |acc, x| acc + x).is_zero());
            for (j, x) in row.iter().enumerate() {
                prop_assert_eq!(x, &l[j][i]);
                if i != j {
                    prop_assert!(!x.is_positive());
                }
            }
        }
    }

    #[test]
    fn bfs_matches_all_pairs_hops(g in connected_graph(8), root_seed in 0usize..64) {
        let root = root_seed % g.n();
        let hops = hop_distances(&g);
        let dist = g.bfs_distances(root).unwrap();
        for (i, d) in dist.iter().enumerate() {
            prop_assert_eq!(Some(*d), hops[root][i]);
        }
    }

    #[test]
    fn partition_classes_follow_parity(g in connected_graph(10), root_seed in 0usize..64) {
        let root = root_seed % g.n();
        let p = g.partition(root).unwrap();
        prop_assert_eq!(p.s_even.len() + p.s_odd.len(), g.n());
        prop_assert_eq!(p.cross_edges.len() + p.intra_edges.len(), g.edge_count());
        for i in 0..g.n() {
            let want = if p.dist[i] % 2 == 0 { Class::Even } else { Class::Odd };
            prop_assert_eq!(p.class(i), want);
        }
        let mut a_bar: Option<Q> = None;
        for &(i, j) in &p.cross_edges {
            prop_assert_eq!(p.class(i), Class::Even);
            prop_assert_eq!(p.class(j), Class::Odd);
            let w = g.weight(i, j).unwrap().clone();
            a_bar = Some(a_bar.map_or(w.clone(), |a| if w < a { w } else { a }));
        }
        for &(i, j) in &p.intra_edges {
            prop_assert_eq!(p.dist[i], p.dist[j]);
        }
        prop_assert_eq!(Some(p.a_bar), a_bar);
    }

    #[test]
    fn edge_list_round_trip(g in connected_graph(10)) {
        let text = g.to_edge_list();
        let back = WeightedGraph::parse(&text).unwrap();
        prop_assert_eq!(back.to_edge_list(), text);
        prop_assert_eq!(back.edges().count(), g.edge_count());
    }

    #[test]
    fn ns_gate_implies_key_inequalities(
        g in connected_graph(9),
        a_k in 10i64..=90,
        negative in any::<bool>(),
        alpha_k in -300i64..=300,
        beta_k in -500i64..=500,
    ) {
        let a = hundredths(if negative { -a_k } else { a_k });
        let model = NsModel::new(a).unwrap();
        let gains = GainParams::new(hundredths(alpha_k), hundredths(beta_k));
        let p = g.partition(0).unwrap();
        let gate = check_gains_ns(&model, &gains, &p.a_bar);
        let keys = key_inequalities_ns(&g, &p, &model, &gains);
        if gate {
            prop_assert!(keys.iter().all(|k| k.holds()));
            prop_assert!(synthesize_ns(&g, &model, &gains, 0).is_ok());
        }
        // On the weakest cross edge the two conditions coincide with the gate.
        let weakest = p.cross_edges.iter().find(|&&(i, j)| g.weight(i, j) == Some(&p.a_bar)).unwrap();
        let key = keys.iter().find(|k| (k.i, k.j) == *weakest).unwrap();
        prop_assert_eq!(key.holds(), gate);
    }

    #[test]
    fn interval_width_grows_with_m(
        alpha_k in 10i64..=100,
        u_k in 1i64..=99,
        w_k in 20i64..=300,
        m in 3u64..200,
    ) {
        let alpha = hundredths(alpha_k);
        let beta = alpha.clone() * (Q::from_integer(1.into()) + hundredths(u_k) / Q::from_integer(2.into()));
        let gains = GainParams::new(alpha, beta);
        let w = hundredths(w_k);
        let (l0, u0) = edge_interval(&w, &gains, m);
        let (l1, u1) = edge_interval(&w, &gains, m + 1);
        prop_assert!(u1.clone() - l1.clone() > u0.clone() - l0.clone());
        prop_assert_eq!(l0 + u0, Q::from_integer((m as i64).into()));
        prop_assert_eq!(l1 + u1, Q::from_integer((m as i64 + 1).into()));
    }

    #[test]
    fn di_plans_satisfy_their_constraints(
        g in connected_graph(8),
        alpha_k in 20i64..=100,
        u_k in 1i64..=90,
        base_k in -500i64..=500,
    ) {
        let alpha = hundredths(alpha_k);
        let beta = alpha.clone() * (Q::from_integer(1.into()) + hundredths(u_k) / Q::from_integer(2.into()));
        let opts = DiOptions { base: hundredths(base_k), ..DiOptions::default() };
        let plan = synthesize_di(&g, &GainParams::new(alpha, beta), &opts).unwrap();
        prop_assert_eq!(plan.period, 2 * plan.half_period);
        let x: Vec<Q> = plan.init.iter().map(|s| s.x.clone()).collect();
        prop_assert!(satisfies(&x, &plan.equalities, &plan.intervals));
        prop_assert_eq!(&x[0], &hundredths(base_k));
        let half = Q::new((plan.half_period as i64).into(), 2.into());
        for (i, s) in plan.init.iter().enumerate() {
            let want = if plan.partition.class(i) == Class::Even { -half.clone() } else { half.clone() };
            prop_assert_eq!(&s.v, &want);
        }
        let text = write_plan(&plan);
        let back = parse_plan::<Exact>(&text).unwrap().into_plan(&g).unwrap();
        prop_assert_eq!(back.init, plan.init);
    }

    #[test]
    fn csv_round_trip_is_exact(g in connected_graph(6), steps in 0usize..12, seed in prop::collection::vec(-999i64..999, 12)) {
        let init: Vec<_> = (0..g.n())
            .map(|i| satorbit::AgentState::new(Q::new(seed[2 * i].into(), 7.into()), Q::new(seed[2 * i + 1].into(), 3.into())))
            .collect();
        let gains = GainParams::new(parse_rational("0.4").unwrap(), parse_rational("0.42").unwrap());
        let t = ClosedLoop::new(Model::DoubleIntegrator, &g, gains).simulate(&init, steps).unwrap();
        let back = parse_csv(&csv_string(&t), Model::DoubleIntegrator).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn difference_constraints_solve_or_certify(
        n in 2usize..7,
        raw in prop::collection::vec((0usize..7, 0usize..7, -20i64..20, 0i64..15), 1..10),
    ) {
        let intervals: Vec<IntervalConstraint<Q>> = raw
            .iter()
            .filter(|(i, j, _, _)| i % n != j % n)
            .map(|&(i, j, lo, width)| IntervalConstraint {
                i: i % n,
                j: j % n,
                lower: Q::from_integer(lo.into()),
                upper: Q::from_integer((lo + width - 3).into()),
            })
            .collect();
        match solve_positions(n, &[], &intervals, 0, &Q::zero()) {
            Ok(x) => {
                prop_assert!(satisfies(&x, &[], &intervals));
                prop_assert!(x[0].is_zero());
            }
            Err(Error::Infeasible(cycle)) => {
                prop_assert!(!cycle.arcs.is_empty());
                let mut sum = Q::zero();
                for (k, arc) in cycle.arcs.iter().enumerate() {
                    let next = &cycle.arcs[(k + 1) % cycle.arcs.len()];
                    prop_assert_eq!(arc.to, next.from);
                    let bound = parse_rational(&arc.bound).unwrap();
                    // Each arc is one side of a supplied interval.
                    let (a, b) = (arc.from - 1, arc.to - 1);
                    let supplied = intervals.iter().any(|c| {
                        (c.i == b && c.j == a && c.upper == bound) || (c.i == a && c.j == b && -c.lower.clone() == bound)
                    });
                    prop_assert!(supplied);
                    sum += bound;
                }
                prop_assert!(sum.is_negative());
                prop_assert_eq!(sum, parse_rational(&cycle.total).unwrap());
            }
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }
}

#[test]
fn float_and_exact_plans_agree() {
    let g = WeightedGraph::parse(include_str!("../fixtures/example.graph")).unwrap();
    let exact = synthesize_di(
        &g,
        &GainParams::new(parse_rational("0.4").unwrap(), parse_rational("0.42").unwrap()),
        &DiOptions::default(),
    )
    .unwrap();
    let float = synthesize_di(&g, &GainParams::new(0.4, 0.42), &DiOptions::default()).unwrap();
    assert_eq!(exact.half_period, float.half_period);
    for (e, f) in exact.init.iter().zip(&float.init) {
        assert!((e.x.to_f64() - f.x).abs() < 1e-9);
        assert!((e.v.to_f64() - f.v).abs() < 1e-9);
    }
}
