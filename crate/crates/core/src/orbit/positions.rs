//! Initial positions from interval and equality constraints on
//! differences.
//!
//! Equalities are contracted with a union-find. Each interval
//! `lower <= x_i - x_j <= upper` becomes the arcs `j -> i` (weight `upper`)
//! and `i -> j` (weight `-lower`) of a shortest-path problem; Bellman-Ford
//! from a virtual source either yields feasible potentials or exposes a
//! negative cycle, which is returned as a certificate.

use std::collections::VecDeque;

use crate::error::{CycleArc, Error, InfeasibleCycle, Result};
use crate::scalar::Scalar;

/// `lower <= x[i] - x[j] <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalConstraint<S> {
    pub i: usize,
    pub j: usize,
    pub lower: S,
    pub upper: S,
}

impl<S: Scalar> IntervalConstraint<S> {
    pub fn is_nonempty(&self) -> bool {
        self.lower <= self.upper
    }

    pub fn contains(&self, diff: &S) -> bool {
        let tol = S::tolerance();
        self.lower.clone() - tol.clone() <= *diff && *diff <= self.upper.clone() + tol
    }

    pub fn midpoint(&self) -> S {
        (self.lower.clone() + self.upper.clone()) / S::from_int(2)
    }
}

/// Checks every equality and interval against `x`.
pub fn satisfies<S: Scalar>(x: &[S], equalities: &[(usize, usize)], intervals: &[IntervalConstraint<S>]) -> bool {
    equalities.iter().all(|&(i, j)| x[i].close(&x[j]))
        && intervals.iter().all(|c| c.contains(&(x[c.i].clone() - x[c.j].clone())))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// `dist[to] <= dist[from] + weight`, labelled with the agents it came from.
struct Arc<S> {
    from: usize,
    to: usize,
    weight: S,
    agents: (usize, usize),
}

const CENTERING_SWEEPS: usize = 8;

/// Solves the constraint system and pins `anchor` to `base`.
///
/// When every interval midpoint can be met simultaneously that point is
/// returned; otherwise the Bellman-Ford potentials are pulled toward the
/// midpoints by a few clamped coordinate sweeps, which never leave the
/// feasible set.
pub fn solve_positions<S: Scalar>(
    n: usize,
    equalities: &[(usize, usize)],
    intervals: &[IntervalConstraint<S>],
    anchor: usize,
    base: &S,
) -> Result<Vec<S>> {
    if anchor >= n {
        return Err(Error::AgentOutOfRange { agent: anchor + 1, n });
    }
    let pairs = equalities.iter().copied().chain(intervals.iter().map(|c| (c.i, c.j)));
    for (i, j) in pairs {
        if i >= n || j >= n {
            return Err(Error::AgentOutOfRange { agent: i.max(j) + 1, n });
        }
    }

    let mut uf = UnionFind::new(n);
    for &(i, j) in equalities {
        uf.union(i, j);
    }
    let mut class_of = vec![usize::MAX; n];
    let mut classes = 0;
    for a in 0..n {
        let r = uf.find(a);
        if class_of[r] == usize::MAX {
            class_of[r] = classes;
            classes += 1;
        }
        class_of[a] = class_of[r];
    }

    let mut arcs = Vec::with_capacity(2 * intervals.len());
    for c in intervals {
        let (ci, cj) = (class_of[c.i], class_of[c.j]);
        if ci == cj {
            let zero = S::zero();
            if !c.contains(&zero) {
                return Err(Error::ConflictingEquality { i: c.i + 1, j: c.j + 1 });
            }
            continue;
        }
        arcs.push(Arc { from: cj, to: ci, weight: c.upper.clone(), agents: (c.j, c.i) });
        arcs.push(Arc { from: ci, to: cj, weight: -c.lower.clone(), agents: (c.i, c.j) });
    }

    let potentials = bellman_ford(classes, &arcs)?;

    let mut x = match midpoint_assignment(classes, intervals, &class_of) {
        Some(mid) if class_constraints_hold(&mid, &arcs) => mid,
        _ => center(potentials, &arcs, intervals, &class_of),
    };

    let shift = base.clone() - x[class_of[anchor]].clone();
    for v in &mut x {
        *v = v.clone() + shift.clone();
    }
    Ok((0..n).map(|a| x[class_of[a]].clone()).collect())
}

fn bellman_ford<S: Scalar>(classes: usize, arcs: &[Arc<S>]) -> Result<Vec<S>> {
    let tol = S::tolerance();
    let mut dist = vec![S::zero(); classes];
    let mut pred: Vec<Option<usize>> = vec![None; classes];
    let mut last_relaxed = None;
    for _ in 0..classes.max(1) {
        last_relaxed = None;
        for (idx, arc) in arcs.iter().enumerate() {
            let cand = dist[arc.from].clone() + arc.weight.clone();
            if cand < dist[arc.to].clone() - tol.clone() {
                dist[arc.to] = cand;
                pred[arc.to] = Some(idx);
                last_relaxed = Some(arc.to);
            }
        }
        if last_relaxed.is_none() {
            return Ok(dist);
        }
    }
    let Some(mut node) = last_relaxed else {
        return Ok(dist);
    };
    // Step back far enough to be certain we are on the cycle.
    for _ in 0..classes {
        node = arcs[pred[node].expect("relaxed node has a predecessor")].from;
    }
    let start = node;
    let mut cycle = Vec::new();
    loop {
        let idx = pred[node].expect("cycle node has a predecessor");
        cycle.push(idx);
        node = arcs[idx].from;
        if node == start {
            break;
        }
    }
    cycle.reverse();
    let total = cycle.iter().fold(S::zero(), |acc, &idx| acc + arcs[idx].weight.clone());
    Err(Error::Infeasible(InfeasibleCycle {
        arcs: cycle
            .iter()
            .map(|&idx| CycleArc {
                from: arcs[idx].agents.0 + 1,
                to: arcs[idx].agents.1 + 1,
                bound: arcs[idx].weight.render(),
            })
            .collect(),
        total: total.render(),
    }))
}

/// Propagates `x_i - x_j = midpoint` along a spanning forest of the
/// constraint graph.
fn midpoint_assignment<S: Scalar>(
    classes: usize,
    intervals: &[IntervalConstraint<S>],
    class_of: &[usize],
) -> Option<Vec<S>> {
    let mut adj: Vec<Vec<(usize, S)>> = vec![Vec::new(); classes];
    for c in intervals {
        let (ci, cj) = (class_of[c.i], class_of[c.j]);
        if ci == cj {
            continue;
        }
        let mid = c.midpoint();
        adj[cj].push((ci, mid.clone()));
        adj[ci].push((cj, -mid));
    }
    let mut x: Vec<Option<S>> = vec![None; classes];
    for root in 0..classes {
        if x[root].is_some() {
            continue;
        }
        x[root] = Some(S::zero());
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let xu = x[u].clone()?;
            for (w, offset) in &adj[u] {
                if x[*w].is_none() {
                    x[*w] = Some(xu.clone() + offset.clone());
                    queue.push_back(*w);
                }
            }
        }
    }
    x.into_iter().collect()
}

fn class_constraints_hold<S: Scalar>(x: &[S], arcs: &[Arc<S>]) -> bool {
    let tol = S::tolerance();
    arcs.iter().all(|a| x[a.to] <= x[a.from].clone() + a.weight.clone() + tol.clone())
}

fn center<S: Scalar>(
    mut x: Vec<S>,
    arcs: &[Arc<S>],
    intervals: &[IntervalConstraint<S>],
    class_of: &[usize],
) -> Vec<S> {
    let classes = x.len();
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); classes];
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (idx, a) in arcs.iter().enumerate() {
        incoming[a.to].push(idx);
        outgoing[a.from].push(idx);
    }
    // Midpoint targets per class: (other class, offset) meaning x_c ~ x_other + offset.
    let mut targets: Vec<Vec<(usize, S)>> = vec![Vec::new(); classes];
    for c in intervals {
        let (ci, cj) = (class_of[c.i], class_of[c.j]);
        if ci != cj {
            let mid = c.midpoint();
            targets[ci].push((cj, mid.clone()));
            targets[cj].push((ci, -mid));
        }
    }
    for _ in 0..CENTERING_SWEEPS {
        for c in 0..classes {
            if targets[c].is_empty() {
                continue;
            }
            let mut hi: Option<S> = None;
            for &idx in &incoming[c] {
                let b = x[arcs[idx].from].clone() + arcs[idx].weight.clone();
                if hi.as_ref().is_none_or(|h| b < *h) {
                    hi = Some(b);
                }
            }
            let mut lo: Option<S> = None;
            for &idx in &outgoing[c] {
                let b = x[arcs[idx].to].clone() - arcs[idx].weight.clone();
                if lo.as_ref().is_none_or(|l| b > *l) {
                    lo = Some(b);
                }
            }
            let sum = targets[c].iter().fold(S::zero(), |acc, (o, off)| acc + x[*o].clone() + off.clone());
            let mut want = sum / S::from_int(targets[c].len() as i64);
            if let Some(h) = hi {
                if want > h {
                    want = h;
                }
            }
            if let Some(l) = lo {
                if want < l {
                    want = l;
                }
            }
            x[c] = want;
        }
    }
    x
}
