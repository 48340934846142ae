//! Undirected weighted communication graphs and their BFS parity partition.
//!
//! Agents are numbered `0..n` internally; every textual surface (edge-list
//! files, error messages, reports) uses 1-based labels.

use std::collections::{BTreeMap, VecDeque};

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, render_rational, Scalar};

/// Symmetric nonnegative weights with an empty diagonal. Edges are the
/// pairs with positive weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    adj: Vec<Vec<(usize, BigRational)>>,
}

impl WeightedGraph {
    /// Builds a graph from 0-based `(i, j, weight)` triples.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, BigRational)>,
    {
        let mut builder = Builder::new(n);
        for (i, j, w) in edges {
            builder.add(0, i, j, w)?;
        }
        Ok(builder.finish())
    }

    /// Parses the edge-list format: an optional `n <count>` header followed
    /// by `i j w` lines with 1-based agents. Blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut declared: Option<usize> = None;
        let mut raw = Vec::new();
        let mut seen_edge = false;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields[0] == "n" {
                if declared.is_some() || seen_edge {
                    return Err(Error::Parse { line: line_no, msg: "agent count must be the first entry".into() });
                }
                let count = match fields.as_slice() {
                    [_, c] => c.parse::<usize>().ok().filter(|&c| c >= 1),
                    _ => None,
                };
                declared = Some(count.ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: format!("expected `n <count>` with count >= 1, got {content:?}"),
                })?);
                continue;
            }
            let [i, j, w] = fields.as_slice() else {
                return Err(Error::Parse { line: line_no, msg: format!("expected `i j w`, got {content:?}") });
            };
            let agent = |s: &str| {
                s.parse::<usize>()
                    .ok()
                    .filter(|&a| a >= 1)
                    .ok_or_else(|| Error::Parse { line: line_no, msg: format!("bad agent label {s:?}") })
            };
            let (i, j) = (agent(i)?, agent(j)?);
            let w = parse_rational(w).map_err(|_| Error::Parse { line: line_no, msg: format!("bad weight {w:?}") })?;
            seen_edge = true;
            raw.push((line_no, i - 1, j - 1, w));
        }

        let n = match declared {
            Some(n) => n,
            None => raw
                .iter()
                .map(|&(_, i, j, _)| i.max(j) + 1)
                .max()
                .ok_or(Error::Parse { line: 0, msg: "empty graph without an `n <count>` header".into() })?,
        };
        let mut builder = Builder::new(n);
        for (line, i, j, w) in raw {
            builder.add(line, i, j, w)?;
        }
        Ok(builder.finish())
    }

    /// Deterministic edge-list rendering, parseable by [`WeightedGraph::parse`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for (i, j, w) in self.edges() {
            out.push_str(&format!("{} {} {}\n", i + 1, j + 1, render_rational(w)));
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, BigRational)] {
        &self.adj[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<&BigRational> {
        self.adj[i].binary_search_by_key(&j, |&(k, _)| k).ok().map(|pos| &self.adj[i][pos].1)
    }

    /// Edges with `i < j`, sorted by `(i, j)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &BigRational)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |(j, _)| *j > i).map(move |(j, w)| (i, *j, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        self.reach(0).iter().all(Option::is_some)
    }

    /// Unweighted hop distances from `root`.
    pub fn bfs_distances(&self, root: usize) -> Result<Vec<usize>> {
        if root >= self.n {
            return Err(Error::AgentOutOfRange { agent: root + 1, n: self.n });
        }
        let reach = self.reach(root);
        reach
            .iter()
            .enumerate()
            .map(|(agent, d)| d.ok_or(Error::Disconnected { root: root + 1, agent: agent + 1 }))
            .collect()
    }

    fn reach(&self, root: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[root] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &(v, _) in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn partition(&self, root: usize) -> Result<Partition> {
        let dist = self.bfs_distances(root)?;
        let (mut s_even, mut s_odd) = (Vec::new(), Vec::new());
        for (i, d) in dist.iter().enumerate() {
            if d % 2 == 0 {
                s_even.push(i);
            } else {
                s_odd.push(i);
            }
        }
        let mut cross_edges = Vec::new();
        let mut intra_edges = Vec::new();
        let mut a_bar: Option<BigRational> = None;
        for (i, j, w) in self.edges() {
            match (dist[i] % 2 == 0, dist[j] % 2 == 0) {
                (true, false) => cross_edges.push((i, j)),
                (false, true) => cross_edges.push((j, i)),
                _ => {
                    intra_edges.push((i, j));
                    continue;
                }
            }
            if a_bar.as_ref().is_none_or(|a| w < a) {
                a_bar = Some(w.clone());
            }
        }
        let a_bar = match a_bar {
            Some(a) => a,
            // Only a single isolated agent has no cross edge.
            None if self.n == 1 => BigRational::zero(),
            None => unreachable!("connected graph with n > 1 has a BFS tree edge"),
        };
        Ok(Partition { root, dist, s_even, s_odd, cross_edges, intra_edges, a_bar })
    }

    /// `L = D - A` with scalar entries.
    pub fn laplacian<S: Scalar>(&self) -> Vec<Vec<S>> {
        let mut l = vec![vec![S::zero(); self.n]; self.n];
        for (i, row) in self.adj.iter().enumerate() {
            for (j, w) in row {
                let w = S::from_rational(w);
                l[i][i] = l[i][i].clone() + w.clone();
                l[i][*j] = -w;
            }
        }
        l
    }
}

struct Builder {
    n: usize,
    edges: BTreeMap<(usize, usize), BigRational>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Self { n, edges: BTreeMap::new() }
    }

    fn add(&mut self, line: usize, i: usize, j: usize, w: BigRational) -> Result<()> {
        for a in [i, j] {
            if a >= self.n {
                return Err(Error::AgentOutOfRange { agent: a + 1, n: self.n });
            }
        }
        if i == j {
            return Err(Error::SelfLoop { line, agent: i + 1 });
        }
        if !w.is_positive() {
            return Err(Error::NonPositiveWeight { line, i: i + 1, j: j + 1 });
        }
        let key = (i.min(j), i.max(j));
        match self.edges.get(&key) {
            Some(existing) if *existing != w => Err(Error::ConflictingEdge { line, i: key.0 + 1, j: key.1 + 1 }),
            Some(_) => Ok(()),
            None => {
                self.edges.insert(key, w);
                Ok(())
            }
        }
    }

    fn finish(self) -> WeightedGraph {
        let mut adj = vec![Vec::new(); self.n];
        for ((i, j), w) in self.edges {
            adj[i].push((j, w.clone()));
            adj[j].push((i, w));
        }
        for row in &mut adj {
            row.sort_by_key(|&(k, _)| k);
        }
        WeightedGraph { n: self.n, adj }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    Even,
    Odd,
}

/// Parity split of the agents by BFS distance from the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub root: usize,
    pub dist: Vec<usize>,
    pub s_even: Vec<usize>,
    pub s_odd: Vec<usize>,
    /// Oriented `(even, odd)`.
    pub cross_edges: Vec<(usize, usize)>,
    /// `(i, j)` with `i < j`, both in the same class.
    pub intra_edges: Vec<(usize, usize)>,
    /// Minimum cross-edge weight.
    pub a_bar: BigRational,
}

impl Partition {
    pub fn class(&self, agent: usize) -> Class {
        if self.dist[agent].is_multiple_of(2) {
            Class::Even
        } else {
            Class::Odd
        }
    }

    pub fn n(&self) -> usize {
        self.dist.len()
    }
}
