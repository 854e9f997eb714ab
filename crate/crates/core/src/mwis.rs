//! Maximum-weight independent set solvers.
//!
//! [`greedy_mwis`] is GWMIN: repeatedly take the vertex maximizing
//! `w(v) / (d(v) + 1)` over the remaining graph, then delete it and its
//! neighbors. Its total weight is at least `OPT / Δ`. [`exact_mwis`] is a
//! branch-and-bound oracle for small graphs.

use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedgraph::SchedulingGraph;

/// Largest graph [`exact_mwis`] accepts.
pub const EXACT_LIMIT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreedyRule {
    /// Weight over remaining degree plus one.
    #[default]
    Gwmin,
    /// Heaviest remaining vertex first.
    MaxWeight,
}

impl GreedyRule {
    fn score(self, weight: f64, degree: usize) -> f64 {
        match self {
            GreedyRule::Gwmin => weight / (degree + 1) as f64,
            GreedyRule::MaxWeight => weight,
        }
    }
}

impl FromStr for GreedyRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gwmin" => Ok(GreedyRule::Gwmin),
            "max-weight" => Ok(GreedyRule::MaxWeight),
            other => Err(Error::config(format!(
                "unknown greedy rule `{other}` (expected gwmin or max-weight)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndependentSet {
    /// Ascending vertex ids.
    pub vertices: Vec<usize>,
    pub total_weight: f64,
}

impl IndependentSet {
    fn from_vertices(mut vertices: Vec<usize>, weights: &[f64]) -> Self {
        vertices.sort_unstable();
        let total_weight = vertices.iter().map(|&v| weights[v]).sum();
        IndependentSet {
            vertices,
            total_weight,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Vertex-weighted undirected graph with bitset adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    weights: Vec<f64>,
    adjacency: Vec<FixedBitSet>,
}

impl WeightedGraph {
    pub fn from_edges(weights: Vec<f64>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let n = weights.len();
        let mut adjacency = vec![FixedBitSet::with_capacity(n); n];
        for (a, b) in edges {
            assert!(a != b, "self-loop on {a}");
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
        WeightedGraph { weights, adjacency }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].contains(b)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].count_ones(..)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.len()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(i, &a)| set[i + 1..].iter().all(|&b| a != b && !self.are_adjacent(a, b)))
    }
}

/// Greedy independent set; ties go to the smallest vertex id.
pub fn greedy_mwis(g: &WeightedGraph, rule: GreedyRule) -> IndependentSet {
    let n = g.len();
    let mut alive = FixedBitSet::with_capacity(n);
    alive.insert_range(..);
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut chosen = Vec::new();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for v in alive.ones() {
            let s = rule.score(g.weights[v], degree[v]);
            if best.is_none_or(|(_, bs)| s > bs) {
                best = Some((v, s));
            }
        }
        let Some((v, _)) = best else { break };
        chosen.push(v);
        let mut removed: Vec<usize> = g.adjacency[v].ones().filter(|&u| alive.contains(u)).collect();
        removed.push(v);
        for &u in &removed {
            alive.set(u, false);
        }
        for &u in &removed {
            for w in g.adjacency[u].ones() {
                if alive.contains(w) {
                    degree[w] -= 1;
                }
            }
        }
    }
    IndependentSet::from_vertices(chosen, &g.weights)
}

/// Same selection as [`greedy_mwis`] on the expanded graph, computed on link
/// groups. Groups are cliques and conflicts hold between whole groups, so a
/// pick always removes entire groups and every vertex of a group shares one
/// degree.
pub fn greedy_schedule(sg: &SchedulingGraph, rule: GreedyRule) -> IndependentSet {
    let groups = sg.groups();
    let weights = sg.weights();
    let size: Vec<usize> = groups.iter().map(|g| g.vertices.len()).collect();
    let mut alive = vec![true; groups.len()];
    let mut neighbor_load: Vec<usize> = groups
        .iter()
        .map(|g| g.conflicts.iter().map(|&h| size[h]).sum())
        .collect();
    // heaviest vertex of each group, first on ties
    let leader: Vec<usize> = groups
        .iter()
        .map(|g| {
            g.vertices
                .clone()
                .fold(g.vertices.start, |b, v| if weights[v] > weights[b] { v } else { b })
        })
        .collect();

    let mut chosen = Vec::new();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for gi in (0..groups.len()).filter(|&gi| alive[gi]) {
            let v = leader[gi];
            let s = rule.score(weights[v], size[gi] - 1 + neighbor_load[gi]);
            if best.is_none_or(|(_, bs)| s > bs) {
                best = Some((gi, s));
            }
        }
        let Some((gi, _)) = best else { break };
        chosen.push(leader[gi]);
        let removed: Vec<usize> = std::iter::once(gi)
            .chain(groups[gi].conflicts.iter().copied().filter(|&h| alive[h]))
            .collect();
        for &h in &removed {
            alive[h] = false;
        }
        for &h in &removed {
            for &k in &groups[h].conflicts {
                if alive[k] {
                    neighbor_load[k] -= size[h];
                }
            }
        }
    }
    IndependentSet::from_vertices(chosen, weights)
}

/// Exact maximum-weight independent set by branch and bound. Among optimal
/// sets the lexicographically smallest (ascending id list) is returned.
pub fn exact_mwis(g: &WeightedGraph) -> Result<IndependentSet> {
    let n = g.len();
    if n > EXACT_LIMIT {
        return Err(Error::TooLarge {
            vertices: n,
            limit: EXACT_LIMIT,
        });
    }
    let nbr: Vec<u32> = (0..n)
        .map(|v| g.adjacency[v].ones().fold(0u32, |m, u| m | (1 << u)))
        .collect();

    struct Search<'a> {
        weights: &'a [f64],
        nbr: &'a [u32],
        best_weight: f64,
        best_set: u32,
    }

    impl Search<'_> {
        fn bound(&self, candidates: u32) -> f64 {
            let mut sum = 0.0;
            let mut c = candidates;
            while c != 0 {
                sum += self.weights[c.trailing_zeros() as usize];
                c &= c - 1;
            }
            sum
        }

        fn run(&mut self, candidates: u32, set: u32, weight: f64) {
            if candidates == 0 {
                if weight > self.best_weight {
                    self.best_weight = weight;
                    self.best_set = set;
                }
                return;
            }
            if weight + self.bound(candidates) <= self.best_weight {
                return;
            }
            let v = candidates.trailing_zeros() as usize;
            let bit = 1u32 << v;
            self.run(candidates & !bit & !self.nbr[v], set | bit, weight + self.weights[v]);
            self.run(candidates & !bit, set, weight);
        }
    }

    let mut search = Search {
        weights: &g.weights,
        nbr: &nbr,
        best_weight: f64::NEG_INFINITY,
        best_set: 0,
    };
    search.run((1u32 << n) - 1, 0, 0.0);
    let vertices = (0..n).filter(|&v| search.best_set & (1 << v) != 0).collect();
    Ok(IndependentSet::from_vertices(vertices, &g.weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(g: &WeightedGraph) -> f64 {
        let n = g.len();
        (0u32..(1 << n))
            .filter_map(|mask| {
                let set: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
                g.is_independent(&set)
                    .then(|| set.iter().map(|&v| g.weights()[v]).sum::<f64>())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn empty_graph() {
        let g = WeightedGraph::from_edges(vec![], []);
        assert_eq!(greedy_mwis(&g, GreedyRule::Gwmin), IndependentSet::default());
        assert_eq!(exact_mwis(&g).unwrap(), IndependentSet::default());
    }

    #[test]
    fn single_vertex() {
        let g = WeightedGraph::from_edges(vec![2.5], []);
        let s = exact_mwis(&g).unwrap();
        assert_eq!((s.vertices, s.total_weight), (vec![0], 2.5));
    }

    #[test]
    fn triangle_takes_heaviest() {
        let g = WeightedGraph::from_edges(vec![3.0, 2.0, 1.0], [(0, 1), (1, 2), (0, 2)]);
        for rule in [GreedyRule::Gwmin, GreedyRule::MaxWeight] {
            assert_eq!(greedy_mwis(&g, rule).vertices, vec![0]);
        }
        assert_eq!(exact_mwis(&g).unwrap().vertices, vec![0]);
    }

    #[test]
    fn unit_path_takes_endpoints() {
        let g = WeightedGraph::from_edges(vec![1.0; 3], [(0, 1), (1, 2)]);
        let s = greedy_mwis(&g, GreedyRule::Gwmin);
        assert_eq!((s.vertices.clone(), s.total_weight), (vec![0, 2], 2.0));
        assert_eq!(exact_mwis(&g).unwrap(), s);
    }

    #[test]
    fn exact_tie_break_is_lexicographic() {
        // 4-cycle with unit weights: {0,2} and {1,3} both optimal
        let g = WeightedGraph::from_edges(vec![1.0; 4], [(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(exact_mwis(&g).unwrap().vertices, vec![0, 2]);
    }

    #[test]
    fn exact_refuses_large_graphs() {
        let g = WeightedGraph::from_edges(vec![1.0; EXACT_LIMIT + 1], []);
        assert!(matches!(exact_mwis(&g), Err(Error::TooLarge { vertices: 25, limit: 24 })));
    }

    fn arb_graph(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
        (1..=max_n).prop_flat_map(|n| {
            (
                prop::collection::vec(0.01f64..10.0, n),
                prop::collection::vec(any::<bool>(), n * (n - 1) / 2),
            )
                .prop_map(move |(w, bits)| {
                    let pairs = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
                    let edges: Vec<_> = pairs.zip(bits).filter(|(_, e)| *e).map(|(p, _)| p).collect();
                    WeightedGraph::from_edges(w, edges)
                })
        })
    }

    proptest! {
        #[test]
        fn exact_matches_enumeration(g in arb_graph(12)) {
            let s = exact_mwis(&g).unwrap();
            prop_assert!(g.is_independent(&s.vertices));
            prop_assert!((s.total_weight - brute_force(&g)).abs() < 1e-9);
        }

        #[test]
        fn greedy_is_independent_nonempty_and_within_ratio(g in arb_graph(14)) {
            for rule in [GreedyRule::Gwmin, GreedyRule::MaxWeight] {
                let s = greedy_mwis(&g, rule);
                prop_assert!(g.is_independent(&s.vertices));
                prop_assert!(!s.is_empty());
                prop_assert_eq!(&s, &greedy_mwis(&g, rule));
            }
            let delta = g.max_degree();
            if delta >= 1 {
                let s = greedy_mwis(&g, GreedyRule::Gwmin);
                let opt = exact_mwis(&g).unwrap().total_weight;
                prop_assert!(s.total_weight >= opt / delta as f64 - 1e-12);
            }
        }
    }
}
