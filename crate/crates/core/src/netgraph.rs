//! Vehicular network graph: an undirected edge joins two vehicles whose path
//! loss, with both antennas pointing at each other, is within the link-budget
//! loss threshold.

use std::fmt::Write as _;

use fixedbitset::FixedBitSet;

use crate::geometry::Scenario;
use crate::propagation::{Channel, LinkBudget, RadioConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    neighbors: Vec<Vec<usize>>,
    adjacency: Vec<FixedBitSet>,
}

impl NetworkGraph {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adjacency = vec![FixedBitSet::with_capacity(n); n];
        for (a, b) in edges {
            assert!(a != b && a < n && b < n, "bad edge ({a}, {b}) for {n} vertices");
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
        let neighbors = adjacency.iter().map(|row| row.ones().collect()).collect();
        NetworkGraph {
            neighbors,
            adjacency,
        }
    }

    /// Links every pair whose cached loss does not exceed the loss threshold.
    pub fn from_channel(channel: &Channel<'_>) -> Self {
        let n = channel.vehicle_count();
        let theta = channel.budget().loss_threshold_db;
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| channel.path_loss_db(i, j) <= theta);
        NetworkGraph::from_edges(n, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Ascending neighbor ids.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].contains(b)
    }

    /// Edges `(a, b)` with `a < b`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(a, ns)| ns.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    /// One component spans every vertex. Empty and single-vertex graphs count
    /// as connected.
    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n <= 1 {
            return true;
        }
        let mut seen = FixedBitSet::with_capacity(n);
        let mut stack = vec![0];
        seen.insert(0);
        while let Some(v) = stack.pop() {
            for &w in &self.neighbors[v] {
                if !seen.put(w) {
                    stack.push(w);
                }
            }
        }
        seen.count_ones(..) == n
    }

    /// `a b` per line, `a < b`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (a, b) in self.edges() {
            writeln!(out, "{a} {b}").unwrap();
        }
        out
    }
}

pub fn build_network_graph(s: &Scenario, lb: &LinkBudget, cfg: &RadioConfig) -> NetworkGraph {
    let channel = Channel::new(s, cfg);
    let n = s.len();
    let edges = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| channel.path_loss_db(i, j) <= lb.loss_threshold_db);
    NetworkGraph::from_edges(n, edges)
}

pub fn is_connected(g: &NetworkGraph) -> bool {
    g.is_connected()
}
