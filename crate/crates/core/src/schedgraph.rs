//! Per-slot scheduling graph. Vertices are candidate transmissions
//! `(tx, rx, datum)`; an edge means the two cannot share a slot.
//!
//! Every conflict rule depends only on the `(tx, rx)` pair of each
//! transmission, never on the datum. The graph is therefore stored as groups
//! of vertices sharing a directed link, plus a link-level conflict table. All
//! vertices of one link are mutually adjacent (same transmitter).

use std::fmt::{self, Write as _};
use std::ops::Range;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Scenario;
use crate::mwis::WeightedGraph;
use crate::netgraph::NetworkGraph;
use crate::propagation::{self, dbm_to_mw, Channel, RadioConfig};

/// Lower clamp on distance weights so every weight stays positive.
pub const MIN_WEIGHT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transmission {
    pub tx: usize,
    pub rx: usize,
    pub datum: usize,
}

impl Transmission {
    pub const fn new(tx: usize, rx: usize, datum: usize) -> Self {
        Transmission { tx, rx, datum }
    }

    pub fn link(&self) -> (usize, usize) {
        (self.tx, self.rx)
    }
}

impl fmt::Display for Transmission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t({},{},{})", self.tx, self.rx, self.datum)
    }
}

/// Data held by each vehicle at one slot. Datum `k` is the one generated by
/// vehicle `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetState {
    sets: Vec<FixedBitSet>,
    pub slot: usize,
}

impl DatasetState {
    /// Every vehicle holds only its own datum.
    pub fn initial(n: usize) -> Self {
        let sets = (0..n)
            .map(|i| {
                let mut s = FixedBitSet::with_capacity(n);
                s.insert(i);
                s
            })
            .collect();
        DatasetState { sets, slot: 0 }
    }

    pub fn vehicle_count(&self) -> usize {
        self.sets.len()
    }

    pub fn holds(&self, vehicle: usize, datum: usize) -> bool {
        self.sets[vehicle].contains(datum)
    }

    /// Returns whether the datum was new to the vehicle.
    pub fn insert(&mut self, vehicle: usize, datum: usize) -> bool {
        !self.sets[vehicle].put(datum)
    }

    pub fn data(&self, vehicle: usize) -> impl Iterator<Item = usize> + '_ {
        self.sets[vehicle].ones()
    }

    pub fn set(&self, vehicle: usize) -> &FixedBitSet {
        &self.sets[vehicle]
    }

    pub fn count(&self, vehicle: usize) -> usize {
        self.sets[vehicle].count_ones(..)
    }

    /// Sum of dataset sizes over all vehicles.
    pub fn total(&self) -> usize {
        (0..self.sets.len()).map(|v| self.count(v)).sum()
    }

    pub fn is_complete(&self) -> bool {
        let n = self.sets.len();
        self.sets.iter().all(|s| s.count_ones(..) == n)
    }

    /// Every vehicle's dataset contains the corresponding one in `other`.
    pub fn is_superset_of(&self, other: &DatasetState) -> bool {
        self.sets.iter().zip(&other.sets).all(|(a, b)| b.is_subset(a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictMode {
    /// Shared transmitter, shared receiver, half duplex.
    #[serde(rename = "basic")]
    BasicOnly,
    /// Basic rules plus the omnidirectional neighbor rule.
    Conventional,
    /// Basic rules plus the pairwise SINR rule.
    #[serde(rename = "mmwave")]
    MmWave,
}

impl ConflictMode {
    pub const ALL: [ConflictMode; 3] =
        [ConflictMode::BasicOnly, ConflictMode::Conventional, ConflictMode::MmWave];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConflictMode::BasicOnly => "basic",
            ConflictMode::Conventional => "conventional",
            ConflictMode::MmWave => "mmwave",
        }
    }
}

impl fmt::Display for ConflictMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConflictMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" | "basic-only" => Ok(ConflictMode::BasicOnly),
            "conventional" | "conventional-d" => Ok(ConflictMode::Conventional),
            "mmwave" | "mmwave-d-prime" => Ok(ConflictMode::MmWave),
            other => Err(Error::config(format!(
                "unknown conflict mode `{other}` (expected basic, conventional or mmwave)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConflictPolicy {
    pub mode: ConflictMode,
    /// Linear SINR threshold used by the pairwise SINR rule.
    pub sinr_threshold: f64,
}

impl ConflictPolicy {
    pub fn new(mode: ConflictMode, cfg: &RadioConfig) -> Self {
        ConflictPolicy {
            mode,
            sinr_threshold: propagation::link_budget(cfg).sinr_threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// Unit weights: maximize the number of transmissions.
    MaxTransmission,
    /// Distance from the datum's origin to the intersection center.
    MaxDistance,
}

impl WeightMode {
    pub const ALL: [WeightMode; 2] = [WeightMode::MaxTransmission, WeightMode::MaxDistance];

    pub fn as_str(&self) -> &'static str {
        match self {
            WeightMode::MaxTransmission => "max-transmission",
            WeightMode::MaxDistance => "max-distance",
        }
    }
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-transmission" => Ok(WeightMode::MaxTransmission),
            "max-distance" => Ok(WeightMode::MaxDistance),
            other => Err(Error::config(format!(
                "unknown weight mode `{other}` (expected max-transmission or max-distance)"
            ))),
        }
    }
}

/// All `t(i, j, k)` with `{i, j}` linked, `k` held by `i` and missing at `j`,
/// ordered by `(tx, rx, datum)`.
pub fn enumerate_transmissions(g: &NetworkGraph, ds: &DatasetState) -> Vec<Transmission> {
    let mut out = Vec::new();
    for tx in 0..g.vertex_count() {
        for &rx in g.neighbors(tx) {
            out.extend(
                ds.data(tx)
                    .filter(|&k| !ds.holds(rx, k))
                    .map(|k| Transmission::new(tx, rx, k)),
            );
        }
    }
    out
}

/// Shared transmitter, shared receiver, or one side both sending and receiving.
pub fn basic_conflict(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 == b.0 || a.1 == b.1 || a.0 == b.1 || a.1 == b.0
}

/// Omnidirectional rule: either receiver is a network neighbor of the other
/// transmitter.
pub fn neighbor_conflict(a: (usize, usize), b: (usize, usize), g: &NetworkGraph) -> bool {
    g.has_edge(a.1, b.0) || g.has_edge(b.1, a.0)
}

fn four_distinct(a: (usize, usize), b: (usize, usize)) -> bool {
    !basic_conflict(a, b)
}

/// SINR of `victim` when `interferer` is the only other active link: desired
/// power over noise plus the interferer's power, both receivers aimed at
/// their own transmitters.
pub fn sinr_pairwise(
    victim: Transmission,
    interferer: Transmission,
    s: &Scenario,
    cfg: &RadioConfig,
) -> f64 {
    let lb = propagation::link_budget(cfg);
    let pos = |v| s.position(v);
    let desired = propagation::received_power_dbm(
        s,
        victim.tx,
        pos(victim.rx),
        victim.rx,
        pos(victim.tx),
        cfg,
    )
    .expect("victim link has distinct ends");
    let interference = if interferer.tx == victim.rx {
        0.0
    } else {
        let p = propagation::received_power_dbm(
            s,
            interferer.tx,
            pos(interferer.rx),
            victim.rx,
            pos(victim.tx),
            cfg,
        )
        .expect("interferer differs from victim receiver");
        dbm_to_mw(p)
    };
    dbm_to_mw(desired) / (lb.noise_power_mw() + interference)
}

/// Direct evaluation of the conflict rules for one pair of transmissions.
pub fn conflicts(
    a: Transmission,
    b: Transmission,
    policy: &ConflictPolicy,
    g: &NetworkGraph,
    s: &Scenario,
    cfg: &RadioConfig,
) -> bool {
    if a == b {
        return false;
    }
    let (la, lb) = (a.link(), b.link());
    if basic_conflict(la, lb) {
        return true;
    }
    match policy.mode {
        ConflictMode::BasicOnly => false,
        ConflictMode::Conventional => neighbor_conflict(la, lb, g),
        ConflictMode::MmWave => {
            four_distinct(la, lb)
                && (sinr_pairwise(a, b, s, cfg) <= policy.sinr_threshold
                    || sinr_pairwise(b, a, s, cfg) <= policy.sinr_threshold)
        }
    }
}

pub fn weight(t: Transmission, mode: WeightMode, s: &Scenario) -> f64 {
    match mode {
        WeightMode::MaxTransmission => 1.0,
        WeightMode::MaxDistance => s.position(t.datum).distance(s.center).max(MIN_WEIGHT),
    }
}

/// Conflict relation between the directed links of a network graph, computed
/// once per scenario and policy and reused for every slot.
#[derive(Debug, Clone)]
pub struct LinkConflicts {
    n: usize,
    links: Vec<(usize, usize)>,
    /// `n × n`, `usize::MAX` where no link exists.
    index: Vec<usize>,
    /// Symmetric; self-conflict is set.
    table: Vec<FixedBitSet>,
}

impl LinkConflicts {
    pub fn new(channel: &Channel<'_>, g: &NetworkGraph, policy: &ConflictPolicy) -> Self {
        let n = g.vertex_count();
        let mut links = Vec::new();
        for tx in 0..n {
            links.extend(g.neighbors(tx).iter().map(|&rx| (tx, rx)));
        }
        let mut index = vec![usize::MAX; n * n];
        for (id, &(tx, rx)) in links.iter().enumerate() {
            index[tx * n + rx] = id;
        }
        let m = links.len();
        let desired: Vec<f64> = links.iter().map(|&(t, r)| channel.desired_mw(t, r)).collect();
        let noise = channel.budget().noise_power_mw();
        let mut table = vec![FixedBitSet::with_capacity(m); m];
        for a in 0..m {
            table[a].insert(a);
            for b in a + 1..m {
                let (la, lb) = (links[a], links[b]);
                let hit = basic_conflict(la, lb)
                    || match policy.mode {
                        ConflictMode::BasicOnly => false,
                        ConflictMode::Conventional => neighbor_conflict(la, lb, g),
                        ConflictMode::MmWave => {
                            let th = policy.sinr_threshold;
                            desired[a] / (noise + channel.interference_mw(la, lb)) <= th
                                || desired[b] / (noise + channel.interference_mw(lb, la)) <= th
                        }
                    };
                if hit {
                    table[a].insert(b);
                    table[b].insert(a);
                }
            }
        }
        LinkConflicts {
            n,
            links,
            index,
            table,
        }
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link(&self, id: usize) -> (usize, usize) {
        self.links[id]
    }

    pub fn link_id(&self, tx: usize, rx: usize) -> Option<usize> {
        let id = self.index[tx * self.n + rx];
        (id != usize::MAX).then_some(id)
    }

    /// Links `a` and `b` (by id) cannot be active together.
    pub fn conflict(&self, a: usize, b: usize) -> bool {
        self.table[a].contains(b)
    }
}

/// Vertices sharing one directed link occupy a contiguous index range.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGroup {
    pub link: (usize, usize),
    pub vertices: Range<usize>,
    /// Other groups in conflict with this one, ascending.
    pub conflicts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulingGraph {
    vertices: Vec<Transmission>,
    weights: Vec<f64>,
    group_of: Vec<usize>,
    groups: Vec<LinkGroup>,
    max_degree: usize,
}

impl SchedulingGraph {
    /// Builds the slot graph from a precomputed link table.
    pub fn build(
        table: &LinkConflicts,
        ds: &DatasetState,
        weights: WeightMode,
        s: &Scenario,
    ) -> Self {
        let mut vertices = Vec::new();
        let mut groups: Vec<LinkGroup> = Vec::new();
        let mut group_link_ids = Vec::new();
        for (id, &(tx, rx)) in table.links.iter().enumerate() {
            let start = vertices.len();
            vertices.extend(
                ds.data(tx)
                    .filter(|&k| !ds.holds(rx, k))
                    .map(|k| Transmission::new(tx, rx, k)),
            );
            if vertices.len() > start {
                groups.push(LinkGroup {
                    link: (tx, rx),
                    vertices: start..vertices.len(),
                    conflicts: Vec::new(),
                });
                group_link_ids.push(id);
            }
        }
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                if table.conflict(group_link_ids[a], group_link_ids[b]) {
                    groups[a].conflicts.push(b);
                    groups[b].conflicts.push(a);
                }
            }
        }
        let mut group_of = vec![0; vertices.len()];
        for (gi, g) in groups.iter().enumerate() {
            group_of[g.vertices.clone()].fill(gi);
        }
        let weights = vertices.iter().map(|&t| weight(t, weights, s)).collect();
        let mut graph = SchedulingGraph {
            vertices,
            weights,
            group_of,
            groups,
            max_degree: 0,
        };
        graph.max_degree = (0..graph.groups.len())
            .map(|g| graph.group_degree(g))
            .max()
            .unwrap_or(0);
        graph
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Transmission] {
        &self.vertices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn groups(&self) -> &[LinkGroup] {
        &self.groups
    }

    pub fn group_of(&self, v: usize) -> usize {
        self.group_of[v]
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Degree shared by every vertex of group `g`.
    pub fn group_degree(&self, g: usize) -> usize {
        let grp = &self.groups[g];
        grp.vertices.len() - 1
            + grp
                .conflicts
                .iter()
                .map(|&h| self.groups[h].vertices.len())
                .sum::<usize>()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.group_degree(self.group_of[v])
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        let (ga, gb) = (self.group_of[a], self.group_of[b]);
        ga == gb || self.groups[ga].conflicts.binary_search(&gb).is_ok()
    }

    /// Conflict edges `(a, b)`, `a < b`, ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            let ga = self.group_of[a];
            out.extend(self.groups[ga].vertices.clone().filter(|&b| b > a).map(|b| (a, b)));
            for &gb in &self.groups[ga].conflicts {
                out.extend(self.groups[gb].vertices.clone().filter(|&b| b > a).map(|b| (a, b)));
            }
        }
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        (0..self.len()).map(|v| self.degree(v)).sum::<usize>() / 2
    }

    pub fn to_weighted_graph(&self) -> WeightedGraph {
        WeightedGraph::from_edges(self.weights.clone(), self.edges())
    }

    /// Line-oriented dump: `v <id> <tx> <rx> <datum> <weight>` per vertex, then
    /// `e <a> <b>` per edge.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "vertices {}", self.len()).unwrap();
        for (i, (t, w)) in self.vertices.iter().zip(&self.weights).enumerate() {
            writeln!(out, "v {i} {} {} {} {w}", t.tx, t.rx, t.datum).unwrap();
        }
        let edges = self.edges();
        writeln!(out, "edges {}", edges.len()).unwrap();
        for (a, b) in edges {
            writeln!(out, "e {a} {b}").unwrap();
        }
        out
    }
}

/// One-shot construction from scratch; the simulator reuses a
/// [`LinkConflicts`] table across slots instead.
pub fn build_scheduling_graph(
    g: &NetworkGraph,
    ds: &DatasetState,
    policy: &ConflictPolicy,
    mode: WeightMode,
    s: &Scenario,
    cfg: &RadioConfig,
) -> SchedulingGraph {
    let channel = Channel::new(s, cfg);
    let table = LinkConflicts::new(&channel, g, policy);
    SchedulingGraph::build(&table, ds, mode, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_scenario, Point, Road, ScenarioConfig, Vehicle};
    use crate::propagation::link_budget;

    fn chain() -> (NetworkGraph, DatasetState) {
        // v1–v2–v3 as ids 0–1–2
        (NetworkGraph::from_edges(3, [(0, 1), (1, 2)]), DatasetState::initial(3))
    }

    fn car(x: f64, y: f64) -> Vehicle {
        Vehicle {
            id: 0,
            position: Point::new(x, y),
            heading: Point::new(1.0, 0.0),
            road: Road::Horizontal,
            lane: 0,
            length: 4.4,
            width: 1.7,
        }
    }

    #[test]
    fn chain_enumeration() {
        let (g, ds) = chain();
        let t = enumerate_transmissions(&g, &ds);
        assert_eq!(
            t,
            vec![
                Transmission::new(0, 1, 0),
                Transmission::new(1, 0, 1),
                Transmission::new(1, 2, 1),
                Transmission::new(2, 1, 2),
            ]
        );
    }

    #[test]
    fn complete_datasets_enumerate_nothing() {
        let g = NetworkGraph::from_edges(3, [(0, 1), (1, 2)]);
        let mut ds = DatasetState::initial(3);
        for v in 0..3 {
            for k in 0..3 {
                ds.insert(v, k);
            }
        }
        assert!(ds.is_complete());
        assert!(enumerate_transmissions(&g, &ds).is_empty());
    }

    #[test]
    fn receiver_holding_datum_is_skipped() {
        let (g, mut ds) = chain();
        ds.insert(1, 0);
        let t = enumerate_transmissions(&g, &ds);
        assert!(!t.contains(&Transmission::new(0, 1, 0)));
        assert!(t.contains(&Transmission::new(1, 0, 1)));
    }

    #[test]
    fn basic_rules() {
        let g = NetworkGraph::from_edges(4, []);
        let s = Scenario::with_vehicles(
            ScenarioConfig::default(),
            (0..4).map(|i| car(20.0 + 10.0 * i as f64, 1.75)).collect(),
        );
        let cfg = RadioConfig::default();
        let p = ConflictPolicy::new(ConflictMode::BasicOnly, &cfg);
        let c = |a, b| conflicts(a, b, &p, &g, &s, &cfg);
        // same transmitter
        assert!(c(Transmission::new(0, 1, 0), Transmission::new(0, 2, 0)));
        // same receiver
        assert!(c(Transmission::new(0, 1, 0), Transmission::new(2, 1, 2)));
        // half duplex, both directions
        assert!(c(Transmission::new(0, 1, 0), Transmission::new(2, 0, 2)));
        assert!(c(Transmission::new(0, 1, 0), Transmission::new(1, 2, 1)));
        assert!(!c(Transmission::new(0, 1, 0), Transmission::new(2, 3, 2)));
    }

    #[test]
    fn chain_scheduling_graph_basic() {
        let (g, ds) = chain();
        let s = Scenario::with_vehicles(
            ScenarioConfig::default(),
            (0..3).map(|i| car(20.0 + 10.0 * i as f64, 1.75)).collect(),
        );
        let cfg = RadioConfig::default();
        let p = ConflictPolicy::new(ConflictMode::BasicOnly, &cfg);
        let sg = build_scheduling_graph(&g, &ds, &p, WeightMode::MaxTransmission, &s, &cfg);
        assert_eq!(sg.len(), 4);
        // t010–t101 (receiver/half duplex), t101–t121 (same transmitter)
        assert!(sg.are_adjacent(0, 1));
        assert!(sg.are_adjacent(1, 2));
        // every pair in a 3-chain shares a vehicle
        assert_eq!(sg.edge_count(), 6);
        assert_eq!(sg.edges().len(), 6);
        assert_eq!(sg.max_degree(), 3);
        assert!(sg.weights().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn empty_graph() {
        let g = NetworkGraph::from_edges(2, []);
        let s = Scenario::with_vehicles(ScenarioConfig::default(), vec![car(20.0, 1.75), car(40.0, 1.75)]);
        let cfg = RadioConfig::default();
        let p = ConflictPolicy::new(ConflictMode::MmWave, &cfg);
        let sg = build_scheduling_graph(&g, &DatasetState::initial(2), &p, WeightMode::MaxDistance, &s, &cfg);
        assert!(sg.is_empty());
        assert_eq!(sg.max_degree(), 0);
        assert_eq!(sg.to_text(), "vertices 0\nedges 0\n");
    }

    #[test]
    fn distance_weights() {
        let s = Scenario::with_vehicles(
            ScenarioConfig::default(),
            vec![car(30.0, 0.0), car(0.0, 0.0)],
        );
        assert_eq!(weight(Transmission::new(1, 0, 0), WeightMode::MaxDistance, &s), 30.0);
        assert_eq!(weight(Transmission::new(0, 1, 1), WeightMode::MaxDistance, &s), MIN_WEIGHT);
        assert_eq!(weight(Transmission::new(0, 1, 1), WeightMode::MaxTransmission, &s), 1.0);
    }

    /// Two links 60 m apart on opposite arms, transmitters pointing outward.
    fn opposite_pairs() -> Scenario {
        Scenario::with_vehicles(
            ScenarioConfig::default(),
            vec![car(30.0, 1.75), car(40.0, 1.75), car(-30.0, -1.75), car(-40.0, -1.75)],
        )
    }

    #[test]
    fn far_pairs_facing_away_do_not_conflict_in_mmwave_mode() {
        let s = opposite_pairs();
        let cfg = RadioConfig::default();
        let g = build_network_graph_for(&s, &cfg);
        let p = ConflictPolicy::new(ConflictMode::MmWave, &cfg);
        let a = Transmission::new(0, 1, 0);
        let b = Transmission::new(2, 3, 2);
        let th = p.sinr_threshold;
        assert!(sinr_pairwise(a, b, &s, &cfg) > th);
        assert!(sinr_pairwise(b, a, &s, &cfg) > th);
        assert!(!conflicts(a, b, &p, &g, &s, &cfg));
        // the omnidirectional rule fires: every vehicle hears every other
        let conv = ConflictPolicy::new(ConflictMode::Conventional, &cfg);
        assert!(conflicts(a, b, &conv, &g, &s, &cfg));
    }

    fn build_network_graph_for(s: &Scenario, cfg: &RadioConfig) -> NetworkGraph {
        crate::netgraph::build_network_graph(s, &link_budget(cfg), cfg)
    }

    #[test]
    fn blocked_interferer_gives_snr() {
        let cfg = RadioConfig::default();
        let s = Scenario::with_vehicles(
            ScenarioConfig::default(),
            vec![
                Vehicle { road: Road::Horizontal, ..car(30.0, 1.75) },
                Vehicle { road: Road::Horizontal, ..car(40.0, 1.75) },
                Vehicle { road: Road::Vertical, ..car(1.75, 30.0) },
                Vehicle { road: Road::Vertical, ..car(1.75, 40.0) },
            ],
        );
        let victim = Transmission::new(0, 1, 0);
        let sinr = sinr_pairwise(victim, Transmission::new(3, 2, 3), &s, &cfg);
        let ch = Channel::new(&s, &cfg);
        let snr = ch.desired_mw(0, 1) / ch.budget().noise_power_mw();
        assert_eq!(sinr, snr);
    }

    #[test]
    fn colinear_equal_distance_interferer_stays_above_threshold() {
        // victim 1 -> 0 over 10 m; interferer 2 -> 3 sits 10 m behind the
        // victim receiver on the same line and fires straight at it.
        let cfg = RadioConfig::default();
        let s = Scenario::with_vehicles(
            ScenarioConfig::default(),
            vec![car(30.0, 1.75), car(40.0, 1.75), car(20.0, 1.75), car(25.0, 1.75)],
        );
        let victim = Transmission::new(1, 0, 1);
        let interferer = Transmission::new(2, 3, 2);
        // boresight on the transmit side, back lobe (floor) at the victim
        // receiver, vehicle 3 blocking once
        let sinr = sinr_pairwise(victim, interferer, &s, &cfg);
        let lb = link_budget(&cfg);
        let desired = 10.0 + 2.0 * lb.boresight_gain_dbi - 88.0;
        let intf = 10.0 + lb.boresight_gain_dbi - 10.0 - 88.0 - 10.0;
        let by_hand = propagation::db_to_linear(desired)
            / (lb.noise_power_mw() + propagation::db_to_linear(intf));
        assert!((sinr / by_hand - 1.0).abs() < 1e-3, "{sinr} vs {by_hand}");
        assert!(sinr > lb.sinr_threshold);
    }

    #[test]
    fn table_matches_direct_rules_on_random_scenarios() {
        let cfg = RadioConfig::default();
        for seed in 0..5 {
            let s = build_scenario(&ScenarioConfig {
                rng_seed: seed,
                num_vehicles_nv: 6,
                avg_gap_lavg: 15.0,
                ..Default::default()
            })
            .unwrap();
            let g = build_network_graph_for(&s, &cfg);
            let ds = DatasetState::initial(6);
            for mode in ConflictMode::ALL {
                let p = ConflictPolicy::new(mode, &cfg);
                let sg = build_scheduling_graph(&g, &ds, &p, WeightMode::MaxTransmission, &s, &cfg);
                let v = sg.vertices();
                for a in 0..v.len() {
                    for b in 0..v.len() {
                        assert_eq!(
                            sg.are_adjacent(a, b),
                            conflicts(v[a], v[b], &p, &g, &s, &cfg),
                            "seed {seed} {mode} {} {}",
                            v[a],
                            v[b]
                        );
                    }
                }
            }
        }
    }
}
