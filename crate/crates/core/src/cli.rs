//! Experiment harness: configuration, Monte-Carlo sweeps, CSV and summary
//! outputs, and re-summarizing of existing CSVs.
//!
//! Output files written by [`run_experiment`]:
//!
//! * `slots.csv`, one row per (case, run, slot, vehicle), columns
//!   [`SLOT_COLUMNS`]. Slot 0 is the state before any transmission.
//! * `runs.csv`, one row per (case, run), columns [`RUN_COLUMNS`].
//! * `summary.json`, a [`Summary`].

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{empirical_cdf, mean, quantile};
use crate::error::{Error, Result};
use crate::geometry::{build_scenario, ScenarioConfig};
use crate::mwis::GreedyRule;
use crate::propagation::RadioConfig;
use crate::schedgraph::{ConflictMode, ConflictPolicy, WeightMode};
use crate::simulator::{simulate, tau_bounds, ExecOptions, PlanOptions, DEFAULT_TAU_MAX};

pub const SCHEMA_VERSION: u32 = 1;

pub const SLOT_COLUMNS: [&str; 16] = [
    "case",
    "lavg",
    "nv",
    "beamwidth_deg",
    "mode",
    "weight",
    "run",
    "seed",
    "slot",
    "vehicle",
    "normalized_area",
    "area_m2",
    "scheduled",
    "delivered",
    "failed",
    "skipped",
];

pub const RUN_COLUMNS: [&str; 20] = [
    "case",
    "lavg",
    "nv",
    "beamwidth_deg",
    "mode",
    "weight",
    "run",
    "seed",
    "connected",
    "complete",
    "tau_end",
    "lower_bound",
    "upper_bound",
    "area_all_m2",
    "scheduled",
    "delivered",
    "failed",
    "skipped",
    "pairwise_violations",
    "final_mean_area",
];

pub const BOUNDS_COLUMNS: [&str; 3] = ["nv", "lower", "upper"];

/// Harness keys of the configuration file. Scenario and radio keys sit next
/// to them in the same flat document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Harness {
    /// `(avg_gap_lavg, num_vehicles_nv)` pairs; empty uses the scenario keys.
    pub scenarios: Vec<(f64, usize)>,
    /// Empty uses `beamwidth_deg`.
    pub beamwidths: Vec<f64>,
    pub modes: Vec<ConflictMode>,
    pub weights: Vec<WeightMode>,
    pub rule: GreedyRule,
    /// Usable slots per interval; 0 plans until nothing is left to send.
    pub tau_max: usize,
    pub reps: usize,
    pub seed_base: u64,
    pub skipped_radiate: bool,
    pub out: Option<PathBuf>,
}

impl Default for Harness {
    fn default() -> Self {
        Harness {
            scenarios: Vec::new(),
            beamwidths: Vec::new(),
            modes: vec![ConflictMode::MmWave],
            weights: vec![WeightMode::MaxTransmission],
            rule: GreedyRule::Gwmin,
            tau_max: DEFAULT_TAU_MAX,
            reps: 1,
            seed_base: 0,
            skipped_radiate: false,
            out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub radio: RadioConfig,
    pub harness: Harness,
}

/// One point of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub case: usize,
    pub lavg: f64,
    pub nv: usize,
    pub beamwidth_deg: f64,
    pub mode: ConflictMode,
    pub weight: WeightMode,
}

fn keys_of<T: Serialize>(v: &T) -> Vec<String> {
    match toml::Table::try_from(v) {
        Ok(t) => t.keys().cloned().collect(),
        Err(_) => Vec::new(),
    }
}

impl ExperimentConfig {
    /// Parses a flat `key = value` document. Unknown keys are rejected.
    pub fn from_toml(doc: &str) -> Result<Self> {
        let table: toml::Table =
            toml::from_str(doc).map_err(|e| Error::config(format!("config syntax: {e}")))?;
        let scenario_keys: Vec<String> = keys_of(&ScenarioConfig::default())
            .into_iter()
            .filter(|k| k != "rng_seed")
            .collect();
        let radio_keys = keys_of(&RadioConfig::default());
        let (mut sc, mut ra, mut ha) = (toml::Table::new(), toml::Table::new(), toml::Table::new());
        for (k, v) in table {
            if scenario_keys.contains(&k) {
                sc.insert(k, v);
            } else if radio_keys.contains(&k) {
                ra.insert(k, v);
            } else {
                ha.insert(k, v);
            }
        }
        let cfg = ExperimentConfig {
            scenario: sc.try_into().map_err(|e| Error::config(format!("scenario keys: {e}")))?,
            radio: ra.try_into().map_err(|e| Error::config(format!("radio keys: {e}")))?,
            harness: ha.try_into().map_err(|e| Error::config(format!("{e}")))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let doc = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&doc)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.radio.validate()?;
        let h = &self.harness;
        if h.reps == 0 {
            return Err(Error::config("reps must be at least 1"));
        }
        if h.modes.is_empty() || h.weights.is_empty() {
            return Err(Error::config("modes and weights must not be empty"));
        }
        for case in self.cases() {
            let mut sc = self.scenario.clone();
            sc.avg_gap_lavg = case.lavg;
            sc.num_vehicles_nv = case.nv;
            sc.validate()?;
            let mut ra = self.radio.clone();
            ra.beamwidth_deg = case.beamwidth_deg;
            ra.validate()?;
        }
        Ok(())
    }

    /// Cartesian product of the sweep lists in the order scenarios,
    /// beamwidths, modes, weights.
    pub fn cases(&self) -> Vec<Case> {
        let h = &self.harness;
        let scenarios = if h.scenarios.is_empty() {
            vec![(self.scenario.avg_gap_lavg, self.scenario.num_vehicles_nv)]
        } else {
            h.scenarios.clone()
        };
        let beams = if h.beamwidths.is_empty() {
            vec![self.radio.beamwidth_deg]
        } else {
            h.beamwidths.clone()
        };
        let mut out = Vec::new();
        for &(lavg, nv) in &scenarios {
            for &beamwidth_deg in &beams {
                for &mode in &h.modes {
                    for &weight in &h.weights {
                        out.push(Case {
                            case: out.len(),
                            lavg,
                            nv,
                            beamwidth_deg,
                            mode,
                            weight,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRow {
    pub case: usize,
    pub lavg: f64,
    pub nv: usize,
    pub beamwidth_deg: f64,
    pub mode: ConflictMode,
    pub weight: WeightMode,
    pub run: usize,
    pub seed: u64,
    pub slot: usize,
    pub vehicle: usize,
    pub normalized_area: f64,
    pub area_m2: f64,
    pub scheduled: usize,
    pub delivered: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub case: usize,
    pub lavg: f64,
    pub nv: usize,
    pub beamwidth_deg: f64,
    pub mode: ConflictMode,
    pub weight: WeightMode,
    pub run: usize,
    pub seed: u64,
    pub connected: bool,
    pub complete: bool,
    pub tau_end: usize,
    pub lower_bound: usize,
    pub upper_bound: usize,
    pub area_all_m2: f64,
    pub scheduled: usize,
    pub delivered: usize,
    pub failed: usize,
    pub skipped: usize,
    pub pairwise_violations: usize,
    pub final_mean_area: f64,
}

/// Rows of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub run: RunRow,
    pub slots: Vec<SlotRow>,
}

pub fn run_case(cfg: &ExperimentConfig, case: &Case, rep: usize) -> Result<RunOutput> {
    let h = &cfg.harness;
    let seed = h.seed_base + rep as u64;
    let scenario_cfg = ScenarioConfig {
        avg_gap_lavg: case.lavg,
        num_vehicles_nv: case.nv,
        rng_seed: seed,
        ..cfg.scenario.clone()
    };
    let radio = RadioConfig {
        beamwidth_deg: case.beamwidth_deg,
        ..cfg.radio.clone()
    };
    let s = build_scenario(&scenario_cfg)?;
    let plan = PlanOptions {
        policy: ConflictPolicy::new(case.mode, &radio),
        weight: case.weight,
        tau_max: (h.tau_max > 0).then_some(h.tau_max),
        rule: h.rule,
    };
    let exec = ExecOptions {
        skipped_radiate: h.skipped_radiate,
    };
    let (sch, res) = simulate(&s, &radio, &plan, &exec);
    let (lower, upper) = tau_bounds(case.nv).unwrap_or((0, 0));

    let mut slots = Vec::with_capacity(res.coverage.len() * case.nv);
    for (slot, cov) in res.coverage.iter().enumerate() {
        let (scheduled, delivered, failed, skipped) = match slot {
            0 => (0, 0, 0, 0),
            t => {
                let o = &res.slots[t - 1];
                (o.scheduled(), o.delivered.len(), o.failed.len(), o.skipped.len())
            }
        };
        for (vehicle, &a) in cov.iter().enumerate() {
            slots.push(SlotRow {
                case: case.case,
                lavg: case.lavg,
                nv: case.nv,
                beamwidth_deg: case.beamwidth_deg,
                mode: case.mode,
                weight: case.weight,
                run: rep,
                seed,
                slot,
                vehicle,
                normalized_area: a,
                area_m2: a * res.area_all,
                scheduled,
                delivered,
                failed,
                skipped,
            });
        }
    }
    let run = RunRow {
        case: case.case,
        lavg: case.lavg,
        nv: case.nv,
        beamwidth_deg: case.beamwidth_deg,
        mode: case.mode,
        weight: case.weight,
        run: rep,
        seed,
        connected: res.connected,
        complete: res.final_datasets.is_complete(),
        tau_end: sch.planned_tau_end,
        lower_bound: lower,
        upper_bound: upper,
        area_all_m2: res.area_all,
        scheduled: res.slots.iter().map(|o| o.scheduled()).sum(),
        delivered: res.slots.iter().map(|o| o.delivered.len()).sum(),
        failed: res.failures(),
        skipped: res.skips(),
        pairwise_violations: res.pairwise_violations,
        final_mean_area: mean(res.coverage.last().expect("slot 0 always present")),
    };
    Ok(RunOutput { run, slots })
}

/// Runs every (case, replication) pair in parallel; results come back in
/// (case, replication) order.
pub fn run_all(cfg: &ExperimentConfig) -> Result<Vec<RunOutput>> {
    cfg.validate()?;
    let jobs: Vec<(Case, usize)> = cfg
        .cases()
        .into_iter()
        .flat_map(|c| (0..cfg.harness.reps).map(move |r| (c.clone(), r)))
        .collect();
    jobs.par_iter().map(|(c, r)| run_case(cfg, c, *r)).collect()
}

pub const SLOTS_FILE: &str = "slots.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Runs the experiment and writes the three output files into `out`. On
/// failure no output file is left behind.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Summary> {
    let outputs = run_all(cfg)?;
    let result = write_outputs(&outputs, out);
    if result.is_err() {
        for f in [SLOTS_FILE, RUNS_FILE, SUMMARY_FILE] {
            let _ = fs::remove_file(out.join(f));
        }
    }
    result
}

fn write_outputs(outputs: &[RunOutput], out: &Path) -> Result<Summary> {
    fs::create_dir_all(out)?;
    let mut slots = csv::Writer::from_path(out.join(SLOTS_FILE))?;
    let mut runs = csv::Writer::from_path(out.join(RUNS_FILE))?;
    for o in outputs {
        runs.serialize(&o.run)?;
        for row in &o.slots {
            slots.serialize(row)?;
        }
    }
    slots.flush()?;
    runs.flush()?;
    let run_rows: Vec<RunRow> = outputs.iter().map(|o| o.run.clone()).collect();
    let slot_rows: Vec<&SlotRow> = outputs.iter().flat_map(|o| &o.slots).collect();
    let summary = Summary::from_rows(&run_rows, slot_rows)?;
    let mut f = fs::File::create(out.join(SUMMARY_FILE))?;
    serde_json::to_writer_pretty(&mut f, &summary)?;
    writeln!(f)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub cdf: Vec<(f64, f64)>,
}

impl Distribution {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        Some(Distribution {
            mean: mean(values),
            median: quantile(values, 0.5),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            cdf: empirical_cdf(values),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    #[serde(flatten)]
    pub case: Case,
    pub runs: usize,
    pub connected_runs: usize,
    pub lower_bound: usize,
    pub upper_bound: usize,
    /// Connected runs whose end slot lies outside the bounds.
    pub bound_violations: usize,
    /// End slot over connected runs.
    pub tau_end: Option<Distribution>,
    /// Mean normalized area over runs and vehicles for slot 0, 1, ...; runs
    /// that ended earlier hold their final value.
    pub mean_area_by_slot: Vec<f64>,
    /// Per-vehicle normalized area at each run's end.
    pub final_area: Option<Distribution>,
    pub area_all_mean_m2: f64,
    pub scheduled: usize,
    pub failed: usize,
    pub skipped: usize,
    /// Failed over attempted (delivered plus failed) receptions.
    pub failure_rate: f64,
    pub pairwise_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub cases: Vec<CaseSummary>,
}

impl Summary {
    pub fn from_rows<'a>(
        runs: &[RunRow],
        slots: impl IntoIterator<Item = &'a SlotRow>,
    ) -> Result<Self> {
        // (case, run) -> slot -> per-vehicle values
        let mut traces: BTreeMap<(usize, usize), BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
        for r in slots {
            traces
                .entry((r.case, r.run))
                .or_default()
                .entry(r.slot)
                .or_default()
                .push(r.normalized_area);
        }
        let mut by_case: BTreeMap<usize, Vec<&RunRow>> = BTreeMap::new();
        for r in runs {
            by_case.entry(r.case).or_default().push(r);
        }
        let mut cases = Vec::new();
        for (case_id, rows) in by_case {
            let first = rows[0];
            let case = Case {
                case: case_id,
                lavg: first.lavg,
                nv: first.nv,
                beamwidth_deg: first.beamwidth_deg,
                mode: first.mode,
                weight: first.weight,
            };
            let connected: Vec<&RunRow> = rows.iter().copied().filter(|r| r.connected).collect();
            let (lower, upper) = tau_bounds(case.nv).unwrap_or((0, 0));
            let bound_violations = connected
                .iter()
                .filter(|r| r.tau_end < lower || r.tau_end > upper)
                .count();
            let tau: Vec<f64> = connected.iter().map(|r| r.tau_end as f64).collect();

            let mut run_traces = Vec::new();
            for r in &rows {
                let trace = traces.get(&(case_id, r.run)).ok_or_else(|| Error::Schema {
                    path: SLOTS_FILE.into(),
                    reason: format!("no slot rows for case {case_id} run {}", r.run),
                })?;
                let ordered: Vec<&Vec<f64>> = trace.values().collect();
                if trace.keys().copied().ne(0..trace.len()) {
                    return Err(Error::Schema {
                        path: SLOTS_FILE.into(),
                        reason: format!("case {case_id} run {} has gaps in its slots", r.run),
                    });
                }
                run_traces.push(ordered);
            }
            let horizon = run_traces.iter().map(Vec::len).max().unwrap_or(0);
            let mean_area_by_slot = (0..horizon)
                .map(|t| {
                    let values: Vec<f64> = run_traces
                        .iter()
                        .flat_map(|tr| tr[t.min(tr.len() - 1)].iter().copied())
                        .collect();
                    mean(&values)
                })
                .collect();
            let finals: Vec<f64> = run_traces
                .iter()
                .flat_map(|tr| tr.last().map(|v| v.iter().copied()).into_iter().flatten())
                .collect();

            let failed: usize = rows.iter().map(|r| r.failed).sum();
            let delivered: usize = rows.iter().map(|r| r.delivered).sum();
            let attempted = failed + delivered;
            cases.push(CaseSummary {
                runs: rows.len(),
                connected_runs: connected.len(),
                lower_bound: lower,
                upper_bound: upper,
                bound_violations,
                tau_end: Distribution::of(&tau),
                mean_area_by_slot,
                final_area: Distribution::of(&finals),
                area_all_mean_m2: mean(&rows.iter().map(|r| r.area_all_m2).collect::<Vec<_>>()),
                scheduled: rows.iter().map(|r| r.scheduled).sum(),
                failed,
                skipped: rows.iter().map(|r| r.skipped).sum(),
                failure_rate: if attempted > 0 { failed as f64 / attempted as f64 } else { 0.0 },
                pairwise_violations: rows.iter().map(|r| r.pairwise_violations).sum(),
                case,
            });
        }
        Ok(Summary {
            schema_version: SCHEMA_VERSION,
            cases,
        })
    }
}

fn check_header(path: &Path, header: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        let missing: Vec<&&str> = expected.iter().filter(|c| !got.contains(c)).collect();
        let reason = if missing.is_empty() {
            format!("columns {got:?} differ from {expected:?}")
        } else {
            format!("missing columns {missing:?}")
        };
        return Err(Error::Schema {
            path: path.display().to_string(),
            reason,
        });
    }
    Ok(())
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path, columns: &[&str]) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path)?;
    check_header(path, rdr.headers()?, columns)?;
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e| Error::Schema {
                path: path.display().to_string(),
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Summarizes previously written outputs. Each path is either an output
/// directory or a `slots.csv`/`runs.csv` file; the kind of a file is taken
/// from its header. Rows from several inputs must not reuse (case, run).
pub fn summarize(paths: &[PathBuf]) -> Result<Summary> {
    let mut runs: Vec<RunRow> = Vec::new();
    let mut slots: Vec<SlotRow> = Vec::new();
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            files.push(p.join(RUNS_FILE));
            files.push(p.join(SLOTS_FILE));
        } else {
            files.push(p.clone());
        }
    }
    for f in &files {
        let mut rdr = csv::Reader::from_path(f)?;
        let header = rdr.headers()?.clone();
        if header.iter().any(|c| c == "vehicle") {
            slots.extend(read_rows::<SlotRow>(f, &SLOT_COLUMNS)?);
        } else {
            runs.extend(read_rows::<RunRow>(f, &RUN_COLUMNS)?);
        }
    }
    if runs.is_empty() {
        return Err(Error::Schema {
            path: files.first().map(|p| p.display().to_string()).unwrap_or_default(),
            reason: "no run rows".into(),
        });
    }
    let mut seen = std::collections::BTreeSet::new();
    for r in &runs {
        if !seen.insert((r.case, r.run)) {
            return Err(Error::Schema {
                path: RUNS_FILE.into(),
                reason: format!("duplicate case {} run {}", r.case, r.run),
            });
        }
    }
    Summary::from_rows(&runs, &slots)
}

/// `nv,lower,upper` rows for each vehicle count.
pub fn bounds_csv(nvs: &[usize]) -> Result<String> {
    let mut out = BOUNDS_COLUMNS.join(",");
    out.push('\n');
    for &nv in nvs {
        let (lo, hi) = tau_bounds(nv)?;
        out.push_str(&format!("{nv},{lo},{hi}\n"));
    }
    Ok(out)
}
