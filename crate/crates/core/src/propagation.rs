//! 60 GHz link model: log-distance path loss with a fixed penalty per blocking
//! vehicle, a Gaussian main-lobe antenna pattern with a flat side-lobe floor,
//! and the Shannon-capacity link budget.
//!
//! Power sums (noise plus interference) are done in milliwatts; everything
//! else is kept in dB.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Blockage, Point, Scenario};

/// Boltzmann-limited noise density at 290 K.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `-inf` dBm maps to 0 mW.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioConfig {
    pub bandwidth_hz: f64,
    pub noise_density_dbm_hz: f64,
    pub rate_bps: f64,
    pub tx_power_dbm: f64,
    pub beamwidth_deg: f64,
    pub sidelobe_floor_dbi: f64,
    pub pathloss_exponent: f64,
    /// Loss at 1 m.
    pub pathloss_ref_db: f64,
    pub per_blocker_loss_db: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            bandwidth_hz: 2.16e9,
            noise_density_dbm_hz: THERMAL_NOISE_DBM_HZ,
            rate_bps: 1e9,
            tx_power_dbm: 10.0,
            beamwidth_deg: 15.0,
            sidelobe_floor_dbi: -10.0,
            pathloss_exponent: 2.0,
            pathloss_ref_db: 68.0,
            per_blocker_loss_db: 10.0,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bandwidth_hz.is_nan() || self.bandwidth_hz <= 0.0 {
            return Err(Error::config("bandwidth_hz must be positive"));
        }
        if self.rate_bps.is_nan() || self.rate_bps <= 0.0 {
            return Err(Error::config("rate_bps must be positive"));
        }
        if !(self.beamwidth_deg > 0.0 && self.beamwidth_deg < 180.0) {
            return Err(Error::config(format!(
                "beamwidth_deg must lie in (0, 180), got {}",
                self.beamwidth_deg
            )));
        }
        let finite = [
            ("noise_density_dbm_hz", self.noise_density_dbm_hz),
            ("tx_power_dbm", self.tx_power_dbm),
            ("sidelobe_floor_dbi", self.sidelobe_floor_dbi),
            ("pathloss_exponent", self.pathloss_exponent),
            ("pathloss_ref_db", self.pathloss_ref_db),
            ("per_blocker_loss_db", self.per_blocker_loss_db),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite")));
            }
        }
        if self.pathloss_exponent < 0.0 || self.per_blocker_loss_db < 0.0 {
            return Err(Error::config("path loss must not decrease with distance or blockers"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub noise_power_dbm: f64,
    /// Minimum linear SINR for the required rate: `2^(rate/B) - 1`.
    pub sinr_threshold: f64,
    /// Largest path loss that still sustains the required rate between two
    /// boresight-aligned antennas.
    pub loss_threshold_db: f64,
    pub boresight_gain_dbi: f64,
}

impl LinkBudget {
    pub fn noise_power_mw(&self) -> f64 {
        dbm_to_mw(self.noise_power_dbm)
    }

    pub fn sinr_threshold_db(&self) -> f64 {
        linear_to_db(self.sinr_threshold)
    }
}

pub fn link_budget(cfg: &RadioConfig) -> LinkBudget {
    let noise_power_dbm = cfg.noise_density_dbm_hz + linear_to_db(cfg.bandwidth_hz);
    let sinr_threshold = (cfg.rate_bps / cfg.bandwidth_hz).exp2() - 1.0;
    let g0 = boresight_gain_dbi(cfg.beamwidth_deg);
    let loss_threshold_db =
        cfg.tx_power_dbm + 2.0 * g0 - noise_power_dbm - linear_to_db(sinr_threshold);
    LinkBudget {
        noise_power_dbm,
        sinr_threshold,
        loss_threshold_db,
        boresight_gain_dbi: g0,
    }
}

/// Shannon rate of a link whose total loss (path loss minus antenna gains) is
/// `net_loss_db`.
pub fn achievable_rate_bps(net_loss_db: f64, cfg: &RadioConfig) -> f64 {
    let noise_dbm = cfg.noise_density_dbm_hz + linear_to_db(cfg.bandwidth_hz);
    let snr = db_to_linear(cfg.tx_power_dbm - net_loss_db - noise_dbm);
    cfg.bandwidth_hz * (1.0 + snr).log2()
}

/// `f64::INFINITY` when a building blocks line of sight.
pub fn path_loss_db(
    distance: f64,
    blockers: usize,
    building_blocked: bool,
    cfg: &RadioConfig,
) -> Result<f64> {
    if distance.is_nan() || distance <= 0.0 {
        return Err(Error::domain(format!("path loss needs distance > 0, got {distance}")));
    }
    if building_blocked {
        return Ok(f64::INFINITY);
    }
    Ok(cfg.pathloss_ref_db
        + 10.0 * cfg.pathloss_exponent * distance.log10()
        + blockers as f64 * cfg.per_blocker_loss_db)
}

pub fn boresight_gain_dbi(beamwidth_deg: f64) -> f64 {
    let half = (beamwidth_deg / 2.0).to_radians();
    20.0 * (1.6162 / half.sin()).log10()
}

/// Gain at `offset_deg` away from boresight.
pub fn antenna_gain_dbi(offset_deg: f64, cfg: &RadioConfig) -> f64 {
    let g0 = boresight_gain_dbi(cfg.beamwidth_deg);
    let rel = offset_deg / cfg.beamwidth_deg;
    (g0 - 12.0 * rel * rel).max(cfg.sidelobe_floor_dbi)
}

/// Angle in degrees between the direction `from -> aim` and `from -> target`.
pub fn offset_angle_deg(from: Point, aim: Point, target: Point) -> f64 {
    match ((aim - from).normalized(), (target - from).normalized()) {
        (Some(a), Some(t)) => a.dot(t).clamp(-1.0, 1.0).acos().to_degrees(),
        _ => 0.0,
    }
}

/// Power at `rx` from `tx`, with each antenna pointed at its aim point.
/// `-inf` when a building blocks the path.
pub fn received_power_dbm(
    s: &Scenario,
    tx: usize,
    tx_aim: Point,
    rx: usize,
    rx_aim: Point,
    cfg: &RadioConfig,
) -> Result<f64> {
    if tx == rx {
        return Err(Error::domain("transmitter and receiver must differ"));
    }
    let (pt, pr) = (s.position(tx), s.position(rx));
    let Blockage {
        blockers,
        building_blocked,
    } = s.count_blockers(tx, rx);
    let loss = path_loss_db(pt.distance(pr), blockers, building_blocked, cfg)?;
    if loss.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let gt = antenna_gain_dbi(offset_angle_deg(pt, tx_aim, pr), cfg);
    let gr = antenna_gain_dbi(offset_angle_deg(pr, rx_aim, pt), cfg);
    Ok(cfg.tx_power_dbm + gt + gr - loss)
}

/// Per-scenario cache of pairwise path losses. All aims in the scheduling
/// model point at other vehicles, so powers are indexed by vehicle ids.
#[derive(Debug, Clone)]
pub struct Channel<'a> {
    scenario: &'a Scenario,
    cfg: &'a RadioConfig,
    budget: LinkBudget,
    n: usize,
    /// Row-major `n × n`; `+inf` on the diagonal and for blocked pairs.
    loss_db: Vec<f64>,
}

impl<'a> Channel<'a> {
    pub fn new(scenario: &'a Scenario, cfg: &'a RadioConfig) -> Self {
        let n = scenario.len();
        let mut loss_db = vec![f64::INFINITY; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let b = scenario.count_blockers(i, j);
                let d = scenario.position(i).distance(scenario.position(j));
                // coincident centers cannot happen for non-overlapping footprints
                let l = path_loss_db(d.max(f64::MIN_POSITIVE), b.blockers, b.building_blocked, cfg)
                    .expect("distance clamped positive");
                loss_db[i * n + j] = l;
                loss_db[j * n + i] = l;
            }
        }
        Channel {
            scenario,
            cfg,
            budget: link_budget(cfg),
            n,
            loss_db,
        }
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn config(&self) -> &'a RadioConfig {
        self.cfg
    }

    pub fn budget(&self) -> &LinkBudget {
        &self.budget
    }

    pub fn vehicle_count(&self) -> usize {
        self.n
    }

    pub fn path_loss_db(&self, i: usize, j: usize) -> f64 {
        self.loss_db[i * self.n + j]
    }

    /// Power at `rx` (aimed at `rx_aim`) from `tx` (aimed at `tx_aim`).
    pub fn power_dbm(&self, tx: usize, tx_aim: usize, rx: usize, rx_aim: usize) -> f64 {
        let loss = self.path_loss_db(tx, rx);
        if loss.is_infinite() {
            return f64::NEG_INFINITY;
        }
        let p = |id| self.scenario.position(id);
        let gt = antenna_gain_dbi(offset_angle_deg(p(tx), p(tx_aim), p(rx)), self.cfg);
        let gr = antenna_gain_dbi(offset_angle_deg(p(rx), p(rx_aim), p(tx)), self.cfg);
        self.cfg.tx_power_dbm + gt + gr - loss
    }

    /// Desired power of the link `tx -> rx` with mutual boresight aiming.
    pub fn desired_mw(&self, tx: usize, rx: usize) -> f64 {
        dbm_to_mw(self.power_dbm(tx, rx, rx, tx))
    }

    /// Interference at the receiver of `victim` caused by the transmitter of
    /// `interferer`, each antenna aimed at its own partner.
    pub fn interference_mw(&self, victim: (usize, usize), interferer: (usize, usize)) -> f64 {
        let (vtx, vrx) = victim;
        let (itx, irx) = interferer;
        dbm_to_mw(self.power_dbm(itx, irx, vrx, vtx))
    }

    /// SINR of `victim` against a single interfering link.
    pub fn pairwise_sinr(&self, victim: (usize, usize), interferer: (usize, usize)) -> f64 {
        self.desired_mw(victim.0, victim.1)
            / (self.budget.noise_power_mw() + self.interference_mw(victim, interferer))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Road, ScenarioConfig, Vehicle};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn path_loss_examples() {
        let cfg = RadioConfig::default();
        assert!(close(path_loss_db(1.0, 0, false, &cfg).unwrap(), 68.0, 1e-12));
        assert!(close(path_loss_db(10.0, 0, false, &cfg).unwrap(), 88.0, 1e-12));
        assert!(close(path_loss_db(10.0, 2, false, &cfg).unwrap(), 108.0, 1e-12));
        assert_eq!(path_loss_db(10.0, 0, true, &cfg).unwrap(), f64::INFINITY);
        assert!(matches!(path_loss_db(0.0, 0, false, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn free_space_reference_matches_60ghz() {
        let lambda = 299_792_458.0 / 60e9;
        let fspl = 20.0 * (4.0 * std::f64::consts::PI / lambda).log10();
        assert!(close(fspl, RadioConfig::default().pathloss_ref_db, 0.05), "{fspl}");
    }

    #[test]
    fn antenna_gain_examples() {
        let cfg = RadioConfig::default();
        let g0 = antenna_gain_dbi(0.0, &cfg);
        assert!(close(g0, 21.86, 0.005), "{g0}");
        assert!(close(antenna_gain_dbi(7.5, &cfg), g0 - 3.0, 1e-12));
        assert_eq!(antenna_gain_dbi(90.0, &cfg), -10.0);
        let wide = RadioConfig { beamwidth_deg: 30.0, ..cfg };
        assert!(close(antenna_gain_dbi(15.0, &wide), boresight_gain_dbi(30.0) - 3.0, 1e-12));
    }

    #[test]
    fn table1_link_budget() {
        let lb = link_budget(&RadioConfig::default());
        assert!(close(lb.noise_power_dbm, -80.65, 0.01), "{}", lb.noise_power_dbm);
        assert!(close(lb.sinr_threshold, 0.3784, 5e-5), "{}", lb.sinr_threshold);
        assert!(close(lb.sinr_threshold_db(), -4.22, 0.005));
        assert!(close(lb.loss_threshold_db, 138.6, 0.05), "{}", lb.loss_threshold_db);
    }

    #[test]
    fn threshold_round_trips_through_shannon() {
        for bw in [15.0, 30.0] {
            let cfg = RadioConfig { beamwidth_deg: bw, ..Default::default() };
            let lb = link_budget(&cfg);
            let net = lb.loss_threshold_db - 2.0 * lb.boresight_gain_dbi;
            let rate = achievable_rate_bps(net, &cfg);
            assert!(((rate - cfg.rate_bps) / cfg.rate_bps).abs() < 1e-9, "{rate}");
        }
    }

    fn pair(dx: f64) -> Scenario {
        let v = |x: f64| Vehicle {
            id: 0,
            position: Point::new(x, -1.75),
            heading: Point::new(1.0, 0.0),
            road: Road::Horizontal,
            lane: 0,
            length: 4.4,
            width: 1.7,
        };
        Scenario::with_vehicles(ScenarioConfig::default(), vec![v(20.0), v(20.0 + dx)])
    }

    #[test]
    fn received_power_examples() {
        let cfg = RadioConfig::default();
        let s = pair(10.0);
        let (p0, p1) = (s.position(0), s.position(1));
        let facing = received_power_dbm(&s, 0, p1, 1, p0, &cfg).unwrap();
        assert!(close(facing, -34.3, 0.05), "{facing}");
        let away = p1 + Point::new(0.0, 10.0);
        let turned = received_power_dbm(&s, 0, p1, 1, away, &cfg).unwrap();
        assert!(close(turned, -66.1, 0.05), "{turned}");
        assert!(received_power_dbm(&s, 0, p1, 0, p0, &cfg).is_err());

        let ch = Channel::new(&s, &cfg);
        assert!(close(ch.power_dbm(0, 1, 1, 0), facing, 1e-12));
        let snr = linear_to_db(ch.desired_mw(0, 1) / ch.budget().noise_power_mw());
        assert!(close(snr, 46.3, 0.1), "{snr}");
    }

    #[test]
    fn building_blocked_power_is_neg_infinite() {
        let cfg = RadioConfig::default();
        let mk = |x: f64, y: f64, road| Vehicle {
            id: 0,
            position: Point::new(x, y),
            heading: Point::new(1.0, 0.0),
            road,
            lane: 0,
            length: 4.4,
            width: 1.7,
        };
        let s = Scenario::with_vehicles(
            ScenarioConfig::default(),
            vec![mk(30.0, 1.75, Road::Horizontal), mk(1.75, 30.0, Road::Vertical)],
        );
        let p = received_power_dbm(&s, 0, s.position(1), 1, s.position(0), &cfg).unwrap();
        assert_eq!(p, f64::NEG_INFINITY);
        assert_eq!(dbm_to_mw(p), 0.0);
    }
}
