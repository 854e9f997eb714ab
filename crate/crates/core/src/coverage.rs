//! Perceivable area: the union of the sensor regions of the data a vehicle
//! holds, normalized by the union over every participant's datum.

use serde::{Deserialize, Serialize};

use crate::geometry::{Raster, Region, Scenario};
use crate::schedgraph::DatasetState;

/// Sensor regions of every datum of one scenario on a shared raster.
#[derive(Debug, Clone)]
pub struct CoverageMap {
    raster: Raster,
    regions: Vec<Region>,
    all: Region,
}

impl CoverageMap {
    pub fn new(s: &Scenario) -> Self {
        let raster = s.raster();
        let regions: Vec<Region> = (0..s.len()).map(|v| s.sensor_region(v, &raster)).collect();
        let mut all = Region::empty(&raster);
        for r in &regions {
            all.union_with(r);
        }
        CoverageMap {
            raster,
            regions,
            all,
        }
    }

    pub fn raster(&self) -> &Raster {
        &self.raster
    }

    pub fn region(&self, datum: usize) -> &Region {
        &self.regions[datum]
    }

    pub fn area_all(&self) -> f64 {
        self.all.area()
    }

    pub fn union_of(&self, data: impl IntoIterator<Item = usize>) -> Region {
        let mut out = Region::empty(&self.raster);
        for k in data {
            out.union_with(&self.regions[k]);
        }
        out
    }

    /// `area / S(R_all)`; a scenario whose data cover nothing counts as fully
    /// covered.
    pub fn normalize(&self, area: f64) -> f64 {
        let all = self.area_all();
        if all > 0.0 {
            (area / all).min(1.0)
        } else {
            1.0
        }
    }

    pub fn normalized(&self, ds: &DatasetState) -> Vec<f64> {
        (0..ds.vehicle_count())
            .map(|v| self.normalize(self.union_of(ds.data(v)).area()))
            .collect()
    }
}

/// Union of the sensor regions of `data` on the scenario's raster.
pub fn region_union(data: &[usize], s: &Scenario) -> Region {
    let raster = s.raster();
    let mut out = Region::empty(&raster);
    for &k in data {
        out.union_with(&s.sensor_region(k, &raster));
    }
    out
}

pub fn normalized_area(ds: &DatasetState, s: &Scenario) -> Vec<f64> {
    CoverageMap::new(s).normalized(ds)
}

/// Per-vehicle covered regions updated one received datum at a time.
#[derive(Debug, Clone)]
pub struct CoverageTracker<'a> {
    map: &'a CoverageMap,
    covered: Vec<Region>,
    areas: Vec<f64>,
}

impl<'a> CoverageTracker<'a> {
    pub fn new(map: &'a CoverageMap, ds: &DatasetState) -> Self {
        let covered: Vec<Region> = (0..ds.vehicle_count()).map(|v| map.union_of(ds.data(v))).collect();
        let areas = covered.iter().map(Region::area).collect();
        CoverageTracker { map, covered, areas }
    }

    pub fn add(&mut self, vehicle: usize, datum: usize) {
        self.covered[vehicle].union_with(self.map.region(datum));
        self.areas[vehicle] = self.covered[vehicle].area();
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.areas.iter().map(|&a| self.map.normalize(a)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub area: Vec<f64>,
    pub normalized: Vec<f64>,
    pub area_all: f64,
    pub mean: f64,
    pub p10: f64,
    pub median: f64,
    pub p90: f64,
    pub cdf: Vec<(f64, f64)>,
}

impl CoverageReport {
    pub fn new(map: &CoverageMap, ds: &DatasetState) -> Self {
        let area: Vec<f64> = (0..ds.vehicle_count())
            .map(|v| map.union_of(ds.data(v)).area())
            .collect();
        let normalized: Vec<f64> = area.iter().map(|&a| map.normalize(a)).collect();
        CoverageReport {
            mean: mean(&normalized),
            p10: quantile(&normalized, 0.1),
            median: quantile(&normalized, 0.5),
            p90: quantile(&normalized, 0.9),
            cdf: empirical_cdf(&normalized),
            area_all: map.area_all(),
            area,
            normalized,
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Nearest-rank quantile, `q` in `[0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (q * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

/// Step points `(x, F(x))` of the empirical CDF, one per distinct value.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, x) in v.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *x => last.1 = f,
            _ => out.push((*x, f)),
        }
    }
    out
}
