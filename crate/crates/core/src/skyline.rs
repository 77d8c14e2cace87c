//! Candidate drone selection: payload filtering and Block-Nested-Loop skyline
//! over flight time, flight range and recharge time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DroneSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    LowerIsBetter,
    HigherIsBetter,
}

impl Direction {
    fn better_or_equal(self, a: f64, b: f64) -> bool {
        match self {
            Direction::LowerIsBetter => a <= b,
            Direction::HigherIsBetter => a >= b,
        }
    }

    fn strictly_better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::LowerIsBetter => a < b,
            Direction::HigherIsBetter => a > b,
        }
    }
}

/// Preference direction per compared attribute.
///
/// The default (shorter flight time, longer range, shorter recharge) is the one
/// assignment under which the reference twelve-service table's skyline column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityDirection {
    pub flight_time: Direction,
    pub flight_range: Direction,
    pub recharge_time: Direction,
}

impl Default for QualityDirection {
    fn default() -> Self {
        Self {
            flight_time: Direction::LowerIsBetter,
            flight_range: Direction::HigherIsBetter,
            recharge_time: Direction::LowerIsBetter,
        }
    }
}

impl QualityDirection {
    fn attributes(&self, d: &DroneSpec) -> [(Direction, f64); 3] {
        [
            (self.flight_time, d.flight_time),
            (self.flight_range, d.flight_range),
            (self.recharge_time, d.recharge_time_full),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SkylineResult {
    /// skyline members, in input order
    pub skyline: Vec<String>,
    /// dominated id -> one dominating id
    pub dominated: BTreeMap<String, String>,
}

impl SkylineResult {
    pub fn is_skyline(&self, id: &str) -> bool {
        self.skyline.iter().any(|s| s == id)
    }
}

/// Keeps candidates whose payload capacity covers the package (equality admitted).
pub fn payload_filter(candidates: &[DroneSpec], package_weight: f64) -> Result<Vec<DroneSpec>> {
    if !(package_weight > 0.0) {
        return Err(Error::ConfigInvalid(format!(
            "package weight must be positive, got {package_weight}"
        )));
    }
    let kept: Vec<_> = candidates
        .iter()
        .filter(|d| d.payload_capacity >= package_weight)
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyCandidateSet(package_weight));
    }
    Ok(kept)
}

/// `a` is at least as good as `b` everywhere and strictly better somewhere.
pub fn dominates(a: &DroneSpec, b: &DroneSpec, dir: &QualityDirection) -> bool {
    let qa = dir.attributes(a);
    let qb = dir.attributes(b);
    let all = qa
        .iter()
        .zip(&qb)
        .all(|(&(d, x), &(_, y))| d.better_or_equal(x, y));
    all && qa
        .iter()
        .zip(&qb)
        .any(|(&(d, x), &(_, y))| d.strictly_better(x, y))
}

/// Block Nested Loop skyline with an unbounded window.
pub fn bnl_skyline(candidates: &[DroneSpec], dir: &QualityDirection) -> SkylineResult {
    let mut window: Vec<usize> = Vec::new();
    let mut dominated = BTreeMap::new();
    for (idx, cand) in candidates.iter().enumerate() {
        if let Some(&w) = window
            .iter()
            .find(|&&w| dominates(&candidates[w], cand, dir))
        {
            dominated.insert(cand.id.clone(), candidates[w].id.clone());
            continue;
        }
        window.retain(|&w| {
            if dominates(cand, &candidates[w], dir) {
                dominated.insert(candidates[w].id.clone(), cand.id.clone());
                false
            } else {
                true
            }
        });
        window.push(idx);
    }
    window.sort_unstable();
    SkylineResult {
        skyline: window
            .into_iter()
            .map(|i| candidates[i].id.clone())
            .collect(),
        dominated,
    }
}

/// Payload filter, skyline, then the fastest skyline drone
/// (ties: shorter recharge, then id).
pub fn select_drone(
    candidates: &[DroneSpec],
    package_weight: f64,
    dir: &QualityDirection,
) -> Result<DroneSpec> {
    let admitted = payload_filter(candidates, package_weight)?;
    let sky = bnl_skyline(&admitted, dir);
    admitted
        .into_iter()
        .filter(|d| sky.is_skyline(&d.id))
        .min_by(|a, b| {
            b.speed
                .total_cmp(&a.speed)
                .then(a.recharge_time_full.total_cmp(&b.recharge_time_full))
                .then_with(|| a.id.cmp(&b.id))
        })
        .ok_or(Error::EmptyCandidateSet(package_weight))
}

/// The twelve functionally similar services used as the skyline reference,
/// as `(id, flight_time_min, flight_range_km, recharge_h, is_skyline)`.
pub const REFERENCE_SERVICES: [(&str, f64, f64, f64, bool); 12] = [
    ("DaaS_1", 20.0, 0.8, 1.5, false),
    ("DaaS_2", 20.0, 56.0, 2.0, true),
    ("DaaS_3", 25.0, 8.0, 1.0, true),
    ("DaaS_4", 30.0, 7.0, 1.5, false),
    ("DaaS_5", 20.0, 1.6, 1.5, false),
    ("DaaS_6", 18.0, 0.8, 1.5, true),
    ("DaaS_7", 120.0, 100.0, 2.0, true),
    ("DaaS_8", 20.0, 3.0, 1.0, true),
    ("DaaS_9", 27.0, 7.0, 1.0, false),
    ("DaaS_10", 40.0, 1.9, 1.5, false),
    ("DaaS_11", 22.0, 5.0, 1.5, true),
    ("DaaS_12", 24.0, 8.0, 1.5, true),
];

/// Reference services as drone specs. Speed is set to range over flight time so
/// every spec is self-consistent; payload is a uniform 2 kg.
pub fn reference_catalog() -> Vec<DroneSpec> {
    REFERENCE_SERVICES
        .iter()
        .map(|&(id, time, range, recharge, _)| DroneSpec {
            id: id.to_string(),
            name: id.to_string(),
            payload_capacity: 2.0,
            flight_time: time,
            flight_range: range,
            speed: range / (time / 60.0),
            recharge_time_full: recharge,
        })
        .collect()
}
