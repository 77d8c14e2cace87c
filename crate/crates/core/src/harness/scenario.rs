use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calendar::PadCalendar;
use crate::error::{Error, Result};
use crate::model::{euclidean, DeliveryRequest, DroneSpec, Node, NodeId, SkywayNetwork};
use crate::resilience::PerturbationModel;
use crate::wind::{EnergyModel, WindEpoch, WindField, WindSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindConfig {
    /// hours between wind changes
    pub epoch_hours: f64,
    /// wind timeline length, hours; the last sample holds afterwards
    pub horizon_hours: f64,
    /// km/h
    pub max_speed: f64,
    /// largest change of direction between epochs, degrees
    pub max_veer: f64,
}

impl Default for WindConfig {
    fn default() -> Self {
        Self {
            epoch_hours: 0.5,
            horizon_hours: 8.0,
            max_speed: 25.0,
            max_veer: 30.0,
        }
    }
}

/// Background pad traffic from other drones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CongestionConfig {
    /// chance a station has a window in which every pad is taken
    pub hotspot_probability: f64,
    /// hours
    pub hotspot_min: f64,
    pub hotspot_max: f64,
    /// chance each pad carries one unrelated booking
    pub background_probability: f64,
    /// bookings start within `[0, horizon_hours)`
    pub horizon_hours: f64,
}

impl Default for CongestionConfig {
    fn default() -> Self {
        Self {
            hotspot_probability: 0.3,
            hotspot_min: 0.25,
            hotspot_max: 1.0,
            background_probability: 0.4,
            horizon_hours: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub node_count: usize,
    pub pads_per_node: usize,
    pub drone_count: usize,
    /// requests per scenario; every run serves one
    pub request_count: usize,
    /// battery percent per 10 km with a 1 kg package
    pub battery_rate: f64,
    pub failure_rate: f64,
    /// defaults to 10% of `node_count`, at least 1
    pub runs_per_point: Option<usize>,
    pub seed: u64,
    /// side of the square service area, km
    pub area_km: f64,
    /// nearest neighbours each station links to
    pub k_nearest: usize,
    /// kg
    pub package_weight: f64,
    pub wind: WindConfig,
    pub congestion: CongestionConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            node_count: 20,
            pads_per_node: 5,
            drone_count: 60,
            request_count: 1,
            battery_rate: 25.0,
            failure_rate: 0.1,
            runs_per_point: None,
            seed: 42,
            area_km: 60.0,
            k_nearest: 3,
            package_weight: 1.0,
            wind: WindConfig::default(),
            congestion: CongestionConfig::default(),
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::ConfigInvalid(msg)
}

fn check_range<T: PartialOrd + std::fmt::Display>(name: &str, v: T, lo: T, hi: T) -> Result<()> {
    if v < lo || v > hi {
        return Err(invalid(format!("{name} = {v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    check_range(name, v, 0.0, 1.0)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("node_count", self.node_count, 10, 60)?;
        check_range("drone_count", self.drone_count, 50, 80)?;
        check_range("failure_rate", self.failure_rate, 0.1, 0.5)?;
        if self.pads_per_node == 0 || self.request_count == 0 || self.k_nearest == 0 {
            return Err(invalid(
                "pads_per_node, request_count and k_nearest must be at least 1".into(),
            ));
        }
        if self.runs_per_point == Some(0) {
            return Err(invalid("runs_per_point must be at least 1".into()));
        }
        check_positive("battery_rate", self.battery_rate)?;
        check_positive("area_km", self.area_km)?;
        check_positive("package_weight", self.package_weight)?;
        check_positive("wind.epoch_hours", self.wind.epoch_hours)?;
        check_positive("wind.horizon_hours", self.wind.horizon_hours)?;
        check_range("wind.max_speed", self.wind.max_speed, 0.0, 200.0)?;
        check_range("wind.max_veer", self.wind.max_veer, 0.0, 180.0)?;
        let c = &self.congestion;
        check_probability("congestion.hotspot_probability", c.hotspot_probability)?;
        check_probability(
            "congestion.background_probability",
            c.background_probability,
        )?;
        check_positive("congestion.horizon_hours", c.horizon_hours)?;
        check_positive("congestion.hotspot_min", c.hotspot_min)?;
        if c.hotspot_max < c.hotspot_min {
            return Err(invalid("congestion.hotspot_max < hotspot_min".into()));
        }
        Ok(())
    }

    pub fn runs(&self) -> usize {
        self.runs_per_point
            .unwrap_or_else(|| ((self.node_count as f64 * 0.1).round() as usize).max(1))
    }

    pub fn energy(&self) -> EnergyModel {
        EnergyModel {
            base_rate: self.battery_rate,
            ..EnergyModel::default()
        }
    }
}

/// Everything one delivery run needs. This is also the scenario file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub network: SkywayNetwork,
    pub drones: Vec<DroneSpec>,
    pub wind: WindField,
    pub request: DeliveryRequest,
    #[serde(default)]
    pub perturbation: PerturbationModel,
    #[serde(default)]
    pub energy: EnergyModel,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.drones.is_empty() {
            return Err(invalid("scenario has no drones".into()));
        }
        for d in &self.drones {
            d.validate()?;
        }
        self.request.validate(&self.network)?;
        self.perturbation.validate()?;
        check_positive("energy.base_rate", self.energy.base_rate)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Reference drone types the fleet is sampled around:
/// `(name, payload kg, flight time min, range km, speed km/h, recharge h)`.
pub const ARCHETYPES: [(&str, f64, f64, f64, f64, f64); 4] = [
    ("DJI M200 V2", 1.45, 24.0, 32.4, 81.0, 2.24),
    ("heavy lifter", 5.5, 30.0, 28.0, 60.0, 1.5),
    ("long range", 2.0, 40.0, 45.0, 70.0, 2.0),
    ("light quad", 1.0, 28.0, 30.0, 65.0, 1.0),
];

fn jitter(rng: &mut ChaCha8Rng, v: f64) -> f64 {
    v * rng.gen_range(0.9..1.1)
}

fn sample_drones(rng: &mut ChaCha8Rng, count: usize) -> Vec<DroneSpec> {
    (0..count)
        .map(|i| {
            let (name, payload, time, range, speed, recharge) = ARCHETYPES[i % ARCHETYPES.len()];
            let flight_time = jitter(rng, time);
            let speed = jitter(rng, speed);
            let flight_range = jitter(rng, range).min(speed * flight_time / 60.0);
            DroneSpec {
                id: format!("D{i:03}"),
                name: name.to_string(),
                payload_capacity: jitter(rng, payload),
                flight_time,
                flight_range,
                speed,
                recharge_time_full: jitter(rng, recharge),
            }
        })
        .collect()
}

/// Union of each station's `k` nearest neighbours and a minimum spanning tree.
fn topology(points: &[(f64, f64)], k: usize) -> Vec<(usize, usize)> {
    let n = points.len();
    let mut edges = Vec::new();
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| {
            euclidean(points[i], points[a])
                .total_cmp(&euclidean(points[i], points[b]))
                .then(a.cmp(&b))
        });
        edges.extend(others.into_iter().take(k).map(|j| (i.min(j), i.max(j))));
    }

    // Prim
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, 0usize); n];
    in_tree[0] = true;
    for j in 1..n {
        best[j] = (euclidean(points[0], points[j]), 0);
    }
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0).then(a.cmp(&b)))
            .expect("nodes left");
        in_tree[next] = true;
        let parent = best[next].1;
        edges.push((parent.min(next), parent.max(next)));
        for j in 0..n {
            let d = euclidean(points[next], points[j]);
            if !in_tree[j] && d < best[j].0 {
                best[j] = (d, next);
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Component label per node.
fn components<'e>(n: usize, edges: impl Iterator<Item = &'e (usize, usize)>) -> Vec<usize> {
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for &(a, b) in edges {
        let (ra, rb) = (root(&mut label, a), root(&mut label, b));
        label[ra.max(rb)] = ra.min(rb);
    }
    (0..n).map(|i| root(&mut label, i)).collect()
}

fn merge(mut intervals: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for (s, e) in intervals {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

fn calendar(rng: &mut ChaCha8Rng, pads: usize, c: &CongestionConfig) -> Result<PadCalendar> {
    let mut per_pad: Vec<Vec<(f64, f64)>> = vec![Vec::new(); pads];
    if rng.gen_bool(c.hotspot_probability) {
        let start = rng.gen_range(0.0..c.horizon_hours);
        let len = rng.gen_range(c.hotspot_min..=c.hotspot_max);
        for pad in per_pad.iter_mut() {
            // pads free up one by one near the end of the window
            let tail = rng.gen_range(0.0..0.25 * len);
            pad.push((start, start + len + tail));
        }
    }
    for pad in per_pad.iter_mut() {
        if rng.gen_bool(c.background_probability) {
            let start = rng.gen_range(0.0..c.horizon_hours);
            pad.push((start, start + rng.gen_range(0.1..0.5)));
        }
    }
    PadCalendar::from_intervals(per_pad.into_iter().map(merge).collect())
}

fn wind(rng: &mut ChaCha8Rng, w: &WindConfig) -> Result<WindField> {
    let epochs = (w.horizon_hours / w.epoch_hours).ceil().max(1.0) as usize;
    let mut bearing = rng.gen_range(0.0..360.0);
    let mut out = Vec::with_capacity(epochs);
    for k in 0..epochs {
        if k > 0 && w.max_veer > 0.0 {
            bearing = (bearing + rng.gen_range(-w.max_veer..=w.max_veer)).rem_euclid(360.0);
        }
        let speed = if w.max_speed > 0.0 {
            rng.gen_range(0.0..=w.max_speed)
        } else {
            0.0
        };
        out.push(WindEpoch {
            start: k as f64 * w.epoch_hours,
            sample: WindSample {
                speed,
                bearing: if bearing >= 360.0 { 0.0 } else { bearing },
            },
        });
    }
    WindField::new(out)
}

/// A connected random network with background pad traffic, a drone fleet, a
/// wind timeline and a request between two far-apart stations.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.node_count;

    let points: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.gen_range(0.0..config.area_km),
                rng.gen_range(0.0..config.area_km),
            )
        })
        .collect();
    let edges = topology(&points, config.k_nearest);
    let nodes = points
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut node = Node::new(i, p, config.pads_per_node);
            node.calendar = calendar(&mut rng, config.pads_per_node, &config.congestion)?;
            Ok(node)
        })
        .collect::<Result<Vec<_>>>()?;
    let network = SkywayNetwork::new(nodes, &edges)?;

    let drones = sample_drones(&mut rng, config.drone_count);
    let wind = wind(&mut rng, &config.wind)?;

    // endpoints share a component of segments a full battery covers in calm air
    let energy = config.energy();
    let per_km = energy.base_rate / 10.0 * energy.weight_factor(config.package_weight);
    let reach = (100.0 - energy.reserve_margin) / per_km;
    let component = components(
        n,
        edges
            .iter()
            .filter(|&&(i, j)| euclidean(points[i], points[j]) <= reach),
    );
    let eligible: Vec<usize> = (0..n)
        .filter(|&i| component.iter().filter(|&&c| c == component[i]).count() > 1)
        .collect();
    let source = match eligible.as_slice() {
        [] => rng.gen_range(0..n),
        some => some[rng.gen_range(0..some.len())],
    };
    let candidates: Vec<usize> = (0..n)
        .filter(|&j| j != source && (eligible.is_empty() || component[j] == component[source]))
        .collect();
    let farthest = candidates
        .iter()
        .map(|&j| euclidean(points[source], points[j]))
        .fold(0.0, f64::max);
    let far: Vec<usize> = candidates
        .into_iter()
        .filter(|&j| euclidean(points[source], points[j]) >= 0.5 * farthest)
        .collect();
    let destination = *far.choose(&mut rng).expect("farthest node qualifies");

    Ok(Scenario {
        network,
        drones,
        wind,
        request: DeliveryRequest {
            source: NodeId(source),
            destination: NodeId(destination),
            package_weight: config.package_weight,
            start_time: 0.0,
        },
        perturbation: PerturbationModel {
            failure_rate: config.failure_rate,
            seed: config.seed,
            ..PerturbationModel::default()
        },
        energy: config.energy(),
    })
}
