//! Wind-adjusted ground speed, travel time and battery use for a single leg.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wind speed (km/h) and the bearing it blows FROM (degrees, meteorological).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindSample {
    pub speed: f64,
    pub bearing: f64,
}

impl WindSample {
    pub const CALM: WindSample = WindSample {
        speed: 0.0,
        bearing: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "wind speed {} < 0",
                self.speed
            )));
        }
        if !(0.0..360.0).contains(&self.bearing) {
            return Err(Error::ConfigInvalid(format!(
                "wind bearing {} outside [0, 360)",
                self.bearing
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindEpoch {
    /// hours since epoch at which this sample takes over
    pub start: f64,
    pub sample: WindSample,
}

/// Piecewise-constant wind timeline. The last epoch extends forever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindFieldRecord")]
pub struct WindField {
    epochs: Vec<WindEpoch>,
}

#[derive(Deserialize)]
struct WindFieldRecord {
    epochs: Vec<WindEpoch>,
}

impl TryFrom<WindFieldRecord> for WindField {
    type Error = Error;
    fn try_from(rec: WindFieldRecord) -> Result<Self> {
        WindField::new(rec.epochs)
    }
}

impl WindField {
    pub fn new(epochs: Vec<WindEpoch>) -> Result<Self> {
        match epochs.first() {
            Some(first) if first.start == 0.0 => {}
            _ => {
                return Err(Error::ConfigInvalid(
                    "wind timeline must start at t=0".into(),
                ))
            }
        }
        if epochs.windows(2).any(|w| w[1].start <= w[0].start) {
            return Err(Error::ConfigInvalid(
                "wind epochs must be strictly increasing".into(),
            ));
        }
        for e in &epochs {
            e.sample.validate()?;
        }
        Ok(Self { epochs })
    }

    pub fn constant(sample: WindSample) -> Self {
        Self {
            epochs: vec![WindEpoch { start: 0.0, sample }],
        }
    }

    pub fn calm() -> Self {
        Self::constant(WindSample::CALM)
    }

    pub fn epochs(&self) -> &[WindEpoch] {
        &self.epochs
    }

    /// Sample in force at time `t` (times before 0 use the first epoch).
    pub fn at(&self, t: f64) -> WindSample {
        let idx = self.epochs.partition_point(|e| e.start <= t);
        self.epochs[idx.saturating_sub(1)].sample
    }

    /// Epoch boundaries strictly after `t`, in order.
    pub fn changes_after(&self, t: f64) -> impl Iterator<Item = f64> + '_ {
        let idx = self.epochs.partition_point(|e| e.start <= t);
        self.epochs[idx..].iter().map(|e| e.start)
    }

    pub fn max_speed(&self) -> f64 {
        self.epochs
            .iter()
            .map(|e| e.sample.speed)
            .fold(0.0, f64::max)
    }
}

/// Ground-track decomposition of one leg under a given wind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegKinematics {
    /// course correction angle, degrees in (-180, 180]
    pub delta: f64,
    /// along-track wind; negative is headwind
    pub along_track: f64,
    /// cross-track wind
    pub cross_track: f64,
    /// along-track share of the air speed after crab correction
    pub corrected_air: f64,
    pub ground_speed: f64,
    pub air_speed: f64,
}

/// Maps any angle to (-180, 180].
pub fn normalize_delta(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Ground speed for course `course` (degrees) at air speed `air_speed` under `wind`.
pub fn ground_speed(air_speed: f64, wind: WindSample, course: f64) -> Result<LegKinematics> {
    if !(air_speed > 0.0) {
        return Err(Error::ConfigInvalid(format!(
            "air speed must be positive, got {air_speed}"
        )));
    }
    let delta = normalize_delta(course - wind.bearing);
    let angle = (180.0 - delta).to_radians();
    let along_track = wind.speed * angle.cos();
    let cross_track = wind.speed * angle.sin();
    let radicand = air_speed * air_speed - cross_track * cross_track;
    if radicand < 0.0 {
        return Err(Error::InfeasibleWind {
            crosswind: cross_track.abs(),
            air_speed,
        });
    }
    let corrected_air = radicand.sqrt();
    let gs = along_track + corrected_air;
    if gs <= 0.0 {
        return Err(Error::InfeasibleWind {
            crosswind: cross_track.abs(),
            air_speed,
        });
    }
    Ok(LegKinematics {
        delta,
        along_track,
        cross_track,
        corrected_air,
        ground_speed: gs,
        air_speed,
    })
}

/// Hours to cover `distance` km at the leg's ground speed.
pub fn travel_time(distance: f64, kin: &LegKinematics) -> f64 {
    distance / kin.ground_speed
}

/// Linear consumption model: a base rate per 10 km at 1 kg, scaled by payload and by
/// how much longer the leg takes against the wind (`AS / GS`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyModel {
    /// percent of battery per 10 km with a 1 kg package in calm air
    pub base_rate: f64,
    /// drone mass expressed as package-equivalent kg
    pub m_drone_equivalent: f64,
    /// battery percent that must remain after every leg
    pub reserve_margin: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            base_rate: 25.0,
            m_drone_equivalent: 3.0,
            reserve_margin: 0.0,
        }
    }
}

impl EnergyModel {
    pub fn weight_factor(&self, package_weight: f64) -> f64 {
        (self.m_drone_equivalent + package_weight) / (self.m_drone_equivalent + 1.0)
    }

    pub fn battery_consumed(&self, distance: f64, package_weight: f64, kin: &LegKinematics) -> f64 {
        if distance <= 0.0 {
            return 0.0;
        }
        let wind_factor = kin.air_speed / kin.ground_speed;
        self.base_rate * (distance / 10.0) * self.weight_factor(package_weight) * wind_factor
    }
}

/// [`EnergyModel::battery_consumed`] with the default model.
pub fn battery_consumed(distance: f64, package_weight: f64, kin: &LegKinematics) -> f64 {
    EnergyModel::default().battery_consumed(distance, package_weight, kin)
}
