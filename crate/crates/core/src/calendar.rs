//! Recharging-pad occupancy per station.
//!
//! Every pad keeps a sorted list of disjoint half-open intervals `[start, end)`
//! in hours since the scenario epoch. Anything beyond the last interval is free.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PadCalendar {
    pads: Vec<Vec<(f64, f64)>>,
}

/// Hours of overlap a reservation may have with an earlier booking before it conflicts.
const ROUNDING_SLACK: f64 = 1e-9;

fn overlaps(start: f64, end: f64, t: f64, duration: f64) -> bool {
    if duration > 0.0 {
        start < t + duration && end > t
    } else {
        start <= t && t < end
    }
}

/// Earliest start `>= t` on a single pad that leaves `[start, start + duration)` free.
fn pad_next_free(intervals: &[(f64, f64)], t: f64, duration: f64) -> f64 {
    let mut candidate = t;
    for &(start, end) in intervals {
        if end <= candidate {
            continue;
        }
        if overlaps(start, end, candidate, duration) {
            candidate = end;
        } else {
            break;
        }
    }
    candidate
}

impl PadCalendar {
    pub fn new(pad_count: usize) -> Self {
        Self {
            pads: vec![Vec::new(); pad_count.max(1)],
        }
    }

    /// Builds a calendar from raw per-pad interval lists, sorting and checking them.
    pub fn from_intervals(pads: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        if pads.is_empty() {
            return Err(Error::ConfigInvalid(
                "calendar needs at least one pad".into(),
            ));
        }
        let mut pads = pads;
        for (idx, pad) in pads.iter_mut().enumerate() {
            pad.sort_by(|a, b| a.0.total_cmp(&b.0));
            for &(s, e) in pad.iter() {
                if !(s.is_finite() && e.is_finite() && e > s) {
                    return Err(Error::ConfigInvalid(format!(
                        "pad {idx}: interval [{s}, {e}) is empty or not finite"
                    )));
                }
            }
            if pad.windows(2).any(|w| w[1].0 < w[0].1) {
                return Err(Error::ConfigInvalid(format!(
                    "pad {idx}: overlapping intervals"
                )));
            }
        }
        Ok(Self { pads })
    }

    pub fn pad_count(&self) -> usize {
        self.pads.len()
    }

    pub fn pads(&self) -> &[Vec<(f64, f64)>] {
        &self.pads
    }

    /// Earliest `t' >= t` at which some pad is free for `[t', t' + duration)`.
    /// With `duration == 0` this is the first instant some pad is idle.
    pub fn next_pad_available(&self, t: f64, duration: f64) -> f64 {
        self.pads
            .iter()
            .map(|pad| pad_next_free(pad, t, duration))
            .fold(f64::INFINITY, f64::min)
    }

    /// True when every pad is occupied at instant `t`.
    pub fn is_congested_at(&self, t: f64) -> bool {
        self.next_pad_available(t, 0.0) > t
    }

    /// Reserves `[t, t + duration)` on the lowest-index free pad and returns that index.
    pub fn reserve(&mut self, t: f64, duration: f64) -> Result<usize> {
        if duration <= 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "reservation duration must be positive, got {duration}"
            )));
        }
        let end = t + duration;
        let (pad_idx, start) = self
            .pads
            .iter()
            .enumerate()
            .map(|(i, pad)| (i, pad_next_free(pad, t, duration)))
            .find(|&(_, free)| free - t <= ROUNDING_SLACK)
            .ok_or(Error::ReservationConflict { start: t, end })?;
        // a start recomputed as arrival + wait can land an ulp inside the previous booking
        let pad = &mut self.pads[pad_idx];
        let at = pad.partition_point(|&(s, _)| s < start);
        pad.insert(at, (start, end));
        Ok(pad_idx)
    }

    /// Functional form of [`PadCalendar::reserve`].
    pub fn reserved(&self, t: f64, duration: f64) -> Result<Self> {
        let mut next = self.clone();
        next.reserve(t, duration)?;
        Ok(next)
    }

    /// Removes an exact `[start, end)` interval. Returns whether one was found.
    pub fn release(&mut self, start: f64, end: f64) -> bool {
        for pad in &mut self.pads {
            if let Some(pos) = pad.iter().position(|&(s, e)| s == start && e == end) {
                pad.remove(pos);
                return true;
            }
        }
        false
    }

    /// Shifts every interval on one pad by `offset` hours.
    pub fn shift_pad(&mut self, pad: usize, offset: f64) {
        if let Some(intervals) = self.pads.get_mut(pad) {
            for iv in intervals.iter_mut() {
                iv.0 += offset;
                iv.1 += offset;
            }
        }
    }

    /// Largest number of intervals overlapping at any instant, across all pads.
    pub fn max_overlap(&self) -> usize {
        let mut events: Vec<(f64, i32)> = self
            .pads
            .iter()
            .flatten()
            .flat_map(|&(s, e)| [(s, 1), (e, -1)])
            .collect();
        // ends sort before starts at the same instant: intervals are half-open
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut cur = 0i32;
        let mut best = 0i32;
        for (_, d) in events {
            cur += d;
            best = best.max(cur);
        }
        best as usize
    }

    /// Structural check: every pad's intervals are sorted, non-empty and disjoint.
    pub fn is_consistent(&self) -> bool {
        self.pads
            .iter()
            .all(|pad| pad.iter().all(|&(s, e)| e > s) && pad.windows(2).all(|w| w[1].0 >= w[0].1))
    }
}

/// Free-function form matching the planner's vocabulary.
pub fn next_pad_available(calendar: &PadCalendar, t: f64, duration: f64) -> f64 {
    calendar.next_pad_available(t, duration)
}

pub fn reserve_pad(calendar: &PadCalendar, t: f64, duration: f64) -> Result<PadCalendar> {
    calendar.reserved(t, duration)
}
