use serde::{Deserialize, Serialize};

use super::HOURS_PER_DAY;
use crate::powerflow::{LimitViolation, ViolationKind};

/// Largest tolerated |Σ schedule| over one day.
pub const NEUTRALITY_TOLERANCE: f64 = 1e-12;

/// Slack when comparing a state of charge against its limits.
pub const SOC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("no arbitrage signal: net load shape is flat")]
    FlatNetLoad,
    #[error("schedule is not energy neutral: daily sum {0:e}")]
    NotNeutral(f64),
    #[error("schedule cycles {0} of capacity per day, more than one full cycle")]
    TooDeep(f64),
    #[error("schedule value at hour {0} is not finite")]
    NonFinite(usize),
    #[error("capacity must be positive, got {0}")]
    Capacity(f64),
    #[error("invalid state-of-charge limits [{0}, {1}]")]
    Limits(f64, f64),
}

/// Daily dispatch shape per unit of energy capacity per hour.
///
/// Positive values discharge into the feeder, negative values charge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatterySchedule {
    shape: [f64; HOURS_PER_DAY],
}

fn cumulative(shape: &[f64; HOURS_PER_DAY]) -> [f64; HOURS_PER_DAY + 1] {
    let mut c = [0.0; HOURS_PER_DAY + 1];
    for t in 0..HOURS_PER_DAY {
        c[t + 1] = c[t] + shape[t];
    }
    c
}

fn span(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

impl BatterySchedule {
    /// Idle storage.
    pub fn zero() -> Self {
        BatterySchedule {
            shape: [0.0; HOURS_PER_DAY],
        }
    }

    /// Wraps an explicit shape after checking neutrality and depth.
    pub fn from_shape(shape: [f64; HOURS_PER_DAY]) -> Result<Self, ScheduleError> {
        if let Some(t) = shape.iter().position(|v| !v.is_finite()) {
            return Err(ScheduleError::NonFinite(t));
        }
        let sum: f64 = shape.iter().sum();
        if sum.abs() > NEUTRALITY_TOLERANCE {
            return Err(ScheduleError::NotNeutral(sum));
        }
        let (lo, hi) = span(&cumulative(&shape));
        if hi - lo > 1.0 + SOC_TOLERANCE {
            return Err(ScheduleError::TooDeep(hi - lo));
        }
        Ok(BatterySchedule { shape })
    }

    pub fn shape(&self) -> &[f64; HOURS_PER_DAY] {
        &self.shape
    }

    /// Dispatch at hour `t` of any day.
    pub fn at(&self, t: usize) -> f64 {
        self.shape[t % HOURS_PER_DAY]
    }

    /// Spread of the cumulative energy over the day, as a fraction of capacity.
    pub fn depth(&self) -> f64 {
        let (lo, hi) = span(&cumulative(&self.shape));
        hi - lo
    }

    /// Start-of-day state of charge that puts the daily maximum at 1.
    pub fn cycle_top_soc(&self) -> f64 {
        let (lo, _) = span(&cumulative(&self.shape));
        1.0 + lo
    }

    /// Largest hourly power per kWh of capacity; the implied kW rating.
    pub fn peak_power_per_kwh(&self) -> f64 {
        self.shape.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Builds the energy-neutral dispatch from day-average load and PV shapes.
///
/// The net shape `load - pv` has its mean removed, so storage discharges
/// when net demand is above average and charges below it, and is scaled so
/// that one day spans exactly one full cycle of capacity.
pub fn build_battery_schedule(
    load: &[f64; HOURS_PER_DAY],
    pv: &[f64; HOURS_PER_DAY],
) -> Result<BatterySchedule, ScheduleError> {
    let mut net = [0.0; HOURS_PER_DAY];
    for t in 0..HOURS_PER_DAY {
        net[t] = load[t] - pv[t];
        if !net[t].is_finite() {
            return Err(ScheduleError::NonFinite(t));
        }
    }
    let mean = net.iter().sum::<f64>() / HOURS_PER_DAY as f64;
    let centred = net.map(|n| n - mean);
    let scale = net.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if centred.iter().all(|d| d.abs() <= 1e-12 * scale) {
        return Err(ScheduleError::FlatNetLoad);
    }
    let (lo, hi) = span(&cumulative(&centred));
    let mut shape = centred.map(|d| d / (hi - lo));
    // remove the rounding residue of the mean subtraction
    let residue = shape.iter().sum::<f64>() / HOURS_PER_DAY as f64;
    for s in &mut shape {
        *s -= residue;
    }
    Ok(BatterySchedule { shape })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocLimits {
    pub soc_min: f64,
    pub soc_max: f64,
}

impl Default for SocLimits {
    fn default() -> Self {
        SocLimits {
            soc_min: 0.0,
            soc_max: 1.0,
        }
    }
}

impl SocLimits {
    pub fn new(soc_min: f64, soc_max: f64) -> Result<Self, ScheduleError> {
        if !(0.0 <= soc_min && soc_min < soc_max && soc_max <= 1.0) {
            return Err(ScheduleError::Limits(soc_min, soc_max));
        }
        Ok(SocLimits { soc_min, soc_max })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocTrajectory {
    /// State of charge at the end of each hour.
    pub soc: [f64; HOURS_PER_DAY],
    pub violations: Vec<LimitViolation>,
}

/// Hour-by-hour state of charge of one unit following `sched`.
pub fn soc_trajectory(
    sched: &BatterySchedule,
    capacity_kwh: f64,
    limits: SocLimits,
    initial_soc: f64,
) -> Result<SocTrajectory, ScheduleError> {
    if !(capacity_kwh > 0.0 && capacity_kwh.is_finite()) {
        return Err(ScheduleError::Capacity(capacity_kwh));
    }
    let mut soc = [0.0; HOURS_PER_DAY];
    let mut violations = Vec::new();
    let mut level = initial_soc;
    for (t, slot) in soc.iter_mut().enumerate() {
        let energy_kwh = sched.at(t) * capacity_kwh;
        level -= energy_kwh / capacity_kwh;
        *slot = level;
        let excess = if level < limits.soc_min - SOC_TOLERANCE {
            limits.soc_min - level
        } else if level > limits.soc_max + SOC_TOLERANCE {
            level - limits.soc_max
        } else {
            continue;
        };
        violations.push(LimitViolation {
            kind: ViolationKind::Soc,
            magnitude: excess,
            location: format!("hour {}", t + 1),
        });
    }
    Ok(SocTrajectory { soc, violations })
}
