//! Hourly profiles, the daily storage dispatch and yearly plan evaluation.

mod evaluate;
mod schedule;

pub use evaluate::{evaluate_plan, EvalError, HourlyOutcome, PlanEvaluator, Profiles, ViolationBreakdown, YearlyEvaluation};
pub use schedule::{build_battery_schedule, soc_trajectory, BatterySchedule, ScheduleError, SocLimits, SocTrajectory};

pub const HOURS_PER_DAY: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// Load multipliers, any non-negative value.
    Load,
    /// Irradiance fraction of PV peak output, in `[0, 1]`.
    Pv,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("line {line}: `{text}` is not a number")]
    NonNumeric { line: usize, text: String },
    #[error("line {line}: value {value} is out of range for a {kind} profile")]
    OutOfRange { line: usize, value: f64, kind: &'static str },
    #[error("profile has {0} values; need at least 24 and a multiple of 24")]
    Length(usize),
}

/// Per-unit multipliers, one per hour.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyProfile {
    label: String,
    values: Vec<f64>,
}

impl HourlyProfile {
    pub fn new(label: impl Into<String>, values: Vec<f64>, kind: ProfileKind) -> Result<Self, ProfileError> {
        for (i, &v) in values.iter().enumerate() {
            let ok = match kind {
                ProfileKind::Load => v.is_finite() && v >= 0.0,
                ProfileKind::Pv => (0.0..=1.0).contains(&v),
            };
            if !ok {
                return Err(ProfileError::OutOfRange {
                    line: i + 1,
                    value: v,
                    kind: kind_name(kind),
                });
            }
        }
        if values.len() < HOURS_PER_DAY || !values.len().is_multiple_of(HOURS_PER_DAY) {
            return Err(ProfileError::Length(values.len()));
        }
        Ok(HourlyProfile {
            label: label.into(),
            values,
        })
    }

    /// Constant profile of `days` days.
    pub fn constant(label: impl Into<String>, value: f64, days: usize, kind: ProfileKind) -> Result<Self, ProfileError> {
        Self::new(label, vec![value; days * HOURS_PER_DAY], kind)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at hour `t`, wrapping around when `t` exceeds the profile.
    pub fn at(&self, t: usize) -> f64 {
        self.values[t % self.values.len()]
    }

    /// Hour-of-day mean over all days in the profile.
    pub fn day_average(&self) -> [f64; HOURS_PER_DAY] {
        let days = (self.values.len() / HOURS_PER_DAY) as f64;
        let mut out = [0.0; HOURS_PER_DAY];
        for day in self.values.chunks_exact(HOURS_PER_DAY) {
            for (o, v) in out.iter_mut().zip(day) {
                *o += v;
            }
        }
        out.map(|v| v / days)
    }
}

fn kind_name(kind: ProfileKind) -> &'static str {
    match kind {
        ProfileKind::Load => "load",
        ProfileKind::Pv => "pv",
    }
}

/// Reads one value per line. Blank lines and `#` comments are ignored.
pub fn load_profiles(text: &str, label: &str, kind: ProfileKind) -> Result<HourlyProfile, ProfileError> {
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let v: f64 = content.parse().map_err(|_| ProfileError::NonNumeric {
            line: idx + 1,
            text: content.to_string(),
        })?;
        if !v.is_finite() {
            return Err(ProfileError::NonNumeric {
                line: idx + 1,
                text: content.to_string(),
            });
        }
        values.push(v);
    }
    HourlyProfile::new(label, values, kind)
}
