use serde::{Deserialize, Serialize};

use super::schedule::{build_battery_schedule, soc_trajectory, BatterySchedule, ScheduleError, SocLimits};
use super::{HourlyProfile, HOURS_PER_DAY};
use crate::encoding::PlacementPlan;
use crate::feeder::Feeder;
use crate::powerflow::{check_limits, InjectionSet, PowerFlowError, SweepSolver, ViolationKind};

/// Violation added for every hour whose power flow does not converge.
pub const DIVERGENCE_PENALTY: f64 = 1e6;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("horizon of {0} hours is not a positive multiple of 24")]
    BadHorizon(usize),
    #[error("plan has {sites} sites but {sizes} sizes")]
    PlanShape { sites: usize, sizes: usize },
    #[error("site index {site} is outside the {candidates} candidate nodes")]
    UnknownSite { site: usize, candidates: usize },
    #[error("site index {0} appears more than once")]
    DuplicateSite(usize),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    PowerFlow(#[from] PowerFlowError),
}

/// Load multipliers and PV irradiance over the simulated horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Profiles {
    pub load: HourlyProfile,
    pub pv: HourlyProfile,
}

impl Profiles {
    /// Dispatch derived from the day-average load and PV shapes.
    pub fn battery_schedule(&self) -> Result<BatterySchedule, ScheduleError> {
        build_battery_schedule(&self.load.day_average(), &self.pv.day_average())
    }

    /// Hours after which both profiles repeat.
    pub fn period(&self) -> usize {
        lcm(self.load.len(), self.pv.len())
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Sum of violation magnitudes by kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationBreakdown {
    pub voltage: f64,
    pub line_loading: f64,
    pub generation: f64,
    pub soc: f64,
    pub divergence: f64,
    pub diverged_hours: usize,
}

impl ViolationBreakdown {
    pub fn total(&self) -> f64 {
        self.voltage + self.line_loading + self.generation + self.soc + self.divergence
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearlyEvaluation {
    /// Mean series loss over the horizon, kW.
    pub avg_loss_kw: f64,
    /// Mean hourly spread between the highest and lowest bus voltage, pu.
    pub avg_voltage_dev_pu: f64,
    /// Total violation magnitude; zero means feasible.
    pub constraint_violation: f64,
    pub breakdown: ViolationBreakdown,
}

impl YearlyEvaluation {
    pub fn objectives(&self) -> [f64; 2] {
        [self.avg_loss_kw, self.avg_voltage_dev_pu]
    }

    pub fn is_feasible(&self) -> bool {
        self.constraint_violation == 0.0
    }
}

/// One simulated hour. `weight` counts how many hours of the horizon share
/// this operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourlyOutcome {
    pub hour: usize,
    pub weight: usize,
    pub loss_kw: f64,
    pub voltage_dev_pu: f64,
    pub converged: bool,
    pub violations: ViolationBreakdown,
}

/// Evaluates placement plans against one feeder, profile set and dispatch.
///
/// Safe to share between threads; every call is independent.
#[derive(Debug, Clone)]
pub struct PlanEvaluator<'f> {
    solver: SweepSolver<'f>,
    candidates: Vec<usize>,
    pv_buses: Vec<(usize, f64)>,
    profiles: Profiles,
    schedule: BatterySchedule,
    horizon: usize,
    limits: SocLimits,
}

impl<'f> PlanEvaluator<'f> {
    pub fn new(
        feeder: &'f Feeder,
        profiles: Profiles,
        schedule: BatterySchedule,
        horizon: usize,
        limits: SocLimits,
    ) -> Result<Self, EvalError> {
        if horizon == 0 || !horizon.is_multiple_of(HOURS_PER_DAY) {
            return Err(EvalError::BadHorizon(horizon));
        }
        let index = |id: &str| feeder.bus_index(id).expect("validated feeder");
        let candidates = feeder.candidate_nodes().iter().map(|id| index(id)).collect();
        let pv_buses = feeder.pv_units().iter().map(|pv| (index(&pv.bus), pv.pmax_kw)).collect();
        Ok(PlanEvaluator {
            solver: SweepSolver::new(feeder),
            candidates,
            pv_buses,
            profiles,
            schedule,
            horizon,
            limits,
        })
    }

    pub fn feeder(&self) -> &'f Feeder {
        self.solver.feeder()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn schedule(&self) -> &BatterySchedule {
        &self.schedule
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    fn check_plan(&self, plan: &PlacementPlan) -> Result<(), EvalError> {
        if plan.sites.len() != plan.sizes_kwh.len() {
            return Err(EvalError::PlanShape {
                sites: plan.sites.len(),
                sizes: plan.sizes_kwh.len(),
            });
        }
        let mut seen = vec![false; self.candidates.len()];
        for &s in &plan.sites {
            if s >= self.candidates.len() {
                return Err(EvalError::UnknownSite {
                    site: s,
                    candidates: self.candidates.len(),
                });
            }
            if std::mem::replace(&mut seen[s], true) {
                return Err(EvalError::DuplicateSite(s));
            }
        }
        Ok(())
    }

    /// Operating points of the horizon, one per distinct hour of the
    /// combined profile period.
    pub fn hourly(&self, plan: &PlacementPlan) -> Result<Vec<HourlyOutcome>, EvalError> {
        self.check_plan(plan)?;
        let feeder = self.feeder();
        let period = self.profiles.period();
        let distinct = self.horizon.min(period);
        let mut inj = InjectionSet::new(feeder);
        let mut out = Vec::with_capacity(distinct);
        for t in 0..distinct {
            inj.clear();
            let irradiance = self.profiles.pv.at(t);
            for &(bus, pmax) in &self.pv_buses {
                inj.add_balanced_at(feeder, bus, pmax * irradiance);
            }
            let dispatch = self.schedule.at(t);
            for (&site, &size) in plan.sites.iter().zip(&plan.sizes_kwh) {
                inj.add_balanced_at(feeder, self.candidates[site], f64::from(size) * dispatch);
            }
            let sol = self.solver.solve(&inj, self.profiles.load.at(t))?;
            let mut violations = ViolationBreakdown::default();
            let (loss_kw, voltage_dev_pu) = if sol.converged {
                for v in check_limits(feeder, &sol) {
                    match v.kind {
                        ViolationKind::Voltage => violations.voltage += v.magnitude,
                        ViolationKind::LineLoading => violations.line_loading += v.magnitude,
                        ViolationKind::Generation => violations.generation += v.magnitude,
                        ViolationKind::Soc => violations.soc += v.magnitude,
                    }
                }
                (sol.total_loss_kw, sol.voltage_spread(feeder))
            } else {
                violations.divergence = DIVERGENCE_PENALTY;
                violations.diverged_hours = 1;
                (0.0, 0.0)
            };
            out.push(HourlyOutcome {
                hour: t,
                weight: (self.horizon - 1 - t) / period + 1,
                loss_kw,
                voltage_dev_pu,
                converged: sol.converged,
                violations,
            });
        }
        Ok(out)
    }

    /// State-of-charge excess of one day, summed over all units.
    pub fn daily_soc_violation(&self, plan: &PlacementPlan) -> Result<f64, EvalError> {
        let start = self.schedule.cycle_top_soc();
        let mut total = 0.0;
        for &size in plan.sizes_kwh.iter().filter(|&&s| s > 0) {
            let traj = soc_trajectory(&self.schedule, f64::from(size), self.limits, start)?;
            total += traj.violations.iter().map(|v| v.magnitude).sum::<f64>();
        }
        Ok(total)
    }

    pub fn evaluate(&self, plan: &PlacementPlan) -> Result<YearlyEvaluation, EvalError> {
        let hours = self.hourly(plan)?;
        let mut loss = 0.0;
        let mut vdev = 0.0;
        let mut b = ViolationBreakdown::default();
        for h in &hours {
            let w = h.weight as f64;
            loss += w * h.loss_kw;
            vdev += w * h.voltage_dev_pu;
            b.voltage += w * h.violations.voltage;
            b.line_loading += w * h.violations.line_loading;
            b.generation += w * h.violations.generation;
            b.divergence += w * h.violations.divergence;
            b.diverged_hours += h.weight * h.violations.diverged_hours;
        }
        let days = self.horizon / HOURS_PER_DAY;
        b.soc = self.daily_soc_violation(plan)? * days as f64;
        let h = self.horizon as f64;
        Ok(YearlyEvaluation {
            avg_loss_kw: loss / h,
            avg_voltage_dev_pu: vdev / h,
            constraint_violation: b.total(),
            breakdown: b,
        })
    }
}

/// One-shot evaluation; see [`PlanEvaluator`] to evaluate many plans.
pub fn evaluate_plan(
    feeder: &Feeder,
    plan: &PlacementPlan,
    profiles: &Profiles,
    schedule: &BatterySchedule,
    horizon: usize,
    limits: SocLimits,
) -> Result<YearlyEvaluation, EvalError> {
    PlanEvaluator::new(feeder, profiles.clone(), *schedule, horizon, limits)?.evaluate(plan)
}
