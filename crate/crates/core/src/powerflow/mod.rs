//! Snapshot power flow for radial feeders.
//!
//! Quantities are solved in per-unit on a 100 kVA per-phase base and each
//! bus's own line-to-neutral base voltage. Results are reported in kW, kVA,
//! amperes and per-unit volts.

mod analytic;
mod limits;
mod sweep;

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::feeder::{Feeder, Phase};

pub use analytic::{analytic_pv_loss, PvLossInputs};
pub use limits::{check_limits, LimitViolation, ViolationKind};
pub use sweep::{SweepOptions, SweepSolver};

/// Per-phase power base, kVA.
pub const BASE_KVA: f64 = 100.0;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PowerFlowError {
    #[error("injection at unknown bus `{0}`")]
    UnknownBus(String),
    #[error("bus `{bus}` has no phase {phase}")]
    MissingPhase { bus: String, phase: Phase },
    #[error("injection at `{0}` is not finite")]
    NonFinite(String),
    #[error("load scale must be finite and non-negative, got {0}")]
    InvalidLoadScale(f64),
    #[error("solution did not converge after {iterations} iterations")]
    Diverged { iterations: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Complex power generated at each bus and phase (kW + j kvar) for one hour.
///
/// Positive real power is injected into the network.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSet {
    power: Vec<[Complex64; 3]>,
}

impl InjectionSet {
    pub fn new(feeder: &Feeder) -> Self {
        InjectionSet {
            power: vec![[Complex64::new(0.0, 0.0); 3]; feeder.buses().len()],
        }
    }

    /// Adds generation on one phase of a bus.
    pub fn add(&mut self, feeder: &Feeder, bus: &str, phase: Phase, kva: Complex64) -> Result<(), PowerFlowError> {
        let idx = feeder.bus_index(bus).ok_or_else(|| PowerFlowError::UnknownBus(bus.to_string()))?;
        if !feeder.buses()[idx].phases.contains(phase) {
            return Err(PowerFlowError::MissingPhase {
                bus: bus.to_string(),
                phase,
            });
        }
        if !(kva.re.is_finite() && kva.im.is_finite()) {
            return Err(PowerFlowError::NonFinite(bus.to_string()));
        }
        self.power[idx][phase.index()] += kva;
        Ok(())
    }

    /// Adds unity power-factor generation split evenly over the bus phases.
    pub fn add_balanced(&mut self, feeder: &Feeder, bus: &str, p_kw: f64) -> Result<(), PowerFlowError> {
        let idx = feeder.bus_index(bus).ok_or_else(|| PowerFlowError::UnknownBus(bus.to_string()))?;
        if !p_kw.is_finite() {
            return Err(PowerFlowError::NonFinite(bus.to_string()));
        }
        self.add_balanced_at(feeder, idx, p_kw);
        Ok(())
    }

    pub(crate) fn add_balanced_at(&mut self, feeder: &Feeder, bus: usize, p_kw: f64) {
        let phases = feeder.buses()[bus].phases;
        let share = p_kw / phases.len() as f64;
        for p in phases.iter() {
            self.power[bus][p.index()] += Complex64::new(share, 0.0);
        }
    }

    /// Generation at bus index `bus`, kVA per phase.
    pub fn at(&self, bus: usize) -> &[Complex64; 3] {
        &self.power[bus]
    }

    pub fn clear(&mut self) {
        for p in &mut self.power {
            *p = [Complex64::new(0.0, 0.0); 3];
        }
    }
}

/// Result of one snapshot solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    /// Per-unit phase voltages by bus index; phases a bus lacks are zero.
    pub voltages: Vec<[Complex64; 3]>,
    /// Series current of each branch in amperes, receiving-side.
    pub branch_currents: Vec<[Complex64; 3]>,
    /// Series loss of each branch, kW.
    pub branch_loss_kw: Vec<f64>,
    /// Total complex power delivered by the source, kVA.
    pub source_power: Complex64,
    /// Net consumption of all shunt elements (loads, capacitors, minus
    /// injections), kVA.
    pub served_load: Complex64,
    pub total_loss_kw: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Largest per-phase voltage update of the last iteration, pu.
    pub max_voltage_change: f64,
}

impl PowerFlowSolution {
    /// Voltage magnitudes of every bus-phase present in the feeder.
    pub fn voltage_magnitudes<'a>(&'a self, feeder: &'a Feeder) -> impl Iterator<Item = f64> + 'a {
        feeder
            .buses()
            .iter()
            .zip(&self.voltages)
            .flat_map(|(bus, v)| bus.phases.iter().map(move |p| v[p.index()].norm()))
    }

    /// Spread between the highest and lowest bus-phase voltage magnitude, pu.
    pub fn voltage_spread(&self, feeder: &Feeder) -> f64 {
        let (lo, hi) = self
            .voltage_magnitudes(feeder)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo.is_finite() && hi.is_finite() {
            hi - lo
        } else {
            f64::NAN
        }
    }

    /// Tabular dump: one `bus` row per bus-phase and one `branch` row per
    /// branch-phase, whitespace separated.
    ///
    /// ```text
    /// # bus <id> <phase> <|V| pu> <angle deg>
    /// # branch <id> <phase> <|I| A> <angle deg>
    /// # loss_kw <total>
    /// ```
    pub fn debug_table(&self, feeder: &Feeder) -> String {
        let mut out = String::from("# kind id phase magnitude angle_deg\n");
        for (bus, v) in feeder.buses().iter().zip(&self.voltages) {
            for p in bus.phases.iter() {
                let z = v[p.index()];
                let _ = writeln!(out, "bus {} {} {:.9} {:.6}", bus.id, p, z.norm(), z.arg().to_degrees());
            }
        }
        for (br, i) in feeder.branches().iter().zip(&self.branch_currents) {
            let phases = feeder.bus(&br.to).map(|b| b.phases).unwrap_or_default();
            for p in phases.iter() {
                let z = i[p.index()];
                let _ = writeln!(out, "branch {} {} {:.6} {:.6}", br.id, p, z.norm(), z.arg().to_degrees());
            }
        }
        let _ = writeln!(out, "loss_kw {:.9}", self.total_loss_kw);
        out
    }
}

/// Solves one snapshot. See [`SweepSolver`] to reuse the precomputed network
/// across many snapshots.
pub fn solve_snapshot(
    feeder: &Feeder,
    injections: &InjectionSet,
    load_scale: f64,
) -> Result<PowerFlowSolution, PowerFlowError> {
    SweepSolver::new(feeder).solve(injections, load_scale)
}

/// Total series loss of a converged solution, kW.
pub fn total_loss(sol: &PowerFlowSolution) -> Result<f64, PowerFlowError> {
    if !sol.converged {
        return Err(PowerFlowError::Diverged {
            iterations: sol.iterations,
        });
    }
    Ok(sol.branch_loss_kw.iter().sum())
}

/// Source real power minus served real load minus series loss, kW.
pub fn power_balance_residual_kw(sol: &PowerFlowSolution) -> f64 {
    sol.source_power.re - sol.served_load.re - sol.total_loss_kw
}

/// Largest per-phase current mismatch at any non-source bus, pu.
///
/// Shunt currents are rebuilt from the feeder records rather than from the
/// solver's internal tables, so this is an independent check of the
/// solution.
pub fn kcl_residual(feeder: &Feeder, sol: &PowerFlowSolution, injections: &InjectionSet, load_scale: f64) -> f64 {
    let buses = feeder.buses();
    let t = feeder.traversal();
    let i_base: Vec<f64> = buses.iter().map(|b| BASE_KVA / b.base_kv).collect();
    let branch_pu = |e: usize| -> [Complex64; 3] {
        let base = i_base[t.branch_to[e]];
        sol.branch_currents[e].map(|c| c / base)
    };

    let mut worst: f64 = 0.0;
    for (b, bus) in buses.iter().enumerate() {
        if b == t.root {
            continue;
        }
        let Some(parent) = t.parent_branch[b] else { continue };
        let inflow = branch_pu(parent);
        for p in bus.phases.iter() {
            let k = p.index();
            let v = sol.voltages[b][k];
            let vm = v.norm();
            let mut s = Complex64::new(0.0, 0.0);
            for load in feeder.loads().iter().filter(|l| l.bus == bus.id && l.phase == p) {
                let nominal = Complex64::new(load.p_kw, load.q_kvar) / BASE_KVA * load_scale;
                s += nominal * (load.zip.z * vm * vm + load.zip.i * vm + load.zip.p);
            }
            for cap in feeder.capacitors().iter().filter(|c| c.bus == bus.id && c.phases.contains(p)) {
                s -= Complex64::new(0.0, cap.kvar_per_phase / BASE_KVA * vm * vm);
            }
            s -= injections.at(b)[k] / BASE_KVA;
            let shunt = (s / v).conj();
            let outflow: Complex64 = t.children[b]
                .iter()
                .map(|&c| branch_pu(c)[k] * feeder.branches()[c].tap)
                .sum();
            worst = worst.max((inflow[k] - shunt - outflow).norm());
        }
    }
    worst
}
