use std::f64::consts::PI;

use num_complex::Complex64;

use super::{InjectionSet, PowerFlowError, PowerFlowSolution, BASE_KVA};
use crate::feeder::{Feeder, Phase, PhaseSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Stop when no bus-phase voltage moves more than this between
    /// iterations, pu.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            tolerance: 1e-8,
            max_iterations: 100,
        }
    }
}

/// Nominal shunt demand of one bus-phase in pu at unit load scale.
#[derive(Debug, Clone, Copy, Default)]
struct Shunt {
    z: Complex64,
    i: Complex64,
    p: Complex64,
    /// Capacitor reactive output at 1 pu voltage.
    cap_q: f64,
}

impl Shunt {
    /// Consumed complex power at voltage magnitude `vm`, pu.
    fn power(&self, vm: f64, load_scale: f64) -> Complex64 {
        (self.z * (vm * vm) + self.i * vm + self.p) * load_scale - Complex64::new(0.0, self.cap_q * vm * vm)
    }
}

/// Backward/forward sweep solver with the feeder's per-unit network
/// precomputed. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct SweepSolver<'f> {
    feeder: &'f Feeder,
    options: SweepOptions,
    z_pu: Vec<[[Complex64; 3]; 3]>,
    carried: Vec<PhaseSet>,
    shunts: Vec<[Shunt; 3]>,
    i_base: Vec<f64>,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl<'f> SweepSolver<'f> {
    pub fn new(feeder: &'f Feeder) -> Self {
        Self::with_options(feeder, SweepOptions::default())
    }

    pub fn with_options(feeder: &'f Feeder, options: SweepOptions) -> Self {
        let buses = feeder.buses();
        let t = feeder.traversal();
        let z_base: Vec<f64> = buses.iter().map(|b| b.base_kv * b.base_kv * 1000.0 / BASE_KVA).collect();
        let z_pu = feeder
            .branches()
            .iter()
            .enumerate()
            .map(|(e, br)| {
                let zb = z_base[t.branch_to[e]];
                let mut m = [[zero(); 3]; 3];
                for (i, row) in m.iter_mut().enumerate() {
                    for (k, cell) in row.iter_mut().enumerate() {
                        *cell = Complex64::new(br.impedance.r[i][k], br.impedance.x[i][k]) / zb;
                    }
                }
                m
            })
            .collect();
        let carried = t.branch_to.iter().map(|&to| buses[to].phases).collect();

        let mut shunts = vec![[Shunt::default(); 3]; buses.len()];
        for load in feeder.loads() {
            let b = feeder.bus_index(&load.bus).expect("validated feeder");
            let s = Complex64::new(load.p_kw, load.q_kvar) / BASE_KVA;
            let sh = &mut shunts[b][load.phase.index()];
            sh.z += s * load.zip.z;
            sh.i += s * load.zip.i;
            sh.p += s * load.zip.p;
        }
        for cap in feeder.capacitors() {
            let b = feeder.bus_index(&cap.bus).expect("validated feeder");
            for p in cap.phases.iter() {
                shunts[b][p.index()].cap_q += cap.kvar_per_phase / BASE_KVA;
            }
        }
        let i_base = buses.iter().map(|b| BASE_KVA / b.base_kv).collect();

        SweepSolver {
            feeder,
            options,
            z_pu,
            carried,
            shunts,
            i_base,
        }
    }

    pub fn feeder(&self) -> &'f Feeder {
        self.feeder
    }

    pub fn options(&self) -> SweepOptions {
        self.options
    }

    fn source_voltage(&self) -> [Complex64; 3] {
        let vs = self.feeder.source().voltage_pu;
        let mut out = [zero(); 3];
        let root_phases = self.feeder.buses()[self.feeder.source_index()].phases;
        for p in Phase::ALL {
            if root_phases.contains(p) {
                let angle = -2.0 * PI / 3.0 * p.index() as f64;
                out[p.index()] = Complex64::from_polar(vs, angle);
            }
        }
        out
    }

    fn shunt_power(&self, bus: usize, k: usize, v: Complex64, inj: &InjectionSet, load_scale: f64) -> Complex64 {
        self.shunts[bus][k].power(v.norm(), load_scale) - inj.at(bus)[k] / BASE_KVA
    }

    /// Leaf-to-root pass: branch currents from shunt currents at `v`.
    fn backward(&self, v: &[[Complex64; 3]], inj: &InjectionSet, load_scale: f64, j: &mut [[Complex64; 3]]) {
        let t = self.feeder.traversal();
        let branches = self.feeder.branches();
        for &e in t.order.iter().rev() {
            let to = t.branch_to[e];
            let mut current = [zero(); 3];
            for p in self.carried[e].iter() {
                let k = p.index();
                let s = self.shunt_power(to, k, v[to][k], inj, load_scale);
                let mut c = (s / v[to][k]).conj();
                for &child in &t.children[to] {
                    c += j[child][k] * branches[child].tap;
                }
                current[k] = c;
            }
            j[e] = current;
        }
    }

    /// Root-to-leaf pass; returns the largest voltage update.
    fn forward(&self, v: &mut [[Complex64; 3]], j: &[[Complex64; 3]]) -> f64 {
        let t = self.feeder.traversal();
        let branches = self.feeder.branches();
        let mut change: f64 = 0.0;
        for &e in &t.order {
            let (from, to) = (t.branch_from[e], t.branch_to[e]);
            let tap = branches[e].tap;
            let z = &self.z_pu[e];
            let phases = self.carried[e];
            for p in phases.iter() {
                let k = p.index();
                let mut drop = zero();
                for q in phases.iter() {
                    drop += z[k][q.index()] * j[e][q.index()];
                }
                let updated = v[from][k] * tap - drop;
                let delta = (updated - v[to][k]).norm();
                // NaN must not be swallowed by max()
                change = if delta.is_nan() { f64::NAN } else { change.max(delta) };
                v[to][k] = updated;
            }
        }
        change
    }

    /// Solves one snapshot with loads multiplied by `load_scale`.
    ///
    /// Non-convergence is reported through [`PowerFlowSolution::converged`],
    /// not as an error.
    pub fn solve(&self, inj: &InjectionSet, load_scale: f64) -> Result<PowerFlowSolution, PowerFlowError> {
        if !(load_scale.is_finite() && load_scale >= 0.0) {
            return Err(PowerFlowError::InvalidLoadScale(load_scale));
        }
        let feeder = self.feeder;
        let t = feeder.traversal();
        let branches = feeder.branches();
        let nb = feeder.buses().len();
        let root = t.root;

        let mut v = vec![[zero(); 3]; nb];
        v[root] = self.source_voltage();
        for &e in &t.order {
            let (from, to) = (t.branch_from[e], t.branch_to[e]);
            for p in self.carried[e].iter() {
                v[to][p.index()] = v[from][p.index()] * branches[e].tap;
            }
        }
        let mut j = vec![[zero(); 3]; branches.len()];

        let mut converged = false;
        let mut iterations = 0;
        let mut change = f64::INFINITY;
        while iterations < self.options.max_iterations {
            iterations += 1;
            self.backward(&v, inj, load_scale, &mut j);
            change = self.forward(&mut v, &j);
            if !change.is_finite() {
                break;
            }
            if change < self.options.tolerance {
                converged = true;
                break;
            }
        }
        // currents consistent with the final voltages
        self.backward(&v, inj, load_scale, &mut j);

        let mut source_current = [zero(); 3];
        for p in feeder.buses()[root].phases.iter() {
            let k = p.index();
            let s = self.shunt_power(root, k, v[root][k], inj, load_scale);
            let mut c = (s / v[root][k]).conj();
            for &child in &t.children[root] {
                c += j[child][k] * branches[child].tap;
            }
            source_current[k] = c;
        }
        let source_power: Complex64 = (0..3).map(|k| v[root][k] * source_current[k].conj()).sum::<Complex64>() * BASE_KVA;

        let mut served = zero();
        for (b, bus) in feeder.buses().iter().enumerate() {
            for p in bus.phases.iter() {
                served += self.shunt_power(b, p.index(), v[b][p.index()], inj, load_scale);
            }
        }

        let branch_loss_kw: Vec<f64> = (0..branches.len())
            .map(|e| {
                let z = &self.z_pu[e];
                let phases = self.carried[e];
                let mut s = zero();
                for p in phases.iter() {
                    let mut zj = zero();
                    for q in phases.iter() {
                        zj += z[p.index()][q.index()] * j[e][q.index()];
                    }
                    s += j[e][p.index()].conj() * zj;
                }
                s.re * BASE_KVA
            })
            .collect();
        let total_loss_kw = branch_loss_kw.iter().sum();

        let branch_currents = j
            .iter()
            .enumerate()
            .map(|(e, c)| c.map(|x| x * self.i_base[t.branch_to[e]]))
            .collect();

        let finite = v.iter().flatten().all(|c| c.re.is_finite() && c.im.is_finite());
        Ok(PowerFlowSolution {
            voltages: v,
            branch_currents,
            branch_loss_kw,
            source_power,
            served_load: served * BASE_KVA,
            total_loss_kw,
            converged: converged && finite,
            iterations,
            max_voltage_change: change,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feeder::parse_feeder;
    use crate::powerflow::{power_balance_residual_kw, solve_snapshot, total_loss};

    fn two_bus(p_kw: f64, r: f64, zip: &str) -> Feeder {
        parse_feeder(&format!(
            "[source]
bus=s, voltage_pu=1.0, s_min_kva=-1000, s_max_kva=1000
[bus]
id=s, phases=A, base_kv=1.0
id=r, phases=A, base_kv=1.0
[branch]
from=s, to=r, r={r}, x=0, ampacity_kva=1000
[load]
bus=r, phase=A, p_kw={p_kw}, zip={zip}
"
        ))
        .unwrap()
    }

    #[test]
    fn no_load_is_flat_and_lossless() {
        let f = two_bus(0.0, 1.0, "0 0 1");
        let sol = solve_snapshot(&f, &InjectionSet::new(&f), 1.0).unwrap();
        assert!(sol.converged);
        for v in sol.voltage_magnitudes(&f) {
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert_eq!(total_loss(&sol).unwrap(), 0.0);
    }

    #[test]
    fn ten_amps_through_one_ohm() {
        // 1 kV source, 9.9 kW unity load: V2 = 990 V, I = 10 A exactly
        let f = two_bus(9.9, 1.0, "0 0 1");
        let sol = solve_snapshot(&f, &InjectionSet::new(&f), 1.0).unwrap();
        assert!(sol.converged);
        assert!((sol.branch_currents[0][0].norm() - 10.0).abs() < 1e-6);
        assert!((total_loss(&sol).unwrap() - 0.1).abs() < 1e-9);
        assert!(power_balance_residual_kw(&sol).abs() < 1e-9);
    }

    #[test]
    fn zero_load_scale_has_zero_loss() {
        let f = two_bus(50.0, 2.0, "0.3 0.3 0.4");
        let sol = solve_snapshot(&f, &InjectionSet::new(&f), 0.0).unwrap();
        assert_eq!(sol.total_loss_kw, 0.0);
    }

    #[test]
    fn diverged_solution_is_flagged_not_raised() {
        // far beyond the nose of the PV curve
        let f = two_bus(5000.0, 1.0, "0 0 1");
        let sol = solve_snapshot(&f, &InjectionSet::new(&f), 1.0).unwrap();
        assert!(!sol.converged);
        assert!(total_loss(&sol).is_err());
    }

    #[test]
    fn negative_load_scale_is_rejected() {
        let f = two_bus(1.0, 1.0, "0 0 1");
        assert!(solve_snapshot(&f, &InjectionSet::new(&f), -1.0).is_err());
    }
}
