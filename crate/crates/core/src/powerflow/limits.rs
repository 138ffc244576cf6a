use serde::Serialize;

use super::{PowerFlowSolution, BASE_KVA};
use crate::feeder::Feeder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Voltage,
    LineLoading,
    Generation,
    Soc,
}

/// Excess of a quantity beyond its bound. `magnitude` is in pu for voltage
/// and state of charge, kVA for loading and generation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitViolation {
    pub kind: ViolationKind,
    pub magnitude: f64,
    pub location: String,
}

/// Voltage, branch loading and source generation limits of one snapshot.
///
/// Generation is measured as `sign(P) * |S|` at the source so that reverse
/// flow can be bounded by a negative `s_min_kva`.
pub fn check_limits(feeder: &Feeder, sol: &PowerFlowSolution) -> Vec<LimitViolation> {
    let mut out = Vec::new();
    for (bus, v) in feeder.buses().iter().zip(&sol.voltages) {
        for p in bus.phases.iter() {
            let vm = v[p.index()].norm();
            let excess = if vm < bus.v_min {
                bus.v_min - vm
            } else if vm > bus.v_max {
                vm - bus.v_max
            } else {
                continue;
            };
            out.push(LimitViolation {
                kind: ViolationKind::Voltage,
                magnitude: excess,
                location: format!("{}.{}", bus.id, p),
            });
        }
    }

    let t = feeder.traversal();
    for (e, br) in feeder.branches().iter().enumerate() {
        let (from, to) = (t.branch_from[e], t.branch_to[e]);
        let to_base_kv = feeder.buses()[to].base_kv;
        for p in feeder.buses()[to].phases.iter() {
            let k = p.index();
            // |V_from| * |tap * J| on the sending side, converted to kVA
            let current_pu = sol.branch_currents[e][k].norm() * to_base_kv / BASE_KVA;
            let kva = sol.voltages[from][k].norm() * br.tap * current_pu * BASE_KVA;
            if kva > br.ampacity_kva {
                out.push(LimitViolation {
                    kind: ViolationKind::LineLoading,
                    magnitude: kva - br.ampacity_kva,
                    location: format!("{}.{}", br.id, p),
                });
            }
        }
    }

    let src = feeder.source();
    let s = sol.source_power;
    let generation = s.norm().copysign(s.re);
    let excess = if generation > src.s_max_kva {
        generation - src.s_max_kva
    } else if generation < src.s_min_kva {
        src.s_min_kva - generation
    } else {
        0.0
    };
    if excess > 0.0 {
        out.push(LimitViolation {
            kind: ViolationKind::Generation,
            magnitude: excess,
            location: src.bus.clone(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::feeder::parse_feeder;

    fn feeder() -> Feeder {
        parse_feeder(
            "[source]
bus=s, voltage_pu=1.0, s_min_kva=-50, s_max_kva=500
[bus]
id=s, phases=A, base_kv=1.0, v_min=0.95, v_max=1.05
id=r, phases=A, base_kv=1.0, v_min=0.95, v_max=1.05
[branch]
from=s, to=r, r=0.1, x=0, ampacity_kva=100
",
        )
        .unwrap()
    }

    fn solution(v_r: f64, current_a: f64, source_kva: Complex64) -> PowerFlowSolution {
        let c = |m: f64| [Complex64::new(m, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        PowerFlowSolution {
            voltages: vec![c(1.0), c(v_r)],
            branch_currents: vec![c(current_a)],
            branch_loss_kw: vec![0.0],
            source_power: source_kva,
            served_load: source_kva,
            total_loss_kw: 0.0,
            converged: true,
            iterations: 1,
            max_voltage_change: 0.0,
        }
    }

    #[test]
    fn within_bounds_is_clean() {
        let f = feeder();
        assert!(check_limits(&f, &solution(0.97, 50.0, Complex64::new(50.0, 0.0))).is_empty());
    }

    #[test]
    fn undervoltage_excess() {
        let f = feeder();
        let v = check_limits(&f, &solution(0.93, 10.0, Complex64::new(10.0, 0.0)));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Voltage);
        assert!((v[0].magnitude - 0.02).abs() < 1e-12);
        assert_eq!(v[0].location, "r.A");
    }

    #[test]
    fn overloaded_branch_excess() {
        let f = feeder();
        // 110 A at 1 kV on the sending side is 110 kVA
        let v = check_limits(&f, &solution(1.0, 110.0, Complex64::new(110.0, 0.0)));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::LineLoading);
        assert!((v[0].magnitude - 10.0).abs() < 1e-9);
    }

    #[test]
    fn reverse_flow_below_minimum() {
        let f = feeder();
        let v = check_limits(&f, &solution(1.0, 10.0, Complex64::new(-80.0, 0.0)));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Generation);
        assert!((v[0].magnitude - 30.0).abs() < 1e-12);
    }
}
