#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use siting_core::feeder::{
    parse_feeder, Branch, Bus, Capacitor, Feeder, FeederData, Impedance, Load, Phase, PhaseSet, Source, ZipWeights,
};
use siting_core::powerflow::{InjectionSet, BASE_KVA};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn bundled_feeders() -> Vec<(&'static str, Feeder)> {
    ["toy10.feeder", "feeder123.feeder"]
        .into_iter()
        .map(|name| {
            let text = std::fs::read_to_string(data_path(name)).unwrap();
            (name, parse_feeder(&text).unwrap())
        })
        .collect()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Node voltages by dense nodal analysis.
///
/// Builds the full bus admittance matrix from the feeder records, with each
/// tapped branch as the two-port `[t²Y, -tY; -tY, Y]`, and iterates
/// `V_n = Y_nn⁻¹ (-I(V_n) - Y_ns V_s)` on the shunt currents until the update
/// is below 1e-13 pu.
pub fn nodal_oracle(feeder: &Feeder, injections: &InjectionSet, load_scale: f64) -> Option<Vec<[Complex64; 3]>> {
    let buses = feeder.buses();
    let src = feeder.bus_index(&feeder.source().bus).unwrap();
    let mut node_of = vec![[usize::MAX; 3]; buses.len()];
    let mut nodes = Vec::new();
    for (b, bus) in buses.iter().enumerate() {
        for p in bus.phases.iter() {
            node_of[b][p.index()] = nodes.len();
            nodes.push((b, p.index()));
        }
    }
    let n = nodes.len();
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for br in feeder.branches() {
        let f = feeder.bus_index(&br.from).unwrap();
        let t = feeder.bus_index(&br.to).unwrap();
        let phases: Vec<usize> = buses[t].phases.iter().map(|p| p.index()).collect();
        let zb = buses[t].base_kv.powi(2) * 1000.0 / BASE_KVA;
        let m = phases.len();
        let z = DMatrix::from_fn(m, m, |i, k| c(br.impedance.r[phases[i]][phases[k]], br.impedance.x[phases[i]][phases[k]]) / zb);
        let yl = z.try_inverse()?;
        let tap = br.tap;
        for i in 0..m {
            for k in 0..m {
                let (fi, fk) = (node_of[f][phases[i]], node_of[f][phases[k]]);
                let (ti, tk) = (node_of[t][phases[i]], node_of[t][phases[k]]);
                y[(fi, fk)] += yl[(i, k)] * tap * tap;
                y[(fi, tk)] -= yl[(i, k)] * tap;
                y[(ti, fk)] -= yl[(i, k)] * tap;
                y[(ti, tk)] += yl[(i, k)];
            }
        }
    }

    let free: Vec<usize> = (0..n).filter(|&i| nodes[i].0 != src).collect();
    let fixed: Vec<usize> = (0..n).filter(|&i| nodes[i].0 == src).collect();
    let vs = feeder.source().voltage_pu;
    let v_fixed: Vec<Complex64> = fixed
        .iter()
        .map(|&i| Complex64::from_polar(vs, -2.0 * std::f64::consts::PI / 3.0 * nodes[i].1 as f64))
        .collect();
    let ynn = DMatrix::from_fn(free.len(), free.len(), |i, k| y[(free[i], free[k])]);
    let yns = DMatrix::from_fn(free.len(), fixed.len(), |i, k| y[(free[i], fixed[k])]);
    let lu = ynn.lu();
    let rhs_src = &yns * nalgebra::DVector::from_vec(v_fixed.clone());

    // consumption of each free node at voltage v, pu
    let demand = |node: usize, v: Complex64| -> Complex64 {
        let (b, k) = nodes[node];
        let vm = v.norm();
        let mut s = c(0.0, 0.0);
        for l in feeder.loads().iter().filter(|l| l.bus == buses[b].id && l.phase.index() == k) {
            let s0 = c(l.p_kw, l.q_kvar) / BASE_KVA * load_scale;
            s += s0 * (l.zip.z * vm * vm + l.zip.i * vm + l.zip.p);
        }
        for cap in feeder.capacitors().iter().filter(|cp| cp.bus == buses[b].id) {
            if cap.phases.iter().any(|p| p.index() == k) {
                s -= c(0.0, cap.kvar_per_phase / BASE_KVA * vm * vm);
            }
        }
        s - injections.at(b)[k] / BASE_KVA
    };

    let mut v: Vec<Complex64> = free
        .iter()
        .map(|&i| Complex64::from_polar(vs, -2.0 * std::f64::consts::PI / 3.0 * nodes[i].1 as f64))
        .collect();
    for _ in 0..500 {
        let current = nalgebra::DVector::from_iterator(
            free.len(),
            free.iter().zip(&v).map(|(&node, &vi)| -(demand(node, vi) / vi).conj()),
        );
        let next = lu.solve(&(current - &rhs_src))?;
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        v = next.iter().copied().collect();
        if change < 1e-13 {
            let mut out = vec![[c(0.0, 0.0); 3]; buses.len()];
            for (&i, &vi) in fixed.iter().zip(&v_fixed) {
                out[nodes[i].0][nodes[i].1] = vi;
            }
            for (&i, &vi) in free.iter().zip(&v) {
                out[nodes[i].0][nodes[i].1] = vi;
            }
            return Some(out);
        }
        if !change.is_finite() {
            return None;
        }
    }
    None
}

fn random_impedance<R: Rng>(rng: &mut R, phases: PhaseSet) -> Impedance {
    let mut imp = Impedance::diagonal(phases, 0.0, 0.0);
    let idx: Vec<usize> = phases.iter().map(|p| p.index()).collect();
    for &i in &idx {
        imp.r[i][i] = rng.gen_range(0.05..0.5);
        imp.x[i][i] = rng.gen_range(0.05..0.8);
    }
    for (a, &i) in idx.iter().enumerate() {
        for &k in &idx[a + 1..] {
            let r = rng.gen_range(0.0..0.25) * imp.r[i][i].min(imp.r[k][k]);
            let x = rng.gen_range(0.0..0.35) * imp.x[i][i].min(imp.x[k][k]);
            imp.r[i][k] = r;
            imp.r[k][i] = r;
            imp.x[i][k] = x;
            imp.x[k][i] = x;
        }
    }
    imp
}

fn random_subset<R: Rng>(rng: &mut R, of: PhaseSet) -> PhaseSet {
    loop {
        let mut s = PhaseSet::empty();
        for p in of.iter() {
            if rng.gen_bool(0.6) {
                s = s.with(p);
            }
        }
        if !s.is_empty() {
            return s;
        }
    }
}

/// Random radial feeder with `n` buses, mixed phasing, taps, ZIP loads and
/// capacitors, lightly loaded.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> Feeder {
    let mut data = FeederData {
        source: Some(Source {
            bus: "b0".into(),
            voltage_pu: rng.gen_range(0.98..1.04),
            s_min_kva: -1e6,
            s_max_kva: 1e6,
        }),
        ..FeederData::default()
    };
    let base_kv = 2.4018;
    let bus = |id: String, phases| Bus {
        id,
        phases,
        base_kv,
        v_min: 0.5,
        v_max: 1.5,
    };
    data.buses.push(bus("b0".into(), PhaseSet::ABC));
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        let pph = data.buses[parent].phases;
        let phases = if rng.gen_bool(0.5) { pph } else { random_subset(rng, pph) };
        let id = format!("b{i}");
        data.buses.push(bus(id.clone(), phases));
        data.branches.push(Branch {
            id: format!("l{i}"),
            from: format!("b{parent}"),
            to: id.clone(),
            impedance: random_impedance(rng, phases),
            ampacity_kva: 1e6,
            tap: if rng.gen_bool(0.2) { rng.gen_range(0.97..1.03) } else { 1.0 },
        });
        for p in phases.iter() {
            if rng.gen_bool(0.8) {
                let z = rng.gen_range(0.0..0.5);
                let ii = rng.gen_range(0.0..(1.0 - z));
                data.loads.push(Load {
                    bus: id.clone(),
                    phase: p,
                    p_kw: rng.gen_range(1.0..40.0),
                    q_kvar: rng.gen_range(0.0..15.0),
                    zip: ZipWeights { z, i: ii, p: 1.0 - z - ii },
                });
            }
        }
        if rng.gen_bool(0.15) {
            data.capacitors.push(Capacitor {
                bus: id,
                phases,
                kvar_per_phase: rng.gen_range(5.0..30.0),
            });
        }
    }
    Feeder::new(data).unwrap()
}

/// Random generation on some bus-phases of `feeder`.
pub fn random_injections<R: Rng>(rng: &mut R, feeder: &Feeder) -> InjectionSet {
    let mut inj = InjectionSet::new(feeder);
    for bus in feeder.buses().iter().skip(1) {
        for p in bus.phases.iter() {
            if rng.gen_bool(0.25) {
                let kva = Complex64::new(rng.gen_range(0.0..30.0), rng.gen_range(-5.0..5.0));
                inj.add(feeder, &bus.id, p, kva).unwrap();
            }
        }
    }
    inj
}

pub fn phase_of(k: usize) -> Phase {
    Phase::ALL[k]
}
