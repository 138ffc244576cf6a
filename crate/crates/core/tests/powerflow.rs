mod common;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use siting_core::feeder::parse_feeder;
use siting_core::powerflow::{
    analytic_pv_loss, kcl_residual, power_balance_residual_kw, solve_snapshot, InjectionSet, PvLossInputs,
};

fn two_bus(p_kw: f64, q_kvar: f64, r: f64, x: f64) -> siting_core::feeder::Feeder {
    parse_feeder(&format!(
        "[source]\nbus=s, voltage_pu=1.0, s_min_kva=-1e6, s_max_kva=1e6\n\
         [bus]\nid=s, phases=A, base_kv=2.4\nid=r, phases=A, base_kv=2.4\n\
         [branch]\nfrom=s, to=r, r={r}, x={x}, ampacity_kva=1e6\n\
         [load]\nbus=r, phase=A, p_kw={p_kw}, q_kvar={q_kvar}\n"
    ))
    .unwrap()
}

#[test]
fn two_bus_matches_quartic_solution() {
    // |V|^4 + (2(RP + XQ) - Vs^2)|V|^2 + (R^2 + X^2)(P^2 + Q^2) = 0
    let zb = 2.4f64 * 2.4 * 1000.0 / 100.0;
    for (p, q, r, x) in [(50.0, 20.0, 0.5, 0.9), (120.0, 0.0, 1.0, 0.0), (10.0, 30.0, 0.2, 2.0)] {
        let f = two_bus(p, q, r, x);
        let sol = solve_snapshot(&f, &InjectionSet::new(&f), 1.0).unwrap();
        let (pp, qp, rp, xp) = (p / 100.0, q / 100.0, r / zb, x / zb);
        let b = 2.0 * (rp * pp + xp * qp) - 1.0;
        let cc = (rp * rp + xp * xp) * (pp * pp + qp * qp);
        let v2 = ((-b + (b * b - 4.0 * cc).sqrt()) / 2.0).sqrt();
        assert!((sol.voltages[1][0].norm() - v2).abs() < 1e-6);
    }
}

#[test]
fn sweep_agrees_with_nodal_oracle_on_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..25 {
        let n = 2 + case % 9;
        let f = common::random_tree(&mut rng, n);
        let inj = common::random_injections(&mut rng, &f);
        let sol = solve_snapshot(&f, &inj, 1.0).unwrap();
        assert!(sol.converged, "case {case}");
        let oracle = common::nodal_oracle(&f, &inj, 1.0).expect("oracle converges");
        for (b, bus) in f.buses().iter().enumerate() {
            for p in bus.phases.iter() {
                let d = (sol.voltages[b][p.index()] - oracle[b][p.index()]).norm();
                assert!(d < 1e-6, "case {case} bus {} phase {p}: {d:e}", bus.id);
            }
        }
        assert!(kcl_residual(&f, &sol, &inj, 1.0) < 1e-8);
        assert!(power_balance_residual_kw(&sol).abs() < 1e-6);
    }
}

#[test]
fn bundled_feeders_satisfy_kcl_and_balance() {
    for (name, f) in common::bundled_feeders() {
        for (scale, irradiance) in [(0.4, 0.0), (1.0, 0.0), (0.8, 0.9)] {
            let mut inj = InjectionSet::new(&f);
            for pv in f.pv_units() {
                inj.add_balanced(&f, &pv.bus, pv.pmax_kw * irradiance).unwrap();
            }
            let sol = solve_snapshot(&f, &inj, scale).unwrap();
            assert!(sol.converged, "{name}");
            assert!(kcl_residual(&f, &sol, &inj, scale) < 1e-8, "{name}");
            assert!(power_balance_residual_kw(&sol).abs() < 1e-6, "{name}");
        }
    }
}

#[test]
fn unity_pf_pv_loss_tracks_the_sweep() {
    for (p, q, ppv) in [(30.0, 10.0, 20.0), (60.0, 25.0, 0.0), (45.0, 5.0, 60.0)] {
        let r = 0.4;
        let f = two_bus(p, q, r, 0.3);
        let mut inj = InjectionSet::new(&f);
        inj.add(&f, "r", siting_core::feeder::Phase::A, Complex64::new(ppv, 0.0)).unwrap();
        let sol = solve_snapshot(&f, &inj, 1.0).unwrap();
        let analytic = analytic_pv_loss(PvLossInputs {
            p_kw: p,
            q_kvar: q,
            v_pu: 1.0,
            base_kv: 2.4,
            r_ohm: r,
            p_pv_kw: ppv,
            q_pv_kvar: 0.0,
            g_over_l: 1.0,
        })
        .unwrap();
        let rel = (analytic - sol.total_loss_kw).abs() / sol.total_loss_kw;
        assert!(rel < 0.02, "p={p} q={q} pv={ppv}: rel {rel}");
    }
}

#[test]
fn debug_table_lists_every_bus_phase() {
    let f = two_bus(10.0, 0.0, 0.1, 0.1);
    let sol = solve_snapshot(&f, &InjectionSet::new(&f), 1.0).unwrap();
    let table = sol.debug_table(&f);
    assert_eq!(table.lines().filter(|l| l.starts_with("bus ")).count(), 2);
    assert_eq!(table.lines().filter(|l| l.starts_with("branch ")).count(), 1);
    assert!(table.lines().last().unwrap().starts_with("loss_kw "));
}
