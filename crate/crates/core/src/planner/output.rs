use std::fmt::Write as _;

use serde::Serialize;

use super::Study;
use crate::nsga2::{GenerationStats, ParetoArchive};
use crate::profiles::YearlyEvaluation;

/// One row per archive entry. Floats use the shortest text that parses
/// back to the same value.
pub fn pareto_csv(study: &Study, archive: &ParetoArchive) -> String {
    let k = study.config.layout.units;
    let mut header: Vec<String> = (1..=k).map(|i| format!("site_{i}")).collect();
    header.extend((1..=k).map(|i| format!("size_kwh_{i}")));
    header.push("avg_loss_kw".into());
    header.push("avg_vdev_pu".into());
    let mut out = header.join(",");
    out.push('\n');
    for e in archive.entries() {
        let mut fields: Vec<String> = study.site_ids(&e.plan).iter().map(|s| s.to_string()).collect();
        fields.extend(e.plan.sizes_kwh.iter().map(u32::to_string));
        fields.push(e.evaluation.avg_loss_kw.to_string());
        fields.push(e.evaluation.avg_voltage_dev_pu.to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct JsonEntry<'a> {
    sites: Vec<&'a str>,
    sizes_kwh: &'a [u32],
    avg_loss_kw: f64,
    avg_vdev_pu: f64,
    constraint_violation: f64,
}

pub fn pareto_json(study: &Study, archive: &ParetoArchive) -> String {
    let rows: Vec<JsonEntry> = archive
        .entries()
        .iter()
        .map(|e| JsonEntry {
            sites: study.site_ids(&e.plan),
            sizes_kwh: &e.plan.sizes_kwh,
            avg_loss_kw: e.evaluation.avg_loss_kw,
            avg_vdev_pu: e.evaluation.avg_voltage_dev_pu,
            constraint_violation: e.evaluation.constraint_violation,
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).expect("plain data serialises");
    s.push('\n');
    s
}

pub fn progress_log(history: &[GenerationStats]) -> String {
    let mut out = String::from("# gen front0 best_f1 best_f2 min_violation\n");
    for h in history {
        out.push_str(&h.log_line());
        out.push('\n');
    }
    out
}

/// Two-column table of the objectives and the violation breakdown.
pub fn format_evaluation(ev: &YearlyEvaluation) -> String {
    let b = &ev.breakdown;
    let rows: [(&str, String); 9] = [
        ("avg_loss_kw", ev.avg_loss_kw.to_string()),
        ("avg_vdev_pu", ev.avg_voltage_dev_pu.to_string()),
        ("constraint_violation", ev.constraint_violation.to_string()),
        ("  voltage_pu", b.voltage.to_string()),
        ("  line_loading_kva", b.line_loading.to_string()),
        ("  generation_kva", b.generation.to_string()),
        ("  soc", b.soc.to_string()),
        ("  divergence", b.divergence.to_string()),
        ("  diverged_hours", b.diverged_hours.to_string()),
    ];
    let mut out = String::new();
    for (name, value) in rows {
        let _ = writeln!(out, "{name:<22}{value}");
    }
    out
}
