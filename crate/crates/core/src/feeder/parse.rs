//! Text format for feeders.
//!
//! ```text
//! # comments start with '#'
//! [source]
//! bus=n0, voltage_pu=1.0, s_min_kva=-5000, s_max_kva=5000
//! [bus]
//! id=n0, phases=ABC, base_kv=2.4018, v_min=0.95, v_max=1.05
//! id=n1, phases=ABC, base_kv=2.4018
//! [branch]
//! id=l1, from=n0, to=n1, r=0.3 0.1 0.1 0.3 0.1 0.3, x=0.6, ampacity_kva=800, tap=1.0
//! [load]
//! bus=n1, phase=A, p_kw=40, q_kvar=20, zip=0.2 0.3 0.5
//! [capacitor]
//! bus=n1, phases=ABC, kvar=50
//! [pv]
//! bus=n1, rating_kva=500, pmax_kw=450
//! ```
//!
//! One record per line, fields `key=value` separated by commas. Sections may
//! appear in any order and more than once; `[source]` holds exactly one record.
//! Branch phases are those of the receiving bus. `r` and `x` take either a
//! single value (same uncoupled impedance on every phase) or the upper
//! triangle of the symmetric phase matrix, row-major over the carried phases
//! in A, B, C order (3 values for two phases, 6 for three). Defaults:
//! `v_min=0.95`, `v_max=1.05`, `tap=1`, `zip=0 0 1`, branch `id=<from>-<to>`.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{
    Branch, Bus, Capacitor, Feeder, FeederData, FeederError, Impedance, Load, Phase, PhaseSet, PvUnit, Source,
    ZipWeights,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Source,
    Bus,
    Branch,
    Load,
    Capacitor,
    Pv,
}

impl Section {
    fn from_name(name: &str) -> Option<Section> {
        Some(match name {
            "source" => Section::Source,
            "bus" => Section::Bus,
            "branch" => Section::Branch,
            "load" => Section::Load,
            "capacitor" => Section::Capacitor,
            "pv" => Section::Pv,
            _ => return None,
        })
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Section::Source => &["bus", "voltage_pu", "s_min_kva", "s_max_kva"],
            Section::Bus => &["id", "phases", "base_kv", "v_min", "v_max"],
            Section::Branch => &["id", "from", "to", "r", "x", "ampacity_kva", "tap"],
            Section::Load => &["bus", "phase", "p_kw", "q_kvar", "zip"],
            Section::Capacitor => &["bus", "phases", "kvar"],
            Section::Pv => &["bus", "rating_kva", "pmax_kw"],
        }
    }
}

struct Field<'a> {
    value: &'a str,
    column: usize,
}

struct Record<'a> {
    line: usize,
    /// Column of the first field, used when a required key is missing.
    column: usize,
    fields: HashMap<&'a str, Field<'a>>,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> FeederError {
    FeederError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

impl<'a> Record<'a> {
    fn str(&self, key: &str) -> Result<&'a str, FeederError> {
        self.fields
            .get(key)
            .map(|f| f.value)
            .ok_or_else(|| syntax(self.line, self.column, format!("missing field `{key}`")))
    }

    fn opt_str(&self, key: &str) -> Option<&'a str> {
        self.fields.get(key).map(|f| f.value)
    }

    fn column_of(&self, key: &str) -> usize {
        self.fields.get(key).map_or(self.column, |f| f.column)
    }

    fn num(&self, key: &str) -> Result<f64, FeederError> {
        let raw = self.str(key)?;
        raw.parse::<f64>()
            .map_err(|_| syntax(self.line, self.column_of(key), format!("`{key}` is not a number: `{raw}`")))
    }

    fn opt_num(&self, key: &str, default: f64) -> Result<f64, FeederError> {
        if self.fields.contains_key(key) {
            self.num(key)
        } else {
            Ok(default)
        }
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, FeederError> {
        let raw = self.str(key)?;
        raw.split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| syntax(self.line, self.column_of(key), format!("`{key}` has a non-numeric entry `{tok}`")))
            })
            .collect()
    }

    fn phases(&self, key: &str) -> Result<PhaseSet, FeederError> {
        let raw = self.str(key)?;
        PhaseSet::parse(raw)
            .ok_or_else(|| syntax(self.line, self.column_of(key), format!("`{key}` is not a phase set: `{raw}`")))
    }
}

fn tokenize_record(text: &str, line: usize, section: Section) -> Result<Record<'_>, FeederError> {
    let mut fields = HashMap::new();
    let mut offset = 0;
    let mut first_column = None;
    for part in text.split(',') {
        let lead = part.len() - part.trim_start().len();
        let column = text[..offset + lead].chars().count() + 1;
        offset += part.len() + 1;
        let part = part.trim();
        first_column.get_or_insert(column);
        let Some((key, value)) = part.split_once('=') else {
            return Err(syntax(line, column, format!("expected key=value, found `{part}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(syntax(line, column, format!("expected key=value, found `{part}`")));
        }
        if !section.keys().contains(&key) {
            return Err(syntax(line, column, format!("unknown field `{key}`")));
        }
        if fields.insert(key, Field { value, column }).is_some() {
            return Err(syntax(line, column, format!("duplicate field `{key}`")));
        }
    }
    Ok(Record {
        line,
        column: first_column.unwrap_or(1),
        fields,
    })
}

struct PendingBranch {
    line: usize,
    r_column: usize,
    x_column: usize,
    id: String,
    from: String,
    to: String,
    r: Vec<f64>,
    x: Vec<f64>,
    ampacity_kva: f64,
    tap: f64,
}

fn expand_matrix(values: &[f64], phases: PhaseSet) -> Option<[[f64; 3]; 3]> {
    let carried: Vec<usize> = phases.iter().map(Phase::index).collect();
    let n = carried.len();
    let mut m = [[0.0; 3]; 3];
    if values.len() == 1 {
        for &i in &carried {
            m[i][i] = values[0];
        }
        return Some(m);
    }
    if values.len() != n * (n + 1) / 2 {
        return None;
    }
    let mut it = values.iter();
    for a in 0..n {
        for b in a..n {
            let v = *it.next()?;
            m[carried[a]][carried[b]] = v;
            m[carried[b]][carried[a]] = v;
        }
    }
    Some(m)
}

/// Parses and validates a feeder file.
pub fn parse_feeder(text: &str) -> Result<Feeder, FeederError> {
    let mut data = FeederData::default();
    let mut pending = Vec::new();
    let mut section: Option<Section> = None;
    let mut source_line = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let lead = content.len() - content.trim_start().len();
        let column = content[..lead].chars().count() + 1;
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| syntax(line, column, "unterminated section header"))?
                .trim();
            section = Some(
                Section::from_name(name).ok_or_else(|| syntax(line, column, format!("unknown section [{name}]")))?,
            );
            continue;
        }
        let sec = section.ok_or_else(|| syntax(line, column, "record outside of any section"))?;
        let rec = tokenize_record(content, line, sec)?;
        match sec {
            Section::Source => {
                if source_line.is_some() {
                    return Err(syntax(line, rec.column, "only one [source] record is allowed"));
                }
                source_line = Some(line);
                data.source = Some(Source {
                    bus: rec.str("bus")?.to_string(),
                    voltage_pu: rec.num("voltage_pu")?,
                    s_min_kva: rec.num("s_min_kva")?,
                    s_max_kva: rec.num("s_max_kva")?,
                });
            }
            Section::Bus => data.buses.push(Bus {
                id: rec.str("id")?.to_string(),
                phases: rec.phases("phases")?,
                base_kv: rec.num("base_kv")?,
                v_min: rec.opt_num("v_min", 0.95)?,
                v_max: rec.opt_num("v_max", 1.05)?,
            }),
            Section::Branch => {
                let from = rec.str("from")?.to_string();
                let to = rec.str("to")?.to_string();
                pending.push(PendingBranch {
                    line,
                    r_column: rec.column_of("r"),
                    x_column: rec.column_of("x"),
                    id: rec.opt_str("id").map_or_else(|| format!("{from}-{to}"), str::to_string),
                    r: rec.list("r")?,
                    x: rec.list("x")?,
                    ampacity_kva: rec.num("ampacity_kva")?,
                    tap: rec.opt_num("tap", 1.0)?,
                    from,
                    to,
                });
            }
            Section::Load => {
                let phase_raw = rec.str("phase")?;
                let mut chars = phase_raw.chars();
                let phase = match (chars.next().and_then(Phase::from_char), chars.next()) {
                    (Some(p), None) => p,
                    _ => {
                        return Err(syntax(
                            line,
                            rec.column_of("phase"),
                            format!("`phase` must be one of A, B, C: `{phase_raw}`"),
                        ))
                    }
                };
                let zip = match rec.opt_str("zip") {
                    None => ZipWeights::default(),
                    Some(_) => match rec.list("zip")?.as_slice() {
                        &[z, i, p] => ZipWeights { z, i, p },
                        _ => return Err(syntax(line, rec.column_of("zip"), "`zip` needs three fractions")),
                    },
                };
                data.loads.push(Load {
                    bus: rec.str("bus")?.to_string(),
                    phase,
                    p_kw: rec.num("p_kw")?,
                    q_kvar: rec.opt_num("q_kvar", 0.0)?,
                    zip,
                });
            }
            Section::Capacitor => data.capacitors.push(Capacitor {
                bus: rec.str("bus")?.to_string(),
                phases: rec.phases("phases")?,
                kvar_per_phase: rec.num("kvar")?,
            }),
            Section::Pv => data.pv_units.push(PvUnit {
                bus: rec.str("bus")?.to_string(),
                rating_kva: rec.num("rating_kva")?,
                pmax_kw: rec.num("pmax_kw")?,
            }),
        }
    }

    // Branch phases come from the receiving bus, so matrices are expanded
    // once all buses are known.
    let phases_of: HashMap<&str, PhaseSet> = data.buses.iter().map(|b| (b.id.as_str(), b.phases)).collect();
    let mut branches = Vec::with_capacity(pending.len());
    for pb in pending {
        let Some(&phases) = phases_of.get(pb.to.as_str()) else {
            return Err(FeederError::UnknownBus {
                element: format!("branch {}", pb.id),
                bus: pb.to,
            });
        };
        let wrong_len = |column| {
            let n = phases.len();
            syntax(
                pb.line,
                column,
                format!("impedance needs 1 or {} values for phases {}", n * (n + 1) / 2, phases),
            )
        };
        let r = expand_matrix(&pb.r, phases).ok_or_else(|| wrong_len(pb.r_column))?;
        let x = expand_matrix(&pb.x, phases).ok_or_else(|| wrong_len(pb.x_column))?;
        branches.push(Branch {
            id: pb.id,
            from: pb.from,
            to: pb.to,
            impedance: Impedance { r, x },
            ampacity_kva: pb.ampacity_kva,
            tap: pb.tap,
        });
    }
    data.branches = branches;

    Feeder::new(data)
}

fn matrix_text(m: &[[f64; 3]; 3], phases: PhaseSet) -> String {
    let carried: Vec<usize> = phases.iter().map(Phase::index).collect();
    let mut parts = Vec::new();
    for a in 0..carried.len() {
        for b in a..carried.len() {
            parts.push(m[carried[a]][carried[b]].to_string());
        }
    }
    parts.join(" ")
}

pub(super) fn write_feeder(f: &Feeder) -> String {
    let mut out = String::new();
    let s = f.source();
    let _ = writeln!(out, "[source]");
    let _ = writeln!(
        out,
        "bus={}, voltage_pu={}, s_min_kva={}, s_max_kva={}",
        s.bus, s.voltage_pu, s.s_min_kva, s.s_max_kva
    );
    let _ = writeln!(out, "\n[bus]");
    for b in f.buses() {
        let _ = writeln!(
            out,
            "id={}, phases={}, base_kv={}, v_min={}, v_max={}",
            b.id, b.phases, b.base_kv, b.v_min, b.v_max
        );
    }
    let _ = writeln!(out, "\n[branch]");
    for br in f.branches() {
        let phases = f.bus(&br.to).map(|b| b.phases).unwrap_or(PhaseSet::ABC);
        let _ = writeln!(
            out,
            "id={}, from={}, to={}, r={}, x={}, ampacity_kva={}, tap={}",
            br.id,
            br.from,
            br.to,
            matrix_text(&br.impedance.r, phases),
            matrix_text(&br.impedance.x, phases),
            br.ampacity_kva,
            br.tap
        );
    }
    if !f.loads().is_empty() {
        let _ = writeln!(out, "\n[load]");
        for l in f.loads() {
            let _ = writeln!(
                out,
                "bus={}, phase={}, p_kw={}, q_kvar={}, zip={} {} {}",
                l.bus, l.phase, l.p_kw, l.q_kvar, l.zip.z, l.zip.i, l.zip.p
            );
        }
    }
    if !f.capacitors().is_empty() {
        let _ = writeln!(out, "\n[capacitor]");
        for c in f.capacitors() {
            let _ = writeln!(out, "bus={}, phases={}, kvar={}", c.bus, c.phases, c.kvar_per_phase);
        }
    }
    if !f.pv_units().is_empty() {
        let _ = writeln!(out, "\n[pv]");
        for pv in f.pv_units() {
            let _ = writeln!(out, "bus={}, rating_kva={}, pmax_kw={}", pv.bus, pv.rating_kva, pv.pmax_kw);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = "\
[source]
bus=n0, voltage_pu=1.0, s_min_kva=-100, s_max_kva=100
[bus]
id=n0, phases=A, base_kv=2.4
id=n1, phases=A, base_kv=2.4
[branch]
from=n0, to=n1, r=1, x=0, ampacity_kva=100
[load]
bus=n1, phase=A, p_kw=10
";

    #[test]
    fn minimal_two_bus_file() {
        let f = parse_feeder(TWO_BUS).unwrap();
        assert_eq!(f.buses().len(), 2);
        assert_eq!(f.branches().len(), 1);
        assert_eq!(f.branches()[0].id, "n0-n1");
        assert_eq!(f.loads()[0].zip, ZipWeights::default());
    }

    #[test]
    fn self_loop_reports_cycle() {
        let text = TWO_BUS.replace("from=n0, to=n1", "from=n1, to=n1");
        let err = parse_feeder(&text).unwrap_err();
        assert!(err.to_string().contains("cycle detected"), "{err}");
    }

    #[test]
    fn unknown_section_is_rejected_with_position() {
        let text = format!("{TWO_BUS}\n  [transformer]\n");
        match parse_feeder(&text).unwrap_err() {
            FeederError::Syntax { line, column, message } => {
                assert_eq!(line, 11);
                assert_eq!(column, 3);
                assert!(message.contains("unknown section"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_column() {
        let text = TWO_BUS.replace("p_kw=10", "p_kw=ten");
        match parse_feeder(&text).unwrap_err() {
            FeederError::Syntax { line, column, .. } => {
                assert_eq!(line, 9);
                assert_eq!(column, 18);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_and_missing_field() {
        let text = TWO_BUS.replace("p_kw=10", "p_kw=10, colour=red");
        assert!(parse_feeder(&text).unwrap_err().to_string().contains("unknown field `colour`"));
        let text = TWO_BUS.replace("base_kv=2.4\nid=n1", "base_kv=2.4\nid=n1, phases=A\nid=n2");
        assert!(parse_feeder(&text).is_err());
    }

    #[test]
    fn dangling_bus_is_named() {
        let text = TWO_BUS.replace("bus=n1, phase=A", "bus=n9, phase=A");
        let err = parse_feeder(&text).unwrap_err();
        assert!(matches!(err, FeederError::UnknownBus { ref bus, .. } if bus == "n9"), "{err}");
    }

    #[test]
    fn coupled_matrix_expansion() {
        let text = "\
[source]
bus=s, voltage_pu=1.0, s_min_kva=-1, s_max_kva=1
[bus]
id=s, phases=ABC, base_kv=2.4
id=t, phases=AC, base_kv=2.4
[branch]
from=s, to=t, r=0.3 0.1 0.4, x=0.5, ampacity_kva=10
";
        let f = parse_feeder(text).unwrap();
        let z = f.branches()[0].impedance;
        assert_eq!(z.r[0][0], 0.3);
        assert_eq!(z.r[0][2], 0.1);
        assert_eq!(z.r[2][0], 0.1);
        assert_eq!(z.r[2][2], 0.4);
        assert_eq!(z.r[1][1], 0.0);
        assert_eq!(z.x[2][2], 0.5);
        assert_eq!(parse_feeder(&f.to_text()).unwrap(), f);

        let bad = text.replace("r=0.3 0.1 0.4", "r=0.3 0.1");
        assert!(parse_feeder(&bad).unwrap_err().to_string().contains("impedance needs 1 or 3 values"));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{}", TWO_BUS.replace("p_kw=10", "p_kw=10   # inline"));
        assert!(parse_feeder(&text).is_ok());
    }

    #[test]
    fn second_source_is_rejected() {
        let text = TWO_BUS.replace(
            "s_max_kva=100\n",
            "s_max_kva=100\nbus=n1, voltage_pu=1.0, s_min_kva=-100, s_max_kva=100\n",
        );
        assert!(parse_feeder(&text).unwrap_err().to_string().contains("only one [source]"));
    }
}
