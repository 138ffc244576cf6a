//! Radial distribution feeder model.
//!
//! A [`Feeder`] is built once (usually by [`parse_feeder`]) and is immutable
//! afterwards, so it can be shared freely between evaluation workers.

mod parse;
mod topology;

use std::collections::HashMap;
use std::fmt;

pub use parse::parse_feeder;
pub use topology::{validate_radial, Traversal};

/// One of the three conductors of a feeder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_char(c: char) -> Option<Phase> {
        match c.to_ascii_uppercase() {
            'A' => Some(Phase::A),
            'B' => Some(Phase::B),
            'C' => Some(Phase::C),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Phase::A => 'A',
            Phase::B => 'B',
            Phase::C => 'C',
        };
        write!(f, "{c}")
    }
}

/// Subset of {A, B, C}, stored as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PhaseSet(u8);

impl PhaseSet {
    pub const ABC: PhaseSet = PhaseSet(0b111);

    pub fn empty() -> Self {
        PhaseSet(0)
    }

    pub fn single(p: Phase) -> Self {
        PhaseSet(1 << p.index())
    }

    pub fn with(self, p: Phase) -> Self {
        PhaseSet(self.0 | (1 << p.index()))
    }

    pub fn contains(self, p: Phase) -> bool {
        self.0 & (1 << p.index()) != 0
    }

    pub fn is_subset_of(self, other: PhaseSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_three_phase(self) -> bool {
        self == PhaseSet::ABC
    }

    pub fn iter(self) -> impl Iterator<Item = Phase> {
        Phase::ALL.into_iter().filter(move |p| self.contains(*p))
    }

    /// Parses a phase string such as `ABC`, `AC` or `b`.
    pub fn parse(s: &str) -> Option<PhaseSet> {
        let mut set = PhaseSet::empty();
        for c in s.chars() {
            let p = Phase::from_char(c)?;
            if set.contains(p) {
                return None;
            }
            set = set.with(p);
        }
        (!set.is_empty()).then_some(set)
    }
}

impl fmt::Display for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.iter() {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
    pub phases: PhaseSet,
    /// Line-to-neutral base voltage in kV.
    pub base_kv: f64,
    pub v_min: f64,
    pub v_max: f64,
}

/// Series impedance of a branch in ohms, indexed by phase (A, B, C).
///
/// Rows and columns of phases the branch does not carry are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impedance {
    pub r: [[f64; 3]; 3],
    pub x: [[f64; 3]; 3],
}

impl Impedance {
    /// Uncoupled impedance with the same `r + jx` on each of `phases`.
    pub fn diagonal(phases: PhaseSet, r: f64, x: f64) -> Self {
        let mut z = Impedance {
            r: [[0.0; 3]; 3],
            x: [[0.0; 3]; 3],
        };
        for p in phases.iter() {
            z.r[p.index()][p.index()] = r;
            z.x[p.index()][p.index()] = x;
        }
        z
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().chain(self.x.iter()).flatten().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: String,
    pub from: String,
    pub to: String,
    pub impedance: Impedance,
    /// Thermal limit per phase, kVA.
    pub ampacity_kva: f64,
    /// Fixed off-nominal ratio of an ideal transformer at the sending end.
    /// `1.0` for plain line segments.
    pub tap: f64,
}

/// Constant-impedance / constant-current / constant-power fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipWeights {
    pub z: f64,
    pub i: f64,
    pub p: f64,
}

impl Default for ZipWeights {
    fn default() -> Self {
        ZipWeights {
            z: 0.0,
            i: 0.0,
            p: 1.0,
        }
    }
}

impl ZipWeights {
    pub fn is_valid(&self) -> bool {
        let parts = [self.z, self.i, self.p];
        parts.iter().all(|w| (0.0..=1.0).contains(w)) && (parts.iter().sum::<f64>() - 1.0).abs() <= 1e-9
    }
}

/// Wye-connected load on one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Load {
    pub bus: String,
    pub phase: Phase,
    pub p_kw: f64,
    pub q_kvar: f64,
    pub zip: ZipWeights,
}

/// Shunt capacitor bank; `kvar_per_phase` is the rating at nominal voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct Capacitor {
    pub bus: String,
    pub phases: PhaseSet,
    pub kvar_per_phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub bus: String,
    pub voltage_pu: f64,
    pub s_min_kva: f64,
    pub s_max_kva: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvUnit {
    pub bus: String,
    pub rating_kva: f64,
    /// Output at full irradiance, kW.
    pub pmax_kw: f64,
}

/// Raw feeder records before validation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeederData {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub loads: Vec<Load>,
    pub capacitors: Vec<Capacitor>,
    pub source: Option<Source>,
    pub pv_units: Vec<PvUnit>,
}

/// A validated radial feeder.
#[derive(Debug, Clone, PartialEq)]
pub struct Feeder {
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    loads: Vec<Load>,
    capacitors: Vec<Capacitor>,
    source: Source,
    pv_units: Vec<PvUnit>,
    bus_index: HashMap<String, usize>,
    traversal: Traversal,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FeederError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{element} references unknown bus `{bus}`")]
    UnknownBus { element: String, bus: String },
    #[error("cycle detected at branch {branch}")]
    CycleDetected { branch: String },
    #[error("not radial: {detail}")]
    NotRadial { detail: String },
    #[error("{element}: {message}")]
    Invalid { element: String, message: String },
    #[error("feeder has no [source] record")]
    MissingSource,
}

fn invalid(element: impl Into<String>, message: impl Into<String>) -> FeederError {
    FeederError::Invalid {
        element: element.into(),
        message: message.into(),
    }
}

impl Feeder {
    /// Validates raw records and builds the feeder.
    pub fn new(data: FeederData) -> Result<Feeder, FeederError> {
        let FeederData {
            buses,
            branches,
            loads,
            capacitors,
            source,
            pv_units,
        } = data;
        let source = source.ok_or(FeederError::MissingSource)?;

        let mut bus_index = HashMap::with_capacity(buses.len());
        for (i, bus) in buses.iter().enumerate() {
            let element = format!("bus {}", bus.id);
            if bus.phases.is_empty() {
                return Err(invalid(element, "phase set is empty"));
            }
            if !(bus.base_kv.is_finite() && bus.base_kv > 0.0) {
                return Err(invalid(element, "base_kv must be positive"));
            }
            if !(bus.v_min > 0.0 && bus.v_min < bus.v_max && bus.v_max.is_finite()) {
                return Err(invalid(element, "voltage bounds must satisfy 0 < v_min < v_max"));
            }
            if bus_index.insert(bus.id.clone(), i).is_some() {
                return Err(FeederError::DuplicateId {
                    kind: "bus",
                    id: bus.id.clone(),
                });
            }
        }

        let lookup = |element: String, bus: &str| -> Result<usize, FeederError> {
            bus_index.get(bus).copied().ok_or(FeederError::UnknownBus {
                element,
                bus: bus.to_string(),
            })
        };

        let mut branch_ids = HashMap::new();
        for branch in &branches {
            let element = format!("branch {}", branch.id);
            if branch_ids.insert(branch.id.clone(), ()).is_some() {
                return Err(FeederError::DuplicateId {
                    kind: "branch",
                    id: branch.id.clone(),
                });
            }
            let from = lookup(element.clone(), &branch.from)?;
            let to = lookup(element.clone(), &branch.to)?;
            if from == to {
                return Err(FeederError::CycleDetected {
                    branch: branch.id.clone(),
                });
            }
            let z = &branch.impedance;
            if !z.is_finite() {
                return Err(invalid(element, "impedance entries must be finite"));
            }
            if (0..3).any(|i| (0..3).any(|j| z.r[i][j] != z.r[j][i] || z.x[i][j] != z.x[j][i])) {
                return Err(invalid(element, "impedance matrix must be symmetric"));
            }
            if (0..3).any(|i| z.r[i][i] < 0.0) {
                return Err(invalid(element, "resistance diagonal must be non-negative"));
            }
            if !(branch.ampacity_kva.is_finite() && branch.ampacity_kva > 0.0) {
                return Err(invalid(element, "ampacity_kva must be positive"));
            }
            if !(branch.tap.is_finite() && branch.tap > 0.0) {
                return Err(invalid(element, "tap must be positive"));
            }
            let carried = buses[to].phases;
            if !carried.is_subset_of(buses[from].phases) {
                return Err(invalid(
                    element,
                    format!(
                        "to-bus phases {} are not a subset of from-bus phases {}",
                        carried, buses[from].phases
                    ),
                ));
            }
            for p in Phase::ALL {
                for q in Phase::ALL {
                    let outside = !carried.contains(p) || !carried.contains(q);
                    if outside && (z.r[p.index()][q.index()] != 0.0 || z.x[p.index()][q.index()] != 0.0) {
                        return Err(invalid(
                            element,
                            format!("impedance entry {p}{q} refers to a phase the branch does not carry"),
                        ));
                    }
                }
            }
        }

        lookup("source".to_string(), &source.bus)?;
        if !(source.voltage_pu > 0.8 && source.voltage_pu < 1.2) {
            return Err(invalid("source", "voltage_pu must lie in (0.8, 1.2)"));
        }
        if source.s_min_kva.partial_cmp(&source.s_max_kva).is_none_or(|o| o.is_gt()) {
            return Err(invalid("source", "s_min_kva must not exceed s_max_kva"));
        }

        for load in &loads {
            let element = format!("load at {}.{}", load.bus, load.phase);
            let b = lookup(element.clone(), &load.bus)?;
            if !buses[b].phases.contains(load.phase) {
                return Err(invalid(element, "bus does not carry this phase"));
            }
            if !(load.p_kw.is_finite() && load.p_kw >= 0.0 && load.q_kvar.is_finite()) {
                return Err(invalid(element, "p_kw must be finite and non-negative"));
            }
            if !load.zip.is_valid() {
                return Err(invalid(element, "zip weights must lie in [0,1] and sum to 1"));
            }
        }
        for cap in &capacitors {
            let element = format!("capacitor at {}", cap.bus);
            let b = lookup(element.clone(), &cap.bus)?;
            if cap.phases.is_empty() || !cap.phases.is_subset_of(buses[b].phases) {
                return Err(invalid(element, "capacitor phases must be carried by its bus"));
            }
            if !cap.kvar_per_phase.is_finite() {
                return Err(invalid(element, "kvar must be finite"));
            }
        }
        for pv in &pv_units {
            let element = format!("pv at {}", pv.bus);
            lookup(element.clone(), &pv.bus)?;
            if !(pv.rating_kva > 0.0 && pv.pmax_kw >= 0.0 && pv.pmax_kw <= pv.rating_kva) {
                return Err(invalid(element, "need rating_kva > 0 and 0 <= pmax_kw <= rating_kva"));
            }
        }

        let traversal = validate_radial(&buses, &branches, &source.bus)?;

        Ok(Feeder {
            buses,
            branches,
            loads,
            capacitors,
            source,
            pv_units,
            bus_index,
            traversal,
        })
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn loads(&self) -> &[Load] {
        &self.loads
    }

    pub fn capacitors(&self) -> &[Capacitor] {
        &self.capacitors
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn pv_units(&self) -> &[PvUnit] {
        &self.pv_units
    }

    /// Breadth-first branch order from the source.
    pub fn traversal(&self) -> &Traversal {
        &self.traversal
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.bus_index.get(id).copied()
    }

    pub fn source_index(&self) -> usize {
        self.traversal.root
    }

    pub fn bus(&self, id: &str) -> Option<&Bus> {
        self.bus_index(id).map(|i| &self.buses[i])
    }

    /// Buses carrying all three phases, excluding the source, sorted by id.
    pub fn candidate_nodes(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .buses
            .iter()
            .filter(|b| b.phases.is_three_phase() && b.id != self.source.bus)
            .map(|b| b.id.clone())
            .collect();
        ids.sort();
        ids
    }

    pub fn into_data(self) -> FeederData {
        FeederData {
            buses: self.buses,
            branches: self.branches,
            loads: self.loads,
            capacitors: self.capacitors,
            source: Some(self.source),
            pv_units: self.pv_units,
        }
    }

    /// Serializes the feeder in the text format accepted by [`parse_feeder`].
    pub fn to_text(&self) -> String {
        parse::write_feeder(self)
    }
}

/// Free-function form of [`Feeder::candidate_nodes`].
pub fn candidate_nodes(feeder: &Feeder) -> Vec<String> {
    feeder.candidate_nodes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_set_parsing() {
        assert_eq!(PhaseSet::parse("ABC"), Some(PhaseSet::ABC));
        assert_eq!(PhaseSet::parse("ca").map(|s| s.to_string()), Some("AC".to_string()));
        assert_eq!(PhaseSet::parse("AA"), None);
        assert_eq!(PhaseSet::parse(""), None);
        assert_eq!(PhaseSet::parse("AD"), None);
    }

    #[test]
    fn zip_weights_must_sum_to_one() {
        assert!(ZipWeights::default().is_valid());
        assert!(ZipWeights { z: 0.3, i: 0.3, p: 0.4 }.is_valid());
        assert!(!ZipWeights { z: 0.5, i: 0.5, p: 0.5 }.is_valid());
        assert!(!ZipWeights { z: -0.1, i: 0.1, p: 1.0 }.is_valid());
    }
}
