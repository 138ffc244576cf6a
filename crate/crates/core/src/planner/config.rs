use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::PlannerError;
use crate::encoding::{Layout, SizeRange};
use crate::nsga2::GaConfig;
use crate::parallel::Execution;
use crate::profiles::SocLimits;

/// Run configuration, read from a TOML file:
///
/// ```toml
/// [feeder]
/// path = "toy10.feeder"        # relative to this file
///
/// [profiles]
/// load = "day.load"
/// pv = "day.pv"
///
/// [storage]
/// units = 2
/// site_bits = 3
/// size_bits = 2
/// size_min_kwh = 100           # optional, default 100
/// size_max_kwh = 1000          # optional, default 1000
/// soc_min = 0.0                # optional
/// soc_max = 1.0                # optional
///
/// [simulation]
/// horizon_hours = 24           # optional, default 168
///
/// [ga]                         # every key optional
/// population = 50
/// generations = 80
/// crossover_rate = 0.9
/// seed = 1
///
/// [output]
/// dir = "out"
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub feeder: PathBuf,
    pub load_profile: PathBuf,
    pub pv_profile: PathBuf,
    pub layout: Layout,
    pub sizes: SizeRange,
    pub soc: SocLimits,
    pub horizon_hours: usize,
    pub ga: GaConfig,
    pub output_dir: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    feeder: RawFeeder,
    profiles: RawProfiles,
    storage: RawStorage,
    #[serde(default)]
    simulation: RawSimulation,
    #[serde(default)]
    ga: RawGa,
    output: RawOutput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFeeder {
    path: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfiles {
    load: PathBuf,
    pv: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStorage {
    units: usize,
    site_bits: usize,
    size_bits: usize,
    #[serde(default = "default_min_kwh")]
    size_min_kwh: u32,
    #[serde(default = "default_max_kwh")]
    size_max_kwh: u32,
    #[serde(default)]
    soc_min: Option<f64>,
    #[serde(default)]
    soc_max: Option<f64>,
}

fn default_min_kwh() -> u32 {
    SizeRange::default().min_kwh
}

fn default_max_kwh() -> u32 {
    SizeRange::default().max_kwh
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    #[serde(default = "default_horizon")]
    horizon_hours: usize,
}

impl Default for RawSimulation {
    fn default() -> Self {
        RawSimulation {
            horizon_hours: default_horizon(),
        }
    }
}

fn default_horizon() -> usize {
    168
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGa {
    population: Option<usize>,
    generations: Option<usize>,
    crossover_rate: Option<f64>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PlannerError> {
        let text = std::fs::read_to_string(path).map_err(|e| PlannerError::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
            .map_err(|message| PlannerError::Config {
                path: path.to_path_buf(),
                message,
            })
    }

    /// Parses config text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, String> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let layout = Layout::new(raw.storage.units, raw.storage.site_bits, raw.storage.size_bits)
            .map_err(|e| e.to_string())?;
        let sizes = SizeRange::new(raw.storage.size_min_kwh, raw.storage.size_max_kwh).map_err(|e| e.to_string())?;
        let d = SocLimits::default();
        let soc = SocLimits::new(raw.storage.soc_min.unwrap_or(d.soc_min), raw.storage.soc_max.unwrap_or(d.soc_max))
            .map_err(|e| e.to_string())?;
        let g = GaConfig::default();
        let ga = GaConfig {
            population_size: raw.ga.population.unwrap_or(g.population_size),
            generations: raw.ga.generations.unwrap_or(g.generations),
            crossover_rate: raw.ga.crossover_rate.unwrap_or(g.crossover_rate),
            seed: raw.ga.seed.unwrap_or(g.seed),
            execution: Execution::default(),
        };
        ga.validate().map_err(|e| e.to_string())?;
        let horizon_hours = raw.simulation.horizon_hours;
        if horizon_hours == 0 || !horizon_hours.is_multiple_of(24) {
            return Err(format!("horizon_hours must be a positive multiple of 24, got {horizon_hours}"));
        }
        Ok(RunConfig {
            feeder: resolve(raw.feeder.path),
            load_profile: resolve(raw.profiles.load),
            pv_profile: resolve(raw.profiles.pv),
            layout,
            sizes,
            soc,
            horizon_hours,
            ga,
            output_dir: resolve(raw.output.dir),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[feeder]
path = "f.feeder"
[profiles]
load = "l.txt"
pv = "/abs/p.txt"
[storage]
units = 2
site_bits = 3
size_bits = 2
[output]
dir = "out"
"#;

    #[test]
    fn defaults_and_relative_paths() {
        let cfg = RunConfig::parse(MINIMAL, Path::new("/cfg")).unwrap();
        assert_eq!(cfg.feeder, PathBuf::from("/cfg/f.feeder"));
        assert_eq!(cfg.pv_profile, PathBuf::from("/abs/p.txt"));
        assert_eq!(cfg.horizon_hours, 168);
        assert_eq!(cfg.ga.population_size, 50);
        assert_eq!(cfg.ga.generations, 80);
        assert_eq!(cfg.sizes, SizeRange::default());
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        let extra = MINIMAL.replace("units = 2", "units = 2\ncolour = 3");
        assert!(RunConfig::parse(&extra, Path::new(".")).unwrap_err().contains("colour"));
        let horizon = format!("{MINIMAL}[simulation]\nhorizon_hours = 30\n");
        assert!(RunConfig::parse(&horizon, Path::new(".")).is_err());
        let pop = format!("{MINIMAL}[ga]\npopulation = 7\n");
        assert!(RunConfig::parse(&pop, Path::new(".")).is_err());
    }
}
