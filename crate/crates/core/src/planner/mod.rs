//! Run orchestration: configuration, optimisation runs, what-if evaluation
//! and the exported artifacts.

mod config;
mod output;

use std::path::{Path, PathBuf};

use num_bigint::BigUint;

use crate::encoding::{scientific, search_space_size, PlacementPlan};
use crate::feeder::{parse_feeder, Feeder, FeederError};
use crate::nsga2::{evolve, EvolveError, EvolveResult, Problem};
use crate::parallel::{self, Execution};
use crate::profiles::{load_profiles, BatterySchedule, PlanEvaluator, ProfileError, ProfileKind, Profiles, YearlyEvaluation};

pub use config::RunConfig;
pub use output::{format_evaluation, pareto_csv, pareto_json, progress_log};

#[derive(Debug, thiserror::Error)]
pub enum PlannerError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Feeder { path: PathBuf, source: FeederError },
    #[error("{}: {source}", path.display())]
    Profile { path: PathBuf, source: ProfileError },
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Evaluation(String),
}

impl PlannerError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PlannerError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 3 for evaluator failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PlannerError::Evaluation(_) => 3,
            _ => 2,
        }
    }
}

/// A configuration with its feeder, profiles and dispatch loaded.
#[derive(Debug, Clone)]
pub struct Study {
    pub config: RunConfig,
    pub feeder: Feeder,
    pub profiles: Profiles,
    pub schedule: BatterySchedule,
    candidates: Vec<String>,
}

fn read(path: &Path) -> Result<String, PlannerError> {
    std::fs::read_to_string(path).map_err(|e| PlannerError::io(path, e))
}

impl Study {
    pub fn load(config_path: &Path) -> Result<Self, PlannerError> {
        Self::from_config(RunConfig::load(config_path)?)
    }

    pub fn from_config(config: RunConfig) -> Result<Self, PlannerError> {
        let feeder = parse_feeder(&read(&config.feeder)?).map_err(|source| PlannerError::Feeder {
            path: config.feeder.clone(),
            source,
        })?;
        let profile = |path: &Path, label: &str, kind| {
            load_profiles(&read(path)?, label, kind).map_err(|source| PlannerError::Profile {
                path: path.to_path_buf(),
                source,
            })
        };
        let profiles = Profiles {
            load: profile(&config.load_profile, "load", ProfileKind::Load)?,
            pv: profile(&config.pv_profile, "pv", ProfileKind::Pv)?,
        };
        let schedule = profiles
            .battery_schedule()
            .map_err(|e| PlannerError::Input(format!("cannot build storage dispatch: {e}")))?;
        let candidates = feeder.candidate_nodes();
        config
            .layout
            .check_candidates(candidates.len())
            .map_err(|e| PlannerError::Input(format!("{}: {e}", config.feeder.display())))?;
        Ok(Study {
            config,
            feeder,
            profiles,
            schedule,
            candidates,
        })
    }

    /// Candidate bus ids; plan site indices point into this list.
    pub fn candidates(&self) -> &[String] {
        &self.candidates
    }

    pub fn evaluator(&self) -> Result<PlanEvaluator<'_>, PlannerError> {
        PlanEvaluator::new(
            &self.feeder,
            self.profiles.clone(),
            self.schedule,
            self.config.horizon_hours,
            self.config.soc,
        )
        .map_err(|e| PlannerError::Input(e.to_string()))
    }

    pub fn problem(&self) -> Problem {
        Problem {
            layout: self.config.layout,
            candidates: self.candidates.len(),
            sizes: self.config.sizes,
        }
    }

    pub fn site_ids(&self, plan: &PlacementPlan) -> Vec<&str> {
        plan.sites.iter().map(|&s| self.candidates[s].as_str()).collect()
    }

    /// Resolves bus ids to candidate indices.
    pub fn plan_from_ids(&self, sites: &[&str], sizes_kwh: &[u32]) -> Result<PlacementPlan, PlannerError> {
        if sites.len() != sizes_kwh.len() {
            return Err(PlannerError::Input(format!(
                "plan has {} sites but {} sizes",
                sites.len(),
                sizes_kwh.len()
            )));
        }
        let mut idx = Vec::with_capacity(sites.len());
        for &id in sites {
            let i = match self.candidates.binary_search_by(|c| c.as_str().cmp(id)) {
                Ok(i) => i,
                Err(_) if self.feeder.bus(id).is_some() => {
                    return Err(PlannerError::Input(format!("bus `{id}` is not a three-phase candidate node")))
                }
                Err(_) => return Err(PlannerError::Input(format!("unknown site `{id}`"))),
            };
            if idx.contains(&i) {
                return Err(PlannerError::Input(format!("site `{id}` is listed twice")));
            }
            idx.push(i);
        }
        Ok(PlacementPlan {
            sites: idx,
            sizes_kwh: sizes_kwh.to_vec(),
        }
        .canonical())
    }
}

/// Command-line overrides for an optimisation run.
#[derive(Debug, Clone, Default)]
pub struct OptimizeOptions {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub execution: Option<Execution>,
}

#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub result: EvolveResult,
    pub output_dir: PathBuf,
}

/// Runs the optimiser and writes `pareto.csv`, `pareto.json` and
/// `progress.log` to the output directory.
pub fn run_optimize(study: &Study, opts: &OptimizeOptions) -> Result<OptimizeReport, PlannerError> {
    let mut ga = study.config.ga;
    if let Some(seed) = opts.seed {
        ga.seed = seed;
    }
    if let Some(execution) = opts.execution {
        ga.execution = execution;
    }
    if opts.threads == Some(0) {
        return Err(PlannerError::Input("--threads must be at least 1".into()));
    }
    let evaluator = study.evaluator()?;
    let problem = study.problem();
    let result = parallel::with_threads(opts.threads, || evolve(&ga, problem, &evaluator))
        .map_err(|e| PlannerError::Input(e.to_string()))?
        .map_err(|e| match e {
            EvolveError::Evaluation { .. } => PlannerError::Evaluation(e.to_string()),
            other => PlannerError::Input(other.to_string()),
        })?;

    let dir = opts.out.clone().unwrap_or_else(|| study.config.output_dir.clone());
    std::fs::create_dir_all(&dir).map_err(|e| PlannerError::io(&dir, e))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| PlannerError::io(&path, e))
    };
    write("pareto.csv", pareto_csv(study, &result.archive))?;
    write("pareto.json", pareto_json(study, &result.archive))?;
    write("progress.log", progress_log(&result.history))?;
    Ok(OptimizeReport { result, output_dir: dir })
}

/// Where `evaluate` reads its plan from.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanSource {
    /// `site_1,..,site_k,size_1,..,size_k[,avg_loss_kw,avg_vdev_pu]`.
    Row(String),
    /// A `pareto.csv` file and a 1-based data row.
    File { path: PathBuf, row: usize },
}

impl PlanSource {
    /// A value naming an existing file is read as a file, anything else as
    /// a row.
    pub fn from_arg(arg: &str, row: usize) -> Self {
        let path = Path::new(arg);
        if path.is_file() {
            PlanSource::File {
                path: path.to_path_buf(),
                row,
            }
        } else {
            PlanSource::Row(arg.to_string())
        }
    }
}

fn parse_row(study: &Study, row: &str, units: usize) -> Result<PlacementPlan, PlannerError> {
    let fields: Vec<&str> = row.split(',').map(str::trim).collect();
    if fields.len() != 2 * units && fields.len() != 2 * units + 2 {
        return Err(PlannerError::Input(format!(
            "plan row `{row}` needs {units} sites and {units} sizes"
        )));
    }
    let sizes = fields[units..2 * units]
        .iter()
        .map(|s| {
            s.parse::<u32>()
                .map_err(|_| PlannerError::Input(format!("size `{s}` is not a whole number of kWh")))
        })
        .collect::<Result<Vec<u32>, _>>()?;
    study.plan_from_ids(&fields[..units], &sizes)
}

pub fn read_plan(study: &Study, source: &PlanSource) -> Result<PlacementPlan, PlannerError> {
    match source {
        PlanSource::Row(row) => parse_row(study, row, study.config.layout.units),
        PlanSource::File { path, row } => {
            let text = read(path)?;
            let mut lines = text.lines().filter(|l| !l.trim().is_empty());
            let header = lines.next().ok_or_else(|| PlannerError::Input(format!("{} is empty", path.display())))?;
            let (units, first) = if header.starts_with("site_1") {
                (header.split(',').filter(|c| c.trim().starts_with("site_")).count(), None)
            } else {
                (study.config.layout.units, Some(header))
            };
            let line = first
                .into_iter()
                .chain(lines)
                .nth(row.checked_sub(1).ok_or_else(|| PlannerError::Input("rows are numbered from 1".into()))?)
                .ok_or_else(|| PlannerError::Input(format!("{} has no row {row}", path.display())))?;
            parse_row(study, line, units)
        }
    }
}

pub fn run_evaluate(study: &Study, plan: &PlacementPlan) -> Result<YearlyEvaluation, PlannerError> {
    let evaluator = study.evaluator()?;
    evaluator.evaluate(plan).map_err(|e| PlannerError::Evaluation(e.to_string()))
}

/// Exact `C(n, k)` and its three-digit scientific form.
pub fn run_count(n: u64, k: u64) -> Result<(BigUint, String), PlannerError> {
    let exact = search_space_size(n, k).map_err(|_| PlannerError::Input(format!("cannot choose {k} of {n} nodes")))?;
    let sci = scientific(&exact, 3);
    Ok((exact, sci))
}
