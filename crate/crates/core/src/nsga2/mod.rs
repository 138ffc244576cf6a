//! NSGA-II over binary placement chromosomes.
//!
//! Each generation draws parents by binary tournament, applies two-point
//! crossover and segment-wise mutation, and keeps the best `N` of parents
//! and children by constrained non-domination rank and crowding distance.

mod operators;
mod sort;

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::encoding::{decode, Chromosome, EncodingError, Layout, PlacementPlan, SizeRange};
use crate::parallel::{self, Execution};
use crate::profiles::{EvalError, PlanEvaluator, YearlyEvaluation};

pub use operators::{crossover_at, mutate, tournament, two_point_crossover};
pub use sort::{crowding_distance, dominates, fast_nondominated_sort, pareto_dominates, Fitness};

/// Anything that scores placement plans. Must tolerate concurrent calls.
pub trait Evaluator: Sync {
    type Error: fmt::Display;

    fn evaluate(&self, plan: &PlacementPlan) -> Result<YearlyEvaluation, Self::Error>;
}

impl Evaluator for PlanEvaluator<'_> {
    type Error = EvalError;

    fn evaluate(&self, plan: &PlacementPlan) -> Result<YearlyEvaluation, EvalError> {
        PlanEvaluator::evaluate(self, plan)
    }
}

/// Adapts a closure into an [`Evaluator`].
pub struct FnEvaluator<F>(pub F);

impl<F, E> Evaluator for FnEvaluator<F>
where
    F: Fn(&PlacementPlan) -> Result<YearlyEvaluation, E> + Sync,
    E: fmt::Display,
{
    type Error = E;

    fn evaluate(&self, plan: &PlacementPlan) -> Result<YearlyEvaluation, E> {
        (self.0)(plan)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 50,
            generations: 80,
            crossover_rate: 0.9,
            seed: 1,
            execution: Execution::default(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        if self.population_size < 4 || !self.population_size.is_multiple_of(2) {
            return Err(EvolveError::Config(format!(
                "population size must be even and at least 4, got {}",
                self.population_size
            )));
        }
        if self.generations == 0 {
            return Err(EvolveError::Config("at least one generation is required".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(EvolveError::Config(format!(
                "crossover rate must lie in [0, 1], got {}",
                self.crossover_rate
            )));
        }
        Ok(())
    }
}

/// Search space seen by the optimiser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem {
    pub layout: Layout,
    pub candidates: usize,
    pub sizes: SizeRange,
}

#[derive(Debug, thiserror::Error)]
pub enum EvolveError {
    #[error("invalid GA configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error("evaluation failed in generation {generation} for chromosome {chromosome}: {message}")]
    Evaluation {
        generation: usize,
        chromosome: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub plan: PlacementPlan,
    pub evaluation: YearlyEvaluation,
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    pub fn fitness(&self) -> Fitness {
        Fitness {
            objectives: self.evaluation.objectives(),
            violation: self.evaluation.constraint_violation,
        }
    }
}

/// Population summary after one generation.
///
/// `best_f1`, `best_f2` and `min_violation` are taken over the whole
/// population; `front` holds the objective points of the feasible
/// non-dominated members.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub front0_size: usize,
    pub best_f1: f64,
    pub best_f2: f64,
    pub min_violation: f64,
    pub front: Vec<[f64; 2]>,
}

impl GenerationStats {
    /// Progress line: `gen=<g> front0=<n> best_f1=<kW> best_f2=<pu> min_violation=<v>`.
    pub fn log_line(&self) -> String {
        format!(
            "gen={} front0={} best_f1={} best_f2={} min_violation={}",
            self.generation, self.front0_size, self.best_f1, self.best_f2, self.min_violation
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchiveEntry {
    pub plan: PlacementPlan,
    pub evaluation: YearlyEvaluation,
}

/// Feasible, mutually non-dominated plans, sorted by the first objective.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ParetoArchive {
    entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    /// Keeps the feasible non-dominated subset of `candidates`, dropping
    /// duplicate plans.
    pub fn from_candidates(candidates: impl IntoIterator<Item = ArchiveEntry>) -> Self {
        let mut seen = HashSet::new();
        let pool: Vec<ArchiveEntry> = candidates
            .into_iter()
            .filter(|e| e.evaluation.is_feasible() && seen.insert(e.plan.clone()))
            .collect();
        let mut entries: Vec<ArchiveEntry> = pool
            .iter()
            .filter(|e| {
                !pool
                    .iter()
                    .any(|o| pareto_dominates(&o.evaluation.objectives(), &e.evaluation.objectives()))
            })
            .cloned()
            .collect();
        entries.sort_by(|a, b| {
            let (fa, fb) = (a.evaluation.objectives(), b.evaluation.objectives());
            fa[0].total_cmp(&fb[0]).then(fa[1].total_cmp(&fb[1])).then(a.plan.cmp(&b.plan))
        });
        ParetoArchive { entries }
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.entries.iter().map(|e| e.evaluation.objectives()).collect()
    }

    /// Pairwise audit: true when no entry dominates another.
    pub fn is_mutually_nondominated(&self) -> bool {
        let pts = self.points();
        pts.iter()
            .all(|a| pts.iter().all(|b| !pareto_dominates(a, b)))
    }
}

#[derive(Debug, Clone)]
pub struct EvolveResult {
    pub archive: ParetoArchive,
    pub history: Vec<GenerationStats>,
    pub population: Vec<Individual>,
    /// Distinct plans sent to the evaluator.
    pub evaluations: usize,
}

/// Area dominated by `points` and bounded by `reference`, both minimised.
/// Points not strictly better than the reference in both objectives add
/// nothing.
pub fn hypervolume_2d(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}

struct Engine<'a, E: Evaluator> {
    cfg: GaConfig,
    problem: Problem,
    evaluator: &'a E,
    cache: HashMap<PlacementPlan, YearlyEvaluation>,
    rng: ChaCha8Rng,
}

impl<E: Evaluator> Engine<'_, E> {
    fn score(&mut self, generation: usize, chromosomes: Vec<Chromosome>) -> Result<Vec<Individual>, EvolveError> {
        // decoding draws from the run RNG, so it stays sequential
        let mut plans = Vec::with_capacity(chromosomes.len());
        for c in &chromosomes {
            plans.push(decode(c, self.problem.candidates, self.problem.sizes, &mut self.rng)?);
        }
        let mut pending: Vec<(usize, PlacementPlan)> = Vec::new();
        let mut queued = HashSet::new();
        for (i, p) in plans.iter().enumerate() {
            if !self.cache.contains_key(p) && queued.insert(p.clone()) {
                pending.push((i, p.clone()));
            }
        }
        let evaluator = self.evaluator;
        let results = parallel::map(self.cfg.execution, &pending, |(_, p)| {
            evaluator.evaluate(p).map_err(|e| e.to_string())
        });
        for ((i, plan), result) in pending.into_iter().zip(results) {
            let evaluation = result.map_err(|message| EvolveError::Evaluation {
                generation,
                chromosome: chromosomes[i].to_hex(),
                message,
            })?;
            self.cache.insert(plan, evaluation);
        }
        Ok(chromosomes
            .into_iter()
            .zip(plans)
            .map(|(chromosome, plan)| Individual {
                evaluation: self.cache[&plan],
                chromosome,
                plan,
                rank: 0,
                crowding: 0.0,
            })
            .collect())
    }

    fn offspring(&mut self, parents: &[Individual]) -> Vec<Chromosome> {
        let ranks: Vec<usize> = parents.iter().map(|p| p.rank).collect();
        let crowding: Vec<f64> = parents.iter().map(|p| p.crowding).collect();
        let mut children = Vec::with_capacity(self.cfg.population_size);
        while children.len() < self.cfg.population_size {
            let a = &parents[tournament(&ranks, &crowding, &mut self.rng)].chromosome;
            let b = &parents[tournament(&ranks, &crowding, &mut self.rng)].chromosome;
            let (c1, c2) = if rand::Rng::gen_bool(&mut self.rng, self.cfg.crossover_rate) {
                two_point_crossover(a, b, &mut self.rng)
            } else {
                (a.clone(), b.clone())
            };
            children.push(mutate(&c1, &mut self.rng));
            children.push(mutate(&c2, &mut self.rng));
        }
        children
    }
}

/// Assigns rank and crowding in place.
fn rank_population(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let fitness: Vec<Fitness> = pop.iter().map(Individual::fitness).collect();
    let fronts = fast_nondominated_sort(&fitness);
    for (r, front) in fronts.iter().enumerate() {
        let d = crowding_distance(&fitness, front);
        for (&i, di) in front.iter().zip(d) {
            pop[i].rank = r;
            pop[i].crowding = di;
        }
    }
    fronts
}

/// Best `n` of `combined` by rank, then crowding. Within the front that
/// overflows, members repeating an objective point already kept go last.
fn truncate(mut combined: Vec<Individual>, n: usize) -> Vec<Individual> {
    let fronts = rank_population(&mut combined);
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for front in fronts {
        if keep.len() + front.len() <= n {
            keep.extend(front);
            continue;
        }
        let mut seen: HashSet<[u64; 2]> = keep
            .iter()
            .map(|&i| combined[i].evaluation.objectives().map(f64::to_bits))
            .collect();
        let mut order: Vec<(bool, usize)> = Vec::with_capacity(front.len());
        let mut by_crowding = front.clone();
        by_crowding.sort_by(|&a, &b| combined[b].crowding.total_cmp(&combined[a].crowding).then(a.cmp(&b)));
        for i in by_crowding {
            let repeat = !seen.insert(combined[i].evaluation.objectives().map(f64::to_bits));
            order.push((repeat, i));
        }
        // stable: fresh points first, each group still by crowding
        order.sort_by_key(|&(repeat, _)| repeat);
        keep.extend(order.into_iter().take(n - keep.len()).map(|(_, i)| i));
        break;
    }
    keep.sort_unstable();
    let mut slots: Vec<Option<Individual>> = combined.into_iter().map(Some).collect();
    let mut survivors: Vec<Individual> = keep.into_iter().map(|i| slots[i].take().expect("unique index")).collect();
    rank_population(&mut survivors);
    survivors
}

fn stats(generation: usize, pop: &[Individual]) -> GenerationStats {
    let front0_size = pop.iter().filter(|i| i.rank == 0).count();
    let mut front: Vec<[f64; 2]> = ParetoArchive::from_candidates(pop.iter().filter(|i| i.rank == 0).map(|i| ArchiveEntry {
        plan: i.plan.clone(),
        evaluation: i.evaluation,
    }))
    .points();
    front.dedup();
    let min = |f: &dyn Fn(&Individual) -> f64| pop.iter().map(f).fold(f64::INFINITY, f64::min);
    GenerationStats {
        generation,
        front0_size,
        best_f1: min(&|i| i.evaluation.avg_loss_kw),
        best_f2: min(&|i| i.evaluation.avg_voltage_dev_pu),
        min_violation: min(&|i| i.evaluation.constraint_violation),
        front,
    }
}

/// Runs NSGA-II. The same configuration and seed give the same result
/// regardless of execution mode or thread count.
pub fn evolve<E: Evaluator>(cfg: &GaConfig, problem: Problem, evaluator: &E) -> Result<EvolveResult, EvolveError> {
    cfg.validate()?;
    problem.layout.validate()?;
    problem.layout.check_candidates(problem.candidates)?;
    let mut engine = Engine {
        cfg: *cfg,
        problem,
        evaluator,
        cache: HashMap::new(),
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };

    let initial: Vec<Chromosome> = (0..cfg.population_size)
        .map(|_| Chromosome::random(problem.layout, &mut engine.rng))
        .collect();
    let mut population = engine.score(0, initial)?;
    rank_population(&mut population);
    let mut history = vec![stats(0, &population)];

    for generation in 1..=cfg.generations {
        let children = engine.offspring(&population);
        let children = engine.score(generation, children)?;
        let mut combined = population;
        combined.extend(children);
        population = truncate(combined, cfg.population_size);
        history.push(stats(generation, &population));
    }

    let archive = ParetoArchive::from_candidates(population.iter().filter(|i| i.rank == 0).map(|i| ArchiveEntry {
        plan: i.plan.clone(),
        evaluation: i.evaluation,
    }));
    Ok(EvolveResult {
        archive,
        history,
        population,
        evaluations: engine.cache.len(),
    })
}
