//! Reference methods for benchmarking the surrogate-assisted flow:
//!
//! * (i) trust-region optimization started from an unscaled candidate;
//! * (ii) a real-coded evolutionary algorithm whose initial population is
//!   resized by the classifier;
//! * (iii) the same evolutionary algorithm on the unscaled population.
//!
//! [`run_benchmark`] runs all of them next to the full flow and produces
//! rows with per-method evaluation counts.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{classify_curve, default_c_range, CandidateRecord, DesignDatabase};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{
    build_layout, make_bounds, random_design, scale_design, Bounds, DesignVector, FixedParams,
};
use crate::pipeline::{
    band_objective, classifier_spec, fit_scaling, generation_settings, run_with,
};
use crate::scaling::ScalingModel;
use crate::simbackend::{CostModel, EvalCount, Fidelity, FrequencyGrid, ResponseCurve, Simulator};
use crate::troptim::{
    bi_stage_optimize, normalized_distance, BiStageOptions, BiStageReport, HingeObjective,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EaConfig {
    /// `None` means twice the problem dimension.
    pub population_size: Option<usize>,
    pub max_iterations: usize,
    /// Expected number of mutated genes per offspring.
    pub p_mutation: f64,
    pub p_crossover: f64,
    pub tournament_size: usize,
    pub elitism: usize,
    /// Stop after this many generations without improvement of the best.
    pub stagnation_window: usize,
    /// Mutation standard deviation as a fraction of each parameter's range.
    pub mutation_scale: f64,
    /// BLX-alpha extension factor.
    pub blend_alpha: f64,
    /// Minimum normalized distance between crossover partners; `None` disables the restriction.
    pub mating_distance: Option<f64>,
    /// Cap on fitness evaluations.
    pub max_evaluations: Option<u64>,
    pub seed: u64,
}

impl Default for EaConfig {
    fn default() -> Self {
        Self {
            population_size: None,
            max_iterations: 250,
            p_mutation: 0.5,
            p_crossover: 0.2,
            tournament_size: 2,
            elitism: 2,
            stagnation_window: 100,
            mutation_scale: 0.05,
            blend_alpha: 0.5,
            mating_distance: Some(0.01),
            max_evaluations: None,
            seed: 0,
        }
    }
}

impl EaConfig {
    /// Validates the settings and resolves the population size for `dim`.
    pub fn population_for(&self, dim: usize) -> Result<usize> {
        let n = self.population_size.unwrap_or(2 * dim);
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if n < 2 && !(n == 1 && self.elitism >= 1) {
            return Err(Error::Config(format!("population size {n} is below 2")));
        }
        if !prob(self.p_mutation) || !prob(self.p_crossover) {
            return Err(Error::Config("probabilities must lie in [0, 1]".into()));
        }
        if self.tournament_size == 0 || self.elitism > n {
            return Err(Error::Config(
                "tournament size must be >= 1 and elitism <= population".into(),
            ));
        }
        if !(self.mutation_scale >= 0.0 && self.blend_alpha >= 0.0) {
            return Err(Error::Config("mutation scale and blend factor must be >= 0".into()));
        }
        Ok(n)
    }
}

/// Problem seen by the evolutionary algorithm (minimization).
pub trait EaProblem: Sync {
    fn lower(&self) -> &[f64];
    fn upper(&self) -> &[f64];
    fn fitness(&self, x: &[f64]) -> Result<f64>;
    /// Makes `x` feasible in place; `false` when that is impossible.
    fn repair(&self, x: &mut [f64], _rng: &mut ChaCha8Rng) -> bool {
        clip(x, self.lower(), self.upper());
        true
    }
}

fn clip(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub x: Vec<f64>,
    pub fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    /// Cumulative fitness evaluations.
    pub evaluations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EaTermination {
    MaxIterations,
    Stagnation,
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EaResult {
    pub best: Individual,
    pub history: Vec<GenerationStats>,
    pub evaluations: u64,
    pub termination: EaTermination,
}

fn stats(generation: usize, pop: &[Individual], evaluations: u64) -> GenerationStats {
    GenerationStats {
        generation,
        best: pop[0].fitness,
        mean: pop.iter().map(|i| i.fitness).sum::<f64>() / pop.len() as f64,
        evaluations,
    }
}

fn sort_population(pop: &mut [Individual]) {
    pop.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
}

fn tournament<'a>(pop: &'a [Individual], k: usize, rng: &mut ChaCha8Rng) -> &'a Individual {
    (0..k)
        .map(|_| &pop[rng.gen_range(0..pop.len())])
        .min_by(|a, b| a.fitness.total_cmp(&b.fitness))
        .expect("tournament size is at least 1")
}

/// Real-coded genetic algorithm: tournament selection, BLX-alpha crossover
/// between sufficiently distinct partners, per-gene Gaussian mutation,
/// feasibility repair and elitism.
///
/// `initial` members with a known fitness are not re-evaluated. Missing
/// members are drawn uniformly within the bounds. Offspring identical to
/// their parent inherit its fitness.
pub fn ea_optimize<P: EaProblem>(
    problem: &P,
    initial: Vec<(Vec<f64>, Option<f64>)>,
    config: &EaConfig,
) -> Result<EaResult> {
    let (lo, hi) = (problem.lower(), problem.upper());
    let dim = lo.len();
    let n = config.population_for(dim)?;
    let range: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| h - l).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut evaluations = 0u64;

    let mut members: Vec<(Vec<f64>, Option<f64>)> = initial.into_iter().take(n).collect();
    let mut attempts = 0;
    while members.len() < n {
        attempts += 1;
        if attempts > 100 * n {
            return Err(Error::InfeasiblePopulation(0));
        }
        let mut x: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| rng.gen_range(*l..=*h)).collect();
        if problem.repair(&mut x, &mut rng) {
            members.push((x, None));
        }
    }
    let missing = members.iter().filter(|m| m.1.is_none()).count() as u64;
    if config.max_evaluations.is_some_and(|cap| missing > cap) {
        return Err(Error::BudgetExhausted(0));
    }
    let mut pop = members
        .into_par_iter()
        .map(|(x, f)| {
            let fitness = match f {
                Some(v) => v,
                None => problem.fitness(&x)?,
            };
            Ok(Individual { x, fitness })
        })
        .collect::<Result<Vec<_>>>()?;
    evaluations += missing;
    sort_population(&mut pop);
    let mut history = vec![stats(0, &pop, evaluations)];
    let mut best = pop[0].fitness;
    let mut since_improvement = 0;

    let p_gene = config.p_mutation / dim as f64;
    let termination = loop {
        let generation = history.len();
        if generation > config.max_iterations {
            break EaTermination::MaxIterations;
        }
        if since_improvement >= config.stagnation_window {
            break EaTermination::Stagnation;
        }

        // Variation (sequential, deterministic).
        let n_children = n - config.elitism;
        let mut children: Vec<(Vec<f64>, Option<f64>)> = Vec::with_capacity(n_children);
        let mut failed = 0;
        for _ in 0..n_children {
            let mut child = None;
            for _ in 0..10 {
                let parent = tournament(&pop, config.tournament_size, &mut rng);
                let mut x = parent.x.clone();
                let mut changed = false;
                if rng.gen_bool(config.p_crossover) {
                    let partner = (0..10)
                        .map(|_| tournament(&pop, config.tournament_size, &mut rng))
                        .find(|p| {
                            config.mating_distance.is_none_or(|d| {
                                normalized_distance(&p.x, &parent.x, lo, hi) >= d
                            })
                        });
                    if let Some(p) = partner {
                        for (d, xd) in x.iter_mut().enumerate() {
                            let (a, b) = (parent.x[d].min(p.x[d]), parent.x[d].max(p.x[d]));
                            let ext = config.blend_alpha * (b - a);
                            *xd = rng.gen_range(a - ext..=b + ext);
                        }
                        changed = true;
                    }
                }
                for (d, xd) in x.iter_mut().enumerate() {
                    if rng.gen_bool(p_gene.min(1.0)) {
                        let z: f64 = rng.sample(StandardNormal);
                        *xd += config.mutation_scale * range[d] * z;
                        changed = true;
                    }
                }
                if !changed {
                    child = Some((x, Some(parent.fitness)));
                    break;
                }
                if problem.repair(&mut x, &mut rng) {
                    let same = x == parent.x;
                    child = Some((x, same.then_some(parent.fitness)));
                    break;
                }
            }
            match child {
                Some(c) => children.push(c),
                None => {
                    failed += 1;
                    let p = tournament(&pop, config.tournament_size, &mut rng);
                    children.push((p.x.clone(), Some(p.fitness)));
                }
            }
        }
        if n_children > 0 && failed == n_children {
            return Err(Error::InfeasiblePopulation(generation));
        }

        let needed = children.iter().filter(|c| c.1.is_none()).count() as u64;
        if config
            .max_evaluations
            .is_some_and(|cap| evaluations + needed > cap)
        {
            break EaTermination::Budget;
        }
        let evaluated = children
            .into_par_iter()
            .map(|(x, f)| {
                let fitness = match f {
                    Some(v) => v,
                    None => problem.fitness(&x)?,
                };
                Ok(Individual { x, fitness })
            })
            .collect::<Result<Vec<_>>>()?;
        evaluations += needed;

        let mut next: Vec<Individual> = pop[..config.elitism].to_vec();
        next.extend(evaluated);
        sort_population(&mut next);
        pop = next;
        history.push(stats(generation, &pop, evaluations));
        if pop[0].fitness < best {
            best = pop[0].fitness;
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        log::debug!(
            "ea generation {generation}: best {:.5} mean {:.5} evaluations {evaluations}",
            pop[0].fitness,
            history.last().map_or(f64::NAN, |s| s.mean)
        );
    };

    Ok(EaResult {
        best: pop[0].clone(),
        history,
        evaluations,
        termination,
    })
}

/// Antenna design as an EA problem on one fidelity. Repair clips into the
/// bounds and re-draws the feed position until the layout is valid.
pub struct DesignEa<'a> {
    pub sim: &'a Simulator,
    pub grid: FrequencyGrid,
    pub fidelity: Fidelity,
    pub objective: HingeObjective,
    pub fixed: FixedParams,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> DesignEa<'a> {
    pub fn new(
        sim: &'a Simulator,
        grid: FrequencyGrid,
        fidelity: Fidelity,
        objective: HingeObjective,
        bounds: &Bounds,
    ) -> Self {
        Self {
            sim,
            grid,
            fidelity,
            objective,
            fixed: FixedParams::default(),
            lower: bounds.lower_vec(),
            upper: bounds.upper_vec(),
        }
    }
}

/// Indices of the feed components in the design vector.
const FEED_RHO: usize = 1;
const FEED_PHI: usize = 2;
const FEED_RESAMPLES: usize = 200;

impl EaProblem for DesignEa<'_> {
    fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn fitness(&self, x: &[f64]) -> Result<f64> {
        let curve = self
            .sim
            .evaluate(&DesignVector::from_slice(x)?, &self.grid, self.fidelity)?;
        Ok(self.objective.value(&curve.values))
    }

    fn repair(&self, x: &mut [f64], rng: &mut ChaCha8Rng) -> bool {
        clip(x, &self.lower, &self.upper);
        let feasible = |x: &[f64]| {
            DesignVector::from_slice(x)
                .and_then(|d| build_layout(&d, &self.fixed))
                .is_ok()
        };
        if feasible(x) {
            return true;
        }
        for _ in 0..FEED_RESAMPLES {
            for i in [FEED_RHO, FEED_PHI] {
                x[i] = rng.gen_range(self.lower[i]..=self.upper[i]);
            }
            if feasible(x) {
                return true;
            }
        }
        false
    }
}

/// Search box for the evolutionary baselines: classifier scale range,
/// generation ranges for the shape and a full turn for the feed angle.
pub fn global_bounds(c0: f64, outline_len: usize) -> Bounds {
    let (c_lo, c_hi) = default_c_range(c0);
    let ranges = crate::geometry::GenerationRanges::default();
    Bounds {
        lower: DesignVector {
            c: c_lo,
            rho_f: ranges.rho_f.0,
            phi_f: ranges.phi_f.0,
            rho: vec![ranges.rho.0; outline_len],
            phi: vec![ranges.phi.0; outline_len],
        },
        upper: DesignVector {
            c: c_hi,
            rho_f: ranges.rho_f.1,
            phi_f: ranges.phi_f.1,
            rho: vec![ranges.rho.1; outline_len],
            phi: vec![ranges.phi.1; outline_len],
        },
    }
}

/// Evolutionary optimization of stored candidates on the coarse model.
///
/// With a scaling model, every member is first resized to its classifier
/// optimum and re-simulated. Without one, the stored coarse responses
/// are reused and cost nothing.
pub fn ea_optimize_design(
    sim: &Simulator,
    seed_population: &[CandidateRecord],
    cfg: &RunConfig,
    ea: &EaConfig,
    scaling: Option<&ScalingModel>,
) -> Result<(DesignVector, EaResult)> {
    let grid = cfg.grid;
    let objective = band_objective(cfg)?.hinge(&grid)?;
    let bounds = global_bounds(cfg.c0, cfg.outline_len);
    let problem = DesignEa::new(sim, grid, Fidelity::Coarse, objective.clone(), &bounds);
    let fixed = FixedParams::default();
    let spec = classifier_spec(cfg)?;

    let mut initial = Vec::with_capacity(seed_population.len());
    for rec in seed_population {
        match scaling {
            Some(model) => {
                let v = classify_curve(
                    &rec.curve()?,
                    rec.design.c,
                    model,
                    &spec,
                    default_c_range(model.c0),
                )?;
                let mut scaled = scale_design(&rec.design, v.c_star);
                if build_layout(&scaled, &fixed).is_err() {
                    scaled = rec.design.clone();
                }
                initial.push((scaled.to_vec(), None));
            }
            None => {
                let (x, _) = bounds.clip(&rec.design)?;
                let fitness = (x == rec.design).then(|| objective.value(&rec.curve));
                initial.push((x.to_vec(), fitness));
            }
        }
    }
    let result = ea_optimize(&problem, initial, ea)?;
    Ok((DesignVector::from_slice(&result.best.x)?, result))
}

/// Method (i): bi-stage trust-region optimization of a candidate kept at the
/// reference scale `c0`, without classifier resizing.
pub fn tr_noscale(
    sim: &Simulator,
    candidate: &DesignVector,
    coarse_at_c0: Option<&ResponseCurve>,
    cfg: &RunConfig,
    opts: &BiStageOptions,
) -> Result<BiStageReport> {
    let x = scale_design(candidate, cfg.c0);
    let bounds = make_bounds(&x);
    let (x0, clipped) = bounds.clip(&x)?;
    let known = (clipped == 0 && candidate.c == cfg.c0)
        .then_some(coarse_at_c0)
        .flatten();
    bi_stage_optimize(sim, &x0, known, &bounds, &band_objective(cfg)?, &cfg.grid, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Trust region without classifier resizing.
    TrNoScale,
    /// Evolutionary algorithm on a classifier-resized population.
    EaScaled,
    /// Evolutionary algorithm on the unscaled population.
    EaUnscaled,
    /// Complete surrogate-assisted flow.
    Full,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::TrNoScale => "i",
            Method::EaScaled => "ii",
            Method::EaUnscaled => "iii",
            Method::Full => "full",
        }
    }

    pub fn all() -> [Method; 4] {
        [Method::TrNoScale, Method::EaScaled, Method::EaUnscaled, Method::Full]
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "i" | "1" => Ok(Method::TrNoScale),
            "ii" | "2" => Ok(Method::EaScaled),
            "iii" | "3" => Ok(Method::EaUnscaled),
            "full" => Ok(Method::Full),
            other => Err(Error::Config(format!(
                "unknown method {other:?} (expected i, ii, iii or full)"
            ))),
        }
    }
}

/// One benchmark table row. Costs are the counter deltas of the method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub method: String,
    pub seed: u64,
    pub n_coarse: u64,
    pub n_fine: u64,
    pub fine_equivalent: f64,
    /// Total cost in hours of simulation time.
    pub hours: f64,
    /// Objective of the returned design on the model the method optimized.
    pub final_u: f64,
    /// Fidelity of `final_u`.
    pub fidelity: Fidelity,
    /// Worst in-band reflection of the returned design on that model (dB).
    pub worst_db: f64,
}

impl BenchmarkRow {
    fn new(
        method: Method,
        seed: u64,
        counts: EvalCount,
        costs: &CostModel,
        final_u: f64,
        fidelity: Fidelity,
        worst_db: f64,
    ) -> Self {
        let fine_equivalent = counts.fine_equivalent(costs);
        Self {
            method: method.label().to_string(),
            seed,
            n_coarse: counts.n_coarse,
            n_fine: counts.n_fine,
            fine_equivalent,
            hours: fine_equivalent * costs.fine_s / 3600.0,
            final_u,
            fidelity,
            worst_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSettings {
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Per-method budget in fine-equivalent simulations.
    pub budget_fine_eq: f64,
    pub ea: EaConfig,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        Self {
            methods: Method::all().to_vec(),
            seeds: (0..10).collect(),
            budget_fine_eq: 700.0,
            ea: EaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub rows: Vec<BenchmarkRow>,
    /// Simulations spent preparing the shared databases and scaling models.
    pub setup: EvalCount,
}

/// Runs every method on every seed. Per seed, a shared database of `2D`
/// random coarse-simulated candidates is prepared first (not charged to any
/// method) together with a scaling model (also not charged). The full flow
/// warm-starts from that database; methods (ii) and (iii) use it as their
/// initial population; method (i) starts from the candidate the full flow
/// picked, kept at `c0`.
pub fn run_benchmark(
    cfg: &RunConfig,
    sim: &Simulator,
    settings: &BenchmarkSettings,
) -> Result<BenchmarkRun> {
    let costs = *sim.costs();
    let mut setup_total = EvalCount::default();
    let budget_coarse = settings.budget_fine_eq * costs.fine_s / costs.coarse_s;
    let mut rows = Vec::new();
    for &seed in &settings.seeds {
        let cfg = RunConfig {
            seed,
            budgets: crate::config::Budgets {
                total_coarse_eq: budget_coarse,
                ..cfg.budgets
            },
            ..cfg.clone()
        };
        let setup = sim.with_fresh_counter();
        let model = fit_scaling(&cfg, &setup)?;
        let db = seed_database(&cfg, &setup)?;
        setup_total = setup_total + setup.counts();

        let hinge = band_objective(&cfg)?.hinge(&cfg.grid)?;
        // The full flow also determines method (i)'s start.
        let full_sim = sim.with_fresh_counter();
        let mut full_db = db.detached_copy();
        let full = run_with(&cfg, &full_sim, &mut full_db, &model, EvalCount::default())
            .map_err(|e| e.in_stage("benchmark full"))?;

        for &method in &settings.methods {
            let msim = sim.with_fresh_counter();
            let row = match method {
                Method::Full => BenchmarkRow::new(
                    method,
                    seed,
                    full_sim.counts(),
                    &costs,
                    full.stages.last().map_or(f64::NAN, |s| s.u_end),
                    Fidelity::Fine,
                    full.in_band_max_db,
                ),
                Method::TrNoScale => {
                    let rec = full_db.get(full.start.record_id)?;
                    let fine_reserve = (1 + 2 * cfg.dim() + cfg.budgets.fine_max_iterations) as u64;
                    let coarse_cap = (budget_coarse
                        - fine_reserve as f64 * costs.fine_s / costs.coarse_s)
                        .floor()
                        .max(0.0) as u64;
                    let opts = BiStageOptions {
                        sigma: cfg.sigma,
                        lambda0: cfg.lambda0,
                        coarse_max_iterations: cfg.budgets.coarse_max_iterations,
                        coarse_max_evaluations: Some(coarse_cap),
                        fine_max_iterations: cfg.budgets.fine_max_iterations,
                        fine_max_evaluations: Some(fine_reserve),
                    };
                    let curve = rec.curve()?;
                    let rep = tr_noscale(&msim, &rec.design, Some(&curve), &cfg, &opts)
                        .map_err(|e| e.in_stage("benchmark (i)"))?;
                    BenchmarkRow::new(
                        method,
                        seed,
                        msim.counts(),
                        &costs,
                        rep.fine_u(),
                        Fidelity::Fine,
                        rep.fine_worst_db(),
                    )
                }
                Method::EaScaled | Method::EaUnscaled => {
                    let scaled = method == Method::EaScaled;
                    let ea = EaConfig {
                        max_evaluations: Some(budget_coarse.floor() as u64),
                        seed,
                        ..settings.ea
                    };
                    let (_, res) = ea_optimize_design(
                        &msim,
                        db.records(),
                        &cfg,
                        &ea,
                        scaled.then_some(&model),
                    )
                    .map_err(|e| e.in_stage("benchmark EA"))?;
                    // Reported objective comes from the run itself; no extra simulation.
                    let worst = worst_from_u(&hinge, res.best.fitness);
                    BenchmarkRow::new(
                        method,
                        seed,
                        msim.counts(),
                        &costs,
                        res.best.fitness,
                        Fidelity::Coarse,
                        worst,
                    )
                }
            };
            log::info!(
                "benchmark seed {seed} method {}: U = {:.4}, {} coarse + {} fine",
                row.method,
                row.final_u,
                row.n_coarse,
                row.n_fine
            );
            rows.push(row);
        }
    }
    Ok(BenchmarkRun {
        rows,
        setup: setup_total,
    })
}

/// Lower bound on the worst in-band level implied by a hinge objective value
/// (`NaN` when the objective is zero and nothing can be inferred).
fn worst_from_u(hinge: &HingeObjective, u: f64) -> f64 {
    if u > 0.0 {
        hinge.r_max + u.sqrt()
    } else {
        f64::NAN
    }
}

/// `2D` random candidates simulated on the coarse model.
pub fn seed_database(cfg: &RunConfig, sim: &Simulator) -> Result<DesignDatabase> {
    let settings = generation_settings(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xdb5e_ed00);
    let seeds: Vec<u64> = (0..cfg.dim() * 2).map(|_| rng.gen()).collect();
    let entries = seeds
        .par_iter()
        .map(|&s| {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            let x = random_design(&mut r, settings.outline_len, &settings.ranges, &settings.fixed)?;
            let curve = sim.evaluate(&x, &settings.grid, Fidelity::Coarse)?;
            Ok((s, x, curve))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut db = DesignDatabase::in_memory();
    for (s, x, curve) in entries {
        let id = db.next_id();
        db.append(CandidateRecord::new(id, s, "seed", &x, &curve, Default::default()))?;
    }
    Ok(db)
}

pub fn write_benchmark_csv<W: Write>(rows: &[BenchmarkRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(Path::new("<benchmark csv>"), e))?;
    Ok(())
}

/// Median of `final_u` per method label.
pub fn median_u(rows: &[BenchmarkRow], method: Method) -> Option<f64> {
    let mut v: Vec<f64> = rows
        .iter()
        .filter(|r| r.method == method.label())
        .map(|r| r.final_u)
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Sphere {
        lo: Vec<f64>,
        hi: Vec<f64>,
    }

    impl EaProblem for Sphere {
        fn lower(&self) -> &[f64] {
            &self.lo
        }
        fn upper(&self) -> &[f64] {
            &self.hi
        }
        fn fitness(&self, x: &[f64]) -> Result<f64> {
            Ok(x.iter().map(|v| (v - 1.0).powi(2)).sum())
        }
    }

    fn sphere(dim: usize) -> Sphere {
        Sphere {
            lo: vec![-5.0; dim],
            hi: vec![5.0; dim],
        }
    }

    #[test]
    fn sphere_converges() {
        let cfg = EaConfig {
            max_iterations: 100,
            p_mutation: 1.0,
            p_crossover: 0.9,
            mating_distance: None,
            seed: 5,
            ..EaConfig::default()
        };
        let res = ea_optimize(&sphere(10), vec![], &cfg).unwrap();
        assert!(res.best.fitness <= 1e-2, "best {}", res.best.fitness);
    }

    #[test]
    fn best_never_worsens() {
        let res = ea_optimize(&sphere(6), vec![], &EaConfig { max_iterations: 30, ..Default::default() })
            .unwrap();
        for w in res.history.windows(2) {
            assert!(w[1].best <= w[0].best);
        }
    }

    #[test]
    fn lone_elite_is_kept() {
        let cfg = EaConfig {
            population_size: Some(1),
            elitism: 1,
            p_mutation: 0.0,
            p_crossover: 0.0,
            max_iterations: 5,
            ..Default::default()
        };
        let res = ea_optimize(&sphere(3), vec![(vec![2.0; 3], None)], &cfg).unwrap();
        assert_eq!(res.best.x, vec![2.0; 3]);
        assert_eq!(res.evaluations, 1);
        assert_eq!(res.termination, EaTermination::MaxIterations);
    }

    #[test]
    fn evaluation_budget_is_respected() {
        let cfg = EaConfig {
            max_evaluations: Some(100),
            ..Default::default()
        };
        let res = ea_optimize(&sphere(5), vec![], &cfg).unwrap();
        assert!(res.evaluations <= 100);
        assert_eq!(res.termination, EaTermination::Budget);
    }

    #[test]
    fn config_validation() {
        assert!(EaConfig { p_mutation: 1.5, ..Default::default() }.population_for(4).is_err());
        assert!(EaConfig { population_size: Some(1), elitism: 0, ..Default::default() }
            .population_for(4)
            .is_err());
        assert_eq!(EaConfig::default().population_for(53).unwrap(), 106);
    }

    #[test]
    fn method_labels_round_trip() {
        for m in Method::all() {
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
        }
        assert!("iv".parse::<Method>().is_err());
    }

    #[test]
    fn median_of_even_and_odd() {
        let row = |u: f64| BenchmarkRow {
            method: "full".into(),
            seed: 0,
            n_coarse: 0,
            n_fine: 0,
            fine_equivalent: 0.0,
            hours: 0.0,
            final_u: u,
            fidelity: Fidelity::Fine,
            worst_db: 0.0,
        };
        assert_eq!(median_u(&[row(3.0), row(1.0), row(2.0)], Method::Full), Some(2.0));
        assert_eq!(median_u(&[row(3.0), row(1.0)], Method::Full), Some(2.0));
        assert_eq!(median_u(&[row(3.0)], Method::EaScaled), None);
    }
}
