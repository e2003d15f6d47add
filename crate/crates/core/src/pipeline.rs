//! End-to-end design flow: scaling model, start-point search (warm start from
//! the database, otherwise random generation), bi-stage optimization and the
//! final report.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{
    generate_until_accepted, warm_start_scan, ClassifierSpec, DesignDatabase, GenerationSettings,
};
use crate::config::{Band, RunConfig};
use crate::error::{Error, Result};
use crate::geometry::{build_layout, make_bounds, scale_design, DesignVector, FixedParams, GenerationRanges};
use crate::scaling::{fit_from_random, ScalingModel};
use crate::simbackend::{backend_from_spec, CostModel, EvalCount, Fidelity, ResponseCurve, Simulator};
use crate::troptim::{bi_stage_optimize, BandObjective, BiStageOptions, BiStageReport, StageReport};

/// Stream offset separating the scaling-fit draws from candidate generation.
const SCALING_STREAM: u64 = 0x5ca1_ab1e;

/// Achieved operating band around a target center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub f_low: f64,
    pub f_high: f64,
    pub bw_ghz: f64,
    /// `100 * bw / f_center` with `f_center` the middle of the achieved band.
    pub bw_percent: f64,
}

/// Widest contiguous interval around `center` where the curve stays at or
/// below `r_goal`, with edges placed by linear interpolation between samples.
/// `None` when the curve exceeds `r_goal` at the center itself.
pub fn achieved_band(curve: &ResponseCurve, r_goal: f64, center: f64) -> Option<Bandwidth> {
    let (v, _) = curve.interpolate(center);
    if v > r_goal {
        return None;
    }
    let g = &curve.grid;
    let n = curve.values.len();
    let ok = |i: usize| curve.values[i] <= r_goal;
    let crossing = |i: usize, j: usize| {
        let (fi, fj) = (g.freq(i), g.freq(j));
        let (vi, vj) = (curve.values[i], curve.values[j]);
        if vj == vi {
            fi
        } else {
            fi + (r_goal - vi) / (vj - vi) * (fj - fi)
        }
    };
    // Samples bracketing the center.
    let k = (((center - g.f_min) / g.step()).floor().max(0.0) as usize).min(n - 1);
    let mut f_low = center;
    if ok(k) {
        let mut i = k;
        while i > 0 && ok(i - 1) {
            i -= 1;
        }
        f_low = if i == 0 { g.freq(0) } else { crossing(i - 1, i) };
    } else if k + 1 < n {
        f_low = crossing(k, k + 1).min(center);
    }
    let k_hi = (k + 1).min(n - 1);
    let mut f_high = center;
    if ok(k_hi) {
        let mut j = k_hi;
        while j + 1 < n && ok(j + 1) {
            j += 1;
        }
        f_high = if j + 1 == n { g.freq(n - 1) } else { crossing(j, j + 1) };
    } else if k_hi > k {
        f_high = crossing(k, k_hi).max(center);
    }
    let bw = f_high - f_low;
    Some(Bandwidth {
        f_low,
        f_high,
        bw_ghz: bw,
        bw_percent: 100.0 * bw / (0.5 * (f_low + f_high)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartSource {
    WarmStart,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartPoint {
    pub source: StartSource,
    pub record_id: u64,
    /// Scale chosen by the classifier (mm).
    pub c_star: f64,
    /// Classifier margin `U_q*` (dB).
    pub u_q: f64,
    /// Fresh candidates drawn (zero for a warm start).
    pub candidates: usize,
    /// Stored candidates re-simulated during the warm start.
    pub verified: usize,
    pub x: Vec<f64>,
}

/// Evaluation counts per stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub scaling: EvalCount,
    pub classification: EvalCount,
    pub optimization: EvalCount,
    pub total: EvalCount,
    /// `n_coarse * coarse_s / fine_s + n_fine` over `total`.
    pub fine_equivalent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    pub frequencies: Vec<f64>,
    /// Coarse response of the start point.
    pub initial: Vec<f64>,
    pub coarse_opt: Vec<f64>,
    pub fine_opt: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub band: Band,
    pub r_goal: f64,
    pub seed: u64,
    pub backend: String,
    pub scaling_beta: [f64; 3],
    pub start: StartPoint,
    pub x_coarse: Vec<f64>,
    pub x_fine: Vec<f64>,
    /// Worst in-band reflection of the final (fine) design, dB.
    pub in_band_max_db: f64,
    pub meets_goal: bool,
    pub bandwidth: Option<Bandwidth>,
    /// Patch side `A1` (mm).
    pub a1_mm: f64,
    pub costs: CostBreakdown,
    pub stages: Vec<StageReport>,
    pub curves: Curves,
}

impl RunReport {
    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_vec(self)?;
        Ok(format!("{:x}", Sha256::digest(json)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn fine_design(&self) -> Result<DesignVector> {
        DesignVector::from_slice(&self.x_fine)
    }
}

pub fn classifier_spec(cfg: &RunConfig) -> Result<ClassifierSpec> {
    ClassifierSpec::new(cfg.e_t, cfg.band.f_low, cfg.band.f_high)
}

pub fn band_objective(cfg: &RunConfig) -> Result<BandObjective> {
    BandObjective::new(cfg.band.f_low, cfg.band.f_high, cfg.r_max, cfg.r_goal)
}

pub fn generation_settings(cfg: &RunConfig) -> GenerationSettings {
    GenerationSettings {
        outline_len: cfg.outline_len,
        ranges: GenerationRanges {
            c0: cfg.c0,
            ..GenerationRanges::default()
        },
        fixed: FixedParams::default(),
        grid: cfg.grid,
    }
}

/// Fits a scaling model on random designs (seeded from `cfg.seed`).
pub fn fit_scaling(cfg: &RunConfig, sim: &Simulator) -> Result<ScalingModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(SCALING_STREAM);
    fit_from_random(
        &mut rng,
        cfg.scaling_designs,
        &cfg.c_values(),
        cfg.outline_len,
        sim,
        &cfg.grid,
    )
}

/// Loads the configured scaling model, or fits and stores it when absent.
pub fn obtain_scaling_model(cfg: &RunConfig, sim: &Simulator) -> Result<ScalingModel> {
    let path = cfg.scaling_model_path();
    if path.exists() {
        log::info!("loading scaling model from {}", path.display());
        return ScalingModel::load(&path);
    }
    let model = fit_scaling(cfg, sim)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    model.save(&path)?;
    Ok(model)
}

/// Start point plus its coarse response when one was simulated.
pub struct Start {
    pub point: StartPoint,
    pub x0: DesignVector,
    pub coarse: Option<ResponseCurve>,
}

/// Warm start: the best stored records (by classifier margin) are resized
/// and re-simulated, at most `warm_start_checks` of them, and the first one
/// whose simulated in-band maximum meets `E_t` is used. Otherwise fresh
/// candidates are generated until one is accepted.
pub fn find_start(
    cfg: &RunConfig,
    sim: &Simulator,
    db: &mut DesignDatabase,
    model: &ScalingModel,
) -> Result<Start> {
    let spec = classifier_spec(cfg)?;
    let fixed = FixedParams::default();
    let mut verified = 0;
    if !db.is_empty() {
        let ranked = warm_start_scan(db, model, &spec)?;
        for hit in ranked.iter().filter(|h| h.verdict.accepted) {
            if verified >= cfg.budgets.warm_start_checks {
                break;
            }
            let record = db.get(hit.record_id)?;
            if record.design.outline_len() != cfg.outline_len {
                continue;
            }
            let x0 = scale_design(&record.design, hit.verdict.c_star);
            if build_layout(&x0, &fixed).is_err() {
                continue;
            }
            verified += 1;
            let curve = sim.evaluate(&x0, &cfg.grid, Fidelity::Coarse)?;
            let worst = curve.max_in_band(cfg.band.f_low, cfg.band.f_high)?;
            db.set_verdict(hit.record_id, &spec.key(), hit.verdict)?;
            log::info!(
                "warm start: record {} at c = {:.3} mm, predicted {:.2} dB, simulated {:.2} dB",
                hit.record_id,
                hit.verdict.c_star,
                hit.verdict.u_q + cfg.e_t,
                worst
            );
            if worst <= cfg.e_t {
                return Ok(Start {
                    point: StartPoint {
                        source: StartSource::WarmStart,
                        record_id: hit.record_id,
                        c_star: hit.verdict.c_star,
                        u_q: hit.verdict.u_q,
                        candidates: 0,
                        verified,
                        x: x0.to_vec(),
                    },
                    x0,
                    coarse: Some(curve),
                });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let acc = generate_until_accepted(
        &mut rng,
        sim,
        model,
        &spec,
        cfg.budgets.max_candidates,
        db,
        &generation_settings(cfg),
    )?;
    Ok(Start {
        point: StartPoint {
            source: StartSource::Generated,
            record_id: acc.record_id,
            c_star: acc.verdict.c_star,
            u_q: acc.verdict.u_q,
            candidates: acc.n_candidates,
            verified,
            x: acc.x0.to_vec(),
        },
        x0: acc.x0,
        coarse: None,
    })
}

/// Bi-stage optimization within `remaining_coarse_eq` coarse-equivalent
/// simulations. The fine stage's worst case (one response, one Jacobian and
/// one candidate per iteration) is reserved first; the coarse stages get the rest.
pub fn optimize_start(
    cfg: &RunConfig,
    sim: &Simulator,
    x0: &DesignVector,
    coarse: Option<&ResponseCurve>,
    remaining_coarse_eq: f64,
) -> Result<BiStageReport> {
    let bounds = make_bounds(x0);
    let (x0, clipped) = bounds.clip(x0)?;
    if clipped > 0 {
        log::warn!("start point clipped into its bounds in {clipped} components");
    }
    let coarse = if clipped > 0 { None } else { coarse };
    let costs = sim.costs();
    let fine_reserve = (1 + 2 * x0.dim() + cfg.budgets.fine_max_iterations) as u64;
    let coarse_budget =
        (remaining_coarse_eq - fine_reserve as f64 * costs.fine_s / costs.coarse_s).floor();
    if coarse_budget < 1.0 {
        return Err(Error::BudgetExhausted(0));
    }
    let opts = BiStageOptions {
        sigma: cfg.sigma,
        lambda0: cfg.lambda0,
        coarse_max_iterations: cfg.budgets.coarse_max_iterations,
        coarse_max_evaluations: Some(coarse_budget as u64),
        fine_max_iterations: cfg.budgets.fine_max_iterations,
        fine_max_evaluations: Some(fine_reserve),
    };
    bi_stage_optimize(sim, &x0, coarse, &bounds, &band_objective(cfg)?, &cfg.grid, &opts)
}

/// Flow with an already available scaling model and database.
/// `scaling_cost` is added to the report's cost breakdown.
pub fn run_with(
    cfg: &RunConfig,
    sim: &Simulator,
    db: &mut DesignDatabase,
    model: &ScalingModel,
    scaling_cost: EvalCount,
) -> Result<RunReport> {
    cfg.validate()?;
    let costs = *sim.costs();
    let t0 = sim.counts();
    let start = find_start(cfg, sim, db, model).map_err(|e| e.in_stage("classification"))?;
    let t1 = sim.counts();
    let classification = t1.since(&t0);
    let spent = (scaling_cost + classification).coarse_equivalent(&costs);

    let initial = match &start.coarse {
        Some(c) => c.clone(),
        None => {
            // The optimizer needs it anyway; computed here so the report has it.
            sim.evaluate(&start.x0, &cfg.grid, Fidelity::Coarse)?
        }
    };
    let remaining = cfg.budgets.total_coarse_eq
        - spent
        - if start.coarse.is_none() { 1.0 } else { 0.0 };
    let bi = optimize_start(cfg, sim, &start.x0, Some(&initial), remaining)
        .map_err(|e| e.in_stage("optimization"))?;
    let optimization = sim.counts().since(&t1);
    let total = scaling_cost + classification + optimization;

    let in_band_max_db = bi.fine_curve.max_in_band(cfg.band.f_low, cfg.band.f_high)?;
    let layout = build_layout(&bi.x_fine, &FixedParams::default())?;
    Ok(RunReport {
        band: cfg.band,
        r_goal: cfg.r_goal,
        seed: cfg.seed,
        backend: sim.backend_name(),
        scaling_beta: model.beta,
        start: start.point,
        x_coarse: bi.x_coarse.to_vec(),
        x_fine: bi.x_fine.to_vec(),
        in_band_max_db,
        meets_goal: in_band_max_db <= cfg.r_goal,
        bandwidth: achieved_band(&bi.fine_curve, cfg.r_goal, cfg.band.center()),
        a1_mm: layout.patch_side_mm,
        costs: CostBreakdown {
            scaling: scaling_cost,
            classification,
            optimization,
            total,
            fine_equivalent: total.fine_equivalent(&costs),
        },
        stages: bi.stages,
        curves: Curves {
            frequencies: cfg.grid.frequencies(),
            initial: initial.values,
            coarse_opt: bi.coarse_curve.values,
            fine_opt: bi.fine_curve.values,
        },
    })
}

/// Complete run driven by `cfg`: opens the database, loads or fits the
/// scaling model, runs the flow and writes `report.json` to the output directory.
pub fn run_full(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let sim = Simulator::new(backend_from_spec(&cfg.backend)?, CostModel::default());
    let before = sim.counts();
    let model = obtain_scaling_model(cfg, &sim).map_err(|e| e.in_stage("scaling"))?;
    let scaling_cost = sim.counts().since(&before);
    let mut db = DesignDatabase::open(cfg.database_path())?;
    let report = run_with(cfg, &sim, &mut db, &model, scaling_cost)?;
    report.save(&cfg.output_dir.join("report.json"))?;
    log::info!(
        "run finished: in-band max {:.2} dB ({}), cost {:.1} fine-equivalent",
        report.in_band_max_db,
        if report.meets_goal { "meets goal" } else { "misses goal" },
        report.costs.fine_equivalent
    );
    Ok(report)
}
