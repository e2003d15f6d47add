//! Trust-region optimization with finite-difference linear models.
//!
//! Each iteration minimizes the objective of an affine response model inside
//! a box-shaped trust region, simulates the proposed design once and adapts
//! the radius from the ratio of actual to predicted improvement.

mod bistage;
mod jacobian;
mod subproblem;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_layout, DesignVector, FixedParams};
use crate::simbackend::{Fidelity, FrequencyGrid, ResponseCurve, Simulator};

pub use bistage::{bi_stage_optimize, BiStageOptions, BiStageReport, StageReport};
pub use jacobian::{fd_jacobian, fd_step, LinearModel};
pub use subproblem::{solve_subproblem, SubproblemSolution, SUBPROBLEM_MAX_ITER, SUBPROBLEM_TOL};

/// Something that maps a flat parameter vector to a sampled response.
/// Implementations must tolerate concurrent calls.
pub trait Evaluator: Sync {
    fn dim(&self) -> usize;

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Whether `x` may be proposed as an iterate. Rejected candidates are not
    /// simulated.
    fn admissible(&self, _x: &[f64]) -> bool {
        true
    }
}

/// Wraps a closure; counts calls. Handy for synthetic problems.
pub struct FnEvaluator<F> {
    dim: usize,
    f: F,
    calls: AtomicU64,
}

impl<F> FnEvaluator<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self {
            dim,
            f,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<F> Evaluator for FnEvaluator<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.f)(x)
    }
}

/// Antenna designs simulated at one fidelity.
pub struct DesignProblem<'a> {
    pub sim: &'a Simulator,
    pub grid: FrequencyGrid,
    pub fidelity: Fidelity,
    pub fixed: FixedParams,
    pub dim: usize,
}

impl<'a> DesignProblem<'a> {
    pub fn new(sim: &'a Simulator, grid: FrequencyGrid, fidelity: Fidelity, dim: usize) -> Self {
        Self {
            sim,
            grid,
            fidelity,
            fixed: FixedParams::default(),
            dim,
        }
    }

    pub fn curve(&self, x: &[f64]) -> Result<ResponseCurve> {
        self.sim
            .evaluate(&DesignVector::from_slice(x)?, &self.grid, self.fidelity)
    }
}

impl Evaluator for DesignProblem<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.curve(x)?.values)
    }

    fn admissible(&self, x: &[f64]) -> bool {
        DesignVector::from_slice(x)
            .and_then(|x| build_layout(&x, &self.fixed))
            .is_ok()
    }
}

/// Band requirement: the optimizer pushes in-band reflection below `r_max`;
/// a design meets the specification when it is below `r_goal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandObjective {
    pub f_low: f64,
    pub f_high: f64,
    pub r_max: f64,
    pub r_goal: f64,
}

impl BandObjective {
    pub fn new(f_low: f64, f_high: f64, r_max: f64, r_goal: f64) -> Result<Self> {
        if !(f_low < f_high) {
            return Err(Error::Config(format!("empty band {f_low}..{f_high} GHz")));
        }
        if !(r_max <= r_goal) {
            return Err(Error::Config(format!(
                "target level {r_max} dB must not exceed the specification {r_goal} dB"
            )));
        }
        Ok(Self {
            f_low,
            f_high,
            r_max,
            r_goal,
        })
    }

    pub fn hinge(&self, grid: &FrequencyGrid) -> Result<HingeObjective> {
        Ok(HingeObjective::new(
            grid.band_indices(self.f_low, self.f_high)?,
            self.r_max,
        ))
    }
}

/// Mean over selected samples of `max(R - r_max, 0)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HingeObjective {
    pub band: Vec<usize>,
    pub r_max: f64,
}

impl HingeObjective {
    pub fn new(band: Vec<usize>, r_max: f64) -> Self {
        Self { band, r_max }
    }

    pub fn value(&self, response: &[f64]) -> f64 {
        self.band
            .iter()
            .map(|&i| (response[i] - self.r_max).max(0.0).powi(2))
            .sum::<f64>()
            / self.band.len() as f64
    }

    pub fn worst(&self, response: &[f64]) -> f64 {
        self.band
            .iter()
            .map(|&i| response[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn objective_u(curve: &ResponseCurve, obj: &BandObjective) -> Result<f64> {
    Ok(obj.hinge(&curve.grid)?.value(&curve.values))
}

/// Radius update from the gain ratio.
pub fn update_radius(lambda: f64, rho: f64) -> f64 {
    if rho > 0.75 {
        2.0 * lambda
    } else if rho < 0.25 {
        lambda / 3.0
    } else {
        lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JacobianMode {
    /// Rebuild the Jacobian at every new iterate.
    Reset,
    /// Build it once at the start and keep it.
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrOptions {
    pub lambda0: f64,
    pub sigma: f64,
    pub mode: JacobianMode,
    /// Minimum normalized step.
    pub eps_step: f64,
    /// Minimum objective change of an accepted step.
    pub eps_objective: f64,
    /// Minimum radius.
    pub eps_radius: f64,
    pub max_iterations: usize,
    /// Cap on evaluations made by this run (including the Jacobian).
    pub max_evaluations: Option<u64>,
}

impl Default for TrOptions {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            sigma: 0.02,
            mode: JacobianMode::Reset,
            eps_step: 1e-2,
            eps_objective: 1e-2,
            eps_radius: 1e-2,
            max_iterations: 100,
            max_evaluations: None,
        }
    }
}

impl TrOptions {
    /// Static Jacobian, at most 10 iterations.
    pub fn static_jacobian() -> Self {
        Self {
            mode: JacobianMode::Static,
            max_iterations: 10,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    Accepted,
    Rejected,
    /// Candidate failed the admissibility check; not simulated.
    Inadmissible,
    /// Model predicted no improvement; not simulated.
    Degenerate,
    /// Step shorter than the tolerance; not simulated.
    TooShort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub outcome: StepOutcome,
    pub candidate: Vec<f64>,
    /// Objective at the iterate before the step.
    pub u_current: f64,
    pub u_predicted: f64,
    pub u_candidate: Option<f64>,
    pub gain_ratio: Option<f64>,
    pub step_norm: f64,
    /// Halvings applied to repair an inadmissible step before it was
    /// simulated (0 when it needed only frozen coordinates or no repair).
    #[serde(default)]
    pub backtracks: u32,
    pub lambda: f64,
    pub lambda_next: f64,
    /// Evaluations made by the run so far.
    pub evaluations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The objective is already zero; nothing can improve it.
    Satisfied,
    StepTooSmall,
    ObjectiveStalled,
    RadiusTooSmall,
    MaxIterations,
    Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrResult {
    pub x: Vec<f64>,
    pub response: Vec<f64>,
    pub u: f64,
    pub u_initial: f64,
    pub history: Vec<IterationRecord>,
    pub termination: Termination,
    pub n_evaluations: u64,
    pub n_jacobians: usize,
    /// Candidates that were simulated.
    pub n_candidates: usize,
}

/// Normalized infinity norm `max_d |a_d - b_d| / (ub_d - lb_d)`.
pub fn normalized_distance(a: &[f64], b: &[f64], lb: &[f64], ub: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(lb.iter().zip(ub))
        .map(|((x, y), (l, u))| (x - y).abs() / (u - l))
        .fold(0.0, f64::max)
}

struct Counted<'a, E: ?Sized> {
    inner: &'a E,
    count: AtomicU64,
}

impl<E: Evaluator + ?Sized> Evaluator for Counted<'_, E> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.count.fetch_add(1, Ordering::SeqCst);
        self.inner.evaluate(x)
    }

    fn admissible(&self, x: &[f64]) -> bool {
        self.inner.admissible(x)
    }
}

/// Most halvings tried when pulling an inadmissible step back toward `x`.
pub const MAX_BACKTRACKS: u32 = 10;

/// Repairs an inadmissible step `x -> target` without simulating: first by
/// halving it, then by freezing every coordinate whose move alone is
/// inadmissible and halving what is left. A repaired point must still be
/// at least `eps_step` away and predicted to improve on `u`.
#[allow(clippy::too_many_arguments)]
fn backtrack<E: Evaluator + ?Sized>(
    eval: &E,
    model: &LinearModel,
    objective: &HingeObjective,
    x: &[f64],
    target: &[f64],
    lb: &[f64],
    ub: &[f64],
    eps_step: f64,
    u: f64,
) -> Option<(Vec<f64>, f64, u32)> {
    let halve = |target: &[f64], first: u32| {
        let mut t = 0.5f64.powi(first as i32);
        for halvings in first..=MAX_BACKTRACKS {
            let y: Vec<f64> = x.iter().zip(target).map(|(a, b)| a + t * (b - a)).collect();
            if normalized_distance(&y, x, lb, ub) < eps_step {
                return None;
            }
            if eval.admissible(&y) {
                let predicted = objective.value(&model.predict(&y));
                if u - predicted > 1e-14 {
                    return Some((y, predicted, halvings));
                }
                return None;
            }
            t *= 0.5;
        }
        None
    };
    halve(target, 1).or_else(|| {
        let mut frozen = target.to_vec();
        let mut probe = x.to_vec();
        let mut any = false;
        for i in 0..x.len() {
            probe[i] = target[i];
            if !eval.admissible(&probe) {
                frozen[i] = x[i];
                any = true;
            }
            probe[i] = x[i];
        }
        if any {
            halve(&frozen, 0)
        } else {
            None
        }
    })
}

/// Runs the trust-region loop from `x0`, which must lie inside `[lb, ub]`.
///
/// Simulations: one for `x0` unless `initial_response` is given, `2 D` per
/// Jacobian, and one per simulated candidate.
pub fn tr_optimize<E: Evaluator + ?Sized>(
    eval: &E,
    x0: &[f64],
    initial_response: Option<Vec<f64>>,
    lb: &[f64],
    ub: &[f64],
    objective: &HingeObjective,
    opts: &TrOptions,
) -> Result<TrResult> {
    let dim = x0.len();
    if lb.len() != dim || ub.len() != dim || eval.dim() != dim {
        return Err(Error::InvalidDesign(format!(
            "dimension mismatch: x0 {dim}, bounds {}/{}, problem {}",
            lb.len(),
            ub.len(),
            eval.dim()
        )));
    }
    if let Some(d) = (0..dim).find(|&d| !(x0[d] >= lb[d] && x0[d] <= ub[d])) {
        return Err(Error::InvalidDesign(format!(
            "start point component {d} = {} is outside [{}, {}]",
            x0[d], lb[d], ub[d]
        )));
    }
    let counted = Counted {
        inner: eval,
        count: AtomicU64::new(0),
    };
    let used = || counted.count.load(Ordering::SeqCst);
    let affordable = |n: u64| opts.max_evaluations.is_none_or(|cap| used() + n <= cap);

    let mut x = x0.to_vec();
    let mut response = match initial_response {
        Some(r) => r,
        None => counted.evaluate(&x)?,
    };
    let mut u = objective.value(&response);
    let u_initial = u;
    let mut lambda = opts.lambda0;
    let mut history = Vec::new();
    let mut n_jacobians = 0;
    let mut n_candidates = 0;
    let mut model: Option<LinearModel> = None;

    let termination = 'outer: loop {
        if u == 0.0 {
            break Termination::Satisfied;
        }
        if history.len() >= opts.max_iterations {
            break Termination::MaxIterations;
        }
        let current = match model.take() {
            Some(m) => m,
            None => {
                if !affordable(2 * dim as u64) {
                    break Termination::Budget;
                }
                n_jacobians += 1;
                fd_jacobian(&counted, &x, Some(response.clone()), opts.sigma, lb, ub)?
            }
        };

        let iteration = history.len() + 1;
        let sol = solve_subproblem(&current, objective, lambda, lb, ub);
        let step_norm = normalized_distance(&sol.x, &x, lb, ub);
        let mut record = IterationRecord {
            iteration,
            outcome: StepOutcome::TooShort,
            candidate: sol.x.clone(),
            u_current: u,
            u_predicted: sol.predicted,
            u_candidate: None,
            gain_ratio: None,
            step_norm,
            backtracks: 0,
            lambda,
            lambda_next: lambda,
            evaluations: used(),
        };

        if step_norm < opts.eps_step {
            history.push(record);
            break Termination::StepTooSmall;
        }

        let mut accepted_change = None;
        let candidate = if u - sol.predicted <= 1e-14 {
            None
        } else if counted.admissible(&sol.x) {
            Some((sol.x, sol.predicted))
        } else {
            backtrack(&counted, &current, objective, &x, &sol.x, lb, ub, opts.eps_step, u).map(
                |(y, predicted, halvings)| {
                    record.backtracks = halvings;
                    record.candidate = y.clone();
                    record.u_predicted = predicted;
                    record.step_norm = normalized_distance(&y, &x, lb, ub);
                    (y, predicted)
                },
            )
        };
        if let Some((candidate, predicted)) = candidate {
            if !affordable(1) {
                break 'outer Termination::Budget;
            }
            let r_new = counted.evaluate(&candidate)?;
            n_candidates += 1;
            let u_new = objective.value(&r_new);
            let rho = (u_new - u) / (predicted - u);
            record.u_candidate = Some(u_new);
            record.gain_ratio = Some(rho);
            record.evaluations = used();
            lambda = update_radius(lambda, rho);
            if u_new < u {
                record.outcome = StepOutcome::Accepted;
                accepted_change = Some(u - u_new);
                x = candidate;
                response = r_new;
                u = u_new;
            } else {
                record.outcome = StepOutcome::Rejected;
            }
        } else {
            record.outcome = if u - sol.predicted <= 1e-14 {
                StepOutcome::Degenerate
            } else {
                StepOutcome::Inadmissible
            };
            lambda /= 3.0;
        }
        record.lambda_next = lambda;
        log::info!(
            "tr iter {iteration}: {:?} U {:.4} -> {} rho {} lambda {:.4} -> {:.4} evals {}",
            record.outcome,
            record.u_current,
            record
                .u_candidate
                .map_or("-".to_string(), |v| format!("{v:.4}")),
            record
                .gain_ratio
                .map_or("-".to_string(), |v| format!("{v:.3}")),
            record.lambda,
            record.lambda_next,
            used()
        );
        history.push(record);

        model = match (accepted_change.is_some(), opts.mode) {
            (false, _) => Some(current),
            (true, JacobianMode::Reset) => None,
            (true, JacobianMode::Static) => Some(current.reanchor(x.clone(), response.clone())),
        };
        if let Some(change) = accepted_change {
            if change < opts.eps_objective {
                break Termination::ObjectiveStalled;
            }
        }
        if lambda < opts.eps_radius {
            break Termination::RadiusTooSmall;
        }
    };

    Ok(TrResult {
        x,
        response,
        u,
        u_initial,
        history,
        termination,
        n_evaluations: used(),
        n_jacobians,
        n_candidates,
    })
}
