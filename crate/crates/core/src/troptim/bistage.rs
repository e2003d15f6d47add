use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{Bounds, DesignVector};
use crate::simbackend::{EvalCount, Fidelity, FrequencyGrid, ResponseCurve, Simulator};

use super::{
    tr_optimize, BandObjective, DesignProblem, IterationRecord, JacobianMode, Termination,
    TrOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiStageOptions {
    pub sigma: f64,
    pub lambda0: f64,
    pub coarse_max_iterations: usize,
    /// Coarse simulations allowed for the whole coarse stage.
    pub coarse_max_evaluations: Option<u64>,
    pub fine_max_iterations: usize,
    pub fine_max_evaluations: Option<u64>,
}

impl Default for BiStageOptions {
    fn default() -> Self {
        Self {
            sigma: 0.02,
            lambda0: 1.0,
            coarse_max_iterations: 100,
            coarse_max_evaluations: None,
            fine_max_iterations: 10,
            fine_max_evaluations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub fidelity: Fidelity,
    pub sigma: f64,
    pub mode: JacobianMode,
    pub x_start: Vec<f64>,
    pub x_end: Vec<f64>,
    pub u_start: f64,
    pub u_end: f64,
    /// Worst in-band reflection at the end point (dB).
    pub worst_db: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub n_jacobians: usize,
    pub n_candidates: usize,
    pub counts: EvalCount,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiStageReport {
    pub stages: Vec<StageReport>,
    pub sigma_halved: bool,
    pub x_coarse: DesignVector,
    pub coarse_curve: ResponseCurve,
    pub x_fine: DesignVector,
    pub fine_curve: ResponseCurve,
    pub counts: EvalCount,
    pub fine_equivalent: f64,
}

impl BiStageReport {
    pub fn fine_u(&self) -> f64 {
        self.stages.last().map_or(f64::NAN, |s| s.u_end)
    }

    pub fn fine_worst_db(&self) -> f64 {
        self.stages.last().map_or(f64::NAN, |s| s.worst_db)
    }
}

#[allow(clippy::too_many_arguments)]
fn run_stage(
    name: &str,
    sim: &Simulator,
    grid: &FrequencyGrid,
    fidelity: Fidelity,
    x0: &[f64],
    initial: Option<Vec<f64>>,
    bounds: &Bounds,
    band: &BandObjective,
    opts: &TrOptions,
) -> Result<(StageReport, Vec<f64>)> {
    let before = sim.counts();
    let problem = DesignProblem::new(sim, *grid, fidelity, x0.len());
    let hinge = band.hinge(grid)?;
    let res = tr_optimize(
        &problem,
        x0,
        initial,
        &bounds.lower_vec(),
        &bounds.upper_vec(),
        &hinge,
        opts,
    )?;
    let report = StageReport {
        name: name.to_string(),
        fidelity,
        sigma: opts.sigma,
        mode: opts.mode,
        x_start: x0.to_vec(),
        x_end: res.x.clone(),
        u_start: res.u_initial,
        u_end: res.u,
        worst_db: hinge.worst(&res.response),
        termination: res.termination,
        iterations: res.history.len(),
        n_jacobians: res.n_jacobians,
        n_candidates: res.n_candidates,
        counts: sim.counts().since(&before),
        history: res.history,
    };
    log::info!(
        "{name} stage: U {:.4} -> {:.4}, worst in-band {:.2} dB, {} iterations, {:?}",
        report.u_start,
        report.u_end,
        report.worst_db,
        report.iterations,
        report.termination
    );
    Ok((report, res.response))
}

/// Coarse optimization with a fresh Jacobian per iterate (repeated once with
/// half the finite-difference step if the result still misses the
/// specification), then a short fine-model refinement with a single Jacobian.
pub fn bi_stage_optimize(
    sim: &Simulator,
    x0: &DesignVector,
    x0_coarse: Option<&ResponseCurve>,
    bounds: &Bounds,
    band: &BandObjective,
    grid: &FrequencyGrid,
    opts: &BiStageOptions,
) -> Result<BiStageReport> {
    let start = sim.counts();
    let coarse_opts = TrOptions {
        lambda0: opts.lambda0,
        sigma: opts.sigma,
        mode: JacobianMode::Reset,
        max_iterations: opts.coarse_max_iterations,
        max_evaluations: opts.coarse_max_evaluations,
        ..TrOptions::default()
    };
    let (first, mut coarse_response) = run_stage(
        "coarse",
        sim,
        grid,
        Fidelity::Coarse,
        &x0.to_vec(),
        x0_coarse.map(|c| c.values.clone()),
        bounds,
        band,
        &coarse_opts,
    )
    .map_err(|e| e.in_stage("coarse"))?;
    let mut x_c = first.x_end.clone();
    let mut stages = vec![first];

    let sigma_halved = stages[0].worst_db > band.r_goal;
    if sigma_halved {
        let spent = sim.counts().since(&start).total();
        let refine_opts = TrOptions {
            sigma: opts.sigma / 2.0,
            max_evaluations: opts
                .coarse_max_evaluations
                .map(|cap| cap.saturating_sub(spent)),
            ..coarse_opts
        };
        let (refine, response) = run_stage(
            "coarse-refine",
            sim,
            grid,
            Fidelity::Coarse,
            &x_c,
            Some(coarse_response),
            bounds,
            band,
            &refine_opts,
        )
        .map_err(|e| e.in_stage("coarse refinement"))?;
        x_c = refine.x_end.clone();
        coarse_response = response;
        stages.push(refine);
    }

    let fine_opts = TrOptions {
        lambda0: opts.lambda0,
        sigma: opts.sigma,
        max_iterations: opts.fine_max_iterations,
        max_evaluations: opts.fine_max_evaluations,
        ..TrOptions::static_jacobian()
    };
    let (fine, fine_response) = run_stage(
        "fine",
        sim,
        grid,
        Fidelity::Fine,
        &x_c,
        None,
        bounds,
        band,
        &fine_opts,
    )
    .map_err(|e| e.in_stage("fine"))?;
    let x_fine = DesignVector::from_slice(&fine.x_end)?;
    stages.push(fine);

    let counts = sim.counts().since(&start);
    Ok(BiStageReport {
        stages,
        sigma_halved,
        x_coarse: DesignVector::from_slice(&x_c)?,
        coarse_curve: ResponseCurve::new(*grid, coarse_response)?,
        x_fine,
        fine_curve: ResponseCurve::new(*grid, fine_response)?,
        counts,
        fine_equivalent: counts.fine_equivalent(sim.costs()),
    })
}
