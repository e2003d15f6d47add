//! C interface to `topoforge`.
//!
//! Objects are exposed as opaque handles created by `*_new`-style functions
//! and released with the matching `*_free`. Every fallible function returns a
//! [`TfStatus`]; on failure a human-readable message is available from
//! [`tf_last_error`] on the same thread until the next failing call.
//! Panics never cross the boundary; they are reported as `TF_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use topoforge::classifier::{classify_curve, default_c_range, ClassifierSpec};
use topoforge::config::RunConfig;
use topoforge::geometry::{build_layout, DesignVector, FixedParams};
use topoforge::pipeline::run_full;
use topoforge::scaling::ScalingModel;
use topoforge::simbackend::{backend_from_spec, CostModel, Fidelity, FrequencyGrid, ResponseCurve, Simulator};
use topoforge::yieldmc::{estimate_yield_surrogate, Distribution, PerturbationSpec, YieldBand};
use topoforge::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDesign = 3,
    InfeasibleDesign = 4,
    Backend = 5,
    Io = 6,
    Parse = 7,
    Budget = 8,
    Numerical = 9,
    Internal = 10,
}

impl From<&Error> for TfStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidDesign(_) | Error::DegenerateOutline { .. } => TfStatus::InvalidDesign,
            Error::FeedOutsideOutline { .. }
            | Error::SelfIntersectingOutline
            | Error::FeedSamplingExhausted(_)
            | Error::InfeasibleDesign(_)
            | Error::InfeasiblePopulation(_) => TfStatus::InfeasibleDesign,
            Error::BackendFailure(_) => TfStatus::Backend,
            Error::Io { .. } => TfStatus::Io,
            Error::Parse(_) | Error::NonMonotoneFrequency { .. } | Error::Json(_) | Error::Csv(_) => {
                TfStatus::Parse
            }
            Error::BudgetExhausted(_) => TfStatus::Budget,
            Error::NoResonanceFound { .. }
            | Error::ResonanceTrackingLost { .. }
            | Error::RankDeficient(_)
            | Error::NonPositiveAlpha { .. }
            | Error::PerturbationOutOfBounds { .. } => TfStatus::Numerical,
            Error::Stage { source, .. } => TfStatus::from(source.as_ref()),
            _ => TfStatus::InvalidArgument,
        }
    }
}

/// Simulation fidelity.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfFidelity {
    Coarse = 0,
    Fine = 1,
}

impl From<TfFidelity> for Fidelity {
    fn from(f: TfFidelity) -> Self {
        match f {
            TfFidelity::Coarse => Fidelity::Coarse,
            TfFidelity::Fine => Fidelity::Fine,
        }
    }
}

/// Frequency sweep `[f_min, f_max]` GHz with `n_points` samples.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TfGrid {
    pub f_min: f64,
    pub f_max: f64,
    pub n_points: usize,
}

/// Classifier outcome.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TfVerdict {
    pub accepted: bool,
    /// Best scale (mm).
    pub c_star: f64,
    /// Margin at `c_star` (dB); accepted iff `<= 0`.
    pub u_q: f64,
}

/// Summary of a complete run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TfRunSummary {
    pub in_band_max_db: f64,
    pub meets_goal: bool,
    pub n_coarse: u64,
    pub n_fine: u64,
    pub fine_equivalent: f64,
    /// Achieved bandwidth; NaN when the band center misses the goal.
    pub bw_ghz: f64,
    pub bw_percent: f64,
}

/// Simulator with its own evaluation counter.
pub struct TfSimulator(Simulator);
/// Design vector `[c, rho_f, phi_f, rho_1..L, phi_1..L]`.
pub struct TfDesign(DesignVector);
/// Frequency-scaling model.
pub struct TfScalingModel(ScalingModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), (TfStatus, String)>) -> TfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            TfStatus::Internal
        }
    }
}

fn lift(e: Error) -> (TfStatus, String) {
    (TfStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (TfStatus, String) {
    (TfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (TfStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (TfStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (TfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (TfStatus::InvalidArgument, format!("{what}: {e}")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (TfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn grid_of(g: TfGrid) -> Result<FrequencyGrid, (TfStatus, String)> {
    FrequencyGrid::new(g.f_min, g.f_max, g.n_points).map_err(lift)
}

/// Message of the last failure on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn tf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version (static string).
#[no_mangle]
pub extern "C" fn tf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default sweep: 1-10 GHz, 451 points.
#[no_mangle]
pub extern "C" fn tf_grid_default() -> TfGrid {
    let g = FrequencyGrid::default();
    TfGrid {
        f_min: g.f_min,
        f_max: g.f_max,
        n_points: g.n_points,
    }
}

/// Creates a simulator from a backend spec (`"mock"` or `"tabulated:<dir>"`).
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_simulator_new(spec: *const c_char, out_sim: *mut *mut TfSimulator) -> TfStatus {
    guard(|| {
        let slot = out(out_sim, "out_sim")?;
        let backend = backend_from_spec(text(spec, "spec")?).map_err(lift)?;
        *slot = Box::into_raw(Box::new(TfSimulator(Simulator::new(backend, CostModel::default()))));
        Ok(())
    })
}

/// # Safety
/// `sim` must come from [`tf_simulator_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tf_simulator_free(sim: *mut TfSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Simulations performed so far, and their cost in fine-equivalent units.
///
/// # Safety
/// `sim` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_simulator_counts(
    sim: *const TfSimulator,
    n_coarse: *mut u64,
    n_fine: *mut u64,
    fine_equivalent: *mut f64,
) -> TfStatus {
    guard(|| {
        let s = &borrow(sim, "sim")?.0;
        let c = s.counts();
        *out(n_coarse, "n_coarse")? = c.n_coarse;
        *out(n_fine, "n_fine")? = c.n_fine;
        *out(fine_equivalent, "fine_equivalent")? = c.fine_equivalent(s.costs());
        Ok(())
    })
}

/// Builds a design from `len = 2L + 3` values.
///
/// # Safety
/// `values` must point to `len` doubles; `out_design` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_design_new(
    values: *const f64,
    len: usize,
    out_design: *mut *mut TfDesign,
) -> TfStatus {
    guard(|| {
        let slot = out(out_design, "out_design")?;
        let x = DesignVector::from_slice(slice(values, len, "values")?).map_err(lift)?;
        *slot = Box::into_raw(Box::new(TfDesign(x)));
        Ok(())
    })
}

/// Parses a whitespace- or comma-separated design vector.
///
/// # Safety
/// `text_in` must be NUL-terminated; `out_design` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_design_parse(text_in: *const c_char, out_design: *mut *mut TfDesign) -> TfStatus {
    guard(|| {
        let slot = out(out_design, "out_design")?;
        let x: DesignVector = text(text_in, "text")?.parse().map_err(lift)?;
        *slot = Box::into_raw(Box::new(TfDesign(x)));
        Ok(())
    })
}

/// # Safety
/// `design` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tf_design_free(design: *mut TfDesign) {
    if !design.is_null() {
        drop(Box::from_raw(design));
    }
}

/// Number of design parameters, or 0 for a null handle.
///
/// # Safety
/// `design` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tf_design_dim(design: *const TfDesign) -> usize {
    design.as_ref().map_or(0, |d| d.0.dim())
}

/// Copies the parameters into `buf` (`len` must equal the dimension).
///
/// # Safety
/// `buf` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tf_design_values(design: *const TfDesign, buf: *mut f64, len: usize) -> TfStatus {
    guard(|| {
        let v = borrow(design, "design")?.0.to_vec();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len != v.len() {
            return Err((
                TfStatus::InvalidArgument,
                format!("buffer holds {len} values, design has {}", v.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&v);
        Ok(())
    })
}

/// Checks the layout (simple outline, feed clearance). `feasible` receives the
/// verdict; the status is `TF_STATUS_OK` either way.
///
/// # Safety
/// `design` must be live; `feasible` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_design_is_feasible(design: *const TfDesign, feasible: *mut bool) -> TfStatus {
    guard(|| {
        let x = &borrow(design, "design")?.0;
        *out(feasible, "feasible")? = build_layout(x, &FixedParams::default()).is_ok();
        Ok(())
    })
}

/// Simulates `design` and writes `grid.n_points` reflection values (dB) to `values`.
///
/// # Safety
/// Handles must be live; `values` must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tf_simulate(
    sim: *const TfSimulator,
    design: *const TfDesign,
    grid: TfGrid,
    fidelity: TfFidelity,
    values: *mut f64,
    len: usize,
) -> TfStatus {
    guard(|| {
        let s = &borrow(sim, "sim")?.0;
        let x = &borrow(design, "design")?.0;
        let g = grid_of(grid)?;
        if values.is_null() {
            return Err(null("values"));
        }
        if len != g.n_points {
            return Err((
                TfStatus::InvalidArgument,
                format!("buffer holds {len} values, grid has {}", g.n_points),
            ));
        }
        let curve = s.evaluate(x, &g, fidelity.into()).map_err(lift)?;
        std::slice::from_raw_parts_mut(values, len).copy_from_slice(&curve.values);
        Ok(())
    })
}

/// Scaling model `alpha(c) = b0 c^2 + b1 c + b2` with reference scale `c0`.
///
/// # Safety
/// `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_scaling_model_new(
    b0: f64,
    b1: f64,
    b2: f64,
    c0: f64,
    out_model: *mut *mut TfScalingModel,
) -> TfStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        if ![b0, b1, b2, c0].iter().all(|v| v.is_finite()) || c0 <= 0.0 {
            return Err((TfStatus::InvalidArgument, "non-finite coefficients or c0 <= 0".into()));
        }
        *slot = Box::into_raw(Box::new(TfScalingModel(ScalingModel::from_beta([b0, b1, b2], c0))));
        Ok(())
    })
}

/// Loads a scaling model stored as TOML.
///
/// # Safety
/// `path` must be NUL-terminated; `out_model` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_scaling_model_load(path: *const c_char, out_model: *mut *mut TfScalingModel) -> TfStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        let m = ScalingModel::load(text(path, "path")?.as_ref()).map_err(lift)?;
        *slot = Box::into_raw(Box::new(TfScalingModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tf_scaling_model_free(model: *mut TfScalingModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Evaluates `alpha(c)`.
///
/// # Safety
/// `model` must be live; `alpha` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_scaling_model_alpha(model: *const TfScalingModel, c: f64, alpha: *mut f64) -> TfStatus {
    guard(|| {
        let m = &borrow(model, "model")?.0;
        *out(alpha, "alpha")? = m.checked_alpha(c).map_err(lift)?;
        Ok(())
    })
}

/// Classifies a coarse response simulated at scale `c_from` for the band
/// `[f_low, f_high]` GHz and threshold `e_t` dB.
///
/// # Safety
/// `values` must hold `grid.n_points` doubles; handles live; `verdict` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_classify(
    model: *const TfScalingModel,
    values: *const f64,
    grid: TfGrid,
    c_from: f64,
    e_t: f64,
    f_low: f64,
    f_high: f64,
    verdict: *mut TfVerdict,
) -> TfStatus {
    guard(|| {
        let m = &borrow(model, "model")?.0;
        let g = grid_of(grid)?;
        let curve = ResponseCurve::new(g, slice(values, g.n_points, "values")?.to_vec()).map_err(lift)?;
        let spec = ClassifierSpec::new(e_t, f_low, f_high).map_err(lift)?;
        let v = classify_curve(&curve, c_from, m, &spec, default_c_range(m.c0)).map_err(lift)?;
        *out(verdict, "verdict")? = TfVerdict {
            accepted: v.accepted,
            c_star: v.c_star,
            u_q: v.u_q,
        };
        Ok(())
    })
}

/// Surrogate-assisted yield of `design` at fine fidelity.
/// `gaussian` selects N(`spread_a`, `spread_b`) mm, otherwise U(-`spread_a`, `spread_a`) mm.
///
/// # Safety
/// Handles live; `yield_out` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_yield_surrogate(
    sim: *const TfSimulator,
    design: *const TfDesign,
    gaussian: bool,
    spread_a: f64,
    spread_b: f64,
    n_samples: usize,
    seed: u64,
    f_low: f64,
    f_high: f64,
    r_goal: f64,
    yield_out: *mut f64,
) -> TfStatus {
    guard(|| {
        let s = &borrow(sim, "sim")?.0;
        let x = &borrow(design, "design")?.0;
        let dist = if gaussian {
            Distribution::Gaussian {
                mean: spread_a,
                stdev: spread_b,
            }
        } else {
            Distribution::Uniform { max_dev: spread_a }
        };
        let est = estimate_yield_surrogate(
            s,
            x,
            &PerturbationSpec::new(dist, n_samples, seed),
            &YieldBand { f_low, f_high, r_goal },
            &FrequencyGrid::default(),
            Fidelity::Fine,
            0.02,
            None,
        )
        .map_err(lift)?;
        *out(yield_out, "yield_out")? = est.y;
        Ok(())
    })
}

/// Runs the complete flow for a TOML configuration (empty string: defaults).
///
/// # Safety
/// `config_toml` must be NUL-terminated; `summary` writable.
#[no_mangle]
pub unsafe extern "C" fn tf_run(config_toml: *const c_char, summary: *mut TfRunSummary) -> TfStatus {
    guard(|| {
        let slot = out(summary, "summary")?;
        let cfg = RunConfig::from_toml(text(config_toml, "config_toml")?).map_err(lift)?;
        let r = run_full(&cfg).map_err(lift)?;
        *slot = TfRunSummary {
            in_band_max_db: r.in_band_max_db,
            meets_goal: r.meets_goal,
            n_coarse: r.costs.total.n_coarse,
            n_fine: r.costs.total.n_fine,
            fine_equivalent: r.costs.fine_equivalent,
            bw_ghz: r.bandwidth.map_or(f64::NAN, |b| b.bw_ghz),
            bw_percent: r.bandwidth.map_or(f64::NAN, |b| b.bw_percent),
        };
        Ok(())
    })
}
