//! Frequency-scaling surrogate.
//!
//! Resizing a design from `c0` to `c` moves its resonances by a factor that is
//! modelled as a quadratic `alpha(c) = b0 c^2 + b1 c + b2`. The fit uses
//! resonance ratios `r(c0) / r(c)` tracked on a few training designs. A stored
//! response can then be moved to any other scale by remapping its frequency
//! axis without simulating again.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{random_design, scale_design, DesignVector, FixedParams, GenerationRanges};
use crate::simbackend::{extract_resonances, Fidelity, FrequencyGrid, ResponseCurve, Simulator};

/// Dips shallower than this are ignored when tracking resonances.
pub const TRACKING_THRESHOLD_DB: f64 = -3.0;
/// A tracked dip may deviate this much (relative) from its predicted position.
pub const TRACKING_TOLERANCE: f64 = 0.15;

/// One training observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSample {
    pub design: usize,
    pub c: f64,
    /// Tracked resonance (GHz).
    pub resonance_ghz: f64,
    /// `r(c0) / r(c)`.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingModel {
    /// `[b0, b1, b2]`.
    pub beta: [f64; 3],
    pub c0: f64,
    /// Scale offsets relative to `c0`; the first entry is 0.
    pub delta: Vec<f64>,
    /// Sum of squared fit residuals.
    pub residual: f64,
    #[serde(default)]
    pub samples: Vec<ScalingSample>,
}

impl ScalingModel {
    /// A model with known coefficients (no training data).
    pub fn from_beta(beta: [f64; 3], c0: f64) -> Self {
        Self {
            beta,
            c0,
            delta: Vec::new(),
            residual: 0.0,
            samples: Vec::new(),
        }
    }

    /// The ideal `alpha = c / c0`.
    pub fn proportional(c0: f64) -> Self {
        Self::from_beta([0.0, 1.0 / c0, 0.0], c0)
    }

    pub fn alpha(&self, c: f64) -> f64 {
        let [b0, b1, b2] = self.beta;
        (b0 * c + b1) * c + b2
    }

    pub fn checked_alpha(&self, c: f64) -> Result<f64> {
        let alpha = self.alpha(c);
        if alpha > 0.0 && alpha.is_finite() {
            Ok(alpha)
        } else {
            Err(Error::NonPositiveAlpha { c, alpha })
        }
    }

    /// Frequency multiplier taking a response simulated at `c_from` to `c_to`.
    pub fn relative_alpha(&self, c_from: f64, c_to: f64) -> Result<f64> {
        Ok(self.checked_alpha(c_to)? / self.checked_alpha(c_from)?)
    }

    /// Response at `c_new` predicted from `curve`, simulated at `c_from`.
    pub fn shifted_response(
        &self,
        curve: &ResponseCurve,
        c_from: f64,
        c_new: f64,
    ) -> Result<ShiftedResponse> {
        Ok(shift_curve(curve, self.relative_alpha(c_from, c_new)?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize scaling model: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedResponse {
    pub curve: ResponseCurve,
    /// `false` where the remapped frequency fell outside the stored sweep.
    pub in_support: Vec<bool>,
}

/// Remaps the frequency axis: the output at `f` is the input at `alpha * f`.
pub fn shift_curve(curve: &ResponseCurve, alpha: f64) -> ShiftedResponse {
    let (values, in_support) = curve
        .grid
        .frequencies()
        .into_iter()
        .map(|f| curve.interpolate(alpha * f))
        .unzip();
    ShiftedResponse {
        curve: ResponseCurve {
            grid: curve.grid,
            values,
        },
        in_support,
    }
}

/// Sum of squared residuals of `beta` on `(c, alpha)` points.
pub fn sum_squared_residual(beta: [f64; 3], points: &[(f64, f64)]) -> f64 {
    points
        .iter()
        .map(|&(c, a)| {
            let r = (beta[0] * c + beta[1]) * c + beta[2] - a;
            r * r
        })
        .sum()
}

/// Least-squares quadratic through `(c, alpha)` points.
///
/// The normal equations are solved in centered, scaled coordinates and the
/// coefficients converted back, which keeps the system well conditioned.
pub fn fit_quadratic(points: &[(f64, f64)]) -> Result<[f64; 3]> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::RankDeficient(distinct.len()));
    }
    let center = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let scale = points
        .iter()
        .map(|p| (p.0 - center).abs())
        .fold(0.0, f64::max);

    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for &(c, a) in points {
        let t = (c - center) / scale;
        let row = Vector3::new(t * t, t, 1.0);
        ata += row * row.transpose();
        atb += row * a;
    }
    let coef = ata
        .cholesky()
        .ok_or(Error::RankDeficient(distinct.len()))?
        .solve(&atb);
    let (q, l, k) = (coef[0], coef[1], coef[2]);
    let s2 = scale * scale;
    Ok([
        q / s2,
        -2.0 * q * center / s2 + l / scale,
        q * center * center / s2 - l * center / scale + k,
    ])
}

/// Deepest dip of the whole sweep.
fn reference_resonance(curve: &ResponseCurve) -> Option<f64> {
    extract_resonances(curve, TRACKING_THRESHOLD_DB)
        .ok()?
        .into_iter()
        .min_by(|a, b| a.depth_db.total_cmp(&b.depth_db))
        .map(|r| r.freq_ghz)
}

/// Dip nearest to `predicted`, if within [`TRACKING_TOLERANCE`].
fn track_resonance(curve: &ResponseCurve, predicted: f64) -> Option<f64> {
    extract_resonances(curve, TRACKING_THRESHOLD_DB)
        .ok()?
        .into_iter()
        .map(|r| r.freq_ghz)
        .min_by(|a, b| (a - predicted).abs().total_cmp(&(b - predicted).abs()))
        .filter(|r| (r - predicted).abs() <= TRACKING_TOLERANCE * predicted)
}

/// Fits the scaling model on `designs`, each resized to every entry of
/// `c_values` (the first entry is the reference scale `c0`). Costs
/// `designs.len() * c_values.len()` coarse simulations.
pub fn fit_beta(
    designs: &[DesignVector],
    c_values: &[f64],
    sim: &Simulator,
    grid: &FrequencyGrid,
) -> Result<ScalingModel> {
    if designs.is_empty() {
        return Err(Error::Config("scaling fit needs at least one design".into()));
    }
    let Some(&c0) = c_values.first() else {
        return Err(Error::RankDeficient(0));
    };
    let mut distinct = c_values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::RankDeficient(distinct.len()));
    }

    let jobs: Vec<(usize, f64)> = (0..designs.len())
        .flat_map(|t| c_values.iter().map(move |&c| (t, c)))
        .collect();
    let curves = jobs
        .par_iter()
        .map(|&(t, c)| sim.evaluate(&scale_design(&designs[t], c), grid, Fidelity::Coarse))
        .collect::<Result<Vec<_>>>()?;

    let mut samples = Vec::with_capacity(jobs.len());
    for (t, row) in curves.chunks(c_values.len()).enumerate() {
        let r0 = reference_resonance(&row[0])
            .ok_or(Error::ResonanceTrackingLost { design: t, c: c0 })?;
        for (curve, &c) in row.iter().zip(c_values) {
            let r = if c == c0 {
                r0
            } else {
                track_resonance(curve, r0 * c0 / c)
                    .ok_or(Error::ResonanceTrackingLost { design: t, c })?
            };
            samples.push(ScalingSample {
                design: t,
                c,
                resonance_ghz: r,
                alpha: r0 / r,
            });
        }
    }

    let points: Vec<(f64, f64)> = samples.iter().map(|s| (s.c, s.alpha)).collect();
    let beta = fit_quadratic(&points)?;
    let model = ScalingModel {
        beta,
        c0,
        delta: c_values.iter().map(|c| c - c0).collect(),
        residual: sum_squared_residual(beta, &points),
        samples,
    };
    log::info!(
        "scaling fit: beta = [{:.3e}, {:.5}, {:.4}], residual {:.2e}",
        model.beta[0],
        model.beta[1],
        model.beta[2],
        model.residual
    );
    Ok(model)
}

/// Fits on `n_designs` random designs drawn at `c_values[0]`, replacing any
/// design whose resonance cannot be tracked. Screening costs simulations too.
pub fn fit_from_random<R: Rng + ?Sized>(
    rng: &mut R,
    n_designs: usize,
    c_values: &[f64],
    outline_len: usize,
    sim: &Simulator,
    grid: &FrequencyGrid,
) -> Result<ScalingModel> {
    let fixed = FixedParams::default();
    let ranges = GenerationRanges {
        c0: c_values.first().copied().unwrap_or(30.0),
        ..GenerationRanges::default()
    };
    let max_attempts = 20 * n_designs.max(1);
    let mut accepted = Vec::new();
    let mut attempts = 0;
    while accepted.len() < n_designs {
        if attempts >= max_attempts {
            return Err(Error::ResonanceTrackingLost {
                design: attempts,
                c: c_values.first().copied().unwrap_or(f64::NAN),
            });
        }
        attempts += 1;
        let x = random_design(rng, outline_len, &ranges, &fixed)?;
        match fit_beta(std::slice::from_ref(&x), c_values, sim, grid) {
            Ok(_) => accepted.push(x),
            Err(Error::ResonanceTrackingLost { .. }) => {
                log::debug!("scaling fit: resonance not trackable, drawing another design")
            }
            Err(Error::RankDeficient(_)) => {}
            Err(e) => return Err(e),
        }
    }
    // Per-design fits above only screen; the final fit stacks all designs.
    fit_beta(&accepted, c_values, sim, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simbackend::FrequencyGrid;

    #[test]
    fn exact_interpolation_of_three_points() {
        let pts: Vec<_> = [30.0, 25.0, 45.0].iter().map(|&c| (c, c / 30.0)).collect();
        let b = fit_quadratic(&pts).unwrap();
        assert!(b[0].abs() < 1e-10);
        assert!((b[1] - 1.0 / 30.0).abs() < 1e-10);
        assert!(b[2].abs() < 1e-10);
    }

    #[test]
    fn constant_data_gives_constant_fit() {
        let pts: Vec<_> = [30.0, 25.0, 45.0].iter().map(|&c| (c, 1.0)).collect();
        let b = fit_quadratic(&pts).unwrap();
        assert!(b[0].abs() < 1e-12 && b[1].abs() < 1e-12);
        assert!((b[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_scales_are_rank_deficient() {
        let pts = [(30.0, 1.0), (25.0, 0.8), (30.0, 1.0)];
        assert!(matches!(fit_quadratic(&pts), Err(Error::RankDeficient(2))));
    }

    #[test]
    fn alpha_values() {
        let m = ScalingModel::proportional(30.0);
        assert!((m.alpha(30.0) - 1.0).abs() < 1e-15);
        assert!((m.alpha(45.0) - 1.5).abs() < 1e-15);
        let reported = ScalingModel::from_beta([-1e-4, 0.037, -0.047], 30.0);
        assert!((reported.alpha(30.0) - 0.973).abs() < 1e-12);
        let bad = ScalingModel::from_beta([0.0, 0.0, -1.0], 30.0);
        assert!(matches!(bad.checked_alpha(30.0), Err(Error::NonPositiveAlpha { .. })));
    }

    fn dip_curve(f0: f64) -> ResponseCurve {
        let grid = FrequencyGrid::default();
        let values = grid
            .frequencies()
            .iter()
            .map(|f| -20.0 * 0.01 / ((f - f0).powi(2) + 0.01))
            .collect();
        ResponseCurve::new(grid, values).unwrap()
    }

    #[test]
    fn unit_alpha_is_identity() {
        let c = dip_curve(6.0);
        let s = shift_curve(&c, 1.0);
        assert_eq!(s.curve, c);
        assert!(s.in_support.iter().all(|&b| b));
    }

    #[test]
    fn dip_moves_to_r_over_alpha() {
        let s = shift_curve(&dip_curve(7.5), 1.5);
        assert!((s.curve.argmin_freq() - 5.0).abs() <= s.curve.grid.step());
        // 1.5 * f leaves the sweep above 6.67 GHz.
        assert!(!s.in_support[s.curve.grid.n_points - 1]);
        assert!(s.in_support[0]);
    }

    #[test]
    fn model_round_trips_through_toml() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scaling.toml");
        let mut m = ScalingModel::from_beta([-1e-4, 0.037, -0.047], 30.0);
        m.delta = vec![0.0, -5.0, 15.0];
        m.save(&path).unwrap();
        assert_eq!(ScalingModel::load(&path).unwrap(), m);
    }
}
