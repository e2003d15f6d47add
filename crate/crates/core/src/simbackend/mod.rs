//! Variable-fidelity simulation interface.
//!
//! A [`SimBackend`] turns a design into a reflection curve. The [`Simulator`]
//! wraps a backend with an [`EvalCounter`] so that every evaluation is
//! accounted for by fidelity.

mod curve_io;
mod mock;
mod tabulated;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DesignVector;

pub use curve_io::{load_curve, load_tabulated, save_curve, TabulatedCurve};
pub use mock::MockEm;
pub use tabulated::TabulatedBackend;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub f_min: f64,
    pub f_max: f64,
    pub n_points: usize,
}

impl FrequencyGrid {
    pub fn new(f_min: f64, f_max: f64, n_points: usize) -> Result<Self> {
        let grid = Self {
            f_min,
            f_max,
            n_points,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_min.is_finite() && self.f_max.is_finite()) || self.f_min >= self.f_max {
            return Err(Error::InvalidGrid(format!(
                "need f_min < f_max, got [{}, {}]",
                self.f_min, self.f_max
            )));
        }
        if self.n_points < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.f_max - self.f_min) / (self.n_points - 1) as f64
    }

    pub fn freq(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.f_max
        } else {
            self.f_min + i as f64 * self.step()
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.freq(i)).collect()
    }

    /// Indices of samples with `f_low <= f <= f_high`.
    pub fn band_indices(&self, f_low: f64, f_high: f64) -> Result<Vec<usize>> {
        let outside = Error::BandOutsideGrid {
            f_low,
            f_high,
            f_min: self.f_min,
            f_max: self.f_max,
        };
        if f_low > f_high || f_low < self.f_min || f_high > self.f_max {
            return Err(outside);
        }
        // Tolerate round-off on band edges that coincide with grid samples.
        let tol = 1e-9 * self.step();
        let idx: Vec<usize> = (0..self.n_points)
            .filter(|&i| {
                let f = self.freq(i);
                f >= f_low - tol && f <= f_high + tol
            })
            .collect();
        if idx.is_empty() {
            return Err(outside);
        }
        Ok(idx)
    }
}

impl Default for FrequencyGrid {
    /// 1-10 GHz in 20 MHz steps.
    fn default() -> Self {
        Self {
            f_min: 1.0,
            f_max: 10.0,
            n_points: 451,
        }
    }
}

/// Reflection magnitude in dB sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
}

impl ResponseCurve {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n_points {
            return Err(Error::InvalidCurve(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.n_points
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v > 0.0) {
            return Err(Error::InvalidCurve(format!(
                "reflection {v} dB is not a finite non-positive value"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Linear interpolation at `f`; outside the sweep the boundary sample is
    /// returned together with `false`.
    pub fn interpolate(&self, f: f64) -> (f64, bool) {
        let g = &self.grid;
        if f <= g.f_min {
            return (self.values[0], f == g.f_min);
        }
        if f >= g.f_max {
            return (self.values[g.n_points - 1], f == g.f_max);
        }
        let pos = (f - g.f_min) / g.step();
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 {
            return (self.values[nearest as usize], true);
        }
        let i = (pos.floor() as usize).min(g.n_points - 2);
        let t = pos - i as f64;
        (
            self.values[i] + t * (self.values[i + 1] - self.values[i]),
            true,
        )
    }

    pub fn max_in_band(&self, f_low: f64, f_high: f64) -> Result<f64> {
        Ok(self
            .grid
            .band_indices(f_low, f_high)?
            .into_iter()
            .map(|i| self.values[i])
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Frequency of the deepest sample.
    pub fn argmin_freq(&self) -> f64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| {
                if v < bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
        self.grid.freq(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    Coarse,
    Fine,
}

impl fmt::Display for Fidelity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fidelity::Coarse => "coarse",
            Fidelity::Fine => "fine",
        })
    }
}

/// Nominal wall time per evaluation, used for fine-equivalent accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub coarse_s: f64,
    pub fine_s: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            coarse_s: 60.0,
            fine_s: 110.0,
        }
    }
}

impl CostModel {
    pub fn cost_s(&self, fidelity: Fidelity) -> f64 {
        match fidelity {
            Fidelity::Coarse => self.coarse_s,
            Fidelity::Fine => self.fine_s,
        }
    }
}

/// Snapshot of evaluation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCount {
    pub n_coarse: u64,
    pub n_fine: u64,
}

impl EvalCount {
    /// `n_coarse * coarse_s / fine_s + n_fine`.
    pub fn fine_equivalent(&self, costs: &CostModel) -> f64 {
        self.n_coarse as f64 * costs.coarse_s / costs.fine_s + self.n_fine as f64
    }

    pub fn coarse_equivalent(&self, costs: &CostModel) -> f64 {
        self.n_coarse as f64 + self.n_fine as f64 * costs.fine_s / costs.coarse_s
    }

    pub fn total(&self) -> u64 {
        self.n_coarse + self.n_fine
    }

    pub fn since(&self, earlier: &EvalCount) -> EvalCount {
        EvalCount {
            n_coarse: self.n_coarse - earlier.n_coarse,
            n_fine: self.n_fine - earlier.n_fine,
        }
    }
}

impl std::ops::Add for EvalCount {
    type Output = EvalCount;

    fn add(self, rhs: EvalCount) -> EvalCount {
        EvalCount {
            n_coarse: self.n_coarse + rhs.n_coarse,
            n_fine: self.n_fine + rhs.n_fine,
        }
    }
}

#[derive(Debug, Default)]
pub struct EvalCounter {
    coarse: AtomicU64,
    fine: AtomicU64,
}

impl EvalCounter {
    pub fn record(&self, fidelity: Fidelity) -> u64 {
        let slot = match fidelity {
            Fidelity::Coarse => &self.coarse,
            Fidelity::Fine => &self.fine,
        };
        slot.fetch_add(1, Ordering::SeqCst) + 1
    }

    pub fn snapshot(&self) -> EvalCount {
        EvalCount {
            n_coarse: self.coarse.load(Ordering::SeqCst),
            n_fine: self.fine.load(Ordering::SeqCst),
        }
    }
}

/// A simulation model of the antenna. Implementations must be pure functions
/// of their inputs and safe to call from several threads.
pub trait SimBackend: Send + Sync {
    fn name(&self) -> String;

    fn simulate(
        &self,
        x: &DesignVector,
        grid: &FrequencyGrid,
        fidelity: Fidelity,
    ) -> Result<ResponseCurve>;
}

/// Counted access to a backend.
#[derive(Clone)]
pub struct Simulator {
    backend: Arc<dyn SimBackend>,
    counter: Arc<EvalCounter>,
    costs: CostModel,
}

impl fmt::Debug for Simulator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Simulator")
            .field("backend", &self.backend.name())
            .field("counts", &self.counter.snapshot())
            .field("costs", &self.costs)
            .finish()
    }
}

impl Simulator {
    pub fn new(backend: Arc<dyn SimBackend>, costs: CostModel) -> Self {
        Self {
            backend,
            counter: Arc::new(EvalCounter::default()),
            costs,
        }
    }

    pub fn mock() -> Self {
        Self::new(Arc::new(MockEm::default()), CostModel::default())
    }

    /// Same backend, independent counter.
    pub fn with_fresh_counter(&self) -> Self {
        Self::new(self.backend.clone(), self.costs)
    }

    pub fn backend_name(&self) -> String {
        self.backend.name()
    }

    pub fn costs(&self) -> &CostModel {
        &self.costs
    }

    pub fn counts(&self) -> EvalCount {
        self.counter.snapshot()
    }

    pub fn fine_equivalent(&self) -> f64 {
        self.counts().fine_equivalent(&self.costs)
    }

    pub fn evaluate(
        &self,
        x: &DesignVector,
        grid: &FrequencyGrid,
        fidelity: Fidelity,
    ) -> Result<ResponseCurve> {
        x.validate()
            .map_err(|e| Error::InfeasibleDesign(e.to_string()))?;
        grid.validate()?;
        let curve = self.backend.simulate(x, grid, fidelity)?;
        let n = self.counter.record(fidelity);
        log::debug!(
            target: "topoforge::sim",
            "sim fidelity={fidelity} n_{fidelity}={n} c={:.4} backend={}",
            x.c,
            self.backend.name()
        );
        Ok(curve)
    }
}

/// Backend selection string: `mock` or `tabulated:<dir>`.
pub fn backend_from_spec(spec: &str) -> Result<Arc<dyn SimBackend>> {
    let spec = spec.trim();
    if spec == "mock" {
        return Ok(Arc::new(MockEm::default()));
    }
    if let Some(dir) = spec.strip_prefix("tabulated:") {
        return Ok(Arc::new(TabulatedBackend::new(dir)?));
    }
    Err(Error::Config(format!(
        "unknown backend {spec:?} (expected \"mock\" or \"tabulated:<dir>\")"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub freq_ghz: f64,
    pub depth_db: f64,
}

/// Local minima at or below `threshold_db`, refined by a parabola through the
/// three neighbouring samples and sorted by frequency.
pub fn extract_resonances(curve: &ResponseCurve, threshold_db: f64) -> Result<Vec<Resonance>> {
    let v = &curve.values;
    let step = curve.grid.step();
    let mut out = Vec::new();
    for i in 1..v.len().saturating_sub(1) {
        let (l, m, r) = (v[i - 1], v[i], v[i + 1]);
        if !(m <= l && m < r) || m > threshold_db {
            continue;
        }
        let denom = l - 2.0 * m + r;
        let offset = if denom > 0.0 {
            (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        out.push(Resonance {
            freq_ghz: curve.grid.freq(i) + offset * step,
            depth_db: m - 0.25 * (l - r) * offset,
        });
    }
    if out.is_empty() {
        return Err(Error::NoResonanceFound { threshold_db });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentz(grid: FrequencyGrid, dips: &[(f64, f64, f64)]) -> ResponseCurve {
        let values = grid
            .frequencies()
            .iter()
            .map(|f| {
                -dips
                    .iter()
                    .map(|(f0, d, b)| d * b * b / ((f - f0).powi(2) + b * b))
                    .sum::<f64>()
            })
            .collect();
        ResponseCurve::new(grid, values).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(FrequencyGrid::new(2.0, 1.0, 10).is_err());
        assert!(FrequencyGrid::new(1.0, 2.0, 1).is_err());
        let g = FrequencyGrid::default();
        assert!((g.step() - 0.02).abs() < 1e-15);
        assert_eq!(g.freq(450), 10.0);
        assert_eq!(g.band_indices(5.0, 6.0).unwrap().len(), 51);
        assert!(matches!(
            g.band_indices(9.0, 11.0),
            Err(Error::BandOutsideGrid { .. })
        ));
    }

    #[test]
    fn single_dip_is_located() {
        let grid = FrequencyGrid::default();
        let curve = lorentz(grid, &[(5.0, 20.0, 0.1)]);
        let res = extract_resonances(&curve, -3.0).unwrap();
        assert_eq!(res.len(), 1);
        assert!((res[0].freq_ghz - 5.0).abs() <= grid.step() / 2.0);
        assert!((res[0].depth_db + 20.0).abs() < 0.5);
    }

    #[test]
    fn two_dips_in_order() {
        let curve = lorentz(FrequencyGrid::default(), &[(7.0, 15.0, 0.1), (4.0, 12.0, 0.1)]);
        let res = extract_resonances(&curve, -3.0).unwrap();
        assert_eq!(res.len(), 2);
        assert!((res[0].freq_ghz - 4.0).abs() < 0.01);
        assert!((res[1].freq_ghz - 7.0).abs() < 0.01);
    }

    #[test]
    fn flat_curve_has_no_resonance() {
        let grid = FrequencyGrid::default();
        let curve = ResponseCurve::new(grid, vec![-1.0; grid.n_points]).unwrap();
        assert!(matches!(
            extract_resonances(&curve, -5.0),
            Err(Error::NoResonanceFound { .. })
        ));
    }

    #[test]
    fn counter_accounting() {
        let counter = EvalCounter::default();
        for _ in 0..916 {
            counter.record(Fidelity::Coarse);
        }
        for _ in 0..113 {
            counter.record(Fidelity::Fine);
        }
        let snap = counter.snapshot();
        let fe = snap.fine_equivalent(&CostModel::default());
        assert!((fe - (916.0 * 60.0 / 110.0 + 113.0)).abs() < 1e-12);
        assert!((fe - 612.636).abs() < 1e-3);
    }

    #[test]
    fn interpolation_and_support() {
        let grid = FrequencyGrid::new(1.0, 3.0, 3).unwrap();
        let curve = ResponseCurve::new(grid, vec![-1.0, -3.0, -2.0]).unwrap();
        assert_eq!(curve.interpolate(1.5), (-2.0, true));
        assert_eq!(curve.interpolate(0.5), (-1.0, false));
        assert_eq!(curve.interpolate(3.5), (-2.0, false));
        assert_eq!(curve.interpolate(3.0), (-2.0, true));
    }

    #[test]
    fn positive_reflection_rejected() {
        let grid = FrequencyGrid::new(1.0, 2.0, 2).unwrap();
        assert!(ResponseCurve::new(grid, vec![0.1, -1.0]).is_err());
    }
}
