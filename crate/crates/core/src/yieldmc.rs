//! Monte Carlo manufacturing yield.
//!
//! Fabrication tolerances are modelled as millimeter offsets of the radial
//! dimensions (outline vertex radii and feed radius). Yield is the fraction of
//! perturbed designs whose in-band reflection stays at or below the
//! specification. The surrogate estimator replaces simulations by a linear
//! model built from one finite-difference Jacobian.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{make_bounds, Bounds, DesignVector};
use crate::simbackend::{Fidelity, FrequencyGrid, ResponseCurve, Simulator};
use crate::troptim::{fd_jacobian, DesignProblem};

/// Upper limit on direct (simulation-per-sample) estimates.
pub const MAX_DIRECT_SAMPLES: usize = 5000;
/// Smallest radial fraction a perturbation may produce.
const MIN_RHO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Distribution {
    /// Independent per coordinate on `[-max_dev, max_dev]` mm.
    Uniform { max_dev: f64 },
    Gaussian { mean: f64, stdev: f64 },
}

impl Distribution {
    pub fn uniform_default() -> Self {
        Distribution::Uniform { max_dev: 0.05 }
    }

    pub fn gaussian_default() -> Self {
        Distribution::Gaussian {
            mean: 0.0,
            stdev: 0.03,
        }
    }

    /// Offset (mm) for a standardized draw: `u` uniform on `[-1, 1]`, `z` standard normal.
    fn offset(&self, u: f64, z: f64) -> f64 {
        match *self {
            Distribution::Uniform { max_dev } => max_dev * u,
            Distribution::Gaussian { mean, stdev } => mean + stdev * z,
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Uniform { max_dev } => write!(f, "uniform:{max_dev}"),
            Distribution::Gaussian { mean, stdev } => write!(f, "gaussian:{mean}:{stdev}"),
        }
    }
}

/// `uniform:<max_dev>`, `gaussian:<stdev>` or `gaussian:<mean>:<stdev>` (mm).
impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("distribution {s:?}: {e}")))
        };
        let dist = match parts.as_slice() {
            ["uniform", m] => Distribution::Uniform { max_dev: num(m)? },
            ["gaussian", sd] => Distribution::Gaussian {
                mean: 0.0,
                stdev: num(sd)?,
            },
            ["gaussian", mu, sd] => Distribution::Gaussian {
                mean: num(mu)?,
                stdev: num(sd)?,
            },
            _ => {
                return Err(Error::Parse(format!(
                    "distribution {s:?}: expected uniform:<dev> or gaussian:[<mean>:]<stdev>"
                )))
            }
        };
        let ok = match dist {
            Distribution::Uniform { max_dev } => max_dev >= 0.0,
            Distribution::Gaussian { mean, stdev } => stdev >= 0.0 && mean.is_finite(),
        };
        if !ok {
            return Err(Error::Parse(format!("distribution {s:?}: negative spread")));
        }
        Ok(dist)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub distribution: Distribution,
    pub n_samples: usize,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(distribution: Distribution, n_samples: usize, seed: u64) -> Self {
        Self {
            distribution,
            n_samples,
            seed,
        }
    }
}

/// Sample `index` of the perturbation set. Each sample has its own random
/// stream, and draws are standardized before scaling, so specs that differ
/// only in magnitude perturb in the same directions.
pub fn perturb(x: &DesignVector, spec: &PerturbationSpec, index: u64) -> DesignVector {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let mut draw = || {
        let u: f64 = rng.gen_range(-1.0..=1.0);
        let z: f64 = rng.sample(StandardNormal);
        spec.distribution.offset(u, z)
    };
    let mut y = x.clone();
    y.rho_f = (x.rho_f + draw() / x.c).max(0.0);
    for r in &mut y.rho {
        *r = (*r + draw() / x.c).max(MIN_RHO);
    }
    y
}

/// Specification margin `R_goal - max in-band R`; satisfied iff `>= 0`.
pub fn u1(curve: &ResponseCurve, r_goal: f64, f_low: f64, f_high: f64) -> Result<f64> {
    Ok(r_goal - curve.max_in_band(f_low, f_high)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldBand {
    pub f_low: f64,
    pub f_high: f64,
    pub r_goal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldEstimate {
    pub y: f64,
    pub n_samples: usize,
    pub n_satisfied: usize,
    /// Simulations spent on the estimate.
    pub simulations: u64,
    /// Margin of the nominal design (from its simulated response).
    pub u1_nominal: f64,
    /// Margin of every sample, in sample order.
    pub u1_samples: Vec<f64>,
}

impl YieldEstimate {
    fn from_margins(margins: Vec<f64>, u1_nominal: f64, simulations: u64) -> Self {
        let n_satisfied = margins.iter().filter(|&&m| m >= 0.0).count();
        Self {
            y: n_satisfied as f64 / margins.len() as f64,
            n_samples: margins.len(),
            n_satisfied,
            simulations,
            u1_nominal,
            u1_samples: margins,
        }
    }
}

/// Yield through a linear model of the response at `x` (2D + 1 simulations).
#[allow(clippy::too_many_arguments)]
pub fn estimate_yield_surrogate(
    sim: &Simulator,
    x: &DesignVector,
    spec: &PerturbationSpec,
    band: &YieldBand,
    grid: &FrequencyGrid,
    fidelity: Fidelity,
    sigma: f64,
    bounds: Option<&Bounds>,
) -> Result<YieldEstimate> {
    if spec.n_samples == 0 {
        return Err(Error::InvalidSampleCount(0));
    }
    let rows = grid.band_indices(band.f_low, band.f_high)?;
    let bounds = bounds.cloned().unwrap_or_else(|| make_bounds(x));
    let before = sim.counts();
    let problem = DesignProblem::new(sim, *grid, fidelity, x.dim());
    let model = fd_jacobian(
        &problem,
        &x.to_vec(),
        None,
        sigma,
        &bounds.lower_vec(),
        &bounds.upper_vec(),
    )?;
    let simulations = sim.counts().since(&before).total();
    let nominal_worst = rows
        .iter()
        .map(|&i| model.response[i])
        .fold(f64::NEG_INFINITY, f64::max);

    let x0 = x.to_vec();
    let margins: Vec<f64> = (0..spec.n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let dx: Vec<f64> = perturb(x, spec, k)
                .to_vec()
                .iter()
                .zip(&x0)
                .map(|(a, b)| a - b)
                .collect();
            let worst = rows
                .iter()
                .map(|&i| {
                    model.response[i]
                        + dx
                            .iter()
                            .enumerate()
                            .filter(|(_, d)| **d != 0.0)
                            .map(|(j, d)| model.jacobian[(i, j)] * d)
                            .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            band.r_goal - worst
        })
        .collect();
    Ok(YieldEstimate::from_margins(
        margins,
        band.r_goal - nominal_worst,
        simulations,
    ))
}

/// Yield by simulating every sample (plus the nominal design).
pub fn estimate_yield_direct(
    sim: &Simulator,
    x: &DesignVector,
    spec: &PerturbationSpec,
    band: &YieldBand,
    grid: &FrequencyGrid,
    fidelity: Fidelity,
) -> Result<YieldEstimate> {
    if spec.n_samples == 0 || spec.n_samples > MAX_DIRECT_SAMPLES {
        return Err(Error::InvalidSampleCount(spec.n_samples));
    }
    grid.band_indices(band.f_low, band.f_high)?;
    let before = sim.counts();
    let nominal = sim.evaluate(x, grid, fidelity)?;
    let u1_nominal = u1(&nominal, band.r_goal, band.f_low, band.f_high)?;
    let margins = (0..spec.n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let curve = sim.evaluate(&perturb(x, spec, k), grid, fidelity)?;
            u1(&curve, band.r_goal, band.f_low, band.f_high)
        })
        .collect::<Result<Vec<_>>>()?;
    let simulations = sim.counts().since(&before).total();
    Ok(YieldEstimate::from_margins(margins, u1_nominal, simulations))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design() -> DesignVector {
        DesignVector::new(20.0, 0.1, 0.5, vec![0.5, 0.6, 0.4, 0.55], vec![0.4; 4]).unwrap()
    }

    #[test]
    fn zero_magnitude_is_identity() {
        let spec = PerturbationSpec::new(Distribution::Gaussian { mean: 0.0, stdev: 0.0 }, 10, 3);
        assert_eq!(perturb(&design(), &spec, 4), design());
        let spec = PerturbationSpec::new(Distribution::Uniform { max_dev: 0.0 }, 10, 3);
        assert_eq!(perturb(&design(), &spec, 4), design());
    }

    #[test]
    fn uniform_support_and_untouched_angles() {
        let x = design();
        let spec = PerturbationSpec::new(Distribution::uniform_default(), 100, 9);
        for k in 0..100 {
            let y = perturb(&x, &spec, k);
            for (a, b) in y.rho.iter().zip(&x.rho) {
                assert!((x.c * a - x.c * b).abs() <= 0.05 + 1e-12);
            }
            assert!((x.c * y.rho_f - x.c * x.rho_f).abs() <= 0.05 + 1e-12);
            assert_eq!((y.c, y.phi_f, &y.phi), (x.c, x.phi_f, &x.phi));
        }
    }

    #[test]
    fn samples_are_reproducible_and_distinct() {
        let spec = PerturbationSpec::new(Distribution::gaussian_default(), 10, 1);
        let x = design();
        assert_eq!(perturb(&x, &spec, 7), perturb(&x, &spec, 7));
        assert_ne!(perturb(&x, &spec, 7), perturb(&x, &spec, 8));
    }

    #[test]
    fn margin_sign() {
        let grid = FrequencyGrid::new(4.0, 7.0, 4).unwrap();
        let curve = |m: f64| ResponseCurve::new(grid, vec![-1.0, -20.0, m, -1.0]).unwrap();
        assert_eq!(u1(&curve(-12.0), -10.0, 5.0, 6.0).unwrap(), 2.0);
        assert_eq!(u1(&curve(-10.0), -10.0, 5.0, 6.0).unwrap(), 0.0);
        assert_eq!(u1(&curve(-8.0), -10.0, 5.0, 6.0).unwrap(), -2.0);
    }

    #[test]
    fn distribution_parsing() {
        assert_eq!(
            "gaussian:0.03".parse::<Distribution>().unwrap(),
            Distribution::gaussian_default()
        );
        assert_eq!(
            "uniform:0.05".parse::<Distribution>().unwrap(),
            Distribution::uniform_default()
        );
        assert_eq!(
            "gaussian:0.01:0.02".parse::<Distribution>().unwrap(),
            Distribution::Gaussian { mean: 0.01, stdev: 0.02 }
        );
        assert!("poisson:1".parse::<Distribution>().is_err());
        assert!("uniform:-1".parse::<Distribution>().is_err());
    }

    #[test]
    fn direct_rejects_bad_sample_counts() {
        let sim = Simulator::mock();
        let band = YieldBand { f_low: 5.0, f_high: 6.0, r_goal: -10.0 };
        for n in [0, MAX_DIRECT_SAMPLES + 1] {
            let spec = PerturbationSpec::new(Distribution::gaussian_default(), n, 1);
            let err = estimate_yield_direct(
                &sim,
                &design(),
                &spec,
                &band,
                &FrequencyGrid::default(),
                Fidelity::Fine,
            )
            .unwrap_err();
            assert!(matches!(err, Error::InvalidSampleCount(m) if m == n));
        }
        assert_eq!(sim.counts().total(), 0);
    }
}
