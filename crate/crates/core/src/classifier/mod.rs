//! Scale-optimizing screening of random candidates.
//!
//! A candidate is simulated once, at its drawn scale, over the full sweep.
//! Its response at any other scale is then predicted by the scaling surrogate,
//! so finding the best scale for a band costs no further simulations. A
//! candidate is accepted when, at its best scale, the in-band reflection stays
//! at or below the threshold.

mod database;
mod scale_search;

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    build_layout, random_design, scale_design, DesignVector, FixedParams, GenerationRanges,
};
use crate::scaling::ScalingModel;
use crate::simbackend::{Fidelity, FrequencyGrid, ResponseCurve, Simulator};

pub use database::{CandidateRecord, DesignDatabase};
pub use scale_search::{optimize_scale, ScaleSearch, GRID_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    /// Acceptance threshold (dB).
    pub e_t: f64,
    pub f_low: f64,
    pub f_high: f64,
}

impl ClassifierSpec {
    pub fn new(e_t: f64, f_low: f64, f_high: f64) -> Result<Self> {
        if !(f_low < f_high) {
            return Err(Error::Config(format!(
                "band must satisfy f_low < f_high, got {f_low}..{f_high}"
            )));
        }
        if !(e_t < 0.0) {
            return Err(Error::Config(format!("threshold must be negative, got {e_t}")));
        }
        Ok(Self { e_t, f_low, f_high })
    }

    /// Database key `"fL-fH-Et"`.
    pub fn key(&self) -> String {
        format!("{}-{}-{}", self.f_low, self.f_high, self.e_t)
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{} GHz at {} dB",
            self.f_low, self.f_high, self.e_t
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub accepted: bool,
    pub c_star: f64,
    pub u_q: f64,
}

/// `-E_t + max` over in-band samples of `curve` moved from `c_from` to `c`.
pub fn classifier_objective(
    curve: &ResponseCurve,
    c_from: f64,
    model: &ScalingModel,
    c: f64,
    spec: &ClassifierSpec,
) -> Result<f64> {
    let alpha = model.relative_alpha(c_from, c)?;
    let band = curve.grid.band_indices(spec.f_low, spec.f_high)?;
    let worst = band
        .into_iter()
        .map(|i| curve.interpolate(alpha * curve.grid.freq(i)).0)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(worst - spec.e_t)
}

/// Default search interval for the scale: `[c0 / 2, 2 c0]`.
pub fn default_c_range(c0: f64) -> (f64, f64) {
    (0.5 * c0, 2.0 * c0)
}

/// Best scale for `curve` (simulated at `c_from`) and the resulting verdict.
pub fn classify_curve(
    curve: &ResponseCurve,
    c_from: f64,
    model: &ScalingModel,
    spec: &ClassifierSpec,
    c_range: (f64, f64),
) -> Result<Verdict> {
    let best = optimize_scale(curve, c_from, model, spec, c_range)?;
    Ok(Verdict {
        accepted: best.u_q <= 0.0,
        c_star: best.c_star,
        u_q: best.u_q,
    })
}

pub fn classify(
    record: &CandidateRecord,
    model: &ScalingModel,
    spec: &ClassifierSpec,
) -> Result<Verdict> {
    let curve = record.curve()?;
    classify_curve(&curve, record.design.c, model, spec, default_c_range(model.c0))
}

/// Candidate-generation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationSettings {
    pub outline_len: usize,
    pub ranges: GenerationRanges,
    pub fixed: FixedParams,
    pub grid: FrequencyGrid,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        Self {
            outline_len: 25,
            ranges: GenerationRanges::default(),
            fixed: FixedParams::default(),
            grid: FrequencyGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Accepted {
    /// The accepted design resized to its best scale.
    pub x0: DesignVector,
    pub record_id: u64,
    pub verdict: Verdict,
    /// Candidates drawn, including the accepted one.
    pub n_candidates: usize,
}

/// Draws, simulates (coarse) and classifies candidates until one is accepted
/// or `budget` simulations are spent. Every candidate is stored in `db`.
pub fn generate_until_accepted<R: Rng + ?Sized>(
    rng: &mut R,
    sim: &Simulator,
    model: &ScalingModel,
    spec: &ClassifierSpec,
    budget: usize,
    db: &mut DesignDatabase,
    settings: &GenerationSettings,
) -> Result<Accepted> {
    let c_range = default_c_range(model.c0);
    for n in 1..=budget {
        let seed: u64 = rng.gen();
        let mut cand_rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_design(
            &mut cand_rng,
            settings.outline_len,
            &settings.ranges,
            &settings.fixed,
        )?;
        let curve = sim.evaluate(&x, &settings.grid, Fidelity::Coarse)?;
        let mut verdict = classify_curve(&curve, x.c, model, spec, c_range)?;
        let scaled = scale_design(&x, verdict.c_star);
        // Shrinking can push the feed too close to the outline.
        if verdict.accepted && build_layout(&scaled, &settings.fixed).is_err() {
            verdict.accepted = false;
        }
        let mut verdicts = BTreeMap::new();
        verdicts.insert(spec.key(), verdict);
        let id = db.append(CandidateRecord::new(db.next_id(), seed, &spec.key(), &x, &curve, verdicts))?;
        log::debug!(
            "candidate {n}: U_q* = {:.3} dB at c* = {:.3} mm ({})",
            verdict.u_q,
            verdict.c_star,
            if verdict.accepted { "accepted" } else { "rejected" }
        );
        if verdict.accepted {
            log::info!(
                "accepted candidate {n} (record {id}): c {:.2} -> {:.3} mm, U_q* = {:.3} dB",
                x.c,
                verdict.c_star,
                verdict.u_q
            );
            return Ok(Accepted {
                x0: scaled,
                record_id: id,
                verdict,
                n_candidates: n,
            });
        }
    }
    Err(Error::BudgetExhausted(budget))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub record_id: u64,
    pub verdict: Verdict,
}

/// Re-classifies every stored record against `spec` without simulating.
/// Results are sorted by ascending `U_q*` (ties by record id).
pub fn warm_start_scan(
    db: &DesignDatabase,
    model: &ScalingModel,
    spec: &ClassifierSpec,
) -> Result<Vec<ScanResult>> {
    use rayon::prelude::*;

    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let mut out = db
        .records()
        .par_iter()
        .map(|r| {
            Ok(ScanResult {
                record_id: r.id,
                verdict: classify(r, model, spec)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| {
        a.verdict
            .u_q
            .total_cmp(&b.verdict.u_q)
            .then(a.record_id.cmp(&b.record_id))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(level: f64) -> ResponseCurve {
        let g = FrequencyGrid::default();
        ResponseCurve::new(g, vec![level; g.n_points]).unwrap()
    }

    fn spec() -> ClassifierSpec {
        ClassifierSpec::new(-5.0, 5.0, 6.0).unwrap()
    }

    #[test]
    fn flat_curve_arithmetic() {
        let m = ScalingModel::proportional(30.0);
        let u = classifier_objective(&flat(-20.0), 30.0, &m, 30.0, &spec()).unwrap();
        assert_eq!(u, -15.0);
        let u = classifier_objective(&flat(0.0), 30.0, &m, 30.0, &spec()).unwrap();
        assert_eq!(u, 5.0);
    }

    #[test]
    fn band_outside_sweep() {
        let m = ScalingModel::proportional(30.0);
        let s = ClassifierSpec::new(-5.0, 9.0, 12.0).unwrap();
        assert!(matches!(
            classifier_objective(&flat(-1.0), 30.0, &m, 30.0, &s),
            Err(Error::BandOutsideGrid { .. })
        ));
    }

    #[test]
    fn spec_validation_and_key() {
        assert!(ClassifierSpec::new(-5.0, 6.0, 5.0).is_err());
        assert!(ClassifierSpec::new(1.0, 5.0, 6.0).is_err());
        assert_eq!(spec().key(), "5-6--5");
    }

    #[test]
    fn sign_rule() {
        let v = |u_q: f64| Verdict {
            accepted: u_q <= 0.0,
            c_star: 30.0,
            u_q,
        };
        assert!(v(-0.3).accepted);
        assert!(v(0.0).accepted);
        assert!(!v(0.1).accepted);
    }

    #[test]
    fn zero_budget_is_exhausted() {
        let sim = Simulator::mock();
        let mut db = DesignDatabase::in_memory();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = generate_until_accepted(
            &mut rng,
            &sim,
            &ScalingModel::proportional(30.0),
            &spec(),
            0,
            &mut db,
            &GenerationSettings::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted(0)));
        assert_eq!(sim.counts().total(), 0);
    }

    #[test]
    fn empty_database_scan() {
        let db = DesignDatabase::in_memory();
        assert!(matches!(
            warm_start_scan(&db, &ScalingModel::proportional(30.0), &spec()),
            Err(Error::EmptyDatabase)
        ));
    }
}
