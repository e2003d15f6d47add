use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design vector: {0}")]
    InvalidDesign(String),
    #[error("degenerate outline: radial coordinate {index} is {value} (must be > 0)")]
    DegenerateOutline { index: usize, value: f64 },
    #[error("outline intersects itself (an angular gap exceeds half a turn)")]
    SelfIntersectingOutline,
    #[error("feed lies outside the outline (clearance {clearance:.4} mm < {required:.4} mm)")]
    FeedOutsideOutline { clearance: f64, required: f64 },
    #[error("no admissible feed position after {0} attempts")]
    FeedSamplingExhausted(usize),

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("invalid response curve: {0}")]
    InvalidCurve(String),
    #[error("backend failure: {0}")]
    BackendFailure(String),
    #[error("infeasible design: {0}")]
    InfeasibleDesign(String),
    #[error("no resonance at or below {threshold_db} dB")]
    NoResonanceFound { threshold_db: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("frequencies must be strictly increasing (row {row})")]
    NonMonotoneFrequency { row: usize },

    #[error("lost track of the resonance for design {design} at c = {c} mm")]
    ResonanceTrackingLost { design: usize, c: f64 },
    #[error("scaling fit needs at least 3 distinct scale values, got {0}")]
    RankDeficient(usize),
    #[error("frequency multiplier alpha({c}) = {alpha} is not positive")]
    NonPositiveAlpha { c: f64, alpha: f64 },

    #[error("band [{f_low}, {f_high}] GHz is not covered by the sweep [{f_min}, {f_max}] GHz")]
    BandOutsideGrid {
        f_low: f64,
        f_high: f64,
        f_min: f64,
        f_max: f64,
    },
    #[error("simulation budget exhausted after {0} candidates without an accepted design")]
    BudgetExhausted(usize),
    #[error("design database is empty")]
    EmptyDatabase,
    #[error("unknown database record {0}")]
    UnknownRecord(u64),

    #[error("finite-difference step for parameter {index} collapsed to {step:e} after clipping")]
    PerturbationOutOfBounds { index: usize, step: f64 },

    #[error("invalid sample count {0}")]
    InvalidSampleCount(usize),
    #[error("feasibility repair failed for the whole generation {0}")]
    InfeasiblePopulation(usize),

    #[error("configuration error: {0}")]
    Config(String),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
