//! Global 1-D minimization of the classifier objective over the scale.
//!
//! After the multiplier `a = alpha(c) / alpha(c_from)` is applied, every in-band
//! term is a piecewise-linear function of `a`, so the objective is a max of
//! piecewise-linear functions with many kinks. A uniform scan finds the
//! promising region and a branch-and-bound pass refines it. Each interval gets
//! a rigorous lower bound (the minimum of every term over its remapped
//! frequency range). Intervals that cannot beat the incumbent are discarded.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::Result;
use crate::scaling::ScalingModel;
use crate::simbackend::ResponseCurve;

use super::ClassifierSpec;

/// Points of the initial uniform scan.
pub const GRID_POINTS: usize = 201;
/// Intervals narrower than this fraction of the search range are not split.
const MIN_WIDTH_FRACTION: f64 = 1e-12;
/// An interval must promise at least this improvement (dB) to be explored.
const PRUNE_TOL_DB: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSearch {
    pub c_star: f64,
    pub u_q: f64,
    /// Objective evaluations used (none of them simulate).
    pub n_evaluations: usize,
}

struct Objective<'a> {
    curve: &'a ResponseCurve,
    band_freqs: Vec<f64>,
    model: &'a ScalingModel,
    alpha_from: f64,
    e_t: f64,
}

impl Objective<'_> {
    fn multiplier(&self, c: f64) -> f64 {
        self.model.alpha(c) / self.alpha_from
    }

    fn value(&self, c: f64) -> f64 {
        let a = self.multiplier(c);
        if !(a > 0.0) {
            return f64::INFINITY;
        }
        self.band_freqs
            .iter()
            .map(|f| self.curve.interpolate(a * f).0)
            .fold(f64::NEG_INFINITY, f64::max)
            - self.e_t
    }

    /// Range of the multiplier over `[c1, c2]`.
    fn multiplier_range(&self, c1: f64, c2: f64) -> (f64, f64) {
        let (mut lo, mut hi) = {
            let (a, b) = (self.multiplier(c1), self.multiplier(c2));
            (a.min(b), a.max(b))
        };
        let [b0, b1, _] = self.model.beta;
        if b0 != 0.0 {
            let vertex = -b1 / (2.0 * b0);
            if vertex > c1 && vertex < c2 {
                let a = self.multiplier(vertex);
                lo = lo.min(a);
                hi = hi.max(a);
            }
        }
        (lo, hi)
    }

    /// Minimum of the stored curve over `[x1, x2]` GHz.
    fn curve_min(&self, x1: f64, x2: f64) -> f64 {
        let g = &self.curve.grid;
        let mut m = self.curve.interpolate(x1).0.min(self.curve.interpolate(x2).0);
        let first = ((x1 - g.f_min) / g.step()).ceil().max(0.0) as usize;
        let last = (((x2 - g.f_min) / g.step()).floor().max(-1.0) + 1.0) as usize;
        for j in first..last.min(g.n_points) {
            m = m.min(self.curve.values[j]);
        }
        m
    }

    fn lower_bound(&self, c1: f64, c2: f64) -> f64 {
        let (a_lo, a_hi) = self.multiplier_range(c1, c2);
        if !(a_lo > 0.0) {
            return f64::INFINITY;
        }
        self.band_freqs
            .iter()
            .map(|f| self.curve_min(a_lo * f, a_hi * f))
            .fold(f64::NEG_INFINITY, f64::max)
            - self.e_t
    }
}

struct Interval {
    lb: f64,
    c1: f64,
    c2: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    /// Reversed so that `BinaryHeap` pops the smallest bound (then smallest c).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lb
            .total_cmp(&self.lb)
            .then(other.c1.total_cmp(&self.c1))
    }
}

/// Scale in `c_range` minimizing the classifier objective for `curve`,
/// simulated at `c_from`. Ties go to the smaller scale.
pub fn optimize_scale(
    curve: &ResponseCurve,
    c_from: f64,
    model: &ScalingModel,
    spec: &ClassifierSpec,
    c_range: (f64, f64),
) -> Result<ScaleSearch> {
    let band = curve.grid.band_indices(spec.f_low, spec.f_high)?;
    let obj = Objective {
        curve,
        band_freqs: band.iter().map(|&i| curve.grid.freq(i)).collect(),
        model,
        alpha_from: model.checked_alpha(c_from)?,
        e_t: spec.e_t,
    };
    let (lo, hi) = (c_range.0.min(c_range.1), c_range.0.max(c_range.1));
    if hi == lo {
        return Ok(ScaleSearch {
            c_star: lo,
            u_q: obj.value(lo),
            n_evaluations: 1,
        });
    }

    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let cs: Vec<f64> = (0..GRID_POINTS)
        .map(|k| if k + 1 == GRID_POINTS { hi } else { lo + k as f64 * step })
        .collect();
    let mut best = (f64::INFINITY, hi);
    let consider = |c: f64, v: f64, best: &mut (f64, f64)| {
        if v < best.0 || (v == best.0 && c < best.1) {
            *best = (v, c);
        }
    };
    for &c in &cs {
        consider(c, obj.value(c), &mut best);
    }
    let mut n_evaluations = GRID_POINTS;

    let mut heap: BinaryHeap<Interval> = cs
        .windows(2)
        .map(|w| Interval {
            lb: obj.lower_bound(w[0], w[1]),
            c1: w[0],
            c2: w[1],
        })
        .collect();
    let min_width = MIN_WIDTH_FRACTION * (hi - lo);
    while let Some(iv) = heap.pop() {
        if iv.lb >= best.0 - PRUNE_TOL_DB || n_evaluations >= GRID_POINTS + MAX_REFINEMENTS {
            break;
        }
        if iv.c2 - iv.c1 <= min_width {
            continue;
        }
        let mid = 0.5 * (iv.c1 + iv.c2);
        consider(mid, obj.value(mid), &mut best);
        n_evaluations += 1;
        for (c1, c2) in [(iv.c1, mid), (mid, iv.c2)] {
            heap.push(Interval {
                lb: obj.lower_bound(c1, c2),
                c1,
                c2,
            });
        }
    }

    Ok(ScaleSearch {
        c_star: best.1,
        u_q: best.0,
        n_evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simbackend::FrequencyGrid;

    fn dips(centers: &[(f64, f64)]) -> ResponseCurve {
        let grid = FrequencyGrid::default();
        let values = grid
            .frequencies()
            .iter()
            .map(|f| {
                -centers
                    .iter()
                    .map(|(f0, d)| d * 0.04 / ((f - f0).powi(2) + 0.04))
                    .sum::<f64>()
            })
            .collect();
        ResponseCurve::new(grid, values).unwrap()
    }

    fn dense_min(
        curve: &ResponseCurve,
        model: &ScalingModel,
        spec: &ClassifierSpec,
        (lo, hi): (f64, f64),
    ) -> (f64, f64) {
        let n = 10_001;
        (0..n)
            .map(|k| {
                let c = lo + (hi - lo) * k as f64 / (n - 1) as f64;
                (
                    super::super::classifier_objective(curve, 30.0, model, c, spec).unwrap(),
                    c,
                )
            })
            .fold((f64::INFINITY, 0.0), |b, p| if p.0 < b.0 { p } else { b })
    }

    #[test]
    fn matches_dense_grid() {
        let model = ScalingModel::proportional(30.0);
        let spec = ClassifierSpec::new(-5.0, 5.0, 6.0).unwrap();
        let curve = dips(&[(7.5, 20.0), (8.1, 15.0), (3.0, 12.0)]);
        let got = optimize_scale(&curve, 30.0, &model, &spec, (15.0, 60.0)).unwrap();
        let (oracle, _) = dense_min(&curve, &model, &spec, (15.0, 60.0));
        assert!(got.u_q <= oracle + 1e-6, "{} vs {}", got.u_q, oracle);
        let at_c0 = super::super::classifier_objective(&curve, 30.0, &model, 30.0, &spec).unwrap();
        assert!(got.u_q < at_c0);
    }

    #[test]
    fn monotone_objective_hits_boundary() {
        // Reflection falls with frequency, so a larger multiplier (larger c)
        // always lowers the in-band maximum and the upper end wins.
        let grid = FrequencyGrid::default();
        let values = grid.frequencies().iter().map(|f| -2.0 * f).collect();
        let curve = ResponseCurve::new(grid, values).unwrap();
        let model = ScalingModel::proportional(30.0);
        let spec = ClassifierSpec::new(-5.0, 2.0, 3.0).unwrap();
        let got = optimize_scale(&curve, 30.0, &model, &spec, (15.0, 60.0)).unwrap();
        assert_eq!(got.c_star, 60.0);
    }
}
