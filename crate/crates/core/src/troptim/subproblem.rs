//! Trust-region subproblem: minimize the mean squared hinge of an affine
//! response over a box. The objective is convex with a Lipschitz gradient, so
//! accelerated projected gradient with backtracking and adaptive restart
//! converges reliably.

use nalgebra::{DMatrix, DVector};

use super::{HingeObjective, LinearModel};

pub const SUBPROBLEM_TOL: f64 = 1e-8;
pub const SUBPROBLEM_MAX_ITER: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub x: Vec<f64>,
    /// Objective of the linear model at `x`.
    pub predicted: f64,
    pub iterations: usize,
}

struct Problem {
    /// In-band rows of the Jacobian scaled to normalized coordinates.
    a: DMatrix<f64>,
    /// In-band residuals at the anchor, `R - r_max`.
    b: DVector<f64>,
    lo: DVector<f64>,
    hi: DVector<f64>,
}

impl Problem {
    fn residual(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.a * z + &self.b
    }

    fn value(&self, z: &DVector<f64>) -> f64 {
        let m = self.b.len() as f64;
        self.residual(z).iter().map(|r| r.max(0.0).powi(2)).sum::<f64>() / m
    }

    fn value_and_grad(&self, z: &DVector<f64>) -> (f64, DVector<f64>) {
        let m = self.b.len() as f64;
        let hinge = self.residual(z).map(|r| r.max(0.0));
        let value = hinge.norm_squared() / m;
        let grad = self.a.tr_mul(&hinge) * (2.0 / m);
        (value, grad)
    }

    fn project(&self, z: &mut DVector<f64>) {
        for i in 0..z.len() {
            z[i] = z[i].clamp(self.lo[i], self.hi[i]);
        }
    }

    /// Estimate of the gradient's Lipschitz constant `2 ||A||^2 / M`.
    fn lipschitz_estimate(&self) -> f64 {
        let n = self.a.ncols();
        let ata = self.a.tr_mul(&self.a);
        let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        let mut norm = 0.0;
        for _ in 0..50 {
            let w = &ata * &v;
            norm = w.norm();
            if norm == 0.0 {
                return 1.0;
            }
            v = w / norm;
        }
        (2.0 * norm / self.b.len() as f64).max(1e-12)
    }
}

/// Minimizes the model objective over `{|x - anchor|_inf <= lambda * range} ∩ [lb, ub]`
/// with distances measured in units of `range = ub - lb`.
pub fn solve_subproblem(
    model: &LinearModel,
    objective: &HingeObjective,
    lambda: f64,
    lb: &[f64],
    ub: &[f64],
) -> SubproblemSolution {
    let dim = model.anchor.len();
    let range: Vec<f64> = lb.iter().zip(ub).map(|(l, u)| u - l).collect();
    let rows = &objective.band;
    let a = DMatrix::from_fn(rows.len(), dim, |i, d| model.jacobian[(rows[i], d)] * range[d]);
    let b = DVector::from_iterator(
        rows.len(),
        rows.iter().map(|&i| model.response[i] - objective.r_max),
    );
    let lo = DVector::from_fn(dim, |d, _| (-lambda).max((lb[d] - model.anchor[d]) / range[d]));
    let hi = DVector::from_fn(dim, |d, _| lambda.min((ub[d] - model.anchor[d]) / range[d]));
    let p = Problem { a, b, lo, hi };

    let mut z = DVector::zeros(dim);
    p.project(&mut z);
    let mut iterations = 0;
    if p.value(&z) > 0.0 {
        let mut step_l = p.lipschitz_estimate();
        let mut y = z.clone();
        let mut t = 1.0f64;
        let mut f_z = p.value(&z);
        while iterations < SUBPROBLEM_MAX_ITER {
            iterations += 1;
            let (f_y, g_y) = p.value_and_grad(&y);
            // Backtracking on the local Lipschitz constant. The slack absorbs
            // round-off, which otherwise makes tiny steps fail the test forever.
            let slack = 1e-12 * f_y.abs().max(1e-300);
            let z_next = loop {
                let mut cand = &y - &g_y / step_l;
                p.project(&mut cand);
                let d = &cand - &y;
                let bound = f_y + g_y.dot(&d) + 0.5 * step_l * d.norm_squared() + slack;
                if p.value(&cand) <= bound || d.amax() <= 1e-15 || !step_l.is_finite() {
                    break cand;
                }
                step_l *= 2.0;
            };
            let f_next = p.value(&z_next);
            let moved = (&z_next - &z).amax();
            let grad_map = step_l * (&z_next - &y).amax();

            if f_next > f_z {
                // Adaptive restart: drop momentum, retry from the last iterate.
                t = 1.0;
                y = z.clone();
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &z_next + (&z_next - &z) * ((t - 1.0) / t_next);
            p.project(&mut y);
            t = t_next;
            z = z_next;
            f_z = f_next;
            if f_z == 0.0 || grad_map <= SUBPROBLEM_TOL || moved <= 1e-14 {
                break;
            }
        }
    }

    let x: Vec<f64> = (0..dim)
        .map(|d| (model.anchor[d] + range[d] * z[d]).clamp(lb[d], ub[d]))
        .collect();
    let predicted = objective.value(&model.predict(&x));
    SubproblemSolution {
        x,
        predicted,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_1d(r: f64, g: f64, anchor: f64) -> LinearModel {
        LinearModel {
            anchor: vec![anchor],
            response: vec![r],
            jacobian: DMatrix::from_element(1, 1, g),
        }
    }

    #[test]
    fn satisfied_anchor_is_returned() {
        let m = model_1d(-20.0, 3.0, 0.5);
        let obj = HingeObjective::new(vec![0], -11.0);
        let s = solve_subproblem(&m, &obj, 1.0, &[0.0], &[1.0]);
        assert_eq!(s.x, vec![0.5]);
        assert_eq!(s.predicted, 0.0);
    }

    #[test]
    fn scalar_problem_matches_closed_form() {
        // G(x) = r + g (x - x_j); hinge active; radius binding or not.
        for &(r, g, xj, lambda) in &[
            (-5.0, 4.0, 0.6, 1.0),
            (-5.0, 4.0, 0.6, 0.1),
            (-5.0, -40.0, 0.2, 1.0),
            (2.0, 10.0, 0.9, 0.3),
        ] {
            let obj = HingeObjective::new(vec![0], -11.0);
            let m = model_1d(r, g, xj);
            let (lb, ub) = (0.0f64, 1.0f64);
            let unconstrained = xj - (r + 11.0) / g;
            let lo = lb.max(xj - lambda * (ub - lb));
            let hi = ub.min(xj + lambda * (ub - lb));
            let expected = unconstrained.clamp(lo, hi);
            let s = solve_subproblem(&m, &obj, lambda, &[lb], &[ub]);
            let expected_u = (r + g * (expected - xj) + 11.0).max(0.0).powi(2);
            assert!((s.predicted - expected_u).abs() < 1e-6, "{r} {g}: {s:?}");
            assert!((s.x[0] - expected).abs() < 1e-6, "{r} {g}: {} vs {expected}", s.x[0]);
        }
    }

    #[test]
    fn result_respects_both_boxes() {
        let m = LinearModel {
            anchor: vec![0.5, 0.5, 0.5],
            response: vec![0.0, 1.0],
            jacobian: DMatrix::from_row_slice(2, 3, &[50.0, -10.0, 3.0, 4.0, 40.0, -7.0]),
        };
        let obj = HingeObjective::new(vec![0, 1], -11.0);
        let s = solve_subproblem(&m, &obj, 0.2, &[0.0, 0.0, 0.45], &[1.0, 1.0, 0.6]);
        for (d, &x) in s.x.iter().enumerate() {
            assert!((x - 0.5).abs() <= 0.2 * [1.0, 1.0, 0.15][d] + 1e-12);
        }
        assert!(s.x[2] >= 0.45 && s.x[2] <= 0.6);
    }
}
