use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::Evaluator;

/// Affine model `G(x) = R(anchor) + J (x - anchor)` of the response.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub anchor: Vec<f64>,
    pub response: Vec<f64>,
    /// `n_samples x dim`, response units per parameter unit.
    pub jacobian: DMatrix<f64>,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let dx = nalgebra::DVector::from_iterator(
            x.len(),
            x.iter().zip(&self.anchor).map(|(a, b)| a - b),
        );
        let delta = &self.jacobian * dx;
        self.response
            .iter()
            .zip(delta.iter())
            .map(|(r, d)| r + d)
            .collect()
    }

    /// Same sensitivities, new anchor (used when the Jacobian is kept static).
    pub fn reanchor(&self, anchor: Vec<f64>, response: Vec<f64>) -> Self {
        Self {
            anchor,
            response,
            jacobian: self.jacobian.clone(),
        }
    }
}

/// Perturbation size for parameter `d`: `sigma * max(|x_d|, 0.01 (ub_d - lb_d))`.
pub fn fd_step(sigma: f64, x: f64, lb: f64, ub: f64) -> f64 {
    sigma * x.abs().max(0.01 * (ub - lb))
}

/// Central finite-difference Jacobian with steps clipped to the box.
///
/// Costs `2 D` evaluations, plus one for the anchor when `anchor_response` is
/// `None`. Columns are evaluated in parallel.
pub fn fd_jacobian<E: Evaluator + ?Sized>(
    eval: &E,
    x: &[f64],
    anchor_response: Option<Vec<f64>>,
    sigma: f64,
    lb: &[f64],
    ub: &[f64],
) -> Result<LinearModel> {
    let dim = x.len();
    let mut points = Vec::with_capacity(dim);
    for d in 0..dim {
        let h = fd_step(sigma, x[d], lb[d], ub[d]);
        let hi = (x[d] + 0.5 * h).min(ub[d]);
        let lo = (x[d] - 0.5 * h).max(lb[d]);
        let h_eff = hi - lo;
        if !(h_eff >= 1e-9 * (ub[d] - lb[d])) || h_eff <= 0.0 {
            return Err(Error::PerturbationOutOfBounds {
                index: d,
                step: h_eff,
            });
        }
        points.push((lo, hi, h_eff));
    }

    let response = match anchor_response {
        Some(r) => r,
        None => eval.evaluate(x)?,
    };
    let columns = points
        .par_iter()
        .enumerate()
        .map(|(d, &(lo, hi, h))| {
            let mut xp = x.to_vec();
            xp[d] = hi;
            let rp = eval.evaluate(&xp)?;
            xp[d] = lo;
            let rm = eval.evaluate(&xp)?;
            Ok(rp.iter().zip(&rm).map(|(a, b)| (a - b) / h).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;

    let n = response.len();
    let jacobian = DMatrix::from_fn(n, dim, |i, d| columns[d][i]);
    Ok(LinearModel {
        anchor: x.to_vec(),
        response,
        jacobian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::troptim::FnEvaluator;

    #[test]
    fn exact_for_linear_response() {
        let a = 3.7;
        let eval = FnEvaluator::new(2, |x: &[f64]| Ok(vec![a * x[1], -x[0], 1.0]));
        let m = fd_jacobian(&eval, &[0.4, 2.0], None, 0.02, &[0.0, 0.0], &[1.0, 5.0]).unwrap();
        assert!((m.jacobian[(0, 1)] - a).abs() < 1e-10);
        assert!((m.jacobian[(1, 0)] + 1.0).abs() < 1e-10);
        assert!(m.jacobian[(2, 0)].abs() < 1e-10);
        assert_eq!(eval.calls(), 5);
        assert_eq!(m.predict(&[0.4, 2.0]), m.response);
    }

    #[test]
    fn zero_parameter_uses_guard() {
        let h = fd_step(0.02, 0.0, -1.0, 1.0);
        assert!((h - 0.02 * 0.01 * 2.0).abs() < 1e-18);
        let eval = FnEvaluator::new(1, |x: &[f64]| Ok(vec![x[0] * x[0]]));
        assert!(fd_jacobian(&eval, &[0.0], None, 0.02, &[-1.0], &[1.0]).is_ok());
    }

    #[test]
    fn collapsed_step_is_an_error() {
        let eval = FnEvaluator::new(1, |x: &[f64]| Ok(vec![x[0]]));
        let err = fd_jacobian(&eval, &[1.0], None, 1e-13, &[0.0], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::PerturbationOutOfBounds { index: 0, .. }));
    }

    #[test]
    fn clipped_step_stays_in_box() {
        let eval = FnEvaluator::new(1, |x: &[f64]| {
            assert!((0.0..=1.0).contains(&x[0]));
            Ok(vec![2.0 * x[0]])
        });
        let m = fd_jacobian(&eval, &[1.0], None, 0.5, &[0.0], &[1.0]).unwrap();
        assert!((m.jacobian[(0, 0)] - 2.0).abs() < 1e-12);
    }
}
