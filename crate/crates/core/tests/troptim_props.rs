use proptest::prelude::*;
use topoforge::troptim::{
    fd_jacobian, normalized_distance, solve_subproblem, tr_optimize, FnEvaluator, HingeObjective,
    JacobianMode, StepOutcome, TrOptions,
};

const R_MAX: f64 = -11.0;

/// Smooth synthetic response with an analytic Jacobian.
fn smooth(x: &[f64], m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| {
            let s: f64 = x.iter().enumerate().map(|(d, v)| ((i + 1) as f64 * 0.3 + d as f64 * 0.1) * v).sum();
            -12.0 + 2.0 * s.sin() + 0.5 * x[i % x.len()].powi(2)
        })
        .collect()
}

fn smooth_jacobian(x: &[f64], m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| {
            let s: f64 = x.iter().enumerate().map(|(d, v)| ((i + 1) as f64 * 0.3 + d as f64 * 0.1) * v).sum();
            (0..x.len())
                .map(|d| {
                    let w = (i + 1) as f64 * 0.3 + d as f64 * 0.1;
                    2.0 * s.cos() * w + if d == i % x.len() { x[d] } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

fn problem() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..6).prop_flat_map(|d| {
        (
            prop::collection::vec(-0.8f64..0.8, d),
            prop::collection::vec(-0.8f64..0.8, d),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn run_invariants((x0, target) in problem(), static_mode in any::<bool>()) {
        let dim = x0.len();
        let t = target.clone();
        let eval = FnEvaluator::new(dim, move |x: &[f64]| {
            Ok((0..2 * dim)
                .map(|i| {
                    let d = x[i / 2] - t[i / 2];
                    let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                    R_MAX + 4.0 * s * d + 0.5 * (d * d) + 0.2 * (x[(i / 2 + 1) % dim] - t[(i / 2 + 1) % dim]).sin()
                })
                .collect())
        });
        let obj = HingeObjective::new((0..2 * dim).collect(), R_MAX);
        let (lb, ub) = (vec![-1.0; dim], vec![1.0; dim]);
        let opts = TrOptions {
            mode: if static_mode { JacobianMode::Static } else { JacobianMode::Reset },
            max_iterations: 30,
            ..TrOptions::default()
        };
        let r = tr_optimize(&eval, &x0, None, &lb, &ub, &obj, &opts).unwrap();

        // Accepted objective values strictly decrease.
        let accepted: Vec<f64> = r.history.iter()
            .filter(|h| h.outcome == StepOutcome::Accepted)
            .map(|h| h.u_candidate.unwrap())
            .collect();
        prop_assert!(std::iter::once(r.u_initial).chain(accepted.iter().copied()).collect::<Vec<_>>().windows(2).all(|w| w[1] < w[0]));
        prop_assert!(r.u <= r.u_initial);

        // Candidates respect the radius and the box.
        for h in &r.history {
            prop_assert!(h.lambda > 0.0);
            prop_assert!(h.candidate.iter().zip(lb.iter().zip(&ub)).all(|(v, (l, u))| v >= l && v <= u));
            prop_assert!(h.step_norm <= h.lambda * (1.0 + 1e-9));
        }

        // Cost formula: anchor + 2D per Jacobian + one per simulated candidate.
        let simulated = r.history.iter().filter(|h| h.u_candidate.is_some()).count();
        prop_assert_eq!(simulated, r.n_candidates);
        prop_assert_eq!(r.n_evaluations, 1 + 2 * dim as u64 * r.n_jacobians as u64 + r.n_candidates as u64);
        prop_assert_eq!(eval.calls(), r.n_evaluations);
        if static_mode {
            prop_assert!(r.n_jacobians <= 1);
        } else {
            let accepted_before_last = r.history.iter().filter(|h| h.outcome == StepOutcome::Accepted).count();
            prop_assert!(r.n_jacobians <= 1 + accepted_before_last);
        }
    }

    #[test]
    fn model_reproduces_response_at_anchor(x in prop::collection::vec(-0.5f64..0.5, 3)) {
        let eval = FnEvaluator::new(3, |x: &[f64]| Ok(smooth(x, 7)));
        let (lb, ub) = (vec![-1.0; 3], vec![1.0; 3]);
        let m = fd_jacobian(&eval, &x, None, 0.02, &lb, &ub).unwrap();
        prop_assert_eq!(m.predict(&x), smooth(&x, 7));
        let obj = HingeObjective::new((0..7).collect(), R_MAX);
        let sol = solve_subproblem(&m, &obj, 0.1, &lb, &ub);
        prop_assert!(normalized_distance(&sol.x, &x, &lb, &ub) <= 0.1 + 1e-12);
        prop_assert!(sol.predicted <= obj.value(&m.response) + 1e-12);
    }

    #[test]
    fn central_differences_are_second_order(x in prop::collection::vec(-0.5f64..0.5, 3)) {
        let eval = FnEvaluator::new(3, |x: &[f64]| Ok(smooth(x, 7)));
        let (lb, ub) = (vec![-10.0; 3], vec![10.0; 3]);
        let exact = smooth_jacobian(&x, 7);
        let err = |sigma: f64| {
            let m = fd_jacobian(&eval, &x, None, sigma, &lb, &ub).unwrap();
            let e: f64 = exact
                .iter()
                .enumerate()
                .flat_map(|(i, row)| row.iter().enumerate().map(move |(d, v)| (i, d, v)))
                .map(|(i, d, v)| (m.jacobian[(i, d)] - v).powi(2))
                .sum();
            e.sqrt()
        };
        let (e2, e1) = (err(0.02), err(0.01));
        prop_assume!(e2 > 1e-9);
        prop_assert!(e2 / e1 >= 3.5, "ratio {}", e2 / e1);
    }
}
