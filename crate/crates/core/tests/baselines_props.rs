use std::sync::atomic::{AtomicU64, Ordering};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topoforge::baselines::{ea_optimize, global_bounds, DesignEa, EaConfig, EaProblem};
use topoforge::geometry::{
    build_layout, is_simple, random_design, signed_distance, DesignVector, FixedParams,
    GenerationRanges,
};
use topoforge::simbackend::{Fidelity, FrequencyGrid, Simulator};
use topoforge::troptim::BandObjective;

/// Shifted Rastrigin-like function with a call counter.
struct Bumpy {
    lo: Vec<f64>,
    hi: Vec<f64>,
    calls: AtomicU64,
}

impl EaProblem for Bumpy {
    fn lower(&self) -> &[f64] {
        &self.lo
    }

    fn upper(&self) -> &[f64] {
        &self.hi
    }

    fn fitness(&self, x: &[f64]) -> topoforge::Result<f64> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(x.iter()
            .map(|v| (v - 0.3).powi(2) + 0.1 * (1.0 - (6.0 * (v - 0.3)).cos()))
            .sum())
    }
}

fn config() -> impl Strategy<Value = EaConfig> {
    (
        0.0f64..=1.0,
        0.0f64..=1.0,
        0usize..4,
        prop::option::of(20u64..400),
        any::<u64>(),
        any::<bool>(),
    )
        .prop_map(|(pm, pc, elitism, budget, seed, restrict)| EaConfig {
            population_size: Some(12),
            max_iterations: 40,
            p_mutation: pm,
            p_crossover: pc,
            elitism,
            max_evaluations: budget,
            mating_distance: if restrict { Some(0.01) } else { None },
            seed,
            ..EaConfig::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn elitism_and_budget(cfg in config(), dim in 1usize..6) {
        let p = Bumpy { lo: vec![-1.0; dim], hi: vec![1.0; dim], calls: AtomicU64::new(0) };
        let r = ea_optimize(&p, Vec::new(), &cfg).unwrap();
        prop_assert_eq!(r.evaluations, p.calls.load(Ordering::SeqCst));
        if let Some(cap) = cfg.max_evaluations {
            prop_assert!(r.evaluations <= cap.max(12));
        }
        if cfg.elitism > 0 {
            prop_assert!(r.history.windows(2).all(|w| w[1].best <= w[0].best));
        }
        prop_assert!(r.history.windows(2).all(|w| w[1].evaluations >= w[0].evaluations));
        prop_assert_eq!(r.best.fitness, p.fitness(&r.best.x).unwrap());
        prop_assert!(r.best.x.iter().zip(&p.lo).all(|(v, l)| v >= l));
        prop_assert!(r.best.x.iter().zip(&p.hi).all(|(v, h)| v <= h));
    }
}

/// Records whether every individual the EA evaluates is a valid layout.
struct Audited<'a> {
    inner: DesignEa<'a>,
    infeasible: AtomicU64,
}

impl EaProblem for Audited<'_> {
    fn lower(&self) -> &[f64] {
        self.inner.lower()
    }

    fn upper(&self) -> &[f64] {
        self.inner.upper()
    }

    fn fitness(&self, x: &[f64]) -> topoforge::Result<f64> {
        let fixed = FixedParams::default();
        let ok = DesignVector::from_slice(x)
            .and_then(|d| build_layout(&d, &fixed))
            .map(|l| is_simple(&l.vertices) && signed_distance(&l.vertices, l.feed) >= fixed.feed_r2_mm)
            .unwrap_or(false);
        if !ok {
            self.infeasible.fetch_add(1, Ordering::SeqCst);
        }
        self.inner.fitness(x)
    }

    fn repair(&self, x: &mut [f64], rng: &mut ChaCha8Rng) -> bool {
        self.inner.repair(x, rng)
    }
}

#[test]
fn evaluated_designs_are_feasible_and_counted() {
    let sim = Simulator::mock();
    let grid = FrequencyGrid::default();
    let l = 8;
    let bounds = global_bounds(30.0, l);
    let objective = BandObjective::new(5.0, 6.0, -11.0, -10.0).unwrap().hinge(&grid).unwrap();
    let problem = Audited {
        inner: DesignEa::new(&sim, grid, Fidelity::Coarse, objective, &bounds),
        infeasible: AtomicU64::new(0),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let initial: Vec<(Vec<f64>, Option<f64>)> = (0..2 * (2 * l + 3))
        .map(|_| {
            let x = random_design(&mut rng, l, &GenerationRanges::default(), &FixedParams::default()).unwrap();
            (x.to_vec(), None)
        })
        .collect();
    let cfg = EaConfig {
        max_iterations: 30,
        p_mutation: 1.0,
        p_crossover: 0.5,
        seed: 5,
        ..EaConfig::default()
    };
    let r = ea_optimize(&problem, initial, &cfg).unwrap();
    assert_eq!(problem.infeasible.load(Ordering::SeqCst), 0);
    assert_eq!(r.evaluations, sim.counts().n_coarse);
    assert_eq!(sim.counts().n_fine, 0);
}
