use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topoforge::geometry::{random_design, scale_design, DesignVector, FixedParams, GenerationRanges};
use topoforge::simbackend::{extract_resonances, CostModel, Fidelity, FrequencyGrid, Simulator};

fn design(seed: u64) -> DesignVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_design(&mut rng, 25, &GenerationRanges::default(), &FixedParams::default()).unwrap()
}

fn fidelity() -> impl Strategy<Value = Fidelity> {
    prop_oneof![Just(Fidelity::Coarse), Just(Fidelity::Fine)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mock_is_deterministic_and_passive(seed in any::<u64>(), f in fidelity()) {
        let sim = Simulator::mock();
        let grid = FrequencyGrid::default();
        let x = design(seed);
        let a = sim.evaluate(&x, &grid, f).unwrap();
        let b = sim.evaluate(&x, &grid, f).unwrap();
        prop_assert_eq!(a.values.len(), grid.n_points);
        prop_assert!(a.values.iter().zip(&b.values).all(|(p, q)| p.to_bits() == q.to_bits()));
        prop_assert!(a.values.iter().all(|v| (-40.0..=0.0).contains(v)));
    }

    #[test]
    fn resonances_follow_the_size_law(seed in any::<u64>(), gamma in 0.5f64..2.0) {
        let sim = Simulator::mock();
        let grid = FrequencyGrid::default();
        let x = design(seed);
        let a = sim.evaluate(&x, &grid, Fidelity::Fine).unwrap();
        let b = sim.evaluate(&scale_design(&x, gamma * x.c), &grid, Fidelity::Fine).unwrap();
        let ra = extract_resonances(&a, -3.0).unwrap();
        let rb = extract_resonances(&b, -3.0).unwrap();
        // Dips well inside the sweep in both responses must correspond.
        let interior = |f: f64| f > grid.f_min + 0.5 && f < grid.f_max - 0.5;
        for r in ra.iter().filter(|r| interior(r.freq_ghz) && interior(r.freq_ghz / gamma)) {
            let predicted = r.freq_ghz / gamma;
            let nearest = rb
                .iter()
                .map(|q| (q.freq_ghz - predicted).abs())
                .fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= grid.step(), "{} GHz dip expected near {predicted}, nearest off by {nearest}", r.freq_ghz);
        }
    }

    #[test]
    fn counters_conserve_cost(ops in prop::collection::vec(fidelity(), 0..40)) {
        let sim = Simulator::mock();
        let grid = FrequencyGrid::new(1.0, 10.0, 46).unwrap();
        let x = design(3);
        let mut last = 0.0;
        for f in ops {
            sim.evaluate(&x, &grid, f).unwrap();
            let c = sim.counts();
            let expected = c.n_coarse as f64 * 60.0 / 110.0 + c.n_fine as f64;
            prop_assert!((sim.fine_equivalent() - expected).abs() <= 1e-9);
            prop_assert!(sim.fine_equivalent() >= last);
            last = sim.fine_equivalent();
        }
    }
}

#[test]
fn default_costs() {
    let c = CostModel::default();
    assert_eq!((c.coarse_s, c.fine_s), (60.0, 110.0));
}

#[test]
fn fresh_counters_share_the_backend() {
    let sim = Simulator::mock();
    let other = sim.with_fresh_counter();
    let grid = FrequencyGrid::default();
    let x = design(1);
    let a = sim.evaluate(&x, &grid, Fidelity::Fine).unwrap();
    let b = other.evaluate(&x, &grid, Fidelity::Fine).unwrap();
    assert_eq!(a, b);
    assert_eq!(sim.counts().n_fine, 1);
    assert_eq!(other.counts().n_fine, 1);
}
