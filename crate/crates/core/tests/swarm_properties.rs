use dse_core::metaheuristics::moves::{balance_factor, whale_fall_probability};
use dse_core::metaheuristics::{optimize, Algorithm, Bounds, SwarmConfig};
use proptest::prelude::*;

fn rastrigin(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v - 10.0 * (2.0 * core::f64::consts::PI * v).cos() + 10.0).sum()
}

fn algorithm() -> impl Strategy<Value = Algorithm> {
    prop_oneof![Just(Algorithm::Bwb), Just(Algorithm::Bwo), Just(Algorithm::Pso)]
}

proptest! {
    #[test]
    fn schedules_stay_in_range(mu0 in 1e-12f64..1.0, ratio in 0.0f64..=1.0) {
        let mu = balance_factor(mu0, ratio);
        prop_assert!(mu > 0.0 && mu < 1.0);
        let rho = whale_fall_probability(ratio);
        prop_assert!((0.05..=0.1).contains(&rho));
    }

    #[test]
    fn elitist_bounded_and_reproducible(alg in algorithm(), seed in any::<u64>(), dim in 1usize..6, lo in -5.0f64..0.0, width in 0.5f64..10.0) {
        let b = Bounds::uniform(dim, lo, lo + width).unwrap();
        let cfg = SwarmConfig::new(8, 15);
        let r = optimize(alg, &rastrigin, &b, &cfg, seed, &[]).unwrap();
        prop_assert_eq!(r.curve.len(), 16);
        prop_assert!(r.curve.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(b.contains(&r.best));
        prop_assert_eq!(r.fitness, rastrigin(&r.best));
        let again = optimize(alg, &rastrigin, &b, &cfg, seed, &[]).unwrap();
        prop_assert_eq!(r.curve, again.curve);
        prop_assert_eq!(r.best, again.best);
    }
}
