use super::*;
use crate::correntropy::KernelFamily;

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 { xs[n / 2] } else { 0.5 * (xs[n / 2 - 1] + xs[n / 2]) }
}

#[test]
fn constant_objective_gives_flat_curve() {
    let b = Bounds::uniform(3, -1.0, 1.0).unwrap();
    for alg in [Algorithm::Bwb, Algorithm::Bwo, Algorithm::Pso] {
        let r = optimize(alg, &|_: &[f64]| 4.25, &b, &SwarmConfig::new(8, 20), 1, &[]).unwrap();
        assert_eq!(r.fitness, 4.25);
        assert!(r.curve.iter().all(|&c| c == 4.25));
        assert_eq!(r.curve.len(), 21);
    }
}

#[test]
fn one_dimensional_abs() {
    let b = Bounds::uniform(1, -1.0, 1.0).unwrap();
    let r = bwb_optimize(&|x: &[f64]| x[0].abs(), &b, &SwarmConfig::new(30, 200), 3).unwrap();
    assert!(r.fitness < 1e-6, "{}", r.fitness);
}

#[test]
fn curves_are_monotone_and_positions_bounded() {
    let b = Bounds::uniform(5, -2.0, 3.0).unwrap();
    for alg in [Algorithm::Bwb, Algorithm::Bwo, Algorithm::Pso] {
        let r = optimize(alg, &sphere, &b, &SwarmConfig::new(10, 60), 5, &[]).unwrap();
        assert!(r.curve.windows(2).all(|w| w[1] <= w[0]));
        assert!(b.contains(&r.best));
        assert_eq!(r.fitness, *r.curve.last().unwrap());
    }
}

#[test]
fn deterministic_per_seed() {
    let b = Bounds::uniform(4, -5.0, 5.0).unwrap();
    for alg in [Algorithm::Bwb, Algorithm::Bwo, Algorithm::Pso] {
        let cfg = SwarmConfig::new(12, 40);
        let a = optimize(alg, &sphere, &b, &cfg, 77, &[]).unwrap();
        let c = optimize(alg, &sphere, &b, &cfg, 77, &[]).unwrap();
        assert_eq!(a, c);
    }
}

struct Failing;
impl Objective for Failing {
    fn evaluate(&self, x: &[f64]) -> Option<f64> {
        if x[0] > 0.0 { None } else { Some(-x[0]) }
    }
}

#[test]
fn failures_are_counted_and_skipped() {
    let b = Bounds::uniform(1, -1.0, 1.0).unwrap();
    let r = bwb_optimize(&Failing, &b, &SwarmConfig::new(10, 30), 9).unwrap();
    assert!(r.failures > 0);
    assert!(r.best[0] <= 0.0);
    struct Never;
    impl Objective for Never {
        fn evaluate(&self, _: &[f64]) -> Option<f64> {
            None
        }
    }
    assert!(matches!(bwo_optimize(&Never, &b, &SwarmConfig::new(4, 3), 1), Err(Error::AllEvaluationsFailed)));
}

#[test]
fn pso_sphere_five_dims() {
    let b = Bounds::uniform(5, -100.0, 100.0).unwrap();
    let r = pso_optimize(&sphere, &b, &SwarmConfig::new(30, 500), 11).unwrap();
    assert!(r.fitness < 1e-6, "{}", r.fitness);
}

#[test]
fn bwo_sphere_converges() {
    let f1 = Benchmark::by_name("F1").unwrap();
    let r = bwo_optimize(&f1, &Bounds::of(&f1), &SwarmConfig::new(30, 500), 2).unwrap();
    assert!(r.fitness < 1e-10, "{}", r.fitness);
}

#[test]
fn explore_proposals_stay_in_bounds() {
    use rand::Rng;
    use rand::seq::SliceRandom;
    let b = Bounds::uniform(6, -1.0, 2.0).unwrap();
    let mut rng = crate::rng::stream(4, &[]);
    for _ in 0..1000 {
        let own = b.sample(&mut rng);
        let partner = b.sample(&mut rng);
        let mut perm: Vec<usize> = (0..6).collect();
        perm.shuffle(&mut rng);
        let mut x = moves::explore(&own, &partner, &perm, rng.random(), rng.random());
        b.clamp(&mut x);
        assert!(b.contains(&x));
    }
}

#[test]
fn levy_factor_median_matches_analytic() {
    // |η ζ| / |ν|^{2/3} with three independent standard normals: the median
    // of a product of independent positive variables lies near the product
    // of medians; each |N(0,1)| has median ≈ 0.6745
    let mut rng = crate::rng::stream(5, &[]);
    let mut xs: Vec<f64> =
        (0..10_000).map(|_| moves::levy_factor(normal(&mut rng), normal(&mut rng), normal(&mut rng)).abs()).collect();
    let m = median(&mut xs);
    let analytic = 0.6745f64 * 0.6745 / 0.6745f64.powf(2.0 / 3.0);
    assert!(m > analytic / 10.0 && m < analytic * 10.0, "{m} vs {analytic}");
}

#[test]
fn coefficient_space_round_trip() {
    let space = CoefficientSpace::new(KernelFamily::Cauchy, vec![0.5, 0.5]);
    assert_eq!(space.dim(), 4);
    let w = [1.0, 0.1, 1.5, 1.5];
    let (ut, k) = space.decode(&w).unwrap();
    assert_eq!(space.encode(&ut, k.as_ref()), w.to_vec());
    assert!(space.decode(&[1.0, 0.1]).is_err());
}

#[test]
fn collapsed_box_returns_its_point() {
    let space = CoefficientSpace::new(KernelFamily::Cauchy, vec![1.0])
        .with_bounds(Bounds::new(vec![1.0, 0.1, 1.8], vec![1.0, 0.1, 1.8]).unwrap())
        .unwrap();
    let obj = |w: &[f64]| (w[0] - 0.5).powi(2) + w[2];
    let r = tune_coefficients(&obj, &space, Algorithm::Bwb, &SwarmConfig::new(5, 10), 1, None).unwrap();
    assert_eq!(r.coefficients, vec![1.0, 0.1, 1.8]);
    assert_eq!(r.fitness, 0.25 + 1.8);
}

#[test]
fn tuning_never_loses_to_incumbent() {
    let space = CoefficientSpace::new(KernelFamily::Cauchy, vec![0.5, 0.5]);
    let obj = |w: &[f64]| (w[0] - 1.3).powi(2) + (w[1] - 2.0).powi(2) + (w[2] - 4.0).abs() + (w[3] - 0.7).abs();
    let inc = [1.0, 0.1, 1.5, 1.5];
    for seed in 0..5 {
        let r = tune_coefficients(&obj, &space, Algorithm::Bwb, &SwarmConfig::new(6, 5), seed, Some(&inc)).unwrap();
        assert!(r.fitness <= r.incumbent_fitness.unwrap());
    }
    assert!(tune_coefficients(&obj, &space, Algorithm::Bwb, &SwarmConfig::new(6, 5), 0, Some(&[5.0, 0.0, 1.0, 1.0])).is_err());
}
