//! Sigma points, weights and the unscented transform.

use crate::linalg::cholesky_jittered;
use crate::prelude::*;
use crate::{DMatrix, DVector, Error, Result};

/// Spread parameters of the unscented transform.
///
/// `alpha` sets both the sigma-point spread in `ζ = α²(n + λ) − n` and the
/// centre covariance weight `1 − α² + β`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UTConfig {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl Default for UTConfig {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 0.1, lambda: 0.0 }
    }
}

impl UTConfig {
    pub fn new(alpha: f64, beta: f64, lambda: f64) -> Self {
        Self { alpha, beta, lambda }
    }

    /// The classical `λ = 3 − n` choice.
    pub fn with_classic_lambda(alpha: f64, beta: f64, n: usize) -> Self {
        Self::new(alpha, beta, 3.0 - n as f64)
    }

    pub fn zeta(&self, n: usize) -> Result<f64> {
        compute_zeta(self, n)
    }
}

/// `ζ = α²(n + λ) − n`, rejecting spreads with `n + ζ ≤ 0`.
pub fn compute_zeta(cfg: &UTConfig, n: usize) -> Result<f64> {
    if !(cfg.alpha > 0.0) {
        return Err(Error::InvalidScale(cfg.alpha));
    }
    let nf = n as f64;
    let zeta = cfg.alpha * cfg.alpha * (nf + cfg.lambda) - nf;
    if !(nf + zeta > 0.0) || !zeta.is_finite() {
        return Err(Error::InvalidScale(zeta));
    }
    Ok(zeta)
}

/// Mean and covariance weights, each of length `2n + 1`.
pub fn weights(n: usize, zeta: f64, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    let s = n as f64 + zeta;
    let side = 1.0 / (2.0 * s);
    let mut wm = vec![side; 2 * n + 1];
    let mut wc = wm.clone();
    wm[0] = zeta / s;
    wc[0] = zeta / s + (1.0 - alpha * alpha + beta);
    (wm, wc)
}

/// `2n + 1` sigma points stored as matrix columns, with their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaEnsemble {
    pub points: DMatrix<f64>,
    pub mean_weights: Vec<f64>,
    pub cov_weights: Vec<f64>,
}

impl SigmaEnsemble {
    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.nrows()
    }

    pub fn point(&self, l: usize) -> DVector<f64> {
        self.points.column(l).into_owned()
    }

    /// Weighted mean of the points.
    pub fn mean(&self) -> DVector<f64> {
        weighted_mean(&self.points, &self.mean_weights)
    }

    /// Applies `f` to every point, collecting the images as columns.
    pub fn map<F>(&self, mut f: F) -> DMatrix<f64>
    where
        F: FnMut(&DVector<f64>) -> DVector<f64>,
    {
        let images: Vec<DVector<f64>> = (0..self.len()).map(|l| f(&self.point(l))).collect();
        DMatrix::from_columns(&images)
    }
}

/// Sigma points around `mean` using the lower Cholesky factor of `(n + ζ)·cov`.
pub fn sigma_points(mean: &DVector<f64>, cov: &DMatrix<f64>, cfg: &UTConfig) -> Result<SigmaEnsemble> {
    let n = mean.len();
    let zeta = compute_zeta(cfg, n)?;
    sigma_points_with_zeta(mean, cov, zeta, cfg.alpha, cfg.beta)
}

pub fn sigma_points_with_zeta(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    zeta: f64,
    alpha: f64,
    beta: f64,
) -> Result<SigmaEnsemble> {
    let n = mean.len();
    if cov.nrows() != n || cov.ncols() != n {
        return Err(Error::Dimension(format!(
            "covariance is {}x{}, mean has length {n}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let scale = n as f64 + zeta;
    if !(scale > 0.0) {
        return Err(Error::InvalidScale(zeta));
    }
    let root = cholesky_jittered(&(cov * scale))?;
    let mut points = DMatrix::zeros(n, 2 * n + 1);
    points.set_column(0, mean);
    for l in 0..n {
        let c = root.column(l);
        points.set_column(1 + l, &(mean + c));
        points.set_column(1 + n + l, &(mean - c));
    }
    let (mean_weights, cov_weights) = weights(n, zeta, alpha, beta);
    Ok(SigmaEnsemble { points, mean_weights, cov_weights })
}

/// Moments of a transformed ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub points: DMatrix<f64>,
}

/// Pushes the ensemble through `f` and returns the weighted mean, the
/// weighted covariance plus `additive_cov`, and the image points.
pub fn ut_propagate<F>(ens: &SigmaEnsemble, f: F, additive_cov: Option<&DMatrix<f64>>) -> Propagated
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let points = ens.map(f);
    let mean = weighted_mean(&points, &ens.mean_weights);
    let mut cov = weighted_cross(&points, &mean, &points, &mean, &ens.cov_weights);
    if let Some(q) = additive_cov {
        cov += q;
    }
    Propagated { mean, cov, points }
}

/// `Σ φ_c (ψ − x̂)(z − ẑ)ᵀ` where `x̂` is the ensemble's weighted mean.
pub fn cross_covariance(state_ens: &SigmaEnsemble, meas_points: &DMatrix<f64>, meas_mean: &DVector<f64>) -> DMatrix<f64> {
    let state_mean = state_ens.mean();
    weighted_cross(&state_ens.points, &state_mean, meas_points, meas_mean, &state_ens.cov_weights)
}

fn weighted_mean(points: &DMatrix<f64>, w: &[f64]) -> DVector<f64> {
    let mut mean = DVector::zeros(points.nrows());
    for (l, wl) in w.iter().enumerate() {
        mean.axpy(*wl, &points.column(l), 1.0);
    }
    mean
}

fn weighted_cross(
    a: &DMatrix<f64>,
    a_mean: &DVector<f64>,
    b: &DMatrix<f64>,
    b_mean: &DVector<f64>,
    w: &[f64],
) -> DMatrix<f64> {
    let mut da = a.clone();
    let mut db = b.clone();
    for l in 0..a.ncols() {
        let mut ca = da.column_mut(l);
        ca -= a_mean;
        ca *= w[l];
        let mut cb = db.column_mut(l);
        cb -= b_mean;
    }
    da * db.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    fn spd(n: usize, seed: u64) -> DMatrix<f64> {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, &[n as u64]);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(n, n) * 0.1
    }

    #[test]
    fn zeta_examples() {
        let c = UTConfig::new(1.0, 0.1, 0.0);
        assert_eq!(compute_zeta(&c, 27).unwrap(), 0.0);
        let c = UTConfig::with_classic_lambda(1.0, 0.0, 5);
        assert_relative_eq!(compute_zeta(&c, 5).unwrap(), 3.0 - 5.0);
        let c = UTConfig::new(0.5, 0.0, 0.0);
        // n + ζ = 1 > 0, so the value is accepted
        assert_relative_eq!(compute_zeta(&c, 4).unwrap(), -3.0);
    }

    #[test]
    fn zeta_rejects_nonpositive_spread() {
        let c = UTConfig::new(1.0, 0.0, -4.0);
        assert!(matches!(compute_zeta(&c, 4), Err(Error::InvalidScale(_))));
        assert!(compute_zeta(&UTConfig::new(0.0, 0.0, 0.0), 3).is_err());
    }

    #[test]
    fn weight_examples() {
        let (wm, wc) = weights(27, 0.0, 1.0, 0.1);
        assert_eq!(wm[0], 0.0);
        assert_relative_eq!(wc[0], 0.1, epsilon = 1e-15);
        assert!(wm[1..].iter().all(|w| (w - 1.0 / 54.0).abs() < 1e-15));
        let (wm, wc) = weights(4, 0.5, 1.0, 0.0);
        assert_eq!(wm[0], wc[0]);
        let (wm, _) = weights(3, 1.0, 1.0, 0.0);
        assert_relative_eq!(wm[0], 0.25);
        assert_relative_eq!(wm[1], 0.125);
        assert_relative_eq!(wm.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn scalar_points() {
        let ens = sigma_points(&DVector::from_element(1, 0.0), &DMatrix::from_element(1, 1, 1.0), &UTConfig::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(ens.points.as_slice(), &[0.0, 1.0, -1.0]);
    }

    #[test]
    fn zero_covariance_collapses_points() {
        let mean = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let ens = sigma_points(&mean, &DMatrix::zeros(3, 3), &UTConfig::default()).unwrap();
        for l in 0..ens.len() {
            assert_eq!(ens.point(l), mean);
        }
    }

    #[test]
    fn offsets_reconstruct_scaled_covariance() {
        // Compare against the symmetric square root: any factor S with
        // S Sᵀ = (n+ζ)P must reproduce the same outer-product sum.
        for (n, seed) in [(2usize, 1u64), (5, 2), (9, 3)] {
            let p = if n == 2 { DMatrix::from_diagonal(&DVector::from_column_slice(&[4.0, 9.0])) } else { spd(n, seed) };
            let cfg = UTConfig::new(1.0, 0.1, 0.0);
            let zeta = compute_zeta(&cfg, n).unwrap();
            let ens = sigma_points(&DVector::zeros(n), &p, &cfg).unwrap();
            let mut outer = DMatrix::zeros(n, n);
            for l in 1..=n {
                let d = ens.point(l);
                outer += &d * d.transpose();
            }
            let eig = SymmetricEigen::new(p.clone() * (n as f64 + zeta));
            let sqrt = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()))
                * eig.eigenvectors.transpose();
            let oracle = &sqrt * &sqrt;
            assert_relative_eq!(outer, oracle, max_relative = 1e-10, epsilon = 1e-12);
            if n == 2 {
                assert_relative_eq!(ens.point(1)[0], 2.0 * 2f64.sqrt(), epsilon = 1e-14);
                assert_relative_eq!(ens.point(2)[1], 3.0 * 2f64.sqrt(), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn identity_propagation_keeps_mean() {
        let mean = DVector::from_column_slice(&[0.3, -1.2, 4.0]);
        let ens = sigma_points(&mean, &spd(3, 7), &UTConfig::default()).unwrap();
        let out = ut_propagate(&ens, |x| x.clone(), None);
        assert_relative_eq!(out.mean, mean, epsilon = 1e-14);
    }

    #[test]
    fn affine_map_is_exact() {
        use rand::Rng;
        let (n, m) = (6, 4);
        let mut rng = crate::rng::stream(11, &[]);
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-2.0..2.0));
        let b = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let mu = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let p = spd(n, 5);
        let q = spd(m, 6);
        for cfg in [UTConfig::default(), UTConfig::with_classic_lambda(1.0, 2.0, n), UTConfig::new(0.7, 0.4, 1.0)] {
            let ens = sigma_points(&mu, &p, &cfg).unwrap();
            let out = ut_propagate(&ens, |x| &a * x + &b, Some(&q));
            assert_relative_eq!(out.mean, &a * &mu + &b, max_relative = 1e-10);
            let expected_cov = &a * &p * a.transpose() + &q;
            assert_relative_eq!(out.cov, expected_cov, max_relative = 1e-10, epsilon = 1e-12);
            let pxy = cross_covariance(&ens, &out.points, &out.mean);
            assert_relative_eq!(pxy, &p * a.transpose(), max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn square_of_unit_gaussian() {
        let ens = sigma_points(&DVector::from_element(1, 0.0), &DMatrix::from_element(1, 1, 1.0), &UTConfig::new(1.0, 0.0, 0.0)).unwrap();
        let out = ut_propagate(&ens, |x| x.map(|v| v * v), None);
        assert_relative_eq!(out.mean[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn identity_cross_covariance_reconstructs_state_covariance() {
        let p = spd(4, 9);
        let mean = DVector::from_column_slice(&[1.0, 0.0, -1.0, 2.0]);
        let ens = sigma_points(&mean, &p, &UTConfig::default()).unwrap();
        let pxy = cross_covariance(&ens, &ens.points, &mean);
        assert_relative_eq!(pxy, p, max_relative = 1e-10, epsilon = 1e-12);
        let flat = DMatrix::from_fn(3, ens.len(), |r, _| r as f64);
        let flat_mean = flat.column(0).into_owned();
        assert_eq!(cross_covariance(&ens, &flat, &flat_mean), DMatrix::zeros(4, 3));
    }

    #[test]
    fn mismatched_covariance_is_rejected() {
        let r = sigma_points(&DVector::zeros(3), &DMatrix::identity(2, 2), &UTConfig::default());
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn indefinite_covariance_reports_eigenvalue() {
        let p = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1.0]));
        match sigma_points(&DVector::zeros(2), &p, &UTConfig::default()) {
            Err(Error::Decomposition { min_eigenvalue }) => assert!(min_eigenvalue < -1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn mean_weights_sum_to_one(n in 1usize..120, alpha in 0.2..2.0f64, beta in 0.0..3.0f64, lambda in 0.0..5.0f64) {
            let cfg = UTConfig::new(alpha, beta, lambda);
            if let Ok(z) = compute_zeta(&cfg, n) {
                let (wm, wc) = weights(n, z, alpha, beta);
                prop_assert!((wm.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                prop_assert_eq!(wm.len(), 2 * n + 1);
                prop_assert_eq!(&wm[1..], &wc[1..]);
            }
        }

        #[test]
        fn ensemble_reconstructs_moments(seed in 0u64..500, n in 1usize..8) {
            let p = spd(n, seed);
            let mean = DVector::from_fn(n, |i, _| i as f64 * 0.3 - 1.0);
            let ens = sigma_points(&mean, &p, &UTConfig::default()).unwrap();
            prop_assert!((ens.mean() - &mean).amax() < 1e-10 * (1.0 + mean.amax()));
            prop_assert_eq!(ens.point(0), mean.clone());
            let out = ut_propagate(&ens, |x| x.clone(), None);
            prop_assert!((&out.cov - &p).amax() <= 1e-10 * p.amax());
        }
    }
}
