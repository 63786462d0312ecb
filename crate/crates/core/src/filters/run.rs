use super::update::{build_regression, ckmmc_update, joseph_update};
use super::{FilterConfig, FilterState, Observation, Transition, Variant};
use crate::linalg::{asymmetry, min_eigenvalue, pseudo_inverse, symmetrize};
use crate::prelude::*;
use crate::unscented::{cross_covariance, sigma_points, ut_propagate, SigmaEnsemble};
use crate::{DMatrix, DVector, Error, Result};

/// Time-update moments and the sigma points redrawn around them.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub ensemble: SigmaEnsemble,
}

/// Unscented time update through the transition, plus `Q`.
pub fn predict<T: Transition>(fs: &FilterState<T>, cfg: &FilterConfig) -> Result<Prior> {
    let ens = sigma_points(&fs.mean, &fs.cov, &cfg.ut)?;
    let prop = ut_propagate(&ens, |x| fs.transition.forecast(x), Some(&cfg.process_cov));
    let cov = symmetrize(&prop.cov);
    let ensemble = sigma_points(&prop.mean, &cov, &cfg.ut)?;
    Ok(Prior { mean: prop.mean, cov, ensemble })
}

/// Per-step diagnostics of a measurement update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateInfo {
    pub iterations: usize,
    pub fallback: bool,
    pub used_pinv: bool,
}

fn solve_gain(cross: &DMatrix<f64>, s: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    match s.clone().cholesky() {
        Some(ch) => (ch.solve(&cross.transpose()).transpose(), false),
        None => (cross * pseudo_inverse(s), true),
    }
}

fn check_finite(x: &DVector<f64>) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence("non-finite posterior mean".into()))
    }
}

fn advanced<T: Transition + Clone>(fs: &FilterState<T>) -> T {
    let mut tr = fs.transition.clone();
    tr.advance(&fs.mean);
    tr
}

/// One step of any UKF-family variant.
fn unscented_step<T, O>(
    fs: &FilterState<T>,
    y: &DVector<f64>,
    obs: &O,
    cfg: &FilterConfig,
) -> Result<(FilterState<T>, UpdateInfo)>
where
    T: Transition + Clone,
    O: Observation + ?Sized,
{
    let prior = predict(fs, cfg)?;
    let meas = ut_propagate(&prior.ensemble, |x| obs.observe(x), Some(&cfg.measurement_cov));
    let pxy = cross_covariance(&prior.ensemble, &meas.points, &meas.mean);
    let r = &cfg.measurement_cov;

    let (mean, cov, info) = if cfg.variant.is_robust() {
        let mix = cfg.kernel.as_ref().ok_or_else(|| Error::InvalidConfig("missing kernel".into()))?;
        let reg = build_regression(&prior.mean, &prior.cov, &pxy, y, &meas.mean, r)?;
        let out = ckmmc_update(&reg, mix, cfg.tolerance, cfg.max_iterations)?;
        let cov = joseph_update(&prior.cov, &out.gain, &reg.slope, r);
        let info = UpdateInfo { iterations: out.iterations, fallback: out.fallback, used_pinv: out.used_pinv };
        (out.mean, cov, info)
    } else {
        let (gain, used_pinv) = solve_gain(&pxy, &symmetrize(&meas.cov));
        let mean = &prior.mean + &gain * (y - &meas.mean);
        let slope = match prior.cov.clone().cholesky() {
            Some(ch) => ch.solve(&pxy).transpose(),
            None => (pseudo_inverse(&prior.cov) * &pxy).transpose(),
        };
        let cov = joseph_update(&prior.cov, &gain, &slope, r);
        (mean, cov, UpdateInfo { iterations: 1, fallback: false, used_pinv })
    };
    check_finite(&mean)?;
    Ok((FilterState { mean, cov, transition: advanced(fs) }, info))
}

/// Standard UKF step regardless of `cfg.variant`.
pub fn ukf_step<T, O>(fs: &FilterState<T>, y: &DVector<f64>, obs: &O, cfg: &FilterConfig) -> Result<FilterState<T>>
where
    T: Transition + Clone,
    O: Observation + ?Sized,
{
    let mut c = cfg.clone();
    c.variant = Variant::Ukf;
    unscented_step(fs, y, obs, &c).map(|r| r.0)
}

/// Extended Kalman step with the transition and measurement Jacobians.
pub fn ekf_step<T, O>(fs: &FilterState<T>, y: &DVector<f64>, obs: &O, cfg: &FilterConfig) -> Result<FilterState<T>>
where
    T: Transition + Clone,
    O: Observation + ?Sized,
{
    ekf_inner(fs, y, obs, cfg).map(|r| r.0)
}

fn ekf_inner<T, O>(
    fs: &FilterState<T>,
    y: &DVector<f64>,
    obs: &O,
    cfg: &FilterConfig,
) -> Result<(FilterState<T>, UpdateInfo)>
where
    T: Transition + Clone,
    O: Observation + ?Sized,
{
    let prior_mean = fs.transition.forecast(&fs.mean);
    let f = fs.transition.jacobian(&fs.mean);
    let prior_cov = symmetrize(&(&f * &fs.cov * f.transpose() + &cfg.process_cov));
    let h = obs.jacobian(&prior_mean);
    let y_hat = obs.observe(&prior_mean);
    let pht = &prior_cov * h.transpose();
    let s = symmetrize(&(&h * &pht + &cfg.measurement_cov));
    let (gain, used_pinv) = solve_gain(&pht, &s);
    let mean = &prior_mean + &gain * (y - y_hat);
    check_finite(&mean)?;
    let cov = joseph_update(&prior_cov, &gain, &h, &cfg.measurement_cov);
    Ok((FilterState { mean, cov, transition: advanced(fs) }, UpdateInfo { iterations: 1, fallback: false, used_pinv }))
}

/// One step dispatched on `cfg.variant`.
pub fn filter_step<T, O>(
    fs: &FilterState<T>,
    y: &DVector<f64>,
    obs: &O,
    cfg: &FilterConfig,
) -> Result<(FilterState<T>, UpdateInfo)>
where
    T: Transition + Clone,
    O: Observation + ?Sized,
{
    if y.len() != obs.dim() || y.len() != cfg.measurement_dim() {
        return Err(Error::Dimension(format!(
            "measurement length {}, observation {}, R {}",
            y.len(),
            obs.dim(),
            cfg.measurement_dim()
        )));
    }
    match cfg.variant {
        Variant::Ekf => ekf_inner(fs, y, obs, cfg),
        _ => unscented_step(fs, y, obs, cfg),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based time index.
    pub t: usize,
    pub mean: DVector<f64>,
    pub cov_diag: DVector<f64>,
    pub iterations: usize,
    pub fallback: bool,
    pub used_pinv: bool,
    /// Present when the configuration asks for covariance checks.
    pub min_eigenvalue: Option<f64>,
    pub asymmetry: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub variant: Variant,
    pub records: Vec<StepRecord>,
    pub final_cov: DMatrix<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn means(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.records.iter().map(|r| &r.mean)
    }

    pub fn fallback_count(&self) -> usize {
        self.records.iter().filter(|r| r.fallback).count()
    }
}

/// Runs `cfg.variant` over the measurement sequence `ys` (`ys[0]` is `y_1`).
pub fn run_filter<T, O>(
    cfg: &FilterConfig,
    transition: T,
    obs: &O,
    ys: &[DVector<f64>],
    x0: &DVector<f64>,
    p0: &DMatrix<f64>,
) -> Result<Trajectory>
where
    T: Transition + Clone,
    O: Observation + ?Sized,
{
    cfg.validate()?;
    if ys.is_empty() {
        return Err(Error::InvalidConfig("empty measurement sequence".into()));
    }
    if cfg.state_dim() != x0.len() {
        return Err(Error::Dimension(format!("Q is {0}x{0} but the state has length {1}", cfg.state_dim(), x0.len())));
    }
    let mut fs = FilterState::new(x0.clone(), p0.clone(), transition)?;
    let mut records = Vec::with_capacity(ys.len());
    for (k, y) in ys.iter().enumerate() {
        let t = k + 1;
        let (next, info) = filter_step(&fs, y, obs, cfg).map_err(|e| e.at_step(t))?;
        fs = next;
        records.push(StepRecord {
            t,
            mean: fs.mean.clone(),
            cov_diag: fs.cov.diagonal(),
            iterations: info.iterations,
            fallback: info.fallback,
            used_pinv: info.used_pinv,
            min_eigenvalue: cfg.check_covariance.then(|| min_eigenvalue(&fs.cov)),
            asymmetry: asymmetry(&fs.cov),
        });
    }
    Ok(Trajectory { variant: cfg.variant, records, final_cov: fs.cov })
}
