use crate::correntropy::{weight_matrix, KernelMixture, WeightMatrix};
use crate::linalg::{cholesky_jittered, lower_triangular_inverse, pseudo_inverse, symmetrize};
use crate::prelude::*;
use crate::{DMatrix, DVector, Error, Result};

/// Whitened linear regression of the prior and the linearized measurement.
///
/// Stacks `[x̂; y − ŷ + Ũx̂] = [I; Ũ] x + noise` and whitens it with the
/// block Cholesky factor `diag(B_P, B_R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub prior_mean: DVector<f64>,
    pub innovation: DVector<f64>,
    /// `Ũ = (P⁻¹ P_xy)ᵀ`, m×n.
    pub slope: DMatrix<f64>,
    pub chol_p: DMatrix<f64>,
    pub chol_r: DMatrix<f64>,
    /// `D = B⁻¹ [I; Ũ]`.
    pub d: DMatrix<f64>,
    /// `L = B⁻¹ [x̂; y − ŷ + Ũx̂]`.
    pub l: DVector<f64>,
    /// `L − D x̂`.
    pub residual: DVector<f64>,
}

impl RegressionModel {
    pub fn state_dim(&self) -> usize {
        self.prior_mean.len()
    }

    pub fn measurement_dim(&self) -> usize {
        self.innovation.len()
    }

    pub fn residual_at(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.l - &self.d * x
    }
}

fn triangular_inverse(l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    lower_triangular_inverse(l).ok_or(Error::Decomposition { min_eigenvalue: 0.0 })
}

pub fn build_regression(
    prior_mean: &DVector<f64>,
    prior_cov: &DMatrix<f64>,
    cross_cov: &DMatrix<f64>,
    y: &DVector<f64>,
    y_hat: &DVector<f64>,
    r: &DMatrix<f64>,
) -> Result<RegressionModel> {
    let n = prior_mean.len();
    let m = y.len();
    if prior_cov.shape() != (n, n) || cross_cov.shape() != (n, m) || y_hat.len() != m || r.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "regression inputs: n = {n}, m = {m}, P {:?}, Pxy {:?}, R {:?}",
            prior_cov.shape(),
            cross_cov.shape(),
            r.shape()
        )));
    }
    let chol_p = cholesky_jittered(prior_cov)?;
    let chol_r = cholesky_jittered(r)?;
    let bp_inv = triangular_inverse(&chol_p)?;
    let br_inv = triangular_inverse(&chol_r)?;

    // P⁻¹ P_xy through the factor: B⁻ᵀ B⁻¹ P_xy
    let slope = (bp_inv.transpose() * (&bp_inv * cross_cov)).transpose();

    let innovation = y - y_hat;
    let mut d = DMatrix::zeros(n + m, n);
    d.view_mut((0, 0), (n, n)).copy_from(&bp_inv);
    d.view_mut((n, 0), (m, n)).copy_from(&(&br_inv * &slope));
    let mut l = DVector::zeros(n + m);
    l.rows_mut(0, n).copy_from(&(&bp_inv * prior_mean));
    l.rows_mut(n, m).copy_from(&(&br_inv * (&innovation + &slope * prior_mean)));
    let residual = &l - &d * prior_mean;
    Ok(RegressionModel { prior_mean: prior_mean.clone(), innovation, slope, chol_p, chol_r, d, l, residual })
}

/// Result of the weighted fixed-point measurement update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub mean: DVector<f64>,
    pub gain: DMatrix<f64>,
    pub iterations: usize,
    /// The tolerance was not met; `mean` is the iterate with the smallest step.
    pub fallback: bool,
    /// At least one pass used the pseudo-inverse normal equations.
    pub used_pinv: bool,
    pub weights: WeightMatrix,
}

/// Modified covariance `B Θ⁻¹ Bᵀ` for a diagonal `Θ`.
fn reweighted(b: &DMatrix<f64>, theta: &[f64]) -> DMatrix<f64> {
    let mut scaled = b.clone();
    for (j, t) in theta.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / t);
    }
    scaled * b.transpose()
}

/// One pass in gain form: `P̃ = B_P Θ_P⁻¹ B_Pᵀ`, `R̃ = B_R Θ_R⁻¹ B_Rᵀ`,
/// `K̃ = P̃Ũᵀ(ŨP̃Ũᵀ + R̃)⁻¹`, `x = x̂ + K̃(y − ŷ)`. `None` when the innovation
/// covariance is not positive definite.
pub fn gain_form_estimate(reg: &RegressionModel, theta: &WeightMatrix) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let p_mod = reweighted(&reg.chol_p, theta.state_part());
    let r_mod = reweighted(&reg.chol_r, theta.measurement_part());
    let pu = &p_mod * reg.slope.transpose();
    let s = &reg.slope * &pu + r_mod;
    let gain = s.cholesky()?.solve(&pu.transpose()).transpose();
    Some((&reg.prior_mean + &gain * &reg.innovation, gain))
}

/// `x = (Dᵀ Θ D)⁺ Dᵀ Θ L`, the normal equations of the weighted regression.
pub fn normal_equation_estimate(reg: &RegressionModel, theta: &WeightMatrix) -> DVector<f64> {
    let mut dt_theta = reg.d.transpose();
    for (j, t) in theta.diag.iter().enumerate() {
        dt_theta.column_mut(j).scale_mut(*t);
    }
    pseudo_inverse(&(&dt_theta * &reg.d)) * (&dt_theta * &reg.l)
}

/// Solves the normal equations for the increment over the prior,
/// `x = x̂ + (DᵀΘD)⁻¹ D_Rᵀ Θ_R w` with `w = B_R⁻¹(y − ŷ)`, by Cholesky when
/// `DᵀΘD` is positive definite and by pseudo-inverse otherwise. Also returns
/// the sensitivity of the estimate to `y`, `(DᵀΘD)⁻¹ D_Rᵀ Θ_R B_R⁻¹`, when
/// `with_gain` is set.
fn solve_pass(
    reg: &RegressionModel,
    theta: &WeightMatrix,
    w: &DVector<f64>,
    with_gain: bool,
) -> (DVector<f64>, Option<DMatrix<f64>>, bool) {
    let n = reg.state_dim();
    let mut dt_theta = reg.d.transpose();
    for (j, t) in theta.diag.iter().enumerate() {
        dt_theta.column_mut(j).scale_mut(*t);
    }
    let z = &dt_theta * &reg.d;
    let dr_theta = dt_theta.columns(n, reg.measurement_dim());
    let rhs = &dr_theta * w;
    // D_Rᵀ Θ_R B_R⁻¹ = (B_R⁻ᵀ Θ_R D_R)ᵀ
    let sensitivity = || reg.chol_r.tr_solve_lower_triangular(&dr_theta.transpose()).map(|m| m.transpose());
    match z.clone().cholesky() {
        Some(ch) => {
            let x = &reg.prior_mean + ch.solve(&rhs);
            let gain = if with_gain { sensitivity().map(|b| ch.solve(&b)) } else { None };
            (x, gain, false)
        }
        None => {
            let z_pinv = pseudo_inverse(&z);
            let x = &reg.prior_mean + &z_pinv * rhs;
            let gain = if with_gain { sensitivity().map(|b| &z_pinv * b) } else { None };
            (x, gain, true)
        }
    }
}

struct Pass {
    mean: DVector<f64>,
    step: f64,
    weights: WeightMatrix,
}

/// Fixed-point iteration of the correntropy-weighted update, started from
/// the prior mean and stopped on relative step `≤ tolerance`.
///
/// Each pass solves the n×n information form of the gain update, which the
/// matrix inversion lemma makes identical to [`gain_form_estimate`].
pub fn ckmmc_update(
    reg: &RegressionModel,
    mix: &KernelMixture,
    tolerance: f64,
    max_iterations: usize,
) -> Result<UpdateOutcome> {
    let n = reg.state_dim();
    let mut x_prev = reg.prior_mean.clone();
    let mut best: Option<Pass> = None;
    let mut used_pinv = false;

    let w = reg
        .chol_r
        .solve_lower_triangular(&reg.innovation)
        .ok_or(Error::Decomposition { min_eigenvalue: 0.0 })?;
    let finish = |pass: Pass, iterations: usize, fallback: bool, used_pinv: bool| -> Result<UpdateOutcome> {
        let (_, gain, pinv) = solve_pass(reg, &pass.weights, &w, true);
        let gain = gain.ok_or(Error::Decomposition { min_eigenvalue: 0.0 })?;
        Ok(UpdateOutcome { mean: pass.mean, gain, iterations, fallback, used_pinv: used_pinv || pinv, weights: pass.weights })
    };

    for k in 1..=max_iterations.max(1) {
        let e = reg.residual_at(&x_prev);
        let theta = weight_matrix(&e, mix, n)?;
        let (x, _, pinv) = solve_pass(reg, &theta, &w, false);
        used_pinv |= pinv;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!("non-finite estimate at fixed-point pass {k}")));
        }

        let denom = x_prev.norm();
        let diff = (&x - &x_prev).norm();
        let step = if denom > 0.0 { diff / denom } else { diff };
        let pass = Pass { mean: x, step, weights: theta };
        if step <= tolerance {
            return finish(pass, k, false, used_pinv);
        }
        x_prev = pass.mean.clone();
        if best.as_ref().is_none_or(|b| pass.step < b.step) {
            best = Some(pass);
        }
    }

    finish(best.expect("at least one pass"), max_iterations.max(1), true, used_pinv)
}

/// `(I − KU) P (I − KU)ᵀ + K R Kᵀ`, symmetrized.
pub fn joseph_update(p_prior: &DMatrix<f64>, gain: &DMatrix<f64>, slope: &DMatrix<f64>, r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p_prior.nrows();
    let a = DMatrix::identity(n, n) - gain * slope;
    let p = &a * p_prior * a.transpose() + gain * r * gain.transpose();
    symmetrize(&p)
}
