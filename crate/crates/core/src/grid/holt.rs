use crate::filters::Transition;
use crate::prelude::*;
use crate::{DMatrix, DVector, Error, Result};

/// Holt's two-parameter exponential smoothing, used as the state transition
/// `f(x_{t-1}) = Δ_{t-1} + Γ_{t-1}` with
///
/// ```text
/// Δ_{t-1} = Υ x_{t-1} + (1 - Υ) x̃_{t-1}
/// Γ_{t-1} = Υ (Δ_{t-1} - Δ_{t-2}) + (1 - θ) Γ_{t-2}
/// ```
///
/// where `x̃_{t-1}` is the previous prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct HoltState {
    pub upsilon: f64,
    pub theta: f64,
    /// Δ_{t-2}
    pub level: DVector<f64>,
    /// Γ_{t-2}
    pub trend: DVector<f64>,
    /// x̃_{t-1}
    pub prediction: DVector<f64>,
}

impl HoltState {
    pub const DEFAULT_UPSILON: f64 = 0.3;
    pub const DEFAULT_THETA: f64 = 0.9;

    /// Starts from `x0` with zero trend, so the first forecast returns `x0`.
    pub fn new(x0: &DVector<f64>, upsilon: f64, theta: f64) -> Result<Self> {
        for (name, v) in [("upsilon", upsilon), ("theta", theta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!("holt {name} = {v} must lie in (0, 1)")));
            }
        }
        Ok(Self::from_parts(upsilon, theta, x0.clone(), DVector::zeros(x0.len()), x0.clone()))
    }

    /// Raw constructor; coefficients are not range-checked.
    pub fn from_parts(
        upsilon: f64,
        theta: f64,
        level: DVector<f64>,
        trend: DVector<f64>,
        prediction: DVector<f64>,
    ) -> Self {
        Self { upsilon, theta, level, trend, prediction }
    }

    fn level_and_trend(&self, x_prev: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let level = x_prev * self.upsilon + &self.prediction * (1.0 - self.upsilon);
        let trend = (&level - &self.level) * self.upsilon + &self.trend * (1.0 - self.theta);
        (level, trend)
    }

    /// Forecast from `x_prev` without touching the history.
    pub fn predict(&self, x_prev: &DVector<f64>) -> DVector<f64> {
        let (level, trend) = self.level_and_trend(x_prev);
        level + trend
    }

    /// Forecast from `x_prev` and the history shifted one step.
    pub fn forecast(&self, x_prev: &DVector<f64>) -> (DVector<f64>, HoltState) {
        let (level, trend) = self.level_and_trend(x_prev);
        let prediction = &level + &trend;
        let next = HoltState {
            upsilon: self.upsilon,
            theta: self.theta,
            level,
            trend,
            prediction: prediction.clone(),
        };
        (prediction, next)
    }

    /// `∂f/∂x_{t-1} = Υ(1 + Υ)·I`.
    pub fn jacobian_scale(&self) -> f64 {
        self.upsilon * (1.0 + self.upsilon)
    }
}

impl Transition for HoltState {
    fn dim(&self) -> usize {
        self.level.len()
    }

    fn forecast(&self, x: &DVector<f64>) -> DVector<f64> {
        self.predict(x)
    }

    fn jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::identity(n, n) * self.jacobian_scale()
    }

    fn advance(&mut self, x_prev: &DVector<f64>) {
        let (_, next) = HoltState::forecast(self, x_prev);
        *self = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn steady_history_is_a_fixed_point() {
        let x = v(&[1.0, -0.2, 1.04]);
        let h = HoltState::new(&x, 0.8, 0.5).unwrap();
        let (pred, next) = h.forecast(&x);
        assert_relative_eq!(pred, x, epsilon = 1e-15);
        assert_relative_eq!(next.forecast(&x).0, x, epsilon = 1e-15);
    }

    #[test]
    fn unit_upsilon_collapses() {
        let x = v(&[0.3, 1.1]);
        let h = HoltState::from_parts(1.0, 0.5, x.clone(), v(&[0.0, 0.0]), v(&[9.0, -4.0]));
        assert_relative_eq!(h.predict(&x), x, epsilon = 1e-15);
    }

    #[test]
    fn scalar_sequence_by_hand() {
        // x = 1 then 2, Υ = θ = 0.5, zero initial trend.
        // step 1: Δ = 1, Γ = 0, prediction 1.
        // step 2: Δ = 0.5·2 + 0.5·1 = 1.5, Γ = 0.5·(1.5 - 1) + 0.5·0 = 0.25 → 1.75
        let h = HoltState::new(&v(&[1.0]), 0.5, 0.5).unwrap();
        let (p1, h) = h.forecast(&v(&[1.0]));
        assert_relative_eq!(p1[0], 1.0);
        let (p2, h) = h.forecast(&v(&[2.0]));
        assert_relative_eq!(p2[0], 1.75, epsilon = 1e-15);
        assert_relative_eq!(h.trend[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn rejects_coefficients_outside_unit_interval() {
        let x = v(&[1.0]);
        assert!(HoltState::new(&x, 0.0, 0.5).is_err());
        assert!(HoltState::new(&x, 0.5, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn forecast_is_affine(
            a in prop::collection::vec(-2.0..2.0f64, 4),
            b in prop::collection::vec(-2.0..2.0f64, 4),
            s in -3.0..3.0f64,
        ) {
            // f is linear in (x, x̃, Δ, Γ) jointly: f(u + s·w) = f(u) + s·f(w)
            let mk = |xs: &[f64], k: usize| v(&[xs[k], xs[(k + 1) % 4], xs[(k + 2) % 4]]);
            let state = |xs: &[f64]| HoltState::from_parts(0.7, 0.4, mk(xs, 1), mk(xs, 2), mk(xs, 3));
            let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
            let lhs = state(&combo).predict(&mk(&combo, 0));
            let rhs = state(&a).predict(&mk(&a, 0)) + state(&b).predict(&mk(&b, 0)) * s;
            prop_assert!((lhs - rhs).amax() < 1e-12);
        }
    }
}
