//! Averaged root-mean-square error and improvement percentages.

use crate::prelude::*;
use crate::{Error, Result};

/// Per-step RMSE over trials and components, and its time average.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArmseCurve {
    pub per_step: Vec<f64>,
    pub scalar: f64,
}

/// Streaming form of [`armse`]: trials are added one at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmseAccumulator {
    sums: Vec<f64>,
    components: usize,
    trials: usize,
}

impl ArmseAccumulator {
    pub fn new(steps: usize, components: usize) -> Self {
        Self { sums: vec![0.0; steps], components, trials: 0 }
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    /// Adds one trial given `estimate(t)[c]` and `truth(t)[c]` as step slices.
    pub fn add_trial<E, T>(&mut self, estimates: &[E], truth: &[T]) -> Result<()>
    where
        E: AsRef<[f64]>,
        T: AsRef<[f64]>,
    {
        if estimates.len() != self.sums.len() || truth.len() != self.sums.len() {
            return Err(Error::Dimension(format!(
                "expected {} steps, got {} estimates and {} truth",
                self.sums.len(),
                estimates.len(),
                truth.len()
            )));
        }
        let mut local = vec![0.0; self.sums.len()];
        for (t, (e, x)) in estimates.iter().zip(truth).enumerate() {
            let (e, x) = (e.as_ref(), x.as_ref());
            if e.len() != self.components || x.len() != self.components {
                return Err(Error::Dimension(format!(
                    "step {t}: expected {} components, got {} and {}",
                    self.components,
                    e.len(),
                    x.len()
                )));
            }
            local[t] = e.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        }
        self.add_squared_errors(&local)
    }

    /// Adds one trial given `Σ_c (v̂_t,c − v_t,c)²` for each step.
    pub fn add_squared_errors(&mut self, per_step: &[f64]) -> Result<()> {
        if per_step.len() != self.sums.len() {
            return Err(Error::Dimension(format!("expected {} steps, got {}", self.sums.len(), per_step.len())));
        }
        for (s, l) in self.sums.iter_mut().zip(per_step) {
            *s += l;
        }
        self.trials += 1;
        Ok(())
    }

    pub fn finish(&self) -> ArmseCurve {
        let denom = (self.components * self.trials) as f64;
        let per_step: Vec<f64> = if denom > 0.0 {
            self.sums.iter().map(|s| (s / denom).sqrt()).collect()
        } else {
            vec![0.0; self.sums.len()]
        };
        let scalar = if per_step.is_empty() { 0.0 } else { per_step.iter().sum::<f64>() / per_step.len() as f64 };
        ArmseCurve { per_step, scalar }
    }
}

/// `RMSE_t = sqrt(Σ_j ‖v̂_t^j − v_t^j‖² / (C·D))`, indexed `[trial][step][component]`.
pub fn armse(estimates: &[Vec<Vec<f64>>], truth: &[Vec<Vec<f64>>]) -> Result<ArmseCurve> {
    if estimates.len() != truth.len() || estimates.is_empty() {
        return Err(Error::Dimension(format!("{} estimate trials vs {} truth trials", estimates.len(), truth.len())));
    }
    let steps = estimates[0].len();
    let components = estimates[0].first().map_or(0, Vec::len);
    let mut acc = ArmseAccumulator::new(steps, components);
    for (e, x) in estimates.iter().zip(truth) {
        acc.add_trial(e, x)?;
    }
    Ok(acc.finish())
}

/// `(baseline − candidate) / baseline · 100`.
pub fn improvement(baseline: f64, candidate: f64) -> f64 {
    if baseline == 0.0 {
        return 0.0;
    }
    (baseline - candidate) / baseline * 100.0
}
