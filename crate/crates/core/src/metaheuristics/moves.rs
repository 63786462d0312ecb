//! Single-agent position updates with every random draw passed explicitly.

use crate::prelude::*;
use core::f64::consts::PI;

/// Balance factor `μ = μ₀ (1 − 0.5 T/T_max)`.
pub fn balance_factor(mu0: f64, ratio: f64) -> f64 {
    mu0 * (1.0 - 0.5 * ratio)
}

/// Whale-fall probability `ρ = 0.1 − 0.05 T/T_max`.
pub fn whale_fall_probability(ratio: f64) -> f64 {
    0.1 - 0.05 * ratio
}

/// Exploration move. Dimension `j` (counted from 1) reads the permuted
/// coordinate `perm[j]` of the agent and coordinate `perm[0]` of the partner;
/// even `j` use `sin(2π c₂)`, odd `j` use `cos(2π c₂)`.
pub fn explore(own: &[f64], partner: &[f64], perm: &[usize], c1: f64, c2: f64) -> Vec<f64> {
    let (s, c) = ((2.0 * PI * c2).sin(), (2.0 * PI * c2).cos());
    let anchor = partner[perm[0]];
    (0..own.len())
        .map(|j| {
            let base = own[perm[j]];
            let wave = if (j + 1) % 2 == 0 { s } else { c };
            base + (anchor - base) * (1.0 + c1) * wave
        })
        .collect()
}

/// Draws of the exploitation move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExploitDraws {
    pub c3: f64,
    pub c4: f64,
    pub eta: f64,
    pub zeta: f64,
    pub nu: f64,
}

/// Heavy-tailed step factor `η ζ / |ν|^{2/3}`.
pub fn levy_factor(eta: f64, zeta: f64, nu: f64) -> f64 {
    eta * zeta / nu.abs().powf(2.0 / 3.0)
}

/// `c₃ W_best − c₄ W_i + 0.1 c₄ (1 − T/T_max) · ηζ/|ν|^{2/3} · (W_r − W_i)`.
pub fn exploit(own: &[f64], partner: &[f64], best: &[f64], d: ExploitDraws, ratio: f64) -> Vec<f64> {
    let mut k = 0.1 * d.c4 * (1.0 - ratio) * levy_factor(d.eta, d.zeta, d.nu);
    if !k.is_finite() {
        k = 0.0;
    }
    own.iter()
        .zip(partner)
        .zip(best)
        .map(|((&w, &r), &b)| d.c3 * b - d.c4 * w + k * (r - w))
        .collect()
}

/// Step-size envelope `exp(−2ρϕ T/T_max)` of the whale fall.
pub fn whale_fall_envelope(rho: f64, agents: usize, ratio: f64) -> f64 {
    (-2.0 * rho * agents as f64 * ratio).exp()
}

/// `c₅ W_i − c₆ W_r + c₇ (u_b − l_b) exp(−2ρϕ T/T_max)`.
#[allow(clippy::too_many_arguments)]
pub fn whale_fall(
    own: &[f64],
    partner: &[f64],
    lower: &[f64],
    upper: &[f64],
    (c5, c6, c7): (f64, f64, f64),
    rho: f64,
    agents: usize,
    ratio: f64,
) -> Vec<f64> {
    let env = whale_fall_envelope(rho, agents, ratio);
    (0..own.len())
        .map(|j| c5 * own[j] - c6 * partner[j] + c7 * (upper[j] - lower[j]) * env)
        .collect()
}

/// Frequency `f = f_min + (f_max − f_min) γ`.
pub fn bat_frequency(fmin: f64, fmax: f64, gamma: f64) -> f64 {
    fmin + (fmax - fmin) * gamma
}

/// `v ← v + (x − x*) f`, then `x ← x + v`.
pub fn bat_move(x: &[f64], v: &[f64], best: &[f64], f: f64) -> (Vec<f64>, Vec<f64>) {
    let v_new: Vec<f64> = (0..x.len()).map(|j| v[j] + (x[j] - best[j]) * f).collect();
    let x_new = x.iter().zip(&v_new).map(|(a, b)| a + b).collect();
    (x_new, v_new)
}

pub fn clamp_into(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for j in 0..x.len() {
        let v = x[j];
        x[j] = if v.is_nan() { lower[j] + 0.5 * (upper[j] - lower[j]) } else { v.clamp(lower[j], upper[j]) };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coefficient_schedules() {
        assert_eq!(whale_fall_probability(0.0), 0.1);
        assert_relative_eq!(whale_fall_probability(1.0), 0.05);
        assert_eq!(balance_factor(0.8, 0.0), 0.8);
        assert_relative_eq!(balance_factor(0.8, 1.0), 0.4);
        let mut prev = f64::INFINITY;
        for t in 0..=100 {
            let r = t as f64 / 100.0;
            let e = whale_fall_envelope(whale_fall_probability(r), 30, r);
            assert!(e <= prev);
            prev = e;
        }
    }

    #[test]
    fn explore_with_self_partner() {
        // the partner reads coordinate q₁, so W_r = W_i cancels the
        // difference term whenever the coordinates read coincide
        let own = [0.7];
        assert_eq!(explore(&own, &own, &[0], 0.4, 0.13), vec![0.7]);
        let flat = [1.5; 4];
        let out = explore(&flat, &flat, &[2, 0, 3, 1], 0.9, 0.3);
        assert!(out.iter().all(|&v| (v - 1.5).abs() < 1e-15));
    }

    #[test]
    fn explore_sin_branch() {
        let own = [1.0, 4.0, -2.0, 0.5];
        let partner = [9.0, 8.0, 7.0, 6.0];
        let perm = [1, 3, 0, 2];
        let out = explore(&own, &partner, &perm, 0.0, 0.25);
        // anchor = partner[perm[0]] = 8
        for (j, &v) in out.iter().enumerate() {
            let base = own[perm[j]];
            if (j + 1) % 2 == 0 {
                assert_relative_eq!(v, base + (8.0 - base), epsilon = 1e-12);
            } else {
                // cos(π/2) = 0
                assert_relative_eq!(v, base, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn exploit_at_budget_end_drops_step() {
        let own = [1.0, -2.0];
        let partner = [5.0, 5.0];
        let best = [0.5, 0.5];
        let d = ExploitDraws { c3: 0.3, c4: 0.6, eta: 2.0, zeta: -1.5, nu: 0.2 };
        let out = exploit(&own, &partner, &best, d, 1.0);
        assert_relative_eq!(out[0], 0.3 * 0.5 - 0.6 * 1.0);
        assert_relative_eq!(out[1], 0.3 * 0.5 + 0.6 * 2.0);
        let same = exploit(&best, &best, &best, ExploitDraws { c3: 0.4, c4: 0.4, ..d }, 0.2);
        assert!(same.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn bat_examples() {
        assert_eq!(bat_frequency(10.0, 100.0, 0.0), 10.0);
        assert_eq!(bat_frequency(10.0, 100.0, 1.0), 100.0);
        let (x, v) = bat_move(&[1.0, 2.0], &[0.1, -0.2], &[1.0, 2.0], 55.0);
        assert_eq!(v, vec![0.1, -0.2]);
        assert_relative_eq!(x[0], 1.1);
        assert_relative_eq!(x[1], 1.8);
    }

    #[test]
    fn whale_fall_formula() {
        let out = whale_fall(&[1.0], &[2.0], &[-1.0], &[3.0], (0.5, 0.25, 0.1), 0.1, 10, 0.5);
        assert_relative_eq!(out[0], 0.5 - 0.5 + 0.1 * 4.0 * (-1.0f64).exp());
    }
}
