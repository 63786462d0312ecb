//! Beluga-whale (BWO), its bat-hybrid (BWB) and particle-swarm optimizers.
//!
//! All optimizers minimize. Updates are synchronous: every agent proposes a
//! move from the same snapshot, the proposals are evaluated as one batch and
//! each agent keeps its proposal only if it does not worsen its fitness.
//! Each agent draws from its own stream derived from `(seed, iteration,
//! agent)`, so results do not depend on how a batch is evaluated.

pub mod benchmarks;
pub mod moves;
mod tuning;

pub use benchmarks::{benchmark, suite, Benchmark};
pub use tuning::{tune_coefficients, CoefficientSpace, TuneResult};

use crate::prelude::*;
use crate::rng::{stream, StreamRng};
use crate::{Error, Result};
use moves::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// A function to minimize. `None` or a non-finite value marks a failed
/// evaluation.
pub trait Objective {
    fn evaluate(&self, x: &[f64]) -> Option<f64>;

    /// Evaluates several points; implementations may run them concurrently
    /// but must return results in input order.
    fn evaluate_batch(&self, xs: &[Vec<f64>]) -> Vec<Option<f64>> {
        xs.iter().map(|x| self.evaluate(x)).collect()
    }
}

impl<F: Fn(&[f64]) -> f64> Objective for F {
    fn evaluate(&self, x: &[f64]) -> Option<f64> {
        Some(self(x))
    }
}

impl Objective for Benchmark {
    fn evaluate(&self, x: &[f64]) -> Option<f64> {
        Some(Benchmark::evaluate(self, x))
    }
}

/// Box constraints `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Dimension(format!("bounds of length {} and {}", lower.len(), upper.len())));
        }
        for (j, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l <= u) || !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidConfig(format!("bound {j}: [{l}, {u}] is not a finite interval")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn of(b: &Benchmark) -> Self {
        Self { lower: b.lower(), upper: b.upper() }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| l <= v && v <= u)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        clamp_into(x, &self.lower, &self.upper);
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim()).map(|j| self.lower[j] + rng.random::<f64>() * (self.upper[j] - self.lower[j])).collect()
    }
}

/// Law of the `ν` draw in the exploitation step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NuLaw {
    StandardNormal,
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Algorithm {
    Bwb,
    Bwo,
    Pso,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bwb => "BWB",
            Algorithm::Bwo => "BWO",
            Algorithm::Pso => "PSO",
        }
    }
}

impl core::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bwb" => Ok(Algorithm::Bwb),
            "bwo" => Ok(Algorithm::Bwo),
            "pso" => Ok(Algorithm::Pso),
            _ => Err(Error::InvalidConfig(format!("unknown optimizer `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SwarmConfig {
    /// Population size ϕ.
    pub agents: usize,
    /// Iteration budget T_max.
    pub iterations: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub nu: NuLaw,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self { agents: 30, iterations: 500, fmin: 10.0, fmax: 100.0, nu: NuLaw::StandardNormal }
    }
}

impl SwarmConfig {
    pub fn new(agents: usize, iterations: usize) -> Self {
        Self { agents, iterations, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.agents == 0 || self.iterations == 0 {
            return Err(Error::InvalidConfig("optimizer needs at least one agent and one iteration".into()));
        }
        if !(self.fmin <= self.fmax) {
            return Err(Error::InvalidConfig(format!("fmin {} exceeds fmax {}", self.fmin, self.fmax)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub best: Vec<f64>,
    pub fitness: f64,
    /// Best-so-far fitness; entry 0 is the initial population, entry `T` is
    /// after iteration `T`.
    pub curve: Vec<f64>,
    pub evaluations: usize,
    pub failures: usize,
}

const INIT_LABEL: u64 = u64::MAX;

struct Population {
    pos: Vec<Vec<f64>>,
    fit: Vec<f64>,
    best: Vec<f64>,
    best_fit: f64,
    evaluations: usize,
    failures: usize,
}

impl Population {
    fn init<O: Objective + ?Sized>(obj: &O, bounds: &Bounds, agents: usize, seed: u64, initial: &[Vec<f64>]) -> Result<Self> {
        let mut pos = Vec::with_capacity(agents);
        for i in 0..agents {
            let p = match initial.get(i) {
                Some(p) => {
                    if p.len() != bounds.dim() {
                        return Err(Error::Dimension(format!("initial agent {i} has length {}", p.len())));
                    }
                    let mut p = p.clone();
                    bounds.clamp(&mut p);
                    p
                }
                None => bounds.sample(&mut stream(seed, &[INIT_LABEL, i as u64])),
            };
            pos.push(p);
        }
        let mut pop = Population {
            fit: vec![f64::INFINITY; agents],
            best: pos[0].clone(),
            best_fit: f64::INFINITY,
            pos: Vec::new(),
            evaluations: 0,
            failures: 0,
        };
        let fits = pop.score(obj, &pos);
        pop.pos = pos;
        pop.fit = fits;
        pop.refresh_best();
        Ok(pop)
    }

    fn score<O: Objective + ?Sized>(&mut self, obj: &O, xs: &[Vec<f64>]) -> Vec<f64> {
        let out = obj.evaluate_batch(xs);
        self.evaluations += xs.len();
        out.into_iter()
            .map(|v| match v {
                Some(f) if f.is_finite() => f,
                _ => {
                    self.failures += 1;
                    f64::INFINITY
                }
            })
            .collect()
    }

    fn refresh_best(&mut self) {
        for (p, &f) in self.pos.iter().zip(&self.fit) {
            if f < self.best_fit {
                self.best_fit = f;
                self.best = p.clone();
            }
        }
    }

    /// Greedy acceptance of proposals for the listed agents.
    fn offer<O: Objective + ?Sized>(&mut self, obj: &O, agents: &[usize], proposals: Vec<Vec<f64>>) {
        if agents.is_empty() {
            return;
        }
        let fits = self.score(obj, &proposals);
        for ((&i, p), f) in agents.iter().zip(proposals).zip(fits) {
            if f <= self.fit[i] && f.is_finite() {
                self.pos[i] = p;
                self.fit[i] = f;
            }
        }
        self.refresh_best();
    }

    fn finish(self, curve: Vec<f64>) -> Result<OptimizeResult> {
        if !self.best_fit.is_finite() {
            return Err(Error::AllEvaluationsFailed);
        }
        Ok(OptimizeResult {
            best: self.best,
            fitness: self.best_fit,
            curve,
            evaluations: self.evaluations,
            failures: self.failures,
        })
    }
}

fn partner(rng: &mut StreamRng, i: usize, agents: usize) -> usize {
    if agents < 2 {
        return i;
    }
    let r = rng.random_range(0..agents - 1);
    if r >= i { r + 1 } else { r }
}

fn normal(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

fn whale_swarm<O: Objective + ?Sized>(
    hybrid: bool,
    obj: &O,
    bounds: &Bounds,
    cfg: &SwarmConfig,
    seed: u64,
    initial: &[Vec<f64>],
) -> Result<OptimizeResult> {
    cfg.validate()?;
    let (n, s) = (cfg.agents, bounds.dim());
    let (lb, ub) = (bounds.lower(), bounds.upper());
    let vmax: Vec<f64> = lb.iter().zip(ub).map(|(l, u)| u - l).collect();
    let mut pop = Population::init(obj, bounds, n, seed, initial)?;
    let mut vel = vec![vec![0.0; s]; n];
    let mut curve = Vec::with_capacity(cfg.iterations + 1);
    curve.push(pop.best_fit);

    for it in 0..cfg.iterations {
        let ratio = it as f64 / cfg.iterations as f64;
        let rho = whale_fall_probability(ratio);
        let mu = balance_factor(stream(seed, &[it as u64, u64::MAX]).random::<f64>(), ratio);
        let mut rngs: Vec<StreamRng> = (0..n).map(|i| stream(seed, &[it as u64, i as u64])).collect();

        let mut proposals = Vec::with_capacity(n);
        for (i, rng) in rngs.iter_mut().enumerate() {
            let r = partner(rng, i, n);
            let mut x = if mu > 0.5 {
                let mut perm: Vec<usize> = (0..s).collect();
                perm.shuffle(rng);
                let (c1, c2) = (rng.random::<f64>(), rng.random::<f64>());
                explore(&pop.pos[i], &pop.pos[r], &perm, c1, c2)
            } else if hybrid {
                let f = bat_frequency(cfg.fmin, cfg.fmax, rng.random::<f64>());
                let (x, mut v) = bat_move(&pop.pos[i], &vel[i], &pop.best, f);
                for (vj, m) in v.iter_mut().zip(&vmax) {
                    *vj = vj.clamp(-m, *m);
                }
                vel[i] = v;
                x
            } else {
                let d = ExploitDraws {
                    c3: rng.random(),
                    c4: rng.random(),
                    eta: normal(rng),
                    zeta: normal(rng),
                    nu: match cfg.nu {
                        NuLaw::StandardNormal => normal(rng),
                        NuLaw::Constant(v) => v,
                    },
                };
                exploit(&pop.pos[i], &pop.pos[r], &pop.best, d, ratio)
            };
            bounds.clamp(&mut x);
            proposals.push(x);
        }
        let everyone: Vec<usize> = (0..n).collect();
        pop.offer(obj, &everyone, proposals);

        let mut fallers = Vec::new();
        let mut falls = Vec::new();
        for (i, rng) in rngs.iter_mut().enumerate() {
            if rng.random::<f64>() <= rho {
                let r = partner(rng, i, n);
                let c = (rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
                let mut x = whale_fall(&pop.pos[i], &pop.pos[r], lb, ub, c, rho, n, ratio);
                bounds.clamp(&mut x);
                fallers.push(i);
                falls.push(x);
            }
        }
        pop.offer(obj, &fallers, falls);
        curve.push(pop.best_fit);
    }
    pop.finish(curve)
}

/// Beluga-whale exploration with bat moves in place of the exploitation phase.
pub fn bwb_optimize<O: Objective + ?Sized>(obj: &O, bounds: &Bounds, cfg: &SwarmConfig, seed: u64) -> Result<OptimizeResult> {
    whale_swarm(true, obj, bounds, cfg, seed, &[])
}

/// Beluga-whale optimizer: exploration, exploitation and whale fall.
pub fn bwo_optimize<O: Objective + ?Sized>(obj: &O, bounds: &Bounds, cfg: &SwarmConfig, seed: u64) -> Result<OptimizeResult> {
    whale_swarm(false, obj, bounds, cfg, seed, &[])
}

pub const PSO_INERTIA: f64 = 0.7298;
pub const PSO_ACCELERATION: f64 = 1.496_18;
pub const PSO_VELOCITY_FRACTION: f64 = 0.2;

/// Global-best particle swarm with constriction coefficients.
pub fn pso_optimize<O: Objective + ?Sized>(obj: &O, bounds: &Bounds, cfg: &SwarmConfig, seed: u64) -> Result<OptimizeResult> {
    pso_with_initial(obj, bounds, cfg, seed, &[])
}

fn pso_with_initial<O: Objective + ?Sized>(
    obj: &O,
    bounds: &Bounds,
    cfg: &SwarmConfig,
    seed: u64,
    initial: &[Vec<f64>],
) -> Result<OptimizeResult> {
    cfg.validate()?;
    let (n, s) = (cfg.agents, bounds.dim());
    let vmax: Vec<f64> =
        bounds.lower().iter().zip(bounds.upper()).map(|(l, u)| PSO_VELOCITY_FRACTION * (u - l)).collect();
    let mut pop = Population::init(obj, bounds, n, seed, initial)?;
    let mut x = pop.pos.clone();
    let mut vel = vec![vec![0.0; s]; n];
    let mut curve = Vec::with_capacity(cfg.iterations + 1);
    curve.push(pop.best_fit);
    for it in 0..cfg.iterations {
        for i in 0..n {
            let mut rng = stream(seed, &[it as u64, i as u64]);
            for j in 0..s {
                let (r1, r2) = (rng.random::<f64>(), rng.random::<f64>());
                let v = PSO_INERTIA * vel[i][j]
                    + PSO_ACCELERATION * r1 * (pop.pos[i][j] - x[i][j])
                    + PSO_ACCELERATION * r2 * (pop.best[j] - x[i][j]);
                vel[i][j] = v.clamp(-vmax[j], vmax[j]);
                x[i][j] += vel[i][j];
            }
            bounds.clamp(&mut x[i]);
        }
        // personal bests live in `pop`
        let everyone: Vec<usize> = (0..n).collect();
        pop.offer(obj, &everyone, x.clone());
        curve.push(pop.best_fit);
    }
    pop.finish(curve)
}

/// Runs `alg`, seeding the first agents with `initial` (clamped into bounds).
pub fn optimize<O: Objective + ?Sized>(
    alg: Algorithm,
    obj: &O,
    bounds: &Bounds,
    cfg: &SwarmConfig,
    seed: u64,
    initial: &[Vec<f64>],
) -> Result<OptimizeResult> {
    match alg {
        Algorithm::Bwb => whale_swarm(true, obj, bounds, cfg, seed, initial),
        Algorithm::Bwo => whale_swarm(false, obj, bounds, cfg, seed, initial),
        Algorithm::Pso => pso_with_initial(obj, bounds, cfg, seed, initial),
    }
}

#[cfg(test)]
mod tests;
