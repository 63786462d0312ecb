//! Noise laws, disturbance events and synthetic truth/measurement data.

use crate::grid::{BusSystem, GridObservation};
use crate::prelude::*;
use crate::{DVector, Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A scalar noise law. Gaussian laws are parameterized by variance,
/// Laplace laws by their scale `b` (variance `2b²`).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "law", rename_all = "lowercase"))]
pub enum Law {
    Gaussian { mean: f64, variance: f64 },
    Laplace { mean: f64, scale: f64 },
}

impl Law {
    pub fn gaussian(mean: f64, variance: f64) -> Self {
        Law::Gaussian { mean, variance }
    }

    pub fn laplace(mean: f64, scale: f64) -> Self {
        Law::Laplace { mean, scale }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Law::Gaussian { mean, .. } | Law::Laplace { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Law::Gaussian { variance, .. } => variance,
            Law::Laplace { scale, .. } => 2.0 * scale * scale,
        }
    }

    /// Same family with the variance multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        match *self {
            Law::Gaussian { mean, variance } => Law::Gaussian { mean, variance: variance * factor },
            Law::Laplace { mean, scale } => Law::Laplace { mean, scale: scale * factor.sqrt() },
        }
    }

    fn validate(&self) -> Result<()> {
        let (m, s) = match *self {
            Law::Gaussian { mean, variance } => (mean, variance),
            Law::Laplace { mean, scale } => (mean, scale),
        };
        if !m.is_finite() || !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidConfig(format!("invalid noise law {self:?}")));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Law::Gaussian { mean, variance } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + variance.sqrt() * z
            }
            Law::Laplace { mean, scale } => {
                // inverse CDF on u ∈ (−½, ½)
                let u: f64 = rng.random::<f64>() - 0.5;
                mean - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MixtureComponent {
    pub weight: f64,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub law: Law,
}

/// `Σ w_k Law_k`; each scalar draw picks one component.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Mixture {
    pub components: Vec<MixtureComponent>,
}

impl Mixture {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        let m = Self { components };
        m.validate()?;
        Ok(m)
    }

    pub fn single(law: Law) -> Self {
        Self { components: vec![MixtureComponent { weight: 1.0, law }] }
    }

    pub fn of(pairs: &[(f64, Law)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(weight, law)| MixtureComponent { weight, law }).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidConfig("noise mixture is empty".into()));
        }
        let mut total = 0.0;
        for c in &self.components {
            if !(c.weight > 0.0) {
                return Err(Error::InvalidConfig(format!("mixture weight {} must be positive", c.weight)));
            }
            c.law.validate()?;
            total += c.weight;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidConfig(format!("mixture weights sum to {total}")));
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        let mean: f64 = self.components.iter().map(|c| c.weight * c.law.mean()).sum();
        self.components
            .iter()
            .map(|c| c.weight * (c.law.variance() + c.law.mean() * c.law.mean()))
            .sum::<f64>()
            - mean * mean
    }

    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| MixtureComponent { weight: c.weight, law: c.law.rescaled(factor) })
                .collect(),
        }
    }

    /// Index of the component chosen by one draw, then a draw from it.
    pub fn sample_tagged<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let k = if self.components.len() == 1 {
            0
        } else {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = self.components.len() - 1;
            for (k, c) in self.components.iter().enumerate() {
                acc += c.weight;
                if u < acc {
                    pick = k;
                    break;
                }
            }
            pick
        };
        (k, self.components[k].law.sample(rng))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_tagged(rng).1
    }
}

/// Independent draws per component.
pub fn sample_noise<R: Rng + ?Sized>(mix: &Mixture, dim: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(dim, (0..dim).map(|_| mix.sample(rng)))
}

/// Process and measurement noise of a scenario.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseModel {
    pub process: Mixture,
    pub measurement: Mixture,
}

/// Power measurements at step `t` are multiplied by `factor`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BadData {
    pub t: usize,
    pub factor: f64,
}

/// The true voltage magnitude of the bus labelled `bus` is multiplied by
/// `factor` at step `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LoadChange {
    pub t: usize,
    pub bus: u32,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EventSchedule {
    #[cfg_attr(feature = "serde", serde(default))]
    pub bad_data: Vec<BadData>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub load_changes: Vec<LoadChange>,
}

impl EventSchedule {
    pub fn validate(&self, horizon: usize) -> Result<()> {
        let times = self
            .bad_data
            .iter()
            .map(|e| (e.t, e.factor))
            .chain(self.load_changes.iter().map(|e| (e.t, e.factor)));
        for (t, f) in times {
            if t == 0 || t > horizon {
                return Err(Error::InvalidConfig(format!("event time {t} outside [1, {horizon}]")));
            }
            if !(f > 0.0) || !f.is_finite() {
                return Err(Error::InvalidConfig(format!("event factor {f} must be positive")));
            }
        }
        Ok(())
    }

    pub fn bad_data_factor(&self, t: usize) -> Option<f64> {
        let mut f = None;
        for e in self.bad_data.iter().filter(|e| e.t == t) {
            f = Some(f.unwrap_or(1.0) * e.factor);
        }
        f
    }
}

pub const DEFAULT_HORIZON: usize = 100;
pub const DEFAULT_TRIALS: usize = 200;

/// Everything needed to synthesize one experiment's data.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioSpec {
    pub name: String,
    pub horizon: usize,
    pub trials: usize,
    pub noise: NoiseModel,
    /// Multiplies every process-noise variance.
    #[cfg_attr(feature = "serde", serde(default = "unit"))]
    pub process_rescale: f64,
    /// Multiplies every measurement-noise variance.
    #[cfg_attr(feature = "serde", serde(default = "unit"))]
    pub measurement_rescale: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub events: EventSchedule,
}

#[cfg(feature = "serde")]
fn unit() -> f64 {
    1.0
}

pub const PRESETS: [&str; 3] = ["scenario1", "scenario2", "scenario3"];

impl ScenarioSpec {
    /// Built-in scenarios:
    ///
    /// - `scenario1`: Laplace process noise `L(0, 1e-5)` and measurement noise
    ///   `0.8 G(0, 1e-2) + 0.2 G(0, 0.5)`.
    /// - `scenario2`: process `G(0, 20)`, measurement `0.3 G(0, 25) + 0.7 L(0, 0.5)`,
    ///   power measurements ×0.90 at t = 15 and ×1.15 at t = 35.
    /// - `scenario3`: scenario-1 noise, bus 5 magnitude ×0.94 at t = 15 and
    ///   ×1.09 at t = 35.
    pub fn preset(name: &str) -> Result<Self> {
        let scenario1_noise = || NoiseModel {
            process: Mixture::single(Law::laplace(0.0, 1e-5)),
            measurement: Mixture::of(&[(0.8, Law::gaussian(0.0, 1e-2)), (0.2, Law::gaussian(0.0, 0.5))])
                .expect("preset weights"),
        };
        let (noise, events) = match name {
            "scenario1" => (scenario1_noise(), EventSchedule::default()),
            "scenario2" => (
                NoiseModel {
                    process: Mixture::single(Law::gaussian(0.0, 20.0)),
                    measurement: Mixture::of(&[(0.3, Law::gaussian(0.0, 25.0)), (0.7, Law::laplace(0.0, 0.5))])
                        .expect("preset weights"),
                },
                EventSchedule {
                    bad_data: vec![BadData { t: 15, factor: 0.90 }, BadData { t: 35, factor: 1.15 }],
                    load_changes: vec![],
                },
            ),
            "scenario3" => (
                scenario1_noise(),
                EventSchedule {
                    bad_data: vec![],
                    load_changes: vec![
                        LoadChange { t: 15, bus: 5, factor: 0.94 },
                        LoadChange { t: 35, bus: 5, factor: 1.09 },
                    ],
                },
            ),
            other => return Err(Error::UnknownPreset(other.into())),
        };
        Ok(Self {
            name: name.into(),
            horizon: DEFAULT_HORIZON,
            trials: DEFAULT_TRIALS,
            noise,
            process_rescale: 1.0,
            measurement_rescale: 1.0,
            events,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.trials == 0 {
            return Err(Error::InvalidConfig("horizon and trials must be at least 1".into()));
        }
        for (n, v) in [("process_rescale", self.process_rescale), ("measurement_rescale", self.measurement_rescale)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{n} = {v} must be positive")));
            }
        }
        self.noise.process.validate()?;
        self.noise.measurement.validate()?;
        self.events.validate(self.horizon)
    }

    /// Process noise with the rescale factor applied.
    pub fn process_noise(&self) -> Mixture {
        self.noise.process.rescaled(self.process_rescale)
    }

    /// Measurement noise with the rescale factor applied.
    pub fn measurement_noise(&self) -> Mixture {
        self.noise.measurement.rescaled(self.measurement_rescale)
    }
}

/// Random-walk truth `x_t = x_{t-1} + q_t` for `t = 1..=horizon`,
/// with load changes applied to the named bus magnitudes.
pub fn generate_truth<R: Rng + ?Sized>(
    sys: &BusSystem,
    x0: &DVector<f64>,
    horizon: usize,
    process: &Mixture,
    events: &EventSchedule,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    let layout = sys.layout();
    if x0.len() != layout.dim() {
        return Err(Error::Dimension(format!("x0 has length {}, state needs {}", x0.len(), layout.dim())));
    }
    let mut changes = Vec::with_capacity(events.load_changes.len());
    for e in &events.load_changes {
        let bus = sys
            .bus_index(e.bus)
            .ok_or_else(|| Error::InvalidConfig(format!("load change on unknown bus {}", e.bus)))?;
        changes.push((e.t, layout.magnitude_index(bus), e.factor));
    }
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        x += sample_noise(process, x.len(), rng);
        for &(when, idx, factor) in &changes {
            if when == t {
                x[idx] *= factor;
            }
        }
        for bus in 0..sys.bus_count() {
            let v = layout.magnitude(&x, bus);
            if !(v > 0.0) {
                return Err(Error::NonPositiveMagnitude { bus, step: t, value: v });
            }
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// `y_t = g(x_t) + r_t`, with power entries multiplied by the bad-data
/// factor at the scheduled steps.
pub fn generate_measurements<R: Rng + ?Sized>(
    obs: &GridObservation<'_>,
    truth: &[DVector<f64>],
    measurement: &Mixture,
    events: &EventSchedule,
    rng: &mut R,
) -> Vec<DVector<f64>> {
    let mask = obs.plan().power_mask();
    truth
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let mut y = obs.evaluate(x) + sample_noise(measurement, mask.len(), rng);
            if let Some(f) = events.bad_data_factor(k + 1) {
                for (v, &p) in y.iter_mut().zip(&mask) {
                    if p {
                        *v *= f;
                    }
                }
            }
            y
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_admittance, MeasurementPlan};
    use approx::assert_relative_eq;

    fn sample_variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn degenerate_gaussian_is_zero() {
        let mut rng = crate::rng::stream(1, &[]);
        let v = sample_noise(&Mixture::single(Law::gaussian(0.0, 0.0)), 10, &mut rng);
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn laplace_variance() {
        let mut rng = crate::rng::stream(2, &[]);
        let law = Mixture::single(Law::laplace(0.0, 0.3));
        let xs: Vec<f64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
        let v = sample_variance(&xs);
        assert!((v / (2.0 * 0.09) - 1.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn scenario_one_measurement_mixture_variance() {
        let mut rng = crate::rng::stream(3, &[]);
        let spec = ScenarioSpec::preset("scenario1").unwrap();
        let mix = spec.measurement_noise();
        assert_relative_eq!(mix.variance(), 0.108, epsilon = 1e-15);
        let xs: Vec<f64> = (0..1_000_000).map(|_| mix.sample(&mut rng)).collect();
        assert!((sample_variance(&xs) / 0.108 - 1.0).abs() < 0.05);
    }

    #[test]
    fn component_frequencies_are_binomial() {
        let mut rng = crate::rng::stream(4, &[]);
        let mix = Mixture::of(&[(0.3, Law::gaussian(0.0, 1.0)), (0.7, Law::laplace(0.0, 1.0))]).unwrap();
        let n = 100_000;
        let hits = (0..n).filter(|_| mix.sample_tagged(&mut rng).0 == 0).count() as f64;
        let sd = (n as f64 * 0.3 * 0.7).sqrt();
        assert!((hits - 0.3 * n as f64).abs() < 3.0 * sd);
    }

    #[test]
    fn presets() {
        let s1 = ScenarioSpec::preset("scenario1").unwrap();
        let w: Vec<f64> = s1.noise.measurement.components.iter().map(|c| c.weight).collect();
        assert_eq!(w, vec![0.8, 0.2]);
        assert_eq!((s1.horizon, s1.trials), (100, 200));
        let s2 = ScenarioSpec::preset("scenario2").unwrap();
        assert_eq!(s2.events.bad_data, vec![BadData { t: 15, factor: 0.90 }, BadData { t: 35, factor: 1.15 }]);
        let s3 = ScenarioSpec::preset("scenario3").unwrap();
        assert_eq!(s3.events.load_changes[0], LoadChange { t: 15, bus: 5, factor: 0.94 });
        assert_eq!(s3.events.load_changes[1], LoadChange { t: 35, bus: 5, factor: 1.09 });
        assert_eq!(s3.noise, s1.noise);
        for p in PRESETS {
            ScenarioSpec::preset(p).unwrap().validate().unwrap();
        }
        assert!(matches!(ScenarioSpec::preset("scenario9"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn rescale_scales_variance() {
        let s2 = ScenarioSpec::preset("scenario2").unwrap();
        let base = s2.noise.measurement.variance();
        assert_relative_eq!(base, 0.3 * 25.0 + 0.7 * 0.5, epsilon = 1e-12);
        assert_relative_eq!(s2.noise.measurement.rescaled(1e-3).variance(), base * 1e-3, max_relative = 1e-12);
    }

    #[test]
    fn event_validation() {
        let mut e = EventSchedule::default();
        e.bad_data.push(BadData { t: 0, factor: 1.0 });
        assert!(e.validate(10).is_err());
        e.bad_data[0] = BadData { t: 11, factor: 1.0 };
        assert!(e.validate(10).is_err());
        e.bad_data[0] = BadData { t: 3, factor: -1.0 };
        assert!(e.validate(10).is_err());
    }

    fn three_bus() -> BusSystem {
        use crate::grid::{Branch, Bus, BusKind};
        let bus = |label, kind| Bus { label, kind, magnitude: 1.0, angle: 0.0 };
        let line = |f, t| Branch { from: f, to: t, resistance: 0.01, reactance: 0.1, charging: 0.02, tap: 1.0 };
        let sys = BusSystem::new(
            "three",
            100.0,
            vec![bus(1, BusKind::Slack), bus(5, BusKind::Load), bus(7, BusKind::Generator)],
            vec![line(0, 1), line(1, 2), line(0, 2)],
            vec![],
        )
        .unwrap();
        build_admittance(sys).unwrap()
    }

    #[test]
    fn noiseless_truth_is_constant_and_steps_on_events() {
        let sys = three_bus();
        let x0 = sys.flat_start();
        let mut rng = crate::rng::stream(5, &[]);
        let zero = Mixture::single(Law::gaussian(0.0, 0.0));
        let truth = generate_truth(&sys, &x0, 10, &zero, &EventSchedule::default(), &mut rng).unwrap();
        assert!(truth.iter().all(|x| *x == x0));

        let events = ScenarioSpec::preset("scenario3").unwrap().events;
        let truth = generate_truth(&sys, &x0, 50, &zero, &events, &mut rng).unwrap();
        let idx = sys.layout().magnitude_index(sys.bus_index(5).unwrap());
        let v: Vec<f64> = truth.iter().map(|x| x[idx]).collect();
        assert_eq!(v[13], 1.0);
        assert_relative_eq!(v[14], 0.94);
        assert_relative_eq!(v[33], 0.94);
        assert_relative_eq!(v[34], 0.94 * 1.09);
        let steps = v.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(steps, 2);
    }

    #[test]
    fn laplace_increment_variance() {
        let sys = three_bus();
        let x0 = sys.flat_start();
        let law = ScenarioSpec::preset("scenario1").unwrap().process_noise();
        let mut incs = Vec::new();
        for trial in 0..200 {
            let mut rng = crate::rng::stream(6, &[trial]);
            let truth = generate_truth(&sys, &x0, 100, &law, &EventSchedule::default(), &mut rng).unwrap();
            let mut prev = x0.clone();
            for x in truth {
                incs.extend((&x - &prev).iter().copied());
                prev = x;
            }
        }
        let v = sample_variance(&incs);
        assert!((v / 2e-10 - 1.0).abs() < 0.1, "{v}");
    }

    #[test]
    fn nonpositive_magnitude_aborts() {
        let sys = three_bus();
        let events = EventSchedule {
            bad_data: vec![],
            load_changes: vec![LoadChange { t: 2, bus: 5, factor: 1e-300 }],
        };
        let mut rng = crate::rng::stream(7, &[]);
        let huge = Mixture::single(Law::gaussian(0.0, 100.0));
        let r = generate_truth(&sys, &sys.flat_start(), 50, &huge, &events, &mut rng);
        assert!(matches!(r, Err(Error::NonPositiveMagnitude { .. })));
    }

    #[test]
    fn measurements_follow_model_and_bad_data() {
        let sys = three_bus();
        let plan = MeasurementPlan::full(&sys);
        let obs = GridObservation::new(&sys, &plan).unwrap();
        let mut x = sys.flat_start();
        x[0] = -0.02;
        x[1] = 0.01;
        let truth = vec![x.clone(); 40];
        let zero = Mixture::single(Law::gaussian(0.0, 0.0));
        let mut rng = crate::rng::stream(8, &[]);
        let clean = generate_measurements(&obs, &truth, &zero, &EventSchedule::default(), &mut rng);
        assert!(clean.iter().all(|y| *y == obs.evaluate(&x)));

        let events = ScenarioSpec::preset("scenario2").unwrap().events;
        let ys = generate_measurements(&obs, &truth, &zero, &events, &mut rng);
        let g = obs.evaluate(&x);
        for (k, y) in ys.iter().enumerate() {
            let f = match k + 1 {
                15 => 0.90,
                35 => 1.15,
                _ => 1.0,
            };
            for (i, m) in plan.items().iter().enumerate() {
                let want = if m.is_power() { g[i] * f } else { g[i] };
                assert_eq!(y[i], want);
            }
        }
    }

    #[test]
    fn voltage_noise_variance() {
        let sys = three_bus();
        let plan = MeasurementPlan::full(&sys);
        let obs = GridObservation::new(&sys, &plan).unwrap();
        let x = sys.flat_start();
        let truth = vec![x.clone(); 34_000];
        let mix = ScenarioSpec::preset("scenario1").unwrap().measurement_noise();
        let mut rng = crate::rng::stream(9, &[]);
        let ys = generate_measurements(&obs, &truth, &mix, &EventSchedule::default(), &mut rng);
        let g = obs.evaluate(&x);
        let mut r = Vec::new();
        for y in &ys {
            for (i, m) in plan.items().iter().enumerate() {
                if !m.is_power() {
                    r.push(y[i] - g[i]);
                }
            }
        }
        assert!(r.len() >= 100_000);
        assert!((sample_variance(&r) / 0.108 - 1.0).abs() < 0.05);
    }

    #[test]
    fn same_seed_same_data() {
        let sys = three_bus();
        let spec = ScenarioSpec::preset("scenario1").unwrap();
        let gen = || {
            let mut rng = crate::rng::stream(10, &[3]);
            generate_truth(&sys, &sys.flat_start(), 30, &spec.process_noise(), &spec.events, &mut rng).unwrap()
        };
        assert_eq!(gen(), gen());
    }
}
