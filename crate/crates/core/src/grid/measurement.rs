use super::{Admittance, BusSystem, StateLayout};
use crate::filters::Observation;
use crate::prelude::*;
use crate::{DMatrix, DVector, Error, Result};

/// Central-difference step used by [`measurement_jacobian`].
pub const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measurement {
    VoltageMagnitude(usize),
    RealInjection(usize),
    ReactiveInjection(usize),
    /// Real power flow at the from end of a branch.
    RealFlow(usize),
    /// Reactive power flow at the from end of a branch.
    ReactiveFlow(usize),
}

impl Measurement {
    /// Real or reactive power quantity (injection or flow).
    pub fn is_power(&self) -> bool {
        !matches!(self, Measurement::VoltageMagnitude(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    items: Vec<Measurement>,
}

impl MeasurementPlan {
    pub fn new(sys: &BusSystem, items: Vec<Measurement>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidConfig("measurement plan is empty".into()));
        }
        let (l, b) = (sys.bus_count(), sys.branch_count());
        for m in &items {
            let ok = match *m {
                Measurement::VoltageMagnitude(i)
                | Measurement::RealInjection(i)
                | Measurement::ReactiveInjection(i) => i < l,
                Measurement::RealFlow(k) | Measurement::ReactiveFlow(k) => k < b,
            };
            if !ok {
                return Err(Error::InvalidConfig(format!("measurement {m:?} out of range")));
            }
        }
        Ok(Self { items })
    }

    /// Every voltage magnitude, every bus injection pair and every branch
    /// from-end flow pair: `m = L + 2L + 2B`.
    pub fn full(sys: &BusSystem) -> Self {
        let l = sys.bus_count();
        let mut items: Vec<Measurement> = (0..l).map(Measurement::VoltageMagnitude).collect();
        for i in 0..l {
            items.push(Measurement::RealInjection(i));
            items.push(Measurement::ReactiveInjection(i));
        }
        for k in 0..sys.branch_count() {
            items.push(Measurement::RealFlow(k));
            items.push(Measurement::ReactiveFlow(k));
        }
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Measurement] {
        &self.items
    }

    pub fn power_mask(&self) -> Vec<bool> {
        self.items.iter().map(Measurement::is_power).collect()
    }
}

/// The nonlinear measurement function `g(x)` of a network and plan.
#[derive(Debug, Clone, Copy)]
pub struct GridObservation<'a> {
    sys: &'a BusSystem,
    admittance: &'a Admittance,
    plan: &'a MeasurementPlan,
    layout: StateLayout,
    needs_injections: bool,
}

impl<'a> GridObservation<'a> {
    pub fn new(sys: &'a BusSystem, plan: &'a MeasurementPlan) -> Result<Self> {
        let admittance = sys.admittance().ok_or(Error::AdmittanceMissing)?;
        let needs_injections = plan.items().iter().any(|m| {
            matches!(m, Measurement::RealInjection(_) | Measurement::ReactiveInjection(_))
        });
        Ok(Self { sys, admittance, plan, layout: sys.layout(), needs_injections })
    }

    pub fn plan(&self) -> &MeasurementPlan {
        self.plan
    }

    pub fn system(&self) -> &BusSystem {
        self.sys
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> DVector<f64> {
        let l = self.sys.bus_count();
        let layout = self.layout;
        let vm: Vec<f64> = (0..l).map(|i| layout.magnitude(x, i)).collect();
        let va: Vec<f64> = (0..l).map(|i| layout.phase(x, i)).collect();

        let (mut p_inj, mut q_inj) = (Vec::new(), Vec::new());
        if self.needs_injections {
            p_inj = vec![0.0; l];
            q_inj = vec![0.0; l];
            for i in 0..l {
                let (mut p, mut q) = (0.0, 0.0);
                for &(j, g, b) in self.admittance.row(i) {
                    let (s, c) = (va[i] - va[j]).sin_cos();
                    p += vm[j] * (g * c + b * s);
                    q += vm[j] * (g * s - b * c);
                }
                p_inj[i] = vm[i] * p;
                q_inj[i] = vm[i] * q;
            }
        }

        let flow = |k: usize| -> (f64, f64) {
            let br = &self.sys.branches[k];
            let ya = &self.admittance.branches[k];
            let (f, t) = (br.from, br.to);
            let (s, c) = (va[f] - va[t]).sin_cos();
            let vv = vm[f] * vm[t];
            let vf2 = vm[f] * vm[f];
            let p = vf2 * ya.yff.re + vv * (ya.yft.re * c + ya.yft.im * s);
            let q = -vf2 * ya.yff.im + vv * (ya.yft.re * s - ya.yft.im * c);
            (p, q)
        };

        DVector::from_iterator(
            self.plan.len(),
            self.plan.items().iter().map(|m| match *m {
                Measurement::VoltageMagnitude(i) => vm[i],
                Measurement::RealInjection(i) => p_inj[i],
                Measurement::ReactiveInjection(i) => q_inj[i],
                Measurement::RealFlow(k) => flow(k).0,
                Measurement::ReactiveFlow(k) => flow(k).1,
            }),
        )
    }

    pub fn jacobian_with_step(&self, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
        let n = x.len();
        let mut jac = DMatrix::zeros(self.plan.len(), n);
        let mut probe = x.clone();
        for k in 0..n {
            probe[k] = x[k] + h;
            let up = self.evaluate(&probe);
            probe[k] = x[k] - h;
            let down = self.evaluate(&probe);
            probe[k] = x[k];
            jac.set_column(k, &((up - down) / (2.0 * h)));
        }
        jac
    }
}

impl Observation for GridObservation<'_> {
    fn dim(&self) -> usize {
        self.plan.len()
    }

    fn observe(&self, x: &DVector<f64>) -> DVector<f64> {
        self.evaluate(x)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.jacobian_with_step(x, JACOBIAN_STEP)
    }
}

/// Evaluates the plan at state `x`. Requires a built admittance matrix.
pub fn measure(sys: &BusSystem, x: &DVector<f64>, plan: &MeasurementPlan) -> Result<DVector<f64>> {
    check_state(sys, x)?;
    Ok(GridObservation::new(sys, plan)?.evaluate(x))
}

/// Central finite-difference Jacobian of [`measure`] with step
/// [`JACOBIAN_STEP`].
pub fn measurement_jacobian(
    sys: &BusSystem,
    x: &DVector<f64>,
    plan: &MeasurementPlan,
) -> Result<DMatrix<f64>> {
    check_state(sys, x)?;
    Ok(GridObservation::new(sys, plan)?.jacobian_with_step(x, JACOBIAN_STEP))
}

fn check_state(sys: &BusSystem, x: &DVector<f64>) -> Result<()> {
    if x.len() != sys.state_dim() {
        return Err(Error::Dimension(format!(
            "state has length {}, network needs {}",
            x.len(),
            sys.state_dim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tests::two_bus;
    use crate::grid::build_admittance;
    use approx::assert_relative_eq;
    use nalgebra::Complex;

    fn solved_two_bus() -> (BusSystem, DVector<f64>) {
        let sys = build_admittance(two_bus(0.01, 0.1)).unwrap();
        // phase of bus 2, then |V1|, |V2|
        let x = DVector::from_vec(vec![-0.05, 1.02, 0.98]);
        (sys, x)
    }

    #[test]
    fn flat_start_lossless_gives_zero_real_injection() {
        let sys = build_admittance(two_bus(0.0, 0.5)).unwrap();
        let plan = MeasurementPlan::full(&sys);
        let y = measure(&sys, &sys.flat_start(), &plan).unwrap();
        for (m, v) in plan.items().iter().zip(y.iter()) {
            match m {
                Measurement::RealInjection(_) | Measurement::RealFlow(_) => {
                    assert_relative_eq!(*v, 0.0, epsilon = 1e-15)
                }
                _ => {}
            }
        }
    }

    #[test]
    fn injections_match_complex_power() {
        let (sys, x) = solved_two_bus();
        let plan = MeasurementPlan::new(
            &sys,
            vec![
                Measurement::RealInjection(0),
                Measurement::ReactiveInjection(0),
                Measurement::RealInjection(1),
                Measurement::ReactiveInjection(1),
            ],
        )
        .unwrap();
        let y = measure(&sys, &x, &plan).unwrap();
        let layout = sys.layout();
        let v: Vec<Complex<f64>> = (0..2)
            .map(|i| Complex::from_polar(layout.magnitude(&x, i), layout.phase(&x, i)))
            .collect();
        let adm = sys.admittance().unwrap();
        for i in 0..2 {
            let current: Complex<f64> = (0..2).map(|j| adm.entry(i, j) * v[j]).sum();
            let s = v[i] * current.conj();
            assert_relative_eq!(y[2 * i], s.re, epsilon = 1e-12);
            assert_relative_eq!(y[2 * i + 1], s.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn voltage_magnitude_is_identity() {
        let (sys, x) = solved_two_bus();
        let plan = MeasurementPlan::new(&sys, vec![Measurement::VoltageMagnitude(1)]).unwrap();
        assert_eq!(measure(&sys, &x, &plan).unwrap()[0], x[2]);
        let jac = measurement_jacobian(&sys, &x, &plan).unwrap();
        assert_relative_eq!(jac, DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]), epsilon = 1e-9);
    }

    #[test]
    fn real_flow_row_matches_symbolic_derivative() {
        let (sys, x) = solved_two_bus();
        let plan = MeasurementPlan::new(&sys, vec![Measurement::RealFlow(0)]).unwrap();
        let jac = measurement_jacobian(&sys, &x, &plan).unwrap();
        // P12 = V1² g - V1 V2 (g cos θ12 + b sin θ12), y = g + jb = 1/(r + jx)
        let y = Complex::new(0.01, 0.1).inv();
        let (g, b) = (y.re, y.im);
        let (th2, v1, v2) = (x[0], x[1], x[2]);
        let th12 = -th2;
        let dp_dth2 = -v1 * v2 * (g * th12.sin() - b * th12.cos());
        let dp_dv1 = 2.0 * v1 * g - v2 * (g * th12.cos() + b * th12.sin());
        let dp_dv2 = -v1 * (g * th12.cos() + b * th12.sin());
        assert_relative_eq!(jac[(0, 0)], dp_dth2, epsilon = 1e-5);
        assert_relative_eq!(jac[(0, 1)], dp_dv1, epsilon = 1e-5);
        assert_relative_eq!(jac[(0, 2)], dp_dv2, epsilon = 1e-5);
    }

    #[test]
    fn jacobian_is_robust_to_step_doubling() {
        let (sys, x) = solved_two_bus();
        let plan = MeasurementPlan::full(&sys);
        let obs = GridObservation::new(&sys, &plan).unwrap();
        let a = obs.jacobian_with_step(&x, 1e-6);
        let b = obs.jacobian_with_step(&x, 2e-6);
        for (u, v) in a.iter().zip(b.iter()) {
            assert!((u - v).abs() <= 1e-6 * u.abs().max(1.0), "{u} vs {v}");
        }
    }

    #[test]
    fn missing_admittance_is_an_error() {
        let sys = two_bus(0.01, 0.1);
        let plan = MeasurementPlan::full(&sys);
        assert_eq!(measure(&sys, &sys.flat_start(), &plan).unwrap_err(), Error::AdmittanceMissing);
    }

    #[test]
    fn full_plan_count() {
        let sys = two_bus(0.01, 0.1);
        assert_eq!(MeasurementPlan::full(&sys).len(), 2 + 4 + 2);
        assert!(MeasurementPlan::new(&sys, vec![]).is_err());
        assert!(MeasurementPlan::new(&sys, vec![Measurement::RealFlow(1)]).is_err());
    }
}
