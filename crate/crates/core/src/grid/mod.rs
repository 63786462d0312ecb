//! Static network description, admittance assembly, the AC measurement
//! function and the Holt forecast used as state transition.

mod admittance;
mod holt;
mod measurement;

pub use admittance::{build_admittance, Admittance, BranchAdmittance};
pub use holt::HoltState;
pub use measurement::{
    measure, measurement_jacobian, GridObservation, Measurement, MeasurementPlan, JACOBIAN_STEP,
};

use crate::prelude::*;
use crate::{DVector, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Load,
    Generator,
    Slack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    /// Label from the case file; indices elsewhere are dense and 0-based.
    pub label: u32,
    pub kind: BusKind,
    /// Operating point recorded in the case file (p.u., radians).
    pub magnitude: f64,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    /// Series resistance, p.u.
    pub resistance: f64,
    /// Series reactance, p.u.
    pub reactance: f64,
    /// Total line-charging susceptance, p.u.
    pub charging: f64,
    /// Off-nominal turns ratio at the from end; 1 for lines.
    pub tap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shunt {
    pub bus: usize,
    pub conductance: f64,
    pub susceptance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BusSystem {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub shunts: Vec<Shunt>,
    pub slack: usize,
    admittance: Option<Admittance>,
}

impl BusSystem {
    /// Validates bus references and the slack index. The admittance matrix
    /// is left unbuilt; see [`build_admittance`].
    pub fn new(
        name: impl Into<String>,
        base_mva: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        shunts: Vec<Shunt>,
    ) -> Result<Self> {
        let count = buses.len();
        if count < 2 {
            return Err(Error::InvalidNetwork(format!("need at least 2 buses, got {count}")));
        }
        let mut slacks = buses.iter().enumerate().filter(|(_, b)| b.kind == BusKind::Slack);
        let slack = match (slacks.next(), slacks.next()) {
            (Some((i, _)), None) => i,
            (None, _) => return Err(Error::InvalidNetwork("no slack bus".into())),
            (Some(_), Some((j, _))) => {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate slack bus (label {})",
                    buses[j].label
                )))
            }
        };
        for (k, br) in branches.iter().enumerate() {
            if br.from >= count || br.to >= count || br.from == br.to {
                return Err(Error::InvalidNetwork(format!(
                    "branch {k} references buses {} -> {}",
                    br.from, br.to
                )));
            }
            if !(br.tap > 0.0) {
                return Err(Error::InvalidNetwork(format!("branch {k} has tap ratio {}", br.tap)));
            }
        }
        for sh in &shunts {
            if sh.bus >= count {
                return Err(Error::InvalidNetwork(format!("shunt references bus {}", sh.bus)));
            }
        }
        Ok(Self {
            name: name.into(),
            base_mva,
            buses,
            branches,
            shunts,
            slack,
            admittance: None,
        })
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn state_dim(&self) -> usize {
        2 * self.bus_count() - 1
    }

    pub fn layout(&self) -> StateLayout {
        StateLayout { bus_count: self.bus_count(), slack: self.slack }
    }

    pub fn admittance(&self) -> Option<&Admittance> {
        self.admittance.as_ref()
    }

    pub(crate) fn set_admittance(&mut self, y: Admittance) {
        self.admittance = Some(y);
    }

    /// Dense index of the bus carrying `label`.
    pub fn bus_index(&self, label: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.label == label)
    }

    /// State vector of the operating point stored in the case file, with
    /// phases referenced to the slack.
    pub fn operating_point(&self) -> DVector<f64> {
        let reference = self.buses[self.slack].angle;
        let phases: Vec<f64> = self.buses.iter().map(|b| b.angle - reference).collect();
        let mags: Vec<f64> = self.buses.iter().map(|b| b.magnitude).collect();
        self.layout().assemble(&phases, &mags)
    }

    /// Flat start: unit magnitudes, zero phases.
    pub fn flat_start(&self) -> DVector<f64> {
        let l = self.bus_count();
        self.layout().assemble(&vec![0.0; l], &vec![1.0; l])
    }
}

/// Ordering of the state vector: phases of every non-slack bus (in bus
/// order), then magnitudes of all buses. Length `2L - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub bus_count: usize,
    pub slack: usize,
}

impl StateLayout {
    pub fn dim(&self) -> usize {
        2 * self.bus_count - 1
    }

    pub fn phase_count(&self) -> usize {
        self.bus_count - 1
    }

    /// Index of bus `bus`'s phase in the state, or `None` for the slack.
    pub fn phase_index(&self, bus: usize) -> Option<usize> {
        use core::cmp::Ordering::*;
        match bus.cmp(&self.slack) {
            Less => Some(bus),
            Equal => None,
            Greater => Some(bus - 1),
        }
    }

    pub fn magnitude_index(&self, bus: usize) -> usize {
        self.bus_count - 1 + bus
    }

    pub fn phase(&self, x: &DVector<f64>, bus: usize) -> f64 {
        self.phase_index(bus).map_or(0.0, |i| x[i])
    }

    pub fn magnitude(&self, x: &DVector<f64>, bus: usize) -> f64 {
        x[self.magnitude_index(bus)]
    }

    /// Builds a state from per-bus phases (slack entry ignored) and
    /// magnitudes.
    pub fn assemble(&self, phases: &[f64], magnitudes: &[f64]) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        for bus in 0..self.bus_count {
            if let Some(i) = self.phase_index(bus) {
                x[i] = phases[bus];
            }
            x[self.magnitude_index(bus)] = magnitudes[bus];
        }
        x
    }

    pub fn phases<'a>(&self, x: &'a DVector<f64>) -> &'a [f64] {
        &x.as_slice()[..self.phase_count()]
    }

    pub fn magnitudes<'a>(&self, x: &'a DVector<f64>) -> &'a [f64] {
        &x.as_slice()[self.phase_count()..]
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn two_bus(r: f64, x: f64) -> BusSystem {
        let buses = vec![
            Bus { label: 1, kind: BusKind::Slack, magnitude: 1.0, angle: 0.0 },
            Bus { label: 2, kind: BusKind::Load, magnitude: 1.0, angle: 0.0 },
        ];
        let branches =
            vec![Branch { from: 0, to: 1, resistance: r, reactance: x, charging: 0.0, tap: 1.0 }];
        BusSystem::new("two-bus", 100.0, buses, branches, vec![]).unwrap()
    }

    #[test]
    fn handcrafted_two_bus_counts() {
        let sys = two_bus(0.01, 0.1);
        assert_eq!(sys.bus_count(), 2);
        assert_eq!(sys.branch_count(), 1);
        assert_eq!(sys.state_dim(), 3);
        assert!(sys.admittance().is_none());
    }

    #[test]
    fn rejects_bad_references_and_slack() {
        let bus = |label, kind| Bus { label, kind, magnitude: 1.0, angle: 0.0 };
        let line = |f, t| Branch { from: f, to: t, resistance: 0.0, reactance: 0.1, charging: 0.0, tap: 1.0 };
        let buses = vec![bus(1, BusKind::Slack), bus(2, BusKind::Load)];
        assert!(BusSystem::new("x", 100.0, buses.clone(), vec![line(0, 2)], vec![]).is_err());
        let two_slacks = vec![bus(1, BusKind::Slack), bus(2, BusKind::Slack)];
        assert!(BusSystem::new("x", 100.0, two_slacks, vec![line(0, 1)], vec![]).is_err());
        let no_slack = vec![bus(1, BusKind::Load), bus(2, BusKind::Load)];
        assert!(BusSystem::new("x", 100.0, no_slack, vec![line(0, 1)], vec![]).is_err());
        assert!(BusSystem::new("x", 100.0, vec![bus(1, BusKind::Slack)], vec![], vec![]).is_err());
    }

    #[test]
    fn layout_skips_slack_phase() {
        let layout = StateLayout { bus_count: 4, slack: 2 };
        assert_eq!(layout.dim(), 7);
        assert_eq!(layout.phase_index(0), Some(0));
        assert_eq!(layout.phase_index(2), None);
        assert_eq!(layout.phase_index(3), Some(2));
        assert_eq!(layout.magnitude_index(0), 3);
        let x = layout.assemble(&[0.1, 0.2, 9.0, 0.4], &[1.0, 1.1, 1.2, 1.3]);
        assert_eq!(x.as_slice(), &[0.1, 0.2, 0.4, 1.0, 1.1, 1.2, 1.3]);
        assert_eq!(layout.phase(&x, 2), 0.0);
        assert_eq!(layout.magnitude(&x, 3), 1.3);
    }
}
