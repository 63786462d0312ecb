use nalgebra::Complex;

use super::BusSystem;
use crate::prelude::*;
use crate::{DMatrix, Error, Result};

/// Two-port admittances of one branch (from/to ends), taps absorbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAdmittance {
    pub yff: Complex<f64>,
    pub yft: Complex<f64>,
    pub ytf: Complex<f64>,
    pub ytt: Complex<f64>,
}

/// Bus admittance matrix `Y = G + jB` with a sparse row view for the
/// measurement loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Admittance {
    pub conductance: DMatrix<f64>,
    pub susceptance: DMatrix<f64>,
    pub branches: Vec<BranchAdmittance>,
    rows: Vec<Vec<(usize, f64, f64)>>,
}

impl Admittance {
    pub fn entry(&self, i: usize, j: usize) -> Complex<f64> {
        Complex::new(self.conductance[(i, j)], self.susceptance[(i, j)])
    }

    /// Nonzero entries `(j, G_ij, B_ij)` of row `i`, diagonal included.
    pub fn row(&self, i: usize) -> &[(usize, f64, f64)] {
        &self.rows[i]
    }
}

/// Assembles the bus admittance matrix with the usual pi-model rules:
/// series admittance `y = 1/(r + jx)`, half the line charging at each end,
/// the tap `t` on the from side (`y/t²` self term, `-y/t` mutual terms) and
/// bus shunts on the diagonal.
pub fn build_admittance(mut sys: BusSystem) -> Result<BusSystem> {
    let l = sys.bus_count();
    let mut y = vec![Complex::new(0.0, 0.0); l * l];
    let mut branches = Vec::with_capacity(sys.branches.len());
    for (index, br) in sys.branches.iter().enumerate() {
        let z = Complex::new(br.resistance, br.reactance);
        if z.norm_sqr() == 0.0 {
            return Err(Error::ZeroImpedance { index });
        }
        let ys = z.inv();
        let half_charge = Complex::new(0.0, br.charging / 2.0);
        let t = br.tap;
        let ba = BranchAdmittance {
            yff: (ys + half_charge) / (t * t),
            yft: -ys / t,
            ytf: -ys / t,
            ytt: ys + half_charge,
        };
        y[br.from * l + br.from] += ba.yff;
        y[br.from * l + br.to] += ba.yft;
        y[br.to * l + br.from] += ba.ytf;
        y[br.to * l + br.to] += ba.ytt;
        branches.push(ba);
    }
    for sh in &sys.shunts {
        y[sh.bus * l + sh.bus] += Complex::new(sh.conductance, sh.susceptance);
    }
    let conductance = DMatrix::from_fn(l, l, |i, j| y[i * l + j].re);
    let susceptance = DMatrix::from_fn(l, l, |i, j| y[i * l + j].im);
    let rows = (0..l)
        .map(|i| {
            (0..l)
                .filter(|&j| y[i * l + j] != Complex::new(0.0, 0.0))
                .map(|j| (j, y[i * l + j].re, y[i * l + j].im))
                .collect()
        })
        .collect();
    sys.set_admittance(Admittance { conductance, susceptance, branches, rows });
    Ok(sys)
}
