//! The classical 23-function minimization suite.
//!
//! F1–F7 are unimodal and F8–F13 multimodal, both in 30 dimensions;
//! F14–F23 have fixed low dimension.

use crate::prelude::*;
use crate::{Error, Result};
use core::f64::consts::{E, PI};

#[derive(Debug, Clone, Copy)]
pub struct Benchmark {
    pub name: &'static str,
    pub title: &'static str,
    pub dim: usize,
    /// Per-dimension box; `F17` has different ranges per coordinate.
    bounds: Bounds2,
    /// Known global minimum value.
    pub optimum: f64,
    f: fn(&[f64]) -> f64,
}

#[derive(Debug, Clone, Copy)]
enum Bounds2 {
    Uniform(f64, f64),
    Branin,
}

impl Benchmark {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn lower(&self) -> Vec<f64> {
        match self.bounds {
            Bounds2::Uniform(l, _) => vec![l; self.dim],
            Bounds2::Branin => vec![-5.0, 0.0],
        }
    }

    pub fn upper(&self) -> Vec<f64> {
        match self.bounds {
            Bounds2::Uniform(_, u) => vec![u; self.dim],
            Bounds2::Branin => vec![10.0, 15.0],
        }
    }

    pub fn by_name(name: &str) -> Result<Benchmark> {
        SUITE
            .iter()
            .find(|b| b.name.eq_ignore_ascii_case(name))
            .copied()
            .ok_or_else(|| Error::UnknownFunction(name.into()))
    }
}

/// Evaluates a suite function by name (`"F1"` … `"F23"`).
pub fn benchmark(name: &str, x: &[f64]) -> Result<f64> {
    let b = Benchmark::by_name(name)?;
    if x.len() != b.dim {
        return Err(Error::Dimension(format!("{} expects {} dimensions, got {}", b.name, b.dim, x.len())));
    }
    Ok(b.evaluate(x))
}

pub fn suite() -> &'static [Benchmark] {
    &SUITE
}

const fn uni(l: f64, u: f64) -> Bounds2 {
    Bounds2::Uniform(l, u)
}

pub static SUITE: [Benchmark; 23] = [
    Benchmark { name: "F1", title: "Sphere", dim: 30, bounds: uni(-100.0, 100.0), optimum: 0.0, f: f1 },
    Benchmark { name: "F2", title: "Schwefel 2.22", dim: 30, bounds: uni(-10.0, 10.0), optimum: 0.0, f: f2 },
    Benchmark { name: "F3", title: "Schwefel 1.2", dim: 30, bounds: uni(-100.0, 100.0), optimum: 0.0, f: f3 },
    Benchmark { name: "F4", title: "Schwefel 2.21", dim: 30, bounds: uni(-100.0, 100.0), optimum: 0.0, f: f4 },
    Benchmark { name: "F5", title: "Rosenbrock", dim: 30, bounds: uni(-30.0, 30.0), optimum: 0.0, f: f5 },
    Benchmark { name: "F6", title: "Step", dim: 30, bounds: uni(-100.0, 100.0), optimum: 0.0, f: f6 },
    Benchmark { name: "F7", title: "Quartic with noise", dim: 30, bounds: uni(-1.28, 1.28), optimum: 0.0, f: f7 },
    Benchmark {
        name: "F8",
        title: "Schwefel 2.26",
        dim: 30,
        bounds: uni(-500.0, 500.0),
        optimum: -418.982_887_272_433_8 * 30.0,
        f: f8,
    },
    Benchmark { name: "F9", title: "Rastrigin", dim: 30, bounds: uni(-5.12, 5.12), optimum: 0.0, f: f9 },
    Benchmark { name: "F10", title: "Ackley", dim: 30, bounds: uni(-32.0, 32.0), optimum: 0.0, f: f10 },
    Benchmark { name: "F11", title: "Griewank", dim: 30, bounds: uni(-600.0, 600.0), optimum: 0.0, f: f11 },
    Benchmark { name: "F12", title: "Penalized 1", dim: 30, bounds: uni(-50.0, 50.0), optimum: 0.0, f: f12 },
    Benchmark { name: "F13", title: "Penalized 2", dim: 30, bounds: uni(-50.0, 50.0), optimum: 0.0, f: f13 },
    Benchmark { name: "F14", title: "Shekel foxholes", dim: 2, bounds: uni(-65.536, 65.536), optimum: 0.998_003_837_794_449, f: f14 },
    Benchmark { name: "F15", title: "Kowalik", dim: 4, bounds: uni(-5.0, 5.0), optimum: 0.000_307_485_987_8, f: f15 },
    Benchmark { name: "F16", title: "Six-hump camel", dim: 2, bounds: uni(-5.0, 5.0), optimum: -1.031_628_453_489_877, f: f16 },
    Benchmark { name: "F17", title: "Branin", dim: 2, bounds: Bounds2::Branin, optimum: 0.397_887_357_729_738, f: f17 },
    Benchmark { name: "F18", title: "Goldstein-Price", dim: 2, bounds: uni(-2.0, 2.0), optimum: 3.0, f: f18 },
    Benchmark { name: "F19", title: "Hartman 3", dim: 3, bounds: uni(0.0, 1.0), optimum: -3.862_782_147_820_755, f: f19 },
    Benchmark { name: "F20", title: "Hartman 6", dim: 6, bounds: uni(0.0, 1.0), optimum: -3.322_368_011_391_339, f: f20 },
    Benchmark { name: "F21", title: "Shekel 5", dim: 4, bounds: uni(0.0, 10.0), optimum: -10.153_199_679_058_23, f: f21 },
    Benchmark { name: "F22", title: "Shekel 7", dim: 4, bounds: uni(0.0, 10.0), optimum: -10.402_915_336_777_96, f: f22 },
    Benchmark { name: "F23", title: "Shekel 10", dim: 4, bounds: uni(0.0, 10.0), optimum: -10.536_283_726_219_76, f: f23 },
];

fn f1(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn f2(x: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|v| v.abs()).sum();
    let p: f64 = x.iter().map(|v| v.abs()).product();
    s + p
}

fn f3(x: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut prefix = 0.0;
    for v in x {
        prefix += v;
        acc += prefix * prefix;
    }
    acc
}

fn f4(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn f5(x: &[f64]) -> f64 {
    x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2)).sum()
}

fn f6(x: &[f64]) -> f64 {
    x.iter().map(|v| (v + 0.5).floor().powi(2)).sum()
}

/// Uniform `[0, 1)` derived from the bits of `x`, standing in for the
/// random term so the function stays deterministic.
fn hashed_uniform(x: &[f64]) -> f64 {
    let mut h = 0x9e37_79b9_7f4a_7c15_u64;
    for v in x {
        h = crate::rng::splitmix64(h ^ v.to_bits());
    }
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn f7(x: &[f64]) -> f64 {
    let s: f64 = x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v.powi(4)).sum();
    s + hashed_uniform(x)
}

fn f8(x: &[f64]) -> f64 {
    x.iter().map(|v| -v * v.abs().sqrt().sin()).sum()
}

fn f9(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0).sum()
}

fn f10(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sq: f64 = x.iter().map(|v| v * v).sum();
    let cs: f64 = x.iter().map(|v| (2.0 * PI * v).cos()).sum();
    -20.0 * (-0.2 * (sq / n).sqrt()).exp() - (cs / n).exp() + 20.0 + E
}

fn f11(x: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let p: f64 = x.iter().enumerate().map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos()).product();
    s - p + 1.0
}

fn penalty(v: f64, a: f64, k: f64, m: i32) -> f64 {
    if v > a {
        k * (v - a).powi(m)
    } else if v < -a {
        k * (-v - a).powi(m)
    } else {
        0.0
    }
}

fn f12(x: &[f64]) -> f64 {
    let n = x.len();
    let y: Vec<f64> = x.iter().map(|v| 1.0 + (v + 1.0) / 4.0).collect();
    let mut s = 10.0 * (PI * y[0]).sin().powi(2);
    for i in 0..n - 1 {
        s += (y[i] - 1.0).powi(2) * (1.0 + 10.0 * (PI * y[i + 1]).sin().powi(2));
    }
    s += (y[n - 1] - 1.0).powi(2);
    PI / n as f64 * s + x.iter().map(|&v| penalty(v, 10.0, 100.0, 4)).sum::<f64>()
}

fn f13(x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = (3.0 * PI * x[0]).sin().powi(2);
    for i in 0..n - 1 {
        s += (x[i] - 1.0).powi(2) * (1.0 + (3.0 * PI * x[i + 1]).sin().powi(2));
    }
    s += (x[n - 1] - 1.0).powi(2) * (1.0 + (2.0 * PI * x[n - 1]).sin().powi(2));
    0.1 * s + x.iter().map(|&v| penalty(v, 5.0, 100.0, 4)).sum::<f64>()
}

fn f14(x: &[f64]) -> f64 {
    const GRID: [f64; 5] = [-32.0, -16.0, 0.0, 16.0, 32.0];
    let mut s = 1.0 / 500.0;
    for j in 0..25 {
        let (a1, a2) = (GRID[j % 5], GRID[j / 5]);
        s += 1.0 / ((j + 1) as f64 + (x[0] - a1).powi(6) + (x[1] - a2).powi(6));
    }
    1.0 / s
}

fn f15(x: &[f64]) -> f64 {
    const A: [f64; 11] = [0.1957, 0.1947, 0.1735, 0.16, 0.0844, 0.0627, 0.0456, 0.0342, 0.0323, 0.0235, 0.0246];
    const INV_B: [f64; 11] = [0.25, 0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0];
    A.iter()
        .zip(INV_B)
        .map(|(a, ib)| {
            let b = 1.0 / ib;
            let r = x[0] * (b * b + b * x[1]) / (b * b + b * x[2] + x[3]);
            (a - r).powi(2)
        })
        .sum()
}

fn f16(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    4.0 * a * a - 2.1 * a.powi(4) + a.powi(6) / 3.0 + a * b - 4.0 * b * b + 4.0 * b.powi(4)
}

fn f17(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (b - 5.1 / (4.0 * PI * PI) * a * a + 5.0 / PI * a - 6.0).powi(2) + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * a.cos() + 10.0
}

fn f18(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let p = 1.0 + (a + b + 1.0).powi(2) * (19.0 - 14.0 * a + 3.0 * a * a - 14.0 * b + 6.0 * a * b + 3.0 * b * b);
    let q = 30.0 + (2.0 * a - 3.0 * b).powi(2) * (18.0 - 32.0 * a + 12.0 * a * a + 48.0 * b - 36.0 * a * b + 27.0 * b * b);
    p * q
}

const HARTMAN_C: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

fn hartman<const N: usize>(x: &[f64], a: &[[f64; N]; 4], p: &[[f64; N]; 4]) -> f64 {
    -(0..4)
        .map(|i| {
            let s: f64 = (0..N).map(|j| a[i][j] * (x[j] - p[i][j]).powi(2)).sum();
            HARTMAN_C[i] * (-s).exp()
        })
        .sum::<f64>()
}

fn f19(x: &[f64]) -> f64 {
    const A: [[f64; 3]; 4] = [[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]];
    const P: [[f64; 3]; 4] = [
        [0.3689, 0.117, 0.2673],
        [0.4699, 0.4387, 0.747],
        [0.1091, 0.8732, 0.5547],
        [0.03815, 0.5743, 0.8828],
    ];
    hartman(x, &A, &P)
}

fn f20(x: &[f64]) -> f64 {
    const A: [[f64; 6]; 4] = [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ];
    const P: [[f64; 6]; 4] = [
        [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
        [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
        [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
        [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
    ];
    hartman(x, &A, &P)
}

const SHEKEL_A: [[f64; 4]; 10] = [
    [4.0, 4.0, 4.0, 4.0],
    [1.0, 1.0, 1.0, 1.0],
    [8.0, 8.0, 8.0, 8.0],
    [6.0, 6.0, 6.0, 6.0],
    [3.0, 7.0, 3.0, 7.0],
    [2.0, 9.0, 2.0, 9.0],
    [5.0, 5.0, 3.0, 3.0],
    [8.0, 1.0, 8.0, 1.0],
    [6.0, 2.0, 6.0, 2.0],
    [7.0, 3.6, 7.0, 3.6],
];
const SHEKEL_C: [f64; 10] = [0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5];

fn shekel(x: &[f64], m: usize) -> f64 {
    -(0..m)
        .map(|i| {
            let d: f64 = (0..4).map(|j| (x[j] - SHEKEL_A[i][j]).powi(2)).sum();
            1.0 / (d + SHEKEL_C[i])
        })
        .sum::<f64>()
}

fn f21(x: &[f64]) -> f64 {
    shekel(x, 5)
}

fn f22(x: &[f64]) -> f64 {
    shekel(x, 7)
}

fn f23(x: &[f64]) -> f64 {
    shekel(x, 10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn known_minimizers() {
        assert_eq!(benchmark("F1", &[0.0; 30]).unwrap(), 0.0);
        assert_eq!(benchmark("F5", &[1.0; 30]).unwrap(), 0.0);
        assert_eq!(benchmark("F9", &[0.0; 30]).unwrap(), 0.0);
        assert_eq!(benchmark("F2", &[0.0; 30]).unwrap(), 0.0);
        assert_eq!(benchmark("F3", &[0.0; 30]).unwrap(), 0.0);
        assert_eq!(benchmark("F6", &[0.3; 30]).unwrap(), 0.0);
        assert_relative_eq!(benchmark("F10", &[0.0; 30]).unwrap(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(benchmark("F11", &[0.0; 30]).unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(benchmark("F12", &[-1.0; 30]).unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(benchmark("F13", &[1.0; 30]).unwrap(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(benchmark("F8", &[420.968_746_2; 30]).unwrap(), SUITE[7].optimum, max_relative = 1e-9);
    }

    #[test]
    fn fixed_dimension_optima() {
        let cases: [(&str, &[f64]); 10] = [
            ("F14", &[-31.978_335_59, -31.978_335_59]),
            ("F15", &[0.192_833, 0.190_836, 0.123_117, 0.135_766]),
            ("F16", &[0.089_842_01, -0.712_656_4]),
            ("F17", &[PI, 2.275]),
            ("F18", &[0.0, -1.0]),
            ("F19", &[0.114_614, 0.555_649, 0.852_547]),
            ("F20", &[0.201_689_52, 0.150_010_69, 0.476_873_98, 0.275_332_43, 0.311_651_62, 0.657_300_54]),
            ("F21", &[4.000_037_16, 4.000_133_4, 3.999_965_1, 4.000_133_4]),
            ("F22", &[4.000_572_9, 4.000_689_6, 3.999_489_8, 3.999_606_5]),
            ("F23", &[4.000_746_5, 4.000_592_9, 3.999_663_4, 3.999_509_8]),
        ];
        for (name, x) in cases {
            let b = Benchmark::by_name(name).unwrap();
            let v = b.evaluate(x);
            assert!((v - b.optimum).abs() <= 1e-4 * (1.0 + b.optimum.abs()), "{name}: {v} vs {}", b.optimum);
        }
    }

    #[test]
    fn quartic_noise_is_deterministic_and_bounded() {
        let x = [0.1; 30];
        let a = benchmark("F7", &x).unwrap();
        assert_eq!(a, benchmark("F7", &x).unwrap());
        let base: f64 = (1..=30).map(|i| i as f64 * 1e-4).sum();
        assert!(a >= base && a < base + 1.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(benchmark("F24", &[0.0]), Err(Error::UnknownFunction(_))));
        assert!(matches!(benchmark("F1", &[0.0; 3]), Err(Error::Dimension(_))));
    }

    #[test]
    fn suite_shape() {
        assert_eq!(suite().len(), 23);
        for b in suite() {
            assert_eq!(b.lower().len(), b.dim);
            assert!(b.lower().iter().zip(b.upper()).all(|(l, u)| *l < u));
        }
    }
}
