#![allow(dead_code)]

use lck_core::chart::{MetricFormula, Real};
use lck_core::{Chart, Domain};
use nalgebra::{DMatrix, DVector};

pub struct Euclid(pub usize);

impl MetricFormula for Euclid {
    fn dim(&self) -> usize {
        self.0
    }
    fn components<T: Real>(&self, _: &[T]) -> Vec<T> {
        let m = self.0;
        (0..m * m).map(|k| if k % (m + 1) == 0 { T::one() } else { T::zero() }).collect()
    }
}

/// Round sphere of radius `r` in hyperspherical coordinates
/// `dψ1² + sin²ψ1 dψ2² + sin²ψ1 sin²ψ2 dψ3² + …`.
pub struct RoundSphere {
    pub dim: usize,
    pub radius: f64,
}

impl MetricFormula for RoundSphere {
    fn dim(&self) -> usize {
        self.dim
    }
    fn components<T: Real>(&self, x: &[T]) -> Vec<T> {
        let m = self.dim;
        let mut g = vec![T::zero(); m * m];
        let mut w = T::from(self.radius * self.radius);
        for i in 0..m {
            g[i * m + i] = w;
            let s = x[i].sin();
            w = w * s * s;
        }
        g
    }
}

pub fn euclidean(m: usize) -> Chart {
    Chart::from_formula(format!("R{m}"), Domain::cube(m, -1.0, 1.0).unwrap(), Euclid(m)).unwrap()
}

pub fn round_sphere(dim: usize, radius: f64) -> Chart {
    let mut lo = vec![0.4; dim];
    let mut hi = vec![std::f64::consts::PI - 0.4; dim];
    lo[dim - 1] = -0.5;
    hi[dim - 1] = std::f64::consts::TAU + 0.5;
    Chart::from_formula(format!("S{dim}"), Domain::new(lo, hi).unwrap(), RoundSphere { dim, radius }).unwrap()
}

pub fn unit(m: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(m);
    v[i] = 1.0;
    v
}

/// Deterministic pseudo-random vector.
pub fn wiggle(m: usize, seed: usize) -> DVector<f64> {
    DVector::from_fn(m, |i, _| ((i * 7 + seed * 13 + 1) as f64 * 0.618_033_988_7).fract() - 0.5)
}

pub fn gram(g: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    u.dot(&(g * v))
}
