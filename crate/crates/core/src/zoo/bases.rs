use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_dual::{Dual64, DualNum};

use crate::chart::{dual_jacobian, Chart, Domain, MetricFormula, Real};
use crate::error::{GeomError, Result};
use crate::hermitian::HermitianStructure;

/// A Kähler manifold `(N, h, J_N, Ω_N)` on one chart, together with a
/// connection potential `A` satisfying `dA = Ω_N`.
#[derive(Clone, Debug, PartialEq)]
pub enum KahlerBase {
    /// Round sphere of radius² `r2` in coordinates `(ϑ, ψ)`.
    Sphere { r2: f64, kappa: f64 },
    /// `ℂ^k` with the standard structure in coordinates `(x1, y1, …)`.
    Flat { complex_dim: usize },
}

/// `d(½ cos ϑ dψ)(∂_ϑ, ∂_ψ)` by exact differentiation.
fn contact_curvature(theta: f64) -> f64 {
    let (_, d) = dual_jacobian(|x: &[Dual64]| vec![x[0].cos() * 0.5], &[theta, 0.0]);
    d[0][0]
}

impl KahlerBase {
    /// Sphere of radius `r`; its connection is `κ·½cos ϑ dψ` with `κ` fixed
    /// so that `dA = Ω_N`.
    pub fn sphere(r: f64) -> Result<KahlerBase> {
        if !(r > 0.0) {
            return Err(GeomError::Parameter(format!("sphere radius must be positive, got {r}")));
        }
        let r2 = r * r;
        let ratios: Vec<f64> = [0.4, 1.1, 2.0, 2.7]
            .iter()
            .map(|&t: &f64| r2 * t.sin() / contact_curvature(t))
            .collect();
        let kappa = ratios[0];
        if ratios.iter().any(|k| (k - kappa).abs() > 1e-12 * kappa.abs()) {
            return Err(GeomError::Bundle(format!("contact form normalization is not constant: {ratios:?}")));
        }
        Ok(KahlerBase::Sphere { r2, kappa })
    }

    /// `ℂP¹` with total area `2π`.
    pub fn cp1() -> KahlerBase {
        KahlerBase::sphere(0.5f64.sqrt()).expect("positive radius")
    }

    pub fn flat(complex_dim: usize) -> KahlerBase {
        KahlerBase::Flat { complex_dim }
    }

    pub fn by_name(name: &str) -> Result<KahlerBase> {
        match name {
            "cp1" => Ok(KahlerBase::cp1()),
            "flat_c" => Ok(KahlerBase::flat(1)),
            "flat_c2" => Ok(KahlerBase::flat(2)),
            other => Err(GeomError::Selector(format!("unknown Kähler base `{other}`"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            KahlerBase::Sphere { r2, .. } if (*r2 - 0.5).abs() < 1e-15 => "cp1".into(),
            KahlerBase::Sphere { r2, .. } => format!("sphere{{radius={}}}", r2.sqrt()),
            KahlerBase::Flat { complex_dim: 1 } => "flat_c".into(),
            KahlerBase::Flat { complex_dim } => format!("flat_c{complex_dim}"),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            KahlerBase::Sphere { .. } => 2,
            KahlerBase::Flat { complex_dim } => 2 * complex_dim,
        }
    }

    pub fn complex_dim(&self) -> usize {
        self.dim() / 2
    }

    /// The connection normalization factor (1 for flat bases).
    pub fn kappa(&self) -> f64 {
        match self {
            KahlerBase::Sphere { kappa, .. } => *kappa,
            KahlerBase::Flat { .. } => 1.0,
        }
    }

    pub fn domain(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            KahlerBase::Sphere { .. } => (vec![0.3, -0.5], vec![PI - 0.3, TAU + 0.5]),
            KahlerBase::Flat { complex_dim } => (vec![-1.0; 2 * complex_dim], vec![1.0; 2 * complex_dim]),
        }
    }

    /// Row-major metric components.
    pub fn metric<T: Real>(&self, x: &[T]) -> Vec<T> {
        let m = self.dim();
        let mut g = vec![T::zero(); m * m];
        match self {
            KahlerBase::Sphere { r2, .. } => {
                let s = x[0].sin();
                g[0] = T::from(*r2);
                g[3] = s * s * *r2;
            }
            KahlerBase::Flat { .. } => {
                for i in 0..m {
                    g[i * m + i] = T::one();
                }
            }
        }
        g
    }

    pub fn j(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            KahlerBase::Sphere { .. } => {
                let s = x[0].sin();
                DMatrix::from_row_slice(2, 2, &[0.0, -s, 1.0 / s, 0.0])
            }
            KahlerBase::Flat { complex_dim } => {
                let mut j = DMatrix::zeros(2 * complex_dim, 2 * complex_dim);
                for k in 0..*complex_dim {
                    j[(2 * k + 1, 2 * k)] = 1.0;
                    j[(2 * k, 2 * k + 1)] = -1.0;
                }
                j
            }
        }
    }

    /// `Ω_N = h(J_N ·, ·)`.
    pub fn omega(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.dim();
        let h = DMatrix::from_row_slice(m, m, &self.metric::<f64>(x));
        self.j(x).transpose() * h
    }

    /// Components of the connection potential `A` with `dA = Ω_N`.
    pub fn connection<T: Real>(&self, x: &[T]) -> Vec<T> {
        match self {
            KahlerBase::Sphere { kappa, .. } => vec![T::zero(), x[0].cos() * (0.5 * kappa)],
            KahlerBase::Flat { complex_dim } => {
                let mut a = vec![T::zero(); 2 * complex_dim];
                for k in 0..*complex_dim {
                    a[2 * k] = -x[2 * k + 1] * 0.5;
                    a[2 * k + 1] = x[2 * k] * 0.5;
                }
                a
            }
        }
    }

    /// `∫_N Ω_N` over the whole sphere by quadrature; `None` for flat bases.
    pub fn total_area(&self) -> Option<f64> {
        match self {
            KahlerBase::Sphere { .. } => {
                let panels = 200;
                let h = PI / panels as f64;
                let mut total = 0.0;
                for k in 0..panels {
                    let mid = (k as f64 + 0.5) * h;
                    for (node, w) in [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)] {
                        let t = mid + 0.5 * h * node;
                        total += 0.5 * h * w * self.omega(&[t, 0.0])[(0, 1)];
                    }
                }
                Some(total * TAU)
            }
            KahlerBase::Flat { .. } => None,
        }
    }

    pub fn chart(&self) -> Result<Chart> {
        let (lo, hi) = self.domain();
        Chart::from_formula(self.name(), Domain::new(lo, hi)?, BaseMetric(self.clone()))
    }

    pub fn structure(&self) -> Result<HermitianStructure> {
        let base = self.clone();
        HermitianStructure::new(format!("{}:J", self.name()), self.chart()?, Arc::new(move |x: &[f64]| base.j(x)), true)
    }
}

struct BaseMetric(KahlerBase);

impl MetricFormula for BaseMetric {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn components<T: Real>(&self, x: &[T]) -> Vec<T> {
        self.0.metric(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_normalization_is_computed() {
        let s = KahlerBase::sphere(2.0).unwrap();
        assert!((s.kappa() + 8.0).abs() < 1e-12);
        assert!((KahlerBase::cp1().kappa() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn connection_curvature_is_the_kahler_form() {
        for base in [KahlerBase::cp1(), KahlerBase::flat(2)] {
            let x: Vec<f64> = (0..base.dim()).map(|i| 0.7 + 0.1 * i as f64).collect();
            let (_, da) = dual_jacobian(|y| base.connection(y), &x);
            let omega = base.omega(&x);
            for i in 0..base.dim() {
                for k in 0..base.dim() {
                    let d = da[i][k] - da[k][i];
                    assert!((d - omega[(i, k)]).abs() < 1e-12);
                }
            }
        }
    }
}
