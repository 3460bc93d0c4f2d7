use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_dual::Dual64;

use super::{Expected, ZooEntry};
use crate::chart::{dual_jacobian, Chart, Domain, MetricFormula, Real};
use crate::error::{GeomError, Result};
use crate::hermitian::{HermitianStructure, StructureKind};
use crate::holonomy::HolonomyClass;
use crate::ode::Loop;

/// `ds² + g_{S^{2n−1}}` in coordinates `(s, α_1…α_{n−1}, ξ_1…ξ_n)`, where
/// the sphere is `μ e^{iξ}` with `μ` on the positive orthant of `S^{n−1}`.
struct HopfMetric {
    n: usize,
}

fn orthant<T: Real>(alpha: &[T]) -> Vec<T> {
    let k = alpha.len() + 1;
    let mut mu = Vec::with_capacity(k);
    let mut prod = T::one();
    for a in alpha {
        mu.push(prod * a.cos());
        prod *= a.sin();
    }
    mu.push(prod);
    mu
}

impl MetricFormula for HopfMetric {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn components<T: Real>(&self, x: &[T]) -> Vec<T> {
        let n = self.n;
        let m = 2 * n;
        let mut g = vec![T::zero(); m * m];
        g[0] = T::one();
        let alpha = &x[1..n];
        let mut prod = T::one();
        for (i, a) in alpha.iter().enumerate() {
            let k = 1 + i;
            g[k * m + k] = prod;
            let s = a.sin();
            prod *= s * s;
        }
        let mu = orthant(alpha);
        for (i, mu_i) in mu.iter().enumerate() {
            let k = n + i;
            g[k * m + k] = *mu_i * *mu_i;
        }
        g
    }
}

/// Real coordinates `(x_k, y_k)` of `z_k = e^{−s} μ_k e^{iξ_k}`.
fn embedding<T: Real>(n: usize, x: &[T]) -> Vec<T> {
    let r = (-x[0]).exp();
    let mu = orthant(&x[1..n]);
    let mut out = Vec::with_capacity(2 * n);
    for k in 0..n {
        let phase = x[n + k];
        out.push(r * mu[k] * phase.cos());
        out.push(r * mu[k] * phase.sin());
    }
    out
}

/// Standard complex structure of `ℂⁿ` pulled back through the embedding.
fn hopf_j(n: usize, x: &[f64]) -> DMatrix<f64> {
    let m = 2 * n;
    let (_, d) = dual_jacobian(|y: &[Dual64]| embedding(n, y), x);
    // jac[a][c] = ∂_c z_a
    let jac = DMatrix::from_fn(m, m, |a, c| d[c][a]);
    let mut j0 = DMatrix::zeros(m, m);
    for k in 0..n {
        j0[(2 * k + 1, 2 * k)] = 1.0;
        j0[(2 * k, 2 * k + 1)] = -1.0;
    }
    let inv = jac.clone().try_inverse().expect("embedding is a local diffeomorphism on the chart");
    inv * j0 * jac
}

/// `S¹ × S^{2n−1}` as the quotient of `ℂⁿ∖0` by `z ↦ e^{−C} z`, with the
/// metric `|dz|²/|z|²` and `s` running along the `S¹` factor of length `C`.
pub fn hopf(n: usize, circumference: f64) -> Result<ZooEntry> {
    if n < 2 {
        return Err(GeomError::Parameter(format!("hopf needs complex dimension n >= 2, got {n}")));
    }
    if !(circumference > 0.0) {
        return Err(GeomError::Parameter(format!("circumference must be positive, got {circumference}")));
    }
    let m = 2 * n;
    let mut lo = vec![-0.5];
    let mut hi = vec![circumference + 0.5];
    for _ in 1..n {
        lo.push(0.25);
        hi.push(FRAC_PI_2 - 0.25);
    }
    for _ in 0..n {
        lo.push(-0.5);
        hi.push(TAU + 0.5);
    }
    let chart = Chart::from_formula(format!("hopf{n}"), Domain::new(lo, hi)?, HopfMetric { n })?;
    let structure = HermitianStructure::new(format!("hopf{n}:J"), chart.clone(), Arc::new(move |x: &[f64]| hopf_j(n, x)), true)?;

    let center = DVector::from_vec(chart.domain().center());
    let mut start = center.clone();
    start[0] = 0.0;
    let generator = Loop::translation("s1-generator", start.clone(), 0, circumference, 400)?;
    let mut fiber_start = center.clone();
    fiber_start[n] = 0.0;
    let fiber = Loop::translation("xi1-circle", fiber_start, n, TAU, 400)?;
    let small = Loop::circle("small-circle", center.clone(), 1, n, 0.1, 200)?;

    let mut params = BTreeMap::new();
    params.insert("n".into(), n.to_string());
    params.insert("circumference".into(), format!("{circumference}"));
    let lee: Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync> = Arc::new(move |_| {
        let mut t = DVector::zeros(m);
        t[0] = 1.0;
        t
    });
    let parallel: Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync> = lee.clone();
    Ok(ZooEntry {
        name: "hopf".into(),
        params,
        charts: vec![chart],
        structures: vec![structure],
        loops: vec![generator, fiber, small],
        expected: Expected {
            kind: StructureKind::Vaisman,
            holonomy: HolonomyClass::OddOrthogonal,
            holonomy_chart: 0,
            holonomy_j: vec![],
            lee_form: Some(lee),
        },
        einstein: None,
        parallel_field: Some(parallel),
        calabi: None,
    })
}
