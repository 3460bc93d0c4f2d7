use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_dual::{Dual64, DualNum, DualStruct};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeomError, Result};
use crate::settings::{DerivativeMode, Settings};

/// Scalars a metric formula can be evaluated with: plain floats, or dual
/// numbers when exact first partials are wanted.
pub trait Real: DualNum<Primitive = f64> + Copy + Send + Sync {
    /// Pushes `self` through a real function with the given value and
    /// derivative at `self`'s real part.
    fn through(self, value: f64, derivative: f64) -> Self;
    fn value(self) -> f64;
}

impl Real for f64 {
    fn through(self, value: f64, _derivative: f64) -> Self {
        value
    }
    fn value(self) -> f64 {
        self
    }
}

impl Real for Dual64 {
    fn through(self, value: f64, derivative: f64) -> Self {
        Dual64::new(value, derivative * self.eps)
    }
    fn value(self) -> f64 {
        self.re()
    }
}

/// A metric written once and evaluated both on floats and dual numbers.
pub trait MetricFormula: Send + Sync + 'static {
    fn dim(&self) -> usize;
    /// Row-major `dim × dim` components at `x`.
    fn components<T: Real>(&self, x: &[T]) -> Vec<T>;
}

pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type MatrixListFn = Arc<dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;

/// Partials of a vector-valued formula by forward-mode dual numbers;
/// entry `[c][k]` is `∂_c f_k`.
pub fn dual_jacobian<F>(f: F, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>)
where
    F: Fn(&[Dual64]) -> Vec<Dual64>,
{
    let value: Vec<f64> = f(&x.iter().map(|&v| Dual64::from_re(v)).collect::<Vec<_>>())
        .iter()
        .map(|d| d.re)
        .collect();
    let partials = (0..x.len())
        .map(|c| {
            let args: Vec<Dual64> = x
                .iter()
                .enumerate()
                .map(|(i, &v)| Dual64::new(v, if i == c { 1.0 } else { 0.0 }))
                .collect();
            f(&args).iter().map(|d| d.eps).collect()
        })
        .collect();
    (value, partials)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(GeomError::Parameter(format!("degenerate coordinate box {lo:?} .. {hi:?}")));
        }
        Ok(Domain { lo, hi })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, p: &[f64], margin: f64) -> bool {
        p.len() == self.dim()
            && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| x.is_finite() && *x > a + margin && *x < b - margin)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, margin: f64) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| {
                let (a, b) = (a + margin, b - margin);
                a + (b - a) * rng.random::<f64>()
            })
            .collect()
    }
}

/// A coordinate box carrying a Riemannian metric.
#[derive(Clone)]
pub struct Chart {
    label: String,
    domain: Domain,
    metric: MatrixFn,
    metric_derivative: Option<MatrixListFn>,
    settings: Settings,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("analytic_derivative", &self.metric_derivative.is_some())
            .field("settings", &self.settings)
            .finish()
    }
}

impl Chart {
    pub fn new(label: impl Into<String>, domain: Domain, metric: MatrixFn) -> Self {
        Chart { label: label.into(), domain, metric, metric_derivative: None, settings: Settings::default() }
    }

    /// Builds both the metric and its exact partials from one formula.
    pub fn from_formula<F: MetricFormula>(label: impl Into<String>, domain: Domain, formula: F) -> Result<Self> {
        let m = formula.dim();
        if domain.dim() != m {
            return Err(GeomError::Parameter(format!("formula of dimension {m} on a box of dimension {}", domain.dim())));
        }
        let formula = Arc::new(formula);
        let f1 = formula.clone();
        let metric: MatrixFn = Arc::new(move |x: &[f64]| DMatrix::from_row_slice(m, m, &f1.components::<f64>(x)));
        let f2 = formula;
        let derivative: MatrixListFn = Arc::new(move |x: &[f64]| {
            let (_, partials) = dual_jacobian(|y| f2.components::<Dual64>(y), x);
            partials.into_iter().map(|d| DMatrix::from_row_slice(m, m, &d)).collect()
        });
        Ok(Chart::new(label, domain, metric).with_metric_derivative(derivative))
    }

    pub fn with_metric_derivative(mut self, derivative: MatrixListFn) -> Self {
        self.metric_derivative = Some(derivative);
        self
    }

    pub fn with_settings(mut self, settings: Settings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.metric_derivative.is_some()
    }

    /// Raw metric components, without any check.
    pub fn metric(&self, p: &[f64]) -> DMatrix<f64> {
        (self.metric)(p)
    }

    pub fn check_point(&self, p: &[f64], margin: f64) -> Result<()> {
        if self.domain.contains(p, margin) {
            Ok(())
        } else {
            Err(GeomError::Domain { chart: self.label.clone(), point: p.to_vec() })
        }
    }

    /// Metric at `p` after checking the safe margin and positive definiteness.
    pub fn metric_checked(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(p, 2.0 * self.settings.fd_step)?;
        let g = self.metric(p);
        let asym = (&g - g.transpose()).amax();
        if !g.iter().all(|v| v.is_finite()) || asym > 1e-12 * (1.0 + g.amax()) || g.clone().cholesky().is_none() {
            return Err(GeomError::Metric { point: p.to_vec() });
        }
        Ok(g)
    }

    /// First partials `∂_c g` for `c = 0..dim`: exact in analytic mode when a
    /// derivative field is available, second-order central differences otherwise.
    pub fn metric_partials(&self, p: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.check_point(p, 2.0 * self.settings.fd_step)?;
        match (&self.metric_derivative, self.settings.mode) {
            (Some(d), DerivativeMode::Analytic) => Ok(d(p)),
            _ => Ok(self.metric_partials_fd(p, self.settings.fd_step)),
        }
    }

    pub fn metric_partials_fd(&self, p: &[f64], h: f64) -> Vec<DMatrix<f64>> {
        let mut q = p.to_vec();
        (0..self.dim())
            .map(|c| {
                q[c] = p[c] + h;
                let plus = self.metric(&q);
                q[c] = p[c] - h;
                let minus = self.metric(&q);
                q[c] = p[c];
                (plus - minus) / (2.0 * h)
            })
            .collect()
    }

    pub fn analytic_metric_partials(&self, p: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        self.metric_derivative.as_ref().map(|d| d(p))
    }

    /// Largest gap between the analytic partials and central differences at `p`.
    pub fn metric_derivative_defect(&self, p: &[f64]) -> Option<f64> {
        let exact = self.analytic_metric_partials(p)?;
        let fd = self.metric_partials_fd(p, self.settings.fd_step);
        Some(exact.iter().zip(&fd).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max))
    }

    /// The chart with metric `e^{2u} g`.
    pub fn conformal(&self, label: impl Into<String>, factor: ConformalFactor) -> Chart {
        let base = self.metric.clone();
        let u = factor.value.clone();
        let metric: MatrixFn = Arc::new(move |x: &[f64]| base(x) * (2.0 * u(x)).exp());
        let derivative = match (&self.metric_derivative, &factor.gradient) {
            (Some(d), Some(grad)) => {
                let base = self.metric.clone();
                let d = d.clone();
                let u = factor.value.clone();
                let grad = grad.clone();
                let f: MatrixListFn = Arc::new(move |x: &[f64]| {
                    let w = (2.0 * u(x)).exp();
                    let g = base(x);
                    let du = grad(x);
                    d(x).into_iter().enumerate().map(|(c, dg)| (dg + &g * (2.0 * du[c])) * w).collect()
                });
                Some(f)
            }
            _ => None,
        };
        Chart {
            label: label.into(),
            domain: self.domain.clone(),
            metric,
            metric_derivative: derivative,
            settings: self.settings,
        }
    }

    /// The chart with metric `c · g` for a positive constant.
    pub fn scaled(&self, c: f64) -> Chart {
        let half_log = 0.5 * c.ln();
        let m = self.dim();
        self.conformal(
            format!("{}*{c}", self.label),
            ConformalFactor::new(Arc::new(move |_| half_log), Some(Arc::new(move |_| DVector::zeros(m)))),
        )
    }

    /// Uniform samples over the box shrunk by the sampling margin.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let margin = self.settings.sampling_margin();
        (0..count).map(|_| self.domain.sample(&mut rng, margin)).collect()
    }
}

/// A conformal exponent `u`, with `g ↦ e^{2u} g`.
#[derive(Clone)]
pub struct ConformalFactor {
    pub value: ScalarFn,
    pub gradient: Option<VectorFn>,
}

impl ConformalFactor {
    pub fn new(value: ScalarFn, gradient: Option<VectorFn>) -> Self {
        ConformalFactor { value, gradient }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Polar;
    impl MetricFormula for Polar {
        fn dim(&self) -> usize {
            2
        }
        fn components<T: Real>(&self, x: &[T]) -> Vec<T> {
            let z = T::zero();
            vec![T::one(), z, z, x[0] * x[0]]
        }
    }

    #[test]
    fn dual_partials_match_differences() {
        let chart = Chart::from_formula("polar", Domain::new(vec![0.5, 0.0], vec![2.0, 6.0]).unwrap(), Polar).unwrap();
        let defect = chart.metric_derivative_defect(&[1.2, 3.0]).unwrap();
        assert!(defect < 1e-9, "{defect}");
        let d = chart.analytic_metric_partials(&[1.2, 3.0]).unwrap();
        assert!((d[0][(1, 1)] - 2.4).abs() < 1e-14);
    }

    #[test]
    fn points_outside_margin_are_rejected() {
        let chart = Chart::from_formula("polar", Domain::new(vec![0.5, 0.0], vec![2.0, 6.0]).unwrap(), Polar).unwrap();
        assert!(matches!(chart.metric_checked(&[0.5, 1.0]), Err(GeomError::Domain { .. })));
        assert!(chart.metric_checked(&[0.7, 1.0]).is_ok());
    }

    #[test]
    fn sampling_is_seeded() {
        let chart = Chart::from_formula("polar", Domain::new(vec![0.5, 0.0], vec![2.0, 6.0]).unwrap(), Polar).unwrap();
        assert_eq!(chart.sample_points(5, 9), chart.sample_points(5, 9));
        assert_ne!(chart.sample_points(5, 9), chart.sample_points(5, 10));
    }
}
