use std::fmt;
use std::sync::Arc;

use crate::chart::Real;
use crate::error::{GeomError, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 128.0 / 225.0),
    (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

/// A real function of one variable on an interval, with optional exact
/// derivative and primitive.
#[derive(Clone)]
pub struct ProfileFn {
    name: String,
    value: RealFn,
    derivative: Option<RealFn>,
    primitive: Option<RealFn>,
    domain: (f64, f64),
}

impl fmt::Debug for ProfileFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProfileFn")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl ProfileFn {
    pub fn new(name: impl Into<String>, value: RealFn, domain: (f64, f64)) -> Self {
        ProfileFn { name: name.into(), value, derivative: None, primitive: None, domain }
    }

    pub fn with_derivative(mut self, derivative: RealFn) -> Self {
        self.derivative = Some(derivative);
        self
    }

    /// An antiderivative; only differences of it are ever used.
    pub fn with_primitive(mut self, primitive: RealFn) -> Self {
        self.primitive = Some(primitive);
        self
    }

    /// Built-in profiles: `sin`, `sin_bump` (`sin r·(1 + 0.3 sin² r)`), `cos`,
    /// `zero`.
    pub fn named(name: &str) -> Result<ProfileFn> {
        let wide = (-1e3, 1e3);
        let p = match name {
            "sin" => ProfileFn::new("sin", Arc::new(f64::sin), wide)
                .with_derivative(Arc::new(f64::cos))
                .with_primitive(Arc::new(|x: f64| -x.cos())),
            "cos" => ProfileFn::new("cos", Arc::new(f64::cos), wide)
                .with_derivative(Arc::new(|x: f64| -x.sin()))
                .with_primitive(Arc::new(f64::sin)),
            "sin_bump" => ProfileFn::new("sin_bump", Arc::new(|x: f64| x.sin() * (1.0 + 0.3 * x.sin().powi(2))), wide)
                .with_derivative(Arc::new(|x: f64| x.cos() * (1.0 + 0.9 * x.sin().powi(2))))
                .with_primitive(Arc::new(|x: f64| -1.3 * x.cos() + 0.1 * x.cos().powi(3))),
            "zero" => ProfileFn::new("zero", Arc::new(|_| 0.0), wide)
                .with_derivative(Arc::new(|_| 0.0))
                .with_primitive(Arc::new(|_| 0.0)),
            other => return Err(GeomError::Selector(format!("unknown profile `{other}`"))),
        };
        Ok(p)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    /// Exact derivative when known, fourth-order central differences otherwise.
    pub fn derivative(&self, x: f64) -> f64 {
        match &self.derivative {
            Some(d) => d(x),
            None => self.derivative_fd(x, 1e-3),
        }
    }

    pub fn derivative_fd(&self, x: f64, h: f64) -> f64 {
        let f = &self.value;
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let h = 1e-3;
        (-self.derivative(x + 2.0 * h) + 8.0 * self.derivative(x + h) - 8.0 * self.derivative(x - h)
            + self.derivative(x - 2.0 * h))
            / (12.0 * h)
    }

    /// `|f' − central difference|` at `x`, when an exact derivative is given.
    pub fn derivative_defect(&self, x: f64) -> Option<f64> {
        self.derivative.as_ref().map(|d| (d(x) - self.derivative_fd(x, 1e-3)).abs())
    }

    /// `∫_a^b f` by composite five-point Gauss–Legendre quadrature.
    pub fn quadrature(&self, a: f64, b: f64, panels: usize) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * h;
            for (node, weight) in GAUSS5 {
                total += weight * self.value(mid + 0.5 * h * node);
            }
        }
        0.5 * h * total
    }

    /// `∫_0^x f`, exact when a primitive is known.
    pub fn integral_from_zero(&self, x: f64) -> f64 {
        match &self.primitive {
            Some(p) => p(x) - p(0.0),
            None => self.quadrature(0.0, x, 64),
        }
    }

    /// `f(x)` on a dual-number argument.
    pub fn eval<T: Real>(&self, x: T) -> T {
        let v = x.value();
        x.through(self.value(v), self.derivative(v))
    }

    /// `∫_0^x f` on a dual-number argument.
    pub fn eval_integral<T: Real>(&self, x: T) -> T {
        let v = x.value();
        x.through(self.integral_from_zero(v), self.value(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_derivatives_match_differences() {
        for name in ["sin", "cos", "sin_bump", "zero"] {
            let p = ProfileFn::named(name).unwrap();
            for k in 0..20 {
                let x = -3.0 + 0.37 * k as f64;
                assert!(p.derivative_defect(x).unwrap() < 1e-9, "{name} at {x}");
            }
        }
    }

    #[test]
    fn primitives_match_quadrature() {
        for name in ["sin", "cos", "sin_bump"] {
            let p = ProfileFn::named(name).unwrap();
            for x in [0.3, 1.1, 2.5, 3.0] {
                let exact = p.integral_from_zero(x);
                assert!((exact - p.quadrature(0.0, x, 32)).abs() < 1e-12, "{name} at {x}");
            }
        }
    }

    #[test]
    fn unknown_profile_is_rejected() {
        assert!(matches!(ProfileFn::named("tan"), Err(GeomError::Selector(_))));
    }
}
