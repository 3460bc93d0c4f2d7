use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2};

use super::{Expected, KahlerBase, ProfileFn, ZooEntry};
use crate::calculus::{christoffel_components, covariant_derivative_vector};
use crate::chart::{dual_jacobian, Chart, Domain, MetricFormula, Real};
use crate::error::{GeomError, Result};
use crate::hermitian::{relative, HermitianStructure, ResidualMap, StructureKind};
use crate::holonomy::HolonomyClass;
use crate::ode::Loop;
use crate::tensor::Frame;

/// `e^{wφ(r)} (h + ℓ(r)² ω⊗ω + dr²)` with `ω = dt + A` and `φ = −∫_0^r ℓ`,
/// in coordinates `(base…, t, r)`.
struct CalabiMetric {
    base: KahlerBase,
    ell: ProfileFn,
    weights: Vec<f64>,
    connection_scale: f64,
}

impl MetricFormula for CalabiMetric {
    fn dim(&self) -> usize {
        self.base.dim() + 2
    }

    fn components<T: Real>(&self, x: &[T]) -> Vec<T> {
        let k = self.base.dim();
        let m = k + 2;
        let (t, r) = (k, k + 1);
        let h = self.base.metric(&x[..k]);
        let a: Vec<T> = self.base.connection(&x[..k]).into_iter().map(|v| v * self.connection_scale).collect();
        let ell = self.ell.eval(x[r]);
        let l2 = ell * ell;
        let phi = -self.ell.eval_integral(x[r]);
        let w = self.weights.iter().fold(T::one(), |acc, &s| acc * (phi * s).exp());
        let mut g = vec![T::zero(); m * m];
        for i in 0..k {
            for j in 0..k {
                g[i * m + j] = (h[i * k + j] + l2 * a[i] * a[j]) * w;
            }
            g[i * m + t] = l2 * a[i] * w;
            g[t * m + i] = l2 * a[i] * w;
        }
        g[t * m + t] = l2 * w;
        g[r * m + r] = w;
        g
    }
}

/// Chart and structure indices of a Calabi entry, plus the profile data.
#[derive(Clone, Debug)]
pub struct CalabiData {
    pub ell: ProfileFn,
    pub b: f64,
    pub base: KahlerBase,
    /// Base point for the potential of the Kähler pair's Lee form.
    pub potential_base: Vec<f64>,
}

impl CalabiData {
    pub const G_ELL: usize = 0;
    pub const G_PLUS: usize = 1;
    pub const G_MINUS: usize = 2;
    pub const G_ZERO: usize = 3;

    /// `(g_ℓ, J_+)`
    pub const ELL_PLUS: usize = 0;
    /// `(g_ℓ, J_−)`
    pub const ELL_MINUS: usize = 1;
    /// `(g_+, J_+)`, Kähler.
    pub const PLUS_PLUS: usize = 2;
    /// `(g_+, J_−)`, Lee form `dφ`.
    pub const PLUS_MINUS: usize = 3;
    /// `(g_−, J_−)`, Kähler.
    pub const MINUS_MINUS: usize = 4;
    /// `(g_−, J_+)`, Lee form `−dφ`.
    pub const MINUS_PLUS: usize = 5;

    /// The conformal exponent `φ(r) = −∫_0^r ℓ`, with `g_± = e^{±φ} g_ℓ`.
    pub fn phi(&self, r: f64) -> f64 {
        -self.ell.integral_from_zero(r)
    }

    /// `½∫_0^r ℓ`, the primitive of the Lee form of `(g_ℓ, J_+)`.
    pub fn half_integral(&self, r: f64) -> f64 {
        0.5 * self.ell.integral_from_zero(r)
    }

    pub fn r_index(&self) -> usize {
        self.base.dim() + 1
    }

    pub fn t_index(&self) -> usize {
        self.base.dim()
    }

    /// `A(x) = (ℓ(√x)² − x)/x`, so that `ℓ² = r²(1 + A(r²))`.
    pub fn boundary_a(&self, x: f64) -> f64 {
        let l = self.ell.value(x.sqrt());
        (l * l - x) / x
    }

    /// The `(t, r)` block of `J_ε` rewritten in `x1 = r cos t`, `x2 = r sin t`.
    pub fn euclidean_fiber_j(&self, r: f64, t: f64) -> Matrix2<f64> {
        let l = self.ell.value(r);
        let polar = Matrix2::new(0.0, -1.0 / l, l, 0.0);
        let d = Matrix2::new(-r * t.sin(), t.cos(), r * t.cos(), t.sin());
        d * polar * d.try_inverse().expect("polar coordinates are regular for r > 0")
    }

    /// The metric `dr² + ℓ² dt²` in `x1 = r cos t`, `x2 = r sin t`.
    pub fn euclidean_fiber_metric(&self, r: f64, t: f64) -> Matrix2<f64> {
        let l = self.ell.value(r);
        let polar = Matrix2::new(l * l, 0.0, 0.0, 1.0);
        let d = Matrix2::new(-r * t.sin(), t.cos(), r * t.cos(), t.sin());
        let inv = d.try_inverse().expect("polar coordinates are regular for r > 0");
        inv.transpose() * polar * inv
    }

    /// Residuals of the five rows of the Levi-Civita table of `g_ℓ` in the
    /// frame `(X*, ξ, ∂_r)`.
    pub fn table_residuals(&self, g_ell: &Chart, p: &[f64]) -> Result<ResidualMap> {
        let k = self.base.dim();
        let m = k + 2;
        let (ti, ri) = (self.t_index(), self.r_index());
        let frame = Frame::new(&g_ell.metric_checked(p)?, p)?;
        let unit = |i: usize| {
            let mut v = DVector::zeros(m);
            v[i] = 1.0;
            v
        };
        let lift = |q: &[f64], coeffs: &DVector<f64>| -> DVector<f64> {
            let a = self.base.connection::<f64>(&q[..k]);
            let mut v = DVector::zeros(m);
            for i in 0..k {
                v[i] = coeffs[i];
                v[ti] -= a[i] * coeffs[i];
            }
            v
        };
        let base_unit = |i: usize| {
            let mut v = DVector::zeros(k);
            v[i] = 1.0;
            v
        };
        let compare = |lhs: &DVector<f64>, rhs: &DVector<f64>| {
            relative(frame.vector_norm(&(lhs - rhs)), &[frame.vector_norm(lhs), frame.vector_norm(rhs)])
        };
        let nab = |field: &(dyn Fn(&[f64]) -> Result<DVector<f64>> + Sync), x: &DVector<f64>| {
            covariant_derivative_vector(g_ell, field, p, x)
        };
        let r = p[ri];
        let (l, dl) = (self.ell.value(r), self.ell.derivative(r));
        let xi = unit(ti);
        let dr = unit(ri);
        let xi_field = |_: &[f64]| Ok(unit(ti));
        let dr_field = |_: &[f64]| Ok(unit(ri));
        let mut out = ResidualMap::new();

        let expect = &xi * (dl / l);
        let row1 = compare(&nab(&xi_field, &dr)?, &expect).max(compare(&nab(&dr_field, &xi)?, &expect));
        out.insert("xi_dr".into(), row1);
        out.insert("xi_xi".into(), compare(&nab(&xi_field, &xi)?, &(&dr * (-l * dl))));

        let zero = DVector::zeros(m);
        let mut row3 = compare(&nab(&dr_field, &dr)?, &zero);
        let mut row4: f64 = 0.0;
        let mut row5: f64 = 0.0;
        let bp = &p[..k];
        let jn = self.base.j(bp);
        let omega = self.base.omega(bp);
        let base_chart = self.base.chart()?;
        let gamma = christoffel_components(&base_chart, bp)?;
        for i in 0..k {
            let xi_star = lift(p, &base_unit(i));
            let star_field = move |q: &[f64]| Ok(lift(q, &base_unit(i)));
            row3 = row3.max(compare(&nab(&dr_field, &xi_star)?, &zero));
            row3 = row3.max(compare(&nab(&star_field, &dr)?, &zero));
            let jx = lift(p, &jn.column(i).into_owned());
            let expect = jx * (0.5 * l * l);
            row4 = row4.max(compare(&nab(&xi_field, &xi_star)?, &expect));
            row4 = row4.max(compare(&nab(&star_field, &xi)?, &expect));
            for j in 0..k {
                let y_field = move |q: &[f64]| Ok(lift(q, &base_unit(j)));
                let levi = DVector::from_fn(k, |c, _| gamma[(c * k + i) * k + j]);
                let expect = lift(p, &levi) - &xi * (0.5 * omega[(i, j)]);
                row5 = row5.max(compare(&nab(&y_field, &xi_star)?, &expect));
            }
        }
        out.insert("dr_flat".into(), row3);
        out.insert("horizontal_xi".into(), row4);
        out.insert("horizontal".into(), row5);
        Ok(out)
    }
}

fn fiber_j(base: &KahlerBase, ell: &ProfileFn, eps: f64, x: &[f64]) -> DMatrix<f64> {
    let k = base.dim();
    let m = k + 2;
    let (t, r) = (k, k + 1);
    let a = base.connection::<f64>(&x[..k]);
    let l = ell.value(x[r]);
    let mut adapted = DMatrix::zeros(m, m);
    adapted.view_mut((0, 0), (k, k)).copy_from(&(base.j(&x[..k]) * eps));
    adapted[(r, t)] = l;
    adapted[(t, r)] = -1.0 / l;
    let mut p = DMatrix::identity(m, m);
    let mut p_inv = DMatrix::identity(m, m);
    for i in 0..k {
        p[(t, i)] = a[i];
        p_inv[(t, i)] = -a[i];
    }
    p_inv * adapted * p
}

/// Checks `dA = Ω_N` pointwise and the integrality of the base area.
fn bundle_gate(base: &KahlerBase, scale: f64) -> Result<()> {
    let (lo, hi) = base.domain();
    for s in [0.2, 0.45, 0.7] {
        let x: Vec<f64> = lo.iter().zip(&hi).enumerate().map(|(i, (a, b))| a + (b - a) * (s + 0.05 * i as f64)).collect();
        let (_, da) = dual_jacobian(|y| base.connection(y).into_iter().map(|v| v * scale).collect(), &x);
        let omega = base.omega(&x);
        let k = base.dim();
        for i in 0..k {
            for j in 0..k {
                let defect = (da[i][j] - da[j][i] - omega[(i, j)]).abs();
                if defect > 1e-9 * (1.0 + omega.amax()) {
                    return Err(GeomError::Bundle(format!(
                        "dω differs from the base Kähler form by {defect:.3e} at {x:?}"
                    )));
                }
            }
        }
    }
    if let Some(area) = base.total_area() {
        let ratio = area / TAU;
        if (ratio - ratio.round()).abs() > 1e-8 || ratio.round() == 0.0 {
            return Err(GeomError::Bundle(format!("base area {area} is not in 2πℤ")));
        }
    }
    Ok(())
}

pub fn calabi_ansatz(ell: ProfileFn, b: f64, base: KahlerBase) -> Result<ZooEntry> {
    calabi_with_connection_scale(ell, b, base, 1.0)
}

/// As [`calabi_ansatz`] with the connection form multiplied by `scale`;
/// anything but 1 breaks `dω = π*Ω_N`.
pub fn calabi_with_connection_scale(ell: ProfileFn, b: f64, base: KahlerBase, scale: f64) -> Result<ZooEntry> {
    if !(b > 0.5) {
        return Err(GeomError::Parameter(format!("interval length b must exceed 0.5, got {b}")));
    }
    for i in 1..1000 {
        let r = b * i as f64 / 1000.0;
        if !(ell.value(r) > 0.0) {
            return Err(GeomError::Parameter(format!("profile {} is not positive at r = {r}", ell.name())));
        }
    }
    bundle_gate(&base, scale)?;
    let k = base.dim();
    let m = k + 2;
    let (blo, bhi) = base.domain();
    let mut lo = blo;
    let mut hi = bhi;
    lo.extend([-0.5, 0.25]);
    hi.extend([TAU + 0.5, b - 0.25]);
    let domain = Domain::new(lo, hi)?;
    let tag = format!("calabi[{},{:.6},{}]", ell.name(), b, base.name());
    let chart = |suffix: &str, weights: Vec<f64>| {
        Chart::from_formula(
            format!("{tag}:{suffix}"),
            domain.clone(),
            CalabiMetric { base: base.clone(), ell: ell.clone(), weights, connection_scale: scale },
        )
    };
    let g_ell = chart("g_ell", vec![])?;
    let g_plus = chart("g_plus", vec![1.0])?;
    let g_minus = chart("g_minus", vec![-1.0])?;
    let g_zero = chart("g0", vec![-1.0, 1.0])?;

    let j_of = |eps: f64| {
        let (base, ell) = (base.clone(), ell.clone());
        Arc::new(move |x: &[f64]| fiber_j(&base, &ell, eps, x)) as crate::chart::MatrixFn
    };
    let (jp, jm) = (j_of(1.0), j_of(-1.0));
    let st = |label: &str, c: &Chart, j: &crate::chart::MatrixFn| {
        HermitianStructure::new(format!("{tag}:{label}"), c.clone(), j.clone(), true)
    };
    let structures = vec![
        st("g_ell,J+", &g_ell, &jp)?,
        st("g_ell,J-", &g_ell, &jm)?,
        st("g_plus,J+", &g_plus, &jp)?,
        st("g_plus,J-", &g_plus, &jm)?,
        st("g_minus,J-", &g_minus, &jm)?,
        st("g_minus,J+", &g_minus, &jp)?,
    ];

    let center = DVector::from_vec(g_ell.domain().center());
    let mut start = center.clone();
    start[k] = 0.0;
    let fiber = Loop::translation("fiber", start, k, TAU, 400)?;
    let fiber_radial = Loop::circle("t-r-circle", center.clone(), k, k + 1, 0.2, 200)?;
    let base_loop = Loop::circle("base-circle", center.clone(), 0, 1, 0.1, 200)?;

    let mut params = BTreeMap::new();
    params.insert("ell".into(), ell.name().to_string());
    params.insert("b".into(), format!("{b}"));
    params.insert("base".into(), base.name());
    let el = ell.clone();
    let lee: Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync> = Arc::new(move |x: &[f64]| {
        let mut t = DVector::zeros(m);
        t[m - 1] = 0.5 * el.value(x[m - 1]);
        t
    });
    let data = CalabiData { ell, b, base, potential_base: center.as_slice().to_vec() };
    Ok(ZooEntry {
        name: "calabi".into(),
        params,
        charts: vec![g_ell, g_plus, g_minus, g_zero],
        structures,
        loops: vec![fiber, fiber_radial, base_loop],
        expected: Expected {
            kind: StructureKind::GloballyConformallyKahler,
            holonomy: HolonomyClass::Unitary,
            holonomy_chart: CalabiData::G_PLUS,
            holonomy_j: vec![CalabiData::PLUS_PLUS],
            lee_form: Some(lee),
        },
        einstein: None,
        parallel_field: None,
        calabi: Some(data),
    })
}
