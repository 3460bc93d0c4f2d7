use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{Expected, KahlerBase, ProfileFn, ZooEntry};
use crate::chart::{Chart, Domain, MetricFormula, Real};
use crate::error::{GeomError, Result};
use crate::hermitian::{lee_covector, nijenhuis_residual, HermitianStructure, StructureKind};
use crate::holonomy::HolonomyClass;
use crate::ode::Loop;

/// `ds² + dt² + e^{2c(t)} h` in coordinates `(s, t, base…)`.
struct Warped {
    c: ProfileFn,
    base: KahlerBase,
}

impl MetricFormula for Warped {
    fn dim(&self) -> usize {
        self.base.dim() + 2
    }

    fn components<T: Real>(&self, x: &[T]) -> Vec<T> {
        let m = self.dim();
        let k = self.base.dim();
        let w = (self.c.eval(x[1]) * 2.0).exp();
        let h = self.base.metric(&x[2..]);
        let mut g = vec![T::zero(); m * m];
        g[0] = T::one();
        g[m + 1] = T::one();
        for i in 0..k {
            for j in 0..k {
                g[(i + 2) * m + j + 2] = h[i * k + j] * w;
            }
        }
        g
    }
}

/// Checks that the base is Kähler at a few interior points.
fn base_gate(base: &KahlerBase) -> Result<()> {
    let h = base.structure()?;
    let tol = h.chart().settings().tol.id;
    for p in h.chart().sample_points(4, 11) {
        let (square, compat) = h.gate_defects(&p)?;
        let nij = nijenhuis_residual(&h, &p)?;
        let kahler = if h.n() >= 2 { lee_covector(&h, &p)?.amax() } else { 0.0 };
        if square.max(compat).max(nij).max(kahler) > tol {
            return Err(GeomError::Parameter(format!("base {} fails the Kähler gate at {p:?}", base.name())));
        }
    }
    Ok(())
}

/// `ℝ² × N` with the metric `ds² + dt² + e^{2c(t)} g_N` and the complex
/// structure `J∂_s = ∂_t` on the plane, `J_N` on the base.
pub fn warped_vaisman_gck(c: ProfileFn, base: KahlerBase) -> Result<ZooEntry> {
    base_gate(&base)?;
    let k = base.dim();
    let m = k + 2;
    let (blo, bhi) = base.domain();
    let mut lo = vec![-0.5, -0.5];
    let mut hi = vec![1.5, TAU + 0.5];
    lo.extend(blo);
    hi.extend(bhi);
    let label = format!("warped[{},{}]", c.name(), base.name());
    let chart = Chart::from_formula(label.clone(), Domain::new(lo, hi)?, Warped { c: c.clone(), base: base.clone() })?;
    let jb = base.clone();
    let j = Arc::new(move |x: &[f64]| {
        let mut j = DMatrix::zeros(m, m);
        j[(1, 0)] = 1.0;
        j[(0, 1)] = -1.0;
        j.view_mut((2, 2), (k, k)).copy_from(&jb.j(&x[2..]));
        j
    });
    let structure = HermitianStructure::new(format!("{label}:J"), chart.clone(), j, true)?;

    let constant = c.name() == "zero";
    let center = DVector::from_vec(chart.domain().center());
    let mut start = center.clone();
    start[1] = 0.0;
    let t_loop = Loop::translation("t-period", start, 1, TAU, 400)?;
    let mut s_start = center.clone();
    s_start[0] = 0.0;
    let s_loop = Loop::translation("s-period", s_start, 0, 1.0, 100)?;
    let small = Loop::circle("small-circle", center.clone(), 0, 1, 0.2, 200)?;

    let mut params = BTreeMap::new();
    params.insert("c".into(), c.name().to_string());
    params.insert("base".into(), base.name());
    let cl = c.clone();
    let lee: Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync> = Arc::new(move |x: &[f64]| {
        let mut t = DVector::zeros(m);
        t[1] = cl.derivative(x[1]);
        t
    });
    let parallel: Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync> = Arc::new(move |_| {
        let mut v = DVector::zeros(m);
        v[0] = 1.0;
        v
    });
    let (kind, holonomy) = if constant {
        (StructureKind::Kahler, HolonomyClass::Reducible)
    } else {
        (StructureKind::GloballyConformallyKahler, HolonomyClass::OddOrthogonal)
    };
    Ok(ZooEntry {
        name: "warped".into(),
        params,
        charts: vec![chart],
        structures: vec![structure],
        loops: vec![t_loop, s_loop, small],
        expected: Expected { kind, holonomy, holonomy_chart: 0, holonomy_j: vec![], lee_form: Some(lee) },
        einstein: None,
        parallel_field: Some(parallel),
        calabi: None,
    })
}
