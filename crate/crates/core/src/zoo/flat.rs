use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{Expected, ZooEntry};
use crate::chart::{Chart, Domain, MetricFormula, Real};
use crate::error::{GeomError, Result};
use crate::hermitian::{HermitianStructure, StructureKind};
use crate::holonomy::HolonomyClass;
use crate::ode::Loop;

/// `r⁻⁴ δ` on `ℝ^{2n}∖0`.
struct Inversion {
    m: usize,
}

impl MetricFormula for Inversion {
    fn dim(&self) -> usize {
        self.m
    }

    fn components<T: Real>(&self, x: &[T]) -> Vec<T> {
        let r2 = x.iter().fold(T::zero(), |acc, &v| acc + v * v);
        let w = (r2 * r2).recip();
        let mut g = vec![T::zero(); self.m * self.m];
        for i in 0..self.m {
            g[i * self.m + i] = w;
        }
        g
    }
}

pub(crate) fn standard_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

/// The image of flat `ℂⁿ∖0` under inversion: the metric `r⁻⁴ g₀` with the
/// standard complex structure, which is again flat.
///
/// The chart is a box inside the positive orthant, which keeps `½ < r < 2`
/// and stays clear of the coordinate axes.
pub fn flat_inversion(n: usize) -> Result<ZooEntry> {
    if n < 2 {
        return Err(GeomError::Parameter(format!("flat_inversion needs complex dimension n >= 2, got {n}")));
    }
    let m = 2 * n;
    let hi = 0.8f64.min(1.9 / (m as f64).sqrt());
    let lo = 0.35f64.min(0.5 * hi);
    let chart = Chart::from_formula(format!("flat_inversion{n}"), Domain::cube(m, lo, hi)?, Inversion { m })?;
    let j = standard_j(n);
    let structure = HermitianStructure::new(format!("flat_inversion{n}:J0"), chart.clone(), Arc::new(move |_| j.clone()), true)?;

    let center = DVector::from_vec(chart.domain().center());
    let side = 0.3 * (hi - lo);
    let mut a = center.clone();
    a[0] -= 0.5 * side;
    a[1] -= 0.5 * side;
    let mut b = a.clone();
    b[0] += side;
    let mut c = b.clone();
    c[1] += side;
    let mut d = a.clone();
    d[1] += side;
    let square = Loop::polygon("square-x1y1", &[a, b, c, d], 200)?;
    let circle = Loop::circle("circle-x1x2", center.clone(), 0, 2, 0.4 * side, 200)?;

    let mut params = BTreeMap::new();
    params.insert("n".into(), n.to_string());
    let lee: Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync> = Arc::new(|x: &[f64]| {
        let v = DVector::from_column_slice(x);
        let r2 = v.norm_squared();
        v * (-2.0 / r2)
    });
    Ok(ZooEntry {
        name: "flat_inversion".into(),
        params,
        charts: vec![chart],
        structures: vec![structure],
        loops: vec![square, circle],
        expected: Expected {
            kind: StructureKind::GloballyConformallyKahler,
            holonomy: HolonomyClass::Reducible,
            holonomy_chart: 0,
            holonomy_j: vec![0],
            lee_form: Some(lee),
        },
        einstein: Some(0.0),
        parallel_field: None,
        calabi: None,
    })
}
