//! Hermitian structures on a chart and residual checks of the lcK identities.

mod classify;
mod identities;
mod pair;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::calculus::{codifferential, exterior_derivative, nabla, stencil};
use crate::chart::{Chart, MatrixFn};
use crate::error::{GeomError, Result};
use crate::tensor::{act_on_form, wedge, Frame, FrameTensor};

pub use classify::{classify_structure, StructureClass, StructureKind};
pub use identities::{
    curvature_j_residuals, delta_omega_residual, domega_residual, einstein_chain_residuals, nabla_j_residual,
    parallel_field_residuals, s_commutator_residual, vaisman_fiber_curvature_residual, ParallelFieldReport,
};
pub use pair::{
    average_metric_residuals, commuting_pair_residuals, AverageMetricReport, hamiltonian_form_residual, hamiltonian_form_sides, Potential,
};

/// Named residuals, ordered by name.
pub type ResidualMap = BTreeMap<String, f64>;

/// `diff / (1 + largest term norm)`.
pub(crate) fn relative(diff: f64, terms: &[f64]) -> f64 {
    diff / (1.0 + terms.iter().cloned().fold(0.0, f64::max))
}

/// A metric chart paired with an almost complex structure.
#[derive(Clone)]
pub struct HermitianStructure {
    label: String,
    chart: Chart,
    complex_structure: MatrixFn,
    integrable: bool,
}

impl fmt::Debug for HermitianStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermitianStructure")
            .field("label", &self.label)
            .field("chart", &self.chart.label())
            .field("integrable", &self.integrable)
            .finish()
    }
}

impl HermitianStructure {
    pub fn new(label: impl Into<String>, chart: Chart, complex_structure: MatrixFn, integrable: bool) -> Result<Self> {
        let m = chart.dim();
        if m < 2 || m % 2 != 0 {
            return Err(GeomError::Parameter(format!("a Hermitian structure needs even dimension, got {m}")));
        }
        Ok(HermitianStructure { label: label.into(), chart, complex_structure, integrable })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.chart.dim() / 2
    }

    pub fn integrable(&self) -> bool {
        self.integrable
    }

    pub fn complex_structure(&self) -> &MatrixFn {
        &self.complex_structure
    }

    pub fn j(&self, p: &[f64]) -> DMatrix<f64> {
        (self.complex_structure)(p)
    }

    /// Same complex structure over another metric on the same coordinates.
    pub fn on_chart(&self, label: impl Into<String>, chart: Chart) -> HermitianStructure {
        HermitianStructure {
            label: label.into(),
            chart,
            complex_structure: self.complex_structure.clone(),
            integrable: self.integrable,
        }
    }

    pub fn negated(&self, label: impl Into<String>) -> HermitianStructure {
        let j = self.complex_structure.clone();
        HermitianStructure {
            label: label.into(),
            chart: self.chart.clone(),
            complex_structure: Arc::new(move |p: &[f64]| -j(p)),
            integrable: self.integrable,
        }
    }

    /// `(|J² + 1|, |JᵀgJ − g|)`, each relative to the size of the terms.
    pub fn gate_defects(&self, p: &[f64]) -> Result<(f64, f64)> {
        let g = self.chart.metric_checked(p)?;
        let j = self.j(p);
        let m = g.nrows();
        let square = (&j * &j + DMatrix::identity(m, m)).amax() / (1.0 + (&j * &j).amax());
        let compat = (j.transpose() * &g * &j - &g).amax() / (1.0 + g.amax());
        Ok((square, compat))
    }
}

pub(crate) fn compatible_j(h: &HermitianStructure, p: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let g = h.chart.metric_checked(p)?;
    let j = h.j(p);
    let defect = (j.transpose() * &g * &j - &g).amax() / (1.0 + g.amax());
    if defect > h.chart.settings().tol.id {
        return Err(GeomError::Compatibility { point: p.to_vec(), defect });
    }
    Ok((g, j))
}

/// `Ω = g(J·,·)`, i.e. `Ω_ab = g(J e_a, e_b)`.
pub fn fundamental_form(h: &HermitianStructure, p: &[f64]) -> Result<FrameTensor> {
    let (g, j) = compatible_j(h, p)?;
    Ok(FrameTensor::bilinear(&(j.transpose() * g), p))
}

pub(crate) fn fundamental_matrix(h: &HermitianStructure, p: &[f64]) -> Result<DMatrix<f64>> {
    let (g, j) = compatible_j(h, p)?;
    Ok(j.transpose() * g)
}

/// Relative size of the Nijenhuis tensor `N(X,Y) = [JX,JY] − J[JX,Y] − J[X,JY] − [X,Y]`.
pub fn nijenhuis_residual(h: &HermitianStructure, p: &[f64]) -> Result<f64> {
    let (g, j) = compatible_j(h, p)?;
    let m = g.nrows();
    let dj = stencil(|q| Ok(DMatrix::transpose(&h.j(q)).as_slice().to_vec()), p, h.chart.settings().nested_step)?;
    // row-major storage of J: dJ[c][k*m + j] = ∂_c J^k_j
    let d = |c: usize, k: usize, jj: usize| dj[c][k * m + jj];
    let mut brackets = FrameTensor::zeros(2, 1, m, p);
    let mut twisted = FrameTensor::zeros(2, 1, m, p);
    for k in 0..m {
        for a in 0..m {
            for b in 0..m {
                let mut t1 = 0.0;
                let mut t2 = 0.0;
                for l in 0..m {
                    t1 += j[(l, a)] * d(l, k, b) - j[(l, b)] * d(l, k, a);
                    t2 += j[(k, l)] * (d(b, l, a) - d(a, l, b));
                }
                brackets.set(&[k, a, b], t1);
                twisted.set(&[k, a, b], t2);
            }
        }
    }
    let frame = Frame::new(&g, p)?;
    let n = frame.norm(&brackets.add(&twisted)?);
    Ok(relative(n, &[frame.norm(&brackets), frame.norm(&twisted)]))
}

/// Lee form components from `θ = J(δΩ)/(2n−2)`.
pub fn lee_covector(h: &HermitianStructure, p: &[f64]) -> Result<DVector<f64>> {
    let n = h.n();
    if n < 2 {
        return Err(GeomError::Precondition("the Lee form is defined for complex dimension n >= 2".into()));
    }
    let omega = |q: &[f64]| fundamental_form(h, q);
    let delta = codifferential(&h.chart, &omega, p)?.as_vector()?;
    Ok(act_on_form(&h.j(p), &delta) / (2.0 * n as f64 - 2.0))
}

/// `∇θ` as a matrix `N[a, b] = ∇_a θ_b`.
pub(crate) fn nabla_theta(h: &HermitianStructure, p: &[f64]) -> Result<DMatrix<f64>> {
    let theta = |q: &[f64]| Ok(FrameTensor::covector(&lee_covector(h, q)?, q));
    nabla(&h.chart, &theta, p)?.as_matrix()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeeData {
    pub theta: FrameTensor,
    pub j_theta: FrameTensor,
    pub norm_sq: f64,
    /// `S = ∇θ + θ⊗θ`.
    pub s: FrameTensor,
    /// Relative `‖dΩ − 2θ∧Ω‖`.
    pub domega_residual: f64,
    /// Relative `‖dθ‖`.
    pub closedness: f64,
}

pub fn lee_form(h: &HermitianStructure, p: &[f64]) -> Result<LeeData> {
    let theta = lee_covector(h, p)?;
    let domega = domega_residual(h, p)?;
    if domega > 100.0 * h.chart.settings().tol.id {
        return Err(GeomError::NotLck { point: p.to_vec(), residual: domega });
    }
    let frame = Frame::new(&h.chart.metric_checked(p)?, p)?;
    let j = h.j(p);
    let n_theta = nabla_theta(h, p)?;
    let s = &n_theta + &theta * theta.transpose();
    let dtheta = &n_theta - n_theta.transpose();
    let closedness = relative(frame.bilinear_norm(&dtheta), &[frame.bilinear_norm(&n_theta)]);
    Ok(LeeData {
        norm_sq: frame.inner(&frame.sharp(&theta), &frame.sharp(&theta)),
        j_theta: FrameTensor::covector(&act_on_form(&j, &theta), p),
        theta: FrameTensor::covector(&theta, p),
        s: FrameTensor::bilinear(&s, p),
        domega_residual: domega,
        closedness,
    })
}

/// `dθ` by exterior differentiation of the extracted Lee form.
pub fn lee_differential(h: &HermitianStructure, p: &[f64]) -> Result<FrameTensor> {
    let theta = |q: &[f64]| Ok(FrameTensor::covector(&lee_covector(h, q)?, q));
    exterior_derivative(&h.chart, &theta, p)
}

/// `θ ∧ Ω` for a given 1-form.
pub(crate) fn theta_wedge_omega(h: &HermitianStructure, theta: &DVector<f64>, p: &[f64]) -> Result<FrameTensor> {
    wedge(&FrameTensor::covector(theta, p), &fundamental_form(h, p)?)
}
