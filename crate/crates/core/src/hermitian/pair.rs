use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};

use super::{fundamental_matrix, lee_covector, nabla_theta, relative, HermitianStructure, ResidualMap};
use crate::calculus::{covariant_derivative, gradient, lie_derivative_metric, nabla};
use crate::chart::Chart;
use crate::error::{GeomError, Result};
use crate::ode::{path_integral, Path};
use crate::tensor::{act_on_form, inverse, wedge_1forms, Frame, FrameTensor};

/// A primitive of the (closed) Lee form of a structure, obtained by
/// integrating θ along straight segments from a base point.
///
/// Values are anchored on a grid of spacing [`Potential::GRID`]: the anchor
/// nearest to `q` is integrated from the base once and cached, and only the
/// short segment from the anchor to `q` is integrated per call. The anchor
/// depends only on `q`, so results do not depend on evaluation order.
#[derive(Clone)]
pub struct Potential {
    structure: HermitianStructure,
    base: DVector<f64>,
    panels: usize,
    anchors: Arc<RwLock<HashMap<Vec<i64>, f64>>>,
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Potential")
            .field("structure", &self.structure.label())
            .field("base", &self.base.as_slice())
            .finish()
    }
}

impl Potential {
    pub const GRID: f64 = 0.05;

    pub fn new(structure: &HermitianStructure, base: &[f64], panels: usize) -> Result<Potential> {
        structure.chart().check_point(base, structure.chart().settings().sampling_margin())?;
        Ok(Potential {
            structure: structure.clone(),
            base: DVector::from_column_slice(base),
            panels: panels.max(1),
            anchors: Arc::default(),
        })
    }

    pub fn base(&self) -> &[f64] {
        self.base.as_slice()
    }

    pub fn value(&self, q: &[f64]) -> Result<f64> {
        let key: Vec<i64> = q.iter().map(|x| (x / Self::GRID).round() as i64).collect();
        let anchor = DVector::from_iterator(q.len(), key.iter().map(|&k| k as f64 * Self::GRID));
        let chart = self.structure.chart();
        if !chart.domain().contains(anchor.as_slice(), chart.settings().sampling_margin()) {
            return self.direct(q);
        }
        let cached = self.anchors.read().expect("potential cache poisoned").get(&key).copied();
        let start = match cached {
            Some(v) => v,
            None => {
                let v = self.direct(anchor.as_slice())?;
                self.anchors.write().expect("potential cache poisoned").insert(key, v);
                v
            }
        };
        let target = DVector::from_column_slice(q);
        let panels = ((&target - &anchor).norm() / Self::GRID).ceil().max(1.0) as usize;
        Ok(start + self.integrate(&Path::line(anchor, target), panels)?)
    }

    /// The integral along the straight segment from the base, bypassing the
    /// anchor cache.
    pub fn direct(&self, q: &[f64]) -> Result<f64> {
        self.integrate(&Path::line(self.base.clone(), DVector::from_column_slice(q)), self.panels)
    }

    /// Same integral through an intermediate point; agreement with
    /// [`Potential::value`] tests that θ is closed.
    pub fn value_via(&self, q: &[f64], waypoint: &[f64]) -> Result<f64> {
        let path = Path::polyline(&[
            self.base.clone(),
            DVector::from_column_slice(waypoint),
            DVector::from_column_slice(q),
        ])?;
        self.integrate(&path, self.panels)
    }

    fn integrate(&self, path: &Path, panels: usize) -> Result<f64> {
        let h = &self.structure;
        let theta = |x: &[f64]| Ok(FrameTensor::covector(&lee_covector(h, x)?, x));
        path_integral(h.chart(), &theta, path, panels)
    }
}

fn on_metric(chart: &Chart, s: &HermitianStructure) -> HermitianStructure {
    s.on_chart(s.label().to_string(), chart.clone())
}

fn ensure_kahler(h: &HermitianStructure, p: &[f64]) -> Result<()> {
    let theta = lee_covector(h, p)?;
    let frame = Frame::new(&h.chart().metric_checked(p)?, p)?;
    let size = frame.covector_norm(&theta);
    if size > 10.0 * h.chart().settings().tol.id {
        return Err(GeomError::Precondition(format!(
            "structure {} is not Kähler at {p:?} (|θ| = {size:.3e})",
            h.label()
        )));
    }
    Ok(())
}

/// Column `a` holds `∇_{e_a} V`.
fn vector_nabla<F>(chart: &Chart, v: F, p: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DVector<f64>> + Sync,
{
    let wrapped = |z: &[f64]| Ok(FrameTensor::vector(&v(z)?, z));
    nabla(chart, &wrapped, p)?.as_matrix()
}

fn form_norm(frame: &Frame, b: &DMatrix<f64>) -> f64 {
    frame.bilinear_norm(b)
}

/// Residuals for a Kähler structure `I` and a second complex structure `J`
/// on the same metric, such that `(g, J)` is lcK.
pub fn commuting_pair_residuals(
    gplus: &Chart,
    i: &HermitianStructure,
    j: &HermitianStructure,
    p: &[f64],
) -> Result<ResidualMap> {
    let hi = on_metric(gplus, i);
    let hj = on_metric(gplus, j);
    ensure_kahler(&hi, p)?;
    let g = gplus.metric_checked(p)?;
    let frame = Frame::new(&g, p)?;
    let (im, jm) = (hi.j(p), hj.j(p));
    let theta = lee_covector(&hj, p)?;
    let sq = frame.inner(&frame.sharp(&theta), &frame.sharp(&theta));
    if sq < 10.0 * gplus.settings().tol.id {
        return Err(GeomError::Singular { point: p.to_vec() });
    }
    let n = hj.n() as f64;
    let m = g.nrows();
    let mut out = ResidualMap::new();
    let ij = &im * &jm;
    let ji = &jm * &im;
    out.insert(
        "commute".into(),
        relative(frame.endomorphism_norm(&(&ij - &ji)), &[frame.endomorphism_norm(&ij)]),
    );
    out.insert("trace".into(), (ij.trace() - (2.0 * n - 4.0)).abs());

    let i_theta = act_on_form(&im, &theta);
    let j_theta = act_on_form(&jm, &theta);
    out.insert(
        "i_theta_j_theta".into(),
        relative(
            frame.covector_norm(&(&i_theta - &j_theta)),
            &[frame.covector_norm(&i_theta), frame.covector_norm(&j_theta)],
        ),
    );

    let pair_term = (frame.sharp(&i_theta) * theta.transpose() - frame.sharp(&theta) * i_theta.transpose()) * (2.0 / sq);
    out.insert(
        "eq_J".into(),
        relative(
            frame.endomorphism_norm(&(&jm + &im - &pair_term)),
            &[frame.endomorphism_norm(&jm), frame.endomorphism_norm(&pair_term)],
        ),
    );

    let omega_i = fundamental_matrix(&hi, p)?;
    let omega_j = fundamental_matrix(&hj, p)?;
    let th = FrameTensor::covector(&theta, p);
    let a = crate::tensor::wedge(&th, &FrameTensor::bilinear(&omega_j, p))?;
    let b = crate::tensor::wedge(&th, &FrameTensor::bilinear(&omega_i, p))?;
    out.insert(
        "to".into(),
        relative(frame.norm(&a.add(&b)?), &[frame.norm(&a), frame.norm(&b)]),
    );

    let sigma = (&omega_i + &omega_j) * 0.5;
    let model = wedge_1forms(&theta, &i_theta) / sq;
    out.insert(
        "sigma".into(),
        relative(form_norm(&frame, &(&sigma - &model)), &[form_norm(&frame, &sigma), form_norm(&frame, &model)]),
    );

    let sigma_field = |q: &[f64]| -> Result<FrameTensor> {
        let s = (fundamental_matrix(&hi, q)? + fundamental_matrix(&hj, q)?) * 0.5;
        Ok(FrameTensor::bilinear(&s, q))
    };
    let nabla_sigma = nabla(gplus, &sigma_field, p)?;
    let mut rhs = FrameTensor::zeros(3, 0, m, p);
    for c in 0..m {
        let mut x = DVector::zeros(m);
        x[c] = 1.0;
        let ix = &im * &x;
        let block = (wedge_1forms(&frame.flat(&x), &i_theta) - wedge_1forms(&frame.flat(&ix), &theta)) * 0.5
            - &sigma * theta[c];
        for a in 0..m {
            for b in 0..m {
                rhs.set(&[c, a, b], block[(a, b)]);
            }
        }
    }
    out.insert(
        "deromega".into(),
        relative(frame.norm(&nabla_sigma.sub(&rhs)?), &[frame.norm(&nabla_sigma), frame.norm(&rhs)]),
    );

    let nt = nabla_theta(&hj, p)?;
    let delta_theta = -(frame.g_inv.component_mul(&nt)).sum();
    let nsharp = &frame.g_inv * nt.transpose();
    let lhs = (&ij * &nsharp).trace();
    let expected = 2.0 * (n - 1.0) * sq + delta_theta;
    out.insert("nablath".into(), relative((lhs - expected).abs(), &[lhs.abs(), expected.abs()]));

    let k = delta_theta / sq;
    let model = &g * (0.5 * sq) - &theta * theta.transpose() * (0.5 * (k + n + 1.0))
        - &i_theta * i_theta.transpose() * (0.5 * (k + n - 1.0));
    out.insert(
        "et".into(),
        relative(frame.bilinear_norm(&(&nt - &model)), &[frame.bilinear_norm(&nt), frame.bilinear_norm(&model)]),
    );
    Ok(out)
}

/// Both sides of `∇_X σ̃ = ½(du ∧ (IX)♭ − d^c u ∧ X♭)` with `σ̃ = e^φ σ` and
/// `u = ⟨σ̃, Ω^I⟩`.
pub fn hamiltonian_form_sides(
    gplus: &Chart,
    i: &HermitianStructure,
    j: &HermitianStructure,
    potential: &Potential,
    p: &[f64],
    x: &DVector<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let hi = on_metric(gplus, i);
    let hj = on_metric(gplus, j);
    let sigma_tilde = |q: &[f64]| -> Result<DMatrix<f64>> {
        let s = (fundamental_matrix(&hi, q)? + fundamental_matrix(&hj, q)?) * 0.5;
        Ok(s * potential.value(q)?.exp())
    };
    let field = |q: &[f64]| Ok(FrameTensor::bilinear(&sigma_tilde(q)?, q));
    let lhs = covariant_derivative(gplus, &field, p, x)?.as_matrix()?;
    let trace = |q: &[f64]| -> Result<f64> {
        let ginv = inverse(&gplus.metric_checked(q)?, q)?;
        let raised = &ginv * fundamental_matrix(&hi, q)? * &ginv;
        Ok(0.5 * sigma_tilde(q)?.component_mul(&raised).sum())
    };
    let du = gradient(gplus, &trace, p)?;
    let g = gplus.metric_checked(p)?;
    let im = hi.j(p);
    let dcu = act_on_form(&im, &du);
    let rhs = (wedge_1forms(&du, &(&g * &im * x)) - wedge_1forms(&dcu, &(&g * x))) * 0.5;
    Ok((lhs, rhs))
}

pub fn hamiltonian_form_residual(
    gplus: &Chart,
    i: &HermitianStructure,
    j: &HermitianStructure,
    potential: &Potential,
    p: &[f64],
    x: &DVector<f64>,
) -> Result<f64> {
    let (lhs, rhs) = hamiltonian_form_sides(gplus, i, j, potential, p, x)?;
    let frame = Frame::new(&gplus.metric_checked(p)?, p)?;
    Ok(relative(
        frame.bilinear_norm(&(&lhs - &rhs)),
        &[frame.bilinear_norm(&lhs), frame.bilinear_norm(&rhs)],
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AverageMetricReport {
    pub residuals: ResidualMap,
    /// The function `f` fitted from `∇θ₀ = f(θ₀⊗θ₀ + Iθ₀⊗Iθ₀)`.
    pub f: f64,
    pub xi_norm: f64,
}

/// Residuals of the field equations satisfied by the average metric `g0` of
/// a commuting pair, with `I` the structure whose Lee form is `θ₀` and
/// `potential` a primitive of the Kähler-side Lee form.
pub fn average_metric_residuals(
    g0: &Chart,
    i: &HermitianStructure,
    potential: &Potential,
    p: &[f64],
) -> Result<AverageMetricReport> {
    let h0 = on_metric(g0, i);
    let g = g0.metric_checked(p)?;
    let frame = Frame::new(&g, p)?;
    let im = h0.j(p);
    let m = g.nrows();
    let mut out = ResidualMap::new();

    let theta = lee_covector(&h0, p)?;
    let dphi = gradient(g0, &|q: &[f64]| potential.value(q), p)?;
    out.insert(
        "theta0".into(),
        relative(
            frame.covector_norm(&(&theta + &dphi * 0.5)),
            &[frame.covector_norm(&theta), 0.5 * frame.covector_norm(&dphi)],
        ),
    );

    let i_theta = act_on_form(&im, &theta);
    let nt = nabla_theta(&h0, p)?;
    let q = &theta * theta.transpose() + &i_theta * i_theta.transpose();
    let et = frame.e.transpose();
    let (nn, qq) = (&et * &nt * &frame.e, &et * &q * &frame.e);
    let qq_sq = qq.norm_squared();
    if qq_sq == 0.0 {
        return Err(GeomError::Singular { point: p.to_vec() });
    }
    let f = nn.dot(&qq) / qq_sq;
    out.insert(
        "der0theta".into(),
        relative(frame.bilinear_norm(&(&nt - &q * f)), &[frame.bilinear_norm(&nt), frame.bilinear_norm(&(&q * f))]),
    );

    let xi_of = |z: &[f64]| -> Result<DVector<f64>> {
        let ginv = inverse(&g0.metric_checked(z)?, z)?;
        Ok(ginv * act_on_form(&h0.j(z), &lee_covector(&h0, z)?))
    };
    let xi = xi_of(p)?;
    let xi_norm = frame.vector_norm(&xi);
    if xi_norm < 10.0 * g0.settings().tol.id {
        return Err(GeomError::Singular { point: p.to_vec() });
    }
    let ixi = &im * &xi;
    let gxi = &g * &xi;
    let gixi = &g * &ixi;

    let compare = |lhs: &DMatrix<f64>, terms: &[DMatrix<f64>]| -> f64 {
        let total = terms.iter().fold(DMatrix::zeros(m, m), |acc, t| acc + t);
        let mut scales: Vec<f64> = terms.iter().map(|t| frame.endomorphism_norm(t)).collect();
        scales.push(frame.endomorphism_norm(lhs));
        relative(frame.endomorphism_norm(&(lhs - total)), &scales)
    };

    let n_ixi = vector_nabla(g0, |z| Ok(h0.j(z) * xi_of(z)?), p)?;
    out.insert(
        "der0Jxi".into(),
        compare(&n_ixi, &[-(&ixi * gixi.transpose()) * f, -(&xi * gxi.transpose()) * f]),
    );

    let n_xi = vector_nabla(g0, xi_of, p)?;
    out.insert(
        "der0xi".into(),
        compare(
            &n_xi,
            &[(&ixi * gxi.transpose()) * (1.0 + f), -(&xi * gixi.transpose()) * (1.0 + f), -&im * (xi_norm * xi_norm)],
        ),
    );

    let zeta_of = |z: &[f64]| -> Result<DVector<f64>> {
        let gz = g0.metric_checked(z)?;
        let v = h0.j(z) * xi_of(z)?;
        let len = v.dot(&(&gz * &v)).sqrt();
        Ok(v / len)
    };
    let n_zeta = vector_nabla(g0, zeta_of, p)?;
    out.insert("derIxi".into(), compare(&n_zeta, &[-(&xi * gxi.transpose()) * (f / xi_norm)]));

    let zeta = zeta_of(p)?;
    let izeta_field = |z: &[f64]| Ok(FrameTensor::vector(&(h0.j(z) * zeta_of(z)?), z));
    let along = covariant_derivative(g0, &izeta_field, p, &zeta)?.as_vector()?;
    let full = nabla(g0, &izeta_field, p)?.as_matrix()?;
    out.insert(
        "derzeta".into(),
        relative(frame.vector_norm(&along), &[frame.endomorphism_norm(&full)]),
    );

    let lie = lie_derivative_metric(g0, &xi_of, p)?;
    out.insert(
        "killing".into(),
        relative(frame.bilinear_norm(&lie), &[frame.endomorphism_norm(&n_xi)]),
    );
    Ok(AverageMetricReport { residuals: out, f, xi_norm })
}
