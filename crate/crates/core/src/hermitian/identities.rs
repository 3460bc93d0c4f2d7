use nalgebra::{DMatrix, DVector};

use super::{
    compatible_j, fundamental_form, fundamental_matrix, lee_covector, nabla_theta, relative, theta_wedge_omega,
    HermitianStructure, ResidualMap,
};
use crate::calculus::{
    codifferential, covariant_derivative, curvature_endomorphism, exterior_derivative, gradient, lie_bracket, nabla,
    ricci_scalar, riemann, VectorField,
};
use crate::error::{GeomError, Result};
use crate::tensor::{act_on_form, wedge_1forms, Frame, FrameTensor};

fn frame_at(h: &HermitianStructure, p: &[f64]) -> Result<Frame> {
    Frame::new(&h.chart().metric_checked(p)?, p)
}

/// Relative `‖dΩ − 2θ∧Ω‖` with θ extracted from `δΩ`.
pub fn domega_residual(h: &HermitianStructure, p: &[f64]) -> Result<f64> {
    let omega = |q: &[f64]| fundamental_form(h, q);
    let d_omega = exterior_derivative(h.chart(), &omega, p)?;
    let theta = lee_covector(h, p)?;
    let rhs = theta_wedge_omega(h, &theta, p)?.scaled(2.0);
    let frame = frame_at(h, p)?;
    Ok(relative(frame.norm(&d_omega.sub(&rhs)?), &[frame.norm(&d_omega), frame.norm(&rhs)]))
}

/// Relative `‖δΩ − (2−2n)Jθ‖` for a given 1-form θ.
pub fn delta_omega_residual(h: &HermitianStructure, p: &[f64], theta: &DVector<f64>) -> Result<f64> {
    let omega = |q: &[f64]| fundamental_form(h, q);
    let delta = codifferential(h.chart(), &omega, p)?.as_vector()?;
    let n = h.n() as f64;
    let rhs = act_on_form(&h.j(p), theta) * (2.0 - 2.0 * n);
    let frame = frame_at(h, p)?;
    Ok(relative(
        frame.covector_norm(&(&delta - &rhs)),
        &[frame.covector_norm(&delta), frame.covector_norm(&rhs)],
    ))
}

/// Relative defect of `∇_X J = X∧Jθ + JX∧θ`.
pub fn nabla_j_residual(h: &HermitianStructure, p: &[f64], x: &DVector<f64>) -> Result<f64> {
    let jfield = |q: &[f64]| Ok(FrameTensor::endomorphism(&h.j(q), q));
    let lhs = covariant_derivative(h.chart(), &jfield, p, x)?.as_matrix()?;
    let (_, j) = compatible_j(h, p)?;
    let frame = frame_at(h, p)?;
    let theta = lee_covector(h, p)?;
    let t1 = frame.wedge_endomorphism(x, &act_on_form(&j, &theta));
    let t2 = frame.wedge_endomorphism(&(&j * x), &theta);
    let diff = &lhs - &t1 - &t2;
    Ok(relative(
        frame.endomorphism_norm(&diff),
        &[frame.endomorphism_norm(&lhs), frame.endomorphism_norm(&t1), frame.endomorphism_norm(&t2)],
    ))
}

/// Relative defects of the commutator `[R(X,Y), J]` identity and of its contraction.
pub fn curvature_j_residuals(h: &HermitianStructure, p: &[f64], x: &DVector<f64>, y: &DVector<f64>) -> Result<(f64, f64)> {
    let (_, j) = compatible_j(h, p)?;
    let frame = frame_at(h, p)?;
    let r = riemann(h.chart(), p)?;
    let theta = lee_covector(h, p)?;
    let jtheta = act_on_form(&j, &theta);
    let nt = nabla_theta(h, p)?;
    let m = j.nrows();
    let n = h.n() as f64;
    let sq = frame.inner(&frame.sharp(&theta), &frame.sharp(&theta));
    let nabla_along = |v: &DVector<f64>| nt.transpose() * v;
    let w = |v: &DVector<f64>, tau: &DVector<f64>| frame.wedge_endomorphism(v, tau);

    let rxy = curvature_endomorphism(&r, x, y);
    let lhs = &rxy * &j - &j * &rxy;
    let (tx, ty) = (theta.dot(x), theta.dot(y));
    let (jx, jy) = (&j * x, &j * y);
    let (nx, ny) = (nabla_along(x), nabla_along(y));
    let terms = [
        w(y, &jtheta) * tx,
        w(x, &jtheta) * -ty,
        w(&jx, &theta) * -ty,
        w(&jy, &theta) * tx,
        w(y, &frame.flat(&jx)) * -sq,
        w(x, &frame.flat(&jy)) * sq,
        w(y, &act_on_form(&j, &nx)),
        w(&jy, &nx),
        -w(x, &act_on_form(&j, &ny)),
        -w(&jx, &ny),
    ];
    let rhs = terms.iter().fold(DMatrix::zeros(m, m), |acc, t| acc + t);
    let mut scales: Vec<f64> = terms.iter().map(|t| frame.endomorphism_norm(t)).collect();
    scales.push(frame.endomorphism_norm(&lhs));
    let full = relative(frame.endomorphism_norm(&(&lhs - &rhs)), &scales);

    let mut lhs2 = DVector::zeros(m);
    for a in 0..m {
        let ea = frame.e.column(a).into_owned();
        let ra = curvature_endomorphism(&r, x, &ea);
        lhs2 += (&ra * &j - &j * &ra) * &ea;
    }
    let delta_theta = -(frame.g_inv.component_mul(&nt)).sum();
    let n_jx = nabla_along(&jx);
    let c = 2.0 * n - 3.0;
    let parts = [
        frame.sharp(&jtheta) * (c * tx),
        &jx * (-c * sq),
        frame.sharp(&act_on_form(&j, &nx)) * c,
        frame.sharp(&theta) * -theta.dot(&jx),
        -frame.sharp(&n_jx),
        &jx * -delta_theta,
    ];
    let rhs2 = parts.iter().fold(DVector::zeros(m), |acc, t| acc + t);
    let mut scales2: Vec<f64> = parts.iter().map(|t| frame.vector_norm(t)).collect();
    scales2.push(frame.vector_norm(&lhs2));
    let contracted = relative(frame.vector_norm(&(&lhs2 - &rhs2)), &scales2);
    Ok((full, contracted))
}

/// Relative `‖[S♯, J]‖` for `S = ∇θ + θ⊗θ`.
pub fn s_commutator_residual(h: &HermitianStructure, p: &[f64]) -> Result<f64> {
    let (_, j) = compatible_j(h, p)?;
    let frame = frame_at(h, p)?;
    let theta = lee_covector(h, p)?;
    let s = nabla_theta(h, p)? + &theta * theta.transpose();
    let ssharp = &frame.g_inv * &s;
    let comm = &ssharp * &j - &j * &ssharp;
    Ok(relative(frame.endomorphism_norm(&comm), &[frame.endomorphism_norm(&ssharp)]))
}

/// Relative defect of `R(X,Y)ξ = ⟨Y,ξ⟩X − ⟨X,ξ⟩Y` with `ξ = (Jθ)♯`, after
/// projecting `X, Y` orthogonally to `θ♯`. Needs `|θ| = 1`.
pub fn vaisman_fiber_curvature_residual(h: &HermitianStructure, p: &[f64], x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    let (_, j) = compatible_j(h, p)?;
    let frame = frame_at(h, p)?;
    let theta = lee_covector(h, p)?;
    let norm_sq = frame.covector_norm(&theta).powi(2);
    if (norm_sq - 1.0).abs() > h.chart().settings().tol.id {
        return Err(GeomError::Precondition(format!("Lee form is not of unit length (|θ|² = {norm_sq})")));
    }
    let t = frame.sharp(&theta);
    let x = x - &t * frame.inner(x, &t);
    let y = y - &t * frame.inner(y, &t);
    let xi = frame.sharp(&act_on_form(&j, &theta));
    let r = riemann(h.chart(), p)?;
    let lhs = curvature_endomorphism(&r, &x, &y) * &xi;
    let rhs = &x * frame.inner(&y, &xi) - &y * frame.inner(&x, &xi);
    Ok(compare_vec(&frame, &lhs, &[rhs], false))
}

struct LeeFields<'a> {
    h: &'a HermitianStructure,
}

impl LeeFields<'_> {
    fn theta(&self, q: &[f64]) -> Result<DVector<f64>> {
        lee_covector(self.h, q)
    }

    fn jtheta(&self, q: &[f64]) -> Result<DVector<f64>> {
        Ok(act_on_form(&self.h.j(q), &self.theta(q)?))
    }

    fn norm_sq(&self, q: &[f64]) -> Result<f64> {
        let t = self.theta(q)?;
        let g = self.h.chart().metric_checked(q)?;
        let ginv = crate::tensor::inverse(&g, q)?;
        Ok(t.dot(&(ginv * &t)))
    }

    fn s(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        let t = self.theta(q)?;
        Ok(nabla_theta(self.h, q)? + &t * t.transpose())
    }

    fn delta_theta(&self, q: &[f64]) -> Result<f64> {
        let theta = |z: &[f64]| Ok(FrameTensor::covector(&self.theta(z)?, z));
        codifferential(self.h.chart(), &theta, q)?.as_scalar()
    }
}

fn compare_vec(frame: &Frame, lhs: &DVector<f64>, rhs: &[DVector<f64>], covector: bool) -> f64 {
    let norm = |v: &DVector<f64>| if covector { frame.covector_norm(v) } else { frame.vector_norm(v) };
    let total = rhs.iter().fold(DVector::zeros(lhs.len()), |acc, t| acc + t);
    let mut scales: Vec<f64> = rhs.iter().map(norm).collect();
    scales.push(norm(lhs));
    relative(norm(&(lhs - total)), &scales)
}

fn compare_tensor(frame: &Frame, lhs: &FrameTensor, rhs: &[FrameTensor]) -> Result<f64> {
    let mut total = FrameTensor::zeros(lhs.valence().0, lhs.valence().1, lhs.dim(), lhs.point());
    for t in rhs {
        total = total.add(t)?;
    }
    let mut scales: Vec<f64> = rhs.iter().map(|t| frame.norm(t)).collect();
    scales.push(frame.norm(lhs));
    Ok(relative(frame.norm(&lhs.sub(&total)?), &scales))
}

/// Residuals of the chain of identities satisfied by an lcK metric that is
/// Einstein with constant `lambda`.
pub fn einstein_chain_residuals(h: &HermitianStructure, p: &[f64], lambda: f64) -> Result<ResidualMap> {
    let chart = h.chart();
    let (g, j) = compatible_j(h, p)?;
    let frame = Frame::new(&g, p)?;
    let (ric, _) = ricci_scalar(chart, p)?;
    let ric = ric.as_matrix()?;
    let einstein = relative(frame.bilinear_norm(&(&ric - &g * lambda)), &[frame.bilinear_norm(&ric)]);
    if einstein > chart.settings().tol.chain {
        return Err(GeomError::Precondition(format!(
            "metric is not Einstein with constant {lambda} at {p:?} (defect {einstein:.3e})"
        )));
    }
    let f = LeeFields { h };
    let n = h.n() as f64;
    let m = g.nrows();
    let theta = f.theta(p)?;
    let jtheta = act_on_form(&j, &theta);
    let sq = f.norm_sq(p)?;
    let s = f.s(p)?;
    let ssharp = &frame.g_inv * &s;
    let dsq = gradient(chart, &|q: &[f64]| f.norm_sq(q), p)?;
    let delta_theta = f.delta_theta(p)?;
    let d_delta = gradient(chart, &|q: &[f64]| f.delta_theta(q), p)?;
    let mut out = ResidualMap::new();

    let s_theta = &s * frame.sharp(&theta);
    let nt = nabla_theta(h, p)?;
    let along_theta = nt.transpose() * frame.sharp(&theta);
    out.insert(
        "Sth".into(),
        compare_vec(&frame, &s_theta, &[&dsq * 0.5, &theta * sq], true)
            .max(compare_vec(&frame, &along_theta, &[&dsq * 0.5], true)),
    );

    let tr_s = frame.g_inv.component_mul(&s).sum();
    out.insert("trS".into(), relative((tr_s - sq + delta_theta).abs(), &[tr_s.abs(), sq, delta_theta.abs()]));

    let jtheta_field = |q: &[f64]| Ok(FrameTensor::covector(&f.jtheta(q)?, q));
    let njt = nabla(chart, &jtheta_field, p)?.as_matrix()?;
    let rhs_a = (&g * &j * &ssharp).transpose();
    let rhs_b = -(&jtheta * theta.transpose());
    let rhs_c = -(&g * &j).transpose() * sq;
    out.insert(
        "eq_nablaJth".into(),
        compare_tensor(
            &frame,
            &FrameTensor::bilinear(&njt, p),
            &[FrameTensor::bilinear(&rhs_a, p), FrameTensor::bilinear(&rhs_b, p), FrameTensor::bilinear(&rhs_c, p)],
        )?,
    );

    let js_form = |q: &[f64]| -> Result<DMatrix<f64>> {
        let gq = chart.metric_checked(q)?;
        let ginv = crate::tensor::inverse(&gq, q)?;
        Ok((h.j(q) * ginv * f.s(q)?).transpose() * gq)
    };
    let d_jtheta = exterior_derivative(chart, &jtheta_field, p)?;
    let omega = fundamental_matrix(h, p)?;
    out.insert(
        "diffJth".into(),
        compare_tensor(
            &frame,
            &d_jtheta,
            &[
                FrameTensor::bilinear(&(js_form(p)? * 2.0), p),
                FrameTensor::bilinear(&wedge_1forms(&theta, &jtheta), p),
                FrameTensor::bilinear(&(&omega * (-2.0 * sq)), p),
            ],
        )?,
    );

    let theta_sharp = |q: &[f64]| -> Result<DVector<f64>> {
        let ginv = crate::tensor::inverse(&chart.metric_checked(q)?, q)?;
        Ok(ginv * f.theta(q)?)
    };
    let jtheta_sharp = |q: &[f64]| -> Result<DVector<f64>> {
        let ginv = crate::tensor::inverse(&chart.metric_checked(q)?, q)?;
        Ok(ginv * f.jtheta(q)?)
    };
    let bracket = lie_bracket(chart, &theta_sharp, &jtheta_sharp, p)?;
    out.insert("lieJth".into(), compare_vec(&frame, &bracket, &[frame.sharp(&jtheta) * -sq], false));

    let tjt = |q: &[f64]| Ok(FrameTensor::bilinear(&wedge_1forms(&f.theta(q)?, &f.jtheta(q)?), q));
    let delta_tjt = codifferential(chart, &tjt, p)?.as_vector()?;
    out.insert(
        "codiffth".into(),
        compare_vec(&frame, &delta_tjt, &[&jtheta * delta_theta, &jtheta * sq], true),
    );

    let sq_omega = |q: &[f64]| Ok(fundamental_form(h, q)?.scaled(f.norm_sq(q)?));
    let delta_sq_omega = codifferential(chart, &sq_omega, p)?.as_vector()?;
    out.insert(
        "codiffom".into(),
        compare_vec(
            &frame,
            &delta_sq_omega,
            &[-act_on_form(&j, &dsq), &jtheta * ((2.0 - 2.0 * n) * sq)],
            true,
        ),
    );

    let js_field = |q: &[f64]| Ok(FrameTensor::bilinear(&js_form(q)?, q));
    let delta_js = codifferential(chart, &js_field, p)?.as_vector()?;
    let j_delta_js = act_on_form(&j, &delta_js);
    out.insert(
        "eqJdel".into(),
        compare_vec(
            &frame,
            &j_delta_js,
            &[&theta * delta_theta, &dsq * 0.5, &theta * (2.0 * (n - 1.0) * sq), &theta * -lambda],
            true,
        ),
    );

    let s_field = |q: &[f64]| Ok(FrameTensor::bilinear(&f.s(q)?, q));
    let delta_s = codifferential(chart, &s_field, p)?.as_vector()?;
    out.insert(
        "eqJdel2".into(),
        compare_vec(
            &frame,
            &delta_s,
            &[&theta * delta_theta, &dsq * -0.5, &theta * -lambda, d_delta.clone()],
            true,
        ),
    );

    out.insert(
        "eqJdel3".into(),
        compare_vec(&frame, &(&j_delta_js + &delta_s), &[&theta * -delta_theta, -&dsq, &theta * -sq], true),
    );

    let summ = [
        &theta * (3.0 * delta_theta),
        &theta * (-2.0 * lambda),
        d_delta.clone(),
        dsq.clone(),
        &theta * ((2.0 * n - 1.0) * sq),
    ];
    out.insert("summ".into(), compare_vec(&frame, &DVector::zeros(m), &summ, true));

    let f_scalar = |q: &[f64]| Ok(f.delta_theta(q)? + f.norm_sq(q)?);
    let df = gradient(chart, &f_scalar, p)?;
    let fp = delta_theta + sq;
    out.insert(
        "eqf".into(),
        compare_vec(&frame, &df, &[&theta * (2.0 * lambda - 3.0 * fp + (4.0 - 2.0 * n) * sq)], true),
    );
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParallelFieldReport {
    pub residuals: ResidualMap,
    /// `θ(V)`.
    pub a: f64,
    /// `θ(JV)`.
    pub b: f64,
}

/// Checks the consequences of a parallel vector field `V` on an lcK manifold.
pub fn parallel_field_residuals(h: &HermitianStructure, p: &[f64], v: &VectorField) -> Result<ParallelFieldReport> {
    let chart = h.chart();
    let (g, j) = compatible_j(h, p)?;
    let frame = Frame::new(&g, p)?;
    let vfield = |q: &[f64]| Ok(FrameTensor::vector(&v(q)?, q));
    let nv = nabla(chart, &vfield, p)?.as_matrix()?;
    let vp = v(p)?;
    let parallel = relative(frame.endomorphism_norm(&nv), &[frame.vector_norm(&vp)]);
    if parallel > chart.settings().tol.id {
        return Err(GeomError::Precondition(format!(
            "vector field is not parallel at {p:?} (defect {parallel:.3e})"
        )));
    }
    let theta = lee_covector(h, p)?;
    let jv = &j * &vp;
    let a = theta.dot(&vp);
    let b = theta.dot(&jv);
    let mut out = ResidualMap::new();

    let jv_field = |q: &[f64]| Ok(FrameTensor::vector(&(h.j(q) * v(q)?), q));
    // column a holds ∇_{e_a}(JV)
    let lhs = nabla(chart, &jv_field, p)?.as_matrix()?;
    let gv = &g * &vp;
    let gjv = &g * &jv;
    let terms = [
        (&jv * a - &vp * b) * gv.transpose(),
        DMatrix::identity(g.nrows(), g.nrows()) * b,
        -(&vp * a + &jv * b) * gjv.transpose(),
        -&j * a,
    ];
    let rhs = terms.iter().fold(DMatrix::zeros(g.nrows(), g.nrows()), |acc, t| acc + t);
    let mut scales: Vec<f64> = terms.iter().map(|t| frame.endomorphism_norm(t)).collect();
    scales.push(frame.endomorphism_norm(&lhs));
    out.insert("nablaJV".into(), relative(frame.endomorphism_norm(&(&lhs - &rhs)), &scales));

    let jv_flat = |q: &[f64]| {
        let gq = chart.metric_checked(q)?;
        Ok(FrameTensor::covector(&(gq * h.j(q) * v(q)?), q))
    };
    let d_jv = exterior_derivative(chart, &jv_flat, p)?;
    let omega = fundamental_matrix(h, p)?;
    let rhs_form = (wedge_1forms(&gv, &gjv) - &omega) * (2.0 * a);
    out.insert(
        "dJV".into(),
        compare_tensor(&frame, &d_jv, &[FrameTensor::bilinear(&rhs_form, p)])?,
    );

    let a_field = |q: &[f64]| Ok(lee_covector(h, q)?.dot(&v(q)?));
    let da = gradient(chart, &a_field, p)?;
    let scale = frame.covector_norm(&theta) * frame.vector_norm(&vp);
    out.insert("da".into(), relative(frame.covector_norm(&da), &[scale]));
    out.insert("ab".into(), relative((a * b).abs(), &[scale * scale]));
    Ok(ParallelFieldReport { residuals: out, a, b })
}
