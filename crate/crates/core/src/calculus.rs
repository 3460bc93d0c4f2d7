use nalgebra::{DMatrix, DVector};

use crate::chart::Chart;
use crate::error::{GeomError, Result};
use crate::tensor::{inverse, unflatten, FrameTensor};

/// A tensor field evaluated on demand.
pub type Field<'a> = dyn Fn(&[f64]) -> Result<FrameTensor> + Sync + 'a;
pub type VectorField<'a> = dyn Fn(&[f64]) -> Result<DVector<f64>> + Sync + 'a;
pub type ScalarField<'a> = dyn Fn(&[f64]) -> Result<f64> + Sync + 'a;

/// Fourth-order central differences of a vector-valued function; entry
/// `[c][k]` approximates `∂_c f_k`.
pub fn stencil<F>(f: F, p: &[f64], h: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut q = p.to_vec();
    let mut out = Vec::with_capacity(p.len());
    for c in 0..p.len() {
        let mut at = |s: f64| -> Result<Vec<f64>> {
            q[c] = p[c] + s * h;
            let v = f(&q);
            q[c] = p[c];
            v
        };
        let p2 = at(2.0)?;
        let p1 = at(1.0)?;
        let m1 = at(-1.0)?;
        let m2 = at(-2.0)?;
        out.push(
            (0..p1.len())
                .map(|k| (-p2[k] + 8.0 * p1[k] - 8.0 * m1[k] + m2[k]) / (12.0 * h))
                .collect(),
        );
    }
    Ok(out)
}

fn guard(chart: &Chart, p: &[f64]) -> Result<()> {
    chart.check_point(p, 2.0 * chart.settings().fd_step)
}

/// `Γ^k_ij` stored at `[k, i, j]`.
pub fn christoffel_components(chart: &Chart, p: &[f64]) -> Result<Vec<f64>> {
    let g = chart.metric_checked(p)?;
    let ginv = inverse(&g, p)?;
    let dg = chart.metric_partials(p)?;
    let m = chart.dim();
    let mut out = vec![0.0; m * m * m];
    for i in 0..m {
        for j in i..m {
            for l in 0..m {
                let lower = 0.5 * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
                if lower == 0.0 {
                    continue;
                }
                for k in 0..m {
                    out[(k * m + i) * m + j] += ginv[(k, l)] * lower;
                }
            }
            if i != j {
                for k in 0..m {
                    out[(k * m + j) * m + i] = out[(k * m + i) * m + j];
                }
            }
        }
    }
    Ok(out)
}

pub fn christoffel(chart: &Chart, p: &[f64]) -> Result<FrameTensor> {
    FrameTensor::new(2, 1, chart.dim(), christoffel_components(chart, p)?, p)
}

/// `R^l_ijk` at `[l, i, j, k]`, with `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y]`.
pub fn riemann(chart: &Chart, p: &[f64]) -> Result<FrameTensor> {
    guard(chart, p)?;
    let m = chart.dim();
    let gam = christoffel_components(chart, p)?;
    let dgam = stencil(|q| christoffel_components(chart, q), p, chart.settings().nested_step)?;
    let at = |k: usize, i: usize, j: usize| (k * m + i) * m + j;
    let mut out = vec![0.0; m * m * m * m];
    for l in 0..m {
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let mut v = dgam[i][at(l, j, k)] - dgam[j][at(l, i, k)];
                    for s in 0..m {
                        v += gam[at(l, i, s)] * gam[at(s, j, k)] - gam[at(l, j, s)] * gam[at(s, i, k)];
                    }
                    out[((l * m + i) * m + j) * m + k] = v;
                }
            }
        }
    }
    FrameTensor::new(3, 1, m, out, p)
}

/// Ricci tensor `Ric_jk = R^i_ijk` and its metric trace.
pub fn ricci_scalar(chart: &Chart, p: &[f64]) -> Result<(FrameTensor, f64)> {
    let r = riemann(chart, p)?;
    let m = chart.dim();
    let mut ric = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            ric[(j, k)] = (0..m).map(|i| r.get(&[i, i, j, k])).sum();
        }
    }
    let ginv = inverse(&chart.metric_checked(p)?, p)?;
    let scalar = ginv.component_mul(&ric).sum();
    Ok((FrameTensor::bilinear(&ric, p), scalar))
}

/// The curvature endomorphism `R(X,Y)` as a matrix acting on column vectors.
pub fn curvature_endomorphism(r: &FrameTensor, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
    let m = r.dim();
    let mut out = DMatrix::zeros(m, m);
    let data = r.components();
    for l in 0..m {
        for i in 0..m {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                let base = ((l * m + i) * m + j) * m;
                for k in 0..m {
                    out[(l, k)] += w * data[base + k];
                }
            }
        }
    }
    out
}

/// Full covariant derivative; the derivative index is inserted as the first
/// covariant index.
pub fn nabla(chart: &Chart, field: &Field, p: &[f64]) -> Result<FrameTensor> {
    guard(chart, p)?;
    let t = field(p)?;
    let (cov, contra) = t.valence();
    let m = chart.dim();
    if t.dim() != m {
        return Err(GeomError::Shape(format!("field of dimension {} on a chart of dimension {m}", t.dim())));
    }
    let dt = stencil(|q| Ok(field(q)?.into_components()), p, chart.settings().nested_step)?;
    let gam = christoffel_components(chart, p)?;
    let rank = cov + contra;
    let mut out = FrameTensor::zeros(cov + 1, contra, m, p);
    let mut idx_t = vec![0usize; rank];
    for flat in 0..out.components().len() {
        let idx = unflatten(flat, m, rank + 1);
        let a = idx[contra];
        idx_t[..contra].copy_from_slice(&idx[..contra]);
        idx_t[contra..].copy_from_slice(&idx[contra + 1..]);
        let base = t.components();
        let offset = |ix: &[usize]| ix.iter().fold(0, |acc, &i| acc * m + i);
        let mut v = dt[a][offset(&idx_t)];
        for slot in 0..rank {
            let orig = idx_t[slot];
            for k in 0..m {
                let coef = if slot < contra {
                    gam[(orig * m + a) * m + k]
                } else {
                    -gam[(k * m + a) * m + orig]
                };
                if coef == 0.0 {
                    continue;
                }
                idx_t[slot] = k;
                v += coef * base[offset(&idx_t)];
            }
            idx_t[slot] = orig;
        }
        out.components_mut()[flat] = v;
    }
    Ok(out)
}

pub fn covariant_derivative(chart: &Chart, field: &Field, p: &[f64], x: &DVector<f64>) -> Result<FrameTensor> {
    nabla(chart, field, p)?.contract_covariant(0, x)
}

/// Covariant derivative of a vector field along `x`.
pub fn covariant_derivative_vector(chart: &Chart, field: &VectorField, p: &[f64], x: &DVector<f64>) -> Result<DVector<f64>> {
    let wrapped = |q: &[f64]| -> Result<FrameTensor> { Ok(FrameTensor::vector(&field(q)?, q)) };
    covariant_derivative(chart, &wrapped, p, x)?.as_vector()
}

pub fn exterior_derivative(chart: &Chart, field: &Field, p: &[f64]) -> Result<FrameTensor> {
    guard(chart, p)?;
    let w = field(p)?;
    let (k, contra) = w.valence();
    if contra != 0 {
        return Err(GeomError::Shape("exterior derivative needs a form".into()));
    }
    let m = chart.dim();
    let dw = stencil(|q| Ok(field(q)?.into_components()), p, chart.settings().nested_step)?;
    let mut out = FrameTensor::zeros(k + 1, 0, m, p);
    for flat in 0..out.components().len() {
        let idx = unflatten(flat, m, k + 1);
        let mut v = 0.0;
        for j in 0..=k {
            let rest: Vec<usize> = idx.iter().enumerate().filter(|(s, _)| *s != j).map(|(_, &i)| i).collect();
            let off = rest.iter().fold(0, |acc, &i| acc * m + i);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            v += sign * dw[idx[j]][off];
        }
        out.components_mut()[flat] = v;
    }
    Ok(out)
}

/// `δT = −Σ_i e_i ⌟ ∇_{e_i} T`, contracting the first slot of a covariant tensor.
pub fn codifferential(chart: &Chart, field: &Field, p: &[f64]) -> Result<FrameTensor> {
    let n = nabla(chart, field, p)?;
    let (cov, contra) = n.valence();
    if contra != 0 || cov < 2 {
        return Err(GeomError::Shape("codifferential needs a covariant tensor of rank >= 1".into()));
    }
    let m = chart.dim();
    let ginv = inverse(&chart.metric_checked(p)?, p)?;
    let rest = m.pow((cov - 2) as u32);
    let mut out = FrameTensor::zeros(cov - 2, 0, m, p);
    let data = n.components();
    for r in 0..rest {
        let mut v = 0.0;
        for a in 0..m {
            for b in 0..m {
                v -= ginv[(a, b)] * data[(a * m + b) * rest + r];
            }
        }
        out.components_mut()[r] = v;
    }
    Ok(out)
}

/// Components `∂_c f` of the differential of a scalar field.
pub fn gradient(chart: &Chart, f: &ScalarField, p: &[f64]) -> Result<DVector<f64>> {
    guard(chart, p)?;
    let d = stencil(|q| Ok(vec![f(q)?]), p, chart.settings().nested_step)?;
    Ok(DVector::from_iterator(p.len(), d.iter().map(|v| v[0])))
}

/// `[X, Y]^k = X^i ∂_i Y^k − Y^i ∂_i X^k`.
pub fn lie_bracket(chart: &Chart, x: &VectorField, y: &VectorField, p: &[f64]) -> Result<DVector<f64>> {
    guard(chart, p)?;
    let h = chart.settings().nested_step;
    let dx = stencil(|q| Ok(x(q)?.as_slice().to_vec()), p, h)?;
    let dy = stencil(|q| Ok(y(q)?.as_slice().to_vec()), p, h)?;
    let (xv, yv) = (x(p)?, y(p)?);
    let m = p.len();
    Ok(DVector::from_fn(m, |k, _| (0..m).map(|i| xv[i] * dy[i][k] - yv[i] * dx[i][k]).sum()))
}

/// `(L_ξ g)_ab = ξ^c ∂_c g_ab + g_cb ∂_a ξ^c + g_ac ∂_b ξ^c`.
pub fn lie_derivative_metric(chart: &Chart, xi: &VectorField, p: &[f64]) -> Result<DMatrix<f64>> {
    let g = chart.metric_checked(p)?;
    let dg = chart.metric_partials(p)?;
    let dxi = stencil(|q| Ok(xi(q)?.as_slice().to_vec()), p, chart.settings().nested_step)?;
    let v = xi(p)?;
    let m = p.len();
    // j[c][a] = ∂_a ξ^c
    let jac = DMatrix::from_fn(m, m, |c, a| dxi[a][c]);
    let mut out = &g * &jac + jac.transpose() * &g;
    for (c, d) in dg.iter().enumerate() {
        out += d * v[c];
    }
    Ok(out)
}
