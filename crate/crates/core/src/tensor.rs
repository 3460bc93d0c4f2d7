use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};

/// Components of a tensor at a point, in the coordinate frame.
///
/// Storage is row-major with all contravariant indices first, followed by
/// the covariant ones. A Christoffel symbol `Γ^k_ij` is therefore stored at
/// `[k, i, j]` and the Riemann tensor `R^l_ijk` at `[l, i, j, k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameTensor {
    covariant: usize,
    contravariant: usize,
    dim: usize,
    components: Vec<f64>,
    point: Vec<f64>,
}

impl FrameTensor {
    pub fn new(
        covariant: usize,
        contravariant: usize,
        dim: usize,
        components: Vec<f64>,
        point: &[f64],
    ) -> Result<Self> {
        let expected = dim.pow((covariant + contravariant) as u32);
        if components.len() != expected {
            return Err(GeomError::Shape(format!(
                "valence ({covariant},{contravariant}) in dimension {dim} needs {expected} components, got {}",
                components.len()
            )));
        }
        Ok(FrameTensor { covariant, contravariant, dim, components, point: point.to_vec() })
    }

    pub fn zeros(covariant: usize, contravariant: usize, dim: usize, point: &[f64]) -> Self {
        let len = dim.pow((covariant + contravariant) as u32);
        FrameTensor { covariant, contravariant, dim, components: vec![0.0; len], point: point.to_vec() }
    }

    pub fn scalar(value: f64, dim: usize, point: &[f64]) -> Self {
        FrameTensor { covariant: 0, contravariant: 0, dim, components: vec![value], point: point.to_vec() }
    }

    pub fn vector(v: &DVector<f64>, point: &[f64]) -> Self {
        FrameTensor { covariant: 0, contravariant: 1, dim: v.len(), components: v.as_slice().to_vec(), point: point.to_vec() }
    }

    pub fn covector(a: &DVector<f64>, point: &[f64]) -> Self {
        FrameTensor { covariant: 1, contravariant: 0, dim: a.len(), components: a.as_slice().to_vec(), point: point.to_vec() }
    }

    /// A (1,1) tensor whose `[i, j]` entry is `a[(i, j)]`, i.e. the matrix acting on column vectors.
    pub fn endomorphism(a: &DMatrix<f64>, point: &[f64]) -> Self {
        Self::from_matrix(a, 1, 1, point)
    }

    pub fn bilinear(b: &DMatrix<f64>, point: &[f64]) -> Self {
        Self::from_matrix(b, 2, 0, point)
    }

    fn from_matrix(a: &DMatrix<f64>, covariant: usize, contravariant: usize, point: &[f64]) -> Self {
        let m = a.nrows();
        let mut components = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                components.push(a[(i, j)]);
            }
        }
        FrameTensor { covariant, contravariant, dim: m, components, point: point.to_vec() }
    }

    pub fn valence(&self) -> (usize, usize) {
        (self.covariant, self.contravariant)
    }

    pub fn rank(&self) -> usize {
        self.covariant + self.contravariant
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [f64] {
        &mut self.components
    }

    pub fn into_components(self) -> Vec<f64> {
        self.components
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.components[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let k = self.offset(idx);
        self.components[k] = value;
    }

    pub fn as_scalar(&self) -> Result<f64> {
        if self.rank() != 0 {
            return Err(GeomError::Shape(format!("expected a scalar, got rank {}", self.rank())));
        }
        Ok(self.components[0])
    }

    pub fn as_vector(&self) -> Result<DVector<f64>> {
        if self.rank() != 1 {
            return Err(GeomError::Shape(format!("expected rank 1, got rank {}", self.rank())));
        }
        Ok(DVector::from_column_slice(&self.components))
    }

    /// Rank-2 tensors as a matrix whose rows follow the first stored index.
    pub fn as_matrix(&self) -> Result<DMatrix<f64>> {
        if self.rank() != 2 {
            return Err(GeomError::Shape(format!("expected rank 2, got rank {}", self.rank())));
        }
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &self.components))
    }

    fn check_same_shape(&self, other: &FrameTensor) -> Result<()> {
        if self.valence() != other.valence() || self.dim != other.dim {
            return Err(GeomError::Shape(format!(
                "cannot combine valence {:?} (dim {}) with valence {:?} (dim {})",
                self.valence(),
                self.dim,
                other.valence(),
                other.dim
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &FrameTensor) -> Result<FrameTensor> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.components.iter_mut().zip(&other.components) {
            *a += b;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &FrameTensor) -> Result<FrameTensor> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.components.iter_mut().zip(&other.components) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> FrameTensor {
        let mut out = self.clone();
        out.components.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Norm taken in a `g`-orthonormal frame.
    pub fn norm(&self, g: &DMatrix<f64>) -> Result<f64> {
        let frame = Frame::new(g, &self.point)?;
        Ok(frame.norm(self))
    }

    /// Lowers the last contravariant index; it becomes the first covariant one.
    pub fn lower_index(&self, g: &DMatrix<f64>) -> Result<FrameTensor> {
        if self.contravariant == 0 {
            return Err(GeomError::Shape("no contravariant index to lower".into()));
        }
        let mut out = self.clone();
        apply_to_slot(&mut out.components, self.dim, self.rank(), self.contravariant - 1, g);
        out.contravariant -= 1;
        out.covariant += 1;
        Ok(out)
    }

    /// Raises the first covariant index; it becomes the last contravariant one.
    pub fn raise_index(&self, g: &DMatrix<f64>) -> Result<FrameTensor> {
        if self.covariant == 0 {
            return Err(GeomError::Shape("no covariant index to raise".into()));
        }
        let ginv = inverse(g, &self.point)?;
        let mut out = self.clone();
        apply_to_slot(&mut out.components, self.dim, self.rank(), self.contravariant, &ginv);
        out.contravariant += 1;
        out.covariant -= 1;
        Ok(out)
    }

    /// Inserts `x` into the covariant slot `slot` (counted among covariant indices).
    pub fn contract_covariant(&self, slot: usize, x: &DVector<f64>) -> Result<FrameTensor> {
        if slot >= self.covariant || x.len() != self.dim {
            return Err(GeomError::Shape("bad covariant contraction".into()));
        }
        let pos = self.contravariant + slot;
        let rank = self.rank();
        let m = self.dim;
        let stride = m.pow((rank - 1 - pos) as u32);
        let outer = m.pow(pos as u32);
        let mut components = vec![0.0; outer * stride];
        for o in 0..outer {
            for k in 0..m {
                let xk = x[k];
                if xk == 0.0 {
                    continue;
                }
                let base = (o * m + k) * stride;
                for s in 0..stride {
                    components[o * stride + s] += xk * self.components[base + s];
                }
            }
        }
        Ok(FrameTensor {
            covariant: self.covariant - 1,
            contravariant: self.contravariant,
            dim: m,
            components,
            point: self.point.clone(),
        })
    }

    /// Largest violation of total antisymmetry over the covariant indices.
    pub fn antisymmetry_defect(&self) -> f64 {
        if self.contravariant != 0 || self.covariant < 2 {
            return 0.0;
        }
        let k = self.covariant;
        let mut worst = 0.0_f64;
        for flat in 0..self.components.len() {
            let idx = unflatten(flat, self.dim, k);
            for a in 0..k {
                for b in (a + 1)..k {
                    let mut swapped = idx.clone();
                    swapped.swap(a, b);
                    let d = self.components[flat] + self.get(&swapped);
                    worst = worst.max(d.abs());
                }
            }
        }
        worst
    }
}

pub(crate) fn unflatten(mut flat: usize, m: usize, rank: usize) -> Vec<usize> {
    let mut idx = vec![0; rank];
    for slot in (0..rank).rev() {
        idx[slot] = flat % m;
        flat /= m;
    }
    idx
}

/// `new[.., i, ..] = Σ_j a[i, j] old[.., j, ..]` on the given slot.
pub(crate) fn apply_to_slot(data: &mut [f64], m: usize, rank: usize, slot: usize, a: &DMatrix<f64>) {
    let stride = m.pow((rank - 1 - slot) as u32);
    let outer = m.pow(slot as u32);
    let mut column = vec![0.0; m];
    for o in 0..outer {
        for s in 0..stride {
            for (j, c) in column.iter_mut().enumerate() {
                *c = data[(o * m + j) * stride + s];
            }
            for i in 0..m {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += a[(i, j)] * column[j];
                }
                data[(o * m + i) * stride + s] = acc;
            }
        }
    }
}

pub(crate) fn inverse(g: &DMatrix<f64>, point: &[f64]) -> Result<DMatrix<f64>> {
    g.clone().try_inverse().ok_or_else(|| GeomError::Metric { point: point.to_vec() })
}

/// A `g`-orthonormal frame obtained from the Cholesky factor `g = L Lᵀ`;
/// its vectors are the columns of `E = L^{-T}`.
#[derive(Clone, Debug)]
pub struct Frame {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub e_inv: DMatrix<f64>,
}

impl Frame {
    pub fn new(g: &DMatrix<f64>, point: &[f64]) -> Result<Frame> {
        let chol = g.clone().cholesky().ok_or_else(|| GeomError::Metric { point: point.to_vec() })?;
        let l = chol.l();
        let e_inv = l.transpose();
        let e = e_inv.clone().try_inverse().ok_or_else(|| GeomError::Metric { point: point.to_vec() })?;
        let g_inv = &e * e.transpose();
        Ok(Frame { g: g.clone(), g_inv, e, e_inv })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn vector_norm(&self, v: &DVector<f64>) -> f64 {
        (&self.e_inv * v).norm()
    }

    pub fn covector_norm(&self, a: &DVector<f64>) -> f64 {
        (self.e.transpose() * a).norm()
    }

    pub fn endomorphism_norm(&self, a: &DMatrix<f64>) -> f64 {
        (&self.e_inv * a * &self.e).norm()
    }

    pub fn bilinear_norm(&self, b: &DMatrix<f64>) -> f64 {
        (self.e.transpose() * b * &self.e).norm()
    }

    pub fn flat(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.g * v
    }

    pub fn sharp(&self, a: &DVector<f64>) -> DVector<f64> {
        &self.g_inv * a
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.g * v))
    }

    pub fn norm(&self, t: &FrameTensor) -> f64 {
        let (cov, contra) = t.valence();
        let rank = cov + contra;
        if rank == 0 {
            return t.components[0].abs();
        }
        let m = t.dim;
        let mut data = t.components.clone();
        let et = self.e.transpose();
        for slot in 0..rank {
            let a = if slot < contra { &self.e_inv } else { &et };
            apply_to_slot(&mut data, m, rank, slot, a);
        }
        data.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// The endomorphism `X ∧ τ : Y ↦ g(X,Y) τ♯ − τ(Y) X`.
    pub fn wedge_endomorphism(&self, x: &DVector<f64>, tau: &DVector<f64>) -> DMatrix<f64> {
        self.sharp(tau) * self.flat(x).transpose() - x * tau.transpose()
    }

    /// The 2-form `B(X, Y) = g(A X, Y)` attached to an endomorphism.
    pub fn endomorphism_to_form(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        a.transpose() * &self.g
    }

    pub fn form_to_endomorphism(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        (b * &self.g_inv).transpose()
    }
}

/// `α ∧ β` for two 1-forms, with `(α∧β)(X,Y) = α(X)β(Y) − α(Y)β(X)`.
pub fn wedge_1forms(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    a * b.transpose() - b * a.transpose()
}

/// Action of an endomorphism on 1-forms: `(Jτ)(X) = −τ(JX)`.
pub fn act_on_form(j: &DMatrix<f64>, tau: &DVector<f64>) -> DVector<f64> {
    -(j.transpose() * tau)
}

/// All permutations of `0..k` with their signs.
pub(crate) fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..k).collect(), &mut out);
    out.into_iter()
        .map(|p| {
            let mut sign = 1.0;
            for i in 0..k {
                for j in (i + 1)..k {
                    if p[i] > p[j] {
                        sign = -sign;
                    }
                }
            }
            (p, sign)
        })
        .collect()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Wedge product of a p-form and a q-form (determinant convention).
pub fn wedge(a: &FrameTensor, b: &FrameTensor) -> Result<FrameTensor> {
    if a.contravariant != 0 || b.contravariant != 0 || a.dim != b.dim {
        return Err(GeomError::Shape("wedge needs two forms of equal dimension".into()));
    }
    let (p, q) = (a.covariant, b.covariant);
    let k = p + q;
    let m = a.dim;
    let perms = permutations(k);
    let norm = factorial(p) * factorial(q);
    let mut out = FrameTensor::zeros(k, 0, m, &a.point);
    for flat in 0..out.components.len() {
        let idx = unflatten(flat, m, k);
        let mut acc = 0.0;
        for (perm, sign) in &perms {
            let ia: Vec<usize> = perm[..p].iter().map(|&s| idx[s]).collect();
            let ib: Vec<usize> = perm[p..].iter().map(|&s| idx[s]).collect();
            acc += sign * a.get(&ia) * b.get(&ib);
        }
        out.components[flat] = acc / norm;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(m: usize, seed: u64) -> DMatrix<f64> {
        let mut s = seed;
        let a = DMatrix::from_fn(m, m, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        });
        &a * a.transpose() + DMatrix::identity(m, m)
    }

    #[test]
    fn lower_then_raise_is_identity() {
        let g = spd(4, 3);
        let t = FrameTensor::new(1, 2, 4, (0..64).map(|i| (i as f64).sin()).collect(), &[0.0; 4]).unwrap();
        let back = t.lower_index(&g).unwrap().raise_index(&g).unwrap();
        assert_eq!(back.valence(), t.valence());
        for (a, b) in back.components().iter().zip(t.components()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn wedge_of_one_forms_matches_matrix_formula() {
        let a = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let b = DVector::from_vec(vec![0.5, 0.0, 3.0]);
        let w = wedge(&FrameTensor::covector(&a, &[0.0; 3]), &FrameTensor::covector(&b, &[0.0; 3])).unwrap();
        assert_eq!(w.as_matrix().unwrap(), wedge_1forms(&a, &b));
    }

    #[test]
    fn three_form_wedge_convention() {
        let th = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let om = wedge_1forms(&DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]), &DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]));
        let w = wedge(&FrameTensor::covector(&th, &[0.0; 4]), &FrameTensor::bilinear(&om, &[0.0; 4])).unwrap();
        assert_eq!(w.get(&[0, 1, 2]), 1.0);
        assert_eq!(w.get(&[1, 0, 2]), -1.0);
        assert_eq!(w.get(&[2, 0, 1]), 1.0);
        assert_eq!(w.antisymmetry_defect(), 0.0);
    }

    #[test]
    fn frame_is_orthonormal() {
        let g = spd(5, 11);
        let f = Frame::new(&g, &[0.0; 5]).unwrap();
        let id = f.e.transpose() * &g * &f.e;
        assert!((id - DMatrix::identity(5, 5)).norm() < 1e-12);
    }

    #[test]
    fn wedge_endomorphism_is_skew_and_matches_two_form() {
        let g = spd(4, 5);
        let f = Frame::new(&g, &[0.0; 4]).unwrap();
        let x = DVector::from_vec(vec![1.0, -0.3, 0.2, 0.7]);
        let tau = DVector::from_vec(vec![0.1, 0.4, -1.0, 0.5]);
        let a = f.wedge_endomorphism(&x, &tau);
        let form = f.endomorphism_to_form(&a);
        assert!((&form + form.transpose()).norm() < 1e-12);
        assert!((form - wedge_1forms(&f.flat(&x), &tau)).norm() < 1e-12);
    }

    #[test]
    fn shape_is_checked() {
        assert!(FrameTensor::new(1, 1, 3, vec![0.0; 8], &[0.0; 3]).is_err());
    }
}
