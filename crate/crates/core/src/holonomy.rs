use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{curvature_endomorphism, riemann};
use crate::chart::Chart;
use crate::error::{GeomError, Result};
use crate::ode::{holonomy_matrix, transport_along, Loop, Path};
use crate::tensor::Frame;

/// Relative singular-value cut for numerical rank decisions.
pub const RANK_CUT: f64 = 1e-6;
/// Below this rank gap a rank decision is reported as inconclusive.
pub const MIN_RANK_GAP: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HolonomyClass {
    /// `so(2n)`
    Generic,
    /// `so(2n−1)` fixing a vector
    OddOrthogonal,
    /// `u(n)`
    Unitary,
    Reducible,
    Inconclusive,
}

impl HolonomyClass {
    pub fn label(&self, n: usize) -> String {
        match self {
            HolonomyClass::Generic => format!("SO({})", 2 * n),
            HolonomyClass::OddOrthogonal => format!("SO({})", 2 * n - 1),
            HolonomyClass::Unitary => format!("U({n})"),
            HolonomyClass::Reducible => "reducible/other".into(),
            HolonomyClass::Inconclusive => "inconclusive".into(),
        }
    }

    pub fn is_decided(&self) -> bool {
        *self != HolonomyClass::Inconclusive
    }
}

impl fmt::Display for HolonomyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            HolonomyClass::Generic => "SO(2n)",
            HolonomyClass::OddOrthogonal => "SO(2n-1)",
            HolonomyClass::Unitary => "U(n)",
            HolonomyClass::Reducible => "reducible/other",
            HolonomyClass::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// A curvature probe: the plane spanned by `x, y` at `point`.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub point: Vec<f64>,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

/// Restricted holonomy algebra estimate at a base point.
///
/// `generators` are coordinate endomorphisms, skew with respect to the
/// metric at `base`. `classification` is [`HolonomyClass::Inconclusive`]
/// until [`classify_holonomy`] has run.
#[derive(Clone, Debug)]
pub struct HolonomyEstimate {
    pub base: Vec<f64>,
    pub algebra_dim: usize,
    pub generators: Vec<DMatrix<f64>>,
    pub classification: HolonomyClass,
    pub rank_gap: f64,
    pub singular_values: Vec<f64>,
    frame: Frame,
    tol: f64,
}

impl HolonomyEstimate {
    pub fn is_confident(&self) -> bool {
        self.rank_gap >= MIN_RANK_GAP
    }

    /// Largest `|GᵀM + MG|` over the generators, relative to `|G|`.
    pub fn skewness_defect(&self) -> f64 {
        self.generators
            .iter()
            .map(|a| {
                let b = a.transpose() * &self.frame.g + &self.frame.g * a;
                b.norm() / (self.frame.g.norm() * a.norm()).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }

    /// Common kernel of all generators, as coordinate vectors.
    pub fn fixed_vectors(&self) -> Vec<DVector<f64>> {
        let m = self.frame.dim();
        if self.generators.is_empty() {
            return (0..m).map(|i| self.frame.e.column(i).into_owned()).collect();
        }
        let stacked = DMatrix::from_fn(m * self.generators.len(), m, |r, c| {
            let g = &self.generators[r / m];
            let a = &self.frame.e_inv * g * &self.frame.e;
            a[(r % m, c)] / a.norm()
        });
        let svd = stacked.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let top = svd.singular_values.max().max(f64::MIN_POSITIVE);
        (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] <= self.tol * top)
            .map(|i| &self.frame.e * vt.row(i).transpose())
            .collect()
    }

    /// Largest `|[G, J]|/(|G||J|)` over the generators.
    pub fn commutator_defect(&self, j: &DMatrix<f64>) -> f64 {
        self.generators
            .iter()
            .map(|a| (a * j - j * a).norm() / (a.norm() * j.norm()).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }
}

fn skew_to_vec(a: &DMatrix<f64>) -> Vec<f64> {
    let m = a.nrows();
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            out.push(0.5 * (a[(i, j)] - a[(j, i)]));
        }
    }
    out
}

fn vec_to_skew(v: &[f64], m: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m, m);
    let mut k = 0;
    for i in 0..m {
        for j in i + 1..m {
            a[(i, j)] = v[k];
            a[(j, i)] = -v[k];
            k += 1;
        }
    }
    a
}

struct Span {
    basis: Vec<DMatrix<f64>>,
    singular_values: Vec<f64>,
    gap: f64,
}

/// Numerical span of skew matrices given in an orthonormal frame.
fn span(mats: &[DMatrix<f64>], m: usize, floor: f64) -> Span {
    let width = m * (m - 1) / 2;
    if mats.is_empty() || width == 0 {
        return Span { basis: vec![], singular_values: vec![], gap: f64::INFINITY };
    }
    let rows: Vec<Vec<f64>> = mats.iter().map(skew_to_vec).collect();
    let a = DMatrix::from_fn(rows.len().max(width), width, |r, c| rows.get(r).map_or(0.0, |row| row[c]));
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let top = sv[0];
    let cut = (RANK_CUT * top).max(floor);
    let rank = sv.iter().take_while(|&&s| s > cut).count();
    let gap = if rank == 0 {
        if top == 0.0 { f64::INFINITY } else { cut / top }
    } else if rank == sv.len() {
        f64::INFINITY
    } else {
        sv[rank - 1] / sv[rank].max(f64::MIN_POSITIVE)
    };
    let basis = order[..rank]
        .iter()
        .map(|&i| vec_to_skew(vt.row(i).transpose().as_slice(), m))
        .collect();
    Span { basis, singular_values: sv, gap }
}

/// Span plus two commutator closure passes; the rank gap is the worst
/// over all three decisions.
fn closed_span(mats: &[DMatrix<f64>], m: usize, floor: f64) -> Span {
    let mut s = span(mats, m, floor);
    let mut worst = s.gap;
    for _ in 0..2 {
        let mut all = s.basis.clone();
        for i in 0..s.basis.len() {
            for j in i + 1..s.basis.len() {
                all.push(&s.basis[i] * &s.basis[j] - &s.basis[j] * &s.basis[i]);
            }
        }
        // the basis is orthonormal, so the absolute floor is the relative cut
        s = span(&all, m, RANK_CUT);
        worst = worst.min(s.gap);
    }
    s.gap = worst;
    s
}

fn estimate(chart: &Chart, base: &[f64], frame: Frame, on_frame: Vec<DMatrix<f64>>, floor: f64) -> HolonomyEstimate {
    let m = chart.dim();
    let s = closed_span(&on_frame, m, floor);
    let generators = s.basis.iter().map(|a| &frame.e * a * &frame.e_inv).collect();
    HolonomyEstimate {
        base: base.to_vec(),
        algebra_dim: s.basis.len(),
        generators,
        classification: HolonomyClass::Inconclusive,
        rank_gap: s.gap,
        singular_values: s.singular_values,
        frame,
        tol: chart.settings().tol.id,
    }
}

/// Probes on every coordinate plane at `points` interior sample points.
pub fn coordinate_probes(chart: &Chart, points: usize, seed: u64) -> Vec<Probe> {
    let m = chart.dim();
    let mut out = Vec::new();
    for p in chart.sample_points(points, seed) {
        for i in 0..m {
            for j in i + 1..m {
                let mut x = DVector::zeros(m);
                let mut y = DVector::zeros(m);
                x[i] = 1.0;
                y[j] = 1.0;
                out.push(Probe { point: p.clone(), x, y });
            }
        }
    }
    out
}

fn transport_steps(chart: &Chart, a: &[f64], b: &[f64]) -> usize {
    let len: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    ((len * chart.settings().ode_steps_per_unit as f64 / 10.0).ceil() as usize).max(20)
}

/// Curvature endomorphisms `R(X, Y)` at the probes, transported to `base`
/// along straight segments, with their span closed under commutators.
pub fn curvature_span(chart: &Chart, base: &[f64], probes: &[Probe]) -> Result<HolonomyEstimate> {
    let m = chart.dim();
    let needed = 3 * m * (m - 1) / 2;
    if probes.len() < needed {
        return Err(GeomError::Precondition(format!("curvature_span needs at least {needed} probes, got {}", probes.len())));
    }
    let frame = Frame::new(&chart.metric_checked(base)?, base)?;
    let margin = chart.settings().sampling_margin();
    let mut mats = Vec::with_capacity(probes.len());
    let mut cache: Option<(Vec<f64>, DMatrix<f64>, crate::tensor::FrameTensor)> = None;
    for probe in probes {
        chart.check_point(&probe.point, margin)?;
        let fresh = !matches!(&cache, Some((p, _, _)) if *p == probe.point);
        if fresh {
            let path = Path::line(DVector::from_column_slice(base), DVector::from_column_slice(&probe.point));
            let t = transport_along(chart, &path, &DMatrix::identity(m, m), transport_steps(chart, base, &probe.point))?;
            cache = Some((probe.point.clone(), t, riemann(chart, &probe.point)?));
        }
        let (_, t, r) = cache.as_ref().expect("filled above");
        let t_inv = t.clone().try_inverse().ok_or_else(|| GeomError::Integration { at: 1.0, reason: "singular transport".into() })?;
        let at_base = &t_inv * curvature_endomorphism(r, &probe.x, &probe.y) * t;
        mats.push(&frame.e_inv * at_base * &frame.e);
    }
    let floor = 0.1 * chart.settings().tol.id;
    Ok(estimate(chart, base, frame, mats, floor))
}

/// `log(P)` by its power series around the identity.
pub fn matrix_log(p: &DMatrix<f64>, label: &str) -> Result<DMatrix<f64>> {
    let m = p.nrows();
    let x = p - DMatrix::identity(m, m);
    let distance = x.clone().svd(false, false).singular_values.max();
    if distance > 0.5 {
        return Err(GeomError::LoopTooLarge { label: label.into(), distance });
    }
    let mut term = x.clone();
    let mut sum = x.clone();
    for k in 2..200 {
        term = &term * &x;
        let add = &term * (if k % 2 == 0 { -1.0 } else { 1.0 } / k as f64);
        sum += &add;
        if add.amax() < 1e-17 * (1.0 + sum.amax()) {
            break;
        }
    }
    Ok(sum)
}

/// Lassos from `base` to sample points with small squares on every
/// coordinate plane.
pub fn lasso_loops(chart: &Chart, base: &[f64], points: usize, side: f64, seed: u64) -> Result<Vec<Loop>> {
    let m = chart.dim();
    let dom = chart.domain();
    let margin = chart.settings().sampling_margin() + side;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_v = DVector::from_column_slice(base);
    let mut out = Vec::new();
    for k in 0..points {
        let probe: Vec<f64> = (0..m)
            .map(|i| {
                let (lo, hi) = (dom.lo()[i] + margin, dom.hi()[i] - margin);
                // stay near the base so the stick of the lasso is short
                let c = base[i].clamp(lo, hi);
                (c + rng.random_range(-0.35..0.35) * (hi - lo)).clamp(lo, hi - side)
            })
            .collect();
        let probe = DVector::from_vec(probe);
        for i in 0..m {
            for j in i + 1..m {
                let steps = 40 + transport_steps(chart, base, probe.as_slice()) * 2;
                out.push(Loop::lasso(format!("lasso{k}-{i}{j}"), base_v.clone(), probe.clone(), i, j, side, steps)?);
            }
        }
    }
    Ok(out)
}

/// Logarithms of loop transports at `base`, with their span closed under
/// commutators.
pub fn loop_holonomy(chart: &Chart, loops: &[Loop], base: &[f64]) -> Result<HolonomyEstimate> {
    let frame = Frame::new(&chart.metric_checked(base)?, base)?;
    let mut mats = Vec::with_capacity(loops.len());
    for lp in loops {
        if lp.shift().is_some() || lp.start().as_slice() != base {
            return Err(GeomError::Precondition(format!("loop `{}` is not a closed loop at the base point", lp.label())));
        }
        let p = holonomy_matrix(chart, lp)?;
        let p_on = &frame.e_inv * p * &frame.e;
        let log = matrix_log(&p_on, lp.label())?;
        mats.push((&log - log.transpose()) * 0.5);
    }
    let floor = 1e-2 * chart.settings().tol.ode;
    Ok(estimate(chart, base, frame, mats, floor))
}

/// Matches the algebra dimension against `so(2n)`, `so(2n−1)` and `u(n)`.
pub fn classify_holonomy(est: &HolonomyEstimate, n: usize, j_candidates: &[DMatrix<f64>]) -> HolonomyClass {
    if !est.is_confident() {
        return HolonomyClass::Inconclusive;
    }
    let d = est.algebra_dim;
    if d == 0 {
        return HolonomyClass::Reducible;
    }
    if d == n * (2 * n - 1) {
        return HolonomyClass::Generic;
    }
    if d == (2 * n - 1) * (n - 1) && !est.fixed_vectors().is_empty() {
        return HolonomyClass::OddOrthogonal;
    }
    if d == n * n && j_candidates.iter().any(|j| est.commutator_defect(j) <= est.tol) {
        return HolonomyClass::Unitary;
    }
    HolonomyClass::Reducible
}

/// Runs [`classify_holonomy`] and stores the result in the estimate.
pub fn classified(mut est: HolonomyEstimate, n: usize, j_candidates: &[DMatrix<f64>]) -> HolonomyEstimate {
    est.classification = classify_holonomy(&est, n, j_candidates);
    est
}
