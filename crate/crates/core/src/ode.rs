use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::calculus::{christoffel_components, Field};
use crate::chart::Chart;
use crate::error::{GeomError, Result};

#[derive(Clone, Debug, PartialEq)]
enum Segment {
    Line { a: DVector<f64>, b: DVector<f64> },
    /// `center + radius (cos φ e_i + sin φ e_j)`, `φ = phase + sweep·s`.
    Arc { center: DVector<f64>, i: usize, j: usize, radius: f64, phase: f64, sweep: f64 },
}

impl Segment {
    fn point(&self, s: f64) -> DVector<f64> {
        match self {
            Segment::Line { a, b } => {
                if s >= 1.0 {
                    b.clone()
                } else {
                    a + (b - a) * s
                }
            }
            Segment::Arc { center, i, j, radius, phase, sweep } => {
                let phi = phase + sweep * s;
                let mut p = center.clone();
                p[*i] += radius * phi.cos();
                p[*j] += radius * phi.sin();
                p
            }
        }
    }

    fn velocity(&self, s: f64) -> DVector<f64> {
        match self {
            Segment::Line { a, b } => b - a,
            Segment::Arc { center, i, j, radius, phase, sweep } => {
                let phi = phase + sweep * s;
                let mut v = DVector::zeros(center.len());
                v[*i] = -radius * sweep * phi.sin();
                v[*j] = radius * sweep * phi.cos();
                v
            }
        }
    }
}

/// A piecewise-smooth curve on `[0, 1]`; each segment takes an equal share
/// of the parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    segments: Vec<Segment>,
}

impl Path {
    pub fn line(a: DVector<f64>, b: DVector<f64>) -> Path {
        Path { segments: vec![Segment::Line { a, b }] }
    }

    pub fn polyline(vertices: &[DVector<f64>]) -> Result<Path> {
        if vertices.len() < 2 {
            return Err(GeomError::Parameter("a polyline needs at least two vertices".into()));
        }
        Ok(Path {
            segments: vertices.windows(2).map(|w| Segment::Line { a: w[0].clone(), b: w[1].clone() }).collect(),
        })
    }

    pub fn start(&self) -> DVector<f64> {
        self.segments[0].point(0.0)
    }

    pub fn end(&self) -> DVector<f64> {
        self.segments[self.segments.len() - 1].point(1.0)
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let k = self.segments.len();
        let scaled = t.clamp(0.0, 1.0) * k as f64;
        let idx = (scaled.floor() as usize).min(k - 1);
        (idx, scaled - idx as f64)
    }

    pub fn point(&self, t: f64) -> DVector<f64> {
        let (i, s) = self.locate(t);
        self.segments[i].point(s)
    }

    pub fn velocity(&self, t: f64) -> DVector<f64> {
        let (i, s) = self.locate(t);
        self.segments[i].velocity(s) * self.segments.len() as f64
    }

    fn segment_count(&self) -> usize {
        self.segments.len()
    }

    fn segment(&self, k: usize) -> &Segment {
        &self.segments[k]
    }

    pub fn reversed(&self) -> Path {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| match s {
                Segment::Line { a, b } => Segment::Line { a: b.clone(), b: a.clone() },
                Segment::Arc { center, i, j, radius, phase, sweep } => Segment::Arc {
                    center: center.clone(),
                    i: *i,
                    j: *j,
                    radius: *radius,
                    phase: phase + sweep,
                    sweep: -sweep,
                },
            })
            .collect();
        Path { segments }
    }
}

/// A closed curve in one chart. Closure is either exact, or holds up to a
/// coordinate translation `shift` that acts as an isometry of the chart
/// (a deck transformation of the covering chart).
#[derive(Clone, Debug, PartialEq)]
pub struct Loop {
    label: String,
    path: Path,
    shift: Option<DVector<f64>>,
    steps: usize,
}

impl Loop {
    fn closed(label: impl Into<String>, path: Path, steps: usize) -> Result<Loop> {
        let gap = (path.end() - path.start()).amax();
        if gap != 0.0 {
            return Err(GeomError::Parameter(format!("path does not close (gap {gap:e})")));
        }
        Ok(Loop { label: label.into(), path, shift: None, steps: steps.max(1) })
    }

    pub fn constant(label: impl Into<String>, p: DVector<f64>, steps: usize) -> Loop {
        Loop { label: label.into(), path: Path::line(p.clone(), p), shift: None, steps: steps.max(1) }
    }

    /// Closed polygon through `vertices` (the first vertex is repeated at the end).
    pub fn polygon(label: impl Into<String>, vertices: &[DVector<f64>], steps: usize) -> Result<Loop> {
        if vertices.len() < 2 {
            return Err(GeomError::Parameter("a polygon needs at least two vertices".into()));
        }
        let mut vs = vertices.to_vec();
        vs.push(vertices[0].clone());
        Loop::closed(label, Path::polyline(&vs)?, steps)
    }

    /// Circle of `radius` in the coordinate plane `(i, j)`, starting at `center + radius e_i`.
    pub fn circle(label: impl Into<String>, center: DVector<f64>, i: usize, j: usize, radius: f64, steps: usize) -> Result<Loop> {
        if i == j || i >= center.len() || j >= center.len() {
            return Err(GeomError::Parameter("circle needs two distinct coordinate axes".into()));
        }
        let arc = Segment::Arc { center, i, j, radius, phase: 0.0, sweep: TAU };
        // `curve(1)` returns the start point itself, so closure is exact
        Ok(Loop { label: label.into(), path: Path { segments: vec![arc] }, shift: None, steps: steps.max(1) })
    }

    /// The curve `start + t·period·e_axis`, closed by the translation `period·e_axis`.
    pub fn translation(label: impl Into<String>, start: DVector<f64>, axis: usize, period: f64, steps: usize) -> Result<Loop> {
        if axis >= start.len() || period == 0.0 {
            return Err(GeomError::Parameter("translation loop needs a valid axis and a non-zero period".into()));
        }
        let mut end = start.clone();
        end[axis] += period;
        let shift = &end - &start;
        Ok(Loop { label: label.into(), path: Path::line(start, end), shift: Some(shift), steps: steps.max(1) })
    }

    /// Goes from `base` to `probe`, around a square of side `side` in the
    /// plane `(i, j)` whose corner is `probe`, and back.
    pub fn lasso(
        label: impl Into<String>,
        base: DVector<f64>,
        probe: DVector<f64>,
        i: usize,
        j: usize,
        side: f64,
        steps: usize,
    ) -> Result<Loop> {
        let mut a = probe.clone();
        a[i] += side;
        let mut b = a.clone();
        b[j] += side;
        let mut c = probe.clone();
        c[j] += side;
        let vs = vec![base.clone(), probe.clone(), a, b, c, probe, base];
        Loop::closed(label, Path::polyline(&vs)?, steps)
    }

    /// `self` followed by `other`; both must be exactly closed at the same point.
    pub fn concat(&self, other: &Loop, label: impl Into<String>) -> Result<Loop> {
        if self.shift.is_some() || other.shift.is_some() || self.start() != other.start() {
            return Err(GeomError::Parameter("only exactly closed loops with a common base point concatenate".into()));
        }
        let mut segments = self.path.segments.clone();
        segments.extend(other.path.segments.iter().cloned());
        Ok(Loop { label: label.into(), path: Path { segments }, shift: None, steps: self.steps + other.steps })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn with_steps(mut self, steps: usize) -> Loop {
        self.steps = steps.max(1);
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn shift(&self) -> Option<&DVector<f64>> {
        self.shift.as_ref()
    }

    pub fn start(&self) -> DVector<f64> {
        self.path.start()
    }

    pub fn curve(&self, t: f64) -> DVector<f64> {
        if t >= 1.0 {
            let s = self.start();
            return match &self.shift {
                Some(d) => s + d,
                None => s,
            };
        }
        self.path.point(t)
    }

    pub fn velocity(&self, t: f64) -> DVector<f64> {
        self.path.velocity(t)
    }
}

fn connection_matrix(chart: &Chart, x: &DVector<f64>, v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let m = chart.dim();
    let gam = christoffel_components(chart, x.as_slice())?;
    // A^k_j = Γ^k_ij v^i
    Ok(DMatrix::from_fn(m, m, |k, j| (0..m).map(|i| gam[(k * m + i) * m + j] * v[i]).sum()))
}

fn check_finite(f: &DMatrix<f64>, at: f64) -> Result<()> {
    if f.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GeomError::Integration { at, reason: "non-finite transport".into() })
    }
}

fn transport_segment(chart: &Chart, seg: &Segment, frame: DMatrix<f64>, steps: usize) -> Result<DMatrix<f64>> {
    let h = 1.0 / steps as f64;
    let mut f = frame;
    let rhs = |s: f64, f: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        Ok(-connection_matrix(chart, &seg.point(s), &seg.velocity(s))? * f)
    };
    for n in 0..steps {
        let s = n as f64 * h;
        let k1 = rhs(s, &f)?;
        let k2 = rhs(s + 0.5 * h, &(&f + &k1 * (0.5 * h)))?;
        let k3 = rhs(s + 0.5 * h, &(&f + &k2 * (0.5 * h)))?;
        let k4 = rhs(s + h, &(&f + &k3 * h))?;
        f += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        check_finite(&f, s + h)?;
    }
    Ok(f)
}

/// Parallel transport of the columns of `frame` along an open path, with
/// `steps` RK4 steps per segment.
pub fn transport_along(chart: &Chart, path: &Path, frame: &DMatrix<f64>, steps: usize) -> Result<DMatrix<f64>> {
    let mut f = frame.clone();
    for k in 0..path.segment_count() {
        f = transport_segment(chart, path.segment(k), f, steps.max(1))?;
    }
    Ok(f)
}

/// Parallel transport of the columns of `frame` once around the loop.
pub fn parallel_transport(chart: &Chart, lp: &Loop, frame: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let per_segment = lp.steps.div_ceil(lp.path.segment_count());
    transport_along(chart, &lp.path, frame, per_segment)
}

/// Holonomy matrix `P` with `transport(F) = P F`.
pub fn holonomy_matrix(chart: &Chart, lp: &Loop) -> Result<DMatrix<f64>> {
    let m = chart.dim();
    parallel_transport(chart, lp, &DMatrix::identity(m, m))
}

/// `‖MᵀGM − FᵀGF‖` for the transported frame `M` of `F`.
pub fn orthogonality_defect(g: &DMatrix<f64>, frame: &DMatrix<f64>, transported: &DMatrix<f64>) -> f64 {
    (transported.transpose() * g * transported - frame.transpose() * g * frame).amax()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicEnd {
    pub point: DVector<f64>,
    pub velocity: DVector<f64>,
    /// Largest relative drift of `|γ'|²` along the integration.
    pub energy_drift: f64,
}

pub fn geodesic(chart: &Chart, p: &[f64], v: &DVector<f64>, time: f64, steps: usize) -> Result<GeodesicEnd> {
    let m = chart.dim();
    let steps = steps.max(1);
    let h = time / steps as f64;
    let accel = |x: &DVector<f64>, u: &DVector<f64>, t: f64| -> Result<DVector<f64>> {
        let gam = christoffel_components(chart, x.as_slice()).map_err(|e| match e {
            GeomError::Domain { point, .. } => GeomError::DomainExit { time: t, point },
            other => other,
        })?;
        Ok(DVector::from_fn(m, |k, _| {
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s -= gam[(k * m + i) * m + j] * u[i] * u[j];
                }
            }
            s
        }))
    };
    let energy = |x: &DVector<f64>, u: &DVector<f64>| u.dot(&(chart.metric(x.as_slice()) * u));
    let mut x = DVector::from_column_slice(p);
    let mut u = v.clone();
    let e0 = energy(&x, &u);
    let mut drift: f64 = 0.0;
    for n in 0..steps {
        let t = n as f64 * h;
        let k1x = u.clone();
        let k1u = accel(&x, &u, t)?;
        let k2x = &u + &k1u * (0.5 * h);
        let k2u = accel(&(&x + &k1x * (0.5 * h)), &k2x, t)?;
        let k3x = &u + &k2u * (0.5 * h);
        let k3u = accel(&(&x + &k2x * (0.5 * h)), &k3x, t)?;
        let k4x = &u + &k3u * h;
        let k4u = accel(&(&x + &k3x * h), &k4x, t)?;
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        u += (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0);
        if !x.iter().chain(u.iter()).all(|c| c.is_finite()) {
            return Err(GeomError::Integration { at: t + h, reason: "non-finite geodesic state".into() });
        }
        if !chart.domain().contains(x.as_slice(), 2.0 * chart.settings().fd_step) {
            return Err(GeomError::DomainExit { time: t + h, point: x.as_slice().to_vec() });
        }
        drift = drift.max((energy(&x, &u) - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
    }
    Ok(GeodesicEnd { point: x, velocity: u, energy_drift: drift })
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// `∮ α` over the loop by composite three-point Gauss–Legendre quadrature,
/// `lp.steps` panels per segment.
pub fn loop_integral(chart: &Chart, form: &Field, lp: &Loop) -> Result<f64> {
    path_integral(chart, form, &lp.path, lp.steps.div_ceil(lp.path.segment_count()))
}

pub fn path_integral(chart: &Chart, form: &Field, path: &Path, panels: usize) -> Result<f64> {
    let panels = panels.max(1);
    let h = 1.0 / panels as f64;
    let mut total = 0.0;
    for k in 0..path.segment_count() {
        let seg = path.segment(k);
        for n in 0..panels {
            let mid = (n as f64 + 0.5) * h;
            for (node, weight) in GAUSS3 {
                let s = mid + 0.5 * h * node;
                let x = seg.point(s);
                chart.check_point(x.as_slice(), 2.0 * chart.settings().fd_step)?;
                let a = form(x.as_slice())?.as_vector()?;
                total += 0.5 * h * weight * a.dot(&seg.velocity(s));
            }
        }
    }
    Ok(total)
}
