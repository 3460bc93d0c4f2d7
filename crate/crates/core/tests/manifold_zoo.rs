mod common;

use std::f64::consts::{PI, TAU};

use approx::assert_abs_diff_eq;
use common::unit;
use lck_core::calculus::{exterior_derivative, nabla, ricci_scalar, riemann};
use lck_core::hermitian::{classify_structure, fundamental_form, lee_covector, nijenhuis_residual};
use lck_core::tensor::Frame;
use lck_core::zoo::{self, calabi_with_connection_scale, kaehler_bases, CalabiData, KahlerBase, ProfileFn, ZooEntry};
use lck_core::{resolve, FrameTensor, GeomError};
use nalgebra::{DVector, Matrix2};

fn all_entries() -> Vec<ZooEntry> {
    let mut out: Vec<ZooEntry> = [
        "hopf{n=2}",
        "hopf{n=3,circumference=3}",
        "flat_inversion{n=2}",
        "flat_inversion{n=3}",
        "warped",
        "warped{c=sin_bump,base=flat_c}",
        "warped{c=zero,base=cp1}",
        "calabi",
    ]
    .iter()
    .map(|s| resolve(s).unwrap())
    .collect();
    out.extend(kaehler_bases().unwrap());
    out.push(resolve("sphere{radius=2}").unwrap());
    out
}

#[test]
fn declared_lee_forms_hold() {
    for e in all_entries() {
        let h = e.primary();
        for p in h.chart().sample_points(6, 31) {
            let expected = e.lee_form_expected(&p).unwrap();
            let got = if h.n() >= 2 { lee_covector(h, &p).unwrap() } else { DVector::zeros(p.len()) };
            assert!((got - expected).amax() < 1e-5, "{} at {p:?}", e.name);
        }
    }
}

#[test]
fn declared_kinds_hold() {
    for e in all_entries() {
        let h = e.primary();
        if h.n() < 2 {
            continue;
        }
        let samples = h.chart().sample_points(5, 32);
        let class = classify_structure(h, &samples, &e.loops).unwrap();
        assert_eq!(class.kind, e.expected.kind, "{} {:?}", e.name, class.evidence);
    }
}

#[test]
fn structures_pass_hermitian_gates() {
    for e in all_entries() {
        for h in &e.structures {
            for p in h.chart().sample_points(4, 33) {
                let (square, compat) = h.gate_defects(&p).unwrap();
                assert!(square < 1e-10 && compat < 1e-10, "{}", h.label());
                assert!(nijenhuis_residual(h, &p).unwrap() < 1e-4, "{}", h.label());
            }
        }
    }
}

#[test]
fn params_are_echoed() {
    let e = resolve("hopf{n=3,circumference=3}").unwrap();
    assert_eq!(e.params["n"], "3");
    assert_eq!(e.params["circumference"], "3");
    let e = resolve("calabi{ell=sin,b=pi,base=cp1}").unwrap();
    assert_eq!(e.params["ell"], "sin");
    assert_eq!(e.params["base"], "cp1");
    assert_abs_diff_eq!(e.params["b"].parse::<f64>().unwrap(), PI);
}

#[test]
fn hopf_lee_form_has_unit_length() {
    for n in [2, 3] {
        let e = zoo::hopf(n, TAU).unwrap();
        let h = e.primary();
        for p in h.chart().sample_points(10, 34) {
            let theta = lee_covector(h, &p).unwrap();
            let frame = Frame::new(&h.chart().metric(&p), &p).unwrap();
            assert_abs_diff_eq!(frame.covector_norm(&theta), 1.0, epsilon = 1e-5);
        }
    }
}

#[test]
fn hopf_parameters_are_validated() {
    assert!(matches!(zoo::hopf(1, TAU), Err(GeomError::Parameter(_))));
    assert!(matches!(zoo::hopf(2, 0.0), Err(GeomError::Parameter(_))));
    assert!(matches!(zoo::flat_inversion(1), Err(GeomError::Parameter(_))));
}

#[test]
fn flat_inversion_riemann_vanishes() {
    let e = resolve("flat_inversion{n=2}").unwrap();
    let chart = e.primary().chart();
    for p in chart.sample_points(20, 35) {
        let r = riemann(chart, &p).unwrap();
        let frame = Frame::new(&chart.metric(&p), &p).unwrap();
        assert!(frame.norm(&r) < 1e-4);
    }
}

#[test]
fn warped_lee_form_and_parallel_field() {
    let e = resolve("warped").unwrap();
    let h = e.primary();
    let v = |q: &[f64]| Ok(FrameTensor::vector(&unit(4, 0), q));
    for p in h.chart().sample_points(10, 36) {
        let mut oracle = DVector::zeros(4);
        oracle[1] = p[1].cos();
        assert!((lee_covector(h, &p).unwrap() - oracle).amax() < 1e-5);
        let nv = nabla(h.chart(), &v, &p).unwrap();
        assert!(nv.max_abs() < 1e-6);
    }
}

#[test]
fn warped_ricci_along_the_profile_direction() {
    // c = sin, so c″ + c′² = cos² t − sin t; the base has real dimension 2n − 2 = 2
    let e = resolve("warped").unwrap();
    let chart = e.primary().chart();
    let mut rejected = 0;
    for p in chart.sample_points(20, 37) {
        let (ric, _) = ricci_scalar(chart, &p).unwrap();
        let rtt = ric.get(&[1, 1]);
        let t = p[1];
        let profile = t.cos().powi(2) - t.sin();
        assert_abs_diff_eq!(rtt, -2.0 * profile, epsilon = 1e-4);
        if (rtt + 3.0 * profile).abs() > 1e-3 {
            rejected += 1;
        }
    }
    assert!(rejected >= 18, "the (1−2n) coefficient matched at {} samples", 20 - rejected);
}

#[test]
fn named_profiles() {
    let sin = ProfileFn::named("sin").unwrap();
    assert_abs_diff_eq!(sin.integral_from_zero(PI), 2.0, epsilon = 1e-10);
    assert_abs_diff_eq!(sin.derivative(0.3), 0.3f64.cos(), epsilon = 1e-12);
    let bump = ProfileFn::named("sin_bump").unwrap();
    for x in [0.2, 1.0, 2.5] {
        assert_abs_diff_eq!(bump.derivative(x), bump.derivative_fd(x, 1e-5), epsilon = 1e-8);
        assert_abs_diff_eq!(bump.integral_from_zero(x), bump.quadrature(0.0, x, 400), epsilon = 1e-9);
    }
    assert!(matches!(ProfileFn::named("tan"), Err(GeomError::Selector(_))));
}

fn calabi() -> (ZooEntry, CalabiData) {
    let entry = resolve("calabi").unwrap();
    let data = entry.calabi.clone().unwrap();
    (entry, data)
}

#[test]
fn calabi_boundary_function_series() {
    let (_, data) = calabi();
    for x in [1e-3, 1e-2, 4e-2] {
        let series = -x / 3.0 + 2.0 * x * x / 45.0 - x * x * x / 315.0;
        assert_abs_diff_eq!(data.boundary_a(x), series, epsilon = x.powi(4));
    }
    assert!(data.boundary_a(1e-8).abs() < 1e-8);
}

#[test]
fn calabi_conformal_exponents() {
    let (e, data) = calabi();
    for r in [0.3, 1.0, 2.5] {
        assert_abs_diff_eq!(data.phi(r), r.cos() - 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(data.half_integral(r), 0.5 * (1.0 - r.cos()), epsilon = 1e-10);
    }
    let ri = data.r_index();
    for p in e.charts[0].sample_points(5, 38) {
        let g = e.charts[CalabiData::G_ELL].metric(&p);
        let w = data.phi(p[ri]).exp();
        assert_abs_diff_eq!(e.charts[CalabiData::G_PLUS].metric(&p), &g * w, epsilon = 1e-12);
        assert_abs_diff_eq!(e.charts[CalabiData::G_MINUS].metric(&p), &g / w, epsilon = 1e-12);
        let back = e.charts[CalabiData::G_PLUS].metric(&p) / w;
        assert_abs_diff_eq!(e.charts[CalabiData::G_ZERO].metric(&p), back, epsilon = 1e-12);
    }
}

#[test]
fn calabi_connection_table() {
    let (e, data) = calabi();
    let g_ell = &e.charts[CalabiData::G_ELL];
    for p in g_ell.sample_points(10, 39) {
        let rows = data.table_residuals(g_ell, &p).unwrap();
        assert_eq!(rows.len(), 5);
        for (k, v) in &rows {
            assert!(*v < 1e-4, "{k} = {v:e}");
        }
    }
}

#[test]
fn calabi_conformal_metrics_are_kaehler() {
    let (e, _) = calabi();
    for idx in [CalabiData::PLUS_PLUS, CalabiData::MINUS_MINUS] {
        let h = &e.structures[idx];
        let omega = |q: &[f64]| fundamental_form(h, q);
        for p in h.chart().sample_points(10, 40) {
            let d = exterior_derivative(h.chart(), &omega, &p).unwrap();
            let frame = Frame::new(&h.chart().metric(&p), &p).unwrap();
            assert!(frame.norm(&d) < 1e-4, "{}", h.label());
        }
    }
}

#[test]
fn calabi_structures_commute() {
    let (e, _) = calabi();
    let (jp, jm) = (&e.structures[CalabiData::ELL_PLUS], &e.structures[CalabiData::ELL_MINUS]);
    for p in e.charts[0].sample_points(10, 41) {
        let (a, b) = (jp.j(&p), jm.j(&p));
        assert!((&a * &b - &b * &a).amax() < 1e-12);
        assert_abs_diff_eq!((&a * &b).trace(), 0.0, epsilon = 1e-12);
    }
}

#[test]
fn calabi_rejects_bad_parameters() {
    assert!(matches!(resolve("calabi{b=4}"), Err(GeomError::Parameter(_))));
    assert!(matches!(resolve("calabi{b=0.4}"), Err(GeomError::Parameter(_))));
    assert!(matches!(resolve("calabi{base=sphere{radius=0.6}}"), Err(GeomError::Bundle(_))));
    let sin = ProfileFn::named("sin").unwrap();
    assert!(matches!(calabi_with_connection_scale(sin.clone(), PI, KahlerBase::cp1(), 0.5), Err(GeomError::Bundle(_))));
    assert!(calabi_with_connection_scale(sin, PI, KahlerBase::cp1(), 1.0).is_ok());
}

#[test]
fn calabi_over_other_bases() {
    for sel in ["calabi{base=sphere{radius=1}}", "calabi{base=flat_c}"] {
        let e = resolve(sel).unwrap();
        let data = e.calabi.clone().unwrap();
        let h = &e.structures[CalabiData::ELL_PLUS];
        for p in h.chart().sample_points(4, 42) {
            let oracle = unit(4, data.r_index()) * (0.5 * data.ell.value(p[data.r_index()]));
            assert!((lee_covector(h, &p).unwrap() - oracle).amax() < 1e-5, "{sel}");
        }
    }
}

/// `J(∂x1)` as printed: the `∂x2` coefficient is `−(ℓ/r)(1 + A x1²/ℓ²)`.
fn printed_fiber_j(ell: f64, a: f64, r: f64, x1: f64, x2: f64) -> Matrix2<f64> {
    let k = ell / r;
    let q = a / (ell * ell);
    Matrix2::new(-k * q * x1 * x2, k * (1.0 - q * x2 * x2), -k * (q * x1 * x1 + 1.0), k * q * x1 * x2)
}

/// The same with the `∂x2` coefficient of `J(∂x1)` equal to `−(ℓ/r)(1 − A x1²/ℓ²)`.
fn corrected_fiber_j(ell: f64, a: f64, r: f64, x1: f64, x2: f64) -> Matrix2<f64> {
    let k = ell / r;
    let q = a / (ell * ell);
    Matrix2::new(-k * q * x1 * x2, k * (1.0 - q * x2 * x2), -k * (1.0 - q * x1 * x1), k * q * x1 * x2)
}

#[test]
fn calabi_fiber_in_euclidean_coordinates() {
    let (_, data) = calabi();
    for (k, r) in [1e-3, 0.05, 0.3, 1.0].into_iter().enumerate() {
        let t = 0.4 + 1.3 * k as f64;
        let (x1, x2) = (r * t.cos(), r * t.sin());
        let ell = data.ell.value(r);
        let a = data.boundary_a(r * r);
        let j = data.euclidean_fiber_j(r, t);
        assert!(j.amax() < 2.0, "J is unbounded near the axis: {j}");
        assert_abs_diff_eq!(j * j, -Matrix2::identity(), epsilon = 1e-10);
        assert_abs_diff_eq!(j, corrected_fiber_j(ell, a, r, x1, x2), epsilon = 1e-10);

        let g = data.euclidean_fiber_metric(r, t);
        let printed_g = Matrix2::new(1.0 + a * x2 * x2 / (r * r), -a * x1 * x2 / (r * r), -a * x1 * x2 / (r * r), 1.0 + a * x1 * x1 / (r * r));
        assert_abs_diff_eq!(g, printed_g, epsilon = 1e-10);
        assert_abs_diff_eq!(j.transpose() * g * j, g, epsilon = 1e-10);

        let printed = printed_fiber_j(ell, a, r, x1, x2);
        let defect = (printed * printed + Matrix2::identity()).amax();
        assert!(defect > 0.1 * a.abs() * x1 * x1 / (r * r), "printed J squares to −1 at r = {r}");
    }
}

#[test]
fn kaehler_base_facts() {
    assert_abs_diff_eq!(KahlerBase::cp1().total_area().unwrap(), TAU, epsilon = 1e-10);
    assert!(KahlerBase::flat(1).total_area().is_none());
    for e in kaehler_bases().unwrap() {
        let chart = e.primary().chart();
        for p in chart.sample_points(5, 43) {
            let (_, scalar) = ricci_scalar(chart, &p).unwrap();
            // Einstein constant λ gives scalar curvature λ·dim
            assert_abs_diff_eq!(scalar, e.einstein.unwrap() * chart.dim() as f64, epsilon = 1e-4);
        }
    }
    let sphere = resolve("sphere{radius=2}").unwrap();
    let p = sphere.primary().chart().domain().center();
    let (_, scalar) = ricci_scalar(sphere.primary().chart(), &p).unwrap();
    assert_abs_diff_eq!(scalar, 2.0 / 4.0, epsilon = 1e-5);
    assert!(matches!(KahlerBase::sphere(-1.0), Err(GeomError::Parameter(_))));
}

#[test]
fn canonical_loops_are_closed_where_expected() {
    for e in all_entries() {
        for lp in &e.loops {
            let gap = lp.curve(1.0) - lp.start();
            let closed = match lp.shift() {
                Some(s) => (gap - s).amax(),
                None => gap.amax(),
            };
            assert!(closed < 1e-12, "{}: {}", e.name, lp.label());
            let chart = e.primary().chart();
            for k in 0..=20 {
                let q = lp.curve(k as f64 / 20.0);
                assert!(chart.domain().contains(q.as_slice(), 0.0), "{}: {} leaves the chart", e.name, lp.label());
            }
        }
    }
}

#[test]
fn selector_errors() {
    for bad in ["nope", "hopf{m=2}", "hopf{n=2,n=3}", "warped{c=tan}", "warped{base=cp2}", "hopf{n}"] {
        assert!(matches!(resolve(bad), Err(GeomError::Selector(_))), "{bad}");
    }
}
