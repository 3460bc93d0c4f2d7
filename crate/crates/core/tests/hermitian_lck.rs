mod common;

use std::sync::Arc;

use approx::assert_abs_diff_eq;
use common::{round_sphere, unit, wiggle};
use lck_core::calculus::codifferential;
use lck_core::chart::ConformalFactor;
use lck_core::hermitian::*;
use lck_core::tensor::{act_on_form, Frame};
use lck_core::zoo::{CalabiData, ZooEntry};
use lck_core::{resolve, FrameTensor, GeomError, HermitianStructure};
use nalgebra::{DMatrix, DVector};

fn lck_entries() -> Vec<ZooEntry> {
    ["hopf{n=2}", "flat_inversion{n=2}", "warped", "calabi"].iter().map(|s| resolve(s).unwrap()).collect()
}

fn calabi() -> (ZooEntry, CalabiData) {
    let entry = resolve("calabi").unwrap();
    let data = entry.calabi.clone().unwrap();
    (entry, data)
}

fn max_of(map: &ResidualMap) -> f64 {
    map.values().fold(0.0, |a, &b| a.max(b))
}

#[test]
fn euclidean_fundamental_form_is_standard() {
    let e = resolve("flat_c2").unwrap();
    let h = e.primary();
    let p = h.chart().domain().center();
    let omega = fundamental_form(h, &p).unwrap().as_matrix().unwrap();
    let mut expected = DMatrix::zeros(4, 4);
    expected[(0, 1)] = 1.0;
    expected[(1, 0)] = -1.0;
    expected[(2, 3)] = 1.0;
    expected[(3, 2)] = -1.0;
    assert_abs_diff_eq!(omega, expected, epsilon = 1e-14);
}

#[test]
fn fundamental_form_is_antisymmetric_and_tames() {
    for e in lck_entries() {
        for h in &e.structures {
            for (k, p) in h.chart().sample_points(5, 3).iter().enumerate() {
                let omega = fundamental_form(h, p).unwrap().as_matrix().unwrap();
                assert!((&omega + omega.transpose()).amax() < 1e-12);
                let g = h.chart().metric(p);
                let x = wiggle(g.nrows(), k);
                let x = &x / x.dot(&(&g * &x)).sqrt();
                let jx = h.j(p) * &x;
                assert_abs_diff_eq!(x.dot(&(&omega * &jx)), 1.0, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn calabi_fundamental_form_pairs_fiber_with_radius() {
    let (e, data) = calabi();
    let (t, r) = (data.t_index(), data.r_index());
    for idx in [CalabiData::ELL_PLUS, CalabiData::ELL_MINUS] {
        let h = &e.structures[idx];
        for p in h.chart().sample_points(5, 8) {
            // Ω(ξ, ∂_r) = g(Jξ, ∂_r) = g(ℓ∂_r, ∂_r) with ξ = ∂_t
            let jxi = h.j(&p) * unit(p.len(), t);
            assert_abs_diff_eq!(jxi, unit(p.len(), r) * data.ell.value(p[r]), epsilon = 1e-12);
            let omega = fundamental_form(h, &p).unwrap();
            assert_abs_diff_eq!(omega.get(&[t, r]), data.ell.value(p[r]), epsilon = 1e-12);
        }
    }
}

#[test]
fn warped_fundamental_form_splits() {
    let e = resolve("warped").unwrap();
    let h = e.primary();
    let base = lck_core::zoo::KahlerBase::cp1();
    for p in h.chart().sample_points(5, 2) {
        let omega = fundamental_form(h, &p).unwrap().as_matrix().unwrap();
        let mut expected = DMatrix::zeros(4, 4);
        expected[(0, 1)] = 1.0;
        expected[(1, 0)] = -1.0;
        let w = (2.0 * p[1].sin()).exp();
        expected.view_mut((2, 2), (2, 2)).copy_from(&(base.omega(&p[2..]) * w));
        assert_abs_diff_eq!(omega, expected, epsilon = 1e-12);
    }
}

#[test]
fn zoo_structures_are_integrable() {
    let tol = 1e-4;
    for e in lck_entries() {
        for h in &e.structures {
            for p in h.chart().sample_points(4, 5) {
                let n = nijenhuis_residual(h, &p).unwrap();
                assert!(n < tol, "{} at {p:?}: {n:e}", h.label());
            }
        }
    }
    let flat = resolve("flat_c2").unwrap();
    let p = flat.primary().chart().domain().center();
    assert_eq!(nijenhuis_residual(flat.primary(), &p).unwrap(), 0.0);
}

/// `J` constant in the orthonormal frame `∂_i/|∂_i|` of a round sphere.
fn frame_constant_j(j0: DMatrix<f64>) -> HermitianStructure {
    let m = j0.nrows();
    let chart = round_sphere(m, 1.0);
    let metric = chart.clone();
    let j = Arc::new(move |x: &[f64]| {
        let g = metric.metric(x);
        let e = DMatrix::from_fn(m, m, |i, k| if i == k { 1.0 / g[(i, i)].sqrt() } else { 0.0 });
        let e_inv = DMatrix::from_fn(m, m, |i, k| if i == k { g[(i, i)].sqrt() } else { 0.0 });
        e * &j0 * e_inv
    });
    HermitianStructure::new(format!("S{m} frame-constant J"), chart, j, false).unwrap()
}

fn tilted_j4() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 4, &[0.0, 0.0, -0.6, -0.8, 0.0, 0.0, 0.8, -0.6, 0.6, -0.8, 0.0, 0.0, 0.8, 0.6, 0.0, 0.0])
}

#[test]
fn frame_constant_j_on_sphere_is_not_integrable() {
    let h = frame_constant_j(tilted_j4());
    for p in h.chart().sample_points(10, 21) {
        let (square, compat) = h.gate_defects(&p).unwrap();
        assert!(square < 1e-12 && compat < 1e-12);
        let n = nijenhuis_residual(&h, &p).unwrap();
        assert!(n > 10.0 * 1e-4, "Nijenhuis residual {n:e} at {p:?}");
    }
}

#[test]
fn kaehler_structures_have_zero_lee_form() {
    let (e, _) = calabi();
    let flat = resolve("flat_c2").unwrap();
    let structures = [flat.primary(), &e.structures[CalabiData::PLUS_PLUS], &e.structures[CalabiData::MINUS_MINUS]];
    for h in structures {
        for p in h.chart().sample_points(5, 4) {
            let lee = lee_form(h, &p).unwrap();
            let frame = Frame::new(&h.chart().metric(&p), &p).unwrap();
            assert!(frame.covector_norm(&lee.theta.as_vector().unwrap()) < 1e-4, "{}", h.label());
        }
    }
}

#[test]
fn inversion_lee_form_is_minus_two_dlog_r() {
    let e = resolve("flat_inversion{n=2}").unwrap();
    let h = e.primary();
    for p in h.chart().sample_points(20, 6) {
        let r2: f64 = p.iter().map(|v| v * v).sum();
        let oracle = DVector::from_iterator(4, p.iter().map(|v| -2.0 * v / r2));
        let theta = lee_covector(h, &p).unwrap();
        assert!((theta - oracle).amax() < 1e-5);
        let lee = lee_form(h, &p).unwrap();
        // |θ|² = r⁴ · 4/r² in the metric r⁻⁴δ
        assert_abs_diff_eq!(lee.norm_sq, 4.0 * r2, epsilon = 1e-5);
        assert!(lee.closedness < 1e-4);
        let s = lee.s.as_matrix().unwrap();
        assert!((&s - s.transpose()).amax() < 1e-4 * (1.0 + s.amax()));
    }
}

#[test]
fn calabi_lee_forms_are_half_ell_dr() {
    let (e, data) = calabi();
    let r = data.r_index();
    for (idx, eps) in [(CalabiData::ELL_PLUS, 1.0), (CalabiData::ELL_MINUS, -1.0)] {
        let h = &e.structures[idx];
        for p in h.chart().sample_points(10, 7) {
            let oracle = unit(p.len(), r) * (0.5 * eps * data.ell.value(p[r]));
            assert!((lee_covector(h, &p).unwrap() - oracle).amax() < 1e-5);
        }
    }
    // rescaling by e^{φ} shifts the Lee form by ½dφ = −½ℓ dr
    let h = &e.structures[CalabiData::PLUS_MINUS];
    for p in h.chart().sample_points(5, 9) {
        let oracle = unit(p.len(), r) * (-data.ell.value(p[r]));
        assert!((lee_covector(h, &p).unwrap() - oracle).amax() < 1e-5);
    }
}

#[test]
fn lee_form_matches_domega_everywhere() {
    for e in lck_entries() {
        for h in &e.structures {
            for p in h.chart().sample_points(6, 10) {
                let d = domega_residual(h, &p).unwrap();
                assert!(d < 1e-4, "{}: {d:e}", h.label());
                let theta = lee_covector(h, &p).unwrap();
                assert!(delta_omega_residual(h, &p, &theta).unwrap() < 1e-4);
            }
        }
    }
}

#[test]
fn lee_form_rejects_non_lck_structures() {
    // in real dimension four every Hermitian structure satisfies dΩ = 2θ∧Ω
    let mut j0 = DMatrix::zeros(6, 6);
    for (a, b) in [(0, 3), (1, 4), (2, 5)] {
        j0[(b, a)] = 1.0;
        j0[(a, b)] = -1.0;
    }
    let h = frame_constant_j(j0);
    let p = vec![1.1, 0.9, 1.3, 1.2, 1.0, 2.0];
    match lee_form(&h, &p) {
        Err(GeomError::NotLck { residual, .. }) => assert!(residual > 1e-2),
        other => panic!("expected NotLck, got {other:?}"),
    }
}

#[test]
fn nabla_j_vanishes_for_kaehler() {
    let flat = resolve("flat_c2").unwrap();
    let p = flat.primary().chart().domain().center();
    assert!(nabla_j_residual(flat.primary(), &p, &wiggle(4, 1)).unwrap() < 1e-12);
}

#[test]
fn nabla_j_identity_on_hopf_and_calabi() {
    let hopf = resolve("hopf{n=2}").unwrap();
    let (cal, _) = calabi();
    for h in [hopf.primary(), &cal.structures[CalabiData::ELL_PLUS]] {
        for (k, p) in h.chart().sample_points(20, 11).iter().enumerate() {
            let r = nabla_j_residual(h, p, &wiggle(4, k)).unwrap();
            assert!(r < 1e-4, "{}: {r:e}", h.label());
        }
    }
}

#[test]
fn curvature_identities_on_hopf_and_inversion() {
    for sel in ["hopf{n=2}", "flat_inversion{n=2}"] {
        let e = resolve(sel).unwrap();
        let h = e.primary();
        for (k, p) in h.chart().sample_points(10, 12).iter().enumerate() {
            let (full, contracted) = curvature_j_residuals(h, p, &wiggle(4, k), &wiggle(4, k + 50)).unwrap();
            assert!(full < 1e-4 && contracted < 1e-4, "{sel}: {full:e} {contracted:e}");
        }
    }
}

#[test]
fn curvature_identities_trivial_for_flat_kaehler() {
    let flat = resolve("flat_c2").unwrap();
    let p = flat.primary().chart().domain().center();
    let (full, contracted) = curvature_j_residuals(flat.primary(), &p, &unit(4, 0), &unit(4, 2)).unwrap();
    assert!(full < 1e-12 && contracted < 1e-12);
}

#[test]
fn inversion_codifferential_of_lee_form() {
    let e = resolve("flat_inversion{n=2}").unwrap();
    let h = e.primary();
    let theta = |q: &[f64]| Ok(FrameTensor::covector(&lee_covector(h, q)?, q));
    for p in h.chart().sample_points(10, 13) {
        let lee = lee_form(h, &p).unwrap();
        let delta = codifferential(h.chart(), &theta, &p).unwrap().as_scalar().unwrap();
        // δθ = (1 − n)|θ|² with n = 2
        assert!((delta + lee.norm_sq).abs() < 1e-4 * (1.0 + lee.norm_sq));
    }
}

#[test]
fn s_commutes_with_j() {
    let inv = resolve("flat_inversion{n=2}").unwrap();
    let (cal, _) = calabi();
    for h in [inv.primary(), &cal.structures[CalabiData::PLUS_MINUS]] {
        for p in h.chart().sample_points(8, 14) {
            let r = s_commutator_residual(h, &p).unwrap();
            assert!(r < 1e-4, "{}: {r:e}", h.label());
        }
    }
    let flat = resolve("flat_c2").unwrap();
    let p = flat.primary().chart().domain().center();
    assert!(s_commutator_residual(flat.primary(), &p).unwrap() < 1e-12);
}

const CHAIN_KEYS: [&str; 12] = [
    "Sth", "trS", "eq_nablaJth", "diffJth", "lieJth", "codiffth", "codiffom", "eqJdel", "eqJdel2", "eqJdel3", "summ", "eqf",
];

#[test]
fn einstein_chain_on_flat_inversion() {
    let e = resolve("flat_inversion{n=2}").unwrap();
    let h = e.primary();
    for p in h.chart().sample_points(50, 15) {
        let chain = einstein_chain_residuals(h, &p, 0.0).unwrap();
        assert_eq!(chain.keys().map(String::as_str).collect::<Vec<_>>().len(), CHAIN_KEYS.len());
        for key in CHAIN_KEYS {
            let v = chain[key];
            assert!(v < 1e-3, "{key} = {v:e} at {p:?}");
        }
    }
}

#[test]
fn einstein_chain_at_unit_radius() {
    let e = resolve("flat_inversion{n=2}").unwrap();
    let h = e.primary();
    let p = vec![0.5; 4];
    let lee = lee_form(h, &p).unwrap();
    assert_abs_diff_eq!(lee.norm_sq, 4.0, epsilon = 1e-6);
    let theta = |q: &[f64]| Ok(FrameTensor::covector(&lee_covector(h, q)?, q));
    let delta = codifferential(h.chart(), &theta, &p).unwrap().as_scalar().unwrap();
    assert_abs_diff_eq!(delta, -4.0, epsilon = 1e-4);
    assert!(einstein_chain_residuals(h, &p, 0.0).unwrap()["eqf"] < 1e-3);
}

#[test]
fn einstein_chain_vanishes_for_flat_kaehler() {
    let flat = resolve("flat_c2").unwrap();
    let p = flat.primary().chart().domain().center();
    let chain = einstein_chain_residuals(flat.primary(), &p, 0.0).unwrap();
    assert!(max_of(&chain) < 1e-12, "{chain:?}");
}

#[test]
fn einstein_chain_rejects_wrong_constant() {
    let e = resolve("flat_inversion{n=2}").unwrap();
    let p = e.primary().chart().domain().center();
    assert!(matches!(einstein_chain_residuals(e.primary(), &p, 1.0), Err(GeomError::Precondition(_))));
}

fn coordinate_field(m: usize, i: usize) -> impl Fn(&[f64]) -> lck_core::Result<DVector<f64>> + Sync {
    move |_| Ok(unit(m, i))
}

#[test]
fn warped_parallel_field() {
    let e = resolve("warped").unwrap();
    let h = e.primary();
    for p in h.chart().sample_points(8, 16) {
        let rep = parallel_field_residuals(h, &p, &coordinate_field(4, 0)).unwrap();
        assert!(rep.a.abs() < 1e-6);
        assert_abs_diff_eq!(rep.b, p[1].cos(), epsilon = 1e-5);
        assert!(max_of(&rep.residuals) < 1e-4, "{:?}", rep.residuals);
    }
}

#[test]
fn hopf_parallel_field_is_lee_direction() {
    let e = resolve("hopf{n=2}").unwrap();
    let h = e.primary();
    for p in h.chart().sample_points(8, 17) {
        let rep = parallel_field_residuals(h, &p, &coordinate_field(4, 0)).unwrap();
        assert_abs_diff_eq!(rep.a, 1.0, epsilon = 1e-5);
        assert!(rep.b.abs() < 1e-5);
        assert!(max_of(&rep.residuals) < 1e-4, "{:?}", rep.residuals);
    }
}

#[test]
fn flat_product_parallel_field_is_trivial() {
    let e = resolve("warped{c=zero,base=flat_c}").unwrap();
    let h = e.primary();
    let p = h.chart().domain().center();
    let rep = parallel_field_residuals(h, &p, &coordinate_field(4, 0)).unwrap();
    assert!(rep.a.abs() < 1e-12 && rep.b.abs() < 1e-12);
    assert!(max_of(&rep.residuals) < 1e-10, "{:?}", rep.residuals);
}

#[test]
fn parallel_field_rejects_non_parallel_input() {
    let e = resolve("hopf{n=2}").unwrap();
    let p = e.primary().chart().domain().center();
    let r = parallel_field_residuals(e.primary(), &p, &coordinate_field(4, 2));
    assert!(matches!(r, Err(GeomError::Precondition(_))));
}

#[test]
fn calabi_commuting_pair() {
    let (e, _) = calabi();
    let gplus = &e.charts[CalabiData::G_PLUS];
    let (i, j) = (&e.structures[CalabiData::PLUS_PLUS], &e.structures[CalabiData::PLUS_MINUS]);
    for p in gplus.sample_points(10, 18) {
        let res = commuting_pair_residuals(gplus, i, j, &p).unwrap();
        for (k, v) in &res {
            let tol = match k.as_str() {
                "eq_J" | "et" | "nablath" => 1e-3,
                _ => 1e-4,
            };
            assert!(*v < tol, "{k} = {v:e} at {p:?}");
        }
        assert!(res["i_theta_j_theta"] < 1e-5);
    }
}

#[test]
fn commuting_pair_sign_test() {
    let (e, _) = calabi();
    let gplus = &e.charts[CalabiData::G_PLUS];
    let i = e.structures[CalabiData::PLUS_PLUS].negated("-J+");
    let j = &e.structures[CalabiData::PLUS_MINUS];
    for p in gplus.sample_points(5, 19) {
        let res = commuting_pair_residuals(gplus, &i, j, &p).unwrap();
        assert!(res["i_theta_j_theta"] > 0.5);
        let theta = lee_covector(j, &p).unwrap();
        let sum = act_on_form(&i.j(&p), &theta) + act_on_form(&j.j(&p), &theta);
        let frame = Frame::new(&gplus.metric(&p), &p).unwrap();
        assert!(frame.covector_norm(&sum) < 1e-5 * (1.0 + frame.covector_norm(&theta)));
    }
}

#[test]
fn commuting_pair_needs_nonzero_lee_form() {
    let flat = resolve("flat_c2").unwrap();
    let h = flat.primary();
    let p = h.chart().domain().center();
    let r = commuting_pair_residuals(h.chart(), h, h, &p);
    assert!(matches!(r, Err(GeomError::Singular { .. })));
}

#[test]
fn commuting_pair_needs_kaehler_reference() {
    let (e, _) = calabi();
    let gplus = &e.charts[CalabiData::G_PLUS];
    let j = &e.structures[CalabiData::PLUS_MINUS];
    let p = gplus.domain().center();
    assert!(matches!(commuting_pair_residuals(gplus, j, j, &p), Err(GeomError::Precondition(_))));
}

#[test]
fn wedge_antisymmetry_near_the_ends() {
    let (e, data) = calabi();
    let gplus = &e.charts[CalabiData::G_PLUS];
    let (i, j) = (&e.structures[CalabiData::PLUS_PLUS], &e.structures[CalabiData::PLUS_MINUS]);
    let r = data.r_index();
    let margin = gplus.settings().sampling_margin();
    let (lo, hi) = (gplus.domain().lo()[r], gplus.domain().hi()[r]);
    for (k, mut p) in gplus.sample_points(4, 20).into_iter().enumerate() {
        p[r] = if k % 2 == 0 { lo + 2.0 * margin } else { hi - 2.0 * margin };
        let res = commuting_pair_residuals(gplus, i, j, &p).unwrap();
        assert!(res["to"] < 1e-4, "{:e} at {p:?}", res["to"]);
    }
}

fn potential(e: &ZooEntry, data: &CalabiData) -> Potential {
    Potential::new(&e.structures[CalabiData::PLUS_MINUS], &data.potential_base, 64).unwrap()
}

#[test]
fn potential_recovers_conformal_exponent() {
    let (e, data) = calabi();
    let pot = potential(&e, &data);
    let r = data.r_index();
    let offset = data.phi(data.potential_base[r]);
    for p in e.charts[0].sample_points(6, 22) {
        assert_abs_diff_eq!(pot.value(&p).unwrap(), data.phi(p[r]) - offset, epsilon = 1e-5);
        let mut via = p.clone();
        via[data.t_index()] = data.potential_base[data.t_index()] + 1.0;
        assert_abs_diff_eq!(pot.value_via(&p, &via).unwrap(), pot.value(&p).unwrap(), epsilon = 1e-5);
        assert_abs_diff_eq!(pot.direct(&p).unwrap(), pot.value(&p).unwrap(), epsilon = 1e-9);
    }
}

#[test]
fn hamiltonian_form_on_calabi() {
    let (e, data) = calabi();
    let pot = potential(&e, &data);
    let gplus = &e.charts[CalabiData::G_PLUS];
    let (i, j) = (&e.structures[CalabiData::PLUS_PLUS], &e.structures[CalabiData::PLUS_MINUS]);
    for (k, p) in gplus.sample_points(10, 23).iter().enumerate() {
        let x = wiggle(4, k);
        let r = hamiltonian_form_residual(gplus, i, j, &pot, p, &x).unwrap();
        assert!(r < 1e-3, "{r:e} at {p:?}");
    }
}

#[test]
fn hamiltonian_form_is_linear_in_x() {
    let (e, data) = calabi();
    let pot = potential(&e, &data);
    let gplus = &e.charts[CalabiData::G_PLUS];
    let (i, j) = (&e.structures[CalabiData::PLUS_PLUS], &e.structures[CalabiData::PLUS_MINUS]);
    let p = gplus.domain().center();
    let (l0, r0) = hamiltonian_form_sides(gplus, i, j, &pot, &p, &DVector::zeros(4)).unwrap();
    assert!(l0.amax() < 1e-12 && r0.amax() < 1e-12);
    let x = wiggle(4, 3);
    let (l1, r1) = hamiltonian_form_sides(gplus, i, j, &pot, &p, &x).unwrap();
    let (l2, r2) = hamiltonian_form_sides(gplus, i, j, &pot, &p, &(&x * 2.0)).unwrap();
    assert!((&l2 - &l1 * 2.0).amax() < 1e-9 * (1.0 + l1.amax()));
    assert!((&r2 - &r1 * 2.0).amax() < 1e-9 * (1.0 + r1.amax()));
}

#[test]
fn average_metric_field_equations() {
    let (e, data) = calabi();
    let pot = potential(&e, &data);
    let g0 = &e.charts[CalabiData::G_ZERO];
    let i = &e.structures[CalabiData::ELL_PLUS];
    for p in g0.sample_points(8, 24) {
        let rep = average_metric_residuals(g0, i, &pot, &p).unwrap();
        for (k, v) in &rep.residuals {
            assert!(*v < 1e-4, "{k} = {v:e} at {p:?}");
        }
        assert!(rep.xi_norm > 0.0);
    }
}

#[test]
fn average_metric_lee_form_is_minus_half_dphi() {
    let (e, data) = calabi();
    let g0 = &e.charts[CalabiData::G_ZERO];
    let i = e.structures[CalabiData::ELL_PLUS].on_chart("g0,J+", g0.clone());
    let r = data.r_index();
    for p in g0.sample_points(6, 25) {
        let oracle = unit(4, r) * (0.5 * data.ell.value(p[r]));
        assert!((lee_covector(&i, &p).unwrap() - oracle).amax() < 1e-5);
    }
}

#[test]
fn hopf_sphere_factor_curvature() {
    let e = resolve("hopf{n=2}").unwrap();
    let h = e.primary();
    for (k, p) in h.chart().sample_points(10, 26).iter().enumerate() {
        let r = vaisman_fiber_curvature_residual(h, p, &wiggle(4, k), &wiggle(4, k + 9)).unwrap();
        assert!(r < 1e-4, "{r:e}");
    }
    let inv = resolve("flat_inversion{n=2}").unwrap();
    let p = inv.primary().chart().domain().center();
    let r = vaisman_fiber_curvature_residual(inv.primary(), &p, &unit(4, 0), &unit(4, 1));
    assert!(matches!(r, Err(GeomError::Precondition(_))));
}

#[test]
fn classification_examples() {
    let hopf = resolve("hopf{n=2}").unwrap();
    let samples = hopf.primary().chart().sample_points(8, 27);
    let class = classify_structure(hopf.primary(), &samples, &hopf.loops).unwrap();
    assert_eq!(class.kind, StructureKind::Vaisman);
    assert_abs_diff_eq!(class.periods["s1-generator"], std::f64::consts::TAU, epsilon = 1e-4);

    let (cal, _) = calabi();
    let h = &cal.structures[CalabiData::ELL_PLUS];
    let samples = h.chart().sample_points(8, 27);
    let class = classify_structure(h, &samples, &cal.loops).unwrap();
    assert_eq!(class.kind, StructureKind::GloballyConformallyKahler);
    assert!(class.periods.values().all(|v| v.abs() < 1e-6), "{:?}", class.periods);

    let flat = resolve("flat_c2").unwrap();
    let samples = flat.primary().chart().sample_points(4, 27);
    let class = classify_structure(flat.primary(), &samples, &flat.loops).unwrap();
    assert_eq!(class.kind, StructureKind::Kahler);
}

#[test]
fn classification_is_scale_invariant() {
    for sel in ["hopf{n=2}", "flat_inversion{n=2}", "flat_c2"] {
        let e = resolve(sel).unwrap();
        let h = e.primary();
        let samples = h.chart().sample_points(6, 28);
        let kind = classify_structure(h, &samples, &e.loops).unwrap().kind;
        for c in [0.01, 25.0] {
            let scaled = h.on_chart("scaled", h.chart().scaled(c));
            assert_eq!(classify_structure(&scaled, &samples, &e.loops).unwrap().kind, kind, "{sel} scaled by {c}");
        }
    }
}

#[test]
fn conformal_change_shifts_lee_form_by_du() {
    let e = resolve("hopf{n=2}").unwrap();
    let h = e.primary();
    let u: lck_core::chart::ScalarFn = Arc::new(|x: &[f64]| 0.3 * x[0].sin() + 0.2 * x[1] * x[2]);
    let du = |x: &[f64]| DVector::from_vec(vec![0.3 * x[0].cos(), 0.2 * x[2], 0.2 * x[1], 0.0]);
    let chart = h.chart().conformal("hopf2*e2u", ConformalFactor::new(u, None));
    let moved = h.on_chart("hopf2*e2u:J", chart);
    for p in h.chart().sample_points(10, 29) {
        let shift = lee_covector(&moved, &p).unwrap() - lee_covector(h, &p).unwrap();
        assert!((shift - du(&p)).amax() < 1e-3);
    }
}
