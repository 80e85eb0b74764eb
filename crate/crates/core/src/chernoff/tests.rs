use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::extension::{EndValues, FourierSeries, RobinSpec};

fn unit_interval() -> DomainGeometry {
    DomainGeometry::new(DomainSpec::Interval { a: 0.0, b: 1.0 }).unwrap()
}

fn unit_disk() -> DomainGeometry {
    DomainGeometry::new(DomainSpec::Disk { center: [0.0, 0.0], radius: 1.0 }).unwrap()
}

fn robin_ends(dom: &DomainGeometry, left: f64, right: f64) -> RobinCoefficient {
    RobinCoefficient::new(RobinSpec::Ends(EndValues { left, right }), dom).unwrap()
}

fn robin_interval_scheme(ns: Vec<usize>, h: f64) -> Scheme {
    let dom = unit_interval();
    let beta = robin_ends(&dom, 1.0, 1.0);
    Scheme::new(dom, SchemeConfig::new(Variant::Robin, 0.1, ns, h).with_beta(beta)).unwrap()
}

fn quadratic() -> SmoothTestFunction {
    SmoothTestFunction::Poly { coeffs: vec![1.0, 1.0, -1.0] }
}

fn sine() -> SmoothTestFunction {
    SmoothTestFunction::Trig { offset: 0.0, cos: 0.0, sin: 1.0, k: PI }
}

#[test]
fn variant_names_round_trip() {
    for v in Variant::ALL {
        assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        assert_eq!(serde_json::to_string(&v).unwrap(), format!("\"{v}\""));
    }
    assert!("robinish".parse::<Variant>().is_err());
}

#[test]
fn config_validation() {
    let dom = unit_interval();
    let beta = robin_ends(&dom, 1.0, 1.0);
    assert!(SchemeConfig::new(Variant::Robin, 0.1, vec![4], 1e-3).validate().is_err());
    assert!(SchemeConfig::new(Variant::Dirichlet, 0.1, vec![4], 1e-3).with_beta(beta.clone()).validate().is_err());
    assert!(SchemeConfig::new(Variant::Neumann, 0.0, vec![4], 1e-3).validate().is_err());
    assert!(SchemeConfig::new(Variant::Neumann, 0.1, vec![], 1e-3).validate().is_err());
    assert!(SchemeConfig::new(Variant::Neumann, 0.1, vec![0], 1e-3).validate().is_err());
    assert!(SchemeConfig::new(Variant::Robin, 0.1, vec![4], 1e-3).with_beta(beta).validate().is_ok());
}

#[test]
fn free_space_evolution_away_from_the_boundary() {
    let dom = unit_interval();
    let s = 1e-3;
    let t = 1e-3;
    let scheme = Scheme::new(dom, SchemeConfig::new(Variant::Neumann, t, vec![1], 5e-4)).unwrap();
    let u0 = |x: [f64; 2]| (-(x[0] - 0.5).powi(2) / (4.0 * s)).exp();
    let u = scheme.evolve(&scheme.sample(&u0), 1).unwrap();
    let mut err: f64 = 0.0;
    for k in scheme.discretization().closure_nodes() {
        let x = scheme.grid().node(k)[0] - 0.5;
        let exact = (s / (s + t)).sqrt() * (-x * x / (4.0 * (s + t))).exp();
        err = err.max((u.values()[k] - exact).abs());
    }
    assert!(err < 1e-8, "{err}");
}

/// `∫ g_τ(x − y) (E₀1)(y) dy` by composite Simpson, as a brute-force oracle.
fn brute_force_neumann_step(dom: &DomainGeometry, profile: &KinkProfile, x: f64, tau: f64) -> f64 {
    let ext = Extension::Robin(RobinCoefficient::constant(0.0, dom).unwrap());
    let one = SmoothTestFunction::constant(1.0);
    let g = |y: f64| (-(x - y).powi(2) / (4.0 * tau)).exp() / (4.0 * PI * tau).sqrt();
    crate::numeric::simpson(|y| g(y) * ext.eval(dom, profile, &one, [y, 0.0]), -0.5, 1.5, 200_000)
}

#[test]
fn neumann_constant_one_step_leak() {
    let dom = unit_interval();
    let mut prev = f64::INFINITY;
    for tau in [4e-3, 2e-3, 1e-3, 5e-4] {
        let scheme = Scheme::new(dom.clone(), SchemeConfig::new(Variant::Neumann, tau, vec![1], 1e-3)).unwrap();
        let one = SmoothTestFunction::constant(1.0);
        let u = scheme.step(&scheme.sample(&one), tau).unwrap();
        let mut leak: f64 = 0.0;
        for k in scheme.discretization().closure_nodes() {
            let v = u.values()[k];
            assert!(v <= 1.0 + 1e-15 && v > 0.0);
            leak = leak.max(1.0 - v);
        }
        let oracle = 1.0 - brute_force_neumann_step(&dom, scheme.profile(), 0.0, tau);
        let at_boundary = 1.0 - scheme.value_near(&u, [0.0, 0.0]);
        assert!((at_boundary - oracle).abs() < 1e-9, "τ={tau}: {at_boundary} vs {oracle}");
        assert!(leak < prev);
        prev = leak;
    }
}

#[test]
fn one_step_consistency_on_the_interval() {
    let dom = unit_interval();
    let profile = KinkProfile::new(dom.tubular_radius()).unwrap();
    let ext = Extension::Robin(robin_ends(&dom, 1.0, 1.0));
    let taus = [2.5e-4, 6.25e-5, 1.5625e-5];
    let r: Vec<f64> = taus
        .iter()
        .map(|&tau| consistency_residual(&dom, &ext, &profile, &quadratic(), 1e-4, tau, 1e-12, 1.0).unwrap())
        .collect();
    assert!(r[1] < 0.6 * r[0] && r[2] < 0.6 * r[1], "{r:?}");
}

#[test]
fn dirichlet_sine_decays_at_the_first_eigenvalue() {
    let dom = unit_interval();
    let scheme = Scheme::new(dom, SchemeConfig::new(Variant::Dirichlet, 0.05, vec![64], 1e-3)).unwrap();
    let u = scheme.evolve(&scheme.sample(&sine()), 64).unwrap();
    let mid = scheme.value_near(&u, [0.5, 0.0]);
    assert!((mid - 0.61050).abs() < 0.02 * 0.61050, "{mid}");
    assert!(check_dirichlet_data(scheme.domain(), &sine(), 1e-12).is_ok());
    assert!(check_dirichlet_data(scheme.domain(), &quadratic(), 1e-6).is_err());
}

#[test]
fn robin_errors_decrease_against_the_eigen_reference() {
    let scheme = robin_interval_scheme(vec![8, 32, 128], 5e-4);
    let r = convergence_study(&scheme, &quadratic(), ReferenceKind::Eigen, false).unwrap();
    let e = r.sup_errors();
    assert!(e[1] < 1.05 * e[0] && e[2] < 1.05 * e[1], "{e:?}");
    assert!(e[2] < e[0] / 3.0);
    assert!(r.rows[0].observed_order.is_none());
    assert!(r.rows[1..].iter().all(|row| row.observed_order.unwrap().is_finite()));
}

#[test]
fn self_convergence_uses_the_largest_run() {
    let scheme = robin_interval_scheme(vec![16, 4, 8], 1e-3);
    let r = convergence_study(&scheme, &quadratic(), ReferenceKind::None, false).unwrap();
    assert_eq!(r.rows.iter().map(|row| row.n).collect::<Vec<_>>(), vec![4, 8, 16]);
    assert_eq!(r.rows[2].sup_error, 0.0);
    assert!(r.rows[2].observed_order.is_none());
}

#[test]
fn single_row_report_has_empty_order() {
    let scheme = robin_interval_scheme(vec![8], 1e-3);
    let r = convergence_study(&scheme, &quadratic(), ReferenceKind::Eigen, false).unwrap();
    let csv = r.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], ConvergenceReport::CSV_HEADER);
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "8");
    assert_eq!(fields[3], "");
    assert_eq!(fields[1].parse::<f64>().unwrap(), r.rows[0].sup_error);
}

#[test]
fn observed_order_formula() {
    let o = observed_order((8, 1e-2), (16, 2.5e-3)).unwrap();
    assert!((o - 2.0).abs() < 1e-14);
    let o = observed_order((8, 1e-2), (32, 1e-3)).unwrap();
    assert!((o - 10f64.ln() / 4f64.ln()).abs() < 1e-14);
    assert!(observed_order((8, 0.0), (16, 1.0)).is_none());
}

#[test]
fn grid_check_reports_small_spatial_error() {
    let scheme = robin_interval_scheme(vec![8, 16], 1e-3);
    let r = convergence_study(&scheme, &quadratic(), ReferenceKind::Eigen, true).unwrap();
    let g = r.grid_check.unwrap();
    assert_eq!(g.n, 16);
    assert!(g.sup_change < 1e-3 * r.rows[1].sup_error, "{g:?}");
}

#[test]
fn unavailable_references() {
    let disk = unit_disk();
    let s = Scheme::new(disk.clone(), SchemeConfig::new(Variant::Neumann, 0.01, vec![2], 0.02)).unwrap();
    let radial = SmoothTestFunction::RadialPoly { center: [0.0, 0.0], coeffs: vec![1.0, 1.0, -0.5] };
    let off_centre = SmoothTestFunction::RadialPoly { center: [0.1, 0.0], coeffs: vec![1.0, 1.0, -0.5] };
    let unavailable = |r: Result<Option<ScalarField>>| matches!(r, Err(Error::ReferenceUnavailable(_)));
    assert!(unavailable(reference_field(&s, &radial, ReferenceKind::Eigen)));
    assert!(unavailable(reference_field(&s, &off_centre, ReferenceKind::RadialCn)));
    assert!(reference_field(&s, &radial, ReferenceKind::RadialCn).unwrap().is_some());

    let dom = unit_interval();
    let c = Scheme::new(dom.clone(), SchemeConfig::new(Variant::ConstantExt, 0.01, vec![2], 1e-3)).unwrap();
    assert!(unavailable(reference_field(&c, &quadratic(), ReferenceKind::Eigen)));
    let n = Scheme::new(dom, SchemeConfig::new(Variant::Neumann, 0.01, vec![2], 1e-3)).unwrap();
    assert!(unavailable(reference_field(&n, &quadratic(), ReferenceKind::RadialCn)));

    let fourier = RobinCoefficient::new(RobinSpec::Fourier(FourierSeries { cos: vec![1.0, 0.5], sin: vec![] }), &disk).unwrap();
    let v = Scheme::new(disk, SchemeConfig::new(Variant::Robin, 0.01, vec![2], 0.02).with_beta(fourier)).unwrap();
    assert!(unavailable(reference_field(&v, &radial, ReferenceKind::RadialCn)));
}

#[test]
fn radial_reference_matches_the_eigenmode_decay() {
    let dom = unit_disk();
    let beta = RobinCoefficient::constant(1.0, &dom).unwrap();
    let mode = disk_robin_eigenmode(&dom, 1.0).unwrap();
    let t = 0.05;
    let s = Scheme::new(dom, SchemeConfig::new(Variant::Robin, t, vec![1], 0.02).with_beta(beta)).unwrap();
    let field = reference_field(&s, &mode, ReferenceKind::RadialCn).unwrap().unwrap();
    let SmoothTestFunction::BesselJ0 { omega, .. } = mode else { unreachable!() };
    let decay = (-omega * omega * t).exp();
    for k in s.discretization().closure_nodes() {
        let exact = decay * mode.value(s.grid().node(k));
        assert!((field.values()[k] - exact).abs() < 1e-6);
    }
}

#[test]
fn under_resolved_step_is_reported() {
    let scheme = robin_interval_scheme(vec![100_000], 1e-2);
    let start = scheme.sample(&quadratic());
    match scheme.evolve(&start, 100_000) {
        Err(Error::StepTooSmall { max_h, .. }) => assert!(max_h < 1e-2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn zero_extension_loses_mass_like_sqrt_t() {
    let dom = unit_interval();
    let rows = boundary_diffusion_probe(&dom, &Extension::Zero, &[1e-3, 2.5e-4], 1e-12).unwrap();
    let ratio = rows[0].loss / rows[1].loss;
    assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
    let neumann = Extension::Robin(RobinCoefficient::constant(0.0, &dom).unwrap());
    let n = boundary_diffusion_probe(&dom, &neumann, &[1e-3], 1e-12).unwrap();
    assert!(n[0].loss < 1e-2 * rows[0].loss);
    let tiny = boundary_diffusion_probe(&dom, &Extension::Zero, &[1e-6], 1e-12).unwrap();
    assert!(tiny[0].loss < rows[1].loss);
}

#[test]
fn constant_normal_residual_does_not_vanish() {
    let dom = unit_disk();
    let profile = KinkProfile::new(dom.tubular_radius()).unwrap();
    let u = SmoothTestFunction::RadialPoly { center: [0.0, 0.0], coeffs: vec![0.0, 1.0, -0.5] };
    let kinked = Extension::Robin(RobinCoefficient::constant(0.0, &dom).unwrap());
    let (mut prev_k, mut floor) = (f64::INFINITY, f64::INFINITY);
    for tau in [2e-3, 1e-3, 5e-4] {
        let c = consistency_residual(&dom, &Extension::ConstantNormal, &profile, &u, 1e-2, tau, 1e-12, 0.1).unwrap();
        let k = consistency_residual(&dom, &kinked, &profile, &u, 1e-2, tau, 1e-12, 0.1).unwrap();
        floor = floor.min(c);
        assert!(k < prev_k);
        prev_k = k;
    }
    assert!(floor > 1.0, "{floor}");
}

fn random_interval_poly() -> impl Strategy<Value = SmoothTestFunction> {
    prop::collection::vec(-1.0f64..1.0, 1..6).prop_map(|coeffs| SmoothTestFunction::Poly { coeffs })
}

fn random_disk_poly() -> impl Strategy<Value = SmoothTestFunction> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 3)
        .prop_map(|coeffs| SmoothTestFunction::Poly2d { coeffs })
}

fn sup(scheme: &Scheme, f: &ScalarField) -> f64 {
    scheme.discretization().sup_norm(f)
}

fn min_on_closure(scheme: &Scheme, f: &ScalarField) -> f64 {
    scheme.discretization().closure_nodes().map(|k| f.values()[k]).fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn every_variant_is_a_sup_contraction(u in random_interval_poly(), b0 in 0.0f64..5.0, b1 in 0.0f64..5.0) {
        let dom = unit_interval();
        for v in Variant::ALL {
            let mut cfg = SchemeConfig::new(v, 0.02, vec![4], 2e-3);
            if v == Variant::Robin {
                cfg = cfg.with_beta(robin_ends(&dom, b0, b1));
            }
            let scheme = Scheme::new(dom.clone(), cfg).unwrap();
            let u0 = scheme.sample(&u);
            let s0 = sup(&scheme, &u0);
            let once = scheme.step(&u0, 0.005).unwrap();
            prop_assert!(sup(&scheme, &once) <= s0 * (1.0 + 1e-14), "{v}");
            let many = scheme.evolve(&u0, 4).unwrap();
            prop_assert!(sup(&scheme, &many) <= s0 * (1.0 + 1e-14), "{v}");
        }
    }

    #[test]
    fn positive_variants_keep_data_nonnegative(u in random_interval_poly(), b in 0.0f64..5.0) {
        let dom = unit_interval();
        let shift = match &u { SmoothTestFunction::Poly { coeffs } => coeffs.iter().map(|c| c.abs()).sum::<f64>(), _ => 0.0 };
        let u = |x: [f64; 2]| u.value(x) + shift;
        for v in [Variant::Robin, Variant::Neumann, Variant::DirichletL2] {
            let mut cfg = SchemeConfig::new(v, 0.02, vec![4], 2e-3);
            if v == Variant::Robin {
                cfg = cfg.with_beta(robin_ends(&dom, b, 2.0 * b));
            }
            let scheme = Scheme::new(dom.clone(), cfg).unwrap();
            let out = scheme.evolve(&scheme.sample(&u), 4).unwrap();
            prop_assert!(min_on_closure(&scheme, &out) >= 0.0, "{v}");
        }
    }

    #[test]
    fn disk_steps_are_contractive_and_positive(u in random_disk_poly(), b in 0.0f64..3.0) {
        let dom = unit_disk();
        let beta = RobinCoefficient::new(RobinSpec::Fourier(FourierSeries { cos: vec![b, 0.5 * b], sin: vec![0.0, 0.3 * b] }), &dom).unwrap();
        let scheme = Scheme::new(dom, SchemeConfig::new(Variant::Robin, 0.01, vec![1], 0.05).with_beta(beta)).unwrap();
        let u0 = scheme.sample(&u);
        let once = scheme.step(&u0, 0.01).unwrap();
        prop_assert!(sup(&scheme, &once) <= sup(&scheme, &u0) * (1.0 + 1e-14));
        let shifted = scheme.sample(&|x: [f64; 2]| u.value(x) + 9.0);
        prop_assert!(min_on_closure(&scheme, &scheme.step(&shifted, 0.01).unwrap()) >= 0.0);
    }
}
