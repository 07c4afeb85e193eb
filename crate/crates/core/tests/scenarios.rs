//! End-to-end scenarios: escaping points and their periodic
//! approximations, the blow-up probe, calibration, and rendered figures.

use std::f64::consts::{FRAC_PI_4, PI};

use qrtan::analysis::{self, blowup_probe, classify_orbit, BlowupConfig, Coverage, Fate};
use qrtan::itinerary::{self, Itinerary, TailRule};
use qrtan::plane::{calibrate_expansion_radius, PoleIndex};
use qrtan::render::{self, RenderConfig};
use qrtan::{ExtendedPoint, MapParams, PlanePoint, Vec3};

fn params(lambda: f64) -> MapParams {
    MapParams::new(lambda).unwrap()
}

fn escaping_example(p: &MapParams) -> PlanePoint {
    let prefix = [1, 2, 3, 5, 7, 10, 15, 23]
        .map(|n| PoleIndex::new(0, n))
        .to_vec();
    let s = Itinerary::new(
        prefix,
        Some(TailRule::Ray {
            start: PoleIndex::new(0, 35),
            step: (0, 12),
        }),
    );
    itinerary::point_from_itinerary(&s, p, itinerary::DEFAULT_COMPOSE).unwrap()
}

#[test]
fn constructed_point_is_classified_escaping() {
    let p = params(2.0);
    let v = escaping_example(&p);
    let r = classify_orbit(v.to_vec3(), &p, 500, 1e-6);
    assert_eq!(r.fate, Fate::Escaping, "{r:?}");
    assert_eq!(
        classify_orbit(v.to_vec3(), &p, 500, 1e-6),
        r,
        "classification is deterministic"
    );
}

#[test]
fn smaller_eta_needs_at_least_as_many_symbols() {
    let p = params(2.0);
    let v = escaping_example(&p);
    let coarse = itinerary::periodic_near_escaping(v, 1e-3, &p).unwrap();
    let fine = itinerary::periodic_near_escaping(v, 1e-6, &p).unwrap();
    assert!(
        coarse.distance < 1e-3 && fine.distance < 1e-6,
        "{} {}",
        coarse.distance,
        fine.distance
    );
    assert!(fine.n + fine.m >= coarse.n + coarse.m);
    for r in [&coarse, &fine] {
        assert_eq!(r.periodic.period(), r.n + r.m + 1);
        assert!(r.periodic.step_residual < 1e-9);
        for (y, q) in r.periodic.orbit.iter().zip(&r.periodic.poles) {
            assert!(q.diamond().contains(*y));
        }
    }
    println!(
        "η = 1e-3: N = {}, M = {}, distance {:.1e}, literal residual {:.1e}; η = 1e-6: N = {}, M = {}, distance {:.1e}, literal residual {:.1e}",
        coarse.n, coarse.m, coarse.distance, coarse.periodic.literal_residual, fine.n, fine.m, fine.distance, fine.periodic.literal_residual
    );
}

#[test]
fn periodic_near_rejects_non_escaping_points() {
    let p = params(2.0);
    assert!(itinerary::periodic_near_escaping(PlanePoint::new(0.1, 0.1), 1e-3, &p).is_err());
    assert!(itinerary::periodic_near_escaping(escaping_example(&p), 0.0, &p).is_err());
}

#[test]
fn blowup_near_a_pole_covers_targets() {
    let p = params(2.0);
    let pole = PoleIndex::new(0, 0).location();
    let targets = [
        ExtendedPoint::finite(0.0, 0.0, 0.0),
        ExtendedPoint::finite(1.0, -0.5, 0.0),
        ExtendedPoint::finite(0.5, 0.5, 1.0),
        ExtendedPoint::finite(0.0, 0.0, 2.0),
    ];
    let r = blowup_probe(pole, 0.05, &p, &targets, &BlowupConfig::default()).unwrap();
    for (t, c) in &r.targets[..3] {
        let Coverage::Covered { steps, witness } = *c else {
            panic!("{t}: {c:?}")
        };
        assert!(steps <= 4, "{t}: {c:?}");
        assert!(witness.dist(pole.to_vec3()) < 0.05);
        // re-check the witness independently of the probe
        let mut x = ExtendedPoint::Finite(witness);
        for _ in 0..steps {
            x = qrtan::maps::t_eval(x.as_finite().unwrap(), &p);
        }
        assert!(
            x.as_finite().unwrap().dist(t.as_finite().unwrap())
                < BlowupConfig::default().hit_radius,
            "{t}: {x}"
        );
    }
    assert_eq!(r.targets[3].1, Coverage::Omitted);
    assert!(r.all_covered());
}

#[test]
fn blowup_far_from_poles_reports_honestly() {
    // a tiny ball around an attracting fixed point cannot blow up
    let p = params(0.5);
    let cfg = BlowupConfig {
        samples: 500,
        ..BlowupConfig::default()
    };
    let r = blowup_probe(
        PlanePoint::ORIGIN,
        1e-3,
        &p,
        &[ExtendedPoint::finite(3.0, 3.0, 0.0)],
        &cfg,
    )
    .unwrap();
    assert_eq!(r.targets[0].1, Coverage::NotCovered);
    assert!(!r.all_covered());
}

#[test]
fn calibration_examples() {
    let c1 = calibrate_expansion_radius(&params(1.0)).unwrap();
    assert!(c1.eps > 0.0 && c1.eps < FRAC_PI_4);
    assert!(c1.r1 > 1.0 / 2f64.sqrt());
    let eps: Vec<_> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&l| calibrate_expansion_radius(&params(l)).unwrap().eps)
        .collect();
    // observed, not a theorem
    println!("calibrated ε for λ = 0.5, 1, 2: {eps:?}");
}

#[test]
fn third_component_equals_lambda_tanh_on_axis() {
    let p = params(2.0);
    for z in [0.1, 0.5, 1.0, 3.0] {
        let w = qrtan::maps::t_eval(Vec3::new(0.0, 0.0, z), &p)
            .as_finite()
            .unwrap();
        assert!((w.z - 2.0 * z.tanh()).abs() < 1e-14);
    }
    assert!(analysis::third_component_bound_check(2_000, &p));
}

#[test]
fn basin_image_colors_the_petal_set_as_origin() {
    // at λ = 1.1107 the origin is close to parabolic and convergence in the
    // petal is slow: pixels there may stay undecided, but never reach
    // another attractor
    for lambda in [0.9, 1.1107] {
        let cfg = RenderConfig {
            lambda,
            width: 96,
            height: 96,
            ..RenderConfig::default()
        };
        let img = render::render_basin(&cfg).unwrap();
        let mut inside = 0;
        for j in 0..cfg.height {
            for i in 0..cfg.width {
                let q = cfg.pixel_point(i, j);
                if q.x.abs() < FRAC_PI_4
                    && q.y.abs() < FRAC_PI_4
                    && analysis::q_contains(q, lambda).unwrap()
                {
                    inside += 1;
                    let f = img.fates[j * cfg.width + i];
                    let ok = f == Fate::ToOrigin || (lambda > 1.0 && f == Fate::Undecided);
                    assert!(ok, "λ = {lambda}, pixel ({i}, {j}) at {q}: {f:?}");
                }
            }
        }
        assert!(inside > 0);
    }
}

#[test]
fn petal_tips_reach_the_square_corners_near_the_figure_parameter() {
    // along the diagonal the petal reaches |x| = φ(λ/√2), which equals π/4
    // exactly at λ = π√2/4 ≈ 1.1107
    let corner = analysis::petal_bound(1.1107, 1.0).unwrap();
    assert!((corner - FRAC_PI_4).abs() < 1e-3, "{corner}");
    assert!(analysis::petal_bound(0.9, 1.0).unwrap() == FRAC_PI_4);
    assert!(analysis::petal_bound(1.2, 1.0).unwrap() < FRAC_PI_4 - 0.05);
    assert!((PI * 2f64.sqrt() / 4.0 - 1.1107).abs() < 1e-4);
}

#[test]
fn escape_depth_has_zero_plateaus_for_small_lambda() {
    let cfg = RenderConfig {
        lambda: 0.9,
        width: 64,
        height: 64,
        max_iter: 200,
        ..RenderConfig::default()
    };
    let img = render::render_escape_depth(&cfg).unwrap();
    assert!(img.finite_fraction() < 0.5, "{}", img.finite_fraction());
    let cfg2 = RenderConfig { threads: 1, ..cfg };
    assert_eq!(render::render_escape_depth(&cfg2).unwrap().image, img.image);
}
