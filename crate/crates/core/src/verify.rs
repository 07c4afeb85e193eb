//! Sampled numerical checks of the structural properties of `T_λ`, shared by
//! the `verify` subcommand and the test suites.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, classify_orbit, Fate};
use crate::error::Result;
use crate::itinerary::{self, Itinerary, PeriodicCycleSpec};
use crate::maps::{self, MapParams};
use crate::plane::{self, calibrate_expansion_radius, inverse_branch, jacobian_f, PoleIndex};
use crate::point::{ExtendedPoint, PlanePoint, Vec3};
use crate::sampling;

/// One line of a verification report. `passed` is `None` for checks that do
/// not apply to the chosen λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: Option<bool>,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed: Some(passed),
            detail,
        }
    }

    fn skip(name: &str, why: &str) -> Self {
        Check {
            name: name.to_string(),
            passed: None,
            detail: why.to_string(),
        }
    }

    pub fn failed(&self) -> bool {
        self.passed == Some(false)
    }

    pub fn status(&self) -> &'static str {
        match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.status(), self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Suite {
    Maps,
    Fixed,
    Monotone,
    Derivatives,
    Branches,
    Itineraries,
    Periodic,
    Petals,
    All,
}

impl Suite {
    pub const NAMES: [(&'static str, Suite); 9] = [
        ("maps", Suite::Maps),
        ("fixed", Suite::Fixed),
        ("monotone", Suite::Monotone),
        ("derivatives", Suite::Derivatives),
        ("branches", Suite::Branches),
        ("itineraries", Suite::Itineraries),
        ("periodic", Suite::Periodic),
        ("petals", Suite::Petals),
        ("all", Suite::All),
    ];

    pub fn parse(s: &str) -> Option<Suite> {
        Self::NAMES.iter().find(|(n, _)| *n == s).map(|&(_, v)| v)
    }
}

/// `tan(a + ib)` as `(re, im)` via `(sin 2a + i sinh 2b)/(cos 2a + cosh 2b)`.
fn complex_tan(a: f64, b: f64) -> Option<(f64, f64)> {
    let d = (2.0 * a).cos() + (2.0 * b).cosh();
    if !(d.is_finite() && d > 0.0) {
        return None;
    }
    Some(((2.0 * a).sin() / d, (2.0 * b).sinh() / d))
}

/// Largest chordal distance between `T(a, 0, b)` (λ = 1) and `tan(a + ib)`
/// over samples in `[−10, 10]²`.
pub fn tangent_embedding_error(samples: usize, seed: u64) -> f64 {
    let params = MapParams::new(1.0).expect("λ = 1 is valid");
    let mut rng = sampling::rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let p = sampling::in_box(&mut rng, -10.0, 10.0);
        let expect = match complex_tan(p.x, p.y) {
            Some((re, im)) => ExtendedPoint::finite(re, 0.0, im),
            None => ExtendedPoint::Infinity,
        };
        let got = maps::t_eval(Vec3::new(p.x, 0.0, p.y), &params);
        worst = worst.max(got.chordal_dist(&expect));
    }
    worst
}

/// Largest chordal defect of π-periodicity in x and y and of equivariance
/// under `x ↦ −x`, `y ↦ −y`, `z ↦ −z` and `(x, y) ↦ (y, x)`.
pub fn symmetry_error(params: &MapParams, samples: usize, seed: u64) -> f64 {
    let mut rng = sampling::rng(seed);
    let t = |v: Vec3| maps::t_eval(v, params);
    let map = |p: ExtendedPoint, f: fn(Vec3) -> Vec3| match p {
        ExtendedPoint::Finite(v) => ExtendedPoint::Finite(f(v)),
        ExtendedPoint::Infinity => ExtendedPoint::Infinity,
    };
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let p = sampling::in_box(&mut rng, -10.0, 10.0);
        let z = sampling::uniform(&mut rng, -3.0, 3.0);
        let v = Vec3::new(p.x, p.y, z);
        let base = t(v);
        let pairs = [
            (t(Vec3::new(v.x + PI, v.y, v.z)), base),
            (t(Vec3::new(v.x, v.y + PI, v.z)), base),
            (
                t(Vec3::new(-v.x, v.y, v.z)),
                map(base, |w| Vec3::new(-w.x, w.y, w.z)),
            ),
            (
                t(Vec3::new(v.x, -v.y, v.z)),
                map(base, |w| Vec3::new(w.x, -w.y, w.z)),
            ),
            (
                t(Vec3::new(v.x, v.y, -v.z)),
                map(base, |w| Vec3::new(w.x, w.y, -w.z)),
            ),
            (
                t(Vec3::new(v.y, v.x, v.z)),
                map(base, |w| Vec3::new(w.y, w.x, w.z)),
            ),
        ];
        for (a, b) in pairs {
            worst = worst.max(a.chordal_dist(&b));
        }
    }
    worst
}

/// Smallest sampled singular value of `DF_λ` over `[−π, π]²`, skipping
/// points near the non-smooth set, with the point where it occurred.
pub fn min_singular_value(params: &MapParams, samples: usize, seed: u64) -> (f64, PlanePoint) {
    let mut rng = sampling::rng(seed);
    let mut best = (f64::INFINITY, PlanePoint::ORIGIN);
    let mut taken = 0;
    while taken < samples {
        let p = sampling::in_box(&mut rng, -PI, PI);
        let Ok(j) = jacobian_f(p, params) else {
            continue;
        };
        taken += 1;
        if j.min_singular_value < best.0 {
            best = (j.min_singular_value, p);
        }
    }
    best
}

/// The poles `(m, n)` with `|m|, |n| ≤ 1`.
pub fn central_poles() -> Vec<PoleIndex> {
    let mut v = Vec::new();
    for m in -1..=1 {
        for n in -1..=1 {
            v.push(PoleIndex::new(m, n));
        }
    }
    v
}

/// The `count` poles of smallest norm exceeding `radius`, ordered by norm.
pub fn far_poles(count: usize, radius: f64) -> Vec<PoleIndex> {
    let mut reach = (radius / FRAC_PI_2).ceil() as i64 + 2;
    loop {
        let mut all = Vec::new();
        for a in -reach..=reach {
            for b in -reach..=reach {
                if let Some(p) = PoleIndex::from_lattice(a, b) {
                    if p.norm() > radius {
                        all.push(p);
                    }
                }
            }
        }
        all.sort_by(|p, q| p.norm().total_cmp(&q.norm()).then(p.cmp(q)));
        // all poles of norm < reach·π/2 are enumerated
        let complete = all
            .iter()
            .take(count)
            .all(|p| p.norm() < reach as f64 * FRAC_PI_2);
        if all.len() >= count && complete {
            all.truncate(count);
            return all;
        }
        reach *= 2;
    }
}

// A random pair inside W(p): half far apart, half 1e-5 apart.
fn diamond_pair<R: rand::Rng>(rng: &mut R, p: PoleIndex, local: bool) -> (PlanePoint, PlanePoint) {
    let c = p.location();
    loop {
        let a = sampling::in_diamond(rng, c, FRAC_PI_2);
        let b = if local {
            let t = sampling::uniform(rng, 0.0, std::f64::consts::TAU);
            a + PlanePoint::new(t.cos(), t.sin()) * 1e-5
        } else {
            sampling::in_diamond(rng, c, FRAC_PI_2)
        };
        if p.diamond().contains(b) {
            return (a, b);
        }
    }
}

/// Largest sampled `‖S_q(a) − S_q(b)‖/‖a − b‖` over pairs in `W(p)` for the
/// given poles `p` (the ratio does not depend on `q` by symmetry; `q` is the
/// pole `(0, π/2)`). Pairs touching the excluded diagonal segment are
/// skipped.
pub fn max_branch_contraction(
    params: &MapParams,
    poles: &[PoleIndex],
    pairs_per_pole: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = sampling::rng(seed);
    let q = PoleIndex::new(0, 0);
    let mut worst = 0.0f64;
    for &p in poles {
        let mut taken = 0;
        while taken < pairs_per_pole {
            let (a, b) = diamond_pair(&mut rng, p, taken % 2 == 0);
            if plane::on_excluded_segment(a, params.lambda())
                || plane::on_excluded_segment(b, params.lambda())
            {
                continue;
            }
            taken += 1;
            worst = worst.max(plane::branch_contraction(q, p, &[(a, b)], params)?);
        }
    }
    Ok(worst)
}

/// Smallest sampled expansion ratio `‖F(a) − F(b)‖/‖a − b‖` on the calibrated
/// balls `B(p, ε)` around the given poles.
pub fn min_pole_expansion(
    params: &MapParams,
    poles: &[PoleIndex],
    pairs_per_pole: usize,
    seed: u64,
) -> Result<f64> {
    let eps = calibrate_expansion_radius(params)?.eps;
    let mut rng = sampling::rng(seed);
    let mut best = f64::INFINITY;
    for &p in poles {
        let c = p.location();
        let pairs: Vec<_> = (0..pairs_per_pole)
            .map(|k| {
                let a = sampling::in_disk(&mut rng, c, eps);
                let b = if k % 2 == 0 {
                    sampling::in_disk(&mut rng, c, eps)
                } else {
                    let t = sampling::uniform(&mut rng, 0.0, std::f64::consts::TAU);
                    let b = a + PlanePoint::new(t.cos(), t.sin()) * 1e-6;
                    if b.dist(c) < eps {
                        b
                    } else {
                        a
                    }
                };
                (a, b)
            })
            .collect();
        best = best.min(plane::pole_neighborhood_expansion(p, eps, &pairs, params)?);
    }
    Ok(best)
}

/// Largest chordal residual `d(F_λ(S_q(w)), w)` over random targets `w`
/// drawn with log-uniform norm in `[1e-3, 1e6]`.
pub fn max_round_trip_residual(
    params: &MapParams,
    poles: &[PoleIndex],
    targets_per_pole: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = sampling::rng(seed);
    let mut worst = 0.0f64;
    for &q in poles {
        let mut taken = 0;
        while taken < targets_per_pole {
            let r = 10f64.powf(sampling::uniform(&mut rng, -3.0, 6.0));
            let t = sampling::uniform(&mut rng, 0.0, std::f64::consts::TAU);
            let w = PlanePoint::new(r * t.cos(), r * t.sin());
            if plane::on_excluded_segment(w, params.lambda()) {
                continue;
            }
            taken += 1;
            let s = inverse_branch(q, w.into(), params)?;
            worst = worst.max(plane::f_lambda(s, params).chordal_dist(&w.into()));
        }
    }
    Ok(worst)
}

/// The ray itinerary `p_j = (m = 0, n = j)`, with the poles below the
/// calibrated far radius placed in the explicit prefix.
pub fn ray_itinerary(params: &MapParams) -> Result<Itinerary> {
    Itinerary::ray(PoleIndex::new(0, 0), (0, 1), params)
}

/// Runs a suite at the given λ.
pub fn run_suite(suite: Suite, params: &MapParams, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let wants = |s: Suite| suite == Suite::All || suite == s;
    let lambda = params.lambda();

    if wants(Suite::Maps) {
        let e = tangent_embedding_error(10_000, seed);
        out.push(Check::new(
            "tangent-embedding",
            e < 1e-10,
            format!("max chordal error {e:.3e} (< 1e-10)"),
        ));
        let e = symmetry_error(params, 2_000, seed);
        out.push(Check::new(
            "periodicity-and-reflections",
            e < 1e-10,
            format!("max chordal defect {e:.3e} (< 1e-10)"),
        ));
    }

    if wants(Suite::Fixed) {
        match analysis::solve_xi0(lambda) {
            Ok(xi) => {
                let r1 = (xi - lambda * xi.tanh()).abs();
                let r2 = match maps::t_eval(Vec3::new(0.0, 0.0, xi), params) {
                    ExtendedPoint::Finite(w) => w.dist(Vec3::new(0.0, 0.0, xi)),
                    ExtendedPoint::Infinity => f64::INFINITY,
                };
                out.push(Check::new(
                    "xi0-residual",
                    r1 < 1e-12 && r2 < 1e-10,
                    format!("ξ₀ = {xi:.12}, |ξ₀ − λ tanh ξ₀| = {r1:.1e}, map residual {r2:.1e}"),
                ));
                let mut rng = sampling::rng(seed);
                let mut bad = 0;
                for _ in 0..200 {
                    let p = sampling::in_box(&mut rng, -3.0, 3.0);
                    let z = sampling::uniform(&mut rng, 0.01, 3.0);
                    if classify_orbit(Vec3::new(p.x, p.y, z), params, 500, 1e-6).fate
                        != Fate::ToUpperFixed
                    {
                        bad += 1;
                    }
                }
                out.push(Check::new(
                    "upper-half-space-basin",
                    bad == 0,
                    format!("{bad}/200 orbits not captured by (0,0,ξ₀)"),
                ));
            }
            Err(_) => {
                let mut rng = sampling::rng(seed);
                let mut bad = 0;
                let mut undecided = 0;
                for _ in 0..200 {
                    let p = sampling::in_box(&mut rng, -3.0, 3.0);
                    let z = sampling::uniform(&mut rng, 0.01, 3.0)
                        * if rng.random::<bool>() { 1.0 } else { -1.0 };
                    match classify_orbit(Vec3::new(p.x, p.y, z), params, 500, 1e-6).fate {
                        Fate::ToOrigin => {}
                        Fate::Undecided if lambda >= 1.0 => undecided += 1,
                        _ => bad += 1,
                    }
                }
                out.push(Check::new(
                    "off-plane-basin-of-origin",
                    bad == 0,
                    format!("{bad}/200 orbits off the plane not captured by 0 ({undecided} slow/undecided)"),
                ));
            }
        }
    }

    if wants(Suite::Monotone) {
        let v = analysis::rho_violations(5_000, params, seed);
        out.push(Check::new(
            "rho-decreasing",
            v == 0,
            format!("{v} violations in 5000 samples"),
        ));
        let v = analysis::third_component_violations(5_000, params, seed);
        out.push(Check::new(
            "third-component-bound",
            v == 0,
            format!("{v} violations in 5000 samples"),
        ));
        let v = analysis::parabolic_violations(0.05, 5_000, seed)?;
        out.push(Check::new(
            "parabolic-decrease",
            v == 0,
            format!("{v} violations in 5000 samples of V (λ = 1, ε = 0.05)"),
        ));
    }

    if wants(Suite::Derivatives) {
        let bound = lambda / SQRT_2 - 0.01;
        let (s, at) = min_singular_value(params, 5_000, seed);
        out.push(Check::new(
            "min-singular-value",
            s >= bound,
            format!("min σ = {s:.4} at {at} (bound λ/√2 − 0.01 = {bound:.4})"),
        ));
        let bound = SQRT_2 / lambda + 0.01;
        let c = max_branch_contraction(params, &central_poles(), 200, seed)?;
        out.push(Check::new(
            "branch-contraction",
            c <= bound,
            format!("max ratio {c:.4} over 9 central poles (bound √2/λ + 0.01 = {bound:.4})"),
        ));
        let e = min_pole_expansion(params, &central_poles(), 200, seed)?;
        out.push(Check::new(
            "pole-expansion",
            e >= 1.99,
            format!("min ratio {e:.4} on calibrated ε-balls (bound 1.99)"),
        ));
    }

    if wants(Suite::Branches) {
        let r = max_round_trip_residual(params, &central_poles(), 200, seed)?;
        out.push(Check::new(
            "branch-round-trip",
            r < 1e-9,
            format!("max chordal residual {r:.2e} (< 1e-9)"),
        ));
        let exact = central_poles()
            .iter()
            .all(|&q| inverse_branch(q, ExtendedPoint::Infinity, params) == Ok(q.location()));
        out.push(Check::new(
            "branch-at-infinity",
            exact,
            "S_q(∞) is the pole itself".into(),
        ));
    }

    if wants(Suite::Itineraries) {
        let s = ray_itinerary(params)?;
        let shadow = itinerary::shadow_orbit(&s, params, 25)?;
        let x = shadow.start();
        let poles = s.poles(21).expect("tail present");
        let depth = itinerary::forward_match_depth(x, &poles, params);
        out.push(Check::new(
            "itinerary-forward-iteration",
            depth >= 21,
            format!("plain iteration reproduces {depth} of 21 symbols"),
        ));
        let res = shadow.max_step_residual(params);
        out.push(Check::new(
            "itinerary-shadow-orbit",
            shadow.verify(params, 20),
            format!(
                "{} diamonds visited, max step residual {res:.1e}",
                shadow.diamonds_visited()
            ),
        ));
        let inc = itinerary::cauchy_increments(&s, params, 24)?;
        let bound_ok = inc
            .iter()
            .enumerate()
            .all(|(k, d)| *d < 2f64.powi(-(k as i32)) * PI);
        let worst_ratio = increment_ratios(&inc).fold(0.0, f64::max);
        out.push(Check::new(
            "cauchy-increments",
            bound_ok && worst_ratio <= 0.6,
            format!(
                "‖x(25) − x(24)‖ = {:.1e}, worst successive ratio {worst_ratio:.3}",
                inc[23]
            ),
        ));
    }

    if wants(Suite::Periodic) {
        let far = calibrate_expansion_radius(params)?.far_radius;
        for k in [1usize, 3, 7] {
            let c = PeriodicCycleSpec::new(far_poles(k, far))?;
            let y = itinerary::periodic_point_from_cycle(&c, params)?;
            out.push(Check::new(
                &format!("periodic-{k}-literal"),
                y.literal_residual < 1e-9,
                format!("‖F^{k}(y₀) − y₀‖ = {:.2e} (< 1e-9)", y.literal_residual),
            ));
            out.push(Check::new(
                &format!("periodic-{k}-per-step"),
                y.step_residual < 1e-9,
                format!(
                    "max chordal d(F(y_j), y_(j+1)) = {:.2e} (< 1e-9)",
                    y.step_residual
                ),
            ));
        }
    }

    if wants(Suite::Petals) {
        if lambda > std::f64::consts::FRAC_PI_4 && lambda < SQRT_2 {
            let r = analysis::petal_fixed_boundary_check(lambda, 100)?;
            out.push(Check::new(
                "petal-boundary-fixed",
                r < 1e-9,
                format!("max ‖T(p) − p‖ = {r:.2e} (< 1e-9)"),
            ));
        } else {
            out.push(Check::skip("petal-boundary-fixed", "needs π/4 < λ < √2"));
        }
        if lambda < SQRT_2 {
            let mut rng = sampling::rng(seed);
            let mut bad = 0;
            let mut taken = 0;
            while taken < 500 {
                let p = sampling::in_box(
                    &mut rng,
                    -std::f64::consts::FRAC_PI_4,
                    std::f64::consts::FRAC_PI_4,
                );
                if !analysis::q_contains(p, lambda)? {
                    continue;
                }
                taken += 1;
                if classify_orbit(p.to_vec3(), params, 2_000, 1e-6).fate != Fate::ToOrigin {
                    bad += 1;
                }
            }
            out.push(Check::new(
                "petal-in-basin",
                bad == 0,
                format!("{bad}/500 petal points not captured by 0"),
            ));
        } else {
            out.push(Check::skip("petal-in-basin", "needs λ < √2"));
        }
    }

    Ok(out)
}

/// Ratios `Δ_{n+1}/Δ_n` of successive increments, skipping those whose
/// denominator has already reached 0 (both points equal in f64).
pub fn increment_ratios(inc: &[f64]) -> impl Iterator<Item = f64> + '_ {
    inc.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0])
}
