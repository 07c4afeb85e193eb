//! Fixed points, the monotone quantity ρ, the petal set Q, orbit fates and
//! the blow-up probe.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{self, MapParams};
use crate::plane::containing_diamond;
use crate::point::{ExtendedPoint, PlanePoint, Vec3};
use crate::sampling;

/// Newton polish of a bracketed root: only steps that stay inside the
/// bracket and reduce |g| are accepted.
fn polish<G, D>(mut x: f64, lo: f64, hi: f64, g: G, dg: D) -> f64
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    for _ in 0..8 {
        let gx = g(x);
        if gx == 0.0 {
            break;
        }
        let next = x - gx / dg(x);
        if !(next > lo && next < hi) || g(next).abs() >= gx.abs() {
            break;
        }
        x = next;
    }
    x
}

/// Bisection for a root of `g` with `g(lo) > 0 > g(hi)` or the reverse.
fn bisect<G: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, g: G) -> f64 {
    let lo_sign = g(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The positive solution ξ₀ of `ξ = λ tanh ξ`, the height of the attracting
/// fixed points `(0, 0, ±ξ₀)`. Only defined for `λ > 1`.
pub fn solve_xi0(lambda: f64) -> Result<f64> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "ξ = λ tanh ξ has no positive solution for λ = {lambda}"
        )));
    }
    let g = |x: f64| lambda * x.tanh() - x;
    // λ tanh t − t > (λ − 1)t − λt³/3 > 0 whenever t² < 3(λ − 1)/λ
    let lo = (0.5 * (3.0 * (lambda - 1.0) / lambda).sqrt()).min(1.0);
    let hi = lambda;
    let x = bisect(lo, hi, g);
    Ok(polish(x, lo, hi, g, |x| {
        let c = x.cosh();
        lambda / (c * c) - 1.0
    }))
}

/// The smallest positive fixed point of `x ↦ μ tan x`, for `0 < μ < 1`.
pub fn solve_phi(mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Domain(format!("φ(μ) needs 0 < μ < 1, got {mu}")));
    }
    let g = |x: f64| mu * x.tan() - x;
    // μ tan x − x < 0 while x² < 3(1 − μ)/μ, and μ tan(hi) = π/2 > hi
    let lo = (0.5 * (3.0 * (1.0 - mu) / mu).sqrt()).min(1e-3);
    let hi = (FRAC_PI_2 / mu).atan();
    let x = bisect(lo, hi, g);
    Ok(polish(x, lo, hi, g, |x| {
        let c = x.cos();
        mu / (c * c) - 1.0
    }))
}

/// `ρ(x, y, z) = M(x, y)/z` on the upper half-space.
pub fn rho(v: Vec3) -> Result<f64> {
    if !(v.z > 0.0) {
        return Err(Error::Domain(format!("ρ needs z > 0, got {v}")));
    }
    Ok(maps::max_norm(v.x, v.y) / v.z)
}

/// Membership in the petal set `Q = Q₁ ∪ Q₂`, a union of diagonal sectors
/// `(x, αx)` / `(αy, y)` with `λ² − 1 < α² ≤ 1` cut off at
/// `min(π/4, φ(λ/√(1 + α²)))`. Requires `0 < λ < √2`.
pub fn q_contains(p: PlanePoint, lambda: f64) -> Result<bool> {
    if !(lambda > 0.0 && lambda < SQRT_2) {
        return Err(Error::Domain(format!(
            "the petal set is defined for 0 < λ < √2, got {lambda}"
        )));
    }
    if !p.is_finite() {
        return Ok(false);
    }
    let (lead, other) = if p.x.abs() >= p.y.abs() {
        (p.x, p.y)
    } else {
        (p.y, p.x)
    };
    if lead == 0.0 {
        return Ok(true);
    }
    let alpha_sq = (other / lead).powi(2);
    if alpha_sq <= lambda * lambda - 1.0 {
        return Ok(false);
    }
    Ok(lead.abs() < petal_bound(lambda, alpha_sq)?)
}

/// `min(π/4, φ(λ/√(1 + α²)))`, the extent of the petal along slope α.
pub fn petal_bound(lambda: f64, alpha_sq: f64) -> Result<f64> {
    let mu = lambda / (1.0 + alpha_sq).sqrt();
    if mu <= FRAC_PI_4 {
        // φ is decreasing with φ(π/4) = π/4
        return Ok(FRAC_PI_4);
    }
    Ok(solve_phi(mu)?.min(FRAC_PI_4))
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum Fate {
    ToUpperFixed,
    ToLowerFixed,
    ToOrigin,
    Escaping,
    PoleHit,
    #[default]
    Undecided,
}

impl Fate {
    pub const ALL: [Fate; 6] = [
        Fate::ToUpperFixed,
        Fate::ToLowerFixed,
        Fate::ToOrigin,
        Fate::Escaping,
        Fate::PoleHit,
        Fate::Undecided,
    ];

    pub fn is_convergent(self) -> bool {
        matches!(
            self,
            Fate::ToUpperFixed | Fate::ToLowerFixed | Fate::ToOrigin
        )
    }
}

/// Outcome of [`classify_orbit`].
///
/// `iterations` counts applications of `T_λ`; `residual` is the distance from
/// `witness` (the last iterate computed) to the nearest attracting target,
/// or +∞ when the witness is ∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FateRecord {
    pub fate: Fate,
    pub iterations: usize,
    pub residual: f64,
    pub witness: ExtendedPoint,
}

/// Parameters of [`classify_orbit_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// Consecutive steps within `tol` needed to declare convergence.
    pub settle: usize,
    /// Consecutive strict increases of the pole-center norm needed to
    /// declare escape.
    pub escape_streak: usize,
    /// Norm the orbit must exceed when escape is declared.
    pub escape_radius: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            max_iter: 500,
            tol: 1e-6,
            settle: 3,
            escape_streak: 8,
            escape_radius: 50.0,
        }
    }
}

/// The attracting targets of `T_λ`: the origin, plus `(0, 0, ±ξ₀)` when `λ > 1`.
pub fn attracting_targets(params: &MapParams) -> Vec<(Fate, Vec3)> {
    let mut t = vec![(Fate::ToOrigin, Vec3::ZERO)];
    if let Ok(xi) = solve_xi0(params.lambda()) {
        t.push((Fate::ToUpperFixed, Vec3::new(0.0, 0.0, xi)));
        t.push((Fate::ToLowerFixed, Vec3::new(0.0, 0.0, -xi)));
    }
    t
}

/// Classifies the forward orbit of `v` under `T_λ` with default settle and
/// escape parameters.
pub fn classify_orbit(v: Vec3, params: &MapParams, max_iter: usize, tol: f64) -> FateRecord {
    classify_orbit_with(
        v,
        params,
        &ClassifyConfig {
            max_iter,
            tol,
            ..ClassifyConfig::default()
        },
    )
}

/// As [`classify_orbit`], with precomputed targets (avoids re-solving ξ₀
/// per pixel).
pub fn classify_orbit_targets(
    v: Vec3,
    params: &MapParams,
    cfg: &ClassifyConfig,
    targets: &[(Fate, Vec3)],
) -> FateRecord {
    let nearest = |w: Vec3| -> (Fate, f64) {
        targets.iter().map(|&(f, t)| (f, w.dist(t))).fold(
            (Fate::Undecided, f64::INFINITY),
            |a, b| if b.1 < a.1 { b } else { a },
        )
    };

    let mut cur = v;
    let mut settle = (Fate::Undecided, 0usize);
    let mut streak = 0usize;
    let mut last_center_norm = escape_center_norm(v);

    for n in 1..=cfg.max_iter {
        let w = match maps::t_eval(cur, params) {
            ExtendedPoint::Infinity => {
                return FateRecord {
                    fate: Fate::PoleHit,
                    iterations: n,
                    residual: f64::INFINITY,
                    witness: ExtendedPoint::Infinity,
                }
            }
            ExtendedPoint::Finite(w) => w,
        };
        if !w.is_finite() {
            return FateRecord {
                fate: Fate::Undecided,
                iterations: n,
                residual: f64::INFINITY,
                witness: w.into(),
            };
        }

        let (target, dist) = nearest(w);
        if dist < cfg.tol {
            settle = if settle.0 == target {
                (target, settle.1 + 1)
            } else {
                (target, 1)
            };
            if settle.1 >= cfg.settle {
                return FateRecord {
                    fate: target,
                    iterations: n,
                    residual: dist,
                    witness: w.into(),
                };
            }
        } else {
            settle = (Fate::Undecided, 0);
        }

        let center = escape_center_norm(w);
        streak = match (last_center_norm, center) {
            (Some(a), Some(b)) if b > a => streak + 1,
            _ => 0,
        };
        last_center_norm = center;
        if streak >= cfg.escape_streak && w.norm() > cfg.escape_radius {
            return FateRecord {
                fate: Fate::Escaping,
                iterations: n,
                residual: dist,
                witness: w.into(),
            };
        }

        cur = w;
    }
    let (_, dist) = nearest(cur);
    FateRecord {
        fate: Fate::Undecided,
        iterations: cfg.max_iter,
        residual: dist,
        witness: cur.into(),
    }
}

/// Classifies with an explicit configuration.
pub fn classify_orbit_with(v: Vec3, params: &MapParams, cfg: &ClassifyConfig) -> FateRecord {
    classify_orbit_targets(v, params, cfg, &attracting_targets(params))
}

// Norm of the pole whose diamond holds a planar point.
fn escape_center_norm(w: Vec3) -> Option<f64> {
    if w.z != 0.0 {
        return None;
    }
    containing_diamond(w.plane()).map(|q| q.norm())
}

/// Largest `‖T_λ(p) − p‖` over points `(x, αx)` and `(αx, x)` of the
/// boundary of Q inside the open square, for `π/4 < λ < √2`; `samples`
/// slopes are taken evenly in α² ∈ (λ² − 1, 1].
///
/// For `λ ≤ π/4` the boundary lies outside the square and the result is 0.
pub fn petal_fixed_boundary_check(lambda: f64, samples: usize) -> Result<f64> {
    if !(lambda > 0.0 && lambda < SQRT_2) {
        return Err(Error::Domain(format!(
            "the petal set is defined for 0 < λ < √2, got {lambda}"
        )));
    }
    let params = MapParams::new(lambda)?;
    let lo = (lambda * lambda - 1.0).max(0.0);
    let mut worst = 0.0f64;
    for i in 0..samples {
        let alpha_sq = lo + (1.0 - lo) * (i as f64 + 1.0) / samples as f64;
        let mu = lambda / (1.0 + alpha_sq).sqrt();
        if mu <= FRAC_PI_4 {
            continue;
        }
        let x = solve_phi(mu)?;
        if x >= FRAC_PI_4 {
            continue;
        }
        let a = alpha_sq.sqrt();
        for (sx, sa) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let u = sx * x;
            let w = sa * a * u;
            for p in [Vec3::new(u, w, 0.0), Vec3::new(w, u, 0.0)] {
                let d = match maps::t_eval(p, &params) {
                    ExtendedPoint::Finite(t) => t.dist(p),
                    ExtendedPoint::Infinity => f64::INFINITY,
                };
                worst = worst.max(d);
            }
        }
    }
    Ok(worst)
}

/// The region `V = {M(x, y) < z/2 < ε}` of the parabolic estimate.
pub fn in_parabolic_region(v: Vec3, eps: f64) -> bool {
    maps::max_norm(v.x, v.y) < 0.5 * v.z && 0.5 * v.z < eps
}

/// Whether `(T₁)₃(v) ≤ z − z³/24` at a point of V (λ = 1).
pub fn parabolic_decrease_holds(v: Vec3, eps: f64) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(Error::Input(format!("ε must be positive, got {eps}")));
    }
    if !in_parabolic_region(v, eps) {
        return Err(Error::Domain(format!("{v} is not in V with ε = {eps}")));
    }
    let params = MapParams::new(1.0)?;
    let z = v.z;
    Ok(match maps::t_eval(v, &params) {
        ExtendedPoint::Finite(t) => t.z <= z - z * z * z / 24.0,
        ExtendedPoint::Infinity => false,
    })
}

/// Number of sampled points of V violating the parabolic estimate at λ = 1.
pub fn parabolic_violations(eps: f64, samples: usize, seed: u64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::Input(format!("ε must be positive, got {eps}")));
    }
    let mut rng = sampling::rng(seed);
    let mut bad = 0;
    for _ in 0..samples {
        let z = loop {
            let z = sampling::uniform(&mut rng, 0.0, 2.0 * eps);
            if z > 0.0 {
                break z;
            }
        };
        let m = 0.5 * z;
        let v = Vec3::new(
            sampling::uniform(&mut rng, -m, m) * (1.0 - 1e-12),
            sampling::uniform(&mut rng, -m, m) * (1.0 - 1e-12),
            z,
        );
        if !parabolic_decrease_holds(v, eps)? {
            bad += 1;
        }
    }
    Ok(bad)
}

/// Samples V and reports whether the parabolic estimate held everywhere.
pub fn parabolic_decrease_check(eps: f64, samples: usize) -> Result<bool> {
    Ok(parabolic_violations(eps, samples, sampling::DEFAULT_SEED)? == 0)
}

/// Number of samples with `z ∈ (0, 5)`, `(x, y) ∈ [−10, 10]²` violating
/// `(T_λ)₃ ≥ λ tanh z` (and, for `λ > 1`, `λ tanh z ≥ min(z, ξ₀)`), each
/// with slack 1e-12.
pub fn third_component_violations(samples: usize, params: &MapParams, seed: u64) -> usize {
    let lambda = params.lambda();
    let xi0 = solve_xi0(lambda).ok();
    let mut rng = sampling::rng(seed);
    let mut bad = 0;
    for _ in 0..samples {
        let p = sampling::in_box(&mut rng, -10.0, 10.0);
        let z = sampling::uniform(&mut rng, 0.0, 5.0).max(f64::MIN_POSITIVE);
        let lower = lambda * z.tanh();
        let ok = match maps::t_eval(Vec3::new(p.x, p.y, z), params) {
            ExtendedPoint::Finite(t) => t.z >= lower - 1e-12,
            ExtendedPoint::Infinity => false,
        };
        let ok2 = xi0.is_none_or(|xi| lower >= z.min(xi) - 1e-12);
        if !(ok && ok2) {
            bad += 1;
        }
    }
    bad
}

pub fn third_component_bound_check(samples: usize, params: &MapParams) -> bool {
    third_component_violations(samples, params, sampling::DEFAULT_SEED) == 0
}

/// Number of samples `v` with `z ∈ (0, 5)`, `(x, y) ∈ [−10, 10]²`,
/// `M(x, y) ≠ 0` where `ρ(T_λ(v)) < ρ(v)` fails.
pub fn rho_violations(samples: usize, params: &MapParams, seed: u64) -> usize {
    let mut rng = sampling::rng(seed);
    let mut bad = 0;
    let mut taken = 0;
    while taken < samples {
        let p = sampling::in_box(&mut rng, -10.0, 10.0);
        let z = sampling::uniform(&mut rng, 0.0, 5.0);
        if z <= 0.0 || maps::max_norm(p.x, p.y) == 0.0 {
            continue;
        }
        taken += 1;
        let v = Vec3::new(p.x, p.y, z);
        let before = rho(v).expect("z > 0");
        let ok = match maps::t_eval(v, params) {
            ExtendedPoint::Finite(t) => rho(t).is_ok_and(|after| after < before),
            ExtendedPoint::Infinity => false,
        };
        if !ok {
            bad += 1;
        }
    }
    bad
}

/// Largest observed `‖T_λ(y) − c‖ / ‖y − c‖` over samples of `B(c, radius)`:
/// an empirical contraction constant at a fixed point `c`.
pub fn fitted_contraction(
    c: Vec3,
    radius: f64,
    params: &MapParams,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = sampling::rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let y = sampling::in_ball(&mut rng, c, radius);
        let d = y.dist(c);
        if d == 0.0 {
            continue;
        }
        let r = match maps::t_eval(y, params) {
            ExtendedPoint::Finite(t) => t.dist(c) / d,
            ExtendedPoint::Infinity => f64::INFINITY,
        };
        worst = worst.max(r);
    }
    worst
}

/// Settings for [`blowup_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupConfig {
    pub samples: usize,
    pub max_steps: usize,
    pub hit_radius: f64,
    pub seed: u64,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        BlowupConfig {
            samples: 20_000,
            max_steps: 4,
            hit_radius: 0.05,
            seed: sampling::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Coverage {
    /// `T_λ^steps(witness)` lies within the hit radius, with `witness` in
    /// the probed ball.
    Covered { steps: usize, witness: Vec3 },
    /// Neither a sample nor a pulled-back witness hit within `max_steps`.
    NotCovered,
    /// The target is one of the omitted values `(0, 0, ±λ)`.
    Omitted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub targets: Vec<(ExtendedPoint, Coverage)>,
}

impl BlowupReport {
    pub fn all_covered(&self) -> bool {
        self.targets
            .iter()
            .all(|(_, c)| !matches!(c, Coverage::NotCovered))
    }
}

/// Probes how fast the ball `U = B(center, radius)` in R³ spreads over
/// R³ ∪ {∞}: for each target `t`, the smallest `m ≤ max_steps` with a
/// certified point `x ∈ U`, `d(T_λ^m(x), t) < hit_radius` (Euclidean for
/// finite targets, chordal for ∞).
///
/// A point is certified in one of two ways: a forward sample lands on `t`,
/// or a witness is built backwards. For the latter, the sample image in
/// `T_λ^{m−1}(U)` of largest norm — a point of the large-norm beam when `U`
/// meets the backward orbit of ∞ — is replaced by the preimage of `t` in
/// its period cell, which is pulled back along that sample's orbit with the
/// local inverses of `T_λ`. The witness must land in `U` and its forward
/// orbit must hit `t`. The omitted values `(0, 0, ±λ)` are reported as such.
pub fn blowup_probe(
    center: PlanePoint,
    radius: f64,
    params: &MapParams,
    targets: &[ExtendedPoint],
    cfg: &BlowupConfig,
) -> Result<BlowupReport> {
    if !(radius > 0.0) {
        return Err(Error::Input(format!(
            "probe radius must be positive, got {radius}"
        )));
    }
    let lambda = params.lambda();
    let omitted = |t: &ExtendedPoint| match t {
        ExtendedPoint::Finite(v) => v.x == 0.0 && v.y == 0.0 && (v.z.abs() - lambda).abs() < 1e-12,
        ExtendedPoint::Infinity => false,
    };
    let mut result: Vec<(ExtendedPoint, Coverage)> = targets
        .iter()
        .map(|t| {
            (
                *t,
                if omitted(t) {
                    Coverage::Omitted
                } else {
                    Coverage::NotCovered
                },
            )
        })
        .collect();

    let c = center.to_vec3();
    let mut rng = sampling::rng(cfg.seed);
    let starts: Vec<Vec3> = std::iter::once(c)
        .chain((0..cfg.samples).map(|_| sampling::in_ball(&mut rng, c, radius)))
        .collect();
    let in_ball = |x: Vec3| x.dist(c) < radius;
    let hit = |p: &ExtendedPoint, t: &ExtendedPoint| match (p, t) {
        (ExtendedPoint::Finite(a), ExtendedPoint::Finite(b)) => a.dist(*b) < cfg.hit_radius,
        _ => p.chordal_dist(t) < cfg.hit_radius,
    };
    let forward = |x: Vec3, m: usize| -> ExtendedPoint {
        let mut cur = ExtendedPoint::Finite(x);
        for _ in 0..m {
            match cur {
                ExtendedPoint::Finite(v) => cur = maps::t_eval(v, params),
                ExtendedPoint::Infinity => break,
            }
        }
        cur
    };
    // pulls w back along the first `m` points of the orbit of x0
    let pull_back = |x0: Vec3, m: usize, w: ExtendedPoint| -> Option<Vec3> {
        let mut orbit = vec![x0];
        for _ in 1..m {
            orbit.push(maps::t_eval(*orbit.last()?, params).as_finite()?);
        }
        let mut cur = w;
        for near in orbit.iter().rev() {
            cur = maps::t_preimage_near(cur, *near, params).ok()?.into();
        }
        cur.as_finite()
    };

    // `prev[i]` = T^{m−1}(starts[i])
    let mut prev: Vec<ExtendedPoint> = starts.iter().map(|&x| x.into()).collect();
    for m in 1..=cfg.max_steps {
        let cur: Vec<ExtendedPoint> = prev
            .iter()
            .map(|p| match p {
                ExtendedPoint::Finite(v) => maps::t_eval(*v, params),
                ExtendedPoint::Infinity => ExtendedPoint::Infinity,
            })
            .collect();
        // anchor orbits: the center's and the one reaching furthest out
        let far = prev
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.as_finite().map(|v| (i, v.norm())))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i);
        for (t, cov) in result.iter_mut() {
            if !matches!(cov, Coverage::NotCovered) {
                continue;
            }
            if let Some(i) = cur.iter().position(|p| hit(p, t)) {
                *cov = Coverage::Covered {
                    steps: m,
                    witness: starts[i],
                };
                continue;
            }
            for i in [Some(0), far].into_iter().flatten() {
                let Some(s) = prev[i].as_finite() else {
                    continue;
                };
                let Ok(w) = maps::t_preimage_near(*t, s, params) else {
                    continue;
                };
                let Some(x) = (if m == 1 {
                    Some(w)
                } else {
                    pull_back(starts[i], m - 1, w.into())
                }) else {
                    continue;
                };
                if in_ball(x) && hit(&forward(x, m), t) {
                    *cov = Coverage::Covered {
                        steps: m,
                        witness: x,
                    };
                    break;
                }
            }
        }
        if result
            .iter()
            .all(|(_, c)| !matches!(c, Coverage::NotCovered))
        {
            break;
        }
        prev = cur;
    }
    Ok(BlowupReport { targets: result })
}
