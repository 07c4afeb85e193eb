//! Dynamics of `T_λ` restricted to the invariant plane `z = 0`.
//!
//! `F_λ(x, y) = T_λ(x, y, 0)` maps the plane onto the plane plus ∞. Its poles
//! sit on the lattice `P = {((n+m)π/2, (n−m+1)π/2)}` and the open L1 balls
//! `W(p)` of radius π/2 around them tile the plane up to the lines
//! `L = {y = ±x + kπ}`. Each `W(q)` carries an inverse branch `S_q` of `F_λ`
//! defined off the diagonal segment `{(x, ±x) : |x| ≤ λ/√2}`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{self, MapParams, Parity};
use crate::point::{ExtendedPoint, PlanePoint, Vec3};
use crate::sampling;

/// L1 radius of a pole diamond.
pub const DIAMOND_RADIUS: f64 = FRAC_PI_2;

/// Samples closer than this to a fold line or a diagonal of the folded
/// square are rejected by [`jacobian_f`].
pub const SMOOTH_MARGIN: f64 = 1e-6;

/// Chordal tolerance of the forward residual check in [`inverse_branch`].
pub const BRANCH_RESIDUAL_TOL: f64 = 1e-9;

/// Integer label `(m, n)` of the pole `((n+m)π/2, (n−m+1)π/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PoleIndex {
    pub m: i64,
    pub n: i64,
}

impl PoleIndex {
    pub const fn new(m: i64, n: i64) -> Self {
        PoleIndex { m, n }
    }

    pub fn location(self) -> PlanePoint {
        pole_location(self)
    }

    pub fn norm(self) -> f64 {
        self.location().norm()
    }

    pub fn diamond(self) -> Diamond {
        Diamond {
            center: self.location(),
        }
    }

    /// Coordinates in units of π/2: `(n + m, n − m + 1)`, whose sum is odd.
    pub fn lattice(self) -> (i64, i64) {
        (self.n + self.m, self.n - self.m + 1)
    }

    /// Inverse of [`PoleIndex::lattice`]; `None` unless `a + b` is odd.
    pub fn from_lattice(a: i64, b: i64) -> Option<Self> {
        if (a + b).rem_euclid(2) != 1 {
            return None;
        }
        Some(PoleIndex {
            n: (a + b - 1) / 2,
            m: (a - b + 1) / 2,
        })
    }
}

impl std::fmt::Display for PoleIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(m={}, n={})", self.m, self.n)
    }
}

pub fn pole_location(idx: PoleIndex) -> PlanePoint {
    PlanePoint::new(
        (idx.n + idx.m) as f64 * FRAC_PI_2,
        (idx.n - idx.m + 1) as f64 * FRAC_PI_2,
    )
}

/// The open L1 ball `W(p)` of radius π/2 around a pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diamond {
    pub center: PlanePoint,
}

impl Diamond {
    pub fn contains(&self, p: PlanePoint) -> bool {
        p.l1_dist(self.center) < DIAMOND_RADIUS
    }

    pub fn contains_closed(&self, p: PlanePoint, tol: f64) -> bool {
        p.l1_dist(self.center) <= DIAMOND_RADIUS + tol
    }
}

/// The pole whose open diamond contains `p`, or `None` on the lines `L`.
pub fn containing_diamond(p: PlanePoint) -> Option<PoleIndex> {
    if !p.is_finite() {
        return None;
    }
    // In units of π/2 the diamonds are |u−a| + |v−b| < 1 with a + b odd,
    // i.e. the rotated coordinates s = u+v, d = u−v lie within 1 of the odd
    // integers a+b = 2n+1 and a−b = 2m−1.
    let u = p.x / FRAC_PI_2;
    let v = p.y / FRAC_PI_2;
    let s = u + v;
    let d = u - v;
    let sn = (s / 2.0).floor();
    let dm = (d / 2.0).floor();
    if s == 2.0 * sn || d == 2.0 * dm {
        return None;
    }
    Some(PoleIndex {
        n: sn as i64,
        m: dm as i64 + 1,
    })
}

/// `F_λ(p) = T_λ(p, 0)`; the image lies in the plane or is ∞.
pub fn f_lambda(p: PlanePoint, params: &MapParams) -> ExtendedPoint {
    maps::t_eval(p.to_vec3(), params)
}

/// [`f_lambda`] as a planar point, `None` at poles.
pub fn f_lambda_planar(p: PlanePoint, params: &MapParams) -> Option<PlanePoint> {
    f_lambda(p, params).planar()
}

/// `F_λ` on the folded square with the given parity: `λ F` (even) or
/// `λ H∘F` (odd), `H` the inversion in the unit circle.
fn folded_map(q: PlanePoint, parity: Parity, lambda: f64) -> Option<PlanePoint> {
    let mut w = maps::beam_formula(q.to_vec3());
    if parity.is_odd() {
        w = maps::invert_sphere(w).ok()?;
    }
    Some(w.plane() * lambda)
}

/// A sampled derivative of `F_λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianSample {
    pub point: PlanePoint,
    /// Row-major `DF_λ(point)`.
    pub matrix: [[f64; 2]; 2],
    pub min_singular_value: f64,
    pub max_singular_value: f64,
    /// Eigenvalues of `matrix` when real, ascending.
    pub eigenvalues: Option<(f64, f64)>,
    pub parity: Parity,
    /// Eigenvalues of the finite-difference derivative of the folded map at
    /// the folded point, ascending.
    pub folded_eigenvalues: Option<(f64, f64)>,
    /// Closed-form eigenvalues at the folded point: `λ tan M/r`,
    /// `λ M sec² M/r` (even) or `λ cot M/r`, `−λ M csc² M/r` (odd), ascending.
    pub closed_form_eigenvalues: Option<(f64, f64)>,
}

/// Distance from the fold image of `p` to the set where `F_λ` is not smooth:
/// the fold lines `|x̂| = π/4`, `|ŷ| = π/4` and the diagonals `|x̂| = |ŷ|`.
pub fn non_smooth_distance(p: PlanePoint) -> f64 {
    let f = maps::fold_to_beam(p.x, p.y).folded;
    let (ax, ay) = (f.x.abs(), f.y.abs());
    let to_fold = (FRAC_PI_4 - ax).min(FRAC_PI_4 - ay);
    let to_diag = (ax - ay).abs() / SQRT_2;
    to_fold.min(to_diag)
}

fn central_difference<F>(f: &F, p: PlanePoint, h: f64) -> Option<[[f64; 2]; 2]>
where
    F: Fn(PlanePoint) -> Option<PlanePoint>,
{
    let fxp = f(PlanePoint::new(p.x + h, p.y))?;
    let fxm = f(PlanePoint::new(p.x - h, p.y))?;
    let fyp = f(PlanePoint::new(p.x, p.y + h))?;
    let fym = f(PlanePoint::new(p.x, p.y - h))?;
    let inv = 1.0 / (2.0 * h);
    Some([
        [(fxp.x - fxm.x) * inv, (fyp.x - fym.x) * inv],
        [(fxp.y - fxm.y) * inv, (fyp.y - fym.y) * inv],
    ])
}

fn frobenius(m: &[[f64; 2]; 2]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

fn mat_sub(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

/// Central differences at step 1e-6, switching to Richardson extrapolation
/// of the 1e-4 and 5e-5 stencils when the 1e-6 and 1e-4 results disagree by
/// more than 1e-3 relative. The wide stencil is only used when it stays
/// clear of the non-smooth set.
fn fd_jacobian<F>(f: &F, p: PlanePoint, clearance: f64) -> Option<[[f64; 2]; 2]>
where
    F: Fn(PlanePoint) -> Option<PlanePoint>,
{
    let fine = central_difference(f, p, 1e-6)?;
    if clearance < 2e-4 {
        return Some(fine);
    }
    let coarse = central_difference(f, p, 1e-4)?;
    if frobenius(&mat_sub(&fine, &coarse)) <= 1e-3 * frobenius(&fine) {
        return Some(fine);
    }
    let half = central_difference(f, p, 5e-5)?;
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = (4.0 * half[i][j] - coarse[i][j]) / 3.0;
        }
    }
    Some(out)
}

/// Singular values `(σ_min, σ_max)` of a 2×2 matrix.
pub fn singular_values(m: &[[f64; 2]; 2]) -> (f64, f64) {
    let [[a, b], [c, d]] = *m;
    // σ_max ± σ_min = sqrt((a ± d)² + (c ∓ b)²)
    let p = (a + d).hypot(c - b);
    let q = (a - d).hypot(c + b);
    let smax = 0.5 * (p + q);
    let smin = 0.5 * (p - q).abs();
    (smin, smax)
}

/// Real eigenvalues of a 2×2 matrix, ascending.
pub fn real_eigenvalues(m: &[[f64; 2]; 2]) -> Option<(f64, f64)> {
    let [[a, b], [c, d]] = *m;
    let half_tr = 0.5 * (a + d);
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    if disc < 0.0 {
        return None;
    }
    let r = disc.sqrt();
    Some((half_tr - r, half_tr + r))
}

fn sorted(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Closed-form eigenvalues of the folded map at a folded point off the axes
/// and diagonals. The dihedral symmetry of the square conjugates every such
/// point to the sector `0 < ŷ < x̂ < π/4`, so only `M` and `r` matter.
pub fn closed_form_eigenvalues(
    folded: PlanePoint,
    parity: Parity,
    lambda: f64,
) -> Option<(f64, f64)> {
    let m = maps::max_norm(folded.x, folded.y);
    let lo = folded.x.abs().min(folded.y.abs());
    if lo == 0.0 || lo == m || m >= FRAC_PI_4 {
        return None;
    }
    let r = folded.x.hypot(folded.y);
    let t = m.tan();
    Some(match parity {
        Parity::Even => sorted(lambda * t / r, lambda * m * (1.0 + t * t) / r),
        Parity::Odd => {
            let s = m.sin();
            sorted(lambda / (t * r), -lambda * m / (s * s * r))
        }
    })
}

/// Samples `DF_λ(p)` by central differences.
///
/// Points within [`SMOOTH_MARGIN`] of the fold lines or diagonals (which
/// includes the poles and zeros) are rejected with [`Error::Domain`].
pub fn jacobian_f(p: PlanePoint, params: &MapParams) -> Result<JacobianSample> {
    let clearance = non_smooth_distance(p);
    if !(clearance > SMOOTH_MARGIN) {
        return Err(Error::Domain(format!(
            "{p} is within {SMOOTH_MARGIN} of the non-smooth set of F"
        )));
    }
    let lambda = params.lambda();
    let f = |q: PlanePoint| f_lambda_planar(q, params);
    let matrix = fd_jacobian(&f, p, clearance)
        .ok_or_else(|| Error::Domain(format!("stencil at {p} touches a pole")))?;
    let (min_sv, max_sv) = singular_values(&matrix);

    let fold = maps::fold_to_beam(p.x, p.y);
    let folded = fold.folded.plane();
    let g = |q: PlanePoint| folded_map(q, fold.parity, lambda);
    let folded_eigenvalues = fd_jacobian(&g, folded, clearance).and_then(|m| real_eigenvalues(&m));

    Ok(JacobianSample {
        point: p,
        matrix,
        min_singular_value: min_sv,
        max_singular_value: max_sv,
        eigenvalues: real_eigenvalues(&matrix),
        parity: fold.parity,
        folded_eigenvalues,
        closed_form_eigenvalues: closed_form_eigenvalues(folded, fold.parity, lambda),
    })
}

/// True when `w` lies on the diagonal segment `{(x, ±x) : |x| ≤ λ/√2}`
/// excluded from the domain of the inverse branches.
pub fn on_excluded_segment(w: PlanePoint, lambda: f64) -> bool {
    w.x.abs() == w.y.abs() && w.x.abs() <= lambda / SQRT_2
}

/// The inverse branch `S_q` of `F_λ` with values in `W(q)`.
///
/// `w` must be planar (`z = 0`) or ∞, and off the excluded diagonal segment.
/// `S_q(∞)` is the pole itself.
pub fn inverse_branch(q: PoleIndex, w: ExtendedPoint, params: &MapParams) -> Result<PlanePoint> {
    let pole = q.location();
    let w = match w {
        ExtendedPoint::Infinity => return Ok(pole),
        ExtendedPoint::Finite(v) => {
            if v.z != 0.0 || !v.is_finite() {
                return Err(Error::Input(format!(
                    "inverse branch needs a finite planar point, got {v}"
                )));
            }
            v.plane()
        }
    };
    let lambda = params.lambda();
    if on_excluded_segment(w, lambda) {
        return Err(Error::Domain(format!(
            "{w} lies on the diagonal segment |x| <= λ/√2 outside the branch domain"
        )));
    }

    // F(p) = A(Z(2p)) with Z(2p) on the unit sphere: pull w/λ back through A,
    // read the chart point off the hemisphere, halve, then unfold into W(q).
    let u = maps::mobius_a_inverse(ExtendedPoint::Finite(Vec3::new(
        w.x / lambda,
        w.y / lambda,
        0.0,
    )))
    .as_finite()
    .ok_or_else(|| Error::Internal(format!("A⁻¹ sent {w} to ∞")))?;
    let (a, b) = q.lattice();
    let target = ExtendedPoint::from(w);
    let mut best: Option<(f64, PlanePoint)> = None;
    for parity in [Parity::Even, Parity::Odd] {
        let hemisphere_ok = match parity {
            Parity::Even => u.z >= -1e-12,
            Parity::Odd => u.z <= 1e-12,
        };
        if !hemisphere_ok {
            continue;
        }
        let chart = chart_on_hemisphere(u);
        let c = PlanePoint::new(0.5 * chart.0, 0.5 * chart.1);
        for kx in a - 2..=a + 2 {
            for ky in b - 2..=b + 2 {
                if ((kx + ky).rem_euclid(2) == 1) != parity.is_odd() {
                    continue;
                }
                let fold = maps::FoldResult {
                    folded: c.to_vec3(),
                    tile: (kx, ky),
                    parity,
                };
                let cand = fold.unfold(c.to_vec3()).plane();
                if cand.l1_dist(pole) > DIAMOND_RADIUS + 1e-12 {
                    continue;
                }
                let res = f_lambda(cand, params).chordal_dist(&target);
                if best.is_none_or(|(r, _)| res < r) {
                    best = Some((res, cand));
                }
            }
        }
    }
    match best {
        Some((res, p)) if res < BRANCH_RESIDUAL_TOL => Ok(p),
        Some((res, p)) => Err(Error::Internal(format!(
            "S_{q}({w}) = {p} has forward residual {res:e}"
        ))),
        None => Err(Error::Internal(format!(
            "no candidate preimage of {w} in W{q}"
        ))),
    }
}

// Chart point of the unit vector reflected into the upper hemisphere.
fn chart_on_hemisphere(u: Vec3) -> (f64, f64) {
    let ms = maps::max_norm(u.x, u.y);
    if ms == 0.0 {
        return (0.0, 0.0);
    }
    let m = u.x.hypot(u.y).atan2(u.z.abs());
    (u.x * m / ms, u.y * m / ms)
}

/// Composition `S_{q_0} ∘ S_{q_1} ∘ … ∘ S_{q_{k-1}}` applied to `w`.
pub fn compose_branches(
    branches: &[PoleIndex],
    w: ExtendedPoint,
    params: &MapParams,
) -> Result<PlanePoint> {
    let mut cur = w;
    let mut out = None;
    for &q in branches.iter().rev() {
        let p = inverse_branch(q, cur, params)?;
        cur = p.into();
        out = Some(p);
    }
    match out {
        Some(p) => Ok(p),
        None => cur
            .planar()
            .ok_or_else(|| Error::Input("empty composition applied to ∞".into())),
    }
}

/// Largest `‖S_q(w₁) − S_q(w₂)‖ / ‖w₁ − w₂‖` over pairs inside `W(p)`.
/// Coincident pairs are skipped; returns 0 when no pair remains.
pub fn branch_contraction(
    q: PoleIndex,
    p: PoleIndex,
    pairs: &[(PlanePoint, PlanePoint)],
    params: &MapParams,
) -> Result<f64> {
    let w = p.diamond();
    let mut worst = 0.0f64;
    for &(a, b) in pairs {
        if !(w.contains(a) && w.contains(b)) {
            return Err(Error::Input(format!("pair ({a}, {b}) is not inside W{p}")));
        }
        let d = a.dist(b);
        if d == 0.0 {
            continue;
        }
        let sa = inverse_branch(q, a.into(), params)?;
        let sb = inverse_branch(q, b.into(), params)?;
        worst = worst.max(sa.dist(sb) / d);
    }
    Ok(worst)
}

/// Smallest `‖F_λ(a) − F_λ(b)‖ / ‖a − b‖` over pairs inside `B(pole, eps)`.
/// Pairs containing the pole itself or coincident points are skipped;
/// returns +∞ when no pair remains.
pub fn pole_neighborhood_expansion(
    p: PoleIndex,
    eps: f64,
    pairs: &[(PlanePoint, PlanePoint)],
    params: &MapParams,
) -> Result<f64> {
    let c = p.location();
    let mut best = f64::INFINITY;
    for &(a, b) in pairs {
        if !(a.dist(c) < eps && b.dist(c) < eps) {
            return Err(Error::Input(format!(
                "pair ({a}, {b}) is not inside B({c}, {eps})"
            )));
        }
        let d = a.dist(b);
        if d == 0.0 {
            continue;
        }
        let (Some(fa), Some(fb)) = (f_lambda_planar(a, params), f_lambda_planar(b, params)) else {
            continue;
        };
        best = best.min(fa.dist(fb) / d);
    }
    Ok(best)
}

/// Radii for the expansion estimates near poles, calibrated by sampling.
///
/// * `delta`: sampled `σ_min(DF_λ) ≥ 2` on `B(p, delta)`;
/// * `r1`: `S_p` maps the circle `‖y‖ = r1` into `B(p, delta)`;
/// * `eps`: `‖F_λ‖ > 2·r1` on `B(p, eps)`, with `eps < π/4`;
/// * `far_radius`: for poles with `‖p‖ > far_radius`, every branch maps
///   `W(p)` into `B(q, eps)` and the closure of `W(p)` avoids the excluded
///   diagonal segment.
///
/// All poles are equivalent under the symmetries of `F_λ`, so the scan uses
/// the pole `(0, π/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub lambda: f64,
    pub delta: f64,
    pub eps: f64,
    pub r1: f64,
    pub far_radius: f64,
}

const SCAN_STEPS: usize = 64;
const SCAN_SAMPLES: usize = 1000;
const RING_SAMPLES: usize = 256;

fn cache() -> &'static RwLock<HashMap<u64, Calibration>> {
    static CACHE: OnceLock<RwLock<HashMap<u64, Calibration>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Calibrated expansion radii for `params`, computed once per λ.
pub fn calibrate_expansion_radius(params: &MapParams) -> Result<Calibration> {
    let key = params.lambda().to_bits();
    if let Some(c) = cache()
        .read()
        .expect("calibration cache poisoned")
        .get(&key)
    {
        return Ok(*c);
    }
    let c = calibrate_uncached(params)?;
    cache()
        .write()
        .expect("calibration cache poisoned")
        .entry(key)
        .or_insert(c);
    Ok(c)
}

fn ring_point(center: PlanePoint, radius: f64, i: usize, n: usize) -> PlanePoint {
    // offset by half a step so the diagonals through the pole are avoided
    let t = std::f64::consts::TAU * (i as f64 + 0.5) / n as f64 + 0.01;
    PlanePoint::new(center.x + radius * t.cos(), center.y + radius * t.sin())
}

/// The sampling scan behind [`calibrate_expansion_radius`], uncached.
pub fn calibrate_uncached(params: &MapParams) -> Result<Calibration> {
    let lambda = params.lambda();
    let pole_idx = PoleIndex::new(0, 0);
    let pole = pole_idx.location();
    let mut rng = sampling::rng(sampling::DEFAULT_SEED);

    let grid = |k: usize| FRAC_PI_4 * 2f64.powf(-(k as f64 + 1.0) / 4.0);

    let mut delta = None;
    'delta: for k in 0..SCAN_STEPS {
        let r = grid(k);
        let ring = (0..RING_SAMPLES).map(|i| ring_point(pole, r * (1.0 - 1e-9), i, RING_SAMPLES));
        let disk: Vec<PlanePoint> = (0..SCAN_SAMPLES)
            .map(|_| sampling::in_disk(&mut rng, pole, r))
            .collect();
        for p in ring.chain(disk) {
            match jacobian_f(p, params) {
                Ok(j) if j.min_singular_value < 2.0 => continue 'delta,
                _ => {}
            }
        }
        delta = Some(r);
        break;
    }
    let delta = delta.ok_or_else(|| {
        Error::Internal(format!("no radius with σ_min >= 2 found for λ = {lambda}"))
    })?;

    let r_base = lambda.max(1.0) * 1.01;
    let mut r1 = None;
    'r1: for k in 0..SCAN_STEPS {
        let r = r_base * 2f64.powf(k as f64 / 4.0);
        for i in 0..SCAN_SAMPLES {
            let y = ring_point(PlanePoint::ORIGIN, r, i, SCAN_SAMPLES);
            let s = inverse_branch(pole_idx, y.into(), params)?;
            if s.dist(pole) >= delta {
                continue 'r1;
            }
        }
        r1 = Some(r);
        break;
    }
    let r1 = r1.ok_or_else(|| Error::Internal(format!("no R1 found for λ = {lambda}")))?;

    let mut eps = None;
    'eps: for k in 0..SCAN_STEPS {
        let r = grid(k);
        let ring = (0..RING_SAMPLES).map(|i| ring_point(pole, r * (1.0 - 1e-9), i, RING_SAMPLES));
        let disk: Vec<PlanePoint> = (0..SCAN_SAMPLES)
            .map(|_| sampling::in_disk(&mut rng, pole, r))
            .collect();
        for p in ring.chain(disk) {
            match f_lambda_planar(p, params) {
                Some(w) if w.norm() <= 2.0 * r1 => continue 'eps,
                _ => {}
            }
        }
        eps = Some(r);
        break;
    }
    let eps = eps.ok_or_else(|| Error::Internal(format!("no eps found for λ = {lambda}")))?;

    // Every point of W(p) has norm > ‖p‖ − π/2, and ‖S_q(w) − q‖ decreases
    // with ‖w‖, so checking the circle of radius R − π/2 suffices.
    let far_base = (lambda + FRAC_PI_2) * 1.01;
    let mut far_radius = None;
    'far: for k in 0..SCAN_STEPS {
        let r = far_base * 2f64.powf(k as f64 / 4.0);
        for i in 0..SCAN_SAMPLES {
            let w = ring_point(PlanePoint::ORIGIN, r - FRAC_PI_2, i, SCAN_SAMPLES);
            let s = inverse_branch(pole_idx, w.into(), params)?;
            if s.dist(pole) >= eps {
                continue 'far;
            }
        }
        far_radius = Some(r);
        break;
    }
    let far_radius = far_radius
        .ok_or_else(|| Error::Internal(format!("no far radius found for λ = {lambda}")))?;

    Ok(Calibration {
        lambda,
        delta,
        eps,
        r1,
        far_radius,
    })
}
