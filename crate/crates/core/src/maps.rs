//! The Zorich map, the Möbius map `A`, and the quasiregular tangent `T`.
//!
//! `T(x) = A(Z(2x))` where `Z` is the Zorich map built from the bi-Lipschitz
//! chart `h` of the square `[-π/2, π/2]²` onto the closed upper unit
//! hemisphere. On the beam `X = [-π/4, π/4]² × R` the composition has a
//! closed form ([`beam_formula`]); elsewhere `T` is obtained by folding the
//! (x, y) coordinates back into `X` with reflections in the planes
//! `x = π/2 (k + ½)`, `y = π/2 (l + ½)` and inverting the image in the unit
//! sphere when the number of reflections is odd.
//!
//! Everything here is pure and thread-safe.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{ExtendedPoint, Vec3};

/// Tolerance on `‖u‖ = 1` accepted by [`h_inverse`].
pub const UNIT_TOL: f64 = 1e-9;

/// Parameters of the family `T_λ = λ T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    lambda: f64,
}

impl MapParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Input(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(MapParams { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Parity of the number of reflections used by a fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn from_count(k: i64) -> Self {
        if k.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }
}

/// A point folded into the beam `X`, together with the reflections used.
///
/// `tile = (kx, ky)` identifies the square `[kx·π/2 − π/4, kx·π/2 + π/4) ×
/// [ky·π/2 − π/4, ky·π/2 + π/4)` the input lay in; `|kx|` and `|ky|` are the
/// reflection counts in each coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub folded: Vec3,
    pub tile: (i64, i64),
    pub parity: Parity,
}

impl FoldResult {
    /// Applies the recorded reflections to a point of the beam, mapping the
    /// folded representative back to the original point.
    pub fn unfold(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            unfold_axis(p.x, self.tile.0, FRAC_PI_4),
            unfold_axis(p.y, self.tile.1, FRAC_PI_4),
            p.z,
        )
    }
}

/// Folds one coordinate into `[-half, half]` by reflecting in the planes at
/// `half·(2k + 1)`. Tiles are half-open `[lower, upper)`, so a point on a
/// reflection plane belongs to the tile above it and is reflected.
fn fold_axis(x: f64, half: f64) -> (f64, i64) {
    let width = 2.0 * half;
    let k = ((x + half) / width).floor();
    let r = x - k * width;
    let k = k as i64;
    if k.rem_euclid(2) == 0 {
        (r, k)
    } else {
        (-r, k)
    }
}

fn unfold_axis(r: f64, k: i64, half: f64) -> f64 {
    let width = 2.0 * half;
    let base = k as f64 * width;
    if k.rem_euclid(2) == 0 {
        base + r
    } else {
        base - r
    }
}

/// Folds `(x, y)` into `[-π/4, π/4]²`; `z` of the result is 0.
pub fn fold_to_beam(x: f64, y: f64) -> FoldResult {
    fold(Vec3::new(x, y, 0.0))
}

/// Folds the (x, y) coordinates of `v` into `[-π/4, π/4]²`, keeping `z`.
pub fn fold(v: Vec3) -> FoldResult {
    let (fx, kx) = fold_axis(v.x, FRAC_PI_4);
    let (fy, ky) = fold_axis(v.y, FRAC_PI_4);
    FoldResult {
        folded: Vec3::new(fx, fy, v.z),
        tile: (kx, ky),
        parity: Parity::from_count(kx + ky),
    }
}

/// `M(x, y) = max{|x|, |y|}`.
#[inline]
pub fn max_norm(x: f64, y: f64) -> f64 {
    x.abs().max(y.abs())
}

/// The chart `h : [-π/2, π/2]² → upper unit hemisphere`.
pub fn h_map(x: f64, y: f64) -> Result<Vec3> {
    if !(x.abs() <= FRAC_PI_2 && y.abs() <= FRAC_PI_2) {
        return Err(Error::Input(format!(
            "h is defined on [-π/2, π/2]², got ({x}, {y})"
        )));
    }
    Ok(h_unchecked(x, y))
}

fn h_unchecked(x: f64, y: f64) -> Vec3 {
    let m = max_norm(x, y);
    let s = x.hypot(y);
    if s == 0.0 {
        return Vec3::new(0.0, 0.0, 1.0);
    }
    let (sin_m, cos_m) = m.sin_cos();
    Vec3::new(x * sin_m / s, y * sin_m / s, cos_m)
}

/// Inverse of [`h_map`] on the closed upper hemisphere.
pub fn h_inverse(u: Vec3) -> Result<(f64, f64)> {
    if !u.is_finite() || (u.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::Input(format!(
            "h_inverse needs a unit vector, got {u}"
        )));
    }
    if u.z < -UNIT_TOL {
        return Err(Error::Input(format!("h_inverse needs u.z >= 0, got {u}")));
    }
    Ok(chart_point(u))
}

// M = arccos(u.z) computed as atan2 for accuracy near the pole of the chart.
fn chart_point(u: Vec3) -> (f64, f64) {
    let ms = max_norm(u.x, u.y);
    if ms == 0.0 {
        return (0.0, 0.0);
    }
    let m = u.x.hypot(u.y).atan2(u.z.max(0.0));
    (u.x * m / ms, u.y * m / ms)
}

/// The Zorich map `Z(x, y, z) = e^z h(x, y)` extended to R³ by reflections
/// in `x = (k + ½)π`, `y = (l + ½)π` and in the plane `z = 0` of the image.
pub fn zorich(v: Vec3) -> Result<Vec3> {
    if !v.is_finite() {
        return Err(Error::Input(format!(
            "zorich needs a finite point, got {v}"
        )));
    }
    let scale = v.z.exp();
    if !scale.is_finite() {
        return Err(Error::Overflow(format!("e^z overflows for z = {}", v.z)));
    }
    let (fx, kx) = fold_axis(v.x, FRAC_PI_2);
    let (fy, ky) = fold_axis(v.y, FRAC_PI_2);
    let mut w = h_unchecked(fx, fy) * scale;
    if Parity::from_count(kx + ky).is_odd() {
        w.z = -w.z;
    }
    Ok(w)
}

/// The Möbius map `A(x, y, z) = (2rx, 2ry, 1 − 2r(z + 1))`,
/// `r = 1 / (x² + y² + (z + 1)²)`, extended by `A(0, 0, −1) = ∞` and
/// `A(∞) = (0, 0, 1)`.
pub fn mobius_a(p: ExtendedPoint) -> ExtendedPoint {
    match p {
        ExtendedPoint::Infinity => ExtendedPoint::finite(0.0, 0.0, 1.0),
        ExtendedPoint::Finite(v) => {
            let q = Vec3::new(v.x, v.y, v.z + 1.0);
            let d = q.norm_sq();
            if d == 0.0 {
                return ExtendedPoint::Infinity;
            }
            if !d.is_finite() {
                // |v| beyond sqrt(f64::MAX): the image is (0, 0, 1) to working precision.
                let n = q.norm();
                let u = q * (1.0 / n);
                let r = 2.0 / n;
                return ExtendedPoint::finite(r * u.x, r * u.y, 1.0 - r * u.z);
            }
            let r = 2.0 / d;
            ExtendedPoint::finite(r * q.x, r * q.y, 1.0 - r * q.z)
        }
    }
}

/// Inverse of [`mobius_a`].
pub fn mobius_a_inverse(p: ExtendedPoint) -> ExtendedPoint {
    match p {
        ExtendedPoint::Infinity => ExtendedPoint::finite(0.0, 0.0, -1.0),
        ExtendedPoint::Finite(w) => {
            let q = Vec3::new(w.x, w.y, 1.0 - w.z);
            let d = q.norm_sq();
            if d == 0.0 {
                return ExtendedPoint::Infinity;
            }
            if !d.is_finite() {
                let n = q.norm();
                let u = q * (1.0 / n);
                let r = 2.0 / n;
                return ExtendedPoint::finite(r * u.x, r * u.y, r * u.z - 1.0);
            }
            let r = 2.0 / d;
            ExtendedPoint::finite(r * q.x, r * q.y, r * q.z - 1.0)
        }
    }
}

/// Inversion in the unit sphere, `v ↦ v / ‖v‖²`.
pub fn invert_sphere(v: Vec3) -> Result<Vec3> {
    let d = v.norm_sq();
    if d == 0.0 {
        return Err(Error::Input(
            "cannot invert the origin in the unit sphere".into(),
        ));
    }
    if !d.is_finite() {
        let n = v.norm();
        return Ok(v * (1.0 / n) * (1.0 / n));
    }
    Ok(v * (1.0 / d))
}

/// `T` on the beam `X = [-π/4, π/4]² × R`.
///
/// Numerator and denominator are divided by `cosh² z`, so
/// `T₃ = tanh z / (cos² M · sech² z + tanh² z)` and the first two
/// components decay to 0 instead of overflowing for large `|z|`.
pub fn beam_formula(v: Vec3) -> Vec3 {
    let (x, y, z) = (v.x, v.y, v.z);
    let m = max_norm(x, y);
    let (sin_m, cos_m) = m.sin_cos();
    let e = (-2.0 * z.abs()).exp();
    let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
    let tanh = z.tanh();
    let denom = cos_m * cos_m * sech2 + tanh * tanh;
    let third = tanh / denom;
    let s = x.hypot(y);
    if s == 0.0 {
        return Vec3::new(0.0, 0.0, third);
    }
    let radial = cos_m * sin_m * sech2 / denom;
    Vec3::new(x / s * radial, y / s * radial, third)
}

/// `T_λ(v) = λ T(v)` on all of R³; returns ∞ exactly on the pole set.
pub fn t_eval(v: Vec3, params: &MapParams) -> ExtendedPoint {
    let f = fold(v);
    let mut w = beam_formula(f.folded);
    if f.parity.is_odd() {
        match invert_sphere(w) {
            Ok(inv) => w = inv,
            Err(_) => return ExtendedPoint::Infinity,
        }
    }
    ExtendedPoint::Finite(w * params.lambda())
}

/// The preimage of `w` under `T_λ` closest to `near`: the local inverse of
/// `T_λ` around `near`. Preimages of ∞ are the poles; the omitted values
/// `(0, 0, ±λ)` have none.
pub fn t_preimage_near(w: ExtendedPoint, near: Vec3, params: &MapParams) -> Result<Vec3> {
    let lambda = params.lambda();
    let v = match w {
        ExtendedPoint::Infinity => return Ok(nearest_pole(near)),
        ExtendedPoint::Finite(v) => v,
    };
    let u = mobius_a_inverse(ExtendedPoint::Finite(v * (1.0 / lambda)))
        .as_finite()
        .filter(|u| u.norm() > 0.0)
        .ok_or_else(|| Error::Domain(format!("{w} is an omitted value of T_λ")))?;
    // T(p) = λ·A(Z(2p)): |Z(2p)| = e^{2z} fixes the height, the direction
    // fixes the chart point up to the reflection group of the beam
    let r = u.norm();
    let dir = u * (1.0 / r);
    let (a, b) = chart_point(Vec3::new(dir.x, dir.y, dir.z.abs()));
    let c = Vec3::new(0.5 * a, 0.5 * b, 0.5 * r.ln());
    let home = fold(near).tile;
    let mut best: Option<(f64, Vec3)> = None;
    for kx in home.0 - 2..=home.0 + 2 {
        for ky in home.1 - 2..=home.1 + 2 {
            let parity = Parity::from_count(kx + ky);
            let on_hemisphere = if parity.is_odd() {
                dir.z <= 1e-12
            } else {
                dir.z >= -1e-12
            };
            if !on_hemisphere {
                continue;
            }
            let cand = FoldResult {
                folded: c,
                tile: (kx, ky),
                parity,
            }
            .unfold(c);
            let d = cand.dist(near);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, cand));
            }
        }
    }
    let (_, p) = best.ok_or_else(|| Error::Internal(format!("no preimage of {w} near {near}")))?;
    let res = t_eval(p, params).chordal_dist(&w);
    if !(res < 1e-9) {
        return Err(Error::Internal(format!(
            "preimage {p} of {w} has forward residual {res:e}"
        )));
    }
    Ok(p)
}

/// The pole `(aπ/2, bπ/2, 0)`, `a + b` odd, closest to `v`.
fn nearest_pole(v: Vec3) -> Vec3 {
    let (a0, b0) = (
        (v.x / FRAC_PI_2).round() as i64,
        (v.y / FRAC_PI_2).round() as i64,
    );
    let mut best = (f64::INFINITY, Vec3::ZERO);
    for a in a0 - 1..=a0 + 1 {
        for b in b0 - 1..=b0 + 1 {
            if (a + b).rem_euclid(2) == 1 {
                let p = Vec3::new(a as f64 * FRAC_PI_2, b as f64 * FRAC_PI_2, 0.0);
                let d = p.dist(v);
                if d < best.0 {
                    best = (d, p);
                }
            }
        }
    }
    best.1
}

/// `λ · A(Z(2v))` evaluated through the Zorich and Möbius maps directly.
/// Used as an independent route to [`t_eval`]; overflows for `|z| ≳ 354`.
pub fn t_eval_composed(v: Vec3, params: &MapParams) -> Result<ExtendedPoint> {
    let z = zorich(v * 2.0)?;
    Ok(match mobius_a(ExtendedPoint::Finite(z)) {
        ExtendedPoint::Finite(w) => ExtendedPoint::Finite(w * params.lambda()),
        ExtendedPoint::Infinity => ExtendedPoint::Infinity,
    })
}

/// An orbit segment `T_λ(v), T_λ²(v), …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub points: Vec<ExtendedPoint>,
    /// True when the orbit reached ∞ before `n` steps.
    pub truncated: bool,
}

/// Iterates `T_λ` up to `n` times, stopping at the first pole hit.
pub fn iterate(v: Vec3, params: &MapParams, n: usize) -> Result<Orbit> {
    if n == 0 {
        return Err(Error::Input("iterate needs n >= 1".into()));
    }
    let mut points = Vec::with_capacity(n);
    let mut cur = v;
    for _ in 0..n {
        let next = t_eval(cur, params);
        points.push(next);
        match next {
            ExtendedPoint::Finite(w) => cur = w,
            ExtendedPoint::Infinity => {
                return Ok(Orbit {
                    truncated: points.len() < n,
                    points,
                });
            }
        }
    }
    Ok(Orbit {
        points,
        truncated: false,
    })
}
