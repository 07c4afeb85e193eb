//! Symbolic dynamics of the escaping set: itineraries through pole
//! diamonds, points with prescribed itineraries, and periodic points.
//!
//! Forward iteration near poles is badly conditioned: each step multiplies
//! errors by roughly `‖p‖²/λ` where `p` is the next pole visited, so a
//! double-precision orbit read by plain iteration loses its itinerary after
//! a handful of symbols. Besides plain forward iteration, every
//! construction here therefore also carries its *shadow orbit* — the
//! sequence `y_j = S_{p_j} ∘ … ∘ S_{p_{n−1}}(p_n)` built from the inverse
//! branches — together with the per-step residual `d(F_λ(y_j), y_{j+1})`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::{classify_orbit_with, ClassifyConfig, Fate};
use crate::error::{Error, Result};
use crate::maps::MapParams;
use crate::plane::{
    self, calibrate_expansion_radius, containing_diamond, f_lambda, inverse_branch, PoleIndex,
};
use crate::point::{ExtendedPoint, PlanePoint};

/// Default number of composed branches used by [`point_from_itinerary`].
pub const DEFAULT_COMPOSE: usize = 30;

/// Chordal tolerance of a single step of a shadow orbit.
pub const STEP_TOL: f64 = 1e-9;

/// Rule producing the poles after the explicit prefix of an [`Itinerary`].
#[derive(Clone)]
pub enum TailRule {
    /// `start + i·step` in `(m, n)` coordinates.
    Ray { start: PoleIndex, step: (i64, i64) },
    /// Arbitrary generator, called with the index into the tail.
    Custom(Arc<dyn Fn(usize) -> PoleIndex + Send + Sync>),
}

impl TailRule {
    pub fn pole(&self, i: usize) -> PoleIndex {
        match self {
            TailRule::Ray { start, step } => {
                let i = i as i64;
                PoleIndex::new(start.m + i * step.0, start.n + i * step.1)
            }
            TailRule::Custom(f) => f(i),
        }
    }
}

impl fmt::Debug for TailRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailRule::Ray { start, step } => f
                .debug_struct("Ray")
                .field("start", start)
                .field("step", step)
                .finish(),
            TailRule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A sequence of poles: a finite prefix followed by an optional tail rule.
#[derive(Debug, Clone)]
pub struct Itinerary {
    pub prefix: Vec<PoleIndex>,
    pub tail: Option<TailRule>,
}

impl Itinerary {
    pub fn new(prefix: Vec<PoleIndex>, tail: Option<TailRule>) -> Self {
        Itinerary { prefix, tail }
    }

    /// The ray `p_j = start + j·step`. Poles up to the last one inside the
    /// calibrated far radius form the explicit prefix; the rest is the tail.
    pub fn ray(start: PoleIndex, step: (i64, i64), params: &MapParams) -> Result<Self> {
        if step == (0, 0) {
            return Err(Error::Input("a ray itinerary needs a nonzero step".into()));
        }
        let far = calibrate_expansion_radius(params)?.far_radius;
        let rule = TailRule::Ray { start, step };
        // the pole norm is convex along the ray, so the near poles form an
        // interval of indices
        let mut split = 0;
        let mut j = 0;
        loop {
            let (a, b) = (rule.pole(j).norm(), rule.pole(j + 1).norm());
            if a <= far {
                split = j + 1;
            } else if b > a {
                break;
            }
            j += 1;
        }
        let prefix = (0..split).map(|j| rule.pole(j)).collect();
        Ok(Itinerary::new(
            prefix,
            Some(TailRule::Ray {
                start: rule.pole(split),
                step,
            }),
        ))
    }

    /// A finite itinerary without a tail, as read off an orbit.
    pub fn finite(prefix: Vec<PoleIndex>) -> Self {
        Itinerary { prefix, tail: None }
    }

    pub fn pole(&self, j: usize) -> Option<PoleIndex> {
        match self.prefix.get(j) {
            Some(p) => Some(*p),
            None => self.tail.as_ref().map(|t| t.pole(j - self.prefix.len())),
        }
    }

    /// The first `n` poles, or `None` when a finite itinerary is too short.
    pub fn poles(&self, n: usize) -> Option<Vec<PoleIndex>> {
        (0..n).map(|j| self.pole(j)).collect()
    }
}

/// Why [`itinerary_of`] stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    /// All requested symbols were read.
    Complete,
    /// The iterate with this index lies on a diamond boundary or off the
    /// plane, so the point is not escaping.
    LeftDiamonds { index: usize, point: ExtendedPoint },
    /// The iterate with this index is ∞.
    PoleHit { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadItinerary {
    pub poles: Vec<PoleIndex>,
    pub stop: StopReason,
}

/// Reads `Φ(v)`: the diamonds visited by `v, F_λ(v), F_λ²(v), …` under plain
/// forward iteration, up to `n_terms` symbols.
pub fn itinerary_of(v: PlanePoint, params: &MapParams, n_terms: usize) -> ReadItinerary {
    let mut poles = Vec::with_capacity(n_terms);
    let mut cur = ExtendedPoint::from(v);
    for index in 0..n_terms {
        let p = match cur {
            ExtendedPoint::Infinity => {
                return ReadItinerary {
                    poles,
                    stop: StopReason::PoleHit { index },
                }
            }
            ExtendedPoint::Finite(w) => w,
        };
        let q = if p.z == 0.0 {
            containing_diamond(p.plane())
        } else {
            None
        };
        let Some(q) = q else {
            return ReadItinerary {
                poles,
                stop: StopReason::LeftDiamonds { index, point: cur },
            };
        };
        poles.push(q);
        cur = f_lambda(p.plane(), params);
    }
    ReadItinerary {
        poles,
        stop: StopReason::Complete,
    }
}

/// Number of leading symbols of `expected` reproduced by plain forward
/// iteration of `v`.
pub fn forward_match_depth(v: PlanePoint, expected: &[PoleIndex], params: &MapParams) -> usize {
    let read = itinerary_of(v, params, expected.len());
    read.poles
        .iter()
        .zip(expected)
        .take_while(|(a, b)| a == b)
        .count()
}

/// A point built from nested inverse branches together with its shadow orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowOrbit {
    pub poles: Vec<PoleIndex>,
    /// `y_0, …, y_n` with `y_j ∈ W(p_j)` for `j < n`, `y_n = p_n`.
    pub points: Vec<PlanePoint>,
}

impl ShadowOrbit {
    pub fn start(&self) -> PlanePoint {
        self.points[0]
    }

    /// Largest chordal distance `d(F_λ(y_j), y_{j+1})` over the orbit.
    pub fn max_step_residual(&self, params: &MapParams) -> f64 {
        step_residuals(&self.points, params)
    }

    /// Number of leading `y_j` lying in their diamonds `W(p_j)`.
    pub fn diamonds_visited(&self) -> usize {
        self.points
            .iter()
            .zip(&self.poles)
            .take_while(|(y, p)| p.diamond().contains(**y))
            .count()
    }

    /// The shadow check to depth `depth`: every `y_j`, `j < depth`, is in its
    /// diamond and every step is a genuine step of `F_λ` up to [`STEP_TOL`].
    pub fn verify(&self, params: &MapParams, depth: usize) -> bool {
        let depth = depth.min(self.points.len() - 1);
        self.diamonds_visited() >= depth
            && step_residuals(&self.points[..=depth], params) < STEP_TOL
    }
}

fn step_residuals(points: &[PlanePoint], params: &MapParams) -> f64 {
    points
        .windows(2)
        .map(|w| f_lambda(w[0], params).chordal_dist(&w[1].into()))
        .fold(0.0, f64::max)
}

fn check_far(poles: &[PoleIndex], from: usize, far: f64) -> Result<()> {
    for (j, p) in poles.iter().enumerate().skip(from) {
        if !(p.norm() > far) {
            return Err(Error::Domain(format!(
                "pole {p} at index {j} has norm {:.4} <= calibrated R = {far:.4}",
                p.norm()
            )));
        }
    }
    Ok(())
}

/// The shadow orbit `y_j = S_{p_j} ∘ … ∘ S_{p_{n−1}}(p_n)` for
/// `n = n_compose`.
///
/// Poles after the explicit prefix must have norm above the calibrated far
/// radius, and the itinerary must have a tail or a prefix longer than
/// `n_compose`.
pub fn shadow_orbit(s: &Itinerary, params: &MapParams, n_compose: usize) -> Result<ShadowOrbit> {
    let poles = s
        .poles(n_compose + 1)
        .ok_or_else(|| Error::Input(format!("itinerary has fewer than {} poles", n_compose + 1)))?;
    let cal = calibrate_expansion_radius(params)?;
    check_far(&poles, s.prefix.len(), cal.far_radius)?;

    let mut points = vec![poles[n_compose].location(); n_compose + 1];
    for j in (0..n_compose).rev() {
        points[j] = inverse_branch(poles[j], points[j + 1].into(), params)?;
    }
    Ok(ShadowOrbit { poles, points })
}

/// The point `S_{p_0} ∘ … ∘ S_{p_{n−1}}(p_n)` with `n = n_compose`, which
/// approximates the unique escaping point with itinerary `s`; successive
/// values of `n_compose` differ by less than `2^{1−n}·π`.
pub fn point_from_itinerary(
    s: &Itinerary,
    params: &MapParams,
    n_compose: usize,
) -> Result<PlanePoint> {
    Ok(shadow_orbit(s, params, n_compose)?.start())
}

/// `‖x(n+1) − x(n)‖` for `n = 1 .. n_max`, where `x(n)` is
/// [`point_from_itinerary`] with `n` composed branches.
pub fn cauchy_increments(s: &Itinerary, params: &MapParams, n_max: usize) -> Result<Vec<f64>> {
    let xs = (1..=n_max + 1)
        .map(|n| point_from_itinerary(s, params, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(xs.windows(2).map(|w| w[1].dist(w[0])).collect())
}

/// A cycle of poles `p_0, …, p_{k−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicCycleSpec {
    cycle: Vec<PoleIndex>,
}

impl PeriodicCycleSpec {
    pub fn new(cycle: Vec<PoleIndex>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::Input("a pole cycle needs at least one pole".into()));
        }
        Ok(PeriodicCycleSpec { cycle })
    }

    pub fn poles(&self) -> &[PoleIndex] {
        &self.cycle
    }

    pub fn len(&self) -> usize {
        self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A periodic orbit `y_0 → y_1 → … → y_{k−1} → y_0` of `F_λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub point: PlanePoint,
    pub orbit: Vec<PlanePoint>,
    pub poles: Vec<PoleIndex>,
    /// Contraction iterations used to find the fixed point.
    pub iterations: usize,
    /// Largest chordal step residual `d(F_λ(y_j), y_{j+1 mod k})`.
    pub step_residual: f64,
    /// `‖F_λ^k(y_0) − y_0‖` by plain iteration (+∞ if it hits a pole).
    /// Amplified by the cycle multiplier, so only meaningful for short cycles.
    pub literal_residual: f64,
}

impl PeriodicPoint {
    pub fn period(&self) -> usize {
        self.orbit.len()
    }
}

const FIXED_POINT_STEP: f64 = 1e-12;
const MAX_CONTRACTION_ITERS: usize = 500;

/// Fixed point of `y ↦ S_{c_0} ∘ … ∘ S_{c_{k−1}}(y)` started at the first
/// pole center, with the non-contraction guard.
fn composed_fixed_point(cycle: &[PoleIndex], params: &MapParams) -> Result<(PlanePoint, usize)> {
    let mut y = cycle[0].location();
    let mut last_step = f64::INFINITY;
    let mut growing = 0;
    for it in 1..=MAX_CONTRACTION_ITERS {
        let next = plane::compose_branches(cycle, y.into(), params)?;
        let step = next.dist(y);
        y = next;
        if step < FIXED_POINT_STEP {
            return Ok((y, it));
        }
        if step >= last_step {
            growing += 1;
            if growing >= 5 {
                return Err(Error::Domain(format!(
                    "composed branches over {} poles do not contract (step {step:e})",
                    cycle.len()
                )));
            }
        } else {
            growing = 0;
        }
        last_step = step;
    }
    Err(Error::Domain(format!(
        "no fixed point within {MAX_CONTRACTION_ITERS} contraction steps"
    )))
}

fn close_cycle(
    y0: PlanePoint,
    cycle: &[PoleIndex],
    params: &MapParams,
    iterations: usize,
) -> Result<PeriodicPoint> {
    let k = cycle.len();
    // y_j = S_{p_j}(y_{j+1}) with y_k = y_0
    let mut orbit = vec![y0; k];
    let mut next = y0;
    for j in (1..k).rev() {
        next = inverse_branch(cycle[j], next.into(), params)?;
        orbit[j] = next;
    }
    let mut closed = orbit.clone();
    closed.push(y0);
    let step_residual = step_residuals(&closed, params);
    for (j, (y, p)) in orbit.iter().zip(cycle).enumerate() {
        if !p.diamond().contains(*y) {
            return Err(Error::Internal(format!(
                "cycle point {j} = {y} is outside W{p}"
            )));
        }
    }
    if !(step_residual < STEP_TOL) {
        return Err(Error::Internal(format!(
            "cycle step residual {step_residual:e} exceeds {STEP_TOL:e}"
        )));
    }

    let mut cur = ExtendedPoint::from(y0);
    for _ in 0..k {
        if let Some(p) = cur.planar() {
            cur = f_lambda(p, params);
        }
    }
    let literal_residual = cur.planar().map_or(f64::INFINITY, |p| p.dist(y0));
    Ok(PeriodicPoint {
        point: y0,
        orbit,
        poles: cycle.to_vec(),
        iterations,
        step_residual,
        literal_residual,
    })
}

/// A periodic point of `F_λ` whose orbit visits `W(p_0), …, W(p_{k−1})` in
/// order, found by iterating the composed inverse branches from the first
/// pole center. All poles must lie beyond the calibrated far radius.
pub fn periodic_point_from_cycle(
    c: &PeriodicCycleSpec,
    params: &MapParams,
) -> Result<PeriodicPoint> {
    let cal = calibrate_expansion_radius(params)?;
    check_far(c.poles(), 0, cal.far_radius)?;
    let (y0, iterations) = composed_fixed_point(c.poles(), params)?;
    close_cycle(y0, c.poles(), params, iterations)
}

/// Result of [`periodic_near_escaping`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearPeriodic {
    pub periodic: PeriodicPoint,
    /// Symbols before the orbit settles beyond the calibrated far radius.
    pub n: usize,
    /// Extra far symbols used.
    pub m: usize,
    pub distance: f64,
}

/// A periodic point within `eta` of the escaping point `v`.
///
/// The itinerary `p_0, p_1, …` of `v` is read by forward iteration up to the
/// iterate at which the orbit was classified as escaping (later symbols are
/// beyond the precision horizon of the forward orbit); with
/// `N` the index after which every read pole lies beyond the calibrated far
/// radius, the cycle `p_0, …, p_{N+M}` is closed through the far pole
/// `p_{N+M}` for increasing `M` until the periodic point lands in
/// `B(v, eta)`.
pub fn periodic_near_escaping(v: PlanePoint, eta: f64, params: &MapParams) -> Result<NearPeriodic> {
    if !(eta > 0.0) {
        return Err(Error::Input(format!("eta must be positive, got {eta}")));
    }
    let fate = classify_orbit_with(v.to_vec3(), params, &ClassifyConfig::default());
    if fate.fate != Fate::Escaping {
        return Err(Error::Domain(format!(
            "{v} is not classified as escaping ({:?})",
            fate.fate
        )));
    }
    let cal = calibrate_expansion_radius(params)?;
    let read = itinerary_of(v, params, fate.iterations + 1).poles;
    let last_near = read.iter().rposition(|p| p.norm() <= cal.far_radius);
    let n = last_near.map_or(0, |i| i + 1);
    if n >= read.len() {
        return Err(Error::Domain(format!(
            "the {} readable symbols never settle beyond R = {:.3}",
            read.len(),
            cal.far_radius
        )));
    }

    let mut closest = f64::INFINITY;
    for m in 0..read.len() - n {
        let cycle = &read[..=n + m];
        // Fixed point of S_{p_{N+M}} ∘ S_{p_0} ∘ … ∘ S_{p_{N+M−1}} in the far
        // diamond W(p_{N+M}); rotating back gives the point near v.
        let mut rotated = vec![cycle[n + m]];
        rotated.extend_from_slice(&cycle[..n + m]);
        let (y_far, iterations) = composed_fixed_point(&rotated, params)?;
        let y0 = plane::compose_branches(&cycle[..n + m], y_far.into(), params)?;
        let periodic = close_cycle(y0, cycle, params, iterations)?;
        let distance = y0.dist(v);
        closest = closest.min(distance);
        if distance < eta {
            return Ok(NearPeriodic {
                periodic,
                n,
                m,
                distance,
            });
        }
    }
    Err(Error::Domain(format!(
        "no periodic point within {eta:e} of {v} from {} readable symbols (closest {closest:e})",
        read.len()
    )))
}
