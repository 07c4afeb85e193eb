//! Seeded samplers shared by the calibration and verification routines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::point::{PlanePoint, Vec3};

pub const DEFAULT_SEED: u64 = 0x7a6e_7461_6e33;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn in_box<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> PlanePoint {
    PlanePoint::new(uniform(rng, lo, hi), uniform(rng, lo, hi))
}

/// Uniform point of the open disk `B(center, radius)`.
pub fn in_disk<R: Rng>(rng: &mut R, center: PlanePoint, radius: f64) -> PlanePoint {
    let r = radius * rng.random::<f64>().sqrt();
    let t = uniform(rng, 0.0, std::f64::consts::TAU);
    PlanePoint::new(center.x + r * t.cos(), center.y + r * t.sin())
}

/// Uniform point of the open L1 ball `|x − cx| + |y − cy| < radius`.
pub fn in_diamond<R: Rng>(rng: &mut R, center: PlanePoint, radius: f64) -> PlanePoint {
    loop {
        let p = in_box(rng, -radius, radius);
        if p.x.abs() + p.y.abs() < radius {
            return center + p;
        }
    }
}

/// Uniform point of the ball `B(center, radius)` in R³.
pub fn in_ball<R: Rng>(rng: &mut R, center: Vec3, radius: f64) -> Vec3 {
    loop {
        let v = Vec3::new(
            uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0),
        );
        if v.norm_sq() < 1.0 {
            return center + v * radius;
        }
    }
}
