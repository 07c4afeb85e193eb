//! Basin and escape-depth images of `F_λ` on a window of the plane.
//!
//! Pixel `(i, j)` (row `j` counted from the top) samples the center of its
//! cell: `x = x0 + (i + ½)·(x1 − x0)/w`, `y = y1 − (j + ½)·(y1 − y0)/h`, so
//! `y` increases upward. Every pixel is computed independently, so the
//! output does not depend on the number of threads.

use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{attracting_targets, classify_orbit_targets, ClassifyConfig, Fate};
use crate::error::{Error, Result};
use crate::maps::MapParams;
use crate::plane::{containing_diamond, f_lambda};
use crate::point::{ExtendedPoint, PlanePoint, Vec3};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Default for Window {
    fn default() -> Self {
        Window {
            x0: -FRAC_PI_4,
            y0: -FRAC_PI_4,
            x1: 3.0 * FRAC_PI_4,
            y1: 3.0 * FRAC_PI_4,
        }
    }
}

impl Window {
    pub fn contains(&self, p: PlanePoint) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub lambda: f64,
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Norm an orbit must exceed inside a diamond to count as escaped.
    pub escape_radius: f64,
    /// Worker threads; 0 uses rayon's default.
    pub threads: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            lambda: 0.9,
            window: Window::default(),
            width: 256,
            height: 256,
            max_iter: 500,
            tol: 1e-6,
            escape_radius: 50.0,
            threads: 0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<MapParams> {
        let w = &self.window;
        if self.width == 0 || self.height == 0 {
            return Err(Error::Input(format!(
                "resolution {}x{} is empty",
                self.width, self.height
            )));
        }
        if !(w.x0.is_finite()
            && w.x1.is_finite()
            && w.y0.is_finite()
            && w.y1.is_finite()
            && w.x1 > w.x0
            && w.y1 > w.y0)
        {
            return Err(Error::Input(format!("window {w:?} is degenerate")));
        }
        if self.max_iter == 0 {
            return Err(Error::Input("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !(self.escape_radius > 0.0) {
            return Err(Error::Input(
                "tol and escape radius must be positive".into(),
            ));
        }
        MapParams::new(self.lambda)
    }

    /// Plane point sampled by pixel `(i, j)`.
    pub fn pixel_point(&self, i: usize, j: usize) -> PlanePoint {
        let w = &self.window;
        PlanePoint::new(
            w.x0 + (i as f64 + 0.5) * (w.x1 - w.x0) / self.width as f64,
            w.y1 - (j as f64 + 0.5) * (w.y1 - w.y0) / self.height as f64,
        )
    }
}

/// 8-bit RGB pixels, row-major from the top-left corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        ImageBuffer {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn pixel(&self, i: usize, j: usize) -> [u8; 3] {
        let k = 3 * (j * self.width + i);
        [self.data[k], self.data[k + 1], self.data[k + 2]]
    }

    pub fn write_ppm<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.data)?;
        Ok(())
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.data.len() + 32);
        self.write_ppm(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    /// Writes PPM, or PNG when the path ends in `.png` and the `png`
    /// feature is enabled.
    pub fn save(&self, path: &Path) -> Result<()> {
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png {
            return self.save_png(path);
        }
        let f = std::fs::File::create(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.write_ppm(std::io::BufWriter::new(f))
    }

    #[cfg(feature = "png")]
    fn save_png(&self, path: &Path) -> Result<()> {
        image::save_buffer(
            path,
            &self.data,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| Error::Io(e.to_string()))
    }

    #[cfg(not(feature = "png"))]
    fn save_png(&self, path: &Path) -> Result<()> {
        Err(Error::Input(format!(
            "{}: PNG output needs the `png` feature; use a .ppm path",
            path.display()
        )))
    }
}

fn lerp(a: [u8; 3], b: [u8; 3], t: f64) -> [u8; 3] {
    let mut out = [0u8; 3];
    for k in 0..3 {
        out[k] = (a[k] as f64 + (b[k] as f64 - a[k] as f64) * t).round() as u8;
    }
    out
}

fn gradient(stops: &[[u8; 3]], t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (stops.len() - 1) as f64;
    let k = (t.floor() as usize).min(stops.len() - 2);
    lerp(stops[k], stops[k + 1], t - k as f64)
}

// Log-scaled capture time in [0, 1].
fn capture_time(iterations: usize, max_iter: usize) -> f64 {
    ((1 + iterations) as f64).ln() / ((1 + max_iter) as f64).ln()
}

/// Basin palette: hue by fate, lightness by log capture time. Points caught
/// by the origin early are dark blue, moving through light blue and yellow
/// to red as capture takes longer.
pub fn basin_color(fate: Fate, iterations: usize, max_iter: usize) -> [u8; 3] {
    let t = capture_time(iterations, max_iter);
    match fate {
        Fate::ToOrigin => gradient(
            &[[10, 20, 90], [120, 190, 255], [250, 230, 80], [200, 30, 20]],
            t,
        ),
        Fate::ToUpperFixed => lerp([20, 110, 40], [200, 255, 200], t),
        Fate::ToLowerFixed => lerp([110, 20, 100], [255, 200, 245], t),
        Fate::Escaping => [255, 140, 0],
        Fate::PoleHit => [255, 255, 255],
        Fate::Undecided => [0, 0, 0],
    }
}

/// Escape-depth palette; pixels without a finite depth are black.
pub fn depth_color(depth: Option<usize>, max_iter: usize) -> [u8; 3] {
    match depth {
        Some(d) => gradient(
            &[[40, 10, 70], [180, 60, 120], [255, 220, 120]],
            1.0 - capture_time(d, max_iter),
        ),
        None => [0, 0, 0],
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))
}

/// Fills the image row by row in parallel; `per_pixel` returns the color
/// and a per-pixel value kept alongside.
fn render_rows<T, F>(cfg: &RenderConfig, per_pixel: F) -> Result<(ImageBuffer, Vec<T>)>
where
    T: Send + Clone + Default,
    F: Fn(PlanePoint) -> ([u8; 3], T) + Sync,
{
    let (w, h) = (cfg.width, cfg.height);
    let mut img = ImageBuffer::new(w, h);
    let mut values = vec![T::default(); w * h];
    pool(cfg.threads)?.install(|| {
        img.data
            .par_chunks_mut(3 * w)
            .zip(values.par_chunks_mut(w))
            .enumerate()
            .for_each(|(j, (row, vals))| {
                for i in 0..w {
                    let (c, v) = per_pixel(cfg.pixel_point(i, j));
                    row[3 * i..3 * i + 3].copy_from_slice(&c);
                    vals[i] = v;
                }
            });
    });
    Ok((img, values))
}

/// A rendered basin picture with the fate of every pixel.
#[derive(Debug, Clone)]
pub struct BasinImage {
    pub image: ImageBuffer,
    pub fates: Vec<Fate>,
}

impl BasinImage {
    pub fn count(&self, fate: Fate) -> usize {
        self.fates.iter().filter(|&&f| f == fate).count()
    }
}

/// Classifies the plane point under every pixel and colors it by fate and
/// capture time.
pub fn render_basin(cfg: &RenderConfig) -> Result<BasinImage> {
    let params = cfg.validate()?;
    let targets = attracting_targets(&params);
    let ccfg = ClassifyConfig {
        max_iter: cfg.max_iter,
        tol: cfg.tol,
        escape_radius: cfg.escape_radius,
        ..ClassifyConfig::default()
    };
    let (image, fates) = render_rows(cfg, |p| {
        let r = classify_orbit_targets(p.to_vec3(), &params, &ccfg, &targets);
        (basin_color(r.fate, r.iterations, cfg.max_iter), r.fate)
    })?;
    Ok(BasinImage { image, fates })
}

/// First `n ≤ max_iter` with `F_λ^n(p)` inside a pole diamond and of norm
/// above `escape_radius` (a pole hit counts as escaped at that step), or
/// `None`.
pub fn escape_depth(
    p: PlanePoint,
    params: &MapParams,
    max_iter: usize,
    escape_radius: f64,
) -> Option<usize> {
    let mut cur = p;
    for n in 0..=max_iter {
        if cur.norm() > escape_radius && containing_diamond(cur).is_some() {
            return Some(n);
        }
        if n == max_iter {
            break;
        }
        match f_lambda(cur, params) {
            ExtendedPoint::Infinity => return Some(n + 1),
            ExtendedPoint::Finite(Vec3 { x, y, .. }) => cur = PlanePoint::new(x, y),
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct EscapeDepthImage {
    pub image: ImageBuffer,
    pub depths: Vec<Option<usize>>,
}

impl EscapeDepthImage {
    pub fn finite_fraction(&self) -> f64 {
        self.depths.iter().filter(|d| d.is_some()).count() as f64 / self.depths.len() as f64
    }
}

/// Colors every pixel by its [`escape_depth`].
pub fn render_escape_depth(cfg: &RenderConfig) -> Result<EscapeDepthImage> {
    let params = cfg.validate()?;
    let (image, depths) = render_rows(cfg, |p| {
        let d = escape_depth(p, &params, cfg.max_iter, cfg.escape_radius);
        (depth_color(d, cfg.max_iter), d)
    })?;
    Ok(EscapeDepthImage { image, depths })
}

/// Window `[−π, π]²`, handy for escape-depth overviews.
pub const FULL_PERIOD: Window = Window {
    x0: -PI,
    y0: -PI,
    x1: PI,
    y1: PI,
};
