//! C ABI for `qrtan`.
//!
//! Every fallible function returns a [`QrtanStatus`]; on failure a message
//! is available from [`qrtan_last_error`] on the same thread. Maps and
//! images are opaque handles released with their `_free` functions. Panics
//! never cross the boundary; they are reported as `QRTAN_STATUS_PANIC`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qrtan::analysis::{self, Fate};
use qrtan::plane::{self, PoleIndex};
use qrtan::render::{self, RenderConfig, Window};
use qrtan::{itinerary, maps, Error, ExtendedPoint, MapParams, PlanePoint, Vec3};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrtanStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Internal = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrtanFateKind {
    ToUpperFixed = 0,
    ToLowerFixed = 1,
    ToOrigin = 2,
    Escaping = 3,
    PoleHit = 4,
    Undecided = 5,
}

/// A point of R³ ∪ {∞}; when `is_infinite` is nonzero the coordinates are 0.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrtanPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub is_infinite: i32,
}

/// Pole `((n + m)π/2, (n − m + 1)π/2)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QrtanPole {
    pub m: i64,
    pub n: i64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrtanFate {
    pub fate: QrtanFateKind,
    pub iterations: u64,
    pub residual: f64,
    pub witness: QrtanPoint,
}

/// Basin rendering settings; `threads = 0` uses all cores.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrtanRenderConfig {
    pub lambda: f64,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub width: u32,
    pub height: u32,
    pub max_iter: u64,
    pub tol: f64,
    pub threads: u32,
}

/// Opaque handle to a map `T_λ`.
pub struct QrtanMap {
    params: MapParams,
}

/// Opaque handle to an RGB image.
pub struct QrtanImage {
    image: render::ImageBuffer,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QrtanStatus {
    match e {
        Error::Input(_) => QrtanStatus::InvalidArgument,
        Error::Domain(_) | Error::Overflow(_) => QrtanStatus::Domain,
        Error::Internal(_) => QrtanStatus::Internal,
        Error::Io(_) => QrtanStatus::Io,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (QrtanStatus, String)>>(f: F) -> QrtanStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QrtanStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside qrtan".into());
            QrtanStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (QrtanStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (QrtanStatus, String) {
    (QrtanStatus::NullPointer, format!("{what} is NULL"))
}

fn to_c_point(p: ExtendedPoint) -> QrtanPoint {
    match p {
        ExtendedPoint::Finite(v) => QrtanPoint {
            x: v.x,
            y: v.y,
            z: v.z,
            is_infinite: 0,
        },
        ExtendedPoint::Infinity => QrtanPoint {
            x: 0.0,
            y: 0.0,
            z: 0.0,
            is_infinite: 1,
        },
    }
}

fn fate_kind(f: Fate) -> QrtanFateKind {
    match f {
        Fate::ToUpperFixed => QrtanFateKind::ToUpperFixed,
        Fate::ToLowerFixed => QrtanFateKind::ToLowerFixed,
        Fate::ToOrigin => QrtanFateKind::ToOrigin,
        Fate::Escaping => QrtanFateKind::Escaping,
        Fate::PoleHit => QrtanFateKind::PoleHit,
        Fate::Undecided => QrtanFateKind::Undecided,
    }
}

/// Message describing the last failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qrtan_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a map `T_λ`; `lambda` must be positive and finite.
///
/// # Safety
/// `out` must be NULL or valid for writing a pointer.
#[no_mangle]
pub unsafe extern "C" fn qrtan_map_new(lambda: f64, out: *mut *mut QrtanMap) -> QrtanStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let params = MapParams::new(lambda).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(QrtanMap { params }));
        Ok(())
    })
}

/// Releases a map; NULL is ignored.
///
/// # Safety
/// `map` must be NULL or a handle from [`qrtan_map_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qrtan_map_free(map: *mut QrtanMap) {
    if !map.is_null() {
        drop(unsafe { Box::from_raw(map) });
    }
}

/// # Safety
/// `map` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qrtan_map_lambda(map: *const QrtanMap, out: *mut f64) -> QrtanStatus {
    guard(|| {
        let map = unsafe { map.as_ref() }.ok_or_else(|| null("map"))?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = map.params.lambda();
        Ok(())
    })
}

/// Evaluates `T_λ(x, y, z)`; poles give `is_infinite = 1`.
///
/// # Safety
/// `map` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qrtan_map_eval(
    map: *const QrtanMap,
    x: f64,
    y: f64,
    z: f64,
    out: *mut QrtanPoint,
) -> QrtanStatus {
    guard(|| {
        let map = unsafe { map.as_ref() }.ok_or_else(|| null("map"))?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let v = Vec3::new(x, y, z);
        if !v.is_finite() {
            return Err((
                QrtanStatus::InvalidArgument,
                format!("non-finite input {v}"),
            ));
        }
        *out = to_c_point(maps::t_eval(v, &map.params));
        Ok(())
    })
}

/// The inverse branch `S_q(w)` in the pole diamond of `q`. Pass
/// `w_is_infinite = 1` for `w = ∞` (the result is the pole itself).
///
/// # Safety
/// `map` must be NULL or a live handle; `out_x`, `out_y` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qrtan_inverse_branch(
    map: *const QrtanMap,
    q: QrtanPole,
    wx: f64,
    wy: f64,
    w_is_infinite: i32,
    out_x: *mut f64,
    out_y: *mut f64,
) -> QrtanStatus {
    guard(|| {
        let map = unsafe { map.as_ref() }.ok_or_else(|| null("map"))?;
        let ox = unsafe { out_x.as_mut() }.ok_or_else(|| null("out_x"))?;
        let oy = unsafe { out_y.as_mut() }.ok_or_else(|| null("out_y"))?;
        let w = if w_is_infinite != 0 {
            ExtendedPoint::Infinity
        } else {
            PlanePoint::new(wx, wy).into()
        };
        let s = plane::inverse_branch(PoleIndex::new(q.m, q.n), w, &map.params).map_err(lib_err)?;
        *ox = s.x;
        *oy = s.y;
        Ok(())
    })
}

/// The positive solution of `ξ = λ tanh ξ`; `QRTAN_STATUS_DOMAIN` for `λ ≤ 1`.
///
/// # Safety
/// `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qrtan_solve_xi0(lambda: f64, out: *mut f64) -> QrtanStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = analysis::solve_xi0(lambda).map_err(lib_err)?;
        Ok(())
    })
}

/// Classifies the orbit of `(x, y, z)`.
///
/// # Safety
/// `map` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qrtan_classify_orbit(
    map: *const QrtanMap,
    x: f64,
    y: f64,
    z: f64,
    max_iter: u64,
    tol: f64,
    out: *mut QrtanFate,
) -> QrtanStatus {
    guard(|| {
        let map = unsafe { map.as_ref() }.ok_or_else(|| null("map"))?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        if max_iter == 0 || !(tol > 0.0) {
            return Err((
                QrtanStatus::InvalidArgument,
                "max_iter must be >= 1 and tol > 0".into(),
            ));
        }
        let r = analysis::classify_orbit(Vec3::new(x, y, z), &map.params, max_iter as usize, tol);
        *out = QrtanFate {
            fate: fate_kind(r.fate),
            iterations: r.iterations as u64,
            residual: r.residual,
            witness: to_c_point(r.witness),
        };
        Ok(())
    })
}

/// Reads up to `capacity` itinerary symbols of `(x, y)` into `buf` and
/// stores the number read in `out_len`.
///
/// # Safety
/// `map` must be NULL or a live handle; `buf` must be valid for `capacity`
/// writes (it may be NULL when `capacity` is 0); `out_len` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qrtan_itinerary_of(
    map: *const QrtanMap,
    x: f64,
    y: f64,
    buf: *mut QrtanPole,
    capacity: usize,
    out_len: *mut usize,
) -> QrtanStatus {
    guard(|| {
        let map = unsafe { map.as_ref() }.ok_or_else(|| null("map"))?;
        let out_len = unsafe { out_len.as_mut() }.ok_or_else(|| null("out_len"))?;
        if capacity > 0 && buf.is_null() {
            return Err(null("buf"));
        }
        let read = itinerary::itinerary_of(PlanePoint::new(x, y), &map.params, capacity);
        for (k, p) in read.poles.iter().enumerate() {
            unsafe { buf.add(k).write(QrtanPole { m: p.m, n: p.n }) };
        }
        *out_len = read.poles.len();
        Ok(())
    })
}

/// Renders a basin picture.
///
/// # Safety
/// `cfg` must be NULL or readable; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qrtan_render_basin(
    cfg: *const QrtanRenderConfig,
    out: *mut *mut QrtanImage,
) -> QrtanStatus {
    guard(|| {
        let c = unsafe { cfg.as_ref() }.ok_or_else(|| null("cfg"))?;
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let rc = RenderConfig {
            lambda: c.lambda,
            window: Window {
                x0: c.x0,
                y0: c.y0,
                x1: c.x1,
                y1: c.y1,
            },
            width: c.width as usize,
            height: c.height as usize,
            max_iter: c.max_iter as usize,
            tol: c.tol,
            threads: c.threads as usize,
            ..RenderConfig::default()
        };
        let img = render::render_basin(&rc).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(QrtanImage { image: img.image }));
        Ok(())
    })
}

/// # Safety
/// `img` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qrtan_image_width(img: *const QrtanImage) -> u32 {
    unsafe { img.as_ref() }.map_or(0, |i| i.image.width as u32)
}

/// # Safety
/// `img` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qrtan_image_height(img: *const QrtanImage) -> u32 {
    unsafe { img.as_ref() }.map_or(0, |i| i.image.height as u32)
}

/// Row-major RGB bytes (`3·width·height` of them), owned by the image.
///
/// # Safety
/// `img` must be NULL or a live handle; `out_len` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qrtan_image_data(
    img: *const QrtanImage,
    out_len: *mut usize,
) -> *const u8 {
    let Some(img) = (unsafe { img.as_ref() }) else {
        return ptr::null();
    };
    if let Some(l) = unsafe { out_len.as_mut() } {
        *l = img.image.data.len();
    }
    img.image.data.as_ptr()
}

/// Writes the image as binary PPM.
///
/// # Safety
/// `img` must be NULL or a live handle; `path` NULL or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qrtan_image_write_ppm(
    img: *const QrtanImage,
    path: *const c_char,
) -> QrtanStatus {
    guard(|| {
        let img = unsafe { img.as_ref() }.ok_or_else(|| null("img"))?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = unsafe { CStr::from_ptr(path) }.to_str().map_err(|e| {
            (
                QrtanStatus::InvalidArgument,
                format!("path is not UTF-8: {e}"),
            )
        })?;
        let f = std::fs::File::create(Path::new(path))
            .map_err(|e| (QrtanStatus::Io, format!("{path}: {e}")))?;
        img.image
            .write_ppm(std::io::BufWriter::new(f))
            .map_err(lib_err)
    })
}

/// Releases an image; NULL is ignored.
///
/// # Safety
/// `img` must be NULL or a handle from [`qrtan_render_basin`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qrtan_image_free(img: *mut QrtanImage) {
    if !img.is_null() {
        drop(unsafe { Box::from_raw(img) });
    }
}
