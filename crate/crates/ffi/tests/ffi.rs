use std::ffi::{CStr, CString};
use std::ptr;

use qrtan_ffi::*;

fn last_error() -> String {
    let p = qrtan_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_map(lambda: f64) -> *mut QrtanMap {
    let mut map = ptr::null_mut();
    assert_eq!(unsafe { qrtan_map_new(lambda, &mut map) }, QrtanStatus::Ok);
    assert!(!map.is_null());
    map
}

#[test]
fn map_lifecycle_and_eval() {
    let map = new_map(2.0);
    let mut lambda = 0.0;
    assert_eq!(
        unsafe { qrtan_map_lambda(map, &mut lambda) },
        QrtanStatus::Ok
    );
    assert_eq!(lambda, 2.0);

    // T(a, 0, b) = λ·(Re, 0, Im) tan(a + ib); at the origin this is 0.
    let mut out = QrtanPoint {
        x: 9.0,
        y: 9.0,
        z: 9.0,
        is_infinite: 9,
    };
    assert_eq!(
        unsafe { qrtan_map_eval(map, 0.0, 0.0, 0.0, &mut out) },
        QrtanStatus::Ok
    );
    assert_eq!(out.is_infinite, 0);
    assert!(out.x.abs() < 1e-15 && out.y.abs() < 1e-15 && out.z.abs() < 1e-15);

    let a: f64 = 0.3;
    assert_eq!(
        unsafe { qrtan_map_eval(map, a, 0.0, 0.0, &mut out) },
        QrtanStatus::Ok
    );
    assert!((out.x - 2.0 * a.tan()).abs() < 1e-12, "{out:?}");

    // (0, π/2) is the pole with m = n = 0.
    let pole = QrtanPole { m: 0, n: 0 };
    let mut px = 0.0;
    let mut py = 0.0;
    assert_eq!(
        unsafe { qrtan_inverse_branch(map, pole, 0.0, 0.0, 1, &mut px, &mut py) },
        QrtanStatus::Ok
    );
    assert!(px.abs() < 1e-15 && (py - std::f64::consts::FRAC_PI_2).abs() < 1e-15);

    unsafe { qrtan_map_free(map) };
    unsafe { qrtan_map_free(ptr::null_mut()) };
}

#[test]
fn errors_are_reported_with_messages() {
    let mut map = ptr::null_mut();
    assert_eq!(
        unsafe { qrtan_map_new(-1.0, &mut map) },
        QrtanStatus::InvalidArgument
    );
    assert!(map.is_null());
    assert!(last_error().contains("lambda"));

    assert_eq!(
        unsafe { qrtan_map_new(1.0, ptr::null_mut()) },
        QrtanStatus::NullPointer
    );

    let mut xi = 0.0;
    assert_eq!(
        unsafe { qrtan_solve_xi0(0.5, &mut xi) },
        QrtanStatus::Domain
    );
    assert_eq!(unsafe { qrtan_solve_xi0(2.0, &mut xi) }, QrtanStatus::Ok);
    assert!((xi - 2.0 * xi.tanh()).abs() < 1e-14);

    let mut out = QrtanPoint {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        is_infinite: 0,
    };
    assert_eq!(
        unsafe { qrtan_map_eval(ptr::null(), 0.0, 0.0, 0.0, &mut out) },
        QrtanStatus::NullPointer
    );
    let map = new_map(1.0);
    assert_eq!(
        unsafe { qrtan_map_eval(map, f64::NAN, 0.0, 0.0, &mut out) },
        QrtanStatus::InvalidArgument
    );
    unsafe { qrtan_map_free(map) };
}

#[test]
fn classify_and_itinerary() {
    let map = new_map(0.9);
    let mut fate = QrtanFate {
        fate: QrtanFateKind::Undecided,
        iterations: 0,
        residual: 0.0,
        witness: QrtanPoint {
            x: 0.0,
            y: 0.0,
            z: 0.0,
            is_infinite: 0,
        },
    };
    assert_eq!(
        unsafe { qrtan_classify_orbit(map, 0.1, 0.05, 0.0, 500, 1e-6, &mut fate) },
        QrtanStatus::Ok
    );
    assert_eq!(fate.fate, QrtanFateKind::ToOrigin);
    assert_eq!(
        unsafe { qrtan_classify_orbit(map, 0.1, 0.0, 0.0, 0, 1e-6, &mut fate) },
        QrtanStatus::InvalidArgument
    );
    unsafe { qrtan_map_free(map) };

    let map = new_map(2.0);
    let mut buf = [QrtanPole { m: 0, n: 0 }; 4];
    let mut len = usize::MAX;
    // A point in the diamond of the pole (0, 0) is read as that pole first.
    let st = unsafe { qrtan_itinerary_of(map, 0.1, 1.5, buf.as_mut_ptr(), buf.len(), &mut len) };
    assert_eq!(st, QrtanStatus::Ok);
    assert!((1..=4).contains(&len));
    assert_eq!(buf[0], QrtanPole { m: 0, n: 0 });
    assert_eq!(
        unsafe { qrtan_itinerary_of(map, 0.1, 1.5, ptr::null_mut(), 0, &mut len) },
        QrtanStatus::Ok
    );
    assert_eq!(len, 0);
    assert_eq!(
        unsafe { qrtan_itinerary_of(map, 0.1, 1.5, ptr::null_mut(), 3, &mut len) },
        QrtanStatus::NullPointer
    );
    unsafe { qrtan_map_free(map) };
}

#[test]
fn render_and_write_ppm() {
    let cfg = QrtanRenderConfig {
        lambda: 0.9,
        x0: -0.785,
        y0: -0.785,
        x1: 2.356,
        y1: 2.356,
        width: 16,
        height: 12,
        max_iter: 100,
        tol: 1e-6,
        threads: 2,
    };
    let mut img = ptr::null_mut();
    assert_eq!(
        unsafe { qrtan_render_basin(&cfg, &mut img) },
        QrtanStatus::Ok
    );
    assert_eq!(unsafe { qrtan_image_width(img) }, 16);
    assert_eq!(unsafe { qrtan_image_height(img) }, 12);
    let mut len = 0;
    let data = unsafe { qrtan_image_data(img, &mut len) };
    assert!(!data.is_null());
    assert_eq!(len, 16 * 12 * 3);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("basin.ppm");
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { qrtan_image_write_ppm(img, cpath.as_ptr()) },
        QrtanStatus::Ok
    );
    let bytes = std::fs::read(&path).unwrap();
    assert!(bytes.starts_with(b"P6\n16 12\n255\n"));
    assert_eq!(bytes.len(), b"P6\n16 12\n255\n".len() + len);

    let bad = CString::new(dir.path().join("missing/x.ppm").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { qrtan_image_write_ppm(img, bad.as_ptr()) },
        QrtanStatus::Io
    );
    unsafe { qrtan_image_free(img) };

    let bad_cfg = QrtanRenderConfig { width: 0, ..cfg };
    let mut img = ptr::null_mut();
    assert_eq!(
        unsafe { qrtan_render_basin(&bad_cfg, &mut img) },
        QrtanStatus::InvalidArgument
    );
    assert!(img.is_null());
}

#[test]
fn generated_header_declares_the_api() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qrtan.h")).unwrap();
    assert!(header.contains("#ifndef QRTAN_H"));
    for sym in [
        "typedef struct QrtanMap QrtanMap",
        "typedef struct QrtanImage QrtanImage",
        "QRTAN_STATUS_OK = 0",
        "QRTAN_STATUS_PANIC = 6",
        "enum QrtanStatus qrtan_map_new(double lambda, struct QrtanMap **out)",
        "void qrtan_map_free(struct QrtanMap *map)",
        "qrtan_map_eval",
        "qrtan_inverse_branch",
        "qrtan_solve_xi0",
        "qrtan_classify_orbit",
        "qrtan_itinerary_of",
        "qrtan_render_basin",
        "qrtan_image_write_ppm",
        "qrtan_image_free",
        "const char *qrtan_last_error(void)",
    ] {
        assert!(header.contains(sym), "header lacks {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; header syntax not checked");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"qrtan.h\"\nint main(void) { QrtanMap *m = 0; QrtanStatus s = qrtan_map_new(2.0, &m); qrtan_map_free(m); return s == QRTAN_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args([
            "-std=c99",
            "-Wall",
            "-Werror",
            "-fsyntax-only",
            "-I",
            concat!(env!("CARGO_MANIFEST_DIR"), "/include"),
        ])
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
        {
            return Ok(cc);
        }
    }
    Err(())
}
