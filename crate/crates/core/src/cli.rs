//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage errors (bad flags or arguments
//! outside a map's domain), 1 when a verification check fails or an
//! artifact cannot be written.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::analysis::{self, Fate};
use crate::error::Error;
use crate::itinerary::{self, PeriodicCycleSpec, StopReason};
use crate::maps::{self, MapParams};
use crate::plane::PoleIndex;
use crate::point::{ExtendedPoint, PlanePoint, Vec3};
use crate::render::{self, RenderConfig, Window};
use crate::sampling::DEFAULT_SEED;
use crate::verify::{self, Suite};

const PIXEL_HELP: &str =
    "Pixel (i, j), with row j counted from the top, samples the center of its cell: \
x = x0 + (i + 0.5)(x1 - x0)/W, y = y1 - (j + 0.5)(y1 - y0)/H, so y increases upward. \
Output is binary PPM (P6); a .png path is accepted when built with the `png` feature.";

#[derive(Debug, Parser)]
#[command(
    name = "qrtan",
    version,
    about = "Dynamics of the quasiregular tangent family T_λ in R³"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render the fate of every plane point (basins of 0 and ±ξ₀, escape, poles).
    #[command(long_about = PIXEL_HELP)]
    RenderBasin(RenderArgs),
    /// Render the first iterate at which the orbit enters a far pole diamond.
    #[command(long_about = PIXEL_HELP)]
    RenderEscape(RenderArgs),
    /// Print an orbit of T_λ as NDJSON.
    Orbit(OrbitArgs),
    /// Read the pole itinerary of a plane point, or construct a point from a ray itinerary.
    Itinerary(ItineraryArgs),
    /// Periodic point for a cycle of far poles, or near an escaping point.
    Periodic(PeriodicArgs),
    /// Solve ξ = λ tanh ξ for the attracting fixed points (0, 0, ±ξ₀).
    SolveXi0(LambdaArg),
    /// Run sampled structural checks and print one PASS/FAIL line each.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct LambdaArg {
    #[arg(long)]
    lambda: f64,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    lambda: f64,
    /// x0,y0,x1,y1 (default -π/4,-π/4,3π/4,3π/4)
    #[arg(long, value_parser = parse_window)]
    window: Option<Window>,
    /// WxH
    #[arg(long, value_parser = parse_res, default_value = "256x256")]
    res: (usize, usize),
    /// Iteration cap (default 500 for basins, 200 for escape depth)
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 50.0)]
    escape_radius: f64,
    /// Worker threads (0 = all cores); the image does not depend on it
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Accepted for uniformity; rendering uses no randomness
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct OrbitArgs {
    #[arg(long)]
    lambda: f64,
    /// x,y,z
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    start: Vec3,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Write NDJSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ItineraryArgs {
    #[arg(long)]
    lambda: f64,
    /// x,y: read the itinerary of this point
    #[arg(long, value_parser = parse_plane, allow_hyphen_values = true, conflicts_with = "ray")]
    start: Option<PlanePoint>,
    /// m0,n0,dm,dn: build the point with itinerary (m0 + j·dm, n0 + j·dn), then read it back
    #[arg(long, value_parser = parse_ints4, allow_hyphen_values = true)]
    ray: Option<(i64, i64, i64, i64)>,
    /// Inverse branches composed when building from --ray
    #[arg(long, default_value_t = itinerary::DEFAULT_COMPOSE)]
    compose: usize,
    /// Symbols to read
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PeriodicArgs {
    #[arg(long)]
    lambda: f64,
    /// m,n;m,n;... pole cycle
    #[arg(long, value_parser = parse_cycle, allow_hyphen_values = true, conflicts_with = "near")]
    cycle: Option<Cycle>,
    /// x,y: escaping point to approximate by periodic points
    #[arg(long, value_parser = parse_plane, allow_hyphen_values = true)]
    near: Option<PlanePoint>,
    #[arg(long, default_value_t = 1e-3)]
    eta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    /// maps, fixed, monotone, derivatives, branches, itineraries, periodic, petals or all
    #[arg(long, default_value = "all", value_parser = parse_suite)]
    suite: Suite,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

fn floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!(
            "expected {n} comma-separated numbers, got {}",
            v.len()
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err("values must be finite".into());
    }
    Ok(v)
}

fn parse_window(s: &str) -> Result<Window, String> {
    let v = floats(s, 4)?;
    Ok(Window {
        x0: v[0],
        y0: v[1],
        x1: v[2],
        y1: v[3],
    })
}

fn parse_res(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("{s:?} is not WxH"))?;
    let w = w.parse().map_err(|e| format!("width: {e}"))?;
    let h = h.parse().map_err(|e| format!("height: {e}"))?;
    Ok((w, h))
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v = floats(s, 3)?;
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn parse_plane(s: &str) -> Result<PlanePoint, String> {
    let v = floats(s, 2)?;
    Ok(PlanePoint::new(v[0], v[1]))
}

fn ints(s: &str) -> Result<Vec<i64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

fn parse_ints4(s: &str) -> Result<(i64, i64, i64, i64), String> {
    match ints(s)?.as_slice() {
        [a, b, c, d] => Ok((*a, *b, *c, *d)),
        v => Err(format!("expected 4 integers, got {}", v.len())),
    }
}

/// A `;`-separated list of poles, kept as one clap value.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
struct Cycle(Vec<PoleIndex>);

fn parse_cycle(s: &str) -> Result<Cycle, String> {
    s.split(';')
        .map(|p| match ints(p)?.as_slice() {
            [m, n] => Ok(PoleIndex::new(*m, *n)),
            _ => Err(format!("{p:?} is not m,n")),
        })
        .collect::<Result<_, _>>()
        .map(Cycle)
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::parse(s).ok_or_else(|| {
        let names: Vec<_> = Suite::NAMES.iter().map(|(n, _)| *n).collect();
        format!("unknown suite {s:?}; expected one of {}", names.join(", "))
    })
}

/// `x` with `digits` significant digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Failure of a subcommand, carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Input(_) | Error::Domain(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 1,
            message: format!("i/o: {e}"),
        }
    }
}

type CmdResult = Result<i32, Failure>;

/// Line sink that writes either to the given stdout or to a file.
fn sink<'a>(
    path: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>, Failure> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(stdout),
    })
}

fn params(lambda: f64) -> Result<MapParams, Failure> {
    Ok(MapParams::new(lambda)?)
}

fn point_json(p: &ExtendedPoint) -> serde_json::Value {
    match p {
        ExtendedPoint::Finite(v) => json!({"x": v.x, "y": v.y, "z": v.z}),
        ExtendedPoint::Infinity => json!({"inf": true}),
    }
}

fn render_config(a: &RenderArgs, default_iter: usize) -> RenderConfig {
    RenderConfig {
        lambda: a.lambda,
        window: a.window.unwrap_or_default(),
        width: a.res.0,
        height: a.res.1,
        max_iter: a.max_iter.unwrap_or(default_iter),
        tol: a.tol,
        escape_radius: a.escape_radius,
        threads: a.threads,
    }
}

fn cmd_render_basin(a: &RenderArgs, out: &mut dyn Write) -> CmdResult {
    let cfg = render_config(a, 500);
    let img = render::render_basin(&cfg)?;
    img.image.save(&a.out)?;
    let counts: serde_json::Map<String, serde_json::Value> = Fate::ALL
        .iter()
        .map(|f| (format!("{f:?}"), json!(img.count(*f))))
        .collect();
    writeln!(
        out,
        "{}",
        json!({"command": "render-basin", "config": cfg, "out": a.out, "fates": counts})
    )?;
    Ok(0)
}

fn cmd_render_escape(a: &RenderArgs, out: &mut dyn Write) -> CmdResult {
    let cfg = render_config(a, 200);
    let img = render::render_escape_depth(&cfg)?;
    img.image.save(&a.out)?;
    writeln!(
        out,
        "{}",
        json!({"command": "render-escape", "config": cfg, "out": a.out, "finite_depth_fraction": img.finite_fraction()})
    )?;
    Ok(0)
}

fn cmd_orbit(a: &OrbitArgs, stdout: &mut dyn Write) -> CmdResult {
    let p = params(a.lambda)?;
    if !a.start.is_finite() {
        return Err(Failure {
            code: 2,
            message: "start point must be finite".into(),
        });
    }
    let mut out = sink(&a.out, stdout)?;
    writeln!(
        out,
        "{}",
        json!({"config": {"command": "orbit", "lambda": a.lambda, "start": [a.start.x, a.start.y, a.start.z], "n": a.n}})
    )?;
    let mut cur = ExtendedPoint::Finite(a.start);
    for n in 0..=a.n {
        let mut rec = point_json(&cur);
        rec["n"] = json!(n);
        writeln!(out, "{rec}")?;
        match cur {
            ExtendedPoint::Finite(v) if n < a.n => cur = maps::t_eval(v, &p),
            _ => break,
        }
    }
    out.flush()?;
    Ok(0)
}

fn cmd_itinerary(a: &ItineraryArgs, stdout: &mut dyn Write) -> CmdResult {
    let p = params(a.lambda)?;
    let (start, built) = match (a.start, a.ray) {
        (Some(s), _) => (s, None),
        (None, Some((m0, n0, dm, dn))) => {
            let s = itinerary::Itinerary::ray(PoleIndex::new(m0, n0), (dm, dn), &p)?;
            let shadow = itinerary::shadow_orbit(&s, &p, a.compose)?;
            (shadow.start(), Some(shadow))
        }
        (None, None) => {
            return Err(Failure {
                code: 2,
                message: "give --start x,y or --ray m0,n0,dm,dn".into(),
            })
        }
    };
    let mut out = sink(&a.out, stdout)?;
    writeln!(
        out,
        "{}",
        json!({"config": {"command": "itinerary", "lambda": a.lambda, "start": [start.x, start.y], "ray": a.ray, "compose": a.compose, "n": a.n}})
    )?;
    if let Some(shadow) = &built {
        writeln!(
            out,
            "{}",
            json!({"constructed": {"x": start.x, "y": start.y, "shadow_step_residual": shadow.max_step_residual(&p), "shadow_diamonds": shadow.diamonds_visited()}})
        )?;
    }
    let read = itinerary::itinerary_of(start, &p, a.n);
    for (j, q) in read.poles.iter().enumerate() {
        let c = q.location();
        writeln!(
            out,
            "{}",
            json!({"j": j, "m": q.m, "n": q.n, "pole": [c.x, c.y]})
        )?;
    }
    let stop = match read.stop {
        StopReason::Complete => json!({"stop": "complete"}),
        StopReason::LeftDiamonds { index, point } => {
            json!({"stop": "left-diamonds", "index": index, "point": point_json(&point)})
        }
        StopReason::PoleHit { index } => json!({"stop": "pole-hit", "index": index}),
    };
    writeln!(out, "{stop}")?;
    out.flush()?;
    Ok(0)
}

fn cmd_periodic(a: &PeriodicArgs, stdout: &mut dyn Write) -> CmdResult {
    let p = params(a.lambda)?;
    let (periodic, extra) = match (&a.cycle, a.near) {
        (Some(c), _) => (
            itinerary::periodic_point_from_cycle(&PeriodicCycleSpec::new(c.0.clone())?, &p)?,
            json!(null),
        ),
        (None, Some(v)) => {
            let r = itinerary::periodic_near_escaping(v, a.eta, &p)?;
            let extra = json!({"n": r.n, "m": r.m, "distance": r.distance});
            (r.periodic, extra)
        }
        (None, None) => {
            return Err(Failure {
                code: 2,
                message: "give --cycle m,n;... or --near x,y".into(),
            })
        }
    };
    let mut out = sink(&a.out, stdout)?;
    writeln!(
        out,
        "{}",
        json!({"config": {"command": "periodic", "lambda": a.lambda, "cycle": a.cycle, "near": a.near.map(|v| [v.x, v.y]), "eta": a.eta}})
    )?;
    let orbit: Vec<_> = periodic.orbit.iter().map(|y| [y.x, y.y]).collect();
    writeln!(
        out,
        "{}",
        json!({
            "point": [periodic.point.x, periodic.point.y],
            "period": periodic.period(),
            "orbit": orbit,
            "iterations": periodic.iterations,
            "step_residual": periodic.step_residual,
            "literal_residual": periodic.literal_residual,
            "near": extra,
        })
    )?;
    out.flush()?;
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let p = params(a.lambda)?;
    let checks = verify::run_suite(a.suite, &p, a.seed)?;
    for c in &checks {
        writeln!(out, "{c}")?;
    }
    let failed = checks.iter().filter(|c| c.failed()).count();
    writeln!(out, "{} checks, {failed} failed", checks.len())?;
    Ok(if failed == 0 { 0 } else { 1 })
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::RenderBasin(a) => cmd_render_basin(a, out),
        Command::RenderEscape(a) => cmd_render_escape(a, out),
        Command::Orbit(a) => cmd_orbit(a, out),
        Command::Itinerary(a) => cmd_itinerary(a, out),
        Command::Periodic(a) => cmd_periodic(a, out),
        Command::SolveXi0(a) => analysis::solve_xi0(a.lambda)
            .map_err(Failure::from)
            .and_then(|xi| Ok(writeln!(out, "{}", format_significant(xi, 12)).map(|_| 0)?)),
        Command::Verify(a) => cmd_verify(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
