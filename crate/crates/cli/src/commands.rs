use std::f64::consts::TAU;
use std::path::Path;
use std::time::Duration;

use kakeya_core::configs::{spec_hash, ConfigSpec, Target};
use kakeya_core::discrete_kakeya::{
    build_group, min_kakeya_exact, min_kakeya_oracle, ratio_table, small_group_suite, verify_kakeya, GroupSpec,
};
use kakeya_core::euclid::{
    certify_cover_oriented, certify_cover_unoriented, direction_angle, elongation_required, membership_test_2d,
    min_line_distance, needle_area_with, tangent_circle_config, AreaRow, ElongationReport, NeedleOptions,
};
use kakeya_core::homog::{lift_omitting_point, liftability_s2, quotient_curve, swept_membership_s2, LiftVerdict, SphereMap};
use kakeya_core::liegroups::{
    certify_cover_cylinder, certify_cover_group, certify_cover_torus, certify_identity_cylinder, torus_winding,
    GroupConfig, GroupElement, GroupKind,
};
use kakeya_core::sphere::{norm3, Vec3};
use kakeya_core::topo_zero::{
    find_zero_highdim, find_zero_oriented_s2, find_zero_unoriented_2d, find_zero_unoriented_3d, DEFAULT_TOL_2D,
    DEFAULT_TOL_S2,
};
use kakeya_core::{Execution, KakeyaError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::output::Table;
use crate::{plot, Command, Ctx, Outcome};

type CmdResult = Result<Outcome, String>;

fn core(e: KakeyaError) -> String {
    e.to_string()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("malformed JSON in {}: {e}", path.display()))
}

fn load_spec(path: &Path) -> Result<(ConfigSpec, String), String> {
    let spec: ConfigSpec = read_json(path)?;
    let h = spec_hash(&spec);
    Ok((spec, h))
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("{what}: '{t}' is not a finite number"))
        })
        .collect()
}

fn parse_length(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞") {
        return Ok(f64::INFINITY);
    }
    match t.parse::<f64>() {
        Ok(r) if r > 0.0 && r.is_finite() => Ok(r),
        _ => Err(format!("R must be positive or 'inf', got '{t}'")),
    }
}

fn positive_tol(tol: f64) -> Result<f64, String> {
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(format!("tolerance must be positive, got {tol}"))
    }
}

/// Parses three coordinates and scales them to unit length.
fn parse_direction(s: &str, what: &str) -> Result<Vec3, String> {
    let v = parse_list(s, what)?;
    if v.len() != 3 {
        return Err(format!("{what} needs 3 coordinates, got {}", v.len()));
    }
    let v = [v[0], v[1], v[2]];
    let n = norm3(v);
    if n == 0.0 {
        return Err(format!("{what} must be nonzero"));
    }
    Ok(v.map(|x| x / n))
}

fn parse_box(s: &str) -> Result<[f64; 4], String> {
    let v = parse_list(s, "box")?;
    match v[..] {
        [a, b, c, d] if a < b && c < d => Ok([a, b, c, d]),
        _ => Err("box must be xmin,xmax,ymin,ymax with xmin < xmax and ymin < ymax".into()),
    }
}

fn load_group(arg: &str) -> Result<GroupSpec, String> {
    let path = Path::new(arg);
    if path.is_file() {
        read_json(path)
    } else {
        GroupSpec::parse(arg).map_err(core)
    }
}

fn table<T: Serialize>(rows: &[T]) -> Result<Table, String> {
    Table::from_records(rows)
}

fn planar_point(spec: &ConfigSpec, theta: f64) -> [f64; 2] {
    let p = spec.eval_angle(theta);
    [p[0], p[1]]
}

pub(crate) fn dispatch(cmd: &Command, ctx: &Ctx) -> CmdResult {
    match cmd {
        Command::Zero { spec, tol, max_depth, restarts } => zero(spec, *tol, *max_depth, *restarts, ctx),
        Command::Cover { spec, target, tol } => cover(spec, target, *tol, ctx),
        Command::LieCover { spec, target, tol, grid } => lie_cover(spec, target, *tol, *grid),
        Command::CylinderId { spec, tol, grid } => {
            let cfg: GroupConfig = read_json(spec)?;
            let tol = positive_tol(*tol)?;
            let cert = certify_identity_cylinder(&cfg, *grid, tol).map_err(core)?;
            Ok(Outcome::new(&cert, cert.is_covered())?.hash(spec_hash(&cfg)).tol("residual", tol))
        }
        Command::TorusWind { spec, grid } => {
            let cfg: GroupConfig = read_json(spec)?;
            let report = torus_winding(&cfg, *grid).map_err(core)?;
            Ok(Outcome::new(&report, true)?.hash(spec_hash(&cfg)))
        }
        Command::Counterexample { radius, samples, tol } => counterexample(*radius, *samples, *tol, ctx),
        Command::Membership { spec, target, r, tol } => membership(spec, target, r, *tol, ctx),
        Command::Elongation { spec, target, r, samples, clip, tol } => {
            elongation(spec, target.as_deref(), r.as_deref(), *samples, clip.as_deref(), *tol, ctx)
        }
        Command::NeedleArea { spec, r, samples, clip, tol } => needle_area(spec, r, *samples, clip.as_deref(), *tol, ctx),
        Command::DiscreteMin { group, budget_ms, require_optimal, oracle } => {
            discrete_min(group, *budget_ms, *require_optimal, *oracle, ctx)
        }
        Command::DiscreteVerify { group, set } => discrete_verify(group, set, ctx),
        Command::RatioTable { group, budget_ms, require_optimal } => {
            let specs = match group {
                Some(list) => list.split(',').map(|s| GroupSpec::parse(s.trim()).map_err(core)).collect::<Result<Vec<_>, _>>()?,
                None => small_group_suite(),
            };
            let rows = ratio_table(&specs, Duration::from_millis(*budget_ms), Execution::default()).map_err(core)?;
            let all = rows.iter().all(|r| r.optimal);
            let mut out = Outcome::new(&rows, all || !require_optimal)?.hash(spec_hash(&specs));
            if ctx.want_table {
                out.table = Some(table(&rows)?);
            }
            Ok(out)
        }
        Command::Degree { spec, depth } => {
            let (spec, h) = load_spec(spec)?;
            let map = SphereMap::new(spec).map_err(core)?;
            let report = liftability_s2(&map, *depth).map_err(core)?;
            Ok(Outcome::new(&report, report.verdict != LiftVerdict::Undecided)?.hash(h))
        }
        Command::QuotientPlot { axis, base, samples } => {
            let axis = parse_direction(axis, "axis")?;
            let base = parse_direction(base, "base")?;
            let curve = quotient_curve(axis, base, *samples).map_err(core)?;
            let mut out = Outcome::new(&curve, true)?;
            if ctx.want_table {
                let rows: Vec<CurveRow> = curve
                    .params
                    .iter()
                    .zip(&curve.points)
                    .map(|(&t, p)| CurveRow { t, x: p[0], y: p[1], z: p[2] })
                    .collect();
                out.table = Some(table(&rows)?);
            }
            if ctx.want_plot {
                out.svg = Some(plot::sphere_curves(std::slice::from_ref(&curve.points), "one-parameter orbit on the sphere"));
            }
            Ok(out)
        }
        Command::Lift { spec, omitted, depth } => {
            let (spec, h) = load_spec(spec)?;
            let map = SphereMap::new(spec).map_err(core)?.with_depth(*depth);
            let omitted = parse_direction(omitted, "omitted")?;
            match lift_omitting_point(&map, omitted) {
                Ok(lift) => Ok(Outcome::new(&lift, true)?.hash(h)),
                Err(KakeyaError::PointNotOmitted { alignment }) => {
                    let miss = LiftFailure { lifted: false, omitted, alignment };
                    Ok(Outcome::new(&miss, false)?.hash(h))
                }
                Err(e) => Err(core(e)),
            }
        }
    }
}

/// Result of `lift` when the image reaches the omitted point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftFailure {
    pub lifted: bool,
    pub omitted: Vec3,
    pub alignment: f64,
}

#[derive(Debug, Serialize)]
struct CurveRow {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
}

fn zero(path: &Path, tol: Option<f64>, max_depth: u32, restarts: usize, ctx: &Ctx) -> CmdResult {
    let (spec, h) = load_spec(path)?;
    let tol = positive_tol(tol.unwrap_or(if spec.dim == 2 { DEFAULT_TOL_2D } else { DEFAULT_TOL_S2 }))?;
    let cert = match spec.dim {
        2 => Some(find_zero_unoriented_2d(&spec, tol).map_err(core)?),
        3 if spec.unoriented => Some(find_zero_unoriented_3d(&spec, tol, max_depth).map_err(core)?),
        3 => Some(find_zero_oriented_s2(&spec, tol, max_depth).map_err(core)?),
        n if n >= 4 => find_zero_highdim(&spec, tol, restarts, ctx.seed).map_err(core)?,
        n => return Err(format!("dimension {n} is not supported")),
    };
    let found = cert.as_ref().is_some_and(|c| c.is_found());
    let mut out = Outcome::new(&cert, found)?.hash(h).tol("residual", tol);
    if ctx.want_plot && spec.dim == 2 {
        let highlight = cert.as_ref().map(|c| {
            let th = direction_angle(&c.direction);
            (th, planar_point(&spec, th))
        });
        out.svg = Some(plot::planar_config(&spec, f64::INFINITY, highlight, Some([0.0, 0.0]), "zero of the perpendicular section"));
    }
    Ok(out)
}

fn cover(path: &Path, target: &str, tol: Option<f64>, ctx: &Ctx) -> CmdResult {
    let (spec, h) = load_spec(path)?;
    let x = parse_list(target, "target")?;
    let tol = positive_tol(tol.unwrap_or(if spec.dim == 2 { DEFAULT_TOL_2D } else { DEFAULT_TOL_S2 }))?;
    let cert = if spec.unoriented {
        certify_cover_unoriented(&spec, &x, tol)
    } else {
        certify_cover_oriented(&spec, &x, tol)
    }
    .map_err(core)?;
    let mut out = Outcome::new(&cert, cert.is_covered())?.hash(h).tol("residual", tol);
    if ctx.want_plot && spec.dim == 2 {
        let th = direction_angle(&cert.direction);
        let hl = Some((th, planar_point(&spec, th)));
        out.svg = Some(plot::planar_config(&spec, f64::INFINITY, hl, Some([x[0], x[1]]), "cover certificate"));
    }
    Ok(out)
}

fn lie_cover(path: &Path, target: &str, tol: f64, grid: usize) -> CmdResult {
    let cfg: GroupConfig = read_json(path)?;
    let tol = positive_tol(tol)?;
    let g = GroupElement::from_coords(cfg.group, &parse_list(target, "target")?).map_err(core)?;
    let cert = match cfg.group {
        GroupKind::Torus => certify_cover_torus(&cfg, &g, grid, tol),
        GroupKind::Cylinder => certify_cover_cylinder(&cfg, &g, grid, tol),
        _ => certify_cover_group(&cfg, &g, tol),
    }
    .map_err(core)?;
    Ok(Outcome::new(&cert, cert.is_covered())?.hash(spec_hash(&cfg)).tol("residual", tol))
}

/// Sampled check that the tangent lines to a circle miss its open disk
/// and cover its exterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub inner_uncovered: usize,
    pub outer_covered: usize,
    pub max_outer_residual: f64,
    /// Infimum over lines of the distance to the origin.
    pub line_distance: f64,
    pub holds: bool,
}

#[derive(Debug, Serialize)]
struct SampleRow {
    region: &'static str,
    x: f64,
    y: f64,
    covered: bool,
    residual: Option<f64>,
}

fn counterexample(radius: f64, samples: usize, tol: f64, ctx: &Ctx) -> CmdResult {
    let tol = positive_tol(tol)?;
    if samples == 0 {
        return Err("samples must be positive".into());
    }
    let spec = tangent_circle_config(radius).map_err(core)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut rows = Vec::with_capacity(2 * samples);
    let (mut inner, mut outer, mut worst) = (0, 0, 0.0f64);
    for region in ["inner", "outer"] {
        for _ in 0..samples {
            let a = rng.random_range(0.0..TAU);
            let r = if region == "inner" {
                0.99 * radius * rng.random_range(0.0f64..1.0).sqrt()
            } else {
                radius * rng.random_range(1.01..10.0)
            };
            let p = [r * a.cos(), r * a.sin()];
            let m = membership_test_2d(&spec, &p, f64::INFINITY, tol).map_err(core)?;
            let best = m.witnesses.iter().map(|w| w.residual).reduce(f64::min);
            if region == "inner" && !m.covered {
                inner += 1;
            }
            if region == "outer" && m.covered && best.is_some_and(|b| b <= tol) {
                outer += 1;
                worst = worst.max(best.unwrap_or(0.0));
            }
            rows.push(SampleRow { region, x: p[0], y: p[1], covered: m.covered, residual: best });
        }
    }
    let d = min_line_distance(&spec, &[0.0, 0.0]).map_err(core)?;
    let holds = inner == samples && outer == samples && (d - radius).abs() <= tol * radius.max(1.0);
    let report = CounterexampleReport {
        radius,
        samples,
        seed: ctx.seed,
        inner_uncovered: inner,
        outer_covered: outer,
        max_outer_residual: worst,
        line_distance: d,
        holds,
    };
    let mut out = Outcome::new(&report, holds)?.hash(spec_hash(&spec)).tol("residual", tol);
    if ctx.want_table {
        out.table = Some(table(&rows)?);
    }
    if ctx.want_plot {
        let pts: Vec<([f64; 2], bool)> = rows.iter().map(|r| ([r.x, r.y], r.covered)).collect();
        out.svg = Some(plot::sample_points(&spec, &pts, "tangent lines to a circle"));
    }
    Ok(out)
}

fn membership(path: &Path, target: &str, r: &str, tol: Option<f64>, ctx: &Ctx) -> CmdResult {
    let (spec, h) = load_spec(path)?;
    if spec.target == Target::Sphere {
        let tol = positive_tol(tol.unwrap_or(DEFAULT_TOL_S2))?;
        let map = SphereMap::new(spec).map_err(core)?;
        let report = swept_membership_s2(&map, parse_direction(target, "target")?, tol).map_err(core)?;
        return Ok(Outcome::new(&report, report.covered)?.hash(h).tol("distance", tol));
    }
    let tol = positive_tol(tol.unwrap_or(DEFAULT_TOL_2D))?;
    let x = parse_list(target, "target")?;
    let length = parse_length(r)?;
    let report = membership_test_2d(&spec, &x, length, tol).map_err(core)?;
    let mut out = Outcome::new(&report, report.covered)?.hash(h).tol("residual", tol);
    if ctx.want_table {
        out.table = Some(table(&report.witnesses)?);
    }
    if ctx.want_plot {
        let hl = report
            .witnesses
            .iter()
            .filter(|w| w.t.abs() <= 0.5 * length)
            .min_by(|a, b| a.t.abs().total_cmp(&b.t.abs()))
            .map(|w| (w.theta, planar_point(&spec, w.theta)));
        out.svg = Some(plot::planar_config(&spec, length, hl, Some([x[0], x[1]]), "membership"));
    }
    Ok(out)
}

fn needle_opts(samples: usize, clip: Option<&str>, tol: f64, seed: u64) -> Result<NeedleOptions, String> {
    Ok(NeedleOptions {
        samples,
        seed,
        clip: clip.map(parse_box).transpose()?,
        tol: positive_tol(tol)?,
        ..NeedleOptions::default()
    })
}

fn elongation(
    path: &Path,
    target: Option<&str>,
    r: Option<&str>,
    samples: usize,
    clip: Option<&str>,
    tol: f64,
    ctx: &Ctx,
) -> CmdResult {
    let (spec, h) = load_spec(path)?;
    let tol = positive_tol(tol)?;
    match (target, r) {
        (Some(t), None) => {
            let x = parse_list(t, "target")?;
            let req = elongation_required(&spec, &x, tol).map_err(core)?;
            let mut out = Outcome::new(&ElongationReport::RequiredLength(req.clone()), true)?.hash(h).tol("residual", tol);
            if ctx.want_plot {
                let hl = Some((req.witness.theta, planar_point(&spec, req.witness.theta)));
                out.svg = Some(plot::planar_config(&spec, req.r_min, hl, Some([x[0], x[1]]), "required elongation"));
            }
            Ok(out)
        }
        (None, Some(r)) => {
            let length = parse_length(r)?;
            let opts = NeedleOptions { length, ..needle_opts(samples, clip, tol, ctx.seed)? };
            let area = needle_area_with(&spec, &opts).map_err(core)?;
            let mut out = Outcome::new(&ElongationReport::Area(area.clone()), true)?.hash(h).tol("membership", tol);
            if ctx.want_table {
                out.table = Some(table(&[AreaRow::from(&area)])?);
            }
            if ctx.want_plot {
                out.svg = Some(plot::planar_config(&spec, length, None, None, "needle set"));
            }
            Ok(out)
        }
        _ => Err("elongation takes exactly one of --target and --R".into()),
    }
}

fn needle_area(path: &Path, r: &str, samples: usize, clip: Option<&str>, tol: f64, ctx: &Ctx) -> CmdResult {
    let (spec, h) = load_spec(path)?;
    let lengths = r.split(',').map(parse_length).collect::<Result<Vec<_>, _>>()?;
    let base = needle_opts(samples, clip, tol, ctx.seed)?;
    let areas = lengths
        .iter()
        .map(|&length| needle_area_with(&spec, &NeedleOptions { length, ..base }))
        .collect::<Result<Vec<_>, _>>()
        .map_err(core)?;
    let mut out = Outcome::new(&areas, true)?.hash(h).tol("membership", base.tol);
    if ctx.want_table {
        let rows: Vec<AreaRow> = areas.iter().map(AreaRow::from).collect();
        out.table = Some(table(&rows)?);
    }
    if ctx.want_plot {
        out.svg = Some(plot::planar_config(&spec, lengths[0], None, None, "needle set"));
    }
    Ok(out)
}

fn discrete_min(group: &str, budget_ms: u64, require_optimal: bool, oracle: bool, ctx: &Ctx) -> CmdResult {
    let spec = load_group(group)?;
    let g = build_group(&spec).map_err(core)?;
    let report = if oracle {
        min_kakeya_oracle(&g).map_err(core)?
    } else {
        min_kakeya_exact(&g, Duration::from_millis(budget_ms))
    };
    let mut out = Outcome::new(&report, report.optimal || !require_optimal)?.hash(spec_hash(&spec));
    if ctx.want_plot {
        out.svg = Some(plot::cayley_heatmap(&g, &report.cover.elements, &format!("minimal Kakeya set in {}", g.name)));
    }
    Ok(out)
}

fn discrete_verify(group: &str, set: &str, ctx: &Ctx) -> CmdResult {
    let spec = load_group(group)?;
    let g = build_group(&spec).map_err(core)?;
    let elements = set
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("set: '{}' is not an element index", t.trim())))
        .collect::<Result<Vec<_>, _>>()?;
    let report = verify_kakeya(&g, &elements).map_err(core)?;
    let mut out = Outcome::new(&report, report.ok)?.hash(spec_hash(&spec));
    if ctx.want_table {
        out.table = Some(table(&report.checks)?);
    }
    if ctx.want_plot {
        out.svg = Some(plot::cayley_heatmap(&g, &elements, &format!("candidate set in {}", g.name)));
    }
    Ok(out)
}
