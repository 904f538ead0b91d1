//! Zero localization for perpendicular sections and tangent fields, map
//! degree on `S^2`, and planar winding numbers.
//!
//! Every coverage certificate in the crate reduces to one of these finders:
//! a zero of `L ↦ P_{L^⊥}(σ(L))` is a line `σ(L) + L` through the origin.

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::configs::{
    dot, eval_config, norm, random_unit, ConfigSpec, Direction, DirectionMap, OrientedDirection,
    UnorientedDirection,
};
use crate::error::{KakeyaError, Result};
use crate::par::{self, Execution};
use crate::sphere::{
    arc, cross3, dot3, normalize3, polish_zero, slerp, solid_angle, tangent_basis, to3, transport3,
    Icosphere, Vec3,
};

pub const DEFAULT_TOL_2D: f64 = 1e-9;
pub const DEFAULT_TOL_S2: f64 = 1e-6;
pub const DEFAULT_GRID_CELLS: usize = 256;
pub const DEFAULT_START_DEPTH: u32 = 4;
pub const DEFAULT_MAX_DEPTH: u32 = 12;
pub const EDGE_SAMPLES: usize = 16;
const MAX_EDGE_SAMPLES: usize = 1024;
/// Adjacent boundary samples whose field angles differ by more than this
/// trigger edge refinement.
const MAX_SAMPLE_TURN: f64 = PI / 2.0;
const POLISH_ITERS: usize = 60;
const DEGREE_MARGIN: f64 = 0.1;
const MAX_IMAGE_EDGE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroMethod {
    Bisection2d,
    IndexSubdivisionS2,
    HeuristicHighdim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroStatus {
    Found,
    /// The search ended above tolerance; the direction is the best seen.
    Unresolved,
}

/// A direction at which the perpendicular section (or tangent field)
/// vanishes to within `residual`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCertificate {
    pub direction: Direction,
    pub residual: f64,
    pub iterations: usize,
    pub method: ZeroMethod,
    pub status: ZeroStatus,
    /// Sum of triangle indices on the starting icosphere mesh, when the full
    /// mesh was evaluated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_index_sum: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ZeroCertificate {
    pub fn is_found(&self) -> bool {
        self.status == ZeroStatus::Found
    }
}

/// `v − (v·e) e` for a unit vector `e`.
pub fn project_perp(v: &[f64], e: &[f64]) -> Vec<f64> {
    let c = dot(v, e);
    v.iter().zip(e).map(|(a, b)| a - c * b).collect()
}

/// `P_{L^⊥}(σ(L))`.
pub fn perp_section(spec: &ConfigSpec, line: &UnorientedDirection) -> Result<Vec<f64>> {
    let value = eval_config(spec, &Direction::Unoriented(line.clone()))?;
    Ok(project_perp(&value, &line.unit_vector()))
}

fn require_unoriented(spec: &ConfigSpec) -> Result<()> {
    spec.check()?;
    if !spec.unoriented || !spec.is_structurally_even() {
        return Err(KakeyaError::NotEven { defect: spec.antipodal_defect() });
    }
    Ok(())
}

fn require_dim(spec: &ConfigSpec, dim: usize) -> Result<()> {
    if spec.dim != dim {
        return Err(KakeyaError::DimensionMismatch { expected: dim, found: spec.dim });
    }
    Ok(())
}

/// Planar zero of the perpendicular section of an unoriented spec.
///
/// With `e(θ) = (cos θ, sin θ)` and `n(θ) = (-sin θ, cos θ)`, the signed
/// section `g(θ) = σ(θ)·n(θ)` satisfies `g(π) = -g(0)`, so a grid scan on
/// `[0, π]` always meets a sign change (or an exact zero). The first one is
/// refined by bisection.
pub fn find_zero_unoriented_2d(spec: &ConfigSpec, tol: f64) -> Result<ZeroCertificate> {
    check_tol(tol)?;
    require_dim(spec, 2)?;
    require_unoriented(spec)?;
    Ok(planar_zero(spec, tol, DEFAULT_GRID_CELLS))
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(KakeyaError::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Signed perpendicular component `σ(θ)·n(θ)`.
pub fn signed_section<M: DirectionMap + ?Sized>(map: &M, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let mut v = [0.0; 2];
    map.eval_into(&[c, s], &mut v);
    -v[0] * s + v[1] * c
}

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs.
/// Runs to machine resolution so that the answer does not depend on where
/// the tolerance happens to be crossed. Returns `(x, |f(x)|, steps)`.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64, usize) {
    let mut flo = f(lo);
    let fhi = f(hi);
    let (mut best, mut best_val) = if flo.abs() <= fhi.abs() { (lo, flo.abs()) } else { (hi, fhi.abs()) };
    let mut steps = 0;
    while steps < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        steps += 1;
        let fm = f(mid);
        if fm.abs() < best_val {
            best = mid;
            best_val = fm.abs();
        }
        if fm == 0.0 {
            break;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    (best, best_val, steps)
}

/// First zero of a sampled scalar function on `[a, b]` via grid scan and
/// bisection. `None` when the grid shows no sign change and no sample is
/// within `tol`.
pub(crate) fn first_grid_zero<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cells: usize,
    tol: f64,
) -> Option<(f64, f64, usize)> {
    let step = (b - a) / cells as f64;
    let mut prev = f(a);
    if prev.abs() <= tol {
        return Some((a, prev.abs(), 0));
    }
    for i in 1..=cells {
        let t = if i == cells { b } else { a + step * i as f64 };
        let cur = f(t);
        if cur.abs() <= tol {
            return Some((t, cur.abs(), i));
        }
        if (cur < 0.0) != (prev < 0.0) {
            let (x, r, steps) = bisect(&f, a + step * (i - 1) as f64, t);
            return Some((x, r, i + steps));
        }
        prev = cur;
    }
    None
}

/// Planar zero finder over any direction map (no evenness check).
pub fn planar_zero<M: DirectionMap + ?Sized>(map: &M, tol: f64, cells: usize) -> ZeroCertificate {
    let g = |t: f64| signed_section(map, t);
    if let Some((theta, residual, iterations)) = first_grid_zero(g, 0.0, PI, cells, tol) {
        return ZeroCertificate {
            direction: Direction::Unoriented(UnorientedDirection::from_angle(theta)),
            residual,
            iterations,
            method: ZeroMethod::Bisection2d,
            status: if residual <= tol { ZeroStatus::Found } else { ZeroStatus::Unresolved },
            mesh_index_sum: None,
            depth: None,
            note: None,
        };
    }
    // no sign change: the section is flat on the grid or the spec is odd
    let (theta, residual) = (0..=cells)
        .map(|i| {
            let t = PI * i as f64 / cells as f64;
            (t, g(t).abs())
        })
        .fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    ZeroCertificate {
        direction: Direction::Unoriented(UnorientedDirection::from_angle(theta)),
        residual,
        iterations: cells + 1,
        method: ZeroMethod::Bisection2d,
        status: if residual <= tol { ZeroStatus::Found } else { ZeroStatus::Unresolved },
        mesh_index_sum: None,
        depth: None,
        note: Some("no sign change on grid; returning argmin".into()),
    }
}

/// Options for the icosphere index subdivision.
#[derive(Debug, Clone, Copy)]
pub struct S2Options {
    pub tol: f64,
    pub start_depth: u32,
    pub max_depth: u32,
    pub edge_samples: usize,
    pub exec: Execution,
}

impl Default for S2Options {
    fn default() -> Self {
        S2Options {
            tol: DEFAULT_TOL_S2,
            start_depth: DEFAULT_START_DEPTH,
            max_depth: DEFAULT_MAX_DEPTH,
            edge_samples: EDGE_SAMPLES,
            exec: Execution::default(),
        }
    }
}

/// Zero of the tangent field `v(x) = σ(x) − (σ(x)·x) x` of an oriented
/// configuration on `S^2`.
pub fn find_zero_oriented_s2(spec: &ConfigSpec, tol: f64, max_depth: u32) -> Result<ZeroCertificate> {
    check_tol(tol)?;
    spec.check()?;
    require_dim(spec, 3)?;
    let opts = S2Options { tol, max_depth: max_depth.max(DEFAULT_START_DEPTH), ..S2Options::default() };
    Ok(tangent_zero_s2(spec, &opts))
}

/// Unoriented version: the even tangent field on `S^2` descends from the
/// perpendicular section on `RP^2`, so its zero gives the line.
pub fn find_zero_unoriented_3d(spec: &ConfigSpec, tol: f64, max_depth: u32) -> Result<ZeroCertificate> {
    check_tol(tol)?;
    require_dim(spec, 3)?;
    require_unoriented(spec)?;
    let opts = S2Options { tol, max_depth: max_depth.max(DEFAULT_START_DEPTH), ..S2Options::default() };
    Ok(unorient(tangent_zero_s2(spec, &opts)))
}

pub(crate) fn unorient(mut cert: ZeroCertificate) -> ZeroCertificate {
    if let Direction::Oriented(d) = &cert.direction {
        if let Ok(u) = UnorientedDirection::from_vector(d.as_slice()) {
            cert.direction = Direction::Unoriented(u);
        }
    }
    cert
}

fn tangent_at<M: DirectionMap + ?Sized>(map: &M, x: Vec3) -> Vec3 {
    let mut s = [0.0; 3];
    map.eval_into(&x, &mut s);
    let c = dot3(s, x);
    [s[0] - c * x[0], s[1] - c * x[1], s[2] - c * x[2]]
}

/// Boundary samples of one edge: points and tangent field values.
type EdgeSamples = Vec<(Vec3, Vec3)>;

/// A field sample that is already a zero to tolerance.
struct Degenerate(Vec3, f64);

fn sample_edge<M: DirectionMap + ?Sized>(
    map: &M,
    a: Vec3,
    b: Vec3,
    count: usize,
    tol: f64,
) -> std::result::Result<EdgeSamples, Degenerate> {
    let mut out = Vec::with_capacity(count + 1);
    for k in 0..=count {
        let p = slerp(a, b, k as f64 / count as f64);
        let v = tangent_at(map, p);
        let r = dot3(v, v).sqrt();
        if r <= tol {
            return Err(Degenerate(p, r));
        }
        out.push((p, v));
    }
    Ok(out)
}

/// Winding of the transported field along `samples` in the chart at
/// `center`, or `None` when adjacent samples turn too far.
fn chart_turning(center: Vec3, basis: &[Vec3; 2], samples: &[(Vec3, Vec3)], reverse: bool) -> Option<f64> {
    let angle = |(p, v): &(Vec3, Vec3)| {
        let t = transport3(*p, center, *v);
        dot3(t, basis[1]).atan2(dot3(t, basis[0]))
    };
    let mut total = 0.0;
    let iter: Box<dyn Iterator<Item = &(Vec3, Vec3)>> =
        if reverse { Box::new(samples.iter().rev()) } else { Box::new(samples.iter()) };
    let mut prev: Option<f64> = None;
    for s in iter {
        let a = angle(s);
        if let Some(p) = prev {
            let d = wrap_angle(a - p);
            if d.abs() > MAX_SAMPLE_TURN {
                return None;
            }
            total += d;
        }
        prev = Some(a);
    }
    Some(total)
}

pub(crate) fn wrap_angle(d: f64) -> f64 {
    let mut d = d.rem_euclid(TAU);
    if d > PI {
        d -= TAU;
    }
    d
}

fn chart_basis(center: Vec3) -> [Vec3; 2] {
    let b = tangent_basis(&center);
    let u = to3(&b[0]);
    // right-handed so that counter-clockwise seen from outside is positive
    let w = cross3(center, u);
    [u, w]
}

fn centroid(tri: &[Vec3; 3]) -> Vec3 {
    normalize3([
        tri[0][0] + tri[1][0] + tri[2][0],
        tri[0][1] + tri[1][1] + tri[2][1],
        tri[0][2] + tri[1][2] + tri[2][2],
    ])
}

enum IndexOutcome {
    Index(i64),
    Degenerate(Vec3, f64),
    Unresolved,
}

/// Index of the tangent field around a spherical triangle, sampling each
/// edge with `base` points and doubling on large turns.
fn triangle_index<M: DirectionMap + ?Sized>(
    map: &M,
    tri: [Vec3; 3],
    base: usize,
    tol: f64,
    cached: Option<[&EdgeSamples; 3]>,
) -> IndexOutcome {
    let center = centroid(&tri);
    let basis = chart_basis(center);
    let mut total = 0.0;
    for e in 0..3 {
        let (a, b) = (tri[e], tri[(e + 1) % 3]);
        let mut turning = cached.and_then(|c| chart_turning(center, &basis, c[e], false));
        let mut count = if cached.is_some() { base * 2 } else { base };
        while turning.is_none() {
            if count > MAX_EDGE_SAMPLES {
                return IndexOutcome::Unresolved;
            }
            match sample_edge(map, a, b, count, tol) {
                Ok(s) => turning = chart_turning(center, &basis, &s, false),
                Err(Degenerate(p, r)) => return IndexOutcome::Degenerate(p, r),
            }
            count *= 2;
        }
        total += turning.unwrap_or(0.0);
    }
    let w = total / TAU;
    let idx = w.round();
    if (w - idx).abs() > 0.25 {
        return IndexOutcome::Unresolved;
    }
    IndexOutcome::Index(idx as i64)
}

/// Index subdivision on the icosphere followed by a local polish.
pub fn tangent_zero_s2<M: DirectionMap + ?Sized>(map: &M, opts: &S2Options) -> ZeroCertificate {
    let tol = opts.tol;
    let mesh = Icosphere::new(opts.start_depth);
    let found = |p: Vec3, r: f64, iterations: usize, note: &str| ZeroCertificate {
        direction: Direction::Oriented(OrientedDirection::from_vector(&p).expect("unit point")),
        residual: r,
        iterations,
        method: ZeroMethod::IndexSubdivisionS2,
        status: ZeroStatus::Found,
        mesh_index_sum: None,
        depth: Some(opts.start_depth),
        note: Some(note.into()),
    };

    // undirected edges in a fixed order
    let mut edges: Vec<(usize, usize)> = mesh
        .faces
        .iter()
        .flat_map(|f| (0..3).map(move |e| (f[e].min(f[(e + 1) % 3]), f[e].max(f[(e + 1) % 3]))))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let sampled = par::map_slice(opts.exec, &edges, |&(a, b)| {
        sample_edge(map, mesh.vertices[a], mesh.vertices[b], opts.edge_samples, tol)
    });
    let mut edge_samples = Vec::with_capacity(edges.len());
    for s in sampled {
        match s {
            Ok(s) => edge_samples.push(s),
            Err(Degenerate(p, r)) => return found(p, r, 0, "zero on a mesh edge"),
        }
    }
    let lookup = |a: usize, b: usize| -> (&EdgeSamples, bool) {
        let key = (a.min(b), a.max(b));
        let i = edges.binary_search(&key).expect("edge present");
        (&edge_samples[i], a > b)
    };

    let indices = par::map_indices(opts.exec, mesh.faces.len(), |f| {
        let face = mesh.faces[f];
        let tri = mesh.triangle(f);
        // reversed edges are re-sampled in the stored direction and walked
        // backwards by sampling fresh; simpler to orient copies here
        let owned: Vec<EdgeSamples> = (0..3)
            .map(|e| {
                let (s, rev) = lookup(face[e], face[(e + 1) % 3]);
                if rev {
                    s.iter().rev().copied().collect()
                } else {
                    s.clone()
                }
            })
            .collect();
        triangle_index(map, tri, opts.edge_samples, tol, Some([&owned[0], &owned[1], &owned[2]]))
    });

    let mut index_sum = 0i64;
    let mut complete = true;
    let mut start: Option<usize> = None;
    for (f, outcome) in indices.iter().enumerate() {
        match outcome {
            IndexOutcome::Degenerate(p, r) => return found(*p, *r, 0, "zero on a refined edge"),
            IndexOutcome::Index(i) => {
                index_sum += i;
                if *i != 0 && start.is_none() {
                    start = Some(f);
                }
            }
            IndexOutcome::Unresolved => complete = false,
        }
    }
    let mesh_index_sum = complete.then_some(index_sum);

    let mut iterations = 0;
    let mut best = {
        let (p, r) = mesh
            .vertices
            .iter()
            .map(|&p| (p, norm(&tangent_at(map, p))))
            .fold(([0.0, 0.0, 1.0], f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        (p, r)
    };
    let field = |y: &[f64], out: &mut [f64]| {
        let v = tangent_at(map, to3(y));
        out.copy_from_slice(&v);
    };

    let mut depth = opts.start_depth;
    if let Some(f) = start {
        let mut tri = mesh.triangle(f);
        loop {
            let p = polish_zero(&field, &centroid(&tri), tol, POLISH_ITERS);
            iterations += p.iterations.max(1);
            if p.residual < best.1 {
                best = (to3(&p.point), p.residual);
            }
            if best.1 <= tol || depth >= opts.max_depth {
                break;
            }
            let [a, b, c] = tri;
            let ab = normalize3([a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
            let bc = normalize3([b[0] + c[0], b[1] + c[1], b[2] + c[2]]);
            let ca = normalize3([c[0] + a[0], c[1] + a[1], c[2] + a[2]]);
            let children = [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]];
            let mut next = None;
            for child in children {
                match triangle_index(map, child, opts.edge_samples, tol, None) {
                    IndexOutcome::Index(0) | IndexOutcome::Unresolved => {}
                    IndexOutcome::Index(_) => {
                        next = Some(child);
                        break;
                    }
                    IndexOutcome::Degenerate(p, r) => {
                        let mut cert = found(p, r, iterations, "zero on a subdivision edge");
                        cert.mesh_index_sum = mesh_index_sum;
                        cert.depth = Some(depth + 1);
                        return cert;
                    }
                }
            }
            match next {
                Some(t) => tri = t,
                None => break,
            }
            depth += 1;
        }
    } else {
        let p = polish_zero(&field, &best.0, tol, POLISH_ITERS);
        iterations += p.iterations;
        if p.residual < best.1 {
            best = (to3(&p.point), p.residual);
        }
    }

    let (p, r) = best;
    ZeroCertificate {
        direction: Direction::Oriented(OrientedDirection::from_vector(&p).expect("unit point")),
        residual: r,
        iterations,
        method: ZeroMethod::IndexSubdivisionS2,
        status: if r <= tol { ZeroStatus::Found } else { ZeroStatus::Unresolved },
        mesh_index_sum,
        depth: Some(depth),
        note: if start.is_none() { Some("no triangle with nonzero index".into()) } else { None },
    }
}

/// Sum of tangent-field indices over the triangles of an icosphere mesh.
/// `None` when a zero lies on the mesh or a triangle is unresolved.
pub fn mesh_index_sum<M: DirectionMap + ?Sized>(map: &M, depth: u32, tol: f64) -> Option<i64> {
    let mesh = Icosphere::new(depth);
    let mut sum = 0;
    for f in 0..mesh.faces.len() {
        match triangle_index(map, mesh.triangle(f), EDGE_SAMPLES, tol, None) {
            IndexOutcome::Index(i) => sum += i,
            _ => return None,
        }
    }
    Some(sum)
}

/// Multi-start local minimization of `‖P_{x^⊥} σ(x)‖` for `n ≥ 4`. A
/// `None` result means nothing was found, not that no zero exists.
pub fn find_zero_highdim(
    spec: &ConfigSpec,
    tol: f64,
    restarts: usize,
    seed: u64,
) -> Result<Option<ZeroCertificate>> {
    check_tol(tol)?;
    spec.check()?;
    if spec.dim < 4 {
        return Err(KakeyaError::InvalidInput(format!(
            "heuristic search is for dimension ≥ 4, got {}",
            spec.dim
        )));
    }
    if spec.unoriented {
        require_unoriented(spec)?;
    }
    let cert = highdim_search(spec, tol, restarts, seed, Execution::default());
    Ok(cert.filter(|c| c.is_found()).map(|c| if spec.unoriented { unorient(c) } else { c }))
}

/// Best local minimum over `restarts` seeded starts; ties go to the
/// lowest restart index so the result is independent of scheduling.
pub fn highdim_search<M: DirectionMap + ?Sized>(
    map: &M,
    tol: f64,
    restarts: usize,
    seed: u64,
    exec: Execution,
) -> Option<ZeroCertificate> {
    let n = map.dim();
    let field = |y: &[f64], out: &mut [f64]| {
        map.eval_into(y, out);
        let c = dot(out, y);
        for (o, x) in out.iter_mut().zip(y) {
            *o -= c * x;
        }
    };
    let runs = par::map_indices(exec, restarts.max(1), |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let start = random_unit(&mut rng, n);
        polish_zero(&field, &start, tol, 100)
    });
    let total: usize = runs.iter().map(|p| p.iterations).sum();
    let best = runs.into_iter().reduce(|a, b| if b.residual < a.residual { b } else { a })?;
    Some(ZeroCertificate {
        direction: Direction::Oriented(OrientedDirection::from_vector(&best.point).ok()?),
        residual: best.residual,
        iterations: total,
        method: ZeroMethod::HeuristicHighdim,
        status: if best.residual <= tol { ZeroStatus::Found } else { ZeroStatus::Unresolved },
        mesh_index_sum: None,
        depth: None,
        note: Some(format!("{} restarts, seed {seed}", restarts.max(1))),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegreeStatus {
    Certified,
    LowConfidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub degree: i64,
    pub depth: u32,
    /// Smallest norm of the map before normalization.
    pub min_magnitude: f64,
    /// Total signed image area over 4π before rounding.
    pub raw_value: f64,
    /// Longest image-triangle edge (radians); large values mean the mesh
    /// under-resolves the map.
    pub max_image_edge: f64,
    pub status: DegreeStatus,
}

/// Degree of `x ↦ σ(x)/‖σ(x)‖` on `S^2` from signed image areas.
pub fn map_degree_s2(map: &ConfigSpec, depth: u32) -> Result<DegreeReport> {
    map.check()?;
    require_dim(map, 3)?;
    map_degree(map, depth, Execution::default())
}

pub fn map_degree<M: DirectionMap + ?Sized>(map: &M, depth: u32, exec: Execution) -> Result<DegreeReport> {
    if map.dim() != 3 {
        return Err(KakeyaError::DimensionMismatch { expected: 3, found: map.dim() });
    }
    let mesh = Icosphere::new(depth);
    let images = par::map_slice(exec, &mesh.vertices, |&p| {
        let mut v = [0.0; 3];
        map.eval_into(&p, &mut v);
        let n = dot3(v, v).sqrt();
        (v, n)
    });
    let min_magnitude = images.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    if !(min_magnitude > 0.0) || !min_magnitude.is_finite() {
        return Err(KakeyaError::InvalidInput("map vanishes on the mesh; cannot normalize".into()));
    }
    let unit: Vec<Vec3> = images.iter().map(|(v, _)| normalize3(*v)).collect();
    let mut total = 0.0;
    let mut max_edge: f64 = 0.0;
    for f in &mesh.faces {
        let [a, b, c] = f.map(|i| unit[i]);
        total += solid_angle(a, b, c);
        max_edge = max_edge.max(arc(a, b)).max(arc(b, c)).max(arc(c, a));
    }
    let raw_value = total / (4.0 * PI);
    let degree = raw_value.round();
    let certified = (raw_value - degree).abs() <= DEGREE_MARGIN && max_edge < MAX_IMAGE_EDGE;
    Ok(DegreeReport {
        degree: degree as i64,
        depth,
        min_magnitude,
        raw_value,
        max_image_edge: max_edge,
        status: if certified { DegreeStatus::Certified } else { DegreeStatus::LowConfidence },
    })
}

/// Winding number about the origin of a closed sampled loop (the last
/// sample connects back to the first).
pub fn winding_number(samples: &[[f64; 2]]) -> Result<i64> {
    if samples.len() < 3 {
        return Err(KakeyaError::InvalidInput("a loop needs at least three samples".into()));
    }
    if let Some(index) = samples.iter().position(|p| p[0] == 0.0 && p[1] == 0.0) {
        return Err(KakeyaError::ThroughOrigin { index });
    }
    let n = samples.len();
    let mut total = 0.0;
    for i in 0..n {
        let (p, q) = (samples[i], samples[(i + 1) % n]);
        let cross = p[0] * q[1] - p[1] * q[0];
        let dotp = p[0] * q[0] + p[1] * q[1];
        let turn = cross.atan2(dotp);
        if turn.abs() >= PI * (1.0 - 1e-12) || (cross == 0.0 && dotp < 0.0) {
            return Err(KakeyaError::CoarseSampling { index: i, next: (i + 1) % n, angle: turn.abs() });
        }
        total += turn;
    }
    Ok((total / TAU).round() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configs::{random, Harmonics, Monomial};

    fn double_angle() -> ConfigSpec {
        ConfigSpec::trig(
            vec![
                Harmonics { a: vec![0.0, 0.0, 1.0], b: vec![] },
                Harmonics { a: vec![], b: vec![0.0, 0.0, 1.0] },
            ],
            true,
        )
    }

    #[test]
    fn perp_section_examples() {
        let c = ConfigSpec::constant(vec![1.0, 0.0], true);
        let on = perp_section(&c, &UnorientedDirection::from_angle(0.0)).unwrap();
        assert_eq!(on, vec![0.0, 0.0]);
        let off = perp_section(&c, &UnorientedDirection::from_angle(PI / 2.0)).unwrap();
        assert!((off[0] - 1.0).abs() < 1e-15 && off[1].abs() < 1e-15);
    }

    #[test]
    fn perp_section_matches_sine_oracle() {
        // dense-grid oracle: sin 2θ cos θ − cos 2θ sin θ = sin θ
        let spec = double_angle();
        for i in 0..2000 {
            let th = PI * i as f64 / 2000.0;
            let line = UnorientedDirection::from_angle(th);
            let p = perp_section(&spec, &line).unwrap();
            let n = [-th.sin(), th.cos()];
            let signed = p[0] * n[0] + p[1] * n[1];
            let oracle = (2.0 * th).sin() * th.cos() - (2.0 * th).cos() * th.sin();
            assert!((signed - oracle).abs() < 1e-14);
            assert!((signed - th.sin()).abs() < 1e-14);
            let e = line.unit_vector();
            assert!(dot(&p, &e).abs() < 1e-12);
        }
    }

    #[test]
    fn planar_examples() {
        let c = find_zero_unoriented_2d(&ConfigSpec::constant(vec![1.0, 0.0], true), 1e-9).unwrap();
        assert_eq!(c.direction, Direction::Unoriented(UnorientedDirection::Angle(0.0)));
        assert_eq!(c.residual, 0.0);

        let d = find_zero_unoriented_2d(&double_angle(), 1e-9).unwrap();
        assert_eq!(d.direction, Direction::Unoriented(UnorientedDirection::Angle(0.0)));
        assert!(d.residual <= 1e-15);

        let z = find_zero_unoriented_2d(&ConfigSpec::constant(vec![0.0, 0.0], true), 1e-9).unwrap();
        assert_eq!(z.residual, 0.0);
        assert!(z.is_found());
    }

    #[test]
    fn planar_rejects_odd_specs() {
        let t = ConfigSpec::trig(vec![Harmonics { a: vec![0.0, 1.0], b: vec![] }, Harmonics::default()], true);
        assert!(matches!(find_zero_unoriented_2d(&t, 1e-9), Err(KakeyaError::NotEven { .. })));
        assert!(find_zero_unoriented_2d(&double_angle(), 0.0).is_err());
    }

    #[test]
    fn planar_zero_is_the_smallest_sign_change() {
        // oracle: scan g on a fine grid and locate the first sign change
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let spec = random::trig(&mut rng, 6, 2.0, true);
            let cert = find_zero_unoriented_2d(&spec, 1e-9).unwrap();
            assert!(cert.residual <= 1e-9);
            let theta = match &cert.direction {
                Direction::Unoriented(UnorientedDirection::Angle(t)) => *t,
                _ => unreachable!(),
            };
            let g = |t: f64| signed_section(&spec, t);
            let n = 256;
            let oracle = (1..=n)
                .find(|&i| {
                    let (a, b) = (PI * (i - 1) as f64 / n as f64, PI * i as f64 / n as f64);
                    g(a) * g(b) < 0.0
                })
                .map(|i| PI * i as f64 / n as f64)
                .unwrap();
            assert!(theta <= oracle + 1e-12 && theta >= oracle - PI / n as f64 - 1e-12);
        }
    }

    #[test]
    fn frame_flip_identity() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let spec = random::trig(&mut rng, 16, 2.0, true);
            assert!((signed_section(&spec, 0.0) + signed_section(&spec, PI)).abs() <= 1e-9);
        }
    }

    fn north_plus_swirl() -> ConfigSpec {
        // σ(x) = (0.2, 0.1, 1) + 0.3 (−x₂, x₁, 0)
        ConfigSpec::polynomial(
            3,
            vec![
                Monomial { powers: vec![0, 0, 0], coeff: vec![0.2, 0.1, 1.0] },
                Monomial { powers: vec![0, 1, 0], coeff: vec![-0.3, 0.0, 0.0] },
                Monomial { powers: vec![1, 0, 0], coeff: vec![0.0, 0.3, 0.0] },
            ],
            false,
        )
    }

    #[test]
    fn s2_identity_is_degenerate_everywhere() {
        let c = find_zero_oriented_s2(&ConfigSpec::identity(3), 1e-6, 12).unwrap();
        assert!(c.is_found());
        assert!(c.residual <= 1e-15);
    }

    #[test]
    fn s2_constant_finds_a_pole() {
        let spec = ConfigSpec::constant(vec![0.0, 0.0, 1.0], false);
        let c = find_zero_oriented_s2(&spec, 1e-6, 12).unwrap();
        assert!(c.is_found() && c.residual <= 1e-6);
        let p = c.direction.unit_vector();
        assert!((p[2].abs() - 1.0).abs() < 1e-6, "{p:?}");

        // off the mesh vertices the starting mesh is fully indexed
        let k = [1.0, 2.0, 3.0f64];
        let kn = norm(&k);
        let generic = ConfigSpec::constant(k.iter().map(|x| x / kn).collect(), false);
        let g = find_zero_oriented_s2(&generic, 1e-6, 12).unwrap();
        assert_eq!(g.mesh_index_sum, Some(2));
        let q = g.direction.unit_vector();
        assert!((dot(&q, &generic.eval_vec(&q)).abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn s2_swirl_matches_brute_force_grid() {
        let spec = north_plus_swirl();
        let c = find_zero_oriented_s2(&spec, 1e-6, 12).unwrap();
        assert!(c.is_found());
        let x = to3(&c.direction.unit_vector());
        // brute-force oracle over 10^6 Fibonacci points
        let pts = crate::sphere::fibonacci_sphere(1_000_000);
        let mesh_width = (4.0 * PI / 1e6_f64).sqrt();
        let near: Vec<Vec3> = pts.into_iter().filter(|&p| norm(&tangent_at(&spec, p)) < 2.0 * mesh_width).collect();
        assert!(!near.is_empty());
        let closest = near.iter().map(|&p| arc(p, x)).fold(f64::INFINITY, f64::min);
        assert!(closest < 2.0 * mesh_width, "closest grid near-zero at {closest}");
    }

    #[test]
    fn poincare_hopf_sum_is_two() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let spec = random::polynomial(&mut rng, 3, 2, 1.0, false);
            if let Some(s) = mesh_index_sum(&spec, 3, 1e-9) {
                assert_eq!(s, 2);
            }
        }
        assert_eq!(mesh_index_sum(&north_plus_swirl(), 3, 1e-9), Some(2));
    }

    #[test]
    fn unoriented_3d_examples() {
        let z = find_zero_unoriented_3d(&ConfigSpec::constant(vec![0.0; 3], true), 1e-6, 12).unwrap();
        assert_eq!(z.residual, 0.0);
        let c = find_zero_unoriented_3d(&ConfigSpec::constant(vec![0.0, 0.0, 1.0], true), 1e-6, 12).unwrap();
        match &c.direction {
            Direction::Unoriented(UnorientedDirection::Axis(v)) => assert!((v[2].abs() - 1.0).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unoriented_3d_random_even_field_matches_grid() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let spec = random::polynomial(&mut rng, 3, 2, 1.0, true);
        let c = find_zero_unoriented_3d(&spec, 1e-6, 12).unwrap();
        assert!(c.is_found());
        let line = match &c.direction {
            Direction::Unoriented(l) => l.clone(),
            _ => unreachable!(),
        };
        let r = norm(&perp_section(&spec, &line).unwrap());
        assert!(r <= 1e-6);
        // oracle: some point of a 10^6 grid within mesh width of ±x has a
        // small field value
        let x = to3(&line.unit_vector());
        let pts = crate::sphere::fibonacci_sphere(1_000_000);
        let mesh_width = (4.0 * PI / 1e6_f64).sqrt();
        let ok = pts.iter().any(|&p| {
            (arc(p, x) < 1.5 * mesh_width || arc(p, [-x[0], -x[1], -x[2]]) < 1.5 * mesh_width)
                && norm(&tangent_at(&spec, p)) < 20.0 * mesh_width
        });
        assert!(ok);
    }

    #[test]
    fn highdim_examples() {
        let z = find_zero_highdim(&ConfigSpec::constant(vec![0.0; 4], true), 1e-9, 8, 1).unwrap().unwrap();
        assert_eq!(z.residual, 0.0);
        let e1 = find_zero_highdim(&ConfigSpec::constant(vec![1.0, 0.0, 0.0, 0.0], true), 1e-9, 8, 1)
            .unwrap()
            .unwrap();
        let v = e1.direction.unit_vector();
        assert!((v[0].abs() - 1.0).abs() < 1e-9, "{v:?}");
    }

    #[test]
    fn highdim_agrees_with_many_restart_oracle() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..3 {
            let spec = random::polynomial(&mut rng, 4, 2, 1.0, true);
            let fast = find_zero_highdim(&spec, 1e-8, 16, 3).unwrap();
            let oracle = highdim_search(&spec, 1e-8, 1600, 3, Execution::default()).unwrap();
            if let Some(f) = &fast {
                assert!(f.residual <= 1e-8);
                assert!(oracle.is_found());
            }
            if oracle.is_found() {
                assert!(fast.is_some(), "oracle found a zero the 16-start search missed");
            }
        }
    }

    #[test]
    fn highdim_is_schedule_independent() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let spec = random::polynomial(&mut rng, 5, 2, 1.0, true);
        let a = highdim_search(&spec, 1e-9, 12, 7, Execution::Sequential).unwrap();
        let b = highdim_search(&spec, 1e-9, 12, 7, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degree_examples() {
        let id = map_degree_s2(&ConfigSpec::identity(3), 4).unwrap();
        assert_eq!((id.degree, id.status), (1, DegreeStatus::Certified));
        let anti = map_degree_s2(&ConfigSpec::antipodal(3), 4).unwrap();
        assert_eq!((anti.degree, anti.status), (-1, DegreeStatus::Certified));
        let c = map_degree_s2(&ConfigSpec::constant(vec![0.0, 0.0, 1.0], false), 4).unwrap();
        assert_eq!((c.degree, c.status), (0, DegreeStatus::Certified));
    }

    #[test]
    fn degree_is_constant_along_rotation_homotopy() {
        // H_s = R_z(s) ∘ (x ↦ x + 0.3 e₃) never vanishes, so the degree stays 1
        for s in [0.0, 0.7, 1.9, 3.0] {
            let h = crate::configs::FnMap::new(3, move |u: &[f64], out: &mut [f64]| {
                let (sn, cs) = f64::sin_cos(s);
                let v = [u[0], u[1], u[2] + 0.3];
                out.copy_from_slice(&[cs * v[0] - sn * v[1], sn * v[0] + cs * v[1], v[2]]);
            });
            let r = map_degree(&h, 5, Execution::Sequential).unwrap();
            assert_eq!((r.degree, r.status), (1, DegreeStatus::Certified));
        }
    }

    #[test]
    fn degree_low_confidence_on_coarse_mesh() {
        // z ↦ z^3 on the Riemann sphere has degree 3; depth 0 cannot see it
        let cubic = crate::configs::FnMap::new(3, |u: &[f64], out: &mut [f64]| {
            let d = 1.0 - u[2];
            if d < 1e-15 {
                out.copy_from_slice(&[0.0, 0.0, 1.0]);
                return;
            }
            let (re, im) = (u[0] / d, u[1] / d);
            let (r2, i2) = (re * re - im * im, 2.0 * re * im);
            let (r3, i3) = (r2 * re - i2 * im, r2 * im + i2 * re);
            let m = r3 * r3 + i3 * i3;
            out.copy_from_slice(&[2.0 * r3 / (m + 1.0), 2.0 * i3 / (m + 1.0), (m - 1.0) / (m + 1.0)]);
        });
        let coarse = map_degree(&cubic, 0, Execution::Sequential).unwrap();
        assert_eq!(coarse.status, DegreeStatus::LowConfidence);
        let fine = map_degree(&cubic, 6, Execution::Sequential).unwrap();
        assert_eq!(fine.degree, 3);
    }

    #[test]
    fn winding_examples() {
        let circle = |n: usize, turns: f64, c: [f64; 2]| -> Vec<[f64; 2]> {
            (0..n)
                .map(|i| {
                    let t = turns * TAU * i as f64 / n as f64;
                    [c[0] + t.cos(), c[1] + t.sin()]
                })
                .collect()
        };
        assert_eq!(winding_number(&circle(64, 1.0, [0.0, 0.0])).unwrap(), 1);
        assert_eq!(winding_number(&circle(128, 2.0, [0.0, 0.0])).unwrap(), 2);
        assert_eq!(winding_number(&circle(64, 1.0, [3.0, 0.0])).unwrap(), 0);
        let mut cw = circle(64, 1.0, [0.0, 0.0]);
        cw.reverse();
        assert_eq!(winding_number(&cw).unwrap(), -1);
    }

    #[test]
    fn winding_errors() {
        let through = vec![[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]];
        assert!(matches!(winding_number(&through), Err(KakeyaError::ThroughOrigin { index: 1 })));
        let coarse = vec![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(winding_number(&coarse), Err(KakeyaError::CoarseSampling { .. })));
    }

    #[test]
    fn winding_is_refinement_invariant() {
        let loop_at = |n: usize| -> Vec<[f64; 2]> {
            (0..n)
                .map(|i| {
                    let t = TAU * i as f64 / n as f64;
                    let r = 1.0 + 0.5 * (3.0 * t).cos();
                    [r * (2.0 * t).cos(), r * (2.0 * t).sin()]
                })
                .collect()
        };
        let w = winding_number(&loop_at(64)).unwrap();
        assert_eq!(w, 2);
        for n in [128, 256, 1024] {
            assert_eq!(winding_number(&loop_at(n)).unwrap(), w);
        }
    }
}
