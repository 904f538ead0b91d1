//! Coverage certificates in `R^n`, the planar tangent-circle
//! counterexample, membership in `R`-elongations and needle-set area.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::configs::{
    dot, norm, spec_hash, translate_config, ConfigSpec, Direction, DirectionMap, Family, Orientation,
};
use crate::error::{KakeyaError, Result};
use crate::par::{self, Execution};
use crate::topo_zero::{
    self, bisect, check_tol, highdim_search, planar_zero, tangent_zero_s2, S2Options, ZeroCertificate,
    ZeroMethod,
};

pub const DEFAULT_MEMBERSHIP_CELLS: usize = 4096;
pub const MEMBERSHIP_REFINE: usize = 4;
pub const DEFAULT_NEEDLE_SAMPLES: usize = 100_000;
pub const MIN_NEEDLE_SAMPLES: usize = 100;
const HEURISTIC_RESTARTS: usize = 32;
const NEEDLE_BATCH: usize = 1024;
const BOX_INFLATION: f64 = 0.01;
/// Normal quantile for a two-sided 95% interval.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverStatus {
    Covered,
    /// Heuristic search came back empty. This is not a proof of
    /// non-coverage.
    NotFound,
}

/// Witness that `target = σ(L*) + t*·e(L*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCertificate {
    pub target: Vec<f64>,
    pub direction: Direction,
    pub t: f64,
    pub residual: f64,
    pub method: ZeroMethod,
    pub status: CoverStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_index_sum: Option<i64>,
}

impl CoverCertificate {
    pub fn is_covered(&self) -> bool {
        self.status == CoverStatus::Covered
    }
}

/// Recomputes `t*` and the residual from the original spec, independent of
/// whatever the zero finder reported.
pub fn reconstruct<M: DirectionMap + ?Sized>(map: &M, x: &[f64], e: &[f64]) -> (f64, f64) {
    let sigma = map.eval_vec(e);
    let d: Vec<f64> = x.iter().zip(&sigma).map(|(a, b)| a - b).collect();
    let t = dot(&d, e);
    let r: Vec<f64> = d.iter().zip(e).map(|(a, b)| a - t * b).collect();
    (t, norm(&r))
}

fn certificate<M: DirectionMap + ?Sized>(map: &M, x: &[f64], zero: ZeroCertificate, tol: f64) -> CoverCertificate {
    let e = zero.direction.unit_vector();
    let (t, residual) = reconstruct(map, x, &e);
    CoverCertificate {
        target: x.to_vec(),
        direction: zero.direction,
        t,
        residual,
        method: zero.method,
        status: if residual <= tol { CoverStatus::Covered } else { CoverStatus::NotFound },
        mesh_index_sum: zero.mesh_index_sum,
    }
}

fn check_target(spec: &ConfigSpec, x: &[f64]) -> Result<()> {
    if x.len() != spec.dim {
        return Err(KakeyaError::DimensionMismatch { expected: spec.dim, found: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(KakeyaError::InvalidInput("target must be finite".into()));
    }
    Ok(())
}

/// Certifies `x ∈ |σ|` for an unoriented configuration by finding a line
/// through the origin in the translated configuration `σ − x`.
///
/// Guaranteed for `n ∈ {2, 3}`; for `n ≥ 4` the search is a seeded
/// multi-start and `NotFound` carries no information.
pub fn certify_cover_unoriented(spec: &ConfigSpec, x: &[f64], tol: f64) -> Result<CoverCertificate> {
    check_tol(tol)?;
    check_target(spec, x)?;
    if !spec.unoriented || !spec.is_structurally_even() {
        spec.check()?;
        return Err(KakeyaError::NotEven { defect: spec.antipodal_defect() });
    }
    let shifted = translate_config(spec, x)?;
    let zero = match spec.dim {
        2 => planar_zero(&shifted, tol, topo_zero::DEFAULT_GRID_CELLS),
        3 => topo_zero::unorient(tangent_zero_s2(&shifted, &S2Options { tol: 0.1 * tol, ..S2Options::default() })),
        _ => topo_zero::unorient(
            highdim_search(&shifted, 0.1 * tol, HEURISTIC_RESTARTS, 0, Execution::default())
                .expect("at least one restart"),
        ),
    };
    Ok(certificate(spec, x, zero, tol))
}

/// Oriented version. Guaranteed for `n = 3`, heuristic for odd `n ≥ 5`.
/// Even dimensions are rejected: the tangent-circle configuration shows
/// coverage can fail there, so use [`membership_test_2d`] instead.
pub fn certify_cover_oriented(spec: &ConfigSpec, x: &[f64], tol: f64) -> Result<CoverCertificate> {
    check_tol(tol)?;
    spec.check()?;
    check_target(spec, x)?;
    if spec.dim.is_multiple_of(2) {
        return Err(KakeyaError::InvalidInput(format!(
            "oriented coverage is only guaranteed in odd dimension, got {}",
            spec.dim
        )));
    }
    let shifted = translate_config(spec, x)?;
    let zero = if spec.dim == 3 {
        tangent_zero_s2(&shifted, &S2Options { tol: 0.1 * tol, ..S2Options::default() })
    } else {
        highdim_search(&shifted, 0.1 * tol, HEURISTIC_RESTARTS, 0, Execution::default()).expect("at least one restart")
    };
    Ok(certificate(spec, x, zero, tol))
}

/// Oriented lines tangent to the circle of radius `c`, counter-clockwise:
/// the line at angle θ passes through `c·(−sin θ, cos θ)` with direction
/// `(cos θ, sin θ)`.
pub fn tangent_circle_config(c: f64) -> Result<ConfigSpec> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(KakeyaError::InvalidInput(format!("radius must be positive, got {c}")));
    }
    Ok(ConfigSpec {
        dim: 2,
        unoriented: false,
        target: Default::default(),
        family: Family::TangentCircle { radius: c, orientation: Orientation::Ccw },
    })
}

/// One zero `θ*` of `s(θ) = (x − σ(θ))·n(θ)`, with its line parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub theta: f64,
    pub t: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub target: Vec<f64>,
    /// Segment length; `None` for full lines.
    pub length: Option<f64>,
    pub covered: bool,
    pub witnesses: Vec<Witness>,
    pub grid_cells: usize,
    pub refine: usize,
}

/// Precomputed `σ`, `e` and `n` on a uniform grid of the planar direction
/// space, so that scanning many targets costs two multiply-adds per cell.
pub struct PlanarScanner<'a> {
    spec: &'a ConfigSpec,
    period: f64,
    cells: usize,
    sigma: Vec<[f64; 2]>,
    normal: Vec<[f64; 2]>,
}

impl<'a> PlanarScanner<'a> {
    pub fn new(spec: &'a ConfigSpec, cells: usize) -> Result<Self> {
        spec.check()?;
        if spec.dim != 2 {
            return Err(KakeyaError::DimensionMismatch { expected: 2, found: spec.dim });
        }
        if cells < 8 {
            return Err(KakeyaError::InvalidInput("membership grid needs at least 8 cells".into()));
        }
        let period = spec.angle_period();
        let mut sigma = Vec::with_capacity(cells + 1);
        let mut normal = Vec::with_capacity(cells + 1);
        for i in 0..=cells {
            let th = period * i as f64 / cells as f64;
            let (s, c) = th.sin_cos();
            let mut v = [0.0; 2];
            spec.eval_into(&[c, s], &mut v);
            sigma.push(v);
            normal.push([-s, c]);
        }
        Ok(PlanarScanner { spec, period, cells, sigma, normal })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    fn theta(&self, i: usize) -> f64 {
        self.period * i as f64 / self.cells as f64
    }

    fn grid_s(&self, x: [f64; 2], i: usize) -> f64 {
        let (p, n) = (self.sigma[i], self.normal[i]);
        (x[0] - p[0]) * n[0] + (x[1] - p[1]) * n[1]
    }

    /// `(s(θ), t(θ))` evaluated directly.
    pub fn eval(&self, x: [f64; 2], theta: f64) -> (f64, f64) {
        let (s, c) = theta.sin_cos();
        let mut v = [0.0; 2];
        self.spec.eval_into(&[c, s], &mut v);
        let d = [x[0] - v[0], x[1] - v[1]];
        (-d[0] * s + d[1] * c, d[0] * c + d[1] * s)
    }

    fn witness(&self, x: [f64; 2], theta: f64) -> Witness {
        let theta = theta.rem_euclid(self.period);
        let (s, t) = self.eval(x, theta);
        Witness { theta, t, residual: s.abs() }
    }

    /// All zeros of `s` on the direction space at grid resolution. With
    /// `accept` set, returns as soon as one accepted witness appears.
    pub fn zeros(&self, x: [f64; 2], tol: f64, accept: Option<&dyn Fn(&Witness) -> bool>) -> Vec<Witness> {
        let mut out: Vec<Witness> = Vec::new();
        let f = |th: f64| self.eval(x, th).0;
        let push = |w: Witness, out: &mut Vec<Witness>| -> bool {
            if w.residual > tol {
                return false;
            }
            if out.iter().any(|o| circle_gap(o.theta, w.theta, self.period) < 1e-12) {
                return false;
            }
            out.push(w);
            accept.is_some_and(|a| a(&w))
        };
        let n = self.cells;
        let vals: Vec<f64> = (0..n).map(|i| self.grid_s(x, i)).collect();
        // unoriented: s(θ + π) = −s(θ)
        let flip = if self.spec.unoriented { -1.0 } else { 1.0 };
        let at = |i: usize| if i < n { vals[i] } else { flip * vals[i - n] };
        for i in 0..n {
            let (a, b) = (at(i), at(i + 1));
            if a.abs() <= tol {
                if push(self.witness(x, self.theta(i)), &mut out) {
                    return out;
                }
                continue;
            }
            if b.abs() <= tol {
                continue;
            }
            let (lo, hi) = (self.theta(i), self.theta(i + 1));
            if (a < 0.0) != (b < 0.0) {
                // split into sub-cells to separate clustered zeros
                let k = MEMBERSHIP_REFINE;
                let sub: Vec<(f64, f64)> = (0..=k)
                    .map(|j| {
                        let th = lo + (hi - lo) * j as f64 / k as f64;
                        (th, if j == 0 { a } else if j == k { b } else { f(th) })
                    })
                    .collect();
                for w in sub.windows(2) {
                    let ((t0, v0), (t1, v1)) = (w[0], w[1]);
                    if (v0 < 0.0) != (v1 < 0.0) && v0 != 0.0 && v1 != 0.0 {
                        let (th, _, _) = bisect(f, t0, t1);
                        if push(self.witness(x, th), &mut out) {
                            return out;
                        }
                    } else if v1 == 0.0 && t1 < hi && push(self.witness(x, t1), &mut out) {
                        return out;
                    }
                }
                continue;
            }
            // touching zero: |s| dips to a local minimum without changing sign
            let next = at(i + 2);
            let same = (a < 0.0) == (b < 0.0) && (b < 0.0) == (next < 0.0);
            if same && b.abs() <= a.abs() && b.abs() <= next.abs() && b.abs() <= (a - b).abs() + (next - b).abs() {
                let th = golden_min(|t| f(t).abs(), lo, self.theta(i + 2));
                if push(self.witness(x, th), &mut out) {
                    return out;
                }
            }
        }
        out.sort_by(|p, q| p.theta.total_cmp(&q.theta));
        out
    }
}

fn circle_gap(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}

fn within(length: f64, t: f64) -> bool {
    length.is_infinite() || t.abs() <= 0.5 * length
}

/// Is `x` on some segment `σ(θ) + [−R/2, R/2]·e(θ)` (full lines when
/// `r` is infinite)? Every zero of `s` within the length bound is returned.
pub fn membership_test_2d(spec: &ConfigSpec, x: &[f64], r: f64, tol: f64) -> Result<MembershipReport> {
    check_tol(tol)?;
    check_target(spec, x)?;
    check_length(r)?;
    let scanner = PlanarScanner::new(spec, DEFAULT_MEMBERSHIP_CELLS)?;
    Ok(scan_membership(&scanner, [x[0], x[1]], r, tol))
}

fn check_length(r: f64) -> Result<()> {
    if !(r >= 0.0) || r.is_nan() {
        return Err(KakeyaError::InvalidInput(format!("segment length must be non-negative, got {r}")));
    }
    Ok(())
}

pub fn scan_membership(scanner: &PlanarScanner<'_>, x: [f64; 2], r: f64, tol: f64) -> MembershipReport {
    let witnesses: Vec<Witness> = scanner.zeros(x, tol, None).into_iter().filter(|w| within(r, w.t)).collect();
    MembershipReport {
        target: x.to_vec(),
        length: r.is_finite().then_some(r),
        covered: !witnesses.is_empty(),
        witnesses,
        grid_cells: scanner.cells(),
        refine: MEMBERSHIP_REFINE,
    }
}

/// Shortest elongation that reaches a target point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequiredLength {
    pub target: Vec<f64>,
    pub r_min: f64,
    pub witness: Witness,
    pub zeros: usize,
    pub grid_cells: usize,
}

/// Monte Carlo area of a needle set with a 95% normal-approximation
/// half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaEstimate {
    pub spec_hash: String,
    /// Segment length; `None` for full lines.
    pub length: Option<f64>,
    pub estimate: f64,
    pub ci_half_width: f64,
    pub samples: usize,
    pub hits: u64,
    pub seed: u64,
    /// `[xmin, xmax, ymin, ymax]`.
    pub bbox: [f64; 4],
}

/// Either flavour of elongation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report", rename_all = "kebab-case")]
pub enum ElongationReport {
    RequiredLength(RequiredLength),
    Area(AreaEstimate),
}

/// CSV row layout for area reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaRow {
    pub spec_hash: String,
    #[serde(rename = "R")]
    pub r: String,
    pub estimate: f64,
    pub ci: f64,
    pub samples: usize,
    pub seed: u64,
}

impl From<&AreaEstimate> for AreaRow {
    fn from(a: &AreaEstimate) -> Self {
        AreaRow {
            spec_hash: a.spec_hash.clone(),
            r: a.length.map_or_else(|| "inf".to_string(), |r| r.to_string()),
            estimate: a.estimate,
            ci: a.ci_half_width,
            samples: a.samples,
            seed: a.seed,
        }
    }
}

impl AreaEstimate {
    pub fn contains(&self, value: f64) -> bool {
        (self.estimate - value).abs() <= self.ci_half_width
    }
}

/// `R_min = 2·min |t(θ*)|` over the zeros of `s`. An unoriented planar
/// configuration always covers the plane, so a zero exists.
pub fn elongation_required(spec: &ConfigSpec, x: &[f64], tol: f64) -> Result<RequiredLength> {
    check_tol(tol)?;
    check_target(spec, x)?;
    if spec.dim != 2 {
        return Err(KakeyaError::DimensionMismatch { expected: 2, found: spec.dim });
    }
    if !spec.unoriented || !spec.is_structurally_even() {
        spec.check()?;
        return Err(KakeyaError::NotEven { defect: spec.antipodal_defect() });
    }
    let scanner = PlanarScanner::new(spec, DEFAULT_MEMBERSHIP_CELLS)?;
    let xy = [x[0], x[1]];
    let mut zeros = scanner.zeros(xy, tol, None);
    if zeros.is_empty() {
        // the grid can miss a zero the bisection finder still sees
        let shifted = translate_config(spec, x)?;
        let z = planar_zero(&shifted, tol, topo_zero::DEFAULT_GRID_CELLS);
        if z.is_found() {
            zeros.push(scanner.witness(xy, direction_angle(&z.direction)));
        }
    }
    let best = zeros
        .iter()
        .copied()
        .reduce(|a, b| if b.t.abs() < a.t.abs() { b } else { a })
        .ok_or_else(|| KakeyaError::InvalidInput("no zero found".into()))?;
    Ok(RequiredLength {
        target: x.to_vec(),
        r_min: 2.0 * best.t.abs(),
        witness: best,
        zeros: zeros.len(),
        grid_cells: scanner.cells(),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct NeedleOptions {
    /// Segment length; infinite means full lines and requires `clip`.
    pub length: f64,
    pub samples: usize,
    pub seed: u64,
    /// `[xmin, xmax, ymin, ymax]` intersected with the endpoint box.
    pub clip: Option<[f64; 4]>,
    pub tol: f64,
    pub cells: usize,
    pub exec: Execution,
}

impl Default for NeedleOptions {
    fn default() -> Self {
        NeedleOptions {
            length: 1.0,
            samples: DEFAULT_NEEDLE_SAMPLES,
            seed: 0,
            clip: None,
            tol: 1e-9,
            cells: DEFAULT_MEMBERSHIP_CELLS,
            exec: Execution::default(),
        }
    }
}

pub fn needle_area_2d(spec: &ConfigSpec, r: f64, samples: usize, seed: u64) -> Result<AreaEstimate> {
    needle_area_with(spec, &NeedleOptions { length: r, samples, seed, ..NeedleOptions::default() })
}

/// Box containing every segment endpoint, inflated by 1% of its extent.
pub fn endpoint_box(spec: &ConfigSpec, length: f64) -> Result<[f64; 4]> {
    if length.is_infinite() {
        return Err(KakeyaError::InvalidInput("full lines need a clip box".into()));
    }
    let period = spec.angle_period();
    let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    let n = DEFAULT_MEMBERSHIP_CELLS;
    for i in 0..n {
        let th = period * i as f64 / n as f64;
        let (s, c) = th.sin_cos();
        let p = spec.eval_vec(&[c, s]);
        for sign in [-0.5, 0.5] {
            let q = [p[0] + sign * length * c, p[1] + sign * length * s];
            b = [b[0].min(q[0]), b[1].max(q[0]), b[2].min(q[1]), b[3].max(q[1])];
        }
    }
    let (wx, wy) = ((b[1] - b[0]).max(1e-9), (b[3] - b[2]).max(1e-9));
    Ok([b[0] - BOX_INFLATION * wx, b[1] + BOX_INFLATION * wx, b[2] - BOX_INFLATION * wy, b[3] + BOX_INFLATION * wy])
}

/// Monte Carlo area of the union of segments. Batch `b` draws from the
/// ChaCha stream `b` of `seed`, so the estimate is identical under
/// sequential and parallel execution.
pub fn needle_area_with(spec: &ConfigSpec, opts: &NeedleOptions) -> Result<AreaEstimate> {
    if opts.samples < MIN_NEEDLE_SAMPLES {
        return Err(KakeyaError::InvalidInput(format!(
            "need at least {MIN_NEEDLE_SAMPLES} samples, got {}",
            opts.samples
        )));
    }
    check_tol(opts.tol)?;
    check_length(opts.length)?;
    let scanner = PlanarScanner::new(spec, opts.cells)?;
    let bbox = match (opts.clip, opts.length.is_finite()) {
        (Some(c), true) => {
            let e = endpoint_box(spec, opts.length)?;
            [c[0].max(e[0]), c[1].min(e[1]), c[2].max(e[2]), c[3].min(e[3])]
        }
        (Some(c), false) => c,
        (None, true) => endpoint_box(spec, opts.length)?,
        (None, false) => return Err(KakeyaError::InvalidInput("full lines need a clip box".into())),
    };
    let (wx, wy) = (bbox[1] - bbox[0], bbox[3] - bbox[2]);
    if !(wx > 0.0 && wy > 0.0) {
        return Err(KakeyaError::InvalidInput(format!("empty sampling box {bbox:?}")));
    }
    let length = opts.length;
    let accept = move |w: &Witness| within(length, w.t);
    let batches = opts.samples.div_ceil(NEEDLE_BATCH);
    let hits = par::sum_indices(opts.exec, batches, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(b as u64);
        let count = NEEDLE_BATCH.min(opts.samples - b * NEEDLE_BATCH);
        let mut hits = 0;
        for _ in 0..count {
            let x = [bbox[0] + wx * rng.random::<f64>(), bbox[2] + wy * rng.random::<f64>()];
            if scanner.zeros(x, opts.tol, Some(&accept)).iter().any(accept) {
                hits += 1;
            }
        }
        hits
    });
    let area = wx * wy;
    let p = hits as f64 / opts.samples as f64;
    Ok(AreaEstimate {
        spec_hash: spec_hash(spec),
        length: length.is_finite().then_some(length),
        estimate: area * p,
        ci_half_width: Z95 * area * (p * (1.0 - p) / opts.samples as f64).sqrt(),
        samples: opts.samples,
        hits,
        seed: opts.seed,
        bbox,
    })
}

/// Infimum over directions of the distance from `p` to the line at θ.
pub fn min_line_distance(spec: &ConfigSpec, p: &[f64]) -> Result<f64> {
    check_target(spec, p)?;
    let scanner = PlanarScanner::new(spec, DEFAULT_MEMBERSHIP_CELLS)?;
    let x = [p[0], p[1]];
    let n = scanner.cells();
    let i = (0..n)
        .map(|i| (i, scanner.grid_s(x, i).abs()))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
        .0;
    let step = scanner.period / n as f64;
    let th = golden_min(|t| scanner.eval(x, t).0.abs(), scanner.theta(i) - step, scanner.theta(i) + step);
    Ok(scanner.eval(x, th).0.abs().min(scanner.grid_s(x, i).abs()))
}

/// Angle of the unit vector in `[0, π)` or `[0, 2π)`.
pub fn direction_angle(d: &Direction) -> f64 {
    let v = d.unit_vector();
    let a = v[1].atan2(v[0]);
    match d {
        Direction::Unoriented(_) => a.rem_euclid(PI),
        Direction::Oriented(_) => a.rem_euclid(TAU),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configs::{random, Harmonics, UnorientedDirection};
    use proptest::prelude::*;
    use rand::Rng;

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
    fn cover_unoriented_examples() {
        let zero = ConfigSpec::constant(vec![0.0, 0.0], true);
        let c = certify_cover_unoriented(&zero, &[0.0, 0.0], 1e-9).unwrap();
        assert!(c.is_covered());
        assert_eq!(c.residual, 0.0);

        let d = certify_cover_unoriented(&double_angle(), &[0.0, 0.0], 1e-9).unwrap();
        assert_eq!(d.direction, Direction::Unoriented(UnorientedDirection::Angle(0.0)));
        // x = σ(0) + t·e(0) = (1,0) + t(1,0) gives t = −1; the magnitude is 1
        assert!((d.t + 1.0).abs() < 1e-12);

        let f = certify_cover_unoriented(&zero, &[5.0, 7.0], 1e-9).unwrap();
        assert!((f.t - 74f64.sqrt()).abs() < 1e-9);
        let e = f.direction.unit_vector();
        assert!((e[0] * 7.0 - e[1] * 5.0).abs() < 1e-9);
    }

    #[test]
    fn cover_oriented_examples() {
        let zero = ConfigSpec::constant(vec![0.0; 3], false);
        assert!(certify_cover_oriented(&zero, &[1.0, 1.0, 1.0], 1e-6).unwrap().is_covered());
        let pole = ConfigSpec::constant(vec![0.0, 0.0, 1.0], false);
        let c = certify_cover_oriented(&pole, &[0.0, 0.0, 5.0], 1e-6).unwrap();
        assert!(c.is_covered());
        assert!((c.t.abs() - 4.0).abs() < 1e-6);
        let e = c.direction.unit_vector();
        assert!((e[2].abs() - 1.0).abs() < 1e-6);
        assert!(certify_cover_oriented(&tangent_circle_config(1.0).unwrap(), &[0.0, 0.0], 1e-6).is_err());
    }

    #[test]
    fn oriented_random_field_matches_brute_force() {
        use crate::sphere::{fibonacci_sphere, to3};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = random::polynomial(&mut rng, 3, 2, 1.0, false);
        let x = [0.7, -1.2, 0.4];
        let c = certify_cover_oriented(&spec, &x, 1e-6).unwrap();
        assert!(c.is_covered());
        // brute-force oracle: a 10^6 grid point near the certificate has a
        // near-zero perpendicular residual
        let e = to3(&c.direction.unit_vector());
        let width = (4.0 * PI / 1e6_f64).sqrt();
        let best = fibonacci_sphere(1_000_000)
            .into_iter()
            .filter(|p| crate::sphere::arc(*p, e) < 2.0 * width)
            .map(|p| reconstruct(&spec, &x, &p).1)
            .fold(f64::INFINITY, f64::min);
        assert!(best < 50.0 * width, "{best}");
    }

    #[test]
    fn tangent_circle_examples() {
        assert!(tangent_circle_config(0.0).is_err());
        let c1 = tangent_circle_config(1.0).unwrap();
        assert_eq!(c1.eval_angle(0.0), vec![-0.0, 1.0]);
        assert!(!membership_test_2d(&c1, &[0.0, 0.0], f64::INFINITY, 1e-9).unwrap().covered);
        let on = membership_test_2d(&c1, &[1.0, 0.0], f64::INFINITY, 1e-9).unwrap();
        assert!(on.covered && on.witnesses.iter().all(|w| w.residual <= 1e-9));
        assert!(!membership_test_2d(&c1, &[0.0, 0.5], f64::INFINITY, 1e-9).unwrap().covered);
        let c2 = tangent_circle_config(2.0).unwrap();
        assert!((min_line_distance(&c2, &[0.0, 0.0]).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn membership_examples() {
        let zero = ConfigSpec::constant(vec![0.0, 0.0], true);
        assert!(membership_test_2d(&zero, &[0.4, 0.0], 1.0, 1e-9).unwrap().covered);
        let out = membership_test_2d(&zero, &[0.6, 0.0], 1.0, 1e-9).unwrap();
        assert!(!out.covered);
        assert_eq!(out.grid_cells, DEFAULT_MEMBERSHIP_CELLS);
    }

    #[test]
    fn membership_zeros_match_dense_oracle() {
        // oracle: count sign changes of s on a grid 16× finer
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let spec = random::trig(&mut rng, 8, 1.0, false);
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let scanner = PlanarScanner::new(&spec, DEFAULT_MEMBERSHIP_CELLS).unwrap();
            let found = scanner.zeros(x, 1e-9, None);
            let n = 16 * DEFAULT_MEMBERSHIP_CELLS;
            let vals: Vec<f64> = (0..n).map(|i| scanner.eval(x, TAU * i as f64 / n as f64).0).collect();
            let changes = (0..n).filter(|&i| (vals[i] < 0.0) != (vals[(i + 1) % n] < 0.0)).count();
            assert_eq!(found.len(), changes);
            for w in &found {
                assert!(w.residual <= 1e-9);
            }
        }
    }

    #[test]
    fn elongation_examples() {
        let zero = ConfigSpec::constant(vec![0.0, 0.0], true);
        assert!((elongation_required(&zero, &[0.6, 0.0], 1e-9).unwrap().r_min - 1.2).abs() < 1e-9);
        assert!(elongation_required(&zero, &[0.0, 0.0], 1e-9).unwrap().r_min < 1e-9);
        let d = elongation_required(&double_angle(), &[0.0, 0.0], 1e-9).unwrap();
        assert!((d.r_min - 2.0).abs() < 1e-9);
        // dense enumeration oracle: every zero of s(θ) = −sin θ on [0, π)
        // is θ = 0 with |t| = 1
        assert_eq!(d.zeros, 1);
    }

    #[test]
    fn needle_area_examples() {
        let zero = ConfigSpec::constant(vec![0.0, 0.0], true);
        let two = needle_area_2d(&zero, 2.0, 20_000, 1).unwrap();
        assert!(two.contains(PI) || (two.estimate - PI).abs() < 2.0 * two.ci_half_width);
        let one = needle_area_2d(&zero, 1.0, 20_000, 1).unwrap();
        assert!((one.estimate - PI / 4.0).abs() < 2.0 * one.ci_half_width);
        let tc = tangent_circle_config(1.0).unwrap();
        let clipped = needle_area_with(
            &tc,
            &NeedleOptions {
                length: f64::INFINITY,
                samples: 20_000,
                seed: 4,
                clip: Some([-2.0, 2.0, -2.0, 2.0]),
                ..NeedleOptions::default()
            },
        )
        .unwrap();
        assert!((clipped.estimate - (16.0 - PI)).abs() < 2.0 * clipped.ci_half_width);
        assert!(needle_area_2d(&zero, 1.0, 99, 1).is_err());
    }

    #[test]
    fn needle_area_is_schedule_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = random::trig(&mut rng, 4, 0.5, true);
        let base = NeedleOptions { samples: 5000, seed: 9, ..NeedleOptions::default() };
        let a = needle_area_with(&spec, &NeedleOptions { exec: Execution::Sequential, ..base }).unwrap();
        let b = needle_area_with(&spec, &NeedleOptions { exec: Execution::Parallel, ..base }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tangent_circle_exclusion_sample() {
        let tc = tangent_circle_config(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = rng.random_range(0.0..TAU);
            let inner = rng.random_range(0.0..0.99);
            let outer = rng.random_range(1.01..5.0);
            let p = [inner * a.cos(), inner * a.sin()];
            assert!(!membership_test_2d(&tc, &p, f64::INFINITY, 1e-9).unwrap().covered);
            let q = [outer * a.cos(), outer * a.sin()];
            let r = membership_test_2d(&tc, &q, f64::INFINITY, 1e-9).unwrap();
            assert!(r.covered && r.witnesses.iter().all(|w| w.residual <= 1e-9));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn certificates_recheck(seed in 0u64..10_000, x in -10.0f64..10.0, y in -10.0f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = random::trig(&mut rng, 6, 2.0, true);
            let c = certify_cover_unoriented(&spec, &[x, y], 1e-9).unwrap();
            prop_assert!(c.is_covered());
            let e = c.direction.unit_vector();
            let s = spec.eval_vec(&e);
            let back = [s[0] + c.t * e[0] - x, s[1] + c.t * e[1] - y];
            prop_assert!(norm(&back) <= 1e-9);
        }

        #[test]
        fn translation_identity(seed in 0u64..10_000, x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = random::trig(&mut rng, 4, 1.0, true);
            let c = certify_cover_unoriented(&spec, &[x, y], 1e-9).unwrap();
            let z = topo_zero::find_zero_unoriented_2d(&translate_config(&spec, &[x, y]).unwrap(), 1e-9).unwrap();
            prop_assert_eq!(c.direction, z.direction);
        }

        #[test]
        fn membership_is_monotone_in_length(seed in 0u64..10_000, x in -2.0f64..2.0, y in -2.0f64..2.0, r1 in 0.0f64..3.0, dr in 0.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = random::trig(&mut rng, 4, 1.0, true);
            let a = membership_test_2d(&spec, &[x, y], r1, 1e-9).unwrap();
            let b = membership_test_2d(&spec, &[x, y], r1 + dr, 1e-9).unwrap();
            prop_assert!(!a.covered || b.covered);
        }
    }
}
