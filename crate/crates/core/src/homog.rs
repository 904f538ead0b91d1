//! The sphere as the quotient `SO(3)/SO(2)`: one-parameter subgroups project
//! to great circles (or points), sphere maps lift to `SO(3)` exactly when
//! they have degree zero, and swept sets are the unions of projected
//! curves.

use serde::{Deserialize, Serialize};

use crate::configs::{ConfigSpec, DirectionMap, Monomial, Target};
use crate::error::{KakeyaError, Result};
use crate::liegroups::{mat_vec, orthonormality_defect, reorthonormalize, GroupElement, Mat3, ROTATION_DEFECT_TOL};
use crate::par::{self, Execution};
use crate::sphere::{arc, cross3, dot3, norm3, normalize3, slerp, to3, Icosphere, Vec3};
use crate::topo_zero::{map_degree, DegreeReport, DegreeStatus};

pub const UNIT_TOL: f64 = 1e-10;
pub const DEFAULT_MESH_DEPTH: u32 = 5;
pub const DEFAULT_CURVE_SAMPLES: usize = 256;
/// Mesh alignment with the omitted point must stay below `1 − OMIT_MARGIN`.
pub const OMIT_MARGIN: f64 = 1e-6;
pub const LIFT_TOL: f64 = 1e-9;
const BISECT_STEPS: usize = 80;
/// Axis and base closer than this count as parallel.
const PARALLEL_TOL: f64 = 1e-12;

/// A map `S^2 → S^2`: a three-dimensional spec normalized pointwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereMap {
    pub spec: ConfigSpec,
    #[serde(default = "default_depth")]
    pub depth: u32,
}

fn default_depth() -> u32 {
    DEFAULT_MESH_DEPTH
}

impl SphereMap {
    pub fn new(spec: ConfigSpec) -> Result<Self> {
        spec.check()?;
        if spec.dim != 3 {
            return Err(KakeyaError::DimensionMismatch { expected: 3, found: spec.dim });
        }
        Ok(SphereMap { spec: spec.with_target(Target::Sphere), depth: DEFAULT_MESH_DEPTH })
    }

    pub fn with_depth(mut self, depth: u32) -> Self {
        self.depth = depth;
        self
    }

    pub fn constant(p: Vec3) -> Result<Self> {
        Self::new(ConfigSpec::constant(normalize3(p).to_vec(), false))
    }

    pub fn identity() -> Self {
        Self::new(ConfigSpec::identity(3)).expect("identity spec is valid")
    }

    pub fn antipodal() -> Self {
        Self::new(ConfigSpec::antipodal(3)).expect("antipodal spec is valid")
    }

    /// `x ↦ (x + k·c)/‖x + k·c‖` with `k > 1`: its image is the cap of
    /// angular radius `asin(1/k)` about `c`.
    pub fn cap(center: Vec3, k: f64) -> Result<Self> {
        if !(k > 1.0) || !k.is_finite() {
            return Err(KakeyaError::InvalidInput(format!("cap scale {k} must exceed 1")));
        }
        let c = normalize3(center);
        let mut terms: Vec<Monomial> = (0..3)
            .map(|i| {
                let mut powers = vec![0; 3];
                powers[i] = 1;
                let mut coeff = vec![0.0; 3];
                coeff[i] = 1.0;
                Monomial { powers, coeff }
            })
            .collect();
        terms.push(Monomial { powers: vec![0; 3], coeff: c.map(|x| k * x).to_vec() });
        Self::new(ConfigSpec::polynomial(3, terms, false))
    }

    /// Unit value at `x`. Fails where the underlying spec vanishes.
    pub fn eval(&self, x: Vec3) -> Result<Vec3> {
        let mut v = [0.0; 3];
        self.spec.eval_into(&x, &mut v);
        let n = norm3(v);
        if !(n > 0.0) || !n.is_finite() {
            return Err(KakeyaError::InvalidInput(format!("sphere map vanishes at {x:?}")));
        }
        Ok(v.map(|c| c / n))
    }

    fn mesh_values(&self, mesh: &Icosphere, exec: Execution) -> Result<Vec<Vec3>> {
        par::map_slice(exec, &mesh.vertices, |&x| self.eval(x)).into_iter().collect()
    }
}

impl DirectionMap for SphereMap {
    fn dim(&self) -> usize {
        3
    }

    fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        self.spec.eval_into(u, out);
        let n = norm3(to3(out));
        if n > 0.0 {
            out.iter_mut().for_each(|c| *c /= n);
        }
    }
}

/// Projection of the one-parameter subgroup `t ↦ exp(t·axis)` to the
/// sphere through `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreatCircleCurve {
    pub axis: Vec3,
    pub base: Vec3,
    /// `base = ±axis`: the subgroup fixes the base point.
    pub constant: bool,
    /// `base ⊥ axis`: the orbit is a great circle rather than a smaller one.
    pub great_circle: bool,
    pub period: f64,
    pub params: Vec<f64>,
    pub points: Vec<Vec3>,
}

impl GreatCircleCurve {
    pub fn at(&self, t: f64) -> Vec3 {
        rotate(self.axis, t, self.base)
    }
}

/// Rotation of `p` by angle `t` about the unit vector `axis`.
fn rotate(axis: Vec3, t: f64, p: Vec3) -> Vec3 {
    let (s, c) = t.sin_cos();
    let k = cross3(axis, p);
    let d = dot3(axis, p);
    [0, 1, 2].map(|i| p[i] * c + k[i] * s + axis[i] * d * (1.0 - c))
}

fn unit(v: Vec3, what: &str) -> Result<Vec3> {
    let n = norm3(v);
    if !v.iter().all(|x| x.is_finite()) || (n - 1.0).abs() > UNIT_TOL {
        return Err(KakeyaError::InvalidInput(format!("{what} must be a unit vector (norm {n})")));
    }
    Ok(v.map(|x| x / n))
}

/// Samples `t ↦ R_axis(t)·base` over one period.
pub fn quotient_curve(axis: Vec3, base: Vec3, samples: usize) -> Result<GreatCircleCurve> {
    let axis = unit(axis, "axis")?;
    let base = unit(base, "base point")?;
    let samples = samples.max(2);
    let period = std::f64::consts::TAU;
    let params: Vec<f64> = (0..=samples).map(|i| period * i as f64 / samples as f64).collect();
    let points = params.iter().map(|&t| rotate(axis, t, base)).collect();
    Ok(GreatCircleCurve {
        axis,
        base,
        constant: norm3(cross3(axis, base)) <= PARALLEL_TOL,
        great_circle: dot3(axis, base).abs() <= PARALLEL_TOL,
        period,
        params,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftVerdict {
    Liftable,
    NotLiftable,
    /// Degree not certified at this resolution.
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Liftability {
    pub degree: DegreeReport,
    pub verdict: LiftVerdict,
}

impl Liftability {
    pub fn liftable(&self) -> Option<bool> {
        match self.verdict {
            LiftVerdict::Liftable => Some(true),
            LiftVerdict::NotLiftable => Some(false),
            LiftVerdict::Undecided => None,
        }
    }
}

/// A sphere map lifts through `SO(3) → S^2` iff it has degree zero.
pub fn liftability_s2(map: &SphereMap, depth: u32) -> Result<Liftability> {
    let degree = map_degree(map, depth, Execution::default())?;
    let verdict = match (degree.status, degree.degree) {
        (DegreeStatus::LowConfidence, _) => LiftVerdict::Undecided,
        (DegreeStatus::Certified, 0) => LiftVerdict::Liftable,
        (DegreeStatus::Certified, _) => LiftVerdict::NotLiftable,
    };
    Ok(Liftability { degree, verdict })
}

/// An `SO(3)`-valued configuration over an icosphere mesh with
/// `R(x)·base = σ(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereLift {
    /// Point fixed by the projection: `π(R) = R·base`.
    pub base: Vec3,
    pub omitted: Vec3,
    pub depth: u32,
    pub vertices: Vec<Vec3>,
    pub rotations: Vec<Mat3>,
    /// Largest `‖R(x)·base − σ(x)‖` over the mesh.
    pub max_residual: f64,
    /// Largest `σ(x)·omitted` over the mesh.
    pub max_alignment: f64,
    pub reorthonormalized: usize,
}

impl SphereLift {
    pub fn rotation_at(&self, map: &SphereMap, x: Vec3) -> Result<Mat3> {
        let y = map.eval(x)?;
        if dot3(y, self.omitted) >= 1.0 - OMIT_MARGIN {
            return Err(KakeyaError::PointNotOmitted { alignment: dot3(y, self.omitted) });
        }
        Ok(section(self.base, y).0)
    }

    pub fn elements(&self) -> Vec<GroupElement> {
        self.rotations.iter().map(|&m| GroupElement::Rotation { m }).collect()
    }
}

/// Global section of `R ↦ R·b` over the sphere minus `−b`: the rotation in
/// the plane of `b` and `y` carrying `b` to `y`. Returns the rotation and
/// whether it needed re-orthonormalization.
fn section(b: Vec3, y: Vec3) -> (Mat3, bool) {
    let k = cross3(b, y);
    let c = dot3(b, y);
    let kx = [[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]];
    let f = 1.0 / (1.0 + c);
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let k2 = (0..3).map(|l| kx[i][l] * kx[l][j]).sum::<f64>();
            r[i][j] = f64::from(u8::from(i == j)) + kx[i][j] + f * k2;
        }
    }
    if orthonormality_defect(&r) > ROTATION_DEFECT_TOL {
        (reorthonormalize(&r), true)
    } else {
        (r, false)
    }
}

/// Lifts a map whose image misses a neighborhood of `omitted`.
pub fn lift_omitting_point(map: &SphereMap, omitted: Vec3) -> Result<SphereLift> {
    let omitted = unit(omitted, "omitted point")?;
    let mesh = Icosphere::new(map.depth);
    let values = map.mesh_values(&mesh, Execution::default())?;
    let max_alignment = values.iter().map(|&y| dot3(y, omitted)).fold(f64::NEG_INFINITY, f64::max);
    if max_alignment >= 1.0 - OMIT_MARGIN {
        return Err(KakeyaError::PointNotOmitted { alignment: max_alignment });
    }
    let base = omitted.map(|x| -x);
    let lifted = par::map_slice(Execution::default(), &values, |&y| section(base, y));
    let reorthonormalized = lifted.iter().filter(|l| l.1).count();
    let rotations: Vec<Mat3> = lifted.into_iter().map(|l| l.0).collect();
    let max_residual = rotations
        .iter()
        .zip(&values)
        .map(|(r, y)| {
            let p = mat_vec(r, base);
            norm3([p[0] - y[0], p[1] - y[1], p[2] - y[2]])
        })
        .fold(0.0, f64::max);
    if max_residual > LIFT_TOL {
        return Err(KakeyaError::InvalidInput(format!("lift residual {max_residual} exceeds {LIFT_TOL}")));
    }
    Ok(SphereLift {
        base,
        omitted,
        depth: map.depth,
        vertices: mesh.vertices,
        rotations,
        max_residual,
        max_alignment,
        reorthonormalized,
    })
}

/// Degree of `x ↦ R(x)·base` for the lift evaluated off the mesh.
pub fn projected_degree(map: &SphereMap, lift: &SphereLift, depth: u32) -> Result<DegreeReport> {
    let proj = crate::configs::FnMap::new(3, |u: &[f64], out: &mut [f64]| {
        let p = match lift.rotation_at(map, to3(u)) {
            Ok(r) => mat_vec(&r, lift.base),
            Err(_) => [0.0; 3],
        };
        out.copy_from_slice(&p);
    });
    map_degree(&proj, depth, Execution::default())
}

/// A swept curve through the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweptWitness {
    pub axis: Vec3,
    pub base: Vec3,
    pub time: f64,
    /// `‖R_axis(time)·base − target‖`.
    pub distance: f64,
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweptReport {
    pub target: Vec3,
    pub covered: bool,
    pub depth: u32,
    pub axes_sampled: usize,
    pub witnesses: Vec<SweptWitness>,
}

/// Tests whether `target` lies on some curve `t ↦ R_v(t)·σ(v)`.
///
/// The orbit of `σ(v)` about `v` is the circle `{y : y·v = σ(v)·v}`, so the
/// axes that hit the target are the zeros of `h(v) = (target − σ(v))·v`.
/// Zeros are located by sign changes along icosphere edges and bisection;
/// a negative answer holds at mesh resolution only.
pub fn swept_membership_s2(map: &SphereMap, target: Vec3, tol: f64) -> Result<SweptReport> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(KakeyaError::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    let target = unit(target, "target")?;
    let mesh = Icosphere::new(map.depth);
    let values = map.mesh_values(&mesh, Execution::default())?;
    let h = |v: Vec3, s: Vec3| dot3(v, target) - dot3(v, s);
    let hv: Vec<f64> = mesh.vertices.iter().zip(&values).map(|(&v, &s)| h(v, s)).collect();

    let mut edges: Vec<(usize, usize)> =
        mesh.faces.iter().flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)]).map(|(a, b)| (a.min(b), a.max(b))).collect();
    edges.sort_unstable();
    edges.dedup();

    let mut axes: Vec<Vec3> = (0..mesh.vertices.len()).filter(|&i| hv[i] == 0.0).map(|i| mesh.vertices[i]).collect();
    let crossings: Vec<(usize, usize)> =
        edges.into_iter().filter(|&(a, b)| hv[a] != 0.0 && hv[b] != 0.0 && (hv[a] < 0.0) != (hv[b] < 0.0)).collect();
    let found = par::map_slice(Execution::default(), &crossings, |&(a, b)| -> Result<Vec3> {
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let (mut lo, mut hi) = (0.0, 1.0);
        let neg_lo = hv[a] < 0.0;
        for _ in 0..BISECT_STEPS {
            let mid = 0.5 * (lo + hi);
            let v = slerp(pa, pb, mid);
            let m = h(v, map.eval(v)?);
            if m == 0.0 {
                return Ok(v);
            }
            if (m < 0.0) == neg_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(slerp(pa, pb, 0.5 * (lo + hi)))
    });
    for v in found {
        axes.push(v?);
    }

    let mut witnesses = Vec::new();
    for v in axes {
        let s = map.eval(v)?;
        let constant = norm3(cross3(v, s)) <= PARALLEL_TOL;
        let time = if constant {
            0.0
        } else {
            let ps = reject(s, v);
            let pt = reject(target, v);
            dot3(cross3(ps, pt), v).atan2(dot3(ps, pt))
        };
        let p = rotate(v, time, s);
        let distance = norm3([p[0] - target[0], p[1] - target[1], p[2] - target[2]]);
        if distance <= tol {
            witnesses.push(SweptWitness { axis: v, base: s, time, distance, constant });
        }
    }
    Ok(SweptReport {
        target,
        covered: !witnesses.is_empty(),
        depth: map.depth,
        axes_sampled: mesh.vertices.len(),
        witnesses,
    })
}

fn reject(p: Vec3, v: Vec3) -> Vec3 {
    let d = dot3(p, v);
    [p[0] - d * v[0], p[1] - d * v[1], p[2] - d * v[2]]
}

/// Angular distance from `target` to the orbit of `base` about `axis`.
pub fn orbit_distance(axis: Vec3, base: Vec3, target: Vec3) -> f64 {
    (arc(axis, target) - arc(axis, base)).abs()
}
