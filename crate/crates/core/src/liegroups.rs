//! Closed-form Lie group arithmetic and coverage certificates for
//! configurations of one-parameter subgroup cosets.
//!
//! A configuration assigns to each line `L` in the Lie algebra a group
//! element `σ(L)`; the covered set is `⋃ σ(L)·exp(L)`. For groups whose
//! exponential map is a global diffeomorphism the problem pulls back to the
//! algebra through `log`. The cylinder `C*` and the torus need the path
//! lifting arguments implemented at the bottom of this file.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::configs::{
    dot, mesh_directions, norm, ConfigSpec, Direction, DirectionMap, FnMap, OrientedDirection,
    UnorientedDirection,
};
use crate::error::{KakeyaError, Result};
use crate::euclid::CoverStatus;
use crate::par::Execution;
use crate::topo_zero::{
    self, check_tol, first_grid_zero, highdim_search, planar_zero, tangent_zero_s2, wrap_angle,
    S2Options, ZeroMethod,
};

pub const ROTATION_DEFECT_TOL: f64 = 1e-10;
pub const MIN_CYLINDER_MODULUS: f64 = 1e-300;
pub const DEFAULT_KERNEL_GRID: usize = 4096;
const KERNEL_WINDOW_PAD: i64 = 2;
const KERNEL_ESCALATION: i64 = 4;
const TAUT_MESH: usize = 2048;
/// Rotations closer than this to angle π have an ambiguous log axis.
const PI_BRANCH_GAP: f64 = 1e-7;
const PATH_EXPORT_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKind {
    Euclidean,
    Heisenberg,
    Affine,
    Cylinder,
    Torus,
    Rotation,
}

impl GroupKind {
    /// Dimension of the Lie algebra; `None` for Euclidean space, whose
    /// dimension comes with the data.
    pub fn algebra_dim(self) -> Option<usize> {
        match self {
            GroupKind::Euclidean => None,
            GroupKind::Heisenberg | GroupKind::Rotation => Some(3),
            GroupKind::Affine | GroupKind::Cylinder | GroupKind::Torus => Some(2),
        }
    }

    /// Groups whose exponential map is a global diffeomorphism.
    pub fn exp_is_diffeomorphism(self) -> bool {
        matches!(self, GroupKind::Euclidean | GroupKind::Heisenberg | GroupKind::Affine)
    }

    pub fn parse(name: &str) -> Result<GroupKind> {
        serde_json::from_value(serde_json::Value::String(name.to_ascii_lowercase()))
            .map_err(|_| KakeyaError::InvalidGroup(format!("unknown Lie group '{name}'")))
    }
}

/// An element of one of the supported groups.
///
/// Heisenberg `(x, y, z)` is the unipotent matrix `[[1,x,z],[0,1,y],[0,0,1]]`;
/// affine `(a, b)` is `[[a,b],[0,1]]` with `a > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "group", rename_all = "kebab-case")]
pub enum GroupElement {
    Euclidean { v: Vec<f64> },
    Heisenberg { x: f64, y: f64, z: f64 },
    Affine { a: f64, b: f64 },
    Cylinder { re: f64, im: f64 },
    Torus { phi: [f64; 2] },
    Rotation { m: [[f64; 3]; 3] },
}

pub type Mat3 = [[f64; 3]; 3];

/// A Lie algebra vector tagged with its group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraVector {
    pub group: GroupKind,
    pub coords: Vec<f64>,
}

impl AlgebraVector {
    pub fn new(group: GroupKind, coords: Vec<f64>) -> Result<Self> {
        if let Some(d) = group.algebra_dim() {
            if coords.len() != d {
                return Err(KakeyaError::DimensionMismatch { expected: d, found: coords.len() });
            }
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(KakeyaError::InvalidInput("algebra coordinates must be finite".into()));
        }
        Ok(AlgebraVector { group, coords })
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }
}

impl GroupElement {
    pub fn identity(kind: GroupKind, dim: usize) -> GroupElement {
        match kind {
            GroupKind::Euclidean => GroupElement::Euclidean { v: vec![0.0; dim] },
            GroupKind::Heisenberg => GroupElement::Heisenberg { x: 0.0, y: 0.0, z: 0.0 },
            GroupKind::Affine => GroupElement::Affine { a: 1.0, b: 0.0 },
            GroupKind::Cylinder => GroupElement::Cylinder { re: 1.0, im: 0.0 },
            GroupKind::Torus => GroupElement::Torus { phi: [0.0, 0.0] },
            GroupKind::Rotation => GroupElement::Rotation { m: IDENTITY3 },
        }
    }

    pub fn kind(&self) -> GroupKind {
        match self {
            GroupElement::Euclidean { .. } => GroupKind::Euclidean,
            GroupElement::Heisenberg { .. } => GroupKind::Heisenberg,
            GroupElement::Affine { .. } => GroupKind::Affine,
            GroupElement::Cylinder { .. } => GroupKind::Cylinder,
            GroupElement::Torus { .. } => GroupKind::Torus,
            GroupElement::Rotation { .. } => GroupKind::Rotation,
        }
    }

    /// Builds an element from its coordinates. Rotations accept a
    /// row-major 3×3 matrix or a rotation vector.
    pub fn from_coords(kind: GroupKind, c: &[f64]) -> Result<GroupElement> {
        let want = |n: usize| {
            if c.len() == n {
                Ok(())
            } else {
                Err(KakeyaError::DimensionMismatch { expected: n, found: c.len() })
            }
        };
        let g = match kind {
            GroupKind::Euclidean => GroupElement::Euclidean { v: c.to_vec() },
            GroupKind::Heisenberg => {
                want(3)?;
                GroupElement::Heisenberg { x: c[0], y: c[1], z: c[2] }
            }
            GroupKind::Affine => {
                want(2)?;
                GroupElement::Affine { a: c[0], b: c[1] }
            }
            GroupKind::Cylinder => {
                want(2)?;
                GroupElement::Cylinder { re: c[0], im: c[1] }
            }
            GroupKind::Torus => {
                want(2)?;
                GroupElement::Torus { phi: [c[0].rem_euclid(TAU), c[1].rem_euclid(TAU)] }
            }
            GroupKind::Rotation => match c.len() {
                3 => GroupElement::Rotation { m: rotation_exp([c[0], c[1], c[2]]) },
                9 => GroupElement::Rotation {
                    m: [[c[0], c[1], c[2]], [c[3], c[4], c[5]], [c[6], c[7], c[8]]],
                },
                n => return Err(KakeyaError::DimensionMismatch { expected: 9, found: n }),
            },
        };
        g.check()?;
        Ok(g)
    }

    pub fn coords(&self) -> Vec<f64> {
        match self {
            GroupElement::Euclidean { v } => v.clone(),
            GroupElement::Heisenberg { x, y, z } => vec![*x, *y, *z],
            GroupElement::Affine { a, b } => vec![*a, *b],
            GroupElement::Cylinder { re, im } => vec![*re, *im],
            GroupElement::Torus { phi } => phi.to_vec(),
            GroupElement::Rotation { m } => m.iter().flatten().copied().collect(),
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.coords().iter().any(|c| !c.is_finite()) {
            return Err(KakeyaError::InvalidInput("group element has non-finite coordinates".into()));
        }
        match self {
            GroupElement::Affine { a, .. } if *a <= 0.0 => {
                Err(KakeyaError::InvalidInput(format!("affine element needs a > 0, got {a}")))
            }
            GroupElement::Cylinder { re, im } if re.hypot(*im) <= MIN_CYLINDER_MODULUS => {
                Err(KakeyaError::InvalidInput("cylinder element must be nonzero".into()))
            }
            GroupElement::Rotation { m } if orthonormality_defect(m) > ROTATION_DEFECT_TOL || det3(m) <= 0.0 => {
                Err(KakeyaError::InvalidInput(format!(
                    "rotation defect {:.3e} exceeds {ROTATION_DEFECT_TOL:e}",
                    orthonormality_defect(m)
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn mul(&self, h: &GroupElement) -> Result<GroupElement> {
        use GroupElement as G;
        Ok(match (self, h) {
            (G::Euclidean { v }, G::Euclidean { v: w }) => {
                if v.len() != w.len() {
                    return Err(KakeyaError::DimensionMismatch { expected: v.len(), found: w.len() });
                }
                G::Euclidean { v: v.iter().zip(w).map(|(a, b)| a + b).collect() }
            }
            (G::Heisenberg { x, y, z }, G::Heisenberg { x: x2, y: y2, z: z2 }) => {
                G::Heisenberg { x: x + x2, y: y + y2, z: z + z2 + x * y2 }
            }
            (G::Affine { a, b }, G::Affine { a: a2, b: b2 }) => G::Affine { a: a * a2, b: a * b2 + b },
            (G::Cylinder { re, im }, G::Cylinder { re: r2, im: i2 }) => {
                let w = Complex64::new(*re, *im) * Complex64::new(*r2, *i2);
                G::Cylinder { re: w.re, im: w.im }
            }
            (G::Torus { phi }, G::Torus { phi: p2 }) => {
                G::Torus { phi: [(phi[0] + p2[0]).rem_euclid(TAU), (phi[1] + p2[1]).rem_euclid(TAU)] }
            }
            (G::Rotation { m }, G::Rotation { m: m2 }) => G::Rotation { m: mat_mul(m, m2) },
            (g, h) => {
                return Err(KakeyaError::InvalidGroup(format!(
                    "cannot multiply {:?} by {:?}",
                    g.kind(),
                    h.kind()
                )))
            }
        })
    }

    pub fn inv(&self) -> GroupElement {
        use GroupElement as G;
        match self {
            G::Euclidean { v } => G::Euclidean { v: v.iter().map(|x| -x).collect() },
            G::Heisenberg { x, y, z } => G::Heisenberg { x: -x, y: -y, z: -z + x * y },
            G::Affine { a, b } => G::Affine { a: 1.0 / a, b: -b / a },
            G::Cylinder { re, im } => {
                let w = Complex64::new(*re, *im).inv();
                G::Cylinder { re: w.re, im: w.im }
            }
            G::Torus { phi } => G::Torus { phi: [(-phi[0]).rem_euclid(TAU), (-phi[1]).rem_euclid(TAU)] },
            G::Rotation { m } => G::Rotation { m: transpose(m) },
        }
    }
}

pub fn exp_map(x: &AlgebraVector) -> Result<GroupElement> {
    let c = &x.coords;
    if let Some(d) = x.group.algebra_dim() {
        if c.len() != d {
            return Err(KakeyaError::DimensionMismatch { expected: d, found: c.len() });
        }
    }
    Ok(match x.group {
        GroupKind::Euclidean => GroupElement::Euclidean { v: c.clone() },
        GroupKind::Heisenberg => GroupElement::Heisenberg { x: c[0], y: c[1], z: c[2] + 0.5 * c[0] * c[1] },
        GroupKind::Affine => GroupElement::Affine { a: c[0].exp(), b: c[1] * exprel(c[0]) },
        GroupKind::Cylinder => {
            let w = Complex64::new(c[0], c[1]).exp();
            GroupElement::Cylinder { re: w.re, im: w.im }
        }
        GroupKind::Torus => GroupElement::Torus { phi: [c[0].rem_euclid(TAU), c[1].rem_euclid(TAU)] },
        GroupKind::Rotation => GroupElement::Rotation { m: rotation_exp([c[0], c[1], c[2]]) },
    })
}

/// `(e^u − 1)/u` with the removable singularity filled in.
fn exprel(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        u.exp_m1() / u
    }
}

pub fn log_map(g: &GroupElement) -> Result<AlgebraVector> {
    let (group, coords) = match g {
        GroupElement::Euclidean { v } => (GroupKind::Euclidean, v.clone()),
        GroupElement::Heisenberg { x, y, z } => (GroupKind::Heisenberg, vec![*x, *y, z - 0.5 * x * y]),
        GroupElement::Affine { a, b } => {
            if *a <= 0.0 {
                return Err(KakeyaError::LogUndefined(format!("affine a = {a} is not positive")));
            }
            let u = a.ln();
            (GroupKind::Affine, vec![u, b / exprel(u)])
        }
        GroupElement::Cylinder { re, im } => {
            let w = Complex64::new(*re, *im);
            if w.norm() <= MIN_CYLINDER_MODULUS {
                return Err(KakeyaError::LogUndefined("log of zero".into()));
            }
            let l = w.ln();
            (GroupKind::Cylinder, vec![l.re, l.im])
        }
        GroupElement::Torus { phi } => (GroupKind::Torus, vec![wrap_angle(phi[0]), wrap_angle(phi[1])]),
        GroupElement::Rotation { m } => (GroupKind::Rotation, rotation_log(m)?.to_vec()),
    };
    Ok(AlgebraVector { group, coords })
}

/// `exp(t·X_L)` for the unit vector `X_L` along `dir`.
pub fn one_param(group: GroupKind, dir: &[f64], t: f64) -> Result<GroupElement> {
    let n = norm(dir);
    if !(n > 0.0) || !n.is_finite() {
        return Err(KakeyaError::InvalidInput("zero direction".into()));
    }
    exp_map(&AlgebraVector::new(group, dir.iter().map(|x| t * x / n).collect())?)
}

/// Left-invariant distance `‖log(g⁻¹h)‖`, falling back to the Frobenius
/// distance for rotations on the angle-π branch.
pub fn intrinsic_distance(g: &GroupElement, h: &GroupElement) -> Result<f64> {
    let d = g.inv().mul(h)?;
    match log_map(&d) {
        Ok(v) => Ok(v.norm()),
        Err(KakeyaError::LogUndefined(_)) if d.kind() == GroupKind::Rotation => {
            let (GroupElement::Rotation { m: a }, GroupElement::Rotation { m: b }) = (g, h) else {
                unreachable!()
            };
            Ok(a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
        }
        Err(e) => Err(e),
    }
}

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn mat_vec(a: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
}

pub fn transpose(a: &Mat3) -> Mat3 {
    [0, 1, 2].map(|i| [a[0][i], a[1][i], a[2][i]])
}

pub fn det3(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Largest entry of `|MᵀM − I|`.
pub fn orthonormality_defect(m: &Mat3) -> f64 {
    let p = mat_mul(&transpose(m), m);
    let mut worst: f64 = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            worst = worst.max((v - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

/// Gram–Schmidt on the rows.
pub fn reorthonormalize(m: &Mat3) -> Mat3 {
    let r0 = crate::sphere::normalize3(m[0]);
    let p = crate::sphere::dot3(m[1], r0);
    let r1 = crate::sphere::normalize3([m[1][0] - p * r0[0], m[1][1] - p * r0[1], m[1][2] - p * r0[2]]);
    let r2 = crate::sphere::cross3(r0, r1);
    [r0, r1, r2]
}

/// Rodrigues' formula for the rotation by `|w|` about `w`.
pub fn rotation_exp(w: [f64; 3]) -> Mat3 {
    let th = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let k = [[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]];
    let k2 = mat_mul(&k, &k);
    // sin θ / θ and (1 − cos θ)/θ² with series near 0
    let (a, b) = if th < 1e-4 {
        let t2 = th * th;
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        (th.sin() / th, (1.0 - th.cos()) / (th * th))
    };
    let mut r = IDENTITY3;
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] += a * k[i][j] + b * k2[i][j];
        }
    }
    r
}

/// Rotation vector with angle in `[0, π)`. Angles within [`PI_BRANCH_GAP`]
/// of π are reported as ambiguous.
pub fn rotation_log(m: &Mat3) -> Result<[f64; 3]> {
    let c = ((m[0][0] + m[1][1] + m[2][2] - 1.0) / 2.0).clamp(-1.0, 1.0);
    let th = c.acos();
    if PI - th < PI_BRANCH_GAP {
        return Err(KakeyaError::LogUndefined("rotation by π: the log axis sign is ambiguous".into()));
    }
    let v = [m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1]];
    let f = if th < 1e-4 { 0.5 + th * th / 12.0 } else { th / (2.0 * th.sin()) };
    Ok(v.map(|x| f * x))
}

/// How a configuration's values are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chart {
    /// `σ(L) = exp(spec(L))`.
    #[default]
    Exponential,
    /// `spec(L)` holds group coordinates directly.
    Coordinates,
}

/// A configuration into a Lie group: `L ↦ left ⋆ chart(spec(L))`, with `L`
/// ranging over directions of the algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupConfig {
    pub group: GroupKind,
    #[serde(default)]
    pub chart: Chart,
    pub spec: ConfigSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<GroupElement>,
}

impl GroupConfig {
    pub fn new(group: GroupKind, chart: Chart, spec: ConfigSpec) -> Self {
        GroupConfig { group, chart, spec, left: None }
    }

    pub fn check(&self) -> Result<()> {
        self.spec.check()?;
        if let Some(d) = self.group.algebra_dim() {
            if self.spec.dim != d {
                return Err(KakeyaError::DimensionMismatch { expected: d, found: self.spec.dim });
            }
        }
        if let Some(h) = &self.left {
            h.check()?;
            if h.kind() != self.group {
                return Err(KakeyaError::InvalidGroup(format!(
                    "left factor is {:?}, configuration is {:?}",
                    h.kind(),
                    self.group
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// `σ(u)` for a unit algebra vector `u`.
    pub fn eval(&self, u: &[f64]) -> Result<GroupElement> {
        let v = self.spec.eval_vec(u);
        let base = match self.chart {
            Chart::Exponential => exp_map(&AlgebraVector { group: self.group, coords: v })?,
            Chart::Coordinates => GroupElement::from_coords(self.group, &v)?,
        };
        match &self.left {
            Some(h) => h.mul(&base),
            None => Ok(base),
        }
    }

    /// The configuration `L ↦ h ⋆ σ(L)`.
    pub fn translated(&self, h: &GroupElement) -> Result<GroupConfig> {
        let left = match &self.left {
            Some(l) => h.mul(l)?,
            None => h.clone(),
        };
        Ok(GroupConfig { left: Some(left), ..self.clone() })
    }
}

/// `μ(u) = log(g⁻¹ ⋆ σ(u))`; NaN where the log is undefined so the finders
/// report failure rather than a false zero.
struct LogPullback<'a> {
    cfg: &'a GroupConfig,
    ginv: GroupElement,
}

impl DirectionMap for LogPullback<'_> {
    fn dim(&self) -> usize {
        self.cfg.dim()
    }

    fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        let v = self
            .cfg
            .eval(u)
            .and_then(|s| self.ginv.mul(&s))
            .and_then(|d| log_map(&d))
            .map(|a| a.coords);
        match v {
            Ok(c) => out.copy_from_slice(&c),
            Err(_) => out.iter_mut().for_each(|x| *x = f64::NAN),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupMethod {
    Bisection2d,
    IndexSubdivisionS2,
    HeuristicHighdim,
    CylinderKernelSearch,
    TorusPlaneLift,
    TorusCylinderLift,
}

impl From<ZeroMethod> for GroupMethod {
    fn from(m: ZeroMethod) -> Self {
        match m {
            ZeroMethod::Bisection2d => GroupMethod::Bisection2d,
            ZeroMethod::IndexSubdivisionS2 => GroupMethod::IndexSubdivisionS2,
            ZeroMethod::HeuristicHighdim => GroupMethod::HeuristicHighdim,
        }
    }
}

/// Witness that `target = σ(L*) ⋆ exp(t*·X_{L*})`, with the residual
/// measured as the intrinsic distance between the two sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCoverCertificate {
    pub group: GroupKind,
    pub target: GroupElement,
    pub direction: Direction,
    pub t: f64,
    pub residual: f64,
    pub method: GroupMethod,
    pub status: CoverStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_index_sum: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftReport>,
}

impl GroupCoverCertificate {
    pub fn is_covered(&self) -> bool {
        self.status == CoverStatus::Covered
    }
}

/// Intrinsic distance between `g` and `σ(L) ⋆ exp(t X_L)`.
pub fn group_residual(cfg: &GroupConfig, g: &GroupElement, dir: &[f64], t: f64) -> Result<f64> {
    let reached = cfg.eval(dir)?.mul(&one_param(cfg.group, dir, t)?)?;
    intrinsic_distance(g, &reached)
}

/// Coverage certificate for groups with a diffeomorphic exponential map
/// (Euclidean, Heisenberg, affine). The zero of `P_{L^⊥} μ(L)` with
/// `μ = log(g⁻¹σ)` gives `g = σ(L*) ⋆ exp(−(μ(L*)·X) X)`.
pub fn certify_cover_group(cfg: &GroupConfig, g: &GroupElement, tol: f64) -> Result<GroupCoverCertificate> {
    check_tol(tol)?;
    cfg.check()?;
    g.check()?;
    if !cfg.group.exp_is_diffeomorphism() {
        return Err(KakeyaError::InvalidGroup(format!(
            "{:?} has no global log; use the cylinder or torus certificates",
            cfg.group
        )));
    }
    if g.kind() != cfg.group {
        return Err(KakeyaError::InvalidGroup(format!("target is {:?}, configuration is {:?}", g.kind(), cfg.group)));
    }
    if let GroupElement::Euclidean { v } = g {
        if v.len() != cfg.dim() {
            return Err(KakeyaError::DimensionMismatch { expected: cfg.dim(), found: v.len() });
        }
    }
    let spec = &cfg.spec;
    if spec.unoriented && !spec.is_structurally_even() {
        return Err(KakeyaError::NotEven { defect: spec.antipodal_defect() });
    }
    let mu = LogPullback { cfg, ginv: g.inv() };
    // the group residual amplifies the algebra residual by a bounded
    // factor; search a little below the requested tolerance
    let inner = 1e-2 * tol;
    let zero = match (spec.dim, spec.unoriented) {
        (2, true) => planar_zero(&mu, inner, topo_zero::DEFAULT_GRID_CELLS),
        (2, false) => {
            return Err(KakeyaError::InvalidInput(
                "oriented planar configurations are not guaranteed to cover".into(),
            ))
        }
        (3, u) => {
            let c = tangent_zero_s2(&mu, &S2Options { tol: inner, ..S2Options::default() });
            if u {
                topo_zero::unorient(c)
            } else {
                c
            }
        }
        (_, u) => {
            let c = highdim_search(&mu, inner, 32, 0, Execution::default()).expect("at least one restart");
            if u {
                topo_zero::unorient(c)
            } else {
                c
            }
        }
    };
    let x = zero.direction.unit_vector();
    let m = mu.eval_vec(&x);
    let t = -dot(&m, &x);
    let residual = group_residual(cfg, g, &x, t).unwrap_or(f64::INFINITY);
    Ok(GroupCoverCertificate {
        group: cfg.group,
        target: g.clone(),
        direction: zero.direction,
        t,
        residual,
        method: zero.method.into(),
        status: if residual <= tol { CoverStatus::Covered } else { CoverStatus::NotFound },
        mesh_index_sum: zero.mesh_index_sum,
        lift: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TautReport {
    pub taut: bool,
    pub radius: f64,
    /// Largest `‖log σ(L)‖` seen on the mesh.
    pub sup_log_norm: f64,
    /// Direction attaining the supremum, or where the log failed.
    pub witness: Option<Vec<f64>>,
    pub mesh_points: usize,
}

/// Does the configuration stay within `ρ` of the identity in the log chart?
pub fn is_taut(cfg: &GroupConfig, rho: f64) -> Result<TautReport> {
    cfg.check()?;
    if !(rho > 0.0) {
        return Err(KakeyaError::InvalidInput(format!("radius must be positive, got {rho}")));
    }
    let bound = match cfg.group {
        GroupKind::Cylinder | GroupKind::Torus | GroupKind::Rotation => Some(PI),
        _ => None,
    };
    if let Some(b) = bound {
        if rho >= b {
            return Err(KakeyaError::InvalidInput(format!(
                "radius {rho} exceeds the injectivity bound π of {:?}",
                cfg.group
            )));
        }
    }
    let mesh = mesh_directions(cfg.dim(), TAUT_MESH);
    let mut sup: f64 = 0.0;
    let mut witness = None;
    for u in &mesh {
        match cfg.eval(u).and_then(|g| log_map(&g)) {
            Ok(v) => {
                if v.norm() > sup {
                    sup = v.norm();
                    witness = Some(u.clone());
                }
            }
            Err(_) => {
                return Ok(TautReport {
                    taut: false,
                    radius: rho,
                    sup_log_norm: f64::INFINITY,
                    witness: Some(u.clone()),
                    mesh_points: mesh.len(),
                })
            }
        }
    }
    Ok(TautReport { taut: sup <= rho, radius: rho, sup_log_norm: sup, witness, mesh_points: mesh.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftDecision {
    LiftToPlane,
    LiftToCylinder,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftReport {
    pub decision: LiftDecision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winding: Option<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_index: Option<i64>,
    /// Unimodular change of torus coordinates used for the cylinder lift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<[[i64; 2]; 2]>,
    /// Decimated samples of the lifted path.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub path: Vec<[f64; 2]>,
    pub grid: usize,
}

/// Continuous logarithm of `t ↦ σ(e^{it})` on `[0, 2π]` for a cylinder
/// configuration.
pub struct CylinderPath<'a> {
    cfg: &'a GroupConfig,
    grid: usize,
    values: Vec<Complex64>,
    lifted: Vec<Complex64>,
}

impl<'a> CylinderPath<'a> {
    pub fn new(cfg: &'a GroupConfig, grid: usize) -> Result<Self> {
        cfg.check()?;
        if cfg.group != GroupKind::Cylinder {
            return Err(KakeyaError::InvalidGroup(format!("expected cylinder, got {:?}", cfg.group)));
        }
        if grid < 16 {
            return Err(KakeyaError::InvalidInput("path grid needs at least 16 cells".into()));
        }
        let mut values = Vec::with_capacity(grid + 1);
        for k in 0..=grid {
            values.push(cyl_value(cfg, TAU * k as f64 / grid as f64)?);
        }
        let mut lifted = Vec::with_capacity(grid + 1);
        lifted.push(values[0].ln());
        for k in 1..=grid {
            let step = (values[k] / values[k - 1]).ln();
            if step.im.abs() >= PI / 2.0 {
                return Err(KakeyaError::CoarseSampling { index: k - 1, next: k, angle: step.im.abs() });
            }
            lifted.push(lifted[k - 1] + step);
        }
        Ok(CylinderPath { cfg, grid, values, lifted })
    }

    /// `p(t)` continued from the grid sample below `t`.
    pub fn at(&self, t: f64) -> Complex64 {
        let k = ((t / TAU * self.grid as f64).floor() as isize).clamp(0, self.grid as isize) as usize;
        match cyl_value(self.cfg, t) {
            Ok(w) => self.lifted[k] + (w / self.values[k]).ln(),
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.lifted
    }

    pub fn sup_modulus(&self) -> f64 {
        self.lifted.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }
}

fn cyl_value(cfg: &GroupConfig, t: f64) -> Result<Complex64> {
    match cfg.eval(&[t.cos(), t.sin()])? {
        GroupElement::Cylinder { re, im } => Ok(Complex64::new(re, im)),
        other => Err(KakeyaError::InvalidGroup(format!("expected cylinder value, got {:?}", other.kind()))),
    }
}

/// Result of the kernel search: the line through `p(t)` with direction
/// `dir(t)` meets `q + 2πin`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct KernelHit {
    t: f64,
    n: i64,
    s: f64,
    residual: f64,
}

/// Search order `0, 1, −1, 2, −2, …` up to `window`; within each `n` the
/// smallest `t` wins.
fn kernel_search<P, D>(p: P, dir: D, q: Complex64, grid: usize, window: i64, tol: f64) -> Option<KernelHit>
where
    P: Fn(f64) -> Complex64,
    D: Fn(f64) -> Complex64,
{
    let ns = std::iter::once(0).chain((1..=window).flat_map(|k| [k, -k]));
    for n in ns {
        let goal = q + Complex64::new(0.0, TAU * n as f64);
        let d = |t: f64| {
            let r = goal - p(t);
            let e = dir(t);
            // r · (i e)
            -r.re * e.im + r.im * e.re
        };
        if let Some((t, _, _)) = first_grid_zero(d, 0.0, TAU, grid, 0.0) {
            let e = dir(t);
            let r = goal - p(t);
            let s = r.re * e.re + r.im * e.im;
            let residual = (p(t) + e * s - goal).norm();
            if residual <= tol {
                return Some(KernelHit { t, n, s, residual });
            }
        }
    }
    None
}

fn kernel_window(sup: f64) -> i64 {
    (sup / TAU).ceil() as i64 + KERNEL_WINDOW_PAD
}

fn decimate(path: &[Complex64]) -> Vec<[f64; 2]> {
    let step = path.len().div_ceil(PATH_EXPORT_POINTS).max(1);
    path.iter().step_by(step).map(|z| [z.re, z.im]).collect()
}

/// Identity coverage for a configuration into `C*`: lifts `σ` to a
/// continuous path `p(t)` in `C` and finds a line through `p(t)` at angle
/// `t` meeting the kernel `2πiZ` of `exp`.
pub fn certify_identity_cylinder(cfg: &GroupConfig, grid: usize, tol: f64) -> Result<GroupCoverCertificate> {
    certify_cover_cylinder(cfg, &GroupElement::identity(GroupKind::Cylinder, 2), grid, tol)
}

/// Coverage of an arbitrary `g ∈ C*` via the identity case for `g⁻¹σ`.
pub fn certify_cover_cylinder(
    cfg: &GroupConfig,
    g: &GroupElement,
    grid: usize,
    tol: f64,
) -> Result<GroupCoverCertificate> {
    check_tol(tol)?;
    g.check()?;
    if g.kind() != GroupKind::Cylinder {
        return Err(KakeyaError::InvalidGroup(format!("target is {:?}, expected cylinder", g.kind())));
    }
    let shifted = cfg.translated(&g.inv())?;
    let mut grid = grid;
    let mut attempt = 0;
    loop {
        let path = CylinderPath::new(&shifted, grid)?;
        let mut window = kernel_window(path.sup_modulus());
        if attempt > 0 {
            window += KERNEL_ESCALATION;
        }
        let hit = kernel_search(|t| path.at(t), |t| Complex64::new(t.cos(), t.sin()), Complex64::new(0.0, 0.0), grid, window, tol);
        let lift = |n: Option<i64>| LiftReport {
            decision: LiftDecision::Direct,
            winding: None,
            kernel_index: n,
            basis: None,
            path: decimate(path.samples()),
            grid,
        };
        if let Some(h) = hit {
            let dir = [h.t.cos(), h.t.sin()];
            let intrinsic = group_residual(cfg, g, &dir, h.s).unwrap_or(f64::INFINITY);
            return Ok(GroupCoverCertificate {
                group: GroupKind::Cylinder,
                target: g.clone(),
                direction: Direction::Oriented(OrientedDirection::from_angle(h.t)),
                t: h.s,
                residual: h.residual.max(intrinsic),
                method: GroupMethod::CylinderKernelSearch,
                status: if h.residual.max(intrinsic) <= tol { CoverStatus::Covered } else { CoverStatus::NotFound },
                mesh_index_sum: None,
                lift: Some(lift(Some(h.n))),
            });
        }
        if attempt == 1 {
            return Ok(GroupCoverCertificate {
                group: GroupKind::Cylinder,
                target: g.clone(),
                direction: Direction::Oriented(OrientedDirection::from_angle(0.0)),
                t: 0.0,
                residual: f64::INFINITY,
                method: GroupMethod::CylinderKernelSearch,
                status: CoverStatus::NotFound,
                mesh_index_sum: None,
                lift: Some(lift(None)),
            });
        }
        attempt += 1;
        grid *= 4;
    }
}

/// Unwrapped torus angles on a uniform grid of the direction space.
struct TorusLift<'a> {
    cfg: &'a GroupConfig,
    period: f64,
    mesh: usize,
    raw: Vec<[f64; 2]>,
    lifted: Vec<[f64; 2]>,
}

impl<'a> TorusLift<'a> {
    fn new(cfg: &'a GroupConfig, mesh: usize) -> Result<Self> {
        cfg.check()?;
        if cfg.group != GroupKind::Torus {
            return Err(KakeyaError::InvalidGroup(format!("expected torus, got {:?}", cfg.group)));
        }
        if mesh < 8 {
            return Err(KakeyaError::InvalidInput("winding mesh needs at least 8 cells".into()));
        }
        let period = cfg.spec.angle_period();
        let mut raw = Vec::with_capacity(mesh + 1);
        for k in 0..=mesh {
            raw.push(torus_angles(cfg, period * k as f64 / mesh as f64)?);
        }
        let mut lifted = vec![raw[0]];
        for k in 1..=mesh {
            let mut next = lifted[k - 1];
            for j in 0..2 {
                let d = wrap_angle(raw[k][j] - raw[k - 1][j]);
                if d.abs() >= PI * (1.0 - 1e-12) {
                    return Err(KakeyaError::CoarseSampling { index: k - 1, next: k, angle: d.abs() });
                }
                next[j] += d;
            }
            lifted.push(next);
        }
        Ok(TorusLift { cfg, period, mesh, raw, lifted })
    }

    fn winding(&self) -> [i64; 2] {
        let (a, b) = (self.lifted[0], self.lifted[self.mesh]);
        [((b[0] - a[0]) / TAU).round() as i64, ((b[1] - a[1]) / TAU).round() as i64]
    }

    /// Continuous lift at any θ ≥ 0, continued past one period by the
    /// winding.
    fn at(&self, theta: f64) -> [f64; 2] {
        let laps = (theta / self.period).floor();
        let local = theta - laps * self.period;
        let k = ((local / self.period * self.mesh as f64).floor() as usize).min(self.mesh);
        let w = self.winding();
        let phi = torus_angles(self.cfg, local).unwrap_or([f64::NAN; 2]);
        [0, 1].map(|j| {
            self.lifted[k][j] + wrap_angle(phi[j] - self.raw[k][j]) + laps * TAU * w[j] as f64
        })
    }
}

fn torus_angles(cfg: &GroupConfig, theta: f64) -> Result<[f64; 2]> {
    match cfg.eval(&[theta.cos(), theta.sin()])? {
        GroupElement::Torus { phi } => Ok(phi),
        other => Err(KakeyaError::InvalidGroup(format!("expected torus value, got {:?}", other.kind()))),
    }
}

/// Winding pair of the loop traced by a torus configuration over its
/// direction space and the resulting lifting decision.
pub fn torus_winding(cfg: &GroupConfig, mesh: usize) -> Result<LiftReport> {
    let lift = TorusLift::new(cfg, mesh)?;
    let w = lift.winding();
    let (decision, basis) = if w == [0, 0] {
        (LiftDecision::LiftToPlane, None)
    } else {
        (LiftDecision::LiftToCylinder, Some(unimodular_basis(w)))
    };
    Ok(LiftReport { decision, winding: Some(w), kernel_index: None, basis, path: Vec::new(), grid: mesh })
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// `M ∈ SL(2, Z)` whose first row kills the winding `w` and whose second
/// row carries all of it.
fn unimodular_basis(w: [i64; 2]) -> [[i64; 2]; 2] {
    let (g, x, y) = ext_gcd(w[0], w[1]);
    let (a, b) = (w[0] / g, w[1] / g);
    [[b, -a], [x, y]]
}

/// Torus coverage: planar lift when the loop is null-homotopic, otherwise
/// a cylinder lift along the primitive winding direction.
pub fn certify_cover_torus(
    cfg: &GroupConfig,
    g: &GroupElement,
    mesh: usize,
    tol: f64,
) -> Result<GroupCoverCertificate> {
    check_tol(tol)?;
    g.check()?;
    let GroupElement::Torus { phi: target } = g else {
        return Err(KakeyaError::InvalidGroup(format!("target is {:?}, expected torus", g.kind())));
    };
    if !cfg.spec.unoriented || !cfg.spec.is_structurally_even() {
        cfg.spec.check()?;
        return Err(KakeyaError::NotEven { defect: cfg.spec.antipodal_defect() });
    }
    let lift = TorusLift::new(cfg, mesh)?;
    let mut report = torus_winding(cfg, mesh)?;
    let q = *target;

    let (theta, step_len, method) = match report.decision {
        LiftDecision::LiftToPlane => {
            let mu = FnMap::new(2, |u: &[f64], out: &mut [f64]| {
                let th = u[1].atan2(u[0]).rem_euclid(PI);
                let p = lift.at(th);
                out[0] = p[0] - q[0];
                out[1] = p[1] - q[1];
            });
            let z = planar_zero(&mu, 1e-2 * tol, topo_zero::DEFAULT_GRID_CELLS);
            let e = z.direction.unit_vector();
            let th = e[1].atan2(e[0]);
            let m = mu.eval_vec(&e);
            (th, -dot(&m, &e), GroupMethod::TorusPlaneLift)
        }
        _ => {
            let m = report.basis.expect("cylinder lift has a basis").map(|r| r.map(|v| v as f64));
            let apply = |v: [f64; 2]| Complex64::new(m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]);
            let path = |t: f64| apply(lift.at(t));
            let dir = |t: f64| {
                let d = apply([t.cos(), t.sin()]);
                d / d.norm()
            };
            let qz = apply(q);
            let sup = (0..=mesh).map(|k| (path(TAU * k as f64 / mesh as f64) - qz).norm()).fold(0.0, f64::max);
            let mut hit = None;
            for (grid, window) in [(DEFAULT_KERNEL_GRID, kernel_window(sup)), (4 * DEFAULT_KERNEL_GRID, kernel_window(sup) + KERNEL_ESCALATION)] {
                hit = kernel_search(path, dir, qz, grid, window, 1e-2 * tol);
                if hit.is_some() {
                    break;
                }
            }
            match hit {
                Some(h) => {
                    report.kernel_index = Some(h.n);
                    let scale = apply([h.t.cos(), h.t.sin()]).norm();
                    (h.t, h.s / scale, GroupMethod::TorusCylinderLift)
                }
                None => (0.0, f64::NAN, GroupMethod::TorusCylinderLift),
            }
        }
    };
    let dir = [theta.cos(), theta.sin()];
    let residual = if step_len.is_finite() {
        group_residual(cfg, g, &dir, step_len).unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    };
    Ok(GroupCoverCertificate {
        group: GroupKind::Torus,
        target: g.clone(),
        direction: Direction::Unoriented(UnorientedDirection::from_angle(theta)),
        t: step_len,
        residual,
        method,
        status: if residual <= tol { CoverStatus::Covered } else { CoverStatus::NotFound },
        mesh_index_sum: None,
        lift: Some(report),
    })
}
