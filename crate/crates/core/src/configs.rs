//! Direction spaces and evaluable configuration families.
//!
//! A configuration assigns a point of `R^n` to every direction. Unoriented
//! directions are lines through the origin (antipodal unit vectors are
//! identified); oriented directions are unit vectors. All families are
//! evaluated at a unit vector `u`; for `n = 2` that vector is
//! `(cos θ, sin θ)`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{KakeyaError, Result};

/// Coordinates below this magnitude count as zero when choosing the
/// canonical representative of a line.
pub const ZERO_COORD_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_HARMONIC: usize = 64;
/// Largest antipodal mismatch tolerated for an unoriented configuration.
pub const EVENNESS_TOL: f64 = 1e-9;
#[cfg(test)]
const UNIT_NORM_TOL: f64 = 1e-12;
const DEFECT_MESH: usize = 1000;

/// A line through the origin.
///
/// In the plane the line is stored as its angle in `[0, π)`; in higher
/// dimensions as the unit vector whose first non-negligible coordinate is
/// positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnorientedDirection {
    Angle(f64),
    Axis(Vec<f64>),
}

impl UnorientedDirection {
    pub fn from_angle(theta: f64) -> Self {
        let mut t = theta.rem_euclid(PI);
        if t >= PI {
            t = 0.0;
        }
        UnorientedDirection::Angle(t)
    }

    pub fn from_vector(v: &[f64]) -> Result<Self> {
        match v.len() {
            0 | 1 => Err(KakeyaError::InvalidInput(
                "directions need dimension at least 2".into(),
            )),
            2 => {
                if v[0] == 0.0 && v[1] == 0.0 {
                    return Err(KakeyaError::InvalidInput("zero direction vector".into()));
                }
                Ok(Self::from_angle(v[1].atan2(v[0])))
            }
            _ => Ok(UnorientedDirection::Axis(canonicalize(v)?)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            UnorientedDirection::Angle(_) => 2,
            UnorientedDirection::Axis(v) => v.len(),
        }
    }

    /// The representative unit vector spanning the line.
    pub fn unit_vector(&self) -> Vec<f64> {
        match self {
            UnorientedDirection::Angle(t) => vec![t.cos(), t.sin()],
            UnorientedDirection::Axis(v) => v.clone(),
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match self {
            UnorientedDirection::Angle(t) => Some(*t),
            UnorientedDirection::Axis(_) => None,
        }
    }
}

/// Normalizes `v` and flips its sign so that the first coordinate with
/// magnitude above [`ZERO_COORD_TOL`] is positive.
pub fn canonicalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm = norm(v);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(KakeyaError::InvalidInput("zero or non-finite direction vector".into()));
    }
    let mut out: Vec<f64> = v.iter().map(|x| x / norm).collect();
    let lead = out.iter().copied().find(|x| x.abs() > ZERO_COORD_TOL);
    if lead.is_some_and(|x| x < 0.0) {
        out.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(out)
}

/// An oriented line through the origin, stored as a unit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrientedDirection(Vec<f64>);

impl OrientedDirection {
    pub fn from_vector(v: &[f64]) -> Result<Self> {
        if v.len() < 2 {
            return Err(KakeyaError::InvalidInput(
                "directions need dimension at least 2".into(),
            ));
        }
        let n = norm(v);
        if !(n > 0.0) || !n.is_finite() {
            return Err(KakeyaError::InvalidInput("zero or non-finite direction vector".into()));
        }
        Ok(OrientedDirection(v.iter().map(|x| x / n).collect()))
    }

    pub fn from_angle(theta: f64) -> Self {
        OrientedDirection(vec![theta.cos(), theta.sin()])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Unoriented(UnorientedDirection),
    Oriented(OrientedDirection),
}

impl Direction {
    pub fn unit_vector(&self) -> Vec<f64> {
        match self {
            Direction::Unoriented(d) => d.unit_vector(),
            Direction::Oriented(d) => d.as_slice().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Direction::Unoriented(d) => d.dim(),
            Direction::Oriented(d) => d.dim(),
        }
    }
}

/// Codomain of a configuration. Sphere-valued maps are normalized by their
/// consumers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    #[default]
    Euclidean,
    Sphere,
}

impl Target {
    fn is_euclidean(&self) -> bool {
        *self == Target::Euclidean
    }
}

/// Cosine and sine coefficients of one output coordinate:
/// `Σ_k a[k] cos kθ + b[k] sin kθ`. `b[0]` is ignored.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Harmonics {
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
}

impl Harmonics {
    fn degree(&self) -> usize {
        self.a.len().max(self.b.len()).saturating_sub(1)
    }
}

/// One monomial term `coeff · Π u_i^{powers[i]}` with a vector coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub powers: Vec<u32>,
    pub coeff: Vec<f64>,
}

impl Monomial {
    fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Ccw,
    Cw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Family {
    Constant {
        point: Vec<f64>,
    },
    /// Planar only; one [`Harmonics`] entry per output coordinate.
    TrigPolynomial {
        coeffs: Vec<Harmonics>,
    },
    /// Oriented tangent lines to the circle of the given radius.
    TangentCircle {
        radius: f64,
        #[serde(default)]
        orientation: Orientation,
    },
    /// Planar piecewise-linear loop. `thetas` run from 0 to the period of the
    /// direction space (π unoriented, 2π oriented); `periods[j]`, when set,
    /// is the identification used on output coordinate `j` for loop closure.
    SampledGrid {
        thetas: Vec<f64>,
        values: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        periods: Vec<Option<f64>>,
    },
    /// Polynomial in the coordinates of the unit direction, any dimension.
    Polynomial {
        terms: Vec<Monomial>,
    },
    Translated {
        base: Box<ConfigSpec>,
        offset: Vec<f64>,
    },
}

/// A parametric configuration `σ` from a direction space into `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSpec {
    pub dim: usize,
    #[serde(default)]
    pub unoriented: bool,
    #[serde(default, skip_serializing_if = "Target::is_euclidean")]
    pub target: Target,
    #[serde(flatten)]
    pub family: Family,
}

/// Anything that assigns a vector to a unit direction.
///
/// The zero finders only need this: configuration specs, group
/// configurations pulled back through `log`, and sphere maps all implement
/// it.
pub trait DirectionMap: Sync {
    fn dim(&self) -> usize;

    /// Writes the value at the unit vector `u` into `out` (both of length
    /// `dim`).
    fn eval_into(&self, u: &[f64], out: &mut [f64]);

    fn eval_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(u, &mut out);
        out
    }
}

/// Adapts a closure to [`DirectionMap`].
pub struct FnMap<F> {
    dim: usize,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnMap { dim, f }
    }
}

impl<F> DirectionMap for FnMap<F>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        (self.f)(u, out)
    }
}

impl<M: DirectionMap + ?Sized> DirectionMap for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        (**self).eval_into(u, out)
    }
}

impl ConfigSpec {
    pub fn constant(point: Vec<f64>, unoriented: bool) -> Self {
        ConfigSpec {
            dim: point.len(),
            unoriented,
            target: Target::Euclidean,
            family: Family::Constant { point },
        }
    }

    /// Planar trigonometric polynomial from per-coordinate coefficients.
    pub fn trig(coeffs: Vec<Harmonics>, unoriented: bool) -> Self {
        ConfigSpec {
            dim: 2,
            unoriented,
            target: Target::Euclidean,
            family: Family::TrigPolynomial { coeffs },
        }
    }

    pub fn polynomial(dim: usize, terms: Vec<Monomial>, unoriented: bool) -> Self {
        ConfigSpec {
            dim,
            unoriented,
            target: Target::Euclidean,
            family: Family::Polynomial { terms },
        }
    }

    /// `σ(u) = u` on the sphere of `R^dim` (oriented).
    pub fn identity(dim: usize) -> Self {
        Self::linear(dim, 1.0)
    }

    /// `σ(u) = -u` (oriented).
    pub fn antipodal(dim: usize) -> Self {
        Self::linear(dim, -1.0)
    }

    fn linear(dim: usize, scale: f64) -> Self {
        let terms = (0..dim)
            .map(|i| {
                let mut powers = vec![0; dim];
                powers[i] = 1;
                let mut coeff = vec![0.0; dim];
                coeff[i] = scale;
                Monomial { powers, coeff }
            })
            .collect();
        Self::polynomial(dim, terms, false)
    }

    pub fn with_target(mut self, target: Target) -> Self {
        self.target = target;
        self
    }

    /// Length of the planar parameter domain: π for unoriented, 2π for
    /// oriented configurations.
    pub fn angle_period(&self) -> f64 {
        if self.unoriented {
            PI
        } else {
            TAU
        }
    }

    /// Structural validity: dimensions, sizes, finiteness, family
    /// restrictions. Antipodal evenness is checked separately.
    pub fn check(&self) -> Result<()> {
        self.check_with(DEFAULT_MAX_HARMONIC)
    }

    fn check_with(&self, max_harmonic: usize) -> Result<()> {
        let n = self.dim;
        let bad = |msg: String| Err(KakeyaError::InvalidSpec(msg));
        if n < 2 {
            return bad(format!("dimension {n} < 2"));
        }
        let check_vec = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != n {
                return Err(KakeyaError::DimensionMismatch { expected: n, found: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(KakeyaError::InvalidSpec(format!("{what} has non-finite entries")));
            }
            Ok(())
        };
        match &self.family {
            Family::Constant { point } => check_vec(point, "constant point")?,
            Family::TrigPolynomial { coeffs } => {
                if n != 2 {
                    return bad("trigonometric polynomials are planar (dim 2)".into());
                }
                if coeffs.len() != n {
                    return Err(KakeyaError::DimensionMismatch { expected: n, found: coeffs.len() });
                }
                for h in coeffs {
                    if h.degree() > max_harmonic {
                        return bad(format!(
                            "harmonic degree {} exceeds cap {max_harmonic}",
                            h.degree()
                        ));
                    }
                    if h.a.iter().chain(&h.b).any(|x| !x.is_finite()) {
                        return bad("non-finite trigonometric coefficient".into());
                    }
                }
            }
            Family::TangentCircle { radius, .. } => {
                if n != 2 {
                    return bad("tangent circle configurations are planar (dim 2)".into());
                }
                if !(*radius > 0.0) || !radius.is_finite() {
                    return bad(format!("tangent circle radius must be positive, got {radius}"));
                }
            }
            Family::SampledGrid { thetas, values, periods } => {
                if n != 2 {
                    return bad("sampled grids are planar (dim 2)".into());
                }
                if thetas.len() < 2 || thetas.len() != values.len() {
                    return bad("sampled grid needs at least two (theta, value) pairs".into());
                }
                let period = self.angle_period();
                if thetas[0].abs() > 1e-12 || (thetas[thetas.len() - 1] - period).abs() > 1e-9 {
                    return bad(format!("grid angles must run from 0 to {period}"));
                }
                if thetas.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("grid angles must be strictly increasing".into());
                }
                for v in values {
                    check_vec(v, "grid value")?;
                }
                if !periods.is_empty() && periods.len() != n {
                    return Err(KakeyaError::DimensionMismatch { expected: n, found: periods.len() });
                }
            }
            Family::Polynomial { terms } => {
                for t in terms {
                    if t.powers.len() != n {
                        return Err(KakeyaError::DimensionMismatch {
                            expected: n,
                            found: t.powers.len(),
                        });
                    }
                    check_vec(&t.coeff, "monomial coefficient")?;
                }
            }
            Family::Translated { base, offset } => {
                if base.dim != n {
                    return Err(KakeyaError::DimensionMismatch { expected: n, found: base.dim });
                }
                if base.unoriented != self.unoriented {
                    return bad("translated spec must share the base orientation flag".into());
                }
                base.check_with(max_harmonic)?;
                check_vec(offset, "translation offset")?;
            }
        }
        Ok(())
    }

    /// True when evenness `σ(-u) = σ(u)` holds by construction (even
    /// harmonics, even-degree monomials, constant, or a grid over `[0, π]`).
    pub fn is_structurally_even(&self) -> bool {
        match &self.family {
            Family::Constant { .. } => true,
            Family::TrigPolynomial { coeffs } => coeffs.iter().all(|h| {
                let even = |v: &[f64]| v.iter().enumerate().all(|(k, c)| k % 2 == 0 || *c == 0.0);
                even(&h.a) && even(&h.b)
            }),
            Family::TangentCircle { .. } => false,
            Family::SampledGrid { .. } => self.unoriented,
            Family::Polynomial { terms } => terms
                .iter()
                .all(|t| t.degree() % 2 == 0 || t.coeff.iter().all(|c| *c == 0.0)),
            Family::Translated { base, .. } => base.is_structurally_even(),
        }
    }

    /// Maximum of `‖σ(-u) − σ(u)‖` over a deterministic mesh of directions.
    pub fn antipodal_defect(&self) -> f64 {
        mesh_directions(self.dim, DEFECT_MESH)
            .iter()
            .map(|u| {
                let minus: Vec<f64> = u.iter().map(|x| -x).collect();
                dist(&self.eval_raw(u), &self.eval_raw(&minus))
            })
            .fold(0.0, f64::max)
    }

    fn eval_raw(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(u, &mut out);
        out
    }

    /// Evaluates at a planar angle.
    pub fn eval_angle(&self, theta: f64) -> Vec<f64> {
        self.eval_raw(&[theta.cos(), theta.sin()])
    }

    /// Resamples a planar configuration onto a uniform piecewise-linear grid
    /// with `cells` cells over its parameter domain.
    pub fn resample(&self, cells: usize) -> Result<ConfigSpec> {
        self.check()?;
        if self.dim != 2 {
            return Err(KakeyaError::InvalidInput("resampling needs a planar spec".into()));
        }
        if cells < 2 {
            return Err(KakeyaError::InvalidInput("need at least two cells".into()));
        }
        let period = self.angle_period();
        let thetas: Vec<f64> = (0..=cells).map(|i| period * i as f64 / cells as f64).collect();
        let mut values: Vec<Vec<f64>> = thetas.iter().map(|t| self.eval_angle(*t)).collect();
        values[cells] = values[0].clone();
        Ok(ConfigSpec {
            dim: 2,
            unoriented: self.unoriented,
            target: self.target,
            family: Family::SampledGrid { thetas, values, periods: Vec::new() },
        })
    }
}

impl DirectionMap for ConfigSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, u: &[f64], out: &mut [f64]) {
        match &self.family {
            Family::Constant { point } => out.copy_from_slice(point),
            Family::TrigPolynomial { coeffs } => eval_trig(coeffs, u[0], u[1], out),
            Family::TangentCircle { radius, orientation } => {
                let s = match orientation {
                    Orientation::Ccw => *radius,
                    Orientation::Cw => -*radius,
                };
                out[0] = -s * u[1];
                out[1] = s * u[0];
            }
            Family::SampledGrid { thetas, values, .. } => {
                let period = self.angle_period();
                let t = u[1].atan2(u[0]).rem_euclid(period);
                interpolate(thetas, values, t, out);
            }
            Family::Polynomial { terms } => {
                out.iter_mut().for_each(|x| *x = 0.0);
                for term in terms {
                    let mut m = 1.0;
                    for (&p, &x) in term.powers.iter().zip(u) {
                        for _ in 0..p {
                            m *= x;
                        }
                    }
                    for (o, c) in out.iter_mut().zip(&term.coeff) {
                        *o += c * m;
                    }
                }
            }
            Family::Translated { base, offset } => {
                base.eval_into(u, out);
                for (o, x) in out.iter_mut().zip(offset) {
                    *o -= x;
                }
            }
        }
    }
}

fn eval_trig(coeffs: &[Harmonics], c: f64, s: f64, out: &mut [f64]) {
    let degree = coeffs.iter().map(Harmonics::degree).max().unwrap_or(0);
    out.iter_mut().for_each(|x| *x = 0.0);
    // z^k = cos kθ + i sin kθ by repeated multiplication, so σ(-u) matches
    // σ(u) bitwise for even harmonics.
    let (mut re, mut im) = (1.0_f64, 0.0_f64);
    for k in 0..=degree {
        for (o, h) in out.iter_mut().zip(coeffs) {
            if let Some(a) = h.a.get(k) {
                *o += a * re;
            }
            if k > 0 {
                if let Some(b) = h.b.get(k) {
                    *o += b * im;
                }
            }
        }
        let next_re = re * c - im * s;
        im = re * s + im * c;
        re = next_re;
    }
}

fn interpolate(thetas: &[f64], values: &[Vec<f64>], t: f64, out: &mut [f64]) {
    let last = thetas.len() - 1;
    let hi = thetas.partition_point(|&x| x <= t).clamp(1, last);
    let lo = hi - 1;
    let span = thetas[hi] - thetas[lo];
    let w = ((t - thetas[lo]) / span).clamp(0.0, 1.0);
    for (j, o) in out.iter_mut().enumerate() {
        *o = values[lo][j] * (1.0 - w) + values[hi][j] * w;
    }
}

/// Evaluates `σ` at a direction, enforcing dimensions and, for unoriented
/// directions, antipodal evenness.
pub fn eval_config(spec: &ConfigSpec, d: &Direction) -> Result<Vec<f64>> {
    spec.check()?;
    if d.dim() != spec.dim {
        return Err(KakeyaError::DimensionMismatch { expected: spec.dim, found: d.dim() });
    }
    if let Direction::Unoriented(_) = d {
        if !spec.unoriented || !spec.is_structurally_even() {
            return Err(KakeyaError::NotEven { defect: spec.antipodal_defect() });
        }
    }
    Ok(spec.eval_raw(&d.unit_vector()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: String,
    pub defect: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    pub max_harmonic: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions { max_harmonic: DEFAULT_MAX_HARMONIC }
    }
}

pub fn validate_spec(spec: &ConfigSpec) -> ValidationReport {
    validate_spec_with(spec, ValidationOptions::default())
}

/// Lists every violated invariant with its measured defect. Structural
/// errors stop further numeric checks.
pub fn validate_spec_with(spec: &ConfigSpec, opts: ValidationOptions) -> ValidationReport {
    let mut violations = Vec::new();
    if let Err(e) = spec.check_with(opts.max_harmonic) {
        violations.push(Violation { invariant: "structure".into(), defect: None, detail: e.to_string() });
        return ValidationReport { passed: false, violations };
    }
    if spec.unoriented {
        let defect = spec.antipodal_defect();
        if defect > EVENNESS_TOL {
            violations.push(Violation {
                invariant: "antipodal-evenness".into(),
                defect: Some(defect),
                detail: "σ(-u) differs from σ(u)".into(),
            });
        }
    }
    if let Some(defect) = grid_closure_defect(spec) {
        if defect > EVENNESS_TOL {
            violations.push(Violation {
                invariant: "closed-loop".into(),
                defect: Some(defect),
                detail: "first and last grid samples disagree".into(),
            });
        }
    }
    ValidationReport { passed: violations.is_empty(), violations }
}

fn grid_closure_defect(spec: &ConfigSpec) -> Option<f64> {
    match &spec.family {
        Family::SampledGrid { values, periods, .. } => {
            let first = &values[0];
            let last = &values[values.len() - 1];
            let d2: f64 = (0..spec.dim)
                .map(|j| {
                    let diff = last[j] - first[j];
                    let diff = match periods.get(j).copied().flatten() {
                        Some(p) if p > 0.0 => diff - p * (diff / p).round(),
                        _ => diff,
                    };
                    diff * diff
                })
                .sum();
            Some(d2.sqrt())
        }
        Family::Translated { base, .. } => grid_closure_defect(base),
        _ => None,
    }
}

/// Returns the configuration `d ↦ σ(d) − x`.
pub fn translate_config(spec: &ConfigSpec, x: &[f64]) -> Result<ConfigSpec> {
    spec.check()?;
    if x.len() != spec.dim {
        return Err(KakeyaError::DimensionMismatch { expected: spec.dim, found: x.len() });
    }
    Ok(ConfigSpec {
        dim: spec.dim,
        unoriented: spec.unoriented,
        target: spec.target,
        family: Family::Translated { base: Box::new(spec.clone()), offset: x.to_vec() },
    })
}

/// Short hex digest of the canonical JSON encoding.
pub fn spec_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).unwrap_or_default();
    let digest = Sha256::digest(&json);
    hex::encode(&digest[..8])
}

/// Deterministic set of `count` unit vectors: uniform angles in the plane,
/// a Fibonacci lattice on `S^2`, and a seeded sample in higher dimensions.
pub fn mesh_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..count)
            .map(|i| {
                let t = TAU * (i as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => crate::sphere::fibonacci_sphere(count).into_iter().map(|p| p.to_vec()).collect(),
        _ => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
            (0..count).map(|_| random_unit(&mut rng, dim)).collect()
        }
    }
}

pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Random configuration generators used by tests, benches and the CLI.
pub mod random {
    use super::*;

    /// Planar trig polynomial with harmonics up to `max_harmonic` and
    /// coefficients uniform in `[-amp, amp]`. Unoriented specs get even
    /// harmonics only.
    pub fn trig<R: Rng + ?Sized>(
        rng: &mut R,
        max_harmonic: usize,
        amp: f64,
        unoriented: bool,
    ) -> ConfigSpec {
        let coeffs = (0..2)
            .map(|_| {
                let mut a = vec![0.0; max_harmonic + 1];
                let mut b = vec![0.0; max_harmonic + 1];
                for k in 0..=max_harmonic {
                    if unoriented && k % 2 == 1 {
                        continue;
                    }
                    a[k] = rng.random_range(-amp..=amp);
                    if k > 0 {
                        b[k] = rng.random_range(-amp..=amp);
                    }
                }
                Harmonics { a, b }
            })
            .collect();
        ConfigSpec::trig(coeffs, unoriented)
    }

    /// Polynomial field on the sphere of `R^dim` with every monomial of
    /// total degree ≤ `degree` (even degrees only when `unoriented`) and
    /// coefficients uniform in `[-amp, amp]`.
    pub fn polynomial<R: Rng + ?Sized>(
        rng: &mut R,
        dim: usize,
        degree: u32,
        amp: f64,
        unoriented: bool,
    ) -> ConfigSpec {
        let mut terms = Vec::new();
        for powers in exponents(dim, degree) {
            let d: u32 = powers.iter().sum();
            if unoriented && d % 2 == 1 {
                continue;
            }
            let coeff = (0..dim).map(|_| rng.random_range(-amp..=amp)).collect();
            terms.push(Monomial { powers, coeff });
        }
        ConfigSpec::polynomial(dim, terms, unoriented)
    }

    fn exponents(dim: usize, degree: u32) -> Vec<Vec<u32>> {
        fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if i == cur.len() {
                out.push(cur.clone());
                return;
            }
            for p in 0..=left {
                cur[i] = p;
                rec(i + 1, left - p, cur, out);
            }
            cur[i] = 0;
        }
        let mut out = Vec::new();
        rec(0, degree, &mut vec![0; dim], &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

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
    fn constant_evaluates_everywhere() {
        let spec = ConfigSpec::constant(vec![1.0, 0.0], true);
        for t in [0.0, 0.3, 2.0] {
            let d = Direction::Unoriented(UnorientedDirection::from_angle(t));
            assert_eq!(eval_config(&spec, &d).unwrap(), vec![1.0, 0.0]);
        }
    }

    #[test]
    fn trig_double_angle_at_quarter_pi() {
        let d = Direction::Unoriented(UnorientedDirection::from_angle(PI / 4.0));
        let v = eval_config(&double_angle(), &d).unwrap();
        assert!(v[0].abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15, "{v:?}");
    }

    #[test]
    fn tangent_circle_base_point() {
        let spec = ConfigSpec {
            dim: 2,
            unoriented: false,
            target: Target::Euclidean,
            family: Family::TangentCircle { radius: 1.0, orientation: Orientation::Ccw },
        };
        let v = eval_config(&spec, &Direction::Oriented(OrientedDirection::from_angle(0.0))).unwrap();
        assert_eq!(v, vec![0.0, 1.0]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let spec = ConfigSpec::constant(vec![1.0, 0.0], true);
        let d = Direction::Unoriented(UnorientedDirection::from_vector(&[1.0, 0.0, 0.0]).unwrap());
        assert!(matches!(eval_config(&spec, &d), Err(KakeyaError::DimensionMismatch { .. })));
    }

    #[test]
    fn unoriented_eval_on_odd_spec_fails() {
        let mut spec = double_angle();
        if let Family::TrigPolynomial { coeffs } = &mut spec.family {
            coeffs[0].a = vec![0.0, 1.0];
        }
        let d = Direction::Unoriented(UnorientedDirection::from_angle(0.2));
        assert!(matches!(eval_config(&spec, &d), Err(KakeyaError::NotEven { .. })));
    }

    #[test]
    fn validation_reports() {
        assert!(validate_spec(&double_angle()).passed);

        let mut odd = double_angle();
        if let Family::TrigPolynomial { coeffs } = &mut odd.family {
            coeffs[0].a = vec![0.0, 0.5];
        }
        let report = validate_spec(&odd);
        assert!(!report.passed);
        let v = &report.violations[0];
        assert_eq!(v.invariant, "antipodal-evenness");
        // ‖σ(θ+π) − σ(θ)‖ = |2·0.5 cos θ|, maximal near θ = 0
        assert!((v.defect.unwrap() - 1.0).abs() < 1e-4);

        let open = ConfigSpec {
            dim: 2,
            unoriented: true,
            target: Target::Euclidean,
            family: Family::SampledGrid {
                thetas: vec![0.0, PI / 2.0, PI],
                values: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]],
                periods: vec![],
            },
        };
        let report = validate_spec(&open);
        assert!(!report.passed);
        assert!(report.violations.iter().any(|v| v.invariant == "closed-loop"));
    }

    #[test]
    fn harmonic_cap_is_configurable() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = random::trig(&mut rng, 70, 1.0, true);
        assert!(!validate_spec(&spec).passed);
        assert!(validate_spec_with(&spec, ValidationOptions { max_harmonic: 80 }).passed);
    }

    #[test]
    fn translation_examples() {
        let c = ConfigSpec::constant(vec![1.0, 0.0], true);
        let t = translate_config(&c, &[1.0, 0.0]).unwrap();
        assert_eq!(t.eval_angle(0.7), vec![0.0, 0.0]);

        let s = double_angle();
        let zero = translate_config(&s, &[0.0, 0.0]).unwrap();
        let back = translate_config(&translate_config(&s, &[3.0, -2.0]).unwrap(), &[-3.0, 2.0]).unwrap();
        for i in 0..50 {
            let th = i as f64 * 0.13;
            assert_eq!(zero.eval_angle(th), s.eval_angle(th));
            assert!(dist(&back.eval_angle(th), &s.eval_angle(th)) <= 1e-12);
        }
        assert!(translate_config(&s, &[1.0]).is_err());
    }

    #[test]
    fn json_format_has_kind_and_dim() {
        let json = serde_json::to_value(double_angle()).unwrap();
        assert_eq!(json["kind"], "TrigPolynomial");
        assert_eq!(json["dim"], 2);
        assert_eq!(json["unoriented"], true);
        let back: ConfigSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, double_angle());

        let t = translate_config(&double_angle(), &[1.0, 2.0]).unwrap();
        let back: ConfigSpec = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn canonical_representative() {
        let d = UnorientedDirection::from_vector(&[0.0, -1.0, 1.0]).unwrap();
        let v = d.unit_vector();
        assert!(v[1] > 0.0 && v[2] < 0.0);
        assert!((norm(&v) - 1.0).abs() < UNIT_NORM_TOL);
        assert_eq!(UnorientedDirection::from_angle(PI + 0.25), UnorientedDirection::from_angle(0.25));
    }

    #[test]
    fn polynomial_identity_and_even_detection() {
        let id = ConfigSpec::identity(3);
        assert_eq!(id.eval_vec(&[0.0, 0.6, 0.8]), vec![0.0, 0.6, 0.8]);
        assert!(!id.is_structurally_even());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let even = random::polynomial(&mut rng, 4, 2, 1.0, true);
        assert!(even.is_structurally_even());
        assert!(validate_spec(&even).passed);
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(v in prop::collection::vec(-5.0f64..5.0, 3..6)) {
            prop_assume!(norm(&v) > 1e-6);
            let once = canonicalize(&v).unwrap();
            let twice = canonicalize(&once).unwrap();
            prop_assert!(dist(&once, &twice) < 1e-15);
            prop_assert!((norm(&once) - 1.0).abs() < UNIT_NORM_TOL);
        }

        #[test]
        fn even_trig_specs_are_antipodally_even(seed in 0u64..1000, theta in 0.0f64..TAU) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = random::trig(&mut rng, 16, 2.0, true);
            let a = spec.eval_angle(theta);
            let b = spec.eval_angle(theta + PI);
            prop_assert!(dist(&a, &b) <= EVENNESS_TOL);
        }

        #[test]
        fn translation_is_equivariant(
            seed in 0u64..1000,
            theta in 0.0f64..TAU,
            x in prop::array::uniform2(-10.0f64..10.0),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = random::trig(&mut rng, 8, 2.0, true);
            let t = translate_config(&spec, &x).unwrap();
            let a = t.eval_angle(theta);
            let b = spec.eval_angle(theta);
            let scale = 1.0 + norm(&b) + norm(&x);
            prop_assert!(dist(&[a[0] + x[0], a[1] + x[1]], &b) <= 1e-12 * scale);
        }
    }

    #[test]
    fn resampled_grid_tracks_the_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let spec = random::trig(&mut rng, 2, 1.0, true);
            let grid = spec.resample(4096).unwrap();
            assert!(validate_spec(&grid).passed);
            for _ in 0..200 {
                let th = rng.random_range(0.0..TAU);
                assert!(dist(&grid.eval_angle(th), &spec.eval_angle(th)) <= 1e-6);
            }
        }
    }
}
