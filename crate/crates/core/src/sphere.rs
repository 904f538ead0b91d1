//! Sphere geometry shared by the zero finders, degree computation and the
//! homogeneous-space tools.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

pub type Vec3 = [f64; 3];

pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub fn normalize3(a: Vec3) -> Vec3 {
    let n = norm3(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

pub fn to3(v: &[f64]) -> Vec3 {
    [v[0], v[1], v[2]]
}

/// Spherical distance between unit vectors.
pub fn arc(a: Vec3, b: Vec3) -> f64 {
    norm3(cross3(a, b)).atan2(dot3(a, b))
}

/// Great-circle interpolation between unit vectors `a` and `b`.
pub fn slerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    let p = [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ];
    // normalized chord interpolation, re-parameterized to constant speed
    let omega = arc(a, b);
    if omega < 1e-12 {
        return normalize3(p);
    }
    let s = omega.sin();
    let wa = ((1.0 - t) * omega).sin() / s;
    let wb = (t * omega).sin() / s;
    normalize3([wa * a[0] + wb * b[0], wa * a[1] + wb * b[1], wa * a[2] + wb * b[2]])
}

/// `count` nearly uniform points on `S^2`.
pub fn fibonacci_sphere(count: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Rotation carrying the unit vector `from` to the unit vector `to` in the
/// plane they span, applied to `v`. Written as the product of two
/// reflections, valid in any dimension whenever `from ≠ -to`.
pub fn transport(from: &[f64], to: &[f64], v: &[f64], out: &mut [f64]) {
    let c: f64 = from.iter().zip(to).map(|(a, b)| a * b).sum();
    let sv: f64 = from.iter().zip(to).zip(v).map(|((a, b), x)| (a + b) * x).sum();
    let fv: f64 = from.iter().zip(v).map(|(a, x)| a * x).sum();
    let k = sv / (1.0 + c);
    for i in 0..v.len() {
        out[i] = v[i] - k * (from[i] + to[i]) + 2.0 * fv * to[i];
    }
}

pub fn transport3(from: Vec3, to: Vec3, v: Vec3) -> Vec3 {
    let mut out = [0.0; 3];
    transport(&from, &to, &v, &mut out);
    out
}

/// Orthonormal basis of the tangent space `x^⊥` (columns 2..n of the
/// Householder reflection sending `x` to `±e_1`).
pub fn tangent_basis(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let s = if x[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = x.to_vec();
    w[0] += s;
    let ww: f64 = w.iter().map(|a| a * a).sum();
    (1..n)
        .map(|j| (0..n).map(|i| (if i == j { 1.0 } else { 0.0 }) - 2.0 * w[i] * w[j] / ww).collect())
        .collect()
}

/// Triangulated unit sphere from a subdivided icosahedron. Faces are
/// counter-clockwise seen from outside.
#[derive(Debug, Clone)]
pub struct Icosphere {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl Icosphere {
    pub fn new(depth: u32) -> Self {
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let raw = [
            [-1.0, phi, 0.0],
            [1.0, phi, 0.0],
            [-1.0, -phi, 0.0],
            [1.0, -phi, 0.0],
            [0.0, -1.0, phi],
            [0.0, 1.0, phi],
            [0.0, -1.0, -phi],
            [0.0, 1.0, -phi],
            [phi, 0.0, -1.0],
            [phi, 0.0, 1.0],
            [-phi, 0.0, -1.0],
            [-phi, 0.0, 1.0],
        ];
        let mut vertices: Vec<Vec3> = raw.iter().map(|v| normalize3(*v)).collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..depth {
            let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
            let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
                let key = (a.min(b), a.max(b));
                *mid.entry(key).or_insert_with(|| {
                    let (p, q) = (vertices[a], vertices[b]);
                    vertices.push(normalize3([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                    vertices.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        for f in faces.iter_mut() {
            let [a, b, c] = f.map(|i| vertices[i]);
            let n = cross3(
                [b[0] - a[0], b[1] - a[1], b[2] - a[2]],
                [c[0] - a[0], c[1] - a[1], c[2] - a[2]],
            );
            if dot3(n, [a[0] + b[0] + c[0], a[1] + b[1] + c[1], a[2] + b[2] + c[2]]) < 0.0 {
                f.swap(1, 2);
            }
        }
        Icosphere { vertices, faces }
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        self.faces[f].map(|i| self.vertices[i])
    }
}

/// Signed solid angle of the spherical triangle `(a, b, c)` of unit vectors.
pub fn solid_angle(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let num = dot3(a, cross3(b, c));
    let den = 1.0 + dot3(a, b) + dot3(b, c) + dot3(c, a);
    2.0 * num.atan2(den)
}

/// Outcome of a local polish on the sphere.
#[derive(Debug, Clone)]
pub struct Polish {
    pub point: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Levenberg–Marquardt search for a zero of a tangent field on `S^{n-1}`.
///
/// `field(y, out)` writes a vector orthogonal to `y`. The step is taken in
/// the tangent chart at the current point; field values are transported
/// back to that chart so the system is square.
pub fn polish_zero<F>(field: &F, start: &[f64], tol: f64, max_iter: usize) -> Polish
where
    F: Fn(&[f64], &mut [f64]) + ?Sized,
{
    let n = start.len();
    let m = n - 1;
    let mut x = start.to_vec();
    let mut fx = vec![0.0; n];
    field(&x, &mut fx);
    let mut best = Polish { point: x.clone(), residual: l2(&fx), iterations: 0 };
    let mut lambda = 1e-6;
    let mut extra = 0;
    let h = 1e-6;

    let mut tmp = vec![0.0; n];
    let mut y = vec![0.0; n];
    for iter in 1..=max_iter {
        let basis = tangent_basis(&x);
        let chart = |a: &[f64], y: &mut [f64], tmp: &mut [f64]| -> DVector<f64> {
            for i in 0..n {
                y[i] = x[i] + (0..m).map(|j| a[j] * basis[j][i]).sum::<f64>();
            }
            let ny = l2(y);
            y.iter_mut().for_each(|v| *v /= ny);
            let mut f = vec![0.0; n];
            field(y, &mut f);
            transport(y, &x, &f, tmp);
            DVector::from_iterator(m, basis.iter().map(|b| b.iter().zip(tmp.iter()).map(|(p, q)| p * q).sum()))
        };
        let zero = vec![0.0; m];
        let g0 = chart(&zero, &mut y, &mut tmp);
        let mut jac = DMatrix::zeros(m, m);
        let mut a = vec![0.0; m];
        for j in 0..m {
            a[j] = h;
            let gp = chart(&a, &mut y, &mut tmp);
            a[j] = -h;
            let gm = chart(&a, &mut y, &mut tmp);
            a[j] = 0.0;
            jac.set_column(j, &((gp - gm) / (2.0 * h)));
        }
        let jtj = jac.transpose() * &jac;
        let jtg = jac.transpose() * &g0;
        let g0n = g0.norm();
        let mut accepted = false;
        for _ in 0..12 {
            let mut lhs = jtj.clone();
            for i in 0..m {
                lhs[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
            }
            let Some(step) = lhs.lu().solve(&(-&jtg)) else {
                lambda *= 10.0;
                continue;
            };
            let mut step: Vec<f64> = step.iter().copied().collect();
            let len = l2(&step);
            if len > 0.5 {
                step.iter_mut().for_each(|s| *s *= 0.5 / len);
            }
            let g1 = chart(&step, &mut y, &mut tmp);
            if g1.norm() < g0n {
                x.copy_from_slice(&y);
                lambda = (lambda / 4.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 8.0;
        }
        field(&x, &mut fx);
        let r = l2(&fx);
        if r < best.residual {
            best = Polish { point: x.clone(), residual: r, iterations: iter };
        }
        if !accepted {
            break;
        }
        if best.residual <= tol {
            // a couple of extra steps buy margin below the tolerance
            extra += 1;
            if extra > 2 || best.residual == 0.0 {
                break;
            }
        }
    }
    best
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
