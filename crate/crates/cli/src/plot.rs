//! Static SVG renderings.

use std::f64::consts::TAU;
use std::fmt::Write;

use kakeya_core::configs::ConfigSpec;
use kakeya_core::discrete_kakeya::FiniteGroup;
use kakeya_core::sphere::Vec3;

const SIZE: f64 = 640.0;
const LINES: usize = 180;

/// A square plotting window `[-extent, extent]²` mapped to pixels.
struct Canvas {
    extent: f64,
    body: String,
}

impl Canvas {
    fn new(extent: f64) -> Self {
        Canvas { extent: extent.max(1e-6), body: String::new() }
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        let s = SIZE / (2.0 * self.extent);
        ((p[0] + self.extent) * s, (self.extent - p[1]) * s)
    }

    fn line(&mut self, a: [f64; 2], b: [f64; 2], style: &str) {
        let (x1, y1) = self.px(a);
        let (x2, y2) = self.px(b);
        let _ = writeln!(self.body, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"#);
    }

    fn dot(&mut self, p: [f64; 2], r: f64, fill: &str) {
        let (x, y) = self.px(p);
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}"/>"#);
    }

    fn axes(&mut self) {
        let e = self.extent;
        self.line([-e, 0.0], [e, 0.0], r##"stroke="#bbb" stroke-width="0.5""##);
        self.line([0.0, -e], [0.0, e], r##"stroke="#bbb" stroke-width="0.5""##);
    }

    fn finish(self, title: &str) -> String {
        svg_doc(title, &self.body)
    }
}

fn svg_doc(title: &str, body: &str) -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}"><title>{}</title>
<rect width="100%" height="100%" fill="white"/>
{body}</svg>
"#,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Extent that shows the curve of translates and the marked points.
fn fit(spec: &ConfigSpec, marks: &[[f64; 2]]) -> f64 {
    let period = spec.angle_period();
    let mut m: f64 = 1.0;
    for k in 0..LINES {
        let p = spec.eval_angle(period * k as f64 / LINES as f64);
        m = m.max(p[0].abs()).max(p[1].abs());
    }
    for p in marks {
        m = m.max(p[0].abs()).max(p[1].abs());
    }
    1.25 * m
}

/// Lines (or centred segments of length `length`) of a planar
/// configuration, with an optional highlighted line and target.
pub fn planar_config(
    spec: &ConfigSpec,
    length: f64,
    highlight: Option<(f64, [f64; 2])>,
    target: Option<[f64; 2]>,
    title: &str,
) -> String {
    let marks: Vec<[f64; 2]> = target.into_iter().collect();
    let mut c = Canvas::new(fit(spec, &marks));
    c.axes();
    let half = if length.is_finite() { 0.5 * length } else { 4.0 * c.extent };
    let period = spec.angle_period();
    for k in 0..LINES {
        let th = period * k as f64 / LINES as f64;
        let p = spec.eval_angle(th);
        let e = [th.cos(), th.sin()];
        c.line(
            [p[0] - half * e[0], p[1] - half * e[1]],
            [p[0] + half * e[0], p[1] + half * e[1]],
            r##"stroke="#3465a4" stroke-opacity="0.35" stroke-width="0.8""##,
        );
    }
    if let Some((th, p)) = highlight {
        let e = [th.cos(), th.sin()];
        let h = 4.0 * c.extent;
        c.line([p[0] - h * e[0], p[1] - h * e[1]], [p[0] + h * e[0], p[1] + h * e[1]], r##"stroke="#cc0000" stroke-width="2""##);
        c.dot(p, 3.0, "#cc0000");
    }
    if let Some(t) = target {
        c.dot(t, 4.0, "black");
    }
    c.finish(title)
}

/// Membership verdicts of sampled targets over the configuration.
pub fn sample_points(spec: &ConfigSpec, points: &[([f64; 2], bool)], title: &str) -> String {
    let marks: Vec<[f64; 2]> = points.iter().map(|p| p.0).collect();
    let mut c = Canvas::new(fit(spec, &marks));
    c.axes();
    let half = 4.0 * c.extent;
    for k in 0..LINES {
        let th = TAU * k as f64 / LINES as f64;
        let p = spec.eval_angle(th);
        let e = [th.cos(), th.sin()];
        c.line(
            [p[0] - half * e[0], p[1] - half * e[1]],
            [p[0] + half * e[0], p[1] + half * e[1]],
            r##"stroke="#3465a4" stroke-opacity="0.2" stroke-width="0.6""##,
        );
    }
    for (p, covered) in points {
        c.dot(*p, 1.6, if *covered { "#4e9a06" } else { "#cc0000" });
    }
    c.finish(title)
}

/// Multiplication table shaded where the product lies in `set`; row and
/// column `g` show the left coset `gE` along the row.
pub fn cayley_heatmap(g: &FiniteGroup, set: &[usize], title: &str) -> String {
    let n = g.order;
    let cell = SIZE / n as f64;
    let mut member = vec![false; n];
    for &x in set {
        if x < n {
            member[x] = true;
        }
    }
    let mut body = String::new();
    for a in 0..n {
        for b in 0..n {
            let fill = if member[g.mul(a, b)] { "#204a87" } else { "#eeeeec" };
            let _ = writeln!(
                body,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="{fill}" stroke="white" stroke-width="0.3"/>"#,
                b as f64 * cell,
                a as f64 * cell
            );
        }
    }
    svg_doc(title, &body)
}

/// Orthographic view of curves on the sphere, seen from `(1, 1, 1)`; the
/// far hemisphere is dashed.
pub fn sphere_curves(curves: &[Vec<Vec3>], title: &str) -> String {
    let view = [1.0 / 3f64.sqrt(); 3];
    let right = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
    let up = [-1.0 / 6f64.sqrt(), -1.0 / 6f64.sqrt(), 2.0 / 6f64.sqrt()];
    let dot = |a: Vec3, b: Vec3| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let mut c = Canvas::new(1.2);
    let (cx, cy) = c.px([0.0, 0.0]);
    let r = SIZE / 2.4;
    let _ = writeln!(c.body, r##"<circle cx="{cx}" cy="{cy}" r="{r:.2}" fill="none" stroke="#888"/>"##);
    for curve in curves {
        for w in curve.windows(2) {
            let front = dot(w[0], view) >= 0.0 && dot(w[1], view) >= 0.0;
            let style = if front {
                r##"stroke="#cc0000" stroke-width="1.8""##
            } else {
                r##"stroke="#cc0000" stroke-width="1" stroke-dasharray="3,3" stroke-opacity="0.6""##
            };
            c.line([dot(w[0], right), dot(w[0], up)], [dot(w[1], right), dot(w[1], up)], style);
        }
        if let Some(&p) = curve.first() {
            c.dot([dot(p, right), dot(p, up)], 3.0, "black");
        }
    }
    c.finish(title)
}
