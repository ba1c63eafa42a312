//! Smooth closed boundary curves: built-in analytic shapes plus periodic
//! cubic splines, all exposed through an arc-length interface with exact
//! tangents, inner normals, and signed curvature (positive on convex
//! domains, counterclockwise orientation).

use crate::numerics::{solve_cyclic_tridiagonal, Point2};
use crate::{Error, Result};

/// Number of native-parameter knots in the arc-length table.
const ARCLEN_KNOTS: usize = 4096;
/// Dense polyline size used to seed closest-point queries.
const POLYLINE_SAMPLES: usize = 4096;
/// Gauss–Legendre 5-point nodes/weights on [0, 1].
const GAUSS5: [(f64, f64); 5] = [
    (0.046910077030668, 0.118463442528095),
    (0.230765344947158, 0.239314335249683),
    (0.5, 0.284444444444444),
    (0.769234655052842, 0.239314335249683),
    (0.953089922969332, 0.118463442528095),
];

#[derive(Debug, Clone)]
pub enum CurveKind {
    Disk { center: Point2, radius: f64 },
    Ellipse { center: Point2, semi_x: f64, semi_y: f64 },
    /// Polar flower ρ(θ) = base·(1 + amp·cos(lobes·θ)) about `center`.
    Star { center: Point2, base: f64, amp: f64, lobes: u32 },
    Spline(PeriodicSpline),
}

/// Closed boundary curve with an arc-length parameterisation.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    kind: CurveKind,
    perimeter: f64,
    /// cumulative arc length at native-parameter knots t_k = k/N
    knot_s: Vec<f64>,
    /// dense polyline (native-uniform) with matching arc-length values
    poly: Vec<Point2>,
    poly_s: Vec<f64>,
    max_abs_curvature: f64,
}

impl BoundaryCurve {
    pub fn disk(center: Point2, radius: f64) -> Result<BoundaryCurve> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::config(format!("disk radius must be positive, got {radius}")));
        }
        Self::build(CurveKind::Disk { center, radius })
    }

    pub fn ellipse(center: Point2, semi_x: f64, semi_y: f64) -> Result<BoundaryCurve> {
        if !(semi_x > 0.0 && semi_y > 0.0) {
            return Err(Error::config(format!(
                "ellipse semi-axes must be positive, got ({semi_x}, {semi_y})"
            )));
        }
        Self::build(CurveKind::Ellipse { center, semi_x, semi_y })
    }

    pub fn star(center: Point2, base: f64, amp: f64, lobes: u32) -> Result<BoundaryCurve> {
        if !(base > 0.0) || !(0.0..1.0).contains(&amp) || lobes == 0 {
            return Err(Error::config(format!(
                "star requires base > 0, 0 ≤ amp < 1, lobes ≥ 1; got ({base}, {amp}, {lobes})"
            )));
        }
        Self::build(CurveKind::Star { center, base, amp, lobes })
    }

    pub fn spline(points: &[Point2]) -> Result<BoundaryCurve> {
        if points.len() < 4 {
            return Err(Error::config(format!(
                "spline boundary needs at least 4 points, got {}",
                points.len()
            )));
        }
        // enforce counterclockwise orientation (shoelace)
        let mut pts = points.to_vec();
        let area2: f64 = pts
            .iter()
            .zip(pts.iter().cycle().skip(1))
            .map(|(p, q)| p.cross(*q))
            .take(pts.len())
            .sum();
        if area2 < 0.0 {
            pts.reverse();
        }
        Self::build(CurveKind::Spline(PeriodicSpline::interpolate(&pts)?))
    }

    fn build(kind: CurveKind) -> Result<BoundaryCurve> {
        let mut curve = BoundaryCurve {
            kind,
            perimeter: 0.0,
            knot_s: Vec::new(),
            poly: Vec::new(),
            poly_s: Vec::new(),
            max_abs_curvature: 0.0,
        };
        // arc-length table over native knots
        let n = ARCLEN_KNOTS;
        let mut s = vec![0.0; n + 1];
        for k in 0..n {
            let t0 = k as f64 / n as f64;
            let dt = 1.0 / n as f64;
            let mut seg = 0.0;
            for (node, w) in GAUSS5 {
                seg += w * curve.dpoint_t(t0 + node * dt).norm();
            }
            s[k + 1] = s[k] + seg * dt;
        }
        if !(s[n] > 0.0) || !s[n].is_finite() {
            return Err(Error::config("degenerate boundary parameterisation"));
        }
        curve.perimeter = s[n];
        curve.knot_s = s;
        // dense polyline + curvature scan
        let m = POLYLINE_SAMPLES;
        let mut max_k: f64 = 0.0;
        let mut min_speed = f64::INFINITY;
        for i in 0..m {
            let t = i as f64 / m as f64;
            curve.poly.push(curve.point_t(t));
            curve.poly_s.push(curve.s_of_t(t));
            max_k = max_k.max(curve.curvature_t(t).abs());
            min_speed = min_speed.min(curve.dpoint_t(t).norm());
        }
        if min_speed <= 1e-12 * curve.perimeter {
            return Err(Error::config("boundary parameterisation has a stationary point"));
        }
        curve.max_abs_curvature = max_k;
        Ok(curve)
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.max_abs_curvature
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    /// Wraps an arc-length parameter into [0, perimeter).
    pub fn wrap_s(&self, s: f64) -> f64 {
        let l = self.perimeter;
        let mut v = s % l;
        if v < 0.0 {
            v += l;
        }
        v
    }

    /// Shortest arc distance between two parameters.
    pub fn arc_distance(&self, s1: f64, s2: f64) -> f64 {
        let d = (self.wrap_s(s1) - self.wrap_s(s2)).abs();
        d.min(self.perimeter - d)
    }

    // ----- native-parameter evaluation (t ∈ [0,1)) -----

    fn point_t(&self, t: f64) -> Point2 {
        let th = 2.0 * std::f64::consts::PI * t;
        match &self.kind {
            CurveKind::Disk { center, radius } => {
                *center + Point2::new(th.cos(), th.sin()) * *radius
            }
            CurveKind::Ellipse { center, semi_x, semi_y } => {
                *center + Point2::new(semi_x * th.cos(), semi_y * th.sin())
            }
            CurveKind::Star { center, base, amp, lobes } => {
                let rho = base * (1.0 + amp * (*lobes as f64 * th).cos());
                *center + Point2::new(th.cos(), th.sin()) * rho
            }
            CurveKind::Spline(sp) => sp.eval(t),
        }
    }

    fn dpoint_t(&self, t: f64) -> Point2 {
        let tau = 2.0 * std::f64::consts::PI;
        let th = tau * t;
        match &self.kind {
            CurveKind::Disk { radius, .. } => {
                Point2::new(-th.sin(), th.cos()) * (*radius * tau)
            }
            CurveKind::Ellipse { semi_x, semi_y, .. } => {
                Point2::new(-semi_x * th.sin(), semi_y * th.cos()) * tau
            }
            CurveKind::Star { base, amp, lobes, .. } => {
                let l = *lobes as f64;
                let rho = base * (1.0 + amp * (l * th).cos());
                let drho = -base * amp * l * (l * th).sin();
                let er = Point2::new(th.cos(), th.sin());
                let et = Point2::new(-th.sin(), th.cos());
                (er * drho + et * rho) * tau
            }
            CurveKind::Spline(sp) => sp.deriv(t),
        }
    }

    fn ddpoint_t(&self, t: f64) -> Point2 {
        let tau = 2.0 * std::f64::consts::PI;
        let th = tau * t;
        match &self.kind {
            CurveKind::Disk { radius, .. } => {
                Point2::new(-th.cos(), -th.sin()) * (*radius * tau * tau)
            }
            CurveKind::Ellipse { semi_x, semi_y, .. } => {
                Point2::new(-semi_x * th.cos(), -semi_y * th.sin()) * (tau * tau)
            }
            CurveKind::Star { base, amp, lobes, .. } => {
                let l = *lobes as f64;
                let rho = base * (1.0 + amp * (l * th).cos());
                let drho = -base * amp * l * (l * th).sin();
                let ddrho = -base * amp * l * l * (l * th).cos();
                let er = Point2::new(th.cos(), th.sin());
                let et = Point2::new(-th.sin(), th.cos());
                (er * (ddrho - rho) + et * (2.0 * drho)) * (tau * tau)
            }
            CurveKind::Spline(sp) => sp.second_deriv(t),
        }
    }

    fn curvature_t(&self, t: f64) -> f64 {
        let d1 = self.dpoint_t(t);
        let d2 = self.ddpoint_t(t);
        d1.cross(d2) / d1.norm().powi(3)
    }

    /// Arc length accumulated up to native parameter t.
    fn s_of_t(&self, t: f64) -> f64 {
        let n = ARCLEN_KNOTS;
        let tw = t - t.floor();
        let k = ((tw * n as f64) as usize).min(n - 1);
        let t0 = k as f64 / n as f64;
        let mut seg = 0.0;
        let dt = tw - t0;
        if dt > 0.0 {
            for (node, w) in GAUSS5 {
                seg += w * self.dpoint_t(t0 + node * dt).norm();
            }
            seg *= dt;
        }
        self.knot_s[k] + seg + t.floor() * self.perimeter
    }

    /// Native parameter at arc length s (Newton-refined table inversion).
    fn t_of_s(&self, s: f64) -> f64 {
        let n = ARCLEN_KNOTS;
        let sw = self.wrap_s(s);
        let k = self.knot_s.partition_point(|v| *v <= sw).saturating_sub(1).min(n - 1);
        let frac = (sw - self.knot_s[k]) / (self.knot_s[k + 1] - self.knot_s[k]);
        let mut t = (k as f64 + frac) / n as f64;
        for _ in 0..3 {
            let err = self.s_of_t(t) - sw;
            let speed = self.dpoint_t(t).norm();
            t -= err / speed;
        }
        t - t.floor()
    }

    // ----- arc-length interface -----

    pub fn point(&self, s: f64) -> Point2 {
        self.point_t(self.t_of_s(s))
    }

    /// Unit tangent in the direction of increasing arc length.
    pub fn unit_tangent(&self, s: f64) -> Point2 {
        let d = self.dpoint_t(self.t_of_s(s));
        d / d.norm()
    }

    /// Inward unit normal (counterclockwise rotation of the tangent).
    pub fn inner_normal(&self, s: f64) -> Point2 {
        self.unit_tangent(s).perp()
    }

    /// Signed curvature at arc length s (positive when the domain is convex there).
    pub fn curvature(&self, s: f64) -> f64 {
        self.curvature_t(self.t_of_s(s))
    }

    /// Closest boundary point to `p`: returns (arc length, point, distance).
    pub fn closest_point(&self, p: Point2) -> (f64, Point2, f64) {
        // polyline seed
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, q) in self.poly.iter().enumerate() {
            let d = (*q - p).norm_sq();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        let m = POLYLINE_SAMPLES;
        let mut t = best as f64 / m as f64;
        // Newton on f(t) = (c(t) − p)·c'(t), fallback-guarded
        for _ in 0..30 {
            let c = self.point_t(t);
            let d1 = self.dpoint_t(t);
            let d2 = self.ddpoint_t(t);
            let f = (c - p).dot(d1);
            let fp = d1.norm_sq() + (c - p).dot(d2);
            if fp.abs() < 1e-300 {
                break;
            }
            let step = f / fp;
            let max_step = 1.5 / m as f64;
            let step = step.clamp(-max_step, max_step);
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let t = t - t.floor();
        let q = self.point_t(t);
        (self.s_of_t(t), q, (q - p).norm())
    }

    /// Analytic interior test (exact for built-ins, normal-sign for splines).
    pub fn contains(&self, p: Point2) -> bool {
        match &self.kind {
            CurveKind::Disk { center, radius } => (p - *center).norm() < *radius,
            CurveKind::Ellipse { center, semi_x, semi_y } => {
                let d = p - *center;
                (d.x / semi_x).powi(2) + (d.y / semi_y).powi(2) < 1.0
            }
            CurveKind::Star { center, base, amp, lobes } => {
                let d = p - *center;
                let r = d.norm();
                if r == 0.0 {
                    return true;
                }
                let th = d.y.atan2(d.x);
                r < base * (1.0 + amp * (*lobes as f64 * th).cos())
            }
            CurveKind::Spline(_) => {
                let (s, foot, _) = self.closest_point(p);
                (p - foot).dot(self.inner_normal(s)) > 0.0
            }
        }
    }

    /// Gauss–Bonnet check value ∮ κ ds (must equal 2π for a simple closed curve).
    pub fn total_curvature(&self) -> f64 {
        let n = 2048;
        let mut total = 0.0;
        for k in 0..n {
            let t0 = k as f64 / n as f64;
            let dt = 1.0 / n as f64;
            for (node, w) in GAUSS5 {
                let t = t0 + node * dt;
                total += w * self.curvature_t(t) * self.dpoint_t(t).norm() * dt;
            }
        }
        total
    }
}

/// Periodic cubic spline through points at uniform native parameters.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    pts: Vec<Point2>,
    /// second derivatives at knots, per coordinate
    m2: Vec<Point2>,
}

impl PeriodicSpline {
    fn interpolate(pts: &[Point2]) -> Result<PeriodicSpline> {
        let n = pts.len();
        let h = 1.0 / n as f64;
        // natural periodic spline: M_{k-1} + 4M_k + M_{k+1} = 6(p_{k-1} - 2p_k + p_{k+1})/h²
        let lower = vec![1.0; n];
        let diag = vec![4.0; n];
        let upper = vec![1.0; n];
        let mut rhs_x = vec![0.0; n];
        let mut rhs_y = vec![0.0; n];
        for k in 0..n {
            let prev = pts[(k + n - 1) % n];
            let next = pts[(k + 1) % n];
            rhs_x[k] = 6.0 * (prev.x - 2.0 * pts[k].x + next.x) / (h * h);
            rhs_y[k] = 6.0 * (prev.y - 2.0 * pts[k].y + next.y) / (h * h);
        }
        let mx = solve_cyclic_tridiagonal(&lower, &diag, &upper, &rhs_x)?;
        let my = solve_cyclic_tridiagonal(&lower, &diag, &upper, &rhs_y)?;
        Ok(PeriodicSpline {
            pts: pts.to_vec(),
            m2: mx.into_iter().zip(my).map(|(x, y)| Point2::new(x, y)).collect(),
        })
    }

    fn segment(&self, t: f64) -> (usize, usize, f64, f64) {
        let n = self.pts.len();
        let tw = t - t.floor();
        let scaled = tw * n as f64;
        let k = (scaled as usize).min(n - 1);
        let h = 1.0 / n as f64;
        let local = scaled - k as f64; // in [0,1)
        (k, (k + 1) % n, local, h)
    }

    fn eval(&self, t: f64) -> Point2 {
        let (k, k1, u, h) = self.segment(t);
        let (a, b) = (1.0 - u, u);
        self.pts[k] * a
            + self.pts[k1] * b
            + (self.m2[k] * (a * a * a - a) + self.m2[k1] * (b * b * b - b)) * (h * h / 6.0)
    }

    fn deriv(&self, t: f64) -> Point2 {
        let (k, k1, u, h) = self.segment(t);
        let (a, b) = (1.0 - u, u);
        ((self.pts[k1] - self.pts[k]) / h
            + (self.m2[k1] * (3.0 * b * b - 1.0) - self.m2[k] * (3.0 * a * a - 1.0)) * (h / 6.0))
            * 1.0
    }

    fn second_deriv(&self, t: f64) -> Point2 {
        let (k, k1, u, _h) = self.segment(t);
        self.m2[k] * (1.0 - u) + self.m2[k1] * u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn disk_arclength_and_curvature_are_exact() {
        let c = BoundaryCurve::disk(Point2::new(1.0, -2.0), 1.5).unwrap();
        assert_relative_eq!(c.perimeter(), 2.0 * PI * 1.5, epsilon = 1e-10);
        for s in [0.0, 1.0, 4.0] {
            assert_relative_eq!(c.curvature(s), 1.0 / 1.5, epsilon = 1e-10);
            let p = c.point(s);
            assert_relative_eq!((p - Point2::new(1.0, -2.0)).norm(), 1.5, epsilon = 1e-12);
            // inner normal points toward the center
            let nu = c.inner_normal(s);
            assert!((p + nu * 1.5 - Point2::new(1.0, -2.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn ellipse_vertex_curvatures_match_closed_form() {
        // κ = a/b² at the end of the minor axis, b/a² at the end of the major axis
        let (a, b) = (2.0, 1.0);
        let c = BoundaryCurve::ellipse(Point2::ZERO, a, b).unwrap();
        assert_relative_eq!(c.curvature(0.0), a / (b * b), epsilon = 1e-9);
        let quarter = c.perimeter() / 4.0;
        assert_relative_eq!(c.curvature(quarter), b / (a * a), epsilon = 1e-6);
    }

    #[test]
    fn gauss_bonnet_holds_for_star() {
        let c = BoundaryCurve::star(Point2::ZERO, 1.0, 0.2, 3).unwrap();
        assert_relative_eq!(c.total_curvature(), 2.0 * PI, epsilon = 1e-8);
    }

    #[test]
    fn closest_point_recovers_radial_projection() {
        let c = BoundaryCurve::disk(Point2::ZERO, 1.0).unwrap();
        let p = Point2::new(0.3, 0.4); // |p| = 0.5
        let (_, foot, dist) = c.closest_point(p);
        assert_relative_eq!(dist, 0.5, epsilon = 1e-10);
        assert_relative_eq!(foot.x, 0.6, epsilon = 1e-10);
        assert_relative_eq!(foot.y, 0.8, epsilon = 1e-10);
    }

    #[test]
    fn spline_through_circle_samples_approximates_circle() {
        let n = 64;
        let pts: Vec<Point2> = (0..n)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / n as f64;
                Point2::new(th.cos(), th.sin())
            })
            .collect();
        let c = BoundaryCurve::spline(&pts).unwrap();
        assert_relative_eq!(c.perimeter(), 2.0 * PI, epsilon = 1e-4);
        assert_relative_eq!(c.total_curvature(), 2.0 * PI, epsilon = 1e-6);
        assert!(c.contains(Point2::new(0.5, 0.0)));
        assert!(!c.contains(Point2::new(1.5, 0.0)));
    }

    #[test]
    fn spline_orientation_is_normalised() {
        // clockwise input gets reversed to counterclockwise (positive total curvature)
        let n = 32;
        let pts: Vec<Point2> = (0..n)
            .map(|k| {
                let th = -2.0 * PI * k as f64 / n as f64;
                Point2::new(2.0 + th.cos(), th.sin())
            })
            .collect();
        let c = BoundaryCurve::spline(&pts).unwrap();
        assert!(c.total_curvature() > 0.0);
    }
}
