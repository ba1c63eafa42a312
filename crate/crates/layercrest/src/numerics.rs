//! Shared small-scale numerics: planar points/vectors, scalar quadrature,
//! tridiagonal solves, 1-D minimisation, least squares, smooth cutoffs.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::{Error, Result};

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    #[inline]
    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Counterclockwise rotation by 90 degrees.
    #[inline]
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    /// Unit vector in the same direction; `None` for (numerically) zero input.
    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        if n < 1e-300 {
            None
        } else {
            Some(self / n)
        }
    }

    /// 2-D cross product (z-component of the 3-D cross product).
    #[inline]
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn div(self, s: f64) -> Point2 {
        Point2::new(self.x / s, self.y / s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Quintic smooth step: 0 for t ≤ 0, 1 for t ≥ 1, C² across the junctions.
#[inline]
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// Smooth radial cutoff: 1 on [0, r0], 0 on [r0 + width, ∞), quintic in between.
#[inline]
pub fn radial_cutoff(r: f64, r0: f64, width: f64) -> f64 {
    1.0 - smooth_step((r - r0) / width)
}

/// Solves a tridiagonal system in place (Thomas algorithm).
///
/// `lower[i]` multiplies x[i-1] in row i (lower[0] unused), `diag[i]` x[i],
/// `upper[i]` x[i+1] (upper[n-1] unused).
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut x = vec![0.0; n];
    if diag[0] == 0.0 {
        return Err(Error::Solver { context: "tridiagonal pivot is zero".into() });
    }
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        if m.abs() < 1e-300 {
            return Err(Error::Solver { context: format!("tridiagonal pivot vanished at row {i}") });
        }
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

/// Solves a cyclic tridiagonal system (periodic splines) by the
/// Sherman–Morrison correction of the Thomas algorithm.
pub fn solve_cyclic_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(n >= 3);
    // corner terms: row 0 couples to x[n-1] via lower[0]; row n-1 to x[0] via upper[n-1]
    let alpha = lower[0];
    let beta = upper[n - 1];
    let gamma = -diag[0];
    let mut dmod = diag.to_vec();
    dmod[0] = diag[0] - gamma;
    dmod[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let mut l = lower.to_vec();
    let mut u = upper.to_vec();
    l[0] = 0.0;
    u[n - 1] = 0.0;
    let x = solve_tridiagonal(&l, &dmod, &u, rhs)?;
    let mut e = vec![0.0; n];
    e[0] = gamma;
    e[n - 1] = beta;
    let z = solve_tridiagonal(&l, &dmod, &u, &e)?;
    let num = x[0] + alpha * x[n - 1] / gamma;
    let den = 1.0 + z[0] + alpha * z[n - 1] / gamma;
    if den.abs() < 1e-300 {
        return Err(Error::Solver { context: "cyclic tridiagonal correction is singular".into() });
    }
    let factor = num / den;
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect())
}

/// Adaptive Simpson quadrature on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    // the argument list is the memoized evaluation state of one interval
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Golden-section minimisation of a unimodal function on [a, b].
pub fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Brent root-finding on a bracketing interval: inverse-quadratic and
/// secant steps guarded by bisection. Returns `None` when `[a, b]` does
/// not straddle a sign change.
pub fn brent_root(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut bisected = true;
    for _ in 0..200 {
        if fb == 0.0 || (b - a).abs() <= tol {
            return Some(b);
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let gate = (3.0 * a + b) / 4.0;
        let out_of_range = (s - gate) * (s - b) >= 0.0;
        let too_slow = if bisected {
            (s - b).abs() >= 0.5 * (b - c).abs() || (b - c).abs() < tol
        } else {
            (s - b).abs() >= 0.5 * (c - d).abs() || (c - d).abs() < tol
        };
        if out_of_range || too_slow {
            s = 0.5 * (a + b);
            bisected = true;
        } else {
            bisected = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Some(b)
}

/// Least-squares straight-line fit; returns (slope, intercept).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / n)
}

/// Surface measure of the unit k-sphere S^k ⊂ R^{k+1}
/// (ω₀ = 2, ω₁ = 2π, ω₂ = 4π, …) via the two-step recurrence ω_k = 2π·ω_{k-2}/(k-1).
pub fn unit_sphere_measure(k: u32) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI * unit_sphere_measure(k - 2) / (k as f64 - 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tridiagonal_reproduces_dense_solution() {
        // -u'' = 1 on (0,1), u(0)=u(1)=0 discretised: u(x) = x(1-x)/2
        let n = 101;
        let h = 1.0 / (n as f64 + 1.0);
        let lower = vec![-1.0; n];
        let diag = vec![2.0; n];
        let upper = vec![-1.0; n];
        let rhs = vec![h * h; n];
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for (i, xi) in x.iter().enumerate() {
            let t = (i as f64 + 1.0) * h;
            assert_relative_eq!(*xi, 0.5 * t * (1.0 - t), epsilon = 1e-12);
        }
    }

    #[test]
    fn cyclic_tridiagonal_matches_direct_elimination() {
        // small circulant system with known solution (checked by substitution)
        let lower = vec![1.0, 1.0, 1.0, 1.0];
        let diag = vec![4.0, 4.0, 4.0, 4.0];
        let upper = vec![1.0, 1.0, 1.0, 1.0];
        let rhs = vec![6.0, 6.0, 6.0, 6.0];
        let x = solve_cyclic_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for xi in &x {
            assert_relative_eq!(*xi, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn simpson_integrates_exponential() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert_relative_eq!(v, std::f64::consts::E - 1.0, epsilon = 1e-11);
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let m = golden_min(&|x: f64| (x - 0.3) * (x - 0.3), -1.0, 1.0, 1e-10);
        assert!((m - 0.3).abs() < 1e-8);
    }

    #[test]
    fn sphere_measures_match_closed_forms() {
        assert_relative_eq!(unit_sphere_measure(1), 2.0 * std::f64::consts::PI);
        assert_relative_eq!(unit_sphere_measure(2), 4.0 * std::f64::consts::PI);
        assert_relative_eq!(
            unit_sphere_measure(3),
            2.0 * std::f64::consts::PI * std::f64::consts::PI
        );
    }

    #[test]
    fn cutoff_is_flat_then_vanishes() {
        assert_eq!(radial_cutoff(9.0, 10.0, 1.0), 1.0);
        assert_eq!(radial_cutoff(11.5, 10.0, 1.0), 0.0);
        let mid = radial_cutoff(10.5, 10.0, 1.0);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn brent_pins_classic_roots() {
        let r = brent_root(&f64::cos, 1.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(r, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);

        let cubic = |x: f64| x * x * x - 2.0 * x - 5.0;
        let r = brent_root(&cubic, 2.0, 3.0, 1e-14).unwrap();
        assert_relative_eq!(r, 2.094_551_481_542_326_5, epsilon = 1e-12);

        // endpoint roots returned as-is
        assert_eq!(brent_root(&|x: f64| x, 0.0, 1.0, 1e-14), Some(0.0));
    }

    #[test]
    fn brent_rejects_brackets_without_a_sign_change() {
        assert!(brent_root(&|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
        assert!(brent_root(&|x: f64| x.exp(), 0.0, 5.0, 1e-12).is_none());
    }
}
