//! Planar domains: smooth closed boundary curves, anisotropy weights,
//! boundary collar geometry, graded meshes, and rotational lift bookkeeping.
//!
//! A [`Domain2D`] couples a [`BoundaryCurve`] with a strictly positive
//! [`Weight`] and precomputes the collar reach (the tubular neighbourhood of
//! the boundary in which closest-point projection and reflection are
//! well defined). Power-law weights additionally pin the domain into the
//! open positive quadrant so that rotational lifts are meaningful.

mod expr;

pub mod curve;
pub mod mesh;
pub mod weight;

pub use curve::{BoundaryCurve, CurveKind};
pub use mesh::{generate_mesh, Grading, Mesh, MeshParams};
pub use weight::Weight;

use crate::numerics::{unit_sphere_measure, Point2};
use crate::{Error, Result};

/// Collar reach as a fraction of the minimal curvature radius.
const REACH_FRACTION: f64 = 0.5;
/// Boundary samples used by the weight-positivity audit.
const BOUNDARY_AUDIT_SAMPLES: usize = 1024;
/// Interior audit grid resolution (per axis, over the bounding box).
const INTERIOR_AUDIT_GRID: usize = 48;

/// A bounded planar domain with smooth boundary and positive weight.
#[derive(Debug)]
pub struct Domain2D {
    curve: BoundaryCurve,
    weight: Weight,
    reach: f64,
    bbox: (Point2, Point2),
    diameter: f64,
}

/// Builds a domain, auditing that the weight is strictly positive on the
/// closure and that power-law weights see only the open positive quadrant.
pub fn build_domain(curve: BoundaryCurve, weight: Weight) -> Result<Domain2D> {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let perim = curve.perimeter();
    for k in 0..BOUNDARY_AUDIT_SAMPLES {
        let p = curve.point(perim * k as f64 / BOUNDARY_AUDIT_SAMPLES as f64);
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let diameter = (hi - lo).norm();

    if let Weight::Power { m1, mn } = &weight {
        if (*m1 > 1 && lo.x <= 0.0) || (*mn > 1 && lo.y <= 0.0) {
            return Err(Error::NonPositiveWeight {
                context: format!(
                    "power weight (exponents {m1}, {mn}) needs the domain inside the open \
                     positive quadrant, but its bounding box starts at ({:.6}, {:.6})",
                    lo.x, lo.y
                ),
            });
        }
    }

    let audit = |p: Point2, where_: &str| -> Result<()> {
        let a = weight.eval(p);
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::NonPositiveWeight {
                context: format!("weight = {a:.6e} at ({:.6}, {:.6}) ({where_})", p.x, p.y),
            });
        }
        Ok(())
    };
    for k in 0..BOUNDARY_AUDIT_SAMPLES {
        audit(curve.point(perim * k as f64 / BOUNDARY_AUDIT_SAMPLES as f64), "boundary sample")?;
    }
    for i in 0..INTERIOR_AUDIT_GRID {
        for j in 0..INTERIOR_AUDIT_GRID {
            let p = Point2::new(
                lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / INTERIOR_AUDIT_GRID as f64,
                lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / INTERIOR_AUDIT_GRID as f64,
            );
            if curve.contains(p) {
                audit(p, "interior sample")?;
            }
        }
    }

    let reach = REACH_FRACTION / curve.max_abs_curvature().max(1e-12);
    Ok(Domain2D { curve, weight, reach, bbox: (lo, hi), diameter })
}

impl Domain2D {
    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    /// Width of the boundary collar in which reflection is defined.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        self.bbox
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn is_inside(&self, p: Point2) -> bool {
        self.curve.contains(p)
    }

    /// Unsigned distance from `p` to the boundary curve.
    pub fn dist_to_boundary(&self, p: Point2) -> f64 {
        self.curve.closest_point(p).2
    }

    /// Closest boundary point to `p`: arc-length parameter, foot, distance.
    pub fn closest_boundary(&self, p: Point2) -> (f64, Point2, f64) {
        self.curve.closest_point(p)
    }

    /// Mirror image of `p` across the boundary (through the closest foot).
    ///
    /// Only defined inside the collar; beyond the reach the closest-point
    /// projection stops being single-valued and the request is refused.
    pub fn reflect_across_boundary(&self, p: Point2) -> Result<Point2> {
        let (_, foot, dist) = self.curve.closest_point(p);
        if dist > self.reach {
            return Err(Error::OutsideCollar {
                context: format!(
                    "distance {dist:.6} exceeds collar reach {:.6} at ({:.6}, {:.6})",
                    self.reach, p.x, p.y
                ),
            });
        }
        Ok(foot * 2.0 - p)
    }

    /// Poisson-type boundary kernel `n_out(x)·(x − ζ)/|x − ζ|²` with `x` the
    /// boundary point at arc length `s_x`. At the coincidence `x = ζ` the
    /// kernel continues to half the signed curvature; on a unit circle it is
    /// identically ½.
    pub fn boundary_kernel_g(&self, s_x: f64, zeta: Point2) -> f64 {
        let x = self.curve.point(s_x);
        let d2 = (x - zeta).norm_sq();
        if d2 < (1e-9 * self.diameter).powi(2) {
            0.5 * self.curve.curvature(s_x)
        } else {
            let n_out = -self.curve.inner_normal(s_x);
            n_out.dot(x - zeta) / d2
        }
    }
}

/// Rotational-lift exponents: the planar problem with weight
/// `x₁^{m₁−1}·x₂^{mₙ−1}` is the symmetric slice of a problem in
/// `m₁ + mₙ` dimensions. An exponent of 1 leaves that coordinate flat.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiftSpec {
    m1: u32,
    mn: u32,
}

impl LiftSpec {
    pub fn new(m1: u32, mn: u32) -> Result<LiftSpec> {
        if m1 < 1 || mn < 1 {
            return Err(Error::config(format!("lift exponents must be ≥ 1, got ({m1}, {mn})")));
        }
        Ok(LiftSpec { m1, mn })
    }

    pub fn exponents(&self) -> (u32, u32) {
        (self.m1, self.mn)
    }

    /// Dimension of the lifted problem.
    pub fn lifted_dimension(&self) -> u32 {
        self.m1 + self.mn
    }

    /// The planar weight whose symmetric slice this lift inverts.
    pub fn matching_weight(&self) -> Weight {
        if self.m1 == 1 && self.mn == 1 {
            Weight::constant(1.0).expect("unit weight is valid")
        } else {
            Weight::power(self.m1, self.mn).expect("integer exponents ≥ 1 are valid")
        }
    }

    /// Product of the sphere measures swept by the lifted coordinates.
    /// Integrals of lifted fields equal this factor times the weighted
    /// planar integral.
    pub fn measure_factor(&self) -> f64 {
        let mut f = 1.0;
        for m in [self.m1, self.mn] {
            if m >= 2 {
                f *= unit_sphere_measure(m - 1);
            }
        }
        f
    }

    /// Measure of the orbit through the planar point `zeta`:
    /// `Π ω_{mₖ−1}·ζₖ^{mₖ−1}` over the lifted coordinates. A planar point
    /// lifts to a torus of spheres carrying exactly this much area.
    pub fn orbit_measure(&self, zeta: Point2) -> f64 {
        let mut f = 1.0;
        for (m, z) in [(self.m1, zeta.x), (self.mn, zeta.y)] {
            if m >= 2 {
                f *= unit_sphere_measure(m - 1) * z.powi(m as i32 - 1);
            }
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_disk(weight: Weight) -> Domain2D {
        build_domain(BoundaryCurve::disk(Point2::ZERO, 1.0).unwrap(), weight).unwrap()
    }

    #[test]
    fn disk_reach_is_half_radius() {
        let d = unit_disk(Weight::constant(1.0).unwrap());
        assert_relative_eq!(d.reach(), 0.5, max_relative = 1e-9);
        assert_relative_eq!(d.diameter(), 2.0_f64.sqrt() * 2.0, max_relative = 1e-3);
    }

    #[test]
    fn power_weight_requires_positive_quadrant() {
        let off = BoundaryCurve::disk(Point2::new(2.0, 2.0), 1.0).unwrap();
        assert!(build_domain(off, Weight::power(2, 3).unwrap()).is_ok());

        let centered = BoundaryCurve::disk(Point2::ZERO, 1.0).unwrap();
        let err = build_domain(centered, Weight::power(2, 1).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NonPositiveWeight { .. }));
    }

    #[test]
    fn expression_weight_must_stay_positive() {
        let curve = BoundaryCurve::disk(Point2::ZERO, 1.0).unwrap();
        let w = Weight::from_expr("x1").unwrap(); // changes sign across the disk
        assert!(matches!(
            build_domain(curve, w),
            Err(Error::NonPositiveWeight { .. })
        ));
    }

    #[test]
    fn reflection_mirrors_through_the_foot() {
        let d = unit_disk(Weight::constant(1.0).unwrap());
        let r = d.reflect_across_boundary(Point2::new(0.9, 0.0)).unwrap();
        assert_relative_eq!(r.x, 1.1, epsilon = 1e-9);
        assert_relative_eq!(r.y, 0.0, epsilon = 1e-9);

        // outside the collar: closest-point projection is ambiguous near the center
        assert!(matches!(
            d.reflect_across_boundary(Point2::new(0.3, 0.0)),
            Err(Error::OutsideCollar { .. })
        ));
    }

    #[test]
    fn circle_kernel_is_one_half_everywhere() {
        let d = unit_disk(Weight::constant(1.0).unwrap());
        let perim = d.curve().perimeter();
        for (sx, szeta) in [(0.0, 1.0), (0.3, 4.0), (2.0, 2.0), (5.5, 0.2)] {
            let zeta = d.curve().point(szeta);
            assert_relative_eq!(d.boundary_kernel_g(sx, zeta), 0.5, epsilon = 1e-9);
            let _ = perim;
        }
        // coincidence limit goes through the curvature branch
        let zeta = d.curve().point(1.0);
        assert_relative_eq!(d.boundary_kernel_g(1.0, zeta), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn lift_measure_factors() {
        // (2,1): a circle's worth of measure for the first coordinate only
        let l = LiftSpec::new(2, 1).unwrap();
        assert_eq!(l.lifted_dimension(), 3);
        assert_relative_eq!(l.measure_factor(), 2.0 * std::f64::consts::PI, epsilon = 1e-12);
        assert_relative_eq!(
            l.orbit_measure(Point2::new(1.5, 7.0)),
            2.0 * std::f64::consts::PI * 1.5,
            epsilon = 1e-12
        );

        // (3,3): two 2-spheres, orbit scales like (ζ₁ζ₂)²
        let l = LiftSpec::new(3, 3).unwrap();
        let w = 4.0 * std::f64::consts::PI;
        assert_relative_eq!(l.measure_factor(), w * w, max_relative = 1e-12);
        assert_relative_eq!(
            l.orbit_measure(Point2::new(2.0, 3.0)),
            w * w * 4.0 * 9.0,
            max_relative = 1e-12
        );

        // flat lift changes nothing
        let l = LiftSpec::new(1, 1).unwrap();
        assert_eq!(l.measure_factor(), 1.0);
        assert!(l.matching_weight().is_isotropic());

        assert!(LiftSpec::new(0, 2).is_err());
    }

    #[test]
    fn lift_matching_weight_agrees_with_power_weight() {
        let l = LiftSpec::new(3, 2).unwrap();
        let w = l.matching_weight();
        let p = Point2::new(1.3, 0.7);
        assert_relative_eq!(w.eval(p), 1.3_f64.powi(2) * 0.7, max_relative = 1e-12);
    }
}
