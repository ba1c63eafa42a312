//! Green function of the weighted Neumann operator and its regular part.
//!
//! The field `G(·, ζ)` solves `a·(Δ + γ·∇ − 1)G = −8π·a(ζ)·δ_ζ` with zero
//! Neumann data, `γ = ∇ln a`. Splitting `G = −c·ln|x−ζ| + H` (`c = 4` for
//! interior poles, `c = 8` for boundary poles, where only half of the
//! logarithm's point mass lands inside) leaves the regular part `H`
//! satisfying a smooth-data problem:
//!
//! `∫ a∇H·∇ψ + aHψ = ∫ a·(c·ln|x−ζ| − c·γ·(x−ζ)/|x−ζ|²)·ψ + c∮ a·g(x,ζ)·ψ ds`
//!
//! with `g(x,ζ) = n_out(x)·(x−ζ)/|x−ζ|²` the boundary kernel. The point
//! singularity is therefore never represented on the mesh; the price is a
//! weakly singular load, integrated by the dedicated quadrature.
//!
//! Anisotropy leaves `H` Lipschitz but not C¹ at the pole: the kink is the
//! universal radial kernel `R(z) = g(|z|)·z/|z|` with `g″ + g′/r −
//! (1 + 1/r²)g = 1/r`, decaying at infinity. Subtracting
//! `c·γ(ζ)·R(x − ζ)` restores one degree of smoothness.

use rayon::prelude::*;

use crate::domain::{Domain2D, Mesh};
use crate::fem::{
    assemble, assemble_boundary_load, assemble_load, assemble_load_singular, dot, point_coeff,
    solve_cg, CsrMatrix,
};
use crate::numerics::{solve_tridiagonal, Point2};
use crate::{Error, Result};

/// Poles closer to the boundary than this fraction of the domain diameter
/// are snapped onto it.
const BOUNDARY_SNAP: f64 = 1e-8;
/// Radius (relative to the diameter) inside which the singular load uses
/// subdivision quadrature.
const SINGULAR_NEAR_FRACTION: f64 = 0.1;
const CG_TOL: f64 = 1e-11;
const CG_MAX_ITER: usize = 50_000;

/// Where a Green pole sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoleKind {
    Interior,
    /// On the boundary, at this arc-length parameter.
    Boundary { s: f64 },
}

/// Shared assembly for all Green solves on one mesh.
pub struct GreenSolver<'a> {
    domain: &'a Domain2D,
    mesh: &'a Mesh,
    system: CsrMatrix,
}

impl<'a> GreenSolver<'a> {
    pub fn new(domain: &'a Domain2D, mesh: &'a Mesh) -> GreenSolver<'a> {
        let w = |p: Point2| domain.weight().eval(p);
        let system = assemble(mesh, point_coeff(w), point_coeff(w));
        GreenSolver { domain, mesh, system }
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn domain(&self) -> &Domain2D {
        self.domain
    }

    /// The assembled weighted operator `∫a∇φᵢ·∇φⱼ + aφᵢφⱼ`, shared by every
    /// solve against this mesh (Green poles, bubble projections, …).
    pub fn system(&self) -> &CsrMatrix {
        &self.system
    }

    /// Solves for the regular part of the Green function with pole `zeta`.
    ///
    /// Poles within a snap tolerance of the boundary are treated as boundary
    /// poles (`c = 8`) and moved onto the curve exactly; interior poles use
    /// `c = 4`; anything outside the domain is rejected.
    pub fn solve(&self, zeta: Point2) -> Result<GreenField<'a>> {
        let domain = self.domain;
        let (s_foot, foot, dist) = domain.closest_boundary(zeta);
        let (pole, kind) = if dist <= BOUNDARY_SNAP * domain.diameter() {
            (foot, PoleKind::Boundary { s: s_foot })
        } else if domain.is_inside(zeta) {
            (zeta, PoleKind::Interior)
        } else {
            return Err(Error::OutsideDomain {
                context: format!(
                    "Green pole ({:.6}, {:.6}) lies outside the domain by {dist:.3e}",
                    zeta.x, zeta.y
                ),
            });
        };
        let c = match kind {
            PoleKind::Interior => 4.0,
            PoleKind::Boundary { .. } => 8.0,
        };

        let weight = domain.weight();
        let near = SINGULAR_NEAR_FRACTION * domain.diameter();
        let mut rhs = assemble_load_singular(self.mesh, pole, near, |p| {
            let z = p - pole;
            let r2 = z.norm_sq().max(1e-300);
            let gamma = weight.gamma(p);
            weight.eval(p) * c * (0.5 * r2.ln() - gamma.dot(z) / r2)
        });
        let boundary = assemble_boundary_load(self.mesh, domain.curve(), |s, p| {
            weight.eval(p) * c * domain.boundary_kernel_g(s, pole)
        });
        for (r, b) in rhs.iter_mut().zip(&boundary) {
            *r += b;
        }

        let h_values = solve_cg(&self.system, &rhs, CG_TOL, CG_MAX_ITER)?;
        Ok(GreenField { domain, mesh: self.mesh, pole, kind, strength: c, h_values })
    }

    /// Solves several poles in parallel.
    pub fn solve_many(&self, poles: &[Point2]) -> Result<Vec<GreenField<'a>>> {
        poles.par_iter().map(|&z| self.solve(z)).collect()
    }
}

/// The Green function for one pole: singular log part plus FEM regular part.
pub struct GreenField<'a> {
    domain: &'a Domain2D,
    mesh: &'a Mesh,
    pole: Point2,
    kind: PoleKind,
    strength: f64,
    h_values: Vec<f64>,
}

impl GreenField<'_> {
    pub fn pole(&self) -> Point2 {
        self.pole
    }

    pub fn kind(&self) -> PoleKind {
        self.kind
    }

    /// Logarithm coefficient: 4 for interior poles, 8 for boundary poles.
    pub fn strength(&self) -> f64 {
        self.strength
    }

    /// Nodal values of the regular part.
    pub fn regular_nodal(&self) -> &[f64] {
        &self.h_values
    }

    /// Regular part `H(x, ζ)`.
    pub fn eval_h(&self, x: Point2) -> Option<f64> {
        self.mesh.interp(&self.h_values, x)
    }

    /// Full Green function `G(x, ζ) = −c·ln|x−ζ| + H(x, ζ)`.
    pub fn eval_g(&self, x: Point2) -> Option<f64> {
        let r = x.dist(self.pole);
        self.eval_h(x).map(|h| h - self.strength * r.ln())
    }

    /// Diagonal of the regular part, `H(ζ, ζ)`.
    pub fn h_at_pole(&self) -> f64 {
        self.mesh
            .interp(&self.h_values, self.pole)
            .expect("pole was validated to lie in the meshed domain")
    }

    /// Weighted total mass `(1/8π)·∫ a·G dx`, which the defining equation
    /// pins to `a(ζ)` exactly (test the constant field against the weak
    /// form). Deviations measure the combined FEM/quadrature error.
    pub fn weak_amplitude(&self) -> f64 {
        let weight = self.domain.weight();
        let near = SINGULAR_NEAR_FRACTION * self.domain.diameter();
        let log_part: f64 = assemble_load_singular(self.mesh, self.pole, near, |p| {
            -self.strength * weight.eval(p) * p.dist(self.pole).max(1e-300).ln()
        })
        .iter()
        .sum();
        let mass_load = assemble_load(self.mesh, point_coeff(|p| weight.eval(p)));
        (log_part + dot(&mass_load, &self.h_values)) / (8.0 * std::f64::consts::PI)
    }

    /// Smoothed regular part `H₁(x) = H(x) − c·γ(ζ)·R(x−ζ)`: subtracting
    /// the universal kink leaves a C¹ field at interior poles.
    pub fn eval_h_smooth(&self, kernel: &KernelR, x: Point2) -> Option<f64> {
        let gamma = self.domain.weight().gamma(self.pole);
        self.eval_h(x)
            .map(|h| h - self.strength * gamma.dot(kernel.eval_radial_vector(x - self.pole)))
    }
}

/// Inner cutoff of the radial kernel grid.
const KERNEL_R0: f64 = 1e-6;
/// Outer truncation, far past the exponential tail's relevance.
const KERNEL_RMAX: f64 = 40.0;
/// Grid points (geometric spacing).
const KERNEL_POINTS: usize = 6000;

/// The universal radial kernel: the decaying solution of
/// `g″ + g′/r − (1 + 1/r²)·g = 1/r`, with `g ~ ½·r·ln r` at the origin and
/// `g ~ −1/r` at infinity. `R(z) = g(|z|)·z/|z|` is the vector kernel
/// subtracted from Green regular parts to restore C¹ smoothness.
#[derive(Debug, Clone)]
pub struct KernelR {
    rs: Vec<f64>,
    gs: Vec<f64>,
    log_ratio: f64,
    /// Coefficient of the linear term in `g = ½·r·ln r + c₁·r + …` near 0.
    c1: f64,
}

impl KernelR {
    /// Solves the kernel boundary-value problem on a geometric grid.
    ///
    /// At the inner end the expansion `g = ½ r ln r + c₁ r` gives the exact
    /// closure `g(r₀) − r₀·g′(r₀) = −r₀/2`; at the outer end `g + r·g′ = 0`
    /// kills the algebraic tail (the exponential one is long dead there).
    pub fn build() -> Result<KernelR> {
        let n = KERNEL_POINTS;
        let ratio = (KERNEL_RMAX / KERNEL_R0).powf(1.0 / (n as f64 - 1.0));
        let rs: Vec<f64> = (0..n).map(|i| KERNEL_R0 * ratio.powi(i as i32)).collect();

        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];

        for i in 1..n - 1 {
            let (hm, hp) = (rs[i] - rs[i - 1], rs[i + 1] - rs[i]);
            let r = rs[i];
            // nonuniform central differences for g″ and g′
            let (d2m, d2c, d2p) =
                (2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp)));
            let (d1m, d1c, d1p) =
                (-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp)));
            lower[i] = d2m + d1m / r;
            diag[i] = d2c + d1c / r - (1.0 + 1.0 / (r * r));
            upper[i] = d2p + d1p / r;
            rhs[i] = 1.0 / r;
        }
        // inner closure from the origin expansion
        let h0 = rs[1] - rs[0];
        diag[0] = 1.0 + rs[0] / h0;
        upper[0] = -rs[0] / h0;
        rhs[0] = -rs[0] / 2.0;
        // outer closure of the −1/r tail
        let hn = rs[n - 1] - rs[n - 2];
        diag[n - 1] = 1.0 + rs[n - 1] / hn;
        lower[n - 1] = -rs[n - 1] / hn;
        rhs[n - 1] = 0.0;

        let gs = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        let c1 = (gs[0] - 0.5 * rs[0] * rs[0].ln()) / rs[0];
        Ok(KernelR { rs, gs, log_ratio: ratio.ln(), c1 })
    }

    /// Linear-term coefficient of the origin expansion.
    pub fn origin_slope(&self) -> f64 {
        self.c1
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r < KERNEL_R0 {
            return 0.5 * r * r.ln() + self.c1 * r;
        }
        if r >= KERNEL_RMAX {
            return -1.0 / r;
        }
        let pos = (r / KERNEL_R0).ln() / self.log_ratio;
        let i = (pos.floor() as usize).min(self.rs.len() - 2);
        let t = (r - self.rs[i]) / (self.rs[i + 1] - self.rs[i]);
        self.gs[i] * (1.0 - t) + self.gs[i + 1] * t
    }

    pub fn eval_deriv(&self, r: f64) -> f64 {
        if r < KERNEL_R0 {
            return 0.5 * r.max(1e-300).ln() + 0.5 + self.c1;
        }
        if r >= KERNEL_RMAX {
            return 1.0 / (r * r);
        }
        let pos = (r / KERNEL_R0).ln() / self.log_ratio;
        let i = (pos.round() as usize).clamp(1, self.rs.len() - 2);
        // derivative of the parabola through the three surrounding nodes
        let (r0, r1, r2) = (self.rs[i - 1], self.rs[i], self.rs[i + 1]);
        let (g0, g1, g2) = (self.gs[i - 1], self.gs[i], self.gs[i + 1]);
        let l0 = (2.0 * r - r1 - r2) / ((r0 - r1) * (r0 - r2));
        let l1 = (2.0 * r - r0 - r2) / ((r1 - r0) * (r1 - r2));
        let l2 = (2.0 * r - r0 - r1) / ((r2 - r0) * (r2 - r1));
        g0 * l0 + g1 * l1 + g2 * l2
    }

    /// Vector kernel `R(z) = g(|z|)·z/|z|`.
    pub fn eval_radial_vector(&self, z: Point2) -> Point2 {
        let r = z.norm();
        if r == 0.0 {
            Point2::ZERO
        } else {
            z * (self.eval(r) / r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, generate_mesh, BoundaryCurve, MeshParams, Weight};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const EULER_GAMMA: f64 = 0.5772156649015329;

    fn bessel_i(nu: usize, x: f64) -> f64 {
        let mut term =
            (x / 2.0).powi(nu as i32) / (1..=nu).map(|k| k as f64).product::<f64>().max(1.0);
        let mut sum = term;
        for k in 1..60 {
            term *= x * x / 4.0 / (k as f64 * (k + nu) as f64);
            sum += term;
        }
        sum
    }

    /// K₁ via the ascending series (accurate for moderate arguments).
    fn bessel_k1(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut psi_k = -EULER_GAMMA; // ψ(1)
        let mut psi_k1 = 1.0 - EULER_GAMMA; // ψ(2)
        let mut factor = x / 4.0; // (x/4)·(x²/4)^k / (k!(k+1)!)
        for k in 0..60 {
            sum += factor * (psi_k + psi_k1);
            let kf = (k + 1) as f64;
            factor *= x * x / 4.0 / (kf * (kf + 1.0));
            psi_k += 1.0 / kf;
            psi_k1 += 1.0 / (kf + 1.0);
        }
        (x / 2.0).ln() * bessel_i(1, x) + 1.0 / x - sum
    }

    #[test]
    fn radial_kernel_matches_bessel_difference() {
        let kernel = KernelR::build().unwrap();
        for r in [0.01, 0.05, 0.2, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let exact = bessel_k1(r) - 1.0 / r;
            let got = kernel.eval(r);
            assert!(
                (got - exact).abs() < 2e-4 * exact.abs().max(0.05),
                "g({r}) = {got}, expected {exact}"
            );
        }
        // origin expansion coefficient: γ/2 − ln2/2 − 1/4
        let c1_exact = EULER_GAMMA / 2.0 - 2.0_f64.ln() / 2.0 - 0.25;
        assert!(
            (kernel.origin_slope() - c1_exact).abs() < 1e-3,
            "c1 {} vs {}",
            kernel.origin_slope(),
            c1_exact
        );
        // far field carries unit algebraic charge
        assert_relative_eq!(25.0 * kernel.eval(25.0), -1.0, epsilon = 1e-4);
        // derivative consistency against a secant of eval (absolute slack:
        // g′ crosses zero near r = 1, where relative error is meaningless)
        for r in [0.1, 1.0, 3.0] {
            let d = 1e-5;
            let fd = (kernel.eval(r + d) - kernel.eval(r - d)) / (2.0 * d);
            assert_relative_eq!(kernel.eval_deriv(r), fd, epsilon = 5e-4, max_relative = 1e-2);
        }
    }

    #[test]
    fn isotropic_disk_diagonal_matches_bessel_formula() {
        // a ≡ 1 on the unit disk: G = 4K₀(r) + 4K₁(1)/I₁(1)·I₀(r), so
        // H(0,0) = 4(ln 2 − γ) + 4K₁(1)/I₁(1)
        fn bessel_k0(x: f64) -> f64 {
            let mut sum = 0.0;
            let mut psi = -EULER_GAMMA;
            let mut term = 1.0;
            for k in 0..60 {
                if k > 0 {
                    let kf = k as f64;
                    term *= x * x / 4.0 / (kf * kf);
                    psi += 1.0 / kf;
                }
                sum += term * psi;
            }
            -(x / 2.0).ln() * bessel_i(0, x) + sum
        }
        let expected = 4.0 * (2.0_f64.ln() - EULER_GAMMA) + 4.0 * bessel_k1(1.0) / bessel_i(1, 1.0);
        assert_relative_eq!(expected, 4.723816546500211, epsilon = 1e-9);
        // sanity for the series against a second identity: K₀′ = −K₁
        let d = 1e-6;
        assert_relative_eq!(
            (bessel_k0(1.0 + d) - bessel_k0(1.0 - d)) / (2.0 * d),
            -bessel_k1(1.0),
            max_relative = 1e-6
        );

        let domain = build_domain(
            BoundaryCurve::disk(Point2::ZERO, 1.0).unwrap(),
            Weight::constant(1.0).unwrap(),
        )
        .unwrap();
        let mesh =
            generate_mesh(&domain, &MeshParams::with_h(0.055).graded(Point2::ZERO, 0.011)).unwrap();
        let solver = GreenSolver::new(&domain, &mesh);
        let field = solver.solve(Point2::ZERO).unwrap();

        assert_eq!(field.kind(), PoleKind::Interior);
        assert_relative_eq!(field.strength(), 4.0);
        assert!(
            (field.h_at_pole() - expected).abs() < 5e-3,
            "H(0,0) = {}, expected {expected}",
            field.h_at_pole()
        );

        // radial symmetry: H is constant on circles around the origin here
        let h1 = field.eval_h(Point2::new(0.4, 0.0)).unwrap();
        let h2 = field.eval_h(Point2::new(0.0, 0.4)).unwrap();
        assert!((h1 - h2).abs() < 5e-3);

        // and the full G against the Bessel closed form off the pole
        let x = Point2::new(0.5, 0.0);
        let g_exact = 4.0 * bessel_k0(0.5) + 4.0 * bessel_k1(1.0) / bessel_i(1, 1.0) * bessel_i(0, 0.5);
        assert!((field.eval_g(x).unwrap() - g_exact).abs() < 5e-3);
    }

    #[test]
    fn weak_amplitude_recovers_weight_at_pole() {
        let domain = build_domain(
            BoundaryCurve::disk(Point2::ZERO, 1.0).unwrap(),
            Weight::from_expr("2 - x2").unwrap(),
        )
        .unwrap();
        let zeta = Point2::new(0.3, 0.2);
        let mesh = generate_mesh(&domain, &MeshParams::with_h(0.1).graded(zeta, 0.02)).unwrap();
        let solver = GreenSolver::new(&domain, &mesh);
        let field = solver.solve(zeta).unwrap();
        let a_zeta = 2.0 - zeta.y;
        assert!(
            (field.weak_amplitude() - a_zeta).abs() < 1e-2 * a_zeta,
            "amplitude {} vs weight {a_zeta}",
            field.weak_amplitude()
        );
    }

    #[test]
    fn reciprocity_of_weighted_green_function() {
        // self-adjointness in the a-weighted inner product makes a(x)G(x,ζ)
        // symmetric under swapping evaluation point and pole:
        // a(ζ₂)·G(ζ₂,ζ₁) = a(ζ₁)·G(ζ₁,ζ₂), the weight taken at the
        // EVALUATION point (pairing it with the pole is a different, false,
        // statement — the two only coincide for constant weights)
        let domain = build_domain(
            BoundaryCurve::disk(Point2::ZERO, 1.0).unwrap(),
            Weight::from_expr("2 - x2").unwrap(),
        )
        .unwrap();
        let (z1, z2) = (Point2::new(0.35, 0.15), Point2::new(-0.3, -0.25));
        let mesh = generate_mesh(
            &domain,
            &MeshParams::with_h(0.09).graded(z1, 0.02).graded(z2, 0.02),
        )
        .unwrap();
        let solver = GreenSolver::new(&domain, &mesh);
        let fields = solver.solve_many(&[z1, z2]).unwrap();
        let a = |p: Point2| 2.0 - p.y;
        let lhs = a(z2) * fields[0].eval_g(z2).unwrap();
        let rhs = a(z1) * fields[1].eval_g(z1).unwrap();
        assert!(
            ((lhs - rhs) / rhs).abs() < 1e-2,
            "reciprocity violated: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn boundary_pole_snaps_and_doubles_strength() {
        let domain = build_domain(
            BoundaryCurve::disk(Point2::ZERO, 1.0).unwrap(),
            Weight::constant(1.0).unwrap(),
        )
        .unwrap();
        let almost = Point2::new(1.0 - 1e-12, 0.0);
        let mesh =
            generate_mesh(&domain, &MeshParams::with_h(0.1).graded(Point2::new(1.0, 0.0), 0.02))
                .unwrap();
        let solver = GreenSolver::new(&domain, &mesh);
        let field = solver.solve(almost).unwrap();

        assert!(matches!(field.kind(), PoleKind::Boundary { .. }));
        assert_relative_eq!(field.strength(), 8.0);
        assert_relative_eq!(field.pole().norm(), 1.0, epsilon = 1e-14);
        // the mass identity holds with the boundary strength
        assert!(
            (field.weak_amplitude() - 1.0).abs() < 2e-2,
            "amplitude {}",
            field.weak_amplitude()
        );

        // far outside is rejected
        assert!(solver.solve(Point2::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn near_boundary_diagonal_grows_like_minus_four_log() {
        // image-charge asymptotics: H(ζ_t, ζ_t) = −4·ln(2t) + O(1) for an
        // interior pole at distance t from the wall, so consecutive
        // halvings of t must raise the diagonal by ≈ 4·ln 2
        let domain = build_domain(
            BoundaryCurve::disk(Point2::ZERO, 1.0).unwrap(),
            Weight::constant(1.0).unwrap(),
        )
        .unwrap();
        let mut diag = Vec::new();
        for t in [0.2, 0.1] {
            let zeta = Point2::new(1.0 - t, 0.0);
            let mesh = generate_mesh(
                &domain,
                &MeshParams::with_h(0.1).graded(zeta, t / 8.0).graded(Point2::new(1.0, 0.0), t / 8.0),
            )
            .unwrap();
            let solver = GreenSolver::new(&domain, &mesh);
            diag.push(solver.solve(zeta).unwrap().h_at_pole());
        }
        let rise = diag[1] - diag[0];
        let expected = 4.0 * 2.0_f64.ln();
        assert!(
            (rise - expected).abs() < 0.12 * expected,
            "diagonal rise {rise} vs 4·ln2 = {expected}"
        );
    }

    #[test]
    fn kink_subtraction_restores_differentiability() {
        // along γ̂ the odd first difference of H carries the kernel term
        // c·|γ(ζ)|·g(δ) ≈ c|γ|·½δ·lnδ; once it is subtracted the remainder
        // divided by δ settles to a constant (the true gradient)
        let domain = build_domain(
            BoundaryCurve::disk(Point2::ZERO, 1.0).unwrap(),
            Weight::from_expr("2 - x2").unwrap(),
        )
        .unwrap();
        let zeta = Point2::new(0.1, 0.3);
        let mesh = generate_mesh(&domain, &MeshParams::with_h(0.12).graded(zeta, 0.008)).unwrap();
        let solver = GreenSolver::new(&domain, &mesh);
        let field = solver.solve(zeta).unwrap();
        let kernel = KernelR::build().unwrap();

        let gamma = domain.weight().gamma(zeta);
        let gh = gamma * (1.0 / gamma.norm());
        let odd_diff = |delta: f64| {
            (field.eval_h(zeta + gh * delta).unwrap() - field.eval_h(zeta - gh * delta).unwrap())
                / 2.0
        };
        let mut raw = Vec::new();
        let mut corrected = Vec::new();
        for delta in [0.05, 0.025, 0.0125] {
            let d = odd_diff(delta);
            raw.push(d / delta);
            corrected.push((d - field.strength() * gamma.norm() * kernel.eval(delta)) / delta);
        }
        // uncorrected slopes drift by c|γ|·½·ln2 per halving; corrected ones settle
        let drift_raw = (raw[2] - raw[0]).abs();
        let drift_corrected = (corrected[2] - corrected[0]).abs();
        let expected_drift = field.strength() * gamma.norm() * 0.5 * 2.0_f64.ln() * 2.0;
        assert!(
            (drift_raw - expected_drift).abs() < 0.3 * expected_drift,
            "raw drift {drift_raw} vs predicted {expected_drift}"
        );
        assert!(
            drift_corrected < 0.2 * drift_raw,
            "corrected drift {drift_corrected} vs raw {drift_raw}"
        );
        let _ = PI;
    }
}
