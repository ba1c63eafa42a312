//! Finite-dimensional reduction around a multi-bubble ansatz.
//!
//! The linearization of the rescaled equation at the ansatz has an
//! approximate kernel spanned by cut-off translation derivatives of each
//! concentration profile (plus a scale derivative kept for diagnostics).
//! This module builds that basis, solves the linear and nonlinear problems
//! projected orthogonal to it through a symmetric saddle-point system, and
//! runs the damped Newton iteration on the full discrete equation that
//! polishes reduced approximations into genuine solutions.
//!
//! Frames: the projected problems are posed in the rescaled frame `y = x/ε`,
//! but every term assembles on the *physical* mesh — stiffness and mass are
//! invariant under the change of variables and the profile term obeys
//! `∫ ã e^v φψ dy = ε² ∫ a e^u φψ dx` — so no rescaled mesh copy is ever
//! built. Right-hand sides and constraint columns pick up one common `ε⁻²`
//! from the same substitution, which keeps the Lagrange multipliers at their
//! rescaled-frame values. The Newton iteration works directly in the
//! physical frame.

use std::cell::Cell;

use crate::ansatz::{
    project_bubble, residual_s, Ansatz, Bubble, ConcentrationPoint, PointTag,
};
use crate::domain::{BoundaryCurve, Domain2D, Mesh, Weight};
use crate::error::{Error, Result};
use crate::fem::{
    assemble, assemble_load, dot, exp_coeff, integrate, norm, point_coeff, solve_minres,
    CsrMatrix,
};
use crate::greens::GreenSolver;
use crate::numerics::{radial_cutoff, Point2};

/// Default cutoff radius `r₀` of the kernel modes, in rescaled units.
pub const DEFAULT_CUTOFF_RADIUS: f64 = 10.0;
/// Smallest admissible cutoff radius: below this the cut-off modes no longer
/// capture the translation kernel of the limit profile.
pub const MIN_CUTOFF_RADIUS: f64 = 5.0;
/// Relative orthogonality target for the projected solves.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;
/// Sup-norm stopping tolerance of the nonlinear fixed-point sweep.
pub const FIXED_POINT_TOL: f64 = 1e-9;
/// After this many sweeps the iteration must demonstrate contraction
/// (recent ratio < 1) to be allowed to continue.
pub const NO_CONTRACTION_WINDOW: usize = 50;
/// Unconditional ceiling on fixed-point sweeps.
pub const MAX_FIXED_POINT_SWEEPS: usize = 400;
/// Default ceiling on the weighted sup norm of the ansatz residual under
/// which the fixed-point iteration is attempted.
pub const DEFAULT_STAR_THRESHOLD: f64 = 0.5;
/// Absolute ℓ² residual target of the full Newton solve.
pub const NEWTON_TOL: f64 = 1e-10;
/// Exponent ceiling in every `e^u` evaluation; a converged state that
/// touches it is reported as an error, never silently accepted.
pub const EXP_CLAMP: f64 = 700.0;

/// Relative residual target of the saddle-point MINRES solve.
const SADDLE_TOL: f64 = 1e-11;
const SADDLE_MAX_ITER: usize = 150_000;
/// Inner tolerance of the Newton-step solves (with one relaxed retry).
const NEWTON_STEP_TOL: f64 = 1e-12;
const NEWTON_STEP_RETRY_TOL: f64 = 3e-10;
const NEWTON_STEP_MAX_ITER: usize = 200_000;
/// Nodes farther than this multiple of `ε(r₀+1)` from a concentration point
/// are outside its modes' support for sure; skips the chart solve there.
const SUPPORT_REJECT_FACTOR: f64 = 3.0;

// ---------------------------------------------------------------------------
// Kernel basis
// ---------------------------------------------------------------------------

/// Which derivative of the concentration family a kernel mode shadows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    /// Center derivative along the first direction; for boundary points this
    /// is the flattened tangential direction (the only one compatible with
    /// the no-flux condition).
    Translation1,
    /// Center derivative along the second direction (interior points only).
    Translation2,
    /// Scale derivative `1/d − 2d/(d²+ρ²)`; built for diagnostics and left
    /// unconstrained unless explicitly requested.
    Dilation,
}

/// One cut-off kernel mode `χ·Z`, sampled at the mesh nodes.
#[derive(Debug, Clone)]
pub struct KernelMode {
    /// Index of the concentration point the mode belongs to.
    pub point_index: usize,
    pub kind: ModeKind,
    /// Nodal values (a rescaled-frame field evaluated at `y = x/ε`).
    pub values: Vec<f64>,
}

/// The approximate-kernel basis of the linearized operator: per point,
/// the cut-off translation modes that are projected out (two for interior
/// points, one flattened tangential mode for boundary points), plus the
/// dilation modes kept aside for diagnostics.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    r0: f64,
    constrained: Vec<KernelMode>,
    dilations: Vec<KernelMode>,
}

impl KernelBasis {
    /// Cutoff radius in rescaled units; the modes vanish beyond `r₀+1`.
    pub fn cutoff_radius(&self) -> f64 {
        self.r0
    }

    /// Modes the projected solves are kept orthogonal to.
    pub fn constrained(&self) -> &[KernelMode] {
        &self.constrained
    }

    /// Dilation modes built for diagnostics (empty when they were requested
    /// as constraints instead).
    pub fn dilations(&self) -> &[KernelMode] {
        &self.dilations
    }
}

/// Local boundary chart at a boundary concentration point ζ: in the frame of
/// the tangent τ and inner normal ν at ζ the boundary is a graph ξ₂ = p(ξ₁)
/// with p(0) = p′(0) = 0, and
///
/// F₁ = ξ₁ + (ξ₂ − p)·p′/(1+p′²),   F₂ = ξ₂ − p
///
/// maps the boundary arc onto {F₂ = 0} while staying the identity to second
/// order at ζ. Expressing a boundary point's modes through F restores the
/// straight half-plane geometry the translation kernel lives in.
struct Flattening {
    origin: Point2,
    s0: f64,
    tangent: Point2,
    normal: Point2,
}

impl Flattening {
    fn new(domain: &Domain2D, zeta: Point2) -> Flattening {
        let (s0, foot, _) = domain.closest_boundary(zeta);
        let tangent = domain.curve().unit_tangent(s0);
        let normal = domain.curve().inner_normal(s0);
        Flattening { origin: foot, s0, tangent, normal }
    }

    /// The graph value and slope `(p(ξ₁), p′(ξ₁))`, found by solving
    /// `τ·(c(s) − ζ) = ξ₁` for the arc parameter near `s₀`.
    fn graph(&self, curve: &BoundaryCurve, xi1: f64) -> Option<(f64, f64)> {
        let mut s = curve.wrap_s(self.s0 + xi1);
        let tol = 1e-13 * (1.0 + xi1.abs());
        for _ in 0..60 {
            let rel = curve.point(s) - self.origin;
            let t = curve.unit_tangent(s);
            let slope = self.tangent.dot(t);
            if slope <= 0.05 {
                // The curve turned away from the chart direction: the point
                // is far outside any valid flattening neighbourhood.
                return None;
            }
            let ds = (xi1 - self.tangent.dot(rel)) / slope;
            s = curve.wrap_s(s + ds);
            if ds.abs() < tol {
                let rel = curve.point(s) - self.origin;
                let t = curve.unit_tangent(s);
                let p = self.normal.dot(rel);
                let dp = self.normal.dot(t) / self.tangent.dot(t);
                return Some((p, dp));
            }
        }
        None
    }

    /// Flattened local coordinates of a physical point, or `None` outside
    /// the chart's reach.
    fn flatten(&self, curve: &BoundaryCurve, x: Point2) -> Option<Point2> {
        let rel = x - self.origin;
        let xi1 = self.tangent.dot(rel);
        let xi2 = self.normal.dot(rel);
        let (p, dp) = self.graph(curve, xi1)?;
        Some(Point2::new(xi1 + (xi2 - p) * dp / (1.0 + dp * dp), xi2 - p))
    }
}

/// Builds the cut-off kernel modes for a concentration configuration.
///
/// `scales` are the closure heights `d_i` matching `points`; the cutoff is a
/// quintic smooth step equal to 1 inside the rescaled radius `r0` and 0
/// beyond `r0+1`. Interior points contribute both center derivatives,
/// boundary points only the flattened tangential one. With
/// `constrain_dilations` the scale derivatives join the constrained set
/// (diagnostic runs); by default they are only built and exposed.
pub fn build_kernel_basis(
    domain: &Domain2D,
    mesh: &Mesh,
    points: &[ConcentrationPoint],
    scales: &[f64],
    eps: f64,
    r0: f64,
    constrain_dilations: bool,
) -> Result<KernelBasis> {
    if points.is_empty() || points.len() != scales.len() {
        return Err(Error::config(format!(
            "kernel basis needs matching points and scales, got {} and {}",
            points.len(),
            scales.len()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::config(format!("ε must be positive, got {eps}")));
    }
    if !(r0 >= MIN_CUTOFF_RADIUS) {
        return Err(Error::config(format!(
            "cutoff radius {r0} is below the minimum {MIN_CUTOFF_RADIUS}"
        )));
    }
    let support = eps * (r0 + 1.0);
    for (i, a) in points.iter().enumerate() {
        for (j, b) in points.iter().enumerate().skip(i + 1) {
            let sep = (a.point - b.point).norm();
            if sep < 2.0 * support {
                return Err(Error::OutsideRegime {
                    context: format!(
                        "kernel supports of points {i} and {j} overlap: separation {sep:.3e} \
                         is below 2ε(r₀+1) = {:.3e}",
                        2.0 * support
                    ),
                });
            }
        }
    }

    let mut constrained = Vec::new();
    let mut dilations = Vec::new();
    for (i, (cp, &d)) in points.iter().zip(scales).enumerate() {
        if !(d > 0.0) {
            return Err(Error::config(format!("scale d_{i} must be positive, got {d}")));
        }
        let reject = SUPPORT_REJECT_FACTOR * support;
        let chart = match cp.tag {
            PointTag::Boundary => Some(Flattening::new(domain, cp.point)),
            PointTag::Interior => None,
        };
        let n = mesh.num_nodes();
        let mut t1 = vec![0.0; n];
        let mut t2 = vec![0.0; n];
        let mut dil = vec![0.0; n];
        for (k, &x) in mesh.nodes.iter().enumerate() {
            if (x - cp.point).norm() > reject {
                continue;
            }
            // Flattened (boundary) or plain (interior) rescaled offset from
            // the concentration point.
            let y = match &chart {
                Some(f) => match f.flatten(domain.curve(), x) {
                    Some(xi) => xi / eps,
                    None => continue,
                },
                None => (x - cp.point) / eps,
            };
            let rho_sq = y.norm_sq();
            let chi = radial_cutoff(rho_sq.sqrt(), r0, 1.0);
            if chi == 0.0 {
                continue;
            }
            let denom = d * d + rho_sq;
            t1[k] = chi * y.x / denom;
            t2[k] = chi * y.y / denom;
            dil[k] = chi * (1.0 / d - 2.0 * d / denom);
        }
        constrained.push(KernelMode { point_index: i, kind: ModeKind::Translation1, values: t1 });
        if cp.tag == PointTag::Interior {
            constrained.push(KernelMode {
                point_index: i,
                kind: ModeKind::Translation2,
                values: t2,
            });
        }
        dilations.push(KernelMode { point_index: i, kind: ModeKind::Dilation, values: dil });
    }
    if constrain_dilations {
        constrained.append(&mut dilations);
    }
    Ok(KernelBasis { r0, constrained, dilations })
}

// ---------------------------------------------------------------------------
// Projected solves
// ---------------------------------------------------------------------------

/// Result of a projected solve: the correction, its Lagrange multipliers,
/// and the measured residuals of both saddle blocks.
#[derive(Debug, Clone)]
pub struct ReductionState {
    /// Nodal correction φ (a rescaled-frame field on the physical mesh).
    pub phi: Vec<f64>,
    /// One multiplier per constrained mode, in basis order.
    pub multipliers: Vec<f64>,
    /// Relative ℓ² residual of the PDE block.
    pub pde_residual: f64,
    /// Max over modes of |⟨weighted mode, φ⟩| / ‖φ‖ (weighted duality).
    pub orth_residual: f64,
    /// Sup-norm change per fixed-point sweep; empty for a linear solve.
    pub contraction_log: Vec<f64>,
}

/// The discrete linearization at an ansatz together with its constraint
/// columns: the saddle operator of the projected problems.
pub struct ProjectedOperator<'a> {
    mesh: &'a Mesh,
    ansatz: &'a Ansatz,
    /// `K + M − ε²·M_{e^u}`: the rescaled linearized operator in physical
    /// assembly (weighted stiffness, weighted mass, weighted profile mass).
    system: CsrMatrix,
    /// Weighted mass matrix, used to turn nodal right-hand sides into loads.
    mass: CsrMatrix,
    /// Unit-normalized constraint columns `ε⁻²·M·z_k / s_k`.
    columns: Vec<Vec<f64>>,
    /// The normalizers `s_k`, needed to restore true multiplier values.
    column_scales: Vec<f64>,
    /// Inverse diagonal preconditioner of the (n + #modes) saddle system.
    precond: Vec<f64>,
    n: usize,
}

impl<'a> ProjectedOperator<'a> {
    pub fn new(
        domain: &'a Domain2D,
        mesh: &'a Mesh,
        ansatz: &'a Ansatz,
        basis: &KernelBasis,
    ) -> Result<ProjectedOperator<'a>> {
        let n = mesh.num_nodes();
        if ansatz.nodal().len() != n {
            return Err(Error::config(format!(
                "ansatz has {} nodal values but the mesh has {n} nodes",
                ansatz.nodal().len()
            )));
        }
        let w = domain.weight();
        let eps = ansatz.eps();
        let km =
            assemble(mesh, point_coeff(|p| w.eval(p)), point_coeff(|p| w.eval(p)));
        let mw = assemble(mesh, |_, _, _| 0.0, exp_coeff(mesh, ansatz.nodal(), |p| w.eval(p)));
        let system = CsrMatrix::linear_combination(&[(1.0, &km), (-eps * eps, &mw)]);
        let mass = assemble(mesh, |_, _, _| 0.0, point_coeff(|p| w.eval(p)));

        let inv_eps_sq = 1.0 / (eps * eps);
        let mut columns = Vec::with_capacity(basis.constrained().len());
        let mut column_scales = Vec::with_capacity(basis.constrained().len());
        for mode in basis.constrained() {
            let mut col = mass.matvec(&mode.values);
            for v in col.iter_mut() {
                *v *= inv_eps_sq;
            }
            let s = norm(&col);
            if s == 0.0 {
                return Err(Error::config(format!(
                    "kernel mode {:?} of point {} vanishes on this mesh",
                    mode.kind, mode.point_index
                )));
            }
            for v in col.iter_mut() {
                *v /= s;
            }
            columns.push(col);
            column_scales.push(s);
        }

        // Jacobi preconditioner: |diag| of the PDE block, floored by a
        // fraction of the always-positive stiffness+mass diagonal (the
        // profile term can drive individual diagonal entries through zero);
        // for each multiplier row, the matching diagonal of the Schur
        // complement estimate bᵀD⁻¹b.
        let diag_sys = system.diag();
        let diag_km = km.diag();
        let mut precond = Vec::with_capacity(n + columns.len());
        for i in 0..n {
            precond.push(1.0 / diag_sys[i].abs().max(0.01 * diag_km[i]));
        }
        for col in &columns {
            let q: f64 = col.iter().zip(&precond[..n]).map(|(c, p)| c * c * p).sum();
            precond.push(1.0 / q);
        }

        Ok(ProjectedOperator {
            mesh,
            ansatz,
            system,
            mass,
            columns,
            column_scales,
            precond,
            n,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn ansatz(&self) -> &Ansatz {
        self.ansatz
    }

    fn apply_saddle(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n + self.columns.len()];
        self.system.matvec_into(&x[..n], &mut out[..n]);
        for (k, col) in self.columns.iter().enumerate() {
            let c = x[n + k];
            if c != 0.0 {
                for i in 0..n {
                    out[i] += c * col[i];
                }
            }
            out[n + k] = dot(col, &x[..n]);
        }
        out
    }

    /// Solves the projected linear problem: the saddle system
    /// `[L, B; Bᵀ, 0]·[φ; c] = [−load(h); 0]` with `L` the linearized
    /// operator and `B` the constraint columns. `h` is a nodal
    /// rescaled-frame right-hand side.
    pub fn solve_linear(&self, h: &[f64]) -> Result<ReductionState> {
        let n = self.n;
        if h.len() != n {
            return Err(Error::config(format!(
                "right-hand side has {} values but the mesh has {n} nodes",
                h.len()
            )));
        }
        let m = self.columns.len();
        let eps = self.ansatz.eps();
        let mut b = vec![0.0; n + m];
        let load = self.mass.matvec(h);
        let inv_eps_sq = 1.0 / (eps * eps);
        for i in 0..n {
            b[i] = -inv_eps_sq * load[i];
        }
        let x = solve_minres(
            |v| self.apply_saddle(v),
            Some(&self.precond),
            &b,
            SADDLE_TOL,
            SADDLE_MAX_ITER,
        )?;

        let phi = x[..n].to_vec();
        let multipliers: Vec<f64> =
            x[n..].iter().zip(&self.column_scales).map(|(c, s)| c / s).collect();

        let r = self.apply_saddle(&x);
        let b_norm = norm(&b[..n]);
        let mut top_err = 0.0;
        for i in 0..n {
            top_err += (r[i] - b[i]) * (r[i] - b[i]);
        }
        let top_err = top_err.sqrt();
        let pde_residual = if b_norm > 0.0 { top_err / b_norm } else { top_err };
        let phi_norm = norm(&phi);
        let orth_residual = if phi_norm > 0.0 {
            self.columns.iter().map(|c| dot(c, &phi).abs()).fold(0.0, f64::max) / phi_norm
        } else {
            0.0
        };

        Ok(ReductionState {
            phi,
            multipliers,
            pde_residual,
            orth_residual,
            contraction_log: Vec::new(),
        })
    }

    /// Solves the projected *nonlinear* problem by the fixed-point sweep
    /// `φ ← T(−S − N(φ))`, `N(φ) = e^v(e^φ − 1 − φ)`, where `T` is the
    /// projected inverse of the full linearization (first-order transport
    /// by the weight is part of `T`, not of the iterated remainder). Stops
    /// when the sup-norm change drops below the tolerance; refuses to start
    /// when the ansatz residual's weighted sup norm exceeds the threshold.
    pub fn solve_nonlinear(&self, star_threshold: f64) -> Result<ReductionState> {
        let s_field = residual_s(self.ansatz, self.mesh);
        if !(s_field.star_norm < star_threshold) {
            return Err(Error::OutsideRegime {
                context: format!(
                    "ansatz residual star norm {:.3e} is not below the contraction \
                     threshold {star_threshold}",
                    s_field.star_norm
                ),
            });
        }
        let eps = self.ansatz.eps();
        let shift = 4.0 * eps.ln();
        let e_v: Vec<f64> = self.ansatz.nodal().iter().map(|u| (u + shift).exp()).collect();

        let n = self.n;
        let mut phi: Vec<f64> = vec![0.0; n];
        let mut log: Vec<f64> = Vec::new();
        while log.len() < MAX_FIXED_POINT_SWEEPS {
            // The correction solves T(−S − N(φ)); the transport by the
            // weight gradient is already inside T's operator, so it is not
            // re-iterated here.
            let h: Vec<f64> = (0..n)
                .map(|i| {
                    let p = phi[i].min(30.0);
                    -(s_field.values[i] + e_v[i] * (p.exp() - 1.0 - p))
                })
                .collect();
            let mut state = self.solve_linear(&h)?;
            let delta = phi
                .iter()
                .zip(&state.phi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if !delta.is_finite() {
                return Err(Error::Contraction {
                    context: "fixed-point sweep produced a non-finite update".into(),
                });
            }
            log.push(delta);
            phi = std::mem::take(&mut state.phi);
            if delta < FIXED_POINT_TOL {
                state.phi = phi;
                state.contraction_log = log;
                return Ok(state);
            }
            if log.len() >= 2 && delta > 100.0 * (log[0] + 1.0) {
                break;
            }
            // Past the probation window the sweep must keep contracting;
            // a recent geometric-mean ratio at or above one means the map
            // is not a contraction here and further sweeps are pointless.
            if log.len() >= NO_CONTRACTION_WINDOW {
                let k = log.len();
                let recent = (log[k - 1] / log[k - 5]).powf(0.25);
                if !(recent < 0.98) {
                    break;
                }
            }
        }
        let ratio = if log.len() >= 2 {
            log[log.len() - 1] / log[log.len() - 2]
        } else {
            f64::NAN
        };
        Err(Error::Contraction {
            context: format!(
                "no contraction after {} sweeps; last sup-change {:.3e}, last ratio {:.3}",
                log.len(),
                log.last().copied().unwrap_or(f64::NAN),
                ratio
            ),
        })
    }
}

/// One-shot projected linear solve (see [`ProjectedOperator::solve_linear`]).
pub fn solve_projected_linear(
    domain: &Domain2D,
    mesh: &Mesh,
    ansatz: &Ansatz,
    basis: &KernelBasis,
    h: &[f64],
) -> Result<ReductionState> {
    ProjectedOperator::new(domain, mesh, ansatz, basis)?.solve_linear(h)
}

/// One-shot projected nonlinear solve (see
/// [`ProjectedOperator::solve_nonlinear`]).
pub fn solve_projected_nonlinear(
    domain: &Domain2D,
    mesh: &Mesh,
    ansatz: &Ansatz,
    basis: &KernelBasis,
    star_threshold: f64,
) -> Result<ReductionState> {
    ProjectedOperator::new(domain, mesh, ansatz, basis)?.solve_nonlinear(star_threshold)
}

// ---------------------------------------------------------------------------
// Full Newton solve
// ---------------------------------------------------------------------------

/// Convergence record of one ε stage of the Newton solve.
#[derive(Debug, Clone)]
pub struct ContinuationStep {
    pub eps: f64,
    /// Accepted Newton steps taken at this stage.
    pub iterations: usize,
    /// Final ℓ² residual.
    pub residual: f64,
    /// Concentration mass `ε²∫e^u` of the converged state.
    pub mass: f64,
}

/// A converged state of the full discrete equation, with the per-stage log.
#[derive(Debug, Clone)]
pub struct NewtonSolution {
    pub u: Vec<f64>,
    pub steps: Vec<ContinuationStep>,
}

/// Unweighted concentration mass `ε²∫_Ω e^{u_h}` of a nodal field.
pub fn solution_mass(mesh: &Mesh, u: &[f64], eps: f64) -> f64 {
    eps * eps * integrate(mesh, exp_coeff(mesh, u, |_| 1.0))
}

/// A member of the common scale family `d_i·e^σ`, selected as Newton seed.
#[derive(Debug, Clone)]
pub struct TunedSeed {
    /// Common log-scale offset applied to every concentration scale.
    pub log_scale: f64,
    /// Nodal field of the re-projected ansatz at the tuned scales.
    pub u: Vec<f64>,
    /// Discrete ℓ² residual of that field.
    pub residual: f64,
}

/// Prepares a Newton initial guess by sliding the ansatz along the common
/// scale family `d_i ↦ d_i·e^σ` and keeping the member with the smallest
/// discrete residual.
///
/// The closure scales match the leading-order expansion; at moderate ε the
/// next-order boundary terms displace the best-fitting scale, which leaves
/// the bare ansatz in a narrow residual valley that damped Newton crosses
/// slowly. This one-dimensional fit removes that soft component for the
/// cost of one linear projection per trial scale. Scales that would leave
/// the concentration regime are skipped.
pub fn scale_tuned_seed(domain: &Domain2D, mesh: &Mesh, ansatz: &Ansatz) -> Result<TunedSeed> {
    let w = domain.weight();
    let km = assemble(mesh, point_coeff(|p| w.eval(p)), point_coeff(|p| w.eval(p)));
    let eps = ansatz.eps();
    let eps_sq = eps * eps;
    let residual_norm = |state: &[f64]| -> f64 {
        let hit = Cell::new(false);
        let load = assemble_load(mesh, clamped_profile(mesh, w, state, &hit));
        let mut r = km.matvec(state);
        for (ri, li) in r.iter_mut().zip(&load) {
            *ri -= eps_sq * li;
        }
        norm(&r)
    };

    let solver = GreenSolver::new(domain, mesh);
    let field_at = |sigma: f64| -> Result<Option<Vec<f64>>> {
        let mut u = vec![0.0; mesh.num_nodes()];
        for (cp, &d) in ansatz.points().iter().zip(ansatz.scales()) {
            let bubble = match Bubble::new(d * sigma.exp(), cp.point, eps) {
                Ok(b) => b,
                Err(Error::OutsideRegime { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let pb = project_bubble(&solver, &bubble, cp.tag)?;
            for (ui, vi) in u.iter_mut().zip(pb.nodal()) {
                *ui += vi;
            }
        }
        Ok(Some(u))
    };

    let mut best = TunedSeed {
        log_scale: 0.0,
        u: ansatz.nodal().to_vec(),
        residual: residual_norm(ansatz.nodal()),
    };
    let consider = |sigma: f64, best: &mut TunedSeed| -> Result<()> {
        if let Some(u) = field_at(sigma)? {
            let r = residual_norm(&u);
            if r < best.residual {
                *best = TunedSeed { log_scale: sigma, u, residual: r };
            }
        }
        Ok(())
    };
    for k in (-5..=3).filter(|&k| k != 0) {
        consider(0.1 * f64::from(k), &mut best)?;
    }
    let center = best.log_scale;
    for k in (-4..=4).filter(|&k| k != 0) {
        consider(center + 0.025 * f64::from(k), &mut best)?;
    }
    Ok(best)
}

/// Damped Newton iteration on the full discrete equation
/// `(K + M)u = ε²·load(a·e^u)`, marched over `eps_schedule` (one entry for
/// a plain solve; a decreasing list reuses each converged state as the next
/// initial guess). Line search halves the step until the residual decreases
/// (Armijo); the exponential is clamped at `EXP_CLAMP`, and a converged
/// state that still touches the clamp is an error.
pub fn newton_solve_full(
    domain: &Domain2D,
    mesh: &Mesh,
    initial: &[f64],
    eps_schedule: &[f64],
    max_iter: usize,
) -> Result<NewtonSolution> {
    let n = mesh.num_nodes();
    if initial.len() != n {
        return Err(Error::config(format!(
            "initial state has {} values but the mesh has {n} nodes",
            initial.len()
        )));
    }
    if eps_schedule.is_empty() || eps_schedule.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::config("the ε schedule must be non-empty and positive"));
    }
    if max_iter == 0 {
        return Err(Error::config("max_iter must be at least 1"));
    }
    let w = domain.weight();
    let km = assemble(mesh, point_coeff(|p| w.eval(p)), point_coeff(|p| w.eval(p)));

    let mut u = initial.to_vec();
    let mut steps = Vec::with_capacity(eps_schedule.len());
    for &eps in eps_schedule {
        let (iterations, residual) = newton_stage(domain, mesh, &km, &mut u, eps, max_iter)?;
        steps.push(ContinuationStep {
            eps,
            iterations,
            residual,
            mass: solution_mass(mesh, &u, eps),
        });
    }
    Ok(NewtonSolution { u, steps })
}

/// Assembly coefficient `a(x)·e^{u_h(x)}` with the exponent clamped at
/// [`EXP_CLAMP`]; flips `hit` whenever the clamp engages.
fn clamped_profile<'m>(
    mesh: &'m Mesh,
    w: &'m Weight,
    state: &'m [f64],
    hit: &'m Cell<bool>,
) -> impl Fn(usize, Point2, [f64; 3]) -> f64 + 'm {
    move |t, p, b| {
        let [i, j, k] = mesh.triangles[t];
        let mut e = b[0] * state[i] + b[1] * state[j] + b[2] * state[k];
        if e > EXP_CLAMP {
            e = EXP_CLAMP;
            hit.set(true);
        }
        w.eval(p) * e.exp()
    }
}

fn newton_stage(
    domain: &Domain2D,
    mesh: &Mesh,
    km: &CsrMatrix,
    u: &mut Vec<f64>,
    eps: f64,
    max_iter: usize,
) -> Result<(usize, f64)> {
    let w = domain.weight();
    let eps_sq = eps * eps;
    let eval_residual = |state: &[f64]| -> (Vec<f64>, bool) {
        let hit = Cell::new(false);
        let load = assemble_load(mesh, clamped_profile(mesh, w, state, &hit));
        let mut r = km.matvec(state);
        for (ri, li) in r.iter_mut().zip(&load) {
            *ri -= eps_sq * li;
        }
        (r, hit.get())
    };

    let (mut r, mut clamped) = eval_residual(u);
    let mut rn = norm(&r);
    for it in 0..=max_iter {
        if rn < NEWTON_TOL {
            if clamped {
                return Err(Error::Newton {
                    context: format!(
                        "converged at ε = {eps} with the exponential clamp active: \
                         the state left the representable range"
                    ),
                });
            }
            return Ok((it, rn));
        }
        if it == max_iter {
            return Err(Error::Newton {
                context: format!(
                    "residual {rn:.3e} after {max_iter} iterations at ε = {eps} \
                     (target {NEWTON_TOL:.1e})"
                ),
            });
        }

        let hit = Cell::new(false);
        let mw = assemble(mesh, |_, _, _| 0.0, clamped_profile(mesh, w, u, &hit));
        let jac = CsrMatrix::linear_combination(&[(1.0, km), (-eps_sq, &mw)]);
        let diag_km = km.diag();
        let inv_diag: Vec<f64> = jac
            .diag()
            .iter()
            .zip(&diag_km)
            .map(|(d, dk)| 1.0 / d.abs().max(0.01 * dk))
            .collect();
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = match solve_minres(
            |v| jac.matvec(v),
            Some(&inv_diag),
            &neg_r,
            NEWTON_STEP_TOL,
            NEWTON_STEP_MAX_ITER,
        ) {
            Ok(s) => s,
            Err(_) => solve_minres(
                |v| jac.matvec(v),
                Some(&inv_diag),
                &neg_r,
                NEWTON_STEP_RETRY_TOL,
                NEWTON_STEP_MAX_ITER,
            )?,
        };

        // Armijo backtracking on ‖F‖².
        let f0 = rn * rn;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> =
                u.iter().zip(&step).map(|(ui, si)| ui + t * si).collect();
            let (r_trial, hit_trial) = eval_residual(&trial);
            let rn_trial = norm(&r_trial);
            if rn_trial * rn_trial <= (1.0 - 1e-4 * t) * f0 {
                *u = trial;
                r = r_trial;
                rn = rn_trial;
                clamped = hit_trial;
                break;
            }
            t *= 0.5;
            if t < 2.0_f64.powi(-30) {
                return Err(Error::Newton {
                    context: format!(
                        "line search stalled at residual {rn:.3e} at ε = {eps}"
                    ),
                });
            }
        }
    }
    unreachable!("the iteration loop always returns");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_ansatz, solve_closure, star_norm_of, ClosureParams};
    use crate::domain::{build_domain, generate_mesh, MeshParams, Weight};
    use crate::greens::GreenSolver;

    fn unit_disk() -> Domain2D {
        build_domain(
            BoundaryCurve::disk(Point2::ZERO, 1.0).unwrap(),
            Weight::constant(1.0).unwrap(),
        )
        .unwrap()
    }

    /// Two-phase build of a single boundary bubble at (1,0) on the unit
    /// disk: probe the closure scale on a coarse mesh, then regenerate the
    /// mesh graded to resolve the core.
    fn boundary_bubble_setup(eps: f64, h: f64) -> (Domain2D, Mesh, Ansatz) {
        let domain = unit_disk();
        let pt = ConcentrationPoint::boundary(&domain, Point2::new(1.0, 0.0));
        let params = ClosureParams::default();
        let probe_mesh =
            generate_mesh(&domain, &MeshParams::with_h(0.2).graded(pt.point, 0.02)).unwrap();
        let probe = GreenSolver::new(&domain, &probe_mesh);
        let d = solve_closure(&probe, &[pt], eps, &params).unwrap().scales[0];
        let mesh = generate_mesh(
            &domain,
            &MeshParams::with_h(h).graded(pt.point, eps * d / 8.0),
        )
        .unwrap();
        let ansatz = build_ansatz(&domain, &mesh, &[pt], eps, &params).unwrap();
        (domain, mesh, ansatz)
    }

    #[test]
    fn cutoff_support_counts_and_guards() {
        let domain = unit_disk();
        let mesh = generate_mesh(&domain, &MeshParams::with_h(0.15)).unwrap();
        let interior = ConcentrationPoint::interior(Point2::new(-0.3, 0.2));
        let boundary = ConcentrationPoint::boundary(&domain, Point2::new(1.0, 0.0));
        let eps = 0.02;

        let basis = build_kernel_basis(
            &domain,
            &mesh,
            &[interior, boundary],
            &[1.0, 1.0],
            eps,
            DEFAULT_CUTOFF_RADIUS,
            false,
        )
        .unwrap();
        // two translation modes for the interior point, one for the boundary
        assert_eq!(basis.constrained().len(), 3);
        assert_eq!(basis.dilations().len(), 2);
        assert_eq!(
            basis
                .constrained()
                .iter()
                .filter(|m| m.kind == ModeKind::Translation2)
                .count(),
            1
        );

        // supports end at the rescaled radius r0+1
        let support = eps * (DEFAULT_CUTOFF_RADIUS + 1.0);
        for mode in basis.constrained().iter().chain(basis.dilations()) {
            let center = [interior, boundary][mode.point_index].point;
            let mut inside_max = 0.0_f64;
            for (k, &x) in mesh.nodes.iter().enumerate() {
                if (x - center).norm() > 1.6 * support {
                    assert_eq!(mode.values[k], 0.0);
                } else {
                    inside_max = inside_max.max(mode.values[k].abs());
                }
            }
            assert!(inside_max > 0.0, "mode {:?} vanished entirely", mode.kind);
        }

        // requesting dilation constraints moves them into the basis
        let diag = build_kernel_basis(
            &domain,
            &mesh,
            &[interior, boundary],
            &[1.0, 1.0],
            eps,
            DEFAULT_CUTOFF_RADIUS,
            true,
        )
        .unwrap();
        assert_eq!(diag.constrained().len(), 5);
        assert!(diag.dilations().is_empty());

        // cutoff radius floor and overlapping supports are rejected
        assert!(matches!(
            build_kernel_basis(&domain, &mesh, &[interior], &[1.0], eps, 4.0, false),
            Err(Error::InvalidConfig { .. })
        ));
        let close =
            [interior, ConcentrationPoint::interior(Point2::new(-0.3 + 0.3 * support, 0.2))];
        assert!(matches!(
            build_kernel_basis(
                &domain,
                &mesh,
                &close,
                &[1.0, 1.0],
                eps,
                DEFAULT_CUTOFF_RADIUS,
                false
            ),
            Err(Error::OutsideRegime { .. })
        ));
    }

    #[test]
    fn flattening_maps_boundary_arc_onto_axis() {
        let domain = unit_disk();
        let zeta = Point2::new(1.0, 0.0);
        let chart = Flattening::new(&domain, zeta);
        let curve = domain.curve();

        // the chart origin maps to 0
        let f0 = chart.flatten(curve, zeta).unwrap();
        assert!(f0.norm() < 1e-12);

        // boundary points map onto {second coordinate = 0} to chart-solve
        // accuracy, far below any mesh scale
        for k in -20..=20 {
            let s = curve.wrap_s(0.03 * k as f64);
            let f = chart.flatten(curve, curve.point(s)).unwrap();
            assert!(
                f.y.abs() < 1e-10,
                "boundary point at arc {s} flattens to second coordinate {:.3e}",
                f.y
            );
        }

        // points along the inner normal keep their distance exactly on the
        // disk (the graph is flat at the foot): F(ζ + tν) = (0, t)
        for &t in &[0.01, 0.05, 0.2] {
            let x = zeta + curve.inner_normal(0.0) * t;
            let f = chart.flatten(curve, x).unwrap();
            assert!(f.x.abs() < 1e-12 && (f.y - t).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_modes_annihilate_the_rescaled_linearization() {
        // z_j = y_j/(d²+|y|²) solves Δz + 8d²/(d²+|y|²)²·z = 0: the weak
        // residual against a smooth bump supported inside the cutoff is pure
        // discretization error. One fixed mesh, two values of ε: halving ε
        // halves the rescaled mesh size, so the residual must drop ~4×.
        let domain = unit_disk();
        let mesh = generate_mesh(&domain, &MeshParams::with_h(0.02)).unwrap();
        let stiff = assemble(&mesh, |_, _, _| 1.0, |_, _, _| 0.0);
        let center = ConcentrationPoint::interior(Point2::ZERO);
        let d = 1.0;

        let residual_for = |eps: f64| -> f64 {
            let basis = build_kernel_basis(
                &domain,
                &mesh,
                &[center],
                &[d],
                eps,
                DEFAULT_CUTOFF_RADIUS,
                false,
            )
            .unwrap();
            let z = &basis.constrained()[0].values;
            // ∫ ε²e^U zψ dx, the profile mass in physical variables
            let profile = assemble(&mesh, |_, _, _| 0.0, |_, p: Point2, _| {
                let q = (eps * d).powi(2) + p.norm_sq();
                eps * eps * 8.0 * d * d / (q * q)
            });
            let psi: Vec<f64> = mesh
                .nodes
                .iter()
                .map(|&p| radial_cutoff(p.norm() / eps, 4.0, 1.0))
                .collect();
            let kz = stiff.matvec(z);
            let wz = profile.matvec(z);
            (dot(&psi, &wz) - dot(&psi, &kz)).abs()
        };

        // On a fixed physical mesh the rescaled-frame spacing is h/ε, so the
        // *larger* ε is the better-resolved run.
        let coarse = residual_for(0.08);
        let fine = residual_for(0.16);
        let ratio = coarse / fine;
        assert!(
            (2.6..9.0).contains(&ratio),
            "expected ~4× second-order drop, got {coarse:.3e} → {fine:.3e} (ratio {ratio:.2})"
        );
    }

    #[test]
    fn probe_right_hand_sides_reproduce_unit_multipliers() {
        let (domain, mesh, ansatz) = boundary_bubble_setup(0.02, 0.12);
        // constrain the dilation too so the probe has a second multiplier
        // that must stay at zero
        let basis = build_kernel_basis(
            &domain,
            &mesh,
            ansatz.points(),
            ansatz.scales(),
            ansatz.eps(),
            DEFAULT_CUTOFF_RADIUS,
            true,
        )
        .unwrap();
        assert_eq!(basis.constrained().len(), 2);
        let op = ProjectedOperator::new(&domain, &mesh, &ansatz, &basis).unwrap();

        // h = χZ (the constrained translation mode) forces φ = 0, c = −1
        let probe = basis.constrained()[0].values.clone();
        let state = op.solve_linear(&probe).unwrap();
        assert!(
            (state.multipliers[0] + 1.0).abs() < 1e-5,
            "translation multiplier {} should be −1",
            state.multipliers[0]
        );
        assert!(state.multipliers[1].abs() < 1e-5);
        let phi_sup = state.phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(phi_sup < 1e-5, "probe correction should vanish, sup {phi_sup:.3e}");

        // h = 0 gives exactly zero
        let zero = op.solve_linear(&vec![0.0; mesh.num_nodes()]).unwrap();
        assert!(zero.phi.iter().all(|&v| v == 0.0));
        assert!(zero.multipliers.iter().all(|&c| c == 0.0));

        // linearity to solver accuracy, plus both saddle residuals
        let s_field = residual_s(&ansatz, &mesh);
        let sa = op.solve_linear(&s_field.values).unwrap();
        assert!(sa.pde_residual < 1e-9, "pde residual {:.3e}", sa.pde_residual);
        assert!(sa.orth_residual < 1e-9, "orthogonality {:.3e}", sa.orth_residual);
        let summed: Vec<f64> =
            s_field.values.iter().zip(&probe).map(|(a, b)| a + b).collect();
        let sb = op.solve_linear(&summed).unwrap();
        let scale = sa.phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..mesh.num_nodes() {
            // φ(S + χZ) = φ(S): the probe part is absorbed by the multiplier
            assert!(
                (sb.phi[i] - sa.phi[i]).abs() < 1e-8 * (1.0 + scale),
                "linearity violated at node {i}"
            );
        }
    }

    /// Shared body: solve the projected nonlinear problem and run the
    /// common convergence assertions; returns `(‖φ‖∞, sweeps)`.
    fn converged_correction(
        domain: &Domain2D,
        mesh: &Mesh,
        ansatz: &Ansatz,
        threshold: f64,
    ) -> (f64, usize) {
        let basis = build_kernel_basis(
            domain,
            mesh,
            ansatz.points(),
            ansatz.scales(),
            ansatz.eps(),
            DEFAULT_CUTOFF_RADIUS,
            false,
        )
        .unwrap();
        let op = ProjectedOperator::new(domain, mesh, ansatz, &basis).unwrap();
        let state = op.solve_nonlinear(threshold).unwrap();

        let log = &state.contraction_log;
        assert!(log.len() >= 2);
        assert!(
            log.last().unwrap() < &FIXED_POINT_TOL,
            "fixed point did not converge: {log:?}"
        );
        // contraction all the way down: every sweep shrinks the update
        for k in 1..log.len() {
            assert!(
                log[k] < log[k - 1],
                "sweep {k} grew the update: {:.3e} -> {:.3e}",
                log[k - 1],
                log[k]
            );
        }
        assert!(state.orth_residual < 1e-8);
        assert!(state.pde_residual < 1e-8);
        // both test configurations sit at reduced-energy critical points
        // (symmetry), so every multiplier stays small
        for c in &state.multipliers {
            assert!(c.abs() < 0.05, "multiplier {c:.3e} at a critical configuration");
        }
        let sup = state.phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let hstar = star_norm_of(&state.phi, ansatz, mesh);
        assert!(hstar.is_finite());
        (sup, log.len())
    }

    #[test]
    fn nonlinear_correction_contracts_in_the_default_regime() {
        // interior bubble at the disk center: the ansatz residual is inside
        // the default contraction threshold, no overrides needed
        let domain = unit_disk();
        let pt = ConcentrationPoint::interior(Point2::ZERO);
        let eps = 0.005;
        let params = ClosureParams::default();
        let probe_mesh =
            generate_mesh(&domain, &MeshParams::with_h(0.2).graded(pt.point, 0.02)).unwrap();
        let probe = GreenSolver::new(&domain, &probe_mesh);
        let d = solve_closure(&probe, &[pt], eps, &params).unwrap().scales[0];
        let mesh = generate_mesh(
            &domain,
            &MeshParams::with_h(0.1).graded(pt.point, eps * d / 8.0),
        )
        .unwrap();
        let ansatz = build_ansatz(&domain, &mesh, &[pt], eps, &params).unwrap();
        assert!(
            residual_s(&ansatz, &mesh).star_norm < DEFAULT_STAR_THRESHOLD,
            "interior residual should sit inside the default threshold"
        );

        let (sup, sweeps) = converged_correction(&domain, &mesh, &ansatz, DEFAULT_STAR_THRESHOLD);
        assert!(sup < 0.5, "correction sup {sup:.3} out of the contraction ball");
        assert!(sweeps <= 20, "took {sweeps} sweeps");
    }

    #[test]
    fn nonlinear_correction_shrinks_with_eps_at_the_boundary() {
        // Boundary bubble: the curvature boundary layer keeps the weighted
        // residual above the default threshold at reachable ε (≈1.4 at
        // ε = 0.01), so the threshold is raised explicitly; the iteration
        // still contracts and ‖φ‖∞ decreases with ε.
        let mut sups = Vec::new();
        for &eps in &[0.01, 0.005] {
            let (domain, mesh, ansatz) = boundary_bubble_setup(eps, 0.1);
            let (sup, sweeps) = converged_correction(&domain, &mesh, &ansatz, 2.0);
            assert!(sup < 0.5, "correction sup {sup:.3} at ε = {eps}");
            assert!(sweeps <= 35, "took {sweeps} sweeps at ε = {eps}");
            sups.push(sup);
        }
        assert!(sups[1] < sups[0], "‖φ‖∞ should shrink with ε: {sups:?}");
    }

    #[test]
    fn newton_keeps_the_isotropic_constant_state_radial() {
        // For a ≡ 1 the discrete problem has an exactly constant solution
        // u = c with c = ε²e^c (row sums of M match the load of 1 under the
        // shared midpoint rule), so Newton from zero must reproduce a
        // constant — the discrete radial-symmetry preservation statement.
        let domain = unit_disk();
        let mesh = generate_mesh(&domain, &MeshParams::with_h(0.15)).unwrap();
        let eps = 0.1;
        let sol =
            newton_solve_full(&domain, &mesh, &vec![0.0; mesh.num_nodes()], &[eps], 12)
                .unwrap();
        assert_eq!(sol.steps.len(), 1);
        assert!(sol.steps[0].iterations <= 8);
        assert!(sol.steps[0].residual < NEWTON_TOL);

        let (lo, hi) = sol
            .u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi - lo < 1e-8, "constant state drifted: spread {:.3e}", hi - lo);

        // c = ε²e^c by scalar fixed point
        let mut c = 0.0_f64;
        for _ in 0..60 {
            c = eps * eps * c.exp();
        }
        assert!((sol.u[0] - c).abs() < 1e-9, "constant {} vs scalar root {c}", sol.u[0]);
        let area: f64 = mesh.areas.iter().sum();
        assert!((sol.steps[0].mass - eps * eps * c.exp() * area).abs() < 1e-12);
    }

    #[test]
    fn newton_polishes_a_boundary_ansatz_and_continues_in_eps() {
        // single boundary spike at the boundary maximum of a = 2 − x₂ (the
        // reduced-energy critical point), seeded by the scale-tuned ansatz,
        // polished at ε = 0.01 and continued down to 0.008
        let domain = build_domain(
            BoundaryCurve::disk(Point2::ZERO, 1.0).unwrap(),
            Weight::from_expr("2 - x2").unwrap(),
        )
        .unwrap();
        let pt = ConcentrationPoint::boundary(&domain, Point2::new(0.0, -1.0));
        let params = ClosureParams::default();
        let probe_mesh =
            generate_mesh(&domain, &MeshParams::with_h(0.2).graded(pt.point, 0.02)).unwrap();
        let probe = GreenSolver::new(&domain, &probe_mesh);
        let d = solve_closure(&probe, &[pt], 0.01, &params).unwrap().scales[0];
        let mesh = generate_mesh(
            &domain,
            &MeshParams::with_h(0.1).graded(pt.point, 0.008 * d / 8.0),
        )
        .unwrap();
        let ansatz = build_ansatz(&domain, &mesh, &[pt], 0.01, &params).unwrap();

        // the curvature boundary layer pushes the best-fitting scale below
        // the closure value, and the tuned seed must improve the residual
        let seed = scale_tuned_seed(&domain, &mesh, &ansatz).unwrap();
        assert!(
            seed.log_scale < 0.0,
            "expected a shrunk scale at a boundary spike, got σ = {:+.3}",
            seed.log_scale
        );

        let sol = newton_solve_full(&domain, &mesh, &seed.u, &[0.01, 0.008], 20).unwrap();
        let four_pi = 4.0 * std::f64::consts::PI;
        assert_eq!(sol.steps.len(), 2);
        assert!(
            sol.steps[0].iterations <= 10,
            "ε = 0.01 took {} Newton steps",
            sol.steps[0].iterations
        );
        assert!(
            sol.steps[1].iterations <= 16,
            "continuation to ε = 0.008 took {} Newton steps",
            sol.steps[1].iterations
        );
        for step in &sol.steps {
            assert!(step.residual < NEWTON_TOL);
            assert!(
                (step.mass - four_pi).abs() < 0.1 * four_pi,
                "mass {:.4} at ε = {} strays from 4π",
                step.mass,
                step.eps
            );
        }
        // the spike sits where it was planted: nodal max at the boundary point
        let (kmax, _) = sol
            .u
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(ka, va), (k, &v)| {
                if v > va {
                    (k, v)
                } else {
                    (ka, va)
                }
            });
        assert!((mesh.nodes[kmax] - pt.point).norm() < 0.05);
    }
}
