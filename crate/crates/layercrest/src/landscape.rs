//! The reduced energy of spike configurations and its critical points.
//!
//! A configuration of concentration points ζ₁…ζ_m with closure-selected
//! scales carries the closed-form energy
//!
//! `F₀ = Σᵢ aᵢcᵢ(2c₀ + 16π|ln ε|) − 4π Σᵢ cᵢ²aᵢH(ζᵢ,ζᵢ)
//!      − 4π Σ_{i≠j} cᵢcⱼaᵢG(ζᵢ,ζⱼ)`,
//!
//! with `aᵢ = a(ζᵢ)`, `cᵢ = 1` interior / `½` boundary, and
//! `c₀ = −4π(2 − ln 8)` the self-energy of a unit-scale spike. `F₀`
//! approximates the full variational energy `J(u) = ½∫a(|∇u|² + u²) −
//! ε²∫a eᵘ` of the corrected solution up to terms that vanish relative to
//! the `|ln ε|` leading part; critical configurations of `F₀` are where
//! true solutions concentrate.
//!
//! Three search scenarios are implemented, mirroring the three ways a
//! configuration can sit:
//!
//! * **interior**: one spike per anchor at inner-normal offset `t/|ln ε|`
//!   from a boundary extremum of the weight, where the offset balances the
//!   spike self-energy against the inward decay of the weight
//!   (`t* = −a/∂_ν a`);
//! * **boundary-separated**: spikes pinned at distinct extrema of the
//!   weight along the boundary;
//! * **boundary-cluster**: several spikes crowding one boundary maximum of
//!   the weight, held apart by their Green-function repulsion.
//!
//! Located points come with sign-box certificates: the relevant gradient
//! map is evaluated on the two faces of a box around the root, and a sign
//! change certifies a zero of nonvanishing topological degree inside —
//! the numerical stand-in for a degree argument.

use rayon::prelude::*;

use std::f64::consts::PI;

use crate::ansatz::{
    check_admissible, solve_green_data, Ansatz, ClosureParams, ConcentrationPoint,
};
use crate::domain::{Domain2D, LiftSpec, Mesh, Weight};
use crate::fem::{assemble, dot, exp_coeff, integrate, point_coeff};
use crate::greens::GreenSolver;
use crate::numerics::{brent_root, Point2};
use crate::{Error, Result};

/// Nodal fields with values at or above this would overflow `exp`.
const EXP_OVERFLOW: f64 = 700.0;

/// Sub-intervals scanned when bracketing a root of the tangential map.
const BRACKET_SCAN: usize = 48;

/// Arc step for finite-difference gradients of the discrete reduced energy
/// (cluster ascent and its certificates).
const CLUSTER_FD_STEP: f64 = 1e-4;

/// Self-energy constant of a unit-scale spike: `−4π(2 − ln 8)`.
pub fn spike_energy_constant() -> f64 {
    -4.0 * PI * (2.0 - 8.0_f64.ln())
}

fn log_eps(eps: f64) -> Result<f64> {
    if !(eps > 0.0) || eps >= 1.0 {
        return Err(Error::config(format!("ε must lie in (0, 1), got {eps}")));
    }
    Ok(eps.ln().abs())
}

// ---------------------------------------------------------------------
// Reduced energy
// ---------------------------------------------------------------------

/// Leading and interaction parts of the reduced energy, from Green data.
/// `leading` carries the per-spike self energies (the `|ln ε|` growth),
/// `interaction` the Robin and cross-Green couplings; `F₀` is their sum.
fn f0_terms(
    l: f64,
    coeffs: &[f64],
    weights: &[f64],
    h_diag: &[f64],
    g_cross: &[Vec<f64>],
) -> (f64, f64) {
    let c0 = spike_energy_constant();
    let mut leading = 0.0;
    let mut interaction = 0.0;
    for i in 0..coeffs.len() {
        leading += weights[i] * coeffs[i] * (2.0 * c0 + 16.0 * PI * l);
        interaction -= 4.0 * PI * coeffs[i] * coeffs[i] * weights[i] * h_diag[i];
        for j in 0..coeffs.len() {
            if j != i {
                interaction -= 4.0 * PI * coeffs[i] * coeffs[j] * weights[i] * g_cross[i][j];
            }
        }
    }
    (leading, interaction)
}

fn f0_from_green(
    l: f64,
    coeffs: &[f64],
    weights: &[f64],
    h_diag: &[f64],
    g_cross: &[Vec<f64>],
) -> f64 {
    let (leading, interaction) = f0_terms(l, coeffs, weights, h_diag, g_cross);
    leading + interaction
}

/// Closed-form reduced energy of a point configuration, evaluated from
/// fresh Green solves. Rejects configurations that violate the separation
/// or boundary-distance floors; does *not* require the closure scales to
/// be in the concentration regime, so it can sweep whole landscapes.
pub fn reduced_f0(
    solver: &GreenSolver,
    points: &[ConcentrationPoint],
    eps: f64,
    params: &ClosureParams,
) -> Result<f64> {
    let l = log_eps(eps)?;
    check_admissible(solver.domain(), points, eps, params)?;
    let (_, h_diag, g_cross) = solve_green_data(solver, points)?;
    let coeffs: Vec<f64> = points.iter().map(|p| p.tag.coefficient()).collect();
    let weights: Vec<f64> =
        points.iter().map(|p| solver.domain().weight().eval(p.point)).collect();
    Ok(f0_from_green(l, &coeffs, &weights, &h_diag, &g_cross))
}

// ---------------------------------------------------------------------
// Full variational energy
// ---------------------------------------------------------------------

/// The energy `J(u) = ½∫a(|∇u|² + u²) − ε²∫a eᵘ` split against the
/// closed-form prediction of the generating spike configuration.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    /// Quadrature value of `J(u)`.
    pub value: f64,
    /// Per-spike self energies `Σ aᵢcᵢ(2c₀ + 16π|ln ε|)` (zero without
    /// configuration metadata).
    pub leading: f64,
    /// Robin and cross-Green couplings (zero without metadata).
    pub interaction: f64,
    /// `value − leading − interaction`.
    pub remainder: f64,
}

/// Evaluates `J(u)` by FEM quadrature. When the field comes from a spike
/// ansatz, pass it to split the value into the closed-form leading and
/// interaction parts plus a remainder; otherwise the whole value lands in
/// `remainder`.
pub fn energy(
    domain: &Domain2D,
    mesh: &Mesh,
    u: &[f64],
    eps: f64,
    ansatz: Option<&Ansatz>,
) -> Result<EnergyReport> {
    let l = log_eps(eps)?;
    if u.len() != mesh.num_nodes() {
        return Err(Error::config(format!(
            "field has {} values for a mesh with {} nodes",
            u.len(),
            mesh.num_nodes()
        )));
    }
    let sup = u.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    if !sup.is_finite() || u.iter().any(|v| !v.is_finite()) {
        return Err(Error::config("field contains non-finite values"));
    }
    if sup >= EXP_OVERFLOW {
        return Err(Error::config(format!(
            "field maximum {sup:.1} would overflow e^u; not a concentration-scale field"
        )));
    }

    let w = |p: Point2| domain.weight().eval(p);
    let quad_form = assemble(mesh, point_coeff(w), point_coeff(w));
    let quadratic = 0.5 * dot(u, &quad_form.matvec(u));
    let exponential = eps * eps * integrate(mesh, exp_coeff(mesh, u, w));
    let value = quadratic - exponential;

    let (leading, interaction) = match ansatz {
        Some(a) => {
            let coeffs: Vec<f64> = a.points().iter().map(|p| p.tag.coefficient()).collect();
            let weights: Vec<f64> =
                a.points().iter().map(|p| domain.weight().eval(p.point)).collect();
            f0_terms(l, &coeffs, &weights, a.h_diag(), a.g_cross())
        }
        None => (0.0, 0.0),
    };
    Ok(EnergyReport { value, leading, interaction, remainder: value - leading - interaction })
}

// ---------------------------------------------------------------------
// Gradient maps
// ---------------------------------------------------------------------

/// Tangential gradient map along the boundary: `16π·∂_s a(γ(s))`. Its
/// roots are the candidate spike anchors; the sign pattern around a root
/// distinguishes maxima (falling) from minima (rising).
pub fn tangential_gradient_map(domain: &Domain2D, s: f64) -> f64 {
    let curve = domain.curve();
    let x = curve.point(s);
    16.0 * PI * domain.weight().grad(x).dot(curve.unit_tangent(s))
}

/// Interior balance map in the inner-normal offset `t`:
/// `16π·[a(γ(s))/t + ∂_ν a(γ(s))]` with `ν` the inner normal. Where the
/// weight decays inward (`∂_ν a < 0`) it falls from `+∞` through its root
/// `t* = −a/∂_ν a`, the offset at which the spike self-energy gradient
/// balances the weight decay.
pub fn normal_balance_map(domain: &Domain2D, s: f64, t: f64) -> f64 {
    debug_assert!(t > 0.0, "normal offset must be positive");
    let curve = domain.curve();
    let x = curve.point(s);
    let a = domain.weight().eval(x);
    let d_nu = domain.weight().grad(x).dot(curve.inner_normal(s));
    16.0 * PI * (a / t + d_nu)
}

// ---------------------------------------------------------------------
// Critical-point search
// ---------------------------------------------------------------------

/// Which configuration family a search ran over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Spikes at inner-normal offset `t/|ln ε|` from boundary extrema.
    Interior,
    /// Spikes at separated boundary extrema of the weight.
    BoundarySeparated,
    /// Several spikes clustered at one boundary maximum.
    BoundaryCluster,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::Interior => "interior",
            Scenario::BoundarySeparated => "separated",
            Scenario::BoundaryCluster => "cluster",
        })
    }
}

/// Which coordinate a sign certificate boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateAxis {
    /// Arc-length position along the boundary.
    Arc,
    /// Inner-normal offset (interior scenario only).
    Normal,
}

/// Gradient-map values on the two faces of a box around a located root.
/// A negative product certifies a zero of nonvanishing degree inside the
/// box; a falling sign pattern (+ → −) brackets a local maximum of the
/// underlying potential, a rising one a minimum.
#[derive(Debug, Clone, Copy)]
pub struct SignCertificate {
    pub axis: CertificateAxis,
    /// Map value on the lower box face.
    pub lower_face: f64,
    /// Map value on the upper box face.
    pub upper_face: f64,
}

impl SignCertificate {
    pub fn certified(&self) -> bool {
        self.lower_face * self.upper_face < 0.0
    }

    /// `true` when the map falls through zero (local maximum inside).
    pub fn is_falling(&self) -> bool {
        self.lower_face > 0.0 && self.upper_face < 0.0
    }
}

/// A certified critical configuration of the reduced energy.
#[derive(Debug, Clone)]
pub struct CriticalPointResult {
    pub scenario: Scenario,
    /// Located concentration points, tagged interior or boundary.
    pub points: Vec<ConcentrationPoint>,
    /// Arc-length parameters of the anchors, one per point.
    pub arc_params: Vec<f64>,
    /// Inner-normal offsets (interior scenario; empty otherwise).
    pub t_values: Vec<f64>,
    /// Sign-box certificates: one arc certificate per point, followed by
    /// one normal certificate per point in the interior scenario.
    pub certificates: Vec<SignCertificate>,
    /// Reduced energy of the located configuration.
    pub f0: f64,
    /// Sup norm of the gradient maps at the located configuration.
    pub grad_norm: f64,
    /// Pairwise euclidean distances between located points
    /// (lexicographic i<j order; empty for a single point).
    pub separations: Vec<f64>,
}

/// Knobs for the critical-point searches.
#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// Half-width of the arc window scanned around each anchor.
    pub bracket_radius: f64,
    /// Admissible interval for the inner-normal offset `t`.
    pub t_interval: (f64, f64),
    /// Coordinate tolerance for 1D root refinement.
    pub root_tol: f64,
    /// Largest admissible gradient-map value at a located root.
    pub map_tol: f64,
    /// Half-width of the sign-certificate boxes (arc length).
    pub certificate_radius: f64,
    /// Sup-norm tolerance on the discrete reduced-energy gradient that
    /// ends the cluster ascent.
    pub cluster_grad_tol: f64,
    /// Cap on cluster ascent steps.
    pub max_ascent_steps: usize,
    /// Weight of the log barrier holding cluster iterates above the
    /// separation floor.
    pub barrier_weight: f64,
    /// Separation and boundary-distance floor parameters.
    pub closure: ClosureParams,
}

impl Default for SearchOptions {
    fn default() -> SearchOptions {
        SearchOptions {
            bracket_radius: 0.5,
            t_interval: (0.125, 8.0),
            root_tol: 1e-12,
            map_tol: 1e-6,
            certificate_radius: 0.02,
            cluster_grad_tol: 5e-2,
            max_ascent_steps: 300,
            barrier_weight: 1e-3,
            closure: ClosureParams::default(),
        }
    }
}

/// Locates a certified root of the tangential gradient map in the window
/// around `s_center`, preferring the root nearest the anchor.
fn locate_arc_root(
    domain: &Domain2D,
    s_center: f64,
    opts: &SearchOptions,
) -> Result<(f64, SignCertificate)> {
    let r = opts.bracket_radius;
    let n = BRACKET_SCAN;
    let grid: Vec<f64> =
        (0..=n).map(|k| s_center - r + 2.0 * r * k as f64 / n as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&s| tangential_gradient_map(domain, s)).collect();

    // Candidate roots: exact grid hits and sign-change intervals, ranked
    // by distance to the anchor.
    let mut best: Option<f64> = None;
    let mut best_dist = f64::INFINITY;
    for k in 0..=n {
        if values[k].abs() < 1e-11 {
            let d = (grid[k] - s_center).abs();
            if d < best_dist {
                best = Some(grid[k]);
                best_dist = d;
            }
        }
    }
    for k in 0..n {
        if values[k].signum() != values[k + 1].signum()
            && values[k].abs() >= 1e-11
            && values[k + 1].abs() >= 1e-11
        {
            let mid = 0.5 * (grid[k] + grid[k + 1]);
            let d = (mid - s_center).abs();
            if d < best_dist {
                let map = |s: f64| tangential_gradient_map(domain, s);
                let root = brent_root(&map, grid[k], grid[k + 1], opts.root_tol)
                    .expect("scan found a sign change");
                best = Some(root);
                best_dist = d;
            }
        }
    }

    let root = best.ok_or_else(|| Error::Search {
        context: format!(
            "the tangential gradient of the weight shows no root within ±{r} of arc \
             position {s_center:.4}"
        ),
    })?;
    let cert = SignCertificate {
        axis: CertificateAxis::Arc,
        lower_face: tangential_gradient_map(domain, root - opts.certificate_radius),
        upper_face: tangential_gradient_map(domain, root + opts.certificate_radius),
    };
    if !cert.certified() {
        return Err(Error::Search {
            context: format!(
                "no sign change of the tangential gradient across the box around arc \
                 position {root:.4}: the extremum is not strict"
            ),
        });
    }
    let residual = tangential_gradient_map(domain, root).abs();
    if residual > opts.map_tol {
        return Err(Error::Search {
            context: format!(
                "tangential gradient {residual:.3e} at the located root exceeds the \
                 criticality tolerance {:.1e}",
                opts.map_tol
            ),
        });
    }
    Ok((root, cert))
}

fn pairwise_distances(points: &[ConcentrationPoint]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            out.push(points[i].point.dist(points[j].point));
        }
    }
    out
}

/// Locates the interior critical configuration grown from a boundary
/// extremum of the weight: refines the anchor along the boundary, then
/// balances the inner-normal offset, returning the spike position
/// `ζ = γ(s*) + t*/|ln ε| · ν(s*)`.
pub fn search_interior(
    solver: &GreenSolver,
    anchor: Point2,
    eps: f64,
    opts: &SearchOptions,
) -> Result<CriticalPointResult> {
    let l = log_eps(eps)?;
    let domain = solver.domain();
    let curve = domain.curve();

    let (s0, _, _) = curve.closest_point(anchor);
    let (s_star, arc_cert) = locate_arc_root(domain, s0, opts)?;

    let x = curve.point(s_star);
    let nu = curve.inner_normal(s_star);
    let d_nu = domain.weight().grad(x).dot(nu);
    if !(d_nu < 0.0) {
        return Err(Error::Search {
            context: format!(
                "the weight does not decay toward the interior at the located anchor \
                 (inner-normal derivative {d_nu:.3e} ≥ 0); no balance offset exists"
            ),
        });
    }

    let (t_lo, t_hi) = opts.t_interval;
    if !(t_lo > 0.0) || !(t_hi > t_lo) {
        return Err(Error::config(format!(
            "offset interval must satisfy 0 < lo < hi, got ({t_lo}, {t_hi})"
        )));
    }
    let map = |t: f64| normal_balance_map(domain, s_star, t);
    let t_star = brent_root(&map, t_lo, t_hi, opts.root_tol).ok_or_else(|| Error::Search {
        context: format!(
            "the balance map does not change sign on the admissible offset interval \
             [{t_lo}, {t_hi}] at arc position {s_star:.4}"
        ),
    })?;
    let normal_cert = SignCertificate {
        axis: CertificateAxis::Normal,
        lower_face: map((0.75 * t_star).max(t_lo)),
        upper_face: map((1.25 * t_star).min(t_hi)),
    };

    let zeta = x + nu * (t_star / l);
    if !domain.is_inside(zeta) {
        return Err(Error::Search {
            context: format!(
                "the balanced offset t*/|ln ε| = {:.4} lands outside the domain; \
                 ε = {eps} is too large for this weight",
                t_star / l
            ),
        });
    }
    let point = ConcentrationPoint::interior(zeta);
    let f0 = reduced_f0(solver, std::slice::from_ref(&point), eps, &opts.closure)?;
    let grad_norm = tangential_gradient_map(domain, s_star).abs().max(map(t_star).abs());

    Ok(CriticalPointResult {
        scenario: Scenario::Interior,
        points: vec![point],
        arc_params: vec![s_star],
        t_values: vec![t_star],
        certificates: vec![arc_cert, normal_cert],
        f0,
        grad_norm,
        separations: Vec::new(),
    })
}

/// Locates one spike anchor per supplied boundary anchor by refining each
/// to the nearest certified extremum of the weight along the boundary.
pub fn search_boundary_separated(
    solver: &GreenSolver,
    anchors: &[Point2],
    eps: f64,
    opts: &SearchOptions,
) -> Result<CriticalPointResult> {
    let l = log_eps(eps)?;
    if anchors.is_empty() {
        return Err(Error::config("at least one anchor is required"));
    }
    let domain = solver.domain();
    let curve = domain.curve();

    let mut arc_params = Vec::with_capacity(anchors.len());
    let mut certificates = Vec::with_capacity(anchors.len());
    let mut points = Vec::with_capacity(anchors.len());
    let mut grad_norm = 0.0_f64;
    for anchor in anchors {
        let (s0, _, _) = curve.closest_point(*anchor);
        let (s_star, cert) = locate_arc_root(domain, s0, opts)?;
        grad_norm = grad_norm.max(tangential_gradient_map(domain, s_star).abs());
        arc_params.push(s_star);
        certificates.push(cert);
        points.push(ConcentrationPoint::boundary(domain, curve.point(s_star)));
    }

    let floor = opts.closure.sep_coeff * l.powf(-opts.closure.kappa);
    for i in 0..arc_params.len() {
        for j in i + 1..arc_params.len() {
            let gap = curve.arc_distance(arc_params[i], arc_params[j]);
            if gap < floor {
                return Err(Error::Search {
                    context: format!(
                        "anchors {i} and {j} refine to arc positions {:.4} and {:.4}, \
                         only {gap:.3e} apart (separation floor {floor:.3e})",
                        arc_params[i], arc_params[j]
                    ),
                });
            }
        }
    }

    let f0 = reduced_f0(solver, &points, eps, &opts.closure)?;
    let separations = pairwise_distances(&points);
    Ok(CriticalPointResult {
        scenario: Scenario::BoundarySeparated,
        points,
        arc_params,
        t_values: Vec::new(),
        certificates,
        f0,
        grad_norm,
        separations,
    })
}

/// Discrete reduced energy of a cluster configuration given by arc
/// positions, with an optional log barrier above the separation floor.
/// Returns `None` when the configuration violates the floor.
fn cluster_objective(
    solver: &GreenSolver,
    arcs: &[f64],
    eps: f64,
    floor: f64,
    barrier_weight: f64,
    params: &ClosureParams,
) -> Result<Option<f64>> {
    let domain = solver.domain();
    let curve = domain.curve();
    let points: Vec<ConcentrationPoint> = arcs
        .iter()
        .map(|&s| ConcentrationPoint::boundary(domain, curve.point(s)))
        .collect();
    let mut barrier = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let gap = points[i].point.dist(points[j].point);
            if gap <= floor * (1.0 + 1e-9) {
                return Ok(None);
            }
            barrier += barrier_weight * (gap - floor).ln();
        }
    }
    let f0 = reduced_f0(solver, &points, eps, params)?;
    Ok(Some(f0 + barrier))
}

/// Maximizes the reduced energy of `m` boundary spikes near one boundary
/// maximum of the weight by projected gradient ascent in the arc
/// coordinates, with a log barrier holding the iterates above the
/// separation floor. The weight pulls the spikes toward the anchor; their
/// Green-function repulsion holds them apart.
pub fn search_boundary_cluster(
    solver: &GreenSolver,
    anchor: Point2,
    m: usize,
    eps: f64,
    opts: &SearchOptions,
) -> Result<CriticalPointResult> {
    let l = log_eps(eps)?;
    if m == 0 {
        return Err(Error::config("cluster size must be at least 1"));
    }
    let domain = solver.domain();
    let curve = domain.curve();

    let (s0_raw, _, _) = curve.closest_point(anchor);
    let (s0, anchor_cert) = locate_arc_root(domain, s0_raw, opts)?;
    if !anchor_cert.is_falling() {
        return Err(Error::Search {
            context: format!(
                "the anchor refines to arc position {s0:.4}, which is not a strict \
                 local maximum of the weight along the boundary"
            ),
        });
    }

    if m == 1 {
        let point = ConcentrationPoint::boundary(domain, curve.point(s0));
        let f0 = reduced_f0(solver, std::slice::from_ref(&point), eps, &opts.closure)?;
        return Ok(CriticalPointResult {
            scenario: Scenario::BoundaryCluster,
            points: vec![point],
            arc_params: vec![s0],
            t_values: Vec::new(),
            certificates: vec![anchor_cert],
            f0,
            grad_norm: tangential_gradient_map(domain, s0).abs(),
            separations: Vec::new(),
        });
    }

    let floor = opts.closure.sep_coeff * l.powf(-opts.closure.kappa);
    let objective = |arcs: &[f64]| {
        cluster_objective(solver, arcs, eps, floor, opts.barrier_weight, &opts.closure)
    };

    // Symmetric initial spread about the anchor, comfortably above the floor.
    let gap0 = 1.5 * floor;
    let mut arcs: Vec<f64> =
        (0..m).map(|k| s0 + gap0 * (k as f64 - 0.5 * (m as f64 - 1.0))).collect();
    let mut value = objective(&arcs)?.ok_or_else(|| Error::Search {
        context: format!(
            "the initial cluster spread {gap0:.3e} already violates the separation \
             floor {floor:.3e}"
        ),
    })?;

    let mut grad = vec![0.0_f64; m];
    let mut converged = false;
    for _ in 0..opts.max_ascent_steps {
        // Central finite-difference gradient of the barriered objective.
        let mut g_inf = 0.0_f64;
        for k in 0..m {
            let mut fwd = arcs.clone();
            fwd[k] += CLUSTER_FD_STEP;
            let mut bwd = arcs.clone();
            bwd[k] -= CLUSTER_FD_STEP;
            let (fp, fm) = match (objective(&fwd)?, objective(&bwd)?) {
                (Some(fp), Some(fm)) => (fp, fm),
                // A face hit the floor: steer with a one-sided difference.
                (Some(fp), None) => (fp, value),
                (None, Some(fm)) => (value, fm),
                (None, None) => {
                    return Err(Error::Search {
                        context: "cluster collapse: both finite-difference faces violate \
                                  the separation floor"
                            .into(),
                    })
                }
            };
            grad[k] = (fp - fm) / (2.0 * CLUSTER_FD_STEP);
            g_inf = g_inf.max(grad[k].abs());
        }
        if g_inf < opts.cluster_grad_tol {
            converged = true;
            break;
        }

        // Backtracking ascent step, first move capped at 0.05 arc length.
        let mut eta = 0.05 / g_inf;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> =
                arcs.iter().zip(&grad).map(|(s, g)| s + eta * g).collect();
            if let Some(trial_value) = objective(&trial)? {
                if trial_value > value + 1e-4 * eta * g_inf * g_inf {
                    arcs = trial;
                    value = trial_value;
                    accepted = true;
                    break;
                }
            }
            eta *= 0.5;
        }
        if !accepted {
            let min_gap = {
                let pts: Vec<Point2> = arcs.iter().map(|&s| curve.point(s)).collect();
                let mut min = f64::INFINITY;
                for i in 0..pts.len() {
                    for j in i + 1..pts.len() {
                        min = min.min(pts[i].dist(pts[j]));
                    }
                }
                min
            };
            if min_gap < 1.2 * floor {
                return Err(Error::Search {
                    context: format!(
                        "cluster collapse: ascent pinned at separation {min_gap:.3e} \
                         (floor {floor:.3e}) without reaching stationarity"
                    ),
                });
            }
            return Err(Error::Search {
                context: format!(
                    "cluster ascent stalled with gradient sup norm {g_inf:.3e} above \
                     the tolerance {:.1e}",
                    opts.cluster_grad_tol
                ),
            });
        }
    }
    if !converged {
        return Err(Error::Search {
            context: format!(
                "cluster ascent did not reach the gradient tolerance within {} steps",
                opts.max_ascent_steps
            ),
        });
    }

    arcs.sort_by(|a, b| a.partial_cmp(b).expect("arc coordinates are finite"));

    // Barrier-free sign certificates: the partial derivative of the
    // reduced energy along each arc coordinate, evaluated on the two box
    // faces, must fall through zero (coordinate-wise local maximum).
    let plain = |arcs: &[f64]| cluster_objective(solver, arcs, eps, floor, 0.0, &opts.closure);
    let partial = |arcs: &[f64], k: usize| -> Result<f64> {
        let mut fwd = arcs.to_vec();
        fwd[k] += CLUSTER_FD_STEP;
        let mut bwd = arcs.to_vec();
        bwd[k] -= CLUSTER_FD_STEP;
        match (plain(&fwd)?, plain(&bwd)?) {
            (Some(fp), Some(fm)) => Ok((fp - fm) / (2.0 * CLUSTER_FD_STEP)),
            _ => Err(Error::Search {
                context: "certificate face violates the separation floor".into(),
            }),
        }
    };
    let mut certificates = Vec::with_capacity(m);
    for k in 0..m {
        let mut lower = arcs.clone();
        lower[k] -= opts.certificate_radius;
        let mut upper = arcs.clone();
        upper[k] += opts.certificate_radius;
        let cert = SignCertificate {
            axis: CertificateAxis::Arc,
            lower_face: partial(&lower, k)?,
            upper_face: partial(&upper, k)?,
        };
        if !cert.certified() || !cert.is_falling() {
            return Err(Error::Search {
                context: format!(
                    "coordinate {k} of the located cluster is not certified as a \
                     local maximum (faces {:.3e}, {:.3e})",
                    cert.lower_face, cert.upper_face
                ),
            });
        }
        certificates.push(cert);
    }

    let points: Vec<ConcentrationPoint> = arcs
        .iter()
        .map(|&s| ConcentrationPoint::boundary(domain, curve.point(s)))
        .collect();
    let f0 = reduced_f0(solver, &points, eps, &opts.closure)?;
    let mut grad_norm = 0.0_f64;
    for k in 0..m {
        grad_norm = grad_norm.max(partial(&arcs, k)?.abs());
    }
    let separations = pairwise_distances(&points);
    let arc_params = arcs.iter().map(|&s| curve.wrap_s(s)).collect();

    Ok(CriticalPointResult {
        scenario: Scenario::BoundaryCluster,
        points,
        arc_params,
        t_values: Vec::new(),
        certificates,
        f0,
        grad_norm,
        separations,
    })
}

// ---------------------------------------------------------------------
// Landscape sweeps
// ---------------------------------------------------------------------

/// One grid cell of a reduced-energy sweep: position parameters, the
/// energy of a single spike there, and the gradient-map values.
#[derive(Debug, Clone, Copy)]
pub struct LandscapeSample {
    /// Arc-length position of the anchor.
    pub s: f64,
    /// Inner-normal offset (zero for boundary sweeps).
    pub t: f64,
    /// Reduced energy of the single-spike configuration.
    pub f0: f64,
    /// Tangential gradient map at `s`.
    pub grad_s: f64,
    /// Balance map at `(s, t)` (zero for boundary sweeps).
    pub grad_t: f64,
}

/// Sweeps the single-spike reduced energy along the boundary. Cells whose
/// Green solve fails are omitted.
pub fn sweep_boundary(
    solver: &GreenSolver,
    s_values: &[f64],
    eps: f64,
    params: &ClosureParams,
) -> Result<Vec<LandscapeSample>> {
    log_eps(eps)?;
    let domain = solver.domain();
    let rows: Vec<Option<LandscapeSample>> = s_values
        .par_iter()
        .map(|&s| {
            let zeta = domain.curve().point(s);
            let point = ConcentrationPoint::boundary(domain, zeta);
            reduced_f0(solver, std::slice::from_ref(&point), eps, params).ok().map(|f0| {
                LandscapeSample {
                    s,
                    t: 0.0,
                    f0,
                    grad_s: tangential_gradient_map(domain, s),
                    grad_t: 0.0,
                }
            })
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Sweeps the single-spike reduced energy over an (arc, offset) grid of
/// interior positions `ζ = γ(s) + t/|ln ε|·ν(s)`. Grid cells that leave
/// the domain or violate the boundary-distance floor are omitted.
pub fn sweep_interior(
    solver: &GreenSolver,
    s_values: &[f64],
    t_values: &[f64],
    eps: f64,
    params: &ClosureParams,
) -> Result<Vec<LandscapeSample>> {
    let l = log_eps(eps)?;
    let domain = solver.domain();
    let curve = domain.curve();
    let mut cells = Vec::with_capacity(s_values.len() * t_values.len());
    for &s in s_values {
        for &t in t_values {
            if t > 0.0 {
                cells.push((s, t));
            }
        }
    }
    let rows: Vec<Option<LandscapeSample>> = cells
        .par_iter()
        .map(|&(s, t)| {
            let zeta = curve.point(s) + curve.inner_normal(s) * (t / l);
            if !domain.is_inside(zeta) {
                return None;
            }
            let point = ConcentrationPoint::interior(zeta);
            reduced_f0(solver, std::slice::from_ref(&point), eps, params).ok().map(|f0| {
                LandscapeSample {
                    s,
                    t,
                    f0,
                    grad_s: tangential_gradient_map(domain, s),
                    grad_t: normal_balance_map(domain, s, t),
                }
            })
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

// ---------------------------------------------------------------------
// Mass quantization and the rotational lift
// ---------------------------------------------------------------------

/// Concentrated-mass accounting of a solution field: totals, a Voronoi
/// split over the concentration points, the quantization targets, and
/// (when a lift is supplied) the mass of the lifted layered solution.
#[derive(Debug, Clone)]
pub struct MassReport {
    /// `ε²∫_Ω eᵘ dx`.
    pub total_plain: f64,
    /// `ε²∫_Ω a eᵘ dx`.
    pub total_weighted: f64,
    /// Per-point share of `total_plain` over Voronoi cells of the points.
    pub per_point_plain: Vec<f64>,
    /// Per-point share of `total_weighted`.
    pub per_point_weighted: Vec<f64>,
    /// Quantization targets `8π cᵢ` (8π interior, 4π boundary).
    pub expected_plain: Vec<f64>,
    /// Mass of the lifted solution, `Π ω_{Mᵢ−1} · ε²∫ a eᵘ`.
    pub lifted_total: Option<f64>,
    /// Lifted quantization target `Σ 8π cᵢ·|Ξ(ζᵢ)|` with `|Ξ(ζ)|` the
    /// orbit measure through ζ.
    pub lifted_expected: Option<f64>,
}

fn lift_matches_weight(spec: &LiftSpec, w: &Weight) -> bool {
    let (m1, mn) = spec.exponents();
    match w {
        Weight::Power { m1: w1, mn: wn } => *w1 == m1 && *wn == mn,
        Weight::Constant { value } => m1 == 1 && mn == 1 && *value == 1.0,
        Weight::Expr { .. } => false,
    }
}

/// Integrates the concentrated mass of a solution field and splits it
/// over the concentration points by nearest-point (Voronoi) assignment.
/// With a lift, the planar weighted mass is converted to the mass of the
/// rotationally symmetric layered solution via the orbit measures.
pub fn quantize_and_lift(
    domain: &Domain2D,
    mesh: &Mesh,
    u: &[f64],
    eps: f64,
    points: &[ConcentrationPoint],
    lift: Option<&LiftSpec>,
) -> Result<MassReport> {
    log_eps(eps)?;
    if points.is_empty() {
        return Err(Error::config("at least one concentration point is required"));
    }
    if u.len() != mesh.num_nodes() {
        return Err(Error::config(format!(
            "field has {} values for a mesh with {} nodes",
            u.len(),
            mesh.num_nodes()
        )));
    }
    let sup = u.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    if !sup.is_finite() || u.iter().any(|v| !v.is_finite()) {
        return Err(Error::config("field contains non-finite values"));
    }
    if sup >= EXP_OVERFLOW {
        return Err(Error::config(format!(
            "field maximum {sup:.1} would overflow e^u; not a concentration-scale field"
        )));
    }
    if let Some(spec) = lift {
        if !lift_matches_weight(spec, domain.weight()) {
            let (m1, mn) = spec.exponents();
            return Err(Error::config(format!(
                "a lift with sphere exponents ({m1}, {mn}) requires the weight {}, \
                 but the domain carries {}",
                spec.matching_weight().describe(),
                domain.weight().describe()
            )));
        }
    }

    let m = points.len();
    let eps2 = eps * eps;
    let mut per_point_plain = vec![0.0_f64; m];
    let mut per_point_weighted = vec![0.0_f64; m];
    // Midpoint-rule quadrature pass; each quadrature point contributes to
    // the nearest concentration point's cell.
    const MIDPOINT_BARY: [[f64; 3]; 3] =
        [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
    for t in 0..mesh.num_triangles() {
        let [i, j, k] = mesh.triangles[t];
        let wq = mesh.areas[t] / 3.0;
        for b in MIDPOINT_BARY {
            let p = mesh.nodes[i] * b[0] + mesh.nodes[j] * b[1] + mesh.nodes[k] * b[2];
            let e = (b[0] * u[i] + b[1] * u[j] + b[2] * u[k]).exp();
            let mut nearest = 0;
            let mut nearest_d = f64::INFINITY;
            for (idx, pt) in points.iter().enumerate() {
                let d = (p - pt.point).norm_sq();
                if d < nearest_d {
                    nearest_d = d;
                    nearest = idx;
                }
            }
            per_point_plain[nearest] += eps2 * wq * e;
            per_point_weighted[nearest] += eps2 * wq * domain.weight().eval(p) * e;
        }
    }

    let total_plain = per_point_plain.iter().sum();
    let total_weighted: f64 = per_point_weighted.iter().sum();
    let expected_plain: Vec<f64> =
        points.iter().map(|p| 8.0 * PI * p.tag.coefficient()).collect();

    let (lifted_total, lifted_expected) = match lift {
        Some(spec) => {
            let expected: f64 = points
                .iter()
                .map(|p| 8.0 * PI * p.tag.coefficient() * spec.orbit_measure(p.point))
                .sum();
            (Some(spec.measure_factor() * total_weighted), Some(expected))
        }
        None => (None, None),
    };

    Ok(MassReport {
        total_plain,
        total_weighted,
        per_point_plain,
        per_point_weighted,
        expected_plain,
        lifted_total,
        lifted_expected,
    })
}
