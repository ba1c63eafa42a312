//! Multi-bubble approximate solutions.
//!
//! A *bubble* is the entire-plane profile `U_{d,ζ}(x) =
//! ln(8d²/(ε²d² + |x−ζ|²)²)`, the local shape of every concentration spike.
//! Its *projection* `PU` corrects it for the weighted Neumann problem:
//! `ΔPU + γ·∇PU − PU + ε²e^U = 0`, `∂_ν PU = 0`, with `γ = ∇ln a`. Writing
//! `PU = U + H_b` and using `ΔU = −ε²e^U` exactly, the correction solves the
//! smooth-data problem
//!
//! `∫ a∇H_b·∇ψ + aH_bψ = ∫ a(γ·∇U − U)ψ dx − ∮ a·∂_νU·ψ ds`,
//!
//! so no singular quadrature is needed — only the bubble core must be
//! resolved by the mesh. The composite `u_ε = Σ PU_i` becomes an
//! approximate solution of `Δu + γ·∇u − u + ε²e^u = 0` once the scales
//! `d_i` satisfy the closure condition
//! `ln(8d_i²) = c_iH(ζ_i,ζ_i) + Σ_{j≠i} c_jG(ζ_i,ζ_j)` (`c_i = 1` interior,
//! `½` boundary), which this module evaluates in closed form from the Green
//! data. The leftover is measured by the rescaled residual `S` in a weighted
//! sup norm that discounts the far field at the bubble rate.

use rayon::prelude::*;

use crate::domain::{Domain2D, Mesh};
use crate::fem::{assemble_boundary_load, assemble_load, integrate, point_coeff, solve_cg};
use crate::greens::{GreenField, GreenSolver, PoleKind};
use crate::numerics::Point2;
use crate::{Error, Result};

/// The concentration regime assumes `ε·d → 0`; constructions reject
/// configurations with `ε·d` at or above this.
pub const SCALE_REGIME_LIMIT: f64 = 0.1;
/// Decay exponent σ of the residual weight `ε² + Σ(1+|y−ζ_i'|)^{−2−σ}`.
/// Any σ ∈ (0,1) gives an equivalent norm; ½ balances core and far field.
pub const STAR_SIGMA: f64 = 0.5;
const CG_TOL: f64 = 1e-11;
const CG_MAX_ITER: usize = 50_000;

/// Thresholds under which a point configuration leaves the asymptotic
/// regime: pairwise separation ≥ `sep_coeff·|ln ε|^{−κ}` and, for interior
/// points, distance to the boundary ≥ `dist_coeff·|ln ε|^{−κ}`.
#[derive(Debug, Clone, Copy)]
pub struct ClosureParams {
    pub kappa: f64,
    pub sep_coeff: f64,
    pub dist_coeff: f64,
}

impl Default for ClosureParams {
    fn default() -> ClosureParams {
        ClosureParams { kappa: 1.0, sep_coeff: 1.0, dist_coeff: 1.0 }
    }
}

/// Whether a concentration point sits inside the domain or on its boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointTag {
    Interior,
    Boundary,
}

impl PointTag {
    /// The coefficient `c_i` weighting Green data in the closure condition
    /// and the far-field profile: a boundary spike carries half the mass.
    pub fn coefficient(self) -> f64 {
        match self {
            PointTag::Interior => 1.0,
            PointTag::Boundary => 0.5,
        }
    }
}

/// A tagged concentration point.
#[derive(Debug, Clone, Copy)]
pub struct ConcentrationPoint {
    pub point: Point2,
    pub tag: PointTag,
}

impl ConcentrationPoint {
    pub fn interior(point: Point2) -> ConcentrationPoint {
        ConcentrationPoint { point, tag: PointTag::Interior }
    }

    /// A boundary point, snapped exactly onto the curve.
    pub fn boundary(domain: &Domain2D, near: Point2) -> ConcentrationPoint {
        let (_, foot, _) = domain.closest_boundary(near);
        ConcentrationPoint { point: foot, tag: PointTag::Boundary }
    }
}

/// One concentration profile `U_{d,ζ}(x) = ln(8d²/(ε²d² + |x−ζ|²)²)`.
#[derive(Debug, Clone, Copy)]
pub struct Bubble {
    d: f64,
    zeta: Point2,
    eps: f64,
}

impl Bubble {
    pub fn new(d: f64, zeta: Point2, eps: f64) -> Result<Bubble> {
        if !(d > 0.0) || !(eps > 0.0) {
            return Err(Error::config(format!(
                "bubble needs positive scale and parameter, got d = {d}, eps = {eps}"
            )));
        }
        if eps * d >= SCALE_REGIME_LIMIT {
            return Err(Error::OutsideRegime {
                context: format!(
                    "ε·d = {:.3e} is not below {SCALE_REGIME_LIMIT}; the concentration \
                     expansion does not apply",
                    eps * d
                ),
            });
        }
        Ok(Bubble { d, zeta, eps })
    }

    pub fn scale(&self) -> f64 {
        self.d
    }

    pub fn center(&self) -> Point2 {
        self.zeta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Core half-width `ε·d`: the length scale of the spike.
    pub fn core_width(&self) -> f64 {
        self.eps * self.d
    }

    /// `U(x) = ln(8d²/(ε²d² + |x−ζ|²)²)`.
    pub fn eval(&self, x: Point2) -> f64 {
        let q = (self.eps * self.d).powi(2) + (x - self.zeta).norm_sq();
        (8.0 * self.d * self.d).ln() - 2.0 * q.ln()
    }

    /// `∇U(x) = −4(x−ζ)/(ε²d² + |x−ζ|²)` — bounded, unlike a log pole.
    pub fn gradient(&self, x: Point2) -> Point2 {
        let z = x - self.zeta;
        let q = (self.eps * self.d).powi(2) + z.norm_sq();
        z * (-4.0 / q)
    }

    /// `ε⁴·e^{U}` at rescaled squared distance `|y−ζ'|²`, i.e. the standard
    /// profile `8d²/(d² + |y−ζ'|²)²` of the blown-up frame.
    pub fn rescaled_profile(&self, y_dist_sq: f64) -> f64 {
        let d2 = self.d * self.d;
        8.0 * d2 / (d2 + y_dist_sq).powi(2)
    }
}

/// `ε²∫_Ω e^U dx` by midpoint quadrature: → 8π for a deep interior bubble,
/// 4π for a boundary one.
pub fn bubble_mass(mesh: &Mesh, bubble: &Bubble) -> f64 {
    let eps2 = bubble.eps * bubble.eps;
    eps2 * integrate(mesh, point_coeff(|p| bubble.eval(p).exp()))
}

/// A bubble together with its discrete weighted Neumann projection.
#[derive(Debug, Clone)]
pub struct ProjectedBubble {
    bubble: Bubble,
    tag: PointTag,
    pu: Vec<f64>,
    regular: Vec<f64>,
}

impl ProjectedBubble {
    pub fn bubble(&self) -> &Bubble {
        &self.bubble
    }

    pub fn tag(&self) -> PointTag {
        self.tag
    }

    /// `c_i`: 1 for an interior spike, ½ for a boundary one.
    pub fn coefficient(&self) -> f64 {
        self.tag.coefficient()
    }

    /// Nodal values of `PU`.
    pub fn nodal(&self) -> &[f64] {
        &self.pu
    }

    /// Nodal values of the smooth correction `H_b = PU − U`; far from the
    /// spike `H_b ≈ c_i·H(x,ζ) − ln(8d²)`.
    pub fn regular_nodal(&self) -> &[f64] {
        &self.regular
    }
}

/// Solves the weighted Neumann projection of one bubble.
///
/// The caller must resolve the bubble core: grade the mesh at `ζ` with local
/// size `ε·d/8`. Refinement keeps edges within a small multiple of the size
/// field, so the host triangle of `ζ` is rejected if its longest edge
/// exceeds `ε·d/2`.
pub fn project_bubble(
    solver: &GreenSolver<'_>,
    bubble: &Bubble,
    tag: PointTag,
) -> Result<ProjectedBubble> {
    let mesh = solver.mesh();
    let domain = solver.domain();
    let (host, _) = mesh.locate(bubble.zeta).ok_or_else(|| Error::Mesh {
        context: format!(
            "bubble center ({:.6}, {:.6}) is not covered by the mesh",
            bubble.zeta.x, bubble.zeta.y
        ),
    })?;
    let edge = mesh.longest_edge(host);
    let core = bubble.core_width();
    if edge > 0.5 * core {
        return Err(Error::Mesh {
            context: format!(
                "mesh is not graded for the bubble at ({:.4}, {:.4}): local edge {edge:.3e} \
                 exceeds half the core width ε·d = {core:.3e}; grade with size ε·d/8",
                bubble.zeta.x, bubble.zeta.y
            ),
        });
    }

    let weight = domain.weight();
    let mut rhs = assemble_load(
        mesh,
        point_coeff(|p| {
            let gamma = weight.gamma(p);
            weight.eval(p) * (gamma.dot(bubble.gradient(p)) - bubble.eval(p))
        }),
    );
    // −∂_ν U = n_in·∇U keeps the composite flux-free on the boundary.
    let curve = domain.curve();
    let boundary = assemble_boundary_load(mesh, curve, |s, p| {
        weight.eval(p) * curve.inner_normal(s).dot(bubble.gradient(p))
    });
    for (r, b) in rhs.iter_mut().zip(&boundary) {
        *r += b;
    }

    let regular = solve_cg(solver.system(), &rhs, CG_TOL, CG_MAX_ITER)?;
    let pu: Vec<f64> =
        mesh.nodes.iter().zip(&regular).map(|(&p, h)| bubble.eval(p) + h).collect();
    Ok(ProjectedBubble { bubble: *bubble, tag, pu, regular })
}

/// Green data and closure scales for one point configuration.
pub struct ClosureData<'a> {
    /// `d_i` from the closure condition.
    pub scales: Vec<f64>,
    /// `H(ζ_i, ζ_i)`.
    pub h_diag: Vec<f64>,
    /// `g_cross[i][j] = G(ζ_i, ζ_j)` for `j ≠ i` (diagonal entries 0).
    pub g_cross: Vec<Vec<f64>>,
    /// One Green field per point, reusable for far-field evaluation.
    pub fields: Vec<GreenField<'a>>,
    /// Max over i of `|ln(8d_i²) − c_iH_ii − Σ_{j≠i}c_jG_ij|`.
    pub residual: f64,
}

fn scales_from_green_data(coeffs: &[f64], h_diag: &[f64], g_cross: &[Vec<f64>]) -> Vec<f64> {
    (0..coeffs.len())
        .map(|i| {
            let mut exponent = coeffs[i] * h_diag[i];
            for (j, &c) in coeffs.iter().enumerate() {
                if j != i {
                    exponent += c * g_cross[i][j];
                }
            }
            (exponent.exp() / 8.0).sqrt()
        })
        .collect()
}

pub(crate) fn check_admissible(
    domain: &Domain2D,
    points: &[ConcentrationPoint],
    eps: f64,
    params: &ClosureParams,
) -> Result<()> {
    if points.is_empty() {
        return Err(Error::config("at least one concentration point is required"));
    }
    if !(eps > 0.0) || eps >= 1.0 {
        return Err(Error::config(format!("ε must lie in (0, 1), got {eps}")));
    }
    let floor = eps.ln().abs().powf(-params.kappa);
    for (i, a) in points.iter().enumerate() {
        for b in points.iter().skip(i + 1) {
            let sep = (a.point - b.point).norm();
            if sep < params.sep_coeff * floor {
                return Err(Error::OutsideRegime {
                    context: format!(
                        "concentration points ({:.4}, {:.4}) and ({:.4}, {:.4}) are {sep:.3e} \
                         apart, below the separation floor {:.3e} at ε = {eps}",
                        a.point.x,
                        a.point.y,
                        b.point.x,
                        b.point.y,
                        params.sep_coeff * floor
                    ),
                });
            }
        }
        if a.tag == PointTag::Interior {
            let dist = domain.dist_to_boundary(a.point);
            if dist < params.dist_coeff * floor {
                return Err(Error::OutsideRegime {
                    context: format!(
                        "interior point ({:.4}, {:.4}) is {dist:.3e} from the boundary, \
                         below the floor {:.3e} at ε = {eps}",
                        a.point.x,
                        a.point.y,
                        params.dist_coeff * floor
                    ),
                });
            }
        }
    }
    Ok(())
}

/// Solves one Green field per point and extracts the diagonal regular
/// parts and cross couplings, verifying each point's tag against the
/// pole classification.
pub(crate) fn solve_green_data<'a>(
    solver: &GreenSolver<'a>,
    points: &[ConcentrationPoint],
) -> Result<(Vec<GreenField<'a>>, Vec<f64>, Vec<Vec<f64>>)> {
    let poles: Vec<Point2> = points.iter().map(|c| c.point).collect();
    let fields = solver.solve_many(&poles)?;
    for (c, f) in points.iter().zip(&fields) {
        let matches = match f.kind() {
            PoleKind::Interior => c.tag == PointTag::Interior,
            PoleKind::Boundary { .. } => c.tag == PointTag::Boundary,
        };
        if !matches {
            return Err(Error::config(format!(
                "point ({:.4}, {:.4}) is tagged {:?} but classifies as {:?}",
                c.point.x,
                c.point.y,
                c.tag,
                f.kind()
            )));
        }
    }

    let m = points.len();
    let h_diag: Vec<f64> = fields.iter().map(|f| f.h_at_pole()).collect();
    let mut g_cross = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                g_cross[i][j] = fields[j].eval_g(points[i].point).ok_or_else(|| Error::Mesh {
                    context: format!(
                        "Green field of pole {j} cannot be evaluated at point {i}"
                    ),
                })?;
            }
        }
    }
    Ok((fields, h_diag, g_cross))
}

/// Evaluates the closure condition: `d_i` such that
/// `ln(8d_i²) = c_iH(ζ_i,ζ_i) + Σ_{j≠i} c_jG(ζ_i,ζ_j)`.
///
/// The right side does not involve the scales, so this is a direct
/// evaluation from the Green data, not a fixed point.
pub fn solve_closure<'a>(
    solver: &GreenSolver<'a>,
    points: &[ConcentrationPoint],
    eps: f64,
    params: &ClosureParams,
) -> Result<ClosureData<'a>> {
    check_admissible(solver.domain(), points, eps, params)?;
    let (fields, h_diag, g_cross) = solve_green_data(solver, points)?;
    let coeffs: Vec<f64> = points.iter().map(|c| c.tag.coefficient()).collect();
    let scales = scales_from_green_data(&coeffs, &h_diag, &g_cross);
    let mut residual = 0.0_f64;
    for (i, &d) in scales.iter().enumerate() {
        if eps * d >= SCALE_REGIME_LIMIT {
            return Err(Error::OutsideRegime {
                context: format!(
                    "closure scale d_{i} = {d:.4} gives ε·d = {:.3e} ≥ {SCALE_REGIME_LIMIT}: \
                     outside asymptotic regime",
                    eps * d
                ),
            });
        }
        let mut exponent = coeffs[i] * h_diag[i];
        for (j, &c) in coeffs.iter().enumerate() {
            if j != i {
                exponent += c * g_cross[i][j];
            }
        }
        residual = residual.max(((8.0 * d * d).ln() - exponent).abs());
    }
    Ok(ClosureData { scales, h_diag, g_cross, fields, residual })
}

/// The composite approximation `u_ε = Σ PU_i` with closure-selected scales.
pub struct Ansatz {
    eps: f64,
    points: Vec<ConcentrationPoint>,
    scales: Vec<f64>,
    bubbles: Vec<ProjectedBubble>,
    u: Vec<f64>,
    closure_residual: f64,
    h_diag: Vec<f64>,
    g_cross: Vec<Vec<f64>>,
}

impl Ansatz {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn points(&self) -> &[ConcentrationPoint] {
        &self.points
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn bubbles(&self) -> &[ProjectedBubble] {
        &self.bubbles
    }

    /// Nodal composite `u_ε`.
    pub fn nodal(&self) -> &[f64] {
        &self.u
    }

    pub fn closure_residual(&self) -> f64 {
        self.closure_residual
    }

    /// `H(ζ_i,ζ_i)` recorded at closure time.
    pub fn h_diag(&self) -> &[f64] {
        &self.h_diag
    }

    /// `G(ζ_i,ζ_j)` recorded at closure time (diagonal 0).
    pub fn g_cross(&self) -> &[Vec<f64>] {
        &self.g_cross
    }
}

/// Builds the composite approximation on one mesh: Green data, closure
/// scales, one projection per point, and the nodal sum.
pub fn build_ansatz(
    domain: &Domain2D,
    mesh: &Mesh,
    points: &[ConcentrationPoint],
    eps: f64,
    params: &ClosureParams,
) -> Result<Ansatz> {
    let solver = GreenSolver::new(domain, mesh);
    let closure = solve_closure(&solver, points, eps, params)?;
    let bubbles: Vec<ProjectedBubble> = points
        .par_iter()
        .zip(closure.scales.par_iter())
        .map(|(c, &d)| {
            let bubble = Bubble::new(d, c.point, eps)?;
            project_bubble(&solver, &bubble, c.tag)
        })
        .collect::<Result<_>>()?;
    let mut u = vec![0.0; mesh.num_nodes()];
    for pb in &bubbles {
        for (acc, v) in u.iter_mut().zip(pb.nodal()) {
            *acc += v;
        }
    }
    Ok(Ansatz {
        eps,
        points: points.to_vec(),
        scales: closure.scales,
        bubbles,
        u,
        closure_residual: closure.residual,
        h_diag: closure.h_diag,
        g_cross: closure.g_cross,
    })
}

/// The residual of the rescaled equation and its weighted sup norm.
pub struct ResidualField {
    /// Nodal values of `S(v_ε)` at `y = x/ε` for each mesh node `x`.
    pub values: Vec<f64>,
    /// `max |S| / (ε² + Σ_i (1+|y−ζ_i'|)^{−2−σ})` over nodes.
    pub star_norm: f64,
}

/// Evaluates `S(v_ε)` through the exact identity
/// `S(y) = e^{v_ε(y)} − Σ_j 8d_j²/(d_j² + |y−ζ_j'|²)²`, `v_ε = u_ε(εy) + 4lnε`:
/// each projection solves its own equation, so all derivative terms cancel
/// and only the nonlinear mismatch survives. No discrete differentiation —
/// the measurement floor is set by the projection solves, not by second
/// differences.
pub fn residual_s(ansatz: &Ansatz, mesh: &Mesh) -> ResidualField {
    let eps = ansatz.eps;
    let shift = 4.0 * eps.ln();
    let mut values = Vec::with_capacity(mesh.num_nodes());
    let mut star = 0.0_f64;
    for (n, &p) in mesh.nodes.iter().enumerate() {
        let mut profile_sum = 0.0;
        for pb in ansatz.bubbles() {
            let b = pb.bubble();
            let y_dist_sq = (p - b.center()).norm_sq() / (eps * eps);
            profile_sum += b.rescaled_profile(y_dist_sq);
        }
        let s = (ansatz.u[n] + shift).exp() - profile_sum;
        values.push(s);
        star = star.max(s.abs() / star_weight(ansatz, p));
    }
    ResidualField { values, star_norm: star }
}

/// The comparison weight `ε² + Σ_i (1+|y−ζ_i'|)^{−2−σ}` at the physical
/// point `p` (evaluated at `y = p/ε`).
fn star_weight(ansatz: &Ansatz, p: Point2) -> f64 {
    let eps = ansatz.eps;
    let mut weight = eps * eps;
    for pb in ansatz.bubbles() {
        let y_dist = (p - pb.bubble().center()).norm() / eps;
        weight += (1.0 + y_dist).powf(-2.0 - STAR_SIGMA);
    }
    weight
}

/// Measures an arbitrary nodal field in the residual's weighted sup norm,
/// `max_n |f_n| / (ε² + Σ_i (1+|y_n−ζ_i'|)^{−2−σ})`.
pub fn star_norm_of(values: &[f64], ansatz: &Ansatz, mesh: &Mesh) -> f64 {
    values
        .iter()
        .zip(&mesh.nodes)
        .map(|(v, &p)| v.abs() / star_weight(ansatz, p))
        .fold(0.0, f64::max)
}
