//! The anisotropy weight a(x) and its logarithmic gradient γ = ∇a/a.

use crate::domain::expr::Expr;
use crate::numerics::Point2;
use crate::{Error, Result};

/// Positive weight on the closed domain. The drift in the operator
/// Δ + γ·∇ − 1 is γ = ∇ ln a; all kinds provide exact gradients.
#[derive(Debug, Clone)]
pub enum Weight {
    /// a ≡ value (isotropic case; γ ≡ 0).
    Constant { value: f64 },
    /// a(x) = x₁^{m1−1} · x₂^{mn−1}. Requires the closed domain to sit in
    /// the open positive quadrant for every coordinate with exponent > 0.
    /// This is the weight of the rotationally symmetric lift with sphere
    /// dimensions m1, mn.
    Power { m1: u32, mn: u32 },
    /// Custom expression in x1, x2 (see [`crate::domain::expr`]).
    Expr { source: String, ast: Expr, grad_x1: Expr, grad_x2: Expr },
}

impl Weight {
    pub fn constant(value: f64) -> Result<Weight> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::NonPositiveWeight {
                context: format!("constant weight value {value}"),
            });
        }
        Ok(Weight::Constant { value })
    }

    pub fn power(m1: u32, mn: u32) -> Result<Weight> {
        if m1 < 1 || mn < 1 {
            return Err(Error::config(format!(
                "power weight exponents must satisfy M ≥ 1, got ({m1}, {mn})"
            )));
        }
        Ok(Weight::Power { m1, mn })
    }

    pub fn from_expr(source: &str) -> Result<Weight> {
        let ast = Expr::parse(source)?;
        let grad_x1 = ast.derivative(0);
        let grad_x2 = ast.derivative(1);
        Ok(Weight::Expr { source: source.to_string(), ast, grad_x1, grad_x2 })
    }

    pub fn eval(&self, p: Point2) -> f64 {
        match self {
            Weight::Constant { value } => *value,
            Weight::Power { m1, mn } => {
                p.x.powi(*m1 as i32 - 1) * p.y.powi(*mn as i32 - 1)
            }
            Weight::Expr { ast, .. } => ast.eval(p.x, p.y),
        }
    }

    pub fn grad(&self, p: Point2) -> Point2 {
        match self {
            Weight::Constant { .. } => Point2::ZERO,
            Weight::Power { m1, mn } => {
                let (k1, k2) = (*m1 as f64 - 1.0, *mn as f64 - 1.0);
                Point2::new(
                    k1 * p.x.powi(*m1 as i32 - 2) * p.y.powi(*mn as i32 - 1),
                    k2 * p.x.powi(*m1 as i32 - 1) * p.y.powi(*mn as i32 - 2),
                )
            }
            Weight::Expr { grad_x1, grad_x2, .. } => {
                Point2::new(grad_x1.eval(p.x, p.y), grad_x2.eval(p.x, p.y))
            }
        }
    }

    /// γ(x) = ∇a(x)/a(x), the drift of the anisotropic operator.
    pub fn gamma(&self, p: Point2) -> Point2 {
        match self {
            Weight::Constant { .. } => Point2::ZERO,
            // ∇ln a = ((m1−1)/x₁, (mn−1)/x₂) — exact, avoids 0/0 when an
            // exponent is 1.
            Weight::Power { m1, mn } => Point2::new(
                (*m1 as f64 - 1.0) / p.x,
                (*mn as f64 - 1.0) / p.y,
            ),
            Weight::Expr { .. } => {
                let a = self.eval(p);
                self.grad(p) / a
            }
        }
    }

    /// True when γ ≡ 0 (pure Laplacian drift-free case).
    pub fn is_isotropic(&self) -> bool {
        matches!(self, Weight::Constant { .. })
            || matches!(self, Weight::Power { m1: 1, mn: 1 })
    }

    /// Human-readable form for reports.
    pub fn describe(&self) -> String {
        match self {
            Weight::Constant { value } => format!("constant {value}"),
            Weight::Power { m1, mn } => format!("x1^{} * x2^{}", m1 - 1, mn - 1),
            Weight::Expr { source, .. } => source.clone(),
        }
    }
}
