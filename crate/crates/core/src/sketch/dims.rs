//! Sketch dimension `m` for each supported (base, tensor) family pair.

use super::{BaseFamily, TensorFamily};
use crate::error::{Error, Result};

/// Power of `1/ε` in the dimension bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsScaling {
    /// `ε⁻²`, for subspace embeddings (regression, low rank).
    Subspace,
    /// `ε⁻¹`, for approximate matrix products (spline regression).
    MatrixProduct,
}

/// Shape of the bound in `q`, `dim` and `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimensionRule {
    /// `q · dim² / δ`; CountSketch with TensorSketch.
    QuadraticInverseDelta,
    /// `q⁴ · dim · log(1/δ)`; SRHT with TensorSRHT.
    LinearQ4LogDelta,
    /// `q · dim² · log(1/δ)`; OSNAP with TensorSRHT.
    QuadraticLogDelta,
}

const SUPPORTED: &str = "supported pairs: (countsketch, tensorsketch), (srht, tensorsrht), (osnap, tensorsrht)";

impl DimensionRule {
    pub fn for_families(c: BaseFamily, t: TensorFamily) -> Result<Self> {
        match (c, t) {
            (BaseFamily::CountSketch, TensorFamily::TensorSketch) => Ok(Self::QuadraticInverseDelta),
            (BaseFamily::Srht, TensorFamily::TensorSrht) => Ok(Self::LinearQ4LogDelta),
            (BaseFamily::Osnap, TensorFamily::TensorSrht) => Ok(Self::QuadraticLogDelta),
            _ => Err(Error::Config(format!(
                "unsupported sketch pair ({c}, {t}); {SUPPORTED}"
            ))),
        }
    }

    fn evaluate(self, dim: f64, q: f64, delta: f64) -> f64 {
        match self {
            Self::QuadraticInverseDelta => q * dim * dim / delta,
            Self::LinearQ4LogDelta => q.powi(4) * dim * (1.0 / delta).ln(),
            Self::QuadraticLogDelta => q * dim * dim * (1.0 / delta).ln(),
        }
    }
}

/// `ceil(c · ε⁻² · f(q, dim, δ))` for the row matching `(c_family, t_family)`.
///
/// `dim` is the fundamental dimension: `d` for regression, `k` for low rank,
/// or a statistical dimension (hence real-valued).
pub fn choose_m(
    c_family: BaseFamily,
    t_family: TensorFamily,
    dim: f64,
    q: usize,
    eps: f64,
    delta: f64,
    c_factor: f64,
) -> Result<usize> {
    let rule = DimensionRule::for_families(c_family, t_family)?;
    choose_m_with(rule, EpsScaling::Subspace, dim, q, eps, delta, c_factor)
}

pub fn choose_m_with(
    rule: DimensionRule,
    scaling: EpsScaling,
    dim: f64,
    q: usize,
    eps: f64,
    delta: f64,
    c_factor: f64,
) -> Result<usize> {
    // ε = 1 is accepted so the formula can be evaluated at unit arguments.
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Config(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    if q == 0 {
        return Err(Error::Config("q must be at least 1".into()));
    }
    if !(dim.is_finite() && dim > 0.0) {
        return Err(Error::Config(format!(
            "fundamental dimension must be positive, got {dim}"
        )));
    }
    if !(c_factor.is_finite() && c_factor > 0.0) {
        return Err(Error::Config(format!("c_factor must be positive, got {c_factor}")));
    }
    let eps_term = match scaling {
        EpsScaling::Subspace => eps.powi(-2),
        EpsScaling::MatrixProduct => 1.0 / eps,
    };
    let raw = c_factor * eps_term * rule.evaluate(dim, q as f64, delta);
    // Shave rounding noise so exact integers (e.g. ln(1/δ) at δ = 1/e) do not
    // round up.
    let m = (raw * (1.0 - 1e-12)).ceil();
    if !m.is_finite() || m >= usize::MAX as f64 {
        return Err(Error::DimensionOverflow(format!(
            "sketch dimension {raw:e} does not fit"
        )));
    }
    Ok((m as usize).max(1))
}
