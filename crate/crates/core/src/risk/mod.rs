//! Misclassification risks and their excess over the Bayes risk.
//!
//! `R(t) = π₀ t + π₁ (1 - F(t))` is the risk of a deterministic threshold.
//! The FDR threshold is data dependent; its exact inductive risk sums the
//! deterministic risk over the distribution of the BH crossing count.

mod bounds;
mod steck;

pub use bounds::{
    bfdr_excess, bfdr_excess_identity, bound_cor41, bound_thm31_lower, bound_thm31_upper,
    bound_thm32_upper, rates, rho_rate, BoundParams, BoundTarget, CorollaryCase, Rates,
};
pub use steck::steck_prefix;

use crate::error::{check_unit_closed, domain, Error, Result};
use crate::model::{ModelKind, ModelSpec};
use crate::threshold::{bfdr_threshold, step_level, Provenance};

/// Largest `m` accepted by [`exact_fdr_risk`]; the cost is quadratic in `m`.
pub const EXACT_FDR_CAP: usize = 10_000;

/// Deterministic risk `π₀ t + π₁ (1 - F(t))`.
pub fn risk_det(model: &ModelSpec, t: f64) -> Result<f64> {
    check_unit_closed("t", t)?;
    Ok(det(model, t))
}

fn det(model: &ModelSpec, t: f64) -> f64 {
    model.pi0() * t + model.pi1() * (1.0 - model.cdf(t))
}

pub fn bayes_risk(model: &ModelSpec) -> f64 {
    det(model, model.bayes_threshold())
}

fn check_lambda(model: &ModelSpec, lambda: f64) -> Result<()> {
    if lambda >= 1.0 && lambda < model.tau() {
        Ok(())
    } else {
        Err(domain(format!(
            "weight lambda must lie in [1, tau = {}), got {lambda}",
            model.tau()
        )))
    }
}

/// Weighted risk `π₀ t + λ π₁ (1 - F(t))`, with `λ ∈ [1, τ)`.
pub fn risk_weighted(model: &ModelSpec, t: f64, lambda: f64) -> Result<f64> {
    check_unit_closed("t", t)?;
    check_lambda(model, lambda)?;
    Ok(model.pi0() * t + lambda * model.pi1() * (1.0 - model.cdf(t)))
}

/// Minimizer `f⁻¹(τ/λ)` of the weighted risk.
pub fn weighted_bayes_threshold(model: &ModelSpec, lambda: f64) -> Result<f64> {
    check_lambda(model, lambda)?;
    model.inverse_alt_pdf(model.tau() / lambda)
}

/// The model with `τ` replaced by `τ/λ`, and the factor `π₀ + λπ₁` such
/// that `R_λ(t) = (π₀ + λπ₁) R'(t)` where `R'` is the risk of that model.
pub fn weighted_substitute(model: &ModelSpec, lambda: f64) -> Result<(ModelSpec, f64)> {
    check_lambda(model, lambda)?;
    let tau = model.tau() / lambda;
    let sub = match model.kind() {
        ModelKind::Location => ModelSpec::location(model.shape(), tau, model.effect())?,
        ModelKind::Scale => ModelSpec::scale(model.shape(), tau, model.effect())?,
    };
    Ok((sub, model.pi0() + lambda * model.pi1()))
}

/// Relative excess risk `(R - R_B) / R_B`.
pub fn excess(risk: f64, bayes_risk: f64) -> Result<f64> {
    if !(bayes_risk > 0.0) {
        return Err(domain(format!("Bayes risk must be positive, got {bayes_risk}")));
    }
    Ok((risk - bayes_risk) / bayes_risk)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub procedure: Provenance,
    /// Nominal level, for BFDR/FDR procedures.
    pub alpha: Option<f64>,
    /// Cutoff, for deterministic procedures.
    pub threshold: Option<f64>,
    pub risk: f64,
    pub bayes_risk: f64,
    pub excess_rel: f64,
    /// Named bound values; `None` marks an inapplicable bound.
    pub bounds: Vec<(&'static str, Option<f64>)>,
}

impl RiskReport {
    pub fn new(procedure: Provenance, risk: f64, bayes_risk: f64) -> Result<Self> {
        Ok(RiskReport {
            procedure,
            alpha: None,
            threshold: None,
            risk,
            bayes_risk,
            excess_rel: excess(risk, bayes_risk)?,
            bounds: Vec::new(),
        })
    }

    pub fn with_bound(mut self, name: &'static str, value: Option<f64>) -> Self {
        self.bounds.push((name, value));
        self
    }

    pub fn bound(&self, name: &str) -> Option<f64> {
        self.bounds.iter().find(|(n, _)| *n == name).and_then(|(_, v)| *v)
    }
}

/// Risk of a fixed threshold `t`.
pub fn threshold_report(model: &ModelSpec, t: f64, procedure: Provenance) -> Result<RiskReport> {
    let mut r = RiskReport::new(procedure, risk_det(model, t)?, bayes_risk(model))?;
    r.threshold = Some(t);
    Ok(r)
}

/// Risk of the BFDR threshold at level `alpha`.
pub fn bfdr_risk(model: &ModelSpec, alpha: f64) -> Result<RiskReport> {
    let t = bfdr_threshold(model, alpha)?.value;
    let mut r = threshold_report(model, t, Provenance::Bfdr)?;
    r.alpha = Some(alpha);
    Ok(r)
}

fn check_exact_args(m: usize, alpha: f64) -> Result<()> {
    if m == 0 {
        return Err(domain("exact FDR risk needs m >= 1"));
    }
    if m > EXACT_FDR_CAP {
        return Err(Error::Capacity {
            m,
            cap: EXACT_FDR_CAP,
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Distribution of the BH crossing count `k̂` over `0..=m` under the model.
///
/// `P(k̂ = k) = C(m,k) G(αk/m)^k Ψ_{m-k}(s₁, …, s_{m-k})` with
/// `s_i = 1 - G(α(m-i+1)/m)`.
pub fn fdr_khat_distribution(model: &ModelSpec, m: usize, alpha: f64) -> Result<Vec<f64>> {
    check_exact_args(m, alpha)?;
    let g: Vec<f64> = (0..=m).map(|k| model.mixture(step_level(alpha, k, m))).collect();
    let mut s: Vec<f64> = (1..=m).map(|i| 1.0 - g[m - i + 1]).collect();
    // guard against last-ulp non-monotonicity of the computed mixture c.d.f.
    for i in 1..s.len() {
        if s[i] < s[i - 1] {
            s[i] = s[i - 1];
        }
    }
    let ln_psi = steck::ln_steck_prefix(&s);
    let lf = steck::ln_factorials(m);
    Ok((0..=m)
        .map(|k| {
            let ln_g = if k == 0 { 0.0 } else { k as f64 * g[k].ln() };
            (lf[m] - lf[k] - lf[m - k] + ln_g + ln_psi[m - k]).exp()
        })
        .collect())
}

/// Exact inductive risk of the FDR threshold at level `alpha` for `m` tests.
pub fn exact_fdr_risk(model: &ModelSpec, m: usize, alpha: f64) -> Result<RiskReport> {
    let weights = fdr_khat_distribution(model, m, alpha)?;
    let mut sum = 0.0;
    let mut comp = 0.0;
    for (k, w) in weights.iter().enumerate() {
        let y = w * det(model, step_level(alpha, k.max(1), m)) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    let mut r = RiskReport::new(Provenance::Fdr, sum.clamp(0.0, 1.0), bayes_risk(model))?;
    r.alpha = Some(alpha);
    Ok(r)
}
