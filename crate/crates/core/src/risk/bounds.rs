//! Finite-sample bounds on the excess risk of BFDR and FDR thresholding.

use crate::error::{domain, Error, Result};
use crate::model::{ModelKind, ModelSpec};
use crate::threshold::{bfdr_threshold, q_opt};

use super::{bayes_risk, det, weighted_substitute};

/// Which of the two explicit-rate FDR bounds to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorollaryCase {
    /// `D₁ = -ln(ν π₀ (1-ε))`, with the exponential remainder.
    One,
    /// `D₂ = ln(C m / (ν τ))`, without remainder.
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub epsilon: f64,
    pub nu: f64,
    pub case_a: CorollaryCase,
    /// Weight of a missed signal in the weighted risk.
    pub lambda: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            epsilon: 0.5,
            nu: 0.25,
            case_a: CorollaryCase::One,
            lambda: 1.0,
        }
    }
}

impl BoundParams {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Hypothesis(format!("epsilon = {} must lie in (0, 1)", self.epsilon)));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(Error::Hypothesis(format!("nu = {} must lie in (0, 1)", self.nu)));
        }
        if !(self.lambda >= 1.0) || !self.lambda.is_finite() {
            return Err(Error::Hypothesis(format!("lambda = {} must be >= 1", self.lambda)));
        }
        Ok(())
    }

    fn require_unweighted(&self, what: &str) -> Result<()> {
        if self.lambda == 1.0 {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!(
                "{what} is stated for the unweighted risk (lambda = 1), got lambda = {}",
                self.lambda
            )))
        }
    }
}

/// Rate `r` and constant `K` of a Subbotin model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub r: f64,
    pub k: f64,
}

/// Location: `r = (ζ ln τ + |D̄⁻¹(C)|^ζ)^{1-1/ζ}`, `K = d(0)`.
/// Scale: `r = ζ ln τ + D̄⁻¹(C/2)^ζ`, `K = 2 z d(z)` with `z = D̄⁻¹(C/2)`.
pub fn rates(model: &ModelSpec) -> Rates {
    let shape = model.shape();
    let zeta = shape.zeta();
    let ln_tau = model.tau().ln();
    match model.kind() {
        ModelKind::Location => {
            let z = shape.inv_tail(model.power());
            Rates {
                r: (zeta * ln_tau + z.abs().powf(zeta)).powf(1.0 - 1.0 / zeta),
                k: shape.pdf(0.0),
            }
        }
        ModelKind::Scale => {
            let z = shape.inv_tail(0.5 * model.power());
            Rates {
                r: zeta * ln_tau + z.powf(zeta),
                k: 2.0 * z * shape.pdf(z),
            }
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `R(t★) - R(t^B)` for the BFDR threshold at level `alpha`.
pub fn bfdr_excess(model: &ModelSpec, alpha: f64) -> Result<f64> {
    let t = bfdr_threshold(model, alpha)?.value;
    Ok(det(model, t) - bayes_risk(model))
}

/// The same excess through `π₁C/q - π₀t^B + π₁(1 - 1/q)(C - F(t★))`.
pub fn bfdr_excess_identity(model: &ModelSpec, alpha: f64) -> Result<f64> {
    let t = bfdr_threshold(model, alpha)?.value;
    let q = 1.0 / alpha - 1.0;
    let c = model.power();
    Ok(model.pi1() * c / q - model.pi0() * model.bayes_threshold()
        + model.pi1() * (1.0 - 1.0 / q) * (c - model.cdf(t)))
}

/// `π₁ max(C/q - C/q^opt, γ)` with `γ = (C - F(Ψ⁻¹(qτ)))₊`; needs `α <= 1/2`.
pub fn bound_thm31_upper(model: &ModelSpec, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha > 0.5 {
        return Err(Error::Hypothesis(format!(
            "the BFDR upper bound needs alpha <= 1/2, got {alpha}"
        )));
    }
    let t = bfdr_threshold(model, alpha)?.value;
    let q = 1.0 / alpha - 1.0;
    let c = model.power();
    let gamma = (c - model.cdf(t)).max(0.0);
    Ok(model.pi1() * (c / q - c / q_opt(model)).max(gamma))
}

/// Lower bound on `R(t★)/R(t^B)`:
/// `π₁ (1 - (1 - 1/q)₊ F(1/(qτ))) / R(t^B)`.
pub fn bound_thm31_lower(model: &ModelSpec, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let q = 1.0 / alpha - 1.0;
    let t = (1.0 / (q * model.tau())).min(1.0);
    let inner = 1.0 - (1.0 - 1.0 / q).max(0.0) * model.cdf(t);
    Ok(model.pi1() * inner / bayes_risk(model))
}

/// Upper bound on `R(t̂^FDR) - R(t^B)` for `m` tests at level `alpha`.
pub fn bound_thm32_upper(model: &ModelSpec, m: usize, alpha: f64, params: &BoundParams) -> Result<f64> {
    check_alpha(alpha)?;
    params.validate()?;
    params.require_unweighted("the FDR upper bound")?;
    if m < 2 {
        return Err(Error::Hypothesis(format!("the FDR upper bound needs m >= 2, got {m}")));
    }
    let (pi0, pi1, c, tau) = (model.pi0(), model.pi1(), model.power(), model.tau());
    let mf = m as f64;
    let eps = params.epsilon;
    let q_eps = 1.0 / (alpha * pi0 * (1.0 - eps)) - 1.0;
    let t_eps = model.inverse_psi(q_eps * tau)?;
    let gamma_eps = (c - model.cdf(t_eps)).max(0.0);
    let gamma_prime = (c - model.cdf(alpha / mf)).max(0.0);
    let tail = (-mf * eps * eps / (tau + 1.0) * (c - gamma_eps) / 4.0).exp();
    Ok(pi1 * alpha / (1.0 - alpha)
        + alpha / (mf * (1.0 - alpha).powi(2))
        + pi1 * gamma_prime.min(gamma_eps + tail))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundTarget {
    Bfdr,
    Fdr,
}

/// Explicit rate bounds for `α ∈ (0, 1/2)`.
///
/// Returns `None` when `α >= 1/2` or when `r` is below the size the bound
/// needs, i.e. when the inequality does not apply to this configuration.
/// With `lambda > 1` the BFDR bound is evaluated for the weighted risk
/// through the model with sparsity `τ/λ` and recovery parameter `qλ`.
pub fn bound_cor41(
    model: &ModelSpec,
    m: usize,
    alpha: f64,
    params: &BoundParams,
    which: BoundTarget,
) -> Result<Option<f64>> {
    check_alpha(alpha)?;
    params.validate()?;
    if m < 2 {
        return Err(Error::Hypothesis(format!("the rate bounds need m >= 2, got {m}")));
    }
    if alpha >= 0.5 {
        return Ok(None);
    }
    match which {
        BoundTarget::Bfdr if params.lambda != 1.0 => {
            let (sub, factor) = weighted_substitute(model, params.lambda)?;
            let q = (1.0 / alpha - 1.0) * params.lambda;
            let unit = BoundParams {
                lambda: 1.0,
                ..*params
            };
            let b = bound_cor41(&sub, m, 1.0 / (1.0 + q), &unit, BoundTarget::Bfdr)?;
            Ok(b.map(|b| factor * b))
        }
        BoundTarget::Bfdr => {
            let Rates { r, k } = rates(model);
            let c = model.power();
            let q = 1.0 / alpha - 1.0;
            let qo = q_opt(model);
            let log_term = (q / qo).ln() - params.nu.ln();
            if r < k / (c * (1.0 - params.nu)) * log_term {
                return Ok(None);
            }
            Ok(Some(model.pi1() * (c / q - c / qo).max(k * log_term / r)))
        }
        BoundTarget::Fdr => {
            params.require_unweighted("the FDR rate bound")?;
            let Rates { r, k } = rates(model);
            let (pi0, pi1, c, tau) = (model.pi0(), model.pi1(), model.power(), model.tau());
            let mf = m as f64;
            let (nu, eps) = (params.nu, params.epsilon);
            let d = match params.case_a {
                CorollaryCase::One => -(nu * pi0 * (1.0 - eps)).ln(),
                CorollaryCase::Two => (c * mf / (nu * tau)).ln(),
            };
            let log_term = (1.0 / (alpha * q_opt(model))).ln() + d;
            if r < k / (c * (1.0 - nu)) * log_term {
                return Ok(None);
            }
            let remainder = match params.case_a {
                CorollaryCase::One => pi1 * (-mf / (tau + 1.0) * nu * eps * eps * c / 4.0).exp(),
                CorollaryCase::Two => 0.0,
            };
            Ok(Some(
                pi1 * (alpha / (1.0 - alpha) + k * log_term.max(0.0) / r)
                    + alpha / mf / (1.0 - alpha).powi(2)
                    + remainder,
            ))
        }
    }
}

/// `ρ = α + (ln(α⁻¹/(ln m)^γ))₊ / (ln m)^γ`.
pub fn rho_rate(m: usize, alpha: f64, gamma: f64) -> Result<f64> {
    if m < 3 {
        return Err(domain(format!("rho needs m >= 3, got {m}")));
    }
    check_alpha(alpha)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(domain(format!("gamma exponent must lie in (0, 1], got {gamma}")));
    }
    let lg = (m as f64).ln().powf(gamma);
    Ok(alpha + (1.0 / (alpha * lg)).ln().max(0.0) / lg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subbotin::SubbotinShape;
    use approx::assert_relative_eq;

    fn laplace_scale_4() -> ModelSpec {
        ModelSpec::scale(SubbotinShape::laplace(), 2.0, 4.0).unwrap()
    }

    #[test]
    fn rate_examples() {
        let mu = (2.0 * 5f64.ln()).sqrt();
        let g = ModelSpec::location(SubbotinShape::gaussian(), 5.0, mu).unwrap();
        let r = rates(&g);
        assert_relative_eq!(r.r, mu, max_relative = 1e-12);
        assert_relative_eq!(r.k, 0.3989422804014327, max_relative = 1e-14);
        let r = rates(&laplace_scale_4());
        assert_relative_eq!(r.r, 2.0 * std::f64::consts::LN_2, max_relative = 1e-12);
        // z = ln 2, K = 2 ln 2 · e^{-ln 2}/2
        assert_relative_eq!(r.k, std::f64::consts::LN_2 / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn rho_examples() {
        let a = 1.0 / (1e6f64).ln();
        assert_relative_eq!(rho_rate(1_000_000, a, 1.0).unwrap(), a, max_relative = 1e-15);
        let v = rho_rate(1_000_000, 0.05, 1.0).unwrap();
        let ln_m = (1e6f64).ln();
        assert_relative_eq!(v, 0.05 + (20.0 / ln_m).ln() / ln_m, max_relative = 1e-14);
        assert!((v - 0.07676).abs() < 5e-5);
        assert!(rho_rate(2, 0.05, 1.0).is_err());
    }

    #[test]
    fn bfdr_bounds_at_optimum() {
        let m = laplace_scale_4();
        assert!(bfdr_excess(&m, 0.2).unwrap().abs() < 1e-12);
        assert!(bound_thm31_upper(&m, 0.2).unwrap().abs() < 1e-12);
        let b = bound_thm31_upper(&m, 0.1).unwrap();
        assert!(b >= bfdr_excess(&m, 0.1).unwrap());
        assert!(matches!(bound_thm31_upper(&m, 0.6), Err(Error::Hypothesis(_))));
        let ratio = det(&m, bfdr_threshold(&m, 0.4).unwrap().value) / bayes_risk(&m);
        assert!(bound_thm31_lower(&m, 0.4).unwrap() <= ratio);
    }

    #[test]
    fn oracle_identity() {
        let m = laplace_scale_4();
        for a in [0.05, 0.1, 0.2, 0.3, 0.5, 0.6] {
            let d = bfdr_excess(&m, a).unwrap();
            let i = bfdr_excess_identity(&m, a).unwrap();
            assert!((d - i).abs() < 1e-13, "alpha = {a}: {d} vs {i}");
        }
    }

    #[test]
    fn thm32_limits() {
        let m = laplace_scale_4();
        let p = BoundParams::default();
        let b = bound_thm32_upper(&m, 100, 1e-13, &p).unwrap();
        assert!((b - m.pi1() * m.power()).abs() < 1e-3);
        assert!(bound_thm32_upper(&m, 100, 0.2, &BoundParams { lambda: 1.5, ..p }).is_err());
        assert!(bound_thm32_upper(&m, 100, 0.2, &BoundParams { epsilon: 1.0, ..p }).is_err());
    }

    #[test]
    fn cor41_gate() {
        let m = laplace_scale_4();
        let p = BoundParams::default();
        // r = 2 ln 2 is too small for anything but q close to q^opt
        assert_eq!(bound_cor41(&m, 10, 0.01, &p, BoundTarget::Bfdr).unwrap(), None);
        assert_eq!(bound_cor41(&m, 10, 0.6, &p, BoundTarget::Bfdr).unwrap(), None);
        let near = BoundParams { nu: 1.0 - 1e-12, ..p };
        let b = bound_cor41(&m, 10, 0.2, &near, BoundTarget::Bfdr).unwrap().unwrap();
        assert!(b.abs() < 1e-9);
    }

    #[test]
    fn weighted_cor41_dominates_weighted_excess() {
        let model = ModelSpec::scale(SubbotinShape::gaussian(), 1e4, 3.0).unwrap();
        let lambda = 3.0;
        let p = BoundParams { lambda, ..BoundParams::default() };
        let (sub, factor) = weighted_substitute(&model, lambda).unwrap();
        for a in [0.02, 0.05, 0.1] {
            let t = bfdr_threshold(&model, a).unwrap().value;
            let tw = sub.bayes_threshold();
            let ex = factor * (det(&sub, t) - det(&sub, tw));
            if let Some(b) = bound_cor41(&model, 100, a, &p, BoundTarget::Bfdr).unwrap() {
                assert!(b >= ex - 1e-12, "alpha = {a}: {b} < {ex}");
            }
        }
    }
}
