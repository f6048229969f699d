//! Two-group p-value models derived from a Subbotin null.
//!
//! With `X` standardized to `p = D̄(X)` (location) or `p = 2 D̄(|X|)` (scale),
//! null p-values are uniform and signal p-values have the concave c.d.f.
//!
//! * location: `F(t) = D̄(D̄⁻¹(t) - μ)`
//! * scale:    `F(t) = 2 D̄(D̄⁻¹(t/2) / σ)`
//!
//! A [`ModelSpec`] caches the Bayes threshold `t^B = f⁻¹(τ)` and the Bayes
//! power `C = F(t^B)` so every downstream formula reads the same values.

use std::fmt;

use crate::error::{check_unit_closed, check_unit_open, domain, Error, Result, Side};
use crate::solve::{brent, expand_both, expand_upper};
use crate::subbotin::SubbotinShape;

/// Largest admissible |power - C| after calibration.
const CALIBRATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Location,
    Scale,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Location => f.write_str("location"),
            ModelKind::Scale => f.write_str("scale"),
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "location" | "loc" => Ok(ModelKind::Location),
            "scale" => Ok(ModelKind::Scale),
            _ => Err(domain(format!("unknown model kind `{s}` (expected location or scale)"))),
        }
    }
}

/// How sparse the model is: either `τ = m^β` or an explicit `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sparsity {
    Beta(f64),
    Tau(f64),
}

impl Sparsity {
    pub fn tau(&self, m: usize) -> Result<f64> {
        match *self {
            Sparsity::Beta(beta) => {
                if !(beta > 0.0 && beta <= 1.0) {
                    return Err(domain(format!("beta must lie in (0, 1], got {beta}")));
                }
                if m < 2 {
                    return Err(domain(format!("tau = m^beta needs m >= 2, got {m}")));
                }
                Ok((m as f64).powf(beta))
            }
            Sparsity::Tau(tau) => {
                if !(tau > 1.0) || !tau.is_finite() {
                    return Err(domain(format!("tau must be finite and > 1, got {tau}")));
                }
                Ok(tau)
            }
        }
    }
}

/// Canonical parametrization `(τ, C)` of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalParams {
    pub sparsity: Sparsity,
    pub power: f64,
}

impl CanonicalParams {
    pub fn new(sparsity: Sparsity, power: f64) -> Self {
        CanonicalParams { sparsity, power }
    }
}

/// A fully specified location or scale mixture model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    kind: ModelKind,
    shape: SubbotinShape,
    tau: f64,
    effect: f64,
    pi0: f64,
    pi1: f64,
    bayes_threshold: f64,
    power: f64,
}

impl ModelSpec {
    /// Location model with shift `mu > 0`; requires ζ > 1.
    pub fn location(shape: SubbotinShape, tau: f64, mu: f64) -> Result<Self> {
        check_location_shape(&shape)?;
        check_tau(tau)?;
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(domain(format!("location shift must be finite and > 0, got {mu}")));
        }
        let x = location_bayes_statistic(&shape, mu, tau.ln())?;
        let bayes_threshold = shape.tail(x);
        let power = shape.tail(x - mu);
        Self::assemble(ModelKind::Location, shape, tau, mu, bayes_threshold, power)
    }

    /// Scale model with inflation `sigma > 1`.
    pub fn scale(shape: SubbotinShape, tau: f64, sigma: f64) -> Result<Self> {
        check_tau(tau)?;
        if !(sigma > 1.0) || !sigma.is_finite() {
            return Err(domain(format!("scale factor must be finite and > 1, got {sigma}")));
        }
        let x = scale_bayes_statistic(&shape, sigma, tau.ln());
        let bayes_threshold = 2.0 * shape.tail(x);
        let power = 2.0 * shape.tail(x / sigma);
        Self::assemble(ModelKind::Scale, shape, tau, sigma, bayes_threshold, power)
    }

    fn assemble(
        kind: ModelKind,
        shape: SubbotinShape,
        tau: f64,
        effect: f64,
        bayes_threshold: f64,
        power: f64,
    ) -> Result<Self> {
        if !(bayes_threshold > 0.0 && bayes_threshold < 1.0) {
            return Err(Error::Calibration(format!(
                "Bayes threshold {bayes_threshold} is not inside (0, 1)"
            )));
        }
        if !(power > 0.0 && power < 1.0) {
            return Err(Error::Calibration(format!("Bayes power {power} is not inside (0, 1)")));
        }
        Ok(ModelSpec {
            kind,
            shape,
            tau,
            effect,
            pi0: tau / (1.0 + tau),
            pi1: 1.0 / (1.0 + tau),
            bayes_threshold,
            power,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn shape(&self) -> SubbotinShape {
        self.shape
    }

    pub fn zeta(&self) -> f64 {
        self.shape.zeta()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `μ` for location models, `σ` for scale models.
    pub fn effect(&self) -> f64 {
        self.effect
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }

    pub fn pi1(&self) -> f64 {
        self.pi1
    }

    /// `t^B = f⁻¹(τ)`.
    pub fn bayes_threshold(&self) -> f64 {
        self.bayes_threshold
    }

    /// `C = F(t^B)`.
    pub fn power(&self) -> f64 {
        self.power
    }

    /// `f(0⁺)`; infinite for every admissible Subbotin model.
    pub fn alt_pdf_at_zero(&self) -> f64 {
        f64::INFINITY
    }

    /// `f(1⁻)`: 0 for location models, `1/σ` for scale models.
    pub fn alt_pdf_at_one(&self) -> f64 {
        match self.kind {
            ModelKind::Location => 0.0,
            ModelKind::Scale => 1.0 / self.effect,
        }
    }

    /// Alternative p-value c.d.f. `F(t)`.
    pub fn alt_cdf(&self, t: f64) -> Result<f64> {
        check_unit_closed("t", t)?;
        Ok(self.cdf(t))
    }

    /// Alternative p-value density `f(t) = F'(t)`.
    pub fn alt_pdf(&self, t: f64) -> Result<f64> {
        check_unit_open("t", t)?;
        Ok(self.pdf(t))
    }

    /// Secant slope `Ψ(t) = F(t)/t`.
    pub fn psi_ratio(&self, t: f64) -> Result<f64> {
        check_unit_open("t", t)?;
        Ok(self.psi(t))
    }

    /// Mixture c.d.f. of the p-values, `G(t) = π₀ t + π₁ F(t)`.
    pub fn mixture_cdf(&self, t: f64) -> Result<f64> {
        check_unit_closed("t", t)?;
        Ok(self.mixture(t))
    }

    /// Solves `f(t) = y` for `y ∈ (f(1⁻), ∞)`.
    pub fn inverse_alt_pdf(&self, y: f64) -> Result<f64> {
        let lo = self.alt_pdf_at_one();
        if !(y > lo) {
            return Err(range("f^-1 argument", y, lo, f64::INFINITY, Side::Below));
        }
        if !y.is_finite() {
            return Err(range("f^-1 argument", y, lo, f64::INFINITY, Side::Above));
        }
        match self.kind {
            ModelKind::Location => {
                let x = location_bayes_statistic(&self.shape, self.effect, y.ln())?;
                Ok(self.shape.tail(x))
            }
            ModelKind::Scale => {
                let x = scale_bayes_statistic(&self.shape, self.effect, y.ln());
                Ok(2.0 * self.shape.tail(x))
            }
        }
    }

    /// Solves `Ψ(t) = y` for `y ∈ (1, ∞)`.
    pub fn inverse_psi(&self, y: f64) -> Result<f64> {
        if !(y > 1.0) {
            return Err(range("Psi^-1 argument", y, 1.0, f64::INFINITY, Side::Below));
        }
        if !y.is_finite() {
            return Err(range("Psi^-1 argument", y, 1.0, f64::INFINITY, Side::Above));
        }
        let target = y.ln();
        let shape = self.shape;
        let effect = self.effect;
        match self.kind {
            ModelKind::Location => {
                // ln Ψ as a function of the statistic x = D̄⁻¹(t) is increasing
                let k = |x: f64| shape.ln_tail(x - effect) - shape.ln_tail(x) - target;
                let (lo, hi) = expand_both(k, -1.0, effect + 1.0, 200)?;
                let x = brent(k, lo, hi, 1e-15 * (1.0 + hi.abs()))?;
                Ok(shape.tail(x))
            }
            ModelKind::Scale => {
                let k = |x: f64| shape.ln_tail(x / effect) - shape.ln_tail(x) - target;
                let (lo, hi) = expand_upper(k, 0.0, 1.0, 200)?;
                let x = brent(k, lo, hi, 1e-15 * (1.0 + hi.abs()))?;
                Ok(2.0 * shape.tail(x))
            }
        }
    }

    pub(crate) fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        match self.kind {
            ModelKind::Location => self.shape.tail(self.shape.inv_tail(t) - self.effect),
            ModelKind::Scale => {
                2.0 * self.shape.tail(self.shape.inv_tail(0.5 * t) / self.effect)
            }
        }
    }

    pub(crate) fn pdf(&self, t: f64) -> f64 {
        let z = self.shape.zeta();
        match self.kind {
            ModelKind::Location => {
                let x = self.shape.inv_tail(t);
                ((x.abs().powf(z) - (x - self.effect).abs().powf(z)) / z).exp()
            }
            ModelKind::Scale => {
                let x = self.shape.inv_tail(0.5 * t);
                let s = self.effect;
                ((x.powf(z) - (x / s).powf(z)) / z - s.ln()).exp()
            }
        }
    }

    pub(crate) fn psi(&self, t: f64) -> f64 {
        self.cdf(t) / t
    }

    pub(crate) fn mixture(&self, t: f64) -> f64 {
        (self.pi0 * t + self.pi1 * self.cdf(t)).min(1.0)
    }
}

/// Builds the model with Bayes power `C` at sparsity `τ`.
///
/// Location models use the closed form
/// `μ = (ζ ln τ + |D̄⁻¹(C)|^ζ)^{1/ζ} - D̄⁻¹(C)`; scale models solve
/// `f_σ(F_σ⁻¹(C)) = τ` for `σ > 1`.
pub fn calibrate(
    kind: ModelKind,
    shape: SubbotinShape,
    params: CanonicalParams,
    m: usize,
) -> Result<ModelSpec> {
    let tau = params.sparsity.tau(m)?;
    check_tau(tau)?;
    let c = params.power;
    if !(c > 0.0 && c < 1.0) {
        return Err(domain(format!("Bayes power must lie in (0, 1), got {c}")));
    }
    let zeta = shape.zeta();
    let model = match kind {
        ModelKind::Location => {
            check_location_shape(&shape)?;
            let z = shape.inv_tail(c);
            let x = (zeta * tau.ln() + z.abs().powf(zeta)).powf(1.0 / zeta);
            let mu = x - z;
            ModelSpec::location(shape, tau, mu)
        }
        ModelKind::Scale => {
            let sigma = calibrate_scale(&shape, c, tau)?;
            ModelSpec::scale(shape, tau, sigma)
        }
    }
    .map_err(|e| match e {
        Error::Calibration(msg) => Error::Calibration(format!("C = {c}, tau = {tau}: {msg}")),
        other => other,
    })?;
    if (model.power - c).abs() > CALIBRATION_TOL {
        return Err(Error::Calibration(format!(
            "requested power {c} at tau = {tau} is numerically degenerate (achieved {})",
            model.power
        )));
    }
    Ok(model)
}

/// Root in σ of `z^ζ (σ^ζ - 1)/ζ - ln σ - ln τ` with `z = D̄⁻¹(C/2)`.
fn calibrate_scale(shape: &SubbotinShape, c: f64, tau: f64) -> Result<f64> {
    let zeta = shape.zeta();
    let z = shape.inv_tail(0.5 * c);
    if !(z > 0.0) {
        return Err(Error::Calibration(format!("power {c} too close to 1")));
    }
    let zz = z.powf(zeta) / zeta;
    let ln_tau = tau.ln();
    let g = |s: f64| zz * (zeta * s.ln()).exp_m1() - s.ln() - ln_tau;
    let lo = 1.0 + 1e-9;
    if g(lo) >= 0.0 {
        return Err(Error::Calibration(format!(
            "no scale factor above 1 reaches tau = {tau} at power {c}"
        )));
    }
    let (lo, hi) = expand_upper(g, lo, 2.0, 1100)
        .map_err(|_| Error::Calibration(format!("scale bracket not found for C = {c}, tau = {tau}")))?;
    brent(g, lo, hi, 1e-15 * hi).map_err(|e| Error::Calibration(e.to_string()))
}

/// Statistic `x` with `d(x - μ)/d(x) = exp(ln_y)`.
fn location_bayes_statistic(shape: &SubbotinShape, mu: f64, ln_y: f64) -> Result<f64> {
    let zeta = shape.zeta();
    if zeta == 2.0 {
        return Ok((2.0 * ln_y + mu * mu) / (2.0 * mu));
    }
    let h = |x: f64| (x.abs().powf(zeta) - (x - mu).abs().powf(zeta)) / zeta - ln_y;
    let (lo, hi) = expand_both(h, -1.0, mu + 1.0, 400)?;
    brent(h, lo, hi, 1e-15 * (1.0 + lo.abs().max(hi.abs())))
}

/// Statistic `x >= 0` with `d(x/σ)/(σ d(x)) = exp(ln_y)`; closed form.
fn scale_bayes_statistic(shape: &SubbotinShape, sigma: f64, ln_y: f64) -> f64 {
    let zeta = shape.zeta();
    let denom = -(-zeta * sigma.ln()).exp_m1();
    (zeta * (ln_y + sigma.ln()) / denom).powf(1.0 / zeta)
}

fn check_location_shape(shape: &SubbotinShape) -> Result<()> {
    if shape.zeta() <= 1.0 {
        Err(domain("location models require zeta > 1 (Laplace location is not supported)"))
    } else {
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 1.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("tau must be finite and > 1, got {tau}")))
    }
}

fn range(what: &'static str, value: f64, lo: f64, hi: f64, side: Side) -> Error {
    Error::Range {
        what,
        value,
        lo,
        hi,
        side,
    }
}
