//! Threshold rules on the p-value scale.
//!
//! Deterministic rules (Bayes, BFDR) read the model; empirical rules (BH,
//! FDR) read data. The optimal level `α^opt(β₀, C₀)` picks the BFDR/FDR
//! level that would be Bayes-optimal in a reference model.

use std::fmt;

use crate::error::{check_finite, check_unit_open, domain, Error, Result};
use crate::model::{calibrate, CanonicalParams, ModelKind, ModelSpec, Sparsity};
use crate::solve::{brent, expand_upper};
use crate::subbotin::SubbotinShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Bayes,
    Bfdr,
    Bh,
    Fdr,
    /// FDR threshold whose BH crossing set was empty, i.e. the `α/m` floor.
    Bonferroni,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Bayes => "bayes",
            Provenance::Bfdr => "bfdr",
            Provenance::Bh => "bh",
            Provenance::Fdr => "fdr",
            Provenance::Bonferroni => "bonferroni",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    /// Cutoff on the p-value scale; reject when `p <= value`.
    pub value: f64,
    pub provenance: Provenance,
    /// Number of BH crossings for empirical rules.
    pub k_hat: Option<usize>,
    /// Equivalent cutoff on the test-statistic scale, when computed from statistics.
    pub statistic: Option<f64>,
}

impl ThresholdResult {
    fn new(value: f64, provenance: Provenance) -> Self {
        ThresholdResult {
            value,
            provenance,
            k_hat: None,
            statistic: None,
        }
    }

    /// Whether a p-value is declared a signal.
    pub fn rejects(&self, p: f64) -> bool {
        p <= self.value
    }
}

pub fn bayes_threshold(model: &ModelSpec) -> ThresholdResult {
    ThresholdResult::new(model.bayes_threshold(), Provenance::Bayes)
}

/// BFDR threshold `t★ = Ψ⁻¹(qτ)` with `q = 1/α - 1`, for `α ∈ (0, π₀)`.
pub fn bfdr_threshold(model: &ModelSpec, alpha: f64) -> Result<ThresholdResult> {
    if !(alpha > 0.0 && alpha < model.pi0()) {
        return Err(Error::Level {
            alpha,
            lo: 0.0,
            hi: model.pi0(),
        });
    }
    let q = 1.0 / alpha - 1.0;
    let t = model.inverse_psi(q * model.tau())?;
    Ok(ThresholdResult::new(t, Provenance::Bfdr))
}

/// Bayesian FDR `π₀ t / G(t) = (1 + Ψ(t)/τ)⁻¹`.
pub fn bfdr_of(model: &ModelSpec, t: f64) -> Result<f64> {
    check_unit_open("t", t)?;
    Ok(1.0 / (1.0 + model.psi(t) / model.tau()))
}

/// Optimal recovery parameter `C / (τ t^B)`.
pub fn q_opt(model: &ModelSpec) -> f64 {
    model.power() / (model.tau() * model.bayes_threshold())
}

/// Level `(1 + q)⁻¹` matching a recovery parameter.
pub fn alpha_from_q(q: f64) -> f64 {
    1.0 / (1.0 + q)
}

/// Model families with explicit `α^opt` equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptFamily {
    GaussianLocation,
    GaussianScale,
    LaplaceScale,
}

impl OptFamily {
    pub fn kind(&self) -> ModelKind {
        match self {
            OptFamily::GaussianLocation => ModelKind::Location,
            OptFamily::GaussianScale | OptFamily::LaplaceScale => ModelKind::Scale,
        }
    }

    pub fn shape(&self) -> SubbotinShape {
        match self {
            OptFamily::GaussianLocation | OptFamily::GaussianScale => SubbotinShape::gaussian(),
            OptFamily::LaplaceScale => SubbotinShape::laplace(),
        }
    }

    /// The family with this kind and exponent, if any.
    pub fn matching(kind: ModelKind, zeta: f64) -> Option<Self> {
        match (kind, zeta) {
            (ModelKind::Location, 2.0) => Some(OptFamily::GaussianLocation),
            (ModelKind::Scale, 2.0) => Some(OptFamily::GaussianScale),
            (ModelKind::Scale, 1.0) => Some(OptFamily::LaplaceScale),
            _ => None,
        }
    }
}

impl fmt::Display for OptFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OptFamily::GaussianLocation => "gaussian-location",
            OptFamily::GaussianScale => "gaussian-scale",
            OptFamily::LaplaceScale => "laplace-scale",
        };
        f.write_str(s)
    }
}

fn check_opt_args(m: usize, beta0: f64, c0: f64) -> Result<()> {
    if m < 2 {
        return Err(domain(format!("alpha_opt needs m >= 2, got {m}")));
    }
    if !(beta0 > 0.0 && beta0 <= 1.0) {
        return Err(domain(format!("beta0 must lie in (0, 1], got {beta0}")));
    }
    if !(c0 > 0.0 && c0 < 1.0) {
        return Err(domain(format!("C0 must lie in (0, 1), got {c0}")));
    }
    Ok(())
}

/// `α^opt(β₀, C₀) = (1 + q^opt)⁻¹` from the explicit family equations.
pub fn alpha_opt(family: OptFamily, m: usize, beta0: f64, c0: f64) -> Result<f64> {
    check_opt_args(m, beta0, c0)?;
    let ln_m = (m as f64).ln();
    let g = SubbotinShape::gaussian();
    let ln_q = match family {
        OptFamily::GaussianLocation => {
            let z = g.inv_tail(c0);
            let ln_t = g.ln_tail((z * z + 2.0 * beta0 * ln_m).sqrt());
            -beta0 * ln_m + c0.ln() - ln_t
        }
        OptFamily::GaussianScale => {
            let z = g.inv_tail(0.5 * c0);
            let h = |x: f64| z * z * (x * x - 1.0) - 2.0 * beta0 * ln_m - 2.0 * x.ln();
            let (lo, hi) = expand_upper(h, 1.0, 2.0, 200)?;
            let x = brent(h, lo, hi, 1e-15 * hi)?;
            let ln_t = std::f64::consts::LN_2 + g.ln_tail(z * x);
            -beta0 * ln_m + c0.ln() - ln_t
        }
        OptFamily::LaplaceScale => {
            let k = -c0.ln();
            let h = |y: f64| (y - 1.0) * k - beta0 * ln_m - y.ln();
            let (lo, hi) = expand_upper(h, 1.0, 2.0, 1100)?;
            brent(h, lo, hi, 1e-15 * hi)?.ln()
        }
    };
    Ok(1.0 / (1.0 + ln_q.exp()))
}

/// `α^opt(β₀, C₀)` for any kind and exponent, through calibration of the reference model.
pub fn alpha_opt_general(
    kind: ModelKind,
    shape: SubbotinShape,
    m: usize,
    beta0: f64,
    c0: f64,
) -> Result<f64> {
    check_opt_args(m, beta0, c0)?;
    let reference = calibrate(kind, shape, CanonicalParams::new(Sparsity::Beta(beta0), c0), m)?;
    Ok(alpha_from_q(q_opt(&reference)))
}

/// How the nominal level of a BFDR/FDR procedure is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelRule {
    Fixed(f64),
    OptAt { beta0: f64, c0: f64 },
}

impl LevelRule {
    pub fn resolve(&self, kind: ModelKind, shape: SubbotinShape, m: usize) -> Result<LevelChoice> {
        let resolved_alpha = match *self {
            LevelRule::Fixed(alpha) => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::Level {
                        alpha,
                        lo: 0.0,
                        hi: 1.0,
                    });
                }
                alpha
            }
            LevelRule::OptAt { beta0, c0 } => match OptFamily::matching(kind, shape.zeta()) {
                Some(family) => alpha_opt(family, m, beta0, c0)?,
                None => alpha_opt_general(kind, shape, m, beta0, c0)?,
            },
        };
        Ok(LevelChoice {
            rule: *self,
            resolved_alpha,
        })
    }
}

impl fmt::Display for LevelRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelRule::Fixed(a) => write!(f, "fixed:{a}"),
            LevelRule::OptAt { beta0, c0 } => write!(f, "opt:{beta0}:{c0}"),
        }
    }
}

impl std::str::FromStr for LevelRule {
    type Err = Error;

    /// Parses `fixed:A`, a bare number, or `opt:B0:C0`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || domain(format!("cannot parse level rule `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [a] => a.parse().map(LevelRule::Fixed).map_err(|_| bad()),
            ["fixed", a] => a.parse().map(LevelRule::Fixed).map_err(|_| bad()),
            ["opt", b, c] => Ok(LevelRule::OptAt {
                beta0: b.parse().map_err(|_| bad())?,
                c0: c.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelChoice {
    pub rule: LevelRule,
    pub resolved_alpha: f64,
}

fn check_pvalues(pvalues: &[f64], alpha: f64) -> Result<()> {
    if pvalues.is_empty() {
        return Err(domain("no observations"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if let Some((i, p)) = pvalues.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(domain(format!("p-value #{} = {p} is outside [0, 1]", i + 1)));
    }
    Ok(())
}

/// Step-up level `α k / m`.
pub fn step_level(alpha: f64, k: usize, m: usize) -> f64 {
    alpha * (k as f64 / m as f64)
}

/// Step-up crossing count `max{k : p_(k) <= αk/m}` over ascending p-values.
fn step_up(sorted: &[f64], alpha: f64) -> usize {
    let m = sorted.len();
    (1..=m)
        .rev()
        .find(|&k| sorted[k - 1] <= step_level(alpha, k, m))
        .unwrap_or(0)
}

/// Benjamini–Hochberg threshold `α k̂ / m` (0 when nothing crosses).
pub fn bh_threshold(pvalues: &[f64], alpha: f64) -> Result<ThresholdResult> {
    check_pvalues(pvalues, alpha)?;
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = step_up(&sorted, alpha);
    Ok(ThresholdResult {
        value: step_level(alpha, k, pvalues.len()),
        provenance: Provenance::Bh,
        k_hat: Some(k),
        statistic: None,
    })
}

/// FDR threshold: BH floored at the Bonferroni cutoff `α/m`.
pub fn fdr_threshold(pvalues: &[f64], alpha: f64) -> Result<ThresholdResult> {
    let bh = bh_threshold(pvalues, alpha)?;
    Ok(floor_bh(bh, alpha, pvalues.len()))
}

fn floor_bh(bh: ThresholdResult, alpha: f64, m: usize) -> ThresholdResult {
    if bh.k_hat == Some(0) {
        ThresholdResult {
            value: step_level(alpha, 1, m),
            provenance: Provenance::Bonferroni,
            ..bh
        }
    } else {
        ThresholdResult {
            provenance: Provenance::Fdr,
            ..bh
        }
    }
}

/// Bonferroni threshold `α/m`.
pub fn bonferroni_threshold(m: usize, alpha: f64) -> Result<ThresholdResult> {
    if m == 0 {
        return Err(domain("no observations"));
    }
    check_unit_open("alpha", alpha)?;
    Ok(ThresholdResult::new(step_level(alpha, 1, m), Provenance::Bonferroni))
}

/// Standardizes a statistic into a p-value.
pub fn statistic_pvalue(kind: ModelKind, shape: &SubbotinShape, x: f64) -> f64 {
    match kind {
        ModelKind::Location => shape.tail(x),
        ModelKind::Scale => (2.0 * shape.tail(x.abs())).min(1.0),
    }
}

/// FDR thresholding directly on test statistics.
///
/// Location: `k̂ = max{k : X_(k) >= D̄⁻¹(αk/m)}` over decreasing `X_(k)`;
/// scale: the same on `|X|` with `D̄⁻¹(αk/(2m))`. An empty crossing set
/// thresholds at `k = 1`. The returned `value` is the p-value cutoff and
/// `statistic` the cutoff on the statistic scale.
pub fn fdr_threshold_stats(
    stats: &[f64],
    kind: ModelKind,
    shape: &SubbotinShape,
    alpha: f64,
) -> Result<ThresholdResult> {
    if stats.is_empty() {
        return Err(domain("no observations"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    for (i, &x) in stats.iter().enumerate() {
        check_finite(&format!("statistic #{}", i + 1), x)?;
    }
    let m = stats.len();
    let mut sorted: Vec<f64> = match kind {
        ModelKind::Location => stats.to_vec(),
        ModelKind::Scale => stats.iter().map(|x| x.abs()).collect(),
    };
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cut = |k: usize| {
        let level = step_level(alpha, k, m);
        match kind {
            ModelKind::Location => shape.inv_tail(level),
            ModelKind::Scale => shape.inv_tail(0.5 * level),
        }
    };
    let k = (1..=m).rev().find(|&k| sorted[k - 1] >= cut(k)).unwrap_or(0);
    let bh = ThresholdResult {
        value: step_level(alpha, k, m),
        provenance: Provenance::Bh,
        k_hat: Some(k),
        statistic: Some(cut(k.max(1))),
    };
    Ok(floor_bh(bh, alpha, m))
}
