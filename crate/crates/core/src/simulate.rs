//! Monte Carlo simulation of the two-group model.
//!
//! Replicate `r` draws from a ChaCha8 stream keyed by `(seed, r)`, so runs
//! are reproducible bit for bit whatever the number of worker threads.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::model::{ModelKind, ModelSpec};
use crate::subbotin::{Form, SubbotinShape};
use crate::threshold::{bfdr_threshold, bh_threshold, fdr_threshold, statistic_pvalue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RiskKind {
    /// Misclassification rate on the sample itself.
    Transductive,
    /// Risk of the data-driven threshold on a fresh observation.
    Inductive,
}

impl fmt::Display for RiskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RiskKind::Transductive => f.write_str("transductive"),
            RiskKind::Inductive => f.write_str("inductive"),
        }
    }
}

impl std::str::FromStr for RiskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transductive" => Ok(RiskKind::Transductive),
            "inductive" => Ok(RiskKind::Inductive),
            _ => Err(domain(format!(
                "unknown risk kind `{s}` (expected transductive or inductive)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub model: ModelSpec,
    pub m: usize,
    pub replicates: usize,
    pub seed: u64,
    pub risk_kind: RiskKind,
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(domain("simulation needs m >= 1"));
        }
        if self.replicates == 0 {
            return Err(domain("simulation needs at least one replicate"));
        }
        Ok(())
    }
}

/// How each replicate is thresholded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// A cutoff fixed in advance (Bayes, BFDR, null threshold, ...).
    Fixed(f64),
    Bh(f64),
    Fdr(f64),
}

impl ThresholdRule {
    fn cutoff(&self, pvalues: &[f64]) -> Result<f64> {
        match *self {
            ThresholdRule::Fixed(t) => Ok(t),
            ThresholdRule::Bh(alpha) => Ok(bh_threshold(pvalues, alpha)?.value),
            ThresholdRule::Fdr(alpha) => Ok(fdr_threshold(pvalues, alpha)?.value),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ThresholdRule::Fixed(t) if !(0.0..=1.0).contains(&t) => {
                Err(domain(format!("fixed threshold must lie in [0, 1], got {t}")))
            }
            ThresholdRule::Bh(a) | ThresholdRule::Fdr(a) if !(a > 0.0 && a < 1.0) => {
                Err(domain(format!("alpha must lie in (0, 1), got {a}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `true` for signal (label 1).
    pub labels: Vec<bool>,
    pub statistics: Vec<f64>,
    pub pvalues: Vec<f64>,
}

/// Generator for replicate `replicate` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// One draw from the Subbotin density.
pub fn sample_subbotin<R: Rng + ?Sized>(shape: &SubbotinShape, rng: &mut R) -> f64 {
    match shape.form() {
        Form::Gaussian => rng.sample(StandardNormal),
        Form::Laplace => {
            let e: f64 = rng.sample(Exp1);
            if rng.random::<bool>() {
                e
            } else {
                -e
            }
        }
        Form::General => {
            // open interval keeps the quantile finite
            let u: f64 = loop {
                let u = rng.random::<f64>();
                if u > 0.0 {
                    break u;
                }
            };
            shape.inv_tail(u)
        }
    }
}

fn draw(model: &ModelSpec, m: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let shape = model.shape();
    let mut labels = Vec::with_capacity(m);
    let mut statistics = Vec::with_capacity(m);
    let mut pvalues = Vec::with_capacity(m);
    for _ in 0..m {
        let h = rng.random::<f64>() < model.pi1();
        let z = sample_subbotin(&shape, rng);
        let x = match (h, model.kind()) {
            (false, _) => z,
            (true, ModelKind::Location) => z + model.effect(),
            (true, ModelKind::Scale) => z * model.effect(),
        };
        labels.push(h);
        statistics.push(x);
        pvalues.push(statistic_pvalue(model.kind(), &shape, x));
    }
    Dataset {
        labels,
        statistics,
        pvalues,
    }
}

/// Replicate `replicate` of the configured run.
pub fn sample_replicate(config: &SimConfig, replicate: u64) -> Result<Dataset> {
    config.validate()?;
    let mut rng = replicate_rng(config.seed, replicate);
    Ok(draw(&config.model, config.m, &mut rng))
}

/// The first replicate of the configured run.
pub fn sample_dataset(config: &SimConfig) -> Result<Dataset> {
    sample_replicate(config, 0)
}

/// Mean of independent replicates with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√replicates`.
    pub se: f64,
    pub replicates: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        McEstimate {
            mean,
            se: (var / n).sqrt(),
            replicates: xs.len(),
        }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.se
    }
}

/// Runs `f` on every replicate in parallel and returns the results in replicate order.
fn per_replicate<T, F>(config: &SimConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Dataset) -> Result<T> + Sync,
{
    config.validate()?;
    (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(config.seed, r);
            f(draw(&config.model, config.m, &mut rng))
        })
        .collect()
}

/// Monte Carlo risk of a thresholding rule.
pub fn mc_risk(config: &SimConfig, rule: ThresholdRule) -> Result<McEstimate> {
    rule.validate()?;
    let model = config.model;
    let kind = config.risk_kind;
    let losses = per_replicate(config, |d| {
        let t = rule.cutoff(&d.pvalues)?;
        Ok(match kind {
            RiskKind::Inductive => model.pi0() * t + model.pi1() * (1.0 - model.cdf(t)),
            RiskKind::Transductive => {
                let wrong = d
                    .labels
                    .iter()
                    .zip(&d.pvalues)
                    .filter(|(&h, &p)| h != (p <= t))
                    .count();
                wrong as f64 / d.labels.len() as f64
            }
        })
    })?;
    Ok(McEstimate::from_samples(&losses))
}

/// Empirical spread of the FDR threshold against its deterministic surrogates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationProfile {
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    /// BFDR threshold at level `α π₀`.
    pub bfdr_reference: f64,
    /// Bonferroni threshold `α/m`.
    pub bonferroni: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn concentration_profile(config: &SimConfig, alpha: f64) -> Result<ConcentrationProfile> {
    ThresholdRule::Fdr(alpha).validate()?;
    let mut ts = per_replicate(config, |d| Ok(fdr_threshold(&d.pvalues, alpha)?.value))?;
    ts.sort_by(f64::total_cmp);
    let model = &config.model;
    Ok(ConcentrationProfile {
        q05: quantile_sorted(&ts, 0.05),
        median: quantile_sorted(&ts, 0.5),
        q95: quantile_sorted(&ts, 0.95),
        bfdr_reference: bfdr_threshold(model, alpha * model.pi0())?.value,
        bonferroni: alpha / config.m as f64,
    })
}

/// False discovery proportion of BH at level `alpha` when every label is 0.
pub fn null_fdp(m: usize, replicates: usize, seed: u64, alpha: f64) -> Result<McEstimate> {
    if m == 0 || replicates == 0 {
        return Err(domain("null FDP needs m >= 1 and at least one replicate"));
    }
    ThresholdRule::Bh(alpha).validate()?;
    let fdp: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            let p: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let k = bh_threshold(&p, alpha)?.k_hat.unwrap_or(0);
            // every rejection is false, so FDP = 1{R > 0}
            Ok(if k > 0 { 1.0 } else { 0.0 })
        })
        .collect::<Result<_>>()?;
    Ok(McEstimate::from_samples(&fdp))
}
