use std::io::Write;

use anyhow::{Context, Result};
use clap::Args;
use sparse_fdr::model::Sparsity;
use sparse_fdr::risk::{
    bayes_risk, bfdr_risk, bound_cor41, bound_thm31_lower, bound_thm31_upper, bound_thm32_upper,
    exact_fdr_risk, BoundParams, BoundTarget, CorollaryCase, RiskReport, EXACT_FDR_CAP,
};
use sparse_fdr::threshold::{bfdr_threshold, q_opt};

use crate::args::{fmt_opt, num, LevelArgs, ModelArgs, RunArgs};

#[derive(Debug, Args)]
pub struct RiskArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub level: LevelArgs,
    /// Fail instead of skipping the exact FDR risk when m exceeds its cap
    #[arg(long)]
    pub exact_fdr: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

pub const CSV_HEADER: [&str; 16] = [
    "family",
    "zeta",
    "m",
    "tau",
    "C",
    "effect",
    "alpha_rule",
    "alpha",
    "bayes_threshold",
    "bfdr_threshold",
    "q_opt",
    "bayes_risk",
    "bfdr_risk",
    "fdr_risk",
    "bfdr_excess_rel",
    "fdr_excess_rel",
];

pub fn run(args: &RiskArgs) -> Result<()> {
    let file = args.run.load()?;
    let rm = args.model.resolve(&file)?;
    let rule = args.level.require(&file)?;
    let (model, m, family) = (&rm.model, rm.m, rm.family);
    let alpha = rule.resolve(family.kind, family.shape, m)?.resolved_alpha;

    let t_star = bfdr_threshold(model, alpha)?.value;
    let bfdr = bfdr_risk(model, alpha)?;
    let fdr: Option<RiskReport> = if m <= EXACT_FDR_CAP || args.exact_fdr {
        Some(exact_fdr_risk(model, m, alpha).context("exact FDR risk")?)
    } else {
        None
    };
    let params = BoundParams::default();
    let cor = |target, case_a| {
        let p = BoundParams { case_a, ..params };
        bound_cor41(model, m, alpha, &p, target).ok().flatten()
    };
    let bounds = [
        ("bfdr_excess_upper", bound_thm31_upper(model, alpha).ok()),
        ("bfdr_ratio_lower", bound_thm31_lower(model, alpha).ok()),
        ("fdr_excess_upper", bound_thm32_upper(model, m, alpha, &params).ok()),
        ("bfdr_rate", cor(BoundTarget::Bfdr, CorollaryCase::One)),
        ("fdr_rate_case1", cor(BoundTarget::Fdr, CorollaryCase::One)),
        ("fdr_rate_case2", cor(BoundTarget::Fdr, CorollaryCase::Two)),
    ];

    let effect_name = match family.kind {
        sparse_fdr::model::ModelKind::Location => "mu",
        sparse_fdr::model::ModelKind::Scale => "sigma",
    };
    let mut stdout = std::io::stdout().lock();
    let r = &mut stdout;
    writeln!(r, "family = {}", family.label())?;
    match rm.sparsity {
        Sparsity::Beta(b) => writeln!(r, "m = {m}, beta = {b}, tau = {}", num(model.tau()))?,
        Sparsity::Tau(t) => writeln!(r, "m = {m}, tau = {}", num(t))?,
    }
    writeln!(r, "pi0 = {}, pi1 = {}", num(model.pi0()), num(model.pi1()))?;
    writeln!(r, "C = {}", num(model.power()))?;
    writeln!(r, "{effect_name} = {}", num(model.effect()))?;
    writeln!(r, "bayes threshold t^B = {}", num(model.bayes_threshold()))?;
    writeln!(r, "q_opt = {}", num(q_opt(model)))?;
    writeln!(r, "alpha = {} ({rule})", num(alpha))?;
    writeln!(r, "bfdr threshold t* = {}", num(t_star))?;
    writeln!(r, "bayes risk = {}", num(bayes_risk(model)))?;
    writeln!(r, "bfdr risk = {}, E = {}", num(bfdr.risk), num(bfdr.excess_rel))?;
    match &fdr {
        Some(f) => writeln!(r, "fdr risk (exact) = {}, E = {}", num(f.risk), num(f.excess_rel))?,
        None => writeln!(
            r,
            "fdr risk (exact) = NA (m > {EXACT_FDR_CAP}; pass --exact-fdr to require it)"
        )?,
    }
    writeln!(r, "bounds:")?;
    for (name, value) in bounds {
        writeln!(r, "  {name} = {}", fmt_opt(value))?;
    }

    if let Some(path) = args.run.out(&file) {
        let mut w = csv::Writer::from_path(&path)
            .with_context(|| format!("cannot create output file {}", path.display()))?;
        w.write_record(CSV_HEADER)?;
        w.write_record([
            family.kind.to_string(),
            family.shape.zeta().to_string(),
            m.to_string(),
            model.tau().to_string(),
            model.power().to_string(),
            model.effect().to_string(),
            rule.to_string(),
            alpha.to_string(),
            model.bayes_threshold().to_string(),
            t_star.to_string(),
            q_opt(model).to_string(),
            bayes_risk(model).to_string(),
            bfdr.risk.to_string(),
            fmt_opt(fdr.as_ref().map(|f| f.risk)),
            bfdr.excess_rel.to_string(),
            fmt_opt(fdr.as_ref().map(|f| f.excess_rel)),
        ])?;
        w.flush()?;
    }
    Ok(())
}
