use std::io::Write;

use anyhow::{bail, Result};
use clap::Args;
use sparse_fdr::risk::exact_fdr_risk;
use sparse_fdr::simulate::{concentration_profile, mc_risk, McEstimate, RiskKind, SimConfig, ThresholdRule};
use sparse_fdr::threshold::{bayes_threshold, bfdr_threshold};

use crate::args::{num, LevelArgs, ModelArgs, ResolvedModel, RunArgs};
use crate::output::Output;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub level: LevelArgs,
    /// transductive or inductive
    #[arg(long)]
    pub risk: Option<String>,
    /// Number of Monte Carlo replicates (default 10000)
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compare the simulated inductive FDR risk with the exact formula
    #[arg(long, conflicts_with_all = ["deterministic", "profile"])]
    pub check_exact: bool,
    /// Compare transductive and inductive risks of the Bayes threshold
    #[arg(long, conflicts_with = "profile")]
    pub deterministic: bool,
    /// Quantiles of the FDR threshold against the BFDR and Bonferroni cutoffs
    #[arg(long)]
    pub profile: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

const CSV_HEADER: [&str; 12] = [
    "seed",
    "family",
    "zeta",
    "m",
    "tau",
    "C",
    "risk_kind",
    "replicates",
    "procedure",
    "alpha",
    "estimate",
    "se",
];

const PROFILE_HEADER: [&str; 13] = [
    "seed",
    "family",
    "zeta",
    "m",
    "tau",
    "C",
    "replicates",
    "alpha",
    "q05",
    "median",
    "q95",
    "bfdr_reference",
    "bonferroni",
];

struct Row {
    risk_kind: RiskKind,
    procedure: &'static str,
    alpha: Option<f64>,
    est: McEstimate,
}

fn record(config: &SimConfig, rm: &ResolvedModel, row: &Row) -> Vec<String> {
    vec![
        config.seed.to_string(),
        rm.family.kind.to_string(),
        rm.family.shape.zeta().to_string(),
        config.m.to_string(),
        rm.model.tau().to_string(),
        rm.model.power().to_string(),
        row.risk_kind.to_string(),
        config.replicates.to_string(),
        row.procedure.to_string(),
        crate::args::fmt_opt(row.alpha),
        row.est.mean.to_string(),
        row.est.se.to_string(),
    ]
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let file = args.run.load()?;
    let rm = args.model.resolve(&file)?;
    let Some(seed) = args.seed.or(file.simulate.seed) else {
        bail!("a seed is required (--seed)");
    };
    let risk_kind: RiskKind = match args.risk.clone().or_else(|| file.simulate.risk.clone()) {
        Some(s) => s.parse()?,
        None => RiskKind::Inductive,
    };
    let mut config = SimConfig {
        model: rm.model,
        m: rm.m,
        replicates: args.replicates.or(file.simulate.replicates).unwrap_or(10_000),
        seed,
        risk_kind,
    };
    let alpha = match args.level.resolve(&file)? {
        Some(rule) => Some(rule.resolve(rm.family.kind, rm.family.shape, rm.m)?.resolved_alpha),
        None if args.deterministic => None,
        None => bail!("a level is required (--alpha or --alpha-opt)"),
    };
    let threads = args.run.threads(&file)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;

    let mut out = Output::open(args.run.out(&file).as_deref())?;
    writeln!(
        out.report,
        "seed = {seed}, replicates = {}, family = {}, m = {}, tau = {}, C = {}",
        config.replicates,
        rm.family.label(),
        rm.m,
        rm.model.tau(),
        rm.model.power()
    )?;
    let mut rows = Vec::new();
    let mut profile_csv: Option<Vec<String>> = None;
    pool.install(|| -> Result<()> {
        if args.profile {
            let a = alpha.expect("level resolved above");
            let p = concentration_profile(&config, a)?;
            writeln!(
                out.report,
                "fdr threshold quantiles: q05 = {}, median = {}, q95 = {}; bfdr(alpha pi0) = {}, alpha/m = {}",
                num(p.q05), num(p.median), num(p.q95), num(p.bfdr_reference), num(p.bonferroni)
            )?;
            profile_csv = Some(vec![
                seed.to_string(),
                rm.family.kind.to_string(),
                rm.family.shape.zeta().to_string(),
                rm.m.to_string(),
                rm.model.tau().to_string(),
                rm.model.power().to_string(),
                config.replicates.to_string(),
                a.to_string(),
                p.q05.to_string(),
                p.median.to_string(),
                p.q95.to_string(),
                p.bfdr_reference.to_string(),
                p.bonferroni.to_string(),
            ]);
        } else if args.deterministic {
            let t = bayes_threshold(&config.model).value;
            config.risk_kind = RiskKind::Transductive;
            let rt = mc_risk(&config, ThresholdRule::Fixed(t))?;
            config.risk_kind = RiskKind::Inductive;
            let ri = mc_risk(&config, ThresholdRule::Fixed(t))?;
            let agree = rt.covers(ri.mean, 3.0);
            writeln!(
                out.report,
                "{} R^T = {} (se {}) vs R^I = {} at t^B = {}",
                if agree { "PASS" } else { "FAIL" },
                num(rt.mean),
                num(rt.se),
                num(ri.mean),
                num(t)
            )?;
            rows.push(Row { risk_kind: RiskKind::Transductive, procedure: "bayes", alpha: None, est: rt });
            rows.push(Row { risk_kind: RiskKind::Inductive, procedure: "bayes", alpha: None, est: ri });
        } else if args.check_exact {
            let a = alpha.expect("level resolved above");
            config.risk_kind = RiskKind::Inductive;
            let exact = exact_fdr_risk(&config.model, config.m, a)?.risk;
            let mc = mc_risk(&config, ThresholdRule::Fdr(a))?;
            let roundoff = config.replicates as f64 * f64::EPSILON * mc.mean.abs();
            let pass = (mc.mean - exact).abs() <= 3.0 * mc.se + roundoff;
            writeln!(
                out.report,
                "{} exact = {} mc = {} (se {})",
                if pass { "PASS" } else { "FAIL" },
                num(exact),
                num(mc.mean),
                num(mc.se)
            )?;
            rows.push(Row { risk_kind: RiskKind::Inductive, procedure: "fdr", alpha: Some(a), est: mc });
        } else {
            let a = alpha.expect("level resolved above");
            let tb = bayes_threshold(&config.model).value;
            let ts = bfdr_threshold(&config.model, a)?.value;
            for (procedure, rule, lvl) in [
                ("bayes", ThresholdRule::Fixed(tb), None),
                ("bfdr", ThresholdRule::Fixed(ts), Some(a)),
                ("fdr", ThresholdRule::Fdr(a), Some(a)),
            ] {
                let est = mc_risk(&config, rule)?;
                writeln!(out.report, "{procedure}: {} (se {})", num(est.mean), num(est.se))?;
                rows.push(Row { risk_kind, procedure, alpha: lvl, est });
            }
        }
        Ok(())
    })?;
    if let Some(rec) = profile_csv {
        let mut w = out.csv_writer();
        w.write_record(PROFILE_HEADER)?;
        w.write_record(rec)?;
        w.flush()?;
    }
    if !rows.is_empty() {
        let mut w = out.csv_writer();
        w.write_record(CSV_HEADER)?;
        for row in &rows {
            w.write_record(record(&config, &rm, row))?;
        }
        w.flush()?;
    }
    Ok(())
}
