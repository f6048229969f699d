use std::io::Write;

use anyhow::{bail, Result};
use clap::Args;
use sparse_fdr::grid::{run_grid, GridConfig, Procedure};
use sparse_fdr::model::ModelKind;
use sparse_fdr::threshold::LevelRule;
use sparse_fdr::SubbotinShape;

use crate::args::{Family, FamilyArgs, RunArgs};
use crate::output::Output;

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Comma-separated list of m values
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<usize>>,
    /// Comma-separated beta grid
    #[arg(long, value_delimiter = ',')]
    pub beta_grid: Option<Vec<f64>>,
    /// Comma-separated C grid
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    /// Comma-separated fixed levels of the BFDR and FDR procedures
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Reference parameters of the optimal level and of the misspecified Bayes rule
    #[arg(long, num_args = 2, value_names = ["B0", "C0"])]
    pub alpha_opt: Option<Vec<f64>>,
    /// Comma-separated subset of bayes0, bfdr, fdr
    #[arg(long, value_delimiter = ',')]
    pub procedures: Option<Vec<String>>,
    /// Level of the excess-risk set counted in the summary
    #[arg(long)]
    pub excess_level: Option<f64>,
    #[command(flatten)]
    pub run: RunArgs,
}

fn procedures(names: &[String], fixed: &[f64], beta0: f64, c0: f64) -> Result<Vec<Procedure>> {
    let mut rules: Vec<LevelRule> = fixed.iter().map(|&a| LevelRule::Fixed(a)).collect();
    rules.push(LevelRule::OptAt { beta0, c0 });
    for n in names {
        if !["bayes0", "bfdr", "fdr"].contains(&n.as_str()) {
            bail!("unknown procedure `{n}` (expected bayes0, bfdr or fdr)");
        }
    }
    let has = |n: &str| names.iter().any(|x| x == n);
    let mut v = Vec::new();
    if has("bayes0") {
        v.push(Procedure::Bayes0 { beta0, c0 });
    }
    if has("bfdr") {
        v.extend(rules.iter().map(|&r| Procedure::Bfdr(r)));
    }
    if has("fdr") {
        v.extend(rules.iter().map(|&r| Procedure::Fdr(r)));
    }
    if v.is_empty() {
        bail!("no procedures selected");
    }
    Ok(v)
}

pub fn run(args: &GridArgs) -> Result<()> {
    let file = args.run.load()?;
    let defaults = GridConfig::default();
    let family = if args.family.family.is_none() && file.model.family.is_none() {
        Family {
            kind: ModelKind::Location,
            shape: SubbotinShape::new(args.family.zeta.or(file.model.zeta).unwrap_or(2.0))?,
        }
    } else {
        args.family.resolve(&file)?
    };
    let reference = args
        .alpha_opt
        .clone()
        .or_else(|| file.level.alpha_opt.map(|v| v.to_vec()))
        .unwrap_or_else(|| vec![0.5, 0.5]);
    let fixed = args
        .alpha
        .clone()
        .or_else(|| file.grid.alphas.clone())
        .unwrap_or_else(|| vec![0.1, 0.2, 0.25]);
    let names = args
        .procedures
        .clone()
        .or_else(|| file.grid.procedures.clone())
        .unwrap_or_else(|| vec!["bayes0".into(), "bfdr".into(), "fdr".into()]);
    let config = GridConfig {
        kind: family.kind,
        shape: family.shape,
        m_list: args.m.clone().or_else(|| file.grid.m.clone()).unwrap_or(defaults.m_list),
        beta_grid: args.beta_grid.clone().or_else(|| file.grid.beta.clone()).unwrap_or(defaults.beta_grid),
        c_grid: args.c_grid.clone().or_else(|| file.grid.c.clone()).unwrap_or(defaults.c_grid),
        procedures: procedures(&names, &fixed, reference[0], reference[1])?,
        excess_level: args.excess_level.or(file.grid.excess_level).unwrap_or(defaults.excess_level),
    };
    let output = run_grid(&config, args.run.threads(&file)?)?;
    let mut out = Output::open(args.run.out(&file).as_deref())?;
    output.write_csv(&mut out.csv)?;
    out.csv.flush()?;
    writeln!(
        out.report,
        "grid: {} {}, {} cells x {} procedures, {} rows, {} failures",
        family.kind,
        family.shape.zeta(),
        config.m_list.len() * config.beta_grid.len() * config.c_grid.len(),
        config.procedures.len(),
        output.rows.len(),
        output.failures()
    )?;
    output.write_summary(&mut out.report, config.excess_level)?;
    Ok(())
}
