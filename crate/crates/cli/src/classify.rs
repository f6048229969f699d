use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use sparse_fdr::model::ModelKind;
use sparse_fdr::threshold::{fdr_threshold, statistic_pvalue, LevelRule};

use crate::args::{num, FamilyArgs, LevelArgs, RunArgs};
use crate::output::Output;

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// File with one statistic (or p-value) per line
    pub input: PathBuf,
    /// Treat the input as p-values instead of statistics
    #[arg(long)]
    pub pvalues: bool,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub level: LevelArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

fn read_values(path: &PathBuf, pvalues: bool) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        let v: f64 = s
            .parse()
            .map_err(|_| anyhow::anyhow!("line {}: cannot parse `{s}` as a number", i + 1))?;
        if !v.is_finite() {
            bail!("line {}: value {v} is not finite", i + 1);
        }
        if pvalues && !(0.0..=1.0).contains(&v) {
            bail!("line {}: p-value {v} is outside [0, 1]", i + 1);
        }
        values.push(v);
    }
    if values.is_empty() {
        bail!("no observations in {}", path.display());
    }
    Ok(values)
}

pub fn run(args: &ClassifyArgs) -> Result<()> {
    let file = args.run.load()?;
    let values = read_values(&args.input, args.pvalues)?;
    let m = values.len();
    let needs_family = !args.pvalues || args.family.family.is_some() || file.model.family.is_some();
    let family = if needs_family {
        Some(args.family.resolve(&file)?)
    } else {
        None
    };
    let rule = args.level.require(&file)?;
    let alpha = match (rule, family) {
        (LevelRule::Fixed(a), _) => a,
        (LevelRule::OptAt { .. }, Some(f)) => rule.resolve(f.kind, f.shape, m)?.resolved_alpha,
        (LevelRule::OptAt { .. }, None) => bail!("--alpha-opt needs a model family (--family)"),
    };
    let pvalues: Vec<f64> = match family {
        Some(f) if !args.pvalues => values.iter().map(|&x| statistic_pvalue(f.kind, &f.shape, x)).collect(),
        _ => values.clone(),
    };
    let t = fdr_threshold(&pvalues, alpha)?;
    let statistic = family.map(|f| match f.kind {
        ModelKind::Location => f.shape.quantile(t.value),
        ModelKind::Scale => f.shape.quantile(t.value / 2.0),
    });
    let statistic = statistic.transpose()?;

    let mut out = Output::open(args.run.out(&file).as_deref())?;
    let mut rejected = 0;
    {
        let mut w = out.csv_writer();
        w.write_record(["index", "value", "pvalue", "label"])?;
        for (i, (v, p)) in values.iter().zip(&pvalues).enumerate() {
            let label = t.rejects(*p);
            rejected += label as usize;
            w.write_record([
                (i + 1).to_string(),
                v.to_string(),
                p.to_string(),
                (label as u8).to_string(),
            ])?;
        }
        w.flush()?;
    }
    let r = &mut out.report;
    writeln!(r, "m = {m}")?;
    if let Some(f) = family {
        writeln!(r, "family = {}", f.label())?;
    }
    writeln!(r, "alpha = {} ({rule})", num(alpha))?;
    writeln!(r, "k_hat = {}", t.k_hat.unwrap_or(0))?;
    writeln!(r, "provenance = {}", t.provenance)?;
    writeln!(r, "threshold (p-value) = {}", num(t.value))?;
    match (statistic, family.map(|f| f.kind)) {
        (Some(s), Some(ModelKind::Scale)) => writeln!(r, "threshold (statistic) = |x| >= {}", num(s))?,
        (Some(s), _) => writeln!(r, "threshold (statistic) = x >= {}", num(s))?,
        (None, _) => writeln!(r, "threshold (statistic) = NA")?,
    }
    writeln!(r, "labelled 1 = {rejected}")?;
    Ok(())
}
