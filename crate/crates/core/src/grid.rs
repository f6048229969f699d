//! Relative excess risk over a `(β, C)` grid.
//!
//! Every cell calibrates the true model at `τ = m^β` and power `C`, then
//! scores each procedure by its relative excess risk. Cells run on a
//! worker pool and rows come back in declared order.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::model::{calibrate, CanonicalParams, ModelKind, ModelSpec, Sparsity};
use crate::risk::{bfdr_risk, exact_fdr_risk, threshold_report};
use crate::subbotin::SubbotinShape;
use crate::threshold::{LevelRule, Provenance};

pub const CSV_HEADER: [&str; 11] = [
    "family",
    "zeta",
    "m",
    "beta",
    "C",
    "procedure",
    "alpha_rule",
    "alpha",
    "risk",
    "bayes_risk",
    "excess_rel",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Procedure {
    /// Bayes threshold of the model calibrated at `(β₀, C₀)` instead of the truth.
    Bayes0 { beta0: f64, c0: f64 },
    Bfdr(LevelRule),
    Fdr(LevelRule),
}

impl Procedure {
    pub fn name(&self) -> &'static str {
        match self {
            Procedure::Bayes0 { .. } => "bayes0",
            Procedure::Bfdr(_) => "bfdr",
            Procedure::Fdr(_) => "fdr",
        }
    }

    pub fn rule_label(&self) -> String {
        match self {
            Procedure::Bayes0 { beta0, c0 } => format!("ref:{beta0}:{c0}"),
            Procedure::Bfdr(r) | Procedure::Fdr(r) => r.to_string(),
        }
    }

    /// The procedure set used for the excess-risk heatmaps.
    pub fn standard_set(beta0: f64, c0: f64) -> Vec<Procedure> {
        let rules = [
            LevelRule::Fixed(0.1),
            LevelRule::Fixed(0.2),
            LevelRule::Fixed(0.25),
            LevelRule::OptAt { beta0, c0 },
        ];
        let mut v = vec![Procedure::Bayes0 { beta0, c0 }];
        v.extend(rules.iter().map(|&r| Procedure::Bfdr(r)));
        v.extend(rules.iter().map(|&r| Procedure::Fdr(r)));
        v
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.name(), self.rule_label())
    }
}

/// `n` evenly spaced points from `lo` to `hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub kind: ModelKind,
    pub shape: SubbotinShape,
    pub m_list: Vec<usize>,
    pub beta_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
    pub procedures: Vec<Procedure>,
    /// Level of the excess-risk set counted in the summary.
    pub excess_level: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            kind: ModelKind::Location,
            shape: SubbotinShape::gaussian(),
            m_list: vec![25, 100, 1000],
            beta_grid: linspace(0.025, 0.975, 21),
            c_grid: linspace(0.025, 0.975, 21),
            procedures: Procedure::standard_set(0.5, 0.5),
            excess_level: 0.1,
        }
    }
}

fn strictly_increasing(name: &str, v: &[f64], lo: f64, hi: f64, hi_closed: bool) -> Result<()> {
    if v.is_empty() {
        return Err(domain(format!("{name} grid is empty")));
    }
    for w in v.windows(2) {
        if !(w[0] < w[1]) {
            return Err(domain(format!("{name} grid must be strictly increasing")));
        }
    }
    let ok = |x: f64| x > lo && (x < hi || (hi_closed && x == hi));
    if let Some(x) = v.iter().find(|&&x| !ok(x)) {
        return Err(domain(format!("{name} grid value {x} is outside its range")));
    }
    Ok(())
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_list.is_empty() {
            return Err(domain("m list is empty"));
        }
        if self.m_list.iter().any(|&m| m < 2) {
            return Err(domain("every m must be >= 2"));
        }
        for w in self.m_list.windows(2) {
            if w[0] >= w[1] {
                return Err(domain("m list must be strictly increasing"));
            }
        }
        strictly_increasing("beta", &self.beta_grid, 0.0, 1.0, true)?;
        strictly_increasing("C", &self.c_grid, 0.0, 1.0, false)?;
        if self.procedures.is_empty() {
            return Err(domain("no procedures requested"));
        }
        if !(self.excess_level > 0.0) {
            return Err(domain("excess level must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub kind: ModelKind,
    pub zeta: f64,
    pub m: usize,
    pub beta: f64,
    pub c: f64,
    pub procedure: Procedure,
    pub alpha: Option<f64>,
    pub risk: Option<f64>,
    pub bayes_risk: Option<f64>,
    pub excess_rel: Option<f64>,
    /// Why the cell could not be evaluated.
    pub error: Option<String>,
}

impl GridRow {
    pub fn record(&self) -> Vec<String> {
        let num = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), |v| v.to_string());
        vec![
            self.kind.to_string(),
            self.zeta.to_string(),
            self.m.to_string(),
            self.beta.to_string(),
            self.c.to_string(),
            self.procedure.name().to_string(),
            self.procedure.rule_label(),
            num(self.alpha),
            num(self.risk),
            num(self.bayes_risk),
            num(self.excess_rel),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryEntry {
    pub m: usize,
    pub procedure: Procedure,
    pub cells: usize,
    pub within: usize,
    pub failures: usize,
}

impl SummaryEntry {
    /// Fraction of evaluated cells whose excess is within the level.
    pub fn fraction(&self) -> f64 {
        let ok = self.cells - self.failures;
        if ok == 0 {
            0.0
        } else {
            self.within as f64 / ok as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutput {
    pub rows: Vec<GridRow>,
    pub summary: Vec<SummaryEntry>,
}

impl GridOutput {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| domain(format!("cannot write CSV: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.record()).map_err(io)?;
        }
        w.flush().map_err(|e| domain(format!("cannot write CSV: {e}")))
    }

    pub fn write_summary<W: Write>(&self, mut out: W, level: f64) -> std::io::Result<()> {
        writeln!(out, "fraction of cells with E <= {level}")?;
        for s in &self.summary {
            writeln!(
                out,
                "m={:<6} {:<8} {:<14} {:.4} ({}/{}, failures {})",
                s.m,
                s.procedure.name(),
                s.procedure.rule_label(),
                s.fraction(),
                s.within,
                s.cells - s.failures,
                s.failures
            )?;
        }
        Ok(())
    }
}

struct Outcome {
    alpha: Option<f64>,
    risk: f64,
    bayes_risk: f64,
    excess_rel: f64,
}

fn evaluate(procedure: &Procedure, model: &ModelSpec, config: &GridConfig, m: usize) -> Result<Outcome> {
    let (alpha, report) = match *procedure {
        Procedure::Bayes0 { beta0, c0 } => {
            let reference = calibrate(
                config.kind,
                config.shape,
                CanonicalParams::new(Sparsity::Beta(beta0), c0),
                m,
            )?;
            let t = reference.bayes_threshold();
            (None, threshold_report(model, t, Provenance::Bayes)?)
        }
        Procedure::Bfdr(rule) => {
            let alpha = rule.resolve(config.kind, config.shape, m)?.resolved_alpha;
            (Some(alpha), bfdr_risk(model, alpha)?)
        }
        Procedure::Fdr(rule) => {
            let alpha = rule.resolve(config.kind, config.shape, m)?.resolved_alpha;
            (Some(alpha), exact_fdr_risk(model, m, alpha)?)
        }
    };
    Ok(Outcome {
        alpha,
        risk: report.risk,
        bayes_risk: report.bayes_risk,
        excess_rel: report.excess_rel,
    })
}

fn cell_rows(config: &GridConfig, m: usize, beta: f64, c: f64) -> Vec<GridRow> {
    let model = calibrate(
        config.kind,
        config.shape,
        CanonicalParams::new(Sparsity::Beta(beta), c),
        m,
    );
    config
        .procedures
        .iter()
        .map(|p| {
            let mut row = GridRow {
                kind: config.kind,
                zeta: config.shape.zeta(),
                m,
                beta,
                c,
                procedure: *p,
                alpha: None,
                risk: None,
                bayes_risk: None,
                excess_rel: None,
                error: None,
            };
            match model.as_ref().map_err(Clone::clone).and_then(|mdl| evaluate(p, mdl, config, m)) {
                Ok(o) => {
                    row.alpha = o.alpha;
                    row.risk = Some(o.risk);
                    row.bayes_risk = Some(o.bayes_risk);
                    row.excess_rel = Some(o.excess_rel);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect()
}

/// Evaluates the whole grid on `threads` workers (all available when `None`).
pub fn run_grid(config: &GridConfig, threads: Option<usize>) -> Result<GridOutput> {
    config.validate()?;
    let cells: Vec<(usize, f64, f64)> = config
        .m_list
        .iter()
        .flat_map(|&m| {
            config
                .beta_grid
                .iter()
                .flat_map(move |&b| config.c_grid.iter().map(move |&c| (m, b, c)))
        })
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(domain("thread count must be positive"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<GridRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(m, b, c)| cell_rows(config, m, b, c))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    let summary = summarize(config, &rows);
    Ok(GridOutput { rows, summary })
}

fn summarize(config: &GridConfig, rows: &[GridRow]) -> Vec<SummaryEntry> {
    let mut tally: BTreeMap<(usize, usize), SummaryEntry> = BTreeMap::new();
    let n_proc = config.procedures.len();
    for (i, row) in rows.iter().enumerate() {
        let e = tally.entry((row.m, i % n_proc)).or_insert(SummaryEntry {
            m: row.m,
            procedure: row.procedure,
            cells: 0,
            within: 0,
            failures: 0,
        });
        e.cells += 1;
        match row.excess_rel {
            Some(x) if x <= config.excess_level => e.within += 1,
            Some(_) => {}
            None => e.failures += 1,
        }
    }
    tally.into_values().collect()
}
