//! Flags shared by several subcommands, and their resolution against the config file.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use sparse_fdr::model::{calibrate, CanonicalParams, ModelKind, ModelSpec, Sparsity};
use sparse_fdr::threshold::LevelRule;
use sparse_fdr::SubbotinShape;

use crate::config::FileConfig;

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    /// location, scale, gaussian-location, gaussian-scale or laplace-scale
    #[arg(long)]
    pub family: Option<String>,
    /// Subbotin shape parameter (default 2)
    #[arg(long)]
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct Family {
    pub kind: ModelKind,
    pub shape: SubbotinShape,
}

impl Family {
    pub fn label(&self) -> String {
        format!("{} (zeta = {})", self.kind, self.shape.zeta())
    }
}

impl FamilyArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<Family> {
        let name = self.family.clone().or_else(|| file.model.family.clone());
        let zeta = self.zeta.or(file.model.zeta);
        let Some(name) = name else {
            bail!("a model family is required (--family)");
        };
        let (kind, fixed) = match name.as_str() {
            "gaussian-location" => (ModelKind::Location, Some(2.0)),
            "gaussian-scale" => (ModelKind::Scale, Some(2.0)),
            "laplace-scale" => (ModelKind::Scale, Some(1.0)),
            other => (other.parse::<ModelKind>()?, None),
        };
        let zeta = match (fixed, zeta) {
            (Some(f), Some(z)) if f != z => {
                bail!("--family {name} fixes zeta = {f}, which conflicts with --zeta {z}")
            }
            (Some(f), _) => f,
            (None, z) => z.unwrap_or(2.0),
        };
        Ok(Family {
            kind,
            shape: SubbotinShape::new(zeta)?,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct LevelArgs {
    /// Nominal level
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Optimal level for the reference parameters (beta0, C0)
    #[arg(long, num_args = 2, value_names = ["B0", "C0"])]
    pub alpha_opt: Option<Vec<f64>>,
}

impl LevelArgs {
    /// The level rule, or `None` when no level was given anywhere.
    pub fn resolve(&self, file: &FileConfig) -> Result<Option<LevelRule>> {
        let opt = |v: &[f64]| LevelRule::OptAt {
            beta0: v[0],
            c0: v[1],
        };
        match (self.alpha, &self.alpha_opt) {
            (Some(_), Some(_)) => bail!("--alpha and --alpha-opt are mutually exclusive"),
            (Some(a), None) => return Ok(Some(LevelRule::Fixed(a))),
            (None, Some(v)) => return Ok(Some(opt(v))),
            (None, None) => {}
        }
        match (file.level.alpha, file.level.alpha_opt) {
            (Some(_), Some(_)) => bail!("config sets both level.alpha and level.alpha_opt"),
            (Some(a), None) => Ok(Some(LevelRule::Fixed(a))),
            (None, Some(v)) => Ok(Some(opt(&v))),
            (None, None) => Ok(None),
        }
    }

    pub fn require(&self, file: &FileConfig) -> Result<LevelRule> {
        match self.resolve(file)? {
            Some(rule) => Ok(rule),
            None => bail!("a level is required (--alpha or --alpha-opt)"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Sparsity exponent, tau = m^beta
    #[arg(long)]
    pub beta: Option<f64>,
    /// Sparsity ratio pi0/pi1
    #[arg(long)]
    pub tau: Option<f64>,
    /// Power C of the Bayes rule
    #[arg(long)]
    pub power: Option<f64>,
    /// Number of tests
    #[arg(long)]
    pub m: Option<usize>,
}

pub struct ResolvedModel {
    pub family: Family,
    pub sparsity: Sparsity,
    pub m: usize,
    pub model: ModelSpec,
}

impl ModelArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<ResolvedModel> {
        let family = self.family.resolve(file)?;
        let sparsity = match (self.beta, self.tau) {
            (Some(_), Some(_)) => bail!("--beta and --tau are mutually exclusive"),
            (Some(b), None) => Sparsity::Beta(b),
            (None, Some(t)) => Sparsity::Tau(t),
            (None, None) => match (file.model.beta, file.model.tau) {
                (Some(_), Some(_)) => bail!("config sets both model.beta and model.tau"),
                (Some(b), None) => Sparsity::Beta(b),
                (None, Some(t)) => Sparsity::Tau(t),
                (None, None) => bail!("a sparsity is required (--beta or --tau)"),
            },
        };
        let Some(power) = self.power.or(file.model.power) else {
            bail!("the power C is required (--power)");
        };
        let Some(m) = self.m.or(file.model.m) else {
            bail!("the number of tests is required (--m)");
        };
        if m == 0 {
            bail!("--m must be positive");
        }
        let model = calibrate(
            family.kind,
            family.shape,
            CanonicalParams::new(sparsity, power),
            m,
        )?;
        Ok(ResolvedModel {
            family,
            sparsity,
            m,
            model,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output CSV path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML configuration file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl RunArgs {
    pub fn load(&self) -> Result<FileConfig> {
        FileConfig::load(self.config.as_deref())
    }

    pub fn threads(&self, file: &FileConfig) -> Result<Option<usize>> {
        match self.threads.or(file.run.threads) {
            Some(0) => bail!("--threads must be positive"),
            t => Ok(t),
        }
    }

    pub fn out(&self, file: &FileConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| file.run.out.clone())
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), num)
}

/// Shortest round-trip form, switching to exponent notation for tiny or huge magnitudes.
pub fn num(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(name: Option<&str>, zeta: Option<f64>) -> Result<Family> {
        FamilyArgs {
            family: name.map(String::from),
            zeta,
        }
        .resolve(&FileConfig::default())
    }

    #[test]
    fn family_aliases() {
        let f = fam(Some("laplace-scale"), None).unwrap();
        assert_eq!((f.kind, f.shape.zeta()), (ModelKind::Scale, 1.0));
        let f = fam(Some("gaussian-location"), Some(2.0)).unwrap();
        assert_eq!((f.kind, f.shape.zeta()), (ModelKind::Location, 2.0));
        let f = fam(Some("scale"), Some(3.0)).unwrap();
        assert_eq!((f.kind, f.shape.zeta()), (ModelKind::Scale, 3.0));
        assert!(fam(Some("gaussian-scale"), Some(1.0)).is_err());
        assert!(fam(Some("banana"), None).is_err());
        assert!(fam(None, None).is_err());
    }

    #[test]
    fn level_precedence() {
        let mut file = FileConfig::default();
        file.level.alpha_opt = Some([0.5, 0.5]);
        let flags = LevelArgs {
            alpha: Some(0.1),
            alpha_opt: None,
        };
        assert_eq!(flags.require(&file).unwrap(), LevelRule::Fixed(0.1));
        let none = LevelArgs {
            alpha: None,
            alpha_opt: None,
        };
        assert_eq!(none.require(&file).unwrap(), LevelRule::OptAt { beta0: 0.5, c0: 0.5 });
        assert!(none.require(&FileConfig::default()).is_err());
    }

    #[test]
    fn number_formatting() {
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.5e-16), "1.5e-16");
        assert_eq!(fmt_opt(None), "NA");
    }
}
