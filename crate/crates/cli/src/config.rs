//! Command-line flags and the TOML config file that mirrors them.
//!
//! Every flag has a config key of the same name (dashes become
//! underscores). Global flags live at the top level, command flags in a
//! table named after the command. Flags given on the command line win.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Deserializer, Serialize};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "fbnet", version, about = "Coherent-feedback photonic network simulations")]
pub struct Cli {
    /// TOML file with defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More log output on stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalOpts {
    /// Directory for output files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps [env: FBNET_WORKERS].
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed of the randomized property checks.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Accepted steady-state residual `‖L ρ‖/‖L‖`.
    #[arg(long, global = true)]
    pub residual_tol: Option<f64>,
    /// Relative GMRES tolerance.
    #[arg(long, global = true)]
    pub gmres_tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compose a network document and print the SLH triple.
    Compose(ComposeOpts),
    /// Bistability thresholds, roots and branch tables.
    Meanfield(MeanfieldOpts),
    /// Master-equation g²(0) sweep over Δ/χ.
    G2(G2Opts),
    /// Closed-form and weak-drive g²(0) over Δ/χ.
    Analytic(AnalyticOpts),
    /// Regenerate figure data sets.
    Reproduce(ReproduceOpts),
    /// Run the acceptance suite.
    Check(CheckOpts),
}

fn parse_dims(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma-separated truncations N_a,N_c,N_b".to_string())
}

/// `name=value` pairs; in the config file a table `{ name = value }`.
fn de_assignments<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    let m = BTreeMap::<String, toml::Value>::deserialize(d)?;
    Ok(m.into_iter().map(|(k, v)| format!("{k}={v}")).collect())
}

#[derive(Args, Debug, Default, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComposeOpts {
    /// Network document (`.slh`).
    pub input: Option<PathBuf>,
    /// Also write the triple as JSON to this file.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Parameter override `name=value` (repeatable).
    #[arg(long = "param")]
    #[serde(deserialize_with = "de_assignments")]
    pub params: Vec<String>,
}

#[derive(Args, Debug, Default, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanfieldOpts {
    /// Print the thresholds ỹ, z̃ at this x (and the window at --y).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Sweep one of x, y, z, the other two fixed.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    #[arg(long)]
    pub z: Option<f64>,
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Args, Debug, Default, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct G2Opts {
    /// Network document; without one a built-in parameter set is used.
    pub input: Option<PathBuf>,
    /// Built-in parameter set: fig5, fig7 or fig9.
    #[arg(long)]
    pub set: Option<String>,
    /// Driven cavity for built-in sets: `a` (controlled) or `c` (controller).
    #[arg(long)]
    pub drive: Option<String>,
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Truncations `N_a,N_c,N_b` for built-in sets.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<[usize; 3]>,
    /// Document truncation override `mode=N` (repeatable).
    #[arg(long = "trunc")]
    #[serde(deserialize_with = "de_assignments")]
    pub truncs: Vec<String>,
    /// Parameter override `name=value` (repeatable).
    #[arg(long = "param")]
    #[serde(deserialize_with = "de_assignments")]
    pub params: Vec<String>,
}

#[derive(Args, Debug, Default, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticOpts {
    /// Built-in parameter set: fig5, fig7 or fig9.
    #[arg(long)]
    pub set: Option<String>,
    #[arg(long)]
    pub drive: Option<String>,
    /// Kerr coefficient override; sets g0 = sqrt(χ ω_m).
    #[arg(long)]
    pub chi: Option<f64>,
    /// Non-Hermitian Hamiltonian of the weak-drive rows: exact or phenomenological.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Parameter override `name=value` (repeatable).
    #[arg(long = "param")]
    #[serde(deserialize_with = "de_assignments")]
    pub params: Vec<String>,
}

#[derive(Args, Debug, Default, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproduceOpts {
    /// Figure ids (fig4a … fig4f, fig5a, fig5b, fig7a, fig7b, fig9a, fig9b) or `all`.
    pub figures: Vec<String>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Fixed truncations `N_a,N_c,N_b` instead of the defaults.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<[usize; 3]>,
}

#[derive(Args, Debug, Default, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckOpts {
    /// Criterion numbers to run; all when empty.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<usize>,
}

/// Contents of a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub residual_tol: Option<f64>,
    pub gmres_tol: Option<f64>,
    pub compose: ComposeOpts,
    pub meanfield: MeanfieldOpts,
    pub g2: G2Opts,
    pub analytic: AnalyticOpts,
    pub reproduce: ReproduceOpts,
    pub check: CheckOpts,
}

impl FileConfig {
    pub fn global(&self) -> GlobalOpts {
        GlobalOpts {
            out: self.out.clone(),
            workers: self.workers,
            seed: self.seed,
            residual_tol: self.residual_tol,
            gmres_tol: self.gmres_tol,
        }
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Field-wise "command line, else config file".
pub trait Merge {
    fn merge(self, file: Self) -> Self;
}

macro_rules! merge_impl {
    ($t:ty { $($opt:ident),* } [ $($vec:ident),* ]) => {
        impl Merge for $t {
            fn merge(self, file: Self) -> Self {
                Self {
                    $($opt: self.$opt.or(file.$opt),)*
                    $($vec: if self.$vec.is_empty() { file.$vec } else { self.$vec },)*
                }
            }
        }
    };
}

merge_impl!(GlobalOpts { out, workers, seed, residual_tol, gmres_tol } []);
merge_impl!(ComposeOpts { input, json } [params]);
merge_impl!(MeanfieldOpts { threshold, sweep, x, y, z, from, to, points } []);
merge_impl!(G2Opts { input, set, drive, from, to, points, dims } [truncs, params]);
merge_impl!(AnalyticOpts { set, drive, chi, variant, from, to, points } [params]);
merge_impl!(ReproduceOpts { points, dims } [figures]);
merge_impl!(CheckOpts {} [criteria]);

/// Splits `name=value` assignments.
pub fn assignments<T: std::str::FromStr>(items: &[String], what: &str) -> Result<Vec<(String, T)>, CliError>
where
    T::Err: std::fmt::Display,
{
    items
        .iter()
        .map(|s| {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{what} `{s}` is not of the form name=value")))?;
            let v = v.trim().parse::<T>().map_err(|e| CliError::Usage(format!("{what} `{s}`: {e}")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_sections() {
        let cfg: FileConfig = toml::from_str(
            "workers = 2\nout = \"res\"\n[g2]\nset = \"fig7\"\ndims = [4, 4, 8]\nparams = { kappa = 2.5 }\n[check]\ncriteria = [1, 3]\n",
        )
        .unwrap();
        assert_eq!(cfg.global().workers, Some(2));
        assert_eq!(cfg.g2.dims, Some([4, 4, 8]));
        assert_eq!(cfg.g2.params, ["kappa=2.5"]);
        assert_eq!(cfg.check.criteria, [1, 3]);
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }

    #[test]
    fn command_line_wins() {
        let cli = G2Opts {
            set: Some("fig9".into()),
            ..Default::default()
        };
        let file = G2Opts {
            set: Some("fig7".into()),
            points: Some(5),
            ..Default::default()
        };
        let m = cli.merge(file);
        assert_eq!(m.set.as_deref(), Some("fig9"));
        assert_eq!(m.points, Some(5));
    }

    #[test]
    fn dims_and_assignments() {
        assert_eq!(parse_dims("4,4,8").unwrap(), [4, 4, 8]);
        assert!(parse_dims("4,4").is_err());
        let a: Vec<(String, f64)> = assignments(&["kappa=2".into()], "param").unwrap();
        assert_eq!(a, [("kappa".to_string(), 2.0)]);
        assert!(assignments::<f64>(&["kappa".into()], "param").is_err());
    }
}
