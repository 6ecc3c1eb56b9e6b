use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use gribov_core::pipeline::PipelineConfig;
use gribov_core::report::Method;
use gribov_core::GribovParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by all subcommands. Every field is optional so that a config
/// file can supply it; flags win over the file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    /// JSON file with any of these options (same names, underscores for dashes)
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Number of eigenvalues
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated subset of jacobi,shooting,sturm,kernel
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Truncation order N of the matrix method
    #[arg(long)]
    pub trunc: Option<usize>,
    /// Interior grid nodes of the half-line method
    #[arg(long)]
    pub grid: Option<usize>,
    /// Panels of the Nystrom grid
    #[arg(long)]
    pub panels: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub tol_eig: Option<f64>,
    #[arg(long)]
    pub tol_ortho: Option<f64>,
    #[arg(long)]
    pub tol_real: Option<f64>,
    #[arg(long)]
    pub tol_converged: Option<f64>,
    /// Pairwise agreement between methods
    #[arg(long)]
    pub tol_compare: Option<f64>,
    /// Pairwise agreement involving the Nystrom method, and its node-doubling stability
    #[arg(long)]
    pub tol_kernel: Option<f64>,
    /// Record wall time in the reports (they are then no longer reproducible byte for byte)
    #[arg(long)]
    #[serde(default)]
    pub wall_time: bool,
}

impl RunArgs {
    fn overlay(self, base: RunArgs) -> RunArgs {
        RunArgs {
            config: self.config,
            mu: self.mu.or(base.mu),
            lambda: self.lambda.or(base.lambda),
            k: self.k.or(base.k),
            methods: self.methods.or(base.methods),
            trunc: self.trunc.or(base.trunc),
            grid: self.grid.or(base.grid),
            panels: self.panels.or(base.panels),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            tol_eig: self.tol_eig.or(base.tol_eig),
            tol_ortho: self.tol_ortho.or(base.tol_ortho),
            tol_real: self.tol_real.or(base.tol_real),
            tol_converged: self.tol_converged.or(base.tol_converged),
            tol_compare: self.tol_compare.or(base.tol_compare),
            tol_kernel: self.tol_kernel.or(base.tol_kernel),
            wall_time: self.wall_time || base.wall_time,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: GribovParams,
    pub methods: Vec<Method>,
    pub pipeline: PipelineConfig,
    pub out: PathBuf,
    pub format: Format,
    pub tol_compare: f64,
    pub wall_time: bool,
    /// Set when lambda was replaced by |lambda|.
    pub note: Option<String>,
}

fn read_file(path: &Path) -> anyhow::Result<RunArgs> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn positive(name: &str, v: f64) -> anyhow::Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{name} must be positive (got {v})");
    }
    Ok(v)
}

impl RunConfig {
    pub fn resolve(args: RunArgs) -> anyhow::Result<Self> {
        let merged = match &args.config {
            Some(p) => args.clone().overlay(read_file(p)?),
            None => args,
        };
        let mu = merged.mu.context("--mu is required")?;
        let lambda_in = merged.lambda.context("--lambda is required")?;
        let note = (lambda_in < 0.0).then(|| format!("lambda = {lambda_in} replaced by |lambda|; the spectrum is invariant under lambda -> -lambda"));
        let params = GribovParams::new(mu, lambda_in)?.normalized();

        let mut pipeline = PipelineConfig::default();
        if let Some(k) = merged.k {
            if k == 0 {
                bail!("--k must be at least 1");
            }
            pipeline.k = k;
        }
        if let Some(n) = merged.trunc {
            pipeline.jacobi_trunc = n;
        }
        if let Some(m) = merged.grid {
            pipeline.sturm.m = m;
        }
        if let Some(p) = merged.panels {
            if p == 0 {
                bail!("--panels must be at least 1");
            }
            pipeline.kernel_panels = p;
        }
        let tol = &mut pipeline.tol;
        for (name, src, dst) in [
            ("tol-eig", merged.tol_eig, &mut tol.tol_eig),
            ("tol-ortho", merged.tol_ortho, &mut tol.tol_ortho),
            ("tol-real", merged.tol_real, &mut tol.tol_real),
            ("tol-converged", merged.tol_converged, &mut tol.tol_converged),
        ] {
            if let Some(v) = src {
                *dst = positive(name, v)?;
            }
        }
        if let Some(v) = merged.tol_kernel {
            pipeline.kernel_tol = positive("tol-kernel", v)?;
        }
        let tol_compare = positive("tol-compare", merged.tol_compare.unwrap_or(1e-6))?;
        let mut methods = merged.methods.unwrap_or_else(|| Method::ALL.to_vec());
        if methods.is_empty() {
            bail!("--methods must name at least one method");
        }
        methods.sort();
        methods.dedup();
        Ok(Self {
            params,
            methods,
            pipeline,
            out: merged.out.unwrap_or_else(|| PathBuf::from("gribov-out")),
            format: merged.format.unwrap_or(Format::Json),
            tol_compare,
            wall_time: merged.wall_time,
            note,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"mu": 2.0, "lambda": -0.5, "k": 4, "methods": ["sturm"]}"#).unwrap();
        let args = RunArgs { config: Some(path), k: Some(2), ..RunArgs::default() };
        let c = RunConfig::resolve(args).unwrap();
        assert_eq!(c.params.mu, 2.0);
        assert_eq!(c.params.lambda, 0.5);
        assert!(c.note.is_some());
        assert_eq!(c.pipeline.k, 2);
        assert_eq!(c.methods, vec![Method::Sturm]);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let args = RunArgs { mu: Some(1.0), lambda: Some(0.5), tol_eig: Some(-1.0), ..RunArgs::default() };
        assert!(RunConfig::resolve(args).is_err());
        let args = RunArgs { mu: Some(1.0), ..RunArgs::default() };
        assert!(RunConfig::resolve(args).is_err());
    }
}
