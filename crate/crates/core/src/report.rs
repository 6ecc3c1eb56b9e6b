//! Method-agnostic spectral reports, their comparison, and CSV/JSON output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::GribovParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Jacobi,
    Shooting,
    Sturm,
    Kernel,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Jacobi, Method::Shooting, Method::Sturm, Method::Kernel];

    pub fn tag(&self) -> &'static str {
        match self {
            Method::Jacobi => "jacobi",
            Method::Shooting => "shooting",
            Method::Sturm => "sturm",
            Method::Kernel => "kernel",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Parameter(format!("unknown method '{s}' (expected jacobi, shooting, sturm or kernel)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportEigenvalue {
    pub re: f64,
    pub im: f64,
    /// Method-specific error indicator (matrix residual, growth indicator, ...).
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    /// Resolution parameter: truncation order, grid nodes, or endpoint.
    #[serde(rename = "N")]
    pub n: f64,
    /// `[re, im]` of the first eigenvalues at this resolution.
    pub sigmas: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub method: Method,
    pub mu: f64,
    pub lambda: f64,
    /// Truncation or grid description, e.g. `{"N": 512}` or `{"x_max": 7.4, "m": 16007}`.
    pub trunc: serde_json::Value,
    pub eigenvalues: Vec<ReportEigenvalue>,
    pub convergence: Vec<ConvergenceEntry>,
    /// Seconds; off by default so that reports are reproducible byte for byte.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time: Option<f64>,
}

impl SpectralReport {
    /// Sorts eigenvalues by real part and the convergence table by resolution.
    pub fn new(
        method: Method,
        params: &GribovParams,
        trunc: serde_json::Value,
        mut eigenvalues: Vec<ReportEigenvalue>,
        mut convergence: Vec<ConvergenceEntry>,
    ) -> Self {
        eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        convergence.sort_by(|a, b| a.n.total_cmp(&b.n));
        Self { method, mu: params.mu, lambda: params.lambda, trunc, eigenvalues, convergence, wall_time: None }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parameter(format!("malformed report: {e}")))
    }

    /// `index,re,im,residual,converged`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,re,im,residual,converged\n");
        for (i, e) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!("{},{},{},{},{}\n", i + 1, e.re, e.im, e.residual, e.converged));
        }
        out
    }

    /// `N,index,re,im`.
    pub fn convergence_csv(&self) -> String {
        let mut out = String::from("N,index,re,im\n");
        for row in &self.convergence {
            for (i, s) in row.sigmas.iter().enumerate() {
                out.push_str(&format!("{},{},{},{}\n", row.n, i + 1, s[0], s[1]));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub a: Method,
    pub b: Method,
    pub tolerance: f64,
    /// Relative deltas `|s_a - s_b| / |s_b|` by index; `None` if not comparable.
    pub deltas: Vec<Option<f64>>,
    pub max_rel_delta: f64,
    pub compared: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl InvariantResult {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value <= tolerance, note: None }
    }

    pub fn failed(name: &str, note: String) -> Self {
        Self { name: name.into(), value: f64::NAN, tolerance: f64::NAN, pass: false, note: Some(note) }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub mu: f64,
    pub lambda: f64,
    pub pairs: Vec<PairComparison>,
    pub invariants: Vec<InvariantResult>,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `a,b,index,rel_delta` (empty delta when not comparable).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,b,index,rel_delta\n");
        for p in &self.pairs {
            for (i, d) in p.deltas.iter().enumerate() {
                let d = d.map(|v| v.to_string()).unwrap_or_default();
                out.push_str(&format!("{},{},{},{}\n", p.a.tag(), p.b.tag(), i + 1, d));
            }
        }
        out
    }
}

/// Agreement tolerance for a pair of methods: `kernel_tol` if either is the
/// Nystrom pipeline, else `tol`.
pub fn pair_tolerance(a: Method, b: Method, tol: f64, kernel_tol: f64) -> f64 {
    if a == Method::Kernel || b == Method::Kernel {
        kernel_tol
    } else {
        tol
    }
}

/// Pairwise comparison of eigenvalues by index; only eigenvalues flagged
/// converged by both methods are compared.
pub fn compare(reports: &[SpectralReport], tol: f64, kernel_tol: f64, invariants: Vec<InvariantResult>) -> Result<ComparisonReport> {
    let first = reports.first().ok_or_else(|| Error::Parameter("nothing to compare".into()))?;
    if reports.iter().any(|r| r.mu != first.mu || r.lambda != first.lambda) {
        return Err(Error::Parameter("reports differ in (mu, lambda)".into()));
    }
    let mut pairs = Vec::new();
    for (i, ra) in reports.iter().enumerate() {
        for rb in &reports[i + 1..] {
            let t = pair_tolerance(ra.method, rb.method, tol, kernel_tol);
            let deltas: Vec<Option<f64>> = ra
                .eigenvalues
                .iter()
                .zip(&rb.eigenvalues)
                .map(|(x, y)| {
                    (x.converged && y.converged).then(|| {
                        let d = ((x.re - y.re).powi(2) + (x.im - y.im).powi(2)).sqrt();
                        d / (y.re * y.re + y.im * y.im).sqrt().max(f64::MIN_POSITIVE)
                    })
                })
                .collect();
            let used: Vec<f64> = deltas.iter().flatten().copied().collect();
            let max_rel_delta = used.iter().copied().fold(0.0, f64::max);
            pairs.push(PairComparison {
                a: ra.method,
                b: rb.method,
                tolerance: t,
                compared: used.len(),
                pass: max_rel_delta <= t,
                max_rel_delta,
                deltas,
            });
        }
    }
    let pass = pairs.iter().all(|p| p.pass) && invariants.iter().all(|v| v.pass);
    Ok(ComparisonReport { mu: first.mu, lambda: first.lambda, pairs, invariants, pass })
}
