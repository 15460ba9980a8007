//! Command dispatch and JSON reports for the `linconv` binary.
//!
//! Every command reads one JSON config, writes one JSON report, and maps its
//! result onto a fixed set of exit codes.

use std::fmt::Debug;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use linconv::algebra::{Algebra, AlgebraSpec, StructureTensor};
use linconv::checker::{self, ClassifyOptions, CheckerConfig, PointClassification, PointKind, PointRecord, Verdict};
use linconv::domain::{self, BuiltinDomain, DefiningFunction, DomainSpec};
use linconv::gamma::{self, GammaFrame, GammaSpec};
use linconv::hyperplane::tangent_frame;
use linconv::oracle::{self, Agreement, OracleConfig, OracleError, ProbeOutcome};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const TOOL: &str = "linconv";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit codes.
pub mod exit {
    /// Success; for `check`, the sufficient condition holds at every point.
    pub const OK: i32 = 0;
    /// `check`: some point has a negative tangent direction.
    pub const NECESSARY_VIOLATED: i32 = 1;
    /// Invalid algebra, frame, domain or other mathematical input.
    pub const INVALID_INPUT: i32 = 2;
    /// `check`: neither condition decided.
    pub const INCONCLUSIVE: i32 = 3;
    /// `oracle`: the checker and the probe disagree somewhere.
    pub const DISAGREE: i32 = 4;
    /// Command line or config could not be parsed.
    pub const USAGE: i32 = 64;
}

#[derive(Debug, Parser)]
#[command(name = "linconv", version, about = "Local linear convexity checks over commutative real algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the algebra and report its structure.
    ValidateAlgebra(CommonArgs),
    /// Formal first and second derivatives of the defining function at a point.
    Derivatives {
        #[command(flatten)]
        common: CommonArgs,
        /// Real coordinates `x_1^0,...,x_n^{m-1}`, comma separated.
        #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
    },
    /// Sample the boundary and classify every point.
    Check(CommonArgs),
    /// Classify, probe the tangent hyperplanes, and compare.
    Oracle(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the checker and oracle seeds.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ValidateAlgebra(_) => "validate-algebra",
            Command::Derivatives { .. } => "derivatives",
            Command::Check(_) => "check",
            Command::Oracle(_) => "oracle",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::ValidateAlgebra(c) | Command::Check(c) | Command::Oracle(c) => c,
            Command::Derivatives { common, .. } => common,
        }
    }
}

/// The single JSON config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algebra: AlgebraSpec,
    /// Frame used when `checker.gamma` is absent.
    #[serde(default)]
    pub gamma: Option<GammaSpec>,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub checker: CheckerConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.checker.seed = s;
            self.oracle.seed = s;
        }
        self
    }

    fn gamma_spec(&self) -> Option<&GammaSpec> {
        self.checker.gamma.as_ref().or(self.gamma.as_ref())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisEntry {
    pub k: usize,
    pub invertible: bool,
    pub inverse: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgebraSummary {
    pub m: usize,
    pub valid: bool,
    pub ptilde: Option<usize>,
    pub gamma_p_dets: Vec<f64>,
    pub nondegenerate_indices: Vec<usize>,
    pub basis: Vec<BasisEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativesReport {
    pub point: Vec<f64>,
    pub value: f64,
    pub real_gradient: Vec<f64>,
    pub real_hessian: Vec<Vec<f64>>,
    /// `[j][p]` holds the coefficients of `a_j^p`.
    pub formal_gradient: Vec<Vec<Vec<f64>>>,
    /// `[j][p][i][q]` holds the coefficients of `a_{ji}^{pq}`.
    pub formal_hessian: Vec<Vec<Vec<Vec<Vec<f64>>>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PtildeAlternative {
    pub ptilde: usize,
    pub kernel_dim: Option<usize>,
    pub kind: Option<PointKind>,
    pub min_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    /// `None` when the probe could not run (see `note`).
    pub outcome: Option<ProbeOutcome>,
    pub smallest_radius_outcome: Option<ProbeOutcome>,
    pub witness: Option<Vec<f64>>,
    pub witness_value: Option<f64>,
    pub min_value_per_radius: Vec<Option<f64>>,
    pub interior_per_radius: Vec<bool>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRow {
    pub index: usize,
    pub w: Vec<f64>,
    pub residual: f64,
    pub kernel_dim: Option<usize>,
    pub kind: Option<PointKind>,
    pub min_eigenvalue: Option<f64>,
    pub tol: Option<f64>,
    pub hessian_norm: Option<f64>,
    pub cross_check_error: Option<f64>,
    pub algebra_form_value: Option<Vec<f64>>,
    pub real_form_value: Option<f64>,
    pub witness: Option<Vec<f64>>,
    pub ptilde: Option<usize>,
    /// Classification under every other nondegenerate `Gamma^p`.
    pub ptilde_alternatives: Vec<PtildeAlternative>,
    pub ptilde_sensitive: bool,
    pub oracle: Option<OracleRow>,
    pub agreement: Option<Agreement>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub timestamp_unix: u64,
    pub config: Option<RunConfig>,
    pub seed: Option<u64>,
    pub algebra: Option<AlgebraSummary>,
    pub gamma: Option<Vec<Vec<f64>>>,
    pub derivatives: Option<DerivativesReport>,
    pub points: Option<Vec<PointRow>>,
    pub verdict: Option<Verdict>,
    pub sample_only: Option<bool>,
    pub disagreements: Option<usize>,
    pub error: Option<ErrorReport>,
    pub exit_code: i32,
}

impl Report {
    fn new(command: &'static str) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            config: None,
            seed: None,
            algebra: None,
            gamma: None,
            derivatives: None,
            points: None,
            verdict: None,
            sample_only: None,
            disagreements: None,
            error: None,
            exit_code: exit::OK,
        }
    }

    fn fail(mut self, code: i32, kind: impl Into<String>, message: impl Into<String>) -> Self {
        self.exit_code = code;
        self.error = Some(ErrorReport { kind: kind.into(), message: message.into() });
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Variant name of a library error, skipping the crate-level wrappers.
pub fn error_kind(e: &impl Debug) -> String {
    const WRAPPERS: [&str; 5] = ["Algebra", "Gamma", "Hyperplane", "Domain", "Oracle"];
    let text = format!("{e:?}");
    let mut rest = text.as_str();
    loop {
        let end = rest.find(|c: char| !c.is_alphanumeric() && c != '_').unwrap_or(rest.len());
        let head = &rest[..end];
        if WRAPPERS.contains(&head) && rest[end..].starts_with('(') {
            rest = &rest[end + 1..];
        } else {
            return head.to_string();
        }
    }
}

fn invalid(report: Report, e: &(impl Debug + std::fmt::Display)) -> Report {
    report.fail(exit::INVALID_INPUT, error_kind(e), e.to_string())
}

/// Load the config named on the command line and run the command.
pub fn run(cli: &Cli) -> Report {
    let command = cli.command.name();
    let common = cli.command.common();
    let report = Report::new(command);
    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => return report.fail(exit::USAGE, "ConfigUnreadable", format!("{}: {e}", common.config.display())),
    };
    let cfg = match RunConfig::parse(&text) {
        Ok(c) => c.with_seed(common.seed),
        Err(e) => return report.fail(exit::USAGE, "ConfigParse", format!("{}: {e}", common.config.display())),
    };
    run_config(&cli.command, cfg)
}

/// Run a command against an already parsed config.
pub fn run_config(command: &Command, cfg: RunConfig) -> Report {
    let mut report = Report::new(command.name());
    report.config = Some(cfg.clone());
    match command {
        Command::ValidateAlgebra(_) => validate_algebra(report, &cfg),
        Command::Derivatives { point, .. } => derivatives(report, &cfg, point),
        Command::Check(_) => check(report, &cfg, false),
        Command::Oracle(_) => check(report, &cfg, true),
    }
}

/// Where the report goes: the `--output` flag, then the config, then stdout.
pub fn output_path(command: &Command, report: &Report) -> Option<PathBuf> {
    command
        .common()
        .output
        .clone()
        .or_else(|| report.config.as_ref().and_then(|c| c.output.clone()))
}

pub fn write_report(report: &Report, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, report.to_json()),
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(report.to_json().as_bytes())
        }
    }
}

fn summarize_tensor(tensor: &StructureTensor, algebra: Option<&Algebra>) -> AlgebraSummary {
    let m = tensor.dim();
    let dets: Vec<f64> = (0..m).map(|p| tensor.gamma_p(p).determinant()).collect();
    let basis = (0..m)
        .map(|k| {
            let inverse = tensor.basis_inverse(k);
            BasisEntry { k, invertible: inverse.is_some(), inverse }
        })
        .collect();
    match algebra {
        Some(a) => AlgebraSummary {
            m,
            valid: true,
            ptilde: Some(a.ptilde()),
            gamma_p_dets: a.gamma_p_dets().to_vec(),
            nondegenerate_indices: a.nondegenerate_indices(),
            basis,
        },
        None => AlgebraSummary { m, valid: false, ptilde: None, gamma_p_dets: dets, nondegenerate_indices: Vec::new(), basis },
    }
}

/// Build the algebra, recording the summary (or the failure) in the report.
fn load_algebra(mut report: Report, cfg: &RunConfig) -> Result<(Report, Algebra), Report> {
    let tensor = match cfg.algebra.tensor() {
        Ok(t) => t,
        Err(e) => return Err(invalid(report, &e)),
    };
    match cfg.algebra.build() {
        Ok(a) => {
            report.algebra = Some(summarize_tensor(&tensor, Some(&a)));
            Ok((report, a))
        }
        Err(e) => {
            // The invertibility table is only meaningful once the tensor is
            // commutative, associative and unital.
            if !matches!(
                e,
                linconv::AlgebraError::NonFinite { .. }
                    | linconv::AlgebraError::CommutativityViolated { .. }
                    | linconv::AlgebraError::IdentityMissing
                    | linconv::AlgebraError::AssociativityViolated { .. }
            ) {
                report.algebra = Some(summarize_tensor(&tensor, None));
            }
            Err(invalid(report, &e))
        }
    }
}

fn validate_algebra(report: Report, cfg: &RunConfig) -> Report {
    match load_algebra(report, cfg) {
        Ok((report, _)) => report,
        Err(report) => report,
    }
}

fn load_domain(report: Report, cfg: &RunConfig, m: usize) -> Result<(Report, BuiltinDomain), Report> {
    let Some(spec) = &cfg.domain else {
        return Err(report.fail(exit::USAGE, "MissingDomain", "this command needs a \"domain\" entry in the config"));
    };
    match spec.build(m) {
        Ok(d) => Ok((report, d)),
        Err(e) => Err(invalid(report, &e)),
    }
}

fn load_gamma(mut report: Report, cfg: &RunConfig, m: usize) -> Result<(Report, GammaFrame), Report> {
    match gamma::resolve_gamma(cfg.gamma_spec(), m) {
        Ok(g) => {
            report.gamma = Some(g.rows());
            Ok((report, g))
        }
        Err(e) => Err(invalid(report, &e)),
    }
}

fn derivatives(report: Report, cfg: &RunConfig, point: &[f64]) -> Report {
    let (report, algebra) = match load_algebra(report, cfg) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let m = algebra.dim();
    let (report, dom) = match load_domain(report, cfg, m) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let (mut report, frame) = match load_gamma(report, cfg, m) {
        Ok(v) => v,
        Err(r) => return r,
    };
    if point.len() != dom.ambient_dim() {
        return report.fail(
            exit::USAGE,
            "PointDimension",
            format!("--point has {} coordinates, the domain needs {}", point.len(), dom.ambient_dim()),
        );
    }
    let result = (|| -> Result<DerivativesReport, linconv::Error> {
        let value = domain::evaluate(&dom, point)?;
        let grad = domain::gradient(&dom, point)?;
        let hess = domain::hessian(&dom, point)?;
        let fg = gamma::formal_gradient(&algebra, &frame, &grad)?;
        let fh = gamma::formal_hessian(&algebra, &frame, &hess)?;
        let n = dom.n();
        Ok(DerivativesReport {
            point: point.to_vec(),
            value,
            real_gradient: grad,
            real_hessian: hess.row_iter().map(|r| r.iter().copied().collect()).collect(),
            formal_gradient: (0..n).map(|j| (0..m).map(|p| fg.get(j, p).coeffs().to_vec()).collect()).collect(),
            formal_hessian: (0..n)
                .map(|j| {
                    (0..m)
                        .map(|p| {
                            (0..n)
                                .map(|i| (0..m).map(|q| fh.get(j, p, i, q).coeffs().to_vec()).collect())
                                .collect()
                        })
                        .collect()
                })
                .collect(),
        })
    })();
    match result {
        Ok(d) => {
            report.derivatives = Some(d);
            report
        }
        Err(e) => invalid(report, &e),
    }
}

fn row_from(
    index: usize,
    rec: &PointRecord,
    algebra: &Algebra,
    frame: &GammaFrame,
    dom: &BuiltinDomain,
    opts: ClassifyOptions,
) -> PointRow {
    let mut row = PointRow {
        index,
        w: rec.point.w.clone(),
        residual: rec.point.residual,
        kernel_dim: None,
        kind: None,
        min_eigenvalue: None,
        tol: None,
        hessian_norm: None,
        cross_check_error: None,
        algebra_form_value: None,
        real_form_value: None,
        witness: None,
        ptilde: None,
        ptilde_alternatives: Vec::new(),
        ptilde_sensitive: false,
        oracle: None,
        agreement: None,
        error: None,
    };
    match &rec.outcome {
        checker::PointOutcome::Failed { error } => row.error = Some(error.clone()),
        checker::PointOutcome::Classified(c) => {
            fill_classification(&mut row, c);
            for p in algebra.nondegenerate_indices() {
                if p == c.ptilde {
                    continue;
                }
                let alt = checker::classify_point(algebra, frame, dom, &rec.point, ClassifyOptions { ptilde: Some(p), ..opts });
                let entry = match alt {
                    Ok(a) => PtildeAlternative {
                        ptilde: p,
                        kernel_dim: Some(a.kernel_dim),
                        kind: Some(a.kind),
                        min_eigenvalue: a.min_eigenvalue,
                    },
                    Err(_) => PtildeAlternative { ptilde: p, kernel_dim: None, kind: None, min_eigenvalue: None },
                };
                row.ptilde_sensitive |= entry.kind != Some(c.kind);
                row.ptilde_alternatives.push(entry);
            }
        }
    }
    row
}

fn fill_classification(row: &mut PointRow, c: &PointClassification) {
    row.kernel_dim = Some(c.kernel_dim);
    row.kind = Some(c.kind);
    row.min_eigenvalue = c.min_eigenvalue;
    row.tol = Some(c.tol);
    row.hessian_norm = Some(c.hessian_norm);
    row.cross_check_error = Some(c.cross_check_error);
    row.algebra_form_value = Some(c.algebra_form_value.coeffs().to_vec());
    row.real_form_value = Some(c.real_form_value);
    row.witness = c.witness.clone();
    row.ptilde = Some(c.ptilde);
}

fn probe_row(
    algebra: &Algebra,
    dom: &BuiltinDomain,
    c: &PointClassification,
    cfg: &OracleConfig,
    ptilde: Option<usize>,
) -> (OracleRow, Agreement) {
    let empty = |note: String| OracleRow {
        outcome: None,
        smallest_radius_outcome: None,
        witness: None,
        witness_value: None,
        min_value_per_radius: Vec::new(),
        interior_per_radius: Vec::new(),
        note: Some(note),
    };
    let frame = match tangent_frame(algebra, dom, &c.anchor, ptilde) {
        Ok(f) => f,
        Err(e) => return (empty(e.to_string()), Agreement::Indeterminate),
    };
    match oracle::geometric_probe(dom, &frame, cfg, c.witness.as_deref()) {
        Ok(probe) => {
            let agreement = oracle::cross_validate(c, &probe).unwrap_or(Agreement::Indeterminate);
            let row = OracleRow {
                outcome: Some(probe.outcome),
                smallest_radius_outcome: Some(probe.smallest_radius_outcome()),
                witness: probe.witness,
                witness_value: probe.witness_value,
                min_value_per_radius: probe.min_value_per_radius,
                interior_per_radius: probe.interior_per_radius,
                note: None,
            };
            (row, agreement)
        }
        // A trivial kernel touches the domain only at the anchor.
        Err(OracleError::EmptyKernel) => (empty("empty tangent kernel".into()), Agreement::Indeterminate),
        Err(e) => (empty(e.to_string()), Agreement::Indeterminate),
    }
}

fn check(report: Report, cfg: &RunConfig, with_oracle: bool) -> Report {
    let (report, algebra) = match load_algebra(report, cfg) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let m = algebra.dim();
    let (report, dom) = match load_domain(report, cfg, m) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let (mut report, frame) = match load_gamma(report, cfg, m) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let checker_cfg = CheckerConfig { gamma: cfg.gamma_spec().cloned(), ..cfg.checker.clone() };
    report.seed = Some(checker_cfg.seed);
    let result = match checker::check_domain(&algebra, &dom, &checker_cfg) {
        Ok(r) => r,
        Err(e) => return invalid(report, &e),
    };
    let opts = ClassifyOptions { tol: checker_cfg.tol, ptilde: checker_cfg.ptilde };
    let mut rows: Vec<PointRow> = result
        .points
        .par_iter()
        .enumerate()
        .map(|(i, rec)| row_from(i, rec, &algebra, &frame, &dom, opts))
        .collect();

    report.verdict = Some(result.verdict);
    report.sample_only = Some(result.sample_only);
    report.exit_code = match result.verdict {
        Verdict::SufficientConditionHolds => exit::OK,
        Verdict::NecessaryConditionViolated => exit::NECESSARY_VIOLATED,
        Verdict::Inconclusive => exit::INCONCLUSIVE,
    };

    if with_oracle {
        let probed: Vec<(Option<OracleRow>, Agreement)> = result
            .points
            .par_iter()
            .map(|rec| match rec.classification() {
                Some(c) => {
                    let (row, agreement) = probe_row(&algebra, &dom, c, &cfg.oracle, checker_cfg.ptilde);
                    (Some(row), agreement)
                }
                None => (None, Agreement::Indeterminate),
            })
            .collect();
        let mut disagreements = 0;
        for (row, (o, a)) in rows.iter_mut().zip(probed) {
            disagreements += usize::from(a == Agreement::Disagree);
            row.oracle = o;
            row.agreement = Some(a);
        }
        report.disagreements = Some(disagreements);
        report.exit_code = if disagreements == 0 { exit::OK } else { exit::DISAGREE };
    }
    report.points = Some(rows);
    report
}
