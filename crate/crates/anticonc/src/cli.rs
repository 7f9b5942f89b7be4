//! Batch front-end: flat key-value experiment configs, subcommand dispatch,
//! and deterministic CSV/text reports.
//!
//! Output contract: CSV uses '.' as the decimal separator, 17 significant
//! digits for floats, LF line endings, and a trailing newline; identical
//! config + seed always produces byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bounds::{
    calibrate_constants, fmt17, theorem1_rhs, theorem2_rhs, verify_instance, BoundConstants,
    BoundReport, CalibrationInstance, VerifyOptions,
};
use crate::concentration::{levy_l, q_exact, q_monte_carlo, ConcentrationEstimate, EstimatorChoice};
use crate::diophantine::{alpha_1d_exact, alpha_multi_certified, CertificateKind, CoefficientVector, DiophantineCertificate};
use crate::distributions::RandomVariableModel;
use crate::error::{Error, Result};
use crate::esseen::{split_integral, step1_integral, step2_integral_atomic, QuadratureSpec};
use crate::Budgets;

/// Env var holding a single cap that overrides every work budget.
pub const BUDGET_OVERRIDE_VAR: &str = "ANTICONC_BUDGET_OVERRIDE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DEGRADED: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Alpha,
    Qexact,
    Qmc,
    Esseen,
    Bound,
    Verify,
    Calibrate,
}

impl CommandKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandKind::Alpha => "alpha",
            CommandKind::Qexact => "qexact",
            CommandKind::Qmc => "qmc",
            CommandKind::Esseen => "esseen",
            CommandKind::Bound => "bound",
            CommandKind::Verify => "verify",
            CommandKind::Calibrate => "calibrate",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "alpha" => CommandKind::Alpha,
            "qexact" => CommandKind::Qexact,
            "qmc" => CommandKind::Qmc,
            "esseen" => CommandKind::Esseen,
            "bound" => CommandKind::Bound,
            "verify" => CommandKind::Verify,
            "calibrate" => CommandKind::Calibrate,
            _ => return None,
        })
    }
}

/// Where the coefficients came from; file-sourced configs re-read the file
/// on round-trip so the serialized form stays a one-line pointer.
#[derive(Debug, Clone, PartialEq)]
enum CoefficientSource {
    Inline,
    File(PathBuf),
}

/// A parsed experiment configuration. Every optional field has a documented
/// default applied at dispatch time; `to_text` and `parse_config` round-trip.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Option<CommandKind>,
    pub instance: Option<String>,
    pub model: Option<RandomVariableModel>,
    pub coefficients: Option<CoefficientVector>,
    coefficients_source: CoefficientSource,
    pub d_param: Option<f64>,
    pub radius: Option<f64>,
    pub epsilon: Option<f64>,
    pub tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub truncation: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub delta: Option<f64>,
    pub c3: Option<f64>,
    pub z: Option<f64>,
    pub big_c: Option<f64>,
    pub small_c: Option<f64>,
    pub fixed_c: Option<f64>,
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    pub corpus_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            command: None,
            instance: None,
            model: None,
            coefficients: None,
            coefficients_source: CoefficientSource::Inline,
            d_param: None,
            radius: None,
            epsilon: None,
            tol: None,
            abs_tol: None,
            truncation: None,
            seed: None,
            samples: None,
            delta: None,
            c3: None,
            z: None,
            big_c: None,
            small_c: None,
            fixed_c: None,
            p: None,
            alpha: None,
            corpus_file: None,
            out: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| {
        Error::InvalidModel(format!("line {line}: invalid value for '{key}': '{}'", value.trim()))
    })
}

/// Inline coefficient grammar: `1, 2, 3` for one dimension, or rows
/// `(1, 0); (0, 1)` for d >= 2 (a single multi-d row may end with ';').
pub fn parse_inline_coefficients(value: &str) -> Result<CoefficientVector> {
    let trimmed = value.trim();
    if trimmed.contains(';') {
        let mut rows = Vec::new();
        for chunk in trimmed.split(';') {
            let chunk = chunk.trim().trim_start_matches('(').trim_end_matches(')');
            if chunk.is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                chunk.split(',').map(|t| t.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|_| {
                Error::InvalidCoefficients(format!("bad coefficient row '{chunk}'"))
            })?);
        }
        CoefficientVector::from_rows(&rows)
    } else {
        let scalars: std::result::Result<Vec<f64>, _> =
            trimmed.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let scalars = scalars.map_err(|_| {
            Error::InvalidCoefficients(format!("bad coefficient list '{trimmed}'"))
        })?;
        CoefficientVector::new_1d(&scalars)
    }
}

/// Coefficient file grammar: one number per line (1-D) or d comma-separated
/// numbers per line (multi-d); '#' comments and blank lines are skipped.
pub fn parse_coefficient_file(path: &Path) -> Result<CoefficientVector> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::InvalidCoefficients(format!("cannot read '{}': {e}", path.display()))
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|_| {
            Error::InvalidCoefficients(format!(
                "{} line {}: bad coefficient row '{line}'",
                path.display(),
                i + 1
            ))
        })?);
    }
    CoefficientVector::from_rows(&rows)
}

/// Parses the flat key-value config format: `key = value` lines, '#'
/// comments, one JSON model literal. Unknown keys and duplicate keys are
/// rejected with their line number.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidModel(format!(
                "line {line_no}: expected 'key = value', got '{line}'"
            )));
        };
        let key = key.trim();
        let value = value.trim();
        // coefficients and coefficients_file fill the same slot
        let slot = if key == "coefficients_file" { "coefficients" } else { key };
        if seen.iter().any(|s| s == slot) {
            return Err(Error::InvalidModel(format!("line {line_no}: duplicate key '{key}'")));
        }
        match key {
            "command" => {
                cfg.command = Some(CommandKind::parse(value).ok_or_else(|| {
                    Error::InvalidModel(format!("line {line_no}: unknown command '{value}'"))
                })?)
            }
            "instance" => cfg.instance = Some(value.to_string()),
            "model" => cfg.model = Some(RandomVariableModel::from_json(value)?),
            "coefficients" => {
                cfg.coefficients = Some(parse_inline_coefficients(value)?);
                cfg.coefficients_source = CoefficientSource::Inline;
            }
            "coefficients_file" => {
                let path = PathBuf::from(value);
                cfg.coefficients = Some(parse_coefficient_file(&path)?);
                cfg.coefficients_source = CoefficientSource::File(path);
            }
            "d_param" => cfg.d_param = Some(parse_num(line_no, key, value)?),
            "radius" => cfg.radius = Some(parse_num(line_no, key, value)?),
            "epsilon" => cfg.epsilon = Some(parse_num(line_no, key, value)?),
            "tol" => cfg.tol = Some(parse_num(line_no, key, value)?),
            "abs_tol" => cfg.abs_tol = Some(parse_num(line_no, key, value)?),
            "truncation" => cfg.truncation = Some(parse_num(line_no, key, value)?),
            "seed" => cfg.seed = Some(parse_num(line_no, key, value)?),
            "samples" => cfg.samples = Some(parse_num(line_no, key, value)?),
            "delta" => cfg.delta = Some(parse_num(line_no, key, value)?),
            "c3" => cfg.c3 = Some(parse_num(line_no, key, value)?),
            "z" => cfg.z = Some(parse_num(line_no, key, value)?),
            "big_c" => cfg.big_c = Some(parse_num(line_no, key, value)?),
            "small_c" => cfg.small_c = Some(parse_num(line_no, key, value)?),
            "fixed_c" => cfg.fixed_c = Some(parse_num(line_no, key, value)?),
            "p" => cfg.p = Some(parse_num(line_no, key, value)?),
            "alpha" => cfg.alpha = Some(parse_num(line_no, key, value)?),
            "corpus_file" => cfg.corpus_file = Some(PathBuf::from(value)),
            "out" => cfg.out = Some(PathBuf::from(value)),
            _ => {
                return Err(Error::InvalidModel(format!("line {line_no}: unknown key '{key}'")));
            }
        }
        seen.push(slot.to_string());
    }
    Ok(cfg)
}

impl ExperimentConfig {
    /// Canonical text form; `parse_config(cfg.to_text())` equals `cfg`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(c) = self.command {
            let _ = writeln!(s, "command = {}", c.as_str());
        }
        if let Some(v) = &self.instance {
            let _ = writeln!(s, "instance = {v}");
        }
        if let Some(m) = &self.model {
            let _ = writeln!(s, "model = {}", m.to_json());
        }
        match (&self.coefficients, &self.coefficients_source) {
            (Some(_), CoefficientSource::File(path)) => {
                let _ = writeln!(s, "coefficients_file = {}", path.display());
            }
            (Some(a), CoefficientSource::Inline) => {
                if a.dim() == 1 {
                    let parts: Vec<String> =
                        a.rows().map(|r| fmt17(r[0])).collect();
                    let _ = writeln!(s, "coefficients = {}", parts.join(", "));
                } else {
                    let rows: Vec<String> = a
                        .rows()
                        .map(|r| {
                            let inner: Vec<String> = r.iter().map(|&x| fmt17(x)).collect();
                            format!("({})", inner.join(", "))
                        })
                        .collect();
                    let _ = writeln!(s, "coefficients = {}", rows.join("; "));
                }
            }
            (None, _) => {}
        }
        let mut num = |key: &str, v: Option<f64>| {
            if let Some(x) = v {
                let _ = writeln!(s, "{key} = {}", fmt17(x));
            }
        };
        num("d_param", self.d_param);
        num("radius", self.radius);
        num("epsilon", self.epsilon);
        num("tol", self.tol);
        num("abs_tol", self.abs_tol);
        num("truncation", self.truncation);
        if let Some(v) = self.seed {
            let _ = writeln!(s, "seed = {v}");
        }
        if let Some(v) = self.samples {
            let _ = writeln!(s, "samples = {v}");
        }
        let mut num = |key: &str, v: Option<f64>| {
            if let Some(x) = v {
                let _ = writeln!(s, "{key} = {}", fmt17(x));
            }
        };
        num("delta", self.delta);
        num("c3", self.c3);
        num("z", self.z);
        num("big_c", self.big_c);
        num("small_c", self.small_c);
        num("fixed_c", self.fixed_c);
        num("p", self.p);
        num("alpha", self.alpha);
        if let Some(v) = &self.corpus_file {
            let _ = writeln!(s, "corpus_file = {}", v.display());
        }
        if let Some(v) = &self.out {
            let _ = writeln!(s, "out = {}", v.display());
        }
        s
    }

    fn quad(&self) -> QuadratureSpec {
        let mut q = QuadratureSpec::default();
        if let Some(t) = self.truncation {
            q.truncation = t;
        }
        if let Some(tol) = self.abs_tol {
            q.abs_tolerance = tol;
        }
        q
    }

    fn constants(&self) -> Result<BoundConstants> {
        BoundConstants::user(self.big_c.unwrap_or(1.0), self.small_c.unwrap_or(1.0))
    }

    fn require_model(&self) -> Result<&RandomVariableModel> {
        self.model.as_ref().ok_or_else(|| Error::InvalidModel("missing 'model'".into()))
    }

    fn require_coefficients(&self) -> Result<&CoefficientVector> {
        self.coefficients
            .as_ref()
            .ok_or_else(|| Error::InvalidCoefficients("missing 'coefficients'".into()))
    }

    fn require_d_param(&self) -> Result<f64> {
        self.d_param
            .ok_or(Error::InvalidArgument { name: "d_param", value: "missing".to_string() })
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "anticonc",
    version,
    about = "Concentration functions of weighted i.i.d. sums, lattice \
             approximation certificates, and bound verification"
)]
pub struct CliArgs {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Lattice approximation quantity alpha with a certificate
    Alpha(CommonArgs),
    /// Exact concentration Q by enumeration/closed form
    Qexact(CommonArgs),
    /// Monte Carlo concentration Q with a confidence band
    Qmc(CommonArgs),
    /// Chain integrals (step1/step2 and the A/B split)
    Esseen(CommonArgs),
    /// Right-hand side of the concentration bound
    Bound(CommonArgs),
    /// Full pipeline report on one instance
    Verify(CommonArgs),
    /// Fit the constants (C, c) against a corpus CSV
    Calibrate(CommonArgs),
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Experiment config file (flat key-value format)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// RNG seed (overrides the config)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path (overrides the config)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Monte Carlo sample count (overrides the config)
    #[arg(long)]
    pub samples: Option<u64>,
    /// Tolerance for certified searches (overrides the config)
    #[arg(long)]
    pub tol: Option<f64>,
    /// Domain endpoint D (overrides the config)
    #[arg(long = "d-param")]
    pub d_param: Option<f64>,
    /// Window radius (overrides the config)
    #[arg(long)]
    pub radius: Option<f64>,
    /// Inline model literal (overrides the config)
    #[arg(long)]
    pub model: Option<String>,
    /// Inline coefficients (overrides the config)
    #[arg(long)]
    pub coefficients: Option<String>,
}

fn load_config(args: &CommonArgs, command: CommandKind) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::InvalidModel(format!("cannot read config '{}': {e}", path.display()))
            })?;
            parse_config(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(declared) = cfg.command {
        if declared != command {
            return Err(Error::InvalidModel(format!(
                "config declares command '{}' but '{}' was invoked",
                declared.as_str(),
                command.as_str()
            )));
        }
    }
    cfg.command = Some(command);
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &args.out {
        cfg.out = Some(o.clone());
    }
    if let Some(n) = args.samples {
        cfg.samples = Some(n);
    }
    if let Some(t) = args.tol {
        cfg.tol = Some(t);
    }
    if let Some(d) = args.d_param {
        cfg.d_param = Some(d);
    }
    if let Some(r) = args.radius {
        cfg.radius = Some(r);
    }
    if let Some(m) = &args.model {
        cfg.model = Some(RandomVariableModel::from_json(m)?);
    }
    if let Some(c) = &args.coefficients {
        cfg.coefficients = Some(parse_inline_coefficients(c)?);
        cfg.coefficients_source = CoefficientSource::Inline;
    }
    Ok(cfg)
}

fn budgets_from_env() -> Result<Budgets> {
    match std::env::var(BUDGET_OVERRIDE_VAR) {
        Ok(raw) => {
            let cap: u64 = raw.trim().parse().map_err(|_| Error::InvalidArgument {
                name: "ANTICONC_BUDGET_OVERRIDE",
                value: raw.clone(),
            })?;
            Ok(Budgets::uniform(cap))
        }
        Err(_) => Ok(Budgets::default()),
    }
}

/// A finished command: CSV content, a one-line summary, an optional extra
/// text block, and whether any stage degraded.
struct CommandOutput {
    csv: String,
    summary: String,
    text_block: Option<String>,
    degraded: bool,
}

fn concentration_csv(est: &ConcentrationEstimate) -> String {
    let mut s = String::from("value,method,band,n_samples,seed,window_radius,lower_bound_only\n");
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{}",
        fmt17(est.value),
        est.method.as_str(),
        fmt17(est.band),
        est.n_samples.map(|v| v.to_string()).unwrap_or_default(),
        est.seed.map(|v| v.to_string()).unwrap_or_default(),
        fmt17(est.window_radius),
        est.lower_bound_only,
    );
    s
}

fn certificate_csv(cert: &DiophantineCertificate) -> String {
    let mut header = String::from("alpha,gap,kind");
    for i in 0..cert.eta_star.len() {
        let _ = write!(header, ",eta_star_{i}");
    }
    for i in 0..cert.m_star.len() {
        let _ = write!(header, ",m_star_{i}");
    }
    let mut row = format!("{},{},{}", fmt17(cert.alpha), fmt17(cert.gap), cert.kind.as_str());
    for &e in &cert.eta_star {
        let _ = write!(row, ",{}", fmt17(e));
    }
    for &m in &cert.m_star {
        let _ = write!(row, ",{m}");
    }
    format!("{header}\n{row}\n")
}

fn run_alpha(cfg: &ExperimentConfig, budgets: &Budgets) -> Result<CommandOutput> {
    let a = cfg.require_coefficients()?;
    let d_param = cfg.require_d_param()?;
    let cert = if a.dim() == 1 && cfg.tol.is_none() {
        alpha_1d_exact(a, d_param, budgets)?
    } else {
        alpha_multi_certified(a, d_param, cfg.tol.unwrap_or(1e-4), budgets)?
    };
    let summary = format!(
        "alpha = {} (kind: {}, gap: {})",
        cert.alpha,
        cert.kind.as_str(),
        cert.gap
    );
    Ok(CommandOutput {
        csv: certificate_csv(&cert),
        summary,
        text_block: None,
        degraded: cert.kind == CertificateKind::HeuristicUpperBound,
    })
}

fn run_qexact(cfg: &ExperimentConfig, budgets: &Budgets) -> Result<CommandOutput> {
    let a = cfg.require_coefficients()?;
    let model = cfg.require_model()?;
    if cfg.radius.is_some() && cfg.epsilon.is_some() {
        return Err(Error::InvalidArgument {
            name: "radius/epsilon",
            value: "mutually exclusive".to_string(),
        });
    }
    let est = match cfg.epsilon {
        Some(eps) => levy_l(a, model, eps, EstimatorChoice::Exact, budgets)?,
        None => q_exact(a, model, cfg.radius.unwrap_or(1.0), budgets)?,
    };
    let summary = format!(
        "Q = {} (exact{})",
        est.value,
        if est.lower_bound_only { ", lower bound only" } else { "" }
    );
    Ok(CommandOutput {
        csv: concentration_csv(&est),
        summary,
        text_block: None,
        degraded: false,
    })
}

fn run_qmc(cfg: &ExperimentConfig, budgets: &Budgets) -> Result<CommandOutput> {
    let a = cfg.require_coefficients()?;
    let model = cfg.require_model()?;
    if cfg.radius.is_some() && cfg.epsilon.is_some() {
        return Err(Error::InvalidArgument {
            name: "radius/epsilon",
            value: "mutually exclusive".to_string(),
        });
    }
    let n_samples = cfg.samples.unwrap_or(1_000_000);
    let seed = cfg.seed.unwrap_or(1);
    let delta = cfg.delta.unwrap_or(0.01);
    let est = match cfg.epsilon {
        Some(eps) => levy_l(
            a,
            model,
            eps,
            EstimatorChoice::MonteCarlo { n_samples, seed, delta },
            budgets,
        )?,
        None => q_monte_carlo(a, model, cfg.radius.unwrap_or(1.0), n_samples, seed, delta)?,
    };
    let summary = format!("Q = {} +- {} (monte-carlo, N = {n_samples})", est.value, est.band);
    Ok(CommandOutput {
        csv: concentration_csv(&est),
        summary,
        text_block: None,
        degraded: false,
    })
}

fn run_esseen(cfg: &ExperimentConfig, budgets: &Budgets) -> Result<CommandOutput> {
    let a = cfg.require_coefficients()?;
    let model = cfg.require_model()?;
    let quad = cfg.quad();
    let s1 = step1_integral(a, model, &quad)?;

    let mut step2_val = String::new();
    let mut step2_sup = String::new();
    let mut q_sym = String::new();
    if model.is_atomic() {
        let summary = model.symmetrize();
        q_sym = fmt17(summary.q);
        if summary.q > 0.0 {
            let s2 = step2_integral_atomic(a, model, &quad)?;
            step2_val = fmt17(s2.value);
            step2_sup = fmt17(s2.sup_form_value);
        }
    }

    // the split is reported when a domain endpoint makes alpha computable
    let (mut alpha_s, mut ia_s, mut ib_s, mut cap_s) =
        (String::new(), String::new(), String::new(), String::new());
    let mut degraded = false;
    if let Some(d_param) = cfg.d_param {
        let cert = if a.dim() == 1 {
            alpha_1d_exact(a, d_param, budgets)?
        } else {
            return Err(Error::InvalidCoefficients("esseen integrals require d = 1".into()));
        };
        degraded = cert.kind == CertificateKind::HeuristicUpperBound;
        alpha_s = fmt17(cert.alpha);
        if cert.alpha > 0.0 {
            let p = cfg.p.unwrap_or_else(|| model.symmetrize().p);
            let split = split_integral(
                a,
                cert.alpha,
                p,
                cfg.c3.unwrap_or(1.0),
                cfg.z.unwrap_or(2.0),
                &quad,
                budgets,
            )?;
            ia_s = fmt17(split.i_a);
            ib_s = fmt17(split.i_b);
            cap_s = fmt17(split.i_a_cap);
        }
    }

    let csv = format!(
        "step1,step1_tail,step2,step2_sup,q_sym,alpha,i_a,i_b,i_a_cap\n{},{},{step2_val},{step2_sup},{q_sym},{alpha_s},{ia_s},{ib_s},{cap_s}\n",
        fmt17(s1.value),
        fmt17(s1.tail_bound),
    );
    let summary = format!("step1 = {}{}", s1.value, if step2_val.is_empty() {
        String::new()
    } else {
        format!(", step2 = {step2_val}")
    });
    Ok(CommandOutput { csv, summary, text_block: None, degraded })
}

fn run_bound(cfg: &ExperimentConfig, budgets: &Budgets) -> Result<CommandOutput> {
    let a = cfg.require_coefficients()?;
    let d_param = cfg.require_d_param()?;
    let constants = cfg.constants()?;
    let p = match cfg.p {
        Some(p) => p,
        None => cfg.require_model()?.symmetrize().p,
    };
    let (alpha, kind, degraded) = match cfg.alpha {
        Some(alpha) => (alpha, "user-supplied".to_string(), false),
        None => {
            let cert = if a.dim() == 1 {
                alpha_1d_exact(a, d_param, budgets)?
            } else {
                alpha_multi_certified(a, d_param, cfg.tol.unwrap_or(1e-4), budgets)?
            };
            let degraded = !cert.kind.is_sound_lower_bound();
            (cert.alpha, cert.kind.as_str().to_string(), degraded)
        }
    };
    let rhs = if a.dim() == 1 {
        theorem1_rhs(p, alpha, d_param, a.euclid_norm(), &constants)?
    } else {
        theorem2_rhs(p, alpha, d_param, a, &constants)?
    };
    let csv = format!(
        "dim,p,alpha,alpha_kind,d_param,rhs,big_c,small_c,provenance\n{},{},{},{},{},{},{},{},{}\n",
        a.dim(),
        fmt17(p),
        fmt17(alpha),
        kind,
        fmt17(d_param),
        fmt17(rhs),
        fmt17(constants.big_c),
        fmt17(constants.small_c),
        constants.provenance.as_str(),
    );
    let summary = format!("rhs = {rhs} (alpha = {alpha}, {kind})");
    Ok(CommandOutput { csv, summary, text_block: None, degraded })
}

fn run_verify(cfg: &ExperimentConfig, budgets: &Budgets) -> Result<CommandOutput> {
    let a = cfg.require_coefficients()?;
    let model = cfg.require_model()?;
    let d_param = cfg.require_d_param()?;
    let opts = VerifyOptions {
        constants: cfg.constants()?,
        c3: cfg.c3.unwrap_or(1.0),
        z: cfg.z.unwrap_or(2.0),
        alpha_tolerance: cfg.tol.unwrap_or(1e-4),
        quad: cfg.quad(),
        budgets: *budgets,
        mc_samples: cfg.samples.unwrap_or(1_000_000),
        seed: cfg.seed.unwrap_or(1),
        delta: cfg.delta.unwrap_or(0.01),
        chain_tol: 1e-9,
    };
    let instance = cfg.instance.clone().unwrap_or_else(|| "instance".to_string());
    let report = verify_instance(&instance, a, model, d_param, &opts);
    let csv = format!("{}\n{}\n", BoundReport::csv_header(), report.csv_row());
    let summary = format!(
        "verify {instance}: Q = {}, chain_ok = {}, theorem_ok = {}",
        report.q_estimate.as_ref().map(|q| q.value.to_string()).unwrap_or_else(|| "n/a".into()),
        report.chain_ok.map(|b| b.to_string()).unwrap_or_else(|| "n/a".into()),
        report.theorem_ok.map(|b| b.to_string()).unwrap_or_else(|| "n/a".into()),
    );
    let degraded = report.degraded();
    Ok(CommandOutput { csv, summary, text_block: Some(report.text_block()), degraded })
}

/// Corpus CSV columns for `calibrate`:
/// `id,q_value,p,alpha,alpha_sound,d_param,a_norm` with a header line.
pub fn parse_corpus_file(path: &Path) -> Result<Vec<CalibrationInstance>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidModel(format!("cannot read '{}': {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if header != "id,q_value,p,alpha,alpha_sound,d_param,a_norm" {
        return Err(Error::InvalidModel(format!(
            "{}: expected header 'id,q_value,p,alpha,alpha_sound,d_param,a_norm'",
            path.display()
        )));
    }
    let mut corpus = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(Error::InvalidModel(format!(
                "{} line {}: expected 7 fields, got {}",
                path.display(),
                i + 1,
                parts.len()
            )));
        }
        let field = |j: usize| -> Result<f64> {
            parts[j].trim().parse().map_err(|_| {
                Error::InvalidModel(format!(
                    "{} line {}: bad number '{}'",
                    path.display(),
                    i + 1,
                    parts[j]
                ))
            })
        };
        corpus.push(CalibrationInstance {
            id: parts[0].trim().to_string(),
            q_value: field(1)?,
            p: field(2)?,
            alpha: field(3)?,
            alpha_sound: matches!(parts[4].trim(), "true" | "1"),
            d_param: field(5)?,
            a_norm: field(6)?,
        });
    }
    Ok(corpus)
}

fn run_calibrate(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let path = cfg
        .corpus_file
        .as_ref()
        .ok_or_else(|| Error::InvalidModel("missing 'corpus_file'".into()))?;
    let corpus = parse_corpus_file(path)?;
    let outcome = calibrate_constants(&corpus, cfg.fixed_c)?;
    let excluded = outcome.excluded.join("; ");
    let excluded_field = if excluded.contains(',') {
        format!("\"{}\"", excluded.replace('"', "\"\""))
    } else {
        excluded.clone()
    };
    let csv = format!(
        "big_c,small_c,provenance,binding_instance,excluded\n{},{},{},{},{excluded_field}\n",
        fmt17(outcome.constants.big_c),
        fmt17(outcome.constants.small_c),
        outcome.constants.provenance.as_str(),
        outcome.binding_instance,
    );
    let summary = format!(
        "calibrated C = {}, c = {} (binding: {}; values are empirical, not ground truth)",
        outcome.constants.big_c, outcome.constants.small_c, outcome.binding_instance
    );
    Ok(CommandOutput {
        csv,
        summary,
        text_block: None,
        degraded: !outcome.excluded.is_empty(),
    })
}

/// Executes a parsed command line; returns the process exit code.
/// 0 = success, 2 = validation failure, 3 = budget-exceeded or degraded
/// result (artifacts are still written when a result exists).
pub fn run(cli: CliArgs) -> i32 {
    let (kind, args) = match &cli.command {
        CliCommand::Alpha(a) => (CommandKind::Alpha, a),
        CliCommand::Qexact(a) => (CommandKind::Qexact, a),
        CliCommand::Qmc(a) => (CommandKind::Qmc, a),
        CliCommand::Esseen(a) => (CommandKind::Esseen, a),
        CliCommand::Bound(a) => (CommandKind::Bound, a),
        CliCommand::Verify(a) => (CommandKind::Verify, a),
        CliCommand::Calibrate(a) => (CommandKind::Calibrate, a),
    };
    let outcome = (|| -> Result<CommandOutput> {
        let budgets = budgets_from_env()?;
        let cfg = load_config(args, kind)?;
        match kind {
            CommandKind::Alpha => run_alpha(&cfg, &budgets),
            CommandKind::Qexact => run_qexact(&cfg, &budgets),
            CommandKind::Qmc => run_qmc(&cfg, &budgets),
            CommandKind::Esseen => run_esseen(&cfg, &budgets),
            CommandKind::Bound => run_bound(&cfg, &budgets),
            CommandKind::Verify => run_verify(&cfg, &budgets),
            CommandKind::Calibrate => run_calibrate(&cfg),
        }
        .map(|mut out| {
            out.csv = out.csv.replace("\r\n", "\n");
            out
        })
        .and_then(|out| {
            let cfg_out = load_config(args, kind)?.out;
            if let Some(path) = cfg_out {
                fs::write(&path, out.csv.as_bytes()).map_err(|e| {
                    Error::InvalidModel(format!("cannot write '{}': {e}", path.display()))
                })?;
            }
            Ok(out)
        })
    })();
    match outcome {
        Ok(out) => {
            if let Some(block) = &out.text_block {
                println!("{block}");
            }
            println!("{}", out.summary);
            if out.degraded {
                EXIT_DEGRADED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::BreakpointBudgetExceeded { .. } | Error::EnumerationBudgetExceeded { .. } => {
                    EXIT_DEGRADED
                }
                _ => EXIT_VALIDATION,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal_verify_config() {
        let text = "\
command = verify
model = {\"kind\":\"atomic\",\"atoms\":[[-1,0.5],[1,0.5]]}
coefficients = 1, 1, 1
d_param = 0.75
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.command, Some(CommandKind::Verify));
        assert_eq!(cfg.coefficients.as_ref().unwrap().len(), 3);
        assert_eq!(cfg.d_param, Some(0.75));
        assert_eq!(cfg.seed, None);
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let err = parse_config("alpa = 0.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1") && msg.contains("alpa"), "{msg}");
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let err = parse_config("seed = 1\nseed = 2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn bad_value_names_key_and_line() {
        let err = parse_config("\n\nseed = banana\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("seed"), "{msg}");
    }

    #[test]
    fn config_round_trip() {
        let text = "\
command = qmc
model = {\"kind\":\"gaussian\",\"mu\":0,\"sigma\":1}
coefficients = 1, 0.5, 0.3333333333333333
radius = 1
seed = 42
samples = 10000
delta = 0.01
";
        let cfg = parse_config(text).unwrap();
        let round = parse_config(&cfg.to_text()).unwrap();
        assert_eq!(cfg, round);
    }

    #[test]
    fn multi_dimensional_inline_coefficients() {
        let cfg = parse_config("coefficients = (1, 0); (0, 1)\n").unwrap();
        let a = cfg.coefficients.unwrap();
        assert_eq!(a.dim(), 2);
        assert_eq!(a.len(), 2);
        let round = parse_config(&parse_config("coefficients = (1, 0); (0, 1)\n")
            .unwrap()
            .to_text())
        .unwrap();
        assert_eq!(round.coefficients.unwrap().dim(), 2);
    }

    #[test]
    fn coefficient_file_round_trip() {
        let dir = std::env::temp_dir().join("anticonc-cli-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("coeffs.txt");
        fs::write(&path, "1.5\n-2.25\n# comment\n3.0\n").unwrap();
        let a = parse_coefficient_file(&path).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a.dim(), 1);
        let cfg = parse_config(&format!("coefficients_file = {}\n", path.display())).unwrap();
        assert_eq!(cfg.coefficients.as_ref().unwrap(), &a);
        let round = parse_config(&cfg.to_text()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn corpus_file_parses() {
        let dir = std::env::temp_dir().join("anticonc-cli-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("corpus.csv");
        fs::write(
            &path,
            "id,q_value,p,alpha,alpha_sound,d_param,a_norm\nx,0.5,0.5,1.0,true,1.0,8.0\n",
        )
        .unwrap();
        let corpus = parse_corpus_file(&path).unwrap();
        assert_eq!(corpus.len(), 1);
        assert!(corpus[0].alpha_sound);
    }
}
