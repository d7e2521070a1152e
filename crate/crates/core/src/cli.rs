//! Command-line front end: `forge`, `metric` and `liouville`.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 input error, 3 numerical
//! failure. Reports are JSON; truncation curves are CSV.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::forge::{canned_incompatible, gen_dressed, gen_hermitian_pencil, DEFAULT_CONDITION_CAP};
use crate::io::{self, IoError, LoadedModel, SCHEMA_VERSION};
use crate::liouville::{
    isospectral_check, refinement_study, IsospectralComparison, LiouvilleSetup, NamedMap,
    Potential, RefinementStudy, DENSE_LIMIT,
};
use crate::matrix::{scaled_difference, ComplexMatrix};
use crate::metric::{
    build_metric_double, build_metric_single, compute_m_forms, dress, mode_alignment,
    truncate_scan, unit_weights, verify_metric, MetricCandidate, MetricMethod, MetricReport,
    Tolerances,
};
use crate::pencil::{consistency_report, solve_pencil, REALITY_TOL};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "sturm-metric",
    version,
    about = "Metric operators for non-Hermitian Sturm-Schrodinger pencils"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded model file.
    Forge(ForgeArgs),
    /// Solve a model, build and verify its metric.
    Metric(MetricArgs),
    /// Compare a Schrodinger problem with its Liouville-transformed Sturmian form.
    Liouville(LiouvilleArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ForgeKind {
    Dressed,
    Hermitian,
    Incompatible,
}

#[derive(Debug, Args)]
struct ForgeArgs {
    kind: ForgeKind,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Condition-number cap for `w` and the Dyson map.
    #[arg(long, default_value_t = DEFAULT_CONDITION_CAP)]
    cap: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Single,
    Double,
    Both,
}

#[derive(Debug, Args)]
struct MetricArgs {
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    /// Comma-separated positive mode weights for the single series.
    #[arg(long)]
    weights: Option<String>,
    /// Write the truncation curve to this CSV file.
    #[arg(long)]
    truncate: Option<PathBuf>,
    /// Hermiticity and intertwining tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = REALITY_TOL)]
    reality_tol: f64,
    /// Relative smallest eigenvalue required for positive definiteness.
    #[arg(long, default_value_t = 1e-12)]
    positive_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall time in the report (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct LiouvilleArgs {
    /// zero, harmonic, or poly:c0,c1,...
    #[arg(long, default_value = "harmonic")]
    potential: String,
    /// identity, exp or cubic.
    #[arg(long, default_value = "exp")]
    map: String,
    /// Interval `a,b` in the original variable.
    #[arg(long, default_value = "0.02,8", allow_hyphen_values = true)]
    domain: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Relative eigenvalue agreement required.
    #[arg(long, default_value_t = 5e-3)]
    tol: f64,
    /// Also solve at 2N+1 points and require the disagreement to shrink by 2.
    #[arg(long)]
    refine: bool,
    /// Run the Sturmian pencil through the dense metric pipeline.
    #[arg(long)]
    metric: bool,
    #[arg(long, default_value_t = 1e-9)]
    metric_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timing: bool,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numerical(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input() {
            Failure::Input(e.to_string())
        } else {
            Failure::Numerical(e)
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = std::result::Result<bool, Failure>;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    let command_line = command_line(&args);
    let started = Instant::now();
    let outcome = match cli.command {
        Command::Forge(a) => cmd_forge(&a),
        Command::Metric(a) => cmd_metric(&a, &command_line, started),
        Command::Liouville(a) => cmd_liouville(&a, &command_line, started),
    };
    log::info!("wall time {:.3} s", started.elapsed().as_secs_f64());
    match outcome {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e}");
            EXIT_NUMERICAL
        }
    }
}

/// The invocation as a shell line, with the program name normalized.
fn command_line(args: &[OsString]) -> String {
    let mut parts = vec!["sturm-metric".to_string()];
    for a in args.iter().skip(1) {
        let s = a.to_string_lossy();
        if s.is_empty()
            || s.chars()
                .any(|c| c.is_whitespace() || "'\"\\$`".contains(c))
        {
            parts.push(format!("'{}'", s.replace('\'', r"'\''")));
        } else {
            parts.push(s.into_owned());
        }
    }
    parts.join(" ")
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> std::result::Result<(), Failure> {
    match out {
        Some(path) => io::write_json(path, value)?,
        None => print!("{}", io::to_json(value)),
    }
    Ok(())
}

fn cmd_forge(a: &ForgeArgs) -> Outcome {
    let missing = |flag: &str| Failure::Input(format!("forge {:?} requires --{flag}", a.kind));
    let n = || a.n.ok_or_else(|| missing("n"));
    let seed = || a.seed.ok_or_else(|| missing("seed"));
    match a.kind {
        ForgeKind::Dressed => {
            let m = gen_dressed(n()?, seed()?, a.cap)?;
            io::write_model(&a.out, &m.pencil, Some(m.seed), Some(&m))?;
        }
        ForgeKind::Hermitian => {
            let seed = seed()?;
            let p = gen_hermitian_pencil(n()?, seed)?;
            io::write_model(&a.out, &p, Some(seed), None)?;
        }
        ForgeKind::Incompatible => io::write_model(&a.out, &canned_incompatible(), None, None)?,
    }
    Ok(true)
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricSummary {
    pub method: &'static str,
    pub requested: bool,
    pub hermiticity_residual: f64,
    pub hermiticity_max: f64,
    pub intertwine_h: f64,
    pub intertwine_w: f64,
    pub min_eig_theta: f64,
    pub min_eig_theta_w: f64,
    pub theta_definiteness: &'static str,
    pub theta_w_definiteness: &'static str,
    pub passed: bool,
}

impl MetricSummary {
    fn new(method: MetricMethod, requested: bool, r: &MetricReport) -> Self {
        Self {
            method: method.as_str(),
            requested,
            hermiticity_residual: r.hermiticity_residual,
            hermiticity_max: r.hermiticity_max,
            intertwine_h: r.intertwine_h,
            intertwine_w: r.intertwine_w,
            min_eig_theta: r.min_eig_theta,
            min_eig_theta_w: r.min_eig_theta_w,
            theta_definiteness: r.theta_definiteness.as_str(),
            theta_w_definiteness: r.theta_w_definiteness.as_str(),
            passed: r.passed(),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct InputInfo {
    path: String,
    sha256: String,
    label: String,
    provenance: String,
    n: usize,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct ToleranceInfo {
    hermiticity: f64,
    intertwine: f64,
    positive: f64,
    negative_floor: f64,
    reality: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct GroundTruthSummary {
    metric: MetricSummary,
    /// `max |lambda - spectrumTrue| / max(1, |spectrumTrue|)`.
    spectrum_defect: f64,
    /// Worst relative residual of `Theta_true |l> ~ |l>>`.
    max_alignment_residual: f64,
    all_positive_parallel: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct TruncationRow {
    k: usize,
    hermiticity_residual: f64,
    intertwine_h: f64,
    intertwine_w: f64,
    min_eig_theta: f64,
    theta_definiteness: &'static str,
    passed: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct DressingSummary {
    method: &'static str,
    h_residual: f64,
    w_residual: f64,
    isospectrality_defect: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct MetricRunReport {
    schema_version: u32,
    command: String,
    input: InputInfo,
    tolerances: ToleranceInfo,
    mode_weights: Vec<f64>,
    lambdas: Vec<f64>,
    reality_residual: f64,
    balance_residual: f64,
    consistency: std::collections::BTreeMap<&'static str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_form_disagreement: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    double_vs_single: Option<f64>,
    metrics: Vec<MetricSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ground_truth: Option<GroundTruthSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncation: Option<Vec<TruncationRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dressing: Option<DressingSummary>,
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_seconds: Option<f64>,
}

fn parse_weights(text: Option<&str>, n: usize) -> std::result::Result<Vec<f64>, Failure> {
    let Some(text) = text else {
        return Ok(unit_weights(n));
    };
    if text == "unit" {
        return Ok(unit_weights(n));
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Failure::Input(format!("bad weight '{t}': {e}")))
        })
        .collect()
}

fn verdict_str(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "fail"
    }
}

fn cmd_metric(a: &MetricArgs, command: &str, started: Instant) -> Outcome {
    let LoadedModel {
        file,
        pencil,
        digest,
        truth,
    } = io::load_model(&a.model)?;
    let tol = Tolerances {
        positive: a.positive_tol,
        ..Tolerances::uniform(a.tol)
    };
    let n = pencil.n();
    let weights = parse_weights(a.weights.as_deref(), n)?;

    let sys = solve_pencil(&pencil, a.reality_tol)?;
    let consistency = consistency_report(&sys, &pencil)?;

    let want_single = a.method != MethodArg::Double;
    let want_double = a.method != MethodArg::Single;
    // the single series is always built: it is the reference for the double one
    let single = build_metric_single(&sys, &weights)?;
    let single_report = verify_metric(&pencil, &single, &tol)?;
    let mut metrics = vec![];
    let mut passing: Vec<&MetricCandidate> = vec![];
    if want_single {
        metrics.push(MetricSummary::new(
            MetricMethod::SingleSeries,
            true,
            &single_report,
        ));
        if single_report.passed() {
            passing.push(&single);
        }
    }

    let mut m_form_disagreement = None;
    let mut double_vs_single = None;
    let double;
    if want_double {
        let forms = compute_m_forms(&sys, &pencil)?;
        m_form_disagreement = Some(forms.disagreement());
        double = build_metric_double(&sys, &forms.pairing_form)?;
        let unit_single = build_metric_single(&sys, &unit_weights(n))?;
        double_vs_single = Some(scaled_difference(
            &double.theta,
            &unit_single.theta,
            unit_single.theta.frobenius_norm(),
        ));
        let report = verify_metric(&pencil, &double, &tol)?;
        metrics.push(MetricSummary::new(
            MetricMethod::DoubleSeries,
            true,
            &report,
        ));
        if report.passed() {
            passing.push(&double);
        }
    }
    let passed = metrics.iter().all(|m| m.passed);

    let ground_truth = match &truth {
        Some(t) => {
            let theta = t.theta()?;
            let cand = MetricCandidate::external(theta, MetricMethod::GroundTruth)?;
            let report = verify_metric(&pencil, &cand, &tol)?;
            let align = mode_alignment(&cand.theta, &sys)?;
            let spectrum_defect = sys
                .lambdas
                .iter()
                .zip(&t.spectrum_true)
                .map(|(l, s)| (l - s).abs() / s.abs().max(1.0))
                .fold(0.0, f64::max);
            Some(GroundTruthSummary {
                metric: MetricSummary::new(MetricMethod::GroundTruth, false, &report),
                spectrum_defect,
                max_alignment_residual: align.iter().map(|m| m.residual).fold(0.0, f64::max),
                all_positive_parallel: align.iter().all(|m| m.positive_parallel(1e-8)),
            })
        }
        None => None,
    };

    let truncation = match &a.truncate {
        Some(path) => {
            let rows: Vec<TruncationRow> = truncate_scan(&sys, &pencil, &weights, &tol)?
                .into_iter()
                .map(|p| TruncationRow {
                    k: p.k,
                    hermiticity_residual: p.report.hermiticity_residual,
                    intertwine_h: p.report.intertwine_h,
                    intertwine_w: p.report.intertwine_w,
                    min_eig_theta: p.report.min_eig_theta,
                    theta_definiteness: p.report.theta_definiteness.as_str(),
                    passed: p.report.passed(),
                })
                .collect();
            write_csv(path, &rows)?;
            Some(rows)
        }
        None => None,
    };

    let dressing = match passing.first() {
        Some(cand) => {
            let d = dress(&pencil, cand)?;
            Some(DressingSummary {
                method: cand.method.as_str(),
                h_residual: d.h_residual,
                w_residual: d.w_residual,
                isospectrality_defect: d.isospectrality_defect(&sys.lambdas),
            })
        }
        None => None,
    };

    let report = MetricRunReport {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        input: InputInfo {
            path: a.model.display().to_string(),
            sha256: digest,
            label: file.label.clone(),
            provenance: file.provenance.clone(),
            n,
        },
        tolerances: ToleranceInfo {
            hermiticity: tol.hermiticity,
            intertwine: tol.intertwine,
            positive: tol.positive,
            negative_floor: tol.negative_floor,
            reality: a.reality_tol,
        },
        mode_weights: weights,
        lambdas: sys.lambdas.clone(),
        reality_residual: sys.reality_residual,
        balance_residual: sys.balance_residual,
        consistency: consistency.named(),
        m_form_disagreement,
        double_vs_single,
        metrics,
        ground_truth,
        truncation,
        dressing,
        verdict: verdict_str(passed),
        wall_time_seconds: a.timing.then(|| started.elapsed().as_secs_f64()),
    };
    emit(a.out.as_deref(), &report)?;
    Ok(passed)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> std::result::Result<(), Failure> {
    let io_fail = |e: csv::Error| Failure::Input(format!("IoError: {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io_fail)?;
    for r in rows {
        w.serialize(r).map_err(io_fail)?;
    }
    w.flush()
        .map_err(|e| Failure::Input(format!("IoError: {}: {e}", path.display())))
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct LiouvilleSetupInfo {
    potential: String,
    map: &'static str,
    r_domain: [f64; 2],
    x_domain: [f64; 2],
    n: usize,
    k: usize,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SturmianMetricSummary {
    n: usize,
    reality_residual: f64,
    /// `||Theta - I||_F / sqrt(n)`.
    identity_defect: f64,
    metric: MetricSummary,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct LiouvilleRunReport {
    schema_version: u32,
    command: String,
    setup: LiouvilleSetupInfo,
    comparison: IsospectralComparison,
    #[serde(skip_serializing_if = "Option::is_none")]
    refinement: Option<RefinementStudy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sturmian_metric: Option<SturmianMetricSummary>,
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_seconds: Option<f64>,
}

fn parse_domain(s: &str) -> std::result::Result<(f64, f64), Failure> {
    let bad = || Failure::Input(format!("bad domain '{s}', expected a,b"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok((a, b))
}

fn cmd_liouville(a: &LiouvilleArgs, command: &str, started: Instant) -> Outcome {
    let potential: Potential = a.potential.parse()?;
    let map: NamedMap = a.map.parse()?;
    let r_domain = parse_domain(&a.domain)?;
    if a.metric && a.n > DENSE_LIMIT {
        return Err(Failure::Input(format!(
            "--metric needs --n <= {DENSE_LIMIT}"
        )));
    }
    let setup = LiouvilleSetup {
        potential,
        map,
        r_domain,
    };
    let pair = setup.discretize(a.n)?;
    let (comparison, refinement) = if a.refine {
        let study = refinement_study(&setup, a.n, a.k, a.tol)?;
        (study.coarse.clone(), Some(study))
    } else {
        (
            isospectral_check(&pair.original, &pair.transformed, a.k, a.tol)?,
            None,
        )
    };

    let sturmian_metric = if a.metric {
        let pencil = pair.transformed.to_pencil(pair.transformed.meta.clone())?;
        let sys = solve_pencil(&pencil, REALITY_TOL)?;
        let cand = build_metric_single(&sys, &unit_weights(a.n))?;
        let report = verify_metric(&pencil, &cand, &Tolerances::uniform(a.metric_tol))?;
        let identity = ComplexMatrix::identity(a.n);
        Some(SturmianMetricSummary {
            n: a.n,
            reality_residual: sys.reality_residual,
            identity_defect: scaled_difference(&cand.theta, &identity, (a.n as f64).sqrt()),
            metric: MetricSummary::new(MetricMethod::SingleSeries, true, &report),
        })
    } else {
        None
    };

    let passed = comparison.passed
        && refinement.as_ref().is_none_or(|s| s.converges_by(2.0))
        && sturmian_metric.as_ref().is_none_or(|m| m.metric.passed);
    let report = LiouvilleRunReport {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        setup: LiouvilleSetupInfo {
            potential: setup.potential.describe(),
            map: map.as_str(),
            r_domain: [r_domain.0, r_domain.1],
            x_domain: [pair.transformed.grid.a, pair.transformed.grid.b],
            n: a.n,
            k: a.k,
        },
        comparison,
        refinement,
        sturmian_metric,
        verdict: verdict_str(passed),
        wall_time_seconds: a.timing.then(|| started.elapsed().as_secs_f64()),
    };
    emit(a.out.as_deref(), &report)?;
    Ok(passed)
}
