//! Command-line front end.
//!
//! Every command is deterministic in `(command, flags, seed)`: Monte Carlo
//! work is chunked on fixed RNG streams and reduced in order, so repeated
//! runs produce byte-identical output.
//!
//! Exit codes: 0 ok, 2 usage or malformed input, 3 dimension error,
//! 4 invariant violation.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::comparator::{
    average_success_analytic, average_success_mc, make_strategy, omega_twirl, ppovm_success,
    random_valid_ppovm, reference_antisymmetric_state, reference_symmetric_state, run_pair,
    sequential_witness, success_bound, witness_residuals, ComparisonReport, Strategy, StrategyKind,
    Verdict,
};
use crate::error::Error;
use crate::haar::{haar_sample, mc_matrix, stream_rng, twirl_exact, twirl_mc};
use crate::matcore::{CMatrix, C64};
use crate::qrep::{choi_of_unitary_pair, UnitaryOp};
use crate::symmetry::build_split;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DIMENSION: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

/// Slack allowed above `(d + 1)/(2d)` before the bound scan trips.
pub const BOUND_SLACK: f64 = 1e-9;
/// Largest dimension accepted by the success table.
pub const MAX_TABLE_DIM: usize = 6;

#[derive(Parser, Debug)]
#[command(
    name = "unicomp",
    version,
    about = "Unambiguous comparison of unknown unitary channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compare two concrete unitaries with the optimal (or symmetric) strategy.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "identity")]
        u: String,
        #[arg(long, default_value = "identity")]
        v: String,
        #[arg(long, value_enum, default_value_t = StrategyChoice::Optimal)]
        strategy: StrategyChoice,
    },
    /// Analytic and Monte Carlo success probabilities for a range of d.
    SuccessTable {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        d_min: usize,
        #[arg(long, default_value_t = MAX_TABLE_DIM)]
        d_max: usize,
    },
    /// Largest success probability over random unambiguous comparators.
    BoundScan {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo twirl and average channel against their closed forms.
    TwirlVerify {
        #[command(flatten)]
        common: Common,
    },
    /// Split W² into U V with U, V both different from W.
    Witness {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "hadamard")]
        w: String,
        #[arg(long, default_value = "pauli-z")]
        r: String,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Qudit dimension.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Number of Monte Carlo samples or random draws.
    #[arg(long = "n", default_value_t = 10_000)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Prior probability that the boxes are equal.
    #[arg(long)]
    pub eta_same: Option<f64>,
    /// Write to this file instead of stdout.
    #[arg(long = "out")]
    pub output_path: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategyChoice {
    Optimal,
    Symmetric,
}

/// A failed command: exit code and message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn dimension(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_DIMENSION,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DimensionMismatch(_) | Error::NotSquare { .. } => EXIT_DIMENSION,
            Error::InvalidDimension(_)
            | Error::InvalidPrior(_)
            | Error::IdentityUpToPhase { .. }
            | Error::NotUnitary { .. }
            | Error::MalformedMatrix(_)
            | Error::Json(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Rendered command output plus the exit code it should end with.
struct Rendered {
    text: String,
    code: i32,
}

/// Parses `args` (including the program name), runs the command and writes
/// its output to `stdout` or `--out`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(&cli.command) {
        Ok((rendered, path)) => {
            let written = match path {
                Some(p) => std::fs::write(p, &rendered.text),
                None => stdout.write_all(rendered.text.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: cannot write output: {e}");
                return EXIT_FAILURE;
            }
            if rendered.code != EXIT_OK {
                let _ = writeln!(stderr, "error: invariant violated, see output");
            }
            rendered.code
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(command: &Command) -> Result<(Rendered, Option<&PathBuf>), Failure> {
    let common = match command {
        Command::Compare { common, .. }
        | Command::SuccessTable { common, .. }
        | Command::BoundScan { common }
        | Command::TwirlVerify { common }
        | Command::Witness { common, .. } => common,
    };
    validate_common(common)?;
    let rendered = match command {
        Command::Compare {
            common,
            u,
            v,
            strategy,
        } => cmd_compare(common, u, v, *strategy)?,
        Command::SuccessTable {
            common,
            d_min,
            d_max,
        } => cmd_success_table(common, *d_min, *d_max)?,
        Command::BoundScan { common } => cmd_bound_scan(common)?,
        Command::TwirlVerify { common } => cmd_twirl_verify(common)?,
        Command::Witness { common, w, r } => cmd_witness(common, w, r)?,
    };
    Ok((rendered, common.output_path.as_ref()))
}

fn validate_common(c: &Common) -> Result<(), Failure> {
    if c.d < 2 {
        return Err(Failure::usage(format!(
            "--d must be at least 2, got {}",
            c.d
        )));
    }
    if c.n_samples < 1 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    if let Some(eta) = c.eta_same {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Failure::usage(format!(
                "--eta-same must lie in (0, 1), got {eta}"
            )));
        }
    }
    Ok(())
}

/// Resolves a gate name or `@path` matrix file to a `d`-dimensional unitary.
///
/// Names: `identity`, `pauli-x`, `pauli-y`, `pauli-z`, `hadamard` (qubit
/// gates), and `fourier`, `fourier-d` or `fourier-<n>` for the discrete
/// Fourier transform.
pub fn resolve_gate(spec: &str, d: usize) -> Result<UnitaryOp, Failure> {
    if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read matrix file {path}: {e}")))?;
        let m: CMatrix = serde_json::from_str(&text)
            .map_err(|e| Failure::usage(format!("malformed matrix file {path}: {e}")))?;
        if m.rows() != d || m.cols() != d {
            return Err(Failure::dimension(format!(
                "matrix file {path} is {}x{}, expected {d}x{d}",
                m.rows(),
                m.cols()
            )));
        }
        return UnitaryOp::new(m).map_err(|e| Failure::usage(format!("{path}: {e}")));
    }
    let qubit = |rows: [[C64; 2]; 2], name: &str| -> Result<UnitaryOp, Failure> {
        if d != 2 {
            return Err(Failure::dimension(format!(
                "{name} is a qubit gate, but d = {d}"
            )));
        }
        let m = CMatrix::from_rows(&[&rows[0], &rows[1]]).map_err(Failure::from)?;
        UnitaryOp::new(m).map_err(Failure::from)
    };
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    match spec {
        "identity" => Ok(UnitaryOp::identity(d)),
        "pauli-x" => qubit([[o, l], [l, o]], spec),
        "pauli-y" => qubit([[o, -i], [i, o]], spec),
        "pauli-z" => qubit([[l, o], [o, -l]], spec),
        "hadamard" => qubit([[h, h], [h, -h]], spec),
        "fourier" | "fourier-d" => Ok(fourier(d)),
        _ => match spec.strip_prefix("fourier-").map(str::parse::<usize>) {
            Some(Ok(n)) if n == d => Ok(fourier(d)),
            Some(Ok(n)) => Err(Failure::dimension(format!(
                "{spec} has dimension {n}, but d = {d}"
            ))),
            _ => Err(Failure::usage(format!("unknown gate '{spec}'"))),
        },
    }
}

/// `F_{jk} = e^{2πi jk/d}/√d`
pub fn fourier(d: usize) -> UnitaryOp {
    let scale = 1.0 / (d as f64).sqrt();
    let m = CMatrix::from_fn(d, d, |j, k| {
        let angle = 2.0 * std::f64::consts::PI * ((j * k) % d) as f64 / d as f64;
        C64::from_polar(scale, angle)
    });
    UnitaryOp::new(m).expect("the Fourier matrix is unitary")
}

fn optimal_strategy(d: usize) -> Result<Strategy, Failure> {
    Ok(make_strategy(
        StrategyKind::AntisymOptimal,
        reference_antisymmetric_state(d)?,
    )?)
}

fn symmetric_strategy(d: usize) -> Result<Strategy, Failure> {
    Ok(make_strategy(
        StrategyKind::Symmetric,
        reference_symmetric_state(d)?,
    )?)
}

/// Fixed-width scientific notation with 15 significant digits.
fn num(x: f64) -> String {
    format!("{x:.14e}")
}

fn json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn ok(text: String) -> Rendered {
    Rendered {
        text,
        code: EXIT_OK,
    }
}

fn cmd_compare(c: &Common, u: &str, v: &str, choice: StrategyChoice) -> Result<Rendered, Failure> {
    let u = resolve_gate(u, c.d)?;
    let v = resolve_gate(v, c.d)?;
    let strategy = match choice {
        StrategyChoice::Optimal => optimal_strategy(c.d)?,
        StrategyChoice::Symmetric => symmetric_strategy(c.d)?,
    };
    let report = run_pair(&strategy, &u, &v, c.seed)?;
    Ok(ok(match c.format {
        Format::Json => json(&report),
        Format::Csv => compare_csv(&report),
    }))
}

fn compare_csv(r: &ComparisonReport) -> String {
    let verdict = match r.verdict {
        Verdict::Different => "different",
        Verdict::Inconclusive => "inconclusive",
    };
    format!(
        "p_diff,p_inconclusive,verdict,seed\n{},{},{},{}\n",
        num(r.p_diff),
        num(r.p_inconclusive),
        verdict,
        r.seed
    )
}

#[derive(Serialize)]
pub struct SuccessRow {
    pub d: usize,
    pub optimal_analytic: f64,
    pub optimal_mc: f64,
    pub optimal_mc_stderr: f64,
    pub symmetric_analytic: f64,
    pub symmetric_mc: f64,
    pub symmetric_mc_stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_overall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetric_overall: Option<f64>,
}

#[derive(Serialize)]
struct SuccessTable {
    tool_version: &'static str,
    seed: u64,
    n_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta_same: Option<f64>,
    rows: Vec<SuccessRow>,
}

/// One row of the success table; both columns reuse the same Haar pairs.
pub fn success_row(
    d: usize,
    n: usize,
    seed: u64,
    eta_same: Option<f64>,
) -> Result<SuccessRow, Failure> {
    let opt = optimal_strategy(d)?;
    let sym = symmetric_strategy(d)?;
    let opt_mc = average_success_mc(&opt, n, seed)?;
    let sym_mc = average_success_mc(&sym, n, seed)?;
    let optimal_analytic = average_success_analytic(&opt);
    let symmetric_analytic = average_success_analytic(&sym);
    Ok(SuccessRow {
        d,
        optimal_analytic,
        optimal_mc: opt_mc.mean,
        optimal_mc_stderr: opt_mc.std_error,
        symmetric_analytic,
        symmetric_mc: sym_mc.mean,
        symmetric_mc_stderr: sym_mc.std_error,
        optimal_overall: eta_same.map(|eta| (1.0 - eta) * optimal_analytic),
        symmetric_overall: eta_same.map(|eta| (1.0 - eta) * symmetric_analytic),
    })
}

fn cmd_success_table(c: &Common, d_min: usize, d_max: usize) -> Result<Rendered, Failure> {
    if !(2 <= d_min && d_min <= d_max && d_max <= MAX_TABLE_DIM) {
        return Err(Failure::usage(format!(
            "need 2 <= d-min <= d-max <= {MAX_TABLE_DIM}, got {d_min}..{d_max}"
        )));
    }
    let rows = (d_min..=d_max)
        .map(|d| success_row(d, c.n_samples, c.seed, c.eta_same))
        .collect::<Result<Vec<_>, _>>()?;
    let table = SuccessTable {
        tool_version: VERSION,
        seed: c.seed,
        n_samples: c.n_samples,
        eta_same: c.eta_same,
        rows,
    };
    Ok(ok(match c.format {
        Format::Json => json(&table),
        Format::Csv => {
            let mut s = String::from(
                "tool_version,seed,n_samples,d,optimal_analytic,optimal_mc,optimal_mc_stderr,\
                 symmetric_analytic,symmetric_mc,symmetric_mc_stderr",
            );
            if c.eta_same.is_some() {
                s.push_str(",eta_same,optimal_overall,symmetric_overall");
            }
            s.push('\n');
            for r in &table.rows {
                let _ = write!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{}",
                    VERSION,
                    c.seed,
                    c.n_samples,
                    r.d,
                    num(r.optimal_analytic),
                    num(r.optimal_mc),
                    num(r.optimal_mc_stderr),
                    num(r.symmetric_analytic),
                    num(r.symmetric_mc),
                    num(r.symmetric_mc_stderr)
                );
                if let (Some(eta), Some(o), Some(y)) =
                    (c.eta_same, r.optimal_overall, r.symmetric_overall)
                {
                    let _ = write!(s, ",{},{},{}", num(eta), num(o), num(y));
                }
                s.push('\n');
            }
            s
        }
    }))
}

#[derive(Serialize)]
pub struct BoundScan {
    pub tool_version: &'static str,
    pub seed: u64,
    pub n_samples: usize,
    pub d: usize,
    pub max_success: f64,
    pub mean_success: f64,
    pub bound: f64,
    pub margin: f64,
    pub degenerate_draws: usize,
    pub violations: usize,
}

/// Draw `i` uses RNG stream `i` of `seed`.
pub fn bound_scan(d: usize, n: usize, seed: u64) -> Result<BoundScan, Failure> {
    let bound = success_bound(d);
    let (mut max_success, mut total) = (f64::NEG_INFINITY, 0.0);
    let (mut degenerate_draws, mut violations) = (0, 0);
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let p = ppovm_success(&random_valid_ppovm(d, &mut rng)?)?;
        if p == 0.0 {
            degenerate_draws += 1;
        }
        if p > bound + BOUND_SLACK {
            violations += 1;
        }
        max_success = max_success.max(p);
        total += p;
    }
    Ok(BoundScan {
        tool_version: VERSION,
        seed,
        n_samples: n,
        d,
        max_success,
        mean_success: total / n as f64,
        bound,
        margin: bound - max_success,
        degenerate_draws,
        violations,
    })
}

fn cmd_bound_scan(c: &Common) -> Result<Rendered, Failure> {
    let scan = bound_scan(c.d, c.n_samples, c.seed)?;
    let text = match c.format {
        Format::Json => json(&scan),
        Format::Csv => format!(
            "tool_version,seed,n_samples,d,max_success,mean_success,bound,margin,degenerate_draws,violations\n\
             {},{},{},{},{},{},{},{},{},{}\n",
            VERSION,
            scan.seed,
            scan.n_samples,
            scan.d,
            num(scan.max_success),
            num(scan.mean_success),
            num(scan.bound),
            num(scan.margin),
            scan.degenerate_draws,
            scan.violations
        ),
    };
    let code = if scan.violations > 0 {
        EXIT_INVARIANT
    } else {
        EXIT_OK
    };
    Ok(Rendered { text, code })
}

#[derive(Serialize)]
pub struct TwirlCheck {
    pub input: String,
    /// max elementwise |MC − exact|
    pub deviation: f64,
    pub max_std_error: f64,
}

#[derive(Serialize)]
pub struct TwirlReport {
    pub tool_version: &'static str,
    pub seed: u64,
    pub n_samples: usize,
    pub d: usize,
    pub checks: Vec<TwirlCheck>,
    /// Twirl inputs that are already invariant: `S`, `P₊`, `P₋`.
    pub invariant_max_deviation: f64,
    /// max |T(T(Y)) − T(Y)| over the battery
    pub idempotence_residual: f64,
    /// max |tr T(Y) − tr Y| over the battery
    pub trace_residual: f64,
    /// Haar average of ω_{U⊗U} against ω_T
    pub omega_twirl_deviation: f64,
    pub max_deviation: f64,
}

fn basis_op(n: usize, bra: usize, ket: usize) -> CMatrix {
    CMatrix::unit(n, bra, ket)
}

/// Twirl battery: `|ab⟩⟨ce|` for a few index patterns and the average
/// channel on `|0⟩⟨0|` and `|0⟩⟨1|`. The battery uses seed streams offset
/// by its position so every check is an independent experiment.
pub fn twirl_report(d: usize, n: usize, seed: u64) -> Result<TwirlReport, Failure> {
    let dd = d * d;
    let idx = |a: usize, b: usize| a * d + b;
    let battery: Vec<(String, CMatrix)> = vec![
        ("|00><00|".into(), basis_op(dd, idx(0, 0), idx(0, 0))),
        ("|01><01|".into(), basis_op(dd, idx(0, 1), idx(0, 1))),
        ("|01><10|".into(), basis_op(dd, idx(0, 1), idx(1, 0))),
        ("|00><11|".into(), basis_op(dd, idx(0, 0), idx(1, 1))),
        ("|01><11|".into(), basis_op(dd, idx(0, 1), idx(1, 1))),
    ];
    let mut checks = Vec::new();
    let (mut idempotence, mut trace_res) = (0.0_f64, 0.0_f64);
    for (k, (name, y)) in battery.iter().enumerate() {
        let exact = twirl_exact(y)?;
        let mc = twirl_mc(y, n, seed.wrapping_add(k as u64))?;
        idempotence = idempotence.max(twirl_exact(&exact)?.max_abs_diff(&exact));
        trace_res = trace_res.max((exact.trace()? - y.trace()?).norm());
        checks.push(TwirlCheck {
            input: format!("twirl {name}"),
            deviation: mc.max_deviation(&exact),
            max_std_error: mc.max_std_error(),
        });
    }
    for (k, (name, x)) in [("|0><0|", basis_op(d, 0, 0)), ("|0><1|", basis_op(d, 0, 1))]
        .into_iter()
        .enumerate()
    {
        let exact = crate::haar::average_channel_exact(&x)?;
        let mc =
            crate::haar::average_channel_mc(&x, n, seed.wrapping_add((battery.len() + k) as u64))?;
        checks.push(TwirlCheck {
            input: format!("average {name}"),
            deviation: mc.max_deviation(&exact),
            max_std_error: mc.max_std_error(),
        });
    }

    let split = build_split(d)?;
    let invariant_seed = seed.wrapping_add(battery.len() as u64 + 2);
    let mut invariant_max_deviation = 0.0_f64;
    for y in [&split.swap, &split.p_plus, &split.p_minus] {
        let mc = twirl_mc(y, n.min(1000), invariant_seed)?;
        invariant_max_deviation = invariant_max_deviation.max(mc.max_deviation(y));
    }

    let omega_t = omega_twirl(d)?;
    let big = dd * dd;
    let omega_mc = mc_matrix(
        n,
        seed.wrapping_add(battery.len() as u64 + 3),
        big,
        big,
        |rng| {
            let u = haar_sample(d, rng);
            Ok(choi_of_unitary_pair(&u, &u)?.mat().clone())
        },
    )?;
    let omega_twirl_deviation = omega_mc.max_deviation(omega_t.mat());

    let max_deviation = checks
        .iter()
        .map(|c| c.deviation)
        .fold(omega_twirl_deviation, f64::max);
    Ok(TwirlReport {
        tool_version: VERSION,
        seed,
        n_samples: n,
        d,
        checks,
        invariant_max_deviation,
        idempotence_residual: idempotence,
        trace_residual: trace_res,
        omega_twirl_deviation,
        max_deviation,
    })
}

fn cmd_twirl_verify(c: &Common) -> Result<Rendered, Failure> {
    let r = twirl_report(c.d, c.n_samples, c.seed)?;
    Ok(ok(match c.format {
        Format::Json => json(&r),
        Format::Csv => {
            let mut s =
                String::from("tool_version,seed,n_samples,d,check,deviation,max_std_error\n");
            let mut row = |name: &str, dev: f64, se: Option<f64>| {
                let se = se.map(num).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{VERSION},{},{},{},{name},{},{se}",
                    c.seed,
                    c.n_samples,
                    c.d,
                    num(dev)
                );
            };
            for check in &r.checks {
                row(&check.input, check.deviation, Some(check.max_std_error));
            }
            row("invariant inputs", r.invariant_max_deviation, None);
            row("idempotence", r.idempotence_residual, None);
            row("trace", r.trace_residual, None);
            row("omega_twirl", r.omega_twirl_deviation, None);
            s
        }
    }))
}

#[derive(Serialize)]
pub struct WitnessReport {
    pub tool_version: &'static str,
    pub d: usize,
    /// max |U V − W²|
    pub product_residual: f64,
    /// max |Choi(E_U∘E_V) − Choi(E_W∘E_W)|
    pub choi_residual: f64,
    pub u_distance_from_w: f64,
    pub v_distance_from_w: f64,
}

pub fn witness_report(w: &UnitaryOp, r: &UnitaryOp) -> Result<WitnessReport, Failure> {
    let (u, v) = sequential_witness(w, r)?;
    let (product_residual, choi_residual) = witness_residuals(w, &u, &v)?;
    Ok(WitnessReport {
        tool_version: VERSION,
        d: w.dim(),
        product_residual,
        choi_residual,
        u_distance_from_w: u.phase_distance(w)?,
        v_distance_from_w: v.phase_distance(w)?,
    })
}

fn cmd_witness(c: &Common, w: &str, r: &str) -> Result<Rendered, Failure> {
    let report = witness_report(&resolve_gate(w, c.d)?, &resolve_gate(r, c.d)?)?;
    Ok(ok(match c.format {
        Format::Json => json(&report),
        Format::Csv => format!(
            "tool_version,d,product_residual,choi_residual,u_distance_from_w,v_distance_from_w\n{},{},{},{},{},{}\n",
            VERSION,
            report.d,
            num(report.product_residual),
            num(report.choi_residual),
            num(report.u_distance_from_w),
            num(report.v_distance_from_w)
        ),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("unicomp").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn gates_are_unitary_and_dimension_checked() {
        for name in [
            "identity",
            "pauli-x",
            "pauli-y",
            "pauli-z",
            "hadamard",
            "fourier",
            "fourier-2",
        ] {
            assert_eq!(resolve_gate(name, 2).unwrap().dim(), 2);
        }
        assert_eq!(resolve_gate("fourier-d", 5).unwrap().dim(), 5);
        assert_eq!(resolve_gate("pauli-x", 3).unwrap_err().code, EXIT_DIMENSION);
        assert_eq!(
            resolve_gate("fourier-4", 3).unwrap_err().code,
            EXIT_DIMENSION
        );
        assert_eq!(resolve_gate("toffoli", 2).unwrap_err().code, EXIT_USAGE);
        assert_eq!(
            resolve_gate("@/nonexistent/m.json", 2).unwrap_err().code,
            EXIT_USAGE
        );
        // the qubit Fourier transform is the Hadamard gate
        let diff = fourier(2)
            .mat()
            .max_abs_diff(resolve_gate("hadamard", 2).unwrap().mat());
        assert!(diff < 1e-15);
    }

    #[test]
    fn compare_examples() {
        for (u, v, expect) in [
            ("identity", "pauli-x", 1.0),
            ("identity", "identity", 0.0),
            ("hadamard", "hadamard", 0.0),
        ] {
            let (code, out, _) = run_str(&["compare", "--d", "2", "--u", u, "--v", v]);
            assert_eq!(code, 0);
            let report: ComparisonReport = serde_json::from_str(&out).unwrap();
            assert!(
                (report.p_diff - expect).abs() < 1e-12,
                "{u} {v}: {}",
                report.p_diff
            );
        }
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_str(&["compare", "--u", "nonsense"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["compare", "--d", "1"]).0, EXIT_USAGE);
        assert_eq!(
            run_str(&["success-table", "--d-min", "3", "--d-max", "7"]).0,
            EXIT_USAGE
        );
        assert_eq!(
            run_str(&["success-table", "--d-min", "4", "--d-max", "3"]).0,
            EXIT_USAGE
        );
        assert_eq!(
            run_str(&["success-table", "--eta-same", "1.0"]).0,
            EXIT_USAGE
        );
        assert_eq!(run_str(&["witness", "--r", "identity"]).0, EXIT_USAGE);
        assert_eq!(
            run_str(&["compare", "--d", "3", "--v", "pauli-z"]).0,
            EXIT_DIMENSION
        );
    }

    #[test]
    fn csv_uses_fifteen_significant_digits() {
        let (code, out, _) = run_str(&[
            "compare", "--u", "identity", "--v", "pauli-x", "--format", "csv",
        ]);
        assert_eq!(code, 0);
        let line = out.lines().nth(1).unwrap();
        assert!(line.starts_with("1.00000000000000e0,"), "{line}");
    }

    #[test]
    fn success_rows_hit_closed_forms() {
        let row = success_row(4, 200, 3, Some(0.5)).unwrap();
        assert!((row.optimal_analytic - 0.625).abs() < 1e-12);
        assert!((row.symmetric_analytic - 0.375).abs() < 1e-12);
        assert!((row.optimal_overall.unwrap() - 0.3125).abs() < 1e-12);
    }

    #[test]
    fn witness_default_is_clean() {
        let (code, out, _) = run_str(&["witness", "--w", "hadamard", "--r", "pauli-z"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["product_residual"].as_f64().unwrap() <= 1e-10);
        assert!(v["choi_residual"].as_f64().unwrap() <= 1e-10);
    }
}
