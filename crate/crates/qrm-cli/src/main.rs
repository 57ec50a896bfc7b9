//! `qrm` — evaluate the quantum Rabi model heat kernel, its parity
//! sectors, partition functions and finite-step Trotter kernels on
//! grids, and run the library's verification suites.
//!
//! Exit codes: 0 success, 1 invalid configuration, 2 numerical failure,
//! 3 verification-suite failure.

mod output;
mod pool;

use clap::{Args, Parser, Subcommand};
use output::{Cell, Format, Table};
use qrm::checks::{run_suite, SuiteOptions, SUITE_NAMES};
use qrm::core::{EvalPoint, ModelParams, Parity};
use qrm::oracle::{build_model, oracle_heat_kernel, oracle_partition, Which};
use qrm::quadrature::SimplexRule;
use qrm::series::{heat_kernel, parity_kernel, TruncationPolicy};
use qrm::thermo::{parity_partition, partition_function, ThermoPoint};
use qrm::trotter::{d_n_kernel, fit_log_slope};
use qrm::QrmError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qrm",
    version,
    about = "Quantum Rabi model heat kernels, partition functions and verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the full 2×2 heat kernel on an (x, y, t) grid
    Kernel(KernelArgs),
    /// Evaluate the parity-sector kernels K± on an (x, y, t) grid
    ParityKernel(KernelArgs),
    /// Partition function, parity sectors and spectral cross-check over β
    Partition(PartitionArgs),
    /// Deviation of the N-step kernels from the heat kernel, with fitted rate
    TrotterStudy(TrotterArgs),
    /// Run named verification suites and emit a pass/fail table
    Verify(VerifyArgs),
}

#[derive(Args)]
struct PhysicsArgs {
    /// coupling strength g (≥ 0)
    #[arg(long, allow_negative_numbers = true)]
    g: f64,
    /// level splitting Δ (≥ 0)
    #[arg(long, allow_negative_numbers = true)]
    delta: f64,
}

#[derive(Args)]
struct PolicyArgs {
    /// series truncation tolerance (entrywise tail bound)
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// hard cap on the series order λ
    #[arg(long, default_value_t = 64)]
    lambda_cap: usize,
    /// quadrature rule, nested:ORDER or qmc:COUNT[:SEED]
    #[arg(long, default_value = "nested:16")]
    quad: String,
    /// seed for the randomized quadrature shifts
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OutputArgs {
    /// output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// output path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    physics: PhysicsArgs,
    /// evaluation times, comma separated
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    t: String,
    /// x grid as START:STOP:COUNT
    #[arg(long, default_value = "-2:2:5", allow_hyphen_values = true)]
    x_range: String,
    /// y grid as START:STOP:COUNT
    #[arg(long, default_value = "-2:2:5", allow_hyphen_values = true)]
    y_range: String,
    #[command(flatten)]
    policy: PolicyArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    physics: PhysicsArgs,
    /// inverse temperatures, comma separated
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    beta: String,
    /// Fock cutoff for the spectral cross-check
    #[arg(long, default_value_t = 140)]
    fock_cutoff: usize,
    #[command(flatten)]
    policy: PolicyArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TrotterArgs {
    #[command(flatten)]
    physics: PhysicsArgs,
    /// evaluation time
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    t: f64,
    /// step counts N, comma separated (at least two for the rate fit)
    #[arg(long, default_value = "4,8,16")]
    steps: String,
    /// x probe grid as START:STOP:COUNT
    #[arg(long, default_value = "-2:2:5", allow_hyphen_values = true)]
    x_range: String,
    /// y probe grid as START:STOP:COUNT
    #[arg(long, default_value = "-2:2:5", allow_hyphen_values = true)]
    y_range: String,
    /// Fock cutoff for the reference heat kernel
    #[arg(long, default_value_t = 120)]
    fock_cutoff: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// suites to run, comma separated (default: all)
    #[arg(long)]
    suite: Option<String>,
    /// Fock cutoff override for the oracle-backed suites
    #[arg(long)]
    fock_cutoff: Option<usize>,
    /// seed for the randomized quadrature shifts
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

enum Failure {
    Validation(String),
    Numeric(String),
    Verification(usize),
}

impl From<QrmError> for Failure {
    fn from(e: QrmError) -> Self {
        match e {
            QrmError::InvalidParameter(_) | QrmError::PathSumTooLarge { .. } => {
                Failure::Validation(e.to_string())
            }
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

fn validation(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

fn parse_f64_list(text: &str, flag: &str) -> Result<Vec<f64>, Failure> {
    let values: Result<Vec<f64>, _> =
        text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(validation(format!(
            "--{flag} expects a comma-separated list of numbers, got {text:?}"
        ))),
    }
}

fn parse_range(text: &str, flag: &str) -> Result<Vec<f64>, Failure> {
    let bad = || {
        validation(format!(
            "--{flag} expects START:STOP:COUNT with COUNT ≥ 1, got {text:?}"
        ))
    };
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !a.is_finite() || !b.is_finite() || n == 0 || n > 100_000 {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn parse_quad(text: &str, seed: u64) -> Result<SimplexRule, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let rule = match parts.as_slice() {
        ["nested", order] => {
            let order: usize = order.trim().parse().map_err(|_| {
                validation(format!("--quad nested:ORDER needs an integer order, got {text:?}"))
            })?;
            let mut rule = SimplexRule::nested_gauss(order)?;
            rule.seed = seed;
            rule
        }
        ["qmc", count] | ["qmc", count, _] => {
            let count: usize = count.trim().parse().map_err(|_| {
                validation(format!("--quad qmc:COUNT needs an integer count, got {text:?}"))
            })?;
            let rule_seed = match parts.get(2) {
                Some(s) => s.trim().parse::<u64>().map_err(|_| {
                    validation(format!("--quad qmc:COUNT:SEED needs an integer seed, got {text:?}"))
                })?,
                None => seed,
            };
            SimplexRule::sorted_qmc(count, rule_seed)?
        }
        _ => {
            return Err(validation(format!(
                "--quad must be nested:ORDER or qmc:COUNT[:SEED], got {text:?}"
            )))
        }
    };
    Ok(rule)
}

fn run_kernel(args: &KernelArgs, split_parity: bool) -> Result<(), Failure> {
    let params = ModelParams::new(args.physics.g, args.physics.delta)?;
    let ts = parse_f64_list(&args.t, "t")?;
    let xs = parse_range(&args.x_range, "x-range")?;
    let ys = parse_range(&args.y_range, "y-range")?;
    let policy = TruncationPolicy::new(args.policy.tol, args.policy.lambda_cap)?;
    let rule = parse_quad(&args.policy.quad, args.policy.seed)?;
    for &t in &ts {
        EvalPoint::new(0.0, 0.0, t)?;
    }

    let mut grid = Vec::with_capacity(ts.len() * xs.len() * ys.len());
    for &t in &ts {
        for &x in &xs {
            for &y in &ys {
                grid.push((x, y, t));
            }
        }
    }
    let rows = pool::map_ordered(grid.len(), |i| {
        let (x, y, t) = grid[i];
        let p = EvalPoint::new(x, y, t)?;
        let mut row = vec![Cell::Num(x), Cell::Num(y), Cell::Num(t)];
        if split_parity {
            let plus = parity_kernel(&p, Parity::Plus, &params, &policy, &rule)?;
            let minus = parity_kernel(&p, Parity::Minus, &params, &policy, &rule)?;
            row.push(Cell::Num(plus.value));
            row.push(Cell::Num(minus.value));
            row.push(Cell::Int(plus.lambda_used.max(minus.lambda_used) as u64));
            row.push(Cell::Num(plus.tail_bound + minus.tail_bound));
        } else {
            let k = heat_kernel(&p, &params, &policy, &rule)?;
            for v in [k.value.k11, k.value.k12, k.value.k21, k.value.k22] {
                row.push(Cell::Num(v));
            }
            row.push(Cell::Int(k.lambda_used as u64));
            row.push(Cell::Num(k.tail_bound));
        }
        Ok(row)
    })?;

    let columns: &'static [&'static str] = if split_parity {
        &["x", "y", "t", "k_plus", "k_minus", "lambda_used", "tail_bound"]
    } else {
        &["x", "y", "t", "k11", "k12", "k21", "k22", "lambda_used", "tail_bound"]
    };
    write_table(columns, rows, &args.output)
}

fn run_partition(args: &PartitionArgs) -> Result<(), Failure> {
    let params = ModelParams::new(args.physics.g, args.physics.delta)?;
    let betas = parse_f64_list(&args.beta, "beta")?;
    let policy = TruncationPolicy::new(args.policy.tol, args.policy.lambda_cap)?;
    let rule = parse_quad(&args.policy.quad, args.policy.seed)?;
    for &beta in &betas {
        ThermoPoint::new(beta, params)?;
    }

    let model = build_model(&params, args.fock_cutoff, Which::Full)?;
    let rows = pool::map_ordered(betas.len(), |i| {
        let beta = betas[i];
        let tp = ThermoPoint::new(beta, params)?;
        let z = partition_function(&tp, &policy, &rule)?.value;
        let z_plus = parity_partition(&tp, Parity::Plus, &policy, &rule)?.value;
        let z_minus = parity_partition(&tp, Parity::Minus, &policy, &rule)?.value;
        let oracle = oracle_partition(&model, beta)?;
        Ok(vec![
            Cell::Num(beta),
            Cell::Num(z),
            Cell::Num(z_plus),
            Cell::Num(z_minus),
            Cell::Num(oracle),
            Cell::Num((z - oracle).abs() / oracle),
        ])
    })?;
    write_table(&["beta", "Z", "Z_plus", "Z_minus", "oracle_Z", "rel_err"], rows, &args.output)
}

fn run_trotter(args: &TrotterArgs) -> Result<(), Failure> {
    let params = ModelParams::new(args.physics.g, args.physics.delta)?;
    let steps: Vec<usize> = args
        .steps
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| validation(format!("--steps expects integers, got {:?}", args.steps)))?;
    if steps.len() < 2 || steps.iter().any(|&n| n == 0) {
        return Err(validation(
            "--steps needs at least two nonzero step counts for the rate fit",
        ));
    }
    let xs = parse_range(&args.x_range, "x-range")?;
    let ys = parse_range(&args.y_range, "y-range")?;
    let t = args.t;
    EvalPoint::new(0.0, 0.0, t)?;

    let model = build_model(&params, args.fock_cutoff, Which::Full)?;
    let mut grid = Vec::with_capacity(xs.len() * ys.len());
    for &x in &xs {
        for &y in &ys {
            grid.push((x, y));
        }
    }
    let mut devs = Vec::with_capacity(steps.len());
    for &n in &steps {
        let pointwise = pool::map_ordered(grid.len(), |i| {
            let (x, y) = grid[i];
            let p = EvalPoint::new(x, y, t)?;
            let exact = oracle_heat_kernel(&model, &p)?;
            Ok(d_n_kernel(&p, &params, n)?.max_abs_diff(&exact))
        })?;
        devs.push(pointwise.into_iter().fold(0.0f64, f64::max));
    }
    let slope = fit_log_slope(&steps, &devs)?;

    let rows = steps
        .iter()
        .zip(&devs)
        .map(|(&n, &dev)| vec![Cell::Int(n as u64), Cell::Num(dev), Cell::Num(slope)])
        .collect();
    write_table(&["N", "max_dev", "fitted_slope"], rows, &args.output)
}

fn run_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let suites: Vec<String> = match &args.suite {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => SUITE_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    for name in &suites {
        if !SUITE_NAMES.contains(&name.as_str()) {
            return Err(validation(format!(
                "unknown suite {name:?}; available: {}",
                SUITE_NAMES.join(", ")
            )));
        }
    }
    let opts = SuiteOptions { fock_cutoff: args.fock_cutoff, seed: args.seed };

    let mut rows = Vec::new();
    let mut failed = 0usize;
    for name in &suites {
        for check in run_suite(name, &opts)? {
            let pass = check.pass();
            failed += usize::from(!pass);
            rows.push(vec![
                Cell::Text(check.suite.to_string()),
                Cell::Text(check.name.to_string()),
                Cell::Num(check.max_err),
                Cell::Num(check.tol),
                Cell::Text(if pass { "pass" } else { "fail" }.to_string()),
                Cell::Text(check.detail),
            ]);
        }
    }
    write_table(&["suite", "check", "max_err", "tol", "status", "detail"], rows, &args.output)?;
    if failed > 0 {
        return Err(Failure::Verification(failed));
    }
    Ok(())
}

fn write_table(
    columns: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
    out: &OutputArgs,
) -> Result<(), Failure> {
    let mut table = Table::new(columns);
    for row in rows {
        table.push(row);
    }
    table.write(out.format, out.out.as_deref()).map_err(|e| {
        validation(match &out.out {
            Some(path) => format!("cannot write {}: {e}", path.display()),
            None => format!("cannot write to stdout: {e}"),
        })
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Kernel(args) => run_kernel(args, false),
        Command::ParityKernel(args) => run_kernel(args, true),
        Command::Partition(args) => run_partition(args),
        Command::TrotterStudy(args) => run_trotter(args),
        Command::Verify(args) => run_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(failed)) => {
            eprintln!("verification failed: {failed} check(s) above tolerance");
            ExitCode::from(3)
        }
    }
}
