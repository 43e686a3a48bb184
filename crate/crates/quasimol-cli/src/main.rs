//! Command-line harness around the solver library: single benchmark runs,
//! convergence-table regeneration, the error-model fit, and kernel
//! diagnostics.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 on numerical
//! failures (diverged runs, failed checks, fits that do not converge).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use quasimol::grid::CoefficientField;
use quasimol::interp::{linf_grid_error, ErrorMode, Stencil};
use quasimol::kernels::{kernel_moment, KernelSpec, ScaledKernel};
use quasimol::problems::{parse_problem, Series, SeriesSpec, BURGERS_T_FINAL};
use quasimol::solver::{solve, SolveError, SolverConfig, StepSize};
use quasimol::study::{fit_error_model, run_table, ErrorMeasure, FitError, TableConfig};
use quasimol::{io, Alpha};

#[derive(Parser)]
#[command(name = "quasimol", version, about = "Kernel-based solver for first-order evolution equations, with a convergence-study harness")]
struct Cli {
    /// Bound the number of worker threads (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and report the final error.
    Run(RunArgs),
    /// Regenerate a convergence table over dyadic (h, eps) ranges.
    Table(TableArgs),
    /// Fit the two-term error model to a table CSV.
    Fit(FitArgs),
    /// Build a kernel and print its diagnostics.
    Kernel(KernelArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Problem name: burgers-a, burgers-b, or transport:<u>.
    #[arg(long)]
    problem: String,
    /// Grid spacing exponent: h = 2^nu_h.
    #[arg(long, allow_hyphen_values = true)]
    nu_h: i32,
    /// Kernel scale exponent: eps = 2^nu_eps.
    #[arg(long, allow_hyphen_values = true)]
    nu_eps: i32,
    /// Kernel order override (default: the problem's standard kernel).
    #[arg(long)]
    kernel_order: Option<usize>,
    /// Kernel smoothness override.
    #[arg(long)]
    kernel_smoothness: Option<usize>,
    /// Final time.
    #[arg(long, default_value_t = BURGERS_T_FINAL)]
    t_final: f64,
    /// Time step as a multiple of h (default 0.25).
    #[arg(long, conflicts_with = "dt")]
    cfl: Option<f64>,
    /// Explicit time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Write the final coefficient field as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated times at which to write snapshot CSVs next to --out.
    #[arg(long, value_delimiter = ',', requires = "out")]
    snapshots: Vec<f64>,
}

#[derive(Copy, Clone, ValueEnum)]
enum SeriesArg {
    #[value(alias = "A")]
    A,
    #[value(alias = "B")]
    B,
}

#[derive(Args)]
struct TableArgs {
    /// Benchmark series.
    #[arg(long, value_enum)]
    series: SeriesArg,
    /// Grid exponent range, e.g. -9..-13 (order-insensitive, inclusive).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
    nu_h_range: (i32, i32),
    /// Kernel-scale exponent range, e.g. -6..-9.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
    nu_eps_range: (i32, i32),
    /// Write the table as CSV here (plain-text rendering always prints).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep only cells with nu_eps - nu_h at least this large.
    #[arg(long, allow_hyphen_values = true)]
    min_gap: Option<i32>,
    /// Fixed time step for every cell (default: the series' standard rule).
    #[arg(long, conflicts_with = "cfl")]
    dt: Option<f64>,
    /// Time step as a multiple of h for every cell.
    #[arg(long)]
    cfl: Option<f64>,
    /// Measure errors on raw coefficients instead of the interpolant.
    #[arg(long)]
    coefficients: bool,
}

#[derive(Args)]
struct FitArgs {
    /// Table CSV produced by the table subcommand.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct KernelArgs {
    /// Vanishing-moment order (2, 4, or 6).
    #[arg(long)]
    order: usize,
    /// Smoothness class (2, 4, or 6).
    #[arg(long)]
    smoothness: usize,
    /// Space dimension (1, 2, or 3).
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Verify the moment conditions numerically and fail on mismatch.
    #[arg(long)]
    check_moments: bool,
}

enum CliError {
    /// Bad input from the user: exit 1.
    Usage(String),
    /// The mathematics failed: exit 2.
    Numerical(String),
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }
    fn numerical(e: impl std::fmt::Display) -> Self {
        CliError::Numerical(e.to_string())
    }
}

fn parse_range(text: &str) -> Result<(i32, i32), String> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| format!("expected lo..hi, found {text:?}"))?;
    let a: i32 = a.trim().parse().map_err(|e| format!("bad bound {a:?}: {e}"))?;
    let b: i32 = b.trim().parse().map_err(|e| format!("bad bound {b:?}: {e}"))?;
    Ok((a.min(b), a.max(b)))
}

fn main() -> ExitCode {
    // Die quietly instead of panicking when stdout closes early, e.g. when
    // a rendered table is piped into `head`.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    configure_jobs(cli.jobs);

    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Table(args) => table(args),
        Command::Fit(args) => fit(args),
        Command::Kernel(args) => kernel(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_jobs(jobs: Option<usize>) {
    if let Some(jobs) = jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("note: could not configure {jobs} workers: {e}");
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_jobs(jobs: Option<usize>) {
    if jobs.is_some() {
        eprintln!("note: built without parallel support; --jobs has no effect");
    }
}

/// Standard kernel parameters for a problem when the user does not
/// override them.
fn default_kernel(problem: &str) -> (usize, usize) {
    match problem {
        "burgers-b" => (2, 2),
        _ => (4, 4),
    }
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let problem = parse_problem(&args.problem).map_err(CliError::usage)?;
    let (default_order, default_smoothness) = default_kernel(&args.problem);
    let spec = KernelSpec::Composite {
        order: args.kernel_order.unwrap_or(default_order),
        smoothness: args.kernel_smoothness.unwrap_or(default_smoothness),
        dim: 1,
    };
    let h = (args.nu_h as f64).exp2();
    let epsilon = (args.nu_eps as f64).exp2();
    let step = match (args.dt, args.cfl) {
        (Some(dt), _) => StepSize::Dt(dt),
        (None, Some(cfl)) => StepSize::CflH(cfl),
        (None, None) => StepSize::CflH(0.25),
    };
    let kernel = ScaledKernel::new(spec.build().map_err(CliError::usage)?, epsilon)
        .map_err(CliError::usage)?;
    let mut config = SolverConfig::new(h, epsilon, spec, args.t_final, step);
    config.snapshot_times = args.snapshots;

    let result = solve(&problem, &config).map_err(|e| match e {
        SolveError::BlowUp { .. } | SolveError::NonFinite { .. } => CliError::numerical(e),
        other => CliError::usage(other),
    })?;
    println!(
        "solved {} to t = {} in {} steps ({:.2?})",
        args.problem,
        result.field.time(),
        result.step_count,
        result.wall_time
    );

    if problem.exact(args.t_final, &[0.0]).is_some() {
        let stencil = Stencil::build(&kernel, h).map_err(CliError::usage)?;
        let error = linf_grid_error(
            &result.field,
            |x| problem.exact(args.t_final, x).expect("oracle checked"),
            Alpha::Value,
            ErrorMode::Interpolant {
                kernel: &kernel,
                stencil: &stencil,
            },
        )
        .map_err(CliError::numerical)?;
        println!("final L_inf error = {error:.6e}");
    }

    if let Some(out) = &args.out {
        write_field(out, &result.field)?;
        for snapshot in &result.snapshots {
            write_field(&snapshot_path(out, snapshot.time()), snapshot)?;
        }
    }
    Ok(())
}

fn write_field(path: &Path, field: &CoefficientField) -> Result<(), CliError> {
    std::fs::write(path, io::field_to_csv(field))
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

/// `field.csv` at time 0.25 becomes `field_t0.25.csv`.
fn snapshot_path(out: &Path, time: f64) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    let mut name = format!("{stem}_t{time}");
    if let Some(ext) = out.extension() {
        let _ = write!(name, ".{}", ext.to_string_lossy());
    }
    out.with_file_name(name)
}

fn table(args: TableArgs) -> Result<(), CliError> {
    let spec = SeriesSpec::new(match args.series {
        SeriesArg::A => Series::A,
        SeriesArg::B => Series::B,
    });
    let step = match (args.dt, args.cfl) {
        (Some(dt), _) => Some(StepSize::Dt(dt)),
        (None, Some(cfl)) => Some(StepSize::CflH(cfl)),
        (None, None) => None,
    };
    let config = TableConfig {
        step,
        min_gap: args.min_gap,
        measure: if args.coefficients {
            ErrorMeasure::Coefficients
        } else {
            ErrorMeasure::Interpolant
        },
    };
    let table = run_table(
        spec,
        args.nu_h_range.0..=args.nu_h_range.1,
        args.nu_eps_range.0..=args.nu_eps_range.1,
        &config,
    );
    print!("{}", io::render_table(&table));
    let completed = table.present().count();
    println!("{completed} of {} cells completed", table.cells.len());
    if let Some(out) = &args.out {
        std::fs::write(out, io::table_to_csv(&table))
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))?;
    }
    Ok(())
}

fn fit(args: FitArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.input.display())))?;
    let table = io::parse_table_csv(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.input.display())))?;
    let fit = fit_error_model(&table).map_err(|e| match e {
        FitError::TooFewCells { .. } | FitError::NoConvergence { .. } => CliError::numerical(e),
    })?;
    println!(
        "error model: {:.3} * eps^{:.2} + {:.3} * h^{:.2} / eps^{:.2}",
        fit.c1, fit.a, fit.c2, fit.b, fit.c
    );
    println!("rms log-misfit: {:.3}", fit.residual);
    if fit.h_term_reliable {
        println!("h-term: reliable");
    } else {
        match fit.eps_only_a {
            Some(a) => println!(
                "h-term: unreliable (too few cells above the column plateaus); eps-only exponent a = {a:.2}"
            ),
            None => println!("h-term: unreliable (too few cells above the column plateaus)"),
        }
    }
    Ok(())
}

fn kernel(args: KernelArgs) -> Result<(), CliError> {
    let spec = KernelSpec::Composite {
        order: args.order,
        smoothness: args.smoothness,
        dim: args.dim,
    };
    let kernel = spec.build().map_err(CliError::usage)?;
    println!("kernel {spec}");
    println!("  support radius: {}", kernel.support_radius());
    println!("  nodes:   {:?}", kernel.nodes());
    println!("  weights: {:?}", kernel.weights());
    if args.check_moments {
        // unit surface-area normalization per dimension: 2, 2*pi, 4*pi
        let omega = [2.0, std::f64::consts::TAU, 2.0 * std::f64::consts::TAU];
        let expected = 1.0 / omega[args.dim - 1];
        let mut ok = true;
        let m0 = kernel_moment(&kernel, 0);
        println!("  moment 0 = {m0} (want {expected})");
        ok &= (m0 - expected).abs() <= 1e-10;
        for i in 1..args.order / 2 {
            let mi = kernel_moment(&kernel, i);
            println!("  moment {i} = {mi:e} (want 0)");
            ok &= mi.abs() <= 1e-10;
        }
        if !ok {
            return Err(CliError::Numerical(
                "moment conditions violated beyond 1e-10".into(),
            ));
        }
        println!("  moment conditions hold to 1e-10");
    }
    Ok(())
}
