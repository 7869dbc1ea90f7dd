//! Command-line front end for recovery experiments.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 on usage
//! errors (including infeasible requests), 3 on file I/O failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sphrec::harness::{
    ExportFormat, TrialSpec, derive_seed, export, fast_preset, noise_sweep, phase_diagram,
    run_trial_with_recovery, verify_bounds,
};
use sphrec::ripcheck::{
    RipError, format_report, randomized_rip_lower_bound, restricted_isometry_constant,
};
use sphrec::sensing::{MeasureTag, build_ensemble, sample_points};

#[derive(Parser)]
#[command(name = "sphrec", version, about = "Sparse recovery of spherical harmonic expansions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one synthetic recovery trial and report the error.
    Recover(RecoverArgs),
    /// Map the recovery success frequency over a sparsity/sample grid.
    PhaseDiagram(PhaseDiagramArgs),
    /// Compute the restricted isometry constant of a sampled system.
    Rip(RipArgs),
    /// Verify the polynomial-growth and orthonormality bounds.
    VerifyBounds(VerifyBoundsArgs),
    /// Tabulate the median recovery error against the noise radius.
    NoiseSweep(NoiseSweepArgs),
}

#[derive(Args)]
struct RecoverArgs {
    /// Degree bound D; the basis has D^2 functions.
    #[arg(long, default_value_t = 16)]
    degree: usize,
    /// Number of nonzero coefficients in the planted expansion.
    #[arg(long)]
    sparsity: usize,
    /// Number of random sample points.
    #[arg(long)]
    samples: usize,
    /// Sampling measure: product or surface.
    #[arg(long, default_value = "product")]
    measure: MeasureTag,
    /// Sup-norm radius of the added noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the recovered coefficients as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PhaseDiagramArgs {
    #[arg(long, default_value_t = 16)]
    degree: usize,
    /// Sparsity grid as start:end:step (inclusive).
    #[arg(long, value_name = "A:B:STEP")]
    s_grid: Option<String>,
    /// Sample-count grid as start:end:step (inclusive).
    #[arg(long, value_name = "A:B:STEP")]
    m_grid: Option<String>,
    /// Trials per grid cell.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value = "product")]
    measure: MeasureTag,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix; writes PREFIX.csv and PREFIX.pgm.
    #[arg(long)]
    out: PathBuf,
    /// Reduced preset (sparsity to 12, samples to 120, 10 trials);
    /// explicit grid or trial flags override its values.
    #[arg(long)]
    fast: bool,
}

#[derive(Args)]
struct RipArgs {
    #[arg(long)]
    degree: usize,
    #[arg(long)]
    samples: usize,
    #[arg(long)]
    sparsity: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Randomized lower bound with this many sampled supports instead of
    /// exact enumeration.
    #[arg(long, value_name = "TRIALS")]
    randomized: Option<usize>,
}

#[derive(Args)]
struct VerifyBoundsArgs {
    /// Also write the report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct NoiseSweepArgs {
    #[arg(long, default_value_t = 16)]
    degree: usize,
    #[arg(long)]
    sparsity: usize,
    #[arg(long)]
    samples: usize,
    /// Comma-separated noise radii, e.g. 0,0.001,0.01.
    #[arg(long, value_name = "LIST")]
    eps_list: String,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

/// Prints a line to stdout, ignoring broken pipes (e.g. piping into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn usage_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_USAGE)
}

fn io_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_IO)
}

/// Parses an inclusive `start:end:step` grid.
fn parse_grid(text: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid `{text}` is not of the form start:end:step"));
    }
    let parse = |p: &str| {
        p.parse::<usize>()
            .map_err(|_| format!("grid component `{p}` is not a nonnegative integer"))
    };
    let (start, end, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if step == 0 {
        return Err("grid step must be positive".into());
    }
    if start > end {
        return Err(format!("grid start {start} exceeds end {end}"));
    }
    Ok((start..=end).step_by(step).collect())
}

fn run_recover(args: &RecoverArgs) -> ExitCode {
    let spec = TrialSpec::new(
        args.degree,
        args.sparsity,
        args.samples,
        args.measure,
        args.noise,
        args.seed,
    );
    let (record, recovered) = match run_trial_with_recovery(&spec) {
        Ok(outcome) => outcome,
        Err(err) => return usage_error(err),
    };
    out!("relative_error: {}", record.relative_error);
    out!("success: {}", record.success);
    out!("solver_iterations: {}", record.solver_iterations);
    out!("wall_time_ms: {}", record.wall_time.as_secs_f64() * 1e3);
    if let Some(path) = &args.out {
        if let Err(err) = std::fs::write(path, recovered.to_csv()) {
            return io_error(format!("writing {}: {err}", path.display()));
        }
        out!("wrote {}", path.display());
    }
    ExitCode::SUCCESS
}

fn run_phase_diagram(args: &PhaseDiagramArgs) -> ExitCode {
    let (preset_s, preset_m, preset_trials) = if args.fast {
        let (s, m, t) = fast_preset();
        (Some(s), Some(m), Some(t))
    } else {
        (None, None, None)
    };
    let parse_or = |text: &Option<String>, preset: Option<Vec<usize>>, default: &str| {
        match text {
            Some(t) => parse_grid(t),
            None => match preset {
                Some(grid) => Ok(grid),
                None => parse_grid(default),
            },
        }
    };
    let s_grid = match parse_or(&args.s_grid, preset_s, "1:40:1") {
        Ok(grid) => grid,
        Err(err) => return usage_error(err),
    };
    let m_grid = match parse_or(&args.m_grid, preset_m, "10:250:10") {
        Ok(grid) => grid,
        Err(err) => return usage_error(err),
    };
    let trials = args.trials.or(preset_trials).unwrap_or(20);
    let result = match phase_diagram(
        &s_grid,
        &m_grid,
        args.degree,
        args.measure,
        trials,
        args.seed,
    ) {
        Ok(result) => result,
        Err(err) => return usage_error(err),
    };
    let csv_path = args.out.with_extension("csv");
    let pgm_path = args.out.with_extension("pgm");
    if let Err(err) = export(&result, &csv_path, ExportFormat::Csv) {
        return io_error(format!("writing {}: {err}", csv_path.display()));
    }
    if let Err(err) = export(&result, &pgm_path, ExportFormat::Pgm) {
        return io_error(format!("writing {}: {err}", pgm_path.display()));
    }
    out!("mean_frequency: {}", result.mean_frequency());
    out!("wrote {} and {}", csv_path.display(), pgm_path.display());
    ExitCode::SUCCESS
}

fn run_rip(args: &RipArgs) -> ExitCode {
    let samples = match sample_points(args.samples, MeasureTag::Product, args.seed) {
        Ok(samples) => samples,
        Err(err) => return usage_error(err),
    };
    let ensemble = build_ensemble(args.degree, &samples);
    let matrix = ensemble.bos_matrix();
    let n = args.degree * args.degree;
    if args.sparsity == 0 || args.sparsity > n {
        return usage_error(format!(
            "sparsity must lie in [1, {n}] for degree bound {}",
            args.degree
        ));
    }
    let report = match args.randomized {
        Some(trials) => {
            if trials == 0 {
                return usage_error("randomized trial count must be positive");
            }
            let delta =
                randomized_rip_lower_bound(&matrix, args.sparsity, trials, derive_seed(args.seed, 1));
            format_report(args.sparsity, delta, trials, "randomized")
        }
        None => match restricted_isometry_constant(&matrix, args.sparsity) {
            Ok(estimate) => format_report(
                estimate.s,
                estimate.delta,
                estimate.supports_checked,
                "exact",
            ),
            Err(err @ RipError::BudgetExceeded { .. }) => {
                return usage_error(format!("{err}; pass --randomized TRIALS instead"));
            }
            Err(err) => return usage_error(err),
        },
    };
    out!("{report}");
    ExitCode::SUCCESS
}

fn run_verify_bounds(args: &VerifyBoundsArgs) -> ExitCode {
    let report = verify_bounds();
    let text = report.to_text();
    { use std::io::Write; let _ = write!(std::io::stdout(), "{text}"); }
    if let Some(path) = &args.report {
        if let Err(err) = std::fs::write(path, &text) {
            return io_error(format!("writing {}: {err}", path.display()));
        }
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

fn run_noise_sweep(args: &NoiseSweepArgs) -> ExitCode {
    let mut epsilons = Vec::new();
    for part in args.eps_list.split(',') {
        match part.trim().parse::<f64>() {
            Ok(eps) if eps >= 0.0 && eps.is_finite() => epsilons.push(eps),
            _ => {
                return usage_error(format!(
                    "noise radius `{part}` is not a finite nonnegative number"
                ));
            }
        }
    }
    let table = match noise_sweep(
        args.degree,
        args.sparsity,
        args.samples,
        &epsilons,
        args.trials,
        args.seed,
    ) {
        Ok(table) => table,
        Err(err) => return usage_error(err),
    };
    out!("epsilon,median_error");
    for (eps, median) in table {
        out!("{eps},{median}");
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Recover(args) => run_recover(args),
        Command::PhaseDiagram(args) => run_phase_diagram(args),
        Command::Rip(args) => run_rip(args),
        Command::VerifyBounds(args) => run_verify_bounds(args),
        Command::NoiseSweep(args) => run_noise_sweep(args),
    }
}
