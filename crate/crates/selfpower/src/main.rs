use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use selfpower::pipeline::{
    self, analyze_gof, analyze_large_orders, analyze_normality, analyze_small_orders,
    analyze_window, oracle_check, read_profiles, sweep, verify_profiles, PipelineError,
    ProfileFormat, SortKey, SpecialOrdersReport, SweepConfig,
};

#[derive(Parser)]
#[command(
    name = "selfpower",
    version,
    about = "Fixed-point censuses of the self-power map x^x mod p, exact-theorem checks, \
             and random-map model tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Census every prime in a range and write a profile file
    Sweep(SweepArgs),
    /// Run one analysis pass over a profile file, emitting CSV reports
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Check the exact fixed-point theorems over a profile file
    Verify(InputArgs),
    /// Cross-check censuses and the lifted-count identity against brute force
    OracleCheck(OracleCheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Primes in [100003, 102667] (238 primes)
    SixDigit,
    /// Primes in [1000003, 1007977] (599 primes)
    SevenDigit,
}

impl Preset {
    fn range(self) -> (u64, u64) {
        match self {
            Preset::SixDigit => (100_003, 102_667),
            Preset::SevenDigit => (1_000_003, 1_007_977),
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Args)]
struct SweepArgs {
    /// Lower bound of the prime range, inclusive
    #[arg(long, requires = "to", conflicts_with = "preset")]
    from: Option<u64>,
    /// Upper bound of the prime range, inclusive
    #[arg(long, requires = "from", conflicts_with = "preset")]
    to: Option<u64>,
    /// Named range standing in for --from/--to
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Worker threads for the census
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    /// Output profile file (one JSON record per line)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct InputArgs {
    /// Profile file produced by sweep
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Directory for the CSV reports (created if missing)
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// z-score table, histogram, probability plot, and Ryan-Joiner verdict
    Normality(NormalityArgs),
    /// Aggregate binomial goodness of fit over all census cells
    Gof(GofArgs),
    /// Sliding-window goodness of fit over sorted cells
    Window(WindowArgs),
    /// Order 3, 4, 6 counts against their constrained models
    SmallOrders(ReportArgs),
    /// Order (p-1)/3 and (p-1)/4 counts against their models
    LargeOrders(ReportArgs),
}

#[derive(Args)]
struct NormalityArgs {
    #[command(flatten)]
    report: ReportArgs,
    /// Histogram bin width
    #[arg(long = "bins", value_name = "WIDTH", default_value_t = 0.25)]
    bin_width: f64,
}

#[derive(Args)]
struct GofArgs {
    #[command(flatten)]
    report: ReportArgs,
    /// Additionally exclude the theorem-governed orders 3, 4, 6
    #[arg(long)]
    exclude_special: bool,
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum SortKeyArg {
    /// By order d, then p
    #[default]
    Order,
    /// By p, then d
    Prime,
    /// By phi(d)/d, then d, then p
    PhiOverD,
}

impl From<SortKeyArg> for SortKey {
    fn from(arg: SortKeyArg) -> Self {
        match arg {
            SortKeyArg::Order => SortKey::Order,
            SortKeyArg::Prime => SortKey::Prime,
            SortKeyArg::PhiOverD => SortKey::PhiOverD,
        }
    }
}

#[derive(Args)]
struct WindowArgs {
    #[command(flatten)]
    report: ReportArgs,
    /// Cells per window
    #[arg(long, default_value_t = 100)]
    window: usize,
    /// Offset between consecutive window starts
    #[arg(long, default_value_t = 1)]
    step: usize,
    /// Cell ordering before windowing
    #[arg(long, value_enum, default_value_t = SortKeyArg::Order)]
    sort_key: SortKeyArg,
}

#[derive(Args)]
struct OracleCheckArgs {
    /// Largest prime to cross-check (at most 100000)
    #[arg(long, default_value_t = 10_000)]
    max_p: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = err.source();
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(command: Command) -> Result<ExitCode, PipelineError> {
    match command {
        Command::Sweep(args) => run_sweep(args),
        Command::Analyze(cmd) => run_analyze(cmd),
        Command::Verify(args) => run_verify(args),
        Command::OracleCheck(args) => run_oracle_check(args),
    }
}

fn run_sweep(args: SweepArgs) -> Result<ExitCode, PipelineError> {
    let (lo, hi) = match (args.preset, args.from, args.to) {
        (Some(preset), None, None) => preset.range(),
        (None, Some(from), Some(to)) => (from, to),
        // clap's `requires`/`conflicts_with` rules leave only "nothing given".
        _ => {
            eprintln!("error: give either --preset or both --from and --to");
            return Ok(ExitCode::from(2));
        }
    };
    let config = SweepConfig {
        lo,
        hi,
        workers: args.workers,
        out: args.out,
        format: ProfileFormat::Jsonl,
    };
    let summary = sweep(&config)?;
    println!(
        "swept {} primes in [{lo}, {hi}] -> {} ({:.2}s, {} workers)",
        summary.primes,
        summary.out.display(),
        summary.elapsed.as_secs_f64(),
        args.workers
    );
    Ok(ExitCode::SUCCESS)
}

fn span_note(span: (u64, u64)) -> String {
    format!("primes in [{}, {}]", span.0, span.1)
}

fn run_analyze(cmd: AnalyzeCommand) -> Result<ExitCode, PipelineError> {
    match cmd {
        AnalyzeCommand::Normality(args) => {
            let profiles = read_profiles(&args.report.input.input)?;
            let report = analyze_normality(&profiles, &args.report.out_dir, args.bin_width)?;
            let s = &report.summary;
            println!("normality over {} z-scores ({})", s.n, span_note(report.span));
            println!(
                "  sample mean {}  sample sd {}",
                pipeline::fmt_g6(s.mean),
                pipeline::fmt_g6(s.sd)
            );
            println!(
                "  ryan-joiner statistic {}  critical(0.05) {}  -> {}",
                pipeline::fmt_g6(s.ryan_joiner_stat),
                pipeline::fmt_g6(s.rj_critical),
                if s.rj_reject { "REJECT normality" } else { "no rejection" }
            );
            list_files(&report.files);
        }
        AnalyzeCommand::Gof(args) => {
            let profiles = read_profiles(&args.report.input.input)?;
            let report = analyze_gof(&profiles, &args.report.out_dir, args.exclude_special)?;
            let extra = if report.excluded_orders.is_empty() {
                String::new()
            } else {
                format!(
                    " plus orders {}",
                    report
                        .excluded_orders
                        .iter()
                        .map(|d| d.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            };
            println!(
                "binomial gof over {} cells ({}); excluded per prime: 1, 2, p-1, (p-1)/2{extra}",
                report.cells,
                span_note(report.span)
            );
            let r = &report.result;
            println!(
                "  stat {}  dof {}  pvalue {}{}",
                pipeline::fmt_g6(r.stat),
                r.dof,
                pipeline::fmt_pvalue(r.pvalue),
                if r.merged_tail { "  (tail categories merged)" } else { "" }
            );
            list_files(&report.files);
        }
        AnalyzeCommand::Window(args) => {
            let profiles = read_profiles(&args.report.input.input)?;
            let sort_key = SortKey::from(args.sort_key);
            let report = analyze_window(
                &profiles,
                &args.report.out_dir,
                sort_key,
                args.window,
                args.step,
            )?;
            println!(
                "{} windows of {} cells, step {}, sorted by {} over {} cells ({})",
                report.windows.len(),
                report.window,
                report.step,
                report.sort_key.name(),
                report.cells,
                span_note(report.span)
            );
            if let Some(worst) = report
                .windows
                .iter()
                .min_by(|a, b| a.pvalue.total_cmp(&b.pvalue))
            {
                println!(
                    "  smallest pvalue {} at window {} (max order {})",
                    pipeline::fmt_pvalue(worst.pvalue),
                    worst.window_index,
                    worst.max_order
                );
            }
            list_files(&report.files);
        }
        AnalyzeCommand::SmallOrders(args) => {
            let profiles = read_profiles(&args.input.input)?;
            let report = analyze_small_orders(&profiles, &args.out_dir)?;
            print_special_orders("small-order models", &report);
        }
        AnalyzeCommand::LargeOrders(args) => {
            let profiles = read_profiles(&args.input.input)?;
            let report = analyze_large_orders(&profiles, &args.out_dir)?;
            print_special_orders("large-order models", &report);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_special_orders(title: &str, report: &SpecialOrdersReport) {
    println!("{title} ({})", span_note(report.span));
    println!(
        "  {:<14} {:>7} {:>7} {:>7} {:>7} {:>10} {:>10} {:>10} {:>8}",
        "model", "primes", "obs_0", "obs_1", "obs_2", "exp_0", "exp_1", "exp_2", "pvalue"
    );
    for row in &report.rows {
        println!(
            "  {:<14} {:>7} {:>7} {:>7} {:>7} {:>10} {:>10} {:>10} {:>8}{}",
            row.model,
            row.primes,
            row.observed[0],
            row.observed[1],
            row.observed[2],
            pipeline::fmt_g6(row.expected[0]),
            pipeline::fmt_g6(row.expected[1]),
            pipeline::fmt_g6(row.expected[2]),
            pipeline::fmt_pvalue(row.pvalue),
            if row.low_sample { "  (low sample)" } else { "" }
        );
    }
    list_files(&report.files);
}

fn list_files(files: &[PathBuf]) {
    for file in files {
        println!("  wrote {}", file.display());
    }
}

fn run_verify(args: InputArgs) -> Result<ExitCode, PipelineError> {
    let profiles = read_profiles(&args.input)?;
    let summary = verify_profiles(&profiles);
    println!(
        "verified {} profiles: {} theorem checks, {} violations",
        summary.profiles,
        summary.checks,
        summary.violations.len()
    );
    for (theorem, count) in &summary.per_theorem {
        println!("  {theorem:<10} {count} violations");
    }
    if summary.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        for (p, violation) in &summary.violations {
            println!("  VIOLATION p = {p}, theorem {}: {}", violation.theorem, violation.detail);
        }
        Ok(ExitCode::from(1))
    }
}

fn run_oracle_check(args: OracleCheckArgs) -> Result<ExitCode, PipelineError> {
    let summary = oracle_check(args.max_p)?;
    println!(
        "oracle check passed: {} primes checked against brute force; lifted-count identity \
         confirmed for {} primes",
        summary.primes_checked, summary.g_identities_checked
    );
    Ok(ExitCode::SUCCESS)
}
