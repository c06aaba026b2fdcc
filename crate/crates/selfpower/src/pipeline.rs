//! Files and orchestration: parallel sweeps persisted as JSONL profile
//! records, analysis passes emitting CSV reports, exact-theorem
//! verification of stored profiles, and a brute-force self-check.
//!
//! The profile file is UTF-8, one JSON record per line, with '#'-prefixed
//! header/comment lines and blank lines ignored. Field names are fixed:
//! `p`, `factors` (list of [prime, exponent]), `counts` (list of
//! [order, count], ascending), `ord2`, `pmod8`. The total is derived on
//! read. CSV reports carry a header row, floats with 6 significant digits,
//! p-values with 4 decimals.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{multiplicative_order, primes_in_range, Factorization};
use crate::census::{
    fixed_point_profile, fixed_points_bruteforce, g_count_bruteforce, g_count_formula,
    verify_exact_theorems, CensusError, FixedPointProfile, TheoremViolation,
};
use crate::stats::{
    self, cells_from_profile, normality_suite, sliding_window_gof, special_order_gof,
    z_statistic, Cell, GofResult, NormalityOptions, NormalitySummary, SpecialOrder, StatsError,
    WindowResult, ZRecord,
};

/// The file header written at the top of every sweep output.
const PROFILE_HEADER: &str = "# selfpower profiles v1";

/// Theorem identifiers in report order, for the per-theorem violation
/// table (all counts are expected to be zero).
pub const THEOREM_IDS: [&str; 9] =
    ["F1", "F2", "F(p-1)", "F(p-1)/2", "F3", "F4", "F6", "F(p-1)/3", "F(p-1)/4"];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid sweep range [{lo}, {hi}]: need 2 <= lo <= hi")]
    InvalidRange { lo: u64, hi: u64 },
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: malformed profile record: {reason}", path.display())]
    MalformedRecord { path: PathBuf, line: usize, reason: String },
    #[error("oracle check allows max_p <= {limit}, got {max_p}")]
    OracleBudget { max_p: u64, limit: u64 },
    #[error("oracle mismatch at p = {p}: {detail}")]
    OracleMismatch { p: u64, detail: String },
    #[error("failed to start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Census(#[from] CensusError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl PipelineError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit code for this error: 1 for verification/oracle
    /// failures (the data contradicts a theorem or an oracle), 2 for
    /// usage, I/O, and input-format problems.
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::OracleMismatch { .. } => 1,
            PipelineError::Stats(StatsError::OutcomeOutsideSupport { .. }) => 1,
            _ => 2,
        }
    }
}

/// On-disk encoding of a sweep. Only one exists today; the tag keeps the
/// file contract explicit in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProfileFormat {
    #[default]
    Jsonl,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub lo: u64,
    pub hi: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub format: ProfileFormat,
}

#[derive(Debug)]
pub struct SweepSummary {
    pub primes: usize,
    pub out: PathBuf,
    pub elapsed: Duration,
}

/// Serialized form of a [`FixedPointProfile`], one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub p: u64,
    /// Factorization of p - 1 as [prime, exponent] pairs, primes ascending.
    pub factors: Vec<(u64, u32)>,
    /// [order, count] pairs covering every divisor of p - 1, ascending.
    pub counts: Vec<(u64, u64)>,
    pub ord2: u64,
    pub pmod8: u8,
}

impl From<&FixedPointProfile> for ProfileRecord {
    fn from(profile: &FixedPointProfile) -> Self {
        ProfileRecord {
            p: profile.p(),
            factors: profile.pm1().factors().to_vec(),
            counts: profile.counts().iter().map(|(&d, &fd)| (d, fd)).collect(),
            ord2: profile.ord2(),
            pmod8: profile.p_mod_8(),
        }
    }
}

impl ProfileRecord {
    /// Validate and rebuild the in-memory profile. Structural problems
    /// (bad factorization, missing divisors, counts above phi, wrong ord2
    /// or residue tag) are errors; theorem violations are not, they are
    /// what `verify` is for.
    pub fn into_profile(self) -> Result<FixedPointProfile, CensusError> {
        let pm1 = Factorization::from_parts(self.p.saturating_sub(1), self.factors)?;
        let counts: BTreeMap<u64, u64> = self.counts.into_iter().collect();
        FixedPointProfile::from_parts(self.p, pm1, counts, self.ord2, self.pmod8)
    }
}

/// Census every prime in `[lo, hi]` and persist the profiles, ascending by
/// p regardless of worker count. Rerunning over the same range overwrites
/// with identical bytes.
pub fn sweep(config: &SweepConfig) -> Result<SweepSummary, PipelineError> {
    let SweepConfig { lo, hi, workers, ref out, format: ProfileFormat::Jsonl } = *config;
    if lo < 2 || lo > hi {
        return Err(PipelineError::InvalidRange { lo, hi });
    }
    if workers == 0 {
        return Err(PipelineError::NoWorkers);
    }
    let started = Instant::now();
    let primes = primes_in_range(lo, hi);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let profiles: Result<Vec<FixedPointProfile>, CensusError> =
        pool.install(|| primes.par_iter().map(|&p| fixed_point_profile(p)).collect());
    let profiles = profiles?;

    let file = File::create(out).map_err(|e| PipelineError::io(out, e))?;
    let mut writer = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(writer, "{PROFILE_HEADER}")?;
        for profile in &profiles {
            let record = ProfileRecord::from(profile);
            serde_json::to_writer(&mut writer, &record)?;
            writeln!(writer)?;
        }
        writer.flush()
    })()
    .map_err(|e| PipelineError::io(out, e))?;

    Ok(SweepSummary { primes: profiles.len(), out: out.clone(), elapsed: started.elapsed() })
}

/// Read a profile file back into memory. Lines are numbered from 1 in
/// errors; '#'-prefixed and blank lines are skipped.
pub fn read_profiles(path: &Path) -> Result<Vec<FixedPointProfile>, PipelineError> {
    let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut profiles = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| PipelineError::MalformedRecord {
            path: path.to_path_buf(),
            line: idx + 1,
            reason,
        };
        let record: ProfileRecord =
            serde_json::from_str(trimmed).map_err(|e| malformed(e.to_string()))?;
        profiles.push(record.into_profile().map_err(|e| malformed(e.to_string()))?);
    }
    Ok(profiles)
}

/// Outcome of `verify` over a profile file.
#[derive(Debug)]
pub struct VerifySummary {
    pub profiles: usize,
    /// Total theorem checks that fired.
    pub checks: usize,
    /// (p, violation) pairs, in file order.
    pub violations: Vec<(u64, TheoremViolation)>,
    /// Violation count per theorem id, zero-filled for all known ids.
    pub per_theorem: BTreeMap<&'static str, usize>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Run every exact-theorem check over the profiles.
pub fn verify_profiles(profiles: &[FixedPointProfile]) -> VerifySummary {
    let mut per_theorem: BTreeMap<&'static str, usize> =
        THEOREM_IDS.iter().map(|&id| (id, 0)).collect();
    let mut violations = Vec::new();
    let mut checks = 0usize;
    for profile in profiles {
        let report = verify_exact_theorems(profile);
        checks += report.checks;
        for violation in report.violations {
            *per_theorem.get_mut(violation.theorem).expect("known theorem id") += 1;
            violations.push((report.p, violation));
        }
    }
    VerifySummary { profiles: profiles.len(), checks, violations, per_theorem }
}

#[derive(Debug)]
pub struct OracleCheckSummary {
    /// Primes whose profile was compared to the brute-force census.
    pub primes_checked: usize,
    /// Primes (a prefix, bounded by the lifted-range budget) whose
    /// closed-form G matched exhaustive counting.
    pub g_identities_checked: usize,
}

/// Compare the order-partitioned census against brute force for every
/// prime `p <= max_p`, and the closed-form lifted count `G(p)` against
/// exhaustive evaluation for every such prime within the brute-force
/// budget. Any mismatch is an error naming the smallest offending prime.
pub fn oracle_check(max_p: u64) -> Result<OracleCheckSummary, PipelineError> {
    const LIMIT: u64 = 100_000;
    if max_p > LIMIT {
        return Err(PipelineError::OracleBudget { max_p, limit: LIMIT });
    }
    let primes = primes_in_range(2, max_p);

    let census_failures: Vec<(u64, String)> = primes
        .par_iter()
        .filter_map(|&p| census_mismatch(p).map(|detail| (p, detail)))
        .collect();
    if let Some((p, detail)) = census_failures.into_iter().min_by_key(|&(p, _)| p) {
        return Err(PipelineError::OracleMismatch { p, detail });
    }

    let g_failures: Vec<(u64, String)> = primes
        .par_iter()
        .filter(|&&p| (p - 1).checked_mul(p).is_some_and(|range| range <= 10_000_000))
        .filter_map(|&p| {
            let formula = g_count_formula(p).expect("p is prime");
            let brute = g_count_bruteforce(p).expect("within budget");
            (formula != brute)
                .then(|| (p, format!("G formula {formula} != brute force {brute}")))
        })
        .collect();
    let g_checked = primes
        .iter()
        .filter(|&&p| (p - 1).checked_mul(p).is_some_and(|range| range <= 10_000_000))
        .count();
    if let Some((p, detail)) = g_failures.into_iter().min_by_key(|&(p, _)| p) {
        return Err(PipelineError::OracleMismatch { p, detail });
    }

    Ok(OracleCheckSummary { primes_checked: primes.len(), g_identities_checked: g_checked })
}

/// One prime's profile versus the brute-force census; `None` means match.
fn census_mismatch(p: u64) -> Option<String> {
    let profile = fixed_point_profile(p).expect("p is prime");
    let brute = fixed_points_bruteforce(p).expect("p is prime");
    if profile.total() != brute.len() as u64 {
        return Some(format!(
            "census total {} != brute-force count {}",
            profile.total(),
            brute.len()
        ));
    }
    let pm1 = Factorization::of(p - 1);
    let mut by_order: BTreeMap<u64, u64> = BTreeMap::new();
    for &x in &brute {
        let ord = multiplicative_order(x, p, &pm1).expect("x in [1, p-1]");
        *by_order.entry(ord).or_default() += 1;
    }
    for (&d, &fd) in profile.counts() {
        let want = by_order.get(&d).copied().unwrap_or(0);
        if fd != want {
            return Some(format!("census F_{d} = {fd} != brute-force {want}"));
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Analysis passes: each builds a report struct and writes CSV files.

/// How to order cells before windowing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SortKey {
    /// By order d, then p: the headline sort.
    #[default]
    Order,
    /// By p, then d.
    Prime,
    /// By the per-element success-pool ratio phi(d)/d, then d, then p.
    PhiOverD,
}

impl SortKey {
    pub fn name(self) -> &'static str {
        match self {
            SortKey::Order => "order",
            SortKey::Prime => "prime",
            SortKey::PhiOverD => "phi-over-d",
        }
    }

    pub fn sort(self, cells: &mut [Cell]) {
        match self {
            SortKey::Order => cells.sort_by_key(|c| (c.d, c.p)),
            SortKey::Prime => cells.sort_by_key(|c| (c.p, c.d)),
            // phi/d compared exactly by cross-multiplication.
            SortKey::PhiOverD => cells.sort_by(|a, b| {
                (a.phi_d as u128 * b.d as u128)
                    .cmp(&(b.phi_d as u128 * a.d as u128))
                    .then(a.d.cmp(&b.d))
                    .then(a.p.cmp(&b.p))
            }),
        }
    }
}

/// Prime range covered by a profile set, echoed in summaries.
pub fn prime_span(profiles: &[FixedPointProfile]) -> Option<(u64, u64)> {
    let lo = profiles.iter().map(|pr| pr.p()).min()?;
    let hi = profiles.iter().map(|pr| pr.p()).max()?;
    Some((lo, hi))
}

#[derive(Debug)]
pub struct NormalityReport {
    pub summary: NormalitySummary,
    pub span: (u64, u64),
    pub files: Vec<PathBuf>,
}

/// z-scores for every profile with p > 3 (below that the model variance
/// degenerates), in file order.
pub fn z_records(profiles: &[FixedPointProfile]) -> Result<Vec<ZRecord>, StatsError> {
    profiles.iter().filter(|pr| pr.p() > 3).map(z_statistic).collect()
}

/// Normality analysis: z table, histogram, probability plot, Ryan-Joiner
/// verdict. Writes zscores.csv, histogram.csv, probability_plot.csv.
pub fn analyze_normality(
    profiles: &[FixedPointProfile],
    out_dir: &Path,
    bin_width: f64,
) -> Result<NormalityReport, PipelineError> {
    let zs = z_records(profiles)?;
    let options = NormalityOptions { bin_width, ..NormalityOptions::default() };
    let summary = normality_suite(&zs, &options)?;
    let span = prime_span(profiles).expect("nonempty: normality_suite checked");

    fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let mut files = Vec::new();

    let path = out_dir.join("zscores.csv");
    write_csv(&path, "p,f_total,predicted_mean,predicted_variance,z", zs.iter(), |r| {
        format!(
            "{},{},{},{},{}",
            r.p,
            r.f_total,
            fmt_g6(r.mean),
            fmt_g6(r.variance),
            fmt_g6(r.z)
        )
    })?;
    files.push(path);

    let path = out_dir.join("histogram.csv");
    write_csv(&path, "bin_lo,bin_hi,count", summary.histogram.iter(), |b| {
        format!("{},{},{}", fmt_g6(b.lo), fmt_g6(b.hi), b.count)
    })?;
    files.push(path);

    let path = out_dir.join("probability_plot.csv");
    write_csv(&path, "z,normal_score", summary.prob_plot.iter(), |&(z, score)| {
        format!("{},{}", fmt_g6(z), fmt_g6(score))
    })?;
    files.push(path);

    Ok(NormalityReport { summary, span, files })
}

#[derive(Debug)]
pub struct GofReport {
    pub result: GofResult,
    pub cells: usize,
    pub excluded_orders: Vec<u64>,
    pub span: (u64, u64),
    pub files: Vec<PathBuf>,
}

/// Aggregate binomial goodness of fit; `exclude_special` additionally drops
/// the theorem-governed small orders 3, 4, 6. Writes gof.csv.
pub fn analyze_gof(
    profiles: &[FixedPointProfile],
    out_dir: &Path,
    exclude_special: bool,
) -> Result<GofReport, PipelineError> {
    let cells: Vec<Cell> = profiles.iter().flat_map(cells_from_profile).collect();
    let excluded_orders: Vec<u64> = if exclude_special { vec![3, 4, 6] } else { Vec::new() };
    let result = stats::gof_aggregate(&cells, &excluded_orders)?;
    let span = prime_span(profiles).expect("nonempty: aggregate checked");
    let used: u64 = result.observed.iter().sum();

    fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let path = out_dir.join("gof.csv");
    let rows: Vec<(String, u64, f64)> = result
        .categories
        .iter()
        .zip(result.observed.iter().zip(&result.expected))
        .map(|(cat, (&obs, &exp))| (cat.to_string(), obs, exp))
        .collect();
    write_csv(&path, "category,observed,expected", rows.iter(), |(cat, obs, exp)| {
        format!("{cat},{obs},{}", fmt_g6(*exp))
    })?;

    Ok(GofReport {
        result,
        cells: used as usize,
        excluded_orders,
        span,
        files: vec![path],
    })
}

#[derive(Debug)]
pub struct WindowReport {
    pub windows: Vec<WindowResult>,
    pub sort_key: SortKey,
    pub window: usize,
    pub step: usize,
    pub cells: usize,
    pub span: (u64, u64),
    pub files: Vec<PathBuf>,
}

/// Sliding-window divergence scan. Writes windows.csv with a log-scale
/// order column for plotting.
pub fn analyze_window(
    profiles: &[FixedPointProfile],
    out_dir: &Path,
    sort_key: SortKey,
    window: usize,
    step: usize,
) -> Result<WindowReport, PipelineError> {
    let mut cells: Vec<Cell> = profiles.iter().flat_map(cells_from_profile).collect();
    sort_key.sort(&mut cells);
    let windows = sliding_window_gof(&cells, window, step)?;
    let span = prime_span(profiles).expect("nonempty: windowing checked");

    fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let path = out_dir.join("windows.csv");
    write_csv(
        &path,
        "window_index,max_order,log10_max_order,stat,pvalue",
        windows.iter(),
        |w| {
            format!(
                "{},{},{},{},{}",
                w.window_index,
                w.max_order,
                fmt_g6((w.max_order as f64).log10()),
                fmt_g6(w.stat),
                fmt_pvalue(w.pvalue)
            )
        },
    )?;

    Ok(WindowReport {
        windows,
        sort_key,
        window,
        step,
        cells: cells.len(),
        span,
        files: vec![path],
    })
}

/// One row of the special-order tables: observed outcome counts against
/// the model's expecteds, over the qualifying primes.
#[derive(Debug)]
pub struct SpecialOrderRow {
    pub model: &'static str,
    pub primes: u64,
    /// Counts for outcomes 0, 1, 2 (outcomes impossible under the model
    /// are reported as zero).
    pub observed: [u64; 3],
    pub expected: [f64; 3],
    pub pvalue: f64,
    pub low_sample: bool,
}

fn special_order_row(
    profiles: &[FixedPointProfile],
    which: SpecialOrder,
) -> Result<SpecialOrderRow, PipelineError> {
    let gof = special_order_gof(profiles, which)?;
    let mut observed = [0u64; 3];
    let mut expected = [0f64; 3];
    for (idx, cat) in gof.categories.iter().enumerate() {
        let slot = match cat {
            stats::Category::Exact(k) => *k as usize,
            stats::Category::Above(_) => unreachable!("special-order categories are exact"),
        };
        observed[slot] = gof.observed[idx];
        expected[slot] = gof.expected[idx];
    }
    Ok(SpecialOrderRow {
        model: which.name(),
        primes: gof.observed.iter().sum(),
        observed,
        expected,
        pvalue: gof.pvalue,
        low_sample: gof.low_sample,
    })
}

#[derive(Debug)]
pub struct SpecialOrdersReport {
    pub rows: Vec<SpecialOrderRow>,
    pub span: (u64, u64),
    pub files: Vec<PathBuf>,
}

fn write_special_orders(
    rows: Vec<SpecialOrderRow>,
    profiles: &[FixedPointProfile],
    out_dir: &Path,
    file_name: &str,
    label_header: &str,
) -> Result<SpecialOrdersReport, PipelineError> {
    let span = prime_span(profiles).expect("nonempty: gof checked");
    fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let path = out_dir.join(file_name);
    let header = format!(
        "{label_header},primes,observed_0,observed_1,observed_2,expected_0,expected_1,expected_2,pvalue,low_sample"
    );
    write_csv(&path, &header, rows.iter(), |r| {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            r.model,
            r.primes,
            r.observed[0],
            r.observed[1],
            r.observed[2],
            fmt_g6(r.expected[0]),
            fmt_g6(r.expected[1]),
            fmt_g6(r.expected[2]),
            fmt_pvalue(r.pvalue),
            r.low_sample
        )
    })?;
    Ok(SpecialOrdersReport { rows, span, files: vec![path] })
}

/// Small-order tables (d = 3, 4, 6) against their exact-theorem-constrained
/// predictions. Writes small_orders.csv.
pub fn analyze_small_orders(
    profiles: &[FixedPointProfile],
    out_dir: &Path,
) -> Result<SpecialOrdersReport, PipelineError> {
    let rows = [SpecialOrder::Small3, SpecialOrder::Small4, SpecialOrder::Small6]
        .into_iter()
        .map(|which| special_order_row(profiles, which))
        .collect::<Result<Vec<_>, _>>()?;
    write_special_orders(rows, profiles, out_dir, "small_orders.csv", "d")
}

/// Large-order tables: F_((p-1)/3) and F_((p-1)/4) split by p mod 8.
/// Writes large_orders.csv.
pub fn analyze_large_orders(
    profiles: &[FixedPointProfile],
    out_dir: &Path,
) -> Result<SpecialOrdersReport, PipelineError> {
    let rows = [SpecialOrder::Third, SpecialOrder::QuarterOneMod8, SpecialOrder::QuarterFiveMod8]
        .into_iter()
        .map(|which| special_order_row(profiles, which))
        .collect::<Result<Vec<_>, _>>()?;
    write_special_orders(rows, profiles, out_dir, "large_orders.csv", "model")
}

// ---------------------------------------------------------------------------
// CSV plumbing.

fn write_csv<T>(
    path: &Path,
    header: &str,
    rows: impl Iterator<Item = T>,
    mut line: impl FnMut(T) -> String,
) -> Result<(), PipelineError> {
    let file = File::create(path).map_err(|e| PipelineError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(writer, "{header}")?;
        for row in rows {
            writeln!(writer, "{}", line(row))?;
        }
        writer.flush()
    })()
    .map_err(|e| PipelineError::io(path, e))
}

/// 6 significant digits: plain decimal in a readable exponent range,
/// scientific outside it, trailing zeros trimmed.
pub fn fmt_g6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..6).contains(&exp) {
        let s = format!("{:.5e}", v);
        return s;
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        s
    }
}

/// p-values: fixed 4 decimals.
pub fn fmt_pvalue(p: f64) -> String {
    format!("{p:.4}")
}
