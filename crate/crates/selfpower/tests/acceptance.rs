//! Acceptance suite: one test per release criterion, each printing an
//! `ACCEPTANCE <n> PASS/FAIL` line (visible under `--nocapture`). The two
//! preset sweeps run once, through the real binary, and are shared.
//!
//! Tolerances are pinned here, next to the asserts, not in config.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::thread;
use std::time::{Duration, Instant};

use once_cell::sync::Lazy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use selfpower::arith::{multiplicative_order, primes_in_range, Factorization};
use selfpower::census::{
    fixed_point_profile, fixed_points_bruteforce, g_count_bruteforce, g_count_formula,
    FixedPointProfile,
};
use selfpower::pipeline::{read_profiles, verify_profiles, SortKey};
use selfpower::stats::{
    binomial_category_probs, cells_from_profile, chi_squared_sf, gof_aggregate, normality_suite,
    predicted_mean_numerator, sliding_window_gof, special_order_gof, Cell, NormalityOptions,
    SpecialOrder,
};

struct Sweeps {
    six: Vec<FixedPointProfile>,
    seven: Vec<FixedPointProfile>,
    six_elapsed: Duration,
    seven_elapsed: Duration,
}

fn timed_preset_sweep(dir: &Path, preset: &str, name: &str) -> (Vec<FixedPointProfile>, Duration) {
    let out = dir.join(name);
    let started = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_selfpower"))
        .args(["sweep", "--preset", preset, "--out"])
        .arg(&out)
        .output()
        .expect("sweep binary runs");
    let elapsed = started.elapsed();
    assert!(
        output.status.success(),
        "sweep --preset {preset} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    (read_profiles(&out).expect("sweep output parses"), elapsed)
}

static SWEEPS: Lazy<Sweeps> = Lazy::new(|| {
    let dir = tempfile::tempdir().expect("tempdir");
    let (six, six_elapsed) = timed_preset_sweep(dir.path(), "six-digit", "six.jsonl");
    let (seven, seven_elapsed) = timed_preset_sweep(dir.path(), "seven-digit", "seven.jsonl");
    Sweeps { six, seven, six_elapsed, seven_elapsed }
});

fn report(criterion: usize, passed: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion:>2} {} {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion}: {detail}");
}

/// The 60 s sweep budget assumes 4 cores; scale it for smaller machines.
fn sweep_allowance() -> Duration {
    let cores = thread::available_parallelism().map_or(1, |n| n.get()).min(4);
    Duration::from_secs_f64(60.0 * 4.0 / cores as f64)
}

fn six_cells_sorted_by_order() -> Vec<Cell> {
    let mut cells: Vec<Cell> = SWEEPS.six.iter().flat_map(cells_from_profile).collect();
    SortKey::Order.sort(&mut cells);
    cells
}

#[test]
fn criterion_01_preset_sweeps_reproduce_census() {
    let sweeps = &*SWEEPS;
    let allowance = sweep_allowance();
    let ok = sweeps.six.len() == 238
        && sweeps.seven.len() == 599
        && sweeps.six_elapsed <= allowance
        && sweeps.seven_elapsed <= allowance;
    report(
        1,
        ok,
        &format!(
            "preset sweeps: {} six-digit profiles in {:.1}s, {} seven-digit in {:.1}s \
             (want 238 and 599, each within {:.0}s)",
            sweeps.six.len(),
            sweeps.six_elapsed.as_secs_f64(),
            sweeps.seven.len(),
            sweeps.seven_elapsed.as_secs_f64(),
            allowance.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_census_matches_bruteforce_below_ten_thousand() {
    use rayon::prelude::*;
    let primes = primes_in_range(2, 9_999);
    let started = Instant::now();
    let mismatches: Vec<u64> = primes
        .par_iter()
        .filter(|&&p| {
            let profile = fixed_point_profile(p).expect("prime");
            let brute = fixed_points_bruteforce(p).expect("prime");
            if profile.total() != brute.len() as u64 {
                return true;
            }
            let pm1 = Factorization::of(p - 1);
            let mut by_order: BTreeMap<u64, u64> = BTreeMap::new();
            for &x in &brute {
                let ord = multiplicative_order(x, p, &pm1).expect("unit");
                *by_order.entry(ord).or_default() += 1;
            }
            profile
                .counts()
                .iter()
                .any(|(&d, &fd)| by_order.get(&d).copied().unwrap_or(0) != fd)
        })
        .copied()
        .collect();
    let elapsed = started.elapsed();
    let ok = mismatches.is_empty() && elapsed <= Duration::from_secs(60);
    report(
        2,
        ok,
        &format!(
            "census vs brute force over {} primes < 10^4: {} mismatches in {:.1}s (budget 60s)",
            primes.len(),
            mismatches.len(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_03_lifted_count_identity_to_61() {
    let started = Instant::now();
    let primes = primes_in_range(2, 61);
    let bad: Vec<u64> = primes
        .iter()
        .filter(|&&p| g_count_formula(p).unwrap() != g_count_bruteforce(p).unwrap())
        .copied()
        .collect();
    let elapsed = started.elapsed();
    let ok = bad.is_empty() && primes.len() == 18 && elapsed <= Duration::from_secs(10);
    report(
        3,
        ok,
        &format!(
            "closed-form lifted count == exhaustive count for all {} primes <= 61 \
             ({} failures, {:.2}s)",
            primes.len(),
            bad.len(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_04_exact_theorems_hold_on_both_sweeps() {
    let six = verify_profiles(&SWEEPS.six);
    let seven = verify_profiles(&SWEEPS.seven);
    let ok = six.passed() && seven.passed();
    report(
        4,
        ok,
        &format!(
            "theorem verification: {} violations over {} six-digit profiles ({} checks), \
             {} over {} seven-digit ({} checks)",
            six.violations.len(),
            six.profiles,
            six.checks,
            seven.violations.len(),
            seven.profiles,
            seven.checks
        ),
    );
}

#[test]
fn criterion_05_chi_squared_tail_regression() {
    let got = chi_squared_sf(4.66, 3);
    let ok = (got - 0.198).abs() <= 0.0005;
    report(
        5,
        ok,
        &format!("chi_squared_sf(4.66, 3) = {got:.6}, want 0.198 within 0.0005"),
    );
}

#[test]
fn criterion_06_headline_gof_band() {
    let six: Vec<Cell> = SWEEPS.six.iter().flat_map(cells_from_profile).collect();
    let seven: Vec<Cell> = SWEEPS.seven.iter().flat_map(cells_from_profile).collect();
    let combined: Vec<Cell> = six.iter().chain(&seven).copied().collect();
    let mut details = Vec::new();
    let mut any_in_band = false;
    for (name, cells) in [("six-digit", &six), ("seven-digit", &seven), ("combined", &combined)] {
        let gof = gof_aggregate(cells, &[]).expect("nonempty cells");
        let in_band = (gof.stat - 4.66).abs() <= 0.75 && (0.10..=0.30).contains(&gof.pvalue);
        any_in_band |= in_band;
        details.push(format!(
            "{name}: stat {:.4} p {:.4}{}",
            gof.stat,
            gof.pvalue,
            if in_band { " [in band]" } else { "" }
        ));
    }
    report(
        6,
        any_in_band,
        &format!(
            "headline gof, band stat 4.66 +- 0.75 and p in [0.10, 0.30] for >= 1 variant; {}",
            details.join("; ")
        ),
    );
}

#[test]
fn criterion_07_per_order_fits_d5_d7() {
    let cells = six_cells_sorted_by_order();
    let mut details = Vec::new();
    let mut ok = true;
    for (d, want) in [(5u64, 0.222f64), (7, 0.541)] {
        let restricted: Vec<Cell> = cells.iter().filter(|c| c.d == d).copied().collect();
        let gof = gof_aggregate(&restricted, &[]).expect("d cells exist");
        let hit = (gof.pvalue - want).abs() <= 0.05;
        ok &= hit;
        details.push(format!(
            "d={d}: {} cells, p {:.4} (want {want} +- 0.05), tail pooling {}",
            restricted.len(),
            gof.pvalue,
            if gof.merged_tail { "applied" } else { "not triggered" }
        ));
    }
    report(
        7,
        ok,
        &format!(
            "six-digit per-order fits under categories {{0,1,2,>2}} with expected<1 tail \
             pooling; {}",
            details.join("; ")
        ),
    );
}

#[test]
fn criterion_08_small_order_models_fit() {
    let mut details = Vec::new();
    let mut ok = true;
    for which in [SpecialOrder::Small3, SpecialOrder::Small4, SpecialOrder::Small6] {
        let gof = special_order_gof(&SWEEPS.six, which).expect("qualifying primes exist");
        ok &= gof.pvalue > 0.05;
        details.push(format!("{}: p {:.4}", which.name(), gof.pvalue));
    }
    // The exact theorems cap these counts; an out-of-support outcome would
    // also have made special_order_gof error out above.
    let mut support_ok = true;
    for profile in &SWEEPS.six {
        let pm1 = profile.p() - 1;
        if pm1 % 3 == 0 {
            support_ok &= matches!(profile.count(3), Some(0 | 1));
        }
        if pm1 % 4 == 0 {
            support_ok &= matches!(profile.count(4), Some(0 | 1));
        }
        if pm1 % 6 == 0 {
            support_ok &= matches!(profile.count(6), Some(0 | 2));
        }
    }
    ok &= support_ok;
    report(
        8,
        ok,
        &format!(
            "six-digit small-order fits, all p > 0.05 and outcomes within {{0,1}}/{{0,1}}/{{0,2}} \
             (support clean: {support_ok}); {}",
            details.join("; ")
        ),
    );
}

#[test]
fn criterion_09_large_order_models_fit() {
    let mut details = Vec::new();
    let mut ok = true;
    for which in
        [SpecialOrder::Third, SpecialOrder::QuarterOneMod8, SpecialOrder::QuarterFiveMod8]
    {
        let gof = special_order_gof(&SWEEPS.six, which).expect("qualifying primes exist");
        ok &= gof.pvalue > 0.05;
        details.push(format!("{}: p {:.4}", which.name(), gof.pvalue));
    }
    report(
        9,
        ok,
        &format!("six-digit large-order fits, all p > 0.05; {}", details.join("; ")),
    );
}

#[test]
fn criterion_10_z_moments_and_rj_rejection() {
    let mut details = Vec::new();
    let mut ok = true;
    for (name, profiles) in [("six-digit", &SWEEPS.six), ("seven-digit", &SWEEPS.seven)] {
        let zs = selfpower::pipeline::z_records(profiles).expect("preset primes are > 3");
        let summary = normality_suite(&zs, &NormalityOptions::default()).expect("large sample");
        // The finding is that the totals sit about half a standard
        // deviation away from the model mean: the band applies to the
        // magnitude of the sample mean (its sign just encodes which side,
        // per the z orientation), while sd stays near 1 and the
        // Ryan-Joiner test still rejects normality.
        let hit = (0.2..0.8).contains(&summary.mean.abs())
            && (0.8..1.2).contains(&summary.sd)
            && summary.rj_reject;
        ok &= hit;
        details.push(format!(
            "{name}: mean {:.4}, sd {:.4}, rj {:.5} vs critical {:.5} -> {}",
            summary.mean,
            summary.sd,
            summary.ryan_joiner_stat,
            summary.rj_critical,
            if summary.rj_reject { "reject" } else { "no rejection" }
        ));
    }
    report(
        10,
        ok,
        &format!(
            "z-score moments |mean| in (0.2, 0.8), sd in (0.8, 1.2), normality rejected; {}",
            details.join("; ")
        ),
    );
}

#[test]
fn criterion_11_window_divergence_and_null_uniformity() {
    let cells = six_cells_sorted_by_order();
    let windows = sliding_window_gof(&cells, 100, 1).expect("enough cells");

    // Real data: both order extremes diverge hard.
    let lo_p = SWEEPS.six.iter().map(|pr| pr.p()).min().expect("nonempty");
    let quarter_scale = (lo_p - 1) / 4;
    let min_small = windows
        .iter()
        .filter(|w| w.max_order <= 10)
        .map(|w| w.pvalue)
        .fold(f64::INFINITY, f64::min);
    let min_large = windows
        .iter()
        .filter(|w| w.max_order >= quarter_scale)
        .map(|w| w.pvalue)
        .fold(f64::INFINITY, f64::min);

    // Null control: redraw every cell count from its own binomial model
    // and tile disjoint windows; small p-values should appear at the
    // nominal rate. 25 redraws x 4390 cells = 1097 disjoint windows.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f_90e4);
    let mut synthetic = Vec::with_capacity(cells.len() * 25);
    for _ in 0..25 {
        for cell in &cells {
            let draw = Binomial::new(cell.phi_d, 1.0 / cell.d as f64)
                .expect("valid binomial")
                .sample(&mut rng);
            synthetic.push(Cell { observed: draw, ..*cell });
        }
    }
    let null_windows = sliding_window_gof(&synthetic, 100, 100).expect("enough cells");
    let frac_small = null_windows.iter().filter(|w| w.pvalue < 0.05).count() as f64
        / null_windows.len() as f64;

    let ok = min_small < 0.01
        && min_large < 0.01
        && null_windows.len() >= 1000
        && (frac_small - 0.05).abs() <= 0.03;
    report(
        11,
        ok,
        &format!(
            "windows of 100 by order: min p {:.2e} for max_order <= 10, {:.2e} for \
             max_order >= {quarter_scale} (both < 0.01); synthetic null: {:.4} of {} \
             disjoint windows below 0.05 (want 0.05 +- 0.03)",
            min_small,
            min_large,
            frac_small,
            null_windows.len()
        ),
    );
}

#[test]
fn criterion_12_model_self_consistency() {
    let mut identity_failures = 0usize;
    let mut worst_prob_gap = 0.0f64;
    let mut cells_checked = 0usize;
    for profiles in [&SWEEPS.six, &SWEEPS.seven] {
        for profile in profiles.iter() {
            // The mean numerator over denominator p-1 is exactly the
            // lifted count: same integer, two derivations.
            if predicted_mean_numerator(profile.pm1()) != g_count_formula(profile.p()).unwrap() {
                identity_failures += 1;
            }
            for cell in cells_from_profile(profile) {
                let prediction = binomial_category_probs(cell.d, cell.phi_d).unwrap();
                let gap = (prediction.probs().iter().sum::<f64>() - 1.0).abs();
                worst_prob_gap = worst_prob_gap.max(gap);
                cells_checked += 1;
            }
        }
    }
    let ok = identity_failures == 0 && worst_prob_gap <= 1e-12 && cells_checked > 0;
    report(
        12,
        ok,
        &format!(
            "mean-numerator == lifted-count identity exact for all {} swept primes \
             ({identity_failures} failures); category probabilities sum to 1 within 1e-12 \
             for {cells_checked} cells (worst gap {worst_prob_gap:.2e})",
            SWEEPS.six.len() + SWEEPS.seven.len()
        ),
    );
}
