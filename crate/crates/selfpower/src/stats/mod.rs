//! The random-map model for the self-power census, and the tests comparing
//! it to data.
//!
//! Per order class `d | p-1` the model treats each of the `phi(d)` elements
//! of order `d` as an independent fixed-point trial with success chance
//! `1/d`, making `F_d(p)` binomial. From that follow the predicted mean and
//! variance of `F(p)` (hence z-scores), category probabilities over
//! `{0, 1, 2, >2}` per `(p, d)` cell, and special-case predictions for the
//! small orders 3, 4, 6 and the large orders `(p-1)/3` and `(p-1)/4` where
//! exact theorems constrain the outcomes. Goodness of fit is chi-squared
//! throughout: aggregate, sliding-window, and per-special-order.

mod normality;
mod special;

pub use normality::{normality_suite, HistogramBin, NormalityOptions, NormalitySummary};
pub use special::{chi_squared_sf, inv_norm_cdf, norm_cdf};

use std::fmt;

use thiserror::Error;

use crate::arith::{divisor_table, euler_phi, Factorization};
use crate::census::FixedPointProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("the binomial cell model excludes d = {0} (need d >= 3)")]
    OrderTooSmall(u64),
    #[error("small-order prediction is defined for d in {{3, 4, 6}}, got {0}")]
    UnsupportedSmallOrder(u64),
    #[error("3 does not divide p - 1 = {0}")]
    ThirdOrderUndefined(u64),
    #[error("4 does not divide p - 1 = {0}")]
    QuarterOrderUndefined(u64),
    #[error("predicted variance is zero for p = {0}; no z-statistic")]
    ZeroVariance(u64),
    #[error("no cells to aggregate")]
    EmptyCells,
    #[error("window of {window} cells cannot slide over {cells}")]
    BadWindow { window: usize, cells: usize },
    #[error("window step must be positive")]
    ZeroStep,
    #[error("no qualifying primes for the {0} model")]
    NoQualifyingPrimes(&'static str),
    #[error("F_{d}({p}) = {observed} lies outside the model's outcome support")]
    OutcomeOutsideSupport { p: u64, d: u64, observed: u64 },
    #[error("normality suite needs at least 30 records, got {0}")]
    TooFewRecords(usize),
    #[error("degenerate sample: all z values equal")]
    DegenerateSample,
}

/// Normalized total fixed-point count of one prime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZRecord {
    pub p: u64,
    /// F(p), the observed total.
    pub f_total: u64,
    /// Predicted mean: sum over d | p-1 of phi(d)/d.
    pub mean: f64,
    /// Predicted variance: sum over d | p-1 of phi(d)(d-1)/d^2.
    pub variance: f64,
    /// (F(p) - mean) / sqrt(variance).
    pub z: f64,
}

/// An outcome category: an exact count, or everything above one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Exact(u64),
    Above(u64),
}

impl Category {
    pub fn contains(self, outcome: u64) -> bool {
        match self {
            Category::Exact(k) => outcome == k,
            Category::Above(k) => outcome > k,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::Exact(k) => write!(f, "{k}"),
            Category::Above(k) => write!(f, ">{k}"),
        }
    }
}

/// A categorical prediction: disjoint outcome categories with probabilities
/// summing to 1 (within 1e-12).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPrediction {
    categories: Vec<Category>,
    probs: Vec<f64>,
}

impl ModelPrediction {
    fn new(categories: Vec<Category>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(categories.len(), probs.len());
        debug_assert!(probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        ModelPrediction { categories, probs }
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Index of the category containing `outcome`, if any.
    pub fn category_of(&self, outcome: u64) -> Option<usize> {
        self.categories.iter().position(|c| c.contains(outcome))
    }
}

/// Chi-squared goodness-of-fit outcome over a fixed category list.
#[derive(Debug, Clone, PartialEq)]
pub struct GofResult {
    pub categories: Vec<Category>,
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    pub stat: f64,
    pub dof: usize,
    pub pvalue: f64,
    /// True when low-expectation tail categories were pooled (dof reduced).
    pub merged_tail: bool,
    /// True when fewer than 30 primes qualified (special-order tests only).
    pub low_sample: bool,
}

/// One sliding-window position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowResult {
    pub window_index: usize,
    /// Largest order d inside the window, placing it on the order axis.
    pub max_order: u64,
    pub stat: f64,
    pub pvalue: f64,
}

/// One (prime, order) census cell under the binomial model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub p: u64,
    pub d: u64,
    pub phi_d: u64,
    /// F_d(p).
    pub observed: u64,
}

/// Numerator of the predicted mean over the common denominator `p - 1`:
/// sum over d | p-1 of phi(d) * (p-1)/d, an exact integer. Dividing by
/// `p - 1` gives the mean; kept separate so the identity with the lifted
/// count G(p) can be asserted exactly.
pub fn predicted_mean_numerator(pm1: &Factorization) -> u128 {
    divisor_table(pm1)
        .iter()
        .map(|div| div.phi as u128 * (pm1.n() / div.value) as u128)
        .sum()
}

/// Predicted mean of F(p): sum over d | p-1 of phi(d)/d.
pub fn predicted_mean(pm1: &Factorization) -> f64 {
    predicted_mean_numerator(pm1) as f64 / pm1.n() as f64
}

/// Predicted variance of F(p): sum over d | p-1 of phi(d)(d-1)/d^2.
pub fn predicted_variance(pm1: &Factorization) -> f64 {
    divisor_table(pm1)
        .iter()
        .map(|div| {
            let d = div.value as f64;
            div.phi as f64 * (d - 1.0) / (d * d)
        })
        .sum()
}

/// z-score of the observed total against the model.
pub fn z_statistic(profile: &FixedPointProfile) -> Result<ZRecord, StatsError> {
    let pm1 = profile.pm1();
    let mean = predicted_mean(pm1);
    let variance = predicted_variance(pm1);
    if variance <= 0.0 {
        return Err(StatsError::ZeroVariance(profile.p()));
    }
    let z = (profile.total() as f64 - mean) / variance.sqrt();
    Ok(ZRecord { p: profile.p(), f_total: profile.total(), mean, variance, z })
}

/// Binomial category probabilities over `{0, 1, 2, >2}` for one cell:
/// `F_d` ~ Binomial(phi(d), 1/d). Log-space evaluation; phi(d) reaches 1e6
/// in seven-digit sweeps.
pub fn binomial_category_probs(d: u64, phi_d: u64) -> Result<ModelPrediction, StatsError> {
    if d < 3 {
        return Err(StatsError::OrderTooSmall(d));
    }
    assert!(phi_d >= 1, "phi of a divisor is positive");
    let n = phi_d as f64;
    let ln_fail = (-1.0 / d as f64).ln_1p(); // ln((d-1)/d)
    let ln_succ = -(d as f64).ln(); // ln(1/d)
    let p0 = (n * ln_fail).exp();
    let p1 = (n.ln() + ln_succ + (n - 1.0) * ln_fail).exp();
    let p2 = if phi_d >= 2 {
        ((n * (n - 1.0) / 2.0).ln() + 2.0 * ln_succ + (n - 2.0) * ln_fail).exp()
    } else {
        0.0
    };
    let rest = (1.0 - p0 - p1 - p2).max(0.0);
    Ok(ModelPrediction::new(
        vec![Category::Exact(0), Category::Exact(1), Category::Exact(2), Category::Above(2)],
        vec![p0, p1, p2, rest],
    ))
}

/// Exact-theorem-constrained predictions for the small orders:
/// d=3 -> {0: 1/3, 1: 2/3}; d=4 -> {0: 1/2, 1: 1/2}; d=6 -> {0: 5/6, 2: 1/6}.
pub fn small_order_prediction(d: u64) -> Result<ModelPrediction, StatsError> {
    match d {
        3 => Ok(ModelPrediction::new(
            vec![Category::Exact(0), Category::Exact(1)],
            vec![1.0 / 3.0, 2.0 / 3.0],
        )),
        4 => Ok(ModelPrediction::new(
            vec![Category::Exact(0), Category::Exact(1)],
            vec![0.5, 0.5],
        )),
        6 => Ok(ModelPrediction::new(
            vec![Category::Exact(0), Category::Exact(2)],
            vec![5.0 / 6.0, 1.0 / 6.0],
        )),
        other => Err(StatsError::UnsupportedSmallOrder(other)),
    }
}

/// Prediction for `F_((p-1)/3)` over outcomes {0, 1, 2}: two candidate
/// points, each an order-(p-1)/3 element with chance q = phi((p-1)/3)/(p-1),
/// independently.
pub fn large_order_third_prediction(pm1: &Factorization) -> Result<ModelPrediction, StatsError> {
    if !pm1.n().is_multiple_of(3) {
        return Err(StatsError::ThirdOrderUndefined(pm1.n()));
    }
    let m = pm1.divided_by(3).expect("3 divides p - 1");
    let q = euler_phi(&m) as f64 / pm1.n() as f64;
    Ok(ModelPrediction::new(
        vec![Category::Exact(0), Category::Exact(1), Category::Exact(2)],
        vec![(1.0 - q) * (1.0 - q), 2.0 * q * (1.0 - q), q * q],
    ))
}

/// Prediction for `F_((p-1)/4)`. For p = 1 (mod 8) the two candidates have
/// dependent, never-equal orders: with q = phi((p-1)/4)/(p-1) and
/// r = 3*phi((p-1)/4)/((p-1)/2), outcomes {0, 1, 2} get
/// ((1-q)(1-r), q(1-r) + (1-q)r, qr). For p = 5 (mod 8) only one candidate
/// can work: outcomes {0, 1} get (1-q, q). The residue class is read off
/// p - 1 (8 | p-1 versus p-1 = 4 mod 8).
pub fn large_order_quarter_prediction(pm1: &Factorization) -> Result<ModelPrediction, StatsError> {
    if !pm1.n().is_multiple_of(4) {
        return Err(StatsError::QuarterOrderUndefined(pm1.n()));
    }
    let m = pm1.divided_by(4).expect("4 divides p - 1");
    let phi_m = euler_phi(&m) as f64;
    let q = phi_m / pm1.n() as f64;
    if pm1.n().is_multiple_of(8) {
        // p = 1 (mod 8). (p-1)/4 is even here, so phi(m)/m <= 1/2 and
        // r <= 3/4; the clamp below cannot fire on real prime input.
        let r = (3.0 * phi_m / (pm1.n() as f64 / 2.0)).min(1.0);
        Ok(ModelPrediction::new(
            vec![Category::Exact(0), Category::Exact(1), Category::Exact(2)],
            vec![(1.0 - q) * (1.0 - r), q * (1.0 - r) + (1.0 - q) * r, q * r],
        ))
    } else {
        // p = 5 (mod 8).
        Ok(ModelPrediction::new(
            vec![Category::Exact(0), Category::Exact(1)],
            vec![1.0 - q, q],
        ))
    }
}

/// The orders excluded from aggregate binomial fits: d = 1 and 2 (no
/// freedom in the model) and d = p-1 and (p-1)/2 (exact theorems determine
/// them).
pub fn default_excluded_orders(p: u64) -> [u64; 4] {
    [1, 2, p - 1, (p - 1) / 2]
}

/// The (p, d) cells of one profile that enter aggregate binomial fits:
/// every divisor except the default exclusions.
pub fn cells_from_profile(profile: &FixedPointProfile) -> Vec<Cell> {
    let excluded = default_excluded_orders(profile.p());
    divisor_table(profile.pm1())
        .iter()
        .filter(|div| !excluded.contains(&div.value))
        .map(|div| Cell {
            p: profile.p(),
            d: div.value,
            phi_d: div.phi,
            observed: profile.count(div.value).expect("divisor of p - 1"),
        })
        .collect()
}

/// Chi-squared over pre-accumulated binomial categories, pooling the tail
/// while any expected count falls below 1 (dof shrinks accordingly).
fn binomial_chi_square(
    mut observed: Vec<u64>,
    mut expected: Vec<f64>,
    mut categories: Vec<Category>,
) -> GofResult {
    let mut merged_tail = false;
    while categories.len() > 2 && *expected.last().expect("nonempty") < 1.0 {
        let tail_exp = expected.pop().expect("nonempty");
        let tail_obs = observed.pop().expect("nonempty");
        *expected.last_mut().expect("nonempty") += tail_exp;
        *observed.last_mut().expect("nonempty") += tail_obs;
        categories.pop();
        // The two pooled categories are "k" and ">k-1"-style tails; the
        // union is everything above the new last exact bound.
        let last = categories.last_mut().expect("nonempty");
        *last = match *last {
            Category::Exact(k) => Category::Above(k - 1),
            Category::Above(k) => Category::Above(k - 1),
        };
        merged_tail = true;
    }
    let stat: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| {
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum();
    let dof = categories.len() - 1;
    let pvalue = chi_squared_sf(stat, dof);
    GofResult {
        categories,
        observed,
        expected,
        stat,
        dof,
        pvalue,
        merged_tail,
        low_sample: false,
    }
}

/// Aggregate goodness of fit of the binomial cell model over `{0,1,2,>2}`.
/// `exclude_orders` drops further order values on top of the default
/// exclusions already applied when the cells were built (the small orders
/// 3, 4, 6 are the usual candidates).
pub fn gof_aggregate(cells: &[Cell], exclude_orders: &[u64]) -> Result<GofResult, StatsError> {
    let mut observed = vec![0u64; 4];
    let mut expected = vec![0.0f64; 4];
    let mut categories = None;
    for cell in cells {
        if exclude_orders.contains(&cell.d) {
            continue;
        }
        let prediction = binomial_category_probs(cell.d, cell.phi_d)?;
        for (acc, prob) in expected.iter_mut().zip(prediction.probs()) {
            *acc += prob;
        }
        let idx = prediction
            .category_of(cell.observed)
            .expect("{0,1,2,>2} covers every count");
        observed[idx] += 1;
        categories.get_or_insert_with(|| prediction.categories().to_vec());
    }
    let categories = categories.ok_or(StatsError::EmptyCells)?;
    Ok(binomial_chi_square(observed, expected, categories))
}

/// Sliding-window goodness of fit: `gof_aggregate` over each consecutive
/// window of `window` cells (already sorted by the caller's key), stepping
/// by `step`. `max_order` per window is the largest d it contains.
pub fn sliding_window_gof(
    cells: &[Cell],
    window: usize,
    step: usize,
) -> Result<Vec<WindowResult>, StatsError> {
    if window == 0 || window > cells.len() {
        return Err(StatsError::BadWindow { window, cells: cells.len() });
    }
    if step == 0 {
        return Err(StatsError::ZeroStep);
    }
    let mut out = Vec::with_capacity((cells.len() - window) / step + 1);
    let mut start = 0usize;
    let mut index = 0usize;
    while start + window <= cells.len() {
        let slice = &cells[start..start + window];
        let gof = gof_aggregate(slice, &[])?;
        out.push(WindowResult {
            window_index: index,
            max_order: slice.iter().map(|c| c.d).max().expect("window nonempty"),
            stat: gof.stat,
            pvalue: gof.pvalue,
        });
        start += step;
        index += 1;
    }
    Ok(out)
}

/// Which special-order model to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialOrder {
    Small3,
    Small4,
    Small6,
    /// F_((p-1)/3) where 3 | p-1.
    Third,
    /// F_((p-1)/4) for p = 1 (mod 8).
    QuarterOneMod8,
    /// F_((p-1)/4) for p = 5 (mod 8).
    QuarterFiveMod8,
}

impl SpecialOrder {
    pub const ALL: [SpecialOrder; 6] = [
        SpecialOrder::Small3,
        SpecialOrder::Small4,
        SpecialOrder::Small6,
        SpecialOrder::Third,
        SpecialOrder::QuarterOneMod8,
        SpecialOrder::QuarterFiveMod8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpecialOrder::Small3 => "small-3",
            SpecialOrder::Small4 => "small-4",
            SpecialOrder::Small6 => "small-6",
            SpecialOrder::Third => "third",
            SpecialOrder::QuarterOneMod8 => "quarter-1mod8",
            SpecialOrder::QuarterFiveMod8 => "quarter-5mod8",
        }
    }

    /// Does this model apply to the prime at all?
    fn qualifies(self, profile: &FixedPointProfile) -> bool {
        let pm1 = profile.pm1().n();
        match self {
            SpecialOrder::Small3 | SpecialOrder::Third => pm1.is_multiple_of(3),
            SpecialOrder::Small4 => pm1.is_multiple_of(4),
            SpecialOrder::Small6 => pm1.is_multiple_of(6),
            SpecialOrder::QuarterOneMod8 => profile.p_mod_8() == 1,
            SpecialOrder::QuarterFiveMod8 => profile.p_mod_8() == 5,
        }
    }

    /// The order whose count is being predicted.
    fn target_order(self, pm1: u64) -> u64 {
        match self {
            SpecialOrder::Small3 => 3,
            SpecialOrder::Small4 => 4,
            SpecialOrder::Small6 => 6,
            SpecialOrder::Third => pm1 / 3,
            SpecialOrder::QuarterOneMod8 | SpecialOrder::QuarterFiveMod8 => pm1 / 4,
        }
    }

    fn prediction(self, profile: &FixedPointProfile) -> Result<ModelPrediction, StatsError> {
        match self {
            SpecialOrder::Small3 => small_order_prediction(3),
            SpecialOrder::Small4 => small_order_prediction(4),
            SpecialOrder::Small6 => small_order_prediction(6),
            SpecialOrder::Third => large_order_third_prediction(profile.pm1()),
            SpecialOrder::QuarterOneMod8 | SpecialOrder::QuarterFiveMod8 => {
                large_order_quarter_prediction(profile.pm1())
            }
        }
    }
}

/// Goodness of fit of one special-order model over the qualifying primes of
/// a sweep. Observed outcomes falling outside the model's support (which
/// exact theorems forbid) are a hard error. Results over fewer than 30
/// qualifying primes carry the `low_sample` flag.
pub fn special_order_gof(
    profiles: &[FixedPointProfile],
    which: SpecialOrder,
) -> Result<GofResult, StatsError> {
    let mut categories: Option<Vec<Category>> = None;
    let mut observed = Vec::new();
    let mut expected = Vec::new();
    let mut qualifying = 0usize;
    for profile in profiles.iter().filter(|pr| which.qualifies(pr)) {
        qualifying += 1;
        let prediction = which.prediction(profile)?;
        let cats = categories.get_or_insert_with(|| prediction.categories().to_vec());
        debug_assert_eq!(cats.as_slice(), prediction.categories());
        observed.resize(cats.len(), 0u64);
        expected.resize(cats.len(), 0.0f64);
        let d = which.target_order(profile.pm1().n());
        let outcome = profile.count(d).expect("target order divides p - 1");
        match prediction.category_of(outcome) {
            Some(idx) => observed[idx] += 1,
            None => {
                return Err(StatsError::OutcomeOutsideSupport { p: profile.p(), d, observed: outcome })
            }
        }
        for (acc, prob) in expected.iter_mut().zip(prediction.probs()) {
            *acc += prob;
        }
    }
    let categories = categories.ok_or(StatsError::NoQualifyingPrimes(which.name()))?;
    let stat: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| {
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum();
    let dof = categories.len() - 1;
    let pvalue = chi_squared_sf(stat, dof);
    Ok(GofResult {
        categories,
        observed,
        expected,
        stat,
        dof,
        pvalue,
        merged_tail: false,
        low_sample: qualifying < 30,
    })
}
