//! Fixed points of the self-power map `x^x mod p`.
//!
//! For a prime `p`, an `x` in `[1, p-1]` is a fixed point exactly when
//! `x = 1 (mod ord_p x)`. Restricting to a divisor `d | p-1`, the order-`d`
//! fixed points are precisely the members of the progression
//! `{1, d+1, 2d+1, ..., p-d}` whose order is exactly `d`, which is what the
//! census scans. A brute-force census and the lifted-range count `G(p)` are
//! kept alongside as oracles for the scan and for the closed-form identity
//! `G(p) = sum over n | p-1 of phi(n) * (p-1)/n`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::arith::{
    self, divisor_table, is_prime, mod_pow_raw, multiplicative_order, ArithError, Factorization,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CensusError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("residue {x} out of range for p = {p}; want 1 <= x <= p - 1")]
    ResidueOutOfRange { x: u64, p: u64 },
    #[error("lifted brute force needs (p-1)*p <= {budget}; p = {p} is too large")]
    LiftedRangeTooLarge { p: u64, budget: u64 },
    #[error("k = {k} does not divide p - 1 = {pm1}")]
    NotADivisorOfGroupOrder { k: u64, pm1: u64 },
    #[error("residue index m = {m} is outside [0, {k})")]
    ResidueIndexOutOfRange { m: u64, k: u64 },
    #[error("profile for p = {p} is inconsistent: {reason}")]
    InvalidProfile { p: u64, reason: String },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Per-order fixed-point census of one prime: `counts[d]` is the number of
/// fixed points of multiplicative order exactly `d`, for every `d | p-1`.
/// `ord2` (order of 2 mod p; 0 for p = 2 where 2 is not a unit) and
/// `p mod 8` are cached because the exact-theorem checks and the
/// quarter-order model need them everywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedPointProfile {
    p: u64,
    pm1: Factorization,
    counts: BTreeMap<u64, u64>,
    total: u64,
    ord2: u64,
    p_mod_8: u8,
}

impl FixedPointProfile {
    pub fn p(&self) -> u64 {
        self.p
    }

    /// Factorization of `p - 1`.
    pub fn pm1(&self) -> &Factorization {
        &self.pm1
    }

    /// `d -> F_d(p)` for every divisor `d` of `p - 1`, ascending keys.
    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    /// `F_d(p)`, or `None` when `d` does not divide `p - 1`.
    pub fn count(&self, d: u64) -> Option<u64> {
        self.counts.get(&d).copied()
    }

    /// `F(p)`, the total number of fixed points in `[1, p-1]`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Multiplicative order of 2 mod p; 0 for p = 2.
    pub fn ord2(&self) -> u64 {
        self.ord2
    }

    pub fn p_mod_8(&self) -> u8 {
        self.p_mod_8
    }

    /// Rebuild a profile from stored parts, enforcing the structural
    /// invariants: `p` prime, `pm1` factoring `p - 1`, one count per divisor
    /// with `F_d <= phi(d)`, `ord2` the actual order of 2, and `p_mod_8`
    /// consistent. Theorem-level properties (like `F_1 = 1`) are *not*
    /// checked here; they are data for `verify_exact_theorems`.
    pub fn from_parts(
        p: u64,
        pm1: Factorization,
        counts: BTreeMap<u64, u64>,
        ord2: u64,
        p_mod_8: u8,
    ) -> Result<Self, CensusError> {
        let invalid = |reason: String| CensusError::InvalidProfile { p, reason };
        if !is_prime(p) {
            return Err(CensusError::NotPrime(p));
        }
        if pm1.n() != p - 1 {
            return Err(invalid(format!("pm1 factors {}, not p - 1", pm1.n())));
        }
        let table = divisor_table(&pm1);
        if counts.len() != table.len() {
            return Err(invalid(format!(
                "{} counts for {} divisors",
                counts.len(),
                table.len()
            )));
        }
        let mut total = 0u64;
        for div in &table {
            match counts.get(&div.value) {
                None => return Err(invalid(format!("no count for divisor {}", div.value))),
                Some(&fd) if fd > div.phi => {
                    return Err(invalid(format!(
                        "count {} at order {} exceeds phi = {}",
                        fd, div.value, div.phi
                    )));
                }
                Some(&fd) => total += fd,
            }
        }
        let true_ord2 = if p == 2 {
            0
        } else {
            multiplicative_order(2, p, &pm1)?
        };
        if ord2 != true_ord2 {
            return Err(invalid(format!("ord2 = {ord2}, but 2 has order {true_ord2}")));
        }
        if p_mod_8 != (p % 8) as u8 {
            return Err(invalid(format!("p_mod_8 = {p_mod_8}, but p mod 8 = {}", p % 8)));
        }
        Ok(FixedPointProfile { p, pm1, counts, total, ord2, p_mod_8 })
    }
}

/// All fixed points of `x^x mod p` in `[1, p-1]`, ascending, by direct
/// evaluation. This is the oracle the order-partitioned census is tested
/// against.
pub fn fixed_points_bruteforce(p: u64) -> Result<Vec<u64>, CensusError> {
    if !is_prime(p) {
        return Err(CensusError::NotPrime(p));
    }
    Ok((1..p).filter(|&x| mod_pow_raw(x, x, p) == x).collect())
}

/// The per-order census. For each divisor `d` of `p - 1`, scans the
/// progression `{1, d+1, ..., p-d}` (the only possible order-`d` fixed
/// points) and counts members of order exactly `d`. Cost is
/// `sum over d of (p-1)/d` order checks, each a handful of modexps with an
/// early exit on the first.
pub fn fixed_point_profile(p: u64) -> Result<FixedPointProfile, CensusError> {
    if !is_prime(p) {
        return Err(CensusError::NotPrime(p));
    }
    let pm1 = Factorization::of(p - 1);
    let mut counts = BTreeMap::new();
    let mut total = 0u64;
    for div in divisor_table(&pm1) {
        let d = div.value;
        let mut fd = 0u64;
        let mut x = 1u64;
        while x <= p - d {
            if arith::has_order_by_primes(x, d, p, &div.primes) {
                fd += 1;
            }
            x += d;
        }
        total += fd;
        counts.insert(d, fd);
    }
    let ord2 = if p == 2 {
        0
    } else {
        multiplicative_order(2, p, &pm1)?
    };
    let p_mod_8 = (p % 8) as u8;
    Ok(FixedPointProfile { p, pm1, counts, total, ord2, p_mod_8 })
}

/// Fixed-point test through the order criterion `x = 1 (mod ord_p x)`,
/// rather than by evaluating `x^x`.
pub fn is_fixed_point_by_order(x: u64, p: u64) -> Result<bool, CensusError> {
    if !is_prime(p) {
        return Err(CensusError::NotPrime(p));
    }
    is_fixed_point_by_order_with(x, p, &Factorization::of(p - 1))
}

/// As [`is_fixed_point_by_order`], with the factorization of `p - 1` passed
/// in so sweeps over many `x` at fixed `p` do not refactor.
pub fn is_fixed_point_by_order_with(
    x: u64,
    p: u64,
    pm1: &Factorization,
) -> Result<bool, CensusError> {
    if x == 0 || x >= p {
        return Err(CensusError::ResidueOutOfRange { x, p });
    }
    let ord = multiplicative_order(x, p, pm1)?;
    // x = 1 (mod ord); the right side degenerates to 0 when ord = 1.
    Ok(x % ord == 1 % ord)
}

/// The closed-form lifted count `G(p) = sum over n | p-1 of phi(n)*(p-1)/n`,
/// the number of solutions of `x^x = x (mod p)` with `1 <= x <= (p-1)p` and
/// `p` not dividing `x`. Each term is an exact integer because `n | p-1`.
pub fn g_count_formula(p: u64) -> Result<u128, CensusError> {
    if !is_prime(p) {
        return Err(CensusError::NotPrime(p));
    }
    let pm1 = Factorization::of(p - 1);
    Ok(divisor_table(&pm1)
        .iter()
        .map(|div| div.phi as u128 * ((p - 1) / div.value) as u128)
        .sum())
}

/// Exhaustive count over the lifted range `1 <= x <= (p-1)p`, `p` not
/// dividing `x`. Walks each residue class `r mod p` with the recurrence
/// `(r + (k+1)p)^(r + (k+1)p) = (r + kp)^(r + kp) * r^p (mod p)`, so the
/// whole range costs about `p^2` multiplications. Guarded by a fixed budget;
/// this is an oracle, not a production path.
pub fn g_count_bruteforce(p: u64) -> Result<u128, CensusError> {
    const BUDGET: u64 = 10_000_000;
    if !is_prime(p) {
        return Err(CensusError::NotPrime(p));
    }
    if (p - 1).checked_mul(p).is_none_or(|range| range > BUDGET) {
        return Err(CensusError::LiftedRangeTooLarge { p, budget: BUDGET });
    }
    let mut count: u128 = 0;
    for r in 1..p {
        // x = r + kp for k = 0..p-1; x^x mod p = r^r * (r^p)^k.
        let step = mod_pow_raw(r, p, p);
        let mut value = mod_pow_raw(r, r, p);
        for _ in 0..p - 1 {
            if value == r {
                count += 1;
            }
            value = arith::mul_mod(value, step, p);
        }
    }
    Ok(count)
}

/// Whether `x = m(p-1)/k + 1`, the `m`-th member of the progression of
/// `k`-th-power candidates, satisfies `x^(x-1) = 1 (mod p)`. `m = 0` is the
/// degenerate member `x = 1`, always a fixed point.
pub fn kth_residue_fixed_point(p: u64, k: u64, m: u64) -> Result<bool, CensusError> {
    if !is_prime(p) {
        return Err(CensusError::NotPrime(p));
    }
    if k == 0 || !(p - 1).is_multiple_of(k) {
        return Err(CensusError::NotADivisorOfGroupOrder { k, pm1: p - 1 });
    }
    if m >= k {
        return Err(CensusError::ResidueIndexOutOfRange { m, k });
    }
    let x = m * ((p - 1) / k) + 1;
    Ok(mod_pow_raw(x, x - 1, p) == 1)
}

/// One failed exact-theorem check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremViolation {
    /// Which check: one of "F1", "F2", "F(p-1)", "F(p-1)/2", "F3", "F4",
    /// "F6", "F(p-1)/3", "F(p-1)/4".
    pub theorem: &'static str,
    pub detail: String,
}

/// Outcome of running every applicable exact-theorem check on one profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremReport {
    pub p: u64,
    /// Number of checks that applied to this prime.
    pub checks: usize,
    pub violations: Vec<TheoremViolation>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the exact structure theorems against a census:
///
/// * `F_1 = 1` always; `F_2 = 0`; `F_(p-1) = 0`;
/// * `F_((p-1)/2) = 1` exactly when `p = 1 or 7 (mod 8)` and
///   `ord_p 2 = (p-1)/2`, else 0;
/// * `F_3, F_4 in {0, 1}`; `F_6 in {0, 2}`;
/// * `F_((p-1)/3) <= 2`; `F_((p-1)/4) <= 2` for `p = 1 (mod 8)` and `<= 1`
///   for `p = 5 (mod 8)`.
///
/// Each check fires only when its divisor exists; the half-order check also
/// requires `(p-1)/2 >= 2`, since at p = 3 it would collide with the
/// trivial divisor 1 (where `F_1 = 1` is forced).
pub fn verify_exact_theorems(profile: &FixedPointProfile) -> TheoremReport {
    let p = profile.p();
    let pm1 = p - 1;
    let mut checks = 0usize;
    let mut violations = Vec::new();
    let mut check = |theorem: &'static str, ok: bool, detail: String| {
        checks += 1;
        if !ok {
            violations.push(TheoremViolation { theorem, detail });
        }
    };

    let f1 = profile.count(1).unwrap_or(u64::MAX);
    check("F1", f1 == 1, format!("F1 = {f1}, expected 1"));

    if let Some(f2) = profile.count(2) {
        check("F2", f2 == 0, format!("F2 = {f2}, expected 0"));
    }

    if pm1 >= 2 {
        let fmax = profile.count(pm1).unwrap_or(u64::MAX);
        check("F(p-1)", fmax == 0, format!("F(p-1) = {fmax}, expected 0"));
    }

    if pm1.is_multiple_of(2) && pm1 / 2 >= 2 {
        let half = pm1 / 2;
        let fh = profile.count(half).unwrap_or(u64::MAX);
        let expected = u64::from(matches!(p % 8, 1 | 7) && profile.ord2() == half);
        check(
            "F(p-1)/2",
            fh == expected,
            format!(
                "F(p-1)/2 = {fh} at d = {half}, expected {expected} (p mod 8 = {}, ord2 = {})",
                p % 8,
                profile.ord2()
            ),
        );
    }

    for (theorem, d, allowed) in [
        ("F3", 3u64, &[0u64, 1][..]),
        ("F4", 4, &[0, 1][..]),
        ("F6", 6, &[0, 2][..]),
    ] {
        if pm1.is_multiple_of(d) {
            let fd = profile.count(d).unwrap_or(u64::MAX);
            check(
                theorem,
                allowed.contains(&fd),
                format!("{theorem} = {fd}, allowed {allowed:?}"),
            );
        }
    }

    if pm1.is_multiple_of(3) {
        let d = pm1 / 3;
        let fd = profile.count(d).unwrap_or(u64::MAX);
        check(
            "F(p-1)/3",
            fd <= 2,
            format!("F(p-1)/3 = {fd} at d = {d}, bound 2"),
        );
    }

    if pm1.is_multiple_of(4) {
        let d = pm1 / 4;
        let fd = profile.count(d).unwrap_or(u64::MAX);
        let bound = if p % 8 == 1 { 2 } else { 1 };
        check(
            "F(p-1)/4",
            fd <= bound,
            format!("F(p-1)/4 = {fd} at d = {d}, bound {bound} (p mod 8 = {})", p % 8),
        );
    }

    TheoremReport { p, checks, violations }
}
