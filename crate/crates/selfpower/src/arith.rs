//! Integer primitives: modular exponentiation, deterministic Miller-Rabin,
//! segmented prime sieve, factorization (trial division + Brent's rho),
//! divisor tables with Euler phi, and multiplicative orders.
//!
//! Everything here is exact u64/u128 arithmetic; no floating point.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("modulus {0} is smaller than 2")]
    ModulusTooSmall(u64),
    #[error("{x} is divisible by {p}, so its multiplicative order mod {p} is undefined")]
    ZeroResidue { x: u64, p: u64 },
    #[error("{d} does not divide the group order {group_order}")]
    NotADivisor { d: u64, group_order: u64 },
    #[error("invalid factorization of {n}: {reason}")]
    InvalidFactorization { n: u64, reason: String },
}

/// `(a * b) mod m` without overflow for any u64 inputs with `m >= 1`.
#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `base^exponent mod modulus` by binary exponentiation. Errors when
/// `modulus < 2`; `mod_pow(x, 0, m) == 1` for every `x`, including 0.
pub fn mod_pow(base: u64, exponent: u64, modulus: u64) -> Result<u64, ArithError> {
    if modulus < 2 {
        return Err(ArithError::ModulusTooSmall(modulus));
    }
    Ok(mod_pow_raw(base, exponent, modulus))
}

/// Hot-path variant of [`mod_pow`]; callers guarantee `modulus >= 2`.
#[inline]
pub(crate) fn mod_pow_raw(base: u64, mut exponent: u64, modulus: u64) -> u64 {
    let mut base = base % modulus;
    let mut acc: u64 = 1;
    while exponent > 0 {
        if exponent & 1 == 1 {
            acc = mul_mod(acc, base, modulus);
        }
        base = mul_mod(base, base, modulus);
        exponent >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, valid for all u64. The seven-witness set is
/// the standard one (Sinclair); no base below 2^64 fools all of them.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 7] = [2, 325, 9375, 28178, 450775, 9780504, 1795265022];
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13] {
        if n == q {
            return true;
        }
        if n.is_multiple_of(q) {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        if a % n == 0 {
            continue;
        }
        let mut x = mod_pow_raw(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Floor of the square root, exact for all u64.
fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r > 0 && r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// All primes in the inclusive range `[lo, hi]`, ascending. Segmented sieve
/// with 2^16-wide segments, so memory stays flat for wide ranges.
pub fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    const SEGMENT: u64 = 1 << 16;
    if hi < 2 || lo > hi {
        return Vec::new();
    }
    let lo = lo.max(2);

    // Base primes up to sqrt(hi) by a plain sieve of Eratosthenes.
    let root = isqrt(hi);
    let mut base_composite = vec![false; root as usize + 1];
    let mut base_primes = Vec::new();
    for q in 2..=root {
        if !base_composite[q as usize] {
            base_primes.push(q);
            let mut multiple = q * q;
            while multiple <= root {
                base_composite[multiple as usize] = true;
                multiple += q;
            }
        }
    }

    let mut out = Vec::new();
    let mut start = lo;
    let mut composite = vec![false; SEGMENT as usize];
    while start <= hi {
        let end = hi.min(start + SEGMENT - 1);
        let len = (end - start + 1) as usize;
        composite[..len].fill(false);
        for &q in &base_primes {
            if q * q > end {
                break;
            }
            let mut multiple = q * q;
            if multiple < start {
                multiple = start.div_ceil(q) * q;
            }
            while multiple <= end {
                composite[(multiple - start) as usize] = true;
                multiple += q;
            }
        }
        for (offset, &flag) in composite[..len].iter().enumerate() {
            if !flag {
                out.push(start + offset as u64);
            }
        }
        start = end + 1;
    }
    out
}

/// A number together with its prime factorization, primes ascending.
/// The only constructors validate, so holding a `Factorization` means
/// `n == prod p_i^e_i` with all `p_i` prime.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factorization {
    n: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Factor `n >= 1`. `Factorization::of(1)` has an empty factor list.
    pub fn of(n: u64) -> Self {
        assert!(n >= 1, "cannot factor 0");
        let mut factors = Vec::new();
        let mut rest = n;
        for q in [2u64, 3, 5] {
            let mut e = 0u32;
            while rest.is_multiple_of(q) {
                rest /= q;
                e += 1;
            }
            if e > 0 {
                factors.push((q, e));
            }
        }
        // Wheel over numbers coprime to 30 up to a fixed trial bound; rho
        // handles whatever survives.
        const WHEEL: [u64; 8] = [4, 2, 4, 2, 4, 6, 2, 6];
        let mut q = 7u64;
        let mut spin = 0usize;
        while q <= 100_000 && q * q <= rest {
            if rest.is_multiple_of(q) {
                let mut e = 0u32;
                while rest.is_multiple_of(q) {
                    rest /= q;
                    e += 1;
                }
                factors.push((q, e));
            }
            q += WHEEL[spin];
            spin = (spin + 1) % WHEEL.len();
        }
        if rest > 1 {
            if q * q > rest {
                factors.push((rest, 1));
            } else {
                let mut hard = Vec::new();
                split_composite(rest, &mut hard);
                hard.sort_unstable();
                let mut i = 0;
                while i < hard.len() {
                    let mut j = i;
                    while j < hard.len() && hard[j] == hard[i] {
                        j += 1;
                    }
                    factors.push((hard[i], (j - i) as u32));
                    i = j;
                }
            }
        }
        factors.sort_unstable_by_key(|&(p, _)| p);
        Factorization { n, factors }
    }

    /// Rebuild from stored parts, checking that the primes are prime,
    /// strictly ascending, and multiply back to `n`. This is the validation
    /// gate for factor lists read from disk.
    pub fn from_parts(n: u64, factors: Vec<(u64, u32)>) -> Result<Self, ArithError> {
        let invalid = |reason: String| ArithError::InvalidFactorization { n, reason };
        if n == 0 {
            return Err(invalid("0 has no factorization".into()));
        }
        let mut product: u64 = 1;
        let mut last_prime = 0u64;
        for &(p, e) in &factors {
            if p <= last_prime {
                return Err(invalid(format!("prime {p} out of order")));
            }
            last_prime = p;
            if !is_prime(p) {
                return Err(invalid(format!("{p} is not prime")));
            }
            if e == 0 {
                return Err(invalid(format!("prime {p} has exponent 0")));
            }
            for _ in 0..e {
                product = product
                    .checked_mul(p)
                    .ok_or_else(|| invalid("product overflows u64".into()))?;
            }
        }
        if product != n {
            return Err(invalid(format!("factors multiply to {product}")));
        }
        Ok(Factorization { n, factors })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `(prime, exponent)` pairs, primes strictly ascending.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn distinct_primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Factorization of `self.n() / d`, or `None` when `d` does not divide.
    pub fn divided_by(&self, d: u64) -> Option<Factorization> {
        if d == 0 || !self.n.is_multiple_of(d) {
            return None;
        }
        let mut rest = d;
        let mut factors = Vec::with_capacity(self.factors.len());
        for &(p, e) in &self.factors {
            let mut e = e;
            while e > 0 && rest.is_multiple_of(p) {
                rest /= p;
                e -= 1;
            }
            if e > 0 {
                factors.push((p, e));
            }
        }
        // d | n, so d is built from our primes within our exponents.
        debug_assert_eq!(rest, 1);
        Some(Factorization { n: self.n / d, factors })
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, &(p, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " * ")?;
            }
            if e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Brent's cycle variant of Pollard rho; returns a nontrivial factor of an
/// odd composite `n`. Deterministic: parameters walk a fixed sequence.
fn brent_rho(n: u64) -> u64 {
    debug_assert!(n % 2 == 1 && n > 3 && !is_prime(n));
    let mut seed = 2u64;
    loop {
        for c in 1..=(n - 2) {
            let f = |x: u64| (mul_mod(x, x, n) + c) % n;
            let mut x = seed % n;
            let mut y = x;
            let mut g = 1u64;
            let mut q = 1u64;
            let mut xs = x;
            let mut cycle = 1u64;
            while g == 1 {
                x = y;
                for _ in 0..cycle {
                    y = f(y);
                }
                let mut k = 0u64;
                while k < cycle && g == 1 {
                    xs = y;
                    let batch = 128.min(cycle - k);
                    for _ in 0..batch {
                        y = f(y);
                        q = mul_mod(q, x.abs_diff(y), n);
                    }
                    g = gcd(q, n);
                    k += batch;
                }
                cycle *= 2;
            }
            if g == n {
                // Batch overshot; replay one step at a time from xs.
                g = 1;
                let mut z = xs;
                while g == 1 {
                    z = f(z);
                    g = gcd(x.abs_diff(z), n);
                }
            }
            if g != n {
                return g;
            }
        }
        seed += 1;
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Recursively split `n` (odd, > 1, no factors below the trial bound) into
/// primes, certifying each leaf with `is_prime`.
fn split_composite(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = brent_rho(n);
    split_composite(d, out);
    split_composite(n / d, out);
}

/// One divisor of a factored number, with its Euler phi and the distinct
/// primes dividing it (what `has_order` needs for the maximal-subgroup
/// checks).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divisor {
    pub value: u64,
    pub phi: u64,
    pub primes: Vec<u64>,
}

/// All divisors of `f.n()` ascending, each carrying `phi` and its distinct
/// prime divisors. For `f.n() == 1` this is the single divisor 1.
pub fn divisor_table(f: &Factorization) -> Vec<Divisor> {
    let mut table = vec![Divisor { value: 1, phi: 1, primes: Vec::new() }];
    for &(p, e) in f.factors() {
        let base_len = table.len();
        let mut power = 1u64;
        let mut phi_power = 1u64;
        for k in 0..e {
            power *= p;
            phi_power *= if k == 0 { p - 1 } else { p };
            for i in 0..base_len {
                let mut primes = table[i].primes.clone();
                primes.push(p);
                table.push(Divisor {
                    value: table[i].value * power,
                    phi: table[i].phi * phi_power,
                    primes,
                });
            }
        }
    }
    table.sort_unstable_by_key(|d| d.value);
    table
}

/// All divisors of `f.n()`, ascending.
pub fn divisors(f: &Factorization) -> Vec<u64> {
    divisor_table(f).into_iter().map(|d| d.value).collect()
}

/// Euler's totient from a factorization.
pub fn euler_phi(f: &Factorization) -> u64 {
    f.factors()
        .iter()
        .fold(1u64, |acc, &(p, e)| acc * (p - 1) * p.pow(e - 1))
}

/// Multiplicative order of `x` mod prime `p`, given the factorization of
/// `p - 1`. Starts from the group order and divides out prime factors while
/// the power stays 1.
pub fn multiplicative_order(x: u64, p: u64, pm1: &Factorization) -> Result<u64, ArithError> {
    debug_assert!(pm1.n() == p - 1);
    if x.is_multiple_of(p) {
        return Err(ArithError::ZeroResidue { x, p });
    }
    let mut order = p - 1;
    for &(q, e) in pm1.factors() {
        for _ in 0..e {
            if mod_pow_raw(x, order / q, p) == 1 {
                order /= q;
            } else {
                break;
            }
        }
    }
    Ok(order)
}

/// Does `x` have order exactly `d` mod prime `p`? `fd` is the factorization
/// of `d`. Checks `x^d = 1` plus `x^(d/q) != 1` for each prime `q | d`.
pub fn has_order(x: u64, d: u64, p: u64, fd: &Factorization) -> Result<bool, ArithError> {
    if x.is_multiple_of(p) {
        return Err(ArithError::ZeroResidue { x, p });
    }
    if d == 0 || !(p - 1).is_multiple_of(d) {
        return Err(ArithError::NotADivisor { d, group_order: p - 1 });
    }
    debug_assert!(fd.n() == d);
    Ok(has_order_by_primes(x, d, p, &fd.factors().iter().map(|&(q, _)| q).collect::<Vec<_>>()))
}

/// Hot-path variant of [`has_order`]: `primes` are the distinct primes
/// dividing `d`, and all domain checks are the caller's job.
#[inline]
pub(crate) fn has_order_by_primes(x: u64, d: u64, p: u64, primes: &[u64]) -> bool {
    if mod_pow_raw(x, d, p) != 1 {
        return false;
    }
    primes.iter().all(|&q| mod_pow_raw(x, d / q, p) != 1)
}
