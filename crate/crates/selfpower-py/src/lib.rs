//! Python bindings for the selfpower crate: the census profile type plus
//! the arithmetic, counting, and statistics entry points, for interactive
//! exploration from a notebook or script.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use selfpower::arith;
use selfpower::census::{self, FixedPointProfile};
use selfpower::stats;

fn value_err(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// Fixed-point census of one prime: F_d(p) for every divisor d of p - 1.
#[pyclass(name = "Profile", frozen)]
struct Profile {
    inner: FixedPointProfile,
}

#[pymethods]
impl Profile {
    /// Census the prime p.
    #[new]
    fn new(p: u64) -> PyResult<Self> {
        let inner = census::fixed_point_profile(p).map_err(value_err)?;
        Ok(Profile { inner })
    }

    #[getter]
    fn p(&self) -> u64 {
        self.inner.p()
    }

    /// F(p): total fixed points in [1, p-1].
    #[getter]
    fn total(&self) -> u64 {
        self.inner.total()
    }

    /// Multiplicative order of 2 mod p (0 for p = 2).
    #[getter]
    fn ord2(&self) -> u64 {
        self.inner.ord2()
    }

    #[getter]
    fn p_mod_8(&self) -> u8 {
        self.inner.p_mod_8()
    }

    /// {d: F_d(p)} over all divisors d of p - 1.
    fn counts(&self) -> BTreeMap<u64, u64> {
        self.inner.counts().clone()
    }

    /// F_d(p), or None when d does not divide p - 1.
    fn count(&self, d: u64) -> Option<u64> {
        self.inner.count(d)
    }

    /// (theorem id, detail) pairs for every exact-theorem violation;
    /// empty means the census satisfies all of them.
    fn verify(&self) -> Vec<(String, String)> {
        census::verify_exact_theorems(&self.inner)
            .violations
            .into_iter()
            .map(|v| (v.theorem.to_string(), v.detail))
            .collect()
    }

    /// (predicted mean, predicted variance, z) of the total under the
    /// random-map model.
    fn z(&self) -> PyResult<(f64, f64, f64)> {
        let record = stats::z_statistic(&self.inner).map_err(value_err)?;
        Ok((record.mean, record.variance, record.z))
    }

    fn __repr__(&self) -> String {
        format!(
            "Profile(p={}, total={}, ord2={}, p_mod_8={})",
            self.inner.p(),
            self.inner.total(),
            self.inner.ord2(),
            self.inner.p_mod_8()
        )
    }
}

/// Deterministic primality test for 64-bit integers.
#[pyfunction]
fn is_prime(n: u64) -> bool {
    arith::is_prime(n)
}

/// All primes in [lo, hi].
#[pyfunction]
fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    arith::primes_in_range(lo, hi)
}

/// Least d >= 1 with x^d = 1 (mod p).
#[pyfunction]
fn multiplicative_order(x: u64, p: u64) -> PyResult<u64> {
    if !arith::is_prime(p) {
        return Err(value_err(format!("{p} is not prime")));
    }
    let pm1 = arith::Factorization::of(p - 1);
    arith::multiplicative_order(x, p, &pm1).map_err(value_err)
}

/// The fixed points of x -> x^x mod p in [1, p-1], ascending.
#[pyfunction]
fn fixed_points(p: u64) -> PyResult<Vec<u64>> {
    census::fixed_points_bruteforce(p).map_err(value_err)
}

/// G(p): solutions of x^x = x (mod p) over 1 <= x <= (p-1)p with p not
/// dividing x, by the closed form.
#[pyfunction]
fn g_count(p: u64) -> PyResult<u128> {
    census::g_count_formula(p).map_err(value_err)
}

/// G(p) by exhaustive counting (small p only).
#[pyfunction]
fn g_count_bruteforce(p: u64) -> PyResult<u128> {
    census::g_count_bruteforce(p).map_err(value_err)
}

/// Census every prime in [lo, hi].
#[pyfunction]
fn sweep_profiles(lo: u64, hi: u64) -> PyResult<Vec<Profile>> {
    arith::primes_in_range(lo, hi)
        .into_iter()
        .map(Profile::new)
        .collect()
}

/// Aggregate binomial goodness of fit over the profiles' census cells
/// (default per-prime exclusions applied; `exclude_orders` drops more).
/// Returns {"stat", "dof", "pvalue", "merged_tail"}.
#[pyfunction]
#[pyo3(signature = (profiles, exclude_orders = vec![]))]
fn gof_aggregate(
    py: Python<'_>,
    profiles: Vec<Py<Profile>>,
    exclude_orders: Vec<u64>,
) -> PyResult<Py<PyAny>> {
    let cells: Vec<stats::Cell> = profiles
        .iter()
        .flat_map(|profile| stats::cells_from_profile(&profile.get().inner))
        .collect();
    let gof = stats::gof_aggregate(&cells, &exclude_orders).map_err(value_err)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("stat", gof.stat)?;
    dict.set_item("dof", gof.dof)?;
    dict.set_item("pvalue", gof.pvalue)?;
    dict.set_item("merged_tail", gof.merged_tail)?;
    Ok(dict.into_any().unbind())
}

/// Upper-tail probability of the chi-squared distribution.
#[pyfunction]
fn chi_squared_sf(stat: f64, dof: usize) -> f64 {
    stats::chi_squared_sf(stat, dof)
}

/// Standard normal CDF.
#[pyfunction]
fn norm_cdf(x: f64) -> f64 {
    stats::norm_cdf(x)
}

/// Standard normal quantile function.
#[pyfunction]
fn inv_norm_cdf(p: f64) -> f64 {
    stats::inv_norm_cdf(p)
}

#[pymodule]
fn selfpower_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Profile>()?;
    m.add_function(wrap_pyfunction!(is_prime, m)?)?;
    m.add_function(wrap_pyfunction!(primes_in_range, m)?)?;
    m.add_function(wrap_pyfunction!(multiplicative_order, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_points, m)?)?;
    m.add_function(wrap_pyfunction!(g_count, m)?)?;
    m.add_function(wrap_pyfunction!(g_count_bruteforce, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_profiles, m)?)?;
    m.add_function(wrap_pyfunction!(gof_aggregate, m)?)?;
    m.add_function(wrap_pyfunction!(chi_squared_sf, m)?)?;
    m.add_function(wrap_pyfunction!(norm_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(inv_norm_cdf, m)?)?;
    Ok(())
}
