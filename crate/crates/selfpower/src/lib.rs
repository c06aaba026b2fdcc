//! Exact fixed-point censuses of the self-power map `x^x mod p` over prime
//! ranges, plus the statistics used to compare those censuses against a
//! binomial random-map model.
//!
//! The crate is organised in four layers:
//!
//! * [`arith`]: integer primitives (primality, sieving, factorization,
//!   divisors, Euler phi, modular exponentiation, multiplicative order).
//! * [`census`]: the self-power census itself. For a prime `p` it counts the
//!   fixed points `x^x = x (mod p)`, `1 <= x <= p-1`, partitioned by the
//!   multiplicative order of `x`, and checks the exact structure theorems
//!   that constrain individual order classes.
//! * [`stats`]: the random-map model. Predicted mean/variance and z-scores
//!   for the total count, binomial category probabilities per order class,
//!   chi-square goodness of fit (aggregate, sliding window, special orders),
//!   and a normality suite for the z-scores.
//! * [`pipeline`]: ties the layers together behind files: parallel sweeps to
//!   JSONL profile files, analysis passes producing CSV reports, theorem
//!   verification of stored profiles, and a self-check against brute force.
//!
//! The `selfpower` binary exposes the pipeline as subcommands; see the
//! repository README for the file formats.

pub mod arith;
pub mod census;
pub mod pipeline;
pub mod stats;
