//! Torsion-order prediction for modular abelian varieties over Q.
//!
//! Given a weight-2 newform f with trivial character, the abelian variety
//! A_f attached to f has, for each good prime p, a Frobenius element whose
//! characteristic polynomial specialises at 1 to the field element
//! 1 - a_p + p in the coefficient field F = Q(a_p).  The integer
//! N(p) = |Norm_{F/Q}(1 - a_p + p)| counts points on the reduction of A_f
//! mod p, and rational torsion injects into every such reduction away from
//! a small excluded set of primes.  This crate computes, per rational prime
//! ell, the lambda-adic valuation profile of the 1 - a_p + p across a window
//! of good primes p, turns it into a predicted torsion order
//! T = prod_ell ell^(max_lambda f_lambda * n_lambda), and compares T with
//! G = gcd_p N(p).
//!
//! Layering, bottom up:
//! - [`arith`]: exact integer/rational/polynomial arithmetic, factorization
//!   over prime fields, Hensel lifting, resultants, primality.
//! - [`numfield`]: number fields Q[x]/(f), element arithmetic, norms, prime
//!   decomposition with ramification/inertia data, lambda-adic valuations.
//! - [`newform`]: newform records (level, coefficient field, eigenvalues),
//!   dataset parsing/serialization, Sturm bounds, LMFDB fetching.
//! - [`engine`]: the per-newform analysis and per-dimension survey tables.

pub mod arith;
pub mod engine;
pub mod error;
pub mod newform;
pub mod numfield;

pub use error::{Error, Result};

// Shared scalar types, re-exported so downstream crates name them one way.
pub use num_bigint::BigInt;
pub use num_rational::BigRational;
