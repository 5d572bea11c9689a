//! Exact arithmetic kernel: integers, rationals, polynomials over Z and
//! Z/ell^m, factorization over prime fields, Hensel lifting, resultants.
//!
//! Everything here is immutable after construction and every operation is a
//! pure function, so all of it is safe to share across worker threads.

mod factor;
mod hensel;
mod modpoly;
mod poly;
mod primes;
mod resultant;

pub use factor::{factor_mod_ell, factor_mod_ell_seeded};
pub use hensel::hensel_lift_blocks;
pub use modpoly::ModPoly;
pub use poly::IntPoly;
pub use primes::{factor_integer, int_valuation, is_prime, primes_up_to};
pub use resultant::resultant;
