//! Property tests over random number fields: the norm-valuation identity,
//! decomposition degree sums, Hensel round-trips, valuation additivity, and
//! independence from the initial lifting precision.

use modtors::arith::{factor_mod_ell, int_valuation, IntPoly, ModPoly};
use modtors::numfield::{
    decompose_prime, decompose_prime_with_precision, lambda_valuation, FieldElement, NumberField,
};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use std::sync::Arc;

const CANDIDATE_ELLS: [u64; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Primes used to certify irreducibility: a polynomial that is irreducible
/// mod one of these is irreducible over Q.
const CERT_PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// Builds a field from raw coefficients when the monic polynomial they form
/// is certifiably irreducible; `None` asks the caller to skip the sample.
fn certified_field(degree: usize, raw: &[i64]) -> Option<Arc<NumberField>> {
    let mut coeffs: Vec<i64> = raw.iter().copied().take(degree).collect();
    coeffs.push(1);
    let poly = IntPoly::from_i64s(&coeffs);
    let irreducible = CERT_PRIMES.iter().any(|&ell| {
        factor_mod_ell(&poly, ell).is_ok_and(|factors| {
            factors.len() == 1 && factors[0].1 == 1 && factors[0].0.degree() == poly.degree()
        })
    });
    if !irreducible {
        return None;
    }
    NumberField::new(poly).ok()
}

fn element_from(field: &Arc<NumberField>, raw: &[i64], den: i64) -> Option<FieldElement> {
    let num = IntPoly::from_i64s(&raw[..field.degree()]);
    if num.is_zero() {
        return None;
    }
    field.element(num, BigInt::from(den)).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    /// v_ell(Norm(a)) = sum over lambda of f_lambda * v_lambda(a), where the
    /// left side is the valuation of a rational number.
    #[test]
    fn norm_valuation_identity(
        degree in 2usize..=6,
        raw_poly in prop::collection::vec(-20i64..=20, 6),
        raw_num in prop::collection::vec(-50i64..=50, 6),
        den in 1i64..=50,
        ell_pick in 0usize..CANDIDATE_ELLS.len(),
    ) {
        let Some(field) = certified_field(degree, &raw_poly) else { return Ok(()); };
        let Some(a) = element_from(&field, &raw_num, den) else { return Ok(()); };
        let ell = CANDIDATE_ELLS[ell_pick];
        let decomposition = decompose_prime(&field, ell).unwrap();
        if !decomposition.maximal_at_ell() {
            return Ok(());
        }
        let norm = a.norm();
        let lhs = int_valuation(&norm.numer().abs(), ell).unwrap() as i64
            - int_valuation(norm.denom(), ell).unwrap() as i64;
        let mut rhs = 0i64;
        for lambda in decomposition.primes() {
            rhs += lambda.f() as i64 * lambda_valuation(&field, lambda, &a).unwrap().value;
        }
        prop_assert_eq!(lhs, rhs);
    }

    /// sum over lambda of e_lambda * f_lambda = degree of the field.
    #[test]
    fn decomposition_degrees_sum_to_the_field_degree(
        degree in 2usize..=6,
        raw_poly in prop::collection::vec(-20i64..=20, 6),
        ell_pick in 0usize..CANDIDATE_ELLS.len(),
    ) {
        let Some(field) = certified_field(degree, &raw_poly) else { return Ok(()); };
        let ell = CANDIDATE_ELLS[ell_pick];
        let decomposition = decompose_prime(&field, ell).unwrap();
        if !decomposition.maximal_at_ell() {
            return Ok(());
        }
        let total: u32 = decomposition
            .primes()
            .iter()
            .map(|lambda| lambda.e() * lambda.f())
            .sum();
        prop_assert_eq!(total as usize, field.degree());
    }

    /// The lifted blocks multiply back to the defining polynomial at the
    /// working precision.
    #[test]
    fn hensel_blocks_multiply_back(
        degree in 2usize..=6,
        raw_poly in prop::collection::vec(-20i64..=20, 6),
        ell_pick in 0usize..CANDIDATE_ELLS.len(),
    ) {
        let Some(field) = certified_field(degree, &raw_poly) else { return Ok(()); };
        let ell = CANDIDATE_ELLS[ell_pick];
        let decomposition = decompose_prime(&field, ell).unwrap();
        if !decomposition.maximal_at_ell() {
            return Ok(());
        }
        let precision = decomposition.primes()[0].precision();
        let product = decomposition
            .primes()
            .iter()
            .fold(ModPoly::one(ell, precision), |acc, lambda| {
                acc.mul(lambda.lifted_block())
            });
        let expected = ModPoly::from_int_poly(field.defining_poly(), ell, precision);
        prop_assert_eq!(product, expected);
    }

    /// v_lambda(ab) = v_lambda(a) + v_lambda(b) at every lambda.
    #[test]
    fn valuations_are_additive(
        degree in 2usize..=6,
        raw_poly in prop::collection::vec(-20i64..=20, 6),
        raw_a in prop::collection::vec(-50i64..=50, 6),
        raw_b in prop::collection::vec(-50i64..=50, 6),
        den_a in 1i64..=50,
        den_b in 1i64..=50,
        ell_pick in 0usize..CANDIDATE_ELLS.len(),
    ) {
        let Some(field) = certified_field(degree, &raw_poly) else { return Ok(()); };
        let Some(a) = element_from(&field, &raw_a, den_a) else { return Ok(()); };
        let Some(b) = element_from(&field, &raw_b, den_b) else { return Ok(()); };
        let ell = CANDIDATE_ELLS[ell_pick];
        let decomposition = decompose_prime(&field, ell).unwrap();
        if !decomposition.maximal_at_ell() {
            return Ok(());
        }
        let product = a.mul(&b).unwrap();
        prop_assert!(!product.is_zero());
        for lambda in decomposition.primes() {
            let va = lambda_valuation(&field, lambda, &a).unwrap().value;
            let vb = lambda_valuation(&field, lambda, &b).unwrap().value;
            let vab = lambda_valuation(&field, lambda, &product).unwrap().value;
            prop_assert_eq!(vab, va + vb);
        }
    }

    /// The initial Hensel precision must not influence any result: same
    /// (e, f) shape and the same valuations from m0 = 4, 8, and 16.
    #[test]
    fn results_are_independent_of_initial_precision(
        degree in 2usize..=6,
        raw_poly in prop::collection::vec(-20i64..=20, 6),
        raw_num in prop::collection::vec(-50i64..=50, 6),
        den in 1i64..=50,
        ell_pick in 0usize..CANDIDATE_ELLS.len(),
    ) {
        let Some(field) = certified_field(degree, &raw_poly) else { return Ok(()); };
        let Some(a) = element_from(&field, &raw_num, den) else { return Ok(()); };
        let ell = CANDIDATE_ELLS[ell_pick];
        let mut profiles = Vec::new();
        for m0 in [4u32, 8, 16] {
            let decomposition = decompose_prime_with_precision(&field, ell, m0).unwrap();
            if !decomposition.maximal_at_ell() {
                return Ok(());
            }
            let profile: Vec<(u32, u32, i64)> = decomposition
                .primes()
                .iter()
                .map(|lambda| {
                    (
                        lambda.e(),
                        lambda.f(),
                        lambda_valuation(&field, lambda, &a).unwrap().value,
                    )
                })
                .collect();
            profiles.push(profile);
        }
        prop_assert_eq!(&profiles[0], &profiles[1]);
        prop_assert_eq!(&profiles[1], &profiles[2]);
    }
}
