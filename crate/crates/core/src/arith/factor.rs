use super::modpoly::ModPoly;
use super::poly::IntPoly;
use super::primes::is_prime;
use crate::error::{Error, Result};
use num_bigint::{BigInt, BigUint};
use num_traits::One;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Factors a monic integer polynomial over F_ell into irreducible monic
/// factors with multiplicities, using the default seed 0 for the internal
/// randomness of equal-degree splitting.
///
/// The output is canonical: sorted by degree, then lexicographically by the
/// coefficient list (canonical representatives in [0, ell), constant term
/// first), so the function is externally deterministic despite the
/// randomized splitting inside.
pub fn factor_mod_ell(f: &IntPoly, ell: u64) -> Result<Vec<(ModPoly, u32)>> {
    factor_mod_ell_seeded(f, ell, 0)
}

/// Same as [`factor_mod_ell`] with an explicit seed; the canonical sort
/// makes the result independent of the seed, which only affects how many
/// splitting attempts are consumed internally.
pub fn factor_mod_ell_seeded(f: &IntPoly, ell: u64, seed: u64) -> Result<Vec<(ModPoly, u32)>> {
    if !is_prime(ell) {
        return Err(Error::invalid_argument(format!(
            "factorization modulus {ell} is not prime"
        )));
    }
    if !f.is_monic() {
        return Err(Error::invalid_argument(format!(
            "factor_mod_ell requires a monic polynomial, got {f}"
        )));
    }
    let fbar = ModPoly::from_int_poly(f, ell, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors: Vec<(ModPoly, u32)> = Vec::new();
    for (part, mult) in squarefree_decompose(fbar) {
        for (product, degree) in distinct_degree_split(part) {
            for irreducible in equal_degree_split(product, degree, &mut rng) {
                factors.push((irreducible, mult));
            }
        }
    }
    factors.sort_by(|(a, _), (b, _)| {
        a.degree()
            .cmp(&b.degree())
            .then_with(|| a.coeffs().cmp(b.coeffs()))
    });
    Ok(factors)
}

/// Squarefree decomposition over F_ell (characteristic-p form of Yun's
/// algorithm): returns pairwise coprime monic squarefree parts g_i with
/// multiplicities m_i such that prod g_i^{m_i} = f.
fn squarefree_decompose(f: ModPoly) -> Vec<(ModPoly, u32)> {
    let ell = f.ell();
    let degree = f.degree().map_or(0, |d| d as u64);
    let mut out: Vec<(ModPoly, u32)> = Vec::new();
    let mut f = f;
    let mut scale: u64 = 1; // accumulated ell-power from Frobenius descents
    loop {
        if f.degree().map_or(true, |d| d == 0) {
            break;
        }
        let fp = f.derivative();
        if fp.is_zero() {
            // f = g(x^ell) is an ell-th power; descend to its root.
            f = ell_th_root(&f);
            scale *= ell;
            continue;
        }
        let mut g = f.gcd_monic(&fp);
        let mut w = f.divrem_monic(&g).0;
        let mut i: u64 = 1;
        while !w.is_one() {
            let y = w.gcd_monic(&g);
            let z = w.divrem_monic(&y).0;
            if !z.is_one() {
                let mult = i * scale;
                debug_assert!(mult <= degree);
                out.push((z, mult as u32));
            }
            g = g.divrem_monic(&y).0;
            w = y;
            i += 1;
        }
        if g.degree().map_or(true, |d| d == 0) {
            break;
        }
        // Leftover factors all have multiplicity divisible by ell.
        f = ell_th_root(&g);
        scale *= ell;
    }
    out
}

/// The ell-th root of a polynomial with zero derivative over F_ell: pick
/// every ell-th coefficient (Frobenius is the identity on the prime field).
fn ell_th_root(f: &ModPoly) -> ModPoly {
    let step = f.ell() as usize;
    let coeffs: Vec<BigInt> = f.coeffs().iter().step_by(step).cloned().collect();
    ModPoly::new(f.ell(), 1, coeffs)
}

/// Distinct-degree factorization of a monic squarefree polynomial: returns
/// (product of all irreducible factors of degree d, d) pairs.
fn distinct_degree_split(f: ModPoly) -> Vec<(ModPoly, usize)> {
    let ell = BigUint::from(f.ell());
    let x = ModPoly::x(f.ell(), 1);
    let mut out = Vec::new();
    let mut f = f;
    let mut h = x.rem_monic(&f); // x^(ell^d) mod f, starting at d = 0
    let mut d = 0usize;
    while f.degree().is_some_and(|deg| deg >= 2 * (d + 1)) {
        d += 1;
        h = h.pow_mod(&ell, &f);
        let g = f.gcd_monic(&h.sub(&x));
        if !g.is_one() {
            out.push((g.clone(), d));
            f = f.divrem_monic(&g).0;
            h = h.rem_monic(&f);
        }
    }
    if f.degree().is_some_and(|deg| deg > 0) {
        let deg = f.degree().unwrap();
        out.push((f, deg));
    }
    out
}

/// Cantor-Zassenhaus equal-degree splitting: factors a monic squarefree
/// product of degree-d irreducibles into the irreducibles themselves.
fn equal_degree_split(f: ModPoly, d: usize, rng: &mut ChaCha8Rng) -> Vec<ModPoly> {
    let deg = f.degree().expect("equal_degree_split on zero polynomial");
    if deg == d {
        return vec![f];
    }
    let proper = loop {
        let r = random_poly(f.ell(), deg, rng);
        let candidate = if f.ell() == 2 {
            // Characteristic 2: gcd with the F_2-trace of a random element.
            let mut trace = r.clone();
            let mut power = r.clone();
            for _ in 1..d {
                power = power.mul(&power).rem_monic(&f);
                trace = trace.add(&power);
            }
            f.gcd_monic(&trace)
        } else {
            // Odd ell: gcd with r^((ell^d - 1)/2) - 1.
            let exponent = (BigUint::from(f.ell()).pow(d as u32) - BigUint::one()) >> 1;
            let s = r.pow_mod(&exponent, &f);
            f.gcd_monic(&s.sub(&ModPoly::one(f.ell(), 1)))
        };
        let cdeg = candidate.degree();
        if cdeg.is_some_and(|cd| cd > 0 && cd < deg) {
            break candidate;
        }
    };
    let cofactor = f.divrem_monic(&proper).0;
    let mut out = equal_degree_split(proper, d, rng);
    out.extend(equal_degree_split(cofactor, d, rng));
    out
}

fn random_poly(ell: u64, max_deg: usize, rng: &mut ChaCha8Rng) -> ModPoly {
    // Degree < max_deg is enough for splitting; resample the zero polynomial.
    loop {
        let coeffs: Vec<BigInt> = (0..max_deg)
            .map(|_| BigInt::from(rng.gen_range(0..ell)))
            .collect();
        let r = ModPoly::new(ell, 1, coeffs);
        if !r.is_zero() {
            return r;
        }
    }
}
