use super::modpoly::ModPoly;
use super::poly::IntPoly;
use crate::error::{Error, Result};

/// Lifts a factorization of f mod ell to a factorization mod ell^m.
///
/// `blocks` are monic, pairwise coprime mod ell, with product congruent to
/// f mod ell. The result has the same length and degrees: block i of the
/// output reduces to block i of the input mod ell, and the product of all
/// output blocks is f mod ell^m. By Hensel's lemma this lift is unique, so
/// the function is deterministic.
///
/// Ramified factors must arrive *grouped*: a repeated irreducible g with
/// multiplicity e has to be passed as the single block g^e, otherwise the
/// blocks are not coprime and lifting fails.
pub fn hensel_lift_blocks(f: &IntPoly, blocks: &[ModPoly], m: u32) -> Result<Vec<ModPoly>> {
    if !f.is_monic() {
        return Err(Error::invalid_argument(format!(
            "hensel_lift_blocks requires a monic polynomial, got {f}"
        )));
    }
    if m < 1 {
        return Err(Error::invalid_argument("target precision must be >= 1"));
    }
    if blocks.is_empty() {
        return Err(Error::invalid_argument("no factor blocks supplied"));
    }
    let ell = blocks[0].ell();
    for b in blocks {
        if b.ell() != ell || b.precision() != 1 {
            return Err(Error::invalid_argument(format!(
                "factor blocks must all have modulus {ell}^1"
            )));
        }
        if !b.is_monic() {
            return Err(Error::invalid_argument(
                "factor blocks must be monic".to_string(),
            ));
        }
    }
    let fbar = ModPoly::from_int_poly(f, ell, 1);
    let product = blocks
        .iter()
        .fold(ModPoly::one(ell, 1), |acc, b| acc.mul(b));
    if product != fbar {
        return Err(Error::invalid_argument(format!(
            "blocks do not multiply to {f} mod {ell}"
        )));
    }
    let target = ModPoly::from_int_poly(f, ell, m);
    lift_multi(&target, blocks)
}

/// Recursive binary-split lift: lift the two half-products as a coprime
/// pair, then recurse into each half with the lifted half as the target.
fn lift_multi(target: &ModPoly, blocks: &[ModPoly]) -> Result<Vec<ModPoly>> {
    if blocks.len() == 1 {
        // A single block's unique lift is the target itself.
        return Ok(vec![target.clone()]);
    }
    let mid = blocks.len() / 2;
    let (left, right) = blocks.split_at(mid);
    let ell = target.ell();
    let g1 = left.iter().fold(ModPoly::one(ell, 1), |acc, b| acc.mul(b));
    let h1 = right.iter().fold(ModPoly::one(ell, 1), |acc, b| acc.mul(b));
    let (g, h) = lift_pair(target, &g1, &h1)?;
    let mut out = lift_multi(&g, left)?;
    out.extend(lift_multi(&h, right)?);
    Ok(out)
}

/// Quadratic Hensel lifting of a coprime monic pair g1 * h1 = target mod ell
/// up to the target's precision. Standard iteration: each step doubles the
/// precision of both the factorization f = g*h and the Bezout identity
/// s*g + t*h = 1, capping the last step at the requested precision.
fn lift_pair(target: &ModPoly, g1: &ModPoly, h1: &ModPoly) -> Result<(ModPoly, ModPoly)> {
    let (d, mut s, mut t) = g1.ext_gcd(h1);
    if !d.is_one() {
        return Err(Error::LiftingFailure(format!(
            "blocks not coprime mod {}: common factor {:?}",
            target.ell(),
            d
        )));
    }
    let m = target.precision();
    let mut g = g1.clone();
    let mut h = h1.clone();
    let mut k = 1u32;
    while k < m {
        let n = (2 * k).min(m);
        let f_n = target.reduce_precision(n);
        g = g.embed_at_precision(n);
        h = h.embed_at_precision(n);
        s = s.embed_at_precision(n);
        t = t.embed_at_precision(n);

        // Correct the factorization: f = g*h + e with e = 0 mod ell^k.
        let e = f_n.sub(&g.mul(&h));
        let (q, r) = s.mul(&e).divrem_monic(&h);
        g = g.add(&t.mul(&e)).add(&q.mul(&g));
        h = h.add(&r);

        // Correct the Bezout identity to the new precision.
        let b = s.mul(&g).add(&t.mul(&h)).sub(&ModPoly::one(target.ell(), n));
        let (c, d2) = s.mul(&b).divrem_monic(&h);
        let t_new = t.sub(&t.mul(&b)).sub(&c.mul(&g));
        s = s.sub(&d2);
        t = t_new;
        k = n;
    }
    debug_assert!(g.is_monic() && h.is_monic());
    debug_assert_eq!(g.mul(&h), target.clone());
    Ok((g, h))
}
