//! Hecke operators on the Manin symbol presentation. A symbol (c : d)
//! lifts to a unimodular path; the coset representatives of T_p (or U_p at
//! bad p) act by fractional linear maps; image paths convert back to Manin
//! symbols through continued-fraction convergents. Everything is tabulated
//! as integer count maps so one expansion serves every working modulus.

use super::linalg::MatQ;
use super::p1::{gcd, P1};
use super::polyu64;
use super::relations::Presentation;
use modtors::BigInt;
use num_integer::Integer;
use std::collections::BTreeMap;

/// SL2(Z) lift [a, b; c', d'] of the P1 point (c : d) mod n, so that the
/// bottom row is congruent to a unit multiple of (c, d).
pub fn lift_to_sl2(c: i64, d: i64, n: i64) -> [i64; 4] {
    let c = c.rem_euclid(n);
    let d = d.rem_euclid(n);
    if c == 0 {
        // (0 : d) = (0 : 1), the path {0, oo}.
        return [1, 0, 0, 1];
    }
    if d == 0 {
        // (c : 0) = (1 : 0), the path {oo, 0}.
        return [0, -1, 1, 0];
    }
    // Stretch d by multiples of n until the row is unimodular.
    let d_adj = (0..=n)
        .map(|k| d + k * n)
        .find(|&cand| gcd(c, cand) == 1)
        .expect("every P1 point has a unimodular lift");
    let egcd = c.extended_gcd(&d_adj);
    assert!(egcd.gcd == 1);
    // x*c + y*d_adj = 1, so [y, -x; c, d_adj] has determinant 1.
    [egcd.y, -egcd.x, c, d_adj]
}

/// Adds the Manin symbols of the path {oo, num/den} (den = 0 meaning oo)
/// to a count map with the given sign.
fn accumulate_path_from_infinity(
    p1: &P1,
    num: i64,
    den: i64,
    sign: i64,
    out: &mut BTreeMap<u32, i64>,
) {
    let (mut num, mut den) = if den < 0 { (-num, -den) } else { (num, den) };
    if den == 0 {
        return;
    }
    let g = gcd(num, den);
    num /= g;
    den /= g;
    // Walk the continued-fraction convergents p_j/q_j of num/den; segment j
    // contributes the Manin symbol (q_j : (-1)^(j-1) q_{j-1}).
    let (mut p_m2, mut q_m2) = (0i64, 1i64);
    let (mut p_m1, mut q_m1) = (1i64, 0i64);
    let (mut x, mut y) = (num, den);
    let mut j = 0u32;
    while y != 0 {
        let a = x.div_euclid(y);
        let p_j = a * p_m1 + p_m2;
        let q_j = a * q_m1 + q_m2;
        let flip = if j % 2 == 1 { q_m1 } else { -q_m1 };
        let idx = p1.index_of(q_j, flip);
        *out.entry(idx).or_insert(0) += sign;
        (x, y) = (y, x - a * y);
        (p_m2, q_m2) = (p_m1, q_m1);
        (p_m1, q_m1) = (p_j, q_j);
        j += 1;
    }
    assert!(p_m1 == num && q_m1 == den, "convergents must end at the target");
}

/// Adds the path {b/d, a/c} (as a difference of paths from infinity).
fn accumulate_path(p1: &P1, alpha: (i64, i64), beta: (i64, i64), out: &mut BTreeMap<u32, i64>) {
    accumulate_path_from_infinity(p1, beta.0, beta.1, 1, out);
    accumulate_path_from_infinity(p1, alpha.0, alpha.1, -1, out);
}

/// Count map of T_p (good p) or U_p (p dividing the level) applied to the
/// Manin symbol at `idx`: image symbol index -> integer multiplicity.
pub fn hecke_count_map(p1: &P1, idx: u32, p: i64) -> BTreeMap<u32, i64> {
    let n = p1.modulus();
    let (c, d) = p1.rep(idx);
    let [a, b, c, d] = lift_to_sl2(c, d, n);
    // The lifted symbol is the path {b/d, a/c}.
    let mut out = BTreeMap::new();
    for r in 0..p {
        // [1, r; 0, p] sends x to (x + r)/p.
        let alpha = (b + r * d, p * d);
        let beta = (a + r * c, p * c);
        accumulate_path(p1, alpha, beta, &mut out);
    }
    if n % p != 0 {
        // [p, 0; 0, 1] sends x to p*x; dropped for U_p.
        accumulate_path(p1, (p * b, d), (p * a, c), &mut out);
    }
    out.retain(|_, v| *v != 0);
    out
}

/// Presentation rows reduced mod q: entry per P1 index (None = the zero
/// symbol). Returns None when q divides one of the denominators, which
/// disqualifies the prime.
pub fn rows_mod_q(pres: &Presentation, q: u64) -> Option<Vec<Option<Vec<u64>>>> {
    let q_big = BigInt::from(q);
    let reduce = |v: &BigInt| -> u64 {
        let m = v.mod_floor(&q_big);
        u64::try_from(&m).expect("residue fits")
    };
    let mut out = Vec::with_capacity(pres.rows.len());
    for row in &pres.rows {
        match row {
            None => out.push(None),
            Some((nums, den)) => {
                let den_q = reduce(den);
                if den_q == 0 {
                    return None;
                }
                let inv = polyu64::invmod(den_q, q);
                out.push(Some(
                    nums.iter()
                        .map(|v| polyu64::mulmod(reduce(v), inv, q))
                        .collect(),
                ));
            }
        }
    }
    Some(out)
}

/// Image of a count map under the quotient, as a coordinate vector.
pub fn apply_count_map(
    map: &BTreeMap<u32, i64>,
    rows: &[Option<Vec<u64>>],
    dim: usize,
    q: u64,
) -> Vec<u64> {
    let mut out = vec![0u64; dim];
    for (&idx, &cnt) in map {
        let Some(row) = &rows[idx as usize] else {
            continue;
        };
        let c = polyu64::reduce_i64(cnt, q);
        if c == 0 {
            continue;
        }
        for (slot, &v) in out.iter_mut().zip(row) {
            *slot = polyu64::macmod(*slot, c, v, q);
        }
    }
    out
}

/// Matrix whose column j is the image of basis element j under the
/// operator tabulated by `count_maps`.
pub fn operator_matrix(
    count_maps: &[BTreeMap<u32, i64>],
    rows: &[Option<Vec<u64>>],
    dim: usize,
    q: u64,
) -> MatQ {
    assert_eq!(count_maps.len(), dim);
    let mut mat = MatQ::zero(dim, q);
    for (j, map) in count_maps.iter().enumerate() {
        let col = apply_count_map(map, rows, dim, q);
        for (i, v) in col.into_iter().enumerate() {
            mat.set(i, j, v);
        }
    }
    mat
}

#[cfg(test)]
mod tests {
    use super::super::linalg;
    use super::super::relations::presentation;
    use super::*;

    const Q: u64 = 1_000_003;

    #[test]
    fn lifts_are_unimodular_and_project_back() {
        for n in [11u32, 30, 49, 100] {
            let p1 = P1::new(n);
            for idx in 0..p1.len() as u32 {
                let (c, d) = p1.rep(idx);
                let [a, b, c2, d2] = lift_to_sl2(c, d, n as i64);
                assert_eq!(a * d2 - b * c2, 1, "det at N={n} idx={idx}");
                assert_eq!(p1.index_of(c2, d2), idx, "projection at N={n}");
            }
        }
    }

    #[test]
    fn the_path_from_infinity_to_zero_is_one_symbol() {
        let p1 = P1::new(11);
        let mut out = BTreeMap::new();
        accumulate_path_from_infinity(&p1, 0, 1, 1, &mut out);
        let expect: BTreeMap<u32, i64> = [(p1.index_of(1, 0), 1)].into_iter().collect();
        assert_eq!(out, expect);
    }

    #[test]
    fn hecke_matrices_at_level_eleven_have_the_known_spectra() {
        // On the plus space at level 11 (dimension 2), T_p acts with
        // eigenvalues a_p and p + 1; a_2 = -2 and a_3 = -1 were frozen from
        // the point-count oracle for the level-11 curve.
        let p1 = P1::new(11);
        let pres = presentation(&p1);
        assert_eq!(pres.dimension, 2);
        let rows = rows_mod_q(&pres, Q).expect("good prime");
        for (p, a_p, eis) in [(2i64, -2i64, 3i64), (3, -1, 4)] {
            let maps: Vec<BTreeMap<u32, i64>> = pres
                .basis_reps
                .iter()
                .map(|&rep| hecke_count_map(&p1, rep, p))
                .collect();
            let mat = operator_matrix(&maps, &rows, pres.dimension, Q);
            let cp = linalg::charpoly(&mat);
            let want = polyu64::mul(
                &vec![polyu64::reduce_i64(-a_p, Q), 1],
                &vec![polyu64::reduce_i64(-eis, Q), 1],
                Q,
            );
            assert_eq!(cp, want, "T_{p}");
        }
    }

    #[test]
    fn the_bad_prime_operator_kills_the_newform_eigenvalue() {
        // Level 14 = 2 * 7: U_2 has eigenvalue a_2 = -1 on the newform
        // line (frozen from the point-count oracle for the level-14 curve).
        let p1 = P1::new(14);
        let pres = presentation(&p1);
        let rows = rows_mod_q(&pres, Q).expect("good prime");
        let maps: Vec<BTreeMap<u32, i64>> = pres
            .basis_reps
            .iter()
            .map(|&rep| hecke_count_map(&p1, rep, 2))
            .collect();
        let mat = operator_matrix(&maps, &rows, pres.dimension, Q);
        let cp = linalg::charpoly(&mat);
        assert_eq!(polyu64::eval(&cp, polyu64::reduce_i64(-1, Q), Q), 0);
    }
}
