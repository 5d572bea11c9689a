//! Exact reconstruction and small exact linear algebra: Chinese
//! remaindering into symmetric range, rational polynomial arithmetic
//! modulo a monic integer polynomial, and characteristic polynomials of
//! matrices up to 3x3 over Q.

use modtors::arith::IntPoly;
use modtors::{BigInt, BigRational};
use num_integer::Integer;
use num_traits::{One, Zero};

/// Combines residues mod pairwise-distinct primes into the representative
/// in (-M/2, M/2]; returns (value, M).
pub fn crt_symmetric(residues: &[(u64, u64)]) -> (BigInt, BigInt) {
    let mut value = BigInt::zero();
    let mut modulus = BigInt::one();
    for &(r, q) in residues {
        let q_big = BigInt::from(q);
        let r_big = BigInt::from(r);
        // value' = value + modulus * t with t = (r - value)/modulus mod q.
        let m_inv = mod_inverse(&modulus, &q_big).expect("moduli are coprime");
        let t = ((&r_big - &value) * m_inv).mod_floor(&q_big);
        value += &modulus * t;
        modulus *= q_big;
    }
    let half = &modulus >> 1;
    if value > half {
        value -= &modulus;
    }
    (value, modulus)
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let a = a.mod_floor(m);
    let egcd = a.extended_gcd(m);
    if egcd.gcd.is_one() {
        Some(egcd.x.mod_floor(m))
    } else {
        None
    }
}

/// Dense rational polynomial, lowest degree first, trailing zeros trimmed.
pub type RatPoly = Vec<BigRational>;

pub fn rp_trim(p: &mut RatPoly) {
    while p.last().map(Zero::is_zero) == Some(true) {
        p.pop();
    }
}

pub fn rp_add(a: &RatPoly, b: &RatPoly) -> RatPoly {
    let mut out = vec![BigRational::zero(); a.len().max(b.len())];
    for (i, slot) in out.iter_mut().enumerate() {
        if let Some(x) = a.get(i) {
            *slot += x;
        }
        if let Some(y) = b.get(i) {
            *slot += y;
        }
    }
    rp_trim(&mut out);
    out
}

pub fn rp_scale(a: &RatPoly, c: &BigRational) -> RatPoly {
    if c.is_zero() {
        return vec![];
    }
    a.iter().map(|x| x * c).collect()
}

pub fn rp_mul(a: &RatPoly, b: &RatPoly) -> RatPoly {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    rp_trim(&mut out);
    out
}

/// Quotient and remainder in Q[x]; the divisor must be nonzero.
pub fn rp_divrem(a: &RatPoly, b: &RatPoly) -> (RatPoly, RatPoly) {
    let mut divisor = b.clone();
    rp_trim(&mut divisor);
    assert!(!divisor.is_empty(), "division by the zero polynomial");
    let db = divisor.len() - 1;
    let lead = divisor[db].clone();
    let mut rem = a.clone();
    rp_trim(&mut rem);
    let mut quo = vec![BigRational::zero(); rem.len().saturating_sub(db)];
    while rem.len() > db {
        let k = rem.len() - 1 - db;
        let factor = rem.last().expect("nonempty") / &lead;
        for i in 0..=db {
            let delta = &divisor[i] * &factor;
            rem[k + i] -= delta;
        }
        quo[k] = factor;
        rp_trim(&mut rem);
    }
    (quo, rem)
}

/// Inverse of g modulo a squarefree monic integer polynomial f, by the
/// extended Euclidean algorithm in Q[x]; None when they share a factor.
pub fn rp_invmod(g: &RatPoly, f: &IntPoly) -> Option<RatPoly> {
    let f_rat: RatPoly = f
        .coeffs()
        .iter()
        .map(|c| BigRational::from_integer(c.clone()))
        .collect();
    let minus_one = BigRational::from_integer((-1).into());
    let mut r0 = f_rat;
    let mut r1 = rp_reduce(g, f);
    let mut t0: RatPoly = vec![];
    let mut t1: RatPoly = vec![BigRational::one()];
    while !r1.is_empty() {
        let (q, r2) = rp_divrem(&r0, &r1);
        let t2 = rp_add(&t0, &rp_scale(&rp_mul(&q, &t1), &minus_one));
        (r0, r1) = (r1, r2);
        (t0, t1) = (t1, t2);
    }
    if r0.len() != 1 {
        return None;
    }
    let inv_lead = BigRational::one() / &r0[0];
    Some(rp_reduce(&rp_scale(&t0, &inv_lead), f))
}

/// Remainder of a modulo a monic integer polynomial.
pub fn rp_reduce(a: &RatPoly, modulus: &IntPoly) -> RatPoly {
    let d = modulus.degree().expect("monic modulus");
    assert!(modulus.is_monic());
    let mut work = a.clone();
    while work.len() > d {
        let lead = work.pop().expect("nonempty");
        if lead.is_zero() {
            continue;
        }
        let k = work.len() - d;
        for i in 0..d {
            let c = BigRational::from_integer(modulus.coeff(i));
            work[k + i] -= &lead * c;
        }
    }
    rp_trim(&mut work);
    work
}

/// Monic characteristic polynomial (lowest degree first) of a square
/// rational matrix of size at most 3.
pub fn ratmat_charpoly(rows: &[Vec<BigRational>]) -> Vec<BigRational> {
    let n = rows.len();
    assert!(rows.iter().all(|r| r.len() == n));
    let one = BigRational::one;
    match n {
        0 => vec![one()],
        1 => vec![-rows[0][0].clone(), one()],
        2 => {
            let tr = &rows[0][0] + &rows[1][1];
            let det = &rows[0][0] * &rows[1][1] - &rows[0][1] * &rows[1][0];
            vec![det, -tr, one()]
        }
        3 => {
            let tr = &rows[0][0] + &rows[1][1] + &rows[2][2];
            let minor =
                |i: usize, j: usize| &rows[i][i] * &rows[j][j] - &rows[i][j] * &rows[j][i];
            let m2 = minor(0, 1) + minor(0, 2) + minor(1, 2);
            let det = &rows[0][0] * (&rows[1][1] * &rows[2][2] - &rows[1][2] * &rows[2][1])
                - &rows[0][1] * (&rows[1][0] * &rows[2][2] - &rows[1][2] * &rows[2][0])
                + &rows[0][2] * (&rows[1][0] * &rows[2][1] - &rows[1][1] * &rows[2][0]);
            vec![-det, m2, -tr, one()]
        }
        _ => panic!("charpoly only supports matrices up to 3x3, got {n}"),
    }
}

/// Integer coefficients of a rational polynomial, or None if any
/// coefficient has a denominator.
pub fn rp_to_int(p: &[BigRational]) -> Option<IntPoly> {
    let mut coeffs = Vec::with_capacity(p.len());
    for c in p {
        if !c.denom().is_one() {
            return None;
        }
        coeffs.push(c.numer().clone());
    }
    Some(IntPoly::new(coeffs))
}

/// Solves the square rational system A x = b by Gaussian elimination;
/// None when A is singular.
pub fn solve_linear(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.len();
    assert!(a.iter().all(|r| r.len() == n) && b.len() == n);
    let mut m: Vec<Vec<BigRational>> = a.to_vec();
    let mut rhs: Vec<BigRational> = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let lead = m[col][col].clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &lead;
            for c in col..n {
                let adj = &factor * &m[col][c];
                m[r][c] -= adj;
            }
            let adj = &factor * &rhs[col];
            rhs[r] -= adj;
        }
    }
    let mut x = vec![BigRational::zero(); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row].clone();
        for c in row + 1..n {
            acc -= &m[row][c] * &x[c];
        }
        x[row] = acc / &m[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn polynomial_inverses_multiply_back_to_one() {
        // 1/x mod x^2 - 2 is x/2.
        let f = IntPoly::from_i64s(&[-2, 0, 1]);
        let x = vec![rat(0, 1), rat(1, 1)];
        let inv = rp_invmod(&x, &f).expect("x is a unit mod x^2 - 2");
        assert_eq!(inv, vec![rat(0, 1), rat(1, 2)]);
        assert_eq!(rp_reduce(&rp_mul(&x, &inv), &f), vec![rat(1, 1)]);
        // x - 1 divides x^2 - 1, so no inverse exists there.
        let shared = IntPoly::from_i64s(&[-1, 0, 1]);
        assert!(rp_invmod(&vec![rat(-1, 1), rat(1, 1)], &shared).is_none());
    }

    #[test]
    fn crt_recovers_a_negative_value() {
        let target = BigInt::from(-123_456_789_i64);
        let primes = [1_000_003u64, 1_000_033, 1_000_037];
        let residues: Vec<(u64, u64)> = primes
            .iter()
            .map(|&q| (target.mod_floor(&BigInt::from(q)).try_into().unwrap(), q))
            .collect();
        let (value, modulus) = crt_symmetric(&residues);
        assert_eq!(value, target);
        assert_eq!(modulus, BigInt::from(primes.iter().product::<u64>()));
    }

    #[test]
    fn charpolys_match_hand_computations() {
        // [[0,1],[1,1]] has charpoly x^2 - x - 1.
        let fib = vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(1, 1)]];
        assert_eq!(ratmat_charpoly(&fib), vec![rat(-1, 1), rat(-1, 1), rat(1, 1)]);
        // Companion of x^3 - x - 1.
        let comp = vec![
            vec![rat(0, 1), rat(0, 1), rat(1, 1)],
            vec![rat(1, 1), rat(0, 1), rat(1, 1)],
            vec![rat(0, 1), rat(1, 1), rat(0, 1)],
        ];
        assert_eq!(
            ratmat_charpoly(&comp),
            vec![rat(-1, 1), rat(-1, 1), rat(0, 1), rat(1, 1)]
        );
    }

    #[test]
    fn reduction_modulo_a_monic_polynomial() {
        // x^3 mod (x^2 - x - 1) = x * x^2 = x(x + 1) = x^2 + x = 2x + 1.
        let h = IntPoly::from_i64s(&[-1, -1, 1]);
        let x3: RatPoly = vec![rat(0, 1), rat(0, 1), rat(0, 1), rat(1, 1)];
        assert_eq!(rp_reduce(&x3, &h), vec![rat(1, 1), rat(2, 1)]);
    }

    #[test]
    fn linear_systems_solve_and_detect_singularity() {
        // 2x + y = 5, x - y = 1 has solution (2, 1).
        let a = vec![
            vec![rat(2, 1), rat(1, 1)],
            vec![rat(1, 1), rat(-1, 1)],
        ];
        let b = vec![rat(5, 1), rat(1, 1)];
        assert_eq!(solve_linear(&a, &b), Some(vec![rat(2, 1), rat(1, 1)]));

        let singular = vec![
            vec![rat(1, 1), rat(2, 1)],
            vec![rat(2, 1), rat(4, 1)],
        ];
        assert_eq!(solve_linear(&singular, &b), None);
    }
}
