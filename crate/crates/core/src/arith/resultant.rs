use super::poly::IntPoly;
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// Resultant of two nonzero integer polynomials, in the Sylvester-matrix
/// determinant convention: for monic f, Res(f, g) = prod over roots theta
/// of f of g(theta).
///
/// Computed by the subresultant polynomial remainder sequence, which keeps
/// every division exact over Z and avoids the coefficient explosion of the
/// naive Euclidean PRS.
pub fn resultant(f: &IntPoly, g: &IntPoly) -> Result<BigInt> {
    if f.is_zero() || g.is_zero() {
        return Err(Error::invalid_argument(
            "resultant of the zero polynomial is undefined",
        ));
    }
    let (mut a, mut b) = (f.clone(), g.clone());
    let mut sign = BigInt::one();
    let (da, db) = (a.degree().unwrap(), b.degree().unwrap());
    if da < db {
        std::mem::swap(&mut a, &mut b);
        if da % 2 == 1 && db % 2 == 1 {
            sign = -sign;
        }
    }
    // Degenerate degrees: Res(f, c) = c^deg(f); Res(c, c') = 1.
    let db = b.degree().unwrap();
    if db == 0 {
        let c = b.leading_coeff().unwrap();
        return Ok(sign * c.pow(a.degree().unwrap() as u32));
    }
    // Pull out contents: Res(u*A, v*B) = u^deg(B) * v^deg(A) * Res(A, B).
    let ca = a.content();
    let cb = b.content();
    let content_factor = ca.pow(b.degree().unwrap() as u32) * cb.pow(a.degree().unwrap() as u32);
    a = a.exact_div_scalar(&ca).unwrap();
    b = b.exact_div_scalar(&cb).unwrap();

    let mut g_coef = BigInt::one();
    let mut h_coef = BigInt::one();
    loop {
        let da = a.degree().unwrap();
        let db = b.degree().unwrap();
        let delta = (da - db) as u32;
        if da % 2 == 1 && db % 2 == 1 {
            sign = -sign;
        }
        let r = pseudo_rem(&a, &b);
        a = b;
        if r.is_zero() {
            // Common factor of positive degree: the resultant vanishes.
            return Ok(BigInt::zero());
        }
        let divisor = &g_coef * h_coef.pow(delta);
        b = r
            .exact_div_scalar(&divisor)
            .expect("subresultant division is exact");
        g_coef = a.leading_coeff().unwrap().clone();
        if delta > 0 {
            // h = g^delta / h^(delta-1), exact by the subresultant theory.
            let num = g_coef.pow(delta);
            let den = h_coef.pow(delta - 1);
            let (q, rem) = num_integer::Integer::div_rem(&num, &den);
            debug_assert!(rem.is_zero());
            h_coef = q;
        }
        if b.degree().unwrap() == 0 {
            break;
        }
    }
    // Final: res = sign * lc(B)^deg(A) / h^(deg(A) - 1), times the contents.
    let da = a.degree().unwrap() as u32;
    let num = b.leading_coeff().unwrap().pow(da);
    let den = h_coef.pow(da - 1);
    let (q, rem) = num_integer::Integer::div_rem(&num, &den);
    debug_assert!(rem.is_zero());
    Ok(sign * content_factor * q)
}

/// Signed pseudo-remainder: the R in lc(B)^(deg A - deg B + 1) * A = Q*B + R.
fn pseudo_rem(a: &IntPoly, b: &IntPoly) -> IntPoly {
    let db = b.degree().unwrap();
    let lc_b = b.leading_coeff().unwrap().clone();
    let mut r = a.clone();
    let mut scale_left = (a.degree().unwrap() - db) as i64 + 1;
    while let Some(dr) = r.degree() {
        if dr < db {
            break;
        }
        let lead = r.leading_coeff().unwrap().clone();
        r = r.scale(&lc_b).sub(&b.scale(&lead).shift(dr - db));
        scale_left -= 1;
    }
    // Normalize so the total scaling is exactly lc(B)^(delta + 1).
    if scale_left > 0 {
        r = r.scale(&lc_b.pow(scale_left as u32));
    }
    debug_assert!(scale_left >= 0);
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(coeffs: &[i64]) -> IntPoly {
        IntPoly::from_i64s(coeffs)
    }

    /// Test oracle: Sylvester-matrix determinant by fraction-free (Bareiss)
    /// elimination. Slow but independent of the PRS implementation.
    fn sylvester_det(f: &IntPoly, g: &IntPoly) -> BigInt {
        let m = f.degree().unwrap();
        let n = g.degree().unwrap();
        let size = m + n;
        if size == 0 {
            return BigInt::one();
        }
        let mut mat = vec![vec![BigInt::zero(); size]; size];
        for row in 0..n {
            for (k, c) in f.coeffs().iter().rev().enumerate() {
                mat[row][row + k] = c.clone();
            }
        }
        for row in 0..m {
            for (k, c) in g.coeffs().iter().rev().enumerate() {
                mat[n + row][row + k] = c.clone();
            }
        }
        // Bareiss elimination.
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..size - 1 {
            if mat[k][k].is_zero() {
                let swap = (k + 1..size).find(|&i| !mat[i][k].is_zero());
                match swap {
                    Some(i) => {
                        mat.swap(k, i);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..size {
                for j in k + 1..size {
                    let val = (&mat[i][j] * &mat[k][k] - &mat[i][k] * &mat[k][j]) / &prev;
                    mat[i][j] = val;
                }
                mat[i][k] = BigInt::zero();
            }
            prev = mat[k][k].clone();
        }
        sign * mat[size - 1][size - 1].clone()
    }

    #[test]
    fn headline_examples() {
        // Res(x^2 - 2, x - 3) = (sqrt2 - 3)(-sqrt2 - 3) = 9 - 2 = 7.
        assert_eq!(
            resultant(&p(&[-2, 0, 1]), &p(&[-3, 1])).unwrap(),
            BigInt::from(7)
        );
        // Res(x^2 - x - 1, 2x - 1) = 4*phi*phibar - 2(phi+phibar) + 1 = -5.
        assert_eq!(
            resultant(&p(&[-1, -1, 1]), &p(&[-1, 2])).unwrap(),
            BigInt::from(-5)
        );
        // Res(f, 1) = 1 for any f.
        assert_eq!(
            resultant(&p(&[4, -7, 0, 1]), &IntPoly::one()).unwrap(),
            BigInt::one()
        );
        // Norm of theta in Q[x]/(x^2 - x - 1): Res(f, x) = -1.
        assert_eq!(
            resultant(&p(&[-1, -1, 1]), &IntPoly::x()).unwrap(),
            BigInt::from(-1)
        );
    }

    #[test]
    fn matches_sylvester_determinant_on_fixed_cases() {
        let cases: Vec<(IntPoly, IntPoly)> = vec![
            (p(&[-2, 0, 1]), p(&[-3, 1])),
            (p(&[-1, -1, 1]), p(&[-1, 2])),
            (p(&[1, 2, 3, 4]), p(&[5, -1, 2])),
            (p(&[0, 1, 0, 0, 2]), p(&[7, 0, -3, 1])),
            (p(&[3, 0, 0, -2, 0, 1]), p(&[1, 1, 1, 1])),
            (p(&[-6, 0, 4]), p(&[9, -3])), // non-trivial contents
            (p(&[2, 4]), p(&[1, 1, 1, 5])), // deg f < deg g swap path
        ];
        for (f, g) in cases {
            assert_eq!(
                resultant(&f, &g).unwrap(),
                sylvester_det(&f, &g),
                "f = {f}, g = {g}"
            );
        }
    }

    #[test]
    fn matches_sylvester_determinant_on_generated_cases() {
        // Small deterministic LCG over coefficient space [-5, 5].
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) % 11) as i64 - 5
        };
        for _ in 0..60 {
            let df = 1 + (next().unsigned_abs() as usize % 5);
            let dg = 1 + (next().unsigned_abs() as usize % 5);
            let mut fc: Vec<i64> = (0..=df).map(|_| next()).collect();
            let mut gc: Vec<i64> = (0..=dg).map(|_| next()).collect();
            if fc[df] == 0 {
                fc[df] = 1;
            }
            if gc[dg] == 0 {
                gc[dg] = 1;
            }
            let f = p(&fc);
            let g = p(&gc);
            assert_eq!(
                resultant(&f, &g).unwrap(),
                sylvester_det(&f, &g),
                "f = {f}, g = {g}"
            );
        }
    }

    #[test]
    fn multiplicative_in_second_argument() {
        let f = p(&[-1, -1, 1]);
        let g = p(&[2, 3]);
        let h = p(&[-4, 0, 1]);
        let lhs = resultant(&f, &g.mul(&h)).unwrap();
        let rhs = resultant(&f, &g).unwrap() * resultant(&f, &h).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn swap_symmetry_sign() {
        let f = p(&[-2, 0, 1]); // deg 2
        let g = p(&[-3, 1]); // deg 1
        let fg = resultant(&f, &g).unwrap();
        let gf = resultant(&g, &f).unwrap();
        // Res(g, f) = (-1)^(deg f * deg g) Res(f, g); here 2*1 even.
        assert_eq!(fg, gf);
        let a = p(&[1, 1]); // deg 1
        let b = p(&[-1, 2]); // deg 1
        assert_eq!(
            resultant(&a, &b).unwrap(),
            -resultant(&b, &a).unwrap()
        );
    }

    #[test]
    fn shared_root_gives_zero() {
        let f = p(&[-1, 0, 1]); // (x-1)(x+1)
        let g = p(&[-1, 1]); // x - 1
        assert_eq!(resultant(&f, &g).unwrap(), BigInt::zero());
    }

    #[test]
    fn zero_polynomial_is_rejected() {
        assert!(matches!(
            resultant(&IntPoly::zero(), &p(&[1, 1])),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            resultant(&p(&[1, 1]), &IntPoly::zero()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn constant_inputs() {
        assert_eq!(
            resultant(&p(&[5]), &p(&[2, 0, 1])).unwrap(),
            BigInt::from(25)
        );
        assert_eq!(
            resultant(&p(&[2, 0, 1]), &p(&[5])).unwrap(),
            BigInt::from(25)
        );
        assert_eq!(resultant(&p(&[3]), &p(&[4])).unwrap(), BigInt::one());
    }
}
