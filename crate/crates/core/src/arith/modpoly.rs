use super::IntPoly;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use std::fmt;

/// Univariate polynomial over Z/ell^m, coefficients lowest degree first,
/// every stored coefficient reduced to [0, ell^m).
///
/// The modulus is always a prime power: factorization works at m = 1 (a
/// prime field) and Hensel lifting carries factors to higher m. Binary
/// operations require both operands to share (ell, m); violating that is a
/// caller bug inside this crate, so it panics rather than returning an error.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ModPoly {
    ell: u64,
    precision: u32,
    modulus: BigInt,
    coeffs: Vec<BigInt>,
}

fn pow_u64(ell: u64, m: u32) -> BigInt {
    BigInt::from(ell).pow(m)
}

impl ModPoly {
    /// Builds from ascending coefficients, reducing into [0, modulus).
    pub fn new(ell: u64, precision: u32, coeffs: Vec<BigInt>) -> Self {
        assert!(precision >= 1, "modulus exponent must be >= 1");
        let modulus = pow_u64(ell, precision);
        let mut coeffs: Vec<BigInt> = coeffs.into_iter().map(|c| c.mod_floor(&modulus)).collect();
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        ModPoly {
            ell,
            precision,
            modulus,
            coeffs,
        }
    }

    pub fn from_int_poly(f: &IntPoly, ell: u64, precision: u32) -> Self {
        ModPoly::new(ell, precision, f.coeffs().to_vec())
    }

    pub fn from_i64s(ell: u64, precision: u32, coeffs: &[i64]) -> Self {
        ModPoly::new(
            ell,
            precision,
            coeffs.iter().map(|&c| BigInt::from(c)).collect(),
        )
    }

    pub fn zero(ell: u64, precision: u32) -> Self {
        ModPoly::new(ell, precision, Vec::new())
    }

    pub fn one(ell: u64, precision: u32) -> Self {
        ModPoly::new(ell, precision, vec![BigInt::one()])
    }

    pub fn x(ell: u64, precision: u32) -> Self {
        ModPoly::new(ell, precision, vec![BigInt::zero(), BigInt::one()])
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn leading_coeff(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn is_monic(&self) -> bool {
        self.leading_coeff().is_some_and(|c| c.is_one())
    }

    /// Canonical integer representatives in [0, ell^m).
    pub fn to_int_poly(&self) -> IntPoly {
        IntPoly::new(self.coeffs.clone())
    }

    /// Reduces to a lower precision (coefficients re-reduced mod ell^k).
    pub fn reduce_precision(&self, k: u32) -> ModPoly {
        assert!(k <= self.precision, "reduce_precision must not raise precision");
        ModPoly::new(self.ell, k, self.coeffs.clone())
    }

    /// Reinterprets the canonical representatives at a higher modulus.
    /// This is a raw embedding, not a Hensel lift.
    pub fn embed_at_precision(&self, k: u32) -> ModPoly {
        assert!(k >= self.precision, "embed_at_precision must not lower precision");
        ModPoly::new(self.ell, k, self.coeffs.clone())
    }

    fn assert_compatible(&self, other: &ModPoly) {
        assert!(
            self.ell == other.ell && self.precision == other.precision,
            "mixed moduli: {}^{} vs {}^{}",
            self.ell,
            self.precision,
            other.ell,
            other.precision
        );
    }

    pub fn neg(&self) -> ModPoly {
        ModPoly::new(
            self.ell,
            self.precision,
            self.coeffs.iter().map(|c| -c).collect(),
        )
    }

    pub fn add(&self, other: &ModPoly) -> ModPoly {
        self.assert_compatible(other);
        let n = self.coeffs.len().max(other.coeffs.len());
        ModPoly::new(
            self.ell,
            self.precision,
            (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect(),
        )
    }

    pub fn sub(&self, other: &ModPoly) -> ModPoly {
        self.assert_compatible(other);
        let n = self.coeffs.len().max(other.coeffs.len());
        ModPoly::new(
            self.ell,
            self.precision,
            (0..n).map(|i| self.coeff(i) - other.coeff(i)).collect(),
        )
    }

    pub fn mul(&self, other: &ModPoly) -> ModPoly {
        self.assert_compatible(other);
        if self.is_zero() || other.is_zero() {
            return ModPoly::zero(self.ell, self.precision);
        }
        let mut coeffs = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        ModPoly::new(self.ell, self.precision, coeffs)
    }

    pub fn mul_scalar(&self, c: &BigInt) -> ModPoly {
        ModPoly::new(
            self.ell,
            self.precision,
            self.coeffs.iter().map(|a| a * c).collect(),
        )
    }

    pub fn derivative(&self) -> ModPoly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigInt::from(i))
            .collect();
        ModPoly::new(self.ell, self.precision, coeffs)
    }

    /// Division with remainder by a monic divisor; valid over Z/ell^m for
    /// any m because only the (unit) leading coefficient is inverted.
    pub fn divrem_monic(&self, divisor: &ModPoly) -> (ModPoly, ModPoly) {
        self.assert_compatible(divisor);
        assert!(divisor.is_monic(), "divrem_monic requires a monic divisor");
        let d = divisor.coeffs.len() - 1;
        if self.coeffs.len() <= d {
            return (ModPoly::zero(self.ell, self.precision), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigInt::zero(); rem.len() - d];
        for i in (d..rem.len()).rev() {
            let q = std::mem::replace(&mut rem[i], BigInt::zero());
            if q.is_zero() {
                continue;
            }
            for (j, b) in divisor.coeffs.iter().enumerate().take(d) {
                let t = &q * b;
                rem[i - d + j] = (&rem[i - d + j] - t).mod_floor(&self.modulus);
            }
            quot[i - d] = q;
        }
        rem.truncate(d);
        (
            ModPoly::new(self.ell, self.precision, quot),
            ModPoly::new(self.ell, self.precision, rem),
        )
    }

    pub fn rem_monic(&self, divisor: &ModPoly) -> ModPoly {
        self.divrem_monic(divisor).1
    }

    /// Scales so the leading coefficient becomes 1. Returns `None` when the
    /// leading coefficient is not a unit mod ell^m (divisible by ell) or the
    /// polynomial is zero.
    pub fn make_monic(&self) -> Option<ModPoly> {
        let lc = self.leading_coeff()?;
        let inv = mod_inverse(lc, &self.modulus)?;
        Some(self.mul_scalar(&inv))
    }

    /// Monic gcd over the prime field F_ell. Requires precision 1: Euclid's
    /// algorithm needs every nonzero leading coefficient to be a unit.
    pub fn gcd_monic(&self, other: &ModPoly) -> ModPoly {
        self.assert_compatible(other);
        assert!(self.precision == 1, "gcd_monic is defined over F_ell only");
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let b_monic = b.make_monic().expect("nonzero over F_ell is invertible");
            let r = a.rem_monic(&b_monic);
            a = b_monic;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.make_monic().expect("nonzero over F_ell is invertible")
        }
    }

    /// Extended gcd over F_ell: returns (d, s, t) with s*self + t*other = d,
    /// d monic (or zero when both inputs are zero). Requires precision 1.
    pub fn ext_gcd(&self, other: &ModPoly) -> (ModPoly, ModPoly, ModPoly) {
        self.assert_compatible(other);
        assert!(self.precision == 1, "ext_gcd is defined over F_ell only");
        let (ell, m) = (self.ell, self.precision);
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (ModPoly::one(ell, m), ModPoly::zero(ell, m));
        let (mut t0, mut t1) = (ModPoly::zero(ell, m), ModPoly::one(ell, m));
        while !r1.is_zero() {
            let lc = r1.leading_coeff().unwrap().clone();
            let inv = mod_inverse(&lc, &self.modulus).expect("nonzero over F_ell");
            let r1m = r1.mul_scalar(&inv);
            let (q, r) = r0.divrem_monic(&r1m);
            // r0 = q*(r1/lc) + r  =>  r = r0 - (q/lc)*r1
            let q_over_lc = q.mul_scalar(&inv);
            let s2 = s0.sub(&q_over_lc.mul(&s1));
            let t2 = t0.sub(&q_over_lc.mul(&t1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s2;
            t0 = t1;
            t1 = t2;
        }
        if r0.is_zero() {
            return (r0, s0, t0);
        }
        let lc = r0.leading_coeff().unwrap().clone();
        let inv = mod_inverse(&lc, &self.modulus).expect("nonzero over F_ell");
        (r0.mul_scalar(&inv), s0.mul_scalar(&inv), t0.mul_scalar(&inv))
    }

    /// self^exp reduced mod the monic polynomial `modulus_poly`.
    pub fn pow_mod(&self, exp: &BigUint, modulus_poly: &ModPoly) -> ModPoly {
        self.assert_compatible(modulus_poly);
        let mut result = ModPoly::one(self.ell, self.precision);
        let mut base = self.rem_monic(modulus_poly);
        let mut e = exp.clone();
        while !e.is_zero() {
            if e.bit(0) {
                result = result.mul(&base).rem_monic(modulus_poly);
            }
            base = base.mul(&base).rem_monic(modulus_poly);
            e >>= 1;
        }
        result
    }
}

/// Inverse of a mod m, if gcd(a, m) = 1.
pub(crate) fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let a = a.mod_floor(m);
    let g = a.extended_gcd(m);
    if g.gcd.is_one() {
        Some(g.x.mod_floor(m))
    } else {
        None
    }
}

impl fmt::Debug for ModPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ModPoly({} mod {}^{})",
            self.to_int_poly(),
            self.ell,
            self.precision
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_reduces_and_trims() {
        let f = ModPoly::from_i64s(5, 1, &[7, -1, 10]); // 2 + 4x mod 5
        assert_eq!(f.coeffs(), &[BigInt::from(2), BigInt::from(4)]);
        assert_eq!(f.degree(), Some(1));
        assert!(ModPoly::from_i64s(3, 2, &[9, 18]).is_zero());
    }

    #[test]
    fn arithmetic_mod_seven() {
        let f = ModPoly::from_i64s(7, 1, &[3, 5]);
        let g = ModPoly::from_i64s(7, 1, &[4, 2]);
        assert_eq!(f.add(&g), ModPoly::from_i64s(7, 1, &[0, 0]));
        assert_eq!(f.add(&g), ModPoly::zero(7, 1));
        // (3 + 5x)(4 + 2x) = 12 + 26x + 10x^2 = 5 + 5x + 3x^2 mod 7
        assert_eq!(f.mul(&g), ModPoly::from_i64s(7, 1, &[5, 5, 3]));
    }

    #[test]
    fn divrem_by_monic_round_trips_at_prime_power() {
        let f = ModPoly::from_i64s(3, 2, &[5, 7, 2, 1, 8]);
        let g = ModPoly::from_i64s(3, 2, &[4, 0, 1]); // monic, mod 9
        let (q, r) = f.divrem_monic(&g);
        assert!(r.degree().map_or(true, |d| d < 2));
        assert_eq!(q.mul(&g).add(&r), f);
    }

    #[test]
    fn monic_gcd_over_prime_field() {
        // (x+2)^2 (x+1) and its derivative share exactly (x+2) mod 5.
        let a = ModPoly::from_i64s(5, 1, &[2, 1])
            .mul(&ModPoly::from_i64s(5, 1, &[2, 1]))
            .mul(&ModPoly::from_i64s(5, 1, &[1, 1]));
        let g = a.gcd_monic(&a.derivative());
        assert_eq!(g, ModPoly::from_i64s(5, 1, &[2, 1]));
    }

    #[test]
    fn ext_gcd_bezout_identity() {
        let f = ModPoly::from_i64s(11, 1, &[-4, 1]); // x - 4
        let g = ModPoly::from_i64s(11, 1, &[-8, 1]); // x - 8
        let (d, s, t) = f.ext_gcd(&g);
        assert!(d.is_one());
        assert_eq!(s.mul(&f).add(&t.mul(&g)), ModPoly::one(11, 1));
    }

    #[test]
    fn pow_mod_computes_frobenius() {
        // x^5 mod (x^2 - x - 1) over F_5: by Fermat x^5 is the Frobenius
        // image; direct computation gives 3 + 3x.
        let f = ModPoly::from_i64s(5, 1, &[-1, -1, 1]);
        let x = ModPoly::x(5, 1);
        let x5 = x.pow_mod(&BigUint::from(5u32), &f);
        // Check by repeated squaring manually: x^2 = x + 1, x^4 = (x+1)^2 =
        // x^2 + 2x + 1 = 3x + 2, x^5 = 3x^2 + 2x = 3(x+1) + 2x = 5x + 3 = 3.
        assert_eq!(x5, ModPoly::from_i64s(5, 1, &[3]));
    }

    #[test]
    fn make_monic_requires_unit_leading_coefficient() {
        let f = ModPoly::from_i64s(5, 2, &[1, 10]); // lc = 10 not a unit mod 25
        assert!(f.make_monic().is_none());
        let g = ModPoly::from_i64s(5, 2, &[3, 7]);
        let m = g.make_monic().unwrap();
        assert!(m.is_monic());
        // 7 * 18 = 126 = 1 mod 25, so monic form is 18*(3 + 7x) = 54 + x = 4 + x.
        assert_eq!(m, ModPoly::from_i64s(5, 2, &[4, 1]));
    }
}
