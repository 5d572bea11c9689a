//! Number fields F = Q[x]/(f) for monic squarefree integer f, their element
//! arithmetic and norms, and the lambda-adic structure over rational primes:
//! decomposition with ramification/inertia data and integer-normalized
//! valuations v_lambda with v_lambda(ell) = e_lambda.

mod decompose;

pub use decompose::{
    decompose_prime, decompose_prime_with_precision, lambda_valuation, LocalPrime,
    PrimeDecomposition, ValuationOutcome, DEFAULT_PRECISION, MAX_PRECISION,
};

use crate::arith::{resultant, IntPoly};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::sync::Arc;

/// A number field presented as Q[x]/(f) for monic squarefree f over Z.
///
/// Squarefreeness is verified at construction (nonzero discriminant);
/// irreducibility is deliberately *not* certified — ingested defining
/// polynomials are irreducible by construction, and a reducible one makes
/// the norm-valuation identity fail loudly rather than silently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberField {
    defining_poly: IntPoly,
    degree: usize,
}

impl NumberField {
    pub fn new(f: IntPoly) -> Result<Arc<NumberField>> {
        if !f.is_monic() {
            return Err(Error::InvalidField(format!(
                "defining polynomial must be monic, got {f}"
            )));
        }
        let degree = f.degree().unwrap();
        if degree < 1 {
            return Err(Error::InvalidField(
                "defining polynomial must have degree >= 1".to_string(),
            ));
        }
        // Squarefree over Q iff disc != 0 iff Res(f, f') != 0.
        let fp = f.derivative();
        if resultant(&f, &fp)?.is_zero() {
            return Err(Error::InvalidField(format!(
                "defining polynomial {f} is not squarefree"
            )));
        }
        Ok(Arc::new(NumberField {
            defining_poly: f,
            degree,
        }))
    }

    pub fn defining_poly(&self) -> &IntPoly {
        &self.defining_poly
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// The class of x, the generator theta of the power basis.
    pub fn theta(self: &Arc<Self>) -> FieldElement {
        FieldElement::new(self.clone(), IntPoly::x(), BigInt::one())
    }

    pub fn zero(self: &Arc<Self>) -> FieldElement {
        FieldElement::new(self.clone(), IntPoly::zero(), BigInt::one())
    }

    pub fn one(self: &Arc<Self>) -> FieldElement {
        FieldElement::new(self.clone(), IntPoly::one(), BigInt::one())
    }

    pub fn from_rational(self: &Arc<Self>, c: &BigRational) -> FieldElement {
        FieldElement::new(
            self.clone(),
            IntPoly::constant(c.numer().clone()),
            c.denom().clone(),
        )
    }

    pub fn from_integer(self: &Arc<Self>, c: BigInt) -> FieldElement {
        FieldElement::new(self.clone(), IntPoly::constant(c), BigInt::one())
    }

    /// Element from power-basis numerator coordinates over a shared
    /// denominator: (c_0 + c_1 theta + ... + c_{g-1} theta^{g-1}) / den.
    pub fn element(self: &Arc<Self>, numerator: IntPoly, denominator: BigInt) -> Result<FieldElement> {
        if denominator.is_zero() {
            return Err(Error::invalid_argument("zero denominator"));
        }
        if numerator.degree().is_some_and(|d| d >= self.degree) {
            return Err(Error::invalid_argument(format!(
                "numerator degree {} exceeds field degree {}",
                numerator.degree().unwrap(),
                self.degree
            )));
        }
        Ok(FieldElement::new(self.clone(), numerator, denominator))
    }
}

/// An element of a number field in power-basis coordinates: a numerator
/// polynomial of degree < g over a shared positive denominator, with
/// gcd(content(numerator), denominator) = 1.
#[derive(Clone)]
pub struct FieldElement {
    field: Arc<NumberField>,
    numerator: IntPoly,
    denominator: BigInt,
}

impl FieldElement {
    /// Internal constructor: reduces mod the defining polynomial and
    /// restores canonical form. `denominator` may be negative or
    /// un-normalized; the numerator may have any degree.
    fn new(field: Arc<NumberField>, numerator: IntPoly, denominator: BigInt) -> FieldElement {
        assert!(!denominator.is_zero(), "field element with zero denominator");
        let mut num = numerator.divrem_monic(&field.defining_poly).1;
        let mut den = denominator;
        if den.is_negative() {
            den = -den;
            num = num.neg();
        }
        if num.is_zero() {
            return FieldElement {
                field,
                numerator: num,
                denominator: BigInt::one(),
            };
        }
        let g = num.content().gcd(&den);
        if !g.is_one() {
            num = num.exact_div_scalar(&g).unwrap();
            den = den.div_rem(&g).0;
        }
        FieldElement {
            field,
            numerator: num,
            denominator: den,
        }
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn numerator(&self) -> &IntPoly {
        &self.numerator
    }

    pub fn denominator(&self) -> &BigInt {
        &self.denominator
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    fn check_same_field(&self, other: &FieldElement) -> Result<()> {
        if self.field.defining_poly != other.field.defining_poly {
            return Err(Error::invalid_argument(format!(
                "field mismatch: Q[x]/({}) vs Q[x]/({})",
                self.field.defining_poly, other.field.defining_poly
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement> {
        self.check_same_field(other)?;
        let num = self
            .numerator
            .scale(&other.denominator)
            .add(&other.numerator.scale(&self.denominator));
        let den = &self.denominator * &other.denominator;
        Ok(FieldElement::new(self.field.clone(), num, den))
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement> {
        self.check_same_field(other)?;
        let num = self
            .numerator
            .scale(&other.denominator)
            .sub(&other.numerator.scale(&self.denominator));
        let den = &self.denominator * &other.denominator;
        Ok(FieldElement::new(self.field.clone(), num, den))
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement> {
        self.check_same_field(other)?;
        let num = self.numerator.mul(&other.numerator);
        let den = &self.denominator * &other.denominator;
        Ok(FieldElement::new(self.field.clone(), num, den))
    }

    pub fn neg(&self) -> FieldElement {
        FieldElement {
            field: self.field.clone(),
            numerator: self.numerator.neg(),
            denominator: self.denominator.clone(),
        }
    }

    /// Norm down to Q: Res(f, numerator) / denominator^g, with the
    /// convention Norm(a) = prod of a(theta) over the roots theta of f.
    /// Norm(0) = 0.
    pub fn norm(&self) -> BigRational {
        if self.is_zero() {
            return BigRational::zero();
        }
        let g = self.field.degree as u32;
        let res = resultant(&self.field.defining_poly, &self.numerator)
            .expect("both polynomials are nonzero");
        BigRational::new(res, self.denominator.pow(g))
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.field.defining_poly == other.field.defining_poly
            && self.numerator == other.numerator
            && self.denominator == other.denominator
    }
}

impl Eq for FieldElement {}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denominator.is_one() {
            write!(f, "({})", self.numerator)
        } else {
            write!(f, "({})/{}", self.numerator, self.denominator)
        }
    }
}
