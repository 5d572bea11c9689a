//! Dense polynomial arithmetic over F_q for word-sized primes q, sized for
//! charpoly work: multiplication, division by monic divisors, gcd, powering
//! with huge exponents, partial distinct-degree factorization, and
//! Cantor-Zassenhaus splitting for the degrees the orbit search cares about.

use num_bigint::BigUint;
use num_traits::One;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Coefficients lowest-degree first with no trailing zeros; empty is zero.
pub type Poly = Vec<u64>;

pub fn addmod(a: u64, b: u64, q: u64) -> u64 {
    let s = a + b;
    if s >= q {
        s - q
    } else {
        s
    }
}

pub fn submod(a: u64, b: u64, q: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + q - b
    }
}

pub fn mulmod(a: u64, b: u64, q: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(q)) as u64
}

/// acc + a * b mod q without intermediate overflow (q below 2^62).
pub fn macmod(acc: u64, a: u64, b: u64, q: u64) -> u64 {
    ((u128::from(acc) + u128::from(a) * u128::from(b)) % u128::from(q)) as u64
}

/// Inverse mod a prime q; panics on zero, which callers must rule out.
pub fn invmod(a: u64, q: u64) -> u64 {
    assert!(a % q != 0, "inverse of zero mod {q}");
    let (mut r0, mut r1) = (i128::from(q), i128::from(a % q));
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let quo = r0 / r1;
        (r0, r1) = (r1, r0 - quo * r1);
        (t0, t1) = (t1, t0 - quo * t1);
    }
    assert!(r0 == 1, "{a} is not invertible mod {q}");
    t0.rem_euclid(i128::from(q)) as u64
}

/// Reduces a signed count to a canonical residue.
pub fn reduce_i64(v: i64, q: u64) -> u64 {
    v.rem_euclid(q as i64) as u64
}

fn trim(p: &mut Poly) {
    while p.last() == Some(&0) {
        p.pop();
    }
}

pub fn deg(p: &Poly) -> Option<usize> {
    if p.is_empty() {
        None
    } else {
        Some(p.len() - 1)
    }
}

pub fn constant(c: u64, q: u64) -> Poly {
    let c = c % q;
    if c == 0 {
        vec![]
    } else {
        vec![c]
    }
}

pub fn monomial_x() -> Poly {
    vec![0, 1]
}

pub fn sub(a: &Poly, b: &Poly, q: u64) -> Poly {
    let mut out = vec![0; a.len().max(b.len())];
    for (i, slot) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        *slot = submod(x, y, q);
    }
    trim(&mut out);
    out
}

pub fn mul(a: &Poly, b: &Poly, q: u64) -> Poly {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = macmod(out[i + j], x, y, q);
        }
    }
    trim(&mut out);
    out
}

pub fn scale(a: &Poly, c: u64, q: u64) -> Poly {
    let mut out: Poly = a.iter().map(|&x| mulmod(x, c, q)).collect();
    trim(&mut out);
    out
}

/// Quotient and remainder by a monic divisor.
pub fn divrem_monic(a: &Poly, b: &Poly, q: u64) -> (Poly, Poly) {
    let db = deg(b).expect("division by zero polynomial");
    assert!(b[db] == 1, "divisor must be monic");
    let mut rem = a.clone();
    if rem.len() <= db {
        return (vec![], rem);
    }
    let mut quo = vec![0u64; rem.len() - db];
    for k in (db..rem.len()).rev() {
        let c = rem[k];
        if c == 0 {
            continue;
        }
        quo[k - db] = c;
        rem[k] = 0;
        for j in 0..db {
            let t = mulmod(c, b[j], q);
            rem[k - db + j] = submod(rem[k - db + j], t, q);
        }
    }
    trim(&mut quo);
    trim(&mut rem);
    (quo, rem)
}

pub fn rem_monic(a: &Poly, b: &Poly, q: u64) -> Poly {
    divrem_monic(a, b, q).1
}

pub fn make_monic(a: &Poly, q: u64) -> Poly {
    match deg(a) {
        None => vec![],
        Some(d) => {
            if a[d] == 1 {
                a.clone()
            } else {
                scale(a, invmod(a[d], q), q)
            }
        }
    }
}

/// Monic gcd.
pub fn gcd(a: &Poly, b: &Poly, q: u64) -> Poly {
    let mut f = make_monic(a, q);
    let mut g = make_monic(b, q);
    while !g.is_empty() {
        let r = rem_monic(&f, &g, q);
        f = g;
        g = make_monic(&r, q);
    }
    f
}

pub fn derivative(a: &Poly, q: u64) -> Poly {
    if a.len() <= 1 {
        return vec![];
    }
    let mut out: Poly = (1..a.len()).map(|i| mulmod(a[i], i as u64 % q, q)).collect();
    trim(&mut out);
    out
}

pub fn eval(a: &Poly, x: u64, q: u64) -> u64 {
    let mut out = 0u64;
    for &c in a.iter().rev() {
        out = macmod(c, out, x, q);
    }
    out
}

/// base^exp mod (f, q) with an arbitrary-precision exponent.
pub fn pow_mod(base: &Poly, exp: &BigUint, f: &Poly, q: u64) -> Poly {
    let mut out = constant(1, q);
    let mut acc = rem_monic(base, f, q);
    for i in 0..exp.bits() {
        if exp.bit(i) {
            out = rem_monic(&mul(&out, &acc, q), f, q);
        }
        if i + 1 < exp.bits() {
            acc = rem_monic(&mul(&acc, &acc, q), f, q);
        }
    }
    out
}

/// Distinct-degree pieces of a squarefree monic polynomial: for each
/// d <= max_d, the product of its irreducible factors of degree d, plus the
/// cofactor of everything of larger degree.
pub fn partial_ddf(f: &Poly, q: u64, max_d: usize) -> (Vec<(usize, Poly)>, Poly) {
    let mut rest = f.clone();
    let mut pieces = Vec::new();
    let mut w = rem_monic(&monomial_x(), &rest, q);
    for d in 1..=max_d {
        if deg(&rest).unwrap_or(0) < d {
            break;
        }
        w = pow_mod(&w, &BigUint::from(q), &rest, q);
        let shifted = sub(&w, &monomial_x(), q);
        let g = gcd(&shifted, &rest, q);
        if deg(&g).unwrap_or(0) > 0 {
            rest = divrem_monic(&rest, &g, q).0;
            w = rem_monic(&w, &rest, q);
            pieces.push((d, g));
        }
    }
    (pieces, rest)
}

/// Splits a product of distinct monic irreducibles, all of degree d, into
/// the irreducibles (Cantor-Zassenhaus; q must be odd).
pub fn equal_degree_split(f: &Poly, d: usize, q: u64, rng: &mut ChaCha8Rng) -> Vec<Poly> {
    let df = deg(f).expect("nonzero product");
    assert!(df % d == 0);
    if df == d {
        return vec![f.clone()];
    }
    let exponent = (BigUint::from(q).pow(d as u32) - BigUint::one()) >> 1;
    loop {
        let a: Poly = {
            let mut coeffs: Poly = (0..df).map(|_| rng.gen_range(0..q)).collect();
            trim(&mut coeffs);
            coeffs
        };
        if deg(&a).unwrap_or(0) == 0 {
            continue;
        }
        let g0 = gcd(&a, f, q);
        let split = if deg(&g0).unwrap_or(0) > 0 && deg(&g0) != deg(f) {
            g0
        } else {
            let b = pow_mod(&a, &exponent, f, q);
            let g = gcd(&sub(&b, &constant(1, q), q), f, q);
            if deg(&g).unwrap_or(0) == 0 || deg(&g) == deg(f) {
                continue;
            }
            g
        };
        let cofactor = divrem_monic(f, &split, q).0;
        let mut out = equal_degree_split(&split, d, q, rng);
        out.extend(equal_degree_split(&cofactor, d, q, rng));
        return vec_sorted(out);
    }
}

fn vec_sorted(mut v: Vec<Poly>) -> Vec<Poly> {
    v.sort();
    v
}

/// Monic irreducible factors of degree <= max_d with their multiplicities
/// in f (f monic, q odd and larger than any factor multiplicity).
pub fn small_factors(f: &Poly, q: u64, max_d: usize, seed: u64) -> Vec<(Poly, u32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fd = derivative(f, q);
    let repeated = gcd(f, &fd, q);
    let radical = divrem_monic(f, &repeated, q).0;
    let (pieces, _) = partial_ddf(&radical, q, max_d);
    let mut out = Vec::new();
    for (d, product) in pieces {
        for h in equal_degree_split(&product, d, q, &mut rng) {
            let mut mult = 0u32;
            let mut rest = f.clone();
            loop {
                let (quo, rem) = divrem_monic(&rest, &h, q);
                if !rem.is_empty() {
                    break;
                }
                mult += 1;
                rest = quo;
            }
            assert!(mult >= 1, "split factor must divide");
            out.push((h, mult));
        }
    }
    out.sort();
    out
}

/// Roots of f mod q, each listed once.
pub fn roots(f: &Poly, q: u64, seed: u64) -> Vec<u64> {
    small_factors(f, q, 1, seed)
        .into_iter()
        .map(|(h, _)| submod(0, h[0], q))
        .collect()
}
