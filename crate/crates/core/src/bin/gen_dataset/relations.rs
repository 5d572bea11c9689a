//! Presentation of the plus-quotient space of weight-2 modular symbols for
//! Gamma_0(N): fold the two-term and sign identifications with a signed
//! union-find, eliminate the three-term relations by sparse Gauss over Q,
//! and express every Manin symbol as a rational combination of the surviving
//! basis.

use super::p1::P1;
use modtors::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

const S: [i64; 4] = [0, -1, 1, 0];
const TAU: [i64; 4] = [1, -1, 1, 0];
const TAU2: [i64; 4] = [0, -1, 1, -1];
const J: [i64; 4] = [-1, 0, 0, 1];

/// Union-find over P1 indices where every element carries a sign relative
/// to its root; merging with an inconsistent sign kills the whole class.
struct SignedClasses {
    parent: Vec<u32>,
    /// Sign of the element relative to its parent (+1 or -1).
    sign: Vec<i8>,
    dead: Vec<bool>,
}

impl SignedClasses {
    fn new(size: usize) -> SignedClasses {
        SignedClasses {
            parent: (0..size as u32).collect(),
            sign: vec![1; size],
            dead: vec![false; size],
        }
    }

    /// Root index and the sign of `x` relative to it, with path compression.
    fn find(&mut self, x: u32) -> (u32, i8) {
        let p = self.parent[x as usize];
        if p == x {
            return (x, self.sign[x as usize]);
        }
        let (root, parent_sign) = self.find(p);
        let total = self.sign[x as usize] * parent_sign;
        self.parent[x as usize] = root;
        self.sign[x as usize] = total;
        (root, total)
    }

    /// Imposes x = relative_sign * y.
    fn merge(&mut self, x: u32, y: u32, relative_sign: i8) {
        let (rx, sx) = self.find(x);
        let (ry, sy) = self.find(y);
        if rx == ry {
            // x = sx * root, y = sy * root: consistency needs sx = rel * sy.
            if sx != relative_sign * sy {
                self.dead[rx as usize] = true;
            }
            return;
        }
        // rx = sx^-1 * x = sx * x (signs are involutions), so
        // rx = sx * relative_sign * sy * ry.
        self.parent[rx as usize] = ry;
        self.sign[rx as usize] = sx * relative_sign * sy;
        if self.dead[rx as usize] {
            self.dead[ry as usize] = true;
        }
    }
}

/// Result of the relation computation: the quotient dimension, one P1
/// representative per basis vector, and the expression of every P1 symbol
/// in that basis.
pub struct Presentation {
    pub dimension: usize,
    /// P1 index representing each basis vector.
    pub basis_reps: Vec<u32>,
    /// Row per P1 index: numerators over one denominator, or None for the
    /// zero symbol.
    pub rows: Vec<Option<(Vec<modtors::BigInt>, modtors::BigInt)>>,
}

pub fn presentation(p1: &P1) -> Presentation {
    let size = p1.len();
    let mut classes = SignedClasses::new(size);
    for idx in 0..size as u32 {
        // x + xS = 0 and x - xJ = 0 in the plus quotient.
        classes.merge(idx, p1.apply(idx, S), -1);
        classes.merge(idx, p1.apply(idx, J), 1);
    }

    // Live roots get consecutive class numbers.
    let mut class_of_root: BTreeMap<u32, usize> = BTreeMap::new();
    for idx in 0..size as u32 {
        let (root, _) = classes.find(idx);
        if !classes.dead[root as usize] {
            let next = class_of_root.len();
            class_of_root.entry(root).or_insert(next);
        }
    }
    let class_count = class_of_root.len();
    let mut fold = vec![None; size];
    let mut class_rep = vec![u32::MAX; class_count];
    for idx in 0..size as u32 {
        let (root, sign) = classes.find(idx);
        if let Some(&class) = class_of_root.get(&root) {
            fold[idx as usize] = Some((class, i64::from(sign)));
            // A representative must fold with sign +1; the root itself does.
            if sign == 1 && class_rep[class] == u32::MAX {
                class_rep[class] = idx;
            }
        }
    }

    // Three-term relations x + x.tau + x.tau^2 = 0, one row per tau-orbit.
    let mut rows: Vec<BTreeMap<usize, BigRational>> = Vec::new();
    let mut seen = vec![false; size];
    for idx in 0..size as u32 {
        if seen[idx as usize] {
            continue;
        }
        let orbit = [idx, p1.apply(idx, TAU), p1.apply(idx, TAU2)];
        for member in orbit {
            seen[member as usize] = true;
        }
        let mut row: BTreeMap<usize, BigRational> = BTreeMap::new();
        for member in orbit {
            if let Some((class, sign)) = fold[member as usize] {
                let entry = row.entry(class).or_insert_with(BigRational::zero);
                *entry += BigRational::from_integer(sign.into());
            }
        }
        row.retain(|_, coef| !coef.is_zero());
        if !row.is_empty() {
            rows.push(row);
        }
    }

    // Forward elimination: solve each independent row for its last class.
    // solved[class] = expression in terms of classes unsolved at that time.
    let mut solved: Vec<Option<BTreeMap<usize, BigRational>>> = vec![None; class_count];
    let mut solve_order: Vec<usize> = Vec::new();
    for row in rows {
        let mut work = row;
        // Substitute already-solved classes until none remain.
        loop {
            let Some((&class, _)) = work.iter().find(|(c, _)| solved[**c].is_some()) else {
                break;
            };
            let coef = work.remove(&class).expect("entry exists");
            let expr = solved[class].clone().expect("checked above");
            for (other, other_coef) in expr {
                let entry = work.entry(other).or_insert_with(BigRational::zero);
                *entry += &coef * other_coef;
            }
            work.retain(|_, c| !c.is_zero());
        }
        let Some((&pivot, _)) = work.iter().next_back() else {
            continue; // redundant relation
        };
        let pivot_coef = work.remove(&pivot).expect("entry exists");
        let mut expr = BTreeMap::new();
        for (class, coef) in work {
            expr.insert(class, -coef / &pivot_coef);
        }
        solved[pivot] = Some(expr);
        solve_order.push(pivot);
    }

    // The free classes form the basis.
    let mut basis_index = vec![usize::MAX; class_count];
    let mut basis_reps = Vec::new();
    for class in 0..class_count {
        if solved[class].is_none() {
            basis_index[class] = basis_reps.len();
            basis_reps.push(class_rep[class]);
        }
    }
    let dimension = basis_reps.len();

    // Back-substitution in reverse solve order: every reference in a solved
    // expression is either free or was solved later, so it resolves first.
    let mut resolved: Vec<Option<Vec<BigRational>>> = vec![None; class_count];
    for class in 0..class_count {
        if solved[class].is_none() {
            let mut unit = vec![BigRational::zero(); dimension];
            unit[basis_index[class]] = BigRational::one();
            resolved[class] = Some(unit);
        }
    }
    for &class in solve_order.iter().rev() {
        let expr = solved[class].as_ref().expect("solved");
        let mut vector = vec![BigRational::zero(); dimension];
        for (other, coef) in expr {
            let other_vec = resolved[*other]
                .as_ref()
                .expect("reverse order resolves dependencies first");
            for (slot, value) in vector.iter_mut().zip(other_vec) {
                *slot += coef * value;
            }
        }
        resolved[class] = Some(vector);
    }

    // Rows for every P1 symbol, normalized to integer numerators over one
    // positive denominator.
    let rows = (0..size)
        .map(|idx| {
            let (class, sign) = fold[idx]?;
            let vector = resolved[class].as_ref().expect("all classes resolved");
            let sign = BigRational::from_integer(sign.into());
            let scaled: Vec<BigRational> = vector.iter().map(|v| v * &sign).collect();
            Some(common_denominator(&scaled))
        })
        .collect();

    Presentation {
        dimension,
        basis_reps,
        rows,
    }
}

fn common_denominator(values: &[BigRational]) -> (Vec<modtors::BigInt>, modtors::BigInt) {
    use num_integer::Integer;
    let mut den = modtors::BigInt::one();
    for v in values {
        den = den.lcm(v.denom());
    }
    let nums = values
        .iter()
        .map(|v| v.numer() * (&den / v.denom()))
        .collect();
    (nums, den)
}

fn prime_divisors(n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            out.push(p);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

/// Number of elliptic points of order 2 on X_0(N).
pub fn nu2(n: u32) -> u64 {
    if n % 4 == 0 {
        return 0;
    }
    let mut count = 1;
    for p in prime_divisors(n) {
        count *= match p % 4 {
            1 => 2,
            2 => 1,
            _ => 0,
        };
    }
    count
}

/// Number of elliptic points of order 3 on X_0(N).
pub fn nu3(n: u32) -> u64 {
    if n % 9 == 0 {
        return 0;
    }
    let mut count = 1;
    for p in prime_divisors(n) {
        count *= match p % 3 {
            1 => 2,
            0 => 1,
            _ => 0,
        };
    }
    count
}

/// Number of cusps of X_0(N).
pub fn cusp_count(n: u32) -> u64 {
    let mut count = 0;
    for d in 1..=n {
        if n % d == 0 {
            count += euler_phi(super::p1::gcd(i64::from(d), i64::from(n / d)) as u64);
        }
    }
    count
}

/// Number of orbits of cusps of X_0(N) under x/d -> -x/d.
///
/// The cusp x/d (with d | N and x invertible mod t = gcd(d, N/d)) maps to
/// -x/d, which is the same cusp only when t <= 2; otherwise negation pairs
/// the phi(t) cusps over d into phi(t)/2 orbits.
pub fn cusp_star_orbits(n: u32) -> u64 {
    let mut count = 0;
    for d in 1..=n {
        if n % d == 0 {
            let t = super::p1::gcd(i64::from(d), i64::from(n / d)) as u64;
            count += if t <= 2 { 1 } else { euler_phi(t) / 2 };
        }
    }
    count
}

fn euler_phi(n: u64) -> u64 {
    let mut phi = n;
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            phi = phi / p * (p - 1);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        phi = phi / m * (m - 1);
    }
    phi
}

/// Genus of X_0(N).
pub fn genus(n: u32) -> u64 {
    let index = modtors::newform::gamma0_index(u64::from(n));
    let twelve_g = 12 + index - 3 * nu2(n) - 4 * nu3(n) - 6 * cusp_count(n);
    assert!(twelve_g % 12 == 0, "genus formula must divide at N = {n}");
    twelve_g / 12
}

/// Dimension of the new subspace of weight-2 cusp forms at level N.
pub fn new_dimension(n: u32) -> u64 {
    let mut total = genus(n);
    for m in 1..n {
        if n % m == 0 {
            total -= divisor_count(n / m) * new_dimension(m);
        }
    }
    total
}

pub fn divisor_count(n: u32) -> u64 {
    (1..=n).filter(|d| n % d == 0).count() as u64
}
