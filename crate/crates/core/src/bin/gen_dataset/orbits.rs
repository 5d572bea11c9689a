//! Newform orbits at a single level. The characteristic polynomial of a
//! random integer combination of Hecke operators is reconstructed exactly
//! by CRT over word-size primes; the old-space factors (known exactly
//! from lower levels) are divided out with zero remainders; the
//! dimension <= 3 factors of the quotient are located by modular
//! factorization, Hensel lifting, and exact trial division; eigenvalue
//! coordinates are recovered from left eigenvectors modulo split primes,
//! with a held-out prime verifying the reconstruction; and a Weil-bound
//! filter rejects the boundary systems that share the quotient.
//!
//! Every acceptance decision rests on an exact certificate (integrality,
//! Weil bounds, zero remainders, verification primes). Randomness only
//! affects which orbits are *found*; a second sweep with independent
//! randomness must reproduce the records exactly before a level is
//! accepted.

use super::exact::{self, RatPoly};
use super::linalg;
use super::modsym;
use super::p1::P1;
use super::polyu64::{self, Poly};
use super::relations::{self, Presentation};
use modtors::arith::{
    factor_integer, hensel_lift_blocks, is_prime, primes_up_to, resultant, IntPoly, ModPoly,
};
use modtors::newform::sturm_bound;
use modtors::numfield::{decompose_prime, NumberField};
use modtors::{BigInt, BigRational};
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

/// Maximum orbit dimension that is extracted and recorded.
pub const MAX_DIM: usize = 3;
/// Number of trace values Tr(a_n) computed per orbit, n = 1..=TRACE_COUNT.
pub const TRACE_COUNT: u64 = 100;

const MAX_SWEEP_ATTEMPTS: u32 = 12;
const MAX_LEVEL_RETRIES: u32 = 4;
const COMBO_WEIGHT_BITS: u32 = 26;
const MAX_SPLIT_PRIMES: usize = 48;

/// One certified Galois orbit of newforms, with eigenvalue coordinates in
/// the power basis of `field_poly`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitData {
    pub level: u32,
    pub dimension: usize,
    pub field_poly: IntPoly,
    /// a_p for every prime p <= data_bound: integer coordinates over one
    /// positive denominator.
    pub eigenvalues: BTreeMap<u64, (Vec<BigInt>, BigInt)>,
    /// Tr(a_n) for n = 1..=TRACE_COUNT; the sort key within a level.
    pub traces: Vec<BigInt>,
    pub data_bound: u64,
}

/// Everything a level contributes to the old-space accounting of its
/// multiples.
pub struct LevelSummary {
    pub s_new: usize,
    /// Orbits of dimension <= MAX_DIM, sorted by (dimension, traces);
    /// position i carries the i-th label letter.
    pub orbits: Vec<OrbitData>,
    /// New-space dimension not covered by the recorded orbits.
    pub big_new_dim: usize,
}

pub type Registry = BTreeMap<u32, LevelSummary>;

/// Computes the level's summary. The registry must already hold every
/// smaller level.
pub fn process_level(level: u32, registry: &Registry) -> LevelSummary {
    let s_new = relations::new_dimension(level) as usize;
    if s_new == 0 {
        return LevelSummary {
            s_new,
            orbits: Vec::new(),
            big_new_dim: 0,
        };
    }
    let ctx = LevelContext::build(level, s_new, registry);
    for retry in 0..MAX_LEVEL_RETRIES {
        let first = run_sweep(&ctx, 2 * retry);
        let second = run_sweep(&ctx, 2 * retry + 1);
        if first == second {
            let found: usize = first.iter().map(|o| o.dimension).sum();
            assert!(
                found <= s_new,
                "level {level}: found orbit dimensions exceed the new-space dimension"
            );
            return LevelSummary {
                s_new,
                orbits: first,
                big_new_dim: s_new - found,
            };
        }
        eprintln!("level {level}: sweeps disagree, retrying with fresh randomness");
    }
    panic!("level {level}: independent sweeps kept disagreeing");
}

/// Per-level immutable data shared by both sweeps.
struct LevelContext<'r> {
    level: u32,
    p1: P1,
    pres: Presentation,
    dim: usize,
    s_new: usize,
    /// Degree of the charpoly quotient after removing recorded old
    /// orbits; it still contains the boundary part and any unrecorded
    /// large orbits.
    expected_quot_deg: usize,
    data_bound: u64,
    /// (sigma_0(N/M), orbit) for every recorded orbit at a proper divisor
    /// level M.
    old_orbits: Vec<(u32, &'r OrbitData)>,
    /// Fast reduction path when every row entry fits in i64.
    rows_small: Option<Vec<Option<(Vec<i64>, i64)>>>,
    hecke_cache: RefCell<HashMap<(i64, u32), Rc<BTreeMap<u32, i64>>>>,
}

impl<'r> LevelContext<'r> {
    fn build(level: u32, s_new: usize, registry: &'r Registry) -> LevelContext<'r> {
        let p1 = P1::new(level);
        let pres = relations::presentation(&p1);
        let genus = relations::genus(level) as usize;
        let nu_plus = relations::cusp_star_orbits(level) as usize;
        assert_eq!(
            pres.dimension,
            genus + nu_plus - 1,
            "level {level}: presentation dimension disagrees with the trace formula"
        );
        let sturm = sturm_bound(level, 2).expect("weight 2").bound;
        let data_bound = (2 * sturm).max(100);

        let mut old_orbits = Vec::new();
        let mut old_total = 0usize;
        let mut old_small = 0usize;
        for (&m_level, summary) in registry.range(..level) {
            if level % m_level != 0 || summary.s_new == 0 {
                continue;
            }
            let sigma0 = relations::divisor_count(level / m_level) as u32;
            for orbit in &summary.orbits {
                old_orbits.push((sigma0, orbit));
                old_small += sigma0 as usize * orbit.dimension;
            }
            old_total += sigma0 as usize * summary.s_new;
        }
        assert_eq!(
            genus,
            old_total + s_new,
            "level {level}: cuspidal dimension accounting is inconsistent"
        );

        let rows_small = small_rows(&pres);
        let dim = genus + nu_plus - 1;
        LevelContext {
            level,
            p1,
            pres,
            dim,
            s_new,
            expected_quot_deg: dim - old_small,
            data_bound,
            old_orbits,
            rows_small,
            hecke_cache: RefCell::new(HashMap::new()),
        }
    }

    /// Count map of T_p (or U_p at bad p) on the symbol at `rep`, cached.
    fn hecke_map(&self, p: i64, rep: u32) -> Rc<BTreeMap<u32, i64>> {
        let mut cache = self.hecke_cache.borrow_mut();
        cache
            .entry((p, rep))
            .or_insert_with(|| Rc::new(modsym::hecke_count_map(&self.p1, rep, p)))
            .clone()
    }

    /// Presentation rows reduced mod q, or None when q divides one of the
    /// denominators.
    fn rows_mod_q(&self, q: u64) -> Option<Vec<Option<Vec<u64>>>> {
        let Some(small) = &self.rows_small else {
            return modsym::rows_mod_q(&self.pres, q);
        };
        let mut out = Vec::with_capacity(small.len());
        for row in small {
            match row {
                None => out.push(None),
                Some((nums, den)) => {
                    let den_q = polyu64::reduce_i64(*den, q);
                    if den_q == 0 {
                        return None;
                    }
                    let inv = polyu64::invmod(den_q, q);
                    out.push(Some(
                        nums.iter()
                            .map(|&v| polyu64::mulmod(polyu64::reduce_i64(v, q), inv, q))
                            .collect(),
                    ));
                }
            }
        }
        Some(out)
    }

    fn data_primes(&self) -> Vec<u64> {
        primes_up_to(self.data_bound)
    }
}

/// i64 copies of the presentation rows when every entry fits.
fn small_rows(pres: &Presentation) -> Option<Vec<Option<(Vec<i64>, i64)>>> {
    let mut out = Vec::with_capacity(pres.rows.len());
    for row in &pres.rows {
        match row {
            None => out.push(None),
            Some((nums, den)) => {
                let nums: Option<Vec<i64>> = nums.iter().map(|v| v.to_i64()).collect();
                out.push(Some((nums?, den.to_i64()?)));
            }
        }
    }
    Some(out)
}

fn run_sweep(ctx: &LevelContext, sweep: u32) -> Vec<OrbitData> {
    for attempt in 0..MAX_SWEEP_ATTEMPTS {
        match run_attempt(ctx, sweep, attempt) {
            Ok(orbits) => return orbits,
            Err(reason) => {
                eprintln!(
                    "level {}: attempt {attempt} of sweep {sweep} restarted: {reason}",
                    ctx.level
                );
            }
        }
    }
    panic!("level {}: no attempt completed cleanly", ctx.level);
}

/// One random Hecke combination together with its exact consequences.
struct Combo {
    /// Strict upper bound for |any cuspidal eigenvalue| of the combination.
    lambda: i64,
    /// Upper bound for |any eigenvalue| at all, boundary part included:
    /// sum of w * (p + 1).
    root_bound: i64,
    /// Weighted count map per basis element.
    merged: Vec<BTreeMap<u32, i64>>,
    /// Exact combination charpoly and multiplicity sigma_0(N/M) for each
    /// recorded old orbit.
    old_factors: Vec<(IntPoly, u32)>,
}

fn run_attempt(ctx: &LevelContext, sweep: u32, attempt: u32) -> Result<Vec<OrbitData>, String> {
    let combo = build_combo(ctx, sweep, attempt);
    let mut stream = PrimeStream::new();

    let c_quot = crt_quotient(ctx, &combo, &mut stream);

    let factor_seed = seed_mix(ctx.level, sweep, attempt) ^ 0x6661_63746f72;
    let factors = find_small_factors(&c_quot, combo.lambda, &mut stream, factor_seed)?;

    let mut orbits = Vec::new();
    for m in &factors {
        if let Some(orbit) = extract_orbit(ctx, &combo, &c_quot, m, &mut stream) {
            orbits.push(orbit);
        }
    }
    let found: usize = orbits.iter().map(|o| o.dimension).sum();
    assert!(
        found <= ctx.s_new,
        "level {}: extracted dimensions exceed the new space",
        ctx.level
    );
    orbits.sort_by(|a, b| (a.dimension, &a.traces).cmp(&(b.dimension, &b.traces)));
    Ok(orbits)
}

fn seed_mix(level: u32, sweep: u32, attempt: u32) -> u64 {
    0x6f72_6269_7473_u64 ^ (u64::from(level) << 24) ^ (u64::from(sweep) << 8) ^ u64::from(attempt)
}

fn build_combo(ctx: &LevelContext, sweep: u32, attempt: u32) -> Combo {
    // Escalate the number of combination primes on repeated soft failures:
    // a persistent eigenvalue collision cannot survive a changed prime set.
    let count = 6 + 2 * ((attempt / 4) as usize).min(2);
    let primes: Vec<i64> = primes_up_to(200)
        .into_iter()
        .filter(|&p| u64::from(ctx.level) % p != 0)
        .take(count)
        .map(|p| p as i64)
        .collect();
    assert_eq!(primes.len(), count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed_mix(ctx.level, sweep, attempt));
    let weights: Vec<i64> = primes
        .iter()
        .map(|_| rng.gen_range(1..=(1i64 << COMBO_WEIGHT_BITS)))
        .collect();
    // |sum w_i sigma(a_{p_i})| <= sum w_i * 2 sqrt(p_i) < sum w_i (isqrt(4 p_i) + 1).
    let lambda: i64 = primes
        .iter()
        .zip(&weights)
        .map(|(&p, &w)| w * ((4 * p).sqrt() + 1))
        .sum();
    // Boundary eigenvalues are sums of unit-modulus pairs (psi(p), p psi(p)),
    // so everything in the space is bounded by sum w (p + 1).
    let root_bound: i64 = primes.iter().zip(&weights).map(|(&p, &w)| w * (p + 1)).sum();

    let merged: Vec<BTreeMap<u32, i64>> = ctx
        .pres
        .basis_reps
        .iter()
        .map(|&rep| {
            let mut acc: BTreeMap<u32, i64> = BTreeMap::new();
            for (&p, &w) in primes.iter().zip(&weights) {
                for (&idx, &cnt) in ctx.hecke_map(p, rep).iter() {
                    *acc.entry(idx).or_insert(0) += w * cnt;
                }
            }
            acc.retain(|_, v| *v != 0);
            acc
        })
        .collect();

    let old_factors: Vec<(IntPoly, u32)> = ctx
        .old_orbits
        .iter()
        .map(|(sigma0, orbit)| (combo_charpoly_of_orbit(orbit, &primes, &weights), *sigma0))
        .collect();

    Combo {
        lambda,
        root_bound,
        merged,
        old_factors,
    }
}

/// Exact charpoly over Z of sum w_i a_{p_i} acting on a recorded orbit's
/// coefficient field.
fn combo_charpoly_of_orbit(orbit: &OrbitData, primes: &[i64], weights: &[i64]) -> IntPoly {
    let mut acc: RatPoly = Vec::new();
    for (&p, &w) in primes.iter().zip(weights) {
        let (nums, den) = orbit
            .eigenvalues
            .get(&(p as u64))
            .expect("combination primes lie within every stored data bound");
        let coords: RatPoly = nums
            .iter()
            .map(|n| BigRational::new(n.clone(), den.clone()))
            .collect();
        acc = exact::rp_add(&acc, &exact::rp_scale(&coords, &BigRational::from_integer(w.into())));
    }
    let mat = mult_matrix(&acc, &orbit.field_poly);
    exact::rp_to_int(&exact::ratmat_charpoly(&mat))
        .expect("an integer combination of eigenvalues has an integral charpoly")
}

/// Matrix of multiplication by `elem` on Q[u]/(modulus) in the power basis.
fn mult_matrix(elem: &RatPoly, modulus: &IntPoly) -> Vec<Vec<BigRational>> {
    let d = modulus.degree().expect("positive-degree modulus");
    let mut rows = vec![vec![BigRational::zero(); d]; d];
    let x: RatPoly = vec![BigRational::zero(), BigRational::one()];
    let mut power: RatPoly = vec![BigRational::one()];
    for k in 0..d {
        let col = exact::rp_reduce(&exact::rp_mul(elem, &power), modulus);
        for (i, row) in rows.iter_mut().enumerate() {
            if let Some(v) = col.get(i) {
                row[k] = v.clone();
            }
        }
        power = exact::rp_reduce(&exact::rp_mul(&power, &x), modulus);
    }
    rows
}

/// Norm of an element of Q[u]/(modulus): (-1)^d times the constant term of
/// its multiplication charpoly.
fn norm_in(elem: &RatPoly, modulus: &IntPoly) -> BigRational {
    let d = modulus.degree().expect("positive-degree modulus");
    let chi = exact::ratmat_charpoly(&mult_matrix(elem, modulus));
    if d % 2 == 0 {
        chi[0].clone()
    } else {
        -chi[0].clone()
    }
}

/// Deterministic stream of primes just above 2^61.
struct PrimeStream {
    next: u64,
}

impl PrimeStream {
    fn new() -> PrimeStream {
        PrimeStream { next: (1 << 61) + 1 }
    }

    fn next_prime(&mut self) -> u64 {
        loop {
            let candidate = self.next;
            self.next += 2;
            if is_prime(candidate) {
                return candidate;
            }
        }
    }
}

/// Reduces a (possibly negative) big integer into [0, q).
fn reduce_bigint(v: &BigInt, q: u64) -> u64 {
    v.mod_floor(&BigInt::from(q))
        .to_u64()
        .expect("residue fits in u64")
}

fn reduce_intpoly(p: &IntPoly, q: u64) -> Poly {
    let mut out: Poly = p.coeffs().iter().map(|c| reduce_bigint(c, q)).collect();
    while out.last() == Some(&0) {
        out.pop();
    }
    out
}

/// Exact charpoly of the combination with the recorded old orbits divided
/// out: CRT over enough word-size primes to cover the coefficient bound
/// (1 + root_bound)^deg.
fn crt_quotient(ctx: &LevelContext, combo: &Combo, stream: &mut PrimeStream) -> IntPoly {
    let deg = ctx.expected_quot_deg;
    let root_bound: BigInt = BigInt::from(combo.root_bound) + 1;
    let bound = BigInt::from(2) * root_bound.pow(deg as u32);
    let mut chosen: Vec<(u64, Vec<Option<Vec<u64>>>)> = Vec::new();
    let mut product = BigInt::one();
    while product <= bound {
        let q = stream.next_prime();
        let Some(rows) = ctx.rows_mod_q(q) else {
            continue;
        };
        product *= BigInt::from(q);
        chosen.push((q, rows));
    }
    let level = ctx.level;
    let dim = ctx.dim;
    let residues: Vec<Poly> = chosen
        .par_iter()
        .map(|(q, rows)| quotient_residues_mod_q(level, dim, deg, combo, *q, rows))
        .collect();
    let mut coeffs = Vec::with_capacity(deg + 1);
    for k in 0..=deg {
        let pairs: Vec<(u64, u64)> = residues
            .iter()
            .zip(&chosen)
            .map(|(r, (q, _))| (r[k], *q))
            .collect();
        let (value, _) = exact::crt_symmetric(&pairs);
        coeffs.push(value);
    }
    let poly = IntPoly::new(coeffs);
    assert_eq!(
        poly.degree(),
        Some(deg),
        "level {level}: quotient charpoly degree"
    );
    assert!(poly.is_monic(), "level {level}: quotient charpoly not monic");
    poly
}

/// Charpoly of the combination mod q with the recorded old factors divided
/// out; every division must be exact.
fn quotient_residues_mod_q(
    level: u32,
    dim: usize,
    expected_deg: usize,
    combo: &Combo,
    q: u64,
    rows: &[Option<Vec<u64>>],
) -> Poly {
    let t = modsym::operator_matrix(&combo.merged, rows, dim, q);
    let mut c = linalg::charpoly(&t);
    for (poly, mult) in &combo.old_factors {
        let pq = reduce_intpoly(poly, q);
        for _ in 0..*mult {
            let (quo, rem) = polyu64::divrem_monic(&c, &pq, q);
            assert!(
                rem.is_empty(),
                "level {level}: old-space factor does not divide the charpoly mod {q}"
            );
            c = quo;
        }
    }
    assert_eq!(
        polyu64::deg(&c),
        Some(expected_deg),
        "level {level}: unexpected quotient degree mod {q}"
    );
    let mut c = c;
    c.resize(expected_deg + 1, 0);
    c
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k.min(n - k) {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// Roots of every factor of c_quot are eigenvalues, so a monic factor of
/// degree m has k-th-from-top coefficient bounded by C(m, k) lambda^k.
fn coeff_bounds_ok(h: &IntPoly, lambda: i64) -> bool {
    let m = h.degree().expect("nonzero factor");
    let lam = BigInt::from(lambda);
    (0..m).all(|j| {
        let k = m - j;
        h.coeff(j).abs() <= binomial(m, k) * lam.pow(k as u32)
    })
}

/// Irreducible monic integer factors of degree <= MAX_DIM dividing c_quot
/// with multiplicity exactly one. A factor of multiplicity >= 2 in the
/// quotient is an eigenvalue collision and soft-fails the attempt.
fn find_small_factors(
    c_quot: &IntPoly,
    lambda: i64,
    stream: &mut PrimeStream,
    seed: u64,
) -> Result<Vec<IntPoly>, String> {
    let deg = c_quot.degree().expect("monic quotient");
    if deg == 0 {
        return Ok(Vec::new());
    }
    let mut candidates: BTreeMap<Vec<BigInt>, IntPoly> = BTreeMap::new();
    for trial in 0..2u64 {
        let q0 = stream.next_prime();
        let cq = reduce_intpoly(c_quot, q0);
        let pieces = polyu64::small_factors(&cq, q0, MAX_DIM, seed ^ trial);
        let simple: Vec<&Poly> = pieces
            .iter()
            .filter(|(p, mult)| *mult == 1 && polyu64::deg(p).is_some_and(|d| d <= MAX_DIM))
            .map(|(p, _)| p)
            .collect();
        for subset in small_subsets(&simple) {
            let mut prod: Poly = vec![1];
            for &i in &subset {
                prod = polyu64::mul(&prod, simple[i], q0);
            }
            let m = polyu64::deg(&prod).expect("nonempty product");
            let candidate = if m == deg {
                c_quot.clone()
            } else {
                match lift_candidate(c_quot, &cq, &prod, q0) {
                    Some(c) => c,
                    None => continue,
                }
            };
            if !coeff_bounds_ok(&candidate, lambda) {
                continue;
            }
            let (_, rem) = c_quot.divrem_monic(&candidate);
            if !rem.coeffs().is_empty() {
                continue;
            }
            candidates.insert(candidate.coeffs().to_vec(), candidate);
        }
    }

    let root_prime = stream.next_prime();
    let mut found = Vec::new();
    for candidate in candidates.into_values() {
        let mult = z_multiplicity(c_quot, &candidate);
        if mult >= 2 {
            return Err(format!(
                "degree-{} factor has multiplicity {mult}: suspected eigenvalue collision",
                candidate.degree().unwrap_or(0)
            ));
        }
        if is_irreducible_small(&candidate, lambda, root_prime, seed) {
            found.push(candidate);
        }
    }
    found.sort_by(|a, b| {
        (a.degree(), a.coeffs()).cmp(&(b.degree(), b.coeffs()))
    });
    Ok(found)
}

/// Index subsets of the simple pieces with total degree <= MAX_DIM.
fn small_subsets(simple: &[&Poly]) -> Vec<Vec<usize>> {
    let degree = |i: usize| polyu64::deg(simple[i]).expect("nonzero piece");
    let mut out = Vec::new();
    for i in 0..simple.len() {
        if degree(i) > MAX_DIM {
            continue;
        }
        out.push(vec![i]);
        for j in i + 1..simple.len() {
            if degree(i) + degree(j) > MAX_DIM {
                continue;
            }
            out.push(vec![i, j]);
            for k in j + 1..simple.len() {
                if degree(i) + degree(j) + degree(k) <= MAX_DIM {
                    out.push(vec![i, j, k]);
                }
            }
        }
    }
    out
}

/// Hensel-lifts a monic factor of c_quot from q0 to q0^2 and centers the
/// coefficients into the symmetric range.
fn lift_candidate(c_quot: &IntPoly, cq_mod: &Poly, prod: &Poly, q0: u64) -> Option<IntPoly> {
    let (cofactor, rem) = polyu64::divrem_monic(cq_mod, prod, q0);
    debug_assert!(rem.is_empty());
    let to_modpoly = |p: &Poly| ModPoly::new(q0, 1, p.iter().map(|&c| BigInt::from(c)).collect());
    let blocks = [to_modpoly(prod), to_modpoly(&cofactor)];
    let lifted = hensel_lift_blocks(c_quot, &blocks, 2).ok()?;
    let modulus = BigInt::from(q0) * BigInt::from(q0);
    let half = &modulus / 2;
    let coeffs: Vec<BigInt> = lifted[0]
        .coeffs()
        .iter()
        .map(|c| {
            if c > &half {
                c - &modulus
            } else {
                c.clone()
            }
        })
        .collect();
    let mut coeffs = coeffs;
    // The lift of a monic block keeps degree; restore the trimmed leading 1.
    let target_deg = polyu64::deg(prod).expect("nonzero");
    coeffs.resize(target_deg + 1, BigInt::zero());
    coeffs[target_deg] = BigInt::one();
    Some(IntPoly::new(coeffs))
}

fn z_multiplicity(c_quot: &IntPoly, factor: &IntPoly) -> u32 {
    let mut mult = 0;
    let mut current = c_quot.clone();
    loop {
        let (quo, rem) = current.divrem_monic(factor);
        if !rem.coeffs().is_empty() {
            return mult;
        }
        mult += 1;
        current = quo;
        if current.degree().is_none() {
            return mult;
        }
    }
}

/// Degree <= 3 monic integral polynomials are irreducible over Q exactly
/// when they have no integer root; candidate roots are found modulo one
/// word-size prime and certified by exact evaluation.
fn is_irreducible_small(h: &IntPoly, lambda: i64, q: u64, seed: u64) -> bool {
    let d = h.degree().expect("nonzero factor");
    if d == 1 {
        return true;
    }
    let hq = reduce_intpoly(h, q);
    for root in polyu64::roots(&hq, q, seed) {
        // Any true integer root is an eigenvalue, hence within lambda of 0,
        // and q > 2 lambda makes the symmetric lift exact.
        let lifted = if root > q / 2 {
            BigInt::from(root) - BigInt::from(q)
        } else {
            BigInt::from(root)
        };
        if lifted.abs() <= BigInt::from(lambda) && h.evaluate(&lifted).is_zero() {
            return false;
        }
    }
    true
}

/// Eigenvalue data collected at one split prime.
struct SplitData {
    q: u64,
    /// Per data prime p: the scaled interpolant F_p mod q, where
    /// F_p(x) = sum_j a_p^(j) m(x)/(x - u_j) has integer coefficients and
    /// a_p = F_p(u)/m'(u); padded to exactly d coefficients.
    fp: BTreeMap<u64, Poly>,
}

/// Number of split primes combined by CRT. Three 61-bit primes cover the
/// proven coefficient bound d (1 + p) max_k |e_k| < 2^90 with room to
/// spare; a fourth held-out prime re-checks every coefficient.
const SPLIT_PRIMES_USED: usize = 3;

/// Reconstructs the eigenvalue system attached to an irreducible factor of
/// the quotient, or None when the system fails the newform certificates
/// (a boundary eigensystem, possible at non-squarefree levels).
fn extract_orbit(
    ctx: &LevelContext,
    combo: &Combo,
    c_quot: &IntPoly,
    m: &IntPoly,
    stream: &mut PrimeStream,
) -> Option<OrbitData> {
    let d = m.degree().expect("orbit factor has positive degree");
    let data_primes = ctx.data_primes();
    let mut splits: Vec<SplitData> = Vec::new();
    let mut scanned = 0usize;
    while splits.len() < SPLIT_PRIMES_USED + 1 {
        let q = stream.next_prime();
        scanned += 1;
        assert!(
            scanned <= MAX_SPLIT_PRIMES * 8,
            "level {}: too few usable split primes for a degree-{d} orbit",
            ctx.level
        );
        if let Some(split) = try_split_prime(ctx, combo, c_quot, m, q, &data_primes) {
            splits.push(split);
        }
    }
    let scaled = reconstruct_scaled(
        &splits[..SPLIT_PRIMES_USED],
        &splits[SPLIT_PRIMES_USED],
        d,
        &data_primes,
    )
    .unwrap_or_else(|| {
        panic!(
            "level {}: held-out split prime contradicts the eigenvalue reconstruction",
            ctx.level
        )
    });

    // a_p = F_p(u) / m'(u) in Q[u]/(m); m is squarefree, so m'(u) is a unit.
    let inv_der = exact::rp_invmod(&rat_poly_of(&m.derivative()), m)
        .expect("squarefree factor has invertible derivative");
    let mut eigen_u: BTreeMap<u64, RatPoly> = BTreeMap::new();
    for (&p, coeffs) in &scaled {
        let fp: RatPoly = coeffs
            .iter()
            .map(|c| BigRational::from_integer(c.clone()))
            .collect();
        let mut coords = exact::rp_reduce(&exact::rp_mul(&fp, &inv_der), m);
        coords.resize(d, BigRational::zero());
        eigen_u.insert(p, coords);
    }

    if !is_newform_system(ctx.level, m, &eigen_u) {
        return None;
    }
    Some(finalize_orbit(ctx, m, &eigen_u, &data_primes))
}

fn rat_poly_of(p: &IntPoly) -> RatPoly {
    p.coeffs()
        .iter()
        .map(|c| BigRational::from_integer(c.clone()))
        .collect()
}

/// Basis-independent certificates distinguishing a newform eigensystem
/// from a boundary one: Weil bounds at good primes, the forced shapes at
/// bad primes, and nonvanishing Frobenius norms everywhere. Integrality is
/// not optional even for boundary systems, so its failure panics.
fn is_newform_system(level: u32, m: &IntPoly, eigen: &BTreeMap<u64, RatPoly>) -> bool {
    let d = m.degree().expect("positive degree");
    for (&p, coords) in eigen {
        let chi = exact::ratmat_charpoly(&mult_matrix(coords, m));
        let chi_int = exact::rp_to_int(&chi).unwrap_or_else(|| {
            panic!("level {level}: eigenvalue at p = {p} is not an algebraic integer")
        });
        let level_u64 = u64::from(level);
        if level_u64 % p != 0 {
            for k in 0..d {
                let c = chi_int.coeff(k);
                let bound = binomial(d, d - k);
                if c.pow(2) > bound.pow(2) * BigInt::from(4 * p).pow((d - k) as u32) {
                    return false;
                }
            }
        } else if (level_u64 / p) % p != 0 {
            // (x - 1)^d or (x + 1)^d, i.e. the scalar 1 or -1.
            let plus = scalar_charpoly(d, 1);
            let minus = scalar_charpoly(d, -1);
            if chi_int != plus && chi_int != minus {
                return false;
            }
        } else if (0..d).any(|k| !chi_int.coeff(k).is_zero()) {
            return false; // must be x^d, the scalar 0
        }
        if chi_int.evaluate(&BigInt::from(p + 1)).is_zero() {
            return false;
        }
    }
    true
}

/// (x - s)^d for a small integer scalar s.
fn scalar_charpoly(d: usize, s: i64) -> IntPoly {
    let mut poly = IntPoly::one();
    let lin = IntPoly::from_i64s(&[-s, 1]);
    for _ in 0..d {
        poly = multiply_int(&poly, &lin);
    }
    poly
}

fn multiply_int(a: &IntPoly, b: &IntPoly) -> IntPoly {
    let (Some(da), Some(db)) = (a.degree(), b.degree()) else {
        return IntPoly::zero();
    };
    let mut coeffs = vec![BigInt::zero(); da + db + 1];
    for (i, ca) in a.coeffs().iter().enumerate() {
        for (j, cb) in b.coeffs().iter().enumerate() {
            coeffs[i + j] += ca * cb;
        }
    }
    IntPoly::new(coeffs)
}

/// Extracts the scaled interpolant F_p mod q for every data prime, or
/// None when q is unsuitable (m not totally split there, a repeated root
/// of the full charpoly, or a row denominator collision). The gates are
/// ordered cheapest first: most primes fail the splitting test, which
/// costs microseconds, while reducing the presentation rows does not.
fn try_split_prime(
    ctx: &LevelContext,
    combo: &Combo,
    c_quot: &IntPoly,
    m: &IntPoly,
    q: u64,
    data_primes: &[u64],
) -> Option<SplitData> {
    let d = m.degree().expect("positive degree");
    let mq = reduce_intpoly(m, q);
    let roots = polyu64::roots(&mq, q, q ^ 0x726f_6f74);
    if roots.len() != d {
        return None;
    }

    // Full charpoly mod q from its certified factorization; each root of m
    // must be a simple root so its eigenspace is one-dimensional.
    let mut cm = reduce_intpoly(c_quot, q);
    for (poly, mult) in &combo.old_factors {
        let pq = reduce_intpoly(poly, q);
        for _ in 0..*mult {
            cm = polyu64::mul(&cm, &pq, q);
        }
    }
    let cm_der = polyu64::derivative(&cm, q);
    if roots.iter().any(|&a| polyu64::eval(&cm_der, a, q) == 0) {
        return None;
    }

    let rows = ctx.rows_mod_q(q)?;
    let t = modsym::operator_matrix(&combo.merged, &rows, ctx.dim, q);
    let mut per_root: Vec<BTreeMap<u64, u64>> = Vec::with_capacity(d);
    for &alpha in &roots {
        let eigen = linalg::left_nullspace(&t, alpha);
        assert_eq!(
            eigen.len(),
            1,
            "level {}: eigenspace of a simple root must be a line",
            ctx.level
        );
        let w = &eigen[0];
        let z: Vec<u64> = (0..ctx.p1.len())
            .map(|idx| {
                rows[idx]
                    .as_ref()
                    .map(|row| linalg::dot(w, row, q))
                    .unwrap_or(0)
            })
            .collect();
        let j0 = (0..ctx.dim).find(|&j| w[j] != 0).expect("nonzero eigenvector");
        let j1 = (j0 + 1..ctx.dim).find(|&j| w[j] != 0);
        let inv0 = polyu64::invmod(w[j0], q);
        let x0 = ctx.pres.basis_reps[j0];
        let mut values = BTreeMap::new();
        for &p in data_primes {
            let num0 = pair_map(&ctx.hecke_map(p as i64, x0), &z, q);
            if let Some(j1) = j1 {
                // The eigenline is preserved by every Hecke operator, so a
                // second pairing must produce the same eigenvalue.
                let x1 = ctx.pres.basis_reps[j1];
                let num1 = pair_map(&ctx.hecke_map(p as i64, x1), &z, q);
                assert_eq!(
                    polyu64::mulmod(num0, w[j1], q),
                    polyu64::mulmod(num1, w[j0], q),
                    "level {}: inconsistent eigenvalue pairings at p = {p}, q = {q}",
                    ctx.level
                );
            }
            values.insert(p, polyu64::mulmod(num0, inv0, q));
        }
        per_root.push(values);
    }

    // F_p(x) = sum_j value_j * m(x)/(x - root_j) is symmetric in the
    // conjugates, so its residues combine across different q without any
    // root matching.
    let quotients: Vec<Poly> = roots
        .iter()
        .map(|&alpha| {
            let lin = vec![polyu64::submod(0, alpha, q), 1];
            let (quo, rem) = polyu64::divrem_monic(&mq, &lin, q);
            assert!(rem.is_empty(), "roots of m must divide m");
            quo
        })
        .collect();
    let mut fp = BTreeMap::new();
    for &p in data_primes {
        let mut acc = vec![0u64; d];
        for (values, quotient) in per_root.iter().zip(&quotients) {
            let v = values[&p];
            for (slot, &c) in acc.iter_mut().zip(quotient) {
                *slot = polyu64::macmod(*slot, v, c, q);
            }
        }
        fp.insert(p, acc);
    }
    Some(SplitData { q, fp })
}

/// Pairing of a count map against a precomputed z vector.
fn pair_map(map: &BTreeMap<u32, i64>, z: &[u64], q: u64) -> u64 {
    let mut acc = 0u64;
    for (&idx, &cnt) in map {
        let c = polyu64::reduce_i64(cnt, q);
        if c != 0 {
            acc = polyu64::macmod(acc, c, z[idx as usize], q);
        }
    }
    acc
}

/// CRT lift of every F_p coefficient to its symmetric representative,
/// checked against a held-out split prime. The coefficients are bounded
/// by d * (1 + p) * max_k |e_k(other roots)|, far below half the product
/// of the moduli, so a held-out mismatch indicates a bug rather than
/// insufficient precision; the caller treats None as fatal.
fn reconstruct_scaled(
    used: &[SplitData],
    verify: &SplitData,
    d: usize,
    data_primes: &[u64],
) -> Option<BTreeMap<u64, Vec<BigInt>>> {
    let mut out = BTreeMap::new();
    for &p in data_primes {
        let mut coeffs: Vec<BigInt> = Vec::with_capacity(d);
        for k in 0..d {
            let pairs: Vec<(u64, u64)> = used.iter().map(|s| (s.fp[&p][k], s.q)).collect();
            let (value, _modulus) = exact::crt_symmetric(&pairs);
            if reduce_bigint(&value, verify.q) != verify.fp[&p][k] {
                return None;
            }
            coeffs.push(value);
        }
        out.insert(p, coeffs);
    }
    Some(out)
}

fn finalize_orbit(
    ctx: &LevelContext,
    m: &IntPoly,
    eigen_u: &BTreeMap<u64, RatPoly>,
    data_primes: &[u64],
) -> OrbitData {
    let d = m.degree().expect("positive degree");
    let (field_poly, eigen) = if d == 1 {
        (IntPoly::x(), eigen_u.clone())
    } else {
        select_generator(ctx.level, m, eigen_u)
    };
    certify_orbit(ctx.level, d, &field_poly, &eigen);
    let traces = trace_vector(ctx.level, &field_poly, &eigen);

    let mut eigenvalues = BTreeMap::new();
    for (&p, coords) in &eigen {
        let mut den = BigInt::one();
        for c in coords {
            den = den.lcm(c.denom());
        }
        let mut nums: Vec<BigInt> = coords
            .iter()
            .map(|c| c.numer() * (&den / c.denom()))
            .collect();
        nums.resize(d, BigInt::zero());
        eigenvalues.insert(p, (nums, den));
    }
    assert_eq!(eigenvalues.len(), data_primes.len());

    OrbitData {
        level: ctx.level,
        dimension: d,
        field_poly,
        eigenvalues,
        traces,
        data_bound: ctx.data_bound,
    }
}

/// Picks a small generator theta of the coefficient field from the
/// eigenvalues themselves, preferring one whose order Z[theta] is maximal
/// at every prime dividing the norm-gcd window, and rewrites all
/// eigenvalue coordinates in the power basis of theta.
fn select_generator(
    level: u32,
    m: &IntPoly,
    eigen_u: &BTreeMap<u64, RatPoly>,
) -> (IntPoly, BTreeMap<u64, RatPoly>) {
    let d = m.degree().expect("positive degree");

    // gcd over odd good p of |Norm(1 + p - a_p)|: the primes where index
    // divisors would matter downstream.
    let mut window = BigInt::zero();
    for (&p, coords) in eigen_u {
        if p == 2 || u64::from(level) % p == 0 {
            continue;
        }
        let mut shifted = exact::rp_scale(coords, &BigRational::from_integer((-1).into()));
        let one_plus_p = BigRational::from_integer(BigInt::from(p + 1));
        if shifted.is_empty() {
            shifted.push(one_plus_p);
        } else {
            shifted[0] += one_plus_p;
        }
        let norm = norm_in(&shifted, m);
        assert!(
            !norm.is_zero(),
            "level {level}: Frobenius norm vanished at a good prime"
        );
        assert!(norm.denom().is_one());
        window = window.gcd(norm.numer());
    }
    assert!(!window.is_zero());
    let window_primes: Vec<u64> = factor_integer(&window)
        .expect("norm-gcd window factors")
        .into_iter()
        .map(|(ell, _)| ell)
        .collect();

    let singles: Vec<&RatPoly> = eigen_u.values().collect();
    let mut candidates: Vec<RatPoly> = singles.iter().map(|c| (*c).clone()).collect();
    for i in 0..singles.len().min(8) {
        for j in i + 1..singles.len().min(8) {
            candidates.push(exact::rp_add(singles[i], singles[j]));
            candidates.push(exact::rp_add(
                singles[i],
                &exact::rp_scale(singles[j], &BigRational::from_integer((-1).into())),
            ));
        }
    }

    let mut fallback: Option<(IntPoly, RatPoly)> = None;
    let mut chosen: Option<(IntPoly, RatPoly)> = None;
    for theta in candidates {
        let chi = exact::ratmat_charpoly(&mult_matrix(&theta, m));
        let chi_int = exact::rp_to_int(&chi)
            .expect("eigenvalue combinations are algebraic integers");
        let disc = resultant(&chi_int, &chi_int.derivative()).expect("resultant");
        if disc.is_zero() {
            continue; // theta does not generate the field
        }
        if fallback.is_none() {
            fallback = Some((chi_int.clone(), theta.clone()));
        }
        let field = NumberField::new(chi_int.clone()).expect("squarefree integral polynomial");
        let maximal = window_primes.iter().all(|&ell| {
            decompose_prime(&field, ell)
                .expect("prime decomposition")
                .maximal_at_ell()
        });
        if maximal {
            chosen = Some((chi_int, theta));
            break;
        }
    }
    let (field_poly, theta) = chosen
        .or(fallback)
        .expect("some eigenvalue combination must generate the coefficient field");

    // Change of basis: solve B x = c_p where column k of B holds the
    // u-basis coordinates of theta^k.
    let mut b = vec![vec![BigRational::zero(); d]; d];
    let mut power: RatPoly = vec![BigRational::one()];
    for k in 0..d {
        for (i, row) in b.iter_mut().enumerate() {
            if let Some(v) = power.get(i) {
                row[k] = v.clone();
            }
        }
        power = exact::rp_reduce(&exact::rp_mul(&power, &theta), m);
    }
    let eigen_theta = eigen_u
        .iter()
        .map(|(&p, coords)| {
            let mut rhs = coords.clone();
            rhs.resize(d, BigRational::zero());
            let solved = exact::solve_linear(&b, &rhs)
                .expect("theta generates, so the power basis matrix is invertible");
            (p, solved)
        })
        .collect();
    (field_poly, eigen_theta)
}

/// Exact certificates for a finished orbit: integral charpolys, Weil
/// bounds at good primes, the forced values at bad primes, and nonvanishing
/// Frobenius norms.
fn certify_orbit(
    level: u32,
    d: usize,
    field_poly: &IntPoly,
    eigen: &BTreeMap<u64, RatPoly>,
) {
    for (&p, coords) in eigen {
        let chi = exact::ratmat_charpoly(&mult_matrix(coords, field_poly));
        let chi_int = exact::rp_to_int(&chi).unwrap_or_else(|| {
            panic!("level {level}: a_{p} has a non-integral characteristic polynomial")
        });
        let level_u64 = u64::from(level);
        if level_u64 % p != 0 {
            // Weil: every conjugate has absolute value at most 2 sqrt(p).
            for k in 0..d {
                let c = chi_int.coeff(k);
                let bound = binomial(d, d - k);
                assert!(
                    c.pow(2) <= bound.pow(2) * BigInt::from(4 * p).pow((d - k) as u32),
                    "level {level}: Weil bound fails for a_{p}"
                );
            }
        } else if (level_u64 / p) % p != 0 {
            // p exactly divides the level: a_p is 1 or -1.
            let constant = coords.first().cloned().unwrap_or_else(BigRational::zero);
            assert!(
                coords.iter().skip(1).all(|c| c.is_zero())
                    && constant.denom().is_one()
                    && constant.numer().abs().is_one(),
                "level {level}: a_{p} must be +1 or -1 at a multiplicative prime"
            );
        } else {
            // p^2 divides the level: a_p = 0.
            assert!(
                coords.iter().all(|c| c.is_zero()),
                "level {level}: a_{p} must vanish at an additive prime"
            );
        }
        let norm_at_one_plus_p = chi_int.evaluate(&BigInt::from(p + 1));
        assert!(
            !norm_at_one_plus_p.is_zero(),
            "level {level}: Norm(1 + p - a_{p}) vanished"
        );
    }
}

/// Tr(a_n) for n = 1..=TRACE_COUNT via the Hecke recursion; each trace is
/// certified to be a rational integer.
fn trace_vector(level: u32, field_poly: &IntPoly, eigen: &BTreeMap<u64, RatPoly>) -> Vec<BigInt> {
    let d = field_poly.degree().expect("positive degree");
    let sums = power_sums(field_poly);
    let trace_of = |elem: &RatPoly| -> BigRational {
        elem.iter()
            .enumerate()
            .take(d)
            .map(|(k, c)| c * BigRational::from_integer(sums[k].clone()))
            .fold(BigRational::zero(), |acc, v| acc + v)
    };

    // a_{p^e} by the recursion; good p: a_p a_{p^{e-1}} - p a_{p^{e-2}},
    // bad p: a_p^e.
    let mut prime_powers: HashMap<(u64, u32), RatPoly> = HashMap::new();
    let mut power_of = |p: u64, e: u32, eigen: &BTreeMap<u64, RatPoly>| -> RatPoly {
        if let Some(v) = prime_powers.get(&(p, e)) {
            return v.clone();
        }
        let mut values: Vec<RatPoly> = vec![vec![BigRational::one()], eigen[&p].clone()];
        for k in 2..=e {
            let prev = &values[(k - 1) as usize];
            let a_p = &values[1];
            let mut next = exact::rp_reduce(&exact::rp_mul(a_p, prev), field_poly);
            if u64::from(level) % p != 0 {
                let before = &values[(k - 2) as usize];
                let scaled = exact::rp_scale(before, &BigRational::from_integer(BigInt::from(p)));
                next = exact::rp_add(
                    &next,
                    &exact::rp_scale(&scaled, &BigRational::from_integer((-1).into())),
                );
            }
            values.push(next);
        }
        for (k, v) in values.iter().enumerate() {
            prime_powers.insert((p, k as u32), v.clone());
        }
        values[e as usize].clone()
    };

    let mut traces = Vec::with_capacity(TRACE_COUNT as usize);
    for n in 1..=TRACE_COUNT {
        let mut elem: RatPoly = vec![BigRational::one()];
        let mut rest = n;
        let mut p = 2u64;
        while p * p <= rest {
            if rest % p == 0 {
                let mut e = 0u32;
                while rest % p == 0 {
                    rest /= p;
                    e += 1;
                }
                let factor = power_of(p, e, eigen);
                elem = exact::rp_reduce(&exact::rp_mul(&elem, &factor), field_poly);
            }
            p += 1;
        }
        if rest > 1 {
            let factor = power_of(rest, 1, eigen);
            elem = exact::rp_reduce(&exact::rp_mul(&elem, &factor), field_poly);
        }
        let tr = trace_of(&elem);
        assert!(
            tr.denom().is_one(),
            "level {level}: Tr(a_{n}) is not a rational integer"
        );
        traces.push(tr.numer().clone());
    }
    traces
}

/// Power sums s_k = Tr(theta^k) for k < d, from Newton's identities on the
/// defining polynomial.
fn power_sums(field_poly: &IntPoly) -> Vec<BigInt> {
    let d = field_poly.degree().expect("positive degree");
    let mut sums = vec![BigInt::from(d)];
    for k in 1..d {
        // s_k = -k c_{d-k} - sum_{i=1}^{k-1} c_{d-i} s_{k-i}
        let mut s = -BigInt::from(k) * field_poly.coeff(d - k);
        for i in 1..k {
            s -= field_poly.coeff(d - i) * &sums[k - i];
        }
        sums.push(s);
    }
    sums
}
