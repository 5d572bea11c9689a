//! The torsion pipeline: Frobenius data over prime windows, per-ell
//! lambda-adic analysis, predicted torsion orders, and survey aggregation
//! across a dataset.
//!
//! For a record with coefficient field F and eigenvalues a_p, the object of
//! study at a good prime p is P_p = 1 - a_p + p together with the positive
//! integer N(p) = |Norm_{F/Q}(P_p)|. The pipeline compares G = gcd_p N(p)
//! over a window of good primes with the prediction
//! T = prod_ell ell^(max_lambda f_lambda * n_lambda), where n_lambda is the
//! minimal lambda-adic valuation of P_p over the window with ell itself
//! removed.

use crate::arith::{factor_integer, int_valuation, primes_up_to};
use crate::error::{Error, Result};
use crate::newform::{sturm_bound, NewformRecord};
use crate::numfield::{decompose_prime, lambda_valuation, FieldElement};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Signed, Zero};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

/// Which primes enter the gcd and valuation windows: p <= bound, p coprime
/// to the level, and p != 2 unless explicitly included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeWindow {
    bound: u64,
    level: u32,
    include_p2: bool,
}

impl PrimeWindow {
    pub fn new(bound: u64, level: u32, include_p2: bool) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidWindow("level must be positive".into()));
        }
        if bound < 2 {
            return Err(Error::InvalidWindow(format!(
                "bound {bound} admits no primes"
            )));
        }
        Ok(PrimeWindow {
            bound,
            level,
            include_p2,
        })
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    fn admits(&self, p: u64) -> bool {
        (p != 2 || self.include_p2) && self.level as u64 % p != 0
    }

    /// Primes in the window, ascending.
    pub fn admitted(&self) -> Vec<u64> {
        primes_up_to(self.bound)
            .into_iter()
            .filter(|&p| self.admits(p))
            .collect()
    }

    /// The window with one further prime removed; used when analyzing ell,
    /// whose own Frobenius data must not influence its exponent.
    pub fn admitted_excluding(&self, ell: u64) -> Vec<u64> {
        self.admitted().into_iter().filter(|&p| p != ell).collect()
    }
}

/// Frobenius data at one good prime.
#[derive(Debug, Clone)]
pub struct FrobeniusData {
    p: u64,
    frobenius: FieldElement,
    norm: BigInt,
}

impl FrobeniusData {
    /// Builds P_p = 1 - a_p + p and N(p) = |Norm(P_p)|, insisting that the
    /// norm is a nonzero integer — anything else is corrupt input, since
    /// P_p is an algebraic integer with totally positive real embeddings
    /// for genuine weight-2 data.
    pub fn new(record: &NewformRecord, p: u64) -> Result<Self> {
        let a_p = record.eigenvalue(p).ok_or_else(|| {
            Error::MissingData(format!(
                "record {}: no eigenvalue stored for p = {p}",
                record.label()
            ))
        })?;
        let frobenius = record
            .field()
            .from_integer(BigInt::from(p) + 1)
            .sub(a_p)?;
        let norm = frobenius.norm();
        if !norm.denom().is_one() {
            return Err(Error::CorruptData(format!(
                "record {}: Norm(1 - a_p + p) at p = {p} is not an integer",
                record.label()
            )));
        }
        let norm = norm.numer().abs();
        if norm.is_zero() {
            return Err(Error::CorruptData(format!(
                "record {}: Norm(1 - a_p + p) vanishes at p = {p}",
                record.label()
            )));
        }
        Ok(FrobeniusData { p, frobenius, norm })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn frobenius(&self) -> &FieldElement {
        &self.frobenius
    }

    pub fn norm(&self) -> &BigInt {
        &self.norm
    }
}

/// gcd of the norms; zero only for an empty slice.
pub fn gcd_norms(data: &[FrobeniusData]) -> BigInt {
    data.iter().fold(BigInt::zero(), |acc, d| acc.gcd(&d.norm))
}

/// How the window bound is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundPolicy {
    /// Sturm bound of the record, extended minimally so the window admits
    /// at least two primes.
    Auto,
    /// Fixed bound; fails with missing-data when the record's stored
    /// eigenvalues cannot cover it.
    Explicit(u64),
}

/// One prime lambda above ell: ramification e, residue degree f, and the
/// minimal valuation n = min_p v_lambda(P_p) over the ell-free window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EllEntry {
    pub e: u32,
    pub f: u32,
    pub n: u64,
}

/// Everything the pipeline learned about one prime ell dividing G.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EllReport {
    pub ell: u64,
    /// ell divides the index [O_F : Z[theta]], so the order Z[theta] cannot
    /// resolve the primes above ell; the predicted exponent is 0 and the
    /// record's sharpness is unknown.
    pub unresolved: bool,
    pub entries: Vec<EllEntry>,
    /// max over lambda of f_lambda * n_lambda (0 when unresolved).
    pub predicted_exponent: u32,
    /// v_ell of gcd_p N(p) over the window without ell.
    pub gcd_exponent: u32,
}

impl EllReport {
    /// Whether the prediction meets the gcd at this ell; `None` while
    /// unresolved.
    pub fn sharp(&self) -> Option<bool> {
        if self.unresolved {
            None
        } else {
            Some(self.predicted_exponent == self.gcd_exponent)
        }
    }

    /// Single unramified prime above ell with full residue degree.
    pub fn inert(&self, dimension: u32) -> bool {
        self.entries.len() == 1
            && self.entries[0].e == 1
            && self.entries[0].f == dimension
    }
}

/// Three-valued sharpness: unknown whenever some ell stayed unresolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sharpness {
    True,
    False,
    Unknown,
}

impl std::fmt::Display for Sharpness {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let text = match self {
            Sharpness::True => "true",
            Sharpness::False => "false",
            Sharpness::Unknown => "unknown",
        };
        out.write_str(text)
    }
}

/// Full analysis of one record.
#[derive(Debug, Clone)]
pub struct TorsionAnalysis {
    pub label: String,
    pub level: u32,
    pub dimension: u32,
    /// The window bound actually used (after any automatic extension).
    pub bound: u64,
    pub window_primes: Vec<u64>,
    /// G = gcd of N(p) over the window.
    pub gcd_order: BigInt,
    /// T = the predicted torsion order.
    pub predicted_order: BigInt,
    pub sharp: Sharpness,
    /// Whether G is unchanged when the bound doubles (capped at the
    /// record's data bound).
    pub stabilized: bool,
    pub reports: Vec<EllReport>,
}

/// Analyzes one record end to end.
pub fn analyze_record(
    record: &NewformRecord,
    policy: BoundPolicy,
    include_p2: bool,
) -> Result<TorsionAnalysis> {
    let bound = resolve_bound(record, policy, include_p2)?;
    let window = PrimeWindow::new(bound, record.level(), include_p2)?;
    let admitted = window.admitted();
    if admitted.is_empty() {
        return Err(Error::InvalidWindow(format!(
            "record {}: no admitted primes up to {bound} for level {}",
            record.label(),
            record.level()
        )));
    }
    let missing: Vec<u64> = admitted
        .iter()
        .copied()
        .filter(|&p| record.eigenvalue(p).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingData(format!(
            "record {}: window bound {bound} needs eigenvalues at primes {missing:?} \
             beyond the stored bound {}",
            record.label(),
            record.data_bound()
        )));
    }

    let frobenius: Vec<FrobeniusData> = admitted
        .iter()
        .map(|&p| FrobeniusData::new(record, p))
        .collect::<Result<_>>()?;
    let gcd_order = gcd_norms(&frobenius);
    let stabilized = gcd_is_stable(record, &window, &gcd_order, include_p2)?;

    let mut reports = Vec::new();
    let mut predicted_order = BigInt::one();
    if !gcd_order.is_one() {
        for (ell, _) in factor_integer(&gcd_order)? {
            let report = ell_report(record, &frobenius, ell)?;
            predicted_order *= BigInt::from(ell).pow(report.predicted_exponent);
            reports.push(report);
        }
    }
    let sharp = if reports.iter().any(|r| r.unresolved) {
        Sharpness::Unknown
    } else if reports.iter().all(|r| r.sharp() == Some(true)) {
        Sharpness::True
    } else {
        Sharpness::False
    };

    Ok(TorsionAnalysis {
        label: record.label().to_string(),
        level: record.level(),
        dimension: record.dimension(),
        bound,
        window_primes: admitted,
        gcd_order,
        predicted_order,
        sharp,
        stabilized,
        reports,
    })
}

/// Applies the bound policy; Auto extends the Sturm bound until the window
/// admits two primes, and reports missing data when the record cannot
/// support that.
fn resolve_bound(record: &NewformRecord, policy: BoundPolicy, include_p2: bool) -> Result<u64> {
    match policy {
        BoundPolicy::Explicit(bound) => {
            if bound < 2 {
                return Err(Error::InvalidWindow(format!(
                    "bound {bound} admits no primes"
                )));
            }
            Ok(bound)
        }
        BoundPolicy::Auto => {
            let sturm = sturm_bound(record.level(), record.weight())?.bound.max(2);
            let window = PrimeWindow::new(sturm, record.level(), include_p2)?;
            if window.admitted().len() >= 2 {
                return Ok(sturm);
            }
            let probe = PrimeWindow::new(
                record.data_bound().max(2),
                record.level(),
                include_p2,
            )?;
            let reachable = probe.admitted();
            if reachable.len() < 2 {
                return Err(Error::MissingData(format!(
                    "record {}: only {} admitted primes up to the data bound {}; \
                     the window needs at least 2",
                    record.label(),
                    reachable.len(),
                    record.data_bound()
                )));
            }
            Ok(sturm.max(reachable[1]))
        }
    }
}

/// G is stable when doubling the bound (capped at the data bound) does not
/// shrink the gcd.
fn gcd_is_stable(
    record: &NewformRecord,
    window: &PrimeWindow,
    gcd_order: &BigInt,
    include_p2: bool,
) -> Result<bool> {
    let doubled = window.bound().saturating_mul(2).min(record.data_bound());
    if doubled <= window.bound() {
        return Ok(true);
    }
    let wider = PrimeWindow::new(doubled, record.level(), include_p2)?;
    let mut widened = gcd_order.clone();
    for p in wider.admitted() {
        if p <= window.bound() {
            continue;
        }
        widened = widened.gcd(FrobeniusData::new(record, p)?.norm());
        // The gcd only ever shrinks, so the first strict drop settles it.
        if widened != *gcd_order {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Per-ell analysis over the window with ell removed: decomposes ell in F,
/// takes minimal lambda-adic valuations of every P_p, and checks each p's
/// norm-valuation identity on the way.
fn ell_report(
    record: &NewformRecord,
    frobenius: &[FrobeniusData],
    ell: u64,
) -> Result<EllReport> {
    let window: Vec<&FrobeniusData> = frobenius.iter().filter(|d| d.p != ell).collect();
    if window.is_empty() {
        return Err(Error::InvalidWindow(format!(
            "record {}: the window for ell = {ell} is empty",
            record.label()
        )));
    }
    let mut ell_free_gcd = BigInt::zero();
    for d in &window {
        ell_free_gcd = ell_free_gcd.gcd(d.norm());
    }
    let gcd_exponent = int_valuation(&ell_free_gcd, ell)? as u32;

    let mut decomposition = decompose_prime(record.field(), ell)?;
    if !decomposition.maximal_at_ell() {
        return Ok(EllReport {
            ell,
            unresolved: true,
            entries: Vec::new(),
            predicted_exponent: 0,
            gcd_exponent,
        });
    }

    let count = decomposition.primes().len();
    let mut minima: Vec<Option<i64>> = vec![None; count];
    for d in &window {
        let mut norm_valuation_sum: i64 = 0;
        for i in 0..count {
            let (f_lambda, outcome) = {
                let lambda = &decomposition.primes()[i];
                (
                    lambda.f() as i64,
                    lambda_valuation(record.field(), lambda, d.frobenius())?,
                )
            };
            if let Some(fresh) = outcome.refreshed {
                decomposition.primes_mut()[i] = fresh;
            }
            norm_valuation_sum += f_lambda * outcome.value;
            minima[i] = Some(match minima[i] {
                Some(m) => m.min(outcome.value),
                None => outcome.value,
            });
        }
        let norm_valuation = int_valuation(d.norm(), ell)? as i64;
        if norm_valuation != norm_valuation_sum {
            return Err(Error::internal(format!(
                "record {}: norm-valuation identity fails at p = {}, ell = {ell}: \
                 {norm_valuation} != {norm_valuation_sum}",
                record.label(),
                d.p()
            )));
        }
    }

    let mut entries = Vec::with_capacity(count);
    let mut predicted: i64 = 0;
    for (i, lambda) in decomposition.primes().iter().enumerate() {
        let n = minima[i].expect("nonempty window visits every lambda");
        if n < 0 {
            return Err(Error::CorruptData(format!(
                "record {}: negative valuation at ell = {ell}; eigenvalue data \
                 is not integral",
                record.label()
            )));
        }
        entries.push(EllEntry {
            e: lambda.e(),
            f: lambda.f(),
            n: n as u64,
        });
        predicted = predicted.max(lambda.f() as i64 * n);
    }
    let predicted_exponent = predicted as u32;

    if predicted_exponent > gcd_exponent {
        return Err(Error::internal(format!(
            "record {}: predicted exponent {predicted_exponent} at ell = {ell} \
             exceeds the gcd exponent {gcd_exponent}",
            record.label()
        )));
    }
    if entries.len() == 1 && predicted_exponent != gcd_exponent {
        return Err(Error::internal(format!(
            "record {}: a single prime above ell = {ell} must meet the gcd \
             exponent, got {predicted_exponent} < {gcd_exponent}",
            record.label()
        )));
    }
    Ok(EllReport {
        ell,
        unresolved: false,
        entries,
        predicted_exponent,
        gcd_exponent,
    })
}

/// Aggregates over every record of one dimension. Per-record failures are
/// collected, never fatal; an empty slice yields an empty survey.
#[derive(Debug, Clone)]
pub struct Survey {
    pub dimension: u32,
    /// Successful analyses, sorted by (level, label).
    pub analyses: Vec<TorsionAnalysis>,
    /// (label, reason) for records the pipeline had to skip.
    pub failures: Vec<(String, String)>,
    /// Multiset of predicted orders T.
    pub predicted_orders: BTreeMap<BigInt, usize>,
    /// Every divisor of every predicted order.
    pub divisor_closure: BTreeSet<BigInt>,
    /// Primes dividing some predicted order.
    pub primes: BTreeSet<u64>,
    /// Distinct T over the analyses whose sharpness is known true.
    pub sharp_orders: BTreeSet<BigInt>,
    pub sharp_count: usize,
}

pub fn survey(
    records: &[NewformRecord],
    dimension: u32,
    policy: BoundPolicy,
    include_p2: bool,
) -> Result<Survey> {
    let slice: Vec<&NewformRecord> = records
        .iter()
        .filter(|r| r.dimension() == dimension)
        .collect();
    let results: Vec<(String, Result<TorsionAnalysis>)> = slice
        .par_iter()
        .map(|r| {
            (
                r.label().to_string(),
                analyze_record(r, policy, include_p2),
            )
        })
        .collect();

    let mut analyses = Vec::new();
    let mut failures = Vec::new();
    for (label, outcome) in results {
        match outcome {
            Ok(a) => analyses.push(a),
            Err(e) => failures.push((label, e.to_string())),
        }
    }
    analyses.sort_by(|a, b| (a.level, &a.label).cmp(&(b.level, &b.label)));

    let mut predicted_orders: BTreeMap<BigInt, usize> = BTreeMap::new();
    let mut divisor_closure = BTreeSet::new();
    let mut primes = BTreeSet::new();
    let mut sharp_orders = BTreeSet::new();
    let mut sharp_count = 0;
    for analysis in &analyses {
        *predicted_orders
            .entry(analysis.predicted_order.clone())
            .or_insert(0) += 1;
        for d in all_divisors(&analysis.reports) {
            divisor_closure.insert(d);
        }
        for report in &analysis.reports {
            if report.predicted_exponent > 0 {
                primes.insert(report.ell);
            }
        }
        if analysis.sharp == Sharpness::True {
            sharp_count += 1;
            sharp_orders.insert(analysis.predicted_order.clone());
        }
    }
    Ok(Survey {
        dimension,
        analyses,
        failures,
        predicted_orders,
        divisor_closure,
        primes,
        sharp_orders,
        sharp_count,
    })
}

/// All divisors of T, generated from the per-ell predicted exponents.
fn all_divisors(reports: &[EllReport]) -> Vec<BigInt> {
    let mut divisors = vec![BigInt::one()];
    for report in reports {
        if report.predicted_exponent == 0 {
            continue;
        }
        let ell = BigInt::from(report.ell);
        let mut extended = Vec::with_capacity(divisors.len() * (report.predicted_exponent as usize + 1));
        for d in &divisors {
            let mut power = BigInt::one();
            for _ in 0..=report.predicted_exponent {
                extended.push(d * &power);
                power *= &ell;
            }
        }
        divisors = extended;
    }
    divisors
}
