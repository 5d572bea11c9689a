//! Weight-2 newform records: dataset ingest and validation, canonical
//! serialization, the Sturm-bound prime cutoff, and an LMFDB client.
//!
//! A record carries the data the torsion engine consumes: the level, the
//! coefficient field F = Q[x]/(field_poly) of dimension g, and Hecke
//! eigenvalues a_p in power-basis coordinates for every prime up to the
//! record's data bound.

mod lmfdb;

pub use lmfdb::{fetch_newforms, FetchOptions, FetchOutcome};

use crate::arith::{primes_up_to, IntPoly};
use crate::error::{Error, Result};
use crate::numfield::{FieldElement, NumberField};
use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

/// One weight-2 trivial-character newform Galois orbit.
#[derive(Debug, Clone)]
pub struct NewformRecord {
    label: String,
    level: u32,
    weight: u32,
    dimension: u32,
    field: Arc<NumberField>,
    eigenvalues: BTreeMap<u64, FieldElement>,
    data_bound: u64,
}

impl NewformRecord {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    /// The coefficient field F = Q(a_p).
    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn eigenvalue(&self, p: u64) -> Option<&FieldElement> {
        self.eigenvalues.get(&p)
    }

    pub fn eigenvalues(&self) -> impl Iterator<Item = (u64, &FieldElement)> {
        self.eigenvalues.iter().map(|(p, a)| (*p, a))
    }

    /// Largest prime with a stored eigenvalue.
    pub fn data_bound(&self) -> u64 {
        self.data_bound
    }
}

/// Per-line problem found while parsing or assembling records; never fatal
/// to the batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    /// 1-based line number in the input stream (0 for non-line sources).
    pub line: usize,
    pub label: Option<String>,
    pub message: String,
}

impl std::fmt::Display for ParseDiagnostic {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.label {
            Some(label) => write!(out, "line {}: [{}] {}", self.line, label, self.message),
            None => write!(out, "line {}: {}", self.line, self.message),
        }
    }
}

/// Wire format: one compact JSON object per line. `field_poly` lists g+1
/// coefficients lowest-degree first; each eigenvalue gives g numerator
/// coordinates over one positive denominator. Integers are decimal strings
/// on the wire so coordinates never overflow a fixed-width type.
#[derive(Debug, Serialize, Deserialize)]
struct WireRecord {
    label: String,
    level: u32,
    weight: u32,
    char_trivial: bool,
    dimension: u32,
    field_poly: Vec<WireInt>,
    eigenvalues: Vec<WireEigenvalue>,
    data_bound: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct WireEigenvalue {
    p: u64,
    num: Vec<WireInt>,
    den: WireInt,
}

/// Arbitrary-precision integer on the wire: serialized as a JSON number
/// when it fits i64 and as a decimal string otherwise; both forms parse.
#[derive(Debug, Clone)]
struct WireInt(BigInt);

impl Serialize for WireInt {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match i64::try_from(&self.0) {
            Ok(small) => ser.serialize_i64(small),
            Err(_) => ser.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for WireInt {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let value = serde_json::Value::deserialize(de)?;
        let as_int = match &value {
            serde_json::Value::Number(n) if n.is_i64() || n.is_u64() => {
                BigInt::from_str(&n.to_string()).ok()
            }
            serde_json::Value::String(s) => BigInt::from_str(s).ok(),
            _ => None,
        };
        as_int
            .map(WireInt)
            .ok_or_else(|| D::Error::custom(format!("expected an integer, got {value}")))
    }
}

/// Assembles a validated record from wire fields. Every rejection reason is
/// a single human-readable message for the per-line diagnostics.
fn record_from_wire(wire: WireRecord) -> std::result::Result<NewformRecord, String> {
    if wire.weight != 2 {
        return Err(format!("unsupported weight {}", wire.weight));
    }
    if !wire.char_trivial {
        return Err("non-trivial character".into());
    }
    if wire.dimension == 0 {
        return Err("dimension must be positive".into());
    }
    if wire.level == 0 {
        return Err("level must be positive".into());
    }
    let g = wire.dimension as usize;
    if wire.field_poly.len() != g + 1 {
        return Err(format!(
            "field_poly has {} coefficients, expected {}",
            wire.field_poly.len(),
            g + 1
        ));
    }
    let poly = IntPoly::new(wire.field_poly.iter().map(|c| c.0.clone()).collect());
    let field = NumberField::new(poly).map_err(|e| e.to_string())?;
    if field.degree() != g {
        return Err("field_poly degree does not match dimension".into());
    }

    let mut eigenvalues = BTreeMap::new();
    for ev in &wire.eigenvalues {
        if ev.num.len() != g {
            return Err(format!("coordinate length mismatch at p = {}", ev.p));
        }
        if ev.den.0 <= BigInt::zero() {
            return Err(format!("nonpositive denominator at p = {}", ev.p));
        }
        let num = IntPoly::new(ev.num.iter().map(|c| c.0.clone()).collect());
        let element = field
            .element(num, ev.den.0.clone())
            .map_err(|e| e.to_string())?;
        if eigenvalues.insert(ev.p, element).is_some() {
            return Err(format!("duplicate eigenvalue for p = {}", ev.p));
        }
    }
    for p in primes_up_to(wire.data_bound) {
        if !eigenvalues.contains_key(&p) {
            return Err(format!("missing eigenvalue for prime {p} below the data bound"));
        }
    }
    for &p in eigenvalues.keys() {
        if p > wire.data_bound {
            return Err(format!("eigenvalue at p = {p} above the declared data bound"));
        }
    }
    Ok(NewformRecord {
        label: wire.label,
        level: wire.level,
        weight: wire.weight,
        dimension: wire.dimension,
        field,
        eigenvalues,
        data_bound: wire.data_bound,
    })
}

fn wire_from_record(record: &NewformRecord) -> WireRecord {
    WireRecord {
        label: record.label.clone(),
        level: record.level,
        weight: record.weight,
        char_trivial: true,
        dimension: record.dimension,
        field_poly: int_poly_coeffs(record.field.defining_poly(), record.dimension as usize + 1),
        eigenvalues: record
            .eigenvalues
            .iter()
            .map(|(p, a)| WireEigenvalue {
                p: *p,
                num: int_poly_coeffs(a.numerator(), record.dimension as usize),
                den: WireInt(a.denominator().clone()),
            })
            .collect(),
        data_bound: record.data_bound,
    }
}

/// Coefficients padded with zeros to a fixed length (canonical form strips
/// trailing zeros; the wire format wants exactly g, or g+1, entries).
fn int_poly_coeffs(poly: &IntPoly, len: usize) -> Vec<WireInt> {
    (0..len).map(|i| WireInt(poly.coeff(i))).collect()
}

/// Canonical one-line serialization; `parse_dataset` inverts it exactly.
pub fn serialize_record(record: &NewformRecord) -> String {
    serde_json::to_string(&wire_from_record(record)).expect("record serialization cannot fail")
}

/// Parses a line-oriented dataset. Malformed lines become diagnostics, not
/// failures; records come back sorted by (level, label). Zero valid records
/// is an error.
pub fn parse_dataset<R: BufRead>(reader: R) -> Result<(Vec<NewformRecord>, Vec<ParseDiagnostic>)> {
    let mut records: Vec<NewformRecord> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut seen_labels: std::collections::HashSet<String> = std::collections::HashSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let number = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let wire: WireRecord = match serde_json::from_str(&line) {
            Ok(w) => w,
            Err(e) => {
                diagnostics.push(ParseDiagnostic {
                    line: number,
                    label: None,
                    message: format!("malformed record: {e}"),
                });
                continue;
            }
        };
        let label = wire.label.clone();
        match record_from_wire(wire) {
            Ok(record) => {
                if !seen_labels.insert(record.label.clone()) {
                    diagnostics.push(ParseDiagnostic {
                        line: number,
                        label: Some(label),
                        message: "duplicate label".into(),
                    });
                    continue;
                }
                records.push(record);
            }
            Err(message) => diagnostics.push(ParseDiagnostic {
                line: number,
                label: Some(label),
                message,
            }),
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    records.sort_by(|a, b| (a.level, &a.label).cmp(&(b.level, &b.label)));
    Ok((records, diagnostics))
}

/// Convenience wrapper over [`parse_dataset`] for a file path.
pub fn parse_dataset_path(path: &Path) -> Result<(Vec<NewformRecord>, Vec<ParseDiagnostic>)> {
    let file = std::fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    parse_dataset(std::io::BufReader::new(file))
}

/// Summary of a dataset: where it came from and what it covers.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DatasetManifest {
    pub source: DatasetSource,
    pub record_count: usize,
    /// dimension -> number of records.
    pub per_dimension: BTreeMap<u32, usize>,
    pub data_bound_policy: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetSource {
    Local,
    LmfdbCache,
}

impl DatasetManifest {
    pub fn summarize(records: &[NewformRecord], source: DatasetSource, policy: &str) -> Self {
        let mut per_dimension = BTreeMap::new();
        for r in records {
            *per_dimension.entry(r.dimension).or_insert(0) += 1;
        }
        DatasetManifest {
            source,
            record_count: records.len(),
            per_dimension,
            data_bound_policy: policy.to_string(),
        }
    }
}

/// Findings of [`validate_record`]; empty vectors mean a clean record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub label: String,
    /// Primes below the required bound with no stored eigenvalue.
    pub missing_primes: Vec<u64>,
    /// Stored primes where Norm(1 - a_p + p) = 0, which the Weil bounds
    /// forbid for genuine newform data.
    pub positivity_failures: Vec<u64>,
    /// Defining polynomial is squarefree (certified again here even though
    /// construction already enforces it).
    pub field_squarefree: bool,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.missing_primes.is_empty() && self.positivity_failures.is_empty() && self.field_squarefree
    }
}

/// Checks coverage up to `required_bound` and the norm positivity of
/// 1 - a_p + p at every stored prime.
pub fn validate_record(record: &NewformRecord, required_bound: u64) -> ValidationReport {
    let missing_primes = primes_up_to(required_bound)
        .into_iter()
        .filter(|p| !record.eigenvalues.contains_key(p))
        .collect();
    let mut positivity_failures = Vec::new();
    for (&p, a_p) in &record.eigenvalues {
        match frobenius_norm(record, p, a_p) {
            Ok(norm) if !norm.is_zero() => {}
            _ => positivity_failures.push(p),
        }
    }
    let field_squarefree = NumberField::new(record.field.defining_poly().clone()).is_ok();
    ValidationReport {
        label: record.label.clone(),
        missing_primes,
        positivity_failures,
        field_squarefree,
    }
}

/// Norm of 1 - a_p + p, shared by validation and the engine.
fn frobenius_norm(record: &NewformRecord, p: u64, a_p: &FieldElement) -> Result<num_rational::BigRational> {
    let one_plus_p = record.field.from_integer(BigInt::from(p) + 1);
    let value = one_plus_p.sub(a_p)?;
    Ok(value.norm())
}

/// Sturm-bound result; `promoted` marks the degenerate levels where the
/// formula gives 0 and the cutoff is raised to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SturmBound {
    pub bound: u64,
    pub promoted: bool,
}

/// floor(k * mu / 12) with mu = [SL2(Z) : Gamma_0(N)] = N * prod (1 + 1/p).
pub fn sturm_bound(level: u32, weight: u32) -> Result<SturmBound> {
    if level == 0 {
        return Err(Error::invalid_argument("level must be positive"));
    }
    if weight != 2 {
        return Err(Error::invalid_argument("only weight 2 is supported"));
    }
    let mu = gamma0_index(level as u64);
    let bound = (weight as u64 * mu) / 12;
    if bound == 0 {
        Ok(SturmBound {
            bound: 1,
            promoted: true,
        })
    } else {
        Ok(SturmBound {
            bound,
            promoted: false,
        })
    }
}

/// Index of Gamma_0(N) in SL2(Z): N * prod_{p | N} (1 + 1/p), an integer.
pub fn gamma0_index(level: u64) -> u64 {
    let mut mu = level;
    let mut n = level;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            mu = mu / p * (p + 1);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        mu = mu / n * (n + 1);
    }
    mu
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    /// Point count of a long-Weierstrass curve over F_p, including the point
    /// at infinity. The independent oracle for g = 1 eigenvalue fixtures.
    fn weierstrass_points(a: [i64; 5], p: i64) -> i64 {
        let [a1, a2, a3, a4, a6] = a;
        let m = |x: i64| x.rem_euclid(p);
        let mut count = 1;
        for x in 0..p {
            for y in 0..p {
                let lhs = m(y * y + a1 * x * y + a3 * y);
                let rhs = m(((x * x + a2 * x) % p + a4) * x % p + a6);
                if lhs == m(rhs) {
                    count += 1;
                }
            }
        }
        count
    }

    /// a_p for the level-11 curve y^2 + y = x^3 - x^2 - 10x - 20, derived
    /// from the point count rather than copied in.
    fn a_p_level_11(p: i64) -> i64 {
        p + 1 - weierstrass_points([0, -1, 1, -10, -20], p)
    }

    fn record_line_11(data_bound: u64) -> String {
        let eigenvalues: Vec<String> = primes_up_to(data_bound)
            .into_iter()
            .map(|p| format!(r#"{{"p":{},"num":[{}],"den":1}}"#, p, a_p_level_11(p as i64)))
            .collect();
        format!(
            r#"{{"label":"11.2.a.a","level":11,"weight":2,"char_trivial":true,"dimension":1,"field_poly":[0,1],"eigenvalues":[{}],"data_bound":{}}}"#,
            eigenvalues.join(","),
            data_bound
        )
    }

    #[test]
    fn parses_a_valid_elliptic_record() {
        let line = record_line_11(20);
        let (records, diagnostics) = parse_dataset(line.as_bytes()).unwrap();
        assert!(diagnostics.is_empty());
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.label(), "11.2.a.a");
        assert_eq!((r.level(), r.dimension(), r.data_bound()), (11, 1, 20));
        // a_2 from the oracle: 5 points over F_2, so a_2 = 2 + 1 - 5 = -2.
        assert_eq!(weierstrass_points([0, -1, 1, -10, -20], 2), 5);
        let a2 = r.eigenvalue(2).unwrap();
        assert_eq!(a2.numerator(), &IntPoly::from_i64s(&[-2]));
        assert!(a2.denominator().is_one());
    }

    #[test]
    fn rejects_unsupported_weight() {
        let line = record_line_11(10).replace(r#""weight":2"#, r#""weight":3"#);
        let err = parse_dataset(line.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
        // The diagnostic itself is visible when at least one record is valid.
        let two_lines = format!("{}\n{}", record_line_11(10), line);
        let (records, diagnostics) = parse_dataset(two_lines.as_bytes()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(diagnostics.len(), 1);
        assert!(diagnostics[0].message.contains("unsupported weight 3"));
    }

    #[test]
    fn rejects_coordinate_length_mismatch() {
        let line = record_line_11(10).replace(r#""num":[-2]"#, r#""num":[-2,0]"#);
        let good = record_line_11(10);
        let (records, diagnostics) =
            parse_dataset(format!("{good}\n{line}").as_bytes()).unwrap();
        assert_eq!(records.len(), 1);
        assert!(diagnostics
            .iter()
            .any(|d| d.message.contains("coordinate length mismatch")));
    }

    #[test]
    fn rejects_gaps_below_data_bound() {
        // Claim data_bound 20 but only provide primes to 13.
        let line = record_line_11(13).replace(r#""data_bound":13"#, r#""data_bound":20"#);
        let good = record_line_11(10);
        let (_, diagnostics) = parse_dataset(format!("{good}\n{line}").as_bytes()).unwrap();
        assert!(diagnostics
            .iter()
            .any(|d| d.message.contains("missing eigenvalue for prime 17")));
    }

    #[test]
    fn malformed_json_is_a_line_diagnostic() {
        let text = format!("{}\nnot json at all\n", record_line_11(10));
        let (records, diagnostics) = parse_dataset(text.as_bytes()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(diagnostics.len(), 1);
        assert_eq!(diagnostics[0].line, 2);
        assert!(diagnostics[0].message.contains("malformed record"));
    }

    #[test]
    fn records_sort_by_level_then_label() {
        let high = record_line_11(10)
            .replace(r#""label":"11.2.a.a""#, r#""label":"14.2.a.a""#)
            .replace(r#""level":11"#, r#""level":14"#);
        let sibling = record_line_11(10).replace(r#""label":"11.2.a.a""#, r#""label":"11.2.a.b""#);
        let text = format!("{high}\n{sibling}\n{}", record_line_11(10));
        let (records, _) = parse_dataset(text.as_bytes()).unwrap();
        let labels: Vec<&str> = records.iter().map(|r| r.label()).collect();
        assert_eq!(labels, vec!["11.2.a.a", "11.2.a.b", "14.2.a.a"]);
    }

    #[test]
    fn serialize_then_parse_is_identity() {
        let line = record_line_11(20);
        let (records, _) = parse_dataset(line.as_bytes()).unwrap();
        let serialized = serialize_record(&records[0]);
        let (reparsed, diagnostics) = parse_dataset(serialized.as_bytes()).unwrap();
        assert!(diagnostics.is_empty());
        assert_eq!(serialize_record(&reparsed[0]), serialized);
        assert_eq!(reparsed[0].label(), records[0].label());
        assert_eq!(reparsed[0].eigenvalues.len(), records[0].eigenvalues.len());
    }

    #[test]
    fn big_coordinates_survive_the_wire() {
        let big = "123456789012345678901234567890";
        let line = record_line_11(10).replace(
            r#"{"p":2,"num":[-2],"den":1}"#,
            &format!(r#"{{"p":2,"num":["{big}"],"den":1}}"#),
        );
        let (records, diagnostics) = parse_dataset(line.as_bytes()).unwrap();
        assert!(diagnostics.is_empty());
        let a2 = records[0].eigenvalue(2).unwrap();
        assert_eq!(a2.numerator().coeff(0), BigInt::from_str(big).unwrap());
        // Big integers round-trip as strings.
        let line2 = serialize_record(&records[0]);
        assert!(line2.contains(&format!(r#""{big}""#)));
        let (again, _) = parse_dataset(line2.as_bytes()).unwrap();
        assert_eq!(serialize_record(&again[0]), line2);
    }

    #[test]
    fn validation_flags_fabricated_eigenvalues() {
        // a_5 := 5 + 1 forces 1 - a_5 + 5 = 0, which real data cannot do.
        let line = record_line_11(10).replace(r#"{"p":5,"num":[1],"den":1}"#, r#"{"p":5,"num":[6],"den":1}"#);
        let (records, _) = parse_dataset(line.as_bytes()).unwrap();
        let report = validate_record(&records[0], 10);
        assert_eq!(report.positivity_failures, vec![5]);
        assert!(!report.is_clean());
    }

    #[test]
    fn validation_reports_missing_primes() {
        let (records, _) = parse_dataset(record_line_11(7).as_bytes()).unwrap();
        let report = validate_record(&records[0], 20);
        assert_eq!(report.missing_primes, vec![11, 13, 17, 19]);
        let clean = validate_record(&records[0], 7);
        assert!(clean.is_clean());
    }

    #[test]
    fn validation_accepts_real_point_counts() {
        let (records, _) = parse_dataset(record_line_11(50).as_bytes()).unwrap();
        let report = validate_record(&records[0], 50);
        assert!(report.is_clean(), "{report:?}");
    }

    #[test]
    fn sturm_bound_examples() {
        assert_eq!(sturm_bound(11, 2).unwrap(), SturmBound { bound: 2, promoted: false });
        assert_eq!(sturm_bound(39, 2).unwrap(), SturmBound { bound: 9, promoted: false });
        assert_eq!(sturm_bound(1, 2).unwrap(), SturmBound { bound: 1, promoted: true });
        assert!(sturm_bound(0, 2).is_err());
        assert!(sturm_bound(11, 4).is_err());
    }

    #[test]
    fn sturm_bound_grows_with_the_level() {
        // floor(mu/6) >= floor(N/6) because mu >= N; exhaustive to 1000.
        for level in 1..=1000u32 {
            let b = sturm_bound(level, 2).unwrap().bound;
            assert!(b >= (level as u64) / 6, "level {level} gave bound {b}");
        }
    }

    #[test]
    fn gamma0_index_is_multiplicative_in_prime_powers() {
        assert_eq!(gamma0_index(11), 12);
        assert_eq!(gamma0_index(39), 56); // 39 * (4/3) * (14/13)
        assert_eq!(gamma0_index(500), 900);
        assert_eq!(gamma0_index(1), 1);
    }

    #[test]
    fn manifest_counts_by_dimension() {
        let (records, _) = parse_dataset(record_line_11(10).as_bytes()).unwrap();
        let manifest = DatasetManifest::summarize(&records, DatasetSource::Local, "max(2*sturm, 100)");
        assert_eq!(manifest.record_count, 1);
        assert_eq!(manifest.per_dimension.get(&1), Some(&1));
        let json = serde_json::to_string(&manifest).unwrap();
        assert!(json.contains(r#""source":"local""#));
        let back: DatasetManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(back, manifest);
    }
}
