//! LMFDB API client: pulls weight-2 trivial-character newform orbits and
//! their Hecke eigenvalue tables, with a byte-exact local cache in front of
//! every request and a minimum spacing between live calls.

use super::{record_from_wire, ParseDiagnostic, WireEigenvalue, WireInt, WireRecord};
use crate::arith::primes_up_to;
use crate::error::{Error, Result};
use crate::newform::NewformRecord;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

/// Where and what to fetch.
#[derive(Debug, Clone)]
pub struct FetchOptions {
    /// Server root, e.g. `https://www.lmfdb.org`; no trailing slash.
    pub base_url: String,
    /// Raw API responses are stored under `<cache_dir>/<table>/<key>.json`.
    pub cache_dir: PathBuf,
    /// Inclusive level range.
    pub levels: (u32, u32),
    /// Inclusive dimension range; orbits outside it are not fetched.
    pub dimensions: (u32, u32),
    /// Minimum spacing between consecutive live HTTP requests.
    pub rate_limit: Duration,
    /// When set, cache misses are errors instead of network calls.
    pub offline: bool,
}

impl FetchOptions {
    pub fn new(base_url: impl Into<String>, cache_dir: impl Into<PathBuf>) -> Self {
        FetchOptions {
            base_url: base_url.into(),
            cache_dir: cache_dir.into(),
            levels: (1, 500),
            dimensions: (1, 3),
            rate_limit: Duration::from_millis(500),
            offline: false,
        }
    }
}

/// What a fetch produced, including where the bytes came from.
#[derive(Debug)]
pub struct FetchOutcome {
    /// Assembled records, sorted by (level, label).
    pub records: Vec<NewformRecord>,
    /// Orbits that were seen but could not be assembled, with reasons.
    pub diagnostics: Vec<ParseDiagnostic>,
    pub cache_hits: usize,
    pub network_requests: usize,
}

/// Envelope every LMFDB API response uses.
#[derive(Debug, Deserialize)]
struct ApiEnvelope<T> {
    data: Vec<T>,
}

/// Row of the `mf_newforms` table (the fields used here).
#[derive(Debug, Deserialize)]
struct NewformMeta {
    label: String,
    level: u32,
    weight: u32,
    dim: u32,
    char_order: u32,
    field_poly: Option<Vec<WireInt>>,
}

/// Row of the `mf_hecke_nf` table (the fields used here).
#[derive(Debug, Deserialize)]
struct HeckeRow {
    label: String,
    ap: Vec<Vec<WireInt>>,
    maxp: u64,
    hecke_ring_power_basis: bool,
    #[serde(default)]
    hecke_ring_numerators: Option<Vec<Vec<WireInt>>>,
    #[serde(default)]
    hecke_ring_denominators: Option<Vec<WireInt>>,
}

struct Client {
    http: reqwest::blocking::Client,
    last_request: Option<Instant>,
    cache_hits: usize,
    network_requests: usize,
}

impl Client {
    fn new() -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .user_agent(concat!("modtors/", env!("CARGO_PKG_VERSION")))
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| Error::Fetch {
                resource: "http client".into(),
                reason: e.to_string(),
            })?;
        Ok(Client {
            http,
            last_request: None,
            cache_hits: 0,
            network_requests: 0,
        })
    }

    /// Returns the raw response body for `url`, preferring the cache file.
    /// Network responses are written to the cache verbatim so later runs
    /// replay the same bytes.
    fn get(&mut self, opts: &FetchOptions, table: &str, key: &str, url: &str) -> Result<Vec<u8>> {
        let dir = opts.cache_dir.join(table);
        let path = dir.join(format!("{key}.json"));
        if path.exists() {
            self.cache_hits += 1;
            return Ok(std::fs::read(&path)?);
        }
        if opts.offline {
            return Err(Error::Fetch {
                resource: url.to_string(),
                reason: "cache miss in offline mode".into(),
            });
        }
        self.pause(opts.rate_limit);
        let response = self.http.get(url).send().map_err(|e| Error::Fetch {
            resource: url.to_string(),
            reason: e.to_string(),
        })?;
        self.last_request = Some(Instant::now());
        self.network_requests += 1;
        if !response.status().is_success() {
            return Err(Error::Fetch {
                resource: url.to_string(),
                reason: format!("http status {}", response.status()),
            });
        }
        let body = response
            .bytes()
            .map_err(|e| Error::Fetch {
                resource: url.to_string(),
                reason: e.to_string(),
            })?
            .to_vec();
        std::fs::create_dir_all(&dir)?;
        write_atomically(&path, &body)?;
        Ok(body)
    }

    /// Sleeps long enough to keep live requests at least `gap` apart.
    fn pause(&self, gap: Duration) {
        if let Some(last) = self.last_request {
            let elapsed = last.elapsed();
            if elapsed < gap {
                std::thread::sleep(gap - elapsed);
            }
        }
    }
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Fetches every orbit in the configured level and dimension windows and
/// assembles full records. Orbits the server knows but this pipeline cannot
/// digest (missing polynomial, unresolved basis, truncated tables) become
/// diagnostics rather than errors.
pub fn fetch_newforms(opts: &FetchOptions) -> Result<FetchOutcome> {
    if opts.levels.0 > opts.levels.1 || opts.levels.0 == 0 {
        return Err(Error::invalid_argument("empty or zero-based level range"));
    }
    let mut client = Client::new()?;
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for level in opts.levels.0..=opts.levels.1 {
        let url = format!(
            "{}/api/mf_newforms/?level={}&weight=2&char_order=1&_format=json",
            opts.base_url, level
        );
        let body = client.get(opts, "mf_newforms", &level.to_string(), &url)?;
        let envelope: ApiEnvelope<NewformMeta> = serde_json::from_slice(&body)
            .map_err(|e| Error::CorruptData(format!("mf_newforms level {level}: {e}")))?;
        for meta in envelope.data {
            if meta.dim < opts.dimensions.0 || meta.dim > opts.dimensions.1 {
                continue;
            }
            match assemble(opts, &mut client, &meta) {
                Ok(record) => records.push(record),
                Err(message) => diagnostics.push(ParseDiagnostic {
                    line: 0,
                    label: Some(meta.label.clone()),
                    message,
                }),
            }
        }
    }
    records.sort_by(|a, b| (a.level(), a.label().to_string()).cmp(&(b.level(), b.label().to_string())));
    Ok(FetchOutcome {
        records,
        diagnostics,
        cache_hits: client.cache_hits,
        network_requests: client.network_requests,
    })
}

/// Pulls the eigenvalue table for one orbit and builds the record.
fn assemble(
    opts: &FetchOptions,
    client: &mut Client,
    meta: &NewformMeta,
) -> std::result::Result<NewformRecord, String> {
    if meta.weight != 2 || meta.char_order != 1 {
        return Err("not a weight-2 trivial-character orbit".into());
    }
    let field_poly = meta
        .field_poly
        .as_ref()
        .ok_or("no coefficient field polynomial in the table")?;
    let url = format!(
        "{}/api/mf_hecke_nf/?label={}&_format=json",
        opts.base_url, meta.label
    );
    let body = client
        .get(opts, "mf_hecke_nf", &meta.label, &url)
        .map_err(|e| e.to_string())?;
    let envelope: ApiEnvelope<HeckeRow> =
        serde_json::from_slice(&body).map_err(|e| format!("hecke table: {e}"))?;
    let row = envelope
        .data
        .into_iter()
        .find(|r| r.label == meta.label)
        .ok_or("no hecke eigenvalue row for this label")?;

    let g = meta.dim as usize;
    let basis = basis_matrix(&row, g)?;
    let primes = primes_up_to(row.maxp);
    if row.ap.len() > primes.len() {
        return Err(format!(
            "{} eigenvalue entries but only {} primes up to maxp = {}",
            row.ap.len(),
            primes.len(),
            row.maxp
        ));
    }
    if row.ap.is_empty() {
        return Err("empty eigenvalue table".into());
    }
    let data_bound = primes[row.ap.len() - 1];
    let mut eigenvalues = Vec::with_capacity(row.ap.len());
    for (&p, coords) in primes.iter().zip(row.ap.iter()) {
        if coords.len() != g {
            return Err(format!("coordinate length mismatch at p = {p}"));
        }
        let (num, den) = match &basis {
            None => (coords.iter().map(|c| c.0.clone()).collect(), BigInt::one()),
            Some(change) => change.apply(coords),
        };
        eigenvalues.push(WireEigenvalue {
            p,
            num: num.into_iter().map(WireInt).collect(),
            den: WireInt(den),
        });
    }
    record_from_wire(WireRecord {
        label: meta.label.clone(),
        level: meta.level,
        weight: meta.weight,
        char_trivial: true,
        dimension: meta.dim,
        field_poly: field_poly.clone(),
        eigenvalues,
        data_bound,
    })
}

/// Change of basis from the Hecke-ring basis to the power basis of the
/// defining polynomial: basis_i = (sum_j M[i][j] x^j) / d_i.
struct BasisChange {
    numerators: Vec<Vec<BigInt>>,
    denominators: Vec<BigInt>,
}

impl BasisChange {
    /// Rewrites ring-basis coordinates as power-basis (numerator, denominator).
    fn apply(&self, coords: &[WireInt]) -> (Vec<BigInt>, BigInt) {
        let g = self.denominators.len();
        let common = self
            .denominators
            .iter()
            .fold(BigInt::one(), |acc, d| acc.lcm(d));
        let mut num = vec![BigInt::zero(); g];
        for (i, c) in coords.iter().enumerate() {
            let scale = &c.0 * (&common / &self.denominators[i]);
            for (j, m) in self.numerators[i].iter().enumerate() {
                num[j] += &scale * m;
            }
        }
        (num, common)
    }
}

/// `None` means the table is already in the power basis.
fn basis_matrix(row: &HeckeRow, g: usize) -> std::result::Result<Option<BasisChange>, String> {
    if row.hecke_ring_power_basis {
        return Ok(None);
    }
    let (numerators, denominators) = match (&row.hecke_ring_numerators, &row.hecke_ring_denominators) {
        (Some(n), Some(d)) => (n, d),
        _ => return Err("basis unresolved: no change-of-basis matrix".into()),
    };
    if numerators.len() != g || denominators.len() != g || numerators.iter().any(|r| r.len() != g) {
        return Err("basis unresolved: change-of-basis matrix has the wrong shape".into());
    }
    if denominators.iter().any(|d| d.0.is_zero()) {
        return Err("basis unresolved: zero denominator in the basis matrix".into());
    }
    Ok(Some(BasisChange {
        numerators: numerators
            .iter()
            .map(|r| r.iter().map(|c| c.0.clone()).collect())
            .collect(),
        denominators: denominators.iter().map(|d| d.0.clone()).collect(),
    }))
}
