//! Client tests against a local mock HTTP server: assembly, caching,
//! dimension filtering, basis changes, offline mode, and request spacing.

use modtors::arith::IntPoly;
use modtors::newform::{fetch_newforms, FetchOptions};
use modtors::numfield::NumberField;
use modtors::Error;
use num_bigint::BigInt;
use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

/// Minimal single-threaded HTTP/1.1 server with canned responses keyed by
/// request target. Unknown targets get a 404.
struct MockServer {
    base_url: String,
    hits: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    fn spawn(routes: HashMap<String, String>) -> MockServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
        listener.set_nonblocking(true).unwrap();
        let base_url = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let thread_hits = hits.clone();
        let thread_stop = stop.clone();
        let handle = std::thread::spawn(move || {
            while !thread_stop.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok((mut stream, _)) => {
                        stream.set_nonblocking(false).unwrap();
                        let _ = stream.set_read_timeout(Some(Duration::from_secs(2)));
                        let mut buf = Vec::new();
                        let mut chunk = [0u8; 1024];
                        while !buf.windows(4).any(|w| w == b"\r\n\r\n") {
                            match stream.read(&mut chunk) {
                                Ok(0) => break,
                                Ok(n) => buf.extend_from_slice(&chunk[..n]),
                                Err(_) => break,
                            }
                        }
                        let request = String::from_utf8_lossy(&buf);
                        let target = request
                            .lines()
                            .next()
                            .and_then(|l| l.split_whitespace().nth(1))
                            .unwrap_or("")
                            .to_string();
                        thread_hits.fetch_add(1, Ordering::SeqCst);
                        let (status, body) = match routes.get(&target) {
                            Some(body) => ("200 OK", body.clone()),
                            None => ("404 Not Found", String::from("{\"data\":[]}")),
                        };
                        let response = format!(
                            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                            body.len()
                        );
                        let _ = stream.write_all(response.as_bytes());
                    }
                    Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        std::thread::sleep(Duration::from_millis(2));
                    }
                    Err(_) => break,
                }
            }
        });
        MockServer {
            base_url,
            hits,
            stop,
            handle: Some(handle),
        }
    }

    fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn meta_url(level: u32) -> String {
    format!("/api/mf_newforms/?level={level}&weight=2&char_order=1&_format=json")
}

fn hecke_url(label: &str) -> String {
    format!("/api/mf_hecke_nf/?label={label}&_format=json")
}

/// Level-39 fixture: a rational orbit in the power basis and a quadratic
/// orbit stored in a non-power Hecke-ring basis.
fn level_39_routes() -> HashMap<String, String> {
    let mut routes = HashMap::new();
    routes.insert(
        meta_url(39),
        r#"{"data":[
            {"label":"39.2.a.b","level":39,"weight":2,"dim":2,"char_order":1,"field_poly":[-1,-1,1]},
            {"label":"39.2.a.a","level":39,"weight":2,"dim":1,"char_order":1,"field_poly":[0,1]}
        ]}"#
            .to_string(),
    );
    routes.insert(
        hecke_url("39.2.a.a"),
        r#"{"data":[{"label":"39.2.a.a","maxp":13,"hecke_ring_power_basis":true,
            "ap":[[1],[1],[2],[-4],[-6],[-2]]}]}"#
            .to_string(),
    );
    // Ring basis: b0 = 1, b1 = (-1 + 2x)/2, so coords [c0, c1] map to
    // c0 + c1*(2x - 1)/2 in the power basis.
    routes.insert(
        hecke_url("39.2.a.b"),
        r#"{"data":[{"label":"39.2.a.b","maxp":13,"hecke_ring_power_basis":false,
            "hecke_ring_numerators":[[1,0],[-1,2]],"hecke_ring_denominators":[1,2],
            "ap":[[1,1],[0,1],[2,0],[-1,2],[2,-2],[3,0]]}]}"#
            .to_string(),
    );
    routes
}

fn options(server: &MockServer, cache: &std::path::Path) -> FetchOptions {
    let mut opts = FetchOptions::new(server.base_url.clone(), cache);
    opts.levels = (39, 39);
    opts.rate_limit = Duration::from_millis(0);
    opts
}

#[test]
fn fetch_assembles_caches_and_replays() {
    let cache = tempfile::tempdir().unwrap();
    let routes = level_39_routes();
    let meta_body = routes[&meta_url(39)].clone();
    let server = MockServer::spawn(routes);
    let opts = options(&server, cache.path());

    let live = fetch_newforms(&opts).unwrap();
    assert_eq!(live.records.len(), 2);
    assert!(live.diagnostics.is_empty());
    assert_eq!((live.network_requests, live.cache_hits), (3, 0));
    let labels: Vec<&str> = live.records.iter().map(|r| r.label()).collect();
    assert_eq!(labels, vec!["39.2.a.a", "39.2.a.b"]);
    assert_eq!(live.records[0].data_bound(), 13);

    // The cache holds the response bytes verbatim.
    let cached = std::fs::read(cache.path().join("mf_newforms/39.json")).unwrap();
    assert_eq!(cached, meta_body.as_bytes());
    assert!(cache.path().join("mf_hecke_nf/39.2.a.a.json").exists());
    assert!(cache.path().join("mf_hecke_nf/39.2.a.b.json").exists());

    // Stop the server; a warm-cache fetch must replay identically.
    drop(server);
    let replay = fetch_newforms(&opts).unwrap();
    assert_eq!((replay.network_requests, replay.cache_hits), (0, 3));
    assert_eq!(replay.records.len(), 2);
    for (a, b) in live.records.iter().zip(replay.records.iter()) {
        assert_eq!(
            modtors::newform::serialize_record(a),
            modtors::newform::serialize_record(b)
        );
    }
}

#[test]
fn basis_change_reaches_the_power_basis() {
    let cache = tempfile::tempdir().unwrap();
    let server = MockServer::spawn(level_39_routes());
    let outcome = fetch_newforms(&options(&server, cache.path())).unwrap();
    let quadratic = &outcome.records[1];
    assert_eq!(quadratic.label(), "39.2.a.b");

    let field = NumberField::new(IntPoly::from_i64s(&[-1, -1, 1])).unwrap();
    // coords [1, 1]: 1 + (2x - 1)/2 = (1 + 2x)/2.
    let expected_a2 = field
        .element(IntPoly::from_i64s(&[1, 2]), BigInt::from(2))
        .unwrap();
    assert_eq!(quadratic.eigenvalue(2), Some(&expected_a2));
    // coords [-1, 2]: -1 + (2x - 1) = 2x - 2.
    let expected_a7 = field
        .element(IntPoly::from_i64s(&[-2, 2]), BigInt::from(1))
        .unwrap();
    assert_eq!(quadratic.eigenvalue(7), Some(&expected_a7));
}

#[test]
fn dimension_filter_avoids_unneeded_requests() {
    let cache = tempfile::tempdir().unwrap();
    let server = MockServer::spawn(level_39_routes());
    let mut opts = options(&server, cache.path());
    opts.dimensions = (1, 1);
    let outcome = fetch_newforms(&opts).unwrap();
    assert_eq!(outcome.records.len(), 1);
    assert_eq!(outcome.records[0].label(), "39.2.a.a");
    // One metadata request plus one eigenvalue request; the dim-2 orbit
    // is never fetched.
    assert_eq!(outcome.network_requests, 2);
    assert_eq!(server.hits(), 2);
}

#[test]
fn low_levels_have_no_orbits() {
    let cache = tempfile::tempdir().unwrap();
    let mut routes = HashMap::new();
    for level in 1..=10 {
        routes.insert(meta_url(level), r#"{"data":[]}"#.to_string());
    }
    let server = MockServer::spawn(routes);
    let mut opts = options(&server, cache.path());
    opts.levels = (1, 10);
    let outcome = fetch_newforms(&opts).unwrap();
    assert!(outcome.records.is_empty());
    assert!(outcome.diagnostics.is_empty());
    assert_eq!(outcome.network_requests, 10);
}

#[test]
fn unresolved_basis_is_skipped_with_a_diagnostic() {
    let cache = tempfile::tempdir().unwrap();
    let mut routes = level_39_routes();
    routes.insert(
        hecke_url("39.2.a.b"),
        r#"{"data":[{"label":"39.2.a.b","maxp":13,"hecke_ring_power_basis":false,
            "ap":[[1,1],[0,1],[2,0],[-1,2],[2,-2],[3,0]]}]}"#
            .to_string(),
    );
    let server = MockServer::spawn(routes);
    let outcome = fetch_newforms(&options(&server, cache.path())).unwrap();
    assert_eq!(outcome.records.len(), 1);
    assert_eq!(outcome.records[0].label(), "39.2.a.a");
    assert_eq!(outcome.diagnostics.len(), 1);
    assert_eq!(outcome.diagnostics[0].label.as_deref(), Some("39.2.a.b"));
    assert!(outcome.diagnostics[0].message.contains("basis unresolved"));
}

#[test]
fn truncated_tables_shrink_the_data_bound() {
    let cache = tempfile::tempdir().unwrap();
    let mut routes = level_39_routes();
    // maxp claims 13 but only five entries arrive (primes 2..11).
    routes.insert(
        hecke_url("39.2.a.a"),
        r#"{"data":[{"label":"39.2.a.a","maxp":13,"hecke_ring_power_basis":true,
            "ap":[[1],[1],[2],[-4],[-6]]}]}"#
            .to_string(),
    );
    let server = MockServer::spawn(routes);
    let mut opts = options(&server, cache.path());
    opts.dimensions = (1, 1);
    let outcome = fetch_newforms(&opts).unwrap();
    assert_eq!(outcome.records.len(), 1);
    assert_eq!(outcome.records[0].data_bound(), 11);
}

#[test]
fn offline_cold_cache_is_a_fetch_error() {
    let cache = tempfile::tempdir().unwrap();
    let mut opts = FetchOptions::new("http://127.0.0.1:1", cache.path());
    opts.levels = (39, 39);
    opts.offline = true;
    let err = fetch_newforms(&opts).unwrap_err();
    match err {
        Error::Fetch { resource, reason } => {
            assert!(resource.contains("mf_newforms"));
            assert!(reason.contains("offline"));
        }
        other => panic!("expected a fetch error, got {other}"),
    }
}

#[test]
fn live_requests_are_spaced_but_cache_reads_are_not() {
    let cache = tempfile::tempdir().unwrap();
    let server = MockServer::spawn(level_39_routes());
    let mut opts = options(&server, cache.path());
    opts.rate_limit = Duration::from_millis(120);

    let started = std::time::Instant::now();
    let live = fetch_newforms(&opts).unwrap();
    let live_elapsed = started.elapsed();
    assert_eq!(live.network_requests, 3);
    // Three live requests means at least two enforced gaps.
    assert!(
        live_elapsed >= Duration::from_millis(240),
        "live fetch took {live_elapsed:?}"
    );

    let started = std::time::Instant::now();
    let warm = fetch_newforms(&opts).unwrap();
    let warm_elapsed = started.elapsed();
    assert_eq!(warm.cache_hits, 3);
    assert!(
        warm_elapsed < Duration::from_millis(120),
        "warm fetch took {warm_elapsed:?}"
    );
}
