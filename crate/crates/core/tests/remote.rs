#![cfg(feature = "remote")]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use ontorel::embed::{
    embed_batch, BackendDescriptor, EmbedRequest, EmbedResponse, EmbeddingBackend, Health, RemoteBackend,
    RemoteConfig, SIDECAR_URL_ENV,
};
use ontorel::Error;

type Handler = dyn Fn(&str, &str, &str) -> (u16, String) + Send + Sync;

/// Serves `handler(method, path, body)` on a loopback port until the test
/// process exits.
fn serve(handler: Arc<Handler>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let handler = handler.clone();
            thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let mut parts = line.split_whitespace();
                let method = parts.next().unwrap_or_default().to_string();
                let path = parts.next().unwrap_or_default().to_string();
                let mut length = 0;
                loop {
                    let mut header = String::new();
                    reader.read_line(&mut header).unwrap();
                    if header.trim().is_empty() {
                        break;
                    }
                    if let Some((name, value)) = header.split_once(':') {
                        if name.eq_ignore_ascii_case("content-length") {
                            length = value.trim().parse().unwrap();
                        }
                    }
                }
                let mut body = vec![0; length];
                reader.read_exact(&mut body).unwrap();
                let (status, text) = handler(&method, &path, &String::from_utf8(body).unwrap());
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                    text.len()
                )
                .unwrap();
            });
        }
    });
    format!("http://{addr}")
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sidecar").join(name)).unwrap()
}

fn backend(url: &str, dim: usize) -> RemoteBackend {
    RemoteBackend::new(RemoteConfig {
        url: url.to_string(),
        dim,
        retries: 2,
        backoff: Duration::from_millis(5),
        timeout: Duration::from_secs(5),
        ..RemoteConfig::default()
    })
}

fn recorded() -> (EmbedRequest, EmbedResponse) {
    (
        serde_json::from_str(&fixture("embed_request.json")).unwrap(),
        serde_json::from_str(&fixture("embed_response.json")).unwrap(),
    )
}

fn replay() -> (String, Arc<Mutex<Vec<String>>>) {
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    let url = serve(Arc::new(move |method: &str, path: &str, body: &str| {
        log.lock().unwrap().push(body.to_string());
        match (method, path) {
            ("GET", "/health") => (200, fixture("health.json")),
            ("POST", "/embed") => (200, fixture("embed_response.json")),
            _ => (404, "{}".into()),
        }
    }));
    (url, seen)
}

#[test]
fn recorded_embed_round_trip() {
    let (url, seen) = replay();
    let (request, response) = recorded();
    let vectors = embed_batch(&request.texts, &backend(&url, 768)).unwrap();
    assert_eq!(vectors.len(), 2);
    for (v, expected) in vectors.iter().zip(&response.vectors) {
        assert_eq!(v.as_slice(), expected.as_slice());
    }
    let sent: EmbedRequest = serde_json::from_str(&seen.lock().unwrap()[0]).unwrap();
    assert_eq!(sent, request);
}

#[test]
fn recorded_health() {
    let (url, _) = replay();
    let health = backend(&url, 768).health().unwrap();
    assert_eq!(
        health,
        Health {
            status: "ok".into(),
            model_id: "scibert-scivocab-uncased".into(),
            dim: 768
        }
    );
    let err = backend(&url, 384).health().unwrap_err();
    assert_eq!(err.code(), "contract", "{err}");
}

#[test]
fn descriptor_checks_health_before_use() {
    let (url, _) = replay();
    let ok: BackendDescriptor = format!("remote:{url}#768").parse().unwrap();
    assert_eq!(ok.open().unwrap().dim(), 768);
    let wrong: BackendDescriptor = format!("remote:{url}#512").parse().unwrap();
    assert!(matches!(wrong.open(), Err(Error::Contract(_))));
}

#[test]
fn dimension_mismatch_is_a_contract_error() {
    let (url, _) = replay();
    let (request, _) = recorded();
    let err = backend(&url, 512).embed_texts(&request.texts).unwrap_err();
    assert!(matches!(err, Error::Contract(ref m) if m.contains("dim 768")), "{err}");
}

#[test]
fn count_mismatch_is_a_contract_error() {
    let (url, _) = replay();
    let texts: Vec<String> = (0..3).map(|i| format!("text {i}")).collect();
    let err = backend(&url, 768).embed_texts(&texts).unwrap_err();
    assert!(matches!(err, Error::Contract(ref m) if m.contains("2 vectors for 3 texts")), "{err}");
}

#[test]
fn server_errors_are_retried() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = calls.clone();
    let url = serve(Arc::new(move |_: &str, _: &str, _: &str| {
        if counter.fetch_add(1, Ordering::SeqCst) < 2 {
            (503, "{}".into())
        } else {
            (200, fixture("embed_response.json"))
        }
    }));
    let (request, _) = recorded();
    assert_eq!(backend(&url, 768).embed_texts(&request.texts).unwrap().len(), 2);
    assert_eq!(calls.load(Ordering::SeqCst), 3);
}

#[test]
fn retries_are_bounded() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = calls.clone();
    let url = serve(Arc::new(move |_: &str, _: &str, _: &str| {
        counter.fetch_add(1, Ordering::SeqCst);
        (500, "{}".into())
    }));
    let err = backend(&url, 768).embed_texts(&["a b".to_string()]).unwrap_err();
    assert!(matches!(err, Error::Transport { retries: 2, .. }), "{err}");
    assert_eq!(calls.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = calls.clone();
    let url = serve(Arc::new(move |_: &str, _: &str, _: &str| {
        counter.fetch_add(1, Ordering::SeqCst);
        (422, r#"{"detail":"texts must be non-empty"}"#.into())
    }));
    let err = backend(&url, 768).embed_texts(&["x".to_string()]).unwrap_err();
    assert!(matches!(err, Error::Contract(ref m) if m.contains("422")), "{err}");
    assert_eq!(calls.load(Ordering::SeqCst), 1);
}

#[test]
fn large_inputs_are_batched_in_order() {
    let calls = Arc::new(AtomicUsize::new(0));
    let counter = calls.clone();
    let url = serve(Arc::new(move |_: &str, _: &str, body: &str| {
        counter.fetch_add(1, Ordering::SeqCst);
        let request: EmbedRequest = serde_json::from_str(body).unwrap();
        assert!(request.texts.len() <= 64);
        let vectors: Vec<Vec<f64>> = request
            .texts
            .iter()
            .map(|t| vec![t.trim_start_matches('t').parse::<f64>().unwrap(); 4])
            .collect();
        let n = vectors.len();
        let response = EmbedResponse {
            vectors,
            model_id: "echo".into(),
            truncated: vec![false; n],
        };
        (200, serde_json::to_string(&response).unwrap())
    }));
    let texts: Vec<String> = (0..150).map(|i| format!("t{i}")).collect();
    let vectors = backend(&url, 4).embed_texts(&texts).unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 3);
    for (i, v) in vectors.iter().enumerate() {
        assert_eq!(v.as_slice()[0], i as f64);
    }
}

#[test]
fn unreachable_sidecar_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = backend(&format!("http://127.0.0.1:{port}"), 768)
        .embed_texts(&["x".to_string()])
        .unwrap_err();
    assert_eq!(err.code(), "transport");
}

/// Runs only when a sidecar is reachable at `ONTOREL_EMBED_URL`.
#[test]
fn live_sidecar_contract() {
    let Ok(url) = std::env::var(SIDECAR_URL_ENV) else {
        eprintln!("skipping: {SIDECAR_URL_ENV} not set");
        return;
    };
    let live = backend(&url, 768);
    assert_eq!(live.health().unwrap().dim, 768);
    let (request, _) = recorded();
    let first = live.embed_texts(&request.texts).unwrap();
    let second = live.embed_texts(&request.texts).unwrap();
    assert_eq!(first, second);
    assert!(first.iter().all(|v| v.dim() == 768));
}
