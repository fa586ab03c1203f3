//! HTTP backend behavior against a local stub server: retry on 429, failure
//! after exhausted retries, and wire-format fidelity of the request body.

mod common;

use spt_core::backend::{Backend, BackendConfig, BackendKind, ChatMessage};
use spt_core::error::SptError;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::thread;

/// Serves a canned sequence of (status, body) responses, one per connection,
/// and records each request body.
fn stub_server(responses: Vec<(u16, String)>) -> (String, thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = vec![0u8; 65536];
            let mut read = 0;
            // read until the full body per Content-Length has arrived
            loop {
                let n = stream.read(&mut buf[read..]).unwrap();
                read += n;
                let text = String::from_utf8_lossy(&buf[..read]).to_string();
                if let Some(header_end) = text.find("\r\n\r\n") {
                    let content_length = text
                        .lines()
                        .find(|l| l.to_lowercase().starts_with("content-length:"))
                        .and_then(|l| l.split(':').nth(1))
                        .and_then(|v| v.trim().parse::<usize>().ok())
                        .unwrap_or(0);
                    if text.len() >= header_end + 4 + content_length {
                        bodies.push(text[header_end + 4..].to_string());
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            let reason = if status == 200 { "OK" } else { "Error" };
            let response = format!(
                "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(response.as_bytes()).unwrap();
        }
        bodies
    });
    (format!("http://{addr}"), handle)
}

fn ok_body(content: &str) -> String {
    format!(
        r#"{{"id":"x","object":"chat.completion","created":0,"model":"m","choices":[{{"index":0,"message":{{"role":"assistant","content":"{content}"}},"finish_reason":"stop"}}]}}"#
    )
}

fn http_config(endpoint: String) -> BackendConfig {
    BackendConfig {
        kind: BackendKind::HttpOpenAiCompatible,
        endpoint,
        model: "test-model".into(),
        max_retries: 2,
        retry_backoff_ms: 5,
        timeout_secs: 5,
        api_key_env: "SPT_TEST_NO_SUCH_KEY".into(),
        ..Default::default()
    }
}

#[test]
fn retries_once_after_429() {
    let (endpoint, handle) = stub_server(vec![
        (429, r#"{"error":"rate limited"}"#.to_string()),
        (200, ok_body("hello")),
    ]);
    let backend = Backend::from_config(&http_config(endpoint)).unwrap();
    let messages = [ChatMessage::system("s"), ChatMessage::user("hi")];
    assert_eq!(backend.complete(&messages, 0.0).unwrap(), "hello");
    handle.join().unwrap();
}

#[test]
fn gives_up_after_retries_exhausted() {
    let (endpoint, handle) = stub_server(vec![
        (429, "{}".to_string()),
        (429, "{}".to_string()),
        (429, "{}".to_string()),
    ]);
    let backend = Backend::from_config(&http_config(endpoint)).unwrap();
    let messages = [ChatMessage::system("s"), ChatMessage::user("hi")];
    assert!(matches!(
        backend.complete(&messages, 0.0),
        Err(SptError::Provider { status: 429, .. })
    ));
    handle.join().unwrap();
}

#[test]
fn client_errors_fail_fast() {
    let (endpoint, handle) = stub_server(vec![(400, r#"{"error":"bad"}"#.to_string())]);
    let backend = Backend::from_config(&http_config(endpoint)).unwrap();
    let messages = [ChatMessage::system("s"), ChatMessage::user("hi")];
    assert!(matches!(
        backend.complete(&messages, 0.0),
        Err(SptError::Provider { status: 400, .. })
    ));
    handle.join().unwrap();
}

/// The request body must match the committed OpenAI-compatible golden
/// byte-for-byte, modulo the substituted prompt payload.
#[test]
fn request_body_matches_wire_golden() {
    let (endpoint, handle) = stub_server(vec![(200, ok_body("ok"))]);
    let backend = Backend::from_config(&http_config(endpoint)).unwrap();
    let messages = [ChatMessage::system("SYSTEM_PROMPT"), ChatMessage::user("USER_PROMPT")];
    backend.complete(&messages, 0.0).unwrap();
    let bodies = handle.join().unwrap();
    let golden = std::fs::read_to_string(common::golden_path("http_request.json")).unwrap();
    assert_eq!(bodies[0], golden.trim_end());
}
