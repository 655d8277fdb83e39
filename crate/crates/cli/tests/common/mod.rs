//! Shared test helpers: an in-process OpenAI-compatible stub server and
//! corpus fixture builders.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde_json::{json, Value};

/// Local HTTP server speaking the OpenAI-compatible chat and embeddings wire
/// shapes. Embeddings are a pure function of the input text, so every run
/// against this server is reproducible. One thread per connection; the
/// listener thread dies with the test process.
pub struct StubServer {
    pub base_url: String,
    requests: Arc<AtomicUsize>,
}

impl StubServer {
    pub fn spawn() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
        let addr = listener.local_addr().unwrap();
        let requests = Arc::new(AtomicUsize::new(0));
        let counter = requests.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let counter = counter.clone();
                std::thread::spawn(move || serve_connection(stream, counter));
            }
        });
        StubServer { base_url: format!("http://{addr}"), requests }
    }

    /// Total requests served so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

fn serve_connection(stream: TcpStream, counter: Arc<AtomicUsize>) {
    let mut stream = stream;
    loop {
        let Some((path, body)) = read_request(&mut stream) else { return };
        counter.fetch_add(1, Ordering::SeqCst);
        let reply = match path.as_str() {
            "/v1/embeddings" => embeddings_reply(&body),
            "/v1/chat/completions" => chat_reply(&body),
            _ => json!({"error": "unknown path"}),
        };
        let payload = serde_json::to_vec(&reply).unwrap();
        let head = format!(
            "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n",
            payload.len()
        );
        if stream.write_all(head.as_bytes()).is_err() || stream.write_all(&payload).is_err() {
            return;
        }
    }
}

fn read_request(stream: &mut TcpStream) -> Option<(String, Value)> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).ok()? == 0 {
        return None;
    }
    let path = request_line.split_whitespace().nth(1)?.to_string();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).ok()?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).ok()?;
    Some((path, serde_json::from_slice(&body).ok()?))
}

/// Deterministic 16-dim embedding derived from the text bytes.
pub fn stub_embedding(text: &str) -> Vec<f64> {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(text.as_bytes());
    digest[..16].iter().map(|b| f64::from(*b) / 255.0 + 0.01).collect()
}

fn embeddings_reply(body: &Value) -> Value {
    let inputs = body["input"].as_array().cloned().unwrap_or_default();
    let data: Vec<Value> = inputs
        .iter()
        .enumerate()
        .map(|(i, text)| {
            json!({"index": i, "embedding": stub_embedding(text.as_str().unwrap_or(""))})
        })
        .collect();
    json!({"data": data})
}

/// Chat stub: echoes the source text back, prefixed with the first word of
/// the persona so each style yields a distinct rewrite.
fn chat_reply(body: &Value) -> Value {
    let system = body["messages"][0]["content"].as_str().unwrap_or("");
    let user = body["messages"][1]["content"].as_str().unwrap_or("");
    let source = user.split_once(":\n\n").map(|(_, s)| s).unwrap_or(user);
    let tag = system.split_whitespace().nth(4).unwrap_or("default");
    json!({"choices": [{"message": {"role": "assistant", "content": format!("{tag} {source}")}}]})
}

/// Write a complete group corpus: `n` groups, every style present on both
/// sides, query texts carrying their style tag (so tag-following mocks can
/// key on them).
pub fn write_group_corpus(path: &Path, n: usize) {
    use std::fmt::Write as _;
    let styles: Vec<String> = style_audit_core::corpus::StyleId::ALL
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut out = String::new();
    for g in 0..n {
        let query: Value = styles
            .iter()
            .map(|s| (s.clone(), json!(format!("what is item {g} ({s} phrasing)"))))
            .collect::<serde_json::Map<String, Value>>()
            .into();
        let document: Value = styles
            .iter()
            .map(|s| (s.clone(), json!(format!("document {g} about item {g} written as {s}"))))
            .collect::<serde_json::Map<String, Value>>()
            .into();
        writeln!(
            out,
            "{}",
            json!({"group_id": format!("g{g}"), "query": query, "document": document})
        )
        .unwrap();
    }
    std::fs::write(path, out).unwrap();
}

/// Path of the compiled `style-audit` binary.
pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_style-audit")
}

/// Run the binary, returning (exit code, stdout, stderr).
pub fn run_bin(args: &[&str]) -> (i32, String, String) {
    let output = std::process::Command::new(bin())
        .args(args)
        .output()
        .expect("spawn style-audit");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}
