use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use persona_core::llm::{ChatMessage, ChatRequest, ChatTransport, HttpTransport, LlmSettings, TransportError};

struct Recorded {
    request_line: String,
    authorization: Option<String>,
    body: String,
}

/// Serves one canned `(status, body)` response per connection, in order.
fn serve(responses: Vec<(u16, &'static str)>) -> (String, Arc<Mutex<Vec<Recorded>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut length = 0;
            let mut authorization = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (name, value) = line.split_once(':').unwrap();
                match name.to_ascii_lowercase().as_str() {
                    "content-length" => length = value.trim().parse().unwrap(),
                    "authorization" => authorization = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Recorded {
                request_line: request_line.trim_end().to_string(),
                authorization,
                body: String::from_utf8(buf).unwrap(),
            });
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (format!("http://{addr}/v1/"), seen)
}

fn request() -> ChatRequest {
    ChatRequest {
        model: "test-model".into(),
        messages: vec![ChatMessage::system("S"), ChatMessage::user("U")],
        temperature: None,
        max_tokens: None,
    }
}

fn settings(base_url: String) -> LlmSettings {
    LlmSettings {
        base_url: Some(base_url),
        model: Some("test-model".into()),
        api_key: Some("secret".into()),
    }
}

const OK_BODY: &str = r#"{"choices":[{"message":{"role":"assistant","content":"Score: 7"}}]}"#;

#[test]
fn posts_chat_completion_and_retries_server_errors_once() {
    let (base, seen) = serve(vec![(503, "busy"), (200, OK_BODY)]);
    let transport = HttpTransport::new(&settings(base));
    assert_eq!(transport.complete(&request()).unwrap(), "Score: 7");
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 2);
    assert_eq!(seen[0].request_line, "POST /v1/chat/completions HTTP/1.1");
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer secret"));
    assert_eq!(seen[0].body, serde_json::to_string(&request()).unwrap());
}

#[test]
fn client_errors_are_not_retried() {
    let (base, seen) = serve(vec![(400, "bad request"), (200, OK_BODY)]);
    let err = HttpTransport::new(&settings(base)).complete(&request()).unwrap_err();
    assert!(matches!(err, TransportError::Status { status: 400, .. }), "{err:?}");
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn gives_up_after_one_retry() {
    let (base, seen) = serve(vec![(500, "a"), (500, "b"), (200, OK_BODY)]);
    let err = HttpTransport::new(&settings(base)).complete(&request()).unwrap_err();
    assert!(matches!(err, TransportError::Status { status: 500, .. }));
    assert_eq!(seen.lock().unwrap().len(), 2);
}

#[test]
fn silent_server_times_out() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}/v1", listener.local_addr().unwrap());
    let transport = HttpTransport::with_timeout(&settings(base), Duration::from_millis(200));
    let started = std::time::Instant::now();
    let err = transport.complete(&request()).unwrap_err();
    assert!(matches!(err, TransportError::Network(_)), "{err:?}");
    assert!(started.elapsed() < Duration::from_secs(5));
    drop(listener);
}
