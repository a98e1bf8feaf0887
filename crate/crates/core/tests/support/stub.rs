//! Test doubles: a fixed-delay backend and a scripted HTTP completion server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use intentmfg_core::translate::{IntentText, TranslationBackend, TranslationResult};

/// Sleeps a fixed time per call and returns the same output.
pub struct DelayBackend {
    pub delay: Duration,
    pub output: String,
}

impl TranslationBackend for DelayBackend {
    fn name(&self) -> &str {
        "delay-stub"
    }

    fn translate(&self, _intent: &IntentText) -> TranslationResult {
        let started = Instant::now();
        thread::sleep(self.delay);
        TranslationResult::from_raw(self.output.clone(), started.elapsed().as_secs_f64() * 1000.0)
    }
}

#[derive(Debug, Clone)]
pub enum Reply {
    /// Read the request, then close without answering.
    Drop,
    /// Chat-completion response whose message content is the given text.
    Content(String),
    Status(u16, String),
}

pub struct StubServer {
    pub base_url: String,
    pub requests: Arc<Mutex<Vec<String>>>,
}

fn read_request(stream: &mut TcpStream) -> std::io::Result<String> {
    let mut reader = BufReader::new(stream);
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            break;
        }
        if let Some((name, value)) = trimmed.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;
    Ok(String::from_utf8_lossy(&body).into_owned())
}

fn respond(stream: &mut TcpStream, status: u16, body: &str) {
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.flush();
}

/// Serves `script` in order, repeating the last reply once exhausted.
pub fn serve(script: Vec<Reply>) -> StubServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base_url = format!("http://{}/v1", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let log = requests.clone();
    thread::spawn(move || {
        let mut i = 0;
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let Ok(body) = read_request(&mut stream) else { continue };
            log.lock().unwrap().push(body);
            let reply = script[i.min(script.len() - 1)].clone();
            i += 1;
            match reply {
                Reply::Drop => drop(stream),
                Reply::Content(text) => {
                    let body = serde_json::json!({
                        "choices": [{"message": {"role": "assistant", "content": text}}]
                    });
                    respond(&mut stream, 200, &body.to_string());
                }
                Reply::Status(code, body) => respond(&mut stream, code, &body),
            }
        }
    });
    StubServer { base_url, requests }
}
