//! Newline-delimited JSON client for external scorers and translators.
//!
//! One compact JSON object per line in each direction. Scorer requests are
//! `{"id":N,"texts":[...]}` answered by `{"id":N,"scores":[...]}`;
//! translator requests add `"src"` and `"tgt"` and are answered by
//! `{"id":N,"texts":[...]}`. The transport is either the stdio of a spawned
//! process (`stdio:<command> [args...]`) or a TCP stream (`tcp:<host>:<port>`).

use std::fmt;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("invalid endpoint {0:?}: expected stdio:<command> or tcp:<host>:<port>")]
    BadEndpoint(String),
    #[error("spawning {endpoint}")]
    Spawn {
        endpoint: String,
        #[source]
        source: io::Error,
    },
    #[error("connection refused by {endpoint}")]
    ConnectionRefused {
        endpoint: String,
        #[source]
        source: io::Error,
    },
    #[error("transport failure on batch of {} texts", batch.len())]
    Transport {
        batch: Vec<String>,
        #[source]
        source: io::Error,
    },
    #[error("backend closed the stream during a batch of {} texts", batch.len())]
    Closed { batch: Vec<String> },
    #[error("no response within {after:?} for a batch of {} texts", batch.len())]
    Timeout { after: Duration, batch: Vec<String> },
    #[error("response id {got} does not match request id {expected}")]
    IdMismatch { expected: u64, got: u64 },
    #[error("expected {expected} results, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("score at position {index} is not a finite number")]
    NonFiniteScore { index: usize },
    #[error("malformed response ({reason}): {line}")]
    Malformed { reason: String, line: String },
}

impl BackendError {
    /// Transport-level failures; the batch may be resent on a new connection.
    pub fn is_retriable(&self) -> bool {
        matches!(
            self,
            BackendError::Transport { .. }
                | BackendError::Closed { .. }
                | BackendError::Timeout { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Stdio { program: String, args: Vec<String> },
    Tcp(String),
}

impl FromStr for Endpoint {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(cmd) = s.strip_prefix("stdio:") {
            let mut parts = cmd.split_whitespace().map(str::to_string);
            let program = parts
                .next()
                .ok_or_else(|| BackendError::BadEndpoint(s.to_string()))?;
            Ok(Endpoint::Stdio {
                program,
                args: parts.collect(),
            })
        } else if let Some(addr) = s.strip_prefix("tcp:") {
            if addr.is_empty() {
                return Err(BackendError::BadEndpoint(s.to_string()));
            }
            Ok(Endpoint::Tcp(addr.to_string()))
        } else {
            Err(BackendError::BadEndpoint(s.to_string()))
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Stdio { program, args } => {
                write!(f, "stdio:{program}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                Ok(())
            }
            Endpoint::Tcp(addr) => write!(f, "tcp:{addr}"),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: u64,
    pub texts: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub id: u64,
    pub scores: Vec<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TranslateRequest {
    pub id: u64,
    pub texts: Vec<String>,
    pub src: String,
    pub tgt: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TranslateResponse {
    pub id: u64,
    pub texts: Vec<String>,
}

/// Parses and validates one scorer response line against request `id`.
pub fn decode_scores(line: &str, id: u64, expected: usize) -> Result<Vec<f64>, BackendError> {
    let resp: ScoreResponse = serde_json::from_str(line).map_err(|e| malformed(e, line))?;
    if resp.id != id {
        return Err(BackendError::IdMismatch {
            expected: id,
            got: resp.id,
        });
    }
    if resp.scores.len() != expected {
        return Err(BackendError::CountMismatch {
            expected,
            got: resp.scores.len(),
        });
    }
    resp.scores
        .iter()
        .enumerate()
        .map(|(index, v)| match v {
            serde_json::Value::Number(n) => n
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or(BackendError::NonFiniteScore { index }),
            // null and "NaN"/"Infinity" strings are how non-finite floats
            // usually leak into JSON
            serde_json::Value::Null | serde_json::Value::String(_) => {
                Err(BackendError::NonFiniteScore { index })
            }
            other => Err(BackendError::Malformed {
                reason: format!("score {index} is {other}"),
                line: line.to_string(),
            }),
        })
        .collect()
}

pub fn decode_translations(
    line: &str,
    id: u64,
    expected: usize,
) -> Result<Vec<String>, BackendError> {
    let resp: TranslateResponse = serde_json::from_str(line).map_err(|e| malformed(e, line))?;
    if resp.id != id {
        return Err(BackendError::IdMismatch {
            expected: id,
            got: resp.id,
        });
    }
    if resp.texts.len() != expected {
        return Err(BackendError::CountMismatch {
            expected,
            got: resp.texts.len(),
        });
    }
    Ok(resp.texts)
}

fn malformed(e: serde_json::Error, line: &str) -> BackendError {
    BackendError::Malformed {
        reason: e.to_string(),
        line: line.to_string(),
    }
}

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    child: Option<Child>,
    socket: Option<TcpStream>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        // the reader thread holds a clone, so closing our handle alone
        // would leave the socket open
        if let Some(socket) = self.socket.as_ref() {
            let _ = socket.shutdown(std::net::Shutdown::Both);
        }
        if let Some(child) = self.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn spawn_reader<R: io::Read + Send + 'static>(reader: R) -> Receiver<io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut reader = BufReader::new(reader);
        loop {
            let mut line = String::new();
            match reader.read_line(&mut line) {
                Ok(0) => break,
                Ok(_) => {
                    let trimmed = line.trim_end_matches(['\n', '\r']).to_string();
                    if tx.send(Ok(trimmed)).is_err() {
                        break;
                    }
                }
                Err(e) => {
                    let _ = tx.send(Err(e));
                    break;
                }
            }
        }
    });
    rx
}

impl Connection {
    fn open(endpoint: &Endpoint, timeout: Duration) -> Result<Self, BackendError> {
        match endpoint {
            Endpoint::Stdio { program, args } => {
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|source| BackendError::Spawn {
                        endpoint: endpoint.to_string(),
                        source,
                    })?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Ok(Self {
                    writer: Box::new(stdin),
                    lines: spawn_reader(stdout),
                    child: Some(child),
                    socket: None,
                })
            }
            Endpoint::Tcp(addr) => {
                let refused = |source| BackendError::ConnectionRefused {
                    endpoint: endpoint.to_string(),
                    source,
                };
                let mut last = io::Error::new(io::ErrorKind::NotFound, "no address resolved");
                for sock in addr.to_socket_addrs().map_err(refused)? {
                    match TcpStream::connect_timeout(&sock, timeout) {
                        Ok(stream) => {
                            let reader = stream.try_clone().map_err(refused)?;
                            let socket = stream.try_clone().map_err(refused)?;
                            return Ok(Self {
                                writer: Box::new(stream),
                                lines: spawn_reader(reader),
                                child: None,
                                socket: Some(socket),
                            });
                        }
                        Err(e) => last = e,
                    }
                }
                Err(refused(last))
            }
        }
    }
}

/// A request/response client over one lazily opened connection.
///
/// Requests on one client are serialized; concurrent callers each get their
/// own correctly aligned response. A connection that times out or fails is
/// dropped and reopened on the next call.
pub struct JsonLineClient {
    endpoint: Endpoint,
    timeout: Duration,
    next_id: AtomicU64,
    conn: Mutex<Option<Connection>>,
}

impl JsonLineClient {
    pub fn new(endpoint: Endpoint, timeout: Duration) -> Self {
        Self {
            endpoint,
            timeout,
            next_id: AtomicU64::new(1),
            conn: Mutex::new(None),
        }
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    /// Sends the line produced by `build(id)` and returns `(id, response)`.
    pub fn round_trip(
        &self,
        batch: &[String],
        build: impl FnOnce(u64) -> String,
    ) -> Result<(u64, String), BackendError> {
        let mut guard = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            *guard = Some(Connection::open(&self.endpoint, self.timeout)?);
        }
        let conn = guard.as_mut().expect("connection just opened");
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let mut line = build(id);
        line.push('\n');
        let sent = conn
            .writer
            .write_all(line.as_bytes())
            .and_then(|_| conn.writer.flush());
        if let Err(source) = sent {
            *guard = None;
            return Err(BackendError::Transport {
                batch: batch.to_vec(),
                source,
            });
        }
        match conn.lines.recv_timeout(self.timeout) {
            Ok(Ok(resp)) => Ok((id, resp)),
            Ok(Err(source)) => {
                *guard = None;
                Err(BackendError::Transport {
                    batch: batch.to_vec(),
                    source,
                })
            }
            Err(RecvTimeoutError::Timeout) => {
                *guard = None;
                Err(BackendError::Timeout {
                    after: self.timeout,
                    batch: batch.to_vec(),
                })
            }
            Err(RecvTimeoutError::Disconnected) => {
                *guard = None;
                Err(BackendError::Closed {
                    batch: batch.to_vec(),
                })
            }
        }
    }
}
