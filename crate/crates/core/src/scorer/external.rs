//! Client for scorers living in another process.
//!
//! Requests are written as they are issued; a reader thread routes each
//! response to its caller by id, so any number of callers may have requests
//! in flight and responses may arrive in any order.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use log::{debug, warn};

use super::protocol::{parse_response, ScoreRequest, ScoreResponse, PING_ID};
use super::{ScoreError, Scorer};
use crate::text::Sentence;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

type Reply = Result<f64, ScoreError>;

#[derive(Default)]
struct Routing {
    waiting: HashMap<u64, Sender<Reply>>,
    /// Set once the response stream has ended; no request can succeed after.
    closed: Option<String>,
}

pub struct ExternalScorer {
    writer: Mutex<Box<dyn Write + Send>>,
    routing: Arc<Mutex<Routing>>,
    next_id: AtomicU64,
    timeout: Duration,
    child: Option<Mutex<Child>>,
    tcp: Option<TcpStream>,
}

impl std::fmt::Debug for ExternalScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalScorer")
            .field("timeout", &self.timeout)
            .field("subprocess", &self.child.is_some())
            .field("tcp", &self.tcp.is_some())
            .finish()
    }
}

impl ExternalScorer {
    /// Spawns `argv` and talks to it over stdin/stdout. The child's stderr
    /// is inherited.
    pub fn spawn(argv: &[String], timeout: Duration) -> Result<Self, ScoreError> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| ScoreError::Unavailable("empty scorer command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ScoreError::Unavailable(format!("cannot spawn {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let mut scorer = Self::start(stdout, stdin, timeout);
        scorer.child = Some(Mutex::new(child));
        scorer.health_check()?;
        Ok(scorer)
    }

    /// Connects to `host:port`.
    pub fn connect(addr: &str, timeout: Duration) -> Result<Self, ScoreError> {
        let stream = TcpStream::connect(addr)
            .map_err(|e| ScoreError::Unavailable(format!("cannot connect to {addr}: {e}")))?;
        let _ = stream.set_nodelay(true);
        let read_half = stream
            .try_clone()
            .map_err(|e| ScoreError::Unavailable(e.to_string()))?;
        let write_half = stream
            .try_clone()
            .map_err(|e| ScoreError::Unavailable(e.to_string()))?;
        let mut scorer = Self::start(read_half, write_half, timeout);
        scorer.tcp = Some(stream);
        scorer.health_check()?;
        Ok(scorer)
    }

    /// Uses an arbitrary duplex stream pair. Performs the health ping.
    pub fn from_streams<R, W>(reader: R, writer: W, timeout: Duration) -> Result<Self, ScoreError>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let scorer = Self::start(reader, writer, timeout);
        scorer.health_check()?;
        Ok(scorer)
    }

    fn start<R, W>(reader: R, writer: W, timeout: Duration) -> Self
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let routing = Arc::new(Mutex::new(Routing::default()));
        let thread_routing = Arc::clone(&routing);
        thread::Builder::new()
            .name("scorer-responses".into())
            .spawn(move || read_responses(BufReader::new(reader), &thread_routing))
            .expect("spawning the response reader");
        ExternalScorer {
            writer: Mutex::new(Box::new(writer)),
            routing,
            next_id: AtomicU64::new(PING_ID + 1),
            timeout,
            child: None,
            tcp: None,
        }
    }

    fn health_check(&self) -> Result<(), ScoreError> {
        let rx = self.send(ScoreRequest::ping())?;
        match self.wait(PING_ID, rx)? {
            0.0 => Ok(()),
            lp => Err(ScoreError::Protocol(format!(
                "health ping answered with logprob {lp}"
            ))),
        }
    }

    fn send(&self, request: ScoreRequest) -> Result<Receiver<Reply>, ScoreError> {
        let (tx, rx) = mpsc::channel();
        {
            let mut routing = self.routing.lock().expect("routing lock");
            if let Some(reason) = &routing.closed {
                return Err(ScoreError::Unavailable(reason.clone()));
            }
            routing.waiting.insert(request.id, tx);
        }
        let line = request.to_line();
        let written = {
            let mut w = self.writer.lock().expect("writer lock");
            w.write_all(line.as_bytes()).and_then(|_| w.flush())
        };
        if let Err(e) = written {
            self.forget(request.id);
            return Err(ScoreError::Unavailable(format!(
                "cannot write request: {e}"
            )));
        }
        Ok(rx)
    }

    fn wait(&self, id: u64, rx: Receiver<Reply>) -> Reply {
        match rx.recv_timeout(self.timeout) {
            Ok(reply) => reply,
            Err(RecvTimeoutError::Timeout) => {
                self.forget(id);
                Err(ScoreError::Unavailable(format!(
                    "no response to request {id} within {:?}",
                    self.timeout
                )))
            }
            Err(RecvTimeoutError::Disconnected) => {
                Err(ScoreError::Unavailable("response stream closed".into()))
            }
        }
    }

    fn forget(&self, id: u64) {
        self.routing
            .lock()
            .expect("routing lock")
            .waiting
            .remove(&id);
    }

    fn request(&self, sentence: &Sentence) -> Result<(u64, Receiver<Reply>), ScoreError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let rx = self.send(ScoreRequest {
            id,
            tokens: sentence.to_words(),
        })?;
        Ok((id, rx))
    }
}

impl Scorer for ExternalScorer {
    fn score(&self, sentence: &Sentence) -> Result<f64, ScoreError> {
        let (id, rx) = self.request(sentence)?;
        self.wait(id, rx)
    }

    /// Writes every request before waiting for the first answer.
    fn score_batch(&self, sentences: &[Sentence]) -> Result<Vec<f64>, ScoreError> {
        let mut in_flight = Vec::with_capacity(sentences.len());
        for (i, s) in sentences.iter().enumerate() {
            match self.request(s) {
                Ok(pair) => in_flight.push(pair),
                Err(e) => {
                    for (id, _) in in_flight {
                        self.forget(id);
                    }
                    return Err(e.at_index(i));
                }
            }
        }
        let mut out = Vec::with_capacity(sentences.len());
        let mut pending = in_flight.into_iter().enumerate();
        while let Some((i, (id, rx))) = pending.next() {
            match self.wait(id, rx) {
                Ok(lp) => out.push(lp),
                Err(e) => {
                    for (_, (id, _)) in pending {
                        self.forget(id);
                    }
                    return Err(e.at_index(i));
                }
            }
        }
        Ok(out)
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if let Some(tcp) = &self.tcp {
            let _ = tcp.shutdown(std::net::Shutdown::Both);
        }
        if let Some(child) = &self.child {
            let mut child = child.lock().unwrap_or_else(|e| e.into_inner());
            // Closing stdin lets a well-behaved bridge exit on EOF.
            *self.writer.lock().unwrap_or_else(|e| e.into_inner()) = Box::new(io::sink());
            for _ in 0..20 {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn read_responses<R: BufRead>(mut reader: R, routing: &Mutex<Routing>) {
    let mut buf = Vec::new();
    let reason = loop {
        buf.clear();
        match reader.read_until(b'\n', &mut buf) {
            Ok(0) => break "scorer closed its output".to_owned(),
            Ok(_) => {}
            Err(e) => break format!("reading scorer output failed: {e}"),
        }
        let line = String::from_utf8_lossy(&buf);
        if line.trim().is_empty() {
            continue;
        }
        let response = match parse_response(&line) {
            Ok(r) => r,
            Err(e) => {
                warn!("ignoring unreadable scorer response {:?}: {e}", line.trim());
                continue;
            }
        };
        let Ok(id) = u64::try_from(response.id()) else {
            warn!("scorer reported an uncorrelated error: {:?}", line.trim());
            continue;
        };
        let sender = routing.lock().expect("routing lock").waiting.remove(&id);
        let Some(sender) = sender else {
            debug!("dropping response for unknown or abandoned request {id}");
            continue;
        };
        let reply = match response {
            ScoreResponse::Score { logprob, .. } => Ok(logprob),
            ScoreResponse::Error { message, .. } => Err(ScoreError::Remote(message)),
        };
        let _ = sender.send(reply);
    };
    let mut routing = routing.lock().expect("routing lock");
    for (_, sender) in routing.waiting.drain() {
        let _ = sender.send(Err(ScoreError::Unavailable(reason.clone())));
    }
    routing.closed = Some(reason);
}
