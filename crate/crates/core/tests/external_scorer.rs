use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use lmgec::scorer::protocol::{parse_request, ScoreResponse};
use lmgec::scorer::{ExternalScorer, ScoreError, Scorer, ScorerSpec};
use lmgec::Sentence;

fn sentences(lines: &[&str]) -> Vec<Sentence> {
    lines.iter().map(|l| Sentence::from_tokenized(l)).collect()
}

fn length_score(s: &Sentence) -> f64 {
    -(s.len() as f64) - 0.5
}

/// Behaviour of the fake TCP server after the health ping.
#[derive(Clone, Copy)]
enum Mode {
    /// Answers requests in pairs, second one first.
    Reversed,
    /// Never answers.
    Silent,
    /// Answers the ping with a non-zero score.
    BadPing,
    /// Closes the connection after the ping.
    Hangup,
}

fn fake_server(mode: Mode) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        serve_connection(stream, mode);
    });
    addr
}

fn serve_connection(stream: TcpStream, mode: Mode) {
    let mut out = stream.try_clone().unwrap();
    let reader = BufReader::new(stream);
    let mut held: Option<ScoreResponse> = None;
    for line in reader.lines() {
        let Ok(line) = line else { return };
        let req = parse_request(&line).unwrap();
        let reply = if req.is_ping() {
            let logprob = if matches!(mode, Mode::BadPing) {
                -1.0
            } else {
                0.0
            };
            vec![ScoreResponse::Score { id: 0, logprob }]
        } else {
            match mode {
                Mode::Silent => continue,
                Mode::Hangup | Mode::BadPing => return,
                Mode::Reversed => {
                    let s = Sentence::from_words(&req.tokens);
                    let r = if s.word(0) == Some("fail") {
                        ScoreResponse::Error {
                            id: req.id as i64,
                            message: "asked to fail".into(),
                        }
                    } else {
                        ScoreResponse::Score {
                            id: req.id as i64,
                            logprob: length_score(&s),
                        }
                    };
                    match held.take() {
                        None => {
                            held = Some(r);
                            continue;
                        }
                        Some(first) => vec![r, first],
                    }
                }
            }
        };
        for r in reply {
            if out.write_all(r.to_line().as_bytes()).is_err() {
                return;
            }
        }
        if matches!(mode, Mode::Hangup) {
            return;
        }
    }
}

#[test]
fn out_of_order_responses_are_routed_by_id() {
    let addr = fake_server(Mode::Reversed);
    let scorer = ExternalScorer::connect(&addr, Duration::from_secs(5)).unwrap();
    let batch = sentences(&["a", "a b", "a b c", "a b c d"]);
    let scores = scorer.score_batch(&batch).unwrap();
    let expected: Vec<f64> = batch.iter().map(length_score).collect();
    assert_eq!(scores, expected);
}

#[test]
fn concurrent_callers_share_one_connection() {
    let addr = fake_server(Mode::Reversed);
    let scorer = Arc::new(ExternalScorer::connect(&addr, Duration::from_secs(5)).unwrap());
    let handles: Vec<_> = (0..4)
        .map(|k| {
            let scorer = Arc::clone(&scorer);
            thread::spawn(move || {
                let s = Sentence::from_words(vec!["w"; k + 1]);
                (k, scorer.score(&s).unwrap())
            })
        })
        .collect();
    for h in handles {
        let (k, score) = h.join().unwrap();
        assert_eq!(score, -(k as f64 + 1.0) - 0.5);
    }
}

#[test]
fn remote_errors_are_per_request() {
    let addr = fake_server(Mode::Reversed);
    let scorer = ExternalScorer::connect(&addr, Duration::from_secs(5)).unwrap();
    let err = scorer
        .score_batch(&sentences(&["fail now", "fine"]))
        .unwrap_err();
    assert!(!err.is_unavailable());
    assert!(
        matches!(err, ScoreError::InBatch { index: 0, .. }),
        "{err:?}"
    );
    let ok = scorer.score_batch(&sentences(&["x", "y z"])).unwrap();
    assert_eq!(ok, [-1.5, -2.5]);
}

#[test]
fn silent_backend_times_out() {
    let addr = fake_server(Mode::Silent);
    let scorer = ExternalScorer::connect(&addr, Duration::from_millis(200)).unwrap();
    let started = Instant::now();
    let err = scorer
        .score(&Sentence::from_tokenized("hello"))
        .unwrap_err();
    assert!(err.is_unavailable(), "{err:?}");
    assert!(started.elapsed() < Duration::from_secs(5));
}

#[test]
fn bad_ping_is_a_protocol_error() {
    let addr = fake_server(Mode::BadPing);
    let err = ExternalScorer::connect(&addr, Duration::from_secs(5)).unwrap_err();
    assert!(matches!(err, ScoreError::Protocol(_)), "{err:?}");
}

#[test]
fn closed_connection_makes_scorer_unavailable() {
    let addr = fake_server(Mode::Hangup);
    let scorer = ExternalScorer::connect(&addr, Duration::from_secs(5)).unwrap();
    let err = scorer
        .score(&Sentence::from_tokenized("hello"))
        .unwrap_err();
    assert!(err.is_unavailable(), "{err:?}");
    // Later calls fail fast as well.
    assert!(scorer
        .score(&Sentence::from_tokenized("again"))
        .unwrap_err()
        .is_unavailable());
}

#[test]
fn unreachable_address_is_unavailable() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    drop(listener);
    let err = ExternalScorer::connect(&addr, Duration::from_secs(1)).unwrap_err();
    assert!(err.is_unavailable());
}

#[test]
fn missing_program_is_unavailable() {
    let argv = vec!["/nonexistent/scorer-binary".to_owned()];
    let err = ExternalScorer::spawn(&argv, Duration::from_secs(1)).unwrap_err();
    assert!(err.is_unavailable());
}

fn python_bridge(extra: &[&str]) -> Option<Vec<String>> {
    let python = Command::new("python3").arg("--version").output().ok()?;
    if !python.status.success() {
        return None;
    }
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/length_bridge.py");
    let mut argv = vec!["python3".to_owned(), script.display().to_string()];
    argv.extend(extra.iter().map(|s| s.to_string()));
    Some(argv)
}

#[test]
fn subprocess_bridge_round_trip() {
    let Some(argv) = python_bridge(&[]) else {
        eprintln!("python3 not available; skipping");
        return;
    };
    let scorer = ExternalScorer::spawn(&argv, Duration::from_secs(10)).unwrap();
    let batch = sentences(&["the cat", "a", "one two three"]);
    assert_eq!(scorer.score_batch(&batch).unwrap(), [-2.5, -1.5, -3.5]);
    let err = scorer
        .score(&Sentence::from_tokenized("fail please"))
        .unwrap_err();
    assert!(matches!(err, ScoreError::Remote(_)));
    // Batch equals element-wise scoring.
    let many: Vec<Sentence> = (1..=50)
        .map(|k| Sentence::from_words(vec!["w"; k]))
        .collect();
    let batched = scorer.score_batch(&many).unwrap();
    for (s, b) in many.iter().zip(batched) {
        assert_eq!(scorer.score(s).unwrap(), b);
    }
}

#[test]
fn subprocess_bridge_via_spec() {
    let Some(argv) = python_bridge(&[]) else {
        eprintln!("python3 not available; skipping");
        return;
    };
    let spec: ScorerSpec = format!("external:cmd:{}", argv.join(" ")).parse().unwrap();
    let scorer = spec.open(Duration::from_secs(10)).unwrap();
    assert_eq!(
        scorer.score(&Sentence::from_tokenized("a b")).unwrap(),
        -2.5
    );
}

#[test]
fn dying_bridge_becomes_unavailable() {
    let Some(argv) = python_bridge(&["--exit-after", "1"]) else {
        eprintln!("python3 not available; skipping");
        return;
    };
    let scorer = ExternalScorer::spawn(&argv, Duration::from_secs(10)).unwrap();
    assert_eq!(scorer.score(&Sentence::from_tokenized("a")).unwrap(), -1.5);
    let err = scorer.score(&Sentence::from_tokenized("a b")).unwrap_err();
    assert!(err.is_unavailable(), "{err:?}");
}

#[test]
fn in_process_streams() {
    // A bridge built from the reference server loop over in-memory pipes.
    use std::io::{pipe, PipeReader, PipeWriter};
    let (req_r, req_w): (PipeReader, PipeWriter) = pipe().unwrap();
    let (resp_r, resp_w) = pipe().unwrap();
    struct Len;
    impl Scorer for Len {
        fn score(&self, s: &Sentence) -> Result<f64, ScoreError> {
            Ok(length_score(s))
        }
    }
    let server = thread::spawn(move || {
        lmgec::scorer::protocol::serve(&Len, BufReader::new(req_r), resp_w).unwrap();
    });
    let scorer = ExternalScorer::from_streams(resp_r, req_w, Duration::from_secs(5)).unwrap();
    assert_eq!(
        scorer.score(&Sentence::from_tokenized("x y")).unwrap(),
        -2.5
    );
    drop(scorer);
    server.join().unwrap();
}
