//! Scorer wire messages: one JSON object per line.
//!
//! ```text
//! -> {"id":7,"tokens":["the","cat"]}
//! <- {"id":7,"logprob":-8.1}
//! <- {"id":7,"error":"sequence too long"}
//! ```
//!
//! `{"id":0,"tokens":[]}` is a health ping answered with
//! `{"id":0,"logprob":0.0}`. A server that cannot read a request line at
//! all answers with id -1.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use super::Scorer;
use crate::text::Sentence;

pub const PING_ID: u64 = 0;
/// Id used in error responses to lines that could not be parsed.
pub const UNPARSEABLE_ID: i64 = -1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: u64,
    pub tokens: Vec<String>,
}

impl ScoreRequest {
    pub fn ping() -> Self {
        ScoreRequest {
            id: PING_ID,
            tokens: Vec::new(),
        }
    }

    pub fn is_ping(&self) -> bool {
        self.id == PING_ID && self.tokens.is_empty()
    }

    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("request serialization cannot fail");
        line.push('\n');
        line
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScoreResponse {
    Score { id: i64, logprob: f64 },
    Error { id: i64, message: String },
}

impl ScoreResponse {
    pub fn id(&self) -> i64 {
        match self {
            ScoreResponse::Score { id, .. } | ScoreResponse::Error { id, .. } => *id,
        }
    }

    pub fn to_line(&self) -> String {
        let value = match self {
            ScoreResponse::Score { id, logprob } => {
                serde_json::json!({ "id": id, "logprob": logprob })
            }
            ScoreResponse::Error { id, message } => {
                serde_json::json!({ "id": id, "error": message })
            }
        };
        let mut line = value.to_string();
        line.push('\n');
        line
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ProtocolError(pub String);

fn object(line: &str) -> Result<Map<String, Value>, ProtocolError> {
    match serde_json::from_str::<Value>(line.trim()) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(ProtocolError("message is not a JSON object".into())),
        Err(e) => Err(ProtocolError(format!("invalid JSON: {e}"))),
    }
}

/// Parses a response line. Exactly one of `logprob` (finite number) and
/// `error` (string) must be present.
pub fn parse_response(line: &str) -> Result<ScoreResponse, ProtocolError> {
    let map = object(line)?;
    let id = map
        .get("id")
        .and_then(Value::as_i64)
        .ok_or_else(|| ProtocolError("missing or non-integer \"id\"".into()))?;
    match (map.get("logprob"), map.get("error")) {
        (Some(lp), None) => {
            let logprob = lp.as_f64().filter(|v| v.is_finite()).ok_or_else(|| {
                ProtocolError(format!("response {id}: logprob is not a finite number"))
            })?;
            Ok(ScoreResponse::Score { id, logprob })
        }
        (None, Some(Value::String(message))) => Ok(ScoreResponse::Error {
            id,
            message: message.clone(),
        }),
        (None, Some(_)) => Err(ProtocolError(format!(
            "response {id}: error is not a string"
        ))),
        (Some(_), Some(_)) => Err(ProtocolError(format!(
            "response {id}: both logprob and error present"
        ))),
        (None, None) => Err(ProtocolError(format!(
            "response {id}: neither logprob nor error present"
        ))),
    }
}

pub fn parse_request(line: &str) -> Result<ScoreRequest, ProtocolError> {
    let map = object(line)?;
    serde_json::from_value(Value::Object(map))
        .map_err(|e| ProtocolError(format!("bad request: {e}")))
}

/// Serves `scorer` over the protocol until `input` reaches EOF.
///
/// Requests are answered in arrival order. Unparseable lines get an error
/// response with id -1 and never stop the loop.
pub fn serve<S, R, W>(scorer: &S, input: R, mut output: W) -> io::Result<()>
where
    S: Scorer + ?Sized,
    R: BufRead,
    W: Write,
{
    for line in input.split(b'\n') {
        let line = line?;
        let text = String::from_utf8_lossy(&line);
        if text.trim().is_empty() {
            continue;
        }
        let response = match parse_request(&text) {
            Err(e) => ScoreResponse::Error {
                id: UNPARSEABLE_ID,
                message: e.0,
            },
            Ok(req) if req.is_ping() => ScoreResponse::Score {
                id: 0,
                logprob: 0.0,
            },
            Ok(req) => {
                let id = req.id as i64;
                match scorer.score(&Sentence::from_words(&req.tokens)) {
                    Ok(lp) if lp.is_finite() => ScoreResponse::Score { id, logprob: lp },
                    Ok(lp) => ScoreResponse::Error {
                        id,
                        message: format!("non-finite score {lp}"),
                    },
                    Err(e) => ScoreResponse::Error {
                        id,
                        message: e.to_string(),
                    },
                }
            }
        };
        output.write_all(response.to_line().as_bytes())?;
        output.flush()?;
    }
    Ok(())
}
