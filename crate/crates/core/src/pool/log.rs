//! `messages.jsonl`: one JSON object per published message.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::document::{parse_document, render_document, DocumentKind};
use crate::model::{ActionKind, Message, MessageContent};

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("message log I/O: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("line {line}: expected seq {expected}, found {found}")]
    SeqGap {
        line: usize,
        expected: u64,
        found: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    pub sent_from: String,
    pub cause_by: ActionKind,
    pub send_to: Vec<String>,
    pub timestamp: DateTime<Utc>,
    pub content_kind: String,
    pub content: serde_json::Value,
}

impl LogRecord {
    pub fn from_message(msg: &Message) -> Self {
        let content = match &msg.content {
            MessageContent::Text(t) => serde_json::Value::String(t.clone()),
            // Pool documents were validated on the way in.
            MessageContent::Document(d) => serde_json::Value::String(
                render_document(d).expect("pool documents satisfy their schema"),
            ),
            MessageContent::Code(c) => serde_json::to_value(c).expect("serializable"),
            MessageContent::TestReport(r) => serde_json::to_value(r).expect("serializable"),
        };
        LogRecord {
            seq: msg.seq,
            sent_from: msg.sent_from.clone(),
            cause_by: msg.cause_by,
            send_to: msg.send_to.iter().cloned().collect(),
            timestamp: msg.timestamp,
            content_kind: msg.content.kind_token().to_string(),
            content,
        }
    }

    pub fn into_message(self) -> Result<Message, String> {
        let as_str = |v: serde_json::Value| match v {
            serde_json::Value::String(s) => Ok(s),
            other => Err(format!("expected string content, got {other}")),
        };
        let content = match self.content_kind.as_str() {
            "text" => MessageContent::Text(as_str(self.content)?),
            "code_artifact" => MessageContent::Code(
                serde_json::from_value(self.content).map_err(|e| e.to_string())?,
            ),
            "test_report" => MessageContent::TestReport(
                serde_json::from_value(self.content).map_err(|e| e.to_string())?,
            ),
            token => {
                let kind = DocumentKind::from_token(token)
                    .ok_or_else(|| format!("unknown content_kind {token:?}"))?;
                let mut doc =
                    parse_document(kind, &as_str(self.content)?).map_err(|e| e.to_string())?;
                doc.source_text = None;
                MessageContent::Document(doc)
            }
        };
        Ok(Message {
            seq: self.seq,
            sent_from: self.sent_from,
            cause_by: self.cause_by,
            content,
            send_to: self.send_to.into_iter().collect(),
            timestamp: self.timestamp,
        })
    }
}

pub fn write_log<'a>(
    path: &Path,
    messages: impl IntoIterator<Item = &'a Message>,
) -> Result<(), LogError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    for msg in messages {
        let line = serde_json::to_string(&LogRecord::from_message(msg))
            .map_err(io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads every record. Blank lines are skipped; anything else that does not
/// decode is reported with its 1-based line number.
pub fn read_log(path: &Path) -> Result<Vec<Message>, LogError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut messages = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |reason: String| LogError::Corrupt {
            line: idx + 1,
            reason,
        };
        let record: LogRecord = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
        messages.push((idx + 1, record.into_message().map_err(corrupt)?));
    }
    check_contiguous(&messages)?;
    Ok(messages.into_iter().map(|(_, m)| m).collect())
}

fn check_contiguous(messages: &[(usize, Message)]) -> Result<(), LogError> {
    for (expected, (line, msg)) in messages.iter().enumerate() {
        if msg.seq != expected as u64 {
            return Err(LogError::SeqGap {
                line: *line,
                expected: expected as u64,
                found: msg.seq,
            });
        }
    }
    Ok(())
}
