//! Line-delimited event log: a header holding the scenario, one record per
//! event, and a closing report.

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::report::SimReport;
use crate::chain::{Coins, Hash};

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub step: u64,
    pub actor: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sidechain: Option<String>,
    /// Block whose application produced this event; events of reverted
    /// blocks stop counting once the block is reverted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<Hash>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Hash>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amount: Option<Coins>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Event {
    pub fn new(step: u64, actor: impl Into<String>, kind: &str) -> Self {
        Event {
            step,
            actor: actor.into(),
            kind: kind.to_string(),
            ..Event::default()
        }
    }

    pub fn sidechain(mut self, name: &str) -> Self {
        self.sidechain = Some(name.to_string());
        self
    }

    pub fn block(mut self, h: Hash) -> Self {
        self.block = Some(h);
        self
    }

    pub fn payload(mut self, h: Hash) -> Self {
        self.payload = Some(h);
        self
    }

    pub fn amount(mut self, a: Coins) -> Self {
        self.amount = Some(a);
        self
    }

    pub fn epoch(mut self, e: u64) -> Self {
        self.epoch = Some(e);
        self
    }

    pub fn index(mut self, i: u32) -> Self {
        self.index = Some(i);
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Header {
        version: u32,
        config: ScenarioConfig,
    },
    Event(Event),
    Report(SimReport),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn push(&mut self, mut event: Event) {
        event.seq = self.events.len() as u64;
        self.events.push(event);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn to_jsonl(&self, config: &ScenarioConfig, report: Option<&SimReport>) -> String {
        let mut out = String::new();
        let header = LogRecord::Header {
            version: LOG_VERSION,
            config: config.clone(),
        };
        push_line(&mut out, &header);
        for e in &self.events {
            push_line(&mut out, &LogRecord::Event(e.clone()));
        }
        if let Some(r) = report {
            push_line(&mut out, &LogRecord::Report(r.clone()));
        }
        out
    }
}

fn push_line(out: &mut String, record: &LogRecord) {
    out.push_str(&serde_json::to_string(record).expect("log records always serialize"));
    out.push('\n');
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedLog {
    pub config: Option<ScenarioConfig>,
    pub events: Vec<Event>,
    pub report: Option<SimReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct LogParseError {
    pub line: usize,
    pub message: String,
}

pub fn parse_jsonl(text: &str) -> Result<ParsedLog, LogParseError> {
    let mut parsed = ParsedLog::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| LogParseError {
            line: i + 1,
            message,
        };
        let record: LogRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        match record {
            LogRecord::Header { version, config } => {
                if version != LOG_VERSION {
                    return Err(err(format!("unsupported log version {version}")));
                }
                if parsed.config.is_some() {
                    return Err(err("second header".into()));
                }
                parsed.config = Some(config);
            }
            LogRecord::Event(e) => parsed.events.push(e),
            LogRecord::Report(r) => parsed.report = Some(r),
        }
    }
    Ok(parsed)
}
