use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LlmError;
use crate::model::ActionKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub role: String,
    pub action: ActionKind,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Wall time of the call.
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LedgerTotals {
    pub calls: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub seconds: f64,
}

impl LedgerTotals {
    pub fn tokens(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

/// Currency per 1000 tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub prompt_per_1k: f64,
    pub completion_per_1k: f64,
}

/// Per-call and cumulative token, time and cost accounting.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CostLedger {
    pub entries: Vec<LedgerEntry>,
    pub totals: LedgerTotals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Rates>,
}

impl CostLedger {
    pub fn record(&mut self, entry: LedgerEntry) {
        self.totals.calls += 1;
        self.totals.prompt_tokens += entry.prompt_tokens;
        self.totals.completion_tokens += entry.completion_tokens;
        self.totals.seconds += entry.seconds;
        self.entries.push(entry);
    }

    /// Totals recomputed from the entries.
    pub fn fold_entries(&self) -> LedgerTotals {
        self.entries
            .iter()
            .fold(LedgerTotals::default(), |mut t, e| {
                t.calls += 1;
                t.prompt_tokens += e.prompt_tokens;
                t.completion_tokens += e.completion_tokens;
                t.seconds += e.seconds;
                t
            })
    }

    pub fn is_consistent(&self) -> bool {
        let folded = self.fold_entries();
        folded.calls == self.totals.calls
            && folded.prompt_tokens == self.totals.prompt_tokens
            && folded.completion_tokens == self.totals.completion_tokens
            && (folded.seconds - self.totals.seconds).abs() <= 1e-9 * folded.seconds.max(1.0)
    }

    pub fn estimate_cost(&self) -> Result<f64, LlmError> {
        let rates = self.rates.ok_or(LlmError::RatesUnset)?;
        Ok(self.totals.prompt_tokens as f64 / 1000.0 * rates.prompt_per_1k
            + self.totals.completion_tokens as f64 / 1000.0 * rates.completion_per_1k)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let json = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(path, json + "\n")
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}
