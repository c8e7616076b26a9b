//! Durable storage on an embedded key-value database.
//!
//! Every table maps string keys to bytes or text. Case events are stored as
//! length-prefixed canonical JSON records keyed by `(case id, seq)`, so a case's
//! log is a contiguous key range.

use std::path::Path;

use redb::{Database, ReadableDatabase, ReadableTable, TableDefinition};
use serde::de::DeserializeOwned;
use serde::Serialize;

use normcase_core::to_canonical_json;

use crate::error::ServiceError;
use crate::types::{CaseEvent, CaseRecord, ModelVersion};

const MODELS: TableDefinition<&str, &[u8]> = TableDefinition::new("models");
const MODEL_META: TableDefinition<&str, &str> = TableDefinition::new("model_meta");
const CASES: TableDefinition<&str, &str> = TableDefinition::new("cases");
const EVENTS: TableDefinition<(&str, u64), &[u8]> = TableDefinition::new("events");
const SNAPSHOTS: TableDefinition<&str, &str> = TableDefinition::new("snapshots");
const SETTINGS: TableDefinition<&str, &str> = TableDefinition::new("settings");

pub const DB_FILE: &str = "normcase.redb";

/// Encodes one log record: 4-byte big-endian length, then the JSON bytes.
pub fn encode_record(json: &str) -> Vec<u8> {
    let len = u32::try_from(json.len()).expect("record under 4 GiB");
    let mut out = Vec::with_capacity(4 + json.len());
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(json.as_bytes());
    out
}

pub fn decode_record(bytes: &[u8]) -> Option<&str> {
    let (head, body) = bytes.split_at_checked(4)?;
    let len = u32::from_be_bytes(head.try_into().ok()?) as usize;
    if body.len() != len {
        return None;
    }
    std::str::from_utf8(body).ok()
}

pub struct Store {
    db: Database,
}

fn storage(e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Storage(e.to_string())
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, ServiceError> {
    serde_json::from_str(text).map_err(storage)
}

impl Store {
    /// Opens (or creates) the database inside `dir`.
    pub fn open(dir: &Path) -> Result<Store, ServiceError> {
        std::fs::create_dir_all(dir).map_err(storage)?;
        let db = Database::create(dir.join(DB_FILE)).map_err(storage)?;
        let txn = db.begin_write().map_err(storage)?;
        {
            txn.open_table(MODELS).map_err(storage)?;
            txn.open_table(MODEL_META).map_err(storage)?;
            txn.open_table(CASES).map_err(storage)?;
            txn.open_table(EVENTS).map_err(storage)?;
            txn.open_table(SNAPSHOTS).map_err(storage)?;
            txn.open_table(SETTINGS).map_err(storage)?;
        }
        txn.commit().map_err(storage)?;
        Ok(Store { db })
    }

    fn put_text(&self, table: TableDefinition<&str, &str>, key: &str, value: &str) -> Result<(), ServiceError> {
        let txn = self.db.begin_write().map_err(storage)?;
        txn.open_table(table)
            .map_err(storage)?
            .insert(key, value)
            .map_err(storage)?;
        txn.commit().map_err(storage)
    }

    fn get_text(&self, table: TableDefinition<&str, &str>, key: &str) -> Result<Option<String>, ServiceError> {
        let txn = self.db.begin_read().map_err(storage)?;
        let t = txn.open_table(table).map_err(storage)?;
        Ok(t.get(key).map_err(storage)?.map(|v| v.value().to_string()))
    }

    fn all_text(&self, table: TableDefinition<&str, &str>) -> Result<Vec<(String, String)>, ServiceError> {
        let txn = self.db.begin_read().map_err(storage)?;
        let t = txn.open_table(table).map_err(storage)?;
        t.iter()
            .map_err(storage)?
            .map(|row| {
                let (k, v) = row.map_err(storage)?;
                Ok((k.value().to_string(), v.value().to_string()))
            })
            .collect()
    }

    /// Stores a model version; an existing entry with the same id is kept.
    pub fn put_model(&self, model: &ModelVersion) -> Result<(), ServiceError> {
        let txn = self.db.begin_write().map_err(storage)?;
        {
            let mut sources = txn.open_table(MODELS).map_err(storage)?;
            if sources.get(model.version_id.as_str()).map_err(storage)?.is_none() {
                sources
                    .insert(model.version_id.as_str(), model.source.as_bytes())
                    .map_err(storage)?;
                let meta = serde_json::json!({ "registeredAt": model.registered_at });
                txn.open_table(MODEL_META)
                    .map_err(storage)?
                    .insert(model.version_id.as_str(), meta.to_string().as_str())
                    .map_err(storage)?;
            }
        }
        txn.commit().map_err(storage)
    }

    pub fn models(&self) -> Result<Vec<ModelVersion>, ServiceError> {
        let txn = self.db.begin_read().map_err(storage)?;
        let sources = txn.open_table(MODELS).map_err(storage)?;
        let meta = txn.open_table(MODEL_META).map_err(storage)?;
        let mut out = Vec::new();
        for row in sources.iter().map_err(storage)? {
            let (k, v) = row.map_err(storage)?;
            let id = k.value().to_string();
            let source = String::from_utf8(v.value().to_vec()).map_err(storage)?;
            let registered_at = match meta.get(id.as_str()).map_err(storage)? {
                Some(m) => {
                    let m: serde_json::Value = from_json(m.value())?;
                    serde_json::from_value(m["registeredAt"].clone()).map_err(storage)?
                }
                None => chrono::DateTime::UNIX_EPOCH,
            };
            out.push(ModelVersion {
                version_id: id,
                source,
                registered_at,
            });
        }
        Ok(out)
    }

    pub fn model_source(&self, version_id: &str) -> Result<Option<String>, ServiceError> {
        let txn = self.db.begin_read().map_err(storage)?;
        let sources = txn.open_table(MODELS).map_err(storage)?;
        let Some(v) = sources.get(version_id).map_err(storage)? else {
            return Ok(None);
        };
        String::from_utf8(v.value().to_vec()).map(Some).map_err(storage)
    }

    pub fn put_case(&self, record: &CaseRecord) -> Result<(), ServiceError> {
        self.put_text(CASES, &record.case_id, &to_canonical_json(record))
    }

    pub fn case(&self, id: &str) -> Result<Option<CaseRecord>, ServiceError> {
        self.get_text(CASES, id)?.map(|t| from_json(&t)).transpose()
    }

    pub fn cases(&self) -> Result<Vec<CaseRecord>, ServiceError> {
        self.all_text(CASES)?
            .into_iter()
            .map(|(_, t)| from_json(&t))
            .collect()
    }

    /// Appends an event and updates the case record in one transaction. The
    /// event's seq must follow the last stored one.
    pub fn append_event(&self, event: &CaseEvent, record: &CaseRecord) -> Result<(), ServiceError> {
        let txn = self.db.begin_write().map_err(storage)?;
        {
            let mut events = txn.open_table(EVENTS).map_err(storage)?;
            let id = event.case_id.as_str();
            let last = events
                .range((id, 0)..=(id, u64::MAX))
                .map_err(storage)?
                .next_back()
                .transpose()
                .map_err(storage)?
                .map_or(0, |(k, _)| k.value().1);
            if event.seq != last + 1 {
                return Err(ServiceError::Storage(format!(
                    "event seq {} does not follow {last} for case {id}",
                    event.seq
                )));
            }
            let record_bytes = encode_record(&to_canonical_json(event));
            events
                .insert((id, event.seq), record_bytes.as_slice())
                .map_err(storage)?;
            txn.open_table(CASES)
                .map_err(storage)?
                .insert(record.case_id.as_str(), to_canonical_json(record).as_str())
                .map_err(storage)?;
        }
        txn.commit().map_err(storage)
    }

    /// The case's log in seq order. Records that fail to decode end the log.
    pub fn events(&self, case_id: &str) -> Result<Vec<CaseEvent>, ServiceError> {
        let txn = self.db.begin_read().map_err(storage)?;
        let events = txn.open_table(EVENTS).map_err(storage)?;
        let mut out = Vec::new();
        for row in events
            .range((case_id, 0)..=(case_id, u64::MAX))
            .map_err(storage)?
        {
            let (_, v) = row.map_err(storage)?;
            let decoded = decode_record(v.value()).and_then(|t| serde_json::from_str(t).ok());
            match decoded {
                Some(e) => out.push(e),
                None => {
                    tracing::warn!(case_id, "undecodable event record; truncating log view");
                    break;
                }
            }
        }
        Ok(out)
    }

    pub fn event_count(&self, case_id: &str) -> Result<u64, ServiceError> {
        let txn = self.db.begin_read().map_err(storage)?;
        let events = txn.open_table(EVENTS).map_err(storage)?;
        let n = events
            .range((case_id, 0)..=(case_id, u64::MAX))
            .map_err(storage)?
            .count();
        Ok(n as u64)
    }

    pub fn put_snapshot(&self, key: &str, snapshot: &str) -> Result<(), ServiceError> {
        self.put_text(SNAPSHOTS, key, snapshot)
    }

    pub fn snapshot(&self, key: &str) -> Result<Option<String>, ServiceError> {
        self.get_text(SNAPSHOTS, key)
    }

    pub fn put_setting<T: Serialize>(&self, key: &str, value: &T) -> Result<(), ServiceError> {
        self.put_text(SETTINGS, key, &to_canonical_json(value))
    }

    pub fn setting<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, ServiceError> {
        self.get_text(SETTINGS, key)?.map(|t| from_json(&t)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_framing() {
        let bytes = encode_record("{\"a\":1}");
        assert_eq!(&bytes[..4], &[0, 0, 0, 7]);
        assert_eq!(decode_record(&bytes), Some("{\"a\":1}"));
        assert_eq!(decode_record(&bytes[..6]), None);
        assert_eq!(decode_record(&[0, 0]), None);
    }
}
