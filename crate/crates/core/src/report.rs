//! Report document shared by the command line pipelines: one JSON envelope
//! with a `kind` discriminator, the configuration that produced it, per-point
//! rows, aggregates and a verdict. Field order is fixed by the struct layout
//! and serde_json's sorted maps, so identical runs serialize byte-identically.

use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Serialize)]
pub struct Report {
    pub kind: String,
    pub config: BTreeMap<String, Value>,
    pub per_point: Vec<Value>,
    pub aggregates: BTreeMap<String, Value>,
    pub verdict: String,
}

impl Report {
    pub fn new(kind: &str) -> Report {
        Report {
            kind: kind.to_string(),
            config: BTreeMap::new(),
            per_point: Vec::new(),
            aggregates: BTreeMap::new(),
            verdict: String::new(),
        }
    }

    pub fn config_entry(&mut self, key: &str, value: impl Serialize) {
        self.config.insert(
            key.to_string(),
            serde_json::to_value(value).expect("config serializes"),
        );
    }

    pub fn aggregate(&mut self, key: &str, value: impl Serialize) {
        self.aggregates.insert(
            key.to_string(),
            serde_json::to_value(value).expect("aggregate serializes"),
        );
    }

    pub fn push_point(&mut self, value: impl Serialize) {
        self.per_point
            .push(serde_json::to_value(value).expect("row serializes"));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
