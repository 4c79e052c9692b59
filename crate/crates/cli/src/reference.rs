//! Published values embedded from `data/reference_values.toml`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;

const SOURCE: &str = include_str!("../data/reference_values.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RefValue {
    Number(f64),
    Text(String),
}

pub type References = BTreeMap<String, BTreeMap<String, RefValue>>;

pub fn all() -> &'static References {
    static PARSED: OnceLock<References> = OnceLock::new();
    PARSED.get_or_init(|| toml::from_str(SOURCE).expect("embedded reference file is valid TOML"))
}

/// Numeric reference for `key` in `table`. Panics on a missing key: the
/// data file and the table builders ship together.
pub fn number(table: &str, key: &str) -> f64 {
    match all().get(table).and_then(|t| t.get(key)) {
        Some(RefValue::Number(v)) => *v,
        other => panic!("reference {table}:{key} is missing or not a number ({other:?})"),
    }
}

pub fn text(table: &str, key: &str) -> String {
    match all().get(table).and_then(|t| t.get(key)) {
        Some(RefValue::Text(v)) => v.clone(),
        other => panic!("reference {table}:{key} is missing or not text ({other:?})"),
    }
}
