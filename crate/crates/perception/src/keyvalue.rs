//! Flat `key = value` configuration text.
//!
//! One entry per line; `=`, `:` or whitespace separate key and value; `#`
//! starts a comment. Later entries override earlier ones.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::{PerceptionError, Result};

pub type KeyValues = BTreeMap<String, String>;

pub fn parse_key_values(text: &str) -> Result<KeyValues> {
    let mut map = KeyValues::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.find(['=', ':']) {
            Some(pos) => (&line[..pos], &line[pos + 1..]),
            None => line.split_once(char::is_whitespace).unwrap_or((line, "")),
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(PerceptionError::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got {raw:?}"),
            });
        }
        map.insert(key.to_string(), value.to_string());
    }
    Ok(map)
}

pub fn read_key_values(path: &Path) -> Result<KeyValues> {
    parse_key_values(&std::fs::read_to_string(path)?)
}

/// Parsed value of `key`, or `default` when absent.
pub fn get_or<T: FromStr>(map: &KeyValues, key: &str, default: T) -> Result<T> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| PerceptionError::Parse {
            line: 0,
            message: format!("{key} = {v:?} has the wrong type"),
        }),
    }
}
