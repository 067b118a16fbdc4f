//! Optional plain key-value config files. Each non-blank, non-comment line
//! reads `key = value`; keys mirror the command-line flags and flags win
//! over file entries.

use std::collections::BTreeMap;
use std::fs;

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

pub fn load(path: &str) -> Result<FileConfig, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {path:?}: {e}"))?;
    parse(&text).map_err(|e| format!("config file {path:?}: {e}"))
}

pub fn parse(text: &str) -> Result<FileConfig, String> {
    let mut entries = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`", lineno + 1));
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(format!("line {}: empty key", lineno + 1));
        }
        entries.insert(key.to_owned(), value.to_owned());
    }
    Ok(FileConfig { entries })
}
