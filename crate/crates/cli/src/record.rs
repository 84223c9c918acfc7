//! Line-oriented `key=value` result records, separated by blank lines.

use std::fmt::Write as _;

use parisi_core::Estimate;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultRecord {
    fields: Vec<(String, String)>,
}

impl ResultRecord {
    pub fn new(command: &str, digest: &str, seed: u64) -> Self {
        let mut r = Self::default();
        r.set("command", command);
        r.set("digest", digest);
        r.set("seed", seed);
        r
    }

    /// Sets or replaces `key`.
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        match self.fields.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.fields.push((key.to_string(), value)),
        }
        self
    }

    /// `{key}`, `{key}_stderr` and `{key}_n` from an estimate.
    pub fn set_estimate(&mut self, key: &str, e: &Estimate) -> &mut Self {
        self.set(key, e.mean);
        self.set(&format!("{key}_stderr"), e.stderr);
        self.set(&format!("{key}_n"), e.n)
    }

    pub fn set_list(&mut self, key: &str, values: &[impl ToString]) -> &mut Self {
        let joined: Vec<String> = values.iter().map(ToString::to_string).collect();
        self.set(key, joined.join(";"))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn fields(&self) -> &[(String, String)] {
        &self.fields
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.fields {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

pub fn records_to_text(records: &[ResultRecord]) -> String {
    records.iter().map(ResultRecord::to_text).collect::<Vec<_>>().join("\n")
}

/// Parses blank-line separated records; lines starting with `#` are ignored.
pub fn parse_records(text: &str) -> Result<Vec<ResultRecord>, String> {
    let mut out = Vec::new();
    let mut current = ResultRecord::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            if !current.fields.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
        current.set(k.trim(), v.trim());
    }
    if !current.fields.is_empty() {
        out.push(current);
    }
    Ok(out)
}
