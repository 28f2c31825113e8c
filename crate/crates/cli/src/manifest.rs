use std::collections::BTreeMap;

use sfm_core::jsonfmt::{self, JsonObject};

pub const EPOCH: &str = "1970-01-01T00:00:00Z";

/// Provenance block embedded in every output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub flags: BTreeMap<String, String>,
    pub version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, reproducible: bool) -> Self {
        let timestamp = if reproducible {
            EPOCH.to_string()
        } else {
            chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
        };
        Self {
            command: command.to_string(),
            inputs: Vec::new(),
            flags: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
        }
    }

    pub fn input(mut self, path: &std::path::Path) -> Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn flag(mut self, name: &str, value: impl ToString) -> Self {
        self.flags.insert(name.to_string(), value.to_string());
        self
    }

    pub fn json(&self) -> String {
        let inputs: Vec<String> = self.inputs.iter().map(|s| jsonfmt::quote(s)).collect();
        let flags = self
            .flags
            .iter()
            .fold(JsonObject::new(), |o, (k, v)| o.str(k, v))
            .render();
        JsonObject::new()
            .str("command", &self.command)
            .raw("inputs", format!("[{}]", inputs.join(", ")))
            .raw("flags", flags)
            .str("version", &self.version)
            .str("timestamp", &self.timestamp)
            .render()
    }

    /// `# key: value` lines for text and CSV outputs.
    pub fn comment_block(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# command: {}\n", self.command));
        out.push_str(&format!("# inputs: {}\n", self.inputs.join(", ")));
        let flags: Vec<String> = self.flags.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!("# flags: {}\n", flags.join(" ")));
        out.push_str(&format!("# version: {}\n", self.version));
        out.push_str(&format!("# timestamp: {}\n", self.timestamp));
        out
    }
}
