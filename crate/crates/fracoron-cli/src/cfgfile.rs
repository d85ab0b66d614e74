//! Plain `key = value` configuration files, merged under explicit flags
//! (flags always win).

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> fracoron::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| fracoron::Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> fracoron::Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(fracoron::Error::Parse(format!(
                    "config line {} is not `key = value`: {line}",
                    lineno + 1
                )));
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Option<T> {
        self.entries.get(key).and_then(|v| v.parse().ok())
    }

    /// Flag value if present, else config value, else the default.
    pub fn resolve<T: std::str::FromStr + Clone>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> T {
        flag.or_else(|| self.get(key)).unwrap_or(default)
    }
}
