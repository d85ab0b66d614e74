//! Deterministic report emission: JSON with fixed key order and CSV with a
//! fixed header, floats always at 17 significant digits.

use std::io::Write;
use std::path::Path;

use fracoron::discrete::fmt_g17;

/// Ordered JSON object builder (insertion order is emission order).
#[derive(Default)]
pub struct Json {
    fields: Vec<(String, String)>,
}

impl Json {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(mut self, key: &str, v: f64) -> Self {
        self.fields.push((key.to_string(), fmt_g17(v)));
        self
    }

    pub fn int(mut self, key: &str, v: i64) -> Self {
        self.fields.push((key.to_string(), v.to_string()));
        self
    }

    pub fn bool(mut self, key: &str, v: bool) -> Self {
        self.fields.push((key.to_string(), v.to_string()));
        self
    }

    pub fn opt_int(mut self, key: &str, v: Option<i64>) -> Self {
        let text = match v {
            Some(x) => x.to_string(),
            None => "null".to_string(),
        };
        self.fields.push((key.to_string(), text));
        self
    }

    pub fn num_array(mut self, key: &str, vs: &[f64]) -> Self {
        let inner = vs.iter().map(|v| fmt_g17(*v)).collect::<Vec<_>>().join(", ");
        self.fields.push((key.to_string(), format!("[{inner}]")));
        self
    }

    pub fn pair_array(mut self, key: &str, vs: &[(f64, f64)]) -> Self {
        let inner = vs
            .iter()
            .map(|(a, b)| format!("[{}, {}]", fmt_g17(*a), fmt_g17(*b)))
            .collect::<Vec<_>>()
            .join(", ");
        self.fields.push((key.to_string(), format!("[{inner}]")));
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::from("{\n");
        for (i, (k, v)) in self.fields.iter().enumerate() {
            out.push_str(&format!("  \"{k}\": {v}"));
            out.push_str(if i + 1 == self.fields.len() { "\n" } else { ",\n" });
        }
        out.push_str("}\n");
        out
    }
}

/// CSV table with the fixed fracoron header.
pub struct Csv {
    command: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Csv {
            command: command.to_string(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.columns.len());
        self.rows.push(values.iter().map(|v| fmt_g17(*v)).collect());
    }

    pub fn render(&self) -> String {
        let mut out = format!("# fracoron v1, command={}\n", self.command);
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Writes a rendered report with path context on failure.
pub fn write_report(path: &Path, contents: &str) -> fracoron::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| fracoron::Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| fracoron::Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    f.write_all(contents.as_bytes())
        .map_err(|e| fracoron::Error::Io {
            path: path.display().to_string(),
            source: e,
        })
}
