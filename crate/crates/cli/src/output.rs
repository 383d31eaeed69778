//! Serial writers for the output directory.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hardstop::field::round_sig;
use serde::Serialize;
use serde_json::Value;

pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes through `f` into `name`, buffered.
    pub fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.root.join(name);
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        f(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write(name, |w| Ok(w.write_all(text.as_bytes())?))
    }

    /// Pretty JSON with every number rounded to nine significant digits.
    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        round_numbers(&mut v);
        let mut s = serde_json::to_string_pretty(&v)?;
        s.push('\n');
        self.text(name, &s)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x))) {
                *n = x;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_numbers),
        Value::Object(o) => o.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// File-name fragment for a slice angle: `30` → `sep30`, `22.5` → `sep22p5`.
pub fn slice_tag(sep_deg: f64) -> String {
    format!("sep{}", sep_deg).replace('.', "p")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_numbers_are_rounded() {
        let mut v = serde_json::json!({"a": 1.0 / 3.0, "b": [200.0 / 7.0, 7], "c": "x"});
        round_numbers(&mut v);
        assert_eq!(v["a"].as_f64().unwrap(), 0.333333333);
        assert_eq!(v["b"][0].as_f64().unwrap(), 28.5714286);
        assert_eq!(v["b"][1].as_i64().unwrap(), 7);
    }

    #[test]
    fn slice_tags() {
        assert_eq!(slice_tag(30.0), "sep30");
        assert_eq!(slice_tag(22.5), "sep22p5");
    }
}
