use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

/// Shortest representation that parses back to the same value.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub command: &'a str,
    pub config: &'a C,
    pub tool_version: &'a str,
    pub seed: Option<u64>,
    pub outputs: &'a [String],
    pub wall_clock_seconds: f64,
}

pub const MANIFEST: &str = "manifest.json";

/// Writes artifacts into one directory and remembers their names.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
    started: Instant,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new(), started: Instant::now() })
    }

    pub fn write_text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let text = String::from_utf8(w.into_inner()?)?;
        self.write_text(name, &text)
    }

    /// Manifest goes last so it can list everything else.
    pub fn finish<C: Serialize>(self, command: &str, config: &C, seed: Option<u64>) -> Result<()> {
        let manifest = RunManifest {
            command,
            config,
            tool_version: env!("CARGO_PKG_VERSION"),
            seed,
            outputs: &self.written,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let path = self.dir.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456789.125, -0.0, 2.0 / 3.0 * 1e6] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(num(0.01), "0.01");
    }

    #[test]
    fn manifest_lists_outputs() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(tmp.path()).unwrap();
        out.write_text("a.txt", "x").unwrap();
        out.write_csv("b.csv", &["h".into()], &[vec!["1".into()]]).unwrap();
        out.finish("test", &serde_json::json!({}), Some(3)).unwrap();
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(m["outputs"], serde_json::json!(["a.txt", "b.csv"]));
        assert_eq!(m["seed"], 3);
        assert_eq!(fs::read_to_string(tmp.path().join("b.csv")).unwrap(), "h\n1\n");
    }
}
