// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const OUTPUT_ROOT_ENV: &str = "FERMIDARK_OUTPUT_ROOT";

/// Provenance stamped into every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_path: Option<String>,
    pub output_dir: String,
    pub seed: Option<u64>,
    pub config: Value,
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<String>, output_dir: &Path, seed: Option<u64>, config: Value) -> Self {
        RunManifest {
            tool: "fermidark",
            version: VERSION,
            command: command.to_string(),
            config_path,
            output_dir: output_dir.display().to_string(),
            seed,
            config,
        }
    }

    /// Comment lines for CSV files. The output directory is left out so that identical runs
    /// written to different places stay byte-identical.
    fn csv_header(&self) -> String {
        let mut s = format!("# fermidark {} {}\n", self.version, self.command);
        if let Some(seed) = self.seed {
            s.push_str(&format!("# seed {seed}\n"));
        }
        s.push_str(&format!("# config {}\n", self.config));
        s
    }
}

/// Output directory holding the artifacts of one command.
pub struct Sink {
    pub dir: PathBuf,
}

impl Sink {
    pub fn create(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        let probe = dir.join(".fermidark-write-test");
        fs::write(&probe, b"").with_context(|| format!("output directory {} is not writable", dir.display()))?;
        fs::remove_file(&probe)?;
        Ok(Sink { dir })
    }

    pub fn csv(&self, name: &str, manifest: &RunManifest, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, format!("{}{body}", manifest.csv_header()))
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, name: &str, manifest: &RunManifest, payload: &T) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            manifest: &'a RunManifest,
            result: &'a T,
        }
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(&Wrapped { manifest, result: payload })?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Filename-safe form of a label such as `9/2`.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '/' => '_',
            c if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' => c,
            _ => '-',
        })
        .collect()
}
