//! CSV assembly and the manifest written next to every run's files.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Comma-separated table with a header row and newline-terminated rows.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text, width: header.len() }
    }

    pub fn with_header(header: Vec<String>) -> Self {
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        Self::new(&refs)
    }

    pub fn row(&mut self, cells: &[&dyn Display]) {
        debug_assert_eq!(cells.len(), self.width);
        let line: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn row_strings(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.width);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Two-column `key,value` summary.
pub fn summary(pairs: &[(&str, String)]) -> String {
    let mut csv = Csv::new(&["key", "value"]);
    for (k, v) in pairs {
        csv.row(&[k, v]);
    }
    csv.into_string()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    library_version: &'a str,
    task: &'a str,
    seed: Option<u64>,
    inputs_sha256: String,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

/// Files produced by a task, written together with `manifest.json`.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, content: String) {
        self.files.push((name.into(), content));
    }

    /// Writes every file under `dir` with `prefix`, then the manifest.
    pub fn write(
        &self,
        dir: &Path,
        prefix: &str,
        task: &str,
        seed: Option<u64>,
        inputs: &[(String, Vec<u8>)],
    ) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut outputs = Vec::new();
        for (name, content) in &self.files {
            let file = format!("{prefix}{name}");
            let path = dir.join(&file);
            std::fs::write(&path, content)?;
            outputs.push(FileDigest { path: file, sha256: sha256_hex(content.as_bytes()) });
            written.push(path);
        }
        let mut all = Sha256::new();
        for (_, bytes) in inputs {
            all.update(Sha256::digest(bytes));
        }
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            library_version: mfmdp::VERSION,
            task,
            seed,
            inputs_sha256: hex::encode(all.finalize()),
            inputs: inputs
                .iter()
                .map(|(p, b)| FileDigest { path: p.clone(), sha256: sha256_hex(b) })
                .collect(),
            outputs,
        };
        let path = dir.join(format!("{prefix}manifest.json"));
        let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        json.push('\n');
        std::fs::write(&path, json)?;
        written.push(path);
        Ok(written)
    }
}
