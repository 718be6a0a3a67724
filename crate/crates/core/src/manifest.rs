//! Run manifests: a JSON record of what a command read and wrote.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: &Path) -> io::Result<FileDigest> {
        let data = fs::read(path)?;
        Ok(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&data),
            bytes: data.len() as u64,
        })
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub started_at: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub rows_in: Option<u64>,
    pub rows_out: Option<u64>,
    pub rows_rejected: Option<u64>,
}

impl RunManifest {
    pub fn start(command: Vec<String>) -> Self {
        RunManifest {
            tool: "ginidb".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            started_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            inputs: Vec::new(),
            outputs: Vec::new(),
            rows_in: None,
            rows_out: None,
            rows_rejected: None,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> io::Result<()> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> io::Result<()> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_json())
    }
}

/// `<out>.manifest.json` next to the primary output.
pub fn manifest_path(out: &Path) -> PathBuf {
    sidecar_path(out, "manifest.json")
}

pub fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    out.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn records_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        fs::write(&p, "x\n").unwrap();
        let mut m = RunManifest::start(vec!["ginidb".into(), "merge".into()]);
        m.add_input(&p).unwrap();
        m.rows_in = Some(1);
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["inputs"][0]["bytes"], 2);
        assert_eq!(v["rows_in"], 1);
        assert_eq!(v["rows_out"], serde_json::Value::Null);
    }

    #[test]
    fn sidecars_sit_next_to_output() {
        let p = Path::new("/tmp/out/unified.csv");
        assert_eq!(manifest_path(p), Path::new("/tmp/out/unified.csv.manifest.json"));
        assert_eq!(sidecar_path(p, "rejects.csv"), Path::new("/tmp/out/unified.csv.rejects.csv"));
    }
}
