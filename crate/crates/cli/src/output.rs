//! Atomic file output and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a temp file in {}", dir.display()))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Collects the files a command writes into one directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<FileDigest>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(name), bytes)?;
        self.written.retain(|f| f.path != name);
        self.written.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Buffers a writer-based serializer and writes its output.
    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn written(&self) -> &[FileDigest] {
        &self.written
    }
}

/// What produced a directory, enough to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub model_format: String,
    pub model_format_version: u32,
    /// SHA-256 of `config_toml`.
    pub config_sha256: String,
    /// Resolved config; `run --manifest` parses this.
    pub config_toml: String,
    /// Input files and their digests at run time.
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_toml: String) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            threads: rayon::current_num_threads(),
            model_format: kidrank_core::learners::MODEL_FORMAT.to_string(),
            model_format_version: kidrank_core::learners::MODEL_VERSION,
            config_sha256: sha256_hex(config_toml.as_bytes()),
            config_toml,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if sha256_hex(m.config_toml.as_bytes()) != m.config_sha256 {
            anyhow::bail!(crate::ConfigError::new(
                "config_sha256",
                format!("{} does not match its embedded config", path.display())
            ));
        }
        Ok(m)
    }

    /// Records the digest of every file under `dir` as an input.
    pub fn add_input_dir(&mut self, dir: &Path) -> Result<()> {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .with_context(|| format!("listing {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        entries.sort();
        for p in entries {
            self.add_input_file(&p)?;
        }
        Ok(())
    }

    pub fn add_input_file(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Fails when a recorded input changed since the manifest was written.
    pub fn check_inputs(&self) -> Result<()> {
        for f in &self.inputs {
            let bytes = std::fs::read(&f.path).with_context(|| format!("reading recorded input {}", f.path))?;
            if sha256_hex(&bytes) != f.sha256 {
                anyhow::bail!("input {} changed since the manifest was written", f.path);
            }
        }
        Ok(())
    }

    /// Writes the manifest last, listing everything `out` wrote.
    pub fn finish(mut self, out: &mut OutputDir) -> Result<()> {
        self.outputs = out.written().to_vec();
        out.write_json(MANIFEST_FILE, &self)
    }
}
