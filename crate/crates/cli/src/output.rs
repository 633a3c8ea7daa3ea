//! Output directory helpers: provenance header and the timestamped run log.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use hwpd_core::Error;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::IoFailure(format!("{}: {e}", path.display()))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|e| io_err(path, e))
}

pub struct OutDir {
    root: PathBuf,
    log: Vec<String>,
    started: Instant,
    wall_start: u64,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, Error> {
        fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        let wall_start = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Ok(Self { root: root.to_path_buf(), log: Vec::new(), started: Instant::now(), wall_start })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<(), Error> {
        let p = self.path(name);
        fs::write(&p, bytes).map_err(|e| io_err(&p, e))
    }

    pub fn write_json(&self, name: &str, value: &impl serde::Serialize) -> Result<(), Error> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Adds a line to `run.log` and the info log.
    pub fn note(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::info!("{msg}");
        self.log.push(format!("[{:>9.3}s] {msg}", self.started.elapsed().as_secs_f64()));
    }

    /// `provenance.json`: command, configuration hash, seed and manifest hash.
    pub fn provenance(&self, command: &str, config: &Value, seed: Option<u64>, manifest_hash: Option<&str>) -> Result<Value, Error> {
        let canonical = serde_json::to_string(config)?;
        let p = json!({
            "tool": "hwpd",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config_hash": sha256_hex(canonical.as_bytes()),
            "seed": seed,
            "manifest_hash": manifest_hash,
            "config": config,
        });
        self.write_json("provenance.json", &p)?;
        Ok(p)
    }

    /// Writes `run.log`, the only output carrying wall-clock times.
    pub fn finish(mut self) -> Result<(), Error> {
        let secs = self.started.elapsed().as_secs_f64();
        self.note(format!("finished in {secs:.3}s"));
        let mut text = format!("started at unix time {}\n", self.wall_start);
        for l in &self.log {
            text.push_str(l);
            text.push('\n');
        }
        self.write("run.log", text.as_bytes())
    }
}
