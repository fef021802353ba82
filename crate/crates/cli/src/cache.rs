use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const ENV_DIR: &str = "SPECTRA_LAB_CACHE";

/// One cached command result: every emitted text, by output name.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Entry {
    pub version: String,
    pub command: String,
    pub created_unix: u64,
    pub outputs: BTreeMap<String, String>,
}

/// Content-addressed result store; `dir == None` disables it.
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn from_env(disabled: bool) -> Self {
        if disabled {
            return Cache { dir: None };
        }
        let dir = std::env::var_os(ENV_DIR)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("XDG_CACHE_HOME").map(|d| PathBuf::from(d).join("spectra-lab")))
            .or_else(|| std::env::var_os("HOME").map(|d| PathBuf::from(d).join(".cache").join("spectra-lab")));
        Cache { dir }
    }

    pub fn key(command: &str, model: &str, args: &str) -> String {
        let mut h = Sha256::new();
        for part in ["spectra-lab", VERSION, command, model, args] {
            h.update(part.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    /// A hit only when the entry was written by this version for this command.
    pub fn get(&self, key: &str, command: &str) -> Option<BTreeMap<String, String>> {
        let text = std::fs::read_to_string(self.path(key)?).ok()?;
        let e: Entry = serde_json::from_str(&text).ok()?;
        (e.version == VERSION && e.command == command).then_some(e.outputs)
    }

    /// Write to a temp file in the cache directory, then rename over the entry.
    pub fn put(&self, key: &str, command: &str, outputs: &BTreeMap<String, String>) -> anyhow::Result<()> {
        let (Some(dir), Some(path)) = (self.dir.as_ref(), self.path(key)) else { return Ok(()) };
        std::fs::create_dir_all(dir)?;
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let e = Entry { version: VERSION.into(), command: command.into(), created_unix, outputs: outputs.clone() };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(serde_json::to_string(&e)?.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path)?;
        Ok(())
    }
}
