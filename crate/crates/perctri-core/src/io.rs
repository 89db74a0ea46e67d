//! Binary configuration files and run manifests.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{site_count, Configuration};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"PERCTRI1";
const HEADER_LEN: usize = 8 + 4 + 8 + 8;

/// Header (magic, `n`, master seed, trial id; little-endian) then the site bits.
pub fn write_config(config: &Configuration) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + config.len().div_ceil(8));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&config.n().to_le_bytes());
    out.extend_from_slice(&config.master_seed.to_le_bytes());
    out.extend_from_slice(&config.trial_id.to_le_bytes());
    out.extend_from_slice(&config.payload_bytes());
    out
}

pub fn read_config(bytes: &[u8]) -> Result<Configuration> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("configuration file truncated: {} bytes", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format("bad magic; not a configuration file".into()));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let seed = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let trial = u64::from_le_bytes(bytes[20..28].try_into().unwrap());
    if n == 0 || n > 1 << 14 {
        return Err(Error::Format(format!("implausible radius n={n}")));
    }
    let want = site_count(n).div_ceil(8);
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != want {
        return Err(Error::Format(format!("expected {want} payload bytes for n={n}, found {}", payload.len())));
    }
    Configuration::from_payload_bytes(n, payload, seed, trial)
}

pub fn save_config(path: &Path, config: &Configuration) -> Result<()> {
    std::fs::write(path, write_config(config))?;
    Ok(())
}

pub fn load_config(path: &Path) -> Result<Configuration> {
    read_config(&std::fs::read(path)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a CLI invocation and check its outputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub master_seed: Option<u64>,
    pub artifact_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn path_for(out: &Path) -> PathBuf {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("bad manifest {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
