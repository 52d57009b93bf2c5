//! Run manifest written next to every command's outputs.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Timing {
    pub stage: String,
    pub secs: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub argv: Vec<String>,
    pub version: &'static str,
    pub core_version: &'static str,
    pub config_path: Option<PathBuf>,
    pub config_sha256: Option<String>,
    pub seed: u64,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub exit_code: i32,
    pub timings: Vec<Timing>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.into(),
            argv: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION"),
            core_version: qfrac::VERSION,
            config_path: None,
            config_sha256: None,
            seed,
            threads: rayon::current_num_threads(),
            outputs: Vec::new(),
            exit_code: 0,
            timings: Vec::new(),
        }
    }

    pub fn set_config(&mut self, path: &Path, bytes: &[u8]) {
        self.config_path = Some(path.to_path_buf());
        self.config_sha256 = Some(sha256_hex(bytes));
    }

    pub fn time(&mut self, stage: &str, start: std::time::Instant) {
        self.timings.push(Timing { stage: stage.into(), secs: start.elapsed().as_secs_f64() });
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
