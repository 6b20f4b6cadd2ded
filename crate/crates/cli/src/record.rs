use std::time::{SystemTime, UNIX_EPOCH};

use c2_core::period::PeriodReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything that determines the values of a run. Two runs with the same
/// hash produce the same values.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub family: String,
    pub p: u32,
    pub steps: u64,
    pub engine_version: &'static str,
}

impl RunConfig {
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub family: String,
    pub p: u32,
    pub first_n: u64,
    pub last_n: u64,
    pub steps: u64,
    pub values: Vec<u8>,
    pub period: Option<PeriodReport>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub engine_version: String,
    pub config_hash: String,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}
