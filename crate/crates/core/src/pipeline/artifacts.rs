//! Files written by a run: checkpoints, embedding snapshots, metrics.

use std::fmt::Display;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::loss::Embedding;
use crate::optim::{AdamConfig, OptimizerState};
use crate::trees::SimilarityMatrix;

/// Hex SHA-256 of a similarity matrix: the dimension as a little-endian
/// `u64` followed by every entry as a little-endian `f64`, row-major.
pub fn similarity_checksum(w: &SimilarityMatrix<f64>) -> String {
    let mut h = Sha256::new();
    h.update((w.n() as u64).to_le_bytes());
    for v in w.as_slice() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Serializable training state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: usize,
    pub step: u64,
    pub scale: f64,
    pub coords: Vec<[f64; 2]>,
    pub scale_logit: f64,
    pub m: Vec<[f64; 2]>,
    pub v: Vec<[f64; 2]>,
    pub scale_m: f64,
    pub scale_v: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Checkpoint {
    pub fn capture(epoch: usize, z: &Embedding<f64>, state: &OptimizerState<f64>) -> Self {
        Self {
            epoch,
            step: state.step,
            scale: z.scale(),
            coords: z.coords(),
            scale_logit: state.scale_logit,
            m: state.m.clone(),
            v: state.v.clone(),
            scale_m: state.scale_m,
            scale_v: state.scale_v,
            lr: state.config.lr,
            beta1: state.config.beta1,
            beta2: state.config.beta2,
            eps: state.config.eps,
        }
    }

    pub fn embedding(&self) -> Result<Embedding<f64>> {
        Embedding::from_coords(&self.coords, self.scale)
    }

    pub fn optimizer_state(&self) -> Result<OptimizerState<f64>> {
        let n = self.coords.len();
        if self.m.len() != n || self.v.len() != n {
            return Err(Error::SizeMismatch {
                what: "checkpoint moments",
                got: self.m.len().min(self.v.len()),
                expected: n,
            });
        }
        Ok(OptimizerState {
            step: self.step,
            m: self.m.clone(),
            v: self.v.clone(),
            scale_logit: self.scale_logit,
            scale_m: self.scale_m,
            scale_v: self.scale_v,
            config: AdamConfig {
                lr: self.lr,
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.eps,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Writes `leaf,x,y,norm` rows for every leaf.
pub fn write_snapshot(path: &Path, z: &Embedding<f64>) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["leaf", "x", "y", "norm"])?;
    for (i, p) in z.points().iter().enumerate() {
        out.write_record([
            i.to_string(),
            p.x().to_string(),
            p.y().to_string(),
            p.norm().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Ordered `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    entries: Vec<(String, String)>,
}

impl Record {
    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Self { entries }
    }
}
