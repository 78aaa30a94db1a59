//! JSON parameter checkpoints.
//!
//! ```json
//! {"format_version":1,"head":"link","run_seed":3,"init_seed":99,
//!  "message_edges":[[0,1],[2,5]],
//!  "w1":{"rows":F,"cols":H,"data":[...row-major...]},
//!  "w2":{"rows":H,"cols":O,"data":[...]}}
//! ```
//!
//! `message_edges` is present when the model was fine-tuned on a graph that
//! differs from the split's training edges (pseudo-edges inserted).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GcnModel, GcnParams, Head, Matrix};
use crate::error::{Error, Result};
use crate::graph::Edge;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub head: Head,
    pub run_seed: u64,
    pub init_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message_edges: Option<Vec<Edge>>,
    pub w1: Matrix,
    pub w2: Matrix,
}

impl Checkpoint {
    pub fn from_model(model: &GcnModel, run_seed: u64, message_edges: Option<Vec<Edge>>) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            head: model.head,
            run_seed,
            init_seed: model.params.init_seed,
            message_edges,
            w1: model.params.w1.clone(),
            w2: model.params.w2.clone(),
        }
    }

    pub fn into_model(self) -> Result<GcnModel> {
        if self.w1.cols() != self.w2.rows() {
            return Err(Error::Shape(format!(
                "checkpoint w1 {:?} does not chain into w2 {:?}",
                self.w1.shape(),
                self.w2.shape()
            )));
        }
        Ok(GcnModel {
            params: GcnParams {
                w1: self.w1,
                w2: self.w2,
                init_seed: self.init_seed,
            },
            head: self.head,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string(self)?;
        fs::write(path.as_ref(), text).map_err(|e| Error::io(path.as_ref(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        if ckpt.format_version != CHECKPOINT_VERSION {
            return Err(Error::Data(format!(
                "unsupported checkpoint version {}",
                ckpt.format_version
            )));
        }
        for (name, m) in [("w1", &ckpt.w1), ("w2", &ckpt.w2)] {
            if m.as_slice().len() != m.rows() * m.cols() {
                return Err(Error::Data(format!("checkpoint {name} data length does not match its shape")));
            }
        }
        Ok(ckpt)
    }
}
