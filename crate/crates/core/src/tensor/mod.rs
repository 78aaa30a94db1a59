//! Dense numerical kernel: the two-layer GCN, its prediction heads and
//! losses, Adam, and parameter checkpoints.

mod adam;
mod checkpoint;
mod gcn;
mod loss;
mod matrix;
mod model;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use gcn::{gcn_backward, gcn_forward, glorot_init, ForwardCache, GcnParams, Gradients};
pub use loss::{
    argmax, binary_cross_entropy, class_cross_entropy, classify, classify_rows, decode_links,
    link_logits, link_logits_backward, sample_cross_entropy, sigmoid, Confidence, ConfidenceKind,
    PROB_FLOOR,
};
pub use matrix::{dot, Matrix};
pub use model::{GcnModel, Head, Query};
