use thiserror::Error;

use crate::dom::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),

    #[error("empty document")]
    EmptyDocument,

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("node {child} is not a child of node {parent}")]
    NotAChild { parent: NodeId, child: NodeId },

    #[error("node {0} is not an image")]
    NotAnImage(NodeId),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no ground truth for: {}", .0.join(", "))]
    UnmatchedPages(Vec<String>),

    #[error("invalid ground truth: {0}")]
    GroundTruth(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
