use thiserror::Error;

use crate::function::ItemId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("item {item} is out of range for a ground set of {ground_size} items")]
    ItemOutOfRange { item: ItemId, ground_size: usize },
    #[error("item {0} appears more than once in the set")]
    DuplicateItem(ItemId),
    #[error("item {0} is already part of the context set")]
    ItemInContext(ItemId),
    #[error("cardinality {k} is out of range for a ground set of {ground_size} items")]
    CardinalityOutOfRange { k: usize, ground_size: usize },
    #[error("enumerating {count} subsets exceeds the cap of {cap}")]
    EnumerationCap { count: u128, cap: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("no candidate items remain outside the context set")]
    NoCandidates,
    #[error("query kind does not match the observation channel: {0}")]
    ChannelMismatch(String),
    #[error("no observation is pending")]
    NothingPending,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
