use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot build over an empty key set")]
    EmptyInput,

    #[error("duplicate keys: two inputs share the same 128-bit hash code")]
    DuplicateKeys,

    #[error("seed search exhausted the {limit} seed budget at node size {node_size}; input is likely degenerate")]
    SeedLimit { node_size: usize, limit: u64 },

    #[error("{what} {got} out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("sequence is not monotone at index {index}")]
    NotMonotone { index: usize },

    #[error("corrupt serialized data: {0}")]
    Corrupt(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
