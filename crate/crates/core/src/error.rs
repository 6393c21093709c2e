use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("feed item {item}: {msg}")]
    Feed { item: usize, msg: String },

    #[error("feed document: {0}")]
    FeedDocument(String),

    #[error("dataset line {line}: {msg}")]
    Dataset { line: usize, msg: String },

    #[error("duplicate CVE id {0}")]
    DuplicateCve(String),

    #[error("taxonomy: {0}")]
    Taxonomy(String),

    #[error("taxonomy cycle in view {view}: {}", path.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" -> "))]
    Cycle { view: u32, path: Vec<u32> },

    #[error("unknown CWE id {0}")]
    UnknownCwe(u32),

    #[error("CVE {0} referenced by propagation map is absent from the dataset")]
    MissingCve(String),

    #[error("{0}")]
    Degenerate(String),

    #[error("{0}")]
    Empty(String),
}

impl Error {
    /// Exit-code class: 2 io/usage, 3 parse, 4 computation.
    pub fn exit_class(&self) -> u8 {
        match self {
            Error::Io(_) => 2,
            Error::Feed { .. }
            | Error::FeedDocument(_)
            | Error::Dataset { .. }
            | Error::DuplicateCve(_)
            | Error::Taxonomy(_)
            | Error::Cycle { .. } => 3,
            Error::UnknownCwe(_)
            | Error::MissingCve(_)
            | Error::Degenerate(_)
            | Error::Empty(_) => 4,
        }
    }
}
