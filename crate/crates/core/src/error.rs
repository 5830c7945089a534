use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input line.
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    /// A sentence whose head links do not form a single rooted tree.
    #[error("sentence {sentence_id}: {message}")]
    Tree { sentence_id: String, message: String },

    #[error("line {line}: invalid JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Wraps an error raised while reading a particular file.
    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn tree(sentence_id: &str, message: impl Into<String>) -> Self {
        Error::Tree {
            sentence_id: sentence_id.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a file path to parse errors; I/O errors already carry one.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            e @ (Error::Io { .. } | Error::InFile { .. }) => e,
            e => Error::InFile {
                path: path.into(),
                source: Box::new(e),
            },
        }
    }

    /// True for errors caused by malformed input data (as opposed to bad
    /// configuration or I/O failures).
    pub fn is_input_format(&self) -> bool {
        match self {
            Error::Format { .. } | Error::Tree { .. } | Error::Json { .. } => true,
            Error::InFile { source, .. } => source.is_input_format(),
            _ => false,
        }
    }
}
