use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("term x_{index} overflows the signed 64-bit term bound")]
    TermOverflow { index: usize },

    #[error("requested {requested} terms but the explicit sequence has only {available}")]
    Length { requested: usize, available: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("budget exceeded for {what}: estimated {estimated}, limit {limit}{}", hint.as_deref().map(|h| format!(" ({h})")).unwrap_or_default())]
    Budget {
        what: &'static str,
        estimated: u128,
        limit: u128,
        hint: Option<String>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Resource limits for the quadratic-cost statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Budget {
    /// Maximum number of index pairs (or gcd evaluations) an operation may visit.
    pub pairs: u64,
    /// Maximum bytes of working memory an operation may allocate.
    pub memory: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            pairs: 1_000_000_000,
            memory: 4 << 30,
        }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget {
            pairs: u64::MAX,
            memory: u64::MAX,
        }
    }

    pub(crate) fn check_pairs(&self, what: &'static str, estimated: u128, hint: Option<&str>) -> Result<()> {
        if estimated > self.pairs as u128 {
            return Err(Error::Budget {
                what,
                estimated,
                limit: self.pairs as u128,
                hint: hint.map(str::to_owned),
            });
        }
        Ok(())
    }

    pub(crate) fn check_memory(&self, what: &'static str, bytes: u128) -> Result<()> {
        if bytes > self.memory as u128 {
            return Err(Error::Budget {
                what,
                estimated: bytes,
                limit: self.memory as u128,
                hint: Some("bytes of working memory".to_owned()),
            });
        }
        Ok(())
    }
}
