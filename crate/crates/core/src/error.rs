use thiserror::Error;

use crate::model::Trait;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unmapped namespace code {0}")]
    UnmappedNamespace(i32),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("unknown theme {0:?}")]
    UnknownTheme(String),
    #[error("unknown trait {0:?}")]
    UnknownTrait(String),
    #[error("class {class:?} is not in the {trait_} vocabulary")]
    UnknownClass { trait_: Trait, class: String },
    #[error("unparseable timestamp {0:?}")]
    BadTimestamp(String),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed XML at byte {offset}: {message}")]
    MalformedXml { offset: u64, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("conflicting {trait_} labels for user {user}: {existing:?} vs {new:?}")]
    Conflict { user: String, trait_: Trait, existing: String, new: String },
    #[error("corrupt cache: {0}")]
    Cache(String),
    #[error("bad model dump: {0}")]
    ModelFormat(String),

    #[error("no first-edit entry for user {0}")]
    MissingUser(String),
    #[error("degenerate class prior: {0}")]
    DegeneratePrior(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("empty cohort: {0}")]
    EmptyCohort(String),
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by data that is valid but unusable for the requested
    /// analysis (as opposed to malformed input).
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegeneratePrior(_) | Error::EmptyDataset(_) | Error::EmptyCohort(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnmappedNamespace(_) => "unmapped_namespace",
            Error::UnknownCategory(_) => "unknown_category",
            Error::UnknownTheme(_) => "unknown_theme",
            Error::UnknownTrait(_) => "unknown_trait",
            Error::UnknownClass { .. } => "unknown_class",
            Error::BadTimestamp(_) => "bad_timestamp",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::Config(_) => "config",
            Error::MalformedXml { .. } => "malformed_xml",
            Error::Schema(_) => "schema",
            Error::Row { .. } => "row",
            Error::Conflict { .. } => "conflict",
            Error::Cache(_) => "cache",
            Error::ModelFormat(_) => "model_format",
            Error::MissingUser(_) => "missing_user",
            Error::DegeneratePrior(_) => "degenerate_prior",
            Error::EmptyDataset(_) => "empty_dataset",
            Error::EmptyCohort(_) => "empty_cohort",
            Error::UnknownFeature(_) => "unknown_feature",
            Error::Io(_) => "io",
        }
    }
}
