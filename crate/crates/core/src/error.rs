use thiserror::Error;

/// Errors raised while building or running a scenario.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("arc position {arc_s} m is outside segment {segment} of length {length} m")]
    ArcOutOfRange {
        segment: usize,
        arc_s: f64,
        length: f64,
    },
    #[error("layout has no streets")]
    EmptyLayout,
    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },
    #[error("default-scenario lifetime is not finite (no device depleted within the horizon)")]
    InfiniteBaseline,
    #[error("no records to aggregate")]
    NoRecords,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Param {
        name,
        reason: reason.into(),
    }
}
