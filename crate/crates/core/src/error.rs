use thiserror::Error;

use crate::geom::Point3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("box min {min} exceeds max {max} on some axis")]
    InvertedBox { min: Point3, max: Point3 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeomError),

    /// A model function was called outside its domain.
    #[error("{quantity} must be positive and finite, got {value}")]
    Domain { quantity: &'static str, value: f64 },

    /// A scenario or region failed validation before anything ran.
    #[error("invalid `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("search region contains no candidate positions")]
    EmptyGrid,
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::EmptyGrid | Error::Geometry(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn positive(quantity: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain { quantity, value })
    }
}
