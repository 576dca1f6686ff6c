use thiserror::Error;

/// Validation failure raised by a domain-type constructor.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("malformed device id {0:?}: expected 12 hex digits")]
    MalformedDeviceId(String),
    #[error("malformed device class {0:?}: expected 6 hex digits")]
    MalformedDeviceClass(String),
    #[error("malformed timestamp {0:?}: expected YYYY-MM-DDThh:mm:ssZ")]
    MalformedTimestamp(String),
    #[error("malformed stop id {0:?}: must be non-empty without whitespace")]
    MalformedStopId(String),
    #[error("malformed token: {0}")]
    MalformedToken(String),
    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),
    #[error("invalid localization record: {0}")]
    InvalidRecord(String),
    #[error("invalid device trip: {0}")]
    InvalidTrip(String),
    #[error("invalid stop visit: {0}")]
    InvalidVisit(String),
    #[error("invalid journey: {0}")]
    InvalidJourney(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid OD matrix: {0}")]
    InvalidMatrix(String),
}
