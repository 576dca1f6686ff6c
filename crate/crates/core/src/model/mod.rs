//! Domain types shared by every pipeline stage.
//!
//! All types here are immutable values: constructors validate the stated
//! invariants and nothing mutates after construction, so everything is safe
//! to share across threads.

mod error;
mod ids;
mod network;
mod od;
mod records;
mod time;

pub use error::ModelError;
pub use ids::{DeviceClass, DeviceHasher, DeviceId, StopId};
pub use network::{NetworkModel, StopInfo};
pub use od::OdMatrix;
pub use records::{
    DeviceSighting, DeviceTrip, LocalizationRecord, PassengerJourney, StopVisit,
    TicketValidation,
};
pub use time::{DayKind, Timestamp};

/// Route/run identifiers are free-form tokens: non-empty, no whitespace.
pub(crate) fn validate_token(raw: &str, what: &str) -> Result<(), ModelError> {
    if raw.is_empty() {
        return Err(ModelError::MalformedToken(format!("empty {what}")));
    }
    if raw.chars().any(|c| c.is_whitespace()) {
        return Err(ModelError::MalformedToken(format!(
            "{what} {raw:?} contains whitespace"
        )));
    }
    Ok(())
}
