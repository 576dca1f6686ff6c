//! Inference of per-passenger bus journeys from Bluetooth discovery logs.
//!
//! A scanner riding a bus constantly issues Bluetooth discovery requests and
//! logs every response (device id, device class, time). The bus itself logs
//! its position, odometer and door state. This crate turns those two event
//! streams into passenger journeys and the analytics built on top of them:
//!
//! 1. [`trips::derive_trips`] sessionizes raw sightings into per-device
//!    presence intervals.
//! 2. [`stops::derive_stop_visits`] extracts door-open dwells from the
//!    localization log and snaps them to network stops.
//! 3. [`correlate::correlate`] assigns each device trip a boarding and an
//!    alighting stop, discarding depot noise, bystanders and unmatchable
//!    trips.
//! 4. [`analytics`] aggregates journeys into origin/destination matrices,
//!    occupancy curves, trip-duration histograms, ticket-correlation
//!    reports, per-device matrices and co-travel groups.
//!
//! [`sim`] provides a deterministic scenario generator that produces all
//! input files together with the ground truth, so the whole pipeline can be
//! validated end to end, and [`pipeline`] chains the stages over their
//! on-disk formats.

pub mod analytics;
pub mod correlate;
pub mod geo;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod sim;
pub mod stats;
pub mod stops;
pub mod trips;

/// Floating-point scalar the numeric kernels are generic over.
///
/// Everything event-shaped in this crate runs on integer seconds; the
/// geometry and statistics kernels ([`geo`], [`stats`], the analytics
/// report values) accept any float satisfying this bound.
pub trait Scalar: num_traits::Float + num_traits::FromPrimitive + std::fmt::Debug {}
impl Scalar for f32 {}
impl Scalar for f64 {}

/// Concrete scalar used by the pipeline types (coordinates, meters,
/// report values).
pub type Coord = f64;

pub use model::{
    DeviceClass, DeviceId, DeviceSighting, DeviceTrip, LocalizationRecord, NetworkModel,
    OdMatrix, PassengerJourney, StopId, StopVisit, TicketValidation, Timestamp,
};
