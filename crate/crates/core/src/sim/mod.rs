//! Deterministic scenario simulator and pipeline evaluation.
//!
//! A scenario describes a bus network, a daily run schedule, passenger
//! demand and the scanner's behavior; simulating it yields the full input
//! file set (localization, sightings, tickets, network) together with the
//! ground truth of every journey that actually happened. The generator is
//! a pure function of the scenario including its seed: identical scenarios
//! produce byte-identical output files.

mod evaluate;
mod generate;
mod scenario;

pub use evaluate::{
    evaluate, read_ground_truth, write_ground_truth, EvaluationReport, GroundTruth, TrueJourney,
};
pub use generate::simulate;
pub use scenario::{RunTemplate, Scenario};

use thiserror::Error;

use crate::io::IngestError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("no run serves {origin} -> {destination} on day {day}")]
    InfeasibleSchedule { origin: String, destination: String, day: u32 },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}
