//! On-disk formats: CSV tables for the event logs and network definition,
//! JSON Lines for journeys and audit streams.
//!
//! Loading is fail-fast: the first malformed row aborts with its file and
//! line number, because silently dropped rows would skew every count
//! downstream. Loaders also re-sort into the canonical dataset order, so
//! the loaded value never depends on the row order of the file.

mod jsonl;
mod tables;

use std::path::Path;

use thiserror::Error;

pub use jsonl::{read_journeys, read_rejects, write_journeys, write_rejects};
pub(crate) use jsonl::{read_lines as read_jsonl, write_lines_owned as write_jsonl_owned};
pub use tables::{
    load_localization, load_network, load_od_matrix, load_runs, load_sightings, load_tickets,
    load_trips, load_visits, write_cotravel_pairs, write_durations, write_groups,
    write_localization, write_network, write_occupancy, write_od_matrix, write_runs,
    write_sightings, write_tickets, write_tickets_report, write_trips, write_visits,
};

use crate::model::{
    DeviceSighting, LocalizationRecord, NetworkModel, TicketValidation,
};

/// Standard file names used by the pipeline stages.
pub mod filenames {
    pub const SIGHTINGS: &str = "sightings.csv";
    pub const LOCALIZATION: &str = "localization.csv";
    pub const TICKETS: &str = "tickets.csv";
    pub const STOPS: &str = "stops.csv";
    pub const ROUTES: &str = "routes.csv";
    pub const TRIPS: &str = "trips.csv";
    pub const VISITS: &str = "visits.csv";
    pub const RUNS: &str = "runs.csv";
    pub const JOURNEYS: &str = "journeys.jsonl";
    pub const REJECTS: &str = "rejects.jsonl";
    pub const OD_MATRIX: &str = "od.csv";
    pub const GROUND_TRUTH: &str = "ground_truth.jsonl";
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: u64, message: String },
    #[error("odometer decreases within run {run_id}")]
    Monotonicity { run_id: String },
    #[error("{path}: route {route_id} references undefined stop {stop_id}")]
    UnknownStop { path: String, route_id: String, stop_id: String },
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io { path: path.display().to_string(), source }
}

pub(crate) fn format_err(path: &Path, line: u64, message: impl Into<String>) -> IngestError {
    IngestError::Format { path: path.display().to_string(), line, message: message.into() }
}

/// Fixed-point decimal with trailing zeros trimmed; the canonical textual
/// form for coordinates (6 digits) and meters (3 digits).
pub(crate) fn fmt_decimal(value: f64, max_dp: usize) -> String {
    let mut s = format!("{value:.max_dp$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s.truncate(0);
        s.push('0');
    }
    s
}

/// Everything one analysis period needs, loaded and canonically sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sightings: Vec<DeviceSighting>,
    pub localization: Vec<LocalizationRecord>,
    pub tickets: Vec<TicketValidation>,
    pub network: NetworkModel,
}

impl Dataset {
    /// Assembles a dataset, sorting each stream into canonical order and
    /// checking odometer monotonicity per run.
    pub fn new(
        mut sightings: Vec<DeviceSighting>,
        mut localization: Vec<LocalizationRecord>,
        mut tickets: Vec<TicketValidation>,
        network: NetworkModel,
    ) -> Result<Self, IngestError> {
        sightings.sort();
        localization.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        tickets.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        check_odometer_monotone(&localization)?;
        Ok(Dataset { sightings, localization, tickets, network })
    }

    /// Loads the standard file set from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self, IngestError> {
        let sightings = load_sightings(&dir.join(filenames::SIGHTINGS))?;
        let localization = load_localization(&dir.join(filenames::LOCALIZATION))?;
        let tickets = load_tickets(&dir.join(filenames::TICKETS))?;
        let network = load_network(&dir.join(filenames::STOPS), &dir.join(filenames::ROUTES))?;
        Ok(Dataset { sightings, localization, tickets, network })
    }

    /// Writes the standard file set into a directory (which must exist).
    pub fn write_dir(&self, dir: &Path) -> Result<(), IngestError> {
        write_sightings(&self.sightings, &dir.join(filenames::SIGHTINGS))?;
        write_localization(&self.localization, &dir.join(filenames::LOCALIZATION))?;
        write_tickets(&self.tickets, &dir.join(filenames::TICKETS))?;
        write_network(&self.network, &dir.join(filenames::STOPS), &dir.join(filenames::ROUTES))
    }
}

/// Odometer must not decrease between consecutive samples of the same run.
pub(crate) fn check_odometer_monotone(
    records: &[LocalizationRecord],
) -> Result<(), IngestError> {
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.in_service()
            && b.in_service()
            && a.run_id() == b.run_id()
            && b.odometer_m() < a.odometer_m()
        {
            return Err(IngestError::Monotonicity { run_id: a.run_id().to_owned() });
        }
    }
    Ok(())
}
