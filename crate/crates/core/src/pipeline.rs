//! File-to-file pipeline stages.
//!
//! Every stage reads and writes the documented formats, so each one can be
//! re-run in isolation and chaining them by hand produces byte-identical
//! results to [`run_pipeline`]. Inputs are never modified.

use std::path::Path;

use thiserror::Error;

use crate::analytics::{build_od_matrix, TimeFilter};
use crate::correlate::{correlate, CorrelateError, CorrelationConfig};
use crate::io::{self, filenames, IngestError};
use crate::model::DeviceHasher;
use crate::stops::{derive_runs, derive_stop_visits, SnapConfig, StopEventError};
use crate::trips::{derive_trips, GapThreshold, TripError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Trips(#[from] TripError),
    #[error(transparent)]
    StopEvents(#[from] StopEventError),
    #[error(transparent)]
    Correlate(#[from] CorrelateError),
}

/// Knobs for the chained pipeline. The device hasher, when present, is
/// applied once at the first stage that emits device ids; later stages
/// simply carry the pseudonyms through.
#[derive(Debug, Clone, Default)]
pub struct PipelineConfig {
    pub gap: GapThreshold,
    pub snap: SnapConfig,
    pub correlation: CorrelationConfig,
    pub filter: TimeFilter,
    pub hasher: Option<DeviceHasher>,
}

/// Row counts per stage, for progress reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineSummary {
    pub trips: usize,
    pub visits: usize,
    pub runs: usize,
    pub journeys: usize,
    pub rejected: usize,
    pub od_total: u64,
}

/// sightings.csv -> trips.csv
pub fn stage_derive_trips(
    sightings_path: &Path,
    out_trips: &Path,
    gap: GapThreshold,
    hasher: Option<&DeviceHasher>,
) -> Result<usize, PipelineError> {
    let sightings = io::load_sightings(sightings_path)?;
    let mut trips = derive_trips(&sightings, gap)?;
    if let Some(hasher) = hasher {
        trips = trips.iter().map(|t| t.with_device(hasher.hash(t.device()))).collect();
        trips.sort_by(|a, b| {
            (a.device(), a.first_seen(), a.last_seen())
                .cmp(&(b.device(), b.first_seen(), b.last_seen()))
        });
    }
    io::write_trips(&trips, out_trips)?;
    Ok(trips.len())
}

/// localization.csv + network -> visits.csv + runs.csv
pub fn stage_stop_visits(
    localization_path: &Path,
    stops_path: &Path,
    routes_path: &Path,
    out_visits: &Path,
    out_runs: &Path,
    snap: &SnapConfig,
) -> Result<(usize, usize), PipelineError> {
    let records = io::load_localization(localization_path)?;
    let network = io::load_network(stops_path, routes_path)?;
    let visits = derive_stop_visits(&records, &network, snap)?;
    let runs = derive_runs(&records)?;
    io::write_visits(&visits, out_visits)?;
    io::write_runs(&runs, out_runs)?;
    Ok((visits.len(), runs.len()))
}

/// trips.csv + visits.csv + runs.csv -> journeys.jsonl + rejects.jsonl
pub fn stage_correlate(
    trips_path: &Path,
    visits_path: &Path,
    runs_path: &Path,
    out_journeys: &Path,
    out_rejects: &Path,
    cfg: &CorrelationConfig,
    hasher: Option<&DeviceHasher>,
) -> Result<(usize, usize), PipelineError> {
    let trips = io::load_trips(trips_path)?;
    let visits = io::load_visits(visits_path)?;
    let runs = io::load_runs(runs_path)?;
    let (mut journeys, mut rejected) = correlate(&trips, &visits, &runs, cfg)?;
    if let Some(hasher) = hasher {
        journeys = journeys
            .iter()
            .map(|j| j.with_device(hasher.hash(j.device())))
            .collect();
        for r in &mut rejected {
            r.trip = r.trip.with_device(hasher.hash(r.trip.device()));
        }
    }
    io::write_journeys(&journeys, out_journeys)?;
    io::write_rejects(&rejected, out_rejects)?;
    Ok((journeys.len(), rejected.len()))
}

/// journeys.jsonl -> od.csv
pub fn stage_od_matrix(
    journeys_path: &Path,
    out_od: &Path,
    filter: &TimeFilter,
) -> Result<u64, PipelineError> {
    let journeys = io::read_journeys(journeys_path)?;
    let matrix = build_od_matrix(&journeys, filter);
    io::write_od_matrix(&matrix, out_od)?;
    Ok(matrix.total_journeys())
}

/// Chains all four stages, leaving every intermediate file in `out_dir`.
pub fn run_pipeline(
    sightings_path: &Path,
    localization_path: &Path,
    stops_path: &Path,
    routes_path: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
) -> Result<PipelineSummary, PipelineError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| IngestError::Io { path: out_dir.display().to_string(), source: e })?;
    let trips_path = out_dir.join(filenames::TRIPS);
    let visits_path = out_dir.join(filenames::VISITS);
    let runs_path = out_dir.join(filenames::RUNS);
    let journeys_path = out_dir.join(filenames::JOURNEYS);
    let rejects_path = out_dir.join(filenames::REJECTS);
    let od_path = out_dir.join(filenames::OD_MATRIX);

    let trips = stage_derive_trips(
        sightings_path,
        &trips_path,
        config.gap,
        config.hasher.as_ref(),
    )?;
    let (visits, runs) = stage_stop_visits(
        localization_path,
        stops_path,
        routes_path,
        &visits_path,
        &runs_path,
        &config.snap,
    )?;
    // ids were already pseudonymized when trips.csv was written
    let (journeys, rejected) = stage_correlate(
        &trips_path,
        &visits_path,
        &runs_path,
        &journeys_path,
        &rejects_path,
        &config.correlation,
        None,
    )?;
    let od_total = stage_od_matrix(&journeys_path, &od_path, &config.filter)?;
    Ok(PipelineSummary { trips, visits, runs, journeys, rejected, od_total })
}
