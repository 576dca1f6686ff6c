//! Stop-visit extraction from the localization log.
//!
//! A run is a maximal contiguous in-service stretch of the log. Within a
//! run, every maximal doors-open interval is a candidate dwell; the fix at
//! the door-open instant is snapped to the nearest stop of the run's route,
//! and dwells farther than the snap radius from every stop (doors opened at
//! a traffic light, say) are dropped.

use thiserror::Error;

use crate::geo::haversine_m;
use crate::model::{LocalizationRecord, ModelError, NetworkModel, StopVisit, Timestamp};
use crate::{Coord, model::validate_token};

/// Geometry/tolerance knobs for stop-visit extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapConfig {
    max_snap_m: Coord,
    margin_s: u64,
}

impl SnapConfig {
    pub const DEFAULT_MAX_SNAP_M: Coord = 30.0;
    pub const DEFAULT_MARGIN_S: u64 = 10;

    /// `max_snap_m` bounds the dwell-to-stop snapping distance.
    /// `margin_s` is the stop-time error margin the extraction is accurate
    /// to; it is not applied here but recorded for the correlation stage,
    /// whose tolerance defaults to it.
    pub fn new(max_snap_m: Coord, margin_s: u64) -> Result<Self, StopEventError> {
        if !max_snap_m.is_finite() || max_snap_m <= 0.0 {
            return Err(StopEventError::InvalidConfig(format!(
                "max_snap_m must be positive, got {max_snap_m}"
            )));
        }
        Ok(SnapConfig { max_snap_m, margin_s })
    }

    pub fn max_snap_m(&self) -> Coord {
        self.max_snap_m
    }

    pub fn margin_s(&self) -> u64 {
        self.margin_s
    }
}

impl Default for SnapConfig {
    fn default() -> Self {
        SnapConfig {
            max_snap_m: Self::DEFAULT_MAX_SNAP_M,
            margin_s: Self::DEFAULT_MARGIN_S,
        }
    }
}

/// The in-service window of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunWindow {
    run_id: String,
    route_id: String,
    service_start: Timestamp,
    service_end: Timestamp,
}

impl RunWindow {
    pub fn new(
        run_id: String,
        route_id: String,
        service_start: Timestamp,
        service_end: Timestamp,
    ) -> Result<Self, ModelError> {
        validate_token(&run_id, "run_id")?;
        validate_token(&route_id, "route_id")?;
        if service_start > service_end {
            return Err(ModelError::InvalidRecord(format!(
                "run {run_id} starts {service_start} after end {service_end}"
            )));
        }
        Ok(RunWindow { run_id, route_id, service_start, service_end })
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn route_id(&self) -> &str {
        &self.route_id
    }

    pub fn service_start(&self) -> Timestamp {
        self.service_start
    }

    pub fn service_end(&self) -> Timestamp {
        self.service_end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StopEventError {
    #[error("localization records are not sorted by time")]
    UnsortedInput,
    #[error("run {0} references route {1} absent from the network")]
    UnknownRoute(String, String),
    #[error("run {0} visits stops against the route's direction")]
    OutOfOrderVisit(String),
    #[error("run id {0} appears in two separate in-service segments")]
    DuplicateRun(String),
    #[error("invalid snap config: {0}")]
    InvalidConfig(String),
}

/// Maximal contiguous in-service segments, as index ranges into `records`.
/// A change of run or route token starts a new segment even without an
/// out-of-service sample in between.
fn in_service_segments(
    records: &[LocalizationRecord],
) -> Result<Vec<(usize, usize)>, StopEventError> {
    if records.windows(2).any(|w| w[0].at() > w[1].at()) {
        return Err(StopEventError::UnsortedInput);
    }
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut start: Option<usize> = None;
    for (i, rec) in records.iter().enumerate() {
        let continues = match start {
            Some(s) => {
                rec.in_service()
                    && rec.run_id() == records[s].run_id()
                    && rec.route_id() == records[s].route_id()
            }
            None => false,
        };
        if continues {
            continue;
        }
        if let Some(s) = start.take() {
            segments.push((s, i));
        }
        if rec.in_service() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        segments.push((s, records.len()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &(s, _) in &segments {
        if !seen.insert(records[s].run_id()) {
            return Err(StopEventError::DuplicateRun(records[s].run_id().to_owned()));
        }
    }
    Ok(segments)
}

/// Derives each run's service window from the localization log.
pub fn derive_runs(records: &[LocalizationRecord]) -> Result<Vec<RunWindow>, StopEventError> {
    let segments = in_service_segments(records)?;
    Ok(segments
        .into_iter()
        .map(|(s, e)| {
            RunWindow::new(
                records[s].run_id().to_owned(),
                records[s].route_id().to_owned(),
                records[s].at(),
                records[e - 1].at(),
            )
            .expect("segment bounds are ordered")
        })
        .collect())
}

/// Extracts stop visits from the localization log.
///
/// Records must be sorted by time. Visits are emitted in run order, then
/// door-open order; within a run their sequence indices must be
/// non-decreasing (a bus does not travel its route backwards) or the whole
/// extraction fails with [`StopEventError::OutOfOrderVisit`].
pub fn derive_stop_visits(
    records: &[LocalizationRecord],
    network: &NetworkModel,
    cfg: &SnapConfig,
) -> Result<Vec<StopVisit>, StopEventError> {
    let segments = in_service_segments(records)?;
    let mut visits = Vec::new();
    for (seg_start, seg_end) in segments {
        let run = &records[seg_start];
        let route_stops = network.route(run.route_id()).ok_or_else(|| {
            StopEventError::UnknownRoute(run.run_id().to_owned(), run.route_id().to_owned())
        })?;

        let mut last_sequence_index: Option<usize> = None;
        let mut i = seg_start;
        while i < seg_end {
            if !records[i].doors_open() {
                i += 1;
                continue;
            }
            let dwell_start = i;
            while i < seg_end && records[i].doors_open() {
                i += 1;
            }
            let dwell_end = i - 1; // inclusive: last doors-open sample

            let opened = &records[dwell_start];
            let snapped = route_stops
                .iter()
                .enumerate()
                .map(|(idx, stop)| {
                    let info = network.stop(stop).expect("network invariant");
                    (idx, haversine_m(opened.lat(), opened.lon(), info.lat, info.lon))
                })
                // ties go to the lower sequence index: strict less-than
                // keeps the first minimum
                .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distances"))
                .filter(|(_, dist)| *dist <= cfg.max_snap_m());

            if let Some((sequence_index, _)) = snapped {
                if last_sequence_index.is_some_and(|prev| sequence_index < prev) {
                    return Err(StopEventError::OutOfOrderVisit(run.run_id().to_owned()));
                }
                last_sequence_index = Some(sequence_index);
                visits.push(
                    StopVisit::new(
                        run.run_id().to_owned(),
                        run.route_id().to_owned(),
                        route_stops[sequence_index].clone(),
                        opened.at(),
                        records[dwell_end].at(),
                        sequence_index,
                    )
                    .expect("dwell bounds are ordered"),
                );
            }
        }
    }
    Ok(visits)
}
