//! Aggregations over correlated journeys: OD matrices, occupancy, trip
//! durations, ticket correlation, per-device matrices and co-travel groups.

mod cotravel;
mod individual;
mod occupancy;
mod tickets;

pub use cotravel::{
    detect_cotravel, CoTravelReport, DEFAULT_MIN_ENCOUNTERS, DEFAULT_MIN_OVERLAP_S,
};
pub use individual::{individual_od, predict_destination, IndividualOd};
pub use occupancy::{
    occupancy_by_hour, occupancy_from_intervals, trip_duration_histogram, DurationHistogram,
    OccupancyCurve,
};
pub use tickets::{hourly_series, ticket_correlation, HourlySeries, TicketCorrelationReport};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{DayKind, OdMatrix, PassengerJourney, StopId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("hour range [{0},{1}) is empty or out of 0..=24")]
    InvalidHourRange(u8, u8),
    #[error("service_days must be at least 1")]
    InvalidServiceDays,
    #[error("bucket width must be at least 1 second")]
    InvalidBucketWidth,
    #[error("hour band width must divide 24, got {0}")]
    InvalidBandWidth(u8),
    #[error("hourly series lengths differ: {left} vs {right}")]
    MismatchedSeries { left: usize, right: usize },
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
}

/// Travel direction of a route, read off its identifier: route ids ending
/// in `-in` are inward, everything else is outward. A route's listed stop
/// order is its direction of travel, so a line served both ways appears as
/// two routes; this naming convention is what ties the two together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outward,
    Inward,
}

impl Direction {
    pub const INWARD_ROUTE_SUFFIX: &'static str = "-in";

    pub fn of_route(route_id: &str) -> Direction {
        if route_id.ends_with(Self::INWARD_ROUTE_SUFFIX) {
            Direction::Inward
        } else {
            Direction::Outward
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Outward => "outward",
            Direction::Inward => "inward",
        }
    }
}

impl FromStr for Direction {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "outward" => Ok(Direction::Outward),
            "inward" => Ok(Direction::Inward),
            other => Err(AnalyticsError::DegenerateSeries(format!(
                "unknown direction {other:?}"
            ))),
        }
    }
}

/// Journey filter for matrix building. A journey is stamped by its
/// boarding time, matching how ticket validations are stamped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeFilter {
    hour_range: Option<(u8, u8)>,
    day_kinds: BTreeSet<DayKind>,
    route_id: Option<String>,
    direction: Option<Direction>,
}

impl Default for TimeFilter {
    fn default() -> Self {
        TimeFilter {
            hour_range: None,
            day_kinds: DayKind::ALL.into_iter().collect(),
            route_id: None,
            direction: None,
        }
    }
}

impl TimeFilter {
    pub fn unfiltered() -> Self {
        Self::default()
    }

    /// Restricts to boardings with hour of day in `[from, to)`.
    pub fn with_hours(mut self, from: u8, to: u8) -> Result<Self, AnalyticsError> {
        if from >= to || to > 24 {
            return Err(AnalyticsError::InvalidHourRange(from, to));
        }
        self.hour_range = Some((from, to));
        Ok(self)
    }

    pub fn with_day_kinds(mut self, kinds: impl IntoIterator<Item = DayKind>) -> Self {
        self.day_kinds = kinds.into_iter().collect();
        self
    }

    pub fn with_route(mut self, route_id: &str) -> Self {
        self.route_id = Some(route_id.to_owned());
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = Some(direction);
        self
    }

    pub fn matches(&self, journey: &PassengerJourney) -> bool {
        if let Some((from, to)) = self.hour_range {
            let hour = journey.board_at().hour_of_day();
            if hour < from || hour >= to {
                return false;
            }
        }
        if !self.day_kinds.contains(&journey.board_at().day_kind()) {
            return false;
        }
        if let Some(route) = &self.route_id {
            if journey.route_id() != route {
                return false;
            }
        }
        if let Some(direction) = self.direction {
            if Direction::of_route(journey.route_id()) != direction {
                return false;
            }
        }
        true
    }

    /// One-line, human-readable record of the constraints.
    pub fn descriptor(&self) -> String {
        let mut parts = Vec::new();
        if let Some((from, to)) = self.hour_range {
            parts.push(format!("hours=[{from},{to})"));
        }
        if self.day_kinds.len() != DayKind::ALL.len() {
            let days: Vec<&str> = self.day_kinds.iter().map(|k| k.as_str()).collect();
            parts.push(format!("days={}", days.join(",")));
        }
        if let Some(route) = &self.route_id {
            parts.push(format!("route={route}"));
        }
        if let Some(direction) = self.direction {
            parts.push(format!("direction={}", direction.as_str()));
        }
        if parts.is_empty() {
            return "all journeys".to_owned();
        }
        let mut out = String::new();
        for (i, part) in parts.iter().enumerate() {
            if i > 0 {
                let _ = write!(out, "; ");
            }
            let _ = write!(out, "{part}");
        }
        out
    }
}

/// Counts the journeys passing the filter into an OD matrix.
pub fn build_od_matrix(journeys: &[PassengerJourney], filter: &TimeFilter) -> OdMatrix {
    let mut cells: BTreeMap<(StopId, StopId), u64> = BTreeMap::new();
    for journey in journeys.iter().filter(|j| filter.matches(j)) {
        *cells
            .entry((journey.board_stop().clone(), journey.alight_stop().clone()))
            .or_insert(0) += 1;
    }
    OdMatrix::new(cells, filter.descriptor())
        .expect("journey invariants forbid diagonal cells")
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::model::{DeviceId, PassengerJourney, StopId, Timestamp};

    /// Journey on route 138 with second-resolution times given as offsets
    /// from 2008-06-02T00:00:00Z (a Monday).
    pub fn journey(
        device: &str,
        run: &str,
        board: &str,
        alight: &str,
        board_s: i64,
        alight_s: i64,
    ) -> PassengerJourney {
        journey_on_route(device, run, "138", board, alight, board_s, alight_s)
    }

    pub fn journey_on_route(
        device: &str,
        run: &str,
        route: &str,
        board: &str,
        alight: &str,
        board_s: i64,
        alight_s: i64,
    ) -> PassengerJourney {
        const DAY0: i64 = 1_212_364_800; // 2008-06-02T00:00:00Z
        PassengerJourney::new(
            DeviceId::new(device).unwrap(),
            run.into(),
            route.into(),
            StopId::new(board).unwrap(),
            StopId::new(alight).unwrap(),
            Timestamp::from_seconds(DAY0 + board_s).unwrap(),
            Timestamp::from_seconds(DAY0 + alight_s).unwrap(),
        )
        .unwrap()
    }

    pub fn dev(i: usize) -> String {
        format!("{i:012x}")
    }
}
