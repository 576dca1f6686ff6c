//! Correlation of device trips with stop visits.
//!
//! Each trip is assigned to the run whose service window it overlaps the
//! longest, then its endpoints are matched to stop visits of that run:
//!
//! * the boarding visit is the one whose door window (widened by the
//!   tolerance `epsilon_s`) contains the first sighting, or failing that
//!   the latest visit that closed before it — a passenger may not answer
//!   a discovery round until after the bus has left their stop;
//! * the alighting visit is the one whose widened window contains the last
//!   sighting, or failing that the earliest visit opening after it — a
//!   passenger may stop answering shortly before they get off.
//!
//! Three classes of noise fall out of this: trips overlapping no run were
//! recorded at the depot; trips boarding and alighting at the same visit
//! are bystanders who never rode; trips with no matchable endpoint were
//! picked up between stops. Every one of them is reported, never silently
//! dropped.
//!
//! One behavioral assumption is inherited from the data source: passengers
//! do not toggle their Bluetooth radio while on board.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DeviceTrip, PassengerJourney, StopVisit, Timestamp};
use crate::stops::RunWindow;

/// Tolerance, in seconds, applied around door windows when matching trip
/// endpoints; covers the stop-time extraction error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrelationConfig {
    pub epsilon_s: u64,
}

impl CorrelationConfig {
    pub const DEFAULT_EPSILON_S: u64 = 10;

    pub fn new(epsilon_s: u64) -> Self {
        CorrelationConfig { epsilon_s }
    }
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        CorrelationConfig { epsilon_s: Self::DEFAULT_EPSILON_S }
    }
}

/// Why a trip was not turned into a journey.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// The trip overlaps no in-service run: the device was sighted while
    /// the bus was parked or under repair.
    Depot,
    /// Board and alight resolved to the same visit: a bystander at a stop.
    SameStop,
    /// No stop visit could be assigned to one of the endpoints, or the
    /// matched visits do not progress along the route.
    Unmatched,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Depot => "depot",
            RejectReason::SameStop => "same_stop",
            RejectReason::Unmatched => "unmatched",
        }
    }
}

/// A trip the correlation refused, kept for audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedTrip {
    pub trip: DeviceTrip,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorrelateError {
    #[error("trips are not sorted by (device, first_seen)")]
    UnsortedTrips,
    #[error("stop visits violate per-run ordering: {0}")]
    InvalidVisits(String),
}

/// Matches a boarding instant against a run's visits (sorted by door open).
/// Containment in a widened door window wins, earliest such visit first;
/// otherwise the latest visit that closed at or before the instant.
fn match_boarding(visits: &[&StopVisit], at: Timestamp, epsilon_s: u64) -> Option<usize> {
    let t = at.seconds();
    let eps = epsilon_s as i64;
    visits
        .iter()
        .position(|v| v.door_open_at().seconds() - eps <= t && t <= v.door_close_at().seconds() + eps)
        .or_else(|| visits.iter().rposition(|v| v.door_close_at().seconds() <= t))
}

/// Matches an alighting instant: containment in a widened door window wins,
/// latest such visit first; otherwise the earliest visit opening at or
/// after the instant.
fn match_alighting(visits: &[&StopVisit], at: Timestamp, epsilon_s: u64) -> Option<usize> {
    let t = at.seconds();
    let eps = epsilon_s as i64;
    visits
        .iter()
        .rposition(|v| v.door_open_at().seconds() - eps <= t && t <= v.door_close_at().seconds() + eps)
        .or_else(|| visits.iter().position(|v| v.door_open_at().seconds() >= t))
}

/// Length of the overlap between a trip and a run window, or `None` when
/// they do not intersect. Touching intervals overlap with length zero, so
/// a single-sighting trip inside a run still gets assigned.
fn overlap_seconds(trip: &DeviceTrip, run: &RunWindow) -> Option<i64> {
    let lo = trip.first_seen().seconds().max(run.service_start().seconds());
    let hi = trip.last_seen().seconds().min(run.service_end().seconds());
    (lo <= hi).then_some(hi - lo)
}

/// Correlates device trips with stop visits.
///
/// `trips` must be sorted by (device, first_seen); `visits` must satisfy
/// the stop-visit ordering invariants within each run. Every input trip
/// comes back exactly once, either as a journey or as a rejected trip, in
/// input order.
pub fn correlate(
    trips: &[DeviceTrip],
    visits: &[StopVisit],
    runs: &[RunWindow],
    cfg: &CorrelationConfig,
) -> Result<(Vec<PassengerJourney>, Vec<RejectedTrip>), CorrelateError> {
    if trips
        .windows(2)
        .any(|w| (w[0].device(), w[0].first_seen()) > (w[1].device(), w[1].first_seen()))
    {
        return Err(CorrelateError::UnsortedTrips);
    }

    // ties in overlap go to the earlier service start, so order runs that way
    let mut runs_by_start: Vec<&RunWindow> = runs.iter().collect();
    runs_by_start.sort_by(|a, b| {
        (a.service_start(), a.run_id()).cmp(&(b.service_start(), b.run_id()))
    });

    let mut visits_by_run: std::collections::BTreeMap<&str, Vec<&StopVisit>> =
        std::collections::BTreeMap::new();
    for visit in visits {
        visits_by_run.entry(visit.run_id()).or_default().push(visit);
    }
    for (run_id, run_visits) in &visits_by_run {
        let ordered = run_visits.windows(2).all(|w| {
            w[0].door_open_at() < w[1].door_open_at()
                && w[0].sequence_index() <= w[1].sequence_index()
        });
        if !ordered {
            return Err(CorrelateError::InvalidVisits(format!("run {run_id}")));
        }
    }

    let mut journeys = Vec::new();
    let mut rejected = Vec::new();
    let reject = |trip: &DeviceTrip, reason: RejectReason, out: &mut Vec<RejectedTrip>| {
        out.push(RejectedTrip { trip: trip.clone(), reason });
    };

    for trip in trips {
        // longest overlap wins; strict comparison keeps the first maximum,
        // which is the run with the earliest service start
        let mut assigned: Option<(&RunWindow, i64)> = None;
        for run in &runs_by_start {
            if let Some(secs) = overlap_seconds(trip, run) {
                if assigned.is_none_or(|(_, best)| secs > best) {
                    assigned = Some((run, secs));
                }
            }
        }

        let Some((run, _)) = assigned else {
            reject(trip, RejectReason::Depot, &mut rejected);
            continue;
        };

        // a trip spanning a run boundary is clipped to the run it was
        // assigned to; the scanner stays on the bus across runs
        let eff_first = trip.first_seen().max(run.service_start());
        let eff_last = trip.last_seen().min(run.service_end());

        let run_visits = visits_by_run.get(run.run_id()).map(Vec::as_slice).unwrap_or(&[]);
        let board = match_boarding(run_visits, eff_first, cfg.epsilon_s);
        let alight = match_alighting(run_visits, eff_last, cfg.epsilon_s);
        let (Some(board), Some(alight)) = (board, alight) else {
            reject(trip, RejectReason::Unmatched, &mut rejected);
            continue;
        };

        if board == alight {
            reject(trip, RejectReason::SameStop, &mut rejected);
            continue;
        }
        let (board, alight) = (run_visits[board], run_visits[alight]);
        if board.sequence_index() >= alight.sequence_index() {
            reject(trip, RejectReason::Unmatched, &mut rejected);
            continue;
        }
        match PassengerJourney::new(
            trip.device().clone(),
            run.run_id().to_owned(),
            run.route_id().to_owned(),
            board.stop().clone(),
            alight.stop().clone(),
            board.door_open_at(),
            alight.door_open_at(),
        ) {
            Ok(journey) => journeys.push(journey),
            Err(_) => reject(trip, RejectReason::Unmatched, &mut rejected),
        }
    }
    Ok((journeys, rejected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DeviceId, StopId};

    fn ts(s: i64) -> Timestamp {
        Timestamp::from_seconds(s).unwrap()
    }

    fn trip(device: &str, first: i64, last: i64) -> DeviceTrip {
        DeviceTrip::new(DeviceId::new(device).unwrap(), ts(first), ts(last), 3).unwrap()
    }

    fn visit(run: &str, stop: &str, open: i64, close: i64, seq: usize) -> StopVisit {
        StopVisit::new(
            run.into(),
            "138".into(),
            StopId::new(stop).unwrap(),
            ts(open),
            ts(close),
            seq,
        )
        .unwrap()
    }

    fn run(id: &str, start: i64, end: i64) -> RunWindow {
        RunWindow::new(id.into(), "138".into(), ts(start), ts(end)).unwrap()
    }

    const DEV: &str = "0a1b2c3d4e5f";

    // 10:00:00 on day zero
    const H10: i64 = 36_000;

    #[test]
    fn boarding_and_alighting_resolve_by_containment_and_projection() {
        // trip [10:00:05, 10:20:00]; S1 doors [10:00:00, 10:00:30],
        // S5 doors [10:20:10, 10:20:40]; epsilon 10
        let trips = [trip(DEV, H10 + 5, H10 + 1200)];
        let visits = [
            visit("r1", "S1", H10, H10 + 30, 0),
            visit("r1", "S5", H10 + 1210, H10 + 1240, 4),
        ];
        let runs = [run("r1", H10 - 60, H10 + 1500)];
        let (journeys, rejected) =
            correlate(&trips, &visits, &runs, &CorrelationConfig::default()).unwrap();
        assert!(rejected.is_empty());
        assert_eq!(journeys.len(), 1);
        assert_eq!(journeys[0].board_stop().as_str(), "S1");
        assert_eq!(journeys[0].alight_stop().as_str(), "S5");
        assert_eq!(journeys[0].board_at(), ts(H10));
        assert_eq!(journeys[0].alight_at(), ts(H10 + 1210));
        assert_eq!(journeys[0].run_id(), "r1");
    }

    #[test]
    fn trip_overlapping_no_run_is_depot_noise() {
        // 02:00-02:30, bus in service only from 10:00
        let trips = [trip(DEV, 7_200, 9_000)];
        let runs = [run("r1", H10, H10 + 1500)];
        let (journeys, rejected) =
            correlate(&trips, &[], &runs, &CorrelationConfig::default()).unwrap();
        assert!(journeys.is_empty());
        assert_eq!(rejected.len(), 1);
        assert_eq!(rejected[0].reason, RejectReason::Depot);
    }

    #[test]
    fn bystander_inside_one_dwell_is_same_stop() {
        // trip [10:00:02, 10:00:25] entirely inside S1's dwell
        let trips = [trip(DEV, H10 + 2, H10 + 25)];
        let visits = [
            visit("r1", "S1", H10, H10 + 30, 0),
            visit("r1", "S2", H10 + 300, H10 + 330, 1),
        ];
        let runs = [run("r1", H10 - 60, H10 + 1500)];
        let (journeys, rejected) =
            correlate(&trips, &visits, &runs, &CorrelationConfig::default()).unwrap();
        assert!(journeys.is_empty());
        assert_eq!(rejected[0].reason, RejectReason::SameStop);
    }

    #[test]
    fn trip_before_any_visit_is_unmatched() {
        // picked up between stops: first seen before the first dwell opens,
        // outside every widened window
        let trips = [trip(DEV, H10 + 40, H10 + 70)];
        let visits = [visit("r1", "S2", H10 + 100, H10 + 130, 1)];
        let runs = [run("r1", H10, H10 + 1500)];
        let (journeys, rejected) =
            correlate(&trips, &visits, &runs, &CorrelationConfig::default()).unwrap();
        assert!(journeys.is_empty());
        assert_eq!(rejected[0].reason, RejectReason::Unmatched);
    }

    #[test]
    fn run_assignment_prefers_longest_overlap() {
        // the trip spans r1's tail and the whole of r2; r2's overlap is
        // larger, and the endpoints are recomputed from the clipped window
        let trips = [trip(DEV, 900, 2_100)];
        let visits = [
            visit("r1", "S1", 0, 30, 0),
            visit("r2", "S1", 1_060, 1_090, 0),
            visit("r2", "S2", 1_900, 1_940, 1),
        ];
        let runs = [run("r1", 0, 1_000), run("r2", 1_060, 1_940)];
        let (journeys, rejected) =
            correlate(&trips, &visits, &runs, &CorrelationConfig::default()).unwrap();
        assert!(rejected.is_empty());
        assert_eq!(journeys[0].run_id(), "r2");
        assert_eq!(journeys[0].board_stop().as_str(), "S1");
        assert_eq!(journeys[0].alight_stop().as_str(), "S2");
    }

    #[test]
    fn overlap_ties_break_to_earlier_run() {
        // single sighting at the instant both windows share: zero-length
        // overlap with each run, so the earlier start must win. Assignment
        // to r2 would hit its dwell and be rejected SameStop instead.
        let trips = [trip(DEV, 1_000, 1_000)];
        let visits = [visit("r2", "S1", 1_000, 1_030, 0)];
        let runs = [run("r2", 1_000, 2_000), run("r1", 0, 1_000)];
        let (journeys, rejected) =
            correlate(&trips, &visits, &runs, &CorrelationConfig::default()).unwrap();
        assert!(journeys.is_empty());
        assert_eq!(rejected[0].reason, RejectReason::Unmatched);
    }

    #[test]
    fn two_visits_at_the_same_stop_do_not_make_a_journey() {
        // a loop run opening doors twice at S1: equal sequence indices
        let trips = [trip(DEV, 5, 310)];
        let visits = [visit("r1", "S1", 0, 30, 0), visit("r1", "S1", 300, 330, 0)];
        let runs = [run("r1", 0, 400)];
        let (journeys, rejected) =
            correlate(&trips, &visits, &runs, &CorrelationConfig::default()).unwrap();
        assert!(journeys.is_empty());
        assert_eq!(rejected[0].reason, RejectReason::Unmatched);
    }

    #[test]
    fn conservation_every_trip_accounted_once() {
        let trips = [
            trip("0a1b2c3d4e5f", 7_200, 9_000),
            trip("1a1b2c3d4e5f", H10 + 2, H10 + 25),
            trip("2a1b2c3d4e5f", H10 + 5, H10 + 400),
        ];
        let visits = [
            visit("r1", "S1", H10, H10 + 30, 0),
            visit("r1", "S2", H10 + 390, H10 + 420, 1),
        ];
        let runs = [run("r1", H10 - 60, H10 + 1500)];
        let (journeys, rejected) =
            correlate(&trips, &visits, &runs, &CorrelationConfig::default()).unwrap();
        assert_eq!(journeys.len() + rejected.len(), trips.len());
    }

    #[test]
    fn unsorted_trips_are_rejected() {
        let trips = [trip(DEV, 100, 200), trip(DEV, 0, 50)];
        assert_eq!(
            correlate(&trips, &[], &[], &CorrelationConfig::default()),
            Err(CorrelateError::UnsortedTrips)
        );
    }

    #[test]
    fn disordered_visits_are_rejected() {
        let visits = [visit("r1", "S2", 300, 330, 1), visit("r1", "S1", 0, 30, 0)];
        let err = correlate(&[], &visits, &[], &CorrelationConfig::default()).unwrap_err();
        assert!(matches!(err, CorrelateError::InvalidVisits(_)));
    }

    mod endpoint_properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_visits() -> impl Strategy<Value = Vec<StopVisit>> {
            // between 1 and 6 visits with random dwells and gaps
            prop::collection::vec((1u32..120, 1u32..600), 1..6).prop_map(|spans| {
                let mut t = 1_000i64;
                let mut visits = Vec::new();
                for (i, (dwell, gap)) in spans.into_iter().enumerate() {
                    let open = t;
                    let close = t + dwell as i64;
                    visits.push(visit("r1", &format!("S{i}"), open, close, i));
                    t = close + gap as i64;
                }
                visits
            })
        }

        proptest! {
            // growing epsilon never loses a matched endpoint
            #[test]
            fn epsilon_growth_keeps_endpoints_matched(
                visits in arb_visits(),
                at in 0i64..6_000,
                eps1 in 0u64..60,
                extra in 0u64..60,
            ) {
                let refs: Vec<&StopVisit> = visits.iter().collect();
                let t = ts(at);
                let eps2 = eps1 + extra;
                if match_boarding(&refs, t, eps1).is_some() {
                    prop_assert!(match_boarding(&refs, t, eps2).is_some());
                }
                if match_alighting(&refs, t, eps1).is_some() {
                    prop_assert!(match_alighting(&refs, t, eps2).is_some());
                }
            }

            // board never lands after alight when both endpoints match
            #[test]
            fn matched_pairs_are_ordered(
                visits in arb_visits(),
                first in 0i64..6_000,
                len in 0i64..3_000,
                eps in 0u64..60,
            ) {
                let refs: Vec<&StopVisit> = visits.iter().collect();
                let last = first + len;
                if let (Some(b), Some(a)) =
                    (match_boarding(&refs, ts(first), eps), match_alighting(&refs, ts(last), eps))
                {
                    prop_assert!(b <= a, "board {b} after alight {a}");
                }
            }
        }
    }
}
