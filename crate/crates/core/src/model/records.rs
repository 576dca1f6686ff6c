use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{validate_token, DeviceClass, DeviceId, ModelError, StopId, Timestamp};
use crate::Coord;

/// One discovery response: a device answered the scanner's inquiry.
///
/// Duplicate sightings at the same second are legal input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceSighting {
    pub device: DeviceId,
    pub class: DeviceClass,
    pub at: Timestamp,
}

impl DeviceSighting {
    /// Canonical dataset order: time first, then device, then class.
    pub fn sort_key(&self) -> (Timestamp, &DeviceId, &DeviceClass) {
        (self.at, &self.device, &self.class)
    }
}

impl PartialOrd for DeviceSighting {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DeviceSighting {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

/// A sessionized presence interval of one device at the scanner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceTrip {
    device: DeviceId,
    first_seen: Timestamp,
    last_seen: Timestamp,
    sighting_count: u64,
}

impl DeviceTrip {
    pub fn new(
        device: DeviceId,
        first_seen: Timestamp,
        last_seen: Timestamp,
        sighting_count: u64,
    ) -> Result<Self, ModelError> {
        if first_seen > last_seen {
            return Err(ModelError::InvalidTrip(format!(
                "first_seen {first_seen} after last_seen {last_seen}"
            )));
        }
        if sighting_count == 0 {
            return Err(ModelError::InvalidTrip("sighting_count is zero".into()));
        }
        Ok(DeviceTrip { device, first_seen, last_seen, sighting_count })
    }

    pub fn device(&self) -> &DeviceId {
        &self.device
    }

    pub fn first_seen(&self) -> Timestamp {
        self.first_seen
    }

    pub fn last_seen(&self) -> Timestamp {
        self.last_seen
    }

    pub fn sighting_count(&self) -> u64 {
        self.sighting_count
    }

    /// Trip with the device id replaced by its keyed hash.
    pub fn with_device(&self, device: DeviceId) -> Self {
        let mut t = self.clone();
        t.device = device;
        t
    }
}

/// One sample of the on-board localization system: GPS fix, odometer,
/// door sensor, and the service state of the bus.
///
/// Out-of-service samples (depot, repairs) carry empty route/run tokens and
/// are kept, not dropped: the correlation stage needs them to discard
/// devices sighted while the bus was not en route. Odometer monotonicity is
/// a cross-record property checked where whole logs are assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationRecord {
    at: Timestamp,
    lat: Coord,
    lon: Coord,
    odometer_m: Coord,
    doors_open: bool,
    in_service: bool,
    route_id: String,
    run_id: String,
}

impl LocalizationRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        at: Timestamp,
        lat: Coord,
        lon: Coord,
        odometer_m: Coord,
        doors_open: bool,
        in_service: bool,
        route_id: String,
        run_id: String,
    ) -> Result<Self, ModelError> {
        check_lat_lon(lat, lon)?;
        if !odometer_m.is_finite() || odometer_m < 0.0 {
            return Err(ModelError::InvalidRecord(format!(
                "odometer_m {odometer_m} must be finite and non-negative"
            )));
        }
        if in_service {
            validate_token(&route_id, "route_id")
                .and_then(|_| validate_token(&run_id, "run_id"))
                .map_err(|e| ModelError::InvalidRecord(e.to_string()))?;
        } else if !route_id.is_empty() || !run_id.is_empty() {
            return Err(ModelError::InvalidRecord(
                "out-of-service record must have empty route_id and run_id".into(),
            ));
        }
        Ok(LocalizationRecord {
            at,
            lat,
            lon,
            odometer_m,
            doors_open,
            in_service,
            route_id,
            run_id,
        })
    }

    pub fn at(&self) -> Timestamp {
        self.at
    }

    pub fn lat(&self) -> Coord {
        self.lat
    }

    pub fn lon(&self) -> Coord {
        self.lon
    }

    pub fn odometer_m(&self) -> Coord {
        self.odometer_m
    }

    pub fn doors_open(&self) -> bool {
        self.doors_open
    }

    pub fn in_service(&self) -> bool {
        self.in_service
    }

    /// Empty when out of service.
    pub fn route_id(&self) -> &str {
        &self.route_id
    }

    /// Empty when out of service.
    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    /// Canonical dataset order; the full-field tail makes sorting
    /// insensitive to the input permutation even for duplicate times.
    pub fn sort_key(&self) -> impl Ord + '_ {
        (
            self.at,
            &self.run_id,
            &self.route_id,
            self.odometer_m.total_cmp_key(),
            self.lat.total_cmp_key(),
            self.lon.total_cmp_key(),
            self.doors_open,
            self.in_service,
        )
    }
}

trait TotalCmpKey {
    fn total_cmp_key(self) -> u64;
}

impl TotalCmpKey for f64 {
    // standard IEEE-754 total-order bit trick
    fn total_cmp_key(self) -> u64 {
        let bits = self.to_bits();
        if bits >> 63 == 0 { bits ^ (1 << 63) } else { !bits }
    }
}

fn check_lat_lon(lat: Coord, lon: Coord) -> Result<(), ModelError> {
    if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
        return Err(ModelError::InvalidCoordinate(format!("latitude {lat}")));
    }
    if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
        return Err(ModelError::InvalidCoordinate(format!("longitude {lon}")));
    }
    Ok(())
}

/// One door-open dwell of a bus at a known stop within an in-service run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopVisit {
    run_id: String,
    route_id: String,
    stop: StopId,
    door_open_at: Timestamp,
    door_close_at: Timestamp,
    sequence_index: usize,
}

impl StopVisit {
    pub fn new(
        run_id: String,
        route_id: String,
        stop: StopId,
        door_open_at: Timestamp,
        door_close_at: Timestamp,
        sequence_index: usize,
    ) -> Result<Self, ModelError> {
        validate_token(&run_id, "run_id").map_err(|e| ModelError::InvalidVisit(e.to_string()))?;
        validate_token(&route_id, "route_id")
            .map_err(|e| ModelError::InvalidVisit(e.to_string()))?;
        if door_open_at > door_close_at {
            return Err(ModelError::InvalidVisit(format!(
                "door_open_at {door_open_at} after door_close_at {door_close_at}"
            )));
        }
        Ok(StopVisit { run_id, route_id, stop, door_open_at, door_close_at, sequence_index })
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn route_id(&self) -> &str {
        &self.route_id
    }

    pub fn stop(&self) -> &StopId {
        &self.stop
    }

    pub fn door_open_at(&self) -> Timestamp {
        self.door_open_at
    }

    pub fn door_close_at(&self) -> Timestamp {
        self.door_close_at
    }

    /// Position of the snapped stop within the run's route.
    pub fn sequence_index(&self) -> usize {
        self.sequence_index
    }
}

/// A correlated passenger journey: the device boarded at `board_stop` and
/// alighted at `alight_stop` on the given run.
///
/// Stop/time ordering is enforced here; membership of both stops in the
/// run's route (with board before alight) is up to the producer, which is
/// the correlation stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PassengerJourneyWire")]
pub struct PassengerJourney {
    device: DeviceId,
    run_id: String,
    route_id: String,
    board_stop: StopId,
    alight_stop: StopId,
    board_at: Timestamp,
    alight_at: Timestamp,
}

impl PassengerJourney {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        device: DeviceId,
        run_id: String,
        route_id: String,
        board_stop: StopId,
        alight_stop: StopId,
        board_at: Timestamp,
        alight_at: Timestamp,
    ) -> Result<Self, ModelError> {
        validate_token(&run_id, "run_id")
            .and_then(|_| validate_token(&route_id, "route_id"))
            .map_err(|e| ModelError::InvalidJourney(e.to_string()))?;
        if board_stop == alight_stop {
            return Err(ModelError::InvalidJourney(format!(
                "board and alight stop are both {board_stop}"
            )));
        }
        if board_at >= alight_at {
            return Err(ModelError::InvalidJourney(format!(
                "board_at {board_at} not before alight_at {alight_at}"
            )));
        }
        Ok(PassengerJourney {
            device,
            run_id,
            route_id,
            board_stop,
            alight_stop,
            board_at,
            alight_at,
        })
    }

    pub fn device(&self) -> &DeviceId {
        &self.device
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn route_id(&self) -> &str {
        &self.route_id
    }

    pub fn board_stop(&self) -> &StopId {
        &self.board_stop
    }

    pub fn alight_stop(&self) -> &StopId {
        &self.alight_stop
    }

    pub fn board_at(&self) -> Timestamp {
        self.board_at
    }

    pub fn alight_at(&self) -> Timestamp {
        self.alight_at
    }

    pub fn duration_s(&self) -> u64 {
        (self.alight_at.seconds() - self.board_at.seconds()) as u64
    }

    /// Journey with the device id replaced by its keyed hash.
    pub fn with_device(&self, device: DeviceId) -> Self {
        let mut j = self.clone();
        j.device = device;
        j
    }
}

#[derive(Deserialize)]
struct PassengerJourneyWire {
    device: DeviceId,
    run_id: String,
    route_id: String,
    board_stop: StopId,
    alight_stop: StopId,
    board_at: Timestamp,
    alight_at: Timestamp,
}

impl TryFrom<PassengerJourneyWire> for PassengerJourney {
    type Error = ModelError;

    fn try_from(w: PassengerJourneyWire) -> Result<Self, ModelError> {
        PassengerJourney::new(
            w.device,
            w.run_id,
            w.route_id,
            w.board_stop,
            w.alight_stop,
            w.board_at,
            w.alight_at,
        )
    }
}

/// One ticket validation as stamped by the on-board ticketing system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TicketValidation {
    at: Timestamp,
    ticket_type: String,
}

impl TicketValidation {
    pub fn new(at: Timestamp, ticket_type: String) -> Result<Self, ModelError> {
        validate_token(&ticket_type, "ticket_type")?;
        Ok(TicketValidation { at, ticket_type })
    }

    pub fn at(&self) -> Timestamp {
        self.at
    }

    pub fn ticket_type(&self) -> &str {
        &self.ticket_type
    }

    pub fn sort_key(&self) -> (Timestamp, &str) {
        (self.at, &self.ticket_type)
    }
}
