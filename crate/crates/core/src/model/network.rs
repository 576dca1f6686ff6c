use std::collections::{BTreeMap, BTreeSet};

use super::{validate_token, ModelError, StopId};
use crate::Coord;

/// A stop's position and display name.
#[derive(Debug, Clone, PartialEq)]
pub struct StopInfo {
    pub name: String,
    pub lat: Coord,
    pub lon: Coord,
}

/// Registry of stops and the ordered stop lists of each route.
///
/// A route's stop order defines its direction of travel; a line served in
/// both directions is modeled as two routes.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    stops: BTreeMap<StopId, StopInfo>,
    routes: BTreeMap<String, Vec<StopId>>,
}

impl NetworkModel {
    pub fn new(
        stops: BTreeMap<StopId, StopInfo>,
        routes: BTreeMap<String, Vec<StopId>>,
    ) -> Result<Self, ModelError> {
        for (id, info) in &stops {
            if !info.lat.is_finite() || !(-90.0..=90.0).contains(&info.lat) {
                return Err(ModelError::InvalidNetwork(format!(
                    "stop {id} has latitude {}",
                    info.lat
                )));
            }
            if !info.lon.is_finite() || !(-180.0..=180.0).contains(&info.lon) {
                return Err(ModelError::InvalidNetwork(format!(
                    "stop {id} has longitude {}",
                    info.lon
                )));
            }
        }
        for (route_id, route_stops) in &routes {
            validate_token(route_id, "route_id")
                .map_err(|e| ModelError::InvalidNetwork(e.to_string()))?;
            if route_stops.len() < 2 {
                return Err(ModelError::InvalidNetwork(format!(
                    "route {route_id} lists {} stop(s), need at least 2",
                    route_stops.len()
                )));
            }
            let mut seen = BTreeSet::new();
            for stop in route_stops {
                if !stops.contains_key(stop) {
                    return Err(ModelError::InvalidNetwork(format!(
                        "route {route_id} references undefined stop {stop}"
                    )));
                }
                if !seen.insert(stop) {
                    return Err(ModelError::InvalidNetwork(format!(
                        "route {route_id} lists stop {stop} twice"
                    )));
                }
            }
        }
        Ok(NetworkModel { stops, routes })
    }

    pub fn stop(&self, id: &StopId) -> Option<&StopInfo> {
        self.stops.get(id)
    }

    pub fn stops(&self) -> &BTreeMap<StopId, StopInfo> {
        &self.stops
    }

    pub fn route(&self, route_id: &str) -> Option<&[StopId]> {
        self.routes.get(route_id).map(Vec::as_slice)
    }

    pub fn routes(&self) -> &BTreeMap<String, Vec<StopId>> {
        &self.routes
    }

    /// 0-based position of `stop` within `route_id`, if both exist.
    pub fn stop_position(&self, route_id: &str, stop: &StopId) -> Option<usize> {
        self.route(route_id)?.iter().position(|s| s == stop)
    }
}
