//! Scenario configuration: JSON schema and validation.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{NaiveDate, NaiveTime};
use serde::Deserialize;

use super::SimError;
use crate::io::{format_err, io_err};
use crate::model::{NetworkModel, StopId, StopInfo, Timestamp};

/// One scheduled run per service day: the bus starts at `start` (time of
/// day), dwells `dwell_s` at every stop and takes `leg_travel_s` between
/// consecutive stops of its route.
#[derive(Debug, Clone)]
pub struct RunTemplate {
    pub(crate) id: String,
    pub(crate) route_id: String,
    pub(crate) start_offset_s: i64,
    pub(crate) leg_travel_s: i64,
    pub(crate) dwell_s: i64,
}

impl RunTemplate {
    /// End of the run relative to midnight: final stop's doors close.
    fn end_offset_s(&self, stops: usize) -> i64 {
        self.start_offset_s
            + stops as i64 * self.dwell_s
            + (stops as i64 - 1) * self.leg_travel_s
    }
}

/// A validated simulation scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub(crate) network: NetworkModel,
    pub(crate) day0: Timestamp,
    pub(crate) run_templates: Vec<RunTemplate>,
    pub(crate) days: u32,
    pub(crate) passengers_per_day: u32,
    pub(crate) od_weights: Vec<(StopId, StopId, f64)>,
    pub(crate) demand_profile: [f64; 24],
    pub(crate) penetration: f64,
    pub(crate) discovery_min_s: i64,
    pub(crate) discovery_max_s: i64,
    pub(crate) miss_prob: f64,
    pub(crate) bystanders_per_day: u32,
    pub(crate) depot_devices: u32,
    pub(crate) seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioWire {
    start_date: String,
    stops: Vec<StopWire>,
    routes: Vec<RouteWire>,
    runs: Vec<RunWire>,
    days: u32,
    passengers_per_day: u32,
    #[serde(default)]
    od_weights: Vec<OdWeightWire>,
    demand_profile: Vec<f64>,
    penetration: f64,
    #[serde(default = "default_discovery_min")]
    discovery_min_s: i64,
    #[serde(default = "default_discovery_max")]
    discovery_max_s: i64,
    #[serde(default = "default_miss_prob")]
    miss_prob: f64,
    #[serde(default)]
    bystanders_per_day: u32,
    #[serde(default)]
    depot_devices: u32,
    seed: u64,
}

fn default_discovery_min() -> i64 {
    3
}

fn default_discovery_max() -> i64 {
    10
}

// free parameter: depresses peak-hour registration a little without
// hurting recovery at desk scale
fn default_miss_prob() -> f64 {
    0.1
}

#[derive(Debug, Deserialize)]
struct StopWire {
    id: String,
    name: String,
    lat: f64,
    lon: f64,
}

#[derive(Debug, Deserialize)]
struct RouteWire {
    id: String,
    stops: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct RunWire {
    id: String,
    route: String,
    start: String,
    leg_travel_s: i64,
    dwell_s: i64,
}

#[derive(Debug, Deserialize)]
struct OdWeightWire {
    origin: String,
    destination: String,
    weight: f64,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self, SimError> {
        let raw = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let wire: ScenarioWire = serde_json::from_str(&raw)
            .map_err(|e| format_err(path, e.line() as u64, e.to_string()))?;
        Self::from_wire(wire)
    }

    pub fn from_json_str(raw: &str) -> Result<Self, SimError> {
        let wire: ScenarioWire = serde_json::from_str(raw)
            .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        Self::from_wire(wire)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    pub fn days(&self) -> u32 {
        self.days
    }

    pub fn network(&self) -> &NetworkModel {
        &self.network
    }

    fn from_wire(wire: ScenarioWire) -> Result<Self, SimError> {
        let bad = |msg: String| SimError::InvalidScenario(msg);

        let date = NaiveDate::parse_from_str(&wire.start_date, "%Y-%m-%d")
            .map_err(|_| bad(format!("start_date {:?} is not YYYY-MM-DD", wire.start_date)))?;
        let midnight = date.and_hms_opt(0, 0, 0).expect("midnight exists");
        let day0 = Timestamp::from_seconds(midnight.and_utc().timestamp())
            .map_err(|e| bad(e.to_string()))?;

        let mut stops = BTreeMap::new();
        for s in wire.stops {
            let id = StopId::new(&s.id).map_err(|e| bad(e.to_string()))?;
            // coordinates quantized to the on-disk precision up front, so
            // simulated files reload to exactly the simulated values
            let info = StopInfo {
                name: s.name,
                lat: quantize(s.lat, 1e6),
                lon: quantize(s.lon, 1e6),
            };
            if stops.insert(id, info).is_some() {
                return Err(bad(format!("duplicate stop {}", s.id)));
            }
        }
        let mut routes = BTreeMap::new();
        for r in wire.routes {
            let mut route_stops = Vec::new();
            for s in &r.stops {
                route_stops.push(StopId::new(s).map_err(|e| bad(e.to_string()))?);
            }
            if routes.insert(r.id.clone(), route_stops).is_some() {
                return Err(bad(format!("duplicate route {}", r.id)));
            }
        }
        let network = NetworkModel::new(stops, routes).map_err(|e| bad(e.to_string()))?;

        if wire.days == 0 {
            return Err(bad("days must be at least 1".into()));
        }

        let mut run_templates = Vec::new();
        for r in &wire.runs {
            let start = NaiveTime::parse_from_str(&r.start, "%H:%M:%S")
                .map_err(|_| bad(format!("run {}: start {:?} is not HH:MM:SS", r.id, r.start)))?;
            if r.dwell_s < 1 || r.leg_travel_s < 1 {
                return Err(bad(format!(
                    "run {}: dwell_s and leg_travel_s must be at least 1",
                    r.id
                )));
            }
            let stops = network
                .route(&r.route)
                .ok_or_else(|| bad(format!("run {} references unknown route {}", r.id, r.route)))?
                .len();
            let midnight = NaiveTime::from_hms_opt(0, 0, 0).expect("midnight");
            let template = RunTemplate {
                id: r.id.clone(),
                route_id: r.route.clone(),
                start_offset_s: start.signed_duration_since(midnight).num_seconds(),
                leg_travel_s: r.leg_travel_s,
                dwell_s: r.dwell_s,
            };
            if template.end_offset_s(stops) > 86_400 {
                return Err(bad(format!("run {} does not finish within its day", r.id)));
            }
            run_templates.push(template);
        }
        run_templates.sort_by(|a, b| (a.start_offset_s, &a.id).cmp(&(b.start_offset_s, &b.id)));
        {
            let mut seen = std::collections::BTreeSet::new();
            for t in &run_templates {
                if !seen.insert(&t.id) {
                    return Err(bad(format!("duplicate run id {}", t.id)));
                }
            }
        }
        for pair in run_templates.windows(2) {
            let stops = network.route(&pair[0].route_id).expect("validated").len();
            if pair[0].end_offset_s(stops) >= pair[1].start_offset_s {
                return Err(bad(format!(
                    "runs {} and {} overlap; one bus runs one schedule",
                    pair[0].id, pair[1].id
                )));
            }
        }

        if wire.demand_profile.len() != 24 {
            return Err(bad(format!(
                "demand_profile needs 24 entries, has {}",
                wire.demand_profile.len()
            )));
        }
        let mut demand_profile = [0.0; 24];
        for (i, &v) in wire.demand_profile.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(bad(format!("demand_profile[{i}] = {v} must be >= 0")));
            }
            demand_profile[i] = v;
        }

        let mut od_weights = Vec::new();
        for w in &wire.od_weights {
            let origin = StopId::new(&w.origin).map_err(|e| bad(e.to_string()))?;
            let destination = StopId::new(&w.destination).map_err(|e| bad(e.to_string()))?;
            if !w.weight.is_finite() || w.weight <= 0.0 {
                return Err(bad(format!(
                    "od weight {} -> {} must be positive",
                    w.origin, w.destination
                )));
            }
            let ordered_on_some_route = network.routes().iter().any(|(route_id, _)| {
                match (
                    network.stop_position(route_id, &origin),
                    network.stop_position(route_id, &destination),
                ) {
                    (Some(o), Some(d)) => o < d,
                    _ => false,
                }
            });
            if !ordered_on_some_route {
                return Err(bad(format!(
                    "od pair {} -> {} is ordered on no route",
                    w.origin, w.destination
                )));
            }
            od_weights.push((origin, destination, w.weight));
        }

        if wire.passengers_per_day > 0 {
            if od_weights.is_empty() {
                return Err(bad("passengers demanded but od_weights is empty".into()));
            }
            if demand_profile.iter().sum::<f64>() <= 0.0 {
                return Err(bad("passengers demanded but demand_profile is all zero".into()));
            }
            if run_templates.is_empty() {
                return Err(bad("passengers demanded but no runs scheduled".into()));
            }
        }
        if wire.bystanders_per_day > 0 && run_templates.is_empty() {
            return Err(bad("bystanders demanded but no runs scheduled".into()));
        }

        if !(0.0..=1.0).contains(&wire.penetration) {
            return Err(bad(format!("penetration {} outside [0,1]", wire.penetration)));
        }
        if !(0.0..1.0).contains(&wire.miss_prob) {
            return Err(bad(format!("miss_prob {} outside [0,1)", wire.miss_prob)));
        }
        if wire.discovery_min_s < 1 || wire.discovery_min_s > wire.discovery_max_s {
            return Err(bad(format!(
                "discovery interval [{},{}] is invalid",
                wire.discovery_min_s, wire.discovery_max_s
            )));
        }

        // the whole horizon must stay in timestamp range
        let horizon = day0.seconds() + i64::from(wire.days) * 86_400;
        Timestamp::from_seconds(horizon).map_err(|e| bad(e.to_string()))?;

        Ok(Scenario {
            network,
            day0,
            run_templates,
            days: wire.days,
            passengers_per_day: wire.passengers_per_day,
            od_weights,
            demand_profile,
            penetration: wire.penetration,
            discovery_min_s: wire.discovery_min_s,
            discovery_max_s: wire.discovery_max_s,
            miss_prob: wire.miss_prob,
            bystanders_per_day: wire.bystanders_per_day,
            depot_devices: wire.depot_devices,
            seed: wire.seed,
        })
    }
}

fn quantize(v: f64, scale: f64) -> f64 {
    (v * scale).round() / scale
}


#[cfg(test)]
mod tests {
    use super::test_support::scenario_json;
    use super::*;

    #[test]
    fn parses_and_validates_the_sample() {
        let scenario = Scenario::from_json_str(&scenario_json("")).unwrap();
        assert_eq!(scenario.days(), 1);
        assert_eq!(scenario.run_templates.len(), 2);
        assert_eq!(scenario.day0.format(), "2008-06-02T00:00:00Z");
        // defaults applied
        assert_eq!(scenario.bystanders_per_day, 0);
        assert_eq!(scenario.depot_devices, 0);
    }

    #[test]
    fn rejects_bad_probability_and_cadence() {
        let bad_p = scenario_json("").replace("\"penetration\": 1.0", "\"penetration\": 1.5");
        assert!(Scenario::from_json_str(&bad_p).is_err());
        let bad_q = scenario_json("").replace("\"miss_prob\": 0.0", "\"miss_prob\": 1.0");
        assert!(Scenario::from_json_str(&bad_q).is_err());
        let bad_disc =
            scenario_json("").replace("\"discovery_min_s\": 3", "\"discovery_min_s\": 20");
        assert!(Scenario::from_json_str(&bad_disc).is_err());
        let zero_min =
            scenario_json("").replace("\"discovery_min_s\": 3", "\"discovery_min_s\": 0");
        assert!(Scenario::from_json_str(&zero_min).is_err());
    }

    #[test]
    fn rejects_od_pair_ordered_on_no_route() {
        let backwards = scenario_json("").replace(
            "{\"origin\": \"S1\", \"destination\": \"S2\", \"weight\": 1.0}",
            "{\"origin\": \"S3\", \"destination\": \"S1\", \"weight\": 1.0}",
        );
        let err = Scenario::from_json_str(&backwards).unwrap_err();
        assert!(err.to_string().contains("ordered on no route"), "{err}");
    }

    #[test]
    fn rejects_overlapping_runs() {
        let overlapping =
            scenario_json("").replace("\"start\": \"09:00:00\"", "\"start\": \"08:05:00\"");
        let err = Scenario::from_json_str(&overlapping).unwrap_err();
        assert!(err.to_string().contains("overlap"), "{err}");
    }

    #[test]
    fn rejects_wrong_profile_length() {
        let short = scenario_json("").replace(
            "\"demand_profile\": [0,0,0,0,0,0,0,0,2,1,0,0,0,0,0,0,0,0,0,0,0,0,0,0]",
            "\"demand_profile\": [1,2,3]",
        );
        assert!(Scenario::from_json_str(&short).is_err());
    }

    #[test]
    fn rejects_unknown_fields() {
        let unknown = scenario_json(",\n  \"warp_drive\": true");
        assert!(Scenario::from_json_str(&unknown).is_err());
    }
}
