//! Scenario generation: localization, sightings, tickets and ground truth.
//!
//! One seeded ChaCha8 stream drives everything, consumed in a fixed order
//! (passengers day by day, then bystanders, then depot devices, then the
//! discovery-round schedule, then per-round responses), so identical
//! scenarios generate identical bytes on every platform.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::evaluate::{GroundTruth, TrueJourney};
use super::{Scenario, SimError};
use crate::geo::haversine_m;
use crate::io::Dataset;
use crate::model::{
    DeviceClass, DeviceId, DeviceSighting, LocalizationRecord, StopId, TicketValidation,
    Timestamp,
};

const TICKET_TYPES: [&str; 3] = ["single", "return", "monthly"];
/// Out-of-service samples are sparse; nothing downstream needs them dense.
const DEPOT_RECORD_INTERVAL_S: i64 = 60;

/// One materialized run: absolute door-open instants per stop.
struct RunInstance {
    run_id: String,
    route_id: String,
    stop_opens: Vec<i64>,
    dwell_s: i64,
    leg_travel_s: i64,
}

impl RunInstance {
    fn start(&self) -> i64 {
        self.stop_opens[0]
    }

    fn end(&self) -> i64 {
        *self.stop_opens.last().expect("routes have stops") + self.dwell_s
    }

    fn door_close(&self, stop_index: usize) -> i64 {
        self.stop_opens[stop_index] + self.dwell_s
    }
}

/// A device answering discovery rounds during a closed time interval.
struct Presence {
    device: usize,
    start: i64,
    end: i64,
}

/// Runs a scenario to completion.
pub fn simulate(scenario: &Scenario) -> Result<(Dataset, GroundTruth), SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let span_start = scenario.day0.seconds();
    let span_end = span_start + i64::from(scenario.days) * 86_400;

    // --- run instances, one per template per day -------------------------
    let mut instances: Vec<RunInstance> = Vec::new();
    for day in 0..scenario.days {
        let day_start = span_start + i64::from(day) * 86_400;
        for template in &scenario.run_templates {
            let route = scenario.network.route(&template.route_id).expect("validated");
            let mut stop_opens = Vec::with_capacity(route.len());
            let mut t = day_start + template.start_offset_s;
            for i in 0..route.len() {
                if i > 0 {
                    t += template.dwell_s + template.leg_travel_s;
                }
                stop_opens.push(t);
            }
            instances.push(RunInstance {
                run_id: format!("{}-d{}", template.id, day),
                route_id: template.route_id.clone(),
                stop_opens,
                dwell_s: template.dwell_s,
                leg_travel_s: template.leg_travel_s,
            });
        }
    }

    // --- localization ----------------------------------------------------
    let localization = generate_localization(scenario, &instances, span_start, span_end);

    // --- passengers, tickets, ground truth -------------------------------
    let mut devices: Vec<(DeviceId, DeviceClass)> = Vec::new();
    let mut used_ids: BTreeSet<DeviceId> = BTreeSet::new();
    let mut presences: Vec<Presence> = Vec::new();
    let mut tickets: Vec<TicketValidation> = Vec::new();
    let mut truth_journeys: Vec<TrueJourney> = Vec::new();

    let od_total: f64 = scenario.od_weights.iter().map(|(_, _, w)| w).sum();
    let profile_total: f64 = scenario.demand_profile.iter().sum();

    // instances materialize day by day, template count per day each
    let per_day = scenario.run_templates.len();
    let instances_of_day = |day: u32| {
        let from = day as usize * per_day;
        &instances[from..from + per_day]
    };

    // stop -> position per route, to keep the passenger loop cheap
    let stop_positions: std::collections::BTreeMap<&str, std::collections::BTreeMap<&StopId, usize>> =
        scenario
            .network
            .routes()
            .iter()
            .map(|(route_id, stops)| {
                (
                    route_id.as_str(),
                    stops.iter().enumerate().map(|(i, s)| (s, i)).collect(),
                )
            })
            .collect();

    for day in 0..scenario.days {
        for _ in 0..scenario.passengers_per_day {
            // demand draw: OD pair by weight, boarding hour by profile,
            // then a uniform instant inside that hour
            let (origin, destination) = {
                let mut x = rng.random_range(0.0..od_total);
                let mut picked = &scenario.od_weights[0];
                for entry in &scenario.od_weights {
                    if x < entry.2 {
                        picked = entry;
                        break;
                    }
                    x -= entry.2;
                }
                (picked.0.clone(), picked.1.clone())
            };
            let hour = {
                let mut x = rng.random_range(0.0..profile_total);
                let mut picked = 0usize;
                for (h, &w) in scenario.demand_profile.iter().enumerate() {
                    if x < w {
                        picked = h;
                        break;
                    }
                    x -= w;
                }
                picked
            };
            let wanted = span_start
                + i64::from(day) * 86_400
                + hour as i64 * 3_600
                + rng.random_range(0..3_600);

            // the serving run whose boarding time comes closest to the
            // demanded instant; ties keep the earlier run
            let mut best: Option<(&RunInstance, usize, usize, i64)> = None;
            for run in instances_of_day(day) {
                let positions = &stop_positions[run.route_id.as_str()];
                let (Some(&o), Some(&d)) = (positions.get(&origin), positions.get(&destination))
                else {
                    continue;
                };
                if o >= d {
                    continue;
                }
                let dist = (run.stop_opens[o] - wanted).abs();
                if best.is_none_or(|(_, _, _, b)| dist < b) {
                    best = Some((run, o, d, dist));
                }
            }
            let Some((run, o_idx, d_idx, _)) = best else {
                return Err(SimError::InfeasibleSchedule {
                    origin: origin.as_str().to_owned(),
                    destination: destination.as_str().to_owned(),
                    day,
                });
            };
            let board_at = run.stop_opens[o_idx];
            let alight_at = run.stop_opens[d_idx];

            let discoverable = rng.random::<f64>() < scenario.penetration;
            let device = if discoverable {
                let (id, class) = new_device(&mut rng, &mut used_ids);
                devices.push((id.clone(), class));
                presences.push(Presence {
                    device: devices.len() - 1,
                    start: board_at,
                    end: alight_at,
                });
                Some(id)
            } else {
                None
            };

            let ticket_type = TICKET_TYPES[rng.random_range(0..TICKET_TYPES.len())];
            tickets.push(
                TicketValidation::new(tstamp(board_at), ticket_type.to_owned())
                    .expect("token constant"),
            );

            truth_journeys.push(TrueJourney {
                device,
                run_id: run.run_id.clone(),
                route_id: run.route_id.clone(),
                board_stop: origin,
                alight_stop: destination,
                board_at: tstamp(board_at),
                alight_at: tstamp(alight_at),
            });
        }
    }

    // --- bystanders: one random dwell each, never on board ---------------
    let mut bystanders: Vec<DeviceId> = Vec::new();
    for day in 0..scenario.days {
        let day_instances = instances_of_day(day);
        for _ in 0..scenario.bystanders_per_day {
            let run = &day_instances[rng.random_range(0..day_instances.len())];
            let stop_index = rng.random_range(0..run.stop_opens.len());
            let (id, class) = new_device(&mut rng, &mut used_ids);
            devices.push((id.clone(), class));
            presences.push(Presence {
                device: devices.len() - 1,
                start: run.stop_opens[stop_index],
                end: run.door_close(stop_index),
            });
            bystanders.push(id);
        }
    }

    // --- depot devices: present whenever the bus is out of service -------
    let mut depot_devices: Vec<DeviceId> = Vec::new();
    let gaps = out_of_service_gaps(&instances, span_start, span_end);
    for _ in 0..scenario.depot_devices {
        let (id, class) = new_device(&mut rng, &mut used_ids);
        devices.push((id.clone(), class));
        for &(gap_start, gap_end) in &gaps {
            presences.push(Presence { device: devices.len() - 1, start: gap_start, end: gap_end });
        }
        depot_devices.push(id);
    }

    // --- discovery rounds -------------------------------------------------
    let mut rounds: Vec<i64> = Vec::new();
    let mut t = span_start;
    loop {
        t += rng.random_range(scenario.discovery_min_s..=scenario.discovery_max_s);
        if t >= span_end {
            break;
        }
        rounds.push(t);
    }

    let mut sightings: Vec<DeviceSighting> = Vec::new();
    for presence in &presences {
        let from = rounds.partition_point(|&r| r < presence.start);
        for &round in &rounds[from..] {
            if round > presence.end {
                break;
            }
            if rng.random::<f64>() >= scenario.miss_prob {
                let (id, class) = &devices[presence.device];
                sightings.push(DeviceSighting {
                    device: id.clone(),
                    class: class.clone(),
                    at: tstamp(round),
                });
            }
        }
    }

    let dataset = Dataset::new(sightings, localization, tickets, scenario.network.clone())?;
    let truth = GroundTruth { journeys: truth_journeys, bystanders, depot_devices };
    Ok((dataset, truth))
}

fn tstamp(seconds: i64) -> Timestamp {
    Timestamp::from_seconds(seconds).expect("scenario horizon validated")
}

fn new_device(
    rng: &mut ChaCha8Rng,
    used: &mut BTreeSet<DeviceId>,
) -> (DeviceId, DeviceClass) {
    let id = loop {
        let raw = format!("{:012x}", rng.random::<u64>() & 0xffff_ffff_ffff);
        let id = DeviceId::new(&raw).expect("generated hex");
        if used.insert(id.clone()) {
            break id;
        }
    };
    let class = DeviceClass::new(&format!("{:06x}", rng.random::<u32>() & 0x00ff_ffff))
        .expect("generated hex");
    (id, class)
}

/// In-service records at 1 Hz per run; sparse out-of-service records in
/// the gaps. The bus parks where its last run ended.
fn generate_localization(
    scenario: &Scenario,
    instances: &[RunInstance],
    span_start: i64,
    span_end: i64,
) -> Vec<LocalizationRecord> {
    let mut records = Vec::new();
    let mut odometer = 0.0f64;

    let first_route = instances
        .first()
        .map(|r| r.route_id.as_str())
        .or_else(|| scenario.network.routes().keys().next().map(String::as_str));
    let mut parked = match first_route {
        Some(route) => {
            let stop = &scenario.network.route(route).expect("routes exist")[0];
            let info = scenario.network.stop(stop).expect("network invariant");
            (info.lat, info.lon)
        }
        None => (0.0, 0.0),
    };

    let emit_depot = |records: &mut Vec<LocalizationRecord>,
                          parked: (f64, f64),
                          odometer: f64,
                          from: i64,
                          until: i64| {
        let mut t = from;
        while t < until {
            records.push(
                LocalizationRecord::new(
                    tstamp(t),
                    parked.0,
                    parked.1,
                    quantize_m(odometer),
                    false,
                    false,
                    String::new(),
                    String::new(),
                )
                .expect("depot record fields are valid"),
            );
            t += DEPOT_RECORD_INTERVAL_S;
        }
    };

    let mut cursor = span_start;
    for run in instances {
        emit_depot(&mut records, parked, odometer, cursor, run.start());

        let route = scenario.network.route(&run.route_id).expect("validated");
        let coords: Vec<(f64, f64)> = route
            .iter()
            .map(|s| {
                let info = scenario.network.stop(s).expect("network invariant");
                (info.lat, info.lon)
            })
            .collect();
        let leg_m: Vec<f64> = coords
            .windows(2)
            .map(|w| haversine_m(w[0].0, w[0].1, w[1].0, w[1].1))
            .collect();
        // distance from the first stop to each stop along the route
        let mut cum_m = vec![0.0f64];
        for leg in &leg_m {
            cum_m.push(cum_m.last().expect("non-empty") + leg);
        }

        for t in run.start()..=run.end() {
            // locate t within the dwell/travel alternation
            let mut stop_index = 0;
            while stop_index + 1 < run.stop_opens.len() && t >= run.stop_opens[stop_index + 1] {
                stop_index += 1;
            }
            let doors_close = run.door_close(stop_index);
            let (lat, lon, doors_open, odo) = if t <= doors_close {
                let (lat, lon) = coords[stop_index];
                (lat, lon, true, odometer + cum_m[stop_index])
            } else {
                // traveling toward the next stop
                let frac = (t - doors_close) as f64 / run.leg_travel_s as f64;
                let (alat, alon) = coords[stop_index];
                let (blat, blon) = coords[stop_index + 1];
                (
                    alat + (blat - alat) * frac,
                    alon + (blon - alon) * frac,
                    false,
                    odometer + cum_m[stop_index] + leg_m[stop_index] * frac,
                )
            };
            records.push(
                LocalizationRecord::new(
                    tstamp(t),
                    quantize_deg(lat),
                    quantize_deg(lon),
                    quantize_m(odo),
                    doors_open,
                    true,
                    run.route_id.clone(),
                    run.run_id.clone(),
                )
                .expect("run record fields are valid"),
            );
        }

        odometer += cum_m.last().expect("non-empty");
        parked = *coords.last().expect("routes have stops");
        cursor = run.end() + 1;
    }
    emit_depot(&mut records, parked, odometer, cursor, span_end);
    records
}

/// Strictly-inside gaps between consecutive runs, plus the lead-in before
/// the first run and the tail after the last.
fn out_of_service_gaps(
    instances: &[RunInstance],
    span_start: i64,
    span_end: i64,
) -> Vec<(i64, i64)> {
    let mut gaps = Vec::new();
    let mut cursor = span_start;
    for run in instances {
        if run.start() - 1 >= cursor {
            gaps.push((cursor, run.start() - 1));
        }
        cursor = run.end() + 1;
    }
    if cursor <= span_end - 1 {
        gaps.push((cursor, span_end - 1));
    }
    gaps
}

/// Road positions quantized to the on-disk coordinate precision so the
/// written file reloads to exactly the generated values.
fn quantize_deg(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn quantize_m(v: f64) -> f64 {
    (v * 1e3).round() / 1e3
}
