//! Cross-module invariants as property tests.

use std::collections::BTreeMap;

use proptest::prelude::*;

use bluebus_core::analytics::{
    build_od_matrix, detect_cotravel, individual_od, occupancy_by_hour, ticket_correlation,
    TicketCorrelationReport, TimeFilter,
};
use bluebus_core::correlate::{correlate, CorrelationConfig};
use bluebus_core::geo::haversine_m;
use bluebus_core::model::{
    DeviceClass, DeviceId, DeviceSighting, DeviceTrip, LocalizationRecord, NetworkModel,
    PassengerJourney, StopId, StopInfo, Timestamp,
};
use bluebus_core::stops::{derive_stop_visits, RunWindow, SnapConfig};
use bluebus_core::trips::{derive_trips, GapThreshold};

fn ts(s: i64) -> Timestamp {
    Timestamp::from_seconds(s).unwrap()
}

fn dev(i: usize) -> DeviceId {
    DeviceId::new(&format!("{i:012x}")).unwrap()
}

fn class() -> DeviceClass {
    DeviceClass::new("5a020c").unwrap()
}

/// Sorted sighting stream over up to 3 devices with gaps straddling the
/// 5-minute threshold.
fn arb_sightings() -> impl Strategy<Value = Vec<DeviceSighting>> {
    prop::collection::vec((0usize..3, 0i64..40), 0..40).prop_map(|raw| {
        let mut clocks = [1_000i64; 3];
        let mut sightings: Vec<DeviceSighting> = raw
            .into_iter()
            .map(|(d, jump)| {
                // jumps cluster around the threshold: 0..40 scaled by 17
                // gives gaps 0..680 crossing 300 both ways
                clocks[d] += jump * 17;
                DeviceSighting { device: dev(d), class: class(), at: ts(clocks[d]) }
            })
            .collect();
        sightings.sort();
        sightings
    })
}

proptest! {
    // every sighting lands in exactly one trip of its device
    #[test]
    fn trips_partition_their_sightings(sightings in arb_sightings()) {
        let trips = derive_trips(&sightings, GapThreshold::default()).unwrap();
        let total: u64 = trips.iter().map(DeviceTrip::sighting_count).sum();
        prop_assert_eq!(total, sightings.len() as u64);
        for s in &sightings {
            let covering = trips
                .iter()
                .filter(|t| {
                    t.device() == &s.device && t.first_seen() <= s.at && s.at <= t.last_seen()
                })
                .count();
            prop_assert!(covering >= 1, "sighting outside every trip window");
        }
        // per device, trips are ordered and separated by at least the gap
        for pair in trips.windows(2) {
            if pair[0].device() == pair[1].device() {
                let gap = pair[1].first_seen().seconds() - pair[0].last_seen().seconds();
                prop_assert!(gap >= 300, "adjacent trips only {gap}s apart");
            }
        }
    }

    // a larger threshold can only merge clusters, never split them
    #[test]
    fn enlarging_the_gap_never_adds_trips(
        sightings in arb_sightings(),
        small in 1u64..400,
        extra in 0u64..400,
    ) {
        let few = derive_trips(&sightings, GapThreshold::new(small + extra).unwrap()).unwrap();
        let many = derive_trips(&sightings, GapThreshold::new(small).unwrap()).unwrap();
        prop_assert!(few.len() <= many.len());
    }

    // densifying inside an existing trip only bumps that trip's count
    #[test]
    fn densification_only_raises_one_count(
        sightings in arb_sightings(),
        pick in any::<prop::sample::Index>(),
    ) {
        let before = derive_trips(&sightings, GapThreshold::default()).unwrap();
        let candidates: Vec<&DeviceTrip> = before
            .iter()
            .filter(|t| t.last_seen().seconds() - t.first_seen().seconds() >= 2)
            .collect();
        prop_assume!(!candidates.is_empty());
        let target = candidates[pick.index(candidates.len())];
        let inside = ts((target.first_seen().seconds() + target.last_seen().seconds()) / 2);

        let mut denser = sightings.clone();
        denser.push(DeviceSighting { device: target.device().clone(), class: class(), at: inside });
        denser.sort();
        let after = derive_trips(&denser, GapThreshold::default()).unwrap();

        prop_assert_eq!(after.len(), before.len());
        for (a, b) in after.iter().zip(&before) {
            prop_assert_eq!(a.device(), b.device());
            prop_assert_eq!(a.first_seen(), b.first_seen());
            prop_assert_eq!(a.last_seen(), b.last_seen());
            let bump = if a.first_seen() == target.first_seen()
                && a.device() == target.device()
            {
                1
            } else {
                0
            };
            prop_assert_eq!(a.sighting_count(), b.sighting_count() + bump);
        }
    }

    // parse(format(t)) is the identity over the whole accepted range
    #[test]
    fn timestamp_round_trips(s in 0i64..253_402_300_800) {
        let t = ts(s);
        prop_assert_eq!(Timestamp::parse(&t.format()).unwrap(), t);
    }

    // the emitted visit snaps to the brute-force nearest stop
    #[test]
    fn snapping_matches_brute_force(
        stop_offsets in prop::collection::vec((-2_000i64..2_000, -2_000i64..2_000), 2..7),
        probe in (-2_500i64..2_500, -2_500i64..2_500),
    ) {
        const DEG_PER_M: f64 = 1.0 / 111_194.9;
        let mut stops = BTreeMap::new();
        let mut route = Vec::new();
        for (i, (dn, de)) in stop_offsets.iter().enumerate() {
            let id = StopId::new(&format!("S{i}")).unwrap();
            stops.insert(id.clone(), StopInfo {
                name: format!("Stop {i}"),
                lat: *dn as f64 * DEG_PER_M,
                lon: *de as f64 * DEG_PER_M,
            });
            route.push(id);
        }
        // identical coordinates would make the route list two stops at one
        // point; fine for snapping, but distinctness is a route invariant
        let network = match NetworkModel::new(
            stops,
            BTreeMap::from([("R1".to_owned(), route.clone())]),
        ) {
            Ok(n) => n,
            Err(_) => return Ok(()),
        };
        let (plat, plon) = (probe.0 as f64 * DEG_PER_M, probe.1 as f64 * DEG_PER_M);
        let record = LocalizationRecord::new(
            ts(0), plat, plon, 0.0, true, true, "R1".into(), "r1".into(),
        ).unwrap();
        let cfg = SnapConfig::new(500.0, 10).unwrap();
        let visits = derive_stop_visits(&[record], &network, &cfg).unwrap();

        let best = route
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let info = &network.stops()[s];
                (i, haversine_m(plat, plon, info.lat, info.lon))
            })
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if best.1 <= 500.0 {
            prop_assert_eq!(visits.len(), 1);
            prop_assert_eq!(visits[0].sequence_index(), best.0);
        } else {
            prop_assert!(visits.is_empty());
        }
    }

    // disjoint hour windows partition the unfiltered total
    #[test]
    fn hour_windows_partition_od_totals(
        boards in prop::collection::vec((0i64..7, 0i64..86_340, 0u32..60), 0..60),
    ) {
        let journeys: Vec<PassengerJourney> = boards
            .iter()
            .enumerate()
            .map(|(i, (day, offset, ride))| {
                PassengerJourney::new(
                    dev(i),
                    "r1".into(),
                    "138".into(),
                    StopId::new("S1").unwrap(),
                    StopId::new("S2").unwrap(),
                    ts(day * 86_400 + offset),
                    ts(day * 86_400 + offset + i64::from(*ride) + 1),
                )
                .unwrap()
            })
            .collect();
        let unfiltered = build_od_matrix(&journeys, &TimeFilter::unfiltered());
        let mut banded = 0u64;
        for from in [0u8, 6, 12, 18] {
            let filter = TimeFilter::unfiltered().with_hours(from, from + 6).unwrap();
            let part = build_od_matrix(&journeys, &filter);
            prop_assert!(part.total_journeys() <= unfiltered.total_journeys());
            banded += part.total_journeys();
        }
        prop_assert_eq!(banded, unfiltered.total_journeys());
        prop_assert_eq!(unfiltered.total_journeys(), journeys.len() as u64);
    }

    // integral of the occupancy curve equals the summed durations exactly
    #[test]
    fn occupancy_integrates_to_total_duration(
        boards in prop::collection::vec((0i64..3, 0i64..80_000, 1i64..7_000), 0..50),
        days in 1u32..5,
    ) {
        let journeys: Vec<PassengerJourney> = boards
            .iter()
            .enumerate()
            .map(|(i, (day, offset, ride))| {
                PassengerJourney::new(
                    dev(i),
                    "r1".into(),
                    "138".into(),
                    StopId::new("S1").unwrap(),
                    StopId::new("S2").unwrap(),
                    ts(day * 86_400 + offset),
                    ts(day * 86_400 + offset + ride),
                )
                .unwrap()
            })
            .collect();
        let curve = occupancy_by_hour(&journeys, days).unwrap();
        let integral: u64 = curve.hour_seconds().iter().sum();
        let durations: u64 = journeys.iter().map(PassengerJourney::duration_s).sum();
        prop_assert_eq!(integral, durations);
    }

    // scaling the ticket series scales the slope and leaves r^2 alone
    #[test]
    fn ticket_correlation_scale_invariance(
        pairs in prop::collection::vec((0u64..200, 0u64..2_000), 3..40),
        scale in 2u64..9,
    ) {
        let devices: Vec<u64> = pairs.iter().map(|(d, _)| *d).collect();
        let tickets: Vec<u64> = pairs.iter().map(|(_, t)| *t).collect();
        let scaled: Vec<u64> = tickets.iter().map(|t| t * scale).collect();
        let base: Result<TicketCorrelationReport, _> = ticket_correlation(&devices, &tickets);
        let bumped: Result<TicketCorrelationReport, _> = ticket_correlation(&devices, &scaled);
        match (base, bumped) {
            (Ok(a), Ok(b)) => {
                let expect = a.scale_factor * scale as f64;
                prop_assert!((b.scale_factor - expect).abs() <= expect.abs() * 1e-9);
                prop_assert!((b.r_squared - a.r_squared).abs() < 1e-9);
            }
            // degenerate inputs stay degenerate under scaling
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "scaling changed degeneracy: {a:?} vs {b:?}"),
        }
    }

    // per (origin, day kind, band), cell confidences sum to one
    #[test]
    fn prediction_confidences_sum_to_one(
        boards in prop::collection::vec((0i64..7, 0u8..24, 0u32..4), 1..40),
    ) {
        let device = dev(1);
        let journeys: Vec<PassengerJourney> = boards
            .iter()
            .map(|(day, hour, dest)| {
                PassengerJourney::new(
                    device.clone(),
                    "r1".into(),
                    "138".into(),
                    StopId::new("S0").unwrap(),
                    StopId::new(&format!("D{dest}")).unwrap(),
                    ts(day * 86_400 + i64::from(*hour) * 3_600),
                    ts(day * 86_400 + i64::from(*hour) * 3_600 + 600),
                )
                .unwrap()
            })
            .collect();
        let history = individual_od(&journeys, &device, 4).unwrap();
        let mut by_context: BTreeMap<(_, _), (u64, u64)> = BTreeMap::new();
        for ((_, _, kind, band), count) in history.cells() {
            let slot = by_context.entry((*kind, *band)).or_insert((0, 0));
            slot.0 += count;
        }
        for ((kind, band), (total, _)) in by_context {
            let confidence_sum: f64 = history
                .cells()
                .iter()
                .filter(|((_, _, k, b), _)| *k == kind && *b == band)
                .map(|(_, c)| *c as f64 / total as f64)
                .sum();
            prop_assert!((confidence_sum - 1.0).abs() < 1e-9);
        }
    }

    // relabeling the journey order never changes the co-travel report
    #[test]
    fn cotravel_is_permutation_invariant(
        boards in prop::collection::vec((0usize..5, 0usize..4, 0i64..2_000, 1i64..900), 0..25),
        seed in any::<u64>(),
    ) {
        let journeys: Vec<PassengerJourney> = boards
            .iter()
            .map(|(device, run, board, ride)| {
                PassengerJourney::new(
                    dev(*device),
                    format!("r{run}"),
                    "138".into(),
                    StopId::new("S1").unwrap(),
                    StopId::new("S2").unwrap(),
                    ts(*board),
                    ts(board + ride),
                )
                .unwrap()
            })
            .collect();
        let base = detect_cotravel(&journeys, 120, 2);
        let mut shuffled = journeys.clone();
        let mut i = seed as usize;
        for k in (1..shuffled.len()).rev() {
            i = i.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1);
            shuffled.swap(k, i % (k + 1));
        }
        prop_assert_eq!(detect_cotravel(&shuffled, 120, 2), base);
    }

    // conservation and route-order invariants hold for arbitrary inputs
    #[test]
    fn correlate_conserves_and_orders(
        trips_raw in prop::collection::vec((0usize..4, 0i64..4_000, 0i64..1_500), 0..30),
        visit_spans in prop::collection::vec((1i64..60, 1i64..300), 1..8),
        run_split in 1usize..7,
    ) {
        let mut trips: Vec<DeviceTrip> = trips_raw
            .iter()
            .map(|(d, start, len)| {
                DeviceTrip::new(dev(*d), ts(*start), ts(start + len), 1).unwrap()
            })
            .collect();
        trips.sort_by(|a, b| {
            (a.device().clone(), a.first_seen()).cmp(&(b.device().clone(), b.first_seen()))
        });

        // two runs of consecutive visits
        let mut visits = Vec::new();
        let mut runs = Vec::new();
        let mut t = 0i64;
        let split = run_split.min(visit_spans.len());
        for (run_idx, chunk) in [&visit_spans[..split], &visit_spans[split..]]
            .iter()
            .enumerate()
        {
            if chunk.is_empty() {
                continue;
            }
            let run_id = format!("run{run_idx}");
            let start = t;
            for (seq, (dwell, gap)) in chunk.iter().enumerate() {
                visits.push(
                    bluebus_core::model::StopVisit::new(
                        run_id.clone(),
                        "138".into(),
                        StopId::new(&format!("S{seq}")).unwrap(),
                        ts(t),
                        ts(t + dwell),
                        seq,
                    )
                    .unwrap(),
                );
                t += dwell + gap;
            }
            runs.push(RunWindow::new(run_id, "138".into(), ts(start), ts(t - 1)).unwrap());
            t += 400; // inter-run gap
        }

        let (journeys, rejected) =
            correlate(&trips, &visits, &runs, &CorrelationConfig::default()).unwrap();
        prop_assert_eq!(journeys.len() + rejected.len(), trips.len());
        for journey in &journeys {
            let run_visits: Vec<_> =
                visits.iter().filter(|v| v.run_id() == journey.run_id()).collect();
            let board = run_visits
                .iter()
                .find(|v| v.stop() == journey.board_stop())
                .expect("board visit belongs to the run");
            let alight = run_visits
                .iter()
                .find(|v| v.stop() == journey.alight_stop())
                .expect("alight visit belongs to the run");
            prop_assert!(board.sequence_index() < alight.sequence_index());
            prop_assert!(journey.board_at() < journey.alight_at());
        }
    }
}
