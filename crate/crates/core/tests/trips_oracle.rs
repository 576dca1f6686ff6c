//! Sessionization against an exhaustive split-enumeration oracle.
//!
//! The oracle tries every possible way to split a device's sighting stream
//! and keeps the partitions where every inside gap is below the threshold
//! and every boundary gap is at or above it. The gap rule fixes each
//! boundary independently, so exactly one partition survives; the oracle
//! asserts that uniqueness too instead of assuming it.

use proptest::prelude::*;

use bluebus_core::model::{DeviceClass, DeviceId, DeviceSighting, Timestamp};
use bluebus_core::trips::{derive_trips, GapThreshold};

/// All valid partitions of one device's sorted sighting times.
fn enumerate_partitions(times: &[i64], gap: u64) -> Vec<Vec<(i64, i64, u64)>> {
    assert!(times.len() <= 16, "enumeration is exponential");
    if times.is_empty() {
        return vec![Vec::new()];
    }
    let boundaries = times.len() - 1;
    let mut valid = Vec::new();
    for mask in 0u32..(1u32 << boundaries) {
        let ok = (0..boundaries).all(|i| {
            let split_here = mask & (1 << i) != 0;
            let gap_here = (times[i + 1] - times[i]) as u64 >= gap;
            split_here == gap_here
        });
        if !ok {
            continue;
        }
        let mut segments = Vec::new();
        let mut start = 0usize;
        for i in 0..boundaries {
            if mask & (1 << i) != 0 {
                segments.push((times[start], times[i], (i + 1 - start) as u64));
                start = i + 1;
            }
        }
        segments.push((times[start], times[times.len() - 1], (times.len() - start) as u64));
        valid.push(segments);
    }
    valid
}

fn check_against_oracle(streams: &[Vec<i64>], gap: u64) {
    let devices: Vec<DeviceId> = (0..streams.len())
        .map(|i| DeviceId::new(&format!("{i:012x}")).unwrap())
        .collect();
    let class = DeviceClass::new("5a020c").unwrap();
    let mut sightings = Vec::new();
    for (device, times) in devices.iter().zip(streams) {
        for &t in times {
            sightings.push(DeviceSighting {
                device: device.clone(),
                class: class.clone(),
                at: Timestamp::from_seconds(t).unwrap(),
            });
        }
    }
    sightings.sort();

    let trips = derive_trips(&sightings, GapThreshold::new(gap).unwrap()).unwrap();

    for (device, times) in devices.iter().zip(streams) {
        let mut sorted = times.clone();
        sorted.sort_unstable();
        let valid = enumerate_partitions(&sorted, gap);
        assert_eq!(valid.len(), 1, "the gap rule must admit exactly one partition");
        let expected = &valid[0];
        let ours: Vec<(i64, i64, u64)> = trips
            .iter()
            .filter(|t| t.device() == device)
            .map(|t| (t.first_seen().seconds(), t.last_seen().seconds(), t.sighting_count()))
            .collect();
        assert_eq!(&ours, expected, "device {device} disagrees with the oracle");
    }
}

proptest! {
    // up to 3 devices, up to 12 sightings each, gaps straddling 300 s
    #[test]
    fn derive_trips_equals_exhaustive_enumeration(
        streams in prop::collection::vec(
            prop::collection::vec(0i64..40, 0..12),
            1..4,
        ),
    ) {
        let absolute: Vec<Vec<i64>> = streams
            .iter()
            .map(|jumps| {
                let mut t = 500i64;
                jumps
                    .iter()
                    .map(|j| {
                        t += j * 25; // gaps 0..975, crossing 300 both ways
                        t
                    })
                    .collect()
            })
            .collect();
        check_against_oracle(&absolute, 300);
    }

    // exact-boundary gaps are the risky case: exercise them directly
    #[test]
    fn boundary_gaps_split_exactly(
        deltas in prop::collection::vec(prop::sample::select(vec![0i64, 1, 299, 300, 301]), 0..12),
    ) {
        let mut t = 500i64;
        let times: Vec<i64> = deltas
            .iter()
            .map(|d| {
                t += d;
                t
            })
            .collect();
        check_against_oracle(&[times], 300);
    }
}
