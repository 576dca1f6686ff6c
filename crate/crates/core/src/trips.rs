//! Sessionization of discovery sightings into device trips.
//!
//! Consecutive sightings of the same device merge into one trip while the
//! gap between them stays strictly below the threshold. The threshold is
//! deliberately large (default 5 minutes) because bodies in a crowded bus
//! can block a device's responses for a while without the device having
//! left.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{DeviceId, DeviceSighting, DeviceTrip, Timestamp};

/// Maximum silence, in seconds, tolerated inside one trip. A gap of exactly
/// this many seconds already splits: "less than" is strict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapThreshold(u64);

impl GapThreshold {
    pub const DEFAULT_SECONDS: u64 = 300;

    pub fn new(seconds: u64) -> Result<Self, TripError> {
        if seconds == 0 {
            return Err(TripError::InvalidGap);
        }
        Ok(GapThreshold(seconds))
    }

    pub fn seconds(self) -> u64 {
        self.0
    }
}

impl Default for GapThreshold {
    fn default() -> Self {
        GapThreshold(Self::DEFAULT_SECONDS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TripError {
    #[error("gap threshold must be at least 1 second")]
    InvalidGap,
    #[error("sightings are not sorted by (time, device)")]
    UnsortedInput,
}

/// Splits each device's sighting stream at gaps of `gap.seconds()` or more.
///
/// Input must be sorted by (time, device). Output is sorted by
/// (device, first trip time); every input sighting lands in exactly one
/// trip of its device, so the sighting counts sum to the input length.
pub fn derive_trips(
    sightings: &[DeviceSighting],
    gap: GapThreshold,
) -> Result<Vec<DeviceTrip>, TripError> {
    if sightings
        .windows(2)
        .any(|w| (w[0].at, &w[0].device) > (w[1].at, &w[1].device))
    {
        return Err(TripError::UnsortedInput);
    }

    // Global (time, device) order means each device's own stream is
    // already in time order after this regrouping.
    let mut per_device: BTreeMap<&DeviceId, Vec<Timestamp>> = BTreeMap::new();
    for sighting in sightings {
        per_device.entry(&sighting.device).or_default().push(sighting.at);
    }

    let mut trips = Vec::new();
    for (device, times) in per_device {
        let mut cluster_start = 0usize;
        for i in 1..=times.len() {
            let split = i == times.len()
                || (times[i].seconds() - times[i - 1].seconds()) as u64 >= gap.seconds();
            if split {
                trips.push(
                    DeviceTrip::new(
                        device.clone(),
                        times[cluster_start],
                        times[i - 1],
                        (i - cluster_start) as u64,
                    )
                    .expect("cluster bounds are ordered and non-empty"),
                );
                cluster_start = i;
            }
        }
    }
    Ok(trips)
}
