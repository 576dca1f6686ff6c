//! Onboard occupancy by hour of day, and trip-duration histograms.

use super::AnalyticsError;
use crate::model::{PassengerJourney, Timestamp};
use crate::Scalar;

/// Time-weighted onboard counts, accumulated exactly in integer seconds.
///
/// `hour_seconds[h]` is the total passenger-seconds spent onboard during
/// hour-of-day `h` across the whole dataset; dividing by `3600 *
/// service_days` gives the mean simultaneous onboard count for that hour.
/// Keeping the integer form makes the conservation identity (total
/// passenger-seconds equals the sum of journey durations) checkable without
/// any floating-point slack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyCurve {
    hour_seconds: [u64; 24],
    service_days: u32,
}

impl OccupancyCurve {
    pub fn hour_seconds(&self) -> &[u64; 24] {
        &self.hour_seconds
    }

    pub fn service_days(&self) -> u32 {
        self.service_days
    }

    /// Mean simultaneous onboard count during hour `h`.
    pub fn mean_onboard<F: Scalar>(&self, hour: usize) -> F {
        let seconds = F::from_u64(self.hour_seconds[hour]).expect("counts fit");
        let denom = F::from_u64(3_600 * self.service_days as u64).expect("fits");
        seconds / denom
    }

    pub fn values<F: Scalar>(&self) -> [F; 24] {
        std::array::from_fn(|h| self.mean_onboard(h))
    }
}

/// Integrates each journey's onboard interval over hour-of-day bins.
pub fn occupancy_by_hour(
    journeys: &[PassengerJourney],
    service_days: u32,
) -> Result<OccupancyCurve, AnalyticsError> {
    occupancy_from_intervals(
        journeys.iter().map(|j| (j.board_at(), j.alight_at())),
        service_days,
    )
}

/// Same integration over raw onboard intervals; lets ground-truth journey
/// sets be charted with the identical arithmetic.
pub fn occupancy_from_intervals(
    intervals: impl IntoIterator<Item = (Timestamp, Timestamp)>,
    service_days: u32,
) -> Result<OccupancyCurve, AnalyticsError> {
    if service_days == 0 {
        return Err(AnalyticsError::InvalidServiceDays);
    }
    let mut hour_seconds = [0u64; 24];
    for (board, alight) in intervals {
        let mut t = board.seconds();
        let end = alight.seconds();
        while t < end {
            let next_boundary = (t / 3_600 + 1) * 3_600;
            let segment_end = end.min(next_boundary);
            let hour = ((t % 86_400) / 3_600) as usize;
            hour_seconds[hour] += (segment_end - t) as u64;
            t = segment_end;
        }
    }
    Ok(OccupancyCurve { hour_seconds, service_days })
}

/// Histogram of journey durations with fixed-width buckets; bucket `i`
/// holds durations in `[i*width, (i+1)*width)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DurationHistogram {
    bucket_width_s: u64,
    counts: Vec<u64>,
}

impl DurationHistogram {
    pub const DEFAULT_BUCKET_WIDTH_S: u64 = 300;

    pub fn bucket_width_s(&self) -> u64 {
        self.bucket_width_s
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn trip_duration_histogram(
    journeys: &[PassengerJourney],
    bucket_width_s: u64,
) -> Result<DurationHistogram, AnalyticsError> {
    if bucket_width_s == 0 {
        return Err(AnalyticsError::InvalidBucketWidth);
    }
    let mut counts: Vec<u64> = Vec::new();
    for journey in journeys {
        let bucket = (journey.duration_s() / bucket_width_s) as usize;
        if bucket >= counts.len() {
            counts.resize(bucket + 1, 0);
        }
        counts[bucket] += 1;
    }
    Ok(DurationHistogram { bucket_width_s, counts })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::{dev, journey};
    use super::*;

    #[test]
    fn single_journey_fraction_of_an_hour() {
        // 10:05 to 10:25 on one day: 1200 passenger-seconds in hour 10
        let journeys = [journey(&dev(1), "r1", "S1", "S2", 36_300, 37_500)];
        let curve = occupancy_by_hour(&journeys, 1).unwrap();
        assert_eq!(curve.hour_seconds()[10], 1_200);
        let v: f64 = curve.mean_onboard(10);
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        for h in (0..24).filter(|&h| h != 10) {
            assert_eq!(curve.hour_seconds()[h], 0);
        }
    }

    #[test]
    fn simultaneous_journeys_add_up() {
        let journeys = [
            journey(&dev(1), "r1", "S1", "S2", 36_000, 39_600),
            journey(&dev(2), "r1", "S1", "S2", 36_000, 39_600),
        ];
        let curve = occupancy_by_hour(&journeys, 1).unwrap();
        assert_eq!(curve.mean_onboard::<f64>(10), 2.0);
        let halved = occupancy_by_hour(&journeys, 2).unwrap();
        assert_eq!(halved.mean_onboard::<f64>(10), 1.0);
    }

    #[test]
    fn journeys_split_across_hour_boundaries() {
        // 10:50 to 11:10: 600 s in hour 10, 600 s in hour 11
        let journeys = [journey(&dev(1), "r1", "S1", "S2", 39_000, 40_200)];
        let curve = occupancy_by_hour(&journeys, 1).unwrap();
        assert_eq!(curve.hour_seconds()[10], 600);
        assert_eq!(curve.hour_seconds()[11], 600);
    }

    #[test]
    fn occupancy_conserves_total_passenger_seconds() {
        let journeys = [
            journey(&dev(1), "r1", "S1", "S2", 100, 5_000),
            journey(&dev(2), "r1", "S1", "S3", 82_000, 90_100),
            journey(&dev(3), "r2", "S2", "S3", 36_599, 36_601),
        ];
        let curve = occupancy_by_hour(&journeys, 3).unwrap();
        let total: u64 = curve.hour_seconds().iter().sum();
        let expect: u64 = journeys.iter().map(PassengerJourney::duration_s).sum();
        assert_eq!(total, expect);
    }

    #[test]
    fn zero_service_days_is_an_error() {
        assert_eq!(occupancy_by_hour(&[], 0), Err(AnalyticsError::InvalidServiceDays));
    }

    #[test]
    fn durations_bucket_by_floor() {
        let journeys = [
            journey(&dev(1), "r1", "S1", "S2", 0, 120),
            journey(&dev(2), "r1", "S1", "S2", 0, 480),
        ];
        let hist = trip_duration_histogram(&journeys, 300).unwrap();
        assert_eq!(hist.counts(), &[1, 1]);
        assert_eq!(hist.total(), 2);
    }

    #[test]
    fn duration_on_bucket_boundary_goes_up() {
        let journeys = [journey(&dev(1), "r1", "S1", "S2", 0, 300)];
        let hist = trip_duration_histogram(&journeys, 300).unwrap();
        assert_eq!(hist.counts(), &[0, 1]);
    }

    #[test]
    fn empty_input_is_an_empty_histogram() {
        let hist = trip_duration_histogram(&[], 300).unwrap();
        assert!(hist.counts().is_empty());
        assert_eq!(hist.total(), 0);
    }

    #[test]
    fn zero_bucket_width_is_an_error() {
        assert_eq!(
            trip_duration_histogram(&[], 0),
            Err(AnalyticsError::InvalidBucketWidth)
        );
    }
}
