//! Correlation of device-trip counts with ticket validations.
//!
//! The ticketing system stamps every boarding passenger; the scanner only
//! sees the discoverable ones. Regressing tickets on device trips through
//! the origin gives the tickets-per-device-trip factor, whose reciprocal
//! estimates the fraction of passengers carrying a discoverable device.
//! The intercept-free form is deliberate: zero passengers validate zero
//! tickets.

use super::AnalyticsError;
use crate::model::{DeviceTrip, TicketValidation, Timestamp};
use crate::stats::{pearson_r, slope_through_origin};
use crate::stops::RunWindow;
use crate::{Coord, Scalar};

/// Aligned per-hour counts over the service hours of the dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HourlySeries {
    /// Start of each hour bin, ascending.
    pub hours: Vec<Timestamp>,
    pub device_trips: Vec<u64>,
    pub tickets: Vec<u64>,
}

/// Bins device trips (by first sighting) and tickets (by validation time)
/// into the absolute hours intersecting at least one run's service window.
/// Events outside service hours — depot noise — fall out here.
pub fn hourly_series(
    trips: &[DeviceTrip],
    tickets: &[TicketValidation],
    runs: &[RunWindow],
) -> HourlySeries {
    let mut hour_set = std::collections::BTreeSet::new();
    for run in runs {
        let mut h = run.service_start().seconds() / 3_600;
        let last = run.service_end().seconds() / 3_600;
        while h <= last {
            hour_set.insert(h);
            h += 1;
        }
    }
    let hours: Vec<i64> = hour_set.into_iter().collect();
    let index: std::collections::BTreeMap<i64, usize> =
        hours.iter().enumerate().map(|(i, &h)| (h, i)).collect();

    let mut device_trips = vec![0u64; hours.len()];
    for trip in trips {
        if let Some(&i) = index.get(&(trip.first_seen().seconds() / 3_600)) {
            device_trips[i] += 1;
        }
    }
    let mut ticket_counts = vec![0u64; hours.len()];
    for ticket in tickets {
        if let Some(&i) = index.get(&(ticket.at().seconds() / 3_600)) {
            ticket_counts[i] += 1;
        }
    }
    HourlySeries {
        hours: hours
            .into_iter()
            .map(|h| Timestamp::from_seconds(h * 3_600).expect("hours in range"))
            .collect(),
        device_trips,
        tickets: ticket_counts,
    }
}

/// Squared correlation, tickets-per-trip factor and the implied
/// device penetration.
#[derive(Debug, Clone, PartialEq)]
pub struct TicketCorrelationReport<F = Coord> {
    pub hourly_pairs: Vec<(u64, u64)>,
    pub r_squared: F,
    /// Least-squares slope of tickets = beta * device_trips.
    pub scale_factor: F,
    /// 1 / scale_factor: estimated fraction of passengers that are
    /// discoverable.
    pub penetration: F,
}

pub fn ticket_correlation<F: Scalar>(
    device_trips_hourly: &[u64],
    tickets_hourly: &[u64],
) -> Result<TicketCorrelationReport<F>, AnalyticsError> {
    if device_trips_hourly.len() != tickets_hourly.len() {
        return Err(AnalyticsError::MismatchedSeries {
            left: device_trips_hourly.len(),
            right: tickets_hourly.len(),
        });
    }
    let nonzero = device_trips_hourly.iter().filter(|&&d| d > 0).count();
    if nonzero < 2 {
        return Err(AnalyticsError::DegenerateSeries(format!(
            "need at least 2 hours with device trips, have {nonzero}"
        )));
    }
    let xs: Vec<F> = device_trips_hourly
        .iter()
        .map(|&d| F::from_u64(d).expect("counts fit"))
        .collect();
    let ys: Vec<F> = tickets_hourly
        .iter()
        .map(|&t| F::from_u64(t).expect("counts fit"))
        .collect();

    let r = pearson_r(&xs, &ys).ok_or_else(|| {
        AnalyticsError::DegenerateSeries("constant device-trip or ticket series".into())
    })?;
    let beta = slope_through_origin(&xs, &ys)
        .filter(|b| *b > F::zero())
        .ok_or_else(|| {
            AnalyticsError::DegenerateSeries("non-positive tickets-per-trip slope".into())
        })?;

    Ok(TicketCorrelationReport {
        hourly_pairs: device_trips_hourly
            .iter()
            .copied()
            .zip(tickets_hourly.iter().copied())
            .collect(),
        r_squared: r * r,
        scale_factor: beta,
        penetration: F::one() / beta,
    })
}
