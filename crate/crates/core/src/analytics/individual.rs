//! Per-device OD history and destination prediction.

use std::collections::BTreeMap;

use super::AnalyticsError;
use crate::model::{DayKind, DeviceId, PassengerJourney, StopId};
use crate::Scalar;

/// One device's journey counts keyed by origin, destination, day kind and
/// boarding hour band.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndividualOd {
    device: DeviceId,
    band_width_h: u8,
    cells: BTreeMap<(StopId, StopId, DayKind, u8), u64>,
}

impl IndividualOd {
    pub const DEFAULT_BAND_WIDTH_H: u8 = 4;

    pub fn device(&self) -> &DeviceId {
        &self.device
    }

    pub fn band_width_h(&self) -> u8 {
        self.band_width_h
    }

    pub fn cells(&self) -> &BTreeMap<(StopId, StopId, DayKind, u8), u64> {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    fn band_of(&self, hour: u8) -> u8 {
        (hour % 24) / self.band_width_h
    }
}

/// Builds the device's history from a journey list. Journeys of other
/// devices are ignored, so the full dataset can be passed as-is.
pub fn individual_od(
    journeys: &[PassengerJourney],
    device: &DeviceId,
    band_width_h: u8,
) -> Result<IndividualOd, AnalyticsError> {
    if band_width_h == 0 || 24 % band_width_h != 0 {
        return Err(AnalyticsError::InvalidBandWidth(band_width_h));
    }
    let mut cells = BTreeMap::new();
    for journey in journeys.iter().filter(|j| j.device() == device) {
        let at = journey.board_at();
        let key = (
            journey.board_stop().clone(),
            journey.alight_stop().clone(),
            at.day_kind(),
            at.hour_of_day() / band_width_h,
        );
        *cells.entry(key).or_insert(0) += 1;
    }
    Ok(IndividualOd { device: device.clone(), band_width_h, cells })
}

/// Most likely destination for a passenger standing at `origin` on a day
/// of `day_kind` in the band containing `hour`, with its empirical
/// confidence. Ties go to the lexically smallest destination; `None` when
/// the history has nothing matching.
pub fn predict_destination<F: Scalar>(
    history: &IndividualOd,
    origin: &StopId,
    day_kind: DayKind,
    hour: u8,
) -> Option<(StopId, F)> {
    let band = history.band_of(hour);
    let mut total = 0u64;
    let mut best: Option<(&StopId, u64)> = None;
    for ((o, d, k, b), &count) in history.cells() {
        if o != origin || *k != day_kind || *b != band {
            continue;
        }
        total += count;
        // cells iterate in destination order, so strict greater-than keeps
        // the lexically smallest destination on ties
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((d, count));
        }
    }
    best.map(|(d, count)| {
        let confidence = F::from_u64(count).expect("counts fit")
            / F::from_u64(total).expect("counts fit");
        (d.clone(), confidence)
    })
}
