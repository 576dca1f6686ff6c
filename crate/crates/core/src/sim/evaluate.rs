//! Ground truth and pipeline evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io::IngestError;
use crate::model::{DeviceId, PassengerJourney, StopId, Timestamp};
use crate::{Coord, Scalar};

/// One journey that actually happened, discoverable or not. `device` is
/// `None` for passengers without a discoverable Bluetooth device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrueJourney {
    pub device: Option<DeviceId>,
    pub run_id: String,
    pub route_id: String,
    pub board_stop: StopId,
    pub alight_stop: StopId,
    pub board_at: Timestamp,
    pub alight_at: Timestamp,
}

/// Everything the simulator knows that the pipeline has to rediscover.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroundTruth {
    pub journeys: Vec<TrueJourney>,
    pub bystanders: Vec<DeviceId>,
    pub depot_devices: Vec<DeviceId>,
}

impl GroundTruth {
    /// Journeys made by passengers carrying a discoverable device.
    pub fn discoverable_journeys(&self) -> impl Iterator<Item = &TrueJourney> {
        self.journeys.iter().filter(|j| j.device.is_some())
    }

    /// Realized fraction of passengers carrying a discoverable device.
    pub fn realized_penetration<F: Scalar>(&self) -> Option<F> {
        if self.journeys.is_empty() {
            return None;
        }
        let discoverable = F::from_usize(self.discoverable_journeys().count())?;
        let total = F::from_usize(self.journeys.len())?;
        Some(discoverable / total)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TruthLine {
    Journey {
        device: Option<DeviceId>,
        run_id: String,
        route_id: String,
        board_stop: StopId,
        alight_stop: StopId,
        board_at: Timestamp,
        alight_at: Timestamp,
    },
    Bystander { device: DeviceId },
    Depot { device: DeviceId },
}

pub fn write_ground_truth(truth: &GroundTruth, path: &Path) -> Result<(), IngestError> {
    let lines = truth
        .journeys
        .iter()
        .map(|j| TruthLine::Journey {
            device: j.device.clone(),
            run_id: j.run_id.clone(),
            route_id: j.route_id.clone(),
            board_stop: j.board_stop.clone(),
            alight_stop: j.alight_stop.clone(),
            board_at: j.board_at,
            alight_at: j.alight_at,
        })
        .chain(truth.bystanders.iter().map(|d| TruthLine::Bystander { device: d.clone() }))
        .chain(truth.depot_devices.iter().map(|d| TruthLine::Depot { device: d.clone() }));
    crate::io::write_jsonl_owned(path, lines)
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth, IngestError> {
    let lines: Vec<TruthLine> = crate::io::read_jsonl(path)?;
    let mut truth = GroundTruth::default();
    for line in lines {
        match line {
            TruthLine::Journey {
                device,
                run_id,
                route_id,
                board_stop,
                alight_stop,
                board_at,
                alight_at,
            } => truth.journeys.push(TrueJourney {
                device,
                run_id,
                route_id,
                board_stop,
                alight_stop,
                board_at,
                alight_at,
            }),
            TruthLine::Bystander { device } => truth.bystanders.push(device),
            TruthLine::Depot { device } => truth.depot_devices.push(device),
        }
    }
    Ok(truth)
}

/// How well a recovered journey set matches the ground truth.
///
/// Precision over an empty recovery is reported as 1.0 with
/// `zero_recovered` flagged, so perfect-but-empty never masquerades as
/// perfect-and-useful.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport<F = Coord> {
    pub matched: u64,
    pub recovered_total: u64,
    pub truth_discoverable_total: u64,
    pub precision: F,
    pub recall: F,
    /// Sum over all OD cells of |recovered count - true discoverable count|.
    pub od_l1: u64,
    pub zero_recovered: bool,
    /// |estimate - realized penetration|, when an estimate is supplied.
    pub penetration_error: Option<F>,
}

/// Scores recovered journeys against the truth. A recovered journey
/// matches when (device, run, board stop, alight stop) all agree with a
/// not-yet-claimed true discoverable journey.
pub fn evaluate<F: Scalar>(
    recovered: &[PassengerJourney],
    truth: &GroundTruth,
    penetration_estimate: Option<F>,
) -> EvaluationReport<F> {
    type Key<'a> = (&'a DeviceId, &'a str, &'a StopId, &'a StopId);
    let mut unclaimed: BTreeMap<Key, u64> = BTreeMap::new();
    for journey in truth.discoverable_journeys() {
        let key = (
            journey.device.as_ref().expect("discoverable"),
            journey.run_id.as_str(),
            &journey.board_stop,
            &journey.alight_stop,
        );
        *unclaimed.entry(key).or_insert(0) += 1;
    }

    let mut matched = 0u64;
    for journey in recovered {
        let key = (journey.device(), journey.run_id(), journey.board_stop(), journey.alight_stop());
        if let Some(count) = unclaimed.get_mut(&key) {
            if *count > 0 {
                *count -= 1;
                matched += 1;
            }
        }
    }

    let truth_total = truth.discoverable_journeys().count() as u64;
    let recovered_total = recovered.len() as u64;
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            F::one()
        } else {
            F::from_u64(num).expect("counts fit") / F::from_u64(den).expect("counts fit")
        }
    };

    // OD L1: recovered matrix vs the true discoverable matrix
    let mut cells: BTreeMap<(&StopId, &StopId), i64> = BTreeMap::new();
    for journey in recovered {
        *cells.entry((journey.board_stop(), journey.alight_stop())).or_insert(0) += 1;
    }
    for journey in truth.discoverable_journeys() {
        *cells.entry((&journey.board_stop, &journey.alight_stop)).or_insert(0) -= 1;
    }
    let od_l1 = cells.values().map(|d| d.unsigned_abs()).sum();

    EvaluationReport {
        matched,
        recovered_total,
        truth_discoverable_total: truth_total,
        precision: ratio(matched, recovered_total),
        recall: ratio(matched, truth_total),
        od_l1,
        zero_recovered: recovered_total == 0,
        penetration_error: penetration_estimate.and_then(|estimate| {
            truth.realized_penetration::<F>().map(|realized| (estimate - realized).abs())
        }),
    }
}

impl<F: Scalar + fmt::Display> fmt::Display for EvaluationReport<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "matched={}", self.matched)?;
        writeln!(f, "recovered_total={}", self.recovered_total)?;
        writeln!(f, "truth_discoverable_total={}", self.truth_discoverable_total)?;
        writeln!(f, "precision={:.6}", self.precision)?;
        writeln!(f, "recall={:.6}", self.recall)?;
        writeln!(f, "od_l1={}", self.od_l1)?;
        writeln!(f, "zero_recovered={}", self.zero_recovered)?;
        match &self.penetration_error {
            Some(err) => writeln!(f, "penetration_error={err:.6}"),
            None => writeln!(f, "penetration_error=n/a"),
        }
    }
}
