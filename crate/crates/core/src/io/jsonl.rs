//! JSON Lines streams: journeys and rejected trips, one object per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{format_err, io_err, IngestError};
use crate::correlate::{RejectReason, RejectedTrip};
use crate::model::{DeviceId, DeviceTrip, PassengerJourney, Timestamp};

pub fn write_journeys(journeys: &[PassengerJourney], path: &Path) -> Result<(), IngestError> {
    write_lines(path, journeys.iter())
}

pub fn read_journeys(path: &Path) -> Result<Vec<PassengerJourney>, IngestError> {
    read_lines(path)
}

/// Flat wire form of a rejected trip, so audits need no nested parsing.
#[derive(Serialize, Deserialize)]
struct RejectWire {
    device: DeviceId,
    first_seen: Timestamp,
    last_seen: Timestamp,
    sighting_count: u64,
    reason: RejectReason,
}

pub fn write_rejects(rejects: &[RejectedTrip], path: &Path) -> Result<(), IngestError> {
    let wires = rejects.iter().map(|r| RejectWire {
        device: r.trip.device().clone(),
        first_seen: r.trip.first_seen(),
        last_seen: r.trip.last_seen(),
        sighting_count: r.trip.sighting_count(),
        reason: r.reason,
    });
    write_lines_owned(path, wires)
}

pub fn read_rejects(path: &Path) -> Result<Vec<RejectedTrip>, IngestError> {
    let wires: Vec<RejectWire> = read_lines(path)?;
    wires
        .into_iter()
        .map(|w| {
            let trip = DeviceTrip::new(w.device, w.first_seen, w.last_seen, w.sighting_count)
                .map_err(|e| format_err(path, 0, e.to_string()))?;
            Ok(RejectedTrip { trip, reason: w.reason })
        })
        .collect()
}

pub(crate) fn write_lines<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl Iterator<Item = &'a T>,
) -> Result<(), IngestError> {
    let mut file = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    for item in items {
        let line = serde_json::to_string(item)
            .map_err(|e| format_err(path, 0, e.to_string()))?;
        writeln!(file, "{line}").map_err(|e| io_err(path, e))?;
    }
    file.flush().map_err(|e| io_err(path, e))
}

pub(crate) fn write_lines_owned<T: Serialize>(
    path: &Path,
    items: impl Iterator<Item = T>,
) -> Result<(), IngestError> {
    let mut file = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    for item in items {
        let line = serde_json::to_string(&item)
            .map_err(|e| format_err(path, 0, e.to_string()))?;
        writeln!(file, "{line}").map_err(|e| io_err(path, e))?;
    }
    file.flush().map_err(|e| io_err(path, e))
}

pub(crate) fn read_lines<T: for<'de> Deserialize<'de>>(
    path: &Path,
) -> Result<Vec<T>, IngestError> {
    let file = BufReader::new(File::open(path).map_err(|e| io_err(path, e))?);
    let mut out = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| format_err(path, i as u64 + 1, e.to_string()))?;
        out.push(item);
    }
    Ok(out)
}
