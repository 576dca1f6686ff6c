use std::collections::BTreeMap;

use super::{ModelError, StopId};

/// Origin/destination matrix: journey counts keyed by (origin, destination).
///
/// Only non-zero cells are stored and the diagonal is forbidden. The
/// `filter_descriptor` records, human-readably, which time/day/route filter
/// produced the matrix; it travels with the data so a written matrix is
/// self-describing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OdMatrix {
    cells: BTreeMap<(StopId, StopId), u64>,
    filter_descriptor: String,
    total_journeys: u64,
}

impl OdMatrix {
    /// Builds a matrix from cells; the total is the sum of the counts.
    pub fn new(
        cells: BTreeMap<(StopId, StopId), u64>,
        filter_descriptor: String,
    ) -> Result<Self, ModelError> {
        Self::check_cells(&cells)?;
        if filter_descriptor.contains('\n') {
            return Err(ModelError::InvalidMatrix(
                "filter descriptor must be a single line".into(),
            ));
        }
        let total_journeys = cells.values().sum();
        Ok(OdMatrix { cells, filter_descriptor, total_journeys })
    }

    /// Rebuilds a matrix from parts read back from disk, re-checking that
    /// the recorded total matches the cells.
    pub fn from_parts(
        cells: BTreeMap<(StopId, StopId), u64>,
        filter_descriptor: String,
        total_journeys: u64,
    ) -> Result<Self, ModelError> {
        let matrix = Self::new(cells, filter_descriptor)?;
        if matrix.total_journeys != total_journeys {
            return Err(ModelError::InvalidMatrix(format!(
                "recorded total {} does not match cell sum {}",
                total_journeys, matrix.total_journeys
            )));
        }
        Ok(matrix)
    }

    fn check_cells(cells: &BTreeMap<(StopId, StopId), u64>) -> Result<(), ModelError> {
        for ((origin, destination), count) in cells {
            if origin == destination {
                return Err(ModelError::InvalidMatrix(format!(
                    "diagonal cell {origin} -> {destination}"
                )));
            }
            if *count == 0 {
                return Err(ModelError::InvalidMatrix(format!(
                    "zero-count cell {origin} -> {destination}"
                )));
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> &BTreeMap<(StopId, StopId), u64> {
        &self.cells
    }

    pub fn count(&self, origin: &StopId, destination: &StopId) -> u64 {
        self.cells
            .get(&(origin.clone(), destination.clone()))
            .copied()
            .unwrap_or(0)
    }

    pub fn filter_descriptor(&self) -> &str {
        &self.filter_descriptor
    }

    pub fn total_journeys(&self) -> u64 {
        self.total_journeys
    }
}
