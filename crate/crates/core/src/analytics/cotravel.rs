//! Detection of passengers who ride together repeatedly.

use std::collections::BTreeMap;

use crate::model::{DeviceId, PassengerJourney};

/// Pairwise encounter counts and the groups they imply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoTravelReport {
    /// Encounters per unordered device pair, keyed with the lexically
    /// smaller device first.
    pub pair_encounters: BTreeMap<(DeviceId, DeviceId), u64>,
    /// Connected components over pairs meeting the encounter threshold;
    /// each group sorted, groups ordered by their first member.
    pub groups: Vec<Vec<DeviceId>>,
}

pub const DEFAULT_MIN_OVERLAP_S: u64 = 120;
pub const DEFAULT_MIN_ENCOUNTERS: u64 = 2;

/// Counts encounters: two journeys on the same run whose onboard intervals
/// overlap for at least `min_overlap_s`. Pairs with at least
/// `min_encounters` encounters form the edges of the group graph.
pub fn detect_cotravel(
    journeys: &[PassengerJourney],
    min_overlap_s: u64,
    min_encounters: u64,
) -> CoTravelReport {
    let mut by_run: BTreeMap<&str, Vec<&PassengerJourney>> = BTreeMap::new();
    for journey in journeys {
        by_run.entry(journey.run_id()).or_default().push(journey);
    }

    let mut pair_encounters: BTreeMap<(DeviceId, DeviceId), u64> = BTreeMap::new();
    for run_journeys in by_run.values() {
        for (i, a) in run_journeys.iter().enumerate() {
            for b in &run_journeys[i + 1..] {
                if a.device() == b.device() {
                    continue;
                }
                let shared = a.alight_at().seconds().min(b.alight_at().seconds())
                    - a.board_at().seconds().max(b.board_at().seconds());
                if shared < 0 || (shared as u64) < min_overlap_s {
                    continue;
                }
                let key = if a.device() < b.device() {
                    (a.device().clone(), b.device().clone())
                } else {
                    (b.device().clone(), a.device().clone())
                };
                *pair_encounters.entry(key).or_insert(0) += 1;
            }
        }
    }

    // connected components over qualifying pairs
    let mut index: BTreeMap<&DeviceId, usize> = BTreeMap::new();
    for ((a, b), count) in &pair_encounters {
        if *count >= min_encounters {
            let next = index.len();
            index.entry(a).or_insert(next);
            let next = index.len();
            index.entry(b).or_insert(next);
        }
    }
    let mut uf = UnionFind::new(index.len());
    for ((a, b), count) in &pair_encounters {
        if *count >= min_encounters {
            uf.union(index[a], index[b]);
        }
    }
    let mut components: BTreeMap<usize, Vec<DeviceId>> = BTreeMap::new();
    for (device, &i) in &index {
        components.entry(uf.find(i)).or_default().push((*device).clone());
    }
    let mut groups: Vec<Vec<DeviceId>> = components.into_values().collect();
    for group in &mut groups {
        group.sort();
    }
    groups.sort();

    CoTravelReport { pair_encounters, groups }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}
