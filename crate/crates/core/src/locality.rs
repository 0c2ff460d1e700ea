//! Locality statistics over a destination reference string.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::trace::AddressId;

fn id_bound(seq: &[AddressId]) -> usize {
    seq.iter().map(|a| a.index() + 1).max().unwrap_or(0)
}

/// Cumulative fraction of frames covered by the most frequent destinations.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationCurve {
    /// `(fraction_of_destinations, cumulative_fraction_of_frames)`; point `k`
    /// covers the `k + 1` most referenced destinations.
    pub points: Vec<(f64, f64)>,
    /// Destinations by descending reference count, ties by ascending id.
    pub ranked: Vec<(AddressId, u64)>,
    pub references: u64,
}

impl ConcentrationCurve {
    pub fn destinations(&self) -> usize {
        self.ranked.len()
    }

    /// Smallest fraction of destinations that covers at least `q` of the
    /// frames. `None` when `q` is outside `[0, 1]`.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        if !(0.0..=1.0).contains(&q) {
            return None;
        }
        if q == 0.0 {
            return Some(0.0);
        }
        let need = q * self.references as f64;
        let mut covered = 0u64;
        for (k, &(_, count)) in self.ranked.iter().enumerate() {
            covered += count;
            if covered as f64 >= need {
                return Some((k + 1) as f64 / self.ranked.len() as f64);
            }
        }
        Some(1.0)
    }
}

pub fn concentration_curve(seq: &[AddressId]) -> Result<ConcentrationCurve> {
    if seq.is_empty() {
        return Err(Error::EmptyInput("destination sequence is empty"));
    }
    let mut counts = vec![0u64; id_bound(seq)];
    for a in seq {
        counts[a.index()] += 1;
    }
    let mut ranked: Vec<(AddressId, u64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (AddressId(i as u32), c))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let d = ranked.len() as f64;
    let n = seq.len() as f64;
    let mut covered = 0u64;
    let points = ranked
        .iter()
        .enumerate()
        .map(|(k, &(_, c))| {
            covered += c;
            ((k + 1) as f64 / d, covered as f64 / n)
        })
        .collect();
    Ok(ConcentrationCurve {
        points,
        ranked,
        references: seq.len() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowMode {
    /// Successive non-overlapping windows; a trailing partial window is dropped.
    #[default]
    Disjoint,
    /// Every window of `W` consecutive references.
    Sliding,
}

impl fmt::Display for WindowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowMode::Disjoint => "disjoint",
            WindowMode::Sliding => "sliding",
        })
    }
}

impl FromStr for WindowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "disjoint" => Ok(WindowMode::Disjoint),
            "sliding" => Ok(WindowMode::Sliding),
            _ => Err(Error::param(format!("unknown window mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkingSetReport {
    pub window: usize,
    pub mode: WindowMode,
    pub average_wss: f64,
    pub window_count: usize,
}

/// Average number of distinct destinations per window of `window` references.
pub fn working_set(seq: &[AddressId], window: usize, mode: WindowMode) -> Result<WorkingSetReport> {
    if window == 0 {
        return Err(Error::param("working-set window must be at least 1"));
    }
    if window > seq.len() {
        return Err(Error::InsufficientData {
            window,
            len: seq.len(),
        });
    }
    let mut counts = vec![0u32; id_bound(seq)];
    let (total, window_count) = match mode {
        WindowMode::Disjoint => {
            let mut total = 0u64;
            let chunks = seq.chunks_exact(window);
            let window_count = chunks.len();
            for chunk in chunks {
                let mut distinct = 0u64;
                for a in chunk {
                    let c = &mut counts[a.index()];
                    if *c == 0 {
                        distinct += 1;
                    }
                    *c += 1;
                }
                total += distinct;
                for a in chunk {
                    counts[a.index()] = 0;
                }
            }
            (total, window_count)
        }
        WindowMode::Sliding => {
            let mut distinct = 0u64;
            for a in &seq[..window] {
                let c = &mut counts[a.index()];
                if *c == 0 {
                    distinct += 1;
                }
                *c += 1;
            }
            let mut total = distinct;
            for (out, inc) in seq.iter().zip(&seq[window..]) {
                let c = &mut counts[out.index()];
                *c -= 1;
                if *c == 0 {
                    distinct -= 1;
                }
                let c = &mut counts[inc.index()];
                if *c == 0 {
                    distinct += 1;
                }
                *c += 1;
                total += distinct;
            }
            (total, seq.len() - window + 1)
        }
    };
    Ok(WorkingSetReport {
        window,
        mode,
        average_wss: total as f64 / window_count as f64,
        window_count,
    })
}

/// LRU stack distances: finite depths plus first-reference (infinite) mass.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StackDistanceHistogram {
    /// `finite[d - 1]` counts references at depth `d`.
    finite: Vec<u64>,
    pub infinite_count: u64,
    pub total: u64,
}

impl StackDistanceHistogram {
    pub fn from_distances(distances: &[Option<usize>]) -> Self {
        let mut h = Self::default();
        for d in distances {
            h.record(*d);
        }
        h
    }

    fn record(&mut self, distance: Option<usize>) {
        self.total += 1;
        match distance {
            None => self.infinite_count += 1,
            Some(d) => {
                debug_assert!(d >= 1);
                if self.finite.len() < d {
                    self.finite.resize(d, 0);
                }
                self.finite[d - 1] += 1;
            }
        }
    }

    /// Number of references at depth `d` (0 for `d == 0`).
    pub fn count(&self, d: usize) -> u64 {
        d.checked_sub(1).and_then(|i| self.finite.get(i)).copied().unwrap_or(0)
    }

    /// Largest depth with a nonzero count, 0 if there is none.
    pub fn max_distance(&self) -> usize {
        self.finite.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1)
    }

    /// `(depth, count)` for every depth from 1 to [`Self::max_distance`].
    pub fn finite_counts(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.finite[..self.max_distance()]
            .iter()
            .enumerate()
            .map(|(i, &c)| (i + 1, c))
    }

    pub fn finite_total(&self) -> u64 {
        self.finite.iter().sum()
    }

    pub fn pdf(&self, d: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.count(d) as f64 / self.total as f64
    }

    /// Fraction of all references (first references included in the
    /// denominator) with depth at most `d`.
    pub fn cdf(&self, d: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let upto = d.min(self.finite.len());
        self.finite[..upto].iter().sum::<u64>() as f64 / self.total as f64
    }

    /// Misses of a fully associative LRU cache of `capacity` entries.
    pub fn lru_misses(&self, capacity: usize) -> u64 {
        let deeper: u64 = self.finite.iter().skip(capacity).sum();
        self.infinite_count + deeper
    }
}

/// Fenwick tree over stack slots (last-use positions).
struct Fenwick {
    tree: Vec<i64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self { tree: vec![0; n + 1] }
    }

    fn add(&mut self, slot: usize, delta: i64) {
        let mut i = slot + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over slots `0..end`.
    fn prefix(&self, end: usize) -> i64 {
        let mut i = end;
        let mut sum = 0;
        while i > 0 {
            sum += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        sum
    }

    fn clear(&mut self) {
        self.tree.iter_mut().for_each(|v| *v = 0);
    }
}

/// One-pass LRU stack distances. `None` marks a first reference.
///
/// Each resident address occupies a slot ordered by last use; the depth of
/// a re-reference is the number of occupied slots at or after its own.
/// Slots are renumbered once they run out, so the tree holds at most twice
/// the number of distinct destinations and each reference costs
/// `O(log D)` amortized.
pub fn stack_distances(seq: &[AddressId]) -> (Vec<Option<usize>>, StackDistanceHistogram) {
    let bound = id_bound(seq);
    let mut last_slot: Vec<Option<usize>> = vec![None; bound];
    let distinct = {
        let mut seen = vec![false; bound];
        seq.iter().filter(|a| !std::mem::replace(&mut seen[a.index()], true)).count()
    };
    let slots = (2 * distinct).max(2);
    let mut tree = Fenwick::new(slots);
    let mut next_slot = 0usize;
    let mut live = 0i64;

    let mut distances = Vec::with_capacity(seq.len());
    let mut hist = StackDistanceHistogram::default();
    for a in seq {
        let a = a.index();
        let d = match last_slot[a].take() {
            Some(slot) => {
                let depth = live - tree.prefix(slot);
                tree.add(slot, -1);
                live -= 1;
                Some(depth as usize)
            }
            None => None,
        };
        if next_slot == slots {
            next_slot = compact(&mut last_slot, &mut tree);
        }
        tree.add(next_slot, 1);
        live += 1;
        last_slot[a] = Some(next_slot);
        next_slot += 1;

        distances.push(d);
        hist.record(d);
    }
    (distances, hist)
}

/// Renumbers occupied slots to `0..live` keeping their order; returns the
/// first free slot.
fn compact(last_slot: &mut [Option<usize>], tree: &mut Fenwick) -> usize {
    let mut occupied: Vec<(usize, usize)> = last_slot
        .iter()
        .enumerate()
        .filter_map(|(addr, s)| s.map(|s| (s, addr)))
        .collect();
    occupied.sort_unstable();
    tree.clear();
    for (new_slot, &(_, addr)) in occupied.iter().enumerate() {
        last_slot[addr] = Some(new_slot);
        tree.add(new_slot, 1);
    }
    occupied.len()
}

/// Reference implementation with an explicit move-to-top stack, `O(N * D)`.
pub fn stack_distances_naive(seq: &[AddressId]) -> (Vec<Option<usize>>, StackDistanceHistogram) {
    let mut stack: Vec<AddressId> = Vec::new();
    let distances: Vec<Option<usize>> = seq
        .iter()
        .map(|&a| {
            let pos = stack.iter().position(|&s| s == a);
            if let Some(p) = pos {
                stack.remove(p);
            }
            stack.insert(0, a);
            pos.map(|p| p + 1)
        })
        .collect();
    let hist = StackDistanceHistogram::from_distances(&distances);
    (distances, hist)
}

/// Maximal runs of identical consecutive destinations, by length.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunLengthHistogram {
    pub counts: BTreeMap<usize, u64>,
    pub total_runs: u64,
}

impl RunLengthHistogram {
    pub fn frequency(&self, len: usize) -> f64 {
        if self.total_runs == 0 {
            return 0.0;
        }
        self.counts.get(&len).copied().unwrap_or(0) as f64 / self.total_runs as f64
    }

    pub fn longest(&self) -> usize {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }
}

pub fn run_lengths(seq: &[AddressId]) -> RunLengthHistogram {
    let mut hist = RunLengthHistogram::default();
    for run in seq.chunk_by(|a, b| a == b) {
        *hist.counts.entry(run.len()).or_insert(0) += 1;
        hist.total_runs += 1;
    }
    hist
}
