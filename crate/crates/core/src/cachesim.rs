//! Fully associative cache simulation under MIN, LRU, FIFO and RAND.
//!
//! The cache starts empty, every miss inserts the referenced address, and
//! cold misses are counted. RAND draws victims from a ChaCha8 stream seeded
//! from `(seed, capacity)` via [`rand_seed`], so a single simulation and the
//! matching point of a sweep agree. Victim indices come from
//! `Rng::gen_range`, which uses rejection sampling and carries no modulo bias.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::locality::StackDistanceHistogram;
use crate::trace::AddressId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Lru,
    Fifo,
    Rand { seed: u64 },
    /// Belady's offline optimum: evict the resident referenced farthest in
    /// the future.
    Min,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Lru => "LRU",
            Policy::Fifo => "FIFO",
            Policy::Rand { .. } => "RAND",
            Policy::Min => "MIN",
        }
    }

    /// Parses a policy name; `seed` is used for RAND.
    pub fn parse_with_seed(name: &str, seed: u64) -> Result<Self> {
        match name.trim().to_ascii_uppercase().as_str() {
            "LRU" => Ok(Policy::Lru),
            "FIFO" => Ok(Policy::Fifo),
            "RAND" | "RANDOM" => Ok(Policy::Rand { seed }),
            "MIN" | "OPT" => Ok(Policy::Min),
            _ => Err(Error::param(format!("unknown policy {name:?}"))),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    /// RAND parsed this way gets seed 0.
    fn from_str(s: &str) -> Result<Self> {
        Policy::parse_with_seed(s, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheStats {
    pub capacity: usize,
    pub references: u64,
    pub misses: u64,
}

impl CacheStats {
    pub fn hits(&self) -> u64 {
        self.references - self.misses
    }

    pub fn miss_ratio(&self) -> f64 {
        if self.references == 0 {
            return 0.0;
        }
        self.misses as f64 / self.references as f64
    }

    /// References per miss; infinite when nothing missed.
    pub fn interfault_distance(&self) -> f64 {
        if self.misses == 0 {
            return f64::INFINITY;
        }
        self.references as f64 / self.misses as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissCurve {
    pub policy: Policy,
    pub entries: Vec<CacheStats>,
}

impl MissCurve {
    pub fn get(&self, capacity: usize) -> Option<&CacheStats> {
        self.entries.iter().find(|s| s.capacity == capacity)
    }
}

/// Seed of the RAND victim stream for one capacity.
pub fn rand_seed(seed: u64, capacity: usize) -> u64 {
    seed ^ (capacity as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17)
}

/// Replacement bookkeeping for residents of a fixed-size cache.
trait Replacer {
    fn on_hit(&mut self, addr: usize, t: usize);
    fn on_insert(&mut self, addr: usize, t: usize);
    /// Chooses and forgets a victim.
    fn evict(&mut self) -> usize;
}

struct LruReplacer {
    last_use: Vec<usize>,
    order: BTreeSet<(usize, usize)>,
}

impl Replacer for LruReplacer {
    fn on_hit(&mut self, addr: usize, t: usize) {
        self.order.remove(&(self.last_use[addr], addr));
        self.on_insert(addr, t);
    }

    fn on_insert(&mut self, addr: usize, t: usize) {
        self.last_use[addr] = t;
        self.order.insert((t, addr));
    }

    fn evict(&mut self) -> usize {
        self.order.pop_first().expect("evict from empty cache").1
    }
}

#[derive(Default)]
struct FifoReplacer {
    queue: VecDeque<usize>,
}

impl Replacer for FifoReplacer {
    fn on_hit(&mut self, _addr: usize, _t: usize) {}

    fn on_insert(&mut self, addr: usize, _t: usize) {
        self.queue.push_back(addr);
    }

    fn evict(&mut self) -> usize {
        self.queue.pop_front().expect("evict from empty cache")
    }
}

struct RandReplacer {
    residents: Vec<usize>,
    slot: Vec<usize>,
    rng: ChaCha8Rng,
}

impl Replacer for RandReplacer {
    fn on_hit(&mut self, _addr: usize, _t: usize) {}

    fn on_insert(&mut self, addr: usize, _t: usize) {
        self.slot[addr] = self.residents.len();
        self.residents.push(addr);
    }

    fn evict(&mut self) -> usize {
        let i = self.rng.gen_range(0..self.residents.len());
        let victim = self.residents.swap_remove(i);
        if let Some(&moved) = self.residents.get(i) {
            self.slot[moved] = i;
        }
        victim
    }
}

const NEVER: usize = usize::MAX;

/// Residents keyed by next use. Among residents never used again the one
/// with the oldest last reference goes first, then the lowest id.
struct MinReplacer {
    next_use: Vec<usize>,
    key: Vec<(usize, std::cmp::Reverse<usize>, std::cmp::Reverse<usize>)>,
    order: BTreeSet<(usize, std::cmp::Reverse<usize>, std::cmp::Reverse<usize>)>,
}

impl MinReplacer {
    fn new(seq: &[AddressId], bound: usize) -> Self {
        let mut next_use = vec![NEVER; seq.len()];
        let mut upcoming = vec![NEVER; bound];
        for (t, a) in seq.iter().enumerate().rev() {
            next_use[t] = upcoming[a.index()];
            upcoming[a.index()] = t;
        }
        let zero = (0, std::cmp::Reverse(0), std::cmp::Reverse(0));
        Self {
            next_use,
            key: vec![zero; bound],
            order: BTreeSet::new(),
        }
    }
}

impl Replacer for MinReplacer {
    fn on_hit(&mut self, addr: usize, t: usize) {
        self.order.remove(&self.key[addr]);
        self.on_insert(addr, t);
    }

    fn on_insert(&mut self, addr: usize, t: usize) {
        use std::cmp::Reverse;
        let key = (self.next_use[t], Reverse(t), Reverse(addr));
        self.key[addr] = key;
        self.order.insert(key);
    }

    fn evict(&mut self) -> usize {
        self.order.pop_last().expect("evict from empty cache").2 .0
    }
}

fn run<R, F>(seq: &[AddressId], capacity: usize, bound: usize, mut replacer: R, mut on_ref: F) -> CacheStats
where
    R: Replacer,
    F: FnMut(bool),
{
    let mut resident = vec![false; bound];
    let mut occupancy = 0usize;
    let mut misses = 0u64;
    for (t, a) in seq.iter().enumerate() {
        let a = a.index();
        if resident[a] {
            replacer.on_hit(a, t);
            on_ref(false);
            continue;
        }
        misses += 1;
        on_ref(true);
        if occupancy == capacity {
            let victim = replacer.evict();
            resident[victim] = false;
        } else {
            occupancy += 1;
        }
        resident[a] = true;
        replacer.on_insert(a, t);
    }
    CacheStats {
        capacity,
        references: seq.len() as u64,
        misses,
    }
}

/// Simulates one policy at one capacity.
pub fn simulate(seq: &[AddressId], policy: Policy, capacity: usize) -> Result<CacheStats> {
    simulate_with(seq, policy, capacity, |_| {})
}

/// Per-reference outcome of a simulation: `true` where the reference missed.
pub fn miss_sequence(seq: &[AddressId], policy: Policy, capacity: usize) -> Result<Vec<bool>> {
    let mut out = Vec::with_capacity(seq.len());
    simulate_with(seq, policy, capacity, |miss| out.push(miss))?;
    Ok(out)
}

fn simulate_with<F: FnMut(bool)>(seq: &[AddressId], policy: Policy, capacity: usize, on_ref: F) -> Result<CacheStats> {
    if capacity == 0 {
        return Err(Error::param("cache capacity must be at least 1"));
    }
    let bound = seq.iter().map(|a| a.index() + 1).max().unwrap_or(0);
    let stats = match policy {
        Policy::Lru => run(
            seq,
            capacity,
            bound,
            LruReplacer {
                last_use: vec![0; bound],
                order: BTreeSet::new(),
            },
            on_ref,
        ),
        Policy::Fifo => run(seq, capacity, bound, FifoReplacer::default(), on_ref),
        Policy::Rand { seed } => run(
            seq,
            capacity,
            bound,
            RandReplacer {
                residents: Vec::with_capacity(capacity.min(bound)),
                slot: vec![0; bound],
                rng: ChaCha8Rng::seed_from_u64(rand_seed(seed, capacity)),
            },
            on_ref,
        ),
        Policy::Min => run(seq, capacity, bound, MinReplacer::new(seq, bound), on_ref),
    };
    Ok(stats)
}

fn check_capacities(capacities: &[usize]) -> Result<()> {
    if capacities.is_empty() {
        return Err(Error::param("capacity list is empty"));
    }
    if capacities.contains(&0) {
        return Err(Error::param("cache capacity must be at least 1"));
    }
    Ok(())
}

/// Simulates `policy` at every capacity, in parallel; entries keep the
/// order of `capacities`.
pub fn sweep(seq: &[AddressId], policy: Policy, capacities: &[usize]) -> Result<MissCurve> {
    check_capacities(capacities)?;
    let entries = capacities
        .par_iter()
        .map(|&c| simulate(seq, policy, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(MissCurve { policy, entries })
}

/// LRU miss curve from a stack-distance histogram: a reference misses at
/// capacity `c` iff its depth exceeds `c` or it is a first reference.
pub fn lru_curve_from_distances(hist: &StackDistanceHistogram, capacities: &[usize]) -> Result<MissCurve> {
    check_capacities(capacities)?;
    let entries = capacities
        .iter()
        .map(|&capacity| CacheStats {
            capacity,
            references: hist.total,
            misses: hist.lru_misses(capacity),
        })
        .collect();
    Ok(MissCurve {
        policy: Policy::Lru,
        entries,
    })
}

/// Size limits for [`brute_force_optimal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_len: usize,
    pub max_distinct: usize,
    pub max_capacity: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            max_len: 12,
            max_distinct: 4,
            max_capacity: 3,
        }
    }
}

/// Minimum achievable fault count under demand fetching, by exhaustive
/// search over every eviction choice at every miss.
pub fn brute_force_optimal(seq: &[AddressId], capacity: usize, limits: SearchLimits) -> Result<u64> {
    if capacity == 0 {
        return Err(Error::param("cache capacity must be at least 1"));
    }
    let mut distinct: Vec<AddressId> = seq.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if seq.len() > limits.max_len || distinct.len() > limits.max_distinct || capacity > limits.max_capacity {
        return Err(Error::InstanceTooLarge(format!(
            "length {}, {} distinct, capacity {capacity} (limits {}, {}, {})",
            seq.len(),
            distinct.len(),
            limits.max_len,
            limits.max_distinct,
            limits.max_capacity
        )));
    }

    fn search(seq: &[AddressId], capacity: usize, cache: &mut Vec<AddressId>) -> u64 {
        let Some((&a, rest)) = seq.split_first() else {
            return 0;
        };
        if cache.contains(&a) {
            return search(rest, capacity, cache);
        }
        if cache.len() < capacity {
            cache.push(a);
            let faults = 1 + search(rest, capacity, cache);
            cache.pop();
            return faults;
        }
        let mut best = u64::MAX;
        for i in 0..cache.len() {
            let evicted = std::mem::replace(&mut cache[i], a);
            best = best.min(1 + search(rest, capacity, cache));
            cache[i] = evicted;
        }
        best
    }

    Ok(search(seq, capacity, &mut Vec::with_capacity(capacity)))
}
