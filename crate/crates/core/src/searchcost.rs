//! Normalized search time: expected lookup cost with a cache in front of
//! the full address table, relative to searching the table alone.
//!
//! A hit searches the cache; a miss searches the cache and then the full
//! table of `n` entries. With a lookup cost `cost(m)` for a table of `m`
//! entries this gives
//!
//! ```text
//! T = [(1 - p) cost(c) + p (cost(c) + cost(n))] / cost(n) = cost(c) / cost(n) + p
//! ```

use std::fmt;
use std::str::FromStr;

use crate::cachesim::MissCurve;
use crate::error::{Error, Result};

/// Cost of one lookup in a table of `m >= 1` entries. Implementations must
/// be non-negative and non-decreasing in `m`.
pub trait LookupCost {
    fn cost(&self, m: usize) -> f64;
}

impl<F: Fn(usize) -> f64> LookupCost for F {
    fn cost(&self, m: usize) -> f64 {
        self(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CostModel {
    /// `1 + log2(m)` comparisons.
    #[default]
    BinarySearch,
    /// `m` comparisons.
    LinearScan,
    /// Same cost for every size, e.g. an associative memory.
    Constant(f64),
}

impl LookupCost for CostModel {
    fn cost(&self, m: usize) -> f64 {
        match *self {
            CostModel::BinarySearch => 1.0 + (m as f64).log2(),
            CostModel::LinearScan => m as f64,
            CostModel::Constant(c) => c,
        }
    }
}

impl fmt::Display for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostModel::BinarySearch => f.write_str("binary"),
            CostModel::LinearScan => f.write_str("linear"),
            CostModel::Constant(c) => write!(f, "constant:{c}"),
        }
    }
}

impl FromStr for CostModel {
    type Err = Error;

    /// Accepts `binary`, `linear` or `constant:<value>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "binary" | "log" => Ok(CostModel::BinarySearch),
            "linear" => Ok(CostModel::LinearScan),
            _ => match lower.strip_prefix("constant:") {
                Some(v) => match v.parse::<f64>() {
                    Ok(c) if c.is_finite() && c > 0.0 => Ok(CostModel::Constant(c)),
                    _ => Err(Error::param(format!("bad constant cost {v:?}"))),
                },
                None => Err(Error::param(format!("unknown cost model {s:?}"))),
            },
        }
    }
}

pub fn normalized_search_time<M: LookupCost + ?Sized>(
    miss_ratio: f64,
    cache_size: usize,
    database_size: usize,
    model: &M,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&miss_ratio) {
        return Err(Error::param(format!("miss ratio {miss_ratio} outside [0, 1]")));
    }
    if cache_size == 0 || cache_size > database_size {
        return Err(Error::param(format!(
            "cache size {cache_size} must be between 1 and the database size {database_size}"
        )));
    }
    let cache = model.cost(cache_size);
    let full = model.cost(database_size);
    if full.is_nan() || cache.is_nan() || full <= 0.0 || cache < 0.0 {
        return Err(Error::param("lookup cost must be non-negative, and positive for the full table"));
    }
    let p = miss_ratio;
    Ok(((1.0 - p) * cache + p * (cache + full)) / full)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchTimePoint {
    pub capacity: usize,
    pub miss_ratio: f64,
    pub normalized_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchTimeCurve {
    pub database_size: usize,
    pub entries: Vec<SearchTimePoint>,
}

pub fn search_time_curve<M: LookupCost + ?Sized>(
    curve: &MissCurve,
    database_size: usize,
    model: &M,
) -> Result<SearchTimeCurve> {
    let entries = curve
        .entries
        .iter()
        .map(|s| {
            let p = s.miss_ratio();
            Ok(SearchTimePoint {
                capacity: s.capacity,
                miss_ratio: p,
                normalized_time: normalized_search_time(p, s.capacity, database_size, model)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SearchTimeCurve {
        database_size,
        entries,
    })
}

/// Capacity with the smallest normalized time; ties go to the smaller
/// capacity.
pub fn optimal_cache_size(curve: &SearchTimeCurve) -> Result<(usize, f64)> {
    curve
        .entries
        .iter()
        .min_by(|a, b| {
            a.normalized_time
                .total_cmp(&b.normalized_time)
                .then(a.capacity.cmp(&b.capacity))
        })
        .map(|p| (p.capacity, p.normalized_time))
        .ok_or(Error::EmptyInput("search-time curve has no points"))
}
