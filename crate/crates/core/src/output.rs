//! CSV emitters. Every file has a header row and values are written with
//! full `f64` precision (shortest round-trip form); infinities print as `inf`.

use std::io::Write;

use crate::cachesim::{CacheStats, MissCurve};
use crate::error::{Error, Result};
use crate::locality::{ConcentrationCurve, RunLengthHistogram, StackDistanceHistogram, WorkingSetReport};
use crate::searchcost::SearchTimeCurve;

/// Stack levels tabulated by [`write_stack_levels`].
pub const STACK_LEVELS: [usize; 6] = [1, 2, 5, 10, 20, 50];

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::Writer::from_writer(out)
}

/// `dest_fraction,frame_fraction`
pub fn write_concentration<W: Write>(out: W, curve: &ConcentrationCurve) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["dest_fraction", "frame_fraction"])?;
    for (x, y) in &curve.points {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `frame_quantile,dest_fraction`
pub fn write_concentration_quantiles<W: Write>(out: W, curve: &ConcentrationCurve, quantiles: &[f64]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["frame_quantile", "dest_fraction"])?;
    for &q in quantiles {
        let x = curve
            .quantile(q)
            .ok_or_else(|| Error::param(format!("quantile {q} outside [0, 1]")))?;
        w.write_record([q.to_string(), x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `window,mode,avg`
pub fn write_wss<W: Write>(out: W, reports: &[WorkingSetReport]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["window", "mode", "avg"])?;
    for r in reports {
        w.write_record([r.window.to_string(), r.mode.to_string(), r.average_wss.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `distance,count,pdf,cdf`, one row per depth from 1 to the deepest
/// observed, then an `inf` row for first references.
pub fn write_stackdist<W: Write>(out: W, hist: &StackDistanceHistogram) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["distance", "count", "pdf", "cdf"])?;
    let total = hist.total as f64;
    let mut cumulative = 0u64;
    for (d, count) in hist.finite_counts() {
        cumulative += count;
        w.write_record([
            d.to_string(),
            count.to_string(),
            (count as f64 / total).to_string(),
            (cumulative as f64 / total).to_string(),
        ])?;
    }
    if hist.total > 0 {
        w.write_record([
            "inf".to_string(),
            hist.infinite_count.to_string(),
            (hist.infinite_count as f64 / total).to_string(),
            "1".to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `level,cdf` at the given stack levels.
pub fn write_stack_levels<W: Write>(out: W, hist: &StackDistanceHistogram, levels: &[usize]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["level", "cdf"])?;
    for &level in levels {
        w.write_record([level.to_string(), hist.cdf(level).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `length,count,frequency`
pub fn write_runs<W: Write>(out: W, runs: &RunLengthHistogram) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["length", "count", "frequency"])?;
    for (&len, &count) in &runs.counts {
        w.write_record([len.to_string(), count.to_string(), runs.frequency(len).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_grid<W, F>(out: W, curves: &[MissCurve], value: F) -> Result<()>
where
    W: Write,
    F: Fn(&CacheStats) -> f64,
{
    let first = curves.first().ok_or(Error::EmptyInput("no miss curves to tabulate"))?;
    let mut w = writer(out);
    let mut header = vec!["capacity".to_string()];
    header.extend(curves.iter().map(|c| c.policy.to_string()));
    w.write_record(&header)?;
    for (row, stats) in first.entries.iter().enumerate() {
        let mut record = vec![stats.capacity.to_string()];
        for c in curves {
            let e = c
                .entries
                .get(row)
                .filter(|e| e.capacity == stats.capacity)
                .ok_or_else(|| Error::param("miss curves were swept over different capacities"))?;
            record.push(value(e).to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows by capacity, one miss-ratio column per policy.
pub fn write_miss_ratio_table<W: Write>(out: W, curves: &[MissCurve]) -> Result<()> {
    write_grid(out, curves, CacheStats::miss_ratio)
}

/// Rows by capacity, one interfault-distance column per policy.
pub fn write_interfault_table<W: Write>(out: W, curves: &[MissCurve]) -> Result<()> {
    write_grid(out, curves, CacheStats::interfault_distance)
}

/// Rows by capacity, one normalized-search-time column per named curve.
pub fn write_search_time_table<W: Write>(out: W, curves: &[(String, SearchTimeCurve)]) -> Result<()> {
    let (_, first) = curves.first().ok_or(Error::EmptyInput("no search-time curves to tabulate"))?;
    let mut w = writer(out);
    let mut header = vec!["capacity".to_string()];
    header.extend(curves.iter().map(|(name, _)| name.clone()));
    w.write_record(&header)?;
    for (row, point) in first.entries.iter().enumerate() {
        let mut record = vec![point.capacity.to_string()];
        for (_, c) in curves {
            let p = c
                .entries
                .get(row)
                .filter(|p| p.capacity == point.capacity)
                .ok_or_else(|| Error::param("search-time curves use different capacities"))?;
            record.push(p.normalized_time.to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
