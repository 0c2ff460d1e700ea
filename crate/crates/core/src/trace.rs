//! Reference traces: frame records over interned addresses.
//!
//! A trace file is UTF-8 text with one frame per line and tab-separated
//! fields:
//!
//! ```text
//! timestamp_us <TAB> src <TAB> dst [<TAB> proto [<TAB> length]]
//! ```
//!
//! Lines starting with `#` are comments and blank lines are ignored.
//! Timestamps are integer microseconds and must be non-decreasing (ties are
//! allowed). An empty `proto` field means "no protocol tag", which lets a
//! record carry a length without a protocol.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

const MICROS_PER_HOUR: f64 = 3_600_000_000.0;

/// Dense address identifier, assigned in first-appearance order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AddressId(pub u32);

impl AddressId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AddressId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bidirectional map between raw address tokens and [`AddressId`]s.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interner {
    tokens: Vec<String>,
    ids: HashMap<String, AddressId>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, token: &str) -> AddressId {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = AddressId(u32::try_from(self.tokens.len()).expect("more than u32::MAX addresses"));
        self.tokens.push(token.to_owned());
        self.ids.insert(token.to_owned(), id);
        id
    }

    pub fn get(&self, token: &str) -> Option<AddressId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: AddressId) -> Option<&str> {
        self.tokens.get(id.index()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens in id order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRecord {
    /// Microseconds since trace start.
    pub timestamp: u64,
    pub src: AddressId,
    pub dst: AddressId,
    pub proto: Option<String>,
    pub length: Option<u32>,
}

/// An immutable, time-ordered sequence of frames.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    records: Vec<FrameRecord>,
    interner: Interner,
}

impl Trace {
    pub fn records(&self) -> &[FrameRecord] {
        &self.records
    }

    pub fn interner(&self) -> &Interner {
        &self.interner
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The destination reference string consumed by every analysis.
    pub fn destinations(&self) -> Vec<AddressId> {
        self.records.iter().map(|r| r.dst).collect()
    }

    /// Destination tokens in reference order.
    pub fn destination_tokens(&self) -> impl Iterator<Item = &str> {
        self.records
            .iter()
            .map(|r| self.interner.token(r.dst).expect("interned"))
    }

    pub fn summarize(&self) -> Result<TraceSummary> {
        summarize(self)
    }
}

/// Incrementally builds a [`Trace`], interning tokens and enforcing
/// timestamp order.
#[derive(Debug, Default)]
pub struct TraceBuilder {
    records: Vec<FrameRecord>,
    interner: Interner,
}

impl TraceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(frames: usize) -> Self {
        Self {
            records: Vec::with_capacity(frames),
            interner: Interner::new(),
        }
    }

    /// Appends a frame. `line` is only used for error reporting.
    pub fn push(
        &mut self,
        timestamp: u64,
        src: &str,
        dst: &str,
        proto: Option<&str>,
        length: Option<u32>,
    ) -> Result<()> {
        self.push_at(self.records.len() + 1, timestamp, src, dst, proto, length)
    }

    fn push_at(
        &mut self,
        line: usize,
        timestamp: u64,
        src: &str,
        dst: &str,
        proto: Option<&str>,
        length: Option<u32>,
    ) -> Result<()> {
        if let Some(last) = self.records.last() {
            if timestamp < last.timestamp {
                return Err(Error::Order {
                    line,
                    previous: last.timestamp,
                    found: timestamp,
                });
            }
        }
        let src = self.interner.intern(src);
        let dst = self.interner.intern(dst);
        self.records.push(FrameRecord {
            timestamp,
            src,
            dst,
            proto: proto.map(str::to_owned),
            length,
        });
        Ok(())
    }

    pub fn build(self) -> Trace {
        Trace {
            records: self.records,
            interner: self.interner,
        }
    }
}

/// Parses a trace file. Records keep file order.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Trace> {
    let mut builder = TraceBuilder::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=5).contains(&fields.len()) {
            return Err(Error::parse(
                line_no,
                format!("expected 3 to 5 tab-separated fields, found {}", fields.len()),
            ));
        }
        let timestamp: u64 = fields[0].parse().map_err(|_| {
            Error::parse(line_no, format!("timestamp {:?} is not a non-negative integer", fields[0]))
        })?;
        let (src, dst) = (fields[1], fields[2]);
        if src.is_empty() || dst.is_empty() {
            return Err(Error::parse(line_no, "empty address token"));
        }
        let proto = fields.get(3).copied().filter(|p| !p.is_empty());
        let length = match fields.get(4) {
            Some(raw) => Some(raw.parse::<u32>().map_err(|_| {
                Error::parse(line_no, format!("length {raw:?} is not a non-negative integer"))
            })?),
            None => None,
        };
        builder.push_at(line_no, timestamp, src, dst, proto, length)?;
    }
    Ok(builder.build())
}

/// Writes `trace` in the format accepted by [`parse_trace`].
pub fn write_trace<W: Write>(trace: &Trace, mut out: W) -> std::io::Result<()> {
    let tok = |id| trace.interner.token(id).expect("interned");
    for r in &trace.records {
        write!(out, "{}\t{}\t{}", r.timestamp, tok(r.src), tok(r.dst))?;
        match (&r.proto, r.length) {
            (None, None) => {}
            (Some(p), None) => write!(out, "\t{p}")?,
            (p, Some(len)) => write!(out, "\t{}\t{len}", p.as_deref().unwrap_or(""))?,
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub frame_count: usize,
    /// Distinct addresses over source and destination fields.
    pub distinct_addresses: usize,
    pub distinct_destinations: usize,
    pub duration_hours: f64,
}

impl fmt::Display for TraceSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "frames={} addresses={} destinations={} hours={}",
            self.frame_count, self.distinct_addresses, self.distinct_destinations, self.duration_hours
        )
    }
}

pub fn summarize(trace: &Trace) -> Result<TraceSummary> {
    let (first, last) = match (trace.records.first(), trace.records.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptyInput("trace has no frames")),
    };
    let mut seen_src = vec![false; trace.interner.len()];
    let mut seen_dst = vec![false; trace.interner.len()];
    for r in &trace.records {
        seen_src[r.src.index()] = true;
        seen_dst[r.dst.index()] = true;
    }
    let distinct_addresses = seen_src
        .iter()
        .zip(&seen_dst)
        .filter(|(s, d)| **s || **d)
        .count();
    let distinct_destinations = seen_dst.iter().filter(|d| **d).count();
    Ok(TraceSummary {
        frame_count: trace.records.len(),
        distinct_addresses,
        distinct_destinations,
        duration_hours: (last.timestamp - first.timestamp) as f64 / MICROS_PER_HOUR,
    })
}

/// Splits frames by a predicate on the protocol tag. Frames without a tag
/// never match. Returns `(matching, rest)`, each with its own dense
/// interning.
pub fn split_by_protocol<P>(trace: &Trace, mut matches: P) -> (Trace, Trace)
where
    P: FnMut(&str) -> bool,
{
    let mut hit = TraceBuilder::new();
    let mut rest = TraceBuilder::new();
    let tok = |id| trace.interner.token(id).expect("interned");
    for r in &trace.records {
        let side = match r.proto.as_deref() {
            Some(p) if matches(p) => &mut hit,
            _ => &mut rest,
        };
        side.push(r.timestamp, tok(r.src), tok(r.dst), r.proto.as_deref(), r.length)
            .expect("source trace is already time-ordered");
    }
    (hit.build(), rest.build())
}
