//! Seeded synthetic reference strings.
//!
//! Every generator is a pure function of its [`GeneratorSpec`]: the same
//! spec and seed always yield the same trace. The PRNG is ChaCha8
//! (`rand_chacha::ChaCha8Rng::seed_from_u64`), and sampling from a pmf uses
//! inverse-CDF lookup over cumulative weights.
//!
//! Generated traces have timestamps `0, 1, 2, ...`, every source field set
//! to [`DUMMY_SOURCE`], and destination tokens `d0, d1, ...` unless the
//! model supplies its own (the explicit initial stack of
//! [`Model::LruStack`]). Streams inside [`Model::Interleave`] prefix their
//! tokens with `s<index>.` so the streams never share addresses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{Trace, TraceBuilder};

/// Source address written on every generated frame.
pub const DUMMY_SOURCE: &str = "00-00-00-00-00-00";

const PMF_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub model: Model,
    pub length: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    /// Independent references, each of `addresses` equally likely.
    UniformIrm { addresses: usize },
    /// Independent references drawn from `pmf` (entry `i` is address `d<i>`).
    Irm { pmf: Vec<f64> },
    /// Address `i mod period` at position `i`.
    Cyclic { period: usize },
    /// LRU stack model. `distance_pmf[k]` is the probability of referencing
    /// stack depth `k + 1`; `initial_stack[0]` is the top of the stack.
    LruStack {
        distance_pmf: Vec<f64>,
        initial_stack: Vec<String>,
    },
    /// Deterministic round-robin over streams: `frames` references from the
    /// first stream, then `frames` from the second, and so on.
    Interleave { streams: Vec<Stream> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stream {
    pub model: Model,
    pub frames: usize,
    /// Protocol tag written on this stream's frames.
    #[serde(default)]
    pub proto: Option<String>,
}

impl GeneratorSpec {
    pub fn new(model: Model, length: usize, seed: u64) -> Self {
        Self { model, length, seed }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()
    }
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::UniformIrm { addresses } => {
                if *addresses == 0 {
                    return Err(Error::InvalidSpec("uniform IRM needs at least one address".into()));
                }
            }
            Model::Irm { pmf } => {
                check_pmf(pmf)?;
            }
            Model::Cyclic { period } => {
                if *period == 0 {
                    return Err(Error::InvalidSpec("cycle length must be at least 1".into()));
                }
            }
            Model::LruStack {
                distance_pmf,
                initial_stack,
            } => {
                check_pmf(distance_pmf)?;
                let deepest = distance_pmf.iter().rposition(|&p| p > 0.0).map_or(0, |i| i + 1);
                if initial_stack.len() < deepest {
                    return Err(Error::InvalidSpec(format!(
                        "initial stack holds {} addresses but distance {deepest} has nonzero mass",
                        initial_stack.len()
                    )));
                }
                let mut sorted: Vec<&str> = initial_stack.iter().map(String::as_str).collect();
                sorted.sort_unstable();
                if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
                    return Err(Error::InvalidSpec(format!("duplicate stack address {:?}", w[0])));
                }
                if sorted.iter().any(|t| t.is_empty() || t.contains(['\t', '\n', '\r'])) {
                    return Err(Error::InvalidSpec("stack addresses must be non-empty and tab-free".into()));
                }
            }
            Model::Interleave { streams } => {
                if streams.is_empty() {
                    return Err(Error::InvalidSpec("interleave needs at least one stream".into()));
                }
                for s in streams {
                    if s.frames == 0 {
                        return Err(Error::InvalidSpec("interleave ratio must be at least 1".into()));
                    }
                    s.model.validate()?;
                }
            }
        }
        Ok(())
    }
}

fn check_pmf(pmf: &[f64]) -> Result<()> {
    if pmf.is_empty() {
        return Err(Error::InvalidSpec("pmf is empty".into()));
    }
    if let Some(p) = pmf.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidSpec(format!("pmf entry {p} is negative or not finite")));
    }
    let sum: f64 = pmf.iter().sum();
    if (sum - 1.0).abs() > PMF_TOLERANCE {
        return Err(Error::InvalidSpec(format!("pmf sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Generates the trace described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<Trace> {
    spec.validate()?;
    let mut source = Source::new(&spec.model, spec.seed, "");
    let tokens = std::mem::take(&mut source.tokens);
    let mut builder = TraceBuilder::with_capacity(spec.length);
    for t in 0..spec.length {
        let (token, proto) = source.next();
        builder.push(t as u64, DUMMY_SOURCE, &tokens[token], proto, None)?;
    }
    Ok(builder.build())
}

/// Inverse-CDF sampler over a validated pmf.
#[derive(Debug)]
struct Sampler {
    cumulative: Vec<f64>,
    last_nonzero: usize,
}

impl Sampler {
    fn new(pmf: &[f64]) -> Self {
        let cumulative = pmf
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let last_nonzero = pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Self {
            cumulative,
            last_nonzero,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty pmf");
        let x = rng.gen::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= x);
        i.min(self.last_nonzero)
    }
}

#[derive(Debug)]
enum Kind {
    Uniform(usize),
    Irm(Sampler),
    Cyclic { period: usize, pos: usize },
    LruStack { sampler: Sampler, stack: Vec<usize> },
    Interleave(Interleaver),
}

#[derive(Debug)]
struct Interleaver {
    streams: Vec<(Source, usize, Option<String>)>,
    /// Token index offset of each stream in the parent table.
    offsets: Vec<usize>,
    current: usize,
    emitted: usize,
}

/// Stateful reference source; yields indices into `tokens`.
#[derive(Debug)]
struct Source {
    kind: Kind,
    tokens: Vec<String>,
    rng: ChaCha8Rng,
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}d{i}")).collect()
}

fn stream_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl Source {
    fn new(model: &Model, seed: u64, prefix: &str) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(seed);
        let (kind, tokens) = match model {
            Model::UniformIrm { addresses } => (Kind::Uniform(*addresses), numbered(prefix, *addresses)),
            Model::Irm { pmf } => (Kind::Irm(Sampler::new(pmf)), numbered(prefix, pmf.len())),
            Model::Cyclic { period } => (
                Kind::Cyclic {
                    period: *period,
                    pos: 0,
                },
                numbered(prefix, *period),
            ),
            Model::LruStack {
                distance_pmf,
                initial_stack,
            } => (
                Kind::LruStack {
                    sampler: Sampler::new(distance_pmf),
                    stack: (0..initial_stack.len()).collect(),
                },
                initial_stack.iter().map(|t| format!("{prefix}{t}")).collect(),
            ),
            Model::Interleave { streams } => {
                let mut tokens = Vec::new();
                let mut offsets = Vec::with_capacity(streams.len());
                let mut built = Vec::with_capacity(streams.len());
                for (i, s) in streams.iter().enumerate() {
                    let child = Source::new(&s.model, stream_seed(seed, i), &format!("{prefix}s{i}."));
                    offsets.push(tokens.len());
                    tokens.extend(child.tokens.iter().cloned());
                    built.push((child, s.frames, s.proto.clone()));
                }
                (
                    Kind::Interleave(Interleaver {
                        streams: built,
                        offsets,
                        current: 0,
                        emitted: 0,
                    }),
                    tokens,
                )
            }
        };
        Self { kind, tokens, rng }
    }

    /// Next token index and the protocol tag of the stream that produced it.
    fn next(&mut self) -> (usize, Option<&str>) {
        match &mut self.kind {
            Kind::Uniform(n) => (self.rng.gen_range(0..*n), None),
            Kind::Irm(sampler) => (sampler.sample(&mut self.rng), None),
            Kind::Cyclic { period, pos } => {
                let token = *pos;
                *pos = (*pos + 1) % *period;
                (token, None)
            }
            Kind::LruStack { sampler, stack } => {
                let depth = sampler.sample(&mut self.rng);
                let token = stack.remove(depth);
                stack.insert(0, token);
                (token, None)
            }
            Kind::Interleave(il) => {
                if il.emitted == il.streams[il.current].1 {
                    il.current = (il.current + 1) % il.streams.len();
                    il.emitted = 0;
                }
                il.emitted += 1;
                let offset = il.offsets[il.current];
                let (child, _, proto) = &mut il.streams[il.current];
                let (token, inner_proto) = child.next();
                (offset + token, inner_proto.or(proto.as_deref()))
            }
        }
    }
}
