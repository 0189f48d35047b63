//! Queries over outcome distributions, CHSH correlators, and seeded sampling.
//!
//! # Sampling
//!
//! Draws use ChaCha8 keyed by the 64-bit seed (expanded to a 256-bit key with
//! SplitMix64). Draw `i` always consumes keystream words `2i` and `2i + 1`,
//! so any chunk can seek straight to its first draw. The counts for a given
//! `(distribution, n, seed)` are therefore identical regardless of chunk size
//! or how many threads process the chunks.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::protocol::{Distribution, OutcomeQuadruple, Sign, Var};
use crate::qcore::{kron, pauli_x, pauli_z, Matrix, QcoreError, StateVector};

/// Conditioning events with probability at or below this are treated as
/// unrealizable.
pub const CONDITIONING_FLOOR: f64 = 1e-14;

/// Draws per parallel work unit.
pub const SAMPLE_CHUNK: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("conditioning event {given} has probability {probability}")]
    ZeroConditioning { given: String, probability: f64 },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("marginal needs at least one variable")]
    EmptyVars,
    #[error("variable {0} listed more than once")]
    DuplicateVar(Var),
    #[error("CHSH needs a 2-qubit state, got {0} qubits")]
    NotTwoQubits(usize),
    #[error("angle {0} is not finite")]
    NonFiniteAngle(f64),
    #[error("cannot parse event {0:?}")]
    BadPredicate(String),
    #[error(transparent)]
    Qcore(#[from] QcoreError),
}

/// A partial assignment of ±1 values to `q1..q4`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct EventPredicate {
    constraints: [Option<Sign>; 4],
}

impl EventPredicate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: Var, value: Sign) -> Self {
        self.constraints[var.index()] = Some(value);
        self
    }

    pub fn get(&self, var: Var) -> Option<Sign> {
        self.constraints[var.index()]
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.iter().all(Option::is_none)
    }

    pub fn constrained(&self) -> impl Iterator<Item = (Var, Sign)> + '_ {
        Var::ALL
            .into_iter()
            .filter_map(|v| self.get(v).map(|s| (v, s)))
    }

    pub fn matches(&self, outcome: &OutcomeQuadruple) -> bool {
        self.constrained().all(|(v, s)| outcome.get(v) == s)
    }

    /// Conjunction, or `None` when the two assignments disagree on a variable.
    pub fn and(&self, other: &EventPredicate) -> Option<EventPredicate> {
        let mut out = *self;
        for (v, s) in other.constrained() {
            match out.get(v) {
                Some(existing) if existing != s => return None,
                _ => out = out.with(v, s),
            }
        }
        Some(out)
    }
}

impl fmt::Display for EventPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("{}");
        }
        let parts: Vec<String> = self
            .constrained()
            .map(|(v, s)| format!("{v}={s}"))
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Parses `"q1=+1,q3=-1"` (braces and whitespace optional).
impl FromStr for EventPredicate {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StatsError::BadPredicate(s.to_string());
        let body = s.trim().trim_start_matches('{').trim_end_matches('}');
        let mut e = EventPredicate::new();
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part.split_once('=').ok_or_else(bad)?;
            let var: Var = name.parse().map_err(|_| bad())?;
            let value: i64 = value
                .trim()
                .trim_start_matches('+')
                .parse()
                .map_err(|_| bad())?;
            let sign = Sign::from_value(value).map_err(|_| bad())?;
            if e.get(var).is_some() {
                return Err(bad());
            }
            e = e.with(var, sign);
        }
        Ok(e)
    }
}

impl Serialize for EventPredicate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(None)?;
        for (v, sign) in self.constrained() {
            map.serialize_entry(v.name(), &sign)?;
        }
        map.end()
    }
}

pub fn prob(d: &Distribution, e: &EventPredicate) -> f64 {
    d.iter()
        .filter(|(o, _)| e.matches(o))
        .map(|(_, p)| p)
        .sum::<f64>()
        .min(1.0)
}

/// `P(target | given)`. Errors when `given` is unrealizable.
pub fn conditional(
    d: &Distribution,
    target: &EventPredicate,
    given: &EventPredicate,
) -> Result<f64, StatsError> {
    let pg = prob(d, given);
    if pg <= CONDITIONING_FLOOR {
        return Err(StatsError::ZeroConditioning {
            given: given.to_string(),
            probability: pg,
        });
    }
    let joint = target.and(given).map_or(0.0, |e| prob(d, &e));
    Ok((joint / pg).min(1.0))
}

/// Distribution over a subset of the variables. Entry `i` corresponds to the
/// assignment whose bits (most significant = `vars[0]`, `0 ↔ +1`) spell `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginal {
    pub vars: Vec<Var>,
    pub probs: Vec<f64>,
}

impl Marginal {
    pub fn get(&self, values: &[Sign]) -> f64 {
        assert_eq!(values.len(), self.vars.len(), "one value per variable");
        let idx = values.iter().fold(0, |acc, s| acc << 1 | s.bit());
        self.probs[idx]
    }
}

pub fn marginal(d: &Distribution, vars: &[Var]) -> Result<Marginal, StatsError> {
    if vars.is_empty() {
        return Err(StatsError::EmptyVars);
    }
    for (i, v) in vars.iter().enumerate() {
        if vars[..i].contains(v) {
            return Err(StatsError::DuplicateVar(*v));
        }
    }
    let k = vars.len();
    let mut probs = vec![0.0; 1 << k];
    for (o, p) in d.iter() {
        let idx = vars.iter().fold(0, |acc, v| acc << 1 | o.get(*v).bit());
        probs[idx] += p;
    }
    debug_assert!(k <= 4);
    Ok(Marginal {
        vars: vars.to_vec(),
        probs,
    })
}

/// Measurement angles for the CHSH combination; each party measures
/// `M(θ) = cos θ·Z + sin θ·X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshSettings {
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
}

impl ChshSettings {
    pub fn new(a0: f64, a1: f64, b0: f64, b1: f64) -> Self {
        Self { a0, a1, b0, b1 }
    }

    /// `(0, π/2, −π/4, π/4)`, optimal for the default Bell state.
    pub fn optimal() -> Self {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        Self::new(0.0, FRAC_PI_2, -FRAC_PI_4, FRAC_PI_4)
    }

    fn validate(&self) -> Result<(), StatsError> {
        for a in [self.a0, self.a1, self.b0, self.b1] {
            if !a.is_finite() {
                return Err(StatsError::NonFiniteAngle(a));
            }
        }
        Ok(())
    }
}

/// `cos θ·Z + sin θ·X`.
pub fn observable(theta: f64) -> Matrix {
    pauli_z()
        .matrix()
        .scale(theta.cos())
        .add(&pauli_x().matrix().scale(theta.sin()))
}

/// `E(a, b) = ⟨ψ| M(a) ⊗ M(b) |ψ⟩`.
pub fn correlator(state: &StateVector, a: f64, b: f64) -> Result<f64, StatsError> {
    if state.n_qubits() != 2 {
        return Err(StatsError::NotTwoQubits(state.n_qubits()));
    }
    let op = kron(&observable(a), &observable(b));
    Ok(state.expectation(&op)?.re)
}

/// `S = E(a0,b0) + E(a0,b1) + E(a1,b0) − E(a1,b1)`.
pub fn chsh_value(state: &StateVector, s: &ChshSettings) -> Result<f64, StatsError> {
    s.validate()?;
    Ok(correlator(state, s.a0, s.b0)?
        + correlator(state, s.a0, s.b1)?
        + correlator(state, s.a1, s.b0)?
        - correlator(state, s.a1, s.b1)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleReport {
    pub n: u64,
    pub seed: u64,
    /// Counts in basis-index order.
    pub counts: [u64; 16],
    pub tv_distance: f64,
}

impl SampleReport {
    pub fn count(&self, outcome: OutcomeQuadruple) -> u64 {
        self.counts[outcome.index()]
    }

    pub fn empirical(&self) -> Distribution {
        Distribution::from_counts(&self.counts).expect("n >= 1 draws were made")
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn keyed_stream(seed: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

#[inline]
fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

struct InverseCdf {
    cdf: [f64; 16],
    last_positive: usize,
}

impl InverseCdf {
    fn new(d: &Distribution) -> Self {
        let mut cdf = [0.0; 16];
        let mut acc = 0.0;
        for (c, p) in cdf.iter_mut().zip(d.probs()) {
            acc += p;
            *c = acc;
        }
        let last_positive = d.probs().iter().rposition(|&p| p > 0.0).unwrap_or(15);
        Self { cdf, last_positive }
    }

    fn draw(&self, u: f64) -> usize {
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.last_positive)
    }
}

fn draw_range(table: &InverseCdf, base: &ChaCha8Rng, start: u64, end: u64) -> [u64; 16] {
    let mut rng = base.clone();
    rng.set_word_pos(u128::from(start) * 2);
    let mut counts = [0u64; 16];
    for _ in start..end {
        counts[table.draw(unit_f64(rng.next_u64()))] += 1;
    }
    counts
}

/// `n` independent inverse-CDF draws from `d`, processed in parallel chunks.
pub fn sample(d: &Distribution, n: u64, seed: u64) -> Result<SampleReport, StatsError> {
    sample_chunked(d, n, seed, SAMPLE_CHUNK)
}

/// Same as [`sample`] with an explicit chunk size; the result does not
/// depend on `chunk`.
pub fn sample_chunked(
    d: &Distribution,
    n: u64,
    seed: u64,
    chunk: u64,
) -> Result<SampleReport, StatsError> {
    if n == 0 {
        return Err(StatsError::NoSamples);
    }
    let chunk = chunk.max(1);
    let table = InverseCdf::new(d);
    let base = keyed_stream(seed);
    let n_chunks = n.div_ceil(chunk);
    let counts = (0..n_chunks)
        .into_par_iter()
        .map(|c| draw_range(&table, &base, c * chunk, ((c + 1) * chunk).min(n)))
        .reduce(
            || [0u64; 16],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let tv_distance = 0.5
        * counts
            .iter()
            .zip(d.probs())
            .map(|(&c, p)| (c as f64 / n as f64 - p).abs())
            .sum::<f64>();
    Ok(SampleReport {
        n,
        seed,
        counts,
        tv_distance: tv_distance.clamp(0.0, 1.0),
    })
}
