//! The four-qubit experiment: an entangled pair `Q1 Q2` plus one
//! basis-choice register per party (`Q3` for Alice, `Q4` for Bob).
//!
//! A choice register reading `|0⟩` (outcome `+1`) means the Z basis was
//! used and its partner qubit was left alone; `|1⟩` (outcome `−1`) means
//! the X basis was used, i.e. a Hadamard was applied to the partner before
//! the final Z measurement.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::qcore::{
    self, apply_unitary, controlled_unitary, density_from_state, hadamard, kron, mix,
    DensityMatrix, QcoreError, StateVector,
};

/// Probabilities may dip below zero by this much from rounding before being
/// rejected; accepted values are clamped to zero.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("choice probability {0} is outside [0, 1]")]
    InvalidChoiceProb(f64),
    #[error("initial state must be a 2-qubit state, got {0} qubits")]
    InitialStateQubits(usize),
    #[error("expected a 4-qubit density matrix, got {0} qubits")]
    NotFourQubits(usize),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid sign {0} (expected +1 or -1)")]
    InvalidSign(i64),
    #[error("unknown variable {0:?} (expected q1..q4)")]
    UnknownVariable(String),
    #[error(transparent)]
    Qcore(#[from] QcoreError),
}

/// A ±1 measurement value. `Plus` is encoded by the bit `0` (`|0⟩`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    pub fn bit(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn from_bit(bit: usize) -> Self {
        if bit & 1 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn from_value(v: i64) -> Result<Self, ProtocolError> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(ProtocolError::InvalidSign(other)),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// Product of two signs.
    pub fn times(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

/// One of the four measured registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::Q1, Var::Q2, Var::Q3, Var::Q4];

    /// Register position (0 for `Q1`).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Var> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        ["q1", "q2", "q3", "q4"][self.index()]
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Var {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "q1" => Ok(Var::Q1),
            "q2" => Ok(Var::Q2),
            "q3" => Ok(Var::Q3),
            "q4" => Ok(Var::Q4),
            _ => Err(ProtocolError::UnknownVariable(s.to_string())),
        }
    }
}

impl Serialize for Var {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// A joint outcome `(q1, q2, q3, q4)`. For `q3`/`q4`, `+1` reads "Z chosen"
/// and `−1` reads "X chosen".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct OutcomeQuadruple {
    pub q1: Sign,
    pub q2: Sign,
    pub q3: Sign,
    pub q4: Sign,
}

impl OutcomeQuadruple {
    pub fn new(q1: Sign, q2: Sign, q3: Sign, q4: Sign) -> Self {
        Self { q1, q2, q3, q4 }
    }

    /// Computational basis index `q1·8 + q2·4 + q3·2 + q4` (bits, `+1 ↔ 0`).
    pub fn index(&self) -> usize {
        self.q1.bit() << 3 | self.q2.bit() << 2 | self.q3.bit() << 1 | self.q4.bit()
    }

    pub fn from_index(i: usize) -> Self {
        Self {
            q1: Sign::from_bit(i >> 3),
            q2: Sign::from_bit(i >> 2),
            q3: Sign::from_bit(i >> 1),
            q4: Sign::from_bit(i),
        }
    }

    /// All 16 outcomes in basis-index order.
    pub fn all() -> impl Iterator<Item = OutcomeQuadruple> {
        (0..16).map(Self::from_index)
    }

    pub fn get(&self, var: Var) -> Sign {
        match var {
            Var::Q1 => self.q1,
            Var::Q2 => self.q2,
            Var::Q3 => self.q3,
            Var::Q4 => self.q4,
        }
    }

    pub fn with(mut self, var: Var, value: Sign) -> Self {
        match var {
            Var::Q1 => self.q1 = value,
            Var::Q2 => self.q2 = value,
            Var::Q3 => self.q3 = value,
            Var::Q4 => self.q4 = value,
        }
        self
    }
}

impl fmt::Display for OutcomeQuadruple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.q1, self.q2, self.q3, self.q4)
    }
}

/// Probability table over the 16 outcome quadruples, stored in basis-index
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: [f64; 16],
}

impl Distribution {
    pub fn new(probs: [f64; 16]) -> Result<Self, ProtocolError> {
        let mut clean = probs;
        for p in clean.iter_mut() {
            if !p.is_finite() || *p < -PROB_TOL {
                return Err(ProtocolError::InvalidDistribution(format!(
                    "entry {p} is not a probability"
                )));
            }
            *p = p.max(0.0);
        }
        let total: f64 = clean.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(ProtocolError::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { probs: clean })
    }

    pub fn from_fn(mut f: impl FnMut(OutcomeQuadruple) -> f64) -> Result<Self, ProtocolError> {
        let mut probs = [0.0; 16];
        for o in OutcomeQuadruple::all() {
            probs[o.index()] = f(o);
        }
        Self::new(probs)
    }

    pub fn point_mass(outcome: OutcomeQuadruple) -> Self {
        let mut probs = [0.0; 16];
        probs[outcome.index()] = 1.0;
        Self { probs }
    }

    pub fn uniform() -> Self {
        Self {
            probs: [1.0 / 16.0; 16],
        }
    }

    /// Empirical distribution `counts / total`.
    pub fn from_counts(counts: &[u64; 16]) -> Result<Self, ProtocolError> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(ProtocolError::InvalidDistribution("no counts".into()));
        }
        let mut probs = [0.0; 16];
        for (p, &c) in probs.iter_mut().zip(counts) {
            *p = c as f64 / total as f64;
        }
        Self::new(probs)
    }

    pub fn get(&self, outcome: OutcomeQuadruple) -> f64 {
        self.probs[outcome.index()]
    }

    pub fn probs(&self) -> &[f64; 16] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (OutcomeQuadruple, f64)> + '_ {
        OutcomeQuadruple::all().map(|o| (o, self.probs[o.index()]))
    }

    /// `½ Σ |p − q|`.
    pub fn tv_distance(&self, other: &Distribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
    }
}

/// How a party's basis choice is made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChoiceMode {
    /// The choice register starts in `√p|0⟩ + √(1−p)|1⟩` and drives a
    /// controlled-H; every measurement is deferred to the end.
    #[default]
    Coherent,
    /// A classical coin picks `|0⟩` or `|1⟩`, and H is applied when tails.
    Coin,
}

impl FromStr for ChoiceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "coherent" => Ok(ChoiceMode::Coherent),
            "coin" => Ok(ChoiceMode::Coin),
            other => Err(format!(
                "unknown mode {other:?} (expected coherent or coin)"
            )),
        }
    }
}

impl fmt::Display for ChoiceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChoiceMode::Coherent => "coherent",
            ChoiceMode::Coin => "coin",
        })
    }
}

/// The two-qubit state shared before the choices are made.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialState {
    /// `(|00⟩ − |11⟩)/√2`.
    #[default]
    BellMinus,
    Custom(StateVector),
}

impl InitialState {
    pub fn name(&self) -> &'static str {
        match self {
            InitialState::BellMinus => "bell-minus",
            InitialState::Custom(_) => "custom",
        }
    }

    pub fn state(&self) -> StateVector {
        match self {
            InitialState::BellMinus => bell_state(),
            InitialState::Custom(s) => s.clone(),
        }
    }
}

/// Both parties measure in Z or X; `choice_prob` is the probability of Z.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub initial_state: InitialState,
    pub alice_mode: ChoiceMode,
    pub bob_mode: ChoiceMode,
    pub choice_prob: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            initial_state: InitialState::BellMinus,
            alice_mode: ChoiceMode::Coherent,
            bob_mode: ChoiceMode::Coherent,
            choice_prob: 0.5,
        }
    }
}

impl Scenario {
    /// Same mode for both parties, default initial state.
    pub fn new(mode: ChoiceMode, choice_prob: f64) -> Self {
        Self {
            alice_mode: mode,
            bob_mode: mode,
            choice_prob,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(0.0..=1.0).contains(&self.choice_prob) {
            return Err(ProtocolError::InvalidChoiceProb(self.choice_prob));
        }
        if let InitialState::Custom(s) = &self.initial_state {
            if s.n_qubits() != 2 {
                return Err(ProtocolError::InitialStateQubits(s.n_qubits()));
            }
        }
        Ok(())
    }
}

/// `(|0⟩|0⟩ − |1⟩|1⟩)/√2` on `Q1 Q2`.
pub fn bell_state() -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::from_real(&[h, 0.0, 0.0, -h]).expect("normalized literal")
}

#[derive(Clone, Copy)]
enum Register {
    Superposed,
    Zero,
    One,
}

fn branches(mode: ChoiceMode, p: f64) -> Vec<(f64, Register)> {
    match mode {
        ChoiceMode::Coherent => vec![(1.0, Register::Superposed)],
        // independent coins: weights factorize across the two parties
        ChoiceMode::Coin => vec![(p, Register::Zero), (1.0 - p, Register::One)],
    }
}

fn register_state(reg: Register, p: f64) -> StateVector {
    let amps = match reg {
        Register::Superposed => [p.sqrt(), (1.0 - p).sqrt()],
        Register::Zero => [1.0, 0.0],
        Register::One => [0.0, 1.0],
    };
    StateVector::new(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
        .expect("choice register is normalized")
}

/// Applies the measurement-basis rotation for one party.
fn rotate_for_choice(
    state: &StateVector,
    reg: Register,
    register_qubit: usize,
    target_qubit: usize,
) -> Result<StateVector, QcoreError> {
    match reg {
        Register::Superposed => {
            let ch = controlled_unitary(&hadamard(), register_qubit, target_qubit, 4)?;
            apply_unitary(state, &ch, &[0, 1, 2, 3])
        }
        Register::Zero => Ok(state.clone()),
        Register::One => apply_unitary(state, &hadamard(), &[target_qubit]),
    }
}

/// The final four-qubit state `ρ` on `Q1 Q2 Q3 Q4`, just before every qubit is
/// measured in the computational basis.
pub fn build_final_density(scenario: &Scenario) -> Result<DensityMatrix, ProtocolError> {
    scenario.validate()?;
    let p = scenario.choice_prob;
    let pair = scenario.initial_state.state();

    let mut components = Vec::with_capacity(4);
    for (wa, ra) in branches(scenario.alice_mode, p) {
        for (wb, rb) in branches(scenario.bob_mode, p) {
            let regs = kron(&register_state(ra, p), &register_state(rb, p))?;
            let full = kron(&pair, &regs)?;
            let full = rotate_for_choice(&full, ra, 2, 0)?;
            let full = rotate_for_choice(&full, rb, 3, 1)?;
            components.push((wa * wb, density_from_state(&full)));
        }
    }
    Ok(mix(&components)?)
}

/// Reads the diagonal of a four-qubit `ρ` as a distribution over outcomes.
pub fn outcome_distribution(rho: &DensityMatrix) -> Result<Distribution, ProtocolError> {
    if rho.n_qubits() != 4 {
        return Err(ProtocolError::NotFourQubits(rho.n_qubits()));
    }
    let diag = qcore::measurement_probs(rho);
    let mut probs = [0.0; 16];
    probs.copy_from_slice(&diag);
    Distribution::new(probs)
}

/// Shorthand for the exact distribution of a scenario.
pub fn scenario_distribution(scenario: &Scenario) -> Result<Distribution, ProtocolError> {
    outcome_distribution(&build_final_density(scenario)?)
}
