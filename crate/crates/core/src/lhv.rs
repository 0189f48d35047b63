//! Classical analysis of the inverted scenario, where the pair outcomes
//! `(q1, q2)` play the role of inputs and the choice registers `(q3, q4)` the
//! role of outputs.
//!
//! For two inputs and two outputs per side the local polytope is cut out by
//! the no-signaling equalities together with the eight CHSH inequalities, so
//! membership is decided without a linear program.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::protocol::{Distribution, Sign, Var};
use crate::stats::{conditional, prob, EventPredicate, CONDITIONING_FLOOR};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Row sums of a table may differ from 1 by this much.
pub const TABLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LhvError {
    #[error("input pair (q1={q1}, q2={q2}) has zero probability")]
    MissingSupport { q1: Sign, q2: Sign },
    #[error("invalid conditional table: {0}")]
    InvalidTable(String),
}

fn pair_index(a: Sign, b: Sign) -> usize {
    a.bit() << 1 | b.bit()
}

fn pair_of(i: usize) -> (Sign, Sign) {
    (Sign::from_bit(i >> 1), Sign::from_bit(i))
}

/// `P(q3, q4 | q1, q2)`. Row `i` is the input pair with bits `q1 q2`
/// (`+1 ↔ 0`), column `j` the output pair with bits `q3 q4`, so each row
/// reads `(++, +−, −+, −−)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalTable {
    entries: [[f64; 4]; 4],
}

impl ConditionalTable {
    pub fn new(entries: [[f64; 4]; 4]) -> Result<Self, LhvError> {
        let mut clean = entries;
        for (i, row) in clean.iter_mut().enumerate() {
            for p in row.iter_mut() {
                if !p.is_finite() || *p < -TABLE_TOL {
                    return Err(LhvError::InvalidTable(format!("entry {p} in row {i}")));
                }
                *p = p.max(0.0);
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > TABLE_TOL {
                return Err(LhvError::InvalidTable(format!("row {i} sums to {total}")));
            }
        }
        Ok(Self { entries: clean })
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.entries
    }

    /// `P(q3, q4 | q1, q2)`.
    pub fn get(&self, q1: Sign, q2: Sign, q3: Sign, q4: Sign) -> f64 {
        self.entries[pair_index(q1, q2)][pair_index(q3, q4)]
    }

    /// The output row for one input pair, ordered `(++, +−, −+, −−)`.
    pub fn row(&self, q1: Sign, q2: Sign) -> [f64; 4] {
        self.entries[pair_index(q1, q2)]
    }

    /// The PR box: outputs perfectly correlated except on input `(−1, −1)`,
    /// where they are perfectly anticorrelated; all marginals uniform.
    pub fn pr_box() -> Self {
        let mut entries = [[0.0; 4]; 4];
        for (i, row) in entries.iter_mut().enumerate() {
            let (q1, q2) = pair_of(i);
            let anti = q1 == Sign::Minus && q2 == Sign::Minus;
            for (j, p) in row.iter_mut().enumerate() {
                let (q3, q4) = pair_of(j);
                let correlated = q3 == q4;
                if correlated != anti {
                    *p = 0.5;
                }
            }
        }
        Self { entries }
    }

    /// `P(q3 | q1)·P(q4 | q2)` from `alice[q1.bit()] = P(q3=+1 | q1)` and
    /// `bob[q2.bit()] = P(q4=+1 | q2)`.
    pub fn product(alice: [f64; 2], bob: [f64; 2]) -> Result<Self, LhvError> {
        let mut entries = [[0.0; 4]; 4];
        for (i, row) in entries.iter_mut().enumerate() {
            let (q1, q2) = pair_of(i);
            let pa = alice[q1.bit()];
            let pb = bob[q2.bit()];
            for (j, p) in row.iter_mut().enumerate() {
                let (q3, q4) = pair_of(j);
                let a = if q3 == Sign::Plus { pa } else { 1.0 - pa };
                let b = if q4 == Sign::Plus { pb } else { 1.0 - pb };
                *p = a * b;
            }
        }
        Self::new(entries)
    }

    /// Convex combination of tables.
    pub fn mixture(components: &[(f64, ConditionalTable)]) -> Result<Self, LhvError> {
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if components.iter().any(|(w, _)| !w.is_finite() || *w < 0.0)
            || (total - 1.0).abs() > TABLE_TOL
        {
            return Err(LhvError::InvalidTable(format!(
                "mixture weights sum to {total}"
            )));
        }
        let mut entries = [[0.0; 4]; 4];
        for (w, t) in components {
            for (row, trow) in entries.iter_mut().zip(&t.entries) {
                for (p, tp) in row.iter_mut().zip(trow) {
                    *p += w * tp;
                }
            }
        }
        Self::new(entries)
    }

    /// `E(q1, q2) = Σ q3·q4·P(q3, q4 | q1, q2)`.
    pub fn correlator(&self, q1: Sign, q2: Sign) -> f64 {
        let row = self.row(q1, q2);
        row[0] - row[1] - row[2] + row[3]
    }

    /// `P(q3 = +1 | q1, q2)`.
    pub fn q3_plus(&self, q1: Sign, q2: Sign) -> f64 {
        let row = self.row(q1, q2);
        row[0] + row[1]
    }

    /// `P(q4 = +1 | q1, q2)`.
    pub fn q4_plus(&self, q1: Sign, q2: Sign) -> f64 {
        let row = self.row(q1, q2);
        row[0] + row[2]
    }

    /// Joint distribution obtained by feeding uniformly random inputs.
    pub fn with_uniform_inputs(&self) -> Distribution {
        Distribution::from_fn(|o| 0.25 * self.get(o.q1, o.q2, o.q3, o.q4))
            .expect("rows of a valid table are normalized")
    }
}

/// Per-input-pair conditionals of the choice registers given the pair outcomes.
pub fn conditional_table(d: &Distribution) -> Result<ConditionalTable, LhvError> {
    let mut entries = [[0.0; 4]; 4];
    for (i, row) in entries.iter_mut().enumerate() {
        let (q1, q2) = pair_of(i);
        let given = EventPredicate::new().with(Var::Q1, q1).with(Var::Q2, q2);
        if prob(d, &given) <= CONDITIONING_FLOOR {
            return Err(LhvError::MissingSupport { q1, q2 });
        }
        for (j, p) in row.iter_mut().enumerate() {
            let (q3, q4) = pair_of(j);
            let target = EventPredicate::new().with(Var::Q3, q3).with(Var::Q4, q4);
            *p = conditional(d, &target, &given).expect("support checked above");
        }
    }
    ConditionalTable::new(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalingReport {
    /// `max over q1 of |P(q3=+1 | q1, q2=+1) − P(q3=+1 | q1, q2=−1)|`.
    pub delta_q3: f64,
    /// `max over q2 of |P(q4=+1 | q1=+1, q2) − P(q4=+1 | q1=−1, q2)|`.
    pub delta_q4: f64,
    pub signaling: bool,
    pub tol: f64,
}

impl SignalingReport {
    pub fn max_delta(&self) -> f64 {
        self.delta_q3.max(self.delta_q4)
    }

    pub fn verdict(&self) -> &'static str {
        if self.signaling {
            "SIGNALING"
        } else {
            "NO-SIGNALING"
        }
    }
}

/// How far each output marginal moves when only the remote input changes.
pub fn no_signaling_check(t: &ConditionalTable, tol: f64) -> SignalingReport {
    let delta_q3 = Sign::BOTH
        .into_iter()
        .map(|q1| (t.q3_plus(q1, Sign::Plus) - t.q3_plus(q1, Sign::Minus)).abs())
        .fold(0.0, f64::max)
        .min(1.0);
    let delta_q4 = Sign::BOTH
        .into_iter()
        .map(|q2| (t.q4_plus(Sign::Plus, q2) - t.q4_plus(Sign::Minus, q2)).abs())
        .fold(0.0, f64::max)
        .min(1.0);
    SignalingReport {
        delta_q3,
        delta_q4,
        signaling: delta_q3.max(delta_q4) > tol,
        tol,
    }
}

/// `q3 = f(q1)`, `q4 = g(q2)`. Maps are indexed by the input's bit
/// (`[value at +1, value at −1]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DeterministicStrategy {
    pub f: [Sign; 2],
    pub g: [Sign; 2],
}

impl DeterministicStrategy {
    /// All 16 strategies, ordered by the bits `f(+1) f(−1) g(+1) g(−1)`.
    pub fn all() -> Vec<Self> {
        (0..16usize)
            .map(|i| Self {
                f: [Sign::from_bit(i >> 3), Sign::from_bit(i >> 2)],
                g: [Sign::from_bit(i >> 1), Sign::from_bit(i)],
            })
            .collect()
    }

    pub fn alice(&self, q1: Sign) -> Sign {
        self.f[q1.bit()]
    }

    pub fn bob(&self, q2: Sign) -> Sign {
        self.g[q2.bit()]
    }

    /// `E(+,+) + E(+,−) + E(−,+) − E(−,−)` with `E(q1,q2) = f(q1)·g(q2)`.
    pub fn chsh(&self) -> i32 {
        use Sign::{Minus, Plus};
        let e = |q1, q2| i32::from(self.alice(q1).times(self.bob(q2)).value());
        e(Plus, Plus) + e(Plus, Minus) + e(Minus, Plus) - e(Minus, Minus)
    }

    pub fn table(&self) -> ConditionalTable {
        let mut entries = [[0.0; 4]; 4];
        for (i, row) in entries.iter_mut().enumerate() {
            let (q1, q2) = pair_of(i);
            row[pair_index(self.alice(q1), self.bob(q2))] = 1.0;
        }
        ConditionalTable { entries }
    }
}

impl fmt::Display for DeterministicStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "f=({},{}) g=({},{})",
            self.f[0], self.f[1], self.g[0], self.g[1]
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategyChsh {
    pub strategy: DeterministicStrategy,
    pub chsh: i32,
}

pub fn enumerate_strategies() -> Vec<StrategyChsh> {
    DeterministicStrategy::all()
        .into_iter()
        .map(|strategy| StrategyChsh {
            strategy,
            chsh: strategy.chsh(),
        })
        .collect()
}

/// One of the eight CHSH expressions
/// `sign · (E(++) + E(+−) + E(−+) + E(−−) − 2·E(minus_input))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChshCombination {
    pub minus_input: (Sign, Sign),
    pub sign: Sign,
}

impl ChshCombination {
    pub fn all() -> [ChshCombination; 8] {
        let mut out = [ChshCombination {
            minus_input: (Sign::Plus, Sign::Plus),
            sign: Sign::Plus,
        }; 8];
        for (k, c) in out.iter_mut().enumerate() {
            c.minus_input = pair_of(k >> 1);
            c.sign = Sign::from_bit(k);
        }
        out
    }

    pub fn evaluate(&self, t: &ConditionalTable) -> f64 {
        let mut total = 0.0;
        for i in 0..4 {
            let (q1, q2) = pair_of(i);
            let e = t.correlator(q1, q2);
            total += if (q1, q2) == self.minus_input { -e } else { e };
        }
        // + 0.0 folds a negative zero into 0
        self.sign.as_f64() * total + 0.0
    }
}

impl fmt::Display for ChshCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.minus_input;
        let lead = if self.sign == Sign::Plus { "" } else { "-" };
        write!(f, "{lead}CHSH[minus at ({a},{b})]")
    }
}

pub fn chsh_combinations(t: &ConditionalTable) -> [(ChshCombination, f64); 8] {
    ChshCombination::all().map(|c| (c, c.evaluate(t)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum PolytopeVerdict {
    Local {
        max_combination: f64,
    },
    Signaling {
        witness: SignalingReport,
    },
    NonlocalNosignaling {
        witness: ChshCombination,
        value: f64,
    },
}

impl PolytopeVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            PolytopeVerdict::Local { .. } => "LOCAL",
            PolytopeVerdict::Signaling { .. } => "SIGNALING",
            PolytopeVerdict::NonlocalNosignaling { .. } => "NONLOCAL-NOSIGNALING",
        }
    }
}

/// Classifies a table as local, signaling, or nonlocal but non-signaling.
pub fn local_polytope_check(t: &ConditionalTable, tol: f64) -> PolytopeVerdict {
    let signaling = no_signaling_check(t, tol);
    if signaling.signaling {
        return PolytopeVerdict::Signaling { witness: signaling };
    }
    let (worst, value) = chsh_combinations(t)
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("eight combinations");
    if value <= 2.0 + tol {
        PolytopeVerdict::Local {
            max_combination: value,
        }
    } else {
        PolytopeVerdict::NonlocalNosignaling {
            witness: worst,
            value,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{scenario_distribution, Scenario};

    const P: Sign = Sign::Plus;
    const M: Sign = Sign::Minus;

    fn experiment_table() -> ConditionalTable {
        conditional_table(&scenario_distribution(&Scenario::default()).unwrap()).unwrap()
    }

    fn close(a: [f64; 4], b: [f64; 4]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn experiment_table_rows() {
        let t = experiment_table();
        assert!(close(t.row(P, P), [0.5, 0.25, 0.25, 0.0]));
        assert!(close(t.row(P, M), [0.0, 0.25, 0.25, 0.5]));
        assert!(close(t.row(M, P), [0.0, 0.25, 0.25, 0.5]));
        assert!(close(t.row(M, M), [0.5, 0.25, 0.25, 0.0]));
    }

    #[test]
    fn uniform_distribution_table_is_flat() {
        let t = conditional_table(&Distribution::uniform()).unwrap();
        for row in t.entries() {
            assert!(close(*row, [0.25; 4]));
        }
    }

    #[test]
    fn missing_support_is_reported() {
        let d = Distribution::point_mass(crate::protocol::OutcomeQuadruple::new(P, P, P, P));
        assert_eq!(
            conditional_table(&d),
            Err(LhvError::MissingSupport { q1: P, q2: M })
        );
    }

    #[test]
    fn experiment_table_signals() {
        let r = no_signaling_check(&experiment_table(), DEFAULT_TOL);
        assert!((r.delta_q3 - 0.5).abs() < 1e-12);
        assert!((r.delta_q4 - 0.5).abs() < 1e-12);
        assert!(r.signaling);
        assert!((experiment_table().q3_plus(P, P) - 0.75).abs() < 1e-12);
        assert!((experiment_table().q3_plus(P, M) - 0.25).abs() < 1e-12);
        assert!(matches!(
            local_polytope_check(&experiment_table(), DEFAULT_TOL),
            PolytopeVerdict::Signaling { .. }
        ));
    }

    #[test]
    fn product_and_pr_box_do_not_signal() {
        let t = ConditionalTable::product([0.3, 0.9], [0.6, 0.1]).unwrap();
        let r = no_signaling_check(&t, DEFAULT_TOL);
        assert!(r.delta_q3 < 1e-15 && r.delta_q4 < 1e-15);
        let r = no_signaling_check(&ConditionalTable::pr_box(), DEFAULT_TOL);
        assert_eq!((r.delta_q3, r.delta_q4, r.signaling), (0.0, 0.0, false));
    }

    #[test]
    fn pr_box_reaches_four() {
        match local_polytope_check(&ConditionalTable::pr_box(), DEFAULT_TOL) {
            PolytopeVerdict::NonlocalNosignaling { witness, value } => {
                assert!((value - 4.0).abs() < 1e-12);
                assert_eq!(witness.minus_input, (M, M));
                assert_eq!(witness.sign, P);
            }
            other => panic!("unexpected verdict {other:?}"),
        }
    }

    #[test]
    fn strategy_chsh_values() {
        let all = enumerate_strategies();
        assert_eq!(all.len(), 16);
        let constant = DeterministicStrategy {
            f: [P, P],
            g: [P, P],
        };
        assert_eq!(constant.chsh(), 2);
        let ident_f = DeterministicStrategy {
            f: [P, M],
            g: [P, P],
        };
        // E(q1,q2) = q1 → 1 + 1 − 1 + 1
        assert_eq!(ident_f.chsh(), 2);
        assert!(all.iter().all(|s| s.chsh.abs() == 2));
        assert_eq!(all.iter().map(|s| s.chsh).max(), Some(2));
        assert_eq!(all.iter().map(|s| s.chsh).min(), Some(-2));
    }

    #[test]
    fn strategy_tables_are_local() {
        for s in DeterministicStrategy::all() {
            let t = s.table();
            let r = no_signaling_check(&t, DEFAULT_TOL);
            assert_eq!((r.delta_q3, r.delta_q4), (0.0, 0.0));
            assert!(matches!(
                local_polytope_check(&t, DEFAULT_TOL),
                PolytopeVerdict::Local { .. }
            ));
            let standard = ChshCombination {
                minus_input: (M, M),
                sign: P,
            };
            assert_eq!(standard.evaluate(&t), f64::from(s.chsh()));
        }
    }

    #[test]
    fn table_validation() {
        assert!(ConditionalTable::new([[0.25; 4]; 4]).is_ok());
        let mut bad = [[0.25; 4]; 4];
        bad[2][0] = 0.3;
        assert!(ConditionalTable::new(bad).is_err());
        let mut neg = [[0.25; 4]; 4];
        neg[0] = [-0.5, 0.5, 0.5, 0.5];
        assert!(ConditionalTable::new(neg).is_err());
        assert!(ConditionalTable::mixture(&[(0.7, ConditionalTable::pr_box())]).is_err());
    }

    #[test]
    fn with_uniform_inputs_round_trips() {
        let t = ConditionalTable::pr_box();
        assert_eq!(conditional_table(&t.with_uniform_inputs()).unwrap(), t);
    }
}
