//! Certainty predictions and the four-fact contradiction chain.
//!
//! The chain treats the choice registers `q3`, `q4` as quantities whose
//! values may depend on the pair outcomes `q1`, `q2`, and asks whether a
//! distribution is compatible with each register depending only on its own
//! party's outcome. Four conditional probabilities are read off:
//!
//! | fact | quantity                                   | chain needs |
//! |------|--------------------------------------------|-------------|
//! | F0   | `P(q3=+1, q4=+1 │ q1=+1, q2=+1)`           | `> ε`       |
//! | F1   | `P(q4=−1 │ q1=+1, q3=+1, q2=−1)`            | `≥ 1 − ε`   |
//! | F2   | `P(q3=−1 │ q2=+1, q4=+1, q1=−1)`            | `≥ 1 − ε`   |
//! | F3   | `P(q3=−1, q4=−1 │ q1=−1, q2=−1)`           | `≤ ε`       |
//!
//! F1 pins `q4` to `−1` whenever `q2 = −1`; F2 pins `q3` to `−1` whenever
//! `q1 = −1`. If neither value may depend on the remote outcome, both carry
//! over to the `(q1, q2) = (−1, −1)` runs, where F3 says the pair `(−1, −1)`
//! never occurs. All four holding (each with a realizable conditioning
//! event) is the contradiction.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::protocol::{Distribution, Sign, Var};
use crate::stats::{conditional, prob, EventPredicate, StatsError, CONDITIONING_FLOOR};

/// Default certainty tolerance for exact distributions.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Conditional probabilities at or below this count as "never happens" when
/// testing deterministic response functions against a support.
pub const SUPPORT_ZERO: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealityError {
    #[error("epsilon {0} is outside [0, 0.5)")]
    InvalidEpsilon(f64),
    #[error("input pair (q1={q1}, q2={q2}) has zero probability")]
    MissingSupport { q1: Sign, q2: Sign },
    #[error("{variable} is not a choice register or {conditioner} is not a pair outcome")]
    BadResponseVariables { variable: Var, conditioner: Var },
}

fn check_epsilon(epsilon: f64) -> Result<(), RealityError> {
    if (0.0..0.5).contains(&epsilon) {
        Ok(())
    } else {
        Err(RealityError::InvalidEpsilon(epsilon))
    }
}

/// A deterministic value of a choice register as a function of one pair
/// outcome: `variable = map(conditioner)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ResponseFunction {
    pub variable: Var,
    pub conditioner: Var,
    /// `[value at +1, value at −1]`.
    pub map: [Sign; 2],
}

impl ResponseFunction {
    pub fn new(variable: Var, conditioner: Var, map: [Sign; 2]) -> Result<Self, RealityError> {
        let ok = matches!(variable, Var::Q3 | Var::Q4) && matches!(conditioner, Var::Q1 | Var::Q2);
        if !ok {
            return Err(RealityError::BadResponseVariables {
                variable,
                conditioner,
            });
        }
        Ok(Self {
            variable,
            conditioner,
            map,
        })
    }

    pub fn apply(&self, input: Sign) -> Sign {
        self.map[input.bit()]
    }

    /// The four functions `{±1} → {±1}` for one (variable, conditioner) pair,
    /// ordered `≡+1`, identity, negation, `≡−1`.
    pub fn all(variable: Var, conditioner: Var) -> Result<Vec<Self>, RealityError> {
        use Sign::{Minus, Plus};
        [[Plus, Plus], [Plus, Minus], [Minus, Plus], [Minus, Minus]]
            .into_iter()
            .map(|map| Self::new(variable, conditioner, map))
            .collect()
    }
}

impl fmt::Display for ResponseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({}): +1->{}, -1->{}",
            self.variable, self.conditioner, self.map[0], self.map[1]
        )
    }
}

/// `given ⇒ predicted_variable = predicted_value` with the stated confidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertaintyPrediction {
    pub given: EventPredicate,
    pub predicted_variable: Var,
    pub predicted_value: Sign,
    pub confidence: f64,
}

impl fmt::Display for CertaintyPrediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} => {}={} (p={})",
            self.given, self.predicted_variable, self.predicted_value, self.confidence
        )
    }
}

/// Every prediction `given ⇒ v = value` that holds with probability at least
/// `1 − epsilon`, where `given` ranges over all partial assignments of the
/// other three variables (including the empty one) with nonzero probability.
pub fn certainty_predictions(
    d: &Distribution,
    epsilon: f64,
) -> Result<Vec<CertaintyPrediction>, RealityError> {
    check_epsilon(epsilon)?;
    let mut out = Vec::new();
    for var in Var::ALL {
        let others: Vec<Var> = Var::ALL.into_iter().filter(|&v| v != var).collect();
        for subset in 0u32..(1 << others.len()) {
            let chosen: Vec<Var> = others
                .iter()
                .enumerate()
                .filter(|(i, _)| subset & (1 << i) != 0)
                .map(|(_, v)| *v)
                .collect();
            for values in 0usize..(1 << chosen.len()) {
                let given = chosen
                    .iter()
                    .enumerate()
                    .fold(EventPredicate::new(), |e, (i, v)| {
                        e.with(*v, Sign::from_bit(values >> i))
                    });
                if prob(d, &given) <= CONDITIONING_FLOOR {
                    continue;
                }
                for value in Sign::BOTH {
                    let target = EventPredicate::new().with(var, value);
                    let confidence =
                        conditional(d, &target, &given).expect("conditioning event is realizable");
                    if confidence >= 1.0 - epsilon {
                        out.push(CertaintyPrediction {
                            given,
                            predicted_variable: var,
                            predicted_value: value,
                            confidence,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The four facts of the chain with their verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyReport {
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    /// Per fact: whether its conditioning event had nonzero probability.
    /// Unestablished facts report 0.
    pub established: [bool; 4],
    pub contradiction: bool,
    pub epsilon: f64,
}

impl HardyReport {
    pub fn facts(&self) -> [f64; 4] {
        [self.f0, self.f1, self.f2, self.f3]
    }

    pub fn verdict(&self) -> &'static str {
        if self.contradiction {
            "CONTRADICTION"
        } else {
            "CONSISTENT"
        }
    }
}

/// `(target, given)` for F0..F3.
pub fn hardy_facts() -> [(EventPredicate, EventPredicate); 4] {
    use Sign::{Minus, Plus};
    let e = EventPredicate::new;
    [
        (
            e().with(Var::Q3, Plus).with(Var::Q4, Plus),
            e().with(Var::Q1, Plus).with(Var::Q2, Plus),
        ),
        (
            e().with(Var::Q4, Minus),
            e().with(Var::Q1, Plus)
                .with(Var::Q3, Plus)
                .with(Var::Q2, Minus),
        ),
        (
            e().with(Var::Q3, Minus),
            e().with(Var::Q2, Plus)
                .with(Var::Q4, Plus)
                .with(Var::Q1, Minus),
        ),
        (
            e().with(Var::Q3, Minus).with(Var::Q4, Minus),
            e().with(Var::Q1, Minus).with(Var::Q2, Minus),
        ),
    ]
}

pub fn hardy_chain_check(d: &Distribution, epsilon: f64) -> Result<HardyReport, RealityError> {
    check_epsilon(epsilon)?;
    let mut values = [0.0; 4];
    let mut established = [false; 4];
    for (i, (target, given)) in hardy_facts().iter().enumerate() {
        match conditional(d, target, given) {
            Ok(p) => {
                values[i] = p;
                established[i] = true;
            }
            Err(StatsError::ZeroConditioning { .. }) => {}
            Err(other) => unreachable!("conditional only fails on zero conditioning: {other}"),
        }
    }
    let [f0, f1, f2, f3] = values;
    let contradiction = established.iter().all(|&e| e)
        && f0 > epsilon
        && f1 >= 1.0 - epsilon
        && f2 >= 1.0 - epsilon
        && f3 <= epsilon;
    Ok(HardyReport {
        f0,
        f1,
        f2,
        f3,
        established,
        contradiction,
        epsilon,
    })
}

/// Deterministic local responses `q3 = f(q1)`, `q4 = g(q2)` that the support
/// of `d` does not rule out. A pair is ruled out as soon as some input
/// `(q1, q2)` makes its predicted output pair impossible.
pub fn response_model_refutation(
    d: &Distribution,
) -> Result<Vec<(ResponseFunction, ResponseFunction)>, RealityError> {
    for q1 in Sign::BOTH {
        for q2 in Sign::BOTH {
            let given = EventPredicate::new().with(Var::Q1, q1).with(Var::Q2, q2);
            if prob(d, &given) <= CONDITIONING_FLOOR {
                return Err(RealityError::MissingSupport { q1, q2 });
            }
        }
    }
    let fs = ResponseFunction::all(Var::Q3, Var::Q1)?;
    let gs = ResponseFunction::all(Var::Q4, Var::Q2)?;
    let mut survivors = Vec::new();
    for f in &fs {
        for g in &gs {
            let ruled_out = Sign::BOTH.into_iter().any(|q1| {
                Sign::BOTH.into_iter().any(|q2| {
                    let given = EventPredicate::new().with(Var::Q1, q1).with(Var::Q2, q2);
                    let target = EventPredicate::new()
                        .with(Var::Q3, f.apply(q1))
                        .with(Var::Q4, g.apply(q2));
                    conditional(d, &target, &given).expect("support checked above") <= SUPPORT_ZERO
                })
            });
            if !ruled_out {
                survivors.push((*f, *g));
            }
        }
    }
    Ok(survivors)
}
