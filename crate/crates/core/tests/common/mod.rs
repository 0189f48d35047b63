//! Random instance generators and small oracles shared by the integration tests.
#![allow(dead_code)]

use basiscorr::protocol::{Distribution, OutcomeQuadruple, Sign};
use basiscorr::qcore::{DensityMatrix, Matrix, StateVector, UnitaryMatrix};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn gaussian_c(rng: &mut StdRng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_state(rng: &mut StdRng, n_qubits: usize) -> StateVector {
    let amps = (0..1usize << n_qubits).map(|_| gaussian_c(rng)).collect();
    StateVector::normalized(amps).unwrap()
}

/// Haar-ish unitary from the Q factor of a complex Gaussian matrix.
pub fn random_unitary(rng: &mut StdRng, n_qubits: usize) -> UnitaryMatrix {
    let dim = 1usize << n_qubits;
    let g = nalgebra::DMatrix::from_fn(dim, dim, |_, _| gaussian_c(rng));
    let q = g.qr().q();
    UnitaryMatrix::new(Matrix::from_fn(dim, |r, c| q[(r, c)])).unwrap()
}

/// `G G† / tr(G G†)` for a complex Gaussian `G`, optionally of reduced rank.
pub fn random_density(rng: &mut StdRng, n_qubits: usize) -> DensityMatrix {
    let dim = 1usize << n_qubits;
    let rank = rng.random_range(1..=dim);
    let g: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| (0..rank).map(|_| gaussian_c(rng)).collect())
        .collect();
    let mut m = Matrix::from_fn(dim, |r, c| {
        (0..rank).map(|k| g[r][k] * g[c][k].conj()).sum()
    });
    let tr = m.trace().re;
    m = m.scale(1.0 / tr);
    // force exact Hermiticity of the rounded entries
    let sym = Matrix::from_fn(dim, |r, c| (m.get(r, c) + m.get(c, r).conj()) * 0.5);
    DensityMatrix::new(sym).unwrap()
}

pub fn random_distribution(rng: &mut StdRng) -> Distribution {
    let raw: Vec<f64> = (0..16).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let mut probs = [0.0; 16];
    for (p, r) in probs.iter_mut().zip(&raw) {
        *p = r / total;
    }
    // absorb rounding so the table sums to 1 within the validation tolerance
    let drift = 1.0 - probs.iter().sum::<f64>();
    probs[0] += drift;
    Distribution::new(probs).unwrap()
}

/// The 16 diagonal entries of the final four-qubit state at choice
/// probability ½, written out block by block: prefactor ¼ times the
/// bracket weights for (q3, q4) = (++, +−, −+, −−).
pub fn block_pattern() -> [f64; 16] {
    let same = [0.5, 0.25, 0.25, 0.0]; // blocks (+,+) and (−,−)
    let differ = [0.0, 0.25, 0.25, 0.5]; // blocks (+,−) and (−,+)
    let mut out = [0.0; 16];
    for (block, weights) in [same, differ, differ, same].iter().enumerate() {
        for (k, w) in weights.iter().enumerate() {
            out[block * 4 + k] = 0.25 * w;
        }
    }
    out
}

/// Born-rule oracle for the four-qubit diagonal at any choice probability,
/// written with plain real arithmetic on the Bell amplitudes
/// `(1/√2, 0, 0, −1/√2)`. A Z choice reads the pair in `{|0⟩, |1⟩}`, an X
/// choice in `{|+⟩, |−⟩}`; choices are independent with `P(Z) = p`.
pub fn born_rule_diagonal(p: f64) -> [f64; 16] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = [h, 0.0, 0.0, -h];
    // basis vectors indexed [basis][outcome bit]
    let z = [[1.0, 0.0], [0.0, 1.0]];
    let x = [[h, h], [h, -h]];
    let vectors = [z, x];
    let mut out = [0.0; 16];
    for (i, slot) in out.iter_mut().enumerate() {
        let o = OutcomeQuadruple::from_index(i);
        let (a_basis, b_basis) = (o.q3.bit(), o.q4.bit());
        let weight = |b: usize| if b == 0 { p } else { 1.0 - p };
        let va = vectors[a_basis][o.q1.bit()];
        let vb = vectors[b_basis][o.q2.bit()];
        let mut amp = 0.0;
        for j in 0..4 {
            amp += va[j >> 1] * vb[j & 1] * psi[j];
        }
        *slot = weight(a_basis) * weight(b_basis) * amp * amp;
    }
    out
}

pub fn sign_pairs() -> impl Iterator<Item = (Sign, Sign)> {
    Sign::BOTH
        .into_iter()
        .flat_map(|a| Sign::BOTH.into_iter().map(move |b| (a, b)))
}

/// Joint distribution with uniform `(q1, q2)` and `(q3, q4) = (f(q1), g(q2))`.
pub fn deterministic_distribution(f: [Sign; 2], g: [Sign; 2]) -> Distribution {
    Distribution::from_fn(|o| {
        if o.q3 == f[o.q1.bit()] && o.q4 == g[o.q2.bit()] {
            0.25
        } else {
            0.0
        }
    })
    .unwrap()
}
