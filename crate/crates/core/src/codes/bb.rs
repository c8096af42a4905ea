//! Bivariate bicycle codes and their phenomenological memory model.
//!
//! With `x = S_l ⊗ I_m` and `y = I_l ⊗ S_m` (cyclic shifts), a polynomial is
//! a list of monomials `x^a y^b` given as `(a, b)` pairs. The code has
//! `hx = [A | B]` and `hz = [Bᵀ | Aᵀ]`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::gf2::BitMatrix;
use crate::pauli_sim::{DetectorErrorModel, Mechanism, ShotBatch};
use crate::readout::SoftReadoutTable;
use crate::Basis;

#[derive(Debug, Error, PartialEq)]
pub enum BbError {
    #[error("invalid code parameters: {0}")]
    Invalid(String),
    #[error("hx * hz^T is nonzero; the polynomials do not define a CSS code")]
    NotCss,
}

#[derive(Clone, Debug)]
pub struct BbCode {
    pub l: usize,
    pub m: usize,
    pub a_terms: Vec<(usize, usize)>,
    pub b_terms: Vec<(usize, usize)>,
    pub hx: BitMatrix,
    pub hz: BitMatrix,
    pub n: usize,
    pub k: usize,
}

/// `l*m x l*m` matrix of a polynomial in `x` and `y`.
fn poly_matrix(l: usize, m: usize, terms: &[(usize, usize)]) -> BitMatrix {
    let n = l * m;
    let mut out = BitMatrix::zeros(n, n);
    for &(a, b) in terms {
        for i in 0..l {
            for j in 0..m {
                out.flip(i * m + j, ((i + a) % l) * m + (j + b) % m);
            }
        }
    }
    out
}

pub fn build_bb_code(l: usize, m: usize, a_terms: &[(usize, usize)], b_terms: &[(usize, usize)]) -> Result<BbCode, BbError> {
    if l == 0 || m == 0 {
        return Err(BbError::Invalid("group orders must be positive".into()));
    }
    for &(a, b) in a_terms.iter().chain(b_terms) {
        if a >= l || b >= m {
            return Err(BbError::Invalid(format!("monomial x^{a} y^{b} outside l={l}, m={m}")));
        }
    }
    let a = poly_matrix(l, m, a_terms);
    let b = poly_matrix(l, m, b_terms);
    let hx = a.hstack(&b);
    let hz = b.transpose().hstack(&a.transpose());
    if !hx.mul(&hz.transpose()).is_zero() {
        return Err(BbError::NotCss);
    }
    let n = 2 * l * m;
    let k = n - hx.rank() - hz.rank();
    Ok(BbCode { l, m, a_terms: a_terms.to_vec(), b_terms: b_terms.to_vec(), hx, hz, n, k })
}

impl BbCode {
    /// The [[72, 12, 6]] code: `l = m = 6`, `A = x^3 + y + y^2`,
    /// `B = y^3 + x + x^2`.
    pub fn gross_72() -> Self {
        build_bb_code(6, 6, &[(3, 0), (0, 1), (0, 2)], &[(0, 3), (1, 0), (2, 0)]).expect("valid code")
    }

    /// The [[144, 12, 12]] code: `l = 12, m = 6`, same polynomials.
    pub fn gross_144() -> Self {
        build_bb_code(12, 6, &[(3, 0), (0, 1), (0, 2)], &[(0, 3), (1, 0), (2, 0)]).expect("valid code")
    }

    /// `k` independent X-type logical operators, one per row: elements of
    /// `ker(hz)` outside the row space of `hx`.
    pub fn x_logicals(&self) -> BitMatrix {
        let kernel = self.hz.kernel();
        let mut basis = self.hx.clone();
        let mut rank = basis.rank();
        let mut chosen = Vec::new();
        for r in 0..kernel.rows() {
            let cand = basis.vstack(&kernel.select_rows(&[r]));
            let cr = cand.rank();
            if cr > rank {
                basis = cand;
                rank = cr;
                chosen.push(r);
                if chosen.len() == self.k {
                    break;
                }
            }
        }
        kernel.select_rows(&chosen)
    }
}

/// Phenomenological memory experiment on the Z-error sector: data Z errors
/// with probability `p` in each of `rounds` rounds, X-check outcomes flipped
/// with probability `p` and then classified with soft flip probability
/// `p_s`. The last round is read out perfectly.
#[derive(Clone, Debug)]
pub struct BbPhenom {
    pub code: BbCode,
    pub rounds: usize,
    pub p: f64,
    pub p_s: f64,
    /// Data-qubit support of each X check.
    checks: Vec<Vec<u32>>,
    /// X checks touching each data qubit.
    qubit_checks: Vec<Vec<u32>>,
    /// Logicals flipped by a Z error on each data qubit.
    qubit_obs: Vec<u64>,
}

pub fn build_bb_phenom(code: BbCode, rounds: usize, p: f64, p_s: f64) -> Result<BbPhenom, BbError> {
    if rounds == 0 {
        return Err(BbError::Invalid("need at least one round".into()));
    }
    if !(0.0..=0.5).contains(&p) || !(0.0..=0.5).contains(&p_s) {
        return Err(BbError::Invalid(format!("probabilities out of range: p={p}, p_s={p_s}")));
    }
    if code.k > 64 {
        return Err(BbError::Invalid(format!("k = {} exceeds 64 observables", code.k)));
    }
    let checks: Vec<Vec<u32>> = (0..code.hx.rows()).map(|r| code.hx.row_support(r).iter().map(|&c| c as u32).collect()).collect();
    let mut qubit_checks = vec![Vec::new(); code.n];
    for (c, sup) in checks.iter().enumerate() {
        for &q in sup {
            qubit_checks[q as usize].push(c as u32);
        }
    }
    let logicals = code.x_logicals();
    let mut qubit_obs = vec![0u64; code.n];
    for j in 0..logicals.rows() {
        for q in logicals.row_support(j) {
            qubit_obs[q] |= 1 << j;
        }
    }
    Ok(BbPhenom { code, rounds, p, p_s, checks, qubit_checks, qubit_obs })
}

impl BbPhenom {
    pub fn n_checks(&self) -> usize {
        self.checks.len()
    }

    pub fn n_det(&self) -> usize {
        self.rounds * self.n_checks()
    }

    /// Noisy measurements: every check in every round but the last.
    pub fn n_meas(&self) -> usize {
        (self.rounds - 1) * self.n_checks()
    }

    fn det(&self, round: usize, check: usize) -> u32 {
        (round * self.n_checks() + check) as u32
    }

    /// Error model: one data mechanism per qubit and round, and per noisy
    /// measurement an untagged bit-flip plus a tagged classification error on
    /// the same detector pair.
    pub fn dem(&self) -> DetectorErrorModel {
        let mut mechanisms = Vec::new();
        for t in 0..self.rounds {
            for q in 0..self.code.n {
                if self.p == 0.0 {
                    break;
                }
                let mut dets: Vec<u32> = self.qubit_checks[q].iter().map(|&c| self.det(t, c as usize)).collect();
                dets.sort_unstable();
                mechanisms.push(Mechanism { prob: self.p, dets, obs: self.qubit_obs[q], meas_tag: None });
            }
        }
        for t in 0..self.rounds - 1 {
            for c in 0..self.n_checks() {
                let dets = vec![self.det(t, c), self.det(t + 1, c)];
                if self.p > 0.0 {
                    mechanisms.push(Mechanism { prob: self.p, dets: dets.clone(), obs: 0, meas_tag: None });
                }
                if self.p_s > 0.0 {
                    let tag = (t * self.n_checks() + c) as u32;
                    mechanisms.push(Mechanism { prob: self.p_s, dets, obs: 0, meas_tag: Some(tag) });
                }
            }
        }
        DetectorErrorModel {
            n_det: self.n_det(),
            n_obs: self.code.k,
            det_basis: vec![Some(Basis::X); self.n_det()],
            obs_basis: vec![Some(Basis::X); self.code.k],
            mechanisms,
        }
    }

    /// Samples shots. Batch `b` of 64 shots uses stream `b` of a ChaCha8
    /// generator seeded with `seed`. Without a table, classification is
    /// perfect.
    pub fn sample(&self, table: Option<&SoftReadoutTable>, shots: usize, seed: u64) -> ShotBatch {
        let n_checks = self.n_checks();
        let n_meas = self.n_meas();
        let mut out = ShotBatch::new(shots, self.n_det(), self.code.k, n_meas);
        let per_batch: Vec<Vec<ShotData>> = (0..shots.div_ceil(64))
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                let lanes = (shots - b * 64).min(64);
                (0..lanes).map(|_| self.sample_one(table, &mut rng, n_checks)).collect()
            })
            .collect();
        for (s, shot) in per_batch.into_iter().flatten().enumerate() {
            out.soft.shot_q_mut(s).copy_from_slice(&shot.q);
            for (m, &bit) in shot.ideal.iter().enumerate() {
                out.soft.ideal_bits_mut().set(s, m, bit);
            }
            let row = out.dets_mut(s);
            for d in shot.fired {
                row[d / 64] |= 1 << (d % 64);
            }
            out.set_obs(s, shot.obs);
        }
        out
    }

    fn sample_one(&self, table: Option<&SoftReadoutTable>, rng: &mut ChaCha8Rng, n_checks: usize) -> ShotData {
        let mut syndrome = vec![0u8; n_checks];
        let mut prev_reported = vec![0u8; n_checks];
        let mut obs = 0u64;
        let mut fired = Vec::new();
        let mut q_vals = Vec::with_capacity(self.n_meas());
        let mut ideal = Vec::with_capacity(self.n_meas());
        for t in 0..self.rounds {
            for q in 0..self.code.n {
                if rng.random::<f64>() < self.p {
                    for &c in &self.qubit_checks[q] {
                        syndrome[c as usize] ^= 1;
                    }
                    obs ^= self.qubit_obs[q];
                }
            }
            let last = t + 1 == self.rounds;
            for c in 0..n_checks {
                let reported = if last {
                    syndrome[c]
                } else {
                    let bit = syndrome[c] ^ (rng.random::<f64>() < self.p) as u8;
                    ideal.push(bit);
                    let q = match table {
                        Some(tab) => tab.sample_bits(bit, rng.next_u64()),
                        None => 255 * bit,
                    };
                    q_vals.push(q);
                    q >> 7
                };
                if reported != prev_reported[c] {
                    fired.push(t * n_checks + c);
                }
                prev_reported[c] = reported;
            }
        }
        ShotData { q: q_vals, ideal, fired, obs }
    }
}

struct ShotData {
    q: Vec<u8>,
    ideal: Vec<u8>,
    fired: Vec<usize>,
    obs: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_code() {
        let c = build_bb_code(1, 1, &[(0, 0)], &[(0, 0)]).unwrap();
        assert_eq!(c.n, 2);
        assert_eq!(c.k, 0);
        assert!(build_bb_code(2, 2, &[(2, 0)], &[]).is_err());
    }

    #[test]
    fn gross_code_parameters() {
        let c = BbCode::gross_72();
        assert_eq!(c.n, 72);
        assert_eq!(c.k, 12);
        assert!(c.hx.mul(&c.hz.transpose()).is_zero());
        let lx = c.x_logicals();
        assert_eq!(lx.rows(), 12);
        assert!(c.hz.mul(&lx.transpose()).is_zero());
        assert_eq!(BbCode::gross_144().k, 12);
    }

    #[test]
    fn phenomenological_counts() {
        let ph = build_bb_phenom(BbCode::gross_72(), 6, 0.001, 0.002).unwrap();
        let dem = ph.dem();
        dem.validate().unwrap();
        let data = dem.mechanisms.iter().filter(|m| m.dets.len() != 2 || m.dets[1] - m.dets[0] != 36).count();
        let flips = dem.mechanisms.iter().filter(|m| m.meas_tag.is_none()).count() - data;
        let soft = dem.mechanisms.iter().filter(|m| m.meas_tag.is_some()).count();
        // Z sector only: 36 X checks per round
        assert_eq!(data, 72 * 6);
        assert_eq!(flips, 36 * 5);
        assert_eq!(soft, 36 * 5);
        assert_eq!(dem.n_det, 36 * 6);
    }

    #[test]
    fn single_round_is_the_static_code() {
        let ph = build_bb_phenom(BbCode::gross_72(), 1, 0.01, 0.0).unwrap();
        let dem = ph.dem();
        assert_eq!(dem.mechanisms.len(), 72);
        for (q, m) in dem.mechanisms.iter().enumerate() {
            let col: Vec<u32> = (0..36).filter(|&r| ph.code.hx.get(r, q)).map(|r| r as u32).collect();
            assert_eq!(m.dets, col);
        }
    }

    #[test]
    fn measurement_error_spans_two_rounds() {
        let ph = build_bb_phenom(BbCode::gross_72(), 2, 0.01, 0.01).unwrap();
        let dem = ph.dem();
        let m = dem.mechanisms.iter().find(|m| m.meas_tag == Some(5)).unwrap();
        assert_eq!(m.dets, vec![5, 36 + 5]);
    }

    #[test]
    fn noiseless_sampling_is_silent() {
        let ph = build_bb_phenom(BbCode::gross_72(), 3, 0.0, 0.0).unwrap();
        let batch = ph.sample(None, 100, 3);
        assert!((0..100).all(|s| batch.fired(s).is_empty() && batch.obs(s) == 0));
    }
}
