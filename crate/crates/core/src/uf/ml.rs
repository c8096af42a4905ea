//! Exact maximum-likelihood reference decoders for small models.

use std::collections::HashMap;

use super::UfError;
use crate::pauli_sim::DetectorErrorModel;
use crate::Basis;

/// Largest model [`ml_oracle`] will enumerate.
pub const ML_MAX_MECHANISMS: usize = 22;

/// Enumerates every subset of mechanisms and returns the observable class
/// with the largest total probability among subsets reproducing `fired`
/// exactly. Ties go to the smaller mask, so class 0 wins any tie it is in.
pub fn ml_oracle(dem: &DetectorErrorModel, fired: &[u32]) -> Result<u64, UfError> {
    let n = dem.mechanisms.len();
    if n > ML_MAX_MECHANISMS {
        return Err(UfError::TooLarge { mechanisms: n, max: ML_MAX_MECHANISMS });
    }
    let words = dem.n_det.div_ceil(64).max(1);
    let to_bits = |dets: &[u32]| {
        let mut v = vec![0u64; words];
        for &d in dets {
            v[d as usize / 64] ^= 1 << (d % 64);
        }
        v
    };
    let target = to_bits(fired);
    let sigs: Vec<Vec<u64>> = dem.mechanisms.iter().map(|m| to_bits(&m.dets)).collect();
    let odds: Vec<f64> = dem.mechanisms.iter().map(|m| m.prob / (1.0 - m.prob)).collect();
    let mut syndrome = vec![0u64; words];
    let mut obs = 0u64;
    let mut weight = 1.0f64;
    let mut classes: HashMap<u64, f64> = HashMap::new();
    let mut active = vec![false; n];
    for step in 0u64..(1u64 << n) {
        if step > 0 {
            // Gray code: flip the mechanism at the lowest set bit of `step`
            let i = step.trailing_zeros() as usize;
            active[i] = !active[i];
            for (s, w) in syndrome.iter_mut().zip(&sigs[i]) {
                *s ^= w;
            }
            obs ^= dem.mechanisms[i].obs;
            if active[i] {
                weight *= odds[i];
            } else {
                weight /= odds[i];
            }
        }
        if syndrome == target {
            *classes.entry(obs).or_default() += weight;
        }
    }
    Ok(best_class(classes.into_iter()))
}

fn best_class(classes: impl Iterator<Item = (u64, f64)>) -> u64 {
    let mut best = (0u64, f64::NEG_INFINITY);
    for (c, p) in classes {
        if p > best.1 || (p == best.1 && c < best.0) {
            best = (c, p);
        }
    }
    if best.1 == f64::NEG_INFINITY {
        0
    } else {
        best.0
    }
}

/// Joint distribution of (syndrome, observables) restricted to one basis,
/// built by convolving mechanisms one at a time. Exact for any number of
/// mechanisms as long as the restricted detectors plus observables fit in
/// `max_bits`.
pub struct MlTable {
    det_bit: Vec<Option<u32>>,
    n_det_bits: u32,
    n_obs_bits: u32,
    obs_index: Vec<Option<u32>>,
    probs: Vec<f64>,
}

impl MlTable {
    pub fn new(dem: &DetectorErrorModel, basis: Basis, max_bits: u32) -> Result<Self, UfError> {
        let mut det_bit = vec![None; dem.n_det];
        let mut n_det_bits = 0u32;
        for (d, b) in dem.det_basis.iter().enumerate() {
            if b.is_none_or(|b| b == basis) {
                det_bit[d] = Some(n_det_bits);
                n_det_bits += 1;
            }
        }
        let mut obs_index = vec![None; dem.n_obs];
        let mut n_obs_bits = 0u32;
        for (k, b) in dem.obs_basis.iter().enumerate() {
            if b.is_none_or(|b| b == basis) {
                obs_index[k] = Some(n_obs_bits);
                n_obs_bits += 1;
            }
        }
        let bits = n_det_bits + n_obs_bits;
        if bits > max_bits {
            return Err(UfError::TooLarge { mechanisms: bits as usize, max: max_bits as usize });
        }
        let mut table = Self { det_bit, n_det_bits, n_obs_bits, obs_index, probs: vec![0.0; 1 << bits] };
        table.probs[0] = 1.0;
        let mut next = vec![0.0; table.probs.len()];
        for m in &dem.mechanisms {
            let key = table.key(&m.dets, m.obs);
            if key == 0 {
                continue;
            }
            let (p, q) = (m.prob, 1.0 - m.prob);
            for (s, out) in next.iter_mut().enumerate() {
                *out = q * table.probs[s] + p * table.probs[s ^ key];
            }
            std::mem::swap(&mut table.probs, &mut next);
        }
        Ok(table)
    }

    fn key(&self, dets: &[u32], obs: u64) -> usize {
        let mut k = 0usize;
        for &d in dets {
            if let Some(b) = self.det_bit[d as usize] {
                k ^= 1 << b;
            }
        }
        for (j, idx) in self.obs_index.iter().enumerate() {
            if let Some(i) = idx {
                if (obs >> j) & 1 == 1 {
                    k ^= 1 << (self.n_det_bits + i);
                }
            }
        }
        k
    }

    /// Most likely observable flips (as a global observable mask) given the
    /// fired global detectors.
    pub fn predict(&self, fired: &[u32]) -> u64 {
        let s = self.key(fired, 0);
        let classes = (0..1usize << self.n_obs_bits).map(|c| (c as u64, self.probs[s | (c << self.n_det_bits)]));
        let local = best_class(classes);
        let mut global = 0u64;
        for (j, idx) in self.obs_index.iter().enumerate() {
            if let Some(i) = idx {
                if (local >> i) & 1 == 1 {
                    global |= 1 << j;
                }
            }
        }
        global
    }

    /// Probability that the given syndrome occurs.
    pub fn syndrome_prob(&self, fired: &[u32]) -> f64 {
        let s = self.key(fired, 0);
        (0..1usize << self.n_obs_bits).map(|c| self.probs[s | (c << self.n_det_bits)]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli_sim::Mechanism;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dem(rng: &mut ChaCha8Rng, n_mech: usize, n_det: usize) -> DetectorErrorModel {
        let mechanisms = (0..n_mech)
            .map(|_| {
                let mut dets: Vec<u32> = (0..n_det as u32).filter(|_| rng.random::<f64>() < 0.3).collect();
                dets.dedup();
                Mechanism { prob: rng.random_range(0.01..0.3), dets, obs: rng.random_range(0..2), meas_tag: None }
            })
            .collect();
        DetectorErrorModel { n_det, n_obs: 1, det_basis: vec![None; n_det], obs_basis: vec![None], mechanisms }
    }

    #[test]
    fn trivial_cases() {
        let dem = DetectorErrorModel {
            n_det: 2,
            n_obs: 1,
            det_basis: vec![None; 2],
            obs_basis: vec![None],
            mechanisms: vec![Mechanism { prob: 0.1, dets: vec![0, 1], obs: 1, meas_tag: None }],
        };
        assert_eq!(ml_oracle(&dem, &[]).unwrap(), 0);
        assert_eq!(ml_oracle(&dem, &[0, 1]).unwrap(), 1);
        let big = DetectorErrorModel { mechanisms: vec![dem.mechanisms[0].clone(); 23], ..dem };
        assert!(matches!(ml_oracle(&big, &[]), Err(UfError::TooLarge { .. })));
    }

    #[test]
    fn oracle_and_table_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let dem = random_dem(&mut rng, 12, 6);
            let table = MlTable::new(&dem, Basis::Z, 20).unwrap();
            for s in 0..64u32 {
                let fired: Vec<u32> = (0..6).filter(|d| (s >> d) & 1 == 1).collect();
                if table.syndrome_prob(&fired) == 0.0 {
                    continue;
                }
                let p0 = table.probs[table.key(&fired, 0)];
                let p1 = table.probs[table.key(&fired, 1)];
                // near-ties may legitimately resolve differently in floating point
                if (p0 - p1).abs() > 1e-12 * (p0 + p1) {
                    assert_eq!(ml_oracle(&dem, &fired).unwrap(), table.predict(&fired));
                }
            }
        }
    }

    #[test]
    fn oracle_is_optimal_under_its_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dem = random_dem(&mut rng, 15, 5);
        let mut oracle_fail = 0;
        let mut lookup_fail = 0;
        // a competing decoder: lowest-weight explanation
        let min_weight = |fired: &[u32]| -> u64 {
            let mut best = (usize::MAX, 0u64);
            for subset in 0u32..(1 << dem.mechanisms.len()) {
                let mut syn = 0u32;
                let mut obs = 0;
                for (i, m) in dem.mechanisms.iter().enumerate() {
                    if (subset >> i) & 1 == 1 {
                        m.dets.iter().for_each(|&d| syn ^= 1 << d);
                        obs ^= m.obs;
                    }
                }
                let target = fired.iter().fold(0u32, |a, &d| a ^ (1 << d));
                if syn == target && (subset.count_ones() as usize) < best.0 {
                    best = (subset.count_ones() as usize, obs);
                }
            }
            best.1
        };
        let mut cache: HashMap<Vec<u32>, (u64, u64)> = HashMap::new();
        for _ in 0..10_000 {
            let mut syn = [false; 5];
            let mut obs = 0;
            for m in &dem.mechanisms {
                if rng.random::<f64>() < m.prob {
                    m.dets.iter().for_each(|&d| syn[d as usize] ^= true);
                    obs ^= m.obs;
                }
            }
            let fired: Vec<u32> = (0..5).filter(|&d| syn[d as usize]).collect();
            let (a, b) = *cache.entry(fired.clone()).or_insert_with(|| (ml_oracle(&dem, &fired).unwrap(), min_weight(&fired)));
            oracle_fail += (a != obs) as usize;
            lookup_fail += (b != obs) as usize;
        }
        // both decoders see identical samples, so sampling noise is shared
        assert!(oracle_fail <= lookup_fail, "{oracle_fail} > {lookup_fail}");
    }
}
