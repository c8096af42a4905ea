//! Quantized readout distributions and constant-time sampling.

use rand::Rng;

use super::{na_pmf, sc_pdf};
use super::{quad, quantize, ReadoutError, ReadoutModel};

/// Walker/Vose alias table over 256 outcomes.
///
/// One `u64` draw selects a column from its top 8 bits and compares the low
/// 56 bits against the column threshold.
#[derive(Clone, Debug)]
pub struct AliasTable {
    threshold: [u64; 256],
    alias: [u8; 256],
}

const FRACTION_BITS: u32 = 56;

impl AliasTable {
    pub fn new(weights: &[f64; 256]) -> Self {
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0, "alias table needs positive total weight");
        let scaled: Vec<f64> = weights.iter().map(|w| w / total * 256.0).collect();
        let mut prob = scaled.clone();
        let mut alias = [0u8; 256];
        let mut small = Vec::with_capacity(256);
        let mut large = Vec::with_capacity(256);
        for (i, &p) in prob.iter().enumerate() {
            if p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l as u8;
            prob[l] -= 1.0 - prob[s];
            if prob[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are full columns up to rounding
        for i in small.into_iter().chain(large) {
            prob[i] = 1.0;
            alias[i] = i as u8;
        }
        let one = (1u64 << FRACTION_BITS) as f64;
        let mut threshold = [0u64; 256];
        for i in 0..256 {
            threshold[i] = if prob[i] >= 1.0 { u64::MAX } else { (prob[i] * one) as u64 };
        }
        Self { threshold, alias }
    }

    #[inline]
    pub fn sample_bits(&self, bits: u64) -> u8 {
        let col = (bits >> FRACTION_BITS) as usize;
        let frac = bits & ((1u64 << FRACTION_BITS) - 1);
        if frac < self.threshold[col] {
            col as u8
        } else {
            self.alias[col]
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u8 {
        self.sample_bits(rng.next_u64())
    }
}

/// Distribution of the quantized posterior `q` for each ideal state.
#[derive(Clone, Debug)]
pub struct SoftReadoutTable {
    /// `probs[j][q] = P(q | j)`.
    probs: [[f64; 256]; 2],
    alias: [AliasTable; 2],
}

impl SoftReadoutTable {
    /// Integrates the platform densities over the regions that quantize to
    /// each `q`.
    pub fn build(model: &ReadoutModel) -> Result<Self, ReadoutError> {
        let mut probs = [[0.0f64; 256]; 2];
        match model {
            ReadoutModel::Sc(p) => {
                let (lo, hi) = super::sc::window(p);
                let label = |mu: f64| match model.posterior(mu) {
                    Ok(post) => quantize(post).q as u32,
                    Err(_) => 0,
                };
                let segments = quad::label_segments(&label, lo, hi, 20_000);
                let panel = p.sigma() / 4.0;
                for (a, b, q) in segments {
                    for (state, row) in probs.iter_mut().enumerate() {
                        row[q as usize] += quad::integrate(&|m| sc_pdf(m, state as u8, p), a, b, panel, 1e-15);
                    }
                }
            }
            ReadoutModel::Na(p) => {
                for mu in 0..=p.mu_max {
                    let q = quantize(model.posterior(mu as f64)?).q as usize;
                    probs[0][q] += na_pmf(mu, 0, p);
                    probs[1][q] += na_pmf(mu, 1, p);
                }
            }
        }
        for row in probs.iter_mut() {
            let total: f64 = row.iter().sum();
            if !(total > 0.0) {
                return Err(ReadoutError::InvalidParameter("readout table has no mass".into()));
            }
            row.iter_mut().for_each(|v| *v /= total);
        }
        let alias = [AliasTable::new(&probs[0]), AliasTable::new(&probs[1])];
        Ok(Self { probs, alias })
    }

    /// `P(q | state)`.
    pub fn prob(&self, state: u8, q: u8) -> f64 {
        self.probs[state as usize][q as usize]
    }

    /// Draws a quantized posterior for ideal outcome `state` from 64 random
    /// bits.
    #[inline]
    pub fn sample_bits(&self, state: u8, bits: u64) -> u8 {
        self.alias[state as usize].sample_bits(bits)
    }

    /// Probability that a measurement is misclassified, averaged over both
    /// ideal outcomes. Equals the mean of `min(q, 255 - q) / 255` up to
    /// quantization.
    pub fn mean_flip_prob(&self) -> f64 {
        let flip0: f64 = self.probs[0][128..].iter().sum();
        let flip1: f64 = self.probs[1][..128].iter().sum();
        0.5 * (flip0 + flip1)
    }

    /// Expected `min(q, 255 - q) / 255` over both ideal outcomes.
    pub fn mean_soft_ps(&self) -> f64 {
        let mut total = 0.0;
        for row in &self.probs {
            for (q, &p) in row.iter().enumerate() {
                total += 0.5 * p * super::ps_from_q(q as u8);
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::readout::{sc_soft_flip_prob, NaReadoutParams, ScReadoutParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn alias_reproduces_weights() {
        let mut w = [0.0; 256];
        w[0] = 0.5;
        w[3] = 0.25;
        w[255] = 0.125;
        w[100] = 0.125;
        let table = AliasTable::new(&w);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 400_000;
        let mut counts = [0usize; 256];
        for _ in 0..n {
            counts[table.sample(&mut rng) as usize] += 1;
        }
        for i in 0..256 {
            let expect = w[i] * n as f64;
            let sigma = expect.sqrt().max(1.0);
            assert!((counts[i] as f64 - expect).abs() < 5.0 * sigma, "{i}: {} vs {expect}", counts[i]);
        }
    }

    #[test]
    fn sc_table_flip_matches_closed_form() {
        let p = ScReadoutParams::new(4.0, 500e-9, f64::INFINITY).unwrap();
        let table = SoftReadoutTable::build(&ReadoutModel::Sc(p)).unwrap();
        assert!((table.mean_flip_prob() - sc_soft_flip_prob(&p)).abs() < 1e-6);
        let sum: f64 = (0..=255u8).map(|q| table.prob(1, q)).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        // symmetric model gives mirrored tables
        for q in 0..=255u8 {
            assert!((table.prob(0, q) - table.prob(1, 255 - q)).abs() < 1e-9);
        }
    }

    #[test]
    fn table_matches_slow_sampler() {
        // quantize(posterior(mu)) with mu from the generative model must follow
        // the integrated table
        let models = [
            ReadoutModel::Sc(ScReadoutParams::new(3.0, 500e-9, 5e-6).unwrap()),
            ReadoutModel::Na(NaReadoutParams::reference().with_eta(0.01).unwrap()),
        ];
        for model in models {
            let table = SoftReadoutTable::build(&model).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let n = 200_000usize;
            for state in 0..2u8 {
                let mut counts = [0usize; 256];
                for _ in 0..n {
                    let mu = model.sample_mu(state, &mut rng);
                    counts[quantize(model.posterior(mu).unwrap()).q as usize] += 1;
                }
                // compare in 16 coarse bins to keep the expected counts large
                for bin in 0..16 {
                    let c: usize = counts[bin * 16..bin * 16 + 16].iter().sum();
                    let expect: f64 = (bin * 16..bin * 16 + 16).map(|q| table.prob(state, q as u8)).sum::<f64>() * n as f64;
                    let sigma = expect.sqrt().max(1.0);
                    assert!((c as f64 - expect).abs() < 5.0 * sigma, "{model:?} state {state} bin {bin}: {c} vs {expect}");
                }
            }
        }
    }
}
