//! Soft measurement models.
//!
//! A measurement of a qubit whose ideal outcome is `j` produces an analog
//! value `mu` drawn from a platform density `f_j`. The decoder only sees the
//! posterior `P(1|mu) = f_1 / (f_0 + f_1)` (equal priors), quantized to an
//! unsigned byte.

mod batch;
mod na;
pub(crate) mod quad;
mod sc;
mod table;

pub use batch::{sample_soft, PackedBits, SoftShotBatch};
pub use na::{na_pmf, na_sample, NaReadoutParams};
pub use sc::{sc_overlap, sc_pdf, sc_sample, sc_soft_flip_prob, snr_for_target_ps, ScReadoutParams};
pub use table::{AliasTable, SoftReadoutTable};

use rand::Rng;
use thiserror::Error;

use crate::prob::PROB_EPS;

#[derive(Debug, Error)]
pub enum ReadoutError {
    #[error("invalid readout parameter: {0}")]
    InvalidParameter(String),
    #[error("singular readout parameters: {0}")]
    Singular(String),
    #[error("target soft flip probability {0} outside (0, 0.5)")]
    TargetOutOfRange(f64),
    #[error("both readout densities vanish at mu = {0}")]
    ZeroDensity(f64),
    #[error("target soft flip probability {target} is not reachable (best {best})")]
    Unreachable { target: f64, best: f64 },
    #[error("malformed soft batch: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Quantized posterior `P(1|mu) ~ q / 255`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SoftValue {
    pub q: u8,
}

impl SoftValue {
    pub fn new(q: u8) -> Self {
        Self { q }
    }

    /// Classification outcome; ties at one half go to 1.
    #[inline]
    pub fn hardened(self) -> u8 {
        (self.q >= 128) as u8
    }

    #[inline]
    pub fn posterior(self) -> f64 {
        self.q as f64 / 255.0
    }

    /// `min(q, 255 - q) / 255`.
    #[inline]
    pub fn flip_prob(self) -> f64 {
        ps_from_q(self.q)
    }
}

/// Soft flip probability represented by an 8-bit posterior.
#[inline]
pub fn ps_from_q(q: u8) -> f64 {
    q.min(255 - q) as f64 / 255.0
}

/// Rounds `p1 * 255` half-up.
#[inline]
pub fn quantize(p1: f64) -> SoftValue {
    let q = (p1.clamp(0.0, 1.0) * 255.0 + 0.5).floor();
    SoftValue { q: q as u8 }
}

/// Readout response of one platform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReadoutModel {
    Sc(ScReadoutParams),
    Na(NaReadoutParams),
}

impl ReadoutModel {
    /// Density (SC) or mass (NA, `mu` rounded to the nearest count) of
    /// outcome `mu` for ideal state `state`.
    pub fn density(&self, mu: f64, state: u8) -> f64 {
        match self {
            ReadoutModel::Sc(p) => sc_pdf(mu, state, p),
            ReadoutModel::Na(p) => {
                if mu < -0.5 {
                    0.0
                } else {
                    na_pmf(mu.round() as u32, state, p)
                }
            }
        }
    }

    /// Equal-prior posterior `P(1|mu)`, clamped to `[1e-12, 1 - 1e-12]`.
    pub fn posterior(&self, mu: f64) -> Result<f64, ReadoutError> {
        posterior_from(self.density(mu, 0), self.density(mu, 1), mu)
    }

    /// Draws an analog readout value.
    pub fn sample_mu<R: Rng + ?Sized>(&self, state: u8, rng: &mut R) -> f64 {
        match self {
            ReadoutModel::Sc(p) => sc_sample(state, p, rng),
            ReadoutModel::Na(p) => na_sample(state, p, rng) as f64,
        }
    }

    /// Average misclassification probability from the density overlap.
    pub fn overlap_flip_prob(&self) -> f64 {
        match self {
            ReadoutModel::Sc(p) => sc_overlap(p),
            ReadoutModel::Na(p) => {
                let mut flip = 0.0;
                for mu in 0..=p.mu_max {
                    let f0 = na_pmf(mu, 0, p);
                    let f1 = na_pmf(mu, 1, p);
                    flip += if f1 >= f0 { f0 } else { f1 };
                }
                0.5 * flip
            }
        }
    }
}

pub(crate) fn posterior_from(f0: f64, f1: f64, mu: f64) -> Result<f64, ReadoutError> {
    let total = f0 + f1;
    if !(total > 0.0) {
        return Err(ReadoutError::ZeroDensity(mu));
    }
    Ok((f1 / total).clamp(PROB_EPS, 1.0 - PROB_EPS))
}
