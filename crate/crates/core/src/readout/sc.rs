//! Dispersive (superconducting) readout.
//!
//! The integrated, normalised readout signal for a qubit in `|0>` is a
//! Gaussian centred at `+1`; for `|1>` it is a Gaussian centred at `-1`
//! mixed with the smeared contribution of qubits that decay part-way through
//! the measurement window. Both have variance `2 / SNR`.

use std::f64::consts::PI;

use libm::erfc;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use super::quad;
use super::ReadoutError;

/// Parameters of the dispersive readout response.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScReadoutParams {
    snr: f64,
    tau_m: f64,
    t1: f64,
}

impl ScReadoutParams {
    /// `t1` may be `f64::INFINITY` to switch amplitude damping off.
    pub fn new(snr: f64, tau_m: f64, t1: f64) -> Result<Self, ReadoutError> {
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(ReadoutError::InvalidParameter(format!("snr must be > 0, got {snr}")));
        }
        if !(tau_m > 0.0 && tau_m.is_finite()) {
            return Err(ReadoutError::InvalidParameter(format!("tau_m must be > 0, got {tau_m}")));
        }
        if !(t1 > 0.0) {
            return Err(ReadoutError::InvalidParameter(format!("t1 must be > 0, got {t1}")));
        }
        Ok(Self { snr, tau_m, t1 })
    }

    /// Builds the parameters from a characteristic fluctuation time,
    /// `SNR = tau_m / (2 tau_f)`.
    pub fn from_tau_f(tau_f: f64, tau_m: f64, t1: f64) -> Result<Self, ReadoutError> {
        if !(tau_f > 0.0) {
            return Err(ReadoutError::InvalidParameter(format!("tau_f must be > 0, got {tau_f}")));
        }
        Self::new(tau_m / (2.0 * tau_f), tau_m, t1)
    }

    /// Parameters whose short-measurement soft flip probability equals `p_s`.
    pub fn for_target_ps(p_s: f64, tau_m: f64, t1: f64) -> Result<Self, ReadoutError> {
        Self::new(snr_for_target_ps(p_s)?, tau_m, t1)
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    pub fn tau_m(&self) -> f64 {
        self.tau_m
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    /// Fluctuation time implied by the SNR and measurement time.
    pub fn tau_f(&self) -> f64 {
        self.tau_m / (2.0 * self.snr)
    }

    /// `tau_m / T1`; zero when damping is off.
    pub fn decay_ratio(&self) -> f64 {
        if self.t1.is_infinite() {
            0.0
        } else {
            self.tau_m / self.t1
        }
    }

    /// Standard deviation of either readout Gaussian.
    pub fn sigma(&self) -> f64 {
        (2.0 / self.snr).sqrt()
    }
}

/// Readout density for the given ideal state (`0` or `1`).
pub fn sc_pdf(mu: f64, state: u8, params: &ScReadoutParams) -> f64 {
    let s = params.snr;
    let norm = (s / (4.0 * PI)).sqrt();
    if state == 0 {
        return norm * (-0.25 * s * (mu - 1.0) * (mu - 1.0)).exp();
    }
    let r = params.decay_ratio();
    let undecayed = norm * (-0.25 * s * (mu + 1.0) * (mu + 1.0) - r).exp();
    if r == 0.0 {
        return undecayed;
    }
    let shift = r / (2.0 * s.sqrt());
    let half_root = (s / 4.0).sqrt();
    let a0 = shift + half_root * (mu - 1.0);
    let a1 = shift + half_root * (mu + 1.0);
    // erfc(a0) - erfc(a1) with a0 < a1; reflect when both sit in the
    // saturated left tail to avoid cancelling 2 - 2.
    let diff = if a1 < 0.0 { erfc(-a1) - erfc(-a0) } else { erfc(a0) - erfc(a1) };
    let decayed = diff * 0.25 * r * (r * r / (4.0 * s) + 0.5 * r * (mu - 1.0)).exp();
    undecayed + decayed
}

/// Soft flip probability of the dispersive readout.
///
/// Uses the closed form `erfc(sqrt(SNR)/2) / 2` when `tau_m / T1 < 0.05` and
/// the numeric overlap integral otherwise.
pub fn sc_soft_flip_prob(params: &ScReadoutParams) -> f64 {
    if params.decay_ratio() < 0.05 {
        closed_form_ps(params.snr)
    } else {
        sc_overlap(params)
    }
}

fn closed_form_ps(snr: f64) -> f64 {
    0.5 * erfc(snr.sqrt() / 2.0)
}

/// SNR for which the short-measurement soft flip probability equals `p_s`.
pub fn snr_for_target_ps(p_s: f64) -> Result<f64, ReadoutError> {
    if !(p_s > 0.0 && p_s < 0.5) {
        return Err(ReadoutError::TargetOutOfRange(p_s));
    }
    // solve erfc(x) = 2 p_s for x = sqrt(snr)/2, erfc decreasing in x.
    let target = 2.0 * p_s;
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if erfc(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok(4.0 * x * x)
}

/// Half-width of the integration window around the two centroids.
pub(crate) fn window(params: &ScReadoutParams) -> (f64, f64) {
    let w = 1.0 + 40.0 * params.sigma();
    (-w, w)
}

/// Average misclassification probability from the overlap of the two
/// densities, `(p_S|0 + p_S|1) / 2`.
pub fn sc_overlap(params: &ScReadoutParams) -> f64 {
    let (lo, hi) = window(params);
    let f0 = |mu: f64| sc_pdf(mu, 0, params);
    let f1 = |mu: f64| sc_pdf(mu, 1, params);
    let favours_one = |mu: f64| u32::from(f1(mu) >= f0(mu));
    let segments = quad::label_segments(&favours_one, lo, hi, 20_000);
    let panel = params.sigma() / 4.0;
    let mut flip0 = 0.0;
    let mut flip1 = 0.0;
    for (a, b, label) in segments {
        if label == 1 {
            flip0 += quad::integrate(&f0, a, b, panel, 1e-14);
        } else {
            flip1 += quad::integrate(&f1, a, b, panel, 1e-14);
        }
    }
    0.5 * (flip0 + flip1)
}

/// Draws one readout value for the given ideal state.
///
/// A `|1>` qubit decays at an exponentially distributed time `t`; when that
/// happens inside the window the signal mean is `1 - 2 t / tau_m`.
pub fn sc_sample<R: Rng + ?Sized>(state: u8, params: &ScReadoutParams, rng: &mut R) -> f64 {
    let noise: f64 = StandardNormal.sample(rng);
    let noise = noise * params.sigma();
    if state == 0 {
        return 1.0 + noise;
    }
    let r = params.decay_ratio();
    if r == 0.0 {
        return -1.0 + noise;
    }
    // decay time in units of tau_m
    let t = Exp::new(r).expect("positive rate").sample(rng);
    let mean = if t >= 1.0 { -1.0 } else { 1.0 - 2.0 * t };
    mean + noise
}
