//! Fluorescence (neutral-atom) readout with a photon-counting detector.
//!
//! The bright state scatters at `eta * r0` on top of the background `r_bg`
//! and may go dark at rate `r_bd` during the window; the dark state sees only
//! background and may turn bright at rate `r_db`. Counts are Poisson given the
//! integrated rate.

use libm::lgamma;
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};

use super::quad;
use super::ReadoutError;

/// Parameters of the photon-count readout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NaReadoutParams {
    pub eta: f64,
    pub r0: f64,
    pub r_bg: f64,
    pub r_bd: f64,
    pub r_db: f64,
    pub tau_m: f64,
    pub mu_max: u32,
}

impl NaReadoutParams {
    /// Validates the rates and picks the default truncation bound.
    pub fn new(eta: f64, r0: f64, r_bg: f64, r_bd: f64, r_db: f64, tau_m: f64) -> Result<Self, ReadoutError> {
        let mut params = Self { eta, r0, r_bg, r_bd, r_db, tau_m, mu_max: 0 };
        params.validate()?;
        params.mu_max = params.default_mu_max();
        Ok(params)
    }

    /// Reference rates: `eta = 0.1%`, `R0 = 1e7/s`, `R_bg = 1e3/s`,
    /// `R_bd = 960/s`, `R_db = 2/s`, `tau_m = 100 us`.
    pub fn reference() -> Self {
        Self::new(1e-3, 1e7, 1e3, 960.0, 2.0, 100e-6).expect("reference parameters are valid")
    }

    pub fn with_tau_m(self, tau_m: f64) -> Result<Self, ReadoutError> {
        Self::new(self.eta, self.r0, self.r_bg, self.r_bd, self.r_db, tau_m)
    }

    pub fn with_eta(self, eta: f64) -> Result<Self, ReadoutError> {
        Self::new(eta, self.r0, self.r_bg, self.r_bd, self.r_db, self.tau_m)
    }

    pub fn with_mu_max(mut self, mu_max: u32) -> Self {
        self.mu_max = mu_max;
        self
    }

    fn validate(&self) -> Result<(), ReadoutError> {
        let bad = |msg: String| Err(ReadoutError::InvalidParameter(msg));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta must lie in (0, 1], got {}", self.eta));
        }
        for (name, v) in [("r_bg", self.r_bg), ("r_bd", self.r_bd), ("r_db", self.r_db)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite rate >= 0, got {v}"));
            }
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return bad(format!("r0 must be > 0, got {}", self.r0));
        }
        if !(self.tau_m > 0.0 && self.tau_m.is_finite()) {
            return bad(format!("tau_m must be > 0, got {}", self.tau_m));
        }
        let a = self.eta * self.r0;
        if a == self.r_db {
            return Err(ReadoutError::Singular(format!("eta*r0 == r_db == {a}")));
        }
        if a == -self.r_bd {
            return Err(ReadoutError::Singular(format!("eta*r0 == -r_bd == {a}")));
        }
        Ok(())
    }

    /// Mean count of a bright atom that stays bright, `(eta r0 + r_bg) tau_m`.
    pub fn lambda_bright(&self) -> f64 {
        (self.eta * self.r0 + self.r_bg) * self.tau_m
    }

    /// Mean count of a dark atom that stays dark, `r_bg tau_m`.
    pub fn lambda_dark(&self) -> f64 {
        self.r_bg * self.tau_m
    }

    /// `ceil(lambda + 12 sqrt(lambda)) + 10` for the bright mean.
    pub fn default_mu_max(&self) -> u32 {
        let lb = self.lambda_bright();
        (lb + 12.0 * lb.sqrt()).ceil() as u32 + 10
    }
}

fn ln_factorial(k: u32) -> f64 {
    lgamma(k as f64 + 1.0)
}

/// Poisson probability of `k` events at mean `x`.
fn pois(k: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let ln = k as f64 * x.ln() - x - ln_factorial(k);
    if ln < -700.0 {
        0.0
    } else {
        ln.exp()
    }
}

fn pois_cdf(mu: u32, x: f64) -> f64 {
    (0..=mu).map(|k| pois(k, x)).sum::<f64>().min(1.0)
}

fn pois_upper(mu: u32, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut k = mu + 1;
    loop {
        let term = pois(k, x);
        total += term;
        // past the mode the terms fall off at least geometrically
        if (k as f64 > x && term <= total * 1e-17) || k > mu + 100_000 {
            break;
        }
        k += 1;
    }
    total
}

/// `F(mu; x1) - F(mu; x2)` for `0 <= x1 <= x2`, with `F` the Poisson CDF.
/// Uses the upper tails when both CDFs are close to one.
fn cdf_diff(mu: u32, x1: f64, x2: f64) -> f64 {
    if mu as f64 >= x2 {
        (pois_upper(mu, x2) - pois_upper(mu, x1)).max(0.0)
    } else {
        (pois_cdf(mu, x1) - pois_cdf(mu, x2)).max(0.0)
    }
}

/// Probability of detecting `mu` photons from the dark (`state = 0`) or
/// bright (`state = 1`) state.
pub fn na_pmf(mu: u32, state: u8, params: &NaReadoutParams) -> f64 {
    let a = params.eta * params.r0;
    let b = params.r_bg;
    let t = params.tau_m;
    let m = mu as f64;
    if state == 1 {
        let c = params.r_bd;
        let stay = (-c * t).exp() * pois(mu, (a + b) * t);
        if c == 0.0 {
            return stay;
        }
        let x1 = (a + c) * b * t / a;
        let x2 = (a + c) * (a + b) * t / a;
        let ln_pre = (c / (a + c)).ln() + m * (a / (a + c)).ln() + c * b * t / a;
        stay + ln_pre.exp() * cdf_diff(mu, x1, x2)
    } else {
        let e = params.r_db;
        let stay = (-e * t).exp() * pois(mu, b * t);
        if e == 0.0 {
            return stay;
        }
        if a < e {
            return stay + dark_switch_quadrature(mu, params);
        }
        let y1 = (a - e) * b * t / a;
        let y2 = (a - e) * (a + b) * t / a;
        let ln_pre = (e / (a - e)).ln() + m * (a / (a - e)).ln() - e * t * (a + b) / a;
        stay + ln_pre.exp() * cdf_diff(mu, y1, y2)
    }
}

/// Dark-to-bright contribution by direct integration over the switching time;
/// only used when `r_db > eta r0`, where the closed form alternates in sign.
fn dark_switch_quadrature(mu: u32, params: &NaReadoutParams) -> f64 {
    let a = params.eta * params.r0;
    let b = params.r_bg;
    let e = params.r_db;
    let t = params.tau_m;
    let f = |s: f64| e * (-e * s).exp() * pois(mu, b * s + (a + b) * (t - s));
    quad::integrate(&f, 0.0, t, t / 64.0, 1e-15)
}

/// Draws one photon count for the given ideal state.
pub fn na_sample<R: Rng + ?Sized>(state: u8, params: &NaReadoutParams, rng: &mut R) -> u32 {
    let a = params.eta * params.r0;
    let b = params.r_bg;
    let t = params.tau_m;
    let (rate_start, rate_end, switch) = if state == 1 { (a + b, b, params.r_bd) } else { (b, a + b, params.r_db) };
    let s = if switch > 0.0 { Exp::new(switch).expect("positive rate").sample(rng) } else { f64::INFINITY };
    let mean = if s >= t { rate_start * t } else { rate_start * s + rate_end * (t - s) };
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u32
}
