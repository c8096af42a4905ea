//! Logical error statistics, Λ fits and qubit footprints.

use std::fmt;

use thiserror::Error;

use crate::Basis;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("logical error probability {0} is outside [0, 0.5)")]
    InformationFree(f64),
    #[error("rounds must be at least 1")]
    NoRounds,
    #[error("fit needs at least two distinct distances, got {0}")]
    TooFewPoints(usize),
    #[error("per-round rate at d={d} is {eps}, must be positive")]
    NonPositive { d: u32, eps: f64 },
    #[error("Λ = {0} does not suppress errors, no distance reaches the target")]
    Unreachable(f64),
    #[error("failures {failures} exceed shots {shots}")]
    Counts { failures: u64, shots: u64 },
}

/// Logical error probability after `t` rounds at per-round rate `eps`.
pub fn logical_from_per_round(eps: f64, t: u32) -> f64 {
    // 1 - (1 - 2 eps)^t, written to keep precision for tiny eps
    -0.5 * (t as f64 * (-2.0 * eps).ln_1p()).exp_m1()
}

/// Per-round logical error rate from the probability `p_l` observed after
/// `t` rounds.
pub fn per_round_rate(p_l: f64, t: u32) -> Result<f64, AnalysisError> {
    if t == 0 {
        return Err(AnalysisError::NoRounds);
    }
    if !(0.0..0.5).contains(&p_l) {
        return Err(AnalysisError::InformationFree(p_l));
    }
    Ok(-0.5 * ((-2.0 * p_l).ln_1p() / t as f64).exp_m1())
}

/// `d eps / d p_l` of [`per_round_rate`].
pub fn per_round_rate_slope(p_l: f64, t: u32) -> f64 {
    let t = t as f64;
    (1.0 - 2.0 * p_l).powf(1.0 / t - 1.0) / t
}

fn binom_loglik(k: u64, n: u64, p: f64) -> f64 {
    let (k, n) = (k as f64, n as f64);
    let a = if k > 0.0 { k * p.ln() } else { 0.0 };
    let b = if n - k > 0.0 { (n - k) * (-p).ln_1p() } else { 0.0 };
    a + b
}

/// Bounds of the set of binomial success probabilities whose likelihood is
/// within a factor of 10 of the maximum.
pub fn likelihood_interval(failures: u64, shots: u64) -> Result<(f64, f64), AnalysisError> {
    if failures > shots {
        return Err(AnalysisError::Counts { failures, shots });
    }
    if shots == 0 {
        return Ok((0.0, 1.0));
    }
    let p_hat = failures as f64 / shots as f64;
    let top = binom_loglik(failures, shots, p_hat);
    let inside = |p: f64| top - binom_loglik(failures, shots, p) <= std::f64::consts::LN_10;
    // bisection between a point inside and one outside the interval
    let edge = |mut inner: f64, mut outer: f64| {
        for _ in 0..2000 {
            let mid = 0.5 * (inner + outer);
            if mid == inner || mid == outer || (outer - inner).abs() <= 1e-13 * inner.abs().max(outer.abs()) {
                break;
            }
            if inside(mid) {
                inner = mid;
            } else {
                outer = mid;
            }
        }
        inner
    };
    let lo = if failures == 0 { 0.0 } else { edge(p_hat, 0.0) };
    let hi = if failures == shots { 1.0 } else { edge(p_hat, 1.0) };
    Ok((lo, hi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogicalStats {
    pub shots: u64,
    pub failures: u64,
    pub p_l: f64,
    pub p_l_lo: f64,
    pub p_l_hi: f64,
}

impl LogicalStats {
    pub fn new(failures: u64, shots: u64) -> Result<Self, AnalysisError> {
        let (lo, hi) = likelihood_interval(failures, shots)?;
        let p_l = if shots == 0 { 0.0 } else { failures as f64 / shots as f64 };
        Ok(Self { shots, failures, p_l, p_l_lo: lo, p_l_hi: hi })
    }

    /// Per-round rate and its first-order uncertainty, taking half the
    /// likelihood interval as the uncertainty of `p_l`.
    pub fn per_round(&self, t: u32) -> Result<(f64, f64), AnalysisError> {
        let eps = per_round_rate(self.p_l, t)?;
        let dp = 0.5 * (self.p_l_hi - self.p_l_lo);
        Ok((eps, per_round_rate_slope(self.p_l, t) * dp))
    }
}

/// One point of a Λ fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsPoint {
    pub d: u32,
    pub eps: f64,
    /// Uncertainty of `eps`; zero means unknown, and an all-zero set is fit
    /// unweighted.
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaFit {
    pub lambda: f64,
    pub lambda_err: f64,
    /// Offset of `ln eps = ln p0 - x ln Λ` with `x = (d + 1) / 2`.
    pub p0: f64,
    pub basis: Option<Basis>,
    pub points: Vec<EpsPoint>,
}

impl LambdaFit {
    /// Per-round rate the fit predicts at distance `d`.
    pub fn eps_at(&self, d: u32) -> f64 {
        self.p0 * self.lambda.powf(-((d as f64 + 1.0) / 2.0))
    }
}

impl fmt::Display for LambdaFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let basis = self.basis.map_or("avg".to_string(), |b| b.to_string());
        let used: Vec<String> = self.points.iter().map(|p| p.d.to_string()).collect();
        writeln!(f, "lambda={}", self.lambda)?;
        writeln!(f, "lambda_err={}", self.lambda_err)?;
        writeln!(f, "p0={}", self.p0)?;
        writeln!(f, "basis={basis}")?;
        write!(f, "points-used={}", used.join(","))
    }
}

/// Weighted least squares of `ln eps` against `x = (d + 1) / 2`.
pub fn fit_lambda(points: &[EpsPoint], basis: Option<Basis>) -> Result<LambdaFit, AnalysisError> {
    for p in points {
        if !(p.eps > 0.0) {
            return Err(AnalysisError::NonPositive { d: p.d, eps: p.eps });
        }
    }
    let mut ds: Vec<u32> = points.iter().map(|p| p.d).collect();
    ds.sort_unstable();
    ds.dedup();
    if ds.len() < 2 {
        return Err(AnalysisError::TooFewPoints(ds.len()));
    }
    let weighted = points.iter().all(|p| p.sigma > 0.0);
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let x = (p.d as f64 + 1.0) / 2.0;
        let y = p.eps.ln();
        // sigma of ln eps
        let w = if weighted { (p.eps / p.sigma).powi(2) } else { 1.0 };
        s += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let delta = s * sxx - sx * sx;
    let slope = (s * sxy - sx * sy) / delta;
    let intercept = (sxx * sy - sx * sxy) / delta;
    let slope_var = if weighted {
        s / delta
    } else if points.len() > 2 {
        let rss: f64 = points
            .iter()
            .map(|p| {
                let x = (p.d as f64 + 1.0) / 2.0;
                (p.eps.ln() - intercept - slope * x).powi(2)
            })
            .sum();
        rss / (points.len() as f64 - 2.0) * s / delta
    } else {
        0.0
    };
    let lambda = (-slope).exp();
    Ok(LambdaFit { lambda, lambda_err: lambda * slope_var.sqrt(), p0: intercept.exp(), basis, points: points.to_vec() })
}

/// Average of the X- and Z-basis Λ with the uncertainty of the mean.
pub fn average_lambda(x: &LambdaFit, z: &LambdaFit) -> (f64, f64) {
    (0.5 * (x.lambda + z.lambda), 0.5 * x.lambda_err.hypot(z.lambda_err))
}

/// Builds fit points from per-distance statistics. Zero-failure cells and,
/// unless `include_d3`, distance 3 are left out; every exclusion of a
/// zero-failure cell is reported in the returned warnings.
pub fn points_from_stats(cells: &[(u32, u32, LogicalStats)], include_d3: bool) -> Result<(Vec<EpsPoint>, Vec<String>), AnalysisError> {
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for &(d, t, stats) in cells {
        if d == 3 && !include_d3 {
            continue;
        }
        if stats.failures == 0 {
            warnings.push(format!("d={d}: no failures in {} shots, excluded from the fit", stats.shots));
            continue;
        }
        let (eps, sigma) = stats.per_round(t)?;
        points.push(EpsPoint { d, eps, sigma });
    }
    Ok((points, warnings))
}

/// Logical error probability targets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    KiloQuop,
    MegaQuop,
    Custom(f64),
}

impl Target {
    pub fn p_l(self) -> f64 {
        match self {
            Target::KiloQuop => 1e-3,
            Target::MegaQuop => 1e-6,
            Target::Custom(p) => p,
        }
    }
}

/// Largest distance [`footprint`] will consider.
pub const FOOTPRINT_MAX_D: u32 = 499;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Footprint {
    Found {
        d_min: u32,
        n_qubits: u64,
    },
    /// No odd distance up to [`FOOTPRINT_MAX_D`] meets the target.
    Overflow,
}

/// Qubits of a rotated surface-code patch of distance `d`.
pub fn surface_qubits(d: u32) -> u64 {
    2 * (d as u64).pow(2) - 1
}

/// Smallest odd distance whose predicted logical error probability over
/// `T = d` rounds is below the target.
pub fn footprint(lambda: f64, p0: f64, target: Target) -> Result<Footprint, AnalysisError> {
    if !(lambda > 1.0) {
        return Err(AnalysisError::Unreachable(lambda));
    }
    let goal = target.p_l();
    for d in (3..=FOOTPRINT_MAX_D).step_by(2) {
        let eps = (p0 * lambda.powf(-((d as f64 + 1.0) / 2.0))).min(0.5);
        if logical_from_per_round(eps, d) < goal {
            return Ok(Footprint::Found { d_min: d, n_qubits: surface_qubits(d) });
        }
    }
    Ok(Footprint::Overflow)
}
