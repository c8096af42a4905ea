//! Circuit-level noise models.
//!
//! Superconducting devices use an SI1000-style parametrisation in terms of
//! the two-qubit depolarising probability `p`, optionally with idling noise
//! derived from operation durations. Neutral atoms use a Z-biased model.
//! Every model also fixes the soft readout response through a target
//! classification error `p_S`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::prob::xor_prob;
use crate::readout::{snr_for_target_ps, NaReadoutParams, ReadoutError, ReadoutModel, ScReadoutParams};

/// Measurement time at which SC channel probabilities are calibrated.
pub const SC_REFERENCE_TAU_M: f64 = 500e-9;
/// Readout time at which the NA detection efficiency is calibrated.
pub const NA_REFERENCE_TAU_M: f64 = 100e-6;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("invalid noise configuration: {0}")]
    InvalidConfig(String),
    #[error("unphysical coherence times: T1 = {t1}, T2 = {t2} (need T2 <= 2 T1)")]
    Unphysical { t1: f64, t2: f64 },
    #[error(transparent)]
    Readout(#[from] ReadoutError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Platform {
    Sc,
    Na,
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Platform::Sc => "SC",
            Platform::Na => "NA",
        })
    }
}

impl FromStr for Platform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sc" | "superconducting" => Ok(Platform::Sc),
            "na" | "neutral-atom" | "neutral_atom" => Ok(Platform::Na),
            other => Err(format!("unknown platform '{other}'")),
        }
    }
}

/// How the soft flip probability is specified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SoftSpec {
    /// `p_S = ratio * p`.
    Ratio(f64),
    Explicit(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    pub platform: Platform,
    pub p: f64,
    pub soft: SoftSpec,
    pub time_dependent: bool,
    pub tau_1q: f64,
    pub tau_2q: f64,
    pub tau_r: f64,
    pub tau_m: f64,
    pub t1: f64,
    pub t2: f64,
    /// NA ratio between Z and X (or Y) error probabilities on two-qubit gates.
    pub bias: f64,
    /// Rates of the NA photon-count model; `eta` is recalibrated unless
    /// `calibrate_eta` is false.
    pub na_readout: NaReadoutParams,
    pub calibrate_eta: bool,
}

impl NoiseConfig {
    /// Static SI1000 model at the 500 ns reference measurement time.
    pub fn sc(p: f64, ps_ratio: f64) -> Self {
        Self {
            platform: Platform::Sc,
            p,
            soft: SoftSpec::Ratio(ps_ratio),
            time_dependent: false,
            tau_1q: 20e-9,
            tau_2q: 40e-9,
            tau_r: 40e-9,
            tau_m: SC_REFERENCE_TAU_M,
            t1: 100e-6,
            t2: 100e-6,
            bias: 100.0,
            na_readout: NaReadoutParams::reference(),
            calibrate_eta: true,
        }
    }

    /// Z-biased neutral-atom model with the reference readout time.
    pub fn na(p: f64, ps_ratio: f64) -> Self {
        Self { platform: Platform::Na, tau_1q: 500e-9, tau_2q: 270e-9, tau_r: 2000e-9, tau_m: NA_REFERENCE_TAU_M, ..Self::sc(p, ps_ratio) }
    }

    /// Switches to duration-dependent channels at measurement time `tau_m`.
    pub fn time_dependent(mut self, tau_m: f64) -> Self {
        self.time_dependent = true;
        self.tau_m = tau_m;
        self
    }

    /// Target average soft flip probability at the reference measurement time.
    pub fn target_ps(&self) -> f64 {
        match self.soft {
            SoftSpec::Ratio(r) => r * self.p,
            SoftSpec::Explicit(ps) => ps,
        }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let bad = |m: String| Err(NoiseError::InvalidConfig(m));
        if !(self.p >= 0.0 && self.p < 0.5) {
            return bad(format!("p must lie in [0, 0.5), got {}", self.p));
        }
        let ps = self.target_ps();
        if !(0.0..0.5).contains(&ps) {
            return bad(format!("p_S must lie in [0, 0.5), got {ps}"));
        }
        for (name, v) in [
            ("tau_1q", self.tau_1q),
            ("tau_2q", self.tau_2q),
            ("tau_r", self.tau_r),
            ("tau_m", self.tau_m),
            ("t1", self.t1),
            ("t2", self.t2),
        ] {
            if !(v > 0.0) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        if self.t2 > 2.0 * self.t1 {
            return Err(NoiseError::Unphysical { t1: self.t1, t2: self.t2 });
        }
        if !(self.bias > 0.0) {
            return bad(format!("bias must be > 0, got {}", self.bias));
        }
        Ok(())
    }

    /// `tau_D` such that `1 - exp(-500 ns / tau_D) = p`.
    pub fn tau_d(&self) -> f64 {
        -SC_REFERENCE_TAU_M / (1.0 - self.p).ln()
    }

    /// Readout response at the configured measurement time, or `None` when
    /// `p_S = 0` (perfect classification).
    pub fn readout_model(&self) -> Result<Option<ReadoutModel>, NoiseError> {
        self.validate()?;
        let target = self.target_ps();
        if target == 0.0 {
            return Ok(None);
        }
        let model = match self.platform {
            Platform::Sc => {
                let snr_ref = snr_for_target_ps(target)?;
                if self.time_dependent {
                    let tau_f = SC_REFERENCE_TAU_M / (2.0 * snr_ref);
                    ReadoutModel::Sc(ScReadoutParams::from_tau_f(tau_f, self.tau_m, self.t1)?)
                } else {
                    ReadoutModel::Sc(ScReadoutParams::new(snr_ref, self.tau_m, f64::INFINITY)?)
                }
            }
            Platform::Na => {
                let base = if self.calibrate_eta {
                    calibrate_na_eta(&self.na_readout.with_tau_m(NA_REFERENCE_TAU_M)?, target)?
                } else {
                    self.na_readout
                };
                ReadoutModel::Na(base.with_tau_m(self.tau_m)?)
            }
        };
        Ok(Some(model))
    }

    /// Per-operation channels for this configuration.
    pub fn channels(&self) -> Result<ChannelMap, NoiseError> {
        self.validate()?;
        let ps = match self.readout_model()? {
            Some(m) => m.overlap_flip_prob(),
            None => 0.0,
        };
        match (self.platform, self.time_dependent) {
            (Platform::Sc, false) => Ok(si1000_channels(self.p, ps)),
            (Platform::Sc, true) => sc_time_dependent_channels(self, ps),
            (Platform::Na, _) => Ok(na_channels(self.p, self.bias, ps)),
        }
    }
}

/// Finds the NA detection efficiency whose soft flip probability at
/// `params.tau_m` equals `target`.
pub fn calibrate_na_eta(params: &NaReadoutParams, target: f64) -> Result<NaReadoutParams, NoiseError> {
    let ps_at = |eta: f64| -> Result<f64, NoiseError> { Ok(ReadoutModel::Na(params.with_eta(eta)?).overlap_flip_prob()) };
    // the overlap falls with eta until bright-to-dark decay dominates
    let (mut lo, mut hi) = (1e-6f64, 1.0f64);
    let best = ps_at(hi)?;
    if best > target {
        return Err(ReadoutError::Unreachable { target, best }.into());
    }
    if ps_at(lo)? < target {
        return Err(NoiseError::InvalidConfig(format!("p_S target {target} above the weakest readout")));
    }
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if ps_at(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-12 {
            break;
        }
    }
    Ok(params.with_eta(hi)?)
}

/// Kind of a scheduled circuit layer, used to pick idle durations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerKind {
    OneQubit,
    TwoQubit,
    Reset,
    Measure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    Cx,
    H,
    Reset,
    Measure,
    /// A qubit not addressed during a layer of the given kind.
    Idle(LayerKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    /// `probs = [p]`, uniform over X, Y, Z.
    Depolarize1,
    /// `probs = [p]`, uniform over the 15 non-identity two-qubit Paulis.
    Depolarize2,
    /// `probs = [p_x, p_y, p_z]`, applied to each target.
    PauliXyz,
    /// `probs = [p]`, X flip right before a Z measurement.
    BitflipMeas,
    /// `probs = [p_S]`, classification error after the measurement.
    SoftMeas,
    /// `probs = [p]`, X flip right after a Z reset.
    ResetFlip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub probs: Vec<f64>,
}

impl ChannelSpec {
    pub fn new(kind: ChannelKind, probs: Vec<f64>) -> Self {
        Self { kind, probs }
    }

    fn single(kind: ChannelKind, p: f64) -> Self {
        Self::new(kind, vec![p])
    }

    fn is_trivial(&self) -> bool {
        self.probs.iter().all(|&p| p == 0.0)
    }
}

/// Channels attached to each operation kind. Targets are filled in by the
/// circuit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChannelMap {
    map: BTreeMap<OpKind, Vec<ChannelSpec>>,
}

impl ChannelMap {
    pub fn get(&self, op: OpKind) -> &[ChannelSpec] {
        self.map.get(&op).map_or(&[], |v| v.as_slice())
    }

    pub fn insert(&mut self, op: OpKind, spec: ChannelSpec) {
        if !spec.is_trivial() {
            self.map.entry(op).or_default().push(spec);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OpKind, &Vec<ChannelSpec>)> {
        self.map.iter()
    }

    /// Soft flip probability attached to measurements, 0 when absent.
    pub fn soft_ps(&self) -> f64 {
        self.get(OpKind::Measure).iter().find(|c| c.kind == ChannelKind::SoftMeas).map_or(0.0, |c| c.probs[0])
    }

    /// Total classification-level measurement error, bit-flip composed with
    /// the soft flip.
    pub fn measurement_error(&self) -> f64 {
        self.get(OpKind::Measure).iter().fold(0.0, |acc, c| match c.kind {
            ChannelKind::BitflipMeas | ChannelKind::SoftMeas => xor_prob(acc, c.probs[0]),
            _ => acc,
        })
    }
}

/// Measurement error seen by a hard decoder, `p_B (1 - p_S) + p_S (1 - p_B)`.
pub fn combined_measurement_error(p_b: f64, p_s: f64) -> f64 {
    xor_prob(p_b, p_s)
}

/// Static SI1000 channels with measurement bit-flip `p` and soft flip `p_s`.
///
/// Data qubits idling through a measurement or reset layer get the SI1000
/// resonator idle of `2p`; other idles get `p/10`.
pub fn si1000_channels(p: f64, p_s: f64) -> ChannelMap {
    use ChannelKind::*;
    let mut m = ChannelMap::default();
    m.insert(OpKind::Cx, ChannelSpec::single(Depolarize2, p));
    m.insert(OpKind::H, ChannelSpec::single(Depolarize1, p / 10.0));
    m.insert(OpKind::Reset, ChannelSpec::single(ResetFlip, 2.0 * p));
    m.insert(OpKind::Measure, ChannelSpec::single(BitflipMeas, p));
    m.insert(OpKind::Measure, ChannelSpec::single(SoftMeas, p_s));
    m.insert(OpKind::Idle(LayerKind::OneQubit), ChannelSpec::single(Depolarize1, p / 10.0));
    m.insert(OpKind::Idle(LayerKind::TwoQubit), ChannelSpec::single(Depolarize1, p / 10.0));
    m.insert(OpKind::Idle(LayerKind::Measure), ChannelSpec::single(Depolarize1, 2.0 * p));
    m.insert(OpKind::Idle(LayerKind::Reset), ChannelSpec::single(Depolarize1, 2.0 * p));
    m
}

/// Idle Pauli probabilities `(P_X, P_Y, P_Z)` for a duration `tau`.
pub fn idle_pauli(tau: f64, t1: f64, t2: f64) -> Result<(f64, f64, f64), NoiseError> {
    if !(tau >= 0.0) {
        return Err(NoiseError::InvalidConfig(format!("idle duration must be >= 0, got {tau}")));
    }
    let damp = 0.25 * (1.0 - (-tau / t1).exp());
    let pz = 0.5 * (1.0 - (-tau / t2).exp()) - damp;
    if pz < -1e-15 {
        return Err(NoiseError::Unphysical { t1, t2 });
    }
    Ok((damp, damp, pz.max(0.0)))
}

/// `1 - exp(-tau_m / tau_d)`.
pub fn meas_bitflip_prob(tau_m: f64, tau_d: f64) -> f64 {
    -(-tau_m / tau_d).exp_m1()
}

/// SI1000 gates and resets with idle noise from operation durations and a
/// measurement bit-flip that grows with `tau_m`.
pub fn sc_time_dependent_channels(cfg: &NoiseConfig, p_s: f64) -> Result<ChannelMap, NoiseError> {
    use ChannelKind::*;
    let p = cfg.p;
    let mut m = ChannelMap::default();
    m.insert(OpKind::Cx, ChannelSpec::single(Depolarize2, p));
    m.insert(OpKind::H, ChannelSpec::single(Depolarize1, p / 10.0));
    m.insert(OpKind::Reset, ChannelSpec::single(ResetFlip, 2.0 * p));
    let p_b = if p == 0.0 { 0.0 } else { meas_bitflip_prob(cfg.tau_m, cfg.tau_d()) };
    m.insert(OpKind::Measure, ChannelSpec::single(BitflipMeas, p_b));
    m.insert(OpKind::Measure, ChannelSpec::single(SoftMeas, p_s));
    for (kind, tau) in [
        (LayerKind::OneQubit, cfg.tau_1q),
        (LayerKind::TwoQubit, cfg.tau_2q),
        (LayerKind::Reset, cfg.tau_r),
        (LayerKind::Measure, cfg.tau_m),
    ] {
        let (px, py, pz) = idle_pauli(tau, cfg.t1, cfg.t2)?;
        m.insert(OpKind::Idle(kind), ChannelSpec::new(PauliXyz, vec![px, py, pz]));
    }
    Ok(m)
}

/// Z-biased neutral-atom channels: each two-qubit gate qubit independently
/// suffers Z with `p/3` and X, Y with `p/(3 bias)`; idles and single-qubit
/// gates depolarise with `p/10`. Readout error is purely soft.
pub fn na_channels(p: f64, bias: f64, p_s: f64) -> ChannelMap {
    use ChannelKind::*;
    let mut m = ChannelMap::default();
    let pz = p / 3.0;
    let pxy = p / (3.0 * bias);
    m.insert(OpKind::Cx, ChannelSpec::new(PauliXyz, vec![pxy, pxy, pz]));
    m.insert(OpKind::H, ChannelSpec::single(Depolarize1, p / 10.0));
    m.insert(OpKind::Measure, ChannelSpec::single(SoftMeas, p_s));
    for kind in [LayerKind::OneQubit, LayerKind::TwoQubit, LayerKind::Reset, LayerKind::Measure] {
        m.insert(OpKind::Idle(kind), ChannelSpec::single(Depolarize1, p / 10.0));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn si1000_ratios() {
        let m = si1000_channels(0.003, 0.003);
        assert!((m.get(OpKind::H)[0].probs[0] - 0.0003).abs() < 1e-15);
        assert!((m.get(OpKind::Reset)[0].probs[0] - 0.006).abs() < 1e-15);
        assert_eq!(m.get(OpKind::Cx)[0].kind, ChannelKind::Depolarize2);
    }

    #[test]
    fn measurement_composition() {
        assert!((combined_measurement_error(0.01, 0.05) - 0.059).abs() < 1e-15);
        let m = si1000_channels(0.01, 0.05);
        assert!((m.measurement_error() - 0.059).abs() < 1e-15);
        let p = 1e-4;
        assert!((combined_measurement_error(p, p) / p - 2.0).abs() < 1e-3);
        // second-order remainder is -10 p^2
        assert!((combined_measurement_error(p, 5.0 * p) / p - 6.0).abs() < 1.1e-3);
    }

    #[test]
    fn static_sc_soft_probability_hits_target() {
        let cfg = NoiseConfig::sc(0.003, 5.0);
        let m = cfg.channels().unwrap();
        assert!((m.soft_ps() - 0.015).abs() < 1e-7);
    }

    #[test]
    fn idle_examples() {
        assert_eq!(idle_pauli(0.0, 1e-4, 1e-4).unwrap(), (0.0, 0.0, 0.0));
        let (x, y, z) = idle_pauli(1e-4, 1e-4, 1e-4).unwrap();
        let v = (1.0 - (-1f64).exp()) / 4.0;
        assert!((x - v).abs() < 1e-15 && (y - v).abs() < 1e-15 && (z - v).abs() < 1e-15);
        assert!((v - 0.1580).abs() < 1e-4);
        // at T2 = 2 T1 only the second-order term (1 - e^{-tau/2T1})^2 / 4 survives
        for &tau in &[1e-9, 1e-7, 1e-5, 1e-3] {
            let (_, _, z) = idle_pauli(tau, 1e-4, 2e-4).unwrap();
            let u = (-tau / 2e-4f64).exp();
            assert!((z - 0.25 * (1.0 - u) * (1.0 - u)).abs() < 1e-12, "tau={tau} z={z}");
        }
        assert!(matches!(idle_pauli(1e-6, 1e-4, 3e-4), Err(NoiseError::Unphysical { .. })));
    }

    #[test]
    fn bitflip_calibration() {
        assert_eq!(meas_bitflip_prob(0.0, 1e-6), 0.0);
        let cfg = NoiseConfig::sc(0.003, 1.0);
        let tau_d = cfg.tau_d();
        assert!((meas_bitflip_prob(500e-9, tau_d) - 0.003).abs() < 1e-12);
        assert!((meas_bitflip_prob(1000e-9, tau_d) - 0.005991).abs() < 1e-12);
    }

    #[test]
    fn time_dependent_matches_static_at_reference() {
        let stat = NoiseConfig::sc(0.004, 5.0).channels().unwrap();
        let td = NoiseConfig::sc(0.004, 5.0).time_dependent(500e-9).channels().unwrap();
        let bf = |m: &ChannelMap| m.get(OpKind::Measure)[0].probs[0];
        assert!((bf(&stat) - bf(&td)).abs() < 1e-15);
        // decay during readout adds a little on top of the closed form
        assert!(td.soft_ps() >= stat.soft_ps() && td.soft_ps() < 1.2 * stat.soft_ps());
    }

    #[test]
    fn na_bias_ratios() {
        let m = na_channels(0.01, 100.0, 0.01);
        let cx = &m.get(OpKind::Cx)[0].probs;
        assert!((cx[2] - 0.003333333).abs() < 1e-9);
        assert!((cx[0] - 0.0000333333).abs() < 1e-10);
        let sym = na_channels(0.01, 1.0, 0.01);
        let cx = &sym.get(OpKind::Cx)[0].probs;
        assert!((cx[0] - cx[2]).abs() < 1e-18 && (cx[1] - cx[2]).abs() < 1e-18);
        assert!((m.get(OpKind::Idle(LayerKind::Measure))[0].probs[0] - 0.001).abs() < 1e-15);
    }

    #[test]
    fn na_eta_calibration() {
        for &target in &[0.005, 0.01, 0.05] {
            let cfg = NoiseConfig::na(target, 1.0);
            let ps = cfg.channels().unwrap().soft_ps();
            assert!((ps - target).abs() < 1e-9 * target.max(1.0) + 1e-10, "{target}: {ps}");
        }
        let cfg = NoiseConfig { soft: SoftSpec::Explicit(1e-4), ..NoiseConfig::na(0.01, 1.0) };
        assert!(matches!(cfg.channels(), Err(NoiseError::Readout(ReadoutError::Unreachable { .. }))));
    }

    proptest! {
        #[test]
        fn composition_symmetric(a in 0.0f64..0.5, b in 0.0f64..0.5) {
            let ab = combined_measurement_error(a, b);
            prop_assert!((ab - combined_measurement_error(b, a)).abs() < 1e-15);
            prop_assert!((ab - (1.0 - (1.0 - 2.0 * a) * (1.0 - 2.0 * b)) / 2.0).abs() < 1e-15);
        }

        #[test]
        fn idle_sum_below_three_quarters(tau in 0.0f64..1e-2, t1 in 1e-6f64..1e-3, frac in 0.01f64..2.0) {
            let (x, y, z) = idle_pauli(tau, t1, t1 * frac).unwrap();
            prop_assert!(x + y + z <= 0.75);
            if tau < 20.0 * t1 * frac.min(1.0) {
                prop_assert!(x + y + z < 0.75);
            }
            prop_assert!(x >= 0.0 && z >= 0.0);
        }

        #[test]
        fn channel_probs_in_range(p in 0.0f64..0.08, ratio in 0.0f64..5.0) {
            for m in [si1000_channels(p, ratio * p), na_channels(p, 100.0, ratio * p)] {
                for (_, specs) in m.iter() {
                    for s in specs {
                        for &q in &s.probs {
                            prop_assert!((0.0..=0.5).contains(&q));
                        }
                    }
                }
            }
        }
    }
}
