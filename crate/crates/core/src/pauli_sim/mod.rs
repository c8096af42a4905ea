//! Pauli-frame sampling of noisy circuits and detector error models.

mod dem;
mod frame;

pub use dem::{build_dem, DemError, DetectorErrorModel, Mechanism};
pub use frame::{sample_shots, sample_shots_with, Injection};

use std::io::{Read, Write};

use crate::codes::{Circuit, Op};
use crate::noise::{ChannelKind, ChannelMap, ChannelSpec, LayerKind, OpKind};
use crate::readout::{ReadoutError, SoftShotBatch};
use crate::Basis;

/// One instruction of a circuit with noise attached.
#[derive(Clone, Debug, PartialEq)]
pub enum Instr {
    R(Vec<u32>),
    H(Vec<u32>),
    Cx(Vec<(u32, u32)>),
    M {
        qubits: Vec<u32>,
        first: u32,
    },
    /// Exactly one of X, Y, Z with the given probabilities, per target.
    Pauli1 {
        px: f64,
        py: f64,
        pz: f64,
        targets: Vec<u32>,
    },
    /// One of the 15 non-identity two-qubit Paulis with total probability `p`.
    Depol2 {
        p: f64,
        pairs: Vec<(u32, u32)>,
    },
}

/// A circuit with every noise channel placed, plus the soft flip probability
/// applied to every measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyCircuit {
    pub n_qubits: usize,
    pub n_meas: usize,
    pub instrs: Vec<Instr>,
    pub detectors: Vec<Vec<u32>>,
    pub det_basis: Vec<Option<Basis>>,
    pub observables: Vec<Vec<u32>>,
    pub obs_basis: Vec<Option<Basis>>,
    pub soft_ps: f64,
}

impl NoisyCircuit {
    /// Attaches the channels of `noise` layer by layer. Gate and reset errors
    /// follow their operation, the measurement bit-flip precedes it, and
    /// qubits untouched during a layer get that layer's idle channel.
    pub fn new(circuit: &Circuit, noise: &ChannelMap) -> Self {
        let mut instrs = Vec::new();
        let mut layer: Vec<&Op> = Vec::new();
        let mut meas_count = 0u32;
        let flush = |layer: &mut Vec<&Op>, instrs: &mut Vec<Instr>, meas_count: &mut u32| {
            if layer.is_empty() {
                return;
            }
            let mut touched = vec![false; circuit.n_qubits];
            let mut kind = LayerKind::OneQubit;
            for op in layer.iter() {
                match op {
                    Op::R(qs) => {
                        qs.iter().for_each(|&q| touched[q as usize] = true);
                        if kind != LayerKind::Measure {
                            kind = LayerKind::Reset;
                        }
                    }
                    Op::H(qs) => qs.iter().for_each(|&q| touched[q as usize] = true),
                    Op::M(qs) => {
                        qs.iter().for_each(|&q| touched[q as usize] = true);
                        kind = LayerKind::Measure;
                    }
                    Op::Cx(pairs) => {
                        for &(c, t) in pairs {
                            touched[c as usize] = true;
                            touched[t as usize] = true;
                        }
                        if kind == LayerKind::OneQubit {
                            kind = LayerKind::TwoQubit;
                        }
                    }
                    Op::Tick => {}
                }
            }
            for op in layer.drain(..) {
                match op {
                    Op::R(qs) => {
                        instrs.push(Instr::R(qs.clone()));
                        push_single(instrs, noise.get(OpKind::Reset), qs);
                    }
                    Op::H(qs) => {
                        instrs.push(Instr::H(qs.clone()));
                        push_single(instrs, noise.get(OpKind::H), qs);
                    }
                    Op::M(qs) => {
                        push_single(instrs, noise.get(OpKind::Measure), qs);
                        instrs.push(Instr::M { qubits: qs.clone(), first: *meas_count });
                        *meas_count += qs.len() as u32;
                    }
                    Op::Cx(pairs) => {
                        instrs.push(Instr::Cx(pairs.clone()));
                        for spec in noise.get(OpKind::Cx) {
                            if spec.kind == ChannelKind::Depolarize2 {
                                push_nonempty(instrs, Instr::Depol2 { p: spec.probs[0], pairs: pairs.clone() });
                            } else {
                                let flat: Vec<u32> = pairs.iter().flat_map(|&(c, t)| [c, t]).collect();
                                push_single(instrs, std::slice::from_ref(spec), &flat);
                            }
                        }
                    }
                    Op::Tick => {}
                }
            }
            let idle: Vec<u32> = (0..circuit.n_qubits as u32).filter(|&q| !touched[q as usize]).collect();
            push_single(instrs, noise.get(OpKind::Idle(kind)), &idle);
        };
        for op in &circuit.ops {
            if *op == Op::Tick {
                flush(&mut layer, &mut instrs, &mut meas_count);
            } else {
                layer.push(op);
            }
        }
        flush(&mut layer, &mut instrs, &mut meas_count);
        Self {
            n_qubits: circuit.n_qubits,
            n_meas: meas_count as usize,
            instrs,
            detectors: circuit.detectors.iter().map(|d| d.meas.clone()).collect(),
            det_basis: circuit.detectors.iter().map(|d| d.basis).collect(),
            observables: circuit.observables.iter().map(|o| o.meas.clone()).collect(),
            obs_basis: circuit.observables.iter().map(|o| o.basis).collect(),
            soft_ps: noise.soft_ps(),
        }
    }

    /// Noiseless version of `circuit`.
    pub fn noiseless(circuit: &Circuit) -> Self {
        Self::new(circuit, &ChannelMap::default())
    }
}

fn push_nonempty(instrs: &mut Vec<Instr>, instr: Instr) {
    let empty = match &instr {
        Instr::Pauli1 { targets, px, py, pz } => targets.is_empty() || px + py + pz == 0.0,
        Instr::Depol2 { pairs, p } => pairs.is_empty() || *p == 0.0,
        _ => false,
    };
    if !empty {
        instrs.push(instr);
    }
}

/// Single-qubit channels of `specs` applied to `targets`; soft readout is
/// handled separately.
fn push_single(instrs: &mut Vec<Instr>, specs: &[ChannelSpec], targets: &[u32]) {
    for spec in specs {
        let (px, py, pz) = match spec.kind {
            ChannelKind::Depolarize1 => {
                let p = spec.probs[0] / 3.0;
                (p, p, p)
            }
            ChannelKind::PauliXyz => (spec.probs[0], spec.probs[1], spec.probs[2]),
            ChannelKind::BitflipMeas | ChannelKind::ResetFlip => (spec.probs[0], 0.0, 0.0),
            ChannelKind::SoftMeas => continue,
            ChannelKind::Depolarize2 => panic!("two-qubit channel on a single-qubit operation"),
        };
        push_nonempty(instrs, Instr::Pauli1 { px, py, pz, targets: targets.to_vec() });
    }
}

/// Detector and observable outcomes of many shots, with their soft readout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotBatch {
    shots: usize,
    n_det: usize,
    n_obs: usize,
    det_words: usize,
    dets: Vec<u64>,
    obs: Vec<u64>,
    pub soft: SoftShotBatch,
}

impl ShotBatch {
    pub fn new(shots: usize, n_det: usize, n_obs: usize, n_meas: usize) -> Self {
        assert!(n_obs <= 64, "at most 64 observables");
        let det_words = n_det.div_ceil(64).max(1);
        Self {
            shots,
            n_det,
            n_obs,
            det_words,
            dets: vec![0; shots * det_words],
            obs: vec![0; shots],
            soft: SoftShotBatch::new(shots, n_meas),
        }
    }

    pub fn shots(&self) -> usize {
        self.shots
    }

    pub fn n_det(&self) -> usize {
        self.n_det
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    /// Packed detector bits of one shot, bit `i % 64` of word `i / 64`.
    #[inline]
    pub fn dets(&self, shot: usize) -> &[u64] {
        &self.dets[shot * self.det_words..(shot + 1) * self.det_words]
    }

    #[inline]
    pub fn dets_mut(&mut self, shot: usize) -> &mut [u64] {
        let w = self.det_words;
        &mut self.dets[shot * w..(shot + 1) * w]
    }

    /// Fired detector indices of one shot.
    pub fn fired(&self, shot: usize) -> Vec<u32> {
        let mut out = Vec::new();
        self.fired_into(shot, &mut out);
        out
    }

    /// Like [`fired`](Self::fired) but reuses `out`.
    pub fn fired_into(&self, shot: usize, out: &mut Vec<u32>) {
        out.clear();
        for (wi, &w) in self.dets(shot).iter().enumerate() {
            let mut w = w;
            while w != 0 {
                out.push((wi * 64) as u32 + w.trailing_zeros());
                w &= w - 1;
            }
        }
    }

    /// Observable flips of one shot as a bit mask.
    #[inline]
    pub fn obs(&self, shot: usize) -> u64 {
        self.obs[shot]
    }

    #[inline]
    pub fn set_obs(&mut self, shot: usize, mask: u64) {
        self.obs[shot] = mask;
    }

    /// Order-sensitive FNV-1a hash of detectors, observables and soft values.
    pub fn stream_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for s in 0..self.shots {
            for w in self.dets(s) {
                eat(&w.to_le_bytes());
            }
            eat(&self.obs[s].to_le_bytes());
            eat(self.soft.shot_q(s));
        }
        h
    }

    /// Soft batch stream followed by `"DETS"`, n_det `u32`, n_obs `u32` and
    /// per shot `ceil(n_det / 8)` detector bytes then `ceil(n_obs / 8)`
    /// observable bytes, all bits LSB-first.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), ReadoutError> {
        self.soft.write_to(&mut w)?;
        w.write_all(b"DETS")?;
        w.write_all(&(self.n_det as u32).to_le_bytes())?;
        w.write_all(&(self.n_obs as u32).to_le_bytes())?;
        let det_bytes = self.n_det.div_ceil(8);
        let obs_bytes = self.n_obs.div_ceil(8);
        for s in 0..self.shots {
            let bytes: Vec<u8> = self.dets(s).iter().flat_map(|w| w.to_le_bytes()).collect();
            w.write_all(&bytes[..det_bytes])?;
            w.write_all(&self.obs[s].to_le_bytes()[..obs_bytes])?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, ReadoutError> {
        let soft = SoftShotBatch::read_from(&mut r)?;
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"DETS" {
            return Err(ReadoutError::Format("missing DETS section".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let n_det = u32::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let n_obs = u32::from_le_bytes(word) as usize;
        if n_obs > 64 {
            return Err(ReadoutError::Format(format!("{n_obs} observables (max 64)")));
        }
        let mut batch = Self::new(soft.shots(), n_det, n_obs, soft.n_meas());
        let det_bytes = n_det.div_ceil(8);
        let obs_bytes = n_obs.div_ceil(8);
        let mut buf = vec![0u8; batch.det_words * 8];
        for s in 0..batch.shots {
            buf.iter_mut().for_each(|b| *b = 0);
            r.read_exact(&mut buf[..det_bytes])?;
            for (i, chunk) in buf.chunks(8).enumerate() {
                batch.dets_mut(s)[i] = u64::from_le_bytes(chunk.try_into().unwrap());
            }
            let mut ob = [0u8; 8];
            r.read_exact(&mut ob[..obs_bytes])?;
            batch.obs[s] = u64::from_le_bytes(ob);
        }
        batch.soft = soft;
        Ok(batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::build_rotated_memory;
    use crate::noise::si1000_channels;

    #[test]
    fn noise_placement() {
        let c = build_rotated_memory(3, 1, Basis::Z).unwrap();
        let nc = NoisyCircuit::new(&c, &si1000_channels(0.001, 0.001));
        assert_eq!(nc.n_meas, 8 + 9);
        // bit-flip right before every measurement
        for (i, ins) in nc.instrs.iter().enumerate() {
            if let Instr::M { qubits, .. } = ins {
                match &nc.instrs[i - 1] {
                    Instr::Pauli1 { px, py, targets, .. } => {
                        assert_eq!(*px, 0.001);
                        assert_eq!(*py, 0.0);
                        assert_eq!(targets, qubits);
                    }
                    other => panic!("expected bit-flip before M, got {other:?}"),
                }
            }
        }
        assert!(nc.instrs.iter().any(|i| matches!(i, Instr::Depol2 { .. })));
        assert!((nc.soft_ps - 0.001).abs() < 1e-15);
        let clean = NoisyCircuit::noiseless(&c);
        assert!(clean.instrs.iter().all(|i| !matches!(i, Instr::Pauli1 { .. } | Instr::Depol2 { .. })));
    }

    #[test]
    fn batch_roundtrip() {
        let mut b = ShotBatch::new(3, 70, 2, 5);
        b.dets_mut(1)[1] = 0b101;
        b.dets_mut(2)[0] = 1 << 63;
        b.set_obs(2, 0b10);
        b.soft.shot_q_mut(0)[4] = 200;
        let mut buf = Vec::new();
        b.write_to(&mut buf).unwrap();
        let back = ShotBatch::read_from(&buf[..]).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.fired(1), vec![64, 66]);
    }
}
