//! Per-shot soft measurement records and their binary serialization.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{quantize, ReadoutError, ReadoutModel, SoftValue};

/// Row-major bit matrix with byte-aligned rows, bit `j` of a row stored at
/// bit `j % 8` of byte `j / 8`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackedBits {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u8>,
}

impl PackedBits {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = cols.div_ceil(8);
        Self { rows, cols, stride, data: vec![0; rows * stride] }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut out = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged bit rows");
            for (j, &b) in row.iter().enumerate() {
                out.set(i, j, b & 1);
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        (self.data[row * self.stride + col / 8] >> (col % 8)) & 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, bit: u8) {
        let byte = &mut self.data[row * self.stride + col / 8];
        let mask = 1u8 << (col % 8);
        if bit & 1 == 1 {
            *byte |= mask;
        } else {
            *byte &= !mask;
        }
    }

    pub fn row_bytes(&self, row: usize) -> &[u8] {
        &self.data[row * self.stride..(row + 1) * self.stride]
    }

    pub fn row_bytes_mut(&mut self, row: usize) -> &mut [u8] {
        let s = self.stride;
        &mut self.data[row * s..(row + 1) * s]
    }
}

/// Soft readout of every measurement in every shot, plus the ideal outcomes
/// they were sampled from. Decoders must only look at `q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SoftShotBatch {
    shots: usize,
    n_meas: usize,
    q: Vec<u8>,
    ideal: PackedBits,
}

const MAGIC: &[u8; 4] = b"SOFT";
const VERSION: u16 = 1;

impl SoftShotBatch {
    pub fn new(shots: usize, n_meas: usize) -> Self {
        Self { shots, n_meas, q: vec![0; shots * n_meas], ideal: PackedBits::zeros(shots, n_meas) }
    }

    pub fn shots(&self) -> usize {
        self.shots
    }

    pub fn n_meas(&self) -> usize {
        self.n_meas
    }

    /// Quantized posteriors of one shot.
    #[inline]
    pub fn shot_q(&self, shot: usize) -> &[u8] {
        &self.q[shot * self.n_meas..(shot + 1) * self.n_meas]
    }

    #[inline]
    pub fn shot_q_mut(&mut self, shot: usize) -> &mut [u8] {
        let n = self.n_meas;
        &mut self.q[shot * n..(shot + 1) * n]
    }

    pub fn value(&self, shot: usize, meas: usize) -> SoftValue {
        SoftValue::new(self.q[shot * self.n_meas + meas])
    }

    pub fn hardened(&self, shot: usize, meas: usize) -> u8 {
        self.value(shot, meas).hardened()
    }

    /// Ideal (pre-classification) outcome, for diagnostics.
    pub fn ideal(&self, shot: usize, meas: usize) -> u8 {
        self.ideal.get(shot, meas)
    }

    pub fn ideal_bits(&self) -> &PackedBits {
        &self.ideal
    }

    pub fn ideal_bits_mut(&mut self) -> &mut PackedBits {
        &mut self.ideal
    }

    /// Replaces every value by its confident endpoint (`0` or `255`),
    /// keeping the classification.
    pub fn harden_all(&mut self) {
        for q in self.q.iter_mut() {
            *q = if *q >= 128 { 255 } else { 0 };
        }
    }

    /// Writes the little-endian binary form: `"SOFT"`, version `u16`, shots
    /// `u32`, n_meas `u32`, then for every shot its `n_meas` q bytes followed
    /// by `ceil(n_meas / 8)` bytes of packed ideal bits.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), ReadoutError> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&to_u32(self.shots)?.to_le_bytes())?;
        w.write_all(&to_u32(self.n_meas)?.to_le_bytes())?;
        for shot in 0..self.shots {
            w.write_all(self.shot_q(shot))?;
            w.write_all(self.ideal.row_bytes(shot))?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, ReadoutError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(ReadoutError::Format(format!("bad magic {magic:?}")));
        }
        let mut v = [0u8; 2];
        r.read_exact(&mut v)?;
        let version = u16::from_le_bytes(v);
        if version != VERSION {
            return Err(ReadoutError::Format(format!("unsupported version {version}")));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let shots = u32::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let n_meas = u32::from_le_bytes(word) as usize;
        let mut batch = Self::new(shots, n_meas);
        for shot in 0..shots {
            r.read_exact(batch.shot_q_mut(shot))?;
            r.read_exact(batch.ideal.row_bytes_mut(shot))?;
        }
        Ok(batch)
    }
}

fn to_u32(v: usize) -> Result<u32, ReadoutError> {
    u32::try_from(v).map_err(|_| ReadoutError::Format(format!("{v} does not fit in u32")))
}

/// Draws analog readout values for every ideal bit, computes the posterior
/// and quantizes it. Shot `i` uses stream `i` of a ChaCha8 generator seeded
/// with `seed`, so the result does not depend on evaluation order.
pub fn sample_soft(ideal: &PackedBits, model: &ReadoutModel, seed: u64) -> Result<SoftShotBatch, ReadoutError> {
    let mut batch = SoftShotBatch::new(ideal.rows(), ideal.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for shot in 0..ideal.rows() {
        rng.set_stream(shot as u64);
        rng.set_word_pos(0);
        for m in 0..ideal.cols() {
            let j = ideal.get(shot, m);
            let mu = model.sample_mu(j, &mut rng);
            batch.q[shot * batch.n_meas + m] = quantize(model.posterior(mu)?).q;
        }
        batch.ideal.row_bytes_mut(shot).copy_from_slice(ideal.row_bytes(shot));
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::readout::ScReadoutParams;

    fn alternating(shots: usize, n: usize) -> PackedBits {
        let rows: Vec<Vec<u8>> = (0..shots).map(|s| (0..n).map(|m| ((s + m) % 2) as u8).collect()).collect();
        PackedBits::from_rows(&rows)
    }

    #[test]
    fn near_noiseless_hardens_to_ideal() {
        let model = ReadoutModel::Sc(ScReadoutParams::new(1e6, 500e-9, f64::INFINITY).unwrap());
        let ideal = alternating(50, 13);
        let batch = sample_soft(&ideal, &model, 1).unwrap();
        for s in 0..50 {
            for m in 0..13 {
                assert_eq!(batch.hardened(s, m), ideal.get(s, m));
            }
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let model = ReadoutModel::Sc(ScReadoutParams::new(4.0, 500e-9, 50e-6).unwrap());
        let ideal = alternating(20, 9);
        let a = sample_soft(&ideal, &model, 42).unwrap();
        let b = sample_soft(&ideal, &model, 42).unwrap();
        let c = sample_soft(&ideal, &model, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn roundtrip_binary() {
        let model = ReadoutModel::Sc(ScReadoutParams::new(4.0, 500e-9, f64::INFINITY).unwrap());
        let ideal = alternating(7, 11);
        let batch = sample_soft(&ideal, &model, 9).unwrap();
        let mut buf = Vec::new();
        batch.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 2 + 4 + 4 + 7 * (11 + 2));
        assert_eq!(&buf[..4], b"SOFT");
        let back = SoftShotBatch::read_from(&buf[..]).unwrap();
        assert_eq!(back, batch);
        assert!(SoftShotBatch::read_from(&buf[..10]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(SoftShotBatch::read_from(&bad[..]), Err(ReadoutError::Format(_))));
    }
}
