//! Bit-packed Pauli-frame sampler, 64 shots per machine word.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Instr, NoisyCircuit, ShotBatch};
use crate::readout::SoftReadoutTable;

/// Deterministic Pauli inserted right after instruction `after_instr` in
/// every shot; used to check signatures against the error model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Injection {
    pub after_instr: usize,
    pub qubit: u32,
    pub x: bool,
    pub z: bool,
}

/// Samples `shots` shots. Shots are simulated in batches of 64; batch `b`
/// draws from stream `b` of a ChaCha8 generator seeded with `seed`, so the
/// output does not depend on the worker count. Without a readout table every
/// measurement is classified perfectly.
pub fn sample_shots(nc: &NoisyCircuit, table: Option<&SoftReadoutTable>, shots: usize, seed: u64) -> ShotBatch {
    sample_shots_with(nc, table, shots, seed, &[])
}

pub fn sample_shots_with(
    nc: &NoisyCircuit,
    table: Option<&SoftReadoutTable>,
    shots: usize,
    seed: u64,
    injections: &[Injection],
) -> ShotBatch {
    let n_obs = nc.observables.len();
    let mut out = ShotBatch::new(shots, nc.detectors.len(), n_obs, nc.n_meas);
    let n_batches = shots.div_ceil(64);
    let prepared = Prepared::new(nc);
    let results: Vec<BatchResult> = (0..n_batches)
        .into_par_iter()
        .map_init(
            || Workspace::new(nc),
            |ws, b| {
                let lanes = (shots - b * 64).min(64);
                run_batch(nc, &prepared, table, seed, b as u64, lanes, injections, ws)
            },
        )
        .collect();
    for (b, res) in results.into_iter().enumerate() {
        let base = b * 64;
        for lane in 0..res.lanes {
            let shot = base + lane;
            out.soft.shot_q_mut(shot).copy_from_slice(&res.q[lane * nc.n_meas..(lane + 1) * nc.n_meas]);
            let row = out.dets_mut(shot);
            for (i, &w) in res.dets.iter().enumerate() {
                if (w >> lane) & 1 == 1 {
                    row[i / 64] |= 1u64 << (i % 64);
                }
            }
            let mut mask = 0u64;
            for (k, &w) in res.obs.iter().enumerate() {
                mask |= ((w >> lane) & 1) << k;
            }
            out.set_obs(shot, mask);
            let ideal = out.soft.ideal_bits_mut();
            for (m, &w) in res.ideal.iter().enumerate() {
                if (w >> lane) & 1 == 1 {
                    ideal.set(shot, m, 1);
                }
            }
        }
    }
    out
}

/// Per-instruction constants for geometric skipping.
struct Prepared {
    /// `ln(1 - p_total)` for noise instructions, 0 otherwise.
    ln_keep: Vec<f64>,
}

impl Prepared {
    fn new(nc: &NoisyCircuit) -> Self {
        let ln_keep = nc
            .instrs
            .iter()
            .map(|ins| match ins {
                Instr::Pauli1 { px, py, pz, .. } => (-(px + py + pz)).ln_1p(),
                Instr::Depol2 { p, .. } => (-p).ln_1p(),
                _ => 0.0,
            })
            .collect();
        Self { ln_keep }
    }
}

struct Workspace {
    x: Vec<u64>,
    z: Vec<u64>,
    meas: Vec<u64>,
}

impl Workspace {
    fn new(nc: &NoisyCircuit) -> Self {
        Self { x: vec![0; nc.n_qubits], z: vec![0; nc.n_qubits], meas: vec![0; nc.n_meas] }
    }
}

struct BatchResult {
    lanes: usize,
    q: Vec<u8>,
    ideal: Vec<u64>,
    dets: Vec<u64>,
    obs: Vec<u64>,
}

/// Index of the next hit in a run of independent trials with
/// `ln(1 - p) = ln_keep`, counting from `from`.
#[inline]
fn next_hit<R: RngCore>(rng: &mut R, ln_keep: f64, from: u64) -> u64 {
    let u: f64 = 1.0 - (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let skip = u.ln() / ln_keep;
    if skip >= 1e18 {
        u64::MAX
    } else {
        from + skip as u64
    }
}

#[allow(clippy::too_many_arguments)]
fn run_batch(
    nc: &NoisyCircuit,
    prepared: &Prepared,
    table: Option<&SoftReadoutTable>,
    seed: u64,
    batch: u64,
    lanes: usize,
    injections: &[Injection],
    ws: &mut Workspace,
) -> BatchResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    let lane_mask = if lanes == 64 { u64::MAX } else { (1u64 << lanes) - 1 };
    ws.x.iter_mut().for_each(|w| *w = 0);
    ws.z.iter_mut().for_each(|w| *w = 0);
    let (x, z, meas) = (&mut ws.x, &mut ws.z, &mut ws.meas);
    for (i, ins) in nc.instrs.iter().enumerate() {
        match ins {
            Instr::R(qs) => {
                for &q in qs {
                    x[q as usize] = 0;
                    z[q as usize] = rng.next_u64();
                }
            }
            Instr::H(qs) => {
                for &q in qs {
                    std::mem::swap(&mut x[q as usize], &mut z[q as usize]);
                }
            }
            Instr::Cx(pairs) => {
                for &(c, t) in pairs {
                    let (c, t) = (c as usize, t as usize);
                    x[t] ^= x[c];
                    z[c] ^= z[t];
                }
            }
            Instr::M { qubits, first } => {
                for (k, &q) in qubits.iter().enumerate() {
                    meas[*first as usize + k] = x[q as usize];
                    z[q as usize] = rng.next_u64();
                }
            }
            Instr::Pauli1 { px, py, targets, .. } => {
                let ln_keep = prepared.ln_keep[i];
                let total = targets.len() as u64 * 64;
                let ptot = -ln_keep.exp_m1();
                let (cx, cy) = (px / ptot, (px + py) / ptot);
                let mut pos = next_hit(&mut rng, ln_keep, 0);
                while pos < total {
                    let q = targets[(pos / 64) as usize] as usize;
                    let bit = 1u64 << (pos % 64);
                    let u: f64 = rng.random();
                    if u < cx {
                        x[q] ^= bit;
                    } else if u < cy {
                        x[q] ^= bit;
                        z[q] ^= bit;
                    } else {
                        z[q] ^= bit;
                    }
                    pos = next_hit(&mut rng, ln_keep, pos + 1);
                }
            }
            Instr::Depol2 { pairs, .. } => {
                let ln_keep = prepared.ln_keep[i];
                let total = pairs.len() as u64 * 64;
                let mut pos = next_hit(&mut rng, ln_keep, 0);
                while pos < total {
                    let (a, b) = pairs[(pos / 64) as usize];
                    let bit = 1u64 << (pos % 64);
                    let r: u32 = rng.random_range(1..16);
                    apply_pauli(x, z, a as usize, r & 3, bit);
                    apply_pauli(x, z, b as usize, r >> 2, bit);
                    pos = next_hit(&mut rng, ln_keep, pos + 1);
                }
            }
        }
        for inj in injections.iter().filter(|inj| inj.after_instr == i) {
            let q = inj.qubit as usize;
            if inj.x {
                x[q] ^= u64::MAX;
            }
            if inj.z {
                z[q] ^= u64::MAX;
            }
        }
    }
    // classification
    let mut q_out = vec![0u8; lanes * nc.n_meas];
    let mut hard = vec![0u64; nc.n_meas];
    let ideal: Vec<u64> = meas.iter().map(|w| w & lane_mask).collect();
    for (m, &w) in ideal.iter().enumerate() {
        match table {
            Some(t) => {
                let mut h = 0u64;
                for lane in 0..lanes {
                    let bit = ((w >> lane) & 1) as u8;
                    let q = t.sample_bits(bit, rng.next_u64());
                    q_out[lane * nc.n_meas + m] = q;
                    h |= ((q >> 7) as u64) << lane;
                }
                hard[m] = h;
            }
            None => {
                for lane in 0..lanes {
                    q_out[lane * nc.n_meas + m] = if (w >> lane) & 1 == 1 { 255 } else { 0 };
                }
                hard[m] = w;
            }
        }
    }
    let parity = |ms: &Vec<u32>| ms.iter().fold(0u64, |acc, &m| acc ^ hard[m as usize]);
    let dets = nc.detectors.iter().map(parity).collect();
    let obs = nc.observables.iter().map(parity).collect();
    BatchResult { lanes, q: q_out, ideal, dets, obs }
}

/// Pauli code `v`: bit 0 is X, bit 1 is Z.
#[inline]
fn apply_pauli(x: &mut [u64], z: &mut [u64], q: usize, v: u32, bit: u64) {
    if v & 1 == 1 {
        x[q] ^= bit;
    }
    if v & 2 == 2 {
        z[q] ^= bit;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::build_rotated_memory;
    use crate::noise::si1000_channels;
    use crate::Basis;

    #[test]
    fn noiseless_circuits_are_deterministic() {
        for basis in [Basis::X, Basis::Z] {
            for (d, t) in [(3, 1), (3, 3), (5, 2)] {
                let c = build_rotated_memory(d, t, basis).unwrap();
                let nc = NoisyCircuit::noiseless(&c);
                let batch = sample_shots(&nc, None, 1000, 7);
                for s in 0..1000 {
                    assert!(batch.fired(s).is_empty(), "d={d} T={t} {basis:?} shot {s}");
                    assert_eq!(batch.obs(s), 0);
                }
            }
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let c = build_rotated_memory(3, 3, Basis::Z).unwrap();
        let nc = NoisyCircuit::new(&c, &si1000_channels(0.01, 0.05));
        let a = sample_shots(&nc, None, 300, 1);
        let b = sample_shots(&nc, None, 300, 1);
        let other = sample_shots(&nc, None, 300, 2);
        assert_eq!(a, b);
        assert_ne!(a.stream_hash(), other.stream_hash());
        // a shorter run is a prefix of a longer one
        let prefix = sample_shots(&nc, None, 100, 1);
        for s in 0..100 {
            assert_eq!(prefix.dets(s), a.dets(s));
        }
    }
}
