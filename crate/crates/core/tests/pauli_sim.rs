use std::collections::HashMap;

use softqec::codes::build_rotated_memory;
use softqec::noise::si1000_channels;
use softqec::pauli_sim::{build_dem, sample_shots, sample_shots_with, Injection, Instr, NoisyCircuit};
use softqec::readout::{ReadoutModel, ScReadoutParams, SoftReadoutTable};
use softqec::Basis;

fn is_noise(i: &Instr) -> bool {
    matches!(i, Instr::Pauli1 { .. } | Instr::Depol2 { .. })
}

#[test]
fn injected_errors_fire_the_predicted_detectors() {
    let c = build_rotated_memory(3, 3, Basis::Z).unwrap();
    let clean = NoisyCircuit::noiseless(&c);
    let mut checked = 0;
    for after in (0..clean.instrs.len()).step_by(3) {
        for qubit in [0u32, 4, 8, 10, 13] {
            for (x, z) in [(true, false), (false, true), (true, true)] {
                let batch = sample_shots_with(&clean, None, 64, 5, &[Injection { after_instr: after, qubit, x, z }]);
                // symbolic route: the same Pauli as a lone noise channel
                let mut nc = clean.clone();
                let (px, py, pz) = match (x, z) {
                    (true, false) => (0.1, 0.0, 0.0),
                    (false, true) => (0.0, 0.0, 0.1),
                    _ => (0.0, 0.1, 0.0),
                };
                nc.instrs.insert(after + 1, Instr::Pauli1 { px, py, pz, targets: vec![qubit] });
                let dem = build_dem(&nc).unwrap();
                let (dets, obs) = match dem.mechanisms.as_slice() {
                    [] => (vec![], 0),
                    [m] => (m.dets.clone(), m.obs),
                    more => panic!("expected one mechanism, got {more:?}"),
                };
                for s in 0..64 {
                    assert_eq!(batch.fired(s), dets, "after {after}, qubit {qubit}, x={x} z={z}");
                    assert_eq!(batch.obs(s), obs);
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn signature_rates_match_error_model() {
    let c = build_rotated_memory(3, 2, Basis::Z).unwrap();
    let full = NoisyCircuit::new(&c, &si1000_channels(0.01, 0.0));
    let shots = 1_000_000;
    let mut cases = 0;
    for (pos, ins) in full.instrs.iter().enumerate() {
        if !is_noise(ins) || pos % 5 != 0 {
            continue;
        }
        // isolate one target of this channel
        let single = match ins {
            Instr::Pauli1 { px, py, pz, targets } => Instr::Pauli1 { px: *px, py: *py, pz: *pz, targets: vec![targets[targets.len() / 2]] },
            Instr::Depol2 { p, pairs } => Instr::Depol2 { p: *p, pairs: vec![pairs[pairs.len() / 2]] },
            _ => unreachable!(),
        };
        let mut nc = full.clone();
        nc.instrs = full.instrs.iter().enumerate().filter(|(i, x)| !is_noise(x) || *i == pos).map(|(_, x)| x.clone()).collect();
        let idx = nc.instrs.iter().position(is_noise).unwrap();
        nc.instrs[idx] = single;
        let dem = build_dem(&nc).unwrap();
        let batch = sample_shots(&nc, None, shots, 100 + pos as u64);
        let mut counts: HashMap<(Vec<u32>, u64), usize> = HashMap::new();
        for s in 0..shots {
            *counts.entry((batch.fired(s), batch.obs(s))).or_default() += 1;
        }
        for m in &dem.mechanisms {
            let seen = counts.get(&(m.dets.clone(), m.obs)).copied().unwrap_or(0) as f64 / shots as f64;
            let sigma = (m.prob * (1.0 - m.prob) / shots as f64).sqrt();
            assert!((seen - m.prob).abs() < 4.0 * sigma + 2.0 * m.prob * m.prob, "instr {pos}: {m:?} seen {seen}");
        }
        cases += 1;
    }
    assert!(cases >= 5);
}

#[test]
fn frame_sampling_is_linear_in_channels() {
    let c = build_rotated_memory(3, 3, Basis::X).unwrap();
    let full = NoisyCircuit::new(&c, &si1000_channels(0.01, 0.0));
    let noise: Vec<usize> = full.instrs.iter().enumerate().filter(|(_, i)| is_noise(i)).map(|(k, _)| k).collect();
    let keep = |pred: &dyn Fn(usize) -> bool| {
        let mut nc = full.clone();
        nc.instrs = full.instrs.iter().enumerate().filter(|(k, i)| !is_noise(i) || pred(*k)).map(|(_, i)| i.clone()).collect();
        nc
    };
    let half = noise[noise.len() / 2];
    let a = keep(&|k| k < half);
    let b = keep(&|k| k >= half);
    let shots = 200_000;
    let joint = sample_shots(&full, None, shots, 1);
    let sa = sample_shots(&a, None, shots, 2);
    let sb = sample_shots(&b, None, shots, 3);
    let n_det = full.detectors.len();
    let mut chi2 = 0.0;
    for d in 0..n_det {
        let bit = |batch: &softqec::pauli_sim::ShotBatch, s: usize| (batch.dets(s)[d / 64] >> (d % 64)) & 1;
        let n1 = (0..shots).filter(|&s| bit(&joint, s) == 1).count() as f64;
        let n2 = (0..shots).filter(|&s| bit(&sa, s) ^ bit(&sb, s) == 1).count() as f64;
        let pooled = (n1 + n2) / (2.0 * shots as f64);
        let var = 2.0 * shots as f64 * pooled * (1.0 - pooled);
        chi2 += (n1 - n2).powi(2) / var;
    }
    // chi-square with n_det degrees of freedom, generous upper tail
    let limit = n_det as f64 + 5.0 * (2.0 * n_det as f64).sqrt();
    assert!(chi2 < limit, "chi2 {chi2} over {n_det} detectors");
}

#[test]
fn soft_values_follow_the_readout_table() {
    let c = build_rotated_memory(3, 2, Basis::Z).unwrap();
    let nc = NoisyCircuit::noiseless(&c);
    let params = ScReadoutParams::for_target_ps(0.01, 500e-9, f64::INFINITY).unwrap();
    let table = SoftReadoutTable::build(&ReadoutModel::Sc(params)).unwrap();
    let shots = 20_000;
    let batch = sample_shots(&nc, Some(&table), shots, 9);
    let n_meas = nc.n_meas;
    let mut flips = 0usize;
    for s in 0..shots {
        for m in 0..n_meas {
            flips += (batch.soft.hardened(s, m) != batch.soft.ideal(s, m)) as usize;
        }
    }
    let rate = flips as f64 / (shots * n_meas) as f64;
    let expect = table.mean_flip_prob();
    let sigma = (expect / (shots * n_meas) as f64).sqrt();
    assert!((rate - expect).abs() < 5.0 * sigma, "rate {rate} vs {expect}");
    // detectors must now fire, driven only by classification errors
    assert!((0..shots).any(|s| !batch.fired(s).is_empty()));
}
