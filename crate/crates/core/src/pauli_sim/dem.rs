//! Detector error models by symbolic propagation of single Paulis.
//!
//! Text form:
//!
//! ```text
//! detector(Z) D0
//! observable(Z) L0
//! error(0.001) D0 D1
//! error(0.0005) D1 L0
//! error(0.002) D0 D1 M7      # classification error of measurement 7
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{Instr, NoisyCircuit};
use crate::prob::{depolarize_independent, xor_prob};
use crate::Basis;

#[derive(Debug, Error, PartialEq)]
pub enum DemError {
    #[error("fault after instruction {instr} flips {count} {basis}-type detectors {dets:?}; the CX schedule is probably wrong")]
    TooManyDetectors { instr: usize, basis: Basis, count: usize, dets: Vec<u32> },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Independent error mechanism.
#[derive(Clone, Debug, PartialEq)]
pub struct Mechanism {
    pub prob: f64,
    /// Sorted detector indices.
    pub dets: Vec<u32>,
    /// Observable flips as a bit mask.
    pub obs: u64,
    /// Set iff this is the classification-error channel of that measurement.
    pub meas_tag: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetectorErrorModel {
    pub n_det: usize,
    pub n_obs: usize,
    pub det_basis: Vec<Option<Basis>>,
    pub obs_basis: Vec<Option<Basis>>,
    pub mechanisms: Vec<Mechanism>,
}

impl DetectorErrorModel {
    /// Mechanisms carrying a measurement tag, keyed by that measurement.
    pub fn tagged(&self) -> HashMap<u32, usize> {
        self.mechanisms.iter().enumerate().filter_map(|(i, m)| m.meas_tag.map(|t| (t, i))).collect()
    }

    pub fn validate(&self) -> Result<(), DemError> {
        if self.det_basis.len() != self.n_det || self.obs_basis.len() != self.n_obs {
            return Err(DemError::Invalid("basis tags do not match detector/observable counts".into()));
        }
        let mut seen = HashMap::new();
        let mut tags = std::collections::HashSet::new();
        for (i, m) in self.mechanisms.iter().enumerate() {
            if !(m.prob > 0.0 && m.prob <= 0.5) {
                return Err(DemError::Invalid(format!("mechanism {i} has probability {}", m.prob)));
            }
            if m.dets.windows(2).any(|w| w[0] >= w[1]) || m.dets.last().is_some_and(|&d| d as usize >= self.n_det) {
                return Err(DemError::Invalid(format!("mechanism {i} has bad detector list {:?}", m.dets)));
            }
            if self.n_obs < 64 && m.obs >> self.n_obs != 0 {
                return Err(DemError::Invalid(format!("mechanism {i} flips an undeclared observable")));
            }
            match m.meas_tag {
                Some(t) => {
                    if !tags.insert(t) {
                        return Err(DemError::Invalid(format!("measurement tag M{t} used twice")));
                    }
                }
                None => {
                    if seen.insert((m.dets.clone(), m.obs), i).is_some() {
                        return Err(DemError::Invalid(format!("mechanism {i} duplicates an earlier signature")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let tag = |b: Option<Basis>| b.map(|b| format!("({b})")).unwrap_or_default();
        for (i, &b) in self.det_basis.iter().enumerate() {
            writeln!(s, "detector{} D{i}", tag(b)).unwrap();
        }
        for (i, &b) in self.obs_basis.iter().enumerate() {
            writeln!(s, "observable{} L{i}", tag(b)).unwrap();
        }
        for m in &self.mechanisms {
            write!(s, "error({})", m.prob).unwrap();
            for d in &m.dets {
                write!(s, " D{d}").unwrap();
            }
            for k in 0..64 {
                if (m.obs >> k) & 1 == 1 {
                    write!(s, " L{k}").unwrap();
                }
            }
            if let Some(t) = m.meas_tag {
                write!(s, " M{t}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Parses the text form. Detectors and observables referenced by an
    /// `error` line but never declared get no basis tag.
    pub fn from_text(text: &str) -> Result<Self, DemError> {
        let mut dem = DetectorErrorModel::default();
        let mut det_basis: HashMap<usize, Option<Basis>> = HashMap::new();
        let mut obs_basis: HashMap<usize, Option<Basis>> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| DemError::Parse { line: line_no, msg };
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap();
            let (name, arg) = match head.find('(') {
                Some(open) => {
                    let close = head.rfind(')').ok_or_else(|| err(format!("unclosed '(' in '{head}'")))?;
                    (&head[..open], Some(&head[open + 1..close]))
                }
                None => (head, None),
            };
            let index = |tok: &str, prefix: char| -> Result<usize, DemError> {
                tok.strip_prefix(prefix)
                    .and_then(|t| t.parse::<usize>().ok())
                    .ok_or_else(|| err(format!("expected {prefix}<index>, got '{tok}'")))
            };
            let basis = |arg: Option<&str>| -> Result<Option<Basis>, DemError> { arg.map(|a| a.parse::<Basis>().map_err(err)).transpose() };
            match name {
                "detector" => {
                    for tok in parts {
                        det_basis.insert(index(tok, 'D')?, basis(arg)?);
                    }
                }
                "observable" => {
                    for tok in parts {
                        obs_basis.insert(index(tok, 'L')?, basis(arg)?);
                    }
                }
                "error" => {
                    let prob: f64 = arg.and_then(|a| a.parse().ok()).ok_or_else(|| err("error(...) needs a probability".into()))?;
                    let mut m = Mechanism { prob, dets: Vec::new(), obs: 0, meas_tag: None };
                    for tok in parts {
                        match tok.chars().next() {
                            Some('D') => {
                                let d = index(tok, 'D')?;
                                det_basis.entry(d).or_insert(None);
                                m.dets.push(d as u32);
                            }
                            Some('L') => {
                                let l = index(tok, 'L')?;
                                if l >= 64 {
                                    return Err(err("at most 64 observables".into()));
                                }
                                obs_basis.entry(l).or_insert(None);
                                m.obs ^= 1 << l;
                            }
                            Some('M') => m.meas_tag = Some(index(tok, 'M')? as u32),
                            _ => return Err(err(format!("unexpected token '{tok}'"))),
                        }
                    }
                    m.dets.sort_unstable();
                    dem.mechanisms.push(m);
                }
                other => return Err(err(format!("unknown line type '{other}'"))),
            }
        }
        dem.n_det = det_basis.keys().max().map_or(0, |&m| m + 1);
        dem.n_obs = obs_basis.keys().max().map_or(0, |&m| m + 1);
        dem.det_basis = (0..dem.n_det).map(|i| det_basis.get(&i).copied().flatten()).collect();
        dem.obs_basis = (0..dem.n_obs).map(|i| obs_basis.get(&i).copied().flatten()).collect();
        dem.validate()?;
        Ok(dem)
    }
}

/// Elementary fault: up to two single-qubit Paulis, coded bit 0 = X and
/// bit 1 = Z.
#[derive(Clone, Copy, Debug)]
struct Fault {
    prob: f64,
    paulis: [(u32, u8); 2],
}

/// Converts disjoint X/Y/Z probabilities to the equivalent independent
/// X, Y and Z channels.
fn independent_xyz(px: f64, py: f64, pz: f64) -> [f64; 3] {
    let la = 1.0 - 2.0 * (py + pz);
    let lb = 1.0 - 2.0 * (px + pz);
    let lc = 1.0 - 2.0 * (px + py);
    let half = |v: f64| 0.5 - 0.5 * v.max(0.0).sqrt();
    if la <= 0.0 || lb <= 0.0 || lc <= 0.0 {
        // fully mixing channel; any split saturates at 1/2
        return [px.min(0.5), py.min(0.5), pz.min(0.5)];
    }
    [half(lb * lc / la), half(la * lc / lb), half(la * lb / lc)]
}

/// Builds the error model of `nc`: every nontrivial Pauli of every channel is
/// propagated to the end of the circuit, identical signatures are merged, and
/// each measurement gets its own tagged classification mechanism with
/// probability `nc.soft_ps`.
pub fn build_dem(nc: &NoisyCircuit) -> Result<DetectorErrorModel, DemError> {
    let mut meas_dets: Vec<Vec<u32>> = vec![Vec::new(); nc.n_meas];
    for (d, ms) in nc.detectors.iter().enumerate() {
        for &m in ms {
            meas_dets[m as usize].push(d as u32);
        }
    }
    let mut meas_obs = vec![0u64; nc.n_meas];
    for (k, ms) in nc.observables.iter().enumerate() {
        for &m in ms {
            meas_obs[m as usize] ^= 1 << k;
        }
    }

    let mut merged: HashMap<(Vec<u32>, u64), f64> = HashMap::new();
    let mut order: Vec<(Vec<u32>, u64)> = Vec::new();
    let mut x = vec![0u64; nc.n_qubits];
    let mut z = vec![0u64; nc.n_qubits];
    let mut flips = vec![0u64; nc.n_meas];
    for (pos, ins) in nc.instrs.iter().enumerate() {
        let faults = faults_of(ins);
        for chunk in faults.chunks(64) {
            x.iter_mut().for_each(|w| *w = 0);
            z.iter_mut().for_each(|w| *w = 0);
            flips.iter_mut().for_each(|w| *w = 0);
            for (lane, f) in chunk.iter().enumerate() {
                for &(q, p) in &f.paulis {
                    if p & 1 == 1 {
                        x[q as usize] |= 1 << lane;
                    }
                    if p & 2 == 2 {
                        z[q as usize] |= 1 << lane;
                    }
                }
            }
            propagate(&nc.instrs[pos + 1..], &mut x, &mut z, &mut flips);
            let mut lane_dets: Vec<Vec<u32>> = vec![Vec::new(); chunk.len()];
            let mut lane_obs = vec![0u64; chunk.len()];
            for (m, &w) in flips.iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let lane = w.trailing_zeros() as usize;
                    w &= w - 1;
                    lane_dets[lane].extend_from_slice(&meas_dets[m]);
                    lane_obs[lane] ^= meas_obs[m];
                }
            }
            for (lane, f) in chunk.iter().enumerate() {
                let dets = parity_set(std::mem::take(&mut lane_dets[lane]));
                let obs = lane_obs[lane];
                if dets.is_empty() && obs == 0 {
                    continue;
                }
                check_weight(nc, pos, &dets)?;
                let key = (dets, obs);
                match merged.get_mut(&key) {
                    Some(p) => *p = xor_prob(*p, f.prob),
                    None => {
                        merged.insert(key.clone(), f.prob);
                        order.push(key);
                    }
                }
            }
        }
    }

    let mut mechanisms: Vec<Mechanism> = order
        .into_iter()
        .map(|key| {
            let prob = merged[&key];
            Mechanism { prob, dets: key.0, obs: key.1, meas_tag: None }
        })
        .collect();
    if nc.soft_ps > 0.0 {
        for m in 0..nc.n_meas {
            let dets = parity_set(meas_dets[m].clone());
            if dets.is_empty() && meas_obs[m] == 0 {
                continue;
            }
            mechanisms.push(Mechanism { prob: nc.soft_ps.min(0.5), dets, obs: meas_obs[m], meas_tag: Some(m as u32) });
        }
    }
    let dem = DetectorErrorModel {
        n_det: nc.detectors.len(),
        n_obs: nc.observables.len(),
        det_basis: nc.det_basis.clone(),
        obs_basis: nc.obs_basis.clone(),
        mechanisms,
    };
    Ok(dem)
}

fn faults_of(ins: &Instr) -> Vec<Fault> {
    let mut out = Vec::new();
    match ins {
        Instr::Pauli1 { px, py, pz, targets } => {
            let probs = independent_xyz(*px, *py, *pz);
            // X, Y, Z as (x, z) codes
            let codes = [1u8, 3, 2];
            for &q in targets {
                for (&p, &code) in probs.iter().zip(&codes) {
                    if p > 1e-15 {
                        out.push(Fault { prob: p, paulis: [(q, code), (q, 0)] });
                    }
                }
            }
        }
        Instr::Depol2 { p, pairs } => {
            let q = depolarize_independent(*p, 15);
            if q > 0.0 {
                for &(a, b) in pairs {
                    for r in 1u8..16 {
                        out.push(Fault { prob: q, paulis: [(a, r & 3), (b, r >> 2)] });
                    }
                }
            }
        }
        _ => {}
    }
    out
}

/// Noiseless propagation of 64 frames through `instrs`, accumulating
/// measurement flips.
fn propagate(instrs: &[Instr], x: &mut [u64], z: &mut [u64], flips: &mut [u64]) {
    for ins in instrs {
        match ins {
            Instr::R(qs) => {
                for &q in qs {
                    x[q as usize] = 0;
                    z[q as usize] = 0;
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
                    flips[*first as usize + k] ^= x[q as usize];
                    // a Z on a fresh Z eigenstate acts trivially
                    z[q as usize] = 0;
                }
            }
            Instr::Pauli1 { .. } | Instr::Depol2 { .. } => {}
        }
    }
}

/// Sorted indices that occur an odd number of times.
fn parity_set(mut v: Vec<u32>) -> Vec<u32> {
    v.sort_unstable();
    let mut out = Vec::with_capacity(v.len());
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        if (j - i) % 2 == 1 {
            out.push(v[i]);
        }
        i = j;
    }
    out
}

fn check_weight(nc: &NoisyCircuit, pos: usize, dets: &[u32]) -> Result<(), DemError> {
    for basis in [Basis::X, Basis::Z] {
        let count = dets.iter().filter(|&&d| nc.det_basis[d as usize] == Some(basis)).count();
        if count > 4 {
            return Err(DemError::TooManyDetectors { instr: pos, basis, count, dets: dets.to_vec() });
        }
    }
    Ok(())
}
