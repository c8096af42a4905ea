//! Noiseless Clifford circuits with detector and observable annotations.
//!
//! Text form, one instruction per line (`#` starts a comment):
//!
//! ```text
//! QUBIT 0 1 1          # index, x, y (optional)
//! R 0 1 2
//! H 2
//! CX 2 0 2 1           # control/target pairs
//! M 2
//! TICK
//! DETECTOR(Z) 0 3      # absolute measurement indices, basis tag optional
//! OBSERVABLE(Z) 5 6 7
//! ```
//!
//! `TICK` ends a layer; every qubit not touched in a layer idles through it.

use std::fmt::Write as _;

use thiserror::Error;

use crate::Basis;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid circuit: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Op {
    R(Vec<u32>),
    H(Vec<u32>),
    Cx(Vec<(u32, u32)>),
    M(Vec<u32>),
    Tick,
}

/// Parity of a set of measurement outcomes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parity {
    pub basis: Option<Basis>,
    pub meas: Vec<u32>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub coords: Vec<Option<(i32, i32)>>,
    pub ops: Vec<Op>,
    pub detectors: Vec<Parity>,
    pub observables: Vec<Parity>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, coords: vec![None; n_qubits], ..Default::default() }
    }

    /// Number of measurements performed.
    pub fn n_meas(&self) -> usize {
        self.ops.iter().map(|op| if let Op::M(q) = op { q.len() } else { 0 }).sum()
    }

    /// Qubit measured by each measurement index.
    pub fn meas_qubits(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for op in &self.ops {
            if let Op::M(qs) = op {
                out.extend_from_slice(qs);
            }
        }
        out
    }

    /// Appends a measurement and returns the index of its first result.
    pub fn measure(&mut self, qubits: &[u32]) -> u32 {
        let first = self.n_meas() as u32;
        self.ops.push(Op::M(qubits.to_vec()));
        first
    }

    pub fn tick(&mut self) {
        self.ops.push(Op::Tick);
    }

    /// Checks qubit ranges, layer conflicts and measurement references.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let n = self.n_qubits as u32;
        let mut used = vec![false; self.n_qubits];
        let mut touched: Vec<u32> = Vec::new();
        let claim = |q: u32, used: &mut Vec<bool>, touched: &mut Vec<u32>| -> Result<(), CircuitError> {
            if q >= n {
                return Err(CircuitError::Invalid(format!("qubit {q} out of range ({n} qubits)")));
            }
            if used[q as usize] {
                return Err(CircuitError::Invalid(format!("qubit {q} used twice in one layer")));
            }
            used[q as usize] = true;
            touched.push(q);
            Ok(())
        };
        for op in &self.ops {
            match op {
                Op::R(qs) | Op::H(qs) | Op::M(qs) => {
                    for &q in qs {
                        claim(q, &mut used, &mut touched)?;
                    }
                }
                Op::Cx(pairs) => {
                    for &(c, t) in pairs {
                        claim(c, &mut used, &mut touched)?;
                        claim(t, &mut used, &mut touched)?;
                    }
                }
                Op::Tick => {
                    for q in touched.drain(..) {
                        used[q as usize] = false;
                    }
                }
            }
        }
        let n_meas = self.n_meas() as u32;
        for (kind, list) in [("detector", &self.detectors), ("observable", &self.observables)] {
            for (i, p) in list.iter().enumerate() {
                if let Some(&m) = p.meas.iter().find(|&&m| m >= n_meas) {
                    return Err(CircuitError::Invalid(format!("{kind} {i} references measurement {m} of {n_meas}")));
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (q, c) in self.coords.iter().enumerate() {
            match c {
                Some((x, y)) => writeln!(s, "QUBIT {q} {x} {y}").unwrap(),
                None => writeln!(s, "QUBIT {q}").unwrap(),
            }
        }
        let join = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        for op in &self.ops {
            match op {
                Op::R(q) => writeln!(s, "R {}", join(q)).unwrap(),
                Op::H(q) => writeln!(s, "H {}", join(q)).unwrap(),
                Op::M(q) => writeln!(s, "M {}", join(q)).unwrap(),
                Op::Cx(pairs) => {
                    let flat: Vec<u32> = pairs.iter().flat_map(|&(c, t)| [c, t]).collect();
                    writeln!(s, "CX {}", join(&flat)).unwrap()
                }
                Op::Tick => writeln!(s, "TICK").unwrap(),
            }
        }
        for (name, list) in [("DETECTOR", &self.detectors), ("OBSERVABLE", &self.observables)] {
            for p in list {
                let tag = p.basis.map(|b| format!("({b})")).unwrap_or_default();
                writeln!(s, "{name}{tag} {}", join(&p.meas)).unwrap();
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, CircuitError> {
        let mut c = Circuit::default();
        let mut max_qubit: i64 = -1;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| CircuitError::Parse { line: line_no, msg };
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap();
            let args: Vec<&str> = parts.collect();
            let nums = |args: &[&str]| -> Result<Vec<u32>, CircuitError> {
                args.iter().map(|a| a.parse::<u32>().map_err(|_| err(format!("bad index '{a}'")))).collect()
            };
            let (name, tag) = match head.find('(') {
                Some(open) => {
                    let close = head.rfind(')').ok_or_else(|| err(format!("unclosed '(' in '{head}'")))?;
                    let basis = head[open + 1..close].parse::<Basis>().map_err(err)?;
                    (&head[..open], Some(basis))
                }
                None => (head, None),
            };
            match name.to_ascii_uppercase().as_str() {
                "QUBIT" => {
                    let v: Vec<i64> =
                        args.iter().map(|a| a.parse::<i64>().map_err(|_| err(format!("bad number '{a}'")))).collect::<Result<_, _>>()?;
                    if v.len() != 1 && v.len() != 3 {
                        return Err(err("QUBIT takes an index and optional x y".into()));
                    }
                    if v[0] < 0 {
                        return Err(err("negative qubit index".into()));
                    }
                    let q = v[0] as usize;
                    if c.coords.len() <= q {
                        c.coords.resize(q + 1, None);
                    }
                    if v.len() == 3 {
                        c.coords[q] = Some((v[1] as i32, v[2] as i32));
                    }
                    max_qubit = max_qubit.max(q as i64);
                }
                "R" | "H" | "M" => {
                    let qs = nums(&args)?;
                    if let Some(&m) = qs.iter().max() {
                        max_qubit = max_qubit.max(m as i64);
                    }
                    c.ops.push(match name.to_ascii_uppercase().as_str() {
                        "R" => Op::R(qs),
                        "H" => Op::H(qs),
                        _ => Op::M(qs),
                    });
                }
                "CX" | "CNOT" => {
                    let qs = nums(&args)?;
                    if qs.len() % 2 != 0 {
                        return Err(err("CX needs an even number of targets".into()));
                    }
                    if let Some(&m) = qs.iter().max() {
                        max_qubit = max_qubit.max(m as i64);
                    }
                    c.ops.push(Op::Cx(qs.chunks(2).map(|p| (p[0], p[1])).collect()));
                }
                "TICK" => c.ops.push(Op::Tick),
                "DETECTOR" => c.detectors.push(Parity { basis: tag, meas: nums(&args)? }),
                "OBSERVABLE" => c.observables.push(Parity { basis: tag, meas: nums(&args)? }),
                other => return Err(err(format!("unknown instruction '{other}'"))),
            }
        }
        c.n_qubits = (max_qubit + 1) as usize;
        c.coords.resize(c.n_qubits, None);
        c.validate()?;
        Ok(c)
    }
}
