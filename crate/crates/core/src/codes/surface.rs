//! Rotated planar surface-code memory experiments.
//!
//! Data qubits sit at odd coordinates `(2i+1, 2j+1)`, measure qubits at even
//! coordinates. A plaquette at `(x, y)` is X-type when `x/2 + y/2` is even.
//! X-type plaquettes close the top and bottom boundaries and Z-type ones the
//! left and right, so `Z_L` runs along the row `y = 1` and `X_L` down the
//! column `x = 1`.

use std::collections::HashMap;

use super::circuit::{Circuit, CircuitError, Op, Parity};
use crate::Basis;

/// CX offsets from an X-type measure qubit, one per layer. The last two touch
/// a horizontal pair so hook errors run across `X_L`.
const X_ORDER: [(i32, i32); 4] = [(-1, -1), (1, -1), (-1, 1), (1, 1)];
/// Same for Z-type, with the last two touching a vertical pair.
const Z_ORDER: [(i32, i32); 4] = [(-1, -1), (-1, 1), (1, -1), (1, 1)];

/// Stabilizer of the rotated code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plaquette {
    pub basis: Basis,
    pub coord: (i32, i32),
    pub ancilla: u32,
    /// Data qubit for each CX layer, `None` on the boundary.
    pub schedule: [Option<u32>; 4],
}

impl Plaquette {
    pub fn support(&self) -> Vec<u32> {
        self.schedule.iter().flatten().copied().collect()
    }
}

/// Qubit layout of a distance-`d` rotated code.
#[derive(Clone, Debug)]
pub struct RotatedLayout {
    pub d: usize,
    pub data: Vec<u32>,
    pub data_coords: Vec<(i32, i32)>,
    pub plaquettes: Vec<Plaquette>,
    pub coords: Vec<(i32, i32)>,
}

impl RotatedLayout {
    pub fn new(d: usize) -> Result<Self, CircuitError> {
        if d < 3 || d.is_multiple_of(2) {
            return Err(CircuitError::Invalid(format!("distance must be odd and >= 3, got {d}")));
        }
        let size = 2 * d as i32;
        let mut coords = Vec::new();
        let mut index = HashMap::new();
        for j in 0..d as i32 {
            for i in 0..d as i32 {
                let c = (2 * i + 1, 2 * j + 1);
                index.insert(c, coords.len() as u32);
                coords.push(c);
            }
        }
        let data: Vec<u32> = (0..coords.len() as u32).collect();
        let data_coords = coords.clone();
        let mut plaquettes = Vec::new();
        for y in (0..=size).step_by(2) {
            for x in (0..=size).step_by(2) {
                let basis = if (x / 2 + y / 2) % 2 == 0 { Basis::X } else { Basis::Z };
                let interior = x > 0 && x < size && y > 0 && y < size;
                let keep = interior
                    || (basis == Basis::X && (y == 0 || y == size) && x > 0 && x < size)
                    || (basis == Basis::Z && (x == 0 || x == size) && y > 0 && y < size);
                if !keep {
                    continue;
                }
                let order = if basis == Basis::X { X_ORDER } else { Z_ORDER };
                let mut schedule = [None; 4];
                for (k, (dx, dy)) in order.iter().enumerate() {
                    schedule[k] = index.get(&(x + dx, y + dy)).copied();
                }
                let ancilla = coords.len() as u32;
                coords.push((x, y));
                plaquettes.push(Plaquette { basis, coord: (x, y), ancilla, schedule });
            }
        }
        Ok(Self { d, data, data_coords, plaquettes, coords })
    }

    pub fn n_qubits(&self) -> usize {
        self.coords.len()
    }

    /// Data qubits of the logical operator of type `basis`.
    pub fn logical(&self, basis: Basis) -> Vec<u32> {
        self.data
            .iter()
            .zip(&self.data_coords)
            .filter(|(_, &(x, y))| match basis {
                Basis::Z => y == 1,
                Basis::X => x == 1,
            })
            .map(|(&q, _)| q)
            .collect()
    }
}

/// Memory experiment: prepare the `basis` logical eigenstate, run `rounds`
/// rounds of stabilizer measurement and read every data qubit out in
/// `basis`.
pub fn build_rotated_memory(d: usize, rounds: usize, basis: Basis) -> Result<Circuit, CircuitError> {
    if rounds == 0 {
        return Err(CircuitError::Invalid("need at least one round".into()));
    }
    let layout = RotatedLayout::new(d)?;
    let mut c = Circuit::new(layout.n_qubits());
    c.coords = layout.coords.iter().map(|&p| Some(p)).collect();
    let ancillas: Vec<u32> = layout.plaquettes.iter().map(|p| p.ancilla).collect();
    let x_ancillas: Vec<u32> = layout.plaquettes.iter().filter(|p| p.basis == Basis::X).map(|p| p.ancilla).collect();
    let mut prev: Vec<Option<u32>> = vec![None; layout.plaquettes.len()];
    for round in 0..rounds {
        let mut reset = ancillas.clone();
        let mut hadamards = x_ancillas.clone();
        if round == 0 {
            reset.extend_from_slice(&layout.data);
            if basis == Basis::X {
                hadamards.extend_from_slice(&layout.data);
            }
        }
        c.ops.push(Op::R(reset));
        c.tick();
        c.ops.push(Op::H(hadamards));
        c.tick();
        for k in 0..4 {
            let mut pairs = Vec::new();
            for p in &layout.plaquettes {
                if let Some(q) = p.schedule[k] {
                    pairs.push(match p.basis {
                        Basis::X => (p.ancilla, q),
                        Basis::Z => (q, p.ancilla),
                    });
                }
            }
            c.ops.push(Op::Cx(pairs));
            c.tick();
        }
        c.ops.push(Op::H(x_ancillas.clone()));
        c.tick();
        let first = c.measure(&ancillas);
        c.tick();
        for (i, p) in layout.plaquettes.iter().enumerate() {
            let m = first + i as u32;
            match prev[i] {
                Some(before) => c.detectors.push(Parity { basis: Some(p.basis), meas: vec![before, m] }),
                None if p.basis == basis => c.detectors.push(Parity { basis: Some(p.basis), meas: vec![m] }),
                None => {}
            }
            prev[i] = Some(m);
        }
    }
    if basis == Basis::X {
        c.ops.push(Op::H(layout.data.clone()));
        c.tick();
    }
    let first = c.measure(&layout.data);
    let data_meas: HashMap<u32, u32> = layout.data.iter().enumerate().map(|(i, &q)| (q, first + i as u32)).collect();
    for (i, p) in layout.plaquettes.iter().enumerate() {
        if p.basis != basis {
            continue;
        }
        let mut meas = vec![prev[i].expect("every plaquette measured")];
        meas.extend(p.support().iter().map(|q| data_meas[q]));
        c.detectors.push(Parity { basis: Some(basis), meas });
    }
    let obs = layout.logical(basis).iter().map(|q| data_meas[q]).collect();
    c.observables.push(Parity { basis: Some(basis), meas: obs });
    c.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overlap(a: &[u32], b: &[u32]) -> usize {
        a.iter().filter(|q| b.contains(q)).count()
    }

    #[test]
    fn qubit_counts() {
        for d in [3, 5, 7, 9] {
            let l = RotatedLayout::new(d).unwrap();
            assert_eq!(l.data.len(), d * d);
            assert_eq!(l.plaquettes.len(), d * d - 1);
            assert_eq!(l.n_qubits(), 2 * d * d - 1);
            let nx = l.plaquettes.iter().filter(|p| p.basis == Basis::X).count();
            assert_eq!(nx, (d * d - 1) / 2);
        }
        assert!(RotatedLayout::new(4).is_err());
        assert!(build_rotated_memory(4, 1, Basis::Z).is_err());
    }

    #[test]
    fn stabilizers_and_logicals_commute() {
        let l = RotatedLayout::new(5).unwrap();
        let zl = l.logical(Basis::Z);
        let xl = l.logical(Basis::X);
        assert_eq!(zl.len(), 5);
        assert_eq!(overlap(&zl, &xl) % 2, 1);
        for a in &l.plaquettes {
            let sa = a.support();
            let against = if a.basis == Basis::X { &zl } else { &xl };
            assert_eq!(overlap(&sa, against) % 2, 0);
            for b in &l.plaquettes {
                if a.basis != b.basis {
                    assert_eq!(overlap(&sa, &b.support()) % 2, 0);
                }
            }
        }
    }

    #[test]
    fn detector_counts() {
        let c = build_rotated_memory(3, 1, Basis::Z).unwrap();
        assert_eq!(c.n_qubits, 17);
        // 4 first-round Z detectors, 4 closing detectors
        assert_eq!(c.detectors.len(), 8);
        let c = build_rotated_memory(5, 10, Basis::X).unwrap();
        assert_eq!(c.n_qubits, 49);
        assert_eq!(c.detectors.len(), 12 + 9 * 24 + 12);
        assert_eq!(c.n_meas(), 10 * 24 + 25);
    }
}
