//! Soft-information quantum error correction toolkit.
//!
//! The crate is organised as a pipeline:
//!
//! * [`readout`] turns ideal measurement outcomes into analog readout values and
//!   8-bit posteriors for superconducting (dispersive) and neutral-atom
//!   (photon counting) platforms.
//! * [`noise`] resolves circuit-level noise parameters (SI1000-style and
//!   Z-biased) into per-operation channels.
//! * [`codes`] builds rotated surface-code memory circuits and bivariate
//!   bicycle codes.
//! * [`pauli_sim`] samples noisy circuits with a bit-packed Pauli-frame
//!   simulator and extracts detector error models.
//! * [`uf`] and [`bp`] decode, optionally reweighting measurement-error
//!   mechanisms per shot from the soft readout.
//! * [`analysis`] turns failure counts into per-round rates, Λ fits and
//!   qubit footprints.
//! * [`experiment`] glues everything into reproducible sweeps.

pub mod analysis;
pub mod bp;
pub mod codes;
pub mod experiment;
pub mod noise;
pub mod pauli_sim;
pub mod prob;
pub mod readout;
pub mod uf;

use std::fmt;
use std::str::FromStr;

/// Pauli basis of a stabilizer, detector, observable or memory experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub fn other(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Basis::X => 'X',
            Basis::Z => 'Z',
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Basis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "X" | "x" => Ok(Basis::X),
            "Z" | "z" => Ok(Basis::Z),
            other => Err(format!("unknown basis '{other}'")),
        }
    }
}
