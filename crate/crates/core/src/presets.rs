//! Named states and hamiltonians.

use std::fmt;
use std::str::FromStr;

use crate::brachistophase::{canonical_brachistophase, canonical_max_accel, transport_unitary, Sign};
use crate::error::{Error, Result};
use crate::linalg::{HermitianOp, PureState};

/// Spin-coherent state `e_0` of spin `s = two_s / 2`.
pub fn coherent(two_s: usize) -> Result<PureState> {
    if two_s == 0 {
        return Err(Error::DimensionTooSmall(1));
    }
    PureState::basis(two_s + 1, 0)
}

/// `(1, 0, 0, -1) / sqrt 2`, spin 3/2.
pub fn ghz() -> PureState {
    PureState::from_real(&[1.0, 0.0, 0.0, -1.0]).expect("valid preset")
}

/// `(1, 0, 0, sqrt 2, 0) / sqrt 3`, spin 2.
pub fn tetrahedral() -> PureState {
    PureState::from_real(&[1.0, 0.0, 0.0, 2f64.sqrt(), 0.0]).expect("valid preset")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatePreset {
    Coherent,
    Ghz,
    Tetrahedral,
}

impl StatePreset {
    /// Fixed spin of the preset, if any.
    pub fn two_s(self) -> Option<usize> {
        match self {
            StatePreset::Coherent => None,
            StatePreset::Ghz => Some(3),
            StatePreset::Tetrahedral => Some(4),
        }
    }

    pub fn state(self, two_s: usize) -> Result<PureState> {
        if let Some(fixed) = self.two_s() {
            if fixed != two_s {
                return Err(Error::DimensionMismatch { expected: fixed + 1, found: two_s + 1 });
            }
        }
        match self {
            StatePreset::Coherent => coherent(two_s),
            StatePreset::Ghz => Ok(ghz()),
            StatePreset::Tetrahedral => Ok(tetrahedral()),
        }
    }
}

impl FromStr for StatePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coherent" => Ok(StatePreset::Coherent),
            "ghz" => Ok(StatePreset::Ghz),
            "tetrahedral" | "tetra" => Ok(StatePreset::Tetrahedral),
            other => Err(Error::InvalidArgument(format!("unknown state preset '{other}'"))),
        }
    }
}

impl fmt::Display for StatePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StatePreset::Coherent => "coherent",
            StatePreset::Ghz => "ghz",
            StatePreset::Tetrahedral => "tetrahedral",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HamiltonianPreset {
    Brachistophase,
    MaxAccel,
    /// `|e_1><e_0| + h.c.` moved to the state: generates a geodesic.
    Geodesic,
}

impl HamiltonianPreset {
    /// The preset built at `e_0` and transported to `psi0`.
    pub fn for_state(self, psi0: &PureState, sign: Sign) -> Result<HermitianOp> {
        let n = psi0.dim();
        let canonical = match self {
            HamiltonianPreset::Brachistophase => canonical_brachistophase(n, sign)?,
            HamiltonianPreset::MaxAccel => canonical_max_accel(n, sign)?,
            HamiltonianPreset::Geodesic => {
                if n < 2 {
                    return Err(Error::DimensionTooSmall(n));
                }
                let mut entries = vec![0.0; n * n];
                entries[1] = 1.0;
                entries[n] = 1.0;
                HermitianOp::from_real(n, &entries)?
            }
        };
        Ok(canonical.conjugate_by(&transport_unitary(&psi0.projector())?))
    }
}

impl FromStr for HamiltonianPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "brachistophase" | "bra" => Ok(HamiltonianPreset::Brachistophase),
            "max-accel" | "maxaccel" | "acc" => Ok(HamiltonianPreset::MaxAccel),
            "geodesic" => Ok(HamiltonianPreset::Geodesic),
            other => Err(Error::InvalidArgument(format!("unknown hamiltonian preset '{other}'"))),
        }
    }
}

impl fmt::Display for HamiltonianPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HamiltonianPreset::Brachistophase => "brachistophase",
            HamiltonianPreset::MaxAccel => "max-accel",
            HamiltonianPreset::Geodesic => "geodesic",
        })
    }
}
