//! Desk-scale simulator for truncated lattice gauge theories (quantum link
//! models) on a periodic square lattice.
//!
//! Every link carries a label from a truncated irrep alphabet (integer flux
//! for U(1), `|j, m_L, m_R⟩` for SU(2)). Physical states are those that
//! satisfy Gauss's law at every site; dynamics is Trotterized and compared
//! against exact exponentials, and gauge-violating errors show up as leakage
//! out of the physical subspace.

pub mod algebra;
pub mod basis;
pub mod error;
pub mod evolution;
pub mod lattice;
pub mod linalg;
pub mod noise;
pub mod observables;
pub mod operators;
pub mod states;
pub mod suite;

use serde::{Deserialize, Serialize};

pub use num_complex::Complex64 as C64;

pub use basis::{ChargeConfig, FluxConfig, FullSpace, GaugeModel, PhysicalBasis, WindingSector};
pub use error::{QlmError, Result};
pub use lattice::{Direction, Lattice, LinkId, Path, PlaquetteId, SiteId};
pub use operators::{BasisKind, BasisTag, SparseOperator};
pub use states::StateVector;

/// Resource limits for dense and full-tensor work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Largest matrix dimension handed to a dense routine.
    pub dense: usize,
    /// Largest full tensor-product dimension that may be enumerated.
    pub full: usize,
}

impl Budget {
    pub const DEFAULT_DENSE: usize = 4096;
    pub const DEFAULT_FULL: usize = 1 << 22;

    pub fn with_dense(dense: usize) -> Self {
        Budget {
            dense,
            ..Budget::default()
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            dense: Self::DEFAULT_DENSE,
            full: Self::DEFAULT_FULL,
        }
    }
}

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
