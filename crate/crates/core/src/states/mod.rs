//! State preparation: vacuum, flux loops, superpositions, charge strings,
//! gauge transformations and the physical projector.

pub mod color;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::basis::{gauss_residual_u1, winding_numbers, ChargeConfig, FluxConfig, PhysicalBasis, WindingSector};
use crate::error::{QlmError, Result};
use crate::lattice::{Path, SiteId};
use crate::operators::{BasisTag, WorkingBasis};
use crate::{C64, ZERO};

pub use color::{
    apply_color_transform, baryon_state_su3, meson_state_su3, random_su3, random_u3, ColorRegisterState, SlotKind,
};

/// Amplitudes over a tagged basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    tag: BasisTag,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(tag: BasisTag, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != tag.dim {
            return Err(QlmError::DimensionMismatch(amps.len(), tag.dim));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QlmError::InvalidArgument("non-finite amplitude".into()));
        }
        Ok(StateVector { tag, amps })
    }

    pub fn basis_state(tag: BasisTag, index: usize) -> Result<Self> {
        let mut amps = vec![ZERO; tag.dim];
        *amps
            .get_mut(index)
            .ok_or_else(|| QlmError::InvalidArgument(format!("index {index} outside dimension {}", tag.dim)))? =
            C64::new(1.0, 0.0);
        Ok(StateVector { tag, amps })
    }

    pub fn tag(&self) -> &BasisTag {
        &self.tag
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(QlmError::ZeroVector("cannot normalize".into()));
        }
        Ok(StateVector {
            tag: self.tag.clone(),
            amps: self.amps.iter().map(|a| a / n).collect(),
        })
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.tag.ensure_same(&other.tag)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨a|b⟩|² / (‖a‖² ‖b‖²)`
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        let d = self.norm_sqr() * other.norm_sqr();
        if d == 0.0 {
            return Err(QlmError::ZeroVector("fidelity with a zero state".into()));
        }
        Ok(self.inner(other)?.norm_sqr() / d)
    }

    /// `‖self − other‖₂`
    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        self.tag.ensure_same(&other.tag)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = StateDocument {
            format: STATE_FORMAT.into(),
            basis: self.tag.clone(),
            amplitudes: self.amps.iter().map(|a| [a.re, a.im]).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StateDocument = serde_json::from_str(text)?;
        if doc.format != STATE_FORMAT {
            return Err(QlmError::Serialization(format!("unknown state format {:?}", doc.format)));
        }
        StateVector::new(doc.basis, doc.amplitudes.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

const STATE_FORMAT: &str = "qlink-state/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDocument {
    format: String,
    basis: BasisTag,
    amplitudes: Vec<[f64; 2]>,
}

/// The basis state labelled by a U(1) configuration.
pub fn config_state(basis: &WorkingBasis, config: &FluxConfig) -> Result<StateVector> {
    let full = basis.space().index_of_config(config)?;
    let index = match basis {
        WorkingBasis::Full(_) => full,
        WorkingBasis::Physical(b) => b
            .index_of_full(full)
            .ok_or_else(|| QlmError::MissingState(format!("configuration {:?} is not physical", config.0)))?,
    };
    StateVector::basis_state(basis.tag(), index)
}

/// Every link in its trivial label.
pub fn vacuum_state(basis: &WorkingBasis) -> Result<StateVector> {
    let full = basis.space().trivial_index();
    let index = match basis {
        WorkingBasis::Full(_) => full,
        WorkingBasis::Physical(b) => b
            .index_of_full(full)
            .ok_or_else(|| QlmError::MissingState("the trivial configuration is not physical".into()))?,
    };
    StateVector::basis_state(basis.tag(), index)
}

/// Flux `e` deposited along a closed path.
pub fn flux_loop_state(basis: &WorkingBasis, path: &Path, e: i32) -> Result<StateVector> {
    if !path.is_closed() {
        return Err(QlmError::InvalidPath("flux loop needs a closed path".into()));
    }
    config_state(basis, &path_config(basis, path, e)?)
}

fn path_config(basis: &WorkingBasis, path: &Path, e: i32) -> Result<FluxConfig> {
    if !basis.model().is_u1() {
        return Err(QlmError::InvalidModel(format!("{} has no integer flux labels", basis.model())));
    }
    let mut config = FluxConfig::zeros(basis.lattice().n_links());
    for (l, f) in path.link_flux(e) {
        config.set(l, f);
    }
    Ok(config)
}

/// Result of [`superpose`].
#[derive(Debug, Clone)]
pub struct Superposition {
    pub state: StateVector,
    /// Winding sectors with nonzero weight (U(1) only).
    pub sectors: BTreeSet<WindingSector>,
    /// More than one winding sector is involved. Such a superposition can
    /// not be distinguished from a classical mixture by local observables.
    pub cross_winding: bool,
}

/// Normalized `Σ aᵢ ψᵢ`.
pub fn superpose(basis: &WorkingBasis, states: &[StateVector], amps: &[C64]) -> Result<Superposition> {
    if states.len() != amps.len() {
        return Err(QlmError::DimensionMismatch(states.len(), amps.len()));
    }
    let tag = basis.tag();
    let mut acc = vec![ZERO; tag.dim];
    for (s, &a) in states.iter().zip(amps) {
        tag.ensure_same(s.tag())?;
        for (x, y) in acc.iter_mut().zip(s.amps()) {
            *x += a * y;
        }
    }
    let state = StateVector::new(tag, acc)?.normalized()?;
    let sectors = sectors_of(basis, &state);
    let cross_winding = sectors.len() > 1;
    Ok(Superposition {
        state,
        sectors,
        cross_winding,
    })
}

/// Winding sectors carrying weight in a U(1) state.
pub fn sectors_of(basis: &WorkingBasis, state: &StateVector) -> BTreeSet<WindingSector> {
    if !basis.model().is_u1() {
        return BTreeSet::new();
    }
    state
        .amps()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(i, _)| match basis {
            WorkingBasis::Full(s) => winding_numbers(&s.config(i), s.lattice()),
            WorkingBasis::Physical(b) => b.sectors()[i],
        })
        .collect()
}

/// Flux `e` along an open path from a `+e` charge to a `−e` charge.
pub fn string_state(basis: &WorkingBasis, path: &Path, e: i32, charges: &ChargeConfig) -> Result<StateVector> {
    if path.is_closed() {
        return Err(QlmError::InvalidPath("a string needs distinct endpoints".into()));
    }
    if !path.is_simple(basis.lattice()) {
        return Err(QlmError::InvalidPath("string path revisits a site or link".into()));
    }
    if let Some(b) = basis.physical() {
        if b.charges() != charges {
            return Err(QlmError::InvalidCharges("charges differ from the basis charges".into()));
        }
    }
    let (qs, qe) = (charges.u1_at(path.start()), charges.u1_at(path.end()));
    if qs != e || qe != -e {
        return Err(QlmError::InvalidCharges(format!(
            "string of flux {e} needs charges {e} and {} at its ends, found {qs} and {qe}",
            -e
        )));
    }
    config_state(basis, &path_config(basis, path, e)?)
}

fn require_full<'a>(basis: &'a WorkingBasis, state: &StateVector) -> Result<&'a crate::FullSpace> {
    let WorkingBasis::Full(space) = basis else {
        return Err(QlmError::InvalidArgument("operation needs the full tensor basis".into()));
    };
    space.tag().ensure_same(state.tag())?;
    Ok(space)
}

/// Multiplies every amplitude by `exp(iα · residual_site)`.
pub fn apply_gauge_transform_u1(
    basis: &WorkingBasis,
    state: &StateVector,
    site: SiteId,
    alpha: f64,
    charges: &ChargeConfig,
) -> Result<StateVector> {
    let space = require_full(basis, state)?;
    if !space.model().is_u1() {
        return Err(QlmError::InvalidModel(format!("{} is not a U(1) model", space.model())));
    }
    let amps = state
        .amps()
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            if a == ZERO {
                return a;
            }
            let r = gauss_residual_u1(space.lattice(), &space.config(i), site, charges);
            a * C64::from_polar(1.0, alpha * r as f64)
        })
        .collect();
    StateVector::new(state.tag().clone(), amps)
}

/// `P P† ψ` for a full-basis state.
pub fn physical_projector_apply(state: &StateVector, basis: &PhysicalBasis) -> Result<StateVector> {
    basis.space().tag().ensure_same(state.tag())?;
    let inside = basis.project(state.amps())?;
    StateVector::new(state.tag().clone(), basis.embed(&inside)?)
}

/// Full-basis copy of a state given in a physical basis (identity on
/// full-basis states).
pub fn to_full(basis: &WorkingBasis, state: &StateVector) -> Result<StateVector> {
    basis.tag().ensure_same(state.tag())?;
    match basis {
        WorkingBasis::Full(_) => Ok(state.clone()),
        WorkingBasis::Physical(b) => StateVector::new(b.space().tag(), b.embed(state.amps())?),
    }
}

/// Physical-basis amplitudes of a full-basis state; anything outside the
/// subspace is dropped.
pub fn to_physical(basis: &PhysicalBasis, state: &StateVector) -> Result<StateVector> {
    basis.space().tag().ensure_same(state.tag())?;
    StateVector::new(basis.tag(), basis.project(state.amps())?)
}
