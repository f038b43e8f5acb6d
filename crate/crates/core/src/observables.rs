//! Gauge-invariant measurements, leakage diagnostics, spectra and
//! entanglement.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{ChargeConfig, PhysicalBasis};
use crate::error::{check_budget, QlmError, Result};
use crate::lattice::{Direction, LinkId, Path, PlaquetteId};
use crate::linalg::{block_eigh, eigh};
use crate::operators::{
    electric_energy_expr, gauss_squared_expr, plaquette_expr, wilson_loop_expr, winding_expr, OperatorExpr,
    SparseOperator, WorkingBasis,
};
use crate::states::StateVector;
use crate::{Budget, C64, ZERO};

/// One measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub name: String,
    pub re: f64,
    pub im: f64,
    pub time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<String>,
}

/// `⟨ψ|A|ψ⟩ / ⟨ψ|ψ⟩`
pub fn expectation(basis: &WorkingBasis, expr: &OperatorExpr, psi: &StateVector) -> Result<C64> {
    basis.tag().ensure_same(psi.tag())?;
    let n = psi.norm_sqr();
    if n == 0.0 {
        return Err(QlmError::ZeroVector("expectation in a zero state".into()));
    }
    Ok(basis.expectation(expr, psi.amps())? / n)
}

/// `Σ_ℓ ⟨E_ℓ²⟩` (U(1)) or `Σ_ℓ ⟨C_ℓ⟩` (SU(2)).
pub fn electric_energy(basis: &WorkingBasis, psi: &StateVector) -> Result<f64> {
    Ok(expectation(basis, &electric_energy_expr(basis.lattice(), basis.model()), psi)?.re)
}

/// `⟨U_□⟩` (U(1)) or `⟨Tr U_□⟩` (SU(2)).
pub fn plaquette_expectation(basis: &WorkingBasis, psi: &StateVector, p: PlaquetteId) -> Result<C64> {
    if p.0 >= basis.lattice().n_plaquettes() {
        return Err(QlmError::InvalidArgument(format!("unknown plaquette {}", p.0)));
    }
    expectation(basis, &plaquette_expr(basis.lattice(), basis.model(), p), psi)
}

/// `⟨∏_{ℓ∈C} U_ℓ^{±}⟩`, complex; the real part is the usual Wilson loop.
pub fn wilson_loop(basis: &WorkingBasis, psi: &StateVector, path: &Path) -> Result<C64> {
    expectation(basis, &wilson_loop_expr(basis.model(), path)?, psi)
}

/// `(⟨W_x⟩, ⟨W_y⟩)`
pub fn winding_expectation(basis: &WorkingBasis, psi: &StateVector) -> Result<(f64, f64)> {
    let l = basis.lattice();
    let wx = expectation(basis, &winding_expr(l, basis.model(), Direction::X)?, psi)?.re;
    let wy = expectation(basis, &winding_expr(l, basis.model(), Direction::Y)?, psi)?.re;
    Ok((wx, wy))
}

/// `1 − ‖P†ψ‖² / ‖ψ‖²`, clamped to `[0, 1]`. States already expressed in
/// `basis` have no outside component.
pub fn gauge_violation(psi: &StateVector, basis: &PhysicalBasis) -> Result<f64> {
    let n = psi.norm_sqr();
    if n == 0.0 {
        return Err(QlmError::ZeroVector("gauge violation of a zero state".into()));
    }
    if psi.tag() == &basis.tag() {
        return Ok(0.0);
    }
    basis.space().tag().ensure_same(psi.tag())?;
    let inside: f64 = basis.project(psi.amps())?.iter().map(|a| a.norm_sqr()).sum();
    Ok((1.0 - inside / n).clamp(0.0, 1.0))
}

/// Per-site `⟨G_x²⟩` (U(1)) or `Σ_a ⟨(G_x^a)²⟩` (SU(2)).
pub fn syndrome_sweep(basis: &WorkingBasis, psi: &StateVector, charges: &ChargeConfig) -> Result<Vec<f64>> {
    let l = basis.lattice();
    l.sites()
        .map(|x| Ok(expectation(basis, &gauss_squared_expr(l, basis.model(), x, charges)?, psi)?.re))
        .collect()
}

/// Lowest eigenpair of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
    /// Number of eigenvalues within [`DEGENERACY_TOL`] of the lowest.
    pub multiplicity: usize,
}

/// Relative tolerance for counting degenerate ground levels.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Ascending spectrum, assembled from the connected blocks of `h`.
pub fn spectrum(h: &SparseOperator, budget: &Budget) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = block_eigh(h, budget)?.into_iter().flat_map(|b| b.values).collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Ground state with its largest-magnitude amplitude made real positive.
/// A degenerate level is reported through `multiplicity`; the returned
/// vector is then the one from the block with the smallest basis index.
pub fn ground_state(h: &SparseOperator, budget: &Budget) -> Result<GroundState> {
    let blocks = block_eigh(h, budget)?;
    let (bi, energy) = blocks
        .iter()
        .enumerate()
        .filter_map(|(k, b)| b.values.first().map(|&v| (k, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| QlmError::InvalidArgument("empty operator".into()))?;
    let tol = DEGENERACY_TOL * energy.abs().max(1.0);
    let multiplicity = blocks
        .iter()
        .flat_map(|b| b.values.iter())
        .filter(|&&v| (v - energy).abs() <= tol)
        .count();
    let b = &blocks[bi];
    let mut amps = vec![ZERO; h.dim()];
    let col = b.vectors.column(0);
    let mut pivot = ZERO;
    for &z in col.iter() {
        if z.norm() > pivot.norm() + 1e-12 {
            pivot = z;
        }
    }
    let phase = pivot.conj() / pivot.norm();
    for (k, &i) in b.indices.iter().enumerate() {
        amps[i] = col[k] * phase;
    }
    Ok(GroundState {
        energy,
        state: StateVector::new(h.tag().clone(), amps)?,
        multiplicity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyUnit {
    #[default]
    Bits,
    Nats,
}

/// Eigenvalues of the reduced density matrix below this are dropped.
pub const ENTROPY_CUTOFF: f64 = 1e-14;

/// Von Neumann entropy of the reduced state on `links`, computed in the
/// full link-tensor basis.
pub fn entanglement_entropy(
    basis: &WorkingBasis,
    psi: &StateVector,
    links: &[LinkId],
    unit: EntropyUnit,
    budget: &Budget,
) -> Result<f64> {
    basis.tag().ensure_same(psi.tag())?;
    let space = basis.space();
    let n = space.n_links();
    let mut in_a = vec![false; n];
    for l in links {
        if l.0 >= n {
            return Err(QlmError::InvalidArgument(format!("unknown link {}", l.0)));
        }
        in_a[l.0] = true;
    }
    let norm = psi.norm_sqr();
    if norm == 0.0 {
        return Err(QlmError::ZeroVector("entropy of a zero state".into()));
    }
    let d = space.link_dim();
    let na = in_a.iter().filter(|&&x| x).count();
    // Both reduced states share their nonzero spectrum; use the smaller one.
    let keep_a = na <= n - na;
    let kept: Vec<usize> = (0..n).filter(|&l| in_a[l] == keep_a).collect();
    let dim = d
        .checked_pow(kept.len() as u32)
        .ok_or_else(|| QlmError::InvalidArgument("partition too large".into()))?;
    check_budget("reduced density matrix", dim, budget.dense)?;

    let v = basis.embed_sparse(psi.amps())?;
    let mut by_env: HashMap<usize, Vec<(usize, C64)>> = HashMap::new();
    for (i, a) in v {
        let digits = space.digits(i);
        let (mut sys, mut env) = (0usize, 0usize);
        for (l, &dg) in digits.iter().enumerate() {
            if in_a[l] == keep_a {
                sys = sys * d + dg;
            } else {
                env = env * d + dg;
            }
        }
        by_env.entry(env).or_default().push((sys, a));
    }
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    for entries in by_env.values() {
        for &(r, a) in entries {
            for &(c, b) in entries {
                rho[(r, c)] += a * b.conj();
            }
        }
    }
    rho /= C64::new(norm, 0.0);
    let e = eigh(&rho)?;
    let log = |x: f64| match unit {
        EntropyUnit::Bits => x.log2(),
        EntropyUnit::Nats => x.ln(),
    };
    Ok(e.values
        .iter()
        .filter(|&&p| p > ENTROPY_CUTOFF)
        .map(|&p| -p * log(p))
        .sum::<f64>()
        .max(0.0))
}
