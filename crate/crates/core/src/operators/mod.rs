//! Operator builders: electric fields, link operators, plaquettes, Gauss
//! generators, Hamiltonians and penalty terms.
//!
//! Builders return [`OperatorExpr`] values; [`WorkingBasis::materialize`]
//! turns them into [`SparseOperator`]s on either the full tensor basis or a
//! physical basis.

pub mod expr;
pub mod link;
pub mod sparse;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::HalfInt;
use crate::basis::{ChargeConfig, FullSpace, GaugeModel, PhysicalBasis, SparseVec};
use crate::error::{QlmError, Result};
use crate::lattice::{Lattice, LinkId, Orientation, Path, PlaquetteId, SiteId, Step};
use crate::{c, Budget, C64, ZERO};

pub use expr::{expr_commutator_norm, restrict_sparse, LocalSpace, OperatorExpr, ProductTerm, RESTRICTION_TOL};
pub use link::{LinkMatrix, Su2LinkOperators};
pub use sparse::{commutator, commutator_norm, BasisKind, BasisTag, SparseOperator};

/// Overall sign of the magnetic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MagneticSign {
    Minus,
    Plus,
}

impl MagneticSign {
    /// `Minus` for U(1), `Plus` for SU(2).
    pub fn default_for(model: &GaugeModel) -> Self {
        match model {
            GaugeModel::U1 { .. } => MagneticSign::Minus,
            GaugeModel::Su2 { .. } => MagneticSign::Plus,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            MagneticSign::Minus => -1.0,
            MagneticSign::Plus => 1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            MagneticSign::Minus => MagneticSign::Plus,
            MagneticSign::Plus => MagneticSign::Minus,
        }
    }
}

fn require_u1(model: &GaugeModel) -> Result<u32> {
    model
        .u1_truncation()
        .ok_or_else(|| QlmError::InvalidModel(format!("{model} is not a U(1) model")))
}

fn require_su2(model: &GaugeModel) -> Result<HalfInt> {
    match *model {
        GaugeModel::Su2 { j_max } => Ok(j_max),
        GaugeModel::U1 { .. } => Err(QlmError::InvalidModel(format!("{model} is not an SU(2) model"))),
    }
}

/// `E_ℓ`.
pub fn electric_expr_u1(model: &GaugeModel, link: LinkId) -> Result<OperatorExpr> {
    Ok(OperatorExpr::single(link, link::u1_electric(require_u1(model)?)))
}

/// Clipped unit-weight raising operator `U_ℓ`.
pub fn link_raise_expr_u1(model: &GaugeModel, link: LinkId) -> Result<OperatorExpr> {
    Ok(OperatorExpr::single(link, link::u1_raise(require_u1(model)?)))
}

/// `Σ_ℓ E_ℓ²` (U(1)) or `Σ_ℓ C_ℓ` (SU(2)).
pub fn electric_energy_expr(lattice: &Lattice, model: &GaugeModel) -> OperatorExpr {
    let m = match *model {
        GaugeModel::U1 { s } => {
            let e = link::u1_electric(s);
            e.mul(&e)
        }
        GaugeModel::Su2 { j_max } => Su2LinkOperators::new(j_max).casimir,
    };
    let mut out = OperatorExpr::zero();
    for l in lattice.links() {
        out.add_assign(OperatorExpr::single(l, m.clone()));
    }
    out
}

/// Ordered product of link operators along a closed path: `U_ℓ` on forward
/// steps, `U_ℓ†` on backward steps. For SU(2) the fundamental indices are
/// traced.
pub fn loop_expr(model: &GaugeModel, steps: &[Step]) -> OperatorExpr {
    match *model {
        GaugeModel::U1 { s } => {
            let up = link::u1_raise(s);
            let down = up.adjoint();
            OperatorExpr::product(steps.iter().map(|st| {
                let m = match st.orientation {
                    Orientation::Forward => up.clone(),
                    Orientation::Backward => down.clone(),
                };
                (st.link, m)
            }))
        }
        GaugeModel::Su2 { j_max } => su2_trace(&Su2LinkOperators::new(j_max), steps),
    }
}

/// `Σ_{α…} M_1^{α₀α₁} M_2^{α₁α₂} ⋯ M_n^{α_{n−1}α₀}`.
fn su2_trace(ops: &Su2LinkOperators, steps: &[Step]) -> OperatorExpr {
    let n = steps.len();
    let mut out = OperatorExpr::zero();
    for mask in 0..(1usize << n) {
        let idx = |k: usize| (mask >> (k % n)) & 1;
        let factors = steps.iter().enumerate().map(|(k, st)| {
            let (a, b) = (idx(k), idx(k + 1));
            let m = match st.orientation {
                Orientation::Forward => ops.u[a][b].clone(),
                Orientation::Backward => ops.u_dagger(a, b),
            };
            (st.link, m)
        });
        let term = OperatorExpr::product(factors);
        if term.terms().iter().all(|t| t.factors().iter().all(|(_, m)| !m.is_zero())) {
            out.add_assign(term);
        }
    }
    out
}

/// `U_□` (U(1)) or `Tr U_□` (SU(2)).
pub fn plaquette_expr(lattice: &Lattice, model: &GaugeModel, p: PlaquetteId) -> OperatorExpr {
    loop_expr(model, &lattice.plaquette_links(p))
}

/// Operator measured by a Wilson loop along `path`.
pub fn wilson_loop_expr(model: &GaugeModel, path: &Path) -> Result<OperatorExpr> {
    if !path.is_closed() {
        return Err(QlmError::InvalidPath("Wilson loop needs a closed path".into()));
    }
    Ok(loop_expr(model, path.steps()))
}

/// Sum of the electric fields on a winding cut.
pub fn winding_expr(lattice: &Lattice, model: &GaugeModel, dir: crate::Direction) -> Result<OperatorExpr> {
    let s = require_u1(model)?;
    let mut out = OperatorExpr::zero();
    for l in lattice.winding_cut(dir) {
        out.add_assign(OperatorExpr::single(l, link::u1_electric(s)));
    }
    Ok(out)
}

/// `Σ_out E − Σ_in E − ρ_x`.
pub fn gauss_expr_u1(lattice: &Lattice, model: &GaugeModel, site: SiteId, charges: &ChargeConfig) -> Result<OperatorExpr> {
    let s = require_u1(model)?;
    let e = link::u1_electric(s);
    let sl = lattice.links_at_site(site);
    let mut out = OperatorExpr::zero();
    for &l in &sl.outgoing {
        out.add_assign(OperatorExpr::single(l, e.clone()));
    }
    for &l in &sl.incoming {
        out.add_assign(OperatorExpr::single(l, e.scale(c(-1.0))));
    }
    let rho = charges.u1_at(site);
    if rho != 0 {
        out.add_assign(OperatorExpr::scalar(c(-(rho as f64))));
    }
    Ok(out)
}

/// `G_x^a = Σ_in R^a + Σ_out L^a` for `a ∈ {0, 1, 2}`.
pub fn gauss_expr_su2(lattice: &Lattice, model: &GaugeModel, site: SiteId, a: usize) -> Result<OperatorExpr> {
    let j_max = require_su2(model)?;
    if a > 2 {
        return Err(QlmError::InvalidArgument(format!("generator index {a} out of range")));
    }
    let ops = Su2LinkOperators::new(j_max);
    let sl = lattice.links_at_site(site);
    let mut out = OperatorExpr::zero();
    for &l in &sl.incoming {
        out.add_assign(OperatorExpr::single(l, ops.right[a].clone()));
    }
    for &l in &sl.outgoing {
        out.add_assign(OperatorExpr::single(l, ops.left[a].clone()));
    }
    Ok(out)
}

/// Electric and magnetic parts as expressions.
#[derive(Debug, Clone)]
pub struct HamiltonianExprs {
    pub electric: OperatorExpr,
    pub magnetic: OperatorExpr,
}

/// `H_E = (g²/2) Σ E²` (or Casimir) and `H_B = sign/(2g²) Σ_□ (W_□ + W_□†)`.
pub fn hamiltonian_exprs(lattice: &Lattice, model: &GaugeModel, g2: f64, sign: MagneticSign) -> Result<HamiltonianExprs> {
    if !(g2 > 0.0 && g2.is_finite()) {
        return Err(QlmError::InvalidArgument(format!("coupling g² = {g2} must be positive")));
    }
    let electric = electric_energy_expr(lattice, model).scale_re(g2 / 2.0);
    let mut magnetic = OperatorExpr::zero();
    for p in lattice.plaquettes() {
        let w = plaquette_expr(lattice, model, p);
        magnetic.add_assign(w.adjoint());
        magnetic.add_assign(w);
    }
    Ok(HamiltonianExprs {
        electric,
        magnetic: magnetic.scale_re(sign.value() / (2.0 * g2)),
    })
}

/// `λ Σ_x G_x²` (U(1)) or `λ Σ_{x,a} (G_x^a)²` (SU(2)).
pub fn penalty_expr(lattice: &Lattice, model: &GaugeModel, lambda: f64, charges: &ChargeConfig) -> Result<OperatorExpr> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(QlmError::InvalidArgument(format!("penalty strength {lambda} must be non-negative")));
    }
    let mut out = OperatorExpr::zero();
    for x in lattice.sites() {
        out.add_assign(gauss_squared_expr(lattice, model, x, charges)?);
    }
    Ok(out.scale_re(lambda))
}

/// `G_x²` (U(1)) or `Σ_a (G_x^a)²` (SU(2)).
pub fn gauss_squared_expr(lattice: &Lattice, model: &GaugeModel, site: SiteId, charges: &ChargeConfig) -> Result<OperatorExpr> {
    match model {
        GaugeModel::U1 { .. } => {
            let g = gauss_expr_u1(lattice, model, site, charges)?;
            Ok(g.mul(&g))
        }
        GaugeModel::Su2 { .. } => {
            let mut out = OperatorExpr::zero();
            for a in 0..3 {
                let g = gauss_expr_su2(lattice, model, site, a)?;
                out.add_assign(g.mul(&g));
            }
            Ok(out)
        }
    }
}

/// Basis in which states and operators are represented.
#[derive(Debug, Clone)]
pub enum WorkingBasis {
    Full(FullSpace),
    Physical(Arc<PhysicalBasis>),
}

impl WorkingBasis {
    pub fn space(&self) -> &FullSpace {
        match self {
            WorkingBasis::Full(s) => s,
            WorkingBasis::Physical(b) => b.space(),
        }
    }

    pub fn physical(&self) -> Option<&PhysicalBasis> {
        match self {
            WorkingBasis::Full(_) => None,
            WorkingBasis::Physical(b) => Some(b),
        }
    }

    pub fn lattice(&self) -> &Lattice {
        self.space().lattice()
    }

    pub fn model(&self) -> &GaugeModel {
        self.space().model()
    }

    pub fn dim(&self) -> usize {
        match self {
            WorkingBasis::Full(s) => s.dim(),
            WorkingBasis::Physical(b) => b.dim(),
        }
    }

    pub fn tag(&self) -> BasisTag {
        match self {
            WorkingBasis::Full(s) => s.tag(),
            WorkingBasis::Physical(b) => b.tag(),
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, WorkingBasis::Full(_))
    }

    /// Sparse matrix of `expr`. On a physical basis, `check` rejects
    /// operators that leak out of the subspace.
    pub fn materialize(&self, expr: &OperatorExpr, check: bool, budget: &Budget) -> Result<SparseOperator> {
        match self {
            WorkingBasis::Full(s) => expr.to_sparse(s, budget),
            WorkingBasis::Physical(b) => expr.restrict(b, check),
        }
    }

    /// Full-basis sparse image of working-basis amplitudes.
    pub fn embed_sparse(&self, amps: &[C64]) -> Result<SparseVec> {
        if amps.len() != self.dim() {
            return Err(QlmError::DimensionMismatch(amps.len(), self.dim()));
        }
        Ok(match self {
            WorkingBasis::Full(_) => amps
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != ZERO)
                .map(|(i, a)| (i, *a))
                .collect(),
            WorkingBasis::Physical(b) => {
                let mut acc = std::collections::BTreeMap::new();
                for (m, &a) in b.members().iter().zip(amps) {
                    if a == ZERO {
                        continue;
                    }
                    for &(i, v) in m {
                        *acc.entry(i).or_insert(ZERO) += a * v;
                    }
                }
                acc.into_iter().filter(|(_, a)| *a != ZERO).collect()
            }
        })
    }

    /// `⟨ψ|A|ψ⟩` for unnormalized amplitudes.
    pub fn expectation(&self, expr: &OperatorExpr, amps: &[C64]) -> Result<C64> {
        let v = self.embed_sparse(amps)?;
        let av = expr.apply_sparse(self.space(), &v);
        Ok(sparse_dot(&v, &av))
    }
}

/// `⟨u|v⟩` for sorted sparse vectors.
pub fn sparse_dot(u: &[(usize, C64)], v: &[(usize, C64)]) -> C64 {
    let (mut i, mut j) = (0, 0);
    let mut acc = ZERO;
    while i < u.len() && j < v.len() {
        match u[i].0.cmp(&v[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += u[i].1.conj() * v[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Electric and magnetic Hamiltonians on one working basis.
#[derive(Debug, Clone)]
pub struct HamiltonianParts {
    pub electric: SparseOperator,
    pub magnetic: SparseOperator,
    pub g2: f64,
    pub sign: MagneticSign,
}

impl HamiltonianParts {
    pub fn build(basis: &WorkingBasis, g2: f64, sign: MagneticSign, budget: &Budget) -> Result<Self> {
        let h = hamiltonian_exprs(basis.lattice(), basis.model(), g2, sign)?;
        Ok(HamiltonianParts {
            electric: basis.materialize(&h.electric, true, budget)?,
            magnetic: basis.materialize(&h.magnetic, true, budget)?,
            g2,
            sign,
        })
    }

    pub fn tag(&self) -> &BasisTag {
        self.electric.tag()
    }

    pub fn total(&self) -> Result<SparseOperator> {
        self.electric.add(&self.magnetic)
    }
}

/// U(1) `E_ℓ` on the full basis.
pub fn electric_op_u1(space: &FullSpace, link: LinkId, budget: &Budget) -> Result<SparseOperator> {
    electric_expr_u1(space.model(), link)?.to_sparse(space, budget)
}

/// U(1) `U_ℓ` on the full basis.
pub fn link_raise_u1(space: &FullSpace, link: LinkId, budget: &Budget) -> Result<SparseOperator> {
    link_raise_expr_u1(space.model(), link)?.to_sparse(space, budget)
}

/// `U_□` or `Tr U_□` on the full basis.
pub fn plaquette_op(space: &FullSpace, p: PlaquetteId, budget: &Budget) -> Result<SparseOperator> {
    plaquette_expr(space.lattice(), space.model(), p).to_sparse(space, budget)
}

/// U(1) Gauss generator on the full basis.
pub fn gauss_generator_u1(space: &FullSpace, site: SiteId, charges: &ChargeConfig, budget: &Budget) -> Result<SparseOperator> {
    gauss_expr_u1(space.lattice(), space.model(), site, charges)?.to_sparse(space, budget)
}

/// SU(2) Gauss generator `G_x^a` on the full basis.
pub fn gauss_generator_matrix_su2(space: &FullSpace, site: SiteId, a: usize, budget: &Budget) -> Result<SparseOperator> {
    gauss_expr_su2(space.lattice(), space.model(), site, a)?.to_sparse(space, budget)
}

/// U(1) Hamiltonian parts on the full basis.
pub fn hamiltonian_u1(space: &FullSpace, g2: f64, sign: MagneticSign, budget: &Budget) -> Result<HamiltonianParts> {
    require_u1(space.model())?;
    HamiltonianParts::build(&WorkingBasis::Full(space.clone()), g2, sign, budget)
}

/// SU(2) Hamiltonian parts on a physical basis.
pub fn hamiltonian_su2(basis: &Arc<PhysicalBasis>, g2: f64, sign: MagneticSign, budget: &Budget) -> Result<HamiltonianParts> {
    require_su2(basis.model())?;
    HamiltonianParts::build(&WorkingBasis::Physical(basis.clone()), g2, sign, budget)
}

/// Penalty term on the full basis.
pub fn penalty_term(space: &FullSpace, lambda: f64, charges: &ChargeConfig, budget: &Budget) -> Result<SparseOperator> {
    penalty_expr(space.lattice(), space.model(), lambda, charges)?.to_sparse(space, budget)
}

/// `P† A P` for a full-basis operator.
pub fn restrict_to_physical(op: &SparseOperator, basis: &PhysicalBasis, check: bool) -> Result<SparseOperator> {
    restrict_sparse(op, basis, check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_physical_basis_u1;
    use crate::FluxConfig;

    fn u1_space(s: u32) -> FullSpace {
        FullSpace::new(Lattice::new(2, 2).unwrap(), GaugeModel::U1 { s }).unwrap()
    }

    #[test]
    fn plaquette_raises_vacuum_to_loop() {
        let space = u1_space(1);
        let l = space.lattice();
        let w = plaquette_expr(l, space.model(), PlaquetteId(0));
        let out = w.apply_index(&space, space.trivial_index());
        let mut loop_cfg = FluxConfig::zeros(8);
        for st in l.plaquette_links(PlaquetteId(0)) {
            loop_cfg.set(st.link, st.orientation.sign());
        }
        assert_eq!(out, vec![(space.index_of_config(&loop_cfg).unwrap(), c(1.0))]);
    }

    #[test]
    fn u1_hamiltonian_is_gauge_invariant() {
        let space = u1_space(1);
        let budget = Budget::default();
        let h = hamiltonian_u1(&space, 1.0, MagneticSign::Minus, &budget).unwrap();
        let total = h.total().unwrap();
        assert!(total.hermitian_deviation() <= 1e-12);
        let q = ChargeConfig::neutral(space.model(), space.lattice());
        for x in space.lattice().sites() {
            let g = gauss_generator_u1(&space, x, &q, &budget).unwrap();
            assert_eq!(commutator_norm(&g, &total).unwrap(), 0.0);
        }
    }

    #[test]
    fn open_string_penalty() {
        let space = u1_space(1);
        let l = space.lattice();
        let q = ChargeConfig::neutral(space.model(), l);
        let mut cfg = FluxConfig::zeros(8);
        cfg.set(l.link_at(0, 0, crate::Direction::X), 1);
        let idx = space.index_of_config(&cfg).unwrap();
        let p = penalty_expr(l, space.model(), 5.0, &q).unwrap();
        assert_eq!(p.apply_index(&space, idx), vec![(idx, c(10.0))]);
    }

    #[test]
    fn restriction_rejects_gauge_violating_operator() {
        let space = u1_space(1);
        let l = *space.lattice();
        let b = build_physical_basis_u1(&l, space.model(), &ChargeConfig::neutral(space.model(), &l), &Budget::default()).unwrap();
        let u = link_raise_expr_u1(space.model(), LinkId(0)).unwrap();
        assert!(matches!(u.restrict(&b, true), Err(QlmError::NotBlockDiagonal(_))));
        let id = OperatorExpr::scalar(c(1.0)).restrict(&b, true).unwrap();
        assert_eq!(id, SparseOperator::identity(b.tag()));
    }

    #[test]
    fn su2_gauss_closes_per_site() {
        let l = Lattice::new(2, 2).unwrap();
        let m = GaugeModel::Su2 { j_max: HalfInt::HALF };
        let x = SiteId(0);
        let g: Vec<OperatorExpr> = (0..3).map(|a| gauss_expr_su2(&l, &m, x, a).unwrap()).collect();
        let i = C64::new(0.0, 1.0);
        let lhs = g[0].mul(&g[1]).add(g[1].mul(&g[0]).scale_re(-1.0));
        let diff = lhs.add(g[2].clone().scale(-i));
        let links: Vec<LinkId> = diff.support();
        let local = LocalSpace::new(links, 5).unwrap();
        assert!(diff.to_local(&local).unwrap().max_abs() < 1e-12);
    }
}
