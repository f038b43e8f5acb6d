//! Sums of tensor products of single-link operators.
//!
//! An [`OperatorExpr`] is never stored as a full matrix unless asked to. It
//! can be materialized on the full tensor space, applied to sparse vectors,
//! restricted to a physical basis, or materialized on the tensor space of
//! just the links it touches (its support).

use std::collections::{BTreeSet, HashMap};

use crate::basis::{FullSpace, PhysicalBasis, SparseVec};
use crate::error::{check_budget, QlmError, Result};
use crate::lattice::LinkId;
use crate::operators::link::LinkMatrix;
use crate::operators::sparse::{BasisKind, BasisTag, SparseOperator};
use crate::{Budget, C64, ZERO};

/// Mixed-radix indexing over an ordered set of links.
pub trait LinkIndexer {
    fn dim(&self) -> usize;
    fn link_dim(&self) -> usize;
    /// Stride of `link`, or `None` if the link is not part of the space.
    fn stride_of(&self, link: LinkId) -> Option<usize>;
}

impl LinkIndexer for FullSpace {
    fn dim(&self) -> usize {
        FullSpace::dim(self)
    }

    fn link_dim(&self) -> usize {
        FullSpace::link_dim(self)
    }

    fn stride_of(&self, link: LinkId) -> Option<usize> {
        (link.0 < self.n_links()).then(|| self.stride(link))
    }
}

/// Tensor product over a subset of links, first link most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSpace {
    links: Vec<LinkId>,
    link_dim: usize,
    strides: HashMap<LinkId, usize>,
    dim: usize,
}

impl LocalSpace {
    pub fn new(links: Vec<LinkId>, link_dim: usize) -> Result<Self> {
        let mut strides = HashMap::new();
        let mut dim = 1usize;
        for &l in links.iter().rev() {
            strides.insert(l, dim);
            dim = dim
                .checked_mul(link_dim)
                .ok_or_else(|| QlmError::InvalidArgument("local space overflows".into()))?;
        }
        Ok(LocalSpace {
            links,
            link_dim,
            strides,
            dim,
        })
    }

    pub fn links(&self) -> &[LinkId] {
        &self.links
    }

    pub fn tag(&self) -> BasisTag {
        let ids: Vec<String> = self.links.iter().map(|l| l.0.to_string()).collect();
        BasisTag::new(BasisKind::Local, format!("links[{}]", ids.join(",")), self.dim)
    }
}

impl LinkIndexer for LocalSpace {
    fn dim(&self) -> usize {
        self.dim
    }

    fn link_dim(&self) -> usize {
        self.link_dim
    }

    fn stride_of(&self, link: LinkId) -> Option<usize> {
        self.strides.get(&link).copied()
    }
}

/// `coeff · ⊗_ℓ A_ℓ` with identity on every link not listed.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTerm {
    pub coeff: C64,
    /// Sorted by link, at most one factor per link.
    factors: Vec<(LinkId, LinkMatrix)>,
}

impl ProductTerm {
    pub fn scalar(coeff: C64) -> Self {
        ProductTerm {
            coeff,
            factors: Vec::new(),
        }
    }

    pub fn single(link: LinkId, m: LinkMatrix) -> Self {
        ProductTerm {
            coeff: C64::new(1.0, 0.0),
            factors: vec![(link, m)],
        }
    }

    pub fn factors(&self) -> &[(LinkId, LinkMatrix)] {
        &self.factors
    }

    /// Operator product `self · other`; factors on a shared link multiply.
    pub fn mul(&self, other: &ProductTerm) -> ProductTerm {
        let mut factors: Vec<(LinkId, LinkMatrix)> = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() || j < other.factors.len() {
            match (self.factors.get(i), other.factors.get(j)) {
                (Some((la, a)), Some((lb, b))) if la == lb => {
                    factors.push((*la, a.mul(b)));
                    i += 1;
                    j += 1;
                }
                (Some((la, a)), Some((lb, _))) if la < lb => {
                    factors.push((*la, a.clone()));
                    i += 1;
                }
                (Some((la, a)), None) => {
                    factors.push((*la, a.clone()));
                    i += 1;
                }
                (_, Some((lb, b))) => {
                    factors.push((*lb, b.clone()));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        factors.retain(|(_, m)| !m.is_identity());
        ProductTerm {
            coeff: self.coeff * other.coeff,
            factors,
        }
    }

    pub fn adjoint(&self) -> ProductTerm {
        ProductTerm {
            coeff: self.coeff.conj(),
            factors: self.factors.iter().map(|(l, m)| (*l, m.adjoint())).collect(),
        }
    }

    /// Image of basis state `index`, pushed onto `out` scaled by `amp`.
    fn apply_index<S: LinkIndexer>(&self, space: &S, index: usize, amp: C64, out: &mut Vec<(usize, C64)>) {
        let start = out.len();
        out.push((index, amp * self.coeff));
        let d = space.link_dim();
        for (link, m) in &self.factors {
            let stride = space
                .stride_of(*link)
                .expect("operator support lies inside the space");
            let end = out.len();
            for k in start..end {
                let (idx, a) = out[k];
                let digit = (idx / stride) % d;
                let base = idx - digit * stride;
                let col = m.column(digit);
                match col.len() {
                    0 => out[k].1 = ZERO,
                    _ => {
                        out[k] = (base + col[0].0 * stride, a * col[0].1);
                        for &(r, v) in &col[1..] {
                            out.push((base + r * stride, a * v));
                        }
                    }
                }
            }
        }
        let mut k = start;
        while k < out.len() {
            if out[k].1 == ZERO {
                out.swap_remove(k);
            } else {
                k += 1;
            }
        }
    }
}

/// Sum of [`ProductTerm`]s.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorExpr {
    terms: Vec<ProductTerm>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        OperatorExpr { terms: Vec::new() }
    }

    pub fn scalar(v: C64) -> Self {
        OperatorExpr {
            terms: vec![ProductTerm::scalar(v)],
        }
    }

    pub fn single(link: LinkId, m: LinkMatrix) -> Self {
        OperatorExpr {
            terms: vec![ProductTerm::single(link, m)],
        }
    }

    pub fn from_term(t: ProductTerm) -> Self {
        OperatorExpr { terms: vec![t] }
    }

    /// Ordered product of single-link factors, one per entry.
    pub fn product(factors: impl IntoIterator<Item = (LinkId, LinkMatrix)>) -> Self {
        let mut t = ProductTerm::scalar(C64::new(1.0, 0.0));
        for (l, m) in factors {
            t = t.mul(&ProductTerm::single(l, m));
        }
        OperatorExpr::from_term(t)
    }

    pub fn terms(&self) -> &[ProductTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(mut self, other: OperatorExpr) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn add_assign(&mut self, other: OperatorExpr) {
        self.terms.extend(other.terms);
    }

    pub fn scale(mut self, s: C64) -> Self {
        for t in &mut self.terms {
            t.coeff *= s;
        }
        self
    }

    pub fn scale_re(self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn mul(&self, other: &OperatorExpr) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.mul(b));
            }
        }
        OperatorExpr { terms }
    }

    pub fn adjoint(&self) -> Self {
        OperatorExpr {
            terms: self.terms.iter().map(ProductTerm::adjoint).collect(),
        }
    }

    /// Links touched by any term.
    pub fn support(&self) -> Vec<LinkId> {
        let set: BTreeSet<LinkId> = self.terms.iter().flat_map(|t| t.factors.iter().map(|(l, _)| *l)).collect();
        set.into_iter().collect()
    }

    /// True when every factor is diagonal in the link basis.
    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|t| t.factors.iter().all(|(_, m)| m.is_diagonal()))
    }

    /// Image of one basis state.
    pub fn apply_index<S: LinkIndexer>(&self, space: &S, index: usize) -> SparseVec {
        let mut out = Vec::new();
        for t in &self.terms {
            t.apply_index(space, index, C64::new(1.0, 0.0), &mut out);
        }
        merge(out)
    }

    pub fn apply_sparse<S: LinkIndexer>(&self, space: &S, v: &[(usize, C64)]) -> SparseVec {
        let mut out = Vec::new();
        for &(i, a) in v {
            if a == ZERO {
                continue;
            }
            for t in &self.terms {
                t.apply_index(space, i, a, &mut out);
            }
        }
        merge(out)
    }

    pub fn apply_dense<S: LinkIndexer>(&self, space: &S, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != space.dim() {
            return Err(QlmError::DimensionMismatch(v.len(), space.dim()));
        }
        let mut out = vec![ZERO; v.len()];
        let mut buf = Vec::new();
        for (i, &a) in v.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for t in &self.terms {
                buf.clear();
                t.apply_index(space, i, a, &mut buf);
                for &(r, x) in &buf {
                    out[r] += x;
                }
            }
        }
        Ok(out)
    }

    /// Materialize on the full tensor space.
    pub fn to_sparse(&self, space: &FullSpace, budget: &Budget) -> Result<SparseOperator> {
        check_budget("full-basis operator", space.dim(), budget.full)?;
        self.materialize(space, space.tag())
    }

    /// Materialize on the tensor space of the given links (which must cover
    /// the support).
    pub fn to_local(&self, local: &LocalSpace) -> Result<SparseOperator> {
        self.materialize(local, local.tag())
    }

    fn materialize<S: LinkIndexer>(&self, space: &S, tag: BasisTag) -> Result<SparseOperator> {
        for l in self.support() {
            if space.stride_of(l).is_none() {
                return Err(QlmError::InvalidArgument(format!("link {} outside the target space", l.0)));
            }
        }
        let mut trip = Vec::new();
        let mut buf = Vec::new();
        for col in 0..space.dim() {
            for t in &self.terms {
                buf.clear();
                t.apply_index(space, col, C64::new(1.0, 0.0), &mut buf);
                trip.extend(buf.iter().map(|&(r, v)| (r, col, v)));
            }
        }
        SparseOperator::from_triplets(tag, trip)
    }

    /// `P† A P` on a physical basis. With `check`, fails if `A` maps any
    /// member outside the span of the basis by more than `1e-10`.
    pub fn restrict(&self, basis: &PhysicalBasis, check: bool) -> Result<SparseOperator> {
        restrict_with(basis, check, |v| self.apply_sparse(basis.space(), v))
    }
}

fn merge(mut v: Vec<(usize, C64)>) -> SparseVec {
    v.sort_unstable_by_key(|&(i, _)| i);
    let mut out: SparseVec = Vec::with_capacity(v.len());
    for (i, a) in v {
        match out.last_mut() {
            Some((j, b)) if *j == i => *b += a,
            _ => out.push((i, a)),
        }
    }
    out.retain(|&(_, a)| a != ZERO);
    out
}

/// Tolerance of the leakage check in restrictions.
pub const RESTRICTION_TOL: f64 = 1e-10;

pub(crate) fn restrict_with(
    basis: &PhysicalBasis,
    check: bool,
    apply: impl Fn(&[(usize, C64)]) -> SparseVec,
) -> Result<SparseOperator> {
    let mut trip = Vec::new();
    let mut worst = 0.0f64;
    for (k, member) in basis.members().iter().enumerate() {
        let image = apply(member);
        let col = basis.project_sparse(&image);
        if check {
            let mut back: HashMap<usize, C64> = HashMap::new();
            for (p, &a) in col.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for &(i, v) in &basis.members()[p] {
                    *back.entry(i).or_insert(ZERO) += a * v;
                }
            }
            for &(i, a) in &image {
                let b = back.remove(&i).unwrap_or(ZERO);
                worst = worst.max((a - b).norm());
            }
            for (_, b) in back {
                worst = worst.max(b.norm());
            }
        }
        trip.extend(col.into_iter().enumerate().filter(|(_, a)| *a != ZERO).map(|(r, a)| (r, k, a)));
    }
    if check && worst > RESTRICTION_TOL {
        return Err(QlmError::NotBlockDiagonal(worst));
    }
    SparseOperator::from_triplets(basis.tag(), trip)
}

/// `P† A P` for an operator already materialized on the full space.
pub fn restrict_sparse(op: &SparseOperator, basis: &PhysicalBasis, check: bool) -> Result<SparseOperator> {
    basis.space().tag().ensure_same(op.tag())?;
    // Row r of A† is the conjugate of column r of A.
    let t = op.adjoint();
    restrict_with(basis, check, |v| {
        let mut out = Vec::new();
        for &(i, a) in v {
            out.extend(t.row(i).map(|(r, x)| (r, x.conj() * a)));
        }
        merge(out)
    })
}

/// `max |[A, B]|`. Term pairs on disjoint links commute and are dropped;
/// the rest is materialized on the union of their supports. Tensoring with
/// the identity on the remaining links leaves the entries unchanged, so
/// this equals the full-space value.
pub fn expr_commutator_norm(a: &OperatorExpr, b: &OperatorExpr, link_dim: usize) -> Result<f64> {
    let mut comm = OperatorExpr::zero();
    for ta in a.terms() {
        for tb in b.terms() {
            let overlap = ta
                .factors()
                .iter()
                .any(|(l, _)| tb.factors().iter().any(|(k, _)| k == l));
            if !overlap {
                continue;
            }
            let mut minus = tb.mul(ta);
            minus.coeff = -minus.coeff;
            comm.add_assign(OperatorExpr::from_term(ta.mul(tb)));
            comm.add_assign(OperatorExpr::from_term(minus));
        }
    }
    if comm.is_zero() {
        return Ok(0.0);
    }
    let local = LocalSpace::new(comm.support(), link_dim)?;
    Ok(comm.to_local(&local)?.max_abs())
}
