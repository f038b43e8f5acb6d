//! SU(2) physical basis as a numerically certified kernel.
//!
//! Gauss generators never change the `j` label of a link, and each half-link
//! (`m_L` at the origin, `m_R` at the target) belongs to exactly one site.
//! For a fixed `j` pattern the full space is therefore a tensor product of
//! site factors and the common kernel of all `G_x^a` is the product of the
//! per-site kernels. Each per-site kernel is the dense null space of
//! `Σ_a (G_x^a)† G_x^a`.

use std::collections::HashMap;
use std::rc::Rc;

use nalgebra::DMatrix;

use crate::algebra::{left_generators, right_generators, HalfInt};
use crate::basis::{ChargeConfig, FullSpace, GaugeModel, PhysicalBasis, SparseVec};
use crate::error::{check_budget, QlmError, Result};
use crate::lattice::{Lattice, LinkId};
use crate::linalg::{canonical_range_basis, eigh};
use crate::{Budget, C64, ZERO};

/// Eigenvalues of `Σ G†G` below this count as kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-10;
/// Smallest acceptable separation between kernel and non-kernel eigenvalues.
pub const KERNEL_GAP: f64 = 1e-8;

/// Half-links meeting at a site: outgoing x̂, outgoing ŷ (left halves), then
/// incoming x̂, incoming ŷ (right halves).
fn site_halves(lattice: &Lattice, site: crate::SiteId) -> [(LinkId, bool); 4] {
    let sl = lattice.links_at_site(site);
    [
        (sl.outgoing[0], true),
        (sl.outgoing[1], true),
        (sl.incoming[0], false),
        (sl.incoming[1], false),
    ]
}

type SiteKernel = Rc<Vec<Vec<C64>>>;

pub fn build_physical_basis_su2(lattice: &Lattice, model: &GaugeModel, budget: &Budget) -> Result<PhysicalBasis> {
    let GaugeModel::Su2 { j_max } = *model else {
        return Err(QlmError::InvalidModel(format!("{model} is not an SU(2) model")));
    };
    let space = FullSpace::new(*lattice, *model)?;
    let n_links = lattice.n_links();
    let nj = j_max.twice() as usize + 1;
    let patterns = nj
        .checked_pow(n_links as u32)
        .ok_or_else(|| QlmError::BudgetExceeded {
            what: "j patterns".into(),
            needed: usize::MAX,
            budget: budget.full,
        })?;
    check_budget("j patterns", patterns, budget.full)?;

    let halves: Vec<[(LinkId, bool); 4]> = lattice.sites().map(|x| site_halves(lattice, x)).collect();
    let mut cache: HashMap<[u32; 4], SiteKernel> = HashMap::new();
    let mut members: Vec<SparseVec> = Vec::new();

    for pattern in 0..patterns {
        // Link 0 is the most significant digit, so patterns run in
        // lexicographic order of the j labels.
        let mut js = vec![HalfInt::ZERO; n_links];
        let mut rest = pattern;
        for l in (0..n_links).rev() {
            js[l] = HalfInt::from_twice((rest % nj) as u32);
            rest /= nj;
        }
        let mut kernels = Vec::with_capacity(halves.len());
        for h in &halves {
            let key = h.map(|(l, _)| js[l.0].twice());
            let k = match cache.get(&key) {
                Some(k) => k.clone(),
                None => {
                    let k: SiteKernel = Rc::new(site_kernel(&key, budget)?);
                    cache.insert(key, k.clone());
                    k
                }
            };
            if k.is_empty() {
                break;
            }
            kernels.push(k);
        }
        if kernels.len() < halves.len() {
            continue;
        }
        let mut choice = vec![0usize; kernels.len()];
        loop {
            members.push(product_vector(&space, &js, &halves, &kernels, &choice));
            // Odometer over kernel vectors, last site fastest.
            let mut done = true;
            for s in (0..kernels.len()).rev() {
                choice[s] += 1;
                if choice[s] < kernels[s].len() {
                    done = false;
                    break;
                }
                choice[s] = 0;
            }
            if done {
                break;
            }
        }
    }
    let charges = ChargeConfig::neutral(model, lattice);
    Ok(PhysicalBasis::from_members(space, charges, members, Vec::new(), Vec::new()))
}

/// Orthonormal kernel of the site Gauss generators for half-link spins
/// `twice_j` (twice the spin of each of the four half-links).
fn site_kernel(twice_j: &[u32; 4], budget: &Budget) -> Result<Vec<Vec<C64>>> {
    let spins = twice_j.map(HalfInt::from_twice);
    let dims = spins.map(|j| j.multiplicity());
    let local: usize = dims.iter().product();
    check_budget("site Gauss kernel", local, budget.dense)?;
    let mut casimir = DMatrix::<C64>::zeros(local, local);
    for a in 0..3 {
        let mut g = DMatrix::<C64>::zeros(local, local);
        for (h, &j) in spins.iter().enumerate() {
            let gen = if h < 2 { &left_generators(j)[a] } else { &right_generators(j)[a] };
            g += embed_factor(gen, h, &dims);
        }
        casimir += g.adjoint() * &g;
    }
    let e = eigh(&casimir)?;
    let rank = e.values.iter().filter(|&&v| v < KERNEL_THRESHOLD).count();
    if let Some(&above) = e.values.get(rank) {
        let below = if rank > 0 { e.values[rank - 1].max(0.0) } else { 0.0 };
        if above - below < KERNEL_GAP {
            return Err(QlmError::AmbiguousKernel {
                gap: above - below,
                threshold: KERNEL_THRESHOLD,
            });
        }
    }
    if rank == 0 {
        return Ok(Vec::new());
    }
    let k = e.vectors.columns(0, rank);
    let projector = k * k.adjoint();
    let mut basis = canonical_range_basis(&projector, rank);
    for v in &mut basis {
        for z in v.iter_mut() {
            if z.norm() < 1e-14 {
                *z = ZERO;
            }
        }
    }
    Ok(basis)
}

/// `I ⊗ … ⊗ m ⊗ … ⊗ I` with `m` on factor `pos`, factor 0 most significant.
fn embed_factor(m: &DMatrix<C64>, pos: usize, dims: &[usize; 4]) -> DMatrix<C64> {
    let before: usize = dims[..pos].iter().product();
    let after: usize = dims[pos + 1..].iter().product();
    let n = before * dims[pos] * after;
    let mut out = DMatrix::<C64>::zeros(n, n);
    for b in 0..before {
        for a in 0..after {
            for r in 0..dims[pos] {
                for c in 0..dims[pos] {
                    let v = m[(r, c)];
                    if v != ZERO {
                        let row = (b * dims[pos] + r) * after + a;
                        let col = (b * dims[pos] + c) * after + a;
                        out[(row, col)] = v;
                    }
                }
            }
        }
    }
    out
}

/// Full-basis vector of the tensor product of one kernel vector per site.
fn product_vector(
    space: &FullSpace,
    js: &[HalfInt],
    halves: &[[(LinkId, bool); 4]],
    kernels: &[SiteKernel],
    choice: &[usize],
) -> SparseVec {
    let n_links = js.len();
    let mut m_left = vec![0usize; n_links];
    let mut m_right = vec![0usize; n_links];
    let mut out: SparseVec = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn rec(
        site: usize,
        amp: C64,
        space: &FullSpace,
        js: &[HalfInt],
        halves: &[[(LinkId, bool); 4]],
        vectors: &[&Vec<C64>],
        m_left: &mut [usize],
        m_right: &mut [usize],
        out: &mut SparseVec,
    ) {
        if site == halves.len() {
            let mut idx = 0;
            for (l, j) in js.iter().enumerate() {
                let d = j.multiplicity();
                let digit = GaugeModel::su2_block_offset(*j) + m_left[l] * d + m_right[l];
                idx += digit * space.stride(LinkId(l));
            }
            out.push((idx, amp));
            return;
        }
        let h = &halves[site];
        let dims = h.map(|(l, _)| js[l.0].multiplicity());
        for (local, &v) in vectors[site].iter().enumerate() {
            if v == ZERO {
                continue;
            }
            let mut rest = local;
            for k in (0..4).rev() {
                let m = rest % dims[k];
                rest /= dims[k];
                let (link, left) = h[k];
                if left {
                    m_left[link.0] = m;
                } else {
                    m_right[link.0] = m;
                }
            }
            rec(site + 1, amp * v, space, js, halves, vectors, m_left, m_right, out);
        }
    }

    let vectors: Vec<&Vec<C64>> = kernels.iter().zip(choice).map(|(k, &c)| &k[c]).collect();
    rec(
        0,
        C64::new(1.0, 0.0),
        space,
        js,
        halves,
        &vectors,
        &mut m_left,
        &mut m_right,
        &mut out,
    );
    out.sort_unstable_by_key(|&(i, _)| i);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::singlet_count;

    #[test]
    fn trivial_truncation_is_one_dimensional() {
        let l = Lattice::new(2, 2).unwrap();
        let b = build_physical_basis_su2(&l, &GaugeModel::Su2 { j_max: HalfInt::ZERO }, &Budget::default()).unwrap();
        assert_eq!(b.dim(), 1);
        assert_eq!(b.members()[0], vec![(0, C64::new(1.0, 0.0))]);
    }

    #[test]
    fn site_kernel_sizes_match_singlet_counts() {
        for key in [[0, 0, 0, 0], [1, 1, 0, 0], [1, 0, 1, 0], [1, 1, 1, 1], [2, 2, 0, 0], [2, 1, 1, 0], [1, 0, 0, 0]] {
            let k = site_kernel(&key, &Budget::default()).unwrap();
            let spins: Vec<HalfInt> = key.iter().map(|&t| HalfInt::from_twice(t)).collect();
            assert_eq!(k.len(), singlet_count(&spins), "{key:?}");
        }
    }

    #[test]
    fn budget_applies_to_site_blocks() {
        let l = Lattice::new(2, 2).unwrap();
        let r = build_physical_basis_su2(&l, &GaugeModel::Su2 { j_max: HalfInt::HALF }, &Budget::with_dense(8));
        assert!(matches!(r, Err(QlmError::BudgetExceeded { .. })));
    }

    #[test]
    fn members_are_orthonormal_2x1() {
        let l = Lattice::new(2, 1).unwrap();
        let b = build_physical_basis_su2(&l, &GaugeModel::Su2 { j_max: HalfInt::HALF }, &Budget::default()).unwrap();
        let dense: Vec<Vec<C64>> = b.members().iter().map(|m| {
            let mut v = vec![ZERO; b.full_dim()];
            for &(i, a) in m {
                v[i] = a;
            }
            v
        }).collect();
        for (p, u) in dense.iter().enumerate() {
            for (q, w) in dense.iter().enumerate() {
                let dot: C64 = u.iter().zip(w).map(|(a, b)| a.conj() * b).sum();
                let want = if p == q { 1.0 } else { 0.0 };
                assert!((dot - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }
}
