//! Operators on a single link space.

use nalgebra::DMatrix;

use crate::algebra::{clebsch_gordan, left_generators, right_generators, HalfInt};
use crate::basis::GaugeModel;
use crate::{c, C64, ZERO};

/// Small sparse matrix acting on one link, stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMatrix {
    dim: usize,
    cols: Vec<Vec<(usize, C64)>>,
}

impl LinkMatrix {
    pub fn zeros(dim: usize) -> Self {
        LinkMatrix {
            dim,
            cols: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal((0..dim).map(|_| c(1.0)).collect())
    }

    pub fn diagonal(diag: Vec<C64>) -> Self {
        let dim = diag.len();
        let cols = diag
            .into_iter()
            .enumerate()
            .map(|(i, v)| if v == ZERO { Vec::new() } else { vec![(i, v)] })
            .collect();
        LinkMatrix { dim, cols }
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let dim = m.nrows();
        let cols = (0..dim)
            .map(|cidx| {
                (0..dim)
                    .filter_map(|r| {
                        let v = m[(r, cidx)];
                        (v != ZERO).then_some((r, v))
                    })
                    .collect()
            })
            .collect();
        LinkMatrix { dim, cols }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (cidx, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                m[(r, cidx)] += v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nonzero entries of column `c` as `(row, value)`.
    #[inline]
    pub fn column(&self, c: usize) -> &[(usize, C64)] {
        &self.cols[c]
    }

    pub fn is_identity(&self) -> bool {
        self.cols
            .iter()
            .enumerate()
            .all(|(i, col)| col.len() == 1 && col[0].0 == i && col[0].1 == c(1.0))
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(|col| col.is_empty())
    }

    pub fn is_diagonal(&self) -> bool {
        self.cols
            .iter()
            .enumerate()
            .all(|(i, col)| col.iter().all(|&(r, _)| r == i))
    }

    /// `self · other`
    pub fn mul(&self, other: &LinkMatrix) -> LinkMatrix {
        LinkMatrix::from_dense(&(self.to_dense() * other.to_dense()))
    }

    pub fn adjoint(&self) -> LinkMatrix {
        LinkMatrix::from_dense(&self.to_dense().adjoint())
    }

    pub fn scale(&self, s: C64) -> LinkMatrix {
        LinkMatrix {
            dim: self.dim,
            cols: self
                .cols
                .iter()
                .map(|col| col.iter().map(|&(r, v)| (r, v * s)).filter(|&(_, v)| v != ZERO).collect())
                .collect(),
        }
    }
}

/// U(1) electric field `diag(−S, …, S)`.
pub fn u1_electric(s: u32) -> LinkMatrix {
    LinkMatrix::diagonal((0..=2 * s).map(|k| c(k as f64 - s as f64)).collect())
}

/// U(1) raising operator `|e⟩ → |e+1⟩` with unit weight; `|S⟩` is annihilated.
pub fn u1_raise(s: u32) -> LinkMatrix {
    let d = 2 * s as usize + 1;
    let mut m = LinkMatrix::zeros(d);
    for k in 0..d.saturating_sub(1) {
        m.cols[k].push((k + 1, c(1.0)));
    }
    m
}

pub fn u1_lower(s: u32) -> LinkMatrix {
    u1_raise(s).adjoint()
}

/// `exp(iθE)` on one link.
pub fn u1_phase(s: u32, theta: f64) -> LinkMatrix {
    LinkMatrix::diagonal(
        (0..=2 * s)
            .map(|k| C64::from_polar(1.0, theta * (k as f64 - s as f64)))
            .collect(),
    )
}

/// Operators on the SU(2) link space `⊕_{j ≤ j_max} |j, m_L, m_R⟩`.
#[derive(Debug, Clone)]
pub struct Su2LinkOperators {
    pub j_max: HalfInt,
    /// Left-multiplication generators acting on `m_L`.
    pub left: [LinkMatrix; 3],
    /// Right-multiplication generators acting on `m_R`.
    pub right: [LinkMatrix; 3],
    /// Quadratic Casimir, `j(j+1)` on each block.
    pub casimir: LinkMatrix,
    /// Link operator components `U^{αβ}` in the fundamental, `α, β ∈ {0, 1}`
    /// for `m = −1/2, +1/2`. Transitions past `j_max` are dropped.
    pub u: [[LinkMatrix; 2]; 2],
}

impl Su2LinkOperators {
    pub fn new(j_max: HalfInt) -> Self {
        let model = GaugeModel::Su2 { j_max };
        let labels = model.su2_labels();
        let dim = labels.len();

        let block_sum = |gens: &dyn Fn(HalfInt) -> [DMatrix<C64>; 3], on_left: bool| -> [LinkMatrix; 3] {
            let mut out = [
                DMatrix::<C64>::zeros(dim, dim),
                DMatrix::<C64>::zeros(dim, dim),
                DMatrix::<C64>::zeros(dim, dim),
            ];
            for tj in 0..=j_max.twice() {
                let j = HalfInt::from_twice(tj);
                let g = gens(j);
                let d = j.multiplicity();
                let off = GaugeModel::su2_block_offset(j);
                for a in 0..3 {
                    for p in 0..d {
                        for q in 0..d {
                            for k in 0..d {
                                // left acts on the first index, right on the second
                                let (row, col) = if on_left {
                                    (off + p * d + k, off + q * d + k)
                                } else {
                                    (off + k * d + p, off + k * d + q)
                                };
                                out[a][(row, col)] = g[a][(p, q)];
                            }
                        }
                    }
                }
            }
            out.map(|m| LinkMatrix::from_dense(&m))
        };
        let left = block_sum(&left_generators, true);
        let right = block_sum(&right_generators, false);
        let casimir = LinkMatrix::diagonal(labels.iter().map(|l| c(l.j.casimir())).collect());

        let index_of = |tj: u32, ml: i32, mr: i32| -> usize {
            let j = HalfInt::from_twice(tj);
            let d = j.multiplicity();
            GaugeModel::su2_block_offset(j) + ((ml + tj as i32) / 2) as usize * d + ((mr + tj as i32) / 2) as usize
        };
        let mut u: [[DMatrix<C64>; 2]; 2] = std::array::from_fn(|_| std::array::from_fn(|_| DMatrix::zeros(dim, dim)));
        for (col, lab) in labels.iter().enumerate() {
            let tj = lab.j.twice() as i64;
            for tj_new in [tj - 1, tj + 1] {
                if tj_new < 0 || tj_new > j_max.twice() as i64 {
                    continue;
                }
                let weight = ((tj as f64 + 1.0) / (tj_new as f64 + 1.0)).sqrt();
                for (ai, ta) in [-1i64, 1].into_iter().enumerate() {
                    for (bi, tb) in [-1i64, 1].into_iter().enumerate() {
                        let ml = lab.two_m_left as i64 + ta;
                        let mr = lab.two_m_right as i64 + tb;
                        if ml.abs() > tj_new || mr.abs() > tj_new {
                            continue;
                        }
                        let cg = clebsch_gordan(tj, lab.two_m_left as i64, 1, ta, tj_new, ml)
                            * clebsch_gordan(tj, lab.two_m_right as i64, 1, tb, tj_new, mr);
                        if cg != 0.0 {
                            let row = index_of(tj_new as u32, ml as i32, mr as i32);
                            u[ai][bi][(row, col)] += c(weight * cg);
                        }
                    }
                }
            }
        }
        let u = u.map(|row| row.map(|m| LinkMatrix::from_dense(&m)));
        Su2LinkOperators {
            j_max,
            left,
            right,
            casimir,
            u,
        }
    }

    pub fn dim(&self) -> usize {
        self.casimir.dim()
    }

    /// `(U†)^{αβ} = (U^{βα})†`
    pub fn u_dagger(&self, alpha: usize, beta: usize) -> LinkMatrix {
        self.u[beta][alpha].adjoint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn u1_single_link() {
        let e = u1_electric(1).to_dense();
        assert_eq!(e[(0, 0)], c(-1.0));
        assert_eq!(e[(1, 1)], c(0.0));
        assert_eq!(e[(2, 2)], c(1.0));
        let u = u1_raise(1);
        assert_eq!(u.column(1), &[(2, c(1.0))]);
        assert!(u.column(2).is_empty());
        for s in [1, 2] {
            let e = u1_electric(s).to_dense();
            let u = u1_raise(s).to_dense();
            // [E, U] = U exactly, including at the clipped edge
            assert_eq!(max_abs(&(&e * &u - &u * &e - &u)), 0.0);
            // U†U = 1 − |S⟩⟨S|
            let mut want = DMatrix::<C64>::identity(2 * s as usize + 1, 2 * s as usize + 1);
            want[(2 * s as usize, 2 * s as usize)] = ZERO;
            assert_eq!(max_abs(&(u.adjoint() * &u - want)), 0.0);
        }
    }

    #[test]
    fn su2_link_algebra() {
        let ops = Su2LinkOperators::new(HalfInt::from_twice(2));
        let i = C64::new(0.0, 1.0);
        let l = ops.left.clone().map(|m| m.to_dense());
        let r = ops.right.clone().map(|m| m.to_dense());
        for (x, y, z) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            assert!(max_abs(&(&l[x] * &l[y] - &l[y] * &l[x] - &l[z] * i)) < 1e-12);
            assert!(max_abs(&(&r[x] * &r[y] - &r[y] * &r[x] - &r[z] * i)) < 1e-12);
        }
        for a in 0..3 {
            for b in 0..3 {
                assert!(max_abs(&(&l[a] * &r[b] - &r[b] * &l[a])) < 1e-12);
            }
        }
        let cl = &l[0] * &l[0] + &l[1] * &l[1] + &l[2] * &l[2];
        let cr = &r[0] * &r[0] + &r[1] * &r[1] + &r[2] * &r[2];
        assert!(max_abs(&(&cl - ops.casimir.to_dense())) < 1e-12);
        assert!(max_abs(&(&cr - ops.casimir.to_dense())) < 1e-12);
    }

    #[test]
    fn casimir_eigenvalues_half() {
        let ops = Su2LinkOperators::new(HalfInt::HALF);
        let d = ops.casimir.to_dense();
        let diag: Vec<f64> = (0..5).map(|k| d[(k, k)].re).collect();
        assert_eq!(diag, vec![0.0, 0.75, 0.75, 0.75, 0.75]);
    }

    #[test]
    fn su2_link_operator_is_unitary_below_cutoff() {
        // Σ_β U^{αβ} (U^{γβ})† = δ_{αγ} on states whose image stays below j_max.
        let ops = Su2LinkOperators::new(HalfInt::from_twice(2));
        let col = 0; // |j=0⟩ maps to j=1/2 only
        for a in 0..2 {
            for g in 0..2 {
                let mut acc = DMatrix::<C64>::zeros(ops.dim(), ops.dim());
                for b in 0..2 {
                    acc += ops.u_dagger(b, g).to_dense() * ops.u[a][b].to_dense();
                }
                let want = if a == g { 1.0 } else { 0.0 };
                assert!((acc[(col, col)] - c(want)).norm() < 1e-12);
            }
        }
    }
}
