//! Dense Hermitian eigensolver backed by LAPACK (`dsyevd` / `zheevd`).

use nalgebra::DMatrix;

use crate::error::{check_budget, QlmError, Result};
use crate::operators::{BasisKind, BasisTag, SparseOperator};
use crate::{Budget, C64};

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

pub fn max_hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for c in 0..n {
        for r in 0..=c {
            dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    dev
}

/// Full eigendecomposition of a Hermitian matrix. Only the lower triangle is
/// read. Real input takes the cheaper real-symmetric path.
pub fn eigh(m: &DMatrix<C64>) -> Result<Eigh> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(QlmError::DimensionMismatch(n, m.ncols()));
    }
    if n == 0 {
        return Ok(Eigh {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    if m.iter().all(|z| z.im == 0.0) {
        eigh_real(m)
    } else {
        eigh_complex(m)
    }
}

fn eigh_real(m: &DMatrix<C64>) -> Result<Eigh> {
    let n = m.nrows();
    let ni = n as i32;
    let mut a: Vec<f64> = m.iter().map(|z| z.re).collect();
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut work = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    unsafe {
        lapack::dsyevd(b'V', b'L', ni, &mut a, ni, &mut w, &mut work, -1, &mut iwork, -1, &mut info);
    }
    if info != 0 {
        return Err(QlmError::Lapack { routine: "dsyevd", info });
    }
    let lwork = work[0] as usize;
    let liwork = iwork[0] as usize;
    let mut work = vec![0.0; lwork.max(1)];
    let mut iwork = vec![0i32; liwork.max(1)];
    unsafe {
        lapack::dsyevd(
            b'V',
            b'L',
            ni,
            &mut a,
            ni,
            &mut w,
            &mut work,
            lwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    if info != 0 {
        return Err(QlmError::Lapack { routine: "dsyevd", info });
    }
    drop(work);
    let vectors = DMatrix::from_iterator(n, n, a.into_iter().map(|x| C64::new(x, 0.0)));
    Ok(Eigh { values: w, vectors })
}

fn eigh_complex(m: &DMatrix<C64>) -> Result<Eigh> {
    let n = m.nrows();
    let ni = n as i32;
    let mut a: Vec<C64> = m.iter().copied().collect();
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut work = vec![C64::new(0.0, 0.0); 1];
    let mut rwork = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    unsafe {
        lapack::zheevd(
            b'V', b'L', ni, &mut a, ni, &mut w, &mut work, -1, &mut rwork, -1, &mut iwork, -1, &mut info,
        );
    }
    if info != 0 {
        return Err(QlmError::Lapack { routine: "zheevd", info });
    }
    let lwork = work[0].re as usize;
    let lrwork = rwork[0] as usize;
    let liwork = iwork[0] as usize;
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1)];
    let mut rwork = vec![0.0; lrwork.max(1)];
    let mut iwork = vec![0i32; liwork.max(1)];
    unsafe {
        lapack::zheevd(
            b'V',
            b'L',
            ni,
            &mut a,
            ni,
            &mut w,
            &mut work,
            lwork as i32,
            &mut rwork,
            lrwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    if info != 0 {
        return Err(QlmError::Lapack { routine: "zheevd", info });
    }
    let vectors = DMatrix::from_vec(n, n, a);
    Ok(Eigh { values: w, vectors })
}

/// Orthonormal basis of the range of a Hermitian projector, built by
/// Gram–Schmidt over its columns in index order. The result depends only on
/// the subspace, not on how the projector was obtained.
pub fn canonical_range_basis(projector: &DMatrix<C64>, rank: usize) -> Vec<Vec<C64>> {
    let n = projector.nrows();
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(rank);
    for c in 0..n {
        if out.len() == rank {
            break;
        }
        let mut v: Vec<C64> = projector.column(c).iter().copied().collect();
        for _ in 0..2 {
            for u in &out {
                let overlap: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= overlap * ui;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            // Phase convention: component `c` real positive.
            let phase = v[c] / v[c].norm();
            for vi in &mut v {
                *vi /= norm * phase;
            }
            out.push(v);
        }
    }
    out
}

/// Eigendecomposition of one connected block of a sparse Hermitian matrix.
#[derive(Debug, Clone)]
pub struct BlockEigh {
    /// Basis indices of the block, ascending.
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    /// Columns are eigenvectors over `indices`.
    pub vectors: DMatrix<C64>,
}

/// Relative Hermiticity tolerance accepted by [`block_eigh`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Diagonalizes every connected component of the sparsity graph of `h`
/// separately. Each block must fit the dense budget.
pub fn block_eigh(h: &SparseOperator, budget: &Budget) -> Result<Vec<BlockEigh>> {
    let dev = h.hermitian_deviation();
    if dev > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(QlmError::NotHermitian(dev));
    }
    let comps = h.connected_components();
    if let Some(big) = comps.iter().map(Vec::len).max() {
        check_budget("dense diagonalization block", big, budget.dense)?;
    }
    comps
        .into_iter()
        .map(|indices| {
            let tag = BasisTag::new(BasisKind::Local, "block", indices.len());
            let dense = h.submatrix(&indices, tag)?.to_dense(budget.dense)?;
            let e = eigh(&dense)?;
            Ok(BlockEigh {
                indices,
                values: e.values,
                vectors: e.vectors,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(e: &Eigh) -> DMatrix<C64> {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            e.values.len(),
            e.values.iter().map(|&x| C64::new(x, 0.0)),
        ));
        &e.vectors * d * e.vectors.adjoint()
    }

    #[test]
    fn real_and_complex_paths_reconstruct() {
        let n = 7;
        let real = DMatrix::from_fn(n, n, |r, c| C64::new(((r * 3 + c * 3) % 5) as f64 + (r == c) as u8 as f64, 0.0));
        let herm = DMatrix::from_fn(n, n, |r, c| {
            let im = if r == c { 0.0 } else if r > c { 0.3 * (r + c) as f64 } else { -0.3 * (r + c) as f64 };
            C64::new(((r + c) % 4) as f64, im)
        });
        for m in [real, herm] {
            let e = eigh(&m).unwrap();
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            let diff = reconstruct(&e) - &m;
            assert!(diff.iter().all(|z| z.norm() < 1e-12));
            let id = e.vectors.adjoint() * &e.vectors - DMatrix::identity(n, n);
            assert!(id.iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn canonical_basis_is_orthonormal_and_spans() {
        // projector onto span{(1,1,0)/√2, (0,0,1)}
        let mut p = DMatrix::<C64>::zeros(3, 3);
        p[(0, 0)] = C64::new(0.5, 0.0);
        p[(0, 1)] = C64::new(0.5, 0.0);
        p[(1, 0)] = C64::new(0.5, 0.0);
        p[(1, 1)] = C64::new(0.5, 0.0);
        p[(2, 2)] = C64::new(1.0, 0.0);
        let b = canonical_range_basis(&p, 2);
        assert_eq!(b.len(), 2);
        assert!((b[0][0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((b[1][2].re - 1.0).abs() < 1e-14);
    }
}
