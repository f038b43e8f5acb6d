//! Canonical complex sparse matrices.
//!
//! Storage is compressed-row with columns sorted inside every row and
//! duplicate coordinates merged, so the triplet view is always sorted by
//! `(row, col)` and free of explicit zeros. Operands of any binary operation
//! must carry the same [`BasisTag`].

use std::fmt;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_budget, QlmError, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Full,
    Physical,
    Local,
}

/// Identity of the basis an operator or state is expressed in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisTag {
    pub kind: BasisKind,
    pub id: String,
    pub dim: usize,
}

impl BasisTag {
    pub fn new(kind: BasisKind, id: impl Into<String>, dim: usize) -> Self {
        BasisTag {
            kind,
            id: id.into(),
            dim,
        }
    }

    pub fn ensure_same(&self, other: &BasisTag) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(QlmError::BasisMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            BasisKind::Full => "full",
            BasisKind::Physical => "physical",
            BasisKind::Local => "local",
        };
        write!(f, "{kind}[{}; dim {}]", self.id, self.dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    tag: BasisTag,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    pub fn from_triplets(tag: BasisTag, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        let dim = tag.dim;
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(QlmError::InvalidArgument(format!(
                "entry ({r}, {c}) outside dimension {dim}"
            )));
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != C64::new(0.0, 0.0) {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseOperator {
            tag,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
        })
    }

    pub fn zeros(tag: BasisTag) -> Self {
        let dim = tag.dim;
        SparseOperator {
            tag,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(tag: BasisTag) -> Self {
        let dim = tag.dim;
        Self::diagonal(tag, vec![C64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(tag: BasisTag, diag: Vec<C64>) -> Self {
        assert_eq!(diag.len(), tag.dim, "diagonal length must match dimension");
        let trip = diag.into_iter().enumerate().map(|(i, v)| (i, i, v)).collect();
        Self::from_triplets(tag, trip).expect("diagonal entries are in range")
    }

    pub fn dim(&self) -> usize {
        self.tag.dim
    }

    pub fn tag(&self) -> &BasisTag {
        &self.tag
    }

    /// Relabel the basis without touching entries.
    pub fn with_tag(mut self, tag: BasisTag) -> Result<Self> {
        if tag.dim != self.tag.dim {
            return Err(QlmError::DimensionMismatch(tag.dim, self.tag.dim));
        }
        self.tag = tag;
        Ok(self)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    /// Sorted `(row, col, value)` triplets.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.cols[a..b].binary_search(&c) {
            Ok(k) => self.vals[a + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(r, c, _)| r == c)
    }

    pub fn diagonal_values(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= s;
        }
        if s == C64::new(0.0, 0.0) {
            return Self::zeros(self.tag.clone());
        }
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        let trip = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.tag.clone(), trip).expect("same dimension")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.tag.ensure_same(&other.tag)?;
        let trip = self.triplets().chain(other.triplets()).collect();
        Self::from_triplets(self.tag.clone(), trip)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale_re(-1.0))
    }

    /// Sum of operators sharing one basis, reduced in slice order.
    pub fn sum<'a>(tag: BasisTag, ops: impl IntoIterator<Item = &'a SparseOperator>) -> Result<Self> {
        let mut trip = Vec::new();
        for op in ops {
            tag.ensure_same(&op.tag)?;
            trip.extend(op.triplets());
        }
        Self::from_triplets(tag, trip)
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.tag.ensure_same(&other.tag)?;
        let dim = self.dim();
        let mut acc = vec![C64::new(0.0, 0.0); dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; dim];
        let mut trip = Vec::new();
        for r in 0..dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                trip.push((r, c, acc[c]));
                acc[c] = C64::new(0.0, 0.0);
                mark[c] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.tag.clone(), trip)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(QlmError::DimensionMismatch(self.dim(), v.len()));
        }
        Ok((0..self.dim())
            .map(|r| self.row(r).map(|(c, a)| a * v[c]).sum())
            .collect())
    }

    /// `out = A v` without allocation. Lengths are not checked.
    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            *o = acc;
        }
    }

    /// Gershgorin interval `[min(a_ii − r_i), max(a_ii + r_i)]` enclosing the
    /// real parts of the spectrum.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.dim() {
            let mut d = 0.0;
            let mut rad = 0.0;
            for (c, a) in self.row(r) {
                if c == r {
                    d = a.re;
                } else {
                    rad += a.norm();
                }
            }
            lo = lo.min(d - rad);
            hi = hi.max(d + rad);
        }
        if self.dim() == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// `⟨ψ|A|ψ⟩`
    pub fn expectation(&self, psi: &[C64]) -> Result<C64> {
        let a_psi = self.apply(psi)?;
        Ok(psi.iter().zip(&a_psi).map(|(x, y)| x.conj() * y).sum())
    }

    /// `max |A − A†|`
    pub fn hermitian_deviation(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self, budget: usize) -> Result<DMatrix<C64>> {
        check_budget("dense matrix", self.dim(), budget)?;
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        Ok(m)
    }

    /// Principal submatrix on `indices` (in the given order), relabelled.
    pub fn submatrix(&self, indices: &[usize], tag: BasisTag) -> Result<Self> {
        if tag.dim != indices.len() {
            return Err(QlmError::DimensionMismatch(tag.dim, indices.len()));
        }
        let mut pos = std::collections::HashMap::with_capacity(indices.len());
        for (k, &i) in indices.iter().enumerate() {
            pos.insert(i, k);
        }
        let mut trip = Vec::new();
        for (k, &r) in indices.iter().enumerate() {
            for (c, v) in self.row(r) {
                if let Some(&kc) = pos.get(&c) {
                    trip.push((k, kc, v));
                }
            }
        }
        Self::from_triplets(tag, trip)
    }

    /// Index sets of the connected components of the sparsity graph, each
    /// sorted, ordered by smallest member. The operator is block diagonal
    /// over them.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.dim();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (r, c, _) in self.triplets() {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        groups.into_values().collect()
    }

    /// One `row col re im` line per entry, sorted.
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# dim {} basis {}", self.dim(), self.tag)?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_coo<R: BufRead>(r: R, tag: BasisTag) -> Result<Self> {
        let mut trip = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| QlmError::Serialization(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(QlmError::Serialization(format!("bad coordinate line '{line}'")));
            }
            let parse_err = |e: &dyn fmt::Display| QlmError::Serialization(format!("{e} in '{line}'"));
            let row = f[0].parse::<usize>().map_err(|e| parse_err(&e))?;
            let col = f[1].parse::<usize>().map_err(|e| parse_err(&e))?;
            let re = f[2].parse::<f64>().map_err(|e| parse_err(&e))?;
            let im = f[3].parse::<f64>().map_err(|e| parse_err(&e))?;
            trip.push((row, col, C64::new(re, im)));
        }
        Self::from_triplets(tag, trip)
    }
}

/// `AB − BA`
pub fn commutator(a: &SparseOperator, b: &SparseOperator) -> Result<SparseOperator> {
    if a.dim() != b.dim() {
        return Err(QlmError::DimensionMismatch(a.dim(), b.dim()));
    }
    a.mul(b)?.sub(&b.mul(a)?)
}

/// Max-absolute-entry norm of `[A, B]`.
pub fn commutator_norm(a: &SparseOperator, b: &SparseOperator) -> Result<f64> {
    Ok(commutator(a, b)?.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(dim: usize) -> BasisTag {
        BasisTag::new(BasisKind::Local, "t", dim)
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn canonicalization_merges_and_drops_zeros() {
        let op = SparseOperator::from_triplets(
            tag(3),
            vec![(2, 1, c(1.0)), (0, 0, c(2.0)), (2, 1, c(-1.0)), (0, 0, c(1.0)), (1, 2, c(4.0))],
        )
        .unwrap();
        let t: Vec<_> = op.triplets().collect();
        assert_eq!(t, vec![(0, 0, c(3.0)), (1, 2, c(4.0))]);
    }

    #[test]
    fn products_and_commutators() {
        // Pauli X and Z
        let x = SparseOperator::from_triplets(tag(2), vec![(0, 1, c(1.0)), (1, 0, c(1.0))]).unwrap();
        let z = SparseOperator::diagonal(tag(2), vec![c(1.0), c(-1.0)]);
        let xz = x.mul(&z).unwrap();
        assert_eq!(xz.get(0, 1), c(-1.0));
        assert_eq!(xz.get(1, 0), c(1.0));
        assert!((commutator_norm(&x, &z).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(commutator_norm(&z, &z).unwrap(), 0.0);
        assert_eq!(x.hermitian_deviation(), 0.0);
    }

    #[test]
    fn mismatched_tags_are_rejected() {
        let a = SparseOperator::identity(tag(2));
        let b = SparseOperator::identity(BasisTag::new(BasisKind::Local, "u", 2));
        assert!(matches!(a.add(&b), Err(QlmError::BasisMismatch { .. })));
        assert!(commutator_norm(&a, &SparseOperator::identity(tag(3))).is_err());
    }

    #[test]
    fn components_of_block_matrix() {
        let op = SparseOperator::from_triplets(
            tag(5),
            vec![(0, 3, c(1.0)), (3, 0, c(1.0)), (1, 1, c(2.0)), (2, 4, c(1.0))],
        )
        .unwrap();
        assert_eq!(op.connected_components(), vec![vec![0, 3], vec![1], vec![2, 4]]);
    }

    #[test]
    fn coo_round_trip() {
        let op = SparseOperator::from_triplets(
            tag(3),
            vec![(0, 2, C64::new(0.1, -0.7)), (2, 2, c(3.25)), (1, 0, C64::new(1e-300, 5.0))],
        )
        .unwrap();
        let mut buf = Vec::new();
        op.write_coo(&mut buf).unwrap();
        let back = SparseOperator::read_coo(&buf[..], tag(3)).unwrap();
        assert_eq!(back, op);
    }
}
