//! Compressed-row sparse operators.
//!
//! Chain Hamiltonians and jump operators are sums of embedded few-site
//! terms, so each row carries O(L) entries. Storing them sparsely keeps the
//! d^L = 6561 models in memory and turns the Lindblad right-hand side into
//! sparse-times-dense products.

use crate::error::{Error, Result};
use crate::operator::{check_dim, OperatorMatrix};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &z)| (i, i, z)).collect())
    }

    /// Duplicate `(row, col)` entries are summed; exact zeros are dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < dim && c < dim);
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
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { dim, row_ptr, cols: keep_cols, vals: keep_vals }
    }

    pub fn from_dense(m: &OperatorMatrix) -> Self {
        let n = m.dim();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let z = m.get(i, j);
                if z != ZERO {
                    t.push((i, j, z));
                }
            }
        }
        Self::from_triplets(n, t)
    }

    pub fn to_dense(&self) -> OperatorMatrix {
        let mut out = OperatorMatrix::zeros(self.dim);
        for (i, j, z) in self.iter() {
            out.set(i, j, out.get(i, j) + z);
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, z)| (i, j, z)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|&(c, _)| c == j).map_or(ZERO, |(_, z)| z)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        self.iter().collect()
    }

    pub fn scale(&self, z: C64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= z);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut t = self.triplets();
        t.extend(other.iter());
        Ok(Self::from_triplets(self.dim, t))
    }

    /// Sum of `coeff * op` over the given terms.
    pub fn linear_combination<'a>(
        dim: usize,
        terms: impl IntoIterator<Item = (C64, &'a SparseOperator)>,
    ) -> Result<Self> {
        let mut t = Vec::new();
        for (c, op) in terms {
            check_dim(dim, op.dim)?;
            t.extend(op.iter().map(|(i, j, z)| (i, j, c * z)));
        }
        Ok(Self::from_triplets(dim, t))
    }

    pub fn dagger(&self) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(i, j, z)| (j, i, z.conj())).collect())
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(i, j, z)| (j, i, z)).collect())
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut t = Vec::new();
        let mut acc = vec![ZERO; self.dim];
        let mut touched = Vec::new();
        for i in 0..self.dim {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if acc[j] == ZERO {
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                t.push((i, j, acc[j]));
                acc[j] = ZERO;
            }
            touched.clear();
        }
        Ok(Self::from_triplets(self.dim, t))
    }

    /// Kronecker product `self ⊗ other`; `self` is the slow factor.
    pub fn kron(&self, other: &Self) -> Self {
        let nb = other.dim;
        let mut t = Vec::with_capacity(self.nnz() * other.nnz());
        for (ia, ja, a) in self.iter() {
            for (ib, jb, b) in other.iter() {
                t.push((ia * nb + ib, ja * nb + jb, a * b));
            }
        }
        Self::from_triplets(self.dim * nb, t)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        check_dim(self.dim, v.len())?;
        let mut out = vec![ZERO; self.dim];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// `out = self * v`; panics on length mismatch.
    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        assert_eq!(v.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(j, z)| z * v[j]).sum();
        }
    }

    /// `out += coeff * self * rho` for a row-major `dim x dim` matrix `rho`.
    pub fn left_mul_acc(&self, coeff: C64, rho: &[C64], out: &mut [C64]) {
        let n = self.dim;
        assert_eq!(rho.len(), n * n);
        assert_eq!(out.len(), n * n);
        for i in 0..n {
            let orow = &mut out[i * n..(i + 1) * n];
            for (k, s) in self.row(i) {
                let c = coeff * s;
                let rrow = &rho[k * n..(k + 1) * n];
                for (o, &r) in orow.iter_mut().zip(rrow) {
                    *o += c * r;
                }
            }
        }
    }

    /// Indices of the rows holding at least one entry.
    pub fn nonzero_rows(&self) -> Vec<usize> {
        (0..self.dim).filter(|&i| self.row_ptr[i] < self.row_ptr[i + 1]).collect()
    }

    /// `out += coeff * self * rho * self^dagger`, touching only the rows and
    /// columns of `out` listed in `rows` (which must be [`Self::nonzero_rows`]).
    pub fn sandwich_acc(&self, coeff: C64, rows: &[usize], rho: &[C64], out: &mut [C64], scratch: &mut Vec<C64>) {
        let n = self.dim;
        assert_eq!(rho.len(), n * n);
        assert_eq!(out.len(), n * n);
        scratch.clear();
        scratch.resize(rows.len() * n, ZERO);
        for (a, &i) in rows.iter().enumerate() {
            let arow = &mut scratch[a * n..(a + 1) * n];
            for (k, s) in self.row(i) {
                for (o, &r) in arow.iter_mut().zip(&rho[k * n..(k + 1) * n]) {
                    *o += s * r;
                }
            }
        }
        for (a, &i) in rows.iter().enumerate() {
            let arow = &scratch[a * n..(a + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for &m in rows {
                let mut acc = ZERO;
                for (l, s) in self.row(m) {
                    acc += arow[l] * s.conj();
                }
                orow[m] += coeff * acc;
            }
        }
    }

    /// `out += coeff * rho * self^dagger` for a row-major `rho`.
    pub fn right_mul_dagger_acc(&self, coeff: C64, rho: &[C64], out: &mut [C64]) {
        let n = self.dim;
        assert_eq!(rho.len(), n * n);
        assert_eq!(out.len(), n * n);
        for i in 0..n {
            let rrow = &rho[i * n..(i + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (j, o) in orow.iter_mut().enumerate() {
                let mut acc = ZERO;
                for (k, s) in self.row(j) {
                    acc += rrow[k] * s.conj();
                }
                *o += coeff * acc;
            }
        }
    }

    /// `Tr[self * rho]` for a row-major `rho`.
    pub fn trace_with(&self, rho: &[C64]) -> C64 {
        let n = self.dim;
        assert_eq!(rho.len(), n * n);
        let mut acc = ZERO;
        for i in 0..n {
            for (k, s) in self.row(i) {
                acc += s * rho[k * n + i];
            }
        }
        acc
    }

    /// `<psi|self|psi>`
    pub fn expectation(&self, psi: &[C64]) -> C64 {
        assert_eq!(psi.len(), self.dim);
        let mut acc = ZERO;
        for (i, &p) in psi.iter().enumerate() {
            let row: C64 = self.row(i).map(|(j, z)| z * psi[j]).sum();
            acc += p.conj() * row;
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, z)| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.iter().all(|(i, j, z)| (z - self.get(j, i).conj()).norm() <= 1e-12 * scale)
    }

    /// Partition of indices into connected components of the symmetric
    /// sparsity graph. The operator is block diagonal in the returned
    /// (sorted) index sets.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.dim).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (i, j, _) in self.iter() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut label = vec![usize::MAX; self.dim];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.dim {
            let r = find(&mut parent, i);
            if label[r] == usize::MAX {
                label[r] = comps.len();
                comps.push(Vec::new());
            }
            comps[label[r]].push(i);
        }
        comps
    }

    /// Dense restriction to the index set `idx` (rows and columns).
    pub fn dense_block(&self, idx: &[usize]) -> OperatorMatrix {
        let mut pos = vec![usize::MAX; self.dim];
        for (p, &i) in idx.iter().enumerate() {
            pos[i] = p;
        }
        let mut out = OperatorMatrix::zeros(idx.len());
        for (p, &i) in idx.iter().enumerate() {
            for (j, z) in self.row(i) {
                let q = pos[j];
                if q != usize::MAX {
                    out.set(p, q, out.get(p, q) + z);
                }
            }
        }
        out
    }

    pub fn checked_dim(&self, expected: usize) -> Result<()> {
        if self.dim == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found: self.dim })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_dense(n: usize, seed: u64) -> OperatorMatrix {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        OperatorMatrix::from_fn(n, |_, _| {
            let (a, b, keep) = (next(), next(), next());
            if keep > 0.1 {
                C64::new(0.0, 0.0)
            } else {
                C64::new(a, b)
            }
        })
    }

    #[test]
    fn duplicates_are_summed() {
        let one = C64::new(1.0, 0.0);
        let s = SparseOperator::from_triplets(2, vec![(0, 1, one), (0, 1, one), (1, 0, one), (1, 0, -one)]);
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.get(0, 1), C64::new(2.0, 0.0));
    }

    #[test]
    fn block_structure_is_detected() {
        let one = C64::new(1.0, 0.0);
        let s = SparseOperator::from_triplets(5, vec![(0, 3, one), (1, 1, one), (4, 2, one)]);
        let comps = s.connected_components();
        assert_eq!(comps, vec![vec![0, 3], vec![1], vec![2, 4]]);
    }

    proptest! {
        #[test]
        fn sparse_products_match_dense(seed in 0u64..1000, n in 2usize..9) {
            let a = random_dense(n, seed);
            let b = random_dense(n, seed + 7);
            let rho = random_dense(n, seed + 13);
            let sa = SparseOperator::from_dense(&a);
            let sb = SparseOperator::from_dense(&b);
            prop_assert!(sa.matmul(&sb).unwrap().to_dense().sub(&a.matmul(&b).unwrap()).unwrap().max_abs() < 1e-12);
            prop_assert!(sa.dagger().to_dense().sub(&a.dagger()).unwrap().max_abs() == 0.0);
            prop_assert!(sa.kron(&sb).to_dense().sub(&a.kron(&b)).unwrap().max_abs() < 1e-14);

            let coeff = C64::new(0.3, -1.1);
            let mut out = vec![C64::new(0.0, 0.0); n * n];
            sa.left_mul_acc(coeff, rho.as_slice(), &mut out);
            let expect = a.matmul(&rho).unwrap().scale(coeff);
            prop_assert!(OperatorMatrix::from_vec(out).unwrap().sub(&expect).unwrap().max_abs() < 1e-12);

            let mut out = vec![C64::new(0.0, 0.0); n * n];
            sa.right_mul_dagger_acc(coeff, rho.as_slice(), &mut out);
            let expect = rho.matmul(&a.dagger()).unwrap().scale(coeff);
            prop_assert!(OperatorMatrix::from_vec(out).unwrap().sub(&expect).unwrap().max_abs() < 1e-12);

            let tr = sa.trace_with(rho.as_slice());
            prop_assert!((tr - a.matmul(&rho).unwrap().trace()).norm() < 1e-12);
        }

        #[test]
        fn sandwich_matches_dense_with_empty_rows(seed in 0u64..1000, n in 2usize..9, skip in 2usize..4) {
            let a = random_dense(n, seed);
            let rho = random_dense(n, seed + 3);
            let kept = (0..n)
                .filter(|i| i % skip != 0)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| (i, j, a.get(i, j)))
                .collect();
            let sa = SparseOperator::from_triplets(n, kept);
            let dense = sa.to_dense();
            let rows = sa.nonzero_rows();
            prop_assert!(rows.iter().all(|i| i % skip != 0));
            let coeff = C64::new(0.7, 0.2);
            let mut out = rho.as_slice().to_vec();
            sa.sandwich_acc(coeff, &rows, rho.as_slice(), &mut out, &mut Vec::new());
            let expect = rho.add(&dense.matmul(&rho).unwrap().matmul(&dense.dagger()).unwrap().scale(coeff)).unwrap();
            prop_assert!(OperatorMatrix::from_vec(out).unwrap().sub(&expect).unwrap().max_abs() < 1e-12);
        }
    }
}
