//! Dense complex square matrices and state-vector helpers.
//!
//! [`OperatorMatrix`] is the common carrier for local spin operators,
//! projectors, density matrices and small Hamiltonians. Storage is row-major.
//! Products above a small size go through `faer`.

use std::fmt;

use faer::MatRef;

use crate::error::{Error, Result};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "OperatorMatrix({}x{})", self.dim, self.dim)?;
        if self.dim <= 9 {
            for i in 0..self.dim {
                let row: Vec<String> = (0..self.dim)
                    .map(|j| {
                        let z = self.get(i, j);
                        format!("{:+.4}{:+.4}i", z.re, z.im)
                    })
                    .collect();
                writeln!(f, "  [{}]", row.join(", "))?;
            }
        }
        Ok(())
    }
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out.data[i * dim + i] = ONE;
        }
        out
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major entries; the length must be a square.
    pub fn from_vec(data: Vec<C64>) -> Result<Self> {
        let dim = exact_sqrt(data.len()).ok_or(Error::NotSquare { len: data.len() })?;
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            data.extend(row.iter().map(|&x| C64::new(x, 0.0)));
        }
        Ok(Self { dim, data })
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut out = Self::zeros(diag.len());
        for (i, &z) in diag.iter().enumerate() {
            out.data[i * diag.len() + i] = z;
        }
        out
    }

    /// `|a><b|`
    pub fn outer(a: &[C64], b: &[C64]) -> Result<Self> {
        check_dim(a.len(), b.len())?;
        Ok(Self::from_fn(a.len(), |i, j| a[i] * b[j].conj()))
    }

    /// `|v><v|` (no normalization applied).
    pub fn projector(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.dim + j] = z;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    pub(crate) fn as_faer(&self) -> MatRef<'_, C64> {
        MatRef::from_row_major_slice(&self.data, self.dim, self.dim)
    }

    pub(crate) fn from_faer(m: MatRef<'_, C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let n = self.dim;
        if n <= 16 {
            let mut out = Self::zeros(n);
            for i in 0..n {
                for k in 0..n {
                    let a = self.data[i * n + k];
                    if a == ZERO {
                        continue;
                    }
                    let brow = &other.data[k * n..(k + 1) * n];
                    let orow = &mut out.data[i * n..(i + 1) * n];
                    for (o, &b) in orow.iter_mut().zip(brow) {
                        *o += a * b;
                    }
                }
            }
            return Ok(out);
        }
        let prod = self.as_faer() * other.as_faer();
        Ok(Self::from_faer(prod.as_ref()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { dim: self.dim, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { dim: self.dim, data })
    }

    /// `self += coeff * other`
    pub fn add_scaled(&mut self, coeff: C64, other: &Self) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += coeff * b;
        }
        Ok(())
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|a| a * z).collect() }
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn conj(&self) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    /// `[A, B] = AB - BA`
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// `{A, B} = AB + BA`
    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.add(&other.matmul(self)?)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `|A - A^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Hermitian to `1e-12` relative to the largest entry.
    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= 1e-12 * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Kronecker product `self ⊗ other`; `self` is the slow (left) factor.
    pub fn kron(&self, other: &Self) -> Self {
        let (na, nb) = (self.dim, other.dim);
        let n = na * nb;
        let mut out = Self::zeros(n);
        for ia in 0..na {
            for ja in 0..na {
                let a = self.get(ia, ja);
                if a == ZERO {
                    continue;
                }
                for ib in 0..nb {
                    for jb in 0..nb {
                        out.data[(ia * nb + ib) * n + ja * nb + jb] = a * other.get(ib, jb);
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        check_dim(self.dim, v.len())?;
        Ok((0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `Tr[self * other]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<C64> {
        check_dim(self.dim, other.dim)?;
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        Ok(acc)
    }

    /// `<a|self|b>`
    pub fn matrix_element(&self, a: &[C64], b: &[C64]) -> Result<C64> {
        let ab = self.apply(b)?;
        Ok(inner(a, &ab))
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// `<a|b>` (conjugate-linear in the first argument).
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Normalizes in place and returns the original norm.
pub fn normalize(v: &mut [C64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        let inv = 1.0 / n;
        v.iter_mut().for_each(|z| *z *= inv);
    }
    n
}

pub fn basis_vector(dim: usize, index: usize) -> Vec<C64> {
    let mut v = vec![ZERO; dim];
    v[index] = ONE;
    v
}

/// Subtracts the components of `v` along each (orthonormal) vector in `basis`.
pub fn project_out(v: &mut [C64], basis: &[Vec<C64>]) {
    for b in basis {
        let c = inner(b, v);
        for (x, y) in v.iter_mut().zip(b) {
            *x -= c * y;
        }
    }
}

/// Tensor product of single-site states; the first entry is the leftmost site.
pub fn product_state(sites: &[Vec<C64>]) -> Vec<C64> {
    let mut out = vec![ONE];
    for s in sites {
        let mut next = Vec::with_capacity(out.len() * s.len());
        for &a in &out {
            next.extend(s.iter().map(|&b| a * b));
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{spin_half, Axis};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = OperatorMatrix::identity(2);
        let b = OperatorMatrix::identity(3);
        assert_eq!(
            a.matmul(&b).unwrap_err(),
            Error::DimensionMismatch { expected: 2, found: 3 }
        );
        assert!(a.add(&b).is_err());
        assert!(a.apply(&[ONE; 3]).is_err());
    }

    #[test]
    fn trace_of_identity() {
        assert_eq!(OperatorMatrix::identity(64).trace(), c(64.0, 0.0));
    }

    #[test]
    fn large_matmul_matches_naive() {
        let n = 40;
        let a = OperatorMatrix::from_fn(n, |i, j| c((i * 3 + j) as f64 * 0.01, (i as f64 - j as f64) * 0.02));
        let b = OperatorMatrix::from_fn(n, |i, j| c(((i + 2 * j) % 7) as f64, 0.5 * (i % 3) as f64));
        let fast = a.matmul(&b).unwrap();
        let naive = OperatorMatrix::from_fn(n, |i, j| (0..n).map(|k| a.get(i, k) * b.get(k, j)).sum());
        assert!(fast.sub(&naive).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn kron_ordering_puts_left_factor_slow() {
        let z = spin_half(Axis::Z);
        let id = OperatorMatrix::identity(2);
        let zi = z.kron(&id);
        assert_eq!(zi.get(0, 0), ONE);
        assert_eq!(zi.get(1, 1), ONE);
        assert_eq!(zi.get(2, 2), -ONE);
        assert_eq!(zi.get(3, 3), -ONE);
    }

    #[test]
    fn outer_and_projector() {
        let v = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let p = OperatorMatrix::projector(&v);
        assert_eq!(p.get(0, 1), c(0.0, -1.0));
        assert!(p.is_hermitian());
        assert!(OperatorMatrix::outer(&v, &[ONE]).is_err());
    }

    #[test]
    fn from_vec_rejects_non_square_lengths() {
        assert_eq!(
            OperatorMatrix::from_vec(vec![ONE; 5]).unwrap_err(),
            Error::NotSquare { len: 5 }
        );
        assert_eq!(OperatorMatrix::from_vec(vec![ONE; 9]).unwrap().dim(), 3);
    }
}
