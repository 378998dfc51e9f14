//! Eigensolver wrappers over `faer`.

use faer::Side;

use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;
use crate::sparse::SparseOperator;
use crate::C64;

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(m: &OperatorMatrix) -> Result<Vec<C64>> {
    if m.dim() == 0 {
        return Ok(Vec::new());
    }
    if m.dim() == 1 {
        return Ok(vec![m.get(0, 0)]);
    }
    m.as_faer()
        .eigenvalues()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Eigenvalues of a sparse matrix, solved block by block over the connected
/// components of its sparsity pattern.
pub fn sparse_eigenvalues(m: &SparseOperator) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(m.dim());
    for comp in m.connected_components() {
        out.extend(eigenvalues(&m.dense_block(&comp))?);
    }
    Ok(out)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &OperatorMatrix) -> Result<Vec<f64>> {
    m.as_faer()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Ascending eigenvalues and the matching orthonormal eigenvectors (as
/// columns) of a Hermitian matrix.
pub fn hermitian_eigen(m: &OperatorMatrix) -> Result<(Vec<f64>, OperatorMatrix)> {
    let evd = m
        .as_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let vals = (0..m.dim()).map(|i| evd.S()[i].re).collect();
    Ok((vals, OperatorMatrix::from_faer(evd.U())))
}

/// `f(H)` for Hermitian `H`, through its eigendecomposition.
pub fn hermitian_function(h: &OperatorMatrix, f: impl Fn(f64) -> C64) -> Result<OperatorMatrix> {
    let (vals, vecs) = hermitian_eigen(h)?;
    let n = h.dim();
    let fv: Vec<C64> = vals.iter().map(|&x| f(x)).collect();
    Ok(OperatorMatrix::from_fn(n, |i, j| {
        (0..n).map(|k| vecs.get(i, k) * fv[k] * vecs.get(j, k).conj()).sum()
    }))
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn unitary_propagator(h: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    hermitian_function(h, |e| C64::from_polar(1.0, -e * t))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_hermitian_eigenvalue(m: &OperatorMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?.first().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{spin_half, Axis};

    #[test]
    fn general_eigenvalues_of_triangular() {
        let m = OperatorMatrix::from_fn(3, |i, j| {
            if i == j {
                C64::new(i as f64, -(i as f64))
            } else if j > i {
                C64::new(1.0, 1.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let mut ev = eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (i, z) in ev.iter().enumerate() {
            assert!((z - C64::new(i as f64, -(i as f64))).norm() < 1e-12);
        }
    }

    #[test]
    fn blocked_eigenvalues_match_dense() {
        let x = spin_half(Axis::X);
        let z = spin_half(Axis::Z).scale(C64::new(0.0, -0.3));
        // block diagonal after a permutation: blocks {0,2}, {1,3}
        let mut m = OperatorMatrix::zeros(4);
        for (a, b) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
            m.set(2 * a, 2 * b, x.get(a, b) + z.get(a, b));
            m.set(2 * a + 1, 2 * b + 1, 2.0 * x.get(a, b));
        }
        let s = SparseOperator::from_dense(&m);
        assert_eq!(s.connected_components().len(), 2);
        let mut a = sparse_eigenvalues(&s).unwrap();
        let mut b = eigenvalues(&m).unwrap();
        let key = |z: &C64| (z.re * 1e9).round() as i64;
        a.sort_by_key(key);
        b.sort_by_key(key);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn propagator_of_pauli_x() {
        let t = 0.37;
        let u = unitary_propagator(&spin_half(Axis::X), t).unwrap();
        assert!((u.get(0, 0) - C64::new(t.cos(), 0.0)).norm() < 1e-14);
        assert!((u.get(0, 1) - C64::new(0.0, -t.sin())).norm() < 1e-14);
    }
}
