//! Chain geometry and Kronecker placement of few-site operators.
//!
//! Sites are numbered from 0. Site 0 is the leftmost, slowest-varying tensor
//! factor of the computational basis, so basis index `i` has the digit of
//! site `s` at place value `d^(L-1-s)`.
//!
//! Placement works by permuting tensor factors through index arithmetic: a
//! `k`-site local operator acts on the digits of the listed sites and leaves
//! the others untouched. Wrap-around pairs such as `(L-1, 0)` under periodic
//! boundary take the same code path as any other placement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;
use crate::sparse::SparseOperator;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub len: usize,
    pub local_dim: usize,
    pub boundary: Boundary,
}

impl ChainSpec {
    pub fn new(len: usize, local_dim: usize, boundary: Boundary) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidChain(format!("length {len} < 2")));
        }
        if local_dim != 2 && local_dim != 3 {
            return Err(Error::InvalidChain(format!("local dimension {local_dim} not in {{2, 3}}")));
        }
        let chain = Self { len, local_dim, boundary };
        // d^L must fit comfortably in memory-addressable sizes.
        if (local_dim as f64).powi(len as i32) > 1e8 {
            return Err(Error::InvalidChain(format!("d^L = {local_dim}^{len} is too large")));
        }
        Ok(chain)
    }

    pub fn periodic(len: usize, local_dim: usize) -> Result<Self> {
        Self::new(len, local_dim, Boundary::Periodic)
    }

    pub fn open(len: usize, local_dim: usize) -> Result<Self> {
        Self::new(len, local_dim, Boundary::Open)
    }

    pub fn hilbert_dim(&self) -> usize {
        self.local_dim.pow(self.len as u32)
    }

    /// Reduces a (possibly negative or overflowing) site label onto the
    /// chain. Periodic chains wrap; open chains reject out-of-range labels.
    pub fn site(&self, j: isize) -> Result<usize> {
        match self.boundary {
            Boundary::Periodic => Ok(j.rem_euclid(self.len as isize) as usize),
            Boundary::Open => {
                if j < 0 || j as usize >= self.len {
                    Err(Error::SiteOutOfRange { site: j.max(0) as usize, len: self.len })
                } else {
                    Ok(j as usize)
                }
            }
        }
    }

    /// `d^(L-1-s)`
    pub fn place_value(&self, site: usize) -> usize {
        self.local_dim.pow((self.len - 1 - site) as u32)
    }

    /// Local state index of `site` within computational basis index `index`.
    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.place_value(site)) % self.local_dim
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.len).map(|s| self.digit(index, s)).collect()
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &x| acc * self.local_dim + x)
    }

    /// Basis index after moving the content of every site `s` to `s + shift`
    /// (modulo `L`).
    pub fn translated(&self, index: usize, shift: usize) -> usize {
        let digits = self.digits(index);
        let mut out = vec![0; self.len];
        for (s, d) in digits.into_iter().enumerate() {
            out[(s + shift) % self.len] = d;
        }
        self.index_of(&out)
    }

    /// Starting sites of the `k`-site windows covered by translation: all `L`
    /// under periodic boundary, `L-k+1` under open boundary.
    pub fn window_starts(&self, k: usize) -> Vec<usize> {
        match self.boundary {
            Boundary::Periodic => (0..self.len).collect(),
            Boundary::Open => (0..=self.len.saturating_sub(k)).collect(),
        }
    }

    /// Consecutive sites `start, start+1, ..., start+k-1` reduced onto the chain.
    pub fn window(&self, start: isize, k: usize) -> Result<Vec<usize>> {
        (0..k as isize).map(|o| self.site(start + o)).collect()
    }

    fn reduce_sites(&self, sites: &[usize]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(sites.len());
        for &s in sites {
            let r = match self.boundary {
                Boundary::Periodic => s % self.len,
                Boundary::Open => {
                    if s >= self.len {
                        return Err(Error::SiteOutOfRange { site: s, len: self.len });
                    }
                    s
                }
            };
            if out.contains(&r) {
                return Err(Error::SiteCollision { site: r });
            }
            out.push(r);
        }
        Ok(out)
    }
}

/// Calls `emit(row, col, value)` for every nonzero of `local` placed on
/// `sites`, tensored with identities elsewhere. The first tensor factor of
/// `local` acts on `sites[0]`.
fn for_each_embedded(
    local: &OperatorMatrix,
    sites: &[usize],
    chain: &ChainSpec,
    mut emit: impl FnMut(usize, usize, C64),
) -> Result<()> {
    let sites = chain.reduce_sites(sites)?;
    let k = sites.len();
    let d = chain.local_dim;
    let local_dim = d.pow(k as u32);
    if local.dim() != local_dim {
        return Err(Error::DimensionMismatch { expected: local_dim, found: local.dim() });
    }
    let places: Vec<usize> = sites.iter().map(|&s| chain.place_value(s)).collect();
    // Global offset contributed by each local basis index.
    let offsets: Vec<usize> = (0..local_dim)
        .map(|a| {
            let mut rest = a;
            let mut off = 0;
            for m in (0..k).rev() {
                off += (rest % d) * places[m];
                rest /= d;
            }
            off
        })
        .collect();
    // Nonzero columns of the local operator.
    let columns: Vec<Vec<(usize, C64)>> = (0..local_dim)
        .map(|b| {
            (0..local_dim)
                .filter_map(|a| {
                    let z = local.get(a, b);
                    (z != C64::new(0.0, 0.0)).then_some((a, z))
                })
                .collect()
        })
        .collect();
    for col in 0..chain.hilbert_dim() {
        let mut b = 0;
        for &p in &places {
            b = b * d + (col / p) % d;
        }
        let base = col - offsets[b];
        for &(a, z) in &columns[b] {
            emit(base + offsets[a], col, z);
        }
    }
    Ok(())
}

/// Dense placement of a `k`-site operator onto the chain.
pub fn embed(local: &OperatorMatrix, sites: &[usize], chain: &ChainSpec) -> Result<OperatorMatrix> {
    let mut out = OperatorMatrix::zeros(chain.hilbert_dim());
    for_each_embedded(local, sites, chain, |r, c, z| out.set(r, c, z))?;
    Ok(out)
}

pub fn embed_sparse(local: &OperatorMatrix, sites: &[usize], chain: &ChainSpec) -> Result<SparseOperator> {
    let mut t = Vec::new();
    for_each_embedded(local, sites, chain, |r, c, z| t.push((r, c, z)))?;
    Ok(SparseOperator::from_triplets(chain.hilbert_dim(), t))
}

/// Accumulates `Σ coeff * embed(local, sites)` over many placements without
/// materializing each term.
#[derive(Debug)]
pub struct OperatorSum {
    chain: ChainSpec,
    triplets: Vec<(usize, usize, C64)>,
}

impl OperatorSum {
    pub fn new(chain: ChainSpec) -> Self {
        Self { chain, triplets: Vec::new() }
    }

    pub fn add(&mut self, coeff: C64, local: &OperatorMatrix, sites: &[usize]) -> Result<&mut Self> {
        let t = &mut self.triplets;
        for_each_embedded(local, sites, &self.chain, |r, c, z| t.push((r, c, coeff * z)))?;
        Ok(self)
    }

    pub fn add_real(&mut self, coeff: f64, local: &OperatorMatrix, sites: &[usize]) -> Result<&mut Self> {
        self.add(C64::new(coeff, 0.0), local, sites)
    }

    pub fn build(self) -> SparseOperator {
        SparseOperator::from_triplets(self.chain.hilbert_dim(), self.triplets)
    }
}
