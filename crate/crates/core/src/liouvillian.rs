//! The Lindblad generator
//! `dρ/dt = -i[H, ρ] + Σ γ_j (2 L_j ρ L_j^† - {L_j^† L_j, ρ})`
//! as a column-stacked superoperator and as a matrix-free map on
//! row-major density matrices, plus the spectral diagnostics built on it.

use serde::{Deserialize, Serialize};

use crate::chain::{Boundary, ChainSpec};
use crate::error::{Error, Result};
use crate::linalg::sparse_eigenvalues;
use crate::models::{LiouvillianModel, ScarTower};
use crate::operator::{exact_sqrt, OperatorMatrix};
use crate::sparse::SparseOperator;
use crate::C64;

/// Default largest Hilbert dimension for a full superoperator spectrum.
pub const DEFAULT_SUPEROPERATOR_CAP: usize = 81;
/// Hilbert dimensions above this are always refused for superoperators.
pub const HARD_SUPEROPERATOR_CAP: usize = 128;
/// Largest Hilbert dimension for non-Hermitian effective spectra.
pub const NH_SPECTRUM_CAP: usize = 6561;
/// Absolute `|Re λ|` threshold for decoherence-free modes at unit rates.
pub const DFS_TOL: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Column-stacked `vec(ρ)`: entry `(i, j)` goes to slot `i + j n`.
pub fn vectorize(rho: &OperatorMatrix) -> Vec<C64> {
    let n = rho.dim();
    let mut v = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            v[i + j * n] = rho.get(i, j);
        }
    }
    v
}

pub fn devectorize(v: &[C64]) -> Result<OperatorMatrix> {
    let n = exact_sqrt(v.len()).ok_or(Error::NotSquare { len: v.len() })?;
    Ok(OperatorMatrix::from_fn(n, |i, j| v[i + j * n]))
}

/// DFS threshold scaled by the largest rate when rates exceed one.
pub fn dfs_tolerance(model: &LiouvillianModel) -> f64 {
    DFS_TOL * model.max_rate().max(1.0)
}

/// `𝓛` acting on column-stacked vectors of a `n x n` density matrix.
#[derive(Clone, Debug)]
pub struct Superoperator {
    hilbert_dim: usize,
    matrix: SparseOperator,
}

impl Superoperator {
    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &SparseOperator {
        &self.matrix
    }

    pub fn apply(&self, rho: &OperatorMatrix) -> Result<OperatorMatrix> {
        devectorize(&self.matrix.apply(&vectorize(rho))?)
    }

    /// `max_c |Σ_i 𝓛[(i,i), c]|`, zero for a trace-preserving generator.
    pub fn trace_functional_defect(&self) -> f64 {
        let n = self.hilbert_dim;
        let mut acc = vec![ZERO; self.dim()];
        for i in 0..n {
            for (c, z) in self.matrix.row(i + i * n) {
                acc[c] += z;
            }
        }
        acc.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// `(rate, L)` pairs with nonzero rate.
fn active_jumps(model: &LiouvillianModel) -> Vec<(f64, &SparseOperator)> {
    model.jumps.iter().filter(|j| j.rate != 0.0).map(|j| (j.rate, &j.operator)).collect()
}

/// `K = H - i Σ γ L^† L`
fn effective(h: &SparseOperator, jumps: &[(f64, &SparseOperator)]) -> Result<SparseOperator> {
    let mut terms = vec![(C64::new(1.0, 0.0), h.clone())];
    for (rate, l) in jumps {
        terms.push((C64::new(0.0, -rate), l.dagger().matmul(l)?));
    }
    SparseOperator::linear_combination(h.dim(), terms.iter().map(|(c, op)| (*c, op)))
}

pub fn build_superoperator(model: &LiouvillianModel, cap: usize) -> Result<Superoperator> {
    build_superoperator_from(&model.hamiltonian, &active_jumps(model), cap)
}

/// `𝓛 = -i (1 ⊗ K) + i (K̄ ⊗ 1) + Σ 2γ (L̄ ⊗ L)` under column stacking, with
/// `K = H - i Σ γ L^† L`. The left Kronecker factor acts on the column index.
pub fn build_superoperator_from(
    h: &SparseOperator,
    jumps: &[(f64, &SparseOperator)],
    cap: usize,
) -> Result<Superoperator> {
    let n = h.dim();
    let cap = cap.min(HARD_SUPEROPERATOR_CAP);
    if n > cap {
        return Err(Error::DimensionCap { dim: n, cap });
    }
    for (rate, l) in jumps {
        l.checked_dim(n)?;
        if !(*rate >= 0.0) {
            return Err(Error::InvalidModel(format!("negative rate {rate}")));
        }
    }
    let k = effective(h, jumps)?;
    let id = SparseOperator::identity(n);
    let mut terms = vec![(-I, id.kron(&k)), (I, k.conj().kron(&id))];
    for (rate, l) in jumps {
        terms.push((C64::new(2.0 * rate, 0.0), l.conj().kron(l)));
    }
    let matrix = SparseOperator::linear_combination(n * n, terms.iter().map(|(c, op)| (*c, op)))?;
    Ok(Superoperator { hilbert_dim: n, matrix })
}

/// Matrix-free `ρ ↦ 𝓛(ρ)` on row-major `n x n` arrays.
#[derive(Clone, Debug)]
pub struct LindbladGenerator {
    dim: usize,
    effective: SparseOperator,
    jumps: Vec<GeneratorJump>,
}

#[derive(Clone, Debug)]
struct GeneratorJump {
    /// `2γ`
    weight: f64,
    operator: SparseOperator,
    rows: Vec<usize>,
}

impl LindbladGenerator {
    pub fn new(model: &LiouvillianModel) -> Result<Self> {
        Self::from_parts(&model.hamiltonian, &active_jumps(model))
    }

    pub fn from_parts(h: &SparseOperator, jumps: &[(f64, &SparseOperator)]) -> Result<Self> {
        for (_, l) in jumps {
            l.checked_dim(h.dim())?;
        }
        Ok(Self {
            dim: h.dim(),
            effective: effective(h, jumps)?,
            jumps: jumps
                .iter()
                .map(|(g, l)| GeneratorJump { weight: 2.0 * g, operator: (*l).clone(), rows: l.nonzero_rows() })
                .collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Upper bound on the Frobenius-induced norm of `𝓛`.
    pub fn norm_bound(&self) -> f64 {
        let two_norm = |s: &SparseOperator| (s.norm_inf() * s.dagger().norm_inf()).sqrt();
        2.0 * two_norm(&self.effective)
            + self.jumps.iter().map(|j| j.weight * two_norm(&j.operator).powi(2)).sum::<f64>()
    }

    fn add_jump_terms(&self, rho: &[C64], out: &mut [C64], buf: &mut Vec<C64>) {
        for j in &self.jumps {
            j.operator.sandwich_acc(C64::new(j.weight, 0.0), &j.rows, rho, out, buf);
        }
    }

    /// `out = 𝓛(rho)` for an arbitrary matrix.
    pub fn apply(&self, rho: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        self.effective.left_mul_acc(-I, rho, out);
        self.effective.right_mul_dagger_acc(I, rho, out);
        self.add_jump_terms(rho, out, &mut Vec::new());
    }

    /// `out = 𝓛(rho)` for Hermitian `rho`, using one left product for the
    /// coherent part: with `Y = -iKρ`, `𝓛(ρ) = Y + Y^† + Σ 2γ LρL^†`.
    pub fn apply_hermitian(&self, rho: &[C64], out: &mut [C64], scratch: &mut HermitianScratch) {
        let n = self.dim;
        scratch.ensure(n);
        let HermitianScratch { y, buf } = scratch;
        y.iter_mut().for_each(|z| *z = ZERO);
        self.effective.left_mul_acc(-I, rho, y);
        adjoint_into(y, out, n);
        for (o, yy) in out.iter_mut().zip(y.iter()) {
            *o += yy;
        }
        self.add_jump_terms(rho, out, buf);
    }
}

/// Reusable buffers for [`LindbladGenerator::apply_hermitian`].
#[derive(Clone, Debug, Default)]
pub struct HermitianScratch {
    y: Vec<C64>,
    buf: Vec<C64>,
}

impl HermitianScratch {
    fn ensure(&mut self, n: usize) {
        if self.y.len() != n * n {
            self.y = vec![ZERO; n * n];
        }
    }
}

fn adjoint_into(src: &[C64], dst: &mut [C64], n: usize) {
    const BLOCK: usize = 32;
    for ib in (0..n).step_by(BLOCK) {
        for jb in (0..n).step_by(BLOCK) {
            for i in ib..(ib + BLOCK).min(n) {
                for j in jb..(jb + BLOCK).min(n) {
                    dst[j * n + i] = src[i * n + j].conj();
                }
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<C64>,
    pub dfs_count: usize,
    pub dfs_eigenvalues: Vec<C64>,
    pub tol: f64,
}

impl SpectrumReport {
    pub fn from_eigenvalues(eigenvalues: Vec<C64>, tol: f64) -> Self {
        let dfs_eigenvalues: Vec<C64> = eigenvalues.iter().copied().filter(|z| z.re.abs() < tol).collect();
        Self { dfs_count: dfs_eigenvalues.len(), eigenvalues, dfs_eigenvalues, tol }
    }

    /// Largest real part among the non-DFS eigenvalues, i.e. minus the gap.
    pub fn slowest_decay(&self) -> Option<f64> {
        self.eigenvalues
            .iter()
            .filter(|z| z.re.abs() >= self.tol)
            .map(|z| z.re)
            .max_by(f64::total_cmp)
    }

    /// `max(Re λ)` over the spectrum.
    pub fn max_real(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest distance from each eigenvalue's conjugate to the nearest
    /// eigenvalue.
    pub fn conjugation_defect(&self) -> f64 {
        let conj: Vec<C64> = self.eigenvalues.iter().map(|z| z.conj()).collect();
        match_multisets(&self.eigenvalues, &conj).unwrap_or(f64::INFINITY)
    }
}

/// Full spectrum of the superoperator, solved block-wise over the
/// connected components of its sparsity pattern.
pub fn spectrum(superop: &Superoperator, tol: f64) -> Result<SpectrumReport> {
    Ok(SpectrumReport::from_eigenvalues(sparse_eigenvalues(superop.matrix())?, tol))
}

/// Translation of the chain by `shift` sites as a permutation of basis
/// indices, or `None` for open chains.
pub fn hilbert_translation(chain: &ChainSpec, shift: usize) -> Option<Vec<usize>> {
    (chain.boundary == Boundary::Periodic)
        .then(|| (0..chain.hilbert_dim()).map(|i| chain.translated(i, shift)).collect())
}

/// The same translation acting on column-stacked operators, `ρ ↦ T ρ T^†`.
pub fn liouville_translation(chain: &ChainSpec, shift: usize) -> Option<Vec<usize>> {
    let t = hilbert_translation(chain, shift)?;
    let n = t.len();
    Some((0..n * n).map(|v| t[v % n] + t[v / n] * n).collect())
}

/// True when `op[perm a, perm b] = op[a, b]` for every entry.
pub fn commutes_with_permutation(op: &SparseOperator, perm: &[usize]) -> bool {
    if perm.len() != op.dim() {
        return false;
    }
    let tol = 1e-12 * op.max_abs().max(f64::MIN_POSITIVE);
    op.iter().all(|(a, b, z)| (op.get(perm[a], perm[b]) - z).norm() <= tol)
}

/// Eigenvalues of `op`, which must commute with the cyclic permutation
/// `perm` of order dividing `order`, solved per momentum sector.
pub fn momentum_sector_eigenvalues(op: &SparseOperator, perm: &[usize], order: usize) -> Result<Vec<C64>> {
    let dim = op.dim();
    // orbit representative, steps from it, and orbit period for every index
    let mut rep = vec![usize::MAX; dim];
    let mut steps = vec![0usize; dim];
    let mut period = vec![0usize; dim];
    let mut reps = Vec::new();
    for start in 0..dim {
        if rep[start] != usize::MAX {
            continue;
        }
        let mut cur = start;
        let mut d = 0;
        loop {
            rep[cur] = start;
            steps[cur] = d;
            cur = perm[cur];
            d += 1;
            if cur == start {
                break;
            }
            if d > order {
                return Err(Error::Validation("permutation order exceeds the chain length".into()));
            }
        }
        if order % d != 0 {
            return Err(Error::Validation(format!("orbit period {d} does not divide {order}")));
        }
        period[start] = d;
        reps.push(start);
    }
    let columns = op.transpose();
    let mut out = Vec::with_capacity(dim);
    for m in 0..order {
        let k = 2.0 * std::f64::consts::PI * m as f64 / order as f64;
        let members: Vec<usize> = reps.iter().copied().filter(|&r| (m * period[r]) % order == 0).collect();
        let mut pos = vec![usize::MAX; dim];
        for (p, &r) in members.iter().enumerate() {
            pos[r] = p;
        }
        let mut triplets = Vec::new();
        for &r in &members {
            for (c, z) in columns.row(r) {
                let target = rep[c];
                if pos[target] == usize::MAX {
                    continue;
                }
                let weight = (period[r] as f64 / period[target] as f64).sqrt();
                triplets.push((pos[target], pos[r], z * C64::from_polar(weight, k * steps[c] as f64)));
            }
        }
        let block = SparseOperator::from_triplets(members.len(), triplets);
        out.extend(sparse_eigenvalues(&block)?);
    }
    Ok(out)
}

/// Eigenvalues of a Hilbert-space (`liouville = false`) or Liouville-space
/// operator on `chain`, split by one- or two-site translation when the
/// operator commutes with it and by sparsity blocks otherwise.
pub fn chain_eigenvalues(op: &SparseOperator, chain: &ChainSpec, liouville: bool) -> Result<Vec<C64>> {
    for shift in [1, 2] {
        if chain.len % shift != 0 {
            continue;
        }
        let perm = if liouville { liouville_translation(chain, shift) } else { hilbert_translation(chain, shift) };
        if let Some(perm) = perm {
            if commutes_with_permutation(op, &perm) {
                return momentum_sector_eigenvalues(op, &perm, chain.len / shift);
            }
        }
    }
    sparse_eigenvalues(op)
}

/// Full Liouvillian spectrum of a model, using its translation symmetry
/// when present.
pub fn model_spectrum(model: &LiouvillianModel, superop: &Superoperator, tol: f64) -> Result<SpectrumReport> {
    Ok(SpectrumReport::from_eigenvalues(chain_eigenvalues(superop.matrix(), &model.chain, true)?, tol))
}

/// `-i (E_n - E_m)` over all pairs of the catalogued DFS basis.
pub fn predicted_dfs_eigenvalues(tower: &ScarTower) -> Vec<C64> {
    let basis = tower.dfs_basis();
    let mut out = Vec::with_capacity(basis.len() * basis.len());
    for (_, en) in &basis {
        for (_, em) in &basis {
            out.push(C64::new(0.0, -(en - em)));
        }
    }
    out
}

/// Greedy nearest matching of two equal-size multisets; returns the largest
/// matched distance, or `None` if the sizes differ.
pub fn match_multisets(a: &[C64], b: &[C64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut a: Vec<C64> = a.to_vec();
    let mut b: Vec<C64> = b.to_vec();
    let key = |z: &C64| (z.im, z.re);
    a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in &a {
        let (idx, d) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))?;
        used[idx] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct DfsMode {
    pub n: usize,
    pub m: usize,
    pub predicted: C64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DfsReport {
    pub modes: Vec<DfsMode>,
    pub max_residual: f64,
}

/// `||𝓛(|S_n><S_m|) + i (E_n - E_m) |S_n><S_m|||_F` over the catalogued DFS
/// basis, through the superoperator when given and matrix-free otherwise.
pub fn check_dfs(model: &LiouvillianModel, tower: &ScarTower, superop: Option<&Superoperator>) -> Result<DfsReport> {
    let basis = tower.dfs_basis();
    let generator = match superop {
        Some(_) => None,
        None => Some(LindbladGenerator::new(model)?),
    };
    let dim = model.hilbert_dim();
    let mut modes = Vec::with_capacity(basis.len() * basis.len());
    let mut out = vec![ZERO; dim * dim];
    for (n, (vn, en)) in basis.iter().enumerate() {
        for (m, (vm, em)) in basis.iter().enumerate() {
            let coh = OperatorMatrix::outer(vn, vm)?;
            let predicted = C64::new(0.0, -(en - em));
            let image = match (superop, &generator) {
                (Some(s), _) => s.apply(&coh)?.into_vec(),
                (None, Some(g)) => {
                    g.apply(coh.as_slice(), &mut out);
                    out.clone()
                }
                (None, None) => unreachable!(),
            };
            let residual = image
                .iter()
                .zip(coh.as_slice())
                .map(|(a, b)| (a - b * predicted).norm_sqr())
                .sum::<f64>()
                .sqrt();
            modes.push(DfsMode { n, m, predicted, residual });
        }
    }
    let max_residual = modes.iter().map(|m| m.residual).fold(0.0, f64::max);
    Ok(DfsReport { modes, max_residual })
}

/// Which dissipative term enters the non-Hermitian Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NhForm {
    /// `H - i Σ γ_j L_j^† L_j`
    Jumps,
    /// `H - i Σ γ_j P_j` with the bare projectors behind the jumps.
    Projectors,
}

pub fn nh_hamiltonian(model: &LiouvillianModel, form: NhForm) -> Result<SparseOperator> {
    match form {
        NhForm::Jumps => model.effective_hamiltonian(),
        NhForm::Projectors => {
            let mut terms = vec![(C64::new(1.0, 0.0), model.hamiltonian.clone())];
            for (jump, p) in model.jumps.iter().zip(&model.projectors) {
                if jump.rate != 0.0 {
                    terms.push((C64::new(0.0, -jump.rate), p.clone()));
                }
            }
            SparseOperator::linear_combination(model.hilbert_dim(), terms.iter().map(|(c, op)| (*c, op)))
        }
    }
}

/// Eigenvalues of the non-Hermitian effective Hamiltonian.
pub fn nh_spectrum(model: &LiouvillianModel, form: NhForm) -> Result<Vec<C64>> {
    let n = model.hilbert_dim();
    if n > NH_SPECTRUM_CAP {
        return Err(Error::DimensionCap { dim: n, cap: NH_SPECTRUM_CAP });
    }
    chain_eigenvalues(&nh_hamiltonian(model, form)?, &model.chain, false)
}

/// Real parts of the eigenvalues with `|Im λ| < tol`, ascending.
pub fn real_axis(eigenvalues: &[C64], tol: f64) -> Vec<f64> {
    let mut out: Vec<f64> = eigenvalues.iter().filter(|z| z.im.abs() < tol).map(|z| z.re).collect();
    out.sort_by(f64::total_cmp);
    out
}
