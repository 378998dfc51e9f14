//! Local projectors annihilating a whole scar tower, found from the
//! compressed state `exp(β Q^†)|S_0>` written as an MPS whose site tensors
//! are polynomials in `β`.
//!
//! A projector that kills every `k`-site window tensor of the compressed
//! state, for every bond index pair and every power of `β`, kills every
//! tower member.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;
use crate::models::{local, stagger, ModelKind};
use crate::operator::{inner, OperatorMatrix};
use crate::spin::{spin_half, spin_one, spin_one_index, Axis, DOWN, UP};
use crate::C64;

/// Relative cutoff on Gram-matrix eigenvalues when extracting a span.
pub const SPAN_RANK_TOL: f64 = 1e-10;
/// Window vectors below this norm are treated as exact zeros.
pub const ZERO_VECTOR_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Site tensor as a polynomial in `β`: `coeffs[p]` multiplies `β^p` and is
/// laid out as `(l * chi + r) * d + s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    pub coeffs: Vec<Vec<C64>>,
}

impl SiteTensor {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

/// Periodic MPS family `Tr[A_1(β) A_2(β) ... A_L(β)]` with a unit cell of
/// one or two sites.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsFamily {
    chi: usize,
    local_dim: usize,
    cell: Vec<SiteTensor>,
}

/// A matrix-valued polynomial over a window: `coeffs[p][(l*chi + r)*d^k + config]`.
struct WindowPolynomial {
    span: usize,
    coeffs: Vec<Vec<C64>>,
}

impl MpsFamily {
    pub fn new(chi: usize, local_dim: usize, cell: Vec<SiteTensor>) -> Result<Self> {
        if chi == 0 || local_dim == 0 || cell.is_empty() {
            return Err(Error::InvalidModel("MPS family needs chi, d >= 1 and a nonempty cell".into()));
        }
        let len = chi * chi * local_dim;
        for t in &cell {
            if t.coeffs.is_empty() || t.coeffs.iter().any(|c| c.len() != len) {
                return Err(Error::InvalidModel(format!("site tensors must have {len} entries per power")));
            }
        }
        if cell.iter().all(|t| t.coeffs.iter().flatten().all(|z| *z == ZERO)) {
            return Err(Error::InvalidModel("MPS family is identically zero".into()));
        }
        Ok(Self { chi, local_dim, cell })
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn cell_length(&self) -> usize {
        self.cell.len()
    }

    pub fn cell(&self) -> &[SiteTensor] {
        &self.cell
    }

    pub fn max_degree(&self) -> usize {
        self.cell.iter().map(SiteTensor::degree).max().unwrap_or(0)
    }

    /// Product family `⊗ (|ref> + β q |ref>)` with the single-site ladder `q`
    /// carrying the sign `sign(site)`.
    fn product(reference: Vec<C64>, q: &OperatorMatrix, cell_len: usize, sign: impl Fn(usize) -> f64) -> Self {
        let raised = q.apply(&reference).expect("matching local dimension");
        let cell = (0..cell_len)
            .map(|s| SiteTensor {
                coeffs: vec![reference.clone(), raised.iter().map(|z| z * sign(s)).collect()],
            })
            .collect();
        Self::new(1, reference.len(), cell).expect("valid product family")
    }

    /// `⊗_j (|-> + β (σ^y + iσ^z)/2 |->)`
    pub fn toy() -> Self {
        Self::product(local::x_minus(), &local::x_raising(), 1, |_| 1.0)
    }

    /// `⊗_j (|-1> + β (-1)^j (S^+)^2 |-1>)`
    pub fn xy() -> Self {
        let plus = spin_one(Axis::Plus);
        let mut reference = vec![ZERO; 3];
        reference[spin_one_index(-1)] = C64::new(1.0, 0.0);
        Self::product(reference, &plus.matmul(&plus).expect("3x3"), 2, stagger)
    }

    /// The `χ = 2` AKLT family: `A ∓ β B` on odd and even labels, with
    /// `A^{(±1)} = ∓sqrt(2/3) σ^∓`, `A^{(0)} = -σ^z/sqrt(3)` and
    /// `B^{(+1)} = sqrt(2/3) σ^+`.
    pub fn aklt() -> Self {
        let c = (2.0f64 / 3.0).sqrt();
        let a = [
            (1, spin_half(Axis::Minus).scale_real(-c)),
            (0, spin_half(Axis::Z).scale_real(-1.0 / 3f64.sqrt())),
            (-1, spin_half(Axis::Plus).scale_real(c)),
        ];
        let b = [(1, spin_half(Axis::Plus).scale_real(c))];
        let pack = |mats: &[(i32, OperatorMatrix)], sign: f64| {
            let mut t = vec![ZERO; 12];
            for (m, mat) in mats {
                let s = spin_one_index(*m);
                for l in 0..2 {
                    for r in 0..2 {
                        t[(l * 2 + r) * 3 + s] += mat.get(l, r) * sign;
                    }
                }
            }
            t
        };
        let cell = (0..2)
            .map(|site| SiteTensor { coeffs: vec![pack(&a, 1.0), pack(&b, stagger(site))] })
            .collect();
        Self::new(2, 3, cell).expect("valid AKLT family")
    }

    /// The `χ = 2` domain-wall family with `A^{(↓)} = [[0,0],[-1,1]]` and
    /// `A^{(↑)} = (-1)^j (β/2) [[-1,-1],[1,1]]`.
    pub fn dw() -> Self {
        let down = [[0.0, 0.0], [-1.0, 1.0]];
        let up = [[-0.5, -0.5], [0.5, 0.5]];
        let cell = (0..2)
            .map(|site| {
                let mut c0 = vec![ZERO; 8];
                let mut c1 = vec![ZERO; 8];
                for l in 0..2 {
                    for r in 0..2 {
                        c0[(l * 2 + r) * 2 + DOWN] = C64::new(down[l][r], 0.0);
                        c1[(l * 2 + r) * 2 + UP] = C64::new(up[l][r] * stagger(site), 0.0);
                    }
                }
                SiteTensor { coeffs: vec![c0, c1] }
            })
            .collect();
        Self::new(2, 2, cell).expect("valid DW family")
    }

    pub fn for_model(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Toy => Self::toy(),
            ModelKind::Xy => Self::xy(),
            ModelKind::Aklt => Self::aklt(),
            ModelKind::Dw => Self::dw(),
        }
    }

    /// Site tensor at `site` evaluated at a numeric `β`.
    pub fn site_tensor(&self, site: usize, beta: C64) -> Vec<C64> {
        let t = &self.cell[site % self.cell.len()];
        let mut out = vec![ZERO; self.chi * self.chi * self.local_dim];
        let mut pow = C64::new(1.0, 0.0);
        for c in &t.coeffs {
            for (o, z) in out.iter_mut().zip(c) {
                *o += z * pow;
            }
            pow *= beta;
        }
        out
    }

    /// `Σ Tr[A_1(β) ... A_L(β)] |s_1 ... s_L>`, unnormalized, site 0 the
    /// slowest index.
    pub fn state(&self, beta: C64, len: usize) -> Result<Vec<C64>> {
        if len == 0 || len % self.cell.len() != 0 {
            return Err(Error::InvalidChain(format!(
                "chain length {len} is not a multiple of the unit cell {}",
                self.cell.len()
            )));
        }
        let (chi, d) = (self.chi, self.local_dim);
        // partial[(config * chi + l0) * chi + r]
        let mut partial = vec![ZERO; chi * chi];
        for l in 0..chi {
            partial[l * chi + l] = C64::new(1.0, 0.0);
        }
        let mut configs = 1usize;
        for site in 0..len {
            let a = self.site_tensor(site, beta);
            let mut next = vec![ZERO; configs * d * chi * chi];
            for c in 0..configs {
                for s in 0..d {
                    let nc = c * d + s;
                    for l0 in 0..chi {
                        for r in 0..chi {
                            let p = partial[(c * chi + l0) * chi + r];
                            if p == ZERO {
                                continue;
                            }
                            for r2 in 0..chi {
                                next[(nc * chi + l0) * chi + r2] += p * a[(r * chi + r2) * d + s];
                            }
                        }
                    }
                }
            }
            partial = next;
            configs *= d;
        }
        Ok((0..configs)
            .map(|c| (0..chi).map(|l| partial[(c * chi + l) * chi + l]).sum())
            .collect())
    }

    /// Open-index product of `k` consecutive site tensors starting at `offset`.
    fn window_polynomial(&self, offset: usize, k: usize) -> WindowPolynomial {
        let (chi, d) = (self.chi, self.local_dim);
        // identity on the bond, degree 0, no physical legs yet
        let mut span = 1usize;
        let mut coeffs = vec![{
            let mut id = vec![ZERO; chi * chi];
            for l in 0..chi {
                id[l * chi + l] = C64::new(1.0, 0.0);
            }
            id
        }];
        for step in 0..k {
            let t = &self.cell[(offset + step) % self.cell.len()];
            let new_span = span * d;
            let mut next = vec![vec![ZERO; chi * chi * new_span]; coeffs.len() + t.degree()];
            for (p, cur) in coeffs.iter().enumerate() {
                for (q, site) in t.coeffs.iter().enumerate() {
                    let out = &mut next[p + q];
                    for l in 0..chi {
                        for m in 0..chi {
                            for conf in 0..span {
                                let x = cur[(l * chi + m) * span + conf];
                                if x == ZERO {
                                    continue;
                                }
                                for r in 0..chi {
                                    for s in 0..d {
                                        let y = site[(m * chi + r) * d + s];
                                        out[(l * chi + r) * new_span + conf * d + s] += x * y;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            coeffs = next;
            span = new_span;
        }
        WindowPolynomial { span, coeffs }
    }
}

/// Every nonzero `d^k` coefficient vector of the `k`-site window tensors:
/// over unit-cell offsets, bond index pairs `(l, r)` and powers of `β`.
pub fn window_states(family: &MpsFamily, k: usize) -> Vec<Vec<C64>> {
    (0..family.cell_length())
        .flat_map(|offset| window_states_at(family, offset, k))
        .collect()
}

/// Window vectors for a single unit-cell offset.
pub fn window_states_at(family: &MpsFamily, offset: usize, k: usize) -> Vec<Vec<C64>> {
    let chi = family.chi;
    let poly = family.window_polynomial(offset, k);
    let mut out = Vec::new();
    for coeff in &poly.coeffs {
        for lr in 0..chi * chi {
            let v = coeff[lr * poly.span..(lr + 1) * poly.span].to_vec();
            if v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() >= ZERO_VECTOR_TOL {
                out.push(v);
            }
        }
    }
    out
}

/// Orthonormal basis of a set of `dim`-dimensional vectors.
#[derive(Clone, Debug)]
pub struct LocalSpan {
    pub dim: usize,
    pub vectors: Vec<Vec<C64>>,
}

impl LocalSpan {
    pub fn rank(&self) -> usize {
        self.vectors.len()
    }
}

/// Span of `raw` from the eigendecomposition of its Gram matrix, dropping
/// directions whose Gram eigenvalue is below `SPAN_RANK_TOL` times the largest.
pub fn orthonormal_span(raw: &[Vec<C64>], dim: usize) -> Result<LocalSpan> {
    for v in raw {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
    }
    if raw.is_empty() {
        return Ok(LocalSpan { dim, vectors: Vec::new() });
    }
    let n = raw.len();
    let gram = OperatorMatrix::from_fn(n, |i, j| inner(&raw[i], &raw[j]));
    let (vals, vecs) = hermitian_eigen(&gram)?;
    let top = vals.iter().copied().fold(0.0, f64::max);
    let mut vectors = Vec::new();
    for (a, &lam) in vals.iter().enumerate().rev() {
        if lam <= SPAN_RANK_TOL * top || lam <= 0.0 {
            continue;
        }
        let scale = 1.0 / lam.sqrt();
        let mut u = vec![ZERO; dim];
        for (i, v) in raw.iter().enumerate() {
            let c = vecs.get(i, a) * scale;
            for (o, z) in u.iter_mut().zip(v) {
                *o += c * z;
            }
        }
        vectors.push(u);
    }
    Ok(LocalSpan { dim, vectors })
}

/// `1 - Σ |v><v|` over the span.
pub fn annihilating_projector(span: &LocalSpan) -> OperatorMatrix {
    let mut p = OperatorMatrix::identity(span.dim);
    for v in &span.vectors {
        p.add_scaled(C64::new(-1.0, 0.0), &OperatorMatrix::projector(v))
            .expect("span dimension");
    }
    p
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectorDerivation {
    pub model: ModelKind,
    pub k: usize,
    /// Rank of the window span, common to all offsets.
    pub span_rank: usize,
    /// Full annihilator of the window span for each unit-cell offset.
    #[serde(skip)]
    pub per_offset: Vec<(usize, OperatorMatrix)>,
    /// The common annihilator.
    #[serde(skip)]
    pub annihilator: OperatorMatrix,
    /// The projector used in the model's dissipator: the annihilator itself,
    /// except for the three-site AKLT case where it is `|T'><T'|`.
    #[serde(skip)]
    pub emitted: OperatorMatrix,
}

/// Largest tolerated difference between per-offset annihilators.
const OFFSET_AGREEMENT_TOL: f64 = 1e-10;

pub fn derive_projectors(kind: ModelKind, k: usize) -> Result<ProjectorDerivation> {
    if !(2..=3).contains(&k) {
        return Err(Error::UnsupportedProjector { model: kind.to_string(), k });
    }
    let family = MpsFamily::for_model(kind);
    let dim = family.local_dim().pow(k as u32);
    let mut per_offset = Vec::new();
    let mut span_rank = 0;
    for offset in 0..family.cell_length() {
        let span = orthonormal_span(&window_states_at(&family, offset, k), dim)?;
        span_rank = span.rank();
        per_offset.push((offset, annihilating_projector(&span)));
    }
    let annihilator = per_offset[0].1.clone();
    for (offset, p) in &per_offset[1..] {
        let diff = p.sub(&annihilator)?.frobenius_norm();
        if diff > OFFSET_AGREEMENT_TOL {
            return Err(Error::Validation(format!(
                "{kind} k={k}: offset {offset} annihilator differs from offset 0 by {diff:.3e}"
            )));
        }
    }
    let emitted = if kind == ModelKind::Aklt && k == 3 {
        let t = local::aklt_t_prime_state();
        let pt = annihilator.apply(&t)?;
        let defect: f64 = pt.iter().zip(&t).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        if defect > OFFSET_AGREEMENT_TOL {
            return Err(Error::Validation(format!("|T'> lies outside the three-site annihilator ({defect:.3e})")));
        }
        OperatorMatrix::projector(&t)
    } else {
        annihilator.clone()
    };
    Ok(ProjectorDerivation { model: kind, k, span_rank, per_offset, annihilator, emitted })
}

/// Analytic form of the two-site projector used by each model's jumps.
pub fn analytic_two_site_projector(kind: ModelKind) -> OperatorMatrix {
    match kind {
        ModelKind::Toy => local::singlet_projector(),
        ModelKind::Xy => local::xy_scar_projector(),
        ModelKind::Aklt => local::aklt_scar_projector(),
        ModelKind::Dw => local::up_up_projector(),
    }
}
