//! The four catalogued scarred chains and their Liouvillians.
//!
//! Every model carries a Hamiltonian, a list of jump operators `L_j = V_j P_j`
//! with rates, the bare projectors `P_j`, the ladder operator `Q^†`, the
//! reference state `|S_0>` and the tower spacing `ω`. Physics labels use
//! `j = site + 1`, so staggered signs are `(-1)^(site + 1)`.

pub mod local;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aklt;
use crate::chain::{embed_sparse, Boundary, ChainSpec, OperatorSum};
use crate::error::{Error, Result};
use crate::operator::{basis_vector, inner, norm, normalize, product_state, project_out, OperatorMatrix};
use crate::projectors::MpsFamily;
use crate::sparse::SparseOperator;
use crate::spin::{spin_half, spin_one, spin_one_index, Axis, DOWN, UP};
use crate::C64;

pub const DEFAULT_COUPLING_SEED: u64 = 20230;

/// Tower construction stops once `Q^†` maps a unit vector below this norm.
pub const TOWER_NORM_CUTOFF: f64 = 1e-12;
/// Largest tolerated `||H|S_n> - E_n|S_n>||` when building a tower.
pub const TOWER_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Toy,
    Xy,
    Aklt,
    Dw,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Toy => "toy",
            ModelKind::Xy => "xy",
            ModelKind::Aklt => "aklt",
            ModelKind::Dw => "dw",
        }
    }

    pub fn local_dim(&self) -> usize {
        match self {
            ModelKind::Toy | ModelKind::Dw => 2,
            ModelKind::Xy | ModelKind::Aklt => 3,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy" => Ok(ModelKind::Toy),
            "xy" => Ok(ModelKind::Xy),
            "aklt" => Ok(ModelKind::Aklt),
            "dw" => Ok(ModelKind::Dw),
            other => Err(Error::InvalidModel(format!("unknown model '{other}'"))),
        }
    }
}

/// Constructor parameters for one of the catalogued models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Toy { len: usize, omega: f64, coupling_seed: u64 },
    Xy { len: usize, h: f64, d: f64 },
    Aklt { len: usize, include_three_local: bool },
    Dw { len: usize, delta: f64, j: f64, experimental_boundary: bool },
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Toy { .. } => ModelKind::Toy,
            ModelSpec::Xy { .. } => ModelKind::Xy,
            ModelSpec::Aklt { .. } => ModelKind::Aklt,
            ModelSpec::Dw { .. } => ModelKind::Dw,
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            ModelSpec::Toy { len, .. }
            | ModelSpec::Xy { len, .. }
            | ModelSpec::Aklt { len, .. }
            | ModelSpec::Dw { len, .. } => len,
        }
    }

    pub fn build(&self) -> Result<LiouvillianModel> {
        match *self {
            ModelSpec::Toy { len, omega, coupling_seed } => build_toy(len, omega, coupling_seed),
            ModelSpec::Xy { len, h, d } => build_xy(len, h, d),
            ModelSpec::Aklt { len, include_three_local } => build_aklt(len, include_three_local),
            ModelSpec::Dw { len, delta, j, experimental_boundary } => {
                build_dw(len, delta, j, experimental_boundary)
            }
        }
    }
}

/// One dissipative channel `L = V P` placed on `sites`.
#[derive(Clone, Debug)]
pub struct Jump {
    pub label: String,
    pub sites: Vec<usize>,
    /// The few-site operator before placement on the chain.
    pub local: OperatorMatrix,
    pub operator: SparseOperator,
    pub rate: f64,
}

#[derive(Clone, Debug)]
pub struct LiouvillianModel {
    pub spec: ModelSpec,
    pub chain: ChainSpec,
    pub hamiltonian: SparseOperator,
    pub jumps: Vec<Jump>,
    /// Bare projectors `P_j` behind the jumps, used by the jump rate.
    pub projectors: Vec<SparseOperator>,
    /// `Q^†`
    pub ladder: SparseOperator,
    /// `|S_0>`, unit norm.
    pub reference: Vec<C64>,
    pub omega: f64,
    /// `J_{μν}` of the toy model, rows and columns ordered x, y, z.
    pub toy_couplings: Option<[[f64; 3]; 3]>,
}

impl LiouvillianModel {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    pub fn hilbert_dim(&self) -> usize {
        self.chain.hilbert_dim()
    }

    pub fn set_uniform_rate(&mut self, rate: f64) -> Result<()> {
        if !(rate >= 0.0) {
            return Err(Error::InvalidModel(format!("rate {rate} must be non-negative")));
        }
        self.jumps.iter_mut().for_each(|j| j.rate = rate);
        Ok(())
    }

    pub fn set_rate(&mut self, index: usize, rate: f64) -> Result<()> {
        if !(rate >= 0.0) {
            return Err(Error::InvalidModel(format!("rate {rate} must be non-negative")));
        }
        let n = self.jumps.len();
        let jump = self
            .jumps
            .get_mut(index)
            .ok_or_else(|| Error::InvalidModel(format!("jump index {index} out of range ({n} jumps)")))?;
        jump.rate = rate;
        Ok(())
    }

    pub fn max_rate(&self) -> f64 {
        self.jumps.iter().map(|j| j.rate).fold(0.0, f64::max)
    }

    /// `H_eff = H - i Σ_j γ_j L_j^† L_j`
    pub fn effective_hamiltonian(&self) -> Result<SparseOperator> {
        let mut terms = vec![(C64::new(1.0, 0.0), self.hamiltonian.clone())];
        for j in &self.jumps {
            if j.rate != 0.0 {
                terms.push((C64::new(0.0, -j.rate), j.operator.dagger().matmul(&j.operator)?));
            }
        }
        SparseOperator::linear_combination(self.hilbert_dim(), terms.iter().map(|(c, op)| (*c, op)))
    }

    /// `Q^† + Q`
    pub fn ladder_x(&self) -> SparseOperator {
        self.ladder.add(&self.ladder.dagger()).expect("same dimension")
    }

    /// Total `S^z`: `Σ σ^z_j / 2` for spin-1/2, `Σ S^z_j` for spin-1.
    pub fn total_sz(&self) -> Result<SparseOperator> {
        let (op, coeff) = match self.chain.local_dim {
            2 => (spin_half(Axis::Z), 0.5),
            _ => (spin_one(Axis::Z), 1.0),
        };
        let mut sum = OperatorSum::new(self.chain);
        for s in 0..self.chain.len {
            sum.add_real(coeff, &op, &[s])?;
        }
        Ok(sum.build())
    }

    /// Checks the structural invariants: Hermitian `H`, non-negative rates
    /// and a common dimension for every operator.
    pub fn validate(&self) -> Result<()> {
        let dim = self.hilbert_dim();
        self.hamiltonian.checked_dim(dim)?;
        self.ladder.checked_dim(dim)?;
        if self.reference.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: self.reference.len() });
        }
        if !self.hamiltonian.is_hermitian() {
            return Err(Error::InvalidModel("Hamiltonian is not Hermitian".into()));
        }
        for j in &self.jumps {
            j.operator.checked_dim(dim)?;
            if !(j.rate >= 0.0) {
                return Err(Error::InvalidModel(format!("jump {} has negative rate", j.label)));
            }
        }
        for p in &self.projectors {
            p.checked_dim(dim)?;
        }
        Ok(())
    }
}

/// `(-1)^j` for the physics label `j = site + 1`.
pub fn stagger(site: usize) -> f64 {
    if (site + 1) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn make_jump(label: String, local: OperatorMatrix, sites: Vec<usize>, chain: &ChainSpec) -> Result<Jump> {
    let operator = embed_sparse(&local, &sites, chain)?;
    Ok(Jump { label, sites, local, operator, rate: 1.0 })
}

fn require_even(len: usize, name: &str) -> Result<()> {
    if len < 4 || len % 2 != 0 {
        return Err(Error::InvalidModel(format!("{name} model needs an even chain length >= 4, got {len}")));
    }
    Ok(())
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Seeded `J_{μν}` uniform on `[-1, 1]`.
pub fn toy_couplings(seed: u64) -> [[f64; 3]; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut j = [[0.0; 3]; 3];
    for row in j.iter_mut() {
        for x in row.iter_mut() {
            *x = rng.random_range(-1.0..=1.0);
        }
    }
    j
}

/// Toy model hosting the `x`-direction Dicke states:
/// `H = (Ω/2) Σ σ^x_j + Σ P_j h_j P_j` with singlet projectors `P_j` and
/// `h_j = Σ J_{μν} σ^μ_{j-1} σ^ν_{j+2}`; jumps `L_j = σ^z_j P_j`.
pub fn build_toy(len: usize, omega: f64, coupling_seed: u64) -> Result<LiouvillianModel> {
    if len < 4 {
        return Err(Error::InvalidModel(format!("toy model needs L >= 4 (h_j spans four sites), got {len}")));
    }
    let chain = ChainSpec::periodic(len, 2)?;
    let couplings = toy_couplings(coupling_seed);
    let paulis = [spin_half(Axis::X), spin_half(Axis::Y), spin_half(Axis::Z)];
    let p = local::singlet_projector();

    // P_j h_j P_j on (j-1, j, j+1, j+2); h_j commutes with P_j.
    let mut interaction = OperatorMatrix::zeros(16);
    for (mu, smu) in paulis.iter().enumerate() {
        for (nu, snu) in paulis.iter().enumerate() {
            interaction
                .add_scaled(r(couplings[mu][nu]), &smu.kron(&p).kron(snu))
                .expect("16x16");
        }
    }

    let mut h = OperatorSum::new(chain);
    for s in 0..len {
        h.add_real(omega / 2.0, &paulis[0], &[s])?;
        h.add_real(1.0, &interaction, &chain.window(s as isize - 1, 4)?)?;
    }

    let v_p = paulis[2].kron(&OperatorMatrix::identity(2)).matmul(&p)?;
    let mut jumps = Vec::with_capacity(len);
    let mut projectors = Vec::with_capacity(len);
    let mut ladder = OperatorSum::new(chain);
    let q = local::x_raising();
    for s in 0..len {
        let pair = chain.window(s as isize, 2)?;
        jumps.push(make_jump(format!("L_{}", s + 1), v_p.clone(), pair.clone(), &chain)?);
        projectors.push(embed_sparse(&p, &pair, &chain)?);
        ladder.add_real(1.0, &q, &[s])?;
    }

    let reference = product_state(&vec![local::x_minus(); len]);
    Ok(LiouvillianModel {
        spec: ModelSpec::Toy { len, omega, coupling_seed },
        chain,
        hamiltonian: h.build(),
        jumps,
        projectors,
        ladder: ladder.build(),
        reference,
        omega,
        toy_couplings: Some(couplings),
    })
}

/// Spin-1 XY model `Σ [S^x S^x + S^y S^y + h S^z + D (S^z)^2]` with jumps
/// `L_j = S^x_j (S^x_j S^x_{j+1} + S^y_j S^y_{j+1})`.
pub fn build_xy(len: usize, h: f64, d: f64) -> Result<LiouvillianModel> {
    require_even(len, "XY")?;
    let chain = ChainSpec::periodic(len, 3)?;
    let hop = local::xy_hopping();
    let sz = spin_one(Axis::Z);
    let sz2 = sz.matmul(&sz)?;
    let onsite = sz.scale_real(h).add(&sz2.scale_real(d))?;
    let sx_hop = spin_one(Axis::X).kron(&OperatorMatrix::identity(3)).matmul(&hop)?;
    let p = local::xy_scar_projector();
    let plus = spin_one(Axis::Plus);
    let plus2 = plus.matmul(&plus)?;

    let mut ham = OperatorSum::new(chain);
    let mut ladder = OperatorSum::new(chain);
    let mut jumps = Vec::with_capacity(len);
    let mut projectors = Vec::with_capacity(len);
    for s in 0..len {
        let pair = chain.window(s as isize, 2)?;
        ham.add_real(1.0, &hop, &pair)?;
        ham.add_real(1.0, &onsite, &[s])?;
        ladder.add_real(stagger(s), &plus2, &[s])?;
        jumps.push(make_jump(format!("L_{}", s + 1), sx_hop.clone(), pair.clone(), &chain)?);
        projectors.push(embed_sparse(&p, &pair, &chain)?);
    }

    let reference = basis_vector(chain.hilbert_dim(), chain.index_of(&vec![spin_one_index(-1); len]));
    Ok(LiouvillianModel {
        spec: ModelSpec::Xy { len, h, d },
        chain,
        hamiltonian: ham.build(),
        jumps,
        projectors,
        ladder: ladder.build(),
        reference,
        omega: 2.0 * h,
        toy_couplings: None,
    })
}

/// AKLT chain `Σ T^{S=2}_{j,j+1}`. Two-site jumps `V_j (T^{2,-2}+T^{2,-1}+T^{2,0})`
/// and, when requested, three-site jumps `V'_j |T'><T'|_{j-1,j,j+1}`, both
/// dressed with the on-site spin flip on site `j`.
pub fn build_aklt(len: usize, include_three_local: bool) -> Result<LiouvillianModel> {
    require_even(len, "AKLT")?;
    let chain = ChainSpec::periodic(len, 3)?;
    let bond = local::aklt_bond();
    let p = local::aklt_scar_projector();
    let flip = local::spin_one_flip();
    let id = OperatorMatrix::identity(3);
    let v_p = flip.kron(&id).matmul(&p)?;
    let t_prime = local::aklt_t_prime_projector();
    let v_t = id.kron(&flip).kron(&id).matmul(&t_prime)?;
    let plus = spin_one(Axis::Plus);
    let plus2 = plus.matmul(&plus)?;

    let mut ham = OperatorSum::new(chain);
    let mut ladder = OperatorSum::new(chain);
    let mut jumps = Vec::new();
    let mut projectors = Vec::new();
    for s in 0..len {
        let pair = chain.window(s as isize, 2)?;
        ham.add_real(1.0, &bond, &pair)?;
        ladder.add_real(stagger(s), &plus2, &[s])?;
        jumps.push(make_jump(format!("L_{}", s + 1), v_p.clone(), pair.clone(), &chain)?);
        projectors.push(embed_sparse(&p, &pair, &chain)?);
    }
    if include_three_local {
        for s in 0..len {
            let triple = chain.window(s as isize - 1, 3)?;
            jumps.push(make_jump(format!("L'_{}", s + 1), v_t.clone(), triple.clone(), &chain)?);
            projectors.push(embed_sparse(&t_prime, &triple, &chain)?);
        }
    }

    let mut reference = MpsFamily::aklt().state(C64::new(0.0, 0.0), len)?;
    normalize(&mut reference);
    Ok(LiouvillianModel {
        spec: ModelSpec::Aklt { len, include_three_local },
        chain,
        hamiltonian: ham.build(),
        jumps,
        projectors,
        ladder: ladder.build(),
        reference,
        omega: 2.0,
        toy_couplings: None,
    })
}

/// Domain-wall preserving model
/// `Σ (σ^x_j - σ^z_{j-1} σ^x_j σ^z_{j+1}) + Δ Σ σ^z_j + J Σ σ^z_j σ^z_{j+1}`
/// with blockade jumps `L_j = σ^-_j σ^-_{j+1}`.
///
/// With `experimental_boundary` the chain is open: the three-site kinetic
/// term and the ladder run over the interior sites only, the end sites get
/// single-site jumps `σ^-`, and interior pairs keep `σ^- σ^-`.
pub fn build_dw(len: usize, delta: f64, j: f64, experimental_boundary: bool) -> Result<LiouvillianModel> {
    require_even(len, "domain-wall")?;
    let chain = if experimental_boundary { ChainSpec::open(len, 2)? } else { ChainSpec::periodic(len, 2)? };
    let (x, z) = (spin_half(Axis::X), spin_half(Axis::Z));
    let id = OperatorMatrix::identity(2);
    let kinetic = id.kron(&x).kron(&id).sub(&z.kron(&x).kron(&z))?;
    let zz = z.kron(&z);
    let minus = spin_half(Axis::Minus);
    let minus_pair = minus.kron(&minus);
    let p0 = local::down_projector();
    let ladder_local = p0.kron(&spin_half(Axis::Plus)).kron(&p0);

    let centers: Vec<usize> = match chain.boundary {
        Boundary::Periodic => (0..len).collect(),
        Boundary::Open => (1..len - 1).collect(),
    };
    let mut ham = OperatorSum::new(chain);
    let mut ladder = OperatorSum::new(chain);
    for &s in &centers {
        let triple = chain.window(s as isize - 1, 3)?;
        ham.add_real(1.0, &kinetic, &triple)?;
        ladder.add_real(stagger(s), &ladder_local, &triple)?;
    }
    for s in 0..len {
        ham.add_real(delta, &z, &[s])?;
    }
    for s in chain.window_starts(2) {
        ham.add_real(j, &zz, &chain.window(s as isize, 2)?)?;
    }

    let mut jumps = Vec::new();
    let mut projectors = Vec::new();
    match chain.boundary {
        Boundary::Periodic => {
            for s in 0..len {
                let pair = chain.window(s as isize, 2)?;
                jumps.push(make_jump(format!("L_{}", s + 1), minus_pair.clone(), pair.clone(), &chain)?);
                projectors.push(embed_sparse(&local::up_up_projector(), &pair, &chain)?);
            }
        }
        Boundary::Open => {
            jumps.push(make_jump("L_1".into(), minus.clone(), vec![0], &chain)?);
            projectors.push(embed_sparse(&local::up_projector(), &[0], &chain)?);
            for s in 1..len - 1 {
                let pair = vec![s, s + 1];
                jumps.push(make_jump(format!("L_{}", s + 1), minus_pair.clone(), pair.clone(), &chain)?);
                projectors.push(embed_sparse(&local::up_up_projector(), &pair, &chain)?);
            }
            jumps.push(make_jump(format!("L_{len}"), minus.clone(), vec![len - 1], &chain)?);
            projectors.push(embed_sparse(&local::up_projector(), &[len - 1], &chain)?);
        }
    }

    let reference = basis_vector(chain.hilbert_dim(), chain.index_of(&vec![DOWN; len]));
    Ok(LiouvillianModel {
        spec: ModelSpec::Dw { len, delta, j, experimental_boundary },
        chain,
        hamiltonian: ham.build(),
        jumps,
        projectors,
        ladder: ladder.build(),
        reference,
        omega: 2.0 * delta - 4.0 * j,
        toy_couplings: None,
    })
}

/// A catalogued decoherence-free partner outside the ladder tower.
#[derive(Clone, Debug)]
pub struct ExtraState {
    pub label: String,
    pub vector: Vec<C64>,
    pub energy: f64,
}

#[derive(Clone, Debug)]
pub struct ScarTower {
    /// `|S_n>`, orthonormal.
    pub states: Vec<Vec<C64>>,
    pub energies: Vec<f64>,
    /// Orthonormal to the tower and to each other.
    pub extra_states: Vec<ExtraState>,
}

impl ScarTower {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Tower states followed by the extra states, with energies.
    pub fn dfs_basis(&self) -> Vec<(&[C64], f64)> {
        self.states
            .iter()
            .zip(&self.energies)
            .map(|(v, &e)| (v.as_slice(), e))
            .chain(self.extra_states.iter().map(|x| (x.vector.as_slice(), x.energy)))
            .collect()
    }

    pub fn dfs_dim(&self) -> usize {
        self.states.len() + self.extra_states.len()
    }

    /// `Tr[Π_W ρ]` over the full catalogued basis, `ρ` row-major.
    pub fn overlap_with_density(&self, rho: &[C64]) -> f64 {
        let n = self.states.first().map_or(0, |s| s.len());
        assert_eq!(rho.len(), n * n);
        let mut total = 0.0;
        for (v, _) in self.dfs_basis() {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                let row = &rho[i * n..(i + 1) * n];
                let rv: C64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
                acc += v[i].conj() * rv;
            }
            total += acc.re;
        }
        total
    }

    /// `Σ |<S|psi>|^2` over the full catalogued basis.
    pub fn overlap_with_state(&self, psi: &[C64]) -> f64 {
        self.dfs_basis().iter().map(|(v, _)| inner(v, psi).norm_sqr()).sum()
    }
}

fn rayleigh(h: &SparseOperator, v: &[C64]) -> f64 {
    h.expectation(v).re
}

fn eigen_residual(h: &SparseOperator, v: &[C64], e: f64) -> f64 {
    let hv = h.apply(v).expect("dimension checked");
    hv.iter().zip(v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt()
}

/// Builds `|S_n> ∝ (Q^†)^n |S_0>` until the ladder annihilates the last
/// state, then appends the model's catalogued extra DFS states.
pub fn scar_tower(model: &LiouvillianModel) -> Result<ScarTower> {
    let dim = model.hilbert_dim();
    let mut current = model.reference.clone();
    normalize(&mut current);
    let mut states: Vec<Vec<C64>> = Vec::new();
    loop {
        states.push(current.clone());
        if states.len() > dim {
            return Err(Error::TowerResidual("ladder never terminates".into()));
        }
        let mut next = model.ladder.apply(&current)?;
        project_out(&mut next, &states);
        if normalize(&mut next) < TOWER_NORM_CUTOFF {
            break;
        }
        current = next;
    }
    let energies: Vec<f64> = states.iter().map(|v| rayleigh(&model.hamiltonian, v)).collect();
    for (n, (v, &e)) in states.iter().zip(&energies).enumerate() {
        let res = eigen_residual(&model.hamiltonian, v, e);
        if res > TOWER_RESIDUAL_TOL {
            return Err(Error::TowerResidual(format!("|S_{n}> has eigen-residual {res:.3e}")));
        }
    }

    let mut extra_states = Vec::new();
    let mut basis = states.clone();
    for (label, mut v) in catalogued_extras(model)? {
        project_out(&mut v, &basis);
        project_out(&mut v, &basis);
        if normalize(&mut v) < 1e-10 {
            continue;
        }
        let energy = rayleigh(&model.hamiltonian, &v);
        let res = eigen_residual(&model.hamiltonian, &v, energy);
        if res > TOWER_RESIDUAL_TOL {
            return Err(Error::TowerResidual(format!("extra state {label} has eigen-residual {res:.3e}")));
        }
        basis.push(v.clone());
        extra_states.push(ExtraState { label, vector: v, energy });
    }
    Ok(ScarTower { states, energies, extra_states })
}

fn catalogued_extras(model: &LiouvillianModel) -> Result<Vec<(String, Vec<C64>)>> {
    let chain = model.chain;
    let len = chain.len;
    let mut out = Vec::new();
    match model.spec {
        ModelSpec::Dw { experimental_boundary: false, .. } => {
            let neel_a: Vec<usize> = (0..len).map(|s| if s % 2 == 0 { UP } else { DOWN }).collect();
            let neel_b: Vec<usize> = (0..len).map(|s| if s % 2 == 0 { DOWN } else { UP }).collect();
            let sign = if (len / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let mut v = vec![C64::new(0.0, 0.0); chain.hilbert_dim()];
            v[chain.index_of(&neel_a)] += r(1.0);
            v[chain.index_of(&neel_b)] -= r(sign);
            out.push(("neel_cat".to_string(), v));
        }
        ModelSpec::Aklt { include_three_local, .. } => {
            let (s1, s2) = aklt::sprime_states(len)?;
            out.push((s1.label.clone(), s1.vector));
            if let Some(s2) = s2 {
                out.push((s2.label.clone(), s2.vector));
            }
            let momenta: Vec<usize> = if include_three_local {
                if len % 4 == 0 {
                    vec![len / 4, 3 * len / 4]
                } else {
                    Vec::new()
                }
            } else {
                (0..len).collect()
            };
            for l in momenta {
                let m = aklt::magnon_state(len, l)?;
                out.push((m.label, m.vector));
            }
        }
        _ => {}
    }
    Ok(out)
}

/// Residuals of the decoherence-free structure of a model and its tower.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub tower_size: usize,
    pub extra_states: usize,
    /// `max ||H|S> - E|S>||` over tower and extra states.
    pub eigen_residual: f64,
    /// `max ||L_j|S>||` over all jumps, tower and extra states.
    pub jump_residual: f64,
    /// `max |E_{n+1} - E_n - ω|` over the tower.
    pub spacing_error: f64,
    /// `max ||([H, Q^†] - ω Q^†)|S_n>||` over the tower.
    pub algebra_residual: f64,
    /// `max |<S_a|S_b> - δ_ab|` over the full basis.
    pub orthonormality_error: f64,
}

impl ModelReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.eigen_residual,
            self.jump_residual,
            self.spacing_error,
            self.algebra_residual,
            self.orthonormality_error,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() < tol
    }
}

pub fn verify_model(model: &LiouvillianModel, tower: &ScarTower) -> Result<ModelReport> {
    let basis = tower.dfs_basis();
    let mut eigen_residual = 0.0_f64;
    let mut jump_residual = 0.0_f64;
    for (v, _) in &basis {
        let e = rayleigh(&model.hamiltonian, v);
        eigen_residual = eigen_residual.max(eigen_residual_of(model, v, e)?);
        for jump in &model.jumps {
            jump_residual = jump_residual.max(norm(&jump.operator.apply(v)?));
        }
    }
    let mut spacing_error = 0.0_f64;
    for w in tower.states.windows(2) {
        let gap = rayleigh(&model.hamiltonian, &w[1]) - rayleigh(&model.hamiltonian, &w[0]);
        spacing_error = spacing_error.max((gap - model.omega).abs());
    }
    let mut algebra_residual = 0.0_f64;
    for v in &tower.states {
        let qv = model.ladder.apply(v)?;
        let hqv = model.hamiltonian.apply(&qv)?;
        let hv = model.hamiltonian.apply(v)?;
        let qhv = model.ladder.apply(&hv)?;
        let res: f64 = (0..v.len())
            .map(|i| (hqv[i] - qhv[i] - qv[i] * model.omega).norm_sqr())
            .sum::<f64>()
            .sqrt();
        algebra_residual = algebra_residual.max(res);
    }
    let mut orthonormality_error = 0.0_f64;
    for (a, (va, _)) in basis.iter().enumerate() {
        for (b, (vb, _)) in basis.iter().enumerate() {
            let target = if a == b { 1.0 } else { 0.0 };
            orthonormality_error = orthonormality_error.max((inner(va, vb) - r(target)).norm());
        }
    }
    Ok(ModelReport {
        tower_size: tower.states.len(),
        extra_states: tower.extra_states.len(),
        eigen_residual,
        jump_residual,
        spacing_error,
        algebra_residual,
        orthonormality_error,
    })
}

fn eigen_residual_of(model: &LiouvillianModel, v: &[C64], e: f64) -> Result<f64> {
    model.hamiltonian.checked_dim(v.len())?;
    Ok(eigen_residual(&model.hamiltonian, v, e))
}

#[cfg(test)]
mod tests;
