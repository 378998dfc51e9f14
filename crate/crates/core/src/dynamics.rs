//! Lindblad time evolution of density matrices and the observables read
//! off along the way.
//!
//! The generator is applied matrix-wise; no superoperator is formed, so
//! spin-1 chains of six sites and spin-1/2 chains of eight are cheap.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chain::embed_sparse;
use crate::error::{Error, Result};
use crate::linalg::{min_hermitian_eigenvalue, unitary_propagator};
use crate::liouvillian::{HermitianScratch, LindbladGenerator};
use crate::models::{scar_tower, stagger, LiouvillianModel, ModelKind, ScarTower};
use crate::operator::{basis_vector, inner, norm, normalize, product_state, OperatorMatrix};
use crate::projectors::MpsFamily;
use crate::sparse::SparseOperator;
use crate::spin::{spin_half, spin_op, Axis, DOWN, UP};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Trace drift that aborts a run.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-8;
/// Most negative density-matrix eigenvalue tolerated during a run.
pub const NEGATIVITY_LIMIT: f64 = -1e-8;
/// Largest change of any observable accepted between a step and its half.
pub const CONVERGENCE_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// initial states

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XyMixing {
    /// `|ψ0><ψ0|`
    Pure,
    /// `|ψ0><ψ0| + I / 2^L`, rescaled to unit trace.
    Literal,
    /// `(|ψ0><ψ0| + I / 3^L) / 2`
    #[default]
    TraceCorrected,
}

fn default_theta() -> f64 {
    PI / 3.0
}

fn full_turn() -> f64 {
    PI
}

fn fifth_turn() -> f64 {
    0.2 * PI
}

fn unit_beta() -> f64 {
    1.0
}

/// Recipe for an initial state; random draws use the run seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Every site rotated by `exp(-iθ S^y)` from its top state.
    TiltedProduct {
        #[serde(default = "default_theta")]
        theta: f64,
    },
    /// As `TiltedProduct` with independent `θ_j` uniform in `[0, theta_max]`.
    RandomProduct {
        #[serde(default = "full_turn")]
        theta_max: f64,
    },
    /// `GG^† / Tr[GG^†]` for a complex Ginibre matrix `G`.
    RandomDensity,
    /// Spin-1 product `⊗ (|1> - (-1)^j |-1>) / sqrt 2`, optionally mixed
    /// with the identity.
    XyProduct {
        #[serde(default)]
        mixing: XyMixing,
    },
    /// `exp(iΣθ_j S^x_j)` applied to the AKLT compressed state at `beta`.
    AkltCompressed {
        #[serde(default = "unit_beta")]
        beta: f64,
        #[serde(default = "fifth_turn")]
        theta_max: f64,
    },
    /// `exp(iΣθ_j σ^x_j) Π_j (1 + (-1)^j P0 σ^+_j P0) |↓...↓>`.
    DwMpsPerturbed {
        #[serde(default = "fifth_turn")]
        theta_max: f64,
    },
    /// `|↑...↑↓...↓>` with the left half up.
    DwDomainwall,
    /// Uniform superposition of the basis states every projector kills,
    /// with the catalogued DFS projected out.
    DwBlockadeUniform,
    /// `|↑↑↓↓↑↑↓↓...>`
    DwPairs,
    TowerMember {
        n: usize,
    },
    CustomVector {
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
    },
}

impl InitialSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::TiltedProduct { .. } => "tilted_product",
            Self::RandomProduct { .. } => "random_product",
            Self::RandomDensity => "random_density",
            Self::XyProduct { .. } => "xy_product",
            Self::AkltCompressed { .. } => "aklt_compressed",
            Self::DwMpsPerturbed { .. } => "dw_mps_perturbed",
            Self::DwDomainwall => "dw_domainwall",
            Self::DwBlockadeUniform => "dw_blockade_uniform",
            Self::DwPairs => "dw_pairs",
            Self::TowerMember { .. } => "tower_member",
            Self::CustomVector { .. } => "custom_vector",
        }
    }

    /// Default-parameter recipe for a kind name.
    pub fn from_kind(kind: &str) -> Result<Self> {
        let spec = match kind {
            "tilted_product" => Self::TiltedProduct { theta: default_theta() },
            "random_product" => Self::RandomProduct { theta_max: full_turn() },
            "random_density" => Self::RandomDensity,
            "xy_product" => Self::XyProduct { mixing: XyMixing::default() },
            "aklt_compressed" => Self::AkltCompressed { beta: unit_beta(), theta_max: fifth_turn() },
            "dw_mps_perturbed" => Self::DwMpsPerturbed { theta_max: fifth_turn() },
            "dw_domainwall" => Self::DwDomainwall,
            "dw_blockade_uniform" => Self::DwBlockadeUniform,
            "dw_pairs" => Self::DwPairs,
            "tower_member" => Self::TowerMember { n: 0 },
            "custom_vector" => {
                return Err(Error::InitialState("custom_vector needs amplitudes; use a config file".into()))
            }
            other => return Err(Error::InitialState(format!("unknown initial state kind `{other}`"))),
        };
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StatePayload {
    Pure(Vec<C64>),
    Mixed(OperatorMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialState {
    pub payload: StatePayload,
    pub description: String,
}

impl InitialState {
    pub fn pure(mut psi: Vec<C64>, description: impl Into<String>) -> Result<Self> {
        if normalize(&mut psi) < 1e-14 {
            return Err(Error::InitialState("state vector has zero norm".into()));
        }
        Ok(Self { payload: StatePayload::Pure(psi), description: description.into() })
    }

    pub fn mixed(rho: OperatorMatrix, description: impl Into<String>) -> Result<Self> {
        let out = Self { payload: StatePayload::Mixed(rho), description: description.into() };
        out.validate()?;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        match &self.payload {
            StatePayload::Pure(v) => v.len(),
            StatePayload::Mixed(m) => m.dim(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.payload, StatePayload::Pure(_))
    }

    pub fn vector(&self) -> Option<&[C64]> {
        match &self.payload {
            StatePayload::Pure(v) => Some(v),
            StatePayload::Mixed(_) => None,
        }
    }

    pub fn density(&self) -> OperatorMatrix {
        match &self.payload {
            StatePayload::Pure(v) => OperatorMatrix::projector(v),
            StatePayload::Mixed(m) => m.clone(),
        }
    }

    /// Hermitian, unit trace to 1e-12, smallest eigenvalue above -1e-10.
    pub fn validate(&self) -> Result<()> {
        match &self.payload {
            StatePayload::Pure(v) => {
                if (norm(v) - 1.0).abs() > 1e-12 {
                    return Err(Error::InitialState("state vector is not normalized".into()));
                }
            }
            StatePayload::Mixed(rho) => {
                if rho.hermiticity_defect() > 1e-12 {
                    return Err(Error::InitialState("density matrix is not Hermitian".into()));
                }
                if (rho.trace().re - 1.0).abs() > 1e-12 {
                    return Err(Error::InitialState(format!("trace {} differs from one", rho.trace().re)));
                }
                let low = min_hermitian_eigenvalue(rho)?;
                if low < -1e-10 {
                    return Err(Error::InitialState(format!("density matrix has eigenvalue {low:e}")));
                }
            }
        }
        Ok(())
    }
}

fn require_kind(model: &LiouvillianModel, kinds: &[ModelKind], what: &str) -> Result<()> {
    if kinds.contains(&model.kind()) {
        Ok(())
    } else {
        Err(Error::InitialState(format!("{what} is not defined for the {} model", model.kind())))
    }
}

fn random_angles(len: usize, theta_max: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| theta_max * rng.random::<f64>()).collect()
}

/// `⊗_j exp(iθ_j S^x_j)` applied to `psi`; Pauli `σ^x` for spin-1/2.
fn rotate_about_x(model: &LiouvillianModel, psi: &[C64], angles: &[f64]) -> Result<Vec<C64>> {
    let chain = &model.chain;
    let generator = match chain.local_dim {
        2 => spin_half(Axis::X),
        d => spin_op(d, Axis::X),
    };
    let mut out = psi.to_vec();
    for (site, &theta) in angles.iter().enumerate() {
        let gate = unitary_propagator(&generator, -theta)?;
        out = embed_sparse(&gate, &[site], chain)?.apply(&out)?;
    }
    Ok(out)
}

fn tilted(model: &LiouvillianModel, angles: &[f64]) -> Result<Vec<C64>> {
    let d = model.chain.local_dim;
    let sy = spin_op(d, Axis::Y).scale_real(if d == 2 { 0.5 } else { 1.0 });
    let top = basis_vector(d, 0);
    let sites = angles
        .iter()
        .map(|&theta| unitary_propagator(&sy, theta)?.apply(&top))
        .collect::<Result<Vec<_>>>()?;
    Ok(product_state(&sites))
}

fn spin_half_pattern(model: &LiouvillianModel, up: impl Fn(usize) -> bool) -> Vec<C64> {
    let chain = &model.chain;
    let digits: Vec<usize> = (0..chain.len).map(|s| if up(s) { UP } else { DOWN }).collect();
    basis_vector(chain.hilbert_dim(), chain.index_of(&digits))
}

/// Builds the initial state described by `spec`; `seed` drives every random
/// draw.
pub fn make_initial(model: &LiouvillianModel, spec: &InitialSpec, seed: u64) -> Result<InitialState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = model.chain.len;
    let dim = model.hilbert_dim();
    let label = spec.name();
    match spec {
        InitialSpec::TiltedProduct { theta } => {
            InitialState::pure(tilted(model, &vec![*theta; len])?, format!("{label} theta={theta}"))
        }
        InitialSpec::RandomProduct { theta_max } => {
            let angles = random_angles(len, *theta_max, &mut rng);
            InitialState::pure(tilted(model, &angles)?, format!("{label} theta_max={theta_max} seed={seed}"))
        }
        InitialSpec::RandomDensity => {
            let g = OperatorMatrix::from_fn(dim, |_, _| {
                C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
            });
            let gg = g.matmul(&g.dagger())?;
            let mut rho = gg.scale_real(1.0 / gg.trace().re);
            symmetrize(&mut rho);
            InitialState::mixed(rho, format!("{label} seed={seed}"))
        }
        InitialSpec::XyProduct { mixing } => {
            if model.chain.local_dim != 3 {
                return Err(Error::InitialState("xy_product needs a spin-1 chain".into()));
            }
            let sites: Vec<Vec<C64>> = (0..len)
                .map(|s| {
                    let mut v = vec![ZERO; 3];
                    v[0] = C64::new(1.0, 0.0);
                    v[2] = C64::new(-stagger(s), 0.0);
                    normalize(&mut v);
                    v
                })
                .collect();
            let psi = product_state(&sites);
            let desc = format!("{label} mixing={mixing:?}");
            let identity_weight = match mixing {
                XyMixing::Pure => return InitialState::pure(psi, desc),
                XyMixing::Literal => 1.0 / 2f64.powi(len as i32),
                XyMixing::TraceCorrected => 1.0 / dim as f64,
            };
            let mut rho = OperatorMatrix::projector(&psi);
            rho.add_scaled(C64::new(identity_weight, 0.0), &OperatorMatrix::identity(dim))?;
            let rho = rho.scale_real(1.0 / rho.trace().re);
            InitialState::mixed(rho, desc)
        }
        InitialSpec::AkltCompressed { beta, theta_max } => {
            require_kind(model, &[ModelKind::Aklt], label)?;
            let mut psi = MpsFamily::aklt().state(C64::new(*beta, 0.0), len)?;
            normalize(&mut psi);
            let angles = random_angles(len, *theta_max, &mut rng);
            let psi = rotate_about_x(model, &psi, &angles)?;
            InitialState::pure(psi, format!("{label} beta={beta} theta_max={theta_max} seed={seed}"))
        }
        InitialSpec::DwMpsPerturbed { theta_max } => {
            require_kind(model, &[ModelKind::Dw], label)?;
            let chain = &model.chain;
            let p0 = crate::models::local::down_projector();
            let flip = p0.kron(&spin_half(Axis::Plus)).kron(&p0);
            let mut psi = model.reference.clone();
            let centers: Vec<usize> = match chain.boundary {
                crate::Boundary::Periodic => (0..len).collect(),
                crate::Boundary::Open => (1..len - 1).collect(),
            };
            for s in centers {
                let triple = chain.window(s as isize - 1, 3)?;
                let raised = embed_sparse(&flip, &triple, chain)?.apply(&psi)?;
                psi.iter_mut().zip(&raised).for_each(|(a, b)| *a += b * stagger(s));
            }
            let angles = random_angles(len, *theta_max, &mut rng);
            let psi = rotate_about_x(model, &psi, &angles)?;
            InitialState::pure(psi, format!("{label} theta_max={theta_max} seed={seed}"))
        }
        InitialSpec::DwDomainwall => {
            require_kind(model, &[ModelKind::Dw], label)?;
            InitialState::pure(spin_half_pattern(model, |s| s < len / 2), label)
        }
        InitialSpec::DwPairs => {
            require_kind(model, &[ModelKind::Dw], label)?;
            InitialState::pure(spin_half_pattern(model, |s| s % 4 < 2), label)
        }
        InitialSpec::DwBlockadeUniform => {
            require_kind(model, &[ModelKind::Dw], label)?;
            let mut psi = vec![ZERO; dim];
            for (i, z) in psi.iter_mut().enumerate() {
                if model.projectors.iter().all(|p| p.get(i, i).norm() == 0.0) {
                    *z = C64::new(1.0, 0.0);
                }
            }
            let tower = scar_tower(model)?;
            let basis: Vec<Vec<C64>> = tower.dfs_basis().iter().map(|(v, _)| v.to_vec()).collect();
            crate::operator::project_out(&mut psi, &basis);
            InitialState::pure(psi, label)
        }
        InitialSpec::TowerMember { n } => {
            let tower = scar_tower(model)?;
            let state = tower
                .states
                .get(*n)
                .ok_or_else(|| Error::InitialState(format!("tower has {} states, asked for {n}", tower.len())))?;
            InitialState::pure(state.clone(), format!("{label} n={n}"))
        }
        InitialSpec::CustomVector { re, im } => {
            if re.len() != dim || !(im.is_empty() || im.len() == dim) {
                return Err(Error::DimensionMismatch { expected: dim, found: re.len() });
            }
            let psi = (0..dim).map(|i| C64::new(re[i], im.get(i).copied().unwrap_or(0.0))).collect();
            InitialState::pure(psi, label)
        }
    }
}

fn symmetrize(rho: &mut OperatorMatrix) {
    let n = rho.dim();
    for i in 0..n {
        for j in i..n {
            let avg = (rho.get(i, j) + rho.get(j, i).conj()) * 0.5;
            rho.set(i, j, avg);
            rho.set(j, i, avg.conj());
        }
    }
}

// ---------------------------------------------------------------------------
// observables

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `Σ σ^z_j / 2` or `Σ S^z_j`
    TotalSz,
    /// `Σ (S^x_j)^2 / L`
    Sx2Density,
    /// `Tr[ρ(t) ρ(0)]`
    Loschmidt,
    /// `Tr[ρ(t) ρ(0)] / Tr[ρ(0)^2]`
    LoschmidtNormalized,
    /// `Tr[Σ_j P_j ρ] / L`
    JumpRate,
    /// `Tr[Π_W ρ]` over the catalogued DFS basis.
    ScarOverlap,
    /// `<Q^† + Q>`
    LadderX,
}

impl Observable {
    pub const ALL: [Observable; 7] = [
        Self::TotalSz,
        Self::Sx2Density,
        Self::Loschmidt,
        Self::LoschmidtNormalized,
        Self::JumpRate,
        Self::ScarOverlap,
        Self::LadderX,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::TotalSz => "total_sz",
            Self::Sx2Density => "sx2_density",
            Self::Loschmidt => "loschmidt",
            Self::LoschmidtNormalized => "loschmidt_normalized",
            Self::JumpRate => "jump_rate",
            Self::ScarOverlap => "scar_overlap",
            Self::LadderX => "ladder_x",
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown observable `{s}`")))
    }
}

/// `Tr[ρ σ]` for row-major `ρ`, `σ`.
pub fn trace_product(a: &[C64], b: &[C64], n: usize) -> C64 {
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[i * n + j] * b[j * n + i];
        }
    }
    acc
}

/// `Tr[ρ(t) ρ(0)]`, divided by `Tr[ρ(0)^2]` when `normalized`.
pub fn loschmidt_echo(rho_t: &OperatorMatrix, rho_0: &OperatorMatrix, normalized: bool) -> Result<f64> {
    let n = rho_0.dim();
    if rho_t.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho_t.dim() });
    }
    let echo = trace_product(rho_t.as_slice(), rho_0.as_slice(), n).re;
    Ok(if normalized { echo / trace_product(rho_0.as_slice(), rho_0.as_slice(), n).re } else { echo })
}

/// `Σ (S^x_j)^2 / L`
pub fn sx2_density_operator(model: &LiouvillianModel) -> Result<SparseOperator> {
    let d = model.chain.local_dim;
    let sx = spin_op(d, Axis::X).scale_real(if d == 2 { 0.5 } else { 1.0 });
    let sq = sx.matmul(&sx)?;
    let len = model.chain.len;
    let mut sum = crate::chain::OperatorSum::new(model.chain);
    for s in 0..len {
        sum.add_real(1.0 / len as f64, &sq, &[s])?;
    }
    Ok(sum.build())
}

/// `Σ_j P_j / L`
pub fn jump_rate_operator(model: &LiouvillianModel) -> Result<SparseOperator> {
    let n = model.hilbert_dim();
    let w = C64::new(1.0 / model.chain.len as f64, 0.0);
    SparseOperator::linear_combination(n, model.projectors.iter().map(|p| (w, p)))
}

enum Probe {
    Operator(SparseOperator),
    Echo { reference: OperatorMatrix, purity: Option<f64>, pure: Option<Vec<C64>> },
    Overlap(ScarTower),
}

/// Observables prepared once for a model and reference state, evaluated on
/// density matrices or state vectors.
pub struct ObservableSet {
    names: Vec<Observable>,
    probes: Vec<Probe>,
    dim: usize,
}

impl ObservableSet {
    pub fn new(
        model: &LiouvillianModel,
        list: &[Observable],
        initial: &InitialState,
        tower: Option<&ScarTower>,
    ) -> Result<Self> {
        let dim = model.hilbert_dim();
        if initial.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: initial.dim() });
        }
        let mut cached_tower = tower.cloned();
        let mut probes = Vec::with_capacity(list.len());
        for obs in list {
            let probe = match obs {
                Observable::TotalSz => Probe::Operator(model.total_sz()?),
                Observable::Sx2Density => Probe::Operator(sx2_density_operator(model)?),
                Observable::JumpRate => Probe::Operator(jump_rate_operator(model)?),
                Observable::LadderX => Probe::Operator(model.ladder_x()),
                Observable::Loschmidt | Observable::LoschmidtNormalized => {
                    let reference = initial.density();
                    let purity = (*obs == Observable::LoschmidtNormalized)
                        .then(|| trace_product(reference.as_slice(), reference.as_slice(), dim).re);
                    Probe::Echo { reference, purity, pure: initial.vector().map(<[C64]>::to_vec) }
                }
                Observable::ScarOverlap => {
                    if cached_tower.is_none() {
                        cached_tower = Some(scar_tower(model)?);
                    }
                    Probe::Overlap(cached_tower.clone().expect("just built"))
                }
            };
            probes.push(probe);
        }
        Ok(Self { names: list.to_vec(), probes, dim })
    }

    pub fn names(&self) -> &[Observable] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Values on a row-major density matrix.
    pub fn on_density(&self, rho: &[C64]) -> Vec<f64> {
        let n = self.dim;
        self.probes
            .iter()
            .map(|p| match p {
                Probe::Operator(op) => op.trace_with(rho).re,
                Probe::Echo { reference, purity, pure } => {
                    let echo = match pure {
                        Some(v) => {
                            let mut acc = ZERO;
                            for i in 0..n {
                                let row: C64 = rho[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum();
                                acc += v[i].conj() * row;
                            }
                            acc.re
                        }
                        None => trace_product(rho, reference.as_slice(), n).re,
                    };
                    purity.map_or(echo, |p| echo / p)
                }
                Probe::Overlap(tower) => tower.overlap_with_density(rho),
            })
            .collect()
    }

    /// Values on a unit state vector.
    pub fn on_state(&self, psi: &[C64]) -> Vec<f64> {
        self.probes
            .iter()
            .map(|p| match p {
                Probe::Operator(op) => op.expectation(psi).re,
                Probe::Echo { reference, purity, pure } => {
                    let echo = match pure {
                        Some(v) => inner(v, psi).norm_sqr(),
                        None => reference.matrix_element(psi, psi).map_or(f64::NAN, |z| z.re),
                    };
                    purity.map_or(echo, |p| echo / p)
                }
                Probe::Overlap(tower) => tower.overlap_with_state(psi),
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// series

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTrace {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub traces: Vec<NamedTrace>,
    /// Present for stochastic runs only, aligned with `traces`.
    pub stderr: Option<Vec<NamedTrace>>,
    pub metadata: BTreeMap<String, String>,
}

impl ObservableSeries {
    pub fn trace(&self, name: &str) -> Option<&[f64]> {
        self.traces.iter().find(|t| t.name == name).map(|t| t.values.as_slice())
    }

    pub fn stderr_of(&self, name: &str) -> Option<&[f64]> {
        self.stderr.as_ref()?.iter().find(|t| t.name == name).map(|t| t.values.as_slice())
    }

    /// Strictly increasing times and every trace as long as the grid.
    pub fn validate(&self) -> Result<()> {
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("times are not strictly increasing".into()));
        }
        let all = self.traces.iter().chain(self.stderr.iter().flatten());
        if let Some(t) = all.into_iter().find(|t| t.values.len() != self.times.len()) {
            return Err(Error::Validation(format!("trace {} has the wrong length", t.name)));
        }
        Ok(())
    }

    /// Header `t,<obs>...` or `t,mean_<obs>,stderr_<obs>...` for stochastic
    /// runs; numbers carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        match &self.stderr {
            None => self.traces.iter().for_each(|t| {
                out.push(',');
                out.push_str(&t.name);
            }),
            Some(_) => self.traces.iter().for_each(|t| {
                out.push_str(&format!(",mean_{0},stderr_{0}", t.name));
            }),
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t:.16e}"));
            for (k, trace) in self.traces.iter().enumerate() {
                out.push_str(&format!(",{:.16e}", trace.values[i]));
                if let Some(err) = &self.stderr {
                    out.push_str(&format!(",{:.16e}", err[k].values[i]));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Relative amplitude below which a trace counts as constant.
pub const AMPLITUDE_FLOOR: f64 = 1e-9;

/// Largest `|f(t) - f(t + period)|` over sampled `t ∈ [start, start + window]`,
/// relative to the half peak-to-peak amplitude of the whole trace up to
/// `start + window + period`. A trace that relaxes to a constant is thus
/// measured against its initial swing; a trace that never moves is measured
/// against `AMPLITUDE_FLOOR * max|f|`.
pub fn recurrence_defect(times: &[f64], values: &[f64], start: f64, window: f64, period: f64) -> Result<f64> {
    let dt = match times {
        [a, b, ..] => b - a,
        _ => return Err(Error::Validation("need at least two samples".into())),
    };
    let shift = (period / dt).round() as usize;
    if shift == 0 || ((shift as f64) * dt - period).abs() > 1e-9 * period.max(1.0) {
        return Err(Error::Validation(format!("period {period} is not a multiple of the sampling step {dt}")));
    }
    let eps = 1e-9 * dt;
    let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= start - eps && times[i] <= start + window + eps).collect();
    if idx.is_empty() || idx.last().unwrap() + shift >= times.len() {
        return Err(Error::Validation("series does not cover the recurrence window".into()));
    }
    let span = &values[..=idx.last().unwrap() + shift];
    let (lo, hi) = span.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let scale = lo.abs().max(hi.abs());
    let amplitude = (0.5 * (hi - lo)).max(AMPLITUDE_FLOOR * scale);
    let worst = idx.iter().map(|&i| (values[i] - values[i + shift]).abs()).fold(0.0, f64::max);
    Ok(if amplitude > 0.0 { worst / amplitude } else { worst })
}

/// Transient length after which only the DFS oscillation should remain:
/// `3/γ` toy, `5/γ` XY and AKLT, `8/γ` domain wall.
pub fn default_t_relax(kind: ModelKind, gamma: f64) -> f64 {
    let c = match kind {
        ModelKind::Toy => 3.0,
        ModelKind::Xy | ModelKind::Aklt => 5.0,
        ModelKind::Dw => 8.0,
    };
    c / gamma
}

/// Time for a mode decaying at rate `gap` to shrink by `factor`.
pub fn relaxation_time(gap: f64, factor: f64) -> Result<f64> {
    if !(gap > 0.0 && factor > 0.0 && factor < 1.0) {
        return Err(Error::Validation(format!("need gap > 0 and 0 < factor < 1, got {gap}, {factor}")));
    }
    Ok(-factor.ln() / gap)
}

// ---------------------------------------------------------------------------
// integration

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Truncated Taylor series of `exp(h𝓛)` with as many terms as needed.
    #[default]
    Taylor,
    /// Classical fourth-order Runge-Kutta.
    Rk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveOptions {
    pub t_max: f64,
    pub dt_out: f64,
    pub integrator: Integrator,
    /// Repeat with halved steps until observables move by less than
    /// [`CONVERGENCE_TOL`].
    pub check_convergence: bool,
    pub max_halvings: usize,
    /// Positivity is checked every this many outputs and at the end;
    /// `0` picks a stride from the dimension.
    pub positivity_stride: usize,
    /// Keep `ρ(t)` at every output time.
    pub keep_snapshots: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            t_max: 10.0,
            dt_out: 0.05,
            integrator: Integrator::Taylor,
            check_convergence: true,
            max_halvings: 6,
            positivity_stride: 0,
            keep_snapshots: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EvolveDiagnostics {
    pub step: f64,
    pub steps_per_output: usize,
    pub max_trace_drift: f64,
    pub max_hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    /// Largest observable change against the run with twice the step, if
    /// that comparison was made.
    pub convergence_change: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub series: ObservableSeries,
    pub snapshots: Vec<OperatorMatrix>,
    pub diagnostics: EvolveDiagnostics,
}

struct Propagator<'a> {
    generator: &'a LindbladGenerator,
    scratch: HermitianScratch,
    buffers: [Vec<C64>; 4],
}

const TAYLOR_TOL: f64 = 1e-16;
const TAYLOR_MAX_TERMS: usize = 80;

impl<'a> Propagator<'a> {
    fn new(generator: &'a LindbladGenerator) -> Self {
        let n = generator.dim();
        Self { generator, scratch: HermitianScratch::default(), buffers: std::array::from_fn(|_| vec![ZERO; n * n]) }
    }

    fn taylor(&mut self, rho: &mut [C64], h: f64) -> Result<()> {
        let [term, next, ..] = &mut self.buffers;
        term.copy_from_slice(rho);
        let scale = frob(rho).max(f64::MIN_POSITIVE);
        for k in 1..=TAYLOR_MAX_TERMS {
            self.generator.apply_hermitian(term, next, &mut self.scratch);
            let c = h / k as f64;
            let mut size = 0.0;
            for ((r, t), x) in rho.iter_mut().zip(term.iter_mut()).zip(next.iter()) {
                *t = x * c;
                *r += *t;
                size += t.norm_sqr();
            }
            if size.sqrt() <= TAYLOR_TOL * scale {
                return Ok(());
            }
        }
        Err(Error::Validation(format!("Taylor series did not converge in {TAYLOR_MAX_TERMS} terms at h={h}")))
    }

    fn rk4(&mut self, rho: &mut [C64], h: f64) {
        let [k, stage, acc, _] = &mut self.buffers;
        acc.copy_from_slice(rho);
        let weights = [(0.5, 1.0 / 6.0), (0.5, 1.0 / 3.0), (1.0, 1.0 / 3.0), (0.0, 1.0 / 6.0)];
        stage.copy_from_slice(rho);
        for (next_frac, weight) in weights {
            self.generator.apply_hermitian(stage, k, &mut self.scratch);
            for ((a, s), (kk, r)) in acc.iter_mut().zip(stage.iter_mut()).zip(k.iter().zip(rho.iter())) {
                *a += kk * (h * weight);
                *s = r + kk * (h * next_frac);
            }
        }
        rho.copy_from_slice(acc);
    }
}

fn hermitize(rho: &mut [C64], n: usize) {
    for i in 0..n {
        rho[i * n + i].im = 0.0;
        for j in i + 1..n {
            let avg = (rho[i * n + j] + rho[j * n + i].conj()) * 0.5;
            rho[i * n + j] = avg;
            rho[j * n + i] = avg.conj();
        }
    }
}

fn frob(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn trace_of(rho: &[C64], n: usize) -> C64 {
    (0..n).map(|i| rho[i * n + i]).sum()
}

fn hermiticity_defect(rho: &[C64], n: usize) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((rho[i * n + j] - rho[j * n + i].conj()).norm());
        }
    }
    worst
}

fn output_grid(opts: &EvolveOptions) -> Result<Vec<f64>> {
    if !(opts.dt_out > 0.0) || !(opts.t_max >= 0.0) {
        return Err(Error::Config(format!("need dt_out > 0 and t_max >= 0, got {} and {}", opts.dt_out, opts.t_max)));
    }
    let steps = (opts.t_max / opts.dt_out + 1e-9).floor() as usize;
    Ok((0..=steps).map(|k| k as f64 * opts.dt_out).collect())
}

fn positivity_stride(opts: &EvolveOptions, n: usize, outputs: usize) -> usize {
    match opts.positivity_stride {
        0 if n <= 256 => 1,
        0 => (outputs / 16).max(1),
        s => s,
    }
}

fn run_fixed(
    generator: &LindbladGenerator,
    rho0: &OperatorMatrix,
    probes: &ObservableSet,
    opts: &EvolveOptions,
    sub: usize,
) -> Result<(Vec<Vec<f64>>, Vec<OperatorMatrix>, Vec<C64>, EvolveDiagnostics)> {
    let n = rho0.dim();
    let grid = output_grid(opts)?;
    let h = opts.dt_out / sub as f64;
    let stride = positivity_stride(opts, n, grid.len());
    let mut prop = Propagator::new(generator);
    let mut rho = rho0.as_slice().to_vec();
    let mut values = Vec::with_capacity(grid.len());
    let mut snapshots = Vec::new();
    let mut diag = EvolveDiagnostics { step: h, steps_per_output: sub, min_eigenvalue: f64::INFINITY, ..Default::default() };
    for (k, &t) in grid.iter().enumerate() {
        if k > 0 {
            for _ in 0..sub {
                match opts.integrator {
                    Integrator::Taylor => prop.taylor(&mut rho, h)?,
                    Integrator::Rk4 => prop.rk4(&mut rho, h),
                }
                // the fast path assumes a Hermitian input, so round-off is not allowed to accumulate
                hermitize(&mut rho, n);
            }
        }
        let drift = (trace_of(&rho, n) - 1.0).norm();
        diag.max_trace_drift = diag.max_trace_drift.max(drift);
        if drift > TRACE_DRIFT_LIMIT {
            return Err(Error::Validation(format!("trace drifted by {drift:e} at t={t}")));
        }
        diag.max_hermiticity_defect = diag.max_hermiticity_defect.max(hermiticity_defect(&rho, n));
        if k % stride == 0 || k + 1 == grid.len() {
            let mut m = OperatorMatrix::from_vec(rho.clone())?;
            symmetrize(&mut m);
            let low = min_hermitian_eigenvalue(&m)?;
            diag.min_eigenvalue = diag.min_eigenvalue.min(low);
            if low < NEGATIVITY_LIMIT {
                return Err(Error::Validation(format!("density matrix eigenvalue {low:e} at t={t}")));
            }
        }
        values.push(probes.on_density(&rho));
        if opts.keep_snapshots {
            snapshots.push(OperatorMatrix::from_vec(rho.clone())?);
        }
    }
    Ok((values, snapshots, rho, diag))
}

/// Integrates `dρ/dt = 𝓛(ρ)` from `initial` and samples `observables` every
/// `dt_out`.
pub fn evolve(
    model: &LiouvillianModel,
    initial: &InitialState,
    observables: &[Observable],
    tower: Option<&ScarTower>,
    opts: &EvolveOptions,
) -> Result<Evolution> {
    initial.validate()?;
    let probes = ObservableSet::new(model, observables, initial, tower)?;
    let generator = LindbladGenerator::new(model)?;
    let rho0 = initial.density();

    // Taylor steps sit near h·‖𝓛‖ = 10, where the largest term is ~3e3 times
    // the result; RK4 starts at 1 and relies on halving
    let target = match opts.integrator {
        Integrator::Taylor => 10.0,
        Integrator::Rk4 => 1.0,
    };
    let mut sub = ((opts.dt_out * generator.norm_bound() / target).ceil() as usize).max(1);
    let (mut values, mut snapshots, mut last, mut diag) = run_fixed(&generator, &rho0, &probes, opts, sub)?;
    if opts.check_convergence {
        let mut halvings = 0;
        loop {
            sub *= 2;
            let (fine, fine_snaps, fine_last, fine_diag) = run_fixed(&generator, &rho0, &probes, opts, sub)?;
            // the final state joins the comparison so empty observable lists still get checked
            let change = values
                .iter()
                .flatten()
                .zip(fine.iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .chain(last.iter().zip(&fine_last).map(|(a, b)| (a - b).norm()))
                .fold(0.0, f64::max);
            (values, snapshots, last, diag) = (fine, fine_snaps, fine_last, fine_diag);
            diag.convergence_change = Some(change);
            if change < CONVERGENCE_TOL {
                break;
            }
            halvings += 1;
            if halvings >= opts.max_halvings {
                return Err(Error::Validation(format!("observables still move by {change:e} after {halvings} halvings")));
            }
        }
    }

    let times = output_grid(opts)?;
    let traces = observables
        .iter()
        .enumerate()
        .map(|(k, o)| NamedTrace { name: o.name().into(), values: values.iter().map(|row| row[k]).collect() })
        .collect();
    let mut metadata = BTreeMap::new();
    metadata.insert("initial_state".into(), initial.description.clone());
    metadata.insert("integrator".into(), format!("{:?}", opts.integrator).to_lowercase());
    metadata.insert("step".into(), format!("{:e}", diag.step));
    let series = ObservableSeries { times, traces, stderr: None, metadata };
    series.validate()?;
    Ok(Evolution { series, snapshots, diagnostics: diag })
}

#[cfg(test)]
mod tests;
