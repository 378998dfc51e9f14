//! Stochastic unraveling of the Lindblad dynamics through the digital
//! ancilla protocol: a Hamiltonian step, then for each jump operator an
//! ancilla coupling followed by a projective reset of the ancilla.
//!
//! Each trajectory draws from its own ChaCha stream keyed by the master
//! seed and the trajectory index, and ensemble sums run in index order, so
//! results do not depend on how trajectories are scheduled.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::embed_sparse;
use crate::dynamics::{InitialState, NamedTrace, Observable, ObservableSeries, ObservableSet};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_function, unitary_propagator};
use crate::liouvillian::LindbladGenerator;
use crate::models::{LiouvillianModel, ScarTower};
use crate::operator::{norm, OperatorMatrix};
use crate::sparse::SparseOperator;
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Post-measurement norms below this signal a numerical failure.
pub const NORM_COLLAPSE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Exact `exp(-iH dt)`, then per jump an ancilla gate
    /// `exp(-i sqrt(dt) sqrt(2γ)(L τ^+ + L^† τ^-))` and a reset.
    #[default]
    DigitalAncilla,
    /// First-order quantum jump scheme with `1 - i H_eff dt` between jumps.
    FirstOrderJump,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub n_traj: usize,
    pub master_seed: u64,
    pub t_max: f64,
    pub observables: Vec<Observable>,
    pub protocol: Protocol,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            n_traj: 1000,
            master_seed: 0,
            t_max: 10.0,
            observables: vec![Observable::LadderX],
            protocol: Protocol::DigitalAncilla,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_traj == 0 {
            return Err(Error::Config("n_traj must be at least 1".into()));
        }
        if !(self.t_max >= 0.0) {
            return Err(Error::Config(format!("t_max must be non-negative, got {}", self.t_max)));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt + 1e-9).floor() as usize
    }
}

/// The random stream of trajectory `index`.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Ancilla gate of one jump, reduced to the system: `no_jump` acts when the
/// ancilla is found in `|↓>`, `jump` when it flipped.
#[derive(Clone, Debug)]
pub struct JumpGate {
    pub label: String,
    /// `cos(s sqrt(L^†L))`
    pub no_jump: SparseOperator,
    /// `-i L sin(s sqrt(L^†L)) / sqrt(L^†L)`
    pub jump: SparseOperator,
}

/// Gates of one digital step, precomputed once per run.
#[derive(Clone, Debug)]
pub struct DigitalGates {
    pub dt: f64,
    /// `exp(-i H dt)`
    pub unitary: OperatorMatrix,
    /// In jump order; jumps with zero rate are left out.
    pub gates: Vec<JumpGate>,
}

impl DigitalGates {
    pub fn new(model: &LiouvillianModel, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let unitary = unitary_propagator(&model.hamiltonian.to_dense(), dt)?;
        let mut gates = Vec::new();
        for j in model.jumps.iter().filter(|j| j.rate > 0.0) {
            let s = (2.0 * j.rate * dt).sqrt();
            let ldl = j.local.dagger().matmul(&j.local)?;
            let cos = hermitian_function(&ldl, |a| C64::new((s * a.max(0.0).sqrt()).cos(), 0.0))?;
            let sinc = hermitian_function(&ldl, |a| {
                let r = a.max(0.0).sqrt();
                C64::new(if r * s < 1e-8 { s } else { (s * r).sin() / r }, 0.0)
            })?;
            let flip = j.local.matmul(&sinc)?.scale(C64::new(0.0, -1.0));
            gates.push(JumpGate {
                label: j.label.clone(),
                no_jump: embed_sparse(&cos, &j.sites, &model.chain)?,
                jump: embed_sparse(&flip, &j.sites, &model.chain)?,
            });
        }
        Ok(Self { dt, unitary, gates })
    }

    /// One protocol step on a unit vector; returns the number of ancilla
    /// flips observed.
    pub fn step(&self, psi: &mut Vec<C64>, rng: &mut impl Rng) -> Result<usize> {
        *psi = self.unitary.apply(psi)?;
        let mut flips = 0;
        let mut branch = vec![ZERO; psi.len()];
        for gate in &self.gates {
            gate.jump.apply_into(psi, &mut branch);
            let p_flip = norm(&branch).powi(2);
            if rng.random::<f64>() < p_flip {
                flips += 1;
                std::mem::swap(psi, &mut branch);
            } else {
                gate.no_jump.apply_into(psi, &mut branch);
                std::mem::swap(psi, &mut branch);
            }
            renormalize(psi)?;
        }
        Ok(flips)
    }

    /// The step averaged over outcomes, applied to a row-major density
    /// matrix.
    pub fn channel(&self, rho: &[C64]) -> Result<Vec<C64>> {
        let n = self.unitary.dim();
        let rho = OperatorMatrix::from_vec(rho.to_vec())?;
        let mut current = self.unitary.matmul(&rho)?.matmul(&self.unitary.dagger())?.into_vec();
        let mut tmp = vec![ZERO; n * n];
        for gate in &self.gates {
            let mut next = vec![ZERO; n * n];
            for k in [&gate.no_jump, &gate.jump] {
                tmp.iter_mut().for_each(|z| *z = ZERO);
                k.left_mul_acc(ONE, &current, &mut tmp);
                k.right_mul_dagger_acc(ONE, &tmp, &mut next);
            }
            current = next;
        }
        Ok(current)
    }
}

fn renormalize(psi: &mut [C64]) -> Result<()> {
    let nrm = norm(psi);
    if nrm < NORM_COLLAPSE {
        return Err(Error::Validation(format!("trajectory norm collapsed to {nrm:e}")));
    }
    psi.iter_mut().for_each(|z| *z /= nrm);
    Ok(())
}

/// One digital step from scratch; prefer [`DigitalGates`] inside loops.
pub fn digital_step(psi: &[C64], model: &LiouvillianModel, dt: f64, rng: &mut impl Rng) -> Result<Vec<C64>> {
    let mut out = psi.to_vec();
    DigitalGates::new(model, dt)?.step(&mut out, rng)?;
    Ok(out)
}

/// First-order jump scheme: jump `j` with probability `2γ_j dt ||L_j ψ||^2`,
/// otherwise `ψ ∝ (1 - i H_eff dt) ψ`.
#[derive(Clone, Debug)]
pub struct FirstOrderGates {
    dt: f64,
    effective: SparseOperator,
    /// `(2γ, L)`
    jumps: Vec<(f64, SparseOperator)>,
}

impl FirstOrderGates {
    pub fn new(model: &LiouvillianModel, dt: f64) -> Result<Self> {
        Ok(Self {
            dt,
            effective: model.effective_hamiltonian()?,
            jumps: model
                .jumps
                .iter()
                .filter(|j| j.rate > 0.0)
                .map(|j| (2.0 * j.rate, j.operator.clone()))
                .collect(),
        })
    }

    pub fn step(&self, psi: &mut Vec<C64>, rng: &mut impl Rng) -> Result<usize> {
        let branches: Vec<Vec<C64>> = self.jumps.iter().map(|(_, l)| l.apply(psi)).collect::<Result<_>>()?;
        let probs: Vec<f64> = self.jumps.iter().zip(&branches).map(|((g, _), b)| g * self.dt * norm(b).powi(2)).collect();
        let total: f64 = probs.iter().sum();
        if total > 1.0 {
            return Err(Error::Validation(format!("jump probability {total} exceeds one; reduce dt")));
        }
        let mut u = rng.random::<f64>();
        if u < total {
            for (p, b) in probs.iter().zip(branches) {
                if u < *p {
                    *psi = b;
                    renormalize(psi)?;
                    return Ok(1);
                }
                u -= p;
            }
        }
        let drift = self.effective.apply(psi)?;
        let i_dt = C64::new(0.0, -self.dt);
        psi.iter_mut().zip(&drift).for_each(|(a, d)| *a += d * i_dt);
        renormalize(psi)?;
        Ok(0)
    }
}

enum Stepper {
    Digital(DigitalGates),
    FirstOrder(FirstOrderGates),
}

impl Stepper {
    fn step(&self, psi: &mut Vec<C64>, rng: &mut ChaCha8Rng) -> Result<usize> {
        match self {
            Self::Digital(g) => g.step(psi, rng),
            Self::FirstOrder(g) => g.step(psi, rng),
        }
    }
}

struct TrajectoryRecord {
    values: Vec<Vec<f64>>,
    flips: usize,
}

/// Mean and standard error of the mean per time and observable, summed in
/// trajectory order.
fn reduce(records: &[TrajectoryRecord], samples: usize, n_obs: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = records.len() as f64;
    let mut mean = vec![vec![0.0; samples]; n_obs];
    let mut err = vec![vec![0.0; samples]; n_obs];
    for k in 0..n_obs {
        for t in 0..samples {
            let m = records.iter().map(|r| r.values[t][k]).sum::<f64>() / n;
            let ss: f64 = records.iter().map(|r| (r.values[t][k] - m).powi(2)).sum();
            mean[k][t] = m;
            err[k][t] = if records.len() > 1 { (ss / (n - 1.0) / n).sqrt() } else { 0.0 };
        }
    }
    (mean, err)
}

/// Runs `config.n_traj` trajectories from the pure state `initial` and
/// returns per-time means with standard errors.
pub fn run_ensemble(
    model: &LiouvillianModel,
    initial: &InitialState,
    config: &TrajectoryConfig,
    tower: Option<&ScarTower>,
) -> Result<ObservableSeries> {
    config.validate()?;
    let psi0 = initial
        .vector()
        .ok_or_else(|| Error::InitialState("trajectories need a pure initial state".into()))?
        .to_vec();
    let probes = ObservableSet::new(model, &config.observables, initial, tower)?;
    let stepper = match config.protocol {
        Protocol::DigitalAncilla => Stepper::Digital(DigitalGates::new(model, config.dt)?),
        Protocol::FirstOrderJump => Stepper::FirstOrder(FirstOrderGates::new(model, config.dt)?),
    };
    let steps = config.steps();
    let records: Vec<TrajectoryRecord> = (0..config.n_traj as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = trajectory_rng(config.master_seed, index);
            let mut psi = psi0.clone();
            let mut values = Vec::with_capacity(steps + 1);
            values.push(probes.on_state(&psi));
            let mut flips = 0;
            for _ in 0..steps {
                flips += stepper.step(&mut psi, &mut rng)?;
                values.push(probes.on_state(&psi));
            }
            Ok(TrajectoryRecord { values, flips })
        })
        .collect::<Result<_>>()?;

    let (mean, err) = reduce(&records, steps + 1, config.observables.len());
    let named = |rows: Vec<Vec<f64>>| {
        config
            .observables
            .iter()
            .zip(rows)
            .map(|(o, values)| NamedTrace { name: o.name().into(), values })
            .collect::<Vec<_>>()
    };
    let mut metadata = BTreeMap::new();
    metadata.insert("initial_state".into(), initial.description.clone());
    metadata.insert("master_seed".into(), config.master_seed.to_string());
    metadata.insert("n_traj".into(), config.n_traj.to_string());
    metadata.insert("dt".into(), format!("{:e}", config.dt));
    metadata.insert("protocol".into(), format!("{:?}", config.protocol));
    metadata.insert("total_jumps".into(), records.iter().map(|r| r.flips).sum::<usize>().to_string());
    let series = ObservableSeries {
        times: (0..=steps).map(|k| k as f64 * config.dt).collect(),
        traces: named(mean),
        stderr: Some(named(err)),
        metadata,
    };
    series.validate()?;
    Ok(series)
}

/// Iterates the outcome-averaged digital step on a density matrix: the
/// exact ensemble limit of [`run_ensemble`].
pub fn run_channel(
    model: &LiouvillianModel,
    initial: &InitialState,
    dt: f64,
    t_max: f64,
    observables: &[Observable],
    tower: Option<&ScarTower>,
) -> Result<ObservableSeries> {
    let config = TrajectoryConfig { dt, t_max, n_traj: 1, observables: observables.to_vec(), ..Default::default() };
    config.validate()?;
    let gates = DigitalGates::new(model, dt)?;
    let probes = ObservableSet::new(model, observables, initial, tower)?;
    let mut rho = initial.density().into_vec();
    let mut rows = vec![probes.on_density(&rho)];
    for _ in 0..config.steps() {
        rho = gates.channel(&rho)?;
        rows.push(probes.on_density(&rho));
    }
    let traces = observables
        .iter()
        .enumerate()
        .map(|(k, o)| NamedTrace { name: o.name().into(), values: rows.iter().map(|r| r[k]).collect() })
        .collect();
    let mut metadata = BTreeMap::new();
    metadata.insert("initial_state".into(), initial.description.clone());
    metadata.insert("dt".into(), format!("{dt:e}"));
    Ok(ObservableSeries {
        times: (0..=config.steps()).map(|k| k as f64 * dt).collect(),
        traces,
        stderr: None,
        metadata,
    })
}

/// `||channel(ρ) - (ρ + dt 𝓛(ρ))||_F` for the outcome-averaged digital step.
pub fn kraus_step_check(model: &LiouvillianModel, rho: &OperatorMatrix, dt: f64) -> Result<f64> {
    let n = model.hilbert_dim();
    if rho.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho.dim() });
    }
    let after = DigitalGates::new(model, dt)?.channel(rho.as_slice())?;
    let mut generated = vec![ZERO; n * n];
    LindbladGenerator::new(model)?.apply(rho.as_slice(), &mut generated);
    Ok(after
        .iter()
        .zip(rho.as_slice())
        .zip(&generated)
        .map(|((a, r), g)| (a - r - g * dt).norm_sqr())
        .sum::<f64>()
        .sqrt())
}
