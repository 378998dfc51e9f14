//! Run configuration: built-in defaults, overlaid by a JSON config file,
//! overlaid by command-line flags.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use scarsim::dynamics::{default_t_relax, InitialSpec, Integrator, Observable};
use scarsim::liouvillian::{NhForm, DEFAULT_SUPEROPERATOR_CAP, DFS_TOL};
use scarsim::models::{LiouvillianModel, DEFAULT_COUPLING_SEED};
use scarsim::trajectory::Protocol;
use scarsim::{ModelKind, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every knob of every subcommand. Absent fields take the defaults listed
/// in the accessor methods.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelKind>,
    #[serde(rename = "L")]
    pub len: Option<usize>,
    pub omega: Option<f64>,
    pub coupling_seed: Option<u64>,
    pub h: Option<f64>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub include_three_local: Option<bool>,
    pub delta: Option<f64>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    pub experimental_boundary: Option<bool>,
    /// Uniform jump rate.
    pub gamma: Option<f64>,
    /// Per-jump rates, applied after `gamma`.
    pub rates: Option<Vec<f64>>,

    pub initial: Option<InitialSpec>,
    pub seed: Option<u64>,

    pub t_max: Option<f64>,
    pub dt_out: Option<f64>,
    pub t_relax: Option<f64>,
    pub integrator: Option<Integrator>,
    pub observables: Option<Vec<Observable>>,

    pub dt: Option<f64>,
    pub n_traj: Option<usize>,
    pub master_seed: Option<u64>,
    pub protocol: Option<Protocol>,

    pub tol: Option<f64>,
    pub cap: Option<usize>,
    pub form: Option<NhForm>,
    pub window: Option<usize>,

    pub out: Option<PathBuf>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl RunConfig {
    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        overlay_fields!(self, top;
            model, len, omega, coupling_seed, h, d, include_three_local, delta, j,
            experimental_boundary, gamma, rates, initial, seed, t_max, dt_out, t_relax,
            integrator, observables, dt, n_traj, master_seed, protocol, tol, cap, form,
            window, out,
        );
        self
    }

    pub fn model_kind(&self) -> Result<ModelKind, CliError> {
        self.model.ok_or_else(|| CliError::Usage("a model is required (--model toy|xy|aklt|dw)".into()))
    }

    /// Chain length; defaults toy 6, XY 4, AKLT 6, DW 8.
    pub fn chain_len(&self) -> Result<usize, CliError> {
        Ok(self.len.unwrap_or(match self.model_kind()? {
            ModelKind::Toy | ModelKind::Aklt => 6,
            ModelKind::Xy => 4,
            ModelKind::Dw => 8,
        }))
    }

    /// Defaults: Ω = 2π, h = D = 1, three-local AKLT terms on, Δ = 0.5,
    /// J = 1, periodic domain-wall chain.
    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        let len = self.chain_len()?;
        Ok(match self.model_kind()? {
            ModelKind::Toy => ModelSpec::Toy {
                len,
                omega: self.omega.unwrap_or(2.0 * PI),
                coupling_seed: self.coupling_seed.unwrap_or(DEFAULT_COUPLING_SEED),
            },
            ModelKind::Xy => ModelSpec::Xy { len, h: self.h.unwrap_or(1.0), d: self.d.unwrap_or(1.0) },
            ModelKind::Aklt => ModelSpec::Aklt { len, include_three_local: self.include_three_local.unwrap_or(true) },
            ModelKind::Dw => ModelSpec::Dw {
                len,
                delta: self.delta.unwrap_or(0.5),
                j: self.j.unwrap_or(1.0),
                experimental_boundary: self.experimental_boundary.unwrap_or(false),
            },
        })
    }

    /// The model with rates applied; `gamma` defaults to 1.
    pub fn build_model(&self) -> Result<LiouvillianModel, CliError> {
        let mut model = self.model_spec()?.build()?;
        model.set_uniform_rate(self.gamma())?;
        if let Some(rates) = &self.rates {
            if rates.len() != model.jumps.len() {
                return Err(CliError::Usage(format!(
                    "rates lists {} values but the model has {} jumps",
                    rates.len(),
                    model.jumps.len()
                )));
            }
            for (k, &r) in rates.iter().enumerate() {
                model.set_rate(k, r)?;
            }
        }
        model.validate()?;
        Ok(model)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(1.0)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn tol(&self) -> Result<f64, CliError> {
        match self.tol.unwrap_or(DFS_TOL) {
            t if t > 0.0 && t.is_finite() => Ok(t),
            t => Err(CliError::Usage(format!("tol must be positive, got {t}"))),
        }
    }

    pub fn cap(&self) -> usize {
        self.cap.unwrap_or(DEFAULT_SUPEROPERATOR_CAP)
    }

    pub fn form(&self) -> NhForm {
        self.form.unwrap_or(NhForm::Projectors)
    }

    pub fn window(&self) -> usize {
        self.window.unwrap_or(2)
    }

    /// Model default: `3/γ` toy, `5/γ` XY and AKLT, `8/γ` DW.
    pub fn t_relax(&self) -> Result<f64, CliError> {
        Ok(self.t_relax.unwrap_or(default_t_relax(self.model_kind()?, self.gamma())))
    }

    /// Dynamics runs default to 20; trajectory runs to 10.
    pub fn t_max_or(&self, fallback: f64) -> f64 {
        self.t_max.unwrap_or(fallback)
    }

    pub fn dt_out(&self) -> f64 {
        self.dt_out.unwrap_or(0.05)
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(0.1)
    }

    pub fn n_traj(&self) -> usize {
        self.n_traj.unwrap_or(1000)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed.unwrap_or(0)
    }

    /// Defaults: total S^z for the toy model, echo and `Σ(S^x)^2/L` for the
    /// spin-1 models, jump rate and scar overlap for DW dynamics.
    pub fn observables_for_dynamics(&self) -> Result<Vec<Observable>, CliError> {
        if let Some(list) = &self.observables {
            return Ok(list.clone());
        }
        Ok(match self.model_kind()? {
            ModelKind::Toy => vec![Observable::TotalSz],
            ModelKind::Xy | ModelKind::Aklt => vec![Observable::Loschmidt, Observable::Sx2Density],
            ModelKind::Dw => vec![Observable::JumpRate, Observable::ScarOverlap],
        })
    }

    /// Defaults to `<Q^† + Q>`.
    pub fn observables_for_trajectories(&self) -> Vec<Observable> {
        self.observables.clone().unwrap_or_else(|| vec![Observable::LadderX])
    }

    pub fn initial(&self) -> Result<&InitialSpec, CliError> {
        self.initial
            .as_ref()
            .ok_or_else(|| CliError::Usage("an initial state is required (--initial <kind> or config `initial`)".into()))
    }
}

/// Reads a JSON config; unknown keys are rejected with their position.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
