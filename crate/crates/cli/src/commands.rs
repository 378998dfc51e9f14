//! One function per subcommand.

use scarsim::aklt::{magnon_state, sprime_states, verify_special, AkltOperators, SpecialReport};
use scarsim::chain::embed_sparse;
use scarsim::dynamics::{evolve, make_initial, EvolveOptions, Integrator};
use scarsim::liouvillian::{
    build_superoperator, check_dfs, match_multisets, model_spectrum, nh_spectrum as nh_eigenvalues, predicted_dfs_eigenvalues,
    real_axis, HARD_SUPEROPERATOR_CAP, NH_SPECTRUM_CAP,
};
use scarsim::models::{local, scar_tower, verify_model};
use scarsim::operator::norm;
use scarsim::projectors::{analytic_two_site_projector, derive_projectors};
use scarsim::trajectory::{run_ensemble, TrajectoryConfig};
use scarsim::{ModelKind, C64};
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{emit_csv, envelope, to_json, write_text};
use crate::CliError;

/// Residual bound for the verification and projector reports.
const RESIDUAL_TOL: f64 = 1e-9;
/// Largest distance between a derived projector and its analytic form.
const PROJECTOR_TOL: f64 = 1e-10;

fn complex_rows(values: &[C64], header: &str, flag: impl Fn(&C64) -> bool) -> String {
    let mut csv = format!("{header}\n");
    for z in values {
        csv.push_str(&format!("{:.16e},{:.16e},{}\n", z.re, z.im, u8::from(flag(z))));
    }
    csv
}

pub fn spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let model = cfg.build_model()?;
    if cfg.cap() > HARD_SUPEROPERATOR_CAP {
        return Err(CliError::Usage(format!("cap {} exceeds the hard limit {HARD_SUPEROPERATOR_CAP}", cfg.cap())));
    }
    let tol = cfg.tol()?;
    let superop = build_superoperator(&model, cfg.cap())?;
    let report = model_spectrum(&model, &superop, tol)?;
    let mut eigs = report.eigenvalues.clone();
    eigs.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    let tower = scar_tower(&model)?;
    let predicted = predicted_dfs_eigenvalues(&tower);
    let result = json!({
        "superoperator_dim": superop.dim(),
        "tol": tol,
        "dfs_count": report.dfs_count,
        "predicted_dfs_count": predicted.len(),
        "dfs_match_distance": match_multisets(&report.dfs_eigenvalues, &predicted),
        "max_real": report.max_real(),
        "slowest_decay": report.slowest_decay(),
        "conjugation_defect": report.conjugation_defect(),
    });
    let csv = complex_rows(&eigs, "re,im,dfs", |z| z.re.abs() < tol);
    emit_csv(cfg.out.as_deref(), &csv, &envelope("spectrum", cfg, &model, result))?;
    if report.max_real() > tol {
        return Err(CliError::Validation(format!("eigenvalue with Re = {:e} > tol", report.max_real())));
    }
    Ok(())
}

pub fn nh_spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let model = cfg.build_model()?;
    if model.hilbert_dim() > NH_SPECTRUM_CAP {
        return Err(scarsim::Error::DimensionCap { dim: model.hilbert_dim(), cap: NH_SPECTRUM_CAP }.into());
    }
    let tol = cfg.tol()?;
    let mut eigs = nh_eigenvalues(&model, cfg.form())?;
    eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let real = real_axis(&eigs, tol);
    let tower = scar_tower(&model)?;
    let mut catalogued: Vec<f64> = tower.dfs_basis().iter().map(|(_, e)| *e).collect();
    catalogued.sort_by(f64::total_cmp);
    let result = json!({
        "form": cfg.form(),
        "tol": tol,
        "real_axis_count": real.len(),
        "real_axis": real,
        "catalogued_dfs_energies": catalogued,
    });
    let csv = complex_rows(&eigs, "re,im,real_axis", |z| z.im.abs() < tol);
    emit_csv(cfg.out.as_deref(), &csv, &envelope("nh-spectrum", cfg, &model, result))
}

pub fn dynamics(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.initial()?.clone();
    let model = cfg.build_model()?;
    if model.hilbert_dim() > NH_SPECTRUM_CAP {
        return Err(scarsim::Error::DimensionCap { dim: model.hilbert_dim(), cap: NH_SPECTRUM_CAP }.into());
    }
    let observables = cfg.observables_for_dynamics()?;
    let initial = make_initial(&model, &spec, cfg.seed())?;
    let opts = EvolveOptions {
        t_max: cfg.t_max_or(20.0),
        dt_out: cfg.dt_out(),
        integrator: cfg.integrator.unwrap_or(Integrator::Taylor),
        ..Default::default()
    };
    let run = evolve(&model, &initial, &observables, None, &opts)?;
    let result = json!({
        "initial": spec,
        "t_relax": cfg.t_relax()?,
        "options": opts,
        "diagnostics": run.diagnostics,
        "metadata": run.series.metadata,
    });
    emit_csv(cfg.out.as_deref(), &run.series.to_csv(), &envelope("dynamics", cfg, &model, result))
}

pub fn trajectories(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.initial()?.clone();
    let model = cfg.build_model()?;
    let initial = make_initial(&model, &spec, cfg.seed())?;
    let config = TrajectoryConfig {
        dt: cfg.dt(),
        n_traj: cfg.n_traj(),
        master_seed: cfg.master_seed(),
        t_max: cfg.t_max_or(10.0),
        observables: cfg.observables_for_trajectories(),
        protocol: cfg.protocol.unwrap_or_default(),
    };
    let series = run_ensemble(&model, &initial, &config, None)?;
    let result = json!({ "initial": spec, "trajectory_config": config, "metadata": series.metadata });
    emit_csv(cfg.out.as_deref(), &series.to_csv(), &envelope("trajectories", cfg, &model, result))
}

pub fn projectors(cfg: &RunConfig) -> Result<(), CliError> {
    let kind = cfg.model_kind()?;
    let k = cfg.window();
    let derivation = derive_projectors(kind, k)?;
    let analytic = match (kind, k) {
        (_, 2) => Some(analytic_two_site_projector(kind)),
        (ModelKind::Aklt, 3) => Some(scarsim::OperatorMatrix::projector(&local::aklt_t_prime_state())),
        _ => None,
    };
    let distance = match &analytic {
        Some(a) => Some(derivation.emitted.sub(a)?.frobenius_norm()),
        None => None,
    };

    let model = cfg.build_model()?;
    let tower = scar_tower(&model)?;
    let chain = &model.chain;
    let mut annihilation = 0.0_f64;
    for start in chain.window_starts(k) {
        let p = embed_sparse(&derivation.emitted, &chain.window(start as isize, k)?, chain)?;
        for s in &tower.states {
            annihilation = annihilation.max(norm(&p.apply(s)?));
        }
    }
    let m = &derivation.emitted;
    let result = json!({
        "derivation": derivation,
        "analytic_distance": distance,
        "tower_annihilation": annihilation,
        "projector": {
            "dim": m.dim(),
            "re": m.as_slice().iter().map(|z| z.re).collect::<Vec<_>>(),
            "im": m.as_slice().iter().map(|z| z.im).collect::<Vec<_>>(),
        },
    });
    write_text(cfg.out.as_deref(), &to_json(&envelope("projectors", cfg, &model, result)))?;
    if distance.is_some_and(|d| d > PROJECTOR_TOL) || annihilation > RESIDUAL_TOL {
        return Err(CliError::Validation(format!(
            "projector distance {distance:?}, tower annihilation {annihilation:e}"
        )));
    }
    Ok(())
}

fn aklt_specials(len: usize) -> Result<Vec<SpecialReport>, CliError> {
    let ops = AkltOperators::new(len)?;
    let (s1, s2) = sprime_states(len)?;
    let mut states: Vec<_> = (0..len).map(|l| magnon_state(len, l)).collect::<Result<_, _>>()?;
    states.push(s1);
    states.extend(s2);
    Ok(states.iter().map(|s| verify_special(s, &ops)).collect::<Result<_, _>>()?)
}

pub fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let model = cfg.build_model()?;
    let tower = scar_tower(&model)?;
    let report = verify_model(&model, &tower)?;
    let dfs = check_dfs(&model, &tower, None)?;
    let specials = if model.kind() == ModelKind::Aklt { aklt_specials(model.chain.len)? } else { Vec::new() };
    let special_ok = specials
        .iter()
        .all(|s| s.eigen_residual < RESIDUAL_TOL && s.two_local_residual < RESIDUAL_TOL);
    let passes = report.passes(RESIDUAL_TOL) && dfs.max_residual < RESIDUAL_TOL && special_ok;
    let result = json!({
        "passes": passes,
        "tolerance": RESIDUAL_TOL,
        "tower": report,
        "tower_energies": tower.energies,
        "extra_states": tower.extra_states.iter().map(|x| json!({"label": x.label, "energy": x.energy})).collect::<Vec<_>>(),
        "dfs_modes": dfs.modes.len(),
        "dfs_max_residual": dfs.max_residual,
        "special_states": specials,
    });
    write_text(cfg.out.as_deref(), &to_json(&envelope("verify", cfg, &model, result)))?;
    if !passes {
        return Err(CliError::Validation("residual checks failed; see the report".into()));
    }
    Ok(())
}
