use proptest::prelude::*;
use scarsim::dynamics::{evolve, make_initial, EvolveOptions, InitialSpec, Observable};
use scarsim::liouvillian::{
    build_superoperator, check_dfs, match_multisets, model_spectrum, predicted_dfs_eigenvalues,
    DEFAULT_SUPEROPERATOR_CAP,
};
use scarsim::models::{build_aklt, build_dw, build_toy, build_xy, scar_tower, verify_model};
use scarsim::trajectory::{run_channel, run_ensemble, TrajectoryConfig};
use scarsim::LiouvillianModel;

fn small_models() -> Vec<LiouvillianModel> {
    vec![
        build_toy(4, 1.3, 2).unwrap(),
        build_xy(4, 1.0, 1.0).unwrap(),
        build_aklt(4, true).unwrap(),
        build_dw(4, 0.5, 1.0, false).unwrap(),
    ]
}

#[test]
fn spectrum_dfs_matches_the_tower_for_every_model() {
    for model in small_models() {
        let tower = scar_tower(&model).unwrap();
        assert!(verify_model(&model, &tower).unwrap().passes(1e-10), "{:?}", model.kind());
        let superop = build_superoperator(&model, DEFAULT_SUPEROPERATOR_CAP).unwrap();
        let report = model_spectrum(&model, &superop, 1e-8).unwrap();
        let predicted = predicted_dfs_eigenvalues(&tower);
        assert_eq!(report.dfs_count, predicted.len(), "{:?}", model.kind());
        let d = match_multisets(&report.dfs_eigenvalues, &predicted).unwrap();
        assert!(d < 1e-8, "{:?}: {d}", model.kind());
        assert!(report.max_real() < 1e-8);
        assert!(check_dfs(&model, &tower, Some(&superop)).unwrap().max_residual < 1e-10);
    }
}

#[test]
fn tower_member_keeps_full_scar_overlap() {
    for model in small_models() {
        let initial = make_initial(&model, &InitialSpec::TowerMember { n: 1 }, 0).unwrap();
        let opts = EvolveOptions { t_max: 2.0, dt_out: 0.5, ..Default::default() };
        let run = evolve(&model, &initial, &[Observable::ScarOverlap, Observable::JumpRate], None, &opts).unwrap();
        for (&ov, &rate) in run.series.trace("scar_overlap").unwrap().iter().zip(run.series.trace("jump_rate").unwrap()) {
            assert!((ov - 1.0).abs() < 1e-10 && rate.abs() < 1e-10, "{:?}: {ov} {rate}", model.kind());
        }
    }
}

#[test]
fn trajectory_mean_approaches_the_averaged_channel() {
    let mut model = build_dw(4, 0.5, 1.0, false).unwrap();
    model.set_uniform_rate(1.0).unwrap();
    let initial = make_initial(&model, &InitialSpec::from_kind("dw_mps_perturbed").unwrap(), 0).unwrap();
    let config = TrajectoryConfig {
        dt: 0.1,
        n_traj: 400,
        master_seed: 4,
        t_max: 2.0,
        observables: vec![Observable::LadderX],
        ..Default::default()
    };
    let ensemble = run_ensemble(&model, &initial, &config, None).unwrap();
    let channel = run_channel(&model, &initial, 0.1, 2.0, &[Observable::LadderX], None).unwrap();
    let mean = ensemble.trace("ladder_x").unwrap();
    let err = &ensemble.stderr.as_ref().unwrap()[0].values;
    for ((m, e), c) in mean.iter().zip(err).zip(channel.trace("ladder_x").unwrap()) {
        assert!((m - c).abs() <= 4.0 * e + 1e-12, "{m} vs {c} (stderr {e})");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn dfs_does_not_depend_on_positive_rates(rates in proptest::collection::vec(0.1f64..3.0, 4)) {
        let mut model = build_toy(4, 2.0, 1).unwrap();
        for (i, r) in rates.iter().enumerate() {
            model.set_rate(i, *r).unwrap();
        }
        let tower = scar_tower(&model).unwrap();
        let superop = build_superoperator(&model, DEFAULT_SUPEROPERATOR_CAP).unwrap();
        let report = model_spectrum(&model, &superop, 1e-8).unwrap();
        prop_assert_eq!(report.dfs_count, 25);
        prop_assert!(match_multisets(&report.dfs_eigenvalues, &predicted_dfs_eigenvalues(&tower)).unwrap() < 1e-8);
    }
}
