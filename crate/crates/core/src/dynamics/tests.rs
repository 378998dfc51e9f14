use super::*;
use crate::liouvillian::{build_superoperator, devectorize, vectorize};
use crate::models::{build_aklt, build_dw, build_toy, build_xy};
use crate::spin::spin_one_index;

fn maximally_mixed(dim: usize) -> Vec<C64> {
    OperatorMatrix::identity(dim).scale_real(1.0 / dim as f64).into_vec()
}

fn quick(t_max: f64, dt_out: f64) -> EvolveOptions {
    EvolveOptions { t_max, dt_out, keep_snapshots: true, ..Default::default() }
}

#[test]
fn all_down_has_total_sz_minus_half_length() {
    let m = build_toy(4, 1.0, 0).unwrap();
    let psi = spin_half_pattern(&m, |_| false);
    let init = InitialState::pure(psi, "down").unwrap();
    let set = ObservableSet::new(&m, &[Observable::TotalSz], &init, None).unwrap();
    assert!((set.on_state(init.vector().unwrap())[0] + 2.0).abs() < 1e-14);
    assert!((set.on_density(init.density().as_slice())[0] + 2.0).abs() < 1e-14);
}

#[test]
fn sx2_density_reference_values() {
    let m = build_xy(4, 1.0, 1.0).unwrap();
    let op = sx2_density_operator(&m).unwrap();
    // Tr[(S^x)^2] / 3 = 2/3 per site
    assert!((op.trace_with(&maximally_mixed(81)).re - 2.0 / 3.0).abs() < 1e-14);
    let top = basis_vector(81, m.chain.index_of(&[spin_one_index(1); 4]));
    assert!((op.expectation(&top).re - 0.5).abs() < 1e-14);
}

#[test]
fn jump_rate_counts_adjacent_up_pairs() {
    let m = build_dw(8, 0.5, 1.0, false).unwrap();
    let op = jump_rate_operator(&m).unwrap();
    let one_pair = spin_half_pattern(&m, |s| s < 2);
    assert!((op.expectation(&one_pair).re - 1.0 / 8.0).abs() < 1e-15);
    let blockaded = spin_half_pattern(&m, |s| s % 2 == 0);
    assert_eq!(op.expectation(&blockaded).re, 0.0);
}

#[test]
fn scar_overlap_of_identity_counts_dfs_states() {
    let m = build_dw(6, 0.5, 1.0, false).unwrap();
    let tower = scar_tower(&m).unwrap();
    assert!((tower.overlap_with_density(&maximally_mixed(64)) - 5.0 / 64.0).abs() < 1e-14);
}

#[test]
fn loschmidt_reference_values() {
    let a = OperatorMatrix::projector(&basis_vector(4, 0));
    let b = OperatorMatrix::projector(&basis_vector(4, 3));
    assert_eq!(loschmidt_echo(&a, &b, false).unwrap(), 0.0);
    let mixed = OperatorMatrix::identity(4).scale_real(0.25);
    assert!((loschmidt_echo(&mixed, &mixed, true).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn closed_two_level_echo_follows_cosine() {
    let mut m = build_toy(4, 2.0, 0).unwrap();
    m.set_uniform_rate(0.0).unwrap();
    let tower = scar_tower(&m).unwrap();
    let psi: Vec<C64> = tower.states[1].iter().zip(&tower.states[2]).map(|(a, b)| a + b).collect();
    let init = InitialState::pure(psi, "pair").unwrap();
    let obs = [Observable::Loschmidt, Observable::ScarOverlap];
    let run = evolve(&m, &init, &obs, Some(&tower), &quick(3.0, 0.1)).unwrap();
    let echo = run.series.trace("loschmidt").unwrap();
    for (t, e) in run.series.times.iter().zip(echo) {
        assert!((e - 0.5 * (1.0 + (m.omega * t).cos())).abs() < 1e-10, "t={t}: {e}");
    }
    assert!(run.series.trace("scar_overlap").unwrap().iter().all(|v| (v - 1.0).abs() < 1e-10));
}

#[test]
fn tower_populations_are_stationary() {
    for m in [build_toy(4, 1.0, 0).unwrap(), build_dw(6, 0.5, 1.0, false).unwrap()] {
        let tower = scar_tower(&m).unwrap();
        for n in [0, tower.len() - 1] {
            let init = InitialState::pure(tower.states[n].clone(), "tower").unwrap();
            let rho0 = init.density();
            let run = evolve(&m, &init, &[], Some(&tower), &quick(2.0, 0.5)).unwrap();
            for snap in &run.snapshots {
                assert!(snap.sub(&rho0).unwrap().frobenius_norm() < 1e-8);
            }
        }
    }
}

/// `exp(A)` by scaling, 30-term Taylor and squaring.
fn dense_expm(a: &OperatorMatrix) -> OperatorMatrix {
    let norm = a.frobenius_norm();
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let scaled = a.scale_real(0.5f64.powi(squarings));
    let mut term = OperatorMatrix::identity(a.dim());
    let mut acc = term.clone();
    for k in 1..30 {
        term = term.matmul(&scaled).unwrap().scale_real(1.0 / k as f64);
        acc = acc.add(&term).unwrap();
    }
    for _ in 0..squarings {
        acc = acc.matmul(&acc).unwrap();
    }
    acc
}

#[test]
fn matches_superoperator_exponential() {
    let m = build_toy(4, 2.0 * PI, 3).unwrap();
    let init = make_initial(&m, &InitialSpec::RandomDensity, 11).unwrap();
    let superop = build_superoperator(&m, 81).unwrap().matrix().to_dense();
    let t = 0.7;
    let prop = dense_expm(&superop.scale_real(t));
    let expected = devectorize(&prop.apply(&vectorize(&init.density())).unwrap()).unwrap();
    for integrator in [Integrator::Taylor, Integrator::Rk4] {
        let opts = EvolveOptions { integrator, ..quick(t, t) };
        let run = evolve(&m, &init, &[], None, &opts).unwrap();
        let got = run.snapshots.last().unwrap();
        assert!(got.sub(&expected).unwrap().max_abs() < 1e-8, "{integrator:?}");
        assert!(run.diagnostics.convergence_change.unwrap() < CONVERGENCE_TOL);
    }
}

#[test]
fn evolution_preserves_density_matrix_properties() {
    let m = build_xy(4, 1.0, 1.0).unwrap();
    let init = make_initial(&m, &InitialSpec::XyProduct { mixing: XyMixing::TraceCorrected }, 0).unwrap();
    let run = evolve(&m, &init, &[Observable::Sx2Density], None, &quick(1.0, 0.25)).unwrap();
    let d = &run.diagnostics;
    assert!(d.max_trace_drift < 1e-9);
    assert!(d.max_hermiticity_defect < 1e-10);
    assert!(d.min_eigenvalue > -1e-9);
}

#[test]
fn initial_state_catalogue() {
    let dw = build_dw(8, 0.5, 1.0, false).unwrap();
    let wall = make_initial(&dw, &InitialSpec::DwDomainwall, 0).unwrap();
    let expected = dw.chain.index_of(&[UP, UP, UP, UP, DOWN, DOWN, DOWN, DOWN]);
    assert_eq!(wall.vector().unwrap()[expected], C64::new(1.0, 0.0));

    let pairs = make_initial(&dw, &InitialSpec::DwPairs, 0).unwrap();
    let expected = dw.chain.index_of(&[UP, UP, DOWN, DOWN, UP, UP, DOWN, DOWN]);
    assert_eq!(pairs.vector().unwrap()[expected], C64::new(1.0, 0.0));

    let s0 = make_initial(&dw, &InitialSpec::TowerMember { n: 0 }, 0).unwrap();
    assert!((inner(s0.vector().unwrap(), &dw.reference).norm() - 1.0).abs() < 1e-14);
    assert!(make_initial(&dw, &InitialSpec::TowerMember { n: 99 }, 0).is_err());
    assert!(make_initial(&dw, &InitialSpec::XyProduct { mixing: XyMixing::Pure }, 0).is_err());
    assert!(InitialSpec::from_kind("sunshine").is_err());
}

#[test]
fn blockade_uniform_state_lies_in_null_space_outside_tower() {
    let dw = build_dw(8, 0.5, 1.0, false).unwrap();
    let init = make_initial(&dw, &InitialSpec::DwBlockadeUniform, 0).unwrap();
    let psi = init.vector().unwrap();
    assert!(jump_rate_operator(&dw).unwrap().expectation(psi).re.abs() < 1e-14);
    assert!(scar_tower(&dw).unwrap().overlap_with_state(psi) < 1e-12);
}

#[test]
fn unrotated_dw_mps_is_signed_independent_set_sum() {
    let dw = build_dw(6, 0.5, 1.0, false).unwrap();
    let init = make_initial(&dw, &InitialSpec::DwMpsPerturbed { theta_max: 0.0 }, 5).unwrap();
    let mut oracle = vec![ZERO; 64];
    for (i, z) in oracle.iter_mut().enumerate() {
        let d = dw.chain.digits(i);
        if (0..6).any(|s| d[s] == UP && d[(s + 1) % 6] == UP) {
            continue;
        }
        *z = C64::new((0..6).filter(|&s| d[s] == UP).map(stagger).product(), 0.0);
    }
    normalize(&mut oracle);
    assert!((inner(&oracle, init.vector().unwrap()).norm() - 1.0).abs() < 1e-12);
}

#[test]
fn random_draws_are_seeded() {
    let m = build_toy(4, 1.0, 0).unwrap();
    let a = make_initial(&m, &InitialSpec::RandomDensity, 1).unwrap();
    let b = make_initial(&m, &InitialSpec::RandomDensity, 1).unwrap();
    let c = make_initial(&m, &InitialSpec::RandomDensity, 2).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    a.validate().unwrap();
    let r = make_initial(&m, &InitialSpec::RandomProduct { theta_max: PI }, 9).unwrap();
    assert!((norm(r.vector().unwrap()) - 1.0).abs() < 1e-14);
}

#[test]
fn xy_mixtures_have_unit_trace() {
    let m = build_xy(4, 1.0, 1.0).unwrap();
    for mixing in [XyMixing::Literal, XyMixing::TraceCorrected] {
        let rho = make_initial(&m, &InitialSpec::XyProduct { mixing }, 0).unwrap().density();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }
    let corrected = make_initial(&m, &InitialSpec::XyProduct { mixing: XyMixing::TraceCorrected }, 0).unwrap();
    // half the weight on the product state, the other half spread evenly
    let psi = make_initial(&m, &InitialSpec::XyProduct { mixing: XyMixing::Pure }, 0).unwrap();
    let p = corrected.density().matrix_element(psi.vector().unwrap(), psi.vector().unwrap()).unwrap().re;
    assert!((p - (0.5 + 0.5 / 81.0)).abs() < 1e-14);
}

#[test]
fn aklt_compressed_needs_aklt() {
    let aklt = build_aklt(4, true).unwrap();
    let s = make_initial(&aklt, &InitialSpec::from_kind("aklt_compressed").unwrap(), 3).unwrap();
    assert_eq!(s.dim(), 81);
    assert!(make_initial(&build_toy(4, 1.0, 0).unwrap(), &InitialSpec::from_kind("aklt_compressed").unwrap(), 3).is_err());
}

#[test]
fn recurrence_of_a_pure_cosine_vanishes() {
    let times: Vec<f64> = (0..400).map(|k| k as f64 * 0.05).collect();
    let values: Vec<f64> = times.iter().map(|t| (2.0 * PI * t).cos()).collect();
    assert!(recurrence_defect(&times, &values, 2.0, 5.0, 1.0).unwrap() < 1e-12);
    let damped: Vec<f64> = times.iter().map(|t| (-0.1 * t).exp() * (2.0 * PI * t).cos()).collect();
    let d = recurrence_defect(&times, &damped, 2.0, 5.0, 1.0).unwrap();
    // worst at t = 2; the amplitude is the initial half swing, (1 + e^{-0.05}) / 2
    let expect = (-0.2_f64).exp() * (1.0 - (-0.1_f64).exp()) / (0.5 * (1.0 + (-0.05_f64).exp()));
    assert!((d - expect).abs() < 1e-9, "{d} vs {expect}");
    assert!(recurrence_defect(&times, &values, 2.0, 5.0, 0.33).is_err());
}

#[test]
fn flat_trace_is_measured_against_its_scale() {
    let times: Vec<f64> = (0..400).map(|k| k as f64 * 0.05).collect();
    let flat: Vec<f64> = times.iter().map(|t| 0.5 + 1e-15 * (7.0 * t).sin()).collect();
    assert!(recurrence_defect(&times, &flat, 2.0, 5.0, 1.0).unwrap() < 1e-5);
    let drifting: Vec<f64> = times.iter().map(|t| 0.5 + 1e-3 * t).collect();
    assert!(recurrence_defect(&times, &drifting, 2.0, 5.0, 1.0).unwrap() > 0.1);
}

#[test]
fn relaxation_time_inverts_exponential_decay() {
    let t = relaxation_time(0.5, 1e-3).unwrap();
    assert!(((-0.5 * t).exp() - 1e-3).abs() < 1e-15);
    assert!(relaxation_time(0.0, 1e-3).is_err());
}

#[test]
fn csv_has_header_and_full_precision() {
    let series = ObservableSeries {
        times: vec![0.0, 0.5],
        traces: vec![NamedTrace { name: "total_sz".into(), values: vec![1.0 / 3.0, -2.0] }],
        stderr: None,
        metadata: BTreeMap::new(),
    };
    let csv = series.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,total_sz");
    let back: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(back, 1.0 / 3.0);
    assert!(!csv.contains('\r'));
    let mut noisy = series.clone();
    noisy.stderr = Some(vec![NamedTrace { name: "total_sz".into(), values: vec![0.0, 0.1] }]);
    assert!(noisy.to_csv().starts_with("t,mean_total_sz,stderr_total_sz\n"));
}

#[test]
fn observable_names_round_trip() {
    for o in Observable::ALL {
        assert_eq!(o.name().parse::<Observable>().unwrap(), o);
    }
}
