use super::*;
use crate::projectors::MpsFamily;

fn all_models(len: usize) -> Vec<LiouvillianModel> {
    vec![
        build_toy(len, 2.0 * std::f64::consts::PI, DEFAULT_COUPLING_SEED).unwrap(),
        build_xy(len, 1.0, 1.0).unwrap(),
        build_aklt(len, true).unwrap(),
        build_aklt(len, false).unwrap(),
        build_dw(len, 0.5, 1.0, false).unwrap(),
        build_dw(len, 0.5, 1.0, true).unwrap(),
    ]
}

#[test]
fn catalogued_models_pass_verification_at_four_sites() {
    for model in all_models(4) {
        model.validate().unwrap();
        let tower = scar_tower(&model).unwrap();
        let report = verify_model(&model, &tower).unwrap();
        assert!(report.passes(1e-9), "{:?}: {report:?}", model.spec);
    }
}

#[test]
fn tower_sizes() {
    let toy = build_toy(6, 1.0, 7).unwrap();
    let t = scar_tower(&toy).unwrap();
    assert_eq!(t.len(), 7);
    for (n, e) in t.energies.iter().enumerate() {
        assert!((e - (n as f64 - 3.0)).abs() < 1e-9);
    }
    assert_eq!(scar_tower(&build_xy(4, 1.0, 0.3).unwrap()).unwrap().len(), 5);
    let aklt6 = scar_tower(&build_aklt(6, true).unwrap()).unwrap();
    assert_eq!((aklt6.len(), aklt6.extra_states.len()), (3, 1));
    assert!((aklt6.extra_states[0].energy - 4.0).abs() < 1e-9);
    let dw8 = scar_tower(&build_dw(8, 0.5, 1.0, false).unwrap()).unwrap();
    assert_eq!(dw8.dfs_dim(), 6);
}

#[test]
fn degenerate_toy_tower_when_field_vanishes() {
    let t = scar_tower(&build_toy(4, 0.0, 1).unwrap()).unwrap();
    assert!(t.energies.iter().all(|e| e.abs() < 1e-9));
}

#[test]
fn aklt_top_of_tower_depends_on_parity() {
    // L/2 odd: the ladder dies before reaching the ferromagnet
    let m6 = build_aklt(6, false).unwrap();
    let t6 = scar_tower(&m6).unwrap();
    assert_eq!(t6.len(), 3);
    // L/2 even: the top state is |1,...,1>
    let m8 = build_aklt(8, false).unwrap();
    let t8 = scar_tower(&m8).unwrap();
    assert_eq!(t8.len(), 5);
    let top = t8.states.last().unwrap();
    let f = m8.chain.index_of(&[spin_one_index(1); 8]);
    assert!((top[f].norm() - 1.0).abs() < 1e-10);
}

#[test]
fn dw_tower_respects_blockade() {
    for len in [4, 6, 8] {
        let m = build_dw(len, 0.5, 1.0, false).unwrap();
        let t = scar_tower(&m).unwrap();
        for v in &t.states {
            for (i, z) in v.iter().enumerate() {
                let d = m.chain.digits(i);
                let blocked = (0..len).any(|s| d[s] == UP && d[(s + 1) % len] == UP);
                if blocked {
                    assert_eq!(*z, C64::new(0.0, 0.0));
                }
            }
        }
    }
}

#[test]
fn dw_spacing_and_neel_partner() {
    let m = build_dw(8, 0.5, 1.0, false).unwrap();
    assert!((m.omega + 3.0).abs() < 1e-15);
    let t = scar_tower(&m).unwrap();
    let top = *t.energies.last().unwrap();
    assert_eq!(t.extra_states.len(), 1);
    assert!((t.extra_states[0].energy - top).abs() < 1e-9);
}

#[test]
fn rates_do_not_enter_the_report() {
    let mut m = build_xy(4, 1.0, 1.0).unwrap();
    let t = scar_tower(&m).unwrap();
    let before = verify_model(&m, &t).unwrap();
    m.set_uniform_rate(0.0).unwrap();
    assert_eq!(verify_model(&m, &t).unwrap(), before);
}

#[test]
fn perturbed_hamiltonian_is_flagged() {
    let mut m = build_toy(4, 1.0, 3).unwrap();
    let t = scar_tower(&m).unwrap();
    let kick = embed_sparse(&spin_half(Axis::Z).scale_real(1e-3), &[0], &m.chain).unwrap();
    m.hamiltonian = m.hamiltonian.add(&kick).unwrap();
    let report = verify_model(&m, &t).unwrap();
    assert!(report.eigen_residual > 1e-4);
    assert!(matches!(scar_tower(&m), Err(Error::TowerResidual(_))));
}

#[test]
fn odd_and_short_chains_are_rejected() {
    assert!(build_toy(3, 1.0, 0).is_err());
    assert!(build_xy(5, 1.0, 1.0).is_err());
    assert!(build_aklt(7, true).is_err());
    assert!(build_dw(5, 0.5, 1.0, false).is_err());
}

#[test]
fn negative_rate_is_rejected() {
    let mut m = build_dw(4, 0.5, 1.0, false).unwrap();
    assert!(m.set_rate(0, -1.0).is_err());
    assert!(m.set_rate(99, 1.0).is_err());
}

/// `Σ_n β^n/n! (Q^†)^n |S_0>` for an unnormalized reference.
fn compressed_oracle(model: &LiouvillianModel, reference: &[C64], beta: f64) -> Vec<C64> {
    let mut term = reference.to_vec();
    let mut acc = term.clone();
    for n in 1..=model.chain.len {
        term = model.ladder.apply(&term).unwrap();
        term.iter_mut().for_each(|z| *z *= beta / n as f64);
        acc.iter_mut().zip(&term).for_each(|(a, t)| *a += t);
    }
    acc
}

#[test]
fn mps_families_equal_the_exponentiated_ladder() {
    // the AKLT tensors realize exp((β/2) Q^†)|S_0>; the span over all β is the same
    for (model, family, scale) in [
        (build_toy(4, 1.0, 0).unwrap(), MpsFamily::toy(), 1.0),
        (build_xy(6, 1.0, 0.0).unwrap(), MpsFamily::xy(), 1.0),
        (build_aklt(6, false).unwrap(), MpsFamily::aklt(), 0.5),
        (build_aklt(8, false).unwrap(), MpsFamily::aklt(), 0.5),
        (build_dw(6, 0.5, 1.0, false).unwrap(), MpsFamily::dw(), 1.0),
    ] {
        let len = model.chain.len;
        let reference = family.state(C64::new(0.0, 0.0), len).unwrap();
        for beta in [0.5, 1.0, -0.7] {
            let mps = family.state(C64::new(beta, 0.0), len).unwrap();
            let oracle = compressed_oracle(&model, &reference, scale * beta);
            let diff: f64 = mps.iter().zip(&oracle).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            assert!(diff < 1e-10 * norm(&oracle), "{:?} beta={beta}: {diff}", model.kind());
        }
    }
}

#[test]
fn toy_singlet_projectors_kill_compressed_state() {
    let m = build_toy(6, 1.0, 0).unwrap();
    for beta in [0.0, 0.5, 1.0] {
        let s = MpsFamily::toy().state(C64::new(beta, 0.0), 6).unwrap();
        for p in &m.projectors {
            assert!(norm(&p.apply(&s).unwrap()) < 1e-12);
        }
    }
}

#[test]
fn model_spec_round_trips_through_json_shape() {
    let spec = ModelSpec::Dw { len: 8, delta: 0.5, j: 1.0, experimental_boundary: true };
    assert_eq!(spec.kind(), ModelKind::Dw);
    assert_eq!(spec.len(), 8);
    assert_eq!("aklt".parse::<ModelKind>().unwrap(), ModelKind::Aklt);
    assert!("heisenberg".parse::<ModelKind>().is_err());
}

