//! Few-site building blocks shared by the model constructors and the
//! projector finder.

use crate::operator::{basis_vector, OperatorMatrix};
use crate::spin::{spin_half, spin_one, spin_one_index, Axis, DOWN, UP};
use crate::C64;

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `(1 - σ_j·σ_{j+1}) / 4`, the two-spin singlet projector.
pub fn singlet_projector() -> OperatorMatrix {
    let mut dot = OperatorMatrix::zeros(4);
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let s = spin_half(axis);
        dot.add_scaled(r(1.0), &s.kron(&s)).expect("4x4");
    }
    OperatorMatrix::identity(4).sub(&dot).expect("4x4").scale_real(0.25)
}

/// `(|up> - |down>)/sqrt(2)`, the `σ^x = -1` eigenstate.
pub fn x_minus() -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![r(0.0); 2];
    v[UP] = r(s);
    v[DOWN] = r(-s);
    v
}

/// `(|up> + |down>)/sqrt(2)`, the `σ^x = +1` eigenstate.
pub fn x_plus() -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![r(s), r(s)]
}

/// Raising operator of the `x` polarization, `(σ^y + iσ^z)/2`.
pub fn x_raising() -> OperatorMatrix {
    spin_half(Axis::Y)
        .add(&spin_half(Axis::Z).scale(C64::new(0.0, 1.0)))
        .expect("2x2")
        .scale_real(0.5)
}

/// `P^0 = (1 - σ^z)/2 = |down><down|`
pub fn down_projector() -> OperatorMatrix {
    OperatorMatrix::projector(&basis_vector(2, DOWN))
}

/// `P^1 = (1 + σ^z)/2 = |up><up|`
pub fn up_projector() -> OperatorMatrix {
    OperatorMatrix::projector(&basis_vector(2, UP))
}

/// `|up up><up up|`, the blockade projector.
pub fn up_up_projector() -> OperatorMatrix {
    up_projector().kron(&up_projector())
}

fn spin_one_pair(m1: i32, m2: i32) -> usize {
    spin_one_index(m1) * 3 + spin_one_index(m2)
}

/// Two-site spin-1 state `|T^{S,m}>` with total spin `S` and projection `m`.
pub fn pair_state(total: u32, m: i32) -> Vec<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let terms: Vec<(f64, i32, i32)> = match (total, m) {
        (2, -2) => vec![(1.0, -1, -1)],
        (2, -1) => vec![(h, 0, -1), (h, -1, 0)],
        (2, 0) => {
            let s = 1.0 / 6f64.sqrt();
            vec![(s, 1, -1), (2.0 * s, 0, 0), (s, -1, 1)]
        }
        (2, 1) => vec![(h, 0, 1), (h, 1, 0)],
        (2, 2) => vec![(1.0, 1, 1)],
        (1, -1) => vec![(h, 0, -1), (-h, -1, 0)],
        (1, 0) => vec![(h, 1, -1), (-h, -1, 1)],
        (1, 1) => vec![(h, 1, 0), (-h, 0, 1)],
        (0, 0) => {
            let s = 1.0 / 3f64.sqrt();
            vec![(s, 1, -1), (-s, 0, 0), (s, -1, 1)]
        }
        _ => panic!("no two-site spin-1 state with S={total}, m={m}"),
    };
    let mut v = vec![r(0.0); 9];
    for (c, m1, m2) in terms {
        v[spin_one_pair(m1, m2)] += r(c);
    }
    v
}

pub fn pair_projector(total: u32, m: i32) -> OperatorMatrix {
    OperatorMatrix::projector(&pair_state(total, m))
}

fn sum_of_pair_projectors(members: &[(u32, i32)]) -> OperatorMatrix {
    let mut out = OperatorMatrix::zeros(9);
    for &(s, m) in members {
        out.add_scaled(r(1.0), &pair_projector(s, m)).expect("9x9");
    }
    out
}

/// `S_j·S_{j+1}` for two spin-1 sites.
pub fn spin_one_dot() -> OperatorMatrix {
    let mut dot = OperatorMatrix::zeros(9);
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let s = spin_one(axis);
        dot.add_scaled(r(1.0), &s.kron(&s)).expect("9x9");
    }
    dot
}

/// `T^{S=2}` on a bond, written as `1/3 + (1/2) S·S + (1/6) (S·S)^2`.
pub fn aklt_bond() -> OperatorMatrix {
    let dot = spin_one_dot();
    let dot2 = dot.matmul(&dot).expect("9x9");
    let mut out = OperatorMatrix::identity(9).scale_real(1.0 / 3.0);
    out.add_scaled(r(0.5), &dot).expect("9x9");
    out.add_scaled(r(1.0 / 6.0), &dot2).expect("9x9");
    out
}

/// `T^{2,-2} + T^{2,-1} + T^{2,0}`, the two-site projector annihilating the
/// AKLT scar tower.
pub fn aklt_scar_projector() -> OperatorMatrix {
    sum_of_pair_projectors(&[(2, -2), (2, -1), (2, 0)])
}

/// `T^{2,1} + T^{2,2}`, the bond term of `H'`.
pub fn aklt_h_prime_bond() -> OperatorMatrix {
    sum_of_pair_projectors(&[(2, 1), (2, 2)])
}

/// `|T'> = (|0,1,1> + |1,1,0>)/sqrt(2)` on three spin-1 sites.
pub fn aklt_t_prime_state() -> Vec<C64> {
    let idx = |a: i32, b: i32, c: i32| (spin_one_index(a) * 3 + spin_one_index(b)) * 3 + spin_one_index(c);
    let mut v = vec![r(0.0); 27];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    v[idx(0, 1, 1)] = r(h);
    v[idx(1, 1, 0)] = r(h);
    v
}

pub fn aklt_t_prime_projector() -> OperatorMatrix {
    OperatorMatrix::projector(&aklt_t_prime_state())
}

/// On-site spin flip `|1><-1| + |0><0| + |-1><1|`.
pub fn spin_one_flip() -> OperatorMatrix {
    let mut out = OperatorMatrix::zeros(3);
    out.set(spin_one_index(1), spin_one_index(-1), r(1.0));
    out.set(spin_one_index(0), spin_one_index(0), r(1.0));
    out.set(spin_one_index(-1), spin_one_index(1), r(1.0));
    out
}

/// `S^x S^x + S^y S^y` on a bond.
pub fn xy_hopping() -> OperatorMatrix {
    let x = spin_one(Axis::X);
    let y = spin_one(Axis::Y);
    x.kron(&x).add(&y.kron(&y)).expect("9x9")
}

/// Projector onto the six two-site states outside
/// `{T^{2,-2}, T^{2,2}, T^{1,0}}`.
pub fn xy_scar_projector() -> OperatorMatrix {
    sum_of_pair_projectors(&[(2, -1), (2, 0), (2, 1), (1, -1), (1, 1), (0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::inner;

    fn close(a: &OperatorMatrix, b: &OperatorMatrix, tol: f64) -> bool {
        a.sub(b).unwrap().max_abs() < tol
    }

    #[test]
    fn pair_states_form_an_orthonormal_basis() {
        let labels: Vec<(u32, i32)> = (0..=2u32)
            .flat_map(|s| (-(s as i32)..=s as i32).map(move |m| (s, m)))
            .collect();
        assert_eq!(labels.len(), 9);
        for &(s1, m1) in &labels {
            for &(s2, m2) in &labels {
                let ip = inner(&pair_state(s1, m1), &pair_state(s2, m2));
                let expect = if (s1, m1) == (s2, m2) { 1.0 } else { 0.0 };
                assert!((ip - r(expect)).norm() < 1e-14, "{s1},{m1} vs {s2},{m2}");
            }
        }
    }

    #[test]
    fn pair_states_have_stated_total_spin() {
        let dot = spin_one_dot();
        for s in 0..=2u32 {
            for m in -(s as i32)..=s as i32 {
                let v = pair_state(s, m);
                // S·S = (S(S+1) - 4)/2 on total spin S
                let expected = (s * (s + 1)) as f64 / 2.0 - 2.0;
                let dv = dot.apply(&v).unwrap();
                let res: f64 = dv.iter().zip(&v).map(|(a, b)| (a - b * expected).norm_sqr()).sum();
                assert!(res.sqrt() < 1e-13);
            }
        }
    }

    #[test]
    fn aklt_bond_is_spin_two_projector() {
        let full = sum_of_pair_projectors(&[(2, -2), (2, -1), (2, 0), (2, 1), (2, 2)]);
        assert!(close(&aklt_bond(), &full, 1e-13));
        assert!(close(&aklt_scar_projector().add(&aklt_h_prime_bond()).unwrap(), &full, 1e-14));
    }

    #[test]
    fn xy_hopping_null_space_matches_scar_complement() {
        // The XY bond term vanishes exactly on {T^{2,±2}, T^{1,0}}.
        let hop = xy_hopping();
        for (s, m) in [(2u32, -2), (2, 2), (1, 0)] {
            let v = hop.apply(&pair_state(s, m)).unwrap();
            assert!(v.iter().all(|z| z.norm() < 1e-14));
        }
        let p = xy_scar_projector();
        assert!(close(&p.matmul(&p).unwrap(), &p, 1e-14));
        assert!((p.trace() - r(6.0)).norm() < 1e-13);
    }

    #[test]
    fn singlet_projector_is_rank_one() {
        let p = singlet_projector();
        assert!(close(&p.matmul(&p).unwrap(), &p, 1e-15));
        assert!((p.trace() - r(1.0)).norm() < 1e-15);
        let singlet = vec![r(0.0), r(0.5f64.sqrt()), r(-(0.5f64.sqrt())), r(0.0)];
        assert!(close(&p, &OperatorMatrix::projector(&singlet), 1e-15));
    }

    #[test]
    fn x_raising_maps_minus_to_plus() {
        let q = x_raising();
        let v = q.apply(&x_minus()).unwrap();
        let overlap = inner(&x_plus(), &v);
        assert!((overlap.norm() - 1.0).abs() < 1e-14);
        assert!(q.apply(&x_plus()).unwrap().iter().all(|z| z.norm() < 1e-15));
    }
}
