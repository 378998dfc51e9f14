//! Single-site spin operators.
//!
//! Spin-1/2 basis order is `|up>, |down>`; spin-1 basis order is
//! `|1>, |0>, |-1>`. In both cases the first basis state has the largest
//! `z` projection.

use serde::{Deserialize, Serialize};

use crate::operator::OperatorMatrix;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Index of `|up>` in the spin-1/2 basis.
pub const UP: usize = 0;
/// Index of `|down>` in the spin-1/2 basis.
pub const DOWN: usize = 1;

/// Index of `|m>` in the spin-1 basis.
pub const fn spin_one_index(m: i32) -> usize {
    (1 - m) as usize
}

/// Pauli matrices and `sigma^± = (sigma^x ± i sigma^y) / 2`.
pub fn spin_half(axis: Axis) -> OperatorMatrix {
    let r = |x: f64| C64::new(x, 0.0);
    let i = |x: f64| C64::new(0.0, x);
    let data = match axis {
        Axis::X => [r(0.0), r(1.0), r(1.0), r(0.0)],
        Axis::Y => [r(0.0), i(-1.0), i(1.0), r(0.0)],
        Axis::Z => [r(1.0), r(0.0), r(0.0), r(-1.0)],
        Axis::Plus => [r(0.0), r(1.0), r(0.0), r(0.0)],
        Axis::Minus => [r(0.0), r(0.0), r(1.0), r(0.0)],
    };
    OperatorMatrix::from_vec(data.to_vec()).expect("2x2")
}

/// Spin-1 matrices; `S^±` move `m` by one unit with amplitude `sqrt(2)`.
pub fn spin_one(axis: Axis) -> OperatorMatrix {
    let s2 = std::f64::consts::SQRT_2;
    let plus = OperatorMatrix::from_real_rows(&[
        &[0.0, s2, 0.0],
        &[0.0, 0.0, s2],
        &[0.0, 0.0, 0.0],
    ])
    .expect("3x3");
    match axis {
        Axis::Plus => plus,
        Axis::Minus => plus.dagger(),
        Axis::Z => OperatorMatrix::diagonal(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]),
        Axis::X => plus.add(&plus.dagger()).expect("3x3").scale_real(0.5),
        Axis::Y => plus
            .sub(&plus.dagger())
            .expect("3x3")
            .scale(C64::new(0.0, -0.5)),
    }
}

/// Spin operator for local dimension 2 or 3.
pub fn spin_op(local_dim: usize, axis: Axis) -> OperatorMatrix {
    match local_dim {
        2 => spin_half(axis),
        3 => spin_one(axis),
        _ => panic!("unsupported local dimension {local_dim}"),
    }
}

/// `sigma_a ⊗ sigma_a` summed over x, y, z.
pub fn heisenberg_pair(local_dim: usize) -> OperatorMatrix {
    let mut out = OperatorMatrix::zeros(local_dim * local_dim);
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let s = spin_op(local_dim, axis);
        out.add_scaled(C64::new(1.0, 0.0), &s.kron(&s)).expect("same dim");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::basis_vector;

    fn close(a: &OperatorMatrix, b: &OperatorMatrix) -> bool {
        a.sub(b).unwrap().max_abs() < 1e-14
    }

    #[test]
    fn pauli_z_is_diagonal() {
        let z = spin_half(Axis::Z);
        assert_eq!(z.get(0, 0), C64::new(1.0, 0.0));
        assert_eq!(z.get(1, 1), C64::new(-1.0, 0.0));
        assert_eq!(z.get(0, 1), C64::new(0.0, 0.0));
    }

    #[test]
    fn sigma_plus_raises_down() {
        let up = spin_half(Axis::Plus).apply(&basis_vector(2, DOWN)).unwrap();
        assert_eq!(up, basis_vector(2, UP));
    }

    #[test]
    fn pauli_squares_to_identity() {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let s = spin_half(axis);
            assert!(close(&s.matmul(&s).unwrap(), &OperatorMatrix::identity(2)));
        }
    }

    #[test]
    fn ladder_combinations() {
        let x = spin_half(Axis::X);
        let y = spin_half(Axis::Y);
        let plus = x.add(&y.scale(C64::new(0.0, 1.0))).unwrap().scale_real(0.5);
        assert!(close(&plus, &spin_half(Axis::Plus)));
        assert!(close(&spin_half(Axis::Plus).dagger(), &spin_half(Axis::Minus)));
        assert!(spin_half(Axis::X).commutator(&spin_half(Axis::X)).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn spin_one_z_and_double_raise() {
        let z = spin_one(Axis::Z);
        assert_eq!(z.get(0, 0).re, 1.0);
        assert_eq!(z.get(1, 1).re, 0.0);
        assert_eq!(z.get(2, 2).re, -1.0);
        let p = spin_one(Axis::Plus);
        let p2 = p.matmul(&p).unwrap();
        let v = p2.apply(&basis_vector(3, spin_one_index(-1))).unwrap();
        assert!((v[spin_one_index(1)] - C64::new(2.0, 0.0)).norm() < 1e-14);
        assert!(v[1].norm() < 1e-14 && v[2].norm() < 1e-14);
    }

    #[test]
    fn spin_one_su2_algebra() {
        let (x, y, z) = (spin_one(Axis::X), spin_one(Axis::Y), spin_one(Axis::Z));
        let lhs = x.commutator(&y).unwrap();
        assert!(close(&lhs, &z.scale(C64::new(0.0, 1.0))));
        // Casimir S(S+1) = 2
        let casimir = x
            .matmul(&x)
            .unwrap()
            .add(&y.matmul(&y).unwrap())
            .unwrap()
            .add(&z.matmul(&z).unwrap())
            .unwrap();
        assert!(close(&casimir, &OperatorMatrix::identity(3).scale_real(2.0)));
    }
}
