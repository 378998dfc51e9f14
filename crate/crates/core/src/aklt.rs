//! Closed-form special eigenstates of the AKLT chain on top of the
//! ferromagnet `|F> = |1, ..., 1>`: single magnons `|0_k>` and the
//! `E = L - 2` states `|S'_1>`, `|S'_2>`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::chain::{embed_sparse, ChainSpec, OperatorSum};
use crate::error::{Error, Result};
use crate::models::local;
use crate::operator::{norm, normalize};
use crate::sparse::SparseOperator;
use crate::spin::spin_one_index;
use crate::C64;

#[derive(Clone, Debug)]
pub struct SpecialState {
    pub label: String,
    /// Unit norm.
    pub vector: Vec<C64>,
    pub predicted_energy: f64,
    pub momentum: Option<f64>,
}

fn check_len(len: usize) -> Result<ChainSpec> {
    if len < 4 || len % 2 != 0 {
        return Err(Error::InvalidModel(format!("AKLT special states need even L >= 4, got {len}")));
    }
    ChainSpec::periodic(len, 3)
}

/// Basis index of `|F>` with the listed sites replaced by `m` values.
fn flipped(chain: &ChainSpec, changes: &[(usize, i32)]) -> usize {
    let mut digits = vec![spin_one_index(1); chain.len];
    for &(s, m) in changes {
        digits[s] = spin_one_index(m);
    }
    chain.index_of(&digits)
}

/// `|0_k> ∝ Σ_j e^{ikj} S^-_j |F>` with `k = 2πl/L`.
pub fn magnon_state(len: usize, l: usize) -> Result<SpecialState> {
    let chain = check_len(len)?;
    let l = l % len;
    let k = 2.0 * PI * l as f64 / len as f64;
    let mut v = vec![C64::new(0.0, 0.0); chain.hilbert_dim()];
    for s in 0..len {
        let j = (s + 1) as f64;
        v[flipped(&chain, &[(s, 0)])] += C64::from_polar(2f64.sqrt(), k * j);
    }
    normalize(&mut v);
    Ok(SpecialState {
        label: format!("magnon_l{l}"),
        vector: v,
        predicted_energy: len as f64 - 1.0 + k.cos(),
        momentum: Some(k),
    })
}

/// Magnon at an explicit momentum, which must sit on the grid `2πl/L`.
pub fn magnon_state_at(len: usize, k: f64) -> Result<SpecialState> {
    let x = k * len as f64 / (2.0 * PI);
    let l = x.round();
    if (x - l).abs() > 1e-9 {
        return Err(Error::OffGridMomentum { k, len });
    }
    magnon_state(len, l.rem_euclid(len as f64) as usize)
}

/// `|S'_1> = Σ (-1)^j |(-1)_j>` and, when it does not cancel itself,
/// `|S'_2> = Σ_j (-1)^j Σ_{j'=1}^{L/2-1} (-1)^{j'} |0_j 0_{j+2j'}>`.
pub fn sprime_states(len: usize) -> Result<(SpecialState, Option<SpecialState>)> {
    let chain = check_len(len)?;
    let dim = chain.hilbert_dim();
    let sign = |n: usize| if n % 2 == 0 { 1.0 } else { -1.0 };
    let energy = len as f64 - 2.0;

    let mut s1 = vec![C64::new(0.0, 0.0); dim];
    for s in 0..len {
        s1[flipped(&chain, &[(s, -1)])] += C64::new(sign(s + 1), 0.0);
    }
    normalize(&mut s1);

    let mut s2 = vec![C64::new(0.0, 0.0); dim];
    for s in 0..len {
        for jp in 1..len / 2 {
            let other = (s + 2 * jp) % len;
            s2[flipped(&chain, &[(s, 0), (other, 0)])] += C64::new(sign(s + 1) * sign(jp), 0.0);
        }
    }
    let s2 = if normalize(&mut s2) < 1e-12 {
        None
    } else {
        Some(SpecialState { label: "sprime_2".into(), vector: s2, predicted_energy: energy, momentum: Some(PI) })
    };
    Ok((
        SpecialState { label: "sprime_1".into(), vector: s1, predicted_energy: energy, momentum: Some(PI) },
        s2,
    ))
}

/// The AKLT operators a special state is checked against.
#[derive(Clone, Debug)]
pub struct AkltOperators {
    pub two_local: Vec<SparseOperator>,
    pub three_local: Vec<SparseOperator>,
    /// `H' = Σ (T^{2,1} + T^{2,2})`
    pub h_prime: SparseOperator,
}

impl AkltOperators {
    pub fn new(len: usize) -> Result<Self> {
        let chain = check_len(len)?;
        let p = local::aklt_scar_projector();
        let t = local::aklt_t_prime_projector();
        let mut two_local = Vec::with_capacity(len);
        let mut three_local = Vec::with_capacity(len);
        let mut h = OperatorSum::new(chain);
        for s in 0..len {
            let pair = chain.window(s as isize, 2)?;
            two_local.push(embed_sparse(&p, &pair, &chain)?);
            three_local.push(embed_sparse(&t, &chain.window(s as isize - 1, 3)?, &chain)?);
            h.add_real(1.0, &local::aklt_h_prime_bond(), &pair)?;
        }
        Ok(Self { two_local, three_local, h_prime: h.build() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecialReport {
    pub label: String,
    /// `max_j ||P_j ψ||`
    pub two_local_residual: f64,
    /// `max_j ||T'_j ψ||`
    pub three_local_residual: f64,
    /// `<ψ|H'|ψ>`
    pub energy: f64,
    /// `||H'ψ - E_pred ψ||`
    pub eigen_residual: f64,
}

pub fn verify_special(state: &SpecialState, ops: &AkltOperators) -> Result<SpecialReport> {
    let v = &state.vector;
    let max_norm = |list: &[SparseOperator]| -> Result<f64> {
        list.iter().try_fold(0.0_f64, |acc, p| Ok(acc.max(norm(&p.apply(v)?))))
    };
    let hv = ops.h_prime.apply(v)?;
    let eigen_residual = hv
        .iter()
        .zip(v)
        .map(|(a, b)| (a - b * state.predicted_energy).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(SpecialReport {
        label: state.label.clone(),
        two_local_residual: max_norm(&ops.two_local)?,
        three_local_residual: max_norm(&ops.three_local)?,
        energy: ops.h_prime.expectation(v).re,
        eigen_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::inner;

    #[test]
    fn magnon_energies_follow_cosine() {
        for len in [4, 6] {
            let ops = AkltOperators::new(len).unwrap();
            for l in 0..len {
                let m = magnon_state(len, l).unwrap();
                let rep = verify_special(&m, &ops).unwrap();
                assert!(rep.eigen_residual < 1e-10, "L={len} l={l}: {}", rep.eigen_residual);
                assert!(rep.two_local_residual < 1e-12);
            }
        }
    }

    #[test]
    fn k_zero_energy_is_len() {
        let m = magnon_state(6, 0).unwrap();
        assert!((m.predicted_energy - 6.0).abs() < 1e-15);
    }

    #[test]
    fn off_grid_momentum_rejected() {
        assert!(matches!(magnon_state_at(8, 0.3), Err(Error::OffGridMomentum { .. })));
        let m = magnon_state_at(8, PI / 2.0).unwrap();
        assert_eq!(m.label, "magnon_l2");
    }

    #[test]
    fn sprime_two_cancels_for_odd_half_length() {
        assert!(sprime_states(6).unwrap().1.is_none());
        let (s1, s2) = sprime_states(8).unwrap();
        let s2 = s2.unwrap();
        assert!(inner(&s1.vector, &s2.vector).norm() < 1e-14);
    }

    #[test]
    fn sprime_one_has_no_zero_spin() {
        let (s1, _) = sprime_states(4).unwrap();
        let chain = ChainSpec::periodic(4, 3).unwrap();
        for (i, z) in s1.vector.iter().enumerate() {
            if z.norm() > 0.0 {
                assert!(!chain.digits(i).contains(&spin_one_index(0)));
            }
        }
    }
}
