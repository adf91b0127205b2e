//! Collective spin operators in the maximally polarized sector.
//!
//! For N two-level emitters the collective dynamics closes inside the total
//! angular momentum sector S = N/2 of dimension N + 1. Basis ordering is
//! frozen to descending magnetization: index 0 is |m_z = +N/2> (fully
//! excited), index N is |m_z = -N/2> (fully de-excited). This makes `sz`
//! diagonal with entries N/2, N/2 - 1, ..., -N/2 and every module downstream
//! relies on that sign convention.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::linalg::{cr, dagger, identity, kron, IM};
use crate::{Error, Result};

/// Dense collective spin operators on a (possibly embedded) Hilbert space.
///
/// `n` is the number of emitters the set was built for; `dim` is the
/// dimension of the space the matrices act on, which is `n + 1` for a bare
/// set and larger for sets embedded into a product space.
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    pub n: usize,
    pub dim: usize,
    pub sx: Array2<C64>,
    pub sy: Array2<C64>,
    pub sz: Array2<C64>,
    pub splus: Array2<C64>,
    pub sminus: Array2<C64>,
}

impl SpinOperatorSet {
    /// Total spin quantum number S = N/2.
    pub fn total_spin(&self) -> f64 {
        self.n as f64 / 2.0
    }

    /// Casimir eigenvalue S(S+1).
    pub fn casimir(&self) -> f64 {
        let s = self.total_spin();
        s * (s + 1.0)
    }
}

/// Build the collective operators S_x, S_y, S_z, S_+/- for `n` emitters in
/// the maximally polarized sector (dimension n + 1, descending m_z basis).
pub fn collective_ops(n: usize) -> Result<SpinOperatorSet> {
    if n < 1 {
        return Err(Error::InvalidParams {
            field: "n",
            reason: "collective operators need at least one emitter".into(),
        });
    }
    let dim = n + 1;
    let s = n as f64 / 2.0;

    // S-|S,m> = sqrt(S(S+1) - m(m-1)) |S,m-1>; with m = S - k the target
    // state sits one row below in the descending-m_z ordering.
    let mut sminus = Array2::<C64>::zeros((dim, dim));
    for k in 0..n {
        let m = s - k as f64;
        sminus[[k + 1, k]] = cr((s * (s + 1.0) - m * (m - 1.0)).sqrt());
    }
    let splus = dagger(&sminus);
    let sx = (&splus + &sminus).mapv(|z| z * 0.5);
    let sy = (&splus - &sminus).mapv(|z| z * 0.5 * (-IM));
    let sz = Array2::from_diag(
        &(0..dim)
            .map(|k| cr(s - k as f64))
            .collect::<ndarray::Array1<C64>>(),
    );

    Ok(SpinOperatorSet {
        n,
        dim,
        sx,
        sy,
        sz,
        splus,
        sminus,
    })
}

/// Embed two operator sets into their product space: the first acts as
/// `op (x) 1`, the second as `1 (x) op`. Joint dimension is
/// `(n_a + 1) * (n_b + 1)`; operators of different subsystems commute.
pub fn tensor_embed(
    ops_a: &SpinOperatorSet,
    ops_b: &SpinOperatorSet,
) -> (SpinOperatorSet, SpinOperatorSet) {
    let ida = identity(ops_a.dim);
    let idb = identity(ops_b.dim);
    let joint = ops_a.dim * ops_b.dim;

    let embed_a = SpinOperatorSet {
        n: ops_a.n,
        dim: joint,
        sx: kron(&ops_a.sx, &idb),
        sy: kron(&ops_a.sy, &idb),
        sz: kron(&ops_a.sz, &idb),
        splus: kron(&ops_a.splus, &idb),
        sminus: kron(&ops_a.sminus, &idb),
    };
    let embed_b = SpinOperatorSet {
        n: ops_b.n,
        dim: joint,
        sx: kron(&ida, &ops_b.sx),
        sy: kron(&ida, &ops_b.sy),
        sz: kron(&ida, &ops_b.sz),
        splus: kron(&ida, &ops_b.splus),
        sminus: kron(&ida, &ops_b.sminus),
    };
    (embed_a, embed_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use ndarray::Array2;

    fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
        a.dot(b) - b.dot(a)
    }

    fn check_algebra(ops: &SpinOperatorSet, tol: f64) {
        let i_sz = ops.sz.mapv(|z| z * IM);
        let i_sx = ops.sx.mapv(|z| z * IM);
        let i_sy = ops.sy.mapv(|z| z * IM);
        assert!(max_abs_diff(&commutator(&ops.sx, &ops.sy), &i_sz) < tol);
        assert!(max_abs_diff(&commutator(&ops.sy, &ops.sz), &i_sx) < tol);
        assert!(max_abs_diff(&commutator(&ops.sz, &ops.sx), &i_sy) < tol);
    }

    fn check_casimir(ops: &SpinOperatorSet, tol: f64) {
        let s2 = ops.sx.dot(&ops.sx) + ops.sy.dot(&ops.sy) + ops.sz.dot(&ops.sz);
        let expected = identity(ops.dim).mapv(|z| z * cr(ops.casimir()));
        assert!(max_abs_diff(&s2, &expected) < tol);
    }

    #[test]
    fn rejects_zero_emitters() {
        assert!(collective_ops(0).is_err());
    }

    #[test]
    fn single_spin_half() {
        let ops = collective_ops(1).unwrap();
        assert_eq!(ops.dim, 2);
        assert_eq!(ops.sz[[0, 0]], cr(0.5));
        assert_eq!(ops.sz[[1, 1]], cr(-0.5));
        // Raising in the descending-m_z basis: |down> (index 1) -> |up> (index 0).
        assert_eq!(ops.splus[[0, 1]], cr(1.0));
        assert_eq!(ops.splus[[0, 0]], cr(0.0));
        assert_eq!(ops.splus[[1, 0]], cr(0.0));
        assert_eq!(ops.splus[[1, 1]], cr(0.0));
    }

    #[test]
    fn ladder_ops_match_cartesian_combinations() {
        for n in [1, 3, 6] {
            let ops = collective_ops(n).unwrap();
            let recon_plus = &ops.sx + &ops.sy.mapv(|z| z * IM);
            let recon_minus = &ops.sx - &ops.sy.mapv(|z| z * IM);
            assert_eq!(ops.splus, recon_plus);
            assert_eq!(ops.sminus, recon_minus);
            assert!(max_abs_diff(&dagger(&ops.sminus), &ops.splus) < 1e-15);
        }
    }

    #[test]
    fn commutators_and_casimir_hold_up_to_n_12() {
        for n in 1..=12 {
            let ops = collective_ops(n).unwrap();
            check_algebra(&ops, 1e-12);
            check_casimir(&ops, 1e-12);
        }
    }

    #[test]
    fn anticommutator_trace_identity_n4() {
        // S-S+ + S+S- + 2 Sz^2 = 2 S(S+1) 1, so its trace is 2 S(S+1) (N+1) = 60.
        let ops = collective_ops(4).unwrap();
        let lhs = ops.sminus.dot(&ops.splus)
            + ops.splus.dot(&ops.sminus)
            + ops.sz.dot(&ops.sz).mapv(|z| z * 2.0);
        let tr: C64 = lhs.diag().iter().sum();
        assert!((tr - cr(60.0)).norm() < 1e-10);
    }

    #[test]
    fn embedded_sets_commute_and_keep_casimir() {
        let a = collective_ops(1).unwrap();
        let b = collective_ops(1).unwrap();
        let (ea, eb) = tensor_embed(&a, &b);
        assert_eq!(ea.dim, 4);
        let zero = Array2::<C64>::zeros((4, 4));
        assert!(max_abs_diff(&commutator(&ea.sx, &eb.sy), &zero) < 1e-15);
        check_algebra(&ea, 1e-12);
        check_algebra(&eb, 1e-12);
        check_casimir(&ea, 1e-12);
        check_casimir(&eb, 1e-12);
    }

    #[test]
    fn embedded_dimensions() {
        let a = collective_ops(1).unwrap();
        let b = collective_ops(2).unwrap();
        let (ea, eb) = tensor_embed(&a, &b);
        assert_eq!(ea.dim, 6);
        assert_eq!(eb.dim, 6);
    }

    #[test]
    fn joint_magnetization_spectrum_n2_n2() {
        // Sz^A + Sz^B on two N=2 ensembles is diagonal; brute-force its
        // spectrum and compare against {-2,-1,0,1,2} with multiplicities
        // {1,2,3,2,1}.
        let a = collective_ops(2).unwrap();
        let b = collective_ops(2).unwrap();
        let (ea, eb) = tensor_embed(&a, &b);
        let total = &ea.sz + &eb.sz;
        let mut eigs: Vec<f64> = total.diag().iter().map(|z| z.re).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let expected = [-2.0, -1.0, -1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 2.0];
        assert_eq!(eigs.len(), expected.len());
        for (got, want) in eigs.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-14);
        }
    }
}
