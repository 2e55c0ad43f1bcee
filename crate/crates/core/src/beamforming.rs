//! Closed-form receive combining.
//!
//! For fixed powers and phases the SINR of user `k` is a generalized
//! Rayleigh quotient in `β_k`, maximized by
//! `β_k ∝ (Σ_k + σ²I)⁻¹ g_k` with `Σ_k = Σ_{i≠k} p_i g_i g_iᴴ`. The
//! maximum is `p_k g_kᴴ (Σ_k + σ²I)⁻¹ g_k`.

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linalg::{all_finite, hpd_solve};
use crate::model::{effective_channel, Beamformer, PhaseVector, PowerAllocation, SinrReport};
use crate::{CMatrix, CVector};

/// Per-user solves `x_k = (Σ_k + σ²I)⁻¹ g_k` and `ρ_k = p_k g_kᴴ x_k`.
#[derive(Debug, Clone)]
pub struct WhitenedSolve {
    pub x: Vec<CVector>,
    pub rho: Vec<f64>,
}

/// Solves every user's interference-plus-noise system for the effective
/// channel `g` (M×K). `Σ_k` is obtained from the shared Gram sum by a
/// rank-one downdate.
pub fn whitened_solve(g: &CMatrix, p: &[f64], sigma2: f64) -> Result<WhitenedSolve> {
    if !(sigma2 > 0.0) {
        return Err(Error::Config(format!(
            "noise power must be positive, got {sigma2}"
        )));
    }
    if g.ncols() != p.len() {
        return Err(Error::Dimension(format!(
            "{} channel columns, {} powers",
            g.ncols(),
            p.len()
        )));
    }
    if !all_finite(g) {
        return Err(Error::Numeric("non-finite effective channel".into()));
    }
    let m = g.nrows();
    let mut gram = CMatrix::zeros(m, m);
    for (k, col) in g.column_iter().enumerate() {
        gram.gerc(Complex64::from(p[k]), &col, &col, Complex64::from(1.0));
    }
    let mut x = Vec::with_capacity(p.len());
    let mut rho = Vec::with_capacity(p.len());
    for (k, col) in g.column_iter().enumerate() {
        let gk: CVector = col.into_owned();
        let mut a = gram.clone();
        a.gerc(Complex64::from(-p[k]), &gk, &gk, Complex64::from(1.0));
        for d in 0..m {
            // keep the diagonal exactly real after the downdate
            a[(d, d)] = Complex64::new(a[(d, d)].re + sigma2, 0.0);
        }
        let xk = hpd_solve(a, &gk)?;
        rho.push(p[k] * gk.dotc(&xk).re.max(0.0));
        x.push(xk);
    }
    Ok(WhitenedSolve { x, rho })
}

/// Unit-norm optimal combiners. A user whose solve vanishes (zero channel)
/// receives the first standard basis vector.
pub fn optimal_beamformers(
    chan: &ChannelRealization,
    phase: &PhaseVector,
    power: &PowerAllocation,
    sigma2: f64,
) -> Result<Beamformer> {
    let g = effective_channel(chan, phase)?;
    let solve = whitened_solve(&g, &power.p, sigma2)?;
    Ok(beamformers_from_solve(&solve, g.nrows()))
}

pub(crate) fn beamformers_from_solve(solve: &WhitenedSolve, m: usize) -> Beamformer {
    let beta = solve
        .x
        .iter()
        .map(|x| {
            let norm = x.norm();
            if norm > 0.0 && norm.is_finite() {
                x.unscale(norm)
            } else {
                let mut e = CVector::zeros(m);
                e[0] = Complex64::from(1.0);
                e
            }
        })
        .collect();
    Beamformer { beta }
}

/// SINRs attained by the optimal combiners, from the closed form.
pub fn post_bf_sinr(
    chan: &ChannelRealization,
    phase: &PhaseVector,
    power: &PowerAllocation,
    sigma2: f64,
) -> Result<SinrReport> {
    let g = effective_channel(chan, phase)?;
    Ok(SinrReport::from_per_user(
        whitened_solve(&g, &power.p, sigma2)?.rho,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_normal_matrix, complex_normal_vector, hermitian_eigen};
    use crate::model::sinr_per_user;
    use crate::testutil::random_instance;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn powers(k: usize, seed: u64) -> PowerAllocation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PowerAllocation::new(
            (0..k)
                .map(|_| 0.05 + rand::Rng::random::<f64>(&mut rng))
                .collect(),
        )
    }

    /// Dominant generalized eigenvector of `(g gᴴ, Σ_k + σ²I)` by explicit
    /// whitening with an eigen-decomposition (no Cholesky, no solve).
    fn rayleigh_oracle(g: &CMatrix, p: &[f64], sigma2: f64, k: usize) -> (f64, CVector) {
        let m = g.nrows();
        let mut b = CMatrix::identity(m, m) * Complex64::from(sigma2);
        for i in (0..p.len()).filter(|&i| i != k) {
            let gi = g.column(i);
            b += gi * gi.adjoint() * Complex64::from(p[i]);
        }
        let (vals, vecs) = hermitian_eigen(&b);
        let inv_sqrt = &vecs
            * CMatrix::from_diagonal(&CVector::from_iterator(
                m,
                vals.iter().map(|v| Complex64::from(1.0 / v.sqrt())),
            ))
            * vecs.adjoint();
        let gk = g.column(k);
        let a = &inv_sqrt * gk * gk.adjoint() * &inv_sqrt * Complex64::from(p[k]);
        let (avals, avecs) = hermitian_eigen(&a);
        let top = avecs.column(m - 1).into_owned();
        let beta = (&inv_sqrt * top).normalize();
        (avals[m - 1], beta)
    }

    #[test]
    fn single_user_is_matched_filter() {
        let (chan, phase) = random_instance(4, 3, 1, 1);
        let g = effective_channel(&chan, &phase).unwrap();
        let bf = optimal_beamformers(&chan, &phase, &PowerAllocation::new(vec![0.7]), 0.3).unwrap();
        let mf = g.column(0).normalize();
        // equal up to a common phase
        assert!((bf.beta[0].dotc(&mf).norm() - 1.0).abs() < 1e-12);
        let rep = post_bf_sinr(&chan, &phase, &PowerAllocation::new(vec![0.7]), 0.3).unwrap();
        assert!(
            (rep.per_user[0] - 0.7 * g.column(0).norm_squared() / 0.3).abs()
                < 1e-12 * rep.per_user[0]
        );
    }

    #[test]
    fn matches_generalized_eigen_oracle() {
        let (chan, phase) = random_instance(4, 5, 3, 2);
        let p = powers(3, 2);
        let sigma2 = 0.2;
        let g = effective_channel(&chan, &phase).unwrap();
        let bf = optimal_beamformers(&chan, &phase, &p, sigma2).unwrap();
        let rep = sinr_per_user(&chan, &phase, &p, &bf, sigma2).unwrap();
        for k in 0..3 {
            let (best, beta) = rayleigh_oracle(&g, &p.p, sigma2, k);
            assert!((rep.per_user[k] - best).abs() <= 1e-9 * best);
            assert!((bf.beta[k].norm() - 1.0).abs() < 1e-10);
            assert!((bf.beta[k].dotc(&beta).norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_form_equals_direct_sinr() {
        for seed in 0..20 {
            let (chan, phase) = random_instance(3, 4, 3, 100 + seed);
            let p = powers(3, seed);
            let bf = optimal_beamformers(&chan, &phase, &p, 0.05).unwrap();
            let direct = sinr_per_user(&chan, &phase, &p, &bf, 0.05).unwrap();
            let closed = post_bf_sinr(&chan, &phase, &p, 0.05).unwrap();
            for (a, b) in direct.per_user.iter().zip(&closed.per_user) {
                assert!((a - b).abs() <= 1e-9 * b);
            }
        }
    }

    #[test]
    fn linear_in_own_power() {
        let (chan, phase) = random_instance(3, 4, 3, 3);
        let mut p = powers(3, 3);
        let before = post_bf_sinr(&chan, &phase, &p, 0.1).unwrap();
        p.p[1] *= 2.0;
        let after = post_bf_sinr(&chan, &phase, &p, 0.1).unwrap();
        assert!((after.per_user[1] - 2.0 * before.per_user[1]).abs() <= 1e-12 * after.per_user[1]);
    }

    #[test]
    fn zero_channel_gets_basis_vector() {
        let (chan, _) = random_instance(3, 2, 2, 4);
        let h2 = vec![CVector::zeros(2), chan.h2()[1].clone()];
        let chan = ChannelRealization::new(
            chan.h1().clone(),
            chan.ris_corr_sqrt().clone(),
            h2,
            vec![[1.0, 1.0]; 2],
        )
        .unwrap();
        let phase = PhaseVector::from_angles(&[0.0, 0.0], 1.0);
        let bf =
            optimal_beamformers(&chan, &phase, &PowerAllocation::new(vec![1.0, 1.0]), 0.1).unwrap();
        assert_eq!(bf.beta[0][0], Complex64::from(1.0));
        assert!((bf.beta[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_channel_rejected() {
        let mut g = CMatrix::zeros(2, 1);
        g[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            whitened_solve(&g, &[1.0], 1.0),
            Err(Error::Numeric(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn no_unit_vector_beats_optimum(seed in any::<u64>()) {
            let (chan, phase) = random_instance(4, 3, 3, seed);
            let p = powers(3, seed);
            let best = post_bf_sinr(&chan, &phase, &p, 0.3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let probe = Beamformer { beta: (0..3).map(|_| complex_normal_vector(4, &mut rng).normalize()).collect() };
            let rep = sinr_per_user(&chan, &phase, &p, &probe, 0.3).unwrap();
            for k in 0..3 {
                prop_assert!(rep.per_user[k] <= best.per_user[k] * (1.0 + 1e-9));
            }
        }

        #[test]
        fn other_combiners_do_not_matter(seed in any::<u64>()) {
            let (chan, phase) = random_instance(4, 3, 3, seed);
            let p = powers(3, seed);
            let mut bf = optimal_beamformers(&chan, &phase, &p, 0.3).unwrap();
            let a = sinr_per_user(&chan, &phase, &p, &bf, 0.3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
            bf.beta[2] = complex_normal_vector(4, &mut rng).normalize();
            let b = sinr_per_user(&chan, &phase, &p, &bf, 0.3).unwrap();
            prop_assert_eq!(a.per_user[0], b.per_user[0]);
            prop_assert_eq!(a.per_user[1], b.per_user[1]);
        }

        #[test]
        fn invariant_under_common_unitary(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = complex_normal_matrix(4, 3, &mut rng);
            let q = complex_normal_matrix(4, 4, &mut rng).qr().q();
            let p = powers(3, seed).p;
            let a = whitened_solve(&g, &p, 0.4).unwrap().rho;
            let b = whitened_solve(&(q * &g), &p, 0.4).unwrap().rho;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-10 * x.max(1e-300));
            }
        }
    }
}
