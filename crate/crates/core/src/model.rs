//! Shared domain types and the per-user SINR arithmetic.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::alternating::SolverParams;
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::units;
use crate::{CMatrix, CVector};

/// Antenna gains in dBi per node class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaGains {
    pub bs_dbi: f64,
    pub ris_dbi: f64,
    pub user_dbi: f64,
}

impl Default for AntennaGains {
    fn default() -> Self {
        Self {
            bs_dbi: 5.0,
            ris_dbi: 0.0,
            user_dbi: 0.0,
        }
    }
}

/// Planar placement of the BS (origin), the RIS and the user region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub ris_position: [f64; 2],
    /// Exclusion radius around the BS, metres.
    pub r_min: f64,
    /// Coverage radius around the BS, metres.
    pub r_max: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            ris_position: [0.5, 0.5],
            r_min: 10.0,
            r_max: 70.0,
        }
    }
}

/// Every constant of one scenario. Powers are in watts, SINRs linear.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// BS antennas.
    pub m: usize,
    /// RIS elements.
    pub n: usize,
    /// Users.
    pub k: usize,
    /// Reflection amplitude, in (0, 1].
    pub alpha: f64,
    /// Noise power, watts.
    pub sigma2: f64,
    /// Rician factor of the BS-RIS link.
    pub kappa: f64,
    /// Per-user maximum transmit power, watts.
    pub p_max: f64,
    /// SAR per unit transmit power (W/kg per W). One entry broadcasts to all users.
    pub sar_ref: Vec<f64>,
    /// EMF exposure cap (W/kg). One entry broadcasts to all users.
    pub emf_max: Vec<f64>,
    pub gains: AntennaGains,
    pub geometry: Geometry,
    pub bandwidth_hz: f64,
    /// BS antenna spacing in wavelengths.
    pub d_bs_over_lambda: f64,
    /// RIS element spacing in wavelengths.
    pub d_ris_over_lambda: f64,
    /// Exponential correlation coefficient between adjacent RIS elements;
    /// 0 means uncorrelated elements.
    pub ris_correlation: f64,
    pub solver: SolverParams,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let bandwidth_hz = 1e8;
        Self {
            m: 12,
            n: 24,
            k: 6,
            alpha: 1.0,
            sigma2: units::noise_power(bandwidth_hz).expect("positive bandwidth"),
            kappa: 10.0,
            p_max: 0.5,
            sar_ref: vec![63e-4],
            emf_max: vec![0.0029],
            gains: AntennaGains::default(),
            geometry: Geometry::default(),
            bandwidth_hz,
            d_bs_over_lambda: 0.5,
            d_ris_over_lambda: 0.5,
            ris_correlation: 0.0,
            solver: SolverParams::default(),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m == 0 || self.n == 0 || self.k == 0 {
            return bad(format!(
                "antenna, element and user counts must be >= 1 (M={}, N={}, K={})",
                self.m, self.n, self.k
            ));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0,1], got {}", self.alpha));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return bad(format!("noise power must be positive, got {}", self.sigma2));
        }
        if !(self.p_max > 0.0) || !self.p_max.is_finite() {
            return bad(format!("p_max must be positive, got {}", self.p_max));
        }
        if !(self.kappa >= 0.0) {
            return bad(format!("kappa must be non-negative, got {}", self.kappa));
        }
        if !(self.geometry.r_min >= 0.0 && self.geometry.r_min < self.geometry.r_max) {
            return bad(format!(
                "need 0 <= r_min < r_max, got r_min={} r_max={}",
                self.geometry.r_min, self.geometry.r_max
            ));
        }
        if !(self.bandwidth_hz > 0.0) {
            return bad(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_hz
            ));
        }
        if !(self.d_bs_over_lambda > 0.0 && self.d_ris_over_lambda > 0.0) {
            return bad("element spacings must be positive".into());
        }
        if !(0.0..1.0).contains(&self.ris_correlation) {
            return bad(format!(
                "ris_correlation must lie in [0,1), got {}",
                self.ris_correlation
            ));
        }
        for (name, v) in [("sar_ref", &self.sar_ref), ("emf_max", &self.emf_max)] {
            if v.len() != 1 && v.len() != self.k {
                return bad(format!(
                    "{name} needs 1 or K={} entries, got {}",
                    self.k,
                    v.len()
                ));
            }
        }
        if self.sar_ref.iter().any(|&s| !(s > 0.0)) {
            return bad("sar_ref entries must be positive".into());
        }
        if self.emf_max.iter().any(|&e| !(e > 0.0)) {
            return bad("emf_max entries must be positive".into());
        }
        self.solver.validate()
    }

    pub fn sar_ref_for(&self, user: usize) -> f64 {
        broadcast(&self.sar_ref, user)
    }

    pub fn emf_max_for(&self, user: usize) -> f64 {
        broadcast(&self.emf_max, user)
    }

    /// Per-user SAR values expanded to length K.
    pub fn sar_ref_per_user(&self) -> Vec<f64> {
        (0..self.k).map(|u| self.sar_ref_for(u)).collect()
    }

    pub fn emf_max_per_user(&self) -> Vec<f64> {
        (0..self.k).map(|u| self.emf_max_for(u)).collect()
    }
}

fn broadcast(v: &[f64], i: usize) -> f64 {
    if v.len() == 1 {
        v[0]
    } else {
        v[i]
    }
}

/// RIS reflection coefficients `phi[n] = exp(j theta[n])` with a common amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    theta: Vec<f64>,
    phi: Vec<Complex64>,
    alpha: f64,
}

impl PhaseVector {
    /// Builds the vector from angles; angles are wrapped into `[0, 2π)`.
    pub fn from_angles(theta: &[f64], alpha: f64) -> Self {
        let theta: Vec<f64> = theta.iter().map(|&t| wrap_angle(t)).collect();
        let phi = theta
            .iter()
            .map(|&t| Complex64::from_polar(1.0, t))
            .collect();
        Self { theta, phi, alpha }
    }

    /// Builds the vector from complex coefficients by keeping only their phase.
    /// A zero coefficient maps to phase 0.
    pub fn from_coefficients(coeffs: &[Complex64], alpha: f64) -> Self {
        let theta: Vec<f64> = coeffs
            .iter()
            .map(|z| if z.norm() > 0.0 { z.arg() } else { 0.0 })
            .collect();
        Self::from_angles(&theta, alpha)
    }

    pub fn uniform<R: rand::Rng + ?Sized>(n: usize, alpha: f64, rng: &mut R) -> Self {
        let theta: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * TAU).collect();
        Self::from_angles(&theta, alpha)
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self) -> &[Complex64] {
        &self.phi
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `α·[phi_1, …, phi_N]ᵀ`
    pub fn stacked(&self) -> CVector {
        CVector::from_iterator(self.phi.len(), self.phi.iter().map(|p| p * self.alpha))
    }

    /// Same phases with the amplitude replaced.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }
}

pub fn wrap_angle(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Per-user transmit powers, watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub p: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(p: Vec<f64>) -> Self {
        Self { p }
    }
}

/// Receive combiners, one length-M vector per user.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub beta: Vec<CVector>,
}

/// Which step of the alternating loop produced a trace entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Init,
    Beamforming,
    Power,
    Phase,
}

impl Stage {
    pub fn label(self) -> &'static str {
        match self {
            Stage::Init => "init",
            Stage::Beamforming => "bf",
            Stage::Power => "power",
            Stage::Phase => "phase",
        }
    }
}

/// Linear per-user SINRs and their minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    pub per_user: Vec<f64>,
    pub minimum: f64,
    pub stage_trace: Vec<(Stage, f64)>,
}

impl SinrReport {
    pub fn from_per_user(per_user: Vec<f64>) -> Self {
        let minimum = per_user.iter().copied().fold(f64::INFINITY, f64::min);
        let minimum = if per_user.is_empty() { 0.0 } else { minimum };
        Self {
            per_user,
            minimum,
            stage_trace: Vec::new(),
        }
    }
}

/// Columns `g_k = H1 · R^{1/2} · diag(α·phi) · h2[k]`, an M×K matrix.
pub fn effective_channel(chan: &ChannelRealization, phase: &PhaseVector) -> Result<CMatrix> {
    let n = chan.ris_elements();
    if phase.len() != n {
        return Err(Error::Dimension(format!(
            "phase vector has {} entries but the RIS has {n} elements",
            phase.len()
        )));
    }
    let phi = phase.stacked();
    let k = chan.users();
    let mut reflected = CMatrix::zeros(n, k);
    for (u, h) in chan.h2().iter().enumerate() {
        for e in 0..n {
            reflected[(e, u)] = phi[e] * h[e];
        }
    }
    Ok(chan.cascade() * reflected)
}

/// Gain matrix `|β_kᴴ g_i|²` indexed `[k][i]`.
pub(crate) fn cross_gains(g: &CMatrix, bf: &Beamformer) -> Vec<Vec<f64>> {
    bf.beta
        .iter()
        .map(|b| {
            let row = b.adjoint() * g;
            row.iter().map(|z| z.norm_sqr()).collect()
        })
        .collect()
}

/// `SINR_k = p_k|β_kᴴg_k|² / (Σ_{i≠k} p_i|β_kᴴg_i|² + σ²‖β_k‖²)`.
///
/// The norm of every combiner is measured rather than assumed; a zero or
/// non-finite combiner is rejected.
pub fn sinr_per_user(
    chan: &ChannelRealization,
    phase: &PhaseVector,
    power: &PowerAllocation,
    bf: &Beamformer,
    sigma2: f64,
) -> Result<SinrReport> {
    if !(sigma2 > 0.0) {
        return Err(Error::Config(format!(
            "noise power must be positive, got {sigma2}"
        )));
    }
    let k = chan.users();
    if power.p.len() != k || bf.beta.len() != k {
        return Err(Error::Dimension(format!(
            "{k} users but {} powers and {} beamformers",
            power.p.len(),
            bf.beta.len()
        )));
    }
    if bf.beta.iter().any(|b| b.len() != chan.antennas()) {
        return Err(Error::Dimension(
            "beamformer length differs from antenna count".into(),
        ));
    }
    let g = effective_channel(chan, phase)?;
    let norms: Vec<f64> = bf.beta.iter().map(|b| b.norm_squared()).collect();
    if norms.iter().any(|&n| !(n > 0.0) || !n.is_finite()) {
        return Err(Error::Numeric(
            "beamformer with zero or non-finite norm".into(),
        ));
    }
    let f = cross_gains(&g, bf);
    Ok(SinrReport::from_per_user(sinr_from_gains(
        &f, &norms, &power.p, sigma2,
    )))
}

pub(crate) fn sinr_from_gains(
    f: &[Vec<f64>],
    beta_norm2: &[f64],
    p: &[f64],
    sigma2: f64,
) -> Vec<f64> {
    (0..p.len())
        .map(|k| {
            let interference: f64 = (0..p.len())
                .filter(|&i| i != k)
                .map(|i| p[i] * f[k][i])
                .sum();
            p[k] * f[k][k] / (interference + sigma2 * beta_norm2[k])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_normal, complex_normal_vector};
    use crate::testutil::random_instance;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar_channel(h1: Complex64, h2: Complex64) -> ChannelRealization {
        ChannelRealization::new(
            CMatrix::from_element(1, 1, h1),
            CMatrix::identity(1, 1),
            vec![CVector::from_element(1, h2)],
            vec![[20.0, 20.0]],
        )
        .unwrap()
    }

    #[test]
    fn identity_case() {
        let chan = scalar_channel(c(1.0, 0.0), c(1.0, 0.0));
        let g = effective_channel(&chan, &PhaseVector::from_angles(&[0.0], 1.0)).unwrap();
        assert_relative_eq!(g[(0, 0)].re, 1.0);
        assert_relative_eq!(g[(0, 0)].im, 0.0);
        let half = effective_channel(&chan, &PhaseVector::from_angles(&[0.0], 0.5)).unwrap();
        assert_relative_eq!(half[(0, 0)].re, 0.5);
    }

    #[test]
    fn matches_direct_triple_product() {
        let (chan, phase) = random_instance(3, 2, 2, 11);
        let g = effective_channel(&chan, &phase).unwrap();
        // independent route: explicit loops over H1, R^{1/2}, diag(Φ), h2
        for k in 0..2 {
            for row in 0..3 {
                let mut acc = c(0.0, 0.0);
                for a in 0..2 {
                    for b in 0..2 {
                        acc += chan.h1()[(row, a)]
                            * chan.ris_corr_sqrt()[(a, b)]
                            * phase.phi()[b]
                            * phase.alpha()
                            * chan.h2()[k][b];
                    }
                }
                assert!((acc - g[(row, k)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (chan, _) = random_instance(3, 2, 2, 1);
        let wrong = PhaseVector::from_angles(&[0.0; 3], 1.0);
        assert!(matches!(
            effective_channel(&chan, &wrong),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn single_user_without_interference() {
        let chan = scalar_channel(c(1.0, 0.0), c(1.0, 0.0));
        let phase = PhaseVector::from_angles(&[0.3], 1.0);
        let bf = Beamformer {
            beta: vec![CVector::from_element(1, c(1.0, 0.0))],
        };
        let rep = sinr_per_user(&chan, &phase, &PowerAllocation::new(vec![1.0]), &bf, 0.5).unwrap();
        assert_relative_eq!(rep.per_user[0], 2.0, max_relative = 1e-15);
        assert_relative_eq!(rep.minimum, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn zero_power_gives_zero_sinr() {
        let (chan, phase) = random_instance(3, 4, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bf = Beamformer {
            beta: (0..3)
                .map(|_| complex_normal_vector(3, &mut rng).normalize())
                .collect(),
        };
        let rep =
            sinr_per_user(&chan, &phase, &PowerAllocation::new(vec![0.0; 3]), &bf, 1.0).unwrap();
        assert!(rep.per_user.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn two_user_scalar_oracle() {
        // M = N = 1 so that every β_kᴴg_i is a product of scalars
        let h1 = c(0.7, -0.2);
        let h2 = [c(1.1, 0.4), c(-0.3, 0.9)];
        let chan = ChannelRealization::new(
            CMatrix::from_element(1, 1, h1),
            CMatrix::identity(1, 1),
            h2.iter().map(|&h| CVector::from_element(1, h)).collect(),
            vec![[20.0, 0.0]; 2],
        )
        .unwrap();
        let theta = 0.4;
        let alpha = 0.9;
        let phase = PhaseVector::from_angles(&[theta], alpha);
        let betas = [c(0.6, 0.8), c(-1.0, 0.0)];
        let bf = Beamformer {
            beta: betas.iter().map(|&b| CVector::from_element(1, b)).collect(),
        };
        let p = [0.3, 0.45];
        let sigma2 = 0.05;
        let rep = sinr_per_user(
            &chan,
            &phase,
            &PowerAllocation::new(p.to_vec()),
            &bf,
            sigma2,
        )
        .unwrap();
        let phi = Complex64::from_polar(alpha, theta);
        for k in 0..2 {
            let gain = |i: usize| (betas[k].conj() * h1 * phi * h2[i]).norm_sqr();
            let other = 1 - k;
            let expect = p[k] * gain(k) / (p[other] * gain(other) + sigma2 * betas[k].norm_sqr());
            assert_relative_eq!(rep.per_user[k], expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn nonpositive_noise_rejected() {
        let chan = scalar_channel(c(1.0, 0.0), c(1.0, 0.0));
        let phase = PhaseVector::from_angles(&[0.0], 1.0);
        let bf = Beamformer {
            beta: vec![CVector::from_element(1, c(1.0, 0.0))],
        };
        let err = sinr_per_user(&chan, &phase, &PowerAllocation::new(vec![1.0]), &bf, 0.0);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn zero_beamformer_rejected() {
        let chan = scalar_channel(c(1.0, 0.0), c(1.0, 0.0));
        let phase = PhaseVector::from_angles(&[0.0], 1.0);
        let bf = Beamformer {
            beta: vec![CVector::zeros(1)],
        };
        assert!(sinr_per_user(&chan, &phase, &PowerAllocation::new(vec![1.0]), &bf, 1.0).is_err());
    }

    #[test]
    fn angles_wrap_into_range() {
        let p = PhaseVector::from_angles(&[-0.5, 7.0, TAU, -1e-300], 1.0);
        assert!(p.theta().iter().all(|&t| (0.0..TAU).contains(&t)));
        for z in p.phi() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn config_defaults_are_valid() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.p_max, 0.5);
        assert_eq!(cfg.kappa, 10.0);
    }

    #[test]
    fn config_rejects_alpha_out_of_range() {
        let cfg = SystemConfig {
            alpha: 1.5,
            ..SystemConfig::default()
        };
        match cfg.validate() {
            Err(Error::Config(msg)) => assert!(msg.contains("(0,1]")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn single_user_sinr_linear_in_power(seed in any::<u64>(), scale in 0.01f64..100.0) {
            let (chan, phase) = random_instance(3, 4, 1, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let bf = Beamformer { beta: vec![complex_normal_vector(3, &mut rng).normalize()] };
            let a = sinr_per_user(&chan, &phase, &PowerAllocation::new(vec![0.2]), &bf, 0.1).unwrap();
            let b = sinr_per_user(&chan, &phase, &PowerAllocation::new(vec![0.2 * scale]), &bf, 0.1).unwrap();
            prop_assert!((b.per_user[0] - scale * a.per_user[0]).abs() <= 1e-12 * b.per_user[0].max(1e-300));
        }

        #[test]
        fn sinr_invariant_to_combiner_phase(seed in any::<u64>(), psi in 0.0f64..TAU) {
            let (chan, phase) = random_instance(4, 3, 3, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
            let beta: Vec<CVector> = (0..3).map(|_| complex_normal_vector(4, &mut rng).normalize()).collect();
            let rot = Beamformer { beta: beta.iter().map(|b| b * Complex64::from_polar(1.0, psi)).collect() };
            let bf = Beamformer { beta };
            let p = PowerAllocation::new(vec![0.3, 0.1, 0.7]);
            let a = sinr_per_user(&chan, &phase, &p, &bf, 0.2).unwrap();
            let b = sinr_per_user(&chan, &phase, &p, &rot, 0.2).unwrap();
            for (x, y) in a.per_user.iter().zip(&b.per_user) {
                prop_assert!((x - y).abs() <= 1e-12 * x.max(1e-300));
            }
            let min = a.per_user.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(a.minimum, min);
        }

        #[test]
        fn effective_channel_linear_in_user_channel_and_alpha(seed in any::<u64>(), s in -3.0f64..3.0, alpha in 0.05f64..1.0) {
            let (chan, phase) = random_instance(3, 4, 2, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
            let w = complex_normal(&mut rng) * s;
            let scaled_h2: Vec<CVector> = chan.h2().iter().map(|h| h * w).collect();
            let scaled = ChannelRealization::new(
                chan.h1().clone(), chan.ris_corr_sqrt().clone(), scaled_h2, chan.user_positions().to_vec()).unwrap();
            let g = effective_channel(&chan, &phase).unwrap();
            let gs = effective_channel(&scaled, &phase).unwrap();
            prop_assert!((&g * w - &gs).norm() <= 1e-12 * (1.0 + gs.norm()));
            let ga = effective_channel(&chan, &phase.with_alpha(alpha)).unwrap();
            prop_assert!((&g * Complex64::from(alpha / phase.alpha()) - &ga).norm() <= 1e-12 * (1.0 + g.norm()));
        }
    }
}
