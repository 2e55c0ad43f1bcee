//! SINR as a ratio of quadratic forms in the stacked RIS vector.

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::model::{Beamformer, PhaseVector, PowerAllocation};
use crate::power::GainTable;
use crate::{CMatrix, CVector};

/// For fixed combiners, `β_kᴴ g_i = b_{k,i}ᴴ Φ_vec` with
/// `b_{k,i}ᴴ = β_kᴴ H1 R^{1/2} diag(h_{2,i})`, so
/// `SINR_k = p_k |b_{k,k}ᴴΦ|² / (Σ_{i≠k} p_i |b_{k,i}ᴴΦ|² + σ̃_k²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFormSet {
    // cross[k][i] = b_{k,i}
    cross: Vec<Vec<CVector>>,
    sigma_tilde2: Vec<f64>,
    power: Vec<f64>,
}

pub fn build_quadratic_forms(
    chan: &ChannelRealization,
    bf: &Beamformer,
    power: &PowerAllocation,
    sigma2: f64,
) -> Result<QuadraticFormSet> {
    let k = chan.users();
    if bf.beta.len() != k || power.p.len() != k {
        return Err(Error::Dimension(format!(
            "{k} users, {} beamformers, {} powers",
            bf.beta.len(),
            power.p.len()
        )));
    }
    let cascade_h = chan.cascade().adjoint();
    let cross = bf
        .beta
        .iter()
        .map(|beta| {
            // (H1 R^{1/2})ᴴ β_k, shared by all b_{k,·}
            let w: CVector = &cascade_h * beta;
            chan.h2()
                .iter()
                .map(|h| h.conjugate().component_mul(&w))
                .collect()
        })
        .collect();
    let sigma_tilde2 = bf.beta.iter().map(|b| sigma2 * b.norm_squared()).collect();
    Ok(QuadraticFormSet {
        cross,
        sigma_tilde2,
        power: power.p.clone(),
    })
}

impl QuadraticFormSet {
    pub fn users(&self) -> usize {
        self.power.len()
    }

    pub fn elements(&self) -> usize {
        self.cross
            .first()
            .and_then(|row| row.first())
            .map_or(0, |b| b.len())
    }

    /// `b_k = b_{k,k}`, the direct-link vector of user `k`.
    pub fn b(&self, k: usize) -> &CVector {
        &self.cross[k][k]
    }

    /// `b_{k,i}`: user `i`'s signal as seen through combiner `k`.
    pub fn cross(&self, k: usize, i: usize) -> &CVector {
        &self.cross[k][i]
    }

    /// `R_{k,i} = b_{k,i} b_{k,i}ᴴ`.
    pub fn r(&self, k: usize, i: usize) -> CMatrix {
        let b = &self.cross[k][i];
        b * b.adjoint()
    }

    pub fn sigma_tilde2(&self) -> &[f64] {
        &self.sigma_tilde2
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    /// Per-user SINR from the projections `|b_{k,i}ᴴΦ|²`.
    pub fn sinr_with(&self, mut gain: impl FnMut(&CVector) -> f64) -> Vec<f64> {
        let k = self.users();
        (0..k)
            .map(|u| {
                let mut interference = self.sigma_tilde2[u];
                let mut signal = 0.0;
                for i in 0..k {
                    let gi = gain(&self.cross[u][i]);
                    if i == u {
                        signal = self.power[u] * gi;
                    } else {
                        interference += self.power[i] * gi;
                    }
                }
                signal / interference
            })
            .collect()
    }

    /// SINRs for a stacked vector `Φ_vec` (amplitude included).
    pub fn sinr(&self, phi_vec: &CVector) -> Vec<f64> {
        self.sinr_with(|b| b.dotc(phi_vec).norm_sqr())
    }

    pub fn sinr_phase(&self, phase: &PhaseVector) -> Vec<f64> {
        self.sinr(&phase.stacked())
    }

    pub fn min_sinr(&self, phase: &PhaseVector) -> f64 {
        min_of(&self.sinr_phase(phase))
    }

    /// Gain table `f[k][i] = |b_{k,i}ᴴΦ_vec|²`, `n[k] = σ̃_k²` for power control.
    pub fn gain_table(&self, phase: &PhaseVector) -> GainTable {
        let phi = phase.stacked();
        let f = self
            .cross
            .iter()
            .map(|row| row.iter().map(|b| b.dotc(&phi).norm_sqr()).collect())
            .collect();
        GainTable {
            f,
            n: self.sigma_tilde2.clone(),
        }
    }

    /// SINRs for a lifted matrix `V`, using `Tr(R_{k,i} V) = b_{k,i}ᴴ V b_{k,i}`.
    pub fn sinr_lifted(&self, v: &CMatrix) -> Vec<f64> {
        self.sinr_with(|b| quad(v, b))
    }

    /// SINRs for `V = U Uᴴ` without forming `V`.
    pub fn sinr_factored(&self, u: &CMatrix) -> Vec<f64> {
        self.sinr_with(|b| (u.adjoint() * b).norm_squared())
    }
}

fn quad(v: &CMatrix, b: &CVector) -> f64 {
    let vb: CVector = v * b;
    let z: Complex64 = b.dotc(&vb);
    z.re
}

pub(crate) fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}
