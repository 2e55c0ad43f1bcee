//! Max-min power control for fixed combiners and phases.
//!
//! For a target SINR `τ`, the minimal power vector meeting every target is
//! the least fixed point of the standard interference mapping
//! `p_k ← τ (Σ_{i≠k} p_i f_{k,i} + n_k) / f_{k,k}`. Iterating it from zero is
//! monotone, so `τ` is feasible under the caps exactly when the iterates stay
//! below the caps and settle. Bisecting on `τ` gives the max-min optimum.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::model::{cross_gains, effective_channel, Beamformer, PhaseVector, PowerAllocation};

pub const FIXED_POINT_MAX_ITER: usize = 500;
pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const BISECTION_REL_TOL: f64 = 1e-8;

/// `f[k][i] = |β_kᴴ g_i|²` and `n[k] = σ²‖β_k‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    pub f: Vec<Vec<f64>>,
    pub n: Vec<f64>,
}

impl GainTable {
    pub fn users(&self) -> usize {
        self.n.len()
    }

    /// Linear SINR of every user for the power vector `p`.
    pub fn sinr(&self, p: &[f64]) -> Vec<f64> {
        (0..self.users())
            .map(|k| {
                let interference: f64 = (0..self.users())
                    .filter(|&i| i != k)
                    .map(|i| p[i] * self.f[k][i])
                    .sum();
                p[k] * self.f[k][k] / (interference + self.n[k])
            })
            .collect()
    }

    pub fn min_sinr(&self, p: &[f64]) -> f64 {
        self.sinr(p).into_iter().fold(f64::INFINITY, f64::min)
    }

    fn check(&self) -> Result<()> {
        let k = self.users();
        if self.f.len() != k || self.f.iter().any(|row| row.len() != k) {
            return Err(Error::Dimension("gain table must be K×K".into()));
        }
        let finite = self
            .f
            .iter()
            .flatten()
            .chain(&self.n)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Numeric("non-finite gain".into()));
        }
        Ok(())
    }
}

pub fn gain_table(
    chan: &ChannelRealization,
    phase: &PhaseVector,
    bf: &Beamformer,
    sigma2: f64,
) -> Result<GainTable> {
    if bf.beta.len() != chan.users() {
        return Err(Error::Dimension(format!(
            "{} users, {} beamformers",
            chan.users(),
            bf.beta.len()
        )));
    }
    let g = effective_channel(chan, phase)?;
    let f = cross_gains(&g, bf);
    let n = bf.beta.iter().map(|b| sigma2 * b.norm_squared()).collect();
    Ok(GainTable { f, n })
}

/// Per-user power cap folding the EMF exposure limit:
/// `min(p_max, emf_max[k] / sar_ref[k])`.
pub fn effective_power_cap(p_max: f64, sar_ref: &[f64], emf_max: &[f64]) -> Result<Vec<f64>> {
    if sar_ref.len() != emf_max.len() {
        return Err(Error::Dimension(format!(
            "{} SAR values, {} EMF caps",
            sar_ref.len(),
            emf_max.len()
        )));
    }
    sar_ref
        .iter()
        .zip(emf_max)
        .map(|(&sar, &emf)| {
            if !(sar > 0.0) {
                return Err(Error::Domain(format!(
                    "SAR per unit power must be positive, got {sar}"
                )));
            }
            Ok(p_max.min(emf / sar))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerOutcome {
    pub allocation: PowerAllocation,
    /// Minimum SINR attained by `allocation`.
    pub tau: f64,
    /// Set when some user has zero direct gain; `tau` is then 0 and every
    /// user transmits at its cap.
    pub degenerate: bool,
}

/// Runs the interference mapping from `p = 0` for target `tau`. Returns the
/// fixed point if it converges below the caps within the iteration budget.
/// `observe` sees every iterate, starting with the zero vector.
pub fn interference_fixed_point(
    table: &GainTable,
    caps: &[f64],
    tau: f64,
    mut observe: impl FnMut(&[f64]),
) -> Option<Vec<f64>> {
    let k = table.users();
    let mut p = vec![0.0; k];
    observe(&p);
    for _ in 0..FIXED_POINT_MAX_ITER {
        let mut next = vec![0.0; k];
        let mut capped = false;
        for u in 0..k {
            let interference: f64 = (0..k)
                .filter(|&i| i != u)
                .map(|i| p[i] * table.f[u][i])
                .sum();
            let need = tau * (interference + table.n[u]) / table.f[u][u];
            // iterates only grow, so a requirement above the cap stays above it
            if need > caps[u] {
                capped = true;
            }
            next[u] = need.min(caps[u]);
        }
        let delta = next
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        p = next;
        observe(&p);
        if capped {
            return None;
        }
        if delta < FIXED_POINT_TOL {
            return Some(p);
        }
    }
    None
}

/// Global max-min power allocation for a fixed gain table.
pub fn max_min_power(table: &GainTable, caps: &[f64]) -> Result<PowerOutcome> {
    table.check()?;
    let k = table.users();
    if caps.len() != k {
        return Err(Error::Dimension(format!("{k} users, {} caps", caps.len())));
    }
    if caps.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
        return Err(Error::Domain(
            "power caps must be finite and non-negative".into(),
        ));
    }
    if (0..k).any(|u| !(table.f[u][u] > 0.0)) || caps.contains(&0.0) {
        return Ok(PowerOutcome {
            allocation: PowerAllocation::new(caps.to_vec()),
            tau: 0.0,
            degenerate: true,
        });
    }

    let mut lo = 0.0;
    let mut hi = (0..k)
        .map(|u| caps[u] * table.f[u][u] / table.n[u])
        .fold(f64::INFINITY, f64::min);
    let mut best: Option<Vec<f64>> = None;
    // hi itself is feasible only without interference
    if let Some(p) = interference_fixed_point(table, caps, hi, |_| {}) {
        lo = hi;
        best = Some(p);
    }
    while hi - lo > BISECTION_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        match interference_fixed_point(table, caps, mid, |_| {}) {
            Some(p) => {
                lo = mid;
                best = Some(p);
            }
            None => hi = mid,
        }
    }
    let mut p = best.unwrap_or_else(|| vec![0.0; k]);
    fill_up(table, caps, &mut p);
    let tau = table.min_sinr(&p);
    Ok(PowerOutcome {
        allocation: PowerAllocation::new(p),
        tau,
        degenerate: false,
    })
}

/// Raises each user's power, one at a time, as far as its cap allows without
/// pushing any other user below the current minimum SINR.
fn fill_up(table: &GainTable, caps: &[f64], p: &mut [f64]) {
    let k = table.users();
    let tau = table.min_sinr(p);
    if !(tau > 0.0) {
        return;
    }
    for u in 0..k {
        let mut limit = caps[u];
        for i in (0..k).filter(|&i| i != u && table.f[i][u] > 0.0) {
            let others: f64 = (0..k)
                .filter(|&j| j != i && j != u)
                .map(|j| p[j] * table.f[i][j])
                .sum();
            let slack = p[i] * table.f[i][i] / tau - table.n[i] - others;
            limit = limit.min(slack / table.f[i][u]);
        }
        if limit > p[u] {
            p[u] = limit;
        }
    }
}
