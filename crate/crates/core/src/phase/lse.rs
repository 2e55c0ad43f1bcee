//! Projected gradient on the phase angles for the smooth-min surrogate
//! `OB = log Σ_k exp(1/ρ_k)`, where `ρ_k = p_k g_kᴴ(Σ_k + σ²I)⁻¹g_k` is the
//! SINR after optimal combining. Since `(OB)⁻¹ <= min_k ρ_k`, lowering `OB`
//! lifts a lower bound on the minimum SINR.
//!
//! The bound is loose when the `1/ρ_k` are small or close together, so the
//! descent continues on the sharpened surrogate `log Σ_k exp(t/ρ_k)` with
//! `t = c·min_k ρ_k` for growing `c`, whose gap to `max_k 1/ρ_k` is at most
//! `log K / c` relative.
//!
//! Derivative convention: [`rho_derivative`] returns the conjugate
//! Wirtinger derivative `∂ρ_k/∂φ_n*`. With `φ_n = exp(jθ_n)` the derivative
//! along the unit circle is `dρ_k/dθ_n = 2·Re(j·φ_n·conj(∂ρ_k/∂φ_n*))`.

use num_complex::Complex64;

use crate::beamforming::{whitened_solve, WhitenedSolve};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::model::{effective_channel, PhaseVector, PowerAllocation};
use crate::phase::quadratic::min_of;
use crate::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LseParams {
    /// Iteration budget, split evenly over the stages.
    pub max_iter: usize,
    /// Stop once `‖∇OB‖∞` falls below this, relative to `Σ_k s_k/ρ_k`
    /// (the softmax-weighted mean of `1/ρ_k`).
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub shrink: f64,
    /// Largest first trial move of any angle, radians.
    pub initial_step: f64,
    pub min_step: f64,
    /// Sharpened stages after the plain one; stage `s` uses `c = growth^s`.
    pub sharpening_stages: usize,
    pub sharpening_growth: f64,
}

impl Default for LseParams {
    fn default() -> Self {
        Self {
            max_iter: 200,
            grad_tol: 1e-6,
            armijo_c: 1e-4,
            shrink: 0.5,
            initial_step: 1.0,
            min_step: 1e-12,
            sharpening_stages: 2,
            sharpening_growth: 10.0,
        }
    }
}

impl LseParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iter > self.sharpening_stages
            && self.grad_tol > 0.0
            && self.armijo_c > 0.0
            && self.armijo_c < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.initial_step > 0.0
            && self.min_step > 0.0
            && self.sharpening_growth > 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid gradient parameters {self:?}"
            )))
        }
    }
}

/// `log Σ_k exp(1/ρ_k)`, shifted by the largest exponent.
pub fn lse_objective(rho: &[f64]) -> Result<f64> {
    sharpened_objective(rho, 1.0)
}

/// `log Σ_k exp(t/ρ_k)`.
fn sharpened_objective(rho: &[f64], t: f64) -> Result<f64> {
    if rho.is_empty() {
        return Err(Error::Domain("empty SINR vector".into()));
    }
    if let Some(bad) = rho.iter().find(|&&r| !(r > 0.0)) {
        return Err(Error::Domain(format!(
            "smooth minimum needs positive SINRs, got {bad}"
        )));
    }
    let top = rho.iter().map(|r| t / r).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = rho.iter().map(|r| (t / r - top).exp()).sum();
    Ok(top + sum.ln())
}

/// Softmax weights `exp(t/ρ_k) / Σ_i exp(t/ρ_i)`.
fn lse_weights(rho: &[f64], t: f64) -> Vec<f64> {
    let top = rho.iter().map(|r| t / r).fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = rho.iter().map(|r| (t / r - top).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// `ρ`, the per-user solves and the effective channel at one phase.
struct Evaluation {
    g: CMatrix,
    solve: WhitenedSolve,
}

fn evaluate(
    chan: &ChannelRealization,
    power: &[f64],
    phase: &PhaseVector,
    sigma2: f64,
) -> Result<Evaluation> {
    let g = effective_channel(chan, phase)?;
    let solve = whitened_solve(&g, power, sigma2)?;
    Ok(Evaluation { g, solve })
}

/// Conjugate Wirtinger derivatives `∂ρ_k/∂φ_n*`, indexed `[k][n]`.
///
/// With `x_k = T₂ g_k`, `T₂ = (Σ_{i≠k} p_i g_i g_iᴴ + σ²I)⁻¹` and
/// `A = H1 R^{1/2}`, the derivative is
/// `α p_k [Aᴴx_k]_n (conj h_{2,k,n} − Σ_{i≠k} p_i (x_kᴴg_i) conj h_{2,i,n})`:
/// the first term is `Tr(∂T₁/∂φ_n* · T₂)`, the sum is the
/// `T₂ (∂T₂⁻¹/∂φ_n*) T₂` correction.
fn wirtinger_all(
    chan: &ChannelRealization,
    power: &[f64],
    phase: &PhaseVector,
    eval: &Evaluation,
) -> Vec<Vec<Complex64>> {
    let k = chan.users();
    let n = chan.ris_elements();
    let alpha = phase.alpha();
    let cascade_h = chan.cascade().adjoint();
    (0..k)
        .map(|u| {
            let x = &eval.solve.x[u];
            let a_x = &cascade_h * x;
            // x_kᴴ g_i for the interferers
            let coupling: Vec<Complex64> = (0..k).map(|i| x.dotc(&eval.g.column(i))).collect();
            (0..n)
                .map(|e| {
                    let mut bracket = chan.h2()[u][e].conj();
                    for i in (0..k).filter(|&i| i != u) {
                        bracket -= coupling[i] * power[i] * chan.h2()[i][e].conj();
                    }
                    a_x[e] * bracket * (alpha * power[u])
                })
                .collect()
        })
        .collect()
}

/// `∂ρ_k/∂φ_n*` for one user and element (see the module docs for the
/// conversion to an angle derivative).
pub fn rho_derivative(
    chan: &ChannelRealization,
    power: &PowerAllocation,
    phase: &PhaseVector,
    sigma2: f64,
    k: usize,
    n: usize,
) -> Result<Complex64> {
    if k >= chan.users() || n >= chan.ris_elements() {
        return Err(Error::Dimension(format!(
            "index (k={k}, n={n}) out of range"
        )));
    }
    let eval = evaluate(chan, &power.p, phase, sigma2)?;
    Ok(wirtinger_all(chan, &power.p, phase, &eval)[k][n])
}

/// `dρ_k/dθ_n` for every user and element, indexed `[k][n]`, plus `ρ`.
pub fn rho_angle_gradient(
    chan: &ChannelRealization,
    power: &PowerAllocation,
    phase: &PhaseVector,
    sigma2: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let eval = evaluate(chan, &power.p, phase, sigma2)?;
    let w = wirtinger_all(chan, &power.p, phase, &eval);
    let grad = w.iter().map(|row| tangent(phase, row)).collect();
    Ok((eval.solve.rho, grad))
}

fn tangent(phase: &PhaseVector, wirtinger: &[Complex64]) -> Vec<f64> {
    let j = Complex64::new(0.0, 1.0);
    phase
        .phi()
        .iter()
        .zip(wirtinger)
        .map(|(phi, w)| 2.0 * (j * phi * w.conj()).re)
        .collect()
}

/// Gradient of `log Σ_k exp(t/ρ_k)` from per-user angle gradients.
fn objective_gradient(rho: &[f64], drho: &[Vec<f64>], t: f64) -> Vec<f64> {
    let s = lse_weights(rho, t);
    let n = drho.first().map_or(0, Vec::len);
    let mut grad = vec![0.0; n];
    for (k, row) in drho.iter().enumerate() {
        let coef = -t * s[k] / (rho[k] * rho[k]);
        for (g, d) in grad.iter_mut().zip(row) {
            *g += coef * d;
        }
    }
    grad
}

#[derive(Debug, Clone, PartialEq)]
pub struct LseOutcome {
    /// Best iterate by score (by default the minimum post-combining SINR);
    /// never worse than the input.
    pub phase: PhaseVector,
    pub score: f64,
    pub iterations: usize,
    /// The iteration budget ran out before the gradient test passed.
    pub hit_cap: bool,
    /// Gradient sup-norm at the last iterate of the last stage.
    pub final_grad_inf: f64,
}

/// Minimizes `OB` over the angles for fixed powers. Moves follow the
/// normalized direction `-∇OB / ‖∇OB‖∞`, so a unit step shifts the most
/// sensitive angle by one radian; Armijo backtracking shrinks it.
pub fn lse_gradient_phase(
    chan: &ChannelRealization,
    power: &PowerAllocation,
    sigma2: f64,
    init: &PhaseVector,
    params: &LseParams,
) -> Result<LseOutcome> {
    lse_gradient_phase_scored(chan, power, sigma2, init, params, |_, rho| min_of(rho))
}

/// Same descent, but the returned iterate is the one maximizing
/// `score(phase, ρ)` rather than `min_k ρ_k`.
pub fn lse_gradient_phase_scored(
    chan: &ChannelRealization,
    power: &PowerAllocation,
    sigma2: f64,
    init: &PhaseVector,
    params: &LseParams,
    mut score: impl FnMut(&PhaseVector, &[f64]) -> f64,
) -> Result<LseOutcome> {
    params.validate()?;
    let rho = evaluate(chan, &power.p, init, sigma2)?.solve.rho;
    let mut best = LseOutcome {
        phase: init.clone(),
        score: score(init, &rho),
        iterations: 0,
        hit_cap: false,
        final_grad_inf: 0.0,
    };
    if lse_objective(&rho).is_err() {
        // a user with zero SINR has no usable gradient
        return Ok(best);
    }
    #[cfg(debug_assertions)]
    {
        let (_, drho) = rho_angle_gradient(chan, power, init, sigma2)?;
        debug_check_gradient(chan, power, sigma2, init, &drho);
    }

    Descent {
        chan,
        power,
        sigma2,
        params,
        best: &mut best,
        score: &mut score,
    }
    .run(init.clone())?;
    Ok(best)
}

struct Descent<'a, F> {
    chan: &'a ChannelRealization,
    power: &'a PowerAllocation,
    sigma2: f64,
    params: &'a LseParams,
    best: &'a mut LseOutcome,
    score: &'a mut F,
}

impl<F: FnMut(&PhaseVector, &[f64]) -> f64> Descent<'_, F> {
    /// Every stage from `start`, recording the best iterate.
    fn run(&mut self, start: PhaseVector) -> Result<()> {
        let params = self.params;
        let alpha = start.alpha();
        let mut phase = start;
        let mut theta = phase.theta().to_vec();
        let (mut rho, mut drho) = rho_angle_gradient(self.chan, self.power, &phase, self.sigma2)?;
        for stage in 0..=params.sharpening_stages {
            let t = if stage == 0 {
                1.0
            } else {
                params.sharpening_growth.powi(stage as i32) * min_of(&rho)
            };
            let Ok(mut value) = sharpened_objective(&rho, t) else {
                break;
            };
            self.best.hit_cap = true;
            let mut stage_iter = 0;
            while stage_iter < params.max_iter / (params.sharpening_stages + 1) {
                let grad = objective_gradient(&rho, &drho, t);
                let grad_inf = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
                self.best.final_grad_inf = grad_inf;
                let s = lse_weights(&rho, t);
                let scale: f64 = s.iter().zip(&rho).map(|(w, r)| t * w / r).sum();
                if !(grad_inf > params.grad_tol * scale) {
                    self.best.hit_cap = false;
                    break;
                }
                self.best.iterations += 1;
                stage_iter += 1;
                let direction: Vec<f64> = grad.iter().map(|g| -g / grad_inf).collect();
                let slope: f64 = grad.iter().zip(&direction).map(|(g, d)| g * d).sum();
                let mut step = params.initial_step;
                let mut accepted = None;
                while step >= params.min_step {
                    let trial: Vec<f64> = theta
                        .iter()
                        .zip(&direction)
                        .map(|(t, d)| t + step * d)
                        .collect();
                    let trial_phase = PhaseVector::from_angles(&trial, alpha);
                    let (trial_rho, trial_drho) =
                        rho_angle_gradient(self.chan, self.power, &trial_phase, self.sigma2)?;
                    if let Ok(v) = sharpened_objective(&trial_rho, t) {
                        if v <= value + params.armijo_c * step * slope {
                            accepted = Some((trial_phase, trial_rho, trial_drho, v));
                            break;
                        }
                    }
                    step *= params.shrink;
                }
                let Some((next_phase, next_rho, next_drho, v)) = accepted else {
                    // no descent at the smallest step: stationary to working precision
                    self.best.hit_cap = false;
                    break;
                };
                phase = next_phase;
                theta = phase.theta().to_vec();
                rho = next_rho;
                drho = next_drho;
                value = v;
                let m = (self.score)(&phase, &rho);
                if m > self.best.score {
                    self.best.phase = phase.clone();
                    self.best.score = m;
                }
            }
        }
        Ok(())
    }
}

/// Central differences on the first iterate; catches a drifted derivative
/// convention in debug and test builds.
#[cfg(debug_assertions)]
fn debug_check_gradient(
    chan: &ChannelRealization,
    power: &PowerAllocation,
    sigma2: f64,
    phase: &PhaseVector,
    drho: &[Vec<f64>],
) {
    let h = 1e-6;
    let theta = phase.theta();
    for n in 0..theta.len() {
        let mut plus = theta.to_vec();
        let mut minus = theta.to_vec();
        plus[n] += h;
        minus[n] -= h;
        let (Ok(a), Ok(b)) = (
            evaluate(
                chan,
                &power.p,
                &PhaseVector::from_angles(&plus, phase.alpha()),
                sigma2,
            ),
            evaluate(
                chan,
                &power.p,
                &PhaseVector::from_angles(&minus, phase.alpha()),
                sigma2,
            ),
        ) else {
            return;
        };
        for (k, row) in drho.iter().enumerate() {
            let fd = (a.solve.rho[k] - b.solve.rho[k]) / (2.0 * h);
            let scale = row.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            // central differences lose about ρ·ε/h to rounding
            let noise = 1e-8 * a.solve.rho[k].abs();
            debug_assert!(
                (fd - row[n]).abs() <= 1e-4 * scale + noise,
                "angle derivative mismatch at k={k} n={n}: analytic {} vs finite difference {fd}",
                row[n]
            );
        }
    }
}
