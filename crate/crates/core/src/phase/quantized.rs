//! Randomized coordinate search over a `2^B`-level phase grid.
//!
//! Each step picks a random element and tries every other grid level
//! there, keeping a level only when the minimum SINR strictly increases.
//! Every tried level is one evaluation and appends the current best value
//! to the history `τ`. The search stops once at least `L` evaluations have
//! run and the summed shortfall `Σ_{j in last L} (τ_now − τ_j)` is below
//! `ε·τ_now`, i.e. the last `L` evaluations brought (almost) nothing.

use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::PhaseVector;

/// Relative gain a swap must bring to count as a strict increase.
pub const IMPROVEMENT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantParams {
    pub bits: u32,
    /// Window `L` of the stopping rule, in evaluations.
    pub window: usize,
    /// Relative threshold `ε` of the stopping rule.
    pub epsilon: f64,
    /// Hard cap on evaluations.
    pub max_evaluations: usize,
}

impl Default for QuantParams {
    fn default() -> Self {
        Self {
            bits: 3,
            window: 50,
            epsilon: 1e-6,
            max_evaluations: 100_000,
        }
    }
}

impl QuantParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.bits) {
            return Err(Error::Config(format!(
                "quantization bits must lie in [1,16], got {}",
                self.bits
            )));
        }
        if self.window == 0 {
            return Err(Error::Config("stopping window must be >= 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "stopping threshold must be >= 0, got {}",
                self.epsilon
            )));
        }
        if self.max_evaluations < self.window {
            return Err(Error::Config(
                "evaluation cap must be at least the stopping window".into(),
            ));
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        1 << self.bits
    }
}

/// Grid angle of level `i` (zero-based): `2π i / 2^B`.
pub fn grid_angle(level: usize, bits: u32) -> f64 {
    TAU * level as f64 / (1usize << bits) as f64
}

/// Level indices of a phase vector, or `None` if some angle is off-grid.
pub fn grid_levels(phase: &PhaseVector, bits: u32) -> Option<Vec<usize>> {
    let q = 1usize << bits;
    phase
        .theta()
        .iter()
        .map(|&t| {
            let x = t / TAU * q as f64;
            let level = x.round();
            ((x - level).abs() < 1e-9).then_some(level as usize % q)
        })
        .collect()
}

pub fn phase_from_levels(levels: &[usize], bits: u32, alpha: f64) -> PhaseVector {
    let theta: Vec<f64> = levels.iter().map(|&l| grid_angle(l, bits)).collect();
    PhaseVector::from_angles(&theta, alpha)
}

/// Uniformly random grid phase.
pub fn random_grid_phase<R: Rng + ?Sized>(
    n: usize,
    bits: u32,
    alpha: f64,
    rng: &mut R,
) -> PhaseVector {
    let q = 1usize << bits;
    let levels: Vec<usize> = (0..n).map(|_| rng.random_range(0..q)).collect();
    phase_from_levels(&levels, bits, alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantOutcome {
    pub phase: PhaseVector,
    pub levels: Vec<usize>,
    pub min_sinr: f64,
    /// Best value after each evaluation, starting with the input's value.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Runs the search from a grid-valued `init`; `objective` maps a phase to
/// its minimum SINR.
pub fn quantized_heuristic_phase<R: Rng + ?Sized>(
    mut objective: impl FnMut(&PhaseVector) -> f64,
    params: &QuantParams,
    init: &PhaseVector,
    rng: &mut R,
) -> Result<QuantOutcome> {
    params.validate()?;
    let bits = params.bits;
    let q = params.levels();
    let alpha = init.alpha();
    let mut levels = grid_levels(init, bits)
        .ok_or_else(|| Error::Domain(format!("initial phase is not on the {q}-level grid")))?;
    let n = levels.len();
    let mut best = objective(init);
    let mut history = vec![best];
    let mut evaluations = 0;
    let stop = |history: &[f64], evaluations: usize| {
        if evaluations < params.window {
            return false;
        }
        let now = *history.last().expect("history starts non-empty");
        let shortfall: f64 = history[history.len() - params.window..]
            .iter()
            .map(|t| now - t)
            .sum();
        shortfall <= params.epsilon * now.abs()
    };
    if n > 0 {
        'search: loop {
            let element = rng.random_range(0..n);
            let current = levels[element];
            for offset in 1..q {
                let level = (current + offset) % q;
                let previous = levels[element];
                levels[element] = level;
                let value = objective(&phase_from_levels(&levels, bits, alpha));
                evaluations += 1;
                // a margin above rounding noise, so phase-invariant cases stay put
                if value > best * (1.0 + IMPROVEMENT_MARGIN) {
                    best = value;
                } else {
                    levels[element] = previous;
                }
                history.push(best);
                if evaluations >= params.max_evaluations {
                    break 'search;
                }
            }
            if stop(&history, evaluations) {
                break;
            }
        }
    }
    Ok(QuantOutcome {
        phase: phase_from_levels(&levels, bits, alpha),
        levels,
        min_sinr: best,
        history,
        evaluations,
    })
}
