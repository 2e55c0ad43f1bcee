//! Alternating optimization of combiners, powers and RIS phases.
//!
//! One sweep runs beamforming, then power control, then the chosen phase
//! optimizer. Powers equalize the users' SINRs, so a phase change is judged
//! together with the powers it allows: the phase stage re-allocates power
//! for its candidate, and the gradient and quantized searches score their
//! iterates the same way. Every stage is accepted only if it does not lower
//! the minimum SINR, so the recorded trace is nondecreasing. The loop stops
//! when a sweep improves the minimum by less than `tol` (relative) or after
//! `max_iter` sweeps.

use std::fmt;
use std::time::Instant;

use rand::Rng;

use crate::beamforming::optimal_beamformers;
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::model::{
    sinr_per_user, Beamformer, PhaseVector, PowerAllocation, SinrReport, Stage, SystemConfig,
};
use crate::phase::quantized::random_grid_phase;
use crate::phase::{
    build_quadratic_forms, lse_gradient_phase_scored, quantized_heuristic_phase,
    sdr_dinkelbach_phase, LseParams, QuantParams, SdrParams,
};
use crate::power::{effective_power_cap, gain_table, max_min_power};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Relative min-SINR improvement per sweep below which the loop stops.
    pub tol: f64,
    pub max_iter: usize,
    pub sdr: SdrParams,
    pub lse: LseParams,
    /// Search settings; the bit count is taken from the method.
    pub quant: QuantParams,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 30,
            sdr: SdrParams::default(),
            lse: LseParams::default(),
            quant: QuantParams::default(),
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "alternating tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("alternating sweep limit must be >= 1".into()));
        }
        self.sdr.validate()?;
        self.lse.validate()?;
        self.quant.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseMethod {
    Sdr,
    Lse,
    Quantized {
        bits: u32,
    },
    /// Random phases kept fixed; only combiners and powers are optimized.
    RandomBaseline,
}

impl PhaseMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            PhaseMethod::Sdr => "sdr",
            PhaseMethod::Lse => "lse",
            PhaseMethod::Quantized { .. } => "quant",
            PhaseMethod::RandomBaseline => "random-baseline",
        }
    }

    pub fn bits(&self) -> Option<u32> {
        match self {
            PhaseMethod::Quantized { bits } => Some(*bits),
            _ => None,
        }
    }
}

impl fmt::Display for PhaseMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub bf: Beamformer,
    pub power: PowerAllocation,
    pub phase: PhaseVector,
    pub report: SinrReport,
    /// Sweeps run.
    pub iterations: usize,
    pub wall_time: f64,
    pub method: PhaseMethod,
    pub converged: bool,
    /// Some user has no usable channel; the minimum SINR is then 0.
    pub degenerate: bool,
    pub p_cap: Vec<f64>,
    /// Non-fatal solver notes (e.g. an inner solve that hit its budget).
    pub warnings: Vec<String>,
}

struct State {
    bf: Beamformer,
    power: PowerAllocation,
    phase: PhaseVector,
    min: f64,
    per_user: Vec<f64>,
}

/// Combiners and powers for a candidate phase: combiners for the current
/// powers, max-min powers for those combiners (kept only if they do not
/// lower the minimum), then combiners refreshed for the final powers.
fn settle(
    chan: &ChannelRealization,
    phase: &PhaseVector,
    power: &PowerAllocation,
    p_cap: &[f64],
    sigma2: f64,
) -> Result<(Beamformer, PowerAllocation, SinrReport)> {
    let bf = optimal_beamformers(chan, phase, power, sigma2)?;
    let table = gain_table(chan, phase, &bf, sigma2)?;
    let out = max_min_power(&table, p_cap)?;
    let power = if out.tau >= table.min_sinr(&power.p) {
        out.allocation
    } else {
        power.clone()
    };
    let bf = optimal_beamformers(chan, phase, &power, sigma2)?;
    let rep = sinr_per_user(chan, phase, &power, &bf, sigma2)?;
    Ok((bf, power, rep))
}

/// Max-min SINR reachable at `phase` by re-allocating power under the caps,
/// with combiners optimal for `power`.
fn reachable_min_sinr(
    chan: &ChannelRealization,
    phase: &PhaseVector,
    power: &PowerAllocation,
    p_cap: &[f64],
    sigma2: f64,
) -> f64 {
    let tau = || -> Result<f64> {
        let bf = optimal_beamformers(chan, phase, power, sigma2)?;
        Ok(max_min_power(&gain_table(chan, phase, &bf, sigma2)?, p_cap)?.tau)
    };
    tau().unwrap_or(0.0)
}

pub fn alternating_optimize<R: Rng + ?Sized>(
    config: &SystemConfig,
    chan: &ChannelRealization,
    method: PhaseMethod,
    rng: &mut R,
) -> Result<Solution> {
    config.validate()?;
    chan.check_dimensions(config)?;
    let params = &config.solver;
    let quant = match method {
        PhaseMethod::Quantized { bits } => {
            let q = QuantParams {
                bits,
                ..params.quant
            };
            q.validate()?;
            Some(q)
        }
        _ => None,
    };
    let start = Instant::now();
    let sigma2 = config.sigma2;
    let p_cap = effective_power_cap(
        config.p_max,
        &config.sar_ref_per_user(),
        &config.emf_max_per_user(),
    )?;

    let phase = match quant {
        Some(q) => random_grid_phase(config.n, q.bits, config.alpha, rng),
        None => PhaseVector::uniform(config.n, config.alpha, rng),
    };
    let power = PowerAllocation::new(p_cap.clone());
    let bf = optimal_beamformers(chan, &phase, &power, sigma2)?;
    let rep = sinr_per_user(chan, &phase, &power, &bf, sigma2)?;
    let mut st = State {
        bf,
        power,
        phase,
        min: rep.minimum,
        per_user: rep.per_user,
    };
    let mut trace = vec![(Stage::Init, st.min)];
    let mut warnings = Vec::new();
    let mut degenerate = false;
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < params.max_iter {
        sweeps += 1;
        let before = st.min;

        let bf = optimal_beamformers(chan, &st.phase, &st.power, sigma2)?;
        let rep = sinr_per_user(chan, &st.phase, &st.power, &bf, sigma2)?;
        if rep.minimum >= st.min {
            st.bf = bf;
            st.min = rep.minimum;
            st.per_user = rep.per_user;
        }
        trace.push((Stage::Beamforming, st.min));

        let table = gain_table(chan, &st.phase, &st.bf, sigma2)?;
        let out = max_min_power(&table, &p_cap)?;
        degenerate = out.degenerate;
        let rep = sinr_per_user(chan, &st.phase, &out.allocation, &st.bf, sigma2)?;
        if rep.minimum >= st.min {
            st.power = out.allocation;
            st.min = rep.minimum;
            st.per_user = rep.per_user;
        }
        trace.push((Stage::Power, st.min));

        if method != PhaseMethod::RandomBaseline && !degenerate {
            let candidate = match method {
                PhaseMethod::Sdr => {
                    let q = build_quadratic_forms(chan, &st.bf, &st.power, sigma2)?;
                    let out = sdr_dinkelbach_phase(&q, &st.phase, &params.sdr, rng)?;
                    if !out.inner_converged {
                        warnings.push(format!(
                            "sweep {sweeps}: relaxation inner solve hit its iteration budget"
                        ));
                    }
                    out.phase
                }
                PhaseMethod::Lse => {
                    let score = |p: &PhaseVector, _: &[f64]| {
                        reachable_min_sinr(chan, p, &st.power, &p_cap, sigma2)
                    };
                    let out = lse_gradient_phase_scored(
                        chan,
                        &st.power,
                        sigma2,
                        &st.phase,
                        &params.lse,
                        score,
                    )?;
                    if out.hit_cap {
                        warnings.push(format!(
                            "sweep {sweeps}: gradient phase search hit its iteration cap"
                        ));
                    }
                    out.phase
                }
                PhaseMethod::Quantized { .. } => {
                    let q = build_quadratic_forms(chan, &st.bf, &st.power, sigma2)?;
                    let qp = quant.expect("set for the quantized method");
                    let tau = |p: &PhaseVector| {
                        max_min_power(&q.gain_table(p), &p_cap).map_or(0.0, |o| o.tau)
                    };
                    quantized_heuristic_phase(tau, &qp, &st.phase, rng)?.phase
                }
                PhaseMethod::RandomBaseline => unreachable!(),
            };
            if candidate != st.phase {
                let (bf, power, rep) = settle(chan, &candidate, &st.power, &p_cap, sigma2)?;
                if rep.minimum >= st.min {
                    st.phase = candidate;
                    st.power = power;
                    st.bf = bf;
                    st.min = rep.minimum;
                    st.per_user = rep.per_user;
                }
            }
            trace.push((Stage::Phase, st.min));
        }

        if degenerate || st.min - before < params.tol * before.abs() {
            converged = true;
            break;
        }
    }

    let mut report = SinrReport::from_per_user(st.per_user);
    report.stage_trace = trace;
    Ok(Solution {
        bf: st.bf,
        power: st.power,
        phase: st.phase,
        report,
        iterations: sweeps,
        wall_time: start.elapsed().as_secs_f64(),
        method,
        converged,
        degenerate,
        p_cap,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_channel;
    use crate::effective_channel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config(k: usize) -> SystemConfig {
        SystemConfig {
            m: 4,
            n: 8,
            k,
            ..SystemConfig::default()
        }
    }

    const METHODS: [PhaseMethod; 4] = [
        PhaseMethod::Sdr,
        PhaseMethod::Lse,
        PhaseMethod::Quantized { bits: 2 },
        PhaseMethod::RandomBaseline,
    ];

    #[test]
    fn single_user_collapses_to_matched_filter() {
        let config = small_config(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let chan = sample_channel(&config, &mut rng).unwrap();
        for method in METHODS {
            let sol = alternating_optimize(&config, &chan, method, &mut rng).unwrap();
            assert!(sol.converged);
            let g = effective_channel(&chan, &sol.phase).unwrap();
            let expect = sol.p_cap[0] * g.column(0).norm_squared() / config.sigma2;
            assert!(
                (sol.report.minimum - expect).abs() <= 1e-9 * expect,
                "{method}"
            );
            assert!((sol.power.p[0] - sol.p_cap[0]).abs() <= 1e-12);
        }
    }

    #[test]
    fn trace_is_monotone_and_report_consistent() {
        for seed in 0..12 {
            let config = small_config(1 + seed as usize % 4);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let chan = sample_channel(&config, &mut rng).unwrap();
            for method in METHODS {
                let sol = alternating_optimize(&config, &chan, method, &mut rng).unwrap();
                let trace: Vec<f64> = sol.report.stage_trace.iter().map(|s| s.1).collect();
                assert!(
                    trace.windows(2).all(|w| w[1] >= w[0]),
                    "seed {seed} {method}: {trace:?}"
                );
                let rep =
                    sinr_per_user(&chan, &sol.phase, &sol.power, &sol.bf, config.sigma2).unwrap();
                assert!((rep.minimum - sol.report.minimum).abs() <= 1e-9 * sol.report.minimum);
                assert!(sol.power.p.iter().zip(&sol.p_cap).all(|(p, c)| p <= c));
                assert!(sol.iterations <= config.solver.max_iter);
            }
        }
    }

    #[test]
    fn optimizing_phases_beats_random_phases() {
        let config = small_config(3);
        let mut wins = 0;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let chan = sample_channel(&config, &mut rng).unwrap();
            let mut a = ChaCha8Rng::seed_from_u64(seed);
            let mut b = ChaCha8Rng::seed_from_u64(seed);
            let lse = alternating_optimize(&config, &chan, PhaseMethod::Lse, &mut a).unwrap();
            let base =
                alternating_optimize(&config, &chan, PhaseMethod::RandomBaseline, &mut b).unwrap();
            if lse.report.minimum >= base.report.minimum {
                wins += 1;
            }
        }
        assert_eq!(wins, 10);
    }

    #[test]
    fn emf_cap_is_respected() {
        let config = SystemConfig {
            sar_ref: vec![63e-4, 1e-2],
            emf_max: vec![0.0029],
            k: 2,
            m: 4,
            n: 6,
            ..SystemConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let chan = sample_channel(&config, &mut rng).unwrap();
        let sol = alternating_optimize(&config, &chan, PhaseMethod::Lse, &mut rng).unwrap();
        assert!((sol.p_cap[0] - 0.0029 / 63e-4).abs() < 1e-15);
        assert!((sol.p_cap[1] - 0.29).abs() < 1e-15);
        assert!(sol.power.p.iter().zip(&sol.p_cap).all(|(p, c)| p <= c));
    }

    #[test]
    fn quantized_output_stays_on_grid() {
        let config = small_config(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let chan = sample_channel(&config, &mut rng).unwrap();
        let sol =
            alternating_optimize(&config, &chan, PhaseMethod::Quantized { bits: 2 }, &mut rng)
                .unwrap();
        assert!(crate::phase::quantized::grid_levels(&sol.phase, 2).is_some());
        assert_eq!(sol.method.bits(), Some(2));
    }

    #[test]
    fn rejects_mismatched_channel() {
        let config = small_config(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chan = sample_channel(&small_config(3), &mut rng).unwrap();
        assert!(alternating_optimize(&config, &chan, PhaseMethod::Lse, &mut rng).is_err());
    }
}
