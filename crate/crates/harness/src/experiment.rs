//! Paired Monte Carlo trials and their CSV rows.
//!
//! Every trial draws one channel realization and runs every method on it.
//! Seeds derive from the base seed and the (grid point, trial) indices, so
//! the output does not depend on the worker count: rows are collected in
//! (grid point, trial, method) order before anything is written.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use ris_core::{
    alternating_optimize, sample_channel, ChannelRealization, PhaseMethod, SystemConfig,
};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

/// Column names, in output order.
pub const CSV_HEADER: [&str; 16] = [
    "seed",
    "k",
    "m",
    "n",
    "method",
    "bits",
    "min_sinr_linear",
    "min_sinr_db",
    "per_user_sinrs",
    "sweeps",
    "wall_time_seconds",
    "p_cap_used",
    "degenerate",
    "converged",
    "channel_hash",
    "diagnostics",
];

/// RNG stream for channel sampling; optimizers use [`OPTIMIZER_STREAM`].
const CHANNEL_STREAM: u64 = 0;
/// Shared by all methods, so the continuous methods and the random
/// baseline start from the same random phase.
const OPTIMIZER_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub method: PhaseMethod,
    pub min_sinr_linear: f64,
    pub min_sinr_db: f64,
    pub per_user_sinrs: Vec<f64>,
    pub sweeps: usize,
    pub wall_time_seconds: f64,
    pub p_cap_used: Vec<f64>,
    pub degenerate: bool,
    pub converged: bool,
    /// SHA-256 prefix of the channel's text record; equal across the
    /// methods of one trial.
    pub channel_hash: String,
    pub diagnostics: Vec<String>,
}

impl TrialRecord {
    fn fields(&self) -> Vec<String> {
        let join = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";");
        vec![
            self.seed.to_string(),
            self.k.to_string(),
            self.m.to_string(),
            self.n.to_string(),
            self.method.tag().to_string(),
            self.method
                .bits()
                .map(|b| b.to_string())
                .unwrap_or_default(),
            num(self.min_sinr_linear),
            num(self.min_sinr_db),
            join(&self.per_user_sinrs),
            self.sweeps.to_string(),
            num(self.wall_time_seconds),
            join(&self.p_cap_used),
            self.degenerate.to_string(),
            self.converged.to_string(),
            self.channel_hash.clone(),
            self.diagnostics.join("; "),
        ]
    }
}

/// 17 significant digits.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial at one grid point.
pub fn trial_seed(base: u64, grid_index: usize, trial: usize) -> u64 {
    splitmix64(base ^ splitmix64(((grid_index as u64) << 32) ^ trial as u64))
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The channel realization a trial uses.
pub fn trial_channel(system: &SystemConfig, seed: u64) -> Result<ChannelRealization> {
    Ok(sample_channel(system, &mut rng_for(seed, CHANNEL_STREAM))?)
}

fn channel_hash(chan: &ChannelRealization) -> String {
    let digest = Sha256::digest(chan.to_text().as_bytes());
    hex::encode(&digest[..8])
}

fn run_trial(
    system: &SystemConfig,
    methods: &[PhaseMethod],
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    let chan = trial_channel(system, seed)?;
    let hash = channel_hash(&chan);
    let records = methods
        .iter()
        .map(|&method| {
            let mut rng = rng_for(seed, OPTIMIZER_STREAM);
            let base = TrialRecord {
                seed,
                k: system.k,
                m: system.m,
                n: system.n,
                method,
                min_sinr_linear: f64::NAN,
                min_sinr_db: f64::NAN,
                per_user_sinrs: Vec::new(),
                sweeps: 0,
                wall_time_seconds: 0.0,
                p_cap_used: Vec::new(),
                degenerate: false,
                converged: false,
                channel_hash: hash.clone(),
                diagnostics: Vec::new(),
            };
            match alternating_optimize(system, &chan, method, &mut rng) {
                Ok(sol) => TrialRecord {
                    min_sinr_linear: sol.report.minimum,
                    min_sinr_db: 10.0 * sol.report.minimum.log10(),
                    per_user_sinrs: sol.report.per_user,
                    sweeps: sol.iterations,
                    wall_time_seconds: sol.wall_time,
                    p_cap_used: sol.p_cap,
                    degenerate: sol.degenerate,
                    converged: sol.converged,
                    diagnostics: sol.warnings,
                    ..base
                },
                Err(e) => TrialRecord {
                    diagnostics: vec![format!("error: {e}")],
                    ..base
                },
            }
        })
        .collect();
    Ok(records)
}

/// Runs every (grid point, trial) on a pool of `threads` workers (0 lets
/// the pool decide) and returns the rows in deterministic order.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<TrialRecord>> {
    let methods = cfg.plan.phase_methods();
    let mut jobs = Vec::new();
    for (g, &(k, m, n)) in cfg.plan.grid().iter().enumerate() {
        let system = cfg.system_at(k, m, n);
        system.validate()?;
        for t in 0..cfg.plan.trials {
            jobs.push((system.clone(), trial_seed(cfg.plan.seed, g, t)));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let rows: Vec<Vec<TrialRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|(system, seed)| run_trial(system, &methods, *seed))
            .collect::<Result<_>>()
    })?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: "<csv output>".into(),
        source,
    })?;
    Ok(())
}
