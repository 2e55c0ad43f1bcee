//! Experiment configuration files.
//!
//! The format is flat `key: value` text. Values are numbers, bare words,
//! or bracketed lists (`[2, 4, 6]`). `#` starts a comment. Unknown and
//! duplicate keys are rejected, and every error names the key and line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ris_core::alternating::SolverParams;
use ris_core::model::{AntennaGains, Geometry};
use ris_core::units;
use ris_core::{PhaseMethod, SystemConfig};

use crate::error::{HarnessError, Result};

/// What to run: trial count, base seed, methods and the sweep grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub trials: usize,
    pub seed: u64,
    /// Method families in output order. `quant` expands over `sweep_bits`.
    pub methods: Vec<MethodFamily>,
    pub sweep_users: Vec<usize>,
    pub sweep_antennas: Vec<usize>,
    pub sweep_elements: Vec<usize>,
    pub sweep_bits: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodFamily {
    Sdr,
    Lse,
    Quant,
    RandomBaseline,
}

impl MethodFamily {
    pub fn tag(self) -> &'static str {
        match self {
            MethodFamily::Sdr => "sdr",
            MethodFamily::Lse => "lse",
            MethodFamily::Quant => "quant",
            MethodFamily::RandomBaseline => "random-baseline",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "sdr" => Some(MethodFamily::Sdr),
            "lse" => Some(MethodFamily::Lse),
            "quant" => Some(MethodFamily::Quant),
            "random-baseline" => Some(MethodFamily::RandomBaseline),
            _ => None,
        }
    }
}

impl ExperimentPlan {
    /// Concrete methods in output order.
    pub fn phase_methods(&self) -> Vec<PhaseMethod> {
        let mut out = Vec::new();
        for family in &self.methods {
            match family {
                MethodFamily::Sdr => out.push(PhaseMethod::Sdr),
                MethodFamily::Lse => out.push(PhaseMethod::Lse),
                MethodFamily::Quant => out.extend(
                    self.sweep_bits
                        .iter()
                        .map(|&bits| PhaseMethod::Quantized { bits }),
                ),
                MethodFamily::RandomBaseline => out.push(PhaseMethod::RandomBaseline),
            }
        }
        out
    }

    /// `(K, M, N)` grid points in output order.
    pub fn grid(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for &k in &self.sweep_users {
            for &m in &self.sweep_antennas {
                for &n in &self.sweep_elements {
                    out.push((k, m, n));
                }
            }
        }
        out
    }
}

/// A parsed configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    /// Explicit noise power; `None` derives it from the bandwidth.
    pub noise_power_w: Option<f64>,
    pub plan: ExperimentPlan,
}

impl ExperimentConfig {
    /// The system configuration at one grid point.
    pub fn system_at(&self, k: usize, m: usize, n: usize) -> SystemConfig {
        SystemConfig {
            k,
            m,
            n,
            ..self.system.clone()
        }
    }
}

const KEYS: &[&str] = &[
    "bs_antennas",
    "ris_elements",
    "users",
    "alpha",
    "kappa",
    "p_max_w",
    "noise_power_w",
    "bandwidth_hz",
    "sar_ref",
    "emf_max",
    "gain_bs_dbi",
    "gain_ris_dbi",
    "gain_user_dbi",
    "ris_position",
    "r_min",
    "r_max",
    "d_bs_over_lambda",
    "d_ris_over_lambda",
    "ris_correlation",
    "quant_bits",
    "quant_window",
    "quant_epsilon",
    "sdr_randomizations",
    "ao_tol",
    "ao_max_iter",
    "trials",
    "seed",
    "methods",
    "sweep_users",
    "sweep_antennas",
    "sweep_elements",
    "sweep_bits",
];

const REQUIRED: &[&str] = &["trials", "methods"];

#[derive(Debug, Clone)]
enum Value {
    Scalar(String),
    List(Vec<String>),
}

struct Entry {
    line: usize,
    value: Value,
}

struct Fields {
    entries: BTreeMap<String, Entry>,
}

fn err(key: &str, line: Option<usize>, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        key: key.to_string(),
        line,
        message: message.into(),
    }
}

impl Fields {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once(':') else {
                return Err(err(
                    "",
                    Some(line),
                    format!("expected `key: value`, got `{content}`"),
                ));
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(err(key, Some(line), "unknown key"));
            }
            let value = value.trim();
            let value = if let Some(inner) = value.strip_prefix('[') {
                let inner = inner
                    .strip_suffix(']')
                    .ok_or_else(|| err(key, Some(line), "unterminated list"))?;
                let items: Vec<String> = inner
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                Value::List(items)
            } else if value.is_empty() {
                return Err(err(key, Some(line), "missing value"));
            } else {
                Value::Scalar(value.to_string())
            };
            if let Some(prev) = entries.insert(key.to_string(), Entry { line, value }) {
                return Err(err(
                    key,
                    Some(line),
                    format!("duplicate key (first set on line {})", prev.line),
                ));
            }
        }
        for key in REQUIRED {
            if !entries.contains_key(*key) {
                return Err(err(key, None, "missing required key"));
            }
        }
        Ok(Self { entries })
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn scalar<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        let Some(entry) = self.entries.get(key) else {
            return Ok(None);
        };
        match &entry.value {
            Value::Scalar(s) => s
                .parse()
                .map(Some)
                .map_err(|_| err(key, Some(entry.line), format!("cannot parse `{s}`"))),
            Value::List(_) => Err(err(
                key,
                Some(entry.line),
                "expected a single value, got a list",
            )),
        }
    }

    /// A list; a bare scalar counts as a one-element list.
    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some(entry) = self.entries.get(key) else {
            return Ok(None);
        };
        let items = match &entry.value {
            Value::Scalar(s) => vec![s.clone()],
            Value::List(v) => v.clone(),
        };
        if items.is_empty() {
            return Err(err(key, Some(entry.line), "empty list"));
        }
        items
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|_| err(key, Some(entry.line), format!("cannot parse `{s}`")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    fn check(&self, key: &str, ok: bool, constraint: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(err(
                key,
                self.line(key),
                format!("value out of range, must satisfy {constraint}"),
            ))
        }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let f = Fields::parse(text)?;
    let d = SystemConfig::default();
    let mut solver = SolverParams::default();

    let m: usize = f.scalar("bs_antennas")?.unwrap_or(d.m);
    let n: usize = f.scalar("ris_elements")?.unwrap_or(d.n);
    let k: usize = f.scalar("users")?.unwrap_or(d.k);
    f.check("bs_antennas", m >= 1, ">= 1")?;
    f.check("ris_elements", n >= 1, ">= 1")?;
    f.check("users", k >= 1, ">= 1")?;

    let alpha: f64 = f.scalar("alpha")?.unwrap_or(d.alpha);
    f.check("alpha", alpha > 0.0 && alpha <= 1.0, "alpha in (0,1]")?;
    let kappa: f64 = f.scalar("kappa")?.unwrap_or(d.kappa);
    f.check("kappa", kappa >= 0.0, ">= 0 (inf allowed)")?;
    let p_max: f64 = f.scalar("p_max_w")?.unwrap_or(d.p_max);
    f.check("p_max_w", p_max > 0.0 && p_max.is_finite(), "> 0")?;
    let bandwidth_hz: f64 = f.scalar("bandwidth_hz")?.unwrap_or(d.bandwidth_hz);
    f.check(
        "bandwidth_hz",
        bandwidth_hz > 0.0 && bandwidth_hz.is_finite(),
        "> 0",
    )?;
    let noise_power_w: Option<f64> = f.scalar("noise_power_w")?;
    if let Some(s) = noise_power_w {
        f.check("noise_power_w", s > 0.0 && s.is_finite(), "> 0")?;
    }
    let sigma2 = match noise_power_w {
        Some(s) => s,
        None => units::noise_power(bandwidth_hz)
            .map_err(|e| err("bandwidth_hz", f.line("bandwidth_hz"), e.to_string()))?,
    };

    let sar_ref: Vec<f64> = f.list("sar_ref")?.unwrap_or(d.sar_ref.clone());
    f.check(
        "sar_ref",
        sar_ref.iter().all(|&s| s > 0.0 && s.is_finite()),
        "every entry > 0",
    )?;
    let emf_max: Vec<f64> = f.list("emf_max")?.unwrap_or(d.emf_max.clone());
    f.check(
        "emf_max",
        emf_max.iter().all(|&s| s > 0.0 && s.is_finite()),
        "every entry > 0",
    )?;

    let gains = AntennaGains {
        bs_dbi: f.scalar("gain_bs_dbi")?.unwrap_or(d.gains.bs_dbi),
        ris_dbi: f.scalar("gain_ris_dbi")?.unwrap_or(d.gains.ris_dbi),
        user_dbi: f.scalar("gain_user_dbi")?.unwrap_or(d.gains.user_dbi),
    };
    let ris: Vec<f64> = f
        .list("ris_position")?
        .unwrap_or(vec![d.geometry.ris_position[0], d.geometry.ris_position[1]]);
    f.check(
        "ris_position",
        ris.len() == 2,
        "exactly two coordinates [x, y]",
    )?;
    let geometry = Geometry {
        ris_position: [ris[0], ris[1]],
        r_min: f.scalar("r_min")?.unwrap_or(d.geometry.r_min),
        r_max: f.scalar("r_max")?.unwrap_or(d.geometry.r_max),
    };
    f.check("r_min", geometry.r_min >= 0.0, ">= 0")?;
    f.check("r_max", geometry.r_max > geometry.r_min, "r_max > r_min")?;
    let d_bs: f64 = f.scalar("d_bs_over_lambda")?.unwrap_or(d.d_bs_over_lambda);
    f.check("d_bs_over_lambda", d_bs > 0.0, "> 0")?;
    let d_ris: f64 = f
        .scalar("d_ris_over_lambda")?
        .unwrap_or(d.d_ris_over_lambda);
    f.check("d_ris_over_lambda", d_ris > 0.0, "> 0")?;
    let ris_correlation: f64 = f.scalar("ris_correlation")?.unwrap_or(d.ris_correlation);
    f.check(
        "ris_correlation",
        (0.0..1.0).contains(&ris_correlation),
        "in [0,1)",
    )?;

    solver.quant.bits = f.scalar("quant_bits")?.unwrap_or(solver.quant.bits);
    f.check(
        "quant_bits",
        (1..=16).contains(&solver.quant.bits),
        "in [1,16]",
    )?;
    solver.quant.window = f.scalar("quant_window")?.unwrap_or(solver.quant.window);
    f.check("quant_window", solver.quant.window >= 1, ">= 1")?;
    solver.quant.epsilon = f.scalar("quant_epsilon")?.unwrap_or(solver.quant.epsilon);
    f.check("quant_epsilon", solver.quant.epsilon >= 0.0, ">= 0")?;
    solver.sdr.randomizations = f
        .scalar("sdr_randomizations")?
        .unwrap_or(solver.sdr.randomizations);
    f.check("sdr_randomizations", solver.sdr.randomizations >= 1, ">= 1")?;
    solver.tol = f.scalar("ao_tol")?.unwrap_or(solver.tol);
    f.check("ao_tol", solver.tol > 0.0, "> 0")?;
    solver.max_iter = f.scalar("ao_max_iter")?.unwrap_or(solver.max_iter);
    f.check("ao_max_iter", solver.max_iter >= 1, ">= 1")?;

    let trials: usize = f.scalar("trials")?.expect("required key");
    f.check("trials", trials >= 1, ">= 1")?;
    let seed: u64 = f.scalar("seed")?.unwrap_or(0);
    let names: Vec<String> = f.list("methods")?.expect("required key");
    let mut methods = Vec::new();
    for name in &names {
        let family = MethodFamily::parse(name).ok_or_else(|| {
            err(
                "methods",
                f.line("methods"),
                format!("unknown method `{name}` (expected sdr, lse, quant, random-baseline)"),
            )
        })?;
        if methods.contains(&family) {
            return Err(err(
                "methods",
                f.line("methods"),
                format!("method `{name}` listed twice"),
            ));
        }
        methods.push(family);
    }
    let sweep_users: Vec<usize> = f.list("sweep_users")?.unwrap_or(vec![k]);
    f.check(
        "sweep_users",
        sweep_users.iter().all(|&v| v >= 1),
        "every entry >= 1",
    )?;
    let sweep_antennas: Vec<usize> = f.list("sweep_antennas")?.unwrap_or(vec![m]);
    f.check(
        "sweep_antennas",
        sweep_antennas.iter().all(|&v| v >= 1),
        "every entry >= 1",
    )?;
    let sweep_elements: Vec<usize> = f.list("sweep_elements")?.unwrap_or(vec![n]);
    f.check(
        "sweep_elements",
        sweep_elements.iter().all(|&v| v >= 1),
        "every entry >= 1",
    )?;
    let sweep_bits: Vec<u32> = f.list("sweep_bits")?.unwrap_or(vec![solver.quant.bits]);
    f.check(
        "sweep_bits",
        sweep_bits.iter().all(|b| (1..=16).contains(b)),
        "every entry in [1,16]",
    )?;

    for &kk in &sweep_users {
        for (key, v) in [("sar_ref", &sar_ref), ("emf_max", &emf_max)] {
            f.check(
                key,
                v.len() == 1 || v.len() == kk,
                "one entry, or one per user at every swept user count",
            )?;
        }
    }

    let system = SystemConfig {
        m,
        n,
        k,
        alpha,
        sigma2,
        kappa,
        p_max,
        sar_ref,
        emf_max,
        gains,
        geometry,
        bandwidth_hz,
        d_bs_over_lambda: d_bs,
        d_ris_over_lambda: d_ris,
        ris_correlation,
        solver,
    };
    system
        .validate()
        .map_err(|e| err("", None, e.to_string()))?;
    let plan = ExperimentPlan {
        trials,
        seed,
        methods,
        sweep_users,
        sweep_antennas,
        sweep_elements,
        sweep_bits,
    };
    Ok(ExperimentConfig {
        system,
        noise_power_w,
        plan,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config {
        key: String::new(),
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config(&text)
}

fn list<T: std::fmt::Display>(v: &[T]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

/// Writes every key explicitly; [`parse_config`] reads the text back to an
/// identical configuration.
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let s = &cfg.system;
    let p = &cfg.plan;
    let mut out = String::new();
    let mut put = |key: &str, value: String| {
        writeln!(out, "{key}: {value}").expect("writing to a String");
    };
    put("bs_antennas", s.m.to_string());
    put("ris_elements", s.n.to_string());
    put("users", s.k.to_string());
    put("alpha", s.alpha.to_string());
    put("kappa", s.kappa.to_string());
    put("p_max_w", s.p_max.to_string());
    if let Some(noise) = cfg.noise_power_w {
        put("noise_power_w", noise.to_string());
    }
    put("bandwidth_hz", s.bandwidth_hz.to_string());
    put("sar_ref", list(&s.sar_ref));
    put("emf_max", list(&s.emf_max));
    put("gain_bs_dbi", s.gains.bs_dbi.to_string());
    put("gain_ris_dbi", s.gains.ris_dbi.to_string());
    put("gain_user_dbi", s.gains.user_dbi.to_string());
    put("ris_position", list(&s.geometry.ris_position));
    put("r_min", s.geometry.r_min.to_string());
    put("r_max", s.geometry.r_max.to_string());
    put("d_bs_over_lambda", s.d_bs_over_lambda.to_string());
    put("d_ris_over_lambda", s.d_ris_over_lambda.to_string());
    put("ris_correlation", s.ris_correlation.to_string());
    put("quant_bits", s.solver.quant.bits.to_string());
    put("quant_window", s.solver.quant.window.to_string());
    put("quant_epsilon", s.solver.quant.epsilon.to_string());
    put(
        "sdr_randomizations",
        s.solver.sdr.randomizations.to_string(),
    );
    put("ao_tol", s.solver.tol.to_string());
    put("ao_max_iter", s.solver.max_iter.to_string());
    put("trials", p.trials.to_string());
    put("seed", p.seed.to_string());
    put(
        "methods",
        list(&p.methods.iter().map(|m| m.tag()).collect::<Vec<_>>()),
    );
    put("sweep_users", list(&p.sweep_users));
    put("sweep_antennas", list(&p.sweep_antennas));
    put("sweep_elements", list(&p.sweep_elements));
    put("sweep_bits", list(&p.sweep_bits));
    out
}
