//! Scenario files: the on-disk TOML schema, its conversion into a system
//! configuration, command-line overrides, and single-parameter sweeps.
//!
//! A scenario is a TOML document with four sections plus an optional sweep:
//!
//! ```toml
//! [system]
//! n = 10                    # servers
//! mu = 0.1666666666666667   # service rate per kilobit, per second
//! policy = "fcfs"           # fcfs | npq | pq
//!
//! [[class]]
//! k = 5                     # recovery threshold
//! l = 1.0                   # file size in kilobits
//! lambda = 0.15             # arrival rate, jobs/s
//!
//! [[class]]
//! k = 5
//! lambda = 0.5
//!
//! [sweep]
//! parameter = "class2.k"
//! values = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
//! ```
//!
//! Omitted fields take the documented defaults; `[power]` defaults to the
//! reference server (c0 = 203.13 W, p_a = 120 W, c_l = 15 W, p_l = 13.1 W,
//! d_l = 4 s, w_l = 6 s) and `[sim]` to 10^5 jobs × 10 replications.
//!
//! Sweep parameters are dotted paths: `n`, `mu`, `f`, `power.d_l`,
//! `power.w_l`, `service.alpha`, `arrival.alpha`, or `class<ID>.<field>`
//! with field one of `k`, `r`, `l`, `lambda`. Sweeping `n` moves the
//! fan-out of every full-fork class (`r = n`) along with it.

use std::path::Path;

use anyhow::{bail, Context, Result};
use fjsim_core::model::{
    ArrivalFamily, DataClass, Policy, PowerModel, ServiceFamily, SimControls, SystemConfig,
};
use serde::Deserialize;

// ====================================================================
// TOML schema
// ====================================================================

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    system: SystemSection,
    #[serde(rename = "class")]
    classes: Vec<ClassSection>,
    #[serde(default)]
    power: PowerSection,
    #[serde(default)]
    sim: SimSection,
    sweep: Option<SweepSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    n: u32,
    mu: f64,
    #[serde(default = "one")]
    f: f64,
    #[serde(default = "default_policy")]
    policy: String,
    #[serde(default = "default_service")]
    service: String,
    service_alpha: Option<f64>,
    #[serde(default = "default_arrivals")]
    arrivals: String,
    arrival_alpha: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassSection {
    id: Option<u32>,
    k: u32,
    #[serde(default = "one")]
    l: f64,
    lambda: f64,
    /// Fan-out; defaults to `n` (full fork).
    r: Option<u32>,
    /// Priority rank (1 = highest); defaults to listing order.
    priority: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerSection {
    #[serde(default = "default_c0")]
    c0: f64,
    #[serde(default = "default_p_a")]
    p_a: f64,
    #[serde(default = "default_c_l")]
    c_l: f64,
    #[serde(default = "default_p_l")]
    p_l: f64,
    #[serde(default = "default_d_l")]
    d_l: f64,
    #[serde(default = "default_w_l")]
    w_l: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    #[serde(default = "default_jobs")]
    jobs: u64,
    /// Completions discarded from latency statistics; defaults to jobs/10.
    warmup: Option<u64>,
    #[serde(default = "default_replications")]
    replications: u32,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    allow_unstable: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    parameter: String,
    values: Vec<f64>,
}

fn one() -> f64 {
    1.0
}
fn default_policy() -> String {
    "fcfs".into()
}
fn default_service() -> String {
    "exponential".into()
}
fn default_arrivals() -> String {
    "poisson".into()
}
fn default_c0() -> f64 {
    203.13
}
fn default_p_a() -> f64 {
    120.0
}
fn default_c_l() -> f64 {
    15.0
}
fn default_p_l() -> f64 {
    13.1
}
fn default_d_l() -> f64 {
    4.0
}
fn default_w_l() -> f64 {
    6.0
}
fn default_jobs() -> u64 {
    100_000
}
fn default_replications() -> u32 {
    10
}
fn default_seed() -> u64 {
    42
}

impl Default for PowerSection {
    fn default() -> Self {
        Self {
            c0: default_c0(),
            p_a: default_p_a(),
            c_l: default_c_l(),
            p_l: default_p_l(),
            d_l: default_d_l(),
            w_l: default_w_l(),
        }
    }
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            jobs: default_jobs(),
            warmup: None,
            replications: default_replications(),
            seed: default_seed(),
            allow_unstable: false,
        }
    }
}

// ====================================================================
// Loaded scenario
// ====================================================================

/// A parsed scenario: the base configuration and an optional sweep.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Configuration before any sweep value is applied.
    pub base: SystemConfig,
    /// Sweep parameter path and its values, in file order.
    pub sweep: Option<(String, Vec<f64>)>,
}

/// Loads and converts a scenario file.
///
/// # Errors
///
/// Fails with a line/column diagnostic on malformed TOML or unknown fields,
/// and with a field path on semantically invalid values (unknown policy,
/// missing Pareto shape, duplicate class ids).
pub fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    let file: ScenarioFile = toml::from_str(&text)
        .with_context(|| format!("cannot parse scenario file {}", path.display()))?;
    convert(file).with_context(|| format!("invalid scenario {}", path.display()))
}

fn convert(file: ScenarioFile) -> Result<Scenario> {
    let sys = &file.system;
    let Some(policy) = Policy::parse(&sys.policy) else {
        bail!("system.policy: unknown policy {:?} (expected fcfs, npq, or pq)", sys.policy);
    };
    let service_family = match sys.service.as_str() {
        "exponential" => ServiceFamily::Exponential,
        "deterministic" => ServiceFamily::Deterministic,
        "pareto" => match sys.service_alpha {
            Some(alpha) => ServiceFamily::Pareto { alpha },
            None => bail!("system.service_alpha: required when service = \"pareto\""),
        },
        other => bail!(
            "system.service: unknown family {other:?} (expected exponential, pareto, or deterministic)"
        ),
    };
    let arrival_family = match sys.arrivals.as_str() {
        "poisson" => ArrivalFamily::Poisson,
        "pareto" => match sys.arrival_alpha {
            Some(alpha) => ArrivalFamily::ParetoRenewal { alpha },
            None => bail!("system.arrival_alpha: required when arrivals = \"pareto\""),
        },
        other => bail!("system.arrivals: unknown family {other:?} (expected poisson or pareto)"),
    };

    if file.classes.is_empty() {
        bail!("class: at least one [[class]] section is required");
    }
    let mut classes = Vec::with_capacity(file.classes.len());
    for (pos, c) in file.classes.iter().enumerate() {
        let fallback = pos as u32 + 1;
        classes.push(DataClass {
            id: c.id.unwrap_or(fallback),
            k: c.k,
            l: c.l,
            lambda: c.lambda,
            r: c.r.unwrap_or(sys.n),
            priority_rank: c.priority.unwrap_or(fallback),
        });
    }
    for (i, a) in classes.iter().enumerate() {
        if classes[..i].iter().any(|b| b.id == a.id) {
            bail!("class[{i}].id: duplicate class id {}", a.id);
        }
    }

    let base = SystemConfig {
        n: sys.n,
        mu: sys.mu,
        f: sys.f,
        classes,
        policy,
        service_family,
        arrival_family,
        power: PowerModel {
            c0: file.power.c0,
            p_a: file.power.p_a,
            c_l: file.power.c_l,
            p_l: file.power.p_l,
            d_l: file.power.d_l,
            w_l: file.power.w_l,
        },
        sim: SimControls {
            horizon_jobs: file.sim.jobs,
            warmup_jobs: file.sim.warmup.unwrap_or(file.sim.jobs / 10),
            replications: file.sim.replications,
            seed: file.sim.seed,
            allow_unstable: file.sim.allow_unstable,
        },
    };

    let sweep = match file.sweep {
        Some(s) => {
            if s.values.is_empty() {
                bail!("sweep.values: must not be empty");
            }
            // Surface path typos at load time, not per point mid-run.
            apply_sweep(&base, &s.parameter, s.values[0])
                .with_context(|| format!("sweep.parameter {:?}", s.parameter))?;
            Some((s.parameter, s.values))
        }
        None => None,
    };

    Ok(Scenario { base, sweep })
}

// ====================================================================
// Sweeps and overrides
// ====================================================================

fn as_count(param: &str, value: f64) -> Result<u32> {
    if value.fract() != 0.0 || value < 1.0 || value > u32::MAX as f64 {
        bail!("sweep parameter {param}: value {value} is not a positive integer");
    }
    Ok(value as u32)
}

/// Returns a copy of `base` with the sweep parameter set to `value`.
///
/// # Errors
///
/// Fails on unknown parameter paths, non-integer values for integer
/// parameters, class ids that do not exist, and `service.alpha` /
/// `arrival.alpha` when the corresponding family is not Pareto.
pub fn apply_sweep(base: &SystemConfig, param: &str, value: f64) -> Result<SystemConfig> {
    let mut cfg = base.clone();
    match param {
        "n" => {
            let n = as_count(param, value)?;
            for c in &mut cfg.classes {
                if c.r == base.n {
                    c.r = n;
                }
            }
            cfg.n = n;
        }
        "mu" => cfg.mu = value,
        "f" => cfg.f = value,
        "power.d_l" => cfg.power.d_l = value,
        "power.w_l" => cfg.power.w_l = value,
        "service.alpha" => match &mut cfg.service_family {
            ServiceFamily::Pareto { alpha } => *alpha = value,
            _ => bail!("sweep parameter {param}: service family is not pareto"),
        },
        "arrival.alpha" => match &mut cfg.arrival_family {
            ArrivalFamily::ParetoRenewal { alpha } => *alpha = value,
            _ => bail!("sweep parameter {param}: arrival family is not pareto"),
        },
        _ => {
            let Some(rest) = param.strip_prefix("class") else {
                bail!("unknown sweep parameter {param:?}");
            };
            let Some((id_str, field)) = rest.split_once('.') else {
                bail!("unknown sweep parameter {param:?} (expected class<ID>.<field>)");
            };
            let id: u32 = id_str
                .parse()
                .with_context(|| format!("sweep parameter {param}: bad class id {id_str:?}"))?;
            let Some(class) = cfg.classes.iter_mut().find(|c| c.id == id) else {
                bail!("sweep parameter {param}: no class with id {id}");
            };
            match field {
                "k" => class.k = as_count(param, value)?,
                "r" => class.r = as_count(param, value)?,
                "l" => class.l = value,
                "lambda" => class.lambda = value,
                other => bail!(
                    "sweep parameter {param}: unknown field {other:?} (expected k, r, l, or lambda)"
                ),
            }
        }
    }
    Ok(cfg)
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// Replaces the base seed.
    pub seed: Option<u64>,
    /// Replaces the completion horizon; warm-up is rescaled to jobs/10.
    pub jobs: Option<u64>,
    /// Replaces the replication count.
    pub replications: Option<u32>,
    /// Turns the stability rejection into a warning (never turns it back on).
    pub allow_unstable: bool,
    /// Replaces the scheduling policy.
    pub policy: Option<Policy>,
}

/// Applies overrides in place.
pub fn apply_overrides(cfg: &mut SystemConfig, o: &Overrides) {
    if let Some(seed) = o.seed {
        cfg.sim.seed = seed;
    }
    if let Some(jobs) = o.jobs {
        cfg.sim.horizon_jobs = jobs;
        cfg.sim.warmup_jobs = jobs / 10;
    }
    if let Some(reps) = o.replications {
        cfg.sim.replications = reps;
    }
    if o.allow_unstable {
        cfg.sim.allow_unstable = true;
    }
    if let Some(policy) = o.policy {
        cfg.policy = policy;
    }
}

// ====================================================================
// Tests
// ====================================================================
