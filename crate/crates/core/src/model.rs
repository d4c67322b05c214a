//! System configuration: the cluster, its data classes, the power model, and
//! validation into a frozen, derived-quantity-carrying form.
//!
//! A cluster of `n` servers stores each class-i file with an (n, kᵢ) MDS
//! erasure code: any kᵢ of the n encoded chunks reconstruct the file. A read
//! request (job) forks into sub-tasks on rᵢ servers (kᵢ ≤ rᵢ ≤ n) and
//! completes when kᵢ sub-tasks finish. Each sub-task carries lᵢ/kᵢ kilobits,
//! so with per-kilobit service rate `mu` and frequency factor `f` the
//! effective per-sub-task service rate of class i is
//!
//! ```text
//! μᵢ = kᵢ · f · mu / lᵢ
//! ```
//!
//! # Units
//!
//! Time in seconds, file sizes in kilobits, rates per second, power in watts,
//! energy in joules. Efficiency is reported in bits per joule (kilobits
//! converted ×1000 at reporting time, see the metrics module).
//!
//! # Validation
//!
//! [`validate`] checks every structural invariant, computes the derived
//! quantities (μᵢ, P_on, P_off, the nondecreasing-k relabeling used by the
//! sequential-stage lower bounds), and runs the stability condition for the
//! configured policy; an unstable configuration is rejected unless
//! `allow_unstable` is set. All violations are reported together, each with
//! its field path.

use crate::distributions::{Distribution, DistributionError};

/// Scheduling policy applied at every server queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// First-come-first-serve on sub-task enqueue time.
    Fcfs,
    /// Higher-priority sub-tasks go first, but service is never interrupted.
    NonPreemptivePriority,
    /// An arriving higher-priority sub-task suspends the one in service
    /// (preempt-resume: remaining work is retained).
    PreemptivePriority,
}

impl Policy {
    /// Stable short name used in CSV output and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            Policy::Fcfs => "fcfs",
            Policy::NonPreemptivePriority => "npq",
            Policy::PreemptivePriority => "pq",
        }
    }

    /// Parse the short name produced by [`Policy::name`].
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fcfs" => Some(Policy::Fcfs),
            "npq" => Some(Policy::NonPreemptivePriority),
            "pq" => Some(Policy::PreemptivePriority),
            _ => None,
        }
    }

    /// Whether this policy uses priority ranks at all.
    pub fn is_priority(self) -> bool {
        !matches!(self, Policy::Fcfs)
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Family of service-time distributions, instantiated per class with rate μᵢ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceFamily {
    /// Exponential with rate μᵢ.
    Exponential,
    /// Pareto with shape `alpha`, scale chosen so the mean equals 1/μᵢ.
    Pareto { alpha: f64 },
    /// Every sub-task takes exactly 1/μᵢ.
    Deterministic,
}

/// Family of inter-arrival distributions, instantiated per class with rate λᵢ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrivalFamily {
    /// Poisson arrivals: exponential inter-arrival times with rate λᵢ.
    Poisson,
    /// Renewal process with Pareto inter-arrival times of shape `alpha`,
    /// scale chosen so the mean inter-arrival equals 1/λᵢ.
    ParetoRenewal { alpha: f64 },
}

/// Per-class parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataClass {
    /// Stable identifier (unique across classes).
    pub id: u32,
    /// MDS recovery threshold: sub-tasks needed to complete a job.
    pub k: u32,
    /// File size in kilobits.
    pub l: f64,
    /// Arrival rate in jobs per second.
    pub lambda: f64,
    /// Redundancy fan-out: servers contacted per job (k ≤ r ≤ n).
    pub r: u32,
    /// Priority rank; 1 is the highest priority.
    pub priority_rank: u32,
}

/// Power-state parameters of one server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    /// Maximum CPU power in watts; active CPU power is c0·f³.
    pub c0: f64,
    /// Platform power while active, in watts.
    pub p_a: f64,
    /// CPU power in the low-power state, in watts.
    pub c_l: f64,
    /// Platform power in the low-power state, in watts.
    pub p_l: f64,
    /// Idle linger: how long a server stays active after its queue drains
    /// before entering the low-power state, in seconds.
    pub d_l: f64,
    /// Wake-up latency in seconds: time at active power, processing nothing,
    /// before a low-power server can serve again.
    pub w_l: f64,
}

impl PowerModel {
    /// Active power at frequency factor `f`: c0·f³ + p_a.
    pub fn p_on(&self, f: f64) -> f64 {
        self.c0 * f * f * f + self.p_a
    }

    /// Low-power draw: c_l + p_l.
    pub fn p_off(&self) -> f64 {
        self.c_l + self.p_l
    }
}

/// Simulation controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimControls {
    /// Total completed jobs at which the run stops.
    pub horizon_jobs: u64,
    /// Completions discarded from latency statistics (energy accounting
    /// always covers the full run).
    pub warmup_jobs: u64,
    /// Independent replications, each with a decorrelated seed.
    pub replications: u32,
    /// Base seed; every random stream in a run derives from it.
    pub seed: u64,
    /// Accept configurations that fail the stability condition (the engine's
    /// divergence guard still bounds such runs).
    pub allow_unstable: bool,
}

impl SimControls {
    /// Controls with the conventional warm-up of 10% of the horizon.
    pub fn with_default_warmup(
        horizon_jobs: u64,
        replications: u32,
        seed: u64,
    ) -> Self {
        Self {
            horizon_jobs,
            warmup_jobs: horizon_jobs / 10,
            replications,
            seed,
            allow_unstable: false,
        }
    }
}

/// Full system description prior to validation.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of storage servers.
    pub n: u32,
    /// Service rate per kilobit, per second.
    pub mu: f64,
    /// CPU frequency factor in (0, 1].
    pub f: f64,
    /// Data classes, listed in priority order by default.
    pub classes: Vec<DataClass>,
    /// Scheduling policy at every server.
    pub policy: Policy,
    /// Service-time family shared by all classes.
    pub service_family: ServiceFamily,
    /// Inter-arrival family shared by all classes.
    pub arrival_family: ArrivalFamily,
    /// Power-state parameters.
    pub power: PowerModel,
    /// Simulation controls.
    pub sim: SimControls,
}

/// A single validation failure, located by field path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    /// A structural invariant is violated at `field`.
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    /// The stability condition for the configured policy fails.
    #[error("unstable under {policy}: {message} (set allow_unstable to run anyway)")]
    Unstable { policy: Policy, message: String },
}

/// A validated configuration with frozen derived quantities.
///
/// Immutable and freely shareable across threads. The class order of the
/// original [`SystemConfig`] is preserved; the nondecreasing-k relabeling and
/// the priority ordering are carried as index permutations.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    cfg: SystemConfig,
    mu_eff: Vec<f64>,
    p_on: f64,
    p_off: f64,
    k_order: Vec<usize>,
    priority_order: Vec<usize>,
    stable: bool,
}

impl ValidatedConfig {
    /// The underlying configuration.
    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    /// Number of servers.
    pub fn n(&self) -> u32 {
        self.cfg.n
    }

    /// Number of classes.
    pub fn num_classes(&self) -> usize {
        self.cfg.classes.len()
    }

    /// Classes in their configured order.
    pub fn classes(&self) -> &[DataClass] {
        &self.cfg.classes
    }

    /// The class at `index` in configured order.
    pub fn class(&self, index: usize) -> &DataClass {
        &self.cfg.classes[index]
    }

    /// Index of the class with the given id, if any.
    pub fn class_index(&self, id: u32) -> Option<usize> {
        self.cfg.classes.iter().position(|c| c.id == id)
    }

    /// Effective service rate μᵢ = kᵢ·f·mu/lᵢ of the class at `index`.
    pub fn mu_eff(&self, index: usize) -> f64 {
        self.mu_eff[index]
    }

    /// Active power P_on = c0·f³ + p_a.
    pub fn p_on(&self) -> f64 {
        self.p_on
    }

    /// Low-power draw P_off = c_l + p_l.
    pub fn p_off(&self) -> f64 {
        self.p_off
    }

    /// Class indices sorted by nondecreasing k (ties broken by priority rank,
    /// then id) — the relabeling under which the sequential-stage bounds
    /// count finished classes.
    pub fn k_order(&self) -> &[usize] {
        &self.k_order
    }

    /// Class indices sorted by priority rank (highest priority first).
    pub fn priority_order(&self) -> &[usize] {
        &self.priority_order
    }

    /// Whether the stability condition for the configured policy holds.
    pub fn is_stable(&self) -> bool {
        self.stable
    }

    /// The per-sub-task service distribution of the class at `index`.
    ///
    /// Rates are baked in at validation time, so this cannot fail.
    pub fn service_distribution(&self, index: usize) -> Distribution {
        let rate = self.mu_eff[index];
        match self.cfg.service_family {
            ServiceFamily::Exponential => Distribution::exponential(rate),
            ServiceFamily::Pareto { alpha } => Distribution::pareto_with_mean_rate(alpha, rate),
            ServiceFamily::Deterministic => Distribution::deterministic(1.0 / rate),
        }
        .expect("service distribution parameters were validated")
    }

    /// The inter-arrival distribution of the class at `index`.
    pub fn interarrival_distribution(&self, index: usize) -> Distribution {
        let rate = self.cfg.classes[index].lambda;
        match self.cfg.arrival_family {
            ArrivalFamily::Poisson => Distribution::exponential(rate),
            ArrivalFamily::ParetoRenewal { alpha } => {
                Distribution::pareto_with_mean_rate(alpha, rate)
            }
        }
        .expect("arrival distribution parameters were validated")
    }
}

/// Effective service rate μᵢ of the class with the given id.
///
/// # Errors
/// Returns `None` for an unknown class id.
pub fn effective_rate(cfg: &ValidatedConfig, class_id: u32) -> Option<f64> {
    cfg.class_index(class_id).map(|i| cfg.mu_eff(i))
}

fn check_distribution(
    errors: &mut Vec<ConfigError>,
    field: &str,
    result: Result<Distribution, DistributionError>,
) {
    if let Err(e) = result {
        errors.push(ConfigError::Invalid {
            field: field.to_string(),
            message: e.to_string(),
        });
    }
}

/// Validate a configuration, computing all derived quantities.
///
/// Every violated invariant is reported (not just the first). Instability
/// under the configured policy is an error unless `sim.allow_unstable` is
/// set; it is reported distinctly from structural violations.
///
/// Validation is idempotent: re-validating the [`SystemConfig`] inside a
/// [`ValidatedConfig`] reproduces it exactly.
pub fn validate(cfg: SystemConfig) -> Result<ValidatedConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();

    if cfg.n == 0 {
        errors.push(ConfigError::Invalid {
            field: "n".into(),
            message: "server count must be positive".into(),
        });
    }
    if !cfg.mu.is_finite() || cfg.mu <= 0.0 {
        errors.push(ConfigError::Invalid {
            field: "mu".into(),
            message: format!("service rate per kilobit must be positive, got {}", cfg.mu),
        });
    }
    if !cfg.f.is_finite() || cfg.f <= 0.0 || cfg.f > 1.0 {
        errors.push(ConfigError::Invalid {
            field: "f".into(),
            message: format!("frequency factor must be in (0, 1], got {}", cfg.f),
        });
    }
    if cfg.classes.is_empty() {
        errors.push(ConfigError::Invalid {
            field: "classes".into(),
            message: "at least one class is required".into(),
        });
    }

    for (i, c) in cfg.classes.iter().enumerate() {
        let path = |leaf: &str| format!("classes[{i}].{leaf}");
        if c.k == 0 || c.k > cfg.n {
            errors.push(ConfigError::Invalid {
                field: path("k"),
                message: format!("k out of range: need 1 <= k <= n, got k={} with n={}", c.k, cfg.n),
            });
        }
        if c.r < c.k {
            errors.push(ConfigError::Invalid {
                field: path("r"),
                message: format!("redundancy below recovery threshold: r={} < k={}", c.r, c.k),
            });
        }
        if c.r > cfg.n {
            errors.push(ConfigError::Invalid {
                field: path("r"),
                message: format!("redundancy above server count: r={} > n={}", c.r, cfg.n),
            });
        }
        if !c.lambda.is_finite() || c.lambda <= 0.0 {
            errors.push(ConfigError::Invalid {
                field: path("lambda"),
                message: format!("arrival rate must be positive, got {}", c.lambda),
            });
        }
        if !c.l.is_finite() || c.l <= 0.0 {
            errors.push(ConfigError::Invalid {
                field: path("l"),
                message: format!("file size must be positive, got {}", c.l),
            });
        }
        for (j, other) in cfg.classes.iter().enumerate().skip(i + 1) {
            if c.id == other.id {
                errors.push(ConfigError::Invalid {
                    field: format!("classes[{j}].id"),
                    message: format!("duplicate class id {}", other.id),
                });
            }
            if c.priority_rank == other.priority_rank {
                errors.push(ConfigError::Invalid {
                    field: format!("classes[{j}].priority_rank"),
                    message: format!("duplicate priority rank {}", other.priority_rank),
                });
            }
        }
    }

    for (field, value) in [
        ("power.c0", cfg.power.c0),
        ("power.p_a", cfg.power.p_a),
        ("power.c_l", cfg.power.c_l),
        ("power.p_l", cfg.power.p_l),
        ("power.d_l", cfg.power.d_l),
        ("power.w_l", cfg.power.w_l),
    ] {
        if !value.is_finite() || value < 0.0 {
            errors.push(ConfigError::Invalid {
                field: field.into(),
                message: format!("power parameter must be nonnegative, got {value}"),
            });
        }
    }

    if cfg.sim.horizon_jobs == 0 {
        errors.push(ConfigError::Invalid {
            field: "sim.horizon_jobs".into(),
            message: "horizon must be at least one job".into(),
        });
    }
    if cfg.sim.warmup_jobs >= cfg.sim.horizon_jobs && cfg.sim.horizon_jobs > 0 {
        errors.push(ConfigError::Invalid {
            field: "sim.warmup_jobs".into(),
            message: format!(
                "warm-up ({}) must be below the horizon ({})",
                cfg.sim.warmup_jobs, cfg.sim.horizon_jobs
            ),
        });
    }
    if cfg.sim.replications == 0 {
        errors.push(ConfigError::Invalid {
            field: "sim.replications".into(),
            message: "at least one replication is required".into(),
        });
    }

    // Distribution families must instantiate for every class rate; a Pareto
    // shape with infinite mean cannot be mean-matched and is rejected here.
    if errors.is_empty() {
        for (i, c) in cfg.classes.iter().enumerate() {
            let rate = c.k as f64 * cfg.f * cfg.mu / c.l;
            match cfg.service_family {
                ServiceFamily::Exponential => check_distribution(
                    &mut errors,
                    "service_family",
                    Distribution::exponential(rate),
                ),
                ServiceFamily::Pareto { alpha } => check_distribution(
                    &mut errors,
                    "service_family.alpha",
                    Distribution::pareto_with_mean_rate(alpha, rate),
                ),
                ServiceFamily::Deterministic => check_distribution(
                    &mut errors,
                    "service_family",
                    Distribution::deterministic(1.0 / rate),
                ),
            }
            match cfg.arrival_family {
                ArrivalFamily::Poisson => check_distribution(
                    &mut errors,
                    &format!("classes[{i}].lambda"),
                    Distribution::exponential(c.lambda),
                ),
                ArrivalFamily::ParetoRenewal { alpha } => check_distribution(
                    &mut errors,
                    "arrival_family.alpha",
                    Distribution::pareto_with_mean_rate(alpha, c.lambda),
                ),
            }
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }

    let mu_eff: Vec<f64> = cfg
        .classes
        .iter()
        .map(|c| c.k as f64 * cfg.f * cfg.mu / c.l)
        .collect();

    let mut k_order: Vec<usize> = (0..cfg.classes.len()).collect();
    k_order.sort_by_key(|&i| {
        let c = &cfg.classes[i];
        (c.k, c.priority_rank, c.id)
    });
    let mut priority_order: Vec<usize> = (0..cfg.classes.len()).collect();
    priority_order.sort_by_key(|&i| cfg.classes[i].priority_rank);

    let mut validated = ValidatedConfig {
        p_on: cfg.power.p_on(cfg.f),
        p_off: cfg.power.p_off(),
        cfg,
        mu_eff,
        k_order,
        priority_order,
        stable: false,
    };

    validated.stable = match validated.cfg.policy {
        Policy::Fcfs => crate::bounds::stability_fcfs(&validated),
        Policy::NonPreemptivePriority | Policy::PreemptivePriority => {
            crate::bounds::stability_priority(&validated)
        }
    };

    if !validated.stable && !validated.cfg.sim.allow_unstable {
        return Err(vec![ConfigError::Unstable {
            policy: validated.cfg.policy,
            message: "arrival load exceeds the service capacity condition".into(),
        }]);
    }

    Ok(validated)
}

/// Ready-made configurations for tests and examples.
pub mod test_fixtures {
    use super::*;

    /// Two-class default used throughout the tests: n=10, k=(5,5), l=1 kb,
    /// λ=(0.15, 0.5), μ=1/6 per kb, f=1, full fork, FCFS, no wake latency.
    pub fn two_class_default() -> SystemConfig {
        SystemConfig {
            n: 10,
            mu: 1.0 / 6.0,
            f: 1.0,
            classes: vec![
                DataClass { id: 1, k: 5, l: 1.0, lambda: 0.15, r: 10, priority_rank: 1 },
                DataClass { id: 2, k: 5, l: 1.0, lambda: 0.5, r: 10, priority_rank: 2 },
            ],
            policy: Policy::Fcfs,
            service_family: ServiceFamily::Exponential,
            arrival_family: ArrivalFamily::Poisson,
            power: PowerModel {
                c0: 203.13,
                p_a: 120.0,
                c_l: 15.0,
                p_l: 13.1,
                d_l: 0.5,
                w_l: 0.0,
            },
            sim: SimControls::with_default_warmup(1000, 2, 7),
        }
    }

    /// Single-class system on one server: the M/M/1 sanity configuration.
    pub fn mm1(lambda: f64, mu: f64) -> SystemConfig {
        SystemConfig {
            n: 1,
            mu,
            f: 1.0,
            classes: vec![DataClass { id: 1, k: 1, l: 1.0, lambda, r: 1, priority_rank: 1 }],
            policy: Policy::Fcfs,
            service_family: ServiceFamily::Exponential,
            arrival_family: ArrivalFamily::Poisson,
            power: PowerModel {
                c0: 203.13,
                p_a: 120.0,
                c_l: 0.0,
                p_l: 0.0,
                d_l: 0.0,
                w_l: 0.0,
            },
            sim: SimControls::with_default_warmup(1000, 2, 7),
        }
    }
}
