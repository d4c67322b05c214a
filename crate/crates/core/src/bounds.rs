//! Closed-form stability conditions and per-class latency bounds for the
//! fork-join cluster under FCFS, non-preemptive and preemptive priority
//! scheduling.
//!
//! # Structure of the bounds
//!
//! **Upper bounds** come from the split-merge relaxation: all servers block
//! until the current job's quorum completes, so a job's service time is the
//! k-th order statistic of n exponentials and the system behaves as an M/G/1
//! queue. With ρᵢ = λᵢ/μᵢ, H¹ᵢ = H(n−kᵢ, n, 1), H²ᵢ = H(n−kᵢ, n, 2) and the
//! cumulative utilization
//!
//! ```text
//! 𝒮ᵢ = Σ_{r≤i} ρ_r · H¹_r        (classes in priority order, 𝒮₀ = 0)
//! ```
//!
//! the per-class means follow the M/G/1 waiting-time structure (plain for
//! FCFS, priority-decomposed otherwise). Each is valid only while its
//! utilization prefix stays below one; that failure is reported as
//! *bound-invalid*, distinct from instability of the system itself.
//!
//! **Lower bounds** come from the sequential-stage enhancement: a class-i job
//! is treated as kᵢ serial stages, stage s served at the best feasible rate
//! (n−s+1)μᵢ. With classes relabeled in nondecreasing k, stage s only
//! contends with classes whose k_r ≥ s (the rest have finished), giving
//! per-stage M/G/1 terms built from
//!
//! ```text
//! t_{s,r} = λ_r / ((n−s+1)·μ_r)
//! 𝒵_sⁱ  = 1 − Σ_{r ∈ ℛ_sⁱ} t_{s,r}
//! ```
//!
//! where ℛ_sⁱ is the set of *higher-priority, still-unfinished* classes at
//! stage s.
//!
//! The **naive lower bound** serializes the kᵢ quorum completions of a lone
//! class: Σ_{j=0}^{kᵢ−1} 1/((n−j)μᵢ − λᵢ).
//!
//! For a single exponential class, all three lower bounds collapse to the
//! naive bound exactly — a cross-check the tests enforce to 10⁻¹² relative.

use crate::distributions::harmonic;
use crate::model::{Policy, ValidatedConfig};

/// Why a bound or latency value could not be produced.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundError {
    /// The system (or a bound's internal queue) is overloaded.
    #[error("unstable: {0}")]
    Unstable(String),
    /// The system may be stable, but this bound's validity condition fails.
    #[error("bound not valid: {0}")]
    Invalid(String),
}

/// Per-class bound outcomes, indexed like `cfg.classes()`.
pub type PerClass = Vec<Result<f64, BoundError>>;

// ============================================================================
// Stability conditions
// ============================================================================

/// Stability of the FCFS fork-join system:
///
/// ```text
/// (Σ_r k_r·λ_r) · (Σ_r λ_r·l_r/k_r)  <  n·f·mu · Σ_r λ_r      (strict)
/// ```
pub fn stability_fcfs(cfg: &ValidatedConfig) -> bool {
    let sys = cfg.config();
    let lhs_jobs: f64 = sys.classes.iter().map(|c| c.k as f64 * c.lambda).sum();
    let lhs_work: f64 = sys.classes.iter().map(|c| c.lambda * c.l / c.k as f64).sum();
    let lambda_total: f64 = sys.classes.iter().map(|c| c.lambda).sum();
    lhs_jobs * lhs_work < sys.n as f64 * sys.f * sys.mu * lambda_total
}

/// Stability of the priority-scheduled system (either kind): total offered
/// work must stay below the cluster processing rate,
/// `Σ_r λ_r·l_r < n·f·mu` (strict).
pub fn stability_priority(cfg: &ValidatedConfig) -> bool {
    let sys = cfg.config();
    let offered: f64 = sys.classes.iter().map(|c| c.lambda * c.l).sum();
    offered < sys.n as f64 * sys.f * sys.mu
}

// ============================================================================
// Single-queue special cases
// ============================================================================

/// Mean latency of an M/M/1 queue: `1/(mu_eff − lambda)`.
///
/// # Errors
/// [`BoundError::Unstable`] when `mu_eff ≤ lambda`.
pub fn mm1_latency(lambda: f64, mu_eff: f64) -> Result<f64, BoundError> {
    if mu_eff <= lambda {
        return Err(BoundError::Unstable(format!(
            "M/M/1 requires mu_eff > lambda, got mu_eff={mu_eff}, lambda={lambda}"
        )));
    }
    Ok(1.0 / (mu_eff - lambda))
}

/// Energy efficiency of the single-server, always-on special case, in bits
/// per joule: `(l·1000)/(p_on·mean_service)` for a file of `l` kilobits.
pub fn mm1_energy_efficiency(l: f64, p_on: f64, mean_service: f64) -> f64 {
    l * 1000.0 / (p_on * mean_service)
}

/// Per-class mean latency of a multi-class M/G/1 FCFS queue via the
/// Pollaczek-Khinchine formula: for class i with service moments
/// `(E[S_r], V[S_r])` and arrival rates `lambda`,
///
/// ```text
/// Tᵢ = E[Sᵢ] + Σ_r λ_r·(V[S_r]+E[S_r]²) / (2·(1 − Σ_r λ_r·E[S_r]))
/// ```
///
/// # Errors
/// [`BoundError::Unstable`] when the utilization `Σ λ_r·E[S_r] ≥ 1`.
///
/// # Panics
/// Panics if the slices have different lengths.
pub fn fcfs_mg1_latency(
    moments: &[(f64, f64)],
    lambda: &[f64],
) -> Result<Vec<f64>, BoundError> {
    assert_eq!(moments.len(), lambda.len(), "one (mean, variance) pair per class");
    let rho: f64 = moments.iter().zip(lambda).map(|(&(m, _), &l)| l * m).sum();
    if rho >= 1.0 {
        return Err(BoundError::Unstable(format!(
            "M/G/1 utilization {rho} >= 1"
        )));
    }
    let second: f64 = moments
        .iter()
        .zip(lambda)
        .map(|(&(m, v), &l)| l * (v + m * m))
        .sum();
    let wait = second / (2.0 * (1.0 - rho));
    Ok(moments.iter().map(|&(m, _)| m + wait).collect())
}

// ============================================================================
// Split-merge upper bounds
// ============================================================================

/// Per-class split-merge ingredients in configured class order.
struct SmTerms {
    /// H(n−kᵢ, n, 1) per class.
    h1: Vec<f64>,
    /// H(n−kᵢ, n, 2) per class.
    h2: Vec<f64>,
    /// ρᵢ = λᵢ/μᵢ per class.
    rho: Vec<f64>,
}

fn sm_terms(cfg: &ValidatedConfig) -> SmTerms {
    let n = cfg.n();
    let mut h1 = Vec::with_capacity(cfg.num_classes());
    let mut h2 = Vec::with_capacity(cfg.num_classes());
    let mut rho = Vec::with_capacity(cfg.num_classes());
    for (i, c) in cfg.classes().iter().enumerate() {
        h1.push(harmonic(n - c.k, n, 1));
        h2.push(harmonic(n - c.k, n, 2));
        rho.push(c.lambda / cfg.mu_eff(i));
    }
    SmTerms { h1, h2, rho }
}

/// `λ_r·(H²_r + (H¹_r)²)/μ_r²` — the split-merge second-moment load of one
/// class, the numerator building block of every upper bound.
fn second_moment_load(cfg: &ValidatedConfig, t: &SmTerms, i: usize) -> f64 {
    let mu = cfg.mu_eff(i);
    cfg.class(i).lambda * (t.h2[i] + t.h1[i] * t.h1[i]) / (mu * mu)
}

/// Cumulative utilization 𝒮 over the first `count` classes in priority
/// order; `count = 0` gives 𝒮₀ = 0.
fn s_prefix(cfg: &ValidatedConfig, t: &SmTerms, count: usize) -> f64 {
    cfg.priority_order()[..count]
        .iter()
        .map(|&r| t.rho[r] * t.h1[r])
        .sum()
}

/// Split-merge upper bound on mean latency per class under FCFS:
///
/// ```text
/// Tᵢ ≤ H¹ᵢ/μᵢ + [Σ_{r=1}^{R} λ_r(H²_r+(H¹_r)²)/μ_r²] / (2(1−𝒮_R))
/// ```
///
/// Every class shares the waiting term; only the service term differs. Each
/// entry is [`BoundError::Invalid`] when `𝒮_R ≥ 1`.
pub fn ub_fcfs(cfg: &ValidatedConfig) -> PerClass {
    let t = sm_terms(cfg);
    let s_all = s_prefix(cfg, &t, cfg.num_classes());
    if s_all >= 1.0 {
        let err = BoundError::Invalid(format!("cumulative utilization {s_all} >= 1"));
        return vec![Err(err); cfg.num_classes()];
    }
    let numerator: f64 = (0..cfg.num_classes())
        .map(|r| second_moment_load(cfg, &t, r))
        .sum();
    let wait = numerator / (2.0 * (1.0 - s_all));
    (0..cfg.num_classes())
        .map(|i| Ok(t.h1[i] / cfg.mu_eff(i) + wait))
        .collect()
}

/// Split-merge upper bound per class under non-preemptive priority:
///
/// ```text
/// Tᵢ ≤ H¹ᵢ/μᵢ + [Σ_{r=1}^{R} λ_r(H²_r+(H¹_r)²)/μ_r²] / (2(1−𝒮_{i−1})(1−𝒮ᵢ))
/// ```
///
/// Class entries with `𝒮ᵢ ≥ 1` are [`BoundError::Invalid`]; classes of
/// higher priority can still be valid.
pub fn ub_npq(cfg: &ValidatedConfig) -> PerClass {
    let t = sm_terms(cfg);
    let numerator: f64 = (0..cfg.num_classes())
        .map(|r| second_moment_load(cfg, &t, r))
        .sum();
    per_class_priority_bound(cfg, &t, |cfg, t, i, pos| {
        let s_prev = s_prefix(cfg, t, pos);
        let s_cur = s_prefix(cfg, t, pos + 1);
        if s_cur >= 1.0 {
            return Err(BoundError::Invalid(format!(
                "cumulative utilization {s_cur} >= 1 at priority position {}",
                pos + 1
            )));
        }
        Ok(t.h1[i] / cfg.mu_eff(i) + numerator / (2.0 * (1.0 - s_prev) * (1.0 - s_cur)))
    })
}

/// Split-merge upper bound per class under preemptive priority:
///
/// ```text
/// Tᵢ ≤ H¹ᵢ/(μᵢ(1−𝒮_{i−1})) + [Σ_{r=1}^{i} λ_r(H²_r+(H¹_r)²)/μ_r²] / (2(1−𝒮_{i−1})(1−𝒮ᵢ))
/// ```
///
/// The sums stop at class i's own priority position: lower-priority classes
/// are invisible to a preemptive class.
pub fn ub_pq(cfg: &ValidatedConfig) -> PerClass {
    let t = sm_terms(cfg);
    per_class_priority_bound(cfg, &t, |cfg, t, i, pos| {
        let s_prev = s_prefix(cfg, t, pos);
        let s_cur = s_prefix(cfg, t, pos + 1);
        if s_cur >= 1.0 {
            return Err(BoundError::Invalid(format!(
                "cumulative utilization {s_cur} >= 1 at priority position {}",
                pos + 1
            )));
        }
        let numerator: f64 = cfg.priority_order()[..=pos]
            .iter()
            .map(|&r| second_moment_load(cfg, t, r))
            .sum();
        Ok(t.h1[i] / (cfg.mu_eff(i) * (1.0 - s_prev))
            + numerator / (2.0 * (1.0 - s_prev) * (1.0 - s_cur)))
    })
}

/// Evaluate a priority-structured bound for every class. The closure receives
/// the class index `i` and its position `pos` in priority order (0 =
/// highest).
fn per_class_priority_bound(
    cfg: &ValidatedConfig,
    t: &SmTerms,
    f: impl Fn(&ValidatedConfig, &SmTerms, usize, usize) -> Result<f64, BoundError>,
) -> PerClass {
    let mut out: PerClass = vec![Ok(0.0); cfg.num_classes()];
    for (pos, &i) in cfg.priority_order().iter().enumerate() {
        out[i] = f(cfg, t, i, pos);
    }
    out
}

// ============================================================================
// Sequential-stage lower bounds
// ============================================================================

/// The contention picture at one stage of the sequential-stage enhancement
/// for one tagged class.
///
/// Exposed for inspection and tests; the bound functions build one per
/// (class, stage).
#[derive(Debug, Clone, PartialEq)]
pub struct StageContext {
    /// Stage index, 1-based (1 ≤ s ≤ kᵢ).
    pub s: u32,
    /// Number of classes whose k_r < s: they have fully finished before this
    /// stage (nondecreasing-k relabeling; ties finish together).
    pub c_s: usize,
    /// Class indices with strictly higher priority than the tagged class and
    /// k_r ≥ s (still unfinished at this stage) — the set ℛ_sⁱ.
    pub higher_unfinished: Vec<usize>,
    /// t_{s,r} = λ_r/((n−s+1)·μ_r) for every class r, in configured order.
    pub t: Vec<f64>,
    /// Residual capacity 𝒵_sⁱ = 1 − Σ_{r ∈ ℛ_sⁱ} t_{s,r}.
    pub z: f64,
}

/// Build the [`StageContext`] of stage `s` for the class at `class_index`.
///
/// # Panics
/// Panics if `s` is 0 or exceeds the class's k.
pub fn stage_context(cfg: &ValidatedConfig, class_index: usize, s: u32) -> StageContext {
    let k_i = cfg.class(class_index).k;
    assert!(s >= 1 && s <= k_i, "stage must satisfy 1 <= s <= k, got s={s}, k={k_i}");
    let n = cfg.n();
    let servers_left = (n - s + 1) as f64;
    let t: Vec<f64> = (0..cfg.num_classes())
        .map(|r| cfg.class(r).lambda / (servers_left * cfg.mu_eff(r)))
        .collect();
    let c_s = cfg.classes().iter().filter(|c| c.k < s).count();
    let my_rank = cfg.class(class_index).priority_rank;
    let higher_unfinished: Vec<usize> = (0..cfg.num_classes())
        .filter(|&r| cfg.class(r).priority_rank < my_rank && cfg.class(r).k >= s)
        .collect();
    let z = 1.0 - higher_unfinished.iter().map(|&r| t[r]).sum::<f64>();
    StageContext { s, c_s, higher_unfinished, t, z }
}

/// Classes still unfinished at stage `s` (k_r ≥ s), i.e. the k-relabeled
/// indices c_s+1..R.
fn unfinished(cfg: &ValidatedConfig, s: u32) -> impl Iterator<Item = usize> + '_ {
    (0..cfg.num_classes()).filter(move |&r| cfg.class(r).k >= s)
}

/// Naive per-class lower bound: serialize the kᵢ quorum completions of the
/// class alone on the cluster,
///
/// ```text
/// Tᵢ ≥ Σ_{j=0}^{kᵢ−1} 1/((n−j)·μᵢ − λᵢ)
/// ```
///
/// Entries are [`BoundError::Unstable`] when any stage rate `(n−j)·μᵢ` does
/// not exceed λᵢ.
pub fn naive_lower(cfg: &ValidatedConfig) -> PerClass {
    let n = cfg.n();
    (0..cfg.num_classes())
        .map(|i| {
            let c = cfg.class(i);
            let mu = cfg.mu_eff(i);
            let mut sum = 0.0;
            for j in 0..c.k {
                let rate = (n - j) as f64 * mu;
                if rate <= c.lambda {
                    return Err(BoundError::Unstable(format!(
                        "stage rate ({}−{j})·μ = {rate} does not exceed λ = {}",
                        n, c.lambda
                    )));
                }
                sum += 1.0 / (rate - c.lambda);
            }
            Ok(sum)
        })
        .collect()
}

/// Sequential-stage lower bound per class under FCFS:
///
/// ```text
/// Tᵢ ≥ Σ_{s=1}^{kᵢ} [ t_{s,i}/λᵢ + (Σ_{r:k_r≥s} t²_{s,r}/λ_r) / (1 − Σ_{r:k_r≥s} t_{s,r}) ]
/// ```
pub fn lb_fcfs(cfg: &ValidatedConfig) -> PerClass {
    (0..cfg.num_classes())
        .map(|i| {
            let c = cfg.class(i);
            let mut total = 0.0;
            for s in 1..=c.k {
                let ctx = stage_context(cfg, i, s);
                let load: f64 = unfinished(cfg, s).map(|r| ctx.t[r]).sum();
                let denom = 1.0 - load;
                if denom <= 0.0 {
                    return Err(BoundError::Invalid(format!(
                        "stage {s}: residual capacity 1−Σt = {denom} is not positive"
                    )));
                }
                let second: f64 = unfinished(cfg, s)
                    .map(|r| ctx.t[r] * ctx.t[r] / cfg.class(r).lambda)
                    .sum();
                total += ctx.t[i] / c.lambda + second / denom;
            }
            Ok(total)
        })
        .collect()
}

/// Sequential-stage lower bound per class under non-preemptive priority:
///
/// ```text
/// Tᵢ ≥ Σ_{s=1}^{kᵢ} [ t_{s,i}/λᵢ + (Σ_{r:k_r≥s} t²_{s,r}/λ_r) / (𝒵_sⁱ(𝒵_sⁱ − t_{s,i})) ]
/// ```
pub fn lb_npq(cfg: &ValidatedConfig) -> PerClass {
    stage_priority_bound(cfg, |cfg, i, ctx| {
        let second: f64 = unfinished(cfg, ctx.s)
            .map(|r| ctx.t[r] * ctx.t[r] / cfg.class(r).lambda)
            .sum();
        ctx.t[i] / cfg.class(i).lambda + second / (ctx.z * (ctx.z - ctx.t[i]))
    })
}

/// Sequential-stage lower bound per class under preemptive priority:
///
/// ```text
/// Tᵢ ≥ Σ_{s=1}^{kᵢ} [ t_{s,i}/(λᵢ·𝒵_sⁱ) + (Σ_{r∈ℛ_sⁱ∪{i}} t²_{s,r}/λ_r) / (𝒵_sⁱ(𝒵_sⁱ − t_{s,i})) ]
/// ```
pub fn lb_pq(cfg: &ValidatedConfig) -> PerClass {
    stage_priority_bound(cfg, |cfg, i, ctx| {
        let second: f64 = ctx
            .higher_unfinished
            .iter()
            .chain(std::iter::once(&i))
            .map(|&r| ctx.t[r] * ctx.t[r] / cfg.class(r).lambda)
            .sum();
        ctx.t[i] / (cfg.class(i).lambda * ctx.z) + second / (ctx.z * (ctx.z - ctx.t[i]))
    })
}

/// Alternative preemptive lower bound that replaces the second-moment
/// numerator with the first-moment expression `Σ_{r∈ℛ} t_{s,r} + t²_{s,i}/λᵢ`.
///
/// Kept for side-by-side study of the two published forms of the preemptive
/// stage term; [`lb_pq`] is the default. For a single class the two coincide.
pub fn lb_pq_variant(cfg: &ValidatedConfig) -> PerClass {
    stage_priority_bound(cfg, |cfg, i, ctx| {
        let first: f64 = (1.0 - ctx.z) + ctx.t[i] * ctx.t[i] / cfg.class(i).lambda;
        ctx.t[i] / (cfg.class(i).lambda * ctx.z) + first / (ctx.z * (ctx.z - ctx.t[i]))
    })
}

/// Shared stage loop of the priority lower bounds: sums `term(cfg, i, ctx)`
/// over stages, checking 𝒵 − t > 0.
fn stage_priority_bound(
    cfg: &ValidatedConfig,
    term: impl Fn(&ValidatedConfig, usize, &StageContext) -> f64,
) -> PerClass {
    (0..cfg.num_classes())
        .map(|i| {
            let c = cfg.class(i);
            let mut total = 0.0;
            for s in 1..=c.k {
                let ctx = stage_context(cfg, i, s);
                if ctx.z - ctx.t[i] <= 0.0 {
                    return Err(BoundError::Invalid(format!(
                        "stage {s}: residual capacity 𝒵−t = {} is not positive",
                        ctx.z - ctx.t[i]
                    )));
                }
                total += term(cfg, i, &ctx);
            }
            Ok(total)
        })
        .collect()
}

// ============================================================================
// Aggregate report
// ============================================================================

/// Bounds of one class under one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassBoundRow {
    /// Class id (not index).
    pub class_id: u32,
    /// Naive lower bound, if computable.
    pub naive_lower: Result<f64, BoundError>,
    /// Sequential-stage lower bound for the report's policy.
    pub lower: Result<f64, BoundError>,
    /// Split-merge upper bound for the report's policy.
    pub upper: Result<f64, BoundError>,
}

/// Stability verdict plus per-class bound triples for one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// The policy the bounds describe.
    pub policy: Policy,
    /// Whether the stability condition for that policy holds.
    pub stable: bool,
    /// One row per class, in configured order.
    pub classes: Vec<ClassBoundRow>,
    /// True when the configuration forks to fewer than n servers for some
    /// class; the bounds assume full fork and ignore redundancy limits.
    pub ignores_redundancy: bool,
    /// True when the configuration has a wake-up latency; the bounds ignore
    /// it.
    pub ignores_wake_latency: bool,
}

/// Compute stability and the (naive, lower, upper) triple for every class
/// under the configured policy.
pub fn bound_report(cfg: &ValidatedConfig) -> BoundReport {
    let policy = cfg.config().policy;
    let stable = match policy {
        Policy::Fcfs => stability_fcfs(cfg),
        _ => stability_priority(cfg),
    };
    let (lower, upper) = match policy {
        Policy::Fcfs => (lb_fcfs(cfg), ub_fcfs(cfg)),
        Policy::NonPreemptivePriority => (lb_npq(cfg), ub_npq(cfg)),
        Policy::PreemptivePriority => (lb_pq(cfg), ub_pq(cfg)),
    };
    let naive = naive_lower(cfg);
    let classes = cfg
        .classes()
        .iter()
        .enumerate()
        .map(|(i, c)| ClassBoundRow {
            class_id: c.id,
            naive_lower: naive[i].clone(),
            lower: lower[i].clone(),
            upper: upper[i].clone(),
        })
        .collect();
    BoundReport {
        policy,
        stable,
        classes,
        ignores_redundancy: cfg.classes().iter().any(|c| c.r < cfg.n()),
        ignores_wake_latency: cfg.config().power.w_l > 0.0,
    }
}
