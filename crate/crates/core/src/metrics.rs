//! Turning raw replications into reportable statistics: means, confidence
//! intervals, percentiles, energy efficiency, and storage/bandwidth cost.
//!
//! # Estimation scheme
//!
//! Latency means are estimated per class from replication means: each
//! replication contributes the mean of its post-warm-up samples, and a
//! Student-t interval over those (approximately independent) replication
//! means gives the confidence half-widths. A single replication falls back
//! to the method of batch means — its sample sequence is cut into up to 20
//! contiguous batches whose means play the role of replications — so a CI is
//! still available, just with the usual caveat about residual correlation.
//!
//! Percentiles use the nearest-rank definition over all samples pooled
//! across replications: the p-th percentile of N sorted samples is the
//! ⌈p/100·N⌉-th smallest.
//!
//! Energy figures (active/low time, joules, bits per joule) are computed per
//! replication over its whole horizon — warm-up included, since the energy
//! was drawn either way — and averaged; completion counts are summed.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::energy;
use crate::model::ValidatedConfig;
use crate::simengine::Replication;

/// Latency statistics of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    /// Class id (not index).
    pub class_id: u32,
    /// Mean latency, seconds (NaN when no replication produced a sample).
    pub mean: f64,
    /// Half-width of the 95% confidence interval on the mean.
    pub ci95: f64,
    /// Half-width of the 99% confidence interval on the mean.
    pub ci99: f64,
    /// Standard error of the mean estimate.
    pub std_err: f64,
    /// Nearest-rank percentiles over the pooled samples.
    pub p50: f64,
    /// 95th percentile.
    pub p95: f64,
    /// 99th percentile.
    pub p99: f64,
    /// Post-warm-up latency samples pooled across replications.
    pub samples: usize,
    /// Completions over the whole horizon, summed across replications.
    pub completed: u64,
}

/// Summary of a whole simulation run (all replications).
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Per-class statistics, in configured class order.
    pub per_class: Vec<ClassMetrics>,
    /// Mean energy efficiency across replications, bits per joule.
    pub efficiency_bits_per_j: f64,
    /// Mean server-seconds at full power per replication.
    pub t_active: f64,
    /// Mean server-seconds at low power per replication.
    pub t_low: f64,
    /// Mean energy drawn per replication, joules.
    pub energy_j: f64,
    /// Mean simulated horizon, seconds.
    pub end_time: f64,
    /// Largest sub-task backlog seen in any replication.
    pub peak_queued: usize,
}

/// Per-class storage and network cost of the erasure-code layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageCost {
    /// Total bits stored across the cluster for one file, kilobits:
    /// n chunks of lᵢ/kᵢ.
    pub storage_kilobits: f64,
    /// Storage blow-up over replication-free storage: n/kᵢ.
    pub storage_factor: f64,
    /// Kilobits moved per read: rᵢ chunks of lᵢ/kᵢ.
    pub read_kilobits: f64,
}

/// Nearest-rank percentile of an ascending-sorted slice: the ⌈p/100·N⌉-th
/// smallest value. NaN for an empty slice.
///
/// # Panics
/// Panics unless `0 < p <= 100`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(p > 0.0 && p <= 100.0, "percentile must be in (0, 100], got {p}");
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Student-t critical value for a two-sided interval at the given confidence
/// level with `df` degrees of freedom.
fn t_critical(confidence: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    dist.inverse_cdf(0.5 + confidence / 2.0)
}

/// Mean, standard error, and t-interval half-widths from a set of
/// (approximately) independent point estimates.
fn t_interval(estimates: &[f64]) -> (f64, f64, f64, f64) {
    let m = estimates.len();
    let mean = estimates.iter().sum::<f64>() / m as f64;
    if m < 2 {
        return (mean, f64::NAN, f64::NAN, f64::NAN);
    }
    let var = estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    let se = (var / m as f64).sqrt();
    let df = (m - 1) as f64;
    (mean, se, t_critical(0.95, df) * se, t_critical(0.99, df) * se)
}

/// Cut one replication's samples into up to 20 contiguous batches and return
/// the batch means.
fn batch_means(samples: &[f64]) -> Vec<f64> {
    let batches = samples.len().min(20);
    if batches == 0 {
        return Vec::new();
    }
    let mut means = Vec::with_capacity(batches);
    let n = samples.len();
    for b in 0..batches {
        let lo = b * n / batches;
        let hi = (b + 1) * n / batches;
        means.push(samples[lo..hi].iter().sum::<f64>() / (hi - lo) as f64);
    }
    means
}

/// Reduce replications to a [`RunResult`] for the given configuration.
///
/// # Panics
/// Panics if `reps` is empty or a replication's class count does not match
/// the configuration.
pub fn summarize(cfg: &ValidatedConfig, reps: &[Replication]) -> RunResult {
    assert!(!reps.is_empty(), "at least one replication required");
    for rep in reps {
        assert_eq!(rep.latencies.len(), cfg.num_classes(), "replication/config class mismatch");
    }
    let d_l = cfg.config().power.d_l;

    let per_class = (0..cfg.num_classes())
        .map(|i| {
            // Point estimates: replication means, or batch means when only
            // one replication carries samples.
            let rep_means: Vec<f64> = reps
                .iter()
                .filter(|r| !r.latencies[i].is_empty())
                .map(|r| r.latencies[i].iter().sum::<f64>() / r.latencies[i].len() as f64)
                .collect();
            let estimates = if rep_means.len() == 1 {
                let only = reps.iter().find(|r| !r.latencies[i].is_empty()).unwrap();
                batch_means(&only.latencies[i])
            } else {
                rep_means
            };
            let (mean, std_err, ci95, ci99) = if estimates.is_empty() {
                (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
            } else {
                t_interval(&estimates)
            };

            let mut pooled: Vec<f64> =
                reps.iter().flat_map(|r| r.latencies[i].iter().copied()).collect();
            pooled.sort_by(f64::total_cmp);

            ClassMetrics {
                class_id: cfg.class(i).id,
                mean,
                ci95,
                ci99,
                std_err,
                p50: percentile(&pooled, 50.0),
                p95: percentile(&pooled, 95.0),
                p99: percentile(&pooled, 99.0),
                samples: pooled.len(),
                completed: reps.iter().map(|r| r.completed[i]).sum(),
            }
        })
        .collect();

    let m = reps.len() as f64;
    let mut efficiency = 0.0;
    let mut t_active = 0.0;
    let mut t_low = 0.0;
    let mut energy_j = 0.0;
    let mut end_time = 0.0;
    let mut peak_queued = 0;
    for rep in reps {
        let ledger = energy::accumulate(&rep.logs, rep.end_time, d_l, cfg.p_on(), cfg.p_off());
        let delivered: f64 = (0..cfg.num_classes())
            .map(|i| cfg.class(i).l * rep.completed[i] as f64)
            .sum();
        efficiency += energy::efficiency(&ledger, delivered) / m;
        t_active += ledger.t_active / m;
        t_low += ledger.t_low / m;
        energy_j += ledger.energy_j / m;
        end_time += rep.end_time / m;
        peak_queued = peak_queued.max(rep.peak_queued);
    }

    RunResult {
        per_class,
        efficiency_bits_per_j: efficiency,
        t_active,
        t_low,
        energy_j,
        end_time,
        peak_queued,
    }
}

/// Storage and read-bandwidth cost of every class under the configured
/// (n, kᵢ) code with redundancy rᵢ.
pub fn storage_and_bandwidth(cfg: &ValidatedConfig) -> Vec<StorageCost> {
    let n = cfg.n() as f64;
    cfg.classes()
        .iter()
        .map(|c| StorageCost {
            storage_kilobits: n * c.l / c.k as f64,
            storage_factor: n / c.k as f64,
            read_kilobits: c.r as f64 * c.l / c.k as f64,
        })
        .collect()
}
