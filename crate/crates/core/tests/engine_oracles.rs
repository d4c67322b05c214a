//! Statistical validation of the simulation engine against closed-form
//! queueing results: M/M/1, the Pollaczek-Khinchine formula, split-merge
//! exactness, bound sandwiches, and the qualitative effects of priorities
//! and power states.

use fjsim_core::bounds;
use fjsim_core::distributions::order_stat_moments_exp;
use fjsim_core::metrics::summarize;
use fjsim_core::model::test_fixtures::{mm1, two_class_default};
use fjsim_core::model::{validate, ArrivalFamily, Policy, ServiceFamily, ValidatedConfig};
use fjsim_core::simengine::{run, SimError, SimMode};

fn run_summary(v: &ValidatedConfig, mode: SimMode) -> fjsim_core::metrics::RunResult {
    let reps = run(v, mode).expect("stable configuration must complete");
    summarize(v, &reps)
}

#[test]
fn mm1_mean_latency_matches_closed_form() {
    // λ = 0.5, μᵢ = 1 → T = 1/(μ−λ) = 2.
    let mut cfg = mm1(0.5, 1.0);
    cfg.sim.horizon_jobs = 20_000;
    cfg.sim.warmup_jobs = 2_000;
    cfg.sim.replications = 5;
    cfg.sim.seed = 11;
    let v = validate(cfg).unwrap();
    let result = run_summary(&v, SimMode::ForkJoin);
    let c = &result.per_class[0];
    assert!(
        (c.mean - 2.0).abs() < 3.0 * c.std_err + 0.01,
        "M/M/1 mean {} ± {} vs 2.0",
        c.mean,
        c.std_err
    );
    assert!((c.mean - 2.0).abs() / 2.0 < 0.03, "beyond 3%: {}", c.mean);
    // Median of an M/M/1 sojourn: ln 2 / (μ−λ) ≈ 1.386.
    assert!((c.p50 - 2.0 * std::f64::consts::LN_2).abs() < 0.1, "p50 {}", c.p50);
}

#[test]
fn mg1_pareto_service_matches_pollaczek_khinchine() {
    // Single server, Pareto(α = 3.5) service mean-matched to 1 s, λ = 0.5.
    let mut cfg = mm1(0.5, 1.0);
    cfg.service_family = ServiceFamily::Pareto { alpha: 3.5 };
    cfg.sim.horizon_jobs = 30_000;
    cfg.sim.warmup_jobs = 3_000;
    cfg.sim.replications = 8;
    cfg.sim.seed = 23;
    let v = validate(cfg).unwrap();

    let dist = v.service_distribution(0);
    let moments = [(dist.mean().unwrap(), dist.variance().unwrap())];
    let expect = bounds::fcfs_mg1_latency(&moments, &[0.5]).unwrap()[0];
    // s_m = 5/7: E[S²] = α·s_m²/(α−2) = 25/21, T = 1 + λ·E[S²]/(2(1−ρ)).
    assert!((expect - (1.0 + 25.0 / 42.0)).abs() < 1e-12, "oracle cross-check");

    let result = run_summary(&v, SimMode::ForkJoin);
    let c = &result.per_class[0];
    assert!(
        (c.mean - expect).abs() < 3.0 * c.std_err + 0.02 * expect,
        "P-K mean: simulated {} ± {} vs {expect}",
        c.mean,
        c.std_err
    );
}

#[test]
fn split_merge_mode_reproduces_the_mg1_of_order_statistics() {
    // n = 3, k = 2, λ = 0.5, μᵢ = 1: the split-merge system IS an M/G/1
    // with the 2nd-of-3 order statistic as service, so its mean is the
    // FCFS upper bound exactly: 5/6 + 19/42 = 9/7.
    let mut cfg = mm1(0.5, 0.5);
    cfg.n = 3;
    cfg.classes[0].k = 2;
    cfg.classes[0].r = 3;
    cfg.sim.horizon_jobs = 20_000;
    cfg.sim.warmup_jobs = 2_000;
    cfg.sim.replications = 6;
    cfg.sim.seed = 31;
    let v = validate(cfg).unwrap();
    assert!((v.mu_eff(0) - 1.0).abs() < 1e-12);
    let expect = 9.0 / 7.0;
    let ub = bounds::ub_fcfs(&v)[0].clone().unwrap();
    assert!((ub - expect).abs() < 1e-12, "bound formula gives the same value");

    let result = run_summary(&v, SimMode::SplitMerge);
    let c = &result.per_class[0];
    assert!(
        (c.mean - expect).abs() < 3.0 * c.std_err + 0.015 * expect,
        "split-merge mean {} ± {} vs {expect}",
        c.mean,
        c.std_err
    );
}

#[test]
fn fork_join_mean_is_sandwiched_by_the_bounds() {
    // The real fork-join system must sit between the sequential-stage lower
    // bound and the split-merge upper bound, per class, under every policy.
    for policy in [Policy::Fcfs, Policy::NonPreemptivePriority, Policy::PreemptivePriority] {
        let mut cfg = two_class_default();
        cfg.policy = policy;
        cfg.sim.horizon_jobs = 15_000;
        cfg.sim.warmup_jobs = 1_500;
        cfg.sim.replications = 5;
        cfg.sim.seed = 47;
        let v = validate(cfg).unwrap();
        let report = bounds::bound_report(&v);
        let result = run_summary(&v, SimMode::ForkJoin);
        for (row, c) in report.classes.iter().zip(&result.per_class) {
            let lb = row.lower.clone().unwrap();
            let ub = row.upper.clone().unwrap();
            let slack = 3.0 * c.std_err;
            assert!(
                c.mean - c.ci99 >= lb - slack && c.mean + c.ci99 <= ub + slack,
                "{policy}: class {} mean {} ± {} outside [{lb}, {ub}] (slack {slack})",
                row.class_id,
                c.mean,
                c.ci99
            );
        }
    }
}

#[test]
fn preemptive_priority_shields_the_high_priority_class() {
    let base = |policy| {
        let mut cfg = two_class_default();
        cfg.policy = policy;
        cfg.sim.horizon_jobs = 15_000;
        cfg.sim.warmup_jobs = 1_500;
        cfg.sim.replications = 4;
        cfg.sim.seed = 53;
        validate(cfg).unwrap()
    };
    let fcfs = run_summary(&base(Policy::Fcfs), SimMode::ForkJoin);
    let pq = run_summary(&base(Policy::PreemptivePriority), SimMode::ForkJoin);
    let (f1, p1) = (&fcfs.per_class[0], &pq.per_class[0]);
    assert!(
        p1.mean + 2.0 * (p1.std_err + f1.std_err) < f1.mean,
        "priority must clearly help class 1: PQ {} ± {} vs FCFS {} ± {}",
        p1.mean,
        p1.std_err,
        f1.mean,
        f1.std_err
    );
    // And the shielding cannot beat the zero-load floor.
    let v = base(Policy::PreemptivePriority);
    let naive = bounds::naive_lower(&v)[0].clone().unwrap();
    assert!(p1.mean > naive - 3.0 * p1.std_err);
}

#[test]
fn overload_trips_the_divergence_guard() {
    // λ·l = 200 against capacity 1: the backlog blows past the guard long
    // before the (unreachable) completion horizon.
    let mut cfg = mm1(200.0, 1.0);
    cfg.sim.horizon_jobs = 10_000_000;
    cfg.sim.warmup_jobs = 0;
    cfg.sim.replications = 1;
    cfg.sim.allow_unstable = true;
    let v = validate(cfg).unwrap();
    assert!(!v.is_stable());
    match run(&v, SimMode::ForkJoin) {
        Err(SimError::Diverged { queued, .. }) => {
            assert!(queued > 1_000_000, "guard fired at backlog {queued}");
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn low_load_latency_approaches_the_order_statistic_mean() {
    // λ → 0: jobs rarely overlap, so latency is just the k-th of n
    // exponential order statistic, mean H¹/μᵢ.
    let mut cfg = two_class_default();
    cfg.classes.truncate(1);
    cfg.classes[0].lambda = 0.001;
    cfg.sim.horizon_jobs = 4_000;
    cfg.sim.warmup_jobs = 400;
    cfg.sim.replications = 2;
    cfg.sim.seed = 61;
    let v = validate(cfg).unwrap();
    let (mean, var) = order_stat_moments_exp(10, 5, v.mu_eff(0));
    let result = run_summary(&v, SimMode::ForkJoin);
    let c = &result.per_class[0];
    let se_floor = (var / c.samples as f64).sqrt();
    assert!(
        (c.mean - mean).abs() < 4.0 * se_floor.max(c.std_err),
        "low-load mean {} vs order-stat mean {mean}",
        c.mean
    );
}

#[test]
fn wake_up_latency_penalizes_a_sleepy_cluster() {
    let build = |w_l: f64| {
        let mut cfg = mm1(0.05, 1.0);
        cfg.power.d_l = 0.1;
        cfg.power.w_l = w_l;
        cfg.sim.horizon_jobs = 4_000;
        cfg.sim.warmup_jobs = 400;
        cfg.sim.replications = 2;
        cfg.sim.seed = 71;
        validate(cfg).unwrap()
    };
    let awake = run_summary(&build(0.0), SimMode::ForkJoin);
    let sleepy = run_summary(&build(6.0), SimMode::ForkJoin);
    // At load 0.05 with a 0.1 s linger, most arrivals find the server in
    // low power and pay a large share of the 6 s wake.
    assert!(
        sleepy.per_class[0].mean > awake.per_class[0].mean + 2.0,
        "wake latency should dominate: {} vs {}",
        sleepy.per_class[0].mean,
        awake.per_class[0].mean
    );
    // Sleeping must save energy per unit time in exchange.
    let sleepy_power = sleepy.energy_j / (sleepy.end_time * 1.0);
    let awake_always_on = build(0.0);
    assert!(sleepy_power < awake_always_on.p_on(), "mean draw below always-on");
}

#[test]
fn heavy_tailed_arrivals_complete_with_finite_statistics() {
    // Pareto(α = 1.5) renewal arrivals: finite mean, infinite variance.
    // The run must complete with finite, plausible statistics.
    let mut cfg = mm1(0.5, 1.0);
    cfg.arrival_family = ArrivalFamily::ParetoRenewal { alpha: 1.5 };
    cfg.sim.horizon_jobs = 10_000;
    cfg.sim.warmup_jobs = 1_000;
    cfg.sim.replications = 3;
    cfg.sim.seed = 83;
    let v = validate(cfg).unwrap();
    let result = run_summary(&v, SimMode::ForkJoin);
    let c = &result.per_class[0];
    assert!(c.mean.is_finite() && c.mean >= 1.0, "sojourn at least one service: {}", c.mean);
    assert!(c.p99 >= c.p50);
    // Burstier-than-Poisson arrivals congest more than M/M/1.
    assert!(c.mean > 1.2, "bursty arrivals should queue: {}", c.mean);
}

#[test]
fn redundancy_fan_out_trades_latency_for_waste() {
    // k = 2 of n = 10 with r ∈ {2, 10}: larger fan-out means the 2 fastest
    // of more samples — strictly lower latency — but burns cancelled work.
    let build = |r: u32| {
        let mut cfg = two_class_default();
        cfg.classes.truncate(1);
        cfg.classes[0].k = 2;
        cfg.classes[0].r = r;
        cfg.classes[0].lambda = 0.3;
        cfg.sim.horizon_jobs = 10_000;
        cfg.sim.warmup_jobs = 1_000;
        cfg.sim.replications = 3;
        cfg.sim.seed = 97;
        validate(cfg).unwrap()
    };
    let narrow = run_summary(&build(2), SimMode::ForkJoin);
    let wide = run_summary(&build(10), SimMode::ForkJoin);
    let (nc, wc) = (&narrow.per_class[0], &wide.per_class[0]);
    assert!(
        wc.mean + 2.0 * (wc.std_err + nc.std_err) < nc.mean,
        "full fan-out should cut latency: r=10 {} vs r=2 {}",
        wc.mean,
        nc.mean
    );
    assert!(
        wide.t_active > narrow.t_active,
        "cancelled work must show up as extra busy time: {} vs {}",
        wide.t_active,
        narrow.t_active
    );
}
