//! Server power-state accounting: turning per-server activity logs into
//! joules and bits-per-joule.
//!
//! # Power model
//!
//! A server draws one of two powers:
//!
//! | state                                   | power              |
//! |-----------------------------------------|--------------------|
//! | active (busy, waking up, or lingering)  | `p_on = C₀f³ + Pₐ` |
//! | low-power                               | `p_off = C_l + P_l`|
//!
//! The engine logs only the intervals a server is *busy* (head-of-line work,
//! including work later cancelled) or *waking up*. Everything between those
//! intervals is idle, and idleness splits deterministically: the server
//! lingers active for up to `d_l` seconds waiting for new work, then drops
//! to low power until the next logged interval begins. Servers start idle at
//! t = 0 under the same rule, so an untouched server lingers once and then
//! sleeps to the horizon.
//!
//! With that convention, for an idle gap of length g,
//!
//! ```text
//! t_linger = min(g, d_l)        t_low = max(0, g − d_l)
//! ```
//!
//! and the ledger integrates
//!
//! ```text
//! E = p_on·(t_busy + t_wake + t_linger) + p_off·t_low .
//! ```
//!
//! Energy efficiency is delivered useful bits over consumed energy,
//! `ℰ = (Σᵢ lᵢ·Nᵢ)·1000 / E` for Nᵢ class-i jobs of lᵢ kilobits — work
//! spent on cancelled sub-tasks burns energy but delivers nothing.

/// What a logged interval of server activity was spent on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivePhase {
    /// Serving a sub-task (possibly one that is later cancelled).
    Busy,
    /// Waking from low power; full power draw, no processing.
    Wake,
}

/// One logged interval of activity on one server.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSegment {
    /// Interval start, seconds.
    pub start: f64,
    /// Interval end, seconds.
    pub end: f64,
    /// What the server was doing.
    pub phase: ActivePhase,
}

/// Chronological, non-overlapping activity intervals of one server.
///
/// Idle time is implicit: it is everything between the recorded segments
/// (and before the first / after the last, up to the accounting horizon).
#[derive(Debug, Clone, Default)]
pub struct PhaseLog {
    segments: Vec<PhaseSegment>,
}

impl PhaseLog {
    /// An empty log: the server was never activated.
    pub fn new() -> Self {
        Self::default()
    }

    /// Append an activity interval.
    ///
    /// Zero-length intervals are dropped. Back-to-back intervals of the same
    /// phase merge, so the log stays compact under preempt/resume churn.
    ///
    /// # Panics
    /// Panics if the interval is negative, non-finite, or starts before the
    /// previous one ended (beyond a 10⁻⁹ s slack for float drift).
    pub fn record(&mut self, start: f64, end: f64, phase: ActivePhase) {
        assert!(
            start.is_finite() && end.is_finite() && start >= 0.0,
            "segment [{start}, {end}] must be finite and nonnegative"
        );
        assert!(end >= start - 1e-9, "segment [{start}, {end}] runs backwards");
        if end <= start {
            return;
        }
        if let Some(last) = self.segments.last_mut() {
            assert!(
                start >= last.end - 1e-9,
                "segment [{start}, {end}] overlaps previous ending at {}",
                last.end
            );
            if last.phase == phase && (start - last.end).abs() <= 1e-9 {
                last.end = end;
                return;
            }
        }
        self.segments.push(PhaseSegment { start, end, phase });
    }

    /// The recorded intervals, in time order.
    pub fn segments(&self) -> &[PhaseSegment] {
        &self.segments
    }
}

/// Time split of one server over the accounting horizon, seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ServerEnergy {
    /// Serving sub-tasks.
    pub t_busy: f64,
    /// Waking up from low power.
    pub t_wake: f64,
    /// Idle at full power, waiting out the linger timeout.
    pub t_linger: f64,
    /// In the low-power state.
    pub t_low: f64,
}

impl ServerEnergy {
    /// Total time at full power draw.
    pub fn t_active(&self) -> f64 {
        self.t_busy + self.t_wake + self.t_linger
    }
}

/// Cluster-wide energy account over one simulated horizon.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    /// Per-server time splits, indexed by server.
    pub per_server: Vec<ServerEnergy>,
    /// Total server-seconds at full power (busy + wake + linger).
    pub t_active: f64,
    /// Total server-seconds at low power.
    pub t_low: f64,
    /// Total energy drawn, joules.
    pub energy_j: f64,
}

/// Integrate per-server activity logs into an [`EnergyLedger`] over
/// `[0, horizon]`, filling every idle gap with a linger of up to `d_l`
/// seconds followed by low power.
///
/// The per-server active and low times always partition the horizon:
/// `t_active + t_low = horizon · logs.len()` up to float drift.
///
/// # Panics
/// Panics if `horizon`, `d_l`, or either power is negative or non-finite,
/// or if any log extends past the horizon.
pub fn accumulate(
    logs: &[PhaseLog],
    horizon: f64,
    d_l: f64,
    p_on: f64,
    p_off: f64,
) -> EnergyLedger {
    assert!(horizon.is_finite() && horizon >= 0.0, "horizon must be nonnegative, got {horizon}");
    assert!(d_l.is_finite() && d_l >= 0.0, "linger timeout must be nonnegative, got {d_l}");
    assert!(p_on.is_finite() && p_on >= 0.0, "p_on must be nonnegative, got {p_on}");
    assert!(p_off.is_finite() && p_off >= 0.0, "p_off must be nonnegative, got {p_off}");

    let mut ledger = EnergyLedger::default();
    for log in logs {
        let mut acc = ServerEnergy::default();
        let mut cursor = 0.0f64;
        for seg in log.segments() {
            assert!(
                seg.end <= horizon + 1e-9,
                "segment [{}, {}] extends past horizon {horizon}",
                seg.start,
                seg.end
            );
            idle_gap(&mut acc, (seg.start - cursor).max(0.0), d_l);
            let len = seg.end - seg.start;
            match seg.phase {
                ActivePhase::Busy => acc.t_busy += len,
                ActivePhase::Wake => acc.t_wake += len,
            }
            cursor = seg.end;
        }
        idle_gap(&mut acc, (horizon - cursor).max(0.0), d_l);
        ledger.t_active += acc.t_active();
        ledger.t_low += acc.t_low;
        ledger.per_server.push(acc);
    }
    ledger.energy_j = p_on * ledger.t_active + p_off * ledger.t_low;
    ledger
}

/// Split one idle gap into linger and low-power time.
fn idle_gap(acc: &mut ServerEnergy, gap: f64, d_l: f64) {
    acc.t_linger += gap.min(d_l);
    acc.t_low += (gap - d_l).max(0.0);
}

/// Energy efficiency in bits per joule: `delivered_kilobits·1000 /
/// ledger.energy_j`, or 0 when nothing was delivered or no energy was drawn.
pub fn efficiency(ledger: &EnergyLedger, delivered_kilobits: f64) -> f64 {
    if delivered_kilobits <= 0.0 || ledger.energy_j <= 0.0 {
        return 0.0;
    }
    delivered_kilobits * 1000.0 / ledger.energy_j
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Default power draws: C₀·f³ + Pₐ = 203.13 + 120 and C_l + P_l =
    /// 15 + 13.1.
    const P_ON: f64 = 323.13;
    const P_OFF: f64 = 28.1;

    fn busy_log(intervals: &[(f64, f64)]) -> PhaseLog {
        let mut log = PhaseLog::new();
        for &(s, e) in intervals {
            log.record(s, e, ActivePhase::Busy);
        }
        log
    }

    #[test]
    fn single_busy_second_oracle() {
        // Busy [0,1], horizon 2, d_l = 0.5: active 1.5 s, low 0.5 s.
        // E = 323.13·1.5 + 28.1·0.5 = 498.745 J; 1 kb delivered → 2.005 b/J.
        let ledger = accumulate(&[busy_log(&[(0.0, 1.0)])], 2.0, 0.5, P_ON, P_OFF);
        assert!((ledger.t_active - 1.5).abs() < 1e-12);
        assert!((ledger.t_low - 0.5).abs() < 1e-12);
        assert!((ledger.energy_j - 498.745).abs() < 1e-9, "{}", ledger.energy_j);
        let eff = efficiency(&ledger, 1.0);
        assert!((eff - 1000.0 / 498.745).abs() < 1e-12);
        assert!((eff - 2.005).abs() < 1e-3, "{eff}");
    }

    #[test]
    fn gap_longer_than_linger_splits() {
        // Busy [0,1] and [4,5] in a horizon of 6 with d_l = 1: gaps of 3 and
        // 1 give linger 1+1, low 2+0.
        let ledger = accumulate(&[busy_log(&[(0.0, 1.0), (4.0, 5.0)])], 6.0, 1.0, P_ON, P_OFF);
        let s = &ledger.per_server[0];
        assert!((s.t_busy - 2.0).abs() < 1e-12);
        assert!((s.t_linger - 2.0).abs() < 1e-12);
        assert!((s.t_low - 2.0).abs() < 1e-12);
    }

    #[test]
    fn short_gap_is_all_linger() {
        let ledger = accumulate(&[busy_log(&[(0.0, 1.0), (1.3, 2.0)])], 2.0, 0.5, P_ON, P_OFF);
        let s = &ledger.per_server[0];
        assert!((s.t_linger - 0.3).abs() < 1e-12);
        assert!(s.t_low.abs() < 1e-12, "gap 0.3 < d_l never reaches low power");
    }

    #[test]
    fn untouched_server_lingers_once_then_sleeps() {
        let ledger = accumulate(&[PhaseLog::new()], 10.0, 0.5, P_ON, P_OFF);
        let s = &ledger.per_server[0];
        assert!((s.t_linger - 0.5).abs() < 1e-12);
        assert!((s.t_low - 9.5).abs() < 1e-12);
        assert!(s.t_busy == 0.0 && s.t_wake == 0.0);
    }

    #[test]
    fn wake_time_draws_full_power() {
        let mut log = PhaseLog::new();
        log.record(2.0, 3.0, ActivePhase::Wake);
        log.record(3.0, 4.0, ActivePhase::Busy);
        // d_l = 0: idle [0,2] and [4,5] are all low power.
        let ledger = accumulate(&[log], 5.0, 0.0, P_ON, P_OFF);
        let s = &ledger.per_server[0];
        assert!((s.t_wake - 1.0).abs() < 1e-12);
        assert!((s.t_busy - 1.0).abs() < 1e-12);
        assert!((s.t_low - 3.0).abs() < 1e-12);
        assert!((ledger.energy_j - (P_ON * 2.0 + P_OFF * 3.0)).abs() < 1e-9);
    }

    #[test]
    fn partition_identity_multi_server() {
        let logs = vec![
            busy_log(&[(0.0, 0.7), (2.0, 4.5)]),
            busy_log(&[(1.0, 6.0)]),
            PhaseLog::new(),
        ];
        let horizon = 8.0;
        let ledger = accumulate(&logs, horizon, 0.9, P_ON, P_OFF);
        assert!(
            (ledger.t_active + ledger.t_low - horizon * 3.0).abs() < 1e-9,
            "active {} + low {} must partition 3 servers × {horizon} s",
            ledger.t_active,
            ledger.t_low
        );
    }

    #[test]
    fn equal_powers_make_energy_horizon_invariant() {
        // With p_off = p_on the split into states is irrelevant:
        // E = p·horizon·servers for any log and any d_l.
        let logs = vec![busy_log(&[(0.5, 2.0), (3.0, 3.25)]), PhaseLog::new()];
        for d_l in [0.0, 0.3, 100.0] {
            let ledger = accumulate(&logs, 4.0, d_l, 50.0, 50.0);
            assert!((ledger.energy_j - 50.0 * 4.0 * 2.0).abs() < 1e-9, "d_l={d_l}");
        }
    }

    #[test]
    fn energy_monotone_in_linger_timeout() {
        let logs = vec![busy_log(&[(0.0, 1.0), (3.0, 4.0)])];
        let mut last = 0.0;
        for d_l in [0.0, 0.5, 1.0, 2.0, 10.0] {
            let e = accumulate(&logs, 10.0, d_l, P_ON, P_OFF).energy_j;
            assert!(e >= last - 1e-12, "longer linger cannot save energy when p_on > p_off");
            last = e;
        }
    }

    #[test]
    fn back_to_back_same_phase_segments_merge() {
        let mut log = PhaseLog::new();
        log.record(0.0, 1.0, ActivePhase::Busy);
        log.record(1.0, 2.5, ActivePhase::Busy);
        assert_eq!(log.segments().len(), 1);
        assert!((log.segments()[0].end - 2.5).abs() < 1e-15);
    }

    #[test]
    fn zero_length_segments_are_dropped() {
        let mut log = PhaseLog::new();
        log.record(1.0, 1.0, ActivePhase::Busy);
        assert!(log.segments().is_empty());
    }

    #[test]
    #[should_panic(expected = "overlaps")]
    fn overlapping_segments_panic() {
        let mut log = PhaseLog::new();
        log.record(0.0, 2.0, ActivePhase::Busy);
        log.record(1.0, 3.0, ActivePhase::Busy);
    }

    #[test]
    #[should_panic(expected = "past horizon")]
    fn segment_past_horizon_panics() {
        accumulate(&[busy_log(&[(0.0, 3.0)])], 2.0, 0.5, P_ON, P_OFF);
    }

    #[test]
    fn efficiency_guards_degenerate_inputs() {
        let ledger = accumulate(&[], 0.0, 0.5, P_ON, P_OFF);
        assert_eq!(efficiency(&ledger, 1.0), 0.0, "no energy drawn");
        let ledger = accumulate(&[busy_log(&[(0.0, 1.0)])], 1.0, 0.5, P_ON, P_OFF);
        assert_eq!(efficiency(&ledger, 0.0), 0.0, "nothing delivered");
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    /// Random well-formed single-server log inside [0, horizon].
    fn arb_log(horizon: f64) -> impl Strategy<Value = PhaseLog> {
        proptest::collection::vec((0.0..1.0f64, 0.0..1.0f64, proptest::bool::ANY), 0..8).prop_map(
            move |points| {
                let mut log = PhaseLog::new();
                let mut cursor = 0.0;
                for (a, b, wake) in points {
                    let start = cursor + a * (horizon - cursor) * 0.3;
                    let end = start + b * (horizon - start) * 0.3;
                    if end > start {
                        let phase = if wake { ActivePhase::Wake } else { ActivePhase::Busy };
                        log.record(start, end, phase);
                        cursor = end;
                    }
                }
                log
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        /// Active and low-power time always partition servers × horizon, and
        /// the energy always lands between the all-low and all-on extremes.
        #[test]
        fn partition_and_energy_envelope(
            logs in proptest::collection::vec(arb_log(20.0), 1..4),
            d_l in 0.0..5.0f64,
        ) {
            let horizon = 20.0;
            let n = logs.len() as f64;
            let ledger = accumulate(&logs, horizon, d_l, 323.13, 28.1);
            prop_assert!((ledger.t_active + ledger.t_low - n * horizon).abs() < 1e-6);
            prop_assert!(ledger.energy_j >= 28.1 * n * horizon - 1e-6);
            prop_assert!(ledger.energy_j <= 323.13 * n * horizon + 1e-6);
            for s in &ledger.per_server {
                prop_assert!(s.t_busy >= 0.0 && s.t_wake >= 0.0
                    && s.t_linger >= 0.0 && s.t_low >= 0.0);
            }
        }

        /// Busy and wake totals are exactly the recorded segment lengths,
        /// independent of d_l.
        #[test]
        fn recorded_activity_is_preserved(log in arb_log(20.0), d_l in 0.0..5.0f64) {
            let busy: f64 = log.segments().iter()
                .filter(|s| s.phase == ActivePhase::Busy).map(|s| s.end - s.start).sum();
            let wake: f64 = log.segments().iter()
                .filter(|s| s.phase == ActivePhase::Wake).map(|s| s.end - s.start).sum();
            let ledger = accumulate(&[log], 20.0, d_l, 323.13, 28.1);
            prop_assert!((ledger.per_server[0].t_busy - busy).abs() < 1e-9);
            prop_assert!((ledger.per_server[0].t_wake - wake).abs() < 1e-9);
        }
    }
}
