//! Discrete-event simulation of the fork-join cluster.
//!
//! # Dynamics
//!
//! Each class-i job arrival forks into rᵢ sub-tasks on rᵢ distinct servers
//! drawn uniformly at random (rᵢ = n uses every server without drawing).
//! Every sub-task carries its own i.i.d. service requirement, sampled at
//! fork time so that a given seed produces the same arrivals and service
//! draws under every scheduling policy. The job completes when its kᵢ-th
//! sub-task finishes; the remaining rᵢ − kᵢ are cancelled — queued ones
//! vanish, in-service ones are aborted on the spot, and the aborted work
//! stays in the server's busy log as burned energy that delivered nothing.
//!
//! Per-server scheduling follows the configured policy:
//!
//! * FCFS — one queue per server, no reordering;
//! * non-preemptive priority — highest-priority queued sub-task next, but a
//!   running sub-task always finishes;
//! * preemptive priority — a higher-priority arrival suspends the running
//!   sub-task, which later resumes with its remaining service (preempt-
//!   resume, not restart).
//!
//! Servers also move through power states: serving (busy), lingering idle at
//! full power for up to `d_l` seconds, low power, and waking (`w_l` seconds
//! at full power, no processing) when work reaches a sleeping server.
//! Servers start lingering at t = 0. The engine logs busy and wake intervals
//! per server; [`crate::energy::accumulate`] reconstructs linger/low time
//! from the gaps.
//!
//! # Split-merge mode
//!
//! [`SimMode::SplitMerge`] runs the relaxation behind the analytic upper
//! bounds instead: jobs are served one at a time in arrival order, each
//! occupying all n servers until its kᵢ-th sub-task completes. Priorities,
//! redundancy limits and wake-up latency are ignored in this mode; it exists
//! to validate the bound formulas against an exactly matching system.
//!
//! # Accounting
//!
//! A replication runs until `horizon_jobs` jobs have completed (across all
//! classes); the simulated horizon is the time of that last completion, and
//! in-flight work is clamped there in the logs. The first `warmup_jobs`
//! completions are excluded from the latency record; completion counts (used
//! for throughput and delivered bits) cover the whole horizon. Replication r
//! reseeds every stream through [`mix_seed`], so replications are mutually
//! decorrelated but individually reproducible.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use rayon::prelude::*;

use crate::distributions::{mix_seed, Distribution, RngStream};
use crate::energy::{ActivePhase, PhaseLog};
use crate::model::{Policy, ValidatedConfig};

/// Sub-task backlog across the cluster above which a run is declared
/// divergent (an effectively unstable configuration).
const MAX_QUEUED_SUBTASKS: usize = 1_000_000;
/// Simulated-time guard against configurations that cannot reach their
/// completion horizon.
const MAX_SIM_TIME: f64 = 1e9;

/// Which system the engine simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// The real fork-join dynamics with cancellation.
    ForkJoin,
    /// The split-merge relaxation: one job at a time on all n servers.
    SplitMerge,
}

/// Why a replication was abandoned.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    /// The sub-task backlog exploded; the configuration is being run beyond
    /// its capacity.
    #[error(
        "simulation diverged: {queued} sub-tasks queued at t = {time:.3} s \
         after {completions} completions"
    )]
    Diverged { queued: usize, time: f64, completions: u64 },
    /// Simulated time ran away before the completion horizon was reached.
    #[error("simulation passed t = {time:.3e} s with only {completions} completions")]
    TimeGuard { time: f64, completions: u64 },
}

/// Everything one replication produced.
#[derive(Debug, Clone)]
pub struct Replication {
    /// Per class (configured order): latencies of completions after the
    /// warm-up, in completion order.
    pub latencies: Vec<Vec<f64>>,
    /// Per class: completions over the whole horizon, warm-up included.
    pub completed: Vec<u64>,
    /// Time of the last counted completion — the accounting horizon.
    pub end_time: f64,
    /// Per-server busy/wake intervals for energy accounting.
    pub logs: Vec<PhaseLog>,
    /// Largest cluster-wide sub-task backlog seen.
    pub peak_queued: usize,
}

/// Run all configured replications in parallel. Results are in replication
/// order and bit-for-bit reproducible for a given configuration and seed.
///
/// # Errors
/// The first [`SimError`] encountered, if any replication diverges.
pub fn run(cfg: &ValidatedConfig, mode: SimMode) -> Result<Vec<Replication>, SimError> {
    (0..cfg.config().sim.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, mode, r))
        .collect()
}

/// Run one replication with sampled arrivals.
///
/// # Errors
/// See [`SimError`].
pub fn run_replication(
    cfg: &ValidatedConfig,
    mode: SimMode,
    replication: u32,
) -> Result<Replication, SimError> {
    let mut engine = Engine::new(cfg, mode, replication);
    engine.seed_sampled_arrivals();
    engine.drive(cfg.config().sim.horizon_jobs)
}

/// Run one replication that replays a fixed arrival schedule of
/// `(class_index, time)` pairs instead of sampling arrivals, completing when
/// every scripted job has completed. Placement and service draws still come
/// from the seeded streams; deterministic service makes the whole trace
/// hand-checkable.
///
/// # Errors
/// See [`SimError`].
///
/// # Panics
/// Panics if a class index is out of range or a time is negative or
/// non-finite.
pub fn run_scripted(
    cfg: &ValidatedConfig,
    mode: SimMode,
    arrivals: &[(usize, f64)],
) -> Result<Replication, SimError> {
    let mut engine = Engine::new(cfg, mode, 0);
    engine.scripted = true;
    for &(class, time) in arrivals {
        assert!(class < cfg.num_classes(), "scripted class {class} out of range");
        assert!(time.is_finite() && time >= 0.0, "scripted time {time} invalid");
        engine.schedule(time, EventKind::Arrival { class: class as u32 });
    }
    engine.drive(arrivals.len() as u64)
}

// ============================================================================
// Events
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    /// The sub-task in service on `server` finishes (valid only while the
    /// server's epoch still matches).
    ServiceComplete { server: u32, epoch: u64 },
    /// `server` finishes waking up.
    WakeComplete { server: u32, epoch: u64 },
    /// `server`'s idle linger timer runs out.
    LingerExpire { server: u32, epoch: u64 },
    /// A class job arrives at the cluster.
    Arrival { class: u32 },
    /// The split-merge job in service completes.
    SmComplete,
}

impl EventKind {
    /// Tie-break order at equal times: completions before wake-ups before
    /// linger expiries before arrivals.
    fn rank(&self) -> u8 {
        match self {
            EventKind::ServiceComplete { .. } | EventKind::SmComplete => 0,
            EventKind::WakeComplete { .. } => 1,
            EventKind::LingerExpire { .. } => 2,
            EventKind::Arrival { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    rank: u8,
    seq: u64,
    kind: EventKind,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.rank.cmp(&other.rank))
            .then(self.seq.cmp(&other.seq))
    }
}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}

// ============================================================================
// Entities
// ============================================================================

type TaskId = usize;
type JobId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TaskState {
    Queued,
    InService,
    Done,
    Cancelled,
}

#[derive(Debug)]
struct Task {
    job: JobId,
    class: usize,
    /// Remaining service requirement, seconds; shrinks on preemption.
    remaining: f64,
    state: TaskState,
}

#[derive(Debug)]
struct Job {
    class: usize,
    arrival: f64,
    /// Completed sub-tasks so far.
    done: u32,
    /// Sub-tasks as (server, task) pairs, for cancellation on completion.
    tasks: Vec<(u32, TaskId)>,
    /// Split-merge only: the n service draws of this job.
    sm_services: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PowerState {
    Busy,
    Linger,
    Low,
    Waking,
}

#[derive(Debug)]
struct Server {
    state: PowerState,
    /// Bumped whenever an outstanding timer event for this server becomes
    /// stale (preemption, abort, linger cancelled by work).
    epoch: u64,
    /// One queue per priority position (a single queue under FCFS).
    queues: Vec<VecDeque<TaskId>>,
    current: Option<Current>,
    /// When the in-progress wake began, while `state == Waking`.
    wake_start: f64,
    log: PhaseLog,
}

#[derive(Debug, Clone, Copy)]
struct Current {
    task: TaskId,
    start: f64,
}

// ============================================================================
// Engine
// ============================================================================

struct Engine<'a> {
    cfg: &'a ValidatedConfig,
    mode: SimMode,
    now: f64,
    events: BinaryHeap<Reverse<Event>>,
    seq: u64,
    servers: Vec<Server>,
    tasks: Vec<Task>,
    jobs: Vec<Job>,
    /// Class index → queue index on every server (0 = highest priority;
    /// always 0 under FCFS).
    queue_of_class: Vec<usize>,
    preemptive: bool,
    service_dists: Vec<Distribution>,
    interarrival_dists: Vec<Distribution>,
    arrival_streams: Vec<RngStream>,
    placement_streams: Vec<RngStream>,
    service_streams: Vec<RngStream>,
    /// Scratch permutation for placement sampling.
    perm: Vec<u32>,
    /// True when arrivals come from a fixed schedule instead of the renewal
    /// streams.
    scripted: bool,
    queued: usize,
    peak_queued: usize,
    completions: u64,
    completed: Vec<u64>,
    latencies: Vec<Vec<f64>>,
    // Split-merge state: FIFO of waiting jobs and the one in service.
    sm_queue: VecDeque<JobId>,
    sm_current: Option<SmCurrent>,
}

#[derive(Debug, Clone, Copy)]
struct SmCurrent {
    job: JobId,
    start: f64,
    /// The job's k-th smallest service draw — its time on the cluster.
    quorum_time: f64,
}

/// Purpose component of a stream id; each (class, purpose) pair gets an
/// independent ChaCha stream so adding draws of one kind never perturbs
/// another.
const STREAM_ARRIVAL: u64 = 0;
const STREAM_PLACEMENT: u64 = 1;
const STREAM_SERVICE: u64 = 2;

fn stream_id(class: usize, purpose: u64) -> u64 {
    (class as u64) * 4 + purpose
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a ValidatedConfig, mode: SimMode, replication: u32) -> Self {
        let sys = cfg.config();
        let n = sys.n as usize;
        let classes = cfg.num_classes();
        let rep_seed = mix_seed(sys.sim.seed, replication as u64);

        let queues_per_server = match sys.policy {
            Policy::Fcfs => 1,
            _ => classes,
        };
        let queue_of_class = match sys.policy {
            Policy::Fcfs => vec![0; classes],
            _ => {
                let mut q = vec![0; classes];
                for (pos, &i) in cfg.priority_order().iter().enumerate() {
                    q[i] = pos;
                }
                q
            }
        };

        let mut engine = Engine {
            cfg,
            mode,
            now: 0.0,
            events: BinaryHeap::new(),
            seq: 0,
            servers: (0..n)
                .map(|_| Server {
                    state: PowerState::Linger,
                    epoch: 0,
                    queues: (0..queues_per_server).map(|_| VecDeque::new()).collect(),
                    current: None,
                    wake_start: 0.0,
                    log: PhaseLog::new(),
                })
                .collect(),
            tasks: Vec::new(),
            jobs: Vec::new(),
            queue_of_class,
            preemptive: sys.policy == Policy::PreemptivePriority,
            service_dists: (0..classes).map(|i| cfg.service_distribution(i)).collect(),
            interarrival_dists: (0..classes).map(|i| cfg.interarrival_distribution(i)).collect(),
            arrival_streams: (0..classes)
                .map(|i| RngStream::new(rep_seed, stream_id(i, STREAM_ARRIVAL)))
                .collect(),
            placement_streams: (0..classes)
                .map(|i| RngStream::new(rep_seed, stream_id(i, STREAM_PLACEMENT)))
                .collect(),
            service_streams: (0..classes)
                .map(|i| RngStream::new(rep_seed, stream_id(i, STREAM_SERVICE)))
                .collect(),
            perm: (0..sys.n).collect(),
            scripted: false,
            queued: 0,
            peak_queued: 0,
            completions: 0,
            completed: vec![0; classes],
            latencies: vec![Vec::new(); classes],
            sm_queue: VecDeque::new(),
            sm_current: None,
        };
        // Servers begin idle-active: linger, then drop to low power.
        for s in 0..n {
            let epoch = engine.servers[s].epoch;
            engine.schedule(
                sys.power.d_l,
                EventKind::LingerExpire { server: s as u32, epoch },
            );
        }
        engine
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        let ev = Event { time, rank: kind.rank(), seq: self.seq, kind };
        self.seq += 1;
        self.events.push(Reverse(ev));
    }

    /// Queue the first arrival of every class.
    fn seed_sampled_arrivals(&mut self) {
        for i in 0..self.cfg.num_classes() {
            let gap = self.interarrival_dists[i].sample(&mut self.arrival_streams[i]);
            self.schedule(gap, EventKind::Arrival { class: i as u32 });
        }
    }

    /// Main loop: process events until `target` completions.
    fn drive(mut self, target: u64) -> Result<Replication, SimError> {
        while self.completions < target {
            let Some(Reverse(ev)) = self.events.pop() else {
                panic!(
                    "event queue drained at t = {} with {}/{target} completions",
                    self.now, self.completions
                );
            };
            debug_assert!(ev.time >= self.now - 1e-9, "time runs forward");
            self.now = ev.time;
            if self.now > MAX_SIM_TIME {
                return Err(SimError::TimeGuard { time: self.now, completions: self.completions });
            }
            match ev.kind {
                EventKind::Arrival { class } => self.on_arrival(class as usize)?,
                EventKind::ServiceComplete { server, epoch } => {
                    self.on_service_complete(server as usize, epoch);
                }
                EventKind::WakeComplete { server, epoch } => {
                    self.on_wake_complete(server as usize, epoch);
                }
                EventKind::LingerExpire { server, epoch } => {
                    self.on_linger_expire(server as usize, epoch);
                }
                EventKind::SmComplete => self.on_sm_complete(),
            }
        }
        Ok(self.finish())
    }

    /// Clamp in-flight work at the horizon and package the results.
    fn finish(mut self) -> Replication {
        let end = self.now;
        for server in &mut self.servers {
            if let Some(cur) = server.current.take() {
                server.log.record(cur.start, end, ActivePhase::Busy);
            }
            if server.state == PowerState::Waking {
                server.log.record(server.wake_start, end, ActivePhase::Wake);
            }
        }
        if let Some(cur) = self.sm_current.take() {
            let start = cur.start;
            for (j, &s) in self.jobs[cur.job].sm_services.iter().enumerate() {
                let busy_end = (start + s.min(cur.quorum_time)).min(end);
                self.servers[j].log.record(start, busy_end, ActivePhase::Busy);
            }
        }
        Replication {
            latencies: self.latencies,
            completed: self.completed,
            end_time: end,
            logs: self.servers.into_iter().map(|s| s.log).collect(),
            peak_queued: self.peak_queued,
        }
    }

    // ------------------------------------------------------------------
    // Arrivals and placement
    // ------------------------------------------------------------------

    fn on_arrival(&mut self, class: usize) -> Result<(), SimError> {
        match self.mode {
            SimMode::ForkJoin => self.fork_job(class),
            SimMode::SplitMerge => self.sm_enqueue_job(class),
        }
        if !self.scripted {
            // Renewal process: the next class arrival is drawn as this one
            // lands. Scripted runs pre-queue their whole schedule instead.
            let gap = self.interarrival_dists[class].sample(&mut self.arrival_streams[class]);
            let at = self.now + gap;
            self.schedule(at, EventKind::Arrival { class: class as u32 });
        }
        if self.queued > MAX_QUEUED_SUBTASKS {
            return Err(SimError::Diverged {
                queued: self.queued,
                time: self.now,
                completions: self.completions,
            });
        }
        Ok(())
    }

    fn fork_job(&mut self, class: usize) {
        let job_id = self.jobs.len();
        let r = self.cfg.class(class).r as usize;
        let n = self.cfg.n() as usize;
        self.jobs.push(Job {
            class,
            arrival: self.now,
            done: 0,
            tasks: Vec::with_capacity(r),
            sm_services: Vec::new(),
        });
        // Choose r distinct servers uniformly (partial Fisher-Yates); a full
        // fork uses every server without touching the placement stream.
        if r < n {
            for i in 0..r {
                let j = i + self.placement_streams[class].index(n - i);
                self.perm.swap(i, j);
            }
        }
        for slot in 0..r {
            let server = if r < n { self.perm[slot] } else { slot as u32 };
            let service = self.service_dists[class].sample(&mut self.service_streams[class]);
            let task_id = self.tasks.len();
            self.tasks.push(Task { job: job_id, class, remaining: service, state: TaskState::Queued });
            self.jobs[job_id].tasks.push((server, task_id));
            self.offer(server as usize, task_id);
        }
    }

    // ------------------------------------------------------------------
    // Per-server scheduling
    // ------------------------------------------------------------------

    /// Hand a fresh (or resumed) sub-task to a server, respecting its power
    /// state and the scheduling policy.
    fn offer(&mut self, s: usize, task: TaskId) {
        match self.servers[s].state {
            PowerState::Busy => {
                let cur = self.servers[s].current.expect("busy server has a current task");
                if self.preemptive
                    && self.queue_of_class[self.tasks[task].class]
                        < self.queue_of_class[self.tasks[cur.task].class]
                {
                    self.preempt(s);
                    self.start_service(s, task);
                } else {
                    self.push_queue(s, task);
                }
            }
            PowerState::Linger => {
                // Work cancels the linger timer.
                self.servers[s].epoch += 1;
                self.start_service(s, task);
            }
            PowerState::Low => {
                let w_l = self.cfg.config().power.w_l;
                if w_l == 0.0 {
                    self.start_service(s, task);
                } else {
                    self.servers[s].state = PowerState::Waking;
                    self.servers[s].wake_start = self.now;
                    let epoch = self.servers[s].epoch;
                    self.schedule(
                        self.now + w_l,
                        EventKind::WakeComplete { server: s as u32, epoch },
                    );
                    self.push_queue(s, task);
                }
            }
            PowerState::Waking => self.push_queue(s, task),
        }
    }

    fn push_queue(&mut self, s: usize, task: TaskId) {
        let q = self.queue_of_class[self.tasks[task].class];
        self.servers[s].queues[q].push_back(task);
        self.queued += 1;
        self.peak_queued = self.peak_queued.max(self.queued);
    }

    /// Suspend the running sub-task, crediting its progress (preempt-resume).
    fn preempt(&mut self, s: usize) {
        let cur = self.servers[s].current.take().expect("preempting an idle server");
        self.servers[s].log.record(cur.start, self.now, ActivePhase::Busy);
        let task = &mut self.tasks[cur.task];
        task.remaining = (task.remaining - (self.now - cur.start)).max(0.0);
        task.state = TaskState::Queued;
        let q = self.queue_of_class[task.class];
        // Resumes ahead of its queue so equal-priority work stays in order.
        self.servers[s].queues[q].push_front(cur.task);
        self.queued += 1;
        self.peak_queued = self.peak_queued.max(self.queued);
        self.servers[s].epoch += 1; // the old completion event is now stale
    }

    fn start_service(&mut self, s: usize, task: TaskId) {
        debug_assert!(self.servers[s].current.is_none());
        self.tasks[task].state = TaskState::InService;
        self.servers[s].current = Some(Current { task, start: self.now });
        self.servers[s].state = PowerState::Busy;
        let epoch = self.servers[s].epoch;
        self.schedule(
            self.now + self.tasks[task].remaining,
            EventKind::ServiceComplete { server: s as u32, epoch },
        );
    }

    /// Next runnable sub-task on a server, skipping cancelled entries.
    fn pick_next(&mut self, s: usize) -> Option<TaskId> {
        for q in 0..self.servers[s].queues.len() {
            while let Some(&task) = self.servers[s].queues[q].front() {
                self.servers[s].queues[q].pop_front();
                match self.tasks[task].state {
                    TaskState::Cancelled => continue, // tombstone: already uncounted
                    TaskState::Queued => {
                        self.queued -= 1;
                        return Some(task);
                    }
                    other => panic!("queued task in state {other:?}"),
                }
            }
        }
        None
    }

    /// After finishing or aborting work: serve the next sub-task or go idle.
    fn dispatch(&mut self, s: usize) {
        if let Some(task) = self.pick_next(s) {
            self.start_service(s, task);
        } else {
            self.servers[s].state = PowerState::Linger;
            let epoch = self.servers[s].epoch;
            self.schedule(
                self.now + self.cfg.config().power.d_l,
                EventKind::LingerExpire { server: s as u32, epoch },
            );
        }
    }

    // ------------------------------------------------------------------
    // Event handlers
    // ------------------------------------------------------------------

    fn on_service_complete(&mut self, s: usize, epoch: u64) {
        if self.servers[s].epoch != epoch {
            return; // the task this event described was preempted or aborted
        }
        let cur = self.servers[s].current.take().expect("completion on an idle server");
        self.servers[s].log.record(cur.start, self.now, ActivePhase::Busy);
        self.tasks[cur.task].state = TaskState::Done;
        let job_id = self.tasks[cur.task].job;
        self.jobs[job_id].done += 1;
        if self.jobs[job_id].done == self.cfg.class(self.jobs[job_id].class).k {
            self.complete_job(job_id);
        }
        self.dispatch(s);
    }

    /// The quorum is in: record the job, cancel its stragglers everywhere.
    fn complete_job(&mut self, job_id: JobId) {
        let class = self.jobs[job_id].class;
        self.record_completion(class, self.now - self.jobs[job_id].arrival);
        let tasks = std::mem::take(&mut self.jobs[job_id].tasks);
        for &(server, task) in &tasks {
            match self.tasks[task].state {
                TaskState::Queued => {
                    // Lazy removal: the queue entry becomes a tombstone.
                    self.tasks[task].state = TaskState::Cancelled;
                    self.queued -= 1;
                }
                TaskState::InService => {
                    let s = server as usize;
                    let cur = self.servers[s]
                        .current
                        .take()
                        .expect("in-service task on an idle server");
                    debug_assert_eq!(cur.task, task);
                    // Abort immediately: the spent time is logged (energy was
                    // burned) but the work is discarded.
                    self.servers[s].log.record(cur.start, self.now, ActivePhase::Busy);
                    self.tasks[task].state = TaskState::Cancelled;
                    self.servers[s].epoch += 1;
                    self.dispatch(s);
                }
                TaskState::Done | TaskState::Cancelled => {}
            }
        }
    }

    fn record_completion(&mut self, class: usize, latency: f64) {
        if self.completions >= self.cfg.config().sim.warmup_jobs {
            self.latencies[class].push(latency);
        }
        self.completions += 1;
        self.completed[class] += 1;
    }

    fn on_wake_complete(&mut self, s: usize, epoch: u64) {
        if self.servers[s].epoch != epoch {
            return;
        }
        debug_assert_eq!(self.servers[s].state, PowerState::Waking);
        let start = self.servers[s].wake_start;
        self.servers[s].log.record(start, self.now, ActivePhase::Wake);
        // If everything queued since was cancelled, the server idles again.
        self.dispatch(s);
    }

    fn on_linger_expire(&mut self, s: usize, epoch: u64) {
        if self.servers[s].epoch != epoch {
            return;
        }
        debug_assert_eq!(self.servers[s].state, PowerState::Linger);
        self.servers[s].state = PowerState::Low;
    }

    // ------------------------------------------------------------------
    // Split-merge mode
    // ------------------------------------------------------------------

    fn sm_enqueue_job(&mut self, class: usize) {
        let n = self.cfg.n() as usize;
        let job_id = self.jobs.len();
        let services: Vec<f64> = (0..n)
            .map(|_| self.service_dists[class].sample(&mut self.service_streams[class]))
            .collect();
        self.jobs.push(Job {
            class,
            arrival: self.now,
            done: 0,
            tasks: Vec::new(),
            sm_services: services,
        });
        self.sm_queue.push_back(job_id);
        self.queued += n;
        self.peak_queued = self.peak_queued.max(self.queued);
        if self.sm_current.is_none() {
            self.sm_begin_next();
        }
    }

    fn sm_begin_next(&mut self) {
        let Some(job_id) = self.sm_queue.pop_front() else { return };
        let k = self.cfg.class(self.jobs[job_id].class).k as usize;
        let mut sorted = self.jobs[job_id].sm_services.clone();
        sorted.sort_by(f64::total_cmp);
        let quorum_time = sorted[k - 1];
        self.sm_current = Some(SmCurrent { job: job_id, start: self.now, quorum_time });
        self.schedule(self.now + quorum_time, EventKind::SmComplete);
    }

    fn on_sm_complete(&mut self) {
        let cur = self.sm_current.take().expect("split-merge completion without a job");
        let n = self.cfg.n() as usize;
        // Each server worked until its own draw finished or the quorum
        // cancelled it.
        for j in 0..n {
            let busy = self.jobs[cur.job].sm_services[j].min(cur.quorum_time);
            self.servers[j].log.record(cur.start, cur.start + busy, ActivePhase::Busy);
        }
        self.queued -= n;
        let class = self.jobs[cur.job].class;
        self.record_completion(class, self.now - self.jobs[cur.job].arrival);
        self.sm_begin_next();
    }
}
