//! Fork-join queueing simulator and analytic latency/energy bounds for
//! erasure-coded storage clusters.
//!
//! A cluster of n servers stores files striped with an (n, k) MDS code per
//! data class: a read forks into sub-tasks on r of the servers and completes
//! when any k finish, at which point the stragglers are cancelled. Classes
//! differ in file size, arrival rate, recovery threshold k and priority, and
//! the cluster schedules them FCFS or by (non-)preemptive priority.
//!
//! The crate has two independent ways to answer "what latency and energy
//! efficiency does a configuration achieve":
//!
//! * [`bounds`] — closed-form stability conditions, upper bounds via a
//!   split-merge relaxation and lower bounds via a sequential-stage
//!   enhancement, per class and policy;
//! * [`simengine`] — a discrete-event simulation of the actual fork-join
//!   dynamics, including straggler cancellation, preemption and server
//!   power-state transitions, with [`metrics`] and [`energy`] turning its
//!   traces into confidence intervals and bits-per-joule figures.
//!
//! [`model`] holds the validated configuration shared by both paths, and
//! [`distributions`] the sampling and order-statistic machinery.

pub mod bounds;
pub mod distributions;
pub mod energy;
pub mod metrics;
pub mod model;
pub mod simengine;
