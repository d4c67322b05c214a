//! Sweep execution and result serialization.
//!
//! A run evaluates the scenario's configuration at every sweep value (or
//! once, without a sweep), simulates each point, and emits one CSV row per
//! (sweep value, class). Points whose configuration is invalid, unstable,
//! or whose simulation diverges are skipped with a note instead of
//! aborting the sweep.
//!
//! Output is byte-deterministic: identical scenario + seed produce an
//! identical file. All floats are printed with six fractional digits and a
//! `.` decimal separator; rows appear in sweep order, classes in
//! configuration order. The first header field names the schema version.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use fjsim_core::bounds::{bound_report, BoundReport};
use fjsim_core::metrics::{storage_and_bandwidth, summarize};
use fjsim_core::model::{validate, SystemConfig, ValidatedConfig};
use fjsim_core::simengine::{run, SimMode};
use rayon::prelude::*;

use crate::config::{apply_sweep, Scenario};

/// Version tag written into every CSV row.
pub const SCHEMA_VERSION: u32 = 1;

/// Column order of the results CSV.
pub const RESULT_COLUMNS: [&str; 19] = [
    "sweep_param",
    "sweep_value",
    "class_id",
    "policy",
    "mean_latency",
    "ci95",
    "p50",
    "p95",
    "p99",
    "completed",
    "efficiency_bits_per_J",
    "t_a",
    "t_l",
    "energy_J",
    "lb",
    "ub",
    "naive_lb",
    "seed",
    "schema_version",
];

/// Column order of the storage sidecar CSV.
pub const STORAGE_COLUMNS: [&str; 7] = [
    "sweep_param",
    "sweep_value",
    "class_id",
    "storage_kilobits",
    "storage_factor",
    "read_kilobits",
    "schema_version",
];

// ====================================================================
// Execution
// ====================================================================

/// One results row: a class at one sweep point.
#[derive(Debug, Clone)]
pub struct Row {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub class_id: u32,
    pub policy: &'static str,
    pub mean_latency: f64,
    pub ci95: f64,
    pub p50: f64,
    pub p95: f64,
    pub p99: f64,
    pub completed: u64,
    pub efficiency_bits_per_j: f64,
    pub t_a: f64,
    pub t_l: f64,
    pub energy_j: f64,
    pub lb: f64,
    pub ub: f64,
    pub naive_lb: f64,
    pub seed: u64,
}

/// One storage-sidecar row: code-rate costs of a class at one sweep point.
#[derive(Debug, Clone)]
pub struct StorageRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub class_id: u32,
    pub storage_kilobits: f64,
    pub storage_factor: f64,
    pub read_kilobits: f64,
}

/// Everything produced at one sweep point.
#[derive(Debug, Clone)]
pub struct PointData {
    pub rows: Vec<Row>,
    pub storage: Vec<StorageRow>,
}

/// A sweep point's outcome: data, or the reason it was skipped.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    /// The swept value, if the scenario sweeps at all.
    pub sweep_value: Option<f64>,
    pub outcome: Result<PointData, String>,
}

fn point_label(scenario: &Scenario, value: Option<f64>) -> (String, f64) {
    match (&scenario.sweep, value) {
        (Some((param, _)), Some(v)) => (param.clone(), v),
        _ => ("none".into(), 0.0),
    }
}

fn run_point(
    scenario: &Scenario,
    value: Option<f64>,
    mode: SimMode,
) -> Result<PointData, String> {
    let cfg: SystemConfig = match (&scenario.sweep, value) {
        (Some((param, _)), Some(v)) => {
            apply_sweep(&scenario.base, param, v).map_err(|e| format!("{e:#}"))?
        }
        _ => scenario.base.clone(),
    };
    let v: ValidatedConfig = validate(cfg).map_err(|errors| {
        errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
    })?;
    let report = bound_report(&v);
    let reps = run(&v, mode).map_err(|e| e.to_string())?;
    let result = summarize(&v, &reps);

    let (param, sweep_value) = point_label(scenario, value);
    let rows = result
        .per_class
        .iter()
        .zip(&report.classes)
        .map(|(c, b)| Row {
            sweep_param: param.clone(),
            sweep_value,
            class_id: c.class_id,
            policy: v.config().policy.name(),
            mean_latency: c.mean,
            ci95: c.ci95,
            p50: c.p50,
            p95: c.p95,
            p99: c.p99,
            completed: c.completed,
            efficiency_bits_per_j: result.efficiency_bits_per_j,
            t_a: result.t_active,
            t_l: result.t_low,
            energy_j: result.energy_j,
            lb: b.lower.clone().unwrap_or(f64::NAN),
            ub: b.upper.clone().unwrap_or(f64::NAN),
            naive_lb: b.naive_lower.clone().unwrap_or(f64::NAN),
            seed: v.config().sim.seed,
        })
        .collect();
    let storage = storage_and_bandwidth(&v)
        .iter()
        .zip(v.classes())
        .map(|(s, c)| StorageRow {
            sweep_param: param.clone(),
            sweep_value,
            class_id: c.id,
            storage_kilobits: s.storage_kilobits,
            storage_factor: s.storage_factor,
            read_kilobits: s.read_kilobits,
        })
        .collect();
    Ok(PointData { rows, storage })
}

/// Runs every sweep point. Points execute concurrently (the replication
/// level is also parallel); outcomes come back in sweep order.
pub fn execute(scenario: &Scenario, mode: SimMode) -> Vec<PointOutcome> {
    let points: Vec<Option<f64>> = match &scenario.sweep {
        Some((_, values)) => values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    points
        .into_par_iter()
        .map(|value| PointOutcome {
            sweep_value: value,
            outcome: run_point(scenario, value, mode),
        })
        .collect()
}

// ====================================================================
// Serialization
// ====================================================================

/// Fixed-format float: six fractional digits, `nan`/`inf` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.6}")
    }
}

/// Writes the results CSV for the given outcomes.
///
/// # Errors
///
/// Fails on I/O errors from the underlying writer.
pub fn write_results_csv<W: Write>(w: W, outcomes: &[PointOutcome]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(RESULT_COLUMNS).context("write header")?;
    for point in outcomes {
        let Ok(data) = &point.outcome else { continue };
        for r in &data.rows {
            csv.write_record([
                r.sweep_param.as_str(),
                &num(r.sweep_value),
                &r.class_id.to_string(),
                r.policy,
                &num(r.mean_latency),
                &num(r.ci95),
                &num(r.p50),
                &num(r.p95),
                &num(r.p99),
                &r.completed.to_string(),
                &num(r.efficiency_bits_per_j),
                &num(r.t_a),
                &num(r.t_l),
                &num(r.energy_j),
                &num(r.lb),
                &num(r.ub),
                &num(r.naive_lb),
                &r.seed.to_string(),
                &SCHEMA_VERSION.to_string(),
            ])
            .context("write row")?;
        }
    }
    csv.flush().context("flush results CSV")?;
    Ok(())
}

/// Writes the storage sidecar CSV for the given outcomes.
///
/// # Errors
///
/// Fails on I/O errors from the underlying writer.
pub fn write_storage_csv<W: Write>(w: W, outcomes: &[PointOutcome]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(STORAGE_COLUMNS).context("write header")?;
    for point in outcomes {
        let Ok(data) = &point.outcome else { continue };
        for s in &data.storage {
            csv.write_record([
                s.sweep_param.as_str(),
                &num(s.sweep_value),
                &s.class_id.to_string(),
                &num(s.storage_kilobits),
                &num(s.storage_factor),
                &num(s.read_kilobits),
                &SCHEMA_VERSION.to_string(),
            ])
            .context("write row")?;
        }
    }
    csv.flush().context("flush storage CSV")?;
    Ok(())
}

/// The sidecar path next to a results path: `out.csv` → `out_storage.csv`.
pub fn storage_sidecar_path(out: &Path) -> std::path::PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}_storage.csv"))
}

// ====================================================================
// Bounds rendering
// ====================================================================

fn bound_cell(v: &std::result::Result<f64, fjsim_core::bounds::BoundError>) -> String {
    match v {
        Ok(x) => num(*x),
        Err(_) => "n/a".into(),
    }
}

/// Renders the human-readable bounds table for one configuration.
pub fn render_bounds_table(report: &BoundReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("policy: {}\n", report.policy.name()));
    out.push_str(&format!(
        "stability: {}\n",
        if report.stable { "STABLE" } else { "UNSTABLE" }
    ));
    out.push_str(&format!(
        "{:>8} {:>14} {:>14} {:>14}\n",
        "class", "naive_lb", "lb", "ub"
    ));
    for row in &report.classes {
        out.push_str(&format!(
            "{:>8} {:>14} {:>14} {:>14}\n",
            row.class_id,
            bound_cell(&row.naive_lower),
            bound_cell(&row.lower),
            bound_cell(&row.upper),
        ));
    }
    if report.ignores_redundancy {
        out.push_str("note: bounds assume full fork; some class has r < n\n");
    }
    if report.ignores_wake_latency {
        out.push_str("note: bounds ignore the configured wake-up latency\n");
    }
    out
}

/// Writes the bounds CSV (one row per class).
///
/// # Errors
///
/// Fails on I/O errors from the underlying writer.
pub fn write_bounds_csv<W: Write>(w: W, report: &BoundReport) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["class_id", "policy", "stable", "naive_lb", "lb", "ub", "schema_version"])
        .context("write header")?;
    for row in &report.classes {
        csv.write_record([
            row.class_id.to_string().as_str(),
            report.policy.name(),
            if report.stable { "1" } else { "0" },
            &bound_cell(&row.naive_lower).replace("n/a", "nan"),
            &bound_cell(&row.lower).replace("n/a", "nan"),
            &bound_cell(&row.upper).replace("n/a", "nan"),
            &SCHEMA_VERSION.to_string(),
        ])
        .context("write row")?;
    }
    csv.flush().context("flush bounds CSV")?;
    Ok(())
}

// ====================================================================
// Tests
// ====================================================================
