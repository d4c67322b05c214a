//! Figure-data generation: reshapes result CSVs into plain-text `.dat`
//! files, one per (figure, metric), each holding `x y ci` triples in
//! gnuplot-style blocks separated by blank lines.
//!
//! Every `<stem>.csv` in the input directory yields
//! `latency_vs_<param>_<tag>.dat` (one block per seed, class, and policy)
//! and `efficiency_vs_<param>_<tag>.dat` (one block per seed; the
//! efficiency is a cluster metric, so duplicate class rows are folded).
//! `<param>` abbreviates the sweep parameter (`class2.k` → `k2`), `<tag>`
//! is the stem after its first underscore (`fig8_mu1over6` → `mu1over6`).
//! A `<stem>_storage.csv` sidecar, when present, additionally yields
//! `storage_vs_<param>_<tag>.dat`. A `manifest.txt` indexes everything
//! produced.
//!
//! Files whose rows mix several seeds are still rendered — one block per
//! seed — but reported in the warnings, since they usually indicate
//! accidentally concatenated runs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::runner::num;

/// Everything a report run produced.
#[derive(Debug)]
pub struct ReportSummary {
    /// File names written into the output directory, sorted.
    pub files: Vec<String>,
    /// Human-readable warnings (mixed seeds, skipped sidecars).
    pub warnings: Vec<String>,
}

// ====================================================================
// CSV intake
// ====================================================================

#[derive(Debug, Clone)]
struct ResultRow {
    sweep_param: String,
    sweep_value: f64,
    class_id: String,
    policy: String,
    mean_latency: f64,
    ci95: f64,
    efficiency: f64,
    seed: String,
}

fn required_indices<'h>(
    file: &Path,
    headers: &'h csv::StringRecord,
    required: &[&str],
) -> Result<Vec<usize>> {
    let missing: Vec<&str> = required
        .iter()
        .copied()
        .filter(|name| !headers.iter().any(|h| h == *name))
        .collect();
    if !missing.is_empty() {
        bail!("{}: missing columns: {}", file.display(), missing.join(", "));
    }
    Ok(required
        .iter()
        .map(|name| headers.iter().position(|h| h == *name).expect("checked above"))
        .collect())
}

fn parse_number(file: &Path, line: usize, name: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .with_context(|| format!("{}: line {line}: bad {name} value {raw:?}", file.display()))
}

fn read_result_rows(file: &Path) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_path(file)
        .with_context(|| format!("cannot open {}", file.display()))?;
    let headers = rdr.headers().context("read header")?.clone();
    let idx = required_indices(
        file,
        &headers,
        &[
            "sweep_param",
            "sweep_value",
            "class_id",
            "policy",
            "mean_latency",
            "ci95",
            "efficiency_bits_per_J",
            "seed",
        ],
    )?;
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.with_context(|| format!("read {}", file.display()))?;
        let line = i + 2; // 1-based, after the header
        rows.push(ResultRow {
            sweep_param: record[idx[0]].to_string(),
            sweep_value: parse_number(file, line, "sweep_value", &record[idx[1]])?,
            class_id: record[idx[2]].to_string(),
            policy: record[idx[3]].to_string(),
            mean_latency: parse_number(file, line, "mean_latency", &record[idx[4]])?,
            ci95: parse_number(file, line, "ci95", &record[idx[5]])?,
            efficiency: parse_number(file, line, "efficiency_bits_per_J", &record[idx[6]])?,
            seed: record[idx[7]].to_string(),
        });
    }
    Ok(rows)
}

// ====================================================================
// Naming
// ====================================================================

/// Abbreviates a sweep-parameter path for a file name: `class2.k` → `k2`,
/// `power.d_l` → `power_d_l`, `n` → `n`.
fn param_tag(param: &str) -> String {
    if let Some(rest) = param.strip_prefix("class") {
        if let Some((id, field)) = rest.split_once('.') {
            if id.chars().all(|c| c.is_ascii_digit()) && !id.is_empty() {
                return format!("{field}{id}");
            }
        }
    }
    param.replace('.', "_")
}

/// The figure tag of a CSV stem: everything after the first underscore,
/// or the whole stem when it has none (`fig8_mu1over6` → `mu1over6`).
fn stem_tag(stem: &str) -> &str {
    match stem.split_once('_') {
        Some((_, rest)) => rest,
        None => stem,
    }
}

// ====================================================================
// Rendering
// ====================================================================

fn push_block(
    out: &mut String,
    header: &str,
    points: impl Iterator<Item = (f64, f64, f64)>,
) {
    let _ = writeln!(out, "# {header}");
    for (x, y, ci) in points {
        let _ = writeln!(out, "{} {} {}", num(x), num(y), num(ci));
    }
    out.push('\n');
}

fn latency_dat(source: &str, rows: &[ResultRow]) -> String {
    let mut out = format!("# source: {source}\n# columns: {} mean_latency ci95\n\n", rows[0].sweep_param);
    let mut keys = BTreeSet::new();
    for r in rows {
        keys.insert((r.seed.clone(), r.class_id.clone(), r.policy.clone()));
    }
    for (seed, class, policy) in keys {
        let points = rows
            .iter()
            .filter(|r| r.seed == seed && r.class_id == class && r.policy == policy)
            .map(|r| (r.sweep_value, r.mean_latency, r.ci95));
        push_block(&mut out, &format!("seed={seed} class={class} policy={policy}"), points);
    }
    out
}

fn efficiency_dat(source: &str, rows: &[ResultRow]) -> String {
    let mut out = format!(
        "# source: {source}\n# columns: {} efficiency_bits_per_J ci\n# ci column is zero: no interval is tracked for efficiency\n\n",
        rows[0].sweep_param
    );
    let seeds: BTreeSet<String> = rows.iter().map(|r| r.seed.clone()).collect();
    for seed in seeds {
        // One value per sweep point: every class row repeats the cluster
        // metric, so keep the first occurrence in file order.
        let mut seen = Vec::new();
        let points = rows
            .iter()
            .filter(|r| r.seed == seed)
            .filter(|r| {
                let fresh = !seen.contains(&r.sweep_value.to_bits());
                if fresh {
                    seen.push(r.sweep_value.to_bits());
                }
                fresh
            })
            .map(|r| (r.sweep_value, r.efficiency, 0.0))
            .collect::<Vec<_>>();
        push_block(&mut out, &format!("seed={seed}"), points.into_iter());
    }
    out
}

fn storage_dat(source: &str, file: &Path) -> Result<String> {
    let mut rdr = csv::Reader::from_path(file)
        .with_context(|| format!("cannot open {}", file.display()))?;
    let headers = rdr.headers().context("read header")?.clone();
    let idx = required_indices(
        file,
        &headers,
        &["sweep_param", "sweep_value", "class_id", "storage_kilobits", "read_kilobits"],
    )?;
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.with_context(|| format!("read {}", file.display()))?;
        let line = i + 2;
        rows.push((
            record[idx[2]].to_string(),
            parse_number(file, line, "sweep_value", &record[idx[1]])?,
            parse_number(file, line, "storage_kilobits", &record[idx[3]])?,
            parse_number(file, line, "read_kilobits", &record[idx[4]])?,
        ));
    }
    if rows.is_empty() {
        bail!("{}: no input rows", file.display());
    }
    let mut out = format!("# source: {source}\n# columns: sweep_value storage_kilobits read_kilobits\n\n");
    let classes: BTreeSet<String> = rows.iter().map(|(c, ..)| c.clone()).collect();
    for class in classes {
        let points = rows
            .iter()
            .filter(|(c, ..)| *c == class)
            .map(|&(_, x, storage, read)| (x, storage, read));
        push_block(&mut out, &format!("class={class}"), points);
    }
    Ok(out)
}

// ====================================================================
// Entry point
// ====================================================================

/// Renders every result CSV under `csv_dir` into `.dat` figure files and a
/// `manifest.txt` under `out_dir` (created if needed).
///
/// # Errors
///
/// Fails when the directory holds no result rows at all, when a result CSV
/// lacks required columns (reported by name), or on I/O errors.
pub fn sweep_report(csv_dir: &Path, out_dir: &Path) -> Result<ReportSummary> {
    let mut csv_files: Vec<std::path::PathBuf> = std::fs::read_dir(csv_dir)
        .with_context(|| format!("cannot read directory {}", csv_dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    csv_files.sort();

    let mut summary = ReportSummary { files: Vec::new(), warnings: Vec::new() };
    let mut manifest = String::from("# figure data files\n");
    let mut total_rows = 0usize;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;

    for file in &csv_files {
        let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("data").to_string();
        if stem.ends_with("_storage") {
            continue; // sidecars are picked up with their parent below
        }
        let source = format!("{stem}.csv");
        let rows = read_result_rows(file)?;
        if rows.is_empty() {
            summary.warnings.push(format!("{source}: header only, no rows"));
            continue;
        }
        total_rows += rows.len();

        let seeds: BTreeSet<&str> = rows.iter().map(|r| r.seed.as_str()).collect();
        if seeds.len() > 1 {
            summary.warnings.push(format!(
                "{source}: rows mix {} seeds ({}); blocks are grouped per seed",
                seeds.len(),
                seeds.into_iter().collect::<Vec<_>>().join(", ")
            ));
        }

        let ptag = param_tag(&rows[0].sweep_param);
        let tag = stem_tag(&stem);

        let latency_name = format!("latency_vs_{ptag}_{tag}.dat");
        std::fs::write(out_dir.join(&latency_name), latency_dat(&source, &rows))
            .with_context(|| format!("write {latency_name}"))?;
        let _ = writeln!(manifest, "{latency_name} <- {source} [mean_latency]");
        summary.files.push(latency_name);

        let efficiency_name = format!("efficiency_vs_{ptag}_{tag}.dat");
        std::fs::write(out_dir.join(&efficiency_name), efficiency_dat(&source, &rows))
            .with_context(|| format!("write {efficiency_name}"))?;
        let _ = writeln!(manifest, "{efficiency_name} <- {source} [efficiency_bits_per_J]");
        summary.files.push(efficiency_name);

        let sidecar = file.with_file_name(format!("{stem}_storage.csv"));
        if sidecar.is_file() {
            let storage_name = format!("storage_vs_{ptag}_{tag}.dat");
            std::fs::write(out_dir.join(&storage_name), storage_dat(&source, &sidecar)?)
                .with_context(|| format!("write {storage_name}"))?;
            let _ = writeln!(manifest, "{storage_name} <- {stem}_storage.csv [storage_kilobits]");
            summary.files.push(storage_name);
        }
    }

    if total_rows == 0 {
        bail!("no input rows in {}", csv_dir.display());
    }

    std::fs::write(out_dir.join("manifest.txt"), manifest).context("write manifest.txt")?;
    summary.files.push("manifest.txt".into());
    summary.files.sort();
    Ok(summary)
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::RESULT_COLUMNS;

    fn result_line(param: &str, value: f64, class: u32, seed: u64, mean: f64) -> String {
        format!(
            "{param},{value:.6},{class},fcfs,{mean:.6},0.010000,0.5,1.0,2.0,1000,3.000000,1.0,0.5,100.0,0.9,1.2,0.8,{seed},1"
        )
    }

    fn write_sample_csv(dir: &Path, name: &str, lines: &[String]) {
        let mut text = RESULT_COLUMNS.join(",");
        text.push('\n');
        for l in lines {
            text.push_str(l);
            text.push('\n');
        }
        std::fs::write(dir.join(name), text).unwrap();
    }

    #[test]
    fn figure_files_take_their_names_from_param_and_stem() {
        let dir = tempfile::tempdir().unwrap();
        write_sample_csv(
            dir.path(),
            "fig8_mu1over6.csv",
            &[
                result_line("class2.k", 1.0, 1, 42, 0.9),
                result_line("class2.k", 1.0, 2, 42, 1.9),
                result_line("class2.k", 2.0, 1, 42, 1.0),
                result_line("class2.k", 2.0, 2, 42, 2.1),
            ],
        );
        let summary = sweep_report(dir.path(), dir.path()).unwrap();
        assert!(
            summary.files.contains(&"latency_vs_k2_mu1over6.dat".to_string()),
            "{:?}",
            summary.files
        );
        assert!(summary.files.contains(&"efficiency_vs_k2_mu1over6.dat".to_string()));
        assert!(summary.files.contains(&"manifest.txt".to_string()));
        assert!(summary.warnings.is_empty(), "{:?}", summary.warnings);

        let dat =
            std::fs::read_to_string(dir.path().join("latency_vs_k2_mu1over6.dat")).unwrap();
        assert!(dat.contains("# seed=42 class=2 policy=fcfs"), "{dat}");
        assert!(dat.contains("2.000000 2.100000 0.010000"), "{dat}");
        let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert!(manifest.contains("latency_vs_k2_mu1over6.dat <- fig8_mu1over6.csv"), "{manifest}");
    }

    #[test]
    fn efficiency_blocks_fold_duplicate_class_rows() {
        let dir = tempfile::tempdir().unwrap();
        write_sample_csv(
            dir.path(),
            "fig10.csv",
            &[
                result_line("n", 2.0, 1, 7, 0.9),
                result_line("n", 2.0, 2, 7, 1.9),
                result_line("n", 3.0, 1, 7, 1.0),
                result_line("n", 3.0, 2, 7, 2.1),
            ],
        );
        let summary = sweep_report(dir.path(), dir.path()).unwrap();
        assert!(summary.files.contains(&"efficiency_vs_n_fig10.dat".to_string()));
        let dat = std::fs::read_to_string(dir.path().join("efficiency_vs_n_fig10.dat")).unwrap();
        let data_lines: Vec<&str> =
            dat.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).collect();
        assert_eq!(data_lines.len(), 2, "one point per sweep value: {dat}");
    }

    #[test]
    fn empty_directory_reports_no_input_rows() {
        let dir = tempfile::tempdir().unwrap();
        let err = sweep_report(dir.path(), dir.path()).unwrap_err();
        assert!(err.to_string().contains("no input rows"), "{err}");
    }

    #[test]
    fn header_only_csv_also_reports_no_input_rows() {
        let dir = tempfile::tempdir().unwrap();
        write_sample_csv(dir.path(), "empty.csv", &[]);
        let err = sweep_report(dir.path(), dir.path()).unwrap_err();
        assert!(err.to_string().contains("no input rows"), "{err}");
    }

    #[test]
    fn missing_columns_are_reported_by_name() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("broken.csv"), "sweep_param,sweep_value\nnone,0\n")
            .unwrap();
        let err = sweep_report(dir.path(), dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing columns"), "{msg}");
        assert!(msg.contains("mean_latency") && msg.contains("class_id"), "{msg}");
    }

    #[test]
    fn mixed_seeds_warn_and_split_blocks() {
        let dir = tempfile::tempdir().unwrap();
        write_sample_csv(
            dir.path(),
            "fig12.csv",
            &[
                result_line("class1.r", 4.0, 1, 42, 0.9),
                result_line("class1.r", 4.0, 1, 43, 0.95),
            ],
        );
        let summary = sweep_report(dir.path(), dir.path()).unwrap();
        assert_eq!(summary.warnings.len(), 1, "{:?}", summary.warnings);
        assert!(summary.warnings[0].contains("mix"), "{:?}", summary.warnings);
        let dat = std::fs::read_to_string(dir.path().join("latency_vs_r1_fig12.dat")).unwrap();
        assert!(dat.contains("seed=42") && dat.contains("seed=43"), "{dat}");
    }

    #[test]
    fn storage_sidecars_become_storage_figures() {
        let dir = tempfile::tempdir().unwrap();
        write_sample_csv(dir.path(), "fig9_rate.csv", &[result_line("class2.k", 2.0, 2, 42, 1.0)]);
        std::fs::write(
            dir.path().join("fig9_rate_storage.csv"),
            "sweep_param,sweep_value,class_id,storage_kilobits,storage_factor,read_kilobits,schema_version\n\
             class2.k,2.000000,2,5.000000,5.000000,5.000000,1\n",
        )
        .unwrap();
        let summary = sweep_report(dir.path(), dir.path()).unwrap();
        assert!(
            summary.files.contains(&"storage_vs_k2_rate.dat".to_string()),
            "{:?}",
            summary.files
        );
        let dat = std::fs::read_to_string(dir.path().join("storage_vs_k2_rate.dat")).unwrap();
        assert!(dat.contains("2.000000 5.000000 5.000000"), "{dat}");
    }

    #[test]
    fn param_tags_abbreviate_class_paths() {
        assert_eq!(param_tag("class2.k"), "k2");
        assert_eq!(param_tag("class1.r"), "r1");
        assert_eq!(param_tag("n"), "n");
        assert_eq!(param_tag("power.d_l"), "power_d_l");
        assert_eq!(param_tag("classless.k"), "classless_k");
    }
}
