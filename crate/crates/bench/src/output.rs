//! CSV, Markdown and plot-data artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::runner::{summarize, AggregateRow, ExperimentOutput};

/// One recorded iterate; the column order is the file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub sweep_key: String,
    pub seed: u64,
    pub iter: usize,
    pub residual: Option<f64>,
    pub residual_stderr: Option<f64>,
    pub samples_cum: u64,
    pub wall_ms: f64,
}

/// Per-solver rows of an experiment, in run order.
pub fn csv_rows(output: &ExperimentOutput, solver: &str) -> Vec<CsvRow> {
    output
        .runs
        .iter()
        .filter(|r| r.solver == solver)
        .filter_map(|r| r.outcome.as_ref().ok().map(|rep| (r, rep)))
        .flat_map(|(r, rep)| {
            rep.records.iter().map(move |rec| CsvRow {
                sweep_key: r.sweep_key.clone(),
                seed: r.seed,
                iter: rec.iter,
                residual: rec.residual.map(|e| e.value),
                residual_stderr: rec.residual.map(|e| e.stderr),
                samples_cum: rec.samples_cum,
                wall_ms: rec.wall_ms,
            })
        })
        .collect()
}

pub fn emit_csv(rows: &[CsvRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if rows.is_empty() {
        return Err(BenchError::invalid(format!("{}: no iterates to write", path.display())));
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    r.deserialize().map(|row| row.map_err(BenchError::from)).collect()
}

/// Recomputes aggregate rows from parsed CSV rows: the last iterate of each
/// (sweep key, seed) is that run's final record.
pub fn aggregate_csv(rows: &[CsvRow], solver: &str) -> Vec<AggregateRow> {
    let mut keys: Vec<&str> = Vec::new();
    for r in rows {
        if !keys.contains(&r.sweep_key.as_str()) {
            keys.push(&r.sweep_key);
        }
    }
    keys.into_iter()
        .map(|key| {
            let mut finals: Vec<(u64, &CsvRow)> = Vec::new();
            for r in rows.iter().filter(|r| r.sweep_key == key) {
                match finals.iter_mut().find(|(s, _)| *s == r.seed) {
                    Some(slot) if r.iter >= slot.1.iter => slot.1 = r,
                    Some(_) => {}
                    None => finals.push((r.seed, r)),
                }
            }
            let vals: Vec<(f64, f64, f64)> = finals
                .iter()
                .map(|(_, r)| (r.residual.unwrap_or(f64::NAN), r.wall_ms, r.samples_cum as f64))
                .collect();
            summarize(key.to_string(), solver.to_string(), vals.len(), &vals)
        })
        .collect()
}

fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.2e}")
    } else {
        "n/a".into()
    }
}

/// One table per solver, plus a side-by-side comparison when there are
/// several.
pub fn markdown_tables(rows: &[AggregateRow]) -> String {
    let mut solvers: Vec<&str> = Vec::new();
    let mut keys: Vec<&str> = Vec::new();
    for r in rows {
        if !solvers.contains(&r.solver.as_str()) {
            solvers.push(&r.solver);
        }
        if !keys.contains(&r.sweep_key.as_str()) {
            keys.push(&r.sweep_key);
        }
    }
    let mut s = String::new();
    for solver in &solvers {
        let _ = writeln!(s, "### {solver}\n");
        s.push_str("| sweep | seeds | failed | mean res | std res | mean time (ms) | mean samples |\n");
        s.push_str("|---|---|---|---|---|---|---|\n");
        for r in rows.iter().filter(|r| r.solver == *solver) {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {:.1} | {:.3e} |",
                r.sweep_key,
                r.seeds,
                r.failed,
                sci(r.mean_residual),
                sci(r.std_residual),
                r.mean_wall_ms,
                r.mean_samples
            );
        }
        s.push('\n');
    }
    if solvers.len() > 1 {
        s.push_str("### comparison\n\n| sweep |");
        for solver in &solvers {
            let _ = write!(s, " {solver} res | {solver} time (ms) |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---|---|".repeat(solvers.len()));
        s.push('\n');
        for key in &keys {
            let _ = write!(s, "| {key} |");
            for solver in &solvers {
                match rows.iter().find(|r| r.sweep_key == *key && r.solver == *solver) {
                    Some(r) => {
                        let _ = write!(s, " {} | {:.1} |", sci(r.mean_residual), r.mean_wall_ms);
                    }
                    None => s.push_str(" - | - |"),
                }
            }
            s.push('\n');
        }
    }
    s
}

/// Writes `<solver>.csv` for every solver with at least one successful run,
/// plus `summary.md` and `summary.json`. Returns the CSV paths.
pub fn write_outputs(output: &ExperimentOutput, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut solvers: Vec<&str> = Vec::new();
    for r in &output.runs {
        if !solvers.contains(&r.solver.as_str()) {
            solvers.push(&r.solver);
        }
    }
    let mut paths = Vec::new();
    for solver in solvers {
        let rows = csv_rows(output, solver);
        if rows.is_empty() {
            continue;
        }
        let path = dir.join(format!("{solver}.csv"));
        emit_csv(&rows, &path)?;
        paths.push(path);
    }
    let md = dir.join("summary.md");
    fs::write(&md, markdown_tables(&output.rows)).map_err(|e| BenchError::io(&md, e))?;
    let js = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&output.rows)?;
    fs::write(&js, text).map_err(|e| BenchError::io(&js, e))?;
    Ok(paths)
}

/// CSV files in `dir`, sorted by name.
pub fn list_csvs(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| BenchError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    v.sort();
    Ok(v)
}

fn solver_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Markdown tables recomputed from the CSV files in `dir`.
pub fn tables_from_dir(dir: impl AsRef<Path>) -> Result<String> {
    let mut rows = Vec::new();
    for path in list_csvs(&dir)? {
        rows.extend(aggregate_csv(&read_csv(&path)?, &solver_of(&path)));
    }
    if rows.is_empty() {
        return Err(BenchError::invalid(format!("{}: no CSV files", dir.as_ref().display())));
    }
    Ok(markdown_tables(&rows))
}

/// Seed-averaged residual trajectories as whitespace-separated columns
/// `iter mean_residual stderr mean_samples`, one file per (solver, sweep
/// key). Only iterations recorded for every seed are kept.
pub fn write_plot_data(input: impl AsRef<Path>, out: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out = out.as_ref();
    fs::create_dir_all(out).map_err(|e| BenchError::io(out, e))?;
    let mut written = Vec::new();
    for path in list_csvs(&input)? {
        let solver = solver_of(&path);
        let rows = read_csv(&path)?;
        let mut keys: Vec<&str> = Vec::new();
        for r in &rows {
            if !keys.contains(&r.sweep_key.as_str()) {
                keys.push(&r.sweep_key);
            }
        }
        for key in keys {
            let group: Vec<&CsvRow> = rows.iter().filter(|r| r.sweep_key == key).collect();
            let mut seeds: Vec<u64> = group.iter().map(|r| r.seed).collect();
            seeds.sort_unstable();
            seeds.dedup();
            let mut iters: Vec<usize> = group.iter().map(|r| r.iter).collect();
            iters.sort_unstable();
            iters.dedup();
            let mut text = format!("# {solver} {key}\n# iter mean_residual stderr mean_samples\n");
            for it in iters {
                let at: Vec<&&CsvRow> = group.iter().filter(|r| r.iter == it).collect();
                if at.len() != seeds.len() {
                    continue;
                }
                let res: hgame_core::stats::Running = at.iter().map(|r| r.residual.unwrap_or(f64::NAN)).collect();
                let samples = at.iter().map(|r| r.samples_cum as f64).sum::<f64>() / at.len() as f64;
                let _ = writeln!(text, "{it} {:e} {:e} {samples:e}", res.mean(), res.stderr());
            }
            let safe: String =
                key.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect();
            let file = out.join(format!("{solver}_{safe}.dat"));
            fs::write(&file, text).map_err(|e| BenchError::io(&file, e))?;
            written.push(file);
        }
    }
    Ok(written)
}
