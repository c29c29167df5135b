//! Report emission: per-axis CSV tables, a combined JSON report, and
//! gnuplot-ready `.dat` files for the figure analogs.
//!
//! Floats are printed with Rust's shortest round-trip formatting so parsing a
//! CSV back reproduces the stored values exactly.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::{CacheStageReport, StagedReport, SweepResult};

pub const CSV_HEADER: &str = "axis,value,benchmark,roi_cycles,ipc_roi,per_pen";

/// Single-axis sweep CSV: per-benchmark rows then one `AVG` summary row per
/// value, columns exactly `axis,value,benchmark,roi_cycles,ipc_roi,per_pen`.
pub fn write_sweep_csv<W: Write>(mut w: W, r: &SweepResult) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let nb = r.benchmarks.len();
    for (vi, &value) in r.values.iter().enumerate() {
        let rows = &r.rows[vi * nb..(vi + 1) * nb];
        for row in rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.axis, value, row.benchmark, row.roi_cycles, row.ipc_roi, row.per_pen
            )?;
        }
        let mean_cycles = rows.iter().map(|x| x.roi_cycles as f64).sum::<f64>() / nb as f64;
        let mean_ipc = rows.iter().map(|x| x.ipc_roi).sum::<f64>() / nb as f64;
        writeln!(
            w,
            "{},{},AVG,{},{},{}",
            r.axis, value, mean_cycles, mean_ipc, r.avg_per_pen[vi].per_pen
        )?;
    }
    Ok(())
}

/// Cache-stage CSV (pair sweep): `l1_kb,l2_kb,benchmark,roi_cycles,ipc_roi,per_pen`.
pub fn write_cache_stage_csv<W: Write>(mut w: W, r: &CacheStageReport) -> io::Result<()> {
    writeln!(w, "l1_kb,l2_kb,benchmark,roi_cycles,ipc_roi,per_pen")?;
    let nb = r.benchmarks.len();
    for (pi, avg) in r.avg.iter().enumerate() {
        let rows = &r.rows[pi * nb..(pi + 1) * nb];
        for row in rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                row.l1_kb, row.l2_kb, row.benchmark, row.roi_cycles, row.ipc_roi, row.per_pen
            )?;
        }
        let mean_cycles = rows.iter().map(|x| x.roi_cycles as f64).sum::<f64>() / nb as f64;
        let mean_ipc = rows.iter().map(|x| x.ipc_roi).sum::<f64>() / nb as f64;
        writeln!(w, "{},{},AVG,{},{},{}", avg.l1_kb, avg.l2_kb, mean_cycles, mean_ipc, avg.per_pen)?;
    }
    Ok(())
}

/// Axis `.dat`: one row per size with per-benchmark penalties and the average
/// (columns: size, one per benchmark, avg).
pub fn write_axis_dat<W: Write>(mut w: W, r: &SweepResult) -> io::Result<()> {
    write!(w, "# {}", r.axis)?;
    for b in &r.benchmarks {
        write!(w, " {b}")?;
    }
    writeln!(w, " avg")?;
    let nb = r.benchmarks.len();
    for (vi, &value) in r.values.iter().enumerate() {
        write!(w, "{value}")?;
        for row in &r.rows[vi * nb..(vi + 1) * nb] {
            write!(w, " {}", row.per_pen)?;
        }
        writeln!(w, " {}", r.avg_per_pen[vi].per_pen)?;
    }
    Ok(())
}

/// Per-benchmark cache `.dat`: rows are L1 sizes, one penalty column per L2
/// size (`nan` where the pair is skipped).
pub fn write_cache_dat<W: Write>(mut w: W, r: &CacheStageReport, benchmark: &str) -> io::Result<()> {
    let mut l1s: Vec<u64> = r.avg.iter().map(|a| a.l1_kb).collect();
    l1s.dedup();
    let mut l2s: Vec<u64> = r.avg.iter().map(|a| a.l2_kb).collect();
    l2s.sort_unstable();
    l2s.dedup();

    write!(w, "# l1_kb")?;
    for l2 in &l2s {
        write!(w, " l2_{l2}")?;
    }
    writeln!(w)?;
    for &l1 in &l1s {
        write!(w, "{l1}")?;
        for &l2 in &l2s {
            let pen = r
                .rows
                .iter()
                .find(|row| row.benchmark == benchmark && row.l1_kb == l1 && row.l2_kb == l2)
                .map(|row| row.per_pen);
            match pen {
                Some(p) => write!(w, " {p}")?,
                None => write!(w, " nan")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

fn create(dir: &Path, name: &str, paths: &mut Vec<PathBuf>) -> io::Result<fs::File> {
    let path = dir.join(name);
    let f = fs::File::create(&path)?;
    paths.push(path);
    Ok(f)
}

/// Write one sweep's CSV + JSON + `.dat` under `dir`; returns the paths.
pub fn emit_sweep(r: &SweepResult, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    write_sweep_csv(create(dir, &format!("{}.csv", r.axis), &mut paths)?, r)?;
    write_axis_dat(create(dir, &format!("{}.dat", r.axis), &mut paths)?, r)?;
    let json = serde_json::to_string_pretty(r)?;
    writeln!(create(dir, &format!("{}.json", r.axis), &mut paths)?, "{json}")?;
    Ok(paths)
}

/// Write the full staged report: per-axis CSVs, the combined JSON, and the
/// figure-analog `.dat` files (one cache `.dat` per benchmark, one `.dat` per
/// swept axis).
pub fn emit_report(report: &StagedReport, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();

    write_cache_stage_csv(create(dir, "cache_stage.csv", &mut paths)?, &report.cache_stage)?;
    for (stage, file) in [
        (&report.regfile_stage, "phys_regs.csv"),
        (&report.rob_stage, "rob.csv"),
        (&report.iq_stage, "iq.csv"),
        (&report.lsq_stage, "lsq.csv"),
    ] {
        write_sweep_csv(create(dir, file, &mut paths)?, &stage.sweep)?;
    }

    let json = serde_json::to_string_pretty(report)?;
    writeln!(create(dir, "report.json", &mut paths)?, "{json}")?;

    for bench in &report.cache_stage.benchmarks {
        write_cache_dat(create(dir, &format!("cache_{bench}.dat"), &mut paths)?, &report.cache_stage, bench)?;
    }
    write_axis_dat(create(dir, "regfile.dat", &mut paths)?, &report.regfile_stage.sweep)?;
    write_axis_dat(create(dir, "rob.dat", &mut paths)?, &report.rob_stage.sweep)?;
    write_axis_dat(create(dir, "iq.dat", &mut paths)?, &report.iq_stage.sweep)?;
    write_axis_dat(create(dir, "lsq.dat", &mut paths)?, &report.lsq_stage.sweep)?;
    Ok(paths)
}
