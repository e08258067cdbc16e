use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::CURVES_SCHEMA;
use crate::config::Config;
use crate::error::CliResult;
use crate::io::line_chart;
use crate::output::{RunDir, RunManifest, Table, MANIFEST};

/// Tables shown inline in the markdown report; the rest are only merged.
const INLINE: [&str; 6] = [
    "fidelity.csv",
    "summary.csv",
    "breakdown.csv",
    "composite.csv",
    "correlation_summary.csv",
    "features.csv",
];

struct Merged {
    name: String,
    table: Table,
}

fn markdown_table(t: &Table) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "| {} |", t.header.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(t.header.len()));
    for r in &t.rows {
        let _ = writeln!(s, "| {} |", r.join(" | "));
    }
    s
}

/// Merges the tables of several run directories. Tables with the same file
/// name and schema are concatenated in argument order with duplicate rows
/// dropped. Directories without a manifest are listed and skipped.
pub fn report(cfg: &Config, runs: &[PathBuf], out: &Path) -> CliResult<RunManifest> {
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    let mut merged: Vec<Merged> = Vec::new();
    for dir in runs {
        let manifest = match RunManifest::read(dir) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("skipping {}: {e}", dir.display());
                skipped.push(dir.clone());
                continue;
            }
        };
        for f in manifest.outputs.iter().filter(|f| f.path.ends_with(".csv")) {
            let t = Table::read(&dir.join(&f.path))?;
            match merged.iter_mut().find(|m| m.name == f.path && m.table.schema == t.schema) {
                Some(m) if m.table.header == t.header => {
                    for r in t.rows {
                        if !m.table.rows.contains(&r) {
                            m.table.rows.push(r);
                        }
                    }
                }
                Some(_) => eprintln!("{}: header differs from earlier runs, not merged", dir.join(&f.path).display()),
                None => merged.push(Merged {
                    name: f.path.clone(),
                    table: t,
                }),
            }
        }
        used.push((dir.clone(), manifest));
    }

    let mut run = RunDir::create(out)?;
    let mut md = String::from("# Run report\n\n## Runs\n\n| directory | command | seed | deterministic |\n|---|---|---|---|\n");
    for (d, m) in &used {
        let _ = writeln!(md, "| {} | {} | {} | {} |", d.display(), m.command, m.seed, m.deterministic);
    }
    if !skipped.is_empty() {
        md.push_str("\n## Skipped (no manifest)\n\n");
        for d in &skipped {
            let _ = writeln!(md, "- {}", d.display());
        }
    }
    for m in &merged {
        run.csv(&m.name, &m.table.schema, &m.table.header.iter().map(String::as_str).collect::<Vec<_>>(), &m.table.rows)?;
        if INLINE.contains(&m.name.as_str()) {
            let _ = write!(md, "\n## {}\n\n{}", m.name, markdown_table(&m.table));
        }
    }

    if let Some(c) = merged.iter().find(|m| m.table.schema == CURVES_SCHEMA) {
        let t = &c.table;
        let (mc, wc) = (t.column("method")?, t.column("weed_coverage_mean")?);
        let mut methods: Vec<&str> = Vec::new();
        for r in &t.rows {
            if !methods.contains(&r[mc].as_str()) {
                methods.push(&r[mc]);
            }
        }
        let series = methods
            .iter()
            .map(|m| {
                (0..t.rows.len())
                    .filter(|&i| t.rows[i][mc] == *m)
                    .map(|i| t.f64_at(i, wc))
                    .collect::<CliResult<Vec<_>>>()
            })
            .collect::<CliResult<Vec<_>>>()?;
        run.image("weed_coverage.png", &line_chart(&series, 1.0, 480, 320))?;
        let _ = write!(md, "\n## Weed coverage\n\n![weed coverage](weed_coverage.png)\n\nSeries order: {}\n", methods.join(", "));
    }
    run.text("report.md", &md)?;
    let inputs: Vec<PathBuf> = used.iter().map(|(d, _)| d.join(MANIFEST)).collect();
    run.finish("report", cfg, &inputs)
}
