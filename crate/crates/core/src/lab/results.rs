//! Results files: `results.csv`, `failures.csv`, `manifest.csv` and one
//! accuracy matrix per run under `runs/`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::grid::GridResults;
use crate::error::{Error, Result};
use crate::stats::RunRecord;

pub const RESULTS_COLUMNS: [&str; 14] = [
    "run_id",
    "data",
    "train",
    "incr",
    "scenario_B",
    "N",
    "N1",
    "n_mean",
    "small",
    "width",
    "acc1",
    "avg_acc",
    "forgetting",
    "accK",
];

fn provenance_line(config_hash: &str, version: &str) -> String {
    format!("# config_hash={config_hash} version={version}\n")
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

/// `results.csv` contents: provenance comment, header, one row per record.
pub fn results_csv(records: &[RunRecord], config_hash: &str, version: &str) -> Result<String> {
    let rows = records.iter().map(|r| {
        vec![
            r.run_id.clone(),
            r.data.clone(),
            r.train.clone(),
            r.incr.clone(),
            flag(r.scenario_b),
            r.n_classes.to_string(),
            r.n1.to_string(),
            r.n_mean.to_string(),
            flag(r.small),
            r.width.to_string(),
            r.acc1.to_string(),
            r.avg_acc.to_string(),
            r.forgetting.to_string(),
            r.acc_k.to_string(),
        ]
    });
    Ok(provenance_line(config_hash, version) + &csv_text(&RESULTS_COLUMNS, rows)?)
}

/// Writes every output of a grid into `dir` and returns the written paths.
pub fn write_grid_outputs(dir: &Path, grid: &GridResults, config_toml: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir.join("runs"))?;
    let mut written = Vec::new();
    let mut put = |name: PathBuf, text: &str| -> Result<()> {
        std::fs::write(&name, text)?;
        written.push(name);
        Ok(())
    };
    let prov = provenance_line(&grid.config_hash, &grid.version);

    put(
        dir.join("results.csv"),
        &results_csv(&grid.records(), &grid.config_hash, &grid.version)?,
    )?;

    let failures = grid.failures().into_iter().map(|(s, e)| {
        vec![
            s.run_id(),
            s.data.clone(),
            s.train.clone(),
            s.incr.clone(),
            s.scenario.to_string(),
            s.rep.to_string(),
            e.to_string(),
        ]
    });
    let header = ["run_id", "data", "train", "incr", "scenario", "rep", "error"];
    put(
        dir.join("failures.csv"),
        &(prov.clone() + &csv_text(&header, failures)?),
    )?;

    let manifest = grid.outcomes.iter().map(|o| {
        vec![
            o.run_id(),
            o.spec.rep.to_string(),
            o.seeds.dataset.to_string(),
            o.seeds.scenario.to_string(),
            o.seeds.learner.to_string(),
            if o.result.is_ok() { "ok" } else { "failed" }.to_string(),
        ]
    });
    let header = [
        "run_id",
        "rep",
        "dataset_seed",
        "scenario_seed",
        "learner_seed",
        "status",
    ];
    put(
        dir.join("manifest.csv"),
        &(prov.clone() + &csv_text(&header, manifest)?),
    )?;

    for o in &grid.outcomes {
        if let Ok(s) = &o.result {
            let mut text = prov.clone();
            let _ = writeln!(
                text,
                "# scenario K={} b={}",
                s.scenario.num_steps(),
                s.scenario.initial_fraction()
            );
            text.push_str(&s.accuracy.to_csv_string());
            put(dir.join("runs").join(format!("{}.csv", o.run_id())), &text)?;
        }
    }
    put(dir.join("config.toml"), &(prov + config_toml))?;
    Ok(written)
}

/// Parsed results, possibly merged from several files.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    /// Distinct config hashes seen, sorted.
    pub config_hashes: Vec<String>,
    pub versions: Vec<String>,
    /// Sorted by run id.
    pub records: Vec<RunRecord>,
}

impl ResultsTable {
    pub fn config_hash(&self) -> String {
        self.config_hashes.join("+")
    }
}

fn parse_provenance(text: &str) -> (Option<String>, Option<String>) {
    let mut hash = None;
    let mut version = None;
    if let Some(line) = text.lines().next().and_then(|l| l.strip_prefix('#')) {
        for part in line.split_whitespace() {
            if let Some(h) = part.strip_prefix("config_hash=") {
                hash = Some(h.to_string());
            } else if let Some(v) = part.strip_prefix("version=") {
                version = Some(v.to_string());
            }
        }
    }
    (hash, version)
}

/// Parses one `results.csv` text; returns its config hash (if recorded).
pub fn parse_results(text: &str) -> Result<(Option<String>, Option<String>, Vec<RunRecord>)> {
    let (hash, version) = parse_provenance(text);
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols != RESULTS_COLUMNS {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected columns {}, found {}",
                RESULTS_COLUMNS.join(","),
                cols.join(",")
            ),
        });
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let bad = |col: &str, v: &str| Error::Parse {
            line,
            message: format!("invalid {col} `{v}`"),
        };
        let num = |i: usize| -> Result<f64> {
            let v = &row[i];
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(RESULTS_COLUMNS[i], v))
        };
        let int = |i: usize| -> Result<usize> { row[i].parse().map_err(|_| bad(RESULTS_COLUMNS[i], &row[i])) };
        let boolean = |i: usize| -> Result<bool> {
            match &row[i] {
                "0" | "false" => Ok(false),
                "1" | "true" => Ok(true),
                v => Err(bad(RESULTS_COLUMNS[i], v)),
            }
        };
        records.push(RunRecord {
            run_id: row[0].to_string(),
            data: row[1].to_string(),
            train: row[2].to_string(),
            incr: row[3].to_string(),
            scenario_b: boolean(4)?,
            n_classes: int(5)?,
            n1: int(6)?,
            n_mean: num(7)?,
            small: boolean(8)?,
            width: num(9)?,
            acc1: num(10)?,
            avg_acc: num(11)?,
            forgetting: num(12)?,
            acc_k: num(13)?,
        });
    }
    Ok((hash, version, records))
}

/// Loads and merges results files. A directory means its `results.csv`.
/// Files from different configs are refused unless `force_mixed`.
pub fn load_results(paths: &[PathBuf], force_mixed: bool) -> Result<ResultsTable> {
    if paths.is_empty() {
        return Err(Error::Invalid("no results files given".into()));
    }
    let mut hashes = BTreeSet::new();
    let mut versions = BTreeSet::new();
    let mut records = Vec::new();
    for p in paths {
        let file = if p.is_dir() { p.join("results.csv") } else { p.clone() };
        let text = std::fs::read_to_string(&file)
            .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", file.display())))?;
        let (hash, version, recs) = parse_results(&text).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", file.display()),
            },
            other => other,
        })?;
        hashes.insert(hash.unwrap_or_else(|| "unknown".into()));
        versions.insert(version.unwrap_or_else(|| "unknown".into()));
        records.extend(recs);
    }
    if hashes.len() > 1 && !force_mixed {
        return Err(Error::Invalid(format!(
            "results come from different configs ({}); pass --force-mixed to combine them",
            hashes.iter().cloned().collect::<Vec<_>>().join(", ")
        )));
    }
    records.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    for w in records.windows(2) {
        if w[0].run_id == w[1].run_id {
            return Err(Error::Invalid(format!("duplicate run id `{}`", w[0].run_id)));
        }
    }
    Ok(ResultsTable {
        config_hashes: hashes.into_iter().collect(),
        versions: versions.into_iter().collect(),
        records,
    })
}
