use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use efcil_lab::datagen::{dataset_stats, synth_class_means, synth_features, MeanLayout};
use efcil_lab::lab::{
    analyze, enumerate_runs, load_results, results_csv, run_grid, run_single, synth_spec, write_grid_outputs,
    write_report, GridConfig, ReportBundle, ReportFormat, RunSpec, DEFAULT_CONFIG, VERSION,
};
use efcil_lab::scenario::ScenarioKind;
use efcil_lab::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_PARTIAL: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

/// Exemplar-free class-incremental learning lab: run experiment grids over
/// feature embeddings and analyze what drives accuracy and forgetting.
#[derive(Debug, Parser)]
#[command(name = "efcil", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the synthetic feature files of every dataset, strategy and repetition.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Run a single grid cell and print its results row.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: String,
        #[arg(long)]
        train: String,
        #[arg(long)]
        incr: String,
        #[arg(long, value_parser = parse_scenario)]
        scenario: ScenarioKind,
        #[arg(long, default_value_t = 0)]
        rep: usize,
    },
    /// Run every cell of the grid and write the results table.
    Grid {
        #[command(flatten)]
        common: Common,
        /// Worker threads (default: all logical cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Analyze results files and write a report bundle.
    Analyze {
        /// Results CSV files or grid output directories.
        #[arg(required = true)]
        results: Vec<PathBuf>,
        /// Config whose [analysis] section to use; defaults to the one saved
        /// next to the results, then to built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
        /// Significance level; overrides the config's (0.05 by default).
        #[arg(long)]
        alpha: Option<f64>,
        /// Combine results produced by different configs.
        #[arg(long)]
        force_mixed: bool,
        /// Also render the bundle in these formats.
        #[arg(long, value_delimiter = ',', value_parser = parse_format)]
        formats: Vec<ReportFormat>,
    },
    /// Render a report bundle to CSV, Markdown and/or SVG.
    Report {
        /// Bundle file written by `analyze`, or its directory.
        bundle: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', value_parser = parse_format, default_value = "csv,md,svg")]
        formats: Vec<ReportFormat>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Grid config (TOML); the built-in default grid when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_scenario(s: &str) -> Result<ScenarioKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Error tagged with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Infeasible(_)) {
            EXIT_INFEASIBLE
        } else {
            EXIT_USAGE
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn load_config(common: &Common) -> Result<GridConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => GridConfig::load(p)?,
        None => GridConfig::from_toml_str(DEFAULT_CONFIG)?,
    };
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    Ok(cfg)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn cmd_synth(common: &Common) -> Result<u8, Failure> {
    let cfg = load_config(common)?;
    let dir = common.out.join("features");
    let mut table =
        String::from("file,data,train,rep,separation,layout,N,n_mean,sigma_train,mean_test,sigma_test,small,width\n");
    let mut count = 0;
    for d in cfg.datasets.iter().filter(|d| d.is_synthetic()) {
        for s in &cfg.strategies {
            for rep in 0..cfg.repetitions {
                let spec = synth_spec(&cfg, d, s.separation, &s.name, rep);
                let ds = synth_features::<f64>(&spec)?;
                let (_, layout) = synth_class_means::<f64>(&spec)?;
                let stats = dataset_stats(&ds)?.with_metadata(d.small, d.width);
                let name = format!("{}__{}__r{rep:03}.csv", d.name, s.name);
                write_file(&dir.join(&name), &ds.to_csv_string())?;
                let layout = match layout {
                    MeanLayout::Orthogonal => "orthogonal",
                    MeanLayout::Random => "random",
                };
                let _ = writeln!(
                    table,
                    "{name},{},{},{rep},{},{layout},{},{},{},{},{},{},{}",
                    d.name,
                    s.name,
                    spec.separation,
                    stats.n_classes,
                    stats.mean_train,
                    stats.sigma_train,
                    stats.mean_test,
                    stats.sigma_test,
                    u8::from(stats.small),
                    stats.width
                );
                count += 1;
            }
        }
    }
    write_file(&common.out.join("datasets.csv"), &table)?;
    eprintln!("wrote {count} feature files to {}", dir.display());
    Ok(0)
}

fn cmd_run(common: &Common, spec: RunSpec) -> Result<u8, Failure> {
    let cfg = load_config(common)?;
    if !enumerate_runs(&cfg).contains(&spec) {
        return Err(Failure::usage(format!(
            "`{}` is not a cell of the configured grid",
            spec.run_id()
        )));
    }
    let outcome = run_single(&cfg, &spec);
    match &outcome.result {
        Ok(s) => {
            let text = results_csv(std::slice::from_ref(&s.record), &cfg.hash(), VERSION)?;
            let dir = common.out.join("runs");
            write_file(&dir.join(format!("{}.csv", spec.run_id())), &s.accuracy.to_csv_string())?;
            write_file(
                &dir.join(format!("{}.scenario.txt", spec.run_id())),
                &s.scenario.to_text(),
            )?;
            print!("{text}");
            Ok(0)
        }
        Err(e) => {
            eprintln!("error: run {} failed: {e}", spec.run_id());
            Ok(EXIT_PARTIAL)
        }
    }
}

fn cmd_grid(common: &Common, jobs: Option<usize>) -> Result<u8, Failure> {
    let cfg = load_config(common)?;
    let grid = run_grid(&cfg, jobs)?;
    write_grid_outputs(&common.out, &grid, &cfg.to_toml_string())?;
    let failures = grid.failures();
    eprintln!(
        "{} runs, {} succeeded, {} failed; results in {}",
        grid.outcomes.len(),
        grid.outcomes.len() - failures.len(),
        failures.len(),
        common.out.join("results.csv").display()
    );
    for (spec, e) in &failures {
        eprintln!("  failed {}: {e}", spec.run_id());
    }
    Ok(if failures.is_empty() { 0 } else { EXIT_PARTIAL })
}

fn cmd_analyze(
    results: &[PathBuf],
    config: Option<&Path>,
    out: &Path,
    alpha: Option<f64>,
    force_mixed: bool,
    formats: &[ReportFormat],
) -> Result<u8, Failure> {
    let table = load_results(results, force_mixed)?;
    let saved = results
        .iter()
        .find(|p| p.is_dir())
        .map(|p| p.join("config.toml"))
        .filter(|p| p.is_file());
    let mut analysis = match config.map(Path::to_path_buf).or(saved) {
        Some(p) => GridConfig::load(&p)?.analysis,
        None => Default::default(),
    };
    if let Some(a) = alpha {
        analysis.alpha = a;
    }
    let bundle = analyze(
        &table.records,
        &analysis,
        &table.config_hash(),
        &table.versions.join("+"),
    )?;
    write_file(&out.join("bundle.ron"), &bundle.to_ron())?;
    if !formats.is_empty() {
        write_report(&bundle, formats, out)?;
    }
    for t in &bundle.anova {
        let ranked: Vec<String> = t
            .ranked()
            .iter()
            .map(|r| format!("{} {:.3}", r.term, r.partial_eta2))
            .collect();
        println!("{}: R2 {:.3}; partial eta2 {}", t.formula, t.r2, ranked.join(", "));
    }
    for w in &bundle.warnings {
        eprintln!("warning: {} `{}`: {}", w.stage, w.subject, w.message);
    }
    eprintln!("report bundle written to {}", out.join("bundle.ron").display());
    Ok(0)
}

fn cmd_report(bundle: &Path, out: Option<&Path>, formats: &[ReportFormat]) -> Result<u8, Failure> {
    let file = if bundle.is_dir() {
        bundle.join("bundle.ron")
    } else {
        bundle.to_path_buf()
    };
    let text = std::fs::read_to_string(&file).map_err(|e| Failure::usage(format!("{}: {e}", file.display())))?;
    let b = ReportBundle::from_ron(&text)?;
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| file.parent().unwrap_or(Path::new(".")).to_path_buf());
    let written = write_report(&b, formats, &dir)?;
    eprintln!("wrote {} files to {}", written.len(), dir.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Synth { common } => cmd_synth(common),
        Command::Run {
            common,
            data,
            train,
            incr,
            scenario,
            rep,
        } => cmd_run(
            common,
            RunSpec {
                data: data.clone(),
                train: train.clone(),
                incr: incr.clone(),
                scenario: *scenario,
                rep: *rep,
            },
        ),
        Command::Grid { common, jobs } => cmd_grid(common, *jobs),
        Command::Analyze {
            results,
            config,
            out,
            alpha,
            force_mixed,
            formats,
        } => cmd_analyze(results, config.as_deref(), out, *alpha, *force_mixed, formats),
        Command::Report { bundle, out, formats } => cmd_report(bundle, out.as_deref(), formats),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
