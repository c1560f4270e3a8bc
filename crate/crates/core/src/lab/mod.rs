//! Experiment orchestration: grid configuration, execution, results files,
//! analysis and report rendering.

mod analyze;
mod config;
mod grid;
mod report;
mod results;

pub use analyze::{
    analyze, canonical_formula, CoefficientRow, DiagnosticsSection, PairwiseSection, RegressionSummary, ReportBundle,
    Warning,
};
pub use config::{AnalysisConfig, DatasetConfig, GridConfig, LearnerConfig, Override, StrategyConfig};
pub use grid::{
    build_dataset, build_run_scenario, derive_seed, enumerate_runs, execute_run, run_grid, run_single, synth_spec,
    GridResults, RunOutcome, RunSeeds, RunSpec, RunSuccess, VERSION,
};
pub use report::{
    correlation_svg, gain_text, heatmap_svg, pairwise_markdown, pairwise_svg, render, render_csv, render_markdown,
    render_svg, slug, write_report, HeatCell, RenderedFile, ReportFormat,
};
pub use results::{load_results, parse_results, results_csv, write_grid_outputs, ResultsTable, RESULTS_COLUMNS};

/// The shipped default grid configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../../configs/default.toml");
