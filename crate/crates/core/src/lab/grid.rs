//! Experiment grid: every (data, train, incr, scenario, repetition) cell.

use std::collections::BTreeMap;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{DatasetConfig, GridConfig};
use crate::datagen::{dataset_stats, synth_features, DatasetStats, FeatureDataset, Split, SynthSpec};
use crate::error::{Error, Result};
use crate::learners::{run_incremental, AccuracyMatrix};
use crate::metrics::compute_metrics;
use crate::scenario::{build_scenario, Scenario, ScenarioKind};
use crate::stats::RunRecord;

/// Version string written next to every output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Factor levels of one run.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RunSpec {
    pub data: String,
    pub train: String,
    pub incr: String,
    pub scenario: ScenarioKind,
    pub rep: usize,
}

impl RunSpec {
    pub fn run_id(&self) -> String {
        format!(
            "{}__{}__{}__{}__r{:03}",
            self.data, self.train, self.incr, self.scenario, self.rep
        )
    }

    pub fn seeds(&self, base_seed: u64) -> RunSeeds {
        let rep = self.rep.to_string();
        let scenario = self.scenario.as_str();
        RunSeeds {
            dataset: derive_seed(base_seed, &["dataset", &self.data, &rep]),
            scenario: derive_seed(base_seed, &["scenario", &self.data, scenario, &rep]),
            learner: derive_seed(base_seed, &["run", &self.data, &self.train, &self.incr, scenario, &rep]),
        }
    }
}

/// Seeds of one run. The dataset seed depends only on (data, rep), so every
/// strategy, learner and scenario of a repetition sees the same draw; the
/// class order depends on (data, scenario, rep).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub dataset: u64,
    pub scenario: u64,
    pub learner: u64,
}

/// `base_seed` plus a stable hash of the key parts. Adding levels to a grid
/// never changes the seeds of existing cells.
pub fn derive_seed(base_seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0x1f]);
    }
    let digest = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    base_seed.wrapping_add(u64::from_le_bytes(word))
}

/// All cells of the grid, sorted by run id.
pub fn enumerate_runs(cfg: &GridConfig) -> Vec<RunSpec> {
    let mut runs = Vec::new();
    for d in &cfg.datasets {
        for s in &cfg.strategies {
            for l in &cfg.learners {
                for &sc in &cfg.scenarios {
                    for rep in 0..cfg.repetitions {
                        runs.push(RunSpec {
                            data: d.name.clone(),
                            train: s.name.clone(),
                            incr: l.level().to_string(),
                            scenario: sc,
                            rep,
                        });
                    }
                }
            }
        }
    }
    runs.sort_by_key(RunSpec::run_id);
    runs
}

/// Successful run: the results row and the accuracy matrix behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSuccess {
    pub record: RunRecord,
    pub accuracy: AccuracyMatrix<f64>,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub spec: RunSpec,
    pub seeds: RunSeeds,
    pub result: std::result::Result<RunSuccess, String>,
}

impl RunOutcome {
    pub fn run_id(&self) -> String {
        self.spec.run_id()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResults {
    pub config_hash: String,
    pub version: String,
    /// Sorted by run id.
    pub outcomes: Vec<RunOutcome>,
}

impl GridResults {
    pub fn records(&self) -> Vec<RunRecord> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok().map(|s| s.record.clone()))
            .collect()
    }

    pub fn failures(&self) -> Vec<(&RunSpec, &str)> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().err().map(|e| (&o.spec, e.as_str())))
            .collect()
    }

    pub fn all_succeeded(&self) -> bool {
        self.outcomes.iter().all(|o| o.result.is_ok())
    }
}

/// Features for one (data, train) pair in one repetition, with descriptors.
pub fn build_dataset(
    cfg: &GridConfig,
    data: &str,
    train: &str,
    rep: usize,
) -> Result<(FeatureDataset<f64>, DatasetStats)> {
    let d = cfg
        .dataset(data)
        .ok_or_else(|| Error::Config(format!("unknown dataset `{data}`")))?;
    let s = cfg
        .strategy(train)
        .ok_or_else(|| Error::Config(format!("unknown strategy `{train}`")))?;
    let ds = if d.is_synthetic() {
        let spec = synth_spec(cfg, d, s.separation, train, rep);
        synth_features(&spec)?
    } else {
        let path = &d.embeddings[train];
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
        FeatureDataset::from_csv_str(data, &text)?
    };
    let stats = dataset_stats(&ds)?.with_metadata(d.small, d.width);
    Ok((ds, stats))
}

pub fn synth_spec(cfg: &GridConfig, d: &DatasetConfig, separation: f64, train: &str, rep: usize) -> SynthSpec {
    SynthSpec {
        name: d.name.clone(),
        n_classes: d.n_classes,
        dim: d.dim,
        n_train: d.n_train,
        n_test: d.n_test,
        separation: separation * d.separation_scale,
        strategy_tag: train.to_string(),
        axis_scales: d.axis_scales.clone(),
        seed: derive_seed(cfg.base_seed, &["dataset", &d.name, &rep.to_string()]),
    }
}

pub fn build_run_scenario(cfg: &GridConfig, spec: &RunSpec, ds: &FeatureDataset<f64>) -> Result<Scenario> {
    let seeds = spec.seeds(cfg.base_seed);
    build_scenario(&ds.classes(), spec.scenario, cfg.incremental_steps, seeds.scenario)
}

/// Executes one cell on an already built dataset.
pub fn execute_run(
    cfg: &GridConfig,
    spec: &RunSpec,
    ds: &FeatureDataset<f64>,
    stats: &DatasetStats,
) -> Result<RunSuccess> {
    let seeds = spec.seeds(cfg.base_seed);
    let mut hp = cfg.hyperparams_for(&spec.data, &spec.train, &spec.incr, spec.scenario)?;
    hp.seed = seeds.learner;
    let kind = cfg
        .learner(&spec.incr)
        .ok_or_else(|| Error::Config(format!("unknown learner `{}`", spec.incr)))?
        .kind;
    let scenario = build_run_scenario(cfg, spec, ds)?;
    let accuracy = run_incremental(kind, ds, &scenario, &hp)?;
    let m = compute_metrics(&accuracy, scenario.initial_fraction())?;
    let first = scenario.step(0);
    let n1 = ds
        .samples()
        .iter()
        .filter(|s| s.split == Split::Train && first.binary_search(&s.label).is_ok())
        .count();
    let record = RunRecord {
        run_id: spec.run_id(),
        data: spec.data.clone(),
        train: spec.train.clone(),
        incr: spec.incr.clone(),
        scenario_b: spec.scenario == ScenarioKind::Half,
        n_classes: stats.n_classes,
        n1,
        n_mean: stats.mean_train,
        small: stats.small,
        width: stats.width,
        acc1: m.acc1,
        avg_acc: m.avg_acc,
        forgetting: m.forgetting,
        acc_k: m.acc_k,
    };
    Ok(RunSuccess {
        record,
        accuracy,
        scenario,
    })
}

/// Builds the dataset and executes a single cell.
pub fn run_single(cfg: &GridConfig, spec: &RunSpec) -> RunOutcome {
    let result = build_dataset(cfg, &spec.data, &spec.train, spec.rep)
        .and_then(|(ds, stats)| execute_run(cfg, spec, &ds, &stats))
        .map_err(|e| e.to_string());
    RunOutcome {
        spec: spec.clone(),
        seeds: spec.seeds(cfg.base_seed),
        result,
    }
}

/// Runs the whole grid on a pool of `jobs` threads (all cores when `None`).
/// A failing run is recorded and the grid carries on.
pub fn run_grid(cfg: &GridConfig, jobs: Option<usize>) -> Result<GridResults> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    let runs = enumerate_runs(cfg);
    let outcomes = pool.install(|| {
        let mut keys: Vec<(String, String, usize)> =
            runs.iter().map(|r| (r.data.clone(), r.train.clone(), r.rep)).collect();
        keys.dedup();
        keys.sort();
        keys.dedup();
        let datasets: BTreeMap<_, _> = keys
            .into_par_iter()
            .map(|k| {
                let built = build_dataset(cfg, &k.0, &k.1, k.2).map_err(|e| e.to_string());
                (k, built)
            })
            .collect();
        runs.par_iter()
            .map(|spec| {
                let key = (spec.data.clone(), spec.train.clone(), spec.rep);
                let result = match &datasets[&key] {
                    Ok((ds, stats)) => execute_run(cfg, spec, ds, stats).map_err(|e| e.to_string()),
                    Err(e) => Err(format!("dataset: {e}")),
                };
                RunOutcome {
                    spec: spec.clone(),
                    seeds: spec.seeds(cfg.base_seed),
                    result,
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(GridResults {
        config_hash: cfg.hash(),
        version: VERSION.to_string(),
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_do_not_depend_on_other_levels() {
        let spec = RunSpec {
            data: "a".into(),
            train: "scratch".into(),
            incr: "ncm".into(),
            scenario: ScenarioKind::Equal,
            rep: 0,
        };
        let s = spec.seeds(5);
        assert_eq!(s.dataset, derive_seed(5, &["dataset", "a", "0"]));
        let other = RunSpec {
            train: "ft".into(),
            ..spec.clone()
        };
        assert_eq!(other.seeds(5).dataset, s.dataset);
        assert_eq!(other.seeds(5).scenario, s.scenario);
        assert_ne!(other.seeds(5).learner, s.learner);
    }

    #[test]
    fn derive_seed_separates_parts() {
        assert_ne!(derive_seed(0, &["ab", "c"]), derive_seed(0, &["a", "bc"]));
        assert_eq!(derive_seed(1, &["x"]), derive_seed(0, &["x"]).wrapping_add(1));
    }
}
