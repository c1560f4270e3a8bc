//! Grid configuration document (TOML).

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::learners::{Hyperparams, LearnerKind};
use crate::scenario::ScenarioKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default = "ten")]
    pub incremental_steps: usize,
    pub scenarios: Vec<ScenarioKind>,
    pub datasets: Vec<DatasetConfig>,
    pub strategies: Vec<StrategyConfig>,
    pub learners: Vec<LearnerConfig>,
    /// Per-cell hyperparameter patches, applied in order after the learner's own.
    #[serde(default)]
    pub overrides: Vec<Override>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn one() -> usize {
    1
}

fn ten() -> usize {
    10
}

/// A dataset is either synthesized (one feature set per strategy, with the
/// strategy's separation times `separation_scale`) or read from embedding
/// files, one per strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    #[serde(default)]
    pub n_classes: usize,
    #[serde(default)]
    pub dim: usize,
    #[serde(default)]
    pub n_train: usize,
    #[serde(default)]
    pub n_test: usize,
    #[serde(default = "unit")]
    pub separation_scale: f64,
    #[serde(default)]
    pub axis_scales: Option<Vec<f64>>,
    /// Strategy name to embedding CSV; relative paths resolve against the
    /// config file's directory.
    #[serde(default)]
    pub embeddings: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub small: bool,
    #[serde(default)]
    pub width: f64,
}

fn unit() -> f64 {
    1.0
}

impl DatasetConfig {
    pub fn is_synthetic(&self) -> bool {
        self.embeddings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub name: String,
    /// Distance between class means in within-class standard deviations.
    #[serde(default)]
    pub separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    /// Level name in the results; defaults to the kind.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub hyperparams: toml::Table,
}

impl LearnerConfig {
    pub fn level(&self) -> &str {
        self.name.as_deref().unwrap_or(self.kind.as_str())
    }
}

/// Hyperparameter patch for the runs matching every given selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Override {
    #[serde(default)]
    pub data: Option<String>,
    #[serde(default)]
    pub train: Option<String>,
    #[serde(default)]
    pub incr: Option<String>,
    #[serde(default)]
    pub scenario: Option<ScenarioKind>,
    pub hyperparams: toml::Table,
}

impl Override {
    pub fn matches(&self, data: &str, train: &str, incr: &str, scenario: ScenarioKind) -> bool {
        self.data.as_deref().is_none_or(|d| d == data)
            && self.train.as_deref().is_none_or(|t| t == train)
            && self.incr.as_deref().is_none_or(|i| i == incr)
            && self.scenario.is_none_or(|s| s == scenario)
    }
}

/// What `analyze` computes. Formulas use results-column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub alpha: f64,
    pub screening_responses: Vec<String>,
    pub screening_candidates: Vec<String>,
    /// Candidate formulas for AIC selection, grouped by response.
    pub model_ladder: Vec<String>,
    pub anova_models: Vec<String>,
    /// Extra regressions whose coefficient tables are reported.
    pub regressions: Vec<String>,
    pub pairwise_model: String,
    pub pairwise_factor: String,
    /// Variables whose levels each get their own pairwise matrix.
    pub pairwise_splits: Vec<String>,
    pub reference_levels: BTreeMap<String, String>,
    /// Collinearity warning threshold, relative to the Gram matrix norm.
    pub gram_threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Self {
            alpha: 0.05,
            screening_responses: s(&["avg_acc", "forgetting"]),
            screening_candidates: s(&[
                "acc1", "train", "incr", "data", "B", "N", "N1", "n_mean", "small", "width",
            ]),
            model_ladder: s(&[
                "avg_acc ~ incr",
                "avg_acc ~ incr + train",
                "avg_acc ~ incr + train + data",
                "avg_acc ~ incr + train + data + B",
                "avg_acc ~ incr + train + N + B",
                "avg_acc ~ acc1 + incr + train + data",
                "forgetting ~ incr",
                "forgetting ~ incr + train",
                "forgetting ~ incr + train + data",
                "forgetting ~ incr + train + data + B",
            ]),
            anova_models: s(&[
                "avg_acc ~ incr + train + data",
                "avg_acc ~ acc1 + incr + train + data",
                "forgetting ~ incr + train + data",
            ]),
            regressions: s(&["forgetting ~ acc1 + incr + train + data"]),
            pairwise_model: "avg_acc ~ incr + train + data".into(),
            pairwise_factor: "train".into(),
            pairwise_splits: s(&["data", "incr", "B"]),
            reference_levels: BTreeMap::new(),
            gram_threshold: 1e-8,
        }
    }
}

impl GridConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: GridConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative embedding paths are made relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(dir) = path.parent() {
            for ds in &mut cfg.datasets {
                for p in ds.embeddings.values_mut() {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// SHA-256 over the re-serialized document, so formatting and comments
    /// of the source file do not matter.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.repetitions == 0 {
            return err("repetitions must be at least 1".into());
        }
        if self.incremental_steps == 0 {
            return err("incremental_steps must be at least 1".into());
        }
        for (what, names) in [
            (
                "dataset",
                self.datasets.iter().map(|d| d.name.as_str()).collect::<Vec<_>>(),
            ),
            ("strategy", self.strategies.iter().map(|s| s.name.as_str()).collect()),
            ("learner", self.learners.iter().map(LearnerConfig::level).collect()),
        ] {
            if names.is_empty() {
                return err(format!("at least one {what} is required"));
            }
            let mut seen = BTreeSet::new();
            for n in names {
                if n.is_empty() || n.contains(|c: char| c.is_whitespace() || c == ',' || c == '/') {
                    return err(format!(
                        "{what} name `{n}` must be nonempty without spaces, commas or slashes"
                    ));
                }
                if !seen.insert(n) {
                    return err(format!("{what} `{n}` declared more than once"));
                }
            }
        }
        if self.scenarios.is_empty() {
            return err("at least one scenario is required".into());
        }
        let unique: BTreeSet<_> = self.scenarios.iter().collect();
        if unique.len() != self.scenarios.len() {
            return err("scenario declared more than once".into());
        }
        for s in &self.strategies {
            if !(s.separation >= 0.0 && s.separation.is_finite()) {
                return err(format!(
                    "strategy `{}`: separation must be finite and nonnegative",
                    s.name
                ));
            }
        }
        for d in &self.datasets {
            if d.is_synthetic() {
                if d.n_classes < 2 || d.dim == 0 || d.n_train == 0 || d.n_test == 0 {
                    return err(format!(
                        "dataset `{}`: synthetic datasets need n_classes >= 2 and positive dim, n_train, n_test",
                        d.name
                    ));
                }
                if !(d.separation_scale >= 0.0 && d.separation_scale.is_finite()) {
                    return err(format!(
                        "dataset `{}`: separation_scale must be finite and nonnegative",
                        d.name
                    ));
                }
            } else {
                for s in &self.strategies {
                    if !d.embeddings.contains_key(&s.name) {
                        return err(format!(
                            "dataset `{}` has no embeddings for strategy `{}`",
                            d.name, s.name
                        ));
                    }
                }
                for k in d.embeddings.keys() {
                    if !self.strategies.iter().any(|s| &s.name == k) {
                        return err(format!("dataset `{}` binds undeclared strategy `{k}`", d.name));
                    }
                }
            }
        }
        for l in &self.learners {
            self.hyperparams_from(l, &[])?;
        }
        for (i, o) in self.overrides.iter().enumerate() {
            let known = |v: &Option<String>, names: Vec<&str>, what: &str| -> Result<()> {
                match v {
                    Some(x) if !names.contains(&x.as_str()) => {
                        Err(Error::Config(format!("override {}: unknown {what} `{x}`", i + 1)))
                    }
                    _ => Ok(()),
                }
            };
            known(
                &o.data,
                self.datasets.iter().map(|d| d.name.as_str()).collect(),
                "dataset",
            )?;
            known(
                &o.train,
                self.strategies.iter().map(|s| s.name.as_str()).collect(),
                "strategy",
            )?;
            known(
                &o.incr,
                self.learners.iter().map(LearnerConfig::level).collect(),
                "learner",
            )?;
            if let Some(s) = o.scenario {
                if !self.scenarios.contains(&s) {
                    return err(format!("override {}: scenario `{s}` is not in the grid", i + 1));
                }
            }
            for l in &self.learners {
                self.hyperparams_from(l, &[&o.hyperparams])?;
            }
        }
        let a = &self.analysis;
        if !(a.alpha > 0.0 && a.alpha < 1.0) {
            return err(format!("analysis.alpha must lie in (0, 1), got {}", a.alpha));
        }
        Ok(())
    }

    pub fn dataset(&self, name: &str) -> Option<&DatasetConfig> {
        self.datasets.iter().find(|d| d.name == name)
    }

    pub fn strategy(&self, name: &str) -> Option<&StrategyConfig> {
        self.strategies.iter().find(|s| s.name == name)
    }

    pub fn learner(&self, level: &str) -> Option<&LearnerConfig> {
        self.learners.iter().find(|l| l.level() == level)
    }

    /// Hyperparameters of one grid cell: learner table, then matching
    /// overrides in declaration order. Value ranges are not checked here;
    /// that happens when the learner is built, so a bad value fails only the
    /// affected runs.
    pub fn hyperparams_for(&self, data: &str, train: &str, incr: &str, scenario: ScenarioKind) -> Result<Hyperparams> {
        let l = self
            .learner(incr)
            .ok_or_else(|| Error::Config(format!("unknown learner `{incr}`")))?;
        let patches: Vec<&toml::Table> = self
            .overrides
            .iter()
            .filter(|o| o.matches(data, train, incr, scenario))
            .map(|o| &o.hyperparams)
            .collect();
        self.hyperparams_from(l, &patches)
    }

    fn hyperparams_from(&self, l: &LearnerConfig, patches: &[&toml::Table]) -> Result<Hyperparams> {
        let mut table = l.hyperparams.clone();
        for p in patches {
            merge(&mut table, p);
        }
        toml::Value::Table(table)
            .try_into::<Hyperparams>()
            .map_err(|e| Error::Config(format!("learner `{}` hyperparameters: {e}", l.level())))
    }
}

fn merge(base: &mut toml::Table, patch: &toml::Table) {
    for (k, v) in patch {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(p)) => merge(b, p),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"
        base_seed = 7
        repetitions = 1
        incremental_steps = 2
        scenarios = ["equal"]

        [[datasets]]
        name = "toy"
        n_classes = 4
        dim = 3
        n_train = 2
        n_test = 2

        [[strategies]]
        name = "scratch"
        separation = 2.0

        [[learners]]
        kind = "bsil"
        hyperparams = { bsil = { lambda = 0.0, epochs = 5 } }

        [[learners]]
        kind = "ncm"

        [[overrides]]
        incr = "bsil"
        hyperparams = { bsil = { learning_rate = -1.0 } }
    "#;

    #[test]
    fn overrides_merge_into_learner_table() {
        let cfg = GridConfig::from_toml_str(TOY).unwrap();
        let hp = cfg
            .hyperparams_for("toy", "scratch", "bsil", ScenarioKind::Equal)
            .unwrap();
        assert_eq!(hp.bsil.lambda, 0.0);
        assert_eq!(hp.bsil.epochs, 5);
        assert_eq!(hp.bsil.learning_rate, -1.0);
        let hp = cfg
            .hyperparams_for("toy", "scratch", "ncm", ScenarioKind::Equal)
            .unwrap();
        assert_eq!(hp, Hyperparams::default());
    }

    #[test]
    fn duplicate_levels_are_rejected() {
        let text = TOY.replace("kind = \"ncm\"", "kind = \"ncm\"\n name = \"bsil\"");
        let e = GridConfig::from_toml_str(&text).unwrap_err();
        assert!(e.to_string().contains("declared more than once"), "{e}");
    }

    #[test]
    fn unknown_hyperparameter_key_is_a_config_error() {
        let text = TOY.replace("lambda = 0.0", "lamda = 0.0");
        assert!(GridConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn zero_repetitions_rejected() {
        let text = TOY.replace("repetitions = 1", "repetitions = 0");
        assert!(GridConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = GridConfig::from_toml_str(TOY).unwrap();
        let b = GridConfig::from_toml_str(&TOY.replace("base_seed = 7", "base_seed    =   7 # same")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = GridConfig::from_toml_str(&TOY.replace("base_seed = 7", "base_seed = 8")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn round_trips_through_toml() {
        let a = GridConfig::from_toml_str(TOY).unwrap();
        let b = GridConfig::from_toml_str(&a.to_toml_string()).unwrap();
        assert_eq!(a, b);
    }
}
