use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Value of one variable in one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value<'a> {
    Categorical(&'a str),
    Numeric(f64),
}

/// Anything that can be looked up by variable name for regression.
pub trait Observation {
    fn value(&self, variable: &str) -> Option<Value<'_>>;
}

/// One experiment: its factor levels and dataset descriptors, plus metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub data: String,
    pub train: String,
    pub incr: String,
    /// True when half of the classes are in the initial step.
    pub scenario_b: bool,
    pub n_classes: usize,
    /// Number of train images in the initial step.
    pub n1: usize,
    pub n_mean: f64,
    pub small: bool,
    pub width: f64,
    pub acc1: f64,
    pub avg_acc: f64,
    pub forgetting: f64,
    pub acc_k: f64,
}

impl RunRecord {
    pub const CATEGORICAL: [&'static str; 3] = ["train", "incr", "data"];
    pub const NUMERIC: [&'static str; 10] = [
        "B",
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
}

/// Canonical spelling of a variable name (`Train` → `train`, `Acc_K` → `accK`).
pub fn canonical_variable(name: &str) -> Option<&'static str> {
    let lower = name.to_ascii_lowercase().replace('_', "");
    Some(match lower.as_str() {
        "train" => "train",
        "incr" => "incr",
        "data" => "data",
        "b" | "scenariob" => "B",
        "n" => "N",
        "n1" => "N1",
        "nmean" => "n_mean",
        "small" => "small",
        "width" => "width",
        "acc1" => "acc1",
        "avgacc" => "avg_acc",
        "forgetting" | "f" => "forgetting",
        "acck" => "accK",
        _ => return None,
    })
}

impl Observation for RunRecord {
    fn value(&self, variable: &str) -> Option<Value<'_>> {
        let b = |v: bool| Value::Numeric(if v { 1.0 } else { 0.0 });
        Some(match canonical_variable(variable)? {
            "train" => Value::Categorical(&self.train),
            "incr" => Value::Categorical(&self.incr),
            "data" => Value::Categorical(&self.data),
            "B" => b(self.scenario_b),
            "N" => Value::Numeric(self.n_classes as f64),
            "N1" => Value::Numeric(self.n1 as f64),
            "n_mean" => Value::Numeric(self.n_mean),
            "small" => b(self.small),
            "width" => Value::Numeric(self.width),
            "acc1" => Value::Numeric(self.acc1),
            "avg_acc" => Value::Numeric(self.avg_acc),
            "forgetting" => Value::Numeric(self.forgetting),
            "accK" => Value::Numeric(self.acc_k),
            _ => return None,
        })
    }
}

/// Free-form observation, handy for synthetic regression problems.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub categorical: BTreeMap<String, String>,
    pub numeric: BTreeMap<String, f64>,
}

impl Row {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cat(mut self, name: &str, level: impl Into<String>) -> Self {
        self.categorical.insert(name.to_string(), level.into());
        self
    }

    pub fn num(mut self, name: &str, value: f64) -> Self {
        self.numeric.insert(name.to_string(), value);
        self
    }
}

impl Observation for Row {
    fn value(&self, variable: &str) -> Option<Value<'_>> {
        if let Some(c) = self.categorical.get(variable) {
            return Some(Value::Categorical(c));
        }
        self.numeric.get(variable).map(|&v| Value::Numeric(v))
    }
}
