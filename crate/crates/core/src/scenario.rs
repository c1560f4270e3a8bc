//! Splitting a class set into non-overlapping incremental steps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{FeatureDataset, Split};
use crate::error::{Error, Result};

pub type ClassId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// Classes spread evenly over all steps.
    Equal,
    /// Half of the classes in the initial step, the rest spread evenly.
    Half,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Equal => "equal",
            ScenarioKind::Half => "half",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal" => Ok(ScenarioKind::Equal),
            "half" => Ok(ScenarioKind::Half),
            other => Err(Error::Invalid(format!("unknown scenario kind `{other}`"))),
        }
    }
}

/// Assignment of classes to `K` disjoint steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    steps: Vec<Vec<ClassId>>,
    initial_fraction: Ratio<u64>,
}

impl Scenario {
    /// Validates disjointness and derives `b` from the step sizes.
    pub fn from_steps(steps: Vec<Vec<ClassId>>) -> Result<Self> {
        if steps.is_empty() || steps.iter().any(Vec::is_empty) {
            return Err(Error::Invalid("scenario steps must be nonempty".into()));
        }
        let mut seen = BTreeSet::new();
        for step in &steps {
            for &c in step {
                if !seen.insert(c) {
                    return Err(Error::Invalid(format!("class {c} appears in more than one step")));
                }
            }
        }
        let initial_fraction = Ratio::new(steps[0].len() as u64, seen.len() as u64);
        Ok(Self {
            steps,
            initial_fraction,
        })
    }

    /// Number of steps `K`.
    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[Vec<ClassId>] {
        &self.steps
    }

    pub fn step(&self, k: usize) -> &[ClassId] {
        &self.steps[k]
    }

    /// Fraction `b` of classes present in the first step, exact.
    pub fn initial_fraction(&self) -> Ratio<u64> {
        self.initial_fraction
    }

    pub fn num_classes(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }

    pub fn all_classes(&self) -> BTreeSet<ClassId> {
        self.steps.iter().flatten().copied().collect()
    }

    /// Text form: `K`, `b` as a fraction, then one line of class ids per step.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "K {}\nb {}/{}\n",
            self.num_steps(),
            self.initial_fraction.numer(),
            self.initial_fraction.denom()
        );
        for step in &self.steps {
            let ids: Vec<String> = step.iter().map(ToString::to_string).collect();
            out.push_str(&ids.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, k_line) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty scenario document".into(),
        })?;
        let k: usize = k_line
            .strip_prefix("K ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or(Error::Parse {
                line: 1,
                message: "expected `K <steps>`".into(),
            })?;
        let (_, b_line) = lines.next().ok_or(Error::Parse {
            line: 2,
            message: "missing `b` line".into(),
        })?;
        let b = b_line
            .strip_prefix("b ")
            .and_then(|s| s.trim().split_once('/'))
            .and_then(|(n, d)| Some(Ratio::new(n.parse::<u64>().ok()?, d.parse::<u64>().ok()?)))
            .ok_or(Error::Parse {
                line: 2,
                message: "expected `b <num>/<den>`".into(),
            })?;
        let mut steps = Vec::with_capacity(k);
        for (i, line) in lines {
            let step = line
                .split_whitespace()
                .map(|t| t.parse::<ClassId>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            steps.push(step);
        }
        if steps.len() != k {
            return Err(Error::Parse {
                line: 1,
                message: format!("K = {k} but {} step lines", steps.len()),
            });
        }
        let sc = Self::from_steps(steps)?;
        if sc.initial_fraction != b {
            return Err(Error::Parse {
                line: 2,
                message: format!("b = {b} does not match step sizes ({})", sc.initial_fraction),
            });
        }
        Ok(sc)
    }
}

/// Shuffles `class_ids` with `seed` and slices them into steps.
///
/// `Equal` yields `n_incr_steps` equal steps; `Half` yields one initial step
/// holding half the classes followed by `n_incr_steps` equal steps.
pub fn build_scenario(class_ids: &[ClassId], kind: ScenarioKind, n_incr_steps: usize, seed: u64) -> Result<Scenario> {
    let n = class_ids.len();
    if n == 0 {
        return Err(Error::EmptyClassList);
    }
    if n_incr_steps == 0 {
        return Err(Error::Invalid("number of incremental steps must be positive".into()));
    }
    let distinct: BTreeSet<_> = class_ids.iter().collect();
    if distinct.len() != n {
        return Err(Error::Invalid("class ids must be distinct".into()));
    }
    let sizes: Vec<usize> = match kind {
        ScenarioKind::Equal => {
            if n % n_incr_steps != 0 {
                return Err(Error::Divisibility(format!(
                    "{n} classes are not divisible into {n_incr_steps} equal steps"
                )));
            }
            vec![n / n_incr_steps; n_incr_steps]
        }
        ScenarioKind::Half => {
            if n % 2 != 0 {
                return Err(Error::Divisibility(format!(
                    "{n} classes cannot be halved for the initial step"
                )));
            }
            let rest = n / 2;
            if rest % n_incr_steps != 0 {
                return Err(Error::Divisibility(format!(
                    "{rest} remaining classes are not divisible into {n_incr_steps} equal steps"
                )));
            }
            std::iter::once(rest)
                .chain(std::iter::repeat_n(rest / n_incr_steps, n_incr_steps))
                .collect()
        }
    };

    let mut order = class_ids.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut steps = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for size in sizes {
        let mut step = order[start..start + size].to_vec();
        step.sort_unstable();
        steps.push(step);
        start += size;
    }
    Scenario::from_steps(steps)
}

/// Sample indices visible at one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepView {
    pub step: usize,
    pub classes: Vec<ClassId>,
    /// Train samples of this step's classes only.
    pub train: Vec<usize>,
    /// Test samples of this step's classes (the subset `D_k`).
    pub test: Vec<usize>,
    /// Test samples of every class seen up to and including this step.
    pub cumulative_test: Vec<usize>,
}

/// Cuts a dataset into per-step views; indices refer to `ds.samples()`.
pub fn partition_dataset<T>(ds: &FeatureDataset<T>, sc: &Scenario) -> Result<Vec<StepView>> {
    let mut step_of: BTreeMap<ClassId, usize> = BTreeMap::new();
    for (k, step) in sc.steps().iter().enumerate() {
        for &c in step {
            step_of.insert(c, k);
        }
    }
    let kk = sc.num_steps();
    let mut train = vec![Vec::new(); kk];
    let mut test = vec![Vec::new(); kk];
    let mut has_train = BTreeSet::new();
    let mut has_test = BTreeSet::new();
    for (idx, s) in ds.samples().iter().enumerate() {
        if let Some(&k) = step_of.get(&s.label) {
            match s.split {
                Split::Train => {
                    train[k].push(idx);
                    has_train.insert(s.label);
                }
                Split::Test => {
                    test[k].push(idx);
                    has_test.insert(s.label);
                }
            }
        }
    }
    let missing: Vec<ClassId> = step_of
        .keys()
        .filter(|c| !has_train.contains(c) || !has_test.contains(c))
        .copied()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingClasses(missing));
    }

    let mut views = Vec::with_capacity(kk);
    let mut cumulative: Vec<usize> = Vec::new();
    for (k, (tr, te)) in train.into_iter().zip(test).enumerate() {
        cumulative.extend_from_slice(&te);
        cumulative.sort_unstable();
        views.push(StepView {
            step: k,
            classes: sc.step(k).to_vec(),
            train: tr,
            test: te,
            cumulative_test: cumulative.clone(),
        });
    }
    Ok(views)
}
