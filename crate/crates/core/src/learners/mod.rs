//! Exemplar-free incremental learners over fixed feature vectors.
//!
//! Every learner sees one step's training batch at a time; nothing in the
//! learner interface gives access to earlier batches.

mod accuracy;
mod bsil;
mod dslda;
mod fetril;
mod ncm;
mod predictor;
mod runner;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use accuracy::AccuracyMatrix;
pub use bsil::{Bsil, BsilLoss, BsilParams};
pub use dslda::{Dslda, DsldaParams};
pub use fetril::{pseudo_features, source_class, Fetril, FetrilParams};
pub use ncm::Ncm;
pub use predictor::Predictor;
pub use runner::{accuracy_on, run_incremental};

use crate::error::{Error, Result};
use crate::scenario::ClassId;
use crate::Scalar;

/// Training data of a single step.
#[derive(Debug, Clone)]
pub struct TrainBatch<'a, T> {
    pub features: Vec<&'a [T]>,
    pub labels: Vec<ClassId>,
}

impl<'a, T> TrainBatch<'a, T> {
    pub fn new(features: Vec<&'a [T]>, labels: Vec<ClassId>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::Invalid("features and labels differ in length".into()));
        }
        if features.is_empty() {
            return Err(Error::Invalid("empty training batch".into()));
        }
        let dim = features[0].len();
        if features.iter().any(|f| f.len() != dim) {
            return Err(Error::Invalid("ragged feature vectors in batch".into()));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Dslda,
    Fetril,
    Bsil,
    Ncm,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [
        LearnerKind::Dslda,
        LearnerKind::Fetril,
        LearnerKind::Bsil,
        LearnerKind::Ncm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Dslda => "dslda",
            LearnerKind::Fetril => "fetril",
            LearnerKind::Bsil => "bsil",
            LearnerKind::Ncm => "ncm",
        }
    }

    /// Learners that only update a classifier on top of fixed features.
    pub fn is_frozen_representation(self) -> bool {
        !matches!(self, LearnerKind::Bsil)
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown learner `{s}`")))
    }
}

/// Hyperparameters for all learner kinds; only the relevant block is read.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub dslda: DsldaParams,
    pub fetril: FetrilParams,
    pub bsil: BsilParams,
    pub seed: u64,
}

/// Learner state, tagged by algorithm.
#[derive(Debug, Clone)]
pub enum Learner<T> {
    Dslda(Dslda<T>),
    Fetril(Fetril<T>),
    Bsil(Bsil<T>),
    Ncm(Ncm<T>),
}

impl<T: Scalar> Learner<T> {
    pub fn new(kind: LearnerKind, hp: &Hyperparams) -> Result<Self> {
        Ok(match kind {
            LearnerKind::Dslda => Learner::Dslda(Dslda::new(hp.dslda.clone())?),
            LearnerKind::Fetril => Learner::Fetril(Fetril::new(hp.fetril.clone())?),
            LearnerKind::Bsil => Learner::Bsil(Bsil::new(hp.bsil.clone(), hp.seed)?),
            LearnerKind::Ncm => Learner::Ncm(Ncm::new()),
        })
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            Learner::Dslda(_) => LearnerKind::Dslda,
            Learner::Fetril(_) => LearnerKind::Fetril,
            Learner::Bsil(_) => LearnerKind::Bsil,
            Learner::Ncm(_) => LearnerKind::Ncm,
        }
    }

    pub fn learn_step(&mut self, batch: &TrainBatch<'_, T>) -> Result<()> {
        match self {
            Learner::Dslda(l) => l.step(batch),
            Learner::Fetril(l) => l.step(batch),
            Learner::Bsil(l) => l.step(batch),
            Learner::Ncm(l) => l.step(batch),
        }
    }

    pub fn predictor(&self) -> Result<Predictor<T>> {
        match self {
            Learner::Dslda(l) => l.predictor(),
            Learner::Fetril(l) => l.predictor(),
            Learner::Bsil(l) => l.predictor(),
            Learner::Ncm(l) => l.predictor(),
        }
    }

    pub fn known_classes(&self) -> Vec<ClassId> {
        match self {
            Learner::Dslda(l) => l.known_classes(),
            Learner::Fetril(l) => l.known_classes(),
            Learner::Bsil(l) => l.known_classes(),
            Learner::Ncm(l) => l.known_classes(),
        }
    }
}

/// Groups batch rows by class, classes ascending.
pub(crate) fn group_by_class<'a, T>(batch: &TrainBatch<'a, T>) -> std::collections::BTreeMap<ClassId, Vec<&'a [T]>> {
    let mut groups = std::collections::BTreeMap::new();
    for (f, &y) in batch.features.iter().zip(&batch.labels) {
        groups.entry(y).or_insert_with(Vec::new).push(*f);
    }
    groups
}

pub(crate) fn mean_of<T: Scalar>(rows: &[&[T]]) -> Vec<T> {
    let dim = rows[0].len();
    let mut m = vec![T::zero(); dim];
    for r in rows {
        m.iter_mut().zip(r.iter()).for_each(|(a, &b)| *a += b);
    }
    let n = T::from_usize_lossy(rows.len());
    m.iter_mut().for_each(|a| *a /= n);
    m
}

pub(crate) fn check_dim(expected: Option<usize>, batch_dim: usize) -> Result<()> {
    match expected {
        Some(d) if d != batch_dim => Err(Error::Invalid(format!(
            "batch has dimension {batch_dim}, learner was trained on {d}"
        ))),
        _ => Ok(()),
    }
}

pub(crate) fn check_new_classes(known: &[ClassId], batch: &TrainBatch<'_, impl Sized>) -> Result<()> {
    let repeated: Vec<ClassId> = {
        let mut r: Vec<ClassId> = batch
            .labels
            .iter()
            .filter(|c| known.binary_search(c).is_ok())
            .copied()
            .collect();
        r.sort_unstable();
        r.dedup();
        r
    };
    if repeated.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "classes {repeated:?} were already learned in an earlier step"
        )))
    }
}
