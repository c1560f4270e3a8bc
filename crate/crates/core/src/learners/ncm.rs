use std::collections::BTreeMap;

use super::{check_dim, check_new_classes, group_by_class, mean_of, Predictor, TrainBatch};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scenario::ClassId;
use crate::Scalar;

/// Nearest class mean (1-NN over class centroids).
#[derive(Debug, Clone, Default)]
pub struct Ncm<T> {
    means: BTreeMap<ClassId, Vec<T>>,
}

impl<T: Scalar> Ncm<T> {
    pub fn new() -> Self {
        Self { means: BTreeMap::new() }
    }

    pub fn step(&mut self, batch: &TrainBatch<'_, T>) -> Result<()> {
        check_dim(self.means.values().next().map(Vec::len), batch.dim())?;
        check_new_classes(&self.known_classes(), batch)?;
        for (c, rows) in group_by_class(batch) {
            self.means.insert(c, mean_of(&rows));
        }
        Ok(())
    }

    pub fn known_classes(&self) -> Vec<ClassId> {
        self.means.keys().copied().collect()
    }

    pub fn class_mean(&self, c: ClassId) -> Option<&[T]> {
        self.means.get(&c).map(Vec::as_slice)
    }

    pub fn predictor(&self) -> Result<Predictor<T>> {
        if self.means.is_empty() {
            return Err(Error::NotFitted);
        }
        let rows: Vec<&[T]> = self.means.values().map(Vec::as_slice).collect();
        Ok(Predictor::NearestMean {
            classes: self.known_classes(),
            means: Matrix::from_rows(&rows),
        })
    }
}
