use rayon::prelude::*;

use super::{AccuracyMatrix, Hyperparams, Learner, LearnerKind, TrainBatch};
use crate::datagen::FeatureDataset;
use crate::error::Result;
use crate::scenario::{partition_dataset, ClassId, Scenario};
use crate::Scalar;

/// Runs one full incremental process and records every step's accuracies.
///
/// After step `k` the model is evaluated on each earlier test subset and on
/// their union. Learner errors are wrapped with the 1-based step index.
pub fn run_incremental<T: Scalar>(
    kind: LearnerKind,
    ds: &FeatureDataset<T>,
    sc: &Scenario,
    hp: &Hyperparams,
) -> Result<AccuracyMatrix<T>> {
    let views = partition_dataset(ds, sc)?;
    let samples = ds.samples();
    let mut learner = Learner::new(kind, hp)?;
    let mut rows = Vec::with_capacity(views.len());
    let mut cumulative = Vec::with_capacity(views.len());

    for (k, view) in views.iter().enumerate() {
        let batch = TrainBatch::new(
            view.train.iter().map(|&i| samples[i].features.as_slice()).collect(),
            view.train.iter().map(|&i| samples[i].label).collect(),
        )?;
        learner.learn_step(&batch).map_err(|e| e.at_step(k + 1))?;
        let predictor = learner.predictor().map_err(|e| e.at_step(k + 1))?;

        let correct: Vec<bool> = view
            .cumulative_test
            .par_iter()
            .map(|&i| predictor.predict(&samples[i].features) == samples[i].label)
            .collect();
        let hits = correct.iter().filter(|&&c| c).count();
        cumulative.push(ratio::<T>(hits, correct.len()));

        let is_correct = |idx: usize| -> bool {
            let pos = view
                .cumulative_test
                .binary_search(&idx)
                .expect("subset sample is in the cumulative test set");
            correct[pos]
        };
        let row = views[..=k]
            .iter()
            .map(|v| {
                let hits = v.test.iter().filter(|&&i| is_correct(i)).count();
                ratio::<T>(hits, v.test.len())
            })
            .collect();
        rows.push(row);
    }
    AccuracyMatrix::new(rows, cumulative)
}

fn ratio<T: Scalar>(hits: usize, total: usize) -> T {
    T::from_usize_lossy(hits) / T::from_usize_lossy(total)
}

/// Brute-force accuracy of a learner's current predictor on arbitrary samples.
pub fn accuracy_on<T: Scalar>(learner: &Learner<T>, samples: &[(&[T], ClassId)]) -> Result<T> {
    let p = learner.predictor()?;
    let hits = samples.iter().filter(|(x, y)| p.predict(x) == *y).count();
    Ok(ratio(hits, samples.len()))
}
