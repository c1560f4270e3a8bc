//! Incremental-learning metrics computed from an accuracy matrix, and the
//! correlation analysis between them across runs.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::AccuracyMatrix;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet<T> {
    pub acc1: T,
    pub avg_acc: T,
    pub forgetting: T,
    pub acc_k: T,
}

pub const METRIC_NAMES: [&str; 4] = ["acc1", "avg_acc", "forgetting", "accK"];

impl<T: Scalar> MetricSet<T> {
    pub fn as_array(&self) -> [T; 4] {
        [self.acc1, self.avg_acc, self.forgetting, self.acc_k]
    }
}

/// Mean cumulative accuracy over steps 2..K; the initial model is excluded.
pub fn avg_incremental_accuracy<T: Scalar>(a: &AccuracyMatrix<T>) -> Result<T> {
    let k = a.num_steps();
    if k < 2 {
        return Err(Error::MetricUndefined(
            "average incremental accuracy needs at least 2 steps".into(),
        ));
    }
    let sum: T = a.cumulative_all()[1..].iter().copied().sum();
    Ok(sum / T::from_usize_lossy(k - 1))
}

/// Gap between the best accuracy ever reached on subset `i` and the final one.
pub fn subset_forgetting<T: Scalar>(a: &AccuracyMatrix<T>, i: usize) -> T {
    let last = a.num_steps() - 1;
    let best = (i..=last).map(|k| a.get(k, i)).fold(T::neg_infinity(), T::max);
    best - a.get(last, i)
}

/// Weights `(b, (1 − b)/(K − 1))` of the first and later subsets, exact.
pub fn forgetting_weights(b: Ratio<u64>, num_steps: usize) -> Result<(Ratio<u64>, Ratio<u64>)> {
    if num_steps < 2 {
        return Err(Error::MetricUndefined("forgetting needs at least 2 steps".into()));
    }
    if *b.numer() == 0 || b >= Ratio::from_integer(1) {
        return Err(Error::Domain(format!("b must lie in (0, 1), got {b}")));
    }
    let rest = (Ratio::from_integer(1) - b) / Ratio::from_integer(num_steps as u64 - 1);
    Ok((b, rest))
}

/// Class-fraction-weighted average forgetting over all subsets.
pub fn avg_forgetting<T: Scalar>(a: &AccuracyMatrix<T>, b: Ratio<u64>) -> Result<T> {
    let k = a.num_steps();
    let (w1, wr) = forgetting_weights(b, k)?;
    let to_t = |r: Ratio<u64>| T::from_u64(*r.numer()).unwrap() / T::from_u64(*r.denom()).unwrap();
    let rest: T = (1..k).map(|i| subset_forgetting(a, i)).sum();
    Ok(to_t(w1) * subset_forgetting(a, 0) + to_t(wr) * rest)
}

/// Accuracy of the first model on the first subset.
pub fn initial_accuracy<T: Scalar>(a: &AccuracyMatrix<T>) -> T {
    a.get(0, 0)
}

/// Accuracy of the last model on the whole test set.
pub fn final_accuracy<T: Scalar>(a: &AccuracyMatrix<T>) -> T {
    a.cumulative(a.num_steps() - 1)
}

pub fn compute_metrics<T: Scalar>(a: &AccuracyMatrix<T>, b: Ratio<u64>) -> Result<MetricSet<T>> {
    Ok(MetricSet {
        acc1: initial_accuracy(a),
        avg_acc: avg_incremental_accuracy(a)?,
        forgetting: avg_forgetting(a, b)?,
        acc_k: final_accuracy(a),
    })
}

/// Pearson correlations between the four metrics; `None` where a metric has
/// zero variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix<T> {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<T>>>,
}

pub fn metric_correlations<T: Scalar>(table: &[MetricSet<T>]) -> Result<CorrelationMatrix<T>> {
    if table.len() < 3 {
        return Err(Error::Invalid(format!(
            "correlations need at least 3 rows, got {}",
            table.len()
        )));
    }
    let columns: Vec<Vec<T>> = (0..4)
        .map(|j| table.iter().map(|m| m.as_array()[j]).collect())
        .collect();
    Ok(CorrelationMatrix {
        names: METRIC_NAMES.iter().map(|s| s.to_string()).collect(),
        values: correlation_matrix(&columns),
    })
}

/// Population Pearson correlation for every pair of columns.
pub fn correlation_matrix<T: Scalar>(columns: &[Vec<T>]) -> Vec<Vec<Option<T>>> {
    let centered: Vec<(Vec<T>, T)> = columns
        .iter()
        .map(|c| {
            let n = T::from_usize_lossy(c.len());
            let mean = c.iter().copied().sum::<T>() / n;
            let dev: Vec<T> = c.iter().map(|&x| x - mean).collect();
            let constant = c.iter().all(|&x| x == c[0]);
            let ss = if constant {
                T::zero()
            } else {
                dev.iter().map(|&d| d * d).sum::<T>()
            };
            (dev, ss)
        })
        .collect();
    let m = columns.len();
    let mut out = vec![vec![None; m]; m];
    for i in 0..m {
        for j in 0..=i {
            let (di, si) = &centered[i];
            let (dj, sj) = &centered[j];
            if *si == T::zero() || *sj == T::zero() {
                continue;
            }
            let r = if i == j {
                T::one()
            } else {
                let cov = di.iter().zip(dj).map(|(&a, &b)| a * b).sum::<T>();
                (cov / (si.sqrt() * sj.sqrt())).max(-T::one()).min(T::one())
            };
            out[i][j] = Some(r);
            out[j][i] = Some(r);
        }
    }
    out
}
