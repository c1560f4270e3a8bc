//! Streaming linear discriminant analysis with a shared, shrunk covariance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_dim, check_new_classes, Predictor, TrainBatch};
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::scenario::ClassId;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DsldaParams {
    /// Shrinkage toward the identity, in `[0, 1]`.
    pub shrinkage: f64,
}

impl Default for DsldaParams {
    fn default() -> Self {
        Self { shrinkage: 1e-4 }
    }
}

#[derive(Debug, Clone)]
pub struct Dslda<T> {
    shrinkage: T,
    means: BTreeMap<ClassId, Vec<T>>,
    counts: BTreeMap<ClassId, usize>,
    // Pooled within-class scatter, unnormalized.
    scatter: Option<Matrix<T>>,
    total: usize,
}

impl<T: Scalar> Dslda<T> {
    pub fn new(params: DsldaParams) -> Result<Self> {
        if !(0.0..=1.0).contains(&params.shrinkage) {
            return Err(Error::Invalid(format!(
                "DSLDA shrinkage must lie in [0, 1], got {}",
                params.shrinkage
            )));
        }
        Ok(Self {
            shrinkage: T::lit(params.shrinkage),
            means: BTreeMap::new(),
            counts: BTreeMap::new(),
            scatter: None,
            total: 0,
        })
    }

    /// Welford update of the class mean and the pooled within-class scatter.
    pub fn update(&mut self, x: &[T], label: ClassId) -> Result<()> {
        check_dim(self.scatter.as_ref().map(Matrix::nrows), x.len())?;
        let d = x.len();
        let scatter = self.scatter.get_or_insert_with(|| Matrix::zeros(d, d));
        let n = self.counts.entry(label).or_insert(0);
        let mean = self.means.entry(label).or_insert_with(|| vec![T::zero(); d]);
        let delta: Vec<T> = x.iter().zip(mean.iter()).map(|(&a, &m)| a - m).collect();
        let nf = T::from_usize_lossy(*n);
        let w = nf / (nf + T::one());
        // Upper triangle, mirrored, so the scatter stays exactly symmetric.
        for i in 0..d {
            let wi = w * delta[i];
            if wi == T::zero() {
                continue;
            }
            for j in i..d {
                let v = wi * delta[j];
                scatter[(i, j)] += v;
                if j != i {
                    scatter[(j, i)] += v;
                }
            }
        }
        let inv = T::one() / (nf + T::one());
        mean.iter_mut().zip(&delta).for_each(|(m, &dl)| *m += dl * inv);
        *n += 1;
        self.total += 1;
        Ok(())
    }

    pub fn step(&mut self, batch: &TrainBatch<'_, T>) -> Result<()> {
        check_new_classes(&self.known_classes(), batch)?;
        for (x, &y) in batch.features.iter().zip(&batch.labels) {
            self.update(x, y)?;
        }
        Ok(())
    }

    pub fn known_classes(&self) -> Vec<ClassId> {
        self.means.keys().copied().collect()
    }

    pub fn class_mean(&self, c: ClassId) -> Option<&[T]> {
        self.means.get(&c).map(Vec::as_slice)
    }

    pub fn class_count(&self, c: ClassId) -> usize {
        self.counts.get(&c).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Shared covariance estimate: pooled within-class scatter over the total count.
    pub fn covariance(&self) -> Option<Matrix<T>> {
        let s = self.scatter.as_ref()?;
        let n = T::from_usize_lossy(self.total);
        Some(s.map(|v| v / n))
    }

    /// `(1 − ε) Σ + ε I`.
    pub fn shrunk_covariance(&self) -> Option<Matrix<T>> {
        let mut c = self.covariance()?;
        let e = self.shrinkage;
        for i in 0..c.nrows() {
            for j in 0..c.ncols() {
                c[(i, j)] = (T::one() - e) * c[(i, j)] + if i == j { e } else { T::zero() };
            }
        }
        Some(c)
    }

    pub fn predictor(&self) -> Result<Predictor<T>> {
        let cov = self.shrunk_covariance().ok_or(Error::NotFitted)?;
        let chol = Cholesky::new(&cov).map_err(|e| {
            if self.shrinkage == T::zero() {
                Error::Singular(format!("{e}; use a shrinkage ε > 0"))
            } else {
                e
            }
        })?;
        let classes = self.known_classes();
        let d = cov.nrows();
        let mut weights = Matrix::zeros(classes.len(), d);
        let mut bias = Vec::with_capacity(classes.len());
        for (r, c) in classes.iter().enumerate() {
            let mu = &self.means[c];
            let w = chol.solve(mu);
            bias.push(-T::lit(0.5) * dot(mu, &w));
            weights.row_mut(r).copy_from_slice(&w);
        }
        Ok(Predictor::Linear { classes, weights, bias })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::Ncm;

    fn batch<'a>(rows: &'a [Vec<f64>], labels: &[ClassId]) -> TrainBatch<'a, f64> {
        TrainBatch::new(rows.iter().map(Vec::as_slice).collect(), labels.to_vec()).unwrap()
    }

    #[test]
    fn predict_before_update_fails() {
        let l = Dslda::<f64>::new(DsldaParams::default()).unwrap();
        assert!(matches!(l.predictor(), Err(Error::NotFitted)));
    }

    #[test]
    fn zero_shrinkage_singular_error_mentions_shrinkage() {
        let rows = vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![-1.0, 0.0], vec![-3.0, 0.0]];
        let mut l = Dslda::new(DsldaParams { shrinkage: 0.0 }).unwrap();
        l.step(&batch(&rows, &[0, 0, 1, 1])).unwrap();
        let err = l.predictor().unwrap_err().to_string();
        assert!(err.contains("shrinkage"), "{err}");
    }

    #[test]
    fn full_shrinkage_is_nearest_mean() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.37).sin() * 3.0, (t * 0.91).cos() * 2.0 + (i % 3) as f64]
            })
            .collect();
        let labels: Vec<ClassId> = (0..30).map(|i| (i % 3) as ClassId).collect();
        let b = batch(&rows, &labels);
        let mut lda = Dslda::new(DsldaParams { shrinkage: 1.0 }).unwrap();
        lda.step(&b).unwrap();
        let mut ncm = Ncm::new();
        ncm.step(&b).unwrap();
        let (p1, p2) = (lda.predictor().unwrap(), ncm.predictor().unwrap());
        for i in 0..200 {
            let x = [(i as f64 * 0.13).sin() * 4.0, (i as f64 * 0.29).cos() * 4.0];
            // Scores differ only by −½‖x‖² which is shared by all classes.
            let s1 = p1.scores(&x);
            let s2 = p2.scores(&x);
            let shift = -0.5 * (x[0] * x[0] + x[1] * x[1]);
            for (a, b) in s1.iter().zip(&s2) {
                assert!((a - (0.5 * b - shift)).abs() < 1e-10);
            }
            assert_eq!(p1.predict(&x), p2.predict(&x));
        }
    }

    #[test]
    fn repeated_class_is_rejected() {
        let rows = vec![vec![1.0], vec![2.0]];
        let mut l = Dslda::new(DsldaParams::default()).unwrap();
        l.step(&batch(&rows, &[0, 1])).unwrap();
        assert!(l.step(&batch(&rows, &[1, 2])).is_err());
    }
}
