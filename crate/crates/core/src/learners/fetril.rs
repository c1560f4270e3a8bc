//! Feature translation: past classes are represented by pseudo-features built
//! from current-step samples shifted by the difference of class means, and a
//! linear head is retrained on real and pseudo features together.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_dim, check_new_classes, group_by_class, mean_of, Predictor, TrainBatch};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::scenario::ClassId;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetrilParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_decay: f64,
}

impl Default for FetrilParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 200,
            weight_decay: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fetril<T> {
    params: FetrilParams,
    means: BTreeMap<ClassId, Vec<T>>,
    classes: Vec<ClassId>,
    weights: Option<Matrix<T>>,
    bias: Vec<T>,
    steps: usize,
}

/// Picks the new class whose mean is most cosine-similar to `past_mean`.
///
/// Falls back to the Euclidean-nearest mean when any norm involved is zero.
/// Ties go to the first (lowest-id) candidate.
pub fn source_class<T: Scalar>(past_mean: &[T], candidates: &[(ClassId, &[T])]) -> ClassId {
    let pn = dot(past_mean, past_mean).sqrt();
    let degenerate = pn == T::zero() || candidates.iter().any(|(_, m)| dot(m, m) == T::zero());
    let score = |m: &[T]| -> T {
        if degenerate {
            -past_mean.iter().zip(m).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>()
        } else {
            dot(past_mean, m) / (pn * dot(m, m).sqrt())
        }
    };
    let mut best = 0;
    let mut best_score = score(candidates[0].1);
    for (i, (_, m)) in candidates.iter().enumerate().skip(1) {
        let s = score(m);
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    candidates[best].0
}

/// `s + past_mean − source_mean` for every source sample `s`.
pub fn pseudo_features<T: Scalar>(source: &[&[T]], source_mean: &[T], past_mean: &[T]) -> Vec<Vec<T>> {
    let shift: Vec<T> = past_mean.iter().zip(source_mean).map(|(&a, &b)| a - b).collect();
    source
        .iter()
        .map(|s| s.iter().zip(&shift).map(|(&x, &d)| x + d).collect())
        .collect()
}

impl<T: Scalar> Fetril<T> {
    pub fn new(params: FetrilParams) -> Result<Self> {
        if !(params.learning_rate > 0.0) || !params.learning_rate.is_finite() {
            return Err(Error::Invalid(format!(
                "FeTrIL learning rate must be positive, got {}",
                params.learning_rate
            )));
        }
        if params.epochs == 0 {
            return Err(Error::Invalid("FeTrIL needs at least one epoch".into()));
        }
        if !(params.weight_decay >= 0.0) {
            return Err(Error::Invalid("FeTrIL weight decay must be nonnegative".into()));
        }
        Ok(Self {
            params,
            means: BTreeMap::new(),
            classes: Vec::new(),
            weights: None,
            bias: Vec::new(),
            steps: 0,
        })
    }

    pub fn known_classes(&self) -> Vec<ClassId> {
        self.classes.clone()
    }

    pub fn class_mean(&self, c: ClassId) -> Option<&[T]> {
        self.means.get(&c).map(Vec::as_slice)
    }

    pub fn step(&mut self, batch: &TrainBatch<'_, T>) -> Result<()> {
        check_dim(self.weights.as_ref().map(Matrix::ncols), batch.dim())?;
        check_new_classes(&self.classes, batch)?;
        self.steps += 1;
        let groups = group_by_class(batch);
        let new_means: BTreeMap<ClassId, Vec<T>> = groups.iter().map(|(&c, rows)| (c, mean_of(rows))).collect();
        let candidates: Vec<(ClassId, &[T])> = new_means.iter().map(|(&c, m)| (c, m.as_slice())).collect();

        let mut xs: Vec<Vec<T>> = batch.features.iter().map(|f| f.to_vec()).collect();
        let mut ys: Vec<ClassId> = batch.labels.clone();
        for (&c, mu) in &self.means {
            let t = source_class(mu, &candidates);
            for p in pseudo_features(&groups[&t], &new_means[&t], mu) {
                xs.push(p);
                ys.push(c);
            }
        }

        self.means.extend(new_means);
        let mut classes: Vec<ClassId> = self.means.keys().copied().collect();
        classes.sort_unstable();
        let dim = batch.dim();
        let mut w = Matrix::zeros(classes.len(), dim);
        let mut b = vec![T::zero(); classes.len()];
        if let Some(old) = &self.weights {
            for (r, c) in self.classes.iter().enumerate() {
                let nr = classes.binary_search(c).expect("known class retained");
                w.row_mut(nr).copy_from_slice(old.row(r));
                b[nr] = self.bias[r];
            }
        }
        let targets: Vec<usize> = ys
            .iter()
            .map(|y| classes.binary_search(y).expect("target class present"))
            .collect();
        self.train_head(&mut w, &mut b, &xs, &targets)?;
        self.classes = classes;
        self.weights = Some(w);
        self.bias = b;
        Ok(())
    }

    // Full-batch gradient descent on mean softmax cross-entropy + ½·wd·‖W‖².
    fn train_head(&self, w: &mut Matrix<T>, b: &mut [T], xs: &[Vec<T>], targets: &[usize]) -> Result<()> {
        let lr = T::lit(self.params.learning_rate);
        let wd = T::lit(self.params.weight_decay);
        let n = T::from_usize_lossy(xs.len());
        let c = w.nrows();
        let d = w.ncols();
        let mut gw = Matrix::zeros(c, d);
        let mut gb = vec![T::zero(); c];
        let mut p = vec![T::zero(); c];
        for _ in 0..self.params.epochs {
            for r in 0..c {
                gw.row_mut(r).iter_mut().for_each(|g| *g = T::zero());
            }
            gb.iter_mut().for_each(|g| *g = T::zero());
            let mut loss = T::zero();
            for (x, &y) in xs.iter().zip(targets) {
                for k in 0..c {
                    p[k] = dot(w.row(k), x) + b[k];
                }
                let m = p.iter().copied().fold(T::neg_infinity(), T::max);
                let mut z = T::zero();
                for v in p.iter_mut() {
                    *v = (*v - m).exp();
                    z += *v;
                }
                loss += z.ln() + m - (m + p[y].ln());
                for (k, pk) in p.iter_mut().enumerate() {
                    *pk /= z;
                    let g = *pk - if k == y { T::one() } else { T::zero() };
                    if g != T::zero() {
                        gb[k] += g;
                        for (gwk, &xv) in gw.row_mut(k).iter_mut().zip(x) {
                            *gwk += g * xv;
                        }
                    }
                }
            }
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    step: self.steps,
                    learning_rate: self.params.learning_rate,
                });
            }
            for k in 0..c {
                let wr = w.row_mut(k);
                for (wv, &g) in wr.iter_mut().zip(gw.row(k)) {
                    *wv -= lr * (g / n + wd * *wv);
                }
                b[k] -= lr * gb[k] / n;
            }
        }
        Ok(())
    }

    pub fn predictor(&self) -> Result<Predictor<T>> {
        let weights = self.weights.clone().ok_or(Error::NotFitted)?;
        Ok(Predictor::Linear {
            classes: self.classes.clone(),
            weights,
            bias: self.bias.clone(),
        })
    }
}
