//! Cosine-normalized linear head trained with a balanced softmax on the
//! current step's classes only, with an L2 anchor holding previously learned
//! class weights near their last snapshot.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_dim, check_new_classes, Predictor, TrainBatch};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::scenario::ClassId;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BsilParams {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Weight of the anchor on previous class weights.
    pub lambda: f64,
    pub initial_scale: f64,
    /// Offset logits by `ln n_c`; plain softmax when false.
    pub balanced: bool,
}

impl Default for BsilParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 100,
            lambda: 0.1,
            initial_scale: 10.0,
            balanced: true,
        }
    }
}

/// Objective of one training step, kept separate so it can be differentiated
/// numerically in tests.
#[derive(Debug, Clone)]
pub struct BsilLoss<'a, T> {
    pub features: &'a [&'a [T]],
    /// Row index of each sample's class.
    pub targets: &'a [usize],
    /// Additive logit offset per class row (`ln n_c`, or zeros).
    pub offsets: Vec<T>,
    /// `(row, snapshot)` pairs anchored by the L2 term.
    pub anchor: Vec<(usize, Vec<T>)>,
    pub lambda: T,
}

impl<'a, T: Scalar> BsilLoss<'a, T> {
    pub fn value(&self, weights: &Matrix<T>, scale: T) -> T {
        self.evaluate(weights, scale, false).0
    }

    /// Loss with gradients with respect to the weight rows and the scale.
    pub fn value_and_grad(&self, weights: &Matrix<T>, scale: T) -> (T, Matrix<T>, T) {
        let (l, g, gs) = self.evaluate(weights, scale, true);
        (l, g.expect("gradient requested"), gs)
    }

    fn evaluate(&self, weights: &Matrix<T>, scale: T, grad: bool) -> (T, Option<Matrix<T>>, T) {
        let c = weights.nrows();
        let d = weights.ncols();
        let n = T::from_usize_lossy(self.features.len());
        let norms: Vec<T> = (0..c).map(|k| dot(weights.row(k), weights.row(k)).sqrt()).collect();
        if !scale.is_finite() || norms.iter().any(|r| !r.is_finite()) {
            return (T::nan(), grad.then(|| Matrix::zeros(c, d)), T::nan());
        }
        let mut unit = weights.clone();
        for (k, &r) in norms.iter().enumerate() {
            if r > T::zero() {
                unit.row_mut(k).iter_mut().for_each(|v| *v /= r);
            }
        }
        let mut gw = grad.then(|| Matrix::zeros(c, d));
        let mut gscale = T::zero();
        let mut loss = T::zero();
        let mut cos = vec![T::zero(); c];
        let mut z = vec![T::zero(); c];
        let mut xhat = vec![T::zero(); d];
        for (x, &y) in self.features.iter().zip(self.targets) {
            let xn = dot(x, x).sqrt();
            if xn > T::zero() {
                xhat.iter_mut().zip(x.iter()).for_each(|(h, &v)| *h = v / xn);
            } else {
                xhat.iter_mut().for_each(|h| *h = T::zero());
            }
            for k in 0..c {
                cos[k] = dot(unit.row(k), &xhat);
                z[k] = scale * cos[k] + self.offsets[k];
            }
            let m = z.iter().copied().fold(T::neg_infinity(), T::max);
            let sum: T = z.iter().map(|&v| (v - m).exp()).sum();
            let lse = m + sum.ln();
            loss += lse - z[y];
            if let Some(gw) = gw.as_mut() {
                for k in 0..c {
                    let p = (z[k] - lse).exp();
                    let g = (p - if k == y { T::one() } else { T::zero() }) / n;
                    gscale += g * cos[k];
                    if norms[k] > T::zero() {
                        let f = g * scale / norms[k];
                        let row = gw.row_mut(k);
                        for j in 0..d {
                            row[j] += f * (xhat[j] - cos[k] * unit[(k, j)]);
                        }
                    }
                }
            }
        }
        loss /= n;
        for (r, snap) in &self.anchor {
            for (j, &s) in snap.iter().enumerate() {
                let diff = weights[(*r, j)] - s;
                loss += self.lambda * diff * diff;
                if let Some(gw) = gw.as_mut() {
                    gw[(*r, j)] += T::lit(2.0) * self.lambda * diff;
                }
            }
        }
        (loss, gw, gscale)
    }
}

#[derive(Debug, Clone)]
pub struct Bsil<T> {
    params: BsilParams,
    seed: u64,
    classes: Vec<ClassId>,
    weights: Option<Matrix<T>>,
    scale: T,
    counts: BTreeMap<ClassId, usize>,
    snapshot: Option<Matrix<T>>,
    steps: usize,
}

impl<T: Scalar> Bsil<T> {
    pub fn new(params: BsilParams, seed: u64) -> Result<Self> {
        if !(params.learning_rate > 0.0) || !params.learning_rate.is_finite() {
            return Err(Error::Invalid(format!(
                "BSIL learning rate must be positive, got {}",
                params.learning_rate
            )));
        }
        if params.epochs == 0 {
            return Err(Error::Invalid("BSIL needs at least one epoch".into()));
        }
        if !(params.lambda >= 0.0) || !params.lambda.is_finite() {
            return Err(Error::Invalid(format!(
                "BSIL lambda must be nonnegative, got {}",
                params.lambda
            )));
        }
        if !params.initial_scale.is_finite() || params.initial_scale <= 0.0 {
            return Err(Error::Invalid("BSIL initial scale must be positive".into()));
        }
        Ok(Self {
            scale: T::lit(params.initial_scale),
            params,
            seed,
            classes: Vec::new(),
            weights: None,
            counts: BTreeMap::new(),
            snapshot: None,
            steps: 0,
        })
    }

    pub fn known_classes(&self) -> Vec<ClassId> {
        self.classes.clone()
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn weights(&self) -> Option<&Matrix<T>> {
        self.weights.as_ref()
    }

    /// Weights of the previously known classes as they were when the last step began.
    pub fn snapshot(&self) -> Option<&Matrix<T>> {
        self.snapshot.as_ref()
    }

    pub fn step(&mut self, batch: &TrainBatch<'_, T>) -> Result<()> {
        check_dim(self.weights.as_ref().map(Matrix::ncols), batch.dim())?;
        check_new_classes(&self.classes, batch)?;
        self.steps += 1;
        let dim = batch.dim();
        let old_classes = self.classes.clone();
        for &y in &batch.labels {
            *self.counts.entry(y).or_insert(0) += 1;
        }
        let classes: Vec<ClassId> = self.counts.keys().copied().collect();

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(self.steps as u64));
        let mut w = Matrix::zeros(classes.len(), dim);
        let mut anchor = Vec::with_capacity(old_classes.len());
        for (r, c) in classes.iter().enumerate() {
            if let Ok(old_r) = old_classes.binary_search(c) {
                let old = self
                    .weights
                    .as_ref()
                    .expect("weights exist for known classes")
                    .row(old_r);
                w.row_mut(r).copy_from_slice(old);
                anchor.push((r, old.to_vec()));
            } else {
                // Imprint: start from the unit mean of the class's features.
                let mut mean = vec![T::zero(); dim];
                for (x, _) in batch.features.iter().zip(&batch.labels).filter(|(_, y)| *y == c) {
                    mean.iter_mut().zip(x.iter()).for_each(|(m, &v)| *m += v);
                }
                let norm = dot(&mean, &mean).sqrt();
                if norm > T::zero() && norm.is_finite() {
                    mean.iter_mut().for_each(|m| *m /= norm);
                } else {
                    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                    mean = v.into_iter().map(|a| T::lit(a / n)).collect();
                }
                w.row_mut(r).copy_from_slice(&mean);
            }
        }
        self.snapshot = self.weights.take();

        let offsets = classes
            .iter()
            .map(|c| {
                if self.params.balanced {
                    T::from_usize_lossy(self.counts[c]).ln()
                } else {
                    T::zero()
                }
            })
            .collect();
        let targets: Vec<usize> = batch
            .labels
            .iter()
            .map(|y| classes.binary_search(y).expect("label registered"))
            .collect();
        let objective = BsilLoss {
            features: &batch.features,
            targets: &targets,
            offsets,
            anchor,
            lambda: T::lit(self.params.lambda),
        };

        let lr = T::lit(self.params.learning_rate);
        let mut scale = self.scale;
        for _ in 0..self.params.epochs {
            let (loss, gw, gs) = objective.value_and_grad(&w, scale);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    step: self.steps,
                    learning_rate: self.params.learning_rate,
                });
            }
            for (wv, &g) in w.as_mut_slice().iter_mut().zip(gw.as_slice()) {
                *wv -= lr * g;
            }
            scale -= lr * gs;
        }
        if !scale.is_finite() || w.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss {
                step: self.steps,
                learning_rate: self.params.learning_rate,
            });
        }
        self.classes = classes;
        self.weights = Some(w);
        self.scale = scale;
        Ok(())
    }

    pub fn predictor(&self) -> Result<Predictor<T>> {
        let w = self.weights.as_ref().ok_or(Error::NotFitted)?;
        let mut directions = w.clone();
        for k in 0..directions.nrows() {
            let r = dot(w.row(k), w.row(k)).sqrt();
            if r > T::zero() {
                directions.row_mut(k).iter_mut().for_each(|v| *v /= r);
            }
        }
        Ok(Predictor::Cosine {
            classes: self.classes.clone(),
            directions,
            scale: self.scale,
        })
    }
}
