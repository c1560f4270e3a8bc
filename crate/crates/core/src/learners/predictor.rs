use crate::linalg::{dot, Matrix};
use crate::scenario::ClassId;
use crate::Scalar;

/// Frozen classifier extracted from a learner after a step.
///
/// Ties resolve to the lowest class id; `classes` is always ascending.
#[derive(Debug, Clone)]
pub enum Predictor<T> {
    /// `argmax_c w_c·x + b_c`.
    Linear {
        classes: Vec<ClassId>,
        weights: Matrix<T>,
        bias: Vec<T>,
    },
    /// `argmin_c ‖x − μ_c‖²`.
    NearestMean { classes: Vec<ClassId>, means: Matrix<T> },
    /// `argmax_c scale · cos(w_c, x)` with unit-norm rows in `directions`.
    Cosine {
        classes: Vec<ClassId>,
        directions: Matrix<T>,
        scale: T,
    },
}

impl<T: Scalar> Predictor<T> {
    pub fn classes(&self) -> &[ClassId] {
        match self {
            Predictor::Linear { classes, .. }
            | Predictor::NearestMean { classes, .. }
            | Predictor::Cosine { classes, .. } => classes,
        }
    }

    /// Per-class scores; larger is better.
    pub fn scores(&self, x: &[T]) -> Vec<T> {
        match self {
            Predictor::Linear { weights, bias, .. } => {
                (0..weights.nrows()).map(|c| dot(weights.row(c), x) + bias[c]).collect()
            }
            Predictor::NearestMean { means, .. } => (0..means.nrows())
                .map(|c| -means.row(c).iter().zip(x).map(|(&m, &v)| (v - m) * (v - m)).sum::<T>())
                .collect(),
            Predictor::Cosine { directions, scale, .. } => {
                let norm = dot(x, x).sqrt();
                (0..directions.nrows())
                    .map(|c| {
                        if norm > T::zero() {
                            *scale * dot(directions.row(c), x) / norm
                        } else {
                            T::zero()
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn predict(&self, x: &[T]) -> ClassId {
        let scores = self.scores(x);
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = c;
            }
        }
        self.classes()[best]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_goes_to_lowest_id() {
        let p = Predictor::NearestMean {
            classes: vec![3, 8],
            means: Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]),
        };
        assert_eq!(p.predict(&[0.0, 5.0]), 3);
    }
}
