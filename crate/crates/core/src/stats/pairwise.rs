use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::{encode_design, DesignMatrix, EncodeOptions};
use super::formula::Formula;
use super::ols::ols_fit;
use super::record::{Observation, Value};
use crate::error::{Error, Result};
use crate::Scalar;

/// Pairwise effects between the levels of one categorical regressor.
///
/// `gain[i][j]` is the estimated effect of level `i` relative to level `j`.
/// Entries are `None` where a pair could not be estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix<T> {
    pub factor: String,
    pub formula: String,
    pub levels: Vec<String>,
    pub gain: Vec<Vec<Option<T>>>,
    pub p_values: Vec<Vec<Option<T>>>,
    /// Significant after Bonferroni correction.
    pub significant: Vec<Vec<bool>>,
    /// Significant at the uncorrected threshold.
    pub significant_uncorrected: Vec<Vec<bool>>,
    /// Number of tests: unordered pairs of levels.
    pub tests: usize,
    pub alpha: T,
    /// `alpha / tests`.
    pub threshold: T,
}

impl<T: Scalar> PairwiseMatrix<T> {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// Refits the model once per reference level of `factor` and assembles the
/// level-versus-level coefficients, significance gated by Bonferroni.
///
/// Each unordered pair is estimated twice (once per reference); the two
/// estimates agree up to rounding and are averaged so the matrix is exactly
/// antisymmetric.
pub fn pairwise_comparison<T: Scalar, R: Observation + Sync>(
    records: &[R],
    formula: &Formula,
    factor: &str,
    alpha: T,
    levels: Option<&[String]>,
    opts: &EncodeOptions,
) -> Result<PairwiseMatrix<T>> {
    if !formula
        .terms
        .iter()
        .any(|t| t.factors.len() == 1 && t.factors[0] == factor)
    {
        return Err(Error::Design(format!(
            "`{factor}` is not a main-effect term of `{formula}`"
        )));
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let levels: Vec<String> = match levels {
        Some(l) => l.to_vec(),
        None => {
            let mut l: Vec<String> = records
                .iter()
                .filter_map(|r| match r.value(factor) {
                    Some(Value::Categorical(v)) => Some(v.to_string()),
                    _ => None,
                })
                .collect();
            l.sort();
            l.dedup();
            l
        }
    };
    let big_l = levels.len();

    // (beta, p) of level i against reference j, for each j
    let per_reference: Vec<Vec<Option<(T, T)>>> = levels
        .par_iter()
        .map(|reference| {
            let opts = opts.clone().with_reference(factor, reference);
            let fit = encode_design::<T, R>(records, formula, &opts).and_then(|d| {
                let fit = ols_fit(&d)?;
                Ok((d, fit))
            });
            levels
                .iter()
                .map(|level| {
                    let (d, fit): &(DesignMatrix<T>, _) = fit.as_ref().ok()?;
                    let j = d.level_column(factor, level)?;
                    Some((fit.coefficients[j], fit.p_values[j]))
                })
                .collect()
        })
        .collect();

    let tests = big_l * big_l.saturating_sub(1) / 2;
    let threshold = if tests > 0 {
        alpha / T::from_usize_lossy(tests)
    } else {
        alpha
    };
    let mut gain = vec![vec![None; big_l]; big_l];
    let mut p_values = vec![vec![None; big_l]; big_l];
    let mut significant = vec![vec![false; big_l]; big_l];
    let mut significant_uncorrected = vec![vec![false; big_l]; big_l];
    for i in 0..big_l {
        gain[i][i] = Some(T::zero());
        for j in 0..i {
            let ij = per_reference[j][i];
            let ji = per_reference[i][j];
            let combined = match (ij, ji) {
                (Some((b1, p1)), Some((b2, p2))) => Some(((b1 - b2) * T::lit(0.5), p1.max(p2))),
                (Some((b, p)), None) => Some((b, p)),
                (None, Some((b, p))) => Some((-b, p)),
                (None, None) => None,
            };
            if let Some((g, p)) = combined {
                gain[i][j] = Some(g);
                gain[j][i] = Some(-g);
                p_values[i][j] = Some(p);
                p_values[j][i] = Some(p);
                let s = p < threshold;
                let su = p < alpha;
                significant[i][j] = s;
                significant[j][i] = s;
                significant_uncorrected[i][j] = su;
                significant_uncorrected[j][i] = su;
            }
        }
    }
    Ok(PairwiseMatrix {
        factor: factor.to_string(),
        formula: formula.to_string(),
        levels,
        gain,
        p_values,
        significant,
        significant_uncorrected,
        tests,
        alpha,
        threshold,
    })
}
