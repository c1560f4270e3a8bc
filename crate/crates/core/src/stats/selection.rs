use serde::{Deserialize, Serialize};

use super::design::{encode_design, DesignMatrix, EncodeOptions};
use super::formula::Formula;
use super::ols::ols_fit;
use super::record::Observation;
use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenEntry<T> {
    pub variable: String,
    /// p-value of the overall F test of the one-variable model.
    pub p_value: T,
    pub r2: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Screening<T> {
    pub response: String,
    pub alpha: T,
    /// Variables with `p < alpha`, by decreasing R².
    pub ranked: Vec<ScreenEntry<T>>,
    pub excluded: Vec<ScreenEntry<T>>,
    /// Variables whose one-variable regression could not be fitted.
    pub failed: Vec<(String, String)>,
}

/// One regression per candidate variable; keeps those significant at `alpha`.
pub fn screen_variables<T: Scalar, R: Observation>(
    records: &[R],
    response: &str,
    candidates: &[&str],
    alpha: T,
    opts: &EncodeOptions,
) -> Result<Screening<T>> {
    if candidates.is_empty() {
        return Err(Error::Invalid("no screening candidates".into()));
    }
    let mut ranked = Vec::new();
    let mut excluded = Vec::new();
    let mut failed = Vec::new();
    for &var in candidates {
        let outcome = Formula::new(response, &[var]).and_then(|f| {
            let d: DesignMatrix<T> = encode_design(records, &f, opts)?;
            ols_fit(&d)
        });
        match outcome {
            Ok(fit) => {
                let entry = ScreenEntry {
                    variable: var.to_string(),
                    p_value: fit.f_pvalue.unwrap_or(T::one()),
                    r2: fit.r2,
                };
                if entry.p_value < alpha {
                    ranked.push(entry);
                } else {
                    excluded.push(entry);
                }
            }
            Err(e) => failed.push((var.to_string(), e.to_string())),
        }
    }
    let order = |a: &ScreenEntry<T>, b: &ScreenEntry<T>| {
        b.r2.partial_cmp(&a.r2)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.p_value.partial_cmp(&b.p_value).unwrap_or(std::cmp::Ordering::Equal))
    };
    ranked.sort_by(order);
    excluded.sort_by(order);
    Ok(Screening {
        response: response.to_string(),
        alpha,
        ranked,
        excluded,
        failed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AicEntry<T> {
    pub formula: String,
    pub n_params: Option<usize>,
    pub aic: Option<T>,
    pub r2: Option<T>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AicSelection<T> {
    /// Index into `entries` of the selected formula.
    pub best: usize,
    pub entries: Vec<AicEntry<T>>,
}

impl<T: Scalar> AicSelection<T> {
    pub fn best_formula(&self) -> &str {
        &self.entries[self.best].formula
    }
}

/// Minimum-AIC formula; ties go to fewer parameters, then declaration order.
/// Formulas that cannot be fitted are reported and skipped.
pub fn select_model_aic<T: Scalar, R: Observation>(
    records: &[R],
    candidates: &[Formula],
    opts: &EncodeOptions,
) -> Result<AicSelection<T>> {
    let mut entries = Vec::with_capacity(candidates.len());
    let mut best: Option<(usize, T, usize)> = None;
    for (i, f) in candidates.iter().enumerate() {
        let outcome = encode_design::<T, R>(records, f, opts).and_then(|d| ols_fit(&d));
        match outcome {
            Ok(fit) => {
                let p = fit.nparams();
                let better = match best {
                    None => true,
                    Some((_, b_aic, b_p)) => {
                        let tol = T::lit(1e-9) * T::one().max(b_aic.abs());
                        fit.aic < b_aic - tol || ((fit.aic - b_aic).abs() <= tol && p < b_p)
                    }
                };
                if better {
                    best = Some((i, fit.aic, p));
                }
                entries.push(AicEntry {
                    formula: f.to_string(),
                    n_params: Some(p),
                    aic: Some(fit.aic),
                    r2: Some(fit.r2),
                    error: None,
                });
            }
            Err(e) => entries.push(AicEntry {
                formula: f.to_string(),
                n_params: None,
                aic: None,
                r2: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let (best, _, _) = best.ok_or_else(|| Error::Invalid("no candidate formula could be fitted".into()))?;
    Ok(AicSelection { best, entries })
}
