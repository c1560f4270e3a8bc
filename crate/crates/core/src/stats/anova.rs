use serde::{Deserialize, Serialize};

use super::design::{encode_design, DesignMatrix, EncodeOptions};
use super::distributions::f_pvalue;
use super::formula::Formula;
use super::ols::{ols_fit, residual_sum_of_squares};
use super::record::Observation;
use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow<T> {
    pub term: String,
    pub sum_sq: T,
    pub df: usize,
    pub f_statistic: T,
    pub p_value: T,
    /// `SS_term / (SS_term + SS_residual)`.
    pub partial_eta2: T,
}

/// Type-II analysis of variance for one fitted formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable<T> {
    pub formula: String,
    pub nobs: usize,
    pub r2: T,
    pub rows: Vec<AnovaRow<T>>,
    pub residual_sum_sq: T,
    pub residual_df: usize,
}

impl<T: Scalar> AnovaTable<T> {
    pub fn row(&self, term: &str) -> Option<&AnovaRow<T>> {
        self.rows.iter().find(|r| r.term == term)
    }

    /// Rows sorted by decreasing partial η² (ties keep formula order).
    pub fn ranked(&self) -> Vec<&AnovaRow<T>> {
        let mut rows: Vec<&AnovaRow<T>> = self.rows.iter().collect();
        rows.sort_by(|a, b| {
            b.partial_eta2
                .partial_cmp(&a.partial_eta2)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        rows
    }
}

pub fn anova_partial_eta2<T: Scalar, R: Observation>(
    records: &[R],
    formula: &Formula,
    opts: &EncodeOptions,
) -> Result<AnovaTable<T>> {
    let design: DesignMatrix<T> = encode_design(records, formula, opts)?;
    anova_from_design(&design, &formula.to_string())
}

/// Each term's sum of squares is the increase in residual SS when the term is
/// removed from the model containing every term not itself containing it.
pub fn anova_from_design<T: Scalar>(design: &DesignMatrix<T>, formula: &str) -> Result<AnovaTable<T>> {
    let fit = ols_fit(design)?;
    let res_df = fit.df_resid;
    let res_ss = fit.ssr;
    let res_ms = res_ss / T::from_usize_lossy(res_df);
    let all: Vec<String> = design.terms.iter().map(|(t, _)| t.label()).collect();
    let mut rows = Vec::with_capacity(design.terms.len());
    for (term, range) in &design.terms {
        let with_term: Vec<String> = design
            .terms
            .iter()
            .filter(|(other, _)| !other.strictly_contains(term))
            .map(|(other, _)| other.label())
            .collect();
        let without_term: Vec<String> = with_term.iter().filter(|l| **l != term.label()).cloned().collect();
        let ss_with = if with_term.len() == all.len() {
            res_ss
        } else {
            residual_sum_of_squares(&design.select_terms(&with_term)).map_err(|e| annotate(e, &term.label()))?
        };
        let ss_without =
            residual_sum_of_squares(&design.select_terms(&without_term)).map_err(|e| annotate(e, &term.label()))?;
        let ss = (ss_without - ss_with).max(T::zero());
        let df = range.len();
        let f = if res_ms > T::zero() {
            (ss / T::from_usize_lossy(df)) / res_ms
        } else if ss > T::zero() {
            T::infinity()
        } else {
            T::zero()
        };
        let p = f_pvalue(f, T::from_usize_lossy(df), T::from_usize_lossy(res_df))?;
        let denom = ss + res_ss;
        let eta = if denom > T::zero() { ss / denom } else { T::zero() };
        rows.push(AnovaRow {
            term: term.label(),
            sum_sq: ss,
            df,
            f_statistic: f,
            p_value: p,
            partial_eta2: eta,
        });
    }
    Ok(AnovaTable {
        formula: formula.to_string(),
        nobs: design.nobs(),
        r2: fit.r2,
        rows,
        residual_sum_sq: res_ss,
        residual_df: res_df,
    })
}

fn annotate(e: Error, term: &str) -> Error {
    match e {
        Error::RankDeficient { columns } => Error::Design(format!(
            "reduced model for `{term}` is rank-deficient (columns: {})",
            columns.join(", ")
        )),
        other => other,
    }
}
