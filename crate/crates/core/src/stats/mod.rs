//! Regression-based analysis of experiment results: OLS with categorical
//! encodings, type-II ANOVA with partial η², model selection by AIC,
//! variable screening, pairwise comparisons with Bonferroni correction and
//! residual diagnostics.

mod anova;
mod design;
mod diagnostics;
pub mod distributions;
mod formula;
mod ols;
mod pairwise;
mod record;
mod selection;

pub use anova::{anova_from_design, anova_partial_eta2, AnovaRow, AnovaTable};
pub use design::{encode_design, ColumnInfo, DesignMatrix, EncodeOptions, FactorCoding};
pub use diagnostics::{diagnostics, gram_min_eigenvalue, Diagnostics, GramCheck, DEFAULT_GRAM_THRESHOLD};
pub use distributions::{f_pvalue, inv_norm_cdf, student_t_pvalue};
pub use formula::{Formula, Term};
pub use ols::{ols_fit, residual_sum_of_squares, RegressionFit};
pub use pairwise::{pairwise_comparison, PairwiseMatrix};
pub use record::{canonical_variable, Observation, Row, RunRecord, Value};
pub use selection::{screen_variables, select_model_aic, AicEntry, AicSelection, ScreenEntry, Screening};
