//! Analysis of a results table: correlations, screening, model selection,
//! ANOVA, pairwise comparisons and regression diagnostics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::metrics::{metric_correlations, CorrelationMatrix, MetricSet};
use crate::stats::{
    anova_from_design, canonical_variable, diagnostics, encode_design, gram_min_eigenvalue, ols_fit,
    pairwise_comparison, screen_variables, select_model_aic, AicSelection, AnovaTable, Diagnostics, EncodeOptions,
    Formula, GramCheck, Observation, PairwiseMatrix, RunRecord, Screening, Value,
};

/// Model that could not be fitted or a section that was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub stage: String,
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSummary {
    pub formula: String,
    pub nobs: usize,
    pub r2: f64,
    pub adj_r2: f64,
    pub aic: f64,
    pub f_statistic: Option<f64>,
    pub f_pvalue: Option<f64>,
    pub coefficients: Vec<CoefficientRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseSection {
    /// `overall` or `<variable>=<level>`.
    pub subset: String,
    pub nobs: usize,
    pub matrix: PairwiseMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSection {
    pub formula: String,
    pub gram: GramCheck<f64>,
    pub diagnostics: Diagnostics<f64>,
    /// Trace of the hat matrix; equals the number of parameters.
    pub leverage_sum: f64,
}

/// Everything `analyze` produces, in report order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub config_hash: String,
    pub version: String,
    pub nobs: usize,
    pub alpha: f64,
    pub conventions: Vec<String>,
    pub correlations: Option<CorrelationMatrix<f64>>,
    pub screenings: Vec<Screening<f64>>,
    pub model_selection: Vec<AicSelection<f64>>,
    pub anova: Vec<AnovaTable<f64>>,
    pub regressions: Vec<RegressionSummary>,
    pub pairwise: Vec<PairwiseSection>,
    pub diagnostics: Vec<DiagnosticsSection>,
    pub warnings: Vec<Warning>,
}

impl ReportBundle {
    /// RON keeps infinite statistics (perfect fits) that JSON cannot hold.
    pub fn to_ron(&self) -> String {
        let pretty = ron::ser::PrettyConfig::default();
        ron::ser::to_string_pretty(self, pretty).expect("bundle serializes") + "\n"
    }

    pub fn from_ron(text: &str) -> Result<Self> {
        ron::from_str(text).map_err(|e| Error::Invalid(format!("report bundle: {e}")))
    }

    /// True when at least one regression was actually estimated: an ANOVA or
    /// regression table, a screening with a fitted candidate, or a pairwise
    /// matrix with at least one test.
    pub fn has_models(&self) -> bool {
        !self.anova.is_empty()
            || !self.regressions.is_empty()
            || !self.model_selection.is_empty()
            || self
                .screenings
                .iter()
                .any(|s| !(s.ranked.is_empty() && s.excluded.is_empty()))
            || self.pairwise.iter().any(|p| p.matrix.tests > 0)
    }
}

/// Parses a formula and rewrites variable names to their results-column spelling.
pub fn canonical_formula(text: &str) -> Result<Formula> {
    let f: Formula = text.parse()?;
    let canon = |v: &str| canonical_variable(v).map_or_else(|| v.to_string(), str::to_string);
    let terms: Vec<String> = f
        .terms
        .iter()
        .map(|t| t.factors.iter().map(|x| canon(x)).collect::<Vec<_>>().join(":"))
        .collect();
    let refs: Vec<&str> = terms.iter().map(String::as_str).collect();
    Formula::new(&canon(&f.response), &refs)
}

fn encode_options(cfg: &AnalysisConfig) -> EncodeOptions {
    let mut opts = EncodeOptions::default();
    for (var, level) in &cfg.reference_levels {
        let var = canonical_variable(var).map_or_else(|| var.clone(), str::to_string);
        opts = opts.with_reference(&var, level);
    }
    opts
}

fn is_constant<R: Observation>(records: &[R], var: &str) -> bool {
    let mut first: Option<f64> = None;
    for r in records {
        match r.value(var) {
            Some(Value::Numeric(v)) => match first {
                None => first = Some(v),
                Some(f) if f != v => return false,
                _ => {}
            },
            _ => return false,
        }
    }
    true
}

fn level_key(v: Option<Value<'_>>) -> String {
    match v {
        Some(Value::Categorical(s)) => s.to_string(),
        Some(Value::Numeric(x)) => x.to_string(),
        None => String::new(),
    }
}

fn summarize(fit: &crate::stats::RegressionFit<f64>, formula: &Formula) -> RegressionSummary {
    RegressionSummary {
        formula: formula.to_string(),
        nobs: fit.nobs(),
        r2: fit.r2,
        adj_r2: fit.adj_r2,
        aic: fit.aic,
        f_statistic: fit.f_statistic,
        f_pvalue: fit.f_pvalue,
        coefficients: (0..fit.nparams())
            .map(|j| CoefficientRow {
                label: fit.column_labels[j].clone(),
                estimate: fit.coefficients[j],
                std_error: fit.std_errors[j],
                t_value: fit.t_values[j],
                p_value: fit.p_values[j],
            })
            .collect(),
    }
}

/// Runs the configured analysis. Individual models that cannot be fitted
/// become warnings; the call fails only if nothing could be computed.
pub fn analyze(records: &[RunRecord], cfg: &AnalysisConfig, config_hash: &str, version: &str) -> Result<ReportBundle> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", cfg.alpha)));
    }
    let opts = encode_options(cfg);
    let mut warnings = Vec::new();
    let mut warn = |stage: &str, subject: &str, message: String| {
        warnings.push(Warning {
            stage: stage.into(),
            subject: subject.into(),
            message,
        })
    };

    let metric_rows: Vec<MetricSet<f64>> = records
        .iter()
        .map(|r| MetricSet {
            acc1: r.acc1,
            avg_acc: r.avg_acc,
            forgetting: r.forgetting,
            acc_k: r.acc_k,
        })
        .collect();
    let correlations = match metric_correlations(&metric_rows) {
        Ok(c) => Some(c),
        Err(e) => {
            warn("correlations", "metrics", e.to_string());
            None
        }
    };

    let mut screenings = Vec::new();
    let candidates: Vec<String> = cfg
        .screening_candidates
        .iter()
        .map(|c| canonical_variable(c).map_or_else(|| c.clone(), str::to_string))
        .collect();
    let cand_refs: Vec<&str> = candidates.iter().map(String::as_str).collect();
    for resp in &cfg.screening_responses {
        let resp = canonical_variable(resp).map_or_else(|| resp.clone(), str::to_string);
        if is_constant(records, &resp) {
            warn(
                "screening",
                &resp,
                format!("response `{resp}` has zero variance; skipped"),
            );
            continue;
        }
        let mut kept = Vec::new();
        for &c in cand_refs.iter().filter(|c| **c != resp) {
            if is_constant(records, c) {
                warn(
                    "screening",
                    &format!("{resp} ~ {c}"),
                    format!("regressor `{c}` is constant; skipped"),
                );
            } else {
                kept.push(c);
            }
        }
        match screen_variables(records, &resp, &kept, cfg.alpha, &opts) {
            Ok(s) => {
                for (var, msg) in &s.failed {
                    warn("screening", &format!("{resp} ~ {var}"), msg.clone());
                }
                screenings.push(s);
            }
            Err(e) => warn("screening", &resp, e.to_string()),
        }
    }

    let mut ladders: Vec<(String, Vec<Formula>)> = Vec::new();
    for text in &cfg.model_ladder {
        match canonical_formula(text) {
            Ok(f) => match ladders.iter_mut().find(|(r, _)| *r == f.response) {
                Some((_, v)) => v.push(f),
                None => ladders.push((f.response.clone(), vec![f])),
            },
            Err(e) => warn("model selection", text, e.to_string()),
        }
    }
    let mut model_selection = Vec::new();
    for (resp, formulas) in &ladders {
        if is_constant(records, resp) {
            warn(
                "model selection",
                resp,
                format!("response `{resp}` has zero variance; skipped"),
            );
            continue;
        }
        match select_model_aic::<f64, _>(records, formulas, &opts) {
            Ok(sel) => {
                for e in &sel.entries {
                    if let Some(msg) = &e.error {
                        warn("model selection", &e.formula, msg.clone());
                    }
                }
                model_selection.push(sel);
            }
            Err(e) => warn("model selection", resp, e.to_string()),
        }
    }

    let mut anova = Vec::new();
    let mut regressions = Vec::new();
    let mut diag = Vec::new();
    let mut fit_models = |text: &str, with_anova: bool, warn: &mut dyn FnMut(&str, &str, String)| {
        let stage = if with_anova { "anova" } else { "regression" };
        let f = match canonical_formula(text) {
            Ok(f) => f,
            Err(e) => return warn(stage, text, e.to_string()),
        };
        if is_constant(records, &f.response) {
            return warn(
                stage,
                text,
                format!("response `{}` has zero variance; skipped", f.response),
            );
        }
        let design = match encode_design::<f64, _>(records, &f, &opts) {
            Ok(d) => d,
            Err(e) => return warn(stage, text, e.to_string()),
        };
        let fit = match ols_fit(&design) {
            Ok(fit) => fit,
            Err(e) => return warn(stage, text, e.to_string()),
        };
        regressions.push(summarize(&fit, &f));
        if !with_anova {
            return;
        }
        match anova_from_design(&design, &f.to_string()) {
            Ok(t) => anova.push(t),
            Err(e) => warn(stage, text, e.to_string()),
        }
        let section = diagnostics(&fit, &design).and_then(|d| {
            let gram = gram_min_eigenvalue(&design, cfg.gram_threshold)?;
            let leverage_sum = d.leverages.iter().sum();
            Ok(DiagnosticsSection {
                formula: f.to_string(),
                gram,
                diagnostics: d,
                leverage_sum,
            })
        });
        match section {
            Ok(s) => {
                if s.gram.collinear {
                    warn(
                        "diagnostics",
                        text,
                        format!(
                            "smallest Gram eigenvalue {:e} is below {:e}; regressors are nearly collinear",
                            s.gram.min_eigenvalue, s.gram.threshold
                        ),
                    );
                }
                diag.push(s);
            }
            Err(e) => warn("diagnostics", text, e.to_string()),
        }
    };
    for m in &cfg.anova_models {
        fit_models(m, true, &mut warn);
    }
    for m in &cfg.regressions {
        fit_models(m, false, &mut warn);
    }

    let mut pairwise = Vec::new();
    let factor = canonical_variable(&cfg.pairwise_factor).map_or_else(|| cfg.pairwise_factor.clone(), str::to_string);
    match canonical_formula(&cfg.pairwise_model) {
        Err(e) => warn("pairwise", &cfg.pairwise_model, e.to_string()),
        Ok(model) if is_constant(records, &model.response) => warn(
            "pairwise",
            &cfg.pairwise_model,
            format!("response `{}` has zero variance; skipped", model.response),
        ),
        Ok(model) => {
            let mut subsets: Vec<(String, Formula, Vec<RunRecord>)> =
                vec![("overall".into(), model.clone(), records.to_vec())];
            for split in &cfg.pairwise_splits {
                let var = canonical_variable(split).map_or_else(|| split.clone(), str::to_string);
                if var == factor {
                    warn("pairwise", &var, "cannot split by the compared factor".into());
                    continue;
                }
                let mut groups: BTreeMap<String, Vec<RunRecord>> = BTreeMap::new();
                for r in records {
                    groups.entry(level_key(r.value(&var))).or_default().push(r.clone());
                }
                let reduced = model.without_term(&var);
                for (level, rows) in groups {
                    subsets.push((format!("{var}={level}"), reduced.clone(), rows));
                }
            }
            for (subset, formula, rows) in subsets {
                // A term that is constant inside the subset cannot be estimated.
                let mut f = formula.clone();
                for var in formula.variables() {
                    if var == factor {
                        continue;
                    }
                    let mut levels: Vec<String> = rows.iter().map(|r| level_key(r.value(&var))).collect();
                    levels.sort();
                    levels.dedup();
                    if levels.len() < 2 {
                        f = f.without_term(&var);
                    }
                }
                match pairwise_comparison::<f64, _>(&rows, &f, &factor, cfg.alpha, None, &opts) {
                    Ok(matrix) => pairwise.push(PairwiseSection {
                        subset,
                        nobs: rows.len(),
                        matrix,
                    }),
                    Err(e) => warn("pairwise", &subset, e.to_string()),
                }
            }
        }
    }

    let bundle = ReportBundle {
        config_hash: config_hash.to_string(),
        version: version.to_string(),
        nobs: records.len(),
        alpha: cfg.alpha,
        conventions: vec![
            "AIC = 2(p + 1) + n[ln(2π·SSR/n) + 1], p regression coefficients plus the error variance".into(),
            "ANOVA sums of squares are Type II (each term against the model without it, interactions kept marginal)"
                .into(),
            "pairwise significance: p < alpha/m with m = L(L-1)/2 unordered level pairs".into(),
            "standardized residuals are internally studentized: e_i / (sigma * sqrt(1 - h_ii))".into(),
        ],
        correlations,
        screenings,
        model_selection,
        anova,
        regressions,
        pairwise,
        diagnostics: diag,
        warnings,
    };
    if !bundle.has_models() {
        return Err(Error::Infeasible(format!(
            "no model could be fitted on {} rows; see warnings: {}",
            records.len(),
            bundle
                .warnings
                .iter()
                .map(|w| format!("{} `{}`: {}", w.stage, w.subject, w.message))
                .collect::<Vec<_>>()
                .join("; ")
        )));
    }
    Ok(bundle)
}
