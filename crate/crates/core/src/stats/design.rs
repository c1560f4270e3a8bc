use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::formula::{Formula, Term};
use super::record::{Observation, Value};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::Scalar;

/// Reference-level choices and (optionally) the declared level set per categorical.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodeOptions {
    pub reference_levels: BTreeMap<String, String>,
    pub declared_levels: BTreeMap<String, Vec<String>>,
}

impl EncodeOptions {
    pub fn with_reference(mut self, variable: &str, level: &str) -> Self {
        self.reference_levels.insert(variable.to_string(), level.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub label: String,
    /// `None` for the intercept.
    pub term: Option<String>,
    /// Level indicated by this column, for single-categorical terms.
    pub level: Option<String>,
    pub reference: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorCoding {
    pub reference: String,
    /// All levels, sorted, reference included.
    pub levels: Vec<String>,
}

/// Response vector and design matrix with an intercept in column 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T> {
    pub response: String,
    pub y: Vec<T>,
    pub x: Matrix<T>,
    pub columns: Vec<ColumnInfo>,
    /// Column range of each term, formula order.
    pub terms: Vec<(Term, Range<usize>)>,
    pub factors: BTreeMap<String, FactorCoding>,
}

impl<T: Scalar> DesignMatrix<T> {
    pub fn nobs(&self) -> usize {
        self.y.len()
    }

    pub fn nparams(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_labels(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.label.clone()).collect()
    }

    /// Index of the indicator column for `level` of categorical `variable`.
    pub fn level_column(&self, variable: &str, level: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.term.as_deref() == Some(variable) && c.level.as_deref() == Some(level))
    }

    /// Intercept plus the listed terms (by label), keeping the existing coding.
    pub fn select_terms(&self, labels: &[String]) -> DesignMatrix<T> {
        let mut cols = vec![0];
        let mut terms = Vec::new();
        for (term, range) in &self.terms {
            if labels.contains(&term.label()) {
                let start = cols.len();
                cols.extend(range.clone());
                terms.push((term.clone(), start..cols.len()));
            }
        }
        DesignMatrix {
            response: self.response.clone(),
            y: self.y.clone(),
            x: self.x.select_columns(&cols),
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            terms,
            factors: self.factors.clone(),
        }
    }
}

enum Kind {
    Categorical(FactorCoding),
    Numeric,
}

/// One-hot (treatment) encoding of a formula over a set of observations.
///
/// Each categorical with `L` levels contributes `L − 1` indicator columns, the
/// reference level omitted; levels appear in lexicographic order.
pub fn encode_design<T: Scalar, R: Observation>(
    records: &[R],
    formula: &Formula,
    opts: &EncodeOptions,
) -> Result<DesignMatrix<T>> {
    let n = records.len();
    if n == 0 {
        return Err(Error::Design("no observations".into()));
    }
    let mut y = Vec::with_capacity(n);
    for (i, r) in records.iter().enumerate() {
        match r.value(&formula.response) {
            Some(Value::Numeric(v)) if v.is_finite() => y.push(T::lit(v)),
            Some(Value::Numeric(_)) => return Err(Error::Design(format!("non-finite response in observation {i}"))),
            Some(Value::Categorical(_)) => {
                return Err(Error::Design(format!(
                    "response `{}` must be numeric",
                    formula.response
                )))
            }
            None => {
                return Err(Error::Design(format!(
                    "response `{}` missing from observation {i}",
                    formula.response
                )))
            }
        }
    }

    let mut kinds: BTreeMap<String, Kind> = BTreeMap::new();
    for var in formula.variables() {
        kinds.insert(var.clone(), classify(records, &var, opts)?);
    }

    let mut columns = vec![ColumnInfo {
        label: "Intercept".into(),
        term: None,
        level: None,
        reference: None,
    }];
    let mut values: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let mut term_ranges = Vec::new();
    for term in &formula.terms {
        // (label, level, reference, values) per factor, then their products
        let mut parts: Vec<(String, Option<String>, Option<String>, Vec<f64>)> =
            vec![(String::new(), None, None, vec![1.0; n])];
        for factor in &term.factors {
            let factor_cols = factor_columns(records, factor, &kinds[factor]);
            let mut next = Vec::new();
            for (plabel, plevel, pref, pvals) in &parts {
                for (flabel, flevel, fref, fvals) in &factor_cols {
                    let label = if plabel.is_empty() {
                        flabel.clone()
                    } else {
                        format!("{plabel}:{flabel}")
                    };
                    let vals = pvals.iter().zip(fvals).map(|(a, b)| a * b).collect();
                    let single = term.factors.len() == 1;
                    let level = if single { flevel.clone() } else { plevel.clone() };
                    let reference = if single { fref.clone() } else { pref.clone() };
                    next.push((label, level, reference, vals));
                }
            }
            parts = next;
        }
        let start = columns.len();
        for (label, level, reference, vals) in parts {
            columns.push(ColumnInfo {
                label,
                term: Some(term.label()),
                level,
                reference,
            });
            values.push(vals);
        }
        term_ranges.push((term.clone(), start..columns.len()));
    }

    let p = columns.len();
    if n <= p {
        return Err(Error::Underdetermined { n, p });
    }
    let mut x = Matrix::zeros(n, p);
    for (j, col) in values.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            x[(i, j)] = T::lit(v);
        }
    }
    let factors = kinds
        .into_iter()
        .filter_map(|(k, kind)| match kind {
            Kind::Categorical(c) => Some((k, c)),
            Kind::Numeric => None,
        })
        .collect();
    Ok(DesignMatrix {
        response: formula.response.clone(),
        y,
        x,
        columns,
        terms: term_ranges,
        factors,
    })
}

fn classify<R: Observation>(records: &[R], var: &str, opts: &EncodeOptions) -> Result<Kind> {
    let mut levels = BTreeSet::new();
    let mut numeric = false;
    for (i, r) in records.iter().enumerate() {
        match r.value(var) {
            Some(Value::Categorical(l)) => {
                levels.insert(l.to_string());
            }
            Some(Value::Numeric(v)) => {
                if !v.is_finite() {
                    return Err(Error::Design(format!("non-finite value of `{var}` in observation {i}")));
                }
                numeric = true;
            }
            None => return Err(Error::Design(format!("variable `{var}` missing from observation {i}"))),
        }
    }
    if numeric && !levels.is_empty() {
        return Err(Error::Design(format!(
            "variable `{var}` mixes numeric and categorical values"
        )));
    }
    if numeric {
        return Ok(Kind::Numeric);
    }
    if let Some(declared) = opts.declared_levels.get(var) {
        if let Some(unknown) = levels.iter().find(|l| !declared.contains(l)) {
            return Err(Error::Design(format!("unknown level `{unknown}` of `{var}`")));
        }
        if let Some(unused) = declared.iter().find(|l| !levels.contains(*l)) {
            return Err(Error::Design(format!(
                "level `{unused}` of `{var}` has no observations"
            )));
        }
    }
    if levels.len() < 2 {
        return Err(Error::Design(format!(
            "categorical `{var}` has a single level; drop it from the formula"
        )));
    }
    let levels: Vec<String> = levels.into_iter().collect();
    let reference = match opts.reference_levels.get(var) {
        Some(r) if levels.contains(r) => r.clone(),
        Some(r) => return Err(Error::Design(format!("unknown reference level `{r}` for `{var}`"))),
        None => levels[0].clone(),
    };
    Ok(Kind::Categorical(FactorCoding { reference, levels }))
}

type FactorColumn = (String, Option<String>, Option<String>, Vec<f64>);

fn factor_columns<R: Observation>(records: &[R], var: &str, kind: &Kind) -> Vec<FactorColumn> {
    match kind {
        Kind::Numeric => {
            let vals = records
                .iter()
                .map(|r| match r.value(var) {
                    Some(Value::Numeric(v)) => v,
                    _ => unreachable!("classified as numeric"),
                })
                .collect();
            vec![(var.to_string(), None, None, vals)]
        }
        Kind::Categorical(coding) => coding
            .levels
            .iter()
            .filter(|l| **l != coding.reference)
            .map(|level| {
                let vals = records
                    .iter()
                    .map(|r| match r.value(var) {
                        Some(Value::Categorical(l)) if l == level => 1.0,
                        _ => 0.0,
                    })
                    .collect();
                (
                    format!("{var}[{level}]"),
                    Some(level.clone()),
                    Some(coding.reference.clone()),
                    vals,
                )
            })
            .collect(),
    }
}
