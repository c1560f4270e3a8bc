use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One additive term: a single variable or a product of variables (`a:b`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Term {
    pub factors: Vec<String>,
}

impl Term {
    pub fn var(name: &str) -> Self {
        Self {
            factors: vec![name.to_string()],
        }
    }

    pub fn label(&self) -> String {
        self.factors.join(":")
    }

    /// True if every factor of `other` is also a factor of `self`, and `self` has more.
    pub fn strictly_contains(&self, other: &Term) -> bool {
        self.factors.len() > other.factors.len() && other.factors.iter().all(|f| self.factors.contains(f))
    }
}

/// `response ~ term + term + ...`; an intercept is always included.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Formula {
    pub response: String,
    pub terms: Vec<Term>,
}

impl Formula {
    pub fn new(response: &str, terms: &[&str]) -> Result<Self> {
        let terms = terms
            .iter()
            .map(|t| Term {
                factors: t.split(':').map(|f| f.trim().to_string()).collect(),
            })
            .collect();
        let f = Self {
            response: response.to_string(),
            terms,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn intercept_only(response: &str) -> Self {
        Self {
            response: response.to_string(),
            terms: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.response.is_empty() {
            return Err(Error::Design("formula has no response".into()));
        }
        let mut seen: Vec<Vec<String>> = Vec::new();
        for t in &self.terms {
            if t.factors.iter().any(String::is_empty) {
                return Err(Error::Design(format!("empty variable name in `{self}`")));
            }
            let mut key = t.factors.clone();
            key.sort();
            let before = key.len();
            key.dedup();
            if key.len() != before {
                return Err(Error::Design(format!("term `{}` repeats a variable", t.label())));
            }
            if key.contains(&self.response) {
                return Err(Error::Design(format!(
                    "response `{}` also appears as a regressor",
                    self.response
                )));
            }
            if seen.contains(&key) {
                return Err(Error::Design(format!("duplicate term `{}` in formula", t.label())));
            }
            seen.push(key);
        }
        Ok(())
    }

    /// Distinct variables used by the terms, first-appearance order.
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in self.terms.iter().flat_map(|t| &t.factors) {
            if !out.contains(f) {
                out.push(f.clone());
            }
        }
        out
    }

    pub fn without_term(&self, label: &str) -> Self {
        Self {
            response: self.response.clone(),
            terms: self.terms.iter().filter(|t| t.label() != label).cloned().collect(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ ", self.response)?;
        if self.terms.is_empty() {
            return f.write_str("1");
        }
        let labels: Vec<String> = self.terms.iter().map(Term::label).collect();
        f.write_str(&labels.join(" + "))
    }
}

impl FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lhs, rhs) = s
            .split_once('~')
            .ok_or_else(|| Error::Design(format!("formula `{s}` lacks `~`")))?;
        let rhs = rhs.trim();
        let terms: Vec<&str> = if rhs == "1" || rhs.is_empty() {
            Vec::new()
        } else {
            rhs.split('+').map(str::trim).collect()
        };
        Formula::new(lhs.trim(), &terms)
    }
}

impl TryFrom<String> for Formula {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Formula> for String {
    fn from(f: Formula) -> String {
        f.to_string()
    }
}
