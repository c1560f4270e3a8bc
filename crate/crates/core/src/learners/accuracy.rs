use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::Scalar;

/// Accuracy of the model after step `k` on each test subset `i ≤ k`,
/// plus its accuracy on the union of subsets seen so far.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyMatrix<T> {
    // rows[k] has k + 1 entries
    rows: Vec<Vec<T>>,
    cumulative: Vec<T>,
}

impl<T: Scalar> AccuracyMatrix<T> {
    pub fn new(rows: Vec<Vec<T>>, cumulative: Vec<T>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Invalid("accuracy matrix needs at least one step".into()));
        }
        if cumulative.len() != rows.len() {
            return Err(Error::Invalid("one cumulative accuracy per step is required".into()));
        }
        for (k, row) in rows.iter().enumerate() {
            if row.len() != k + 1 {
                return Err(Error::Invalid(format!(
                    "row {} must have {} entries, found {}",
                    k + 1,
                    k + 1,
                    row.len()
                )));
            }
        }
        let in_range = |x: &T| *x >= T::zero() && *x <= T::one();
        if !rows.iter().flatten().chain(&cumulative).all(in_range) {
            return Err(Error::Invalid("accuracies must lie in [0, 1]".into()));
        }
        Ok(Self { rows, cumulative })
    }

    /// Number of steps `K`.
    pub fn num_steps(&self) -> usize {
        self.rows.len()
    }

    /// Accuracy of the model after step `k` on subset `i` (both 0-based, `i ≤ k`).
    pub fn get(&self, k: usize, i: usize) -> T {
        self.rows[k][i]
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.rows[k]
    }

    /// Accuracy after step `k` on all classes seen so far (0-based).
    pub fn cumulative(&self, k: usize) -> T {
        self.cumulative[k]
    }

    pub fn cumulative_all(&self) -> &[T] {
        &self.cumulative
    }

    /// Columns `step,subset,accuracy`, 1-based; cumulative rows use subset `all`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("step,subset,accuracy\n");
        for (k, row) in self.rows.iter().enumerate() {
            for (i, a) in row.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", k + 1, i + 1, a);
            }
            let _ = writeln!(out, "{},all,{}", k + 1, self.cumulative[k]);
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<T>> = Vec::new();
        let mut cumulative: Vec<T> = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| Error::Parse {
                line: i + 1,
                message: m.to_string(),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(err("expected 3 fields"));
            }
            let k: usize = f[0].parse().map_err(|_| err("bad step"))?;
            let a: T = f[2].parse().map_err(|_| err("bad accuracy"))?;
            if k == 0 {
                return Err(err("steps are 1-based"));
            }
            if f[1] == "all" {
                if cumulative.len() + 1 != k {
                    return Err(err("cumulative rows out of order"));
                }
                cumulative.push(a);
            } else {
                let s: usize = f[1].parse().map_err(|_| err("bad subset"))?;
                if rows.len() < k {
                    rows.resize(k, Vec::new());
                }
                if rows[k - 1].len() + 1 != s {
                    return Err(err("subset entries out of order"));
                }
                rows[k - 1].push(a);
            }
        }
        Self::new(rows, cumulative)
    }
}
