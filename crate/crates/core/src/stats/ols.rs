use serde::{Deserialize, Serialize};

use super::design::DesignMatrix;
use super::distributions::{f_pvalue, student_t_pvalue};
use crate::error::{Error, Result};
use crate::linalg::{HouseholderQr, Matrix};
use crate::Scalar;

/// Ordinary least squares estimates with classical inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit<T> {
    pub response: String,
    pub column_labels: Vec<String>,
    pub coefficients: Vec<T>,
    pub std_errors: Vec<T>,
    pub t_values: Vec<T>,
    /// Two-sided Student t p-values.
    pub p_values: Vec<T>,
    pub fitted: Vec<T>,
    pub residuals: Vec<T>,
    /// Residual sum of squares.
    pub ssr: T,
    /// Total sum of squares about the mean.
    pub sst: T,
    pub r2: T,
    pub adj_r2: T,
    /// `2(p + 1) + n [ln(2π SSR / n) + 1]`: Gaussian likelihood with the variance counted.
    pub aic: T,
    pub df_resid: usize,
    pub sigma: T,
    /// Overall F test against the intercept-only model (absent for that model).
    pub f_statistic: Option<T>,
    pub f_pvalue: Option<T>,
    /// `(XᵀX)⁻¹`.
    pub unscaled_cov: Matrix<T>,
}

impl<T: Scalar> RegressionFit<T> {
    pub fn nobs(&self) -> usize {
        self.residuals.len()
    }

    pub fn nparams(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficient(&self, label: &str) -> Option<T> {
        self.column_labels
            .iter()
            .position(|l| l == label)
            .map(|j| self.coefficients[j])
    }
}

/// Residual sum of squares only; used for nested-model comparisons.
pub fn residual_sum_of_squares<T: Scalar>(d: &DesignMatrix<T>) -> Result<T> {
    let qr = factor(d)?;
    let qty = qr.qt_mul(&d.y);
    Ok(qty[qr.rank()..].iter().map(|&v| v * v).sum())
}

fn factor<T: Scalar>(d: &DesignMatrix<T>) -> Result<HouseholderQr<T>> {
    let (n, p) = (d.nobs(), d.nparams());
    if n <= p {
        return Err(Error::Underdetermined { n, p });
    }
    let qr = HouseholderQr::new(&d.x);
    if !qr.is_full_rank() {
        return Err(Error::RankDeficient {
            columns: qr
                .dependent_columns()
                .iter()
                .map(|&j| d.columns[j].label.clone())
                .collect(),
        });
    }
    Ok(qr)
}

/// Least squares through a Householder QR of the design.
pub fn ols_fit<T: Scalar>(d: &DesignMatrix<T>) -> Result<RegressionFit<T>> {
    let qr = factor(d)?;
    let n = d.nobs();
    let p = d.nparams();
    let nf = T::from_usize_lossy(n);
    let beta = qr.solve_least_squares(&d.y);
    let fitted = d.x.matvec(&beta);
    let residuals: Vec<T> = d.y.iter().zip(&fitted).map(|(&y, &f)| y - f).collect();
    let ssr: T = residuals.iter().map(|&e| e * e).sum();
    let mean = d.y.iter().copied().sum::<T>() / nf;
    let sst: T = d.y.iter().map(|&y| (y - mean) * (y - mean)).sum();
    if sst == T::zero() {
        return Err(Error::ConstantResponse(d.response.clone()));
    }
    let df_resid = n - p;
    let dff = T::from_usize_lossy(df_resid);
    let sigma2 = ssr / dff;
    let sigma = sigma2.sqrt();
    let unscaled_cov = qr.unscaled_covariance();
    let mut std_errors = Vec::with_capacity(p);
    let mut t_values = Vec::with_capacity(p);
    let mut p_values = Vec::with_capacity(p);
    for j in 0..p {
        let se = (sigma2 * unscaled_cov[(j, j)]).sqrt();
        let t = if se > T::zero() {
            beta[j] / se
        } else if beta[j] == T::zero() {
            T::zero()
        } else {
            beta[j].signum() * T::infinity()
        };
        std_errors.push(se);
        t_values.push(t);
        p_values.push(student_t_pvalue(t, dff)?);
    }
    let r2 = (T::one() - ssr / sst).max(T::zero()).min(T::one());
    let adj_r2 = T::one() - (T::one() - r2) * T::from_usize_lossy(n - 1) / dff;
    let two_pi = T::lit(2.0 * std::f64::consts::PI);
    let aic = T::lit(2.0) * T::from_usize_lossy(p + 1) + nf * ((two_pi * ssr / nf).ln() + T::one());
    let (f_statistic, f_p) = if p > 1 {
        let df_model = T::from_usize_lossy(p - 1);
        let f = if ssr > T::zero() {
            ((sst - ssr).max(T::zero()) / df_model) / sigma2
        } else {
            T::infinity()
        };
        (Some(f), Some(f_pvalue(f, df_model, dff)?))
    } else {
        (None, None)
    };
    Ok(RegressionFit {
        response: d.response.clone(),
        column_labels: d.column_labels(),
        coefficients: beta,
        std_errors,
        t_values,
        p_values,
        fitted,
        residuals,
        ssr,
        sst,
        r2,
        adj_r2,
        aic,
        df_resid,
        sigma,
        f_statistic,
        f_pvalue: f_p,
        unscaled_cov,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{encode_design, EncodeOptions, Formula, Row};

    fn design(x: &[f64], y: &[f64], formula: &str) -> DesignMatrix<f64> {
        let rows: Vec<Row> = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| Row::new().num("x", a).num("y", b))
            .collect();
        encode_design(&rows, &formula.parse::<Formula>().unwrap(), &EncodeOptions::default()).unwrap()
    }

    #[test]
    fn exact_line() {
        let fit = ols_fit(&design(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0], "y ~ x")).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|e| e.abs() < 1e-12));
        assert!(fit.p_values.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn intercept_only_is_the_mean() {
        let y = [2.0, 4.0, 9.0, 1.0];
        let fit = ols_fit(&design(&[0.0; 4], &y, "y ~ 1")).unwrap();
        assert!((fit.coefficients[0] - 4.0).abs() < 1e-12);
        assert_eq!(fit.r2, 0.0);
        assert!(fit.f_statistic.is_none());
    }

    #[test]
    fn collinear_columns_are_named() {
        let rows: Vec<Row> = (0..6)
            .map(|i| {
                let x = i as f64;
                Row::new().num("x", x).num("z", 2.0 * x).num("y", x * x)
            })
            .collect();
        let f: Formula = "y ~ x + z".parse().unwrap();
        let d: DesignMatrix<f64> = encode_design(&rows, &f, &EncodeOptions::default()).unwrap();
        match ols_fit(&d) {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, ["z"]),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn constant_response_is_an_error() {
        let d = design(&[0.0, 1.0, 2.0, 3.0], &[1.0; 4], "y ~ x");
        assert!(matches!(ols_fit(&d), Err(Error::ConstantResponse(_))));
    }
}
