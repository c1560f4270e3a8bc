use serde::{Deserialize, Serialize};

use super::design::DesignMatrix;
use super::distributions::inv_norm_cdf;
use super::ols::RegressionFit;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, HouseholderQr};
use crate::Scalar;

/// Data behind the Q-Q, scale-location and residual-vs-leverage plots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics<T> {
    /// Internally studentized residuals `e_i / (σ̂ √(1 − h_ii))`, observation order.
    pub standardized_residuals: Vec<T>,
    pub leverages: Vec<T>,
    /// `(Φ⁻¹((i − 0.5)/n), sorted standardized residual)`.
    pub qq: Vec<(T, T)>,
    /// `(fitted, √|standardized residual|)`.
    pub scale_location: Vec<(T, T)>,
    /// `(leverage, standardized residual)`.
    pub residual_leverage: Vec<(T, T)>,
}

pub fn diagnostics<T: Scalar>(fit: &RegressionFit<T>, design: &DesignMatrix<T>) -> Result<Diagnostics<T>> {
    let n = fit.nobs();
    if design.nobs() != n {
        return Err(Error::Invalid("fit and design differ in observations".into()));
    }
    let leverages = HouseholderQr::new(&design.x).leverages();
    let standardized: Vec<T> = fit
        .residuals
        .iter()
        .zip(&leverages)
        .map(|(&e, &h)| {
            let denom = fit.sigma * (T::one() - h).max(T::zero()).sqrt();
            if denom > T::zero() {
                e / denom
            } else {
                T::zero()
            }
        })
        .collect();
    let mut sorted = standardized.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let nf = T::from_usize_lossy(n);
    let qq = sorted
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let q = (T::from_usize_lossy(i) + T::lit(0.5)) / nf;
            Ok((inv_norm_cdf(q)?, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let scale_location = fit
        .fitted
        .iter()
        .zip(&standardized)
        .map(|(&f, &r)| (f, r.abs().sqrt()))
        .collect();
    let residual_leverage = leverages.iter().copied().zip(standardized.iter().copied()).collect();
    Ok(Diagnostics {
        standardized_residuals: standardized,
        leverages,
        qq,
        scale_location,
        residual_leverage,
    })
}

/// Smallest eigenvalue of `XᵀX` and whether it signals collinearity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramCheck<T> {
    pub min_eigenvalue: T,
    pub max_eigenvalue: T,
    /// Frobenius norm of `XᵀX`.
    pub norm: T,
    /// `relative_threshold · norm`.
    pub threshold: T,
    pub collinear: bool,
}

pub const DEFAULT_GRAM_THRESHOLD: f64 = 1e-8;

/// Cyclic-Jacobi eigenvalues of the Gram matrix of the design.
pub fn gram_min_eigenvalue<T: Scalar>(design: &DesignMatrix<T>, relative_threshold: T) -> Result<GramCheck<T>> {
    if design.nobs() == 0 || design.nparams() == 0 {
        return Err(Error::Invalid("empty design".into()));
    }
    let g = design.x.gram();
    let eig = symmetric_eigen(&g)?;
    let norm = g.frobenius_norm();
    let threshold = relative_threshold * norm;
    let min_eigenvalue = eig.values[0];
    Ok(GramCheck {
        min_eigenvalue,
        max_eigenvalue: *eig.values.last().expect("nonempty"),
        norm,
        threshold,
        collinear: min_eigenvalue < threshold,
    })
}
