//! Full VAR(1) least-squares fit and the blockwise Wald test of Granger
//! non-causality between sets.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::Cholesky;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{least_squares, symmetrize};
use crate::panel::{LaggedDesign, SetPartition};
use crate::special::chi2_sf;
use crate::{Matrix, Vector};

/// Equation-by-equation OLS fit of `y_t = c + A y_{t-1} + e_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarFit {
    pub names: Vec<String>,
    /// Entry `(r, c)` is the effect of lagged series `c` on present series `r`.
    pub coefficients: Matrix,
    pub intercepts: Vector,
    /// Residual covariance with divisor `N - k - 1`.
    pub residual_cov: Matrix,
    /// `(X'X)^{-1}` for the regressors `[1, y_{t-1}]`; together with
    /// `residual_cov` this is the Kronecker-factored coefficient covariance.
    pub xtx_inv: Matrix,
    pub fitted: Matrix,
    pub residuals: Matrix,
}

impl VarFit {
    /// Covariance of coefficients `(r, c)` and `(r2, c2)`.
    pub fn coef_cov(&self, r: usize, c: usize, r2: usize, c2: usize) -> f64 {
        self.residual_cov[(r, r2)] * self.xtx_inv[(c + 1, c2 + 1)]
    }

    pub fn std_error(&self, r: usize, c: usize) -> f64 {
        libm::sqrt(self.coef_cov(r, c, r, c))
    }
}

pub fn fit_var1(design: &LaggedDesign) -> Result<VarFit> {
    let (rows, k) = (design.rows(), design.series_count());
    if rows <= k + 1 {
        return Err(Error::Shape(alloc::format!("VAR(1) with {k} series needs more than {} aligned rows, got {rows}", k + 1)));
    }
    let x = Matrix::from_fn(rows, k + 1, |r, c| if c == 0 { 1.0 } else { design.lagged()[(r, c - 1)] });
    let y = design.present();
    let (coef, xtx_inv) = least_squares(&x, y)?;
    let fitted = &x * &coef;
    let residuals = y - &fitted;
    let dof = (rows - k - 1) as f64;
    let residual_cov = symmetrize(&(residuals.tr_mul(&residuals) / dof));
    Ok(VarFit {
        names: design.names().to_vec(),
        coefficients: coef.rows(1, k).transpose(),
        intercepts: coef.row(0).transpose(),
        residual_cov,
        xtx_inv,
        fitted,
        residuals,
    })
}

/// Reference distribution for the Wald statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum WaldReference {
    /// Asymptotic chi-square with `m * n` degrees of freedom.
    #[default]
    ChiSquare,
    /// McKeon's F approximation to the Hotelling-Lawley trace, which the
    /// statistic equals up to the residual degrees of freedom. Corrects the
    /// chi-square's over-rejection in short panels.
    HotellingLawleyF,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaldResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Joint test that every coefficient from the cause set's lags to the
/// effect set's present values is zero, against chi-square with `m * n`
/// degrees of freedom.
pub fn wald_block_test(fit: &VarFit, partition: &SetPartition, effect: &str, cause: &str) -> Result<WaldResult> {
    wald_block_test_with(fit, partition, effect, cause, WaldReference::ChiSquare)
}

/// Upper tail of `F(d1, d2)` at `x`.
fn f_sf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    crate::special::beta_inc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x))
}

fn hotelling_lawley_p(statistic: f64, m: usize, n: usize, resid_dof: usize) -> f64 {
    let (p, qh, ve) = (m as f64, n as f64, resid_dof as f64);
    let trace = statistic / ve;
    let a = p * qh;
    let big_b = (ve + qh - p - 1.0) * (ve - 1.0) / ((ve - p - 3.0) * (ve - p));
    let b = 4.0 + (a + 2.0) / (big_b - 1.0);
    let c = a * (b - 2.0) / (b * (ve - p - 1.0));
    f_sf(trace / c, a, b)
}

pub fn wald_block_test_with(
    fit: &VarFit,
    partition: &SetPartition,
    effect: &str,
    cause: &str,
    reference: WaldReference,
) -> Result<WaldResult> {
    let rows = partition.columns(&fit.names, effect)?;
    let cols = partition.columns(&fit.names, cause)?;
    let pairs: Vec<(usize, usize)> = rows.iter().flat_map(|&r| cols.iter().map(move |&c| (r, c))).collect();
    let d = pairs.len();
    let theta = Vector::from_iterator(d, pairs.iter().map(|&(r, c)| fit.coefficients[(r, c)]));
    let cov = Matrix::from_fn(d, d, |a, b| {
        let (r, c) = pairs[a];
        let (r2, c2) = pairs[b];
        fit.coef_cov(r, c, r2, c2)
    });
    let chol = Cholesky::new(cov).ok_or(Error::SingularWald)?;
    let scaled = chol.l().solve_lower_triangular(&theta).ok_or(Error::SingularWald)?;
    let statistic = scaled.norm_squared();
    if !statistic.is_finite() {
        return Err(Error::SingularWald);
    }
    let p_value = match reference {
        WaldReference::ChiSquare => chi2_sf(statistic, d as f64),
        WaldReference::HotellingLawleyF => {
            let resid_dof = fit.residuals.nrows() - fit.coefficients.ncols() - 1;
            if resid_dof < rows.len() + 4 {
                return Err(Error::Config(alloc::format!(
                    "F reference needs more than {} residual degrees of freedom",
                    rows.len() + 3
                )));
            }
            hotelling_lawley_p(statistic, rows.len(), cols.len(), resid_dof)
        }
    };
    Ok(WaldResult { statistic, df: d, p_value })
}
