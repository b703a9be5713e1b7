//! Partial canonical correlation between the present of one set and the lag
//! of another, given the conditional covariance blocks.
//!
//! With `C` the conditional blocks, the squared canonical correlations are
//! the eigenvalues of
//!
//! ```text
//! A = C_ii^{-1/2} C_ij C_jj^{-1} C_ji C_ii^{-1/2}
//! ```
//!
//! and equivalently of `B = C_jj^{-1/2} C_ji C_ii^{-1} C_ij C_jj^{-1/2}`.
//! Only `A` is decomposed; the cause-side weights are recovered from
//! `b ~ C_jj^{-1} C_ji a`.

use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lagcov::{assemble_blocks, conditional_cov, Conditioning, ConditionalCovariance, Ridge};
use crate::linalg::{max_asymmetry, pinv_sym, sym_eigen_desc, sym_spectral_map, symmetrize};
use crate::panel::{LaggedDesign, SetPartition};
use crate::{Matrix, Vector};

/// Default relative eigenvalue threshold for inverse square roots.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Eigenvalues above `1 + CLAMP_WARN` are flagged before clamping.
pub const CLAMP_WARN: f64 = 1e-6;

const TIE_TOL: f64 = 1e-9;

/// A block whose trace falls below this fraction of its pre-conditioning
/// trace is considered annihilated by the conditioning set.
const DEGENERATE_REL: f64 = 1e-10;

/// Pseudo inverse square root of a symmetric PSD matrix. Eigenvalues at or
/// below `tol * largest` are treated as zero.
pub fn inv_sqrt_sym(m: &Matrix, tol: f64) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Shape(alloc::format!("{:?} is not square", m.shape())));
    }
    let asym = max_asymmetry(m);
    if asym > 1e-10 * m.trace().abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Asymmetric(asym));
    }
    sym_spectral_map(m, tol, |l| 1.0 / libm::sqrt(l))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PccaWarning {
    /// An eigenvalue exceeded one by more than the rounding allowance.
    Clamped(f64),
    /// Spectra of `A` and `B` disagree (debug builds only).
    SpectralMismatch(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PccaResult {
    /// Largest partial canonical correlation, `sqrt(eigenvalues[0])`.
    pub rho: f64,
    /// Squared canonical correlations, descending, `min(m, n)` of them.
    pub eigenvalues: Vec<f64>,
    /// Effect-side weights, each with `a' C_ii a = 1`.
    pub a_vectors: Vec<Vec<f64>>,
    /// Cause-side weights, each with `b' C_jj b = 1`.
    pub b_vectors: Vec<Vec<f64>>,
    /// Unit-norm eigenvectors of `A` the effect weights were mapped from.
    pub whitened_a: Vec<Vec<f64>>,
    pub warnings: Vec<PccaWarning>,
}

fn check_nondegenerate(cond: &ConditionalCovariance) -> Result<()> {
    let (ii, jj) = cond.reference_traces();
    if !(cond.c_ii().trace() > DEGENERATE_REL * ii) {
        return Err(Error::DegenerateSet("effect set"));
    }
    if !(cond.c_jj().trace() > DEGENERATE_REL * jj) {
        return Err(Error::DegenerateSet("cause set"));
    }
    Ok(())
}

fn whitened(cond: &ConditionalCovariance, tol: f64) -> Result<(Matrix, Matrix, Matrix)> {
    check_nondegenerate(cond)?;
    let r_ii = inv_sqrt_sym(cond.c_ii(), tol).map_err(|e| match e {
        Error::ZeroMatrix => Error::DegenerateSet("effect set"),
        e => e,
    })?;
    let r_jj = inv_sqrt_sym(cond.c_jj(), tol).map_err(|e| match e {
        Error::ZeroMatrix => Error::DegenerateSet("cause set"),
        e => e,
    })?;
    // K = C_ii^{-1/2} C_ij C_jj^{-1/2}; A = K K', B = K' K.
    let k = &r_ii * cond.c_ij() * &r_jj;
    Ok((r_ii, r_jj, k))
}

/// Unclamped spectra of `A` (length `m`) and `B` (length `n`), descending.
pub fn pcca_spectra(cond: &ConditionalCovariance, tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_nondegenerate(cond)?;
    let r_ii = inv_sqrt_sym(cond.c_ii(), tol)?;
    let r_jj = inv_sqrt_sym(cond.c_jj(), tol)?;
    let jj_inv = pinv_sym(cond.c_jj(), tol)?;
    let ii_inv = pinv_sym(cond.c_ii(), tol)?;
    let a = symmetrize(&(&r_ii * cond.c_ij() * jj_inv * cond.c_ji() * &r_ii));
    let b = symmetrize(&(&r_jj * cond.c_ji() * ii_inv * cond.c_ij() * &r_jj));
    Ok((sym_eigen_desc(&a).0, sym_eigen_desc(&b).0))
}

/// Largest partial canonical correlation only.
pub fn leading_rho(cond: &ConditionalCovariance, tol: f64) -> Result<f64> {
    let (_, _, k) = whitened(cond, tol)?;
    let a = symmetrize(&(&k * k.transpose()));
    let top = sym_eigen_desc(&a).0[0];
    Ok(libm::sqrt(top.clamp(0.0, 1.0)))
}

fn rounded(v: &Vector) -> impl Iterator<Item = i64> + '_ {
    v.iter().map(|x| libm::round(x / TIE_TOL) as i64)
}

fn flip_to_positive_peak(v: &mut Vector) -> bool {
    let peak = v.iter().copied().fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
    if peak < 0.0 {
        v.neg_mut();
        true
    } else {
        false
    }
}

pub fn solve_pcca(cond: &ConditionalCovariance, tol: f64) -> Result<PccaResult> {
    let (r_ii, r_jj, k) = whitened(cond, tol)?;
    let (m, n) = (cond.c_ii().nrows(), cond.c_jj().nrows());
    let a_mat = symmetrize(&(&k * k.transpose()));
    let (values, vectors) = sym_eigen_desc(&a_mat);
    let rank = m.min(n);
    let mut warnings = Vec::new();

    struct Pair {
        lambda: f64,
        e: Vector,
        a: Vector,
    }
    let mut pairs: Vec<Pair> = (0..rank)
        .map(|d| {
            let raw = values[d];
            if raw > 1.0 + CLAMP_WARN {
                warnings.push(PccaWarning::Clamped(raw));
            }
            let mut e = vectors.column(d).into_owned();
            let mut a = &r_ii * &e;
            if flip_to_positive_peak(&mut a) {
                e.neg_mut();
            }
            Pair { lambda: raw.clamp(0.0, 1.0), e, a }
        })
        .collect();
    pairs.sort_by(|x, y| {
        if (x.lambda - y.lambda).abs() > TIE_TOL {
            y.lambda.total_cmp(&x.lambda)
        } else {
            rounded(&x.a).cmp(rounded(&y.a))
        }
    });

    // Fallback basis for directions with (near) zero correlation.
    let mut b_basis: Option<Matrix> = None;
    let mut b_vectors = Vec::with_capacity(rank);
    for (d, p) in pairs.iter().enumerate() {
        let f = k.transpose() * &p.e;
        let norm = f.norm();
        let b = if norm > 1e-10 {
            &r_jj * (f / norm)
        } else {
            let basis = b_basis.get_or_insert_with(|| sym_eigen_desc(&symmetrize(&(k.transpose() * &k))).1);
            let mut b = &r_jj * basis.column(d);
            flip_to_positive_peak(&mut b);
            b
        };
        b_vectors.push(b);
    }

    if cfg!(debug_assertions) {
        let b_mat = symmetrize(&(k.transpose() * &k));
        let b_vals = sym_eigen_desc(&b_mat).0;
        let gap = (0..rank).map(|d| (values[d] - b_vals[d]).abs()).fold(0.0, f64::max);
        if gap > 1e-8 {
            warnings.push(PccaWarning::SpectralMismatch(gap));
        }
    }

    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
    Ok(PccaResult {
        rho: libm::sqrt(eigenvalues[0]),
        eigenvalues,
        a_vectors: pairs.iter().map(|p| p.a.as_slice().to_vec()).collect(),
        b_vectors: b_vectors.iter().map(|b| b.as_slice().to_vec()).collect(),
        whitened_a: pairs.iter().map(|p| p.e.as_slice().to_vec()).collect(),
        warnings,
    })
}

/// Assembles, conditions and solves for the edge `cause -> effect`.
pub fn partial_cca(
    design: &LaggedDesign,
    partition: &SetPartition,
    effect: &str,
    cause: &str,
    rule: Conditioning,
    ridge: Ridge,
) -> Result<PccaResult> {
    let blocks = assemble_blocks(design, partition, effect, cause, rule)?;
    let cond = conditional_cov(&blocks, ridge)?;
    solve_pcca(&cond, DEFAULT_TOL)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Loading {
    pub series: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    /// Same sign: the two series move together.
    Direct,
    /// Opposite signs.
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationPair {
    pub first: String,
    pub second: String,
    pub relation: Relation,
}

/// First canonical weights per series, ranked by magnitude.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadingReport {
    pub effect: Vec<Loading>,
    pub cause: Vec<Loading>,
    /// Every pair of series with non-zero weights, in ranked order.
    pub relations: Vec<RelationPair>,
}

fn ranked(names: &[String], weights: &[f64]) -> Vec<Loading> {
    let mut out: Vec<Loading> =
        names.iter().zip(weights).map(|(s, &w)| Loading { series: s.clone(), weight: w }).collect();
    let key = |w: f64| libm::round(w.abs() / 1e-12) as i64;
    out.sort_by(|x, y| key(y.weight).cmp(&key(x.weight)).then_with(|| x.series.cmp(&y.series)));
    out
}

/// Signed weight report for the leading canonical pair. `effect_names` and
/// `cause_names` follow the column order the result was computed with.
pub fn canonical_loadings(result: &PccaResult, effect_names: &[String], cause_names: &[String]) -> LoadingReport {
    let effect = ranked(effect_names, &result.a_vectors[0]);
    let cause = ranked(cause_names, &result.b_vectors[0]);
    let all: Vec<&Loading> = effect.iter().chain(&cause).filter(|l| l.weight != 0.0).collect();
    let mut relations = Vec::new();
    for (x, first) in all.iter().enumerate() {
        for second in &all[x + 1..] {
            let relation = if (first.weight > 0.0) == (second.weight > 0.0) {
                Relation::Direct
            } else {
                Relation::Inverse
            };
            relations.push(RelationPair { first: first.series.clone(), second: second.series.clone(), relation });
        }
    }
    LoadingReport { effect, cause, relations }
}
