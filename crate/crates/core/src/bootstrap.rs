//! Overlapping-block bootstrap test of `H0: rho = 0` for one directed edge.
//!
//! Resampling works on the lag-aligned frame: a drawn block carries whole
//! `(present, lagged)` row pairs, so joins between blocks never become lag
//! transitions. Two independent block streams are drawn. The effect side
//! (present columns of the effect set) follows stream A and the cause side
//! (lagged columns of the cause set) follows stream B, which destroys any
//! lagged dependence between them while keeping each side's serial and
//! contemporaneous structure. The conditioning columns follow the stream
//! chosen by [`XStream`].

use alloc::string::ToString;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lagcov::{conditional_cov, conditioning_columns, BlockCovariance, Conditioning, Ridge};
use crate::panel::{LaggedDesign, SetPartition};
use crate::pcca::{leading_rho, DEFAULT_TOL};
use crate::rng::substream;
use crate::Matrix;

/// Redraws allowed for a replicate whose resample is numerically singular.
pub const MAX_REDRAWS: u64 = 3;

/// Failed-replicate fraction above which a test is aborted.
pub const MAX_FAILED_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum BlockLength {
    /// `ceil(N^(1/3))` for `N` aligned rows.
    #[default]
    Auto,
    Fixed(usize),
}

impl BlockLength {
    pub fn resolve(self, rows: usize) -> usize {
        match self {
            BlockLength::Fixed(l) => l,
            BlockLength::Auto => {
                let mut l = 1usize;
                while l * l * l < rows {
                    l += 1;
                }
                l
            }
        }
    }
}

/// Stream that carries the conditioning columns in a resample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum XStream {
    /// Travel with the effect set.
    #[default]
    Effect,
    /// Travel with the cause set.
    Cause,
    /// A third independent stream.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub block_length: BlockLength,
    pub alpha: f64,
    pub seed: u64,
    pub x_stream: XStream,
    #[serde(skip)]
    pub conditioning: Conditioning,
    #[serde(skip)]
    pub ridge: Ridge,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 1000,
            block_length: BlockLength::Auto,
            alpha: 0.05,
            seed: 0,
            x_stream: XStream::Effect,
            conditioning: Conditioning::default(),
            ridge: Ridge::None,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("bootstrap replicates must be at least 1".to_string()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(alloc::format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.block_length == BlockLength::Fixed(0) {
            return Err(Error::Config("block length must be at least 1".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GcTestResult {
    pub rho_hat: f64,
    pub null_rhos: Vec<f64>,
    pub p_value: f64,
    pub block_length: usize,
    pub replicates_used: usize,
    pub failed_replicates: usize,
    pub alpha: f64,
    pub significant: bool,
}

/// The `rows - l + 1` overlapping windows of length `l` (0-based).
pub fn make_blocks(rows: usize, l: usize) -> Result<Vec<Range<usize>>> {
    if l == 0 || l > rows {
        return Err(Error::BlockLength { block: l, rows, reason: "must satisfy 1 <= l <= rows" });
    }
    Ok((0..=rows - l).map(|s| s..s + l).collect())
}

/// Row indices of one stream: blocks drawn with replacement, laid end to end
/// and truncated to `rows`.
fn draw_stream<R: Rng + ?Sized>(rows: usize, l: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(rows + l);
    while out.len() < rows {
        let start = rng.random_range(0..=rows - l);
        out.extend(start..start + l);
    }
    out.truncate(rows);
    out
}

/// One bootstrap resample of `design` for the edge `cause -> effect`.
pub fn resample_design<R: Rng + ?Sized>(
    design: &LaggedDesign,
    partition: &SetPartition,
    effect: &str,
    cause: &str,
    l: usize,
    x_stream: XStream,
    conditioning: Conditioning,
    rng: &mut R,
) -> Result<LaggedDesign> {
    let rows = design.rows();
    if l == 0 || l + 1 >= rows {
        return Err(Error::BlockLength { block: l, rows, reason: "resampling needs at least three windows" });
    }
    let names = design.names();
    let effect_cols = partition.columns(names, effect)?;
    let cause_cols = partition.columns(names, cause)?;
    let x_cols = conditioning_columns(names, partition, cause, conditioning)?;

    let a = draw_stream(rows, l, rng);
    let b = draw_stream(rows, l, rng);
    let c = match x_stream {
        XStream::Independent => Some(draw_stream(rows, l, rng)),
        _ => None,
    };
    let k = design.series_count();
    let present_src: Vec<&[usize]> = (0..k)
        .map(|col| if cause_cols.contains(&col) && !effect_cols.contains(&col) { &b[..] } else { &a[..] })
        .collect();
    let lagged_src: Vec<&[usize]> = (0..k)
        .map(|col| {
            if cause_cols.contains(&col) {
                &b[..]
            } else if x_cols.contains(&col) {
                match x_stream {
                    XStream::Effect => &a[..],
                    XStream::Cause => &b[..],
                    XStream::Independent => c.as_deref().unwrap_or(&a[..]),
                }
            } else {
                &a[..]
            }
        })
        .collect();
    let present = Matrix::from_fn(rows, k, |r, col| design.present()[(present_src[col][r], col)]);
    let lagged = Matrix::from_fn(rows, k, |r, col| design.lagged()[(lagged_src[col][r], col)]);
    LaggedDesign::from_parts(names.to_vec(), present, lagged)
}

fn edge_rho(design: &LaggedDesign, partition: &SetPartition, effect: &str, cause: &str, cfg: &BootstrapConfig) -> Result<f64> {
    let names = design.names();
    let blocks = BlockCovariance::from_columns(
        design,
        partition.columns(names, effect)?,
        partition.columns(names, cause)?,
        conditioning_columns(names, partition, cause, cfg.conditioning)?,
    )?;
    leading_rho(&conditional_cov(&blocks, cfg.ridge)?, DEFAULT_TOL)
}

/// Null statistic for bootstrap replicate `index`, or the last error if the
/// replicate stays singular after [`MAX_REDRAWS`] redraws.
pub fn bootstrap_replicate(
    design: &LaggedDesign,
    partition: &SetPartition,
    effect: &str,
    cause: &str,
    cfg: &BootstrapConfig,
    l: usize,
    index: usize,
) -> Result<f64> {
    let mut last = None;
    for attempt in 0..=MAX_REDRAWS {
        let mut rng = substream(cfg.seed, &[index as u64, attempt]);
        let resampled = resample_design(design, partition, effect, cause, l, cfg.x_stream, cfg.conditioning, &mut rng)?;
        match edge_rho(&resampled, partition, effect, cause, cfg) {
            Ok(rho) => return Ok(rho),
            Err(e) if e.is_numerical() => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or(Error::ZeroMatrix))
}

/// Checks the configuration against the design and returns the block length.
pub fn resolve_block_length(design: &LaggedDesign, cfg: &BootstrapConfig) -> Result<usize> {
    cfg.validate()?;
    let rows = design.rows();
    let l = cfg.block_length.resolve(rows);
    if l == 0 || 2 * l >= rows {
        return Err(Error::BlockLength { block: l, rows, reason: "the test needs l < rows / 2" });
    }
    Ok(l)
}

/// Turns the observed statistic and the replicate outcomes into a result.
pub fn summarize(rho_hat: f64, outcomes: Vec<Result<f64>>, l: usize, cfg: &BootstrapConfig) -> Result<GcTestResult> {
    let total = outcomes.len();
    let mut null_rhos = Vec::with_capacity(total);
    let mut failed = 0usize;
    let mut last = None;
    for o in outcomes {
        match o {
            Ok(r) => null_rhos.push(r),
            Err(e) => {
                failed += 1;
                last = Some(e);
            }
        }
    }
    if failed as f64 > MAX_FAILED_FRACTION * total as f64 || null_rhos.is_empty() {
        return Err(Error::TooManyFailures {
            failed,
            total,
            last: last.map(|e| e.to_string()).unwrap_or_default(),
        });
    }
    let exceed = null_rhos.iter().filter(|&&r| r >= rho_hat).count();
    let p_value = (1 + exceed) as f64 / (null_rhos.len() + 1) as f64;
    Ok(GcTestResult {
        rho_hat,
        replicates_used: null_rhos.len(),
        null_rhos,
        p_value,
        block_length: l,
        failed_replicates: failed,
        alpha: cfg.alpha,
        significant: p_value < cfg.alpha,
    })
}

/// Bootstrap test that `cause` does not Granger-cause `effect`.
pub fn gc_test(
    design: &LaggedDesign,
    partition: &SetPartition,
    effect: &str,
    cause: &str,
    cfg: &BootstrapConfig,
) -> Result<GcTestResult> {
    let l = resolve_block_length(design, cfg)?;
    let rho_hat = edge_rho(design, partition, effect, cause, cfg)?;
    let outcomes = (0..cfg.replicates)
        .map(|b| bootstrap_replicate(design, partition, effect, cause, cfg, l, b))
        .collect();
    summarize(rho_hat, outcomes, l, cfg)
}
