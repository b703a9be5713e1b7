//! Sample covariance blocks of (present effect set, lagged cause set,
//! lagged conditioning set) and their Schur-complement conditioning.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{column_means, pinv_sym, symmetrize};
use crate::panel::{LaggedDesign, SetPartition};
use crate::Matrix;

/// Relative eigenvalue cut-off for the conditioning-block pseudo-inverse.
pub const PINV_REL_TOL: f64 = 1e-12;

/// Cross-covariance of the columns of `u` and `v` with divisor `N - 1`.
pub fn sample_cov(u: &Matrix, v: &Matrix) -> Result<Matrix> {
    let n = u.nrows();
    if v.nrows() != n {
        return Err(Error::Shape(alloc::format!("{} rows vs {} rows", n, v.nrows())));
    }
    if n < 2 {
        return Err(Error::Shape(alloc::format!("need at least 2 rows, got {n}")));
    }
    let uc = centered(u);
    let vc = centered(v);
    Ok(uc.tr_mul(&vc) / (n as f64 - 1.0))
}

fn centered(m: &Matrix) -> Matrix {
    let means = column_means(m);
    let mut out = m.clone();
    for (mut col, mean) in out.column_iter_mut().zip(means.iter()) {
        col.add_scalar_mut(-mean);
    }
    out
}

/// Which lagged series enter the conditioning set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conditioning {
    /// Also condition on series that belong to no set.
    pub include_unassigned: bool,
}

impl Default for Conditioning {
    fn default() -> Self {
        Self { include_unassigned: true }
    }
}

/// Conditioning columns for the edge `cause -> effect`: every lagged series
/// outside the cause set (optionally skipping unassigned series).
pub fn conditioning_columns(
    names: &[alloc::string::String],
    partition: &SetPartition,
    cause: &str,
    rule: Conditioning,
) -> Result<Vec<usize>> {
    let cause_cols = partition.columns(names, cause)?;
    Ok((0..names.len())
        .filter(|c| !cause_cols.contains(c))
        .filter(|&c| rule.include_unassigned || partition.is_assigned(&names[c]))
        .collect())
}

/// Partitioned covariance of `(present effect set, lagged cause set, lagged X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCovariance {
    pub s_ii: Matrix,
    pub s_ij: Matrix,
    pub s_ix: Matrix,
    pub s_jj: Matrix,
    pub s_jx: Matrix,
    pub s_xx: Matrix,
    /// Design column indices of the effect set, cause set and conditioning set.
    pub effect_columns: Vec<usize>,
    pub cause_columns: Vec<usize>,
    pub x_columns: Vec<usize>,
    /// Aligned rows the covariances were estimated from.
    pub rows: usize,
}

impl BlockCovariance {
    /// Builds the blocks from explicit present/lagged columns of `design`.
    pub fn from_columns(
        design: &LaggedDesign,
        effect_columns: Vec<usize>,
        cause_columns: Vec<usize>,
        x_columns: Vec<usize>,
    ) -> Result<Self> {
        let rows = design.rows();
        let q = x_columns.len();
        if q > 0 && q + 1 >= rows {
            return Err(Error::RankDeficient { q, rows });
        }
        let (m, n) = (effect_columns.len(), cause_columns.len());
        let mut z = Matrix::zeros(rows, m + n + q);
        for (k, &c) in effect_columns.iter().enumerate() {
            z.set_column(k, &design.present().column(c));
        }
        for (k, &c) in cause_columns.iter().chain(&x_columns).enumerate() {
            z.set_column(m + k, &design.lagged().column(c));
        }
        let full = symmetrize(&sample_cov(&z, &z)?);
        let block = |r0, nr, c0, nc| full.view((r0, c0), (nr, nc)).into_owned();
        Ok(Self {
            s_ii: block(0, m, 0, m),
            s_ij: block(0, m, m, n),
            s_ix: block(0, m, m + n, q),
            s_jj: block(m, n, m, n),
            s_jx: block(m, n, m + n, q),
            s_xx: block(m + n, q, m + n, q),
            effect_columns,
            cause_columns,
            x_columns,
            rows,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.s_ii.nrows(), self.s_jj.nrows(), self.s_xx.nrows())
    }

    /// The full `(m + n + q)` square matrix in `[i, j, x]` block order.
    pub fn assembled(&self) -> Matrix {
        let (m, n, q) = self.dims();
        let mut full = Matrix::zeros(m + n + q, m + n + q);
        let mut put = |r0: usize, c0: usize, b: &Matrix| {
            full.view_mut((r0, c0), b.shape()).copy_from(b);
            full.view_mut((c0, r0), (b.ncols(), b.nrows())).copy_from(&b.transpose());
        };
        put(0, 0, &self.s_ii);
        put(0, m, &self.s_ij);
        put(0, m + n, &self.s_ix);
        put(m, m, &self.s_jj);
        put(m, m + n, &self.s_jx);
        put(m + n, m + n, &self.s_xx);
        full
    }
}

/// Blocks for the edge `cause -> effect` (`effect == cause` is the set's self-loop).
pub fn assemble_blocks(
    design: &LaggedDesign,
    partition: &SetPartition,
    effect: &str,
    cause: &str,
    rule: Conditioning,
) -> Result<BlockCovariance> {
    let names = design.names();
    let effect_columns = partition.columns(names, effect)?;
    let cause_columns = partition.columns(names, cause)?;
    let x_columns = conditioning_columns(names, partition, cause, rule)?;
    BlockCovariance::from_columns(design, effect_columns, cause_columns, x_columns)
}

/// Diagonal loading applied to `S_xx` before inversion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Ridge {
    /// Plain pseudo-inverse.
    #[default]
    None,
    /// Add a fixed value to the diagonal.
    Absolute(f64),
    /// Add `factor * trace(S_xx) / q` to the diagonal.
    Relative(f64),
}

impl Ridge {
    fn amount(self, s_xx: &Matrix) -> f64 {
        match self {
            Ridge::None => 0.0,
            Ridge::Absolute(v) => v,
            Ridge::Relative(f) => f * s_xx.trace() / s_xx.nrows().max(1) as f64,
        }
    }
}

/// Covariance of (present effect set, lagged cause set) given the
/// conditioning set. `c_ji` is always the exact transpose of `c_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalCovariance {
    c_ii: Matrix,
    c_ij: Matrix,
    c_ji: Matrix,
    c_jj: Matrix,
    reference: (f64, f64),
}

impl ConditionalCovariance {
    pub fn new(c_ii: Matrix, c_ij: Matrix, c_jj: Matrix) -> Result<Self> {
        let reference = (c_ii.trace(), c_jj.trace());
        Self::with_reference(c_ii, c_ij, c_jj, reference)
    }

    /// `reference` holds the traces of the effect and cause blocks before
    /// conditioning, used to detect sets the conditioning wiped out.
    pub fn with_reference(c_ii: Matrix, c_ij: Matrix, c_jj: Matrix, reference: (f64, f64)) -> Result<Self> {
        let (m, n) = (c_ii.nrows(), c_jj.nrows());
        if !c_ii.is_square() || !c_jj.is_square() || c_ij.shape() != (m, n) || m == 0 || n == 0 {
            return Err(Error::Shape(alloc::format!(
                "blocks {:?}, {:?}, {:?}",
                c_ii.shape(),
                c_ij.shape(),
                c_jj.shape()
            )));
        }
        let c_ji = c_ij.transpose();
        Ok(Self { c_ii, c_ij, c_ji, c_jj, reference })
    }

    pub fn c_ii(&self) -> &Matrix {
        &self.c_ii
    }
    pub fn c_ij(&self) -> &Matrix {
        &self.c_ij
    }
    pub fn c_ji(&self) -> &Matrix {
        &self.c_ji
    }
    pub fn c_jj(&self) -> &Matrix {
        &self.c_jj
    }
    pub fn reference_traces(&self) -> (f64, f64) {
        self.reference
    }
}

pub fn conditional_cov(blocks: &BlockCovariance, ridge: Ridge) -> Result<ConditionalCovariance> {
    let q = blocks.s_xx.nrows();
    if q == 0 {
        return ConditionalCovariance::new(blocks.s_ii.clone(), blocks.s_ij.clone(), blocks.s_jj.clone());
    }
    let mut s_xx = blocks.s_xx.clone();
    let load = ridge.amount(&s_xx);
    if load < 0.0 || !load.is_finite() {
        return Err(Error::Config(alloc::format!("ridge must be finite and non-negative, got {load}")));
    }
    for d in 0..q {
        s_xx[(d, d)] += load;
    }
    let inv = pinv_sym(&s_xx, PINV_REL_TOL).map_err(|_| {
        let columns = (0..q)
            .filter(|&d| blocks.s_xx[(d, d)] <= 0.0)
            .map(|d| blocks.x_columns.get(d).copied().unwrap_or(d))
            .collect();
        Error::SingularConditioning { columns }
    })?;
    let w_i = &blocks.s_ix * &inv;
    let w_j = &blocks.s_jx * &inv;
    let c_ii = symmetrize(&(&blocks.s_ii - &w_i * blocks.s_ix.transpose()));
    let c_ij = &blocks.s_ij - &w_i * blocks.s_jx.transpose();
    let c_jj = symmetrize(&(&blocks.s_jj - &w_j * blocks.s_jx.transpose()));
    ConditionalCovariance::with_reference(c_ii, c_ij, c_jj, (blocks.s_ii.trace(), blocks.s_jj.trace()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{least_squares, sym_eigen_desc};
    use alloc::string::{String, ToString};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn variance_of_one_two_three() {
        let u = col(&[1.0, 2.0, 3.0]);
        assert!((sample_cov(&u, &u).unwrap()[(0, 0)] - 1.0).abs() < 1e-15);
        let v = col(&[3.0, 2.0, 1.0]);
        assert!((sample_cov(&u, &v).unwrap()[(0, 0)] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn sample_cov_matches_double_loop() {
        let u = randn(50, 3, 1);
        let v = randn(50, 2, 2);
        let got = sample_cov(&u, &v).unwrap();
        for r in 0..3 {
            for s in 0..2 {
                let mu: f64 = (0..50).map(|k| u[(k, r)]).sum::<f64>() / 50.0;
                let mv: f64 = (0..50).map(|k| v[(k, s)]).sum::<f64>() / 50.0;
                let mut acc = 0.0;
                for k in 0..50 {
                    acc += (u[(k, r)] - mu) * (v[(k, s)] - mv);
                }
                assert!((got[(r, s)] - acc / 49.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sample_cov_errors() {
        assert!(sample_cov(&randn(5, 1, 0), &randn(4, 1, 0)).is_err());
        assert!(sample_cov(&randn(1, 1, 0), &randn(1, 1, 0)).is_err());
    }

    fn design_from(present: Matrix, lagged: Matrix) -> LaggedDesign {
        let names: Vec<String> = (0..present.ncols()).map(|c| alloc::format!("s{c}")).collect();
        LaggedDesign::from_parts(names, present, lagged).unwrap()
    }

    #[test]
    fn empty_conditioning_passes_through() {
        let d = design_from(randn(30, 2, 3), randn(30, 2, 4));
        let b = BlockCovariance::from_columns(&d, alloc::vec![0], alloc::vec![1], alloc::vec![]).unwrap();
        let c = conditional_cov(&b, Ridge::None).unwrap();
        assert_eq!(c.c_ii(), &b.s_ii);
        assert_eq!(c.c_ij(), &b.s_ij);
        assert_eq!(c.c_jj(), &b.s_jj);
        assert_eq!(c.c_ji(), &b.s_ij.transpose());
    }

    #[test]
    fn self_conditioning_annihilates() {
        let present = randn(40, 2, 5);
        let mut lagged = randn(40, 2, 6);
        lagged.set_column(1, &present.column(0));
        let d = design_from(present, lagged);
        // X = lagged column 1, an exact copy of present column 0
        let b = BlockCovariance::from_columns(&d, alloc::vec![0], alloc::vec![0], alloc::vec![1]).unwrap();
        let c = conditional_cov(&b, Ridge::None).unwrap();
        assert!(c.c_ii()[(0, 0)].abs() < 1e-8);
        assert!(c.c_ij()[(0, 0)].abs() < 1e-8);
    }

    #[test]
    fn independent_conditioning_barely_moves_blocks() {
        let n = 5000;
        let present = randn(n, 3, 7);
        let lagged = randn(n, 3, 8);
        let mut lagged2 = lagged.clone();
        // correlate the cause with the effect so the cross block is not trivial
        for r in 0..n {
            lagged2[(r, 1)] = 0.6 * present[(r, 0)] + 0.8 * lagged[(r, 1)];
        }
        let d = design_from(present, lagged2);
        let b = BlockCovariance::from_columns(&d, alloc::vec![0], alloc::vec![1], alloc::vec![0, 2]).unwrap();
        let c = conditional_cov(&b, Ridge::None).unwrap();
        assert!((c.c_ii() - &b.s_ii).amax() < 0.05);
        assert!((c.c_ij() - &b.s_ij).amax() < 0.05);
        assert!((c.c_jj() - &b.s_jj).amax() < 0.05);
    }

    #[test]
    fn schur_complement_equals_residual_covariance() {
        let n = 60;
        let x = randn(n, 3, 9);
        let mut yi = randn(n, 2, 10);
        let mut yj = randn(n, 2, 11);
        for r in 0..n {
            yi[(r, 0)] += 0.7 * x[(r, 0)] - 0.3 * x[(r, 2)] + 4.0;
            yj[(r, 1)] += 0.5 * x[(r, 1)] + 0.2 * yi[(r, 1)];
        }
        let mut present = Matrix::zeros(n, 7);
        let mut lagged = Matrix::zeros(n, 7);
        present.view_mut((0, 0), (n, 2)).copy_from(&yi);
        lagged.view_mut((0, 2), (n, 2)).copy_from(&yj);
        lagged.view_mut((0, 4), (n, 3)).copy_from(&x);
        let d = design_from(present, lagged);
        let b = BlockCovariance::from_columns(&d, alloc::vec![0, 1], alloc::vec![2, 3], alloc::vec![4, 5, 6]).unwrap();
        let c = conditional_cov(&b, Ridge::None).unwrap();

        let design = Matrix::from_fn(n, 4, |r, k| if k == 0 { 1.0 } else { x[(r, k - 1)] });
        let resid = |y: &Matrix| {
            let (coef, _) = least_squares(&design, y).unwrap();
            y - &design * coef
        };
        let (ri, rj) = (resid(&yi), resid(&yj));
        let scale = 1.0 / (n as f64 - 1.0);
        assert!((c.c_ii() - ri.tr_mul(&ri) * scale).amax() < 1e-8);
        assert!((c.c_ij() - ri.tr_mul(&rj) * scale).amax() < 1e-8);
        assert!((c.c_jj() - rj.tr_mul(&rj) * scale).amax() < 1e-8);
        for blockm in [c.c_ii(), c.c_jj()] {
            let (vals, _) = sym_eigen_desc(blockm);
            assert!(vals.iter().all(|&v| v >= -1e-8 * blockm.trace()));
        }
    }

    #[test]
    fn too_many_conditioners_is_rank_deficient() {
        let d = design_from(randn(5, 6, 1), randn(5, 6, 2));
        let err = BlockCovariance::from_columns(&d, alloc::vec![0], alloc::vec![1], alloc::vec![2, 3, 4, 5]).unwrap_err();
        assert_eq!(err, Error::RankDeficient { q: 4, rows: 5 });
    }

    #[test]
    fn all_constant_conditioners_are_singular() {
        let mut lagged = randn(20, 3, 2);
        lagged.column_mut(2).fill(1.5);
        let d = design_from(randn(20, 3, 1), lagged);
        let b = BlockCovariance::from_columns(&d, alloc::vec![0], alloc::vec![1], alloc::vec![2]).unwrap();
        assert_eq!(conditional_cov(&b, Ridge::None).unwrap_err(), Error::SingularConditioning { columns: alloc::vec![2] });
    }

    #[test]
    fn conditioning_set_membership() {
        let names: Vec<String> = ["a", "b", "c", "d", "free"].iter().map(|s| s.to_string()).collect();
        let p = SetPartition::from_assignments([("a", "I"), ("b", "I"), ("c", "II"), ("d", "II")]).unwrap();
        let all = Conditioning::default();
        assert_eq!(conditioning_columns(&names, &p, "II", all).unwrap(), [0, 1, 4]);
        assert_eq!(conditioning_columns(&names, &p, "I", all).unwrap(), [2, 3, 4]);
        let assigned_only = Conditioning { include_unassigned: false };
        assert_eq!(conditioning_columns(&names, &p, "II", assigned_only).unwrap(), [0, 1]);
    }

    #[test]
    fn assembled_matrix_is_psd() {
        let d = design_from(randn(25, 4, 12), randn(25, 4, 13));
        let names = d.names().to_vec();
        let p = SetPartition::from_assignments([(names[0].clone(), "I"), (names[1].clone(), "I"), (names[2].clone(), "II")]).unwrap();
        let b = assemble_blocks(&d, &p, "I", "II", Conditioning::default()).unwrap();
        assert_eq!(b.dims(), (2, 1, 3));
        let full = b.assembled();
        let (vals, _) = sym_eigen_desc(&full);
        assert!(*vals.last().unwrap() >= -1e-10 * full.trace());
    }
}
