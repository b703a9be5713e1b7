//! Time-series panels, set partitions and lag alignment.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::Matrix;

/// Minimum panel length: two aligned rows plus one.
pub const MIN_TIME_POINTS: usize = 3;

/// A `T x k` panel of observations, rows are time points and columns are series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    names: Vec<String>,
    values: Matrix,
}

impl TimeSeriesPanel {
    pub fn new(names: Vec<String>, values: Matrix) -> Result<Self> {
        if names.is_empty() || values.ncols() == 0 {
            return Err(Error::NoSeries);
        }
        if names.len() != values.ncols() {
            return Err(Error::Shape(alloc::format!(
                "{} names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        if values.nrows() < MIN_TIME_POINTS {
            return Err(Error::TooFewTimePoints { got: values.nrows(), min: MIN_TIME_POINTS });
        }
        let mut seen = BTreeMap::new();
        for (c, name) in names.iter().enumerate() {
            if seen.insert(name.as_str(), c).is_some() {
                return Err(Error::DuplicateSeries(name.clone()));
            }
        }
        for c in 0..values.ncols() {
            for r in 0..values.nrows() {
                if !values[(r, c)].is_finite() {
                    return Err(Error::NonFinite { row: r, series: names[c].clone() });
                }
            }
        }
        Ok(Self { names, values })
    }

    /// Builds a panel from row-major data (one slice per time point).
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let k = names.len();
        if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != k) {
            return Err(Error::Shape(alloc::format!(
                "time point {} has {} values, expected {}",
                r,
                row.len(),
                k
            )));
        }
        let values = Matrix::from_fn(rows.len(), k, |r, c| rows[r][c]);
        Self::new(names, values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// Number of time points `T`.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Number of series `k`.
    pub fn series_count(&self) -> usize {
        self.values.ncols()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Disjoint labelled subsets of the panel's series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetPartition {
    labels: Vec<String>,
    members: Vec<Vec<String>>,
}

impl SetPartition {
    /// `labels[s]` owns `members[s]`.
    pub fn new(labels: Vec<String>, members: Vec<Vec<String>>) -> Result<Self> {
        if labels.len() != members.len() {
            return Err(Error::Shape(alloc::format!(
                "{} labels for {} member lists",
                labels.len(),
                members.len()
            )));
        }
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        let mut seen_labels = BTreeMap::new();
        for (label, list) in labels.iter().zip(&members) {
            if label.is_empty() {
                return Err(Error::EmptySet(label.clone()));
            }
            if seen_labels.insert(label.as_str(), ()).is_some() {
                return Err(Error::Config(alloc::format!("label `{label}` listed twice")));
            }
            if list.is_empty() {
                return Err(Error::EmptySet(label.clone()));
            }
            for series in list {
                if let Some(first) = owner.insert(series.as_str(), label.as_str()) {
                    return Err(if first == label {
                        Error::DuplicateSeries(series.clone())
                    } else {
                        Error::NotDisjoint {
                            series: series.clone(),
                            first: first.to_owned(),
                            second: label.clone(),
                        }
                    });
                }
            }
        }
        Ok(Self { labels, members })
    }

    /// Builds a partition from `(series, label)` pairs; labels are ordered by
    /// first appearance and members keep their input order.
    pub fn from_assignments<I, S, L>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, L)>,
        S: Into<String>,
        L: Into<String>,
    {
        let mut labels: Vec<String> = Vec::new();
        let mut members: Vec<Vec<String>> = Vec::new();
        let mut owner: BTreeMap<String, String> = BTreeMap::new();
        for (series, label) in pairs {
            let (series, label) = (series.into(), label.into());
            if label.is_empty() {
                return Err(Error::EmptySet(label));
            }
            if let Some(first) = owner.get(&series) {
                return Err(if *first == label {
                    Error::DuplicateSeries(series)
                } else {
                    Error::NotDisjoint { series, first: first.clone(), second: label }
                });
            }
            owner.insert(series.clone(), label.clone());
            match labels.iter().position(|l| *l == label) {
                Some(s) => members[s].push(series),
                None => {
                    labels.push(label);
                    members.push(alloc::vec![series]);
                }
            }
        }
        Self::new(labels, members)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_owned()))
    }

    pub fn members(&self, label: &str) -> Result<&[String]> {
        Ok(&self.members[self.label_index(label)?])
    }

    pub fn member_lists(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.labels.iter().map(String::as_str).zip(self.members.iter().map(Vec::as_slice))
    }

    /// Total number of assigned series.
    pub fn assigned_count(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }

    /// Checks that every member exists among `names`.
    pub fn check_against(&self, names: &[String]) -> Result<()> {
        for series in self.members.iter().flatten() {
            if !names.contains(series) {
                return Err(Error::UnknownSeries(series.clone()));
            }
        }
        Ok(())
    }

    /// Column indices (into `names`) of the members of `label`.
    pub fn columns(&self, names: &[String], label: &str) -> Result<Vec<usize>> {
        self.members(label)?
            .iter()
            .map(|s| names.iter().position(|n| n == s).ok_or_else(|| Error::UnknownSeries(s.clone())))
            .collect()
    }

    /// Whether column `name` belongs to any set.
    pub fn is_assigned(&self, name: &str) -> bool {
        self.members.iter().flatten().any(|s| s == name)
    }
}

/// Present and one-step-lagged rows paired up: row `r` of `present` is time
/// point `r + 1` and row `r` of `lagged` is time point `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedDesign {
    names: Vec<String>,
    present: Matrix,
    lagged: Matrix,
}

impl LaggedDesign {
    pub fn from_parts(names: Vec<String>, present: Matrix, lagged: Matrix) -> Result<Self> {
        if present.shape() != lagged.shape() || present.ncols() != names.len() {
            return Err(Error::Shape(alloc::format!(
                "present {:?}, lagged {:?}, {} names",
                present.shape(),
                lagged.shape(),
                names.len()
            )));
        }
        Ok(Self { names, present, lagged })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn present(&self) -> &Matrix {
        &self.present
    }

    pub fn lagged(&self) -> &Matrix {
        &self.lagged
    }

    /// Number of aligned rows `N = T - 1`.
    pub fn rows(&self) -> usize {
        self.present.nrows()
    }

    pub fn series_count(&self) -> usize {
        self.present.ncols()
    }
}

pub fn lag_align(panel: &TimeSeriesPanel) -> Result<LaggedDesign> {
    let t = panel.len();
    if t < MIN_TIME_POINTS {
        return Err(Error::TooFewTimePoints { got: t, min: MIN_TIME_POINTS });
    }
    let v = panel.values();
    let present = v.rows(1, t - 1).into_owned();
    let lagged = v.rows(0, t - 1).into_owned();
    LaggedDesign::from_parts(panel.names().to_vec(), present, lagged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn lag_align_shifts_by_one() {
        let p = TimeSeriesPanel::from_rows(names(&["x"]), &[vec![5.0], vec![7.0], vec![9.0]]).unwrap();
        let d = lag_align(&p).unwrap();
        assert_eq!(d.present().as_slice(), &[7.0, 9.0]);
        assert_eq!(d.lagged().as_slice(), &[5.0, 7.0]);
    }

    #[test]
    fn lag_align_row_count() {
        for t in [3usize, 4, 48, 100] {
            let p = TimeSeriesPanel::new(names(&["a", "b"]), Matrix::from_fn(t, 2, |r, c| (r * 2 + c) as f64)).unwrap();
            let d = lag_align(&p).unwrap();
            assert_eq!(d.rows(), t - 1);
            for r in 0..t - 1 {
                assert_eq!(d.present()[(r, 1)], p.values()[(r + 1, 1)]);
                assert_eq!(d.lagged()[(r, 1)], p.values()[(r, 1)]);
            }
        }
    }

    #[test]
    fn short_panel_rejected() {
        let err = TimeSeriesPanel::new(names(&["a"]), Matrix::zeros(2, 1)).unwrap_err();
        assert_eq!(err, Error::TooFewTimePoints { got: 2, min: 3 });
    }

    #[test]
    fn constant_minimal_panel_accepted() {
        let p = TimeSeriesPanel::new(names(&["g1"]), Matrix::zeros(3, 1)).unwrap();
        assert_eq!((p.len(), p.series_count()), (3, 1));
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = TimeSeriesPanel::new(names(&["g1", "g1"]), Matrix::zeros(3, 2)).unwrap_err();
        assert_eq!(err, Error::DuplicateSeries("g1".into()));
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = Matrix::zeros(4, 2);
        m[(2, 1)] = f64::NAN;
        let err = TimeSeriesPanel::new(names(&["a", "b"]), m).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 2, series: "b".into() });
    }

    #[test]
    fn partition_orders_labels_by_first_appearance() {
        let p = SetPartition::from_assignments([
            ("RECK", "I"),
            ("TP53", "II"),
            ("SRC", "I"),
            ("FGF2", "III"),
        ])
        .unwrap();
        assert_eq!(p.labels(), &names(&["I", "II", "III"])[..]);
        assert_eq!(p.members("I").unwrap(), &names(&["RECK", "SRC"])[..]);
        assert_eq!(p.assigned_count(), 4);
    }

    #[test]
    fn partition_rejects_overlap() {
        let err = SetPartition::from_assignments([("g1", "I"), ("g1", "II")]).unwrap_err();
        assert!(matches!(err, Error::NotDisjoint { .. }));
    }

    #[test]
    fn partition_rejects_empty_set() {
        let err = SetPartition::new(names(&["I", "II"]), vec![names(&["a"]), vec![]]).unwrap_err();
        assert_eq!(err, Error::EmptySet("II".into()));
    }

    #[test]
    fn single_set_partition() {
        let p = SetPartition::from_assignments([("a", "ALL"), ("b", "ALL")]).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn columns_resolve_against_names() {
        let p = SetPartition::from_assignments([("c", "I"), ("a", "I"), ("zz", "II")]).unwrap();
        let n = names(&["a", "b", "c"]);
        assert_eq!(p.columns(&n, "I").unwrap(), vec![2, 0]);
        assert_eq!(p.check_against(&n), Err(Error::UnknownSeries("zz".into())));
    }
}
