//! The two simulated set networks and a sequential Monte Carlo driver.
//!
//! Both networks are sparse VAR(1) systems with unit-variance Gaussian noise,
//! started from zero and run for `burn_in` discarded steps. Noise is drawn
//! step by step, series in index order, with the Ziggurat standard-normal
//! sampler of `rand_distr` on a ChaCha8 stream seeded from `SimSpec::seed`.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bootstrap::{gc_test, BootstrapConfig};
use crate::error::{Error, Result};
use crate::linalg::spectral_radius;
use crate::panel::{lag_align, SetPartition, TimeSeriesPanel};
use crate::rng::{derive_seed, substream};
use crate::var::{fit_var1, wald_block_test_with, WaldReference};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimKind {
    /// 14 series in sets of 5, 5 and 4.
    Sim1,
    /// 13 series in sets of 5, 5 and 3.
    Sim2,
}

/// `(equation, lagged series, sign)`, 1-based as in the network listing.
type Term = (usize, usize, f64);

const SIM1_TERMS: &[Term] = &[
    (1, 1, 1.0),
    (1, 4, -1.0),
    (2, 1, 1.0),
    (3, 1, 1.0),
    (3, 5, -1.0),
    (4, 2, 1.0),
    (6, 8, 1.0),
    (7, 3, 1.0),
    (7, 6, -1.0),
    (8, 10, 1.0),
    (9, 5, 1.0),
    (9, 7, -1.0),
    (9, 14, 1.0),
    (10, 9, 1.0),
    (10, 13, -1.0),
    (11, 8, 1.0),
];

const SIM2_TERMS: &[Term] = &[
    (1, 1, 1.0),
    (2, 1, 1.0),
    (2, 5, -1.0),
    (3, 1, 1.0),
    (3, 4, -1.0),
    (4, 2, 1.0),
    (4, 4, -1.0),
    (5, 3, 1.0),
    (5, 13, -1.0),
    (6, 3, 1.0),
    (7, 3, 1.0),
    (7, 6, -1.0),
    (8, 3, 1.0),
    (8, 7, -1.0),
    (9, 3, 1.0),
    (9, 8, -1.0),
    (10, 3, 1.0),
    (10, 9, -1.0),
    (10, 12, 1.0),
    (11, 11, 1.0),
    (11, 13, -1.0),
    (12, 11, 1.0),
    (13, 12, 1.0),
];

pub const SET_LABELS: [&str; 3] = ["I", "II", "III"];

/// Detection rates over 10,000 networks reported for the reference
/// implementation, `[from][to]` in `SET_LABELS` order.
pub const REFERENCE_SIM1_PCCA: [[f64; 3]; 3] =
    [[1.0000, 0.8543, 0.0507], [0.0461, 0.9979, 0.6646], [0.0500, 0.8015, 0.0437]];
pub const REFERENCE_SIM2_PCCA: [[f64; 3]; 3] =
    [[0.7154, 1.0000, 0.0505], [0.0466, 1.0000, 0.0463], [0.1490, 1.0000, 0.6263]];
pub const REFERENCE_SIM2_WALD: [[f64; 3]; 3] =
    [[0.1079, 0.9980, 0.0589], [0.0547, 0.9997, 0.0522], [0.1015, 0.9827, 0.2107]];

impl SimKind {
    pub fn series_count(self) -> usize {
        match self {
            SimKind::Sim1 => 14,
            SimKind::Sim2 => 13,
        }
    }

    pub fn set_sizes(self) -> [usize; 3] {
        match self {
            SimKind::Sim1 => [5, 5, 4],
            SimKind::Sim2 => [5, 5, 3],
        }
    }

    pub fn default_coefficient(self) -> f64 {
        match self {
            SimKind::Sim1 => 0.4,
            SimKind::Sim2 => 0.2,
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            SimKind::Sim1 => "Z",
            SimKind::Sim2 => "W",
        }
    }

    fn terms(self) -> &'static [Term] {
        match self {
            SimKind::Sim1 => SIM1_TERMS,
            SimKind::Sim2 => SIM2_TERMS,
        }
    }

    pub fn series_names(self) -> Vec<String> {
        (1..=self.series_count()).map(|i| alloc::format!("{}{}", self.prefix(), i)).collect()
    }

    /// Set index (into `SET_LABELS`) of 0-based series `s`.
    pub fn set_of(self, s: usize) -> usize {
        let sizes = self.set_sizes();
        if s < sizes[0] {
            0
        } else if s < sizes[0] + sizes[1] {
            1
        } else {
            2
        }
    }

    pub fn partition(self) -> SetPartition {
        let names = self.series_names();
        SetPartition::from_assignments(names.into_iter().enumerate().map(|(s, n)| (n, SET_LABELS[self.set_of(s)])))
            .expect("built-in partition is valid")
    }

    /// VAR(1) coefficient matrix, entry `(r, c)` = effect of lagged `c` on `r`.
    pub fn coefficient_matrix(self, coefficient: f64) -> Matrix {
        let k = self.series_count();
        let mut a = Matrix::zeros(k, k);
        for &(r, c, sign) in self.terms() {
            a[(r - 1, c - 1)] = sign * coefficient;
        }
        a
    }

    /// `truth[from][to]`: whether some series of `from` enters an equation of `to`.
    pub fn truth(self) -> [[bool; 3]; 3] {
        let mut t = [[false; 3]; 3];
        for &(r, c, _) in self.terms() {
            t[self.set_of(c - 1)][self.set_of(r - 1)] = true;
        }
        t
    }

    pub fn reference_rates(self, method: Method) -> Option<[[f64; 3]; 3]> {
        match (self, method) {
            (SimKind::Sim1, Method::Pcca) => Some(REFERENCE_SIM1_PCCA),
            (SimKind::Sim2, Method::Pcca) => Some(REFERENCE_SIM2_PCCA),
            (SimKind::Sim2, Method::Wald | Method::WaldF) => Some(REFERENCE_SIM2_WALD),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimSpec {
    pub kind: SimKind,
    pub length: usize,
    pub coefficient: f64,
    pub burn_in: usize,
    pub seed: u64,
}

impl SimSpec {
    pub fn new(kind: SimKind) -> Self {
        Self { kind, length: 100, coefficient: kind.default_coefficient(), burn_in: 100, seed: 0 }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub panel: TimeSeriesPanel,
    pub partition: SetPartition,
    pub truth: [[bool; 3]; 3],
}

pub fn generate(spec: &SimSpec) -> Result<Simulation> {
    if spec.length < crate::panel::MIN_TIME_POINTS {
        return Err(Error::TooFewTimePoints { got: spec.length, min: crate::panel::MIN_TIME_POINTS });
    }
    let a = spec.kind.coefficient_matrix(spec.coefficient);
    let radius = spectral_radius(&a);
    if !(radius < 1.0) {
        return Err(Error::Unstable { coefficient: spec.coefficient, radius });
    }
    let k = a.nrows();
    let mut rng = substream(spec.seed, &[]);
    let mut state = crate::Vector::zeros(k);
    let mut values = Matrix::zeros(spec.length, k);
    for step in 0..spec.burn_in + spec.length {
        let mut next = &a * &state;
        for v in next.iter_mut() {
            *v += <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
        }
        state = next;
        if step >= spec.burn_in {
            values.set_row(step - spec.burn_in, &state.transpose());
        }
    }
    Ok(Simulation {
        panel: TimeSeriesPanel::new(spec.kind.series_names(), values)?,
        partition: spec.kind.partition(),
        truth: spec.kind.truth(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Pcca,
    /// Blockwise Wald test, chi-square reference.
    Wald,
    /// Blockwise Wald test, small-sample F reference.
    WaldF,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Pcca => "pcca",
            Method::Wald => "wald",
            Method::WaldF => "wald-f",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [Method::Pcca, Method::Wald, Method::WaldF].into_iter().find(|m| m.tag() == tag)
    }
}

/// How often each directed set edge was declared significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetectionMatrix {
    pub method: Method,
    pub labels: Vec<String>,
    /// `counts[from][to]`.
    pub counts: Vec<Vec<u64>>,
    pub runs: u64,
}

impl DetectionMatrix {
    pub fn new(method: Method, labels: Vec<String>) -> Self {
        let l = labels.len();
        Self { method, labels, counts: vec![vec![0; l]; l], runs: 0 }
    }

    /// Adds one replicate's decisions, `hits[from][to]`.
    pub fn record(&mut self, hits: &[Vec<bool>]) {
        for (row, hit_row) in self.counts.iter_mut().zip(hits) {
            for (c, &h) in row.iter_mut().zip(hit_row) {
                *c += u64::from(h);
            }
        }
        self.runs += 1;
    }

    pub fn merge(&mut self, other: &DetectionMatrix) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
        self.runs += other.runs;
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        if self.runs == 0 {
            return 0.0;
        }
        self.counts[from][to] as f64 / self.runs as f64
    }

    /// Binomial standard error of `rate(from, to)`.
    pub fn std_error(&self, from: usize, to: usize) -> f64 {
        if self.runs == 0 {
            return 0.0;
        }
        let p = self.rate(from, to);
        libm::sqrt(p * (1.0 - p) / self.runs as f64)
    }
}

/// Decisions of every method on one simulated network, `[method][from][to]`.
pub type ReplicateDecisions = Vec<Vec<Vec<bool>>>;

/// Generates replicate `index` of `spec` and tests every directed set pair,
/// self-loops included, with each method at `cfg.alpha`. All methods see the
/// same panel.
pub fn run_replicate(spec: &SimSpec, methods: &[Method], cfg: &BootstrapConfig, index: u64) -> Result<ReplicateDecisions> {
    let sim = generate(&spec.with_seed(derive_seed(spec.seed, &[index])))?;
    let design = lag_align(&sim.panel)?;
    let labels = sim.partition.labels().to_vec();
    let l = labels.len();
    let mut out = Vec::with_capacity(methods.len());
    let mut fit = None;
    for &method in methods {
        let mut hits = vec![vec![false; l]; l];
        match method {
            Method::Pcca => {
                for (from, cause) in labels.iter().enumerate() {
                    for (to, effect) in labels.iter().enumerate() {
                        let seed = derive_seed(spec.seed, &[index, 1 + (from * l + to) as u64]);
                        let edge_cfg = BootstrapConfig { seed, ..*cfg };
                        hits[from][to] = gc_test(&design, &sim.partition, effect, cause, &edge_cfg)?.significant;
                    }
                }
            }
            Method::Wald | Method::WaldF => {
                let reference = if method == Method::Wald { WaldReference::ChiSquare } else { WaldReference::HotellingLawleyF };
                let fit = fit.get_or_insert(fit_var1(&design)?);
                for (from, cause) in labels.iter().enumerate() {
                    for (to, effect) in labels.iter().enumerate() {
                        let test = wald_block_test_with(fit, &sim.partition, effect, cause, reference)?;
                        hits[from][to] = test.p_value < cfg.alpha;
                    }
                }
            }
        }
        out.push(hits);
    }
    Ok(out)
}

/// Largest tolerated fraction of irrecoverably failed replicates.
pub const MAX_FAILED_REPLICATES: f64 = 0.01;

/// Folds per-replicate outcomes (in any order) into one matrix per method.
pub fn tally(methods: &[Method], outcomes: Vec<Result<ReplicateDecisions>>) -> Result<Vec<DetectionMatrix>> {
    let labels: Vec<String> = SET_LABELS.iter().map(|s| s.to_string()).collect();
    let mut mats: Vec<DetectionMatrix> = methods.iter().map(|&m| DetectionMatrix::new(m, labels.clone())).collect();
    let total = outcomes.len();
    let mut failed = 0usize;
    let mut last = None;
    for o in outcomes {
        match o {
            Ok(dec) => {
                for (mat, hits) in mats.iter_mut().zip(&dec) {
                    mat.record(hits);
                }
            }
            Err(e) => {
                failed += 1;
                last = Some(e);
            }
        }
    }
    if failed as f64 > MAX_FAILED_REPLICATES * total as f64 {
        return Err(Error::TooManyFailures { failed, total, last: last.map(|e| e.to_string()).unwrap_or_default() });
    }
    Ok(mats)
}

/// Sequential Monte Carlo over `runs` replicates.
pub fn run_monte_carlo(spec: &SimSpec, methods: &[Method], runs: u64, cfg: &BootstrapConfig) -> Result<Vec<DetectionMatrix>> {
    if runs == 0 {
        return Err(Error::Config("at least one replicate is required".to_string()));
    }
    cfg.validate()?;
    let outcomes = (0..runs).map(|r| run_replicate(spec, methods, cfg, r)).collect();
    tally(methods, outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_sizes_and_names() {
        assert_eq!(SimKind::Sim1.series_names().len(), 14);
        assert_eq!(SimKind::Sim2.series_names()[12], "W13");
        let p = SimKind::Sim1.partition();
        let sizes: Vec<usize> = p.member_lists().map(|(_, m)| m.len()).collect();
        assert_eq!(sizes, [5, 5, 4]);
        let p = SimKind::Sim2.partition();
        let sizes: Vec<usize> = p.member_lists().map(|(_, m)| m.len()).collect();
        assert_eq!(sizes, [5, 5, 3]);
    }

    #[test]
    fn truth_layout() {
        let t1 = SimKind::Sim1.truth();
        assert_eq!(t1, [[true, true, false], [false, true, true], [false, true, false]]);
        let t2 = SimKind::Sim2.truth();
        assert_eq!(t2, [[true, true, false], [false, true, false], [true, true, true]]);
        let count = |t: [[bool; 3]; 3]| t.iter().flatten().filter(|&&b| b).count();
        assert_eq!((count(t1), count(t2)), (5, 6));
    }

    #[test]
    fn generate_is_deterministic() {
        let spec = SimSpec::new(SimKind::Sim1).with_seed(42);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.panel, b.panel);
        assert_eq!(a.panel.len(), 100);
        assert_ne!(a.panel, generate(&spec.with_seed(43)).unwrap().panel);
    }

    #[test]
    fn unstable_coefficient_rejected() {
        let spec = SimSpec { coefficient: 1.5, ..SimSpec::new(SimKind::Sim1) };
        assert!(matches!(generate(&spec), Err(Error::Unstable { .. })));
    }

    #[test]
    fn single_replicate_bounds() {
        let cfg = BootstrapConfig { replicates: 19, ..Default::default() };
        let mats = run_monte_carlo(&SimSpec::new(SimKind::Sim2).with_seed(1), &[Method::Pcca, Method::Wald], 1, &cfg).unwrap();
        for m in &mats {
            assert_eq!(m.runs, 1);
            assert!(m.counts.iter().flatten().all(|&c| c <= 1));
        }
        assert!(run_monte_carlo(&SimSpec::new(SimKind::Sim2), &[Method::Pcca], 0, &cfg).is_err());
    }

    #[test]
    fn detection_matrix_merge() {
        let labels: Vec<String> = SET_LABELS.iter().map(|s| s.to_string()).collect();
        let mut a = DetectionMatrix::new(Method::Wald, labels.clone());
        a.record(&[vec![true, false, false], vec![false; 3], vec![false, false, true]]);
        let mut b = DetectionMatrix::new(Method::Wald, labels);
        b.record(&[vec![true, true, false], vec![false; 3], vec![false; 3]]);
        a.merge(&b);
        assert_eq!(a.runs, 2);
        assert_eq!(a.counts[0], [2, 1, 0]);
        assert_eq!(a.rate(0, 0), 1.0);
        assert!((a.std_error(0, 1) - 0.5f64.sqrt() * 0.5).abs() < 1e-15);
    }
}
