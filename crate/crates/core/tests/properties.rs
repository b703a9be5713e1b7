use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use setgc_core::bootstrap::summarize;
use setgc_core::lagcov::BlockCovariance;
use setgc_core::pcca::{pcca_spectra, DEFAULT_TOL};
use setgc_core::rng::derive_seed;
use setgc_core::{
    conditional_cov, make_blocks, solve_pcca, BootstrapConfig, ConditionalCovariance, LaggedDesign, Matrix, Ridge,
    Tier,
};

fn design(seed: u64, rows: usize, k: usize) -> LaggedDesign {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lagged = Matrix::from_fn(rows, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut present = Matrix::from_fn(rows, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    for r in 0..rows {
        present[(r, 0)] += 0.6 * lagged[(r, k - 1)];
    }
    LaggedDesign::from_parts((0..k).map(|i| format!("s{i}")).collect(), present, lagged).unwrap()
}

fn rho_of(d: &LaggedDesign, effect: Vec<usize>, cause: Vec<usize>, x: Vec<usize>) -> f64 {
    let blocks = BlockCovariance::from_columns(d, effect, cause, x).unwrap();
    solve_pcca(&conditional_cov(&blocks, Ridge::None).unwrap(), DEFAULT_TOL).unwrap().rho
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rho_is_a_correlation(seed in any::<u64>(), rows in 10usize..60) {
        let d = design(seed, rows, 5);
        let rho = rho_of(&d, vec![0, 1], vec![3, 4], vec![2]);
        prop_assert!((0.0..=1.0).contains(&rho));
    }

    #[test]
    fn rho_ignores_column_scale_and_shift(
        seed in any::<u64>(),
        scale in prop::collection::vec(0.01f64..100.0, 5),
        shift in prop::collection::vec(-50.0f64..50.0, 5),
    ) {
        let d = design(seed, 40, 5);
        let base = rho_of(&d, vec![0, 1], vec![3, 4], vec![2]);
        let mut present = d.present().clone();
        let mut lagged = d.lagged().clone();
        for c in 0..5 {
            present.column_mut(c).apply(|v| *v = *v * scale[c] + shift[c]);
            lagged.column_mut(c).apply(|v| *v = *v * scale[c] + shift[c]);
        }
        let moved = LaggedDesign::from_parts(d.names().to_vec(), present, lagged).unwrap();
        let rho = rho_of(&moved, vec![0, 1], vec![3, 4], vec![2]);
        prop_assert!((rho - base).abs() < 1e-9, "{base} vs {rho}");
    }

    #[test]
    fn spectra_of_a_and_b_share_nonzero_part(seed in any::<u64>(), m in 1usize..5, n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Matrix::from_fn(m + n + 3, m + n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = w.transpose() * &w;
        let cond = ConditionalCovariance::new(
            s.view((0, 0), (m, m)).into_owned(),
            s.view((0, m), (m, n)).into_owned(),
            s.view((m, m), (n, n)).into_owned(),
        ).unwrap();
        let (a, b) = pcca_spectra(&cond, DEFAULT_TOL).unwrap();
        prop_assert_eq!((a.len(), b.len()), (m, n));
        for i in 0..m.max(n) {
            let (u, v) = (a.get(i).copied().unwrap_or(0.0), b.get(i).copied().unwrap_or(0.0));
            prop_assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn weights_are_metric_normalized(seed in any::<u64>()) {
        let d = design(seed, 50, 6);
        let blocks = BlockCovariance::from_columns(&d, vec![0, 1], vec![4, 5], vec![2, 3]).unwrap();
        let cond = conditional_cov(&blocks, Ridge::None).unwrap();
        let res = solve_pcca(&cond, DEFAULT_TOL).unwrap();
        let a = Matrix::from_column_slice(2, 1, &res.a_vectors[0]);
        let b = Matrix::from_column_slice(2, 1, &res.b_vectors[0]);
        prop_assert!(((a.transpose() * cond.c_ii() * &a)[(0, 0)] - 1.0).abs() < 1e-9);
        prop_assert!(((b.transpose() * cond.c_jj() * &b)[(0, 0)] - 1.0).abs() < 1e-9);
        let cross = (a.transpose() * cond.c_ij() * &b)[(0, 0)];
        prop_assert!((cross.abs() - res.rho).abs() < 1e-9);
    }

    #[test]
    fn p_value_is_add_one(rho in 0.0f64..1.0, nulls in prop::collection::vec(0.0f64..1.0, 1..300)) {
        let cfg = BootstrapConfig::default();
        let exceed = nulls.iter().filter(|&&r| r >= rho).count();
        let res = summarize(rho, nulls.iter().map(|&r| Ok(r)).collect(), 3, &cfg).unwrap();
        prop_assert_eq!(res.p_value, (1 + exceed) as f64 / (nulls.len() + 1) as f64);
        prop_assert!(res.p_value >= 1.0 / (nulls.len() + 1) as f64 && res.p_value <= 1.0);
        prop_assert_eq!(res.significant, res.p_value < cfg.alpha);
    }

    #[test]
    fn blocks_tile_every_start(rows in 3usize..200, l in 1usize..10) {
        prop_assume!(l + 1 < rows);
        let blocks = make_blocks(rows, l).unwrap();
        prop_assert_eq!(blocks.len(), rows - l + 1);
        for (s, b) in blocks.iter().enumerate() {
            prop_assert_eq!(b.clone(), s..s + l);
        }
    }

    #[test]
    fn tiers_follow_thresholds(p in 0.0f64..=1.0) {
        let expected = if p < 0.05 { Tier::Strong } else if p < 0.10 { Tier::Weak } else { Tier::None };
        prop_assert_eq!(Tier::of(p), expected);
    }

    #[test]
    fn derived_seeds_differ_by_tag(parent in any::<u64>(), a in 0u64..1000, b in 0u64..1000) {
        prop_assume!(a != b);
        prop_assert_ne!(derive_seed(parent, &[a]), derive_seed(parent, &[b]));
        prop_assert_eq!(derive_seed(parent, &[a, b]), derive_seed(parent, &[a, b]));
    }
}

#[test]
fn too_many_failed_replicates_abort() {
    let cfg = BootstrapConfig::default();
    let mut outcomes: Vec<_> = (0..100).map(|_| Ok(0.5)).collect();
    for o in outcomes.iter_mut().take(6) {
        *o = Err(setgc_core::Error::ZeroMatrix);
    }
    assert!(matches!(summarize(0.4, outcomes, 3, &cfg), Err(setgc_core::Error::TooManyFailures { failed: 6, .. })));
    let mut ok: Vec<_> = (0..100).map(|_| Ok(0.5)).collect();
    ok[0] = Err(setgc_core::Error::ZeroMatrix);
    assert_eq!(summarize(0.4, ok, 3, &cfg).unwrap().replicates_used, 99);
}
