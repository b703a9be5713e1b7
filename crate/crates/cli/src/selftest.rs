//! Fast internal consistency checks run by `setgc selftest`.

use std::fmt::Write as _;

use setgc_core::lagcov::Conditioning;
use setgc_core::pcca::{leading_rho, pcca_spectra, DEFAULT_TOL};
use setgc_core::var::wald_block_test;
use setgc_core::{
    assemble_blocks, conditional_cov, fit_var1, gc_test, generate, lag_align, BootstrapConfig, Matrix, Ridge,
    SimKind, SimSpec,
};

/// Largest canonical correlation between the residuals of `y` and `z`
/// after regressing both on `[1, x]`.
pub fn residual_rho(y: &Matrix, z: &Matrix, x: &Matrix) -> f64 {
    let n = y.nrows();
    let design = Matrix::from_fn(n, x.ncols() + 1, |r, c| if c == 0 { 1.0 } else { x[(r, c - 1)] });
    let resid = |m: &Matrix| {
        let qr = design.clone().qr();
        let q = qr.q();
        m - &q * (q.transpose() * m)
    };
    let (ry, rz) = (resid(y), resid(z));
    let whiten = |r: &Matrix| {
        let g = r.transpose() * r;
        let e = g.symmetric_eigen();
        let d = e.eigenvalues.map(|v| 1.0 / v.sqrt());
        &e.eigenvectors * Matrix::from_diagonal(&d) * e.eigenvectors.transpose()
    };
    let k = whiten(&ry) * ry.transpose() * &rz * whiten(&rz);
    k.singular_values().max()
}

fn check(out: &mut String, ok: &mut bool, name: &str, pass: bool, detail: String) {
    *ok &= pass;
    let _ = writeln!(out, "{:<4} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

pub fn run(seed: u64) -> (String, bool) {
    let mut out = String::new();
    let mut ok = true;
    let sim = match generate(&SimSpec::new(SimKind::Sim1).with_seed(seed)) {
        Ok(s) => s,
        Err(e) => return (format!("FAIL simulate: {e}\n"), false),
    };
    let design = match lag_align(&sim.panel) {
        Ok(d) => d,
        Err(e) => return (format!("FAIL lag alignment: {e}\n"), false),
    };
    let labels = sim.partition.labels().to_vec();

    let mut worst_oracle = 0.0f64;
    let mut worst_spectra = 0.0f64;
    for from in &labels {
        for to in &labels {
            let blocks = match assemble_blocks(&design, &sim.partition, to, from, Conditioning::default()) {
                Ok(b) => b,
                Err(e) => return (format!("FAIL blocks {from}->{to}: {e}\n"), false),
            };
            let cond = match conditional_cov(&blocks, Ridge::None) {
                Ok(c) => c,
                Err(e) => return (format!("FAIL conditional covariance {from}->{to}: {e}\n"), false),
            };
            let pick = |m: &Matrix, cols: &[usize]| Matrix::from_fn(m.nrows(), cols.len(), |r, c| m[(r, cols[c])]);
            let y = pick(design.present(), &blocks.effect_columns);
            let z = pick(design.lagged(), &blocks.cause_columns);
            let x = pick(design.lagged(), &blocks.x_columns);
            let rho = leading_rho(&cond, DEFAULT_TOL).unwrap_or(f64::NAN);
            worst_oracle = worst_oracle.max((rho - residual_rho(&y, &z, &x)).abs());
            if let Ok((a, b)) = pcca_spectra(&cond, DEFAULT_TOL) {
                for (u, v) in a.iter().zip(&b) {
                    worst_spectra = worst_spectra.max((u - v).abs());
                }
            }
        }
    }
    check(&mut out, &mut ok, "leading correlation vs residual regression", worst_oracle < 1e-8, format!("max diff {worst_oracle:.2e}"));
    check(&mut out, &mut ok, "shared spectrum of A and B", worst_spectra < 1e-8, format!("max diff {worst_spectra:.2e}"));

    let cfg = BootstrapConfig { replicates: 50, seed, ..Default::default() };
    let first = gc_test(&design, &sim.partition, "II", "I", &cfg);
    let second = gc_test(&design, &sim.partition, "II", "I", &cfg);
    let same = matches!((&first, &second), (Ok(a), Ok(b)) if a == b);
    check(&mut out, &mut ok, "bootstrap reproducible for a fixed seed", same, match &first {
        Ok(r) => format!("rho={:.4} p={:.4}", r.rho_hat, r.p_value),
        Err(e) => e.to_string(),
    });

    match fit_var1(&design) {
        Ok(fit) => {
            let a = fit.coefficients[(1, 0)];
            check(&mut out, &mut ok, "VAR(1) recovers Z2 <- Z1", (a - 0.4).abs() < 0.2, format!("estimate {a:.4}"));
            let single = setgc_core::SetPartition::from_assignments([("Z1", "a"), ("Z2", "b")]);
            let z = single.and_then(|p| wald_block_test(&fit, &p, "b", "a").map(|w| (w, fit.std_error(1, 0))));
            match z {
                Ok((w, se)) => {
                    let zz = (a / se).powi(2);
                    check(&mut out, &mut ok, "single-coefficient Wald equals z^2", (w.statistic - zz).abs() < 1e-8 * zz.max(1.0), format!("W={:.6} z^2={zz:.6}", w.statistic));
                }
                Err(e) => check(&mut out, &mut ok, "single-coefficient Wald equals z^2", false, e.to_string()),
            }
        }
        Err(e) => check(&mut out, &mut ok, "VAR(1) fit", false, e.to_string()),
    }
    (out, ok)
}
