//! Independent numerical oracles for the entropy calculus.

use cvqrng_core::entropy::{gaussian_bin_masses, histogram};
use cvqrng_core::model::{Quadrature, SlotKind, StateModel};
use cvqrng_core::prolate::{concentration_eigenvalue, incompatibility, incompatibility_series};
use cvqrng_core::sim::{quantize, sample_quadrature};
use cvqrng_core::{DiscretizationGrid, SampleBlock};
use nalgebra::{DMatrix, SymmetricEigen};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (nodes, weights)
}

/// Largest eigenvalue of the sinc kernel sin(x(s−t))/(π(s−t)) on [-1, 1].
fn nystrom_lambda0(x: f64) -> f64 {
    let n = 40 + (2.0 * x) as usize;
    let (t, w) = gauss_legendre(n);
    let a = DMatrix::from_fn(n, n, |i, j| {
        let d = t[i] - t[j];
        let k = if d == 0.0 {
            x / std::f64::consts::PI
        } else {
            (x * d).sin() / (std::f64::consts::PI * d)
        };
        w[i].sqrt() * k * w[j].sqrt()
    });
    SymmetricEigen::new(a).eigenvalues.iter().copied().fold(f64::MIN, f64::max)
}

#[test]
fn quadrature_rule_integrates_polynomials() {
    let (t, w) = gauss_legendre(12);
    let int: f64 = t.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
    assert!((int - 2.0 / 11.0).abs() < 1e-13);
}

#[test]
fn series_matches_nystrom_oracle() {
    for x in [0.002, 0.05, 0.5, 1.0, 2.5, 5.0, 10.0, 30.0, 61.8] {
        let series = concentration_eigenvalue(x);
        let oracle = nystrom_lambda0(x);
        assert!(
            (series - oracle).abs() <= 1e-8 * oracle.max(1e-3),
            "x={x}: series {series} oracle {oracle}"
        );
    }
}

#[test]
fn operating_point_against_oracle() {
    let d = 0.01536;
    let c = incompatibility(d, d);
    let oracle = nystrom_lambda0(d * d / 4.0);
    assert!((c / oracle - 1.0).abs() < 1e-6);
    assert!((c - 3.755e-5).abs() < 0.005e-5, "{c}");
    assert!((-c.log2() - 14.70).abs() < 0.01);
}

#[test]
fn small_product_limit() {
    for d in [1e-4, 1e-3, 1e-2] {
        let c = incompatibility(d, d);
        assert!((c / (d * d / (2.0 * std::f64::consts::PI)) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn incompatibility_increases_with_product() {
    let mut last = 0.0;
    for i in 1..=200 {
        let d = 0.05 * i as f64;
        let c = incompatibility_series(d, d);
        // Strict until the eigenvalue is within rounding of 1.
        if last < 1.0 - 1e-10 {
            assert!(c > last, "d={d}");
        } else {
            assert!(c >= last - 1e-14, "d={d}");
        }
        last = c;
    }
}

#[test]
fn vacuum_histogram_matches_bin_masses() {
    let delta = 0.01536;
    let grid = DiscretizationGrid::new(delta, 11).unwrap();
    let xs = sample_quadrature(&StateModel::Vacuum, Quadrature::P, 1_000_000, 99);
    let mut block = SampleBlock::new(grid, 1.0);
    block.samples = quantize(&xs, &grid, SlotKind::Data);
    let hist = histogram(&block, SlotKind::Data).unwrap();
    let model = gaussian_bin_masses(0.5, delta);
    let n = block.len() as f64;

    // Pool bins until each cell expects at least 5 counts.
    let (mut chi2, mut cells) = (0.0, 0usize);
    let (mut exp_acc, mut obs_acc) = (0.0, 0.0);
    for (k, p) in model.probs.iter().enumerate() {
        let bin = model.offset + k as i64;
        exp_acc += p * n;
        obs_acc += hist.prob(bin) * n;
        if exp_acc >= 5.0 {
            chi2 += (obs_acc - exp_acc).powi(2) / exp_acc;
            cells += 1;
            exp_acc = 0.0;
            obs_acc = 0.0;
        }
    }
    let crit = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(0.999);
    assert!(chi2 < crit, "chi2 {chi2} over {cells} cells, critical {crit}");
}
