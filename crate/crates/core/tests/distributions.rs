//! Monte-Carlo checks of the distributional claims behind each operation.

use latent_match::ops::{self, OperationSpec};
use latent_match::priors::{self, PriorSpec, ScalarDist};
use latent_match::stats;
use latent_match::transport::{self, MapBuildConfig, TransportMap1D};
use latent_match::LatentBatch;

fn uniform(d: usize) -> PriorSpec {
    PriorSpec::uniform(1.0, d).unwrap()
}

fn gaussian(d: usize) -> PriorSpec {
    PriorSpec::gaussian(1.0, d).unwrap()
}

fn var_of(batch: &LatentBatch) -> f64 {
    stats::mean_var(batch.as_slice()).1
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want
}

#[test]
fn prior_ecdf_within_dkw_band() {
    for prior in [uniform(1), gaussian(1)] {
        let b = priors::sample(&prior, 1_000_000, 21).unwrap();
        let r = stats::ks_statistic(b.as_slice(), &prior.component).unwrap();
        assert!(r.statistic <= 0.002, "{:?}: {}", prior.component, r.statistic);
    }
}

#[test]
fn linear_midpoint_variance_uniform() {
    let prior = uniform(1);
    let y = ops::sample_operation(&OperationSpec::TwoPointInterp { t: 0.5 }, &prior, 1_000_000, 1).unwrap();
    assert!(rel_err(var_of(&y), 0.5 / 3.0) < 0.02);
}

#[test]
fn n_point_variance_gaussian() {
    let op = OperationSpec::NPointInterp { weights: vec![0.25; 4] };
    let y = ops::sample_operation(&op, &gaussian(1), 100_000, 2).unwrap();
    assert!(rel_err(var_of(&y), 0.25) < 0.05);
}

#[test]
fn vicinity_variance_gaussian() {
    let y = ops::sample_operation(&OperationSpec::Vicinity { eps: 0.5 }, &gaussian(1), 100_000, 3).unwrap();
    assert!(rel_err(var_of(&y), 1.25) < 0.02);
}

#[test]
fn analogy_variance_gaussian() {
    let y = ops::sample_operation(&OperationSpec::Analogy, &gaussian(1), 100_000, 4).unwrap();
    assert!(rel_err(var_of(&y), 3.0) < 0.02);
}

#[test]
fn unmatched_walk_variance_grows() {
    let prior = gaussian(1);
    let start = priors::sample(&prior, 10_000, 5).unwrap();
    let traj = ops::random_walk_batch(&start, 0.5, 10, false, &prior, 6).unwrap();
    assert!(rel_err(var_of(&traj[10]), 3.5) < 0.05);
}

#[test]
fn midpoint_ks_against_uniform_is_triangle_gap() {
    // sup |F_triangle − F_uniform| = 1/8, attained at y = ±1/2.
    let oracle = (0..=20_000)
        .map(|i| -1.0 + i as f64 / 10_000.0)
        .map(|y| (transport::uniform_interp_cdf(y, 0.5) - 0.5 * (y + 1.0)).abs())
        .fold(0.0, f64::max);
    assert!((oracle - 0.125).abs() < 1e-8);
    let y = ops::sample_operation(&OperationSpec::TwoPointInterp { t: 0.5 }, &uniform(1), 1_000_000, 7).unwrap();
    let r = stats::ks_statistic(y.as_slice(), &ScalarDist::uniform(1.0).unwrap()).unwrap();
    assert!((r.statistic - oracle).abs() <= 0.005, "{}", r.statistic);
}

#[test]
fn same_distribution_ks_small() {
    let prior = gaussian(1);
    let b = priors::sample(&prior, 100_000, 8).unwrap();
    assert!(stats::ks_statistic(b.as_slice(), &prior.component).unwrap().statistic < 0.01);
}

#[test]
fn ks_consistency_over_repetitions() {
    let prior = uniform(1);
    let passes = (0..100)
        .filter(|&rep| {
            let b = priors::sample(&prior, 100_000, 1000 + rep).unwrap();
            stats::ks_statistic(b.as_slice(), &prior.component).unwrap().statistic < 0.01
        })
        .count();
    assert!(passes >= 99, "{passes}");
}

#[test]
fn uniform_histogram_bins_are_flat() {
    let b = priors::sample(&uniform(1), 1_000_000, 9).unwrap();
    let h = stats::histogram(b.as_slice(), 100, (-1.0, 1.0)).unwrap();
    assert_eq!(h.total(), 1_000_000);
    for c in &h.counts {
        assert!((*c as f64 - 10_000.0).abs() <= 500.0, "{c}");
    }
}

#[test]
fn squared_norm_moments_match_clt() {
    let prior = uniform(100);
    let b = priors::sample(&prior, 100_000, 10).unwrap();
    let norms = stats::squared_norm_samples(&b);
    let (mean, var) = stats::mean_var(&norms);
    assert!((mean - 33.33).abs() <= 0.1);
    assert!((var.sqrt() - 2.98).abs() <= 0.1);
    let clt = stats::clt_squared_norm(&prior, None).unwrap();
    assert!(rel_err(mean, clt.mean) < 0.01);
    assert!(rel_err(var, clt.var) < 0.10);

    let mid = OperationSpec::TwoPointInterp { t: 0.5 };
    let y = ops::sample_operation(&mid, &prior, 100_000, 11).unwrap();
    let (mmean, mvar) = stats::mean_var(&stats::squared_norm_samples(&y));
    let clt = stats::clt_squared_norm(&prior, Some(&mid)).unwrap();
    assert!(rel_err(mmean, clt.mean) < 0.01);
    // The quarter-variance approximation ignores the cross term
    // 6·E[Z²]² in E[(Z₁+Z₂)⁴]. For uniform components the exact per-
    // component value is E[Y⁴] − E[Y²]² = 1/15 − 1/36 = 7/180.
    assert!(rel_err(mvar, 100.0 * 7.0 / 180.0) < 0.10, "{mvar}");
    assert!(rel_err(mvar, clt.var) > 0.5);
}

#[test]
fn gaussian_squared_norm_moments_match_clt() {
    let prior = gaussian(100);
    for op in [None, Some(OperationSpec::TwoPointInterp { t: 0.5 })] {
        let b = match &op {
            None => priors::sample(&prior, 100_000, 18).unwrap(),
            Some(op) => ops::sample_operation(op, &prior, 100_000, 19).unwrap(),
        };
        let (mean, var) = stats::mean_var(&stats::squared_norm_samples(&b));
        let clt = stats::clt_squared_norm(&prior, op.as_ref()).unwrap();
        assert!(rel_err(mean, clt.mean) < 0.01, "{op:?} {mean}");
        assert!(rel_err(var, clt.var) < 0.10, "{op:?} {var}");
    }
}

#[test]
fn gaussian_tabulated_map_matches_scale() {
    let prior = gaussian(1);
    let map = transport::build_empirical_map(
        &OperationSpec::TwoPointInterp { t: 0.5 },
        &prior,
        1_000_000,
        1024,
        12,
    )
    .unwrap();
    let worst = (0..=400)
        .map(|i| -2.0 + i as f64 / 100.0)
        .map(|y| (map.apply(y) - std::f64::consts::SQRT_2 * y).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.02, "{worst}");
}

#[test]
fn uniform_tabulated_map_matches_closed_form() {
    let prior = uniform(1);
    let map = transport::build_empirical_map(
        &OperationSpec::TwoPointInterp { t: 0.5 },
        &prior,
        1_000_000,
        1024,
        13,
    )
    .unwrap();
    let worst = (0..=198)
        .map(|i| -0.99 + i as f64 / 100.0)
        .map(|y| (map.apply(y) - transport::uniform_interp_map(y, 0.5)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.01, "{worst}");
}

#[test]
fn matched_midpoints_recover_uniform_per_component() {
    let prior = uniform(100);
    let mid = OperationSpec::TwoPointInterp { t: 0.5 };
    let operands = ops::sample_operands(&mid, &prior, 100_000, 14).unwrap();
    let refs: Vec<&LatentBatch> = operands.iter().collect();
    let y = transport::matched_operation(&mid, &prior, &refs, &MapBuildConfig::default(), 0).unwrap();
    for j in 0..y.d() {
        let r = stats::ks_statistic(&y.column(j), &prior.component).unwrap();
        assert!(r.statistic < 0.01, "component {j}: {}", r.statistic);
    }
}

#[test]
fn matched_midpoint_variance_uniform_million() {
    let prior = uniform(1);
    let mid = OperationSpec::TwoPointInterp { t: 0.5 };
    let operands = ops::sample_operands(&mid, &prior, 1_000_000, 15).unwrap();
    let refs: Vec<&LatentBatch> = operands.iter().collect();
    let y = transport::matched_operation(&mid, &prior, &refs, &MapBuildConfig::default(), 0).unwrap();
    assert!(rel_err(var_of(&y), 1.0 / 3.0) < 0.01);
}

#[test]
fn distribution_recovery_for_every_supported_pair() {
    let ops_list = [
        OperationSpec::TwoPointInterp { t: 0.5 },
        OperationSpec::TwoPointInterp { t: 0.8 },
        OperationSpec::NPointInterp { weights: vec![0.25; 4] },
        OperationSpec::NPointInterp { weights: vec![0.5, 0.3, 0.2] },
        OperationSpec::Vicinity { eps: 0.5 },
        OperationSpec::Vicinity { eps: 2.0 },
        OperationSpec::Analogy,
    ];
    for prior in [uniform(1), gaussian(1), PriorSpec::uniform(2.0, 1).unwrap(), PriorSpec::gaussian(0.5, 1).unwrap()] {
        for (i, op) in ops_list.iter().enumerate() {
            let operands = ops::sample_operands(op, &prior, 100_000, 100 + i as u64).unwrap();
            let refs: Vec<&LatentBatch> = operands.iter().collect();
            let y = transport::matched_operation(op, &prior, &refs, &MapBuildConfig::default(), 7).unwrap();
            let r = stats::ks_statistic(y.as_slice(), &prior.component).unwrap();
            assert!(r.statistic < 0.01, "{:?} {op:?}: {}", prior.component, r.statistic);
        }
    }
}

#[test]
fn matched_uniform_walk_stays_uniform() {
    let prior = uniform(1);
    let start = priors::sample(&prior, 100_000, 16).unwrap();
    let traj = ops::random_walk_batch(&start, 0.3, 5, true, &prior, 17).unwrap();
    for (s, b) in traj.iter().enumerate() {
        let r = stats::ks_statistic(b.as_slice(), &prior.component).unwrap();
        assert!(r.statistic < 0.01, "step {s}: {}", r.statistic);
    }
}

#[test]
fn matched_maps_are_monotone() {
    let cfg = MapBuildConfig { n_samples: 100_000, knots: 256 };
    let probe: Vec<f64> = (0..1000).map(|i| -4.0 + 8.0 * i as f64 / 999.0).collect();
    let ops_list = [
        OperationSpec::TwoPointInterp { t: 0.3 },
        OperationSpec::NPointInterp { weights: vec![0.1, 0.2, 0.7] },
        OperationSpec::Vicinity { eps: 0.7 },
        OperationSpec::Analogy,
    ];
    for prior in [uniform(1), gaussian(1)] {
        for op in &ops_list {
            let maps = [
                transport::matched_map(op, &prior, &cfg, 1).unwrap(),
                transport::build_empirical_map(op, &prior, cfg.n_samples, cfg.knots, 2).unwrap(),
            ];
            for map in &maps {
                let out: Vec<f64> = probe.iter().map(|&y| map.apply(y)).collect();
                assert!(out.windows(2).all(|w| w[0] <= w[1]), "{op:?} {map:?}");
            }
        }
    }
}

#[test]
fn tabulated_map_csv_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.csv");
    let map = transport::build_empirical_map(&OperationSpec::Analogy, &uniform(1), 20_000, 64, 3).unwrap();
    let TransportMap1D::Tabulated(table) = map else { panic!() };
    table.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("y,z\n"));
    assert_eq!(text.lines().count(), table.len() + 1);
    let back = transport::MonotoneTable::read_csv(&path).unwrap();
    assert_eq!(back.len(), table.len());
    for ((y0, z0), (y1, z1)) in table.knots().zip(back.knots()) {
        assert!((y0 - y1).abs() <= 1e-8 * y0.abs().max(1.0));
        assert!((z0 - z1).abs() <= 1e-8 * z0.abs().max(1.0));
    }
}
