use hipgnn_core::model::encoding::{encode_eigenvalues, encode_scalar, proximity_closed_form, proximity_matrix, EigenEncoding};
use hipgnn_core::spectral::{decompose_graph, energy_profile, rayleigh_quotient, LaplacianKind};
use hipgnn_core::synth::{assign_gaussian_weights, generate_er, plant_anomalies, uniform_signal, PlantSpec, WeightScheme};
use hipgnn_core::theory::{
    flatten_experiment, heterogeneity_contrast, monte_carlo_variance, spectral_variance, spectral_variance_quadratic,
    verify_encoding, verify_rayleigh, FlattenSpec, TheoryError, TopologySpec,
};
use hipgnn_core::WeightedGraph;
use proptest::prelude::*;

#[test]
fn rayleigh_identity_on_random_graphs() {
    let report = verify_rayleigh(30, (5, 30), 9).unwrap();
    assert!(report.max_discrepancy <= 1e-9, "{report:?}");
    assert!(report.max_form_discrepancy <= 1e-9);
}

#[test]
fn rayleigh_hand_cases() {
    let g = WeightedGraph::from_edges(2, [(0, 1, 1.0)], (0.0, 2.0)).unwrap();
    let d = decompose_graph(&g, LaplacianKind::Regular, None).unwrap();
    let x = [1.0, -1.0];
    let p = energy_profile(&d, &x).unwrap();
    assert!((p.expectation - 2.0).abs() < 1e-12);
    assert!((rayleigh_quotient(&g, &x, LaplacianKind::Regular).unwrap() - 2.0).abs() < 1e-12);

    let g = generate_er(12, 0.5, 4).unwrap();
    let d = decompose_graph(&g, LaplacianKind::Regular, None).unwrap();
    let ones = [0.7; 12];
    assert!(energy_profile(&d, &ones).unwrap().expectation.abs() < 1e-12);
    assert!(rayleigh_quotient(&g, &ones, LaplacianKind::Regular).unwrap().abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spectral_variance_has_two_routes(n in 4usize..25, p in 0.2f64..0.9, seed in any::<u64>(), normalized in any::<bool>()) {
        let topo = generate_er(n, p, seed).unwrap();
        prop_assume!(topo.edge_count() > 0);
        let g = assign_gaussian_weights(&topo, &WeightScheme::new(1.0, 0.05, seed)).unwrap();
        let x = uniform_signal(n, seed ^ 1);
        let kind = if normalized { LaplacianKind::Normalized } else { LaplacianKind::Regular };
        let eig = spectral_variance(&g, &x, kind).unwrap();
        let quad = spectral_variance_quadratic(&g, &x, kind);
        prop_assert!((eig - quad).abs() <= 1e-9 * (1.0 + quad.abs()));
    }

    #[test]
    fn spectral_variance_is_relabeling_invariant(n in 4usize..20, seed in any::<u64>()) {
        let topo = generate_er(n, 0.5, seed).unwrap();
        let g = assign_gaussian_weights(&topo, &WeightScheme::new(1.0, 0.05, seed)).unwrap();
        let x = uniform_signal(n, seed ^ 3);
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
        prop_assume!({
            let mut s = perm.clone();
            s.sort_unstable();
            s == (0..n).collect::<Vec<_>>()
        });
        let h = g.permute_nodes(&perm).unwrap();
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[perm[i]] = x[i];
        }
        let a = spectral_variance(&g, &x, LaplacianKind::Regular).unwrap();
        let b = spectral_variance(&h, &y, LaplacianKind::Regular).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn proximity_depends_only_on_the_gap(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -5.0f64..5.0) {
        let dot = |x: f64, y: f64| {
            encode_scalar(x, 16).iter().zip(encode_scalar(y, 16)).map(|(p, q)| p * q).sum::<f64>()
        };
        prop_assert!((dot(a, b) - proximity_closed_form(a, b, 16)).abs() <= 1e-9);
        prop_assert!((dot(a, b) - dot(b, a)).abs() <= 1e-12);
        prop_assert!((dot(a + c, b + c) - dot(a, b)).abs() <= 1e-9);
    }
}

#[test]
fn encoding_examples_and_bounds() {
    let zero = encode_scalar(0.0, 6);
    assert_eq!(zero, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    let one = encode_scalar(1.0, 4);
    let expected = [100f64.sin(), 100f64.cos(), 1f64.sin(), 1f64.cos()];
    for (a, b) in one.iter().zip(expected) {
        assert!((a - b).abs() < 1e-15);
    }
    for (a, b) in one.iter().zip([-0.50637, 0.86232, 0.84147, 0.54030]) {
        assert!((a - b).abs() < 5e-6);
    }
    let enc = EigenEncoding::new(&[0.0, 0.3, 1.1, 1.9], 8).unwrap();
    assert_eq!(enc.encoded.cols(), 9);
    let rho = encode_eigenvalues(&[0.0, 0.3, 1.1, 1.9], 8).unwrap();
    assert_eq!(proximity_matrix(&rho), enc.proximity);
    for i in 0..4 {
        assert!((enc.proximity[(i, i)] - 4.0).abs() < 1e-12);
        for j in 0..4 {
            assert_eq!(enc.proximity[(i, j)], enc.proximity[(j, i)]);
            assert!(enc.proximity[(i, j)].abs() <= 4.0 + 1e-12);
        }
    }
    assert!(verify_encoding(1000, 32, 11).unwrap().passed(1e-9));
}

#[test]
fn monte_carlo_stderr_shrinks_with_draws() {
    let topo = generate_er(40, 0.15, 8).unwrap();
    let x = uniform_signal(40, 9);
    let run = |draws| {
        monte_carlo_variance(&topo, "er", 0.5, &[0.05], draws, &x, Some(9), LaplacianKind::Regular, 10).unwrap()
    };
    let (small, large) = (run(200), run(400));
    let ratio = large.stderr[0] / small.stderr[0];
    let target = 1.0 / 2f64.sqrt();
    assert!(ratio >= 0.75 * target && ratio <= 1.25 * target, "ratio {ratio}");
    assert!(small.stderr[0] > 0.0);
}

#[test]
fn monte_carlo_without_variance_is_exact() {
    let topo = generate_er(30, 0.2, 1).unwrap();
    let x = uniform_signal(30, 2);
    let r = monte_carlo_variance(&topo, "er", 0.5, &[0.0, 0.05], 5, &x, Some(2), LaplacianKind::Regular, 3).unwrap();
    assert_eq!(r.stderr[0], 0.0);
    assert_eq!(r.sigma2_values, vec![0.0, 0.05]);
    assert_eq!(r.mean_variance.len(), 2);
    assert!(matches!(
        monte_carlo_variance(&topo, "er", 0.5, &[0.05, 0.0], 5, &x, None, LaplacianKind::Regular, 3),
        Err(TheoryError::Parameter(_))
    ));
}

#[test]
fn single_level_flatten_passes_vacuously() {
    let spec = FlattenSpec::new(TopologySpec::Er { n: 60, p: 0.1 }, vec![0.03]);
    let report = flatten_experiment(&spec).unwrap();
    assert!(report.passed());
    assert_eq!(report.levels.len(), 1);
    let kde = &report.levels[0].kde;
    assert!((kde.trapezoid_integral() - 1.0).abs() < 1e-3);
}

#[test]
fn heterogeneity_contrast_cases() {
    let topo = generate_er(150, 0.08, 5).unwrap();
    let g = plant_anomalies(&topo, &PlantSpec { seed: 6, ..PlantSpec::default() }).unwrap();
    let x = uniform_signal(150, 7);
    let c = heterogeneity_contrast(&g, &x, LaplacianKind::Regular).unwrap();
    assert!(c.variance_with > c.variance_without, "{c:?}");

    let flat = plant_anomalies(
        &topo,
        &PlantSpec {
            sigma2_anom: 1e-300,
            ..PlantSpec::default()
        },
    )
    .unwrap();
    let c = heterogeneity_contrast(&flat, &x, LaplacianKind::Regular).unwrap();
    assert!((c.variance_with - c.variance_without).abs() <= 1e-9 * c.variance_with);

    let unlabeled = generate_er(10, 0.5, 1).unwrap();
    let labels = vec![hipgnn_core::Label::Negative; 10];
    let g = unlabeled.with_labels(labels).unwrap();
    assert!(matches!(
        heterogeneity_contrast(&g, &uniform_signal(10, 1), LaplacianKind::Regular),
        Err(TheoryError::NoPositives)
    ));
}
