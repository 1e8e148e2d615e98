mod common;

use common::{periodogram_bias_slope, periodogram_errors};
use fredom::linalg::{to_complex, CMatrix, RMatrix, C64, ZERO};
use fredom::rng::rng_from_seed;
use fredom::simgen::{
    experiment_a_model, experiment_b_model, generate_cscm, generate_nonlinear_svar,
    generate_svar, generate_transfer_ts, make_experiment1_model, random_cscm, sample_cscm, simulate_nonlinear_svar,
    ClusteredSvarDesign, CscmModel, FrequencyDagModel, SvarModel,
};
use fredom::{Error, SummaryDag, TopologicalOrder};

fn second_moments(x: &CMatrix) -> CMatrix {
    (x.adjoint() * x).unscale(x.nrows() as f64)
}

#[test]
fn zero_transfer_gives_unit_white_noise() {
    let model = FrequencyDagModel::constant(TopologicalOrder::identity(3), CMatrix::zeros(3, 3)).unwrap();
    let truth = generate_transfer_ts(&model, 4096, 1).unwrap();
    assert!(truth.series.is_real());
    assert_eq!(truth.dag.edge_count(), 0);
    let cov = second_moments(truth.series.data());
    for i in 0..3 {
        assert!((cov[(i, i)].re - 1.0).abs() < 0.1, "{}", cov[(i, i)]);
        for j in 0..i {
            assert!(cov[(i, j)].norm() < 0.1);
        }
    }
}

#[test]
fn sample_periodogram_matches_model_spectrum() {
    let model = make_experiment1_model(5, 0.6, 3).unwrap();
    assert!(model.support().edge_count() > 0);
    for (k, rel) in [3, 10, 20].into_iter().zip(periodogram_errors(&model, 64, 500, &[3, 10, 20])) {
        assert!(rel < 0.1, "k = {k}: relative Frobenius error {rel}");
    }
}

#[test]
fn expected_periodogram_converges_at_rate_one_over_t() {
    let model = make_experiment1_model(4, 0.9, 11).unwrap();
    let slope = periodogram_bias_slope(&model, &[256, 512, 1024, 2048]);
    assert!((slope + 1.0).abs() < 0.3, "slope {slope}");
}

#[test]
fn paired_models_generate_real_series() {
    for seed in 0..5 {
        let model = make_experiment1_model(6, 0.3, seed).unwrap();
        assert!(model.is_hermitian_paired());
        let truth = generate_transfer_ts(&model, 256, seed).unwrap();
        assert!(truth.series.is_real());
        assert!(truth.dag.topological_order().is_some());
        assert!(truth.dag.is_topological_order(&truth.order.perm));
    }
    let mut b = CMatrix::zeros(2, 2);
    b[(1, 0)] = C64::new(0.3, 0.8);
    let model = FrequencyDagModel::constant(TopologicalOrder::identity(2), b).unwrap();
    assert!(!model.is_hermitian_paired());
    assert!(!generate_transfer_ts(&model, 64, 0).unwrap().series.is_real());
    assert!(generate_transfer_ts(&model, 63, 0).is_err());
}

#[test]
fn experiment1_edge_count_is_binomial() {
    let seeds = 1000;
    let total: usize = (0..seeds).map(|s| make_experiment1_model(5, 0.2, s).unwrap().support().edge_count()).sum();
    let mean = total as f64 / seeds as f64;
    // Binomial(10, 0.2): mean 2, variance 1.6
    let sigma = (1.6 / seeds as f64).sqrt();
    assert!((mean - 2.0).abs() < 3.0 * sigma, "mean {mean}");
}

#[test]
fn experiment1_density_extremes() {
    assert_eq!(make_experiment1_model(3, 1.0, 0).unwrap().support().edges(), vec![(0, 1), (0, 2), (1, 2)]);
    for seed in 0..20 {
        assert_eq!(make_experiment1_model(8, 1e-12, seed).unwrap().support().edge_count(), 0);
    }
    assert!(make_experiment1_model(3, 0.0, 0).is_err());
    assert!(make_experiment1_model(3, 1.5, 0).is_err());
}

#[test]
fn experiment_a_truth_and_stationarity() {
    for seed in 0..10 {
        let model = experiment_a_model(seed).unwrap();
        assert!(model.spectral_radius() < 1.0);
        let truth = generate_svar(&model, 500, seed).unwrap();
        // 2→1, 3→4, 4→5 in 1-based labels
        assert_eq!(truth.dag.edges(), SummaryDag::from_edges(5, &[(1, 0), (2, 3), (3, 4)]).unwrap().edges());
        assert_eq!(truth.series.len(), 500);
        assert!(truth.series.is_real());
    }
}

#[test]
fn white_svar_is_white_noise() {
    let model = SvarModel::new(RMatrix::zeros(3, 3), vec![RMatrix::zeros(3, 3)], 1.0).unwrap();
    let truth = generate_svar(&model, 20_000, 5).unwrap();
    let x = truth.series.data();
    let cov = second_moments(x);
    let lag1 = (x.rows(1, x.nrows() - 1).adjoint() * x.rows(0, x.nrows() - 1)).unscale(x.nrows() as f64);
    for i in 0..3 {
        assert!((cov[(i, i)].re - 1.0).abs() < 0.05);
        for j in 0..3 {
            assert!(lag1[(i, j)].norm() < 0.05);
        }
    }
}

#[test]
fn nonstationary_svar_is_rejected() {
    let b1 = RMatrix::identity(2, 2) * 1.05;
    match SvarModel::new(RMatrix::zeros(2, 2), vec![b1], 1.0) {
        Err(Error::NonStationary(rho)) => assert!((rho - 1.05).abs() < 1e-12),
        other => panic!("expected rejection, got {other:?}"),
    }
}

#[test]
fn experiment_b_truth_is_block_diagonal() {
    let design = ClusteredSvarDesign::default();
    for seed in 0..5 {
        let model = experiment_b_model(15, &design, seed).unwrap();
        let truth = generate_svar(&model, 300, seed).unwrap();
        let cluster = |i: usize| i / 5;
        assert!(truth.dag.edge_count() > 0);
        for (from, to) in truth.dag.edges() {
            assert_eq!(cluster(from), cluster(to), "{from}→{to}");
        }
        for omega in [0.0, 0.07, 0.25, 0.41] {
            // C(ω) = (I − B₀) − Σ_j B_j e^{−2πijω}, Θ = C^H C
            let mut c = to_complex(&(RMatrix::identity(15, 15) - &model.b0));
            for (j, b) in model.lags.iter().enumerate() {
                c -= to_complex(b) * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * (j + 1) as f64 * omega);
            }
            let theta = c.adjoint() * &c;
            let got = model.inverse_spectrum(omega);
            assert!((&got - &theta).norm() < 1e-10 * theta.norm());
            for i in 0..15 {
                for j in 0..15 {
                    if cluster(i) != cluster(j) {
                        assert_eq!(got[(i, j)], ZERO);
                    }
                }
            }
        }
    }
    assert!(experiment_b_model(16, &design, 0).is_err());
}

#[test]
fn nonlinear_svar_is_bounded_and_replays() {
    for seed in 0..50 {
        let truth = generate_nonlinear_svar(1000, seed).unwrap();
        let max = truth.series.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max.is_finite() && max < 1e6, "seed {seed}: max {max}");
        assert!(truth.dag.is_topological_order(&truth.order.perm));
    }
    let a = generate_nonlinear_svar(300, 7).unwrap();
    let b = generate_nonlinear_svar(300, 7).unwrap();
    assert_eq!(a.series.data(), b.series.data());
    assert_ne!(a.series.data(), generate_nonlinear_svar(300, 8).unwrap().series.data());
    assert_eq!(a.dag.edges(), vec![(0, 2), (1, 0), (1, 2), (2, 3)]);
}

#[test]
fn nonlinear_svar_without_coefficients_is_independent_noise() {
    let mut rng = rng_from_seed(3);
    let x = simulate_nonlinear_svar(&[0.0; 9], 20_000, &mut rng).unwrap().real_data();
    let mean = x.row_mean();
    let centered = RMatrix::from_fn(x.nrows(), 4, |t, i| x[(t, i)] - mean[i]);
    let cov = centered.transpose() * &centered / x.nrows() as f64;
    // exp(0) shifts the fourth series by one
    assert!((mean[3] - 1.0).abs() < 0.05);
    for i in 0..4 {
        assert!((cov[(i, i)] - 1.0).abs() < 0.05);
        for j in 0..i {
            assert!(cov[(i, j)].abs() < 0.05);
        }
    }
}

#[test]
fn cscm_variance_ratio_matches_path_sum() {
    let b = C64::new(0.8, -1.1);
    let mut m = CMatrix::zeros(2, 2);
    m[(1, 0)] = b;
    let model = CscmModel::new(m).unwrap();
    let y = sample_cscm(&model, 100_000, &mut rng_from_seed(21)).unwrap();
    let cov = second_moments(y.data());
    let ratio = cov[(1, 1)].re / cov[(0, 0)].re;
    let expected = 1.0 + b.norm_sqr();
    assert!((ratio / expected - 1.0).abs() < 0.02, "{ratio} vs {expected}");
}

#[test]
fn cscm_without_edges_has_identity_covariance() {
    let model = CscmModel::new(CMatrix::zeros(4, 4)).unwrap();
    let cov = second_moments(sample_cscm(&model, 100_000, &mut rng_from_seed(22)).unwrap().data());
    assert!((cov - CMatrix::identity(4, 4)).norm() < 0.03);
}

#[test]
fn cscm_roots_have_minimal_variance() {
    let n = 20_000;
    let band = 3.0 / (n as f64).sqrt();
    for seed in 0..10 {
        let mut rng = rng_from_seed(seed);
        let model = random_cscm(6, &mut rng).unwrap();
        let cov = second_moments(sample_cscm(&model, n, &mut rng).unwrap().data());
        let var: Vec<f64> = (0..6).map(|i| cov[(i, i)].re).collect();
        let roots: Vec<usize> = (0..6).filter(|&i| model.dag.parents(i).is_empty()).collect();
        let max_root = roots.iter().map(|&i| var[i]).fold(0.0, f64::max);
        for &r in &roots {
            assert!((var[r] - 1.0).abs() < band, "root {r}: {}", var[r]);
        }
        for i in (0..6).filter(|i| !roots.contains(i)) {
            assert!(var[i] > max_root, "node {i}: {} <= {max_root}", var[i]);
        }
    }
}

#[test]
fn cscm_generation_is_deterministic_and_acyclic() {
    for seed in 0..20 {
        let a = generate_cscm(8, 50, seed).unwrap();
        assert!(a.dag.topological_order().is_some());
        assert!(a.dag.is_topological_order(&a.order.perm));
        let b = generate_cscm(8, 50, seed).unwrap();
        assert_eq!(a.series.data(), b.series.data());
        assert_eq!(a.dag, b.dag);
    }
    assert!(generate_cscm(1, 10, 0).is_err());
    // real and imaginary parts of every coefficient lie in ±[0.5, 2]
    let mut rng = rng_from_seed(4);
    for _ in 0..20 {
        let model = random_cscm(7, &mut rng).unwrap();
        for (from, to) in model.dag.edges() {
            let w = model.b[(to, from)];
            assert!((0.5..=2.0).contains(&w.re.abs()) && (0.5..=2.0).contains(&w.im.abs()));
        }
    }
}
