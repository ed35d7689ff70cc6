mod common;

use common::{exact_mle, exact_mle_from, Enumeration};
use mrflab::mle::{fit_mle, CdConfig};
use mrflab::model::{build_grid, sample_dataset, sufficient_stats};
use mrflab::ThetaVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn mle_matches_exact_gradient_ascent() {
    let g = build_grid(3, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let truth: Vec<f64> = (0..g.num_edges()).map(|_| rng.random_range(0.5..0.8)).collect();
    let truth = ThetaVector::new(truth).unwrap();
    let data = sample_dataset(&truth, &g, 1000, &mut rng, 1000, 10).unwrap();
    let rate = sufficient_stats(&data, &g).unwrap().mean();
    let oracle = exact_mle(&g, &rate);

    let fit = fit_mle(&data, &g, &CdConfig { seed: 5, ..CdConfig::default() }).unwrap();
    for (j, (a, b)) in fit.theta_hat.as_slice().iter().zip(&oracle).enumerate() {
        assert!((a - b).abs() < 0.02, "edge {j}: cd {a} vs exact {b}");
    }
}

#[test]
fn exact_gradient_small_at_fit_with_large_pool() {
    let g = build_grid(2, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let truth = ThetaVector::new((0..g.num_edges()).map(|_| rng.random_range(0.5..0.8)).collect()).unwrap();
    let data = sample_dataset(&truth, &g, 1000, &mut rng, 1000, 10).unwrap();
    let rate = sufficient_stats(&data, &g).unwrap().mean();
    let cfg = CdConfig {
        num_particles: 10_000,
        max_iters: 3000,
        seed: 6,
        ..CdConfig::default()
    };
    let fit = fit_mle(&data, &g, &cfg).unwrap();
    let mean = Enumeration::new(&g, fit.theta_hat.as_slice()).mean();
    let norm: f64 = rate.iter().zip(&mean).map(|(r, m)| (r - m).powi(2)).sum::<f64>().sqrt();
    assert!(norm <= 5.0 * cfg.grad_tol, "exact gradient norm {norm}");
}

#[test]
fn exact_ascent_is_start_independent() {
    let g = build_grid(2, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let truth = ThetaVector::new((0..g.num_edges()).map(|_| rng.random_range(0.5..0.8)).collect()).unwrap();
    let data = sample_dataset(&truth, &g, 500, &mut rng, 1000, 10).unwrap();
    let rate = sufficient_stats(&data, &g).unwrap().mean();
    let reference = exact_mle(&g, &rate);
    for _ in 0..10 {
        let start: Vec<f64> = (0..g.num_edges()).map(|_| rng.random_range(0.1..0.9)).collect();
        let other = exact_mle_from(&g, &rate, &start);
        for (a, b) in other.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-4);
        }
    }
}

#[test]
fn fitted_theta_stays_in_open_interval() {
    let g = build_grid(2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let truth = ThetaVector::uniform(4, 0.95).unwrap();
    let data = sample_dataset(&truth, &g, 50, &mut rng, 100, 2).unwrap();
    let fit = fit_mle(&data, &g, &CdConfig { step_size: 5.0, ..CdConfig::default() }).unwrap();
    assert!(fit.theta_hat.as_slice().iter().all(|&t| t > 0.0 && t < 1.0));
}

#[test]
fn cd_gradient_expectation_matches_enumeration() {
    use common::draw_index;
    use mrflab::mle::cd_gradient;
    use mrflab::{Configuration, SufficientStats};

    let g = build_grid(2, 2).unwrap();
    let theta = ThetaVector::new(vec![0.55, 0.7, 0.62, 0.78]).unwrap();
    let en = Enumeration::new(&g, theta.as_slice());
    let probs = en.probs();
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let s = 100_000;
    let particles: Vec<Configuration> = (0..s)
        .map(|_| Configuration::from_mask(draw_index(&probs, rng.random()) as u64, 4))
        .collect();
    let stats = SufficientStats { agree: vec![600, 700, 650, 800], n: 1000 };
    let grad = cd_gradient(&stats, &particles, &theta, &g).unwrap();
    let mean = en.mean();
    for j in 0..4 {
        let expected = stats.agree[j] as f64 / 1000.0 - mean[j];
        let se = (mean[j] * (1.0 - mean[j]) / s as f64).sqrt();
        assert!((grad[j] - expected).abs() < 3.0 * se, "edge {j}");
    }
}
