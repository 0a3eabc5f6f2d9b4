use cic_core::cic::{
    cic_index, cic_score, kl_to_standard_normal, ortho, reparameterize, train, CicConfig, CicModel,
    GaussianPosterior,
};
use cic_core::embedding::EmbeddedPairDataset;
use cic_core::evaluation::roc_auc;
use cic_core::Matrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vec_pair(len: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    len.prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec(-10.0..10.0f64, n),
        )
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ortho_identities((u, v) in vec_pair(1..12), c in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64]) {
        prop_assume!(norm(&u) > 1e-6 && norm(&v) > 1e-6);
        let s = ortho(&u, &u).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-12);
        let a = ortho(&u, &v).unwrap();
        let b = ortho(&v, &u).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
        let scaled: Vec<f64> = u.iter().map(|x| c * x).collect();
        let d = ortho(&scaled, &v).unwrap();
        prop_assert!((a - d).abs() < 1e-10);
    }

    #[test]
    fn kl_is_non_negative(
        rows in 1usize..6,
        cols in 1usize..6,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-3.0..3.0)).collect();
        let ls: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-3.0..3.0)).collect();
        let post = GaussianPosterior::new(
            Matrix::from_vec(rows, cols, mu).unwrap(),
            Matrix::from_vec(rows, cols, ls).unwrap(),
        )
        .unwrap();
        let kl = kl_to_standard_normal(&post);
        prop_assert!(kl > 0.0);
    }

    #[test]
    fn roc_auc_matches_pair_count(
        data in prop::collection::vec((0u8..6, any::<bool>()), 2..40),
    ) {
        let scores: Vec<f64> = data.iter().map(|(s, _)| f64::from(*s) / 5.0).collect();
        let labels: Vec<bool> = data.iter().map(|(_, l)| *l).collect();
        let pos: Vec<f64> = scores.iter().zip(&labels).filter(|(_, l)| **l).map(|(s, _)| *s).collect();
        let neg: Vec<f64> = scores.iter().zip(&labels).filter(|(_, l)| !**l).map(|(s, _)| *s).collect();
        match roc_auc(&scores, &labels) {
            Err(_) => prop_assert!(pos.is_empty() || neg.is_empty()),
            Ok(curve) => {
                let mut wins = 0.0;
                for p in &pos {
                    for n in &neg {
                        wins += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
                    }
                }
                let brute = wins / (pos.len() * neg.len()) as f64;
                prop_assert!((curve.auroc - brute).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn roc_auc_oracle_on_500_sets() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 500 {
        let n = rng.random_range(2..60);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..8u8))).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        let Ok(curve) = roc_auc(&scores, &labels) else { continue };
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] && !labels[j] {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        assert!((curve.auroc - wins / pairs).abs() < 1e-12);
        checked += 1;
    }
}

#[test]
fn kl_zero_only_at_standard_normal() {
    let zero = GaussianPosterior::new(Matrix::zeros(3, 4), Matrix::zeros(3, 4)).unwrap();
    assert_eq!(kl_to_standard_normal(&zero), 0.0);
    for (i, delta) in [(0, 1e-3), (5, -1e-3), (11, 1e-4)] {
        let mut mu = Matrix::zeros(3, 4);
        mu.as_mut_slice()[i] = delta;
        let p = GaussianPosterior::new(mu, Matrix::zeros(3, 4)).unwrap();
        assert!(kl_to_standard_normal(&p) > 0.0);
        let mut ls = Matrix::zeros(3, 4);
        ls.as_mut_slice()[i] = delta;
        let p = GaussianPosterior::new(Matrix::zeros(3, 4), ls).unwrap();
        assert!(kl_to_standard_normal(&p) > 0.0);
    }
}

/// Simpson integration of `q log(q / p)` for one coordinate.
fn kl_quadrature(mu: f64, sigma: f64) -> f64 {
    let lo = mu - 14.0 * sigma;
    let hi = mu + 14.0 * sigma;
    let n = 40_000;
    let h = (hi - lo) / n as f64;
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let f = |z: f64| {
        let lq = -0.5 * ((z - mu) / sigma).powi(2) - sigma.ln() - 0.5 * ln2pi;
        let lp = -0.5 * z * z - 0.5 * ln2pi;
        lq.exp() * (lq - lp)
    };
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + k as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn kl_matches_quadrature() {
    let cases = [(0.0, 1.0), (1.5, 0.3), (-2.0, 2.5), (0.7, 0.05)];
    for (mu, sigma) in cases {
        let post = GaussianPosterior::new(
            Matrix::from_vec(1, 1, vec![mu]).unwrap(),
            Matrix::from_vec(1, 1, vec![f64::ln(sigma)]).unwrap(),
        )
        .unwrap();
        let closed = kl_to_standard_normal(&post);
        let numeric = kl_quadrature(mu, sigma);
        assert!((closed - numeric).abs() < 1e-8, "{mu} {sigma}: {closed} vs {numeric}");
    }
    // dimensions add and rows average
    let post = GaussianPosterior::new(
        Matrix::from_rows(&[[1.5, -2.0], [0.0, 0.0]]).unwrap(),
        Matrix::from_rows(&[[f64::ln(0.3), f64::ln(2.5)], [0.0, 0.0]]).unwrap(),
    )
    .unwrap();
    let expected = (kl_quadrature(1.5, 0.3) + kl_quadrature(-2.0, 2.5)) / 2.0;
    assert!((kl_to_standard_normal(&post) - expected).abs() < 1e-8);
}

#[test]
fn reparameterized_draws_have_posterior_moments() {
    let n = 100_000;
    let mu = [0.5, -1.25, 3.0];
    let sigma = [1.0, 0.2, 2.0];
    let post = GaussianPosterior::new(
        Matrix::from_vec(n, 3, (0..n).flat_map(|_| mu).collect()).unwrap(),
        Matrix::from_vec(n, 3, (0..n).flat_map(|_| sigma.map(f64::ln)).collect()).unwrap(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let z = reparameterize(&post, &mut rng);
    for j in 0..3 {
        let col = z.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // about five standard errors
        assert!((mean - mu[j]).abs() < 5.0 * sigma[j] / (n as f64).sqrt());
        let s2 = sigma[j] * sigma[j];
        assert!((var - s2).abs() < 5.0 * s2 * (2.0 / n as f64).sqrt());
    }
}

#[test]
fn score_in_unit_interval_over_100_models() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..100 {
        let dim = rng.random_range(1..5);
        let n = rng.random_range(8..40);
        let d = rng.random_range(1..4);
        let cfg = CicConfig {
            d_private: d,
            d_shared: d,
            hidden: vec![rng.random_range(2..8)],
            epochs: if k % 2 == 0 { 0 } else { rng.random_range(1..4) },
            batch_size: 16,
            seed: k,
            ..CicConfig::default()
        };
        let x: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let data = EmbeddedPairDataset {
            cause_rows: Matrix::from_vec(n, dim, x).unwrap(),
            effect_rows: Matrix::from_vec(n, dim, y).unwrap(),
            sample_times: (0..n).collect(),
        };
        let score = if cfg.epochs == 0 {
            let mut init = ChaCha8Rng::seed_from_u64(k);
            let model = CicModel::new(dim, &cfg, &mut init).unwrap();
            let (p, s) = model.encode_x(&data.cause_rows).unwrap();
            cic_score(p.mean_norm(), s.mean_norm())
        } else {
            let trained = train(&data, &cfg).unwrap();
            cic_index(&trained, &data).unwrap().score
        };
        assert!((0.0..=1.0).contains(&score), "model {k}: {score}");
    }
    assert_eq!(cic_score(0.0, 0.0), 0.0);
    assert_eq!(cic_score(0.0, 2.0), 1.0);
    assert_eq!(cic_score(3.0, 0.0), 0.0);
}
