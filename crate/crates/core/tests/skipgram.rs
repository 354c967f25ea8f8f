use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use finsent::embed::{negative_sampling_loss, train_skipgram, SkipgramConfig};
use finsent::textprep::TokenizedDocument;

/// Plain `-ln σ(u·v) - Σ ln σ(-u_i·v)` straight from the definition.
fn reference_loss(v: &[f64], u: &[f64], negs: &[Vec<f64>]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    -sig(dot(u, v)).ln() - negs.iter().map(|n| sig(-dot(n, v)).ln()).sum::<f64>()
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(1e-6)
}

#[test]
fn pair_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let d = 6;
    let delta = 1e-5;
    for _ in 0..20 {
        let mut vec = |s: f64| (0..d).map(|_| rng.random_range(-s..s)).collect::<Vec<f64>>();
        let v = vec(1.5);
        let u = vec(1.5);
        let negs: Vec<Vec<f64>> = (0..4).map(|_| vec(1.5)).collect();
        let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let g = negative_sampling_loss(&v, &u, &neg_refs);
        assert!((g.loss - reference_loss(&v, &u, &negs)).abs() < 1e-12);

        let fd = |f: &dyn Fn(f64) -> f64| (f(delta) - f(-delta)) / (2.0 * delta);
        for k in 0..d {
            let shifted = |x: &[f64], h: f64| {
                let mut x = x.to_vec();
                x[k] += h;
                x
            };
            let n_center = fd(&|h| reference_loss(&shifted(&v, h), &u, &negs));
            let n_context = fd(&|h| reference_loss(&v, &shifted(&u, h), &negs));
            assert!(rel_err(g.center[k], n_center) < 1e-6);
            assert!(rel_err(g.context[k], n_context) < 1e-6);
            for (j, neg_grad) in g.negatives.iter().enumerate() {
                let n_neg = fd(&|h| {
                    let mut negs = negs.clone();
                    negs[j][k] += h;
                    reference_loss(&v, &u, &negs)
                });
                assert!(rel_err(neg_grad[k], n_neg) < 1e-6);
            }
        }
    }
}

#[test]
fn epoch_loss_is_non_increasing_up_to_sgd_noise() {
    // Twenty disjoint 8-word topics. With only a handful of word types, most
    // sampled negatives are true co-occurrences and the online loss drifts
    // upward once converged, so the vocabulary is kept realistic.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pools: Vec<Vec<String>> = (0..20).map(|c| (0..8).map(|i| format!("w{c}x{i}")).collect()).collect();
    let corpus: Vec<TokenizedDocument> = (0..1000)
        .map(|_| {
            let pool = &pools[rng.random_range(0..pools.len())];
            TokenizedDocument::new((0..7).map(|_| pool.choose(&mut rng).unwrap().clone()).collect())
        })
        .collect();
    let config = SkipgramConfig {
        dimensions: 16,
        window: 3,
        negatives: 5,
        min_count: 1,
        epochs: 8,
        seed: 11,
        ..SkipgramConfig::default()
    };
    let losses = train_skipgram(&corpus, &config).unwrap().epoch_losses;
    assert_eq!(losses.len(), 8);
    let increases: Vec<f64> = losses.windows(2).filter(|w| w[1] > w[0]).map(|w| w[1] / w[0] - 1.0).collect();
    assert!(increases.len() <= 1, "{losses:?}");
    assert!(increases.iter().all(|&r| r < 0.05), "{losses:?}");
    assert!(losses[7] < losses[0]);
}
