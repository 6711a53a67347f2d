mod support;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use troop_core::classifier::{predict, train, FeatureMatrix, Hyperparameters, TrainedModel};
use troop_core::evaluation::accuracy;

use support::normal_cdf;

/// Two unit-covariance Gaussians in the plane whose means are `gap` apart
/// along the first axis.
fn two_gaussians(n: usize, gap: f64, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let z0: f64 = StandardNormal.sample(&mut rng);
        let z1: f64 = StandardNormal.sample(&mut rng);
        rows.push(vec![z0 + class as f64 * gap, z1]);
        targets.push(if class == 0 { "neg" } else { "pos" }.to_string());
    }
    FeatureMatrix::new(vec!["u".into(), "v".into()], rows, targets, (0..n).collect()).unwrap()
}

fn classes(model: &TrainedModel, m: &FeatureMatrix) -> Vec<String> {
    predict(model, &m.without_targets()).unwrap().into_iter().map(|p| p.class).collect()
}

fn mixed(n: usize, seed: u64) -> FeatureMatrix {
    let base = two_gaussians(n, 1.5, seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let r = base.row(i);
            vec![r[0], r[1], r[0] * 0.5 - r[1], (i % 7) as f64]
        })
        .collect();
    let names = ["a", "b", "c", "d"].map(String::from).to_vec();
    FeatureMatrix::new(names, rows, base.targets().to_vec(), (0..n).collect()).unwrap()
}

fn with_rows(m: &FeatureMatrix, names: Vec<String>, f: impl Fn(&[f64]) -> Vec<f64>) -> FeatureMatrix {
    let rows = (0..m.n_rows()).map(|i| f(m.row(i))).collect();
    FeatureMatrix::new(names, rows, m.targets().to_vec(), m.group_keys().to_vec()).unwrap()
}

#[test]
fn two_gaussian_heldout_accuracy_near_bayes() {
    // Bayes accuracy for equal priors and unit covariance is Phi(gap / 2).
    let gap = 2.0 * 1.4051;
    let bayes = normal_cdf(gap / 2.0);
    assert!((bayes - 0.92).abs() < 1e-3, "{bayes}");
    let train_set = two_gaussians(500, gap, 1);
    let test_set = two_gaussians(20_000, gap, 2);
    let model = train(&train_set, &Hyperparameters::default()).unwrap();
    let acc = accuracy(&classes(&model, &test_set), test_set.targets()).unwrap();
    assert!((0.85..=0.95).contains(&acc), "held-out accuracy {acc}");
    assert!(acc <= bayes + 0.01);
}

#[test]
fn probabilities_are_normalized() {
    let m = mixed(300, 3);
    let model = train(&m, &Hyperparameters { rounds: 20, ..Default::default() }).unwrap();
    for p in predict(&model, &m.without_targets()).unwrap() {
        assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        assert!(p.probabilities.iter().all(|&q| q > 0.0 && q < 1.0));
    }
}

#[test]
fn cubing_a_column_keeps_predictions() {
    let m = mixed(400, 4);
    // Full sampling: out-of-sample rows between two training values would be
    // routed by a midpoint threshold, which a cube moves.
    let hp = Hyperparameters { rounds: 30, ..Default::default() };
    let before = classes(&train(&m, &hp).unwrap(), &m);
    let cubed = with_rows(&m, m.feature_names().to_vec(), |r| vec![r[0].powi(3), r[1], r[2], r[3]]);
    let after = classes(&train(&cubed, &hp).unwrap(), &cubed);
    assert_eq!(before, after);
}

#[test]
fn constant_column_changes_nothing() {
    let m = mixed(300, 5);
    let hp = Hyperparameters { rounds: 25, ..Default::default() };
    let reference = predict(&train(&m, &hp).unwrap(), &m.without_targets()).unwrap();
    let mut names = vec!["k".to_string()];
    names.extend(m.feature_names().iter().cloned());
    let padded = with_rows(&m, names, |r| {
        let mut v = vec![4.25];
        v.extend_from_slice(r);
        v
    });
    let got = predict(&train(&padded, &hp).unwrap(), &padded.without_targets()).unwrap();
    assert_eq!(reference, got);
}

#[test]
fn prediction_is_by_column_name() {
    let m = mixed(300, 6);
    let model = train(&m, &Hyperparameters { rounds: 25, ..Default::default() }).unwrap();
    let names: Vec<String> = ["d", "b", "a", "c"].map(String::from).to_vec();
    let permuted = with_rows(&m, names, |r| vec![r[3], r[1], r[0], r[2]]);
    assert_eq!(predict(&model, &m.without_targets()).unwrap(), predict(&model, &permuted.without_targets()).unwrap());
}

#[test]
fn training_is_deterministic_and_round_trips() {
    let m = mixed(300, 7);
    let hp = Hyperparameters { rounds: 15, subsample_fraction: 0.5, seed: 3, ..Default::default() };
    let a = train(&m, &hp).unwrap();
    let b = train(&m, &hp).unwrap();
    assert_eq!(a, b);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    a.save(&path).unwrap();
    let loaded = TrainedModel::load(&path).unwrap();
    assert_eq!(predict(&a, &m.without_targets()).unwrap(), predict(&loaded, &m.without_targets()).unwrap());
}

#[test]
fn separable_training_set_is_reproduced() {
    let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![i as f64, ((i * 37) % 11) as f64]).collect();
    let targets: Vec<String> = (0..60).map(|i| ["lo", "mid", "hi"][i / 20].to_string()).collect();
    let m = FeatureMatrix::new(vec!["x".into(), "noise".into()], rows, targets, (0..60).collect()).unwrap();
    let model = train(&m, &Hyperparameters { rounds: 10, ..Default::default() }).unwrap();
    assert_eq!(classes(&model, &m), m.targets());
}
