use blamebench::explainers::{exact_shapley, random_attribution};
use blamebench::groundtruth::{mias_gnb, mias_linear, mias_logistic};
use blamebench::metrics::{cosine_similarity, euclidean_similarity, spearman_correlation, topk_agreement, TopKMode};
use blamebench::models::{GaussianNbModel, LinearModel, LogisticModel, MlpModel, Output};
use blamebench::robustness::{importance_by_deletion, NullificationStrategy};
use blamebench::synthdata::{PolynomialSpec, PolynomialTerm, Transform};
use blamebench::{Attribution, Dataset, FittedModel, Model, Provenance, RunSeed};
use ndarray::Array2;
use proptest::prelude::*;

fn vec_strategy(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, m)
}

fn transform() -> impl Strategy<Value = Transform> {
    prop_oneof![
        Just(Transform::Identity),
        Just(Transform::Sin),
        Just(Transform::Cos),
        Just(Transform::Square),
        Just(Transform::Exp),
        Just(Transform::NegExp),
    ]
}

fn toy_dataset(rows: &[Vec<f64>]) -> Dataset {
    let m = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let labels = (0..rows.len()).map(|i| (i % 2) as u8).collect();
    Dataset::new(
        Array2::from_shape_vec((rows.len(), m), flat).unwrap(),
        labels,
        Dataset::default_names(m),
        None,
        Provenance::new("toy", serde_json::Value::Null, None),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polynomial_gradient_matches_central_differences(
        terms in prop::collection::vec((-2.0f64..2.0, 0usize..4, transform(), 0.5f64..1.5), 1..6),
        x in vec_strategy(4),
    ) {
        let spec = PolynomialSpec {
            terms: terms.iter().map(|&(c, f, t, s)| PolynomialTerm::new(c, f, t).scaled(s)).collect(),
            intercept: 0.3,
        };
        let g = spec.gradient(&x);
        let h = 1e-6;
        for j in 0..spec.n_features() {
            let mut p = x.clone();
            let mut q = x.clone();
            p[j] += h;
            q[j] -= h;
            let fd = (spec.evaluate(&p) - spec.evaluate(&q)) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()), "feature {j}: fd {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn mias_terms_are_the_unique_per_feature_decomposition(w in vec_strategy(5), b in -2.0f64..2.0, x in vec_strategy(5), j in 0usize..5, delta in -1.0f64..1.0) {
        let model = LogisticModel::new(w.clone(), b);
        let base = mias_logistic(&model, &x);
        let mut moved = x.clone();
        moved[j] += delta;
        let after = mias_logistic(&model, &moved);
        for m in 0..5 {
            let expected = if m == j { w[j] * delta } else { 0.0 };
            prop_assert!((after.values[m] - base.values[m] - expected).abs() <= 1e-12);
        }
        let lin = mias_linear(&LinearModel::new(w.clone(), b), &x);
        prop_assert_eq!(lin.intercept, Some(b));
    }

    #[test]
    fn gnb_terms_depend_only_on_their_own_feature(
        mu0 in vec_strategy(3), mu1 in vec_strategy(3), x in vec_strategy(3), other in vec_strategy(3),
    ) {
        let gnb = GaussianNbModel {
            priors: [0.3, 0.7],
            means: [mu0, mu1],
            variances: [vec![1.0, 0.5, 2.0], vec![0.8, 1.5, 1.0]],
            var_floor: 1e-9,
        };
        let a = mias_gnb(&gnb, &x);
        let mut mixed = other.clone();
        mixed[1] = x[1];
        let b = mias_gnb(&gnb, &mixed);
        prop_assert!((a.values[1] - b.values[1]).abs() <= 1e-12);
        prop_assert!((a.total() - gnb.predict_margin(&x)).abs() <= 1e-10);
    }

    #[test]
    fn shapley_axioms_on_small_models(m in 3usize..7, seed in any::<u64>()) {
        let mlp = MlpModel::init(m, &[4], RunSeed(seed));
        let mut rng = RunSeed(seed).derive_stream("prop/shapley", 0);
        let x: Vec<f64> = (0..m).map(|_| rand::Rng::random_range(&mut rng, -2.0..2.0)).collect();
        let bg = vec![0.0; m];
        let phi = exact_shapley(&mlp, &x, &bg, Output::Margin).unwrap();
        // efficiency
        prop_assert!((phi.scores.iter().sum::<f64>() - (mlp.predict_margin(&x) - mlp.predict_margin(&bg))).abs() <= 1e-10);
        // dummy: a feature equal to its background contributes nothing
        let mut xd = x.clone();
        xd[0] = bg[0];
        let phi_d = exact_shapley(&mlp, &xd, &bg, Output::Margin).unwrap();
        prop_assert!(phi_d.scores[0].abs() <= 1e-12);
        // linearity: additive models split exactly
        let w: Vec<f64> = (0..m).map(|j| j as f64 - 1.5).collect();
        let lin = LinearModel::new(w.clone(), 0.4);
        let phi_l = exact_shapley(&lin, &x, &bg, Output::Margin).unwrap();
        for j in 0..m {
            prop_assert!((phi_l.scores[j] - w[j] * x[j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn symmetric_features_get_equal_shapley_values(a in -2.0f64..2.0, c in -2.0f64..2.0) {
        let model = LogisticModel::new(vec![1.3, 1.3, -0.7], 0.1);
        let phi = exact_shapley(&model, &[a, a, c], &[0.0, 0.0, 0.0], Output::Proba).unwrap();
        prop_assert!((phi.scores[0] - phi.scores[1]).abs() <= 1e-12);
    }

    #[test]
    fn metric_invariances(a in vec_strategy(6), b in vec_strategy(6), s in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let scaled: Vec<f64> = b.iter().map(|v| s * v).collect();
        let shifted: Vec<f64> = b.iter().map(|v| s * v + shift).collect();
        if let (Ok(c1), Ok(c2)) = (cosine_similarity(&a, &b), cosine_similarity(&a, &scaled)) {
            prop_assert!((c1 - c2).abs() <= 1e-12);
            prop_assert!((c1 - cosine_similarity(&b, &a).unwrap()).abs() <= 1e-15);
        }
        if let Ok(r1) = spearman_correlation(&a, &b) {
            let r2 = spearman_correlation(&a, &shifted).unwrap();
            prop_assert!((r1 - r2).abs() <= 1e-12);
            prop_assert!((-1.0..=1.0).contains(&r1));
        }
        prop_assert_eq!(euclidean_similarity(&a, &b).unwrap(), euclidean_similarity(&b, &a).unwrap());
        prop_assert_eq!(topk_agreement(&a, &b, 3, TopKMode::F1).unwrap(), topk_agreement(&a, &scaled, 3, TopKMode::F1).unwrap());
    }

    #[test]
    fn deletion_is_scale_invariant(w in vec_strategy(4), x in vec_strategy(4), s in 0.01f64..100.0, k in 1usize..4) {
        let rows = vec![vec![1.0, -1.0, 0.5, 2.0], vec![-0.5, 0.3, 1.0, -1.0], x.clone()];
        let ds = toy_dataset(&rows);
        let model = LogisticModel::new(w, 0.2);
        let scores: Vec<f64> = vec![0.4, -1.2, 0.1, 0.9];
        let att = Attribution::new(scores.clone(), None, "a").unwrap();
        let scaled = Attribution::new(scores.iter().map(|v| v * s).collect(), None, "a").unwrap();
        let strategy = NullificationStrategy::DatasetMean;
        let d1 = importance_by_deletion(&model, &x, &att, k, &strategy, &ds);
        let d2 = importance_by_deletion(&model, &x, &scaled, k, &strategy, &ds);
        match (d1, d2) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "scaling changed definedness"),
        }
    }

    #[test]
    fn model_serialization_round_trips(w in vec_strategy(3), b in -1.0f64..1.0, x in vec_strategy(3)) {
        let model = FittedModel::Logistic(LogisticModel::new(w, b));
        let back = FittedModel::from_json(&model.to_json().unwrap()).unwrap();
        prop_assert_eq!(model.predict_proba(&x), back.predict_proba(&x));
    }
}

#[test]
fn random_attribution_is_uncorrelated_with_a_fixed_ranking() {
    let fixed: Vec<f64> = (0..8).map(|j| j as f64).collect();
    let mut rng = RunSeed(11).derive_stream("test/random", 0);
    let draws = 1000;
    let mean = (0..draws)
        .map(|_| spearman_correlation(&random_attribution(8, &mut rng).unwrap().scores, &fixed).unwrap())
        .sum::<f64>()
        / draws as f64;
    assert!(mean.abs() <= 0.1, "mean spearman {mean}");
}
