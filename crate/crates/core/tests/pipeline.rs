use std::path::Path;

use finsent::dataset::{write_predictions, LabeledInstance};
use finsent::featurize::BlockSet;
use finsent::pipeline::fixtures::{lexicon_instances, synthetic_fixture, write_fixture};
use finsent::pipeline::{
    fit_pipeline, run_ablation, run_ablation_on, run_experiment, run_experiment_on, run_validation,
    write_ablation_csv, ConfigEntries, ExperimentConfig, FittedPipeline, PipelineError, Resources,
};
use finsent::textprep::NormalizationConfig;

fn resources() -> Resources {
    let fx = synthetic_fixture(20, 1);
    Resources {
        normalization: NormalizationConfig::default(),
        lexicon: Some(fx.lexicon),
        embeddings: Some(fx.embeddings),
    }
}

fn config(text: &str) -> ExperimentConfig {
    ConfigEntries::parse(text, Path::new("")).unwrap().build().unwrap()
}

#[test]
fn lexicon_signal_is_fit_on_train() {
    let data = lexicon_instances(10, 5);
    // Gold is linear in the LM polarity feature, so a linear model fits it.
    let cfg = config("features = lex\nregressor = svr\nsvr.epsilon = 0.01\nsvr.epochs = 300\nsvr.learning_rate = 0.1\nseed = 3\n");
    let out = run_experiment_on(&cfg, &resources(), &data, &data).unwrap();
    let report = out.report.unwrap();
    assert!(report.cosine > 0.99, "cosine {}", report.cosine);
    assert_eq!(out.predictions.len(), 10);
}

#[test]
fn constant_gold_is_reproduced() {
    let mut data = lexicon_instances(30, 2);
    data.iter_mut().for_each(|i| i.gold_score = Some(0.3));
    let cfg = config("features = bow, lex\nrf.trees = 20\n");
    let out = run_experiment_on(&cfg, &resources(), &data, &data).unwrap();
    assert!(out.report.unwrap().mae < 1e-9);
}

#[test]
fn boe_without_embeddings_fails_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_fixture(dir.path(), 20, 1).unwrap();
    let mut entries = ConfigEntries::load(&files.config).unwrap();
    entries.set_pair("embeddings=").unwrap();
    let cfg = entries.build().unwrap();
    match run_experiment(&cfg, &files.train, &files.test) {
        Err(PipelineError::Config(m)) => assert!(m.contains("embeddings"), "{m}"),
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

#[test]
fn predictions_cover_test_set_and_are_clipped() {
    let fx = synthetic_fixture(100, 4);
    let cfg = config("features = all\nregressor = svr\nsvr.epochs = 20\n");
    let res = Resources {
        normalization: NormalizationConfig::default(),
        lexicon: Some(fx.lexicon.clone()),
        embeddings: Some(fx.embeddings.clone()),
    };
    let out = run_experiment_on(&cfg, &res, &fx.train, &fx.test).unwrap();
    assert_eq!(out.predictions.len(), fx.test.len());
    for (p, inst) in out.predictions.iter().zip(&fx.test) {
        assert_eq!(p.id, inst.id);
        assert!((-1.0..=1.0).contains(&p.score));
    }
}

#[test]
fn runs_are_byte_identical() {
    let fx = synthetic_fixture(80, 9);
    let cfg = config("features = all\nrf.trees = 30\nrf.max_depth = 3, none\nfolds = 4\n");
    let res = resources();
    let bytes = || {
        let out = run_experiment_on(&cfg, &res, &fx.train, &fx.test).unwrap();
        let mut buf = Vec::new();
        write_predictions(&out.predictions, &mut buf).unwrap();
        buf
    };
    assert_eq!(bytes(), bytes());
}

#[test]
fn training_artifacts_do_not_depend_on_test_data() {
    let fx = synthetic_fixture(80, 2);
    let cfg = config("features = bow, lex\nrf.trees = 20\nrf.min_samples_leaf = 1, 3\nfolds = 4\n");
    let res = resources();
    let other_test: Vec<LabeledInstance> = lexicon_instances(25, 77);
    let a = run_experiment_on(&cfg, &res, &fx.train, &fx.test).unwrap().fitted;
    let b = run_experiment_on(&cfg, &res, &fx.train, &other_test).unwrap().fitted;
    let c = fit_pipeline(&cfg, &res, &fx.train).unwrap();
    let bytes = |f: &FittedPipeline| {
        let mut buf = Vec::new();
        f.write(&mut buf).unwrap();
        buf
    };
    assert_eq!(bytes(&a), bytes(&b));
    assert_eq!(bytes(&a), bytes(&c));
    assert!(a.cv.is_some());
}

#[test]
fn saved_pipeline_predicts_identically() {
    let fx = synthetic_fixture(60, 3);
    let cfg = config("features = all\nregressor = mlp\nmlp.hidden = 6\nmlp.epochs = 15\nmlp.learning_rate = 0.01\n");
    let res = resources();
    let fitted = fit_pipeline(&cfg, &res, &fx.train).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    fitted.save(&path).unwrap();
    let loaded = FittedPipeline::load(&path).unwrap();
    assert_eq!(loaded, fitted);
    let a = fitted.predict(&res, &fx.test).unwrap();
    let b = loaded.predict(&res, &fx.test).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ablation_has_the_seven_rows_and_lex_beats_boe() {
    let fx = synthetic_fixture(200, 11);
    let cfg = config("rf.trees = 40\nseed = 11\n");
    let res = Resources {
        normalization: NormalizationConfig::default(),
        lexicon: Some(fx.lexicon.clone()),
        embeddings: Some(fx.embeddings.clone()),
    };
    let rows = run_ablation_on(&cfg, &res, &fx.train, &fx.test).unwrap();
    let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["Lex", "BoE", "BoW", "BoE + Lex", "BoW + Lex", "BoW + BoE", "All"]);
    assert!(rows[0].report.cosine >= rows[1].report.cosine);
    assert_eq!(rows[6].blocks, BlockSet::ALL);
    let mut csv = Vec::new();
    write_ablation_csv(&rows, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("features,cosine,mae\n"));
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn ablation_from_files_matches_in_memory_run() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_fixture(dir.path(), 60, 5).unwrap();
    let cfg = ExperimentConfig::load(&files.config).unwrap();
    let rows = run_ablation(&cfg, &files.train, &files.test).unwrap();
    let fx = synthetic_fixture(60, 5);
    let res = Resources {
        normalization: NormalizationConfig::default(),
        lexicon: Some(fx.lexicon),
        embeddings: Some(fx.embeddings),
    };
    let mem = run_ablation_on(&cfg, &res, &fx.train, &fx.test).unwrap();
    assert_eq!(rows, mem);
}

#[test]
fn validation_split_beats_median_baseline_on_fixture() {
    let data = lexicon_instances(150, 8);
    let cfg = config("features = lex\nrf.trees = 40\n");
    let v = run_validation(&cfg, &resources(), &data).unwrap();
    assert_eq!((v.train_size, v.validation_size), (120, 30));
    assert!(v.report.cosine > v.baseline.cosine);
}
