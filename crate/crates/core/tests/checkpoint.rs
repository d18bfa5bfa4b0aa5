//! Checkpoint files: round trips, restored predictions, and rejection of
//! damaged input.

use nql::io::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint, CHECKPOINT_VERSION,
};
use nql::learning::{build_model, restore_model, train, ModelKind, OptimizerSpec, TrainConfig};
use nql::{Constraint, Graph, ParamStore};
use nql_testkit::models::{config_for, small_dataset, small_kb};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Everything a checkpoint stores; gradient accumulators are not saved.
fn saved(store: &ParamStore) -> Vec<(String, usize, usize, Constraint, Vec<u64>)> {
    store
        .iter()
        .map(|p| {
            (
                p.name.clone(),
                p.rows,
                p.cols,
                p.constraint,
                p.values.iter().map(|v| v.to_bits()).collect(),
            )
        })
        .collect()
}

#[test]
fn trained_models_round_trip_through_files() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let kb = small_kb(&mut rng, 20, 0.1);
    let data = small_dataset(&mut rng, &kb, 20, 3);
    let dir = tempfile::tempdir().unwrap();
    for kind in ModelKind::ALL {
        let mut m = build_model(&kb.kb, config_for(kind, &data, 6, 3), 3).unwrap();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 5,
            optimizer: OptimizerSpec::adam(0.1),
            ..TrainConfig::default()
        };
        train(&mut *m, &kb.kb, &data, &cfg, |_, _| {}).unwrap();

        let path = dir.path().join(format!("{kind}.json"));
        save_checkpoint(&path, m.config(), m.params()).unwrap();
        let ck = load_checkpoint(&path).unwrap();
        assert_eq!(&ck.model, m.config());
        assert_eq!(
            saved(&ck.params),
            saved(m.params()),
            "{kind}: values must survive bit for bit"
        );

        let restored = restore_model(&kb.kb, ck.model, &ck.params).unwrap();
        let pairs: Vec<(&str, &str)> = data
            .iter()
            .map(|e| (e.question.as_str(), e.seed.as_str()))
            .collect();
        let mut g1 = Graph::new(&kb.kb);
        let y1 = m.predict(&mut g1, &pairs).unwrap();
        let mut g2 = Graph::new(&kb.kb);
        let y2 = restored.predict(&mut g2, &pairs).unwrap();
        assert_eq!(g1.forward(y1), g2.forward(y2), "{kind}");
    }
}

#[test]
fn damaged_checkpoints_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let kb = small_kb(&mut rng, 10, 0.2);
    let data = small_dataset(&mut rng, &kb, 5, 2);
    let m = build_model(&kb.kb, config_for(ModelKind::Qa, &data, 4, 2), 3).unwrap();
    let text = checkpoint_to_string(m.config(), m.params()).unwrap();
    assert!(checkpoint_from_str(&text).is_ok());

    for cut in [0, 1, text.len() / 3, text.len() - 1] {
        assert!(checkpoint_from_str(&text[..cut]).is_err(), "truncated at {cut}");
    }
    let bumped = text.replace(
        &format!("\"version\":{CHECKPOINT_VERSION}"),
        &format!("\"version\":{}", CHECKPOINT_VERSION + 1),
    );
    assert_ne!(bumped, text);
    let err = checkpoint_from_str(&bumped).unwrap_err().to_string();
    assert!(err.contains("version"), "{err}");
    assert!(checkpoint_from_str(&text.replace("nql-checkpoint", "other")).is_err());
    assert!(load_checkpoint("/nonexistent/ck.json").is_err());

    let mut bad = m.params().clone();
    bad.iter_mut().next().unwrap().values[0] = f64::INFINITY;
    assert!(checkpoint_to_string(m.config(), &bad).is_err());
}

#[test]
fn restoring_into_a_mismatched_kb_fails() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let kb = small_kb(&mut rng, 10, 0.2);
    let data = small_dataset(&mut rng, &kb, 5, 2);
    let m = build_model(&kb.kb, config_for(ModelKind::Multihop, &data, 4, 2), 3).unwrap();
    let mut ck = checkpoint_from_str(&checkpoint_to_string(m.config(), m.params()).unwrap()).unwrap();
    ck.model.dim = 5;
    assert!(restore_model(&kb.kb, ck.model, &ck.params).is_err());
}
