//! The recurrent hop model against a hand-unrolled forward pass, and its
//! halting behaviour.

use nql::learning::{seed_batch, Leftover, Model, ModelKind, RecurrentHopModel};
use nql::Graph;
use nql_testkit::models::{
    config_for, recurrent_oracle, small_dataset, small_kb, SmallKb, SMALL_GROUP, SMALL_TYPE,
};
use nql_testkit::relative_difference;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(max_hops: usize, leftover: Leftover) -> (SmallKb, Vec<nql::io::Example>, RecurrentHopModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let kb = small_kb(&mut rng, 30, 0.1);
    let data = small_dataset(&mut rng, &kb, 8, 3);
    let mut config = config_for(ModelKind::Recurrent, &data, 8, max_hops);
    config.leftover = leftover;
    let mut model = RecurrentHopModel::new(&kb.kb, config, 9).unwrap();
    // Larger weights than the default init so the steps differ visibly.
    for p in model.params_mut().iter_mut() {
        for (i, v) in p.values.iter_mut().enumerate() {
            *v *= 8.0 + (i % 3) as f64;
        }
    }
    (kb, data, model)
}

fn predict_rows(model: &RecurrentHopModel, kb: &SmallKb, data: &[nql::io::Example]) -> Vec<Vec<f64>> {
    let mut g = Graph::new(&kb.kb);
    let pairs: Vec<(&str, &str)> = data
        .iter()
        .map(|e| (e.question.as_str(), e.seed.as_str()))
        .collect();
    let y = model.predict(&mut g, &pairs).unwrap();
    let v = g.forward(y);
    (0..v.rows()).map(|b| v.row(b).to_vec()).collect()
}

fn assert_rows_close(a: &[f64], b: &[f64]) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!(
            relative_difference(*x, *y) <= 1e-12 || (x - y).abs() < 1e-15,
            "{x} vs {y}"
        );
    }
}

#[test]
fn matches_manual_unroll() {
    for leftover in [Leftover::Drop, Leftover::AddToLast] {
        for max_hops in [1, 3, 5] {
            let (kb, data, model) = setup(max_hops, leftover);
            let rows = predict_rows(&model, &kb, &data);
            for (ex, row) in data.iter().zip(&rows) {
                let tokens = model.encoder.vocab.encode(&ex.question, &ex.seed);
                let want = recurrent_oracle(
                    model.params(),
                    &kb.dense,
                    SMALL_GROUP,
                    &tokens,
                    &ex.seed,
                    max_hops,
                    &[],
                    leftover == Leftover::AddToLast,
                );
                assert_rows_close(row, &want);
            }
        }
    }
}

#[test]
fn forced_stop_gives_the_plain_chain() {
    for h in 1..=4 {
        let (kb, data, mut model) = setup(5, Leftover::Drop);
        model.stop_override = (0..5).map(|i| Some(if i + 1 == h { 1.0 } else { 0.0 })).collect();
        let pairs: Vec<(&str, &str)> = data
            .iter()
            .map(|e| (e.question.as_str(), e.seed.as_str()))
            .collect();
        let seeds: Vec<&str> = data.iter().map(|e| e.seed.as_str()).collect();

        let mut g = Graph::new(&kb.kb);
        let h0 = model.encoder.encode(&mut g, model.params(), &pairs).unwrap();
        let e = seed_batch(&mut g, SMALL_TYPE, &seeds).unwrap();
        let trace = model.trace(&mut g, h0, e).unwrap();
        // Rebuild the h-hop chain from the same relation mixtures.
        let mut chain = e;
        for r in &trace.relations[..h] {
            chain = g.follow(chain, *r, false).unwrap();
        }
        let (y, c) = (g.forward(trace.y).clone(), g.forward(chain).clone());
        assert_rows_close(y.data(), c.data());
        // Halting mass is spent exactly at step h.
        for (i, coef) in trace.coefficients.iter().enumerate() {
            let want = if i + 1 == h { 1.0 } else { 0.0 };
            assert!(g.value(*coef).data().iter().all(|&v| v == want));
        }
        assert!(g.value(trace.remaining).data().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn halting_mass_sums_to_one() {
    let (kb, data, model) = setup(5, Leftover::Drop);
    let pairs: Vec<(&str, &str)> = data
        .iter()
        .map(|e| (e.question.as_str(), e.seed.as_str()))
        .collect();
    let seeds: Vec<&str> = data.iter().map(|e| e.seed.as_str()).collect();
    let mut g = Graph::new(&kb.kb);
    let h0 = model.encoder.encode(&mut g, model.params(), &pairs).unwrap();
    let e = seed_batch(&mut g, SMALL_TYPE, &seeds).unwrap();
    let trace = model.trace(&mut g, h0, e).unwrap();
    assert_eq!(trace.hops.len(), 5);
    for b in 0..data.len() {
        let mut total = g.value(trace.remaining).get(b, 0);
        for c in &trace.coefficients {
            let v = g.value(*c).get(b, 0);
            assert!((0.0..=1.0).contains(&v));
            total += v;
        }
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn never_stopping_keeps_only_the_leftover() {
    let (kb, data, mut model) = setup(4, Leftover::AddToLast);
    model.stop_override = vec![Some(0.0); 4];
    let rows = predict_rows(&model, &kb, &data);
    model.stop_override = vec![Some(0.0), Some(0.0), Some(0.0), Some(1.0)];
    let forced = predict_rows(&model, &kb, &data);
    for (a, b) in rows.iter().zip(&forced) {
        assert_rows_close(a, b);
    }

    let (kb, data, mut model) = setup(4, Leftover::Drop);
    model.stop_override = vec![Some(0.0); 4];
    let rows = predict_rows(&model, &kb, &data);
    assert!(rows.iter().flatten().all(|&v| v == 0.0));
}
