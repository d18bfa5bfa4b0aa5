//! Analytic gradients against central finite differences.

use nql::graph::{Constraint, ParamStore};
use nql::learning::{build_model, Leftover, LossSpec, Model, ModelKind};
use nql::sparse::DenseBatch;
use nql::Graph;
use nql_testkit::models::{config_for, model_loss, small_dataset, small_kb, SMALL_GROUP, SMALL_TYPE};
use nql_testkit::{check_gradients, GradReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn store_of(m: &mut Box<dyn Model>) -> &mut ParamStore {
    m.params_mut()
}

fn check_model(kind: ModelKind, spec: LossSpec, leftover: Leftover) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let kb = small_kb(&mut rng, 30, 0.08);
    let data = small_dataset(&mut rng, &kb, 12, 3);
    let mut config = config_for(kind, &data, 6, 3);
    config.leftover = leftover;
    let mut model = build_model(&kb.kb, config, 4).unwrap();
    // Move away from the symmetric start so every entry gets a distinct gradient.
    for p in model.params_mut().iter_mut() {
        for (i, v) in p.values.iter_mut().enumerate() {
            *v += 0.05 * ((i * 7 + 3) % 11) as f64 / 11.0;
        }
    }
    let (_, grads) = model_loss(&*model, &kb.kb, &data, spec);
    check_gradients(&mut model, store_of, &grads, H, |m| {
        model_loss(&**m, &kb.kb, &data, spec).0
    })
}

#[test]
fn template_gradients() {
    let r = check_model(ModelKind::Template, LossSpec::default(), Leftover::Drop);
    assert!(r.max_rel_error <= TOL, "{r:?}");
    let r = check_model(ModelKind::Template, LossSpec::bce(), Leftover::Drop);
    assert!(r.max_rel_error <= TOL, "{r:?}");
}

#[test]
fn qa_gradients() {
    let r = check_model(ModelKind::Qa, LossSpec::default(), Leftover::Drop);
    assert!(r.checked > 100);
    assert!(r.max_rel_error <= TOL, "{r:?}");
}

#[test]
fn multihop_gradients() {
    let r = check_model(ModelKind::Multihop, LossSpec::default(), Leftover::Drop);
    assert!(r.max_rel_error <= TOL, "{r:?}");
}

#[test]
fn recurrent_gradients() {
    for leftover in [Leftover::Drop, Leftover::AddToLast] {
        let r = check_model(ModelKind::Recurrent, LossSpec::default(), leftover);
        assert!(r.max_rel_error <= TOL, "{leftover:?}: {r:?}");
    }
}

/// A store-backed loss that exercises the dense ops and the typed operators
/// not reached through the models.
struct OpsHarness {
    store: ParamStore,
}

fn ops_loss(h: &OpsHarness, kb: &nql::KnowledgeBase, grads: bool) -> (f64, Option<nql::graph::Gradients>) {
    let s = &h.store;
    let mut g = Graph::new(kb);
    let ids: Vec<_> = s.ids().collect();
    let [w_rel, mix, x, w, table, gate] = [0, 1, 2, 3, 4, 5].map(|i| g.param(s, ids[i]));
    let seeds = g.one_batch(&["n01", "n05", "n07"], SMALL_TYPE).unwrap();
    let a = g.rel_call_weighted(seeds, "ra", w_rel, false).unwrap();
    let b = g.rel_call_weighted(seeds, "ra", w_rel, true).unwrap();
    let mix = g.as_expr(mix, SMALL_GROUP).unwrap();
    let c = g.follow(seeds, mix, true).unwrap();
    let ab = g.intersect(a, c).unwrap();
    let ab = g.union(ab, b).unwrap();
    let cond = g.rel_call(seeds, "rb", false).unwrap();
    let ab = g.if_any(ab, cond).unwrap();
    let xw = g.matmul(x, w).unwrap();
    let t = g.tanh(xw);
    let sm = g.softmax(t);
    let sg = g.sigmoid(gate);
    let om = g.one_minus(sg);
    let e = g
        .mean_embed(table, vec![vec![0, 1], vec![2], vec![1, 1, 3]])
        .unwrap();
    let sm = g.scale_by(sm, sg).unwrap();
    let e = g.add(e, sm).unwrap();
    let e = g.mul(e, e).unwrap();
    let gated = g.gate(ab, om).unwrap();
    let total = g.sum(e);
    let y = g.scale_const(gated, 0.5).unwrap();
    let l = g
        .loss(LossSpec::default(), y, vec![vec![2, 3], vec![4], vec![0, 9]])
        .unwrap();
    let l2 = g.add(l, total).unwrap();
    let v = g.value(l2).get(0, 0);
    (v, grads.then(|| g.backward(l2).unwrap()))
}

#[test]
fn graph_ops_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let kb = small_kb(&mut rng, 12, 0.4);
    let nnz = kb.kb.relation("ra").unwrap().matrix().nnz();
    let mut store = ParamStore::new();
    let v = |n: usize, off: f64| {
        (0..n)
            .map(|i| off + 0.37 * ((i * 5 + 1) % 7) as f64 / 7.0)
            .collect::<Vec<_>>()
    };
    store
        .add("w_rel", 1, nnz, v(nnz, 0.3), Constraint::Softplus)
        .unwrap();
    store.add("mix", 3, 4, v(12, 0.1), Constraint::Softmax).unwrap();
    store.add("x", 3, 2, v(6, -0.2), Constraint::Identity).unwrap();
    store.add("w", 2, 3, v(6, -0.1), Constraint::Identity).unwrap();
    store
        .add("table", 4, 3, v(12, -0.3), Constraint::Identity)
        .unwrap();
    store.add("gate", 3, 1, v(3, -0.5), Constraint::Sigmoid).unwrap();
    let mut h = OpsHarness { store };
    let (_, grads) = ops_loss(&h, &kb.kb, true);
    let r = check_gradients(
        &mut h,
        |h| &mut h.store,
        &grads.unwrap(),
        H,
        |h| ops_loss(h, &kb.kb, false).0,
    );
    assert_eq!(r.checked, nnz + 12 + 6 + 6 + 12 + 3);
    assert!(r.max_rel_error <= TOL, "{r:?}");
}

#[test]
fn backward_requires_a_scalar() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let kb = small_kb(&mut rng, 5, 0.4);
    let mut g = Graph::new(&kb.kb);
    let t = g.constant(DenseBatch::zeros(2, 2));
    assert!(g.backward(t).is_err());
}
