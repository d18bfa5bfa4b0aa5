//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits nonzero if any criterion fails.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p nql-cli --test acceptance -- 3 5`.

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use nql::graph::ParamStore;
use nql::io::fixtures::{
    join_emulation_query, nested_loop_join, student_grade_fixture, HENRY_VIII, HENRY_VIII_WIVES, IN_LAW_QUERY,
};
use nql::io::kinship::{
    chain_dataset, generate_kinship, relation_dataset, FamilyTree, GeneratedKinship, KinshipSpec, KIN_GROUP,
    PERSON_TYPE,
};
use nql::io::Example;
use nql::learning::{
    build_model, evaluate, train, Leftover, LossSpec, Model, ModelConfig, ModelKind, OptimizerSpec,
    TemplateModel, TrainConfig, Vocabulary,
};
use nql::{build_kb, parse, parse_program, Constraint, Graph, KnowledgeBase};
use nql_testkit::models::{config_for, model_loss, small_dataset, small_kb};
use nql_testkit::{
    check_gradients, random_kb, relative_difference, syntax_query, typed_query, OpCounts, RandomKbParams,
    MALFORMED_QUERIES,
};
use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || {
        format!("took {:.1} s, limit {} s", t.as_secs_f64(), limit.as_secs())
    })
}

fn nql_bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nql"));
    c.env_remove("NQL_THREADS");
    c
}

fn json_lines(stdout: &[u8]) -> Vec<Value> {
    String::from_utf8_lossy(stdout)
        .lines()
        .filter_map(|l| serde_json::from_str(l).ok())
        .collect()
}

// 1. Every operator against the dense evaluator.
fn operator_oracle() -> Outcome {
    let start = Instant::now();
    let mut counts = OpCounts::default();
    let mut worst: f64 = 0.0;
    let mut exprs = 0;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = random_kb(&mut rng, &RandomKbParams::default());
        for _ in 0..5 {
            let ty = kb.dense.types.keys().choose(&mut rng).unwrap().clone();
            let q = typed_query(&mut rng, &kb.dense, &ty, 5, &mut counts);
            let want = kb.dense.eval(&q).ok_or_else(|| format!("oracle rejects {q}"))?;
            let want = kb.dense.named(&want);
            let mut g = Graph::new(&kb.kb);
            let e = g.bind(&q, &HashMap::new()).map_err(|e| format!("{q}: {e}"))?;
            let got: BTreeMap<String, f64> = g
                .decode(e, None, f64::NEG_INFINITY)
                .map_err(|e| e.to_string())?
                .remove(0)
                .into_iter()
                .collect();
            for name in want.keys().chain(got.keys()) {
                let a = got.get(name).copied().unwrap_or(0.0);
                let b = want.get(name).copied().unwrap_or(0.0);
                let d = relative_difference(a, b);
                worst = worst.max(d);
                ensure(d <= 1e-12, || format!("{q}: {name} engine {a} vs oracle {b}"))?;
            }
            exprs += 1;
        }
    }
    ensure(counts.covers_all(), || {
        format!("operators not all exercised: {counts:?}")
    })?;
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "{exprs} expressions over 200 KBs, max relative error {worst:.1e}, all 7 operators"
    ))
}

fn store_of(m: &mut Box<dyn Model>) -> &mut ParamStore {
    m.params_mut()
}

// 2. Analytic gradients against central differences.
fn gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let kb = small_kb(&mut rng, 30, 0.08);
    let data = small_dataset(&mut rng, &kb, 12, 3);
    let spec = LossSpec::default();
    let mut parts = Vec::new();
    for kind in ModelKind::ALL {
        let mut model = build_model(&kb.kb, config_for(kind, &data, 6, 3), 4).map_err(|e| e.to_string())?;
        for p in model.params_mut().iter_mut() {
            for (i, v) in p.values.iter_mut().enumerate() {
                *v += 0.05 * ((i * 7 + 3) % 11) as f64 / 11.0;
            }
        }
        let total = model.params().num_values();
        let (_, grads) = model_loss(&*model, &kb.kb, &data, spec);
        let r = check_gradients(&mut model, store_of, &grads, 1e-5, |m| {
            model_loss(&**m, &kb.kb, &data, spec).0
        });
        ensure(r.checked == total, || {
            format!("{kind}: checked {} of {total} entries", r.checked)
        })?;
        ensure(r.max_rel_error <= 1e-4, || format!("{kind}: {r:?}"))?;
        parts.push(format!("{kind} {:.1e} over {}", r.max_rel_error, r.checked));
    }
    within(start, Duration::from_secs(120))?;
    Ok(parts.join(", "))
}

fn kinship() -> GeneratedKinship {
    generate_kinship(&KinshipSpec {
        seed: 7,
        generations: 6,
        persons_per_generation: 50,
        ..KinshipSpec::default()
    })
    .expect("kinship spec is valid")
}

fn split(data: Vec<Example>) -> (Vec<Example>, Vec<Example>) {
    let mut train = data;
    let test = train.split_off(train.len() * 4 / 5);
    (train, test)
}

/// Number of `rels[0]` then `rels[1]` paths leaving `seeds`, counted on the tree.
fn path_mass(tree: &FamilyTree, seeds: &[usize], rels: [&str; 2]) -> f64 {
    let mut total = 0.0;
    for &x in seeds {
        for y in tree.related(x, rels[0]).unwrap() {
            total += tree.related(y, rels[1]).unwrap().len() as f64;
        }
    }
    total
}

// 3. The template model learns father as a two-hop path.
fn template_recovery() -> Outcome {
    let start = Instant::now();
    let gen = kinship();
    let tree = &gen.oracle;
    let kb = build_kb(&gen.schema, gen.facts.clone()).map_err(|e| e.to_string())?;
    let (train_set, test_set) = split(relation_dataset(tree, "father").map_err(|e| e.to_string())?);
    let mut model = TemplateModel::new(&kb, KIN_GROUP, Constraint::Softplus).map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        epochs: 200,
        batch_size: 32,
        optimizer: OptimizerSpec::adam(0.05),
        seed: 0,
        loss: LossSpec::default(),
    };
    train(&mut model, &kb, &train_set, &cfg, |_, _| {}).map_err(|e| e.to_string())?;
    let hits = evaluate(&model, &kb, &test_set, 64, LossSpec::default())
        .map_err(|e| e.to_string())?
        .hits_at_1;
    ensure(hits >= 0.9, || format!("held-out hits@1 {hits:.3} < 0.9"))?;

    // Dominant path: the branch and relation pair carrying the most weighted
    // path mass out of the training seeds.
    let members: Vec<String> = kb
        .group(KIN_GROUP)
        .unwrap()
        .member_names()
        .map(String::from)
        .collect();
    let seeds: Vec<usize> = train_set.iter().map(|e| tree.find(&e.seed).unwrap()).collect();
    let mut scored = Vec::new();
    for (a, b) in [(0, 1), (2, 3)] {
        let (wa, wb) = (model.relation_weights(a), model.relation_weights(b));
        for (i, ri) in members.iter().enumerate() {
            for (j, rj) in members.iter().enumerate() {
                let mass = wa[i] * wb[j] * path_mass(tree, &seeds, [ri, rj]);
                scored.push((mass, ri.as_str(), rj.as_str()));
            }
        }
    }
    scored.sort_by(|x, y| y.0.total_cmp(&x.0));
    let total: f64 = scored.iter().map(|s| s.0).sum();
    let (mass, first, second) = scored[0];
    let equivalent = (0..tree.len())
        .all(|x| tree.chain(x, &[first, second]).unwrap() == tree.related(x, "father").unwrap());
    let expected = (first, second) == ("mother", "husband");
    ensure(expected || equivalent, || {
        format!("dominant path {first} then {second} is not equivalent to father")
    })?;
    within(start, Duration::from_secs(300))?;
    Ok(format!(
        "hits@1 {hits:.3} on {} held-out, dominant path {first}.{second} ({:.0}% of path mass{})",
        test_set.len(),
        100.0 * mass / total,
        if expected { "" } else { ", oracle-equivalent" }
    ))
}

fn vocab_config(kind: ModelKind, data: &[Example], dim: usize, max_hops: usize) -> ModelConfig {
    let mut c = ModelConfig::new(kind, KIN_GROUP);
    c.dim = dim;
    c.max_hops = max_hops;
    c.leftover = Leftover::Drop;
    c.vocab = Vocabulary::build(data.iter().map(|e| (e.question.as_str(), e.seed.as_str())))
        .words()
        .to_vec();
    c
}

fn hits(model: &dyn Model, kb: &KnowledgeBase, data: &[Example]) -> Result<f64, String> {
    Ok(evaluate(model, kb, data, 64, LossSpec::default())
        .map_err(|e| e.to_string())?
        .hits_at_1)
}

// 4. The switch model on 1- and 2-hop questions.
fn multihop_qa() -> Outcome {
    let start = Instant::now();
    let gen = kinship();
    let kb = build_kb(&gen.schema, gen.facts.clone()).map_err(|e| e.to_string())?;
    let (train_set, test_set) =
        split(chain_dataset(&gen.oracle, &[1, 2], 3000, 11).map_err(|e| e.to_string())?);
    let mut model = build_model(&kb, vocab_config(ModelKind::Multihop, &train_set, 32, 2), 3)
        .map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        epochs: 30,
        batch_size: 32,
        optimizer: OptimizerSpec::adam(0.02),
        seed: 0,
        loss: LossSpec::default(),
    };
    train(&mut *model, &kb, &train_set, &cfg, |_, _| {}).map_err(|e| e.to_string())?;
    let h = hits(&*model, &kb, &test_set)?;
    ensure(h >= 0.85, || format!("held-out hits@1 {h:.3} < 0.85"))?;
    within(start, Duration::from_secs(600))?;
    Ok(format!(
        "hits@1 {h:.3} on {} held-out 1- and 2-hop questions",
        test_set.len()
    ))
}

// 5. The recurrent model on held-out 3-hop and unseen 4-hop chains.
fn recurrent_generalization() -> Outcome {
    let gen = kinship();
    let kb = build_kb(&gen.schema, gen.facts.clone()).map_err(|e| e.to_string())?;
    let (train_set, held_out) =
        split(chain_dataset(&gen.oracle, &[1, 2, 3], 8000, 11).map_err(|e| e.to_string())?);
    let mut model = build_model(&kb, vocab_config(ModelKind::Recurrent, &train_set, 64, 5), 3)
        .map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        epochs: 100,
        batch_size: 32,
        optimizer: OptimizerSpec::adam(0.01),
        seed: 1,
        loss: LossSpec::default(),
    };
    train(&mut *model, &kb, &train_set, &cfg, |_, _| {}).map_err(|e| e.to_string())?;

    let three: Vec<Example> = held_out
        .into_iter()
        .filter(|e| e.question.matches(" of ").count() == 3)
        .collect();
    let h3 = hits(&*model, &kb, &three)?;
    let four = chain_dataset(&gen.oracle, &[4], 500, 99).map_err(|e| e.to_string())?;
    let h4 = hits(&*model, &kb, &four)?;
    let n = kb.type_decl(PERSON_TYPE).unwrap().cardinality() as f64;
    let baseline = four.iter().map(|e| e.targets.len() as f64 / n).sum::<f64>() / four.len() as f64;
    let report = format!(
        "3-hop hits@1 {h3:.3} on {} held-out; 4-hop hits@1 {h4:.3} vs random guess {baseline:.4} ({:.1}x)",
        three.len(),
        h4 / baseline
    );
    ensure(h3 >= 0.8, || format!("3-hop hits@1 below 0.8: {report}"))?;
    ensure(h4 >= 5.0 * baseline, || {
        format!("4-hop under 5x baseline: {report}")
    })?;
    Ok(report)
}

// 6. Desk-scale benchmark through the CLI.
fn scale() -> Outcome {
    let out = nql_bin()
        .args([
            "--format",
            "json",
            "bench",
            "--entities",
            "100000",
            "--tuples",
            "1000000",
            "--batch",
            "32",
        ])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })?;
    let recs = json_lines(&out.stdout);
    let find = |kind: &str, workload: Option<&str>| {
        recs.iter()
            .find(|r| r["record"] == kind && workload.is_none_or(|w| r["workload"] == w && r["batch"] == 32))
            .cloned()
            .ok_or_else(|| format!("no {kind} record"))
    };
    let kb = find("bench-kb", None)?;
    ensure(kb["entities"] == 100_000 && kb["facts"] == 1_000_000, || {
        format!("wrong KB size: {kb}")
    })?;
    let traverse = find("bench", Some("traverse"))?["median_ms"]
        .as_f64()
        .unwrap_or(f64::INFINITY);
    let chain3 = find("bench", Some("chain3"))?["median_ms"]
        .as_f64()
        .unwrap_or(f64::INFINITY);
    let mem = find("bench-memory", None)?;
    let heap = mem["kb_heap_bytes"].as_f64().unwrap_or(f64::INFINITY);
    let hwm = mem["hwm_bytes"].as_f64().unwrap_or(heap);
    const LIMIT: f64 = 1.5e9;
    let report = format!(
        "traverse {traverse:.1} ms, chain3 {chain3:.1} ms, KB heap {:.0} MB, peak RSS {:.0} MB",
        heap / 1e6,
        hwm / 1e6
    );
    ensure(traverse < 250.0 && chain3 < 1000.0, || {
        format!("too slow: {report}")
    })?;
    ensure(heap < LIMIT && hwm < LIMIT, || {
        format!("too much memory: {report}")
    })?;
    Ok(report)
}

// 7. Join emulation against a nested-loop join.
fn join_emulation() -> Outcome {
    let program = parse_program(join_emulation_query()).map_err(|e| e.to_string())?;
    ensure(program.statements.len() == 4, || {
        "emulation is not four statements".into()
    })?;
    let mut sizes = Vec::new();
    for seed in 0..50 {
        let f = student_grade_fixture(seed);
        let kb = build_kb(&f.schema, f.facts.clone()).map_err(|e| e.to_string())?;
        let mut g = Graph::new(&kb);
        let e = g.bind_program(&program).map_err(|e| e.to_string())?;
        let got: std::collections::BTreeSet<String> = g
            .decode(e, None, 0.0)
            .map_err(|e| e.to_string())?
            .remove(0)
            .into_iter()
            .map(|(n, _)| n)
            .collect();
        let want = nested_loop_join(&f.students, &f.grades);
        ensure(got == want, || {
            format!("seed {seed}: engine {got:?}, join {want:?}")
        })?;
        sizes.push(want.len());
    }
    Ok(format!(
        "50 instances agree, result sizes {}..={}",
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap()
    ))
}

fn cli_query(q: &str) -> Result<Vec<(String, f64)>, String> {
    let out = nql_bin()
        .args(["--format", "json", "query", "--fixture", "royal", q])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })?;
    let recs = json_lines(&out.stdout);
    Ok(recs[0]["result"]
        .as_array()
        .ok_or("no result")?
        .iter()
        .map(|r| {
            (
                r["entity"].as_str().unwrap_or("").to_string(),
                r["weight"].as_f64().unwrap_or(0.0),
            )
        })
        .collect())
}

// 8. Royal fixture counts, end to end.
fn royal_fixture() -> Outcome {
    let wives = cli_query(&format!("one('{HENRY_VIII}', {PERSON_TYPE}).wife()"))?;
    let mut names: Vec<&str> = wives.iter().map(|w| w.0.as_str()).collect();
    names.sort_unstable();
    let mut want = HENRY_VIII_WIVES.to_vec();
    want.sort_unstable();
    ensure(names == want, || format!("wives {names:?}"))?;
    let in_laws = cli_query(IN_LAW_QUERY)?;
    ensure(in_laws.len() == 12, || {
        format!("{} in-laws: {in_laws:?}", in_laws.len())
    })?;
    Ok("6 wives, 12 in-laws".into())
}

// 9. Parser round trips and diagnostics.
fn parser() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..1000 {
        let q = syntax_query(&mut rng, 1 + i % 6);
        let text = q.to_string();
        let once = parse(&text).map_err(|e| format!("{text:?}: {e}"))?;
        let twice = parse(&once.to_string()).map_err(|e| format!("{text:?}: {e}"))?;
        ensure(once == q && twice == once, || {
            format!("round trip changed {text:?}")
        })?;
    }
    for (i, bad) in MALFORMED_QUERIES.iter().enumerate() {
        let out = nql_bin()
            .args(["query", "--fixture", "royal", bad])
            .output()
            .map_err(|e| e.to_string())?;
        let err = String::from_utf8_lossy(&out.stderr);
        ensure(out.status.code() == Some(2), || {
            format!("malformed #{i} {bad:?}: exit {:?}", out.status.code())
        })?;
        ensure(err.contains("-->") && err.contains('^'), || {
            format!("malformed #{i} {bad:?}: no span in {err}")
        })?;
    }
    Ok(format!(
        "1000 round trips, {} malformed queries rejected with spans",
        MALFORMED_QUERIES.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("operator-oracle equivalence", operator_oracle),
        ("gradient correctness", gradients),
        ("template recovery", template_recovery),
        ("multi-hop QA", multihop_qa),
        ("recurrent generalization", recurrent_generalization),
        ("scale analog", scale),
        ("join emulation", join_emulation),
        ("fixture pins", royal_fixture),
        ("parser", parser),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {n} {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n} {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
