//! Text formats and KB construction from them.

use nql::build_kb;
use nql::io::kinship::{chain_dataset, generate_kinship, KinshipSpec};
use nql::io::{parse_dataset, parse_facts, parse_schema, write_dataset, write_facts, Example, FactTriple};
use nql::KnowledgeBase;
use nql_testkit::{random_kb, RandomKbParams};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Contents = (Vec<Vec<String>>, Vec<Vec<(usize, usize, f64)>>);

/// Every entity name and every relation's `(i, j, w)` entries.
fn contents(kb: &KnowledgeBase) -> Contents {
    (
        kb.types().map(|t| t.names().to_vec()).collect(),
        kb.relations().map(|r| r.matrix().iter().collect()).collect(),
    )
}

#[test]
fn kb_is_invariant_to_fact_order() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kb = random_kb(&mut rng, &RandomKbParams::default());
        let mut facts = kb.facts.clone();
        facts.shuffle(&mut rng);
        let (names_a, rels_a) = contents(&kb.kb);
        let (names_b, rels_b) = contents(&build_kb(&kb.schema, facts).unwrap());
        assert_eq!(names_a, names_b);
        // Summed duplicates may differ in the last bit with order.
        for (a, b) in rels_a.iter().zip(&rels_b) {
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b) {
                assert_eq!((x.0, x.1), (y.0, y.1));
                assert!((x.2 - y.2).abs() <= 1e-12 * x.2.abs());
            }
        }
    }
}

#[test]
fn schema_and_facts_round_trip_through_text() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let kb = random_kb(&mut rng, &RandomKbParams::default());
    let schema = parse_schema(&kb.schema.to_text(), None).unwrap();
    assert_eq!(schema.to_text(), kb.schema.to_text());
    let mut buf = Vec::new();
    write_facts(&mut buf, &kb.facts).unwrap();
    let facts = parse_facts(std::str::from_utf8(&buf).unwrap()).unwrap();
    let key = |f: &FactTriple| {
        (
            f.relation.clone(),
            f.subject.clone(),
            f.object.clone(),
            f.weight.to_bits(),
        )
    };
    assert_eq!(
        facts.iter().map(key).collect::<Vec<_>>(),
        kb.facts.iter().map(key).collect::<Vec<_>>()
    );
    let rebuilt = build_kb(&schema, facts).unwrap();
    assert_eq!(contents(&rebuilt), contents(&kb.kb));
}

#[test]
fn datasets_round_trip_through_text() {
    let tree = generate_kinship(&KinshipSpec::default()).unwrap().oracle;
    let data = chain_dataset(&tree, &[1, 2, 3], 200, 5).unwrap();
    let mut buf = Vec::new();
    write_dataset(&mut buf, &data).unwrap();
    let back: Vec<Example> = parse_dataset(std::str::from_utf8(&buf).unwrap(), Some("mem")).unwrap();
    assert_eq!(back, data);
}

#[test]
fn malformed_inputs_name_their_line() {
    let err = parse_facts("r\ta\tb\nr\ta\n").unwrap_err().to_string();
    assert!(err.contains('2'), "{err}");
    let err = parse_dataset("q\ta\tx\nno tabs here\n", Some("d.tsv"))
        .unwrap_err()
        .to_string();
    assert!(err.contains("d.tsv") && err.contains('2'), "{err}");
    assert!(parse_schema("type\n", None).is_err());
}
