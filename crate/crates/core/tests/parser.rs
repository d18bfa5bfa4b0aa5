//! Parser and printer: round trips, precedence, and rejected inputs.

use nql::query::{parse, parse_program, render_diagnostic, Query};
use nql::NqlError;
use nql_testkit::{syntax_query, MALFORMED_QUERIES};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>(), depth in 0usize..6) {
        let q = syntax_query(&mut ChaCha8Rng::seed_from_u64(seed), depth);
        let text = q.to_string();
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(&back, &q, "{}", text);
        // Printing is a fixed point after one round.
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn programs_round_trip(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut text = String::new();
        for i in 0..n {
            let q = syntax_query(&mut rng, 3);
            if i + 1 < n {
                text.push_str(&format!("v{i} = {q}\n"));
            } else {
                text.push_str(&format!("{q}\n"));
            }
        }
        let p = parse_program(&text).unwrap();
        prop_assert_eq!(p.statements.len(), n);
        let again = parse_program(&p.to_string()).unwrap();
        prop_assert_eq!(again.statements.len(), n);
        for (a, b) in p.statements.iter().zip(&again.statements) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(&a.expr, &b.expr);
        }
    }

    #[test]
    fn arbitrary_text_never_panics(s in "[ -~\n]{0,40}") {
        let _ = parse(&s);
        let _ = parse_program(&s);
    }
}

#[test]
fn precedence_binds_trailers_then_scale_then_and_then_or() {
    let e = parse("a | b & c * 2 .r()").unwrap_err();
    assert!(!e.expected.contains(&"`.`".to_string()), "{e}");

    let q = parse("a | b & c.r() * 2").unwrap();
    let want = Query::var("a").union(Query::var("b").intersect(Query::var("c").rel("r", false).scale(2.0)));
    assert_eq!(q, want);

    let q = parse("(a | b).r(-1)").unwrap();
    assert_eq!(q, Query::var("a").union(Query::var("b")).rel("r", true));
    assert_eq!(q.to_string(), "(a | b).r(-1)");

    let q = parse("a & (b | c)").unwrap();
    assert_eq!(q.to_string(), "a & (b | c)");
    let q = parse("(a & b) | c").unwrap();
    assert_eq!(q.to_string(), "a & b | c");
}

#[test]
fn left_associativity_is_preserved() {
    let q = parse("a | b | c").unwrap();
    assert_eq!(q, Query::var("a").union(Query::var("b")).union(Query::var("c")));
    let r = parse("a | (b | c)").unwrap();
    assert_ne!(q, r);
    assert_eq!(parse(&r.to_string()).unwrap(), r);
}

#[test]
fn follow_and_if_any_forms() {
    let q = parse("one('x', t).follow('wife').follow(all(rel_t), -1).if_any(none(t))").unwrap();
    let want = Query::one("x", "t")
        .follow_name("wife", false)
        .follow(Query::all("rel_t"), true)
        .if_any(Query::none("t"));
    assert_eq!(q, want);
}

#[test]
fn comments_newlines_and_separators() {
    let p = parse_program("# header\na = one('x', t)  # trailing\n\nb = a.r(\n  -1\n); a | b\n").unwrap();
    assert_eq!(p.statements.len(), 3);
    assert_eq!(p.statements[0].name.as_deref(), Some("a"));
    assert_eq!(p.statements[2].name, None);
}

#[test]
fn every_malformed_query_has_a_spanned_error() {
    for src in MALFORMED_QUERIES {
        let Err(e) = parse_program(src) else {
            continue; // bind-time failures are covered by the CLI tests
        };
        let err = NqlError::from(e);
        let span = err.span().expect("parse errors carry spans");
        assert!(span.start <= src.len(), "{src:?}");
        let d = render_diagnostic(&err, src);
        assert!(d.contains("-->") && d.contains('^'), "{src:?}: {d}");
    }
}

#[test]
fn parse_errors_name_what_was_expected() {
    let e = parse("one('x' t)").unwrap_err();
    assert_eq!((e.line, e.column), (1, 9));
    assert!(e.to_string().contains("expected"), "{e}");
    let e = parse("a\n| b |").unwrap_err();
    assert_eq!(e.line, 2);
}
