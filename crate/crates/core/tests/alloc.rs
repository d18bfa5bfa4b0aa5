//! Allocation accounting for relation-set following. A weighted sum of
//! relation matrices is never formed: the bytes allocated by a follow are
//! bounded by its dense inputs and outputs, not by the matrices' nnz.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

use nql::io::{FactTriple, SchemaSpec};
use nql::sparse::{weighted_sum_matvec, DenseBatch};
use nql::{build_kb, Graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Counting;

static ALLOCATED: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        ALLOCATED.fetch_add(layout.size(), Ordering::Relaxed);
        System.alloc(layout)
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout)
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        ALLOCATED.fetch_add(new_size, Ordering::Relaxed);
        System.realloc(ptr, layout, new_size)
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

fn allocated_during<T>(f: impl FnOnce() -> T) -> (T, usize) {
    let before = ALLOCATED.load(Ordering::SeqCst);
    let out = f();
    (out, ALLOCATED.load(Ordering::SeqCst) - before)
}

const N: usize = 1000;
const K: usize = 4;
const PER_RELATION: usize = 50_000;
const SLACK: usize = 16 * 1024;

// One test function: the counter is process-wide.
#[test]
fn follow_allocates_only_dense_batches() {
    let names: Vec<String> = (0..N).map(|i| format!("e{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let rels: Vec<String> = (0..K).map(|k| format!("r{k}")).collect();
    let rel_refs: Vec<&str> = rels.iter().map(String::as_str).collect();
    let mut schema = SchemaSpec::new().with_closed_type("t", &refs);
    for r in &rels {
        schema = schema.with_relation(r, "t", "t");
    }
    schema = schema.with_group("g", &rel_refs);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let facts: Vec<FactTriple> = rels
        .iter()
        .flat_map(|r| {
            (0..PER_RELATION)
                .map(|_| FactTriple::new(r, &names[rng.gen_range(0..N)], &names[rng.gen_range(0..N)]))
                .collect::<Vec<_>>()
        })
        .collect();
    let kb = build_kb(&schema, facts).unwrap();
    let nnz: usize = kb.relations().map(|r| r.matrix().nnz()).sum();
    let mixture_bytes = nnz * (8 + 4);

    for batch in [1, 2, 8] {
        let dense_bytes = batch * N * 8;
        let s = DenseBatch::from_vec(
            batch,
            N,
            (0..batch * N).map(|_| rng.gen_range(0.0..1.0)).collect(),
        )
        .unwrap();
        let r = DenseBatch::from_vec(
            batch,
            K,
            (0..batch * K).map(|_| rng.gen_range(0.0..1.0)).collect(),
        )
        .unwrap();
        let mats: Vec<_> = kb.group("g").unwrap().matrices(false);
        weighted_sum_matvec(&s, &r, &mats).unwrap();

        let (_, bytes) = allocated_during(|| weighted_sum_matvec(&s, &r, &mats).unwrap());
        assert!(
            bytes <= dense_bytes + SLACK,
            "kernel, batch {batch}: {bytes} bytes"
        );

        let mut g = Graph::new(&kb);
        let se = g.constant_expr(s.clone(), "t").unwrap();
        let mix_type = kb.group("g").unwrap().induced_type().name().to_string();
        let re = g.constant_expr(r.clone(), &mix_type).unwrap();
        let ((y, total), bytes) = allocated_during(|| {
            let y = g.follow(se, re, false).unwrap();
            let t = g.as_tensor(y);
            let total = g.sum(t);
            (y, total)
        });
        assert!(
            bytes <= 4 * dense_bytes + SLACK,
            "graph forward, batch {batch}: {bytes} bytes"
        );
        assert_eq!(g.forward(y).shape(), (batch, N));

        let (_, bytes) = allocated_during(|| g.backward(total).unwrap());
        assert!(
            bytes <= 8 * dense_bytes + SLACK,
            "graph backward, batch {batch}: {bytes} bytes"
        );
        assert!(
            8 * dense_bytes + SLACK < mixture_bytes,
            "test KB too small to be meaningful"
        );
    }
}
