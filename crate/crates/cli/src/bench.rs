use std::time::Instant;

use nql::io::synthetic::{relation_name, uniform_kb, UniformKbSpec, UNIFORM_GROUP, UNIFORM_TYPE};
use nql::sparse::DenseBatch;
use nql::{Graph, KnowledgeBase, MultisetExpr, Result as NqlResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::CliError;
use crate::output::Output;
use crate::BenchArgs;

const MIB: f64 = 1024.0 * 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Workload {
    Traverse,
    Chain3,
    Follow,
}

impl Workload {
    const ALL: [Workload; 3] = [Workload::Traverse, Workload::Chain3, Workload::Follow];

    fn name(self) -> &'static str {
        match self {
            Workload::Traverse => "traverse",
            Workload::Chain3 => "chain3",
            Workload::Follow => "follow",
        }
    }
}

/// `VmRSS` and `VmHWM` of this process in bytes, where procfs exists.
pub fn process_memory() -> (Option<u64>, Option<u64>) {
    let Ok(status) = std::fs::read_to_string("/proc/self/status") else {
        return (None, None);
    };
    let field = |key: &str| {
        status
            .lines()
            .find_map(|l| l.strip_prefix(key))
            .and_then(|rest| rest.trim().trim_end_matches("kB").trim().parse::<u64>().ok())
            .map(|kb| kb * 1024)
    };
    (field("VmRSS:"), field("VmHWM:"))
}

fn available_memory() -> Option<u64> {
    let info = std::fs::read_to_string("/proc/meminfo").ok()?;
    info.lines()
        .find_map(|l| l.strip_prefix("MemAvailable:"))
        .and_then(|rest| rest.trim().trim_end_matches("kB").trim().parse::<u64>().ok())
        .map(|kb| kb * 1024)
}

/// Rough peak footprint: CSR plus transpose per relation, the sort buffer
/// used while building, entity names, and a few live dense batches.
fn estimate_bytes(args: &BenchArgs) -> u64 {
    let (n, t, r, b) = (
        args.entities as u64,
        args.tuples as u64,
        args.relations as u64,
        args.batch.max(1) as u64,
    );
    let csr = 2 * (t * 12 + r * (n + 1) * 8);
    let build = (t / r.max(1)) * 16;
    let names = n * 64;
    let dense = 8 * b * n * 8;
    csr + build + names + dense
}

/// Median and 95th percentile (nearest rank), in milliseconds.
pub fn summarize(samples: &mut [f64]) -> (f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let median = if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    };
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    (median, samples[rank - 1])
}

fn seeds(g: &mut Graph<'_>, n: usize, batch: usize, rng: &mut ChaCha8Rng) -> NqlResult<MultisetExpr> {
    let mut s = DenseBatch::zeros(batch, n);
    if n > 0 {
        for b in 0..batch {
            s.set(b, rng.gen_range(0..n), 1.0);
        }
    }
    g.constant_expr(s, UNIFORM_TYPE)
}

fn mixture(g: &mut Graph<'_>, k: usize, batch: usize, rng: &mut ChaCha8Rng) -> NqlResult<MultisetExpr> {
    let data = (0..batch * k).map(|_| rng.gen_range(0.0..1.0)).collect();
    let ty = g
        .kb()
        .group(UNIFORM_GROUP)
        .map(|gr| gr.induced_type().name().to_string())
        .unwrap_or_else(|| UNIFORM_GROUP.to_string());
    g.constant_expr(DenseBatch::from_vec(batch, k, data)?, &ty)
}

/// Runs one workload once and returns its wall time in milliseconds.
fn time_once(kb: &KnowledgeBase, w: Workload, batch: usize, rng: &mut ChaCha8Rng) -> NqlResult<f64> {
    let mut g = Graph::new(kb);
    let n = kb.type_decl(UNIFORM_TYPE)?.cardinality();
    let s = seeds(&mut g, n, batch, rng)?;
    let mix = match w {
        Workload::Follow => Some(mixture(&mut g, kb.relations().count(), batch, rng)?),
        _ => None,
    };
    let start = Instant::now();
    let y = match w {
        Workload::Traverse => g.rel_call(s, &relation_name(0), false)?,
        Workload::Chain3 => {
            let mut x = s;
            for hop in 0..3 {
                x = g.rel_call(x, &relation_name(hop % kb.relations().count()), false)?;
            }
            x
        }
        Workload::Follow => g.follow(s, mix.expect("built above"), false)?,
    };
    std::hint::black_box(g.forward(y));
    Ok(start.elapsed().as_secs_f64() * 1e3)
}

pub fn run(out: &mut Output, args: &BenchArgs) -> Result<(), CliError> {
    if args.relations == 0 {
        return Err(CliError::usage("--relations must be at least 1"));
    }
    if args.batch == 0 || args.repeats == 0 {
        return Err(CliError::usage("--batch and --repeats must be positive"));
    }
    let need = estimate_bytes(args);
    let limit = args
        .memory_limit_mb
        .map(|m| m * 1024 * 1024)
        .or_else(available_memory);
    if let Some(limit) = limit {
        if need > limit {
            let (_, hwm) = process_memory();
            return Err(CliError::runtime(format!(
                "insufficient memory: the benchmark needs about {:.0} MiB but only {:.0} MiB is allowed; \
                 high-water mark so far {:.1} MiB",
                need as f64 / MIB,
                limit as f64 / MIB,
                hwm.unwrap_or(0) as f64 / MIB
            )));
        }
    }

    let start = Instant::now();
    let kb = uniform_kb(&UniformKbSpec {
        entities: args.entities,
        tuples: args.tuples,
        relations: args.relations,
        seed: out.seed(),
    })
    .map_err(|e| CliError::usage(e.to_string()))?;
    let build_ms = start.elapsed().as_secs_f64() * 1e3;
    let threads = rayon::current_num_threads();
    out.text(format!(
        "kb: {} entities, {} facts, {} relations, built in {:.0} ms; {} threads",
        args.entities,
        kb.num_facts(),
        args.relations,
        build_ms,
        threads
    ));
    out.record(
        "bench-kb",
        json!({
            "entities": args.entities,
            "facts": kb.num_facts(),
            "relations": args.relations,
            "build_ms": build_ms,
            "threads": threads,
        }),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(out.seed() ^ 0x9e37_79b9_7f4a_7c15);
    let mut batches = vec![args.batch];
    if args.batch != 1 {
        batches.push(1);
    }
    for w in Workload::ALL {
        let mut per_row = Vec::new();
        for &batch in &batches {
            time_once(&kb, w, batch, &mut rng)?;
            let mut samples = (0..args.repeats)
                .map(|_| time_once(&kb, w, batch, &mut rng))
                .collect::<NqlResult<Vec<f64>>>()?;
            let (median, p95) = summarize(&mut samples);
            per_row.push(median / batch as f64);
            out.text(format!(
                "{:<9} batch {:>3}: median {:9.3} ms  p95 {:9.3} ms  per row {:9.4} ms",
                w.name(),
                batch,
                median,
                p95,
                median / batch as f64
            ));
            out.record(
                "bench",
                json!({
                    "workload": w.name(),
                    "batch": batch,
                    "repeats": args.repeats,
                    "median_ms": median,
                    "p95_ms": p95,
                    "per_row_ms": median / batch as f64,
                }),
            );
        }
        if per_row.len() == 2 {
            let amortized = per_row[0] <= per_row[1];
            out.text(format!(
                "{:<9} per-row cost at batch {} {} batch-1 cost",
                w.name(),
                args.batch,
                if amortized { "<=" } else { ">" }
            ));
            out.record(
                "bench-amortization",
                json!({"workload": w.name(), "batch": args.batch, "amortized": amortized}),
            );
        }
    }

    let (rss, hwm) = process_memory();
    out.text(format!(
        "memory: kb {:.1} MiB, rss {}, high-water {}",
        kb.heap_bytes() as f64 / MIB,
        rss.map_or("n/a".into(), |b| format!("{:.1} MiB", b as f64 / MIB)),
        hwm.map_or("n/a".into(), |b| format!("{:.1} MiB", b as f64 / MIB)),
    ));
    out.record(
        "bench-memory",
        json!({
            "kb_heap_bytes": kb.heap_bytes(),
            "rss_bytes": rss,
            "hwm_bytes": hwm,
            "threads": threads,
        }),
    );
    Ok(())
}
