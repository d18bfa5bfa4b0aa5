use std::fs::{self, File};
use std::io::BufWriter;

use nql::graph::Constraint;
use nql::io::kinship::{self, chain_dataset, relation_dataset, KinshipSpec, KINSHIP_RULES, KIN_RELATIONS};
use nql::io::{load_checkpoint, load_dataset, save_checkpoint, write_dataset, write_facts, Example};
use nql::learning::{
    build_model, evaluate, restore_model, train as train_model, Leftover, LossSpec, ModelConfig, ModelKind,
    OptimizerSpec, TrainConfig, Vocabulary,
};
use nql::{format_multiset, parse_program, Graph, KnowledgeBase, NqlError};
use serde_json::json;

use crate::error::{require_file, require_parent, CliError};
use crate::kb_source::KbArgs;
use crate::output::Output;
use crate::{
    ConstraintArg, EvalArgs, GenerateArgs, LeftoverArg, LossArg, ModelArg, OptimizerArg, QueryArgs, TrainArgs,
};

pub fn load_check(out: &mut Output, args: &KbArgs) -> Result<(), CliError> {
    args.validate()?;
    let kb = args.load(seed(out))?;
    for t in kb.types() {
        out.text(format!("type {} ({} entities)", t.name(), t.cardinality()));
    }
    for r in kb.relations() {
        out.text(format!(
            "rel {} {} -> {} ({} facts)",
            r.name(),
            r.domain(),
            r.range(),
            r.matrix().nnz()
        ));
    }
    for g in kb.groups() {
        let members: Vec<&str> = g.member_names().collect();
        out.text(format!("group {} = {}", g.name(), members.join(",")));
    }
    out.text(format!(
        "ok: {} entities, {} facts, {} bytes",
        kb.num_entities(),
        kb.num_facts(),
        kb.heap_bytes()
    ));
    out.record(
        "load-check",
        json!({
            "types": kb.types().map(|t| json!({"name": t.name(), "entities": t.cardinality()})).collect::<Vec<_>>(),
            "relations": kb.relations().map(|r| json!({
                "name": r.name(), "domain": r.domain(), "range": r.range(), "facts": r.matrix().nnz()
            })).collect::<Vec<_>>(),
            "groups": kb.groups().map(|g| json!({
                "name": g.name(), "members": g.member_names().collect::<Vec<_>>()
            })).collect::<Vec<_>>(),
            "entities": kb.num_entities(),
            "facts": kb.num_facts(),
            "heap_bytes": kb.heap_bytes(),
        }),
    );
    Ok(())
}

fn seed(out: &Output) -> u64 {
    out.seed()
}

/// One entity per line, like a pretty-printed dict: `{'a': 1.0,` then
/// ` 'b': 0.5}`. An empty set prints as `{}`.
pub fn multiset_lines(set: &[(String, f64)]) -> Vec<String> {
    if set.is_empty() {
        return vec!["{}".to_string()];
    }
    let n = set.len();
    set.iter()
        .enumerate()
        .map(|(i, item)| {
            let one = format_multiset(std::slice::from_ref(item));
            let inner = &one[1..one.len() - 1];
            let open = if i == 0 { "{" } else { " " };
            let close = if i + 1 == n { "}" } else { "," };
            format!("{open}{inner}{close}")
        })
        .collect()
}

pub fn query(out: &mut Output, args: &QueryArgs) -> Result<(), CliError> {
    args.kb.validate()?;
    let source = match (&args.query, &args.file) {
        (Some(q), _) => q.clone(),
        (None, Some(p)) => {
            require_file("--file", p)?;
            fs::read_to_string(p)?
        }
        (None, None) => return Err(CliError::usage("a query or --file is required")),
    };
    if !(args.min_weight.is_finite()) {
        return Err(CliError::usage("--min-weight must be finite"));
    }
    let program = parse_program(&source).map_err(|e| CliError::query(&NqlError::from(e), &source))?;
    let kb = args.kb.load(seed(out))?;
    let mut g = Graph::new(&kb);
    let result = g
        .bind_program(&program)
        .map_err(|e| CliError::query(&e, &source))?;
    let ty = g.type_of(result).to_string();
    let rows = g.decode(result, args.top_k, args.min_weight)?;
    for (b, set) in rows.iter().enumerate() {
        if rows.len() > 1 {
            out.text(format!("# row {b}"));
        }
        for line in multiset_lines(set) {
            out.text(line);
        }
        out.record(
            "query",
            json!({
                "row": b,
                "type": ty,
                "result": set.iter().map(|(e, w)| json!({"entity": e, "weight": w})).collect::<Vec<_>>(),
            }),
        );
    }
    Ok(())
}

fn loss_spec(arg: LossArg) -> LossSpec {
    match arg {
        LossArg::TargetMass => LossSpec::target_mass(),
        LossArg::Bce => LossSpec::bce(),
    }
}

fn model_config(args: &TrainArgs, data: &[Example]) -> ModelConfig {
    let kind = match args.model {
        ModelArg::Template => ModelKind::Template,
        ModelArg::Qa => ModelKind::Qa,
        ModelArg::Multihop => ModelKind::Multihop,
        ModelArg::Recurrent => ModelKind::Recurrent,
    };
    let mut config = ModelConfig::new(kind, &args.group);
    config.dim = args.dim;
    config.max_hops = args.max_hops;
    config.leftover = match args.leftover {
        LeftoverArg::Drop => Leftover::Drop,
        LeftoverArg::AddToLast => Leftover::AddToLast,
    };
    config.relation_constraint = match args.constraint {
        ConstraintArg::Identity => Constraint::Identity,
        ConstraintArg::Softmax => Constraint::Softmax,
        ConstraintArg::Softplus => Constraint::Softplus,
        ConstraintArg::Sigmoid => Constraint::Sigmoid,
    };
    if kind != ModelKind::Template {
        let vocab = Vocabulary::build(data.iter().map(|e| (e.question.as_str(), e.seed.as_str())));
        config.vocab = vocab.words().to_vec();
    }
    config
}

fn check_positive(flag: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "{flag} must be a finite nonnegative number"
        )))
    }
}

pub fn train(out: &mut Output, args: &TrainArgs) -> Result<(), CliError> {
    args.kb.validate()?;
    require_file("--dataset", &args.dataset)?;
    if let Some(p) = &args.eval_dataset {
        require_file("--eval-dataset", p)?;
    }
    require_parent("--checkpoint", &args.checkpoint)?;
    check_positive("--lr", args.lr)?;
    check_positive("--momentum", args.momentum)?;
    if args.batch_size == 0 {
        return Err(CliError::usage("--batch-size must be positive"));
    }
    if args.dim == 0 {
        return Err(CliError::usage("--dim must be positive"));
    }
    if args.max_hops == 0 {
        return Err(CliError::usage("--max-hops must be positive"));
    }

    let data = load_dataset(&args.dataset)?;
    let held_out = match &args.eval_dataset {
        Some(p) => Some(load_dataset(p)?),
        None => None,
    };
    let kb = args.kb.load(seed(out))?;
    let config = model_config(args, &data);
    let mut model = build_model(&kb, config, seed(out))?;
    let train_config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        optimizer: match args.optimizer {
            OptimizerArg::Sgd => OptimizerSpec::sgd(args.lr, args.momentum),
            OptimizerArg::Adam => OptimizerSpec::adam(args.lr),
        },
        seed: seed(out),
        loss: loss_spec(args.loss),
    };
    let mut eval_error = None;
    let history = train_model(&mut *model, &kb, &data, &train_config, |m, model| {
        let mut fields = json!({
            "epoch": m.epoch, "loss": m.loss, "hits_at_1": m.hits_at_1, "examples": m.examples,
        });
        let mut line = format!("epoch {}: loss {:.6} hits@1 {:.4}", m.epoch, m.loss, m.hits_at_1);
        if let Some(h) = &held_out {
            match evaluate(model, &kb, h, args.batch_size, train_config.loss) {
                Ok(e) => {
                    fields["eval_loss"] = json!(e.loss);
                    fields["eval_hits_at_1"] = json!(e.hits_at_1);
                    line.push_str(&format!(
                        " | held-out loss {:.6} hits@1 {:.4}",
                        e.loss, e.hits_at_1
                    ));
                }
                Err(e) => {
                    eval_error.get_or_insert(e);
                }
            }
        }
        out.text(line);
        out.record("epoch", fields);
    })?;
    if let Some(e) = eval_error {
        return Err(e.into());
    }
    save_checkpoint(&args.checkpoint, model.config(), model.params())?;
    let last = history.last();
    out.text(format!("checkpoint written to {}", args.checkpoint.display()));
    out.record(
        "train",
        json!({
            "model": model.kind().as_str(),
            "epochs": args.epochs,
            "parameters": model.params().num_values(),
            "final_loss": last.map(|m| m.loss),
            "final_hits_at_1": last.map(|m| m.hits_at_1),
            "checkpoint": args.checkpoint.display().to_string(),
            "config": train_config,
        }),
    );
    Ok(())
}

pub fn eval(out: &mut Output, args: &EvalArgs) -> Result<(), CliError> {
    args.kb.validate()?;
    require_file("--dataset", &args.dataset)?;
    require_file("--checkpoint", &args.checkpoint)?;
    if args.batch_size == 0 {
        return Err(CliError::usage("--batch-size must be positive"));
    }
    let data = load_dataset(&args.dataset)?;
    let cp = load_checkpoint(&args.checkpoint)?;
    let kb = args.kb.load(seed(out))?;
    let model = restore_model(&kb, cp.model, &cp.params)?;
    let m = evaluate(&*model, &kb, &data, args.batch_size, loss_spec(args.loss))?;
    out.text(format!(
        "{} model: loss {:.6} hits@1 {:.4} over {} examples",
        model.kind(),
        m.loss,
        m.hits_at_1,
        m.examples
    ));
    out.record(
        "eval",
        json!({
            "model": model.kind().as_str(),
            "loss": m.loss,
            "hits_at_1": m.hits_at_1,
            "examples": m.examples,
        }),
    );
    Ok(())
}

fn write_examples(path: &std::path::Path, examples: &[Example]) -> Result<(), CliError> {
    write_dataset(BufWriter::new(File::create(path)?), examples)?;
    Ok(())
}

pub fn generate_kinship(out: &mut Output, args: &GenerateArgs) -> Result<(), CliError> {
    let spec = KinshipSpec {
        seed: seed(out),
        generations: args.generations,
        persons_per_generation: args.persons_per_generation,
        marriage_prob: args.marriage_prob,
        min_children: args.min_children,
        max_children: args.max_children,
    };
    spec.validate().map_err(|e| CliError::usage(e.to_string()))?;
    if args.chain_hops.is_empty() || args.chain_hops.contains(&0) {
        return Err(CliError::usage("--chain-hops must list positive chain lengths"));
    }
    if args.out_dir.exists() && !args.out_dir.is_dir() {
        return Err(CliError::usage(format!(
            "--out-dir {} is not a directory",
            args.out_dir.display()
        )));
    }
    let generated = kinship::generate_kinship(&spec)?;
    let dir = &args.out_dir;
    fs::create_dir_all(dir.join("datasets"))?;
    fs::write(dir.join("schema.txt"), generated.schema.to_text())?;
    write_facts(
        BufWriter::new(File::create(dir.join("facts.tsv"))?),
        &generated.facts,
    )?;
    fs::write(dir.join("README.txt"), KINSHIP_RULES)?;
    let mut datasets = serde_json::Map::new();
    for rel in KIN_RELATIONS {
        let examples = relation_dataset(&generated.oracle, rel)?;
        write_examples(&dir.join("datasets").join(format!("{rel}.tsv")), &examples)?;
        datasets.insert(rel.to_string(), json!(examples.len()));
    }
    let chains = chain_dataset(&generated.oracle, &args.chain_hops, args.chain_count, seed(out))?;
    write_examples(&dir.join("datasets").join("chains.tsv"), &chains)?;
    datasets.insert("chains".to_string(), json!(chains.len()));

    let kb: KnowledgeBase = nql::build_kb(&generated.schema, generated.facts.iter().cloned())?;
    out.text(format!(
        "wrote {} persons and {} facts to {}",
        generated.oracle.len(),
        kb.num_facts(),
        dir.display()
    ));
    out.record(
        "generate-kinship",
        json!({
            "out_dir": dir.display().to_string(),
            "persons": generated.oracle.len(),
            "facts": kb.num_facts(),
            "datasets": datasets,
        }),
    );
    Ok(())
}
