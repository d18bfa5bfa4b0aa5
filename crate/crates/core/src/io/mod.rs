//! File formats, fixtures and the synthetic kinship generator.

mod checkpoint;
mod dataset;
mod facts;
pub mod fixtures;
pub mod kinship;
mod schema;
pub mod synthetic;

pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint, Checkpoint,
    CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use dataset::{load_dataset, parse_dataset, write_dataset, Example};
pub use facts::{load_facts, parse_facts, write_facts, FactReader, FactTriple};
pub use schema::{load_schema, parse_schema, GroupSpec, RelationSpec, SchemaSpec, TypeSpec};
