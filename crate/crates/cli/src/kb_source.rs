use std::path::PathBuf;

use clap::{Args, ValueEnum};
use nql::io::fixtures::{royal_fixture, student_grade_fixture};
use nql::io::kinship::{generate_kinship, KinshipSpec};
use nql::io::{load_facts, load_schema};
use nql::{build_kb, try_build_kb, KnowledgeBase};

use crate::error::{require_file, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    /// Tudor and Hanover royal families.
    Royal,
    /// Student and grade tables in record-index form; varies with --seed.
    StudentGrade,
    /// The default synthetic kinship population; varies with --seed.
    Kinship,
}

/// Where a command gets its KB: schema and facts files, or a built-in fixture.
#[derive(Debug, Args)]
pub struct KbArgs {
    /// Schema file (`type`, `rel` and `group` lines).
    #[arg(long, required_unless_present = "fixture", conflicts_with = "fixture")]
    pub schema: Option<PathBuf>,

    /// Facts TSV: `relation<TAB>subject<TAB>object[<TAB>weight]`.
    #[arg(long, requires = "schema")]
    pub facts: Option<PathBuf>,

    /// Use a built-in KB instead of files.
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
}

impl KbArgs {
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(p) = &self.schema {
            require_file("--schema", p)?;
        }
        if let Some(p) = &self.facts {
            require_file("--facts", p)?;
        }
        Ok(())
    }

    pub fn load(&self, seed: u64) -> Result<KnowledgeBase, CliError> {
        if let Some(f) = self.fixture {
            let kb = match f {
                Fixture::Royal => {
                    let (schema, facts) = royal_fixture();
                    build_kb(&schema, facts)?
                }
                Fixture::StudentGrade => {
                    let fx = student_grade_fixture(seed);
                    build_kb(&fx.schema, fx.facts)?
                }
                Fixture::Kinship => {
                    let g = generate_kinship(&KinshipSpec {
                        seed,
                        ..KinshipSpec::default()
                    })?;
                    build_kb(&g.schema, g.facts)?
                }
            };
            return Ok(kb);
        }
        let schema_path = self
            .schema
            .as_ref()
            .ok_or_else(|| CliError::usage("either --schema or --fixture is required"))?;
        let schema = load_schema(schema_path)?;
        let kb = match &self.facts {
            Some(p) => try_build_kb(&schema, load_facts(p)?)?,
            None => build_kb(&schema, Vec::new())?,
        };
        Ok(kb)
    }
}
