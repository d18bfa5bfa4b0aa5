//! Small hand-built knowledge bases used by tests, docs and the CLI.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::io::kinship::{FamilyTree, Gender};
use crate::io::{FactTriple, SchemaSpec};

pub const HENRY_VIII: &str = "Henry_VIII of house of Tudor";
pub const HENRY_VII: &str = "Henry_VII of house of Tudor";
pub const VICTORIA: &str = "Victoria of house of Hanover";

/// Parents and siblings of every wife of Henry VIII. The fixture's
/// in-law set is defined this way and holds exactly twelve people.
pub const IN_LAW_QUERY: &str = "one('Henry_VIII of house of Tudor', person_t).wife().father() \
| one('Henry_VIII of house of Tudor', person_t).wife().mother() \
| one('Henry_VIII of house of Tudor', person_t).wife().brother() \
| one('Henry_VIII of house of Tudor', person_t).wife().sister()";

/// The six wives, as listed in the fixture.
pub const HENRY_VIII_WIVES: [&str; 6] = [
    "Catherine of_Aragon",
    "Anne of house of Boleyn",
    "Jane of house of Seymour",
    "Anne of_Cleves",
    "Catherine of house of Howard",
    "Catherine of house of Parr",
];

/// Expected `HENRY_VII.daughter().son()`, by hand enumeration of the
/// fixture tree: Margaret's son James V and Mary's son Henry Brandon.
pub const HENRY_VII_GRANDSONS_VIA_DAUGHTERS: [&str; 2] =
    ["James_V of house of Stuart", "Henry of house of Brandon"];

/// A slice of the Tudor and Hanover families.
///
/// Henry VIII, his parents, siblings, children and six wives are historical,
/// as are Victoria, her father, Albert and his parents. Which relatives of
/// the wives are included is a fixture choice: Catherine of Aragon's
/// parents, Anne Boleyn's parents and two siblings, Jane Seymour's parents
/// and one brother, and Anne of Cleves' parents and one brother. That makes
/// twelve in-laws through [`IN_LAW_QUERY`]. Catherine Howard and Catherine
/// Parr have no relatives in the fixture.
pub fn royal_tree() -> FamilyTree {
    use Gender::*;
    let mut t = FamilyTree::new();
    let family =
        |t: &mut FamilyTree, father: (&str, Gender), mother: (&str, Gender), kids: &[(&str, Gender)]| {
            let f = find_or_add(t, father);
            let m = find_or_add(t, mother);
            t.marry(f, m);
            for &k in kids {
                let c = find_or_add(t, k);
                t.add_parent(c, f);
                t.add_parent(c, m);
            }
        };

    family(
        &mut t,
        (HENRY_VII, Male),
        ("Elizabeth of house of York", Female),
        &[
            ("Arthur of house of Tudor", Male),
            (HENRY_VIII, Male),
            ("Margaret of house of Tudor", Female),
            ("Mary of house of Tudor", Female),
        ],
    );
    family(
        &mut t,
        ("James_IV of house of Stuart", Male),
        ("Margaret of house of Tudor", Female),
        &[(HENRY_VII_GRANDSONS_VIA_DAUGHTERS[0], Male)],
    );
    family(
        &mut t,
        ("Charles of house of Brandon", Male),
        ("Mary of house of Tudor", Female),
        &[(HENRY_VII_GRANDSONS_VIA_DAUGHTERS[1], Male)],
    );

    // The wives and their families.
    family(
        &mut t,
        ("Ferdinand_II of Aragon", Male),
        ("Isabella_I of Castile", Female),
        &[(HENRY_VIII_WIVES[0], Female)],
    );
    family(
        &mut t,
        ("Thomas of house of Boleyn", Male),
        ("Elizabeth of house of Howard", Female),
        &[
            (HENRY_VIII_WIVES[1], Female),
            ("Mary of house of Boleyn", Female),
            ("George of house of Boleyn", Male),
        ],
    );
    family(
        &mut t,
        ("John of house of Seymour", Male),
        ("Margery of house of Wentworth", Female),
        &[
            (HENRY_VIII_WIVES[2], Female),
            ("Edward of house of Seymour", Male),
        ],
    );
    family(
        &mut t,
        ("John_III of_Cleves", Male),
        ("Maria of Julich-Berg", Female),
        &[(HENRY_VIII_WIVES[3], Female), ("William of_Cleves", Male)],
    );
    let henry = t.find(HENRY_VIII).expect("added above");
    for wife in &HENRY_VIII_WIVES[4..] {
        t.add_person(wife, Female);
    }
    for wife in HENRY_VIII_WIVES {
        let w = t.find(wife).expect("added above");
        t.marry(henry, w);
    }
    let children = [
        ("Mary_I of house of Tudor", Female, HENRY_VIII_WIVES[0]),
        ("Elizabeth_I of house of Tudor", Female, HENRY_VIII_WIVES[1]),
        ("Edward_VI of house of Tudor", Male, HENRY_VIII_WIVES[2]),
    ];
    for (child, g, mother) in children {
        let c = t.add_person(child, g);
        t.add_parent(c, henry);
        let m = t.find(mother).expect("added above");
        t.add_parent(c, m);
    }

    family(
        &mut t,
        ("Edward of house of Hanover", Male),
        ("Victoria of Saxe-Coburg-Saalfeld", Female),
        &[(VICTORIA, Female)],
    );
    family(
        &mut t,
        ("Ernest_I of house of Saxe-Coburg and Gotha", Male),
        ("Louise of Saxe-Gotha-Altenburg", Female),
        &[("Albert of house of Saxe-Coburg and Gotha", Male)],
    );
    let v = t.find(VICTORIA).expect("added above");
    let a = t
        .find("Albert of house of Saxe-Coburg and Gotha")
        .expect("added above");
    t.marry(v, a);
    t
}

fn find_or_add(t: &mut FamilyTree, (name, g): (&str, Gender)) -> usize {
    t.find(name).unwrap_or_else(|| t.add_person(name, g))
}

/// Schema and unit-weight facts for the royal-family fixture.
pub fn royal_fixture() -> (SchemaSpec, Vec<FactTriple>) {
    (FamilyTree::schema(), royal_tree().facts())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentRow {
    pub record: String,
    pub id: String,
    pub program: String,
    pub expected_degree: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradeRow {
    pub record: String,
    pub student_id: String,
    pub course_id: String,
    pub letter_grade: String,
}

/// Two relational tables encoded as record entities plus one index
/// relation per column.
#[derive(Debug, Clone)]
pub struct StudentGradeFixture {
    pub schema: SchemaSpec,
    pub facts: Vec<FactTriple>,
    pub students: Vec<StudentRow>,
    pub grades: Vec<GradeRow>,
}

pub const DEGREES: [&str; 3] = ["PhD", "MS", "BS"];
pub const LETTER_GRADES: [&str; 4] = ["A", "B", "C", "D"];
const PROGRAMS: [&str; 3] = ["CS", "Math", "Bio"];

/// A random `student`/`grade` instance. Record types, value types and
/// column relations follow the record-index encoding of a join.
pub fn student_grade_fixture(seed: u64) -> StudentGradeFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_students = rng.gen_range(4..=20);
    let n_grades = rng.gen_range(5..=60);
    let n_courses = rng.gen_range(2..=8);

    let students: Vec<StudentRow> = (0..n_students)
        .map(|i| StudentRow {
            record: format!("srec_{i}"),
            id: format!("s{i}"),
            program: PROGRAMS[rng.gen_range(0..PROGRAMS.len())].to_string(),
            expected_degree: DEGREES[rng.gen_range(0..DEGREES.len())].to_string(),
        })
        .collect();
    let grades: Vec<GradeRow> = (0..n_grades)
        .map(|i| GradeRow {
            record: format!("grec_{i}"),
            student_id: format!("s{}", rng.gen_range(0..n_students)),
            course_id: format!("c{}", rng.gen_range(0..n_courses)),
            letter_grade: LETTER_GRADES[rng.gen_range(0..LETTER_GRADES.len())].to_string(),
        })
        .collect();

    let schema = SchemaSpec::new()
        .with_type("student_record")
        .with_type("grade_record")
        .with_type("id_t")
        .with_type("program_t")
        .with_type("course_t")
        .with_closed_type("degree_t", &DEGREES)
        .with_closed_type("letter_grade_t", &LETTER_GRADES)
        .with_relation("student_record_id", "student_record", "id_t")
        .with_relation("student_record_program", "student_record", "program_t")
        .with_relation("student_record_expected_degree", "student_record", "degree_t")
        .with_relation("grade_record_student_id", "grade_record", "id_t")
        .with_relation("grade_record_course_id", "grade_record", "course_t")
        .with_relation("grade_record_letter_grade", "grade_record", "letter_grade_t");

    let mut facts = Vec::new();
    for s in &students {
        facts.push(FactTriple::new("student_record_id", &s.record, &s.id));
        facts.push(FactTriple::new("student_record_program", &s.record, &s.program));
        facts.push(FactTriple::new(
            "student_record_expected_degree",
            &s.record,
            &s.expected_degree,
        ));
    }
    for g in &grades {
        facts.push(FactTriple::new(
            "grade_record_student_id",
            &g.record,
            &g.student_id,
        ));
        facts.push(FactTriple::new("grade_record_course_id", &g.record, &g.course_id));
        facts.push(FactTriple::new(
            "grade_record_letter_grade",
            &g.record,
            &g.letter_grade,
        ));
    }
    StudentGradeFixture {
        schema,
        facts,
        students,
        grades,
    }
}

/// Ids of PhD students with at least one C, as a query program: first
/// the grade records with a C, then the student records those point to,
/// then the PhD student records, then the ids of the intersection.
pub fn join_emulation_query() -> &'static str {
    "c_records = one('C', letter_grade_t).grade_record_letter_grade(-1)\n\
     records_of_students_with_Cs = c_records.grade_record_student_id().student_record_id(-1)\n\
     records_of_phds = one('PhD', degree_t).student_record_expected_degree(-1)\n\
     result = (records_of_students_with_Cs & records_of_phds).student_record_id()\n"
}

/// Nested-loop evaluation of
/// `SELECT student.id FROM student, grade WHERE student.id = grade.student_id
///  AND student.expected_degree = 'PhD' AND grade.letter_grade = 'C'`.
pub fn nested_loop_join(students: &[StudentRow], grades: &[GradeRow]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for s in students {
        for g in grades {
            if s.id == g.student_id && s.expected_degree == "PhD" && g.letter_grade == "C" {
                out.insert(s.id.clone());
            }
        }
    }
    out
}
