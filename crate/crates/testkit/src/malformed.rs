//! Hand-written queries that must be rejected with a source-spanned error.
//! The last few parse but fail to bind against the royal fixture.

pub const MALFORMED_QUERIES: [&str; 50] = [
    "one('Henry_VIII of house of Tudor', person_t",
    "one('Henry_VIII of house of Tudor' person_t)",
    "one(",
    "one()",
    "one('Henry_VIII of house of Tudor')",
    ".wife()",
    "x.",
    "x.wife(",
    "x.wife(-2)",
    "x |",
    "| x",
    "x & & y",
    "x *",
    "x * y",
    "(x",
    "x)",
    "'unterminated",
    "one('a', person_t) one('b', person_t)",
    "x =",
    "= x",
    "x.follow()",
    "x.follow('wife', -1, 3)",
    "x.if_any()",
    "x.if_any(y, z)",
    "all()",
    "all(person_t, x)",
    "none(",
    "x..wife()",
    "x.123()",
    "x.wife)(",
    "@",
    "x $ y",
    "one(\"unterminated, person_t)",
    "x * 1e",
    "x.wife() extra",
    "",
    "   ",
    "# only a comment",
    "x = y = z",
    "1.5",
    "x * 2 *",
    "((x)",
    "x.wife(-1",
    "x.follow(",
    "x | | y",
    "x.wife().",
    "one('Henry_VIII of house of Tudor', person_t).wif()",
    "nobody_bound_me.wife()",
    "one('Henry_VIII of house of Tudor', person_t) | all(rel_t)",
    "one('Henry_VIII of house of Tudor', no_such_t)",
];
