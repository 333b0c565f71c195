//! The similarity group-by query dialect.
//!
//! ```text
//! SELECT agg {, agg} FROM table [WHERE col op number {AND col op number}]
//! GROUP BY col {, col} DISTANCE-TO-ALL (L2 | LINF) WITHIN number
//! [ON-OVERLAP (DUPLICATE | ELIMINATE | NEW-GROUP)] [;]
//! ```
//!
//! `agg` is `min|max|sum|avg(col)` or `count(* | col)`; `op` is one of
//! `= <> < <= > >=`. Numbers are plain decimals with an optional sign.

mod ast;
mod exec;
mod parser;

pub use ast::{render, AggExpr, AggFunc, AggTarget, CmpOp, Predicate, QueryAst};
pub use exec::{execute, execute_with, execute_with_config, QueryError, QueryResult, ResultRow, Table};
pub use parser::{is_reserved, parse, ParseError, RESERVED};
