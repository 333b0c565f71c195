use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::{AggExpr, AggFunc, AggTarget, QueryAst};
use crate::engine::{run_with_config, EngineConfig};
use crate::error::Error;
use crate::types::{GroupSet, Policy, SimilaritySpec, Tuple};

/// An in-memory table. `None` marks a cell that is not a number.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<Option<f64>>>) -> Self {
        Table { columns, rows }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("column '{column}' is not numeric (row {row})")]
    NonNumeric { column: String, row: usize },

    #[error("row {row} has {actual} cells, expected {expected}")]
    RaggedRow { row: usize, expected: usize, actual: usize },

    #[error(transparent)]
    Engine(#[from] Error),
}

/// One output group. `members` are row indices into the source table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub gid: usize,
    pub members: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    /// Rendered aggregate expressions, e.g. `min(x)`.
    pub columns: Vec<String>,
    /// In canonical group order.
    pub rows: Vec<ResultRow>,
    /// Source row indices that ended up in several groups.
    pub oset: Vec<usize>,
    pub policy: Policy,
}

pub fn execute(ast: &QueryAst, table: &Table) -> Result<QueryResult, QueryError> {
    execute_with_config(ast, table, EngineConfig::default())
}

pub fn execute_with_config(ast: &QueryAst, table: &Table, config: EngineConfig) -> Result<QueryResult, QueryError> {
    execute_with(ast, table, |tuples, spec, policy| run_with_config(tuples, spec, policy, config))
}

/// Like [`execute`] but with a caller-supplied grouping operator. Tuple ids
/// handed to `grouper` are positions among the rows that pass the filter.
pub fn execute_with<F>(ast: &QueryAst, table: &Table, mut grouper: F) -> Result<QueryResult, QueryError>
where
    F: FnMut(&[Tuple], SimilaritySpec, Policy) -> Result<GroupSet, Error>,
{
    let width = table.columns.len();
    if let Some((row, r)) = table.rows.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(QueryError::RaggedRow { row, expected: width, actual: r.len() });
    }
    let numeric_column = |name: &str| -> Result<usize, QueryError> {
        let c = table.column_index(name).ok_or_else(|| QueryError::UnknownColumn(name.to_string()))?;
        match table.rows.iter().position(|r| r[c].is_none_or(|v| !v.is_finite())) {
            Some(row) => Err(QueryError::NonNumeric { column: name.to_string(), row }),
            None => Ok(c),
        }
    };
    let group_idx = ast.group_cols.iter().map(|c| numeric_column(c)).collect::<Result<Vec<_>, _>>()?;
    let filter_idx = ast.filter.iter().map(|p| numeric_column(&p.column)).collect::<Result<Vec<_>, _>>()?;
    let agg_idx = ast
        .selects
        .iter()
        .map(|a| match &a.target {
            AggTarget::Star => Ok(None),
            AggTarget::Column(c) => numeric_column(c).map(Some),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let cell = |row: usize, c: usize| table.rows[row][c].expect("checked numeric");
    let kept: Vec<usize> = (0..table.rows.len())
        .filter(|r| ast.filter.iter().zip(&filter_idx).all(|(p, c)| p.op.eval(cell(*r, *c), p.value)))
        .collect();
    let tuples: Vec<Tuple> = kept
        .iter()
        .enumerate()
        .map(|(id, r)| Tuple::new(id, group_idx.iter().map(|c| cell(*r, *c)).collect()))
        .collect();

    let spec = SimilaritySpec::new(ast.metric, ast.eps)?;
    let gs = grouper(&tuples, spec, ast.overlap)?.canonical();

    // `kept` is increasing, so mapping ids back keeps canonical order.
    let rows = gs
        .groups
        .iter()
        .enumerate()
        .map(|(gid, g)| {
            let members: Vec<usize> = g.iter().map(|id| kept[*id]).collect();
            let values = ast
                .selects
                .iter()
                .zip(&agg_idx)
                .map(|(a, c)| aggregate(a, c.map(|c| members.iter().map(|r| cell(*r, c)).collect()), members.len()))
                .collect();
            ResultRow { gid, members, values }
        })
        .collect();
    Ok(QueryResult {
        columns: ast.selects.iter().map(|a| a.to_string()).collect(),
        rows,
        oset: gs.oset.iter().map(|id| kept[*id]).collect(),
        policy: gs.policy,
    })
}

fn aggregate(a: &AggExpr, values: Option<Vec<f64>>, count: usize) -> f64 {
    let vals = values.unwrap_or_default();
    let sum = || vals.iter().sum::<f64>();
    match a.func {
        AggFunc::Count => count as f64,
        AggFunc::Min => vals.iter().copied().fold(f64::INFINITY, f64::min),
        AggFunc::Max => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        AggFunc::Sum => sum(),
        AggFunc::Avg => sum() / count as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse;
    use alloc::vec;

    fn fixture_f() -> Table {
        let xs = [0.0, 3.0, 5.0, 10.0, 13.0, 15.0, 30.0, 33.0];
        Table::new(vec!["x".into(), "y".into()], xs.iter().map(|x| vec![Some(*x), Some(0.0)]).collect())
    }

    #[test]
    fn fixture_f_new_group() {
        let q = parse("SELECT min(x), count(*) FROM f GROUP BY x, y DISTANCE-TO-ALL L2 WITHIN 6 ON-OVERLAP NEW-GROUP").unwrap();
        let r = execute(&q, &fixture_f()).unwrap();
        assert_eq!(r.columns, vec!["min(x)", "count(*)"]);
        let vals: Vec<Vec<f64>> = r.rows.iter().map(|r| r.values.clone()).collect();
        assert_eq!(vals, vec![vec![0.0, 2.0], vec![5.0, 2.0], vec![13.0, 2.0], vec![30.0, 2.0]]);
        assert_eq!(r.rows[1].members, vec![2, 3]);
    }

    #[test]
    fn duplicate_counts_shared_members_everywhere() {
        let q = parse("SELECT sum(x), avg(x), max(x), count(x) FROM f GROUP BY x DISTANCE-TO-ALL L2 WITHIN 6").unwrap();
        let r = execute(&q, &fixture_f()).unwrap();
        let vals: Vec<Vec<f64>> = r.rows.iter().map(|r| r.values.clone()).collect();
        assert_eq!(
            vals,
            vec![
                vec![8.0, 8.0 / 3.0, 5.0, 3.0],
                vec![15.0, 7.5, 10.0, 2.0],
                vec![38.0, 38.0 / 3.0, 15.0, 3.0],
                vec![63.0, 31.5, 33.0, 2.0],
            ]
        );
        assert_eq!(r.oset, vec![2, 3]);
    }

    #[test]
    fn filter_maps_rows_back() {
        let q = parse("SELECT count(*) FROM f WHERE x > 4 GROUP BY x DISTANCE-TO-ALL L2 WITHIN 6 ON-OVERLAP ELIMINATE").unwrap();
        let r = execute(&q, &fixture_f()).unwrap();
        let members: Vec<Vec<usize>> = r.rows.iter().map(|r| r.members.clone()).collect();
        // x = 5,10,13,15,30,33: cliques {5,10},{10,13,15},{30,33}; 10 overlaps.
        assert_eq!(members, vec![vec![2], vec![4, 5], vec![6, 7]]);
    }

    #[test]
    fn empty_inputs() {
        let q = parse("SELECT count(*) FROM f WHERE x > 100 GROUP BY x DISTANCE-TO-ALL L2 WITHIN 6").unwrap();
        assert!(execute(&q, &fixture_f()).unwrap().rows.is_empty());
        let empty = Table::new(vec!["x".into()], Vec::new());
        assert!(execute(&q, &empty).unwrap().rows.is_empty());
    }

    #[test]
    fn semantic_errors() {
        let q = parse("SELECT count(*) FROM f GROUP BY z DISTANCE-TO-ALL L2 WITHIN 6").unwrap();
        assert_eq!(execute(&q, &fixture_f()), Err(QueryError::UnknownColumn("z".into())));
        let mut t = fixture_f();
        t.rows[3][1] = None;
        let q = parse("SELECT count(*) FROM f GROUP BY x, y DISTANCE-TO-ALL L2 WITHIN 6").unwrap();
        assert_eq!(execute(&q, &t), Err(QueryError::NonNumeric { column: "y".into(), row: 3 }));
        let q = parse("SELECT count(*) FROM f GROUP BY x DISTANCE-TO-ALL L2 WITHIN 6").unwrap();
        assert!(execute(&q, &t).is_ok());
    }
}
