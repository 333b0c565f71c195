use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::types::{Metric, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFunc {
    Min,
    Max,
    Sum,
    Avg,
    Count,
}

impl AggFunc {
    pub const ALL: [AggFunc; 5] = [AggFunc::Min, AggFunc::Max, AggFunc::Sum, AggFunc::Avg, AggFunc::Count];

    pub fn as_str(&self) -> &'static str {
        match self {
            AggFunc::Min => "min",
            AggFunc::Max => "max",
            AggFunc::Sum => "sum",
            AggFunc::Avg => "avg",
            AggFunc::Count => "count",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AggTarget {
    /// `*`, only valid for `count`.
    Star,
    Column(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AggExpr {
    pub func: AggFunc,
    pub target: AggTarget,
}

impl fmt::Display for AggExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.target {
            AggTarget::Star => write!(f, "{}(*)", self.func.as_str()),
            AggTarget::Column(c) => write!(f, "{}({})", self.func.as_str(), c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn as_str(&self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn eval(&self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub column: String,
    pub op: CmpOp,
    pub value: f64,
}

/// A parsed similarity group-by query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryAst {
    pub selects: Vec<AggExpr>,
    pub source: String,
    /// Conjunction; empty means no `WHERE` clause.
    pub filter: Vec<Predicate>,
    /// The grouping vector, in order.
    pub group_cols: Vec<String>,
    pub metric: Metric,
    pub eps: f64,
    pub overlap: Policy,
}

/// Canonical text. Keywords upper case, every clause spelled out,
/// `ON-OVERLAP` always present. Parsing the result gives back an equal AST.
impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        for (i, a) in self.selects.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, " FROM {}", self.source)?;
        for (i, p) in self.filter.iter().enumerate() {
            let kw = if i == 0 { "WHERE" } else { "AND" };
            write!(f, " {kw} {} {} {}", p.column, p.op.as_str(), p.value)?;
        }
        f.write_str(" GROUP BY ")?;
        for (i, c) in self.group_cols.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(c)?;
        }
        write!(f, " DISTANCE-TO-ALL {} WITHIN {} ON-OVERLAP {}", self.metric, self.eps, self.overlap)
    }
}

pub fn render(ast: &QueryAst) -> String {
    use alloc::string::ToString;
    ast.to_string()
}
