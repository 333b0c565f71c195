//! JSON and CSV renderings of a query result.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sgb_core::query::QueryResult;
use sgb_core::{canonicalize, Error, GroupSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonGroup {
    pub gid: usize,
    /// Source row indices (0-based, header excluded).
    pub members: Vec<usize>,
    pub aggregates: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonOutput {
    pub groups: Vec<JsonGroup>,
    pub oset: Vec<usize>,
    pub policy: String,
}

fn json_number(name: &str, v: f64) -> Value {
    if name.starts_with("count(") {
        Value::from(v as u64)
    } else {
        serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
    }
}

impl JsonOutput {
    pub fn from_result(r: &QueryResult) -> Self {
        let groups = r
            .rows
            .iter()
            .map(|row| JsonGroup {
                gid: row.gid,
                members: row.members.clone(),
                aggregates: r.columns.iter().zip(&row.values).map(|(c, v)| (c.clone(), json_number(c, *v))).collect(),
            })
            .collect();
        JsonOutput { groups, oset: r.oset.clone(), policy: r.policy.to_string() }
    }

    pub fn to_group_set(&self) -> Result<GroupSet, Error> {
        Ok(canonicalize(GroupSet {
            groups: self.groups.iter().map(|g| g.members.clone()).collect(),
            oset: self.oset.clone(),
            policy: crate::parse_policy(&self.policy)?,
        }))
    }
}

/// One line per group: `gid,members,<aggregates...>`; members are
/// space-separated row indices.
pub fn write_csv(r: &QueryResult, out: &mut dyn Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["gid".to_string(), "members".to_string()];
    header.extend(r.columns.iter().cloned());
    w.write_record(&header)?;
    for row in &r.rows {
        let mut rec = vec![row.gid.to_string(), row.members.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" ")];
        rec.extend(row.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()
}
