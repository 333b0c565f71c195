//! Command-line front end: CSV ingestion, output formats, subcommands and
//! the synthetic benchmark.

pub mod args;
pub mod bench;
pub mod csvio;
pub mod output;

use std::io::Write;
use std::str::FromStr;

use sgb_core::engine::{run_with_config, EngineConfig};
use sgb_core::oracle::{self, exhaustive_permutation_check_with, first_fit_grouping, permutation_check_with, Verdict};
use sgb_core::query::{self, execute_with, QueryAst, QueryError, QueryResult, Table};
use sgb_core::{Error, GroupSet, Policy, SimilaritySpec, Tuple};

use args::{BenchArgs, CheckArgs, Cli, Command, EngineFlags, Grouping, OutputFormat, RunArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CSV: i32 = 1;
pub const EXIT_QUERY: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

/// Largest input `check --exhaustive` accepts (9! orders).
pub const EXHAUSTIVE_LIMIT: usize = 9;

#[derive(Debug)]
pub enum CliError {
    Csv(String),
    Query(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Csv(_) => EXIT_CSV,
            CliError::Query(_) => EXIT_QUERY,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Csv(m) => write!(f, "input error: {m}"),
            CliError::Query(m) => write!(f, "query error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<csvio::CsvError> for CliError {
    fn from(e: csvio::CsvError) -> Self {
        CliError::Csv(e.to_string())
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::Engine(Error::Internal(m)) => CliError::Internal(m),
            other => CliError::Query(other.to_string()),
        }
    }
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, false, out),
        Command::Oracle(a) => cmd_run(a, true, out),
        Command::Check(a) => cmd_check(a, out),
        Command::Bench(a) => cmd_bench(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "sgb: {e}");
            e.exit_code()
        }
    }
}

fn engine_config(flags: &EngineFlags) -> EngineConfig {
    EngineConfig { use_index: !flags.no_index, use_bounds: !flags.no_bounds }
}

/// Builds the query to run: the parsed `--query`, or one equivalent to the
/// direct flags with no aggregates.
pub fn grouping_ast(g: &Grouping) -> Result<QueryAst, CliError> {
    if let Some(text) = &g.query {
        return query::parse(text).map_err(|e| CliError::Query(e.to_string()));
    }
    let eps = g.eps.ok_or_else(|| CliError::Query("--eps is required with --columns".into()))?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(CliError::Query(format!("--eps must be a positive number, got {eps}")));
    }
    if g.columns.is_empty() {
        return Err(CliError::Query("--columns needs at least one column".into()));
    }
    Ok(QueryAst {
        selects: Vec::new(),
        source: "input".into(),
        filter: Vec::new(),
        group_cols: g.columns.clone(),
        metric: g.metric.into(),
        eps,
        overlap: g.on_overlap.into(),
    })
}

fn write_result(result: &QueryResult, format: OutputFormat, out: &mut dyn Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Internal(format!("writing output: {e}"));
    match format {
        OutputFormat::Json => {
            let json = serde_json::to_string_pretty(&output::JsonOutput::from_result(result))
                .map_err(|e| CliError::Internal(e.to_string()))?;
            writeln!(out, "{json}").map_err(io)
        }
        OutputFormat::Csv => output::write_csv(result, out).map_err(io),
    }
}

pub fn cmd_run(a: &RunArgs, use_oracle: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let table = csvio::read_table_path(&a.input)?;
    let ast = grouping_ast(&a.grouping)?;
    let config = engine_config(&a.engine);
    let result = execute_with(&ast, &table, |ts, spec, policy| {
        if use_oracle {
            Ok(oracle::oracle(ts, &spec, policy))
        } else {
            run_with_config(ts, spec, policy, config)
        }
    })?;
    write_result(&result, a.output, out)?;
    Ok(EXIT_OK)
}

pub fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let table = csvio::read_table_path(&a.input)?;
    let ast = grouping_ast(&a.grouping)?;
    let verdict = check_table(&ast, &table, a)?;
    let io = |e: std::io::Error| CliError::Internal(format!("writing output: {e}"));
    match verdict {
        Verdict::Pass { orders_checked } => {
            writeln!(out, "PASS: {orders_checked} orders produced identical output").map_err(io)?;
            Ok(EXIT_OK)
        }
        Verdict::Fail(w) => {
            writeln!(out, "FAIL: output depends on input order").map_err(io)?;
            writeln!(out, "order A: {:?}", w.order_a).map_err(io)?;
            writeln!(out, "groups A: {:?}", w.output_a.groups).map_err(io)?;
            writeln!(out, "order B: {:?}", w.order_b).map_err(io)?;
            writeln!(out, "groups B: {:?}", w.output_b.groups).map_err(io)?;
            Ok(EXIT_CHECK_FAILED)
        }
    }
}

/// Runs the permutation harness on the tuples `ast` selects from `table`.
/// Orders in a witness list tuple positions among the rows passing the
/// filter.
pub fn check_table(ast: &QueryAst, table: &Table, a: &CheckArgs) -> Result<Verdict, CliError> {
    let config = engine_config(&a.engine);
    let bug = a.inject_order_bug;
    let group = move |ts: &[Tuple], spec: SimilaritySpec, policy: Policy| -> Result<GroupSet, Error> {
        if bug {
            Ok(first_fit_grouping(ts, &spec))
        } else {
            run_with_config(ts, spec, policy, config)
        }
    };
    let mut verdict = None;
    let mut size_error = None;
    execute_with(ast, table, |ts, spec, policy| {
        let v = if a.exhaustive {
            if ts.len() > EXHAUSTIVE_LIMIT {
                size_error = Some(ts.len());
                return Ok(GroupSet::empty(policy));
            }
            exhaustive_permutation_check_with(ts, |o| group(o, spec, policy))?
        } else {
            permutation_check_with(ts, a.permutations, a.seed, |o| group(o, spec, policy))?
        };
        verdict = Some(v);
        Ok(GroupSet::empty(policy))
    })?;
    if let Some(n) = size_error {
        return Err(CliError::Query(format!(
            "--exhaustive supports at most {EXHAUSTIVE_LIMIT} tuples, input has {n}"
        )));
    }
    verdict.ok_or_else(|| CliError::Internal("permutation check did not run".into()))
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let spec = SimilaritySpec::new(a.metric.into(), a.eps).map_err(|e| CliError::Query(e.to_string()))?;
    let policy = Policy::from(a.on_overlap);
    let io = |e: std::io::Error| CliError::Internal(format!("writing output: {e}"));
    writeln!(out, "{}", bench::BenchRow::HEADER).map_err(io)?;
    for &n in &a.sizes {
        let clusters = a.clusters.unwrap_or_else(|| bench::default_clusters(n));
        // Data is laid out for ε = 1; `--eps` only sets the grouping threshold.
        let points = bench::generate(n, clusters, 1.0, a.seed);
        let row = bench::measure(&points, spec, policy, !a.no_baseline)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        writeln!(out, "{row}").map_err(io)?;
    }
    Ok(EXIT_OK)
}

/// Parses a policy name as printed in JSON output.
pub fn parse_policy(s: &str) -> Result<Policy, Error> {
    Policy::from_str(s)
}
