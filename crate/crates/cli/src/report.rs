//! `flowtrace compare` and `flowtrace report`: differential artifact
//! counts between a varying-flow and a constant-flow measurement of
//! the same destinations, and the per-cause attribution table.

use std::path::{Path, PathBuf};

use clap::Args;
use flowtrace_core::artifacts::{
    compare_datasets, percent_cells, summarize, ArtifactCause, ArtifactKind, Comparison, KindDiff,
};
use flowtrace_core::tracestore::Dataset;

use crate::common::{
    check_destination_coverage, emit, load_dataset, render_sections, single_tool, CliError,
    FormatArg, Section,
};

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Measurements made with per-probe-varying headers (the tool
    /// whose artifacts are under suspicion).
    pub variable_file: PathBuf,

    /// Constant-flow measurements of the same destinations.
    pub constant_file: PathBuf,

    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,

    /// Write the report here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[command(flatten)]
    pub inputs: CompareArgs,
}

/// Both files loaded into one dataset, with their tool labels.
struct Paired {
    dataset: Dataset,
    variable_tool: String,
    constant_tool: String,
}

fn load_pair(variable_file: &Path, constant_file: &Path) -> Result<Paired, CliError> {
    let variable = load_dataset(variable_file)?;
    let constant = load_dataset(constant_file)?;
    let variable_tool = single_tool(&variable, variable_file)?;
    let constant_tool = single_tool(&constant, constant_file)?;
    if variable_tool == constant_tool {
        return Err(CliError::Usage(format!(
            "both files are labeled tool {variable_tool:?}; they cannot be told apart"
        )));
    }
    let mut routes = variable.routes().to_vec();
    routes.extend(constant.routes().iter().cloned());
    let dataset = Dataset::from_routes(routes);
    check_destination_coverage(&dataset, &variable_tool, &constant_tool)?;
    Ok(Paired { dataset, variable_tool, constant_tool })
}

fn tools_section(pair: &Paired) -> Section {
    Section {
        name: "tools",
        headers: vec!["role", "tool"],
        rows: vec![
            vec!["variable".into(), pair.variable_tool.clone()],
            vec!["constant".into(), pair.constant_tool.clone()],
        ],
    }
}

fn diff_row(kind: ArtifactKind, diff: &KindDiff) -> Vec<String> {
    vec![
        kind.name().to_string(),
        diff.variable_total.to_string(),
        diff.constant_total.to_string(),
        diff.disappeared.to_string(),
        diff.appeared.to_string(),
        diff.attributable().to_string(),
    ]
}

fn totals_section(name: &'static str, comparison: &Comparison) -> Section {
    Section {
        name,
        headers: vec![
            "kind",
            "variable_total",
            "constant_total",
            "disappeared",
            "appeared",
            "attributable",
        ],
        rows: vec![
            diff_row(ArtifactKind::Loops, &comparison.loops),
            diff_row(ArtifactKind::Cycles, &comparison.cycles),
            diff_row(ArtifactKind::Diamonds, &comparison.diamonds),
        ],
    }
}

pub fn run_compare(args: &CompareArgs) -> Result<(), CliError> {
    let pair = load_pair(&args.variable_file, &args.constant_file)?;
    let comparison =
        compare_datasets(&pair.dataset, &pair.variable_tool, &pair.constant_tool);
    let sections = [tools_section(&pair), totals_section("compare", &comparison)];
    emit(args.output.as_deref(), &render_sections(&sections, args.format))
}

pub fn run_report(args: &ReportArgs) -> Result<(), CliError> {
    let args = &args.inputs;
    let pair = load_pair(&args.variable_file, &args.constant_file)?;
    let summary = summarize(&pair.dataset, &pair.variable_tool, &pair.constant_tool);

    // Render each kind's share column to percentages in one shot so
    // the rounded cells of a column still sum to exactly 100.00.
    let columns: Vec<Vec<String>> = summary
        .rows
        .iter()
        .map(|row| {
            let shares: Vec<_> =
                ArtifactCause::ALL.iter().map(|c| row.shares[c].clone()).collect();
            percent_cells(&shares)
        })
        .collect();
    let attribution_rows: Vec<Vec<String>> = ArtifactCause::ALL
        .iter()
        .enumerate()
        .map(|(i, cause)| {
            let mut row = vec![cause.name().to_string()];
            row.extend(columns.iter().map(|col| col[i].clone()));
            row
        })
        .collect();

    let kind_headers: Vec<&'static str> =
        summary.rows.iter().map(|r| r.kind.name()).collect();
    let mut headers = vec!["cause"];
    headers.extend(kind_headers);

    let sections = [
        tools_section(&pair),
        totals_section("totals", &summary.comparison),
        Section { name: "attribution", headers, rows: attribution_rows },
    ];
    emit(args.output.as_deref(), &render_sections(&sections, args.format))
}
