//! `flowtrace analyze`: detect route structures in a measurement file
//! and report signatures, sizes, and summary fractions.

use std::collections::BTreeSet;
use std::net::Ipv4Addr;
use std::path::PathBuf;

use clap::Args;
use flowtrace_core::structures::{
    find_cycles, find_diamonds, find_loops, sequences_for, CycleFinding, DiamondFinding,
    LoopFinding, SeqRoute,
};
use flowtrace_core::tracestore::RouteView;

use crate::common::{emit, load_dataset, render_sections, CliError, FormatArg, Section};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum KindArg {
    Loops,
    Cycles,
    Diamonds,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Measurement file (JSON Lines of measured routes).
    pub file: PathBuf,

    /// Structure kinds to report.
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = [KindArg::Loops, KindArg::Cycles, KindArg::Diamonds])]
    pub kinds: Vec<KindArg>,

    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,

    /// Write the report here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Everything analyze reports about one tool's routes, gathered in one
/// pass so the sections and the summary agree with each other.
struct ToolStructures {
    tool: String,
    destinations: usize,
    total_routes: usize,
    /// Per destination: its sequences, kept for frequency counting.
    groups: Vec<(Ipv4Addr, Vec<SeqRoute>)>,
    loops: Vec<LoopFinding>,
    cycles: Vec<CycleFinding>,
    diamonds: Vec<DiamondFinding>,
}

impl ToolStructures {
    fn collect(tool: &str, view: &RouteView<'_>) -> Self {
        let groups: Vec<(Ipv4Addr, Vec<SeqRoute>)> = view
            .iter()
            .map(|(destination, routes)| (destination, sequences_for(routes)))
            .collect();
        let mut loops = Vec::new();
        let mut cycles = Vec::new();
        for (destination, seqs) in &groups {
            loops.extend(find_loops(*destination, seqs));
            cycles.extend(find_cycles(*destination, seqs));
        }
        ToolStructures {
            tool: tool.to_string(),
            destinations: view.len(),
            total_routes: view.total_routes(),
            diamonds: find_diamonds(&groups),
            groups,
            loops,
            cycles,
        }
    }

    fn routes_containing(&self, destination: Ipv4Addr, addr: Ipv4Addr) -> usize {
        self.groups
            .iter()
            .find(|(d, _)| *d == destination)
            .map(|(_, seqs)| {
                seqs.iter().filter(|s| s.seq.contains(&Some(addr))).count()
            })
            .unwrap_or(0)
    }

    /// Distinct addresses observed anywhere in this tool's sequences.
    fn address_universe(&self) -> BTreeSet<Ipv4Addr> {
        self.groups
            .iter()
            .flat_map(|(_, seqs)| seqs.iter())
            .flat_map(|s| s.seq.iter().flatten().copied())
            .collect()
    }
}

pub fn run(args: &AnalyzeArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.file)?;
    let kinds: BTreeSet<KindArg> = args.kinds.iter().copied().collect();

    let tools: Vec<String> = dataset.tools().iter().map(|t| t.to_string()).collect();
    let per_tool: Vec<ToolStructures> = tools
        .iter()
        .map(|tool| ToolStructures::collect(tool, &dataset.view(tool)))
        .collect();

    let mut sections = Vec::new();
    if kinds.contains(&KindArg::Loops) {
        sections.push(loops_section(&per_tool));
    }
    if kinds.contains(&KindArg::Cycles) {
        sections.push(cycles_section(&per_tool));
    }
    if kinds.contains(&KindArg::Diamonds) {
        sections.push(diamonds_section(&per_tool));
    }
    sections.push(summary_section(&per_tool, &kinds));

    emit(args.output.as_deref(), &render_sections(&sections, args.format))
}

fn fraction(numerator: usize, denominator: usize) -> String {
    if denominator == 0 {
        "0.0000".to_string()
    } else {
        format!("{:.4}", numerator as f64 / denominator as f64)
    }
}

fn loops_section(per_tool: &[ToolStructures]) -> Section {
    let mut rows = Vec::new();
    for t in per_tool {
        for f in &t.loops {
            rows.push(vec![
                t.tool.clone(),
                f.destination.to_string(),
                f.addr.to_string(),
                f.class.name().to_string(),
                f.instances.len().to_string(),
                f.max_order.to_string(),
                f.routes_with_loop.to_string(),
                f.routes_to_destination.to_string(),
                f.routes_containing_addr.to_string(),
                fraction(f.routes_with_loop, f.routes_to_destination),
                fraction(f.routes_with_loop, f.routes_containing_addr),
            ]);
        }
    }
    Section {
        name: "loops",
        headers: vec![
            "tool",
            "destination",
            "addr",
            "class",
            "instances",
            "max_order",
            "routes_with_loop",
            "routes_to_destination",
            "routes_containing_addr",
            "appearance",
            "conditional",
        ],
        rows,
    }
}

fn cycles_section(per_tool: &[ToolStructures]) -> Section {
    let mut rows = Vec::new();
    for t in per_tool {
        for f in &t.cycles {
            let routes_with_cycle: BTreeSet<usize> =
                f.instances.iter().map(|i| i.route_index).collect();
            let routes_to_destination = t
                .groups
                .iter()
                .find(|(d, _)| *d == f.destination)
                .map(|(_, seqs)| seqs.len())
                .unwrap_or(0);
            let containing = t.routes_containing(f.destination, f.addr);
            rows.push(vec![
                t.tool.clone(),
                f.destination.to_string(),
                f.addr.to_string(),
                f.length.to_string(),
                f.span.to_string(),
                f.instances.len().to_string(),
                routes_with_cycle.len().to_string(),
                routes_to_destination.to_string(),
                fraction(routes_with_cycle.len(), routes_to_destination),
                fraction(routes_with_cycle.len(), containing),
            ]);
        }
    }
    Section {
        name: "cycles",
        headers: vec![
            "tool",
            "destination",
            "addr",
            "length",
            "span",
            "instances",
            "routes_with_cycle",
            "routes_to_destination",
            "appearance",
            "conditional",
        ],
        rows,
    }
}

fn diamonds_section(per_tool: &[ToolStructures]) -> Section {
    let mut rows = Vec::new();
    for t in per_tool {
        for f in &t.diamonds {
            rows.push(vec![
                t.tool.clone(),
                f.head.to_string(),
                f.tail.to_string(),
                f.middles_by_destination.len().to_string(),
                f.one_destination_size().map_or_else(|| "-".to_string(), |s| s.to_string()),
                f.global_size().to_string(),
                f.global_only().to_string(),
            ]);
        }
    }
    Section {
        name: "diamonds",
        headers: vec![
            "tool",
            "head",
            "tail",
            "destinations",
            "one_destination_size",
            "global_size",
            "global_only",
        ],
        rows,
    }
}

fn summary_section(per_tool: &[ToolStructures], kinds: &BTreeSet<KindArg>) -> Section {
    let mut rows = Vec::new();
    for t in per_tool {
        let mut push = |metric: &str, value: String| {
            rows.push(vec![t.tool.clone(), metric.to_string(), value]);
        };
        push("routes", t.total_routes.to_string());
        push("destinations", t.destinations.to_string());
        let universe = t.address_universe();
        push("addresses", universe.len().to_string());
        if kinds.contains(&KindArg::Loops) {
            let looped: BTreeSet<(Ipv4Addr, usize)> = t
                .loops
                .iter()
                .flat_map(|f| f.instances.iter().map(|i| (f.destination, i.route_index)))
                .collect();
            push("routes_with_loop_fraction", fraction(looped.len(), t.total_routes));
        }
        if kinds.contains(&KindArg::Cycles) {
            let cyclic: BTreeSet<(Ipv4Addr, usize)> = t
                .cycles
                .iter()
                .flat_map(|f| f.instances.iter().map(|i| (f.destination, i.route_index)))
                .collect();
            push("routes_with_cycle_fraction", fraction(cyclic.len(), t.total_routes));
        }
        if kinds.contains(&KindArg::Diamonds) {
            let heads: BTreeSet<Ipv4Addr> = t.diamonds.iter().map(|f| f.head).collect();
            let tails: BTreeSet<Ipv4Addr> = t.diamonds.iter().map(|f| f.tail).collect();
            let middles: BTreeSet<Ipv4Addr> =
                t.diamonds.iter().flat_map(|f| f.global_middles.iter().copied()).collect();
            push("diamond_head_address_fraction", fraction(heads.len(), universe.len()));
            push("diamond_middle_address_fraction", fraction(middles.len(), universe.len()));
            push("diamond_tail_address_fraction", fraction(tails.len(), universe.len()));
        }
    }
    Section { name: "summary", headers: vec!["tool", "metric", "value"], rows }
}
