//! Error taxonomy, output plumbing, and topology lookups shared by the
//! subcommands.

use std::fmt;
use std::io::Write;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use flowtrace_core::simnet::{HostSpec, Topology, TopologyError};
use flowtrace_core::tracestore::{Dataset, StoreError};
use flowtrace_core::probing::TraceError;
use flowtrace_core::wire::{ProbeMode, Protocol};
use flowtrace_core::Strategy;

/// Everything a subcommand can fail with, carrying its process exit
/// code. Input files that cannot be opened are usage errors; files
/// that open but do not parse get the code for their format.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Transport(String),
    Topology(String),
    Malformed { path: PathBuf, line: usize, reason: String },
    DestinationMismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Transport(_) => 2,
            CliError::Topology(_) => 3,
            CliError::Malformed { .. } => 4,
            CliError::DestinationMismatch(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Transport(msg) => write!(f, "{msg}"),
            CliError::Topology(msg) => write!(f, "{msg}"),
            CliError::Malformed { path, line, reason } => {
                write!(f, "{}:{line}: {reason}", path.display())
            }
            CliError::DestinationMismatch(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Transport(t) => CliError::Transport(t.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Classic,
    Paris,
}

impl From<ModeArg> for ProbeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Classic => ProbeMode::Classic,
            ModeArg::Paris => ProbeMode::Paris,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ProtoArg {
    Udp,
    Icmp,
    Tcp,
}

impl From<ProtoArg> for Protocol {
    fn from(p: ProtoArg) -> Self {
        match p {
            ProtoArg::Udp => Protocol::Udp,
            ProtoArg::Icmp => Protocol::Icmp,
            ProtoArg::Tcp => Protocol::Tcp,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum StrategyArg {
    PacketByPacket,
    HopByHop,
    Concurrent,
    Scout,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::PacketByPacket => Strategy::PacketByPacket,
            StrategyArg::HopByHop => Strategy::HopByHop,
            StrategyArg::Concurrent => Strategy::Concurrent,
            StrategyArg::Scout => Strategy::Scout,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum FormatArg {
    #[default]
    Text,
    Csv,
}

pub fn load_topology_file(path: &Path) -> Result<Topology, CliError> {
    match flowtrace_core::load_topology(path) {
        Ok(t) => Ok(t),
        Err(TopologyError::Io(e)) => {
            Err(CliError::Usage(format!("cannot read {}: {e}", path.display())))
        }
        Err(e) => Err(CliError::Topology(format!("{}: {e}", path.display()))),
    }
}

pub fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    match Dataset::load(path) {
        Ok(d) => Ok(d),
        Err(StoreError::Io(e)) => {
            Err(CliError::Usage(format!("cannot read {}: {e}", path.display())))
        }
        Err(StoreError::MalformedLine { line, reason }) => {
            Err(CliError::Malformed { path: path.to_path_buf(), line, reason })
        }
    }
}

/// The tool label a single-tool measurement file carries.
pub fn single_tool(dataset: &Dataset, path: &Path) -> Result<String, CliError> {
    let tools = dataset.tools();
    match tools.as_slice() {
        [one] => Ok(one.to_string()),
        [] => Err(CliError::Usage(format!("{} contains no routes", path.display()))),
        many => Err(CliError::Usage(format!(
            "{} mixes tools {:?}; comparison inputs must each hold one tool's routes",
            path.display(),
            many
        ))),
    }
}

/// Comparison and attribution only make sense when both tools measured
/// the same destinations.
pub fn check_destination_coverage(
    dataset: &Dataset,
    variable_tool: &str,
    constant_tool: &str,
) -> Result<(), CliError> {
    let variable: Vec<Ipv4Addr> = dataset.view(variable_tool).destinations().collect();
    let constant: Vec<Ipv4Addr> = dataset.view(constant_tool).destinations().collect();
    if variable == constant {
        return Ok(());
    }
    let missing_constant: Vec<String> = variable
        .iter()
        .filter(|d| !constant.contains(d))
        .take(5)
        .map(Ipv4Addr::to_string)
        .collect();
    let missing_variable: Vec<String> = constant
        .iter()
        .filter(|d| !variable.contains(d))
        .take(5)
        .map(Ipv4Addr::to_string)
        .collect();
    let mut msg = format!(
        "destination coverage differs between {variable_tool} ({} destinations) and {constant_tool} ({})",
        variable.len(),
        constant.len()
    );
    if !missing_constant.is_empty() {
        msg.push_str(&format!("; only in {variable_tool}: {}", missing_constant.join(", ")));
    }
    if !missing_variable.is_empty() {
        msg.push_str(&format!("; only in {constant_tool}: {}", missing_variable.join(", ")));
    }
    Err(CliError::DestinationMismatch(msg))
}

/// The host probes originate from: `--monitor` by name, or the first
/// host with somewhere to send traffic.
pub fn resolve_monitor<'t>(
    topology: &'t Topology,
    requested: Option<&str>,
) -> Result<&'t HostSpec, CliError> {
    match requested {
        Some(name) => {
            let host = topology.host(name).ok_or_else(|| {
                CliError::Topology(format!("monitor {name:?} is not a host in the topology"))
            })?;
            if host.next_hop.is_none() {
                return Err(CliError::Topology(format!(
                    "monitor {name:?} has no next_hop; it cannot originate probes"
                )));
            }
            Ok(host)
        }
        None => topology.hosts.iter().find(|h| h.next_hop.is_some()).ok_or_else(|| {
            CliError::Topology(
                "no host in the topology has a next_hop; nothing can originate probes".into(),
            )
        }),
    }
}

/// A destination flag value: an IPv4 literal, or the name of a host in
/// the topology.
pub fn resolve_destination(topology: &Topology, value: &str) -> Result<Ipv4Addr, CliError> {
    if let Ok(addr) = value.parse::<Ipv4Addr>() {
        return Ok(addr);
    }
    topology.host(value).map(|h| h.addr).ok_or_else(|| {
        CliError::Topology(format!(
            "destination {value:?} is neither an IPv4 address nor a host in the topology"
        ))
    })
}

/// Write a complete output file, or nothing: the bytes land in a
/// temporary file in the destination directory and are renamed over
/// the target only once fully written.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |e: &dyn fmt::Display| CliError::Transport(format!("writing {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(&e))?;
    tmp.write_all(bytes).map_err(|e| io_err(&e))?;
    tmp.flush().map_err(|e| io_err(&e))?;
    tmp.persist(path).map_err(|e| io_err(&e))?;
    Ok(())
}

/// Send a rendered report to stdout or, atomically, to a file.
pub fn emit(output: Option<&Path>, body: &str) -> Result<(), CliError> {
    match output {
        Some(path) => write_atomic(path, body.as_bytes()),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// One titled table; the `# name`-sectioned CSV form and the aligned
/// text form are rendered from the same rows.
pub struct Section {
    pub name: &'static str,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub fn render_sections(sections: &[Section], format: FormatArg) -> String {
    let mut out = String::new();
    for section in sections {
        match format {
            FormatArg::Csv => {
                out.push_str(&format!("# {}\n", section.name));
                out.push_str(&section.headers.join(","));
                out.push('\n');
                for row in &section.rows {
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
            FormatArg::Text => {
                out.push_str(section.name);
                out.push('\n');
                let mut widths: Vec<usize> =
                    section.headers.iter().map(|h| h.len()).collect();
                for row in &section.rows {
                    for (i, cell) in row.iter().enumerate() {
                        widths[i] = widths[i].max(cell.len());
                    }
                }
                let render_row = |cells: &[String]| -> String {
                    let mut line = String::from(" ");
                    for (i, cell) in cells.iter().enumerate() {
                        line.push_str("  ");
                        line.push_str(cell);
                        if i + 1 < cells.len() {
                            line.push_str(&" ".repeat(widths[i] - cell.len()));
                        }
                    }
                    line.push('\n');
                    line
                };
                let headers: Vec<String> =
                    section.headers.iter().map(|h| h.to_string()).collect();
                out.push_str(&render_row(&headers));
                for row in &section.rows {
                    out.push_str(&render_row(row));
                }
                out.push('\n');
            }
        }
    }
    out
}
