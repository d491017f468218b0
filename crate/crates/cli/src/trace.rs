//! `flowtrace trace`: probe one destination and print the route.

use std::fs::OpenOptions;
use std::io::Write;
use std::net::Ipv4Addr;
use std::path::PathBuf;

use clap::Args;
use flowtrace_core::tracestore::{HopRecord, MeasuredRoute, ProbeObservation};
use flowtrace_core::wire::{DEST_UNREACHABLE, SOURCE_QUENCH};
use flowtrace_core::{run_trace, ProbeSession, SimTransport, Simulation, TraceConfig, Transport};

use crate::common::{
    load_topology_file, resolve_destination, resolve_monitor, CliError, ModeArg, ProtoArg,
    StrategyArg,
};

#[derive(Args, Debug)]
pub struct TraceArgs {
    /// Destination: an IPv4 address, or a host name from the topology.
    pub dest: String,

    /// Trace a simulated network instead of the live one.
    #[arg(long, value_name = "TOPOLOGY")]
    pub sim: Option<PathBuf>,

    /// Host the probes originate from (default: the topology's first
    /// host with a next_hop).
    #[arg(long)]
    pub monitor: Option<String>,

    /// Header discipline: paris keeps every probe on one flow; classic
    /// varies the flow per probe the way traditional tools do.
    #[arg(long, value_enum, default_value = "paris")]
    pub mode: ModeArg,

    /// Probe protocol.
    #[arg(long, value_enum, default_value = "udp")]
    pub proto: ProtoArg,

    /// Probes per hop.
    #[arg(short, long, default_value_t = 3)]
    pub queries: u32,

    /// First TTL to probe.
    #[arg(short, long, default_value_t = 1)]
    pub first: u8,

    /// Largest TTL to probe.
    #[arg(short, long, default_value_t = 36)]
    pub max: u8,

    /// Seconds to wait for each response.
    #[arg(short, long, default_value_t = 2.0)]
    pub wait: f64,

    /// Milliseconds between consecutive probe sends.
    #[arg(long, default_value_t = 50.0)]
    pub delay: f64,

    /// Probe scheduling.
    #[arg(long, value_enum, default_value = "packet-by-packet")]
    pub strategy: StrategyArg,

    /// Consecutive unresponsive hops before giving up.
    #[arg(long, default_value_t = 8)]
    pub star_gap: u32,

    /// Seed for session identifiers (and the simulated network).
    #[arg(long, env = "FLOWTRACE_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Append the measured route to this file as JSON Lines.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl TraceArgs {
    fn config(&self) -> Result<TraceConfig, CliError> {
        let config = TraceConfig {
            probes_per_hop: self.queries,
            min_ttl: self.first,
            max_ttl: self.max,
            timeout_us: (self.wait.max(0.0) * 1_000_000.0) as u64,
            inter_probe_delay_us: (self.delay.max(0.0) * 1_000.0) as u64,
            star_gap: self.star_gap,
            strategy: self.strategy.into(),
            ..TraceConfig::default()
        };
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

pub fn run(args: &TraceArgs) -> Result<(), CliError> {
    let config = args.config()?;
    let route = match &args.sim {
        Some(topology_path) => {
            let topology = load_topology_file(topology_path)?;
            let monitor = resolve_monitor(&topology, args.monitor.as_deref())?.addr;
            let dest = resolve_destination(&topology, &args.dest)?;
            let sim = Simulation::new(&topology, args.seed)
                .map_err(|e| CliError::Topology(e.to_string()))?;
            let mut transport = SimTransport::new(sim);
            trace_one(&mut transport, args, &config, monitor, dest)?
        }
        None => live_trace(args, &config)?,
    };

    print!("{}", render_route(&route, &config));

    if let Some(path) = &args.output {
        let line = serde_json::to_string(&route)
            .map_err(|e| CliError::Transport(format!("encoding route: {e}")))?;
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| CliError::Transport(format!("writing {}: {e}", path.display())))?;
        writeln!(file, "{line}")
            .map_err(|e| CliError::Transport(format!("writing {}: {e}", path.display())))?;
    }
    Ok(())
}

fn trace_one<T: Transport + ?Sized>(
    transport: &mut T,
    args: &TraceArgs,
    config: &TraceConfig,
    monitor: Ipv4Addr,
    dest: Ipv4Addr,
) -> Result<MeasuredRoute, CliError> {
    let session =
        ProbeSession::seeded(args.mode.into(), args.proto.into(), monitor, dest, args.seed);
    Ok(run_trace(&session, config, transport)?)
}

#[cfg(feature = "live")]
fn live_trace(args: &TraceArgs, config: &TraceConfig) -> Result<MeasuredRoute, CliError> {
    let dest: Ipv4Addr = args.dest.parse().map_err(|_| {
        CliError::Usage(format!("destination {:?} must be an IPv4 address for live tracing", args.dest))
    })?;
    let mut transport = flowtrace_core::probing::LiveTransport::open(dest)
        .map_err(|e| CliError::Transport(e.to_string()))?;
    let monitor = transport.local_addr();
    trace_one(&mut transport, args, config, monitor, dest)
}

#[cfg(not(feature = "live"))]
fn live_trace(_args: &TraceArgs, _config: &TraceConfig) -> Result<MeasuredRoute, CliError> {
    Err(CliError::Usage(
        "live tracing is not compiled in (build with --features live); pass --sim <topology>"
            .into(),
    ))
}

fn render_route(route: &MeasuredRoute, config: &TraceConfig) -> String {
    let mut out = format!(
        "traceroute to {}, {} hops max, {} {} probes\n",
        route.destination,
        config.max_ttl,
        route.tool,
        protocol_name(route),
    );
    for hop in &route.hops {
        out.push_str(&hop_line(hop));
        out.push('\n');
    }
    out
}

fn protocol_name(route: &MeasuredRoute) -> &'static str {
    match route.flow.protocol {
        flowtrace_core::Protocol::Udp => "udp",
        flowtrace_core::Protocol::Tcp => "tcp",
        flowtrace_core::Protocol::Icmp => "icmp",
    }
}

/// One output line per hop: number, responder address (repeated
/// addresses print once), per-probe RTTs, and anomaly flags. A `*`
/// marks a probe nothing answered.
fn hop_line(hop: &HopRecord) -> String {
    let mut line = format!("{:>2}", hop.ttl);
    let mut shown: Option<Ipv4Addr> = None;
    for probe in &hop.probes {
        let Some(addr) = probe.addr else {
            line.push_str("  *");
            continue;
        };
        if shown != Some(addr) {
            let cell = format!("{addr:<15}");
            line.push_str("  ");
            line.push_str(&cell);
            if !cell.ends_with(' ') {
                line.push(' ');
            }
            shown = Some(addr);
        } else {
            line.push_str("  ");
        }
        match probe.rtt_us {
            Some(us) => line.push_str(&format!("{:.3} ms", us as f64 / 1000.0)),
            None => line.push_str("? ms"),
        }
        line.push_str(&probe_flags(probe));
    }
    line
}

/// Anomaly annotations: `!Tk` when the response quoted our probe with
/// a TTL other than the 1 it should have expired with (`!T0` betrays a
/// router that forwards dead packets), and unreachable markers in the
/// traditional style (`!N` network, `!H` host, `!Q` quench; the port
/// unreachable that normally ends a UDP trace is not an anomaly).
fn probe_flags(probe: &ProbeObservation) -> String {
    let mut flags = String::new();
    if let Some(ttl) = probe.probe_ttl {
        if ttl != 1 {
            flags.push_str(&format!(" !T{ttl}"));
        }
    }
    match (probe.icmp_type, probe.icmp_code) {
        (Some(DEST_UNREACHABLE), Some(0)) => flags.push_str(" !N"),
        (Some(DEST_UNREACHABLE), Some(1)) => flags.push_str(" !H"),
        (Some(DEST_UNREACHABLE), Some(3)) | (Some(DEST_UNREACHABLE), None) => {}
        (Some(DEST_UNREACHABLE), Some(code)) => flags.push_str(&format!(" !{code}")),
        (Some(SOURCE_QUENCH), _) => flags.push_str(" !Q"),
        _ => {}
    }
    flags
}
