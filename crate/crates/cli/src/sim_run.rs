//! `flowtrace sim-run`: a paired measurement campaign over a simulated
//! network — every destination traced with constant-flow probing and
//! then with per-probe-varying probing, every round, deterministically.

use std::net::Ipv4Addr;
use std::path::PathBuf;

use clap::Args;
use flowtrace_core::tracestore::MeasuredRoute;
use flowtrace_core::util::mix_parts;
use flowtrace_core::wire::ProbeMode;
use flowtrace_core::{run_trace, ProbeSession, SimTransport, Simulation, TraceConfig};

use crate::common::{
    load_topology_file, resolve_destination, resolve_monitor, write_atomic, CliError, ProtoArg,
};

/// Seed discriminators so the two tools' sessions never share header
/// material even on the same round and destination.
const PARIS_SESSION: u64 = 0;
const CLASSIC_SESSION: u64 = 1;

#[derive(Args, Debug)]
pub struct SimRunArgs {
    /// Network description to run the campaign over.
    #[arg(long)]
    pub topology: PathBuf,

    /// Destinations to probe, as addresses or topology host names.
    /// Defaults to every host except the monitor.
    #[arg(long = "dest", value_name = "DEST")]
    pub dests: Vec<String>,

    /// Host the probes originate from.
    #[arg(long)]
    pub monitor: Option<String>,

    /// Measurement rounds: each traces every destination twice, paris
    /// first, then classic.
    #[arg(long)]
    pub rounds: u32,

    /// Independent probing sessions; destinations are dealt to them
    /// round-robin and each session owns its own copy of the network.
    #[arg(long, default_value_t = 32)]
    pub parallel: usize,

    #[arg(long, value_enum, default_value = "udp")]
    pub proto: ProtoArg,

    /// Largest TTL for paris sweeps. Classic sweeps derive their limit
    /// from the paris route: three past its last responding hop.
    #[arg(long, default_value_t = 36)]
    pub max_ttl: u8,

    #[arg(long, env = "FLOWTRACE_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Where the classic routes land.
    #[arg(long)]
    pub classic_out: PathBuf,

    /// Where the paris routes land.
    #[arg(long)]
    pub paris_out: PathBuf,
}

struct Shard<'a> {
    transport: SimTransport,
    dests: &'a [(usize, Ipv4Addr)],
}

pub fn run(args: &SimRunArgs) -> Result<(), CliError> {
    let topology = load_topology_file(&args.topology)?;
    let monitor = resolve_monitor(&topology, args.monitor.as_deref())?;
    let monitor_addr = monitor.addr;
    let monitor_name = monitor.name.clone();

    let dests: Vec<Ipv4Addr> = if args.dests.is_empty() {
        topology
            .hosts
            .iter()
            .filter(|h| h.name != monitor_name)
            .map(|h| h.addr)
            .collect()
    } else {
        args.dests
            .iter()
            .map(|d| resolve_destination(&topology, d))
            .collect::<Result<_, _>>()?
    };
    if dests.is_empty() {
        return Err(CliError::Usage(
            "no destinations: the topology has no host besides the monitor and none were given"
                .into(),
        ));
    }

    let base = Simulation::new(&topology, args.seed)
        .map_err(|e| CliError::Topology(e.to_string()))?;

    let shard_count = args.parallel.clamp(1, dests.len());
    let mut assignments: Vec<Vec<(usize, Ipv4Addr)>> = vec![Vec::new(); shard_count];
    for (index, dest) in dests.iter().enumerate() {
        assignments[index % shard_count].push((index, *dest));
    }
    let mut shards: Vec<Shard> = assignments
        .iter()
        .map(|dests| Shard { transport: SimTransport::new(base.clone()), dests })
        .collect();

    let outcomes: Vec<Result<Vec<(u32, usize, MeasuredRoute, MeasuredRoute)>, CliError>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = shards
                .iter_mut()
                .map(|shard| scope.spawn(move || run_shard(shard, args, monitor_addr)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("probing session panicked")).collect()
        });

    let mut measured = Vec::new();
    for outcome in outcomes {
        measured.extend(outcome?);
    }
    measured.sort_by_key(|(round, index, _, _)| (*round, *index));

    let mut paris_lines = String::new();
    let mut classic_lines = String::new();
    for (_, _, paris, classic) in &measured {
        encode(paris, &mut paris_lines)?;
        encode(classic, &mut classic_lines)?;
    }
    write_atomic(&args.paris_out, paris_lines.as_bytes())?;
    write_atomic(&args.classic_out, classic_lines.as_bytes())?;
    println!(
        "{} rounds over {} destinations: {} paris routes -> {}, {} classic routes -> {}",
        args.rounds,
        dests.len(),
        measured.len(),
        args.paris_out.display(),
        measured.len(),
        args.classic_out.display(),
    );
    Ok(())
}

fn encode(route: &MeasuredRoute, into: &mut String) -> Result<(), CliError> {
    let line = serde_json::to_string(route)
        .map_err(|e| CliError::Transport(format!("encoding route: {e}")))?;
    into.push_str(&line);
    into.push('\n');
    Ok(())
}

fn run_shard(
    shard: &mut Shard,
    args: &SimRunArgs,
    monitor: Ipv4Addr,
) -> Result<Vec<(u32, usize, MeasuredRoute, MeasuredRoute)>, CliError> {
    let mut results = Vec::with_capacity(args.rounds as usize * shard.dests.len());
    let base_config = TraceConfig {
        probes_per_hop: 1,
        max_ttl: args.max_ttl,
        ..TraceConfig::default()
    };
    base_config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    for round in 0..args.rounds {
        for &(index, dest) in shard.dests {
            let paris_session = ProbeSession::seeded(
                ProbeMode::Paris,
                args.proto.into(),
                monitor,
                dest,
                mix_parts(args.seed, &[round as u64, index as u64, PARIS_SESSION]),
            );
            let paris_config = TraceConfig { round, ..base_config };
            let paris = run_trace(&paris_session, &paris_config, &mut shard.transport)?;

            let classic_session = ProbeSession::seeded(
                ProbeMode::Classic,
                args.proto.into(),
                monitor,
                dest,
                mix_parts(args.seed, &[round as u64, index as u64, CLASSIC_SESSION]),
            );
            let classic_config = TraceConfig {
                round,
                max_ttl: classic_ttl_limit(&paris, args.max_ttl),
                ..base_config
            };
            let classic = run_trace(&classic_session, &classic_config, &mut shard.transport)?;
            results.push((round, index, paris, classic));
        }
    }
    Ok(results)
}

/// The classic sweep stops three hops past the last hop the paris
/// sweep got an answer from, or at the configured limit when nothing
/// answered at all.
fn classic_ttl_limit(paris: &MeasuredRoute, fallback: u8) -> u8 {
    paris
        .hops
        .iter()
        .filter(|h| !h.is_star())
        .map(|h| h.ttl)
        .max()
        .map(|last| last.saturating_add(3))
        .unwrap_or(fallback)
}
