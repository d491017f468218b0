//! Release checks: every guarantee the workspace advertises, exercised
//! end to end at fixed tolerances against the simulator. One test per
//! check, in order:
//!
//!  1. Constant-flow sessions keep one flow key across probes; classic
//!     sessions walk the UDP destination port from 33435 exactly.
//!  2. Crafted packets verify against an independent one's-complement
//!     summer, and the steered identifier fields land where intended.
//!  3. A two-way per-flow balancer makes per-probe flows straddle its
//!     branches at the predicted rate, inventing cross-branch links;
//!     constant flows never straddle.
//!  4. Unequal-length paths behind a balancer loop on the merge router
//!     under per-probe flows only, and the two-tool comparison
//!     attributes the loop to flow balancing.
//!  5. Zero-TTL forwarding prints the `!T0` duplicate-hop shape and
//!     explains every loop instance it creates.
//!  6. An address-borrowing gateway produces a persistent order-2 loop
//!     with strictly aging response TTLs, classified as fake; the same
//!     chain without borrowing shows nothing of the sort.
//!  7. A transient forwarding detour shows up as a period-2 run with
//!     even separations, is confirmed by IP-ID counters, and is gone
//!     once routing heals; zeroed counters leave the verdict open.
//!  8. Loops and cycles cut short by unreachable responses classify as
//!     interrupted, never as fake or zero-TTL.
//!  9. The structure detectors agree exactly with brute-force
//!     reference implementations over random route sets.
//! 10. Worked route sets yield the exact loop, cycle, and diamond
//!     findings they were built to contain.
//! 11. The probability helpers match exhaustive enumeration.
//! 12. Fixed-seed campaigns and the reports over them are
//!     byte-identical across runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use flowtrace_core::artifacts::{
    classify_cycle_interrupted, classify_fake, classify_interrupted, classify_zero_ttl,
    compare_datasets, cycle_cause, fake_instances, interrupted_cycle_instances,
    interrupted_instances, loop_cause, summarize, verify_routing_cycle, zero_ttl_instances,
    ArtifactCause, ArtifactKind, CounterVerdict,
};
use flowtrace_core::probing::{run_trace, TraceConfig};
use flowtrace_core::simnet::{SimTransport, Simulation, Topology};
use flowtrace_core::structures::{
    dominant_periodic_run, find_cycles, find_diamonds, find_loops, find_periodic_runs,
    identical_path_probability, missing_router_probability, sequences_for, CycleFinding,
    CycleInstance, DiamondFinding, LoopClass, LoopFinding, LoopInstance, PeriodicRun, SeqRoute,
};
use flowtrace_core::tracestore::{Dataset, MeasuredRoute, StopReason};
use flowtrace_core::wire::{
    extract_flow_key, ProbeMode, ProbeSession, Protocol, TransportPart, CLASSIC_BASE_PORT,
};
use num::{BigInt, BigRational, One};

const MON: Ipv4Addr = Ipv4Addr::new(192, 0, 2, 1);
const SERVER: Ipv4Addr = Ipv4Addr::new(198, 51, 100, 7);
const SPLIT_SERVER: Ipv4Addr = Ipv4Addr::new(198, 51, 100, 9);

fn ip(s: &str) -> Ipv4Addr {
    s.parse().expect("literal address")
}

/// Run `f` and fail if it overruns its time budget.
fn within(budget: Duration, label: &str, f: impl FnOnce()) {
    let started = Instant::now();
    f();
    let took = started.elapsed();
    assert!(took <= budget, "{label}: took {took:?}, budget {budget:?}");
}

/// Splitmix-style generator so the randomized checks replay exactly.
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flowtrace"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

fn exit(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, contents).expect("fixture written");
    path
}

/// Five hops to the server, with a two-way per-flow fork at hop 5,
/// three-hop branches (hops 6-8), and a join whose per-neighbor
/// ingress addresses reveal at hop 9 which branch a probe took. Every
/// probe with TTL 6 through 9 crosses the balancer and betrays its
/// branch, so under per-probe flows the four answers agree only when
/// four independent draws coincide.
const SPLIT_TOPOLOGY: &str = r#"{
  "name": "interface-revealing split",
  "hosts": [
    {"name": "monitor", "addr": "192.0.2.1", "next_hop": "r1"},
    {"name": "server", "addr": "198.51.100.9"}
  ],
  "routers": [
    {"name": "r1", "addr": "10.0.1.1", "next_hops": {"default": ["r2"]}},
    {"name": "r2", "addr": "10.0.2.1", "next_hops": {"default": ["r3"]}},
    {"name": "r3", "addr": "10.0.3.1", "next_hops": {"default": ["r4"]}},
    {"name": "r4", "addr": "10.0.4.1", "next_hops": {"default": ["fork"]}},
    {"name": "fork", "addr": "10.0.5.1", "balancer": {"kind": "per_flow"}, "next_hops": {"default": ["a6", "b6"]}},
    {"name": "a6", "addr": "10.1.6.1", "next_hops": {"default": ["a7"]}},
    {"name": "a7", "addr": "10.1.7.1", "next_hops": {"default": ["a8"]}},
    {"name": "a8", "addr": "10.1.8.1", "next_hops": {"default": ["join"]}},
    {"name": "b6", "addr": "10.2.6.1", "next_hops": {"default": ["b7"]}},
    {"name": "b7", "addr": "10.2.7.1", "next_hops": {"default": ["b8"]}},
    {"name": "b8", "addr": "10.2.8.1", "next_hops": {"default": ["join"]}},
    {"name": "join", "addr": "10.0.9.1", "ingress": {"a8": "10.3.9.1", "b8": "10.4.9.1"}, "next_hops": {"default": ["server"]}}
  ]
}"#;

/// Which branch of the split an answer at hops 6-9 came from: the A
/// branch uses 10.1.x.x (and the join's 10.3.9.1 ingress), the B
/// branch 10.2.x.x (and 10.4.9.1).
fn branch(addr: Ipv4Addr) -> u8 {
    match addr.octets()[1] {
        1 | 3 => 0,
        2 | 4 => 1,
        other => panic!("address {addr} is on neither branch (second octet {other})"),
    }
}

const UNEVEN_MERGE_TOPOLOGY: &str = r#"{
  "name": "uneven split-merge",
  "hosts": [
    {"name": "monitor", "addr": "192.0.2.1", "next_hop": "r1"},
    {"name": "server", "addr": "198.51.100.7"}
  ],
  "routers": [
    {"name": "r1", "addr": "10.0.1.1", "next_hops": {"default": ["fork"]}},
    {"name": "fork", "addr": "10.0.2.1", "balancer": {"kind": "per_flow"}, "next_hops": {"default": ["short", "long1"]}},
    {"name": "short", "addr": "10.0.3.1", "next_hops": {"default": ["merge"]}},
    {"name": "long1", "addr": "10.0.4.1", "next_hops": {"default": ["long2"]}},
    {"name": "long2", "addr": "10.0.4.2", "next_hops": {"default": ["merge"]}},
    {"name": "merge", "addr": "10.0.5.1", "next_hops": {"default": ["server"]}}
  ]
}"#;

const BUGGY_TOPOLOGY: &str = r#"{
  "name": "zero-ttl forwarder",
  "hosts": [
    {"name": "monitor", "addr": "192.0.2.1", "next_hop": "r1"},
    {"name": "server", "addr": "198.51.100.7"}
  ],
  "routers": [
    {"name": "r1", "addr": "10.0.1.1", "next_hops": {"default": ["r2"]}},
    {"name": "r2", "addr": "10.0.2.1", "buggy_zero_ttl": true, "next_hops": {"default": ["r3"]}},
    {"name": "r3", "addr": "10.0.3.1", "next_hops": {"default": ["r4"]}},
    {"name": "r4", "addr": "10.0.4.1", "next_hops": {"default": ["server"]}}
  ]
}"#;

const UNREACHABLE_CHAIN_TOPOLOGY: &str = r#"{
  "name": "flaky unreachable chain",
  "hosts": [
    {"name": "monitor", "addr": "192.0.2.1", "next_hop": "r1"},
    {"name": "server", "addr": "198.51.100.7"}
  ],
  "routers": [
    {"name": "r1", "addr": "10.0.1.1", "next_hops": {"default": ["r2"]}},
    {"name": "r2", "addr": "10.0.2.1", "next_hops": {"default": ["flaky"]}},
    {"name": "flaky", "addr": "10.0.3.1", "unreachable": {"probability": 0.2, "code": 1}, "next_hops": {"default": ["r4"]}},
    {"name": "r4", "addr": "10.0.4.1", "next_hops": {"default": ["r5"]}},
    {"name": "r5", "addr": "10.0.5.1", "next_hops": {"default": ["server"]}}
  ]
}"#;

/// Three routers in a row that (optionally) all answer with one
/// borrowed address, imitating a gateway hiding the segment behind it.
fn borrowed_address_topology(masquerade: bool) -> String {
    let masq = if masquerade { r#""masquerade_as": "10.0.9.9", "# } else { "" };
    format!(
        r#"{{
  "name": "borrowed-address segment",
  "hosts": [
    {{"name": "monitor", "addr": "192.0.2.1", "next_hop": "r1"}},
    {{"name": "server", "addr": "198.51.100.7"}}
  ],
  "routers": [
    {{"name": "r1", "addr": "10.0.1.1", "next_hops": {{"default": ["x1"]}}}},
    {{"name": "x1", "addr": "10.0.2.1", {masq}"next_hops": {{"default": ["x2"]}}}},
    {{"name": "x2", "addr": "10.0.2.2", {masq}"next_hops": {{"default": ["x3"]}}}},
    {{"name": "x3", "addr": "10.0.2.3", {masq}"next_hops": {{"default": ["server"]}}}}
  ]
}}"#
    )
}

/// A three-router line where r2 detours everything back to r1 for
/// packets 4 through 43: round 0 is clean, rounds 1-3 bounce between
/// r1 and r2 all the way to the TTL ceiling, round 4 starts bounced
/// and ends clean, later rounds are healthy again.
fn transient_detour_topology(ip_id: &str) -> String {
    format!(
        r#"{{
  "name": "transient detour",
  "hosts": [
    {{"name": "monitor", "addr": "192.0.2.1", "next_hop": "r1"}},
    {{"name": "server", "addr": "198.51.100.7"}}
  ],
  "routers": [
    {{"name": "r1", "addr": "10.0.1.1", "ip_id": "{ip_id}", "next_hops": {{"default": ["r2"]}}}},
    {{"name": "r2", "addr": "10.0.2.1", "ip_id": "{ip_id}", "next_hops": {{"default": ["r3"]}}}},
    {{"name": "r3", "addr": "10.0.3.1", "ip_id": "{ip_id}", "next_hops": {{"default": ["server"]}}}}
  ],
  "schedules": [
    {{"router": "r2", "at_packet": 4, "until_packet": 44, "next_hops": ["r1"]}}
  ]
}}"#
    )
}

/// A measurement campaign over one simulated topology: `rounds` traces
/// with one probe per hop, each round under a fresh session seeded
/// `session_base + round`, all sharing one simulation (so packet
/// counters and clocks carry across rounds, as they would on a real
/// monitor).
fn run_rounds(
    topology: &str,
    sim_seed: u64,
    mode: ProbeMode,
    dest: Ipv4Addr,
    rounds: u32,
    session_base: u64,
) -> Vec<MeasuredRoute> {
    let topo = Topology::parse(topology).expect("topology parses");
    let sim = Simulation::new(&topo, sim_seed).expect("simulation builds");
    let mut transport = SimTransport::new(sim);
    (0..rounds)
        .map(|r| {
            let cfg = TraceConfig {
                probes_per_hop: 1,
                max_ttl: 12,
                round: r,
                ..TraceConfig::default()
            };
            let session =
                ProbeSession::seeded(mode, Protocol::Udp, MON, dest, session_base + r as u64);
            run_trace(&session, &cfg, &mut transport).expect("trace completes")
        })
        .collect()
}

#[test]
fn a01_constant_flow_sessions_share_one_key_and_classic_ports_walk() {
    within(Duration::from_secs(5), "flow constancy", || {
        let mut rng = Rng(0x01);
        for _ in 0..1000 {
            let src = Ipv4Addr::from(rng.next() as u32);
            let dst = Ipv4Addr::from(rng.next() as u32);
            let seed = rng.next();

            let mut session =
                ProbeSession::seeded(ProbeMode::Paris, Protocol::Udp, src, dst, seed);
            session.tos = rng.next() as u8;
            session.udp_payload_len = 2 + rng.below(8) as u16;
            let mut keys = BTreeSet::new();
            for i in 0..10u32 {
                let pkt = session.craft(i, (i + 1) as u8).unwrap();
                keys.insert(pkt.flow);
                keys.insert(extract_flow_key(&pkt.octets).unwrap());
            }
            assert_eq!(keys.len(), 1, "session seed {seed} varied its flow key");

            let classic =
                ProbeSession::seeded(ProbeMode::Classic, Protocol::Udp, src, dst, seed);
            let mut src_ports = BTreeSet::new();
            for i in 0..10u32 {
                let pkt = classic.craft(i, (i + 1) as u8).unwrap();
                match extract_flow_key(&pkt.octets).unwrap().transport {
                    TransportPart::Ports { src_port, dst_port } => {
                        assert_eq!(dst_port, CLASSIC_BASE_PORT + i as u16);
                        src_ports.insert(src_port);
                    }
                    other => panic!("udp probe parsed as {other:?}"),
                }
            }
            assert_eq!(src_ports.len(), 1, "classic source port moved within a session");
            assert!(src_ports.contains(&(32768 + classic.session_id)));
        }

        // The other constant-flow protocols hold their key too.
        for proto in [Protocol::Icmp, Protocol::Tcp] {
            for _ in 0..200 {
                let session = ProbeSession::seeded(
                    ProbeMode::Paris,
                    proto,
                    Ipv4Addr::from(rng.next() as u32),
                    Ipv4Addr::from(rng.next() as u32),
                    rng.next(),
                );
                let mut keys = BTreeSet::new();
                for i in 0..10u32 {
                    let pkt = session.craft(i, (i % 30 + 1) as u8).unwrap();
                    keys.insert(pkt.flow);
                    keys.insert(extract_flow_key(&pkt.octets).unwrap());
                }
                assert_eq!(keys.len(), 1, "{proto:?} session varied its flow key");
            }
        }
    });
}

/// One's-complement sum over concatenated chunks, written from the
/// textbook recipe rather than the library: big-endian byte pairs into
/// a wide accumulator, odd tail zero-padded, carries folded at the
/// end. Any span whose embedded checksum is sound folds to 0xFFFF.
fn reference_fold(chunks: &[&[u8]]) -> u16 {
    let mut total: u64 = 0;
    let mut pending: Option<u8> = None;
    for chunk in chunks {
        for &byte in *chunk {
            match pending.take() {
                None => pending = Some(byte),
                Some(high) => total += u64::from(u16::from_be_bytes([high, byte])),
            }
        }
    }
    if let Some(high) = pending {
        total += u64::from(u16::from_be_bytes([high, 0]));
    }
    while total >> 16 != 0 {
        total = (total & 0xFFFF) + (total >> 16);
    }
    total as u16
}

fn pseudo_header(pkt: &[u8], protocol: u8) -> [u8; 12] {
    let mut v = [0u8; 12];
    v[..8].copy_from_slice(&pkt[12..20]);
    v[9] = protocol;
    let len = (pkt.len() - 20) as u16;
    v[10..12].copy_from_slice(&len.to_be_bytes());
    v
}

#[test]
fn a02_checksums_verify_against_an_independent_summer() {
    within(Duration::from_secs(10), "checksum soundness", || {
        let mut rng = Rng(0x02);
        let combos = [
            (ProbeMode::Classic, Protocol::Udp),
            (ProbeMode::Paris, Protocol::Udp),
            (ProbeMode::Classic, Protocol::Icmp),
            (ProbeMode::Paris, Protocol::Icmp),
            (ProbeMode::Paris, Protocol::Tcp),
        ];
        for case in 0..10_000usize {
            let (mode, proto) = combos[case % combos.len()];
            let mut session = ProbeSession::seeded(
                mode,
                proto,
                Ipv4Addr::from(rng.next() as u32),
                Ipv4Addr::from(rng.next() as u32),
                rng.next(),
            );
            session.tos = rng.next() as u8;
            if proto == Protocol::Udp {
                session.udp_payload_len = match mode {
                    ProbeMode::Paris => 2 + rng.below(8) as u16,
                    ProbeMode::Classic => rng.below(10) as u16,
                };
            }
            let probe_index = rng.below(1000) as u32;
            let ttl = (1 + rng.below(64)) as u8;
            let pkt = session.craft(probe_index, ttl).unwrap();

            assert_eq!(reference_fold(&[&pkt.octets[..20]]), 0xFFFF, "IP header");
            let segment = &pkt.octets[20..];
            match proto {
                Protocol::Udp => {
                    assert_eq!(
                        reference_fold(&[&pseudo_header(&pkt.octets, 17), segment]),
                        0xFFFF,
                        "udp checksum, case {case}"
                    );
                    if mode == ProbeMode::Paris {
                        let wire = u16::from_be_bytes([pkt.octets[26], pkt.octets[27]]);
                        assert_eq!(wire, pkt.probe_id);
                        assert_eq!(wire as u32, probe_index + 1);
                    }
                }
                Protocol::Icmp => {
                    assert_eq!(reference_fold(&[segment]), 0xFFFF, "icmp checksum, case {case}");
                }
                Protocol::Tcp => {
                    assert_eq!(
                        reference_fold(&[&pseudo_header(&pkt.octets, 6), segment]),
                        0xFFFF,
                        "tcp checksum, case {case}"
                    );
                }
            }
        }

        // Constant-flow ICMP pins its checksum for the whole session.
        for _ in 0..200 {
            let session = ProbeSession::seeded(
                ProbeMode::Paris,
                Protocol::Icmp,
                Ipv4Addr::from(rng.next() as u32),
                Ipv4Addr::from(rng.next() as u32),
                rng.next(),
            );
            let expected = session.icmp_constant_checksum();
            for i in 0..6u32 {
                let pkt = session.craft(i, (1 + rng.below(30)) as u8).unwrap();
                assert_eq!(u16::from_be_bytes([pkt.octets[22], pkt.octets[23]]), expected);
            }
        }

        // The one crafting combination without a safe identifier slot
        // is refused rather than silently varying the flow.
        let tcp_classic =
            ProbeSession::seeded(ProbeMode::Classic, Protocol::Tcp, MON, SERVER, 1);
        let err = tcp_classic.craft(0, 5).unwrap_err();
        assert!(err.to_string().contains("paris-only"), "got: {err}");
    });
}

#[test]
fn a03_split_paths_fake_links_under_classic_probing_but_not_paris() {
    within(Duration::from_secs(30), "false links", || {
        // Branch occupancy of hops 6-9 for every round of each tool.
        let sides = |mode: ProbeMode, base: u64| -> Vec<[u8; 4]> {
            run_rounds(SPLIT_TOPOLOGY, 7, mode, SPLIT_SERVER, 2000, base)
                .iter()
                .map(|route| {
                    assert_eq!(route.stop_reason, StopReason::Destination);
                    [6u8, 7, 8, 9].map(|t| branch(route.addr_at(t).expect("hop answered")))
                })
                .collect()
        };
        let classic = sides(ProbeMode::Classic, 0);
        let paris = sides(ProbeMode::Paris, 1_000_000);

        // Four independent per-probe draws agree with probability
        // 2/2^4 = 0.125; the observed rate must sit within ±0.03.
        let consistent =
            classic.iter().filter(|s| s.iter().all(|&side| side == s[0])).count();
        let fraction = consistent as f64 / classic.len() as f64;
        assert!(
            (0.095..=0.155).contains(&fraction),
            "consistent-branch fraction {fraction} outside 0.125 ± 0.03"
        );

        // Adjacent hops from different branches are links no packet
        // ever took. Per-probe flows manufacture them; constant flows
        // must not.
        let cross_links = |rounds: &[[u8; 4]]| -> usize {
            rounds.iter().map(|s| s.windows(2).filter(|w| w[0] != w[1]).count()).sum()
        };
        assert!(cross_links(&classic) >= 1, "no false adjacency in 2000 classic rounds");
        assert_eq!(cross_links(&paris), 0, "constant-flow rounds straddled the fork");
        assert!(paris.iter().all(|s| s.iter().all(|&side| side == s[0])));
    });
}

#[test]
fn a04_uneven_merge_loops_only_under_classic_and_attribute_to_flow_balancing() {
    within(Duration::from_secs(30), "merge loop attribution", || {
        let mut routes = run_rounds(UNEVEN_MERGE_TOPOLOGY, 11, ProbeMode::Classic, SERVER, 1000, 0);
        routes.extend(run_rounds(
            UNEVEN_MERGE_TOPOLOGY,
            11,
            ProbeMode::Paris,
            SERVER,
            1000,
            1_000_000,
        ));
        let dataset = Dataset::from_routes(routes);
        let merge = ip("10.0.5.1");

        let classic_view = dataset.view("classic");
        let classic_loops = find_loops(SERVER, &sequences_for(classic_view.routes_to(SERVER)));
        assert_eq!(classic_loops.len(), 1, "expected exactly the merge-router loop");
        let finding = &classic_loops[0];
        assert_eq!(finding.addr, merge);
        assert!(finding.routes_with_loop > 0);
        assert!(!finding.instances.is_empty());

        let paris_view = dataset.view("paris");
        let paris_loops = find_loops(SERVER, &sequences_for(paris_view.routes_to(SERVER)));
        assert!(paris_loops.is_empty(), "constant-flow rounds looped: {paris_loops:?}");

        let comparison = compare_datasets(&dataset, "classic", "paris");
        assert_eq!(comparison.loops.variable_total, 1);
        assert_eq!(comparison.loops.constant_total, 0);
        assert_eq!(comparison.loops.disappeared, 1);
        assert_eq!(comparison.loops.appeared, 0);
        assert_eq!(comparison.loops.attributable(), 1);

        let summary = summarize(&dataset, "classic", "paris");
        let row = summary.rows.iter().find(|r| r.kind == ArtifactKind::Loops).unwrap();
        let whole = BigRational::one();
        assert_eq!(row.share(ArtifactCause::PerFlow), Some(&whole));
    });
}

#[test]
fn a05_zero_ttl_forwarding_prints_t0_and_explains_every_loop() {
    within(Duration::from_secs(5), "zero-ttl forwarding", || {
        // The interactive view: duplicate hop flagged on its first
        // appearance, where the quoted probe TTL was zero.
        let dir = tempfile::tempdir().unwrap();
        let topo = write(dir.path(), "buggy.json", BUGGY_TOPOLOGY);
        let out = run(&["trace", "server", "--sim", topo.to_str().unwrap(), "-q", "1"]);
        assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
        let text = stdout(&out);
        let hops: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(hops[0], " 1  10.0.1.1       1.000 ms");
        assert_eq!(hops[1], " 2  10.0.3.1       3.000 ms !T0");
        assert_eq!(hops[2], " 3  10.0.3.1       3.000 ms");
        assert_eq!(hops[3], " 4  10.0.4.1       4.000 ms");
        assert!(hops[4].contains("198.51.100.7"), "destination line missing: {:?}", hops);

        // The campaign view: the loop exists in every round and the
        // quoted-TTL evidence explains all of it; no other cause fits.
        let routes = run_rounds(BUGGY_TOPOLOGY, 3, ProbeMode::Classic, SERVER, 40, 0);
        let expected = vec![
            Some(ip("10.0.1.1")),
            Some(ip("10.0.3.1")),
            Some(ip("10.0.3.1")),
            Some(ip("10.0.4.1")),
            Some(SERVER),
        ];
        for route in &routes {
            assert_eq!(route.hop_addrs(), expected);
        }
        let dataset = Dataset::from_routes(routes);
        let view = dataset.view("classic");
        let group = view.routes_to(SERVER);
        let loops = find_loops(SERVER, &sequences_for(group));
        assert_eq!(loops.len(), 1);
        let finding = &loops[0];
        assert_eq!(finding.addr, ip("10.0.3.1"));
        assert_eq!(finding.instances.len(), 40);
        assert_eq!(zero_ttl_instances(finding, group), (40, 40));
        assert!(classify_zero_ttl(finding, group));
        assert!(!classify_interrupted(finding, group));
        assert!(!classify_fake(finding, group));
        assert_eq!(loop_cause(finding, group), ArtifactCause::ZeroTtl);
    });
}

#[test]
fn a06_borrowed_addresses_make_a_persistent_fake_loop_with_aging_ttls() {
    within(Duration::from_secs(5), "fake loop", || {
        let borrowed = ip("10.0.9.9");
        let routes =
            run_rounds(&borrowed_address_topology(true), 5, ProbeMode::Paris, SERVER, 30, 0);
        let expected = vec![
            Some(ip("10.0.1.1")),
            Some(borrowed),
            Some(borrowed),
            Some(borrowed),
            Some(SERVER),
        ];
        for route in &routes {
            assert_eq!(route.hop_addrs(), expected);
        }
        // The "one router" sits at three distances, so its responses
        // arrive with strictly decreasing TTLs — the impostor tell.
        let ttls: Vec<_> = (1..4).map(|h| routes[0].hops[h].probes[0].response_ttl).collect();
        assert_eq!(ttls, vec![Some(254), Some(253), Some(252)]);

        let dataset = Dataset::from_routes(routes);
        let view = dataset.view("paris");
        let group = view.routes_to(SERVER);
        let loops = find_loops(SERVER, &sequences_for(group));
        assert_eq!(loops.len(), 1);
        let finding = &loops[0];
        assert_eq!(finding.addr, borrowed);
        assert_eq!(finding.max_order, 2);
        assert_eq!(finding.class, LoopClass::Persistent);
        assert_eq!(finding.instances.len(), 30);
        assert!(finding.instances.iter().all(|i| i.start == 2 && i.order == 2));
        assert_eq!(fake_instances(finding, group), (30, 30, 30));
        assert!(classify_fake(finding, group));
        assert_eq!(loop_cause(finding, group), ArtifactCause::Fake);

        // Without the borrowing there is no loop at all.
        let plain =
            run_rounds(&borrowed_address_topology(false), 5, ProbeMode::Paris, SERVER, 30, 0);
        let plain_ds = Dataset::from_routes(plain);
        let plain_view = plain_ds.view("paris");
        let plain_group = plain_view.routes_to(SERVER);
        assert!(find_loops(SERVER, &sequences_for(plain_group)).is_empty());

        // And a loop whose response TTLs do not age (the zero-TTL
        // chain: both answers come from the same distance) is not a
        // fake, so the signature really is doing the discriminating.
        let buggy = run_rounds(BUGGY_TOPOLOGY, 5, ProbeMode::Paris, SERVER, 10, 0);
        let buggy_ds = Dataset::from_routes(buggy);
        let buggy_view = buggy_ds.view("paris");
        let buggy_group = buggy_view.routes_to(SERVER);
        let buggy_loops = find_loops(SERVER, &sequences_for(buggy_group));
        assert_eq!(buggy_loops.len(), 1);
        assert_eq!(fake_instances(&buggy_loops[0], buggy_group), (0, 10, 10));
        assert!(!classify_fake(&buggy_loops[0], buggy_group));
    });
}

#[test]
fn a07_transient_detour_is_periodic_counter_confirmed_and_heals() {
    within(Duration::from_secs(10), "routing cycle", || {
        let r1 = ip("10.0.1.1");
        let r2 = ip("10.0.2.1");
        let r3 = ip("10.0.3.1");
        let routes =
            run_rounds(&transient_detour_topology("counter"), 9, ProbeMode::Paris, SERVER, 8, 0);

        // Exact round shapes, pinned to the detour window.
        let clean = vec![Some(r1), Some(r2), Some(r3), Some(SERVER)];
        let bouncing: Vec<_> =
            (0..12).map(|i| Some(if i % 2 == 0 { r1 } else { r2 })).collect();
        assert_eq!(routes[0].hop_addrs(), clean);
        for r in 1..=3 {
            assert_eq!(routes[r].hop_addrs(), bouncing, "round {r}");
            assert_eq!(routes[r].stop_reason, StopReason::MaxTtl);
        }
        assert_eq!(
            routes[4].hop_addrs(),
            vec![Some(r1), Some(r2), Some(r1), Some(r2), Some(SERVER)]
        );
        assert_eq!(routes[4].stop_reason, StopReason::Destination);
        for r in 5..8 {
            assert_eq!(routes[r].hop_addrs(), clean, "round {r}");
        }

        // Fully bounced rounds read as one period-2 region spanning
        // every hop.
        for r in 1..=3 {
            let seq = SeqRoute::from_route(&routes[r]);
            assert_eq!(
                dominant_periodic_run(&find_periodic_runs(&seq.seq)),
                Some(PeriodicRun { period: 2, start: 1, end: 12, repeats: 6 })
            );
        }

        // Both bounced routers cycle with even separations, and their
        // response IP-IDs tick as one counter: a genuine revisit.
        let window: Vec<&MeasuredRoute> = routes[1..=4].iter().collect();
        let findings = find_cycles(SERVER, &sequences_for(&window));
        assert_eq!(findings.iter().map(|f| f.addr).collect::<Vec<_>>(), vec![r1, r2]);
        for finding in &findings {
            assert_eq!(finding.length, 2);
            assert_eq!(finding.span, 10);
            assert_eq!(finding.instances.len(), 4);
            assert!(finding
                .instances
                .iter()
                .all(|i| i.min_separation % 2 == 0 && i.max_separation % 2 == 0));
            assert_eq!(verify_routing_cycle(finding, &window), CounterVerdict::Confirmed);
            assert!(!classify_cycle_interrupted(finding, &window));
            assert_eq!(cycle_cause(finding, &window), ArtifactCause::RoutingCycle);
        }

        // Healed rounds carry no cycles and no periodicity.
        for r in [0usize, 5, 6, 7] {
            let one: Vec<&MeasuredRoute> = vec![&routes[r]];
            assert!(find_cycles(SERVER, &sequences_for(&one)).is_empty(), "round {r}");
            assert!(find_periodic_runs(&SeqRoute::from_route(&routes[r]).seq).is_empty());
        }

        // Routers that zero the IP-ID field leave the check open.
        let flat = run_rounds(
            &transient_detour_topology("constant_zero"),
            9,
            ProbeMode::Paris,
            SERVER,
            6,
            0,
        );
        let flat_window: Vec<&MeasuredRoute> = flat[1..=4].iter().collect();
        let flat_findings = find_cycles(SERVER, &sequences_for(&flat_window));
        assert_eq!(flat_findings.len(), 2);
        for finding in &flat_findings {
            assert_eq!(
                verify_routing_cycle(finding, &flat_window),
                CounterVerdict::CounterUnavailable
            );
            assert_eq!(cycle_cause(finding, &flat_window), ArtifactCause::Unknown);
        }
    });
}

#[test]
fn a08_unreachable_cutoffs_mark_loops_and_cycles_interrupted() {
    within(Duration::from_secs(20), "interrupted routes", || {
        let flaky = ip("10.0.3.1");
        let routes =
            run_rounds(UNREACHABLE_CHAIN_TOPOLOGY, 5, ProbeMode::Classic, SERVER, 500, 0);
        let dataset = Dataset::from_routes(routes);
        let view = dataset.view("classic");
        let group = view.routes_to(SERVER);

        // Every structure in this campaign is the flaky router's
        // unreachable answer landing one hop past itself.
        let loops = find_loops(SERVER, &sequences_for(group));
        assert_eq!(loops.len(), 1);
        let lf = &loops[0];
        assert_eq!(lf.addr, flaky);
        assert!(lf.instances.len() >= 20, "only {} loop rounds", lf.instances.len());
        let (explained, total) = interrupted_instances(lf, group);
        assert_eq!(explained, total);
        assert!(classify_interrupted(lf, group));
        assert!(!classify_zero_ttl(lf, group));
        assert!(!classify_fake(lf, group));
        assert_eq!(loop_cause(lf, group), ArtifactCause::Interrupted);
        for inst in &lf.instances {
            assert_eq!(group[inst.route_index].stop_reason, StopReason::OtherIcmp);
        }

        let cycles = find_cycles(SERVER, &sequences_for(group));
        assert_eq!(cycles.len(), 1);
        let cf = &cycles[0];
        assert_eq!(cf.addr, flaky);
        assert!(cf.instances.len() >= 20, "only {} cycle rounds", cf.instances.len());
        assert_eq!(cf.length, 2);
        assert_eq!(cf.span, 3);
        let (cycle_explained, cycle_total) = interrupted_cycle_instances(cf, group);
        assert_eq!(cycle_explained, cycle_total);
        assert!(classify_cycle_interrupted(cf, group));
        assert_eq!(cycle_cause(cf, group), ArtifactCause::Interrupted);
        for inst in &cf.instances {
            assert_eq!(group[inst.route_index].stop_reason, StopReason::OtherIcmp);
        }
    });
}

/// Brute-force loop finder: every address that ever repeats
/// immediately, examined one address at a time against every route.
fn oracle_loops(destination: Ipv4Addr, routes: &[SeqRoute]) -> Vec<LoopFinding> {
    let mut addrs = BTreeSet::new();
    for route in routes {
        for pair in route.seq.windows(2) {
            if let (Some(a), Some(b)) = (pair[0], pair[1]) {
                if a == b {
                    addrs.insert(a);
                }
            }
        }
    }
    let mut findings = Vec::new();
    for addr in addrs {
        let mut instances = Vec::new();
        let mut with_loop = 0usize;
        let mut containing = 0usize;
        for (route_index, route) in routes.iter().enumerate() {
            if route.seq.iter().any(|s| *s == Some(addr)) {
                containing += 1;
            }
            let mut looped = false;
            let mut p = 0;
            while p < route.seq.len() {
                if route.seq[p] != Some(addr) {
                    p += 1;
                    continue;
                }
                let start = p;
                while p < route.seq.len() && route.seq[p] == Some(addr) {
                    p += 1;
                }
                if p - start >= 2 {
                    instances.push(LoopInstance {
                        route_index,
                        round: route.round,
                        start,
                        order: p - start - 1,
                    });
                    looped = true;
                }
            }
            if looped {
                with_loop += 1;
            }
        }
        let total = routes.len();
        let class = if with_loop * 20 >= total * 19 {
            LoopClass::Persistent
        } else if with_loop == containing {
            LoopClass::Systematic
        } else if with_loop <= 2 {
            LoopClass::Occasional
        } else {
            LoopClass::Other
        };
        findings.push(LoopFinding {
            addr,
            destination,
            max_order: instances.iter().map(|i| i.order).max().unwrap_or(0),
            instances,
            routes_with_loop: with_loop,
            routes_to_destination: total,
            routes_containing_addr: containing,
            class,
        });
    }
    findings
}

/// Brute-force cycle finder: every index pair of one address with a
/// different non-star answer strictly between.
fn oracle_cycles(destination: Ipv4Addr, routes: &[SeqRoute]) -> Vec<CycleFinding> {
    let mut by_addr: BTreeMap<Ipv4Addr, Vec<CycleInstance>> = BTreeMap::new();
    for (route_index, route) in routes.iter().enumerate() {
        let mut separations: BTreeMap<Ipv4Addr, Vec<usize>> = BTreeMap::new();
        for i in 0..route.seq.len() {
            let Some(addr) = route.seq[i] else { continue };
            for j in (i + 2)..route.seq.len() {
                if route.seq[j] != Some(addr) {
                    continue;
                }
                if route.seq[i + 1..j].iter().any(|s| s.is_some() && *s != Some(addr)) {
                    separations.entry(addr).or_default().push(j - i);
                }
            }
        }
        for (addr, seps) in separations {
            by_addr.entry(addr).or_default().push(CycleInstance {
                route_index,
                round: route.round,
                min_separation: *seps.iter().min().unwrap(),
                max_separation: *seps.iter().max().unwrap(),
            });
        }
    }
    by_addr
        .into_iter()
        .map(|(addr, instances)| CycleFinding {
            addr,
            destination,
            length: instances.iter().map(|i| i.min_separation).min().unwrap(),
            span: instances.iter().map(|i| i.max_separation).max().unwrap(),
            instances,
        })
        .collect()
}

/// Brute-force periodic-run finder: test every (period, start, end)
/// triple directly against the definition — region fully periodic and
/// non-star, extendable in neither direction, block of at least two
/// distinct addresses, at least two repetitions — then drop regions
/// contained in one of smaller period.
fn oracle_periodic(seq: &[Option<Ipv4Addr>]) -> Vec<PeriodicRun> {
    let n = seq.len();
    let matches = |p: usize, period: usize| seq[p].is_some() && seq[p] == seq[p + period];
    let mut candidates: Vec<PeriodicRun> = Vec::new();
    for period in 2..=n / 2 {
        for start in 0..n {
            for end in start..n {
                let span = end - start + 1;
                if span < 2 * period {
                    continue;
                }
                if !(start..=end - period).all(|p| matches(p, period)) {
                    continue;
                }
                if start > 0 && matches(start - 1, period) {
                    continue;
                }
                if end + 1 < n && matches(end + 1 - period, period) {
                    continue;
                }
                let block: BTreeSet<_> = seq[start..start + period].iter().collect();
                if block.len() < 2 {
                    continue;
                }
                candidates.push(PeriodicRun {
                    period,
                    start,
                    end,
                    repeats: (span - period) / period + 1,
                });
            }
        }
    }
    candidates
        .iter()
        .filter(|c| {
            !candidates
                .iter()
                .any(|o| o.period < c.period && o.start <= c.start && o.end >= c.end)
        })
        .copied()
        .collect()
}

/// Brute-force diamond finder over destination groups.
fn oracle_diamonds(groups: &[(Ipv4Addr, Vec<SeqRoute>)]) -> Vec<DiamondFinding> {
    let mut pairs: BTreeMap<(Ipv4Addr, Ipv4Addr), BTreeMap<Ipv4Addr, BTreeSet<Ipv4Addr>>> =
        BTreeMap::new();
    for (destination, routes) in groups {
        for route in routes {
            for i in 0..route.seq.len().saturating_sub(2) {
                if let (Some(h), Some(m), Some(t)) =
                    (route.seq[i], route.seq[i + 1], route.seq[i + 2])
                {
                    pairs.entry((h, t)).or_default().entry(*destination).or_default().insert(m);
                }
            }
        }
    }
    pairs
        .into_iter()
        .filter_map(|((head, tail), middles_by_destination)| {
            let global_middles: BTreeSet<Ipv4Addr> =
                middles_by_destination.values().flat_map(|s| s.iter().copied()).collect();
            (global_middles.len() >= 2).then_some(DiamondFinding {
                head,
                tail,
                middles_by_destination,
                global_middles,
            })
        })
        .collect()
}

#[test]
fn a09_detectors_match_brute_force_on_random_route_sets() {
    within(Duration::from_secs(60), "detector equivalence", || {
        let mut rng = Rng(0x09);
        let dests = [ip("203.0.113.1"), ip("203.0.113.2"), ip("203.0.113.3")];
        for case in 0..10_000u32 {
            let n_routes = 1 + rng.below(10) as usize;
            let routes: Vec<SeqRoute> = (0..n_routes)
                .map(|i| {
                    let len = 1 + rng.below(10) as usize;
                    let seq = (0..len)
                        .map(|_| {
                            if rng.below(10) == 0 {
                                None
                            } else {
                                Some(Ipv4Addr::new(10, 0, 0, 1 + rng.below(8) as u8))
                            }
                        })
                        .collect();
                    SeqRoute::new(i as u32, seq)
                })
                .collect();

            assert_eq!(
                find_loops(dests[0], &routes),
                oracle_loops(dests[0], &routes),
                "loops diverged, case {case}: {routes:?}"
            );
            assert_eq!(
                find_cycles(dests[0], &routes),
                oracle_cycles(dests[0], &routes),
                "cycles diverged, case {case}: {routes:?}"
            );
            for route in &routes {
                assert_eq!(
                    find_periodic_runs(&route.seq),
                    oracle_periodic(&route.seq),
                    "periodic runs diverged, case {case}: {:?}",
                    route.seq
                );
            }

            // The same routes dealt across one to three destinations.
            let group_count = 1 + rng.below(3) as usize;
            let mut groups: Vec<(Ipv4Addr, Vec<SeqRoute>)> =
                (0..group_count).map(|g| (dests[g], Vec::new())).collect();
            for (i, route) in routes.iter().enumerate() {
                groups[i % group_count].1.push(route.clone());
            }
            let found = find_diamonds(&groups);
            let expected = oracle_diamonds(&groups);
            assert_eq!(found, expected, "diamonds diverged, case {case}: {groups:?}");
            for (f, o) in found.iter().zip(&expected) {
                assert_eq!(f.one_destination_size(), o.one_destination_size());
                assert_eq!(f.global_size(), o.global_size());
                assert_eq!(f.global_only(), o.global_only());
            }
        }
    });
}

#[test]
fn a10_worked_route_sets_yield_exact_findings() {
    let d1 = ip("203.0.113.1");
    let d2 = ip("203.0.113.2");

    // Four routes toward two destinations, all looping once on the
    // same address: four instances under two (address, destination)
    // signatures, persistent for both destinations.
    {
        let (q, a, b, c, e) =
            (ip("10.8.1.1"), ip("10.8.2.1"), ip("10.8.3.1"), ip("10.8.4.1"), ip("10.8.5.1"));
        let to_d1 = vec![SeqRoute::new(0, vec![Some(q), Some(a), Some(a), Some(b), Some(e)])];
        let to_d2: Vec<SeqRoute> = (0..3u32)
            .map(|i| {
                let fourth = if i == 2 { c } else { b };
                SeqRoute::new(i, vec![Some(q), Some(a), Some(a), Some(fourth), Some(e)])
            })
            .collect();
        assert_eq!(
            find_loops(d1, &to_d1),
            vec![LoopFinding {
                addr: a,
                destination: d1,
                instances: vec![LoopInstance { route_index: 0, round: 0, start: 1, order: 1 }],
                routes_with_loop: 1,
                routes_to_destination: 1,
                routes_containing_addr: 1,
                max_order: 1,
                class: LoopClass::Persistent,
            }]
        );
        assert_eq!(
            find_loops(d2, &to_d2),
            vec![LoopFinding {
                addr: a,
                destination: d2,
                instances: (0..3)
                    .map(|i| LoopInstance {
                        route_index: i as usize,
                        round: i,
                        start: 1,
                        order: 1
                    })
                    .collect(),
                routes_with_loop: 3,
                routes_to_destination: 3,
                routes_containing_addr: 3,
                max_order: 1,
                class: LoopClass::Persistent,
            }]
        );
    }

    // A returning address: one route puts three hops between the two
    // appearances, a second route four, so the finding reads length 3
    // with span 4.
    {
        let (x, r, a, b, c, dd, e, y) = (
            ip("10.6.1.1"),
            ip("10.6.2.1"),
            ip("10.6.3.1"),
            ip("10.6.4.1"),
            ip("10.6.5.1"),
            ip("10.6.6.1"),
            ip("10.6.7.1"),
            ip("10.6.8.1"),
        );
        let short = vec![Some(x), Some(r), Some(a), Some(b), Some(r), Some(y)];
        assert_eq!(
            find_cycles(d1, &[SeqRoute::new(0, short.clone())]),
            vec![CycleFinding {
                addr: r,
                destination: d1,
                length: 3,
                span: 3,
                instances: vec![CycleInstance {
                    route_index: 0,
                    round: 0,
                    min_separation: 3,
                    max_separation: 3
                }],
            }]
        );
        let long = vec![Some(x), Some(r), Some(c), Some(dd), Some(e), Some(r), Some(y)];
        assert_eq!(
            find_cycles(d2, &[SeqRoute::new(0, short), SeqRoute::new(1, long)]),
            vec![CycleFinding {
                addr: r,
                destination: d2,
                length: 3,
                span: 4,
                instances: vec![
                    CycleInstance {
                        route_index: 0,
                        round: 0,
                        min_separation: 3,
                        max_separation: 3
                    },
                    CycleInstance {
                        route_index: 1,
                        round: 1,
                        min_separation: 4,
                        max_separation: 4
                    },
                ],
            }]
        );
    }

    // Two diamonds in one route set: one visible toward a single
    // destination (three middles toward d1, two toward d2), one only
    // in the union (each destination contributes a single middle).
    {
        let (s, a, b, c, dd, g, h, i, j, l) = (
            ip("10.7.0.1"),
            ip("10.7.1.1"),
            ip("10.7.2.1"),
            ip("10.7.2.2"),
            ip("10.7.3.1"),
            ip("10.7.4.1"),
            ip("10.7.5.1"),
            ip("10.7.5.2"),
            ip("10.7.5.3"),
            ip("10.7.6.1"),
        );
        let seq = |mid: Ipv4Addr, last: Ipv4Addr| {
            vec![Some(s), Some(a), Some(mid), Some(dd), Some(g), Some(last), Some(l)]
        };
        let to_d1: Vec<SeqRoute> =
            [h, i, j].iter().enumerate().map(|(n, &m)| SeqRoute::new(n as u32, seq(b, m))).collect();
        let to_d2: Vec<SeqRoute> =
            [h, i].iter().enumerate().map(|(n, &m)| SeqRoute::new(n as u32, seq(c, m))).collect();
        let found = find_diamonds(&[(d1, to_d1), (d2, to_d2)]);
        assert_eq!(found.len(), 2, "{found:?}");

        let union_only = &found[0];
        assert_eq!((union_only.head, union_only.tail), (a, dd));
        assert_eq!(
            union_only.middles_by_destination,
            BTreeMap::from([(d1, BTreeSet::from([b])), (d2, BTreeSet::from([c]))])
        );
        assert_eq!(union_only.global_middles, BTreeSet::from([b, c]));
        assert_eq!(union_only.one_destination_size(), None);
        assert_eq!(union_only.global_size(), 2);
        assert!(union_only.global_only());

        let single_dest = &found[1];
        assert_eq!((single_dest.head, single_dest.tail), (g, l));
        assert_eq!(
            single_dest.middles_by_destination,
            BTreeMap::from([(d1, BTreeSet::from([h, i, j])), (d2, BTreeSet::from([h, i]))])
        );
        assert_eq!(single_dest.one_destination_size(), Some(3));
        assert_eq!(single_dest.global_size(), 3);
        assert!(!single_dest.global_only());
    }
}

#[test]
fn a11_probability_helpers_match_exhaustive_enumeration() {
    // All equal-path draws: b branches, m measurements, all agreeing.
    assert_eq!(
        identical_path_probability(2, 4),
        BigRational::new(BigInt::from(1), BigInt::from(8))
    );
    for branches in 1..=4u32 {
        for measurements in 1..=5u32 {
            let total = (branches as u64).pow(measurements);
            let agreeing = branches as u64; // one outcome per branch
            assert_eq!(
                identical_path_probability(branches, measurements),
                BigRational::new(BigInt::from(agreeing), BigInt::from(total)),
                "branches {branches}, measurements {measurements}"
            );
        }
    }

    // Missing-interface probability against full enumeration: count
    // the assignments of n probes onto k interfaces that leave some
    // interface unprobed.
    for k in 1..=6u32 {
        for n in 1..=6u32 {
            let total = (k as u64).pow(n);
            let mut covering = 0u64;
            for code in 0..total {
                let mut seen = vec![false; k as usize];
                let mut rest = code;
                for _ in 0..n {
                    seen[(rest % k as u64) as usize] = true;
                    rest /= k as u64;
                }
                if seen.iter().all(|&s| s) {
                    covering += 1;
                }
            }
            assert_eq!(
                missing_router_probability(n, k),
                BigRational::new(BigInt::from(total - covering), BigInt::from(total)),
                "n {n}, k {k}"
            );
        }
    }
}

#[test]
fn a12_fixed_seed_campaigns_and_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let topo = write(dir.path(), "merge.json", UNEVEN_MERGE_TOPOLOGY);

    let campaign = |tag: &str| -> (PathBuf, PathBuf) {
        let classic = dir.path().join(format!("classic-{tag}.jsonl"));
        let paris = dir.path().join(format!("paris-{tag}.jsonl"));
        let out = run(&[
            "sim-run",
            "--topology",
            topo.to_str().unwrap(),
            "--rounds",
            "80",
            "--seed",
            "13",
            "--parallel",
            "4",
            "--classic-out",
            classic.to_str().unwrap(),
            "--paris-out",
            paris.to_str().unwrap(),
        ]);
        assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
        (classic, paris)
    };
    let (classic_a, paris_a) = campaign("a");
    let (classic_b, paris_b) = campaign("b");
    assert_eq!(
        fs::read(&classic_a).unwrap(),
        fs::read(&classic_b).unwrap(),
        "classic campaign files differ across identical runs"
    );
    assert_eq!(
        fs::read(&paris_a).unwrap(),
        fs::read(&paris_b).unwrap(),
        "paris campaign files differ across identical runs"
    );

    let csv = |args: &[&str]| -> Vec<u8> {
        let out = run(args);
        assert_eq!(exit(&out), 0, "stderr: {}", stderr(&out));
        out.stdout
    };
    assert_eq!(
        csv(&["analyze", classic_a.to_str().unwrap(), "--format", "csv"]),
        csv(&["analyze", classic_b.to_str().unwrap(), "--format", "csv"]),
    );
    assert_eq!(
        csv(&["compare", classic_a.to_str().unwrap(), paris_a.to_str().unwrap(), "--format", "csv"]),
        csv(&["compare", classic_b.to_str().unwrap(), paris_b.to_str().unwrap(), "--format", "csv"]),
    );
    assert_eq!(
        csv(&["report", classic_a.to_str().unwrap(), paris_a.to_str().unwrap(), "--format", "csv"]),
        csv(&["report", classic_b.to_str().unwrap(), paris_b.to_str().unwrap(), "--format", "csv"]),
    );
}
