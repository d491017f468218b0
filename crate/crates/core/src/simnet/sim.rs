//! The packet walk: injected probes traverse the topology node by
//! node, and whatever response the rules produce comes back with a
//! per-hop delay. Everything is a pure function of (topology, seed,
//! injection order), so runs are bit-for-bit reproducible.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use crate::util::{mix_bytes, mix_parts, unit_fraction};
use crate::wire::{
    build_dest_unreachable, build_echo_reply, build_time_exceeded, extract_flow_key,
    internet_checksum, FlowField, FlowKey, Protocol,
};

use super::topology::{BalancerConfig, IpIdMode, Topology, TopologyError, UnreachableSpec};

/// Domain-separation salts for the seeded hashes, fixed so external
/// code can reproduce any decision the simulator makes.
pub const FLOW_HASH_SALT: u64 = 1;
pub const DEST_HASH_SALT: u64 = 2;
pub const UNREACHABLE_SALT: u64 = 3;
pub const IPID_SALT: u64 = 4;

/// The next-hop slot a per-flow balancer picks: a seeded hash of the
/// selected flow-key fields, reduced modulo the fanout.
pub fn per_flow_index(
    seed: u64,
    node_index: u64,
    fields: &[FlowField],
    flow: &FlowKey,
    fanout: usize,
) -> usize {
    let mut bytes = Vec::new();
    for &field in fields {
        flow.field_bytes(field, &mut bytes);
    }
    (mix_bytes(mix_parts(seed, &[FLOW_HASH_SALT, node_index]), &bytes) % fanout as u64) as usize
}

/// The next-hop slot a per-destination balancer picks.
pub fn per_destination_index(seed: u64, node_index: u64, dst: Ipv4Addr, fanout: usize) -> usize {
    (mix_parts(seed, &[DEST_HASH_SALT, node_index, u64::from(u32::from(dst))]) % fanout as u64)
        as usize
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SimError {
    #[error("no node owns source address {0}")]
    UnknownSource(Ipv4Addr),
    #[error("host {0:?} has no next_hop to send through")]
    NoNextHop(String),
    #[error("packet not injectable: {0}")]
    BadPacket(&'static str),
}

/// One forwarding choice, kept when decision recording is on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForwardingDecision {
    pub packet: u64,
    pub router: String,
    pub fanout: usize,
    pub choice: usize,
    pub next: String,
}

#[derive(Clone, Debug)]
struct RouterState {
    ingress: BTreeMap<usize, Ipv4Addr>,
    default_routes: Option<Vec<usize>>,
    dest_routes: BTreeMap<Ipv4Addr, Vec<usize>>,
    balancer: BalancerConfig,
    buggy_zero_ttl: bool,
    unreachable: Option<UnreachableSpec>,
}

#[derive(Clone, Debug)]
enum NodeKind {
    Host { next_hop: Option<usize> },
    Router(RouterState),
}

#[derive(Clone, Debug)]
struct Node {
    name: String,
    addr: Ipv4Addr,
    response_initial_ttl: u8,
    ip_id_mode: IpIdMode,
    silent: bool,
    masquerade_as: Option<Ipv4Addr>,
    kind: NodeKind,
}

#[derive(Clone, Debug)]
struct Schedule {
    router: usize,
    at: u64,
    until: u64,
    next: Vec<usize>,
}

enum Reply {
    Expired,
    Unreachable(u8),
    PortUnreachable,
    EchoReply(u16, u16),
}

/// A deterministic network. `inject` walks one packet through the
/// topology and returns the response it provokes, if any, with the
/// round-trip delay in microseconds.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub name: String,
    nodes: Vec<Node>,
    by_name: BTreeMap<String, usize>,
    by_addr: BTreeMap<Ipv4Addr, usize>,
    schedules: Vec<Schedule>,
    seed: u64,
    clock_us: u64,
    injected: u64,
    per_packet_counters: Vec<u64>,
    ip_id_counters: Vec<u16>,
    record_decisions: bool,
    decisions: Vec<ForwardingDecision>,
}

fn set_ttl(packet: &mut [u8], ttl: u8) {
    packet[8] = ttl;
    packet[10] = 0;
    packet[11] = 0;
    let ck = internet_checksum(&packet[..20]);
    packet[10..12].copy_from_slice(&ck.to_be_bytes());
}

impl Simulation {
    pub fn new(topology: &Topology, seed: u64) -> Result<Simulation, TopologyError> {
        topology.validate()?;

        let mut by_name = BTreeMap::new();
        for (i, h) in topology.hosts.iter().enumerate() {
            by_name.insert(h.name.clone(), i);
        }
        for (i, r) in topology.routers.iter().enumerate() {
            by_name.insert(r.name.clone(), topology.hosts.len() + i);
        }
        let idx = |name: &str| by_name[name];

        let mut nodes = Vec::with_capacity(topology.hosts.len() + topology.routers.len());
        for h in &topology.hosts {
            nodes.push(Node {
                name: h.name.clone(),
                addr: h.addr,
                response_initial_ttl: h.response_initial_ttl,
                ip_id_mode: h.ip_id,
                silent: false,
                masquerade_as: None,
                kind: NodeKind::Host { next_hop: h.next_hop.as_deref().map(idx) },
            });
        }
        for r in &topology.routers {
            let mut default_routes = None;
            let mut dest_routes = BTreeMap::new();
            for (key, set) in &r.next_hops {
                let resolved: Vec<usize> = set.iter().map(|n| idx(n)).collect();
                if key == "default" {
                    default_routes = Some(resolved);
                } else {
                    dest_routes.insert(key.parse::<Ipv4Addr>().expect("validated"), resolved);
                }
            }
            nodes.push(Node {
                name: r.name.clone(),
                addr: r.addr,
                response_initial_ttl: r.response_initial_ttl,
                ip_id_mode: r.ip_id,
                silent: r.silent,
                masquerade_as: r.masquerade_as,
                kind: NodeKind::Router(RouterState {
                    ingress: r.ingress.iter().map(|(name, &addr)| (idx(name), addr)).collect(),
                    default_routes,
                    dest_routes,
                    balancer: r.balancer.clone(),
                    buggy_zero_ttl: r.buggy_zero_ttl,
                    unreachable: r.unreachable,
                }),
            });
        }

        let by_addr = nodes.iter().enumerate().map(|(i, n)| (n.addr, i)).collect();
        let schedules = topology
            .schedules
            .iter()
            .map(|s| Schedule {
                router: idx(&s.router),
                at: s.at_packet,
                until: s.until_packet,
                next: s.next_hops.iter().map(|n| idx(n)).collect(),
            })
            .collect();
        let ip_id_counters = (0..nodes.len())
            .map(|i| mix_parts(seed, &[IPID_SALT, i as u64]) as u16)
            .collect();

        Ok(Simulation {
            name: topology.name.clone(),
            per_packet_counters: vec![0; nodes.len()],
            ip_id_counters,
            nodes,
            by_name,
            by_addr,
            schedules,
            seed,
            clock_us: 0,
            injected: 0,
            record_decisions: false,
            decisions: Vec::new(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn now_us(&self) -> u64 {
        self.clock_us
    }

    pub fn advance_to(&mut self, t_us: u64) {
        self.clock_us = self.clock_us.max(t_us);
    }

    pub fn sleep(&mut self, us: u64) {
        self.clock_us += us;
    }

    /// Packets injected so far — the counter schedules key on.
    pub fn injected(&self) -> u64 {
        self.injected
    }

    /// Index of a node in the hashing domain, as `per_flow_index` and
    /// friends expect it.
    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn set_record_decisions(&mut self, on: bool) {
        self.record_decisions = on;
    }

    pub fn decisions(&self) -> &[ForwardingDecision] {
        &self.decisions
    }

    fn next_ip_id(&mut self, node: usize) -> u16 {
        match self.nodes[node].ip_id_mode {
            IpIdMode::Counter => {
                let id = self.ip_id_counters[node];
                self.ip_id_counters[node] = id.wrapping_add(1);
                id
            }
            IpIdMode::ConstantZero => 0,
        }
    }

    fn owns(&self, node: usize, addr: Ipv4Addr) -> bool {
        let node = &self.nodes[node];
        node.addr == addr
            || matches!(&node.kind, NodeKind::Router(r) if r.ingress.values().any(|&a| a == addr))
    }

    fn route_for(&self, node: usize, packet_n: u64, dst: Ipv4Addr) -> Option<Vec<usize>> {
        for s in &self.schedules {
            if s.router == node && s.at <= packet_n && packet_n < s.until {
                return Some(s.next.clone());
            }
        }
        let NodeKind::Router(r) = &self.nodes[node].kind else { return None };
        r.dest_routes.get(&dst).or(r.default_routes.as_ref()).cloned()
    }

    /// Build the response a node sends from `distance` hops away, or
    /// `None` if it is silent or the response's TTL cannot carry it
    /// home.
    fn respond(
        &mut self,
        node_idx: usize,
        prev: usize,
        distance: u64,
        reply: Reply,
        packet: &[u8],
    ) -> Option<(Vec<u8>, u64)> {
        let (silent, initial, src) = {
            let node = &self.nodes[node_idx];
            let interface = match &node.kind {
                NodeKind::Router(r) => r.ingress.get(&prev).copied().unwrap_or(node.addr),
                NodeKind::Host { .. } => node.addr,
            };
            (node.silent, node.response_initial_ttl, node.masquerade_as.unwrap_or(interface))
        };
        if silent || (initial as u64) < distance {
            return None;
        }
        let response_ttl = initial - (distance as u8 - 1);
        let back_to = Ipv4Addr::new(packet[12], packet[13], packet[14], packet[15]);
        let ip_id = self.next_ip_id(node_idx);
        let octets = match reply {
            Reply::Expired => build_time_exceeded(src, back_to, response_ttl, ip_id, packet),
            Reply::Unreachable(code) => {
                build_dest_unreachable(src, back_to, response_ttl, ip_id, code, packet)
            }
            Reply::PortUnreachable => {
                build_dest_unreachable(src, back_to, response_ttl, ip_id, 3, packet)
            }
            Reply::EchoReply(ident, seq) => {
                build_echo_reply(src, back_to, response_ttl, ip_id, ident, seq)
            }
        };
        Some((octets, distance * 1000))
    }

    fn deliver(
        &mut self,
        node_idx: usize,
        prev: usize,
        distance: u64,
        packet: &[u8],
    ) -> Option<(Vec<u8>, u64)> {
        match Protocol::from_number(packet[9]) {
            Some(Protocol::Udp) | Some(Protocol::Tcp) => {
                self.respond(node_idx, prev, distance, Reply::PortUnreachable, packet)
            }
            Some(Protocol::Icmp) if packet[20] == 8 => {
                let ident = u16::from_be_bytes([packet[24], packet[25]]);
                let seq = u16::from_be_bytes([packet[26], packet[27]]);
                self.respond(node_idx, prev, distance, Reply::EchoReply(ident, seq), packet)
            }
            _ => None,
        }
    }

    /// Walk one packet through the network. Returns the provoked
    /// response and its round-trip time, or `None` when the packet is
    /// black-holed, sunk, or answered by a silent node.
    pub fn inject(&mut self, octets: &[u8]) -> Result<Option<(Vec<u8>, u64)>, SimError> {
        self.clock_us += 10_000;
        let packet_n = self.injected;
        self.injected += 1;

        if octets.len() < 28 || octets[0] != 0x45 {
            return Err(SimError::BadPacket("need a plain IPv4 header plus 8 transport octets"));
        }
        let flow =
            extract_flow_key(octets).map_err(|_| SimError::BadPacket("unrecognized transport"))?;
        let src = Ipv4Addr::new(octets[12], octets[13], octets[14], octets[15]);
        let dst = Ipv4Addr::new(octets[16], octets[17], octets[18], octets[19]);
        let Some(&entry) = self.by_addr.get(&src) else {
            return Err(SimError::UnknownSource(src));
        };
        let NodeKind::Host { next_hop } = &self.nodes[entry].kind else {
            return Err(SimError::BadPacket("packets are injected from hosts"));
        };
        let Some(first) = *next_hop else {
            return Err(SimError::NoNextHop(self.nodes[entry].name.clone()));
        };

        let mut packet = octets.to_vec();
        let mut prev = entry;
        let mut current = first;
        let mut distance: u64 = 1;

        // TTL strictly decreases except for one buggy 1 -> 0 forward,
        // which the next node always expires; the walk terminates well
        // inside this bound.
        for _ in 0..4096 {
            if self.owns(current, dst) {
                return Ok(self.deliver(current, prev, distance, &packet));
            }
            let (buggy, balancer, unreachable) = match &self.nodes[current].kind {
                NodeKind::Router(r) => (r.buggy_zero_ttl, r.balancer.clone(), r.unreachable),
                // A packet for somebody else washed up at a host: sink.
                NodeKind::Host { .. } => return Ok(None),
            };
            let ttl = packet[8];
            if ttl == 0 || (ttl == 1 && !buggy) {
                return Ok(self.respond(current, prev, distance, Reply::Expired, &packet));
            }
            let Some(next_set) = self.route_for(current, packet_n, dst) else {
                return Ok(None);
            };
            if let Some(u) = unreachable {
                let draw =
                    unit_fraction(mix_parts(self.seed, &[UNREACHABLE_SALT, current as u64, packet_n]));
                if draw < u.probability {
                    return Ok(self.respond(
                        current,
                        prev,
                        distance,
                        Reply::Unreachable(u.code),
                        &packet,
                    ));
                }
            }
            set_ttl(&mut packet, ttl - 1);
            let fanout = next_set.len();
            let choice = if fanout == 1 {
                0
            } else {
                match &balancer {
                    BalancerConfig::None => 0,
                    BalancerConfig::PerFlow { fields } => per_flow_index(
                        self.seed,
                        current as u64,
                        fields.as_deref().unwrap_or(&FlowField::ALL),
                        &flow,
                        fanout,
                    ),
                    BalancerConfig::PerPacket => {
                        let c = self.per_packet_counters[current];
                        self.per_packet_counters[current] += 1;
                        (c % fanout as u64) as usize
                    }
                    BalancerConfig::PerDestination => {
                        per_destination_index(self.seed, current as u64, dst, fanout)
                    }
                }
            };
            let next = next_set[choice];
            if self.record_decisions {
                self.decisions.push(ForwardingDecision {
                    packet: packet_n,
                    router: self.nodes[current].name.clone(),
                    fanout,
                    choice,
                    next: self.nodes[next].name.clone(),
                });
            }
            prev = current;
            current = next;
            distance += 1;
        }
        Err(SimError::BadPacket("forwarding did not terminate"))
    }
}
