//! Topology descriptions: the JSON shape operators write, plus the
//! validation that runs before a simulation will accept one.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::wire::FlowField;

#[derive(Debug, thiserror::Error)]
pub enum TopologyError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("topology does not parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid topology: {0}")]
    Invalid(String),
}

fn default_host_ttl() -> u8 {
    64
}

fn default_router_ttl() -> u8 {
    255
}

fn default_unreachable_code() -> u8 {
    1
}

/// How a node picks IP Identification values for the responses it
/// originates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IpIdMode {
    /// A per-node counter with a seeded starting point.
    #[default]
    Counter,
    /// Always zero, as some boxes genuinely send.
    ConstantZero,
}

/// How a router spreads traffic over a multi-way next hop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BalancerConfig {
    /// First entry always.
    None,
    /// Hash of selected flow-key fields; omitting `fields` hashes all
    /// of them.
    PerFlow {
        #[serde(default)]
        fields: Option<Vec<FlowField>>,
    },
    /// Round-robin over everything the router forwards.
    PerPacket,
    /// Hash of the destination address only.
    PerDestination,
}

impl Default for BalancerConfig {
    fn default() -> Self {
        BalancerConfig::PerFlow { fields: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnreachableSpec {
    /// Per-packet chance that forwarding is replaced by a Destination
    /// Unreachable response.
    pub probability: f64,
    #[serde(default = "default_unreachable_code")]
    pub code: u8,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostSpec {
    pub name: String,
    pub addr: Ipv4Addr,
    /// Where the host sends traffic it originates. The monitor needs
    /// one; pure destinations don't.
    #[serde(default)]
    pub next_hop: Option<String>,
    #[serde(default = "default_host_ttl")]
    pub response_initial_ttl: u8,
    #[serde(default)]
    pub ip_id: IpIdMode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouterSpec {
    pub name: String,
    pub addr: Ipv4Addr,
    /// Interface address presented when responding to traffic that
    /// arrived from the named neighbor.
    #[serde(default)]
    pub ingress: BTreeMap<String, Ipv4Addr>,
    /// Keys are `"default"` or a destination address; values are the
    /// candidate next hops the balancer chooses among.
    #[serde(default)]
    pub next_hops: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub balancer: BalancerConfig,
    /// Decrements TTL 1 to 0 and forwards instead of expiring the
    /// packet — the neighbor downstream ends up taking the blame.
    #[serde(default)]
    pub buggy_zero_ttl: bool,
    /// Sources every response from this address instead of its own.
    #[serde(default)]
    pub masquerade_as: Option<Ipv4Addr>,
    #[serde(default)]
    pub unreachable: Option<UnreachableSpec>,
    #[serde(default = "default_router_ttl")]
    pub response_initial_ttl: u8,
    #[serde(default)]
    pub ip_id: IpIdMode,
    /// Forwards normally but never originates a response.
    #[serde(default)]
    pub silent: bool,
}

/// Temporarily rewires one router's forwarding, keyed on the number of
/// packets the simulation has seen: active while
/// `at_packet <= n < until_packet`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub router: String,
    pub at_packet: u64,
    pub until_packet: u64,
    pub next_hops: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub name: String,
    #[serde(default)]
    pub hosts: Vec<HostSpec>,
    #[serde(default)]
    pub routers: Vec<RouterSpec>,
    #[serde(default)]
    pub schedules: Vec<ScheduleSpec>,
}

impl Topology {
    pub fn parse(json: &str) -> Result<Topology, TopologyError> {
        let topo: Topology = serde_json::from_str(json)?;
        topo.validate()?;
        Ok(topo)
    }

    pub fn host(&self, name: &str) -> Option<&HostSpec> {
        self.hosts.iter().find(|h| h.name == name)
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let invalid = |msg: String| Err(TopologyError::Invalid(msg));
        if self.hosts.is_empty() && self.routers.is_empty() {
            return invalid("topology has no nodes".into());
        }

        let mut names = BTreeSet::new();
        let mut addrs: BTreeMap<Ipv4Addr, &str> = BTreeMap::new();
        let mut claim_addr = |addr: Ipv4Addr, owner: &'static str, name: &str| {
            if let Some(prior) = addrs.insert(addr, owner) {
                return Err(TopologyError::Invalid(format!(
                    "address {addr} of {owner} {name:?} already used by a {prior}"
                )));
            }
            Ok(())
        };
        for h in &self.hosts {
            if h.name.is_empty() {
                return invalid("host with an empty name".into());
            }
            if !names.insert(h.name.as_str()) {
                return invalid(format!("duplicate node name {:?}", h.name));
            }
            claim_addr(h.addr, "host", &h.name)?;
            if h.response_initial_ttl == 0 {
                return invalid(format!("host {:?}: response_initial_ttl must be at least 1", h.name));
            }
        }
        for r in &self.routers {
            if r.name.is_empty() {
                return invalid("router with an empty name".into());
            }
            if !names.insert(r.name.as_str()) {
                return invalid(format!("duplicate node name {:?}", r.name));
            }
            claim_addr(r.addr, "router", &r.name)?;
            for (_, &addr) in &r.ingress {
                claim_addr(addr, "router ingress", &r.name)?;
            }
            if r.response_initial_ttl == 0 {
                return invalid(format!("router {:?}: response_initial_ttl must be at least 1", r.name));
            }
        }

        let resolve = |name: &str, whose: &str| {
            if names.contains(name) {
                Ok(())
            } else {
                Err(TopologyError::Invalid(format!("{whose} references unknown node {name:?}")))
            }
        };
        for h in &self.hosts {
            if let Some(next) = &h.next_hop {
                resolve(next, &format!("host {:?} next_hop", h.name))?;
            }
        }
        for r in &self.routers {
            for neighbor in r.ingress.keys() {
                resolve(neighbor, &format!("router {:?} ingress", r.name))?;
            }
            for (key, set) in &r.next_hops {
                if key != "default" && key.parse::<Ipv4Addr>().is_err() {
                    return invalid(format!(
                        "router {:?}: next_hops key {key:?} is neither \"default\" nor an address",
                        r.name
                    ));
                }
                if set.is_empty() {
                    return invalid(format!("router {:?}: next_hops {key:?} is empty", r.name));
                }
                for next in set {
                    resolve(next, &format!("router {:?} next_hops", r.name))?;
                }
            }
            if let Some(u) = &r.unreachable {
                if !(0.0..=1.0).contains(&u.probability) || !u.probability.is_finite() {
                    return invalid(format!(
                        "router {:?}: unreachable probability {} outside [0, 1]",
                        r.name, u.probability
                    ));
                }
            }
        }

        let router_names: BTreeSet<&str> = self.routers.iter().map(|r| r.name.as_str()).collect();
        let mut windows: BTreeMap<&str, Vec<(u64, u64)>> = BTreeMap::new();
        for s in &self.schedules {
            if !router_names.contains(s.router.as_str()) {
                return invalid(format!("schedule references unknown router {:?}", s.router));
            }
            if s.at_packet >= s.until_packet {
                return invalid(format!(
                    "schedule for {:?}: at_packet {} must precede until_packet {}",
                    s.router, s.at_packet, s.until_packet
                ));
            }
            if s.next_hops.is_empty() {
                return invalid(format!("schedule for {:?} has no next hops", s.router));
            }
            for next in &s.next_hops {
                resolve(next, &format!("schedule for {:?}", s.router))?;
            }
            let spans = windows.entry(s.router.as_str()).or_default();
            for &(at, until) in spans.iter() {
                if s.at_packet < until && at < s.until_packet {
                    return invalid(format!(
                        "overlapping schedules for router {:?}: [{at}, {until}) and [{}, {})",
                        s.router, s.at_packet, s.until_packet
                    ));
                }
            }
            spans.push((s.at_packet, s.until_packet));
        }
        Ok(())
    }
}

/// Read and validate a topology file.
pub fn load_topology(path: impl AsRef<Path>) -> Result<Topology, TopologyError> {
    Topology::parse(&std::fs::read_to_string(path)?)
}
