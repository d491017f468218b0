//! Storage for measured routes.
//!
//! Routes are serialized as JSON Lines — one route per line, absent
//! values written as explicit nulls, unknown keys ignored on read so
//! files from newer writers still load. A [`Dataset`] collects routes
//! and serves them grouped by tool and destination, which is the shape
//! the structure detectors and dataset comparisons consume.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::Ipv4Addr;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::wire::FlowKey;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
}

/// Why a trace stopped extending its TTL.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The destination answered (Echo Reply, or Port Unreachable from it).
    Destination,
    /// Some other ICMP message ended the trace (e.g. unreachable from a
    /// router on the path).
    OtherIcmp,
    /// Too many consecutive fully-unresponsive hops.
    StarGap,
    /// Ran into the TTL limit.
    MaxTtl,
}

/// One probe slot of one hop. Every field is optional: a star is a slot
/// where nothing came back.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeObservation {
    #[serde(default)]
    pub addr: Option<Ipv4Addr>,
    #[serde(default)]
    pub rtt_us: Option<u64>,
    /// The probe's TTL as quoted back by the responder.
    #[serde(default)]
    pub probe_ttl: Option<u8>,
    /// TTL the response arrived with.
    #[serde(default)]
    pub response_ttl: Option<u8>,
    /// IP Identification of the response.
    #[serde(default)]
    pub ip_id: Option<u16>,
    #[serde(default)]
    pub icmp_type: Option<u8>,
    #[serde(default)]
    pub icmp_code: Option<u8>,
}

impl ProbeObservation {
    pub fn is_star(&self) -> bool {
        self.addr.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopRecord {
    pub ttl: u8,
    pub probes: Vec<ProbeObservation>,
}

impl HopRecord {
    /// Address reported for this hop: the first probe slot that got an
    /// answer. `None` is a star.
    pub fn addr(&self) -> Option<Ipv4Addr> {
        self.probes.iter().find_map(|p| p.addr)
    }

    pub fn is_star(&self) -> bool {
        self.addr().is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuredRoute {
    /// Name of the tool/discipline that measured this route.
    pub tool: String,
    pub destination: Ipv4Addr,
    /// Measurement round this route belongs to.
    pub round: u32,
    /// Start of the trace, microseconds on the measuring clock.
    pub started_at: u64,
    pub flow: FlowKey,
    pub hops: Vec<HopRecord>,
    pub stop_reason: StopReason,
}

impl MeasuredRoute {
    /// Hop addresses in TTL order, one entry per hop, `None` for stars.
    pub fn hop_addrs(&self) -> Vec<Option<Ipv4Addr>> {
        self.hops.iter().map(|h| h.addr()).collect()
    }

    /// Address at a 1-based TTL, if that hop was measured and answered.
    pub fn addr_at(&self, ttl: u8) -> Option<Ipv4Addr> {
        self.hops.get(ttl as usize - 1).and_then(|h| h.addr())
    }

    pub fn reached_destination(&self) -> bool {
        self.stop_reason == StopReason::Destination
    }

    fn validate(&self) -> Result<(), String> {
        for (i, hop) in self.hops.iter().enumerate() {
            let want = (i + 1) as u8;
            if hop.ttl != want {
                return Err(format!(
                    "hops must cover contiguous TTLs from 1: position {i} has ttl {}, expected {want}",
                    hop.ttl
                ));
            }
            if hop.probes.is_empty() {
                return Err(format!("hop ttl {} has no probe slots", hop.ttl));
            }
        }
        Ok(())
    }
}

/// An in-memory collection of measured routes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    routes: Vec<MeasuredRoute>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_routes(routes: Vec<MeasuredRoute>) -> Self {
        Dataset { routes }
    }

    pub fn push(&mut self, route: MeasuredRoute) {
        self.routes.push(route);
    }

    pub fn extend<I: IntoIterator<Item = MeasuredRoute>>(&mut self, routes: I) {
        self.routes.extend(routes);
    }

    pub fn routes(&self) -> &[MeasuredRoute] {
        &self.routes
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    /// Distinct tool names, sorted.
    pub fn tools(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.routes.iter().map(|r| r.tool.as_str()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Routes measured by one tool, grouped by destination.
    pub fn view(&self, tool: &str) -> RouteView<'_> {
        RouteView::build(self.routes.iter().filter(|r| r.tool == tool))
    }

    /// All routes regardless of tool, grouped by destination.
    pub fn merged_view(&self) -> RouteView<'_> {
        RouteView::build(self.routes.iter())
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self, StoreError> {
        let mut routes = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let route: MeasuredRoute =
                serde_json::from_str(&line).map_err(|e| StoreError::MalformedLine {
                    line: idx + 1,
                    reason: e.to_string(),
                })?;
            route.validate().map_err(|reason| StoreError::MalformedLine {
                line: idx + 1,
                reason,
            })?;
            routes.push(route);
        }
        Ok(Dataset { routes })
    }

    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for route in &self.routes {
            serde_json::to_writer(&mut writer, route)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, StoreError> {
        let file = std::fs::File::open(path)?;
        Self::read_jsonl(BufReader::new(file))
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> std::io::Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_jsonl(&mut file)?;
        file.flush()
    }
}

/// Routes grouped by destination, ordered by round within each group.
pub struct RouteView<'a> {
    by_destination: BTreeMap<Ipv4Addr, Vec<&'a MeasuredRoute>>,
}

impl<'a> RouteView<'a> {
    fn build<I: Iterator<Item = &'a MeasuredRoute>>(routes: I) -> Self {
        let mut by_destination: BTreeMap<Ipv4Addr, Vec<&'a MeasuredRoute>> = BTreeMap::new();
        for route in routes {
            by_destination.entry(route.destination).or_default().push(route);
        }
        for group in by_destination.values_mut() {
            group.sort_by_key(|r| (r.round, r.started_at));
        }
        RouteView { by_destination }
    }

    pub fn destinations(&self) -> impl Iterator<Item = Ipv4Addr> + '_ {
        self.by_destination.keys().copied()
    }

    pub fn routes_to(&self, destination: Ipv4Addr) -> &[&'a MeasuredRoute] {
        self.by_destination.get(&destination).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Ipv4Addr, &[&'a MeasuredRoute])> {
        self.by_destination.iter().map(|(d, v)| (*d, v.as_slice()))
    }

    /// Number of destination groups.
    pub fn len(&self) -> usize {
        self.by_destination.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_destination.is_empty()
    }

    pub fn total_routes(&self) -> usize {
        self.by_destination.values().map(Vec::len).sum()
    }
}
