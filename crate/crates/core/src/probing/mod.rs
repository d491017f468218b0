//! The trace engine: crafts probes, drives them over a [`Transport`],
//! matches the answers, and assembles a
//! [`MeasuredRoute`](crate::tracestore::MeasuredRoute).
//!
//! Strategies trade speed for gentleness but never change what gets
//! measured: every strategy sends the same probe for a given
//! (TTL, slot), and stop conditions are evaluated identically, so a
//! deterministic network answers them all with the same route.

#[cfg(feature = "live")]
mod live;
mod matcher;

use std::collections::VecDeque;
use std::str::FromStr;

use crate::tracestore::{HopRecord, MeasuredRoute, ProbeObservation, StopReason};
use crate::wire::{
    estimate_return_path_len, parse_time_exceeded, ProbeMode, ProbeSession, ResponseInfo,
    WireError, DEST_UNREACHABLE, ECHO_REPLY,
};
#[cfg(feature = "live")]
pub use live::LiveTransport;
pub use matcher::{MatchTable, ProbeMeta};

/// Probe index reserved for the scout probe, so a scouted trace sends
/// bit-identical regular probes to an unscouted one.
pub const SCOUT_PROBE_INDEX: u32 = 0xFFFD;
/// TTL the scout probe is launched with.
pub const SCOUT_TTL: u8 = 64;
/// Hops probed beyond the scout's path-length estimate.
pub const SCOUT_MARGIN: u8 = 2;

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("transport: {0}")]
    Transport(#[from] TransportError),
    #[error("could not craft probe: {0}")]
    Craft(#[from] WireError),
    #[error("invalid trace configuration: {0}")]
    Config(&'static str),
}

/// Packet in, packet out. Timestamps are microseconds on the
/// transport's own clock; implementations advance that clock while
/// blocking in `recv` or `sleep_us`.
pub trait Transport {
    /// Inject one probe. Returns the send timestamp.
    fn send(&mut self, octets: &[u8]) -> Result<u64, TransportError>;
    /// Next packet arriving at or before `deadline_us`, with its
    /// arrival time, or `None` once the deadline passes.
    fn recv(&mut self, deadline_us: u64) -> Result<Option<(Vec<u8>, u64)>, TransportError>;
    fn now_us(&self) -> u64;
    fn sleep_us(&mut self, us: u64);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// One probe in flight at a time.
    PacketByPacket,
    /// A hop's probes together, hops sequentially.
    HopByHop,
    /// A sliding window of outstanding probes across all hops.
    Concurrent,
    /// One high-TTL probe estimates the path length, then a concurrent
    /// sweep probes only that far (plus margin). Falls back to
    /// hop-by-hop when the scout goes unanswered.
    Scout,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::PacketByPacket => "packet-by-packet",
            Strategy::HopByHop => "hop-by-hop",
            Strategy::Concurrent => "concurrent",
            Strategy::Scout => "scout",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "packet-by-packet" => Ok(Strategy::PacketByPacket),
            "hop-by-hop" => Ok(Strategy::HopByHop),
            "concurrent" => Ok(Strategy::Concurrent),
            "scout" => Ok(Strategy::Scout),
            other => Err(format!(
                "unknown strategy {other:?} (expected packet-by-packet, hop-by-hop, concurrent, or scout)"
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TraceConfig {
    pub probes_per_hop: u32,
    pub min_ttl: u8,
    pub max_ttl: u8,
    pub timeout_us: u64,
    pub inter_probe_delay_us: u64,
    /// Consecutive fully-unresponsive hops before giving up.
    pub star_gap: u32,
    pub strategy: Strategy,
    /// Window size for the concurrent strategy.
    pub max_outstanding: usize,
    /// Measurement round stamped into the route.
    pub round: u32,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            probes_per_hop: 3,
            min_ttl: 1,
            max_ttl: 36,
            timeout_us: 2_000_000,
            inter_probe_delay_us: 50_000,
            star_gap: 8,
            strategy: Strategy::PacketByPacket,
            max_outstanding: 64,
            round: 0,
        }
    }
}

impl TraceConfig {
    /// Reject configurations the engine cannot honor (zero counts,
    /// inverted TTL ranges, or more probes than the identifier space
    /// can address). `run_trace` checks this itself; callers building
    /// configurations from user input can check earlier.
    pub fn validate(&self) -> Result<(), TraceError> {
        if self.probes_per_hop == 0 {
            return Err(TraceError::Config("probes_per_hop must be at least 1"));
        }
        if self.min_ttl == 0 {
            return Err(TraceError::Config("min_ttl must be at least 1"));
        }
        if self.min_ttl > self.max_ttl {
            return Err(TraceError::Config("min_ttl must not exceed max_ttl"));
        }
        if self.star_gap == 0 {
            return Err(TraceError::Config("star_gap must be at least 1"));
        }
        if self.max_outstanding == 0 {
            return Err(TraceError::Config("max_outstanding must be at least 1"));
        }
        let ttls = (self.max_ttl - self.min_ttl) as u32 + 1;
        if ttls.saturating_mul(self.probes_per_hop) > SCOUT_PROBE_INDEX {
            return Err(TraceError::Config("too many probes for the identifier space"));
        }
        Ok(())
    }
}

/// Stop condition triggered by a completed hop, if any.
fn hop_trigger(hop: &HopRecord, destination: std::net::Ipv4Addr) -> Option<StopReason> {
    let from_destination = hop.probes.iter().any(|p| {
        p.addr == Some(destination)
            && matches!(p.icmp_type, Some(ECHO_REPLY) | Some(DEST_UNREACHABLE))
    });
    if from_destination {
        return Some(StopReason::Destination);
    }
    if hop.probes.iter().any(|p| p.icmp_type == Some(DEST_UNREACHABLE)) {
        return Some(StopReason::OtherIcmp);
    }
    None
}

/// Scan measured hops for the first stop condition. Returns how many
/// hops to keep and the stop, if one triggered.
fn evaluate(
    hops: &[HopRecord],
    destination: std::net::Ipv4Addr,
    star_gap: u32,
) -> (usize, Option<StopReason>) {
    let mut stars = 0u32;
    for (i, hop) in hops.iter().enumerate() {
        if let Some(reason) = hop_trigger(hop, destination) {
            return (i + 1, Some(reason));
        }
        if hop.probes.iter().all(ProbeObservation::is_star) {
            stars += 1;
            if stars >= star_gap {
                return (i + 1, Some(StopReason::StarGap));
            }
        } else {
            stars = 0;
        }
    }
    (hops.len(), None)
}

struct Engine<'a, T: Transport + ?Sized> {
    session: &'a ProbeSession,
    config: &'a TraceConfig,
    transport: &'a mut T,
    table: MatchTable,
    hops: Vec<HopRecord>,
    scout_response: Option<ResponseInfo>,
    sent_any: bool,
}

impl<'a, T: Transport + ?Sized> Engine<'a, T> {
    fn probe_index(&self, ttl: u8, slot: u32) -> u32 {
        (ttl - self.config.min_ttl) as u32 * self.config.probes_per_hop + slot
    }

    fn ensure_hop(&mut self, ttl: u8) {
        let idx = (ttl - self.config.min_ttl) as usize;
        while self.hops.len() <= idx {
            let t = self.config.min_ttl + self.hops.len() as u8;
            self.hops.push(HopRecord {
                ttl: t,
                probes: vec![ProbeObservation::default(); self.config.probes_per_hop as usize],
            });
        }
    }

    /// Craft and send one probe; returns its identifier and send time.
    fn send_probe(&mut self, probe_index: u32, ttl: u8, slot: u32, scout: bool) -> Result<(u16, u64), TraceError> {
        if self.sent_any && self.config.inter_probe_delay_us > 0 {
            self.transport.sleep_us(self.config.inter_probe_delay_us);
        }
        self.sent_any = true;
        let packet = self.session.craft(probe_index, ttl)?;
        let sent_at = self.transport.send(&packet.octets)?;
        if !scout {
            self.ensure_hop(ttl);
        }
        self.table.register(&packet, ttl, slot, sent_at, scout);
        Ok((packet.probe_id, sent_at))
    }

    /// Receive until something of ours arrives or the deadline passes.
    /// Returns the answered probe's identifier.
    fn pump(&mut self, deadline: u64) -> Result<Option<u16>, TraceError> {
        loop {
            let Some((octets, arrival)) = self.transport.recv(deadline)? else {
                return Ok(None);
            };
            let Ok(info) = parse_time_exceeded(&octets, Some(self.table.mode())) else {
                continue;
            };
            let Some((meta, duplicate)) = self.table.match_response(&info) else {
                continue;
            };
            if !duplicate {
                self.record(meta, &info, arrival);
            }
            return Ok(Some(meta.probe_id));
        }
    }

    fn record(&mut self, meta: ProbeMeta, info: &ResponseInfo, arrival: u64) {
        if meta.scout {
            self.scout_response = Some(info.clone());
            return;
        }
        self.ensure_hop(meta.ttl);
        let idx = (meta.ttl - self.config.min_ttl) as usize;
        self.hops[idx].probes[meta.slot as usize] = ProbeObservation {
            addr: Some(info.responder),
            rtt_us: Some(arrival.saturating_sub(meta.sent_at)),
            probe_ttl: info.quote.as_ref().map(|q| q.probe_ttl),
            response_ttl: Some(info.response_ttl),
            ip_id: Some(info.ip_id),
            icmp_type: Some(info.icmp_type),
            icmp_code: Some(info.icmp_code),
        };
    }

    fn stop_found(&self) -> bool {
        evaluate(&self.hops, self.session.dst_addr, self.config.star_gap).1.is_some()
    }

    fn run_packet_by_packet(&mut self, max_ttl: u8) -> Result<(), TraceError> {
        for ttl in self.config.min_ttl..=max_ttl {
            for slot in 0..self.config.probes_per_hop {
                let (id, sent_at) = self.send_probe(self.probe_index(ttl, slot), ttl, slot, false)?;
                let deadline = sent_at + self.config.timeout_us;
                while !self.table.is_answered(id) {
                    if self.pump(deadline)?.is_none() {
                        break;
                    }
                }
            }
            if self.stop_found() {
                break;
            }
        }
        Ok(())
    }

    fn run_hop_by_hop(&mut self, max_ttl: u8) -> Result<(), TraceError> {
        for ttl in self.config.min_ttl..=max_ttl {
            let mut ids = Vec::with_capacity(self.config.probes_per_hop as usize);
            let mut last_sent = 0;
            for slot in 0..self.config.probes_per_hop {
                let (id, sent_at) = self.send_probe(self.probe_index(ttl, slot), ttl, slot, false)?;
                ids.push(id);
                last_sent = sent_at;
            }
            let deadline = last_sent + self.config.timeout_us;
            while ids.iter().any(|&id| !self.table.is_answered(id)) {
                if self.pump(deadline)?.is_none() {
                    break;
                }
            }
            if self.stop_found() {
                break;
            }
        }
        Ok(())
    }

    fn run_concurrent(&mut self, max_ttl: u8) -> Result<(), TraceError> {
        let mut pending: VecDeque<(u8, u32)> = VecDeque::new();
        for ttl in self.config.min_ttl..=max_ttl {
            for slot in 0..self.config.probes_per_hop {
                pending.push_back((ttl, slot));
            }
        }
        // (probe_id, expiry)
        let mut outstanding: Vec<(u16, u64)> = Vec::new();

        loop {
            while outstanding.len() < self.config.max_outstanding {
                let Some((ttl, slot)) = pending.pop_front() else { break };
                let (id, sent_at) = self.send_probe(self.probe_index(ttl, slot), ttl, slot, false)?;
                outstanding.push((id, sent_at + self.config.timeout_us));
            }
            if outstanding.is_empty() {
                if pending.is_empty() {
                    break;
                }
                continue;
            }
            let earliest = outstanding.iter().map(|&(_, e)| e).min().unwrap();
            match self.pump(earliest)? {
                Some(id) => {
                    outstanding.retain(|&(o, _)| o != id);
                    // An answered stop condition makes deeper probes
                    // pointless; stars are left to the final evaluation
                    // since in-flight probes look like stars here.
                    let (keep, stop) =
                        evaluate(&self.hops, self.session.dst_addr, self.config.star_gap);
                    if matches!(stop, Some(StopReason::Destination) | Some(StopReason::OtherIcmp)) {
                        let cut = self.config.min_ttl + (keep - 1) as u8;
                        pending.retain(|&(ttl, _)| ttl <= cut);
                    }
                }
                None => {
                    let now = self.transport.now_us();
                    outstanding.retain(|&(_, expiry)| expiry > now);
                }
            }
        }
        Ok(())
    }

    fn run_scout(&mut self) -> Result<(), TraceError> {
        let (id, sent_at) = self.send_probe(SCOUT_PROBE_INDEX, SCOUT_TTL, 0, true)?;
        let deadline = sent_at + self.config.timeout_us;
        while !self.table.is_answered(id) {
            if self.pump(deadline)?.is_none() {
                break;
            }
        }
        let estimate = self.scout_response.as_ref().and_then(|info| {
            let from_destination = info.responder == self.session.dst_addr
                && matches!(info.icmp_type, ECHO_REPLY | DEST_UNREACHABLE);
            from_destination.then(|| estimate_return_path_len(info.response_ttl))
        });
        match estimate {
            Some(distance) => {
                let limit = (distance as u16 + SCOUT_MARGIN as u16).min(self.config.max_ttl as u16);
                self.run_concurrent((limit as u8).max(self.config.min_ttl))
            }
            None => self.run_hop_by_hop(self.config.max_ttl),
        }
    }
}

/// Trace the route to the session's destination.
pub fn run_trace<T: Transport + ?Sized>(
    session: &ProbeSession,
    config: &TraceConfig,
    transport: &mut T,
) -> Result<MeasuredRoute, TraceError> {
    config.validate()?;
    let started_at = transport.now_us();
    let flow = session.craft(0, config.min_ttl)?.flow;
    let mut engine = Engine {
        session,
        config,
        transport,
        table: MatchTable::new(session.session_id, session.mode, session.protocol),
        hops: Vec::new(),
        scout_response: None,
        sent_any: false,
    };
    match config.strategy {
        Strategy::PacketByPacket => engine.run_packet_by_packet(config.max_ttl)?,
        Strategy::HopByHop => engine.run_hop_by_hop(config.max_ttl)?,
        Strategy::Concurrent => engine.run_concurrent(config.max_ttl)?,
        Strategy::Scout => engine.run_scout()?,
    }
    let (keep, stop) = evaluate(&engine.hops, session.dst_addr, config.star_gap);
    engine.hops.truncate(keep);
    Ok(MeasuredRoute {
        tool: match session.mode {
            ProbeMode::Classic => "classic".to_string(),
            ProbeMode::Paris => "paris".to_string(),
        },
        destination: session.dst_addr,
        round: config.round,
        started_at,
        flow,
        hops: engine.hops,
        stop_reason: stop.unwrap_or(StopReason::MaxTtl),
    })
}
