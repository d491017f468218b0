//! Probe crafting.
//!
//! Two crafting disciplines share one session type:
//!
//! * `classic` varies a header field that balancers hash (the UDP
//!   destination port, or the ICMP checksum via its sequence number),
//!   so consecutive probes may take different paths.
//! * `paris` keeps every hashed field constant for the whole session
//!   and moves the per-probe identifier into fields balancers ignore:
//!   the UDP Checksum (steered through a sacrificial payload slot), the
//!   ICMP Sequence Number (with the Identifier compensating so the
//!   checksum never moves), or the TCP Sequence Number.
//!
//! Identifiers: probe_id = probe_index + 1, so the UDP-reserved checksum
//! values 0x0000/0xFFFF never occur. UDP crafting refuses indexes past
//! 0xFFFD; ICMP and TCP wrap modulo the same domain. The session id
//! rides in the IP Identification field (paris), or in the Source Port /
//! ICMP Identifier (classic, emulating a PID-based tool; classic session
//! ids are masked below 32768 so src_port = 32768 + session_id fits).

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::checksum::{checksum_fold, checksum_partial, internet_checksum, ones_sub};
use super::flow::{extract_flow_key, FlowKey, Protocol};
use super::WireError;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeMode {
    Classic,
    Paris,
}

/// Everything that stays fixed for the lifetime of one trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeSession {
    pub mode: ProbeMode,
    pub protocol: Protocol,
    pub src_addr: Ipv4Addr,
    pub dst_addr: Ipv4Addr,
    pub session_id: u16,
    pub tos: u8,
    pub src_port: u16,
    pub dst_port: u16,
    /// UDP payload octets; paris needs at least 2 for the checksum slot.
    pub udp_payload_len: u16,
}

pub const CLASSIC_BASE_PORT: u16 = 33435;

impl ProbeSession {
    pub fn new(
        mode: ProbeMode,
        protocol: Protocol,
        src_addr: Ipv4Addr,
        dst_addr: Ipv4Addr,
        session_id: u16,
    ) -> Self {
        let session_id = match mode {
            ProbeMode::Classic => session_id & 0x7FFF,
            ProbeMode::Paris => session_id,
        };
        let dst_port = match protocol {
            Protocol::Tcp => 80,
            _ => 33435,
        };
        ProbeSession {
            mode,
            protocol,
            src_addr,
            dst_addr,
            session_id,
            tos: 0,
            src_port: 32768,
            dst_port,
            udp_payload_len: 2,
        }
    }

    /// Deterministic session setup from a seed: session id plus, for
    /// paris, ports drawn from [10000, 60000] (TCP keeps dst port 80).
    pub fn seeded(
        mode: ProbeMode,
        protocol: Protocol,
        src_addr: Ipv4Addr,
        dst_addr: Ipv4Addr,
        seed: u64,
    ) -> Self {
        let mut s = Self::new(mode, protocol, src_addr, dst_addr, crate::util::mix_parts(seed, &[1]) as u16);
        if mode == ProbeMode::Paris {
            s.src_port = 10000 + (crate::util::mix_parts(seed, &[2]) % 50001) as u16;
            if protocol != Protocol::Tcp {
                s.dst_port = 10000 + (crate::util::mix_parts(seed, &[3]) % 50001) as u16;
            }
        }
        s
    }

    /// Craft the probe for one (probe_index, ttl) under this session's
    /// protocol and mode.
    pub fn craft(&self, probe_index: u32, ttl: u8) -> Result<ProbePacket, WireError> {
        match self.protocol {
            Protocol::Udp => craft_udp_probe(self, probe_index, ttl),
            Protocol::Icmp => craft_icmp_probe(self, probe_index, ttl),
            Protocol::Tcp => craft_tcp_probe(self, probe_index, ttl),
        }
    }

    /// The constant ICMP checksum a paris ICMP session holds: the
    /// natural checksum of the probe with Sequence Number zero.
    pub fn icmp_constant_checksum(&self) -> u16 {
        let mut h = [0u8; 8];
        h[0] = 8;
        h[4..6].copy_from_slice(&self.session_id.to_be_bytes());
        internet_checksum(&h)
    }
}

/// A crafted probe: raw octets plus the identity bookkeeping the
/// matcher needs. `flow` is always re-derived from the octets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbePacket {
    pub octets: Vec<u8>,
    pub ttl: u8,
    pub probe_id: u16,
    pub session_id: u16,
    pub flow: FlowKey,
}

impl ProbePacket {
    /// Identifier/Sequence pair of an ICMP Echo probe; an Echo Reply
    /// mirrors these back, which is how quoteless replies are matched.
    pub fn icmp_echo_ids(&self) -> Option<(u16, u16)> {
        if self.flow.protocol != Protocol::Icmp || self.octets.len() < 28 {
            return None;
        }
        let id = u16::from_be_bytes([self.octets[24], self.octets[25]]);
        let seq = u16::from_be_bytes([self.octets[26], self.octets[27]]);
        Some((id, seq))
    }
}

fn probe_id_checked(probe_index: u32) -> Result<u16, WireError> {
    if probe_index >= 0xFFFE {
        return Err(WireError::ProbeIdRange(probe_index));
    }
    Ok((probe_index + 1) as u16)
}

fn probe_id_wrapping(probe_index: u32) -> u16 {
    ((probe_index % 0xFFFE) + 1) as u16
}

pub fn ipv4_header(
    tos: u8,
    total_len: u16,
    id: u16,
    ttl: u8,
    protocol: Protocol,
    src: Ipv4Addr,
    dst: Ipv4Addr,
) -> [u8; 20] {
    let mut h = [0u8; 20];
    h[0] = 0x45;
    h[1] = tos;
    h[2..4].copy_from_slice(&total_len.to_be_bytes());
    h[4..6].copy_from_slice(&id.to_be_bytes());
    h[8] = ttl;
    h[9] = protocol.number();
    h[12..16].copy_from_slice(&src.octets());
    h[16..20].copy_from_slice(&dst.octets());
    let ck = internet_checksum(&h);
    h[10..12].copy_from_slice(&ck.to_be_bytes());
    h
}

fn pseudo_header_sum(src: Ipv4Addr, dst: Ipv4Addr, protocol: Protocol, len: u16) -> u32 {
    let mut sum = checksum_partial(0, &src.octets());
    sum = checksum_partial(sum, &dst.octets());
    sum + protocol.number() as u32 + len as u32
}

fn finish(session: &ProbeSession, octets: Vec<u8>, ttl: u8, probe_id: u16) -> Result<ProbePacket, WireError> {
    let flow = extract_flow_key(&octets)?;
    Ok(ProbePacket { octets, ttl, probe_id, session_id: session.session_id, flow })
}

pub fn craft_udp_probe(session: &ProbeSession, probe_index: u32, ttl: u8) -> Result<ProbePacket, WireError> {
    if ttl == 0 {
        return Err(WireError::InvalidTtl);
    }
    let probe_id = probe_id_checked(probe_index)?;
    let payload_len = session.udp_payload_len;
    if session.mode == ProbeMode::Paris && payload_len < 2 {
        return Err(WireError::PayloadTooShort { min: 2, got: payload_len });
    }
    let udp_len = 8 + payload_len;
    let total_len = 20 + udp_len;

    let (src_port, dst_port, ip_id) = match session.mode {
        ProbeMode::Classic => (
            32768 + (session.session_id & 0x7FFF),
            (CLASSIC_BASE_PORT as u32 + probe_index) as u16,
            probe_id,
        ),
        ProbeMode::Paris => (session.src_port, session.dst_port, session.session_id),
    };

    let mut pkt = Vec::with_capacity(total_len as usize);
    pkt.extend_from_slice(&ipv4_header(session.tos, total_len, ip_id, ttl, Protocol::Udp, session.src_addr, session.dst_addr));
    pkt.extend_from_slice(&src_port.to_be_bytes());
    pkt.extend_from_slice(&dst_port.to_be_bytes());
    pkt.extend_from_slice(&udp_len.to_be_bytes());
    pkt.extend_from_slice(&[0, 0]); // checksum, filled below
    pkt.resize(total_len as usize, 0);

    let base = checksum_partial(pseudo_header_sum(session.src_addr, session.dst_addr, Protocol::Udp, udp_len), &pkt[20..]);
    match session.mode {
        ProbeMode::Paris => {
            // Steer the checksum onto probe_id: the first two payload
            // octets absorb the difference.
            let slot = ones_sub(!probe_id, checksum_fold(base));
            pkt[28..30].copy_from_slice(&slot.to_be_bytes());
            pkt[26..28].copy_from_slice(&probe_id.to_be_bytes());
        }
        ProbeMode::Classic => {
            // Natural checksum; a computed zero is transmitted as 0xFFFF.
            let ck = !checksum_fold(base);
            let ck = if ck == 0 { 0xFFFF } else { ck };
            pkt[26..28].copy_from_slice(&ck.to_be_bytes());
        }
    }
    finish(session, pkt, ttl, probe_id)
}

pub fn craft_icmp_probe(session: &ProbeSession, probe_index: u32, ttl: u8) -> Result<ProbePacket, WireError> {
    if ttl == 0 {
        return Err(WireError::InvalidTtl);
    }
    let probe_id = probe_id_wrapping(probe_index);
    let total_len = 28u16;
    let ip_id = match session.mode {
        ProbeMode::Classic => probe_id,
        ProbeMode::Paris => session.session_id,
    };
    let (ident, seq) = match session.mode {
        // Sequence carries the identifier in both modes; paris solves
        // the Identifier so Identifier + Sequence is a one's-complement
        // constant and the checksum never changes.
        ProbeMode::Classic => (session.session_id, probe_id),
        ProbeMode::Paris => (ones_sub(session.session_id, probe_id), probe_id),
    };

    let mut pkt = Vec::with_capacity(total_len as usize);
    pkt.extend_from_slice(&ipv4_header(session.tos, total_len, ip_id, ttl, Protocol::Icmp, session.src_addr, session.dst_addr));
    pkt.push(8); // echo request
    pkt.push(0);
    pkt.extend_from_slice(&[0, 0]);
    pkt.extend_from_slice(&ident.to_be_bytes());
    pkt.extend_from_slice(&seq.to_be_bytes());
    let ck = internet_checksum(&pkt[20..]);
    pkt[22..24].copy_from_slice(&ck.to_be_bytes());
    finish(session, pkt, ttl, probe_id)
}

pub fn craft_tcp_probe(session: &ProbeSession, probe_index: u32, ttl: u8) -> Result<ProbePacket, WireError> {
    if ttl == 0 {
        return Err(WireError::InvalidTtl);
    }
    if session.mode == ProbeMode::Classic {
        return Err(WireError::UnsupportedCombination("tcp probes are paris-only"));
    }
    let probe_id = probe_id_wrapping(probe_index);
    let seq32 = ((session.session_id as u32) << 16) | probe_id as u32;
    let total_len = 40u16;

    let mut pkt = Vec::with_capacity(total_len as usize);
    pkt.extend_from_slice(&ipv4_header(session.tos, total_len, session.session_id, ttl, Protocol::Tcp, session.src_addr, session.dst_addr));
    pkt.extend_from_slice(&session.src_port.to_be_bytes());
    pkt.extend_from_slice(&session.dst_port.to_be_bytes());
    pkt.extend_from_slice(&seq32.to_be_bytes());
    pkt.extend_from_slice(&[0, 0, 0, 0]); // ack
    pkt.push(0x50); // data offset 5
    pkt.push(0x02); // SYN
    pkt.extend_from_slice(&0xFFFFu16.to_be_bytes()); // window
    pkt.extend_from_slice(&[0, 0]); // checksum
    pkt.extend_from_slice(&[0, 0]); // urgent
    let sum = checksum_partial(pseudo_header_sum(session.src_addr, session.dst_addr, Protocol::Tcp, 20), &pkt[20..]);
    let ck = !checksum_fold(sum);
    pkt[36..38].copy_from_slice(&ck.to_be_bytes());
    finish(session, pkt, ttl, probe_id)
}
