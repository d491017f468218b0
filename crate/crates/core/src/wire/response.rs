//! ICMP responses: building them (for the simulator and tests) and
//! parsing them back into probe identities.
//!
//! Routers quote the offending packet's IP header plus its first 8
//! transport octets — 28 octets — inside Time Exceeded, Destination
//! Unreachable, and Source Quench messages. Those 8 octets are exactly
//! where probes hide their identifiers, so a response can be matched to
//! the probe that caused it even when every probe shares one flow.

use std::net::Ipv4Addr;

use super::checksum::{checksum_verifies, internet_checksum};
use super::flow::{extract_flow_key, FlowKey, Protocol};
use super::probe::{ipv4_header, ProbeMode, CLASSIC_BASE_PORT};
use super::WireError;

pub const TIME_EXCEEDED: u8 = 11;
pub const DEST_UNREACHABLE: u8 = 3;
pub const SOURCE_QUENCH: u8 = 4;
pub const ECHO_REPLY: u8 = 0;

/// How many octets of the offending packet a router quotes back.
pub const QUOTE_LIMIT: usize = 28;

/// What could be recovered from the quoted packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuotedProbe {
    /// The probe's TTL as it arrived at the responder — normally 1 for
    /// Time Exceeded, but buggy predecessors can make it 0, and other
    /// values betray responses generated off-path.
    pub probe_ttl: u8,
    pub protocol: Protocol,
    pub ip_id: u16,
    pub probe_id: Option<u16>,
    pub session_id: Option<u16>,
    pub flow: Option<FlowKey>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResponseInfo {
    pub responder: Ipv4Addr,
    pub icmp_type: u8,
    pub icmp_code: u8,
    /// TTL of the response itself on arrival; distance to the
    /// responder's initial TTL ceiling hides in here.
    pub response_ttl: u8,
    /// IP Identification of the response itself (not the quote).
    pub ip_id: u16,
    /// Identifier/Sequence mirrored back by an Echo Reply.
    pub echo: Option<(u16, u16)>,
    pub quote: Option<QuotedProbe>,
    /// True when a quoting type carried fewer than the full 28 octets.
    pub quote_truncated: bool,
    /// Outer ICMP checksum verified.
    pub checksum_ok: bool,
}

fn build_icmp(
    src: Ipv4Addr,
    dst: Ipv4Addr,
    ttl: u8,
    ip_id: u16,
    icmp_type: u8,
    code: u8,
    rest: [u8; 4],
    body: &[u8],
) -> Vec<u8> {
    let total_len = (28 + body.len()) as u16;
    let mut pkt = Vec::with_capacity(total_len as usize);
    pkt.extend_from_slice(&ipv4_header(0, total_len, ip_id, ttl, Protocol::Icmp, src, dst));
    pkt.push(icmp_type);
    pkt.push(code);
    pkt.extend_from_slice(&[0, 0]);
    pkt.extend_from_slice(&rest);
    pkt.extend_from_slice(body);
    let ck = internet_checksum(&pkt[20..]);
    pkt[22..24].copy_from_slice(&ck.to_be_bytes());
    pkt
}

fn quoted(original: &[u8]) -> &[u8] {
    &original[..original.len().min(QUOTE_LIMIT)]
}

pub fn build_time_exceeded(src: Ipv4Addr, dst: Ipv4Addr, ttl: u8, ip_id: u16, original: &[u8]) -> Vec<u8> {
    build_icmp(src, dst, ttl, ip_id, TIME_EXCEEDED, 0, [0; 4], quoted(original))
}

pub fn build_dest_unreachable(
    src: Ipv4Addr,
    dst: Ipv4Addr,
    ttl: u8,
    ip_id: u16,
    code: u8,
    original: &[u8],
) -> Vec<u8> {
    build_icmp(src, dst, ttl, ip_id, DEST_UNREACHABLE, code, [0; 4], quoted(original))
}

pub fn build_source_quench(src: Ipv4Addr, dst: Ipv4Addr, ttl: u8, ip_id: u16, original: &[u8]) -> Vec<u8> {
    build_icmp(src, dst, ttl, ip_id, SOURCE_QUENCH, 0, [0; 4], quoted(original))
}

pub fn build_echo_reply(src: Ipv4Addr, dst: Ipv4Addr, ttl: u8, ip_id: u16, ident: u16, seq: u16) -> Vec<u8> {
    let mut rest = [0u8; 4];
    rest[0..2].copy_from_slice(&ident.to_be_bytes());
    rest[2..4].copy_from_slice(&seq.to_be_bytes());
    build_icmp(src, dst, ttl, ip_id, ECHO_REPLY, 0, rest, &[])
}

/// Parse a Time-Exceeded-family response (also Destination Unreachable,
/// Source Quench, and Echo Reply — everything a probe can elicit).
///
/// `layout` selects the identifier encoding used when the quoted probe
/// was crafted; `None` assumes the constant-flow layout. A wrong hint
/// yields wrong identifiers, not an error — quotes carry no mode marker.
pub fn parse_time_exceeded(octets: &[u8], layout: Option<ProbeMode>) -> Result<ResponseInfo, WireError> {
    if octets.len() < 20 {
        return Err(WireError::Truncated { needed: 20, got: octets.len() });
    }
    if octets[0] != 0x45 {
        return Err(WireError::UnsupportedHeader(octets[0]));
    }
    if octets[9] != Protocol::Icmp.number() {
        return Err(WireError::NotIcmp(octets[9]));
    }
    if octets.len() < 28 {
        return Err(WireError::Truncated { needed: 28, got: octets.len() });
    }
    let icmp_type = octets[20];
    if !matches!(icmp_type, TIME_EXCEEDED | DEST_UNREACHABLE | SOURCE_QUENCH | ECHO_REPLY) {
        return Err(WireError::UnsupportedIcmpType(icmp_type));
    }

    let responder = Ipv4Addr::new(octets[12], octets[13], octets[14], octets[15]);
    let response_ttl = octets[8];
    let ip_id = u16::from_be_bytes([octets[4], octets[5]]);
    let icmp_code = octets[21];
    let checksum_ok = checksum_verifies(&octets[20..]);

    let mut info = ResponseInfo {
        responder,
        icmp_type,
        icmp_code,
        response_ttl,
        ip_id,
        echo: None,
        quote: None,
        quote_truncated: false,
        checksum_ok,
    };

    if icmp_type == ECHO_REPLY {
        let ident = u16::from_be_bytes([octets[24], octets[25]]);
        let seq = u16::from_be_bytes([octets[26], octets[27]]);
        info.echo = Some((ident, seq));
        return Ok(info);
    }

    let q = &octets[28..];
    info.quote_truncated = q.len() < QUOTE_LIMIT;
    if q.len() < 20 || q[0] != 0x45 {
        return Ok(info);
    }
    let Some(protocol) = Protocol::from_number(q[9]) else {
        return Ok(info);
    };
    let probe_ttl = q[8];
    let quote_ip_id = u16::from_be_bytes([q[4], q[5]]);
    let full = q.len() >= QUOTE_LIMIT;
    let flow = if q.len() >= 24 { extract_flow_key(q).ok() } else { None };

    let (probe_id, session_id) = if !full {
        (None, None)
    } else {
        match (layout.unwrap_or(ProbeMode::Paris), protocol) {
            (ProbeMode::Paris, Protocol::Udp) => {
                // Identifier was steered into the UDP checksum field.
                let ck = u16::from_be_bytes([q[26], q[27]]);
                (Some(ck), Some(quote_ip_id))
            }
            (ProbeMode::Paris, Protocol::Icmp) => {
                let seq = u16::from_be_bytes([q[26], q[27]]);
                (Some(seq), Some(quote_ip_id))
            }
            (ProbeMode::Paris, Protocol::Tcp) => {
                let seq = u32::from_be_bytes([q[24], q[25], q[26], q[27]]);
                (Some((seq & 0xFFFF) as u16), Some(quote_ip_id))
            }
            (ProbeMode::Classic, Protocol::Udp) => {
                let src_port = u16::from_be_bytes([q[20], q[21]]);
                let dst_port = u16::from_be_bytes([q[22], q[23]]);
                (
                    Some(dst_port.wrapping_sub(CLASSIC_BASE_PORT - 1)),
                    Some(src_port.wrapping_sub(32768)),
                )
            }
            (ProbeMode::Classic, Protocol::Icmp) => {
                let ident = u16::from_be_bytes([q[24], q[25]]);
                let seq = u16::from_be_bytes([q[26], q[27]]);
                (Some(seq), Some(ident))
            }
            (ProbeMode::Classic, Protocol::Tcp) => (None, None),
        }
    };

    info.quote = Some(QuotedProbe {
        probe_ttl,
        protocol,
        ip_id: quote_ip_id,
        probe_id,
        session_id,
        flow,
    });
    Ok(info)
}

/// Guess how many hops a response travelled from the responder, assuming
/// it started at the nearest common initial-TTL ceiling (64, 128, 255)
/// at or above the observed TTL.
pub fn estimate_return_path_len(response_ttl: u8) -> u8 {
    let ceiling: u16 = if response_ttl <= 64 {
        64
    } else if response_ttl <= 128 {
        128
    } else {
        255
    };
    (ceiling - response_ttl as u16 + 1) as u8
}
