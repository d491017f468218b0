//! Flow identity: the header fields a per-flow load balancer may hash.
//!
//! For UDP and TCP that is the classic five-tuple plus TOS. ICMP has no
//! ports, so balancers fall back to the ICMP Code and Checksum fields
//! (the Type field is deliberately not part of the key). Keeping a
//! probe sequence constant on this key is what "one flow" means
//! throughout the crate.

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::WireError;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Udp,
    Tcp,
    Icmp,
}

impl Protocol {
    pub fn number(self) -> u8 {
        match self {
            Protocol::Icmp => 1,
            Protocol::Tcp => 6,
            Protocol::Udp => 17,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Protocol::Icmp),
            6 => Some(Protocol::Tcp),
            17 => Some(Protocol::Udp),
            _ => None,
        }
    }
}

/// The protocol-specific half of a flow key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum TransportPart {
    Ports { src_port: u16, dst_port: u16 },
    Icmp { code: u8, checksum: u16 },
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FlowKey {
    pub src_addr: Ipv4Addr,
    pub dst_addr: Ipv4Addr,
    pub protocol: Protocol,
    pub tos: u8,
    pub transport: TransportPart,
}

/// One hashable field of a flow key, for configuring which fields a
/// simulated balancer looks at.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowField {
    SrcAddr,
    DstAddr,
    Protocol,
    Tos,
    SrcPort,
    DstPort,
    IcmpCode,
    IcmpChecksum,
}

impl FlowField {
    pub const ALL: [FlowField; 8] = [
        FlowField::SrcAddr,
        FlowField::DstAddr,
        FlowField::Protocol,
        FlowField::Tos,
        FlowField::SrcPort,
        FlowField::DstPort,
        FlowField::IcmpCode,
        FlowField::IcmpChecksum,
    ];
}

impl FlowKey {
    /// Append the bytes of one field, if the field exists for this
    /// protocol. Fields of the other transport contribute nothing.
    pub fn field_bytes(&self, field: FlowField, out: &mut Vec<u8>) {
        match (field, self.transport) {
            (FlowField::SrcAddr, _) => out.extend_from_slice(&self.src_addr.octets()),
            (FlowField::DstAddr, _) => out.extend_from_slice(&self.dst_addr.octets()),
            (FlowField::Protocol, _) => out.push(self.protocol.number()),
            (FlowField::Tos, _) => out.push(self.tos),
            (FlowField::SrcPort, TransportPart::Ports { src_port, .. }) => {
                out.extend_from_slice(&src_port.to_be_bytes())
            }
            (FlowField::DstPort, TransportPart::Ports { dst_port, .. }) => {
                out.extend_from_slice(&dst_port.to_be_bytes())
            }
            (FlowField::IcmpCode, TransportPart::Icmp { code, .. }) => out.push(code),
            (FlowField::IcmpChecksum, TransportPart::Icmp { checksum, .. }) => {
                out.extend_from_slice(&checksum.to_be_bytes())
            }
            _ => {}
        }
    }
}

/// Read the flow key out of a raw IPv4 datagram. Works on full packets
/// and on the 28-octet quotes inside ICMP errors, which carry exactly
/// the IP header plus the first 8 transport octets.
pub fn extract_flow_key(octets: &[u8]) -> Result<FlowKey, WireError> {
    if octets.len() < 20 {
        return Err(WireError::Truncated { needed: 20, got: octets.len() });
    }
    if octets[0] != 0x45 {
        return Err(WireError::UnsupportedHeader(octets[0]));
    }
    let tos = octets[1];
    let protocol = Protocol::from_number(octets[9]).ok_or(WireError::UnsupportedProtocol(octets[9]))?;
    let src_addr = Ipv4Addr::new(octets[12], octets[13], octets[14], octets[15]);
    let dst_addr = Ipv4Addr::new(octets[16], octets[17], octets[18], octets[19]);
    let t = &octets[20..];
    let transport = match protocol {
        Protocol::Udp | Protocol::Tcp => {
            if t.len() < 4 {
                return Err(WireError::Truncated { needed: 24, got: octets.len() });
            }
            TransportPart::Ports {
                src_port: u16::from_be_bytes([t[0], t[1]]),
                dst_port: u16::from_be_bytes([t[2], t[3]]),
            }
        }
        Protocol::Icmp => {
            if t.len() < 4 {
                return Err(WireError::Truncated { needed: 24, got: octets.len() });
            }
            TransportPart::Icmp {
                code: t[1],
                checksum: u16::from_be_bytes([t[2], t[3]]),
            }
        }
    };
    Ok(FlowKey { src_addr, dst_addr, protocol, tos, transport })
}

// The stored form spells out both transport variants as optional
// columns so trace files stay greppable and tolerant of unknown keys.
#[derive(Serialize, Deserialize)]
struct FlowKeyWire {
    src_addr: Ipv4Addr,
    dst_addr: Ipv4Addr,
    protocol: Protocol,
    tos: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    src_port: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dst_port: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    icmp_code: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    icmp_checksum: Option<u16>,
}

impl Serialize for FlowKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut w = FlowKeyWire {
            src_addr: self.src_addr,
            dst_addr: self.dst_addr,
            protocol: self.protocol,
            tos: self.tos,
            src_port: None,
            dst_port: None,
            icmp_code: None,
            icmp_checksum: None,
        };
        match self.transport {
            TransportPart::Ports { src_port, dst_port } => {
                w.src_port = Some(src_port);
                w.dst_port = Some(dst_port);
            }
            TransportPart::Icmp { code, checksum } => {
                w.icmp_code = Some(code);
                w.icmp_checksum = Some(checksum);
            }
        }
        w.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FlowKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = FlowKeyWire::deserialize(d)?;
        let transport = match w.protocol {
            Protocol::Udp | Protocol::Tcp => match (w.src_port, w.dst_port) {
                (Some(s), Some(dp)) => TransportPart::Ports { src_port: s, dst_port: dp },
                _ => return Err(serde::de::Error::custom("port fields required for udp/tcp flow")),
            },
            Protocol::Icmp => match (w.icmp_code, w.icmp_checksum) {
                (Some(c), Some(k)) => TransportPart::Icmp { code: c, checksum: k },
                _ => return Err(serde::de::Error::custom("icmp_code/icmp_checksum required for icmp flow")),
            },
        };
        Ok(FlowKey {
            src_addr: w.src_addr,
            dst_addr: w.dst_addr,
            protocol: w.protocol,
            tos: w.tos,
            transport,
        })
    }
}
