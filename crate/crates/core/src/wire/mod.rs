//! Packet-level machinery: one's-complement checksums, flow keys as
//! load balancers compute them, probe crafting in both the classic and
//! constant-flow disciplines, and ICMP response parsing.

mod checksum;
mod flow;
mod probe;
mod response;

pub use checksum::{checksum_fold, checksum_partial, checksum_verifies, internet_checksum, ones_add, ones_sub};
pub use flow::{extract_flow_key, FlowField, FlowKey, Protocol, TransportPart};
pub use probe::{
    craft_icmp_probe, craft_tcp_probe, craft_udp_probe, ipv4_header, ProbeMode, ProbePacket,
    ProbeSession, CLASSIC_BASE_PORT,
};
pub use response::{
    build_dest_unreachable, build_echo_reply, build_source_quench, build_time_exceeded,
    estimate_return_path_len, parse_time_exceeded, QuotedProbe, ResponseInfo, DEST_UNREACHABLE,
    ECHO_REPLY, QUOTE_LIMIT, SOURCE_QUENCH, TIME_EXCEEDED,
};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WireError {
    #[error("packet truncated: need {needed} octets, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("unsupported IP header (version/IHL octet {0:#04x}, expected 0x45)")]
    UnsupportedHeader(u8),
    #[error("unsupported transport protocol {0}")]
    UnsupportedProtocol(u8),
    #[error("expected an ICMP packet, found protocol {0}")]
    NotIcmp(u8),
    #[error("unsupported ICMP type {0}")]
    UnsupportedIcmpType(u8),
    #[error("probe index {0} leaves the usable identifier range [1, 0xFFFE]")]
    ProbeIdRange(u32),
    #[error("UDP payload too short: need {min} octets, got {got}")]
    PayloadTooShort { min: u16, got: u16 },
    #[error("probes need a TTL of at least 1")]
    InvalidTtl,
    #[error("{0}")]
    UnsupportedCombination(&'static str),
}
