//! Matching responses back to the probes that caused them.
//!
//! Quoting responses identify their probe through the identifiers the
//! crafting discipline hid in the quote; Echo Replies carry no quote
//! and are matched through the Identifier/Sequence pair they mirror.
//! Responses from other people's traffic, damaged quotes, and repeats
//! are counted but never matched twice — the first answer wins.

use std::collections::HashMap;

use crate::wire::{ProbeMode, ProbePacket, Protocol, ResponseInfo};

#[derive(Clone, Copy, Debug)]
pub struct ProbeMeta {
    pub probe_id: u16,
    pub ttl: u8,
    pub slot: u32,
    pub sent_at: u64,
    /// Out-of-band probe (not part of the hop table).
    pub scout: bool,
}

pub struct MatchTable {
    session_id: u16,
    mode: ProbeMode,
    protocol: Protocol,
    metas: Vec<ProbeMeta>,
    by_probe_id: HashMap<u16, usize>,
    by_echo: HashMap<(u16, u16), usize>,
    answered: Vec<bool>,
    /// Responses that matched a probe already answered.
    pub duplicates: u64,
    /// Parseable responses that did not belong to this session.
    pub foreign: u64,
}

impl MatchTable {
    pub fn new(session_id: u16, mode: ProbeMode, protocol: Protocol) -> Self {
        MatchTable {
            session_id,
            mode,
            protocol,
            metas: Vec::new(),
            by_probe_id: HashMap::new(),
            by_echo: HashMap::new(),
            answered: Vec::new(),
            duplicates: 0,
            foreign: 0,
        }
    }

    pub fn register(&mut self, packet: &ProbePacket, ttl: u8, slot: u32, sent_at: u64, scout: bool) {
        let idx = self.metas.len();
        self.metas.push(ProbeMeta { probe_id: packet.probe_id, ttl, slot, sent_at, scout });
        self.answered.push(false);
        self.by_probe_id.insert(packet.probe_id, idx);
        if let Some(ids) = packet.icmp_echo_ids() {
            self.by_echo.insert(ids, idx);
        }
    }

    pub fn is_answered(&self, probe_id: u16) -> bool {
        self.by_probe_id
            .get(&probe_id)
            .map(|&i| self.answered[i])
            .unwrap_or(false)
    }

    /// Match a parsed response. Returns the probe it answers and
    /// whether that probe had already been answered (in which case the
    /// caller should keep the first observation).
    pub fn match_response(&mut self, info: &ResponseInfo) -> Option<(ProbeMeta, bool)> {
        let idx = if let Some(ids) = info.echo {
            match self.by_echo.get(&ids) {
                Some(&i) => i,
                None => {
                    self.foreign += 1;
                    return None;
                }
            }
        } else {
            let Some(quote) = &info.quote else {
                self.foreign += 1;
                return None;
            };
            if quote.protocol != self.protocol
                || quote.session_id != Some(self.session_id)
                || quote.probe_id.is_none()
            {
                self.foreign += 1;
                return None;
            }
            match self.by_probe_id.get(&quote.probe_id.unwrap()) {
                Some(&i) => i,
                None => {
                    self.foreign += 1;
                    return None;
                }
            }
        };
        let duplicate = self.answered[idx];
        self.answered[idx] = true;
        if duplicate {
            self.duplicates += 1;
        }
        Some((self.metas[idx], duplicate))
    }

    /// Layout hint for parsing incoming responses.
    pub fn mode(&self) -> ProbeMode {
        self.mode
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::{
        build_echo_reply, build_time_exceeded, craft_icmp_probe, craft_udp_probe,
        internet_checksum, parse_time_exceeded, ProbeSession,
    };
    use std::net::Ipv4Addr;

    fn as_received(mut octets: Vec<u8>, ttl: u8) -> Vec<u8> {
        octets[8] = ttl;
        octets[10] = 0;
        octets[11] = 0;
        let ck = internet_checksum(&octets[..20]);
        octets[10..12].copy_from_slice(&ck.to_be_bytes());
        octets
    }

    fn udp_session() -> ProbeSession {
        ProbeSession::seeded(
            ProbeMode::Paris,
            Protocol::Udp,
            Ipv4Addr::new(192, 0, 2, 1),
            Ipv4Addr::new(198, 51, 100, 7),
            7,
        )
    }

    #[test]
    fn matches_quoted_probe_and_flags_duplicates() {
        let s = udp_session();
        let mut table = MatchTable::new(s.session_id, s.mode, s.protocol);
        let p = craft_udp_probe(&s, 4, 5).unwrap();
        table.register(&p, 5, 0, 100, false);

        let te = build_time_exceeded(
            Ipv4Addr::new(10, 0, 0, 5),
            s.src_addr,
            250,
            1,
            &as_received(p.octets.clone(), 1),
        );
        let info = parse_time_exceeded(&te, Some(s.mode)).unwrap();

        let (meta, dup) = table.match_response(&info).unwrap();
        assert!(!dup);
        assert_eq!(meta.ttl, 5);
        assert_eq!(meta.sent_at, 100);
        assert!(table.is_answered(p.probe_id));

        let (_, dup) = table.match_response(&info).unwrap();
        assert!(dup);
        assert_eq!(table.duplicates, 1);
    }

    #[test]
    fn foreign_sessions_rejected() {
        let s = udp_session();
        let other = ProbeSession::seeded(s.mode, s.protocol, s.src_addr, s.dst_addr, 999);
        assert_ne!(s.session_id, other.session_id);

        let mut table = MatchTable::new(s.session_id, s.mode, s.protocol);
        let mine = craft_udp_probe(&s, 0, 3).unwrap();
        table.register(&mine, 3, 0, 0, false);

        let theirs = craft_udp_probe(&other, 0, 3).unwrap();
        let te = build_time_exceeded(
            Ipv4Addr::new(10, 0, 0, 3),
            s.src_addr,
            250,
            1,
            &as_received(theirs.octets, 1),
        );
        let info = parse_time_exceeded(&te, Some(s.mode)).unwrap();
        assert!(table.match_response(&info).is_none());
        assert_eq!(table.foreign, 1);
        assert!(!table.is_answered(mine.probe_id));
    }

    #[test]
    fn unknown_probe_id_rejected() {
        let s = udp_session();
        let mut table = MatchTable::new(s.session_id, s.mode, s.protocol);
        let unsent = craft_udp_probe(&s, 9, 3).unwrap();
        let te = build_time_exceeded(
            Ipv4Addr::new(10, 0, 0, 3),
            s.src_addr,
            250,
            1,
            &as_received(unsent.octets, 1),
        );
        let info = parse_time_exceeded(&te, Some(s.mode)).unwrap();
        assert!(table.match_response(&info).is_none());
        assert_eq!(table.foreign, 1);
    }

    #[test]
    fn echo_replies_match_by_mirrored_ids() {
        let s = ProbeSession::seeded(
            ProbeMode::Paris,
            Protocol::Icmp,
            Ipv4Addr::new(192, 0, 2, 1),
            Ipv4Addr::new(198, 51, 100, 7),
            7,
        );
        let mut table = MatchTable::new(s.session_id, s.mode, s.protocol);
        let p = craft_icmp_probe(&s, 63, 64).unwrap();
        table.register(&p, 64, 0, 42, true);

        let (ident, seq) = p.icmp_echo_ids().unwrap();
        let reply = build_echo_reply(s.dst_addr, s.src_addr, 60, 5, ident, seq);
        let info = parse_time_exceeded(&reply, Some(s.mode)).unwrap();
        let (meta, dup) = table.match_response(&info).unwrap();
        assert!(!dup);
        assert!(meta.scout);
        assert_eq!(meta.probe_id, 64);

        // A reply with ids nobody sent is foreign.
        let stray = build_echo_reply(s.dst_addr, s.src_addr, 60, 6, ident ^ 1, seq);
        let info = parse_time_exceeded(&stray, Some(s.mode)).unwrap();
        assert!(table.match_response(&info).is_none());
        assert_eq!(table.foreign, 1);
    }
}
