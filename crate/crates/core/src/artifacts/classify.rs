//! Per-finding cause classification: which router pathology explains a
//! loop or cycle, judged from the evidence inside the routes
//! themselves — quoted TTLs, response TTLs, stop reasons, and IP
//! Identification counters.

use std::net::Ipv4Addr;

use crate::structures::{CycleFinding, LoopFinding, SeqRoute};
use crate::tracestore::{MeasuredRoute, StopReason};

use super::{ArtifactCause, CounterVerdict};

/// Consecutive IP Identification samples of a genuinely revisited
/// router must sit within this forward window (mod 2^16).
pub const IP_ID_DELTA_WINDOW: u16 = 1024;

/// First responding probe for `addr` at 1-based sequence position
/// `pos` (position 0 is the measuring host and has no probes).
fn probe_at<'r>(
    route: &'r MeasuredRoute,
    pos: usize,
    addr: Ipv4Addr,
) -> Option<&'r crate::tracestore::ProbeObservation> {
    let hop = route.hops.get(pos.checked_sub(1)?)?;
    hop.probes.iter().find(|p| p.addr == Some(addr))
}

/// Positions (sequence coordinates) where `addr` answered in `route`.
fn positions_of(route: &MeasuredRoute, addr: Ipv4Addr) -> Vec<usize> {
    SeqRoute::from_route(route)
        .seq
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, a)| **a == Some(addr))
        .map(|(p, _)| p)
        .collect()
}

/// Count loop instances carrying the forwarded-at-TTL-zero signature:
/// some probe inside the run was quoted with a TTL of 0, meaning the
/// hop before the responder decremented to zero and forwarded anyway.
/// Returns (explained, total).
pub fn zero_ttl_instances(finding: &LoopFinding, routes: &[&MeasuredRoute]) -> (usize, usize) {
    let explained = finding
        .instances
        .iter()
        .filter(|inst| {
            let route = routes[inst.route_index];
            (inst.start..=inst.start + inst.order).any(|pos| {
                probe_at(route, pos, finding.addr).is_some_and(|p| p.probe_ttl == Some(0))
            })
        })
        .count();
    (explained, finding.instances.len())
}

/// Every instance of the loop shows the forwarded-at-TTL-zero
/// signature.
pub fn classify_zero_ttl(finding: &LoopFinding, routes: &[&MeasuredRoute]) -> bool {
    let (explained, total) = zero_ttl_instances(finding, routes);
    total > 0 && explained == total
}

/// Count loop instances that are measurement interruptions: the run
/// ends exactly where the trace was cut off by a non-destination
/// unreachable. Returns (explained, total).
pub fn interrupted_instances(finding: &LoopFinding, routes: &[&MeasuredRoute]) -> (usize, usize) {
    let explained = finding
        .instances
        .iter()
        .filter(|inst| {
            let route = routes[inst.route_index];
            route.stop_reason == StopReason::OtherIcmp
                && inst.start + inst.order == route.hops.len()
        })
        .count();
    (explained, finding.instances.len())
}

pub fn classify_interrupted(finding: &LoopFinding, routes: &[&MeasuredRoute]) -> bool {
    let (explained, total) = interrupted_instances(finding, routes);
    total > 0 && explained == total
}

/// Response TTLs across a run of positions, one representative per
/// position; `None` when any position lacks one.
fn run_response_ttls(
    route: &MeasuredRoute,
    addr: Ipv4Addr,
    positions: impl Iterator<Item = usize>,
) -> Option<Vec<u8>> {
    positions
        .map(|pos| probe_at(route, pos, addr).and_then(|p| p.response_ttl))
        .collect()
}

/// Count loop instances whose response TTLs strictly decrease across
/// the run — the masquerade signature: distinct boxes at increasing
/// distances all answering from one borrowed address. A router
/// genuinely answering twice sits at one distance and returns equal
/// TTLs. Returns (signature, assessable, total).
pub fn fake_instances(finding: &LoopFinding, routes: &[&MeasuredRoute]) -> (usize, usize, usize) {
    let mut signature = 0;
    let mut assessable = 0;
    for inst in &finding.instances {
        let route = routes[inst.route_index];
        let Some(ttls) =
            run_response_ttls(route, finding.addr, inst.start..=inst.start + inst.order)
        else {
            continue;
        };
        assessable += 1;
        if ttls.windows(2).all(|w| w[0] > w[1]) {
            signature += 1;
        }
    }
    (signature, assessable, finding.instances.len())
}

pub fn classify_fake(finding: &LoopFinding, routes: &[&MeasuredRoute]) -> bool {
    let (signature, assessable, _) = fake_instances(finding, routes);
    assessable > 0 && signature == assessable
}

/// Why this loop is in the data, judged from route-level evidence
/// alone. Flow-dependent balancing is attributed separately, by
/// comparing against a constant-flow measurement of the same
/// destinations.
pub fn loop_cause(finding: &LoopFinding, routes: &[&MeasuredRoute]) -> ArtifactCause {
    if classify_zero_ttl(finding, routes) {
        ArtifactCause::ZeroTtl
    } else if classify_interrupted(finding, routes) {
        ArtifactCause::Interrupted
    } else if classify_fake(finding, routes) {
        ArtifactCause::Fake
    } else {
        ArtifactCause::Unknown
    }
}

/// Check a cycle against the responder's IP Identification counter. A
/// packet caught in a real forwarding loop revisits one router, whose
/// counter ticks up only slightly between visits; masqueraded
/// lookalikes keep independent counters that land far apart.
///
/// Routes contribute when the address yields at least two non-constant,
/// not-all-zero samples. One out-of-window delta refutes the cycle;
/// all-in-window across every usable route confirms it; no usable
/// route leaves the counter check unavailable.
pub fn verify_routing_cycle(finding: &CycleFinding, routes: &[&MeasuredRoute]) -> CounterVerdict {
    let mut usable = 0;
    for inst in &finding.instances {
        let route = routes[inst.route_index];
        let ids: Vec<u16> = positions_of(route, finding.addr)
            .into_iter()
            .filter_map(|pos| probe_at(route, pos, finding.addr).and_then(|p| p.ip_id))
            .collect();
        if ids.len() < 2 || ids.iter().all(|&i| i == 0) || ids.windows(2).all(|w| w[0] == w[1]) {
            continue;
        }
        usable += 1;
        for w in ids.windows(2) {
            if w[1].wrapping_sub(w[0]) > IP_ID_DELTA_WINDOW {
                return CounterVerdict::Refuted;
            }
        }
    }
    if usable == 0 {
        CounterVerdict::CounterUnavailable
    } else {
        CounterVerdict::Confirmed
    }
}

/// Count cycle instances that are measurement interruptions: the
/// address's final appearance is the hop where a non-destination
/// unreachable stopped the trace. Returns (explained, total).
pub fn interrupted_cycle_instances(
    finding: &CycleFinding,
    routes: &[&MeasuredRoute],
) -> (usize, usize) {
    let explained = finding
        .instances
        .iter()
        .filter(|inst| {
            let route = routes[inst.route_index];
            route.stop_reason == StopReason::OtherIcmp
                && positions_of(route, finding.addr).last() == Some(&route.hops.len())
        })
        .count();
    (explained, finding.instances.len())
}

pub fn classify_cycle_interrupted(finding: &CycleFinding, routes: &[&MeasuredRoute]) -> bool {
    let (explained, total) = interrupted_cycle_instances(finding, routes);
    total > 0 && explained == total
}

/// Why this cycle is in the data. Response TTLs cannot separate a real
/// forwarding loop from masquerading here — both lengthen the return
/// path — so the verdict hangs on the counter check.
pub fn cycle_cause(finding: &CycleFinding, routes: &[&MeasuredRoute]) -> ArtifactCause {
    if classify_cycle_interrupted(finding, routes) {
        return ArtifactCause::Interrupted;
    }
    match verify_routing_cycle(finding, routes) {
        CounterVerdict::Confirmed => ArtifactCause::RoutingCycle,
        CounterVerdict::Refuted => ArtifactCause::Fake,
        CounterVerdict::CounterUnavailable => ArtifactCause::Unknown,
    }
}
