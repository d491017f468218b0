//! Explaining measurement artifacts.
//!
//! Route structures that look like forwarding anomalies — loops,
//! cycles, diamonds — usually are not. This module assigns each
//! finding a cause by combining two kinds of evidence:
//!
//! * **Cross-tool comparison** ([`compare_datasets`]): artifacts that
//!   vanish when the same destinations are probed with constant flow
//!   identifiers were manufactured by flow-sensitive load balancing.
//! * **Route-level evidence** ([`loop_cause`], [`cycle_cause`]): quoted
//!   zero TTLs betray routers that forward expired packets,
//!   unreachable-terminated routes betray interrupted measurements,
//!   response-TTL and IP-ID counter patterns separate genuine
//!   forwarding cycles from address masquerading.
//!
//! [`summarize`] merges both into one table of exact per-cause shares.

mod classify;
mod compare;
mod report;

use serde::{Deserialize, Serialize};

pub use classify::{
    classify_cycle_interrupted, classify_fake, classify_interrupted, classify_zero_ttl,
    cycle_cause, fake_instances, interrupted_cycle_instances, interrupted_instances, loop_cause,
    verify_routing_cycle, zero_ttl_instances, IP_ID_DELTA_WINDOW,
};
pub use compare::{compare_datasets, compare_findings, detect_findings, Comparison, Findings, KindDiff};
pub use report::{percent_cells, summarize, ArtifactKind, ArtifactSummary, SummaryRow};

/// Why an artifact appeared in the measured routes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactCause {
    /// Manufactured by per-flow load balancing reacting to varying
    /// probe headers; disappears under constant-flow probing.
    PerFlow,
    /// A router forwarded the probe with TTL already zero, shifting
    /// blame for the expiry one hop downstream.
    ZeroTtl,
    /// The measurement stopped early (unreachable en route), cutting
    /// the structure off rather than observing it.
    Interrupted,
    /// The repeated address is an impostor: evidence says the probes
    /// expired at different routers that answered with one address.
    Fake,
    /// The packets genuinely revisited the same router: a forwarding
    /// loop in the network itself.
    RoutingCycle,
    /// No route-level evidence either way.
    Unknown,
}

impl ArtifactCause {
    pub const ALL: [ArtifactCause; 6] = [
        ArtifactCause::PerFlow,
        ArtifactCause::ZeroTtl,
        ArtifactCause::Interrupted,
        ArtifactCause::Fake,
        ArtifactCause::RoutingCycle,
        ArtifactCause::Unknown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArtifactCause::PerFlow => "per_flow",
            ArtifactCause::ZeroTtl => "zero_ttl",
            ArtifactCause::Interrupted => "interrupted",
            ArtifactCause::Fake => "fake",
            ArtifactCause::RoutingCycle => "routing_cycle",
            ArtifactCause::Unknown => "unknown",
        }
    }
}

/// Outcome of checking a cycle against the responder's IP-ID counter.
///
/// A router that stamps responses from one shared counter emits nearby
/// IDs for probes answered moments apart. If the "two" routers of a
/// cycle show counter continuity, they are one router ([`Confirmed`]:
/// a real forwarding cycle). Wildly divergent counters refute that
/// ([`Refuted`]: distinct routers sharing an address). Routers that
/// zero the field or never quote it leave the check inconclusive.
///
/// [`Confirmed`]: CounterVerdict::Confirmed
/// [`Refuted`]: CounterVerdict::Refuted
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CounterVerdict {
    Confirmed,
    Refuted,
    CounterUnavailable,
}
