//! Detectors for the shapes that load balancing and router pathologies
//! print into measured routes: loops (one address repeated at adjacent
//! hops), cycles (an address returning after other hops, possibly
//! periodically), and diamonds (alternative middles between a shared
//! head and tail). Plus exact probability helpers quantifying how
//! likely such shapes are under balanced forwarding.
//!
//! All detectors work on *address sequences*: position 0 is the
//! measuring host itself, position k the answer at TTL k, `None` a
//! star. Detectors are deterministic — outputs are sorted.

mod cycles;
mod diamonds;
mod loops;
mod probability;

use std::net::Ipv4Addr;

pub use cycles::{
    dominant_periodic_run, find_cycles, find_periodic_runs, CycleFinding, CycleInstance,
    PeriodicRun,
};
pub use diamonds::{find_diamonds, DiamondFinding};
pub use loops::{find_loops, LoopClass, LoopFinding, LoopInstance};
pub use probability::{
    binomial, identical_path_probability, missing_router_probability, surjection_count,
};

use crate::tracestore::MeasuredRoute;

/// One route reduced to the address sequence the detectors consume.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqRoute {
    pub round: u32,
    pub seq: Vec<Option<Ipv4Addr>>,
}

impl SeqRoute {
    pub fn new(round: u32, seq: Vec<Option<Ipv4Addr>>) -> Self {
        SeqRoute { round, seq }
    }

    /// Sequence with the measuring host prepended at position 0, so
    /// shapes involving the first hop are visible too.
    pub fn from_route(route: &MeasuredRoute) -> Self {
        let mut seq = Vec::with_capacity(route.hops.len() + 1);
        seq.push(Some(route.flow.src_addr));
        seq.extend(route.hops.iter().map(|h| h.addr()));
        SeqRoute { round: route.round, seq }
    }
}

pub fn sequences_for(routes: &[&MeasuredRoute]) -> Vec<SeqRoute> {
    routes.iter().map(|r| SeqRoute::from_route(r)).collect()
}
