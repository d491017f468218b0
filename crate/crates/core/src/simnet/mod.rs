//! A deterministic network simulator for exercising the tracer against
//! known ground truth: per-flow, per-packet, and per-destination load
//! balancers, routers that forward expired packets, masqueraded
//! response addresses, probabilistic unreachables, scheduled routing
//! changes, and silent boxes.
//!
//! Determinism is the point: every balancing decision, unreachable
//! draw, and IP Identification value is a seeded hash or counter, so a
//! (topology, seed) pair plus an injection sequence always reproduces
//! the same measurements, byte for byte.

mod sim;
pub mod topology;
mod transport;

pub use sim::{
    per_destination_index, per_flow_index, ForwardingDecision, SimError, Simulation,
    DEST_HASH_SALT, FLOW_HASH_SALT, IPID_SALT, UNREACHABLE_SALT,
};
pub use topology::{
    load_topology, BalancerConfig, HostSpec, IpIdMode, RouterSpec, ScheduleSpec, Topology,
    TopologyError, UnreachableSpec,
};
pub use transport::SimTransport;
