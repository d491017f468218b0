//! Route tracing with controlled probe headers, plus the analysis and
//! simulation machinery to study what per-flow load balancing does to
//! traceroute output.
//!
//! The crate is organized around the life of a measurement:
//!
//! * [`wire`] crafts probes whose identifiers survive the trip into an
//!   ICMP quote, in both the classic discipline (per-probe header
//!   variation) and the constant-flow discipline.
//! * [`probing`] drives a trace over any [`probing::Transport`].
//! * [`tracestore`] holds measured routes and reads/writes them as
//!   JSON Lines.
//! * [`structures`] finds loops, cycles, and diamonds in stored routes.
//! * [`artifacts`] classifies those findings by probable cause and
//!   compares datasets gathered with different probing disciplines.
//! * [`simnet`] is a deterministic network simulator with configurable
//!   load balancing and pathological router behaviors, usable as a
//!   drop-in transport.

pub mod artifacts;
pub mod probing;
pub mod simnet;
pub mod structures;
pub mod tracestore;
pub mod util;
pub mod wire;

pub use artifacts::{compare_datasets, summarize, ArtifactCause, ArtifactSummary, Comparison};
pub use probing::{run_trace, Strategy, TraceConfig, Transport};
pub use simnet::{load_topology, SimTransport, Simulation, Topology};
pub use tracestore::{Dataset, HopRecord, MeasuredRoute, ProbeObservation, StopReason};
pub use wire::{FlowKey, ProbeMode, ProbePacket, ProbeSession, Protocol};
