//! Loop detection: the same address occupying consecutive positions.
//!
//! An order-n loop is one address at n+1 consecutive positions. Only
//! maximal runs count (three B's in a row are one order-2 loop, not two
//! order-1 loops), and stars break runs. A finding groups every
//! occurrence of one (address, destination) pair and classifies it by
//! how the loop recurs across repeated measurements.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use num::rational::Ratio;
use serde::{Deserialize, Serialize};

use super::SeqRoute;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopClass {
    /// Present in (almost) every measurement of the destination.
    Persistent,
    /// Present whenever its address appears at all.
    Systematic,
    /// Seen only once or twice.
    Occasional,
    Other,
}

impl LoopClass {
    pub fn name(self) -> &'static str {
        match self {
            LoopClass::Persistent => "persistent",
            LoopClass::Systematic => "systematic",
            LoopClass::Occasional => "occasional",
            LoopClass::Other => "other",
        }
    }
}

/// One maximal run in one route.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoopInstance {
    /// Index of the route within the group handed to [`find_loops`].
    pub route_index: usize,
    pub round: u32,
    /// Position of the run's first element in the address sequence.
    pub start: usize,
    /// Repetitions beyond the first element (run length minus one).
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopFinding {
    pub addr: Ipv4Addr,
    pub destination: Ipv4Addr,
    pub instances: Vec<LoopInstance>,
    /// Routes in the group with at least one run at this address.
    pub routes_with_loop: usize,
    pub routes_to_destination: usize,
    /// Routes in the group where the address appears at all.
    pub routes_containing_addr: usize,
    pub max_order: usize,
    pub class: LoopClass,
}

impl LoopFinding {
    /// Fraction of the destination's routes that show the loop.
    pub fn appearance_ratio(&self) -> Ratio<usize> {
        Ratio::new(self.routes_with_loop, self.routes_to_destination)
    }

    /// Fraction of the routes containing the address that loop on it.
    pub fn conditional_ratio(&self) -> Ratio<usize> {
        Ratio::new(self.routes_with_loop, self.routes_containing_addr)
    }
}

fn classify(routes_with_loop: usize, routes_to_destination: usize, routes_containing_addr: usize) -> LoopClass {
    // appearance >= 0.95, in integers
    if 20 * routes_with_loop >= 19 * routes_to_destination {
        LoopClass::Persistent
    } else if routes_with_loop == routes_containing_addr {
        LoopClass::Systematic
    } else if routes_with_loop <= 2 {
        LoopClass::Occasional
    } else {
        LoopClass::Other
    }
}

/// Maximal same-address runs of length >= 2 in one sequence, as
/// (address, start, order).
fn runs(seq: &[Option<Ipv4Addr>]) -> Vec<(Ipv4Addr, usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < seq.len() {
        let Some(addr) = seq[i] else {
            i += 1;
            continue;
        };
        let mut j = i + 1;
        while j < seq.len() && seq[j] == Some(addr) {
            j += 1;
        }
        if j - i >= 2 {
            out.push((addr, i, j - i - 1));
        }
        i = j;
    }
    out
}

/// Find every loop in a group of routes measured toward one destination.
/// Results are sorted by address.
pub fn find_loops(destination: Ipv4Addr, routes: &[SeqRoute]) -> Vec<LoopFinding> {
    struct Acc {
        instances: Vec<LoopInstance>,
        routes_with_loop: usize,
        last_route: Option<usize>,
    }
    let mut by_addr: BTreeMap<Ipv4Addr, Acc> = BTreeMap::new();

    for (route_index, route) in routes.iter().enumerate() {
        for (addr, start, order) in runs(&route.seq) {
            let acc = by_addr.entry(addr).or_insert(Acc {
                instances: Vec::new(),
                routes_with_loop: 0,
                last_route: None,
            });
            if acc.last_route != Some(route_index) {
                acc.routes_with_loop += 1;
                acc.last_route = Some(route_index);
            }
            acc.instances.push(LoopInstance { route_index, round: route.round, start, order });
        }
    }

    by_addr
        .into_iter()
        .map(|(addr, acc)| {
            let routes_containing_addr = routes
                .iter()
                .filter(|r| r.seq.iter().any(|p| *p == Some(addr)))
                .count();
            let max_order = acc.instances.iter().map(|i| i.order).max().unwrap_or(0);
            let class = classify(acc.routes_with_loop, routes.len(), routes_containing_addr);
            LoopFinding {
                addr,
                destination,
                instances: acc.instances,
                routes_with_loop: acc.routes_with_loop,
                routes_to_destination: routes.len(),
                routes_containing_addr,
                max_order,
                class,
            }
        })
        .collect()
}
