//! Diamond detection: alternative middle hops between a shared head
//! and tail — the shape a load balancer prints when measurements catch
//! more than one of its next-hops.
//!
//! For a head/tail address pair (h, t), the middles toward destination
//! d are every non-star address m such that some route to d runs
//! h, m, t consecutively. Two or more middles toward one destination
//! make a destination diamond; two or more in the union across
//! destinations make a global diamond (possible even when every single
//! destination only ever contributes one middle).

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use super::SeqRoute;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiamondFinding {
    pub head: Ipv4Addr,
    pub tail: Ipv4Addr,
    /// Every middle seen toward each destination (including single
    /// middles, which explain where the global union came from).
    pub middles_by_destination: BTreeMap<Ipv4Addr, BTreeSet<Ipv4Addr>>,
    pub global_middles: BTreeSet<Ipv4Addr>,
}

impl DiamondFinding {
    /// Largest middle count toward a single destination, if any
    /// destination qualifies on its own.
    pub fn one_destination_size(&self) -> Option<usize> {
        self.middles_by_destination
            .values()
            .map(BTreeSet::len)
            .filter(|&n| n >= 2)
            .max()
    }

    pub fn global_size(&self) -> usize {
        self.global_middles.len()
    }

    /// True when no single destination shows the diamond but the union
    /// across destinations does.
    pub fn global_only(&self) -> bool {
        self.one_destination_size().is_none()
    }
}

/// Find every global diamond across destination groups. Results are
/// sorted by (head, tail).
pub fn find_diamonds(groups: &[(Ipv4Addr, Vec<SeqRoute>)]) -> Vec<DiamondFinding> {
    let mut pairs: BTreeMap<(Ipv4Addr, Ipv4Addr), BTreeMap<Ipv4Addr, BTreeSet<Ipv4Addr>>> =
        BTreeMap::new();

    for (destination, routes) in groups {
        for route in routes {
            for w in route.seq.windows(3) {
                let (Some(h), Some(m), Some(t)) = (w[0], w[1], w[2]) else {
                    continue;
                };
                pairs
                    .entry((h, t))
                    .or_default()
                    .entry(*destination)
                    .or_default()
                    .insert(m);
            }
        }
    }

    pairs
        .into_iter()
        .filter_map(|((head, tail), middles_by_destination)| {
            let global_middles: BTreeSet<Ipv4Addr> = middles_by_destination
                .values()
                .flat_map(|s| s.iter().copied())
                .collect();
            (global_middles.len() >= 2).then_some(DiamondFinding {
                head,
                tail,
                middles_by_destination,
                global_middles,
            })
        })
        .collect()
}
