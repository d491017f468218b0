//! Cycle detection: an address that comes back after other hops.
//!
//! A pair of positions (i, j) holding the same address qualifies as a
//! cycle when the positions are non-adjacent and some position strictly
//! between them holds a different, non-star address (runs of one
//! address are loops, not cycles; star-separated repeats are neither).
//! The *length* of a cycle is the smallest qualifying separation seen,
//! its *span* the largest.
//!
//! Periodic cycles — a block of k >= 2 hops repeating back-to-back —
//! get their own detector, since a trace oscillating through the same
//! routers for dozens of hops is the signature of a forwarding cycle
//! being sampled one TTL at a time.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use super::SeqRoute;

/// One cyclic route.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleInstance {
    /// Index of the route within the group handed to [`find_cycles`].
    pub route_index: usize,
    pub round: u32,
    pub min_separation: usize,
    pub max_separation: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleFinding {
    pub addr: Ipv4Addr,
    pub destination: Ipv4Addr,
    /// Smallest qualifying separation over all instances.
    pub length: usize,
    /// Largest qualifying separation over all instances.
    pub span: usize,
    pub instances: Vec<CycleInstance>,
}

/// Find every cycle in a group of routes measured toward one
/// destination. One instance per cyclic route; results sorted by
/// address.
pub fn find_cycles(destination: Ipv4Addr, routes: &[SeqRoute]) -> Vec<CycleFinding> {
    let mut by_addr: BTreeMap<Ipv4Addr, Vec<CycleInstance>> = BTreeMap::new();

    for (route_index, route) in routes.iter().enumerate() {
        let seq = &route.seq;
        let mut positions: BTreeMap<Ipv4Addr, Vec<usize>> = BTreeMap::new();
        for (pos, slot) in seq.iter().enumerate() {
            if let Some(addr) = slot {
                positions.entry(*addr).or_default().push(pos);
            }
        }
        for (addr, pos) in positions {
            let mut min_sep = usize::MAX;
            let mut max_sep = 0usize;
            for (a, &i) in pos.iter().enumerate() {
                for &j in &pos[a + 1..] {
                    if j <= i + 1 {
                        continue;
                    }
                    let detour = seq[i + 1..j]
                        .iter()
                        .any(|p| p.is_some() && *p != Some(addr));
                    if detour {
                        min_sep = min_sep.min(j - i);
                        max_sep = max_sep.max(j - i);
                    }
                }
            }
            if max_sep > 0 {
                by_addr.entry(addr).or_default().push(CycleInstance {
                    route_index,
                    round: route.round,
                    min_separation: min_sep,
                    max_separation: max_sep,
                });
            }
        }
    }

    by_addr
        .into_iter()
        .map(|(addr, instances)| CycleFinding {
            addr,
            destination,
            length: instances.iter().map(|i| i.min_separation).min().unwrap(),
            span: instances.iter().map(|i| i.max_separation).max().unwrap(),
            instances,
        })
        .collect()
}

/// A block of `period` consecutive positions repeating back-to-back.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodicRun {
    pub period: usize,
    /// First position of the repeating region.
    pub start: usize,
    /// Last position of the repeating region (inclusive).
    pub end: usize,
    /// Full repetitions of the block, including the first.
    pub repeats: usize,
}

impl PeriodicRun {
    pub fn positions(&self) -> usize {
        self.end - self.start + 1
    }
}

/// Find periodic regions in one sequence.
///
/// For each period k >= 2, positions satisfying seq[p] == seq[p+k] (both
/// non-star) are grouped into maximal runs; a run of m such positions
/// covers m+k positions and repeats its block m/k + 1 times. Reported
/// runs must repeat at least twice and contain at least two distinct
/// addresses (a one-address block is a loop). Runs whose region lies
/// inside a smaller-period region are dropped, so an alternation is
/// reported once with its minimal period.
pub fn find_periodic_runs(seq: &[Option<Ipv4Addr>]) -> Vec<PeriodicRun> {
    let len = seq.len();
    let mut candidates: Vec<PeriodicRun> = Vec::new();

    for period in 2..=len / 2 {
        let mut p = 0;
        while p + period < len {
            if seq[p].is_none() || seq[p] != seq[p + period] {
                p += 1;
                continue;
            }
            let run_start = p;
            while p + period < len && seq[p].is_some() && seq[p] == seq[p + period] {
                p += 1;
            }
            let m = p - run_start;
            let repeats = m / period + 1;
            let block = &seq[run_start..run_start + period];
            let distinct = block.iter().collect::<std::collections::BTreeSet<_>>().len();
            if repeats >= 2 && distinct >= 2 {
                candidates.push(PeriodicRun {
                    period,
                    start: run_start,
                    end: run_start + m - 1 + period,
                    repeats,
                });
            }
        }
    }

    let minimal: Vec<PeriodicRun> = candidates
        .iter()
        .filter(|c| {
            !candidates.iter().any(|o| {
                o.period < c.period && o.start <= c.start && o.end >= c.end
            })
        })
        .copied()
        .collect();
    minimal
}

/// The run that best describes a sequence's oscillation: most repeats,
/// ties broken toward the smaller period, then the earlier start.
pub fn dominant_periodic_run(runs: &[PeriodicRun]) -> Option<PeriodicRun> {
    runs.iter()
        .copied()
        .min_by(|a, b| {
            b.repeats
                .cmp(&a.repeats)
                .then(a.period.cmp(&b.period))
                .then(a.start.cmp(&b.start))
        })
}
