//! Comparing the same destinations measured by two tools. Shapes that
//! a variable-flow tool reports but a constant-flow tool does not are
//! the fingerprints of flow-based load balancing.

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use crate::structures::{
    find_cycles, find_diamonds, find_loops, sequences_for, CycleFinding, DiamondFinding,
    LoopFinding, SeqRoute,
};
use crate::tracestore::{Dataset, RouteView};

/// Everything the detectors report over one view of a dataset.
#[derive(Clone, Debug, Default)]
pub struct Findings {
    pub loops: Vec<LoopFinding>,
    pub cycles: Vec<CycleFinding>,
    pub diamonds: Vec<DiamondFinding>,
}

/// Run every detector over a view, per destination (diamonds get the
/// whole view at once, since they aggregate across destinations).
pub fn detect_findings(view: &RouteView<'_>) -> Findings {
    let mut findings = Findings::default();
    let mut groups: Vec<(Ipv4Addr, Vec<SeqRoute>)> = Vec::new();
    for (destination, routes) in view.iter() {
        let seqs = sequences_for(routes);
        findings.loops.extend(find_loops(destination, &seqs));
        findings.cycles.extend(find_cycles(destination, &seqs));
        groups.push((destination, seqs));
    }
    findings.diamonds = find_diamonds(&groups);
    findings
}

/// Finding counts for one artifact kind under both tools, with the
/// overlap broken out by identity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KindDiff {
    /// Findings under the variable-flow tool.
    pub variable_total: usize,
    /// Findings under the constant-flow tool.
    pub constant_total: usize,
    /// Variable-tool findings with no constant-tool counterpart.
    pub disappeared: usize,
    /// Constant-tool findings the variable tool never saw.
    pub appeared: usize,
}

impl KindDiff {
    /// How many variable-tool findings the comparison pins on
    /// flow-based balancing: the disappearances, net of the appearances
    /// that show how much plain churn the pair of measurements has.
    pub fn attributable(&self) -> usize {
        self.disappeared.saturating_sub(self.appeared)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Comparison {
    pub loops: KindDiff,
    pub cycles: KindDiff,
    pub diamonds: KindDiff,
}

fn diff_keys<K: Ord>(variable: Vec<K>, constant: Vec<K>) -> KindDiff {
    let variable_total = variable.len();
    let constant_total = constant.len();
    let v: BTreeSet<K> = variable.into_iter().collect();
    let c: BTreeSet<K> = constant.into_iter().collect();
    KindDiff {
        variable_total,
        constant_total,
        disappeared: v.difference(&c).count(),
        appeared: c.difference(&v).count(),
    }
}

/// Match findings between two views by identity: loops and cycles by
/// (destination, address), diamonds by (head, tail).
pub fn compare_findings(variable: &Findings, constant: &Findings) -> Comparison {
    Comparison {
        loops: diff_keys(
            variable.loops.iter().map(|f| (f.destination, f.addr)).collect(),
            constant.loops.iter().map(|f| (f.destination, f.addr)).collect(),
        ),
        cycles: diff_keys(
            variable.cycles.iter().map(|f| (f.destination, f.addr)).collect(),
            constant.cycles.iter().map(|f| (f.destination, f.addr)).collect(),
        ),
        diamonds: diff_keys(
            variable.diamonds.iter().map(|f| (f.head, f.tail)).collect(),
            constant.diamonds.iter().map(|f| (f.head, f.tail)).collect(),
        ),
    }
}

/// Compare two tools' measurements stored in one dataset.
pub fn compare_datasets(dataset: &Dataset, variable_tool: &str, constant_tool: &str) -> Comparison {
    compare_findings(
        &detect_findings(&dataset.view(variable_tool)),
        &detect_findings(&dataset.view(constant_tool)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracestore::{HopRecord, MeasuredRoute, ProbeObservation, StopReason};
    use crate::wire::{FlowKey, Protocol, TransportPart};

    const DST: Ipv4Addr = Ipv4Addr::new(198, 51, 100, 7);

    fn a(n: u8) -> Ipv4Addr {
        Ipv4Addr::new(10, 0, n, 1)
    }

    fn route(tool: &str, round: u32, addrs: &[Ipv4Addr]) -> MeasuredRoute {
        MeasuredRoute {
            tool: tool.into(),
            destination: DST,
            round,
            started_at: round as u64,
            flow: FlowKey {
                src_addr: Ipv4Addr::new(192, 0, 2, 1),
                dst_addr: DST,
                protocol: Protocol::Udp,
                tos: 0,
                transport: TransportPart::Ports { src_port: 32768, dst_port: 33435 },
            },
            hops: addrs
                .iter()
                .enumerate()
                .map(|(i, &addr)| HopRecord {
                    ttl: i as u8 + 1,
                    probes: vec![ProbeObservation {
                        addr: Some(addr),
                        rtt_us: Some(1000),
                        ..ProbeObservation::default()
                    }],
                })
                .collect(),
            stop_reason: StopReason::MaxTtl,
        }
    }

    #[test]
    fn loops_that_vanish_under_constant_flow_are_attributable() {
        let ds = Dataset::from_routes(vec![
            route("varying", 0, &[a(1), a(2), a(2), a(4)]),
            route("steady", 0, &[a(1), a(2), a(4), a(5)]),
        ]);
        let cmp = compare_datasets(&ds, "varying", "steady");
        assert_eq!(
            cmp.loops,
            KindDiff { variable_total: 1, constant_total: 0, disappeared: 1, appeared: 0 }
        );
        assert_eq!(cmp.loops.attributable(), 1);
        assert_eq!(cmp.cycles, KindDiff::default());
    }

    #[test]
    fn appearances_offset_disappearances() {
        let ds = Dataset::from_routes(vec![
            route("varying", 0, &[a(1), a(2), a(2)]),
            route("steady", 0, &[a(1), a(3), a(3)]),
        ]);
        let cmp = compare_datasets(&ds, "varying", "steady");
        assert_eq!(cmp.loops.disappeared, 1);
        assert_eq!(cmp.loops.appeared, 1);
        assert_eq!(cmp.loops.attributable(), 0);
    }

    #[test]
    fn shared_findings_do_not_count_as_churn() {
        let ds = Dataset::from_routes(vec![
            route("varying", 0, &[a(1), a(2), a(2)]),
            route("steady", 0, &[a(1), a(2), a(2)]),
        ]);
        let cmp = compare_datasets(&ds, "varying", "steady");
        assert_eq!(
            cmp.loops,
            KindDiff { variable_total: 1, constant_total: 1, disappeared: 0, appeared: 0 }
        );
    }

    #[test]
    fn diamonds_match_on_head_and_tail() {
        let ds = Dataset::from_routes(vec![
            route("varying", 0, &[a(1), a(2), a(9)]),
            route("varying", 1, &[a(1), a(3), a(9)]),
            route("steady", 0, &[a(1), a(2), a(9)]),
            route("steady", 1, &[a(1), a(2), a(9)]),
        ]);
        let cmp = compare_datasets(&ds, "varying", "steady");
        assert_eq!(cmp.diamonds.variable_total, 1);
        assert_eq!(cmp.diamonds.constant_total, 0);
        assert_eq!(cmp.diamonds.disappeared, 1);
    }

    #[test]
    fn detect_findings_covers_every_kind() {
        let ds = Dataset::from_routes(vec![
            route("varying", 0, &[a(1), a(2), a(2), a(9), a(5), a(8), a(1)]),
            route("varying", 1, &[a(1), a(3), a(3), a(9), a(6), a(8), a(1)]),
        ]);
        let f = detect_findings(&ds.view("varying"));
        assert_eq!(f.loops.len(), 2, "one loop per repeated middle address");
        assert_eq!(f.cycles.len(), 1, "the first hop returns late in both routes");
        assert_eq!(f.diamonds.len(), 1, "two middles between one head and tail");
        assert_eq!(f.diamonds[0].global_size(), 2);
    }
}
