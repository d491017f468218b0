//! Attributing artifact findings to causes, with exact arithmetic.
//!
//! The flow-balancing share of each artifact kind comes from the
//! two-tool comparison: findings that disappear under constant-flow
//! probing, net of ones that appear. The rest of the mass is split
//! across the route-evidence causes in proportion to how the
//! individual findings classify, so every column sums to exactly 1.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, Zero};

use super::classify::{cycle_cause, loop_cause};
use super::compare::{compare_findings, detect_findings, Comparison, KindDiff};
use super::ArtifactCause;
use crate::tracestore::Dataset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ArtifactKind {
    Loops,
    Cycles,
    Diamonds,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 3] = [ArtifactKind::Loops, ArtifactKind::Cycles, ArtifactKind::Diamonds];

    pub fn name(self) -> &'static str {
        match self {
            ArtifactKind::Loops => "loops",
            ArtifactKind::Cycles => "cycles",
            ArtifactKind::Diamonds => "diamonds",
        }
    }

    /// Causes that can explain this artifact kind, in display order.
    /// Anything else renders as a dash.
    pub fn applicable_causes(self) -> &'static [ArtifactCause] {
        match self {
            ArtifactKind::Loops => &[
                ArtifactCause::PerFlow,
                ArtifactCause::ZeroTtl,
                ArtifactCause::Interrupted,
                ArtifactCause::Fake,
                ArtifactCause::Unknown,
            ],
            ArtifactKind::Cycles => &[
                ArtifactCause::PerFlow,
                ArtifactCause::Interrupted,
                ArtifactCause::Fake,
                ArtifactCause::RoutingCycle,
                ArtifactCause::Unknown,
            ],
            ArtifactKind::Diamonds => &[ArtifactCause::PerFlow, ArtifactCause::Unknown],
        }
    }
}

/// One artifact kind's attribution: exact shares per cause, `None`
/// where the cause does not apply to the kind.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub kind: ArtifactKind,
    pub diff: KindDiff,
    pub shares: BTreeMap<ArtifactCause, Option<BigRational>>,
}

impl SummaryRow {
    pub fn share(&self, cause: ArtifactCause) -> Option<&BigRational> {
        self.shares.get(&cause).and_then(|s| s.as_ref())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArtifactSummary {
    pub variable_tool: String,
    pub constant_tool: String,
    pub comparison: Comparison,
    pub rows: Vec<SummaryRow>,
}

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn build_row(
    kind: ArtifactKind,
    diff: KindDiff,
    cause_counts: &BTreeMap<ArtifactCause, usize>,
) -> SummaryRow {
    let total = diff.variable_total;
    let mut shares: BTreeMap<ArtifactCause, Option<BigRational>> = ArtifactCause::ALL
        .iter()
        .map(|&c| (c, None))
        .collect();
    let per_flow = if total == 0 { BigRational::zero() } else { ratio(diff.attributable(), total) };
    let remainder = BigRational::new(BigInt::from(1), BigInt::from(1)) - &per_flow;
    for &cause in kind.applicable_causes() {
        let share = if cause == ArtifactCause::PerFlow {
            per_flow.clone()
        } else if total == 0 {
            BigRational::zero()
        } else {
            &remainder * ratio(cause_counts.get(&cause).copied().unwrap_or(0), total)
        };
        shares.insert(cause, Some(share));
    }
    SummaryRow { kind, diff, shares }
}

/// Attribute every artifact kind in `dataset`, measured by
/// `variable_tool`, using `constant_tool`'s measurements of the same
/// destinations as the balancing control.
pub fn summarize(dataset: &Dataset, variable_tool: &str, constant_tool: &str) -> ArtifactSummary {
    let variable_view = dataset.view(variable_tool);
    let variable = detect_findings(&variable_view);
    let constant = detect_findings(&dataset.view(constant_tool));
    let comparison = compare_findings(&variable, &constant);

    let mut loop_counts: BTreeMap<ArtifactCause, usize> = BTreeMap::new();
    for f in &variable.loops {
        *loop_counts.entry(loop_cause(f, variable_view.routes_to(f.destination))).or_default() += 1;
    }
    let mut cycle_counts: BTreeMap<ArtifactCause, usize> = BTreeMap::new();
    for f in &variable.cycles {
        *cycle_counts.entry(cycle_cause(f, variable_view.routes_to(f.destination))).or_default() +=
            1;
    }
    // Diamonds carry no route-level counter-evidence: whatever the
    // comparison does not explain stays unknown.
    let diamond_counts: BTreeMap<ArtifactCause, usize> =
        [(ArtifactCause::Unknown, comparison.diamonds.variable_total)].into();

    ArtifactSummary {
        variable_tool: variable_tool.to_string(),
        constant_tool: constant_tool.to_string(),
        comparison,
        rows: vec![
            build_row(ArtifactKind::Loops, comparison.loops, &loop_counts),
            build_row(ArtifactKind::Cycles, comparison.cycles, &cycle_counts),
            build_row(ArtifactKind::Diamonds, comparison.diamonds, &diamond_counts),
        ],
    }
}

/// Render shares as percentages with two decimals, distributing the
/// rounding slack by largest remainder so a column that sums to 1
/// prints cells summing to exactly 100.00. `None` renders as a dash.
pub fn percent_cells(shares: &[Option<BigRational>]) -> Vec<String> {
    let hundredths: Vec<Option<BigRational>> = shares
        .iter()
        .map(|s| s.as_ref().map(|v| v * BigRational::from(BigInt::from(10_000))))
        .collect();
    let mut floors: Vec<i64> = Vec::with_capacity(shares.len());
    let mut remainders: Vec<(usize, BigRational)> = Vec::new();
    let mut floor_sum: i64 = 0;
    let mut exact_sum = BigRational::zero();
    for (i, h) in hundredths.iter().enumerate() {
        match h {
            Some(v) => {
                let f = v.floor();
                let fi: i64 = f.to_integer().try_into().expect("shares are small");
                floors.push(fi);
                floor_sum += fi;
                remainders.push((i, v - f));
                exact_sum += v;
            }
            None => floors.push(0),
        }
    }
    // Only distribute when the column genuinely sums to an integer
    // number of hundredths (1 → 10000); partial columns print floored.
    if exact_sum.is_integer() {
        let deficit: i64 = TryInto::<i64>::try_into(exact_sum.to_integer()).unwrap_or(0) - floor_sum;
        remainders.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (i, _) in remainders.into_iter().take(deficit.max(0) as usize) {
            floors[i] += 1;
        }
    }
    shares
        .iter()
        .zip(floors)
        .map(|(s, f)| match s {
            None => "-".to_string(),
            Some(_) => format!("{}.{:02}", f / 100, f % 100),
        })
        .collect()
}
