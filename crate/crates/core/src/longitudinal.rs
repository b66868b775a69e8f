//! Cohort tracking across three consecutive periods A, B, C: survival
//! frames, Euler intersections, concentration by subgroup, career
//! progression and inter-region mobility.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::config::{validate_periods, SurvivalConstraint};
use crate::display;
use crate::error::Result;
use crate::model::{Gender, MacroRegion, PeriodWindow, Rank, RosterIndex};

/// Period-A cohort restricted to members who stayed on staff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalFrame {
    pub periods: [String; 3],
    pub constraint: SurvivalConstraint,
    /// Size of the period-A cohort before the staff constraint.
    pub cohort_size: usize,
    /// Members on staff in all three periods.
    pub base: BTreeSet<String>,
    /// Denominator set for A∩B.
    pub base_b: BTreeSet<String>,
    /// Denominator set for A∩C.
    pub base_c: BTreeSet<String>,
}

impl SurvivalFrame {
    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }
}

/// `on_staff[i]` is the set of researchers counted as on staff in
/// `periods[i]` (eligibility or mere roster presence, per configuration).
pub fn build_survival_frame(
    periods: &[PeriodWindow],
    cohort_a: &BTreeSet<String>,
    on_staff: [&BTreeSet<String>; 3],
    constraint: SurvivalConstraint,
) -> Result<SurvivalFrame> {
    validate_periods(periods)?;
    let present_a: BTreeSet<String> = cohort_a.intersection(on_staff[0]).cloned().collect();
    let in_b: BTreeSet<String> = present_a.intersection(on_staff[1]).cloned().collect();
    let in_c: BTreeSet<String> = present_a.intersection(on_staff[2]).cloned().collect();
    let base: BTreeSet<String> = in_b.intersection(&in_c).cloned().collect();
    let (base_b, base_c) = match constraint {
        SurvivalConstraint::AllPeriodsOnStaff => (base.clone(), base.clone()),
        SurvivalConstraint::PairwiseOnStaff => (in_b, in_c),
    };
    Ok(SurvivalFrame {
        periods: [
            periods[0].label.clone(),
            periods[1].label.clone(),
            periods[2].label.clone(),
        ],
        constraint,
        cohort_size: cohort_a.len(),
        base,
        base_b,
        base_c,
    })
}

/// Cardinalities of A, A∩B, A∩C and A∩B∩C for a survival frame.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LongevityReport {
    pub a: u64,
    pub ab: u64,
    pub ac: u64,
    pub abc: u64,
    /// Denominator of the A∩B share (equals `a` unless the pairwise
    /// constraint is in force).
    pub a_for_b: u64,
    pub a_for_c: u64,
    /// Members of A∩B∩C.
    #[serde(skip)]
    pub persistent: BTreeSet<String>,
}

impl LongevityReport {
    fn share(num: u64, den: u64) -> f64 {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn share_ab(&self) -> f64 {
        Self::share(self.ab, self.a_for_b)
    }

    pub fn share_ac(&self) -> f64 {
        Self::share(self.ac, self.a_for_c)
    }

    pub fn share_abc(&self) -> f64 {
        Self::share(self.abc, self.a)
    }

    /// Whole-percent display strings for A∩B, A∩C, A∩B∩C.
    pub fn percents(&self) -> [String; 3] {
        [
            display::percent(self.ab, self.a_for_b),
            display::percent(self.ac, self.a_for_c),
            display::percent(self.abc, self.a),
        ]
    }
}

/// Euler intersections of the whole frame.
pub fn cohort_intersections(
    frame: &SurvivalFrame,
    cohort_b: &BTreeSet<String>,
    cohort_c: &BTreeSet<String>,
) -> LongevityReport {
    intersections_where(frame, cohort_b, cohort_c, |_| true)
}

/// Euler intersections of the frame members accepted by `keep`.
pub fn intersections_where(
    frame: &SurvivalFrame,
    cohort_b: &BTreeSet<String>,
    cohort_c: &BTreeSet<String>,
    keep: impl Fn(&str) -> bool,
) -> LongevityReport {
    let count = |set: &BTreeSet<String>, cohort: &BTreeSet<String>| {
        set.iter()
            .filter(|id| keep(id) && cohort.contains(*id))
            .count() as u64
    };
    let size = |set: &BTreeSet<String>| set.iter().filter(|id| keep(id)).count() as u64;
    let persistent: BTreeSet<String> = frame
        .base
        .iter()
        .filter(|id| keep(id) && cohort_b.contains(*id) && cohort_c.contains(*id))
        .cloned()
        .collect();
    LongevityReport {
        a: size(&frame.base),
        ab: count(&frame.base_b, cohort_b),
        ac: count(&frame.base_c, cohort_c),
        abc: persistent.len() as u64,
        a_for_b: size(&frame.base_b),
        a_for_c: size(&frame.base_c),
        persistent,
    }
}

/// Grouping attributes of a researcher, frozen at the end of period A.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemberProfile {
    pub gender: Gender,
    pub macro_region: Option<MacroRegion>,
    pub uda: Option<String>,
}

/// Gender and region from the last roster row up to the end of `period_a`;
/// UDA from the SDS held in the majority of the period's years.
pub fn member_profiles<'a>(
    roster: &RosterIndex,
    period_a: &PeriodWindow,
    members: impl IntoIterator<Item = &'a String>,
) -> BTreeMap<String, MemberProfile> {
    members
        .into_iter()
        .map(|id| {
            let at_end = roster.as_of(id, period_a.end_year);
            let profile = MemberProfile {
                gender: at_end
                    .or_else(|| roster.history(id).next())
                    .map(|r| r.gender)
                    .unwrap_or(Gender::Unknown),
                macro_region: at_end.map(|r| r.macro_region),
                uda: roster.majority_sds(id, period_a).map(|r| r.uda.clone()),
            };
            (id.clone(), profile)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Gender,
    MacroRegion,
    Uda,
}

impl Grouping {
    pub fn as_str(self) -> &'static str {
        match self {
            Grouping::Gender => "gender",
            Grouping::MacroRegion => "macro_region",
            Grouping::Uda => "uda",
        }
    }

    pub fn label(self, profile: Option<&MemberProfile>) -> Option<String> {
        let p = profile?;
        match self {
            Grouping::Gender => match p.gender {
                Gender::Unknown => None,
                g => Some(g.as_str().to_string()),
            },
            Grouping::MacroRegion => p.macro_region.map(|r| r.as_str().to_string()),
            Grouping::Uda => p.uda.clone(),
        }
    }
}

pub const UNKNOWN_GROUP: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub group: String,
    pub a: u64,
    pub abc: u64,
    /// Group share of A.
    pub share_of_a: f64,
    /// Group share of A∩B∩C.
    pub share_of_abc: f64,
    /// A∩B∩C / A within the group.
    pub persistence: f64,
    /// share_of_abc / share_of_a; `None` when A∩B∩C is empty.
    pub concentration_index: Option<f64>,
}

impl ConcentrationRow {
    pub fn share_of_a_display(&self, total_a: u64) -> String {
        display::percent(self.a, total_a)
    }

    pub fn share_of_abc_display(&self, total_abc: u64) -> String {
        display::percent(self.abc, total_abc)
    }

    pub fn persistence_display(&self) -> String {
        display::percent(self.abc, self.a)
    }

    pub fn index_display(&self, total_a: u64, total_abc: u64) -> Option<String> {
        display::index(self.abc, total_abc, self.a, total_a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationTable {
    pub grouping: Grouping,
    pub total_a: u64,
    pub total_abc: u64,
    /// Ordered by group label; members lacking the attribute form the
    /// `unknown` row.
    pub rows: Vec<ConcentrationRow>,
}

impl ConcentrationTable {
    pub fn row(&self, group: &str) -> Option<&ConcentrationRow> {
        self.rows.iter().find(|r| r.group == group)
    }

    pub fn persistence_display(&self) -> String {
        display::percent(self.total_abc, self.total_a)
    }
}

pub fn concentration_table(
    frame: &SurvivalFrame,
    report: &LongevityReport,
    grouping: Grouping,
    profiles: &BTreeMap<String, MemberProfile>,
) -> ConcentrationTable {
    let mut counts: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for id in &frame.base {
        let label = grouping
            .label(profiles.get(id))
            .unwrap_or_else(|| UNKNOWN_GROUP.to_string());
        let e = counts.entry(label).or_default();
        e.0 += 1;
        if report.persistent.contains(id) {
            e.1 += 1;
        }
    }
    let total_a = frame.base.len() as u64;
    let total_abc = report.persistent.len() as u64;
    let ratio = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let rows = counts
        .into_iter()
        .map(|(group, (a, abc))| ConcentrationRow {
            group,
            a,
            abc,
            share_of_a: ratio(a, total_a),
            share_of_abc: ratio(abc, total_abc),
            persistence: ratio(abc, a),
            concentration_index: (total_abc > 0 && a > 0)
                .then(|| (abc as f64 * total_a as f64) / (a as f64 * total_abc as f64)),
        })
        .collect();
    ConcentrationTable {
        grouping,
        total_a,
        total_abc,
        rows,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UdaLongevityRow {
    pub uda: String,
    pub report: LongevityReport,
}

/// Per-UDA Euler counts, ordered by UDA label.
pub fn uda_longevity_table(
    frame: &SurvivalFrame,
    cohort_b: &BTreeSet<String>,
    cohort_c: &BTreeSet<String>,
    profiles: &BTreeMap<String, MemberProfile>,
) -> Vec<UdaLongevityRow> {
    let uda_of = |id: &str| {
        Grouping::Uda
            .label(profiles.get(id))
            .unwrap_or_else(|| UNKNOWN_GROUP.to_string())
    };
    let udas: BTreeSet<String> = frame
        .base
        .iter()
        .chain(&frame.base_b)
        .chain(&frame.base_c)
        .map(|id| uda_of(id))
        .collect();
    udas.into_iter()
        .map(|uda| {
            let report = intersections_where(frame, cohort_b, cohort_c, |id| uda_of(id) == uda);
            UdaLongevityRow { uda, report }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CareerOutcome {
    NeverPromoted,
    Promoted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CareerRow {
    pub cohort: String,
    pub starting_rank: Rank,
    pub outcome: CareerOutcome,
    /// Cohort members holding `starting_rank` at the end of period A.
    pub pool: u64,
    pub count: u64,
    pub share: f64,
}

impl CareerRow {
    pub fn share_display(&self) -> String {
        display::percent(self.count, self.pool)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CareerReport {
    pub rows: Vec<CareerRow>,
    /// Members with no rank on record up to the end of period A.
    pub excluded_unknown_rank: u64,
}

impl CareerReport {
    pub fn row(&self, cohort: &str, rank: Rank) -> Option<&CareerRow> {
        self.rows
            .iter()
            .find(|r| r.cohort == cohort && r.starting_rank == rank)
    }
}

/// For assistant and associate professors at the end of period A: persistent
/// top scientists never promoted by the end of period C, and persistent
/// unproductive researchers promoted by then. Rank gaps carry the last
/// known rank forward.
pub fn career_progression(
    persistent_ts: &BTreeSet<String>,
    persistent_un: &BTreeSet<String>,
    roster: &RosterIndex,
    period_a: &PeriodWindow,
    period_c: &PeriodWindow,
) -> CareerReport {
    let mut excluded = 0u64;
    let mut tally = |members: &BTreeSet<String>| {
        let mut pools: BTreeMap<Rank, (u64, u64)> = BTreeMap::new();
        for id in members {
            let Some(start) = roster.as_of(id, period_a.end_year).map(|r| r.rank) else {
                excluded += 1;
                continue;
            };
            let promoted = roster
                .history(id)
                .take_while(|r| r.year <= period_c.end_year)
                .any(|r| r.rank > start);
            let e = pools.entry(start).or_default();
            e.0 += 1;
            if promoted {
                e.1 += 1;
            }
        }
        pools
    };
    let ts = tally(persistent_ts);
    let un = tally(persistent_un);

    let mut rows = Vec::new();
    for rank in [Rank::Assistant, Rank::Associate] {
        let (pool, promoted) = ts.get(&rank).copied().unwrap_or_default();
        rows.push(career_row(
            "TS",
            rank,
            CareerOutcome::NeverPromoted,
            pool,
            pool - promoted,
        ));
    }
    for rank in [Rank::Assistant, Rank::Associate] {
        let (pool, promoted) = un.get(&rank).copied().unwrap_or_default();
        rows.push(career_row(
            "UN",
            rank,
            CareerOutcome::Promoted,
            pool,
            promoted,
        ));
    }
    CareerReport {
        rows,
        excluded_unknown_rank: excluded,
    }
}

fn career_row(
    cohort: &str,
    rank: Rank,
    outcome: CareerOutcome,
    pool: u64,
    count: u64,
) -> CareerRow {
    CareerRow {
        cohort: cohort.to_string(),
        starting_rank: rank,
        outcome,
        pool,
        count,
        share: if pool == 0 {
            0.0
        } else {
            count as f64 / pool as f64
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionFlow {
    pub region: MacroRegion,
    pub inflow: u64,
    pub outflow: u64,
    pub net: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortMobility {
    pub cohort: String,
    pub members: u64,
    pub movers: u64,
    pub mover_share: f64,
    /// Members without a region on record at either end point.
    pub unknown_region: u64,
    pub flows: Vec<RegionFlow>,
}

impl CohortMobility {
    /// Mover share as a percentage to two significant figures.
    pub fn share_display(&self) -> String {
        display::percent_sig(self.movers, self.members, 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MobilityReport {
    pub cohorts: Vec<CohortMobility>,
}

impl MobilityReport {
    pub fn cohort(&self, name: &str) -> Option<&CohortMobility> {
        self.cohorts.iter().find(|c| c.cohort == name)
    }
}

/// A mover is a member whose macro-region at the end of period C differs
/// from the one at the end of period A.
pub fn cohort_mobility(
    name: &str,
    members: &BTreeSet<String>,
    roster: &RosterIndex,
    period_a: &PeriodWindow,
    period_c: &PeriodWindow,
) -> CohortMobility {
    let mut inflow: BTreeMap<MacroRegion, u64> = BTreeMap::new();
    let mut outflow: BTreeMap<MacroRegion, u64> = BTreeMap::new();
    let (mut movers, mut unknown) = (0u64, 0u64);
    for id in members {
        let from = roster.as_of(id, period_a.end_year).map(|r| r.macro_region);
        let to = roster.as_of(id, period_c.end_year).map(|r| r.macro_region);
        match (from, to) {
            (Some(f), Some(t)) if f != t => {
                movers += 1;
                *outflow.entry(f).or_default() += 1;
                *inflow.entry(t).or_default() += 1;
            }
            (Some(_), Some(_)) => {}
            _ => unknown += 1,
        }
    }
    let flows = MacroRegion::ALL
        .iter()
        .map(|&region| {
            let i = inflow.get(&region).copied().unwrap_or(0);
            let o = outflow.get(&region).copied().unwrap_or(0);
            RegionFlow {
                region,
                inflow: i,
                outflow: o,
                net: i as i64 - o as i64,
            }
        })
        .collect();
    let n = members.len() as u64;
    CohortMobility {
        cohort: name.to_string(),
        members: n,
        movers,
        mover_share: if n == 0 {
            0.0
        } else {
            movers as f64 / n as f64
        },
        unknown_region: unknown,
        flows,
    }
}

pub fn mobility_report(
    persistent_ts: &BTreeSet<String>,
    persistent_un: &BTreeSet<String>,
    roster: &RosterIndex,
    period_a: &PeriodWindow,
    period_c: &PeriodWindow,
) -> MobilityReport {
    MobilityReport {
        cohorts: vec![
            cohort_mobility("TS", persistent_ts, roster, period_a, period_c),
            cohort_mobility("UN", persistent_un, roster, period_a, period_c),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StaffRecord;

    fn periods() -> Vec<PeriodWindow> {
        crate::config::RunConfig::default().periods
    }

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn everyone_present_keeps_cohort() {
        let a = set(&["a", "b", "c"]);
        let all = set(&["a", "b", "c", "d"]);
        let frame = build_survival_frame(
            &periods(),
            &a,
            [&all, &all, &all],
            SurvivalConstraint::AllPeriodsOnStaff,
        )
        .unwrap();
        assert_eq!(frame.base, a);
        assert_eq!(frame.cohort_size, 3);
    }

    #[test]
    fn pairwise_constraint_only_needs_the_pair() {
        let a = set(&["a", "b", "c"]);
        let sa = set(&["a", "b", "c"]);
        let sb = set(&["a", "b"]);
        let sc = set(&["a", "c"]);
        let all = build_survival_frame(
            &periods(),
            &a,
            [&sa, &sb, &sc],
            SurvivalConstraint::AllPeriodsOnStaff,
        )
        .unwrap();
        assert_eq!(all.base, set(&["a"]));
        assert_eq!(all.base_b, set(&["a"]));
        let pair = build_survival_frame(
            &periods(),
            &a,
            [&sa, &sb, &sc],
            SurvivalConstraint::PairwiseOnStaff,
        )
        .unwrap();
        assert_eq!(pair.base, set(&["a"]));
        assert_eq!(pair.base_b, set(&["a", "b"]));
        assert_eq!(pair.base_c, set(&["a", "c"]));
    }

    #[test]
    fn overlapping_periods_rejected() {
        let mut p = periods();
        p[1].start_year = 2004;
        let s = set(&["a"]);
        assert!(
            build_survival_frame(&p, &s, [&s, &s, &s], SurvivalConstraint::AllPeriodsOnStaff)
                .is_err()
        );
    }

    #[test]
    fn identical_cohorts_are_fully_persistent() {
        let a = set(&["a", "b"]);
        let frame = build_survival_frame(
            &periods(),
            &a,
            [&a, &a, &a],
            SurvivalConstraint::AllPeriodsOnStaff,
        )
        .unwrap();
        let r = cohort_intersections(&frame, &a, &a);
        assert_eq!(r.percents(), ["100%", "100%", "100%"]);
    }

    #[test]
    fn empty_frame_reports_zero_shares() {
        let empty = BTreeSet::new();
        let frame = build_survival_frame(
            &periods(),
            &empty,
            [&empty, &empty, &empty],
            SurvivalConstraint::AllPeriodsOnStaff,
        )
        .unwrap();
        let r = cohort_intersections(&frame, &empty, &empty);
        assert_eq!((r.a, r.share_abc()), (0, 0.0));
        assert_eq!(r.percents(), ["0%", "0%", "0%"]);
    }

    #[test]
    fn single_group_has_unit_index() {
        let a = set(&["a", "b", "c"]);
        let frame = build_survival_frame(
            &periods(),
            &a,
            [&a, &a, &a],
            SurvivalConstraint::AllPeriodsOnStaff,
        )
        .unwrap();
        let r = cohort_intersections(&frame, &set(&["a", "b"]), &set(&["a"]));
        let profiles = a
            .iter()
            .map(|id| {
                (
                    id.clone(),
                    MemberProfile {
                        gender: Gender::F,
                        macro_region: None,
                        uda: Some("5".into()),
                    },
                )
            })
            .collect();
        let t = concentration_table(&frame, &r, Grouping::Gender, &profiles);
        assert_eq!(t.rows.len(), 1);
        assert_eq!(
            t.rows[0].index_display(t.total_a, t.total_abc).as_deref(),
            Some("1.00")
        );
        let regions = concentration_table(&frame, &r, Grouping::MacroRegion, &profiles);
        assert_eq!(regions.rows[0].group, UNKNOWN_GROUP);
        assert_eq!(regions.rows[0].a, 3);
    }

    fn record(id: &str, year: i32, rank: Rank, region: MacroRegion) -> StaffRecord {
        StaffRecord {
            researcher_id: id.into(),
            year,
            gender: Gender::M,
            sds: "S".into(),
            uda: "1".into(),
            university_id: "U".into(),
            macro_region: region,
            rank,
        }
    }

    #[test]
    fn static_ranks_are_never_promoted() {
        let roster = RosterIndex::new(
            ["x", "y"]
                .iter()
                .flat_map(|id| {
                    let rank = if *id == "x" {
                        Rank::Assistant
                    } else {
                        Rank::Associate
                    };
                    (2001..=2012).map(move |y| record(id, y, rank, MacroRegion::North))
                })
                .collect(),
        );
        let p = periods();
        let members = set(&["x", "y"]);
        let report = career_progression(&members, &members, &roster, &p[0], &p[2]);
        for rank in [Rank::Assistant, Rank::Associate] {
            assert_eq!(report.row("TS", rank).unwrap().share, 1.0);
            assert_eq!(report.row("UN", rank).unwrap().share, 0.0);
        }
    }

    #[test]
    fn rank_gap_carries_forward() {
        let roster = RosterIndex::new(vec![
            record("x", 2003, Rank::Assistant, MacroRegion::North),
            record("x", 2010, Rank::Associate, MacroRegion::North),
        ]);
        let p = periods();
        let members = set(&["x", "ghost"]);
        let report = career_progression(&members, &BTreeSet::new(), &roster, &p[0], &p[2]);
        let row = report.row("TS", Rank::Assistant).unwrap();
        assert_eq!((row.pool, row.count), (1, 0));
        assert_eq!(report.excluded_unknown_rank, 1);
    }

    #[test]
    fn movers_and_conserved_flows() {
        let roster = RosterIndex::new(vec![
            record("x", 2004, Rank::Full, MacroRegion::South),
            record("x", 2012, Rank::Full, MacroRegion::North),
            record("y", 2004, Rank::Full, MacroRegion::Center),
            record("y", 2012, Rank::Full, MacroRegion::Center),
        ]);
        let p = periods();
        let m = cohort_mobility("TS", &set(&["x", "y"]), &roster, &p[0], &p[2]);
        assert_eq!(m.movers, 1);
        assert_eq!(m.flows.iter().map(|f| f.net).sum::<i64>(), 0);
        let north = m
            .flows
            .iter()
            .find(|f| f.region == MacroRegion::North)
            .unwrap();
        assert_eq!(north.net, 1);
    }

    #[test]
    fn no_moves_no_flow() {
        let roster = RosterIndex::new(vec![record("x", 2004, Rank::Full, MacroRegion::South)]);
        let p = periods();
        let m = cohort_mobility("UN", &set(&["x"]), &roster, &p[0], &p[2]);
        assert_eq!(m.movers, 0);
        assert!(m.flows.iter().all(|f| f.net == 0 && f.inflow == 0));
    }
}
