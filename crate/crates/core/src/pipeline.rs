//! End-to-end orchestration: scoring per (period, SDS), cohort extraction
//! and the longitudinal tables. Everything here is a pure function of the
//! dataset and the configuration.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::cohort::{
    eligible_researchers, field_cohort, rostered_researchers, CohortSets, EligibilitySet, Mu2Rule,
};
use crate::config::{RunConfig, StaffPresence};
use crate::error::{Error, Result};
use crate::longitudinal::{
    build_survival_frame, career_progression, cohort_intersections, concentration_table,
    member_profiles, mobility_report, uda_longevity_table, CareerReport, ConcentrationTable,
    Grouping, LongevityReport, MobilityReport, SurvivalFrame, UdaLongevityRow,
};
use crate::model::{Dataset, PeriodWindow};
use crate::scoring::{compute_fss, percentile_ranks, CitationBaselines, ScoreRecord};

/// Ranked scores of one period, grouped by field.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodScores {
    pub period: PeriodWindow,
    pub eligibility: EligibilitySet,
    /// SDS -> scores ordered by researcher_id.
    pub fields: BTreeMap<String, Vec<ScoreRecord>>,
}

impl PeriodScores {
    pub fn records(&self) -> impl Iterator<Item = &ScoreRecord> {
        self.fields.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.fields.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

fn score_field(
    sds: &str,
    members: &[&str],
    period: &PeriodWindow,
    dataset: &Dataset,
    baselines: &CitationBaselines,
    config: &RunConfig,
) -> Result<Vec<ScoreRecord>> {
    let scheme = config.weights.scheme_for(sds);
    let raw = members
        .iter()
        .map(|&id| compute_fss(id, period, dataset, baselines, &scheme).map(|f| (id, f)))
        .collect::<Result<Vec<_>>>()?;
    let keyed: Vec<(usize, f64)> = raw
        .iter()
        .enumerate()
        .map(|(i, (_, f))| (i, f.fss))
        .collect();
    let ranks = percentile_ranks(&keyed)?;
    Ok(ranks
        .into_iter()
        .map(|(i, percentile)| {
            let (id, f) = raw[i];
            ScoreRecord {
                researcher_id: id.to_string(),
                period: period.label.clone(),
                sds: sds.to_string(),
                t: f.t,
                fss: f.fss,
                percentile,
            }
        })
        .collect())
}

/// Scores every eligible researcher of `period` within the SDS held for the
/// majority of the period. Fields are processed in parallel; each field's
/// output depends only on its own members, so results do not vary with the
/// number of threads.
pub fn score_period(
    dataset: &Dataset,
    baselines: &CitationBaselines,
    period: &PeriodWindow,
    config: &RunConfig,
) -> Result<PeriodScores> {
    let roster = dataset.roster();
    let eligibility = eligible_researchers(roster, period);
    let mut by_field: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for id in &eligibility.members {
        if let Some(r) = roster.majority_sds(id, period) {
            by_field
                .entry(r.sds.as_str())
                .or_default()
                .push(id.as_str());
        }
    }
    let jobs: Vec<(&str, Vec<&str>)> = by_field.into_iter().collect();
    let scored: Vec<Result<(String, Vec<ScoreRecord>)>> = jobs
        .par_iter()
        .map(|(sds, members)| {
            score_field(sds, members, period, dataset, baselines, config)
                .map(|s| (sds.to_string(), s))
        })
        .collect();
    let fields = scored.into_iter().collect::<Result<BTreeMap<_, _>>>()?;
    Ok(PeriodScores {
        period: period.clone(),
        eligibility,
        fields,
    })
}

pub fn period_cohorts(scores: &PeriodScores, config: &RunConfig) -> CohortSets {
    let rule = config.css.then_some(if config.css_mu2_inclusive {
        Mu2Rule::Inclusive
    } else {
        Mu2Rule::Strict
    });
    let cutoff = config.top_cutoff();
    CohortSets::from_fields(
        &scores.period.label,
        scores
            .fields
            .iter()
            .map(|(sds, s)| field_cohort(sds, s, cutoff, rule)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CohortKind {
    #[serde(rename = "TS")]
    Top,
    #[serde(rename = "UN")]
    Unproductive,
    #[serde(rename = "TS_mu2")]
    TopMu2,
}

impl CohortKind {
    pub fn label(self) -> &'static str {
        match self {
            CohortKind::Top => "TS",
            CohortKind::Unproductive => "UN",
            CohortKind::TopMu2 => "TS_mu2",
        }
    }

    /// File-name stem.
    pub fn stem(self) -> &'static str {
        match self {
            CohortKind::Top => "ts",
            CohortKind::Unproductive => "un",
            CohortKind::TopMu2 => "ts_mu2",
        }
    }

    pub fn members(self, sets: &CohortSets) -> &BTreeSet<String> {
        match self {
            CohortKind::Top => &sets.ts,
            CohortKind::Unproductive => &sets.un,
            CohortKind::TopMu2 => &sets.ts_mu2,
        }
    }
}

/// Longevity of one cohort kind across A, B, C.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortLongevity {
    pub kind: CohortKind,
    #[serde(skip)]
    pub frame: SurvivalFrame,
    pub overall: LongevityReport,
    pub gender: ConcentrationTable,
    pub macro_region: ConcentrationTable,
    pub uda: ConcentrationTable,
    pub uda_rows: Vec<UdaLongevityRow>,
}

pub fn cohort_longevity(
    kind: CohortKind,
    dataset: &Dataset,
    config: &RunConfig,
    scores: &[PeriodScores],
    cohorts: &[CohortSets],
) -> Result<CohortLongevity> {
    let roster = dataset.roster();
    let on_staff: Vec<BTreeSet<String>> = scores
        .iter()
        .map(|s| match config.staff_presence {
            StaffPresence::Eligible => s.eligibility.members.clone(),
            StaffPresence::Roster => rostered_researchers(roster, &s.period),
        })
        .collect();
    let frame = build_survival_frame(
        &config.periods,
        kind.members(&cohorts[0]),
        [&on_staff[0], &on_staff[1], &on_staff[2]],
        config.survival,
    )?;
    let b = kind.members(&cohorts[1]);
    let c = kind.members(&cohorts[2]);
    let overall = cohort_intersections(&frame, b, c);
    let everyone = frame.base.iter().chain(&frame.base_b).chain(&frame.base_c);
    let profiles = member_profiles(roster, &config.periods[0], everyone);
    Ok(CohortLongevity {
        kind,
        gender: concentration_table(&frame, &overall, Grouping::Gender, &profiles),
        macro_region: concentration_table(&frame, &overall, Grouping::MacroRegion, &profiles),
        uda: concentration_table(&frame, &overall, Grouping::Uda, &profiles),
        uda_rows: uda_longevity_table(&frame, b, c, &profiles),
        overall,
        frame,
    })
}

/// Full in-memory result of a run.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub config: RunConfig,
    pub scores: Vec<PeriodScores>,
    pub cohorts: Vec<CohortSets>,
    pub longevity: Vec<CohortLongevity>,
    pub career: CareerReport,
    pub mobility: MobilityReport,
}

impl Analysis {
    pub fn longevity_of(&self, kind: CohortKind) -> Option<&CohortLongevity> {
        self.longevity.iter().find(|l| l.kind == kind)
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool when 0.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

pub fn score_all(dataset: &Dataset, config: &RunConfig) -> Result<Vec<PeriodScores>> {
    config.validate()?;
    with_threads(config.threads, || {
        let baselines = CitationBaselines::from_publications(dataset.publications());
        config
            .periods
            .iter()
            .map(|p| score_period(dataset, &baselines, p, config))
            .collect()
    })?
}

pub fn analyze(dataset: &Dataset, config: &RunConfig) -> Result<Analysis> {
    let scores = score_all(dataset, config)?;
    let cohorts: Vec<CohortSets> = scores.iter().map(|s| period_cohorts(s, config)).collect();
    let mut kinds = vec![CohortKind::Top, CohortKind::Unproductive];
    if config.css {
        kinds.push(CohortKind::TopMu2);
    }
    let longevity = kinds
        .into_iter()
        .map(|k| cohort_longevity(k, dataset, config, &scores, &cohorts))
        .collect::<Result<Vec<_>>>()?;
    let persistent = |k: CohortKind| {
        longevity
            .iter()
            .find(|l| l.kind == k)
            .map(|l| l.overall.persistent.clone())
            .unwrap_or_default()
    };
    let (ts, un) = (
        persistent(CohortKind::Top),
        persistent(CohortKind::Unproductive),
    );
    let (pa, pc) = (&config.periods[0], &config.periods[2]);
    Ok(Analysis {
        career: career_progression(&ts, &un, dataset.roster(), pa, pc),
        mobility: mobility_report(&ts, &un, dataset.roster(), pa, pc),
        config: config.clone(),
        scores,
        cohorts,
        longevity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Authorship, Gender, MacroRegion, Publication, Rank, StaffRecord};

    fn staff(id: &str, years: std::ops::RangeInclusive<i32>) -> Vec<StaffRecord> {
        years
            .map(|year| StaffRecord {
                researcher_id: id.into(),
                year,
                gender: Gender::F,
                sds: "S1".into(),
                uda: "1".into(),
                university_id: "U1".into(),
                macro_region: MacroRegion::Center,
                rank: Rank::Assistant,
            })
            .collect()
    }

    fn dataset() -> Dataset {
        let mut roster = Vec::new();
        let mut pubs = Vec::new();
        let mut auths = Vec::new();
        for i in 0..10 {
            let id = format!("r{i}");
            roster.extend(staff(&id, 2001..=2012));
            for year in [2002, 2006, 2010] {
                let pub_id = format!("p{i}-{year}");
                pubs.push(Publication {
                    pub_id: pub_id.clone(),
                    year,
                    subject_category: "C".into(),
                    citations: i,
                    n_authors: 1,
                });
                auths.push(Authorship {
                    pub_id,
                    researcher_id: id.clone(),
                    position: 1,
                    intramural_last_author: None,
                });
            }
        }
        // Only on staff in period A.
        roster.extend(staff("gone", 2001..=2004));
        Dataset::new(roster, pubs, auths).unwrap()
    }

    #[test]
    fn stable_ranking_persists() {
        let analysis = analyze(&dataset(), &RunConfig::default()).unwrap();
        let ts = analysis.longevity_of(CohortKind::Top).unwrap();
        // Eleven members in A put r8 at 90; in B and C ten remain and r8
        // drops to 88.9.
        assert_eq!(ts.overall.a, 2);
        assert_eq!(ts.overall.abc, 1);
        assert!(ts.overall.persistent.contains("r9"));
        let un = analysis.longevity_of(CohortKind::Unproductive).unwrap();
        // r0 and "gone" are both UN in A, only r0 stays on staff.
        assert_eq!(un.frame.cohort_size, 2);
        assert_eq!(un.overall.a, 1);
        assert_eq!(un.overall.abc, 1);
    }

    #[test]
    fn thread_count_does_not_change_scores() {
        let d = dataset();
        let serial = score_all(
            &d,
            &RunConfig {
                threads: 1,
                ..RunConfig::default()
            },
        )
        .unwrap();
        let parallel = score_all(
            &d,
            &RunConfig {
                threads: 4,
                ..RunConfig::default()
            },
        )
        .unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn invalid_periods_fail_before_scoring() {
        let mut cfg = RunConfig::default();
        cfg.periods[1].start_year = 2004;
        assert!(matches!(analyze(&dataset(), &cfg), Err(Error::Config(_))));
    }
}
