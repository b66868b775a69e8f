//! Period eligibility and per-field cohort extraction: top scientists (TS),
//! unproductive researchers (UN) and the CSS second-mean class (TS_mu2).

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::{PeriodWindow, RosterIndex};
use crate::scoring::ScoreRecord;

/// Slack when comparing a percentile against the top cutoff, so that e.g.
/// `100 * 9 / 10` counts as reaching 90.
const CUTOFF_EPSILON: f64 = 1e-9;

/// Researchers on staff long enough in a period to be ranked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EligibilitySet {
    pub period: String,
    pub window_years: u32,
    pub min_years: u32,
    /// Set when the window is not four years long and the threshold was scaled.
    pub scaled_threshold: bool,
    pub members: BTreeSet<String>,
}

impl EligibilitySet {
    pub fn contains(&self, researcher_id: &str) -> bool {
        self.members.contains(researcher_id)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `ceil(0.75 * window_years)`: three of four years for the standard window.
pub fn min_staff_years(window_years: u32) -> u32 {
    (3 * window_years).div_ceil(4)
}

pub fn eligible_researchers(roster: &RosterIndex, period: &PeriodWindow) -> EligibilitySet {
    let window_years = period.years();
    let min_years = min_staff_years(window_years);
    let members = roster
        .researchers()
        .filter(|id| roster.years_on_staff(id, period) >= min_years)
        .map(str::to_string)
        .collect();
    EligibilitySet {
        period: period.label.clone(),
        window_years,
        min_years,
        scaled_threshold: window_years != 4,
        members,
    }
}

/// Researchers with at least one roster year in the period.
pub fn rostered_researchers(roster: &RosterIndex, period: &PeriodWindow) -> BTreeSet<String> {
    roster
        .researchers()
        .filter(|id| roster.years_on_staff(id, period) > 0)
        .map(str::to_string)
        .collect()
}

/// Members at or above the percentile cutoff; ties at the cutoff are kept.
pub fn identify_top(scores: &[ScoreRecord], cutoff: f64) -> BTreeSet<String> {
    scores
        .iter()
        .filter(|s| s.percentile >= cutoff - CUTOFF_EPSILON)
        .map(|s| s.researcher_id.clone())
        .collect()
}

/// Members with a score of exactly zero.
pub fn identify_unproductive(scores: &[ScoreRecord]) -> BTreeSet<String> {
    scores
        .iter()
        .filter(|s| s.fss == 0.0)
        .map(|s| s.researcher_id.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mu2Rule {
    /// TS_mu2 = { score > mu2 }
    #[default]
    Strict,
    /// TS_mu2 = { score >= mu2 }, for sensitivity checks.
    Inclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CssThresholds {
    pub sds: String,
    pub n: usize,
    /// Mean of all scores.
    pub mu1: f64,
    /// Size of { score > mu1 }.
    pub n_above_mu1: usize,
    /// Mean of { score > mu1 }; `None` when that class is empty.
    pub mu2: Option<f64>,
    pub n_ts_mu2: usize,
}

impl CssThresholds {
    pub fn is_defined(&self) -> bool {
        self.mu2.is_some()
    }
}

/// Arithmetic mean in input order, clamped to the sample range so that a
/// constant sample has itself as its mean.
fn mean(values: impl Iterator<Item = f64> + Clone) -> Option<f64> {
    let (sum, n, lo, hi) = values.fold(
        (0.0, 0usize, f64::INFINITY, f64::NEG_INFINITY),
        |(s, n, lo, hi), v| (s + v, n + 1, lo.min(v), hi.max(v)),
    );
    (n > 0).then(|| (sum / n as f64).clamp(lo, hi))
}

/// First two characteristic-scores means of a score vector: `mu1` over all
/// scores and `mu2` over those strictly above `mu1`.
pub fn css_means(scores: &[f64]) -> Option<(f64, Option<f64>)> {
    let mu1 = mean(scores.iter().copied())?;
    let mu2 = mean(scores.iter().copied().filter(move |&s| s > mu1));
    Some((mu1, mu2))
}

/// CSS thresholds of one field and its TS_mu2 members. An undefined `mu2`
/// (nothing strictly above the mean) yields an empty TS_mu2 set.
pub fn css_thresholds(
    sds: &str,
    scores: &[ScoreRecord],
    rule: Mu2Rule,
) -> (CssThresholds, BTreeSet<String>) {
    let values: Vec<f64> = scores.iter().map(|s| s.fss).collect();
    let (mu1, mu2) = css_means(&values).unwrap_or((0.0, None));
    let n_above_mu1 = values.iter().filter(|&&v| v > mu1).count();
    let members: BTreeSet<String> = match mu2 {
        None => BTreeSet::new(),
        Some(mu2) => scores
            .iter()
            .filter(|s| match rule {
                Mu2Rule::Strict => s.fss > mu2,
                Mu2Rule::Inclusive => s.fss >= mu2,
            })
            .map(|s| s.researcher_id.clone())
            .collect(),
    };
    (
        CssThresholds {
            sds: sds.to_string(),
            n: scores.len(),
            mu1,
            n_above_mu1,
            mu2,
            n_ts_mu2: members.len(),
        },
        members,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldCohort {
    pub sds: String,
    pub n: usize,
    pub top_cutoff: f64,
    pub css: Option<CssThresholds>,
    pub ts: BTreeSet<String>,
    pub un: BTreeSet<String>,
    pub ts_mu2: BTreeSet<String>,
}

pub fn field_cohort(
    sds: &str,
    scores: &[ScoreRecord],
    top_cutoff: f64,
    css: Option<Mu2Rule>,
) -> FieldCohort {
    let (thresholds, ts_mu2) = match css {
        Some(rule) => {
            let (t, m) = css_thresholds(sds, scores, rule);
            (Some(t), m)
        }
        None => (None, BTreeSet::new()),
    };
    FieldCohort {
        sds: sds.to_string(),
        n: scores.len(),
        top_cutoff,
        css: thresholds,
        ts: identify_top(scores, top_cutoff),
        un: identify_unproductive(scores),
        ts_mu2,
    }
}

/// Cohort membership of one period: unions over the per-field sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortSets {
    pub period: String,
    pub ts: BTreeSet<String>,
    pub un: BTreeSet<String>,
    pub ts_mu2: BTreeSet<String>,
    pub fields: BTreeMap<String, FieldCohort>,
}

impl CohortSets {
    pub fn from_fields(period: &str, fields: impl IntoIterator<Item = FieldCohort>) -> Self {
        let fields: BTreeMap<String, FieldCohort> =
            fields.into_iter().map(|f| (f.sds.clone(), f)).collect();
        let union = |pick: fn(&FieldCohort) -> &BTreeSet<String>| -> BTreeSet<String> {
            fields
                .values()
                .flat_map(|f| pick(f).iter().cloned())
                .collect()
        };
        CohortSets {
            period: period.to_string(),
            ts: union(|f| &f.ts),
            un: union(|f| &f.un),
            ts_mu2: union(|f| &f.ts_mu2),
            fields,
        }
    }
}
