//! Serialization of an [`Analysis`] into CSV tables and JSON documents.
//!
//! A [`ReportBundle`] is assembled fully in memory and only then written,
//! so a failing run never leaves a half-written output directory behind.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cohort::CohortSets;
use crate::display;
use crate::error::{Error, Result};
use crate::ingest::ValidationReport;
use crate::longitudinal::{ConcentrationTable, LongevityReport};
use crate::pipeline::{Analysis, CohortKind, CohortLongevity, PeriodScores};

/// File name -> contents, written in name order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportBundle {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl ReportBundle {
    pub fn insert(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.insert(name.into(), contents.into());
    }

    fn insert_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
        text.push('\n');
        self.insert(name, text);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    /// Writes every file into `dir`; on failure the files written so far
    /// are removed again.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written: Vec<PathBuf> = Vec::new();
        for (name, contents) in &self.files {
            let path = dir.join(name);
            if let Err(e) = std::fs::write(&path, contents) {
                for p in &written {
                    let _ = std::fs::remove_file(p);
                }
                let _ = std::fs::remove_file(&path);
                return Err(Error::io(&path, e));
            }
            written.push(path);
        }
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn scores_csv(scores: &[PeriodScores]) -> String {
    let mut out = String::from("period,sds,researcher_id,t,fss,percentile\n");
    for p in scores {
        for s in p.records() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.period, s.sds, s.researcher_id, s.t, s.fss, s.percentile
            );
        }
    }
    out
}

pub fn cohorts_csv(scores: &[PeriodScores], cohorts: &[CohortSets]) -> String {
    let mut out = String::from("period,sds,researcher_id,fss,percentile,is_ts,is_un,is_ts_mu2\n");
    for (p, c) in scores.iter().zip(cohorts) {
        for s in p.records() {
            let id = &s.researcher_id;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.period,
                s.sds,
                id,
                s.fss,
                s.percentile,
                c.ts.contains(id),
                c.un.contains(id),
                c.ts_mu2.contains(id)
            );
        }
    }
    out
}

pub fn fields_csv(scores: &[PeriodScores], cohorts: &[CohortSets]) -> String {
    let mut out = String::from("period,sds,n,top_cutoff,n_ts,n_un,mu1,n_above_mu1,mu2,n_ts_mu2\n");
    for (p, c) in scores.iter().zip(cohorts) {
        for f in c.fields.values() {
            let (mu1, above, mu2) = match &f.css {
                Some(t) => (t.mu1.to_string(), t.n_above_mu1.to_string(), opt(t.mu2)),
                None => Default::default(),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                p.period.label,
                f.sds,
                f.n,
                f.top_cutoff,
                f.ts.len(),
                f.un.len(),
                mu1,
                above,
                mu2,
                f.ts_mu2.len()
            );
        }
    }
    out
}

fn longevity_line(out: &mut String, scope: &str, group: &str, r: &LongevityReport) {
    let [pab, pac, pabc] = r.percents();
    let _ = writeln!(
        out,
        "{scope},{group},{},{},{},{},{},{},{},{},{},{pab},{pac},{pabc}",
        r.a,
        r.ab,
        r.ac,
        r.abc,
        r.a_for_b,
        r.a_for_c,
        r.share_ab(),
        r.share_ac(),
        r.share_abc()
    );
}

/// Overall and per-UDA Euler counts of one cohort kind.
pub fn longevity_csv(l: &CohortLongevity) -> String {
    let mut out = String::from(
        "scope,group,a,ab,ac,abc,a_for_b,a_for_c,share_ab,share_ac,share_abc,pct_ab,pct_ac,pct_abc\n",
    );
    longevity_line(&mut out, "overall", "all", &l.overall);
    for row in &l.uda_rows {
        longevity_line(&mut out, "uda", &row.uda, &row.report);
    }
    out
}

fn concentration_lines(out: &mut String, t: &ConcentrationTable) {
    for r in &t.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            t.grouping.as_str(),
            r.group,
            r.a,
            r.abc,
            r.share_of_a,
            r.share_of_abc,
            r.persistence,
            opt(r.concentration_index),
            r.share_of_a_display(t.total_a),
            r.share_of_abc_display(t.total_abc),
            r.persistence_display(),
            r.index_display(t.total_a, t.total_abc).unwrap_or_default()
        );
    }
}

/// Gender, macro-region and UDA concentration tables of one cohort kind.
pub fn concentration_csv(l: &CohortLongevity) -> String {
    let mut out = String::from(
        "grouping,group,a,abc,share_of_a,share_of_abc,persistence,concentration_index,\
         pct_of_a,pct_of_abc,pct_persistence,index_display\n",
    );
    for t in [&l.gender, &l.macro_region, &l.uda] {
        concentration_lines(&mut out, t);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerRegion {
    pub label: String,
    pub cardinality: u64,
    pub share: f64,
    pub share_display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerDiagram {
    pub cohort: String,
    pub periods: [String; 3],
    pub regions: Vec<EulerRegion>,
}

/// Region labels `A`, `A∩B`, `A∩C`, `A∩B∩C` with counts and shares of the
/// base cohort (or of the pairwise denominators when those differ).
pub fn euler_diagram(cohort: &str, periods: &[String; 3], r: &LongevityReport) -> EulerDiagram {
    let [a, b, c] = periods;
    let region = |label: String, n: u64, den: u64| EulerRegion {
        label,
        cardinality: n,
        share: if den == 0 { 0.0 } else { n as f64 / den as f64 },
        share_display: display::percent(n, den),
    };
    EulerDiagram {
        cohort: cohort.to_string(),
        periods: periods.clone(),
        regions: vec![
            region(a.clone(), r.a, r.a),
            region(format!("{a}∩{b}"), r.ab, r.a_for_b),
            region(format!("{a}∩{c}"), r.ac, r.a_for_c),
            region(format!("{a}∩{b}∩{c}"), r.abc, r.a),
        ],
    }
}

pub fn career_csv(a: &Analysis) -> String {
    let mut out = String::from("cohort,starting_rank,outcome,pool,count,share,pct\n");
    for r in &a.career.rows {
        let outcome = match r.outcome {
            crate::longitudinal::CareerOutcome::NeverPromoted => "never_promoted",
            crate::longitudinal::CareerOutcome::Promoted => "promoted",
        };
        let _ = writeln!(
            out,
            "{},{},{outcome},{},{},{},{}",
            r.cohort,
            r.starting_rank,
            r.pool,
            r.count,
            r.share,
            r.share_display()
        );
    }
    out
}

pub fn mobility_csv(a: &Analysis) -> String {
    let mut out = String::from("cohort,members,movers,mover_share,pct,unknown_region\n");
    for c in &a.mobility.cohorts {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.cohort,
            c.members,
            c.movers,
            c.mover_share,
            c.share_display(),
            c.unknown_region
        );
    }
    out
}

pub fn mobility_flows_csv(a: &Analysis) -> String {
    let mut out = String::from("cohort,region,inflow,outflow,net\n");
    for c in &a.mobility.cohorts {
        for f in &c.flows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.cohort,
                f.region.as_str(),
                f.inflow,
                f.outflow,
                f.net
            );
        }
    }
    out
}

#[derive(Serialize)]
struct PeriodSummary<'a> {
    label: &'a str,
    start_year: i32,
    end_year: i32,
    min_staff_years: u32,
    threshold_scaled: bool,
    eligible: usize,
    fields: usize,
    ts: usize,
    un: usize,
    ts_mu2: usize,
}

#[derive(Serialize)]
struct DisplayedTable<'a> {
    #[serde(flatten)]
    table: &'a ConcentrationTable,
    display: Vec<BTreeMap<&'static str, String>>,
}

fn displayed(t: &ConcentrationTable) -> DisplayedTable<'_> {
    let display = t
        .rows
        .iter()
        .map(|r| {
            BTreeMap::from([
                ("group", r.group.clone()),
                ("pct_of_a", r.share_of_a_display(t.total_a)),
                ("pct_of_abc", r.share_of_abc_display(t.total_abc)),
                ("pct_persistence", r.persistence_display()),
                (
                    "index",
                    r.index_display(t.total_a, t.total_abc).unwrap_or_default(),
                ),
            ])
        })
        .collect();
    DisplayedTable { table: t, display }
}

#[derive(Serialize)]
struct LongevitySection<'a> {
    cohort: &'static str,
    constraint: crate::config::SurvivalConstraint,
    cohort_size: usize,
    overall: &'a LongevityReport,
    overall_display: [String; 3],
    euler: EulerDiagram,
    gender: DisplayedTable<'a>,
    macro_region: DisplayedTable<'a>,
    uda_concentration: DisplayedTable<'a>,
    uda_rows: &'a [crate::longitudinal::UdaLongevityRow],
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    /// Analysis settings; thread count and output location are left out so
    /// the bundle does not depend on how or where it was produced.
    config: crate::config::RunConfig,
    validation: Option<&'a ValidationReport>,
    periods: Vec<PeriodSummary<'a>>,
    longevity: Vec<LongevitySection<'a>>,
    career: &'a crate::longitudinal::CareerReport,
    mobility: &'a crate::longitudinal::MobilityReport,
}

fn period_labels(a: &Analysis) -> [String; 3] {
    [
        a.config.periods[0].label.clone(),
        a.config.periods[1].label.clone(),
        a.config.periods[2].label.clone(),
    ]
}

fn report_document<'a>(
    a: &'a Analysis,
    validation: Option<&'a ValidationReport>,
) -> ReportDocument<'a> {
    let labels = period_labels(a);
    let mut config = a.config.clone();
    config.threads = 0;
    config.inputs.output_dir = None;
    ReportDocument {
        config,
        validation,
        periods: a
            .scores
            .iter()
            .zip(&a.cohorts)
            .map(|(s, c)| PeriodSummary {
                label: &s.period.label,
                start_year: s.period.start_year,
                end_year: s.period.end_year,
                min_staff_years: s.eligibility.min_years,
                threshold_scaled: s.eligibility.scaled_threshold,
                eligible: s.eligibility.len(),
                fields: s.fields.len(),
                ts: c.ts.len(),
                un: c.un.len(),
                ts_mu2: c.ts_mu2.len(),
            })
            .collect(),
        longevity: a
            .longevity
            .iter()
            .map(|l| LongevitySection {
                cohort: l.kind.label(),
                constraint: l.frame.constraint,
                cohort_size: l.frame.cohort_size,
                overall: &l.overall,
                overall_display: l.overall.percents(),
                euler: euler_diagram(l.kind.label(), &labels, &l.overall),
                gender: displayed(&l.gender),
                macro_region: displayed(&l.macro_region),
                uda_concentration: displayed(&l.uda),
                uda_rows: &l.uda_rows,
            })
            .collect(),
        career: &a.career,
        mobility: &a.mobility,
    }
}

/// Which parts of the bundle to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Score,
    Cohorts,
    Longevity,
    Report,
    Run,
}

pub fn build_bundle(
    a: &Analysis,
    stage: Stage,
    validation: Option<&ValidationReport>,
) -> Result<ReportBundle> {
    let mut b = ReportBundle::default();
    let per_researcher = matches!(
        stage,
        Stage::Score | Stage::Cohorts | Stage::Longevity | Stage::Run
    );
    if per_researcher {
        b.insert("scores.csv", scores_csv(&a.scores));
    }
    if stage == Stage::Score {
        return Ok(b);
    }
    if per_researcher {
        b.insert("cohorts.csv", cohorts_csv(&a.scores, &a.cohorts));
    }
    b.insert("fields.csv", fields_csv(&a.scores, &a.cohorts));
    if stage == Stage::Cohorts {
        return Ok(b);
    }
    let labels = period_labels(a);
    for l in &a.longevity {
        let stem = l.kind.stem();
        b.insert(format!("{stem}_longevity.csv"), longevity_csv(l));
        b.insert(format!("{stem}_concentration.csv"), concentration_csv(l));
        b.insert_json(
            &format!("{stem}_euler.json"),
            &euler_diagram(l.kind.label(), &labels, &l.overall),
        )?;
    }
    if stage == Stage::Longevity {
        return Ok(b);
    }
    b.insert("career.csv", career_csv(a));
    b.insert("mobility.csv", mobility_csv(a));
    b.insert("mobility_flows.csv", mobility_flows_csv(a));
    b.insert_json("report.json", &report_document(a, validation))?;
    Ok(b)
}

/// Convenience lookup used by callers that only need one kind.
pub fn euler_for(a: &Analysis, kind: CohortKind) -> Option<EulerDiagram> {
    a.longevity_of(kind)
        .map(|l| euler_diagram(kind.label(), &period_labels(a), &l.overall))
}
