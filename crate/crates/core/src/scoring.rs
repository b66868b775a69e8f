//! Citation baselines, fractional byline credit, per-period FSS and
//! within-field percentile ranks.
//!
//! For a researcher on staff `t` years in a period,
//!
//! ```text
//! FSS = (1/t) * sum_i (c_i / cbar(year_i, category_i)) * f_i
//! ```
//!
//! over the researcher's publications dated inside the period, where `cbar`
//! is the mean citation count of the *cited* publications sharing the
//! publication's year and subject category, and `f_i` is the researcher's
//! share of the byline.

use std::collections::HashMap;

use serde::Serialize;

use crate::config::{PositionalTable, WeightScheme};
use crate::error::{Error, Result};
use crate::model::{Authorship, Dataset, PeriodWindow, Publication, RosterIndex};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CitationBaseline {
    pub year: i32,
    pub subject_category: String,
    pub mean_cited: f64,
    pub n_cited: u64,
}

/// Mean citations over the cited publications of one (year, category)
/// cell; `None` when the cell has no cited publication.
pub fn citation_baseline<'a>(
    publications: impl IntoIterator<Item = &'a Publication>,
    year: i32,
    subject_category: &str,
) -> Option<CitationBaseline> {
    let (sum, n) = publications
        .into_iter()
        .filter(|p| p.year == year && p.subject_category == subject_category && p.citations > 0)
        .fold((0u64, 0u64), |(s, n), p| (s + p.citations, n + 1));
    (n > 0).then(|| CitationBaseline {
        year,
        subject_category: subject_category.to_string(),
        mean_cited: sum as f64 / n as f64,
        n_cited: n,
    })
}

/// All baselines of a publication table, keyed by (year, category).
#[derive(Debug, Clone, Default)]
pub struct CitationBaselines {
    /// subject_category -> year -> baseline
    cells: HashMap<String, HashMap<i32, CitationBaseline>>,
}

impl CitationBaselines {
    pub fn from_publications(publications: &[Publication]) -> Self {
        let mut acc: HashMap<(i32, &str), (u64, u64)> = HashMap::new();
        for p in publications.iter().filter(|p| p.citations > 0) {
            let e = acc
                .entry((p.year, p.subject_category.as_str()))
                .or_default();
            e.0 += p.citations;
            e.1 += 1;
        }
        let mut cells: HashMap<String, HashMap<i32, CitationBaseline>> = HashMap::new();
        for ((year, cat), (sum, n)) in acc {
            let b = CitationBaseline {
                year,
                subject_category: cat.to_string(),
                mean_cited: sum as f64 / n as f64,
                n_cited: n,
            };
            cells.entry(cat.to_string()).or_default().insert(year, b);
        }
        CitationBaselines { cells }
    }

    pub fn get(&self, year: i32, subject_category: &str) -> Option<&CitationBaseline> {
        self.cells.get(subject_category)?.get(&year)
    }

    pub fn len(&self) -> usize {
        self.cells.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `c_i / cbar`; uncited publications contribute exactly zero.
    pub fn normalized_citations(&self, p: &Publication) -> Result<f64> {
        if p.citations == 0 {
            return Ok(0.0);
        }
        match self.get(p.year, &p.subject_category) {
            Some(b) => Ok(p.citations as f64 / b.mean_cited),
            None => Err(Error::MissingBaseline {
                pub_id: p.pub_id.clone(),
                year: p.year,
                subject_category: p.subject_category.clone(),
            }),
        }
    }
}

fn positional_weight(table: &PositionalTable, position: u32, n_authors: u32) -> f64 {
    match n_authors {
        1 => 1.0,
        2 => {
            let edge = if position == 1 {
                table.first
            } else {
                table.last
            };
            edge / (table.first + table.last)
        }
        _ if position == 1 => table.first,
        n if position == n => table.last,
        n => table.middle_share / f64::from(n - 2),
    }
}

/// Share of the byline credited to `authorship` under `scheme`.
pub fn fractional_contribution(
    publication: &Publication,
    authorship: &Authorship,
    scheme: &WeightScheme,
) -> Result<f64> {
    let n = publication.n_authors;
    if authorship.pub_id != publication.pub_id
        || authorship.position == 0
        || authorship.position > n
    {
        return Err(Error::Integrity(format!(
            "authorship ({}, position {}) does not fit publication {} with {n} author(s)",
            authorship.pub_id, authorship.position, publication.pub_id
        )));
    }
    match scheme {
        WeightScheme::EqualFraction => Ok(1.0 / f64::from(n)),
        WeightScheme::Positional(None) => Err(Error::Config(
            "positional weighting selected without a weight table".into(),
        )),
        WeightScheme::Positional(Some(table)) => {
            table.validate()?;
            Ok(positional_weight(table, authorship.position, n))
        }
    }
}

pub fn years_on_staff(researcher_id: &str, period: &PeriodWindow, roster: &RosterIndex) -> u32 {
    roster.years_on_staff(researcher_id, period)
}

/// Period score of one researcher before ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fss {
    pub t: u32,
    pub fss: f64,
}

/// Summation runs over the researcher's publications in ascending pub_id
/// order so that results are reproducible bit for bit.
pub fn compute_fss(
    researcher_id: &str,
    period: &PeriodWindow,
    dataset: &Dataset,
    baselines: &CitationBaselines,
    scheme: &WeightScheme,
) -> Result<Fss> {
    let t = years_on_staff(researcher_id, period, dataset.roster());
    if t == 0 {
        return Err(Error::UndefinedScore {
            researcher_id: researcher_id.to_string(),
            period: period.label.clone(),
        });
    }
    let mut total = 0.0;
    for (publication, authorship) in dataset.works_of(researcher_id) {
        if !period.contains(publication.year) {
            continue;
        }
        let impact = baselines.normalized_citations(publication)?;
        if impact == 0.0 {
            continue;
        }
        total += impact * fractional_contribution(publication, authorship, scheme)?;
    }
    Ok(Fss {
        t,
        fss: total / f64::from(t),
    })
}

/// Ranked score of a researcher within their field for one period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRecord {
    pub researcher_id: String,
    pub period: String,
    pub sds: String,
    pub t: u32,
    pub fss: f64,
    pub percentile: f64,
}

/// Percentile on a 0-100 worst-to-best scale: the share of the *other*
/// members of the field scoring strictly lower. Equal scores share a
/// percentile; a field of one gets 100.
pub fn percentile_ranks<K: Clone>(scores: &[(K, f64)]) -> Result<Vec<(K, f64)>> {
    if scores.is_empty() {
        return Err(Error::EmptyField("cannot rank an empty field".into()));
    }
    if scores.iter().any(|(_, s)| s.is_nan()) {
        return Err(Error::EmptyField("field contains a NaN score".into()));
    }
    let n = scores.len();
    if n == 1 {
        return Ok(vec![(scores[0].0.clone(), 100.0)]);
    }
    let mut sorted: Vec<f64> = scores.iter().map(|(_, s)| *s).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN filtered above"));
    let others = (n - 1) as f64;
    Ok(scores
        .iter()
        .map(|(k, s)| {
            let lower = sorted.partition_point(|v| v < s);
            (k.clone(), 100.0 * lower as f64 / others)
        })
        .collect())
}
