//! Domain records and the indexed in-memory dataset.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
    #[serde(rename = "unknown")]
    Unknown,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::M => "M",
            Gender::F => "F",
            Gender::Unknown => "unknown",
        }
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "M" => Ok(Gender::M),
            "F" => Ok(Gender::F),
            "" | "unknown" => Ok(Gender::Unknown),
            other => Err(format!("invalid gender {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MacroRegion {
    North,
    Center,
    South,
}

impl MacroRegion {
    pub const ALL: [MacroRegion; 3] = [MacroRegion::North, MacroRegion::Center, MacroRegion::South];

    pub fn as_str(self) -> &'static str {
        match self {
            MacroRegion::North => "North",
            MacroRegion::Center => "Center",
            MacroRegion::South => "South",
        }
    }
}

impl FromStr for MacroRegion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "North" => Ok(MacroRegion::North),
            "Center" => Ok(MacroRegion::Center),
            "South" => Ok(MacroRegion::South),
            other => Err(format!("invalid macro_region {other:?}")),
        }
    }
}

/// Academic rank; the derived ordering is the promotion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rank {
    Assistant,
    Associate,
    Full,
}

impl Rank {
    pub fn as_str(self) -> &'static str {
        match self {
            Rank::Assistant => "assistant",
            Rank::Associate => "associate",
            Rank::Full => "full",
        }
    }
}

impl FromStr for Rank {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "assistant" => Ok(Rank::Assistant),
            "associate" => Ok(Rank::Associate),
            "full" => Ok(Rank::Full),
            other => Err(format!("invalid rank {other:?}")),
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One researcher-year on the staff roster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaffRecord {
    pub researcher_id: String,
    pub year: i32,
    pub gender: Gender,
    pub sds: String,
    pub uda: String,
    pub university_id: String,
    pub macro_region: MacroRegion,
    pub rank: Rank,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Publication {
    pub pub_id: String,
    pub year: i32,
    pub subject_category: String,
    pub citations: u64,
    pub n_authors: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Authorship {
    pub pub_id: String,
    pub researcher_id: String,
    /// 1-based byline index.
    pub position: u32,
    pub intramural_last_author: Option<bool>,
}

/// Inclusive multi-year observation window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodWindow {
    pub label: String,
    pub start_year: i32,
    pub end_year: i32,
}

impl PeriodWindow {
    pub fn new(label: impl Into<String>, start_year: i32, end_year: i32) -> Result<Self> {
        let label = label.into();
        if end_year < start_year {
            return Err(Error::Config(format!(
                "period {label}: end year {end_year} precedes start year {start_year}"
            )));
        }
        Ok(PeriodWindow {
            label,
            start_year,
            end_year,
        })
    }

    pub fn years(&self) -> u32 {
        (self.end_year - self.start_year + 1) as u32
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start_year..=self.end_year).contains(&year)
    }
}

/// Per-researcher view of the roster, years ascending.
#[derive(Debug, Clone, Default)]
pub struct RosterIndex {
    by_researcher: BTreeMap<String, Vec<usize>>,
    records: Vec<StaffRecord>,
}

impl RosterIndex {
    pub fn new(records: Vec<StaffRecord>) -> Self {
        let mut by_researcher: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            by_researcher
                .entry(r.researcher_id.clone())
                .or_default()
                .push(i);
        }
        for rows in by_researcher.values_mut() {
            rows.sort_by_key(|&i| records[i].year);
        }
        RosterIndex {
            by_researcher,
            records,
        }
    }

    pub fn records(&self) -> &[StaffRecord] {
        &self.records
    }

    pub fn researchers(&self) -> impl Iterator<Item = &str> {
        self.by_researcher.keys().map(String::as_str)
    }

    pub fn contains(&self, researcher_id: &str) -> bool {
        self.by_researcher.contains_key(researcher_id)
    }

    /// All roster rows of a researcher, ascending by year.
    pub fn history(&self, researcher_id: &str) -> impl Iterator<Item = &StaffRecord> {
        self.by_researcher
            .get(researcher_id)
            .into_iter()
            .flatten()
            .map(move |&i| &self.records[i])
    }

    pub fn history_in<'a>(
        &'a self,
        researcher_id: &str,
        period: &'a PeriodWindow,
    ) -> impl Iterator<Item = &'a StaffRecord> {
        self.history(researcher_id)
            .filter(move |r| period.contains(r.year))
    }

    /// Latest roster row with `year <= year_limit`.
    pub fn as_of(&self, researcher_id: &str, year_limit: i32) -> Option<&StaffRecord> {
        self.history(researcher_id)
            .take_while(|r| r.year <= year_limit)
            .last()
    }

    pub fn years_on_staff(&self, researcher_id: &str, period: &PeriodWindow) -> u32 {
        self.history_in(researcher_id, period).count() as u32
    }

    /// SDS held in the majority of the period's roster years; ties go to
    /// the SDS held in the latest of the tied years.
    pub fn majority_sds(&self, researcher_id: &str, period: &PeriodWindow) -> Option<&StaffRecord> {
        let mut tally: HashMap<&str, (u32, i32, &StaffRecord)> = HashMap::new();
        for r in self
            .history(researcher_id)
            .filter(|r| period.contains(r.year))
        {
            let e = tally.entry(r.sds.as_str()).or_insert((0, r.year, r));
            e.0 += 1;
            if r.year >= e.1 {
                e.1 = r.year;
                e.2 = r;
            }
        }
        tally
            .into_values()
            .max_by_key(|&(count, latest, _)| (count, latest))
            .map(|(_, _, r)| r)
    }
}

/// Loaded and cross-checked input tables.
#[derive(Debug, Clone)]
pub struct Dataset {
    roster: RosterIndex,
    publications: Vec<Publication>,
    authorships: Vec<Authorship>,
    pub_index: HashMap<String, usize>,
    /// researcher_id -> authorship indices, ascending by pub_id.
    by_researcher: HashMap<String, Vec<usize>>,
    authorship_counts: Vec<u32>,
}

impl Dataset {
    /// Enforces referential integrity: every authorship names a known
    /// publication and a rostered researcher, positions fit the byline, and
    /// (pub_id, researcher_id) pairs are unique.
    pub fn new(
        roster: Vec<StaffRecord>,
        publications: Vec<Publication>,
        authorships: Vec<Authorship>,
    ) -> Result<Self> {
        let roster = RosterIndex::new(roster);
        let mut pub_index = HashMap::with_capacity(publications.len());
        for (i, p) in publications.iter().enumerate() {
            if p.n_authors == 0 {
                return Err(Error::Integrity(format!(
                    "publication {} has n_authors = 0",
                    p.pub_id
                )));
            }
            if pub_index.insert(p.pub_id.clone(), i).is_some() {
                return Err(Error::Integrity(format!(
                    "duplicate publication id {}",
                    p.pub_id
                )));
            }
        }

        let mut authorship_counts = vec![0u32; publications.len()];
        let mut by_researcher: HashMap<String, Vec<usize>> = HashMap::new();
        let mut seen: HashMap<(&str, &str), usize> = HashMap::with_capacity(authorships.len());
        for (i, a) in authorships.iter().enumerate() {
            let Some(&p) = pub_index.get(&a.pub_id) else {
                return Err(Error::Integrity(format!(
                    "authorship references unknown publication {}",
                    a.pub_id
                )));
            };
            let publication = &publications[p];
            if a.position == 0 || a.position > publication.n_authors {
                return Err(Error::Integrity(format!(
                    "authorship ({}, {}) position {} outside byline of {} author(s)",
                    a.pub_id, a.researcher_id, a.position, publication.n_authors
                )));
            }
            if !roster.contains(&a.researcher_id) {
                return Err(Error::Integrity(format!(
                    "authorship ({}, {}) references researcher absent from roster",
                    a.pub_id, a.researcher_id
                )));
            }
            if let Some(prev) = seen.insert((&a.pub_id, &a.researcher_id), i) {
                return Err(Error::Integrity(format!(
                    "authorship ({}, {}) listed twice (rows {} and {})",
                    a.pub_id,
                    a.researcher_id,
                    prev + 1,
                    i + 1
                )));
            }
            authorship_counts[p] += 1;
            if authorship_counts[p] > publication.n_authors {
                return Err(Error::Integrity(format!(
                    "publication {} has more authorship rows than its {} author(s)",
                    a.pub_id, publication.n_authors
                )));
            }
            by_researcher
                .entry(a.researcher_id.clone())
                .or_default()
                .push(i);
        }
        drop(seen);
        for rows in by_researcher.values_mut() {
            rows.sort_by(|&x, &y| authorships[x].pub_id.cmp(&authorships[y].pub_id));
        }

        Ok(Dataset {
            roster,
            publications,
            authorships,
            pub_index,
            by_researcher,
            authorship_counts,
        })
    }

    pub fn roster(&self) -> &RosterIndex {
        &self.roster
    }

    pub fn publications(&self) -> &[Publication] {
        &self.publications
    }

    pub fn authorships(&self) -> &[Authorship] {
        &self.authorships
    }

    pub fn publication(&self, pub_id: &str) -> Option<&Publication> {
        self.pub_index.get(pub_id).map(|&i| &self.publications[i])
    }

    pub fn authorship_count(&self, pub_id: &str) -> u32 {
        self.pub_index
            .get(pub_id)
            .map(|&i| self.authorship_counts[i])
            .unwrap_or(0)
    }

    /// A researcher's authorships paired with their publications, ascending by pub_id.
    pub fn works_of<'a>(
        &'a self,
        researcher_id: &str,
    ) -> impl Iterator<Item = (&'a Publication, &'a Authorship)> + 'a {
        self.by_researcher
            .get(researcher_id)
            .into_iter()
            .flatten()
            .map(move |&i| {
                let a = &self.authorships[i];
                (&self.publications[self.pub_index[&a.pub_id]], a)
            })
    }

    /// Distinct SDS codes in the roster.
    pub fn sds_codes(&self) -> BTreeSet<&str> {
        self.roster
            .records()
            .iter()
            .map(|r| r.sds.as_str())
            .collect()
    }
}
