//! CSV loaders, writers and dataset validation.
//!
//! Three files with fixed headers:
//!
//! ```text
//! roster.csv        researcher_id,year,gender,sds,uda,university_id,macro_region,rank
//! publications.csv  pub_id,year,subject_category,citations,n_authors
//! authorships.csv   pub_id,researcher_id,position[,intramural_last_author]
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result, RowError};
use crate::model::{Authorship, Dataset, Publication, StaffRecord};

pub const ROSTER_HEADER: &[&str] = &[
    "researcher_id",
    "year",
    "gender",
    "sds",
    "uda",
    "university_id",
    "macro_region",
    "rank",
];
pub const PUBLICATIONS_HEADER: &[&str] = &[
    "pub_id",
    "year",
    "subject_category",
    "citations",
    "n_authors",
];
pub const AUTHORSHIPS_HEADER: &[&str] = &[
    "pub_id",
    "researcher_id",
    "position",
    "intramural_last_author",
];
const AUTHORSHIPS_HEADER_SHORT: &[&str] = &["pub_id", "researcher_id", "position"];

fn open(path: &Path) -> Result<csv::Reader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::with_capacity(1 << 16, file)))
}

fn check_header<R: Read>(
    path: &Path,
    rdr: &mut csv::Reader<R>,
    accepted: &[&[&str]],
) -> Result<usize> {
    let headers = rdr.headers().map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Header {
            path: path.to_path_buf(),
            found: format!("{other:?}"),
            expected: accepted[0].join(","),
        },
    })?;
    let found: Vec<&str> = headers.iter().collect();
    match accepted.iter().find(|h| **h == found.as_slice()) {
        Some(h) => Ok(h.len()),
        None => Err(Error::Header {
            path: path.to_path_buf(),
            found: found.join(","),
            expected: accepted[0].join(","),
        }),
    }
}

fn parse<T: FromStr>(field: &str, name: &str) -> std::result::Result<T, String> {
    field
        .parse()
        .map_err(|_| format!("invalid {name} {field:?}"))
}

fn non_empty(field: &str, name: &str) -> std::result::Result<String, String> {
    if field.is_empty() {
        Err(format!("{name} is empty"))
    } else {
        Ok(field.to_string())
    }
}

/// Drives a CSV reader row by row, collecting row-level failures.
/// Each successful row is returned with its 1-based file line.
fn read_rows<R: Read, T>(
    path: &Path,
    rdr: &mut csv::Reader<R>,
    width: usize,
    mut parse_row: impl FnMut(&csv::StringRecord) -> std::result::Result<T, String>,
) -> Result<Vec<(u64, T)>> {
    let mut out = Vec::new();
    let mut bad = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map(|p| p.line()).unwrap_or(0);
                if record.len() != width {
                    bad.push(RowError {
                        line,
                        message: format!("expected {width} fields, found {}", record.len()),
                    });
                    continue;
                }
                match parse_row(&record) {
                    Ok(v) => out.push((line, v)),
                    Err(message) => bad.push(RowError { line, message }),
                }
            }
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                match e.into_kind() {
                    csv::ErrorKind::Io(io) => return Err(Error::io(path, io)),
                    other => bad.push(RowError {
                        line,
                        message: format!("{other:?}"),
                    }),
                }
            }
        }
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(Error::MalformedRows {
            path: path.to_path_buf(),
            rows: bad,
        })
    }
}

pub fn load_roster(path: impl AsRef<Path>) -> Result<Vec<StaffRecord>> {
    read_roster(path.as_ref(), None)
}

/// As [`load_roster`], rejecting rows whose year lies outside `span`.
pub fn load_roster_in_span(path: impl AsRef<Path>, span: (i32, i32)) -> Result<Vec<StaffRecord>> {
    read_roster(path.as_ref(), Some(span))
}

fn read_roster(path: &Path, span: Option<(i32, i32)>) -> Result<Vec<StaffRecord>> {
    let mut rdr = open(path)?;
    let width = check_header(path, &mut rdr, &[ROSTER_HEADER])?;
    let rows = read_rows(path, &mut rdr, width, |r| {
        let year: i32 = parse(&r[1], "year")?;
        if let Some((lo, hi)) = span {
            if year < lo || year > hi {
                return Err(format!("year {year} outside dataset span {lo}-{hi}"));
            }
        }
        Ok(StaffRecord {
            researcher_id: non_empty(&r[0], "researcher_id")?,
            year,
            gender: r[2].parse()?,
            sds: non_empty(&r[3], "sds")?,
            uda: non_empty(&r[4], "uda")?,
            university_id: non_empty(&r[5], "university_id")?,
            macro_region: r[6].parse()?,
            rank: r[7].parse()?,
        })
    })?;

    let mut seen: HashMap<(&str, i32), u64> = HashMap::with_capacity(rows.len());
    for (line, rec) in &rows {
        if let Some(first) = seen.insert((rec.researcher_id.as_str(), rec.year), *line) {
            return Err(Error::DuplicateKey {
                path: path.to_path_buf(),
                key: format!("({}, {})", rec.researcher_id, rec.year),
                first_line: first,
                second_line: *line,
            });
        }
    }
    drop(seen);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

fn read_publications(path: &Path) -> Result<Vec<(u64, Publication)>> {
    let mut rdr = open(path)?;
    let width = check_header(path, &mut rdr, &[PUBLICATIONS_HEADER])?;
    let rows = read_rows(path, &mut rdr, width, |r| {
        let n_authors: u32 = parse(&r[4], "n_authors")?;
        if n_authors == 0 {
            return Err("n_authors must be at least 1".into());
        }
        Ok(Publication {
            pub_id: non_empty(&r[0], "pub_id")?,
            year: parse(&r[1], "year")?,
            subject_category: non_empty(&r[2], "subject_category")?,
            citations: parse(&r[3], "citations")?,
            n_authors,
        })
    })?;
    let mut seen: HashMap<&str, u64> = HashMap::with_capacity(rows.len());
    for (line, p) in &rows {
        if let Some(first) = seen.insert(p.pub_id.as_str(), *line) {
            return Err(Error::DuplicateKey {
                path: path.to_path_buf(),
                key: p.pub_id.clone(),
                first_line: first,
                second_line: *line,
            });
        }
    }
    drop(seen);
    Ok(rows)
}

fn read_authorships(path: &Path) -> Result<Vec<(u64, Authorship)>> {
    let mut rdr = open(path)?;
    let width = check_header(
        path,
        &mut rdr,
        &[AUTHORSHIPS_HEADER, AUTHORSHIPS_HEADER_SHORT],
    )?;
    read_rows(path, &mut rdr, width, |r| {
        let intramural_last_author = match r.get(3).unwrap_or("") {
            "" => None,
            "true" => Some(true),
            "false" => Some(false),
            other => return Err(format!("invalid intramural_last_author {other:?}")),
        };
        Ok(Authorship {
            pub_id: non_empty(&r[0], "pub_id")?,
            researcher_id: non_empty(&r[1], "researcher_id")?,
            position: parse(&r[2], "position")?,
            intramural_last_author,
        })
    })
}

/// Loads publications and their authorships, enforcing that every
/// authorship names an existing publication with a byline long enough for
/// its position.
pub fn load_publications(
    pubs_path: impl AsRef<Path>,
    authorships_path: impl AsRef<Path>,
) -> Result<(Vec<Publication>, Vec<Authorship>)> {
    let pubs_path = pubs_path.as_ref();
    let authorships_path = authorships_path.as_ref();
    let pubs = read_publications(pubs_path)?;
    let auths = read_authorships(authorships_path)?;

    let index: HashMap<&str, &Publication> =
        pubs.iter().map(|(_, p)| (p.pub_id.as_str(), p)).collect();
    let mut seen: HashMap<(&str, &str), u64> = HashMap::with_capacity(auths.len());
    for (line, a) in &auths {
        let Some(p) = index.get(a.pub_id.as_str()) else {
            return Err(Error::Integrity(format!(
                "{} line {line}: dangling reference to publication {}",
                authorships_path.display(),
                a.pub_id
            )));
        };
        if a.position == 0 || a.position > p.n_authors {
            return Err(Error::Integrity(format!(
                "{} line {line}: position {} exceeds n_authors {} of publication {}",
                authorships_path.display(),
                a.position,
                p.n_authors,
                a.pub_id
            )));
        }
        if let Some(first) = seen.insert((a.pub_id.as_str(), a.researcher_id.as_str()), *line) {
            return Err(Error::DuplicateKey {
                path: authorships_path.to_path_buf(),
                key: format!("({}, {})", a.pub_id, a.researcher_id),
                first_line: first,
                second_line: *line,
            });
        }
    }
    drop(seen);
    drop(index);
    Ok((
        pubs.into_iter().map(|(_, p)| p).collect(),
        auths.into_iter().map(|(_, a)| a).collect(),
    ))
}

/// Loads all three tables into an indexed [`Dataset`].
pub fn load_dataset(
    roster_path: impl AsRef<Path>,
    pubs_path: impl AsRef<Path>,
    authorships_path: impl AsRef<Path>,
) -> Result<Dataset> {
    let roster = load_roster(roster_path)?;
    let (pubs, auths) = load_publications(pubs_path, authorships_path)?;
    Dataset::new(roster, pubs, auths)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(BufWriter::with_capacity(1 << 16, file))
}

pub fn write_roster<W: Write>(out: &mut W, records: &[StaffRecord]) -> std::io::Result<()> {
    writeln!(out, "{}", ROSTER_HEADER.join(","))?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.researcher_id,
            r.year,
            r.gender.as_str(),
            r.sds,
            r.uda,
            r.university_id,
            r.macro_region.as_str(),
            r.rank.as_str()
        )?;
    }
    Ok(())
}

pub fn write_publications<W: Write>(out: &mut W, pubs: &[Publication]) -> std::io::Result<()> {
    writeln!(out, "{}", PUBLICATIONS_HEADER.join(","))?;
    for p in pubs {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.pub_id, p.year, p.subject_category, p.citations, p.n_authors
        )?;
    }
    Ok(())
}

pub fn write_authorships<W: Write>(out: &mut W, auths: &[Authorship]) -> std::io::Result<()> {
    writeln!(out, "{}", AUTHORSHIPS_HEADER.join(","))?;
    for a in auths {
        let flag = match a.intramural_last_author {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        writeln!(
            out,
            "{},{},{},{}",
            a.pub_id, a.researcher_id, a.position, flag
        )?;
    }
    Ok(())
}

/// Writes the dataset back out as `roster.csv`, `publications.csv` and
/// `authorships.csv` under `dir`.
pub fn write_dataset(dir: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let dir = dir.as_ref();
    type Emit<'a> = &'a dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>;
    let tables: [(&str, Emit); 3] = [
        ("roster.csv", &|w| {
            write_roster(w, dataset.roster().records())
        }),
        ("publications.csv", &|w| {
            write_publications(w, dataset.publications())
        }),
        ("authorships.csv", &|w| {
            write_authorships(w, dataset.authorships())
        }),
    ];
    for (name, write) in tables {
        let path = dir.join(name);
        let mut w = create(&path)?;
        write(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Findings of [`validate_dataset`]; empty iff the dataset is clean.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// Researchers referenced by authorships without any roster year.
    pub researchers_without_roster: Vec<String>,
    /// SDS codes seen with more than one UDA.
    pub sds_with_multiple_udas: BTreeMap<String, BTreeSet<String>>,
    /// Publications with no authorship rows.
    pub orphan_publications: Vec<String>,
    /// Researchers whose SDS changes across roster years.
    pub researchers_changing_sds: BTreeMap<String, BTreeSet<String>>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.researchers_without_roster.is_empty()
            && self.sds_with_multiple_udas.is_empty()
            && self.orphan_publications.is_empty()
            && self.researchers_changing_sds.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return writeln!(f, "dataset is clean");
        }
        for id in &self.researchers_without_roster {
            writeln!(f, "researcher without roster years: {id}")?;
        }
        for (sds, udas) in &self.sds_with_multiple_udas {
            let udas: Vec<&str> = udas.iter().map(String::as_str).collect();
            writeln!(f, "sds {sds} maps to multiple udas: {}", udas.join(","))?;
        }
        for id in &self.orphan_publications {
            writeln!(f, "orphan publication: {id}")?;
        }
        for (id, sds) in &self.researchers_changing_sds {
            let sds: Vec<&str> = sds.iter().map(String::as_str).collect();
            writeln!(f, "researcher {id} changes sds: {}", sds.join(","))?;
        }
        Ok(())
    }
}

pub fn validate_dataset(dataset: &Dataset) -> ValidationReport {
    let roster = dataset.roster();

    let researchers_without_roster: BTreeSet<String> = dataset
        .authorships()
        .iter()
        .filter(|a| !roster.contains(&a.researcher_id))
        .map(|a| a.researcher_id.clone())
        .collect();

    let mut udas: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut sds_by_researcher: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in roster.records() {
        udas.entry(&r.sds).or_default().insert(&r.uda);
        sds_by_researcher
            .entry(&r.researcher_id)
            .or_default()
            .insert(&r.sds);
    }
    let owned = |set: BTreeSet<&str>| set.into_iter().map(str::to_string).collect();

    let mut orphan_publications: Vec<String> = dataset
        .publications()
        .iter()
        .filter(|p| dataset.authorship_count(&p.pub_id) == 0)
        .map(|p| p.pub_id.clone())
        .collect();
    orphan_publications.sort();

    ValidationReport {
        researchers_without_roster: researchers_without_roster.into_iter().collect(),
        sds_with_multiple_udas: udas
            .into_iter()
            .filter(|(_, u)| u.len() > 1)
            .map(|(s, u)| (s.to_string(), owned(u)))
            .collect(),
        orphan_publications,
        researchers_changing_sds: sds_by_researcher
            .into_iter()
            .filter(|(_, s)| s.len() > 1)
            .map(|(r, s)| (r.to_string(), owned(s)))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    const ROSTER_HDR: &str = "researcher_id,year,gender,sds,uda,university_id,macro_region,rank\n";
    const PUBS_HDR: &str = "pub_id,year,subject_category,citations,n_authors\n";
    const AUTH_HDR: &str = "pub_id,researcher_id,position,intramural_last_author\n";

    #[test]
    fn header_only_roster_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "roster.csv", ROSTER_HDR);
        assert!(load_roster(p).unwrap().is_empty());
    }

    #[test]
    fn single_row_roster_round_trips_fields() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{ROSTER_HDR}r1,2003,F,FIS/01,2,U7,South,associate\n");
        let p = write(dir.path(), "roster.csv", &body);
        let rows = load_roster(&p).unwrap();
        assert_eq!(rows.len(), 1);
        let mut out = Vec::new();
        write_roster(&mut out, &rows).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), body);
    }

    #[test]
    fn duplicate_roster_key_names_both_lines() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "{ROSTER_HDR}r1,2003,F,S1,2,U7,South,associate\nr1,2003,F,S1,2,U7,South,full\n"
        );
        let p = write(dir.path(), "roster.csv", &body);
        match load_roster(p).unwrap_err() {
            Error::DuplicateKey {
                first_line,
                second_line,
                ..
            } => assert_eq!((first_line, second_line), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!(
            "{ROSTER_HDR}r1,2003,F,S1,2,U7,South,associate\nr2,twenty,F,S1,2,U7,South,full\nr3,2003,X,S1,2,U7,West,full\n"
        );
        let p = write(dir.path(), "roster.csv", &body);
        match load_roster(p).unwrap_err() {
            Error::MalformedRows { rows, .. } => {
                let lines: Vec<u64> = rows.iter().map(|r| r.line).collect();
                assert_eq!(lines, [3, 4]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn roster_span_check() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{ROSTER_HDR}r1,1999,F,S1,2,U7,South,associate\n");
        let p = write(dir.path(), "roster.csv", &body);
        assert!(load_roster_in_span(&p, (2001, 2012)).is_err());
        assert_eq!(load_roster_in_span(&p, (1990, 2012)).unwrap().len(), 1);
    }

    #[test]
    fn wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "roster.csv", "id,year\n");
        assert!(matches!(load_roster(p).unwrap_err(), Error::Header { .. }));
    }

    #[test]
    fn position_beyond_byline_is_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let pubs = write(dir.path(), "p.csv", &format!("{PUBS_HDR}p1,2001,c,5,3\n"));
        let auths = write(dir.path(), "a.csv", &format!("{AUTH_HDR}p1,r1,4,\n"));
        assert!(matches!(
            load_publications(pubs, auths).unwrap_err(),
            Error::Integrity(_)
        ));
    }

    #[test]
    fn uncited_publication_loads() {
        let dir = tempfile::tempdir().unwrap();
        let pubs = write(dir.path(), "p.csv", &format!("{PUBS_HDR}p1,2001,c,0,1\n"));
        let auths = write(
            dir.path(),
            "a.csv",
            "pub_id,researcher_id,position\np1,r1,1\n",
        );
        let (p, a) = load_publications(pubs, auths).unwrap();
        assert_eq!(p[0].citations, 0);
        assert_eq!(a[0].intramural_last_author, None);
    }

    #[test]
    fn dangling_pub_reference_is_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let pubs = write(dir.path(), "p.csv", PUBS_HDR);
        let auths = write(dir.path(), "a.csv", &format!("{AUTH_HDR}ghost,r1,1,true\n"));
        match load_publications(pubs, auths).unwrap_err() {
            Error::Integrity(msg) => assert!(msg.contains("dangling")),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn fixture(dir: &Path, roster: &str, pubs: &str, auths: &str) -> Dataset {
        let r = write(dir, "roster.csv", &format!("{ROSTER_HDR}{roster}"));
        let p = write(dir, "publications.csv", &format!("{PUBS_HDR}{pubs}"));
        let a = write(dir, "authorships.csv", &format!("{AUTH_HDR}{auths}"));
        load_dataset(r, p, a).unwrap()
    }

    #[test]
    fn clean_fixture_validates_empty() {
        let dir = tempfile::tempdir().unwrap();
        let ds = fixture(
            dir.path(),
            "r1,2001,M,S1,1,U1,North,full\nr1,2002,M,S1,1,U1,North,full\n",
            "p1,2001,c,3,2\n",
            "p1,r1,1,true\n",
        );
        let report = validate_dataset(&ds);
        assert!(report.is_empty(), "{report}");
        assert_eq!(report, validate_dataset(&ds));
    }

    #[test]
    fn sds_with_two_udas_reported() {
        let dir = tempfile::tempdir().unwrap();
        let ds = fixture(
            dir.path(),
            "r1,2001,M,X,1,U1,North,full\nr2,2001,F,X,2,U1,North,full\n",
            "p1,2001,c,3,1\n",
            "p1,r1,1,\n",
        );
        let report = validate_dataset(&ds);
        assert_eq!(
            report.sds_with_multiple_udas["X"],
            BTreeSet::from(["1".to_string(), "2".to_string()])
        );
    }

    #[test]
    fn orphan_publication_reported() {
        let dir = tempfile::tempdir().unwrap();
        let ds = fixture(
            dir.path(),
            "r1,2001,M,X,1,U1,North,full\n",
            "p1,2001,c,3,1\np2,2001,c,0,2\n",
            "p1,r1,1,\n",
        );
        assert_eq!(validate_dataset(&ds).orphan_publications, ["p2"]);
    }

    #[test]
    fn sds_change_is_surfaced() {
        let dir = tempfile::tempdir().unwrap();
        let ds = fixture(
            dir.path(),
            "r1,2001,M,X,1,U1,North,full\nr1,2002,M,Y,1,U1,North,full\n",
            "p1,2001,c,3,1\n",
            "p1,r1,1,\n",
        );
        assert!(validate_dataset(&ds)
            .researchers_changing_sds
            .contains_key("r1"));
    }
}
