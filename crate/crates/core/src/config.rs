//! Run configuration, loaded from TOML and overridable from the command line.
//!
//! ```toml
//! top_share = 0.10
//! css = true
//! css_mu2_inclusive = false
//! survival = "all_periods_on_staff"   # or "pairwise_on_staff"
//! staff_presence = "eligible"         # or "roster"
//! threads = 0                         # 0 = all cores
//!
//! [inputs]
//! roster = "roster.csv"
//! publications = "publications.csv"
//! authorships = "authorships.csv"
//! output_dir = "out"
//!
//! [[periods]]
//! label = "A"
//! start_year = 2001
//! end_year = 2004
//!
//! [weights]
//! positional_sds = ["BIO/10", "MED/09"]
//!
//! [weights.positional]
//! first = 0.40
//! last = 0.40
//! middle_share = 0.20
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PeriodWindow;

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Byline weights for the positional convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionalTable {
    pub first: f64,
    pub last: f64,
    /// Split equally among authors strictly between first and last.
    pub middle_share: f64,
    /// Accepted for user-supplied tables; the built-in table ignores it.
    #[serde(default)]
    pub intramural_adjustment: bool,
}

impl Default for PositionalTable {
    fn default() -> Self {
        PositionalTable {
            first: 0.40,
            last: 0.40,
            middle_share: 0.20,
            intramural_adjustment: false,
        }
    }
}

impl PositionalTable {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.first, self.last, self.middle_share];
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!(
                "positional weights must be finite and non-negative: {parts:?}"
            )));
        }
        if self.first + self.last <= 0.0 {
            return Err(Error::Config(
                "first + last author weight must be positive".into(),
            ));
        }
        let total: f64 = parts.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::Config(format!(
                "positional weights must sum to 1, got {total}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightScheme {
    EqualFraction,
    /// `None` means the scheme was selected without a table.
    Positional(Option<PositionalTable>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    /// SDS codes scored under the positional convention.
    #[serde(default)]
    pub positional_sds: Vec<String>,
    #[serde(default)]
    pub positional: PositionalTable,
}

impl WeightConfig {
    pub fn scheme_for(&self, sds: &str) -> WeightScheme {
        if self.positional_sds.iter().any(|s| s == sds) {
            WeightScheme::Positional(Some(self.positional))
        } else {
            WeightScheme::EqualFraction
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalConstraint {
    /// Base cohort members must be on staff in every follow-up period.
    #[default]
    AllPeriodsOnStaff,
    /// Each two-period intersection only requires presence in that pair.
    PairwiseOnStaff,
}

/// What "on staff in a period" means for the survival frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaffPresence {
    /// Eligible for ranking (on staff for at least three of four years).
    #[default]
    Eligible,
    /// Any roster year inside the period.
    Roster,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub roster: Option<PathBuf>,
    pub publications: Option<PathBuf>,
    pub authorships: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub inputs: InputPaths,
    #[serde(default = "default_periods")]
    pub periods: Vec<PeriodWindow>,
    #[serde(default = "default_top_share")]
    pub top_share: f64,
    #[serde(default = "default_true")]
    pub css: bool,
    #[serde(default)]
    pub css_mu2_inclusive: bool,
    #[serde(default)]
    pub survival: SurvivalConstraint,
    #[serde(default)]
    pub staff_presence: StaffPresence,
    #[serde(default)]
    pub weights: WeightConfig,
    #[serde(default)]
    pub threads: usize,
}

fn default_periods() -> Vec<PeriodWindow> {
    vec![
        PeriodWindow {
            label: "A".into(),
            start_year: 2001,
            end_year: 2004,
        },
        PeriodWindow {
            label: "B".into(),
            start_year: 2005,
            end_year: 2008,
        },
        PeriodWindow {
            label: "C".into(),
            start_year: 2009,
            end_year: 2012,
        },
    ]
}

fn default_top_share() -> f64 {
    0.10
}

fn default_true() -> bool {
    true
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: InputPaths::default(),
            periods: default_periods(),
            top_share: default_top_share(),
            css: true,
            css_mu2_inclusive: false,
            survival: SurvivalConstraint::default(),
            staff_presence: StaffPresence::default(),
            weights: WeightConfig::default(),
            threads: 0,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Percentile at or above which a researcher is a top scientist.
    pub fn top_cutoff(&self) -> f64 {
        100.0 * (1.0 - self.top_share)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.top_share > 0.0 && self.top_share <= 0.5) {
            return Err(Error::Config(format!(
                "top_share must lie in (0, 0.5], got {}",
                self.top_share
            )));
        }
        validate_periods(&self.periods)?;
        if !self.weights.positional_sds.is_empty() {
            self.weights.positional.validate()?;
        }
        Ok(())
    }

    pub fn require_inputs(&self) -> Result<(&Path, &Path, &Path)> {
        let missing = |what: &str| Error::Config(format!("missing input path: {what}"));
        Ok((
            self.inputs
                .roster
                .as_deref()
                .ok_or_else(|| missing("roster"))?,
            self.inputs
                .publications
                .as_deref()
                .ok_or_else(|| missing("publications"))?,
            self.inputs
                .authorships
                .as_deref()
                .ok_or_else(|| missing("authorships"))?,
        ))
    }
}

/// Exactly three well-formed, consecutive, non-overlapping windows with
/// distinct labels.
pub fn validate_periods(periods: &[PeriodWindow]) -> Result<()> {
    if periods.len() != 3 {
        return Err(Error::Config(format!(
            "exactly three periods are required, got {}",
            periods.len()
        )));
    }
    for p in periods {
        if p.end_year < p.start_year {
            return Err(Error::Config(format!(
                "period {} ends before it starts",
                p.label
            )));
        }
        if p.label.is_empty() {
            return Err(Error::Config("period label is empty".into()));
        }
    }
    for pair in periods.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.start_year <= a.end_year {
            return Err(Error::Config(format!(
                "periods {} and {} overlap",
                a.label, b.label
            )));
        }
        if b.start_year != a.end_year + 1 {
            return Err(Error::Config(format!(
                "periods {} and {} are not consecutive",
                a.label, b.label
            )));
        }
        if a.label == b.label {
            return Err(Error::Config(format!("duplicate period label {}", a.label)));
        }
    }
    if periods[0].label == periods[2].label {
        return Err(Error::Config(format!(
            "duplicate period label {}",
            periods[0].label
        )));
    }
    Ok(())
}

/// Parses `A=2001-2004,B=2005-2008,C=2009-2012`.
pub fn parse_periods(spec: &str) -> Result<Vec<PeriodWindow>> {
    spec.split(',')
        .map(|part| {
            let bad = || Error::Config(format!("bad period {part:?}, expected LABEL=START-END"));
            let (label, range) = part.trim().split_once('=').ok_or_else(bad)?;
            let (start, end) = range.split_once('-').ok_or_else(bad)?;
            let start = start.trim().parse().map_err(|_| bad())?;
            let end = end.trim().parse().map_err(|_| bad())?;
            PeriodWindow::new(label.trim(), start, end)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_three_four_year_windows() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let labels: Vec<_> = cfg
            .periods
            .iter()
            .map(|p| (p.start_year, p.end_year))
            .collect();
        assert_eq!(labels, [(2001, 2004), (2005, 2008), (2009, 2012)]);
        assert_eq!(cfg.top_cutoff(), 90.0);
    }

    #[test]
    fn overlapping_periods_rejected() {
        let periods = parse_periods("A=2001-2004,B=2004-2008,C=2009-2012").unwrap();
        let err = validate_periods(&periods).unwrap_err();
        assert!(err.to_string().contains("overlap"), "{err}");
    }

    #[test]
    fn gap_between_periods_rejected() {
        let periods = parse_periods("A=2001-2004,B=2006-2008,C=2009-2012").unwrap();
        assert!(validate_periods(&periods).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            top_share = 0.2
            survival = "pairwise_on_staff"
            [inputs]
            roster = "r.csv"
            [weights]
            positional_sds = ["BIO/10"]
            [weights.positional]
            first = 0.5
            last = 0.3
            middle_share = 0.2
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.survival, SurvivalConstraint::PairwiseOnStaff);
        assert_eq!(cfg.periods.len(), 3);
        assert!(matches!(
            cfg.weights.scheme_for("BIO/10"),
            WeightScheme::Positional(Some(t)) if t.first == 0.5
        ));
        assert_eq!(
            cfg.weights.scheme_for("MAT/05"),
            WeightScheme::EqualFraction
        );
        let again = RunConfig::from_toml_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn top_share_bounds() {
        let mut cfg = RunConfig {
            top_share: 0.6,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.top_share = 0.0;
        assert!(cfg.validate().is_err());
        cfg.top_share = 0.5;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn weight_table_must_sum_to_one() {
        let t = PositionalTable {
            first: 0.5,
            last: 0.5,
            middle_share: 0.2,
            intramural_adjustment: false,
        };
        assert!(t.validate().is_err());
        PositionalTable::default().validate().unwrap();
    }
}
