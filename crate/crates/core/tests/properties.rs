use std::collections::BTreeSet;

use proptest::prelude::*;

use fss_cohorts::config::{PositionalTable, WeightScheme};
use fss_cohorts::ingest::{load_dataset, write_dataset};
use fss_cohorts::model::{
    Authorship, Dataset, Gender, MacroRegion, Publication, Rank, StaffRecord,
};
use fss_cohorts::scoring::{fractional_contribution, percentile_ranks};

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    let researchers = prop::collection::vec(
        (
            prop::collection::btree_set(2001i32..2013, 1..5),
            prop::sample::select(vec![Gender::M, Gender::F, Gender::Unknown]),
            prop::sample::select(MacroRegion::ALL.to_vec()),
            prop::sample::select(vec![Rank::Assistant, Rank::Associate, Rank::Full]),
            0u8..3,
        ),
        1..6,
    );
    let pubs = prop::collection::vec(
        (2001i32..2013, 0u64..50, 1u32..5, any::<Option<bool>>()),
        0..10,
    );
    (researchers, pubs).prop_map(|(researchers, pubs)| {
        let mut roster = Vec::new();
        for (i, (years, gender, region, rank, sds)) in researchers.iter().enumerate() {
            for &year in years {
                roster.push(StaffRecord {
                    researcher_id: format!("r{i}"),
                    year,
                    gender: *gender,
                    sds: format!("S{sds}"),
                    uda: "1".into(),
                    university_id: format!("U{sds}"),
                    macro_region: *region,
                    rank: *rank,
                });
            }
        }
        let mut publications = Vec::new();
        let mut authorships = Vec::new();
        for (j, (year, citations, n_authors, flag)) in pubs.into_iter().enumerate() {
            let pub_id = format!("p{j:03}");
            publications.push(Publication {
                pub_id: pub_id.clone(),
                year,
                subject_category: format!("C{}", j % 2),
                citations,
                n_authors,
            });
            authorships.push(Authorship {
                pub_id,
                researcher_id: format!("r{}", j % researchers.len()),
                position: 1 + (j as u32) % n_authors,
                intramural_last_author: flag,
            });
        }
        Dataset::new(roster, publications, authorships).expect("generated dataset is consistent")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_preserves_tables(d in dataset_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &d).unwrap();
        let p = dir.path();
        let back = load_dataset(p.join("roster.csv"), p.join("publications.csv"), p.join("authorships.csv")).unwrap();
        prop_assert_eq!(back.roster().records(), d.roster().records());
        prop_assert_eq!(back.publications(), d.publications());
        prop_assert_eq!(back.authorships(), d.authorships());
    }

    #[test]
    fn ranks_are_scale_invariant_and_monotone(
        scores in prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..100.0], 1..60),
        lambda in 0.001f64..1000.0,
    ) {
        let keyed: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
        let scaled: Vec<(usize, f64)> = keyed.iter().map(|&(k, s)| (k, s * lambda)).collect();
        let base = percentile_ranks(&keyed).unwrap();
        prop_assert_eq!(&base, &percentile_ranks(&scaled).unwrap());
        for &(i, pi) in &base {
            for &(j, pj) in &base {
                if scores[i] > scores[j] {
                    prop_assert!(pi > pj);
                } else if scores[i] == scores[j] {
                    prop_assert_eq!(pi, pj);
                }
            }
        }
    }
}

fn schemes() -> Vec<WeightScheme> {
    vec![
        WeightScheme::EqualFraction,
        WeightScheme::Positional(Some(PositionalTable::default())),
        WeightScheme::Positional(Some(PositionalTable {
            first: 0.5,
            last: 0.3,
            middle_share: 0.2,
            intramural_adjustment: false,
        })),
    ]
}

#[test]
fn byline_weights_sum_to_one() {
    for n in 1..=40u32 {
        let p = Publication {
            pub_id: "p".into(),
            year: 2003,
            subject_category: "C".into(),
            citations: 3,
            n_authors: n,
        };
        for scheme in schemes() {
            let total: f64 = (1..=n)
                .map(|position| {
                    let a = Authorship {
                        pub_id: "p".into(),
                        researcher_id: "r".into(),
                        position,
                        intramural_last_author: None,
                    };
                    fractional_contribution(&p, &a, &scheme).unwrap()
                })
                .sum();
            assert!(
                (total - 1.0).abs() <= 1e-9,
                "n={n} {scheme:?} sums to {total}"
            );
        }
    }
}

#[test]
fn ties_never_split_across_percentiles() {
    let keyed: Vec<(usize, f64)> = [3.0, 1.0, 3.0, 0.0, 3.0].into_iter().enumerate().collect();
    let ranks = percentile_ranks(&keyed).unwrap();
    let at_three: BTreeSet<u64> = ranks
        .iter()
        .filter(|(k, _)| keyed[*k].1 == 3.0)
        .map(|(_, p)| p.to_bits())
        .collect();
    assert_eq!(at_three.len(), 1);
}
