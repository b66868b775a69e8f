//! Seeded synthetic rosters, publications and authorships.
//!
//! Each researcher carries a latent log-productivity `z` that is redrawn at
//! every period boundary as `rho * z + sqrt(1 - rho^2) * noise`, so `rho`
//! controls how persistent performance is across periods. Publication
//! counts are Poisson in `exp(sigma * z)` and citations follow a
//! gamma-Poisson (negative binomial) mixture scaled by the same latent
//! value. With `observation_noise = false` counts are set to their rounded
//! expectations and bylines are fixed, so rankings depend on the latent
//! value alone.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cohort::min_staff_years;
use crate::error::{Error, Result};
use crate::ingest::{write_authorships, write_publications, write_roster};
use crate::model::{Authorship, Gender, MacroRegion, Publication, Rank, StaffRecord};

const MIX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub seed: u64,
    pub n_researchers: usize,
    pub n_sds: usize,
    pub n_uda: usize,
    /// SDS codes sharing one subject category.
    pub sds_per_category: usize,
    pub n_universities: usize,
    pub start_year: i32,
    pub n_years: u32,
    pub period_years: u32,
    /// Expected publications per researcher-year at latent value 1.
    pub pub_rate: f64,
    /// Expected citations per publication at latent value 1.
    pub citation_mean: f64,
    /// Negative-binomial shape; smaller is more dispersed.
    pub citation_dispersion: f64,
    pub latent_sigma: f64,
    pub rho: f64,
    pub observation_noise: bool,
    pub mean_coauthors: f64,
    /// Proportions of M, F.
    pub gender_mix: [f64; 2],
    /// Proportions of North, Center, South.
    pub region_mix: [f64; 3],
    /// Proportions of assistant, associate, full at entry.
    pub rank_mix: [f64; 3],
    /// Probability per year of leaving the roster for good.
    pub attrition: f64,
    pub promotion_rate: f64,
    /// Probability per year of moving to another university.
    pub mobility_rate: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 42,
            n_researchers: 2000,
            n_sds: 20,
            n_uda: 9,
            sds_per_category: 1,
            n_universities: 60,
            start_year: 2001,
            n_years: 12,
            period_years: 4,
            pub_rate: 0.5,
            citation_mean: 8.0,
            citation_dispersion: 1.0,
            latent_sigma: 1.0,
            rho: 0.6,
            observation_noise: true,
            mean_coauthors: 3.0,
            gender_mix: [0.7, 0.3],
            region_mix: [0.5, 0.25, 0.25],
            rank_mix: [0.35, 0.35, 0.30],
            attrition: 0.02,
            promotion_rate: 0.05,
            mobility_rate: 0.003,
        }
    }
}

fn check_mix(name: &str, mix: &[f64]) -> Result<()> {
    if mix.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::SynthParams(format!(
            "{name} has a negative or non-finite entry"
        )));
    }
    let total: f64 = mix.iter().sum();
    if (total - 1.0).abs() > MIX_TOLERANCE {
        return Err(Error::SynthParams(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::SynthParams(format!(
            "{name} must lie in [0, 1], got {p}"
        )))
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        check_mix("gender_mix", &self.gender_mix)?;
        check_mix("region_mix", &self.region_mix)?;
        check_mix("rank_mix", &self.rank_mix)?;
        check_probability("rho", self.rho)?;
        check_probability("attrition", self.attrition)?;
        check_probability("promotion_rate", self.promotion_rate)?;
        check_probability("mobility_rate", self.mobility_rate)?;
        if self.n_researchers == 0 || self.n_sds == 0 || self.n_uda == 0 || self.n_universities == 0
        {
            return Err(Error::SynthParams(
                "researcher, SDS, UDA and university counts must be positive".into(),
            ));
        }
        if self.sds_per_category == 0 {
            return Err(Error::SynthParams(
                "sds_per_category must be positive".into(),
            ));
        }
        if self.n_years == 0 || self.period_years == 0 {
            return Err(Error::SynthParams(
                "year span and period length must be positive".into(),
            ));
        }
        let non_negative = [
            ("pub_rate", self.pub_rate),
            ("citation_mean", self.citation_mean),
            ("latent_sigma", self.latent_sigma),
            ("mean_coauthors", self.mean_coauthors),
        ];
        for (name, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::SynthParams(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if !(self.citation_dispersion.is_finite() && self.citation_dispersion > 0.0) {
            return Err(Error::SynthParams(
                "citation_dispersion must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn sds_code(&self, sds: usize) -> String {
        format!("SDS{:03}", sds + 1)
    }

    pub fn uda_code(&self, sds: usize) -> String {
        (sds % self.n_uda + 1).to_string()
    }

    pub fn category_code(&self, sds: usize) -> String {
        format!("CAT{:03}", sds / self.sds_per_category + 1)
    }
}

/// In-memory synthetic tables.
#[derive(Debug, Clone, Default)]
pub struct SynthData {
    pub roster: Vec<StaffRecord>,
    pub publications: Vec<Publication>,
    pub authorships: Vec<Authorship>,
}

fn pick<R: Rng>(rng: &mut R, mix: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in mix.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    mix.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .map(|d| d.sample(rng) as u64)
        .unwrap_or(0)
}

/// Largest-remainder allocation of universities to macro-regions.
fn university_regions(n: usize, mix: &[f64; 3]) -> Vec<MacroRegion> {
    let quotas: Vec<f64> = mix.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut short = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle().take(3 * n) {
        if short == 0 {
            break;
        }
        if mix[i] > 0.0 {
            counts[i] += 1;
            short -= 1;
        }
    }
    MacroRegion::ALL
        .iter()
        .zip(counts)
        .flat_map(|(&r, c)| std::iter::repeat_n(r, c))
        .collect()
}

pub fn generate_synthetic(params: &SynthParams) -> Result<SynthData> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let universities = university_regions(params.n_universities, &params.region_mix);
    let in_region = |r: MacroRegion| -> Vec<usize> {
        (0..universities.len())
            .filter(|&u| universities[u] == r)
            .collect()
    };
    let by_region: Vec<Vec<usize>> = MacroRegion::ALL.iter().map(|&r| in_region(r)).collect();
    let innovation = (1.0 - params.rho * params.rho).max(0.0).sqrt();
    let citation_shape = params.citation_dispersion;
    let fixed_coauthors = params.mean_coauthors.round() as u32;

    let mut data = SynthData::default();
    let mut next_pub = 0u64;
    for i in 0..params.n_researchers {
        let id = format!("R{:06}", i + 1);
        let sds = i % params.n_sds;
        let sds_code = params.sds_code(sds);
        let uda = params.uda_code(sds);
        let category = params.category_code(sds);
        let gender = [Gender::M, Gender::F][pick(&mut rng, &params.gender_mix)];
        let region = pick(&mut rng, &params.region_mix);
        let pool = if by_region[region].is_empty() {
            (0..universities.len()).collect()
        } else {
            by_region[region].clone()
        };
        let mut university = pool[rng.random_range(0..pool.len())];
        let mut rank =
            [Rank::Assistant, Rank::Associate, Rank::Full][pick(&mut rng, &params.rank_mix)];
        let mut z: f64 = rng.sample(StandardNormal);
        let mut period = 0u32;

        for offset in 0..params.n_years {
            let year = params.start_year + offset as i32;
            if offset > 0 {
                if params.attrition > 0.0 && rng.random::<f64>() < params.attrition {
                    break;
                }
                if rank < Rank::Full && rng.random::<f64>() < params.promotion_rate {
                    rank = if rank == Rank::Assistant {
                        Rank::Associate
                    } else {
                        Rank::Full
                    };
                }
                if params.mobility_rate > 0.0 && rng.random::<f64>() < params.mobility_rate {
                    university = rng.random_range(0..universities.len());
                }
            }
            let p = offset / params.period_years;
            if p != period {
                period = p;
                let fresh: f64 = rng.sample(StandardNormal);
                z = params.rho * z + innovation * fresh;
            }
            let latent = (params.latent_sigma * z).exp();

            data.roster.push(StaffRecord {
                researcher_id: id.clone(),
                year,
                gender,
                sds: sds_code.clone(),
                uda: uda.clone(),
                university_id: format!("U{:03}", university + 1),
                macro_region: universities[university],
                rank,
            });

            let expected_pubs = params.pub_rate * latent;
            let n_pubs = if params.observation_noise {
                poisson(&mut rng, expected_pubs)
            } else {
                expected_pubs.round() as u64
            };
            let expected_cites = params.citation_mean * latent;
            for _ in 0..n_pubs {
                next_pub += 1;
                let pub_id = format!("P{next_pub:09}");
                let (n_authors, position, citations) = if params.observation_noise {
                    let n_authors = 1 + poisson(&mut rng, params.mean_coauthors) as u32;
                    let position = rng.random_range(1..=n_authors);
                    let rate = if expected_cites > 0.0 {
                        Gamma::new(citation_shape, expected_cites / citation_shape)
                            .map(|g| g.sample(&mut rng))
                            .unwrap_or(0.0)
                    } else {
                        0.0
                    };
                    (n_authors, position, poisson(&mut rng, rate))
                } else {
                    (1 + fixed_coauthors, 1, expected_cites.round() as u64)
                };
                data.publications.push(Publication {
                    pub_id: pub_id.clone(),
                    year,
                    subject_category: category.clone(),
                    citations,
                    n_authors,
                });
                data.authorships.push(Authorship {
                    pub_id,
                    researcher_id: id.clone(),
                    position,
                    intramural_last_author: None,
                });
            }
        }
    }
    Ok(data)
}

/// Writes `roster.csv`, `publications.csv`, `authorships.csv` and a
/// `params.json` sidecar into `dir`.
pub fn write_synthetic(dir: impl AsRef<Path>, params: &SynthParams) -> Result<SynthData> {
    let dir = dir.as_ref();
    let data = generate_synthetic(params)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write =
        |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| -> Result<()> {
            let path = dir.join(name);
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::with_capacity(1 << 16, file);
            f(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(&path, e))
        };
    write("roster.csv", &|w| write_roster(w, &data.roster))?;
    write("publications.csv", &|w| {
        write_publications(w, &data.publications)
    })?;
    write("authorships.csv", &|w| {
        write_authorships(w, &data.authorships)
    })?;
    let json = serde_json::to_string_pretty(params).map_err(|e| Error::Serialize(e.to_string()))?;
    write("params.json", &|w| writeln!(w, "{json}"))?;
    Ok(data)
}

/// Persistence share expected when period rankings are independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndependenceBaseline {
    /// P(top in B and C | top in A) = top_share^2.
    pub expected_share: f64,
    /// Expected size of the surviving period-A top cohort.
    pub expected_base: f64,
    /// Binomial standard error of the measured share at that base size.
    pub std_error: f64,
    /// 95% Monte Carlo half-width (1.96 standard errors).
    pub half_width: f64,
}

pub fn independence_baseline(params: &SynthParams, top_share: f64) -> IndependenceBaseline {
    let p = top_share * top_share;
    // Surviving eligibility in the last period means staying through its
    // `min_staff_years`-th year.
    let periods = (params.n_years / params.period_years).max(1);
    let last_needed =
        (periods - 1) * params.period_years + min_staff_years(params.period_years) - 1;
    let survive = (1.0 - params.attrition).powi(last_needed as i32);
    let expected_base = params.n_researchers as f64 * top_share * survive;
    let std_error = if expected_base > 0.0 {
        (p * (1.0 - p) / expected_base).sqrt()
    } else {
        f64::INFINITY
    };
    IndependenceBaseline {
        expected_share: p,
        expected_base,
        std_error,
        half_width: 1.96 * std_error,
    }
}
