//! Benchmark centroids and similarity scores.
//!
//! The mean cosine similarity between a publication and every member of its
//! benchmark equals the dot product of the publication's unit vector with the
//! mean of the members' unit vectors. Scores are computed through that
//! centroid, one pass over the benchmark per field-year instead of one per
//! publication.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::PublicationRecord;
use crate::embedding::{l2_normalize, VectorStore};
use crate::lexicon::GenAIFlag;
use crate::lexicon::markers::csv_field;
use crate::util::fmt_f64;
use crate::{Error, Result};

pub const BENCHMARK_COUNTRY: &str = "US";
pub const FIXED_BENCHMARK_YEAR: i32 = 2021;
pub const DEFAULT_MIN_MEMBERS: usize = 20;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BenchmarkVariant {
    /// Every pure-U.S. publication of the field-year.
    #[default]
    #[serde(rename = "AllUS")]
    AllUs,
    /// Pure-U.S. publications not flagged as GenAI-assisted.
    #[serde(rename = "NonGenAI_US")]
    NonGenAiUs,
    /// Pure-U.S. publications in journals at or above the field's 90th
    /// impact-factor percentile.
    #[serde(rename = "Top10Journal_US")]
    Top10JournalUs,
    /// Pure-U.S. publications of the field from 2021, whatever the scored year.
    #[serde(rename = "Fixed2021_US")]
    Fixed2021Us,
}

impl BenchmarkVariant {
    pub const ALL: [BenchmarkVariant; 4] = [
        BenchmarkVariant::AllUs,
        BenchmarkVariant::NonGenAiUs,
        BenchmarkVariant::Top10JournalUs,
        BenchmarkVariant::Fixed2021Us,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BenchmarkVariant::AllUs => "AllUS",
            BenchmarkVariant::NonGenAiUs => "NonGenAI_US",
            BenchmarkVariant::Top10JournalUs => "Top10Journal_US",
            BenchmarkVariant::Fixed2021Us => "Fixed2021_US",
        }
    }

    /// Benchmark year used to score a publication from `year`.
    pub fn benchmark_year(&self, year: i32) -> i32 {
        match self {
            BenchmarkVariant::Fixed2021Us => FIXED_BENCHMARK_YEAR,
            _ => year,
        }
    }
}

impl fmt::Display for BenchmarkVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Ok(match norm.as_str() {
            "allus" => BenchmarkVariant::AllUs,
            "nongenaius" => BenchmarkVariant::NonGenAiUs,
            "top10journalus" => BenchmarkVariant::Top10JournalUs,
            "fixed2021us" => BenchmarkVariant::Fixed2021Us,
            _ => return Err(Error::InvalidConfig(format!("unknown benchmark variant {s:?}"))),
        })
    }
}

/// Nearest-rank percentile `q` (0–100) of `values`; `None` when empty.
pub fn nearest_rank_percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    Some(v[rank.min(v.len()) - 1])
}

/// Journal impact factor per journal: mean over the journal's records.
pub(crate) fn journal_impact(records: &[&PublicationRecord]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = acc.entry(r.journal_id.clone()).or_default();
        e.0 += r.journal_if;
        e.1 += 1;
    }
    acc.into_iter().map(|(j, (s, n))| (j, s / n as f64)).collect()
}

/// Benchmark members for one variant, keyed by (detailed field, benchmark year).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkIndex {
    pub variant: BenchmarkVariant,
    pub members: BTreeMap<(String, i32), Vec<String>>,
    /// Pure-U.S. publications left out because the store has no vector for them.
    pub missing_vectors: Vec<String>,
}

impl BenchmarkIndex {
    /// Selects pure-U.S. members per field-year.
    ///
    /// `flags` must be given for [`BenchmarkVariant::NonGenAiUs`]; publications
    /// flagged under the any-field rule are excluded. When `store` is given,
    /// members without a stored vector are set aside in `missing_vectors`.
    pub fn build(
        records: &[PublicationRecord],
        assignments: &BTreeMap<String, Vec<String>>,
        flags: Option<&[GenAIFlag]>,
        variant: BenchmarkVariant,
        store: Option<&VectorStore>,
    ) -> Result<Self> {
        let flagged: BTreeSet<&str> = match (variant, flags) {
            (BenchmarkVariant::NonGenAiUs, None) => {
                return Err(Error::InvalidConfig("the NonGenAI_US benchmark needs GenAI flags".into()))
            }
            (_, Some(f)) => f.iter().filter(|f| f.flagged_any_field).map(|f| f.pub_id.as_str()).collect(),
            (_, None) => BTreeSet::new(),
        };

        let top_journals: BTreeMap<String, BTreeSet<String>> = if variant == BenchmarkVariant::Top10JournalUs {
            let mut by_field: BTreeMap<&str, Vec<&PublicationRecord>> = BTreeMap::new();
            for r in records {
                for f in assignments.get(&r.id).into_iter().flatten() {
                    by_field.entry(f.as_str()).or_default().push(r);
                }
            }
            by_field
                .into_iter()
                .map(|(f, recs)| {
                    let impact = journal_impact(&recs);
                    let vals: Vec<f64> = impact.values().copied().collect();
                    let cut = nearest_rank_percentile(&vals, 90.0).unwrap_or(f64::INFINITY);
                    let keep = impact.into_iter().filter(|(_, v)| *v >= cut).map(|(j, _)| j).collect();
                    (f.to_string(), keep)
                })
                .collect()
        } else {
            BTreeMap::new()
        };

        let mut members: BTreeMap<(String, i32), Vec<String>> = BTreeMap::new();
        let mut missing = Vec::new();
        for r in records {
            if !r.is_pure(BENCHMARK_COUNTRY) || flagged.contains(r.id.as_str()) {
                continue;
            }
            if variant == BenchmarkVariant::Fixed2021Us && r.year != FIXED_BENCHMARK_YEAR {
                continue;
            }
            let Some(fields) = assignments.get(&r.id) else { continue };
            if store.is_some_and(|s| !s.contains(&r.id)) {
                missing.push(r.id.clone());
                continue;
            }
            for f in fields {
                if variant == BenchmarkVariant::Top10JournalUs
                    && !top_journals.get(f).is_some_and(|js| js.contains(&r.journal_id))
                {
                    continue;
                }
                members.entry((f.clone(), r.year)).or_default().push(r.id.clone());
            }
        }
        for ids in members.values_mut() {
            ids.sort();
        }
        missing.sort();
        Ok(BenchmarkIndex {
            variant,
            members,
            missing_vectors: missing,
        })
    }

    /// Members of the benchmark used for a publication of `field` and `year`.
    pub fn members_for(&self, field: &str, year: i32) -> &[String] {
        self.members
            .get(&(field.to_string(), self.variant.benchmark_year(year)))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Benchmark member ids for `field` and `year`, at least `min_members` of them.
pub fn select_benchmark(index: &BenchmarkIndex, field: &str, year: i32, min_members: usize) -> Result<Vec<String>> {
    let m = index.members_for(field, year);
    if m.len() < min_members {
        return Err(Error::BenchmarkTooSmall {
            field: field.to_string(),
            year: index.variant.benchmark_year(year),
            variant: index.variant.to_string(),
            n_members: m.len(),
            min: min_members,
        });
    }
    Ok(m.to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCentroid {
    pub field: String,
    pub year: i32,
    pub variant: BenchmarkVariant,
    pub n_members: usize,
    /// Members dropped because their vector was all zeros.
    pub n_zero_excluded: usize,
    pub centroid: Vec<f64>,
}

impl BenchmarkCentroid {
    pub fn norm(&self) -> f64 {
        self.centroid.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Members cancel out: the centroid carries no direction.
    pub fn is_degenerate(&self) -> bool {
        self.norm() < 1e-12
    }
}

/// Mean of the members' unit vectors, accumulated in 64-bit in ascending id order.
pub fn build_centroid(
    field: &str,
    year: i32,
    variant: BenchmarkVariant,
    member_ids: &[String],
    store: &VectorStore,
    min_members: usize,
) -> Result<BenchmarkCentroid> {
    let mut ids: Vec<&String> = member_ids.iter().collect();
    ids.sort();
    ids.dedup();
    let mut sum = vec![0.0f64; store.dim()];
    let mut n = 0usize;
    let mut zeros = 0usize;
    for id in ids {
        let v = store.get(id).ok_or_else(|| Error::MissingVector(id.clone()))?;
        match l2_normalize(v) {
            Ok(u) => {
                for (s, x) in sum.iter_mut().zip(&u) {
                    *s += x;
                }
                n += 1;
            }
            Err(Error::ZeroVector) => zeros += 1,
            Err(Error::NonFiniteVector(_)) => return Err(Error::NonFiniteVector(id.clone())),
            Err(e) => return Err(e),
        }
    }
    if n < min_members.max(1) {
        return Err(Error::BenchmarkTooSmall {
            field: field.to_string(),
            year,
            variant: variant.to_string(),
            n_members: n,
            min: min_members.max(1),
        });
    }
    let inv = 1.0 / n as f64;
    Ok(BenchmarkCentroid {
        field: field.to_string(),
        year,
        variant,
        n_members: n,
        n_zero_excluded: zeros,
        centroid: sum.into_iter().map(|s| s * inv).collect(),
    })
}

/// Cosine of the publication with the centroid direction scaled by its norm,
/// i.e. the mean pairwise cosine with the benchmark members.
pub fn score_publication<T: Copy + Into<f64>>(pub_vector: &[T], centroid: &BenchmarkCentroid) -> Result<f64> {
    if pub_vector.len() != centroid.centroid.len() {
        return Err(Error::DimMismatch {
            id: String::new(),
            expected: centroid.centroid.len(),
            found: pub_vector.len(),
        });
    }
    let u = l2_normalize(pub_vector)?;
    Ok(u.iter().zip(&centroid.centroid).map(|(a, b)| a * b).sum())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScoreTarget {
    pub pub_id: String,
    pub field: String,
    pub year: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub pub_id: String,
    pub field: String,
    pub year: i32,
    pub variant: BenchmarkVariant,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub field: String,
    pub year: i32,
    pub variant: BenchmarkVariant,
    pub n_members: usize,
    pub centroid_norm: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedTarget {
    pub pub_id: String,
    pub field: String,
    pub year: i32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ScoreRun {
    pub scores: Vec<SimilarityScore>,
    pub benchmarks: Vec<BenchmarkReport>,
    pub dropped: Vec<DroppedTarget>,
}

impl ScoreRun {
    pub fn lookup(&self) -> BTreeMap<(&str, &str), f64> {
        self.scores
            .iter()
            .map(|s| ((s.pub_id.as_str(), s.field.as_str()), s.value))
            .collect()
    }

    /// Delimited export `pub_id,detailed_field,year,variant,similarity`.
    pub fn scores_csv(&self) -> String {
        let mut s = String::from("pub_id,detailed_field,year,variant,similarity\n");
        for x in &self.scores {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_field(&x.pub_id),
                csv_field(&x.field),
                x.year,
                x.variant,
                fmt_f64(x.value)
            ));
        }
        s
    }

    /// Reads scores written by [`ScoreRun::scores_csv`].
    pub fn read_scores_csv(path: &std::path::Path) -> Result<Vec<SimilarityScore>> {
        #[derive(Deserialize)]
        struct Row {
            pub_id: String,
            detailed_field: String,
            year: i32,
            variant: String,
            similarity: f64,
        }
        let mut rdr = csv::Reader::from_path(path)?;
        let mut out = Vec::new();
        for row in rdr.deserialize::<Row>() {
            let r = row?;
            out.push(SimilarityScore {
                pub_id: r.pub_id,
                field: r.detailed_field,
                year: r.year,
                variant: r.variant.parse()?,
                value: r.similarity,
            });
        }
        Ok(out)
    }

    /// Delimited export `field,year,variant,n_members,centroid_norm,status`.
    pub fn benchmarks_csv(&self) -> String {
        let mut s = String::from("field,year,variant,n_members,centroid_norm,status\n");
        for b in &self.benchmarks {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&b.field),
                b.year,
                b.variant,
                b.n_members,
                fmt_f64(b.centroid_norm),
                b.status
            ));
        }
        s
    }
}

/// Scores every target against its field-year benchmark.
///
/// Targets whose benchmark is below `min_members`, or whose own vector is
/// missing or zero, are dropped and reported. The output is sorted and does
/// not depend on `partitions`.
pub fn score_corpus(
    targets: &[ScoreTarget],
    store: &VectorStore,
    index: &BenchmarkIndex,
    min_members: usize,
    partitions: usize,
) -> Result<ScoreRun> {
    let variant = index.variant;
    let needed: BTreeSet<(String, i32)> = targets
        .iter()
        .map(|t| (t.field.clone(), variant.benchmark_year(t.year)))
        .collect();
    let needed: Vec<(String, i32)> = needed.into_iter().collect();

    let built: Vec<((String, i32), Result<BenchmarkCentroid>)> = needed
        .par_iter()
        .map(|(field, year)| {
            let members = index.members.get(&(field.clone(), *year)).map(Vec::as_slice).unwrap_or(&[]);
            let c = build_centroid(field, *year, variant, members, store, min_members);
            ((field.clone(), *year), c)
        })
        .collect();

    let mut centroids: BTreeMap<(String, i32), BenchmarkCentroid> = BTreeMap::new();
    let mut run = ScoreRun::default();
    for (key, res) in built {
        match res {
            Ok(c) => {
                let degenerate = c.is_degenerate();
                run.benchmarks.push(BenchmarkReport {
                    field: key.0.clone(),
                    year: key.1,
                    variant,
                    n_members: c.n_members,
                    centroid_norm: c.norm(),
                    status: if degenerate { "degenerate".into() } else { "ok".into() },
                });
                centroids.insert(key, c);
            }
            Err(Error::BenchmarkTooSmall { n_members, .. }) => {
                tracing::warn!("benchmark {} {} ({variant}) has {n_members} members; cells dropped", key.0, key.1);
                run.benchmarks.push(BenchmarkReport {
                    field: key.0,
                    year: key.1,
                    variant,
                    n_members,
                    centroid_norm: 0.0,
                    status: "too_small".into(),
                });
            }
            Err(e) => return Err(e),
        }
    }

    let mut sorted: Vec<&ScoreTarget> = targets.iter().collect();
    sorted.sort();
    sorted.dedup();
    let chunk = sorted.len().div_ceil(partitions.max(1)).max(1);
    let outcomes: Vec<std::result::Result<SimilarityScore, DroppedTarget>> = sorted
        .par_chunks(chunk)
        .flat_map_iter(|block| {
            let centroids = &centroids;
            block.iter().map(move |t| {
                let drop = |reason: String| DroppedTarget {
                    pub_id: t.pub_id.clone(),
                    field: t.field.clone(),
                    year: t.year,
                    reason,
                };
                let Some(c) = centroids.get(&(t.field.clone(), variant.benchmark_year(t.year))) else {
                    return Err(drop("benchmark_too_small".into()));
                };
                let Some(v) = store.get(&t.pub_id) else {
                    return Err(drop("missing_vector".into()));
                };
                match score_publication(v, c) {
                    Ok(value) => Ok(SimilarityScore {
                        pub_id: t.pub_id.clone(),
                        field: t.field.clone(),
                        year: t.year,
                        variant,
                        value,
                    }),
                    Err(e) => Err(drop(format!("{e}"))),
                }
            })
        })
        .collect();
    for o in outcomes {
        match o {
            Ok(s) => run.scores.push(s),
            Err(d) => run.dropped.push(d),
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(vs: &[(&str, Vec<f32>)]) -> VectorStore {
        let mut s = VectorStore::new(vs[0].1.len());
        for (id, v) in vs {
            s.insert(*id, v.clone()).unwrap();
        }
        s
    }

    fn ids(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn opposite_members_cancel() {
        let s = store(&[("a", vec![1.0, 2.0, 0.0]), ("b", vec![-1.0, -2.0, 0.0])]);
        let c = build_centroid("F", 2022, BenchmarkVariant::AllUs, &ids(&["a", "b"]), &s, 1).unwrap();
        assert!(c.is_degenerate());
        assert_eq!(c.norm(), 0.0);
    }

    #[test]
    fn single_member_is_its_unit_vector() {
        let s = store(&[("a", vec![3.0, 4.0, 0.0])]);
        let c = build_centroid("F", 2022, BenchmarkVariant::AllUs, &ids(&["a"]), &s, 1).unwrap();
        assert!((c.centroid[0] - 0.6).abs() < 1e-15 && (c.centroid[1] - 0.8).abs() < 1e-15);
        assert!((score_publication(&[3.0f32, 4.0, 0.0], &c).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(score_publication(&[0.0f32, 0.0, 5.0], &c).unwrap(), 0.0);
        assert!(matches!(score_publication(&[0.0f32; 3], &c), Err(Error::ZeroVector)));
    }

    #[test]
    fn zero_members_are_excluded_and_counted() {
        let s = store(&[("a", vec![1.0, 0.0]), ("z", vec![0.0, 0.0])]);
        let c = build_centroid("F", 2022, BenchmarkVariant::AllUs, &ids(&["z", "a"]), &s, 1).unwrap();
        assert_eq!((c.n_members, c.n_zero_excluded), (1, 1));
        assert!(matches!(
            build_centroid("F", 2022, BenchmarkVariant::AllUs, &ids(&["z", "a"]), &s, 2),
            Err(Error::BenchmarkTooSmall { n_members: 1, min: 2, .. })
        ));
        assert!(matches!(
            build_centroid("F", 2022, BenchmarkVariant::AllUs, &ids(&["q"]), &s, 1),
            Err(Error::MissingVector(_))
        ));
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(nearest_rank_percentile(&v, 90.0), Some(18.0));
        assert_eq!(nearest_rank_percentile(&[5.0], 90.0), Some(5.0));
        assert_eq!(nearest_rank_percentile(&[1.0, 2.0, 3.0], 90.0), Some(3.0));
        assert_eq!(nearest_rank_percentile(&[], 90.0), None);
    }

    #[test]
    fn variant_names_parse() {
        for v in BenchmarkVariant::ALL {
            assert_eq!(v.as_str().parse::<BenchmarkVariant>().unwrap(), v);
        }
        assert_eq!(BenchmarkVariant::Fixed2021Us.benchmark_year(2024), 2021);
        assert_eq!(BenchmarkVariant::AllUs.benchmark_year(2024), 2024);
    }
}
