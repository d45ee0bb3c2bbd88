//! Benchmark scoring invariants.

use convergence::embedding::VectorStore;
use convergence::similarity::{build_centroid, score_corpus, score_publication, BenchmarkIndex, BenchmarkVariant, ScoreTarget};
use convergence::synth::{gen_scenario, oracle_pairwise_similarity, seeded, unit_vector, vector_with_cosine, ScenarioParams, TextParams};
use proptest::prelude::*;

fn store_of(vectors: &[Vec<f32>]) -> (VectorStore, Vec<String>) {
    let mut store = VectorStore::new(vectors[0].len());
    let ids: Vec<String> = (0..vectors.len()).map(|i| format!("v{i:03}")).collect();
    for (id, v) in ids.iter().zip(vectors) {
        store.insert(id.clone(), v.clone()).unwrap();
    }
    (store, ids)
}

fn arb_vectors(dim: usize) -> impl Strategy<Value = Vec<Vec<f32>>> {
    // Components bounded away from an all-zero vector by the leading 1.
    prop::collection::vec(
        (0.5f32..50.0, prop::collection::vec(-1.0f32..1.0, dim - 1)).prop_map(|(lead, mut rest)| {
            rest.insert(0, lead);
            rest
        }),
        1..40,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn centroid_score_is_mean_cosine(members in arb_vectors(6), probe in prop::collection::vec(-3.0f32..3.0, 6)) {
        prop_assume!(probe.iter().any(|x| *x != 0.0));
        let (store, ids) = store_of(&members);
        let c = build_centroid("Medicine", 2023, BenchmarkVariant::AllUs, &ids, &store, 1).unwrap();
        let got = score_publication(&probe, &c).unwrap();
        let m64: Vec<Vec<f64>> = members.iter().map(|v| v.iter().map(|&x| x as f64).collect()).collect();
        let p64: Vec<f64> = probe.iter().map(|&x| x as f64).collect();
        let want = oracle_pairwise_similarity(&p64, &m64).unwrap();
        prop_assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
        prop_assert!((-1.0..=1.0).contains(&got));
    }

    #[test]
    fn rescaling_vectors_leaves_scores_unchanged(members in arb_vectors(5), k in 0.01f32..100.0) {
        let (a, ids) = store_of(&members);
        let scaled: Vec<Vec<f32>> = members.iter().map(|v| v.iter().map(|x| x * k).collect()).collect();
        let (b, _) = store_of(&scaled);
        let ca = build_centroid("Medicine", 2023, BenchmarkVariant::AllUs, &ids, &a, 1).unwrap();
        let cb = build_centroid("Medicine", 2023, BenchmarkVariant::AllUs, &ids, &b, 1).unwrap();
        let sa = score_publication(&members[0], &ca).unwrap();
        let sb = score_publication(&scaled[0], &cb).unwrap();
        prop_assert!((sa - sb).abs() < 1e-6);
    }

    #[test]
    fn synthetic_vectors_hit_their_target_cosine(seed in 0u64..10_000, target in -0.98f64..0.98) {
        let mut rng = seeded(seed);
        let dir = unit_vector(&mut rng, 32);
        let v = vector_with_cosine(&mut rng, &dir, target).unwrap();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cos = v.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() / norm;
        prop_assert!((cos - target).abs() < 1e-12);
    }
}

#[test]
fn scoring_does_not_depend_on_partitions() {
    let p = ScenarioParams { text: TextParams { per_stratum: 120, ..TextParams::default() }, ..ScenarioParams::default() };
    let s = gen_scenario(&p).unwrap();
    let assignments = convergence::lexicon::assign_fields(&s.records, &s.field_map).unwrap();
    let index = BenchmarkIndex::build(&s.records, &assignments, None, BenchmarkVariant::AllUs, Some(&s.store)).unwrap();
    let targets: Vec<ScoreTarget> = s
        .records
        .iter()
        .map(|r| ScoreTarget { pub_id: r.id.clone(), field: r.scopus_fields[0].clone(), year: r.year })
        .collect();
    let one = score_corpus(&targets, &s.store, &index, 20, 1).unwrap();
    let many = score_corpus(&targets, &s.store, &index, 20, 7).unwrap();
    assert_eq!(one, many);
    assert_eq!(one.scores.len() + one.dropped.len(), targets.len());
}

#[test]
fn small_benchmarks_drop_their_targets() {
    let p = ScenarioParams { text: TextParams { per_stratum: 40, ..TextParams::default() }, ..ScenarioParams::default() };
    let s = gen_scenario(&p).unwrap();
    let assignments = convergence::lexicon::assign_fields(&s.records, &s.field_map).unwrap();
    let index = BenchmarkIndex::build(&s.records, &assignments, None, BenchmarkVariant::AllUs, Some(&s.store)).unwrap();
    let targets: Vec<ScoreTarget> = s
        .records
        .iter()
        .map(|r| ScoreTarget { pub_id: r.id.clone(), field: r.scopus_fields[0].clone(), year: r.year })
        .collect();
    // 30% of 40 records per stratum are pure U.S., short of 20 members.
    let run = score_corpus(&targets, &s.store, &index, 20, 1).unwrap();
    assert!(run.scores.is_empty());
    assert_eq!(run.dropped.len(), targets.len());
    assert!(run.benchmarks.iter().all(|b| b.status == "too_small"));
    let relaxed = score_corpus(&targets, &s.store, &index, 5, 1).unwrap();
    assert_eq!(relaxed.scores.len(), targets.len());
}
