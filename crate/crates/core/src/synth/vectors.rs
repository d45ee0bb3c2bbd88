//! Vectors with a prescribed cosine to a reference direction.

use super::rng::{std_normal, SynthRng};
use crate::embedding::VectorStore;
use crate::{Error, Result};

/// `cos θ · c + sin θ · r` with `r` a random unit vector orthogonal to the
/// unit direction `c`, so the vector's cosine with `c` is `target`.
pub fn vector_with_cosine(rng: &mut SynthRng, direction: &[f64], target: f64) -> Result<Vec<f64>> {
    if !(target > -1.0 && target < 1.0) {
        return Err(Error::TargetOutOfRange(target));
    }
    let dim = direction.len();
    if dim < 2 {
        return Err(Error::InvalidConfig("orthogonal construction needs dimension >= 2".into()));
    }
    let r = loop {
        let mut r: Vec<f64> = (0..dim).map(|_| std_normal(rng)).collect();
        // Two Gram-Schmidt passes keep r orthogonal to working precision.
        for _ in 0..2 {
            let p: f64 = r.iter().zip(direction).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(direction).for_each(|(a, b)| *a -= p * b);
        }
        let n = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            break r.into_iter().map(|x| x / n).collect::<Vec<_>>();
        }
    };
    let s = (1.0 - target * target).sqrt();
    Ok(direction.iter().zip(&r).map(|(c, q)| target * c + s * q).collect())
}

/// Builds a store with one vector per `(id, target)` against `direction`.
pub fn gen_vectors(rng: &mut SynthRng, direction: &[f64], targets: &[(String, f64)]) -> Result<VectorStore> {
    let mut store = VectorStore::new(direction.len());
    for (id, t) in targets {
        let v = vector_with_cosine(rng, direction, *t)?;
        store.insert(id.clone(), v.into_iter().map(|x| x as f32).collect())?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::l2_normalize;
    use crate::synth::rng::{seeded, unit_vector};

    fn measured(store: &VectorStore, id: &str, c: &[f64]) -> f64 {
        let u = l2_normalize(store.get(id).unwrap()).unwrap();
        u.iter().zip(c).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn targets_survive_f32_round_trip() {
        let mut rng = seeded(3);
        let c = unit_vector(&mut rng, 768);
        let targets = vec![("a".to_string(), 0.82), ("b".to_string(), 0.0), ("c".to_string(), -0.5)];
        let s = gen_vectors(&mut rng, &c, &targets).unwrap();
        assert!((measured(&s, "a", &c) - 0.82).abs() < 1e-6);
        assert!(measured(&s, "b", &c).abs() < 1e-6);
        assert!((measured(&s, "c", &c) + 0.5).abs() < 1e-6);
    }

    #[test]
    fn boundary_targets_rejected() {
        let mut rng = seeded(3);
        let c = unit_vector(&mut rng, 8);
        for t in [1.0, -1.0, f64::NAN] {
            assert!(matches!(vector_with_cosine(&mut rng, &c, t), Err(Error::TargetOutOfRange(_))));
        }
    }
}
