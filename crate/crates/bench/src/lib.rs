//! Fixtures shared by the solver benchmarks.

use holex_core::random::{random_system, RandomSystemConfig};
use holex_core::{Model, MultiModelSystem};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The four-model brain-diagnosis system.
pub fn brain() -> MultiModelSystem {
    MultiModelSystem::from_models(vec![
        Model::new("a").external(["MRI"]).outputs(["BA"]).entry("BA", ["MRI"], 0.7),
        Model::new("b").external(["CT"]).outputs(["CA"]).entry("CA", ["CT"], 0.6),
        Model::new("c").internal(["BA"]).outputs(["HR"]).entry("HR", ["BA"], 0.2),
        Model::new("d")
            .internal(["BA", "CA"])
            .outputs(["AD"])
            .entry("AD", ["BA"], 0.6)
            .entry("AD", ["CA"], 0.5),
    ])
    .expect("brain system is valid")
}

/// A chain `X0 -> X1 -> ... -> X{n-1}`: a fact on the root and one
/// conditional entry per later link. Grows the world count as `2^n`.
pub fn chain(n: usize) -> MultiModelSystem {
    let models = (0..n)
        .map(|i| {
            let out = format!("X{i}");
            let m = Model::new(format!("m{i}").as_str()).outputs([out.as_str()]);
            if i == 0 {
                m.external(["E"]).entry(out.as_str(), ["E"], 0.4)
            } else {
                let prev = format!("X{}", i - 1);
                let theta = 0.2 + 0.6 * (i as f64 / n as f64);
                m.internal([prev.as_str()]).entry(out.as_str(), [prev.as_str()], theta)
            }
        })
        .collect();
    MultiModelSystem::from_models(models).expect("chain system is valid")
}

/// `count` random systems drawn from consecutive seeds.
pub fn random_systems(count: u64, cfg: &RandomSystemConfig) -> Vec<MultiModelSystem> {
    (0..count)
        .map(|seed| random_system(&mut ChaCha8Rng::seed_from_u64(seed), cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use holex_core::final_outputs;

    #[test]
    fn fixtures_are_valid() {
        assert_eq!(final_outputs(&brain()).unwrap().len(), 2);
        assert_eq!(final_outputs(&chain(5)).unwrap().len(), 1);
        assert_eq!(random_systems(3, &RandomSystemConfig::default()).len(), 3);
    }
}
