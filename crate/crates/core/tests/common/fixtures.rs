//! Random problem instances shared by the integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use pillar_gp::dataset::{synth_streams, FeatureMatrix, LabelVector, StreamSpec, SynthConfig, SynthData};
use pillar_gp::kernel::{gram, KernelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub x: FeatureMatrix,
    pub y: LabelVector,
    pub spec: KernelSpec,
    pub k: DMatrix<f64>,
}

/// `n` points uniform in `[−2, 2]^d`, uniform random labels over `c`
/// classes (every class need not appear).
pub fn random_instance(seed: u64, n: usize, c: usize, d: usize, spec: KernelSpec) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let x = FeatureMatrix::new(n, d, values).unwrap().round_to_f32();
    let y = LabelVector::new((0..n).map(|_| rng.random_range(0..c)).collect(), c).unwrap();
    let k = gram(&x, &spec).unwrap().matrix().clone();
    Instance { x, y, spec, k }
}

/// One well-separated synthetic stream: class centers with spread
/// `5 · noise` in a `d`-dimensional space observed directly.
pub fn separable(c: usize, d: usize, per_class_train: usize, per_class_test: usize, seed: u64) -> SynthData {
    synth_streams(&SynthConfig {
        num_classes: c,
        per_class_train,
        per_class_test,
        latent_dim: d,
        separation: 5.0,
        latent_noise: 1.0,
        shared_projection: false,
        streams: vec![StreamSpec {
            name: "s".into(),
            dim: d,
            noise: 0.0,
        }],
        seed,
    })
    .unwrap()
}
