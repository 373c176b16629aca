//! Synthetic multi-stream data: several feature "views" of one set of
//! latent samples, standing in for the per-network CNN feature streams.
//!
//! Class centers are drawn once in a latent space. Every sample is its class
//! center plus optional shared latent noise. Each stream observes the latent
//! samples through its own random linear projection and adds independent
//! Gaussian noise of its own scale.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub name: String,
    pub dim: usize,
    /// Standard deviation of the stream's additive noise.
    pub noise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub per_class_train: usize,
    pub per_class_test: usize,
    pub latent_dim: usize,
    /// Standard deviation of the class centers around the origin.
    pub separation: f64,
    /// Within-class spread in the latent space, shared by all streams.
    #[serde(default)]
    pub latent_noise: f64,
    /// Every stream uses the same projection (all dims must agree).
    #[serde(default)]
    pub shared_projection: bool,
    pub streams: Vec<StreamSpec>,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct SynthStream {
    pub name: String,
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
}

#[derive(Clone, Debug)]
pub struct SynthData {
    pub train_labels: LabelVector,
    pub test_labels: LabelVector,
    pub streams: Vec<SynthStream>,
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.num_classes < 2 {
            return bad(format!("num_classes must be >= 2, got {}", self.num_classes));
        }
        if self.per_class_train < 1 || self.per_class_test < 1 {
            return bad("per_class_train and per_class_test must be >= 1".into());
        }
        if self.latent_dim < 1 {
            return bad("latent_dim must be >= 1".into());
        }
        if self.streams.is_empty() {
            return bad("at least one stream is required".into());
        }
        if !(self.separation.is_finite() && self.separation >= 0.0)
            || !(self.latent_noise.is_finite() && self.latent_noise >= 0.0)
        {
            return bad("separation and latent_noise must be finite and >= 0".into());
        }
        for s in &self.streams {
            if s.dim < 1 {
                return bad(format!("stream {:?} has dim 0", s.name));
            }
            if !(s.noise.is_finite() && s.noise >= 0.0) {
                return bad(format!("stream {:?} has invalid noise {}", s.name, s.noise));
            }
        }
        if self.shared_projection && self.streams.iter().any(|s| s.dim != self.streams[0].dim) {
            return bad("shared_projection requires equal stream dims".into());
        }
        Ok(())
    }
}

fn shuffled_labels(c: usize, per_class: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..c).flat_map(|k| std::iter::repeat_n(k, per_class)).collect();
    labels.shuffle(rng);
    labels
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

pub fn synth_streams(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let c = cfg.num_classes;
    let l = cfg.latent_dim;
    let mut rng = rng::seeded(cfg.seed, rng::SYNTH_STREAM);

    let centers: Vec<f64> = (0..c * l).map(|_| cfg.separation * normal(&mut rng)).collect();
    let train_labels = shuffled_labels(c, cfg.per_class_train, &mut rng);
    let test_labels = shuffled_labels(c, cfg.per_class_test, &mut rng);
    let mut latent = |labels: &[usize]| -> Vec<f64> {
        let mut z = Vec::with_capacity(labels.len() * l);
        for &y in labels {
            for j in 0..l {
                z.push(centers[y * l + j] + cfg.latent_noise * normal(&mut rng));
            }
        }
        z
    };
    let z_train = latent(&train_labels);
    let z_test = latent(&test_labels);

    let scale = 1.0 / (l as f64).sqrt();
    let streams = cfg
        .streams
        .iter()
        .enumerate()
        .map(|(s, spec)| {
            let proj_id = if cfg.shared_projection { 0 } else { s as u64 };
            let mut prng = rng::seeded(cfg.seed, rng::SYNTH_PROJECTION_STREAM + proj_id);
            let projection: Vec<f64> = (0..spec.dim * l).map(|_| scale * normal(&mut prng)).collect();
            let mut nrng = rng::seeded(cfg.seed, rng::SYNTH_NOISE_STREAM + s as u64);
            let mut observe = |z: &[f64]| -> Result<FeatureMatrix> {
                let n = z.len() / l;
                let mut values = Vec::with_capacity(n * spec.dim);
                for zi in z.chunks(l) {
                    for prow in projection.chunks(l) {
                        let clean: f64 = prow.iter().zip(zi).map(|(p, v)| p * v).sum();
                        values.push(clean + spec.noise * normal(&mut nrng));
                    }
                }
                FeatureMatrix::new(n, spec.dim, values)
            };
            Ok(SynthStream {
                name: spec.name.clone(),
                train: observe(&z_train)?,
                test: observe(&z_test)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SynthData {
        train_labels: LabelVector::new(train_labels, c)?,
        test_labels: LabelVector::new(test_labels, c)?,
        streams,
    })
}
