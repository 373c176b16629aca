//! Trained Laplace-GP expert and its binary container.
//!
//! Container layout (little-endian):
//!
//! ```text
//! b"PGPX" | u8 version | sections...
//! section = [u8; 4] tag | u64 payload length | payload
//!   SPEC  f64 signal_variance, f64 length_scale, f64 jitter
//!   IDXS  u64 count, count × u64 parent indices
//!   XSUB  PNF1 image of the training inputs
//!   YSUB  u32 num_classes, u32 n, n × u32 labels
//!   MODE  u32 n, u32 C, n·C × f64 (row-major)
//!   GRAD  u32 n, u32 C, n·C × f64 (row-major)
//!   LMLK  f64 log marginal likelihood
//! ```
//!
//! Unknown sections are skipped. The Laplace factors are rebuilt from the
//! stored mode on load.

use std::path::Path;

use nalgebra::DMatrix;

use super::likelihood::class_probabilities;
use super::mode::{factors_at, find_mode, stationarity_residual, LaplaceFactors};
use crate::dataset::{decode_pnf1, encode_pnf1, FeatureMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::kernel::{gram, GramMatrix, KernelSpec};

pub const MODEL_MAGIC: &[u8; 4] = b"PGPX";
pub const MODEL_VERSION: u8 = 1;

/// A Laplace-approximate multi-class GP classifier trained on one subset.
/// Immutable once trained.
#[derive(Clone, Debug)]
pub struct ExpertModel {
    indices: Vec<usize>,
    x: FeatureMatrix,
    y: LabelVector,
    spec: KernelSpec,
    mode: DMatrix<f64>,
    grad: DMatrix<f64>,
    factors: LaplaceFactors,
    log_marginal: f64,
}

impl ExpertModel {
    /// Trains on `x`/`y`. Inputs are rounded to `f32` first so that a saved
    /// model predicts exactly like the one in memory. `spec.jitter` in the
    /// trained model is the jitter the Gram factorization actually needed.
    pub fn train(x: &FeatureMatrix, y: &LabelVector, indices: Vec<usize>, spec: &KernelSpec) -> Result<Self> {
        y.check_paired(x)?;
        if indices.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: indices.len(),
                right: y.len(),
            });
        }
        let x = x.round_to_f32();
        let k = gram(&x, spec)?;
        let fit = find_mode(&k, y)?;
        if !fit.log_marginal.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite log marginal likelihood {}",
                fit.log_marginal
            )));
        }
        Ok(Self {
            indices,
            x,
            y: y.clone(),
            spec: *k.spec(),
            mode: fit.mode,
            grad: fit.grad,
            factors: fit.factors,
            log_marginal: fit.log_marginal,
        })
    }

    /// Trains on the rows of a parent dataset selected by `indices`.
    pub fn train_subset(x: &FeatureMatrix, y: &LabelVector, indices: &[usize], spec: &KernelSpec) -> Result<Self> {
        Self::train(&x.select_rows(indices)?, &y.select(indices)?, indices.to_vec(), spec)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn x(&self) -> &FeatureMatrix {
        &self.x
    }

    pub fn y(&self) -> &LabelVector {
        &self.y
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// `f̂`, `n × C`.
    pub fn mode(&self) -> &DMatrix<f64> {
        &self.mode
    }

    /// `∇ log p(y | f̂)`, `n × C`.
    pub fn grad(&self) -> &DMatrix<f64> {
        &self.grad
    }

    pub fn factors(&self) -> &LaplaceFactors {
        &self.factors
    }

    pub fn log_marginal(&self) -> f64 {
        self.log_marginal
    }

    pub fn num_classes(&self) -> usize {
        self.y.num_classes()
    }

    pub fn num_train(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn gram(&self) -> Result<GramMatrix> {
        gram(&self.x, &self.spec)
    }

    /// `‖f̂ − K ∇log p(y|f̂)‖∞`.
    pub fn stationarity_residual(&self) -> Result<f64> {
        Ok(stationarity_residual(self.gram()?.matrix(), &self.mode, &self.grad))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.push(MODEL_VERSION);

        let mut spec = Vec::with_capacity(24);
        for v in [self.spec.signal_variance, self.spec.length_scale, self.spec.jitter] {
            spec.extend_from_slice(&v.to_le_bytes());
        }
        section(&mut out, b"SPEC", &spec);

        let mut idx = Vec::with_capacity(8 + 8 * self.indices.len());
        idx.extend_from_slice(&(self.indices.len() as u64).to_le_bytes());
        for &i in &self.indices {
            idx.extend_from_slice(&(i as u64).to_le_bytes());
        }
        section(&mut out, b"IDXS", &idx);

        section(&mut out, b"XSUB", &encode_pnf1(&self.x)?);

        let mut ys = Vec::with_capacity(8 + 4 * self.y.len());
        ys.extend_from_slice(&(self.y.num_classes() as u32).to_le_bytes());
        ys.extend_from_slice(&(self.y.len() as u32).to_le_bytes());
        for &l in self.y.labels() {
            ys.extend_from_slice(&(l as u32).to_le_bytes());
        }
        section(&mut out, b"YSUB", &ys);

        section(&mut out, b"MODE", &encode_matrix(&self.mode));
        section(&mut out, b"GRAD", &encode_matrix(&self.grad));
        section(&mut out, b"LMLK", &self.log_marginal.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let err = |m: String| Error::Model(m);
        if bytes.len() < 5 || &bytes[..4] != MODEL_MAGIC {
            return Err(err("missing PGPX magic".into()));
        }
        if bytes[4] != MODEL_VERSION {
            return Err(err(format!("unsupported version {}", bytes[4])));
        }
        let mut sections = Sections::default();
        let mut pos = 5;
        while pos < bytes.len() {
            if bytes.len() - pos < 12 {
                return Err(err(format!("truncated section header at byte {pos}")));
            }
            let tag: [u8; 4] = bytes[pos..pos + 4].try_into().unwrap();
            let len = u64::from_le_bytes(bytes[pos + 4..pos + 12].try_into().unwrap());
            let start = pos + 12;
            let end = usize::try_from(len)
                .ok()
                .and_then(|l| start.checked_add(l))
                .filter(|&e| e <= bytes.len())
                .ok_or_else(|| err(format!("section {:?} at byte {pos} overruns the file", tag_str(&tag))))?;
            let payload = &bytes[start..end];
            match &tag {
                b"SPEC" => sections.spec = Some(payload),
                b"IDXS" => sections.idxs = Some(payload),
                b"XSUB" => sections.xsub = Some(payload),
                b"YSUB" => sections.ysub = Some(payload),
                b"MODE" => sections.mode = Some(payload),
                b"GRAD" => sections.grad = Some(payload),
                b"LMLK" => sections.lmlk = Some(payload),
                _ => {}
            }
            pos = end;
        }

        let mut r = Reader::new(need(sections.spec, "SPEC")?, "SPEC");
        let spec = KernelSpec::with_jitter(r.f64()?, r.f64()?, r.f64()?)?;
        r.finish()?;

        let mut r = Reader::new(need(sections.idxs, "IDXS")?, "IDXS");
        let count = r.u64()? as usize;
        let indices = (0..count).map(|_| r.u64().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        r.finish()?;

        let x = decode_pnf1(need(sections.xsub, "XSUB")?, Path::new("<model XSUB>"))?;

        let mut r = Reader::new(need(sections.ysub, "YSUB")?, "YSUB");
        let c = r.u32()? as usize;
        let n = r.u32()? as usize;
        let labels = (0..n).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        r.finish()?;
        let y = LabelVector::new(labels, c)?;

        let mode = decode_matrix(need(sections.mode, "MODE")?, "MODE")?;
        let grad = decode_matrix(need(sections.grad, "GRAD")?, "GRAD")?;
        let mut r = Reader::new(need(sections.lmlk, "LMLK")?, "LMLK");
        let log_marginal = r.f64()?;
        r.finish()?;

        if x.rows() != n || indices.len() != n || mode.shape() != (n, c) || grad.shape() != (n, c) {
            return Err(err("section shapes disagree".into()));
        }
        let k = gram(&x, &spec)?;
        let factors = factors_at(k.matrix(), &class_probabilities(&mode))?;
        Ok(Self {
            indices,
            x,
            y,
            spec: *k.spec(),
            mode,
            grad,
            factors,
            log_marginal,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Model(m) => Error::Model(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Laplace-approximate `log q(y | X, θ)` of a trained expert:
/// `log p(y|f̂) − ½ Σ_c f̂_cᵀ K⁻¹ f̂_c − ½ log |I + K W|`.
pub fn log_marginal_likelihood(model: &ExpertModel) -> f64 {
    model.log_marginal()
}

fn need<'a>(section: Option<&'a [u8]>, name: &str) -> Result<&'a [u8]> {
    section.ok_or_else(|| Error::Model(format!("missing {name} section")))
}

fn tag_str(tag: &[u8; 4]) -> String {
    String::from_utf8_lossy(tag).into_owned()
}

fn section(out: &mut Vec<u8>, tag: &[u8; 4], payload: &[u8]) {
    out.extend_from_slice(tag);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
}

fn encode_matrix(m: &DMatrix<f64>) -> Vec<u8> {
    let (n, c) = m.shape();
    let mut out = Vec::with_capacity(8 + 8 * n * c);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(c as u32).to_le_bytes());
    for i in 0..n {
        for j in 0..c {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    out
}

fn decode_matrix(bytes: &[u8], name: &'static str) -> Result<DMatrix<f64>> {
    let mut r = Reader::new(bytes, name);
    let n = r.u32()? as usize;
    let c = r.u32()? as usize;
    let mut values = Vec::with_capacity(n * c);
    for _ in 0..n * c {
        values.push(r.f64()?);
    }
    r.finish()?;
    Ok(DMatrix::from_row_slice(n, c, &values))
}

#[derive(Default)]
struct Sections<'a> {
    spec: Option<&'a [u8]>,
    idxs: Option<&'a [u8]>,
    xsub: Option<&'a [u8]>,
    ysub: Option<&'a [u8]>,
    mode: Option<&'a [u8]>,
    grad: Option<&'a [u8]>,
    lmlk: Option<&'a [u8]>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    name: &'static str,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], name: &'static str) -> Self {
        Self { bytes, pos: 0, name }
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Model(format!("{} section truncated at offset {}", self.name, self.pos)))?;
        self.pos = end;
        Ok(chunk.try_into().unwrap())
    }

    fn u32(&mut self) -> Result<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Model(format!(
                "{} section has {} trailing bytes",
                self.name,
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}
