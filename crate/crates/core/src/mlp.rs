//! Per-pixel fully connected baseline: tanh hidden layers, linear output,
//! trained with hand-written backpropagation.
//!
//! The network sees one pixel's predictor vector at a time, so it has no
//! access to spatial context. Loss per example is `0.5 * |f(x) - t|^2`;
//! batch gradients are the mean of per-example gradients.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{RasterStack, Sample, IMAGERY_BANDS};
use crate::rng::SplitMix64;
use crate::splits::SplitAssignment;

pub const MODEL_MAGIC: [u8; 4] = *b"LSCM";
pub const MODEL_VERSION: u16 = 1;
pub const DEFAULT_HIDDEN: [usize; 3] = [64, 256, 364];
pub const OUTPUTS: usize = 4;

/// Weights are stored `out x in`, one matrix per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Default layout `[p, 64, 256, 364, 4]`.
pub fn default_layer_sizes(predictors: usize) -> Vec<usize> {
    let mut v = vec![predictors];
    v.extend(DEFAULT_HIDDEN);
    v.push(OUTPUTS);
    v
}

pub fn parameter_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::invalid("a network needs at least an input and an output layer"));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::invalid(format!("layer sizes must be positive: {layer_sizes:?}")));
    }
    Ok(())
}

/// Glorot-uniform weights from SplitMix64, zero biases.
pub fn init_mlp(layer_sizes: &[usize], seed: u64) -> Result<MlpParams> {
    check_sizes(layer_sizes)?;
    let mut rng = SplitMix64::new(seed);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for w in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        weights.push(Array2::from_shape_fn((fan_out, fan_in), |_| rng.uniform(-limit, limit)));
        biases.push(Array1::zeros(fan_out));
    }
    Ok(MlpParams {
        layer_sizes: layer_sizes.to_vec(),
        weights,
        biases,
    })
}

impl MlpParams {
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        Ok(MlpParams {
            layer_sizes: layer_sizes.to_vec(),
            weights: layer_sizes
                .windows(2)
                .map(|w| Array2::zeros((w[1], w[0])))
                .collect(),
            biases: layer_sizes.windows(2).map(|w| Array1::zeros(w[1])).collect(),
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.layer_sizes).expect("sizes already validated")
    }

    pub fn inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn outputs(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        parameter_count(&self.layer_sizes)
    }

    /// Layer by layer: weights row-major, then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn from_flat(layer_sizes: &[usize], flat: &[f64]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        if flat.len() != parameter_count(layer_sizes) {
            return Err(Error::invalid(format!(
                "{} values for {} parameters",
                flat.len(),
                parameter_count(layer_sizes)
            )));
        }
        let mut p = Self::zeros(layer_sizes)?;
        let mut at = 0;
        for (w, b) in p.weights.iter_mut().zip(p.biases.iter_mut()) {
            for v in w.iter_mut() {
                *v = flat[at];
                at += 1;
            }
            for v in b.iter_mut() {
                *v = flat[at];
                at += 1;
            }
        }
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.inputs() {
            return Err(Error::invalid(format!(
                "input has {} values, network expects {}",
                x.len(),
                self.inputs()
            )));
        }
        Ok(())
    }

    /// Activations of every layer for one example, input included.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let last = self.weights.len() - 1;
        let mut acts = vec![x.to_vec()];
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let prev = &acts[l];
            let z: Vec<f64> = (0..w.nrows())
                .map(|o| {
                    let row = w.row(o);
                    b[o] + row.iter().zip(prev).map(|(a, c)| a * c).sum::<f64>()
                })
                .collect();
            acts.push(if l == last { z } else { z.into_iter().map(f64::tanh).collect() });
        }
        acts
    }

    /// Network output for one predictor vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.activations(x).pop().unwrap())
    }

    /// Gradient of `0.5 * |forward(x) - target|^2` with respect to every parameter.
    pub fn backward(&self, x: &[f64], target: &[f64]) -> Result<MlpParams> {
        self.check_input(x)?;
        if target.len() != self.outputs() {
            return Err(Error::invalid(format!(
                "target has {} values, network emits {}",
                target.len(),
                self.outputs()
            )));
        }
        let acts = self.activations(x);
        let mut grad = self.zeros_like();
        let n_layers = self.weights.len();
        let mut delta: Vec<f64> = acts[n_layers]
            .iter()
            .zip(target)
            .map(|(y, t)| y - t)
            .collect();
        for l in (0..n_layers).rev() {
            let input = &acts[l];
            for (o, &d) in delta.iter().enumerate() {
                grad.biases[l][o] = d;
                for (i, &a) in input.iter().enumerate() {
                    grad.weights[l][[o, i]] = d * a;
                }
            }
            if l > 0 {
                let w = &self.weights[l];
                delta = (0..input.len())
                    .map(|i| {
                        let back: f64 = delta.iter().enumerate().map(|(o, d)| d * w[[o, i]]).sum();
                        back * (1.0 - input[i] * input[i])
                    })
                    .collect();
            }
        }
        Ok(grad)
    }

    /// Outputs for a batch of rows.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let last = self.weights.len() - 1;
        let mut a = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = a.dot(&w.t());
            z += b;
            if l != last {
                z.mapv_inplace(f64::tanh);
            }
            a = z;
        }
        a
    }

    /// Mean per-example gradient over a batch and the batch MSE
    /// (mean squared error over examples and output bands).
    pub fn backward_batch(&self, x: ArrayView2<f64>, target: ArrayView2<f64>) -> (MlpParams, f64) {
        let n = x.nrows() as f64;
        let last = self.weights.len() - 1;
        let mut acts = vec![x.to_owned()];
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = acts[l].dot(&w.t());
            z += b;
            if l != last {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        let mut delta = &acts[last + 1] - &target;
        let mse = delta.iter().map(|d| d * d).sum::<f64>() / delta.len() as f64;
        delta /= n;

        let mut grad = self.zeros_like();
        for l in (0..=last).rev() {
            grad.weights[l] = delta.t().dot(&acts[l]);
            grad.biases[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l]);
                back.zip_mut_with(&acts[l], |d, &a| *d *= 1.0 - a * a);
                delta = back;
            }
        }
        (grad, mse)
    }

    pub fn write_bin(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        self.write_bin_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    /// `LSCM` magic, u16 version, u16 layer count, u32 sizes, u32 parameter
    /// count, then f32 parameters in [`MlpParams::to_flat`] order.
    pub fn write_bin_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&MODEL_MAGIC)?;
        w.write_all(&MODEL_VERSION.to_le_bytes())?;
        w.write_all(&(self.layer_sizes.len() as u16).to_le_bytes())?;
        for &s in &self.layer_sizes {
            w.write_all(&(s as u32).to_le_bytes())?;
        }
        w.write_all(&(self.param_count() as u32).to_le_bytes())?;
        for v in self.to_flat() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_bin(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_bin_from(BufReader::new(File::open(path)?))
    }

    pub fn read_bin_from<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 8];
        read_exact(&mut r, &mut head)?;
        let magic: [u8; 4] = head[0..4].try_into().unwrap();
        if magic != MODEL_MAGIC {
            return Err(Error::BadMagic(magic));
        }
        let version = u16::from_le_bytes([head[4], head[5]]);
        if version != MODEL_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let n_layers = u16::from_le_bytes([head[6], head[7]]) as usize;
        let mut sizes = Vec::with_capacity(n_layers);
        let mut word = [0u8; 4];
        for _ in 0..n_layers {
            read_exact(&mut r, &mut word)?;
            sizes.push(u32::from_le_bytes(word) as usize);
        }
        read_exact(&mut r, &mut word)?;
        let count = u32::from_le_bytes(word) as usize;
        check_sizes(&sizes)?;
        if count != parameter_count(&sizes) {
            return Err(Error::Format(format!(
                "parameter count {count} does not match layer sizes {sizes:?}"
            )));
        }
        let mut flat = Vec::with_capacity(count);
        for _ in 0..count {
            read_exact(&mut r, &mut word)?;
            flat.push(f32::from_le_bytes(word) as f64);
        }
        Self::from_flat(&sizes, &flat)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Truncated("model parameters"),
        _ => Error::Io(e),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub hidden_layers: Vec<usize>,
    /// Pixels drawn from each training image per epoch.
    pub pixels_per_image: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 1024,
            epochs: 10,
            optimizer: Optimizer::default(),
            seed: 0,
            hidden_layers: DEFAULT_HIDDEN.to_vec(),
            pixels_per_image: 512,
        }
    }
}

/// Per-channel z-score statistics from the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn from_stacks(stacks: &[&RasterStack]) -> Result<Self> {
        let first = stacks
            .first()
            .ok_or_else(|| Error::invalid("no training rasters for normalization"))?;
        let c = first.channels();
        let mut sum = vec![0.0f64; c];
        let mut count = 0usize;
        for s in stacks {
            if s.channels() != c {
                return Err(Error::invalid("training rasters disagree on channel count"));
            }
            for (ch, acc) in sum.iter_mut().enumerate() {
                *acc += s.band(ch).iter().map(|&v| v as f64).sum::<f64>();
            }
            count += s.pixel_count();
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let mut var = vec![0.0f64; c];
        for s in stacks {
            for ch in 0..c {
                var[ch] += s
                    .band(ch)
                    .iter()
                    .map(|&v| (v as f64 - mean[ch]).powi(2))
                    .sum::<f64>();
            }
        }
        let std = var
            .iter()
            .map(|v| {
                let sd = (v / count as f64).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(NormStats { mean, std })
    }

    #[inline]
    fn apply(&self, ch: usize, v: f32) -> f64 {
        (v as f64 - self.mean[ch]) / self.std[ch]
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

fn apply_update(params: &mut MlpParams, grad: &MlpParams, opt: &Optimizer, lr: f64, state: &mut Adam) {
    let g = grad.to_flat();
    let mut p = params.to_flat();
    match *opt {
        Optimizer::Sgd => {
            for (pi, gi) in p.iter_mut().zip(&g) {
                *pi -= lr * gi;
            }
        }
        Optimizer::Adam { beta1, beta2, eps } => {
            state.t += 1;
            let c1 = 1.0 - beta1.powi(state.t);
            let c2 = 1.0 - beta2.powi(state.t);
            for i in 0..p.len() {
                state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g[i];
                state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g[i] * g[i];
                let mh = state.m[i] / c1;
                let vh = state.v[i] / c2;
                p[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
    *params = MlpParams::from_flat(&params.layer_sizes, &p).expect("same layout");
}

/// Trained network plus everything needed to apply it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedFc {
    pub params: MlpParams,
    pub norm: NormStats,
    pub predictor_names: Vec<String>,
    pub config: TrainConfig,
    /// Mean training MSE of each epoch.
    pub loss_curve: Vec<f64>,
}

/// Trains on the samples of `split.train`.
pub fn train_fc(samples: &[Sample], split: &SplitAssignment, cfg: &TrainConfig) -> Result<TrainedFc> {
    let train: Vec<&Sample> = samples
        .iter()
        .filter(|s| split.train.iter().any(|id| id == &s.id))
        .collect();
    train_fc_on(&train, cfg)
}

pub fn train_fc_on(train: &[&Sample], cfg: &TrainConfig) -> Result<TrainedFc> {
    if train.is_empty() {
        return Err(Error::invalid("training split is empty"));
    }
    if cfg.batch_size == 0 || cfg.pixels_per_image == 0 {
        return Err(Error::invalid("batch_size and pixels_per_image must be positive"));
    }
    let names = train[0].conditions.channel_names().to_vec();
    if train.iter().any(|s| s.conditions.channel_names() != names.as_slice()) {
        return Err(Error::invalid("training samples disagree on predictor channels"));
    }
    let p = names.len();
    let stacks: Vec<&RasterStack> = train.iter().map(|s| &s.conditions).collect();
    let norm = NormStats::from_stacks(&stacks)?;

    let mut sizes = vec![p];
    sizes.extend(&cfg.hidden_layers);
    sizes.push(OUTPUTS);
    let mut params = init_mlp(&sizes, cfg.seed)?;
    let mut adam = Adam {
        m: vec![0.0; params.param_count()],
        v: vec![0.0; params.param_count()],
        t: 0,
    };

    let mut rng = SplitMix64::new(cfg.seed ^ 0x5EED_F00D_CAFE_0001);
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        // Pixel pool for this epoch.
        let mut pool: Vec<(usize, usize)> = Vec::new();
        for (si, s) in train.iter().enumerate() {
            let n = s.conditions.pixel_count();
            let k = cfg.pixels_per_image.min(n);
            pool.extend(rng.sample_indices(n, k).into_iter().map(|px| (si, px)));
        }
        rng.shuffle(&mut pool);

        let mut weighted = 0.0;
        for chunk in pool.chunks(cfg.batch_size) {
            let mut x = Array2::<f64>::zeros((chunk.len(), p));
            let mut t = Array2::<f64>::zeros((chunk.len(), OUTPUTS));
            for (row, &(si, px)) in chunk.iter().enumerate() {
                let s = train[si];
                let n = s.conditions.pixel_count();
                let cv = s.conditions.values();
                for ch in 0..p {
                    x[[row, ch]] = norm.apply(ch, cv[ch * n + px]);
                }
                let iv = s.imagery.values();
                for b in 0..OUTPUTS {
                    t[[row, b]] = iv[b * n + px] as f64;
                }
            }
            let (grad, mse) = params.backward_batch(x.view(), t.view());
            if !mse.is_finite() {
                return Err(Error::Diverged(format!(
                    "loss became {mse} in epoch {epoch}; lower the learning rate"
                )));
            }
            weighted += mse * chunk.len() as f64;
            apply_update(&mut params, &grad, &cfg.optimizer, cfg.learning_rate, &mut adam);
        }
        let epoch_loss = weighted / pool.len() as f64;
        log::debug!("fc epoch {epoch}: mse {epoch_loss:.6}");
        loss_curve.push(epoch_loss);
        if !params.is_finite() {
            return Err(Error::Diverged(format!("non-finite parameters after epoch {epoch}")));
        }
    }
    Ok(TrainedFc {
        params,
        norm,
        predictor_names: names,
        config: cfg.clone(),
        loss_curve,
    })
}

const PREDICT_CHUNK: usize = 2048;

/// Per-pixel forward pass over a conditions stack; reflectance clamped to [0, 1].
pub fn predict_image(params: &MlpParams, conditions: &RasterStack, norm: &NormStats) -> Result<RasterStack> {
    let p = conditions.channels();
    if p != params.inputs() || norm.mean.len() != p {
        return Err(Error::invalid(format!(
            "conditions have {p} channels, model expects {}",
            params.inputs()
        )));
    }
    if params.outputs() != OUTPUTS {
        return Err(Error::invalid("model must emit 4 bands"));
    }
    let n = conditions.pixel_count();
    let cv = conditions.values();
    let starts: Vec<usize> = (0..n).step_by(PREDICT_CHUNK).collect();
    let outs: Vec<Array2<f64>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + PREDICT_CHUNK).min(n);
            let x = Array2::from_shape_fn((end - start, p), |(r, ch)| norm.apply(ch, cv[ch * n + start + r]));
            params.forward_batch(x.view())
        })
        .collect();
    let mut planes = vec![Vec::with_capacity(n); OUTPUTS];
    for (b, plane) in planes.iter_mut().enumerate() {
        for out in &outs {
            plane.extend(out.slice(s![.., b]).iter().map(|&v| v.clamp(0.0, 1.0) as f32));
        }
    }
    RasterStack::from_bands(
        conditions.width(),
        conditions.height(),
        &IMAGERY_BANDS,
        conditions.cell_size_m(),
        planes,
    )
}

impl TrainedFc {
    pub fn predict(&self, conditions: &RasterStack) -> Result<RasterStack> {
        if conditions.channel_names() != self.predictor_names.as_slice() {
            return Err(Error::invalid(format!(
                "conditions channels {:?} differ from training channels {:?}",
                conditions.channel_names(),
                self.predictor_names
            )));
        }
        predict_image(&self.params, conditions, &self.norm)
    }

    /// Writes `fc_model.bin` and `fc_model.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.params.write_bin(dir.join("fc_model.bin"))?;
        let meta = FcMetadata {
            layer_sizes: self.params.layer_sizes.clone(),
            seed: self.config.seed,
            predictor_names: self.predictor_names.clone(),
            normalization: self.norm.clone(),
            train_config: self.config.clone(),
            loss_curve: self.loss_curve.clone(),
        };
        let mut f = BufWriter::new(File::create(dir.join("fc_model.json"))?);
        serde_json::to_writer_pretty(&mut f, &meta)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let params = MlpParams::read_bin(dir.join("fc_model.bin"))?;
        let meta: FcMetadata =
            serde_json::from_reader(BufReader::new(File::open(dir.join("fc_model.json"))?))?;
        if meta.layer_sizes != params.layer_sizes {
            return Err(Error::Format("fc_model.json and fc_model.bin disagree on layer sizes".into()));
        }
        Ok(TrainedFc {
            params,
            norm: meta.normalization,
            predictor_names: meta.predictor_names,
            config: meta.train_config,
            loss_curve: meta.loss_curve,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FcMetadata {
    layer_sizes: Vec<usize>,
    seed: u64,
    predictor_names: Vec<String>,
    normalization: NormStats,
    train_config: TrainConfig,
    loss_curve: Vec<f64>,
}

/// Applies one seeded permutation of pixel positions to conditions and
/// imagery together: spatial structure is destroyed, pixel pairing kept.
pub fn shuffle_pixels(sample: &Sample, seed: u64) -> Sample {
    let mut perm: Vec<usize> = (0..sample.imagery.pixel_count()).collect();
    SplitMix64::new(seed).shuffle(&mut perm);
    Sample {
        conditions: sample.conditions.permute_pixels(&perm),
        imagery: sample.imagery.permute_pixels(&perm),
        ..sample.clone()
    }
}
