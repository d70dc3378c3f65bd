//! Fully connected autoencoder whose reconstruction error scores how far a
//! point lies from the training distribution.
//!
//! The network has five layers of widths `f, f/2, f/4, f/2, f` (each at
//! least 1), ReLU on the hidden layers and a linear output. Training
//! minimizes mean squared reconstruction error with momentum SGD.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{check_dims, Error, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AutoencoderConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Datasets up to this size train full-batch.
    pub full_batch_limit: usize,
    pub batch_size: usize,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.01,
            momentum: 0.9,
            full_batch_limit: 1024,
            batch_size: 256,
        }
    }
}

/// Initial bias of hidden (ReLU) units; output biases start at zero.
pub const HIDDEN_BIAS: f64 = 0.1;

/// Share of probe rows every hidden unit must fire on at initialization.
pub const MIN_FIRING: f64 = 0.5;

/// Layer widths for `f` input features.
pub fn layer_schedule(f: usize) -> Vec<usize> {
    let half = (f / 2).max(1);
    let quarter = (f / 4).max(1);
    vec![f, half, quarter, half, f]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Autoencoder {
    pub layer_sizes: Vec<usize>,
    /// Per layer, the `out x in` weight matrix (row-major) then the biases.
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedAutoencoder {
    pub model: Autoencoder,
    /// Mean squared reconstruction error of each epoch.
    pub loss_history: Vec<f64>,
}

impl Autoencoder {
    /// Glorot-uniform weights, [`HIDDEN_BIAS`] on hidden units.
    pub fn with_layers(layer_sizes: Vec<usize>, seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::invalid(format!(
                "bad autoencoder layers {layer_sizes:?}"
            )));
        }
        if layer_sizes.first() != layer_sizes.last() {
            return Err(Error::invalid(
                "autoencoder output width must equal input width",
            ));
        }
        let mut rng = rng::seeded(seed);
        let mut params = Vec::new();
        let n_layers = layer_sizes.len() - 1;
        for (l, w) in layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)));
            let bias = if l + 1 < n_layers { HIDDEN_BIAS } else { 0.0 };
            params.extend(std::iter::repeat_n(bias, fan_out));
        }
        Ok(Self {
            layer_sizes,
            params,
        })
    }

    pub fn new(n_features: usize, seed: u64) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::invalid("autoencoder needs at least one feature"));
        }
        Self::with_layers(layer_schedule(n_features), seed)
    }

    pub fn n_features(&self) -> usize {
        self.layer_sizes[0]
    }

    fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Offsets of (weights, biases) for layer `l`.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for w in self.layer_sizes.windows(2).take(l) {
            off += w[0] * w[1] + w[1];
        }
        let (i, o) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
        (off, off + i * o)
    }

    /// Activations of every layer, input first.
    fn forward(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let last = self.n_layers() - 1;
        let mut acts = vec![input.to_vec()];
        for l in 0..self.n_layers() {
            let (wo, bo) = self.offsets(l);
            let (i, o) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let prev = &acts[l];
            let next: Vec<f64> = (0..o)
                .map(|r| {
                    let z = self.params[bo + r]
                        + self.params[wo + r * i..wo + (r + 1) * i]
                            .iter()
                            .zip(prev)
                            .map(|(w, x)| w * x)
                            .sum::<f64>();
                    if l < last {
                        z.max(0.0)
                    } else {
                        z
                    }
                })
                .collect();
            acts.push(next);
        }
        acts
    }

    pub fn reconstruct(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.n_features(), row.len())?;
        Ok(self.forward(row).pop().unwrap_or_default())
    }

    /// Mean squared error between `row` and its reconstruction.
    pub fn reconstruction_error(&self, row: &[f64]) -> Result<f64> {
        let out = self.reconstruct(row)?;
        Ok(mean_squared_error(row, &out))
    }

    /// Batch loss (mean over rows of the per-row MSE) and its gradient with
    /// respect to `params`.
    pub fn loss_and_gradient(&self, batch: &[&[f64]]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let f = self.n_features() as f64;
        let scale = 1.0 / batch.len() as f64;
        for &x in batch {
            let acts = self.forward(x);
            let out = acts.last().expect("at least one layer");
            loss += mean_squared_error(x, out) * scale;
            // dL/d(pre-activation) of the output layer (linear)
            let mut delta: Vec<f64> = out
                .iter()
                .zip(x)
                .map(|(y, t)| 2.0 * (y - t) / f * scale)
                .collect();
            for l in (0..self.n_layers()).rev() {
                let (wo, bo) = self.offsets(l);
                let (i, o) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
                let prev = &acts[l];
                for r in 0..o {
                    grad[bo + r] += delta[r];
                    for (g, &a) in grad[wo + r * i..wo + (r + 1) * i].iter_mut().zip(prev) {
                        *g += delta[r] * a;
                    }
                }
                if l == 0 {
                    break;
                }
                // through W, then the ReLU of layer l
                delta = (0..i)
                    .map(|k| {
                        if prev[k] <= 0.0 {
                            0.0
                        } else {
                            (0..o).map(|r| self.params[wo + r * i + k] * delta[r]).sum()
                        }
                    })
                    .collect();
            }
        }
        (loss, grad)
    }

    /// Initial weights under which every hidden unit fires on at least
    /// [`MIN_FIRING`] of the first training rows. A ReLU unit that starts
    /// dead or nearly dead rarely recovers under gradient descent, so such
    /// draws are replaced by the next seed stream.
    fn live_init(train: &Dataset, seed: u64) -> Result<Self> {
        const ATTEMPTS: u64 = 32;
        let probe: Vec<&[f64]> = train.rows().take(256).collect();
        let mut model = Self::new(train.n_features(), seed)?;
        for attempt in 0..ATTEMPTS {
            if model.min_firing_rate(&probe) >= MIN_FIRING {
                break;
            }
            model = Self::new(train.n_features(), rng::derive_seed(seed, 100 + attempt))?;
        }
        Ok(model)
    }

    /// Smallest share of `rows` on which any hidden unit is active.
    fn min_firing_rate(&self, rows: &[&[f64]]) -> f64 {
        let hidden = &self.layer_sizes[1..self.layer_sizes.len() - 1];
        let mut fired: Vec<Vec<usize>> = hidden.iter().map(|&w| vec![0; w]).collect();
        for row in rows {
            let acts = self.forward(row);
            for (seen, act) in fired.iter_mut().zip(&acts[1..]) {
                for (s, &a) in seen.iter_mut().zip(act) {
                    *s += usize::from(a > 0.0);
                }
            }
        }
        let least = fired.iter().flatten().copied().min().unwrap_or(rows.len());
        least as f64 / rows.len().max(1) as f64
    }

    /// Trains on standardized rows.
    pub fn train(
        train: &Dataset,
        cfg: &AutoencoderConfig,
        seed: u64,
    ) -> Result<TrainedAutoencoder> {
        if cfg.epochs == 0 {
            return Err(Error::invalid("autoencoder needs at least one epoch"));
        }
        if train.is_empty() {
            return Err(Error::invalid("autoencoder: training set is empty"));
        }
        let mut model = Self::live_init(train, seed)?;
        let mut rng = rng::seeded(rng::derive_seed(seed, 1));
        let mut velocity = vec![0.0; model.params.len()];
        let mut order: Vec<usize> = (0..train.len()).collect();
        let batch_size = if train.len() <= cfg.full_batch_limit {
            train.len()
        } else {
            cfg.batch_size.max(1)
        };
        let mut history = Vec::with_capacity(cfg.epochs);
        for epoch in 1..=cfg.epochs {
            if batch_size < train.len() {
                order.shuffle(&mut rng);
            }
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(batch_size) {
                let batch: Vec<&[f64]> = chunk.iter().map(|&i| train.row(i)).collect();
                let (loss, grad) = model.loss_and_gradient(&batch);
                if !loss.is_finite() {
                    return Err(Error::Divergence { epoch });
                }
                epoch_loss += loss * chunk.len() as f64;
                for ((p, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&grad) {
                    *v = cfg.momentum * *v - cfg.learning_rate * g;
                    *p += *v;
                }
            }
            let epoch_loss = epoch_loss / train.len() as f64;
            if !epoch_loss.is_finite() || model.params.iter().any(|p| !p.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            history.push(epoch_loss);
        }
        Ok(TrainedAutoencoder {
            model,
            loss_history: history,
        })
    }
}

fn mean_squared_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}
