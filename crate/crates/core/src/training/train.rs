use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::loss::{loss_and_grad, unrolled_loss, BatchItem, Unroll};
use super::reference::{boundaries, precompute_reference, ReferenceTable};
use crate::error::{Error, Result};
use crate::loa_model::{ModelWeights, SKIP};
use crate::numerics::{Matrix, Rng};
use crate::problems::Problem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub k_unroll: usize,
    pub segment: usize,
    pub batch_size: usize,
    pub lr_fc: f64,
    pub lr_skip: f64,
    pub clip_norm: f64,
    pub epochs: usize,
    pub seed: u64,
    pub gamma: f64,
    /// Start from the BFGS-coincident weights rather than a random draw.
    pub coincident_init: bool,
    /// Evaluate batch members on separate threads.
    pub parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k_unroll: 40,
            segment: 5,
            batch_size: 2,
            lr_fc: 1e-4,
            lr_skip: 1e-3,
            clip_norm: 1.0,
            epochs: 200,
            seed: 0,
            gamma: 1.0,
            coincident_init: true,
            parallel: false,
        }
    }
}

impl TrainConfig {
    pub fn unroll(&self) -> Unroll {
        Unroll {
            k: self.k_unroll,
            segment: self.segment,
            gamma: self.gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        boundaries(self.k_unroll, self.segment)?;
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch_size must be positive".into()));
        }
        for (name, v) in [
            ("lr_fc", self.lr_fc),
            ("lr_skip", self.lr_skip),
            ("clip_norm", self.clip_norm),
            ("gamma", self.gamma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// Starting weights drawn from the configured seed.
    pub fn initial_weights(&self) -> ModelWeights {
        let mut rng = Rng::new(self.seed, "model");
        if self.coincident_init {
            ModelWeights::init_bfgs_coincident(&mut rng)
        } else {
            ModelWeights::init_random(&mut rng)
        }
    }
}

/// Bias-corrected ADAM over the layer tensors, one learning rate per layer.
#[derive(Debug, Clone)]
pub struct MetaAdam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: i32,
}

impl MetaAdam {
    pub fn new(like: &ModelWeights) -> Self {
        let zeros: Vec<Matrix> = like.layers().iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn step(&mut self, layers: &mut [Matrix], grads: &[Matrix], lrs: &[f64]) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for i in 0..layers.len() {
            self.m[i] = self.m[i].zip_map(&grads[i], |m, g| b1 * m + (1.0 - b1) * g);
            self.v[i] = self.v[i].zip_map(&grads[i], |v, g| b2 * v + (1.0 - b2) * g * g);
            let step = self.m[i].zip_map(&self.v[i], |m, v| (m / c1) / ((v / c2).sqrt() + self.eps));
            layers[i] = layers[i].zip_map(&step, |w, s| w - lrs[i] * s);
        }
    }
}

/// Rescales `grads` so their joint Euclidean norm is at most `max_norm`;
/// returns the norm before clipping.
pub fn clip_global(grads: &mut [Matrix], max_norm: f64) -> f64 {
    let norm = grads
        .iter()
        .flat_map(|g| g.as_slice())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            *g = g.scale(s);
        }
    }
    norm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_train_loss: f64,
    pub mean_test_loss: Option<f64>,
    /// Batches whose loss was non-finite and therefore not applied.
    pub skipped_batches: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: ModelWeights,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub history: Vec<EpochRecord>,
    pub reference: ReferenceTable,
    pub test_reference: Option<ReferenceTable>,
}

impl TrainOutcome {
    /// `epoch,mean_train_loss,mean_test_loss`; missing test losses are empty.
    pub fn history_csv(&self) -> String {
        history_csv(&self.history, false)
    }
}

/// Loss history as CSV, optionally with a constant `log2` column.
pub fn history_csv(history: &[EpochRecord], with_log2: bool) -> String {
    let mut out = String::from("epoch,mean_train_loss,mean_test_loss");
    if with_log2 {
        out.push_str(",log2");
    }
    out.push('\n');
    for r in history {
        let test = r.mean_test_loss.map(|v| format!("{v:e}")).unwrap_or_default();
        let _ = write!(out, "{},{:e},{}", r.epoch, r.mean_train_loss, test);
        if with_log2 {
            let _ = write!(out, ",{:e}", std::f64::consts::LN_2);
        }
        out.push('\n');
    }
    out
}

fn items<'a>(problems: &'a [Problem], table: &'a ReferenceTable) -> Vec<BatchItem<'a>> {
    table
        .rows
        .iter()
        .map(|r| BatchItem {
            problem: &problems[r.index],
            reference: &r.gaps,
        })
        .collect()
}

/// Mean per-problem loss over `items`; infinite if any member fails.
pub fn mean_loss(weights: &ModelWeights, items: &[BatchItem], u: Unroll) -> f64 {
    if items.is_empty() {
        return f64::NAN;
    }
    let mut total = 0.0;
    for it in items {
        match unrolled_loss(weights, std::slice::from_ref(it), u) {
            Ok(l) => total += l,
            Err(_) => return f64::INFINITY,
        }
    }
    total / items.len() as f64
}

/// Batch loss and gradient as the mean of per-member values, reduced in
/// batch order whether or not members run in parallel.
fn batch_grad(weights: &ModelWeights, batch: &[BatchItem], u: Unroll, parallel: bool) -> Result<(f64, Vec<Matrix>)> {
    let parts: Vec<Result<(f64, Vec<Matrix>)>> = if parallel && batch.len() > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = batch
                .iter()
                .map(|it| s.spawn(move || loss_and_grad(weights, std::slice::from_ref(it), u)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    } else {
        batch
            .iter()
            .map(|it| loss_and_grad(weights, std::slice::from_ref(it), u))
            .collect()
    };
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut grads: Option<Vec<Matrix>> = None;
    for part in parts {
        let (l, g) = part?;
        loss += l;
        grads = Some(match grads {
            None => g,
            Some(acc) => acc.iter().zip(&g).map(|(a, b)| a.add(b)).collect(),
        });
    }
    let grads = grads.expect("non-empty batch").into_iter().map(|g| g.map(|v| v / n)).collect();
    Ok((loss / n, grads))
}

/// Called after every epoch with its record, the weights reached and
/// whether they are the best so far.
pub type EpochObserver<'a> = dyn FnMut(&EpochRecord, &ModelWeights, bool) -> Result<()> + 'a;

/// Trains from `init` and returns the weights of the epoch with the lowest
/// mean training loss. Epoch 0 is the evaluation of `init`.
pub fn train(cfg: &TrainConfig, problems: &[Problem], test: &[Problem], init: ModelWeights) -> Result<TrainOutcome> {
    train_with(cfg, problems, test, init, &mut |_, _, _| Ok(()))
}

/// [`train`] with a per-epoch callback.
pub fn train_with(
    cfg: &TrainConfig,
    problems: &[Problem],
    test: &[Problem],
    init: ModelWeights,
    observer: &mut EpochObserver,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let u = cfg.unroll();
    let reference = precompute_reference(problems, cfg.k_unroll, cfg.segment, cfg.gamma)?;
    let train_items = items(problems, &reference);
    if train_items.len() < cfg.batch_size {
        return Err(Error::InvalidParameter(format!(
            "{} usable training problems for batch size {}",
            train_items.len(),
            cfg.batch_size
        )));
    }
    let test_reference = if test.is_empty() {
        None
    } else {
        Some(precompute_reference(test, cfg.k_unroll, cfg.segment, cfg.gamma)?)
    };
    let test_items = test_reference.as_ref().map(|t| items(test, t)).unwrap_or_default();
    let evaluate = |w: &ModelWeights| {
        let train = mean_loss(w, &train_items, u);
        let test = (!test_items.is_empty()).then(|| mean_loss(w, &test_items, u));
        (train, test)
    };

    let lrs: Vec<f64> = (0..init.layers().len())
        .map(|i| if i == SKIP { cfg.lr_skip } else { cfg.lr_fc })
        .collect();
    let mut layers = init.layers().to_vec();
    let mut adam = MetaAdam::new(&init);
    let (l0, t0) = evaluate(&init);
    let mut history = vec![EpochRecord {
        epoch: 0,
        mean_train_loss: l0,
        mean_test_loss: t0,
        skipped_batches: 0,
    }];
    observer(&history[0], &init, true)?;
    let (mut best, mut best_epoch, mut best_loss) = (init.clone(), 0, l0);
    let mut last_good = init;
    let stream = Rng::new(cfg.seed, "training");

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..train_items.len()).collect();
        stream.substream(&format!("epoch{epoch}")).shuffle(&mut order);
        let mut skipped = 0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            batches += 1;
            let batch: Vec<BatchItem> = chunk.iter().map(|&i| train_items[i]).collect();
            let current = ModelWeights::new(layers.clone())?;
            match batch_grad(&current, &batch, u, cfg.parallel) {
                Ok((l, mut grads)) if l.is_finite() && grads.iter().all(Matrix::is_finite) => {
                    clip_global(&mut grads, cfg.clip_norm);
                    adam.step(&mut layers, &grads, &lrs);
                }
                Ok(_) | Err(Error::NonFiniteLoss { .. }) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        let weights = match ModelWeights::new(layers.clone()) {
            Ok(w) => w,
            Err(_) => {
                return Err(Error::TrainingDiverged {
                    epoch,
                    last_good: Box::new(last_good),
                })
            }
        };
        let (l, t) = evaluate(&weights);
        history.push(EpochRecord {
            epoch,
            mean_train_loss: l,
            mean_test_loss: t,
            skipped_batches: skipped,
        });
        if skipped == batches {
            return Err(Error::TrainingDiverged {
                epoch,
                last_good: Box::new(last_good),
            });
        }
        let improved = l.is_finite() && !(l >= best_loss);
        observer(history.last().expect("pushed"), &weights, improved)?;
        if l.is_finite() {
            last_good = weights.clone();
            if improved {
                best = weights;
                best_epoch = epoch;
                best_loss = l;
            }
        }
    }
    Ok(TrainOutcome {
        best,
        best_epoch,
        best_loss,
        history,
        reference,
        test_reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_scales_jointly() {
        let mut g = vec![Matrix::scalar(3.0), Matrix::scalar(4.0)];
        assert_eq!(clip_global(&mut g, 1.0), 5.0);
        assert!((g[0].scalar_value() - 0.6).abs() < 1e-15);
        assert!((g[1].scalar_value() - 0.8).abs() < 1e-15);
        let mut small = vec![Matrix::scalar(0.1)];
        clip_global(&mut small, 1.0);
        assert_eq!(small[0].scalar_value(), 0.1);
    }

    #[test]
    fn first_adam_step_has_learning_rate_magnitude() {
        let w = ModelWeights::init_random(&mut Rng::new(0, "w"));
        let mut adam = MetaAdam::new(&w);
        let mut layers = w.layers().to_vec();
        let grads: Vec<Matrix> = layers.iter().map(|m| m.map(|_| -2.5)).collect();
        let lrs = [1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-3];
        adam.step(&mut layers, &grads, &lrs);
        for (i, (a, b)) in layers.iter().zip(w.layers()).enumerate() {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!(((x - y) - lrs[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn config_rejects_bad_segment() {
        let cfg = TrainConfig {
            segment: 7,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_defaults() {
        let cfg: TrainConfig = serde_json::from_str(r#"{"epochs": 3}"#).unwrap();
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.k_unroll, 40);
    }
}
