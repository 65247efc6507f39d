use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cnn::{CnnParams, CnnShape, ProsodyModel};
use super::window::WordWindowMatrix;
use super::EventKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub l2: f64,
    pub momentum: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            learning_rate: 0.01,
            batch_size: 32,
            seed: 0,
            l2: 1e-5,
            momentum: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) || self.l2 < 0.0 {
            return Err(Error::Config(
                "momentum must be in [0, 1) and l2 non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: ProsodyModel,
    /// Mean cross-entropy over each epoch's (rebalanced) examples.
    pub epoch_losses: Vec<f64>,
}

pub const INIT_RANGE: f64 = 0.05;

pub fn init_model(kind: EventKind, shape: CnnShape, rng: &mut ChaCha8Rng) -> ProsodyModel {
    let mut model = ProsodyModel::zeros(kind, shape);
    let p = &mut model.params;
    for w in [&mut p.conv1_w, &mut p.conv2_w, &mut p.fc_w] {
        w.iter_mut()
            .for_each(|v| *v = rng.gen_range(-INIT_RANGE..INIT_RANGE));
    }
    model
}

/// One epoch's example order: every example of the majority class plus the
/// minority class resampled up to the same count, shuffled.
fn epoch_order(pos: &[usize], neg: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let (major, minor) = if pos.len() >= neg.len() {
        (pos, neg)
    } else {
        (neg, pos)
    };
    let mut order: Vec<usize> = Vec::with_capacity(2 * major.len());
    order.extend_from_slice(major);
    order.extend_from_slice(minor);
    for _ in minor.len()..major.len() {
        order.push(minor[rng.gen_range(0..minor.len())]);
    }
    order.shuffle(rng);
    order
}

pub fn train(
    corpus: &[(WordWindowMatrix, bool)],
    kind: EventKind,
    cfg: &TrainConfig,
) -> Result<ProsodyModel> {
    train_with_report(corpus, kind, CnnShape::DEFAULT, cfg).map(|r| r.model)
}

/// Mini-batch gradient descent with momentum and L2 on the weights,
/// rebalancing classes to 1:1 in every epoch. Deterministic given the seed.
/// The returned weights are rounded to f32 so that saving is lossless.
pub fn train_with_report(
    corpus: &[(WordWindowMatrix, bool)],
    kind: EventKind,
    shape: CnnShape,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    shape.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let pos: Vec<usize> = (0..corpus.len()).filter(|&i| corpus[i].1).collect();
    let neg: Vec<usize> = (0..corpus.len()).filter(|&i| !corpus[i].1).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = init_model(kind, shape, &mut rng);
    let mut grad = CnnParams::zeros(&shape);
    let mut velocity = CnnParams::zeros(&shape);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        let order = epoch_order(&pos, &neg, &mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.fill(0.0);
            for &i in batch {
                let (x, y) = &corpus[i];
                total += model.backward(x, *y, &mut grad, None)?;
            }
            let scale = 1.0 / batch.len() as f64;
            let p = &model.params;
            for (g, w) in [
                (&mut grad.conv1_w, &p.conv1_w),
                (&mut grad.conv2_w, &p.conv2_w),
                (&mut grad.fc_w, &p.fc_w),
            ] {
                for (gv, wv) in g.iter_mut().zip(w) {
                    *gv = *gv * scale + cfg.l2 * wv;
                }
            }
            for g in [&mut grad.conv1_b, &mut grad.conv2_b, &mut grad.fc_b] {
                g.iter_mut().for_each(|v| *v *= scale);
            }
            for (v, g) in velocity.tensors_mut().into_iter().zip(grad.tensors()) {
                for (vv, gv) in v.iter_mut().zip(g) {
                    *vv = cfg.momentum * *vv - cfg.learning_rate * gv;
                }
            }
            model.params.add_scaled(1.0, &velocity);
        }
        epoch_losses.push(total / order.len() as f64);
        if !model.params.is_finite() {
            return Err(Error::Config(
                "training diverged (non-finite weights)".into(),
            ));
        }
    }

    for t in model.params.tensors_mut() {
        t.iter_mut().for_each(|v| *v = *v as f32 as f64);
    }
    Ok(TrainReport {
        model,
        epoch_losses,
    })
}
