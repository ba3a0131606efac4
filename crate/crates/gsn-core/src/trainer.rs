//! Minibatch SGD with classical momentum over the walkback objective.
//!
//! Each epoch shuffles the training rows, unrolls a fresh walkback graph
//! per minibatch, and applies `v <- momentum * v - lr * g; theta <- theta
//! + v`, where `g` is the minibatch-mean gradient. The learning rate for
//! epoch `e` (0-based) is computed as `lr0 * decay^e` rather than by
//! compounding, so the schedule is exactly reproducible at any epoch.

use std::collections::HashMap;
use std::io::Write;

use crate::diffgraph::NoiseMode;
use crate::gsn::GsnModel;
use crate::ndnum::{Matrix, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub lr_decay: f64,
    pub minibatch: usize,
    /// Seed for the trainer's own stream (shuffling and walkback noise);
    /// independent of the model's initialization stream.
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs,
            learning_rate: 0.25,
            momentum: 0.5,
            lr_decay: 0.99,
            minibatch: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Param(format!("learning_rate {} must be > 0", self.learning_rate)));
        }
        if !self.momentum.is_finite() || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Param(format!("momentum {} must be in [0, 1)", self.momentum)));
        }
        if !self.lr_decay.is_finite() || self.lr_decay <= 0.0 || self.lr_decay > 1.0 {
            return Err(Error::Param(format!("lr_decay {} must be in (0, 1]", self.lr_decay)));
        }
        if self.minibatch == 0 {
            return Err(Error::Param("minibatch must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean summed walkback reconstruction NLL per example.
    pub mean_nll: f64,
    /// Learning rate in effect during this epoch.
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Parameter fingerprint after the final update.
    pub final_checksum: u64,
}

impl TrainReport {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("epoch,mean_nll,lr\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{}\n", e.epoch, e.mean_nll, e.learning_rate));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }
}

/// Trains the model in place and reports per-epoch statistics. Zero
/// epochs is a valid request: the parameters are untouched and the report
/// is empty. Any non-finite loss (or numeric failure inside a batch)
/// aborts with an error naming the epoch and batch.
pub fn train(model: &mut GsnModel, data: &Matrix, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if data.rows() == 0 {
        return Err(Error::Shape("training data has no rows".into()));
    }
    if data.cols() != model.config().visible_size {
        return Err(Error::Shape(format!(
            "training data has {} columns, model expects {}",
            data.cols(),
            model.config().visible_size
        )));
    }

    let mut rng = Rng::with_stream(config.seed, 1);
    let mut velocity: HashMap<String, Matrix> = HashMap::new();
    let names = model.params().names().to_vec();
    let mut report = TrainReport { epochs: Vec::with_capacity(config.epochs), final_checksum: 0 };

    let mut indices: Vec<usize> = (0..data.rows()).collect();
    for epoch in 0..config.epochs {
        let lr = config.learning_rate * config.lr_decay.powi(epoch as i32);
        rng.shuffle(&mut indices);

        let mut loss_sum = 0.0;
        let mut examples = 0usize;
        for (batch_idx, chunk) in indices.chunks(config.minibatch).enumerate() {
            let fail = |e: Error| {
                Error::Numerics(format!("training aborted at epoch {epoch}, batch {batch_idx}: {e}"))
            };
            let x0 = data.select_rows(chunk);
            let mut wb = model.build_walkback_graph(&x0)?;
            wb.graph
                .forward(model.params(), &wb.inputs, &mut rng, NoiseMode::Fresh)
                .map_err(fail)?;
            let total = wb.graph.value(wb.loss)?.get(0, 0);
            if !total.is_finite() {
                return Err(Error::Numerics(format!(
                    "non-finite loss {total} at epoch {epoch}, batch {batch_idx}"
                )));
            }
            loss_sum += total;
            examples += chunk.len();

            model.params_mut().zero_grads();
            wb.graph.backward(model.params_mut(), wb.loss).map_err(fail)?;

            let scale = 1.0 / chunk.len() as f64;
            for name in &names {
                let owner = model.params().owner_value(name)?;
                let g = match model.params().grad(name) {
                    Some(g) => g.scale(lr * scale),
                    // A layer can sit out a batch (short unrolls); its
                    // velocity still decays.
                    None => Matrix::zeros(owner.rows(), owner.cols()),
                };
                let v_old = velocity
                    .get(name)
                    .cloned()
                    .unwrap_or_else(|| Matrix::zeros(owner.rows(), owner.cols()));
                let v_new = v_old.scale(config.momentum).sub(&g).map_err(fail)?;
                let updated = owner.add(&v_new).map_err(fail)?;
                model.params_mut().set(name, updated)?;
                velocity.insert(name.clone(), v_new);
            }
        }
        report.epochs.push(EpochStats {
            epoch,
            mean_nll: loss_sum / examples as f64,
            learning_rate: lr,
        });
    }
    report.final_checksum = model.params_checksum();
    Ok(report)
}
