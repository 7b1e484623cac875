//! L1 semantic-alignment training with Adam, batch-by-batch and
//! bit-for-bit reproducible.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::audio::{AudioClip, SemanticEmbedding};
use crate::fusion::{FrameEncoder, FusionError, FusionHead};
use crate::model::{ModelError, Wav2SemModel};
use crate::numerics::{AdamConfig, AdamState, Graph, NumericsError, Tensor};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("sample {sample_id}: target has dim {got}, model produces {expected}")]
    TargetDim {
        sample_id: usize,
        got: usize,
        expected: usize,
    },
    #[error("non-finite loss at step {step} on sample {sample_id}")]
    NonFiniteLoss { step: u64, sample_id: usize },
    #[error("model is frozen; parameters cannot be updated")]
    Frozen,
    #[error("checkpoint observer failed: {0}")]
    Observer(String),
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl From<ModelError> for TrainError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Frozen => TrainError::Frozen,
            other => TrainError::Model(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Periodic checkpoint cadence in optimizer steps; 0 disables.
    pub checkpoint_every: u64,
    /// Seeded reshuffle of the sample order every epoch.
    pub shuffle: bool,
}

impl TrainConfig {
    /// 200 epochs, Adam at 1e-4, batch size 1.
    pub fn canonical() -> Self {
        Self {
            epochs: 200,
            learning_rate: 1e-4,
            batch_size: 1,
            seed: 0,
            checkpoint_every: 0,
            shuffle: false,
        }
    }

    fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be >= 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.learning_rate.is_infinite() {
            return Err(TrainError::Config("learning_rate must be a positive number".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// 1-based optimizer step.
    pub step: u64,
    pub epoch: usize,
    /// Dataset index of the first sample in the batch.
    pub sample_id: usize,
    /// Mean per-sample loss of the batch.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub records: Vec<StepRecord>,
}

impl TrainLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointKind {
    Periodic,
    /// Epoch with the lowest mean loss so far.
    Best,
    Final,
}

/// Hooks for logging and checkpoint persistence.
pub trait TrainObserver {
    fn on_step(&mut self, _record: &StepRecord) {}

    fn on_checkpoint(
        &mut self,
        _kind: CheckpointKind,
        _step: u64,
        _model: &Wav2SemModel,
        _optimizer: &AdamState,
    ) -> Result<(), String> {
        Ok(())
    }
}

pub struct NoopObserver;

impl TrainObserver for NoopObserver {}

/// `‖target − predicted‖₁`.
pub fn l1_loss(predicted: &SemanticEmbedding, target: &SemanticEmbedding) -> Result<f64, TrainError> {
    if predicted.dim() != target.dim() {
        return Err(TrainError::Config(format!(
            "l1_loss: prediction dim {} != target dim {}",
            predicted.dim(),
            target.dim()
        )));
    }
    Ok(predicted
        .values()
        .iter()
        .zip(target.values())
        .map(|(p, t)| (t - p).abs())
        .sum())
}

/// Optimizer state plus the step counter of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trainer {
    adam: AdamState,
}

impl Trainer {
    pub fn new(model: &Wav2SemModel, learning_rate: f64) -> Self {
        Self {
            adam: AdamState::new(
                AdamConfig::with_learning_rate(learning_rate),
                model.params().tensors(),
            ),
        }
    }

    pub fn resume(adam: AdamState) -> Self {
        Self { adam }
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.adam
    }

    pub fn steps_taken(&self) -> u64 {
        self.adam.step_count()
    }

    /// Sum of per-sample L1 losses and their averaged parameter gradients;
    /// one Adam update. Returns the mean loss.
    pub fn step(
        &mut self,
        model: &mut Wav2SemModel,
        batch: &[(usize, &AudioClip, &SemanticEmbedding)],
    ) -> Result<f64, TrainError> {
        if model.is_frozen() {
            return Err(TrainError::Frozen);
        }
        let n_params = model.params().len();
        let mut acc: Vec<Vec<f64>> = model
            .params()
            .tensors()
            .iter()
            .map(|t| vec![0.0; t.numel()])
            .collect();
        let mut total = 0.0;
        for &(sample_id, clip, target) in batch {
            let mut g = Graph::new();
            let pv = model.bind(&mut g);
            let pred = model.forward_graph(&mut g, &pv, clip)?;
            let c = g.value(pred).len();
            if target.dim() != c {
                return Err(TrainError::TargetDim {
                    sample_id,
                    got: target.dim(),
                    expected: c,
                });
            }
            let t = g.constant(Tensor::vector(target.values().to_vec()));
            let loss = g.l1(pred, t)?;
            let value = g.value(loss)[0];
            if !value.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    step: self.adam.step_count() + 1,
                    sample_id,
                });
            }
            total += value;
            let mut grads = g.backward(loss)?;
            for (a, &v) in acc.iter_mut().zip(&pv) {
                if let Some(gv) = grads.get(v) {
                    a.iter_mut().zip(gv).for_each(|(a, g)| *a += g);
                }
                grads.take(v);
            }
        }
        debug_assert_eq!(acc.len(), n_params);
        let scale = 1.0 / batch.len() as f64;
        let params = model.params_mut()?;
        for (t, mut g) in params.tensors_mut().iter_mut().zip(acc) {
            if batch.len() > 1 {
                g.iter_mut().for_each(|v| *v *= scale);
            }
            t.set_grad(g)?;
        }
        self.adam.step(params.tensors_mut().iter_mut())?;
        params.clear_grads();
        Ok(total * scale)
    }
}

/// Trains from a fresh optimizer state.
pub fn train(
    model: &mut Wav2SemModel,
    dataset: &[(AudioClip, SemanticEmbedding)],
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainLog, TrainError> {
    let mut trainer = Trainer::new(model, cfg.learning_rate);
    train_with(&mut trainer, model, dataset, cfg, observer)
}

/// Runs `cfg.epochs` epochs of `ceil(len / batch_size)` steps each.
pub fn train_with(
    trainer: &mut Trainer,
    model: &mut Wav2SemModel,
    dataset: &[(AudioClip, SemanticEmbedding)],
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainLog, TrainError> {
    cfg.validate()?;
    if model.is_frozen() {
        return Err(TrainError::Frozen);
    }
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let required = model.config().min_samples();
    let dim = model.config().model_dim;
    for (i, (clip, target)) in dataset.iter().enumerate() {
        if clip.len() < required {
            return Err(ModelError::InputTooShort {
                got: clip.len(),
                required,
            }
            .into());
        }
        if target.dim() != dim {
            return Err(TrainError::TargetDim {
                sample_id: i,
                got: target.dim(),
                expected: dim,
            });
        }
    }

    // a resumed run picks up the epoch numbering, and so the shuffle order,
    // where the checkpoint left off
    let steps_per_epoch = dataset.len().div_ceil(cfg.batch_size) as u64;
    let first_epoch = (trainer.steps_taken() / steps_per_epoch) as usize;
    let mut log = TrainLog::default();
    let mut best = f64::INFINITY;
    for epoch in first_epoch..first_epoch + cfg.epochs {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        if cfg.shuffle {
            order.shuffle(&mut seeded(derive_seed(cfg.seed, epoch as u64)));
        }
        let mut epoch_loss = 0.0;
        let mut epoch_steps = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(usize, &AudioClip, &SemanticEmbedding)> = chunk
                .iter()
                .map(|&i| (i, &dataset[i].0, &dataset[i].1))
                .collect();
            let loss = trainer.step(model, &batch)?;
            let record = StepRecord {
                step: trainer.steps_taken(),
                epoch,
                sample_id: chunk[0],
                loss,
            };
            observer.on_step(&record);
            log.records.push(record);
            epoch_loss += loss;
            epoch_steps += 1;
            if cfg.checkpoint_every > 0 && record.step.is_multiple_of(cfg.checkpoint_every) {
                observer
                    .on_checkpoint(CheckpointKind::Periodic, record.step, model, trainer.optimizer())
                    .map_err(TrainError::Observer)?;
            }
        }
        let mean = epoch_loss / epoch_steps as f64;
        if mean < best {
            best = mean;
            observer
                .on_checkpoint(CheckpointKind::Best, trainer.steps_taken(), model, trainer.optimizer())
                .map_err(TrainError::Observer)?;
        }
    }
    observer
        .on_checkpoint(CheckpointKind::Final, trainer.steps_taken(), model, trainer.optimizer())
        .map_err(TrainError::Observer)?;
    Ok(log)
}

/// Downstream phase: the encoder is frozen, only the fusion head learns,
/// with an L1 loss between fused frames and per-frame targets.
pub fn train_fusion_head(
    model: &Wav2SemModel,
    encoder: &dyn FrameEncoder,
    head: &mut FusionHead,
    dataset: &[(AudioClip, Tensor)],
    cfg: &TrainConfig,
) -> Result<TrainLog, TrainError> {
    cfg.validate()?;
    if !model.is_frozen() {
        return Err(TrainError::Config(
            "freeze the sentence encoder before training the fusion head".into(),
        ));
    }
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    // encoder outputs never change in this phase
    let mut cached = Vec::with_capacity(dataset.len());
    for (clip, target) in dataset {
        let fs = model.encode(clip)?;
        let fp = encoder.frame_features(clip)?;
        if fp.shape() != target.shape() {
            return Err(TrainError::Config(format!(
                "frame target shape {:?} != frame features {:?}",
                target.shape(),
                fp.shape()
            )));
        }
        cached.push((Tensor::vector(fs.values().to_vec()), fp));
    }

    let mut adam = AdamState::new(
        AdamConfig::with_learning_rate(cfg.learning_rate),
        head.params().tensors(),
    );
    let mut log = TrainLog::default();
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        if cfg.shuffle {
            order.shuffle(&mut seeded(derive_seed(cfg.seed, epoch as u64)));
        }
        for chunk in order.chunks(cfg.batch_size) {
            let mut acc: Vec<Vec<f64>> = head
                .params()
                .tensors()
                .iter()
                .map(|t| vec![0.0; t.numel()])
                .collect();
            let mut total = 0.0;
            for &i in chunk {
                let mut g = Graph::new();
                let pv = head.params().bind(&mut g);
                let s = g.constant(cached[i].0.clone());
                let f = g.constant(cached[i].1.clone());
                let out = head.fuse_graph(&mut g, &pv, s, f)?;
                let t = g.constant(dataset[i].1.clone());
                let loss = g.l1(out, t)?;
                let value = g.value(loss)[0];
                if !value.is_finite() {
                    return Err(TrainError::NonFiniteLoss {
                        step: adam.step_count() + 1,
                        sample_id: i,
                    });
                }
                total += value;
                let grads = g.backward(loss)?;
                for (a, &v) in acc.iter_mut().zip(&pv) {
                    if let Some(gv) = grads.get(v) {
                        a.iter_mut().zip(gv).for_each(|(a, g)| *a += g);
                    }
                }
            }
            let scale = 1.0 / chunk.len() as f64;
            let params = head.params_mut();
            for (t, mut g) in params.tensors_mut().iter_mut().zip(acc) {
                g.iter_mut().for_each(|v| *v *= scale);
                t.set_grad(g)?;
            }
            adam.step(params.tensors_mut().iter_mut())?;
            params.clear_grads();
            log.records.push(StepRecord {
                step: adam.step_count(),
                epoch,
                sample_id: chunk[0],
                loss: total * scale,
            });
        }
    }
    Ok(log)
}
