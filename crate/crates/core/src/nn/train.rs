//! Sum-of-squares loss, its gradient, and full-batch Adam.

use std::io::Write;

use ndarray::Array1;

use super::params::{Arch, GnnParams};
use super::{fgnn, mpgnn, NnError};
use crate::instance::MilpGraph;

#[derive(Debug, Clone)]
pub struct Sample {
    pub graph: MilpGraph,
    pub target: Vec<f64>,
}

/// Network output for one graph, dispatched on the architecture.
pub fn forward(params: &GnnParams, g: &MilpGraph) -> Result<Vec<f64>, NnError> {
    match params.arch {
        Arch::MpGnn => mpgnn::mpgnn_forward(params, g),
        Arch::Fgnn2 => fgnn::fgnn2_forward(params, g),
    }
}

fn check_targets(data: &[Sample]) -> Result<(), NnError> {
    for (k, s) in data.iter().enumerate() {
        if s.target.len() != s.graph.n() {
            return Err(NnError::TargetLength {
                sample: k,
                expected: s.graph.n(),
                found: s.target.len(),
            });
        }
    }
    Ok(())
}

/// `½ Σ_G ‖F(G) − target(G)‖²`.
pub fn loss(params: &GnnParams, data: &[Sample]) -> Result<f64, NnError> {
    check_targets(data)?;
    let mut total = 0.0;
    for s in data {
        let y = forward(params, &s.graph)?;
        total += y.iter().zip(&s.target).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum::<f64>();
    }
    Ok(total)
}

/// Loss and its gradient, accumulated over the samples in index order.
pub fn loss_and_grad(params: &GnnParams, data: &[Sample]) -> Result<(f64, GnnParams), NnError> {
    check_targets(data)?;
    let mut grad = params.zeros_like();
    let mut total = 0.0;
    for s in data {
        let target = Array1::from(s.target.clone());
        match params.arch {
            Arch::MpGnn => {
                let (y, cache) = mpgnn::forward_cached(params, &s.graph);
                let r = &y - &target;
                total += 0.5 * r.dot(&r);
                mpgnn::backward(params, &s.graph, &cache, &r, &mut grad);
            }
            Arch::Fgnn2 => {
                let (y, cache) = fgnn::forward_cached(params, &s.graph);
                let r = &y - &target;
                total += 0.5 * r.dot(&r);
                fgnn::backward(params, &s.graph, &cache, &r, &mut grad);
            }
        }
    }
    Ok((total, grad))
}

pub fn grad(params: &GnnParams, data: &[Sample]) -> Result<GnnParams, NnError> {
    loss_and_grad(params, data).map(|(_, g)| g)
}

/// Learning rate that steps down once the loss reaches given thresholds.
/// Stages are never undone.
#[derive(Debug, Clone, PartialEq)]
pub struct LrSchedule {
    pub initial: f64,
    /// `(loss threshold, new rate)` in order of decreasing threshold.
    pub decays: Vec<(f64, f64)>,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            initial: 1e-5,
            decays: vec![(1e-6, 1e-6), (1e-12, 1e-7)],
        }
    }
}

impl LrSchedule {
    pub fn constant(lr: f64) -> LrSchedule {
        LrSchedule {
            initial: lr,
            decays: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub schedule: LrSchedule,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub max_epochs: usize,
    /// Stop as soon as the loss is at or below this value.
    pub target_loss: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            schedule: LrSchedule::default(),
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            max_epochs: 1000,
            target_loss: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Loss of the parameters the epoch started from.
    pub loss: f64,
    /// Rate used for this epoch's step.
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossCurve {
    pub records: Vec<EpochRecord>,
}

impl LossCurve {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn min_loss(&self) -> Option<f64> {
        self.records.iter().map(|r| r.loss).min_by(f64::total_cmp)
    }

    pub fn first_epoch_below(&self, threshold: f64) -> Option<usize> {
        self.records.iter().find(|r| r.loss <= threshold).map(|r| r.epoch)
    }

    /// CSV with header `epoch,loss,lr`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "loss", "lr"])?;
        for r in &self.records {
            w.write_record([r.epoch.to_string(), format!("{:e}", r.loss), format!("{:e}", r.lr)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: GnnParams,
    pub curve: LossCurve,
    /// Loss of the returned parameters.
    pub final_loss: f64,
    pub reached_target: bool,
}

pub fn train(params: GnnParams, data: &[Sample], cfg: &TrainConfig) -> Result<TrainOutcome, NnError> {
    train_with(params, data, cfg, |_| {})
}

/// Full-batch Adam: one step per epoch on the summed loss. `on_epoch` sees
/// each record as it is produced.
pub fn train_with(
    mut params: GnnParams,
    data: &[Sample],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome, NnError> {
    let mut curve = LossCurve::default();
    if data.is_empty() {
        return Ok(TrainOutcome {
            params,
            curve,
            final_loss: 0.0,
            reached_target: cfg.target_loss.is_some_and(|t| t >= 0.0),
        });
    }
    let mut first = params.zeros_like().to_flat();
    let mut second = first.clone();
    let mut stage = 0;
    let mut lr = cfg.schedule.initial;
    let (mut b1t, mut b2t) = (1.0, 1.0);

    for epoch in 1..=cfg.max_epochs {
        let (loss, grad) = loss_and_grad(&params, data)?;
        if !loss.is_finite() {
            return Err(NnError::Diverged { epoch });
        }
        while stage < cfg.schedule.decays.len() && loss <= cfg.schedule.decays[stage].0 {
            lr = cfg.schedule.decays[stage].1;
            stage += 1;
        }
        let record = EpochRecord { epoch, loss, lr };
        curve.records.push(record);
        on_epoch(&record);
        if cfg.target_loss.is_some_and(|t| loss <= t) {
            return Ok(TrainOutcome {
                params,
                curve,
                final_loss: loss,
                reached_target: true,
            });
        }

        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        let g = grad.to_flat();
        let mut k = 0;
        for slice in params.slices_mut() {
            for theta in slice.iter_mut() {
                first[k] = cfg.beta1 * first[k] + (1.0 - cfg.beta1) * g[k];
                second[k] = cfg.beta2 * second[k] + (1.0 - cfg.beta2) * g[k] * g[k];
                let m_hat = first[k] / (1.0 - b1t);
                let v_hat = second[k] / (1.0 - b2t);
                *theta -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
                k += 1;
            }
        }
    }
    let final_loss = loss(&params, data)?;
    if !final_loss.is_finite() {
        return Err(NnError::Diverged { epoch: cfg.max_epochs });
    }
    Ok(TrainOutcome {
        params,
        curve,
        final_loss,
        reached_target: cfg.target_loss.is_some_and(|t| final_loss <= t),
    })
}
