use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::CicConfig;
use super::model::{BatchNoise, CicModel};
use crate::embedding::EmbeddedPairDataset;
use crate::error::{Error, Result};
use crate::neural::AdamState;

/// A fitted model with the configuration it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: CicModel,
    pub config: CicConfig,
    /// Mean total loss of each completed epoch.
    pub loss_history: Vec<f64>,
}

/// Relative improvement an epoch must make to reset the patience counter.
const PLATEAU_TOL: f64 = 1e-4;

/// Mini-batch Adam over shuffled epochs. The whole run is a function of
/// `(dataset, cfg)`; one ChaCha8 stream seeded with `cfg.seed` drives
/// initialization, shuffling and sampling noise, in that order.
pub fn train(data: &EmbeddedPairDataset, cfg: &CicConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = CicModel::new(data.dim(), cfg, &mut rng)?;
    let mut params = model.params();
    let mut adam = AdamState::new(params.len(), cfg.lr);
    let n = data.len();
    let bs = cfg.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let kl_scale = if cfg.kl_warmup == 0 {
            1.0
        } else {
            ((epoch + 1) as f64 / cfg.kl_warmup as f64).min(1.0)
        };
        let mut sum = 0.0;
        for chunk in order.chunks(bs) {
            let x = data.cause_rows.select_rows(chunk);
            let y = data.effect_rows.select_rows(chunk);
            let noise = BatchNoise::draw(chunk.len(), cfg.d_private, cfg.d_shared, &mut rng);
            let (parts, grad) = model.loss_and_grad_scaled(&x, &y, &noise, cfg, kl_scale, true)?;
            let grad = grad.expect("requested");
            if !parts.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            sum += parts.total * chunk.len() as f64;
            adam.step(&mut params, &grad)?;
            model.set_params(&params)?;
        }
        let mean = sum / n as f64;
        history.push(mean);
        if let Some(patience) = cfg.patience {
            if mean < best - PLATEAU_TOL * best.abs() {
                best = mean;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }
    Ok(TrainedModel {
        model,
        config: cfg.clone(),
        loss_history: history,
    })
}
