use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{batch_gradient, forward, loss, GnnError, ModelParams};
use crate::scenegraph::Example;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct TrainConfig {
    pub seed: u64,
    pub step_size: f64,
    pub epochs: usize,
    /// Graphs per optimizer step.
    pub mini_batch: usize,
    pub validation_fraction: f64,
    pub early_stop_patience: usize,
    /// Separate weights for each message-passing round.
    pub untied: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            step_size: 1e-3,
            epochs: 500,
            mini_batch: 8,
            validation_fraction: 0.1,
            early_stop_patience: 50,
            untied: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GnnError> {
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(GnnError::Config(format!("step size must be finite and >= 0, got {}", self.step_size)));
        }
        if self.epochs == 0 || self.mini_batch == 0 {
            return Err(GnnError::Config("epochs and mini-batch must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(GnnError::Config("validation fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Losses after `epoch` passes over the training split; epoch 0 is the
/// initial model. `val_loss` is `None` without a validation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CurvePoint {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

impl CurvePoint {
    pub fn csv(curve: &[CurvePoint]) -> String {
        let mut out = String::from("epoch,trainLoss,valLoss\n");
        for p in curve {
            let val = p.val_loss.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", p.epoch, p.train_loss, val));
        }
        out
    }
}

/// Mean per-graph loss.
pub fn dataset_loss(params: &ModelParams, examples: &[&Example]) -> Result<f64, GnnError> {
    if examples.is_empty() {
        return Err(GnnError::EmptyDataset);
    }
    let mut total = 0.0;
    for ex in examples {
        total += loss(&forward(params, &ex.graph)?, &ex.labels);
    }
    Ok(total / examples.len() as f64)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Adam on mean mini-batch loss. Returns the parameters with the best
/// validation loss (training loss when there is no validation split) and
/// the per-epoch curve.
pub fn train(examples: &[Example], cfg: &TrainConfig) -> Result<(ModelParams, Vec<CurvePoint>), GnnError> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(GnnError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((examples.len() as f64) * cfg.validation_fraction).round() as usize;
    let n_val = n_val.min(examples.len() - 1);
    let val: Vec<&Example> = order[..n_val].iter().map(|&i| &examples[i]).collect();
    let mut train_idx: Vec<usize> = order[n_val..].to_vec();

    let mut params = ModelParams::init_with(cfg.seed, !cfg.untied);
    let mut flat = params.to_vec();
    let mut adam = Adam {
        m: vec![0.0; flat.len()],
        v: vec![0.0; flat.len()],
        t: 0,
    };
    let evaluate = |p: &ModelParams, epoch: usize, idx: &[usize]| -> Result<CurvePoint, GnnError> {
        let tr: Vec<&Example> = idx.iter().map(|&i| &examples[i]).collect();
        Ok(CurvePoint {
            epoch,
            train_loss: dataset_loss(p, &tr)?,
            val_loss: if val.is_empty() { None } else { Some(dataset_loss(p, &val)?) },
        })
    };
    let score = |c: &CurvePoint| c.val_loss.unwrap_or(c.train_loss);

    let mut curve = vec![evaluate(&params, 0, &train_idx)?];
    let mut best = (score(&curve[0]), params.clone());
    let mut since_best = 0usize;
    for epoch in 1..=cfg.epochs {
        train_idx.shuffle(&mut rng);
        for chunk in train_idx.chunks(cfg.mini_batch) {
            let batch: Vec<(&_, &[u8])> = chunk
                .iter()
                .map(|&i| (&examples[i].graph, examples[i].labels.as_slice()))
                .collect();
            let (_, grad) = batch_gradient(&params, &batch)?;
            let scale = 1.0 / chunk.len() as f64;
            let g: Vec<f64> = grad.to_vec().into_iter().map(|x| x * scale).collect();
            adam.step(&mut flat, &g, cfg.step_size);
            params.set_from(&flat);
        }
        let point = evaluate(&params, epoch, &train_idx)?;
        let s = score(&point);
        curve.push(point);
        if s < best.0 {
            best = (s, params.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stop_patience {
                break;
            }
        }
    }
    Ok((best.1, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mazenamo::{generate, mazenamo_domain, GenConfig};
    use crate::pddl::ground;
    use crate::scenegraph::{encode, label};
    use crate::search::{solve_optimal, Deadline};

    fn small_examples(count: u64) -> Vec<Example> {
        let d = mazenamo_domain();
        let mut out = Vec::new();
        let mut seed = 0;
        while out.len() < count as usize {
            seed += 1;
            let Ok(grid) = generate(&GenConfig::new(6, seed)) else { continue };
            let t = grid.to_task();
            let p = ground(&d, &t).unwrap();
            let outcome = solve_optimal(&p, &Deadline::unbounded().with_max_expansions(20_000));
            let Some(plan) = outcome.plan() else { continue };
            out.push(Example {
                id: t.name.clone(),
                graph: encode(&t, &d).unwrap(),
                labels: label(&d, &t, plan).unwrap(),
            });
        }
        out
    }

    #[test]
    fn zero_step_size_leaves_parameters_unchanged() {
        let ex = small_examples(3);
        let cfg = TrainConfig {
            epochs: 1,
            step_size: 0.0,
            seed: 4,
            ..TrainConfig::default()
        };
        let (p, curve) = train(&ex, &cfg).unwrap();
        assert_eq!(p, ModelParams::init(4));
        assert_eq!(curve.len(), 2);
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let ex = small_examples(12);
        let cfg = TrainConfig {
            epochs: 30,
            step_size: 1e-2,
            seed: 1,
            validation_fraction: 0.0,
            ..TrainConfig::default()
        };
        let (p, curve) = train(&ex, &cfg).unwrap();
        let first = curve[0].train_loss;
        let last = curve.last().unwrap().train_loss;
        assert!(last < first, "{first} -> {last}");
        let (q, curve2) = train(&ex, &cfg).unwrap();
        assert_eq!(p, q);
        assert_eq!(curve, curve2);
        assert!(CurvePoint::csv(&curve).starts_with("epoch,trainLoss,valLoss\n0,"));
    }

    #[test]
    fn rejects_empty_dataset_and_bad_config() {
        assert_eq!(train(&[], &TrainConfig::default()), Err(GnnError::EmptyDataset));
        let ex = small_examples(1);
        let bad = TrainConfig {
            step_size: -1.0,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&ex, &bad), Err(GnnError::Config(_))));
    }
}
