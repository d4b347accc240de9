//! Transductive full-batch training: every document is a node in every graph,
//! only training nodes contribute to the loss.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::adam::{adam_step, AdamConfig, AdamState};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::gcn::{forward, init_model, loss_and_grad, MultiGraphGcn};
use crate::graph::TopicGraph;
use crate::metrics::{evaluate, predict_class, Metrics};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMasks {
    pub train: Vec<bool>,
    pub test: Vec<bool>,
}

impl SplitMasks {
    pub fn train_count(&self) -> usize {
        self.train.iter().filter(|&&b| b).count()
    }

    pub fn test_count(&self) -> usize {
        self.test.iter().filter(|&&b| b).count()
    }
}

/// Per class: shuffle member indices, send `⌈ratio · count⌉` to train (at
/// most `count - 1`, at least 1) and the rest to test.
pub fn stratified_split(labels: &[Label], ratio: f64, seed: u64) -> Result<SplitMasks> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let mut r = rng::seeded(seed);
    let mut train = vec![false; labels.len()];
    for class in [Label::Fake, Label::True] {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < 2 {
            return Err(Error::Invalid(format!(
                "class {} has {} documents; a split needs at least 2",
                class.index(),
                members.len()
            )));
        }
        rng::shuffle(&mut r, &mut members);
        let wanted = (ratio * members.len() as f64 - 1e-9).ceil() as usize;
        let n_train = wanted.clamp(1, members.len() - 1);
        for &i in &members[..n_train] {
            train[i] = true;
        }
    }
    let test = train.iter().map(|t| !t).collect();
    Ok(SplitMasks { train, test })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub adam: AdamConfig,
    /// Seeds parameter initialization.
    pub seed: u64,
    /// Test metrics are recorded every `eval_every` epochs and at the last one.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            adam: AdamConfig::default(),
            seed: 0,
            eval_every: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be at least 1".into()));
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub test: Option<Metrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub duration: Duration,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl TrainHistory {
    /// `epoch,loss,train_acc,test_acc,test_f1,test_auc`; test columns are
    /// empty on epochs without an evaluation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,train_acc,test_acc,test_f1,test_auc\n");
        for r in &self.epochs {
            let t = r.test.as_ref();
            let _ = writeln!(
                out,
                "{},{:.9},{:.6},{},{},{}",
                r.epoch,
                r.loss,
                r.train_accuracy,
                fmt_opt(t.map(|m| m.accuracy)),
                fmt_opt(t.map(|m| m.f1)),
                fmt_opt(t.and_then(|m| m.auc)),
            );
        }
        out
    }
}

fn masked_accuracy(probs: &ndarray::Array2<f64>, labels: &[Label], mask: &[bool]) -> f64 {
    let mut hit = 0usize;
    let mut total = 0usize;
    for (i, (&y, _)) in labels.iter().zip(mask).enumerate().filter(|(_, (_, &m))| m) {
        total += 1;
        if predict_class(probs[[i, 0]], probs[[i, 1]]) == y {
            hit += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

pub fn train(
    graphs: &[TopicGraph],
    labels: &[Label],
    masks: &SplitMasks,
    cfg: &TrainConfig,
) -> Result<(MultiGraphGcn, TrainHistory)> {
    cfg.validate()?;
    if graphs.is_empty() {
        return Err(Error::Invalid("training needs at least one graph".into()));
    }
    let n = graphs[0].num_nodes();
    if labels.len() != n || masks.train.len() != n || masks.test.len() != n {
        return Err(Error::Invalid(format!(
            "{n} nodes but {} labels and masks of length {}/{}",
            labels.len(),
            masks.train.len(),
            masks.test.len()
        )));
    }
    let dims: Vec<usize> = graphs.iter().map(TopicGraph::input_dim).collect();
    let mut model = init_model(&dims, cfg.seed)?;
    let mut state = AdamState::for_model(&model, cfg.adam);
    let has_test = masks.test.iter().any(|&b| b);

    let started = Instant::now();
    let mut records = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let cache = forward(&model, graphs)?;
        let (loss, grads) = match loss_and_grad(&cache, labels, &masks.train, &model, graphs) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => return Err(Error::Diverged(epoch)),
            Err(e) => return Err(e),
        };
        if !loss.is_finite() {
            return Err(Error::Diverged(epoch));
        }
        let test = if has_test && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
            Some(evaluate(&cache.probs, labels, &masks.test)?)
        } else {
            None
        };
        records.push(EpochRecord {
            epoch,
            loss,
            train_accuracy: masked_accuracy(&cache.probs, labels, &masks.train),
            test,
        });
        adam_step(&mut model, &grads, &mut state);
    }
    Ok((
        model,
        TrainHistory {
            epochs: records,
            duration: started.elapsed(),
        },
    ))
}
