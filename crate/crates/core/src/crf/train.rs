//! Per-sentence stochastic gradient ascent with an L2 penalty.
//!
//! The penalty is applied as a proximal step, `θ ← (θ + η g) / (1 + η λ / N)`,
//! where `N` is the number of sentences drawn per iteration. Weights are kept
//! as `scale · v` so the shrinkage costs O(1) per update.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CrfModel, EncodedSentence};
use crate::corpus::{tags_to_spans, Side, TagScheme};
use crate::error::{Error, Result};
use crate::eval::{char_accuracy, word_prf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub eta0: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { iterations: 20, eta0: 0.1, lambda: 1e-4, seed: 0 }
    }
}

/// One training sentence: encoded features plus allowed tag sets.
#[derive(Debug, Clone)]
pub struct Instance {
    pub encoded: EncodedSentence,
    pub labels: Vec<Vec<usize>>,
}

/// Chooses which instances (by index) make up each iteration.
pub trait Sampler {
    fn draw(&self, iteration: usize) -> Vec<usize>;
}

/// Every instance once per iteration, shuffled by `(seed, iteration)`.
#[derive(Debug, Clone)]
pub struct ShuffleSampler {
    pub len: usize,
    pub seed: u64,
}

impl Sampler for ShuffleSampler {
    fn draw(&self, iteration: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(iteration as u64);
        order.shuffle(&mut rng);
        order
    }
}

/// Held-out data for model selection. Gold tags are in `scheme`; a bundled
/// model's output is projected onto `projection` before scoring.
#[derive(Debug, Clone)]
pub struct DevSet {
    pub encoded: Vec<EncodedSentence>,
    pub gold: Vec<Vec<usize>>,
    pub scheme: TagScheme,
    pub projection: Option<Side>,
}

impl DevSet {
    /// Returns `(char accuracy, word F1)` of `model` on this set.
    pub fn evaluate(&self, model: &CrfModel) -> (f64, f64) {
        let pred: Vec<Vec<usize>> = self
            .encoded
            .iter()
            .map(|enc| {
                let tags = model.tag_encoded(enc);
                match self.projection {
                    Some(side) => tags.iter().map(|&t| model.scheme().project(t, side).unwrap_or(t)).collect(),
                    None => tags,
                }
            })
            .collect();
        let acc = char_accuracy(&self.gold, &pred).unwrap_or(0.0);
        let spans = |v: &[Vec<usize>]| -> Vec<Vec<(usize, usize)>> {
            v.iter().map(|t| tags_to_spans(&self.scheme.boundaries(t)).spans().to_vec()).collect()
        };
        let f1 = word_prf(&spans(&self.gold), &spans(&pred)).map_or(0.0, |s| s.f1);
        (acc, f1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    pub sentences: usize,
    pub eta: f64,
    /// Summed log-likelihood of the drawn sentences minus the L2 penalty.
    pub objective: f64,
    pub dev_accuracy: Option<f64>,
    pub dev_f1: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub iterations: Vec<IterationStats>,
    /// 1-based iteration whose weights were kept.
    pub best_iteration: usize,
}

/// Sparse accumulator over feature ids that remembers what it touched.
struct Accumulator {
    values: Vec<f64>,
    touched: Vec<u32>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Accumulator { values: vec![0.0; len], touched: Vec::new() }
    }

    fn add(&mut self, id: u32, v: f64) {
        let slot = &mut self.values[id as usize];
        if *slot == 0.0 {
            self.touched.push(id);
        }
        *slot += v;
    }
}

/// Trains `model` (whose index must already be frozen) starting from its current weights.
pub fn train(
    mut model: CrfModel,
    data: &[Instance],
    sampler: &dyn Sampler,
    dev: Option<&DevSet>,
    config: &TrainConfig,
) -> Result<(CrfModel, TrainLog)> {
    if data.is_empty() {
        return Err(Error::Invalid("no training sentences".into()));
    }
    let dim = model.index().len();
    let mut v = model.weights().to_vec();
    let mut scale = 1.0f64;
    let mut free = Accumulator::new(dim);
    let mut clamped = Accumulator::new(dim);
    let mut log = TrainLog::default();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut step = 0usize;
    let mut period = 0usize;

    for it in 0..config.iterations {
        let order = sampler.draw(it);
        if order.is_empty() {
            return Err(Error::Invalid("sampler drew no sentences".into()));
        }
        if period == 0 {
            period = order.len();
        }
        let per_step_l2 = config.lambda / order.len() as f64;
        let mut ll_sum = 0.0;
        let mut eta = config.eta0;
        for &idx in &order {
            let inst =
                data.get(idx).ok_or_else(|| Error::Invalid(format!("sampler drew out-of-range instance {idx}")))?;
            eta = config.eta0 / (1.0 + step as f64 / period as f64);
            let mut lat = model.lattice_scaled(&inst.encoded, &v, scale);
            let post = lat.forward_backward();
            model.expectations(&inst.encoded, &post, |f, p| free.add(f, p));
            lat.restrict(&inst.labels)?;
            let post_c = lat.forward_backward();
            model.expectations(&inst.encoded, &post_c, |f, p| clamped.add(f, p));
            ll_sum += post_c.log_z - post.log_z;

            let gain = eta / scale;
            for &f in &clamped.touched {
                v[f as usize] += gain * clamped.values[f as usize];
                clamped.values[f as usize] = 0.0;
            }
            for &f in &free.touched {
                v[f as usize] -= gain * free.values[f as usize];
                free.values[f as usize] = 0.0;
            }
            clamped.touched.clear();
            free.touched.clear();

            scale /= 1.0 + eta * per_step_l2;
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
            step += 1;
        }

        let norm: f64 = v.iter().map(|w| (w * scale) * (w * scale)).sum();
        model.weights_mut().iter_mut().zip(&v).for_each(|(w, x)| *w = x * scale);
        let (dev_accuracy, dev_f1) = match dev {
            Some(d) => {
                let (a, f) = d.evaluate(&model);
                (Some(a), Some(f))
            }
            None => (None, None),
        };
        log.iterations.push(IterationStats {
            iteration: it + 1,
            sentences: order.len(),
            eta,
            objective: ll_sum - 0.5 * config.lambda * norm,
            dev_accuracy,
            dev_f1,
        });
        if let Some(f1) = dev_f1 {
            if best.as_ref().is_none_or(|(b, _)| f1 > *b) {
                best = Some((f1, model.weights().to_vec()));
                log.best_iteration = it + 1;
            }
        } else {
            log.best_iteration = it + 1;
        }
    }
    if let Some((_, w)) = best {
        model.weights_mut().copy_from_slice(&w);
    }
    Ok((model, log))
}
