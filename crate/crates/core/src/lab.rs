//! Sampling laboratory: draws training sets from a known model, fits
//! learners, and measures δ̄, ζ and the type-1 loss exactly.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::thm1_bound;
use crate::dist::{CondDist, FullModel};
use crate::error::{Error, Result};
use crate::info::{conditional_total_variation, model_info, tv_rows};
use crate::rng::{derive_seed_path, rng_from_seed};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959963984540054;

/// Labelled sample over finite alphabets.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x_card: usize,
    pub y_card: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl Dataset {
    pub fn new(x_card: usize, y_card: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if x_card == 0 || y_card == 0 {
            return Err(Error::Empty);
        }
        if let Some(&(x, y)) = pairs.iter().find(|&&(x, y)| x >= x_card || y >= y_card) {
            return Err(Error::ShapeMismatch(format!(
                "pair ({x}, {y}) outside {x_card}x{y_card}"
            )));
        }
        Ok(Self { x_card, y_card, pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Uniform empirical weights 1/m.
    pub fn uniform_weights(&self) -> Vec<f64> {
        vec![1.0 / self.len() as f64; self.len()]
    }

    /// Weighted (x, y) mass table, row-major.
    pub fn weighted_table(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {} points",
                weights.len(),
                self.len()
            )));
        }
        let mut t = vec![0.0; self.x_card * self.y_card];
        for (&(x, y), &w) in self.pairs.iter().zip(weights) {
            t[x * self.y_card + y] += w;
        }
        Ok(t)
    }

    /// Empirical x-frequencies.
    pub fn x_frequencies(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.x_card];
        for &(x, _) in &self.pairs {
            f[x] += 1.0;
        }
        let m = self.len().max(1) as f64;
        f.iter_mut().for_each(|v| *v /= m);
        f
    }

    /// Integer (x, y) counts, row-major.
    pub fn counts(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.x_card * self.y_card];
        for &(x, y) in &self.pairs {
            t[x * self.y_card + y] += 1.0;
        }
        t
    }

    /// Empirical conditionals; unseen x get uniform rows.
    pub fn empirical_conditional(&self) -> CondDist {
        CondDist::from_weight_rows(self.x_card, self.y_card, &self.counts())
            .expect("non-negative counts")
    }
}

/// i.i.d. draws from p(x)p(y|x).
pub fn sample_dataset(model: &FullModel, m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::DomainError("m must be >= 1".into()));
    }
    let joint = model.joint_xy();
    let (nx, ny) = (joint.x_card(), joint.y_card());
    let index = WeightedIndex::new(joint.as_flat())
        .map_err(|e| Error::DomainError(format!("cannot sample joint: {e}")))?;
    let mut rng = rng_from_seed(seed);
    let pairs = (0..m)
        .map(|_| {
            let k = index.sample(&mut rng);
            (k / ny, k % ny)
        })
        .collect();
    Dataset::new(nx, ny, pairs)
}

/// A rule mapping a (weighted) training set to p̂(y|x) on all of 𝒳.
pub trait Learner: Send + Sync {
    /// Fits against per-point weights summing to one.
    fn fit_weighted(&self, data: &Dataset, weights: &[f64]) -> Result<CondDist>;

    fn fit(&self, data: &Dataset) -> Result<CondDist> {
        self.fit_weighted(data, &data.uniform_weights())
    }

    fn descriptor(&self) -> String;
}

/// Smoothed conditional-frequency estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PluginLearner {
    pub alpha: f64,
}

pub fn plugin_learner(alpha: f64) -> Result<PluginLearner> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::DomainError(format!("alpha = {alpha} must be >= 0")));
    }
    Ok(PluginLearner { alpha })
}

impl PluginLearner {
    fn rows_from_counts(&self, nx: usize, ny: usize, counts: &[f64]) -> Result<CondDist> {
        if self.alpha.is_infinite() {
            return Ok(CondDist::uniform(nx, ny));
        }
        let smoothed: Vec<f64> = counts.iter().map(|c| c + self.alpha).collect();
        CondDist::from_weight_rows(nx, ny, &smoothed)
    }
}

impl Learner for PluginLearner {
    fn fit_weighted(&self, data: &Dataset, weights: &[f64]) -> Result<CondDist> {
        let m = data.len() as f64;
        let counts: Vec<f64> = data.weighted_table(weights)?.iter().map(|w| w * m).collect();
        self.rows_from_counts(data.x_card, data.y_card, &counts)
    }

    fn fit(&self, data: &Dataset) -> Result<CondDist> {
        self.rows_from_counts(data.x_card, data.y_card, &data.counts())
    }

    fn descriptor(&self) -> String {
        format!("plugin(alpha={})", self.alpha)
    }
}

/// Linear-softmax classifier on one-hot x, trained by full-batch gradient
/// descent on weighted cross entropy from a seeded initialisation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxGdLearner {
    pub steps: usize,
    pub lr: f64,
    pub init_seed: u64,
}

pub fn softmax_gd_learner(steps: usize, lr: f64, init_seed: u64) -> Result<SoftmaxGdLearner> {
    if steps == 0 {
        return Err(Error::DomainError("steps must be >= 1".into()));
    }
    if !(lr.is_finite() && lr >= 0.0) {
        return Err(Error::DomainError(format!("lr = {lr} must be finite and >= 0")));
    }
    Ok(SoftmaxGdLearner { steps, lr, init_seed })
}

fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for (o, l) in out.iter_mut().zip(logits) {
        *o = (l - top).exp();
        s += *o;
    }
    out.iter_mut().for_each(|o| *o /= s);
}

impl SoftmaxGdLearner {
    fn init(&self, nx: usize, ny: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rng = rng_from_seed(self.init_seed);
        let w = (0..nx * ny).map(|_| rng.random_range(-0.01..0.01)).collect();
        let b = (0..ny).map(|_| rng.random_range(-0.01..0.01)).collect();
        (w, b)
    }
}

impl Learner for SoftmaxGdLearner {
    fn fit_weighted(&self, data: &Dataset, weights: &[f64]) -> Result<CondDist> {
        let (nx, ny) = (data.x_card, data.y_card);
        let table = data.weighted_table(weights)?;
        let n_x: Vec<f64> = (0..nx).map(|x| table[x * ny..(x + 1) * ny].iter().sum()).collect();
        let (mut w, mut b) = self.init(nx, ny);
        let mut logits = vec![0.0; ny];
        let mut probs = vec![0.0; ny];
        let mut grad_w = vec![0.0; nx * ny];
        let mut grad_b = vec![0.0; ny];
        for _ in 0..self.steps {
            grad_b.iter_mut().for_each(|g| *g = 0.0);
            for x in 0..nx {
                for y in 0..ny {
                    logits[y] = w[x * ny + y] + b[y];
                }
                softmax_into(&logits, &mut probs);
                for y in 0..ny {
                    let g = n_x[x] * probs[y] - table[x * ny + y];
                    grad_w[x * ny + y] = g;
                    grad_b[y] += g;
                }
            }
            for (p, g) in w.iter_mut().zip(&grad_w) {
                *p -= self.lr * g;
            }
            for (p, g) in b.iter_mut().zip(&grad_b) {
                *p -= self.lr * g;
            }
        }
        let mut out = Vec::with_capacity(nx * ny);
        for x in 0..nx {
            if n_x[x] == 0.0 {
                out.extend(std::iter::repeat_n(1.0 / ny as f64, ny));
                continue;
            }
            for y in 0..ny {
                logits[y] = w[x * ny + y] + b[y];
            }
            softmax_into(&logits, &mut probs);
            out.extend_from_slice(&probs);
        }
        CondDist::from_weight_rows(nx, ny, &out)
    }

    fn descriptor(&self) -> String {
        format!(
            "softmax_gd(steps={},lr={},init_seed={})",
            self.steps, self.lr, self.init_seed
        )
    }
}

/// Learner chosen at run time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerSpec {
    Plugin {
        #[serde(default)]
        alpha: f64,
    },
    SoftmaxGd {
        steps: usize,
        lr: f64,
        #[serde(default)]
        init_seed: u64,
    },
}

impl LearnerSpec {
    pub fn build(&self) -> Result<Box<dyn Learner>> {
        Ok(match *self {
            LearnerSpec::Plugin { alpha } => Box::new(plugin_learner(alpha)?),
            LearnerSpec::SoftmaxGd { steps, lr, init_seed } => {
                Box::new(softmax_gd_learner(steps, lr, init_seed)?)
            }
        })
    }
}

/// Empirical-x-weighted conditional TV between two fits on seen x.
fn empirical_tv(data: &Dataset, a: &CondDist, b: &CondDist) -> f64 {
    data.x_frequencies()
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0.0)
        .map(|(x, f)| f * tv_rows(a.row(x), b.row(x)))
        .sum()
}

/// Training total variation ζ between the empirical and learned conditionals.
pub fn training_zeta(data: &Dataset, learned: &CondDist) -> Result<f64> {
    if learned.n_rows() != data.x_card || learned.n_cols() != data.y_card {
        return Err(Error::ShapeMismatch("learned rows do not match dataset alphabets".into()));
    }
    Ok(empirical_tv(data, &data.empirical_conditional(), learned))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub m: usize,
    pub seed: u64,
    pub delta_bar: f64,
    pub zeta: f64,
    pub i_loss_1: f64,
    pub thm1_value: f64,
    pub learner: String,
    /// Seen x where the fit is closer to the truth than to the sample.
    pub hypothesis_violations: usize,
    pub support_size: usize,
}

/// Samples, fits and measures one trial; errors if the type-1 loss bound fails.
pub fn run_trial(model: &FullModel, learner: &dyn Learner, m: usize, seed: u64) -> Result<TrialRecord> {
    let data = sample_dataset(model, m, seed)?;
    let est = learner.fit(&data)?;
    measure_trial(model, &data, &est, learner.descriptor(), seed)
}

/// Measurements of a fitted conditional against the known model.
pub fn measure_trial(
    model: &FullModel,
    data: &Dataset,
    est: &CondDist,
    learner: String,
    seed: u64,
) -> Result<TrialRecord> {
    let delta_bar = conditional_total_variation(&model.p_x, &model.p_y_given_x, est)?;
    let zeta = training_zeta(data, est)?;
    let truth = model_info(model);
    let estimated = model_info(&model.with_label_conditional(est.clone())?);
    let i_loss_1 = (truth.i_yz - estimated.i_yz).abs();
    let thm1_value = thm1_bound(delta_bar.clamp(0.0, 1.0), truth.i_xz.max(0.0))?;
    if i_loss_1 > thm1_value + 1e-9 {
        return Err(Error::BoundViolated(format!(
            "type-1 loss {i_loss_1} exceeds {thm1_value} (m = {}, seed = {seed})",
            data.len()
        )));
    }
    let emp = data.empirical_conditional();
    let freq = data.x_frequencies();
    let seen: Vec<usize> = (0..data.x_card).filter(|&x| freq[x] > 0.0).collect();
    let hypothesis_violations = seen
        .iter()
        .filter(|&&x| tv_rows(est.row(x), emp.row(x)) > tv_rows(est.row(x), model.p_y_given_x.row(x)))
        .count();
    Ok(TrialRecord {
        m: data.len(),
        seed,
        delta_bar,
        zeta,
        i_loss_1,
        thm1_value,
        learner,
        hypothesis_violations,
        support_size: seen.len(),
    })
}

/// Seed of trial `index` at sample size `m`.
pub fn trial_seed(base_seed: u64, m: usize, index: usize) -> u64 {
    derive_seed_path(base_seed, &[m as u64, index as u64])
}

/// Runs `trials` independent trials in parallel, returned in trial order.
pub fn run_trials(
    model: &FullModel,
    learner: &dyn Learner,
    m: usize,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<TrialRecord>> {
    (0..trials)
        .into_par_iter()
        .map(|i| run_trial(model, learner, m, trial_seed(base_seed, m, i)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub m: usize,
    pub eps: f64,
    pub trials: usize,
    pub hits: usize,
    pub freq: f64,
    pub wilson_hi: f64,
}

/// Upper end of the Wilson score interval.
pub fn wilson_upper(hits: usize, n: usize, z: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre + spread) / (1.0 + z2 / n)).clamp(p, 1.0)
}

/// Frequency of δ̄ ≥ ε among trials at a single m.
pub fn tail_from_records(m: usize, records: &[TrialRecord], eps: f64) -> TailEstimate {
    let hits = records.iter().filter(|r| r.delta_bar >= eps).count();
    let trials = records.len();
    TailEstimate {
        m,
        eps,
        trials,
        hits,
        freq: if trials == 0 { 0.0 } else { hits as f64 / trials as f64 },
        wilson_hi: wilson_upper(hits, trials, WILSON_Z),
    }
}

/// Minimum trial count accepted by [`monte_carlo_tail`].
pub const MIN_TAIL_TRIALS: usize = 100;

/// Estimates P(δ̄ ≥ ε) at each m; also returns the raw trials.
pub fn monte_carlo_tail_with_records(
    model: &FullModel,
    learner: &dyn Learner,
    m_grid: &[usize],
    eps: f64,
    trials: usize,
    base_seed: u64,
) -> Result<(Vec<TailEstimate>, Vec<TrialRecord>)> {
    if trials < MIN_TAIL_TRIALS {
        return Err(Error::DomainError(format!(
            "trials = {trials}, need at least {MIN_TAIL_TRIALS}"
        )));
    }
    let mut tails = Vec::with_capacity(m_grid.len());
    let mut all = Vec::with_capacity(m_grid.len() * trials);
    for &m in m_grid {
        let recs = run_trials(model, learner, m, trials, base_seed)?;
        tails.push(tail_from_records(m, &recs, eps));
        all.extend(recs);
    }
    Ok((tails, all))
}

pub fn monte_carlo_tail(
    model: &FullModel,
    learner: &dyn Learner,
    m_grid: &[usize],
    eps: f64,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<TailEstimate>> {
    monte_carlo_tail_with_records(model, learner, m_grid, eps, trials, base_seed).map(|r| r.0)
}

/// Empirical q-quantile (nearest rank) of δ̄.
pub fn delta_quantile(records: &[TrialRecord], q: f64) -> f64 {
    let mut v: Vec<f64> = records.iter().map(|r| r.delta_bar).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Refit after moving `perturb_mass` onto one training point; returns the
/// empirical-x-weighted conditional TV between the two fits.
pub fn stability_probe(
    learner: &dyn Learner,
    data: &Dataset,
    perturb_mass: f64,
    probe_seed: u64,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty);
    }
    let m = data.len() as f64;
    if !(0.0..=1.0 / m).contains(&perturb_mass) {
        return Err(Error::DomainError(format!(
            "perturb_mass = {perturb_mass} outside [0, 1/m]"
        )));
    }
    let base = data.uniform_weights();
    let reference = learner.fit_weighted(data, &base)?;
    let j = rng_from_seed(probe_seed).random_range(0..data.len());
    let mut w = base.clone();
    w[j] += perturb_mass;
    let total = 1.0 + perturb_mass;
    w.iter_mut().for_each(|v| *v /= total);
    let moved = learner.fit_weighted(data, &w)?;
    Ok(empirical_tv(data, &reference, &moved))
}

/// Flips the label of point `index` to the next class and reports the TV
/// change of the fitted row at that point's x.
pub fn label_flip_probe(learner: &dyn Learner, data: &Dataset, index: usize) -> Result<f64> {
    let &(x, y) = data
        .pairs
        .get(index)
        .ok_or_else(|| Error::DomainError(format!("index {index} out of range")))?;
    let before = learner.fit(data)?;
    let mut flipped = data.clone();
    flipped.pairs[index] = (x, (y + 1) % data.y_card);
    let after = learner.fit(&flipped)?;
    Ok(tv_rows(before.row(x), after.row(x)))
}
