//! Experiment configs, the tail-bound comparison run, and result files.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{
    default_m_prime_max, fit_k_model, thm4_epsilon_at_confidence, thm4_tail_bound, KModel,
};
use crate::dist::{FullModel, ModelFile};
use crate::error::{Error, Result};
use crate::lab::{
    delta_quantile, monte_carlo_tail_with_records, run_trials, sample_dataset, stability_probe,
    LearnerSpec, TailEstimate, TrialRecord, MIN_TAIL_TRIALS,
};

pub const TRIALS_CSV: &str = "trials.csv";
pub const TAILS_JSON: &str = "tails.json";
pub const STABILITY_JSON: &str = "stability.json";

fn default_nu() -> f64 {
    0.5
}

/// Monte Carlo experiment description. `model` is resolved relative to the
/// config file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: PathBuf,
    pub learner: LearnerSpec,
    pub m_grid: Vec<usize>,
    pub eps: f64,
    pub trials: usize,
    pub base_seed: u64,
    /// Confidence level used by the k(m') reconstruction.
    #[serde(default = "default_nu")]
    pub nu: f64,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        let msg = e.to_string();
        // serde names the field in its message; surface it as the key
        let key = msg
            .split('`')
            .nth(1)
            .map(str::to_string)
            .unwrap_or_else(|| path.display().to_string());
        Error::config(key, msg)
    })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: Self = read_json(path)?;
        cfg.model = resolve(path, &cfg.model);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_grid.is_empty() || self.m_grid.contains(&0) {
            return Err(Error::config("m_grid", "must be non-empty with every m >= 1"));
        }
        if !(0.0..=2.0).contains(&self.eps) {
            return Err(Error::config("eps", format!("{} outside [0, 2]", self.eps)));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return Err(Error::config("nu", format!("{} outside (0, 1)", self.nu)));
        }
        self.learner.build().map_err(|e| Error::config("learner", e.to_string()))?;
        Ok(())
    }

    pub fn load_model(&self) -> Result<FullModel> {
        ModelFile::load(&self.model)?.to_model()
    }
}

/// One row of trials.csv.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub m: usize,
    pub seed: u64,
    pub delta_bar: f64,
    pub zeta: f64,
    pub i_loss_1: f64,
    pub thm1_value: f64,
}

impl From<&TrialRecord> for TrialRow {
    fn from(r: &TrialRecord) -> Self {
        Self {
            m: r.m,
            seed: r.seed,
            delta_bar: r.delta_bar,
            zeta: r.zeta,
            i_loss_1: r.i_loss_1,
            thm1_value: r.thm1_value,
        }
    }
}

pub fn write_trials_csv<W: Write>(records: &[TrialRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(TrialRow::from(r))?;
    }
    if records.is_empty() {
        wr.write_record(["m", "seed", "delta_bar", "zeta", "i_loss_1", "thm1_value"])?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_trials_csv<R: Read>(r: R) -> Result<Vec<TrialRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|rec| rec.map_err(Error::from))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thm4Point {
    pub m: usize,
    pub bound: f64,
    pub argmin_m_prime: u64,
}

/// Reconstructed k(m') sample: √m'·max(0, ε* − q), where ε* is the
/// k = 0 bound inverted at confidence ν and q is the observed (1 − ν)
/// quantile of δ̄ at sample size m'.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KObservation {
    pub m_prime: u64,
    pub eps_star: f64,
    pub quantile: f64,
    pub k_obs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub learner: String,
    pub eps: f64,
    pub nu: f64,
    pub tails: Vec<TailEstimate>,
    pub k_observations: Vec<KObservation>,
    pub k_model: KModel,
    /// Mean ζ per m, fed to the tail bound.
    pub zeta: Vec<f64>,
    pub thm4: Vec<Thm4Point>,
    /// Fraction of (trial, seen x) pairs where the fit is closer to the truth
    /// than to the sample.
    pub hypothesis_violation_rate: f64,
}

/// Fits k_c, r on the reconstructed observations; all-zero observations give
/// the zero model and a single positive one gives a constant model.
pub fn fit_reconstructed(obs: &[KObservation]) -> Result<KModel> {
    let pos: Vec<(u64, f64)> = obs.iter().filter(|o| o.k_obs > 0.0).map(|o| (o.m_prime, o.k_obs)).collect();
    match pos.len() {
        0 => Ok(KModel::ZERO),
        1 => KModel::new(pos[0].1, 0.0),
        _ => fit_k_model(&pos),
    }
}

pub fn reconstruct_k(
    m: usize,
    y_card: usize,
    records: &[TrialRecord],
    nu: f64,
) -> Result<KObservation> {
    let mp = m as u64;
    let eps_star = thm4_epsilon_at_confidence(mp, y_card, nu, 0.0, &KModel::ZERO, default_m_prime_max(mp))?
        .unwrap_or(1.0);
    let quantile = delta_quantile(records, 1.0 - nu);
    Ok(KObservation {
        m_prime: mp,
        eps_star,
        quantile,
        k_obs: (m as f64).sqrt() * (eps_star - quantile).max(0.0),
    })
}

/// Trials, tail frequencies, fitted k(m') and the finite-sample tail bound.
pub fn run_tail_experiment(
    cfg: &ExperimentConfig,
    model: &FullModel,
) -> Result<(TailReport, Vec<TrialRecord>)> {
    if cfg.trials < MIN_TAIL_TRIALS {
        return Err(Error::config("trials", format!("tail estimates need at least {MIN_TAIL_TRIALS}")));
    }
    let learner = cfg.learner.build()?;
    let (tails, records) =
        monte_carlo_tail_with_records(model, learner.as_ref(), &cfg.m_grid, cfg.eps, cfg.trials, cfg.base_seed)?;
    let y_card = model.y_card();
    let by_m = |m: usize| records.iter().filter(move |r| r.m == m);

    let mut k_observations = Vec::new();
    let mut zeta = Vec::new();
    for &m in &cfg.m_grid {
        let recs: Vec<TrialRecord> = by_m(m).cloned().collect();
        k_observations.push(reconstruct_k(m, y_card, &recs, cfg.nu)?);
        zeta.push(recs.iter().map(|r| r.zeta).sum::<f64>() / recs.len() as f64);
    }
    let k_model = fit_reconstructed(&k_observations)?;

    let mut thm4 = Vec::new();
    if cfg.eps > 0.0 && cfg.eps < 1.0 {
        for (&m, &z) in cfg.m_grid.iter().zip(&zeta) {
            let mp = m as u64;
            let t = thm4_tail_bound(mp, y_card, cfg.eps, z.clamp(0.0, 1.0), &k_model, default_m_prime_max(mp))?;
            thm4.push(Thm4Point { m, bound: t.bound, argmin_m_prime: t.argmin_m_prime });
        }
    }
    let checked: usize = records.iter().map(|r| r.support_size).sum();
    let violated: usize = records.iter().map(|r| r.hypothesis_violations).sum();
    let report = TailReport {
        learner: learner.descriptor(),
        eps: cfg.eps,
        nu: cfg.nu,
        tails,
        k_observations,
        k_model,
        zeta,
        thm4,
        hypothesis_violation_rate: if checked == 0 { 0.0 } else { violated as f64 / checked as f64 },
    };
    Ok((report, records))
}

/// Trials only, for every m in the grid.
pub fn run_trial_experiment(cfg: &ExperimentConfig, model: &FullModel) -> Result<Vec<TrialRecord>> {
    let learner = cfg.learner.build()?;
    let mut out = Vec::new();
    for &m in &cfg.m_grid {
        out.extend(run_trials(model, learner.as_ref(), m, cfg.trials, cfg.base_seed)?);
    }
    Ok(out)
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn trials_csv_bytes(records: &[TrialRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trials_csv(records, &mut buf)?;
    Ok(buf)
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(value)?;
    s.push(b'\n');
    Ok(s)
}

fn default_halvings() -> usize {
    6
}

/// Perturbation ladder for the stability probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub model: PathBuf,
    pub learner: LearnerSpec,
    pub m: usize,
    pub data_seed: u64,
    pub probe_seed: u64,
    /// Largest perturbation; defaults to 1/m.
    #[serde(default)]
    pub perturb_mass: Option<f64>,
    #[serde(default = "default_halvings")]
    pub halvings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityStep {
    pub perturb_mass: f64,
    pub delta_tv: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub learner: String,
    pub m: usize,
    pub ladder: Vec<StabilityStep>,
    /// ΔTV never grows by more than 1e-9 when the mass is halved.
    pub monotone: bool,
}

impl StabilityConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: Self = read_json(path)?;
        cfg.model = resolve(path, &cfg.model);
        if cfg.m == 0 {
            return Err(Error::config("m", "must be >= 1"));
        }
        Ok(cfg)
    }
}

/// Runs the halving ladder starting at `perturb_mass` (default 1/m).
pub fn run_stability(cfg: &StabilityConfig, model: &FullModel) -> Result<StabilityReport> {
    let learner = cfg.learner.build()?;
    let data = sample_dataset(model, cfg.m, cfg.data_seed)?;
    let top = cfg.perturb_mass.unwrap_or(1.0 / cfg.m as f64);
    let mut ladder = Vec::with_capacity(cfg.halvings + 1);
    for i in 0..=cfg.halvings {
        let mass = top / 2f64.powi(i as i32);
        let delta_tv = stability_probe(learner.as_ref(), &data, mass, cfg.probe_seed)?;
        ladder.push(StabilityStep { perturb_mass: mass, delta_tv });
    }
    let monotone = ladder.windows(2).all(|w| w[1].delta_tv <= w[0].delta_tv + 1e-9);
    Ok(StabilityReport { learner: learner.descriptor(), m: cfg.m, ladder, monotone })
}
