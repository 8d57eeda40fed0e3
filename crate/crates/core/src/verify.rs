//! Brute-force numeric oracles and randomized suites.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::thm1_bound;
use crate::coupling::{build_coupling, overlap, verify_coupling};
use crate::dist::{CondDist, FiniteDist, FullModel};
use crate::error::{Error, Result};
use crate::info::{conditional_total_variation, model_info};
use crate::rng::{derive_seed, rng_from_seed};

pub const GIBBS_EQ_TOL: f64 = 1e-10;
pub const GIBBS_MIN_TOL: f64 = 1e-12;
pub const JENSEN_TOL: f64 = 1e-12;
pub const THM1_SLACK: f64 = 1e-9;
pub const SEARCH_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub pass: bool,
    pub instance: String,
}

// ---------------------------------------------------------------- sampling

/// Random probability vector; `spiky` concentrates mass on few symbols.
pub fn random_probs(rng: &mut ChaCha8Rng, n: usize, spiky: bool) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            if spiky {
                u.powi(8)
            } else {
                -(1.0 - u).ln()
            }
        })
        .collect();
    if spiky && rng.random_bool(0.3) {
        // exact point mass
        let k = rng.random_range(0..n);
        w.iter_mut().enumerate().for_each(|(i, v)| *v = if i == k { 1.0 } else { 0.0 });
    }
    let s: f64 = w.iter().sum();
    if s <= 0.0 {
        return vec![1.0 / n as f64; n];
    }
    w.iter().map(|v| v / s).collect()
}

/// Random conditional with `rows` rows over `cols` symbols.
pub fn random_cond(rng: &mut ChaCha8Rng, rows: usize, cols: usize, spiky: bool) -> CondDist {
    let data: Vec<f64> = (0..rows).flat_map(|_| random_probs(rng, cols, spiky)).collect();
    CondDist::from_weight_rows(rows, cols, &data).expect("valid rows")
}

/// Random full-support p(x).
pub fn random_px(rng: &mut ChaCha8Rng, n: usize) -> FiniteDist {
    let mut w = random_probs(rng, n, false);
    w.iter_mut().for_each(|v| *v = v.max(1e-3));
    FiniteDist::from_weights(&w).expect("positive weights")
}

/// Random model with alphabets in 1..=max_card (|𝒴| ≥ 2) plus a random
/// estimate of p(y|x).
pub fn random_model_pair(seed: u64, max_card: usize, spiky: bool) -> (FullModel, CondDist) {
    let mut rng = rng_from_seed(seed);
    let nx = rng.random_range(1..=max_card);
    let ny = rng.random_range(2..=max_card.max(2));
    let nz = rng.random_range(1..=max_card);
    let p_x = random_px(&mut rng, nx);
    let p = random_cond(&mut rng, nx, ny, spiky);
    let ch = random_cond(&mut rng, nx, nz, spiky);
    let q = random_cond(&mut rng, nx, ny, spiky);
    (FullModel::new(p_x, p, ch).expect("valid model"), q)
}

// ----------------------------------------------------------- gibbs oracle

fn gibbs_objective(w: &[f64], h: &[f64], g: &[f64]) -> f64 {
    w.iter()
        .zip(h.iter().zip(g))
        .filter(|(&wi, _)| wi > 0.0)
        .map(|(wi, (hi, gi))| if *gi > 0.0 { wi * gi * (hi + gi.ln()) } else { 0.0 })
        .sum()
}

/// Checks inf_g E[g(h + ln g)] = −ln E[e^{−h}] over densities g with E[g] = 1.
///
/// The minimiser g* = e^{−h−1}/E[e^{−h−1}] is evaluated directly and then
/// challenged by `grid_steps` random feasible densities.
pub fn gibbs_variational_oracle(weights: &FiniteDist, h: &[f64], grid_steps: usize, seed: u64) -> Result<OracleReport> {
    let w = weights.probs();
    if h.len() != w.len() {
        return Err(Error::ShapeMismatch(format!("{} weights, {} h values", w.len(), h.len())));
    }
    if let Some(i) = h.iter().position(|v| !v.is_finite()) {
        return Err(Error::DomainError(format!("h[{i}] = {} is not finite", h[i])));
    }
    let big_w: f64 = w.iter().zip(h).map(|(wi, hi)| wi * (-hi - 1.0).exp()).sum();
    let g_star: Vec<f64> = h.iter().map(|hi| (-hi - 1.0).exp() / big_w).collect();
    let lhs = gibbs_objective(w, h, &g_star);
    let rhs = -w.iter().zip(h).map(|(wi, hi)| wi * (-hi).exp()).sum::<f64>().ln();
    let gap = (lhs - rhs).abs();

    let mut rng = rng_from_seed(seed);
    let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    let mut worst_improvement = f64::NEG_INFINITY;
    for step in 0..grid_steps {
        let g: Vec<f64> = if step % 2 == 0 {
            // local: g* (1 + t d) with E[g* d] = 0
            let mut d: Vec<f64> = (0..w.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mean: f64 = support.iter().map(|&i| w[i] * g_star[i] * d[i]).sum();
            d.iter_mut().for_each(|v| *v -= mean);
            let t = 10f64.powf(rng.random_range(-6.0..-0.5));
            let max_neg = d.iter().cloned().fold(0.0f64, |a, v| a.max(-v));
            let t = if max_neg * t >= 1.0 { 0.5 / max_neg } else { t };
            g_star.iter().zip(&d).map(|(g, di)| g * (1.0 + t * di)).collect()
        } else {
            // global: arbitrary density against the weights
            let p = random_probs(&mut rng, w.len(), step % 4 == 1);
            (0..w.len()).map(|i| if w[i] > 0.0 { p[i] / w[i] } else { 0.0 }).collect()
        };
        let norm: f64 = support.iter().map(|&i| w[i] * g[i]).sum();
        if norm <= 0.0 {
            continue;
        }
        let g: Vec<f64> = g.iter().map(|v| v / norm).collect();
        let improvement = lhs - gibbs_objective(w, h, &g);
        worst_improvement = worst_improvement.max(improvement);
    }
    let pass = gap < GIBBS_EQ_TOL && worst_improvement <= GIBBS_MIN_TOL;
    Ok(OracleReport {
        name: "gibbs_variational".into(),
        lhs,
        rhs,
        gap,
        pass,
        instance: format!("w={w:?} h={h:?} best_perturbation_gain={worst_improvement:e}"),
    })
}

// ---------------------------------------------------------- jensen oracle

/// Checks ln E[e^{−2f²}] ≤ −2 E[f]² for f with values in [0, 1].
pub fn jensen_sharpen_oracle(weights: &FiniteDist, f: &[f64]) -> Result<OracleReport> {
    let w = weights.probs();
    if f.len() != w.len() {
        return Err(Error::ShapeMismatch(format!("{} weights, {} f values", w.len(), f.len())));
    }
    if let Some(i) = f.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::DomainError(format!("f[{i}] = {} outside [0, 1]", f[i])));
    }
    let lhs = w.iter().zip(f).map(|(wi, fi)| wi * (-2.0 * fi * fi).exp()).sum::<f64>().ln();
    let mean: f64 = w.iter().zip(f).map(|(wi, fi)| wi * fi).sum();
    let rhs = -2.0 * mean * mean;
    Ok(OracleReport {
        name: "jensen_sharpen".into(),
        lhs,
        rhs,
        gap: lhs - rhs,
        pass: lhs <= rhs + JENSEN_TOL,
        instance: format!("w={w:?} f={f:?}"),
    })
}

// ---------------------------------------------------------------- suites

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub instances: usize,
    pub violations: usize,
    pub pass: bool,
    /// Instance with the largest gap (or a violation, if any).
    pub worst: Option<OracleReport>,
    pub median_gap: f64,
}

fn summarize(name: &str, reports: Vec<OracleReport>) -> SuiteReport {
    let violations = reports.iter().filter(|r| !r.pass).count();
    let mut gaps: Vec<f64> = reports.iter().map(|r| r.gap).collect();
    gaps.sort_by(f64::total_cmp);
    let median_gap = gaps.get(gaps.len() / 2).copied().unwrap_or(0.0);
    let worst = reports
        .iter()
        .filter(|r| !r.pass)
        .max_by(|a, b| a.gap.total_cmp(&b.gap))
        .or_else(|| reports.iter().max_by(|a, b| a.gap.total_cmp(&b.gap)))
        .cloned();
    SuiteReport {
        name: name.into(),
        instances: reports.len(),
        violations,
        pass: violations == 0,
        worst,
        median_gap,
    }
}

pub fn gibbs_suite(instances: usize, grid_steps: usize, seed: u64) -> Result<SuiteReport> {
    let reports = (0..instances)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i as u64);
            let mut rng = rng_from_seed(s);
            let n = rng.random_range(1..=8);
            let w = FiniteDist::new(random_probs(&mut rng, n, i % 5 == 0))?;
            let h: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            gibbs_variational_oracle(&w, &h, grid_steps, s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize("gibbs_variational", reports))
}

pub fn jensen_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let reports = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let n = rng.random_range(1..=8);
            let w = FiniteDist::new(random_probs(&mut rng, n, i % 3 == 0))?;
            let f: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            jensen_sharpen_oracle(&w, &f)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize("jensen_sharpen", reports))
}

// ------------------------------------------------------- type-1 loss sweep

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Thm1Summary {
    pub instances: usize,
    pub violations: usize,
    pub tightest_ratio: f64,
    pub tightest_instance: String,
}

fn thm1_instance(seed: u64, max_card: usize, spiky: bool) -> Result<(f64, String)> {
    let (model, q) = random_model_pair(seed, max_card, spiky);
    let truth = model_info(&model);
    let est = model_info(&model.with_label_conditional(q.clone())?);
    let delta = conditional_total_variation(&model.p_x, &model.p_y_given_x, &q)?;
    let loss = (truth.i_yz - est.i_yz).abs();
    let bound = thm1_bound(delta.clamp(0.0, 1.0), truth.i_xz.max(0.0))?;
    let desc = format!(
        "seed={seed} spiky={spiky} |X|={} |Y|={} |Z|={} loss={loss:e} bound={bound:e}",
        model.x_card(),
        model.y_card(),
        model.z_card()
    );
    if loss > bound + THM1_SLACK {
        return Err(Error::CounterexampleFound(desc));
    }
    let ratio = if bound > 0.0 { loss / bound } else { 0.0 };
    Ok((ratio, desc))
}

/// Random models and estimates, half of them near-deterministic; any
/// violation of the type-1 loss inequality is returned as an error.
pub fn thm1_exhaustive(seeds: usize, max_card: usize) -> Result<Thm1Summary> {
    if !(1..=8).contains(&max_card) {
        return Err(Error::DomainError(format!("max_card = {max_card} must be in 1..=8")));
    }
    let results = (0..seeds)
        .into_par_iter()
        .map(|i| thm1_instance(derive_seed(0x7431, i as u64), max_card, i % 2 == 1))
        .collect::<Result<Vec<_>>>()?;
    let (tightest_ratio, tightest_instance) = results
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or((0.0, String::new()));
    Ok(Thm1Summary { instances: seeds, violations: 0, tightest_ratio, tightest_instance })
}

// ------------------------------------------------------ coupling search

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingSearchReport {
    /// 1 − Σ min(p, q).
    pub construction: f64,
    /// Smallest disagreement probability found among alternative couplings.
    pub best_alternative: f64,
    pub plans_tried: usize,
    pub pass: bool,
}

/// North-west-corner transport plan after permuting rows and columns.
fn corner_plan(p: &[f64], q: &[f64], rows: &[usize], cols: &[usize]) -> Vec<f64> {
    let n = p.len();
    let mut plan = vec![0.0; n * n];
    let mut a: Vec<f64> = p.to_vec();
    let mut b: Vec<f64> = q.to_vec();
    let (mut i, mut j) = (0, 0);
    while i < n && j < n {
        let (r, c) = (rows[i], cols[j]);
        let t = a[r].min(b[c]);
        plan[r * n + c] += t;
        a[r] -= t;
        b[c] -= t;
        if a[r] <= b[c] {
            i += 1;
        } else {
            j += 1;
        }
    }
    plan
}

fn disagreement(plan: &[f64], n: usize) -> f64 {
    1.0 - (0..n).map(|i| plan[i * n + i]).sum::<f64>()
}

/// Randomized search over couplings of (p, q) for the minimum P(Y ≠ Y').
///
/// Tries random vertex plans of the transport polytope and their random
/// mixtures; for |𝒴| = 2 the one-parameter family is also swept densely.
pub fn maximal_coupling_search(p: &FiniteDist, q: &FiniteDist, restarts: usize, seed: u64) -> Result<CouplingSearchReport> {
    let n = p.len();
    if n != q.len() {
        return Err(Error::ShapeMismatch(format!("|p| = {n}, |q| = {}", q.len())));
    }
    if n > 4 {
        return Err(Error::DomainError(format!("alphabet of size {n} exceeds 4")));
    }
    let construction = 1.0 - p.probs().iter().zip(q.probs()).map(|(a, b)| a.min(*b)).sum::<f64>();
    let mut rng = rng_from_seed(seed);
    let mut best = f64::INFINITY;
    let mut tried = 0;
    let mut rows: Vec<usize> = (0..n).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    let mut prev: Option<Vec<f64>> = None;
    for _ in 0..restarts.max(1) {
        rows.shuffle(&mut rng);
        cols.shuffle(&mut rng);
        let plan = corner_plan(p.probs(), q.probs(), &rows, &cols);
        best = best.min(disagreement(&plan, n));
        if let Some(old) = &prev {
            let t: f64 = rng.random();
            let mix: Vec<f64> = old.iter().zip(&plan).map(|(a, b)| t * a + (1.0 - t) * b).collect();
            best = best.min(disagreement(&mix, n));
            tried += 1;
        }
        prev = Some(plan);
        tried += 1;
    }
    if n == 2 {
        let (p0, q0) = (p[0], q[0]);
        let lo = (p0 + q0 - 1.0).max(0.0);
        let hi = p0.min(q0);
        let steps = 10_000;
        for k in 0..=steps {
            let a = lo + (hi - lo) * k as f64 / steps as f64;
            // plan [[a, p0−a], [q0−a, 1−p0−q0+a]]
            let d = 1.0 - a - (1.0 - p0 - q0 + a);
            best = best.min(d);
            tried += 1;
        }
    }
    Ok(CouplingSearchReport {
        construction,
        best_alternative: best,
        plans_tried: tried,
        pass: construction <= best + SEARCH_TOL,
    })
}

// ------------------------------------------------------------ aggregate

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyAllReport {
    pub suites: Vec<SuiteReport>,
    pub thm1: Option<Thm1Summary>,
    pub thm1_error: Option<String>,
    pub coupling_checks: SuiteReport,
    pub coupling_search: SuiteReport,
    pub passed: bool,
}

/// Runs every oracle suite with fixed seeds; `seeds` sizes the type-1 loss sweep,
/// coupling and Gibbs suites.
pub fn verify_all(seeds: usize) -> Result<VerifyAllReport> {
    let gibbs = gibbs_suite(seeds, 200, 0x61bb5)?;
    let jensen = jensen_suite(100_000, 0x1e75e)?;
    let (thm1, thm1_error) = match thm1_exhaustive(seeds, 8) {
        Ok(s) => (Some(s), None),
        Err(e @ Error::CounterexampleFound(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };

    let coupling_reports = (0..seeds)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(0xc0c0, i as u64));
            let nx = rng.random_range(1..=6);
            let ny = rng.random_range(2..=6);
            let p_x = random_px(&mut rng, nx);
            let p = random_cond(&mut rng, nx, ny, i % 2 == 1);
            let q = random_cond(&mut rng, nx, ny, i % 3 == 1);
            let c = build_coupling(&p_x, &p, &q)?;
            let rep = verify_coupling(&c, &p_x, &p, &q);
            let worst = rep.checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
            Ok(OracleReport {
                name: "coupling_checks".into(),
                lhs: 1.0 - rep.rho,
                rhs: rep.delta_bar,
                gap: worst,
                pass: rep.passed,
                instance: format!("index={i} |X|={nx} |Y|={ny}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let search_reports = (0..seeds.min(1000))
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(0x5ea7c, i as u64);
            let mut rng = rng_from_seed(s);
            let ny = rng.random_range(2..=3);
            let nx = rng.random_range(1..=2);
            let p_x = random_px(&mut rng, nx);
            let p = random_cond(&mut rng, p_x.len(), ny, false);
            let q = random_cond(&mut rng, p_x.len(), ny, false);
            let ov = overlap(&p, &q)?;
            let mut worst = OracleReport {
                name: "coupling_search".into(),
                lhs: 0.0,
                rhs: 0.0,
                gap: f64::NEG_INFINITY,
                pass: true,
                instance: format!("index={i}"),
            };
            for x in 0..p_x.len() {
                let px = FiniteDist::new(p.row(x).to_vec())?;
                let qx = FiniteDist::new(q.row(x).to_vec())?;
                let r = maximal_coupling_search(&px, &qx, 200, derive_seed(s, x as u64))?;
                let row_overlap: f64 = ov.row(x).iter().sum();
                let gap = r.construction - r.best_alternative;
                if gap > worst.gap {
                    worst.lhs = r.construction;
                    worst.rhs = r.best_alternative;
                    worst.gap = gap;
                }
                worst.pass &= r.pass && ((1.0 - row_overlap) - r.construction).abs() < 1e-12;
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;

    let coupling_checks = summarize("coupling_checks", coupling_reports);
    let coupling_search = summarize("coupling_search", search_reports);
    let suites = vec![gibbs, jensen];
    let passed = suites.iter().all(|s| s.pass)
        && thm1_error.is_none()
        && coupling_checks.pass
        && coupling_search.pass;
    Ok(VerifyAllReport { suites, thm1, thm1_error, coupling_checks, coupling_search, passed })
}
