//! Information-bottleneck solver for finite joints.
//!
//! Solves the Lagrangian form max β·I(Y;Z) − I(X;Z) with the self-consistent
//! iterations
//!
//! ```text
//! p(z|x) ∝ p(z) · exp(−β · KL(p(y|x) ‖ p(y|z)))
//! ```
//!
//! A β sweep traces the frontier I(Y;Z) as a function of I(X;Z).

use rand::Rng;
use serde::Serialize;

use crate::bounds::{thm1_bound, type2_bound};
use crate::dist::{CondDist, JointXY};
use crate::error::{Error, Result};
use crate::info::{mi_of_table, tv_rows};
use crate::rng::{derive_seed_path, rng_from_seed};

/// Default convergence threshold (conditional TV between iterates).
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 5_000;

/// Largest grid the suboptimality certificate will enumerate.
const GRID_BUDGET: usize = 200_000;

/// Alignment tolerance between true and estimated frontiers, in bits.
pub const ALIGN_SLACK: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IBSolution {
    #[serde(skip)]
    pub channel: CondDist,
    pub beta: f64,
    pub i_xz: f64,
    pub i_yz: f64,
    /// β·I(Y;Z) − I(X;Z) in bits.
    pub objective: f64,
    /// Estimated suboptimality in I(Y;Z) bits.
    pub certificate: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// I(X;Z) and I(Y;Z) of `channel` applied to `joint`, in bits.
pub fn channel_information(joint: &JointXY, channel: &CondDist) -> (f64, f64) {
    let (nx, ny, nz) = (joint.x_card(), joint.y_card(), channel.n_cols());
    let p_x = joint.x_marginal_vec();
    let mut p_xz = vec![0.0; nx * nz];
    let mut p_yz = vec![0.0; ny * nz];
    for x in 0..nx {
        let row = channel.row(x);
        for (z, &q) in row.iter().enumerate() {
            p_xz[x * nz + z] = p_x[x] * q;
        }
        for y in 0..ny {
            let pxy = joint.get(x, y);
            if pxy == 0.0 {
                continue;
            }
            for (z, &q) in row.iter().enumerate() {
                p_yz[y * nz + z] += pxy * q;
            }
        }
    }
    (mi_of_table(&p_xz, nx, nz), mi_of_table(&p_yz, ny, nz))
}

fn lagrangian(beta: f64, i_xz: f64, i_yz: f64) -> f64 {
    beta * i_yz - i_xz
}

fn random_channel(rows: usize, cols: usize, seed: u64) -> CondDist {
    let mut rng = rng_from_seed(seed);
    let weights: Vec<f64> = (0..rows * cols)
        .map(|_| 0.05 + rng.random::<f64>())
        .collect();
    CondDist::from_weight_rows(rows, cols, &weights).expect("positive weights")
}

fn conditional_tv(p_x: &[f64], a: &CondDist, b: &CondDist) -> f64 {
    p_x.iter()
        .zip(a.rows_iter().zip(b.rows_iter()))
        .map(|(w, (r, s))| w * tv_rows(r, s))
        .sum()
}

/// One self-consistent update of the channel.
fn update(joint: &JointXY, cond_y: &CondDist, p_x: &[f64], channel: &CondDist, beta: f64) -> CondDist {
    let (nx, ny, nz) = (joint.x_card(), joint.y_card(), channel.n_cols());
    let mut p_z = vec![0.0; nz];
    for x in 0..nx {
        for (z, &q) in channel.row(x).iter().enumerate() {
            p_z[z] += p_x[x] * q;
        }
    }
    // p(y|z) = Σ_x p(x,y) p(z|x) / p(z)
    let mut p_yz = vec![0.0; nz * ny];
    for x in 0..nx {
        for (z, &q) in channel.row(x).iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            for y in 0..ny {
                p_yz[z * ny + y] += joint.get(x, y) * q;
            }
        }
    }
    for z in 0..nz {
        if p_z[z] > 0.0 {
            for y in 0..ny {
                p_yz[z * ny + y] /= p_z[z];
            }
        }
    }

    let mut data = Vec::with_capacity(nx * nz);
    let mut logits = vec![f64::NEG_INFINITY; nz];
    for x in 0..nx {
        let py = cond_y.row(x);
        for z in 0..nz {
            logits[z] = if p_z[z] > 0.0 {
                let mut kl = 0.0;
                for y in 0..ny {
                    let a = py[y];
                    if a > 0.0 {
                        let b = p_yz[z * ny + y];
                        kl += if b > 0.0 { a * (a / b).ln() } else { f64::INFINITY };
                    }
                }
                if kl.is_infinite() {
                    f64::NEG_INFINITY
                } else if beta == 0.0 {
                    p_z[z].ln()
                } else {
                    p_z[z].ln() - beta * kl
                }
            } else {
                f64::NEG_INFINITY
            };
        }
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            // every cluster is incompatible with this x; keep the old row
            data.extend_from_slice(channel.row(x));
            continue;
        }
        let norm: f64 = logits.iter().map(|l| (l - top).exp()).sum();
        data.extend(logits.iter().map(|l| (l - top).exp() / norm));
    }
    CondDist::from_weight_rows(nx, nz, &data).expect("update produces valid rows")
}

/// Compositions of `n` into `parts` non-negative integers.
fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Best Lagrangian over a regular grid of channels, when small enough.
///
/// Returns `(objective, i_xz, i_yz)` of the best grid channel, or `None`
/// when the grid would exceed the enumeration budget.
pub fn grid_search_best(joint: &JointXY, beta: f64, z_card: usize) -> Option<(f64, f64, f64)> {
    let nx = joint.x_card();
    if z_card == 1 {
        return Some((0.0, 0.0, 0.0));
    }
    let resolution = [100usize, 50, 20].into_iter().find(|&n| {
        binomial(n + z_card - 1, z_card - 1)
            .checked_pow(nx as u32)
            .is_some_and(|c| c <= GRID_BUDGET)
    })?;
    let rows: Vec<Vec<f64>> = compositions(resolution, z_card)
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / resolution as f64).collect())
        .collect();
    let mut idx = vec![0usize; nx];
    let mut best: Option<(f64, f64, f64)> = None;
    let mut flat = vec![0.0; nx * z_card];
    loop {
        for (x, &i) in idx.iter().enumerate() {
            flat[x * z_card..(x + 1) * z_card].copy_from_slice(&rows[i]);
        }
        let ch = CondDist::from_flat(nx, z_card, flat.clone()).expect("grid rows sum to one");
        let (i_xz, i_yz) = channel_information(joint, &ch);
        let obj = lagrangian(beta, i_xz, i_yz);
        if best.is_none_or(|b| obj > b.0) {
            best = Some((obj, i_xz, i_yz));
        }
        // odometer increment
        let mut d = 0;
        loop {
            if d == nx {
                return best;
            }
            idx[d] += 1;
            if idx[d] < rows.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

fn certificate_from_gap(beta: f64, gap: f64) -> f64 {
    let gap = gap.max(0.0);
    if beta > 0.0 {
        gap / beta
    } else {
        gap
    }
}

fn solve_inner(
    joint: &JointXY,
    cond_y: &CondDist,
    beta: f64,
    z_card: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> IBSolution {
    let init = random_channel(joint.x_card(), z_card, seed);
    solve_from(joint, cond_y, beta, init, tol, max_iter)
}

fn solve_from(
    joint: &JointXY,
    cond_y: &CondDist,
    beta: f64,
    init: CondDist,
    tol: f64,
    max_iter: usize,
) -> IBSolution {
    let p_x = joint.x_marginal_vec();
    let mut channel = init;
    let (mut i_xz, mut i_yz) = channel_information(joint, &channel);
    let mut best = IBSolution {
        channel: channel.clone(),
        beta,
        i_xz,
        i_yz,
        objective: lagrangian(beta, i_xz, i_yz),
        certificate: f64::NAN,
        converged: false,
        iterations: 0,
    };
    let mut prev_obj = best.objective;
    let mut last_delta = f64::INFINITY;
    for it in 1..=max_iter {
        let next = update(joint, cond_y, &p_x, &channel, beta);
        let step = conditional_tv(&p_x, &channel, &next);
        channel = next;
        (i_xz, i_yz) = channel_information(joint, &channel);
        let obj = lagrangian(beta, i_xz, i_yz);
        last_delta = (obj - prev_obj).abs();
        prev_obj = obj;
        if obj >= best.objective || step < tol {
            best = IBSolution {
                channel: channel.clone(),
                beta,
                i_xz,
                i_yz,
                objective: obj,
                certificate: f64::NAN,
                converged: false,
                iterations: it,
            };
        }
        if step < tol {
            best.converged = true;
            break;
        }
    }
    best.certificate = certificate_from_gap(beta, last_delta);
    best
}

fn attach_grid_certificate(joint: &JointXY, sol: &mut IBSolution) {
    if let Some((grid_obj, _, _)) = grid_search_best(joint, sol.beta, sol.channel.n_cols()) {
        sol.certificate = certificate_from_gap(sol.beta, grid_obj - sol.objective);
    }
}

fn check_inputs(joint: &JointXY, beta: f64, z_card: usize) -> Result<CondDist> {
    if z_card == 0 {
        return Err(Error::DomainError("z_card must be >= 1".into()));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::DomainError(format!("beta = {beta} must be finite and >= 0")));
    }
    joint.conditional()
}

/// Solves one Lagrangian IB problem from a random start.
///
/// Runs until successive channels differ by less than `tol` in conditional
/// total variation. If `max_iter` is reached first, the best iterate is
/// returned with `converged = false`.
pub fn ib_solve(
    joint: &JointXY,
    beta: f64,
    z_card: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<IBSolution> {
    let cond_y = check_inputs(joint, beta, z_card)?;
    let mut sol = solve_inner(joint, &cond_y, beta, z_card, tol, max_iter, seed);
    attach_grid_certificate(joint, &mut sol);
    Ok(sol)
}

/// Highest-objective candidate of `pool` at `beta`.
fn pick(pool: &[IBSolution], beta: f64) -> IBSolution {
    let mut best = pool
        .iter()
        .max_by(|a, b| {
            lagrangian(beta, a.i_xz, a.i_yz).total_cmp(&lagrangian(beta, b.i_xz, b.i_yz))
        })
        .expect("non-empty pool")
        .clone();
    best.objective = lagrangian(beta, best.i_xz, best.i_yz);
    best.beta = beta;
    best
}

/// Best solution for each β, sorted by I(X;Z).
///
/// Candidates are random restarts plus warm starts from the other β's
/// solutions; each β keeps whichever candidate scores highest under its own
/// objective.
pub fn ib_curve(
    joint: &JointXY,
    beta_grid: &[f64],
    z_card: usize,
    restarts: usize,
    seed: u64,
) -> Result<Vec<IBSolution>> {
    if beta_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::DomainError("beta grid must be sorted ascending".into()));
    }
    let restarts = restarts.max(1);
    let mut pool: Vec<IBSolution> = Vec::new();
    for (bi, &beta) in beta_grid.iter().enumerate() {
        let cond_y = check_inputs(joint, beta, z_card)?;
        for r in 0..restarts {
            let s = derive_seed_path(seed, &[bi as u64, r as u64]);
            pool.push(solve_inner(joint, &cond_y, beta, z_card, DEFAULT_TOL, DEFAULT_MAX_ITER, s));
        }
    }
    // warm starts from every other β's best restart
    let firsts: Vec<CondDist> = beta_grid
        .iter()
        .enumerate()
        .map(|(bi, &beta)| pick(&pool[bi * restarts..(bi + 1) * restarts], beta).channel)
        .collect();
    for (bi, &beta) in beta_grid.iter().enumerate() {
        let cond_y = joint.conditional()?;
        for (bj, init) in firsts.iter().enumerate() {
            if bj != bi {
                pool.push(solve_from(joint, &cond_y, beta, init.clone(), DEFAULT_TOL, DEFAULT_MAX_ITER));
            }
        }
    }
    let mut out = Vec::with_capacity(beta_grid.len());
    for &beta in beta_grid {
        let mut best = pick(&pool, beta);
        attach_grid_certificate(joint, &mut best);
        out.push(best);
    }
    out.sort_by(|a, b| a.i_xz.total_cmp(&b.i_xz).then(a.beta.total_cmp(&b.beta)));
    Ok(out)
}

/// One aligned pair of frontier points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Type2Point {
    pub beta_true: f64,
    pub beta_est: f64,
    pub i_xz: f64,
    pub i_xz_est: f64,
    /// I(Y;Z*) under the true joint.
    pub i_yz_star: f64,
    /// I(Y;Ẑ) with the estimated-model channel applied to the true joint.
    pub i_yz_hat: f64,
    pub loss2: f64,
    pub delta_bar: f64,
    /// Suboptimality certificate of the estimated-model solution.
    pub eps_solver: f64,
}

impl Type2Point {
    /// 2·(δ̄·I + h₂(δ̄)) + ε, using the larger I(X;Z) of the pair.
    pub fn frontier_bound(&self) -> Result<f64> {
        let k = thm1_bound(self.delta_bar, self.i_xz.max(self.i_xz_est).max(0.0))?;
        type2_bound(k, self.eps_solver.max(0.0))
    }
}

/// Measures I(Y;Z*) − I(Y;Ẑ) along the frontier.
///
/// Both frontiers are traced with the same seeds; each true point is paired
/// with the estimated point of nearest I(X;Z), and pairs further apart than
/// [`ALIGN_SLACK`] are dropped.
pub fn type2_loss_measured(
    joint: &JointXY,
    est: &CondDist,
    beta_grid: &[f64],
    z_card: usize,
    restarts: usize,
    seed: u64,
) -> Result<Vec<Type2Point>> {
    let p_x = joint.x_marginal();
    let truth = joint.conditional()?;
    if est.n_rows() != joint.x_card() || est.n_cols() != joint.y_card() {
        return Err(Error::ShapeMismatch(format!(
            "estimate is {}x{}, joint is {}x{}",
            est.n_rows(),
            est.n_cols(),
            joint.x_card(),
            joint.y_card()
        )));
    }
    let est_joint = JointXY::from_parts(&p_x, est)?;
    let delta_bar = crate::info::conditional_total_variation(&p_x, &truth, est)?;

    let star = ib_curve(joint, beta_grid, z_card, restarts, seed)?;
    let hat = ib_curve(&est_joint, beta_grid, z_card, restarts, seed)?;

    let mut out = Vec::new();
    for s in &star {
        let Some(h) = hat
            .iter()
            .min_by(|a, b| (a.i_xz - s.i_xz).abs().total_cmp(&(b.i_xz - s.i_xz).abs()))
        else {
            continue;
        };
        if (h.i_xz - s.i_xz).abs() > ALIGN_SLACK {
            continue;
        }
        let (_, i_yz_hat) = channel_information(joint, &h.channel);
        out.push(Type2Point {
            beta_true: s.beta,
            beta_est: h.beta,
            i_xz: s.i_xz,
            i_xz_est: h.i_xz,
            i_yz_star: s.i_yz,
            i_yz_hat,
            loss2: s.i_yz - i_yz_hat,
            delta_bar,
            eps_solver: h.certificate,
        });
    }
    if out.is_empty() {
        return Err(Error::CurveMismatch { slack: ALIGN_SLACK });
    }
    Ok(out)
}
