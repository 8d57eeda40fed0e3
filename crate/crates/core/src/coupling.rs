//! Conditional maximal coupling of a true and an estimated model that share
//! p(x) (and later p(z|x)) but differ in the label conditional.
//!
//! With probability ρ = Σ_x p(x) Σ_y min(p(y|x), q(y|x)) both copies take the
//! same draw from the overlap U. Otherwise the true copy draws from the
//! residual V and the estimated copy from the residual W. V and W have the
//! same x-marginal p(x)·δ(x)/(1 − ρ), so the two residual draws share their
//! x-coordinate and only the labels are drawn independently. The labels then
//! always disagree off the overlap, which makes P(Ỹ ≠ Ŷ) = 1 − ρ = δ̄.

use serde::Serialize;

use crate::dist::{CondDist, FiniteDist, JointXY};
use crate::error::{Error, Result};
use crate::info::conditional_total_variation;

/// Tolerance for the coupling identities.
pub const COUPLING_TOL: f64 = 1e-12;

/// Rounding allowance when subtracting the overlap from a joint entry.
const RESIDUAL_CLAMP: f64 = 1e-15;

/// ρ or 1 − ρ at or below this is treated as exactly zero.
const DEGENERATE_MASS: f64 = 1e-14;

/// Entrywise min(p(y|x), q(y|x)).
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapTable {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl OverlapTable {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.cols..(x + 1) * self.cols]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }
}

pub fn overlap(p: &CondDist, q: &CondDist) -> Result<OverlapTable> {
    if p.n_rows() != q.n_rows() || p.n_cols() != q.n_cols() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            p.n_rows(),
            p.n_cols(),
            q.n_rows(),
            q.n_cols()
        )));
    }
    Ok(OverlapTable {
        rows: p.n_rows(),
        cols: p.n_cols(),
        data: p
            .as_flat()
            .iter()
            .zip(q.as_flat())
            .map(|(a, b)| a.min(*b))
            .collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    None,
    /// ρ = 1: the residuals V and W do not exist and J ≡ 1.
    Identical,
    /// ρ = 0: the overlap U does not exist and J ≡ 0.
    Disjoint,
}

/// Dense joint over (J, X̃, Ỹ, X̂, Ŷ).
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTable {
    x_card: usize,
    y_card: usize,
    data: Vec<f64>,
}

impl CouplingTable {
    fn zeros(x_card: usize, y_card: usize) -> Self {
        Self {
            x_card,
            y_card,
            data: vec![0.0; 2 * x_card * y_card * x_card * y_card],
        }
    }

    #[inline]
    fn index(&self, j: usize, x1: usize, y1: usize, x2: usize, y2: usize) -> usize {
        let (nx, ny) = (self.x_card, self.y_card);
        (((j * nx + x1) * ny + y1) * nx + x2) * ny + y2
    }

    #[inline]
    pub fn get(&self, j: usize, x1: usize, y1: usize, x2: usize, y2: usize) -> f64 {
        self.data[self.index(j, x1, y1, x2, y2)]
    }

    #[inline]
    pub fn set(&mut self, j: usize, x1: usize, y1: usize, x2: usize, y2: usize, value: f64) {
        let i = self.index(j, x1, y1, x2, y2);
        self.data[i] = value;
    }

    pub fn x_card(&self) -> usize {
        self.x_card
    }

    pub fn y_card(&self) -> usize {
        self.y_card
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Visits every cell as `(j, x̃, ỹ, x̂, ŷ, mass)`.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, usize, usize, usize, f64)> + '_ {
        let (nx, ny) = (self.x_card, self.y_card);
        self.data.iter().enumerate().map(move |(i, &p)| {
            let y2 = i % ny;
            let x2 = (i / ny) % nx;
            let y1 = (i / (ny * nx)) % ny;
            let x1 = (i / (ny * nx * ny)) % nx;
            let j = i / (ny * nx * ny * nx);
            (j, x1, y1, x2, y2, p)
        })
    }

    /// Marginal of (X̃, Ỹ), row-major.
    pub fn true_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.x_card * self.y_card];
        for (_, x1, y1, _, _, p) in self.cells() {
            out[x1 * self.y_card + y1] += p;
        }
        out
    }

    /// Marginal of (X̂, Ŷ), row-major.
    pub fn estimated_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.x_card * self.y_card];
        for (_, _, _, x2, y2, p) in self.cells() {
            out[x2 * self.y_card + y2] += p;
        }
        out
    }

    /// γ(Ỹ ≠ Ŷ).
    pub fn disagreement(&self) -> f64 {
        self.cells()
            .filter(|&(_, _, y1, _, y2, _)| y1 != y2)
            .map(|c| c.5)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingResult {
    pub rho: f64,
    pub overlap: OverlapTable,
    /// Overlap component; absent when ρ = 0.
    pub u: Option<JointXY>,
    /// Residual of the true joint; absent when ρ = 1.
    pub v: Option<JointXY>,
    /// Residual of the estimated joint; absent when ρ = 1.
    pub w: Option<JointXY>,
    pub gamma: CouplingTable,
    pub degeneracy: Degeneracy,
}

impl CouplingResult {
    /// δ̄ as read off the coupling.
    pub fn delta_bar(&self) -> f64 {
        1.0 - self.rho
    }
}

fn residual(
    p_x: &FiniteDist,
    cond: &CondDist,
    overlap: &OverlapTable,
) -> Result<Vec<f64>> {
    let (nx, ny) = (cond.n_rows(), cond.n_cols());
    let mut out = Vec::with_capacity(nx * ny);
    for x in 0..nx {
        for y in 0..ny {
            let r = p_x[x] * cond.get(x, y) - p_x[x] * overlap.get(x, y);
            if r < -RESIDUAL_CLAMP {
                return Err(Error::NegativeResidual { x, y, value: r });
            }
            out.push(r.max(0.0));
        }
    }
    Ok(out)
}

fn normalized_joint(x_card: usize, y_card: usize, mass: &[f64]) -> Result<JointXY> {
    let total: f64 = mass.iter().sum();
    JointXY::from_flat(x_card, y_card, mass.iter().map(|m| m / total).collect())
}

/// Builds the conditional maximal coupling of p(x)p(y|x) and p(x)q(y|x).
pub fn build_coupling(p_x: &FiniteDist, p: &CondDist, q: &CondDist) -> Result<CouplingResult> {
    let ov = overlap(p, q)?;
    if p_x.len() != p.n_rows() {
        return Err(Error::ShapeMismatch(format!(
            "p_x has {} symbols, conditionals have {} rows",
            p_x.len(),
            p.n_rows()
        )));
    }
    let (nx, ny) = (p.n_rows(), p.n_cols());

    let overlap_mass: Vec<f64> = (0..nx)
        .flat_map(|x| ov.row(x).iter().map(move |m| p_x[x] * m))
        .collect();
    let rho: f64 = overlap_mass.iter().sum();
    let res_p = residual(p_x, p, &ov)?;
    let res_q = residual(p_x, q, &ov)?;
    let res_total: f64 = res_p.iter().sum();

    let degeneracy = if res_total <= DEGENERATE_MASS {
        Degeneracy::Identical
    } else if rho <= DEGENERATE_MASS {
        Degeneracy::Disjoint
    } else {
        Degeneracy::None
    };

    let u = match degeneracy {
        Degeneracy::Disjoint => None,
        _ => Some(normalized_joint(nx, ny, &overlap_mass)?),
    };
    let (v, w) = match degeneracy {
        Degeneracy::Identical => (None, None),
        _ => (
            Some(normalized_joint(nx, ny, &res_p)?),
            Some(normalized_joint(nx, ny, &res_q)?),
        ),
    };

    let mut gamma = CouplingTable::zeros(nx, ny);
    if let Some(u) = &u {
        for x in 0..nx {
            for y in 0..ny {
                gamma.set(1, x, y, x, y, rho * u.get(x, y));
            }
        }
    }
    if let (Some(v), Some(w)) = (&v, &w) {
        let one_minus_rho = 1.0 - rho;
        let w_x = w.x_marginal_vec();
        for x in 0..nx {
            if w_x[x] <= 0.0 {
                continue;
            }
            for y1 in 0..ny {
                let vy = v.get(x, y1);
                if vy == 0.0 {
                    continue;
                }
                for y2 in 0..ny {
                    let wy = w.get(x, y2) / w_x[x];
                    if wy > 0.0 {
                        gamma.set(0, x, y1, x, y2, one_minus_rho * vy * wy);
                    }
                }
            }
        }
    }

    Ok(CouplingResult {
        rho,
        overlap: ov,
        u,
        v,
        w,
        gamma,
        degeneracy,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckOutcome {
    fn new(name: &str, observed: f64, expected: f64, deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            observed,
            expected,
            deviation,
            tolerance,
            pass: deviation.is_finite() && deviation <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub rho: f64,
    pub delta_bar: f64,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn failures(&self) -> Vec<&CheckOutcome> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

fn max_abs_dev(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Checks both marginals, 1 − ρ = δ̄ and γ(Ỹ ≠ Ŷ) = 1 − ρ. Never panics;
/// shape problems surface as failed checks.
pub fn verify_coupling(
    c: &CouplingResult,
    p_x: &FiniteDist,
    p: &CondDist,
    q: &CondDist,
) -> VerificationReport {
    let tol = COUPLING_TOL;
    let mut checks = Vec::with_capacity(4);

    let true_joint = JointXY::from_parts(p_x, p).map(|j| j.as_flat().to_vec());
    let est_joint = JointXY::from_parts(p_x, q).map(|j| j.as_flat().to_vec());
    let gt = c.gamma.true_marginal();
    let ge = c.gamma.estimated_marginal();

    let dev_a = true_joint.map_or(f64::INFINITY, |j| max_abs_dev(&gt, &j));
    checks.push(CheckOutcome::new("true_marginal", dev_a, 0.0, dev_a, tol));
    let dev_b = est_joint.map_or(f64::INFINITY, |j| max_abs_dev(&ge, &j));
    checks.push(CheckOutcome::new("estimated_marginal", dev_b, 0.0, dev_b, tol));

    let tv = conditional_total_variation(p_x, p, q).unwrap_or(f64::NAN);
    let one_minus_rho = 1.0 - c.rho;
    checks.push(CheckOutcome::new(
        "rho_vs_total_variation",
        one_minus_rho,
        tv,
        (one_minus_rho - tv).abs(),
        tol,
    ));

    let dis = c.gamma.disagreement();
    checks.push(CheckOutcome::new(
        "disagreement",
        dis,
        one_minus_rho,
        (dis - one_minus_rho).abs(),
        tol,
    ));

    let passed = checks.iter().all(|c| c.pass);
    VerificationReport {
        rho: c.rho,
        delta_bar: tv,
        checks,
        passed,
    }
}

/// Joint over (J, X̃, Ỹ, Z̃, X̂, Ŷ, Ẑ) with Z̃ ~ channel(·|X̃) and
/// Ẑ ~ channel(·|X̂) drawn independently given the x-coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedCoupling {
    x_card: usize,
    y_card: usize,
    z_card: usize,
    data: Vec<f64>,
}

impl ExtendedCoupling {
    fn side(&self) -> usize {
        self.x_card * self.y_card * self.z_card
    }

    #[inline]
    fn side_index(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.y_card + y) * self.z_card + z
    }

    pub fn z_card(&self) -> usize {
        self.z_card
    }

    /// Visits every cell as `(j, (x̃, ỹ, z̃), (x̂, ŷ, ẑ), mass)`.
    pub fn cells(
        &self,
    ) -> impl Iterator<Item = (usize, (usize, usize, usize), (usize, usize, usize), f64)> + '_ {
        let s = self.side();
        let (ny, nz) = (self.y_card, self.z_card);
        let split = move |k: usize| (k / (ny * nz), (k / nz) % ny, k % nz);
        self.data.iter().enumerate().map(move |(i, &p)| {
            let j = i / (s * s);
            let a = (i / s) % s;
            let b = i % s;
            (j, split(a), split(b), p)
        })
    }

    /// Marginal of (X̃, Ỹ, Z̃) indexed `[x][y][z]`.
    pub fn true_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.side()];
        for (_, (x, y, z), _, p) in self.cells() {
            out[self.side_index(x, y, z)] += p;
        }
        out
    }

    /// Marginal of (X̂, Ŷ, Ẑ) indexed `[x][y][z]`.
    pub fn estimated_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.side()];
        for (_, _, (x, y, z), p) in self.cells() {
            out[self.side_index(x, y, z)] += p;
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// Attaches the shared channel p(z|x) to both sides of the coupling.
pub fn coupled_z_extension(c: &CouplingResult, channel: &CondDist) -> Result<ExtendedCoupling> {
    let (nx, ny) = (c.gamma.x_card(), c.gamma.y_card());
    if channel.n_rows() != nx {
        return Err(Error::ShapeMismatch(format!(
            "channel has {} rows, 𝒳 has {nx} symbols",
            channel.n_rows()
        )));
    }
    let nz = channel.n_cols();
    let mut ext = ExtendedCoupling {
        x_card: nx,
        y_card: ny,
        z_card: nz,
        data: vec![0.0; 2 * (nx * ny * nz).pow(2)],
    };
    let s = ext.side();
    for (j, x1, y1, x2, y2, g) in c.gamma.cells() {
        if g == 0.0 {
            continue;
        }
        for z1 in 0..nz {
            let a = g * channel.get(x1, z1);
            if a == 0.0 {
                continue;
            }
            let i1 = ext.side_index(x1, y1, z1);
            for z2 in 0..nz {
                let i2 = ext.side_index(x2, y2, z2);
                ext.data[(j * s + i1) * s + i2] = a * channel.get(x2, z2);
            }
        }
    }
    Ok(ext)
}
