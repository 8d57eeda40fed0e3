//! Finite distributions, row-stochastic channels, joints over 𝒳×𝒴 and the
//! full (X, Y, Z) model factored along the chain Y – X – Z.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization tolerance applied to every input distribution.
pub const NORM_TOL: f64 = 1e-12;

/// Tolerance for comparisons between derived quantities.
pub const DERIVED_TOL: f64 = 1e-10;

fn check_entries(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Empty);
    }
    for (index, &value) in probs.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        if value < 0.0 {
            return Err(Error::NegativeMass { index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    let deviation = (sum - 1.0).abs();
    if deviation > NORM_TOL {
        return Err(Error::NotNormalized {
            sum,
            deviation,
            tolerance: NORM_TOL,
        });
    }
    Ok(())
}

/// A probability vector over a finite alphabet.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FiniteDist {
    probs: Vec<f64>,
}

impl FiniteDist {
    /// Validates `probs` and wraps it.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_entries(&probs)?;
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
            if value < 0.0 {
                return Err(Error::NegativeMass { index, value });
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::DomainError("weights sum to zero".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over an empty alphabet");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n, "point mass outside the alphabet");
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Self { probs }
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn has_full_support(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

impl std::ops::Index<usize> for FiniteDist {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

/// A row-stochastic matrix; row `a` is the distribution of the target given `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct CondDist {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CondDist {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::Empty);
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(n_rows * cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Self::from_flat(n_rows, cols, data)
    }

    /// Builds from row-major storage, validating each row.
    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        for row in data.chunks_exact(cols) {
            check_entries(row)?;
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from rows of non-negative weights; all-zero rows become uniform.
    pub fn from_weight_rows(rows: usize, cols: usize, weights: &[f64]) -> Result<Self> {
        if weights.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for a {rows}x{cols} matrix",
                weights.len()
            )));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for row in weights.chunks_exact(cols) {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                data.extend(row.iter().map(|w| w / total));
            } else {
                data.extend(std::iter::repeat_n(1.0 / cols as f64, cols));
            }
        }
        Self::from_flat(rows, cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn uniform(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![1.0 / cols as f64; rows * cols],
        }
    }

    /// Every row equal to `row`.
    pub fn constant(rows: usize, row: &FiniteDist) -> Self {
        let mut data = Vec::with_capacity(rows * row.len());
        for _ in 0..rows {
            data.extend_from_slice(row.probs());
        }
        Self {
            rows,
            cols: row.len(),
            data,
        }
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows_iter().map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn same_shape(&self, other: &CondDist) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl fmt::Display for CondDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows_iter().enumerate() {
            writeln!(f, "{i}: {row:?}")?;
        }
        Ok(())
    }
}

/// Joint probability table over 𝒳×𝒴 (row-major, rows indexed by x).
#[derive(Clone, Debug, PartialEq)]
pub struct JointXY {
    x_card: usize,
    y_card: usize,
    data: Vec<f64>,
}

impl JointXY {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let x_card = rows.len();
        if x_card == 0 {
            return Err(Error::Empty);
        }
        let y_card = rows[0].len();
        if rows.iter().any(|r| r.len() != y_card) {
            return Err(Error::ShapeMismatch("ragged joint table".into()));
        }
        Self::from_flat(x_card, y_card, rows.into_iter().flatten().collect())
    }

    /// Validates non-negativity and normalization. Full x-support is checked
    /// separately by [`JointXY::require_full_x_support`] because residual
    /// pieces of a coupling legitimately leave some x without mass.
    pub fn from_flat(x_card: usize, y_card: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != x_card * y_card {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {x_card}x{y_card} joint",
                data.len()
            )));
        }
        check_entries(&data)?;
        Ok(Self {
            x_card,
            y_card,
            data,
        })
    }

    /// p(x)·p(y|x).
    pub fn from_parts(p_x: &FiniteDist, cond: &CondDist) -> Result<Self> {
        if p_x.len() != cond.n_rows() {
            return Err(Error::ShapeMismatch(format!(
                "p_x has {} symbols, conditional has {} rows",
                p_x.len(),
                cond.n_rows()
            )));
        }
        let y_card = cond.n_cols();
        let mut data = Vec::with_capacity(p_x.len() * y_card);
        for (px, row) in p_x.probs().iter().zip(cond.rows_iter()) {
            data.extend(row.iter().map(|p| px * p));
        }
        Self::from_flat(p_x.len(), y_card, data)
    }

    #[inline]
    pub fn x_card(&self) -> usize {
        self.x_card
    }

    #[inline]
    pub fn y_card(&self) -> usize {
        self.y_card
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.y_card + y]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.y_card..(x + 1) * self.y_card]
    }

    pub fn x_marginal_vec(&self) -> Vec<f64> {
        self.data
            .chunks_exact(self.y_card)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn y_marginal_vec(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.y_card];
        for row in self.data.chunks_exact(self.y_card) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    pub fn x_marginal(&self) -> FiniteDist {
        FiniteDist {
            probs: self.x_marginal_vec(),
        }
    }

    pub fn y_marginal(&self) -> FiniteDist {
        FiniteDist {
            probs: self.y_marginal_vec(),
        }
    }

    pub fn require_full_x_support(&self) -> Result<()> {
        match self.x_marginal_vec().iter().position(|&p| p <= 0.0) {
            Some(x) => Err(Error::MissingSupport(x)),
            None => Ok(()),
        }
    }

    /// p(y|x); requires full x-support.
    pub fn conditional(&self) -> Result<CondDist> {
        self.require_full_x_support()?;
        CondDist::from_weight_rows(self.x_card, self.y_card, &self.data)
    }
}

/// Joint over (X, Y, Z) factored as p(x)·p(y|x)·p(z|x).
#[derive(Clone, Debug, PartialEq)]
pub struct FullModel {
    pub p_x: FiniteDist,
    pub p_y_given_x: CondDist,
    pub p_z_given_x: CondDist,
}

impl FullModel {
    pub fn new(p_x: FiniteDist, p_y_given_x: CondDist, p_z_given_x: CondDist) -> Result<Self> {
        if p_y_given_x.n_rows() != p_x.len() || p_z_given_x.n_rows() != p_x.len() {
            return Err(Error::ShapeMismatch(format!(
                "p_x has {} symbols; p(y|x) has {} rows; p(z|x) has {} rows",
                p_x.len(),
                p_y_given_x.n_rows(),
                p_z_given_x.n_rows()
            )));
        }
        if let Some(x) = p_x.probs().iter().position(|&p| p <= 0.0) {
            return Err(Error::MissingSupport(x));
        }
        Ok(Self {
            p_x,
            p_y_given_x,
            p_z_given_x,
        })
    }

    pub fn x_card(&self) -> usize {
        self.p_x.len()
    }

    pub fn y_card(&self) -> usize {
        self.p_y_given_x.n_cols()
    }

    pub fn z_card(&self) -> usize {
        self.p_z_given_x.n_cols()
    }

    /// The estimated full model p(x)·p̂(y|x)·p(z|x).
    pub fn with_label_conditional(&self, est: CondDist) -> Result<Self> {
        self.p_y_given_x.same_shape(&est)?;
        Ok(Self {
            p_x: self.p_x.clone(),
            p_y_given_x: est,
            p_z_given_x: self.p_z_given_x.clone(),
        })
    }

    pub fn with_channel(&self, channel: CondDist) -> Result<Self> {
        Self::new(self.p_x.clone(), self.p_y_given_x.clone(), channel)
    }

    pub fn joint_xy(&self) -> JointXY {
        JointXY::from_parts(&self.p_x, &self.p_y_given_x)
            .expect("validated model always yields a valid joint")
    }

    /// Dense table indexed `[x][y][z]`, row-major.
    pub fn joint_xyz(&self) -> Vec<f64> {
        let (ny, nz) = (self.y_card(), self.z_card());
        let mut out = Vec::with_capacity(self.x_card() * ny * nz);
        for x in 0..self.x_card() {
            let px = self.p_x[x];
            for &py in self.p_y_given_x.row(x) {
                let pxy = px * py;
                out.extend(self.p_z_given_x.row(x).iter().map(|pz| pxy * pz));
            }
        }
        out
    }
}

/// On-disk model description. Row-major; `z` fields are optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub x_card: usize,
    pub y_card: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_card: Option<usize>,
    pub p_x: Vec<f64>,
    pub p_y_given_x: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_z_given_x: Option<Vec<Vec<f64>>>,
}

impl ModelFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    fn check_matrix(key: &str, rows: &[Vec<f64>], n_rows: usize, n_cols: usize) -> Result<()> {
        if rows.len() != n_rows {
            return Err(Error::config(
                key,
                format!("expected {n_rows} rows, found {}", rows.len()),
            ));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_cols) {
            return Err(Error::config(
                key,
                format!("row {i} has {} entries, expected {n_cols}", r.len()),
            ));
        }
        CondDist::new(rows.to_vec()).map_err(|e| Error::config(key, e.to_string()))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_x.len() != self.x_card {
            return Err(Error::config(
                "p_x",
                format!("expected {} entries, found {}", self.x_card, self.p_x.len()),
            ));
        }
        let p_x = FiniteDist::new(self.p_x.clone()).map_err(|e| Error::config("p_x", e.to_string()))?;
        if let Some(x) = p_x.probs().iter().position(|&p| p <= 0.0) {
            return Err(Error::config("p_x", format!("symbol {x} has zero mass")));
        }
        Self::check_matrix("p_y_given_x", &self.p_y_given_x, self.x_card, self.y_card)?;
        match (&self.p_z_given_x, self.z_card) {
            (Some(rows), Some(z)) => Self::check_matrix("p_z_given_x", rows, self.x_card, z)?,
            (Some(rows), None) => {
                let z = rows.first().map_or(0, Vec::len);
                Self::check_matrix("p_z_given_x", rows, self.x_card, z)?
            }
            (None, Some(_)) => {
                return Err(Error::config("p_z_given_x", "z_card given without a channel"))
            }
            (None, None) => {}
        }
        Ok(())
    }

    pub fn p_x(&self) -> Result<FiniteDist> {
        FiniteDist::new(self.p_x.clone())
    }

    pub fn label_conditional(&self) -> Result<CondDist> {
        CondDist::new(self.p_y_given_x.clone())
    }

    pub fn joint_xy(&self) -> Result<JointXY> {
        JointXY::from_parts(&self.p_x()?, &self.label_conditional()?)
    }

    pub fn has_channel(&self) -> bool {
        self.p_z_given_x.is_some()
    }

    pub fn to_model(&self) -> Result<FullModel> {
        let channel = self
            .p_z_given_x
            .as_ref()
            .ok_or_else(|| Error::config("p_z_given_x", "model has no z channel"))?;
        FullModel::new(
            self.p_x()?,
            self.label_conditional()?,
            CondDist::new(channel.clone())?,
        )
    }

    pub fn from_model(model: &FullModel) -> Self {
        Self {
            x_card: model.x_card(),
            y_card: model.y_card(),
            z_card: Some(model.z_card()),
            p_x: model.p_x.probs().to_vec(),
            p_y_given_x: model.p_y_given_x.to_rows(),
            p_z_given_x: Some(model.p_z_given_x.to_rows()),
        }
    }
}
