//! Curves of the toy low/high-entropy example, either from fixed closed
//! forms or recomputed from the bound formulas.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::{old_bound, thm1_bound};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 3] = ["series", "i_xz_bits", "value_bits"];
pub const OPTIMAL_SERIES: &str = "I(Y;Z*)";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Panel {
    LowEntropyNew,
    LowEntropyOld,
    HighEntropyNew,
}

impl Panel {
    pub const ALL: [Panel; 3] = [Panel::LowEntropyNew, Panel::LowEntropyOld, Panel::HighEntropyNew];

    pub fn as_str(self) -> &'static str {
        match self {
            Panel::LowEntropyNew => "low_entropy_new",
            Panel::LowEntropyOld => "low_entropy_old",
            Panel::HighEntropyNew => "high_entropy_new",
        }
    }

    pub fn x_range(self) -> [f64; 2] {
        match self {
            Panel::LowEntropyNew => [0.0, 21.0],
            Panel::LowEntropyOld => [0.0, 6.0],
            Panel::HighEntropyNew => [0.0, 100.0],
        }
    }

    pub fn series(self) -> &'static [&'static str] {
        match self {
            Panel::LowEntropyNew => &[OPTIMAL_SERIES, "10000", "5000", "2000"],
            Panel::LowEntropyOld | Panel::HighEntropyNew => &[OPTIMAL_SERIES, "10000"],
        }
    }
}

impl fmt::Display for Panel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Panel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Panel::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::config("panel", format!("unknown panel '{s}'")))
    }
}

/// Closed-form value of `series` at `x`, unrounded.
pub fn toy_value(panel: Panel, series: &str, x: f64) -> Option<f64> {
    let decay = if panel == Panel::HighEntropyNew { 20.0 } else { 5.0 };
    let optimal = 3.32 - 3.32 * (-x / decay).exp();
    let offset = match (panel, series) {
        (_, OPTIMAL_SERIES) => 0.0,
        (Panel::LowEntropyOld, "10000") => 0.03 * 2f64.powf(x),
        (Panel::LowEntropyNew | Panel::HighEntropyNew, "10000") => 2.0 * 0.01 * x + 0.2,
        (Panel::LowEntropyNew, "5000") => 2.0 * 0.02 * x + 0.26,
        (Panel::LowEntropyNew, "2000") => 2.0 * 0.03 * x + 0.38,
        _ => return None,
    };
    Some(optimal - offset)
}

/// Rounds to 12 significant digits, so CSV text round-trips exactly.
pub fn round_sig12(v: f64) -> f64 {
    format!("{v:.11e}").parse().expect("formatted float parses")
}

/// Evenly spaced grid lo + (hi − lo)·i/n with n = round((hi − lo)/step).
pub fn grid(x_range: [f64; 2], step: f64) -> Result<Vec<f64>> {
    let [lo, hi] = x_range;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::DomainError(format!("bad range [{lo}, {hi}]")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::DomainError(format!("step = {step} must be positive")));
    }
    let n = ((hi - lo) / step).round().max(1.0) as usize;
    Ok((0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyFigSpec {
    pub panel: Panel,
    pub x_range: [f64; 2],
    pub step: f64,
}

impl ToyFigSpec {
    pub const DEFAULT_STEP: f64 = 0.1;

    pub fn new(panel: Panel) -> Self {
        Self { panel, x_range: panel.x_range(), step: Self::DEFAULT_STEP }
    }

    pub fn with_step(panel: Panel, step: f64) -> Result<Self> {
        grid(panel.x_range(), step)?;
        Ok(Self { step, ..Self::new(panel) })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub series: String,
    #[serde(rename = "i_xz_bits")]
    pub i_xz: f64,
    #[serde(rename = "value_bits")]
    pub value: f64,
}

impl CurvePoint {
    fn new(series: &str, i_xz: f64, value: f64) -> Self {
        Self { series: series.to_string(), i_xz: round_sig12(i_xz), value: round_sig12(value) }
    }
}

/// Figure-reproduction mode: the plotted closed forms, one row per
/// (series, grid point).
pub fn emit_toyfig(spec: &ToyFigSpec) -> Result<Vec<CurvePoint>> {
    if spec.x_range != spec.panel.x_range() {
        return Err(Error::config(
            "x_range",
            format!("{} is plotted on {:?}", spec.panel, spec.panel.x_range()),
        ));
    }
    let xs = grid(spec.x_range, spec.step)?;
    let mut out = Vec::new();
    for s in spec.panel.series() {
        for &x in &xs {
            let v = toy_value(spec.panel, s, x).expect("panel series");
            out.push(CurvePoint::new(s, x, v));
        }
    }
    Ok(out)
}

fn default_h_y() -> f64 {
    10f64.log2()
}
fn default_decay() -> f64 {
    2.0
}
fn default_range() -> [f64; 2] {
    [0.0, 21.0]
}
fn default_step() -> f64 {
    ToyFigSpec::DEFAULT_STEP
}
fn default_m_delta() -> BTreeMap<u64, f64> {
    BTreeMap::from([(10_000, 0.01), (5_000, 0.02), (2_000, 0.03)])
}
fn default_y_card() -> usize {
    10
}

/// Formula-mode parameters: I(Y;Z*) = H(Y)(1 − e^{−I/decay}).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundFigParams {
    #[serde(default = "default_h_y")]
    pub h_y: f64,
    #[serde(default = "default_decay")]
    pub decay: f64,
    #[serde(default = "default_range")]
    pub x_range: [f64; 2],
    #[serde(default = "default_step")]
    pub step: f64,
    /// δ̄ assumed at each sample size m.
    #[serde(default = "default_m_delta")]
    pub m_delta: BTreeMap<u64, f64>,
    /// Constant of the older bound; its series are emitted only when set.
    #[serde(default)]
    pub old_c: Option<f64>,
    #[serde(default = "default_y_card")]
    pub y_card: usize,
}

impl Default for BoundFigParams {
    fn default() -> Self {
        Self {
            h_y: default_h_y(),
            decay: default_decay(),
            x_range: default_range(),
            step: default_step(),
            m_delta: default_m_delta(),
            old_c: None,
            y_card: default_y_card(),
        }
    }
}

/// Formula mode: I*, I* − 2·(δ̄·I + h₂(δ̄)) per m, and optionally
/// I* − old bound per m (series `old:<m>`).
pub fn emit_bound_fig(params: &BoundFigParams) -> Result<Vec<CurvePoint>> {
    if !(params.h_y.is_finite() && params.h_y >= 0.0) {
        return Err(Error::DomainError(format!("h_y = {} must be >= 0", params.h_y)));
    }
    if !(params.decay.is_finite() && params.decay > 0.0) {
        return Err(Error::DomainError(format!("decay = {} must be > 0", params.decay)));
    }
    let xs = grid(params.x_range, params.step)?;
    if xs[0] < 0.0 {
        return Err(Error::DomainError("I(X;Z) grid must be non-negative".into()));
    }
    let optimal = |x: f64| params.h_y * (1.0 - (-x / params.decay).exp());
    let mut out: Vec<CurvePoint> = xs.iter().map(|&x| CurvePoint::new(OPTIMAL_SERIES, x, optimal(x))).collect();
    // largest m first, matching the figure legend
    for (&m, &delta) in params.m_delta.iter().rev() {
        let name = m.to_string();
        for &x in &xs {
            let v = optimal(x) - 2.0 * thm1_bound(delta, x)?;
            out.push(CurvePoint::new(&name, x, v));
        }
    }
    if let Some(c) = params.old_c {
        for &m in params.m_delta.keys().rev() {
            let name = format!("old:{m}");
            for &x in &xs {
                let v = optimal(x) - old_bound(params.y_card, m, x, c)?;
                out.push(CurvePoint::new(&name, x, v));
            }
        }
    }
    Ok(out)
}

fn fmt_value(v: f64) -> String {
    format!("{}", round_sig12(v))
}

pub fn write_curve_csv<W: Write>(points: &[CurvePoint], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for p in points {
        wr.write_record([p.series.as_str(), &fmt_value(p.i_xz), &fmt_value(p.value)])?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_curve_csv<R: Read>(r: R) -> Result<Vec<CurvePoint>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::config("header", format!("expected {CSV_HEADER:?}, got {header:?}")));
    }
    rd.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}
