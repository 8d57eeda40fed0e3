//! Closed-form information-loss bounds and the k(m') sample-complexity model.
//!
//! Type-1 loss bounds are in bits. Tail bounds and the high-probability
//! deviation bound use natural logarithms throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::h2;

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::DomainError(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::DomainError(format!("{name} = {v} must be finite and >= 0")));
    }
    Ok(())
}

/// δ̄·I(X;Z) + h₂(δ̄), bits.
pub fn thm1_bound(delta_bar: f64, i_xz: f64) -> Result<f64> {
    check_unit("delta_bar", delta_bar)?;
    check_nonneg("I(X;Z)", i_xz)?;
    Ok(delta_bar * i_xz + h2(delta_bar))
}

/// δ̄·H(X) + h₂(δ̄), bits; the Z = X case of [`thm1_bound`].
pub fn cor1_bound(delta_bar: f64, h_x: f64) -> Result<f64> {
    thm1_bound(delta_bar, h_x)
}

/// Converts a type-1 bound K into the type-2 bound 2K + ε.
pub fn type2_bound(k_value: f64, eps: f64) -> Result<f64> {
    check_nonneg("K", k_value)?;
    check_nonneg("eps", eps)?;
    Ok(2.0 * k_value + eps)
}

/// c·√(|𝒴|/2m)·2^{I(X;Z)}, bits.
pub fn old_bound(y_card: usize, m: u64, i_xz: f64, c: f64) -> Result<f64> {
    if y_card < 2 || m == 0 || !(c > 0.0) || !c.is_finite() {
        return Err(Error::DomainError(format!(
            "need |Y| >= 2, m >= 1, c > 0; got |Y|={y_card}, m={m}, c={c}"
        )));
    }
    check_nonneg("I(X;Z)", i_xz)?;
    Ok(c * (y_card as f64 / (2.0 * m as f64)).sqrt() * i_xz.exp2())
}

/// √(H/2) for a conditional cross entropy H in nats.
pub fn pinsker_delta_bound(cross_entropy_nats: f64) -> Result<f64> {
    check_nonneg("cross entropy", cross_entropy_nats)?;
    Ok((0.5 * cross_entropy_nats).sqrt())
}

/// Asymptotic decay exponent 4ζ − 2ε² (nats per sample).
pub fn thm3_exponent(zeta: f64, eps: f64) -> Result<f64> {
    check_unit("zeta", zeta)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::DomainError(format!("eps = {eps} outside (0, 1)")));
    }
    Ok(4.0 * zeta - 2.0 * eps * eps)
}

/// k(m') = min(k_c·m'^r, √m').
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KModel {
    pub k_c: f64,
    pub r: f64,
}

impl KModel {
    pub const ZERO: KModel = KModel { k_c: 0.0, r: 0.0 };

    pub fn new(k_c: f64, r: f64) -> Result<Self> {
        check_nonneg("k_c", k_c)?;
        if !(0.0..0.5).contains(&r) {
            return Err(Error::DomainError(format!("r = {r} outside [0, 1/2)")));
        }
        Ok(Self { k_c, r })
    }

    pub fn k(&self, m_prime: u64) -> f64 {
        let mp = m_prime as f64;
        (self.k_c * mp.powf(self.r)).min(mp.sqrt())
    }

    /// δ' = k(m')/√m'.
    pub fn delta_prime(&self, m_prime: u64) -> f64 {
        self.k(m_prime) / (m_prime as f64).sqrt()
    }
}

/// Default truncation of the m' search: 10·⌈√m⌉.
pub fn default_m_prime_max(m: u64) -> u64 {
    10 * (m as f64).sqrt().ceil() as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub bound: f64,
    pub argmin_m_prime: u64,
    /// Natural log of the unclamped minimum.
    pub log_bound: f64,
}

fn thm4_log_term(m: u64, y_card: usize, eps: f64, zeta: f64, d: f64, m_prime: u64) -> f64 {
    let gap = (eps - 2.0 * d).max(0.0);
    m_prime as f64 * y_card as f64 * std::f64::consts::LN_2
        - 2.0 * m as f64 * (gap * gap - 4.0 * zeta)
        + 2.0 * d
}

/// Finite-sample tail bound on P(δ̄ ≥ ε), minimized over m' = 1..=m_prime_max.
///
/// The squared gap uses the positive part (ε − 2δ')₊: once 2δ' ≥ ε the
/// deviation event is unconstrained and the term carries no decay. The
/// result is clamped to 1.
pub fn thm4_tail_bound(
    m: u64,
    y_card: usize,
    eps: f64,
    zeta: f64,
    k: &KModel,
    m_prime_max: u64,
) -> Result<TailBound> {
    if m == 0 || y_card < 2 || m_prime_max == 0 {
        return Err(Error::DomainError(format!(
            "need m >= 1, |Y| >= 2, m'_max >= 1; got m={m}, |Y|={y_card}, m'_max={m_prime_max}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::DomainError(format!("eps = {eps} outside (0, 1)")));
    }
    check_unit("zeta", zeta)?;
    let (argmin, log_bound) = (1..=m_prime_max)
        .map(|mp| (mp, thm4_log_term(m, y_card, eps, zeta, k.delta_prime(mp), mp)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    Ok(TailBound {
        bound: log_bound.exp().min(1.0),
        argmin_m_prime: argmin,
        log_bound,
    })
}

/// Smallest ε whose tail bound is at most `nu`, by bisection on (0, 1).
///
/// Returns `None` when even ε → 1 leaves the bound above `nu`.
pub fn thm4_epsilon_at_confidence(
    m: u64,
    y_card: usize,
    nu: f64,
    zeta: f64,
    k: &KModel,
    m_prime_max: u64,
) -> Result<Option<f64>> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::DomainError(format!("nu = {nu} outside (0, 1)")));
    }
    let at = |eps: f64| thm4_tail_bound(m, y_card, eps, zeta, k, m_prime_max).map(|t| t.bound);
    let top = 1.0 - 1e-12;
    if at(top)? > nu {
        return Ok(None);
    }
    let (mut lo, mut hi) = (1e-12, top);
    if at(lo)? <= nu {
        return Ok(Some(lo));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? <= nu {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// High-probability deviation bound:
/// ζ + inf_{m'} √((ln(1/ν) + m'|𝒴| ln 2)/(2m) + δ') + 2δ'.
pub fn insight_delta_bound(
    m: u64,
    y_card: usize,
    nu: f64,
    zeta: f64,
    k: &KModel,
    m_prime_max: u64,
) -> Result<TailBound> {
    if m == 0 || y_card < 2 || m_prime_max == 0 {
        return Err(Error::DomainError(format!(
            "need m >= 1, |Y| >= 2, m'_max >= 1; got m={m}, |Y|={y_card}, m'_max={m_prime_max}"
        )));
    }
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::DomainError(format!("nu = {nu} outside (0, 1)")));
    }
    check_unit("zeta", zeta)?;
    let (argmin, best) = (1..=m_prime_max)
        .map(|mp| {
            let d = k.delta_prime(mp);
            let inner = ((1.0 / nu).ln() + mp as f64 * y_card as f64 * std::f64::consts::LN_2)
                / (2.0 * m as f64)
                + d;
            (mp, inner.sqrt() + 2.0 * d)
        })
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    Ok(TailBound {
        bound: zeta + best,
        argmin_m_prime: argmin,
        log_bound: (zeta + best).ln(),
    })
}

/// Least-squares fit of ln k = ln k_c + r ln m', with r clamped to [0, ½).
pub fn fit_k_model(observations: &[(u64, f64)]) -> Result<KModel> {
    if observations.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} observation(s); at least 2 needed",
            observations.len()
        )));
    }
    if let Some(&(mp, k)) = observations.iter().find(|&&(mp, k)| mp == 0 || !(k > 0.0)) {
        return Err(Error::DomainError(format!(
            "observation (m'={mp}, k={k}) must be positive"
        )));
    }
    let n = observations.len() as f64;
    let xs: Vec<f64> = observations.iter().map(|&(mp, _)| (mp as f64).ln()).collect();
    let ys: Vec<f64> = observations.iter().map(|&(_, k)| k.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData(
            "all observations share one m'; slope is undetermined".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let r = slope.clamp(0.0, 0.5 - 1e-9);
    let ln_kc = if r == slope { my - slope * mx } else { my - r * mx };
    KModel::new(ln_kc.exp(), r)
}

/// Every type-1 loss bound evaluated for one set of inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub delta_bar: f64,
    pub i_xz: f64,
    pub h_x: f64,
    pub eps: f64,
    pub y_card: usize,
    pub m: u64,
    pub c: f64,
    pub thm1: f64,
    pub cor1: f64,
    pub type2: f64,
    pub old_bound: f64,
}

impl BoundReport {
    pub fn compute(
        delta_bar: f64,
        i_xz: f64,
        h_x: f64,
        eps: f64,
        y_card: usize,
        m: u64,
        c: f64,
    ) -> Result<Self> {
        let thm1 = thm1_bound(delta_bar, i_xz)?;
        Ok(Self {
            delta_bar,
            i_xz,
            h_x,
            eps,
            y_card,
            m,
            c,
            thm1,
            cor1: cor1_bound(delta_bar, h_x)?,
            type2: type2_bound(thm1, eps)?,
            old_bound: old_bound(y_card, m, i_xz, c)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn thm1_examples() {
        assert_eq!(thm1_bound(0.0, 7.0).unwrap(), 0.0);
        let direct = 0.1 + (-0.01 * 0.01f64.log2() - 0.99 * 0.99f64.log2());
        close(thm1_bound(0.01, 10.0).unwrap(), direct, 1e-15);
        close(thm1_bound(0.01, 10.0).unwrap(), 0.1808, 1e-4);
        assert_eq!(thm1_bound(1.0, 0.0).unwrap(), 0.0);
        assert!(thm1_bound(1.1, 0.0).is_err());
        assert!(thm1_bound(0.5, -1.0).is_err());
    }

    #[test]
    fn cor1_examples() {
        assert_eq!(cor1_bound(0.0, 21.0).unwrap(), 0.0);
        close(cor1_bound(0.01, 21.0).unwrap(), 0.2908, 1e-4);
        assert_eq!(cor1_bound(0.2, 3.0).unwrap(), thm1_bound(0.2, 3.0).unwrap());
    }

    #[test]
    fn type2_examples() {
        assert_eq!(type2_bound(0.0, 0.0).unwrap(), 0.0);
        close(type2_bound(0.1808, 0.01).unwrap(), 0.3716, 1e-12);
        assert!(type2_bound(0.2, 0.1).unwrap() < type2_bound(0.3, 0.1).unwrap());
        assert!(type2_bound(0.2, 0.1).unwrap() < type2_bound(0.2, 0.2).unwrap());
    }

    #[test]
    fn old_bound_examples() {
        close(old_bound(10, 10_000, 5.0, 1.0).unwrap(), 0.7155, 1e-4);
        close(
            old_bound(10, 10_000, 0.0, 2.0).unwrap(),
            2.0 * (10.0f64 / 20_000.0).sqrt(),
            1e-15,
        );
        let a = old_bound(3, 100, 2.5, 1.0).unwrap();
        let b = old_bound(3, 100, 3.5, 1.0).unwrap();
        close(b, 2.0 * a, 1e-15);
        assert!(old_bound(1, 100, 1.0, 1.0).is_err());
        assert!(old_bound(2, 0, 1.0, 1.0).is_err());
        assert!(old_bound(2, 10, 1.0, 0.0).is_err());
    }

    #[test]
    fn pinsker_examples() {
        assert_eq!(pinsker_delta_bound(0.0).unwrap(), 0.0);
        close(pinsker_delta_bound(std::f64::consts::LN_2).unwrap(), 0.5887, 1e-4);
        assert!(pinsker_delta_bound(-1.0).is_err());
    }

    #[test]
    fn thm3_examples() {
        close(thm3_exponent(0.0, 0.1).unwrap(), -0.02, 1e-15);
        assert!(thm3_exponent(0.0, 1e-9).unwrap().abs() < 1e-17);
        for &(zeta, eps) in &[(0.001, 0.05), (0.01, 0.1), (0.01, 0.2), (0.1, 0.5), (0.2, 0.6)] {
            let neg = thm3_exponent(zeta, eps).unwrap() < 0.0;
            assert_eq!(neg, eps > (2.0f64 * zeta).sqrt(), "zeta={zeta} eps={eps}");
        }
        assert!(thm3_exponent(0.0, 0.0).is_err());
        assert!(thm3_exponent(0.0, 1.0).is_err());
    }

    #[test]
    fn thm4_examples() {
        let t = thm4_tail_bound(1000, 2, 0.1, 0.0, &KModel::ZERO, 50).unwrap();
        assert_eq!(t.argmin_m_prime, 1);
        let direct = 4.0 * (-20.0f64).exp();
        close(t.bound, direct, 1e-20);
        close(t.bound, 8.24e-9, 1e-11);

        let vacuous = KModel::new(10.0, 0.49).unwrap();
        let t = thm4_tail_bound(100, 3, 0.1, 0.0, &vacuous, 100).unwrap();
        assert_eq!(t.bound, 1.0);
        assert!(t.log_bound >= 0.0);
    }

    #[test]
    fn thm4_matches_closed_form_when_k_vanishes() {
        for &(m, y, eps) in &[(50u64, 3usize, 0.1), (400, 3, 0.1), (10_000, 10, 0.05)] {
            let t = thm4_tail_bound(m, y, eps, 0.0, &KModel::ZERO, 10).unwrap();
            let closed = 2f64.powi(y as i32) * (-2.0 * m as f64 * eps * eps).exp();
            assert_eq!(t.argmin_m_prime, 1);
            close(t.bound, closed.min(1.0), closed * 1e-12);
        }
    }

    #[test]
    fn thm4_non_increasing_in_m() {
        let k = KModel::new(0.05, 0.25).unwrap();
        let mut prev = f64::INFINITY;
        for m in (50..=5000).step_by(50) {
            let b = thm4_tail_bound(m, 3, 0.2, 0.001, &k, 60).unwrap().bound;
            assert!(b <= prev + 1e-15, "m={m}: {b} > {prev}");
            prev = b;
        }
    }

    #[test]
    fn epsilon_inversion_hits_nu() {
        let k = KModel::new(0.02, 0.2).unwrap();
        let eps = thm4_epsilon_at_confidence(2000, 3, 0.5, 0.0, &k, 50)
            .unwrap()
            .unwrap();
        let b = thm4_tail_bound(2000, 3, eps, 0.0, &k, 50).unwrap().bound;
        close(b, 0.5, 1e-6);
    }

    #[test]
    fn insight_examples() {
        let t = insight_delta_bound(10_000, 10, 0.5, 0.0, &KModel::ZERO, 100).unwrap();
        assert_eq!(t.argmin_m_prime, 1);
        let direct = ((2f64.ln() + 10.0 * 2f64.ln()) / 20_000.0).sqrt();
        close(t.bound, direct, 1e-15);
        close(t.bound, 0.0195, 1e-4);
        let far = insight_delta_bound(u64::MAX / 4, 10, 0.5, 0.0, &KModel::ZERO, 1).unwrap();
        assert!(far.bound < 1e-8);
        let k = KModel::new(0.1, 0.3).unwrap();
        let mut prev = f64::INFINITY;
        for m in (100..=20_000).step_by(100) {
            let b = insight_delta_bound(m, 10, 0.5, 0.0, &k, 80).unwrap().bound;
            assert!(b <= prev + 1e-15);
            prev = b;
        }
    }

    #[test]
    fn k_model_clamps_at_sqrt() {
        let k = KModel::new(5.0, 0.4).unwrap();
        assert_eq!(k.k(1), 1.0);
        assert_eq!(k.k(1_000_000), 1000.0);
        assert!(k.k(4) < 2.0 * 4f64.sqrt());
        assert!(KModel::new(1.0, 0.5).is_err());
        assert!(KModel::new(-1.0, 0.1).is_err());
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        let obs: Vec<_> = [1u64, 2, 4, 8, 16, 32]
            .iter()
            .map(|&mp| (mp, 2.0 * (mp as f64).powf(0.3)))
            .collect();
        let k = fit_k_model(&obs).unwrap();
        close(k.k_c, 2.0, 1e-12);
        close(k.r, 0.3, 1e-12);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            fit_k_model(&[(4, 1.0)]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            fit_k_model(&[(4, 1.0), (4, 2.0)]),
            Err(Error::InsufficientData(_))
        ));
        assert!(fit_k_model(&[(4, 1.0), (8, 0.0)]).is_err());
    }

    #[test]
    fn fit_clamps_slope() {
        let obs = [(1u64, 1.0), (100, 1000.0)];
        assert!(fit_k_model(&obs).unwrap().r < 0.5);
        let obs = [(1u64, 10.0), (100, 1.0)];
        assert_eq!(fit_k_model(&obs).unwrap().r, 0.0);
    }

    #[test]
    fn report_consistency() {
        let r = BoundReport::compute(0.01, 10.0, 21.0, 0.01, 10, 10_000, 1.0).unwrap();
        assert_eq!(r.thm1, 0.01 * 10.0 + h2(0.01));
        assert_eq!(r.type2, 2.0 * r.thm1 + 0.01);
    }
}
