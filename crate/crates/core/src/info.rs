//! Exact information quantities on finite alphabets.
//!
//! Entropies and mutual informations are reported in bits. KL divergence and
//! cross entropy are in nats, because Pinsker's inequality and the large
//! deviation exponents downstream are natural-log statements. The single
//! conversion point is [`NATS_PER_BIT`].

use serde::{Deserialize, Serialize};

use crate::dist::{CondDist, FiniteDist, FullModel, JointXY};
use crate::error::{Error, Result};

/// ln 2: multiply bits by this to obtain nats.
pub const NATS_PER_BIT: f64 = std::f64::consts::LN_2;

/// `-p log2 p` with `0 log 0 = 0`.
#[inline]
fn surprisal_term(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| surprisal_term(p)).sum()
}

/// Shannon entropy in bits.
pub fn entropy(dist: &FiniteDist) -> f64 {
    entropy_of(dist.probs())
}

#[inline]
pub(crate) fn h2(t: f64) -> f64 {
    surprisal_term(t) + surprisal_term(1.0 - t)
}

/// Binary entropy h₂(t) in bits.
pub fn binary_entropy(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::DomainError(format!(
            "binary entropy argument {t} outside [0, 1]"
        )));
    }
    Ok(h2(t))
}

/// Σ p(a,b) log2(p(a,b) / (p(a) p(b))) over a row-major table.
pub(crate) fn mi_of_table(data: &[f64], rows: usize, cols: usize) -> f64 {
    debug_assert_eq!(data.len(), rows * cols);
    let mut row_m = vec![0.0; rows];
    let mut col_m = vec![0.0; cols];
    for (a, row) in data.chunks_exact(cols).enumerate() {
        for (b, &p) in row.iter().enumerate() {
            row_m[a] += p;
            col_m[b] += p;
        }
    }
    let mut total = 0.0;
    for (a, row) in data.chunks_exact(cols).enumerate() {
        for (b, &p) in row.iter().enumerate() {
            if p > 0.0 {
                total += p * (p / (row_m[a] * col_m[b])).log2();
            }
        }
    }
    total
}

/// I(X;Y) in bits.
pub fn mutual_information(joint: &JointXY) -> f64 {
    mi_of_table(joint.as_flat(), joint.x_card(), joint.y_card())
}

/// Information quantities of a full (X, Y, Z) model, all in bits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    pub h_x: f64,
    pub h_y: f64,
    pub i_xy: f64,
    pub i_xz: f64,
    pub i_yz: f64,
    pub i_yz_given_x: f64,
}

/// Evaluates every [`InfoReport`] field by summing over the (X, Y, Z) cube.
pub fn model_info(model: &FullModel) -> InfoReport {
    let (nx, ny, nz) = (model.x_card(), model.y_card(), model.z_card());
    let cube = model.joint_xyz();

    let mut p_x = vec![0.0; nx];
    let mut p_xy = vec![0.0; nx * ny];
    let mut p_xz = vec![0.0; nx * nz];
    let mut p_yz = vec![0.0; ny * nz];
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                let p = cube[(x * ny + y) * nz + z];
                p_x[x] += p;
                p_xy[x * ny + y] += p;
                p_xz[x * nz + z] += p;
                p_yz[y * nz + z] += p;
            }
        }
    }
    let mut p_y = vec![0.0; ny];
    for row in p_xy.chunks_exact(ny) {
        for (o, v) in p_y.iter_mut().zip(row) {
            *o += v;
        }
    }

    let mut i_yz_given_x = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                let p = cube[(x * ny + y) * nz + z];
                if p > 0.0 {
                    i_yz_given_x +=
                        p * (p * p_x[x] / (p_xy[x * ny + y] * p_xz[x * nz + z])).log2();
                }
            }
        }
    }

    InfoReport {
        h_x: entropy_of(&p_x),
        h_y: entropy_of(&p_y),
        i_xy: mi_of_table(&p_xy, nx, ny),
        i_xz: mi_of_table(&p_xz, nx, nz),
        i_yz: mi_of_table(&p_yz, ny, nz),
        i_yz_given_x,
    }
}

/// D_KL(p ‖ q) in nats.
pub fn kl_divergence(p: &FiniteDist, q: &FiniteDist) -> Result<f64> {
    kl_nats(p.probs(), q.probs())
}

pub(crate) fn kl_nats(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} vs {} symbols",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::SupportMismatch(format!(
                    "p has mass {a} at symbol {i} where q has none"
                )));
            }
            total += a * (a / b).ln();
        }
    }
    Ok(total)
}

#[inline]
pub(crate) fn tv_rows(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// δ̄ = Σ_x p(x) · ½ Σ_y |p(y|x) − q(y|x)|.
pub fn conditional_total_variation(p_x: &FiniteDist, p: &CondDist, q: &CondDist) -> Result<f64> {
    p.same_shape(q)?;
    if p_x.len() != p.n_rows() {
        return Err(Error::ShapeMismatch(format!(
            "p_x has {} symbols, conditionals have {} rows",
            p_x.len(),
            p.n_rows()
        )));
    }
    Ok(p_x
        .probs()
        .iter()
        .zip(p.rows_iter().zip(q.rows_iter()))
        .map(|(w, (a, b))| w * tv_rows(a, b))
        .sum())
}

/// H_{P,P̂}(Y|X) = −Σ_x p(x) Σ_y p(y|x) ln p̂(y|x), in nats.
pub fn conditional_cross_entropy(
    p_x: &FiniteDist,
    truth: &CondDist,
    est: &CondDist,
) -> Result<f64> {
    truth.same_shape(est)?;
    if p_x.len() != truth.n_rows() {
        return Err(Error::ShapeMismatch(format!(
            "p_x has {} symbols, conditionals have {} rows",
            p_x.len(),
            truth.n_rows()
        )));
    }
    let mut total = 0.0;
    for (x, &w) in p_x.probs().iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        for (y, (&t, &e)) in truth.row(x).iter().zip(est.row(x)).enumerate() {
            if t > 0.0 {
                if e <= 0.0 {
                    return Err(Error::SupportMismatch(format!(
                        "estimate assigns zero to label {y} at x={x}"
                    )));
                }
                total -= w * t * e.ln();
            }
        }
    }
    Ok(total)
}

/// Left side of Fano's inequality, h₂(P) + P log₂(|𝒴| − 1), in bits.
pub fn fano_lhs(p_err: f64, y_card: usize) -> f64 {
    let tail = if y_card > 2 {
        p_err * ((y_card - 1) as f64).log2()
    } else {
        0.0
    };
    h2(p_err) + tail
}

/// Smallest error probability compatible with Fano's inequality.
///
/// Bisects the increasing left side over [0, 1 − 1/|𝒴|]; returns 0 when
/// H(Y) − I(Y;Z) ≤ 0 and the upper end when the residual uncertainty reaches
/// log₂|𝒴|.
pub fn fano_error_lower_bound(h_y: f64, i_yz: f64, y_card: usize) -> Result<f64> {
    if y_card < 2 {
        return Err(Error::DomainError(format!("|Y| = {y_card} < 2")));
    }
    if !h_y.is_finite() || !i_yz.is_finite() || i_yz < -crate::dist::DERIVED_TOL {
        return Err(Error::DomainError(format!(
            "need finite 0 <= I(Y;Z), got H(Y)={h_y}, I(Y;Z)={i_yz}"
        )));
    }
    if i_yz > h_y + crate::dist::DERIVED_TOL {
        return Err(Error::DomainError(format!(
            "I(Y;Z)={i_yz} exceeds H(Y)={h_y}"
        )));
    }
    let max_h = (y_card as f64).log2();
    if h_y > max_h + crate::dist::DERIVED_TOL {
        return Err(Error::DomainError(format!(
            "H(Y)={h_y} exceeds log2|Y|={max_h}"
        )));
    }
    let rhs = h_y - i_yz;
    if rhs <= 0.0 {
        return Ok(0.0);
    }
    let hi_end = 1.0 - 1.0 / y_card as f64;
    if fano_lhs(hi_end, y_card) <= rhs {
        return Ok(hi_end);
    }
    let (mut lo, mut hi) = (0.0_f64, hi_end);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fano_lhs(mid, y_card) < rhs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn entropy_examples() {
        close(entropy(&FiniteDist::uniform(10)), 10f64.log2(), 1e-12);
        close(entropy(&FiniteDist::uniform(10)), 3.3219, 1e-4);
        assert_eq!(entropy(&FiniteDist::point_mass(4, 2)), 0.0);
        // −0.25 log2 0.25 − 0.75 log2 0.75
        let direct = 0.25 * 2.0 + 0.75 * (4.0f64 / 3.0).log2();
        let h = entropy(&FiniteDist::new(vec![0.25, 0.75]).unwrap());
        close(h, direct, 1e-15);
        close(h, 0.8113, 1e-4);
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        let direct = -0.01 * 0.01f64.log2() - 0.99 * 0.99f64.log2();
        close(binary_entropy(0.01).unwrap(), direct, 1e-16);
        close(binary_entropy(0.01).unwrap(), 0.0808, 1e-4);
        assert!(matches!(binary_entropy(1.5), Err(Error::DomainError(_))));
        assert!(matches!(binary_entropy(-0.1), Err(Error::DomainError(_))));
    }

    #[test]
    fn mutual_information_examples() {
        let indep = JointXY::new(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert_eq!(mutual_information(&indep), 0.0);
        let diag = JointXY::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        close(mutual_information(&diag), 1.0, 1e-15);
        let j = JointXY::new(vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        // 2·0.4·log2(1.6) + 2·0.1·log2(0.4)
        let direct = 0.8 * 1.6f64.log2() + 0.2 * 0.4f64.log2();
        close(mutual_information(&j), direct, 1e-15);
        close(mutual_information(&j), 0.2781, 1e-4);
    }

    #[test]
    fn model_info_identity_and_constant_channels() {
        let p_x = FiniteDist::new(vec![0.2, 0.3, 0.5]).unwrap();
        let pyx = CondDist::new(vec![vec![0.9, 0.1], vec![0.4, 0.6], vec![0.1, 0.9]]).unwrap();
        let ident = FullModel::new(p_x.clone(), pyx.clone(), CondDist::identity(3)).unwrap();
        let r = model_info(&ident);
        close(r.i_xz, r.h_x, 1e-12);
        close(r.i_yz, r.i_xy, 1e-12);
        close(r.i_yz_given_x, 0.0, 1e-12);

        let flat = FiniteDist::new(vec![0.3, 0.7]).unwrap();
        let constant = FullModel::new(p_x, pyx, CondDist::constant(3, &flat)).unwrap();
        let r = model_info(&constant);
        close(r.i_xz, 0.0, 1e-12);
        close(r.i_yz, 0.0, 1e-12);
    }

    #[test]
    fn kl_examples() {
        let p = FiniteDist::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let a = FiniteDist::new(vec![1.0, 0.0]).unwrap();
        let u = FiniteDist::uniform(2);
        close(kl_divergence(&a, &u).unwrap(), std::f64::consts::LN_2, 1e-15);
        assert!(matches!(
            kl_divergence(&u, &a),
            Err(Error::SupportMismatch(_))
        ));
    }

    #[test]
    fn conditional_tv_examples() {
        let p_x = FiniteDist::point_mass(1, 0);
        let p = CondDist::new(vec![vec![0.8, 0.2]]).unwrap();
        let q = CondDist::new(vec![vec![0.6, 0.4]]).unwrap();
        assert_eq!(conditional_total_variation(&p_x, &p, &p).unwrap(), 0.0);
        close(conditional_total_variation(&p_x, &p, &q).unwrap(), 0.2, 1e-15);

        let px2 = FiniteDist::new(vec![0.4, 0.6]).unwrap();
        let a = CondDist::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.5, 0.5]]).unwrap();
        let b = CondDist::new(vec![vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0]]).unwrap();
        close(conditional_total_variation(&px2, &a, &b).unwrap(), 1.0, 1e-15);

        let bad = CondDist::uniform(2, 2);
        assert!(matches!(
            conditional_total_variation(&px2, &a, &bad),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn cross_entropy_examples() {
        let p_x = FiniteDist::new(vec![0.5, 0.5]).unwrap();
        let truth = CondDist::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(conditional_cross_entropy(&p_x, &truth, &truth).unwrap(), 0.0);
        let half = CondDist::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        close(
            conditional_cross_entropy(&p_x, &truth, &half).unwrap(),
            std::f64::consts::LN_2,
            1e-15,
        );
        let wrong = CondDist::new(vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            conditional_cross_entropy(&p_x, &truth, &wrong),
            Err(Error::SupportMismatch(_))
        ));
    }

    #[test]
    fn fano_examples() {
        assert_eq!(fano_error_lower_bound(1.0, 1.0, 2).unwrap(), 0.0);
        let pe = fano_error_lower_bound(10f64.log2(), 0.0, 10).unwrap();
        close(pe, 0.9, 1e-12);

        // dense-grid oracle for h2(P) = 0.5 on [0, 1/2]
        let pe = fano_error_lower_bound(1.0, 0.5, 2).unwrap();
        let n = 2_000_000;
        let grid = (0..=n)
            .map(|i| 0.5 * i as f64 / n as f64)
            .find(|&t| h2(t) >= 0.5)
            .unwrap();
        close(pe, grid, 0.5 / n as f64 + 1e-12);
        close(h2(pe), 0.5, 1e-9);
    }

    #[test]
    fn fano_domain_errors() {
        assert!(fano_error_lower_bound(1.0, 0.5, 1).is_err());
        assert!(fano_error_lower_bound(1.0, 1.5, 2).is_err());
        assert!(fano_error_lower_bound(1.0, -0.5, 2).is_err());
        assert!(fano_error_lower_bound(3.0, 0.0, 2).is_err());
    }
}
