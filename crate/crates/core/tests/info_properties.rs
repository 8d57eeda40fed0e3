mod common;

use common::*;
use infoloss::info::{
    binary_entropy, conditional_cross_entropy, conditional_total_variation, entropy,
    fano_error_lower_bound, fano_lhs, kl_divergence, model_info, mutual_information,
};
use infoloss::{FiniteDist, FullModel, JointXY};
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * b.abs().max(1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn data_processing_holds((model, _q) in model_pair(6)) {
        let r = model_info(&model);
        prop_assert!(r.i_yz <= r.i_xz + 1e-12);
        prop_assert!(r.i_yz <= r.i_xy + 1e-12);
        prop_assert!(r.i_yz_given_x.abs() <= 1e-12);
        prop_assert!(r.i_xz <= r.h_x + 1e-12);
    }

    #[test]
    fn model_info_matches_compensated_oracle((model, _q) in model_pair(6)) {
        let r = model_info(&model);
        prop_assert!(close(r.i_yz, i_yz(&model)), "I(Y;Z) {} vs {}", r.i_yz, i_yz(&model));
        prop_assert!(close(r.i_xz, i_xz(&model)));
        let (xy, a, b) = pair_table(&model, (0, 1));
        prop_assert!(close(r.i_xy, mi_dd(&xy, a, b)));
        prop_assert!(close(r.h_x, entropy_dd(model.p_x.probs())));
        let py: Vec<f64> = (0..b).map(|y| (0..a).map(|x| xy[x * b + y]).sum()).collect();
        prop_assert!(close(r.h_y, entropy_dd(&py)));
    }

    #[test]
    fn mutual_information_is_symmetric(p in probs(12)) {
        let j = JointXY::from_flat(3, 4, p.clone()).unwrap();
        let mut t = vec![0.0; 12];
        for x in 0..3 {
            for y in 0..4 {
                t[y * 3 + x] = p[x * 4 + y];
            }
        }
        let jt = JointXY::from_flat(4, 3, t).unwrap();
        prop_assert!((mutual_information(&j) - mutual_information(&jt)).abs() < 1e-12);
        prop_assert!(mutual_information(&j) >= -1e-12);
    }

    #[test]
    fn entropy_bounded_by_log_alphabet(p in probs(7)) {
        let h = entropy(&FiniteDist::new(p.clone()).unwrap());
        prop_assert!(h >= 0.0 && h <= 7f64.log2() + 1e-12);
        prop_assert!(close(h, entropy_dd(&p)));
    }

    #[test]
    fn pinsker_inequality(p in probs(5), q in full_support(5)) {
        let pd = FiniteDist::new(p.clone()).unwrap();
        let qd = FiniteDist::new(q.clone()).unwrap();
        let kl = kl_divergence(&pd, &qd).unwrap();
        let tv: f64 = 0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>();
        prop_assert!(kl >= -1e-12);
        prop_assert!(tv <= (kl / 2.0).sqrt() + 1e-12);
    }

    #[test]
    fn binary_entropy_symmetric(t in 0.0..=1.0f64) {
        let a = binary_entropy(t).unwrap();
        let b = binary_entropy(1.0 - t).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((a - h2(t)).abs() < 1e-12);
        prop_assert!(a <= 1.0 + 1e-15);
    }

    #[test]
    fn fano_equality_case(k in 2usize..8, p_err in 0.0..1.0f64) {
        let p_err = p_err * (1.0 - 1.0 / k as f64);
        // Y | Z=z puts 1 − P on z and P/(k−1) elsewhere; Z uniform.
        let mut t = vec![0.0; k * k];
        for z in 0..k {
            for y in 0..k {
                let c = if y == z { 1.0 - p_err } else { p_err / (k - 1) as f64 };
                t[y * k + z] = c / k as f64;
            }
        }
        let i = mi_dd(&t, k, k);
        let h_y = (k as f64).log2();
        prop_assert!((fano_lhs(p_err, k) - (h_y - i)).abs() < 1e-9);
        let lb = fano_error_lower_bound(h_y, i.max(0.0), k).unwrap();
        prop_assert!((lb - p_err).abs() < 1e-9, "bound {lb} vs {p_err}");
    }

    #[test]
    fn cross_entropy_splits_into_entropy_plus_kl((model, _q) in model_pair(5), seed in any::<u64>()) {
        let q = infoloss::verify::random_cond(&mut infoloss::rng::rng_from_seed(seed), model.x_card(), model.y_card(), false);
        let ce = conditional_cross_entropy(&model.p_x, &model.p_y_given_x, &q).unwrap();
        let mut h = 0.0;
        let mut kl = 0.0;
        for x in 0..model.x_card() {
            let row = FiniteDist::new(model.p_y_given_x.row(x).to_vec()).unwrap();
            h += model.p_x[x] * entropy(&row) * std::f64::consts::LN_2;
            kl += model.p_x[x] * kl_divergence(&row, &FiniteDist::new(q.row(x).to_vec()).unwrap()).unwrap();
        }
        prop_assert!((ce - h - kl).abs() < 1e-9);
        let tv = conditional_total_variation(&model.p_x, &model.p_y_given_x, &q).unwrap();
        prop_assert!((tv - delta_bar(&model, &q)).abs() < 1e-12);
        prop_assert!(tv <= (kl / 2.0).sqrt() + 1e-12);
    }
}

#[test]
fn binary_entropy_rejects_outside_unit_interval() {
    assert!(binary_entropy(-0.1).is_err());
    assert!(binary_entropy(1.5).is_err());
    assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
}

#[test]
fn independent_channel_carries_no_information() {
    let px = FiniteDist::new(vec![0.2, 0.3, 0.5]).unwrap();
    let p = infoloss::CondDist::new(vec![vec![0.5, 0.5], vec![0.1, 0.9], vec![0.7, 0.3]]).unwrap();
    let ch = infoloss::CondDist::uniform(3, 4);
    let r = model_info(&FullModel::new(px, p, ch).unwrap());
    assert!(r.i_xz.abs() < 1e-15 && r.i_yz.abs() < 1e-15);
}

#[test]
fn identity_channel_gives_full_information() {
    let px = FiniteDist::new(vec![0.25; 4]).unwrap();
    let p = infoloss::CondDist::identity(4);
    let r = model_info(&FullModel::new(px, p, infoloss::CondDist::identity(4)).unwrap());
    assert!((r.i_xz - 2.0).abs() < 1e-12);
    assert!((r.i_yz - 2.0).abs() < 1e-12);
}
