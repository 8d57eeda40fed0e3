//! End-to-end acceptance checks, one PASS/FAIL line per criterion.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use infoloss::bounds::{default_m_prime_max, pinsker_delta_bound, thm4_tail_bound, KModel};
use infoloss::coupling::{build_coupling, verify_coupling};
use infoloss::experiment::{run_stability, run_tail_experiment, ExperimentConfig, StabilityConfig};
use infoloss::figure::read_curve_csv;
use infoloss::ib::{type2_loss_measured, ALIGN_SLACK};
use infoloss::info::{conditional_cross_entropy, conditional_total_variation};
use infoloss::lab::{plugin_learner, run_trials};
use infoloss::rng::{derive_seed, rng_from_seed};
use infoloss::verify::{gibbs_suite, jensen_suite, random_cond, random_model_pair, random_px, thm1_exhaustive};
use infoloss::{CondDist, ModelFile};
use rand::Rng;

const BIN: &str = env!("CARGO_BIN_EXE_infoloss");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn within(elapsed: Duration, limit: Duration) -> (bool, String) {
    (elapsed <= limit, format!("{:.2}s of {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

fn infoloss(out: &Path, args: &[&str]) -> std::process::Output {
    Command::new(BIN)
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("INFOLOSS_OUT")
        .output()
        .expect("binary runs")
}

fn series_value(csv: &Path, series: &str, x: f64) -> Option<f64> {
    let pts = read_curve_csv(std::fs::File::open(csv).ok()?).ok()?;
    pts.iter().find(|p| p.series == series && (p.i_xz - x).abs() < 1e-9).map(|p| p.value)
}

fn c1_figures() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let out = infoloss(dir.path(), &["fig", "toy"]);
    let (fast, timing) = within(t.elapsed(), Duration::from_secs(1));
    if !out.status.success() {
        return outcome(false, format!("fig toy exited {:?}", out.status.code()));
    }
    let new = dir.path().join("toy_low_entropy_new.csv");
    let old = dir.path().join("toy_low_entropy_old.csv");
    let high = dir.path().join("toy_high_entropy_new.csv");
    let origin = series_value(&new, "I(Y;Z*)", 0.0);
    let at21 = series_value(&new, "10000", 21.0).unwrap_or(f64::NAN);
    let at5 = series_value(&old, "10000", 5.0).unwrap_or(f64::NAN);
    let exact21 = 3.32 - 3.32 * (-4.2f64).exp() - 0.42 - 0.2;
    let exact5 = 3.32 - 3.32 * (-1.0f64).exp() - 0.03 * 32.0;
    let round4 = |v: f64| (v * 1e4).round() / 1e4;
    let pass = fast
        && high.exists()
        && origin == Some(0.0)
        && (at21 - exact21).abs() <= 1e-9
        && (at5 - exact5).abs() <= 1e-9
        && round4(at21) == 2.6502
        && round4(at5) == 1.1386;
    outcome(
        pass,
        format!("I*(0)={origin:?} m=10000@21={at21:.10} old@5={at5:.10} ({timing})"),
    )
}

fn c2_type1_suite() -> Outcome {
    let t = Instant::now();
    let r = thm1_exhaustive(2000, 8);
    let (fast, timing) = within(t.elapsed(), Duration::from_secs(30));
    match r {
        Ok(s) => outcome(
            fast && s.violations == 0 && s.instances == 2000,
            format!("{} models, {} violations, tightest ratio {:.6} ({timing})", s.instances, s.violations, s.tightest_ratio),
        ),
        Err(e) => outcome(false, format!("counterexample: {e}")),
    }
}

fn c3_coupling() -> Outcome {
    let t = Instant::now();
    let mut failures = 0;
    for i in 0..1000u64 {
        let (model, q) = random_model_pair(derive_seed(0xc0, i), 8, i % 2 == 1);
        let c = build_coupling(&model.p_x, &model.p_y_given_x, &q).unwrap();
        let rep = verify_coupling(&c, &model.p_x, &model.p_y_given_x, &q);
        if !(rep.passed && rep.checks.len() == 4) {
            failures += 1;
        }
    }
    let (fast, timing) = within(t.elapsed(), Duration::from_secs(10));
    outcome(fast && failures == 0, format!("1000 triples, {failures} failing ({timing})"))
}

fn c4_pinsker() -> Outcome {
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..1000u64 {
        let mut rng = rng_from_seed(derive_seed(0x9157, i));
        let nx = rng.random_range(1..=8);
        let ny = rng.random_range(2..=8);
        let p_x = random_px(&mut rng, nx);
        let truth = CondDist::new(
            (0..nx)
                .map(|_| {
                    let y = rng.random_range(0..ny);
                    (0..ny).map(|k| if k == y { 1.0 } else { 0.0 }).collect()
                })
                .collect(),
        )
        .unwrap();
        let est = random_cond(&mut rng, nx, ny, false);
        let tv = conditional_total_variation(&p_x, &truth, &est).unwrap();
        let ce = conditional_cross_entropy(&p_x, &truth, &est).unwrap();
        let gap = tv - pinsker_delta_bound(ce).unwrap();
        worst = worst.max(gap);
        if gap > 1e-12 {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("1000 models, {violations} violations, max(tv - bound) = {worst:.3e}"))
}

fn c5_oracles() -> Outcome {
    let t = Instant::now();
    let gibbs = gibbs_suite(1000, 200, 5).unwrap();
    let jensen = jensen_suite(100_000, 5).unwrap();
    let (fast, timing) = within(t.elapsed(), Duration::from_secs(60));
    let gap = gibbs.worst.as_ref().map_or(0.0, |w| w.gap);
    let example = jensen
        .worst
        .as_ref()
        .filter(|_| jensen.violations > 0)
        .map(|w| format!("; worst: lhs {:.4} > rhs {:.4} at {}", w.lhs, w.rhs, w.instance))
        .unwrap_or_default();
    outcome(
        fast && gibbs.pass && jensen.pass,
        format!(
            "gibbs {}/{} pass (max gap {gap:.2e}); jensen {} violations of {}{example} ({timing})",
            gibbs.instances - gibbs.violations,
            gibbs.instances,
            jensen.violations,
            jensen.instances
        ),
    )
}

fn c6_type2_frontier() -> Outcome {
    let joint = ModelFile::load(configs().join("demo_2x2.json")).unwrap().joint_xy().unwrap();
    let est = ModelFile::load(configs().join("demo_2x2_estimate.json")).unwrap().label_conditional().unwrap();
    let betas: Vec<f64> = (0..=64).map(|i| i as f64 * 0.25).chain([20.0, 32.0, 64.0]).collect();
    let pts = match type2_loss_measured(&joint, &est, &betas, 2, 5, 1) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut worst = f64::NEG_INFINITY;
    let mut bad = 0;
    for p in &pts {
        let slack = p.frontier_bound().unwrap() + ALIGN_SLACK - p.loss2;
        worst = worst.max(-slack);
        if slack < 0.0 {
            bad += 1;
        }
    }
    outcome(
        bad == 0 && !pts.is_empty(),
        format!("{} aligned frontier points, {bad} above bound, max(loss - bound) = {worst:.4}", pts.len()),
    )
}

fn c7_tail() -> Outcome {
    let t = Instant::now();
    let cfg = ExperimentConfig::load(configs().join("tail.json")).unwrap();
    let model = cfg.load_model().unwrap();
    let (report, _) = run_tail_experiment(&cfg, &model).unwrap();
    let (fast, timing) = within(t.elapsed(), Duration::from_secs(300));
    let rates: Vec<f64> = report.tails.iter().map(|e| e.freq.ln() / e.m as f64).collect();
    let monotone = rates.windows(2).all(|w| w[1] <= w[0]);
    let zeta_zero = report.zeta.iter().all(|&z| z == 0.0);
    let under_fitted = report.tails.iter().zip(&report.thm4).all(|(e, b)| e.freq <= b.bound);
    let zero_k: Vec<f64> = report
        .tails
        .iter()
        .map(|e| {
            let m = e.m as u64;
            thm4_tail_bound(m, model.y_card(), cfg.eps, 0.0, &KModel::ZERO, default_m_prime_max(m)).unwrap().bound
        })
        .collect();
    let sci = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ");
    let freqs: Vec<f64> = report.tails.iter().map(|e| e.freq).collect();
    let fitted: Vec<f64> = report.thm4.iter().map(|b| b.bound).collect();
    outcome(
        fast && monotone && zeta_zero && under_fitted && report.thm4.len() == report.tails.len(),
        format!(
            "freq [{}], rate {rates:.4?}, bound with fitted k_c={:.3} r={:.3} [{}], bound with k=0 [{}] ({timing})",
            sci(&freqs),
            report.k_model.k_c,
            report.k_model.r,
            sci(&fitted),
            sci(&zero_k)
        ),
    )
}

fn c8_convergence() -> Outcome {
    let model = ModelFile::load(configs().join("model_4x3.json")).unwrap().to_model().unwrap();
    let learner = plugin_learner(0.0).unwrap();
    let stats: Vec<(usize, f64, f64)> = [50, 200, 800]
        .iter()
        .map(|&m| {
            let recs = run_trials(&model, &learner, m, 500, 8080).unwrap();
            let n = recs.len() as f64;
            let mean = recs.iter().map(|r| r.delta_bar).sum::<f64>() / n;
            let var = recs.iter().map(|r| (r.delta_bar - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (m, mean, (var / n).sqrt())
        })
        .collect();
    let separated = stats
        .windows(2)
        .all(|w| w[0].1 - w[1].1 > 3.0 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt());
    let text: Vec<String> = stats.iter().map(|(m, mu, se)| format!("m={m}: {mu:.4}±{se:.4}")).collect();
    outcome(separated, text.join(", "))
}

fn c9_stability() -> Outcome {
    let cfg = StabilityConfig::load(configs().join("stability.json")).unwrap();
    let model = ModelFile::load(&cfg.model).unwrap().to_model().unwrap();
    let report = run_stability(&cfg, &model).unwrap();
    let ladder = &report.ladder;
    let halving_ok = ladder.windows(2).all(|w| w[1].delta_tv <= w[0].delta_tv + 1e-9);
    let last = ladder.last().map_or(f64::NAN, |s| s.delta_tv);
    outcome(
        halving_ok && report.monotone && ladder.len() == 7 && last < 1e-3,
        format!(
            "{} rungs, first {:.3e}, smallest {last:.3e}",
            ladder.len(),
            ladder.first().map_or(f64::NAN, |s| s.delta_tv)
        ),
    )
}

fn c10_determinism() -> Outcome {
    let runs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    let tail = configs().join("tail.json");
    let stab = configs().join("stability.json");
    let demo = configs().join("demo_2x2.json");
    let est = configs().join("demo_2x2_estimate.json");
    for d in &runs {
        let cmds: Vec<Vec<&str>> = vec![
            vec!["lab", "tail", "--config", tail.to_str().unwrap()],
            vec!["lab", "stability", "--config", stab.to_str().unwrap()],
            vec!["ib", "curve", "--model", demo.to_str().unwrap(), "--est", est.to_str().unwrap()],
            vec!["fig", "toy"],
            vec!["fig", "bound"],
        ];
        for c in cmds {
            let o = infoloss(d.path(), &c);
            if !o.status.success() {
                return outcome(false, format!("{c:?} exited {:?}", o.status.code()));
            }
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(runs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let differing: Vec<String> = names
        .iter()
        .filter(|n| std::fs::read(runs[0].path().join(n)).ok() != std::fs::read(runs[1].path().join(n)).ok())
        .map(|n| n.to_string_lossy().into_owned())
        .collect();
    outcome(
        differing.is_empty() && names.len() >= 8,
        format!("{} files compared, differing: {differing:?}", names.len()),
    )
}

#[test]
fn acceptance() {
    type Check = (&'static str, fn() -> Outcome);
    let criteria: [Check; 10] = [
        ("figure reproduction", c1_figures),
        ("type-1 loss bound suite", c2_type1_suite),
        ("coupling suite", c3_coupling),
        ("Pinsker suite", c4_pinsker),
        ("variational and Jensen oracles", c5_oracles),
        ("type-2 loss bound", c6_type2_frontier),
        ("tail-bound consistency", c7_tail),
        ("convergence sanity", c8_convergence),
        ("stability probe", c9_stability),
        ("determinism", c10_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!("{} criterion {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
