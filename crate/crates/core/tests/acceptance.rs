//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use common::steck_oracle;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_fdr::grid::{linspace, run_grid, GridConfig, Procedure};
use sparse_fdr::model::{calibrate, CanonicalParams, ModelKind, ModelSpec, Sparsity};
use sparse_fdr::risk::*;
use sparse_fdr::simulate::{mc_risk, null_fdp, RiskKind, SimConfig, ThresholdRule};
use sparse_fdr::threshold::*;
use sparse_fdr::SubbotinShape;

struct Outcome {
    ok: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f(lo) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn laplace_scale_params(tau: f64, c: f64) -> ModelSpec {
    let p = CanonicalParams::new(Sparsity::Tau(tau), c);
    calibrate(ModelKind::Scale, SubbotinShape::laplace(), p, 0).unwrap()
}

fn c1_laplace_calibration() -> Outcome {
    let start = Instant::now();
    let model = laplace_scale_params(2.0, 0.5);
    let elapsed = start.elapsed();
    let ln2 = 2f64.ln();
    let root = bisect(|s| s * ln2 - s.ln() - 2.0 * ln2, 1.5, 100.0);
    let sigma = model.effect();
    let ok = (sigma - root).abs() <= 1e-6 && (root - 4.0).abs() <= 1e-9 && elapsed < Duration::from_millis(1);
    outcome(ok, format!("sigma = {sigma:.12}, independent root = {root:.12}, {elapsed:?}"))
}

fn c2_alpha_opt() -> Outcome {
    let start = Instant::now();
    let a = alpha_opt(OptFamily::GaussianLocation, 1_000_000, 0.5, 0.5).unwrap();
    let elapsed = start.elapsed();
    let ok = (0.165..=0.175).contains(&a) && elapsed < Duration::from_millis(10);
    outcome(ok, format!("alpha_opt = {a:.6}, {elapsed:?}"))
}

fn c3_optimal_recovery() -> Outcome {
    let m: f64 = 1000.0;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for tau in [2.0, 5.0, 10.0, m.powf(0.5)] {
        for c in [0.2, 0.5, 0.8] {
            let model = laplace_scale_params(tau, c);
            let q = q_opt(&model);
            let t = bfdr_threshold(&model, alpha_from_q(q)).unwrap().value;
            let e = bfdr_risk(&model, alpha_from_q(q)).unwrap().excess_rel;
            worst.0 = worst.0.max((q - model.effect()).abs());
            worst.1 = worst.1.max((t - model.bayes_threshold()).abs());
            worst.2 = worst.2.max(e.abs());
        }
    }
    let ok = worst.0 <= 1e-8 && worst.1 <= 1e-8 && worst.2 <= 1e-8;
    outcome(
        ok,
        format!("max |q_opt - sigma| = {:.2e}, max |t* - tB| = {:.2e}, max |E| = {:.2e}", worst.0, worst.1, worst.2),
    )
}

fn c4_exact_fdr_vs_monte_carlo() -> Outcome {
    let start = Instant::now();
    let g = SubbotinShape::gaussian();
    let loc = calibrate(ModelKind::Location, g, CanonicalParams::new(Sparsity::Tau(3.0), 0.5), 0).unwrap();
    let sc = calibrate(ModelKind::Scale, g, CanonicalParams::new(Sparsity::Tau(4.0), 0.6), 0).unwrap();
    let models = [
        ("laplace-scale", ModelSpec::scale(SubbotinShape::laplace(), 2.0, 4.0).unwrap()),
        ("gaussian-location", loc),
        ("gaussian-scale", sc),
    ];
    let mut ok = true;
    let mut worst_z: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;
    let mut misses = Vec::new();
    for (name, model) in models {
        for m in [1, 2, 3, 5] {
            for alpha in [0.1, 0.3] {
                let exact = exact_fdr_risk(&model, m, alpha).unwrap().risk;
                let config = SimConfig {
                    model,
                    m,
                    replicates: 1_000_000,
                    seed: 20120901,
                    risk_kind: RiskKind::Inductive,
                };
                let mc = mc_risk(&config, ThresholdRule::Fdr(alpha)).unwrap();
                let diff = (mc.mean - exact).abs();
                // bound on the roundoff of summing the replicate losses
                let roundoff = config.replicates as f64 * f64::EPSILON * mc.mean.abs();
                let within = diff <= 3.0 * mc.se + roundoff;
                if mc.se > roundoff {
                    worst_z = worst_z.max(diff / mc.se);
                }
                if !within {
                    misses.push(format!("{name} m={m} alpha={alpha}: exact {exact:.6} mc {:.6} se {:.1e}", mc.mean, mc.se));
                }
                ok &= within;
                if m == 1 {
                    let closed = model.pi0() * alpha + model.pi1() * (1.0 - model.alt_cdf(alpha).unwrap());
                    worst_closed = worst_closed.max((exact - closed).abs());
                }
                if m == 2 {
                    // k̂ = 2 iff both p-values are below α; otherwise the cutoff is α/2
                    let g = |t: f64| model.pi0() * t + model.pi1() * model.alt_cdf(t).unwrap();
                    let both = g(alpha).powi(2);
                    let closed = both * risk_det(&model, alpha).unwrap()
                        + (1.0 - both) * risk_det(&model, alpha / 2.0).unwrap();
                    worst_closed = worst_closed.max((exact - closed).abs());
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ok &= worst_closed <= 1e-12 && elapsed < Duration::from_secs(300);
    let mut detail = format!(
        "24 cells, max |z| over random cells = {worst_z:.2}, m <= 2 closed-form gap {worst_closed:.1e}, {elapsed:.1?}"
    );
    for miss in misses {
        detail.push_str(&format!("\n    outside 3 SE: {miss}"));
    }
    outcome(ok, detail)
}

fn c5_steck() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_oracle: f64 = 0.0;
    for n in 1..=6 {
        for _ in 0..200 {
            let mut k: Vec<i64> = (0..n).map(|_| rng.random_range(0..=1000)).collect();
            k.sort();
            let exact: Vec<BigRational> = k.iter().map(|&v| BigRational::new(v.into(), 1000.into())).collect();
            let floats: Vec<f64> = k.iter().map(|&v| v as f64 / 1000.0).collect();
            let psi = steck_prefix(&floats).unwrap()[n];
            worst_oracle = worst_oracle.max((psi - steck_oracle(&exact).to_f64().unwrap()).abs());
        }
    }
    let mut worst_power: f64 = 0.0;
    for t in [0.05, 0.3, 0.5, 0.77, 0.95, 1.0] {
        let psi = steck_prefix(&[t; 200]).unwrap();
        for (k, v) in psi.iter().enumerate() {
            worst_power = worst_power.max((v - t.powi(k as i32)).abs());
        }
    }
    let mut worst_sum: f64 = 0.0;
    let models = [
        ModelSpec::scale(SubbotinShape::laplace(), 2.0, 4.0).unwrap(),
        ModelSpec::location(SubbotinShape::gaussian(), 5.0, 3.0).unwrap(),
        ModelSpec::scale(SubbotinShape::new(3.0).unwrap(), 20.0, 3.0).unwrap(),
    ];
    for model in models {
        for m in 1..=200 {
            for alpha in [0.05, 0.3, 0.8] {
                let s: f64 = fdr_khat_distribution(&model, m, alpha).unwrap().iter().sum();
                worst_sum = worst_sum.max((s - 1.0).abs());
            }
        }
    }
    let ok = worst_oracle <= 1e-10 && worst_power <= 1e-12 && worst_sum <= 1e-9;
    outcome(
        ok,
        format!("oracle gap {worst_oracle:.1e}, t^k gap {worst_power:.1e}, partition gap {worst_sum:.1e}"),
    )
}

fn lattice() -> Vec<(ModelKind, f64)> {
    let mut v = vec![(ModelKind::Scale, 1.0)];
    for z in [1.5, 2.0, 3.0] {
        v.push((ModelKind::Location, z));
        v.push((ModelKind::Scale, z));
    }
    v
}

fn c6_inequality_suite() -> Outcome {
    let start = Instant::now();
    let slack = 1e-10;
    let mut checks = 0usize;
    let mut violations = Vec::new();
    let mut applicable = [0usize; 3];
    let mut cells = 0usize;
    let mut check = |ok: bool, what: String| {
        checks += 1;
        if !ok {
            violations.push(what);
        }
    };
    for (kind, z) in lattice() {
        let shape = SubbotinShape::new(z).unwrap();
        for beta in [0.2, 0.5, 0.8] {
            for c in [0.3, 0.5, 0.7] {
                for m in [25usize, 100, 1000] {
                    let model = calibrate(kind, shape, CanonicalParams::new(Sparsity::Beta(beta), c), m).unwrap();
                    let own = alpha_from_q(q_opt(&model));
                    let opt = alpha_opt_general(kind, shape, m, 0.5, 0.5).unwrap();
                    let bayes = bayes_risk(&model);
                    for alpha in [0.05, 0.1, 0.25, opt, own] {
                        cells += 1;
                        let tag = format!("{kind} zeta={z} beta={beta} C={c} m={m} alpha={alpha:.4}");
                        let ex = bfdr_excess(&model, alpha).unwrap();
                        check(bound_thm31_upper(&model, alpha).unwrap() >= ex - slack, format!("BFDR upper: {tag}"));
                        let t = bfdr_threshold(&model, alpha).unwrap().value;
                        let ratio = risk_det(&model, t).unwrap() / bayes;
                        check(bound_thm31_lower(&model, alpha).unwrap() <= ratio + slack, format!("BFDR lower: {tag}"));
                        let fdr_ex = exact_fdr_risk(&model, m, alpha).unwrap().risk - bayes;
                        let params = BoundParams::default();
                        check(
                            bound_thm32_upper(&model, m, alpha, &params).unwrap() >= fdr_ex - slack,
                            format!("FDR upper: {tag}"),
                        );
                        if let Some(b) = bound_cor41(&model, m, alpha, &params, BoundTarget::Bfdr).unwrap() {
                            applicable[0] += 1;
                            check(b >= ex - slack, format!("BFDR rate: {tag}"));
                        }
                        for (i, case_a) in [CorollaryCase::One, CorollaryCase::Two].into_iter().enumerate() {
                            let p = BoundParams { case_a, ..params };
                            if let Some(b) = bound_cor41(&model, m, alpha, &p, BoundTarget::Fdr).unwrap() {
                                applicable[1 + i] += 1;
                                check(b >= fdr_ex - slack, format!("FDR rate case {}: {tag}", i + 1));
                            }
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = violations.is_empty() && elapsed < Duration::from_secs(600);
    let mut detail = format!(
        "{cells} cells, {checks} inequalities, {} violations; rate bounds applicable: BFDR {}, FDR case 1 {}, FDR case 2 {}; {elapsed:.1?}",
        violations.len(),
        applicable[0],
        applicable[1],
        applicable[2]
    );
    for v in violations.iter().take(10) {
        detail.push_str(&format!("\n    {v}"));
    }
    outcome(ok, detail)
}

fn c7_moderate_sample_endpoint() -> Outcome {
    let m = 1000;
    let g = SubbotinShape::gaussian();
    let alpha = alpha_opt(OptFamily::GaussianLocation, m, 0.5, 0.5).unwrap();
    let mut worst: f64 = f64::NEG_INFINITY;
    for c in linspace(0.5, 0.7, 21) {
        let model = calibrate(ModelKind::Location, g, CanonicalParams::new(Sparsity::Beta(0.7), c), m).unwrap();
        worst = worst.max(bfdr_risk(&model, alpha).unwrap().excess_rel);
    }
    let bound = 2.66 / (m as f64).ln().sqrt();
    let ok = worst <= 0.1 && (bound - 1.01).abs() <= 0.01;
    outcome(ok, format!("alpha = {alpha:.5}, max BFDR excess over C in [0.5, 0.7] = {worst:.4}, 2.66/sqrt(ln 1000) = {bound:.4}"))
}

fn c8_heatmap_trend() -> Outcome {
    let start = Instant::now();
    let config = GridConfig {
        procedures: vec![Procedure::Fdr(LevelRule::OptAt { beta0: 0.5, c0: 0.5 })],
        ..GridConfig::default()
    };
    let out = run_grid(&config, Some(1)).unwrap();
    let elapsed = start.elapsed();
    let fractions: Vec<f64> = out.summary.iter().map(|s| s.fraction()).collect();
    let monotone = fractions.windows(2).all(|w| w[0] <= w[1]);
    let centre: Vec<(usize, f64)> = out
        .rows
        .iter()
        .filter(|r| (r.beta - 0.5).abs() < 1e-12 && (r.c - 0.5).abs() < 1e-12)
        .map(|r| (r.m, r.excess_rel.unwrap_or(f64::NAN)))
        .collect();
    let centre_ok = centre.len() == 3 && centre.iter().filter(|(m, _)| *m >= 100).all(|(_, e)| *e <= 0.1);
    let ok = monotone && centre_ok && out.failures() == 0 && elapsed < Duration::from_secs(1800);
    let fr: Vec<String> = out.summary.iter().map(|s| format!("m={}: {:.4}", s.m, s.fraction())).collect();
    let ce: Vec<String> = centre.iter().map(|(m, e)| format!("m={m}: {e:.4}")).collect();
    outcome(
        ok,
        format!("fractions [{}], E at (0.5, 0.5) [{}], failures {}, {elapsed:.1?} on one thread", fr.join(", "), ce.join(", "), out.failures()),
    )
}

fn c9_special_functions() -> Outcome {
    let mut worst_roundtrip: f64 = 0.0;
    for z in [1.0, 1.5, 2.0, 3.0] {
        let s = SubbotinShape::new(z).unwrap();
        for i in 0..=400 {
            let lp = -27.6 + (27.6 - std::f64::consts::LN_2) * i as f64 / 400.0;
            for p in [lp.exp(), 1.0 - lp.exp()] {
                let back = s.upper_tail(s.quantile(p).unwrap()).unwrap();
                worst_roundtrip = worst_roundtrip.max(((back - p) / p).abs());
            }
        }
    }
    let mut worst_closed: f64 = 0.0;
    for s in [SubbotinShape::laplace(), SubbotinShape::gaussian()] {
        for i in 0..=940 {
            let u = -10.0 + 0.05 * i as f64;
            let closed = s.upper_tail(u).unwrap();
            let general = s.upper_tail_general(u).unwrap();
            worst_closed = worst_closed.max(((closed - general) / closed).abs());
        }
    }
    let ok = worst_roundtrip <= 1e-10 && worst_closed <= 1e-12;
    outcome(ok, format!("roundtrip rel gap {worst_roundtrip:.1e}, closed-form rel gap {worst_closed:.1e}"))
}

fn c10_simulation_sanity() -> Outcome {
    let fdp = null_fdp(100, 100_000, 10, 0.1).unwrap();
    let fdp_ok = fdp.mean <= 0.1 + 3.0 * fdp.se;
    let model = ModelSpec::scale(SubbotinShape::laplace(), 2.0, 4.0).unwrap();
    let t = bayes_threshold(&model).value;
    let mut config = SimConfig {
        model,
        m: 50,
        replicates: 20_000,
        seed: 10,
        risk_kind: RiskKind::Inductive,
    };
    let inductive = mc_risk(&config, ThresholdRule::Fixed(t)).unwrap();
    config.risk_kind = RiskKind::Transductive;
    let transductive = mc_risk(&config, ThresholdRule::Fixed(t)).unwrap();
    let agree = transductive.covers(inductive.mean, 3.0);
    let again = mc_risk(&config, ThresholdRule::Fdr(0.2)).unwrap();
    let rerun = mc_risk(&config, ThresholdRule::Fdr(0.2)).unwrap();
    let identical = again.mean.to_bits() == rerun.mean.to_bits() && again.se.to_bits() == rerun.se.to_bits();
    outcome(
        fdp_ok && agree && identical,
        format!(
            "null FDP {:.4} (se {:.1e}) at alpha 0.1; R^T {:.5} (se {:.1e}) vs R^I {:.5}; rerun identical: {identical}",
            fdp.mean, fdp.se, transductive.mean, transductive.se, inductive.mean
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Laplace-scale calibration", c1_laplace_calibration),
        ("optimal level at m = 1e6", c2_alpha_opt),
        ("optimal-recovery identity", c3_optimal_recovery),
        ("exact FDR risk vs Monte Carlo", c4_exact_fdr_vs_monte_carlo),
        ("order-statistic recursion", c5_steck),
        ("inequality suite", c6_inequality_suite),
        ("moderate-sample BFDR endpoint", c7_moderate_sample_endpoint),
        ("excess-risk heatmap trend", c8_heatmap_trend),
        ("special functions", c9_special_functions),
        ("simulation sanity", c10_simulation_sanity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.ok { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} {name} [{:.2?}]: {}", i + 1, start.elapsed(), o.detail);
        if !o.ok {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
