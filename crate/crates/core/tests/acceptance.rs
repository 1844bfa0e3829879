//! Acceptance suite: one pass/fail line per criterion, exit status 1 if any fails.
//!
//! Run with `cargo test -p swe-lab --test acceptance`. It has no test
//! harness, so the lines go straight to stdout.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::{rel_close, segment_energy_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use swe_lab::lil::{propagation_experiment, PropagationConfig};
use swe_lab::riesz::*;
use swe_lab::runner::{execute, run_lil, run_slepian, Command, Config, Invocation};
use swe_lab::sampler::{
    assemble_covariance, empirical_covariance, factorize, hurst_from_covariance, hurst_from_paths, sample,
    sample_fbm_crosssection, v1_covariance_matrix, GridSpec,
};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_segment(rng: &mut ChaCha8Rng) -> Segment {
    let a = rng.random_range(-2.0..2.0);
    Segment::new(a, a + rng.random_range(0.01..2.0)).unwrap()
}

fn c1_constant_forms() -> Outcome {
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let (a, b) = c_beta_forms(i as f64 / 10.0);
        worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
    }
    check(worst <= 1e-12, format!("max relative gap {worst:.2e} over beta = 0.1..0.9"))
}

fn c2_segment_energy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for beta in [0.2, 0.5, 0.8] {
        let p = make_params(beta).unwrap();
        for _ in 0..100 {
            let (s1, s2) = (random_segment(&mut rng), random_segment(&mut rng));
            let closed = segment_cross_energy(&p, s1, s2);
            let oracle = segment_energy_oracle(beta, s1, s2);
            if !rel_close(closed, oracle, 1e-8, 1e-12) {
                return Err(format!("beta={beta} {s1:?} {s2:?}: {closed} vs {oracle}"));
            }
            worst = worst.max((closed - oracle).abs() / closed.abs().max(oracle.abs()).max(1e-300));
        }
    }
    Ok(format!("300 pairs, max relative deviation {worst:.2e}"))
}

fn c3_increment_variance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = make_params(0.5).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (tau, lambda, h) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0), rng.random_range(0.0..2.0));
        let (a, b) = (LightCone::rotated(tau, lambda), LightCone::rotated(tau, lambda + h));
        let combo = field_covariance(&p, &a, &a) + field_covariance(&p, &b, &b) - 2.0 * field_covariance(&p, &a, &b);
        worst = worst.max((combo - increment_variance(&p, tau, lambda, h).unwrap()).abs());
    }
    check(worst <= 1e-10, format!("100 draws, max |closed - three-cone| {worst:.2e}"))
}

fn four_point(p: &ModelParams, tau: f64, tau2: f64, lam: f64, h: f64) -> f64 {
    let pts = [(tau2, lam + h, 1.0), (tau, lam + h, -1.0), (tau2, lam, -1.0), (tau, lam, 1.0)];
    let mut v = 0.0;
    for &(t1, l1, w1) in &pts {
        for &(t2, l2, w2) in &pts {
            v += w1 * w2 * field_covariance(p, &LightCone::rotated(t1, l1), &LightCone::rotated(t2, l2));
        }
    }
    v
}

fn c4_rectangle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut dev, mut inv) = (0.0f64, 0.0f64);
    for beta in [0.2, 0.5, 0.8] {
        let p = make_params(beta).unwrap();
        for _ in 0..30 {
            let tau = rng.random_range(0.0..2.0);
            let tau2 = tau + rng.random_range(0.05..1.5);
            let h = rng.random_range(0.0..(tau2 - tau));
            let lam = rng.random_range(0.0..3.0);
            let closed = rectangle_increment_variance(&p, tau, tau2, lam, h).unwrap();
            dev = dev.max((closed - four_point(&p, tau, tau2, lam, h)).abs());
            let shifted = four_point(&p, tau, tau2, lam + rng.random_range(0.5..5.0), h);
            inv = inv.max((closed - shifted).abs());
        }
    }
    check(dev <= 1e-9 && inv <= 1e-10, format!("90 draws, four-point gap {dev:.2e}, lambda-shift gap {inv:.2e}"))
}

fn c5_correlation_decay() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for beta in [0.3, 0.5, 0.8] {
        let p = make_params(beta).unwrap();
        for q in [2.0, 4.0] {
            let fit = fit_decay_constant(&p, 1.0, 1.0, q, 14, 3).unwrap();
            ok &=
                fit.c0.is_finite() && fit.c0 > 0.0 && fit.max_bound_ratio <= 1.0 + 1e-12 && fit.min_correlation >= 0.0;
            parts.push(format!("C0(beta={beta},q={q})={:.4}", fit.c0));
        }
    }
    check(ok, parts.join(" "))
}

fn c6_fbm() -> Outcome {
    let beta = 0.5;
    let p = make_params(beta).unwrap();
    let tau0 = 1.0;
    let lambdas: Vec<f64> = (1..=64).map(|k| k as f64 / 32.0).collect();
    let m = v1_covariance_matrix(&p, tau0, &lambdas).unwrap();
    let mut gap = 0.0f64;
    for (i, &a) in lambdas.iter().enumerate() {
        for (j, &b) in lambdas.iter().enumerate().take(i + 1) {
            let exact = region_covariance(&p, &v1_region(tau0, a).unwrap(), &v1_region(tau0, b).unwrap());
            gap = gap.max((m.entries()[(i, j)] - exact).abs());
        }
    }
    let grid: Vec<f64> = (1..=256).map(|k| k as f64 / 256.0).collect();
    let lags = [1, 2, 4, 8, 16];
    let exact_h = hurst_from_covariance(v1_covariance_matrix(&p, tau0, &grid).unwrap().entries(), &lags).unwrap();
    let samples = sample_fbm_crosssection(&p, tau0, &grid, 6, 10_000).unwrap();
    let paths: Vec<&[f64]> = samples.iter().map(|s| s.values.as_slice()).collect();
    let mc_h = hurst_from_paths(&paths, &lags).unwrap();
    let target = (2.0 - beta) / 2.0;
    check(
        gap <= 1e-10 && (mc_h - target).abs() <= 0.05,
        format!("64-point gap {gap:.2e}; Hurst exact {exact_h:.4}, Monte Carlo {mc_h:.4}, target {target}"),
    )
}

fn c7_shift_invariance() -> Outcome {
    let grids: [Vec<(f64, f64)>; 3] = [
        (0..3).flat_map(|i| (0..3).map(move |j| (0.5 * i as f64, 0.5 * j as f64))).collect(),
        vec![(0.1, 2.0), (0.7, 0.3), (1.4, 1.1), (2.0, 0.0)],
        (0..4).map(|i| (0.25 * i as f64, 1.0 + 0.125 * i as f64)).collect(),
    ];
    let mut worst = 0.0f64;
    for beta in [0.2, 0.5, 0.8] {
        let p = make_params(beta).unwrap();
        for (g, tau0) in grids.iter().zip([1.0, 0.5, 2.0]) {
            worst = worst.max(shift_invariance_residual(&p, tau0, g).unwrap());
        }
    }
    check(worst <= 1e-10, format!("3 grids x 3 betas, max residual {worst:.2e}"))
}

fn c8_slepian() -> Outcome {
    let res = run_slepian(&Config::default()).unwrap();
    let max_fd = res.identity.iter().map(|r| r.derivative.deviation).fold(0.0, f64::max);
    let max_bis = res.identity.iter().map(|r| r.mean_value.deviation).fold(0.0, f64::max);
    let max_arc = res.arcsine.iter().map(|r| r.deviation).fold(0.0, f64::max);
    check(
        res.identity.len() == 64 && res.pass,
        format!(
            "{} grid points, |dp/dr - g| <= {max_fd:.2e}, r* residual <= {max_bis:.2e}, arcsine gap {max_arc:.2e}",
            res.identity.len()
        ),
    )
}

fn c9_monte_carlo_covariance() -> Outcome {
    let p = make_params(0.5).unwrap();
    let grid = GridSpec::new(vec![0.5, 1.0, 1.5, 2.0], vec![0.25, 0.5, 1.0, 1.5], None).unwrap();
    let m = factorize(&assemble_covariance(&p, &grid).unwrap(), 1e-8).unwrap();
    let n = 10_000;
    let samples = sample(&m, 9, n).unwrap();
    let emp = empirical_covariance(samples.iter().map(|s| s.values.as_slice()));
    let err = (&emp - m.entries()).abs().max();
    let bound = 5.0 * m.max_diag() * (2.0 / n as f64).sqrt();
    check(err <= bound, format!("16 points, max |C_hat - C| {err:.4} <= {bound:.4}"))
}

fn c10_lil_proxy() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = Config::default();
    cfg.scales.n_min = 3;
    cfg.scales.n_max = 12;
    cfg.scales.n_reps = 2000;
    cfg.output.csv = false;
    let r = run_lil(&cfg, 10, dir.path()).unwrap();
    check(
        r.within_window && r.sandwich_holds,
        format!(
            "median max statistic {:.4}, K_beta {:.4}, ratio {:.3}, scales n in [{}, {}], sandwich excess {:.1e}",
            r.lil_constant_estimate, r.k_beta, r.ratio_to_k_beta, r.n_min, r.n_max, r.max_sandwich_excess
        ),
    )
}

fn c11_propagation() -> Outcome {
    let p = make_params(0.5).unwrap();
    let cfg = PropagationConfig { seed: 11, ..Default::default() };
    let r = propagation_experiment(&p, 1.0, &cfg).unwrap();
    let rows: Vec<String> = r
        .per_tau
        .iter()
        .map(|t| format!("tau={}: ratio {:.3}, zero-u1 {:.3}", t.tau, t.median_elevation_ratio, t.median_zero_u1_ratio))
        .collect();
    let ok = r.runs_counted > 0
        && r.per_tau.len() == 3
        && r.per_tau.iter().all(|t| t.median_elevation_ratio > 1.5 && (0.8..=1.2).contains(&t.median_zero_u1_ratio));
    check(ok, format!("{} of {} runs at depth >= {}; {}", r.runs_counted, cfg.n_runs, cfg.min_depth, rows.join("; ")))
}

fn strip_timestamp(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["meta"].as_object_mut().unwrap().remove("generated_at_unix_ms");
    v
}

fn c12_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("config.json");
    std::fs::write(
        &cfg_path,
        r#"{"grid": {"tau_values": [0.5, 1.0], "lambda_values": [0.5, 1.0, 1.5], "n_reps": 100},
            "scales": {"n_reps": 200},
            "experiment": {"seed": 12, "propagation": {"n_runs": 4}},
            "output": {"binary": true}}"#,
    )
    .unwrap();
    let commands = [Command::Selftest, Command::Sample, Command::Lil, Command::Propagate, Command::Slepian];
    for run in ["a", "b"] {
        for command in commands {
            let inv =
                Invocation { command, config: Some(cfg_path.clone()), out: Some(dir.path().join(run)), seed: None };
            let o = execute(&inv);
            if o.exit_code > 1 {
                return Err(format!("{} failed: {}", command.name(), o.message));
            }
        }
    }
    let mut compared = 0;
    for entry in std::fs::read_dir(dir.path().join("a")).unwrap() {
        let name = entry.unwrap().file_name();
        let (a, b) = (dir.path().join("a").join(&name), dir.path().join("b").join(&name));
        let same = if name.to_string_lossy().ends_with(".json") {
            strip_timestamp(&a) == strip_timestamp(&b)
        } else {
            std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap()
        };
        if !same {
            return Err(format!("{} differs between runs", name.to_string_lossy()));
        }
        compared += 1;
    }
    check(compared >= 9, format!("{compared} output files identical across two runs of 5 commands"))
}

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "constant cross-check", Duration::from_secs(1), c1_constant_forms),
        (2, "segment energy vs quadrature", Duration::from_secs(30), c2_segment_energy),
        (3, "increment variance consistency", Duration::from_secs(10), c3_increment_variance),
        (4, "rectangle formula", Duration::from_secs(10), c4_rectangle),
        (5, "correlation decay", Duration::from_secs(60), c5_correlation_decay),
        (6, "fBm identification", Duration::from_secs(120), c6_fbm),
        (7, "shift invariance", Duration::from_secs(10), c7_shift_invariance),
        (8, "Slepian identity", Duration::from_secs(30), c8_slepian),
        (9, "Monte Carlo covariance", Duration::from_secs(60), c9_monte_carlo_covariance),
        (10, "LIL proxy", Duration::from_secs(300), c10_lil_proxy),
        (11, "propagation", Duration::from_secs(600), c11_propagation),
        (12, "determinism", Duration::from_secs(60), c12_determinism),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over the {}s limit", limit.as_secs())),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {:<4} {name} ({:.2}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
