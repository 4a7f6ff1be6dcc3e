//! One test per acceptance criterion. Each prints a single `PASS`/`FAIL`
//! line on stderr (uncaptured) before asserting.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use pgsplit::coupling::{contraction_constants, fit_rate, rho_distance};
use pgsplit::harmonic::oracle::{covariance_oracle, propagator_oracle};
use pgsplit::harmonic::{compute_coeffs, NoiseDraw};
use pgsplit::metrics::{bias_sweep, estimate_moments, BiasSweepConfig, OrderFit};
use pgsplit::rng::NoiseStream;
use pgsplit::samplers::{run_chain, Sampler, Scheme, SchemeConfig};
use pgsplit::{Metric, Model, State};

fn report(name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "{verdict} {name}: {detail}");
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pgsplit"));
    c.env_remove("PGSPLIT_SEED");
    c
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pgsplit-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn coefficient_correctness() {
    let start = Instant::now();
    let (mut worst_a, mut worst_s) = (0.0_f64, 0.0_f64);
    for g in [1.0, 2.0, 4.0] {
        for r in [0.1, 0.2499, 0.25, 0.2501, 2.5] {
            for h in [1e-4, 0.01, 0.1, 1.0] {
                let k = r * g * g;
                let c = compute_coeffs(k, g, h).unwrap();
                worst_a = worst_a.max(c.a_mat.max_abs_diff(&propagator_oracle(k, g, h).unwrap()));
                worst_s = worst_s.max(
                    c.b_mat
                        .gram()
                        .max_abs_diff(&covariance_oracle(k, g, h).unwrap()),
                );
            }
        }
    }
    let out = bin()
        .arg("verify")
        .arg("-o")
        .arg(scratch("verify.csv"))
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    let pass = worst_a <= 1e-11
        && worst_s <= 1e-9
        && out.status.code() == Some(0)
        && elapsed < Duration::from_secs(5);
    report(
        "coefficient correctness",
        pass,
        &format!(
            "a_mat dev {worst_a:.2e}, covariance dev {worst_s:.2e}, verify exit {:?}, {elapsed:.2?}",
            out.status.code()
        ),
    );
    assert!(pass);
}

#[test]
fn gaussian_exactness() {
    let start = Instant::now();
    let model = Model::gaussian(vec![1.0, 10.0]).unwrap();
    let targets = [
        ("Var[x1]", 1.0),
        ("Var[x2]", 0.1),
        ("Var[v1]", 1.0),
        ("Var[v2]", 1.0),
        ("Cov[x1,v1]", 0.0),
        ("Cov[x2,v2]", 0.0),
    ];
    let mut pass = true;
    let mut worst = 0.0_f64;
    for scheme in [Scheme::Pg, Scheme::Pgp] {
        let cfg = SchemeConfig::new(scheme, 2.0, 0.1, 2024).unwrap();
        let out = run_chain(&model, cfg, &State::zeros(2), 1_000_000, 1).unwrap();
        let reports = estimate_moments(&out, 1000).unwrap();
        for (id, want) in targets {
            let r = reports.iter().find(|r| r.id == id).unwrap();
            let z = (r.estimate - want).abs() / r.se;
            worst = worst.max(z);
            pass &= z <= 4.0;
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    report(
        "gaussian exactness",
        pass,
        &format!("largest deviation {worst:.2} SE over PG and PGP, {elapsed:.2?}"),
    );
    assert!(pass);
}

#[test]
fn one_step_contraction() {
    let start = Instant::now();
    let model = Model::oscillation();
    let (g, h) = (2.0, 0.01);
    let c = contraction_constants(model.kappa(), g, model.l_k())
        .unwrap()
        .c;
    let metric = Metric::for_model(&model, g).unwrap();
    let factor = (-c * h).exp();
    let mut pts = NoiseStream::new(99, 7);
    let mut noise_rng = NoiseStream::new(99, 8);
    let mut noise = NoiseDraw::zeros(2);
    let mut violations = 0;
    let mut worst_ratio = 0.0_f64;
    for scheme in [Scheme::Pg, Scheme::Pgp] {
        let sampler =
            Sampler::new(model.clone(), SchemeConfig::new(scheme, g, h, 0).unwrap()).unwrap();
        for _ in 0..1000 {
            let mut draw = || {
                let mut v = [0.0; 4];
                v.iter_mut().for_each(|e| *e = 2.0 * pts.normal());
                State::from_flat(&v).unwrap()
            };
            let (a, b) = (draw(), draw());
            noise_rng.fill(&mut noise);
            let before = rho_distance(&metric, &a, &b).unwrap();
            let after = rho_distance(
                &metric,
                &sampler.step(&a, &noise).unwrap(),
                &sampler.step(&b, &noise).unwrap(),
            )
            .unwrap();
            worst_ratio = worst_ratio.max(after / before);
            if after > factor * before + 1e-12 {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = c == 0.125 && violations == 0 && elapsed < Duration::from_secs(1);
    report(
        "one-step contraction",
        pass,
        &format!(
            "{violations} violations in 2000 pairs, worst ratio {worst_ratio:.8} vs e^(-ch) = {factor:.8}, {elapsed:.2?}"
        ),
    );
    assert!(pass);
}

fn parse_couple_csv(text: &str) -> Vec<(String, f64, f64)> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (
                cols[0].to_string(),
                cols[2].parse().unwrap(),
                cols[3].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn coupled_contraction_experiment() {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for model in ["oscillation", "logistic"] {
        let path = scratch(&format!("couple-{model}.csv"));
        let status = bin()
            .args([
                "couple",
                "--model",
                model,
                "--schemes",
                "pgp,obabo",
                "--gamma",
                "2",
                "--h",
                "0.01",
            ])
            .args(["--steps", "1500", "--replicas", "200", "--seed", "1"])
            .args(["--init-a", "1,1,1,1", "--init-b", "-1,-1,-1,-1", "-o"])
            .arg(&path)
            .output()
            .unwrap()
            .status;
        pass &= status.success();
        let rows = parse_couple_csv(&std::fs::read_to_string(&path).unwrap());
        for scheme in ["pgp", "obabo"] {
            let series: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.0 == scheme)
                .map(|r| (r.1, r.2))
                .collect();
            let fit = fit_rate(&series).unwrap();
            pass &= series.len() == 1501 && fit.r_squared >= 0.99 && fit.rate >= 0.11;
            details.push(format!(
                "{model}/{scheme} rate {:.3} r2 {:.4}",
                fit.rate, fit.r_squared
            ));
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    report(
        "coupled contraction experiment",
        pass,
        &format!("{}, {elapsed:.2?}", details.join("; ")),
    );
    assert!(pass);
}

/// Post-burn-in steps per (scheme, h) cell.
const BIAS_STEPS: usize = 50_000_000;

fn describe(o: &OrderFit) -> String {
    match o.slope {
        Some(s) if o.conclusive => format!("slope {s:.3} ± {:.3}", o.slope_se),
        Some(s) => format!(
            "inconclusive ({}/{} points above 5 SE, partial slope {s:.2})",
            o.points_used, o.points_total
        ),
        None => format!(
            "inconclusive ({}/{} points above 5 SE)",
            o.points_used, o.points_total
        ),
    }
}

#[test]
fn bias_orders() {
    let start = Instant::now();
    let model = Model::oscillation();
    let mut cfg = BiasSweepConfig::new(
        vec![Scheme::Pg, Scheme::Pgp],
        2.0,
        vec![0.005, 0.01, 0.02, 0.04],
        BIAS_STEPS,
        31,
    );
    cfg.moments = vec!["E[x1^2]".into(), "E[x1v1]".into()];
    let sweep = bias_sweep(&model, &cfg).unwrap();
    let elapsed = start.elapsed();
    let pg = sweep.order(Scheme::Pg, "E[x1^2]").unwrap();
    let pgp = sweep.order(Scheme::Pgp, "E[x1^2]").unwrap();
    let within = |o: &OrderFit, lo: f64, hi: f64| {
        o.conclusive && o.slope.is_some_and(|s| (lo..=hi).contains(&s))
    };
    let pass =
        within(pg, 0.65, 1.35) && within(pgp, 1.5, 2.5) && elapsed < Duration::from_secs(600);
    let cells: Vec<String> = sweep
        .rows
        .iter()
        .filter(|r| r.moment == "E[x1^2]")
        .map(|r| {
            format!(
                "{}@{}: |bias| {:.1e} se {:.1e}",
                r.scheme, r.h, r.abs_bias, r.se
            )
        })
        .collect();
    let companion = sweep.order(Scheme::Pg, "E[x1v1]").unwrap();
    report(
        "bias orders",
        pass,
        &format!(
            "E[x1^2] PG {}, PGP {}; [{}]; PG E[x1v1] {}; {elapsed:.2?}",
            describe(pg),
            describe(pgp),
            cells.join(", "),
            describe(companion),
        ),
    );
    assert!(pass);
}

#[test]
fn constants_calculator() {
    let c = contraction_constants(1.0_f64, 2.0, 10.0).unwrap();
    let pass = c.tau == 1.0 / 16.0 && c.c == 0.125 && c.m1 == 56.0_f64.sqrt() && c.m2 == 4.0;
    report(
        "constants calculator",
        pass,
        &format!("tau {} c {} M1 {} M2 {}", c.tau, c.c, c.m1, c.m2),
    );
    assert!(pass);
}

#[test]
fn cli_determinism() {
    let runs: [&[&str]; 5] = [
        &["verify"],
        &[
            "sample", "--model", "logistic", "--scheme", "pgp", "--steps", "20000", "--thin", "7",
            "--seed", "3",
        ],
        &[
            "sample",
            "--scheme",
            "obabo",
            "--steps",
            "5000",
            "--precision",
            "f32",
            "--seed",
            "3",
        ],
        &[
            "couple",
            "--schemes",
            "pg,pgp,obabo",
            "--steps",
            "300",
            "--replicas",
            "17",
            "--seed",
            "5",
        ],
        &[
            "bias",
            "--h",
            "0.01,0.02",
            "--steps",
            "20000",
            "--seed",
            "8",
        ],
    ];
    let mut pass = true;
    let mut checked = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|rep| {
                let path = scratch(&format!("det-{i}-{rep}.csv"));
                let status = bin()
                    .args(*args)
                    .arg("-o")
                    .arg(&path)
                    .output()
                    .unwrap()
                    .status;
                assert!(status.success(), "{args:?}");
                std::fs::read(&path).unwrap()
            })
            .collect();
        let same = outputs[0] == outputs[1] && !outputs[0].is_empty();
        pass &= same;
        checked.push(format!(
            "{} {}",
            args[0],
            if same { "identical" } else { "differs" }
        ));
    }
    report("cli determinism", pass, &checked.join(", "));
    assert!(pass);
}
