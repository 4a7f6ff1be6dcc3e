use std::io::Write;
use std::path::Path;

use pgsplit::coupling::{contraction_constants, couple_run, fit_rate};
use pgsplit::harmonic::oracle::{covariance_oracle, propagator_oracle};
use pgsplit::harmonic::{
    compute_coeffs, expanded_noise_factor, expanded_noise_factor_unscaled_b21,
    noise_factor_from_variances,
};
use pgsplit::linalg::Mat2;
use pgsplit::metrics::{bias_sweep, BiasSweepConfig};
use pgsplit::potential::{PhaseState, PotentialModel};
use pgsplit::samplers::{Sampler, Scheme, SchemeConfig};
use pgsplit::Scalar;

use crate::config::{pick, resolve_seed, FileConfig};
use crate::output::{f, list, Sink};
use crate::{BiasArgs, CliError, CoupleArgs, ModelArgs, SampleArgs};

/// Oracle agreement required by `verify`.
pub const A_MAT_TOLERANCE: f64 = 1e-11;
pub const COVARIANCE_TOLERANCE: f64 = 1e-9;

const VERIFY_GAMMAS: [f64; 3] = [1.0, 2.0, 4.0];
const VERIFY_RATIOS: [f64; 5] = [0.1, 0.2499, 0.25, 0.2501, 2.5];
const VERIFY_STEPS: [f64; 4] = [1e-4, 0.01, 0.1, 1.0];

fn parse_schemes(names: &[String]) -> Result<Vec<Scheme>, CliError> {
    names
        .iter()
        .map(|s| s.parse::<Scheme>().map_err(CliError::from))
        .collect()
}

struct Resolved {
    model_name: String,
    k: Option<Vec<f64>>,
    gamma: f64,
    seed: u64,
}

fn resolve_model(args: ModelArgs, file: &FileConfig) -> Result<Resolved, CliError> {
    Ok(Resolved {
        model_name: pick(args.model, file.model.clone(), "oscillation".into()),
        k: args.k.or(file.k.clone()),
        gamma: pick(args.gamma, file.gamma, 2.0),
        seed: resolve_seed(args.seed, file.seed)?,
    })
}

impl Resolved {
    fn build<T: Scalar>(&self) -> Result<PotentialModel<T>, CliError> {
        let k = self
            .k
            .as_ref()
            .map(|k| k.iter().map(|&v| T::lit(v)).collect());
        Ok(PotentialModel::by_name(&self.model_name, k)?)
    }

    fn settings(&self, model_dim_k: &[f64]) -> Vec<(&'static str, String)> {
        vec![
            ("model", self.model_name.clone()),
            ("k", list(model_dim_k)),
            ("gamma", self.gamma.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

fn state_from<T: Scalar>(values: &[f64], d: usize, what: &str) -> Result<PhaseState<T>, CliError> {
    if values.len() != 2 * d {
        return Err(CliError::Validation(format!(
            "{what} needs {} values (x_1..x_{d}, v_1..v_{d}), got {}",
            2 * d,
            values.len()
        )));
    }
    let t: Vec<T> = values.iter().map(|&v| T::lit(v)).collect();
    Ok(PhaseState::from_flat(&t)?)
}

fn warn_step<T: Scalar>(model: &PotentialModel<T>, gamma: T, h: T, scheme: Scheme) {
    for w in model.validate_step(gamma, h, scheme).warnings() {
        eprintln!("warning: {scheme}: {w}");
    }
}

fn nan_on_err(r: pgsplit::Result<Mat2<f64>>, sigma: &Mat2<f64>) -> f64 {
    r.map(|m| m.gram().max_abs_diff(sigma)).unwrap_or(f64::NAN)
}

pub fn verify(out: Option<&Path>) -> Result<(), CliError> {
    let mut sink = Sink::open(out)?;
    sink.header(
        "verify",
        &[
            ("gamma", list(&VERIFY_GAMMAS)),
            ("k_over_gamma_sq", list(&VERIFY_RATIOS)),
            ("h", list(&VERIFY_STEPS)),
            ("a_mat_tolerance", format!("{A_MAT_TOLERANCE:e}")),
            ("covariance_tolerance", format!("{COVARIANCE_TOLERANCE:e}")),
        ],
    )?;
    sink.columns(
        &[
            "k",
            "gamma",
            "h",
            "regime",
            "a_mat_dev",
            "covariance_dev",
            "det_dev",
            "variance_route_dev",
            "expanded_form_dev",
            "unscaled_b21_dev",
        ]
        .map(String::from),
    )?;
    let (mut worst_a, mut worst_s, mut worst_unscaled) = (0.0_f64, 0.0_f64, 0.0_f64);
    for &g in &VERIFY_GAMMAS {
        for &r in &VERIFY_RATIOS {
            for &h in &VERIFY_STEPS {
                let k = r * g * g;
                let c = compute_coeffs(k, g, h)?;
                let sigma = covariance_oracle(k, g, h)?;
                let a_dev = c.a_mat.max_abs_diff(&propagator_oracle(k, g, h)?);
                let s_dev = c.b_mat.gram().max_abs_diff(&sigma);
                let det_dev = (c.a_mat.det() - (-g * h).exp()).abs();
                let unscaled = nan_on_err(expanded_noise_factor_unscaled_b21(k, g, h), &sigma);
                worst_a = worst_a.max(a_dev);
                worst_s = worst_s.max(s_dev);
                if unscaled.is_finite() {
                    worst_unscaled = worst_unscaled.max(unscaled);
                }
                writeln!(
                    sink.table,
                    "{k},{g},{h},{},{},{},{},{},{},{}",
                    c.regime,
                    f(a_dev),
                    f(s_dev),
                    f(det_dev),
                    f(nan_on_err(noise_factor_from_variances(k, g, h), &sigma)),
                    f(nan_on_err(expanded_noise_factor(k, g, h), &sigma)),
                    f(unscaled),
                )?;
            }
        }
    }
    let pass = worst_a <= A_MAT_TOLERANCE && worst_s <= COVARIANCE_TOLERANCE;
    writeln!(
        sink.info,
        "max a_mat deviation     {worst_a:.3e} (tolerance {A_MAT_TOLERANCE:e})"
    )?;
    writeln!(
        sink.info,
        "max covariance deviation {worst_s:.3e} (tolerance {COVARIANCE_TOLERANCE:e})"
    )?;
    writeln!(
        sink.info,
        "expanded underdamped form without the 1/omega factor on B21: max deviation {worst_unscaled:.3e}"
    )?;
    writeln!(sink.info, "verify: {}", if pass { "PASS" } else { "FAIL" })?;
    sink.finish()?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Validation(
            "oracle deviations exceed tolerance".into(),
        ))
    }
}

pub fn sample(args: SampleArgs, file: &FileConfig, out: Option<&Path>) -> Result<(), CliError> {
    let precision = pick(args.precision.clone(), file.precision.clone(), "f64".into());
    match precision.as_str() {
        "f64" => sample_as::<f64>(args, file, out, precision.clone(), 16),
        "f32" => sample_as::<f32>(args, file, out, precision.clone(), 8),
        other => Err(CliError::Validation(format!(
            "unknown precision {other:?} (f64 or f32)"
        ))),
    }
}

fn sample_as<T: Scalar>(
    args: SampleArgs,
    file: &FileConfig,
    out: Option<&Path>,
    precision: String,
    digits: usize,
) -> Result<(), CliError> {
    let scheme = match args.scheme {
        Some(s) => s,
        None => file.scheme.as_deref().unwrap_or("pgp").parse()?,
    };
    let h = pick(args.h, file.h, 0.01);
    let steps = pick(args.steps, file.steps, 10_000);
    let thin = pick(args.thin, file.thin, 1);
    let r = resolve_model(args.common, file)?;
    let model = r.build::<T>()?;
    let d = model.dim();
    let init = pick(args.init, file.init.clone(), vec![0.0; 2 * d]);
    let initial = state_from::<T>(&init, d, "init")?;
    if thin == 0 {
        return Err(CliError::Validation("thin must be at least 1".into()));
    }
    let (gamma, ht) = (T::lit(r.gamma), T::lit(h));
    let sampler = Sampler::new(model.clone(), SchemeConfig::new(scheme, gamma, ht, r.seed)?)?;
    warn_step(&model, gamma, ht, scheme);

    let k64: Vec<f64> = model.k().iter().map(|v| v.as_f64()).collect();
    let mut settings = r.settings(&k64);
    settings.extend([
        ("scheme", scheme.to_string()),
        ("h", h.to_string()),
        ("steps", steps.to_string()),
        ("thin", thin.to_string()),
        ("init", list(&init)),
        ("precision", precision),
    ]);
    let mut sink = Sink::open(out)?;
    sink.header("sample", &settings)?;
    let mut cols = vec!["step".to_string()];
    cols.extend((1..=d).map(|j| format!("x_{j}")));
    cols.extend((1..=d).map(|j| format!("v_{j}")));
    sink.columns(&cols)?;

    let mut io_err = None;
    let mut line = String::new();
    let table = &mut sink.table;
    sampler.run_observed(&initial, steps, 0, |step, s| {
        if step % thin != 0 || io_err.is_some() {
            return;
        }
        line.clear();
        line.push_str(&step.to_string());
        for v in s.x.iter().chain(&s.v) {
            line.push_str(&format!(",{:.*e}", digits, v.as_f64()));
        }
        if let Err(e) = writeln!(table, "{line}") {
            io_err = Some(e);
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    sink.finish()?;
    Ok(())
}

pub fn couple(args: CoupleArgs, file: &FileConfig, out: Option<&Path>) -> Result<(), CliError> {
    let schemes = match args.schemes {
        Some(s) => s,
        None => parse_schemes(
            file.schemes
                .as_deref()
                .unwrap_or(&["pgp".into(), "obabo".into()]),
        )?,
    };
    if schemes.is_empty() {
        return Err(CliError::Validation("no schemes given".into()));
    }
    let h = pick(args.h, file.h, 0.01);
    let steps = pick(args.steps, file.steps, 1500);
    let replicas = pick(args.replicas, file.replicas, 200);
    let r = resolve_model(args.common, file)?;
    let model = r.build::<f64>()?;
    let d = model.dim();
    let init_a = pick(args.init_a, file.init_a.clone(), vec![1.0; 2 * d]);
    let init_b = pick(args.init_b, file.init_b.clone(), vec![-1.0; 2 * d]);
    let (a, b) = (
        state_from::<f64>(&init_a, d, "init-a")?,
        state_from::<f64>(&init_b, d, "init-b")?,
    );
    let guarantee = contraction_constants(model.kappa(), r.gamma, model.l_k())?.c;

    let mut settings = r.settings(model.k());
    settings.extend([
        (
            "schemes",
            schemes
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("h", h.to_string()),
        ("steps", steps.to_string()),
        ("replicas", replicas.to_string()),
        ("init_a", list(&init_a)),
        ("init_b", list(&init_b)),
    ]);
    let mut sink = Sink::open(out)?;
    sink.header("couple", &settings)?;
    sink.columns(
        &[
            "scheme",
            "step",
            "time",
            "mean_rho",
            "se_rho",
            "mean_euclid",
            "se_euclid",
        ]
        .map(String::from),
    )?;
    let mut summary = Vec::new();
    for &scheme in &schemes {
        warn_step(&model, r.gamma, h, scheme);
        let config = SchemeConfig::new(scheme, r.gamma, h, r.seed)?;
        let records = couple_run(&model, config, &a, &b, steps, replicas)?;
        for rec in &records {
            writeln!(
                sink.table,
                "{scheme},{},{},{},{},{},{}",
                rec.step,
                f(rec.time),
                f(rec.mean_rho),
                f(rec.se_rho),
                f(rec.mean_euclid),
                f(rec.se_euclid)
            )?;
        }
        let series: Vec<(f64, f64)> = records.iter().map(|r| (r.time, r.mean_rho)).collect();
        summary.push(match fit_rate(&series) {
            Ok(fit) => format!(
                "{scheme}: rate {:.6} (r^2 {:.6}, {} points, t in [{}, {}]), guaranteed c = {guarantee}",
                fit.rate, fit.r_squared, fit.points, fit.t_start, fit.t_end
            ),
            Err(e) => format!("{scheme}: no rate fitted: {e}"),
        });
    }
    for line in summary {
        writeln!(sink.info, "{line}")?;
    }
    sink.finish()?;
    Ok(())
}

pub fn bias(args: BiasArgs, file: &FileConfig, out: Option<&Path>) -> Result<(), CliError> {
    let schemes = match args.schemes {
        Some(s) => s,
        None => parse_schemes(
            file.schemes
                .as_deref()
                .unwrap_or(&["pg".into(), "pgp".into()]),
        )?,
    };
    let h_list = pick(
        args.h_list,
        file.h_list.clone(),
        vec![0.005, 0.01, 0.02, 0.04],
    );
    let steps = pick(args.steps, file.steps, 1_000_000);
    let r = resolve_model(args.common, file)?;
    let model = r.build::<f64>()?;
    let mut cfg = BiasSweepConfig::new(schemes.clone(), r.gamma, h_list.clone(), steps, r.seed);
    if let Some(m) = args.moments.or(file.moments.clone()) {
        cfg.moments = m;
    }
    for &scheme in &schemes {
        for &h in &h_list {
            warn_step(&model, r.gamma, h, scheme);
        }
    }
    let sweep = bias_sweep(&model, &cfg)?;

    let mut settings = r.settings(model.k());
    settings.extend([
        (
            "schemes",
            schemes
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("h", list(&h_list)),
        ("steps", steps.to_string()),
        ("moments", cfg.moments.join(",")),
        (
            "burn_in",
            sweep
                .burn_in
                .iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
    ]);
    let mut sink = Sink::open(out)?;
    sink.header("bias", &settings)?;
    sink.columns(
        &[
            "h",
            "scheme",
            "moment",
            "estimate",
            "reference",
            "abs_bias",
            "se",
            "conclusive",
        ]
        .map(String::from),
    )?;
    for row in &sweep.rows {
        writeln!(
            sink.table,
            "{},{},{},{},{},{},{},{}",
            row.h,
            row.scheme,
            row.moment,
            f(row.estimate),
            f(row.reference),
            f(row.abs_bias),
            f(row.se),
            row.conclusive
        )?;
    }
    for o in &sweep.orders {
        let slope = match o.slope {
            Some(s) => format!("slope {s:.3} ± {:.3}", o.slope_se),
            None => "no slope".to_string(),
        };
        let status = if o.conclusive {
            "conclusive"
        } else {
            "inconclusive"
        };
        writeln!(
            sink.info,
            "{} {}: {slope} from {}/{} points above 5 SE ({status})",
            o.scheme, o.moment, o.points_used, o.points_total
        )?;
    }
    sink.finish()?;
    Ok(())
}
