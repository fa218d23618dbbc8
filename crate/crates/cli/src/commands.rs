use std::path::Path;

use qdarwin::analytic::{delta_factor, gamma, predicted_second_moment, short_time_gamma, time_avg_moments, TimeMoments};
use qdarwin::baselines::{f_star, haar_profile};
use qdarwin::info::{build_profile, h_s_max};
use qdarwin::model::{enumerate_fragments, Couplings, Fragment};
use qdarwin::rdm::{self, oracle, spectrum};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{float, prepare_dir, write_manifest, Table};

/// Largest eigenvalue deviation tolerated by the oracle cross-check.
const ORACLE_TOL: f64 = 1e-9;

pub fn simulate(config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let params = config.model_params();
    let couplings = config.couplings()?;
    let grid = config.time_grid()?;
    let unit = config.output.unit;
    let seed = params.seed;
    let n = params.n_env;
    let h_max = h_s_max(params.b);
    prepare_dir(out)?;

    let oracle_on = config.oracle.enabled && n <= config.oracle.n_max;
    if config.oracle.enabled && !oracle_on {
        eprintln!("warning: oracle check skipped, n_env = {n} exceeds oracle.n_max = {}", config.oracle.n_max);
    }

    let mut profile_csv = Table::create(
        out,
        "profile.csv",
        &[
            "t", "k", "n_fragments", "H_S", "mean_H_F", "se_H_F", "mean_H_SF", "se_H_SF", "mean_MI", "se_MI",
        ],
    )?;
    let mut redundancy_csv = Table::create(
        out,
        "redundancy.csv",
        &["t", "delta", "f_delta_exact", "f_delta_interp", "R_exact", "R_interp", "defined_flag"],
    )?;
    let mut eigen_csv = Table::create(out, "eigenvalues.csv", &["t", "k", "rank", "mean_eigenvalue"])?;

    for &t in grid.times() {
        let profile = build_profile(&params, &couplings, t, config.simulate.budget, seed)?;
        if oracle_on {
            cross_check(config, &couplings, t)?;
        }
        for s in &profile.sizes {
            profile_csv.row([
                float(t),
                s.k.to_string(),
                s.n_fragments.to_string(),
                float(unit.entropy(profile.h_s)),
                float(unit.entropy(s.mean_h_f)),
                float(unit.entropy(s.se_h_f)),
                float(unit.entropy(s.mean_h_sf)),
                float(unit.entropy(s.se_h_sf)),
                float(unit.entropy(s.mean_mi)),
                float(unit.entropy(s.se_mi)),
            ])?;
            for (rank, l) in s.mean_eigenvalues.iter().enumerate() {
                eigen_csv.row([float(t), s.k.to_string(), (rank + 1).to_string(), float(*l)])?;
            }
        }
        for &delta in &config.simulate.deltas {
            let r = profile.redundancy(delta, h_max);
            redundancy_csv.row([
                float(t),
                float(delta),
                float(r.f_delta_exact),
                float(r.f_delta_interp),
                float(r.r_exact),
                float(r.r_interp),
                u8::from(r.defined).to_string(),
            ])?;
        }
    }
    profile_csv.finish()?;
    redundancy_csv.finish()?;
    eigen_csv.finish()?;
    write_manifest(
        out,
        "simulate",
        config,
        Some(couplings.digest_hex()),
        &["profile.csv", "redundancy.csv", "eigenvalues.csv"],
    )
}

/// Compare analytic spectra against the state-vector route for one fragment
/// of every size.
fn cross_check(config: &ExperimentConfig, couplings: &Couplings, t: f64) -> Result<(), CliError> {
    let params = config.model_params();
    let n = params.n_env;
    let state = params.initial_state();
    let psi = oracle::evolve_statevector(&state, couplings, t, config.oracle.n_max)?;
    for k in 0..=n {
        for f in enumerate_fragments(n, k, 1, params.seed)? {
            let analytic = [
                rdm::rho_fragment_analytic(couplings, &f, t, &state)?,
                rdm::rho_sys_fragment_analytic(couplings, &f, t, &state)?,
            ];
            for (rho, with_system) in analytic.iter().zip([false, true]) {
                let a = spectrum(rho)?;
                let b = spectrum(&oracle::partial_trace(&psi, oracle::keep_mask(&f, with_system))?)?;
                let dev = a
                    .eigenvalues()
                    .iter()
                    .zip(b.eigenvalues())
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                if dev > ORACLE_TOL {
                    return Err(CliError::Numeric(format!(
                        "analytic and state-vector spectra differ by {dev:.3e} at t = {t}, fragment {f:?}, with system = {with_system}"
                    )));
                }
            }
        }
    }
    Ok(())
}

pub fn decoherence(config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let params = config.model_params();
    let couplings = config.couplings()?;
    let grid = config.time_grid()?;
    let all = Fragment::full(params.n_env);
    prepare_dir(out)?;

    let mut table = Table::create(
        out,
        "gamma.csv",
        &["t", "re_gamma", "im_gamma", "abs_gamma", "short_time_approx"],
    )?;
    for &t in grid.times() {
        let g = gamma(couplings.d(), &all, t, params.a);
        table.row([
            float(t),
            float(g.value().re),
            float(g.value().im),
            float(g.modulus()),
            float(short_time_gamma(couplings.d(), t)),
        ])?;
    }
    table.finish()?;

    // reference lines at ±2σ_Γ
    let sigma = predicted_second_moment(params.a, params.n_env).sqrt();
    let mut summary = Table::create(
        out,
        "gamma_summary.csv",
        &["n_env", "a", "sigma_gamma", "upper_reference", "lower_reference"],
    )?;
    summary.row([
        params.n_env.to_string(),
        float(params.a),
        float(sigma),
        float(2.0 * sigma),
        float(-2.0 * sigma),
    ])?;
    summary.finish()?;
    write_manifest(
        out,
        "decoherence",
        config,
        Some(couplings.digest_hex()),
        &["gamma.csv", "gamma_summary.csv"],
    )
}

pub fn stats(config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let params = config.model_params();
    let couplings = config.couplings()?;
    let s = &config.stats;
    let window = (s.t_min, s.t_max);
    let (n, a, seed) = (params.n_env, params.a, params.seed);
    if params.sigma_d > 0.0 && s.t_min < 10.0 / params.sigma_d {
        eprintln!(
            "warning: stats.t_min = {} is below 10/sigma_d = {}; moments may not have converged",
            s.t_min,
            10.0 / params.sigma_d
        );
    }
    prepare_dir(out)?;

    let mut table = Table::create(
        out,
        "moments.csv",
        &["quantity", "predicted", "estimated", "std_error", "z_score"],
    )?;
    let mut emit = |name: String, predicted: f64, m: &TimeMoments, second: bool| -> Result<(), CliError> {
        let (estimated, se, z) = if second {
            (m.second_moment, m.second_moment_std_error, m.second_moment_z(predicted))
        } else {
            (m.mean.norm(), m.mean_std_error, m.mean_z())
        };
        table.row([name, float(predicted), float(estimated), float(se), float(z)])
    };

    let all = Fragment::full(n);
    let g = time_avg_moments(|t| gamma(couplings.d(), &all, t, a).value(), window, s.n_samples, seed)?;
    emit("mean_gamma".into(), 0.0, &g, false)?;
    emit("mean_abs_gamma_sq".into(), predicted_second_moment(a, n), &g, true)?;

    if let Some(&k) = s.fragment_sizes.iter().find(|&&k| k > n) {
        return Err(CliError::Config(format!("stats.fragment_sizes entry {k} exceeds n_env = {n}")));
    }
    for &k in &s.fragment_sizes {
        let fragment = enumerate_fragments(n, k, 1, seed)?[0];
        let gf = time_avg_moments(|t| gamma(couplings.d(), &fragment, t, a).value(), window, s.n_samples, seed)?;
        emit(format!("mean_abs_gamma_f_sq[k={k}]"), predicted_second_moment(a, k), &gf, true)?;

        if k < n && params.sigma_m > 0.0 {
            if s.t_min < 10.0 / params.sigma_m {
                eprintln!("warning: stats.t_min is below 10/sigma_m; the mixing factor may not have converged");
            }
            // r and r' differ on the first spin of the fragment only
            let r = vec![1i8; k];
            let mut r_prime = r.clone();
            r_prime[0] = -1;
            let d = time_avg_moments(
                |t| {
                    delta_factor(&couplings, &fragment, &r, &r_prime, t, a)
                        .expect("valid configurations")
                        .value()
                },
                window,
                s.n_samples,
                seed,
            )?;
            emit(format!("mean_abs_delta_sq[k={k}]"), predicted_second_moment(a, n - k), &d, true)?;
        }
    }
    table.finish()?;
    write_manifest(out, "stats", config, Some(couplings.digest_hex()), &["moments.csv"])
}

pub fn baseline(config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let b = &config.baseline;
    let unit = config.output.unit;
    prepare_dir(out)?;

    let stats = haar_profile(b.d_s, b.d_e, b.n_env, b.n_samples, b.budget, config.model.seed)?;
    let mut table = Table::create(
        out,
        "haar_profile.csv",
        &["k", "mean_H", "se_H", "page_prediction", "mean_MI", "se_MI"],
    )?;
    for s in &stats.sizes {
        table.row([
            s.k.to_string(),
            float(unit.entropy(s.mean_h_f)),
            float(unit.entropy(s.se_h_f)),
            float(unit.entropy(s.page_h_f)),
            float(unit.entropy(s.mean_mi)),
            float(unit.entropy(s.se_mi)),
        ])?;
    }
    table.finish()?;

    let mut table = Table::create(
        out,
        "haar_redundancy.csv",
        &["delta", "f_delta_exact", "f_delta_interp", "R_exact", "R_interp", "defined_flag"],
    )?;
    for &delta in &b.deltas {
        let r = stats.redundancy(delta);
        table.row([
            float(delta),
            float(r.f_delta_exact),
            float(r.f_delta_interp),
            float(r.r_exact),
            float(r.r_interp),
            u8::from(r.defined).to_string(),
        ])?;
    }
    table.finish()?;

    let mut table = Table::create(out, "fstar.csv", &["a", "fstar_basic", "fstar_improved"])?;
    let steps = b.a_points + 1;
    for i in 1..steps {
        let a = i as f64 / steps as f64;
        table.row([float(a), float(f_star(a, false).value), float(f_star(a, true).value)])?;
    }
    table.finish()?;
    write_manifest(
        out,
        "baseline",
        config,
        None,
        &["haar_profile.csv", "haar_redundancy.csv", "fstar.csv"],
    )
}
