//! End-to-end acceptance checks.
//!
//! Runs without the libtest harness so that every criterion prints exactly one
//! PASS/FAIL line, whatever happens to the others. Exits nonzero if any fails.

use std::f64::consts::{LN_2, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::seq::index;
use rand::Rng;

use qdarwin::analytic::{self, gamma, time_avg_moments};
use qdarwin::baselines::{
    default_threshold, entropy_caps, f_star, fannes_audenaert, fluctuation_bound, haar_profile,
    majorization_check, HaarSampleStats,
};
use qdarwin::info::{build_profile, redundancy_from_curve, MIProfile};
use qdarwin::model::rng::stream;
use qdarwin::model::{Couplings, Fragment, ModelParams, TimeGrid};
use qdarwin::rdm::oracle::keep_mask;
use qdarwin::rdm::{self, evolve_statevector, partial_trace, spectrum, DensityMatrix, DEFAULT_ORACLE_CAP};

const SEED: u64 = 1;
const SIGMA_D: f64 = 0.1;
const SIGMA_M: f64 = 0.001;
/// Fragment budget for the single-time plateau profile.
const PLATEAU_BUDGET: usize = 2000;
/// Fragment budget per late-time profile at the largest size.
const LATE_BUDGET_LARGE: usize = 200;
const LATE_TIMES: usize = 20;
const LATE_WINDOW: (f64, f64) = (500.0, 2000.0);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

/// Results shared between criteria.
#[derive(Default)]
struct Context {
    plateau: Vec<(usize, MIProfile)>,
    late: Vec<(usize, Vec<MIProfile>)>,
    /// Every profile computed anywhere.
    profiles: Vec<MIProfile>,
    haar: Vec<HaarSampleStats>,
    /// `(ρ_F, ρ_F^∞)` pairs from the late-time fluctuation runs.
    equilibrium_pairs: Vec<(DensityMatrix, DensityMatrix)>,
}

fn paper_universe(n: usize) -> (ModelParams, Couplings) {
    let params = ModelParams::balanced(n, SIGMA_D, SIGMA_M, SEED);
    let couplings = Couplings::sample(&params).expect("valid parameters");
    (params, couplings)
}

fn late_times() -> Vec<f64> {
    let mut rng = stream(SEED, "acceptance.late-times", &[]);
    (0..LATE_TIMES).map(|_| rng.random_range(LATE_WINDOW.0..LATE_WINDOW.1)).collect()
}

impl Context {
    fn plateau(&mut self, n: usize) -> MIProfile {
        if let Some((_, p)) = self.plateau.iter().find(|(m, _)| *m == n) {
            return p.clone();
        }
        let (params, couplings) = paper_universe(n);
        let p = build_profile(&params, &couplings, 10.0, PLATEAU_BUDGET, SEED).unwrap();
        self.plateau.push((n, p.clone()));
        self.profiles.push(p.clone());
        p
    }

    fn late(&mut self, n: usize) -> Vec<MIProfile> {
        if let Some((_, p)) = self.late.iter().find(|(m, _)| *m == n) {
            return p.clone();
        }
        let (params, couplings) = paper_universe(n);
        let budget = if n >= 16 { LATE_BUDGET_LARGE } else { PLATEAU_BUDGET };
        let profiles: Vec<MIProfile> = late_times()
            .into_iter()
            .map(|t| build_profile(&params, &couplings, t, budget, SEED).unwrap())
            .collect();
        self.late.push((n, profiles.clone()));
        self.profiles.extend(profiles.iter().cloned());
        profiles
    }
}

fn mean_curve(profiles: &[MIProfile]) -> Vec<f64> {
    let n = profiles[0].n_env;
    (0..=n)
        .map(|k| profiles.iter().map(|p| p.sizes[k].mean_mi).sum::<f64>() / profiles.len() as f64)
        .collect()
}

fn bits(v: f64) -> f64 {
    v / LN_2
}

fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn oracle_equivalence(_: &mut Context) -> Outcome {
    let mut rng = stream(SEED, "acceptance.oracle", &[]);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = [4, 6, 8, 10][rng.random_range(0..4)];
        let sigma_m = [0.0, 0.001, 0.05][rng.random_range(0..3)];
        let balanced = rng.random_bool(0.5);
        let mut params = ModelParams::balanced(n, SIGMA_D, sigma_m, rng.random());
        if !balanced {
            params.a = rng.random_range(0.05..0.95);
            params.b = rng.random_range(0.05..0.95);
            params.alpha_phase = rng.random_range(0.0..TAU);
            params.beta_phase = rng.random_range(0.0..TAU);
        }
        let couplings = Couplings::sample(&params).unwrap();
        let t = rng.random_range(0.0..2000.0);
        let fragment = Fragment::new(rng.random_range(0..1u64 << n), n).unwrap();
        let state = params.initial_state();
        let psi = evolve_statevector(&state, &couplings, t, DEFAULT_ORACLE_CAP).unwrap();

        let rho_f = rdm::rho_fragment_analytic(&couplings, &fragment, t, &state).unwrap();
        let rho_sf = rdm::rho_sys_fragment_analytic(&couplings, &fragment, t, &state).unwrap();
        for (analytic, with_system) in [(rho_f, false), (rho_sf, true)] {
            let brute = partial_trace(&psi, keep_mask(&fragment, with_system)).unwrap();
            let a = spectrum(&analytic).unwrap();
            let b = spectrum(&brute).unwrap();
            worst = worst.max(max_abs_diff(a.eigenvalues(), b.eigenvalues()));
        }
    }
    Outcome::new(worst <= 1e-9, format!("50 instances, max eigenvalue deviation {worst:.2e} (tol 1e-9)"))
}

fn plateau(ctx: &mut Context) -> Outcome {
    let p = ctx.plateau(16);
    let mi = p.mi();
    let dev = (2..=14).map(|k| (mi[k] - LN_2).abs()).fold(0.0, f64::max);
    let r = p.redundancy(0.1, LN_2);
    let pass = dev <= 0.1 * LN_2 && r.defined && r.r_exact >= 8.0;
    let curve: Vec<String> = mi.iter().map(|v| format!("{:.3}", bits(*v))).collect();
    Outcome::new(
        pass,
        format!(
            "N=16 t=10: max_(2<=k<=14) |I(k) - ln2| = {:.3} ln2 (tol 0.1), R_0.1 exact {} interp {:.2} (need >= 8); I/ln2 = [{}]",
            bits(dev),
            r.r_exact,
            r.r_interp,
            curve.join(", ")
        ),
    )
}

fn equilibrium(ctx: &mut Context) -> Outcome {
    let profiles = ctx.late(16);
    let mi = mean_curve(&profiles);
    let low = (0..=6).map(|k| mi[k]).fold(f64::MIN, f64::max);
    let high = (12..=16).map(|k| mi[k]).fold(f64::MAX, f64::min);
    let r = redundancy_from_curve(&mi, 0.1, LN_2);
    let pass = low <= 0.15 * LN_2 && high >= 1.7 * LN_2 && r.defined && r.r_interp <= 3.0;
    Outcome::new(
        pass,
        format!(
            "N=16, {LATE_TIMES} times in [500, 2000]: max_(k<=6) I = {:.4} ln2 (<= 0.15), min_(k>=12) I = {:.4} ln2 (>= 1.7), R_0.1 interp {:.3} (<= 3)",
            bits(low),
            bits(high),
            r.r_interp
        ),
    )
}

fn scaling_trend(ctx: &mut Context) -> Outcome {
    let sizes = [8, 12, 16];
    let mut devs = Vec::new();
    let mut residuals = Vec::new();
    for n in sizes {
        let mi = ctx.plateau(n).mi();
        devs.push((2..=n - 2).map(|k| (mi[k] - LN_2).abs()).fold(0.0, f64::max));
        residuals.push(mean_curve(&ctx.late(n))[n / 4]);
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let pass = decreasing(&devs) && decreasing(&residuals);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{:.4}", bits(*x))).collect::<Vec<_>>().join(" > ");
    Outcome::new(
        pass,
        format!(
            "N = 8, 12, 16: plateau deviation (ln2 units) {}; equilibrium I(N/4) {}",
            fmt(&devs),
            fmt(&residuals)
        ),
    )
}

fn sum_rule(ctx: &mut Context) -> Outcome {
    let mut rng = stream(SEED, "acceptance.exhaustive", &[]);
    for n in [6, 7, 8, 10] {
        let params = ModelParams {
            a: rng.random_range(0.1..0.9),
            b: rng.random_range(0.1..0.9),
            alpha_phase: rng.random_range(0.0..TAU),
            ..ModelParams::balanced(n, SIGMA_D, 0.05, rng.random())
        };
        let couplings = Couplings::sample(&params).unwrap();
        for t in [1.0, 10.0, 100.0, 1000.0] {
            ctx.profiles.push(build_profile(&params, &couplings, t, 10_000, SEED).unwrap());
        }
    }
    let exhaustive: Vec<&MIProfile> = ctx.profiles.iter().filter(|p| p.is_exhaustive()).collect();
    let (mut sum_err, mut mono_err): (f64, f64) = (0.0, 0.0);
    for p in &exhaustive {
        let mi = p.mi();
        let n = p.n_env;
        for k in 0..=n {
            sum_err = sum_err.max((mi[k] + mi[n - k] - 2.0 * p.h_s).abs());
        }
        for k in 0..n {
            mono_err = mono_err.max(mi[k] - mi[k + 1]);
        }
        sum_err = sum_err.max(mi[0].abs()).max((mi[n] - 2.0 * p.h_s).abs());
    }
    Outcome::new(
        !exhaustive.is_empty() && sum_err <= 1e-9 && mono_err <= 1e-9,
        format!(
            "{} exhaustive profiles: max sum-rule error {sum_err:.2e}, max decrease {:.2e} (tol 1e-9)",
            exhaustive.len(),
            mono_err.max(0.0)
        ),
    )
}

fn decoherence_statistics(_: &mut Context) -> Outcome {
    let (_, couplings) = paper_universe(12);
    let all = Fragment::full(12);
    let m = time_avg_moments(|t| gamma(couplings.d(), &all, t, 0.5).value(), (1e3, 1e5), 10_000, SEED).unwrap();
    let predicted = 2f64.powi(-12);
    let z2 = m.second_moment_z(predicted);
    let z1 = m.mean_z();
    Outcome::new(
        z1 <= 3.0 && z2 <= 3.0,
        format!(
            "N=12, 1e4 times: <|G|^2> = {:.4e} vs 2^-12 = {predicted:.4e} ({z2:.2} se), |<G>| = {:.2e} ({z1:.2} se)",
            m.second_moment,
            m.mean.norm()
        ),
    )
}

fn system_entropy(_: &mut Context) -> Outcome {
    let grid = TimeGrid::logarithmic(0.1, 1000.0, 100).unwrap();
    let mut worst: f64 = 0.0;
    for (a, b) in [(0.5, 0.5), (0.3, 0.7)] {
        let params = ModelParams {
            a,
            b,
            ..ModelParams::balanced(10, SIGMA_D, 0.0, SEED)
        };
        let couplings = Couplings::sample(&params).unwrap();
        let state = params.initial_state();
        let all = Fragment::full(10);
        for &t in grid.times() {
            let g = gamma(couplings.d(), &all, t, a).value();
            let closed = analytic::entropy_system(g, b).unwrap();
            let psi = evolve_statevector(&state, &couplings, t, DEFAULT_ORACLE_CAP).unwrap();
            let brute = rdm::entropy(&partial_trace(&psi, 1 << 10).unwrap()).unwrap();
            worst = worst.max((closed - brute).abs());
            if a == 0.5 {
                let balanced = analytic::entropy_system_balanced(g.re).unwrap();
                worst = worst.max((balanced - brute).abs());
            }
        }
    }
    Outcome::new(
        worst <= 1e-10,
        format!("N=10, m=0, 100 log-spaced times, two initial states: max |H_S - oracle| = {worst:.2e} (tol 1e-10)"),
    )
}

fn page_agreement(ctx: &mut Context) -> Outcome {
    let stats = haar_profile(2, 2, 8, 2000, 2000, SEED).unwrap();
    let mut worst_z: f64 = 0.0;
    for s in &stats.sizes {
        let diff = (s.mean_h_f - s.page_h_f).abs();
        let z = if s.se_h_f > 0.0 {
            diff / s.se_h_f
        } else if diff <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        worst_z = worst_z.max(z);
    }
    let hs_z = (stats.mean_h_s - stats.page_h_s).abs() / stats.se_h_s;
    worst_z = worst_z.max(hs_z);
    let r = stats.redundancy(0.1);
    let in_range = |x: f64| (1.8..=2.3).contains(&x);
    let pass = worst_z <= 3.0 && r.defined && in_range(r.r_exact) && in_range(r.r_interp);
    ctx.haar.push(stats);
    Outcome::new(
        pass,
        format!(
            "2000 Haar samples, D_S=2, N=8: worst |H - Page| = {worst_z:.2} se (<= 3), R_0.1 exact {} interp {:.3} (in [1.8, 2.3])",
            r.r_exact, r.r_interp
        ),
    )
}

/// Fragment size used for nominal fraction `f`; `fN` is rounded up.
fn fragment_size(f: f64, n: usize) -> usize {
    (f * n as f64).ceil() as usize
}

fn fluctuation_exceedance(ctx: &mut Context) -> Outcome {
    const N_TIMES: usize = 500;
    let mut lines = Vec::new();
    let mut pass = true;
    for n in [8usize, 12] {
        let (params, couplings) = paper_universe(n);
        let state = params.initial_state();
        for f in [0.125, 0.25] {
            let k = fragment_size(f, n);
            let f_eff = k as f64 / n as f64;
            let mut rng = stream(SEED, "acceptance.fluctuations", &[n as u64, k as u64]);
            let mut distances = Vec::with_capacity(N_TIMES);
            for _ in 0..N_TIMES {
                let t = rng.random_range(1e5..1e6);
                let members: Vec<usize> = index::sample(&mut rng, n, k).into_vec();
                let fragment = Fragment::from_indices(&members, n).unwrap();
                let rho = rdm::rho_fragment_analytic(&couplings, &fragment, t, &state).unwrap();
                let eq = rdm::rho_fragment_equilibrium(&fragment, params.a);
                distances.push(rdm::trace_distance(&rho, &eq).unwrap());
                ctx.equilibrium_pairs.push((rho, eq));
            }
            let base = default_threshold(f_eff, n);
            for t0 in [base, 2.0 * base] {
                let freq = distances.iter().filter(|&&d| d > t0).count() as f64 / N_TIMES as f64;
                let bound = fluctuation_bound(f_eff, n, t0).unwrap();
                let limit = bound + 3.0 * (bound * (1.0 - bound) / N_TIMES as f64).sqrt();
                pass &= freq <= limit;
                lines.push(format!("N={n} k={k} T0={t0:.4}: {freq:.3} <= {limit:.3}"));
            }
        }
    }
    Outcome::new(pass, format!("500 times in [1e5, 1e6]; {}", lines.join("; ")))
}

fn f_star_checks(_: &mut Context) -> Outcome {
    let mut pass = f_star(0.5, false).value == 0.5 && f_star(0.5, true).value == 0.5;
    let mut worst_sym: f64 = 0.0;
    for i in 1..=99 {
        let a = i as f64 / 100.0;
        for improved in [false, true] {
            let x = f_star(a, improved);
            let y = f_star(1.0 - a, improved);
            worst_sym = worst_sym.max((x.value - y.value).abs());
            pass &= !x.degenerate && (0.0..=0.5).contains(&x.value);
        }
        pass &= f_star(a, true).value >= f_star(a, false).value;
    }
    pass &= worst_sym <= 1e-12;
    // basic ~ 2a/ln2; improved ~ 2/(ln2 log2(1/a)), so only a slow decay
    let mut prev = [0.5, 0.5];
    for j in 1..=300 {
        let a = 10f64.powi(-j);
        for (slot, improved) in [false, true].into_iter().enumerate() {
            let v = f_star(a, improved).value;
            pass &= v < prev[slot];
            if a > 1e-15 {
                // compare against the complement actually representable
                let hi = 1.0 - a;
                let lo = 1.0 - hi;
                let (x, y) = (f_star(lo, improved).value, f_star(hi, improved).value);
                pass &= (x - y).abs() <= 1e-12 * x;
            }
            prev[slot] = v;
        }
    }
    let tail = f_star(1e-300, true).value;
    pass &= f_star(1e-9, false).value < 1e-8 && tail < 5e-3;
    for a in [0.0, 1.0] {
        let b = f_star(a, false);
        let i = f_star(a, true);
        pass &= b.value == 0.0 && i.value == 0.0 && b.degenerate && i.degenerate;
    }
    Outcome::new(
        pass,
        format!(
            "f*(1/2) = 1/2 in both forms, 99-point symmetry error {worst_sym:.1e}, improved >= basic, decreasing to the endpoints (improved f*(1e-300) = {tail:.2e})"
        ),
    )
}

fn inequalities(ctx: &mut Context) -> Outcome {
    let mut violations = Vec::new();

    let mut checked_caps = 0;
    for p in &ctx.profiles {
        for s in &p.sizes {
            let (cap_f, cap_sf) = entropy_caps(s.k, p.n_env);
            checked_caps += 1;
            if s.mean_h_f < -1e-12 || s.mean_h_f > cap_f + 1e-9 || s.mean_h_sf > cap_sf + 1e-9 {
                violations.push(format!("caps N={} k={} t={}", p.n_env, s.k, p.t));
            }
        }
    }
    for h in &ctx.haar {
        for s in &h.sizes {
            let (cap_f, cap_sf) = entropy_caps(s.k, h.n_env);
            checked_caps += 1;
            if s.mean_h_f > cap_f + 1e-9 || s.mean_h_sf > cap_sf + 1e-9 {
                violations.push(format!("Haar caps k={}", s.k));
            }
        }
    }

    for (rho, eq) in &ctx.equilibrium_pairs {
        let td = rdm::trace_distance(rho, eq).unwrap();
        let hs = rdm::hs_distance(rho, eq).unwrap();
        let dh = (rdm::entropy(rho).unwrap() - rdm::entropy(eq).unwrap()).abs();
        let dim = rho.dim();
        if dim >= 2 && dh > fannes_audenaert(td, dim) + 1e-12 {
            violations.push(format!("Fannes-Audenaert dim={dim} T={td}"));
        }
        if td > 0.5 * (dim as f64).sqrt() * hs + 1e-12 || hs > 2.0 * td + 1e-12 {
            violations.push(format!("trace/HS dim={dim}"));
        }
    }

    let params = ModelParams {
        b: 0.7,
        ..ModelParams::balanced(8, SIGMA_D, 0.0, SEED)
    };
    let couplings = Couplings::sample(&params).unwrap();
    let mut n_spectra = 0;
    for a in [0.5, 0.3] {
        let state = ModelParams { a, ..params }.initial_state();
        for &t in TimeGrid::logarithmic(0.5, 5000.0, 8).unwrap().times() {
            for mask in 1u64..256 {
                let f = Fragment::new(mask, 8).unwrap();
                let s = spectrum(&rdm::rho_fragment_analytic(&couplings, &f, t, &state).unwrap()).unwrap();
                n_spectra += 1;
                if !majorization_check(&s, &[0.7, 0.3]).unwrap() {
                    violations.push(format!("majorization a={a} t={t} F={f:?}"));
                }
                if s.rank(1e-10) > 2 {
                    violations.push(format!("rank a={a} t={t} F={f:?}"));
                }
            }
        }
    }

    Outcome::new(
        violations.is_empty(),
        format!(
            "{checked_caps} cap checks, {} equilibrium pairs, {n_spectra} pure-decoherence spectra, {} violations{}",
            ctx.equilibrium_pairs.len(),
            violations.len(),
            violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    )
}

type Check = fn(&mut Context) -> Outcome;

fn main() {
    // the harness-free target still receives libtest flags such as --list
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let checks: [(&str, &str, Check); 11] = [
        ("1", "oracle equivalence", oracle_equivalence),
        ("2", "plateau at t = 10", plateau),
        ("3", "late-time equilibrium", equilibrium),
        ("5", "decoherence factor statistics", decoherence_statistics),
        ("6", "system entropy closed form", system_entropy),
        ("7", "Haar profile vs Page", page_agreement),
        ("9", "fluctuation-bound exceedance", fluctuation_exceedance),
        ("10", "critical fraction", f_star_checks),
        ("S", "scaling trend", scaling_trend),
        ("4", "sum rule and monotonicity", sum_rule),
        ("8", "inequality suite", inequalities),
    ];
    let mut ctx = Context::default();
    let mut failed = 0;
    for (id, name, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&mut ctx)))
            .unwrap_or_else(|_| Outcome::new(false, "panicked"));
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "[{status}] criterion {id:>2} {name}: {} ({:.1}s)",
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!outcome.pass);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
