//! Haar-random reference states, Page's average entropy and the bounds used
//! to compare late-time fragments against equilibrium.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analytic::{binary_entropy, binary_entropy_bits};
use crate::error::{Error, Result};
use crate::info::{self, mean_se, RedundancyResult};
use crate::model::rng::{stream, tag};
use crate::model::{enumerate_fragments, Fragment};
use crate::rdm::{spectrum, DensityMatrix, Spectrum};

/// Largest total Hilbert-space dimension sampled by default.
pub const DEFAULT_HAAR_CAP: usize = 1 << 15;

/// Below this many terms the harmonic sum is evaluated directly.
const PAGE_DIRECT_TERMS: u64 = 1 << 24;

/// Page's mean entanglement entropy (nats) of an `m`-dimensional subsystem of
/// a Haar-random pure state on `m ⊗ n`, `m ≤ n`.
pub fn page_entropy(m: u64, n: u64) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::param("page_entropy", "dimensions must be positive"));
    }
    if m > n {
        return Err(Error::param("page_entropy", "pass the smaller dimension first"));
    }
    let mn = m.checked_mul(n).ok_or_else(|| Error::param("page_entropy", "m·n overflows"))?;
    let harmonic_tail = if mn - n <= PAGE_DIRECT_TERMS {
        // summed smallest first
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for k in (n + 1..=mn).rev() {
            let y = 1.0 / k as f64 - comp;
            let s = sum + y;
            comp = (s - sum) - y;
            sum = s;
        }
        sum
    } else {
        harmonic_asymptotic(mn as f64) - harmonic_asymptotic(n as f64)
    };
    Ok(harmonic_tail - (m as f64 - 1.0) / (2.0 * n as f64))
}

/// `H_x − γ`, accurate for large `x`.
fn harmonic_asymptotic(x: f64) -> f64 {
    let x2 = x * x;
    x.ln() + 1.0 / (2.0 * x) - 1.0 / (12.0 * x2) + 1.0 / (120.0 * x2 * x2)
}

/// Largest possible `H_F` and `H_SF` (nats) for a qubit system and a
/// fragment of `k` out of `n` qubits, in a pure global state.
pub fn entropy_caps(k: usize, n: usize) -> (f64, f64) {
    let k = k.min(n);
    let h_f = k.min(n + 1 - k) as f64 * LN_2;
    let h_sf = (k + 1).min(n - k) as f64 * LN_2;
    (h_f, h_sf)
}

/// Audenaert's sharp continuity bound: `|H(ρ) − H(σ)| ≤ T ln(D−1) + H₂[T]`
/// for trace distance `T` and dimension `D`.
pub fn fannes_audenaert(trace_distance: f64, dim: usize) -> f64 {
    debug_assert!(dim >= 2);
    let t = trace_distance.clamp(0.0, 1.0);
    let log_term = if t == 0.0 { 0.0 } else { t * ((dim.max(2) - 1) as f64).ln() };
    log_term + binary_entropy(t)
}

/// Chebyshev bound `min(1, 2^{(2f−1)N} / (4T₀²))` on the probability that a
/// fraction-`f` fragment sits at trace distance above `T₀` from equilibrium.
pub fn fluctuation_bound(f: f64, n: usize, t0: f64) -> Result<f64> {
    if !(f > 0.0 && f < 0.5) {
        return Err(Error::param("f", "bound is vacuous unless 0 < f < 1/2"));
    }
    if !(t0 > 0.0) {
        return Err(Error::param("T0", "must be positive"));
    }
    let bound = ((2.0 * f - 1.0) * n as f64).exp2() / (4.0 * t0 * t0);
    Ok(bound.min(1.0))
}

/// The natural threshold `T₀ = 2^{−(1/2−f)N/2}`.
pub fn default_threshold(f: f64, n: usize) -> f64 {
    (-(0.5 - f) * n as f64 / 2.0).exp2()
}

/// The simplified bound `2^{−(1/2−f)N}` quoted for the threshold of
/// [`default_threshold`]. It is looser than [`fluctuation_bound`] evaluated
/// there by a factor of 4.
pub fn simplified_fluctuation_bound(f: f64, n: usize) -> f64 {
    (-(0.5 - f) * n as f64).exp2()
}

/// Critical fragment fraction below which fragments are typically close to
/// equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FStar {
    pub value: f64,
    /// `a` was 0 or 1 (or outside the unit interval); the value is 0.
    pub degenerate: bool,
}

/// `f* = L/(L+1)` or, with compression, `L/(L + H₂[a])`, where
/// `L = −log₂(a² + (1−a)²)` and everything is measured in bits.
pub fn f_star(a: f64, improved: bool) -> FStar {
    if !(a > 0.0 && a < 1.0) {
        return FStar {
            value: 0.0,
            degenerate: true,
        };
    }
    // a² + (1−a)² = 1 − 2a(1−a); ln_1p keeps L accurate near the endpoints
    let l = -(-2.0 * a * (1.0 - a)).ln_1p() / std::f64::consts::LN_2;
    let denom = if improved { l + binary_entropy_bits(a) } else { l + 1.0 };
    FStar {
        value: l / denom,
        degenerate: false,
    }
}

/// Slack on partial sums in [`majorization_check`].
pub const MAJORIZATION_TOL: f64 = 1e-9;

/// True when `weights` majorizes `spectrum`'s complement ordering, i.e. the
/// spectrum is no more mixed than the weights: every partial sum of the
/// descending spectrum is at least the corresponding partial sum of the
/// descending weights.
pub fn majorization_check(spectrum: &Spectrum, weights: &[f64]) -> Result<bool> {
    let total: f64 = weights.iter().sum();
    let s_total: f64 = spectrum.eigenvalues().iter().sum();
    if (total - 1.0).abs() > 1e-8 || (s_total - 1.0).abs() > 1e-8 {
        return Err(Error::param("weights", "both distributions must sum to 1"));
    }
    let mut w = weights.to_vec();
    w.sort_by(|x, y| y.total_cmp(x));
    let len = w.len().max(spectrum.len());
    let (mut acc_s, mut acc_w) = (0.0, 0.0);
    for i in 0..len {
        acc_s += spectrum.eigenvalues().get(i).copied().unwrap_or(0.0);
        acc_w += w.get(i).copied().unwrap_or(0.0);
        if acc_s < acc_w - MAJORIZATION_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Per-size statistics over Haar samples. Standard errors are taken over the
/// per-sample fragment averages.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarSizeStats {
    pub k: usize,
    pub n_fragments: usize,
    pub mean_h_f: f64,
    pub se_h_f: f64,
    pub mean_h_sf: f64,
    pub se_h_sf: f64,
    pub mean_mi: f64,
    pub se_mi: f64,
    /// Page's prediction for `H_F` and `H_SF`.
    pub page_h_f: f64,
    pub page_h_sf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarSampleStats {
    pub d_s: usize,
    pub d_e: usize,
    pub n_env: usize,
    pub n_samples: usize,
    pub mean_h_s: f64,
    pub se_h_s: f64,
    pub page_h_s: f64,
    /// Indexed by `k = 0..=N`.
    pub sizes: Vec<HaarSizeStats>,
}

impl HaarSampleStats {
    pub fn mi(&self) -> Vec<f64> {
        self.sizes.iter().map(|s| s.mean_mi).collect()
    }

    /// Redundancy against `H_S^max = ln D_S`.
    pub fn redundancy(&self, delta: f64) -> RedundancyResult {
        info::redundancy_from_curve(&self.mi(), delta, (self.d_s as f64).ln())
    }
}

/// Sample a Haar-random pure state: a normalized vector of i.i.d. standard
/// complex Gaussians.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    v
}

/// Mixed-radix layout: digit `i < N` is environment part `i` with radix
/// `d_e`, the top digit is the system with radix `d_s`.
struct Layout {
    d_s: usize,
    d_e: usize,
    n_env: usize,
}

impl Layout {
    fn dim(&self) -> usize {
        self.d_s * self.d_e.pow(self.n_env as u32)
    }

    /// Spectrum of the reduced state on the digits selected by `fragment`
    /// (plus the system if asked), computed from whichever Gram matrix is
    /// smaller.
    fn reduced_spectrum(&self, psi: &[Complex64], fragment: &Fragment, with_system: bool) -> Result<Spectrum> {
        let (mut dk, mut dt) = (1usize, 1usize);
        // (radix, kept, stride in the kept or traced local index), per digit
        let mut digits = Vec::with_capacity(self.n_env + 1);
        for i in 0..=self.n_env {
            let (radix, kept) = if i == self.n_env {
                (self.d_s, with_system)
            } else {
                (self.d_e, fragment.contains(i))
            };
            let size = if kept { &mut dk } else { &mut dt };
            digits.push((radix, kept, *size));
            *size *= radix;
        }
        let kept_rows = dk <= dt;
        let (rows, cols) = if kept_rows { (dk, dt) } else { (dt, dk) };
        let mut m = vec![Complex64::new(0.0, 0.0); rows * cols];
        let mut counter = vec![0usize; digits.len()];
        let (mut ki, mut ti) = (0usize, 0usize);
        for &amp in psi {
            let (r, c) = if kept_rows { (ki, ti) } else { (ti, ki) };
            m[r * cols + c] = amp;
            for (count, &(radix, kept, stride)) in counter.iter_mut().zip(&digits) {
                let idx = if kept { &mut ki } else { &mut ti };
                if *count + 1 < radix {
                    *count += 1;
                    *idx += stride;
                    break;
                }
                *idx -= (radix - 1) * stride;
                *count = 0;
            }
        }
        let mut gram = vec![Complex64::new(0.0, 0.0); rows * rows];
        for i in 0..rows {
            let ri = &m[i * cols..(i + 1) * cols];
            for j in i..rows {
                let rj = &m[j * cols..(j + 1) * cols];
                let v: Complex64 = ri.iter().zip(rj).map(|(p, q)| p * q.conj()).sum();
                gram[i * rows + j] = v;
                gram[j * rows + i] = v.conj();
            }
        }
        spectrum(&DensityMatrix::from_raw(rows, gram))
    }
}

struct SampleResult {
    h_s: f64,
    /// Per size: mean `H_F`, `H_SF`, `Ī` over that sample's fragments.
    per_k: Vec<(f64, f64, f64)>,
}

/// Mean entropies and mutual information of Haar-random states on
/// `D_S ⊗ D_E^{⊗N}` versus fragment size, with the total dimension capped at
/// [`DEFAULT_HAAR_CAP`].
pub fn haar_profile(
    d_s: usize,
    d_e: usize,
    n_env: usize,
    n_samples: usize,
    budget: usize,
    seed: u64,
) -> Result<HaarSampleStats> {
    haar_profile_with_cap(d_s, d_e, n_env, n_samples, budget, seed, DEFAULT_HAAR_CAP)
}

pub fn haar_profile_with_cap(
    d_s: usize,
    d_e: usize,
    n_env: usize,
    n_samples: usize,
    budget: usize,
    seed: u64,
    cap: usize,
) -> Result<HaarSampleStats> {
    if d_s < 2 || d_e < 2 {
        return Err(Error::param("dimensions", "D_S and D_E must be at least 2"));
    }
    if n_env == 0 {
        return Err(Error::param("n_env", "must be positive"));
    }
    if n_samples < 2 {
        return Err(Error::param("n_samples", "need at least two samples"));
    }
    let dim = (0..n_env).try_fold(d_s, |acc, _| acc.checked_mul(d_e).filter(|&d| d <= cap));
    let Some(dim) = dim else {
        return Err(Error::TooLarge {
            what: "Haar state dimension",
            size: d_s.saturating_mul(d_e.saturating_pow(n_env as u32)),
            cap,
        });
    };
    let layout = Layout { d_s, d_e, n_env };
    debug_assert_eq!(layout.dim(), dim);

    let groups: Vec<Vec<Fragment>> = (0..=n_env)
        .map(|k| enumerate_fragments(n_env, k, budget, seed))
        .collect::<Result<_>>()?;

    let samples: Vec<SampleResult> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| -> Result<SampleResult> {
            let psi = haar_state(dim, &mut stream(seed, tag::HAAR, &[d_s as u64, d_e as u64, n_env as u64, i]));
            let h_s = layout.reduced_spectrum(&psi, &Fragment::empty(n_env), true)?.entropy();
            let per_k = groups
                .iter()
                .map(|frags| -> Result<(f64, f64, f64)> {
                    let (mut hf, mut hsf) = (0.0, 0.0);
                    for f in frags {
                        hf += layout.reduced_spectrum(&psi, f, false)?.entropy();
                        hsf += layout.reduced_spectrum(&psi, f, true)?.entropy();
                    }
                    let n = frags.len() as f64;
                    Ok((hf / n, hsf / n, h_s + (hf - hsf) / n))
                })
                .collect::<Result<_>>()?;
            Ok(SampleResult { h_s, per_k })
        })
        .collect::<Result<_>>()?;

    let (mean_h_s, se_h_s) = mean_se(samples.iter().map(|s| s.h_s));
    let env_dim = |k: usize| (d_e as u64).pow(k as u32);
    let page = |sub: u64, total: u64| {
        let rest = total / sub;
        page_entropy(sub.min(rest), sub.max(rest))
    };
    let total = dim as u64;
    let mut sizes = Vec::with_capacity(n_env + 1);
    for (k, frags) in groups.iter().enumerate() {
        let (mean_h_f, se_h_f) = mean_se(samples.iter().map(|s| s.per_k[k].0));
        let (mean_h_sf, se_h_sf) = mean_se(samples.iter().map(|s| s.per_k[k].1));
        let (mean_mi, se_mi) = mean_se(samples.iter().map(|s| s.per_k[k].2));
        sizes.push(HaarSizeStats {
            k,
            n_fragments: frags.len(),
            mean_h_f,
            se_h_f,
            mean_h_sf,
            se_h_sf,
            mean_mi,
            se_mi,
            page_h_f: page(env_dim(k), total)?,
            page_h_sf: page(d_s as u64 * env_dim(k), total)?,
        });
    }
    Ok(HaarSampleStats {
        d_s,
        d_e,
        n_env,
        n_samples,
        mean_h_s,
        se_h_s,
        page_h_s: page(d_s as u64, total)?,
        sizes,
    })
}
