//! Fragment-averaged mutual information and redundancy.
//!
//! Since the global state is pure, `H_F̄ = H_SF` and `H_SF̄ = H_F`. A profile
//! therefore only diagonalizes fragments with `#F ≤ N/2` and reads the values
//! for their complements off the same spectra. Fragment samples for
//! `#F > N/2` are by construction the complements of those for `N − #F`, so
//! `Ī(k) + Ī(N−k) = 2H_S` holds fragment by fragment whenever `k ≠ N/2`.

use rayon::prelude::*;

use crate::analytic::binary_entropy;
use crate::error::Result;
use crate::model::{enumerate_fragments, Couplings, Fragment, InitialState, ModelParams};
use crate::rdm::{self, spectrum, Spectrum};

/// Default redundancy deficit.
pub const DEFAULT_DELTA: f64 = 0.1;

/// `ℐ(S:F) = H_S + H_F − H_SF`.
pub fn mutual_information(h_s: f64, h_f: f64, h_sf: f64) -> f64 {
    h_s + h_f - h_sf
}

/// Averages over all sampled fragments of one size.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeStats {
    pub k: usize,
    pub n_fragments: usize,
    /// Every fragment of this size was included.
    pub exhaustive: bool,
    pub mean_h_f: f64,
    pub se_h_f: f64,
    pub mean_h_sf: f64,
    pub se_h_sf: f64,
    pub mean_mi: f64,
    pub se_mi: f64,
    /// Mean `n`-th largest eigenvalue of `ρ_F`, descending. Only the first
    /// `min(2^k, 2^{N+1−k})` ranks can be nonzero; the rest are omitted.
    pub mean_eigenvalues: Vec<f64>,
}

/// Mutual-information profile of one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct MIProfile {
    pub t: f64,
    pub n_env: usize,
    pub h_s: f64,
    /// Indexed by fragment size `k = 0..=N`.
    pub sizes: Vec<SizeStats>,
}

impl MIProfile {
    /// `Ī(k)` for `k = 0..=N`.
    pub fn mi(&self) -> Vec<f64> {
        self.sizes.iter().map(|s| s.mean_mi).collect()
    }

    pub fn is_exhaustive(&self) -> bool {
        self.sizes.iter().all(|s| s.exhaustive)
    }

    pub fn redundancy(&self, delta: f64, h_s_max: f64) -> RedundancyResult {
        redundancy(self, delta, h_s_max)
    }
}

/// Maximum system entropy `H₂[b]`.
pub fn h_s_max(b: f64) -> f64 {
    binary_entropy(b)
}

/// Neumaier-compensated mean and standard error.
pub(crate) fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (sum, n) = compensated_sum(values.clone());
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let (ss, _) = compensated_sum(values.map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (n as f64 - 1.0) / n as f64).sqrt())
}

fn compensated_sum(values: impl Iterator<Item = f64>) -> (f64, usize) {
    let (mut sum, mut comp, mut n) = (0.0f64, 0.0f64, 0usize);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
        n += 1;
    }
    (sum + comp, n)
}

fn mean_vectors<'a>(vs: impl Iterator<Item = &'a [f64]> + Clone, len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| mean_se(vs.clone().map(|v| v.get(i).copied().unwrap_or(0.0))).0)
        .collect()
}

/// Number of eigenvalues of `ρ_F` that can be nonzero when `#F = k`.
pub fn rank_bound(k: usize, n_env: usize) -> usize {
    1usize << k.min(n_env + 1 - k)
}

struct FragmentResult {
    h_f: f64,
    h_sf: f64,
    /// Leading spectrum of `ρ_F` and of `ρ_F̄`.
    spec_f: Vec<f64>,
    spec_fbar: Vec<f64>,
}

/// Entropies for a fragment with `2#F ≤ N`, diagonalizing the smallest
/// matrices that carry them.
fn fragment_result(couplings: &Couplings, f: &Fragment, t: f64, state: &InitialState) -> Result<FragmentResult> {
    let n = f.n_env();
    let k = f.size();
    debug_assert!(2 * k <= n);
    let s_f = spectrum(&rdm::rho_fragment_analytic(couplings, f, t, state)?)?;
    let s_other = if k + 1 <= n - k {
        spectrum(&rdm::rho_sys_fragment_analytic(couplings, f, t, state)?)?
    } else {
        spectrum(&rdm::rho_fragment_analytic(couplings, &f.complement(), t, state)?)?
    };
    Ok(FragmentResult {
        h_f: s_f.entropy(),
        h_sf: s_other.entropy(),
        spec_f: s_f.leading(rank_bound(k, n)),
        spec_fbar: s_other.leading(rank_bound(n - k, n)),
    })
}

/// Mutual-information profile at time `t`, averaging over at most `budget`
/// fragments per size.
pub fn build_profile(
    params: &ModelParams,
    couplings: &Couplings,
    t: f64,
    budget: usize,
    seed: u64,
) -> Result<MIProfile> {
    params.validate()?;
    let n = couplings.n_env();
    let state = params.initial_state();
    let h_s = rdm::entropy(&rdm::rho_sys_fragment_analytic(couplings, &Fragment::empty(n), t, &state)?)?;

    let half = n / 2;
    let mut groups = Vec::with_capacity(half + 1);
    for k in 0..=half {
        groups.push(enumerate_fragments(n, k, budget, seed)?);
    }
    let work: Vec<&Fragment> = groups.iter().flatten().collect();
    let results: Vec<FragmentResult> = work
        .par_iter()
        .map(|f| fragment_result(couplings, f, t, &state))
        .collect::<Result<_>>()?;

    let mut sizes: Vec<Option<SizeStats>> = vec![None; n + 1];
    let mut offset = 0;
    for (k, frags) in groups.iter().enumerate() {
        let rs = &results[offset..offset + frags.len()];
        offset += frags.len();
        let exhaustive = crate::model::binomial(n, k) == frags.len() as u128;

        let own = stats(
            k,
            exhaustive,
            rs.iter().map(|r| (r.h_f, r.h_sf)),
            rs.iter().map(|r| r.spec_f.as_slice()),
            rank_bound(k, n),
            h_s,
        );
        sizes[k] = Some(own);
        if n - k != k {
            let comp = stats(
                n - k,
                exhaustive,
                rs.iter().map(|r| (r.h_sf, r.h_f)),
                rs.iter().map(|r| r.spec_fbar.as_slice()),
                rank_bound(n - k, n),
                h_s,
            );
            sizes[n - k] = Some(comp);
        }
    }
    Ok(MIProfile {
        t,
        n_env: n,
        h_s,
        sizes: sizes.into_iter().map(|s| s.expect("every size filled")).collect(),
    })
}

fn stats<'a>(
    k: usize,
    exhaustive: bool,
    entropies: impl Iterator<Item = (f64, f64)> + Clone,
    spectra: impl Iterator<Item = &'a [f64]> + Clone,
    ranks: usize,
    h_s: f64,
) -> SizeStats {
    let n_fragments = entropies.clone().count();
    let (mean_h_f, se_h_f) = mean_se(entropies.clone().map(|e| e.0));
    let (mean_h_sf, se_h_sf) = mean_se(entropies.clone().map(|e| e.1));
    let (mean_mi, se_mi) = mean_se(entropies.map(|(hf, hsf)| mutual_information(h_s, hf, hsf)));
    SizeStats {
        k,
        n_fragments,
        exhaustive,
        mean_h_f,
        se_h_f,
        mean_h_sf,
        se_h_sf,
        mean_mi,
        se_mi,
        mean_eigenvalues: mean_vectors(spectra, ranks),
    }
}

/// Redundancy of one profile at one deficit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RedundancyResult {
    pub delta: f64,
    /// `(1−δ) H_S^max`.
    pub threshold: f64,
    /// False when `Ī` never reaches the threshold; all fractions and
    /// redundancies are then NaN.
    pub defined: bool,
    /// Smallest fragment size meeting the threshold.
    pub k_star: Option<usize>,
    pub f_delta_exact: f64,
    pub f_delta_interp: f64,
    pub r_exact: f64,
    pub r_interp: f64,
}

/// Comparison slack for the threshold test.
const THRESHOLD_TOL: f64 = 1e-12;

pub fn redundancy(profile: &MIProfile, delta: f64, h_s_max: f64) -> RedundancyResult {
    redundancy_from_curve(&profile.mi(), delta, h_s_max)
}

/// Redundancy from `Ī(k)` sampled at `k = 0..=N`.
///
/// `f_δ` is the smallest `k/N` with `Ī(k) ≥ (1−δ)H_S^max`. The interpolated
/// value replaces it by the crossing of the straight line between the
/// bracketing sizes.
pub fn redundancy_from_curve(mi: &[f64], delta: f64, h_s_max: f64) -> RedundancyResult {
    let n = mi.len().saturating_sub(1);
    let threshold = (1.0 - delta) * h_s_max;
    let k_star = mi.iter().position(|&v| v >= threshold - THRESHOLD_TOL).filter(|_| n > 0);
    let Some(k) = k_star else {
        return RedundancyResult {
            delta,
            threshold,
            defined: false,
            k_star: None,
            f_delta_exact: f64::NAN,
            f_delta_interp: f64::NAN,
            r_exact: f64::NAN,
            r_interp: f64::NAN,
        };
    };
    let f_exact = k as f64 / n as f64;
    let f_interp = if k == 0 || mi[k] <= threshold {
        f_exact
    } else {
        let (lo, hi) = (mi[k - 1], mi[k]);
        let frac = ((threshold - lo) / (hi - lo)).clamp(0.0, 1.0);
        (k as f64 - 1.0 + frac) / n as f64
    };
    RedundancyResult {
        delta,
        threshold,
        defined: true,
        k_star: Some(k),
        f_delta_exact: f_exact,
        f_delta_interp: f_interp,
        r_exact: 1.0 / f_exact,
        r_interp: 1.0 / f_interp,
    }
}

/// Mean ranked eigenvalues of `ρ_F` over fragments of size `k`.
pub fn eigenvalue_ranks(
    params: &ModelParams,
    couplings: &Couplings,
    t: f64,
    k: usize,
    budget: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    params.validate()?;
    let n = couplings.n_env();
    let state = params.initial_state();
    let frags = enumerate_fragments(n, k, budget, seed)?;
    let ranks = rank_bound(k, n);
    let spectra: Vec<Vec<f64>> = frags
        .par_iter()
        .map(|f| -> Result<Vec<f64>> {
            // ρ_F and ρ_{SF̄} share their nonzero spectrum
            let s: Spectrum = if k <= n + 1 - k {
                spectrum(&rdm::rho_fragment_analytic(couplings, f, t, &state)?)?
            } else {
                spectrum(&rdm::rho_sys_fragment_analytic(couplings, &f.complement(), t, &state)?)?
            };
            Ok(s.leading(ranks))
        })
        .collect::<Result<_>>()?;
    Ok(mean_vectors(spectra.iter().map(|v| v.as_slice()), ranks))
}
