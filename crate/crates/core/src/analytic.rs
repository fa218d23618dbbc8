//! Closed-form decoherence factors, system entropy and long-time moments.
//!
//! Each environment spin contributes a factor
//! `a·e^{−iφ} + (1−a)·e^{+iφ} = cos φ + i(1−2a) sin φ` to a decoherence
//! factor, where `φ` is the phase difference that spin accumulates between
//! the two branches being compared. For `a = 1/2` the imaginary part vanishes
//! identically.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::rng::{self, tag};
use crate::model::{Couplings, Fragment};

/// Tolerance on `|Γ| ≤ 1`.
pub const MODULUS_TOL: f64 = 1e-12;

/// Products over more spins than this are accumulated in log-magnitude form.
const LOG_PRODUCT_THRESHOLD: usize = 32;

/// A decoherence factor `Γ`, `Γ_F` or `Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceFactor(pub Complex64);

impl DecoherenceFactor {
    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn modulus(&self) -> f64 {
        self.0.norm()
    }

    pub fn modulus_sqr(&self) -> f64 {
        self.0.norm_sqr()
    }
}

/// `a·e^{−iφ} + (1−a)·e^{iφ}`.
#[inline]
pub fn spin_factor(phi: f64, a: f64) -> Complex64 {
    let (s, c) = phi.sin_cos();
    Complex64::new(c, (1.0 - 2.0 * a) * s)
}

/// Product of [`spin_factor`] over a set of phases.
fn factor_product(phases: impl ExactSizeIterator<Item = f64>, a: f64) -> Complex64 {
    if phases.len() <= LOG_PRODUCT_THRESHOLD {
        return phases.fold(Complex64::new(1.0, 0.0), |acc, phi| acc * spin_factor(phi, a));
    }
    let mut log_mag = 0.0;
    let mut arg = 0.0;
    for phi in phases {
        let z = spin_factor(phi, a);
        let r = z.norm();
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        log_mag += r.ln();
        arg += z.arg();
    }
    Complex64::from_polar(log_mag.exp(), arg)
}

/// Decoherence factor of the system restricted to `subset`:
/// `∏_{i∈subset} [a e^{−2itdᵢ} + (1−a) e^{2itdᵢ}]`.
///
/// `Fragment::full(n)` gives the system's own `Γ`, any other fragment `Γ_F`.
pub fn gamma(d: &[f64], subset: &Fragment, t: f64, a: f64) -> DecoherenceFactor {
    let phases: Vec<f64> = subset.indices().map(|i| 2.0 * t * d[i]).collect();
    DecoherenceFactor(factor_product(phases.into_iter(), a))
}

/// Gaussian short-time approximation `exp(−2t² Σ dᵢ²)` of the balanced `Γ`.
pub fn short_time_gamma(d: &[f64], t: f64) -> f64 {
    let s: f64 = d.iter().map(|x| x * x).sum();
    (-2.0 * t * t * s).exp()
}

/// Binary entropy `−x ln x − (1−x) ln(1−x)` in nats.
pub fn binary_entropy(x: f64) -> f64 {
    let h = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.ln() };
    h(x) + h(1.0 - x)
}

/// Binary entropy in bits.
pub fn binary_entropy_bits(x: f64) -> f64 {
    binary_entropy(x) / LN_2
}

/// Von Neumann entropy of the system state
/// `[[b, √(b(1−b))γ], [√(b(1−b))γ*, 1−b]]`.
pub fn entropy_system(gamma: Complex64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::param("b", "must lie in [0, 1]"));
    }
    let g2 = gamma.norm_sqr();
    if g2.sqrt() > 1.0 + MODULUS_TOL {
        return Err(Error::FactorModulus { modulus: g2.sqrt() });
    }
    let x = 2.0 * b - 1.0;
    let r = (x * x + 4.0 * b * (1.0 - b) * g2.min(1.0)).sqrt().min(1.0);
    Ok(binary_entropy(0.5 * (1.0 + r)))
}

/// Balanced-case form `ln 2 − Γ artanh Γ − ln √(1 − Γ²)` for real `Γ`.
pub fn entropy_system_balanced(gamma: f64) -> Result<f64> {
    let g = gamma.abs();
    if g > 1.0 + MODULUS_TOL {
        return Err(Error::FactorModulus { modulus: g });
    }
    if g >= 1.0 {
        return Ok(0.0);
    }
    Ok(LN_2 - g * g.atanh() - 0.5 * (-g * g).ln_1p())
}

/// `χ(b) = 4b(1−b) artanh(1−2b) / (1−2b)`, with the removable singularity at
/// `b = 1/2` handled by its series.
pub fn chi(b: f64) -> Result<f64> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::param("b", "chi is defined on the open interval (0, 1)"));
    }
    let x = 1.0 - 2.0 * b;
    let x2 = x * x;
    if x.abs() < 1e-4 {
        // (1 − x²)(1 + x²/3 + x⁴/5)
        return Ok((1.0 - x2) * (1.0 + x2 / 3.0 + x2 * x2 / 5.0));
    }
    Ok((1.0 - x2) * x.atanh() / x)
}

/// Small-factor approximation of the mutual information under pure
/// decoherence: `H₂[b] − χ(b)(|Γ|² + |Γ_F|² − |Γ_F̄|²)/2`.
pub fn mi_pure_decoherence(gamma_all: Complex64, gamma_f: Complex64, gamma_fbar: Complex64, b: f64) -> f64 {
    // χ → 0 at the endpoints, where the system is already a pointer state
    let chi_b = chi(b).unwrap_or(0.0);
    binary_entropy(b)
        - chi_b * (gamma_all.norm_sqr() + gamma_f.norm_sqr() - gamma_fbar.norm_sqr()) / 2.0
}

/// Mixing factor `Δ_{r−r'} = ∏_{k∉F} [a e^{−itθ_k} + (1−a) e^{itθ_k}]` with
/// `θ_k = Σ_{j∈F} (m_jk + m_kj)(r_j − r'_j)`.
///
/// `r` and `r_prime` hold `±1` for each spin of `fragment`, in ascending index
/// order.
pub fn delta_factor(
    couplings: &Couplings,
    fragment: &Fragment,
    r: &[i8],
    r_prime: &[i8],
    t: f64,
    a: f64,
) -> Result<DecoherenceFactor> {
    let members: Vec<usize> = fragment.indices().collect();
    if r.len() != members.len() || r_prime.len() != members.len() {
        return Err(Error::DimensionMismatch {
            expected: members.len(),
            actual: r.len().max(r_prime.len()),
        });
    }
    if r.iter().chain(r_prime).any(|&x| x != 1 && x != -1) {
        return Err(Error::param("r", "entries must be +1 or -1"));
    }
    let phases: Vec<f64> = fragment
        .complement()
        .indices()
        .map(|k| {
            let theta: f64 = members
                .iter()
                .zip(r.iter().zip(r_prime))
                .map(|(&j, (&rj, &rpj))| couplings.pair(j, k) * f64::from(rj - rpj))
                .sum();
            t * theta
        })
        .collect();
    Ok(DecoherenceFactor(factor_product(phases.into_iter(), a)))
}

/// Sample statistics of a factor over uniformly drawn times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMoments {
    pub n_samples: usize,
    /// Sample mean of the factor.
    pub mean: Complex64,
    /// Standard error of `mean`, combining real and imaginary parts.
    pub mean_std_error: f64,
    /// Sample mean of `|factor|²`.
    pub second_moment: f64,
    pub second_moment_std_error: f64,
}

impl TimeMoments {
    /// `|mean| / se`.
    pub fn mean_z(&self) -> f64 {
        if self.mean_std_error > 0.0 {
            self.mean.norm() / self.mean_std_error
        } else {
            0.0
        }
    }

    pub fn second_moment_z(&self, predicted: f64) -> f64 {
        if self.second_moment_std_error > 0.0 {
            (self.second_moment - predicted).abs() / self.second_moment_std_error
        } else {
            0.0
        }
    }
}

/// Long-time averages of `factor(t)` with `t` uniform on `window`.
///
/// Times come from one deterministic stream and are evaluated in parallel, so
/// the result does not depend on the thread count. The caller is responsible
/// for placing the window well beyond the relevant coupling timescale.
pub fn time_avg_moments<F>(factor: F, window: (f64, f64), n_samples: usize, seed: u64) -> Result<TimeMoments>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let (t_min, t_max) = window;
    if !(t_min.is_finite() && t_max.is_finite() && t_max > t_min && t_min >= 0.0) {
        return Err(Error::param("window", "need 0 <= t_min < t_max"));
    }
    if n_samples < 100 {
        return Err(Error::param("n_samples", "need at least 100 samples"));
    }
    let mut rng = rng::stream(seed, tag::TIME_AVERAGE, &[n_samples as u64]);
    let times: Vec<f64> = (0..n_samples).map(|_| rng.random_range(t_min..t_max)).collect();
    let values: Vec<Complex64> = times.par_iter().map(|&t| factor(t)).collect();

    let n = n_samples as f64;
    let mean = values.iter().sum::<Complex64>() / n;
    let sq: Vec<f64> = values.iter().map(|z| z.norm_sqr()).collect();
    let second = sq.iter().sum::<f64>() / n;
    let var_re = values.iter().map(|z| (z.re - mean.re).powi(2)).sum::<f64>() / (n - 1.0);
    let var_im = values.iter().map(|z| (z.im - mean.im).powi(2)).sum::<f64>() / (n - 1.0);
    let var_sq = sq.iter().map(|x| (x - second).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(TimeMoments {
        n_samples,
        mean,
        mean_std_error: ((var_re + var_im) / n).sqrt(),
        second_moment: second,
        second_moment_std_error: (var_sq / n).sqrt(),
    })
}

/// Infinite-time value of `⟨|Γ_F|²⟩` (or `⟨|Δ|²⟩`) for a product over
/// `n_factors` independent spins: `[a² + (1−a)²]^n`.
pub fn predicted_second_moment(a: f64, n_factors: usize) -> f64 {
    (a * a + (1.0 - a) * (1.0 - a)).powi(n_factors as i32)
}
