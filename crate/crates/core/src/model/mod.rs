//! The spin universe: parameters, couplings, initial state, fragments and
//! time grids.
//!
//! A qubit `S` couples to `N` environment spins through
//! `H = σᶻ_S ⊗ Σᵢ dᵢ σᶻᵢ + Σ_{j≠k} m_jk σᶻⱼ σᶻₖ`, starting from the product state
//! `(β↑|↑⟩ + β↓|↓⟩) ⊗ (α₊|+1⟩ + α₋|−1⟩)^{⊗N}`. Everything is diagonal in the
//! `z` basis, which is what makes the closed forms in [`crate::analytic`] and
//! [`crate::rdm`] possible.

mod fragment;
pub mod rng;

pub use fragment::{binomial, enumerate_fragments, Fragment, MAX_ENV};

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Default number of fragments averaged per fragment size.
pub const DEFAULT_BUDGET: usize = 2000;

/// Parameters defining one universe.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Number of environment spins `N`.
    pub n_env: usize,
    /// Standard deviation of the system–environment couplings `dᵢ`.
    pub sigma_d: f64,
    /// Standard deviation of the intra-environment couplings `m_jk`.
    pub sigma_m: f64,
    /// `|α₊|²`, weight of `|+1⟩` in each environment spin.
    pub a: f64,
    /// `|β↑|²`, weight of `|↑⟩` in the system.
    pub b: f64,
    /// Phase of `α₊` relative to `α₋`, radians.
    pub alpha_phase: f64,
    /// Phase of `β↑` relative to `β↓`, radians.
    pub beta_phase: f64,
    pub seed: u64,
}

impl ModelParams {
    /// Balanced initial state (`a = b = 1/2`, zero phases).
    pub fn balanced(n_env: usize, sigma_d: f64, sigma_m: f64, seed: u64) -> Self {
        ModelParams {
            n_env,
            sigma_d,
            sigma_m,
            a: 0.5,
            b: 0.5,
            alpha_phase: 0.0,
            beta_phase: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_env == 0 || self.n_env > MAX_ENV {
            return Err(Error::param("n_env", format!("must be in 1..={MAX_ENV}")));
        }
        for (name, v) in [("sigma_d", self.sigma_d), ("sigma_m", self.sigma_m)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, "must be finite and nonnegative"));
            }
        }
        for (name, v) in [("a", self.a), ("b", self.b)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, "must lie in [0, 1]"));
            }
        }
        for (name, v) in [("alpha_phase", self.alpha_phase), ("beta_phase", self.beta_phase)] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> InitialState {
        InitialState::new(self.a, self.b, self.alpha_phase, self.beta_phase)
    }
}

/// Single-spin amplitudes of the product initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub a: f64,
    pub b: f64,
    pub alpha_plus: Complex64,
    pub alpha_minus: Complex64,
    pub beta_up: Complex64,
    pub beta_down: Complex64,
}

impl InitialState {
    pub fn new(a: f64, b: f64, alpha_phase: f64, beta_phase: f64) -> Self {
        InitialState {
            a,
            b,
            alpha_plus: Complex64::from_polar(a.sqrt(), alpha_phase),
            alpha_minus: Complex64::new((1.0 - a).sqrt(), 0.0),
            beta_up: Complex64::from_polar(b.sqrt(), beta_phase),
            beta_down: Complex64::new((1.0 - b).sqrt(), 0.0),
        }
    }

    pub fn balanced() -> Self {
        InitialState::new(0.5, 0.5, 0.0, 0.0)
    }

    /// Amplitude of environment spin value `r = +1` (bit 0) or `r = −1` (bit 1).
    pub fn alpha(&self, bit: u64) -> Complex64 {
        if bit == 0 {
            self.alpha_plus
        } else {
            self.alpha_minus
        }
    }

    /// Amplitude of system value `↑` (bit 0) or `↓` (bit 1).
    pub fn beta(&self, bit: u64) -> Complex64 {
        if bit == 0 {
            self.beta_up
        } else {
            self.beta_down
        }
    }

    /// True when every amplitude is real and both weights are `1/2`, in which
    /// case all reduced density matrices of the model are real symmetric.
    pub fn is_balanced_real(&self) -> bool {
        self.a == 0.5
            && self.b == 0.5
            && self.alpha_plus.im == 0.0
            && self.beta_up.im == 0.0
            && self.alpha_plus.re > 0.0
            && self.beta_up.re > 0.0
    }
}

/// Coupling constants of one universe.
///
/// `m` is a full `N × N` matrix in row-major order; its diagonal is ignored
/// and only `m_jk + m_kj` enters any physical quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Couplings {
    d: Vec<f64>,
    m: Vec<f64>,
}

impl Couplings {
    /// Explicit couplings; `m` is row-major `d.len() × d.len()`.
    pub fn new(d: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        let n = d.len();
        if n == 0 || n > MAX_ENV {
            return Err(Error::param("d", format!("length must be in 1..={MAX_ENV}")));
        }
        if m.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: m.len(),
            });
        }
        if d.iter().chain(m.iter()).any(|x| !x.is_finite()) {
            return Err(Error::param("couplings", "must be finite"));
        }
        Ok(Couplings { d, m })
    }

    pub fn from_rows(d: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = d.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::param("m", format!("must be a {n}x{n} matrix")));
        }
        Couplings::new(d, rows.concat())
    }

    /// Only system–environment couplings; `m ≡ 0`.
    pub fn pure_decoherence(d: Vec<f64>) -> Result<Self> {
        let n = d.len();
        Couplings::new(d, vec![0.0; n * n])
    }

    /// Draw `dᵢ ~ N(0, σ_d²)` and `m_jk ~ N(0, σ_m²)` for `j ≠ k`.
    pub fn sample(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let n = params.n_env;
        let mut d = vec![0.0; n];
        let mut m = vec![0.0; n * n];
        if params.sigma_d > 0.0 {
            let dist = Normal::new(0.0, params.sigma_d).expect("validated sigma_d");
            let mut rng = rng::stream(params.seed, rng::tag::COUPLINGS_D, &[n as u64]);
            for di in &mut d {
                *di = dist.sample(&mut rng);
            }
        }
        if params.sigma_m > 0.0 {
            let dist = Normal::new(0.0, params.sigma_m).expect("validated sigma_m");
            let mut rng = rng::stream(params.seed, rng::tag::COUPLINGS_M, &[n as u64]);
            for j in 0..n {
                for k in 0..n {
                    if j != k {
                        m[j * n + k] = dist.sample(&mut rng);
                    }
                }
            }
        }
        Ok(Couplings { d, m })
    }

    pub fn n_env(&self) -> usize {
        self.d.len()
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Raw `m_jk`.
    pub fn m(&self, j: usize, k: usize) -> f64 {
        self.m[j * self.d.len() + k]
    }

    pub fn m_flat(&self) -> &[f64] {
        &self.m
    }

    /// `m_jk + m_kj`, zero on the diagonal.
    pub fn pair(&self, j: usize, k: usize) -> f64 {
        if j == k {
            0.0
        } else {
            self.m(j, k) + self.m(k, j)
        }
    }

    /// Same physics with `m` replaced by `(m + mᵀ)/2` and a zero diagonal.
    pub fn symmetrized(&self) -> Self {
        let n = self.n_env();
        let mut m = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    m[j * n + k] = 0.5 * (self.m(j, k) + self.m(k, j));
                }
            }
        }
        Couplings {
            d: self.d.clone(),
            m,
        }
    }

    /// SHA-256 of the little-endian coupling values, hex encoded.
    pub fn digest_hex(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.d.len() as u64).to_le_bytes());
        for x in self.d.iter().chain(self.m.iter()) {
            h.update(x.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Characteristic times. Infinite when the corresponding σ vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timescales {
    /// `(√N σ_d)⁻¹`, onset of decoherence.
    pub tau_d: f64,
    /// `(√N σ_m)⁻¹`, onset of relaxation.
    pub tau_m: f64,
    pub inv_sigma_d: f64,
    pub inv_sigma_m: f64,
}

pub fn timescales(params: &ModelParams) -> Timescales {
    let sqrt_n = (params.n_env as f64).sqrt();
    let inv = |x: f64| if x > 0.0 { 1.0 / x } else { f64::INFINITY };
    Timescales {
        tau_d: inv(sqrt_n * params.sigma_d),
        tau_m: inv(sqrt_n * params.sigma_m),
        inv_sigma_d: inv(params.sigma_d),
        inv_sigma_m: inv(params.sigma_m),
    }
}

/// Strictly increasing, nonnegative sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::param("times", "grid is empty"));
        }
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::param("times", "entries must be finite and >= 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("times", "must be strictly increasing"));
        }
        Ok(TimeGrid { times })
    }

    pub fn linear(t_min: f64, t_max: f64, n_points: usize) -> Result<Self> {
        if n_points == 1 {
            return TimeGrid::new(vec![t_min]);
        }
        if n_points == 0 || t_max <= t_min {
            return Err(Error::param("time grid", "need n_points >= 1 and t_max > t_min"));
        }
        let step = (t_max - t_min) / (n_points - 1) as f64;
        let mut times: Vec<f64> = (0..n_points).map(|i| t_min + step * i as f64).collect();
        times[n_points - 1] = t_max;
        TimeGrid::new(times)
    }

    pub fn logarithmic(t_min: f64, t_max: f64, n_points: usize) -> Result<Self> {
        if t_min <= 0.0 {
            return Err(Error::param("t_min", "logarithmic grid needs t_min > 0"));
        }
        if n_points == 1 {
            return TimeGrid::new(vec![t_min]);
        }
        if n_points == 0 || t_max <= t_min {
            return Err(Error::param("time grid", "need n_points >= 1 and t_max > t_min"));
        }
        let (l0, l1) = (t_min.ln(), t_max.ln());
        let step = (l1 - l0) / (n_points - 1) as f64;
        let mut times: Vec<f64> = (0..n_points).map(|i| (l0 + step * i as f64).exp()).collect();
        times[0] = t_min;
        times[n_points - 1] = t_max;
        TimeGrid::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}
