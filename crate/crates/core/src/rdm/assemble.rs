//! Closed-form assembly of reduced states.
//!
//! Tracing out a spin `τ` whose `z` value multiplies a sum `X_τ = Σ_j G_jτ r_j`
//! of kept-spin values in the phase leaves, on the kept entry `(x, x')`, the
//! factor `p_τ e^{−itΔ} + (1−p_τ) e^{itΔ}` with `Δ = X_τ(x) − X_τ(x')`, where
//! `p_τ` is the weight of `τ` being `+1`. Writing `r = 1 − 2·bit` turns
//! `tΔ` into `φ_τ(x') − φ_τ(x)` with `φ_τ(x) = 2t Σ_{j set in x} G_jτ`, so each
//! traced spin needs only a table of `cos φ_τ` and `sin φ_τ` over kept
//! configurations.
//!
//! For `ρ_F` the traced spins are the system (weight `b`, couplings `d_j`) and
//! every `k ∉ F` (weight `a`, couplings `m_jk + m_kj`). For `ρ_SF` the system
//! is kept as the top local bit and each `k ∉ F` additionally couples to it
//! through `d_k`.

use num_complex::Complex64;

use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::model::{Couplings, Fragment, InitialState};

/// Largest fragment assembled by default.
pub const DEFAULT_FRAGMENT_CAP: usize = 14;

struct TracedSpin {
    weight: f64,
    /// Coupling to each kept qubit, in local bit order.
    couplings: Vec<f64>,
}

fn assemble(kept: &[[Complex64; 2]], traced: &[TracedSpin], t: f64) -> DensityMatrix {
    let n_kept = kept.len();
    let dim = 1usize << n_kept;

    let amp: Vec<Complex64> = (0..dim)
        .map(|x| (0..n_kept).fold(Complex64::new(1.0, 0.0), |acc, b| acc * kept[b][x >> b & 1]))
        .collect();

    // per traced spin: cos/sin tables and the (1 − 2p) asymmetry
    let tables: Vec<(Vec<f64>, Vec<f64>, f64)> = traced
        .iter()
        .map(|spin| {
            let mut w = vec![0.0; dim];
            for x in 1..dim {
                let low = x.trailing_zeros() as usize;
                w[x] = w[x & (x - 1)] + spin.couplings[low];
            }
            let (s, c): (Vec<f64>, Vec<f64>) = w.iter().map(|&wx| (2.0 * t * wx).sin_cos()).unzip();
            (c, s, 1.0 - 2.0 * spin.weight)
        })
        .collect();

    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    let mut row = vec![Complex64::new(0.0, 0.0); dim];
    for x in 0..dim {
        let ax = amp[x];
        for xp in x..dim {
            row[xp] = ax * amp[xp].conj();
        }
        for (c, s, asym) in &tables {
            let (cx, sx) = (c[x], s[x]);
            if *asym == 0.0 {
                for xp in x + 1..dim {
                    row[xp] *= c[xp] * cx + s[xp] * sx;
                }
            } else {
                for xp in x + 1..dim {
                    let cos = c[xp] * cx + s[xp] * sx;
                    let sin = s[xp] * cx - c[xp] * sx;
                    row[xp] *= Complex64::new(cos, asym * sin);
                }
            }
        }
        data[x * dim + x] = Complex64::new(row[x].re, 0.0);
        for xp in x + 1..dim {
            data[x * dim + xp] = row[xp];
            data[xp * dim + x] = row[xp].conj();
        }
    }
    DensityMatrix::from_raw(dim, data)
}

fn check_cap(fragment: &Fragment, couplings: &Couplings, cap: usize) -> Result<()> {
    if fragment.n_env() != couplings.n_env() {
        return Err(Error::DimensionMismatch {
            expected: couplings.n_env(),
            actual: fragment.n_env(),
        });
    }
    if fragment.size() > cap {
        return Err(Error::TooLarge {
            what: "fragment size",
            size: fragment.size(),
            cap,
        });
    }
    Ok(())
}

fn env_kept(fragment: &Fragment, state: &InitialState) -> Vec<[Complex64; 2]> {
    fragment
        .indices()
        .map(|_| [state.alpha_plus, state.alpha_minus])
        .collect()
}

/// `ρ̃_F`, unitarily equivalent to the reduced state of `fragment` at time `t`.
pub fn rho_fragment_analytic(
    couplings: &Couplings,
    fragment: &Fragment,
    t: f64,
    state: &InitialState,
) -> Result<DensityMatrix> {
    rho_fragment_analytic_with_cap(couplings, fragment, t, state, DEFAULT_FRAGMENT_CAP)
}

pub fn rho_fragment_analytic_with_cap(
    couplings: &Couplings,
    fragment: &Fragment,
    t: f64,
    state: &InitialState,
    cap: usize,
) -> Result<DensityMatrix> {
    check_cap(fragment, couplings, cap)?;
    let members: Vec<usize> = fragment.indices().collect();
    let mut traced = Vec::with_capacity(couplings.n_env() - members.len() + 1);
    traced.push(TracedSpin {
        weight: state.b,
        couplings: members.iter().map(|&j| couplings.d()[j]).collect(),
    });
    for k in fragment.complement().indices() {
        traced.push(TracedSpin {
            weight: state.a,
            couplings: members.iter().map(|&j| couplings.pair(j, k)).collect(),
        });
    }
    Ok(assemble(&env_kept(fragment, state), &traced, t))
}

/// `ρ̃_SF` over `#F + 1` qubits, the system being the most significant one.
/// With an empty fragment this is the system state itself.
pub fn rho_sys_fragment_analytic(
    couplings: &Couplings,
    fragment: &Fragment,
    t: f64,
    state: &InitialState,
) -> Result<DensityMatrix> {
    rho_sys_fragment_analytic_with_cap(couplings, fragment, t, state, DEFAULT_FRAGMENT_CAP)
}

pub fn rho_sys_fragment_analytic_with_cap(
    couplings: &Couplings,
    fragment: &Fragment,
    t: f64,
    state: &InitialState,
    cap: usize,
) -> Result<DensityMatrix> {
    check_cap(fragment, couplings, cap)?;
    let members: Vec<usize> = fragment.indices().collect();
    let mut kept = env_kept(fragment, state);
    kept.push([state.beta_up, state.beta_down]);
    let traced: Vec<TracedSpin> = fragment
        .complement()
        .indices()
        .map(|k| {
            let mut g: Vec<f64> = members.iter().map(|&j| couplings.pair(j, k)).collect();
            g.push(couplings.d()[k]);
            TracedSpin {
                weight: state.a,
                couplings: g,
            }
        })
        .collect();
    Ok(assemble(&kept, &traced, t))
}

/// Infinite-time limit `⊗_{i∈F} [a|+1⟩⟨+1| + (1−a)|−1⟩⟨−1|]`.
pub fn rho_fragment_equilibrium(fragment: &Fragment, a: f64) -> DensityMatrix {
    let k = fragment.size();
    let dim = 1usize << k;
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for x in 0..dim {
        let ones = x.count_ones() as i32;
        let p = a.powi(k as i32 - ones) * (1.0 - a).powi(ones);
        data[x * dim + x] = Complex64::new(p, 0.0);
    }
    DensityMatrix::from_raw(dim, data)
}
