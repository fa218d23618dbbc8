//! Brute-force reference: full state-vector evolution and partial traces.

use num_complex::Complex64;

use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::model::{Couplings, Fragment, InitialState};

/// Largest environment the state-vector route accepts by default.
pub const DEFAULT_ORACLE_CAP: usize = 14;

/// Evolved state `Σ β_s ∏α_{r_j} e^{−itE(s,r)} |s, r⟩` with
/// `E(s, r) = s Σᵢ dᵢ rᵢ + Σ_{j≠k} m_jk r_j r_k`.
///
/// Index layout: bit `i < N` holds spin `i`, bit `N` holds the system; a clear
/// bit means `+1` / `↑`. The result has length `2^{N+1}`.
pub fn evolve_statevector(state: &InitialState, couplings: &Couplings, t: f64, cap: usize) -> Result<Vec<Complex64>> {
    let n = couplings.n_env();
    if n > cap {
        return Err(Error::TooLarge {
            what: "environment size for the state-vector oracle",
            size: n,
            cap,
        });
    }
    let d = couplings.d();
    let pairs: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
        .map(|(j, k)| (j, k, couplings.pair(j, k)))
        .collect();
    let spin = |x: usize, i: usize| if x >> i & 1 == 0 { 1.0 } else { -1.0 };

    let dim = 1usize << (n + 1);
    let mut psi = Vec::with_capacity(dim);
    for x in 0..dim {
        let s = spin(x, n);
        let mut energy = 0.0;
        let mut amp = state.beta((x >> n & 1) as u64);
        for (i, &di) in d.iter().enumerate() {
            energy += s * di * spin(x, i);
            amp *= state.alpha((x >> i & 1) as u64);
        }
        for &(j, k, mjk) in &pairs {
            energy += mjk * spin(x, j) * spin(x, k);
        }
        psi.push(amp * Complex64::from_polar(1.0, -t * energy));
    }
    Ok(psi)
}

/// Positions of the set bits of `mask` spread out for every local index:
/// `table[x]` places bit `b` of `x` at the `b`-th set bit of `mask`.
pub(crate) fn scatter_table(mask: u64, n_bits: usize) -> Vec<u64> {
    let positions: Vec<usize> = (0..n_bits).filter(|&i| mask >> i & 1 == 1).collect();
    (0..1u64 << positions.len())
        .map(|x| {
            positions
                .iter()
                .enumerate()
                .filter(|&(b, _)| x >> b & 1 == 1)
                .fold(0u64, |acc, (_, &p)| acc | 1 << p)
        })
        .collect()
}

/// Bitmask over the `N + 1` qubits of the universe selecting `fragment` and,
/// optionally, the system.
pub fn keep_mask(fragment: &Fragment, with_system: bool) -> u64 {
    fragment.mask() | (u64::from(with_system) << fragment.n_env())
}

/// Reduced density matrix of a pure state on the qubits in `keep`, kept
/// qubits ordered by ascending position.
pub fn partial_trace(psi: &[Complex64], keep: u64) -> Result<DensityMatrix> {
    if !psi.len().is_power_of_two() {
        return Err(Error::param("state", "length must be a power of two"));
    }
    let n_bits = psi.len().trailing_zeros() as usize;
    let all = if n_bits == 64 { u64::MAX } else { (1u64 << n_bits) - 1 };
    if keep & !all != 0 {
        return Err(Error::param("keep", "selects qubits outside the state"));
    }
    let kept = scatter_table(keep, n_bits);
    let traced = scatter_table(!keep & all, n_bits);
    let (dk, dt) = (kept.len(), traced.len());

    // M[x][y] = ψ(x, y); ρ = M M†
    let mut m = Vec::with_capacity(dk * dt);
    for &px in &kept {
        for &py in &traced {
            m.push(psi[(px | py) as usize]);
        }
    }
    let mut data = vec![Complex64::new(0.0, 0.0); dk * dk];
    for x in 0..dk {
        let row_x = &m[x * dt..(x + 1) * dt];
        for xp in x..dk {
            let row_xp = &m[xp * dt..(xp + 1) * dt];
            let v: Complex64 = row_x.iter().zip(row_xp).map(|(a, b)| a * b.conj()).sum();
            data[x * dk + xp] = v;
            data[xp * dk + x] = v.conj();
        }
    }
    Ok(DensityMatrix::from_raw(dk, data))
}
