use std::collections::BTreeSet;
use std::fmt;

use rand::seq::index;

use super::rng::{self, tag};
use crate::error::{Error, Result};

/// Largest environment supported by the bitmask representation. One spare bit
/// is kept so that the system qubit can sit above the environment in a `u64`
/// basis index.
pub const MAX_ENV: usize = 62;

/// A subset of the environment spins, stored as a bitmask.
///
/// Bit `i` is set when spin `i` belongs to the fragment.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fragment {
    mask: u64,
    n_env: usize,
}

impl Fragment {
    pub fn new(mask: u64, n_env: usize) -> Result<Self> {
        if n_env == 0 || n_env > MAX_ENV {
            return Err(Error::param("n_env", format!("must be in 1..={MAX_ENV}")));
        }
        if mask >> n_env != 0 {
            return Err(Error::param("mask", format!("{mask:#x} has bits above {n_env}")));
        }
        Ok(Fragment { mask, n_env })
    }

    pub fn from_indices(indices: &[usize], n_env: usize) -> Result<Self> {
        let mut mask = 0u64;
        for &i in indices {
            if i >= n_env {
                return Err(Error::param("index", format!("{i} >= {n_env}")));
            }
            mask |= 1 << i;
        }
        Fragment::new(mask, n_env)
    }

    pub fn empty(n_env: usize) -> Self {
        Fragment { mask: 0, n_env }
    }

    /// The whole environment.
    pub fn full(n_env: usize) -> Self {
        Fragment {
            mask: full_mask(n_env),
            n_env,
        }
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn n_env(&self) -> usize {
        self.n_env
    }

    pub fn size(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Fraction `#F / N` of the environment.
    pub fn fraction(&self) -> f64 {
        self.size() as f64 / self.n_env as f64
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n_env && self.mask >> i & 1 == 1
    }

    pub fn complement(&self) -> Self {
        Fragment {
            mask: !self.mask & full_mask(self.n_env),
            n_env: self.n_env,
        }
    }

    /// Spin indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_env).filter(move |&i| self.contains(i))
    }
}

impl fmt::Debug for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fragment({:0width$b})", self.mask, width = self.n_env)
    }
}

fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All `k`-subsets of `0..n` as masks, in increasing numeric order.
fn all_masks(n: usize, k: usize) -> Vec<u64> {
    if k == 0 {
        return vec![0];
    }
    let limit = 1u64 << n;
    let mut out = Vec::with_capacity(binomial(n, k).min(1 << 20) as usize);
    let mut x: u64 = (1 << k) - 1;
    while x < limit {
        out.push(x);
        // Gosper's hack: next integer with the same popcount
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    out
}

/// Fragments of size `k` used for averaging over `#F = k`.
///
/// When `C(n, k) <= budget` every fragment is returned exactly once. Otherwise
/// `budget` distinct fragments are drawn uniformly without replacement from a
/// stream keyed by `(seed, n, min(k, n - k))`. Samples for `k > n/2` are the
/// complements of the samples for `n - k`, so a profile built from them obeys
/// the complement sum rule fragment by fragment. The result is sorted by mask.
pub fn enumerate_fragments(n: usize, k: usize, budget: usize, seed: u64) -> Result<Vec<Fragment>> {
    if n == 0 || n > MAX_ENV {
        return Err(Error::param("n_env", format!("must be in 1..={MAX_ENV}")));
    }
    if k > n {
        return Err(Error::FragmentSize { k, n });
    }
    if budget == 0 {
        return Err(Error::param("budget", "must be at least 1"));
    }
    let total = binomial(n, k);
    let mut masks = if total <= budget as u128 {
        all_masks(n, k)
    } else if 2 * k > n {
        let full = full_mask(n);
        sample_masks(n, n - k, budget, seed)
            .into_iter()
            .map(|m| !m & full)
            .collect()
    } else {
        sample_masks(n, k, budget, seed)
    };
    masks.sort_unstable();
    Ok(masks
        .into_iter()
        .map(|mask| Fragment { mask, n_env: n })
        .collect())
}

fn sample_masks(n: usize, k: usize, budget: usize, seed: u64) -> Vec<u64> {
    let mut rng = rng::stream(seed, tag::FRAGMENTS, &[n as u64, k as u64]);
    let total = binomial(n, k);
    // Dense case: pick indices into the full list so rejection never stalls.
    if total <= 4 * budget as u128 && total <= 1 << 22 {
        let all = all_masks(n, k);
        let mut picked: Vec<u64> = index::sample(&mut rng, all.len(), budget)
            .into_iter()
            .map(|i| all[i])
            .collect();
        picked.sort_unstable();
        return picked;
    }
    let mut seen = BTreeSet::new();
    while seen.len() < budget {
        let mask = index::sample(&mut rng, n, k)
            .into_iter()
            .fold(0u64, |m, i| m | 1 << i);
        seen.insert(mask);
    }
    seen.into_iter().collect()
}
