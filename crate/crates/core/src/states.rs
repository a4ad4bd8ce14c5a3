//! State assignment and exact expectation values of normal-ordered
//! polynomials.
//!
//! Every source mode carries an independent single-mode Gaussian state
//! (mean field plus centered second moments). Expectation values factorize
//! across modes; per mode the normal-ordered moment `⟨(b†)^m b^n⟩` is
//! evaluated by displaced Wick expansion: a sum over pairings with pair
//! values `n_ex`, `m_anom`, `m_anom*` and singleton values `mean`, `mean*`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::algebra::{ModeId, MonomialKey, OperatorPoly, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("unphysical Gaussian moments: |m_anom|^2 = {m2} exceeds n_ex(n_ex+1) = {bound}")]
    Unphysical { m2: f64, bound: f64 },
    #[error("negative excess photon number {0}")]
    NegativeExcess(f64),
    #[error("polynomial mixes single-frequency and sideband modes")]
    SidebandMix,
}

/// State of one source mode. `n_ex = ⟨Δb†Δb⟩`, `m_anom = ⟨ΔbΔb⟩` with
/// `Δb = b - mean`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeState {
    Vacuum,
    Coherent(C64),
    Gaussian { mean: C64, n_ex: f64, m_anom: C64 },
}

impl ModeState {
    /// Gaussian moments with the Heisenberg physicality bound
    /// `|m_anom|² ≤ n_ex(n_ex + 1)` enforced.
    pub fn gaussian(mean: C64, n_ex: f64, m_anom: C64) -> Result<Self, StateError> {
        if n_ex < 0.0 {
            return Err(StateError::NegativeExcess(n_ex));
        }
        let m2 = m_anom.norm_sqr();
        let bound = n_ex * (n_ex + 1.0);
        if m2 > bound + 1e-12 {
            return Err(StateError::Unphysical { m2, bound });
        }
        Ok(ModeState::Gaussian { mean, n_ex, m_anom })
    }

    pub fn mean(&self) -> C64 {
        match self {
            ModeState::Vacuum => C64::new(0.0, 0.0),
            ModeState::Coherent(g) => *g,
            ModeState::Gaussian { mean, .. } => *mean,
        }
    }

    pub fn excess_photons(&self) -> f64 {
        match self {
            ModeState::Gaussian { n_ex, .. } => *n_ex,
            _ => 0.0,
        }
    }

    pub fn anomalous(&self) -> C64 {
        match self {
            ModeState::Gaussian { m_anom, .. } => *m_anom,
            _ => C64::new(0.0, 0.0),
        }
    }

    /// `⟨b†b⟩ = |mean|² + n_ex`.
    pub fn mean_photon_number(&self) -> f64 {
        self.mean().norm_sqr() + self.excess_photons()
    }

    pub fn is_coherent(&self) -> bool {
        matches!(self, ModeState::Vacuum | ModeState::Coherent(_))
    }
}

/// Per-source-mode states; modes not listed default to `Vacuum`.
/// Distinct modes are independent (product state).
#[derive(Debug, Clone, Default)]
pub struct StateAssignment {
    states: BTreeMap<ModeId, ModeState>,
}

impl StateAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, mode: ModeId, state: ModeState) -> Self {
        self.states.insert(mode, state);
        self
    }

    pub fn insert(&mut self, mode: ModeId, state: ModeState) {
        self.states.insert(mode, state);
    }

    pub fn state(&self, mode: &ModeId) -> ModeState {
        self.states.get(mode).copied().unwrap_or(ModeState::Vacuum)
    }

    pub fn assigned(&self) -> impl Iterator<Item = (&ModeId, &ModeState)> {
        self.states.iter()
    }

    /// Mean field of a mode; vacuum (and unlisted) modes give 0.
    pub fn mean_amplitude(&self, mode: &ModeId) -> C64 {
        self.state(mode).mean()
    }

    /// Expectation value of a canonical normal-ordered polynomial.
    pub fn expectation(&self, p: &OperatorPoly) -> Result<C64, StateError> {
        if !p.sidebands_consistent() {
            return Err(StateError::SidebandMix);
        }
        let mut total = C64::new(0.0, 0.0);
        for (key, coeff) in p.terms() {
            total += coeff * self.monomial_expectation(key)?;
        }
        Ok(total)
    }

    fn monomial_expectation(&self, key: &MonomialKey) -> Result<C64, StateError> {
        // group by mode: (creator count, annihilator count)
        let mut counts: BTreeMap<&ModeId, (usize, usize)> = BTreeMap::new();
        for m in &key.creators {
            counts.entry(m).or_insert((0, 0)).0 += 1;
        }
        for m in &key.annihilators {
            counts.entry(m).or_insert((0, 0)).1 += 1;
        }
        let mut product = C64::new(1.0, 0.0);
        for (mode, (m, n)) in counts {
            let state = self.state(mode);
            product *= normal_moment(m, n, &state);
            if product.norm() == 0.0 {
                break;
            }
        }
        Ok(product)
    }
}

/// Normal-ordered single-mode moment `⟨(b†)^m b^n⟩` for a Gaussian state,
/// by explicit enumeration of Wick pairings.
fn normal_moment(m: usize, n: usize, state: &ModeState) -> C64 {
    let mean = state.mean();
    let n_ex = state.excess_photons();
    let m_anom = state.anomalous();
    if n_ex == 0.0 && m_anom.norm_sqr() == 0.0 {
        // coherent / vacuum: ⟨(b†)^m b^n⟩ = mean*^m mean^n
        return mean.conj().powu(m as u32) * mean.powu(n as u32);
    }
    let mut total = C64::new(0.0, 0.0);
    // j1 pairs (†,†) -> m_anom*, j2 pairs (b,b) -> m_anom,
    // k pairs (†,b) -> n_ex, remaining singletons -> mean*/mean.
    for j1 in 0..=(m / 2) {
        for j2 in 0..=(n / 2) {
            let kmax = (m - 2 * j1).min(n - 2 * j2);
            for k in 0..=kmax {
                let s1 = m - 2 * j1 - k;
                let s2 = n - 2 * j2 - k;
                let ways = binom(m, 2 * j1)
                    * double_factorial(2 * j1)
                    * binom(n, 2 * j2)
                    * double_factorial(2 * j2)
                    * binom(m - 2 * j1, k)
                    * binom(n - 2 * j2, k)
                    * factorial(k);
                let value = m_anom.conj().powu(j1 as u32)
                    * m_anom.powu(j2 as u32)
                    * C64::new(n_ex.powi(k as i32), 0.0)
                    * mean.conj().powu(s1 as u32)
                    * mean.powu(s2 as u32);
                total += C64::new(ways as f64, 0.0) * value;
            }
        }
    }
    total
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Number of perfect matchings of `2j` items: `(2j-1)!!`; 1 for `j = 0`.
fn double_factorial(two_j: usize) -> u128 {
    let mut out: u128 = 1;
    let mut k = two_j as i64 - 1;
    while k > 1 {
        out *= k as u128;
        k -= 2;
    }
    out
}
