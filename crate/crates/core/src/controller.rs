//! Gain adaptation, graininess policies, wiggle sequences and the blocking
//! schedule.
//!
//! The gain follows `k^Δ = ‖y‖²`: `k⁺ = k + μ‖y‖²` across a scattered point
//! (the dense-run counterpart lives in [`crate::plant::LtiPlant::run_dense`]).
//! A [`GraininessPolicy`] turns the current gain into an admissible
//! graininess bound `μ̄(k)` and, when the loop is blocked, the graininess
//! actually applied.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::matfun::{lambda_max_sym, lambda_min_sym};
use crate::{Error, Matrix, Result, Vector};

/// Gain threshold above which the `1/(k log k)` rule is used.
const ILCHMANN_TOWNLEY_MIN_GAIN: f64 = 1.0 + 1e-6;
pub const DEFAULT_MU_INIT: f64 = 0.1;
/// Largest plant order accepted by the `n!+1` subsequence generator.
pub const MAX_SUBSEQUENCE_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub k: f64,
    pub t: f64,
    /// Graininess applied at the previous step.
    pub mu_current: f64,
}

impl ControllerState {
    pub fn new(k0: f64, t0: f64) -> Result<Self> {
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(Error::invalid(format!("initial gain must be positive, got {k0}")));
        }
        Ok(ControllerState { k: k0, t: t0, mu_current: 0.0 })
    }

    /// `k⁺ = k + μ‖y‖²` with `y` the output sampled at the left endpoint.
    pub fn gain_update_scattered(&self, y: &Vector, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("scattered gain update needs mu > 0, got {mu}")));
        }
        Ok(ControllerState { k: self.k + mu * y.norm_squared(), t: self.t + mu, mu_current: mu })
    }
}

/// `λ_min{CB + (CB)ᵀ} / λ_max{(CB)ᵀCB}`, the gain-normalized graininess
/// budget. Fails when `(CB)ᵀ + CB` is not positive definite.
pub fn cb_ratio(cb: &Matrix) -> Result<f64> {
    if cb.nrows() != cb.ncols() || cb.is_empty() {
        return Err(Error::invalid(format!(
            "CB must be square, got {}x{}",
            cb.nrows(),
            cb.ncols()
        )));
    }
    let sym_min = lambda_min_sym(&(cb + cb.transpose()));
    if !(sym_min > 0.0) {
        return Err(Error::AssumptionFailure(format!(
            "(CB)^T + CB is not positive definite (lambda_min = {sym_min})"
        )));
    }
    Ok(sym_min / lambda_max_sym(&(cb.transpose() * cb)))
}

/// Default `ε₁`: 5 % of [`cb_ratio`].
pub fn default_eps1(cb: &Matrix) -> Result<f64> {
    Ok(0.05 * cb_ratio(cb)?)
}

/// `μ̄ = (1/k)(λ_min{CB + (CB)ᵀ}/λ_max{(CB)ᵀCB} − ε₁)`.
pub fn mu_bar(k: f64, cb: &Matrix, eps1: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid(format!("gain must be positive, got {k}")));
    }
    let ratio = cb_ratio(cb)?;
    if !(eps1 > 0.0 && eps1 < ratio) {
        return Err(Error::invalid(format!("eps1 must lie in (0, {ratio}), got {eps1}")));
    }
    Ok((ratio - eps1) / k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyVariant {
    /// MIMO bound built from `CB` and `ε₁`.
    MimoBound {
        eps1: f64,
    },
    /// `μ̄ = c_safe / (k CB)` for single-input single-output plants.
    SisoBound {
        c_safe: f64,
    },
    /// `μ̄ = 1 / (k log k)`, needing no knowledge of `CB`; `mu_init` is used
    /// while `k ≤ 1 + 1e-6`.
    IlchmannTownley {
        mu_init: f64,
    },
    Fixed {
        mu: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraininessPolicy {
    variant: PolicyVariant,
    cb: Option<Matrix>,
    wiggle: Option<WiggleSequence>,
    block_cap_fraction: f64,
}

impl GraininessPolicy {
    /// `cb` is required by the bound variants and ignored otherwise.
    pub fn new(variant: PolicyVariant, cb: Option<Matrix>) -> Result<Self> {
        match variant {
            PolicyVariant::MimoBound { eps1 } => {
                let cb = cb.as_ref().ok_or_else(|| Error::invalid("MimoBound needs CB"))?;
                let ratio = cb_ratio(cb)?;
                if !(eps1 > 0.0 && eps1 < ratio) {
                    return Err(Error::invalid(format!(
                        "eps1 must lie in (0, {ratio}), got {eps1}"
                    )));
                }
            }
            PolicyVariant::SisoBound { c_safe } => {
                let cb = cb.as_ref().ok_or_else(|| Error::invalid("SisoBound needs CB"))?;
                if cb.shape() != (1, 1) {
                    return Err(Error::invalid("SisoBound needs a scalar CB"));
                }
                if !(cb[(0, 0)] > 0.0) {
                    return Err(Error::AssumptionFailure(format!(
                        "CB = {} is not positive",
                        cb[(0, 0)]
                    )));
                }
                if !(c_safe > 0.0 && c_safe < 2.0) {
                    return Err(Error::invalid(format!("c_safe must lie in (0, 2), got {c_safe}")));
                }
            }
            PolicyVariant::IlchmannTownley { mu_init } => {
                if !(mu_init > 0.0 && mu_init.is_finite()) {
                    return Err(Error::invalid(format!("mu_init must be positive, got {mu_init}")));
                }
            }
            PolicyVariant::Fixed { mu } => {
                if !(mu > 0.0 && mu.is_finite()) {
                    return Err(Error::invalid(format!("fixed mu must be positive, got {mu}")));
                }
            }
        }
        Ok(GraininessPolicy { variant, cb, wiggle: None, block_cap_fraction: 1.0 })
    }

    pub fn with_wiggle(mut self, wiggle: WiggleSequence) -> Self {
        self.wiggle = Some(wiggle);
        self
    }

    pub fn with_blocking(mut self, schedule: &BlockingSchedule) -> Self {
        self.block_cap_fraction = schedule.block_cap_fraction;
        self
    }

    pub fn variant(&self) -> PolicyVariant {
        self.variant
    }

    pub fn cb(&self) -> Option<&Matrix> {
        self.cb.as_ref()
    }

    pub fn block_cap_fraction(&self) -> f64 {
        self.block_cap_fraction
    }

    /// The graininess bound `μ̄(k)` of this policy.
    pub fn mu_bar(&self, k: f64) -> f64 {
        match self.variant {
            PolicyVariant::MimoBound { eps1 } => {
                let cb = self.cb.as_ref().expect("validated at construction");
                mu_bar(k, cb, eps1).expect("validated at construction")
            }
            PolicyVariant::SisoBound { c_safe } => {
                let cb = self.cb.as_ref().expect("validated at construction")[(0, 0)];
                c_safe / (k * cb)
            }
            PolicyVariant::IlchmannTownley { mu_init } => {
                if k > ILCHMANN_TOWNLEY_MIN_GAIN {
                    1.0 / (k * k.ln())
                } else {
                    mu_init
                }
            }
            PolicyVariant::Fixed { mu } => mu,
        }
    }

    /// Graininess for the next step: `0` (dense control) when unblocked,
    /// otherwise `cap · μ̄(k) · v` with `v` the next wiggle value (`1`
    /// without a wiggle sequence). `μ̄` uses the pre-update gain.
    pub fn next_graininess(&mut self, state: &ControllerState, blocked: bool) -> f64 {
        if !blocked {
            return 0.0;
        }
        let v = self.wiggle.as_mut().map_or(1.0, WiggleSequence::next_value);
        self.block_cap_fraction * self.mu_bar(state.k) * v
    }
}

#[derive(Debug, Clone, PartialEq)]
enum WiggleMode {
    Repeating { values: Vec<f64> },
    Random { resolution_bits: u32, rng: Box<ChaCha8Rng> },
}

/// Multiplicative perturbation `v ∈ (0, 1]` applied to `μ̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct WiggleSequence {
    mode: WiggleMode,
    index: usize,
}

impl WiggleSequence {
    /// Cycles through `values` forever.
    pub fn repeating(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("wiggle subsequence is empty"));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
            return Err(Error::invalid(format!("wiggle value {v} outside (0, 1]")));
        }
        Ok(WiggleSequence { mode: WiggleMode::Repeating { values }, index: 0 })
    }

    /// Subsequence of `n! + 1` values `(1 + frac(√pᵢ))/2` over the first
    /// primes `pᵢ`; pairwise ratios are irrational up to floating precision.
    pub fn prime_root_subsequence(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_SUBSEQUENCE_ORDER {
            return Err(Error::invalid(format!(
                "subsequence order must lie in 1..={MAX_SUBSEQUENCE_ORDER}, got {n}"
            )));
        }
        let len = (1..=n).product::<usize>() + 1;
        let values = first_primes(len)
            .into_iter()
            .map(|p| {
                let r = (p as f64).sqrt();
                0.5 * (1.0 + r.fract())
            })
            .collect();
        Self::repeating(values)
    }

    /// Seeded uniform values quantized to `1/2^bits`, in `{1/2^bits, …, 1}`.
    pub fn random(resolution_bits: u32, seed: u64) -> Result<Self> {
        if resolution_bits == 0 || resolution_bits > 52 {
            return Err(Error::invalid(format!(
                "resolution must be 1..=52 bits, got {resolution_bits}"
            )));
        }
        Ok(WiggleSequence {
            mode: WiggleMode::Random {
                resolution_bits,
                rng: Box::new(ChaCha8Rng::seed_from_u64(seed)),
            },
            index: 0,
        })
    }

    /// Cycle length for repeating sequences.
    pub fn period(&self) -> Option<usize> {
        match &self.mode {
            WiggleMode::Repeating { values } => Some(values.len()),
            WiggleMode::Random { .. } => None,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn next_value(&mut self) -> f64 {
        let v = match &mut self.mode {
            WiggleMode::Repeating { values } => values[self.index % values.len()],
            WiggleMode::Random { resolution_bits, rng } => {
                let levels = 1u64 << *resolution_bits;
                (rng.random_range(0..levels) + 1) as f64 / levels as f64
            }
        };
        self.index += 1;
        v
    }
}

impl Iterator for WiggleSequence {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_value())
    }
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= candidate).all(|&p| !candidate.is_multiple_of(p))
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Dense control for `continuous_run` seconds, then a block during which
/// the graininess is held at `block_cap_fraction · μ̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockingSchedule {
    pub continuous_run: f64,
    pub block_cap_fraction: f64,
}

impl BlockingSchedule {
    pub fn new(continuous_run: f64, block_cap_fraction: f64) -> Result<Self> {
        if !(continuous_run > 0.0 && continuous_run.is_finite()) {
            return Err(Error::invalid(format!(
                "continuous_run must be positive, got {continuous_run}"
            )));
        }
        if !(block_cap_fraction > 0.0 && block_cap_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "block_cap_fraction must lie in (0, 1), got {block_cap_fraction}"
            )));
        }
        Ok(BlockingSchedule { continuous_run, block_cap_fraction })
    }
}
