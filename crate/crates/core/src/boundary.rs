//! Probability-based truncation of the solution domain.
//!
//! A barrier is treated as worthless once the terminal log-price stays on
//! the safe side of it with probability at least `Phi(delta)` at every time
//! up to expiry. Beyond that cutoff the knock-out call is a vanilla call, so
//! the cutoff edge of the grid carries exact Black-Scholes values.

use crate::analytic::norm_cdf;
use crate::contracts::{BarrierContract, BarrierGeometry, MarketParams};
use crate::error::{PricingError, Result};

pub const DEFAULT_DELTA: f64 = 4.2;
/// Open interval of admissible `delta`.
pub const DELTA_RANGE: (f64, f64) = (3.7, 6.5);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffConfig {
    delta: f64,
}

impl CutoffConfig {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > DELTA_RANGE.0 && delta < DELTA_RANGE.1) {
            return Err(PricingError::Domain(format!(
                "delta must lie in ({}, {}), got {delta}",
                DELTA_RANGE.0, DELTA_RANGE.1
            )));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self { delta: DEFAULT_DELTA }
    }
}

/// Which side of the barrier the live region (and so the cutoff) lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffSide {
    /// Down barrier, cutoff above it.
    Upper,
    /// Up barrier, cutoff below it.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainCutoff {
    pub x_m: f64,
    pub s_m: f64,
    pub side: CutoffSide,
    pub turning_point_used: bool,
}

/// `mu* = (r - q) - sigma^2 / 2`, the drift of `ln S`.
pub fn drift_star(market: &MarketParams) -> f64 {
    market.mu() - 0.5 * market.sigma * market.sigma
}

/// Probability that `S_t` is still on the starting side of `b` at time `t`:
/// `P(S_t > B)` when `s0 >= b`, `P(S_t < B)` otherwise.
pub fn breach_probability_complement(s0: f64, b: f64, t: f64, market: &MarketParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(PricingError::Domain(format!("t must be positive, got {t}")));
    }
    if !(s0 > 0.0 && b > 0.0) {
        return Err(PricingError::Domain("prices must be positive".into()));
    }
    let a = ((s0 / b).ln() + drift_star(market) * t) / (market.sigma * t.sqrt());
    Ok(if s0 >= b { norm_cdf(a) } else { norm_cdf(-a) })
}

/// Maximiser of `t -> delta sigma sqrt(t) - mu* t` (down) or
/// `t -> delta sigma sqrt(t) + mu* t` (up), when that function turns over.
pub fn turning_point(mu_star: f64, sigma: f64, delta: f64, side: CutoffSide) -> Option<f64> {
    let turns = match side {
        CutoffSide::Upper => mu_star > 0.0,
        CutoffSide::Lower => mu_star < 0.0,
    };
    turns.then(|| (delta * sigma / (2.0 * mu_star.abs())).powi(2))
}

/// Cutoff for one barrier level on the given side.
pub fn cutoff_for_barrier(
    barrier: f64,
    side: CutoffSide,
    strike: f64,
    expiry: f64,
    market: &MarketParams,
    cfg: &CutoffConfig,
) -> DomainCutoff {
    let mu_star = drift_star(market);
    let sigma = market.sigma;
    let delta = cfg.delta;
    let x_b = (barrier / strike).ln();
    let (horizon, turning_point_used) = match turning_point(mu_star, sigma, delta, side) {
        Some(tp) if tp < expiry => (tp, true),
        _ => (expiry, false),
    };
    let spread = delta * sigma * horizon.sqrt();
    let x_m = match side {
        CutoffSide::Upper => x_b + spread - mu_star * horizon,
        CutoffSide::Lower => x_b - spread - mu_star * horizon,
    };
    DomainCutoff {
        x_m,
        s_m: strike * x_m.exp(),
        side,
        turning_point_used,
    }
}

/// Cutoff of a single-barrier contract.
pub fn cutoff(contract: &BarrierContract, market: &MarketParams, cfg: &CutoffConfig) -> Result<DomainCutoff> {
    let (barrier, side) = match contract.geometry {
        BarrierGeometry::DownAndOut { barrier } => (barrier, CutoffSide::Upper),
        BarrierGeometry::UpAndOut { barrier } => (barrier, CutoffSide::Lower),
        BarrierGeometry::DoubleKnockOut { .. } => {
            return Err(PricingError::Domain(
                "double barriers take one cutoff per side; use classify_double".into(),
            ))
        }
    };
    Ok(cutoff_for_barrier(
        barrier,
        side,
        contract.strike,
        contract.expiry,
        market,
        cfg,
    ))
}

/// True when `s0` lies on or beyond the cutoff, so the barrier can be ignored.
pub fn barrier_worthless(s0: f64, cutoff: &DomainCutoff) -> bool {
    match cutoff.side {
        CutoffSide::Upper => s0 >= cutoff.s_m,
        CutoffSide::Lower => s0 <= cutoff.s_m,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoubleClass {
    BothActive,
    /// Only the lower barrier matters: a down-and-out.
    LowerOnly,
    /// Only the upper barrier matters: an up-and-out.
    UpperOnly,
    NeitherActive,
}

/// Cutoffs from the lower barrier (upward) and from the upper barrier
/// (downward) of a double knock-out.
pub fn double_cutoffs(
    contract: &BarrierContract,
    market: &MarketParams,
    cfg: &CutoffConfig,
) -> Result<(DomainCutoff, DomainCutoff)> {
    let BarrierGeometry::DoubleKnockOut { lower, upper } = contract.geometry else {
        return Err(PricingError::Domain("expected a double knock-out".into()));
    };
    let (k, t) = (contract.strike, contract.expiry);
    Ok((
        cutoff_for_barrier(lower, CutoffSide::Upper, k, t, market, cfg),
        cutoff_for_barrier(upper, CutoffSide::Lower, k, t, market, cfg),
    ))
}

/// Splits a double knock-out into the simpler contract it behaves like
/// from the current spot.
pub fn classify_double(contract: &BarrierContract, market: &MarketParams, cfg: &CutoffConfig) -> Result<DoubleClass> {
    let (from_lower, from_upper) = double_cutoffs(contract, market, cfg)?;
    let s0 = contract.spot;
    let lower_active = !barrier_worthless(s0, &from_lower);
    let upper_active = !barrier_worthless(s0, &from_upper);
    Ok(match (lower_active, upper_active) {
        (true, true) => DoubleClass::BothActive,
        (true, false) => DoubleClass::LowerOnly,
        (false, true) => DoubleClass::UpperOnly,
        (false, false) => DoubleClass::NeitherActive,
    })
}
