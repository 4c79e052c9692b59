//! Black-Scholes to heat-equation change of variables.
//!
//! With `x = ln(S/K)` and `tau = sigma^2 (T - t) / 2`, the substitution
//! `f = K e^{alpha x + gamma tau} u` turns the pricing equation into
//! `u_tau = u_xx`. Prices are recovered by an exact scalar factor, so the
//! map itself adds no error.

use crate::analytic;
use crate::contracts::{validate, BarrierContract, MarketParams};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedProblem {
    /// `2 (r - q) / sigma^2`, stored as `nu1 - nu2`.
    pub nu: f64,
    /// `2 r / sigma^2`
    pub nu1: f64,
    /// `2 q / sigma^2`
    pub nu2: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// `sigma^2 T / 2`
    pub tau_max: f64,
    pub strike: f64,
    /// Log-moneyness of the lower barrier (down-and-out or double).
    pub x_lower: Option<f64>,
    /// Log-moneyness of the upper barrier (up-and-out or double).
    pub x_upper: Option<f64>,
    pub market: MarketParams,
    pub expiry: f64,
}

/// Validates and transforms a contract.
pub fn to_heat(contract: &BarrierContract, market: &MarketParams) -> Result<TransformedProblem> {
    validate(contract, market)?;
    Ok(TransformedProblem::new(contract, market))
}

impl TransformedProblem {
    /// Transform without validation; callers must have validated already.
    pub fn new(contract: &BarrierContract, market: &MarketParams) -> Self {
        let sig2 = market.sigma * market.sigma;
        let nu1 = 2.0 * market.r / sig2;
        let nu2 = 2.0 * market.q / sig2;
        let nu = nu1 - nu2;
        let k = contract.strike;
        Self {
            nu,
            nu1,
            nu2,
            alpha: -0.5 * (nu - 1.0),
            gamma: -0.25 * (nu + 1.0) * (nu + 1.0) - nu2,
            tau_max: 0.5 * sig2 * contract.expiry,
            strike: k,
            x_lower: contract.geometry.lower_barrier().map(|b| (b / k).ln()),
            x_upper: contract.geometry.upper_barrier().map(|b| (b / k).ln()),
            market: *market,
            expiry: contract.expiry,
        }
    }

    /// The single barrier of a down- or up-and-out contract.
    pub fn x_b(&self) -> Option<f64> {
        match (self.x_lower, self.x_upper) {
            (Some(x), None) | (None, Some(x)) => Some(x),
            _ => None,
        }
    }

    pub fn x_of(&self, s: f64) -> f64 {
        (s / self.strike).ln()
    }

    pub fn s_of(&self, x: f64) -> f64 {
        self.strike * x.exp()
    }

    /// Time to expiry, in years, at heat time `tau`.
    pub fn time_to_expiry(&self, tau: f64) -> f64 {
        2.0 * tau / (self.market.sigma * self.market.sigma)
    }

    fn scale(&self, x: f64, tau: f64) -> f64 {
        self.strike * (self.alpha * x + self.gamma * tau).exp()
    }

    /// Transformed call payoff `max(e^{(nu+1)x/2} - e^{(nu-1)x/2}, 0)`.
    pub fn heat_initial_condition(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        ((0.5 * (self.nu + 1.0) * x).exp() - (0.5 * (self.nu - 1.0) * x).exp()).max(0.0)
    }

    /// Rebate `rb` held on the barrier at `x_b`, in heat variables.
    pub fn barrier_boundary_value(&self, x_b: f64, tau: f64, rb: f64) -> f64 {
        if rb == 0.0 {
            return 0.0;
        }
        rb / self.strike * (-(self.alpha * x_b + self.gamma * tau)).exp()
    }

    pub fn from_heat(&self, u: f64, x: f64, tau: f64) -> f64 {
        self.scale(x, tau) * u
    }

    pub fn to_heat_value(&self, f: f64, x: f64, tau: f64) -> f64 {
        f / self.scale(x, tau)
    }

    /// Vanilla call value at `S = K e^{x_m}` with `2 tau / sigma^2` years left,
    /// in heat variables. Exact on any edge where the barrier is worthless.
    pub fn vanilla_boundary_value(&self, x_m: f64, tau: f64) -> f64 {
        let s = self.s_of(x_m);
        let remaining = self.time_to_expiry(tau);
        let f = if remaining <= 0.0 {
            (s - self.strike).max(0.0)
        } else {
            let m = &self.market;
            analytic::vanilla_call(s, self.strike, remaining, m.r, m.q, m.sigma)
                .expect("inputs are positive by construction")
        };
        self.to_heat_value(f, x_m, tau)
    }

    /// Far-field asymptote `f ~ S`, i.e. `u ~ e^{(1 - alpha) x - gamma tau}`.
    /// Only the approximate-boundary comparison scheme uses it.
    pub fn asymptotic_boundary_value(&self, x: f64, tau: f64) -> f64 {
        ((1.0 - self.alpha) * x - self.gamma * tau).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::BarrierContract;
    use proptest::prelude::*;

    fn problem(r: f64, q: f64, sigma: f64) -> TransformedProblem {
        let c = BarrierContract::down_and_out(95.0, 100.0, 90.0, 1.0);
        to_heat(&c, &MarketParams::new(r, q, sigma)).unwrap()
    }

    #[test]
    fn coefficients_for_table1_market() {
        let p = problem(0.10, 0.0, 0.25);
        assert!((p.nu1 - 3.2).abs() < 1e-14);
        assert_eq!(p.nu2, 0.0);
        assert!((p.nu - 3.2).abs() < 1e-14);
        assert!((p.alpha + 1.1).abs() < 1e-14);
        assert!((p.gamma + 4.41).abs() < 1e-13);
        assert!((p.x_b().unwrap() - 0.9f64.ln()).abs() < 1e-15);
        assert!((p.x_b().unwrap() + 0.105_360_515_657_826_3).abs() < 1e-15);
        assert!((p.tau_max - 0.03125).abs() < 1e-15);
    }

    #[test]
    fn zero_carry_coefficients() {
        let p = problem(0.04, 0.04, 0.3);
        assert_eq!(p.nu, 0.0);
        assert_eq!(p.alpha, 0.5);
        assert!((p.gamma - (-0.25 - 2.0 * 0.04 / 0.09)).abs() < 1e-14);
    }

    #[test]
    fn nu_is_exactly_nu1_minus_nu2() {
        for &(r, q, s) in &[(0.1, 0.03, 0.2), (0.07, 0.045, 0.33), (-0.01, 0.02, 0.5)] {
            let p = problem(r, q, s);
            assert_eq!(p.nu, p.nu1 - p.nu2);
        }
    }

    #[test]
    fn initial_condition_values() {
        let p = problem(0.10, 0.0, 0.25);
        assert_eq!(p.heat_initial_condition(0.0), 0.0);
        assert_eq!(p.heat_initial_condition(-0.3), 0.0);
        // hand value e^{0.21} - e^{0.11}
        assert!((p.heat_initial_condition(0.1) - 0.117_399_989_497_871_96).abs() < 1e-14);
    }

    #[test]
    fn payoff_round_trip() {
        let p = problem(0.07, 0.02, 0.3);
        for i in 0..200 {
            let s = 20.0 + 1.3 * i as f64;
            let x = p.x_of(s);
            let f = p.from_heat(p.heat_initial_condition(x), x, 0.0);
            let payoff = (s - 100.0f64).max(0.0);
            assert!((f - payoff).abs() <= 1e-12 * payoff.max(1.0), "S={s}");
        }
    }

    #[test]
    fn barrier_boundary_values() {
        let p = problem(0.10, 0.05, 0.2);
        let xb = p.x_b().unwrap();
        assert_eq!(p.barrier_boundary_value(xb, 0.013, 0.0), 0.0);
        assert!((p.barrier_boundary_value(xb, 0.0, p.strike) - (-p.alpha * xb).exp()).abs() < 1e-15);
        assert!(p.barrier_boundary_value(xb, 0.01, 3.0) > 0.0);
        // maps back to the undiscounted rebate at every tau
        let u = p.barrier_boundary_value(xb, 0.017, 3.0);
        assert!((p.from_heat(u, xb, 0.017) - 3.0).abs() < 1e-13);
    }

    #[test]
    fn vanilla_boundary_endpoints() {
        let c = BarrierContract::down_and_out(200.0, 150.0, 180.0, 0.25);
        let m = MarketParams::new(0.05, 0.0, 0.2);
        let p = to_heat(&c, &m).unwrap();
        let xm = p.x_of(271.906);
        let at_expiry = p.from_heat(p.vanilla_boundary_value(xm, 0.0), xm, 0.0);
        assert!((at_expiry - 121.906).abs() < 1e-10);
        let now = p.from_heat(p.vanilla_boundary_value(xm, p.tau_max), xm, p.tau_max);
        let expected = analytic::vanilla_call(271.906, 150.0, 0.25, 0.05, 0.0, 0.2).unwrap();
        assert!((now - expected).abs() < 1e-10);
    }

    #[test]
    fn from_heat_is_linear() {
        let p = problem(0.1, 0.02, 0.25);
        assert_eq!(p.from_heat(0.0, 0.3, 0.01), 0.0);
        let base = p.from_heat(0.7, 0.3, 0.01);
        assert!((p.from_heat(2.5 * 0.7, 0.3, 0.01) - 2.5 * base).abs() < 1e-14 * base.abs());
    }

    #[test]
    fn asymptote_maps_to_spot() {
        let p = problem(0.1, 0.02, 0.25);
        let x = 1.2;
        let f = p.from_heat(p.asymptotic_boundary_value(x, 0.02), x, 0.02);
        assert!((f - p.s_of(x)).abs() < 1e-11);
    }

    /// The Black-Scholes operator applied to `f = K e^{alpha x + gamma tau} u`
    /// equals `-(sigma^2/2) K e^{alpha x + gamma tau} (u_tau - u_xx)`; both sides
    /// are evaluated with central differences on a smooth non-solution.
    #[test]
    fn operators_agree_under_substitution() {
        let m = MarketParams::new(0.08, 0.03, 0.3);
        let c = BarrierContract::down_and_out(100.0, 100.0, 80.0, 1.0);
        let p = to_heat(&c, &m).unwrap();
        let u = |x: f64, tau: f64| (1.3 * x).sin() * (2.0 * tau).cos() + x * x * tau;
        let f = |s: f64, t: f64| {
            let x = p.x_of(s);
            let tau = 0.5 * m.sigma * m.sigma * (p.expiry - t);
            p.from_heat(u(x, tau), x, tau)
        };
        let (s, t) = (112.0, 0.4);
        let (hs, ht) = (1e-2, 1e-4);
        let f_t = (f(s, t + ht) - f(s, t - ht)) / (2.0 * ht);
        let f_s = (f(s + hs, t) - f(s - hs, t)) / (2.0 * hs);
        let f_ss = (f(s + hs, t) - 2.0 * f(s, t) + f(s - hs, t)) / (hs * hs);
        let bs = f_t + m.mu() * s * f_s + 0.5 * m.sigma * m.sigma * s * s * f_ss - m.r * f(s, t);

        let x = p.x_of(s);
        let tau = 0.5 * m.sigma * m.sigma * (p.expiry - t);
        let (hx, htau) = (1e-4, 1e-5);
        let u_tau = (u(x, tau + htau) - u(x, tau - htau)) / (2.0 * htau);
        let u_xx = (u(x + hx, tau) - 2.0 * u(x, tau) + u(x - hx, tau)) / (hx * hx);
        let heat = -0.5 * m.sigma * m.sigma * p.from_heat(u_tau - u_xx, x, tau);
        assert!((bs - heat).abs() < 1e-4 * heat.abs().max(1.0), "{bs} vs {heat}");
    }

    proptest! {
        #[test]
        fn spot_round_trip(s in 1.0f64..10_000.0) {
            let p = problem(0.1, 0.0, 0.25);
            let back = p.s_of(p.x_of(s));
            prop_assert!((back - s).abs() <= 1e-14 * s);
        }
    }
}
