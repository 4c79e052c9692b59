//! Closed-form reference prices.
//!
//! * vanilla European call with a continuous dividend yield;
//! * Reiner-Rubinstein single-barrier calls, knock-out with a rebate paid at
//!   the hitting time and knock-in without rebate;
//! * double knock-out calls through the Kunitomo-Ikeda image series, plus a
//!   second, independent route through the sine-series solution of the heat
//!   equation on the corridor, which also carries the rebate.
//!
//! These functions are used as oracles by the tests and as exact boundary
//! data by the finite-difference engine.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

use crate::contracts::{validate, BarrierContract, BarrierGeometry, MarketParams};
use crate::error::{PricingError, Result};

/// Standard normal distribution function, accurate to ~1e-16 absolute.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Truncation policy for the double-barrier series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub term_tolerance: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            max_terms: 200,
            term_tolerance: 1e-12,
        }
    }
}

fn check_common(s0: f64, t: f64, sigma: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(PricingError::Domain(format!("expiry must be positive, got {t}")));
    }
    if !(sigma > 0.0) {
        return Err(PricingError::Domain(format!(
            "volatility must be positive, got {sigma}"
        )));
    }
    if !(s0 > 0.0) {
        return Err(PricingError::Domain(format!("spot must be positive, got {s0}")));
    }
    Ok(())
}

pub fn vanilla_call(s0: f64, k: f64, t: f64, r: f64, q: f64, sigma: f64) -> Result<f64> {
    check_common(s0, t, sigma)?;
    if k < 0.0 {
        return Err(PricingError::Domain(format!("strike must be non-negative, got {k}")));
    }
    let v = sigma * t.sqrt();
    let d1 = ((s0 / k).ln() + (r - q + 0.5 * sigma * sigma) * t) / v;
    let d2 = d1 - v;
    Ok(s0 * (-q * t).exp() * norm_cdf(d1) - k * (-r * t).exp() * norm_cdf(d2))
}

/// Building blocks A..F of the Reiner-Rubinstein formulas (Haug's notation),
/// evaluated for one barrier `h`, direction `eta` and call sign `phi = 1`.
struct ReinerRubinstein {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    /// Rebate paid at expiry (knock-in convention); per unit rebate.
    e: f64,
    /// Rebate paid at the hitting time (knock-out convention); per unit rebate.
    f: f64,
}

impl ReinerRubinstein {
    fn new(s: f64, x: f64, h: f64, t: f64, r: f64, q: f64, sigma: f64, eta: f64) -> Self {
        let carry = r - q;
        let v = sigma * t.sqrt();
        let sig2 = sigma * sigma;
        let mu = (carry - 0.5 * sig2) / sig2;
        let lambda = (mu * mu + 2.0 * r / sig2).sqrt();
        let x1 = (s / x).ln() / v + (1.0 + mu) * v;
        let x2 = (s / h).ln() / v + (1.0 + mu) * v;
        let y1 = (h * h / (s * x)).ln() / v + (1.0 + mu) * v;
        let y2 = (h / s).ln() / v + (1.0 + mu) * v;
        let z = (h / s).ln() / v + lambda * v;

        let fwd = s * ((carry - r) * t).exp();
        let disc = x * (-r * t).exp();
        let hs = h / s;
        let hs_2mu1 = (2.0 * (mu + 1.0) * hs.ln()).exp();
        let hs_2mu = (2.0 * mu * hs.ln()).exp();

        let a = fwd * norm_cdf(x1) - disc * norm_cdf(x1 - v);
        let b = fwd * norm_cdf(x2) - disc * norm_cdf(x2 - v);
        let c = fwd * hs_2mu1 * norm_cdf(eta * y1) - disc * hs_2mu * norm_cdf(eta * y1 - eta * v);
        let d = fwd * hs_2mu1 * norm_cdf(eta * y2) - disc * hs_2mu * norm_cdf(eta * y2 - eta * v);
        let e = (-r * t).exp() * (norm_cdf(eta * x2 - eta * v) - hs_2mu * norm_cdf(eta * y2 - eta * v));
        let f = ((mu + lambda) * hs.ln()).exp() * norm_cdf(eta * z)
            + ((mu - lambda) * hs.ln()).exp() * norm_cdf(eta * z - 2.0 * eta * lambda * v);
        Self { a, b, c, d, e, f }
    }
}

/// Continuously monitored down-and-out call; the rebate `rb` is paid when
/// the barrier is hit.
#[allow(clippy::too_many_arguments)]
pub fn down_and_out_call(s0: f64, k: f64, b: f64, t: f64, r: f64, q: f64, sigma: f64, rb: f64) -> Result<f64> {
    check_common(s0, t, sigma)?;
    if !(s0 > b) {
        return Err(PricingError::Domain(format!("down-and-out needs S0 > B ({s0} <= {b})")));
    }
    let rr = ReinerRubinstein::new(s0, k, b, t, r, q, sigma, 1.0);
    let body = if k > b { rr.a - rr.c } else { rr.b - rr.d };
    Ok(body + rb * rr.f)
}

/// Continuously monitored up-and-out call; the rebate `rb` is paid when the
/// barrier is hit.
#[allow(clippy::too_many_arguments)]
pub fn up_and_out_call(s0: f64, k: f64, b: f64, t: f64, r: f64, q: f64, sigma: f64, rb: f64) -> Result<f64> {
    check_common(s0, t, sigma)?;
    if !(s0 < b) {
        return Err(PricingError::Domain(format!("up-and-out needs S0 < B ({s0} >= {b})")));
    }
    let rr = ReinerRubinstein::new(s0, k, b, t, r, q, sigma, -1.0);
    let body = if k >= b { 0.0 } else { rr.a - rr.b + rr.c - rr.d };
    Ok(body + rb * rr.f)
}

/// Down-and-in call without rebate, from its own closed form (not by parity).
pub fn down_and_in_call(s0: f64, k: f64, b: f64, t: f64, r: f64, q: f64, sigma: f64) -> Result<f64> {
    check_common(s0, t, sigma)?;
    if !(s0 > b) {
        return Err(PricingError::Domain(format!("down-and-in needs S0 > B ({s0} <= {b})")));
    }
    let rr = ReinerRubinstein::new(s0, k, b, t, r, q, sigma, 1.0);
    Ok(if k > b { rr.c } else { rr.a - rr.b + rr.d })
}

/// Up-and-in call without rebate, from its own closed form (not by parity).
pub fn up_and_in_call(s0: f64, k: f64, b: f64, t: f64, r: f64, q: f64, sigma: f64) -> Result<f64> {
    check_common(s0, t, sigma)?;
    if !(s0 < b) {
        return Err(PricingError::Domain(format!("up-and-in needs S0 < B ({s0} >= {b})")));
    }
    let rr = ReinerRubinstein::new(s0, k, b, t, r, q, sigma, -1.0);
    Ok(if k > b { rr.a } else { rr.b - rr.c + rr.d })
}

/// Present value of one unit paid at expiry if the knock-in barrier has
/// been touched (the `E` term); exposed for completeness of the rebate
/// conventions.
pub fn knock_in_rebate_factor(s0: f64, b: f64, t: f64, r: f64, q: f64, sigma: f64) -> Result<f64> {
    check_common(s0, t, sigma)?;
    let eta = if s0 > b { 1.0 } else { -1.0 };
    Ok(ReinerRubinstein::new(s0, b, b, t, r, q, sigma, eta).e)
}

/// Double knock-out call with flat barriers `bl < s0 < bu`.
///
/// The no-rebate part is the Kunitomo-Ikeda image series, summed
/// symmetrically in `n` until both the `n` and `-n` terms fall below
/// `ctl.term_tolerance`. A non-zero rebate (paid at the first hit of either
/// barrier) is added from the corridor sine series.
#[allow(clippy::too_many_arguments)]
pub fn double_knock_out_call(
    s0: f64,
    k: f64,
    bl: f64,
    bu: f64,
    t: f64,
    r: f64,
    q: f64,
    sigma: f64,
    rb: f64,
    ctl: SeriesControl,
) -> Result<f64> {
    check_corridor(s0, bl, bu, t, sigma)?;
    let body = kunitomo_ikeda(s0, k, bl, bu, t, r, q, sigma, ctl)?;
    if rb == 0.0 {
        return Ok(body);
    }
    let heat = CorridorHeat::new(s0, k, bl, bu, t, r, q, sigma);
    Ok(body + heat.rebate_part(rb, ctl)?)
}

/// Double knock-out call from the eigenfunction expansion of the heat
/// equation on the corridor. Independent of [`double_knock_out_call`]'s
/// image series for the no-rebate part.
#[allow(clippy::too_many_arguments)]
pub fn double_knock_out_call_spectral(
    s0: f64,
    k: f64,
    bl: f64,
    bu: f64,
    t: f64,
    r: f64,
    q: f64,
    sigma: f64,
    rb: f64,
    ctl: SeriesControl,
) -> Result<f64> {
    check_corridor(s0, bl, bu, t, sigma)?;
    let heat = CorridorHeat::new(s0, k, bl, bu, t, r, q, sigma);
    let mut value = heat.payoff_part(ctl)?;
    if rb != 0.0 {
        value += heat.rebate_part(rb, ctl)?;
    }
    Ok(value)
}

fn check_corridor(s0: f64, bl: f64, bu: f64, t: f64, sigma: f64) -> Result<()> {
    check_common(s0, t, sigma)?;
    if !(bl > 0.0 && bl < s0 && s0 < bu) {
        return Err(PricingError::Domain(format!(
            "double knock-out needs 0 < B_l < S0 < B_u (got {bl}, {s0}, {bu})"
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn kunitomo_ikeda(
    s: f64,
    x: f64,
    lo: f64,
    hi: f64,
    t: f64,
    r: f64,
    q: f64,
    sigma: f64,
    ctl: SeriesControl,
) -> Result<f64> {
    if x >= hi {
        return Ok(0.0);
    }
    let carry = r - q;
    let v = sigma * t.sqrt();
    let m = (carry + 0.5 * sigma * sigma) * t;
    let mu1 = 2.0 * carry / (sigma * sigma) + 1.0;
    let floor = x.max(lo);
    let ln_ratio = (hi / lo).ln();
    let fwd = s * ((carry - r) * t).exp();
    let disc = x * (-r * t).exp();

    let term = |n: f64| -> f64 {
        let d1 = ((s / floor).ln() + 2.0 * n * ln_ratio + m) / v;
        let d2 = ((s / hi).ln() + 2.0 * n * ln_ratio + m) / v;
        let d3 = ((lo * lo / (floor * s)).ln() - 2.0 * n * ln_ratio + m) / v;
        let d4 = ((lo * lo / (hi * s)).ln() - 2.0 * n * ln_ratio + m) / v;
        let ln_reflect = (lo / s).ln() - n * ln_ratio;
        let direct = (n * mu1 * ln_ratio).exp();
        let direct_k = (n * (mu1 - 2.0) * ln_ratio).exp();
        let image = (mu1 * ln_reflect).exp();
        let image_k = ((mu1 - 2.0) * ln_reflect).exp();
        fwd * (direct * (norm_cdf(d1) - norm_cdf(d2)) - image * (norm_cdf(d3) - norm_cdf(d4)))
            - disc
                * (direct_k * (norm_cdf(d1 - v) - norm_cdf(d2 - v)) - image_k * (norm_cdf(d3 - v) - norm_cdf(d4 - v)))
    };

    let mut sum = term(0.0);
    for n in 1..=ctl.max_terms {
        let n = n as f64;
        let (up, down) = (term(n), term(-n));
        sum += up + down;
        if up.abs() < ctl.term_tolerance && down.abs() < ctl.term_tolerance {
            return Ok(sum);
        }
    }
    Err(PricingError::NonConvergence { terms: ctl.max_terms })
}

/// Heat-equation form of the corridor problem: `x = ln(S/K)` on
/// `[x_lo, x_hi]`, time `tau = sigma^2 t / 2`, price `K e^{alpha x + gamma tau} u`.
struct CorridorHeat {
    strike: f64,
    x0: f64,
    x_lo: f64,
    x_hi: f64,
    tau: f64,
    nu: f64,
    alpha: f64,
    gamma: f64,
}

impl CorridorHeat {
    #[allow(clippy::too_many_arguments)]
    fn new(s0: f64, k: f64, bl: f64, bu: f64, t: f64, r: f64, q: f64, sigma: f64) -> Self {
        let sig2 = sigma * sigma;
        let nu = 2.0 * (r - q) / sig2;
        let nu2 = 2.0 * q / sig2;
        Self {
            strike: k,
            x0: (s0 / k).ln(),
            x_lo: (bl / k).ln(),
            x_hi: (bu / k).ln(),
            tau: 0.5 * sig2 * t,
            nu,
            alpha: -0.5 * (nu - 1.0),
            gamma: -0.25 * (nu + 1.0) * (nu + 1.0) - nu2,
        }
    }

    fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    fn scale(&self) -> f64 {
        self.strike * (self.alpha * self.x0 + self.gamma * self.tau).exp()
    }

    /// `int_{from}^{x_hi} e^{kx} sin(w (x - x_lo)) dx`.
    fn exp_sine_integral(&self, k: f64, w: f64, from: f64) -> f64 {
        let g = |x: f64| {
            let phase = w * (x - self.x_lo);
            (k * x).exp() * (k * phase.sin() - w * phase.cos()) / (k * k + w * w)
        };
        g(self.x_hi) - g(from)
    }

    /// Sums `sum_n coeff(n, w_n) e^{-w_n^2 tau} sin(w_n (x0 - x_lo))`.
    fn sine_series(&self, ctl: SeriesControl, coeff: impl Fn(f64) -> f64) -> Result<f64> {
        let width = self.width();
        let mut sum = 0.0;
        for n in 1..=ctl.max_terms {
            let w = n as f64 * PI / width;
            let damped = coeff(w) * (-w * w * self.tau).exp();
            sum += damped * (w * (self.x0 - self.x_lo)).sin();
            if damped.abs() < ctl.term_tolerance && n >= 2 {
                return Ok(sum);
            }
        }
        Err(PricingError::NonConvergence { terms: ctl.max_terms })
    }

    fn payoff_part(&self, ctl: SeriesControl) -> Result<f64> {
        if self.x_hi <= 0.0 {
            return Ok(0.0);
        }
        let from = self.x_lo.max(0.0);
        let k1 = 0.5 * (self.nu + 1.0);
        let k2 = 0.5 * (self.nu - 1.0);
        let norm = 2.0 / self.width();
        let u = self.sine_series(ctl, |w| {
            norm * (self.exp_sine_integral(k1, w, from) - self.exp_sine_integral(k2, w, from))
        })?;
        Ok(self.scale() * u)
    }

    /// Rebate paid at the first hit of either barrier: a steady particular
    /// solution `e^{-gamma tau}(A e^{kx} + B e^{-kx})` carrying the boundary
    /// data, corrected by a sine series for the zero initial value.
    fn rebate_part(&self, rb: f64, ctl: SeriesControl) -> Result<f64> {
        let kappa2 = -self.gamma;
        if kappa2 < 0.0 {
            return Err(PricingError::Unsupported(
                "closed-form double-barrier rebate needs gamma <= 0".into(),
            ));
        }
        let g_lo = rb / self.strike * (-self.alpha * self.x_lo).exp();
        let g_hi = rb / self.strike * (-self.alpha * self.x_hi).exp();
        let (basis, kappa): (Box<dyn Fn(f64, f64) -> f64>, f64) = if kappa2 < 1e-14 {
            (Box::new(|c: f64, x: f64| if c > 0.0 { 1.0 } else { x }), 0.0)
        } else {
            let k = kappa2.sqrt();
            (Box::new(move |c: f64, x: f64| (c * k * x).exp()), k)
        };
        // Solve the 2x2 system for A (basis +1) and B (basis -1).
        let (p, qq, rr, ss) = (
            basis(1.0, self.x_lo),
            basis(-1.0, self.x_lo),
            basis(1.0, self.x_hi),
            basis(-1.0, self.x_hi),
        );
        let det = p * ss - qq * rr;
        let a = (g_lo * ss - qq * g_hi) / det;
        let b = (p * g_hi - rr * g_lo) / det;
        let steady = (-self.gamma * self.tau).exp() * (a * basis(1.0, self.x0) + b * basis(-1.0, self.x0));

        let norm = 2.0 / self.width();
        let correction = if kappa == 0.0 {
            // basis functions 1 and x
            let width = self.width();
            self.sine_series(ctl, |w| {
                let n_pi = w * width;
                let i_one = (1.0 - n_pi.cos()) / w;
                let i_x = self.x_lo * i_one + (n_pi.sin() / (w * w) - width * n_pi.cos() / w);
                -norm * (a * i_one + b * i_x)
            })?
        } else {
            self.sine_series(ctl, |w| {
                -norm
                    * (a * self.exp_sine_integral(kappa, w, self.x_lo)
                        + b * self.exp_sine_integral(-kappa, w, self.x_lo))
            })?
        };
        Ok(self.scale() * (steady + correction))
    }
}

/// Knock-in value from knock-in/knock-out parity. Only meaningful without a
/// rebate on the knock-out leg.
pub fn knock_in_from_parity(knock_out_price: f64, vanilla_price: f64, rebate: f64) -> Result<f64> {
    if rebate != 0.0 {
        return Err(PricingError::Domain("knock-in parity requires a zero rebate".into()));
    }
    Ok(vanilla_price - knock_out_price)
}

/// Closed-form value of a continuously monitored contract.
pub fn closed_form_price(contract: &BarrierContract, market: &MarketParams) -> Result<f64> {
    validate(contract, market)?;
    let c = contract;
    let m = market;
    match c.geometry {
        BarrierGeometry::DownAndOut { barrier } => {
            down_and_out_call(c.spot, c.strike, barrier, c.expiry, m.r, m.q, m.sigma, c.rebate)
        }
        BarrierGeometry::UpAndOut { barrier } => {
            up_and_out_call(c.spot, c.strike, barrier, c.expiry, m.r, m.q, m.sigma, c.rebate)
        }
        BarrierGeometry::DoubleKnockOut { lower, upper } => double_knock_out_call(
            c.spot,
            c.strike,
            lower,
            upper,
            c.expiry,
            m.r,
            m.q,
            m.sigma,
            c.rebate,
            SeriesControl::default(),
        ),
    }
}

pub fn vanilla_price(contract: &BarrierContract, market: &MarketParams) -> Result<f64> {
    vanilla_call(
        contract.spot,
        contract.strike,
        contract.expiry,
        market.r,
        market.q,
        market.sigma,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Gauss-Legendre quadrature of the discounted call payoff
    /// against the terminal standard-normal density.
    fn vanilla_by_quadrature(s: f64, k: f64, t: f64, r: f64, q: f64, sigma: f64) -> f64 {
        const NODES: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683,
            0.538_469_310_105_683,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
            0.236_926_885_056_189,
        ];
        let drift = (r - q - 0.5 * sigma * sigma) * t;
        let v = sigma * t.sqrt();
        let z0 = ((k / s).ln() - drift) / v;
        let f = |z: f64| (s * (drift + v * z).exp() - k) * (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        let (lo, hi, n) = (z0, z0.max(0.0) + 14.0, 4000);
        let h = (hi - lo) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let mid = lo + (i as f64 + 0.5) * h;
            for (x, w) in NODES.iter().zip(WEIGHTS) {
                acc += w * f(mid + 0.5 * h * x);
            }
        }
        (-r * t).exp() * acc * 0.5 * h
    }

    #[test]
    fn norm_cdf_matches_high_precision_values() {
        let cases = [
            (-10.0, 7.619853024160526e-24),
            (-6.5, 4.016000583859118e-11),
            (-4.2, 1.334574901590634e-5),
            (-1.0, 0.158_655_253_931_457_05),
            (0.0, 0.5),
            (0.5, 0.691_462_461_274_013_1),
            (1.0, 0.841_344_746_068_542_9),
            (3.7, 0.999_892_200_266_522_6),
            (8.0, 0.999_999_999_999_999_4),
        ];
        for (x, expected) in cases {
            let got = norm_cdf(x);
            assert!((got - expected).abs() <= 1e-14 * expected, "Phi({x}) = {got:e}");
        }
    }

    #[test]
    fn quadrature_oracle_reproduces_frozen_values() {
        // Frozen from a 30-digit quadrature of the same integral.
        let v = vanilla_by_quadrature(100.0, 100.0, 0.5, 0.10, 0.0, 0.20);
        assert!((v - 8.277_803_959_445_554).abs() < 1e-8);
    }

    #[test]
    fn vanilla_matches_quadrature() {
        let v = vanilla_call(100.0, 100.0, 0.5, 0.10, 0.0, 0.20).unwrap();
        assert!((v - 8.277_803_959_445_554).abs() < 1e-8);
        let v = vanilla_call(95.0, 100.0, 1.0, 0.10, 0.0, 0.25).unwrap();
        assert!((v - 11.657_350_285_792_498).abs() < 1e-8);
        for &(s, k, t, r, q, sig) in &[
            (80.0, 100.0, 2.0, 0.03, 0.05, 0.4),
            (130.0, 90.0, 0.25, 0.07, 0.01, 0.15),
        ] {
            let a = vanilla_call(s, k, t, r, q, sig).unwrap();
            let b = vanilla_by_quadrature(s, k, t, r, q, sig);
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn vanilla_limits_and_bounds() {
        let (s, k, t, r, q): (f64, f64, f64, f64, f64) = (120.0, 100.0, 1.0, 0.05, 0.02);
        let fwd = s * (-q * t).exp() - k * (-r * t).exp();
        let v = vanilla_call(s, k, t, r, q, 1e-6).unwrap();
        assert!((v - fwd).abs() < 1e-10);
        let v = vanilla_call(s, 1e-12, t, r, q, 0.3).unwrap();
        assert!((v - s * (-q * t).exp()).abs() < 1e-9);
        let v = vanilla_call(s, k, t, r, q, 0.3).unwrap();
        assert!(v >= fwd.max(0.0) && v < s * (-q * t).exp());
        assert!(vanilla_call(s, k, 0.0, r, q, 0.3).is_err());
        assert!(vanilla_call(s, k, t, r, q, 0.0).is_err());
    }

    #[test]
    fn down_and_out_reproduces_published_closed_forms() {
        let cases = [
            (95.0, 100.0, 90.0, 1.0, 0.10, 0.25, 5.9968),
            (91.0, 100.0, 90.0, 1.0, 0.10, 0.25, 1.2738),
            (95.0, 100.0, 90.0, 1.0, 0.10, 0.30, 5.9060),
            (95.0, 100.0, 90.0, 1.0, 0.10, 0.40, 5.7502),
        ];
        for (s, k, b, t, r, sig, expected) in cases {
            let v = down_and_out_call(s, k, b, t, r, 0.0, sig, 0.0).unwrap();
            assert!((v - expected).abs() < 5e-4, "S0={s} sigma={sig}: {v}");
        }
        let v = down_and_out_call(271.905, 150.0, 180.0, 0.25, 0.05, 0.0, 0.20, 0.0).unwrap();
        assert!((v - 123.768).abs() < 2e-3, "{v}");
    }

    #[test]
    fn down_and_out_edge_behaviour() {
        assert!(down_and_out_call(90.0, 100.0, 90.0, 1.0, 0.1, 0.0, 0.25, 0.0).is_err());
        // tends to the rebate at the barrier
        let v = down_and_out_call(90.0 + 1e-9, 100.0, 90.0, 1.0, 0.1, 0.0, 0.25, 3.0).unwrap();
        assert!((v - 3.0).abs() < 1e-6);
        // vanishing barrier
        let v = down_and_out_call(95.0, 100.0, 1e-6, 1.0, 0.1, 0.0, 0.25, 0.0).unwrap();
        let van = vanilla_call(95.0, 100.0, 1.0, 0.1, 0.0, 0.25).unwrap();
        assert!((v - van).abs() < 1e-8);
    }

    #[test]
    fn up_and_out_anchors() {
        let v = up_and_out_call(100.0, 100.0, 110.0, 0.5, 0.10, 0.02, 0.20, 0.0).unwrap();
        assert!((v - 0.299).abs() < 1e-3, "{v}");
        let v = up_and_out_call(100.0, 100.0, 100.1, 0.5, 0.10, 0.0, 0.20, 3.0).unwrap();
        assert!((v - 2.987).abs() < 1e-3, "{v}");
        let v = up_and_out_call(100.0, 100.0, 1e6, 0.5, 0.10, 0.0, 0.20, 0.0).unwrap();
        let van = vanilla_call(100.0, 100.0, 0.5, 0.10, 0.0, 0.20).unwrap();
        assert!((v - van).abs() < 1e-10);
        let v = up_and_out_call(110.0 - 1e-9, 100.0, 110.0, 0.5, 0.10, 0.0, 0.20, 2.5).unwrap();
        assert!((v - 2.5).abs() < 1e-6);
        assert!(up_and_out_call(110.0, 100.0, 110.0, 0.5, 0.1, 0.0, 0.2, 0.0).is_err());
    }

    #[test]
    fn double_knock_out_matches_published_value_and_spectral_route() {
        let ctl = SeriesControl::default();
        let v = double_knock_out_call(100.0, 100.0, 95.0, 125.0, 0.5, 0.10, 0.0, 0.20, 0.0, ctl).unwrap();
        assert!((v - 2.033).abs() < 1e-3, "{v}");
        let s = double_knock_out_call_spectral(100.0, 100.0, 95.0, 125.0, 0.5, 0.10, 0.0, 0.20, 0.0, ctl).unwrap();
        assert!((v - s).abs() < 1e-10, "{v} vs {s}");

        for &(s0, k, lo, hi, t, r, q, sig) in &[
            (100.0, 100.0, 75.0, 125.0, 0.5, 0.10, 0.0, 0.20),
            (100.0, 90.0, 80.0, 120.0, 0.5, 0.10, 0.04, 0.20),
            (105.0, 110.0, 60.0, 200.0, 1.0, 0.05, 0.02, 0.35),
        ] {
            let a = double_knock_out_call(s0, k, lo, hi, t, r, q, sig, 0.0, ctl).unwrap();
            let b = double_knock_out_call_spectral(s0, k, lo, hi, t, r, q, sig, 0.0, ctl).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn double_knock_out_degenerates_to_vanilla() {
        let ctl = SeriesControl::default();
        let v = double_knock_out_call(100.0, 100.0, 1.0, 1e4, 0.5, 0.10, 0.0, 0.20, 0.0, ctl).unwrap();
        let van = vanilla_call(100.0, 100.0, 0.5, 0.10, 0.0, 0.20).unwrap();
        assert!((v - van).abs() < 1e-9, "{v} vs {van}");
    }

    #[test]
    fn double_knock_out_is_stable_under_more_terms() {
        let ctl = SeriesControl::default();
        let doubled = SeriesControl { max_terms: 400, ..ctl };
        let a = double_knock_out_call(100.0, 100.0, 95.0, 125.0, 0.5, 0.10, 0.0, 0.20, 0.0, ctl).unwrap();
        let b = double_knock_out_call(100.0, 100.0, 95.0, 125.0, 0.5, 0.10, 0.0, 0.20, 0.0, doubled).unwrap();
        assert!((a - b).abs() < ctl.term_tolerance);
        let starved = SeriesControl {
            max_terms: 1,
            term_tolerance: 1e-300,
        };
        assert_eq!(
            double_knock_out_call(100.0, 100.0, 95.0, 125.0, 0.5, 0.1, 0.0, 0.2, 0.0, starved),
            Err(PricingError::NonConvergence { terms: 1 })
        );
    }

    #[test]
    fn double_rebate_tends_to_rebate_near_barrier() {
        let ctl = SeriesControl::default();
        let v = double_knock_out_call(95.0 + 1e-7, 100.0, 95.0, 125.0, 0.5, 0.1, 0.04, 0.2, 6.66, ctl).unwrap();
        assert!((v - 6.66).abs() < 1e-4, "{v}");
        let v = double_knock_out_call(125.0 - 1e-7, 100.0, 95.0, 125.0, 0.5, 0.1, 0.04, 0.2, 6.66, ctl).unwrap();
        assert!((v - 6.66).abs() < 1e-4, "{v}");
    }

    #[test]
    fn knock_in_parity() {
        assert_eq!(knock_in_from_parity(4.0, 4.0, 0.0).unwrap(), 0.0);
        assert_eq!(knock_in_from_parity(0.0, 4.0, 0.0).unwrap(), 4.0);
        assert!(knock_in_from_parity(1.0, 4.0, 3.0).is_err());
        // Table 1 parameters: vanilla from the quadrature oracle minus 5.9968.
        let ki = knock_in_from_parity(5.9968, vanilla_by_quadrature(95.0, 100.0, 1.0, 0.1, 0.0, 0.25), 0.0).unwrap();
        let direct = down_and_in_call(95.0, 100.0, 90.0, 1.0, 0.1, 0.0, 0.25).unwrap();
        assert!((ki - direct).abs() < 5e-4, "{ki} vs {direct}");
    }

    #[test]
    fn down_and_out_monotonicity() {
        let price = |s: f64, b: f64| down_and_out_call(s, 100.0, b, 1.0, 0.1, 0.0, 0.25, 0.0).unwrap();
        let mut prev = 0.0;
        for i in 1..60 {
            let s = 90.0 + i as f64;
            let v = price(s, 90.0);
            assert!(v >= prev);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let b = 50.0 + i as f64;
            let v = price(95.0, b);
            assert!(v <= prev);
            prev = v;
        }
    }
}
