//! Comparison schemes: explicit lattices in `y = ln S` with either the
//! optimal boundary or a far-field cutoff, the high-order implicit scheme
//! with a far-field cutoff, and error profiles against closed forms.

use std::time::Instant;

use crate::analytic;
use crate::boundary::{self, CutoffConfig};
use crate::contracts::{BarrierContract, BarrierGeometry, MarketParams};
use crate::error::{PricingError, Result};
use crate::pde_engine::{
    build_grid, extract_price, solve_field, BarrierPlacement, BoundaryMode, Edge, EdgeCondition, PriceReport,
    ThetaPolicy,
};
use crate::transform::to_heat;

/// Where the far-field edge of an approximate-boundary run sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmaxRule {
    TwoS0Plus200,
    TwoS0,
    S0Plus100,
    Explicit(f64),
}

impl SmaxRule {
    pub fn s_max(&self, s0: f64) -> f64 {
        match *self {
            SmaxRule::TwoS0Plus200 => 2.0 * s0 + 200.0,
            SmaxRule::TwoS0 => 2.0 * s0,
            SmaxRule::S0Plus100 => s0 + 100.0,
            SmaxRule::Explicit(v) => v,
        }
    }
}

impl std::str::FromStr for SmaxRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "2s0+200" => Ok(SmaxRule::TwoS0Plus200),
            "2s0" => Ok(SmaxRule::TwoS0),
            "s0+100" => Ok(SmaxRule::S0Plus100),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0)
                .map(SmaxRule::Explicit)
                .ok_or_else(|| format!("unknown S_max rule '{other}' (2s0+200 | 2s0 | s0+100 | <price>)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplicitConfig {
    /// Number of time steps; the space step follows from `lambda`.
    pub l: usize,
    /// `dy = lambda sigma sqrt(dt)`.
    pub lambda: f64,
    pub s_max_rule: SmaxRule,
}

impl ExplicitConfig {
    pub fn new(l: usize) -> Self {
        Self {
            l,
            lambda: 3f64.sqrt(),
            s_max_rule: SmaxRule::TwoS0Plus200,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_s_max_rule(mut self, rule: SmaxRule) -> Self {
        self.s_max_rule = rule;
        self
    }
}

#[derive(Debug, Clone, Copy)]
enum FarEdge {
    Vanilla,
    /// `f = S` at the far edge.
    Spot,
}

/// Backward induction on nodes `ln B + k dy` (down) or `ln B - k dy` (up),
/// `k = 0..=J`, with the barrier at `k = 0` and the far edge at `k = J`.
#[allow(clippy::too_many_arguments)]
fn explicit_lattice(
    s0: f64,
    strike: f64,
    barrier: f64,
    far: f64,
    expiry: f64,
    rebate: f64,
    market: &MarketParams,
    config: &ExplicitConfig,
    far_edge: FarEdge,
) -> Result<(f64, usize)> {
    if config.l < 1 || !(config.lambda > 0.0) {
        return Err(PricingError::Domain(
            "explicit scheme needs L >= 1 and lambda > 0".into(),
        ));
    }
    let (r, q, sigma) = (market.r, market.q, market.sigma);
    let dt = expiry / config.l as f64;
    let dy = config.lambda * sigma * dt.sqrt();
    let (yb, y_far, y0) = (barrier.ln(), far.ln(), s0.ln());
    let up = y_far > yb;
    let sign = if up { 1.0 } else { -1.0 };
    let span = (y_far - yb).abs();
    let j = ((span / dy) - 1e-12).ceil().max(2.0) as usize;
    let y: Vec<f64> = (0..=j).map(|k| yb + sign * k as f64 * dy).collect();
    let s: Vec<f64> = y.iter().map(|v| v.exp()).collect();

    let drift = r - q - 0.5 * sigma * sigma;
    let diffusion = sigma * sigma * dt / (dy * dy);
    let advection = drift * dt / dy;
    let p_mid = 1.0 - diffusion;
    // Probabilities toward increasing and decreasing k.
    let p_out = 0.5 * (diffusion + sign * advection);
    let p_in = 0.5 * (diffusion - sign * advection);
    if p_mid < 0.0 || p_out < 0.0 || p_in < 0.0 {
        return Err(PricingError::Unstable(format!(
            "negative weights (p_up/p_mid/p_down = {p_out:.4}/{p_mid:.4}/{p_in:.4}); raise lambda or L"
        )));
    }
    let disc = (-r * dt).exp();
    let far_value = |tau: f64| match far_edge {
        FarEdge::Vanilla => {
            if tau <= 0.0 {
                (s[j] - strike).max(0.0)
            } else {
                analytic::vanilla_call(s[j], strike, tau, r, q, sigma).expect("positive inputs")
            }
        }
        FarEdge::Spot => s[j],
    };

    let mut v: Vec<f64> = s.iter().map(|&si| (si - strike).max(0.0)).collect();
    v[0] = rebate;
    v[j] = far_value(0.0);
    let mut next = v.clone();
    for n in 1..=config.l {
        for k in 1..j {
            next[k] = disc * (p_out * v[k + 1] + p_mid * v[k] + p_in * v[k - 1]);
        }
        next[0] = rebate;
        next[j] = far_value(n as f64 * dt);
        std::mem::swap(&mut v, &mut next);
    }

    // Quadratic through the three nodes nearest to S0.
    let t = (y0 - yb).abs() / dy;
    let mid = (t.round() as usize).clamp(1, j - 1);
    let nodes = [mid - 1, mid, mid + 1];
    let mut value = 0.0;
    for &a in &nodes {
        let mut w = 1.0;
        for &b in &nodes {
            if a != b {
                w *= (y0 - y[b]) / (y[a] - y[b]);
            }
        }
        value += w * v[a];
    }
    Ok((value, j))
}

fn single_barrier(contract: &BarrierContract) -> Result<(f64, bool)> {
    match contract.geometry {
        BarrierGeometry::DownAndOut { barrier } => Ok((barrier, true)),
        BarrierGeometry::UpAndOut { barrier } => Ok((barrier, false)),
        BarrierGeometry::DoubleKnockOut { .. } => Err(PricingError::Unsupported(
            "explicit schemes take a single barrier".into(),
        )),
    }
}

fn require_continuous(contract: &BarrierContract) -> Result<()> {
    if contract.monitoring.is_continuous() {
        Ok(())
    } else {
        Err(PricingError::Unsupported(
            "comparison schemes use continuous monitoring".into(),
        ))
    }
}

/// Explicit scheme on the optimally truncated domain with exact vanilla
/// values on the cutoff edge.
pub fn price_obes(
    contract: &BarrierContract,
    market: &MarketParams,
    config: &ExplicitConfig,
    cfg: &CutoffConfig,
) -> Result<PriceReport> {
    let started = Instant::now();
    require_continuous(contract)?;
    to_heat(contract, market)?;
    let (barrier, _) = single_barrier(contract)?;
    let cut = boundary::cutoff(contract, market, cfg)?;
    if boundary::barrier_worthless(contract.spot, &cut) {
        let value = analytic::vanilla_price(contract, market)?;
        return Ok(PriceReport::short_circuit(value, (0, config.l), started));
    }
    let (value, j) = explicit_lattice(
        contract.spot,
        contract.strike,
        barrier,
        cut.s_m,
        contract.expiry,
        contract.rebate,
        market,
        config,
        FarEdge::Vanilla,
    )?;
    Ok(PriceReport {
        value,
        mesh: (j, config.l),
        wall_time: started.elapsed().as_secs_f64(),
        boundary_mode: BoundaryMode::Optimal,
        extraction: crate::pde_engine::Extraction::Interpolated,
        time_steps: config.l,
    })
}

/// Explicit scheme on `[B, S_max]` with `f = S_max` on the far edge.
pub fn price_mefd(contract: &BarrierContract, market: &MarketParams, config: &ExplicitConfig) -> Result<PriceReport> {
    let started = Instant::now();
    require_continuous(contract)?;
    to_heat(contract, market)?;
    let (barrier, down) = single_barrier(contract)?;
    if !down {
        return Err(PricingError::Unsupported(
            "the far-field explicit scheme handles down-and-out calls".into(),
        ));
    }
    let s_max = config.s_max_rule.s_max(contract.spot);
    if !(s_max > contract.spot) {
        return Err(PricingError::Domain(format!("S_max = {s_max} must exceed S0")));
    }
    let (value, j) = explicit_lattice(
        contract.spot,
        contract.strike,
        barrier,
        s_max,
        contract.expiry,
        contract.rebate,
        market,
        config,
        FarEdge::Spot,
    )?;
    Ok(PriceReport {
        value,
        mesh: (j, config.l),
        wall_time: started.elapsed().as_secs_f64(),
        boundary_mode: BoundaryMode::Approximate { s_max },
        extraction: crate::pde_engine::Extraction::Interpolated,
        time_steps: config.l,
    })
}

/// High-order implicit scheme on `[x_b, ln(S_max/K)]` with the far-field
/// asymptote `f ~ S` on the upper edge.
pub fn price_habis(
    contract: &BarrierContract,
    market: &MarketParams,
    m: usize,
    l: usize,
    rule: SmaxRule,
) -> Result<PriceReport> {
    let started = Instant::now();
    require_continuous(contract)?;
    let problem = to_heat(contract, market)?;
    let (barrier, down) = single_barrier(contract)?;
    if !down {
        return Err(PricingError::Unsupported(
            "the far-field implicit scheme handles down-and-out calls".into(),
        ));
    }
    let s_max = rule.s_max(contract.spot);
    if !(s_max > contract.spot) {
        return Err(PricingError::Domain(format!("S_max = {s_max} must exceed S0")));
    }
    let (lo, hi) = (problem.x_of(barrier), problem.x_of(s_max));
    let x0 = problem.x_of(contract.spot);
    let placement = BarrierPlacement::OnEdges {
        adjustable: Some(Edge::Upper),
    };
    let grid = build_grid((lo, hi), problem.tau_max, m, l, x0, &placement, ThetaPolicy::HighOrder)?;
    let field = solve_field(
        &problem,
        grid,
        ThetaPolicy::HighOrder,
        EdgeCondition::Rebate(contract.rebate),
        EdgeCondition::Asymptotic,
    )?;
    let (value, extraction) = extract_price(&field.u, &field.grid, x0, &problem)?;
    Ok(PriceReport {
        value,
        mesh: (field.grid.m, field.grid.l),
        wall_time: started.elapsed().as_secs_f64(),
        boundary_mode: BoundaryMode::Approximate { s_max },
        extraction,
        time_steps: field.grid.l,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorProfile {
    /// `(S_j, f_numeric - f_closed_form)` per grid node.
    pub points: Vec<(f64, f64)>,
    pub max_abs: f64,
}

/// Node-wise error of a continuous-monitoring run on the unaligned domain
/// `[barrier, cutoff]` (or between the two barriers).
pub fn error_profile(
    contract: &BarrierContract,
    market: &MarketParams,
    m: usize,
    l: usize,
    policy: ThetaPolicy,
    cfg: &CutoffConfig,
) -> Result<ErrorProfile> {
    // The profile covers the whole curve, so the layout ignores the spot.
    let problem = to_heat(contract, market)?;
    let k = contract.strike;
    let rb = EdgeCondition::Rebate(contract.rebate);
    let (lo, hi, lower, upper) = match contract.geometry {
        BarrierGeometry::DownAndOut { barrier } => {
            let cut = boundary::cutoff(contract, market, cfg)?;
            ((barrier / k).ln(), cut.x_m, rb, EdgeCondition::Vanilla)
        }
        BarrierGeometry::UpAndOut { barrier } => {
            let cut = boundary::cutoff(contract, market, cfg)?;
            (cut.x_m, (barrier / k).ln(), EdgeCondition::Vanilla, rb)
        }
        BarrierGeometry::DoubleKnockOut { lower, upper } => ((lower / k).ln(), (upper / k).ln(), rb, rb),
    };
    let placement = BarrierPlacement::OnEdges { adjustable: None };
    let grid = build_grid((lo, hi), problem.tau_max, m, l, lo, &placement, policy)?;
    let field = solve_field(&problem, grid, policy, lower, upper)?;
    let mut points = Vec::with_capacity(field.grid.m + 1);
    for (s, f) in field.prices() {
        // Edge nodes sit on a barrier, where the knock-out value is the rebate.
        let exact = analytic::closed_form_price(&contract.with_spot(s), market).unwrap_or(contract.rebate);
        points.push((s, f - exact));
    }
    let max_abs = points.iter().fold(0.0f64, |m, (_, e)| m.max(e.abs()));
    Ok(ErrorProfile { points, max_abs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1(s0: f64) -> (BarrierContract, MarketParams) {
        (
            BarrierContract::down_and_out(s0, 100.0, 90.0, 1.0),
            MarketParams::new(0.10, 0.0, 0.25),
        )
    }

    #[test]
    fn s_max_rules() {
        assert_eq!(SmaxRule::TwoS0Plus200.s_max(95.0), 390.0);
        assert_eq!(SmaxRule::TwoS0.s_max(95.0), 190.0);
        assert_eq!(SmaxRule::S0Plus100.s_max(95.0), 195.0);
        assert_eq!("2s0".parse::<SmaxRule>().unwrap(), SmaxRule::TwoS0);
        assert_eq!("500".parse::<SmaxRule>().unwrap(), SmaxRule::Explicit(500.0));
        assert!("x".parse::<SmaxRule>().is_err());
    }

    #[test]
    fn obes_converges_to_closed_form() {
        let (c, m) = table1(91.0);
        let r = price_obes(&c, &m, &ExplicitConfig::new(2000), &CutoffConfig::default()).unwrap();
        assert!((r.value - 1.2738).abs() < 1e-3, "{}", r.value);
        let (c, m) = table1(95.0);
        let r = price_obes(&c, &m, &ExplicitConfig::new(1000), &CutoffConfig::default()).unwrap();
        assert!((r.value - 5.9968).abs() < 1e-3, "{}", r.value);
    }

    #[test]
    fn obes_and_wide_far_field_agree() {
        let (c, m) = table1(95.0);
        let cfg = ExplicitConfig::new(200);
        let a = price_obes(&c, &m, &cfg, &CutoffConfig::default()).unwrap();
        let b = price_mefd(&c, &m, &cfg).unwrap();
        assert!((a.value - b.value).abs() < 1e-3);
        assert_eq!(b.boundary_mode, BoundaryMode::Approximate { s_max: 390.0 });
    }

    #[test]
    fn narrow_far_field_does_not_converge() {
        let (c, m) = table1(95.0);
        let r = price_mefd(&c, &m, &ExplicitConfig::new(1000).with_s_max_rule(SmaxRule::TwoS0)).unwrap();
        assert!(r.value - 5.9968 > 0.5, "{}", r.value);
    }

    #[test]
    fn small_lambda_is_rejected() {
        let (c, m) = table1(95.0);
        let r = price_obes(
            &c,
            &m,
            &ExplicitConfig::new(100).with_lambda(0.9),
            &CutoffConfig::default(),
        );
        assert!(matches!(r, Err(PricingError::Unstable(_))));
    }

    #[test]
    fn obes_handles_up_and_out() {
        let c = BarrierContract::up_and_out(100.0, 100.0, 110.0, 0.5);
        let m = MarketParams::new(0.10, 0.02, 0.20);
        let exact = analytic::closed_form_price(&c, &m).unwrap();
        let r = price_obes(&c, &m, &ExplicitConfig::new(2000), &CutoffConfig::default()).unwrap();
        assert!((r.value - exact).abs() < 2e-3, "{} vs {exact}", r.value);
    }

    #[test]
    fn habis_is_less_accurate_than_hobis_on_a_small_mesh() {
        let c = BarrierContract::down_and_out(225.953, 150.0, 180.0, 0.25);
        let m = MarketParams::new(0.05, 0.0, 0.20);
        let exact = analytic::closed_form_price(&c, &m).unwrap();
        let h = crate::pde_engine::price_continuous(&c, &m, 100, 100, ThetaPolicy::HighOrder, &CutoffConfig::default())
            .unwrap();
        let a = price_habis(&c, &m, 100, 100, SmaxRule::TwoS0Plus200).unwrap();
        assert!((h.value - exact).abs() < (a.value - exact).abs());
    }

    #[test]
    fn habis_approaches_hobis_on_a_fine_mesh() {
        let (c, m) = table1(95.0);
        let a = price_habis(&c, &m, 800, 800, SmaxRule::TwoS0Plus200).unwrap();
        assert!((a.value - 5.9968).abs() < 1e-3, "{}", a.value);
    }

    #[test]
    fn error_profile_orders_the_schemes() {
        let c = BarrierContract::down_and_out(100.0, 100.0, 90.0, 0.5);
        let m = MarketParams::new(0.10, 0.0, 0.20);
        let cfg = CutoffConfig::default();
        let h = error_profile(&c, &m, 40, 40, ThetaPolicy::HighOrder, &cfg).unwrap();
        let cn = error_profile(&c, &m, 40, 40, ThetaPolicy::CrankNicolson, &cfg).unwrap();
        let fi = error_profile(&c, &m, 40, 40, ThetaPolicy::FullyImplicit, &cfg).unwrap();
        assert_eq!(h.points.len(), 41);
        assert!(
            h.max_abs < cn.max_abs && cn.max_abs < fi.max_abs,
            "{} {} {}",
            h.max_abs,
            cn.max_abs,
            fi.max_abs
        );
    }
}
