//! Barriers applied only on monitoring dates.
//!
//! Between dates the price diffuses freely on a domain that extends past
//! the barrier; on each date the nodes beyond the barrier are replaced by
//! the rebate. Barriers sit midway between nodes so the knock-out region is
//! a clean set of nodes.

use std::time::Instant;

use crate::analytic;
use crate::boundary::{self, CutoffConfig, DoubleClass};
use crate::contracts::{BarrierContract, BarrierGeometry, MarketParams, MonitoringPolicy};
use crate::error::{PricingError, Result};
use crate::pde_engine::{
    build_grid, extract_price, march, BarrierPlacement, BoundaryMode, EdgeCondition, Grid, PriceReport, ThetaPolicy,
};
use crate::transform::{to_heat, TransformedProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct MonitoringSchedule {
    pub n: usize,
    /// Monitoring times in years, `T i / N` for `i = 1..=N`.
    pub dates: Vec<f64>,
    /// Time steps per monitoring interval.
    pub rho: usize,
    pub total_steps: usize,
}

pub fn schedule(policy: MonitoringPolicy, expiry: f64, rho: usize) -> Result<MonitoringSchedule> {
    let MonitoringPolicy::Discrete(freq) = policy else {
        return Err(PricingError::Domain(
            "continuous monitoring has no date schedule".into(),
        ));
    };
    if !(expiry > 0.0) {
        return Err(PricingError::Domain(format!("expiry must be positive, got {expiry}")));
    }
    if rho < 1 {
        return Err(PricingError::Domain("rho must be at least 1".into()));
    }
    let n = freq.date_count(expiry);
    if n < 1 {
        return Err(PricingError::Domain(format!(
            "{policy} gives no monitoring date before T = {expiry}"
        )));
    }
    let n = n as usize;
    Ok(MonitoringSchedule {
        n,
        dates: (1..=n).map(|i| expiry * i as f64 / n as f64).collect(),
        rho,
        total_steps: n * rho,
    })
}

/// Steps per interval giving at least `l_target` levels in total.
pub fn default_rho(n: usize, l_target: usize) -> usize {
    l_target.div_ceil(n.max(1)).max(1)
}

/// Nodes that are knocked out on a monitoring date.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KnockoutRegion {
    Below(f64),
    Above(f64),
    Outside(f64, f64),
}

impl KnockoutRegion {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            KnockoutRegion::Below(b) => x < b,
            KnockoutRegion::Above(b) => x > b,
            KnockoutRegion::Outside(lo, hi) => x < lo || x > hi,
        }
    }
}

/// Replaces knocked-out nodes by the rebate in heat variables at `tau`.
pub fn project_knockout(
    u: &mut [f64],
    grid: &Grid,
    region: KnockoutRegion,
    rebate: f64,
    problem: &TransformedProblem,
    tau: f64,
) {
    for (j, v) in u.iter_mut().enumerate() {
        let x = grid.x(j);
        if region.contains(x) {
            *v = problem.barrier_boundary_value(x, tau, rebate);
        }
    }
}

struct DiscreteLayout {
    lo: f64,
    hi: f64,
    lower: EdgeCondition,
    upper: EdgeCondition,
    region: KnockoutRegion,
    barriers: Vec<f64>,
}

/// Domain for discrete monitoring, or `None` when the barrier is worthless
/// even under continuous monitoring.
fn discrete_layout(
    contract: &BarrierContract,
    market: &MarketParams,
    cfg: &CutoffConfig,
) -> Result<Option<(BarrierContract, DiscreteLayout)>> {
    let k = contract.strike;
    let x0 = (contract.spot / k).ln();
    let spread = cfg.delta() * market.sigma * contract.expiry.sqrt();
    let rb = EdgeCondition::Rebate(contract.rebate);
    let layout = match contract.geometry {
        BarrierGeometry::DownAndOut { barrier } => {
            let cut = boundary::cutoff(contract, market, cfg)?;
            if boundary::barrier_worthless(contract.spot, &cut) {
                return Ok(None);
            }
            let xb = (barrier / k).ln();
            DiscreteLayout {
                lo: xb.min(x0) - spread,
                hi: cut.x_m,
                lower: rb,
                upper: EdgeCondition::Vanilla,
                region: KnockoutRegion::Below(xb),
                barriers: vec![xb],
            }
        }
        BarrierGeometry::UpAndOut { barrier } => {
            let cut = boundary::cutoff(contract, market, cfg)?;
            if boundary::barrier_worthless(contract.spot, &cut) {
                return Ok(None);
            }
            let xb = (barrier / k).ln();
            DiscreteLayout {
                lo: cut.x_m,
                hi: xb.max(x0) + spread,
                lower: EdgeCondition::Vanilla,
                upper: rb,
                region: KnockoutRegion::Above(xb),
                barriers: vec![xb],
            }
        }
        BarrierGeometry::DoubleKnockOut { lower, upper } => {
            let reduced = match boundary::classify_double(contract, market, cfg)? {
                DoubleClass::BothActive => None,
                DoubleClass::LowerOnly => Some(BarrierGeometry::DownAndOut { barrier: lower }),
                DoubleClass::UpperOnly => Some(BarrierGeometry::UpAndOut { barrier: upper }),
                DoubleClass::NeitherActive => return Ok(None),
            };
            if let Some(geometry) = reduced {
                return discrete_layout(&contract.with_geometry(geometry), market, cfg);
            }
            let (xl, xu) = ((lower / k).ln(), (upper / k).ln());
            DiscreteLayout {
                lo: xl.min(x0) - spread,
                hi: xu.max(x0) + spread,
                lower: rb,
                upper: rb,
                region: KnockoutRegion::Outside(xl, xu),
                barriers: vec![xl, xu],
            }
        }
    };
    Ok(Some((*contract, layout)))
}

/// Steps per monitoring interval that bring the mesh ratio close to `beta`
/// on an `m`-interval grid. Returns 1 when the barrier is worthless.
pub fn rho_for_beta(
    contract: &BarrierContract,
    market: &MarketParams,
    m: usize,
    beta: f64,
    cfg: &CutoffConfig,
) -> Result<usize> {
    if !(beta > 0.0) || m == 0 {
        return Err(PricingError::Domain(format!(
            "need beta > 0 and m >= 1, got {beta} and {m}"
        )));
    }
    let plan = schedule(contract.monitoring, contract.expiry, 1)?;
    let Some((_, layout)) = discrete_layout(contract, market, cfg)? else {
        return Ok(1);
    };
    let dx = (layout.hi - layout.lo) / m as f64;
    let interval = 0.5 * market.sigma * market.sigma * contract.expiry / plan.n as f64;
    Ok(((interval / (beta * dx * dx)).ceil() as usize).max(1))
}

/// Prices a discretely monitored knock-out call with about `m` space
/// intervals and `rho` time steps per monitoring interval.
pub fn price_discrete(
    contract: &BarrierContract,
    market: &MarketParams,
    m: usize,
    rho: usize,
    policy: ThetaPolicy,
    cfg: &CutoffConfig,
) -> Result<PriceReport> {
    let started = Instant::now();
    let plan = schedule(contract.monitoring, contract.expiry, rho)?;
    to_heat(contract, market)?;
    let Some((reduced, layout)) = discrete_layout(contract, market, cfg)? else {
        let value = analytic::vanilla_price(contract, market)?;
        return Ok(PriceReport::short_circuit(value, (m, plan.total_steps), started));
    };
    let problem = TransformedProblem::new(&reduced, market);
    let x0 = problem.x_of(contract.spot);
    let placement = BarrierPlacement::Midway {
        barriers: layout.barriers.clone(),
    };
    let grid = build_grid(
        (layout.lo, layout.hi),
        problem.tau_max,
        m,
        plan.total_steps,
        x0,
        &placement,
        policy,
    )?;
    let theta = policy.theta(grid.beta)?;

    let rebate = contract.rebate;
    let (x_lo, x_hi) = (grid.x_lo, grid.x_hi);
    let mut u0: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| problem.heat_initial_condition(x))
        .collect();
    // The last monitoring date is expiry itself.
    project_knockout(&mut u0, &grid, layout.region, rebate, &problem, 0.0);
    u0[0] = layout.lower.heat_value(&problem, x_lo, 0.0);
    u0[grid.m] = layout.upper.heat_value(&problem, x_hi, 0.0);
    let (lower, upper) = (layout.lower, layout.upper);
    let edges = |tau: f64| {
        (
            lower.heat_value(&problem, x_lo, tau),
            upper.heat_value(&problem, x_hi, tau),
        )
    };
    let total = grid.l;
    let u = march(&grid, theta, u0, edges, |n, tau, u| {
        if n % rho == 0 && n < total {
            project_knockout(u, &grid, layout.region, rebate, &problem, tau);
        }
    })?;
    let (value, extraction) = extract_price(&u, &grid, x0, &problem)?;
    Ok(PriceReport {
        value,
        mesh: (grid.m, grid.l),
        wall_time: started.elapsed().as_secs_f64(),
        boundary_mode: BoundaryMode::Optimal,
        extraction,
        time_steps: grid.l,
    })
}
