//! Theta-scheme solver for the heat equation on a truncated log-price domain.
//!
//! The high-order policy ties the implicitness weight to the mesh ratio,
//! `theta = 1/2 - 1/(12 beta)`, which cancels the leading spatial truncation
//! term and makes the two-level scheme fourth order in space.

use std::time::Instant;

use crate::analytic;
use crate::boundary::{self, CutoffConfig, DoubleClass};
use crate::contracts::{BarrierContract, BarrierGeometry, MarketParams};
use crate::error::{PricingError, Result};
use crate::transform::{to_heat, TransformedProblem};

/// Pivots smaller than this in magnitude abort the Thomas sweep.
pub const PIVOT_TOLERANCE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaPolicy {
    /// `theta = 1/2 - 1/(12 beta)`; needs `beta >= 1/6`.
    HighOrder,
    CrankNicolson,
    FullyImplicit,
    Fixed(f64),
}

impl ThetaPolicy {
    pub fn theta(&self, beta: f64) -> Result<f64> {
        match *self {
            ThetaPolicy::HighOrder => theta_from_beta(beta),
            ThetaPolicy::CrankNicolson => Ok(0.5),
            ThetaPolicy::FullyImplicit => Ok(1.0),
            ThetaPolicy::Fixed(theta) if (0.0..=1.0).contains(&theta) => Ok(theta),
            ThetaPolicy::Fixed(theta) => Err(PricingError::Domain(format!("theta must lie in [0, 1], got {theta}"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ThetaPolicy::HighOrder => "high-order".into(),
            ThetaPolicy::CrankNicolson => "crank-nicolson".into(),
            ThetaPolicy::FullyImplicit => "fully-implicit".into(),
            ThetaPolicy::Fixed(t) => format!("theta={t}"),
        }
    }
}

pub fn theta_from_beta(beta: f64) -> Result<f64> {
    if !(beta >= 1.0 / 6.0) {
        return Err(PricingError::Inadmissible { beta });
    }
    Ok((0.5 - 1.0 / (12.0 * beta)).max(0.0))
}

/// Default number of time levels for `m` space intervals: `L = M`, or
/// `L = ceil(1.5 M)` at high volatility where `L = M` can produce small
/// negative intermediate values.
pub fn default_time_steps(m: usize, sigma: f64) -> usize {
    if sigma >= 0.35 {
        (1.5 * m as f64).ceil() as usize
    } else {
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub m: usize,
    pub l: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub dx: f64,
    pub tau_max: f64,
    pub dtau: f64,
    pub beta: f64,
    /// Node index holding `x0`, when the grid was built to contain it.
    pub aligned_index: Option<usize>,
}

impl Grid {
    pub fn new(x_lo: f64, x_hi: f64, tau_max: f64, m: usize, l: usize) -> Result<Self> {
        Self::with_spacing(x_lo, (x_hi - x_lo) / m as f64, tau_max, m, l)
    }

    fn with_spacing(x_lo: f64, dx: f64, tau_max: f64, m: usize, l: usize) -> Result<Self> {
        if m < 2 || l < 1 {
            return Err(PricingError::Geometry(format!("mesh {m}x{l} needs M >= 2 and L >= 1")));
        }
        if !(dx > 0.0 && dx.is_finite()) || !(tau_max > 0.0) {
            return Err(PricingError::Geometry(format!(
                "degenerate grid: dx = {dx}, tau_max = {tau_max}"
            )));
        }
        let dtau = tau_max / l as f64;
        Ok(Self {
            m,
            l,
            x_lo,
            x_hi: x_lo + m as f64 * dx,
            dx,
            tau_max,
            dtau,
            beta: dtau / (dx * dx),
            aligned_index: None,
        })
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_lo + j as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.m).map(|j| self.x(j)).collect()
    }

    pub fn tau(&self, n: usize) -> f64 {
        n as f64 * self.dtau
    }

    /// Marks `x0` as aligned if it falls on a node to rounding accuracy.
    fn detect_alignment(mut self, x0: f64) -> Self {
        let t = (x0 - self.x_lo) / self.dx;
        let j = t.round();
        if (t - j).abs() < 1e-9 && j >= 0.0 && j <= self.m as f64 {
            self.aligned_index = Some(j as usize);
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BarrierPlacement {
    /// Barriers are domain edges. The `adjustable` edge (a probability
    /// cutoff) may be pushed outward by less than `dx` to put `x0` on a node.
    OnEdges { adjustable: Option<Edge> },
    /// Every barrier sits midway between two nodes; edges snap outward.
    Midway { barriers: Vec<f64> },
}

/// Builds the space-time mesh. For `Midway` placement `m` is a target and
/// the returned grid may have a slightly different number of intervals.
pub fn build_grid(
    domain: (f64, f64),
    tau_max: f64,
    m: usize,
    l: usize,
    x0: f64,
    placement: &BarrierPlacement,
    policy: ThetaPolicy,
) -> Result<Grid> {
    let (lo, hi) = domain;
    if !(lo < hi) {
        return Err(PricingError::Geometry(format!("empty domain [{lo}, {hi}]")));
    }
    if x0 < lo - 1e-12 || x0 > hi + 1e-12 {
        return Err(PricingError::Extrapolation { x0, lo, hi });
    }
    let grid = match placement {
        BarrierPlacement::OnEdges { adjustable } => {
            let aligned = adjustable.and_then(|edge| aligned_edge_grid(lo, hi, tau_max, m, l, x0, edge));
            match aligned {
                Some(g) if policy.theta(g.beta).is_ok() => g,
                _ => Grid::new(lo, hi, tau_max, m, l)?.detect_alignment(x0),
            }
        }
        BarrierPlacement::Midway { barriers } => midway_grid(lo, hi, tau_max, m, l, x0, barriers)?,
    };
    policy.theta(grid.beta)?;
    Ok(grid)
}

/// Moves `edge` outward so that `x0` becomes a node, keeping `M`.
fn aligned_edge_grid(lo: f64, hi: f64, tau_max: f64, m: usize, l: usize, x0: f64, edge: Edge) -> Option<Grid> {
    let width = hi - lo;
    let d = match edge {
        Edge::Upper => x0 - lo,
        Edge::Lower => hi - x0,
    };
    if !(d > 0.0) {
        return None;
    }
    let mf = m as f64;
    let j0 = (mf * d / width).floor();
    // M dx >= width and (M - 1) dx < width, so the edge moves by less than dx.
    if j0 < 1.0 || j0 <= (mf - 1.0) * d / width {
        return None;
    }
    let dx = d / j0;
    let j0 = j0 as usize;
    let (x_lo, index) = match edge {
        Edge::Upper => (lo, j0),
        Edge::Lower => (hi - mf * dx, m - j0),
    };
    let mut grid = Grid::with_spacing(x_lo, dx, tau_max, m, l).ok()?;
    if edge == Edge::Lower {
        grid.x_hi = hi;
    }
    grid.aligned_index = Some(index);
    Some(grid)
}

fn midway_grid(lo: f64, hi: f64, tau_max: f64, m: usize, l: usize, x0: f64, barriers: &[f64]) -> Result<Grid> {
    let dx0 = (hi - lo) / m as f64;
    let (anchor, dx) = match barriers {
        [b] => {
            // Largest spacing not above dx0 with x0 = b + (n + 1/2) dx.
            let s = ((x0 - b) / dx0).abs();
            let half = (s - 0.5).ceil().max(0.0) + 0.5;
            let candidate = (x0 - b).abs() / half;
            if x0 != *b && candidate >= 0.5 * dx0 {
                (*b, candidate)
            } else {
                (*b, dx0)
            }
        }
        [bl, bu] => {
            if !(bu > bl) {
                return Err(PricingError::Geometry("double barrier needs lower < upper".into()));
            }
            let cells = ((bu - bl) / dx0).round().max(1.0);
            (*bl, (bu - bl) / cells)
        }
        _ => {
            return Err(PricingError::Geometry(
                "midway placement takes one or two barriers".into(),
            ))
        }
    };
    // Nodes are anchor + (i + 1/2) dx.
    let i_lo = ((lo - anchor) / dx - 0.5 + 1e-9).floor();
    let i_hi = ((hi - anchor) / dx - 0.5 - 1e-9).ceil();
    let m_eff = (i_hi - i_lo) as usize;
    let x_lo = anchor + (i_lo + 0.5) * dx;
    Ok(Grid::with_spacing(x_lo, dx, tau_max, m_eff, l)?.detect_alignment(x0))
}

/// General tridiagonal matrix. `sub[0]` and `sup[n-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Self {
        assert!(
            sub.len() == diag.len() && sup.len() == diag.len(),
            "band lengths differ"
        );
        Self { sub, diag, sup }
    }

    pub fn constant(n: usize, off: f64, diag: f64) -> Self {
        Self::new(vec![off; n], vec![diag; n], vec![off; n])
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let lower = if i > 0 { self.sub[i].abs() } else { 0.0 };
            let upper = if i + 1 < n { self.sup[i].abs() } else { 0.0 };
            self.diag[i].abs() > lower + upper
        })
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Forward-elimination coefficients of the Thomas algorithm, reusable
    /// across right-hand sides.
    pub fn factor(&self) -> Result<Factored> {
        let n = self.len();
        let mut upper = vec![0.0; n];
        let mut pivot = vec![0.0; n];
        for i in 0..n {
            let p = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.sub[i] * upper[i - 1]
            };
            if !(p.abs() >= PIVOT_TOLERANCE) {
                return Err(PricingError::Singular { row: i, pivot: p });
            }
            pivot[i] = p;
            upper[i] = if i + 1 < n { self.sup[i] / p } else { 0.0 };
        }
        Ok(Factored {
            sub: self.sub.clone(),
            upper,
            pivot,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Factored {
    sub: Vec<f64>,
    upper: Vec<f64>,
    pivot: Vec<f64>,
}

impl Factored {
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.pivot.len();
        if n == 0 {
            return;
        }
        rhs[0] /= self.pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.sub[i] * rhs[i - 1]) / self.pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }
}

/// Gaussian elimination without pivoting on a tridiagonal system.
pub fn thomas_solve(system: &Tridiagonal, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != system.len() {
        return Err(PricingError::Geometry(format!(
            "rhs has {} entries for a system of size {}",
            rhs.len(),
            system.len()
        )));
    }
    let factored = system.factor()?;
    let mut x = rhs.to_vec();
    factored.solve_in_place(&mut x);
    Ok(x)
}

/// One theta-scheme step on the `M - 1` interior nodes:
/// `(I - theta beta D) U^{n+1} = (I + (1 - theta) beta D) U^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub theta: f64,
    pub beta: f64,
    pub implicit: Tridiagonal,
    pub explicit_diag: f64,
    pub explicit_off: f64,
}

pub fn assemble(theta: f64, beta: f64, m: usize) -> TridiagonalSystem {
    let n = m.saturating_sub(1);
    let implicit = Tridiagonal::constant(n, -beta * theta, 1.0 + 2.0 * beta * theta);
    debug_assert!(theta == 0.0 || implicit.is_strictly_diagonally_dominant());
    TridiagonalSystem {
        theta,
        beta,
        implicit,
        explicit_diag: 1.0 - 2.0 * beta * (1.0 - theta),
        explicit_off: beta * (1.0 - theta),
    }
}

/// Advances `u_n` (all `M + 1` nodes) by one level. Edge values for the new
/// level are imposed exactly and their coupling moved to the right-hand side.
pub fn step(u_n: &[f64], system: &TridiagonalSystem, next_edges: (f64, f64)) -> Result<Vec<f64>> {
    let factored = system.implicit.factor()?;
    let mut out = vec![0.0; u_n.len()];
    let mut rhs = vec![0.0; system.implicit.len()];
    advance(u_n, &mut out, &mut rhs, system, &factored, next_edges);
    Ok(out)
}

fn advance(
    u_n: &[f64],
    out: &mut [f64],
    rhs: &mut [f64],
    system: &TridiagonalSystem,
    factored: &Factored,
    (left, right): (f64, f64),
) {
    let m = u_n.len() - 1;
    let (ed, eo) = (system.explicit_diag, system.explicit_off);
    for j in 1..m {
        rhs[j - 1] = ed * u_n[j] + eo * (u_n[j - 1] + u_n[j + 1]);
    }
    let coupling = system.beta * system.theta;
    rhs[0] += coupling * left;
    rhs[m - 2] += coupling * right;
    factored.solve_in_place(rhs);
    out[0] = left;
    out[1..m].copy_from_slice(rhs);
    out[m] = right;
}

/// Runs all `L` levels from `u0`. `edges(tau)` supplies the two edge values
/// at heat time `tau`; `after_level(n, tau_n, u)` may modify the field after
/// each level (discrete monitoring uses it for knock-out projection).
pub fn march(
    grid: &Grid,
    theta: f64,
    mut u: Vec<f64>,
    edges: impl Fn(f64) -> (f64, f64),
    mut after_level: impl FnMut(usize, f64, &mut [f64]),
) -> Result<Vec<f64>> {
    if u.len() != grid.m + 1 {
        return Err(PricingError::Geometry(format!(
            "field has {} nodes, grid has {}",
            u.len(),
            grid.m + 1
        )));
    }
    let system = assemble(theta, grid.beta, grid.m);
    let factored = system.implicit.factor()?;
    let mut next = vec![0.0; u.len()];
    let mut rhs = vec![0.0; grid.m - 1];
    for n in 1..=grid.l {
        let tau = grid.tau(n);
        advance(&u, &mut next, &mut rhs, &system, &factored, edges(tau));
        std::mem::swap(&mut u, &mut next);
        after_level(n, tau, &mut u);
    }
    Ok(u)
}

/// Data imposed on a domain edge, in price terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeCondition {
    /// Knock-out barrier paying `rebate` at the hit.
    Rebate(f64),
    /// Exact vanilla call value (barrier worthless beyond this edge).
    Vanilla,
    /// Far-field asymptote `f ~ S`.
    Asymptotic,
}

impl EdgeCondition {
    pub fn heat_value(&self, problem: &TransformedProblem, x: f64, tau: f64) -> f64 {
        match *self {
            EdgeCondition::Rebate(rb) => problem.barrier_boundary_value(x, tau, rb),
            EdgeCondition::Vanilla => problem.vanilla_boundary_value(x, tau),
            EdgeCondition::Asymptotic => problem.asymptotic_boundary_value(x, tau),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryMode {
    Optimal,
    Approximate { s_max: f64 },
    WorthlessBarrier,
}

impl std::fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryMode::Optimal => write!(f, "optimal"),
            BoundaryMode::Approximate { s_max } => write!(f, "approximate(S_max={s_max})"),
            BoundaryMode::WorthlessBarrier => write!(f, "worthless-barrier short-circuit"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extraction {
    Aligned,
    Interpolated,
    ShortCircuit,
}

impl std::fmt::Display for Extraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Extraction::Aligned => "aligned",
            Extraction::Interpolated => "interpolated",
            Extraction::ShortCircuit => "short-circuit",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceReport {
    pub value: f64,
    /// Space intervals and time levels actually used.
    pub mesh: (usize, usize),
    /// Seconds spent in the numerical pipeline.
    pub wall_time: f64,
    pub boundary_mode: BoundaryMode,
    pub extraction: Extraction,
    /// Number of time levels stepped; zero for a short circuit.
    pub time_steps: usize,
}

impl PriceReport {
    pub fn short_circuit(value: f64, mesh: (usize, usize), started: Instant) -> Self {
        Self {
            value,
            mesh,
            wall_time: started.elapsed().as_secs_f64(),
            boundary_mode: BoundaryMode::WorthlessBarrier,
            extraction: Extraction::ShortCircuit,
            time_steps: 0,
        }
    }
}

/// Lagrange interpolation through (up to) four nodes around `x`.
fn interpolate(grid: &Grid, u: &[f64], x: f64) -> f64 {
    let count = 4.min(grid.m + 1);
    let t = ((x - grid.x_lo) / grid.dx).floor() as isize;
    let first = (t - 1).clamp(0, (grid.m + 1 - count) as isize) as usize;
    let mut acc = 0.0;
    for i in first..first + count {
        let xi = grid.x(i);
        let mut w = 1.0;
        for k in first..first + count {
            if k != i {
                w *= (x - grid.x(k)) / (xi - grid.x(k));
            }
        }
        acc += w * u[i];
    }
    acc
}

/// Price at `x0` from the heat field at `tau_max`.
pub fn extract_price(u: &[f64], grid: &Grid, x0: f64, problem: &TransformedProblem) -> Result<(f64, Extraction)> {
    if x0 < grid.x_lo - 1e-12 || x0 > grid.x_hi + 1e-12 {
        return Err(PricingError::Extrapolation {
            x0,
            lo: grid.x_lo,
            hi: grid.x_hi,
        });
    }
    let tau = grid.tau_max;
    match grid.aligned_index {
        Some(j) => Ok((problem.from_heat(u[j], grid.x(j), tau), Extraction::Aligned)),
        None => Ok((
            problem.from_heat(interpolate(grid, u, x0), x0, tau),
            Extraction::Interpolated,
        )),
    }
}

/// Heat field at `tau_max` over a whole grid.
#[derive(Debug, Clone)]
pub struct HeatField {
    pub grid: Grid,
    pub problem: TransformedProblem,
    pub u: Vec<f64>,
}

impl HeatField {
    /// `(S_j, f_j)` for every node.
    pub fn prices(&self) -> Vec<(f64, f64)> {
        let tau = self.grid.tau_max;
        (0..=self.grid.m)
            .map(|j| {
                let x = self.grid.x(j);
                (self.problem.s_of(x), self.problem.from_heat(self.u[j], x, tau))
            })
            .collect()
    }
}

/// Steps the transformed payoff on `grid` with the given edge data.
pub fn solve_field(
    problem: &TransformedProblem,
    grid: Grid,
    policy: ThetaPolicy,
    lower: EdgeCondition,
    upper: EdgeCondition,
) -> Result<HeatField> {
    let theta = policy.theta(grid.beta)?;
    let (x_lo, x_hi) = (grid.x_lo, grid.x_hi);
    let mut u0: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| problem.heat_initial_condition(x))
        .collect();
    u0[0] = lower.heat_value(problem, x_lo, 0.0);
    u0[grid.m] = upper.heat_value(problem, x_hi, 0.0);
    let edges = |tau: f64| {
        (
            lower.heat_value(problem, x_lo, tau),
            upper.heat_value(problem, x_hi, tau),
        )
    };
    let u = march(&grid, theta, u0, edges, |_, _, _| {})?;
    Ok(HeatField {
        grid,
        problem: *problem,
        u,
    })
}

/// How a continuously monitored contract maps onto a PDE domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContinuousLayout {
    /// The barrier cannot matter from the current spot.
    Worthless,
    Domain {
        lo: f64,
        hi: f64,
        lower: EdgeCondition,
        upper: EdgeCondition,
        adjustable: Option<Edge>,
    },
}

/// Domain, edge data and alignment freedom for continuous monitoring,
/// after dropping barriers that are worthless from the current spot.
pub fn continuous_layout(
    contract: &BarrierContract,
    market: &MarketParams,
    cfg: &CutoffConfig,
) -> Result<(BarrierContract, ContinuousLayout)> {
    let k = contract.strike;
    let rb = EdgeCondition::Rebate(contract.rebate);
    match contract.geometry {
        BarrierGeometry::DownAndOut { barrier } => {
            let cut = boundary::cutoff(contract, market, cfg)?;
            if boundary::barrier_worthless(contract.spot, &cut) {
                return Ok((*contract, ContinuousLayout::Worthless));
            }
            Ok((
                *contract,
                ContinuousLayout::Domain {
                    lo: (barrier / k).ln(),
                    hi: cut.x_m,
                    lower: rb,
                    upper: EdgeCondition::Vanilla,
                    adjustable: Some(Edge::Upper),
                },
            ))
        }
        BarrierGeometry::UpAndOut { barrier } => {
            let cut = boundary::cutoff(contract, market, cfg)?;
            if boundary::barrier_worthless(contract.spot, &cut) {
                return Ok((*contract, ContinuousLayout::Worthless));
            }
            Ok((
                *contract,
                ContinuousLayout::Domain {
                    lo: cut.x_m,
                    hi: (barrier / k).ln(),
                    lower: EdgeCondition::Vanilla,
                    upper: rb,
                    adjustable: Some(Edge::Lower),
                },
            ))
        }
        BarrierGeometry::DoubleKnockOut { lower, upper } => match boundary::classify_double(contract, market, cfg)? {
            DoubleClass::BothActive => Ok((
                *contract,
                ContinuousLayout::Domain {
                    lo: (lower / k).ln(),
                    hi: (upper / k).ln(),
                    lower: rb,
                    upper: rb,
                    adjustable: None,
                },
            )),
            DoubleClass::LowerOnly => continuous_layout(
                &contract.with_geometry(BarrierGeometry::DownAndOut { barrier: lower }),
                market,
                cfg,
            ),
            DoubleClass::UpperOnly => continuous_layout(
                &contract.with_geometry(BarrierGeometry::UpAndOut { barrier: upper }),
                market,
                cfg,
            ),
            DoubleClass::NeitherActive => Ok((*contract, ContinuousLayout::Worthless)),
        },
    }
}

/// Solves the continuous-monitoring problem over the whole grid. With
/// `align` the adjustable edge is moved so the spot lands on a node.
pub fn continuous_field(
    contract: &BarrierContract,
    market: &MarketParams,
    m: usize,
    l: usize,
    policy: ThetaPolicy,
    cfg: &CutoffConfig,
    align: bool,
) -> Result<Option<HeatField>> {
    let problem = to_heat(contract, market)?;
    let (reduced, layout) = continuous_layout(contract, market, cfg)?;
    let ContinuousLayout::Domain {
        lo,
        hi,
        lower,
        upper,
        adjustable,
    } = layout
    else {
        return Ok(None);
    };
    let problem = TransformedProblem::new(&reduced, &problem.market);
    let x0 = problem.x_of(contract.spot);
    let placement = BarrierPlacement::OnEdges {
        adjustable: if align { adjustable } else { None },
    };
    let grid = build_grid((lo, hi), problem.tau_max, m, l, x0.clamp(lo, hi), &placement, policy)?;
    solve_field(&problem, grid, policy, lower, upper).map(Some)
}

/// Prices a continuously monitored knock-out call on an `m x l` mesh.
pub fn price_continuous(
    contract: &BarrierContract,
    market: &MarketParams,
    m: usize,
    l: usize,
    policy: ThetaPolicy,
    cfg: &CutoffConfig,
) -> Result<PriceReport> {
    let started = Instant::now();
    if !contract.monitoring.is_continuous() {
        return Err(PricingError::Domain(
            "price_continuous needs continuous monitoring".into(),
        ));
    }
    match continuous_field(contract, market, m, l, policy, cfg, true)? {
        None => {
            let value = analytic::vanilla_price(contract, market)?;
            Ok(PriceReport::short_circuit(value, (m, l), started))
        }
        Some(field) => {
            let x0 = field.problem.x_of(contract.spot);
            let (value, extraction) = extract_price(&field.u, &field.grid, x0, &field.problem)?;
            Ok(PriceReport {
                value,
                mesh: (field.grid.m, field.grid.l),
                wall_time: started.elapsed().as_secs_f64(),
                boundary_mode: BoundaryMode::Optimal,
                extraction,
                time_steps: field.grid.l,
            })
        }
    }
}

/// Max nodal error of the scheme on `u_tau = u_xx`, `u(x, 0) = sin(pi x)`
/// on `[0, 1]` with zero edges, against the exact `e^{-pi^2 tau} sin(pi x)`.
pub fn heat_kernel_error(m: usize, l: usize, tau: f64, policy: ThetaPolicy) -> Result<f64> {
    let grid = Grid::new(0.0, 1.0, tau, m, l)?;
    let theta = policy.theta(grid.beta)?;
    let pi = std::f64::consts::PI;
    let u0 = grid.nodes().iter().map(|x| (pi * x).sin()).collect();
    let u = march(&grid, theta, u0, |_| (0.0, 0.0), |_, _, _| {})?;
    let decay = (-pi * pi * tau).exp();
    Ok(grid
        .nodes()
        .iter()
        .zip(&u)
        .fold(0.0f64, |e, (x, v)| e.max((v - decay * (pi * x).sin()).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn dense_solve(a: &Tridiagonal, rhs: &[f64]) -> Vec<f64> {
        let n = a.len();
        let mut m = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            m[i][i] = a.diag[i];
            if i > 0 {
                m[i][i - 1] = a.sub[i];
            }
            if i + 1 < n {
                m[i][i + 1] = a.sup[i];
            }
            m[i][n] = rhs[i];
        }
        for col in 0..n {
            let p = (col..n)
                .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
                .unwrap();
            m.swap(col, p);
            for row in col + 1..n {
                let f = m[row][col] / m[col][col];
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
            x[i] = (m[i][n] - s) / m[i][i];
        }
        x
    }

    #[test]
    fn theta_endpoints() {
        assert_eq!(theta_from_beta(1.0 / 6.0).unwrap(), 0.0);
        assert!((theta_from_beta(1.0 / 3.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((theta_from_beta(1e12).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(theta_from_beta(0.1), Err(PricingError::Inadmissible { .. })));
        assert!(ThetaPolicy::Fixed(1.5).theta(1.0).is_err());
    }

    #[test]
    fn assembled_coefficients() {
        let s = assemble(0.25, 1.0 / 3.0, 6);
        assert_eq!(s.implicit.len(), 5);
        assert!((s.implicit.diag[0] - 7.0 / 6.0).abs() < 1e-15);
        assert!((s.implicit.sub[2] + 1.0 / 12.0).abs() < 1e-15);
        assert!((s.explicit_diag - 0.5).abs() < 1e-15);
        assert!((s.explicit_off - 0.25).abs() < 1e-15);
        let explicit = assemble(0.0, 0.4, 6);
        assert!(explicit.implicit.diag.iter().all(|&d| d == 1.0));
        assert!(explicit.implicit.sub.iter().all(|&d| d == 0.0));
        let implicit = assemble(1.0, 0.4, 6);
        assert_eq!((implicit.explicit_diag, implicit.explicit_off), (1.0, 0.0));
    }

    #[test]
    fn thomas_small_cases() {
        let id = Tridiagonal::constant(4, 0.0, 1.0);
        assert_eq!(
            thomas_solve(&id, &[1.0, -2.0, 3.0, 4.0]).unwrap(),
            vec![1.0, -2.0, 3.0, 4.0]
        );
        let lap = Tridiagonal::constant(5, -1.0, 2.0);
        let x = thomas_solve(&lap, &[1.0; 5]).unwrap();
        for (a, b) in x.iter().zip([2.5, 4.0, 4.5, 4.0, 2.5]) {
            assert!((a - b).abs() < 1e-13);
        }
        let singular = Tridiagonal::new(vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, 0.0]);
        assert!(matches!(
            thomas_solve(&singular, &[1.0, 1.0]),
            Err(PricingError::Singular { row: 1, .. })
        ));
    }

    #[test]
    fn thomas_matches_dense_elimination() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(1..=200);
            let sub: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sup: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let diag: Vec<f64> = (0..n)
                .map(|i| (sub[i].abs() + sup[i].abs() + rng.gen_range(0.01..2.0)) * if rng.gen() { 1.0 } else { -1.0 })
                .collect();
            let a = Tridiagonal::new(sub, diag, sup);
            let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let x = thomas_solve(&a, &rhs).unwrap();
            let y = dense_solve(&a, &rhs);
            let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (p, q) in x.iter().zip(&y) {
                assert!((p - q).abs() <= 1e-11 * scale);
            }
            let norm = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let res = a
                .mul(&x)
                .iter()
                .zip(&rhs)
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            assert!(res <= 1e-12 * norm);
        }
    }

    #[test]
    fn constants_are_preserved() {
        for theta in [0.0, 0.2, 0.5, 1.0] {
            let s = assemble(theta, 0.7, 10);
            let u = step(&[3.0; 11], &s, (3.0, 3.0)).unwrap();
            assert!(u.iter().all(|v| (v - 3.0).abs() < 1e-14));
        }
    }

    #[test]
    fn sine_mode_follows_the_symbol() {
        let m = 16;
        for &(beta, policy) in &[
            (0.4, ThetaPolicy::HighOrder),
            (3.0, ThetaPolicy::HighOrder),
            (1.0, ThetaPolicy::CrankNicolson),
            (1.0, ThetaPolicy::FullyImplicit),
        ] {
            let theta = policy.theta(beta).unwrap();
            let s = (std::f64::consts::PI / (2.0 * m as f64)).sin().powi(2);
            let g = (1.0 - 4.0 * beta * (1.0 - theta) * s) / (1.0 + 4.0 * beta * theta * s);
            let u: Vec<f64> = (0..=m)
                .map(|j| (std::f64::consts::PI * j as f64 / m as f64).sin())
                .collect();
            let next = step(&u, &assemble(theta, beta, m), (0.0, 0.0)).unwrap();
            for j in 1..m {
                assert!((next[j] - g * u[j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn high_order_symbol_is_bounded_for_every_mode() {
        for &beta in &[1.0 / 6.0, 0.25, 0.5, 1.0, 5.0 / 6.0, 2.0, 50.0, 1e4] {
            let theta = theta_from_beta(beta).unwrap();
            for k in 1..200 {
                let s = (std::f64::consts::PI * k as f64 / 400.0).sin().powi(2);
                let g = (1.0 - 4.0 * beta * (1.0 - theta) * s) / (1.0 + 4.0 * beta * theta * s);
                assert!(g.abs() <= 1.0 + 1e-15, "beta={beta} k={k} g={g}");
            }
        }
    }

    #[test]
    fn spatial_order_with_parabolic_refinement() {
        // beta = 1/2 fixed: L = 2 tau M^2.
        let tau = 0.1;
        let errs: Vec<f64> = [8usize, 16, 32]
            .iter()
            .map(|&m| {
                heat_kernel_error(
                    m,
                    (2.0 * tau * (m * m) as f64).round() as usize,
                    tau,
                    ThetaPolicy::HighOrder,
                )
                .unwrap()
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 3.5, "{errs:?}");
        }
        let cn: Vec<f64> = [8usize, 16, 32]
            .iter()
            .map(|&m| {
                heat_kernel_error(
                    m,
                    (2.0 * tau * (m * m) as f64).round() as usize,
                    tau,
                    ThetaPolicy::CrankNicolson,
                )
                .unwrap()
            })
            .collect();
        let order = (cn[1] / cn[2]).log2();
        assert!(order > 1.5 && order <= 2.5, "{order}");
    }

    #[test]
    fn temporal_order_on_a_fine_space_grid() {
        let errs: Vec<f64> = [10usize, 20, 40]
            .iter()
            .map(|&l| heat_kernel_error(400, l, 0.1, ThetaPolicy::HighOrder).unwrap())
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.8, "{errs:?}");
        }
    }

    #[test]
    fn crank_nicolson_matches_fixed_half_bitwise() {
        let c = BarrierContract::down_and_out(95.0, 100.0, 90.0, 1.0);
        let m = MarketParams::new(0.1, 0.0, 0.25);
        let cfg = CutoffConfig::default();
        let a = continuous_field(&c, &m, 40, 40, ThetaPolicy::CrankNicolson, &cfg, true)
            .unwrap()
            .unwrap();
        let b = continuous_field(&c, &m, 40, 40, ThetaPolicy::Fixed(0.5), &cfg, true)
            .unwrap()
            .unwrap();
        assert!(a.u.iter().zip(&b.u).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn alignment_moves_cutoff_edge_by_less_than_dx() {
        let (xb, xm) = ((180.0f64 / 150.0).ln(), (180.0f64 / 150.0).ln() + 0.4125);
        let x0 = (270.0f64 / 150.0).ln();
        let placement = BarrierPlacement::OnEdges {
            adjustable: Some(Edge::Upper),
        };
        let g = build_grid((xb, xm), 0.005, 10, 10, x0, &placement, ThetaPolicy::HighOrder).unwrap();
        let j = g.aligned_index.unwrap();
        assert!((g.x(j) - x0).abs() < 1e-14);
        assert_eq!(g.x_lo, xb);
        assert!(g.x_hi >= xm && g.x_hi - xm < g.dx);

        let placement = BarrierPlacement::OnEdges {
            adjustable: Some(Edge::Lower),
        };
        let g = build_grid((-0.7, 0.1), 0.02, 20, 20, -0.1, &placement, ThetaPolicy::HighOrder).unwrap();
        let j = g.aligned_index.unwrap();
        assert!((g.x(j) + 0.1).abs() < 1e-14);
        assert_eq!(g.x_hi, 0.1);
        assert!(g.x_lo <= -0.7 && -0.7 - g.x_lo < g.dx);
    }

    #[test]
    fn symmetric_midpoint_is_aligned_without_adjustment() {
        let placement = BarrierPlacement::OnEdges { adjustable: None };
        let g = build_grid((-0.2, 0.2), 0.01, 10, 10, 0.0, &placement, ThetaPolicy::HighOrder).unwrap();
        assert_eq!(g.aligned_index, Some(5));
        assert_eq!((g.x_lo, g.x_hi), (-0.2, 0.2));
    }

    #[test]
    fn midway_placement_straddles_the_barrier() {
        let b = -0.1;
        let placement = BarrierPlacement::Midway { barriers: vec![b] };
        let g = build_grid((-0.5, 0.6), 0.01, 100, 100, 0.0, &placement, ThetaPolicy::HighOrder).unwrap();
        let below = ((b - g.x_lo) / g.dx).floor() as usize;
        assert!((b - g.x(below) - 0.5 * g.dx).abs() < 1e-12);
        assert!((g.x(below + 1) - b - 0.5 * g.dx).abs() < 1e-12);
        assert!(g.aligned_index.is_some());
        assert!(g.x_lo <= -0.5 + 1e-12 && g.x_hi >= 0.6 - 1e-12);

        let placement = BarrierPlacement::Midway {
            barriers: vec![-0.05, 0.22],
        };
        let g = build_grid((-0.3, 0.5), 0.01, 80, 80, 0.0, &placement, ThetaPolicy::HighOrder).unwrap();
        for b in [-0.05, 0.22] {
            let t = (b - g.x_lo) / g.dx;
            assert!((t - t.floor() - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn high_order_rejects_inadmissible_mesh() {
        let placement = BarrierPlacement::OnEdges { adjustable: None };
        let r = build_grid((0.0, 1.0), 0.001, 10, 10, 0.5, &placement, ThetaPolicy::HighOrder);
        assert!(matches!(r, Err(PricingError::Inadmissible { .. })));
        assert!(build_grid((0.0, 1.0), 0.001, 10, 10, 0.5, &placement, ThetaPolicy::CrankNicolson).is_ok());
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let g = Grid::new(-1.0, 1.0, 0.1, 8, 4).unwrap();
        let f = |x: f64| 0.3 - 2.0 * x + 0.5 * x * x - x * x * x;
        let u: Vec<f64> = g.nodes().iter().map(|&x| f(x)).collect();
        for x in [-0.99, -0.8, -0.13, 0.0625, 0.5, 0.97] {
            assert!((interpolate(&g, &u, x) - f(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn extraction_rejects_points_off_the_grid() {
        let g = Grid::new(0.0, 1.0, 0.1, 4, 4).unwrap();
        let c = BarrierContract::down_and_out(95.0, 100.0, 90.0, 1.0);
        let p = TransformedProblem::new(&c, &MarketParams::new(0.1, 0.0, 0.25));
        assert!(matches!(
            extract_price(&[0.0; 5], &g, 1.5, &p),
            Err(PricingError::Extrapolation { .. })
        ));
    }

    #[test]
    fn down_and_out_matches_closed_form() {
        let m = MarketParams::new(0.10, 0.0, 0.25);
        let cfg = CutoffConfig::default();
        for (s0, expected) in [(95.0, 5.9968), (91.0, 1.2738)] {
            let c = BarrierContract::down_and_out(s0, 100.0, 90.0, 1.0);
            let r = price_continuous(&c, &m, 100, 100, ThetaPolicy::HighOrder, &cfg).unwrap();
            assert!((r.value - expected).abs() < 1e-3, "{s0}: {}", r.value);
            assert_eq!(r.boundary_mode, BoundaryMode::Optimal);
        }
    }

    #[test]
    fn up_and_out_and_double_match_closed_forms() {
        let cfg = CutoffConfig::default();
        let m = MarketParams::new(0.10, 0.02, 0.20);
        let c = BarrierContract::up_and_out(100.0, 100.0, 110.0, 0.5);
        let exact = analytic::closed_form_price(&c, &m).unwrap();
        let r = price_continuous(&c, &m, 200, 200, ThetaPolicy::HighOrder, &cfg).unwrap();
        assert!((r.value - exact).abs() < 2e-3, "{} vs {exact}", r.value);

        let m = MarketParams::new(0.10, 0.0, 0.20);
        let c = BarrierContract::double_knock_out(100.0, 100.0, 95.0, 125.0, 0.5);
        let r = price_continuous(&c, &m, 200, 200, ThetaPolicy::HighOrder, &cfg).unwrap();
        assert!((r.value - 2.033).abs() < 2e-3, "{}", r.value);
    }

    #[test]
    fn worthless_barrier_short_circuits() {
        let c = BarrierContract::down_and_out(300.0, 150.0, 180.0, 0.25);
        let m = MarketParams::new(0.05, 0.0, 0.20);
        let r = price_continuous(&c, &m, 50, 50, ThetaPolicy::HighOrder, &CutoffConfig::default()).unwrap();
        assert_eq!(r.time_steps, 0);
        assert_eq!(r.extraction, Extraction::ShortCircuit);
        assert_eq!(
            r.value,
            analytic::vanilla_call(300.0, 150.0, 0.25, 0.05, 0.0, 0.2).unwrap()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn implicit_operator_is_diagonally_dominant(theta in 0.001f64..=1.0, beta in 1e-3f64..1e3, m in 3usize..50) {
            prop_assert!(assemble(theta, beta, m).implicit.is_strictly_diagonally_dominant());
        }
    }
}
