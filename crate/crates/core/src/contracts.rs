//! Market data, knock-out call contracts and monitoring policies.
//!
//! Everything here is a plain value type. [`validate`] collects every violated
//! invariant instead of stopping at the first one; all pricing entry points in
//! the crate call it before doing any numerical work.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

/// Trading days per year used for daily monitoring.
pub const DAYS_PER_YEAR: f64 = 250.0;
/// Weeks per year used for weekly monitoring.
pub const WEEKS_PER_YEAR: f64 = 50.0;
pub const DAYS_PER_WEEK: f64 = 5.0;

/// Flat Black-Scholes market: rate, continuous dividend yield and volatility,
/// all per annum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    pub r: f64,
    pub q: f64,
    pub sigma: f64,
}

impl MarketParams {
    pub fn new(r: f64, q: f64, sigma: f64) -> Self {
        Self { r, q, sigma }
    }

    /// Risk-neutral drift `r - q`.
    pub fn mu(&self) -> f64 {
        self.r - self.q
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BarrierGeometry {
    DownAndOut { barrier: f64 },
    UpAndOut { barrier: f64 },
    DoubleKnockOut { lower: f64, upper: f64 },
}

impl BarrierGeometry {
    pub fn lower_barrier(&self) -> Option<f64> {
        match *self {
            BarrierGeometry::DownAndOut { barrier } => Some(barrier),
            BarrierGeometry::DoubleKnockOut { lower, .. } => Some(lower),
            BarrierGeometry::UpAndOut { .. } => None,
        }
    }

    pub fn upper_barrier(&self) -> Option<f64> {
        match *self {
            BarrierGeometry::UpAndOut { barrier } => Some(barrier),
            BarrierGeometry::DoubleKnockOut { upper, .. } => Some(upper),
            BarrierGeometry::DownAndOut { .. } => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BarrierGeometry::DownAndOut { .. } => "down-and-out",
            BarrierGeometry::UpAndOut { .. } => "up-and-out",
            BarrierGeometry::DoubleKnockOut { .. } => "double-knock-out",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitoringFrequency {
    Daily,
    Weekly,
    Count(u32),
}

impl MonitoringFrequency {
    /// Number of monitoring dates over `expiry` years under the 250-day year.
    pub fn date_count(&self, expiry: f64) -> i64 {
        match *self {
            MonitoringFrequency::Daily => (DAYS_PER_YEAR * expiry).round() as i64,
            MonitoringFrequency::Weekly => (WEEKS_PER_YEAR * expiry).round() as i64,
            MonitoringFrequency::Count(n) => i64::from(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitoringPolicy {
    Continuous,
    Discrete(MonitoringFrequency),
}

impl MonitoringPolicy {
    pub fn is_continuous(&self) -> bool {
        matches!(self, MonitoringPolicy::Continuous)
    }
}

impl fmt::Display for MonitoringPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonitoringPolicy::Continuous => f.write_str("continuous"),
            MonitoringPolicy::Discrete(MonitoringFrequency::Daily) => f.write_str("daily"),
            MonitoringPolicy::Discrete(MonitoringFrequency::Weekly) => f.write_str("weekly"),
            MonitoringPolicy::Discrete(MonitoringFrequency::Count(n)) => write!(f, "count:{n}"),
        }
    }
}

impl FromStr for MonitoringPolicy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "continuous" => Ok(MonitoringPolicy::Continuous),
            "daily" => Ok(MonitoringPolicy::Discrete(MonitoringFrequency::Daily)),
            "weekly" => Ok(MonitoringPolicy::Discrete(MonitoringFrequency::Weekly)),
            _ => {
                let n = s
                    .strip_prefix("count:")
                    .and_then(|n| n.parse::<u32>().ok())
                    .ok_or_else(|| ConfigError::BadValue {
                        key: "monitoring",
                        value: s.clone(),
                    })?;
                Ok(MonitoringPolicy::Discrete(MonitoringFrequency::Count(n)))
            }
        }
    }
}

/// A European knock-out call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierContract {
    pub strike: f64,
    /// Years to expiry.
    pub expiry: f64,
    pub spot: f64,
    pub geometry: BarrierGeometry,
    /// Paid once, at whichever barrier is breached first.
    pub rebate: f64,
    pub monitoring: MonitoringPolicy,
}

impl BarrierContract {
    pub fn new(spot: f64, strike: f64, expiry: f64, geometry: BarrierGeometry) -> Self {
        Self {
            strike,
            expiry,
            spot,
            geometry,
            rebate: 0.0,
            monitoring: MonitoringPolicy::Continuous,
        }
    }

    pub fn down_and_out(spot: f64, strike: f64, barrier: f64, expiry: f64) -> Self {
        Self::new(spot, strike, expiry, BarrierGeometry::DownAndOut { barrier })
    }

    pub fn up_and_out(spot: f64, strike: f64, barrier: f64, expiry: f64) -> Self {
        Self::new(spot, strike, expiry, BarrierGeometry::UpAndOut { barrier })
    }

    pub fn double_knock_out(spot: f64, strike: f64, lower: f64, upper: f64, expiry: f64) -> Self {
        Self::new(spot, strike, expiry, BarrierGeometry::DoubleKnockOut { lower, upper })
    }

    pub fn with_rebate(mut self, rebate: f64) -> Self {
        self.rebate = rebate;
        self
    }

    pub fn with_monitoring(mut self, monitoring: MonitoringPolicy) -> Self {
        self.monitoring = monitoring;
        self
    }

    pub fn with_spot(mut self, spot: f64) -> Self {
        self.spot = spot;
        self
    }

    pub fn with_geometry(mut self, geometry: BarrierGeometry) -> Self {
        self.geometry = geometry;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    NonPositiveVolatility,
    NonFiniteRate,
    NonPositiveStrike,
    NonPositiveExpiry,
    NonPositiveSpot,
    NonPositiveBarrier,
    NegativeRebate,
    InvertedBarriers,
    SpotNotAboveBarrier,
    SpotNotBelowBarrier,
    SpotOutsideCorridor,
    NoMonitoringDates,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Violation::NonPositiveVolatility => "sigma must be positive",
            Violation::NonFiniteRate => "r and q must be finite",
            Violation::NonPositiveStrike => "K must be positive",
            Violation::NonPositiveExpiry => "T must be positive",
            Violation::NonPositiveSpot => "S0 must be positive",
            Violation::NonPositiveBarrier => "barrier levels must be positive",
            Violation::NegativeRebate => "rebate must be non-negative",
            Violation::InvertedBarriers => "B_l < B_u required",
            Violation::SpotNotAboveBarrier => "S0 must exceed B",
            Violation::SpotNotBelowBarrier => "S0 must be below B",
            Violation::SpotOutsideCorridor => "B_l < S0 < B_u required",
            Violation::NoMonitoringDates => "at least one monitoring date required",
        };
        f.write_str(msg)
    }
}

/// Non-empty list of violated invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct Violations(pub Vec<Violation>);

impl Violations {
    pub fn contains(&self, v: Violation) -> bool {
        self.0.contains(&v)
    }
}

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Violations {}

pub fn validate(contract: &BarrierContract, market: &MarketParams) -> Result<(), Violations> {
    let mut out = Vec::new();
    let positive = |x: f64| x.is_finite() && x > 0.0;

    if !positive(market.sigma) {
        out.push(Violation::NonPositiveVolatility);
    }
    if !market.r.is_finite() || !market.q.is_finite() {
        out.push(Violation::NonFiniteRate);
    }
    if !positive(contract.strike) {
        out.push(Violation::NonPositiveStrike);
    }
    if !positive(contract.expiry) {
        out.push(Violation::NonPositiveExpiry);
    }
    if !positive(contract.spot) {
        out.push(Violation::NonPositiveSpot);
    }
    if !(contract.rebate.is_finite() && contract.rebate >= 0.0) {
        out.push(Violation::NegativeRebate);
    }

    let s0 = contract.spot;
    let continuous = contract.monitoring.is_continuous();
    match contract.geometry {
        BarrierGeometry::DownAndOut { barrier } => {
            if !positive(barrier) {
                out.push(Violation::NonPositiveBarrier);
            } else if continuous && s0 <= barrier {
                out.push(Violation::SpotNotAboveBarrier);
            }
        }
        BarrierGeometry::UpAndOut { barrier } => {
            if !positive(barrier) {
                out.push(Violation::NonPositiveBarrier);
            } else if continuous && s0 >= barrier {
                out.push(Violation::SpotNotBelowBarrier);
            }
        }
        BarrierGeometry::DoubleKnockOut { lower, upper } => {
            if !positive(lower) || !positive(upper) {
                out.push(Violation::NonPositiveBarrier);
            } else if lower >= upper {
                out.push(Violation::InvertedBarriers);
            } else if continuous && !(lower < s0 && s0 < upper) {
                out.push(Violation::SpotOutsideCorridor);
            }
        }
    }

    if let MonitoringPolicy::Discrete(freq) = contract.monitoring {
        if contract.expiry.is_finite() && freq.date_count(contract.expiry) < 1 {
            out.push(Violation::NoMonitoringDates);
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(Violations(out))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("bad value `{value}` for key `{key}`")]
    BadValue { key: &'static str, value: String },
}

/// Contract and market description as read from a `key = value` file.
///
/// Every field is optional so that command-line flags can fill in or
/// override individual entries before [`ContractConfig::build`].
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractConfig {
    pub strike: Option<f64>,
    pub expiry: Option<f64>,
    pub s0: Option<f64>,
    /// `down`, `up` or `double` (the `-and-out` suffixes are accepted).
    pub barrier_type: Option<String>,
    pub barrier: Option<f64>,
    pub barrier_low: Option<f64>,
    pub barrier_high: Option<f64>,
    pub rebate: Option<f64>,
    pub monitoring: Option<String>,
    pub r: Option<f64>,
    pub q: Option<f64>,
    pub sigma: Option<f64>,
    pub delta: Option<f64>,
}

impl ContractConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Fields set in `other` take precedence.
    pub fn merged_with(&self, other: &ContractConfig) -> ContractConfig {
        ContractConfig {
            strike: other.strike.or(self.strike),
            expiry: other.expiry.or(self.expiry),
            s0: other.s0.or(self.s0),
            barrier_type: other.barrier_type.clone().or_else(|| self.barrier_type.clone()),
            barrier: other.barrier.or(self.barrier),
            barrier_low: other.barrier_low.or(self.barrier_low),
            barrier_high: other.barrier_high.or(self.barrier_high),
            rebate: other.rebate.or(self.rebate),
            monitoring: other.monitoring.clone().or_else(|| self.monitoring.clone()),
            r: other.r.or(self.r),
            q: other.q.or(self.q),
            sigma: other.sigma.or(self.sigma),
            delta: other.delta.or(self.delta),
        }
    }

    /// Builds the contract and market. The barrier type defaults to
    /// double when both corridor levels are present, otherwise to down or
    /// up depending on which side of `s0` the single barrier lies.
    pub fn build(&self) -> Result<(BarrierContract, MarketParams), ConfigError> {
        let strike = self.strike.ok_or(ConfigError::Missing("strike"))?;
        let expiry = self.expiry.ok_or(ConfigError::Missing("expiry"))?;
        let s0 = self.s0.ok_or(ConfigError::Missing("s0"))?;
        let r = self.r.ok_or(ConfigError::Missing("r"))?;
        let sigma = self.sigma.ok_or(ConfigError::Missing("sigma"))?;
        let q = self.q.unwrap_or(0.0);

        let kind = match self.barrier_type.as_deref().map(str::to_ascii_lowercase) {
            Some(t) => match t.trim_end_matches("-and-out").trim_end_matches("-knock-out") {
                "down" => "down",
                "up" => "up",
                "double" => "double",
                _ => {
                    return Err(ConfigError::BadValue {
                        key: "barrier_type",
                        value: t,
                    })
                }
            },
            None if self.barrier_low.is_some() && self.barrier_high.is_some() => "double",
            None => match self.barrier {
                Some(b) if b > s0 => "up",
                _ => "down",
            },
        };
        let geometry = match kind {
            "double" => BarrierGeometry::DoubleKnockOut {
                lower: self.barrier_low.ok_or(ConfigError::Missing("barrier_low"))?,
                upper: self.barrier_high.ok_or(ConfigError::Missing("barrier_high"))?,
            },
            "up" => BarrierGeometry::UpAndOut {
                barrier: self.barrier.ok_or(ConfigError::Missing("barrier"))?,
            },
            _ => BarrierGeometry::DownAndOut {
                barrier: self.barrier.ok_or(ConfigError::Missing("barrier"))?,
            },
        };
        let monitoring = match &self.monitoring {
            Some(m) => m.parse()?,
            None => MonitoringPolicy::Continuous,
        };
        let contract = BarrierContract::new(s0, strike, expiry, geometry)
            .with_rebate(self.rebate.unwrap_or(0.0))
            .with_monitoring(monitoring);
        Ok((contract, MarketParams::new(r, q, sigma)))
    }
}
