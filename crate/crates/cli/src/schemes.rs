//! Maps a scheme name and mesh onto the pricing routines.

use barrier_core::boundary::CutoffConfig;
use barrier_core::discrete_monitor::{default_rho, price_discrete, schedule};
use barrier_core::pde_engine::{price_continuous, PriceReport, ThetaPolicy};
use barrier_core::scheme_lab::{error_profile, price_habis, price_mefd, price_obes, ExplicitConfig, SmaxRule};
use barrier_core::{analytic, BarrierContract, MarketParams, PricingError, Result};
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Scheme {
    /// High-order implicit scheme on the optimal domain.
    Hobis,
    /// High-order implicit scheme with a far-field edge at S_max.
    Habis,
    /// Explicit scheme on the optimal domain.
    Obes,
    /// Explicit scheme with a far-field edge at S_max.
    Mefd,
    /// Crank-Nicolson on the optimal domain.
    Cn,
    /// Fully implicit on the optimal domain.
    Implicit,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Hobis => "hobis",
            Scheme::Habis => "habis",
            Scheme::Obes => "obes",
            Scheme::Mefd => "mefd",
            Scheme::Cn => "cn",
            Scheme::Implicit => "implicit",
        }
    }

    /// Theta policy for the implicit-family schemes on the optimal domain.
    pub fn policy(self) -> Option<ThetaPolicy> {
        match self {
            Scheme::Hobis => Some(ThetaPolicy::HighOrder),
            Scheme::Cn => Some(ThetaPolicy::CrankNicolson),
            Scheme::Implicit => Some(ThetaPolicy::FullyImplicit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    /// Space intervals and time steps. Explicit schemes only use the
    /// second entry.
    pub mesh: (usize, usize),
    /// Steps per monitoring interval; derived from the mesh when absent.
    pub rho: Option<usize>,
    pub cutoff: CutoffConfig,
    pub lambda: f64,
    pub s_max_rule: SmaxRule,
}

impl Settings {
    pub fn new(mesh: (usize, usize), cutoff: CutoffConfig) -> Self {
        Self {
            mesh,
            rho: None,
            cutoff,
            lambda: 3f64.sqrt(),
            s_max_rule: SmaxRule::TwoS0Plus200,
        }
    }

    pub fn with_mesh(mut self, mesh: (usize, usize)) -> Self {
        self.mesh = mesh;
        self
    }

    fn explicit(&self) -> ExplicitConfig {
        ExplicitConfig::new(self.mesh.1)
            .with_lambda(self.lambda)
            .with_s_max_rule(self.s_max_rule)
    }
}

pub fn price(scheme: Scheme, contract: &BarrierContract, market: &MarketParams, s: &Settings) -> Result<PriceReport> {
    let (m, l) = s.mesh;
    let continuous = contract.monitoring.is_continuous();
    match scheme {
        Scheme::Hobis | Scheme::Cn | Scheme::Implicit => {
            let policy = scheme.policy().expect("implicit-family scheme");
            if continuous {
                price_continuous(contract, market, m, l, policy, &s.cutoff)
            } else {
                let rho = match s.rho {
                    Some(rho) => rho,
                    None => default_rho(schedule(contract.monitoring, contract.expiry, 1)?.n, l),
                };
                price_discrete(contract, market, m, rho, policy, &s.cutoff)
            }
        }
        Scheme::Habis => price_habis(contract, market, m, l, s.s_max_rule),
        Scheme::Obes => price_obes(contract, market, &s.explicit(), &s.cutoff),
        Scheme::Mefd => price_mefd(contract, market, &s.explicit()),
    }
}

/// Largest error against the closed form: over the whole grid for the
/// implicit-family schemes, at the spot otherwise.
pub fn max_error(
    scheme: Scheme,
    contract: &BarrierContract,
    market: &MarketParams,
    s: &Settings,
    value: f64,
) -> Result<f64> {
    if !contract.monitoring.is_continuous() {
        return Err(PricingError::Unsupported(
            "no closed form under discrete monitoring".into(),
        ));
    }
    match scheme.policy() {
        Some(policy) => Ok(error_profile(contract, market, s.mesh.0, s.mesh.1, policy, &s.cutoff)?.max_abs),
        None => Ok((value - analytic::closed_form_price(contract, market)?).abs()),
    }
}
