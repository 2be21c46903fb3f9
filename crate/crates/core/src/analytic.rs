//! Closed-form ergodic rate, sum rate, energy efficiency and Jain's fairness
//! index.
//!
//! Every stream rate is an instance of one kernel: the expectation of
//! `2γ / ((2 + γ) ln 2)` for `γ = c x / (a1 x + a2)` with `x` Gamma-distributed
//! (shape `m`, rate `d1`), which has the closed form
//!
//! ```text
//! ζ = d1^m c (a2 / s)^m Γ(m + 1) e^X Γ(-m, X) / (ln 2 Γ(m) s),
//! s = a1 + c / 2,   X = d1 a2 / s.
//! ```
//!
//! `d1` reaches 1e8 for realistic path loss, so the kernel is evaluated in the
//! log domain with the scaled incomplete gamma.

use bitflags::bitflags;

use crate::error::{Error, Result};
use crate::model::{
    derive_link_stats, ideal_coefficients, rsma_coefficients, CoefficientSet, SystemConfig,
};
use crate::specfun::{exp_scaled_upper_gamma, ln_gamma, LN2};

/// Closed-form value of `E[2γ / ((2 + γ) ln 2)]`, `γ = c x / (a1 x + a2)`,
/// `x ~ Gamma(m, 1/d1)`.
pub fn rate_kernel(c: f64, a1: f64, a2: f64, m: f64, d1: f64) -> Result<f64> {
    if !(d1 > 0.0) || !d1.is_finite() {
        return Err(Error::Domain {
            function: "rate_kernel (d1)",
            value: d1,
        });
    }
    if !(m >= 0.5) || !m.is_finite() {
        return Err(Error::Domain {
            function: "rate_kernel (m)",
            value: m,
        });
    }
    if !(c >= 0.0) || !(a1 >= 0.0) || !(a2 > 0.0) || !c.is_finite() || !a1.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "rate_kernel needs c >= 0, a1 >= 0, a2 > 0 (got c = {c}, a1 = {a1}, a2 = {a2})"
        )));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    let s = a1 + 0.5 * c;
    let x = d1 * a2 / s;
    let scaled = exp_scaled_upper_gamma(-m, x)?;
    let ln_zeta = m * d1.ln() + c.ln() + m * (a2.ln() - s.ln()) + ln_gamma(m + 1.0)?
        - ln_gamma(m)?
        - s.ln()
        - LN2.ln()
        + scaled.value.ln();
    Ok(ln_zeta.exp())
}

fn common_kernel(c: &CoefficientSet, m: f64) -> Result<f64> {
    rate_kernel(c.c1, c.a1, c.a2, m, c.d1)
}

fn private_kernel(c: &CoefficientSet, m: f64) -> Result<f64> {
    rate_kernel(c.c2, c.b1, c.b2, m, c.d1)
}

/// Common-stream rate: the smallest per-user expectation.
pub fn common_rate(config: &SystemConfig, tx_power_dbm: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for user in 0..config.n_users {
        let stats = derive_link_stats(config, user, tx_power_dbm)?;
        if stats.rho == 0.0 {
            return Ok(0.0);
        }
        let coeffs = rsma_coefficients(config, user, &stats)?;
        best = best.min(common_kernel(&coeffs, stats.m)?);
    }
    Ok(best)
}

/// Private-stream rate of one user.
pub fn private_rate(config: &SystemConfig, user: usize, tx_power_dbm: f64) -> Result<f64> {
    let stats = derive_link_stats(config, user, tx_power_dbm)?;
    if stats.rho == 0.0 {
        return Ok(0.0);
    }
    let coeffs = rsma_coefficients(config, user, &stats)?;
    private_kernel(&coeffs, stats.m)
}

bitflags! {
    /// Impairments active in a configuration.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
    pub struct ImpairmentFlags: u8 {
        const IMPERFECT_CSIR = 1;
        const IMPERFECT_SIC = 1 << 1;
        const HW_IMPAIRED = 1 << 2;
    }
}

impl ImpairmentFlags {
    pub fn of(config: &SystemConfig) -> Self {
        let mut flags = ImpairmentFlags::empty();
        if config.xi.iter().any(|x| x.is_finite()) {
            flags |= ImpairmentFlags::IMPERFECT_CSIR;
        }
        if config.phi.iter().any(|&p| p > 0.0) {
            flags |= ImpairmentFlags::IMPERFECT_SIC;
        }
        if config.kappa_t_sq > 0.0 || config.kappa_r_sq.iter().any(|&k| k > 0.0) {
            flags |= ImpairmentFlags::HW_IMPAIRED;
        }
        flags
    }

    pub fn is_ideal(self) -> bool {
        self.is_empty()
    }
}

/// Rate split of one user, bps/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserRate {
    pub common_rate: f64,
    pub private_rate: f64,
    pub total_rate: f64,
}

/// Closed-form rates of every user at one transmit power.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub tx_power_dbm: f64,
    pub users: Vec<UserRate>,
    pub flags: ImpairmentFlags,
}

impl RateReport {
    pub fn totals(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.total_rate).collect()
    }

    pub fn sum_rate(&self) -> f64 {
        self.users.iter().map(|u| u.total_rate).sum()
    }
}

/// Ergodic rate of `user`: the common-stream rate plus its private rate.
pub fn ergodic_rate(config: &SystemConfig, user: usize, tx_power_dbm: f64) -> Result<UserRate> {
    config.check_user(user)?;
    let common = common_rate(config, tx_power_dbm)?;
    let private = private_rate(config, user, tx_power_dbm)?;
    Ok(UserRate {
        common_rate: common,
        private_rate: private,
        total_rate: common + private,
    })
}

/// Rates of all users, sharing one evaluation of the common stream.
pub fn rate_report(config: &SystemConfig, tx_power_dbm: f64) -> Result<RateReport> {
    let common = common_rate(config, tx_power_dbm)?;
    let users = (0..config.n_users)
        .map(|user| {
            let private = private_rate(config, user, tx_power_dbm)?;
            Ok(UserRate {
                common_rate: common,
                private_rate: private,
                total_rate: common + private,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateReport {
        tx_power_dbm,
        users,
        flags: ImpairmentFlags::of(config),
    })
}

/// Ergodic rate with perfect CSIR, perfect SIC and ideal hardware, using the
/// reduced coefficients directly.
pub fn ideal_ergodic_rate(config: &SystemConfig, user: usize, tx_power_dbm: f64) -> Result<UserRate> {
    config.check_user(user)?;
    let rho = config.rho(tx_power_dbm);
    if rho == 0.0 {
        return Ok(UserRate {
            common_rate: 0.0,
            private_rate: 0.0,
            total_rate: 0.0,
        });
    }
    let mut common = f64::INFINITY;
    for n in 0..config.n_users {
        let c = ideal_coefficients(config, n, rho)?;
        common = common.min(common_kernel(&c, config.m[n])?);
    }
    let own = ideal_coefficients(config, user, rho)?;
    let private = private_kernel(&own, config.m[user])?;
    Ok(UserRate {
        common_rate: common,
        private_rate: private,
        total_rate: common + private,
    })
}

/// Sum of the users' ergodic rates.
pub fn sum_rate(config: &SystemConfig, tx_power_dbm: f64) -> Result<f64> {
    Ok(rate_report(config, tx_power_dbm)?.sum_rate())
}

/// Energy efficiency `Σ R_n / (P + P_c)` in bps/Hz/W.
pub fn energy_efficiency(config: &SystemConfig, tx_power_dbm: f64) -> Result<f64> {
    let total = sum_rate(config, tx_power_dbm)?;
    Ok(energy_efficiency_of(total, tx_power_dbm, config.circuit_power_w))
}

/// Energy efficiency of an already computed sum rate.
pub fn energy_efficiency_of(sum_rate: f64, tx_power_dbm: f64, circuit_power_w: f64) -> f64 {
    if sum_rate == 0.0 {
        return 0.0;
    }
    sum_rate / (crate::dbm_to_watts(tx_power_dbm) + circuit_power_w)
}

/// Jain's fairness index `(Σ R)^2 / (N Σ R^2)`.
pub fn jains_fairness(rates: &[f64]) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::InvalidArgument("no rates given".into()));
    }
    if let Some(&bad) = rates.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
        return Err(Error::Domain {
            function: "jains_fairness",
            value: bad,
        });
    }
    let sum: f64 = rates.iter().sum();
    let sum_sq: f64 = rates.iter().map(|r| r * r).sum();
    if sum_sq == 0.0 {
        return Err(Error::DegenerateRates);
    }
    let jfi = sum * sum / (rates.len() as f64 * sum_sq);
    // Rounding can push an exactly fair vector a few ulps past 1.
    Ok(jfi.min(1.0))
}

/// System-level metrics at one transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairnessReport {
    pub jfi: f64,
    pub sum_rate: f64,
    pub ee: f64,
}

impl FairnessReport {
    pub fn from_rates(rates: &[f64], tx_power_dbm: f64, circuit_power_w: f64) -> Result<Self> {
        let sum_rate: f64 = rates.iter().sum();
        Ok(FairnessReport {
            jfi: jains_fairness(rates)?,
            sum_rate,
            ee: energy_efficiency_of(sum_rate, tx_power_dbm, circuit_power_w),
        })
    }
}

/// System metrics of the RSMA closed forms.
pub fn fairness_report(config: &SystemConfig, tx_power_dbm: f64) -> Result<FairnessReport> {
    let report = rate_report(config, tx_power_dbm)?;
    FairnessReport::from_rates(&report.totals(), tx_power_dbm, config.circuit_power_w)
}
