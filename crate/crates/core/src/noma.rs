//! Two-user power-domain NOMA baseline on the same link model.
//!
//! The far user (smaller mean channel gain) gets power fraction `alpha_far`
//! and decodes its message treating the near user's as interference. The near
//! user removes the far user's message first, leaving a residual `phi` of its
//! power, then decodes its own.

use serde::{Deserialize, Serialize};

use crate::analytic::rate_kernel;
use crate::error::{Error, Result};
use crate::model::{derive_link_stats, LinkStats, StreamSinr, SystemConfig};
use crate::montecarlo::{estimate_rates, RatePair, SubstreamKey};

const DOMAIN_NOMA: u64 = 0x5253_4d41_4e4f_4d41;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NomaRole {
    Far,
    Near,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NomaConfig {
    /// Link parameters. The RSMA power split is ignored.
    pub system: SystemConfig,
    /// Power fraction of the far user, in (0.5, 1).
    pub alpha_far: f64,
}

impl NomaConfig {
    pub fn new(system: SystemConfig, alpha_far: f64) -> Result<Self> {
        let cfg = NomaConfig { system, alpha_far };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.system.n_users != 2 {
            return Err(Error::DimensionMismatch {
                field: "n_users",
                expected: 2,
                found: self.system.n_users,
            });
        }
        if !(self.alpha_far > 0.5 && self.alpha_far < 1.0) {
            return Err(Error::OutOfRange {
                field: "alpha_far",
                index: None,
                value: self.alpha_far,
                expected: "0.5 < alpha_far < 1",
            });
        }
        Ok(())
    }

    pub fn alpha_near(&self) -> f64 {
        1.0 - self.alpha_far
    }

    /// Index of the far user. Ties go to user 0.
    pub fn far_user(&self) -> usize {
        if self.system.path_gain(1) < self.system.path_gain(0) {
            1
        } else {
            0
        }
    }

    pub fn role(&self, user: usize) -> Result<NomaRole> {
        self.system.check_user(user)?;
        Ok(if user == self.far_user() {
            NomaRole::Far
        } else {
            NomaRole::Near
        })
    }
}

/// SINR of `user`'s own message as `num x / (lin x + constant)`.
pub fn noma_coefficients(config: &NomaConfig, user: usize, stats: &LinkStats) -> Result<StreamSinr> {
    let sys = &config.system;
    let rho = stats.rho;
    let hw = sys.kappa_t_sq + sys.kappa_r_sq[user];
    let (alpha_f, alpha_n) = (config.alpha_far, config.alpha_near());
    Ok(match config.role(user)? {
        NomaRole::Far => StreamSinr {
            num: rho * alpha_f,
            lin: rho * (alpha_n + hw),
            constant: 1.0 + rho * stats.omega_err * (alpha_f + alpha_n + hw),
        },
        NomaRole::Near => {
            let residual = sys.phi[user] * alpha_f;
            StreamSinr {
                num: rho * alpha_n,
                lin: rho * (residual + hw),
                constant: 1.0 + rho * stats.omega_err * (residual + alpha_n + hw),
            }
        }
    })
}

/// Instantaneous SINR of `user` for estimated channel power `g_hat_sq`.
pub fn noma_sinr(config: &NomaConfig, user: usize, stats: &LinkStats, g_hat_sq: f64) -> Result<f64> {
    if !(g_hat_sq >= 0.0) {
        return Err(Error::Domain {
            function: "noma_sinr",
            value: g_hat_sq,
        });
    }
    Ok(noma_coefficients(config, user, stats)?.eval(g_hat_sq))
}

/// Closed-form ergodic rate of `user` (approximate rate expression).
pub fn noma_ergodic_rate(config: &NomaConfig, user: usize, tx_power_dbm: f64) -> Result<f64> {
    let stats = derive_link_stats(&config.system, user, tx_power_dbm)?;
    if stats.rho == 0.0 {
        return Ok(0.0);
    }
    if !(stats.omega_hat > 0.0) {
        return Err(Error::DegenerateChannel { user });
    }
    let s = noma_coefficients(config, user, &stats)?;
    rate_kernel(s.num, s.lin, s.constant, stats.m, stats.m / stats.omega_hat)
}

/// Closed-form rates of both users.
pub fn noma_rates(config: &NomaConfig, tx_power_dbm: f64) -> Result<Vec<f64>> {
    (0..2).map(|u| noma_ergodic_rate(config, u, tx_power_dbm)).collect()
}

/// Monte-Carlo rates of `user` in both modes.
pub fn mc_noma_rate(
    config: &NomaConfig,
    user: usize,
    tx_power_dbm: f64,
    n_samples: u64,
    seed: u64,
) -> Result<RatePair> {
    let stats = derive_link_stats(&config.system, user, tx_power_dbm)?;
    let sinr = noma_coefficients(config, user, &stats)?;
    let key = SubstreamKey::new(DOMAIN_NOMA, tx_power_dbm, user, 0);
    estimate_rates(stats.m, stats.omega_hat, |x| sinr.eval(x), n_samples, seed, key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::McMode;

    fn unit_config(phi: f64) -> NomaConfig {
        let mut sys = SystemConfig::table1();
        sys.phi = vec![phi, phi];
        NomaConfig::new(sys, 0.55).unwrap()
    }

    fn unit_stats(rho: f64) -> LinkStats {
        LinkStats {
            rho,
            omega_total: 1.0,
            omega_err: 0.0,
            omega_hat: 1.0,
            m: 4.0,
        }
    }

    #[test]
    fn roles_follow_distance() {
        let cfg = unit_config(0.0);
        assert_eq!(cfg.role(0).unwrap(), NomaRole::Far);
        assert_eq!(cfg.role(1).unwrap(), NomaRole::Near);
    }

    #[test]
    fn hand_computed_sinr() {
        let cfg = unit_config(0.0);
        let st = unit_stats(10.0);
        assert!((noma_sinr(&cfg, 0, &st, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((noma_sinr(&cfg, 1, &st, 1.0).unwrap() - 4.5).abs() < 1e-12);
        assert_eq!(noma_sinr(&cfg, 0, &st, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn full_sic_residual() {
        let cfg = unit_config(1.0);
        let st = unit_stats(10.0);
        let got = noma_sinr(&cfg, 1, &st, 1.0).unwrap();
        assert!((got - 4.5 / 6.5).abs() < 1e-12);
    }

    #[test]
    fn far_user_ceiling() {
        let cfg = unit_config(0.0);
        let s = noma_coefficients(&cfg, 0, &unit_stats(1e6)).unwrap();
        assert!((s.ceiling() - 0.55 / 0.45).abs() < 1e-12);
    }

    #[test]
    fn alpha_range_is_checked() {
        let sys = SystemConfig::table1();
        assert!(NomaConfig::new(sys.clone(), 0.5).is_err());
        assert!(NomaConfig::new(sys.clone(), 1.0).is_err());
        let mut three = sys;
        three.n_users = 3;
        assert!(NomaConfig::new(three, 0.7).is_err());
    }

    #[test]
    fn closed_form_tracks_simulation() {
        let cfg = unit_config(0.0);
        for user in 0..2 {
            let cf = noma_ergodic_rate(&cfg, user, 15.0).unwrap();
            let mc = mc_noma_rate(&cfg, user, 15.0, 200_000, 4).unwrap().get(McMode::TopsoeApprox);
            assert!((cf - mc.mean).abs() < 5.0 * mc.stderr + 1e-9, "{cf} {mc:?}");
        }
    }
}
