//! Scenario description, link statistics and closed-form coefficients.
//!
//! Power levels are in dBm and the linear SNR is `rho = 10^((P - noise) / 10)`.
//! Large-scale fading is the distance law `pathloss_ref / D^tau`, which is also
//! the mean power of the Nakagami-m small-scale channel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `beta_common + sum(beta_private) = 1`.
pub const POWER_SPLIT_TOL: f64 = 1e-9;

/// Full description of an N-user downlink RSMA scenario.
///
/// `xi[n] = f64::INFINITY` means user `n` has perfect channel knowledge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n_users: usize,
    pub beta_common: f64,
    pub beta_private: Vec<f64>,
    pub kappa_t_sq: f64,
    pub kappa_r_sq: Vec<f64>,
    pub phi: Vec<f64>,
    pub xi: Vec<f64>,
    pub m: Vec<f64>,
    pub distance_m: Vec<f64>,
    pub pathloss_exp: Vec<f64>,
    #[serde(default = "default_pathloss_ref")]
    pub pathloss_ref: f64,
    pub noise_dbm: f64,
    #[serde(default)]
    pub circuit_power_w: f64,
}

fn default_pathloss_ref() -> f64 {
    1.0
}

impl SystemConfig {
    /// The two-user parameter set of the reference scenario: m = 4, 135 m and
    /// 120 m links with exponent 3.6, power split 0.6 / 0.25 / 0.15, ideal
    /// hardware, perfect SIC and perfect CSIR. Noise is -100 dBW.
    pub fn table1() -> Self {
        SystemConfig {
            n_users: 2,
            beta_common: 0.6,
            beta_private: vec![0.25, 0.15],
            kappa_t_sq: 0.0,
            kappa_r_sq: vec![0.0, 0.0],
            phi: vec![0.0, 0.0],
            xi: vec![f64::INFINITY, f64::INFINITY],
            m: vec![4.0, 4.0],
            distance_m: vec![135.0, 120.0],
            pathloss_exp: vec![3.6, 3.6],
            pathloss_ref: 1.0,
            noise_dbm: -70.0,
            circuit_power_w: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_users;
        if n == 0 {
            return Err(Error::OutOfRange {
                field: "n_users",
                index: None,
                value: 0.0,
                expected: "at least one user",
            });
        }
        let lists: [(&'static str, &Vec<f64>); 7] = [
            ("beta_private", &self.beta_private),
            ("kappa_r_sq", &self.kappa_r_sq),
            ("phi", &self.phi),
            ("xi", &self.xi),
            ("m", &self.m),
            ("distance_m", &self.distance_m),
            ("pathloss_exp", &self.pathloss_exp),
        ];
        for (field, list) in lists {
            if list.len() != n {
                return Err(Error::DimensionMismatch {
                    field,
                    expected: n,
                    found: list.len(),
                });
            }
        }

        check_scalar("beta_common", self.beta_common, |v| (0.0..=1.0).contains(&v), "[0, 1]")?;
        check_scalar("kappa_t_sq", self.kappa_t_sq, |v| v >= 0.0 && v.is_finite(), ">= 0")?;
        check_scalar("pathloss_ref", self.pathloss_ref, |v| v > 0.0 && v.is_finite(), "> 0")?;
        check_scalar("noise_dbm", self.noise_dbm, f64::is_finite, "finite")?;
        check_scalar(
            "circuit_power_w",
            self.circuit_power_w,
            |v| v >= 0.0 && v.is_finite(),
            ">= 0",
        )?;
        check_list("beta_private", &self.beta_private, |v| (0.0..=1.0).contains(&v), "[0, 1]")?;
        check_list("kappa_r_sq", &self.kappa_r_sq, |v| v >= 0.0 && v.is_finite(), ">= 0")?;
        check_list("phi", &self.phi, |v| (0.0..=1.0).contains(&v), "[0, 1]")?;
        check_list("xi", &self.xi, |v| v > 0.0, "> 0 or inf")?;
        check_list("m", &self.m, |v| v >= 0.5 && v.is_finite(), ">= 0.5")?;
        check_list("distance_m", &self.distance_m, |v| v > 0.0 && v.is_finite(), "> 0")?;
        check_list("pathloss_exp", &self.pathloss_exp, |v| v > 0.0 && v.is_finite(), "> 0")?;

        let sum = self.beta_common + self.beta_private.iter().sum::<f64>();
        if (sum - 1.0).abs() > POWER_SPLIT_TOL {
            return Err(Error::PowerSplit { sum });
        }
        Ok(())
    }

    pub fn check_user(&self, user: usize) -> Result<()> {
        if user >= self.n_users {
            return Err(Error::NoSuchUser {
                user,
                n_users: self.n_users,
            });
        }
        Ok(())
    }

    pub fn sum_beta_private(&self) -> f64 {
        self.beta_private.iter().sum()
    }

    /// Private power of every user except `user`.
    pub fn other_private(&self, user: usize) -> f64 {
        self.beta_private
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != user)
            .map(|(_, b)| b)
            .sum()
    }

    /// Mean channel power `pathloss_ref / D^tau` of a user.
    pub fn path_gain(&self, user: usize) -> f64 {
        self.pathloss_ref / self.distance_m[user].powf(self.pathloss_exp[user])
    }

    /// Linear SNR at a transmit power.
    pub fn rho(&self, tx_power_dbm: f64) -> f64 {
        10f64.powf((tx_power_dbm - self.noise_dbm) / 10.0)
    }

    /// True when no user has estimation error, residual SIC or hardware
    /// distortion.
    pub fn is_ideal(&self) -> bool {
        self.kappa_t_sq == 0.0
            && self.kappa_r_sq.iter().all(|&k| k == 0.0)
            && self.phi.iter().all(|&p| p == 0.0)
            && self.xi.iter().all(|x| x.is_infinite())
    }
}

fn check_scalar(
    field: &'static str,
    value: f64,
    ok: impl Fn(f64) -> bool,
    expected: &'static str,
) -> Result<()> {
    if ok(value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            field,
            index: None,
            value,
            expected,
        })
    }
}

fn check_list(
    field: &'static str,
    values: &[f64],
    ok: impl Fn(f64) -> bool,
    expected: &'static str,
) -> Result<()> {
    match values.iter().position(|&v| !ok(v)) {
        None => Ok(()),
        Some(index) => Err(Error::OutOfRange {
            field,
            index: Some(index),
            value: values[index],
            expected,
        }),
    }
}

/// Returns the configuration unchanged if it is internally consistent.
pub fn validate_config(raw: SystemConfig) -> Result<SystemConfig> {
    raw.validate()?;
    Ok(raw)
}

/// Which stream a receiver is decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    Common,
    Private,
}

/// Per-user second-order statistics at one transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats {
    /// Linear SNR `P / sigma^2`.
    pub rho: f64,
    /// Total channel variance (mean channel power).
    pub omega_total: f64,
    /// Variance of the channel estimation error.
    pub omega_err: f64,
    /// Variance of the channel estimate.
    pub omega_hat: f64,
    /// Nakagami shape.
    pub m: f64,
}

/// Link statistics of `user` at `tx_power_dbm`.
///
/// With finite `xi` the error variance is `omega / (1 + rho xi omega)`. The
/// estimate variance is formed as `omega t / (1 + t)` with `t = rho xi omega`
/// so it keeps full precision when the error swallows almost all of the
/// channel. Perfect CSIR takes precedence over a zero SNR.
pub fn derive_link_stats(config: &SystemConfig, user: usize, tx_power_dbm: f64) -> Result<LinkStats> {
    config.check_user(user)?;
    let rho = config.rho(tx_power_dbm);
    let omega_total = config.path_gain(user);
    let xi = config.xi[user];
    let (omega_err, omega_hat) = if xi.is_infinite() {
        (0.0, omega_total)
    } else {
        let t = rho * xi * omega_total;
        (omega_total / (1.0 + t), omega_total * t / (1.0 + t))
    };
    Ok(LinkStats {
        rho,
        omega_total,
        omega_err,
        omega_hat,
        m: config.m[user],
    })
}

/// Constants of the closed-form ergodic rate of one user.
///
/// The common stream has SINR `c1 x / (a1 x + a2)` and the private stream
/// `c2 x / (b1 x + b2)` for estimated channel power `x`, which is Gamma
/// distributed with rate `d1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub c1: f64,
    pub a1: f64,
    pub a2: f64,
    pub c2: f64,
    pub b1: f64,
    pub b2: f64,
    pub d1: f64,
}

/// Closed-form coefficients of `user` under every impairment.
pub fn rsma_coefficients(
    config: &SystemConfig,
    user: usize,
    stats: &LinkStats,
) -> Result<CoefficientSet> {
    config.check_user(user)?;
    if !(stats.omega_hat > 0.0) {
        return Err(Error::DegenerateChannel { user });
    }
    let rho = stats.rho;
    let beta_c = config.beta_common;
    let sum_private = config.sum_beta_private();
    let kr = config.kappa_r_sq[user];
    let kt = config.kappa_t_sq;
    let phi = config.phi[user];
    Ok(CoefficientSet {
        c1: rho * beta_c,
        a1: rho * (sum_private + kr + kt),
        a2: rho * stats.omega_err * ((beta_c + sum_private) + kr + kt) + 1.0,
        c2: rho * config.beta_private[user],
        b1: rho * (config.other_private(user) + phi * beta_c + kr + kt),
        b2: rho * stats.omega_err * ((phi * beta_c + sum_private) + kr + kt) + 1.0,
        d1: stats.m / stats.omega_hat,
    })
}

/// Coefficients with perfect CSIR, perfect SIC and ideal hardware substituted
/// up front, ignoring the impairment fields of `config`.
pub fn ideal_coefficients(config: &SystemConfig, user: usize, rho: f64) -> Result<CoefficientSet> {
    config.check_user(user)?;
    let omega = config.path_gain(user);
    if !(omega > 0.0) {
        return Err(Error::DegenerateChannel { user });
    }
    Ok(CoefficientSet {
        c1: rho * config.beta_common,
        a1: rho * config.sum_beta_private(),
        a2: 1.0,
        c2: rho * config.beta_private[user],
        b1: rho * config.other_private(user),
        b2: 1.0,
        d1: config.m[user] / omega,
    })
}

/// Instantaneous SINR written as `num x / (lin x + constant)`.
///
/// Built term by term from the received-signal model rather than from
/// [`CoefficientSet`], so the two can be checked against each other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSinr {
    pub num: f64,
    pub lin: f64,
    pub constant: f64,
}

impl StreamSinr {
    pub fn new(config: &SystemConfig, user: usize, stats: &LinkStats, stream: Stream) -> Self {
        let rho = stats.rho;
        let hw = config.kappa_r_sq[user] + config.kappa_t_sq;
        let beta_c = config.beta_common;
        let total_private: f64 = config.beta_private.iter().sum();
        match stream {
            Stream::Common => StreamSinr {
                num: rho * beta_c,
                lin: rho * (total_private + hw),
                constant: 1.0 + rho * stats.omega_err * (beta_c + total_private + hw),
            },
            Stream::Private => {
                let residual = config.phi[user] * beta_c;
                let own = config.beta_private[user];
                StreamSinr {
                    num: rho * own,
                    lin: rho * (total_private - own + residual + hw),
                    constant: 1.0 + rho * stats.omega_err * (residual + total_private + hw),
                }
            }
        }
    }

    #[inline]
    pub fn eval(&self, g_hat_sq: f64) -> f64 {
        if g_hat_sq == 0.0 || self.num == 0.0 {
            return 0.0;
        }
        self.num * g_hat_sq / (self.lin * g_hat_sq + self.constant)
    }

    /// Limit of the SINR as the channel power grows without bound.
    pub fn ceiling(&self) -> f64 {
        if self.lin > 0.0 {
            self.num / self.lin
        } else {
            f64::INFINITY
        }
    }
}

/// SINR of `stream` at `user` for an estimated channel power `g_hat_sq`.
pub fn instantaneous_sinr(
    config: &SystemConfig,
    user: usize,
    stats: &LinkStats,
    g_hat_sq: f64,
    stream: Stream,
) -> Result<f64> {
    config.check_user(user)?;
    if !(g_hat_sq >= 0.0) {
        return Err(Error::Domain {
            function: "instantaneous_sinr",
            value: g_hat_sq,
        });
    }
    Ok(StreamSinr::new(config, user, stats, stream).eval(g_hat_sq))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal_stats(rho: f64, omega: f64) -> LinkStats {
        LinkStats {
            rho,
            omega_total: omega,
            omega_err: 0.0,
            omega_hat: omega,
            m: 4.0,
        }
    }

    #[test]
    fn table1_is_valid() {
        let cfg = validate_config(SystemConfig::table1()).unwrap();
        assert_eq!(cfg, SystemConfig::table1());
    }

    #[test]
    fn power_split_must_sum_to_one() {
        let mut cfg = SystemConfig::table1();
        cfg.beta_private = vec![0.25, 0.25];
        match cfg.validate() {
            Err(Error::PowerSplit { sum }) => assert!((sum - 1.1).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn list_lengths_are_checked() {
        let mut cfg = SystemConfig::table1();
        cfg.m = vec![4.0];
        assert_eq!(
            cfg.validate(),
            Err(Error::DimensionMismatch {
                field: "m",
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    #[allow(clippy::type_complexity)]
    fn ranges_are_checked() {
        let cases: Vec<(Box<dyn Fn(&mut SystemConfig)>, &str)> = vec![
            (Box::new(|c| c.phi[1] = 1.5), "phi"),
            (Box::new(|c| c.kappa_t_sq = -0.1), "kappa_t_sq"),
            (Box::new(|c| c.distance_m[0] = 0.0), "distance_m"),
            (Box::new(|c| c.m[0] = 0.3), "m"),
            (Box::new(|c| c.xi[0] = 0.0), "xi"),
            (Box::new(|c| c.xi[0] = f64::NAN), "xi"),
        ];
        for (mutate, key) in cases {
            let mut cfg = SystemConfig::table1();
            mutate(&mut cfg);
            let err = cfg.validate().unwrap_err();
            assert_eq!(err.offending_keys(), vec![key], "{err}");
        }
    }

    #[test]
    fn perfect_csir_has_no_estimation_error() {
        let cfg = SystemConfig::table1();
        for p in [-20.0, 0.0, 30.0] {
            let s = derive_link_stats(&cfg, 0, p).unwrap();
            assert_eq!(s.omega_err, 0.0);
            assert_eq!(s.omega_hat, s.omega_total);
        }
    }

    #[test]
    fn symmetric_estimation_error() {
        let mut cfg = SystemConfig::table1();
        // distance 1 m gives omega = 1; rho = 1 at P = noise.
        cfg.distance_m = vec![1.0, 1.0];
        cfg.xi = vec![1.0, 1.0];
        let s = derive_link_stats(&cfg, 0, cfg.noise_dbm).unwrap();
        assert_eq!(s.rho, 1.0);
        assert!((s.omega_err - 0.5).abs() < 1e-15);
        assert!((s.omega_hat - 0.5).abs() < 1e-15);
    }

    #[test]
    fn path_gain_matches_reference_values() {
        // 40-digit evaluations of 135^-3.6 and 120^-3.6.
        let cfg = SystemConfig::table1();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(rel(cfg.path_gain(0), 2.141896264484805e-8) < 1e-13);
        assert!(rel(cfg.path_gain(1), 3.273011371789725e-8) < 1e-13);
    }

    #[test]
    fn zero_power_coefficients() {
        let mut cfg = SystemConfig::table1();
        cfg.xi = vec![0.8, 0.8];
        let stats = LinkStats {
            rho: 0.0,
            ..ideal_stats(0.0, 1.0)
        };
        let c = rsma_coefficients(&cfg, 0, &stats).unwrap();
        assert_eq!((c.c1, c.c2, c.a1, c.b1), (0.0, 0.0, 0.0, 0.0));
        assert_eq!((c.a2, c.b2), (1.0, 1.0));
    }

    #[test]
    fn hand_computed_coefficients() {
        let cfg = SystemConfig::table1();
        let c = rsma_coefficients(&cfg, 0, &ideal_stats(10.0, 1.0)).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(c.c1, 6.0));
        assert!(close(c.a1, 4.0));
        assert_eq!(c.a2, 1.0);
        assert!(close(c.c2, 2.5));
        assert!(close(c.b1, 1.5));
        assert_eq!(c.b2, 1.0);
        assert!(close(c.d1, 4.0));
    }

    #[test]
    fn coefficients_match_direct_evaluation() {
        // Reference config at 20 dBm with xi = 0.8, every impairment on, re-evaluated
        // from the definitions with literal constants.
        let mut cfg = SystemConfig::table1();
        cfg.xi = vec![0.8, 0.8];
        cfg.phi = vec![0.1, 0.2];
        cfg.kappa_t_sq = 0.05;
        cfg.kappa_r_sq = vec![0.03, 0.07];
        let stats = derive_link_stats(&cfg, 1, 20.0).unwrap();
        let rho = 1e9;
        let omega = 120f64.powf(-3.6);
        let err = omega / (1.0 + rho * 0.8 * omega);
        let c = rsma_coefficients(&cfg, 1, &stats).unwrap();
        let rel = |a: f64, b: f64| ((a - b) / b).abs() < 1e-12;
        assert!(rel(stats.rho, rho));
        assert!(rel(c.c1, rho * 0.6));
        assert!(rel(c.a1, rho * (0.4 + 0.07 + 0.05)));
        assert!(rel(c.a2, rho * err * (1.0 + 0.07 + 0.05) + 1.0));
        assert!(rel(c.c2, rho * 0.15));
        assert!(rel(c.b1, rho * (0.25 + 0.2 * 0.6 + 0.07 + 0.05)));
        assert!(rel(c.b2, rho * err * (0.2 * 0.6 + 0.4 + 0.07 + 0.05) + 1.0));
        assert!(rel(c.d1, 4.0 / (omega - err)));
    }

    #[test]
    fn degenerate_estimate_is_an_error() {
        let cfg = SystemConfig::table1();
        let stats = LinkStats {
            omega_hat: 0.0,
            ..ideal_stats(1.0, 1.0)
        };
        assert_eq!(
            rsma_coefficients(&cfg, 1, &stats),
            Err(Error::DegenerateChannel { user: 1 })
        );
    }

    #[test]
    fn hand_computed_sinr() {
        let cfg = SystemConfig::table1();
        let stats = ideal_stats(10.0, 1.0);
        let common = instantaneous_sinr(&cfg, 0, &stats, 1.0, Stream::Common).unwrap();
        let private = instantaneous_sinr(&cfg, 0, &stats, 1.0, Stream::Private).unwrap();
        assert!((common - 1.2).abs() < 1e-12);
        assert!((private - 1.0).abs() < 1e-12);
        for stream in [Stream::Common, Stream::Private] {
            assert_eq!(instantaneous_sinr(&cfg, 0, &stats, 0.0, stream).unwrap(), 0.0);
        }
        assert!(instantaneous_sinr(&cfg, 0, &stats, -1.0, Stream::Common).is_err());
    }

    #[test]
    fn sinr_agrees_with_coefficient_form() {
        let mut cfg = SystemConfig::table1();
        cfg.xi = vec![0.3, 2.0];
        cfg.phi = vec![0.4, 0.1];
        cfg.kappa_t_sq = 0.02;
        cfg.kappa_r_sq = vec![0.1, 0.05];
        for user in 0..2 {
            let stats = derive_link_stats(&cfg, user, 12.0).unwrap();
            let c = rsma_coefficients(&cfg, user, &stats).unwrap();
            for x in [1e-10, 3e-8, 1e-6] {
                let gc = instantaneous_sinr(&cfg, user, &stats, x, Stream::Common).unwrap();
                let gp = instantaneous_sinr(&cfg, user, &stats, x, Stream::Private).unwrap();
                let rc = c.c1 * x / (c.a1 * x + c.a2);
                let rp = c.c2 * x / (c.b1 * x + c.b2);
                assert!(((gc - rc) / rc).abs() < 1e-13);
                assert!(((gp - rp) / rp).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn ideal_coefficients_match_general_path_bitwise() {
        let cfg = SystemConfig::table1();
        for user in 0..2 {
            for p in [0.0, 13.0, 28.0] {
                let stats = derive_link_stats(&cfg, user, p).unwrap();
                let general = rsma_coefficients(&cfg, user, &stats).unwrap();
                let ideal = ideal_coefficients(&cfg, user, stats.rho).unwrap();
                assert_eq!(general, ideal);
            }
        }
    }
}
