//! Monte-Carlo estimators of the ergodic rates.
//!
//! Estimated channel powers are drawn from `Gamma(m, omega_hat / m)` and pushed
//! through the instantaneous SINR. Both the exact `log2(1 + γ)` rate and the
//! `2γ / ((2 + γ) ln 2)` approximation are accumulated from the same draws.
//!
//! Every estimate is split into fixed-size blocks. Block `b` of the substream
//! identified by `(transmit power, user, stream)` is a ChaCha8 generator with
//! the master seed as key and a hash of the identifier and `b` as stream id, so
//! results do not depend on how blocks are scheduled across threads. Blocks are
//! reduced in index order.

use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derive_link_stats, LinkStats, Stream, StreamSinr, SystemConfig};

/// Smallest accepted sample count.
pub const MIN_SAMPLES: u64 = 1000;

const BLOCK_SAMPLES: u64 = 1 << 15;

/// Substream domain of the SINR-formula estimators.
pub const DOMAIN_SINR: u64 = 0x5253_4d41_5349_4e52;
const DOMAIN_FULL_MODEL: u64 = 0x5253_4d41_4655_4c4c;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McMode {
    ExactLog,
    TopsoeApprox,
}

impl McMode {
    #[inline]
    pub fn rate(self, sinr: f64) -> f64 {
        match self {
            McMode::ExactLog => exact_rate(sinr),
            McMode::TopsoeApprox => approx_rate(sinr),
        }
    }
}

#[inline]
fn exact_rate(sinr: f64) -> f64 {
    sinr.ln_1p() / LN_2
}

#[inline]
fn approx_rate(sinr: f64) -> f64 {
    2.0 * sinr / ((2.0 + sinr) * LN_2)
}

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub stderr: f64,
    pub n_samples: u64,
    pub mode: McMode,
    pub seed: u64,
    /// The simulated channel was identically zero.
    pub degenerate: bool,
    /// Average instantaneous SINR over the draws (largest over the
    /// constituent streams for a user rate).
    pub mean_sinr: f64,
}

impl McEstimate {
    fn zero(n_samples: u64, mode: McMode, seed: u64, degenerate: bool) -> Self {
        McEstimate {
            mean: 0.0,
            stderr: 0.0,
            n_samples,
            mode,
            seed,
            degenerate,
            mean_sinr: 0.0,
        }
    }

    /// Sum of two independent estimates.
    pub fn plus(&self, other: &McEstimate) -> McEstimate {
        McEstimate {
            mean: self.mean + other.mean,
            stderr: self.stderr.hypot(other.stderr),
            n_samples: self.n_samples,
            mode: self.mode,
            seed: self.seed,
            degenerate: self.degenerate || other.degenerate,
            mean_sinr: self.mean_sinr.max(other.mean_sinr),
        }
    }
}

/// Both rate modes estimated from one set of draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub exact: McEstimate,
    pub approx: McEstimate,
}

impl RatePair {
    pub fn get(&self, mode: McMode) -> McEstimate {
        match mode {
            McMode::ExactLog => self.exact,
            McMode::TopsoeApprox => self.approx,
        }
    }

    fn plus(&self, other: &RatePair) -> RatePair {
        RatePair {
            exact: self.exact.plus(&other.exact),
            approx: self.approx.plus(&other.approx),
        }
    }
}

/// Running mean and centred second moment (Welford), mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Gamma variates by Marsaglia and Tsang's squeeze/rejection method. Shapes
/// below one draw with shape + 1 and scale by `U^(1/shape)`.
#[derive(Debug, Clone, Copy)]
pub struct GammaSampler {
    scale: f64,
    d: f64,
    c: f64,
    inv_shape: Option<f64>,
}

impl GammaSampler {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::Domain {
                function: "GammaSampler (shape)",
                value: shape,
            });
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Domain {
                function: "GammaSampler (scale)",
                value: scale,
            });
        }
        let (boosted, inv_shape) = if shape < 1.0 {
            (shape + 1.0, Some(1.0 / shape))
        } else {
            (shape, None)
        };
        let d = boosted - 1.0 / 3.0;
        Ok(GammaSampler {
            scale,
            d,
            c: 1.0 / (9.0 * d).sqrt(),
            inv_shape,
        })
    }

    /// Gamma law with shape `m` and mean `mean`.
    pub fn with_mean(m: f64, mean: f64) -> Result<Self> {
        GammaSampler::new(m, mean / m)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let unit = loop {
            let x: f64 = rng.sample(StandardNormal);
            let t = 1.0 + self.c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u: f64 = rng.random();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                break self.d * v;
            }
            if u.ln() < 0.5 * x2 + self.d * (1.0 - v + v.ln()) {
                break self.d * v;
            }
        };
        let unit = match self.inv_shape {
            Some(inv) => {
                let u: f64 = rng.random();
                unit * u.powf(inv)
            }
            None => unit,
        };
        unit * self.scale
    }
}

/// One draw of the estimated channel power `|ĝ|^2 ~ Gamma(m, omega_hat / m)`.
pub fn sample_channel_power<R: Rng + ?Sized>(m: f64, omega_hat: f64, rng: &mut R) -> Result<f64> {
    Ok(GammaSampler::with_mean(m, omega_hat)?.sample(rng))
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Identifier of an independent random substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubstreamKey {
    pub domain: u64,
    pub point: u64,
    pub user: u64,
    pub stream: u64,
}

impl SubstreamKey {
    pub fn new(domain: u64, tx_power_dbm: f64, user: usize, stream: u64) -> Self {
        SubstreamKey {
            domain,
            point: tx_power_dbm.to_bits(),
            user: user as u64,
            stream,
        }
    }

    fn stream_id(&self, block: u64) -> u64 {
        let mut h = mix64(self.domain ^ 0x9e37_79b9_7f4a_7c15);
        for word in [self.point, self.user, self.stream, block] {
            h = mix64(h ^ word.wrapping_add(0x9e37_79b9_7f4a_7c15));
        }
        h
    }

    /// Generator for block `block` of this substream.
    pub fn rng(&self, seed: u64, block: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self.stream_id(block));
        rng
    }
}

fn stream_tag(stream: Stream) -> u64 {
    match stream {
        Stream::Common => 0,
        Stream::Private => 1,
    }
}

fn check_samples(n_samples: u64) -> Result<()> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "n_samples = {n_samples}, at least {MIN_SAMPLES} required"
        )));
    }
    Ok(())
}

fn block_len(n_samples: u64, block: u64) -> u64 {
    BLOCK_SAMPLES.min(n_samples - block * BLOCK_SAMPLES)
}

fn n_blocks(n_samples: u64) -> u64 {
    n_samples.div_ceil(BLOCK_SAMPLES)
}

#[derive(Debug, Clone, Copy, Default)]
struct RateAccumulator {
    exact: Moments,
    approx: Moments,
    sinr_sum: f64,
}

impl RateAccumulator {
    #[inline]
    fn push(&mut self, sinr: f64) {
        self.exact.push(exact_rate(sinr));
        self.approx.push(approx_rate(sinr));
        self.sinr_sum += sinr;
    }

    fn merge(&mut self, other: &RateAccumulator) {
        self.exact.merge(&other.exact);
        self.approx.merge(&other.approx);
        self.sinr_sum += other.sinr_sum;
    }

    fn finish(&self, seed: u64) -> RatePair {
        let mean_sinr = self.sinr_sum / self.exact.n as f64;
        let make = |m: &Moments, mode| McEstimate {
            mean: m.mean,
            stderr: m.stderr(),
            n_samples: m.n,
            mode,
            seed,
            degenerate: false,
            mean_sinr,
        };
        RatePair {
            exact: make(&self.exact, McMode::ExactLog),
            approx: make(&self.approx, McMode::TopsoeApprox),
        }
    }
}

fn zero_pair(n_samples: u64, seed: u64, degenerate: bool) -> RatePair {
    RatePair {
        exact: McEstimate::zero(n_samples, McMode::ExactLog, seed, degenerate),
        approx: McEstimate::zero(n_samples, McMode::TopsoeApprox, seed, degenerate),
    }
}

/// Estimates `E[log2(1 + γ(x))]` and `E[2γ / ((2 + γ) ln 2)]` for
/// `x ~ Gamma(m, omega_hat / m)`.
///
/// A zero `omega_hat` is the zero channel: the result is a zero estimate with
/// `degenerate` set.
pub fn estimate_rates<F>(
    m: f64,
    omega_hat: f64,
    sinr: F,
    n_samples: u64,
    seed: u64,
    key: SubstreamKey,
) -> Result<RatePair>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_samples(n_samples)?;
    if omega_hat == 0.0 {
        return Ok(zero_pair(n_samples, seed, true));
    }
    let sampler = GammaSampler::with_mean(m, omega_hat)?;
    let blocks: Vec<RateAccumulator> = (0..n_blocks(n_samples))
        .into_par_iter()
        .map(|block| {
            let mut rng = key.rng(seed, block);
            let mut acc = RateAccumulator::default();
            for _ in 0..block_len(n_samples, block) {
                acc.push(sinr(sampler.sample(&mut rng)));
            }
            acc
        })
        .collect();
    let mut total = RateAccumulator::default();
    for b in &blocks {
        total.merge(b);
    }
    Ok(total.finish(seed))
}

/// Both rate modes of one stream at one user, from the same draws.
pub fn mc_stream_rates(
    config: &SystemConfig,
    user: usize,
    tx_power_dbm: f64,
    stream: Stream,
    n_samples: u64,
    seed: u64,
) -> Result<RatePair> {
    check_samples(n_samples)?;
    let stats = derive_link_stats(config, user, tx_power_dbm)?;
    let sinr = StreamSinr::new(config, user, &stats, stream);
    if sinr.num == 0.0 {
        return Ok(zero_pair(n_samples, seed, stats.omega_hat == 0.0));
    }
    let key = SubstreamKey::new(DOMAIN_SINR, tx_power_dbm, user, stream_tag(stream));
    estimate_rates(stats.m, stats.omega_hat, |x| sinr.eval(x), n_samples, seed, key)
}

/// Monte-Carlo rate of one stream at one user.
pub fn mc_stream_rate(
    config: &SystemConfig,
    user: usize,
    tx_power_dbm: f64,
    stream: Stream,
    mode: McMode,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    Ok(mc_stream_rates(config, user, tx_power_dbm, stream, n_samples, seed)?.get(mode))
}

/// Per-user rates of every user in both modes.
///
/// The common part is the per-user common-stream estimate with the smallest
/// mean (chosen separately per mode); its standard error is combined with the
/// private one as if the minimising user were known, which ignores the
/// selection effect of the minimum.
pub fn mc_user_rates_all(
    config: &SystemConfig,
    tx_power_dbm: f64,
    n_samples: u64,
    seed: u64,
) -> Result<Vec<RatePair>> {
    check_samples(n_samples)?;
    let common = (0..config.n_users)
        .map(|u| mc_stream_rates(config, u, tx_power_dbm, Stream::Common, n_samples, seed))
        .collect::<Result<Vec<_>>>()?;
    let min_common = RatePair {
        exact: argmin(common.iter().map(|p| p.exact)),
        approx: argmin(common.iter().map(|p| p.approx)),
    };
    (0..config.n_users)
        .map(|u| {
            let private = mc_stream_rates(config, u, tx_power_dbm, Stream::Private, n_samples, seed)?;
            Ok(min_common.plus(&private))
        })
        .collect()
}

fn argmin(estimates: impl Iterator<Item = McEstimate>) -> McEstimate {
    estimates
        .reduce(|best, e| if e.mean < best.mean { e } else { best })
        .expect("at least one user")
}

/// Monte-Carlo ergodic rate of `user` (common minimum plus private).
pub fn mc_user_rate(
    config: &SystemConfig,
    user: usize,
    tx_power_dbm: f64,
    mode: McMode,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    config.check_user(user)?;
    Ok(mc_user_rates_all(config, tx_power_dbm, n_samples, seed)?[user].get(mode))
}

/// Exact-rate estimate from the symbol-level received-signal simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullModelEstimate {
    pub estimate: McEstimate,
    /// Simulated residual power after removing the desired term, divided by
    /// the interference-plus-noise power used in the SINR. Tends to one.
    pub residual_power_ratio: f64,
}

/// Transmitted and distortion sources in the received signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Common,
    Private(usize),
    TxDistortion,
    RxDistortion,
}

/// Channel factor multiplying a source: `g = ĝ + g_e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Factor {
    Estimate,
    Error,
}

#[derive(Debug, Clone, Copy)]
struct Component {
    source: Source,
    factor: Factor,
    /// Source variance (transmit power units, noise normalised to one).
    variance: f64,
    /// Amplitude left after successive interference cancellation.
    gain: f64,
}

/// Received-signal decomposition at one user for decoding one stream.
///
/// The signal is `y = (ĝ + g_e)(x + η_t + η_r) + w` with
/// `x = sqrt(ρ β_c) x_c + Σ_j sqrt(ρ β_j) x_j`. For the private stream the
/// common stream has been cancelled down to a residual amplitude `sqrt(φ)`.
/// The receiver knows `ĝ` only, so terms carried by `g_e` are charged their
/// conditional mean power `Ω_gne × variance`.
struct ReceivedSignal {
    components: Vec<Component>,
    target: Source,
    omega_err: f64,
}

impl ReceivedSignal {
    fn new(config: &SystemConfig, user: usize, stats: &LinkStats, stream: Stream) -> Self {
        let rho = stats.rho;
        let mut sources = vec![(Source::Common, rho * config.beta_common)];
        sources.extend(
            config
                .beta_private
                .iter()
                .enumerate()
                .map(|(j, b)| (Source::Private(j), rho * b)),
        );
        sources.push((Source::TxDistortion, rho * config.kappa_t_sq));
        sources.push((Source::RxDistortion, rho * config.kappa_r_sq[user]));

        let (target, common_gain) = match stream {
            Stream::Common => (Source::Common, 1.0),
            Stream::Private => (Source::Private(user), config.phi[user].sqrt()),
        };
        let mut components = Vec::with_capacity(2 * sources.len());
        for factor in [Factor::Estimate, Factor::Error] {
            for &(source, variance) in &sources {
                let gain = if source == Source::Common { common_gain } else { 1.0 };
                components.push(Component {
                    source,
                    factor,
                    variance,
                    gain,
                });
            }
        }
        ReceivedSignal {
            components,
            target,
            omega_err: stats.omega_err,
        }
    }

    fn is_desired(&self, c: &Component) -> bool {
        c.source == self.target && c.factor == Factor::Estimate
    }

    /// Desired and interference-plus-noise power given `|ĝ|^2`.
    fn powers(&self, g_hat_sq: f64) -> (f64, f64) {
        let mut desired = 0.0;
        let mut other = 1.0;
        for c in &self.components {
            let channel_power = match c.factor {
                Factor::Estimate => g_hat_sq,
                Factor::Error => self.omega_err,
            };
            let p = channel_power * c.gain * c.gain * c.variance;
            if self.is_desired(c) {
                desired += p;
            } else {
                other += p;
            }
        }
        (desired, other)
    }
}

#[inline]
fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

#[derive(Debug, Clone, Copy, Default)]
struct FullModelAccumulator {
    rates: Moments,
    sinr_sum: f64,
    residual_sim: f64,
    residual_pred: f64,
}

fn full_model_stream(
    config: &SystemConfig,
    user: usize,
    tx_power_dbm: f64,
    stream: Stream,
    n_samples: u64,
    seed: u64,
) -> Result<FullModelEstimate> {
    let stats = derive_link_stats(config, user, tx_power_dbm)?;
    if stats.omega_hat == 0.0 {
        return Ok(FullModelEstimate {
            estimate: McEstimate::zero(n_samples, McMode::ExactLog, seed, true),
            residual_power_ratio: 1.0,
        });
    }
    let signal = ReceivedSignal::new(config, user, &stats, stream);
    let sampler = GammaSampler::with_mean(stats.m, stats.omega_hat)?;
    let key = SubstreamKey::new(DOMAIN_FULL_MODEL, tx_power_dbm, user, stream_tag(stream));
    let n_sources = config.n_users + 3;

    let blocks: Vec<FullModelAccumulator> = (0..n_blocks(n_samples))
        .into_par_iter()
        .map(|block| {
            let mut rng = key.rng(seed, block);
            let mut acc = FullModelAccumulator::default();
            let mut symbols = vec![Complex64::new(0.0, 0.0); n_sources];
            for _ in 0..block_len(n_samples, block) {
                let g_hat_sq = sampler.sample(&mut rng);
                let phase: f64 = rng.random::<f64>() * TAU;
                let g_hat = Complex64::from_polar(g_hat_sq.sqrt(), phase);
                let g_err = complex_normal(&mut rng, signal.omega_err);
                for s in symbols.iter_mut() {
                    *s = complex_normal(&mut rng, 1.0);
                }
                let noise = complex_normal(&mut rng, 1.0);

                let mut residual = noise;
                for c in &signal.components {
                    let symbol = symbols[source_index(c.source, config.n_users)];
                    let channel = match c.factor {
                        Factor::Estimate => g_hat,
                        Factor::Error => g_err,
                    };
                    let term = channel * symbol * (c.gain * c.variance.sqrt());
                    if !signal.is_desired(c) {
                        residual += term;
                    }
                }
                let (desired, other) = signal.powers(g_hat_sq);
                let sinr = desired / other;
                acc.rates.push(exact_rate(sinr));
                acc.sinr_sum += sinr;
                acc.residual_sim += residual.norm_sqr();
                acc.residual_pred += other;
            }
            acc
        })
        .collect();

    let mut total = FullModelAccumulator::default();
    for b in &blocks {
        total.rates.merge(&b.rates);
        total.sinr_sum += b.sinr_sum;
        total.residual_sim += b.residual_sim;
        total.residual_pred += b.residual_pred;
    }
    Ok(FullModelEstimate {
        estimate: McEstimate {
            mean: total.rates.mean,
            stderr: total.rates.stderr(),
            n_samples: total.rates.n,
            mode: McMode::ExactLog,
            seed,
            degenerate: false,
            mean_sinr: total.sinr_sum / total.rates.n as f64,
        },
        residual_power_ratio: total.residual_sim / total.residual_pred,
    })
}

fn source_index(source: Source, n_users: usize) -> usize {
    match source {
        Source::Common => 0,
        Source::Private(j) => 1 + j,
        Source::TxDistortion => 1 + n_users,
        Source::RxDistortion => 2 + n_users,
    }
}

/// Full-model exact rates of every user.
pub fn mc_full_model_rates(
    config: &SystemConfig,
    tx_power_dbm: f64,
    n_samples: u64,
    seed: u64,
) -> Result<Vec<FullModelEstimate>> {
    check_samples(n_samples)?;
    let common = (0..config.n_users)
        .map(|u| full_model_stream(config, u, tx_power_dbm, Stream::Common, n_samples, seed))
        .collect::<Result<Vec<_>>>()?;
    let min_common = common
        .iter()
        .copied()
        .reduce(|best, e| if e.estimate.mean < best.estimate.mean { e } else { best })
        .expect("at least one user");
    (0..config.n_users)
        .map(|u| {
            let private = full_model_stream(config, u, tx_power_dbm, Stream::Private, n_samples, seed)?;
            Ok(FullModelEstimate {
                estimate: min_common.estimate.plus(&private.estimate),
                residual_power_ratio: private.residual_power_ratio,
            })
        })
        .collect()
}

/// Exact ergodic rate of `user` simulated from the received-signal model.
pub fn mc_full_model_rate(
    config: &SystemConfig,
    user: usize,
    tx_power_dbm: f64,
    n_samples: u64,
    seed: u64,
) -> Result<FullModelEstimate> {
    config.check_user(user)?;
    Ok(mc_full_model_rates(config, tx_power_dbm, n_samples, seed)?[user])
}
