//! Sweep evaluation.

use rayon::prelude::*;
use rsma_core::analytic::energy_efficiency_of;
use rsma_core::montecarlo::{mc_user_rates_all, RatePair};
use rsma_core::noma::{mc_noma_rate, noma_rates};
use rsma_core::{jains_fairness, rate_report, McMode, NomaConfig};

use crate::error::{CliError, Result};
use crate::scenario::{apply_sweep, Metric, Scenario, Scheme, SweepParameter};

/// Mean SINR above which the closed-form approximation is expected to drift
/// from the exact rate.
pub const APPROX_SINR_LIMIT: f64 = 3.0;

/// One (scheme, variant, user, grid point) record. `None` is an unrequested
/// or unavailable value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub variant: String,
    /// 1-based.
    pub user: usize,
    pub value: f64,
    pub closed_form_rate: Option<f64>,
    pub mc_approx_mean: Option<f64>,
    pub mc_approx_stderr: Option<f64>,
    pub mc_exact_mean: Option<f64>,
    pub mc_exact_stderr: Option<f64>,
    pub sum_rate: Option<f64>,
    pub ee: Option<f64>,
    pub jfi: Option<f64>,
    /// Simulated mean SINR exceeded [`APPROX_SINR_LIMIT`].
    pub approx_caveat: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub monte_carlo: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { monte_carlo: true }
    }
}

/// Closed-form and simulated rates of every user at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEvaluation {
    pub tx_power_dbm: f64,
    pub closed_form: Vec<f64>,
    /// Per-user common/private split; RSMA only.
    pub split: Option<Vec<(f64, f64)>>,
    pub simulated: Option<Vec<RatePair>>,
    pub circuit_power_w: f64,
}

impl PointEvaluation {
    pub fn sum_rate(&self) -> f64 {
        self.closed_form.iter().sum()
    }

    pub fn ee(&self) -> f64 {
        energy_efficiency_of(self.sum_rate(), self.tx_power_dbm, self.circuit_power_w)
    }

    /// Undefined (None) when every rate is zero.
    pub fn jfi(&self) -> Option<f64> {
        jains_fairness(&self.closed_form).ok()
    }
}

/// Evaluates one scheme of one variant at a grid value.
pub fn evaluate_point(
    scenario: &Scenario,
    scheme: Scheme,
    variant: usize,
    value: f64,
    options: RunOptions,
) -> Result<PointEvaluation> {
    let v = &scenario.variants[variant];
    let p = scenario.sweep.power_at(value);
    let mc = &scenario.mc;
    let numeric = |source| CliError::Numeric {
        point: format!(
            "scheme {} variant `{}` {} = {value}",
            scheme.name(),
            v.label,
            scenario.sweep.parameter.name()
        ),
        source,
    };
    match scheme {
        Scheme::Rsma => {
            let cfg = apply_sweep(&v.rsma, scenario.sweep.parameter, value);
            let report = rate_report(&cfg, p).map_err(numeric)?;
            let simulated = if options.monte_carlo {
                Some(mc_user_rates_all(&cfg, p, mc.n_samples, mc.seed).map_err(numeric)?)
            } else {
                None
            };
            Ok(PointEvaluation {
                tx_power_dbm: p,
                closed_form: report.totals(),
                split: Some(report.users.iter().map(|u| (u.common_rate, u.private_rate)).collect()),
                simulated,
                circuit_power_w: cfg.circuit_power_w,
            })
        }
        Scheme::Noma => {
            let base = v.noma.as_ref().expect("noma config resolved with the scenario");
            let cfg = NomaConfig {
                system: apply_sweep(&base.system, scenario.sweep.parameter, value),
                alpha_far: base.alpha_far,
            };
            let closed_form = noma_rates(&cfg, p).map_err(numeric)?;
            let simulated = if options.monte_carlo {
                Some(
                    (0..2)
                        .map(|u| mc_noma_rate(&cfg, u, p, mc.n_samples, mc.seed))
                        .collect::<rsma_core::Result<Vec<_>>>()
                        .map_err(numeric)?,
                )
            } else {
                None
            };
            Ok(PointEvaluation {
                tx_power_dbm: p,
                closed_form,
                split: None,
                simulated,
                circuit_power_w: cfg.system.circuit_power_w,
            })
        }
    }
}

fn rows_of(scenario: &Scenario, scheme: Scheme, variant: usize, value: f64, eval: &PointEvaluation) -> Vec<SweepRow> {
    let rate = scenario.wants(Metric::Rate);
    let want_mode = |mode| rate && scenario.mc.wants(mode);
    let sum_rate = scenario.wants(Metric::SumRate).then(|| eval.sum_rate());
    let ee = scenario.wants(Metric::Ee).then(|| eval.ee());
    let jfi = if scenario.wants(Metric::Jfi) { eval.jfi() } else { None };
    (0..eval.closed_form.len())
        .map(|u| {
            let sim = eval.simulated.as_ref().map(|s| s[u]);
            let pick = |mode: McMode| sim.filter(|_| want_mode(mode)).map(|s| s.get(mode));
            let approx = pick(McMode::TopsoeApprox);
            let exact = pick(McMode::ExactLog);
            SweepRow {
                scheme,
                variant: scenario.variants[variant].label.clone(),
                user: u + 1,
                value,
                closed_form_rate: rate.then(|| eval.closed_form[u]),
                mc_approx_mean: approx.map(|e| e.mean),
                mc_approx_stderr: approx.map(|e| e.stderr),
                mc_exact_mean: exact.map(|e| e.mean),
                mc_exact_stderr: exact.map(|e| e.stderr),
                sum_rate,
                ee,
                jfi,
                approx_caveat: sim.map(|s| s.exact.mean_sinr > APPROX_SINR_LIMIT),
            }
        })
        .collect()
}

/// Evaluates every requested scheme, variant and grid point.
///
/// Rows are ordered by scheme, variant (file order), user, then grid value,
/// whatever order the points were computed in.
pub fn run_sweep(scenario: &Scenario, options: RunOptions) -> Result<SweepResult> {
    let grid = scenario.sweep.grid();
    let mut tasks = Vec::new();
    for &scheme in &scenario.schemes {
        for variant in 0..scenario.variants.len() {
            for (g, &value) in grid.iter().enumerate() {
                tasks.push((scheme, variant, g, value));
            }
        }
    }
    let evaluated: Vec<Vec<SweepRow>> = tasks
        .par_iter()
        .map(|&(scheme, variant, _, value)| {
            let eval = evaluate_point(scenario, scheme, variant, value, options)?;
            Ok(rows_of(scenario, scheme, variant, value, &eval))
        })
        .collect::<Result<_>>()?;

    let mut keyed: Vec<((Scheme, usize, usize, usize), SweepRow)> = tasks
        .iter()
        .zip(evaluated)
        .flat_map(|(&(scheme, variant, g, _), rows)| {
            rows.into_iter().map(move |r| ((scheme, variant, r.user, g), r))
        })
        .collect();
    keyed.sort_by_key(|(k, _)| *k);
    Ok(SweepResult {
        parameter: scenario.sweep.parameter,
        rows: keyed.into_iter().map(|(_, r)| r).collect(),
    })
}
