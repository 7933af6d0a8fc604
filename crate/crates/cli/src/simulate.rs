//! Batch runners behind the simulation subcommands.
//!
//! Seeds for every phase are derived from the master seed and a label that
//! depends only on the scenario content, so results do not change when a
//! pack is reordered or filtered.

use std::collections::HashMap;

use anyhow::{Context, Result};
use casecontrol::montecarlo::{
    calibrate_f2, derive_seed, estimate_critical_values, estimate_power, max_null_correlation,
    mean_correlation_matrix, normal_approx_critical_max, pvalue_crosstab, Calibration, CalibrationSettings,
    CriticalValueSet, CrossTabSettings, MeanCorrelations, NullKey, PValueCrossTab, PowerRow, Scenario, Statistic,
    StatisticBattery,
};
use casecontrol::robust::Sidedness;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::scenarios::{ModelSpec, ScenarioPack};

/// Replicate counts and levels shared by the simulation subcommands.
#[derive(Debug, Clone, Serialize)]
pub struct RunSettings {
    pub battery: StatisticBattery,
    pub alpha: f64,
    pub null_replicates: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl RunSettings {
    pub fn sidedness(&self) -> Sidedness {
        self.battery.sidedness()
    }
}

fn key_label(key: &NullKey) -> String {
    serde_json::to_string(key).expect("null keys serialize")
}

/// Fills in penetrances of calibrated scenarios. Scenarios that calibrate
/// the same model under the same null share one calibration.
pub fn resolve_calibrations(
    pack: &mut ScenarioPack,
    settings: &RunSettings,
    calibration_replicates: usize,
) -> Result<Vec<(String, Calibration)>> {
    let mut cache: HashMap<String, Calibration> = HashMap::new();
    let mut out = Vec::new();
    for entry in &mut pack.entries {
        let ModelSpec::Calibrate { model, f0, target } = entry.model else {
            continue;
        };
        let s = &entry.scenario;
        let label = format!(
            "calibrate/{model}/{f0}/{target}/{}/{}/{}",
            key_label(&s.null_key()),
            settings.sidedness(),
            settings.alpha
        );
        let calibration = match cache.get(&label) {
            Some(c) => *c,
            None => {
                let cal_settings = CalibrationSettings {
                    target,
                    alpha: settings.alpha,
                    null_replicates: settings.null_replicates,
                    power_replicates: calibration_replicates,
                    seed: derive_seed(settings.seed, &label),
                    ..Default::default()
                };
                let c = calibrate_f2(model, f0, s, settings.sidedness(), &cal_settings)
                    .with_context(|| format!("calibrating scenario `{}`", s.id))?;
                cache.insert(label, c);
                c
            }
        };
        entry.scenario.penetrance = Some(calibration.penetrance);
        out.push((entry.scenario.id.clone(), calibration));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioPower {
    pub scenario: Scenario,
    pub criticals: CriticalValueSet,
    pub power: PowerRow,
}

/// Critical values (shared between scenarios with the same null) and power
/// for every scenario in pack order. Penetrances must already be resolved.
pub fn run_power(pack: &ScenarioPack, settings: &RunSettings) -> Result<Vec<ScenarioPower>> {
    let mut nulls: HashMap<String, CriticalValueSet> = HashMap::new();
    let mut out = Vec::with_capacity(pack.entries.len());
    for entry in &pack.entries {
        let scenario = &entry.scenario;
        let label = format!("null/{}", key_label(&scenario.null_key()));
        if !nulls.contains_key(&label) {
            let cv = estimate_critical_values(
                scenario,
                &settings.battery,
                settings.null_replicates,
                settings.alpha,
                derive_seed(settings.seed, &label),
            )
            .with_context(|| format!("null simulation for scenario `{}`", scenario.id))?;
            nulls.insert(label.clone(), cv);
        }
        let criticals = nulls[&label].clone();
        let power = estimate_power(
            scenario,
            &settings.battery,
            &criticals,
            settings.replicates,
            derive_seed(settings.seed, &format!("power/{}", scenario.id)),
        )
        .with_context(|| format!("power for scenario `{}`", scenario.id))?;
        out.push(ScenarioPower {
            scenario: scenario.clone(),
            criticals,
            power,
        });
    }
    Ok(out)
}

/// Statistics that failed on every replicate of some scenario.
pub fn all_failed(results: &[ScenarioPower]) -> Vec<String> {
    let mut failed = Vec::new();
    for r in results {
        for (c, e) in r.criticals.values.iter().zip(&r.power.entries) {
            if c.errors == r.criticals.replicates || e.errors == r.power.replicates {
                failed.push(format!("{}: {}", r.scenario.id, c.statistic));
            }
        }
    }
    failed
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioCorrelations {
    pub scenario: String,
    pub correlations: MeanCorrelations,
}

pub fn run_corr(pack: &ScenarioPack, settings: &RunSettings) -> Result<Vec<ScenarioCorrelations>> {
    pack.entries
        .iter()
        .map(|entry| {
            let s = &entry.scenario;
            let correlations =
                mean_correlation_matrix(s, settings.replicates, derive_seed(settings.seed, &format!("corr/{}", s.id)))
                    .with_context(|| format!("correlations for scenario `{}`", s.id))?;
            Ok(ScenarioCorrelations {
                scenario: s.id.clone(),
                correlations,
            })
        })
        .collect()
}

pub fn run_crosstab(
    pack: &ScenarioPack,
    settings: &RunSettings,
    stat_a: Statistic,
    stat_b: Statistic,
    bins: &[f64],
) -> Result<Vec<PValueCrossTab>> {
    pack.entries
        .iter()
        .map(|entry| {
            let s = &entry.scenario;
            let cs = CrossTabSettings {
                null_replicates: settings.null_replicates,
                replicates: settings.replicates,
                seed: derive_seed(settings.seed, &format!("crosstab/{}", s.id)),
            };
            pvalue_crosstab(s, stat_a, stat_b, &settings.battery, bins, &cs)
                .with_context(|| format!("cross-tab for scenario `{}`", s.id))
        })
        .collect()
}

/// How critical values are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalMethod {
    /// Empirical quantiles of simulated null tables.
    Simulate,
    /// Asymptotic laws: normal and chi-square quantiles, and simulated
    /// maxima of correlated normals for the MAX statistics.
    Normal,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalRow {
    pub scenario: String,
    pub statistic: Statistic,
    /// `None` when the statistic has no asymptotic law.
    pub threshold: Option<f64>,
    pub errors: usize,
}

pub fn run_criticals(pack: &ScenarioPack, settings: &RunSettings, method: CriticalMethod) -> Result<Vec<CriticalRow>> {
    let mut rows = Vec::new();
    for entry in &pack.entries {
        let s = &entry.scenario;
        let seed = derive_seed(settings.seed, &format!("null/{}", key_label(&s.null_key())));
        match method {
            CriticalMethod::Simulate => {
                let cv = estimate_critical_values(s, &settings.battery, settings.null_replicates, settings.alpha, seed)
                    .with_context(|| format!("null simulation for scenario `{}`", s.id))?;
                rows.extend(cv.values.iter().map(|c| CriticalRow {
                    scenario: s.id.clone(),
                    statistic: c.statistic,
                    threshold: Some(c.threshold),
                    errors: c.errors,
                }));
            }
            CriticalMethod::Normal => {
                let props = s.expected_null_proportions()?;
                for &stat in settings.battery.statistics() {
                    let threshold = asymptotic_threshold(stat, props, settings, seed)
                        .with_context(|| format!("scenario `{}`, {stat}", s.id))?;
                    rows.push(CriticalRow {
                        scenario: s.id.clone(),
                        statistic: stat,
                        threshold,
                        errors: 0,
                    });
                }
            }
        }
    }
    Ok(rows)
}

fn asymptotic_threshold(stat: Statistic, props: [f64; 3], settings: &RunSettings, seed: u64) -> Result<Option<f64>> {
    let alpha = settings.alpha;
    if stat.is_normal() {
        let tail = match settings.sidedness() {
            Sidedness::One => alpha,
            Sidedness::Two => alpha / 2.0,
        };
        let normal = Normal::standard();
        return Ok(Some(normal.inverse_cdf(1.0 - tail)));
    }
    if let Some(df) = stat.chi2_df() {
        return Ok(Some(ChiSquared::new(df)?.inverse_cdf(1.0 - alpha)));
    }
    if stat.is_max() {
        let rho = max_null_correlation(stat, props, settings.battery.grid())?;
        let c = normal_approx_critical_max(&rho, alpha, settings.null_replicates, settings.sidedness(), seed)?;
        return Ok(Some(c));
    }
    Ok(None)
}
