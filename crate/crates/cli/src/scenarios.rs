//! Scenario pack files.
//!
//! A pack is a TOML document with one `[[scenario]]` table per setting:
//!
//! ```toml
//! battery = "standard"   # optional default for the pack
//!
//! [[scenario]]
//! id = "p0.3/add"
//! model = "add"          # null | rec | add | dom | custom
//! f0 = 0.01
//! f2 = 0.03              # or f1 for custom models; or calibrate_power
//! p = 0.3                # or pA, pB, R1, R2, S1, S2 for a two-population mixture
//! r = 250
//! s = 250
//! correction = true      # default
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use casecontrol::montecarlo::Scenario;
use casecontrol::{GeneticModel, PenetranceModel, PopulationSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PackFile {
    battery: Option<String>,
    #[serde(default)]
    scenario: Vec<Record>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    model: String,
    f0: Option<f64>,
    f1: Option<f64>,
    f2: Option<f64>,
    p: Option<f64>,
    #[serde(rename = "pA")]
    p_a: Option<f64>,
    #[serde(rename = "pB")]
    p_b: Option<f64>,
    #[serde(rename = "R1")]
    r1: Option<u32>,
    #[serde(rename = "R2")]
    r2: Option<u32>,
    #[serde(rename = "S1")]
    s1: Option<u32>,
    #[serde(rename = "S2")]
    s2: Option<u32>,
    r: Option<u32>,
    s: Option<u32>,
    correction: Option<bool>,
    calibrate_power: Option<f64>,
}

/// How a scenario's penetrances are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Null,
    Fixed,
    /// `f2` is chosen so that the model's optimal trend test reaches
    /// `target` power.
    Calibrate { model: GeneticModel, f0: f64, target: f64 },
}

#[derive(Debug, Clone)]
pub struct ScenarioEntry {
    /// Penetrance is `None` until calibration has run for calibrated entries.
    pub scenario: Scenario,
    pub model: ModelSpec,
}

#[derive(Debug, Clone)]
pub struct ScenarioPack {
    pub path: PathBuf,
    /// Default battery for the pack, overridden by `--battery`.
    pub battery: Option<String>,
    pub sha256: String,
    pub entries: Vec<ScenarioEntry>,
}

impl ScenarioPack {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut pack = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        pack.path = path.to_path_buf();
        Ok(pack)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: PackFile = toml::from_str(text)?;
        if file.scenario.is_empty() {
            bail!("no [[scenario]] records found");
        }
        let mut seen = HashSet::new();
        let mut entries = Vec::with_capacity(file.scenario.len());
        let mut problems = Vec::new();
        for (k, record) in file.scenario.iter().enumerate() {
            if !seen.insert(record.id.clone()) {
                problems.push(format!("scenario #{} `{}`: duplicate id", k + 1, record.id));
                continue;
            }
            match record.to_entry() {
                Ok(entry) => entries.push(entry),
                Err(e) => problems.push(format!("scenario #{} `{}`: {e:#}", k + 1, record.id)),
            }
        }
        if !problems.is_empty() {
            bail!("invalid scenarios:\n  {}", problems.join("\n  "));
        }
        Ok(Self {
            path: PathBuf::new(),
            battery: file.battery,
            sha256: hex_digest(text.as_bytes()),
            entries,
        })
    }

    /// Forces the continuity correction on or off for every scenario.
    pub fn set_correction(&mut self, on: bool) {
        for e in &mut self.entries {
            e.scenario.correction = on;
        }
    }

    /// Keeps only the scenarios with the given ids, in pack order.
    pub fn select(&mut self, ids: &[String]) -> Result<()> {
        for id in ids {
            if !self.entries.iter().any(|e| &e.scenario.id == id) {
                bail!("no scenario with id `{id}`");
            }
        }
        self.entries.retain(|e| ids.contains(&e.scenario.id));
        Ok(())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Record {
    fn population(&self) -> Result<(PopulationSpec, u32, u32)> {
        let mixture = [self.p_a, self.p_b].iter().any(Option::is_some)
            || [self.r1, self.r2, self.s1, self.s2].iter().any(Option::is_some);
        if !mixture {
            let p = self.p.ok_or_else(|| anyhow!("missing allele frequency `p`"))?;
            let r = self.r.ok_or_else(|| anyhow!("missing case count `r`"))?;
            let s = self.s.ok_or_else(|| anyhow!("missing control count `s`"))?;
            return Ok((PopulationSpec::Hwe { p }, r, s));
        }
        if self.p.is_some() {
            bail!("give either `p` or the mixture keys pA, pB, R1, R2, S1, S2, not both");
        }
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| anyhow!("mixture needs `{name}`"));
        let need_n = |v: Option<u32>, name: &str| v.ok_or_else(|| anyhow!("mixture needs `{name}`"));
        let cases = [need_n(self.r1, "R1")?, need_n(self.r2, "R2")?];
        let controls = [need_n(self.s1, "S1")?, need_n(self.s2, "S2")?];
        let (r, s) = (cases[0] + cases[1], controls[0] + controls[1]);
        if self.r.is_some_and(|v| v != r) || self.s.is_some_and(|v| v != s) {
            bail!("r and s must equal R1 + R2 = {r} and S1 + S2 = {s}");
        }
        let spec = PopulationSpec::Mixture {
            p_a: need(self.p_a, "pA")?,
            p_b: need(self.p_b, "pB")?,
            cases,
            controls,
        };
        Ok((spec, r, s))
    }

    fn to_entry(&self) -> Result<ScenarioEntry> {
        let (population, r, s) = self.population()?;
        let correction = self.correction.unwrap_or(true);
        let (penetrance, model) = self.penetrance()?;
        let scenario = Scenario::new(self.id.clone(), population, penetrance, r, s, correction)?;
        Ok(ScenarioEntry { scenario, model })
    }

    fn penetrance(&self) -> Result<(Option<PenetranceModel>, ModelSpec)> {
        let name = self.model.trim().to_ascii_lowercase();
        if name == "null" {
            if self.f1.is_some() || self.f2.is_some() || self.calibrate_power.is_some() {
                bail!("null scenarios take no f1, f2 or calibrate_power");
            }
            return Ok((None, ModelSpec::Null));
        }
        let kind: GeneticModel = name.parse()?;
        let f0 = self.f0.ok_or_else(|| anyhow!("missing baseline penetrance `f0`"))?;
        if let Some(target) = self.calibrate_power {
            if self.f1.is_some() || self.f2.is_some() {
                bail!("calibrated scenarios take f0 only; f1 and f2 are solved for");
            }
            if kind == GeneticModel::Custom {
                bail!("only rec, add and dom models can be calibrated");
            }
            if !(target > 0.0 && target < 1.0) {
                bail!("calibrate_power must lie in (0, 1), got {target}");
            }
            // validates f0
            PenetranceModel::null(f0)?;
            return Ok((None, ModelSpec::Calibrate { model: kind, f0, target }));
        }
        let f2 = self.f2.ok_or_else(|| anyhow!("missing `f2` (or `calibrate_power`)"))?;
        let f = match (kind, self.f1) {
            (GeneticModel::Custom, Some(f1)) => PenetranceModel::new(kind, f0, f1, f2)?,
            (GeneticModel::Custom, None) => bail!("custom models need an explicit `f1`"),
            (_, Some(f1)) => PenetranceModel::new(kind, f0, f1, f2)?,
            (_, None) => casecontrol::population::penetrances_for_model(kind, f0, f2)?,
        };
        Ok((Some(f), ModelSpec::Fixed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_hwe_mixture_and_calibrated_records() {
        let pack = ScenarioPack::parse(
            r#"
            [[scenario]]
            id = "null"
            model = "null"
            p = 0.3
            r = 250
            s = 250

            [[scenario]]
            id = "other"
            model = "custom"
            f0 = 0.01
            f1 = 0.017
            f2 = 0.019
            p = 0.1
            r = 250
            s = 250
            correction = false

            [[scenario]]
            id = "mix/add"
            model = "add"
            f0 = 0.01
            calibrate_power = 0.8
            pA = 0.1
            pB = 0.4
            R1 = 250
            R2 = 100
            S1 = 250
            S2 = 100
            "#,
        )
        .unwrap();
        assert_eq!(pack.entries.len(), 3);
        assert_eq!(pack.entries[0].model, ModelSpec::Null);
        let f = pack.entries[1].scenario.penetrance.unwrap();
        assert_eq!(f.as_array(), [0.01, 0.017, 0.019]);
        assert!(!pack.entries[1].scenario.correction);
        let mix = &pack.entries[2].scenario;
        assert_eq!((mix.cases, mix.controls), (350, 350));
        assert!(matches!(pack.entries[2].model, ModelSpec::Calibrate { target, .. } if target == 0.8));
        assert_eq!(pack.sha256.len(), 64);
    }

    #[test]
    fn reports_every_invalid_record() {
        let err = ScenarioPack::parse(
            r#"
            [[scenario]]
            id = "a"
            model = "null"
            p = 1.2
            r = 10
            s = 10

            [[scenario]]
            id = "b"
            model = "rec"
            f0 = 0.01
            f2 = 0.04
            p = 0.3
            r = 10

            [[scenario]]
            id = "c"
            model = "dom"
            f0 = 0.01
            f1 = 0.02
            f2 = 0.03
            p = 0.3
            r = 10
            s = 10
            "#,
        )
        .unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("#1 `a`") && msg.contains("#2 `b`") && msg.contains("#3 `c`"), "{msg}");
    }

    #[test]
    fn rejects_unknown_keys_and_duplicates() {
        assert!(ScenarioPack::parse("[[scenario]]\nid = \"x\"\nmodel = \"null\"\np = 0.2\nr = 5\ns = 5\nq = 1\n").is_err());
        let dup = "[[scenario]]\nid = \"x\"\nmodel = \"null\"\np = 0.2\nr = 5\ns = 5\n";
        assert!(ScenarioPack::parse(&format!("{dup}{dup}")).is_err());
    }
}
