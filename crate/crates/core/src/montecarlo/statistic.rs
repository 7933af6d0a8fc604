//! Statistic identifiers and joint evaluation of a battery on one table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classical::{chisq_2df, chisq_allele, chisq_hwd};
use crate::robust::{
    estimate_correlations, mert_pair, trend_null_correlation, Sidedness,
};
use crate::tables::GenotypeTable;
use crate::trend::{trend_statistic, TrendScore};
use crate::{Error, Result};

/// Every statistic the engine can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Statistic {
    #[serde(rename = "Z0")]
    Z0,
    #[serde(rename = "Z_HALF")]
    ZHalf,
    #[serde(rename = "Z1")]
    Z1,
    #[serde(rename = "MERT")]
    Mert,
    #[serde(rename = "MERT_REC_ADD")]
    MertRecAdd,
    #[serde(rename = "MAX2")]
    Max2,
    #[serde(rename = "MAX2_REC_ADD")]
    Max2RecAdd,
    #[serde(rename = "MAX3")]
    Max3,
    #[serde(rename = "MAX3_MERT")]
    Max3Mert,
    #[serde(rename = "MAXGRID")]
    MaxGrid,
    #[serde(rename = "CHI2_2DF")]
    Chi2TwoDf,
    #[serde(rename = "AA")]
    Aa,
    #[serde(rename = "HWD")]
    Hwd,
    #[serde(rename = "T_P")]
    TP,
    #[serde(rename = "T_MAX")]
    TMax,
}

impl Statistic {
    pub const ALL: [Statistic; 15] = [
        Self::Z0,
        Self::ZHalf,
        Self::Z1,
        Self::Mert,
        Self::MertRecAdd,
        Self::Max2,
        Self::Max2RecAdd,
        Self::Max3,
        Self::Max3Mert,
        Self::MaxGrid,
        Self::Chi2TwoDf,
        Self::Aa,
        Self::Hwd,
        Self::TP,
        Self::TMax,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Self::Z0 => "Z0",
            Self::ZHalf => "Z_HALF",
            Self::Z1 => "Z1",
            Self::Mert => "MERT",
            Self::MertRecAdd => "MERT_REC_ADD",
            Self::Max2 => "MAX2",
            Self::Max2RecAdd => "MAX2_REC_ADD",
            Self::Max3 => "MAX3",
            Self::Max3Mert => "MAX3_MERT",
            Self::MaxGrid => "MAXGRID",
            Self::Chi2TwoDf => "CHI2_2DF",
            Self::Aa => "AA",
            Self::Hwd => "HWD",
            Self::TP => "T_P",
            Self::TMax => "T_MAX",
        }
    }

    /// Signed, asymptotically standard normal statistics.
    pub fn is_normal(&self) -> bool {
        matches!(self, Self::Z0 | Self::ZHalf | Self::Z1 | Self::Mert | Self::MertRecAdd)
    }

    pub fn is_max(&self) -> bool {
        matches!(self, Self::Max2 | Self::Max2RecAdd | Self::Max3 | Self::Max3Mert | Self::MaxGrid)
    }

    /// Degrees of freedom of the asymptotic chi-square law, where one exists.
    pub fn chi2_df(&self) -> Option<f64> {
        match self {
            Self::Chi2TwoDf => Some(2.0),
            Self::Aa | Self::Hwd => Some(1.0),
            _ => None,
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase();
        Self::ALL
            .into_iter()
            .find(|stat| stat.id() == wanted)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown statistic `{s}`")))
    }
}

/// An ordered set of statistics evaluated together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticBattery {
    statistics: Vec<Statistic>,
    sidedness: Sidedness,
    grid: Vec<TrendScore>,
}

impl StatisticBattery {
    pub fn new(statistics: Vec<Statistic>, sidedness: Sidedness) -> Result<Self> {
        Self::with_grid(statistics, sidedness, crate::robust::default_grid())
    }

    pub fn with_grid(statistics: Vec<Statistic>, sidedness: Sidedness, grid: Vec<TrendScore>) -> Result<Self> {
        if statistics.is_empty() {
            return Err(Error::InvalidArgument("statistic battery is empty".into()));
        }
        for (i, s) in statistics.iter().enumerate() {
            if statistics[..i].contains(s) {
                return Err(Error::InvalidArgument(format!("statistic {s} listed twice")));
            }
        }
        if grid.is_empty() {
            return Err(Error::InvalidArgument("score grid is empty".into()));
        }
        Ok(Self {
            statistics,
            sidedness,
            grid,
        })
    }

    /// The nine statistics of the three-model power comparison.
    pub fn standard(sidedness: Sidedness) -> Self {
        use Statistic::*;
        Self::new(vec![Z0, ZHalf, Z1, Mert, Max2, Max3, TMax, TP, Chi2TwoDf], sidedness).unwrap()
    }

    /// The recessive/additive subfamily comparison.
    pub fn rec_add(sidedness: Sidedness) -> Self {
        use Statistic::*;
        Self::new(vec![MertRecAdd, Max2RecAdd, Chi2TwoDf], sidedness).unwrap()
    }

    /// Every statistic.
    pub fn full(sidedness: Sidedness) -> Self {
        Self::new(Statistic::ALL.to_vec(), sidedness).unwrap()
    }

    pub fn statistics(&self) -> &[Statistic] {
        &self.statistics
    }

    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    pub fn grid(&self) -> &[TrendScore] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.statistics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statistics.is_empty()
    }

    pub fn position(&self, stat: Statistic) -> Option<usize> {
        self.statistics.iter().position(|&s| s == stat)
    }

    /// Reported values: signed for normal-type statistics, sidedness-aware
    /// maxima, raw chi-squares.
    pub fn evaluate(&self, t: &GenotypeTable) -> Vec<Result<f64>> {
        let mut eval = Evaluator::new(t, self.sidedness, &self.grid);
        self.statistics.iter().map(|&s| eval.value(s)).collect()
    }

    /// Values compared against upper critical values. Errors become NaN.
    pub fn decision_values(&self, t: &GenotypeTable) -> Vec<f64> {
        let mut eval = Evaluator::new(t, self.sidedness, &self.grid);
        self.statistics
            .iter()
            .map(|&s| eval.decision(s).unwrap_or(f64::NAN))
            .collect()
    }
}

/// Evaluates statistics on one table, sharing the trend components.
pub(crate) struct Evaluator<'a> {
    table: &'a GenotypeTable,
    sidedness: Sidedness,
    grid: &'a [TrendScore],
    z: [Option<Result<f64>>; 3],
    chi_aa: Option<Result<f64>>,
    chi_hwd: Option<Result<f64>>,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(table: &'a GenotypeTable, sidedness: Sidedness, grid: &'a [TrendScore]) -> Self {
        Self {
            table,
            sidedness,
            grid,
            z: [None, None, None],
            chi_aa: None,
            chi_hwd: None,
        }
    }

    fn z(&mut self, which: usize) -> Result<f64> {
        let table = self.table;
        self.z[which]
            .get_or_insert_with(|| {
                let score = [TrendScore::RECESSIVE, TrendScore::ADDITIVE, TrendScore::DOMINANT][which];
                trend_statistic(table, score).map(|z| z.value)
            })
            .clone()
    }

    fn aa(&mut self) -> Result<f64> {
        let table = self.table;
        self.chi_aa.get_or_insert_with(|| chisq_allele(table)).clone()
    }

    fn hwd(&mut self) -> Result<f64> {
        let table = self.table;
        self.chi_hwd.get_or_insert_with(|| chisq_hwd(table.cases())).clone()
    }

    fn mert(&mut self) -> Result<f64> {
        let (z0, z1) = (self.z(0)?, self.z(2)?);
        let rho = estimate_correlations(self.table.pooled_proportions())?.rho_0_1;
        mert_pair(z0, z1, rho)
    }

    fn max_of(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .map(|&v| self.sidedness.decision(v))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn value(&mut self, stat: Statistic) -> Result<f64> {
        use Statistic::*;
        match stat {
            Z0 => self.z(0),
            ZHalf => self.z(1),
            Z1 => self.z(2),
            Mert => self.mert(),
            MertRecAdd => {
                let (z0, zh) = (self.z(0)?, self.z(1)?);
                let rho = trend_null_correlation(
                    self.table.pooled_proportions(),
                    TrendScore::RECESSIVE,
                    TrendScore::ADDITIVE,
                )?;
                mert_pair(z0, zh, rho)
            }
            Max2 => {
                let v = [self.z(0)?, self.z(2)?];
                Ok(self.max_of(&v))
            }
            Max2RecAdd => {
                let v = [self.z(0)?, self.z(1)?];
                Ok(self.max_of(&v))
            }
            Max3 => {
                let v = [self.z(0)?, self.z(1)?, self.z(2)?];
                Ok(self.max_of(&v))
            }
            Max3Mert => {
                let v = [self.z(0)?, self.mert()?, self.z(2)?];
                Ok(self.max_of(&v))
            }
            MaxGrid => {
                let mut values = Vec::with_capacity(self.grid.len());
                for &x in self.grid {
                    values.push(trend_statistic(self.table, x)?.value);
                }
                Ok(self.max_of(&values))
            }
            Chi2TwoDf => chisq_2df(self.table),
            Aa => self.aa(),
            Hwd => self.hwd(),
            TP => Ok(self.aa()? * self.hwd()?),
            TMax => Ok(self.aa()?.max(self.hwd()?)),
        }
    }

    pub(crate) fn decision(&mut self, stat: Statistic) -> Result<f64> {
        let v = self.value(stat)?;
        Ok(if stat.is_normal() { self.sidedness.decision(v) } else { v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{product_test, tmax};
    use crate::robust::{max2, max3, max_grid, mert_rec_add, mert_statistic};

    #[test]
    fn identifiers_round_trip() {
        for s in Statistic::ALL {
            assert_eq!(s.id().parse::<Statistic>().unwrap(), s);
            assert_eq!(s.to_string(), s.id());
        }
        assert!("Z2".parse::<Statistic>().is_err());
        assert_eq!("t_max".parse::<Statistic>().unwrap(), Statistic::TMax);
    }

    #[test]
    fn battery_validation() {
        assert!(StatisticBattery::new(vec![], Sidedness::Two).is_err());
        assert!(StatisticBattery::new(vec![Statistic::Z0, Statistic::Z0], Sidedness::Two).is_err());
        assert!(StatisticBattery::with_grid(vec![Statistic::Z0], Sidedness::Two, vec![]).is_err());
    }

    #[test]
    fn battery_agrees_with_module_functions() {
        let t = GenotypeTable::from_cells([12., 30., 9., 20., 25., 4.]).unwrap();
        let battery = StatisticBattery::full(Sidedness::Two);
        let values: Vec<f64> = battery.evaluate(&t).into_iter().map(|v| v.unwrap()).collect();
        let get = |s: Statistic| values[battery.position(s).unwrap()];
        let two = Sidedness::Two;
        assert_eq!(get(Statistic::Z0), trend_statistic(&t, TrendScore::RECESSIVE).unwrap().value);
        assert_eq!(get(Statistic::Mert), mert_statistic(&t).unwrap().value);
        assert_eq!(get(Statistic::MertRecAdd), mert_rec_add(&t).unwrap().value);
        assert_eq!(get(Statistic::Max2), max2(&t, two).unwrap().value);
        assert_eq!(get(Statistic::Max3), max3(&t, two).unwrap().value);
        assert_eq!(get(Statistic::MaxGrid), max_grid(&t, &crate::robust::default_grid(), two).unwrap().value);
        assert_eq!(get(Statistic::TP), product_test(&t).unwrap().value);
        assert_eq!(get(Statistic::TMax), tmax(&t).unwrap().value);

        let decisions = battery.decision_values(&t.swapped());
        assert_eq!(decisions[battery.position(Statistic::Z0).unwrap()], get(Statistic::Z0).abs());
    }

    #[test]
    fn errors_become_nan_decisions() {
        let t = GenotypeTable::from_cells([3., 4., 0., 5., 6., 0.]).unwrap();
        let battery = StatisticBattery::new(vec![Statistic::Z0, Statistic::ZHalf], Sidedness::Two).unwrap();
        let d = battery.decision_values(&t);
        assert!(d[0].is_nan());
        assert!(d[1].is_finite());
    }
}
