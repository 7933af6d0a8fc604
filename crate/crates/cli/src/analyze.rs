//! Statistics for user-supplied genotype tables.

use anyhow::{bail, Result};
use casecontrol::montecarlo::{derive_seed, permutation_pvalue, PermutationTest, Statistic, StatisticBattery};
use casecontrol::robust::{
    check_extreme_pair_condition, estimate_correlations, mert_are, recommend_robust_test, CorrelationTriple,
    Recommendation, Sidedness,
};
use casecontrol::tables::DEFAULT_CORRECTION;
use casecontrol::GenotypeTable;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// One table read from the input, with its 1-based line number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRecord {
    pub line: usize,
    pub table: GenotypeTable,
}

/// Parses one record of six nonnegative integer counts `r0 r1 r2 s0 s1 s2`
/// per line, separated by commas and/or whitespace. Blank lines and lines
/// starting with `#` are skipped. Every malformed line is reported.
pub fn parse_tables(text: &str) -> Result<Vec<TableRecord>> {
    let mut records = Vec::new();
    let mut problems = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        if fields.len() != 6 {
            problems.push(format!("line {line}: expected six counts, found {} in `{body}`", fields.len()));
            continue;
        }
        let counts: Result<Vec<u64>, _> = fields.iter().map(|f| f.parse::<u64>()).collect();
        let Ok(counts) = counts else {
            problems.push(format!("line {line}: counts must be nonnegative integers in `{body}`"));
            continue;
        };
        let cells: [f64; 6] = std::array::from_fn(|k| counts[k] as f64);
        match GenotypeTable::from_counts(cells) {
            Ok(table) => records.push(TableRecord { line, table }),
            Err(e) => problems.push(format!("line {line}: {e}")),
        }
    }
    if !problems.is_empty() {
        bail!("{}", problems.join("\n"));
    }
    if records.is_empty() {
        bail!("no tables in input");
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PValueMethod {
    Asymptotic,
    Permutation,
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatisticReport {
    pub statistic: Statistic,
    /// Signed for trend and MERT statistics; sidedness-aware for maxima.
    pub value: Option<f64>,
    pub error: Option<String>,
    pub p_one_sided: Option<f64>,
    pub p_two_sided: Option<f64>,
    pub method: PValueMethod,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableReport {
    pub line: usize,
    pub cells: [f64; 6],
    pub statistics: Vec<StatisticReport>,
    pub correlations: Option<CorrelationTriple>,
    /// Whether `(Z_0, Z_1)` certifies the MERT over the three-model family.
    pub certificate: Option<bool>,
    pub mert_are: Option<f64>,
    pub recommendation: Option<Recommendation>,
}

#[derive(Debug, Clone)]
pub struct AnalyzeSettings {
    pub battery: StatisticBattery,
    pub correction: bool,
    /// Permutation replicates and seed; asymptotic p-values otherwise.
    pub permutations: Option<(usize, u64)>,
}

pub fn analyze(record: &TableRecord, settings: &AnalyzeSettings) -> Result<TableReport> {
    let table = if settings.correction {
        record.table.with_continuity_correction(DEFAULT_CORRECTION)?
    } else {
        record.table
    };
    let values = settings.battery.evaluate(&table);
    let mut statistics = Vec::with_capacity(values.len());
    for (&stat, value) in settings.battery.statistics().iter().zip(values) {
        let mut report = StatisticReport {
            statistic: stat,
            value: value.as_ref().ok().copied(),
            error: value.as_ref().err().map(ToString::to_string),
            p_one_sided: None,
            p_two_sided: None,
            method: PValueMethod::None,
        };
        if let Ok(v) = value {
            match settings.permutations {
                Some((b, seed)) => permutation_pvalues(&mut report, record, settings, b, seed)?,
                None => asymptotic_pvalues(&mut report, stat, v),
            }
        }
        statistics.push(report);
    }

    let correlations = estimate_correlations(table.pooled_proportions()).ok();
    let certificate = correlations.and_then(|c| check_extreme_pair_condition(&c.to_matrix(), 0, 2).ok());
    Ok(TableReport {
        line: record.line,
        cells: record.table.cells(),
        statistics,
        correlations,
        certificate,
        mert_are: correlations.map(|c| mert_are(c.rho_0_1)),
        recommendation: correlations.map(|c| recommend_robust_test(c.rho_0_1)),
    })
}

fn asymptotic_pvalues(report: &mut StatisticReport, stat: Statistic, v: f64) {
    if stat.is_normal() {
        let normal = Normal::standard();
        report.p_one_sided = Some(normal.sf(v));
        report.p_two_sided = Some(2.0 * normal.sf(v.abs()));
        report.method = PValueMethod::Asymptotic;
    } else if let Some(df) = stat.chi2_df() {
        let chi = ChiSquared::new(df).expect("positive degrees of freedom");
        report.p_two_sided = Some(chi.sf(v));
        report.method = PValueMethod::Asymptotic;
    }
}

fn permutation_pvalues(
    report: &mut StatisticReport,
    record: &TableRecord,
    settings: &AnalyzeSettings,
    b: usize,
    seed: u64,
) -> Result<()> {
    let stat = report.statistic;
    let test = |side: Sidedness| {
        let mut t = PermutationTest::new(stat, side);
        t.grid = settings.battery.grid().to_vec();
        if settings.correction {
            t = t.with_correction(DEFAULT_CORRECTION);
        }
        t
    };
    let label = |side: Sidedness| derive_seed(seed, &format!("permutation/{}/{stat}/{side}", record.line));
    let directional = stat.is_normal() || stat.is_max();
    if directional {
        report.p_one_sided = Some(permutation_pvalue(&record.table, &test(Sidedness::One), b, label(Sidedness::One))?);
    }
    report.p_two_sided = Some(permutation_pvalue(&record.table, &test(Sidedness::Two), b, label(Sidedness::Two))?);
    report.method = PValueMethod::Permutation;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> AnalyzeSettings {
        AnalyzeSettings {
            battery: StatisticBattery::full(Sidedness::Two),
            correction: false,
            permutations: None,
        }
    }

    fn value(r: &TableReport, stat: Statistic) -> f64 {
        r.statistics.iter().find(|s| s.statistic == stat).unwrap().value.unwrap()
    }

    #[test]
    fn worked_example_report() {
        let records = parse_tables("10 20 30 30 20 10\n").unwrap();
        let r = analyze(&records[0], &settings()).unwrap();
        for (stat, want) in [
            (Statistic::Z0, 3.8730),
            (Statistic::ZHalf, 4.4721),
            (Statistic::Z1, 3.8730),
            (Statistic::Mert, 4.4721),
            (Statistic::Chi2TwoDf, 20.0),
            (Statistic::TP, 100.0),
        ] {
            assert!((value(&r, stat) - want).abs() < 5e-5, "{stat}");
        }
        assert_eq!(r.certificate, Some(true));
        assert_eq!(r.recommendation, Some(Recommendation::MaxWithNote));
        let z = &r.statistics[0];
        assert_eq!(z.method, PValueMethod::Asymptotic);
        assert!((z.p_two_sided.unwrap() - 2.0 * z.p_one_sided.unwrap()).abs() < 1e-15);
    }

    #[test]
    fn parse_errors_name_lines() {
        let err = parse_tables("# header\n10 20 30 30 20 10\n1 2\n1,2,3,4,5,x\n").unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("line 4"), "{err}");
        assert!(parse_tables("0 0 0 1 1 1").unwrap_err().to_string().contains("line 1"));
        let ok = parse_tables("1,2,3, 4 5 6").unwrap();
        assert_eq!(ok[0].table.controls(), [4.0, 5.0, 6.0]);
    }

    #[test]
    fn identical_rows_and_failures() {
        let records = parse_tables("5 10 5 5 10 5\n4 3 0 2 5 0\n").unwrap();
        let r = analyze(&records[0], &settings()).unwrap();
        for s in &r.statistics {
            assert!(s.value.unwrap().abs() < 1e-12, "{}", s.statistic);
        }
        // no MM genotypes: Z_0 and the correlations are undefined
        let r = analyze(&records[1], &settings()).unwrap();
        assert!(r.correlations.is_none());
        let mert = r.statistics.iter().find(|s| s.statistic == Statistic::Mert).unwrap();
        assert!(mert.value.is_none() && mert.error.is_some());
    }

    #[test]
    fn permutation_mode() {
        let records = parse_tables("10 20 30 30 20 10\n").unwrap();
        let s = AnalyzeSettings {
            permutations: Some((2000, 5)),
            battery: StatisticBattery::new(vec![Statistic::ZHalf, Statistic::TMax], Sidedness::Two).unwrap(),
            correction: false,
        };
        let r = analyze(&records[0], &s).unwrap();
        assert_eq!(r.statistics[0].method, PValueMethod::Permutation);
        assert!(r.statistics[0].p_one_sided.unwrap() < 0.01);
        assert!(r.statistics[1].p_one_sided.is_none());
        assert!(r.statistics[1].p_two_sided.unwrap() < 0.01);
    }
}
