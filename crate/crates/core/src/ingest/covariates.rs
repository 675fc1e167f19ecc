//! Monthly climate-index series and the per-season covariate row.
//!
//! AMO, SOI, NAO, Niño 3.4 and SST enter as the mean of the season's May and
//! June values. Sunspot number enters as the mean of July of the previous
//! year through June of the season year.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateIndex {
    Amo,
    Soi,
    Nao,
    Nino34,
    Sst,
    Ssn,
}

impl CovariateIndex {
    /// Column order of a [`CovariateRow`] after the intercept.
    pub const ALL: [CovariateIndex; 6] = [
        CovariateIndex::Amo,
        CovariateIndex::Soi,
        CovariateIndex::Nao,
        CovariateIndex::Nino34,
        CovariateIndex::Sst,
        CovariateIndex::Ssn,
    ];

    /// File stem inside a covariate directory (`amo.csv`, ...).
    pub fn stem(self) -> &'static str {
        match self {
            CovariateIndex::Amo => "amo",
            CovariateIndex::Soi => "soi",
            CovariateIndex::Nao => "nao",
            CovariateIndex::Nino34 => "nino34",
            CovariateIndex::Sst => "sst",
            CovariateIndex::Ssn => "ssn",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CovariateIndex::Amo => "AMO",
            CovariateIndex::Soi => "SOI",
            CovariateIndex::Nao => "NAO",
            CovariateIndex::Nino34 => "Nino3.4",
            CovariateIndex::Sst => "SST",
            CovariateIndex::Ssn => "SSN",
        }
    }

    fn months(self, season: i32) -> Vec<(i32, u8)> {
        match self {
            CovariateIndex::Ssn => (7..=12)
                .map(|m| (season - 1, m))
                .chain((1..=6).map(|m| (season, m)))
                .collect(),
            _ => vec![(season, 5), (season, 6)],
        }
    }
}

/// Values keyed by `(year, month)`.
pub type MonthlySeries = BTreeMap<(i32, u8), f64>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CovariateSet {
    pub series: BTreeMap<CovariateIndex, MonthlySeries>,
}

/// Intercept followed by the six indices, in [`CovariateIndex::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateRow {
    pub season: i32,
    pub values: Vec<f64>,
}

#[derive(Deserialize)]
struct MonthRow {
    year: i32,
    month: u8,
    value: f64,
}

/// Values at or below this are treated as missing-data sentinels.
const SENTINEL_CUTOFF: f64 = -99.0;

/// Reads a `year,month,value` CSV.
pub fn read_monthly_series<R: Read>(reader: R, source: &str) -> Result<MonthlySeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| IngestError::csv(source, e))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != ["year", "month", "value"] {
        return Err(IngestError::BadHeader {
            file: source.to_string(),
            expected: "year,month,value".into(),
            found: got.join(","),
        });
    }
    let mut out = MonthlySeries::new();
    for (i, rec) in rdr.deserialize::<MonthRow>().enumerate() {
        let line = i as u64 + 2;
        let row = rec.map_err(|e| IngestError::csv(source, e))?;
        if !(1..=12).contains(&row.month) {
            return Err(IngestError::Csv {
                file: source.to_string(),
                line,
                message: format!("month {} out of range", row.month),
            });
        }
        if !row.value.is_finite() || row.value <= SENTINEL_CUTOFF {
            continue;
        }
        if out.insert((row.year, row.month), row.value).is_some() {
            return Err(IngestError::Csv {
                file: source.to_string(),
                line,
                message: format!("duplicate entry for {}-{:02}", row.year, row.month),
            });
        }
    }
    Ok(out)
}

impl CovariateSet {
    /// Loads `<stem>.csv` for every index; lists all absent files at once.
    pub fn from_dir(dir: &Path) -> Result<Self, IngestError> {
        let missing: Vec<String> = CovariateIndex::ALL
            .iter()
            .filter(|ix| !dir.join(format!("{}.csv", ix.stem())).is_file())
            .map(|ix| format!("{} ({}.csv)", ix.label(), ix.stem()))
            .collect();
        if !missing.is_empty() {
            return Err(IngestError::MissingIndices(missing));
        }
        let mut set = CovariateSet::default();
        for ix in CovariateIndex::ALL {
            let path = dir.join(format!("{}.csv", ix.stem()));
            let file = std::fs::File::open(&path).map_err(|e| IngestError::io(&path, e))?;
            let s = read_monthly_series(file, &path.display().to_string())?;
            set.series.insert(ix, s);
        }
        Ok(set)
    }

    /// Covariate row for one season.
    pub fn row(&self, season: i32) -> Result<CovariateRow, IngestError> {
        build_covariates(self, season)
    }
}

pub fn build_covariates(set: &CovariateSet, season: i32) -> Result<CovariateRow, IngestError> {
    let mut values = Vec::with_capacity(1 + CovariateIndex::ALL.len());
    values.push(1.0);
    for ix in CovariateIndex::ALL {
        let series = set
            .series
            .get(&ix)
            .ok_or_else(|| IngestError::MissingIndices(vec![ix.label().to_string()]))?;
        let months = ix.months(season);
        let mut sum = 0.0;
        for (y, m) in &months {
            sum += series.get(&(*y, *m)).ok_or(IngestError::MissingMonth {
                series: ix.label(),
                year: *y,
                month: *m,
            })?;
        }
        values.push(sum / months.len() as f64);
    }
    Ok(CovariateRow { season, values })
}
