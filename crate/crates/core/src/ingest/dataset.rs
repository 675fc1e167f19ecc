//! Season-level aggregation and the canonical JSON-lines dataset.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::covariates::{CovariateRow, CovariateSet};
use super::damage::DamageTable;
use super::hurdat2::{parse_hurdat2, Storm};
use super::storm::{summarize_storm, IntensityGroup, StormRecord};
use super::IngestError;

/// First season used by default; earlier records are considered unreliable.
pub const FIRST_SEASON: i32 = 1960;

/// Counts and total damage of one intensity group in one season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonObservation {
    pub season: i32,
    pub group: IntensityGroup,
    pub n_storms: u32,
    pub n_damaging: u32,
    pub total_damage_usd: f64,
    pub covariates: CovariateRow,
}

impl SeasonObservation {
    pub fn check(&self) -> Result<(), IngestError> {
        let ok = self.n_damaging <= self.n_storms
            && self.total_damage_usd >= 0.0
            && ((self.n_damaging == 0) == (self.total_damage_usd == 0.0));
        if ok {
            Ok(())
        } else {
            Err(IngestError::Invalid(format!(
                "season {} {}: inconsistent (N={}, L={}, D={})",
                self.season, self.group, self.n_storms, self.n_damaging, self.total_damage_usd
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonWindow {
    pub first: i32,
    pub last: i32,
}

impl SeasonWindow {
    pub fn contains(&self, season: i32) -> bool {
        (self.first..=self.last).contains(&season)
    }
}

/// One observation per (season, group) for every season in `window`.
///
/// Damage is the group's summed storm damage; empty groups give
/// `(N, L, D) = (0, 0, 0)`.
pub fn build_season_observations(
    storms: &[StormRecord],
    covariates: &BTreeMap<i32, CovariateRow>,
    window: SeasonWindow,
) -> Result<Vec<SeasonObservation>, IngestError> {
    let mut out = Vec::new();
    for season in window.first..=window.last {
        let cov = covariates
            .get(&season)
            .ok_or_else(|| IngestError::Invalid(format!("no covariates for season {season}")))?;
        for group in [IntensityGroup::Low, IntensityGroup::High] {
            let members = storms
                .iter()
                .filter(|s| s.season == season && s.intensity_group == group);
            let (mut n, mut l, mut d) = (0u32, 0u32, 0.0f64);
            for s in members {
                n += 1;
                if s.is_damaging() {
                    l += 1;
                    d += s.damage_usd_2019;
                }
            }
            let obs = SeasonObservation {
                season,
                group,
                n_storms: n,
                n_damaging: l,
                total_damage_usd: d,
                covariates: cov.clone(),
            };
            obs.check()?;
            out.push(obs);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub storms: Vec<StormRecord>,
    pub seasons: Vec<SeasonObservation>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Storm(StormRecord),
    Season(SeasonObservation),
}

impl Dataset {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), IngestError> {
        for s in &self.storms {
            serde_json::to_writer(&mut w, &Line::Storm(s.clone()))?;
            w.write_all(b"\n")?;
        }
        for s in &self.seasons {
            serde_json::to_writer(&mut w, &Line::Season(s.clone()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, IngestError> {
        let mut ds = Dataset::default();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Line>(&line).map_err(|e| IngestError::Csv {
                file: "dataset".into(),
                line: i as u64 + 1,
                message: e.to_string(),
            })? {
                Line::Storm(s) => ds.storms.push(s),
                Line::Season(s) => ds.seasons.push(s),
            }
        }
        Ok(ds)
    }

    pub fn seasons_for(&self, group: IntensityGroup) -> Vec<SeasonObservation> {
        self.seasons.iter().filter(|s| s.group == group).cloned().collect()
    }

    pub fn season(&self, group: IntensityGroup, year: i32) -> Option<&SeasonObservation> {
        self.seasons.iter().find(|s| s.group == group && s.season == year)
    }
}

/// Per-season, per-group tallies for the human-readable ingest report.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestSummary {
    pub storms: usize,
    pub damaging: usize,
    pub missing_pressure: Vec<String>,
    pub unmatched_damage_rows: Vec<(String, i32)>,
    /// season -> [low N, low L, high N, high L]
    pub per_season: BTreeMap<i32, [u32; 4]>,
}

/// Full ingestion: parse, summarize, filter to `window`, aggregate.
pub fn ingest(
    hurdat2: &str,
    covariates: &CovariateSet,
    damages: &DamageTable,
    window: Option<SeasonWindow>,
) -> Result<(Dataset, IngestSummary), IngestError> {
    let parsed: Vec<Storm> = parse_hurdat2(hurdat2)?;
    let latest = parsed.iter().map(|s| s.header.id.year).max().unwrap_or(FIRST_SEASON);
    let window = window.unwrap_or(SeasonWindow {
        first: FIRST_SEASON,
        last: latest,
    });
    let kept: Vec<&Storm> = parsed
        .iter()
        .filter(|s| window.contains(s.header.id.year))
        .collect();
    let storms = kept
        .iter()
        .map(|s| summarize_storm(s, damages))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cov_rows = BTreeMap::new();
    for season in window.first..=window.last {
        cov_rows.insert(season, covariates.row(season)?);
    }
    let seasons = build_season_observations(&storms, &cov_rows, window)?;

    let mut summary = IngestSummary {
        storms: storms.len(),
        damaging: storms.iter().filter(|s| s.is_damaging()).count(),
        missing_pressure: storms
            .iter()
            .filter(|s| s.min_central_pressure.is_none())
            .map(|s| s.id.clone())
            .collect(),
        unmatched_damage_rows: damages.unmatched(kept.iter().map(|s| &s.header)),
        per_season: BTreeMap::new(),
    };
    for o in &seasons {
        let e = summary.per_season.entry(o.season).or_default();
        let off = if o.group == IntensityGroup::Low { 0 } else { 2 };
        e[off] = o.n_storms;
        e[off + 1] = o.n_damaging;
    }
    Ok((Dataset { storms, seasons }, summary))
}
