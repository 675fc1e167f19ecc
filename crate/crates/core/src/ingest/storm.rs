use serde::{Deserialize, Serialize};

use super::damage::DamageTable;
use super::hurdat2::Storm;
use super::IngestError;

/// Saffir-Simpson class of a storm's lifetime peak wind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SaffirSimpson {
    #[serde(rename = "TS")]
    TropicalStorm,
    #[serde(rename = "1")]
    Cat1,
    #[serde(rename = "2")]
    Cat2,
    #[serde(rename = "3")]
    Cat3,
    #[serde(rename = "4")]
    Cat4,
    #[serde(rename = "5")]
    Cat5,
}

impl SaffirSimpson {
    /// Operational knot thresholds: 64, 83, 96, 113, 137.
    pub fn from_knots(kt: f64) -> Self {
        match kt {
            k if k >= 137.0 => Self::Cat5,
            k if k >= 113.0 => Self::Cat4,
            k if k >= 96.0 => Self::Cat3,
            k if k >= 83.0 => Self::Cat2,
            k if k >= 64.0 => Self::Cat1,
            _ => Self::TropicalStorm,
        }
    }

    pub fn group(self) -> IntensityGroup {
        if self >= Self::Cat3 {
            IntensityGroup::High
        } else {
            IntensityGroup::Low
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::TropicalStorm => "TS",
            Self::Cat1 => "1",
            Self::Cat2 => "2",
            Self::Cat3 => "3",
            Self::Cat4 => "4",
            Self::Cat5 => "5",
        }
    }
}

/// Low: tropical storms through category 2. High: categories 3-5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityGroup {
    Low,
    High,
}

impl std::str::FromStr for IntensityGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Self::Low),
            "high" => Ok(Self::High),
            other => Err(format!("intensity group must be low or high, got {other:?}")),
        }
    }
}

impl std::fmt::Display for IntensityGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Low => "low",
            Self::High => "high",
        })
    }
}

/// Lifetime summary of one storm joined with its normalized damage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StormRecord {
    pub id: String,
    pub name: String,
    pub season: i32,
    /// Knots.
    pub max_wind_speed: f64,
    /// Millibars; `None` when every fix is missing.
    pub min_central_pressure: Option<f64>,
    pub mean_latitude: f64,
    pub category: SaffirSimpson,
    pub intensity_group: IntensityGroup,
    pub damage_usd_2019: f64,
}

impl StormRecord {
    pub fn is_damaging(&self) -> bool {
        self.damage_usd_2019 > 0.0
    }
}

/// Collapses a track to its lifetime summary.
///
/// Peak wind and minimum pressure skip missing fixes; mean latitude uses
/// every fix.
pub fn summarize_storm(storm: &Storm, damages: &DamageTable) -> Result<StormRecord, IngestError> {
    let id = storm.header.id.to_string();
    if storm.track.is_empty() {
        return Err(IngestError::EmptyTrack(id));
    }
    let max_wind = storm
        .track
        .iter()
        .filter_map(|p| p.max_wind)
        .max()
        .filter(|&w| w > 0)
        .ok_or_else(|| IngestError::EmptyTrack(format!("{id}: no valid wind observations")))?
        as f64;
    let min_pressure = storm
        .track
        .iter()
        .filter_map(|p| p.min_pressure)
        .min()
        .map(f64::from);
    if let Some(p) = min_pressure {
        if !(800.0 < p && p < 1100.0) {
            return Err(IngestError::Invalid(format!(
                "{id}: minimum pressure {p} mb outside (800, 1100)"
            )));
        }
    }
    let mean_latitude =
        storm.track.iter().map(|p| p.latitude).sum::<f64>() / storm.track.len() as f64;
    let category = SaffirSimpson::from_knots(max_wind);
    Ok(StormRecord {
        damage_usd_2019: damages.lookup(&storm.header),
        id,
        name: storm.header.name.clone(),
        season: storm.header.id.year,
        max_wind_speed: max_wind,
        min_central_pressure: min_pressure,
        mean_latitude,
        category,
        intensity_group: category.group(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::hurdat2::parse_hurdat2;

    fn storm(winds: &[i32], lats: &[f64]) -> Storm {
        let mut text = format!("AL052005, TESTER, {},\n", winds.len());
        for (w, lat) in winds.iter().zip(lats) {
            text.push_str(&format!(
                "20050801, 1200,  , HU, {lat:.1}N,  80.0W, {w:>3}, -999,\n"
            ));
        }
        parse_hurdat2(&text).unwrap().remove(0)
    }

    #[test]
    fn category_and_group() {
        let s = summarize_storm(&storm(&[40, 100, 90], &[20.0, 22.0, 24.0]), &DamageTable::default())
            .unwrap();
        assert_eq!(s.max_wind_speed, 100.0);
        assert_eq!(s.category, SaffirSimpson::Cat3);
        assert_eq!(s.intensity_group, IntensityGroup::High);
        assert_eq!(s.mean_latitude, 22.0);
        assert_eq!(s.min_central_pressure, None);
        assert_eq!(s.damage_usd_2019, 0.0);

        let ts = summarize_storm(&storm(&[60], &[25.0]), &DamageTable::default()).unwrap();
        assert_eq!(ts.category, SaffirSimpson::TropicalStorm);
        assert_eq!(ts.intensity_group, IntensityGroup::Low);
    }

    #[test]
    fn thresholds_are_monotone() {
        let mut prev = SaffirSimpson::TropicalStorm;
        for kt in 0..200 {
            let c = SaffirSimpson::from_knots(kt as f64);
            assert!(c >= prev);
            prev = c;
        }
        for (kt, c) in [
            (63.0, SaffirSimpson::TropicalStorm),
            (64.0, SaffirSimpson::Cat1),
            (82.0, SaffirSimpson::Cat1),
            (83.0, SaffirSimpson::Cat2),
            (95.0, SaffirSimpson::Cat2),
            (96.0, SaffirSimpson::Cat3),
            (112.0, SaffirSimpson::Cat3),
            (113.0, SaffirSimpson::Cat4),
            (136.0, SaffirSimpson::Cat4),
            (137.0, SaffirSimpson::Cat5),
        ] {
            assert_eq!(SaffirSimpson::from_knots(kt), c, "{kt} kt");
        }
    }
}
