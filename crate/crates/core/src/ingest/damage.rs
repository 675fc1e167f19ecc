//! Normalized damage table keyed by (storm name, season).
//!
//! Storms named `UNNAMED` cannot be joined by name; their damages come from
//! an override table keyed by HURDAT2 storm id.

use std::collections::HashMap;
use std::io::Read;

use serde::Deserialize;

use super::hurdat2::StormHeader;
use super::IngestError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DamageTable {
    by_name: HashMap<(String, i32), f64>,
    by_id: HashMap<String, f64>,
}

#[derive(Deserialize)]
struct NamedRow {
    name: String,
    year: i32,
    damage_usd_2019: f64,
}

#[derive(Deserialize)]
struct OverrideRow {
    storm_id: String,
    damage_usd_2019: f64,
}

fn require_header<R: Read>(
    rdr: &mut csv::Reader<R>,
    source: &str,
    expected: &[&str],
) -> Result<(), IngestError> {
    let headers = rdr.headers().map_err(|e| IngestError::csv(source, e))?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(IngestError::BadHeader {
            file: source.to_string(),
            expected: expected.join(","),
            found: got.join(","),
        });
    }
    Ok(())
}

fn check_damage(source: &str, line: u64, v: f64) -> Result<f64, IngestError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(IngestError::Csv {
            file: source.to_string(),
            line,
            message: format!("damage must be a non-negative number, got {v}"),
        })
    }
}

impl DamageTable {
    /// Reads `name,year,damage_usd_2019`. Duplicate (name, year) rows are an
    /// error rather than being summed.
    pub fn from_csv<R: Read>(reader: R, source: &str) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        require_header(&mut rdr, source, &["name", "year", "damage_usd_2019"])?;
        let mut table = DamageTable::default();
        let mut first_line: HashMap<(String, i32), u64> = HashMap::new();
        for rec in rdr.deserialize::<NamedRow>() {
            let row = rec.map_err(|e| IngestError::csv(source, e))?;
            // header is line 1
            let line = first_line.len() as u64 + 2;
            let key = (row.name.to_ascii_uppercase(), row.year);
            let v = check_damage(source, line, row.damage_usd_2019)?;
            if let Some(&prev) = first_line.get(&key) {
                return Err(IngestError::DuplicateDamage {
                    name: key.0,
                    year: key.1,
                    first_line: prev,
                    second_line: line,
                });
            }
            first_line.insert(key.clone(), line);
            table.by_name.insert(key, v);
        }
        Ok(table)
    }

    /// Adds `storm_id,damage_usd_2019` overrides, which take precedence over
    /// the name join.
    pub fn add_overrides<R: Read>(&mut self, reader: R, source: &str) -> Result<(), IngestError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        require_header(&mut rdr, source, &["storm_id", "damage_usd_2019"])?;
        for (i, rec) in rdr.deserialize::<OverrideRow>().enumerate() {
            let row = rec.map_err(|e| IngestError::csv(source, e))?;
            let line = i as u64 + 2;
            let v = check_damage(source, line, row.damage_usd_2019)?;
            if self.by_id.insert(row.storm_id.clone(), v).is_some() {
                return Err(IngestError::Csv {
                    file: source.to_string(),
                    line,
                    message: format!("duplicate override for {}", row.storm_id),
                });
            }
        }
        Ok(())
    }

    pub fn insert(&mut self, name: &str, year: i32, damage: f64) {
        self.by_name.insert((name.to_ascii_uppercase(), year), damage);
    }

    /// Damage for a storm, 0 when nothing is recorded.
    pub fn lookup(&self, header: &StormHeader) -> f64 {
        if let Some(&v) = self.by_id.get(&header.id.to_string()) {
            return v;
        }
        let name = header.name.to_ascii_uppercase();
        if name == "UNNAMED" {
            return 0.0;
        }
        self.by_name
            .get(&(name, header.id.year))
            .copied()
            .unwrap_or(0.0)
    }

    /// Table entries that match none of the given headers.
    pub fn unmatched<'a>(&self, headers: impl IntoIterator<Item = &'a StormHeader>) -> Vec<(String, i32)> {
        let seen: std::collections::HashSet<(String, i32)> = headers
            .into_iter()
            .map(|h| (h.name.to_ascii_uppercase(), h.id.year))
            .collect();
        let mut out: Vec<_> = self
            .by_name
            .keys()
            .filter(|k| !seen.contains(*k))
            .cloned()
            .collect();
        out.sort();
        out
    }

    pub fn len(&self) -> usize {
        self.by_name.len() + self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
