//! Reader and writer for the HURDAT2 best-track text format.
//!
//! ```text
//! AL092017,             HARVEY,     61,
//! 20170825, 0300, L, HU, 28.0N,  96.9W, 115,  937,  120, ...
//! ```
//!
//! Each header names a storm and the number of six-hourly rows that follow.
//! `-999` (and `-99` in the wind column) mark missing values.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StormId {
    pub basin: String,
    pub number: u8,
    pub year: i32,
}

impl std::fmt::Display for StormId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{:02}{:04}", self.basin, self.number, self.year)
    }
}

impl std::str::FromStr for StormId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let b = s.as_bytes();
        if b.len() != 8
            || !b[..2].iter().all(u8::is_ascii_uppercase)
            || !b[2..].iter().all(u8::is_ascii_digit)
        {
            return Err(format!("storm id must look like AL092017, got {s:?}"));
        }
        Ok(StormId {
            basin: s[..2].to_string(),
            number: s[2..4].parse().map_err(|_| s.to_string())?,
            year: s[4..].parse().map_err(|_| s.to_string())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StormHeader {
    pub id: StormId,
    pub name: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamp {
    pub year: i32,
    pub month: u8,
    pub day: u8,
    pub hour: u8,
    pub minute: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub time: Timestamp,
    /// `L` marks landfall; blank for ordinary synoptic fixes.
    pub record_id: Option<char>,
    pub status: String,
    /// Degrees north (negative south).
    pub latitude: f64,
    /// Degrees east (negative west).
    pub longitude: f64,
    /// Knots.
    pub max_wind: Option<i32>,
    /// Millibars.
    pub min_pressure: Option<i32>,
    /// Wind radii (34/50/64 kt quadrants) and, in newer files, radius of
    /// maximum wind. Kept verbatim.
    pub radii: Vec<Option<i32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Storm {
    pub header: StormHeader,
    pub track: Vec<TrackPoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct HurdatError {
    pub line: usize,
    pub column: usize,
    pub kind: HurdatErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HurdatErrorKind {
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("malformed {field} field {value:?}")]
    BadField { field: &'static str, value: String },
    #[error("malformed coordinate {0:?}")]
    BadCoordinate(String),
    #[error("storm {storm} declares {expected} rows but {found} were found")]
    RowCountMismatch {
        storm: String,
        expected: usize,
        found: usize,
    },
    #[error("data row outside any storm block")]
    OrphanRow,
}

/// A comma-separated field with its 1-based starting column.
struct Field<'a> {
    text: &'a str,
    column: usize,
}

fn split_fields(line: &str) -> Vec<Field<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in line.char_indices().chain(std::iter::once((line.len(), ','))) {
        if c == ',' {
            let raw = &line[start..i];
            let lead = raw.len() - raw.trim_start().len();
            out.push(Field {
                text: raw.trim(),
                column: start + lead + 1,
            });
            start = i + 1;
        }
    }
    // HURDAT2 lines end with a comma; drop the empty tail it creates.
    while out.last().is_some_and(|f| f.text.is_empty()) {
        out.pop();
    }
    out
}

fn looks_like_header(fields: &[Field<'_>]) -> bool {
    fields
        .first()
        .is_some_and(|f| f.text.len() >= 2 && f.text.as_bytes()[..2].iter().all(u8::is_ascii_alphabetic))
}

fn err(line: usize, column: usize, kind: HurdatErrorKind) -> HurdatError {
    HurdatError { line, column, kind }
}

fn parse_header(fields: &[Field<'_>], line: usize) -> Result<StormHeader, HurdatError> {
    if fields.len() != 3 {
        return Err(err(
            line,
            1,
            HurdatErrorKind::BadHeader(format!("expected 3 fields, found {}", fields.len())),
        ));
    }
    let id = fields[0]
        .text
        .parse::<StormId>()
        .map_err(|m| err(line, fields[0].column, HurdatErrorKind::BadHeader(m)))?;
    let rows = fields[2].text.parse::<usize>().map_err(|_| {
        err(
            line,
            fields[2].column,
            HurdatErrorKind::BadField {
                field: "row count",
                value: fields[2].text.to_string(),
            },
        )
    })?;
    Ok(StormHeader {
        id,
        name: fields[1].text.to_string(),
        rows,
    })
}

fn parse_int(f: &Field<'_>, line: usize, field: &'static str) -> Result<i32, HurdatError> {
    f.text.parse::<i32>().map_err(|_| {
        err(
            line,
            f.column,
            HurdatErrorKind::BadField {
                field,
                value: f.text.to_string(),
            },
        )
    })
}

fn parse_measure(f: &Field<'_>, line: usize, field: &'static str) -> Result<Option<i32>, HurdatError> {
    let v = parse_int(f, line, field)?;
    Ok(if v <= -99 { None } else { Some(v) })
}

fn parse_coordinate(f: &Field<'_>, line: usize, lat: bool) -> Result<f64, HurdatError> {
    let bad = || err(line, f.column, HurdatErrorKind::BadCoordinate(f.text.to_string()));
    let (num, hemi) = f.text.split_at(f.text.len().saturating_sub(1));
    let sign = match (hemi, lat) {
        ("N", true) | ("E", false) => 1.0,
        ("S", true) | ("W", false) => -1.0,
        _ => return Err(bad()),
    };
    let v: f64 = num.parse().map_err(|_| bad())?;
    let limit = if lat { 90.0 } else { 180.0 };
    if !(0.0..=limit).contains(&v) {
        return Err(bad());
    }
    Ok(sign * v)
}

fn parse_row(fields: &[Field<'_>], line: usize) -> Result<TrackPoint, HurdatError> {
    if fields.len() < 8 {
        let column = fields.last().map_or(1, |f| f.column);
        return Err(err(
            line,
            column,
            HurdatErrorKind::BadField {
                field: "row",
                value: format!("expected at least 8 fields, found {}", fields.len()),
            },
        ));
    }
    let date = &fields[0];
    let bad_date = || {
        err(
            line,
            date.column,
            HurdatErrorKind::BadField {
                field: "date",
                value: date.text.to_string(),
            },
        )
    };
    if date.text.len() != 8 || !date.text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad_date());
    }
    let year: i32 = date.text[..4].parse().map_err(|_| bad_date())?;
    let month: u8 = date.text[4..6].parse().map_err(|_| bad_date())?;
    let day: u8 = date.text[6..].parse().map_err(|_| bad_date())?;
    if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
        return Err(bad_date());
    }
    let hhmm = &fields[1];
    let bad_time = || {
        err(
            line,
            hhmm.column,
            HurdatErrorKind::BadField {
                field: "time",
                value: hhmm.text.to_string(),
            },
        )
    };
    if hhmm.text.len() != 4 || !hhmm.text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad_time());
    }
    let hour: u8 = hhmm.text[..2].parse().map_err(|_| bad_time())?;
    let minute: u8 = hhmm.text[2..].parse().map_err(|_| bad_time())?;
    if hour > 23 || minute > 59 {
        return Err(bad_time());
    }
    let rid = &fields[2];
    let record_id = match rid.text.len() {
        0 => None,
        1 => rid.text.chars().next(),
        _ => {
            return Err(err(
                line,
                rid.column,
                HurdatErrorKind::BadField {
                    field: "record identifier",
                    value: rid.text.to_string(),
                },
            ))
        }
    };
    let status = fields[3].text.to_string();
    let latitude = parse_coordinate(&fields[4], line, true)?;
    let longitude = parse_coordinate(&fields[5], line, false)?;
    let max_wind = parse_measure(&fields[6], line, "maximum wind")?;
    let min_pressure = parse_measure(&fields[7], line, "minimum pressure")?;
    let radii = fields[8..]
        .iter()
        .map(|f| parse_measure(f, line, "wind radius"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrackPoint {
        time: Timestamp {
            year,
            month,
            day,
            hour,
            minute,
        },
        record_id,
        status,
        latitude,
        longitude,
        max_wind,
        min_pressure,
        radii,
    })
}

/// Parses a whole HURDAT2 file. Blank lines are ignored.
pub fn parse_hurdat2(text: &str) -> Result<Vec<Storm>, HurdatError> {
    let mut storms: Vec<Storm> = Vec::new();
    let mut open: Option<(Storm, usize)> = None;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        if raw.trim().is_empty() {
            continue;
        }
        let fields = split_fields(raw);
        let is_header = looks_like_header(&fields);
        match open.take() {
            Some((mut storm, header_line)) => {
                if is_header {
                    return Err(err(
                        line,
                        1,
                        HurdatErrorKind::RowCountMismatch {
                            storm: storm.header.id.to_string(),
                            expected: storm.header.rows,
                            found: storm.track.len(),
                        },
                    ));
                }
                storm.track.push(parse_row(&fields, line)?);
                if storm.track.len() == storm.header.rows {
                    storms.push(storm);
                } else {
                    open = Some((storm, header_line));
                }
            }
            None => {
                if !is_header {
                    let kind = match storms.last() {
                        Some(prev) => HurdatErrorKind::RowCountMismatch {
                            storm: prev.header.id.to_string(),
                            expected: prev.header.rows,
                            found: prev.header.rows + 1,
                        },
                        None => HurdatErrorKind::OrphanRow,
                    };
                    return Err(err(line, 1, kind));
                }
                let header = parse_header(&fields, line)?;
                let storm = Storm {
                    track: Vec::with_capacity(header.rows),
                    header,
                };
                if storm.header.rows == 0 {
                    storms.push(storm);
                } else {
                    open = Some((storm, line));
                }
            }
        }
    }
    if let Some((storm, _)) = open {
        return Err(err(
            last_line + 1,
            1,
            HurdatErrorKind::RowCountMismatch {
                storm: storm.header.id.to_string(),
                expected: storm.header.rows,
                found: storm.track.len(),
            },
        ));
    }
    Ok(storms)
}

fn fmt_coord(v: f64, pos: char, neg: char) -> String {
    format!("{:.1}{}", v.abs(), if v < 0.0 { neg } else { pos })
}

/// Writes storms back out in the published column layout.
pub fn write_hurdat2(storms: &[Storm]) -> String {
    let mut out = String::new();
    for s in storms {
        let h = &s.header;
        let _ = writeln!(out, "{},{:>19},{:>7},", h.id, h.name, s.track.len());
        for p in &s.track {
            let t = &p.time;
            let _ = write!(
                out,
                "{:04}{:02}{:02}, {:02}{:02}, {:>1}, {:>2}, {:>5}, {:>6}, {:>3}, {:>4},",
                t.year,
                t.month,
                t.day,
                t.hour,
                t.minute,
                p.record_id.map(String::from).unwrap_or_default(),
                p.status,
                fmt_coord(p.latitude, 'N', 'S'),
                fmt_coord(p.longitude, 'E', 'W'),
                p.max_wind.unwrap_or(-99),
                p.min_pressure.unwrap_or(-999),
            );
            for r in &p.radii {
                let _ = write!(out, " {:>4},", r.unwrap_or(-999));
            }
            out.push('\n');
        }
    }
    out
}
