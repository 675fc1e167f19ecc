#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hurricast"));
    c.env_remove("HURRICAST_DATA_ROOT");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Tiny deterministic generator so fixtures need no RNG crate.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
    }

    pub fn unit(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let (a, b) = (self.unit(), self.unit());
        (-2.0 * a.ln()).sqrt() * (2.0 * std::f64::consts::PI * b).cos()
    }
}

/// All six index files, every month from 1950 through 2025.
pub fn write_covariates(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    for (k, stem) in ["amo", "soi", "nao", "nino34", "sst", "ssn"].iter().enumerate() {
        let mut r = Lcg::new(k as u64 + 100);
        let mut s = String::from("year,month,value\n");
        for y in 1950..=2025 {
            for m in 1..=12 {
                let v = if *stem == "ssn" { 80.0 + 40.0 * r.normal() } else { r.normal() };
                writeln!(s, "{y},{m},{v:.3}").unwrap();
            }
        }
        fs::write(dir.join(format!("{stem}.csv")), s).unwrap();
    }
}

pub fn track_row(date: &str, wind: i32, pressure: i32, lat: f64) -> String {
    format!("{date}, 1200,  , HU, {lat:.1}N,  80.0W, {wind:>3}, {pressure:>4},\n")
}

pub struct World {
    pub hurdat2: PathBuf,
    pub covariates: PathBuf,
    pub damages: PathBuf,
}

/// Synthetic basin history for `first..=last` with a few storms per
/// season, enough damaging ones for the per-storm model.
pub fn write_world(dir: &Path, first: i32, last: i32) -> World {
    let mut r = Lcg::new(7);
    let mut hurdat = String::new();
    let mut damages = String::from("name,year,damage_usd_2019\n");
    for year in first..=last {
        let n = 3 + (r.unit() * 6.0) as usize;
        for k in 0..n {
            let name = format!("S{year}X{k}");
            let peak = (35.0 + 45.0 * r.unit() + 40.0 * r.unit() * r.unit()) as i32;
            let pressure = (1012.0 - 0.85 * f64::from(peak - 30) + 4.0 * r.normal()) as i32;
            let lat = 18.0 + 14.0 * r.unit();
            writeln!(hurdat, "AL{:02}{year}, {name}, 3,", k + 1).unwrap();
            hurdat.push_str(&track_row(&format!("{year}0810"), peak - 10, pressure + 6, lat - 1.0));
            hurdat.push_str(&track_row(&format!("{year}0811"), peak, pressure, lat));
            hurdat.push_str(&track_row(&format!("{year}0812"), peak - 20, -999, lat + 1.0));
            if r.unit() < 0.45 {
                let ln_d = 16.0 + 0.05 * f64::from(peak) + 1.2 * r.normal();
                writeln!(damages, "{name},{year},{:.0}", ln_d.exp()).unwrap();
            }
        }
    }
    let w = World {
        hurdat2: dir.join("hurdat2.txt"),
        covariates: dir.join("covariates"),
        damages: dir.join("damages.csv"),
    };
    fs::write(&w.hurdat2, hurdat).unwrap();
    fs::write(&w.damages, damages).unwrap();
    write_covariates(&w.covariates);
    w
}

pub fn stderr_json(out: &Output) -> serde_json::Value {
    let s = String::from_utf8_lossy(&out.stderr);
    let line = s.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {s}"))
}
