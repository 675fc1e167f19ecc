mod common;

use std::fs;

use common::*;
use serde_json::Value;

const MINI: &str = "\
AL092016, HERMINE, 3,
20160828, 1800,  , TD, 22.0N,  80.0W,  30, 1009,
20160901, 1200,  , HU, 28.0N,  84.0W,  70,  983,
20160902, 0600, L, TS, 30.0N,  84.0W,  60,  986,
AL142016, MATTHEW, 2,
20161001, 0000,  , HU, 14.0N,  72.0W, 145,  934,
20161007, 0000,  , HU, 28.0N,  80.0W, 100, -999,
AL152016, NICOLE, 1,
20161010, 0000,  , TS, 26.0N,  65.0W,  60, -999,
";

fn jsonl(path: &std::path::Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn ingest_mini_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("h.txt"), MINI).unwrap();
    fs::write(d.join("dmg.csv"), "name,year,damage_usd_2019\nHermine,2016,610000000\n").unwrap();
    write_covariates(&d.join("cov"));
    let out = d.join("ds.jsonl");
    let o = ok(&[
        "ingest", "--hurdat2", p(&d.join("h.txt")), "--covariates", p(&d.join("cov")), "--damages",
        p(&d.join("dmg.csv")), "--first", "2016", "--last", "2016", "--out", p(&out),
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("3 storms, 1 damaging\n"), "{text}");
    assert!(text.contains("2016      2      1       1       0"), "{text}");
    assert!(text.contains("no pressure on record: AL152016"), "{text}");

    let lines = jsonl(&out);
    let storms: Vec<&Value> = lines.iter().filter(|l| l["kind"] == "storm").collect();
    assert_eq!(storms.len(), 3);
    let by_id = |id: &str| *storms.iter().find(|s| s["id"] == id).unwrap();
    let hermine = by_id("AL092016");
    assert_eq!(hermine["intensity_group"], "low");
    assert_eq!(hermine["max_wind_speed"], 70.0);
    assert_eq!(hermine["min_central_pressure"], 983.0);
    assert!((hermine["mean_latitude"].as_f64().unwrap() - 80.0 / 3.0).abs() < 1e-12);
    assert_eq!(hermine["damage_usd_2019"], 6.1e8);
    assert_eq!(by_id("AL142016")["intensity_group"], "high");
    assert_eq!(by_id("AL142016")["min_central_pressure"], 934.0);
    assert_eq!(by_id("AL152016")["intensity_group"], "low");

    let seasons: Vec<&Value> = lines.iter().filter(|l| l["kind"] == "season").collect();
    let low = seasons.iter().find(|s| s["group"] == "low").unwrap();
    assert_eq!((low["n_storms"].as_u64(), low["n_damaging"].as_u64()), (Some(2), Some(1)));
    assert_eq!(low["total_damage_usd"], 6.1e8);
    let high = seasons.iter().find(|s| s["group"] == "high").unwrap();
    assert_eq!((high["n_storms"].as_u64(), high["total_damage_usd"].as_f64()), (Some(1), Some(0.0)));

    let m: Value = serde_json::from_str(&fs::read_to_string(d.join("ds.jsonl.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "ingest");
    assert_eq!(m["inputs"].as_array().unwrap().len(), 8);
    assert_eq!(m["artifacts"].as_array().unwrap().len(), 2);
}

#[test]
fn ingest_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("h.txt"), MINI).unwrap();
    fs::create_dir(d.join("empty")).unwrap();
    fs::write(d.join("dmg.csv"), "name,year,damage_usd_2019\n").unwrap();
    let o = run(&[
        "ingest", "--hurdat2", p(&d.join("h.txt")), "--covariates", p(&d.join("empty")), "--damages",
        p(&d.join("dmg.csv")), "--out", p(&d.join("x.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "input");
    let msg = e["message"].as_str().unwrap();
    for ix in ["AMO", "SOI", "NAO", "Nino3.4", "SST", "SSN"] {
        assert!(msg.contains(ix), "{msg}");
    }

    write_covariates(&d.join("cov"));
    fs::write(
        d.join("dup.csv"),
        "name,year,damage_usd_2019\nHERMINE,2016,1e8\nhermine,2016,2e8\n",
    )
    .unwrap();
    let o = run(&[
        "ingest", "--hurdat2", p(&d.join("h.txt")), "--covariates", p(&d.join("cov")), "--damages",
        p(&d.join("dup.csv")), "--first", "2016", "--last", "2016", "--out", p(&d.join("x.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("duplicate damage rows for HERMINE 2016"));

    fs::write(d.join("bad.txt"), "AL092016, HERMINE, 3,\n20160828, 1800,  , TD, 22.0N,  80.0W,  30, 1009,\n").unwrap();
    let o = run(&[
        "ingest", "--hurdat2", p(&d.join("bad.txt")), "--covariates", p(&d.join("cov")), "--damages",
        p(&d.join("dmg.csv")), "--out", p(&d.join("x.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("declares 3 rows but 1"));
}

#[test]
fn usage_errors_are_json() {
    let o = run(&["fit-seasonal", "--group", "medium"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["exit_code"], 2);
    assert!(run(&["--help"]).status.success());
}

#[test]
fn data_root_resolves_relative_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("h.txt"), MINI).unwrap();
    fs::write(d.join("dmg.csv"), "name,year,damage_usd_2019\n").unwrap();
    write_covariates(&d.join("cov"));
    let out = d.join("ds.jsonl");
    let o = bin()
        .env("HURRICAST_DATA_ROOT", d)
        .args([
            "ingest", "--hurdat2", "h.txt", "--covariates", "cov", "--damages", "dmg.csv", "--first", "2016",
            "--last", "2016", "--out", p(&out),
        ])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.is_file());
}
