use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use hurricast_core::cyclone::{
    fit_bayes, fit_mle, predict_cyclone, score_storm, CycloneDataset, CyclonePrior, CycloneTransforms, MleOptions,
    NaturalDraws, PARAM_NAMES,
};
use hurricast_core::ingest::{
    ingest, CovariateIndex, CovariateSet, Dataset, DamageTable, IngestSummary, SeasonWindow,
};
use hurricast_core::mcmc::{diagnostics, posterior_summary, ChainMeta, PosteriorChain, SamplerConfig};
use hurricast_core::par::Execution;
use hurricast_core::seasonal::{
    count_mass, expected_damage, fit_seasonal, log_damage_density, predict_season, predictive_check, SeasonalModel,
    SeasonalPrior,
};
use hurricast_core::stats;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::manifest::{sha256_file, sibling, Recorder};
use crate::{
    Cli, Command, DiagnoseArgs, FitCycloneArgs, FitSeasonalArgs, IngestArgs, Method, PredictCycloneArgs,
    PredictSeasonArgs, ScoreArgs, DATA_ROOT_ENV,
};

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let ctx = Ctx { seed: cli.seed, exec };
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(&ctx, a),
        Command::FitSeasonal(a) => cmd_fit_seasonal(&ctx, a),
        Command::PredictSeason(a) => cmd_predict_season(&ctx, a),
        Command::FitCyclone(a) => cmd_fit_cyclone(&ctx, a),
        Command::PredictCyclone(a) => cmd_predict_cyclone(&ctx, a),
        Command::Score(a) => cmd_score(a),
        Command::Diagnose(a) => cmd_diagnose(a),
    }
}

struct Ctx {
    seed: u64,
    exec: Execution,
}

/// Relative inputs are looked up under the data root when one is set.
fn input_path(p: &Path) -> PathBuf {
    match std::env::var_os(DATA_ROOT_ENV) {
        Some(root) if p.is_relative() && !p.exists() => Path::new(&root).join(p),
        _ => p.to_path_buf(),
    }
}

fn open(p: &Path) -> Result<File, CliError> {
    File::open(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))
}

fn read_text(p: &Path) -> Result<String, CliError> {
    fs::read_to_string(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))
}

fn create(p: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(p)
        .map(BufWriter::new)
        .map_err(|e| CliError::input(format!("{}: {e}", p.display())))
}

fn write_json(p: &Path, v: &impl Serialize) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(p, s).map_err(|e| CliError::input(format!("{}: {e}", p.display())))
}

fn load_dataset(p: &Path) -> Result<Dataset, CliError> {
    Ok(Dataset::read_jsonl(BufReader::new(open(p)?))?)
}

fn parse_indices(s: &str) -> Result<Vec<CovariateIndex>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            CovariateIndex::ALL
                .into_iter()
                .find(|ix| ix.stem() == t.to_ascii_lowercase())
                .ok_or_else(|| CliError::input(format!("unknown covariate index {t:?}")))
        })
        .collect()
}

fn cmd_ingest(ctx: &Ctx, a: &IngestArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("ingest");
    rec.set("seed", ctx.seed);
    let hurdat = input_path(&a.hurdat2);
    let cov_dir = input_path(&a.covariates);
    let dmg = input_path(&a.damages);
    rec.input(&hurdat)?;
    rec.input(&dmg)?;
    let covariates = CovariateSet::from_dir(&cov_dir)?;
    for ix in CovariateIndex::ALL {
        rec.input(&cov_dir.join(format!("{}.csv", ix.stem())))?;
    }
    let mut damages = DamageTable::from_csv(open(&dmg)?, &dmg.display().to_string())?;
    if let Some(o) = &a.overrides {
        let o = input_path(o);
        rec.input(&o)?;
        damages.add_overrides(open(&o)?, &o.display().to_string())?;
    }
    let window = match (a.first, a.last) {
        (None, None) => None,
        (f, l) => Some(SeasonWindow {
            first: f.unwrap_or(hurricast_core::ingest::FIRST_SEASON),
            last: l.unwrap_or(i32::MAX),
        }),
    };
    if let Some(w) = window {
        rec.set("first", w.first);
        rec.set("last", w.last);
        if w.last == i32::MAX {
            return Err(CliError::input("--first needs --last"));
        }
    }
    let (dataset, summary) = ingest(&read_text(&hurdat)?, &covariates, &damages, window)?;
    let mut w = create(&a.out)?;
    dataset.write_jsonl(&mut w)?;
    w.flush()?;
    drop(w);
    rec.artifact(&a.out);
    let summary_path = sibling(&a.out, "summary.json");
    write_json(&summary_path, &summary)?;
    rec.artifact(&summary_path);
    rec.finish(&a.out)?;
    print!("{}", human_summary(&summary));
    Ok(())
}

fn human_summary(s: &IngestSummary) -> String {
    let mut out = format!("{} storms, {} damaging\n", s.storms, s.damaging);
    out.push_str("season  low_N  low_L  high_N  high_L\n");
    for (season, [ln, ll, hn, hl]) in &s.per_season {
        out.push_str(&format!("{season}  {ln:>5}  {ll:>5}  {hn:>6}  {hl:>6}\n"));
    }
    if !s.missing_pressure.is_empty() {
        out.push_str(&format!("no pressure on record: {}\n", s.missing_pressure.join(" ")));
    }
    for (name, year) in &s.unmatched_damage_rows {
        out.push_str(&format!("damage row not matched to a storm: {name} {year}\n"));
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ChainPayload {
    Seasonal {
        model: SeasonalModel,
        window: (i32, i32),
        dataset_sha256: String,
        chain_sha256: String,
    },
    Cyclone {
        transforms: CycloneTransforms,
        prior: CyclonePrior,
        n_storms: usize,
        skipped: Vec<String>,
        dataset_sha256: String,
        chain_sha256: String,
    },
}

impl ChainPayload {
    fn chain_sha256(&self) -> &str {
        match self {
            ChainPayload::Seasonal { chain_sha256, .. } | ChainPayload::Cyclone { chain_sha256, .. } => chain_sha256,
        }
    }
}

/// Writes the chain CSV and its JSON sidecar; `payload` receives the CSV hash.
fn write_chain(
    rec: &mut Recorder,
    path: &Path,
    chain: &PosteriorChain,
    payload: impl FnOnce(String) -> ChainPayload,
) -> Result<(), CliError> {
    let mut w = create(path)?;
    chain.write_csv(&mut w)?;
    w.flush()?;
    drop(w);
    let payload = payload(sha256_file(path)?);
    let meta = chain.meta(serde_json::to_value(&payload)?);
    let side = sibling(path, "json");
    write_json(&side, &meta)?;
    rec.artifact(path);
    rec.artifact(&side);
    Ok(())
}

/// Reads a chain and its sidecar, rejecting a CSV whose hash differs from
/// the one recorded at fit time.
fn load_chain(rec: Option<&mut Recorder>, path: &Path) -> Result<(PosteriorChain, ChainPayload), CliError> {
    let side = sibling(path, "json");
    let meta: ChainMeta = serde_json::from_str(&read_text(&side)?)
        .map_err(|e| CliError::input(format!("{}: {e}", side.display())))?;
    let payload: ChainPayload = serde_json::from_value(meta.model.clone())
        .map_err(|e| CliError::input(format!("{}: model payload: {e}", side.display())))?;
    let got = match rec {
        Some(r) => {
            r.input(&side)?;
            r.input(path)?
        }
        None => sha256_file(path)?,
    };
    if got != payload.chain_sha256() {
        return Err(CliError::input(format!(
            "hash mismatch: {} has sha256 {got}, sidecar records {}",
            path.display(),
            payload.chain_sha256()
        )));
    }
    let chain = PosteriorChain::read_csv(open(path)?, &meta)?;
    Ok((chain, payload))
}

fn check_dataset_hash(expected: &str, got: &str, path: &Path) -> Result<(), CliError> {
    if expected != got {
        return Err(CliError::input(format!(
            "hash mismatch: dataset {} has sha256 {got}, the chain was fitted on {expected}",
            path.display()
        )));
    }
    Ok(())
}

fn interval(xs: &[f64]) -> Value {
    let s = stats::sorted(xs);
    json!({
        "mean": stats::mean(xs),
        "median": stats::quantile_sorted(&s, 0.5),
        "lower": stats::quantile_sorted(&s, 0.025),
        "upper": stats::quantile_sorted(&s, 0.975),
    })
}

fn cmd_fit_seasonal(ctx: &Ctx, a: &FitSeasonalArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("fit-seasonal");
    let data = input_path(&a.data);
    let dataset_sha256 = rec.input(&data)?;
    let ds = load_dataset(&data)?;
    let columns = parse_indices(&a.indices)?;
    let all = ds.seasons_for(a.group);
    let first = a.first.unwrap_or_else(|| all.iter().map(|s| s.season).min().unwrap_or(0));
    let last = a.through.unwrap_or_else(|| all.iter().map(|s| s.season).max().unwrap_or(0));
    let obs: Vec<_> = all.into_iter().filter(|s| (first..=last).contains(&s.season)).collect();
    for (k, v) in [
        ("seed", ctx.seed.to_string()),
        ("group", a.group.to_string()),
        ("iters", a.iters.to_string()),
        ("thin", a.thin.to_string()),
        ("indices", a.indices.clone()),
        ("first", first.to_string()),
        ("through", last.to_string()),
    ] {
        rec.set(k, v);
    }
    let config = SamplerConfig::new(a.iters, a.thin, ctx.seed);
    let fit = fit_seasonal(a.group, &obs, &columns, &SeasonalPrior::default(), &config)?;
    let model = fit.model.clone();
    write_chain(&mut rec, &a.out, &fit.chain, |chain_sha256| ChainPayload::Seasonal {
        model,
        window: (first, last),
        dataset_sha256,
        chain_sha256,
    })?;
    let summary = json!({
        "group": a.group,
        "seasons": obs.len(),
        "parameters": posterior_summary(&fit.chain, 0.95),
        "expected_damage_usd": interval(&expected_damage(&fit.chain, &fit.model)?),
        "diagnostics": fit.diagnostics,
    });
    let summary_path = sibling(&a.out, "summary.json");
    write_json(&summary_path, &summary)?;
    rec.artifact(&summary_path);
    rec.finish(&a.out)?;
    Ok(())
}

fn write_csv_rows(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<(), CliError> {
    let mut w = create(path)?;
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_jsonl(path: &Path, lines: &[Value]) -> Result<(), CliError> {
    let mut w = create(path)?;
    for l in lines {
        serde_json::to_writer(&mut w, l)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_predict_season(ctx: &Ctx, a: &PredictSeasonArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("predict-season");
    let chain_path = input_path(&a.chain);
    let (chain, payload) = load_chain(Some(&mut rec), &chain_path)?;
    let ChainPayload::Seasonal {
        model,
        window,
        dataset_sha256,
        chain_sha256,
    } = payload
    else {
        return Err(CliError::input(format!("{} is not a seasonal chain", chain_path.display())));
    };
    let data = input_path(&a.data);
    let got = rec.input(&data)?;
    check_dataset_hash(&dataset_sha256, &got, &data)?;
    let ds = load_dataset(&data)?;
    let obs = ds
        .season(model.group, a.year)
        .ok_or_else(|| CliError::input(format!("no covariates on file for season {}", a.year)))?;
    for (k, v) in [
        ("seed", ctx.seed.to_string()),
        ("year", a.year.to_string()),
        ("draws", a.draws.to_string()),
        ("bins", a.bins.to_string()),
    ] {
        rec.set(k, v);
    }
    let pred = predict_season(&chain, &model, &obs.covariates, a.draws, ctx.seed, ctx.exec)?;
    let check = predictive_check(&pred, obs);
    let positive: Vec<f64> = pred.d.iter().copied().filter(|&d| d > 0.0).collect();
    let n_mass = count_mass(&pred.n);
    let l_mass = count_mass(&pred.l);
    let density = log_damage_density(&pred.d, a.bins);
    let lines = vec![
        json!({
            "kind": "summary",
            "season": a.year,
            "group": model.group,
            "draws": pred.len(),
            "in_training_window": (window.0..=window.1).contains(&a.year),
            "chain_sha256": chain_sha256,
            "p_zero_damage": pred.p_zero_damage(),
            "n": interval(&pred.n.iter().map(|&v| f64::from(v)).collect::<Vec<_>>()),
            "l": interval(&pred.l.iter().map(|&v| f64::from(v)).collect::<Vec<_>>()),
            "d_positive": (!positive.is_empty()).then(|| interval(&positive)),
            "check": check,
        }),
        json!({ "kind": "draws", "n": pred.n, "l": pred.l, "d": pred.d }),
        json!({ "kind": "n_mass", "bins": n_mass }),
        json!({ "kind": "l_mass", "bins": l_mass }),
        json!({ "kind": "log_damage_density", "bins": density }),
    ];
    write_jsonl(&a.out, &lines)?;
    rec.artifact(&a.out);
    let mass_rows = |m: &[(u32, f64)]| m.iter().map(|(k, p)| format!("{k},{p:?}")).collect::<Vec<_>>();
    for (suffix, rows) in [("n_mass.csv", mass_rows(&n_mass)), ("l_mass.csv", mass_rows(&l_mass))] {
        let p = sibling(&a.out, suffix);
        write_csv_rows(&p, "value,probability", rows)?;
        rec.artifact(&p);
    }
    let p = sibling(&a.out, "log_damage_density.csv");
    write_csv_rows(
        &p,
        "ln_damage_lo,ln_damage_hi,density",
        density.iter().map(|b| format!("{:?},{:?},{:?}", b.lo, b.hi, b.density)),
    )?;
    rec.artifact(&p);
    rec.finish(&a.out)?;
    Ok(())
}

fn cmd_fit_cyclone(ctx: &Ctx, a: &FitCycloneArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("fit-cyclone");
    let data = input_path(&a.data);
    let dataset_sha256 = rec.input(&data)?;
    let ds = load_dataset(&data)?;
    let window = match (a.first, a.last) {
        (None, None) => None,
        (f, l) => Some(SeasonWindow {
            first: f.unwrap_or(i32::MIN),
            last: l.unwrap_or(i32::MAX),
        }),
    };
    let cd = CycloneDataset::from_records(&ds.storms, window)?;
    let prior = CyclonePrior::default();
    rec.set("seed", ctx.seed);
    rec.set("method", format!("{:?}", a.method).to_lowercase());
    if let Some(w) = window {
        rec.set("first", w.first);
        rec.set("last", w.last);
    }
    match a.method {
        Method::Mle => {
            rec.set("starts", a.starts);
            let opts = MleOptions {
                starts: a.starts,
                seed: ctx.seed,
                exec: ctx.exec,
                ..MleOptions::default()
            };
            let fit = fit_mle(&cd.observations, &prior, &opts)?;
            let names: Vec<&str> = PARAM_NAMES.to_vec();
            write_json(
                &a.out,
                &json!({
                    "kind": "cyclone_mle",
                    "names": names,
                    "estimates": fit.params.to_vec(),
                    "fit": fit,
                    "transforms": cd.transforms,
                    "skipped": cd.skipped,
                    "dataset_sha256": dataset_sha256,
                }),
            )?;
            rec.artifact(&a.out);
        }
        Method::Bayes => {
            rec.set("iters", a.iters);
            rec.set("thin", a.thin);
            let config = SamplerConfig::new(a.iters, a.thin, ctx.seed);
            let fit = fit_bayes(&cd.observations, &prior, &config)?;
            let n_storms = cd.observations.len();
            write_chain(&mut rec, &a.out, &fit.chain, |chain_sha256| ChainPayload::Cyclone {
                transforms: cd.transforms,
                prior,
                n_storms,
                skipped: cd.skipped.clone(),
                dataset_sha256,
                chain_sha256,
            })?;
            let summary_path = sibling(&a.out, "summary.json");
            write_json(
                &summary_path,
                &json!({
                    "storms": n_storms,
                    "parameters": posterior_summary(&fit.chain, 0.95),
                    "diagnostics": fit.diagnostics,
                }),
            )?;
            rec.artifact(&summary_path);
        }
    }
    rec.finish(&a.out)?;
    Ok(())
}

/// Equal-width histogram density over the draw range.
fn density_rows(xs: &[f64], bins: usize) -> Vec<String> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if xs.is_empty() || bins == 0 || !(hi > lo) {
        return Vec::new();
    }
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in xs {
        counts[(((x - lo) / w) as usize).min(bins - 1)] += 1;
    }
    let n = xs.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let a = lo + k as f64 * w;
            format!("{a:?},{:?},{:?}", a + w, c as f64 / (n * w))
        })
        .collect()
}

fn cmd_predict_cyclone(ctx: &Ctx, a: &PredictCycloneArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("predict-cyclone");
    let chain_path = input_path(&a.chain);
    let (chain, payload) = load_chain(Some(&mut rec), &chain_path)?;
    let ChainPayload::Cyclone {
        transforms,
        chain_sha256,
        ..
    } = payload
    else {
        return Err(CliError::input(format!("{} is not a cyclone chain", chain_path.display())));
    };
    rec.set("seed", ctx.seed);
    rec.set("latitude", format!("{:?}", a.latitude));
    rec.set("draws", a.draws);
    rec.set("bins", a.bins);
    let z2 = transforms.z2(a.latitude);
    let pred = predict_cyclone(&chain, &transforms, z2, a.draws, ctx.seed, ctx.exec)?;
    let nat = pred.natural(&transforms);
    let log_damage: Vec<f64> = nat.damage_usd.iter().map(|d| d.ln()).collect();
    write_jsonl(
        &a.out,
        &[
            json!({
                "kind": "summary",
                "latitude": a.latitude,
                "z2": z2,
                "draws": pred.len(),
                "resampled": pred.resampled,
                "rejected": pred.rejected,
                "chain_sha256": chain_sha256,
                "min_pressure_mb": interval(&nat.min_pressure_mb),
                "max_wind_kt": interval(&nat.max_wind_kt),
                "damage_usd": interval(&nat.damage_usd),
            }),
            json!({
                "kind": "draws",
                "min_pressure_mb": nat.min_pressure_mb,
                "max_wind_kt": nat.max_wind_kt,
                "damage_usd": nat.damage_usd,
            }),
        ],
    )?;
    rec.artifact(&a.out);
    for (suffix, header, xs) in [
        ("min_pressure_density.csv", "mb_lo,mb_hi,density", &nat.min_pressure_mb),
        ("max_wind_density.csv", "kt_lo,kt_hi,density", &nat.max_wind_kt),
        ("log_damage_density.csv", "ln_damage_lo,ln_damage_hi,density", &log_damage),
    ] {
        let p = sibling(&a.out, suffix);
        write_csv_rows(&p, header, density_rows(xs, a.bins))?;
        rec.artifact(&p);
    }
    rec.finish(&a.out)?;
    Ok(())
}

#[derive(Deserialize)]
struct DrawsLine {
    kind: String,
    #[serde(default)]
    min_pressure_mb: Vec<f64>,
    #[serde(default)]
    max_wind_kt: Vec<f64>,
    #[serde(default)]
    damage_usd: Vec<f64>,
}

fn read_cyclone_draws(path: &Path) -> Result<NaturalDraws, CliError> {
    for line in BufReader::new(open(path)?).lines() {
        let line = line?;
        let v: Value = serde_json::from_str(&line)?;
        if v.get("kind").and_then(Value::as_str) == Some("draws") {
            let d: DrawsLine = serde_json::from_value(v)?;
            debug_assert_eq!(d.kind, "draws");
            if d.min_pressure_mb.is_empty() {
                return Err(CliError::input(format!("{}: not a cyclone predictive file", path.display())));
            }
            return Ok(NaturalDraws {
                min_pressure_mb: d.min_pressure_mb,
                max_wind_kt: d.max_wind_kt,
                damage_usd: d.damage_usd,
            });
        }
    }
    Err(CliError::input(format!("{}: no draws record", path.display())))
}

fn parse_truth(s: &str) -> Result<(f64, f64, f64), CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::input(format!("--truth expects minCP,maxWS,damage numbers, got {s:?}")))?;
    match v[..] {
        [p, w, d] if p.is_finite() && w > 0.0 && d > 0.0 => Ok((p, w, d)),
        _ => Err(CliError::input(format!(
            "--truth expects three values (pressure, wind > 0, damage > 0), got {s:?}"
        ))),
    }
}

fn cmd_score(a: &ScoreArgs) -> Result<(), CliError> {
    let path = input_path(&a.predictive);
    let draws = read_cyclone_draws(&path)?;
    let truth = parse_truth(&a.truth)?;
    let score = score_storm(&draws, truth)?;
    let out = json!({
        "storm": a.name,
        "delta_min_pressure": score.min_pressure.delta,
        "delta_max_wind": score.max_wind.delta,
        "delta_damage": score.damage.delta,
        "detail": score,
    });
    println!("{}", serde_json::to_string(&out)?);
    if let Some(p) = &a.out {
        let mut rec = Recorder::new("score");
        rec.input(&path)?;
        rec.set("truth", &a.truth);
        if let Some(n) = &a.name {
            rec.set("name", n);
        }
        write_json(p, &out)?;
        rec.artifact(p);
        rec.finish(p)?;
    }
    Ok(())
}

fn cmd_diagnose(a: &DiagnoseArgs) -> Result<(), CliError> {
    let mut rec = Recorder::new("diagnose");
    let mut chains = Vec::new();
    for p in &a.chain {
        chains.push(load_chain(Some(&mut rec), &input_path(p))?.0);
    }
    let refs: Vec<&PosteriorChain> = chains.iter().collect();
    let report = diagnostics(&refs)?;
    println!("{}", serde_json::to_string(&report)?);
    if let Some(p) = &a.out {
        write_json(p, &report)?;
        rec.artifact(p);
        rec.finish(p)?;
    }
    Ok(())
}
