//! Simulation loops behind each experiment kind, and the runner that turns a
//! configuration into a CSV table plus a JSON manifest.
//!
//! Everything written to the CSV is a function of the configuration and
//! seed alone. Timing goes to the manifest only.

use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::bounds::{cone_bound, effective_estimate, BoundInput};
use crate::cf::{combine, enumerate_candidates, icf_decode, relay_retry, sample_fading, EquationCheck};
use crate::code::{mmse_alpha, NestedLatticeCode};
use crate::crcopt::{
    estimate_p_e_total, estimate_su_model, kissing_options, locate_snr, optimize_crc_length, parity_options,
    su_model_sweep, ModelParams, ModelSource, RetryErrorModel, RetryLog,
};
use crate::embed::{parity_check, BinaryCode, EmbeddedCode};
use crate::error::{Error, Result};
use crate::pud::{calibrate_snr, p_ud_kissing, pud_table};
use crate::retry::{
    exhaustive_genie_decode, read_candidate_csv, same_point, search_alpha, write_candidate_csv, AlphaCandidateList,
    SearchParams,
};
use crate::sim::config::{ExperimentKind, SimConfig};
use crate::sim::engine::{add_noise, trial_rng, Engine, Proportion};

/// Message source for a simulation: plain, or with LSBs in a binary code.
#[derive(Clone, Debug)]
pub enum Messages<'a> {
    Plain(&'a NestedLatticeCode),
    Embedded(&'a EmbeddedCode),
}

impl Messages<'_> {
    pub fn code(&self) -> &NestedLatticeCode {
        match self {
            Messages::Plain(c) => c,
            Messages::Embedded(e) => e.nested(),
        }
    }

    fn check(&self) -> Option<&BinaryCode> {
        match self {
            Messages::Plain(_) => None,
            Messages::Embedded(e) => Some(e.binary_code()),
        }
    }

    fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        match self {
            Messages::Plain(c) => c.random_message(rng),
            Messages::Embedded(e) => e.random_message(rng),
        }
    }
}

/// Simulate `list`-driven retry decoding. With embedded messages a decode is
/// accepted when its LSBs pass the code; otherwise a genie accepts exactly
/// the correct decodes. Stops after the batch in which `max_errors` final
/// errors have accumulated.
pub fn simulate_su_retry(
    messages: &Messages,
    list: &AlphaCandidateList,
    snr_db: f64,
    trials: u64,
    max_errors: Option<u64>,
    seed: u64,
    engine: &Engine,
) -> RetryLog {
    let code = messages.code();
    let k = list.levels.len();
    let noise_var = code.noise_variance(snr_db);
    let check = messages.check();
    // Layout: errors per level, detected per level, final errors.
    let (tally, done) = engine.run(
        trials,
        |t, acc: &mut Vec<u64>| {
            if acc.is_empty() {
                acc.resize(2 * k + 1, 0);
            }
            let mut rng = trial_rng(seed, t);
            let b = messages.draw(&mut rng);
            let x = code.encode(&b).expect("message in range");
            let mut y = x;
            add_noise(&mut y, noise_var, &mut rng);
            for (li, level) in list.levels.iter().enumerate() {
                let mut accepted = None;
                for c in level {
                    let Ok((_, bhat)) = code.su_decode(&y, c.alpha) else { continue };
                    let pass = match check {
                        Some(bin) => parity_check(&bhat, bin),
                        None => bhat == b,
                    };
                    if pass {
                        accepted = Some(bhat);
                        break;
                    }
                }
                match accepted {
                    Some(bhat) if bhat == b => return,
                    Some(_) => {
                        acc[li] += 1;
                        acc[2 * k] += 1;
                        return;
                    }
                    None => {
                        acc[li] += 1;
                        acc[k + li] += 1;
                    }
                }
            }
            acc[2 * k] += 1;
        },
        |acc| max_errors.is_some_and(|m| acc.get(2 * k).is_some_and(|&e| e >= m)),
    );
    let get = |i: usize| tally.get(i).copied().unwrap_or(0);
    RetryLog {
        trials: done,
        errors: (0..k).map(get).collect(),
        detected: (0..k).map(|i| get(k + i)).collect(),
        total_errors: get(2 * k),
    }
}

/// Paired counts from a two-or-more user relay run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CfCounts {
    pub trials: u64,
    /// Best coefficient vector only, no check.
    pub oneshot_errors: u64,
    /// Retry over the candidate list, accepting on the configured check.
    pub retry_errors: u64,
    /// Retry runs where no candidate passed.
    pub retry_detected: u64,
    /// Retry with a genie check, the floor for the same list.
    pub genie_errors: u64,
}

impl CfCounts {
    pub fn oneshot(&self) -> Proportion {
        Proportion::new(self.oneshot_errors, self.trials)
    }

    pub fn retry(&self) -> Proportion {
        Proportion::new(self.retry_errors, self.trials)
    }

    pub fn genie(&self) -> Proportion {
        Proportion::new(self.genie_errors, self.trials)
    }
}

/// Relay equation errors with one-shot and retry decoding on the same
/// noise and fading. Fading is redrawn for every transmission. `check` is
/// the embedded binary code when the relay checks LSBs, else a genie is
/// used for the retry decision.
#[allow(clippy::too_many_arguments)]
pub fn simulate_cf(
    messages: &Messages,
    users: usize,
    attempts: usize,
    snr_db: f64,
    trials: u64,
    max_errors: Option<u64>,
    seed: u64,
    engine: &Engine,
) -> Result<CfCounts> {
    let code = messages.code();
    let check = messages.check();
    if check.is_some() && !crate::embed::check_even_nesting(code) {
        return Err(Error::OddNesting);
    }
    let n = code.dimension();
    let power = code.power();
    let noise_var = code.noise_variance(snr_db);
    let (tally, done) = engine.run(
        trials,
        |t, acc: &mut [u64; 4]| {
            let mut rng = trial_rng(seed, t);
            let h = sample_fading(users, &mut rng);
            let xs: Vec<Vec<f64>> =
                (0..users).map(|_| code.encode(&messages.draw(&mut rng)).expect("message in range")).collect();
            let mut y = vec![0.0; n];
            for (hi, x) in h.iter().zip(&xs) {
                for (o, v) in y.iter_mut().zip(x) {
                    *o += hi * v;
                }
            }
            add_noise(&mut y, noise_var, &mut rng);
            let list = enumerate_candidates(&h, power, noise_var, attempts).expect("candidate enumeration");
            let first = &list.candidates[0];
            if !same_point(&icf_decode(code, &y, first.alpha), &combine(&xs, &first.coefficients)) {
                acc[0] += 1;
            }
            let judged = match check {
                Some(bin) => relay_retry(code, &y, &list, EquationCheck::Crc(bin)),
                None => relay_retry(code, &y, &list, EquationCheck::Genie(&xs)),
            }
            .expect("nesting checked above");
            match judged.decoded {
                Some((xhat, a)) if same_point(&xhat, &combine(&xs, &a)) => {}
                Some(_) => acc[1] += 1,
                None => {
                    acc[1] += 1;
                    acc[2] += 1;
                }
            }
            let genie = relay_retry(code, &y, &list, EquationCheck::Genie(&xs)).expect("genie check");
            if genie.decoded.is_none() {
                acc[3] += 1;
            }
        },
        |acc| max_errors.is_some_and(|m| acc[1] >= m && acc[0] >= m),
    );
    Ok(CfCounts {
        trials: done,
        oneshot_errors: tally[0],
        retry_errors: tally[1],
        retry_detected: tally[2],
        genie_errors: tally[3],
    })
}

/// Word errors of the genie decoder that tries `points` scalings evenly
/// spread over `bounds`.
pub fn simulate_genie(
    code: &NestedLatticeCode,
    snr_db: f64,
    bounds: (f64, f64),
    points: usize,
    trials: u64,
    max_errors: Option<u64>,
    seed: u64,
    engine: &Engine,
) -> Proportion {
    let noise_var = code.noise_variance(snr_db);
    let (tally, done) = engine.run(
        trials,
        |t, acc: &mut [u64; 1]| {
            let mut rng = trial_rng(seed, t);
            let x = code.encode(&code.random_message(&mut rng)).expect("message in range");
            let mut y = x.clone();
            add_noise(&mut y, noise_var, &mut rng);
            if !exhaustive_genie_decode(code, &y, &x, bounds, points) {
                acc[0] += 1;
            }
        },
        |acc| max_errors.is_some_and(|m| acc[0] >= m),
    );
    Proportion::new(tally[0], done)
}

/// Error count at one SNR, as reported in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimPoint {
    pub snr_db: f64,
    pub errors: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub wall_time_s: f64,
}

impl SimPoint {
    fn new(snr_db: f64, p: Proportion, started: Instant) -> Self {
        SimPoint {
            snr_db,
            errors: p.hits,
            trials: p.trials,
            rate: p.value,
            ci_lo: p.lo,
            ci_hi: p.hi,
            wall_time_s: started.elapsed().as_secs_f64(),
        }
    }
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct SimResult {
    pub kind: ExperimentKind,
    /// CSV text, a pure function of the configuration.
    pub csv: String,
    pub points: Vec<SimPoint>,
    /// Kind-specific structured results.
    pub summary: serde_json::Value,
    pub power: f64,
    pub wall_time_s: f64,
}

impl SimResult {
    pub fn manifest(&self, cfg: &SimConfig, workers: usize) -> serde_json::Value {
        serde_json::json!({
            "library": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "kind": self.kind.name(),
            "config": cfg,
            "workers": workers,
            "power": self.power,
            "wall_time_s": self.wall_time_s,
            "points": self.points,
            "summary": self.summary,
        })
    }

    /// Write `<kind>.csv` and `manifest.json` into `dir`.
    pub fn write(&self, cfg: &SimConfig, workers: usize, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.kind.name()));
        let manifest_path = dir.join("manifest.json");
        std::fs::write(&csv_path, &self.csv)?;
        let text = serde_json::to_string_pretty(&self.manifest(cfg, workers)).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(&manifest_path, text + "\n")?;
        Ok((csv_path, manifest_path))
    }
}

struct Table {
    out: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[String]) -> Result<Self> {
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(header)?;
        Ok(Table { out })
    }

    fn row(&mut self, fields: Vec<String>) -> Result<()> {
        self.out.write_record(fields)?;
        Ok(())
    }

    fn finish(self) -> Result<String> {
        let bytes = self.out.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Seed for the candidate search, kept apart from the simulation streams.
fn search_seed(seed: u64) -> u64 {
    seed ^ 0x5EA2_C400_0000_0001
}

fn search_params(cfg: &SimConfig) -> SearchParams {
    SearchParams {
        bounds: cfg.retry.bounds,
        grid: cfg.retry.grid,
        min_conditioned: cfg.retry.min_conditioned,
        target_conditioned: cfg.retry.target_conditioned,
        max_draws: cfg.retry.max_draws,
        seed: search_seed(cfg.seed),
    }
}

/// Candidate lists for every configured SNR, read from file or searched.
fn candidate_lists(cfg: &SimConfig, code: &NestedLatticeCode, base: &Path, engine: &Engine) -> Result<Vec<AlphaCandidateList>> {
    let k = cfg.retry.levels;
    match &cfg.retry.candidates {
        Some(file) => {
            let file = std::fs::File::open(base.join(file))?;
            let lists = read_candidate_csv(BufReader::new(file))?;
            cfg.snr_db
                .iter()
                .map(|&snr| {
                    lists
                        .iter()
                        .find(|l| (l.snr_db - snr).abs() < 1e-9)
                        .map(|l| l.truncated(k))
                        .ok_or_else(|| Error::Config(format!("no candidate list for {snr} dB")))
                })
                .collect()
        }
        None => {
            let params = search_params(cfg);
            cfg.snr_db
                .iter()
                .map(|&snr| match cfg.retry.importance_draws {
                    Some(draws) => {
                        let mp = ModelParams { search: params.clone(), draws, plain_fraction: cfg.retry.plain_fraction, holdout: true };
                        estimate_su_model(code, snr, k, &mp, engine).map(|p| p.list)
                    }
                    None => search_alpha(code, snr, k, &params, engine),
                })
                .collect()
        }
    }
}

fn messages_for(cfg: &SimConfig, code: &NestedLatticeCode) -> Result<Option<EmbeddedCode>> {
    match cfg.crc()? {
        Some(crc) => Ok(Some(EmbeddedCode::new(code.clone(), crc.code(code.dimension())?)?)),
        None => Ok(None),
    }
}

/// Run one configured experiment. Relative paths inside the configuration
/// resolve against `base`.
pub fn run(cfg: &SimConfig, base: &Path, engine: &Engine) -> Result<SimResult> {
    cfg.validate()?;
    let started = Instant::now();
    let code = cfg.code.build(base)?;
    let embedded = messages_for(cfg, &code)?;
    let messages = match &embedded {
        Some(e) => Messages::Embedded(e),
        None => Messages::Plain(&code),
    };
    let mut points = Vec::new();
    let mut summary = serde_json::Value::Null;
    let csv = match cfg.kind {
        ExperimentKind::SuOneshot => {
            let mut t = Table::new(&header(&["snr_db", "noise_var", "alpha", "trials", "errors", "wer", "ci_lo", "ci_hi"]))?;
            for &snr in &cfg.snr_db {
                let at = Instant::now();
                let noise_var = code.noise_variance(snr);
                let alpha = mmse_alpha(code.power(), noise_var);
                let list = AlphaCandidateList::single(snr, alpha);
                // A single level counts every decoding error, detected or not.
                let log = simulate_su_retry(&messages, &list, snr, cfg.trials, cfg.max_errors, cfg.seed, engine);
                let p = Proportion::new(log.errors[0], log.trials);
                t.row(vec![
                    snr.to_string(),
                    noise_var.to_string(),
                    alpha.to_string(),
                    p.trials.to_string(),
                    p.hits.to_string(),
                    p.value.to_string(),
                    p.lo.to_string(),
                    p.hi.to_string(),
                ])?;
                points.push(SimPoint::new(snr, p, at));
            }
            t.finish()?
        }
        ExperimentKind::SuRetry => {
            let k = cfg.retry.levels;
            let lists = candidate_lists(cfg, &code, base, engine)?;
            let p_ud = match &embedded {
                Some(e) => p_ud_kissing(code.lattice(), e.binary_code())?.value(),
                None => 0.0,
            };
            let mut names = vec!["snr_db".to_string(), "trials".to_string()];
            for i in 1..=k {
                names.push(format!("errors_{i}"));
                names.push(format!("detected_{i}"));
            }
            names.extend(header(&["total_errors", "wer", "ci_lo", "ci_hi", "p_ud", "estimate_measured", "estimate_derived"]));
            let mut t = Table::new(&names)?;
            let mut logs = Vec::new();
            for (&snr, list) in cfg.snr_db.iter().zip(&lists) {
                let at = Instant::now();
                let log = simulate_su_retry(&messages, list, snr, cfg.trials, cfg.max_errors, cfg.seed, engine);
                let p = Proportion::new(log.total_errors, log.trials);
                let p_e1 = log.errors[0] as f64 / log.trials as f64;
                let measured = measured_model(&log, snr, embedded.is_none())
                    .and_then(|m| estimate_p_e_total(&m, p_ud, list.levels.len()))
                    .ok();
                let derived = crate::crcopt::derive_su_model(snr, p_e1, list)
                    .and_then(|m| estimate_p_e_total(&m, p_ud, list.levels.len()))
                    .ok();
                let mut row = vec![snr.to_string(), log.trials.to_string()];
                for i in 0..k {
                    row.push(log.errors.get(i).copied().unwrap_or(0).to_string());
                    row.push(log.detected.get(i).copied().unwrap_or(0).to_string());
                }
                row.extend([
                    log.total_errors.to_string(),
                    p.value.to_string(),
                    p.lo.to_string(),
                    p.hi.to_string(),
                    p_ud.to_string(),
                    opt(measured),
                    opt(derived),
                ]);
                t.row(row)?;
                points.push(SimPoint::new(snr, p, at));
                logs.push(log);
            }
            summary = serde_json::json!({ "candidates": lists, "logs": logs });
            t.finish()?
        }
        ExperimentKind::AlphaSearch => {
            let lists = candidate_lists(cfg, &code, base, engine)?;
            let mut buf = Vec::new();
            write_candidate_csv(&lists, &mut buf)?;
            String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))?
        }
        ExperimentKind::Cf => {
            let mut t = Table::new(&header(&[
                "snr_db",
                "trials",
                "oneshot_errors",
                "oneshot_eer",
                "oneshot_lo",
                "oneshot_hi",
                "retry_errors",
                "retry_eer",
                "retry_lo",
                "retry_hi",
                "retry_detected",
                "genie_errors",
                "genie_eer",
            ]))?;
            let mut all = Vec::new();
            for &snr in &cfg.snr_db {
                let at = Instant::now();
                let c = simulate_cf(&messages, cfg.cf.users, cfg.cf.attempts, snr, cfg.trials, cfg.max_errors, cfg.seed, engine)?;
                let (o, r, g) = (c.oneshot(), c.retry(), c.genie());
                t.row(vec![
                    snr.to_string(),
                    c.trials.to_string(),
                    o.hits.to_string(),
                    o.value.to_string(),
                    o.lo.to_string(),
                    o.hi.to_string(),
                    r.hits.to_string(),
                    r.value.to_string(),
                    r.lo.to_string(),
                    r.hi.to_string(),
                    c.retry_detected.to_string(),
                    g.hits.to_string(),
                    g.value.to_string(),
                ])?;
                points.push(SimPoint::new(snr, r, at));
                all.push(c);
            }
            summary = serde_json::json!({ "counts": all });
            t.finish()?
        }
        ExperimentKind::Bound => {
            let radius = match cfg.bound.covering_radius {
                Some(r) => r,
                None => code
                    .lattice()
                    .covering_radius()
                    .ok_or_else(|| Error::Config("lattice has no known covering radius; set bound.covering_radius".into()))?,
            };
            let n = code.dimension();
            let mut names = header(&["snr_db", "noise_var", "cone_bound", "effective_estimate"]);
            if cfg.bound.simulate_genie {
                names.extend(header(&["genie_trials", "genie_errors", "genie_wer", "genie_lo", "genie_hi"]));
            }
            let mut t = Table::new(&names)?;
            for &snr in &cfg.snr_db {
                let at = Instant::now();
                let noise_var = code.noise_variance(snr);
                let bound = cone_bound(&BoundInput::new(n, code.power(), noise_var, radius)?)?;
                let estimate = effective_estimate(n, code.power(), noise_var, code.lattice()).ok();
                let mut row = vec![snr.to_string(), noise_var.to_string(), bound.to_string(), opt(estimate)];
                if cfg.bound.simulate_genie {
                    let g = simulate_genie(
                        &code,
                        snr,
                        cfg.retry.bounds,
                        cfg.retry.genie_points,
                        cfg.trials,
                        cfg.max_errors,
                        cfg.seed,
                        engine,
                    );
                    row.extend([g.trials.to_string(), g.hits.to_string(), g.value.to_string(), g.lo.to_string(), g.hi.to_string()]);
                    points.push(SimPoint::new(snr, g, at));
                }
                t.row(row)?;
            }
            t.finish()?
        }
        ExperimentKind::Pud => {
            let pud = cfg.pud.as_ref().expect("validated");
            let snrs = if cfg.snr_db.is_empty() {
                let target = pud.target_wer.expect("validated");
                vec![calibrate_snr(&code, target, pud.calibration_trials, cfg.seed, engine)?]
            } else {
                cfg.snr_db.clone()
            };
            let mut t = Table::new(&header(&[
                "snr_db",
                "parity_bits",
                "polynomial",
                "errors",
                "undetected",
                "monte_carlo",
                "mc_lo",
                "mc_hi",
                "kissing_numerator",
                "kissing_denominator",
                "kissing",
                "parity_estimate",
            ]))?;
            let mut reports = Vec::new();
            for &snr in &snrs {
                let at = Instant::now();
                let rows = pud_table(&code, &pud.lengths, snr, pud.target_errors, cfg.trials, cfg.seed, engine)?;
                for r in &rows {
                    let mc = r.monte_carlo;
                    t.row(vec![
                        snr.to_string(),
                        r.parity_bits.to_string(),
                        r.polynomial.clone(),
                        mc.map(|p| p.trials.to_string()).unwrap_or_default(),
                        mc.map(|p| p.hits.to_string()).unwrap_or_default(),
                        opt(mc.map(|p| p.value)),
                        opt(mc.map(|p| p.lo)),
                        opt(mc.map(|p| p.hi)),
                        r.kissing.numerator.to_string(),
                        r.kissing.denominator.to_string(),
                        r.kissing.value().to_string(),
                        r.parity_estimate.to_string(),
                    ])?;
                }
                if let Some(mc) = rows.first().and_then(|r| r.monte_carlo) {
                    points.push(SimPoint::new(snr, mc, at));
                }
                reports.push(rows);
            }
            summary = serde_json::json!({ "snr_db": snrs, "rows": reports });
            t.finish()?
        }
        ExperimentKind::OptimizeCrc => {
            let o = cfg.optimize.as_ref().expect("validated");
            let k = cfg.retry.levels;
            let params = ModelParams { search: search_params(cfg), draws: o.draws, plain_fraction: o.plain_fraction, holdout: o.holdout };
            let center = match cfg.snr_db.first() {
                Some(&s) => s,
                None => {
                    let coarse = ModelParams { draws: (o.draws / 5).max(1000), ..params.clone() };
                    locate_snr(&code, o.target, &coarse, engine)?
                }
            };
            let sweep = su_model_sweep(&code, center, o.points, o.step_db, k, &params, engine)?;
            let models: Vec<RetryErrorModel> = sweep.iter().map(|p| p.model.clone()).collect();
            let options = if o.estimator == "parity" {
                parity_options(&o.lengths)
            } else {
                kissing_options(code.lattice(), &o.lengths)?
            };
            let report = optimize_crc_length(&models, o.target, &options, code.dimension(), code.rate(), k)?;
            let mut t = Table::new(&header(&["parity_bits", "polynomial", "p_ud", "snr_db", "penalty_db", "gain_db", "best"]))?;
            let best = report.best_row().map(|r| r.parity_bits);
            for r in &report.rows {
                t.row(vec![
                    r.parity_bits.to_string(),
                    r.polynomial.clone(),
                    r.p_ud.to_string(),
                    opt(r.snr_db),
                    r.penalty_db.to_string(),
                    opt(r.gain_db),
                    (Some(r.parity_bits) == best).to_string(),
                ])?;
            }
            summary = serde_json::json!({ "center_snr_db": center, "models": sweep, "report": report });
            t.finish()?
        }
    };
    Ok(SimResult { kind: cfg.kind, csv, points, summary, power: code.power(), wall_time_s: started.elapsed().as_secs_f64() })
}

/// Conditional retry errors measured from a log. With a genie the
/// denominator is every earlier error; with a check it is the detected ones.
pub fn measured_model(log: &RetryLog, snr_db: f64, genie: bool) -> Result<RetryErrorModel> {
    if log.trials == 0 {
        return Err(Error::ZeroDenominator("no trials"));
    }
    let p_e1 = log.errors[0] as f64 / log.trials as f64;
    let p_re = (2..=log.errors.len())
        .map(|i| crate::crcopt::measure_p_re(log, i, genie).map(|p| p.value))
        .collect::<Result<Vec<_>>>()?;
    RetryErrorModel::new(snr_db, p_e1, p_re, ModelSource::Measured)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::CrcSpec;
    use crate::lattice::Lattice;

    fn e8() -> NestedLatticeCode {
        NestedLatticeCode::with_rate(Lattice::e8(), 2.0).unwrap()
    }

    #[test]
    fn retry_log_is_consistent() {
        let code = e8();
        let emb = EmbeddedCode::new(code.clone(), CrcSpec::new(0xB).unwrap().code(8).unwrap()).unwrap();
        let list = AlphaCandidateList {
            snr_db: 14.0,
            bounds: (0.5, 1.5),
            levels: vec![
                vec![crate::retry::AlphaCandidate { alpha: mmse_alpha(code.power(), code.noise_variance(14.0)), conditional_success: 0.0 }],
                vec![
                    crate::retry::AlphaCandidate { alpha: 0.9, conditional_success: 0.0 },
                    crate::retry::AlphaCandidate { alpha: 1.06, conditional_success: 0.0 },
                ],
            ],
        };
        let log = simulate_su_retry(&Messages::Embedded(&emb), &list, 14.0, 20_000, None, 3, &Engine::new(2));
        assert_eq!(log.trials, 20_000);
        assert!(log.errors[0] > 100);
        // Level 2 only sees what level 1 flagged.
        assert!(log.errors[1] <= log.detected[0]);
        assert!(log.detected[1] <= log.errors[1]);
        assert_eq!(log.total_errors, (log.errors[0] - log.detected[0]) + log.errors[1]);
        assert!(log.total_errors < log.errors[0]);
    }

    #[test]
    fn genie_retry_never_accepts_a_wrong_word() {
        let code = e8();
        let list = AlphaCandidateList::single(14.0, 0.95);
        let log = simulate_su_retry(&Messages::Plain(&code), &list, 14.0, 5000, None, 9, &Engine::new(1));
        assert_eq!(log.errors[0], log.detected[0]);
        assert_eq!(log.total_errors, log.errors[0]);
    }

    #[test]
    fn cf_with_crc_needs_even_nesting() {
        let odd = NestedLatticeCode::hypercube(Lattice::integer(2).unwrap(), 3.0).unwrap();
        let emb = EmbeddedCode::new(odd.clone(), BinaryCode::full(2).unwrap());
        // Full code has no parity positions, so construction succeeds.
        let emb = emb.unwrap();
        let r = simulate_cf(&Messages::Embedded(&emb), 2, 2, 20.0, 10, None, 1, &Engine::new(1));
        assert!(matches!(r, Err(Error::OddNesting)));
    }

    #[test]
    fn cf_retry_counts_are_ordered() {
        let code = e8();
        let c = simulate_cf(&Messages::Plain(&code), 2, 2, 14.0, 4000, None, 5, &Engine::new(2)).unwrap();
        assert!(c.oneshot_errors > 0);
        // With a genie check retry can only help.
        assert!(c.retry_errors <= c.oneshot_errors);
        assert_eq!(c.retry_errors, c.genie_errors);
    }

    #[test]
    fn measured_model_matches_counts() {
        let log = RetryLog { trials: 1000, errors: vec![100, 30], detected: vec![80, 30], total_errors: 50 };
        let m = measured_model(&log, 10.0, false).unwrap();
        assert_eq!(m.p_e1, 0.1);
        assert!((m.p_re[0] - 30.0 / 80.0).abs() < 1e-12);
        let g = measured_model(&log, 10.0, true).unwrap();
        assert!((g.p_re[0] - 0.3).abs() < 1e-12);
    }
}
