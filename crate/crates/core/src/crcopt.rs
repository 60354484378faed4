//! Word error rate after multi-level retry decoding as a function of the
//! undetected-error probability, and the CRC length that maximizes the SNR
//! gain at a target error rate once the rate loss is paid.

use crate::code::{mmse_alpha, NestedLatticeCode};
use crate::embed::snr_penalty;
use crate::error::{Error, Result};
use crate::retry::{best_in_gaps, decodes_to, success_interval, AlphaCandidate, AlphaCandidateList, ConditionedDraws, SearchParams};
use crate::sim::{trial_rng, Engine, ShiftedNoise};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Measured,
    DerivedFromAlphaConditionals,
}

/// One-shot error probability and the conditional error probabilities of
/// each retry level, at one SNR.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RetryErrorModel {
    pub snr_db: f64,
    pub p_e1: f64,
    /// `p_re[i]` is the error probability of level `i + 2` given a detected
    /// error at level `i + 1`.
    pub p_re: Vec<f64>,
    pub source: ModelSource,
}

impl RetryErrorModel {
    pub fn new(snr_db: f64, p_e1: f64, p_re: Vec<f64>, source: ModelSource) -> Result<Self> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(p_e1) || !p_re.iter().all(|&p| ok(p)) {
            return Err(Error::Config(format!("probabilities out of range at {snr_db} dB")));
        }
        Ok(RetryErrorModel { snr_db, p_e1, p_re, source })
    }

    pub fn levels(&self) -> usize {
        self.p_re.len() + 1
    }
}

/// Total error probability after `k` levels when a fraction `p_ud` of
/// errors escapes the check. One level is plain one-shot decoding.
pub fn estimate_p_e_total(model: &RetryErrorModel, p_ud: f64, k: usize) -> Result<f64> {
    if k == 0 || k > model.levels() {
        return Err(Error::MissingConditionals(k));
    }
    if k == 1 {
        return Ok(model.p_e1);
    }
    // Per-level error probability, each level fed by the detected errors
    // of the one before.
    let mut level = vec![model.p_e1];
    for i in 2..k {
        let prev = level[i - 2];
        level.push(model.p_re[i - 2] * prev * (1.0 - p_ud));
    }
    let escaped: f64 = level.iter().map(|p| p * p_ud).sum();
    Ok(escaped + model.p_re[k - 2] * level[k - 2] * (1.0 - p_ud))
}

/// Conditional retry errors from the searched candidates: a level fails
/// when none of its scalings rescues the draw.
pub fn derive_su_model(snr_db: f64, p_e1: f64, list: &AlphaCandidateList) -> Result<RetryErrorModel> {
    let mut p_re = Vec::new();
    for (i, level) in list.levels.iter().enumerate().skip(1) {
        if level.is_empty() {
            return Err(Error::MissingConditionals(i + 1));
        }
        let rescued: f64 = level.iter().map(|c| c.conditional_success).sum();
        p_re.push((1.0 - rescued).clamp(0.0, 1.0));
    }
    RetryErrorModel::new(snr_db, p_e1, p_re, ModelSource::DerivedFromAlphaConditionals)
}

/// Per-level counts from a retry simulation.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RetryLog {
    pub trials: u64,
    /// `errors[i]`: trials whose outcome at level `i + 1` was wrong, whether
    /// a wrong word passed the check or nothing did.
    pub errors: Vec<u64>,
    /// `detected[i]`: trials in which nothing passed at level `i + 1`.
    pub detected: Vec<u64>,
    /// Trials that ended with a wrong word or no word at all.
    pub total_errors: u64,
}

/// Ratio estimate of the level-`level` conditional error with its Wilson
/// interval. The genie variant conditions on all level-`level − 1` errors
/// instead of the detected ones.
pub fn measure_p_re(log: &RetryLog, level: usize, genie: bool) -> Result<crate::sim::Proportion> {
    if level < 2 || level > log.errors.len() {
        return Err(Error::MissingConditionals(level));
    }
    let denom = if genie { log.errors[level - 2] } else { log.detected[level - 2] };
    if denom == 0 {
        return Err(Error::ZeroDenominator("no errors at the previous level"));
    }
    Ok(crate::sim::Proportion::new(log.errors[level - 1].min(denom), denom))
}

#[derive(Clone, Debug)]
pub struct ModelParams {
    pub search: SearchParams,
    /// Proposal draws per SNR point.
    pub draws: u64,
    /// Share of proposal draws taken without a shift.
    pub plain_fraction: f64,
    /// Pick scalings on even draws and score them on odd ones, so the
    /// conditional successes are not inflated by the maximization.
    pub holdout: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { search: SearchParams::default(), draws: 100_000, plain_fraction: 0.2, holdout: true }
    }
}

/// A single-user model and the candidate list it was derived from.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SuModelPoint {
    pub model: RetryErrorModel,
    /// Half width of the 95% interval on `p_e1`.
    pub p_e1_half_width: f64,
    pub list: AlphaCandidateList,
}

/// Estimate a `k`-level model with MMSE scaling first, by importance
/// sampling towards the midpoints of the shortest lattice vectors. Later
/// levels reuse the same weighted draws, conditioned on every earlier
/// candidate failing.
pub fn estimate_su_model(code: &NestedLatticeCode, snr_db: f64, k: usize, params: &ModelParams, engine: &Engine) -> Result<SuModelPoint> {
    if k == 0 {
        return Err(Error::MissingConditionals(0));
    }
    let n = code.dimension();
    let noise_var = code.noise_variance(snr_db);
    let first = mmse_alpha(code.power(), noise_var);
    let kissing = code.lattice().kissing_set()?;
    let sampler = ShiftedNoise::toward(&kissing, 0.5 / first, noise_var, params.plain_fraction);
    let bounds = params.search.bounds;
    let draws: Vec<(f64, Option<Option<(f64, f64)>>)> = engine.map(0..params.draws, |t| {
        let mut rng = trial_rng(params.search.seed, t);
        let b = code.random_message(&mut rng);
        let mut x = vec![0.0; n];
        code.encode_unchecked(&b, &mut x);
        let mut z = vec![0.0; n];
        let w = sampler.sample(&mut rng, &mut z);
        let y: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a + b).collect();
        let mut buf = [vec![0.0; n], vec![0.0; n]];
        if decodes_to(code, &y, &x, first, &mut buf) {
            (w, None)
        } else {
            (w, Some(success_interval(code, &y, &x, bounds, first)))
        }
    });
    let total = params.draws as f64;
    let failed: Vec<(u64, Option<(f64, f64)>, f64)> =
        draws.iter().zip(0u64..).filter_map(|((w, f), t)| f.map(|i| (t, i, *w))).collect();
    let p_e1 = failed.iter().map(|f| f.2).sum::<f64>() / total;
    let second = failed.iter().map(|f| f.2 * f.2).sum::<f64>() / total;
    let half_width = 1.96 * ((second - p_e1 * p_e1).max(0.0) / total).sqrt();
    let mut levels = vec![vec![AlphaCandidate { alpha: first, conditional_success: 1.0 - p_e1 }]];
    let mut prior = vec![first];
    let split = |keep: u64| -> Vec<(Option<(f64, f64)>, f64)> {
        failed.iter().filter(|f| !params.holdout || f.0 % 2 == keep).map(|f| (f.1, f.2)).collect()
    };
    let (mut chosen_on, mut scored_on) = (split(0), split(1));
    for _ in 1..k {
        if chosen_on.len() < params.search.min_conditioned {
            return Err(Error::RareConditioning { got: chosen_on.len(), need: params.search.min_conditioned });
        }
        let conditioned = ConditionedDraws::weighted(chosen_on.clone(), params.draws);
        let mut next = best_in_gaps(&conditioned, &prior, &params.search);
        next.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        if params.holdout {
            let held = ConditionedDraws::weighted(scored_on.clone(), params.draws);
            for c in &mut next {
                c.conditional_success = held.probability(c.alpha);
            }
        }
        prior.extend(next.iter().map(|c| c.alpha));
        let rescued = |i: &Option<(f64, f64)>| match i {
            Some((lo, hi)) => next.iter().any(|c| c.alpha >= *lo && c.alpha <= *hi),
            None => false,
        };
        chosen_on.retain(|(i, _)| !rescued(i));
        scored_on.retain(|(i, _)| !rescued(i));
        levels.push(next);
    }
    let list = AlphaCandidateList { snr_db, bounds, levels };
    let mut model = derive_su_model(snr_db, p_e1, &list)?;
    model.p_e1 = p_e1.clamp(0.0, 1.0);
    Ok(SuModelPoint { model, p_e1_half_width: half_width, list })
}

/// SNR at which a curve sampled at increasing SNRs crosses `target`, by
/// linear interpolation of the log error rate.
pub fn snr_at(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    let lt = target.ln();
    for w in curve.windows(2) {
        let ((s0, p0), (s1, p1)) = (w[0], w[1]);
        if p0 <= 0.0 || p1 <= 0.0 {
            continue;
        }
        let (l0, l1) = (p0.ln(), p1.ln());
        if (l0 - lt) * (l1 - lt) <= 0.0 && l0 != l1 {
            return Some(s0 + (s1 - s0) * (lt - l0) / (l1 - l0));
        }
    }
    None
}

/// A CRC length with the undetected-error probability assumed for it.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CrcOption {
    pub parity_bits: usize,
    pub p_ud: f64,
    pub polynomial: String,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct GainRow {
    pub parity_bits: usize,
    pub polynomial: String,
    pub p_ud: f64,
    /// SNR reaching the target on the estimated curve, before the penalty.
    pub snr_db: Option<f64>,
    pub penalty_db: f64,
    pub gain_db: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct GainReport {
    pub target: f64,
    pub levels: usize,
    pub baseline_snr_db: f64,
    pub rows: Vec<GainRow>,
    /// Gain with a perfect check and no rate loss.
    pub upper_bound_db: Option<f64>,
    /// Best row if its gain is positive.
    pub best: Option<usize>,
}

impl GainReport {
    pub fn best_row(&self) -> Option<&GainRow> {
        self.best.map(|i| &self.rows[i])
    }
}

/// Compare every CRC option against one-shot decoding of the code without
/// parity at the same target error rate.
pub fn optimize_crc_length(
    models: &[RetryErrorModel],
    target: f64,
    options: &[CrcOption],
    dimension: usize,
    rate: f64,
    levels: usize,
) -> Result<GainReport> {
    let mut models = models.to_vec();
    models.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    let curve = |p_ud: f64| -> Result<Vec<(f64, f64)>> {
        models.iter().map(|m| Ok((m.snr_db, estimate_p_e_total(m, p_ud, levels)?))).collect()
    };
    let one_shot: Vec<(f64, f64)> = models.iter().map(|m| (m.snr_db, m.p_e1)).collect();
    let baseline = snr_at(&one_shot, target).ok_or(Error::TargetUnreachable(target))?;
    let upper_bound_db = snr_at(&curve(0.0)?, target).map(|s| baseline - s);
    let mut rows = Vec::new();
    for opt in options {
        let penalty_db = snr_penalty(rate, opt.parity_bits, dimension)?;
        let snr = snr_at(&curve(opt.p_ud)?, target);
        rows.push(GainRow {
            parity_bits: opt.parity_bits,
            polynomial: opt.polynomial.clone(),
            p_ud: opt.p_ud,
            snr_db: snr,
            penalty_db,
            gain_db: snr.map(|s| baseline - s - penalty_db),
        });
    }
    if rows.iter().all(|r| r.gain_db.is_none()) && !rows.is_empty() {
        return Err(Error::TargetUnreachable(target));
    }
    let best = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.gain_db.map(|g| (i, g)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .filter(|&(_, g)| g > 0.0)
        .map(|(i, _)| i);
    Ok(GainReport { target, levels, baseline_snr_db: baseline, rows, upper_bound_db, best })
}

/// SNR at which the one-shot error rate at MMSE scaling is about
/// `target`, by bisection on the importance-sampled estimate.
pub fn locate_snr(code: &NestedLatticeCode, target: f64, params: &ModelParams, engine: &Engine) -> Result<f64> {
    let p = |snr: f64| estimate_su_model(code, snr, 1, params, engine).map(|m| m.model.p_e1);
    let (mut lo, mut hi) = (-10.0, 100.0);
    if p(hi)? > target || p(lo)? < target {
        return Err(Error::TargetUnreachable(target));
    }
    while hi - lo > 0.02 {
        let mid = 0.5 * (lo + hi);
        if p(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Models at `points` SNRs spaced by `step` dB and centred on `center`.
pub fn su_model_sweep(
    code: &NestedLatticeCode,
    center: f64,
    points: usize,
    step: f64,
    k: usize,
    params: &ModelParams,
    engine: &Engine,
) -> Result<Vec<SuModelPoint>> {
    let half = (points.max(1) - 1) as f64 / 2.0;
    (0..points.max(1))
        .map(|i| estimate_su_model(code, center + (i as f64 - half) * step, k, params, engine))
        .collect()
}

/// Best polynomial of each length with its kissing estimate as `P_ud`.
pub fn kissing_options(lattice: &crate::lattice::Lattice, lengths: &[usize]) -> Result<Vec<CrcOption>> {
    lengths
        .iter()
        .map(|&l| {
            let (crc, ratio) = crate::pud::crc_poly_search(l, lattice)?;
            let polynomial = if l == 1 { "SPC".to_string() } else { crc.pretty() };
            Ok(CrcOption { parity_bits: l, p_ud: ratio.value(), polynomial })
        })
        .collect()
}

/// Options with the `2^-l` estimate and no particular polynomial.
pub fn parity_options(lengths: &[usize]) -> Vec<CrcOption> {
    lengths
        .iter()
        .map(|&l| CrcOption { parity_bits: l, p_ud: crate::pud::p_ud_parity(l), polynomial: String::new() })
        .collect()
}
