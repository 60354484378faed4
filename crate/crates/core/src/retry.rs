//! Single-user retry decoding over a list of receive scalings.
//!
//! For a fixed received word the set of scalings that decode correctly is
//! an interval: it is the intersection of a line through the origin with a
//! convex Voronoi cell. The search records that interval per noise draw,
//! which turns every conditional success probability into an exact count
//! over the stored draws.

use std::io::{BufRead, Write};

use crate::code::{mmse_alpha, NestedLatticeCode};
use crate::error::{Error, Result};
use crate::sim::engine::{add_noise, trial_rng, Engine, Proportion};

const CSV_MAGIC: &str = "# alpha-candidates v1";

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct AlphaCandidate {
    pub alpha: f64,
    /// `P(α | every earlier candidate failed)`.
    pub conditional_success: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct AlphaCandidateList {
    pub snr_db: f64,
    pub bounds: (f64, f64),
    /// Level `i` (0-based) holds at most `2^i` candidates, ascending.
    pub levels: Vec<Vec<AlphaCandidate>>,
}

impl AlphaCandidateList {
    /// A single-level list, i.e. one-shot decoding with `alpha`.
    pub fn single(snr_db: f64, alpha: f64) -> Self {
        AlphaCandidateList {
            snr_db,
            bounds: (alpha, alpha),
            levels: vec![vec![AlphaCandidate { alpha, conditional_success: f64::NAN }]],
        }
    }

    pub fn attempts(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// All candidates of the first `levels` levels, in decoding order.
    pub fn alphas(&self, levels: usize) -> Vec<f64> {
        self.levels.iter().take(levels).flatten().map(|c| c.alpha).collect()
    }

    /// Truncate to the first `k` levels.
    pub fn truncated(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.levels.truncate(k);
        out
    }

    /// Sum of conditional successes on a level: the fraction of draws that
    /// failed every earlier level and are rescued here.
    pub fn rescued_fraction(&self, level: usize) -> Option<f64> {
        self.levels.get(level).map(|l| l.iter().map(|c| c.conditional_success).sum())
    }
}

pub fn write_candidate_csv<W: Write>(lists: &[AlphaCandidateList], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_MAGIC}")?;
    writeln!(out, "snr,level,index,alpha,conditional_success,alpha_min,alpha_max")?;
    for list in lists {
        for (li, level) in list.levels.iter().enumerate() {
            for (ci, c) in level.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{:.10},{:.10},{},{}",
                    list.snr_db,
                    li + 1,
                    ci + 1,
                    c.alpha,
                    c.conditional_success,
                    list.bounds.0,
                    list.bounds.1
                )?;
            }
        }
    }
    Ok(())
}

pub fn read_candidate_csv<R: BufRead>(input: R) -> Result<Vec<AlphaCandidateList>> {
    let mut lines = input.lines();
    match lines.next() {
        Some(Ok(l)) if l.trim() == CSV_MAGIC => {}
        _ => return Err(Error::Parse("missing alpha-candidates v1 header".into())),
    }
    let rest: String = lines.collect::<std::io::Result<Vec<_>>>()?.join("\n");
    let mut rdr = csv::Reader::from_reader(rest.as_bytes());
    let mut lists: Vec<AlphaCandidateList> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Parse("short candidate row".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(e.to_string()))
        };
        let (snr, level, alpha, cond, lo, hi) = (f(0)?, f(1)? as usize, f(3)?, f(4)?, f(5)?, f(6)?);
        if level == 0 {
            return Err(Error::Parse("levels are 1-based".into()));
        }
        let pos = match lists.iter().position(|l| l.snr_db == snr) {
            Some(p) => p,
            None => {
                lists.push(AlphaCandidateList { snr_db: snr, bounds: (lo, hi), levels: Vec::new() });
                lists.len() - 1
            }
        };
        let list = &mut lists[pos];
        while list.levels.len() < level {
            list.levels.push(Vec::new());
        }
        list.levels[level - 1].push(AlphaCandidate { alpha, conditional_success: cond });
    }
    Ok(lists)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RetryOutcome {
    /// Accepted codeword and message, or `None` if every attempt failed.
    pub decoded: Option<(Vec<f64>, Vec<i64>)>,
    pub attempts: usize,
    /// 1-based level of the last attempt.
    pub level_reached: usize,
}

/// Try the candidates level by level and return the first decode that
/// passes `checker(x̂, b̂)`.
pub fn retry_decode<F>(code: &NestedLatticeCode, y: &[f64], list: &AlphaCandidateList, mut checker: F) -> RetryOutcome
where
    F: FnMut(&[f64], &[i64]) -> bool,
{
    let lat = code.lattice();
    let n = code.dimension();
    let mut scaled = vec![0.0; n];
    let mut xhat = vec![0.0; n];
    let mut coords = vec![0i64; n];
    let mut bhat = vec![0i64; n];
    let mut attempts = 0;
    let mut level_reached = 0;
    for (li, level) in list.levels.iter().enumerate() {
        for c in level {
            attempts += 1;
            level_reached = li + 1;
            for i in 0..n {
                scaled[i] = c.alpha * y[i];
            }
            lat.quantize_into(&scaled, &mut xhat);
            if lat.integer_coordinates_into(&xhat, &mut coords).is_err() {
                continue;
            }
            code.index_from_coordinates(&coords, &mut bhat);
            if checker(&xhat, &bhat) {
                return RetryOutcome { decoded: Some((xhat, bhat)), attempts, level_reached };
            }
        }
    }
    RetryOutcome { decoded: None, attempts, level_reached }
}

pub(crate) fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(u, v)| (u - v).abs() < 1e-6)
}

/// Does scaling `y` by `alpha` decode to `x`? `buf` holds two scratch
/// vectors of the code dimension.
pub(crate) fn decodes_to(code: &NestedLatticeCode, y: &[f64], x: &[f64], alpha: f64, buf: &mut [Vec<f64>; 2]) -> bool {
    let [scaled, out] = buf;
    for i in 0..y.len() {
        scaled[i] = alpha * y[i];
    }
    code.lattice().quantize_into(scaled, out);
    same_point(out, x)
}

/// Genie-aided search over `n` evenly spaced scalings in `bounds`.
pub fn exhaustive_genie_decode(code: &NestedLatticeCode, y: &[f64], x_true: &[f64], bounds: (f64, f64), n: usize) -> bool {
    let n = n.max(1);
    let mut buf = [vec![0.0; y.len()], vec![0.0; y.len()]];
    let grid = |j: usize| {
        if n == 1 {
            (bounds.0 + bounds.1) / 2.0
        } else {
            bounds.0 + (bounds.1 - bounds.0) * j as f64 / (n - 1) as f64
        }
    };
    // Only scalings that bring αy within the covering radius of x can work.
    let (first, last) = match line_window(code, y, x_true) {
        Some(None) => return false,
        Some(Some((a, b))) if n > 1 => {
            let step = (bounds.1 - bounds.0) / (n - 1) as f64;
            let first = ((a - bounds.0) / step - 1e-9).ceil().max(0.0);
            let last = ((b - bounds.0) / step + 1e-9).floor().min((n - 1) as f64);
            if first > last {
                return false;
            }
            (first as i64, last as i64)
        }
        _ => (0, n as i64 - 1),
    };
    // Most draws decode near the middle, so start there and fan out.
    let mid = (first + last + 1) / 2;
    let width = last - first + 1;
    (0..2 * width)
        .map(|k| if k % 2 == 0 { mid + k / 2 } else { mid - k / 2 - 1 })
        .filter(|&j| j >= first && j <= last)
        .any(|j| decodes_to(code, y, x_true, grid(j as usize), &mut buf))
}

/// Scalings `α` with `‖αy − x‖` within the covering radius. `None` when the
/// radius is unknown, `Some(None)` when the line misses the ball.
fn line_window(code: &NestedLatticeCode, y: &[f64], x: &[f64]) -> Option<Option<(f64, f64)>> {
    let rc = code.lattice().covering_radius()?;
    let yy: f64 = y.iter().map(|v| v * v).sum();
    if yy == 0.0 {
        return None;
    }
    let yx: f64 = y.iter().zip(x).map(|(a, b)| a * b).sum();
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let center = yx / yy;
    let miss2 = xx - yx * center;
    let slack = rc * rc * (1.0 + 1e-9) - miss2;
    if slack < 0.0 {
        return Some(None);
    }
    let half = slack.sqrt() / yy.sqrt();
    Some(Some((center - half, center + half)))
}

/// Interval of scalings inside `bounds` that decode `y` to `x`, if any.
/// `hint` is tried first; then a coarse scan looks for any success point,
/// and both ends are located by bisection.
pub fn success_interval(
    code: &NestedLatticeCode,
    y: &[f64],
    x: &[f64],
    bounds: (f64, f64),
    hint: f64,
) -> Option<(f64, f64)> {
    const SCAN: usize = 64;
    const TOL: f64 = 1e-9;
    let (lo, hi) = bounds;
    let mut buf = [vec![0.0; y.len()], vec![0.0; y.len()]];
    let mut ok = |a: f64| decodes_to(code, y, x, a, &mut buf);
    let mut anchor = None;
    if hint >= lo && hint <= hi && ok(hint) {
        anchor = Some(hint);
    } else {
        // Any success lies where the line αy meets the covering ball of x.
        let (slo, shi) = match line_window(code, y, x) {
            Some(None) => return None,
            Some(Some((a, b))) => (a.max(lo), b.min(hi)),
            None => (lo, hi),
        };
        if slo > shi {
            return None;
        }
        let mut pts: Vec<f64> = (0..=SCAN).map(|j| slo + (shi - slo) * j as f64 / SCAN as f64).collect();
        pts.sort_by(|a, b| (a - hint).abs().total_cmp(&(b - hint).abs()));
        for p in pts {
            if ok(p) {
                anchor = Some(p);
                break;
            }
        }
    }
    let anchor = anchor?;
    let left = if ok(lo) {
        lo
    } else {
        let (mut bad, mut good) = (lo, anchor);
        while good - bad > TOL * (1.0 + good.abs()) {
            let mid = 0.5 * (bad + good);
            if ok(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };
    let right = if ok(hi) {
        hi
    } else {
        let (mut good, mut bad) = (anchor, hi);
        while bad - good > TOL * (1.0 + good.abs()) {
            let mid = 0.5 * (bad + good);
            if ok(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };
    Some((left, right))
}

/// Monte Carlo estimate of `P(α) = Pr(DEC(αy) = x)`.
pub fn p_correct(code: &NestedLatticeCode, snr_db: f64, alpha: f64, trials: u64, seed: u64, engine: &Engine) -> Proportion {
    let noise_var = code.noise_variance(snr_db);
    let n = code.dimension();
    let (tally, done) = engine.run(
        trials,
        |t, acc: &mut [u64; 1]| {
            let mut rng = trial_rng(seed, t);
            let b = code.random_message(&mut rng);
            let mut x = vec![0.0; n];
            code.encode_unchecked(&b, &mut x);
            let mut y = x.clone();
            add_noise(&mut y, noise_var, &mut rng);
            let mut buf = [vec![0.0; n], vec![0.0; n]];
            if decodes_to(code, &y, &x, alpha, &mut buf) {
                acc[0] += 1;
            }
        },
        |_| false,
    );
    Proportion::new(tally[0], done)
}

#[derive(Clone, Debug)]
pub struct SearchParams {
    pub bounds: (f64, f64),
    /// Grid points per interval before golden-section refinement.
    pub grid: usize,
    /// Minimum conditioned draws a level must see.
    pub min_conditioned: usize,
    /// Conditioned draws to collect per level (at least `min_conditioned`).
    pub target_conditioned: usize,
    /// Give up on a level after this many raw draws.
    pub max_draws: u64,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            bounds: (0.5, 1.5),
            grid: 400,
            min_conditioned: 2000,
            target_conditioned: 20_000,
            max_draws: 200_000_000,
            seed: 1,
        }
    }
}

/// Success intervals of the draws that failed every earlier candidate,
/// each carrying a sampling weight (one for plain Monte Carlo).
#[derive(Clone, Debug)]
pub struct ConditionedDraws {
    /// Number of conditioned draws, including ones no scaling can fix.
    pub count: usize,
    /// Raw draws needed to collect them.
    pub draws: u64,
    /// Total weight of the conditioned draws.
    pub weight: f64,
    los: Vec<f64>,
    his: Vec<f64>,
    /// Cumulative weights along `los` and `his`, with a leading zero.
    lo_mass: Vec<f64>,
    hi_mass: Vec<f64>,
}

impl ConditionedDraws {
    pub fn new(intervals: Vec<Option<(f64, f64)>>, draws: u64) -> Self {
        let weighted = intervals.into_iter().map(|i| (i, 1.0)).collect();
        Self::weighted(weighted, draws)
    }

    pub fn weighted(intervals: Vec<(Option<(f64, f64)>, f64)>, draws: u64) -> Self {
        let count = intervals.len();
        let weight = intervals.iter().map(|i| i.1).sum();
        let mut los: Vec<(f64, f64)> = intervals.iter().filter_map(|(i, w)| i.map(|i| (i.0, *w))).collect();
        let mut his: Vec<(f64, f64)> = intervals.iter().filter_map(|(i, w)| i.map(|i| (i.1, *w))).collect();
        los.sort_by(|a, b| a.0.total_cmp(&b.0));
        his.sort_by(|a, b| a.0.total_cmp(&b.0));
        let cumulative = |v: &[(f64, f64)]| {
            let mut acc = vec![0.0];
            for (_, w) in v {
                acc.push(acc.last().unwrap() + w);
            }
            acc
        };
        ConditionedDraws {
            count,
            draws,
            weight,
            lo_mass: cumulative(&los),
            hi_mass: cumulative(&his),
            los: los.into_iter().map(|p| p.0).collect(),
            his: his.into_iter().map(|p| p.0).collect(),
        }
    }

    /// Weight of the draws that `alpha` decodes correctly.
    pub fn successes(&self, alpha: f64) -> f64 {
        let started = self.los.partition_point(|&v| v <= alpha);
        let ended = self.his.partition_point(|&v| v < alpha);
        (self.lo_mass[started] - self.hi_mass[ended]).max(0.0)
    }

    pub fn probability(&self, alpha: f64) -> f64 {
        if self.weight <= 0.0 {
            0.0
        } else {
            self.successes(alpha) / self.weight
        }
    }

    /// Smallest range inside `(a, b)` holding every interval endpoint that
    /// falls there, so the search grid is not wasted on empty stretches.
    fn span_within(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let low = if self.successes(a) > 0.0 { Some(a) } else { self.los.iter().copied().find(|&v| v > a && v < b) };
        let high = if self.successes(b) > 0.0 { Some(b) } else { self.his.iter().rev().copied().find(|&v| v > a && v < b) };
        match (low, high) {
            (Some(lo), Some(hi)) if lo <= hi => Some((lo, hi)),
            _ => None,
        }
    }

    /// Draws decodable by some scaling in the search bounds.
    pub fn decodable(&self) -> usize {
        self.los.len()
    }
}

/// Gather conditioned draws for the level after `prior`.
pub fn conditioned_draws(
    code: &NestedLatticeCode,
    snr_db: f64,
    prior: &[f64],
    params: &SearchParams,
    stream: u64,
    engine: &Engine,
) -> Result<ConditionedDraws> {
    let noise_var = code.noise_variance(snr_db);
    let hint = mmse_alpha(code.power(), noise_var);
    let n = code.dimension();
    let base = stream << 40;
    let target = params.target_conditioned.max(params.min_conditioned);
    let (intervals, draws) = engine.collect_until(
        base..base + params.max_draws,
        |t| {
            let mut rng = trial_rng(params.seed, t);
            let b = code.random_message(&mut rng);
            let mut x = vec![0.0; n];
            code.encode_unchecked(&b, &mut x);
            let mut y = x.clone();
            add_noise(&mut y, noise_var, &mut rng);
            let mut buf = [vec![0.0; n], vec![0.0; n]];
            if prior.iter().any(|&a| decodes_to(code, &y, &x, a, &mut buf)) {
                return None;
            }
            Some(success_interval(code, &y, &x, params.bounds, hint))
        },
        |got| got.len() >= target,
    );
    if intervals.len() < params.min_conditioned {
        return Err(Error::RareConditioning { got: intervals.len(), need: params.min_conditioned });
    }
    Ok(ConditionedDraws::new(intervals, draws))
}

/// Best scaling strictly inside each gap of `sorted ∪ bounds`.
pub fn best_in_gaps(draws: &ConditionedDraws, prior: &[f64], params: &SearchParams) -> Vec<AlphaCandidate> {
    let mut edges: Vec<f64> = prior.to_vec();
    edges.push(params.bounds.0);
    edges.push(params.bounds.1);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let grid = params.grid.max(1);
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = match draws.span_within(w[0], w[1]) {
            Some(span) => span,
            None => continue,
        };
        let h = (b - a) / grid as f64;
        let mut best_alpha = a + 0.5 * h;
        let mut best = 0.0;
        for j in 0..grid {
            let alpha = a + (j as f64 + 0.5) * h;
            let s = draws.successes(alpha);
            if s > best {
                best = s;
                best_alpha = alpha;
            }
        }
        if best <= 0.0 {
            continue;
        }
        let (alpha, s) = golden_refine(draws, best_alpha, best, (best_alpha - h).max(w[0]), (best_alpha + h).min(w[1]));
        out.push(AlphaCandidate { alpha, conditional_success: s / draws.weight });
    }
    out
}

/// One golden-section pass on `[lo, hi]`, keeping the best point seen.
fn golden_refine(draws: &ConditionedDraws, start: f64, start_val: f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut best_a, mut best_v) = (start, start_val);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let mut fc = draws.successes(c);
    let mut fd = draws.successes(d);
    for _ in 0..40 {
        for (a, v) in [(c, fc), (d, fd)] {
            if v > best_v {
                best_a = a;
                best_v = v;
            }
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = draws.successes(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = draws.successes(d);
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    (best_a, best_v)
}

/// Next level given the candidates found so far.
pub fn search_level(
    code: &NestedLatticeCode,
    snr_db: f64,
    prior_levels: &[Vec<AlphaCandidate>],
    params: &SearchParams,
    engine: &Engine,
) -> Result<Vec<AlphaCandidate>> {
    if params.grid == 0 {
        return Err(Error::Config("search grid must be positive".into()));
    }
    let prior: Vec<f64> = prior_levels.iter().flatten().map(|c| c.alpha).collect();
    let draws = conditioned_draws(code, snr_db, &prior, params, prior_levels.len() as u64 + 1, engine)?;
    Ok(best_in_gaps(&draws, &prior, params))
}

/// Build a `k`-level candidate list.
pub fn search_alpha(code: &NestedLatticeCode, snr_db: f64, k: usize, params: &SearchParams, engine: &Engine) -> Result<AlphaCandidateList> {
    let mut levels: Vec<Vec<AlphaCandidate>> = Vec::new();
    for _ in 0..k {
        let mut next = search_level(code, snr_db, &levels, params, engine)?;
        next.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        levels.push(next);
    }
    Ok(AlphaCandidateList { snr_db, bounds: params.bounds, levels })
}
