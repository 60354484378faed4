//! Compute-forward relaying with unconstrained relay power: integer
//! coefficient selection, lattice decoding of a linear combination with
//! retries, and recovery of the users' codewords at the destination.

use crate::code::NestedLatticeCode;
use crate::embed::{check_even_nesting, pack_lsb, BinaryCode};
use crate::error::{Error, Result};
use crate::lattice::enumerate::Enumerator;
use crate::lattice::ENUMERATION_BUDGET;
use crate::retry::same_point;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Rate reported when the effective noise vanishes numerically.
pub const RATE_CAP: f64 = 64.0;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ComputationRate {
    pub bits: f64,
    /// Set when the true rate is unbounded and `bits` is `RATE_CAP`.
    pub capped: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn as_real(a: &[i64]) -> Vec<f64> {
    a.iter().map(|&v| v as f64).collect()
}

/// Effective noise of decoding `a` after the best scaling, relative to `P`.
fn residual(h: &[f64], a: &[i64], power: f64, noise_var: f64) -> f64 {
    let a = as_real(a);
    let ha = dot(h, &a);
    dot(&a, &a) - power * ha * ha / (noise_var + power * dot(h, h))
}

/// Rate of decoding the combination `a` from channel `h`, maximized over the
/// receive scaling.
pub fn computation_rate(h: &[f64], a: &[i64], power: f64, noise_var: f64) -> ComputationRate {
    let r = residual(h, a, power, noise_var);
    if r <= 1e-300 {
        return ComputationRate { bits: RATE_CAP, capped: true };
    }
    let bits = (0.5 * (1.0 / r).log2()).max(0.0);
    if bits >= RATE_CAP {
        ComputationRate { bits: RATE_CAP, capped: true }
    } else {
        ComputationRate { bits, capped: false }
    }
}

pub fn optimal_alpha(h: &[f64], a: &[i64], power: f64, noise_var: f64) -> f64 {
    power * dot(h, &as_real(a)) / (noise_var + power * dot(h, h))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CfCandidate {
    pub coefficients: Vec<i64>,
    pub alpha: f64,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CfCandidateList {
    /// Non-increasing in rate.
    pub candidates: Vec<CfCandidate>,
    pub channel: Vec<f64>,
    pub power: f64,
    pub noise_var: f64,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// All nonzero integer vectors with `‖a‖² < limit`, by increasing norm and
/// lexicographically within a shell.
fn integer_ball(dim: usize, limit: f64) -> Vec<Vec<i64>> {
    fn walk(prefix: &mut Vec<i64>, dim: usize, left: f64, out: &mut Vec<Vec<i64>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        let m = left.max(0.0).sqrt().floor() as i64;
        for v in -m..=m {
            let rest = left - (v * v) as f64;
            if rest > 0.0 {
                prefix.push(v);
                walk(prefix, dim, rest, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(&mut Vec::with_capacity(dim), dim, limit, &mut out);
    out.retain(|a| a.iter().any(|&v| v != 0));
    out.sort_by(|a, b| norm2(a).cmp(&norm2(b)).then_with(|| a.cmp(b)));
    out
}

/// The `k` highest-rate coefficient vectors with their optimal scalings.
///
/// Negations and integer multiples of an earlier vector decode no better and
/// are dropped. What survives is one primitive vector per sign pair. Equal
/// rates keep the smaller norm first.
pub fn enumerate_candidates(h: &[f64], power: f64, noise_var: f64, k: usize) -> Result<CfCandidateList> {
    if h.is_empty() || k == 0 {
        return Err(Error::EmptyCandidates);
    }
    let dim = h.len();
    let gain = power / (noise_var + power * dot(h, h));
    // Positive rate means residual < 1, an ellipsoid elongated along h.
    let form = DMatrix::from_fn(dim, dim, |i, j| (i == j) as u8 as f64 - gain * h[i] * h[j]);
    let mut positive: Vec<Vec<i64>> = match form.cholesky() {
        Some(chol) => Enumerator::new(&chol.l().transpose())
            .within(&vec![0.0; dim], 1.0, ENUMERATION_BUDGET)?
            .into_iter()
            .map(|(a, _)| a)
            .filter(|a| a.iter().any(|&v| v != 0) && residual(h, a, power, noise_var) < 1.0)
            .collect(),
        None => Vec::new(),
    };
    positive.sort_by(|a, b| norm2(a).cmp(&norm2(b)).then_with(|| a.cmp(b)));
    let mut kept = reduce(positive);
    if kept.len() < k {
        // Pad with zero-rate vectors from the ball in which every
        // positive-rate vector lies (noise variance normalized to one).
        let limit = 1.0 + dot(h, h) * power / noise_var;
        for a in reduce(integer_ball(dim, limit)) {
            if !kept.contains(&a) {
                kept.push(a);
            }
        }
    }
    let mut candidates: Vec<CfCandidate> = kept
        .into_iter()
        .map(|a| CfCandidate {
            rate: computation_rate(h, &a, power, noise_var).bits,
            alpha: optimal_alpha(h, &a, power, noise_var),
            coefficients: a,
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    // Stable sort keeps the norm order among equal rates.
    candidates.sort_by(|a, b| b.rate.total_cmp(&a.rate));
    candidates.truncate(k);
    Ok(CfCandidateList { candidates, channel: h.to_vec(), power, noise_var })
}

fn norm2(a: &[i64]) -> i64 {
    a.iter().map(|v| v * v).sum()
}

/// Drop multiples and negations of earlier vectors from a list sorted by
/// norm, leaving the primitive vectors. Of each sign pair the one whose
/// first nonzero entry is positive stays.
fn reduce(sorted: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    sorted
        .into_iter()
        .filter(|a| a.iter().fold(0, |g, &v| gcd(g, v)) == 1)
        .filter(|a| a.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0))
        .collect()
}

/// Lattice decoding of `α·y` without reduction modulo the shaping lattice.
pub fn icf_decode(code: &NestedLatticeCode, y: &[f64], alpha: f64) -> Vec<f64> {
    let scaled: Vec<f64> = y.iter().map(|v| alpha * v).collect();
    let mut out = vec![0.0; y.len()];
    code.lattice().quantize_into(&scaled, &mut out);
    out
}

/// `Σ aᵢ xᵢ`.
pub fn combine(codewords: &[Vec<f64>], a: &[i64]) -> Vec<f64> {
    let mut out = vec![0.0; codewords[0].len()];
    for (x, &ai) in codewords.iter().zip(a) {
        for (o, v) in out.iter_mut().zip(x) {
            *o += ai as f64 * v;
        }
    }
    out
}

/// How the relay decides whether a decoded combination is trustworthy.
#[derive(Clone, Copy, Debug)]
pub enum EquationCheck<'a> {
    /// Coordinate LSBs must form a codeword.
    Crc(&'a BinaryCode),
    /// Compare with the true combination of these user codewords.
    Genie(&'a [Vec<f64>]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelayOutcome {
    /// Accepted combination and its coefficients.
    pub decoded: Option<(Vec<f64>, Vec<i64>)>,
    pub attempts: usize,
}

/// Try candidates in order until one passes the check. A relay that
/// exhausts the list forwards nothing.
pub fn relay_retry(code: &NestedLatticeCode, y: &[f64], list: &CfCandidateList, check: EquationCheck) -> Result<RelayOutcome> {
    if matches!(check, EquationCheck::Crc(_)) && !check_even_nesting(code) {
        return Err(Error::OddNesting);
    }
    let lat = code.lattice();
    let mut coords = vec![0i64; y.len()];
    for (i, c) in list.candidates.iter().enumerate() {
        let xhat = icf_decode(code, y, c.alpha);
        let pass = match check {
            EquationCheck::Crc(bin) => {
                lat.integer_coordinates_into(&xhat, &mut coords).is_ok() && bin.contains_word(pack_lsb(&coords))
            }
            EquationCheck::Genie(users) => same_point(&xhat, &combine(users, &c.coefficients)),
        };
        if pass {
            return Ok(RelayOutcome { decoded: Some((xhat, c.coefficients.clone())), attempts: i + 1 });
        }
    }
    Ok(RelayOutcome { decoded: None, attempts: list.candidates.len() })
}

/// Independent Rayleigh gains scaled to unit total norm, so the received
/// SNR stays fixed while the ratio between users fades.
pub fn sample_fading<R: Rng + ?Sized>(users: usize, rng: &mut R) -> Vec<f64> {
    let mut h: Vec<f64> = (0..users)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            re.hypot(im)
        })
        .collect();
    let norm = dot(&h, &h).sqrt();
    for v in &mut h {
        *v /= norm;
    }
    h
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveredUser {
    pub codeword: Vec<f64>,
    pub message: Vec<i64>,
}

/// Solve the forwarded combinations for the individual codewords. The
/// coefficient matrix needs full column rank over the reals.
pub fn recover_messages(code: &NestedLatticeCode, equations: &[(Vec<f64>, Vec<i64>)], users: usize) -> Result<Vec<RecoveredUser>> {
    let n = code.dimension();
    let rows = equations.len();
    let coeffs = DMatrix::from_fn(rows, users, |j, i| equations[j].1.get(i).copied().unwrap_or(0) as f64);
    let rhs = DMatrix::from_fn(rows, n, |j, d| equations[j].0[d]);
    let svd = coeffs.clone().svd(true, true);
    let rank = svd.rank(1e-9 * svd.singular_values.max().max(1.0));
    if rank < users {
        return Err(Error::RankDeficient { rank, need: users });
    }
    let solved = svd.solve(&rhs, 1e-12).map_err(|e| Error::Parse(e.to_string()))?;
    (0..users)
        .map(|i| {
            let approx: Vec<f64> = solved.row(i).iter().copied().collect();
            let codeword = code.lattice().nearest_point(&approx)?;
            let message = code.index(&codeword)?;
            Ok(RecoveredUser { codeword, message })
        })
        .collect()
}
