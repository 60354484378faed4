//! Probability that a decoding error slips past the embedded parity check.

use crate::code::{mmse_alpha, NestedLatticeCode};
use crate::embed::{pack_lsb, BinaryCode, CrcSpec};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::sim::{trial_rng, Engine, Proportion};
use rand_distr::{Distribution, StandardNormal};

/// Fewest decoding errors a Monte Carlo estimate may rest on.
pub const MIN_ERROR_EVENTS: u64 = 100;

/// A probability known exactly as a ratio of counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ExactRatio {
    pub numerator: u64,
    pub denominator: u64,
}

impl ExactRatio {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

/// Which codeword is sent in the Monte Carlo.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transmit {
    Zero,
    Random,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PudMonteCarlo {
    pub trials: u64,
    pub errors: u64,
    /// Per checked code, undetected errors among `errors`.
    pub undetected: Vec<Proportion>,
}

impl PudMonteCarlo {
    pub fn word_error_rate(&self) -> Proportion {
        Proportion::new(self.errors, self.trials)
    }
}

/// Decode at MMSE scaling and, for every decoding error, test whether the
/// error vector passes each of `checks`. Runs until `target_errors` errors
/// are seen or `max_trials` is reached.
#[allow(clippy::too_many_arguments)]
pub fn p_ud_monte_carlo(
    code: &NestedLatticeCode,
    checks: &[BinaryCode],
    snr_db: f64,
    transmit: Transmit,
    target_errors: u64,
    max_trials: u64,
    seed: u64,
    engine: &Engine,
) -> Result<PudMonteCarlo> {
    let n = code.dimension();
    if let Some(c) = checks.iter().find(|c| c.length() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: c.length() });
    }
    let lat = code.lattice();
    let noise_var = code.noise_variance(snr_db);
    let alpha = mmse_alpha(code.power(), noise_var);
    let sigma = noise_var.sqrt();
    // Anything closer to the origin than this decodes to it.
    let safe2 = lat.packing_radius().powi(2) * (1.0 - 1e-9);
    let (tally, trials) = engine.run(
        max_trials,
        |t, acc: &mut Vec<u64>| {
            if acc.is_empty() {
                acc.resize(checks.len() + 1, 0);
            }
            let mut rng = trial_rng(seed, t);
            // Offset from the transmitted point after scaling.
            let mut v = vec![0.0; n];
            if transmit == Transmit::Random {
                let x = code.encode(&code.random_message(&mut rng)).expect("message in range");
                for (vi, xi) in v.iter_mut().zip(&x) {
                    *vi = (alpha - 1.0) * xi;
                }
            }
            for vi in v.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *vi += alpha * sigma * z;
            }
            if v.iter().map(|a| a * a).sum::<f64>() < safe2 {
                return;
            }
            let mut e = vec![0.0; n];
            lat.quantize_into(&v, &mut e);
            if e.iter().all(|&c| c.abs() < 1e-9) {
                return;
            }
            acc[0] += 1;
            let mut coords = vec![0i64; n];
            if lat.integer_coordinates_into(&e, &mut coords).is_err() {
                return;
            }
            let word = pack_lsb(&coords);
            for (slot, c) in acc[1..].iter_mut().zip(checks) {
                *slot += c.contains_word(word) as u64;
            }
        },
        |acc| acc.first().is_some_and(|&e| e >= target_errors),
    );
    let errors = tally.first().copied().unwrap_or(0);
    if errors < MIN_ERROR_EVENTS.min(target_errors) {
        return Err(Error::InsufficientErrors { got: errors, need: MIN_ERROR_EVENTS.min(target_errors) });
    }
    let undetected = (0..checks.len())
        .map(|i| Proportion::new(tally.get(i + 1).copied().unwrap_or(0), errors))
        .collect();
    Ok(PudMonteCarlo { trials, errors, undetected })
}

/// Fraction of minimum-norm vectors that are also in the embedded lattice.
pub fn p_ud_kissing(lattice: &Lattice, check: &BinaryCode) -> Result<ExactRatio> {
    p_ud_kissing_among(lattice, &kissing_words(lattice)?, check)
}

fn kissing_words(lattice: &Lattice) -> Result<Vec<u64>> {
    lattice
        .kissing_set()?
        .iter()
        .map(|p| lattice.integer_coordinates(p).map(|b| pack_lsb(&b)))
        .collect()
}

fn p_ud_kissing_among(lattice: &Lattice, words: &[u64], check: &BinaryCode) -> Result<ExactRatio> {
    if check.length() != lattice.dimension() {
        return Err(Error::DimensionMismatch { expected: lattice.dimension(), got: check.length() });
    }
    if words.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let numerator = words.iter().filter(|&&w| check.contains_word(w)).count() as u64;
    Ok(ExactRatio { numerator, denominator: words.len() as u64 })
}

/// `2^-l`.
pub fn p_ud_parity(parity_bits: usize) -> f64 {
    0.5f64.powi(parity_bits as i32)
}

/// Degree-`l` polynomial with a constant term whose CRC passes the fewest
/// kissing vectors. Ties go to the smallest polynomial value.
pub fn crc_poly_search(parity_bits: usize, lattice: &Lattice) -> Result<(CrcSpec, ExactRatio)> {
    let n = lattice.dimension();
    if parity_bits > n {
        return Err(Error::ParityTooLong { parity: parity_bits, bits: n as f64 });
    }
    let words = kissing_words(lattice)?;
    if parity_bits == 0 {
        let crc = CrcSpec::new(1)?;
        return Ok((crc, p_ud_kissing_among(lattice, &words, &crc.code(n)?)?));
    }
    let mut best: Option<(CrcSpec, ExactRatio)> = None;
    for poly in ((1u64 << parity_bits) | 1..1u64 << (parity_bits + 1)).step_by(2) {
        let crc = CrcSpec::new(poly)?;
        let ratio = p_ud_kissing_among(lattice, &words, &crc.code(n)?)?;
        if best.is_none_or(|(_, b)| ratio.numerator < b.numerator) {
            best = Some((crc, ratio));
        }
    }
    Ok(best.expect("at least one polynomial"))
}

/// SNR at which the word error rate at MMSE scaling is about `target`, by
/// bisection with common random numbers.
pub fn calibrate_snr(code: &NestedLatticeCode, target: f64, trials: u64, seed: u64, engine: &Engine) -> Result<f64> {
    let wer = |snr: f64| -> f64 {
        match p_ud_monte_carlo(code, &[], snr, Transmit::Zero, u64::MAX, trials, seed, engine) {
            Ok(mc) => mc.word_error_rate().value,
            Err(_) => 0.0,
        }
    };
    let (mut lo, mut hi) = (-10.0, 60.0);
    if wer(hi) > target || wer(lo) < target {
        return Err(Error::TargetUnreachable(target));
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if wer(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 0.01 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One row of the undetected-error comparison.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PudReport {
    pub parity_bits: usize,
    pub polynomial: String,
    pub snr_db: f64,
    pub monte_carlo: Option<Proportion>,
    pub kissing: ExactRatio,
    pub parity_estimate: f64,
}

/// Search a polynomial for each length and compare the three estimates at
/// one SNR. Monte Carlo is skipped when `max_trials` is zero.
#[allow(clippy::too_many_arguments)]
pub fn pud_table(
    code: &NestedLatticeCode,
    lengths: &[usize],
    snr_db: f64,
    target_errors: u64,
    max_trials: u64,
    seed: u64,
    engine: &Engine,
) -> Result<Vec<PudReport>> {
    let n = code.dimension();
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &l in lengths {
        let (crc, kissing) = crc_poly_search(l, code.lattice())?;
        checks.push(crc.code(n)?);
        rows.push(PudReport {
            parity_bits: l,
            polynomial: crc.pretty(),
            snr_db,
            monte_carlo: None,
            kissing,
            parity_estimate: p_ud_parity(l),
        });
    }
    if max_trials > 0 {
        let mc = p_ud_monte_carlo(code, &checks, snr_db, Transmit::Zero, target_errors, max_trials, seed, engine)?;
        for (row, p) in rows.iter_mut().zip(mc.undetected) {
            row.monte_carlo = Some(p);
        }
    }
    Ok(rows)
}
