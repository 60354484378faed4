//! Nested lattice codes `Λc / L·Z^N` with hypercube shaping.
//!
//! Messages are integer vectors with `0 <= b_i < M_i`, where `M_i` is the
//! diagonal of the nesting matrix `M = L·Gc^{-1}`. Encoding reduces `Gc b`
//! into the box `[-L/2, L/2)^N`; indexing inverts it exactly.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Largest codebook that [`PowerMode::Enumerate`] will walk.
pub const ENUMERATION_LIMIT: u128 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PowerMode {
    /// Walk every codeword.
    Enumerate,
    /// Monte Carlo over uniformly random messages.
    Sample { n: usize, seed: u64 },
    /// Exact, from the per-coordinate marginals. Each coordinate of a
    /// uniformly drawn codeword is uniform over a finite grid in the box.
    Marginal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerEstimate {
    pub value: f64,
    /// Half-width of the 95% interval, zero for exact modes.
    pub ci_half_width: f64,
}

#[derive(Clone, Debug)]
pub struct NestedLatticeCode {
    coding: Lattice,
    edge: f64,
    /// Row-major `M = L·Gc^{-1}`, lower triangular.
    nesting: Vec<i64>,
    moduli: Vec<i64>,
    power: f64,
}

impl NestedLatticeCode {
    /// Hypercube-shaped code with edge `L`. The coding generator must be
    /// lower triangular and `L·Gc^{-1}` must be an integer matrix.
    pub fn hypercube(coding: Lattice, edge: f64) -> Result<Self> {
        if !coding.is_lower_triangular() {
            return Err(Error::NotTriangular);
        }
        if !(edge > 0.0 && edge.is_finite()) {
            return Err(Error::Config(format!("shaping edge {edge} must be positive")));
        }
        let n = coding.dimension();
        let inv = coding.inverse();
        let mut nesting = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let v = edge * inv[(i, j)];
                let r = v.round();
                if (v - r).abs() > 1e-6 * (1.0 + v.abs()) {
                    return Err(Error::NotNested);
                }
                nesting[i * n + j] = r as i64;
            }
        }
        let moduli: Vec<i64> = (0..n).map(|i| nesting[i * n + i]).collect();
        if moduli.iter().any(|&m| m < 1) {
            return Err(Error::NotNested);
        }
        let mut code = NestedLatticeCode { coding, edge, nesting, moduli, power: 0.0 };
        code.power = code.average_power(PowerMode::Marginal)?.value;
        Ok(code)
    }

    /// Hypercube code of rate `R` bits per dimension: `L = 2^R · V^{1/N}`.
    pub fn with_rate(coding: Lattice, rate: f64) -> Result<Self> {
        let n = coding.dimension() as f64;
        let edge = 2f64.powf(rate) * coding.volume().powf(1.0 / n);
        Self::hypercube(coding, edge)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.coding
    }

    pub fn dimension(&self) -> usize {
        self.coding.dimension()
    }

    pub fn edge(&self) -> f64 {
        self.edge
    }

    pub fn moduli(&self) -> &[i64] {
        &self.moduli
    }

    /// Entry `(i, j)` of the nesting matrix.
    pub fn nesting(&self, i: usize, j: usize) -> i64 {
        self.nesting[i * self.dimension() + j]
    }

    pub fn nesting_matrix(&self) -> Vec<Vec<i64>> {
        let n = self.dimension();
        (0..n).map(|i| self.nesting[i * n..(i + 1) * n].to_vec()).collect()
    }

    /// Bits per dimension from the moduli.
    pub fn rate(&self) -> f64 {
        self.moduli.iter().map(|&m| (m as f64).log2()).sum::<f64>() / self.dimension() as f64
    }

    /// Bits per dimension from the volume ratio of the two lattices.
    pub fn rate_from_volumes(&self) -> f64 {
        let n = self.dimension() as f64;
        (n * self.edge.log2() - self.coding.volume().log2()) / n
    }

    /// Exact average energy per dimension of the codebook.
    pub fn power(&self) -> f64 {
        self.power
    }

    /// Noise variance per dimension for an SNR in dB.
    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.power / 10f64.powf(snr_db / 10.0)
    }

    pub fn codebook_size(&self) -> u128 {
        self.moduli.iter().map(|&m| m as u128).product()
    }

    fn check_message(&self, b: &[i64]) -> Result<()> {
        if b.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: b.len() });
        }
        for (i, (&v, &m)) in b.iter().zip(&self.moduli).enumerate() {
            if v < 0 || v >= m {
                return Err(Error::MessageOutOfRange { index: i, value: v, modulus: m });
            }
        }
        Ok(())
    }

    /// `Gc b mod L·Z^N`, reduced into `[-L/2, L/2)^N`.
    pub fn encode(&self, b: &[i64]) -> Result<Vec<f64>> {
        self.check_message(b)?;
        let mut x = self.coding.point(b);
        self.reduce(&mut x);
        Ok(x)
    }

    pub(crate) fn encode_unchecked(&self, b: &[i64], out: &mut [f64]) {
        let g = self.coding.generator();
        let n = self.dimension();
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += g[(i, j)] * b[j] as f64;
            }
            out[i] = acc;
        }
        self.reduce(out);
    }

    fn reduce(&self, x: &mut [f64]) {
        let l = self.edge;
        for v in x.iter_mut() {
            *v -= l * ((*v + l / 2.0) / l).floor();
        }
    }

    /// Message of a point of the coding lattice, taken modulo the shaping
    /// lattice, so `index(encode(b)) == b`.
    pub fn index(&self, x: &[f64]) -> Result<Vec<i64>> {
        let c = self.coding.integer_coordinates(x)?;
        let mut b = vec![0i64; c.len()];
        self.index_from_coordinates(&c, &mut b);
        Ok(b)
    }

    /// Solve `c = b - M s` row by row; `M` is lower triangular so each row
    /// fixes one message entry and one shaping coordinate.
    pub(crate) fn index_from_coordinates(&self, c: &[i64], b: &mut [i64]) {
        let n = self.dimension();
        let mut s = vec![0i64; n];
        for i in 0..n {
            let mut t = c[i];
            for j in 0..i {
                t += self.nesting[i * n + j] * s[j];
            }
            let m = self.moduli[i];
            b[i] = t.rem_euclid(m);
            s[i] = (b[i] - t) / m;
        }
    }

    pub fn random_message<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        self.moduli.iter().map(|&m| rng.random_range(0..m)).collect()
    }

    pub fn average_power(&self, mode: PowerMode) -> Result<PowerEstimate> {
        let n = self.dimension();
        match mode {
            PowerMode::Enumerate => {
                let size = self.codebook_size();
                if size > ENUMERATION_LIMIT {
                    return Err(Error::EnumerationBudget(ENUMERATION_LIMIT as usize));
                }
                let mut b = vec![0i64; n];
                let mut x = vec![0.0; n];
                let mut total = 0.0;
                for _ in 0..size {
                    self.encode_unchecked(&b, &mut x);
                    total += x.iter().map(|v| v * v).sum::<f64>();
                    // mixed-radix increment
                    for i in 0..n {
                        b[i] += 1;
                        if b[i] < self.moduli[i] {
                            break;
                        }
                        b[i] = 0;
                    }
                }
                Ok(PowerEstimate { value: total / (size as f64 * n as f64), ci_half_width: 0.0 })
            }
            PowerMode::Sample { n: samples, seed } => {
                use rand::SeedableRng;
                if samples < 2 {
                    return Err(Error::Config("power sampling needs at least 2 samples".into()));
                }
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut x = vec![0.0; n];
                let (mut s1, mut s2) = (0.0, 0.0);
                for _ in 0..samples {
                    let b = self.random_message(&mut rng);
                    self.encode_unchecked(&b, &mut x);
                    let e = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
                    s1 += e;
                    s2 += e * e;
                }
                let m = samples as f64;
                let mean = s1 / m;
                let var = (s2 / m - mean * mean).max(0.0) * m / (m - 1.0);
                Ok(PowerEstimate { value: mean, ci_half_width: 1.96 * (var / m).sqrt() })
            }
            PowerMode::Marginal => {
                let g = self.coding.generator();
                let l = self.edge;
                let mut total = 0.0;
                for i in 0..n {
                    let mut step = l;
                    for j in 0..=i {
                        step = real_gcd(step, g[(i, j)].abs(), 1e-9 * l);
                    }
                    let count = (l / step).round();
                    if (count * step - l).abs() > 1e-6 * l || count > 1e9 {
                        return Err(Error::NotNested);
                    }
                    let count = count as usize;
                    let mut sq = 0.0;
                    for k in 0..count {
                        let v = k as f64 * step;
                        let v = v - l * ((v + l / 2.0) / l).floor();
                        sq += v * v;
                    }
                    total += sq / count as f64;
                }
                Ok(PowerEstimate { value: total / n as f64, ci_half_width: 0.0 })
            }
        }
    }

    /// Scale by `alpha`, decode in the coding lattice, index modulo shaping.
    pub fn su_decode(&self, y: &[f64], alpha: f64) -> Result<(Vec<f64>, Vec<i64>)> {
        let scaled: Vec<f64> = y.iter().map(|v| alpha * v).collect();
        let xhat = self.coding.nearest_point(&scaled)?;
        let b = self.index(&xhat)?;
        Ok((xhat, b))
    }
}

/// MMSE receive scaling `P / (P + σ²)`.
pub fn mmse_alpha(power: f64, noise_var: f64) -> f64 {
    power / (power + noise_var)
}

/// Greatest common divisor of two commensurable reals.
fn real_gcd(mut a: f64, mut b: f64, tol: f64) -> f64 {
    if a < b {
        std::mem::swap(&mut a, &mut b);
    }
    while b > tol {
        let r = a - b * (a / b).floor();
        // snap remainders that are a rounding error away from b
        let r = if (b - r).abs() <= tol { 0.0 } else { r };
        a = b;
        b = r;
    }
    a
}
