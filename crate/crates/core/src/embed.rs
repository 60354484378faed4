//! Binary linear codes embedded into the least significant bits of lattice
//! coordinates.
//!
//! Binary vectors of length `n <= 64` are packed MSB-first into a `u64`:
//! position 0 is bit `n-1`. With that packing a CRC codeword is simply a
//! multiple of the generator polynomial.

use nalgebra::DMatrix;

use crate::code::NestedLatticeCode;
use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Componentwise `b mod 2` with a nonnegative result.
pub fn lsb(b: &[i64]) -> Vec<u8> {
    b.iter().map(|v| v.rem_euclid(2) as u8).collect()
}

/// Pack a binary vector MSB-first.
pub fn pack_bits(bits: &[u8]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | (b & 1) as u64)
}

pub fn unpack_bits(word: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((word >> (n - 1 - i)) & 1) as u8).collect()
}

/// LSBs of an integer vector, packed MSB-first.
pub fn pack_lsb(b: &[i64]) -> u64 {
    b.iter().fold(0u64, |acc, &v| (acc << 1) | (v & 1) as u64)
}

/// Remainder of `value` divided by `poly` over GF(2).
pub fn poly_mod(mut value: u64, poly: u64) -> u64 {
    let deg = 63 - poly.leading_zeros();
    while value != 0 && 63 - value.leading_zeros() >= deg {
        let shift = (63 - value.leading_zeros()) - deg;
        value ^= poly << shift;
    }
    value
}

/// A CRC generator polynomial with its leading term written out, so
/// `0xB` is `x^3 + x + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CrcSpec {
    poly: u64,
}

impl CrcSpec {
    pub fn new(poly: u64) -> Result<Self> {
        if poly == 0 {
            return Err(Error::InvalidCode("zero polynomial".into()));
        }
        if poly.leading_zeros() == 0 {
            return Err(Error::InvalidCode("degree 63 polynomials are not supported".into()));
        }
        Ok(CrcSpec { poly })
    }

    /// Parse `0xB`, `B` or `0b1011`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let value = if let Some(bin) = t.strip_prefix("0b").or_else(|| t.strip_prefix("0B")) {
            u64::from_str_radix(bin, 2)
        } else {
            let hex = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")).unwrap_or(t);
            u64::from_str_radix(hex, 16)
        }
        .map_err(|e| Error::Parse(format!("CRC polynomial {t:?}: {e}")))?;
        Self::new(value)
    }

    /// Single parity check, `x + 1`.
    pub fn parity() -> Self {
        CrcSpec { poly: 0b11 }
    }

    pub fn poly(&self) -> u64 {
        self.poly
    }

    /// Number of parity bits.
    pub fn degree(&self) -> usize {
        (63 - self.poly.leading_zeros()) as usize
    }

    pub fn hex(&self) -> String {
        format!("0x{:X}", self.poly)
    }

    /// Human readable polynomial, e.g. `x^3+x+1`.
    pub fn pretty(&self) -> String {
        let mut terms = Vec::new();
        for k in (0..=self.degree()).rev() {
            if self.poly >> k & 1 == 1 {
                terms.push(match k {
                    0 => "1".to_string(),
                    1 => "x".to_string(),
                    _ => format!("x^{k}"),
                });
            }
        }
        terms.join("+")
    }

    /// Systematic CRC code of length `n`: payload in positions
    /// `0..n-l`, remainder in the last `l`.
    pub fn code(&self, n: usize) -> Result<BinaryCode> {
        let l = self.degree();
        if n > 64 || l > n {
            return Err(Error::InvalidCode(format!("CRC of degree {l} does not fit length {n}")));
        }
        let k = n - l;
        let basis = (0..k)
            .map(|j| {
                let v = 1u64 << (n - 1 - j);
                v ^ poly_mod(v, self.poly)
            })
            .collect();
        Ok(BinaryCode { n, info: (0..k).collect(), basis, crc: Some(*self) })
    }
}

/// A binary linear code in systematic form. Each information position
/// `info[j]` owns a codeword `basis[j]` that has a one there and zeros in
/// every other information position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryCode {
    n: usize,
    info: Vec<usize>,
    basis: Vec<u64>,
    crc: Option<CrcSpec>,
}

impl BinaryCode {
    /// The whole space `GF(2)^n` (no parity).
    pub fn full(n: usize) -> Result<Self> {
        Self::from_generator_rows(
            &(0..n).map(|i| (0..n).map(|j| (i == j) as u8).collect()).collect::<Vec<Vec<u8>>>(),
            n,
        )
    }

    /// Code spanned by `rows` (each of length `n`). Gaussian elimination over
    /// GF(2) picks the leftmost pivot columns as the information set, which
    /// yields the triangular `[T; P]` form with `T = I` on those positions.
    pub fn from_generator_rows(rows: &[Vec<u8>], n: usize) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::InvalidCode(format!("length {n} outside 1..=64")));
        }
        let mut words: Vec<u64> = Vec::with_capacity(rows.len());
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: r.len() });
            }
            words.push(pack_bits(r));
        }
        let mut basis: Vec<u64> = Vec::new();
        let mut info = Vec::new();
        for pos in 0..n {
            let bit = 1u64 << (n - 1 - pos);
            let Some(p) = words.iter().position(|w| w & bit != 0) else { continue };
            let pivot = words.swap_remove(p);
            for w in words.iter_mut().chain(basis.iter_mut()) {
                if *w & bit != 0 {
                    *w ^= pivot;
                }
            }
            basis.push(pivot);
            info.push(pos);
        }
        Ok(BinaryCode { n, info, basis, crc: None })
    }

    pub fn length(&self) -> usize {
        self.n
    }

    pub fn info_bits(&self) -> usize {
        self.info.len()
    }

    pub fn parity_bits(&self) -> usize {
        self.n - self.info.len()
    }

    /// Information positions, ascending.
    pub fn info_set(&self) -> &[usize] {
        &self.info
    }

    pub fn crc(&self) -> Option<CrcSpec> {
        self.crc
    }

    /// Codeword for the payload bits on the information positions.
    pub fn encode_word(&self, payload: &[u8]) -> u64 {
        self.basis
            .iter()
            .zip(payload)
            .filter(|(_, &bit)| bit & 1 == 1)
            .fold(0, |acc, (w, _)| acc ^ w)
    }

    /// Re-encode from the information positions of `word`.
    fn reencode(&self, word: u64) -> u64 {
        let mut acc = 0;
        for (w, &pos) in self.basis.iter().zip(&self.info) {
            if word >> (self.n - 1 - pos) & 1 == 1 {
                acc ^= w;
            }
        }
        acc
    }

    pub fn contains_word(&self, word: u64) -> bool {
        match self.crc {
            Some(c) => poly_mod(word, c.poly) == 0,
            None => self.reencode(word) == word,
        }
    }

    pub fn contains(&self, bits: &[u8]) -> bool {
        bits.len() == self.n && self.contains_word(pack_bits(bits))
    }

    /// Generator columns `G_b` (n x k), column `j` being the codeword of
    /// information position `j`.
    pub fn generator_matrix(&self) -> Vec<Vec<u8>> {
        let words: Vec<Vec<u8>> = self.basis.iter().map(|&w| unpack_bits(w, self.n)).collect();
        (0..self.n).map(|i| words.iter().map(|w| w[i]).collect()).collect()
    }
}

/// `G' = G · G_a`, where `G_a` keeps the codeword columns on information
/// positions and `2 e_i` elsewhere.
pub fn embed_generator(g: &DMatrix<f64>, code: &BinaryCode) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    if code.length() != n || g.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: code.length() });
    }
    let mut ga = DMatrix::zeros(n, n);
    for j in 0..n {
        ga[(j, j)] = 2.0;
    }
    for (w, &pos) in code.basis.iter().zip(&code.info) {
        let bits = unpack_bits(*w, n);
        for i in 0..n {
            ga[(i, pos)] = bits[i] as f64;
        }
    }
    Ok(g * ga)
}

/// A lattice with a binary code embedded in its coordinate LSBs.
#[derive(Clone, Debug)]
pub struct EmbeddedLattice {
    base: Lattice,
    code: BinaryCode,
    embedded: Lattice,
}

impl EmbeddedLattice {
    pub fn new(base: Lattice, code: BinaryCode) -> Result<Self> {
        let g = embed_generator(base.generator(), &code)?;
        let embedded = Lattice::new(format!("{}+lbc", base.name()), g)?;
        Ok(EmbeddedLattice { base, code, embedded })
    }

    pub fn base(&self) -> &Lattice {
        &self.base
    }

    pub fn code(&self) -> &BinaryCode {
        &self.code
    }

    /// The sublattice `Λ'` generated by `G'`.
    pub fn lattice(&self) -> &Lattice {
        &self.embedded
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        self.embedded.generator()
    }

    /// Is `x ∈ Λ'`? Requires `x ∈ Λ`.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self.base.integer_coordinates(x) {
            Ok(b) => self.code.contains_word(pack_lsb(&b)),
            Err(_) => false,
        }
    }
}

/// Overwrite the parity-position LSBs of `bprime` so that `lsb(b)` is the
/// codeword of its information bits. Parity positions must be even.
pub fn embed_encode(bprime: &[i64], code: &BinaryCode) -> Result<Vec<i64>> {
    let n = code.length();
    if bprime.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: bprime.len() });
    }
    let mut is_info = vec![false; n];
    for &p in code.info_set() {
        is_info[p] = true;
    }
    if let Some(p) = (0..n).find(|&i| !is_info[i] && bprime[i].rem_euclid(2) == 1) {
        return Err(Error::ForbiddenPayload(p));
    }
    let payload: Vec<u8> = code.info_set().iter().map(|&p| bprime[p].rem_euclid(2) as u8).collect();
    let word = unpack_bits(code.encode_word(&payload), n);
    Ok(bprime
        .iter()
        .zip(&word)
        .map(|(&v, &c)| v - v.rem_euclid(2) + c as i64)
        .collect())
}

/// Pass iff the LSB vector of `bhat` is a codeword.
pub fn parity_check(bhat: &[i64], code: &BinaryCode) -> bool {
    bhat.len() == code.length() && code.contains_word(pack_lsb(bhat))
}

/// Every entry of the nesting matrix is even, which keeps integer
/// combinations of codewords inside the embedded lattice.
pub fn check_even_nesting(code: &NestedLatticeCode) -> bool {
    let n = code.dimension();
    (0..n).all(|i| (0..n).all(|j| code.nesting(i, j) % 2 == 0))
}

/// Rate loss of spending `parity` of the `N·R` message bits on parity, in dB.
pub fn snr_penalty(rate: f64, parity: usize, dimension: usize) -> Result<f64> {
    let bits = dimension as f64 * rate;
    if parity as f64 >= bits {
        return Err(Error::ParityTooLong { parity, bits });
    }
    let reduced = (bits - parity as f64) / dimension as f64;
    Ok(10.0 * (rate / reduced).log10())
}

/// A nested lattice code whose coding lattice carries an embedded binary
/// code. Messages have arbitrary information positions and even parity
/// positions before embedding, which needs even moduli there.
#[derive(Clone, Debug)]
pub struct EmbeddedCode {
    inner: NestedLatticeCode,
    code: BinaryCode,
    parity_positions: Vec<usize>,
}

impl EmbeddedCode {
    pub fn new(inner: NestedLatticeCode, code: BinaryCode) -> Result<Self> {
        if code.length() != inner.dimension() {
            return Err(Error::DimensionMismatch { expected: inner.dimension(), got: code.length() });
        }
        let info = code.info_set();
        let parity_positions: Vec<usize> =
            (0..code.length()).filter(|i| !info.contains(i)).collect();
        for &p in &parity_positions {
            if inner.moduli()[p] % 2 != 0 {
                return Err(Error::InvalidCode(format!(
                    "parity position {p} has odd modulus {}",
                    inner.moduli()[p]
                )));
            }
        }
        Ok(EmbeddedCode { inner, code, parity_positions })
    }

    pub fn nested(&self) -> &NestedLatticeCode {
        &self.inner
    }

    pub fn binary_code(&self) -> &BinaryCode {
        &self.code
    }

    /// Rate after spending the parity bits.
    pub fn rate(&self) -> f64 {
        self.inner.rate() - self.code.parity_bits() as f64 / self.inner.dimension() as f64
    }

    /// Uniform message whose LSBs form a codeword.
    pub fn random_message<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        let mut b = self.inner.random_message(rng);
        for &p in &self.parity_positions {
            b[p] -= b[p].rem_euclid(2);
        }
        embed_encode(&b, &self.code).expect("parity positions cleared")
    }

    pub fn check(&self, bhat: &[i64]) -> bool {
        parity_check(bhat, &self.code)
    }
}
