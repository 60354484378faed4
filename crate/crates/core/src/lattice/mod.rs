//! Lattices, exact nearest-point decoding and basic geometry.
//!
//! Generators use the column convention `x = G b`. The built-in lattices
//! come with closed-form or coset decoders; anything else falls back to
//! exact Schnorr-Euchner enumeration.

pub(crate) mod enumerate;
mod hermite;

use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use enumerate::Enumerator;
pub(crate) use hermite::hermite_lower;

/// Absolute tolerance for "is this an integer vector" checks.
pub const INTEGER_TOL: f64 = 1e-9;

/// Default cap on the number of points a sphere enumeration may return.
pub const ENUMERATION_BUDGET: usize = 2_000_000;

/// RM(1,4) coordinate labelling used for the Barnes-Wall lattice: position
/// `p` carries the 4-bit affine coordinate `BW16_LABELS[p]`. The point set
/// is the same for every labelling up to a coordinate permutation, but the
/// triangular basis (and hence the LSB map of an embedded code) is not.
pub const BW16_LABELS: [u8; 16] = [4, 14, 9, 7, 12, 10, 6, 1, 5, 0, 15, 3, 13, 2, 8, 11];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    Zn,
    A2,
    E8,
    Bw16,
    SphereGeneric,
}

#[derive(Clone, Debug)]
pub struct Lattice {
    name: String,
    kind: DecoderKind,
    generator: DMatrix<f64>,
    inverse: DMatrix<f64>,
    /// Built-in decoders work in canonical units; this maps them back.
    scale: f64,
    covering_radius: Option<f64>,
    lower_triangular: bool,
    enumerator: Enumerator,
    /// Coset leaders of `c + 2 D16` in integer units (BW16 only).
    bw16_cosets: Vec<[f64; 16]>,
    min_norm: OnceLock<f64>,
}

impl Lattice {
    /// Lattice generated by the columns of `generator`, decoded by sphere
    /// enumeration.
    pub fn new(name: impl Into<String>, generator: DMatrix<f64>) -> Result<Self> {
        Self::build(name.into(), DecoderKind::SphereGeneric, generator, 1.0, None)
    }

    fn build(
        name: String,
        kind: DecoderKind,
        generator: DMatrix<f64>,
        scale: f64,
        covering_radius: Option<f64>,
    ) -> Result<Self> {
        if generator.nrows() != generator.ncols() {
            return Err(Error::DimensionMismatch {
                expected: generator.nrows(),
                got: generator.ncols(),
            });
        }
        let n = generator.nrows();
        if n == 0 || n > 32 {
            return Err(Error::Config(format!("unsupported dimension {n}")));
        }
        let det = generator.determinant();
        let inverse = match generator.clone().try_inverse() {
            Some(inv) if det.abs() > 1e-12 => inv,
            _ => return Err(Error::SingularGenerator),
        };
        let lower_triangular = (0..n).all(|i| (i + 1..n).all(|j| generator[(i, j)] == 0.0))
            && (0..n).all(|i| generator[(i, i)] > 0.0);
        let enumerator = Enumerator::new(&generator);
        Ok(Lattice {
            name,
            kind,
            generator,
            inverse,
            scale,
            covering_radius,
            lower_triangular,
            enumerator,
            bw16_cosets: Vec::new(),
            min_norm: OnceLock::new(),
        })
    }

    /// The integer lattice Z^n.
    pub fn integer(n: usize) -> Result<Self> {
        let g = DMatrix::identity(n, n);
        Self::build(format!("z{n}"), DecoderKind::Zn, g, 1.0, Some((n as f64).sqrt() / 2.0))
    }

    /// Hexagonal lattice with unit minimal distance, generator
    /// `[[sqrt(3)/2, 0], [1/2, 1]]`.
    pub fn a2() -> Self {
        let s = 3f64.sqrt() / 2.0;
        let g = DMatrix::from_row_slice(2, 2, &[s, 0.0, 0.5, 1.0]);
        Self::build("a2".into(), DecoderKind::A2, g, 1.0, Some(1.0 / 3f64.sqrt()))
            .expect("A2 generator is valid")
    }

    /// Gosset lattice `D8 ∪ (D8 + 1/2)` with minimal squared norm 2, in its
    /// lower-triangular Hermite basis.
    pub fn e8() -> Self {
        let mut g = DMatrix::zeros(8, 8);
        for i in 0..8 {
            g[(i, 0)] = 0.5;
        }
        for j in 1..7 {
            g[(j, j)] = 1.0;
            g[(7, j)] = 1.0;
        }
        g[(7, 7)] = 2.0;
        Self::build("e8".into(), DecoderKind::E8, g, 1.0, Some(1.0)).expect("E8 generator is valid")
    }

    /// Barnes-Wall lattice `(RM(1,4) + 2 D16) / sqrt(2)`, minimal squared
    /// norm 4, in its lower-triangular Hermite basis.
    pub fn bw16() -> Self {
        let cosets = bw16_coset_leaders();
        let mut gens: Vec<Vec<i64>> = cosets[1..]
            .iter()
            .map(|c| c.iter().map(|&v| v as i64).collect())
            .collect();
        for i in 0..15 {
            let mut v = vec![0i64; 16];
            v[i] = 2;
            v[15] = 2;
            gens.push(v);
        }
        let mut v = vec![0i64; 16];
        v[15] = 4;
        gens.push(v);
        let cols = hermite_lower(&gens, 16);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let g = DMatrix::from_fn(16, 16, |i, j| cols[j][i] as f64 * inv_sqrt2);
        let mut lat = Self::build("bw16".into(), DecoderKind::Bw16, g, 1.0, Some(3f64.sqrt()))
            .expect("BW16 generator is valid");
        lat.bw16_cosets = cosets;
        lat
    }

    /// Resolve a lattice by name (`z<n>`, `a2`, `e8`, `bw16`) or, failing
    /// that, as a path to a whitespace-separated generator matrix file.
    pub fn by_name(spec: &str) -> Result<Self> {
        let lower = spec.trim().to_ascii_lowercase();
        match lower.as_str() {
            "a2" => return Ok(Self::a2()),
            "e8" => return Ok(Self::e8()),
            "bw16" => return Ok(Self::bw16()),
            _ => {}
        }
        if let Some(n) = lower.strip_prefix('z').and_then(|d| d.parse::<usize>().ok()) {
            return Self::integer(n);
        }
        let path = Path::new(spec.trim());
        if path.exists() {
            return Self::from_matrix_file(path);
        }
        Err(Error::UnknownLattice(spec.to_string()))
    }

    /// Parse a square generator matrix given as whitespace-separated rows.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn from_matrix_str(name: &str, text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::Parse("empty matrix".into()));
        }
        for r in &rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: r.len() });
            }
        }
        let g = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(name, g)
    }

    pub fn from_matrix_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_matrix_str(&path.display().to_string(), &text)
    }

    /// Same lattice scaled by `factor`, keeping its fast decoder.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if factor <= 0.0 || !factor.is_finite() {
            return Err(Error::Config(format!("scale factor {factor} must be positive")));
        }
        let mut lat = Self::build(
            format!("{}*{factor}", self.name),
            self.kind,
            &self.generator * factor,
            self.scale * factor,
            self.covering_radius.map(|r| r * factor),
        )?;
        lat.bw16_cosets = self.bw16_cosets.clone();
        Ok(lat)
    }

    /// Same point set, but decoded by generic enumeration. Used as an oracle.
    pub fn as_generic(&self) -> Self {
        let mut lat = self.clone();
        lat.kind = DecoderKind::SphereGeneric;
        lat
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.generator.nrows()
    }

    pub fn kind(&self) -> DecoderKind {
        self.kind
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn is_lower_triangular(&self) -> bool {
        self.lower_triangular
    }

    pub fn covering_radius(&self) -> Option<f64> {
        self.covering_radius
    }

    pub fn volume(&self) -> f64 {
        self.generator.determinant().abs()
    }

    /// Radius of the N-ball whose volume equals the fundamental volume.
    pub fn effective_radius(&self) -> f64 {
        let n = self.dimension() as f64;
        let log_r = (self.volume().ln() + ln_gamma(n / 2.0 + 1.0) - n / 2.0 * PI.ln()) / n;
        log_r.exp()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: len });
        }
        Ok(())
    }

    /// Closest lattice point to `y`.
    pub fn nearest_point(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y.len())?;
        let mut out = vec![0.0; y.len()];
        self.quantize_into(y, &mut out);
        Ok(out)
    }

    /// Allocation-free nearest-point decoding for hot loops. Both slices must
    /// have the lattice dimension.
    pub fn quantize_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.dimension());
        debug_assert_eq!(out.len(), self.dimension());
        let s = self.scale;
        match self.kind {
            DecoderKind::Zn => {
                for (o, &v) in out.iter_mut().zip(y) {
                    *o = s * (v / s - 0.5).ceil();
                }
            }
            DecoderKind::A2 => decode_a2(y, out, s),
            DecoderKind::E8 => decode_e8(y, out, s),
            DecoderKind::Bw16 => decode_bw16(&self.bw16_cosets, y, out, s),
            DecoderKind::SphereGeneric => {
                let b = self.enumerator.closest(y);
                self.point_into(&b, out);
            }
        }
    }

    /// `G b` for an integer vector `b`.
    pub fn point(&self, b: &[i64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        self.point_into(b, &mut out);
        out
    }

    fn point_into(&self, b: &[i64], out: &mut [f64]) {
        let n = self.dimension();
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.generator[(i, j)] * b[j] as f64;
            }
            out[i] = acc;
        }
    }

    /// `y mod Λ = y - Q(y)`, which lies in the Voronoi cell of the origin.
    pub fn mod_lattice(&self, y: &[f64]) -> Result<Vec<f64>> {
        let q = self.nearest_point(y)?;
        Ok(y.iter().zip(&q).map(|(a, b)| a - b).collect())
    }

    /// Successive rounding against a lower-triangular generator: the point
    /// `x` with `-g_ii/2 <= y_i - x_i < g_ii/2` for every coordinate.
    pub fn hypercube_quantize(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y.len())?;
        if !self.lower_triangular {
            return Err(Error::NotTriangular);
        }
        let b = self.hypercube_coordinates(y);
        Ok(self.point(&b))
    }

    pub(crate) fn hypercube_coordinates(&self, y: &[f64]) -> Vec<i64> {
        let n = self.dimension();
        let mut b = vec![0i64; n];
        for i in 0..n {
            let mut partial = 0.0;
            for j in 0..i {
                partial += self.generator[(i, j)] * b[j] as f64;
            }
            let g = self.generator[(i, i)];
            b[i] = ((y[i] - partial) / g + 0.5).floor() as i64;
        }
        b
    }

    /// `G^{-1} x` without rounding.
    pub fn coordinates(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok(self.coordinates_unchecked(x))
    }

    fn coordinates_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dimension();
        (0..n)
            .map(|i| (0..n).map(|j| self.inverse[(i, j)] * x[j]).sum())
            .collect()
    }

    /// Integer coordinates of a lattice point; fails if `x` is not in the
    /// lattice within [`INTEGER_TOL`].
    pub fn integer_coordinates(&self, x: &[f64]) -> Result<Vec<i64>> {
        self.check_dim(x.len())?;
        let mut out = vec![0i64; x.len()];
        self.integer_coordinates_into(x, &mut out)?;
        Ok(out)
    }

    pub(crate) fn integer_coordinates_into(&self, x: &[f64], out: &mut [i64]) -> Result<()> {
        let n = self.dimension();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.inverse[(i, j)] * x[j];
            }
            let r = acc.round();
            worst = worst.max((acc - r).abs());
            out[i] = r as i64;
        }
        if worst > INTEGER_TOL {
            return Err(Error::NotALatticePoint(worst));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && self.coordinates_unchecked(x).iter().all(|v| (v - v.round()).abs() <= INTEGER_TOL)
    }

    /// Integer coordinates of every lattice point within `radius` of
    /// `center`, paired with the squared distance.
    pub fn points_within(&self, center: &[f64], radius: f64, budget: usize) -> Result<Vec<(Vec<i64>, f64)>> {
        self.check_dim(center.len())?;
        self.enumerator.within(center, radius * radius, budget)
    }

    /// Smallest nonzero squared norm.
    pub fn min_norm(&self) -> f64 {
        *self.min_norm.get_or_init(|| {
            let n = self.dimension();
            let zero = vec![0.0; n];
            // Some basis vector bounds the minimum from above.
            let mut r2 = (0..n)
                .map(|j| self.generator.column(j).norm_squared())
                .fold(f64::INFINITY, f64::min);
            loop {
                let pts = self
                    .enumerator
                    .within(&zero, r2, ENUMERATION_BUDGET)
                    .expect("basis vector ball is enumerable");
                let m = pts
                    .iter()
                    .filter(|(b, _)| b.iter().any(|&v| v != 0))
                    .map(|(_, d)| *d)
                    .fold(f64::INFINITY, f64::min);
                if m.is_finite() {
                    return m;
                }
                r2 *= 2.0;
            }
        })
    }

    /// Half the minimal distance.
    pub fn packing_radius(&self) -> f64 {
        self.min_norm().sqrt() / 2.0
    }

    /// All lattice vectors of minimal nonzero norm.
    pub fn kissing_set(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.min_norm();
        let zero = vec![0.0; self.dimension()];
        let pts = self.enumerator.within(&zero, m * (1.0 + 1e-9), ENUMERATION_BUDGET)?;
        Ok(pts
            .into_iter()
            .filter(|(b, _)| b.iter().any(|&v| v != 0))
            .map(|(b, _)| self.point(&b))
            .collect())
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Conway-Sloane D_n decoder: round everything, and if the coordinate sum is
/// odd re-round the worst coordinate the other way.
fn decode_dn(y: &[f64], out: &mut [f64]) {
    let mut parity = 0i64;
    let mut worst = 0;
    let mut worst_gap = -1.0;
    for (i, (&v, o)) in y.iter().zip(out.iter_mut()).enumerate() {
        let r = v.round();
        *o = r;
        parity += r as i64;
        let gap = (v - r).abs();
        if gap > worst_gap {
            worst_gap = gap;
            worst = i;
        }
    }
    if parity.rem_euclid(2) == 1 {
        out[worst] += if y[worst] > out[worst] { 1.0 } else { -1.0 };
    }
}

fn decode_e8(y: &[f64], out: &mut [f64], scale: f64) {
    let mut u = [0.0; 8];
    let mut shifted = [0.0; 8];
    for i in 0..8 {
        u[i] = y[i] / scale;
        shifted[i] = u[i] - 0.5;
    }
    let mut p0 = [0.0; 8];
    let mut p1 = [0.0; 8];
    decode_dn(&u, &mut p0);
    decode_dn(&shifted, &mut p1);
    for v in p1.iter_mut() {
        *v += 0.5;
    }
    let best = if sq_dist(&u, &p1) < sq_dist(&u, &p0) { &p1 } else { &p0 };
    for i in 0..8 {
        out[i] = best[i] * scale;
    }
}

fn decode_a2(y: &[f64], out: &mut [f64], scale: f64) {
    // Two rectangular cosets: (sqrt3 m, n) and (sqrt3 m, n) + (sqrt3/2, 1/2).
    let s3 = 3f64.sqrt();
    let u = [y[0] / scale, y[1] / scale];
    let p0 = [s3 * (u[0] / s3).round(), u[1].round()];
    let p1 = [
        s3 * ((u[0] - s3 / 2.0) / s3).round() + s3 / 2.0,
        (u[1] - 0.5).round() + 0.5,
    ];
    let best = if sq_dist(&u, &p1) < sq_dist(&u, &p0) { p1 } else { p0 };
    out[0] = best[0] * scale;
    out[1] = best[1] * scale;
}

fn decode_bw16(cosets: &[[f64; 16]], y: &[f64], out: &mut [f64], scale: f64) {
    let k = std::f64::consts::SQRT_2 / scale;
    let mut u = [0.0; 16];
    for i in 0..16 {
        u[i] = y[i] * k;
    }
    let mut t = [0.0; 16];
    let mut d = [0.0; 16];
    let mut best = [0.0; 16];
    let mut best_d = f64::INFINITY;
    for c in cosets {
        for i in 0..16 {
            t[i] = (u[i] - c[i]) * 0.5;
        }
        decode_dn(&t, &mut d);
        let mut dist = 0.0;
        for i in 0..16 {
            let v = c[i] + 2.0 * d[i];
            let e = u[i] - v;
            dist += e * e;
        }
        if dist < best_d {
            best_d = dist;
            for i in 0..16 {
                best[i] = c[i] + 2.0 * d[i];
            }
        }
    }
    for i in 0..16 {
        out[i] = best[i] / k;
    }
}

/// The 32 codewords of RM(1,4) under [`BW16_LABELS`], zero word first.
fn bw16_coset_leaders() -> Vec<[f64; 16]> {
    let mut rows = vec![[1u8; 16]];
    for bit in 0..4 {
        let mut r = [0u8; 16];
        for (p, &label) in BW16_LABELS.iter().enumerate() {
            r[p] = (label >> bit) & 1;
        }
        rows.push(r);
    }
    (0..32u32)
        .map(|mask| {
            let mut w = [0.0; 16];
            for (k, r) in rows.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    for p in 0..16 {
                        w[p] = ((w[p] as u8) ^ r[p]) as f64;
                    }
                }
            }
            w
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
    }

    #[test]
    fn z2_rounding() {
        let z = Lattice::integer(2).unwrap();
        assert_eq!(z.nearest_point(&[0.4, -0.6]).unwrap(), vec![0.0, -1.0]);
    }

    #[test]
    fn zn_ties_go_down() {
        let z = Lattice::integer(2).unwrap();
        assert_eq!(z.nearest_point(&[0.5, -0.5]).unwrap(), vec![0.0, -1.0]);
        assert_eq!(z.as_generic().nearest_point(&[0.5, -0.5]).unwrap(), vec![0.0, -1.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let e8 = Lattice::e8();
        assert!(matches!(
            e8.nearest_point(&[0.0; 7]),
            Err(Error::DimensionMismatch { expected: 8, got: 7 })
        ));
    }

    #[test]
    fn mod_z1() {
        let z = Lattice::integer(1).unwrap();
        assert!((z.mod_lattice(&[2.3]).unwrap()[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn diagonal_hypercube() {
        let lat = Lattice::new("d", DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0])).unwrap();
        assert_eq!(lat.hypercube_quantize(&[0.9, -1.1]).unwrap(), vec![0.0, -2.0]);
    }

    #[test]
    fn hypercube_rejects_upper_triangular() {
        let lat = Lattice::new("u", DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).unwrap();
        assert!(matches!(lat.hypercube_quantize(&[0.0, 0.0]), Err(Error::NotTriangular)));
    }

    #[test]
    fn a2_hypercube_box() {
        let a2 = Lattice::a2();
        let g = a2.generator().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let y = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let x = a2.hypercube_quantize(&y).unwrap();
            for i in 0..2 {
                let half = g[(i, i)] / 2.0;
                assert!(-half + x[i] <= y[i] + 1e-12 && y[i] < half + x[i] + 1e-12);
            }
            assert!(a2.contains(&x));
        }
    }

    #[test]
    fn singular_generator_rejected() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(Lattice::new("s", g), Err(Error::SingularGenerator)));
    }

    #[test]
    fn effective_radius_examples() {
        let z1 = Lattice::integer(1).unwrap();
        assert!((z1.effective_radius() - 0.5).abs() < 1e-12);
        let g = DMatrix::from_row_slice(2, 2, &[PI.sqrt(), 0.0, 0.0, PI.sqrt()]);
        let lat = Lattice::new("pi", g).unwrap();
        assert!((lat.effective_radius() - 1.0).abs() < 1e-12);
        let e8 = Lattice::e8();
        assert!((e8.volume() - 1.0).abs() < 1e-12);
        let expected = (24.0 / PI.powi(4)).powf(1.0 / 8.0);
        assert!((e8.effective_radius() - expected).abs() < 1e-12);
    }

    #[test]
    fn effective_ball_volume_by_monte_carlo() {
        // Independent check of the ball-volume formula: hit-or-miss in the
        // cube [-r, r]^8 should give V = 1 for E8's effective radius.
        let r = Lattice::e8().effective_radius();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 400_000;
        let mut hits = 0;
        for _ in 0..n {
            let mut s = 0.0;
            for _ in 0..8 {
                let v: f64 = rng.random_range(-r..r);
                s += v * v;
            }
            if s <= r * r {
                hits += 1;
            }
        }
        let vol = hits as f64 / n as f64 * (2.0 * r).powi(8);
        assert!((vol - 1.0).abs() < 0.05, "volume {vol}");
    }

    #[test]
    fn kissing_numbers() {
        assert_eq!(Lattice::integer(2).unwrap().kissing_set().unwrap().len(), 4);
        assert_eq!(Lattice::a2().kissing_set().unwrap().len(), 6);
        let e8 = Lattice::e8();
        let k = e8.kissing_set().unwrap();
        assert_eq!(k.len(), 240);
        assert!((e8.min_norm() - 2.0).abs() < 1e-12);
        for v in &k {
            assert!((v.iter().map(|x| x * x).sum::<f64>() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bw16_geometry() {
        let bw = Lattice::bw16();
        assert!(bw.is_lower_triangular());
        assert!((bw.volume() - 16.0).abs() < 1e-9);
        assert!((bw.min_norm() - 4.0).abs() < 1e-9);
        assert_eq!(bw.kissing_set().unwrap().len(), 4320);
        assert_eq!(bw.bw16_cosets.len(), 32);
        // every coset leader is a lattice point
        for c in &bw.bw16_cosets {
            let x: Vec<f64> = c.iter().map(|v| v * std::f64::consts::FRAC_1_SQRT_2).collect();
            assert!(bw.contains(&x));
        }
    }

    #[test]
    fn e8_basis_is_hermite_form() {
        let e8 = Lattice::e8();
        assert!(e8.is_lower_triangular());
        let d: Vec<f64> = (0..8).map(|i| e8.generator()[(i, i)]).collect();
        assert_eq!(d, vec![0.5, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn builtin_decoders_fix_lattice_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for lat in [Lattice::a2(), Lattice::e8(), Lattice::bw16(), Lattice::integer(3).unwrap()] {
            for _ in 0..200 {
                let b: Vec<i64> = (0..lat.dimension()).map(|_| rng.random_range(-6..=6)).collect();
                let x = lat.point(&b);
                assert!(close(&lat.nearest_point(&x).unwrap(), &x));
                assert_eq!(lat.integer_coordinates(&x).unwrap(), b);
            }
        }
    }

    #[test]
    fn scaled_lattice_keeps_fast_decoder() {
        let e8 = Lattice::e8().scaled(0.5).unwrap();
        assert_eq!(e8.kind(), DecoderKind::E8);
        assert!((e8.min_norm() - 0.5).abs() < 1e-12);
        let y = [0.1, 0.2, -0.3, 0.4, 0.05, -0.2, 0.3, 0.1];
        let a = e8.nearest_point(&y).unwrap();
        let b = e8.as_generic().nearest_point(&y).unwrap();
        assert!((sq_dist(&a, &y) - sq_dist(&b, &y)).abs() < 1e-12);
    }

    #[test]
    fn generic_decoder_matches_ball_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let e8 = Lattice::e8().as_generic();
        for _ in 0..500 {
            let y: Vec<f64> = (0..8).map(|_| rng.random_range(-0.6..0.6)).collect();
            let x = e8.nearest_point(&y).unwrap();
            let best = e8
                .points_within(&y, 1.5, 1 << 16)
                .unwrap()
                .into_iter()
                .map(|(_, d)| d)
                .fold(f64::INFINITY, f64::min);
            assert!((sq_dist(&x, &y) - best).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_file_round_trip() {
        let lat = Lattice::from_matrix_str("m", "# comment\n2 0\n1 1\n").unwrap();
        assert_eq!(lat.kind(), DecoderKind::SphereGeneric);
        assert!(lat.contains(&[4.0, 3.0]));
        assert!(!lat.contains(&[1.0, 0.0]));
        assert!(Lattice::from_matrix_str("m", "1 0\n1").is_err());
        assert!(matches!(Lattice::by_name("nope"), Err(Error::UnknownLattice(_))));
        assert_eq!(Lattice::by_name("Z4").unwrap().dimension(), 4);
    }
}
