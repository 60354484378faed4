//! Schnorr-Euchner enumeration on the R factor of a QR decomposition.
//!
//! Used both as the exact decoder for arbitrary generators and as the
//! oracle the specialized decoders are tested against.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct Enumerator {
    n: usize,
    /// Upper triangular R, row-major.
    r: Vec<f64>,
    qt: DMatrix<f64>,
}

impl Enumerator {
    pub(crate) fn new(generator: &DMatrix<f64>) -> Self {
        let n = generator.nrows();
        let qr = generator.clone().qr();
        let r_mat = qr.r();
        let qt = qr.q().transpose();
        let mut r = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                r[i * n + j] = r_mat[(i, j)];
            }
        }
        Enumerator { n, r, qt }
    }

    fn rotate(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for j in 0..self.n {
                acc += self.qt[(i, j)] * y[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Integer coordinates of the lattice point closest to `y`. Exact up to
    /// floating point; equal-distance ties go to the lexicographically
    /// smallest coordinate vector.
    pub(crate) fn closest(&self, y: &[f64]) -> Vec<i64> {
        let ybar = self.rotate(y);
        let mut s = Search {
            n: self.n,
            r: &self.r,
            ybar: &ybar,
            b: vec![0; self.n],
            mode: Mode::Closest {
                best: vec![0; self.n],
                best_d: f64::INFINITY,
            },
        };
        s.descend(self.n - 1, 0.0);
        match s.mode {
            Mode::Closest { best, .. } => best,
            Mode::Within { .. } => unreachable!(),
        }
    }

    /// All integer coordinate vectors whose point lies within squared
    /// distance `radius2` of `y`, with their squared distances.
    pub(crate) fn within(
        &self,
        y: &[f64],
        radius2: f64,
        budget: usize,
    ) -> Result<Vec<(Vec<i64>, f64)>> {
        let ybar = self.rotate(y);
        let mut s = Search {
            n: self.n,
            r: &self.r,
            ybar: &ybar,
            b: vec![0; self.n],
            mode: Mode::Within {
                radius2,
                budget,
                found: Vec::new(),
                overflow: false,
            },
        };
        s.descend(self.n - 1, 0.0);
        match s.mode {
            Mode::Within { overflow: true, .. } => Err(Error::EnumerationBudget(budget)),
            Mode::Within { found, .. } => Ok(found),
            Mode::Closest { .. } => unreachable!(),
        }
    }
}

enum Mode {
    Closest {
        best: Vec<i64>,
        best_d: f64,
    },
    Within {
        radius2: f64,
        budget: usize,
        found: Vec<(Vec<i64>, f64)>,
        overflow: bool,
    },
}

struct Search<'a> {
    n: usize,
    r: &'a [f64],
    ybar: &'a [f64],
    b: Vec<i64>,
    mode: Mode,
}

fn tie_tol(d: f64) -> f64 {
    1e-10 * (1.0 + d)
}

impl Search<'_> {
    fn bound(&self) -> f64 {
        match &self.mode {
            Mode::Closest { best_d, .. } => {
                if best_d.is_finite() {
                    best_d + tie_tol(*best_d)
                } else {
                    f64::INFINITY
                }
            }
            Mode::Within { radius2, overflow, .. } => {
                if *overflow {
                    f64::NEG_INFINITY
                } else {
                    radius2 + tie_tol(*radius2)
                }
            }
        }
    }

    fn leaf(&mut self, d: f64) {
        match &mut self.mode {
            Mode::Closest { best, best_d } => {
                // The first leaf always wins; `inf - inf` would make it lose.
                let better = !best_d.is_finite()
                    || d < *best_d - tie_tol(*best_d)
                    || (d <= *best_d + tie_tol(*best_d) && self.b < *best);
                if better {
                    best.copy_from_slice(&self.b);
                    *best_d = d;
                }
            }
            Mode::Within { budget, found, overflow, .. } => {
                if found.len() >= *budget {
                    *overflow = true;
                } else {
                    found.push((self.b.clone(), d));
                }
            }
        }
    }

    fn descend(&mut self, i: usize, partial: f64) {
        let n = self.n;
        let diag = self.r[i * n + i];
        let mut acc = self.ybar[i];
        for j in i + 1..n {
            acc -= self.r[i * n + j] * self.b[j] as f64;
        }
        let center = acc / diag;
        let start = center.round();
        let dir = if center >= start { 1.0 } else { -1.0 };
        let mut k = 0i64;
        loop {
            // zig-zag around the center: start, start+dir, start-dir, ...
            let offset = if k % 2 == 0 { -(k / 2) as f64 } else { (k / 2 + 1) as f64 };
            let x = start + dir * offset;
            let e = diag * (x - center);
            let d = partial + e * e;
            if d > self.bound() {
                break;
            }
            self.b[i] = x as i64;
            if i == 0 {
                self.leaf(d);
            } else {
                self.descend(i - 1, d);
            }
            k += 1;
        }
    }
}
