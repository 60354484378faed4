//! Lower bound and effective-sphere estimate on the word error rate of a
//! genie that may try every receive scaling.
//!
//! A transmitted point `x` is recoverable by some scaling exactly when the
//! line through the origin and `y` meets the Voronoi cell of `x`. Replacing
//! the cell by the covering sphere gives a double cone that contains every
//! decodable `y`, and the Gaussian mass outside that cone reduces to a single
//! integral along the cone axis.

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

/// Tail truncation of the axis integral, in noise standard deviations.
const TAIL_SIGMAS: f64 = 12.0;
const REL_TOL: f64 = 1e-8;
const MAX_INTERVALS: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundInput {
    pub dimension: usize,
    /// Per-dimension message power.
    pub power: f64,
    /// Per-dimension noise variance.
    pub noise_var: f64,
    /// Sphere radius around the transmitted point.
    pub radius: f64,
}

impl BoundInput {
    pub fn new(dimension: usize, power: f64, noise_var: f64, radius: f64) -> Result<Self> {
        let input = BoundInput { dimension, power, noise_var, radius };
        input.validate()?;
        Ok(input)
    }

    fn validate(&self) -> Result<()> {
        if self.dimension < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: self.dimension });
        }
        let limit = self.dimension as f64 * self.power;
        let radius2 = self.radius * self.radius;
        if !(radius2 < limit) || self.radius <= 0.0 {
            return Err(Error::ConeRestriction { radius2, limit });
        }
        Ok(())
    }

    /// Distance from the cone axis to its surface at axial noise offset `z`.
    fn cone_width(&self, z: f64) -> f64 {
        let energy = self.dimension as f64 * self.power;
        let slack = energy - self.radius * self.radius;
        (self.radius * (z + energy.sqrt()) / slack.sqrt()).abs()
    }
}

/// Probability that the `m`-dimensional noise component orthogonal to the
/// axis leaves a ball of squared radius `2σ²t`, with `m = N − 1`.
pub(crate) fn orthogonal_escape(dimension: usize, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let ln_t = t.ln();
    if dimension % 2 == 1 {
        // Even number of orthogonal components: Poisson partial sum.
        let mut term = (-t).exp();
        let mut sum = term;
        for k in 1..=(dimension - 3) / 2 {
            term *= t / k as f64;
            sum += term;
        }
        sum.min(1.0)
    } else {
        let mut sum = erfc(t.sqrt());
        for k in 1..=(dimension - 2) / 2 {
            let half = k as f64 - 0.5;
            sum += (half * ln_t - t - ln_gamma(half + 1.0)).exp();
        }
        sum.min(1.0)
    }
}

/// Gaussian mass outside the double cone spanned by the sphere of the given
/// radius around a point of power `N·P_x`. With the covering radius this is
/// a strict lower bound on the genie word error rate.
pub fn cone_bound(input: &BoundInput) -> Result<f64> {
    input.validate()?;
    let sigma = input.noise_var.sqrt();
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * input.noise_var).sqrt();
    let integrand = |z: f64| {
        let f = input.cone_width(z);
        let t = f * f / (2.0 * input.noise_var);
        norm * (-z * z / (2.0 * input.noise_var)).exp() * orthogonal_escape(input.dimension, t)
    };
    let value = integrate(integrand, -TAIL_SIGMAS * sigma, TAIL_SIGMAS * sigma)?;
    Ok(value.clamp(0.0, 1.0))
}

/// Same integral with the effective radius of `lattice`.
pub fn effective_estimate(dimension: usize, power: f64, noise_var: f64, lattice: &Lattice) -> Result<f64> {
    if lattice.dimension() != dimension {
        return Err(Error::DimensionMismatch { expected: lattice.dimension(), got: dimension });
    }
    cone_bound(&BoundInput::new(dimension, power, noise_var, lattice.effective_radius())?)
}

/// Whether the line through the origin and `y` meets the ball of `radius`
/// around `x`.
pub fn cone_membership(y: &[f64], x: &[f64], radius: f64) -> Result<bool> {
    if y.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let xx: f64 = x.iter().map(|v| v * v).sum();
    if xx == 0.0 {
        return Err(Error::InvalidCode("cone apex coincides with the centre".into()));
    }
    let yy: f64 = y.iter().map(|v| v * v).sum();
    if yy == 0.0 {
        return Ok(false);
    }
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let dist2 = xx - xy * xy / yy;
    Ok(dist2 <= radius * radius)
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const KRONROD_NODES: [f64; 8] = [
    0.991455371120812639,
    0.949107912342758525,
    0.864864423359769073,
    0.741531185599394440,
    0.586087235467691130,
    0.405845151377397167,
    0.207784955007898468,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022935322010529225,
    0.063092092629978553,
    0.104790010322250184,
    0.140653259715525919,
    0.169004726639267903,
    0.190350578064785410,
    0.204432940075298892,
    0.209482141084727828,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129484966168869693,
    0.279705391489276668,
    0.381830050505118945,
    0.417959183673469388,
];

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let center = f(mid);
    let mut k = KRONROD_WEIGHTS[7] * center;
    let mut g = GAUSS_WEIGHTS[3] * center;
    for i in 0..7 {
        let dx = half * KRONROD_NODES[i];
        let pair = f(mid - dx) + f(mid + dx);
        k += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            g += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (k * half, ((k - g) * half).abs())
}

/// Globally adaptive bisection: always split the interval with the largest
/// error estimate until the total falls under the relative tolerance.
pub(crate) fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    let mut parts: Vec<(f64, f64, f64, f64)> = Vec::new();
    for i in 0..16 {
        let lo = a + (b - a) * i as f64 / 16.0;
        let hi = a + (b - a) * (i + 1) as f64 / 16.0;
        let (v, e) = kronrod(&f, lo, hi);
        parts.push((lo, hi, v, e));
    }
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= REL_TOL * total.abs() || err < 1e-300 {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(err));
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod(&f, lo, mid);
        let (v2, e2) = kronrod(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}
