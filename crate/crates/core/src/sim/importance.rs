//! Importance sampling of Gaussian noise for rare decoding errors.
//!
//! The proposal is a defensive mixture: with probability `plain` the noise
//! is drawn as usual, otherwise it is centred on one of a set of shifts
//! picked uniformly. Every draw carries the likelihood ratio, so weighted
//! averages are unbiased for the plain channel and weights never exceed
//! `1 / plain`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Clone, Debug)]
pub struct ShiftedNoise {
    noise_var: f64,
    shifts: Vec<Vec<f64>>,
    plain: f64,
}

impl ShiftedNoise {
    /// Ordinary noise, every weight one.
    pub fn plain(noise_var: f64) -> Self {
        ShiftedNoise { noise_var, shifts: Vec::new(), plain: 1.0 }
    }

    /// Mixture centred on `scale · p` for each `p` in `points`.
    pub fn toward(points: &[Vec<f64>], scale: f64, noise_var: f64, plain: f64) -> Self {
        let shifts = points.iter().map(|p| p.iter().map(|v| v * scale).collect()).collect();
        let plain = if points.is_empty() { 1.0 } else { plain.clamp(1e-6, 1.0) };
        ShiftedNoise { noise_var, shifts, plain }
    }

    /// Fill `z` with a draw and return its weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64]) -> f64 {
        let sigma = self.noise_var.sqrt();
        for v in z.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *v = sigma * g;
        }
        if self.shifts.is_empty() || self.plain >= 1.0 {
            return 1.0;
        }
        if rng.random::<f64>() >= self.plain {
            let pick = rng.random_range(0..self.shifts.len());
            for (v, m) in z.iter_mut().zip(&self.shifts[pick]) {
                *v += m;
            }
        }
        self.weight(z)
    }

    /// Plain density over mixture density at `z`.
    pub fn weight(&self, z: &[f64]) -> f64 {
        if self.shifts.is_empty() || self.plain >= 1.0 {
            return 1.0;
        }
        // log of φ(z − μ)/φ(z) = (z·μ − ‖μ‖²/2)/σ².
        let exps: Vec<f64> = self
            .shifts
            .iter()
            .map(|m| {
                let zm: f64 = z.iter().zip(m).map(|(a, b)| a * b).sum();
                let mm: f64 = m.iter().map(|b| b * b).sum();
                (zm - 0.5 * mm) / self.noise_var
            })
            .collect();
        let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = exps.iter().map(|e| (e - top).exp()).sum::<f64>() / exps.len() as f64;
        let log_mix = top + mean.ln();
        // 1 / (β + (1 − β)·exp(log_mix)), evaluated without overflow.
        let shifted = (1.0 - self.plain).ln() + log_mix;
        if shifted > 0.0 {
            (-shifted).exp() / (self.plain * (-shifted).exp() + 1.0)
        } else {
            1.0 / (self.plain + shifted.exp())
        }
    }
}
