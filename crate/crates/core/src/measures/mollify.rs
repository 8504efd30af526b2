//! Mollification of grid measures.
//!
//! A grid measure has a piecewise-constant density `ρ` with jumps at cell
//! boundaries `b_i = i·h`. Convolving with the scaled bump `φ_ε` gives
//!
//! ```text
//!   (μ * φ_ε)(x) = ρ(x - ε) + Σ_{x-ε < b_i < x+ε} J_i · Φ((x - b_i)/ε),
//! ```
//!
//! where `J_i` is the density jump across `b_i` and `Φ` is the bump CDF:
//! boundaries to the left of the window contribute their full jump,
//! boundaries to the right contribute nothing, and the finitely many
//! boundaries inside the window contribute a partial jump. The evaluation
//! is exact (to rounding and the ~1e-14 CDF table error); its cost is the
//! number of cell boundaries inside the `2ε` window.

use crate::measures::cutoff::BumpCdf;
use crate::measures::GridMeasure;
use crate::{Error, Result};

/// A grid measure convolved with `φ_ε`, evaluated through its exact jump
/// profile.
#[derive(Debug, Clone)]
pub struct Mollified {
    eps: f64,
    h: f64,
    /// Density of the unmollified measure on cell `i` (`w_i / h`).
    densities: Vec<f64>,
    cdf: BumpCdf,
    total: f64,
}

/// Convolve `mu` with the standard bump at scale `eps`.
pub fn mollify(mu: &GridMeasure, eps: f64) -> Result<Mollified> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "mollification scale must be positive, got {}",
            eps
        )));
    }
    let h = mu.params().cell_width();
    let densities = mu.weights().iter().map(|w| w / h).collect();
    Ok(Mollified {
        eps,
        h,
        densities,
        cdf: BumpCdf::new(),
        total: mu.total(),
    })
}

impl Mollified {
    #[inline]
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Total mass (mollification preserves it).
    #[inline]
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Density of the unmollified measure at `x` (step function,
    /// right-continuous, zero outside `[0, 1)`).
    #[inline]
    fn step_density(&self, x: f64) -> f64 {
        if !(0.0..1.0).contains(&x) {
            return 0.0;
        }
        let i = (x / self.h) as usize;
        self.densities[i.min(self.densities.len() - 1)]
    }

    #[inline]
    fn density_at_cell(&self, i: i64) -> f64 {
        if i < 0 || i as usize >= self.densities.len() {
            0.0
        } else {
            self.densities[i as usize]
        }
    }

    /// `(μ * φ_ε)(x)`.
    pub fn density(&self, x: f64) -> f64 {
        let lo = x - self.eps;
        let hi = x + self.eps;
        if hi <= 0.0 || lo >= 1.0 {
            return 0.0;
        }
        // Everything fully to the left of the window.
        let mut acc = self.step_density(lo);
        // Boundaries strictly inside the window. (A boundary landing within
        // an ulp of a window edge is harmless either way: the bump vanishes
        // to all orders at ±1, so Φ is flat there.)
        let n = self.densities.len() as i64;
        let first = if lo < 0.0 {
            0
        } else {
            (lo / self.h).floor() as i64 + 1
        };
        let last = ((hi / self.h).ceil() as i64 - 1).min(n);
        for i in first..=last {
            let jump = self.density_at_cell(i) - self.density_at_cell(i - 1);
            if jump != 0.0 {
                let b = i as f64 * self.h;
                acc += jump * self.cdf.eval((x - b) / self.eps);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::GridParams;
    use crate::generators::SplitMix64;
    use crate::measures::cutoff::SmoothBump;
    use crate::quad::{adaptive, QuadOpts};

    fn measure(n: u32, l: u32, weights: Vec<f64>) -> GridMeasure {
        GridMeasure::new(GridParams::new(n, l).unwrap(), weights).unwrap()
    }

    #[test]
    fn uniform_measure_plateau_and_edges() {
        let mu = GridMeasure::uniform(GridParams::new(1, 6).unwrap());
        let m = mollify(&mu, 0.125).unwrap();
        // Far from the endpoints the density is exactly 1 (no table reads).
        assert_eq!(m.density(0.5), 1.0);
        assert_eq!(m.density(0.2), 1.0);
        // At the endpoints the bump is half inside.
        assert!((m.density(0.0) - 0.5).abs() < 1e-13);
        assert!((m.density(1.0) - 0.5).abs() < 1e-13);
        // Outside the enlarged support it vanishes identically.
        assert_eq!(m.density(-0.2), 0.0);
        assert_eq!(m.density(1.13), 0.0);
    }

    #[test]
    fn matches_direct_convolution() {
        let mut rng = SplitMix64::new(8181);
        let weights: Vec<f64> = (0..16).map(|_| rng.next_unit()).collect();
        let mu = measure(1, 4, weights);
        let bump = SmoothBump::new();
        for &eps in &[0.07, 0.031, 0.5] {
            let m = mollify(&mu, eps).unwrap();
            for &x in &[0.0, 0.111, 0.25, 0.4999, 0.77, 0.9, 1.02] {
                // Direct quadrature of ∫ φ_ε(x - y) ρ(y) dy with panel
                // breaks at the cell boundaries.
                let breaks: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
                let direct = adaptive(
                    |y| {
                        let i = (y * 16.0).floor().clamp(0.0, 15.0) as usize;
                        bump.eval_scaled(eps, x - y) * mu.weight(i as u64) * 16.0
                    },
                    (x - eps).max(0.0),
                    (x + eps).min(1.0),
                    &breaks,
                    QuadOpts::with_tol(1e-13),
                )
                .unwrap();
                assert!(
                    (m.density(x) - direct).abs() < 1e-10,
                    "eps = {}, x = {}: {} vs {}",
                    eps,
                    x,
                    m.density(x),
                    direct
                );
            }
        }
    }

    #[test]
    fn single_cell_closed_form() {
        // All mass in cell [1/4, 5/16): the mollified density is the
        // difference of two CDF reads.
        let mut w = vec![0.0; 16];
        w[4] = 1.0;
        let mu = measure(1, 4, w);
        let eps = 0.09;
        let m = mollify(&mu, eps).unwrap();
        let cdf = BumpCdf::new();
        let (a, b, h) = (0.25, 0.3125, 1.0 / 16.0);
        for &x in &[0.2, 0.26, 0.3, 0.35, 0.45] {
            let expect = (cdf.eval((x - a) / eps) - cdf.eval((x - b) / eps)) / h;
            assert!(
                (m.density(x) - expect).abs() < 1e-12,
                "x = {}: {} vs {}",
                x,
                m.density(x),
                expect
            );
        }
    }

    #[test]
    fn mass_is_preserved() {
        let mut rng = SplitMix64::new(515);
        let weights: Vec<f64> = (0..32).map(|_| rng.next_unit() * 0.1).collect();
        let mu = measure(1, 5, weights);
        let expect = mu.total();
        for &eps in &[0.011, 0.26] {
            let m = mollify(&mu, eps).unwrap();
            let breaks: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
            let mass = adaptive(
                |x| m.density(x),
                -eps,
                1.0 + eps,
                &breaks,
                QuadOpts::with_tol(1e-12),
            )
            .unwrap();
            assert!(
                (mass - expect).abs() < 1e-10,
                "eps = {}: {} vs {}",
                eps,
                mass,
                expect
            );
        }
    }

    #[test]
    fn rejects_bad_scale() {
        let mu = GridMeasure::uniform(GridParams::new(1, 3).unwrap());
        assert!(mollify(&mu, 0.0).is_err());
        assert!(mollify(&mu, -0.5).is_err());
        assert!(mollify(&mu, f64::NAN).is_err());
    }
}
