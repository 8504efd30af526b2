//! Measures with piecewise-constant density on a dyadic grid.
//!
//! A [`GridMeasure`] assigns a nonnegative weight (mass) to every finest
//! cell of a [`GridParams`] grid. Its Fourier transform has an exact closed
//! form: a cell `[a, a + w)` carrying mass `m` contributes
//!
//! ```text
//!   m * exp(-2πi ξ (a + w/2)) * sinc(π ξ w),
//! ```
//!
//! so there is no sampling error anywhere on the frequency side. On uniform
//! frequency grids `ξ = m / S` the cell sum collapses to a zero-padded DFT
//! of the weight vector, which [`MeasureSpectrum`] evaluates once with an
//! FFT and then serves in O(1) per frequency — still the exact closed form,
//! just grouped differently.

use crate::dyadic::{DyadicInterval, DyadicSet, GridParams};
use crate::report::fmt_g17;
use crate::util::neumaier_sum;
use crate::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::io::{BufReader, Read, Write};
use std::path::Path;

pub type C64 = Complex<f64>;

/// `sin(x)/x` with the removable singularity filled in.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// A nonnegative measure with constant density on each finest-level cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    params: GridParams,
    weights: Vec<f64>,
}

impl GridMeasure {
    pub fn new(params: GridParams, weights: Vec<f64>) -> Result<Self> {
        if weights.len() as u64 != params.cell_count() {
            return Err(Error::InvalidParams(format!(
                "weight vector has {} cells, grid needs {}",
                weights.len(),
                params.cell_count()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParams(
                "weights must be finite and nonnegative".into(),
            ));
        }
        Ok(GridMeasure { params, weights })
    }

    /// The uniform probability measure on `[0, 1]`.
    pub fn uniform(params: GridParams) -> Self {
        let n = params.cell_count();
        GridMeasure {
            params,
            weights: vec![1.0 / n as f64; n as usize],
        }
    }

    /// Uniform probability measure on the occupied cells of a set.
    pub fn uniform_on_set(set: &DyadicSet) -> Result<Self> {
        let occ = set.occupied_count();
        if occ == 0 {
            return Err(Error::EmptySet("cannot normalize a measure on it"));
        }
        let w = 1.0 / occ as f64;
        let weights = (0..set.cell_count())
            .map(|i| if set.is_occupied(i) { w } else { 0.0 })
            .collect();
        Ok(GridMeasure {
            params: set.params(),
            weights,
        })
    }

    #[inline]
    pub fn params(&self) -> GridParams {
        self.params
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, index: u64) -> f64 {
        self.weights[index as usize]
    }

    /// Total mass, compensated.
    pub fn total(&self) -> f64 {
        neumaier_sum(self.weights.iter().copied())
    }

    /// Mass of the dyadic cell `q` (exact subtree sum, pairwise association
    /// so the rounding error stays at `O(depth)` ulps).
    pub fn cube_mass(&self, q: &DyadicInterval) -> f64 {
        let steps = self.params.l() - q.level;
        let first = (q.index << (self.params.n() * steps)) as usize;
        let count = 1usize << (self.params.n() * steps);
        pairwise_sum(&self.weights[first..first + count])
    }

    /// Masses of all cells at all levels `0..=L`, built bottom-up so that
    /// `out[j][k]` is the pairwise-tree sum over the subtree of `Q(j, k)`.
    pub fn cube_masses(&self) -> Vec<Vec<f64>> {
        let l = self.params.l();
        let fan = 1usize << self.params.n();
        let mut levels: Vec<Vec<f64>> = Vec::with_capacity(l as usize + 1);
        levels.push(self.weights.clone());
        for _ in 0..l {
            let prev = levels.last().unwrap();
            let mut cur = vec![0.0; prev.len() / fan];
            for (k, slot) in cur.iter_mut().enumerate() {
                let mut acc = 0.0;
                for c in 0..fan {
                    acc += prev[k * fan + c];
                }
                *slot = acc;
            }
            levels.push(cur);
        }
        levels.reverse(); // levels[j] = masses at level j
        levels
    }

    /// Is the support contained in the occupied cells of `set`?
    pub fn supported_on(&self, set: &DyadicSet) -> bool {
        self.params == set.params()
            && self
                .weights
                .iter()
                .enumerate()
                .all(|(i, &w)| w == 0.0 || set.is_occupied(i as u64))
    }

    /// Restrict to the cell `q`, transport onto `[0, 1)` and normalize to a
    /// probability measure. Fails with `ZeroMass` when `q` carries nothing.
    pub fn restrict_rescale_normalize(&self, q: &DyadicInterval) -> Result<GridMeasure> {
        let steps = self.params.l() - q.level;
        let first = (q.index << (self.params.n() * steps)) as usize;
        let count = 1usize << (self.params.n() * steps);
        let slice = &self.weights[first..first + count];
        let mass = neumaier_sum(slice.iter().copied());
        if mass <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let weights: Vec<f64> = slice.iter().map(|w| w / mass).collect();
        Ok(GridMeasure {
            params: GridParams::from_raw(self.params.n(), steps),
            weights,
        })
    }

    /// Exact Fourier transform `μ̂(ξ) = ∫ exp(-2πiξx) dμ(x)` by direct
    /// summation of the per-cell closed form. O(#cells) per call; use
    /// [`GridMeasure::spectrum`] for whole frequency grids.
    pub fn fourier(&self, xi: f64) -> C64 {
        let w = self.params.cell_width();
        let env = sinc(std::f64::consts::PI * xi * w);
        let mut acc = C64::new(0.0, 0.0);
        for (k, &m) in self.weights.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let c = (k as f64 + 0.5) * w;
            let phase = -2.0 * std::f64::consts::PI * xi * c;
            acc += C64::from_polar(m, phase);
        }
        acc * env
    }

    /// Precompute `μ̂` on the uniform grid `{ m / samples_per_unit }`.
    ///
    /// The phase sum at those frequencies is a zero-padded DFT of the weight
    /// vector, periodic in `m` with period `samples_per_unit * 2^(NL)`; the
    /// returned table therefore serves arbitrarily large grid frequencies.
    pub fn spectrum(&self, samples_per_unit: u32) -> MeasureSpectrum {
        assert!(samples_per_unit >= 1);
        let m_fft = (samples_per_unit as usize) * self.weights.len();
        let mut buf: Vec<C64> = vec![C64::new(0.0, 0.0); m_fft];
        for (k, &w) in self.weights.iter().enumerate() {
            buf[k] = C64::new(w, 0.0);
        }
        FftPlanner::new().plan_fft_forward(m_fft).process(&mut buf);
        MeasureSpectrum {
            samples_per_unit,
            base: buf,
            cell_width: self.params.cell_width(),
        }
    }

    // -- measure file format --------------------------------------------------

    /// CSV-style text format:
    ///
    /// ```text
    /// N,L,total
    /// 1,4,1.0000000000000000e0
    /// cell_index,weight
    /// 3,2.5000000000000000e-1
    /// ...
    /// ```
    ///
    /// Only cells with nonzero weight are listed; floats carry 17
    /// significant digits so values round-trip exactly.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("N,L,total\n");
        out.push_str(&format!(
            "{},{},{}\n",
            self.params.n(),
            self.params.l(),
            fmt_g17(self.total())
        ));
        out.push_str("cell_index,weight\n");
        for (k, &w) in self.weights.iter().enumerate() {
            if w != 0.0 {
                out.push_str(&format!("{},{}\n", k, fmt_g17(w)));
            }
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<GridMeasure> {
        let mut lines = text.lines().enumerate();
        let expect = |got: Option<(usize, &str)>, want: &str| -> Result<()> {
            match got {
                Some((_, line)) if line.trim() == want => Ok(()),
                Some((i, line)) => Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected `{}`, found `{}`", want, line),
                }),
                None => Err(Error::Parse {
                    line: 0,
                    msg: format!("missing `{}` line", want),
                }),
            }
        };
        expect(lines.next(), "N,L,total")?;
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 2,
            msg: "missing N,L,total values".into(),
        })?;
        let parts: Vec<&str> = header.trim().split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: hline + 1,
                msg: "expected three comma-separated values".into(),
            });
        }
        let n: u32 = parts[0].parse().map_err(|_| Error::Parse {
            line: hline + 1,
            msg: format!("bad N `{}`", parts[0]),
        })?;
        let l: u32 = parts[1].parse().map_err(|_| Error::Parse {
            line: hline + 1,
            msg: format!("bad L `{}`", parts[1]),
        })?;
        let declared_total: f64 = parts[2].parse().map_err(|_| Error::Parse {
            line: hline + 1,
            msg: format!("bad total `{}`", parts[2]),
        })?;
        let params = GridParams::new(n, l)?;
        expect(lines.next(), "cell_index,weight")?;
        let mut weights = vec![0.0f64; params.cell_count() as usize];
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (idx, w) = line.trim().split_once(',').ok_or(Error::Parse {
                line: i + 1,
                msg: format!("expected `cell_index,weight`, found `{}`", line),
            })?;
            let idx: u64 = idx.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad cell index `{}`", idx),
            })?;
            let w: f64 = w.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad weight `{}`", w),
            })?;
            if idx >= params.cell_count() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("cell index {} outside grid", idx),
                });
            }
            weights[idx as usize] = w;
        }
        let measure = GridMeasure::new(params, weights)?;
        let total = measure.total();
        let scale = declared_total.abs().max(1.0);
        if (total - declared_total).abs() > 1e-9 * scale {
            return Err(Error::Parse {
                line: hline + 1,
                msg: format!(
                    "declared total {} disagrees with weight sum {}",
                    declared_total, total
                ),
            });
        }
        Ok(measure)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<GridMeasure> {
        let mut text = String::new();
        BufReader::new(std::fs::File::open(path)?).read_to_string(&mut text)?;
        Self::from_csv_str(&text)
    }
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Largest value of `μ(Q) / len(Q)^s` over all dyadic cells `Q` at levels
/// `0..=L`, together with a maximizing cell. A measure is `s`-Frostman with
/// constant `C` exactly when this ratio is `<= C`.
pub fn frostman_ratio(measure: &GridMeasure, s: f64) -> (f64, DyadicInterval) {
    let masses = measure.cube_masses();
    let mut best = f64::NEG_INFINITY;
    let mut arg = DyadicInterval { level: 0, index: 0 };
    for (j, level) in masses.iter().enumerate() {
        let cap = crate::util::length_pow_s(j as u32, s);
        for (k, &m) in level.iter().enumerate() {
            let r = m / cap;
            if r > best {
                best = r;
                arg = DyadicInterval {
                    level: j as u32,
                    index: k as u64,
                };
            }
        }
    }
    (best, arg)
}

/// Exact evaluation of `μ̂` on the uniform grid `ξ = m / samples_per_unit`,
/// backed by one zero-padded FFT of the weights.
pub struct MeasureSpectrum {
    samples_per_unit: u32,
    base: Vec<C64>,
    cell_width: f64,
}

impl MeasureSpectrum {
    #[inline]
    pub fn samples_per_unit(&self) -> u32 {
        self.samples_per_unit
    }

    /// Frequency of node `m`.
    #[inline]
    pub fn xi(&self, m: u64) -> f64 {
        m as f64 / self.samples_per_unit as f64
    }

    /// `μ̂(m / samples_per_unit)`, exact for every `m >= 0`.
    pub fn at(&self, m: u64) -> C64 {
        let xi = self.xi(m);
        let dft = self.base[(m % self.base.len() as u64) as usize];
        let arg = std::f64::consts::PI * xi * self.cell_width;
        dft * C64::from_polar(1.0, -arg) * sinc(arg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32, l: u32) -> GridParams {
        GridParams::new(n, l).unwrap()
    }

    #[test]
    fn totals_and_masses() {
        let p = params(1, 3);
        let mut w = vec![0.0; 8];
        w[1] = 0.25;
        w[6] = 0.75;
        let mu = GridMeasure::new(p, w).unwrap();
        assert_eq!(mu.total(), 1.0);
        assert_eq!(mu.cube_mass(&DyadicInterval { level: 1, index: 0 }), 0.25);
        assert_eq!(mu.cube_mass(&DyadicInterval { level: 1, index: 1 }), 0.75);
        assert_eq!(mu.cube_mass(&DyadicInterval { level: 3, index: 6 }), 0.75);
        let levels = mu.cube_masses();
        assert_eq!(levels[0][0], 1.0);
        assert_eq!(levels[2][3], 0.75);
    }

    #[test]
    fn uniform_fourier_closed_form() {
        // For the uniform probability measure on [0,1]:
        // μ̂(ξ) = exp(-πiξ) sinc(πξ) regardless of the grid depth.
        let mu = GridMeasure::uniform(params(1, 6));
        for &xi in &[0.0, 0.5, 1.5, 3.25, 17.125] {
            let expect = C64::from_polar(1.0, -std::f64::consts::PI * xi)
                * sinc(std::f64::consts::PI * xi);
            let got = mu.fourier(xi);
            assert!((got - expect).norm() < 1e-12, "xi = {}", xi);
        }
        assert!((mu.fourier(0.0) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn spectrum_matches_direct_evaluation() {
        let p = params(1, 5);
        let mut w = vec![0.0; 32];
        w[3] = 0.125;
        w[17] = 0.5;
        w[30] = 0.375;
        let mu = GridMeasure::new(p, w).unwrap();
        let spec = mu.spectrum(4);
        // Check far past the base period 32 * 4 = 128 to exercise the
        // periodic reconstruction.
        for &m in &[0u64, 1, 7, 100, 128, 131, 1000, 5000] {
            let direct = mu.fourier(spec.xi(m));
            let fast = spec.at(m);
            assert!(
                (direct - fast).norm() < 1e-11,
                "m = {}: {} vs {}",
                m,
                direct,
                fast
            );
        }
    }

    #[test]
    fn frostman_ratio_point_mass() {
        // All mass in one finest cell at depth 10: the leaf ratio dominates
        // and equals 1 / 2^(-10s) = 2^(10s).
        let p = params(1, 10);
        let mut w = vec![0.0; 1024];
        w[512] = 1.0;
        let mu = GridMeasure::new(p, w).unwrap();
        let (r, q) = frostman_ratio(&mu, 1.0);
        assert_eq!(r, 1024.0);
        assert_eq!(q.level, 10);
        assert_eq!(q.index, 512);

        // The uniform measure is 1-Frostman with constant exactly 1 on an
        // N=1 grid.
        let unif = GridMeasure::uniform(params(1, 8));
        let (r, _) = frostman_ratio(&unif, 1.0);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let p = params(1, 4);
        let mut w = vec![0.0; 16];
        w[0] = 0.062_5;
        w[7] = 1.0 / 3.0;
        w[15] = 0.25 + 1e-13;
        let mu = GridMeasure::new(p, w).unwrap();
        let text = mu.to_csv_string();
        let back = GridMeasure::from_csv_str(&text).unwrap();
        assert_eq!(back.weights(), mu.weights());

        assert!(GridMeasure::from_csv_str("garbage").is_err());
        // A tampered total is rejected.
        let bad = text.replace(&fmt_g17(mu.total()), "2.0000000000000000e0");
        assert!(GridMeasure::from_csv_str(&bad).is_err());
    }

    #[test]
    fn restrict_rescale_normalize_probability() {
        let p = params(1, 3);
        let mut w = vec![0.0; 8];
        w[4] = 0.1;
        w[5] = 0.3;
        let mu = GridMeasure::new(p, w).unwrap();
        let half = DyadicInterval { level: 1, index: 1 };
        let nu = mu.restrict_rescale_normalize(&half).unwrap();
        assert_eq!(nu.params().l(), 2);
        assert!((nu.total() - 1.0).abs() < 1e-15);
        assert!((nu.weight(0) - 0.25).abs() < 1e-15);
        assert!((nu.weight(1) - 0.75).abs() < 1e-15);

        let empty_side = DyadicInterval { level: 1, index: 0 };
        assert!(matches!(
            mu.restrict_rescale_normalize(&empty_side),
            Err(Error::ZeroMass)
        ));
    }

    #[test]
    fn uniform_on_set_supported() {
        let p = params(1, 3);
        let mut set = DyadicSet::empty(p);
        set.set_occupied(2, true);
        set.set_occupied(5, true);
        let mu = GridMeasure::uniform_on_set(&set).unwrap();
        assert!(mu.supported_on(&set));
        assert_eq!(mu.total(), 1.0);
        assert!(GridMeasure::uniform_on_set(&DyadicSet::empty(p)).is_err());
    }
}
