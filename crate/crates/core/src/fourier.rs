//! Frequency-side analysis: Riesz energies, truncated Sobolev norms, the
//! energy–Fourier ratio, high-frequency tails, band norms, and a numerical
//! probe of the bilinear smoothing inequality.
//!
//! All integrals over frequency space are truncated at a configurable
//! `ξ_max` and carry a tail diagnostic: the integrand sampled at the
//! truncation point times `ξ_max`, a crude one-more-octave estimate that is
//! meaningful precisely when the integrand is already in its decaying
//! regime.  Callers pin `ξ_max` per use; nothing silently extends a grid.
//!
//! Sign convention for Sobolev exponents: [`SobolevSpec`] stores the signed
//! exponent `σ` of the weight `(1 + |ξ|²)^σ`, so the negative-order norm
//! `‖f‖²_{H^{−σ}}` for `σ > 0` is requested by passing `-σ`.

use rustfft::FftPlanner;

use crate::constants::HIGH_FREQ_TAIL_C;
use crate::curves::Curve;
use crate::measures::{FourierBumpTable, GridMeasure, MeasureSpectrum, SmoothCutoff, C64};
use crate::quad::{adaptive_vec, QuadOpts};
use crate::util::neumaier_sum;
use crate::{Error, Result};

/// A symmetric uniform frequency grid `{i/samples_per_unit : |i| ≤ n}` with
/// `n = ⌊ξ_max · samples_per_unit⌋`; always contains `ξ = 0`.
#[derive(Debug, Clone, Copy)]
pub struct FrequencyGrid {
    xi_max: f64,
    samples_per_unit: u32,
}

impl FrequencyGrid {
    pub fn new(xi_max: f64, samples_per_unit: u32) -> Result<Self> {
        if !(xi_max > 0.0) || !xi_max.is_finite() || samples_per_unit == 0 {
            return Err(Error::InvalidParams(format!(
                "frequency grid needs xi_max > 0 and samples_per_unit >= 1, \
                 got {xi_max} and {samples_per_unit}"
            )));
        }
        let nodes = xi_max * samples_per_unit as f64;
        if nodes > (1u64 << 26) as f64 {
            return Err(Error::InvalidParams(format!(
                "frequency grid with {nodes:.0} nodes per side is too dense"
            )));
        }
        Ok(FrequencyGrid {
            xi_max,
            samples_per_unit,
        })
    }

    /// Spacing between adjacent nodes.
    pub fn step(&self) -> f64 {
        1.0 / self.samples_per_unit as f64
    }

    /// Nodes per side: the grid is `{i·step : −n ≤ i ≤ n}`.
    pub fn half_count(&self) -> usize {
        (self.xi_max * self.samples_per_unit as f64 + 1e-9).floor() as usize
    }

    /// The `i`-th node (signed).
    pub fn node(&self, i: i64) -> f64 {
        i as f64 / self.samples_per_unit as f64
    }

    /// The truncation frequency actually realised (the outermost node).
    pub fn xi_max(&self) -> f64 {
        self.node(self.half_count() as i64)
    }

    pub fn samples_per_unit(&self) -> u32 {
        self.samples_per_unit
    }
}

/// Quadrature rule used for norm integrals on a [`FrequencyGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadRule {
    Trapezoid,
    Simpson,
}

/// Parameters of a truncated Sobolev norm: `‖f‖² = ∫ |f̂|²(1+|ξ|²)^σ dξ`
/// over `[−ξ_max, ξ_max]`, by the named composite rule.
#[derive(Debug, Clone, Copy)]
pub struct SobolevSpec {
    pub sigma: f64,
    pub grid: FrequencyGrid,
    pub rule: QuadRule,
}

impl SobolevSpec {
    pub fn new(sigma: f64, grid: FrequencyGrid) -> Self {
        SobolevSpec {
            sigma,
            grid,
            rule: QuadRule::Trapezoid,
        }
    }

    pub fn with_rule(mut self, rule: QuadRule) -> Self {
        self.rule = rule;
        self
    }
}

/// Result of a truncated Sobolev norm computation.
#[derive(Debug, Clone, Copy)]
pub struct SobolevNorm {
    /// The truncated integral `∫_{|ξ|≤ξ_max} |f̂|²(1+|ξ|²)^σ dξ`.
    pub norm_sq: f64,
    /// One-more-octave tail estimate `|f̂(ξ_max)|²·ξ_max·(1+ξ_max²)^σ`.
    pub tail_estimate: f64,
}

/// Computes the truncated Sobolev norm of `f̂` per `spec`.
///
/// The evaluator is called at every grid node, negative side included; no
/// symmetry is assumed (modulated test functions have one-sided spectra).
pub fn sobolev_norm(mut fhat: impl FnMut(f64) -> C64, spec: &SobolevSpec) -> SobolevNorm {
    let n = spec.grid.half_count() as i64;
    let h = spec.grid.step();
    let sigma = spec.sigma;
    let integrand = |i: i64, fhat: &mut dyn FnMut(f64) -> C64| {
        let xi = spec.grid.node(i);
        fhat(xi).norm_sqr() * (1.0 + xi * xi).powf(sigma)
    };
    let norm_sq = match spec.rule {
        QuadRule::Trapezoid => {
            let terms = (-n..=n).map(|i| {
                let w = if i == -n || i == n { 0.5 } else { 1.0 };
                w * integrand(i, &mut fhat)
            });
            h * neumaier_sum(terms)
        }
        QuadRule::Simpson => {
            // 2n intervals, always even, so the composite rule applies as is.
            let terms = (-n..=n).map(|i| {
                let p = i + n;
                let w = if p == 0 || p == 2 * n {
                    1.0
                } else if p % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * integrand(i, &mut fhat)
            });
            h / 3.0 * neumaier_sum(terms)
        }
    };
    let xm = spec.grid.xi_max();
    let tail_estimate = fhat(xm).norm_sqr() * xm * (1.0 + xm * xm).powf(sigma);
    SobolevNorm {
        norm_sq,
        tail_estimate,
    }
}

/// Evaluates a measure's spectrum at a signed node index, using conjugate
/// symmetry for the negative side (grid measures are real).
fn spectrum_at(spec: &MeasureSpectrum, i: i64) -> C64 {
    if i >= 0 {
        spec.at(i as u64)
    } else {
        spec.at((-i) as u64).conj()
    }
}

/// Wraps a spectrum as a frequency evaluator for [`sobolev_norm`]; exact at
/// the grid nodes of matching density (indices are recovered by rounding).
pub fn spectrum_evaluator(spec: &MeasureSpectrum) -> impl FnMut(f64) -> C64 + '_ {
    let spu = spec.samples_per_unit() as f64;
    move |xi: f64| spectrum_at(spec, (xi * spu).round() as i64)
}

fn check_unit_interval(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::ParamDomain(format!(
            "{name} must lie in (0, 1), got {value}"
        )));
    }
    Ok(())
}

/// Autocorrelation `c[d] = Σ_k w_k·w_{k+d}` of the weight vector, exact
/// pairwise sums for short vectors and an FFT for long ones.
fn autocorrelation(weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    if n <= 2048 {
        let mut c = vec![0.0; n];
        for (d, slot) in c.iter_mut().enumerate() {
            *slot = neumaier_sum((0..n - d).map(|k| weights[k] * weights[k + d]));
        }
        return c;
    }
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<C64> = weights
        .iter()
        .map(|&w| C64::new(w, 0.0))
        .chain(std::iter::repeat(C64::new(0.0, 0.0)))
        .take(len)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for v in buf.iter_mut() {
        *v = C64::new(v.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let scale = 1.0 / len as f64;
    buf[..n].iter().map(|v| v.re * scale).collect()
}

/// The Riesz energy `I_t(μ) = ∬ |x−y|^{−t} dμ(x) dμ(y)`, `t ∈ (0, 1)`.
///
/// Exact for piecewise-constant densities: the kernel is averaged in closed
/// form over each cell pair.  With `P(u) = u^{2−t}/((1−t)(2−t))` the double
/// primitive of `u^{−t}`, a pair of width-`w` cells whose left endpoints are
/// `d·w` apart contributes the mean `w^{−t}·(p(d+1) − 2p(d) + p(d−1))`
/// per unit mass squared (`p(u) = u^{2−t}/((1−t)(2−t))`), and the diagonal
/// cell contributes `2·w^{−t}/((1−t)(2−t))`.  The pair sum collapses to a
/// single pass over the weight autocorrelation.
///
/// Conditioning: the second difference of `p` loses at most `~d²·ulp`
/// relative accuracy, which after multiplying by the `O(d^{−2})`-small
/// difference leaves an absolute error `≲ n^{2−t}·ulp` per term — orders of
/// magnitude inside every tolerance used downstream.
pub fn riesz_energy(mu: &GridMeasure, t: f64) -> Result<f64> {
    check_unit_interval("riesz exponent t", t)?;
    let p = mu.params();
    let w = p.cell_width();
    let denom = (1.0 - t) * (2.0 - t);
    let c = autocorrelation(mu.weights());
    let pw = |u: f64| u.powf(2.0 - t);
    let scale = w.powf(-t) / denom;
    let diag = c[0] * 2.0 * scale;
    let off = neumaier_sum((1..c.len()).map(|d| {
        let df = d as f64;
        2.0 * c[d] * scale * (pw(df + 1.0) - 2.0 * pw(df) + pw(df - 1.0))
    }));
    Ok(diag + off)
}

/// `I_s(μ) / ∫_{grid} |μ̂(ξ)|² |ξ|^{s−1} dξ` for `s ∈ (0, 1)`.
///
/// The denominator integrates over node-centred cells: each node `ξ_i ≠ 0`
/// contributes `|μ̂(ξ_i)|²·|ξ_i|^{s−1}·h`, and the singular cell
/// `[−h/2, h/2]` is patched analytically as `|μ̂(0)|²·2·(h/2)^s/s` (the
/// kernel integrates in closed form and `μ̂` is Lipschitz near 0).
pub fn energy_fourier_ratio(mu: &GridMeasure, s: f64, grid: &FrequencyGrid) -> Result<f64> {
    check_unit_interval("energy exponent s", s)?;
    let numerator = riesz_energy(mu, s)?;
    let spec = mu.spectrum(grid.samples_per_unit());
    let h = grid.step();
    let n = grid.half_count() as u64;
    let body = 2.0
        * h
        * neumaier_sum((1..=n).map(|m| {
            let xi = grid.node(m as i64);
            spec.at(m).norm_sqr() * xi.powf(s - 1.0)
        }));
    let patch = spec.at(0).norm_sqr() * 2.0 * (h / 2.0).powf(s) / s;
    let denominator = body + patch;
    if denominator == 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok(numerator / denominator)
}

/// Outcome of the high-frequency tail comparison.
#[derive(Debug, Clone, Copy)]
pub struct HighFreqTail {
    /// `‖μ_ε − μ_{1/B}‖²` in the negative-order Sobolev norm.
    pub value: f64,
    /// Calibrated analytic envelope `C·(ε⁴B + B⁻³ + B^{(1−σ−t)/5}·I_t(μ))`.
    pub bound: f64,
    /// Truncation diagnostic from the norm quadrature.
    pub norm_tail: f64,
}

/// Measures `‖μ_ε − μ_{1/B}‖²_{H^{−σ}}` against its analytic envelope.
///
/// On the Fourier side the mollification difference is exact:
/// `f̂(ξ) = μ̂(ξ)·(φ̂(εξ) − φ̂(ξ/B))`, so `ε = 1/B` gives identically zero.
/// Requires `ε ∈ (0,1)`, `B > 1`, `σ ∈ (0,1)` and `1−σ < t < 1` (so the
/// envelope's last exponent is negative and all three pieces decay in `B`).
pub fn high_frequency_tail(
    mu: &GridMeasure,
    eps: f64,
    b: f64,
    sigma: f64,
    t: f64,
    grid: &FrequencyGrid,
) -> Result<HighFreqTail> {
    check_unit_interval("mollification scale eps", eps)?;
    check_unit_interval("sobolev order sigma", sigma)?;
    if !(b > 1.0) || !b.is_finite() {
        return Err(Error::ParamDomain(format!(
            "frequency split B must exceed 1, got {b}"
        )));
    }
    if !(t > 1.0 - sigma && t < 1.0) {
        return Err(Error::ParamDomain(format!(
            "energy exponent t must lie in (1 - sigma, 1) = ({}, 1), got {t}",
            1.0 - sigma
        )));
    }
    let spec = mu.spectrum(grid.samples_per_unit());
    let table = FourierBumpTable::new();
    let spu = grid.samples_per_unit() as f64;
    let fhat = |xi: f64| {
        let m = (xi * spu).round() as i64;
        spectrum_at(&spec, m) * (table.eval(eps * xi) - table.eval(xi / b))
    };
    let norm = sobolev_norm(fhat, &SobolevSpec::new(-sigma, *grid));
    let energy = riesz_energy(mu, t)?;
    let shape = eps.powi(4) * b + b.powi(-3) + b.powf((1.0 - sigma - t) / 5.0) * energy;
    Ok(HighFreqTail {
        value: norm.norm_sq,
        bound: HIGH_FREQ_TAIL_C * shape,
        norm_tail: norm.tail_estimate,
    })
}

/// Outcome of the band-norm computation between scales `1/B` and `1/A`.
#[derive(Debug, Clone, Copy)]
pub struct BandNorms {
    /// `∫ |μ̂(ξ)|·|φ̂(ξ/B) − φ̂(ξ/A)| dξ` over the truncated grid.
    pub gap_integral: f64,
    /// Tail diagnostic for the gap integral (integrand at `ξ_max` times `ξ_max`).
    pub gap_tail: f64,
    /// `‖μ_{1/B} − μ_{1/A}‖²_{H^{−σ}}` over the truncated grid.
    pub band_norm_sq: f64,
    /// Truncation diagnostic for the band norm.
    pub band_tail: f64,
}

/// Computes the spectral-gap integral and the band Sobolev norm between
/// mollification scales `1/B` (fine) and `1/A` (coarse).
///
/// Requires `1 < A ≤ B`; the degenerate `A = B` is allowed and returns
/// exact zeros (the two mollifications coincide pointwise).
pub fn band_norms(
    mu: &GridMeasure,
    a: f64,
    b: f64,
    sigma: f64,
    grid: &FrequencyGrid,
) -> Result<BandNorms> {
    if !(a > 1.0) || !(b >= a) || !b.is_finite() {
        return Err(Error::ParamDomain(format!(
            "band norms need 1 < A <= B, got A = {a}, B = {b}"
        )));
    }
    let spec = mu.spectrum(grid.samples_per_unit());
    let table = FourierBumpTable::new();
    let n = grid.half_count() as u64;
    let h = grid.step();
    // |μ̂| and the bump-difference factor are both even, so integrate one
    // side and double; the ξ = 0 term vanishes identically.
    let g = |m: u64| {
        let xi = grid.node(m as i64);
        spec.at(m).norm() * (table.eval(xi / b) - table.eval(xi / a)).abs()
    };
    let gap_integral = h * (g(0) + 2.0 * neumaier_sum((1..n).map(g)) + g(n));
    let gap_tail = g(n) * grid.xi_max();
    let spu = grid.samples_per_unit() as f64;
    let fhat = |xi: f64| {
        let m = (xi * spu).round() as i64;
        spectrum_at(&spec, m) * (table.eval(xi / b) - table.eval(xi / a))
    };
    let norm = sobolev_norm(fhat, &SobolevSpec::new(-sigma, *grid));
    Ok(BandNorms {
        gap_integral,
        gap_tail,
        band_norm_sq: norm.norm_sq,
        band_tail: norm.tail_estimate,
    })
}

/// `∫_{lo}^{hi} |μ̂(ξ)| dξ` by the trapezoid rule on nodes of the given
/// density; `lo` and `hi` must land on grid nodes.
///
/// This is the annulus integral whose smallness is the spectral-gap
/// condition; shrinking it with growing `T` is what the gap construction
/// buys.
pub fn gap_band_integral(
    mu: &GridMeasure,
    lo: f64,
    hi: f64,
    samples_per_unit: u32,
) -> Result<f64> {
    if !(0.0 <= lo && lo < hi) || !hi.is_finite() || samples_per_unit == 0 {
        return Err(Error::ParamDomain(format!(
            "annulus integral needs 0 <= lo < hi and a positive sample rate, \
             got [{lo}, {hi}] at {samples_per_unit}"
        )));
    }
    let spu = samples_per_unit as f64;
    let (mlo, mhi) = (lo * spu, hi * spu);
    if mlo.fract() != 0.0 || mhi.fract() != 0.0 {
        return Err(Error::ParamDomain(format!(
            "annulus endpoints [{lo}, {hi}] do not land on the frequency grid \
             with {samples_per_unit} samples per unit"
        )));
    }
    let (mlo, mhi) = (mlo as u64, mhi as u64);
    let spec = mu.spectrum(samples_per_unit);
    let h = 1.0 / spu;
    let g = |m: u64| spec.at(m).norm();
    Ok(h * (0.5 * g(mlo) + neumaier_sum((mlo + 1..mhi).map(g)) + 0.5 * g(mhi)))
}

/// A probe test function: Gaussian envelope times a modulation,
/// `f(x) = exp(−(x−c)²/(2s²))·e^{2πiλx}`, truncated where the envelope
/// falls below `e^{−32}`.
#[derive(Debug, Clone, Copy)]
pub struct ProbeFunction {
    pub center: f64,
    pub width: f64,
    pub modulation: f64,
}

/// Envelope truncation radius in units of the Gaussian width.
const PROBE_RADIUS: f64 = 8.0;

impl ProbeFunction {
    pub fn new(center: f64, width: f64, modulation: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() || !center.is_finite() || !modulation.is_finite()
        {
            return Err(Error::ParamDomain(format!(
                "probe function needs a positive finite width, got \
                 center {center}, width {width}, modulation {modulation}"
            )));
        }
        Ok(ProbeFunction {
            center,
            width,
            modulation,
        })
    }

    /// Pointwise value; exactly zero outside `|x − c| ≤ 8s`.
    pub fn eval(&self, x: f64) -> C64 {
        let u = (x - self.center) / self.width;
        if u.abs() > PROBE_RADIUS {
            return C64::new(0.0, 0.0);
        }
        let env = (-0.5 * u * u).exp();
        let phase = 2.0 * std::f64::consts::PI * self.modulation * x;
        C64::new(env * phase.cos(), env * phase.sin())
    }

    /// Closed-form transform of the untruncated function:
    /// `f̂(ξ) = s√(2π)·exp(−2π²s²(ξ−λ)²)·e^{−2πi(ξ−λ)c}` (the truncation
    /// changes it by less than `e^{−32}`).
    pub fn fourier(&self, xi: f64) -> C64 {
        let s = self.width;
        let nu = xi - self.modulation;
        let amp = s * (2.0 * std::f64::consts::PI).sqrt()
            * (-2.0 * std::f64::consts::PI.powi(2) * s * s * nu * nu).exp();
        let phase = -2.0 * std::f64::consts::PI * nu * self.center;
        C64::new(amp * phase.cos(), amp * phase.sin())
    }

    /// Support of the truncated envelope.
    fn support(&self) -> (f64, f64) {
        (
            self.center - PROBE_RADIUS * self.width,
            self.center + PROBE_RADIUS * self.width,
        )
    }

    /// Truncated Sobolev norm (not squared) from the closed-form transform;
    /// the grid covers the shifted Gaussian with room to spare.
    pub fn sobolev(&self, sigma: f64) -> f64 {
        let xi_max = self.modulation.abs() + 4.0 / self.width + 8.0;
        let grid = FrequencyGrid::new(xi_max, 64).expect("probe grid is small and valid");
        sobolev_norm(|xi| self.fourier(xi), &SobolevSpec::new(sigma, grid))
            .norm_sq
            .sqrt()
    }
}

/// Outcome of one smoothing-probe evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ProbeResult {
    /// `‖T(f1,f2)‖_{H^σ} / (‖f1‖_{H^{−σ}}·‖f2‖_{H^{−σ}})`.
    pub ratio: f64,
    /// Numerator norm (not squared).
    pub output_norm: f64,
    /// Denominator norms (not squared).
    pub input_norm_1: f64,
    pub input_norm_2: f64,
    /// Number of spatial samples behind the output transform.
    pub samples: usize,
    /// Sampled window.
    pub x_lo: f64,
    pub x_hi: f64,
}

/// Numerical probe of the bilinear smoothing inequality: computes
/// `T(f1,f2)(x) = ∫ f1(x−t)·f2(x−γ(t))·χ_(ℓ)(t) dt` on a spatial grid by
/// adaptive quadrature, transforms the samples, and returns the norm ratio
/// `‖T‖_{H^σ} / (‖f1‖_{H^{−σ}}·‖f2‖_{H^{−σ}})`.
///
/// The probe charts the inequality's shape (how the ratio responds to
/// modulation and to `ℓ`); it certifies no constants.  Quadrature
/// non-convergence surfaces as an error rather than a degraded number.
pub fn smoothing_probe(
    f1: &ProbeFunction,
    f2: &ProbeFunction,
    curve: &Curve,
    ell: u32,
    sigma: f64,
) -> Result<ProbeResult> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::ParamDomain(format!(
            "probe order sigma must be nonnegative, got {sigma}"
        )));
    }
    let (t_lo, t_hi) = SmoothCutoff::support_scaled(ell);
    if curve.domain_end() < t_hi {
        return Err(Error::ParamDomain(format!(
            "curve `{}` reaches only t = {:.6}, below the cutoff window end {:.6}; \
             raise ell or pick a wider curve",
            curve.id(),
            curve.domain_end(),
            t_hi
        )));
    }

    // The output can be nonzero only where both factors can be nonzero:
    // x ∈ (supp f1 + t-window) ∩ (supp f2 + γ(t-window)).
    let mut g_min = f64::INFINITY;
    let mut g_max = f64::NEG_INFINITY;
    for i in 0..=128 {
        let t = t_lo + (t_hi - t_lo) * (i as f64) / 128.0;
        let g = curve.eval(t)?;
        g_min = g_min.min(g);
        g_max = g_max.max(g);
    }
    let (s1_lo, s1_hi) = f1.support();
    let (s2_lo, s2_hi) = f2.support();
    let x_lo = (s1_lo + t_lo).max(s2_lo + g_min);
    let x_hi = (s1_hi + t_hi).min(s2_hi + g_max);
    let n1 = f1.sobolev(-sigma);
    let n2 = f2.sobolev(-sigma);
    if x_lo >= x_hi {
        return Ok(ProbeResult {
            ratio: 0.0,
            output_norm: 0.0,
            input_norm_1: n1,
            input_norm_2: n2,
            samples: 0,
            x_lo,
            x_hi: x_lo,
        });
    }

    // Spatial sampling dense enough for the modulations and envelopes.
    let freq_scale = f1.modulation.abs().max(f2.modulation.abs()) + 1.0 / f1.width.min(f2.width);
    let spu = ((16.0 * freq_scale).max(256.0).ceil() as usize).next_power_of_two();
    let span = x_hi - x_lo;
    let n = ((span * spu as f64).ceil() as usize).next_power_of_two();
    if n > (1 << 18) {
        return Err(Error::InvalidParams(format!(
            "probe would need {n} spatial samples; narrow the test functions \
             or lower the modulation"
        )));
    }
    let dx = span / n as f64;
    let breaks = SmoothCutoff::breakpoints_scaled(ell);
    let opts = QuadOpts::with_tol(1e-9);

    use rayon::prelude::*;
    let samples: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let x = x_lo + (j as f64 + 0.5) * dx;
            let value = adaptive_vec::<2>(
                |t| {
                    let a = f1.eval(x - t);
                    let b = f2.eval(
                        x - curve.eval(t).expect("t inside the validated window"),
                    );
                    let c = SmoothCutoff::eval_scaled(ell, t);
                    let prod = a * b * c;
                    [prod.re, prod.im]
                },
                t_lo,
                t_hi,
                &breaks,
                opts,
            )?;
            Ok(C64::new(value[0], value[1]))
        })
        .collect::<Result<Vec<C64>>>()?;

    // Discrete transform of the samples: T̂(k/span) ≈ dx·DFT_k; the norm
    // uses cells of width 1/span centred on the DFT frequencies.
    let mut buf = samples.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let dxi = 1.0 / span;
    let norm_sq = dxi
        * neumaier_sum((0..n).map(|k| {
            let signed = if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
            let xi = signed as f64 * dxi;
            (buf[k] * dx).norm_sqr() * (1.0 + xi * xi).powf(sigma)
        }));
    let output_norm = norm_sq.sqrt();
    Ok(ProbeResult {
        ratio: output_norm / (n1 * n2),
        output_norm,
        input_norm_1: n1,
        input_norm_2: n2,
        samples: n,
        x_lo,
        x_hi,
    })
}


#[cfg(test)]
mod calibration {
    use super::*;
    use crate::dyadic::GridParams;

    #[test]
    #[ignore]
    fn calibrate_high_freq_tail() {
        let mu = GridMeasure::uniform(GridParams::new(1, 10).unwrap());
        let grid = FrequencyGrid::new(65536.0, 4).unwrap();
        let energy = riesz_energy(&mu, 0.9).unwrap();
        for &b in &[16.0f64, 64.0, 256.0] {
            let eps = b.powi(-2);
            let out = high_frequency_tail(&mu, eps, b, 0.2, 0.9, &grid).unwrap();
            let shape = eps.powi(4) * b + b.powi(-3) + b.powf((1.0 - 0.2 - 0.9) / 5.0) * energy;
            println!("B = {b}: value {:.6e}, shape {:.6e}, ratio {:.6e}", out.value, shape, out.value / shape);
        }
    }
}
