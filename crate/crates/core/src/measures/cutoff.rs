//! Smooth compactly supported profiles: the standard even bump, tabulated
//! antiderivative and Fourier transform, the reference weight on `[0, 1]`,
//! and the dyadic-scale cutoff.
//!
//! All three tables are built once per process:
//!
//! * the bump's normalization constant (composite Gauss–Legendre),
//! * the bump CDF on `[-1, 1]` (2^14 panels, cumulative Gauss–Legendre,
//!   cubic read-out, absolute error well under 1e-12),
//! * the bump's Fourier transform on a grid of spacing 1/512 out to
//!   frequency 520 (one zero-padded FFT of length 2^21; the sampling alias
//!   sits at frequency 4096, where the transform has decayed far below the
//!   rounding error of the stored values, so grid values are exact to
//!   rounding).

use crate::measures::grid::C64;
use crate::quad::gauss16;
use crate::util::{cubic_interp, neumaier_sum};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::sync::OnceLock;

fn raw_bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

fn bump_norm() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| {
        // The integrand is C-infinity; 256 Gauss-Legendre panels are exact
        // to rounding.
        let panels = 256;
        let h = 2.0 / panels as f64;
        let total = neumaier_sum(
            (0..panels).map(|i| gauss16(raw_bump, -1.0 + i as f64 * h, -1.0 + (i + 1) as f64 * h)),
        );
        1.0 / total
    })
}

/// The even bump `φ(x) = c · exp(-1/(1-x²))` on `(-1, 1)` with `∫φ = 1`.
///
/// `φ(±1/2) ≈ 0.5937`, so `φ >= 1/2` holds on `[-1/2, 1/2]`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothBump {
    norm: f64,
}

impl SmoothBump {
    pub fn new() -> SmoothBump {
        let b = SmoothBump { norm: bump_norm() };
        debug_assert!(b.eval(0.5) >= 0.5 && b.eval(-0.5) >= 0.5);
        b
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.norm * raw_bump(x)
    }

    /// `φ_ε(x) = φ(x/ε)/ε`, the approximate identity at scale `ε`.
    #[inline]
    pub fn eval_scaled(&self, eps: f64, x: f64) -> f64 {
        self.eval(x / eps) / eps
    }
}

impl Default for SmoothBump {
    fn default() -> Self {
        SmoothBump::new()
    }
}

const CDF_PANELS: usize = 1 << 14;

fn cdf_table() -> &'static Vec<f64> {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let bump = SmoothBump::new();
        let h = 2.0 / CDF_PANELS as f64;
        let mut table = Vec::with_capacity(CDF_PANELS + 1);
        // Compensated running total of per-panel Gauss-Legendre integrals.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        table.push(0.0);
        for i in 0..CDF_PANELS {
            let a = -1.0 + i as f64 * h;
            let piece = gauss16(|x| bump.eval(x), a, a + h);
            let t = sum + piece;
            comp += if sum.abs() >= piece.abs() {
                (sum - t) + piece
            } else {
                (piece - t) + sum
            };
            sum = t;
            table.push(sum + comp);
        }
        // Pin the right endpoint to exactly 1 so that the mollified density
        // is exact far away from any boundary.
        let end = *table.last().unwrap();
        for v in table.iter_mut() {
            *v /= end;
        }
        table
    })
}

/// `Φ(u) = ∫_{-1}^{u} φ`, tabulated with cubic read-out. `Φ(-1) = 0` and
/// `Φ(1) = 1` exactly; interior values are accurate to ~1e-14.
#[derive(Debug, Clone, Copy)]
pub struct BumpCdf;

impl BumpCdf {
    pub fn new() -> BumpCdf {
        cdf_table();
        BumpCdf
    }

    pub fn eval(&self, u: f64) -> f64 {
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let table = cdf_table();
        let step = 2.0 / CDF_PANELS as f64;
        // The cubic read-out can overshoot by ~1e-17 near the flat ends;
        // clamp so the result is always a valid CDF value.
        cubic_interp(table, -1.0, step, u).clamp(0.0, 1.0)
    }
}

impl Default for BumpCdf {
    fn default() -> Self {
        BumpCdf::new()
    }
}

const PHI_HAT_SAMPLES: usize = 1 << 13; // bump samples on [-1, 1)
const PHI_HAT_FFT_LEN: usize = 1 << 21;
/// Frequency spacing of the tabulated transform.
pub const PHI_HAT_STEP: f64 = 1.0 / 512.0;
const PHI_HAT_MAX_FREQ: f64 = 520.0;

fn phi_hat_table() -> &'static Vec<f64> {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let bump = SmoothBump::new();
        let h = 2.0 / PHI_HAT_SAMPLES as f64;
        let mut buf: Vec<C64> = vec![Complex::new(0.0, 0.0); PHI_HAT_FFT_LEN];
        for (j, slot) in buf.iter_mut().enumerate().take(PHI_HAT_SAMPLES) {
            let x = -1.0 + j as f64 * h;
            *slot = Complex::new(bump.eval(x) * h, 0.0);
        }
        FftPlanner::new()
            .plan_fft_forward(PHI_HAT_FFT_LEN)
            .process(&mut buf);
        let entries = (PHI_HAT_MAX_FREQ / PHI_HAT_STEP) as usize + 1;
        let mut table = Vec::with_capacity(entries);
        for (k, v) in buf.iter().enumerate().take(entries) {
            // The DFT used sample positions j*h; shift the phase reference
            // back to x = -1. The transform of an even real function is
            // real, so the imaginary part is pure rounding noise.
            let eta = k as f64 * PHI_HAT_STEP;
            let corrected = v * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * eta);
            debug_assert!(corrected.im.abs() < 1e-12);
            table.push(corrected.re);
        }
        table
    })
}

/// Tabulated `φ̂(η) = ∫ φ(x) exp(-2πiηx) dx`, real and even.
#[derive(Debug, Clone, Copy)]
pub struct FourierBumpTable;

impl FourierBumpTable {
    pub fn new() -> FourierBumpTable {
        phi_hat_table();
        FourierBumpTable
    }

    /// `φ̂(η)`. Beyond frequency 520 the transform (≈1e-24 and falling) is
    /// far below every tolerance in the crate and is returned as exactly 0.
    pub fn eval(&self, eta: f64) -> f64 {
        let a = eta.abs();
        if a >= PHI_HAT_MAX_FREQ - 1.0 {
            return 0.0;
        }
        cubic_interp(phi_hat_table(), 0.0, PHI_HAT_STEP, a)
    }
}

impl Default for FourierBumpTable {
    fn default() -> Self {
        FourierBumpTable::new()
    }
}

/// The reference weight `w(x) = 2 φ(2x - 1)`: a probability density
/// supported in `(0, 1)` with `sup w <= 2` and
/// `ŵ(ξ) = exp(-πiξ) φ̂(ξ/2)`.
#[derive(Debug, Clone, Copy)]
pub struct WeightBump {
    bump: SmoothBump,
    table: FourierBumpTable,
}

impl WeightBump {
    pub fn new() -> WeightBump {
        WeightBump {
            bump: SmoothBump::new(),
            table: FourierBumpTable::new(),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        2.0 * self.bump.eval(2.0 * x - 1.0)
    }

    /// Exact upper bound for the density (`= 2 φ(0) ≈ 1.657`).
    pub fn sup_bound(&self) -> f64 {
        2.0 * self.bump.eval(0.0)
    }

    pub fn fourier(&self, xi: f64) -> C64 {
        C64::from_polar(1.0, -std::f64::consts::PI * xi) * self.table.eval(xi / 2.0)
    }
}

impl Default for WeightBump {
    fn default() -> Self {
        WeightBump::new()
    }
}

/// Smooth ramp with `r(u) = 0` for `u <= 0`, `1` for `u >= 1`, built from
/// `g(u) = exp(-1/u)` so that `r(u) + r(1-u) = 1`.
fn ramp(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let g = (-1.0 / u).exp();
    let gc = (-1.0 / (1.0 - u)).exp();
    g / (g + gc)
}

/// Smooth cutoff selecting roughly one dyadic scale: vanishes outside
/// `[1/2, 4]`, equals 1 on `[1, 2]`, with smooth ramps on `[1/2, 1]` and
/// `[2, 4]`. The ramp symmetry makes `∫ χ = 9/4` exactly.
#[derive(Debug, Clone, Copy)]
pub struct SmoothCutoff;

impl SmoothCutoff {
    /// `∫ χ(t) dt` in closed form.
    pub const INTEGRAL: f64 = 2.25;

    pub fn eval(t: f64) -> f64 {
        if t <= 0.5 || t >= 4.0 {
            0.0
        } else if t < 1.0 {
            ramp(2.0 * t - 1.0)
        } else if t <= 2.0 {
            1.0
        } else {
            ramp(2.0 - t / 2.0)
        }
    }

    /// `χ(2^scale · t)`: supported on `[2^(-scale-1), 2^(-scale+2)]` and
    /// equal to 1 on `[2^(-scale), 2^(-scale+1)]`.
    pub fn eval_scaled(scale: u32, t: f64) -> f64 {
        SmoothCutoff::eval((scale as f64).exp2() * t)
    }

    /// Support endpoints of the scaled cutoff.
    pub fn support_scaled(scale: u32) -> (f64, f64) {
        let w = (-(scale as f64)).exp2();
        (0.5 * w, 4.0 * w)
    }

    /// The four knots where the scaled cutoff changes its analytic branch;
    /// quadratures over it should break panels here.
    pub fn breakpoints_scaled(scale: u32) -> [f64; 4] {
        let w = (-(scale as f64)).exp2();
        [0.5 * w, w, 2.0 * w, 4.0 * w]
    }
}
