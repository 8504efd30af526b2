//! Small numerical helpers shared across modules.

/// Compensated (Neumaier) summation. Keeps the error of long totals at one
/// or two ulps instead of `n` ulps, which matters when certificates compare
/// totals against `1e-12` tolerances over `2^16` weights.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `2^(-level * s)`, the `s`-cost of a dyadic interval of length `2^-level`.
///
/// Every content computation — dynamic program, brute-force cover oracle,
/// Frostman caps — must go through this one expression so their results are
/// bit-identical where the mathematics says they agree.
#[inline]
pub fn length_pow_s(level: u32, s: f64) -> f64 {
    (2.0f64).powf(-(level as f64) * s)
}

/// Four-point (Catmull–Rom style) cubic interpolation on a uniform table.
///
/// `table[i]` holds `f(x0 + i*step)`. Accuracy is `O(step^4 * |f''''|)`,
/// which for the smooth cutoff tables used here sits far below 1e-12.
pub fn cubic_interp(table: &[f64], x0: f64, step: f64, x: f64) -> f64 {
    debug_assert!(table.len() >= 4);
    let u = (x - x0) / step;
    let n = table.len();
    // Clamp the stencil inside the table; callers keep x inside the range.
    let mut i = u.floor() as isize;
    if i < 1 {
        i = 1;
    }
    if i > n as isize - 3 {
        i = n as isize - 3;
    }
    let i = i as usize;
    let d = u - i as f64;
    let (f0, f1, f2, f3) = (table[i - 1], table[i], table[i + 1], table[i + 2]);
    // Lagrange basis on nodes -1, 0, 1, 2.
    let c0 = -d * (d - 1.0) * (d - 2.0) / 6.0;
    let c1 = (d + 1.0) * (d - 1.0) * (d - 2.0) / 2.0;
    let c2 = -(d + 1.0) * d * (d - 2.0) / 2.0;
    let c3 = (d + 1.0) * d * (d - 1.0) / 6.0;
    c0 * f0 + c1 * f1 + c2 * f2 + c3 * f3
}
