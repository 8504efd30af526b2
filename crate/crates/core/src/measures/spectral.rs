//! Construction of a probability measure with near-reference Fourier decay
//! supported on a dense-enough cell of a grid set.
//!
//! Given a set `E` of depth `L` on an `N`-adic grid and a block depth `T`,
//! the construction:
//!
//! 1. picks the exponent `s = N(1 - ε)` with
//!    `ε = min{ log2(1 + 2^(-NT-2)) / (NT), 1/(4N²), (1 - t*)/(2N) }`,
//!    which ties the density defect `δ = 2^(-NT-2)` to the content they can
//!    spare (see the skip analysis below);
//! 2. finds a cell `Q` at level `<= L - T` whose content ratio is at least
//!    `1 - δ` and transports `E ∩ Q` to the unit interval;
//! 3. gives every level-`T` child cell `q` the exact reference-weight mass
//!    `m_q = ∫_q w` carried by a rescaled Frostman measure of `E ∩ q`,
//!    skipping children whose content falls below half a cap (with the `ε`
//!    above, a `(1-δ)`-dense cell can never contain such a child — the skip
//!    path is defensive);
//! 4. normalizes.
//!
//! The result is certified by diagnostics rather than by fiat: total mass
//! error, the measured Frostman ratio (`<= 4` by the cap arithmetic), the
//! skipped children, and — separately — the measured constant in
//! `|μ̂(ξ) - ŵ(ξ)| <= C · 2^(-T) |ξ|`, which follows from per-cell mass
//! matching at scale `2^(-NT)`.

use crate::content::{best_cube_in_levels, frostman_measure, ContentAnalysis, GoodCube};
use crate::dyadic::{DyadicInterval, DyadicSet};
use crate::measures::cutoff::{BumpCdf, WeightBump};
use crate::measures::grid::{frostman_ratio, GridMeasure};
use crate::util::{length_pow_s, neumaier_sum};
use crate::{Error, Result};

/// The spectral exponent defect `ε` for grid arity `n`, block depth
/// `t_levels`, and Frostman target `t_star` (the measure ends up
/// `s`-Frostman for `s = n(1 - ε) > t_star` with constant 4).
pub fn epsilon_exponent(n: u32, t_levels: u32, t_star: f64) -> Result<f64> {
    if n == 0 || t_levels == 0 {
        return Err(Error::InvalidParams(
            "grid arity and block depth must be positive".into(),
        ));
    }
    if !(0.0..1.0).contains(&t_star) {
        return Err(Error::InvalidParams(format!(
            "Frostman target must lie in [0, 1), got {}",
            t_star
        )));
    }
    let nt = (n * t_levels) as f64;
    let gap_term = (1.0 + (-(nt + 2.0)).exp2()).log2() / nt;
    let arity_term = 1.0 / (4.0 * (n as f64) * (n as f64));
    let frostman_term = (1.0 - t_star) / (2.0 * n as f64);
    Ok(gap_term.min(arity_term).min(frostman_term))
}

/// Density defect threshold used by the anchor-cell search.
pub fn density_defect(n: u32, t_levels: u32) -> f64 {
    (-((n * t_levels) as f64) - 2.0).exp2()
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralGapParams {
    /// Block depth `T`: the construction matches reference-weight masses on
    /// all cells at this level below the anchor.
    pub t_levels: u32,
    /// Frostman target `t*` entering the exponent choice.
    pub t_star: f64,
}

/// Certification data for one constructed measure.
#[derive(Debug, Clone)]
pub struct SpectralDiagnostics {
    pub epsilon: f64,
    pub s: f64,
    pub delta: f64,
    /// Anchor cell in the coordinates of the input set.
    pub anchor: GoodCube,
    /// Depth of the rescaled grid the measure lives on.
    pub rescaled_depth: u32,
    pub children_total: u64,
    pub children_kept: u64,
    /// Level-`T` children excluded by the half-cap mass threshold.
    pub skipped: Vec<u64>,
    /// `| ‖μ‖ - 1 |` after normalization (compensated sum).
    pub total_mass_error: f64,
    /// Measured `max_Q μ(Q) / len(Q)^s` and a maximizing cell.
    pub frostman_ratio: f64,
    pub frostman_cell: DyadicInterval,
}

#[derive(Debug, Clone)]
pub struct SpectralOutcome {
    /// Probability measure on the rescaled (unit) grid.
    pub measure: GridMeasure,
    pub diagnostics: SpectralDiagnostics,
}

/// Run the full construction on `set`.
pub fn spectral_gap_measure(set: &DyadicSet, params: &SpectralGapParams) -> Result<SpectralOutcome> {
    let grid = set.params();
    let (n, l) = (grid.n(), grid.l());
    let t = params.t_levels;
    if t == 0 || t > l {
        return Err(Error::InvalidParams(format!(
            "block depth {} must lie in 1..={}",
            t, l
        )));
    }
    let epsilon = epsilon_exponent(n, t, params.t_star)?;
    let s = n as f64 * (1.0 - epsilon);
    let delta = density_defect(n, t);

    let best = best_cube_in_levels(set, s, 0, l - t)?
        .ok_or(Error::EmptySet("cannot anchor a measure on it"))?;
    if best.ratio < 1.0 - delta {
        return Err(Error::NoGoodCube {
            j_min: 0,
            j_max: l - t,
            delta,
        });
    }

    let rescaled = set.restrict_and_rescale(&best.interval)?;
    let (raw, skipped) = assemble_children(&rescaled, t, s)?;

    let raw_total = neumaier_sum(raw.iter().copied());
    let weights: Vec<f64> = raw.iter().map(|w| w / raw_total).collect();
    let measure = GridMeasure::new(rescaled.params(), weights)?;
    let total_mass_error = (measure.total() - 1.0).abs();
    let (fr, fr_cell) = frostman_ratio(&measure, s);

    let children_total = 1u64 << (n * t);
    let diagnostics = SpectralDiagnostics {
        epsilon,
        s,
        delta,
        anchor: best,
        rescaled_depth: rescaled.params().l(),
        children_total,
        children_kept: children_total - skipped.len() as u64,
        skipped,
        total_mass_error,
        frostman_ratio: fr,
        frostman_cell: fr_cell,
    };
    Ok(SpectralOutcome {
        measure,
        diagnostics,
    })
}

/// Distribute reference-weight cell masses over Frostman measures of the
/// level-`t` children. Returns unnormalized weights on the grid of
/// `rescaled` plus the indices of skipped children.
fn assemble_children(rescaled: &DyadicSet, t: u32, s: f64) -> Result<(Vec<f64>, Vec<u64>)> {
    let lp = rescaled.params();
    let n = lp.n();
    let cdf = BumpCdf::new();
    let analysis = ContentAnalysis::new(rescaled, s, 0)?;
    let half_cap = 0.5 * length_pow_s(t, s);
    let children = 1u64 << (n * t);
    let sub_cells = 1u64 << (n * (lp.l() - t));
    let mut weights = vec![0.0f64; lp.cell_count() as usize];
    let mut skipped = Vec::new();

    for c in 0..children {
        let q = DyadicInterval { level: t, index: c };
        let cq = analysis.value_at(&q);
        if cq < half_cap {
            skipped.push(c);
            continue;
        }
        let x_l = q.left(n).to_f64();
        let x_r = q.right(n).to_f64();
        let m_q = cdf.eval(2.0 * x_r - 1.0) - cdf.eval(2.0 * x_l - 1.0);
        let child_set = rescaled.restrict_and_rescale(&q)?;
        let f_q = frostman_measure(&child_set, s)?;
        let scale = m_q / f_q.total();
        let base = (c * sub_cells) as usize;
        for (k, &w) in f_q.weights().iter().enumerate() {
            if w != 0.0 {
                weights[base + k] = w * scale;
            }
        }
    }
    if skipped.len() as u64 == children {
        return Err(Error::AllChildrenSkipped(children as usize));
    }
    Ok((weights, skipped))
}

/// Measured constant `C` in `|μ̂(ξ) - ŵ(ξ)| <= C · 2^(-t_levels) · |ξ|`,
/// maximized over the frequency grid `ξ = m / samples_per_unit`,
/// `0 < ξ <= xi_max`.
pub fn weight_fit_constant(
    mu: &GridMeasure,
    t_levels: u32,
    xi_max: f64,
    samples_per_unit: u32,
) -> f64 {
    let spec = mu.spectrum(samples_per_unit);
    let wb = WeightBump::new();
    let scale = (-(t_levels as f64)).exp2();
    let m_max = (xi_max * samples_per_unit as f64).floor() as u64;
    let mut worst = 0.0f64;
    for m in 1..=m_max {
        let xi = spec.xi(m);
        let c = (spec.at(m) - wb.fourier(xi)).norm() / (scale * xi);
        if c > worst {
            worst = c;
        }
    }
    worst
}
