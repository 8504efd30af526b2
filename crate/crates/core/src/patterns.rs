//! Brute-force search for curved three-point configurations
//! `{x, x − t, x − γ_λ(t)}` inside the closure of a dyadic set.
//!
//! The search is a direct oracle: it enumerates explicit candidate triples
//! and keeps those whose three points all lie in the closure of the occupied
//! cells.  No measure theory is involved — a returned [`PatternWitness`] is
//! a checkable certificate, and [`verify_witness`] re-derives everything it
//! claims from scratch.
//!
//! Candidate grid:
//!
//! * `x` runs over the representative points of every occupied cell — left
//!   endpoint, center, right endpoint of the closed cell;
//! * `t` runs over positive integer multiples of the finest cell width
//!   `w = 2^{−NL}`, bounded by `t ≤ x` so the second point stays in `[0, 1]`;
//! * `λ` runs over a caller-supplied grid (see [`default_lambda_grid`]), and
//!   the third point uses the rescaled curve `γ_λ(t) = λ⁻¹·γ(λt)`.
//!
//! Two non-triviality rules keep the witnesses meaningful at resolution `w`:
//! `t ≥ w` (a shift below one cell is indistinguishable from zero), and the
//! three points must not all fit inside a single closed grid cell (such a
//! configuration collapses to a point at the grid's resolution; it can only
//! occur in the boundary case `t = w` with `x` on a cell endpoint).
//!
//! Results are deterministic: ascending `x`, then ascending `t`, then
//! ascending `λ`.  The search space is partitioned by `x` and the partitions
//! run concurrently; the merge preserves the deterministic order, so thread
//! count never changes the output.

use crate::curves::Curve;
use crate::dyadic::{DyadicSet, GridParams};
use crate::{Error, Result};
use rayon::prelude::*;

/// Tolerance for comparing a witness's stored redundant fields (points,
/// separation) against their recomputation.  Exact for witnesses produced in
/// process; absorbs last-ulp differences in transcendental curve evaluations
/// when a witness file crosses library versions.
const STORED_FIELD_TOL: f64 = 1e-12;

/// How many `x` representatives each parallel batch processes before the
/// collector checks whether `max_results` has been reached.
const X_BATCH: usize = 256;

/// A checkable certificate that the closure of a dyadic set contains the
/// three-point configuration `{x, x − t, x − γ_λ(t)}`.
///
/// The `points`, `cells`, and `separation` fields are redundant data derived
/// from `(x, t, lambda)` and the curve; they are stored so that a witness is
/// self-describing in reports and so that [`verify_witness`] can detect a
/// corrupted or stale record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternWitness {
    /// Anchor point; always a cell endpoint or cell center.
    pub x: f64,
    /// Shift; a positive integer multiple of the finest cell width.
    pub t: f64,
    /// Rescaling parameter of the curve, `γ_λ(t) = λ⁻¹·γ(λt)`.
    pub lambda: f64,
    /// The configuration `[x, x − t, x − γ_λ(t)]`.
    pub points: [f64; 3],
    /// For each point, an occupied finest-level cell whose closure contains
    /// it (the containing half-open cell when that one is occupied, else the
    /// left neighbour for boundary points).
    pub cells: [u64; 3],
    /// Minimum pairwise distance between the three points.  Can be `0` when
    /// `γ_λ(t) = t` exactly; the non-triviality of the witness is carried by
    /// `t`, not by the separation.
    pub separation: f64,
}

/// The default rescaling grid `{2^{jN} : j = 0..=L}`: one factor per
/// subdivision level, so every dyadic zoom scale of the grid is represented.
pub fn default_lambda_grid(params: GridParams) -> Vec<f64> {
    (0..=params.l())
        .map(|j| 2f64.powi((j * params.n()) as i32))
        .collect()
}

fn min_pairwise(p: &[f64; 3]) -> f64 {
    let a = (p[0] - p[1]).abs();
    let b = (p[0] - p[2]).abs();
    let c = (p[1] - p[2]).abs();
    a.min(b).min(c)
}

/// True when all three points fit inside one closed grid cell of the given
/// width.  Since the points span at least `t ≥ width`, this can only happen
/// when the span is exactly one cell and the leftmost point sits on a cell
/// boundary.
fn fits_in_one_cell(p: &[f64; 3], width: f64) -> bool {
    let lo = p[0].min(p[1]).min(p[2]);
    let hi = p[0].max(p[1]).max(p[2]);
    let c = (lo / width).floor();
    hi <= (c + 1.0) * width
}

/// All witnesses anchored at `x`, in ascending `(t, λ)` order.  `scaled`
/// holds the curve rescaled by each grid value, ascending in `λ`.
fn witnesses_for_x(
    set: &DyadicSet,
    scaled: &[Curve],
    lambdas: &[f64],
    x: f64,
    width: f64,
    k_cap: u64,
) -> Vec<PatternWitness> {
    let mut out = Vec::new();
    let Some(cell_x) = set.closure_cell(x) else {
        return out;
    };
    let k_max = ((x / width).floor() as u64).min(k_cap);
    for k in 1..=k_max {
        let t = k as f64 * width;
        let second = x - t;
        let Some(cell_second) = set.closure_cell(second) else {
            continue;
        };
        for (c, &lambda) in scaled.iter().zip(lambdas) {
            // λ ascending ⇒ rescaled domains shrink; once t falls outside,
            // it stays outside.
            if t > c.domain_end() {
                break;
            }
            let Ok(gamma) = c.eval(t) else { continue };
            let third = x - gamma;
            let Some(cell_third) = set.closure_cell(third) else {
                continue;
            };
            let points = [x, second, third];
            if fits_in_one_cell(&points, width) {
                continue;
            }
            out.push(PatternWitness {
                x,
                t,
                lambda,
                points,
                cells: [cell_x, cell_second, cell_third],
                separation: min_pairwise(&points),
            });
        }
    }
    out
}

/// Searches the closure of `set` for configurations `{x, x − t, x − γ_λ(t)}`
/// over the candidate grid described in the module docs, stopping once
/// `max_results` witnesses have been collected.
///
/// The `lambdas` grid is sorted ascending and deduplicated; every entry must
/// be positive and finite.  Any rescaling parameter already stored on
/// `curve` is replaced by each grid value in turn.  Combinations where `λ·t`
/// exceeds the curve's native domain are skipped, not errors.  An empty
/// result is a valid outcome (in particular for an empty set, an empty grid,
/// or `max_results = 0`).
pub fn find_patterns(
    set: &DyadicSet,
    curve: &Curve,
    lambdas: &[f64],
    max_results: usize,
) -> Result<Vec<PatternWitness>> {
    for &l in lambdas {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::ParamDomain(format!(
                "rescaling grid entries must be positive and finite, got {l}"
            )));
        }
    }
    let mut lams = lambdas.to_vec();
    lams.sort_unstable_by(f64::total_cmp);
    lams.dedup();
    if lams.is_empty() || max_results == 0 || set.is_empty() {
        return Ok(Vec::new());
    }
    let scaled: Vec<Curve> = lams
        .iter()
        .map(|&l| curve.with_lambda(l))
        .collect::<Result<_>>()?;

    let width = set.params().cell_width();
    // Largest admissible shift over the whole grid: the smallest λ has the
    // widest rescaled domain.
    let k_cap_f = (scaled[0].domain_end() / width).floor();
    let k_cap = if k_cap_f >= u64::MAX as f64 {
        u64::MAX
    } else {
        k_cap_f as u64
    };

    let mut xs: Vec<f64> = Vec::with_capacity(3 * set.occupied_count() as usize);
    for i in set.iter_occupied() {
        let left = i as f64 * width;
        xs.push(left);
        xs.push(left + 0.5 * width);
        xs.push(left + width);
    }
    xs.sort_unstable_by(f64::total_cmp);
    xs.dedup();

    let mut out: Vec<PatternWitness> = Vec::new();
    for batch in xs.chunks(X_BATCH) {
        let found: Vec<Vec<PatternWitness>> = batch
            .par_iter()
            .map(|&x| witnesses_for_x(set, &scaled, &lams, x, width, k_cap))
            .collect();
        for group in found {
            out.extend(group);
        }
        if out.len() >= max_results {
            break;
        }
    }
    out.truncate(max_results);
    Ok(out)
}

/// Re-derives everything a witness claims and checks it against `set`:
/// the points must match the defining formulas `(x, x − t, x − γ_λ(t))`,
/// every point must lie in the closure of an occupied cell — in particular
/// in the closed cell the witness names — `t` must be at least one cell
/// width, and the configuration must not collapse into a single closed
/// cell.  Returns `false` (never an error) on any violation, including a
/// `λ·t` outside the curve's domain.
pub fn verify_witness(set: &DyadicSet, w: &PatternWitness, curve: &Curve) -> bool {
    let width = set.params().cell_width();
    if !w.x.is_finite() || !w.t.is_finite() || !w.lambda.is_finite() || !(w.lambda > 0.0) {
        return false;
    }
    if w.t < width {
        return false;
    }
    let Ok(scaled) = curve.with_lambda(w.lambda) else {
        return false;
    };
    let Ok(gamma) = scaled.eval(w.t) else {
        return false;
    };
    let points = [w.x, w.x - w.t, w.x - gamma];
    for (p, stored) in points.iter().zip(&w.points) {
        if !((p - stored).abs() <= STORED_FIELD_TOL) {
            return false;
        }
    }
    if !((min_pairwise(&points) - w.separation).abs() <= STORED_FIELD_TOL) {
        return false;
    }
    if fits_in_one_cell(&points, width) {
        return false;
    }
    for (&p, &cell) in points.iter().zip(&w.cells) {
        if cell >= set.cell_count() || !set.is_occupied(cell) {
            return false;
        }
        let lo = cell as f64 * width;
        if !(p >= lo && p <= lo + width) {
            return false;
        }
    }
    true
}
