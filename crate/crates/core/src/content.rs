//! Dyadic Hausdorff content and Frostman-type measures on grid sets.
//!
//! For a grid set `E` and exponent `s >= 0`, the content is the infimum of
//! `Σ len(Q)^s` over families of pairwise-disjoint dyadic cells (at levels
//! `>= j_floor`) whose union covers `E`, where `len(Q) = 2^(-level)` is the
//! level gauge. Because cells at or below the finest level are never needed
//! (covering a finest cell by itself is always admissible), the infimum is
//! attained by an antichain in the finite cell tree and is computed exactly
//! by one bottom-up pass:
//!
//! ```text
//!   value(leaf)           = len^s * [leaf occupied]
//!   value(Q), level >= j_floor = min(len(Q)^s * [E meets Q], Σ_children value)
//!   value(Q), level <  j_floor = Σ_children value
//! ```
//!
//! Child sums are accumulated left to right; every quantity `len^s` is
//! produced by [`length_pow_s`] so that independent evaluations of the same
//! recursion agree bit for bit.

use crate::dyadic::{DyadicInterval, DyadicSet, GridParams};
use crate::measures::GridMeasure;
use crate::util::{length_pow_s, neumaier_sum};
use crate::{Error, Result};

/// Relative tolerance under which a parent cell is preferred over its
/// children when reporting an optimal cover. Affects only the reported
/// cover, never the content value.
pub const COVER_TIE_TOL: f64 = 1e-12;

/// Exact content tree for one `(set, s, j_floor)` triple.
#[derive(Debug, Clone)]
pub struct ContentAnalysis {
    params: GridParams,
    s: f64,
    j_floor: u32,
    /// `values[j][k]` = value of the recursion at cell `(j, k)`.
    values: Vec<Vec<f64>>,
}

impl ContentAnalysis {
    pub fn new(set: &DyadicSet, s: f64, j_floor: u32) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::InvalidParams(format!(
                "content exponent must be finite and nonnegative, got {}",
                s
            )));
        }
        let params = set.params();
        if j_floor > params.l() {
            return Err(Error::InvalidParams(format!(
                "cover floor {} exceeds grid depth {}",
                j_floor,
                params.l()
            )));
        }
        let fan = 1usize << params.n();
        let l = params.l() as usize;
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); l + 1];
        let leaf_gauge = length_pow_s(params.l(), s);
        values[l] = (0..set.cell_count())
            .map(|k| if set.is_occupied(k) { leaf_gauge } else { 0.0 })
            .collect();
        for j in (0..l).rev() {
            let cap = length_pow_s(j as u32, s);
            let count = values[j + 1].len() / fan;
            let mut row = Vec::with_capacity(count);
            for k in 0..count {
                let mut sum = 0.0;
                for c in 0..fan {
                    sum += values[j + 1][k * fan + c];
                }
                let v = if sum == 0.0 {
                    0.0
                } else if (j as u32) >= j_floor {
                    cap.min(sum)
                } else {
                    sum
                };
                row.push(v);
            }
            values[j] = row;
        }
        Ok(ContentAnalysis {
            params,
            s,
            j_floor,
            values,
        })
    }

    #[inline]
    pub fn s(&self) -> f64 {
        self.s
    }

    #[inline]
    pub fn j_floor(&self) -> u32 {
        self.j_floor
    }

    /// The content of the whole set.
    #[inline]
    pub fn value(&self) -> f64 {
        self.values[0][0]
    }

    /// The content of `E ∩ q` for a cell `q` at level `>= j_floor` (covers
    /// by subcells of `q` are optimal among all admissible covers, since any
    /// strictly coarser cell costs at least as much as `q` itself).
    #[inline]
    pub fn value_at(&self, q: &DyadicInterval) -> f64 {
        self.values[q.level as usize][q.index as usize]
    }

    /// `content(E ∩ q) / len(q)^s`, the density of the set at `q`. Lies in
    /// `[0, 1]` and equals 1 exactly on occupied finest cells.
    pub fn ratio(&self, q: &DyadicInterval) -> f64 {
        debug_assert!(q.level >= self.j_floor);
        self.value_at(q) / length_pow_s(q.level, self.s)
    }

    /// An antichain cover attaining the content up to `COVER_TIE_TOL`
    /// relative slack (ties between a cell and its children are resolved
    /// toward the coarser cell).
    pub fn optimal_cover(&self) -> Vec<DyadicInterval> {
        let mut cover = Vec::new();
        self.collect_cover(0, 0, &mut cover);
        cover
    }

    fn collect_cover(&self, j: u32, k: u64, out: &mut Vec<DyadicInterval>) {
        let v = self.values[j as usize][k as usize];
        if v == 0.0 {
            return;
        }
        if j == self.params.l() {
            out.push(DyadicInterval { level: j, index: k });
            return;
        }
        if j >= self.j_floor {
            let cap = length_pow_s(j, self.s);
            let fan = 1u64 << self.params.n();
            let sum = {
                let mut acc = 0.0;
                for c in 0..fan {
                    acc += self.values[j as usize + 1][(k * fan + c) as usize];
                }
                acc
            };
            if cap <= sum * (1.0 + COVER_TIE_TOL) {
                out.push(DyadicInterval { level: j, index: k });
                return;
            }
        }
        let fan = 1u64 << self.params.n();
        for c in 0..fan {
            self.collect_cover(j + 1, k * fan + c, out);
        }
    }

    /// Per-level maxima of the density ratio, for levels `j_floor..=L`.
    pub fn level_summaries(&self) -> Vec<LevelSummary> {
        (self.j_floor..=self.params.l())
            .map(|j| {
                let cap = length_pow_s(j, self.s);
                let mut max_ratio = 0.0;
                let mut argmax = 0u64;
                for (k, &v) in self.values[j as usize].iter().enumerate() {
                    let r = v / cap;
                    if r > max_ratio {
                        max_ratio = r;
                        argmax = k as u64;
                    }
                }
                LevelSummary {
                    level: j,
                    max_ratio,
                    argmax_index: argmax,
                }
            })
            .collect()
    }
}

/// Ratio maximum over one level of the cell tree.
#[derive(Debug, Clone, Copy)]
pub struct LevelSummary {
    pub level: u32,
    pub max_ratio: f64,
    pub argmax_index: u64,
}

/// Convenience wrapper: the content value alone.
pub fn content(set: &DyadicSet, s: f64, j_floor: u32) -> Result<f64> {
    Ok(ContentAnalysis::new(set, s, j_floor)?.value())
}

/// A cell maximizing the density ratio.
#[derive(Debug, Clone, Copy)]
pub struct GoodCube {
    pub interval: DyadicInterval,
    pub ratio: f64,
    /// Content of `E ∩ interval` (unrescaled).
    pub content: f64,
}

/// The cell with the largest density ratio among levels
/// `j_floor..=j_max`; ties go to the smallest level, then to the smallest
/// index. Returns `None` exactly when the set is empty (every occupied
/// finest cell has ratio 1, so a nonempty set always has a maximizer).
pub fn best_cube_in_levels(
    set: &DyadicSet,
    s: f64,
    j_floor: u32,
    j_max: u32,
) -> Result<Option<GoodCube>> {
    let params = set.params();
    if j_max > params.l() || j_floor > j_max {
        return Err(Error::InvalidParams(format!(
            "level window [{}, {}] invalid for depth {}",
            j_floor,
            j_max,
            params.l()
        )));
    }
    let analysis = ContentAnalysis::new(set, s, j_floor)?;
    let mut best: Option<GoodCube> = None;
    for j in j_floor..=j_max {
        let cap = length_pow_s(j, s);
        for (k, &v) in analysis.values[j as usize].iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let r = v / cap;
            if best.as_ref().is_none_or(|b| r > b.ratio) {
                best = Some(GoodCube {
                    interval: DyadicInterval {
                        level: j,
                        index: k as u64,
                    },
                    ratio: r,
                    content: v,
                });
            }
        }
    }
    Ok(best)
}

/// The density-maximizing cell at any level `>= j_floor`, provided its
/// ratio reaches `1 - delta`. A nonempty set always qualifies (finest
/// occupied cells have ratio 1), so `None` means the set is empty.
pub fn good_cube(set: &DyadicSet, s: f64, delta: f64, j_floor: u32) -> Result<Option<GoodCube>> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParams(format!(
            "density defect must lie in [0, 1), got {}",
            delta
        )));
    }
    let best = best_cube_in_levels(set, s, j_floor, set.params().l())?;
    Ok(best.filter(|b| b.ratio >= 1.0 - delta))
}

/// Greedy Frostman measure: start from full weight `len^s` on every
/// occupied finest cell and rescale subtrees top-down so that every cell
/// obeys `ν(Q) <= len(Q)^s`. The cell masses reproduce the content
/// recursion, so `‖ν‖` equals the content of the set; a final top-up of a
/// single cell weight (well inside the `1e-12` cap slack) makes the
/// compensated total land at or above the content in floating point as
/// well.
pub fn frostman_measure(set: &DyadicSet, s: f64) -> Result<GridMeasure> {
    let analysis = ContentAnalysis::new(set, s, 0)?;
    let params = set.params();
    let fan = 1usize << params.n();
    let l = params.l() as usize;
    let mut weights = vec![0.0f64; params.cell_count() as usize];
    if set.is_empty() {
        return GridMeasure::new(params, weights);
    }

    let masses = &analysis.values;
    let mut factors = vec![1.0f64];
    for j in 0..l {
        let mut next = vec![0.0f64; masses[j + 1].len()];
        for (k, &f) in factors.iter().enumerate() {
            let m = masses[j][k];
            if f == 0.0 || m == 0.0 {
                continue;
            }
            let mut child_sum = 0.0;
            for c in 0..fan {
                child_sum += masses[j + 1][k * fan + c];
            }
            // m = min(cap, child_sum): a strict inequality means the cap is
            // binding and the subtree must shed mass.
            let g = if m < child_sum { f * (m / child_sum) } else { f };
            for c in 0..fan {
                next[k * fan + c] = g;
            }
        }
        factors = next;
    }
    for (k, w) in weights.iter_mut().enumerate() {
        *w = factors[k] * masses[l][k];
    }

    // Rounding in the factor products can leave the total a few ulps below
    // the content. Push the deficit (plus a guard of ~1e-15) onto the
    // heaviest cell; the perturbation is orders of magnitude below the cap
    // slack verified by callers.
    let target = analysis.value();
    let heaviest = weights
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(k, _)| k)
        .unwrap();
    for _ in 0..8 {
        let total = neumaier_sum(weights.iter().copied());
        if total >= target {
            break;
        }
        weights[heaviest] += (target - total) + target * 1e-15;
    }
    debug_assert!(neumaier_sum(weights.iter().copied()) >= target);

    GridMeasure::new(params, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::SplitMix64;

    fn params(n: u32, l: u32) -> GridParams {
        GridParams::new(n, l).unwrap()
    }

    fn random_set(p: GridParams, rng: &mut SplitMix64, fill: f64) -> DyadicSet {
        let mut set = DyadicSet::empty(p);
        for k in 0..p.cell_count() {
            if rng.next_unit() < fill {
                set.set_occupied(k, true);
            }
        }
        set
    }

    /// Exhaustive minimum over antichain covers, with the same left-to-right
    /// tree association as the production recursion.
    fn brute_force(set: &DyadicSet, s: f64, j_floor: u32, j: u32, k: u64) -> f64 {
        let p = set.params();
        let q = DyadicInterval { level: j, index: k };
        if !set.meets(&q) {
            return 0.0;
        }
        if j == p.l() {
            return length_pow_s(j, s);
        }
        let fan = 1u64 << p.n();
        let mut sum = 0.0;
        for c in 0..fan {
            sum += brute_force(set, s, j_floor, j + 1, k * fan + c);
        }
        if j >= j_floor {
            length_pow_s(j, s).min(sum)
        } else {
            sum
        }
    }

    #[test]
    fn two_corner_cells_hand_values() {
        // E = [0, 1/4) ∪ [3/4, 1) on an N=1, L=2 grid.
        let mut set = DyadicSet::empty(params(1, 2));
        set.set_occupied(0, true);
        set.set_occupied(3, true);

        // s = 1/2: each occupied leaf costs 2^(-1) = 0.5, the two halves
        // cost 2^(-1/2) ≈ 0.707 each, the root costs 1. Summing leaves
        // gives exactly 1.0, tying with the root.
        assert_eq!(content(&set, 0.5, 0).unwrap(), 1.0);
        // s = 1: content is half the Lebesgue measure of the union.
        assert_eq!(content(&set, 1.0, 0).unwrap(), 0.5);

        // With s = 1/2 the root ties the leaf cover, so the reported cover
        // collapses to the root alone.
        let analysis = ContentAnalysis::new(&set, 0.5, 0).unwrap();
        assert_eq!(
            analysis.optimal_cover(),
            vec![DyadicInterval { level: 0, index: 0 }]
        );
        // With s = 1 the leaves strictly win.
        let analysis = ContentAnalysis::new(&set, 1.0, 0).unwrap();
        assert_eq!(
            analysis.optimal_cover(),
            vec![
                DyadicInterval { level: 2, index: 0 },
                DyadicInterval { level: 2, index: 3 },
            ]
        );

        // Frostman measure for s = 1: caps never bind strictly, the weights
        // are the raw leaf gauges.
        let nu = frostman_measure(&set, 1.0).unwrap();
        assert_eq!(nu.weights(), &[0.25, 0.0, 0.0, 0.25]);
        assert_eq!(nu.total(), 0.5);
    }

    #[test]
    fn matches_exhaustive_cover_minimum_bitwise() {
        let mut rng = SplitMix64::new(424242);
        for trial in 0..120 {
            let (n, l) = match trial % 3 {
                0 => (1, 3),
                1 => (1, 4),
                _ => (2, 2),
            };
            let p = params(n, l);
            let set = random_set(p, &mut rng, 0.45);
            for &s in &[0.3, 0.5, 1.0, 1.3] {
                for j_floor in 0..=l.min(2) {
                    let dp = content(&set, s, j_floor).unwrap();
                    let bf = brute_force(&set, s, j_floor, 0, 0);
                    assert_eq!(
                        dp.to_bits(),
                        bf.to_bits(),
                        "trial {} N={} L={} s={} J={}",
                        trial,
                        n,
                        l,
                        s,
                        j_floor
                    );
                }
            }
        }
    }

    #[test]
    fn cover_is_antichain_and_attains_value() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..60 {
            let p = params(1, 5);
            let set = random_set(p, &mut rng, 0.4);
            for &s in &[0.4, 0.8] {
                let analysis = ContentAnalysis::new(&set, s, 0).unwrap();
                let cover = analysis.optimal_cover();
                // Every occupied leaf lies under exactly one cover cell.
                for k in set.iter_occupied() {
                    let hits = cover
                        .iter()
                        .filter(|q| {
                            let steps = p.l() - q.level;
                            (k >> (p.n() * steps)) == q.index
                        })
                        .count();
                    assert_eq!(hits, 1, "leaf {} covered {} times", k, hits);
                }
                // Cost within the tie tolerance of the exact value.
                let cost = neumaier_sum(cover.iter().map(|q| length_pow_s(q.level, s)));
                let v = analysis.value();
                assert!(cost <= v * (1.0 + 10.0 * COVER_TIE_TOL) + 1e-300);
                assert!(cost >= v - 1e-15);
            }
        }
    }

    #[test]
    fn monotone_in_cover_floor_and_subadditive() {
        let mut rng = SplitMix64::new(2024);
        for _ in 0..40 {
            let p = params(1, 5);
            let e = random_set(p, &mut rng, 0.35);
            let f = random_set(p, &mut rng, 0.35);
            let mut union = e.clone();
            for k in f.iter_occupied() {
                union.set_occupied(k, true);
            }
            for &s in &[0.5, 0.9] {
                // Raising the floor removes admissible covers, so the
                // infimum can only grow.
                let mut prev = content(&e, s, 0).unwrap();
                for j in 1..=p.l() {
                    let c = content(&e, s, j).unwrap();
                    assert!(c >= prev);
                    prev = c;
                }
                // Subadditivity under unions.
                let cu = content(&union, s, 0).unwrap();
                let ce = content(&e, s, 0).unwrap();
                let cf = content(&f, s, 0).unwrap();
                assert!(cu <= ce + cf + 1e-12);
            }
        }
    }

    #[test]
    fn restriction_rescale_consistency() {
        // content(E ∩ q) scales like len(q)^s under the unit rescaling of q.
        let mut rng = SplitMix64::new(7311);
        for _ in 0..30 {
            let p = params(1, 6);
            let set = random_set(p, &mut rng, 0.4);
            let s = 0.6;
            let analysis = ContentAnalysis::new(&set, s, 0).unwrap();
            for level in 1..=3u32 {
                for index in 0..(1u64 << level) {
                    let q = DyadicInterval { level, index };
                    let local = analysis.value_at(&q);
                    let rescaled = set.restrict_and_rescale(&q).unwrap();
                    let c = content(&rescaled, s, 0).unwrap();
                    let expect = c * length_pow_s(level, s);
                    assert!(
                        (local - expect).abs() <= 1e-12 * expect.max(1e-30),
                        "level {} index {}: {} vs {}",
                        level,
                        index,
                        local,
                        expect
                    );
                }
            }
        }
    }

    #[test]
    fn good_cube_selection() {
        // A single occupied finest cell: only that leaf attains ratio 1.
        let p = params(1, 4);
        let mut set = DyadicSet::empty(p);
        set.set_occupied(11, true);
        let g = good_cube(&set, 0.7, 0.25, 0).unwrap().unwrap();
        assert_eq!(g.interval, DyadicInterval { level: 4, index: 11 });
        assert_eq!(g.ratio, 1.0);

        // The full interval: every cell has ratio 1, ties resolve to the
        // root.
        let full = DyadicSet::full(p);
        let g = good_cube(&full, 0.7, 0.25, 0).unwrap().unwrap();
        assert_eq!(g.interval, DyadicInterval { level: 0, index: 0 });
        assert_eq!(g.ratio, 1.0);

        // Empty set: no cube at all.
        assert!(good_cube(&DyadicSet::empty(p), 0.7, 0.25, 0)
            .unwrap()
            .is_none());

        // Level window that excludes the occupied leaf still finds the best
        // ancestor ratio.
        let best = best_cube_in_levels(&set, 0.7, 0, 3).unwrap().unwrap();
        assert_eq!(best.interval.level, 3);
        assert!(best.ratio < 1.0);
    }

    #[test]
    fn frostman_caps_and_total() {
        let mut rng = SplitMix64::new(5150);
        for trial in 0..50 {
            let (n, l) = if trial % 2 == 0 { (1, 6) } else { (2, 4) };
            let p = params(n, l);
            let set = random_set(p, &mut rng, 0.5);
            for &s in &[0.4, 0.75, 1.0, 1.6] {
                let nu = frostman_measure(&set, s).unwrap();
                assert!(nu.supported_on(&set));
                let c = content(&set, s, 0).unwrap();
                assert!(
                    nu.total() >= c,
                    "total {} < content {} (trial {}, s {})",
                    nu.total(),
                    c,
                    s,
                    trial
                );
                let masses = nu.cube_masses();
                for (j, row) in masses.iter().enumerate() {
                    let cap = length_pow_s(j as u32, s);
                    for (k, &m) in row.iter().enumerate() {
                        assert!(
                            m <= cap + 1e-12,
                            "cap violated at level {} index {}: {} > {}",
                            j,
                            k,
                            m,
                            cap
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn frostman_empty_set_is_zero() {
        let nu = frostman_measure(&DyadicSet::empty(params(1, 3)), 0.5).unwrap();
        assert_eq!(nu.total(), 0.0);
    }

    #[test]
    fn ratio_matches_rescaled_content() {
        let mut rng = SplitMix64::new(31337);
        let p = params(1, 6);
        let set = random_set(p, &mut rng, 0.5);
        let s = 0.8;
        let analysis = ContentAnalysis::new(&set, s, 2).unwrap();
        for index in 0..4u64 {
            let q = DyadicInterval { level: 2, index };
            if !set.meets(&q) {
                continue;
            }
            let rescaled = set.restrict_and_rescale(&q).unwrap();
            let c = content(&rescaled, s, 0).unwrap();
            assert!((analysis.ratio(&q) - c).abs() <= 1e-12 * c.max(1.0));
        }
    }

    #[test]
    fn invalid_queries_rejected() {
        let p = params(1, 3);
        let set = DyadicSet::full(p);
        assert!(content(&set, -0.5, 0).is_err());
        assert!(content(&set, f64::NAN, 0).is_err());
        assert!(content(&set, 0.5, 4).is_err());
        assert!(good_cube(&set, 0.5, 1.5, 0).is_err());
        assert!(best_cube_in_levels(&set, 0.5, 2, 1).is_err());
    }
}
