//! Adaptive Gauss–Kronrod quadrature.
//!
//! The pair is the classical (G7, K15) rule: the 15-point Kronrod extension
//! integrates the panel, the embedded 7-point Gauss rule supplies the error
//! estimate `|K15 - G7|`. Panels are split worst-first until the summed
//! estimate drops below an absolute tolerance. Callers may seed panel
//! boundaries (for instance at the ramp edges of a cutoff) so the subdivision
//! never straddles a known feature.
//!
//! A vector variant integrates `K` components simultaneously on one shared
//! node set; the subdivision is driven by the l1 error across components.
//! Sharing nodes is what makes algebraic identities between the components
//! (for example "the nine decomposition terms sum to the total") hold to
//! rounding instead of to quadrature tolerance.

// Rule tables keep the full published digit strings even where f64 rounds
// them; trimming would obscure which reference values they are.
#![allow(clippy::excessive_precision)]

use crate::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Kronrod abscissae for the 15-point rule on [-1, 1] (positive half).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Weights of the embedded 7-point Gauss rule (its nodes are the
/// odd-indexed entries of `XGK`).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Options for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadOpts {
    /// Absolute tolerance on the summed error estimate.
    pub abs_tol: f64,
    /// Hard cap on the number of panel splits before giving up.
    pub max_panels: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts {
            abs_tol: 1e-9,
            max_panels: 20_000,
        }
    }
}

impl QuadOpts {
    pub fn with_tol(abs_tol: f64) -> Self {
        QuadOpts {
            abs_tol,
            ..Default::default()
        }
    }
}

/// One (G7, K15) evaluation of `f` over `[a, b]`.
/// Returns `(kronrod_integral, error_estimate)` per component.
fn gk15_vec<const K: usize>(f: &mut impl FnMut(f64) -> [f64; K], a: f64, b: f64) -> ([f64; K], f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);

    let fc = f(mid);
    let mut kron = [0.0f64; K];
    let mut gauss = [0.0f64; K];
    for k in 0..K {
        kron[k] = WGK[7] * fc[k];
        gauss[k] = WG[3] * fc[k];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        for k in 0..K {
            let s = f1[k] + f2[k];
            kron[k] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * s;
            }
        }
    }
    let mut err = 0.0;
    for k in 0..K {
        kron[k] *= half;
        gauss[k] *= half;
        err += (kron[k] - gauss[k]).abs();
    }
    (kron, err)
}

struct Panel<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    err: f64,
}

impl<const K: usize> PartialEq for Panel<K> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<const K: usize> Eq for Panel<K> {}
impl<const K: usize> PartialOrd for Panel<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Panel<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Errors are finite by construction; ties broken by left endpoint
        // for determinism.
        self.err
            .partial_cmp(&other.err)
            .unwrap_or(Ordering::Equal)
            .then(other.a.partial_cmp(&self.a).unwrap_or(Ordering::Equal))
    }
}

/// Adaptively integrate a `K`-component function over `[a, b]`.
///
/// `breakpoints` (those strictly inside `(a, b)`) seed the initial panels.
pub fn adaptive_vec<const K: usize>(
    mut f: impl FnMut(f64) -> [f64; K],
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: QuadOpts,
) -> Result<[f64; K]> {
    if !(a < b) {
        return Ok([0.0; K]);
    }
    let mut edges: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    inner.sort_by(|p, q| p.partial_cmp(q).unwrap());
    inner.dedup();
    edges.extend(inner);
    edges.push(b);

    let mut heap: BinaryHeap<Panel<K>> = BinaryHeap::new();
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let (value, err) = gk15_vec(&mut f, w[0], w[1]);
        total_err += err;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            err,
        });
    }

    let mut stuck: Vec<Panel<K>> = Vec::new();
    let mut splits = 0usize;
    while total_err > opts.abs_tol {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || splits >= opts.max_panels {
            // Interval width at rounding limit, or budget exhausted: park it.
            stuck.push(worst);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        splits += 1;
        total_err -= worst.err;
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, err) = gk15_vec(&mut f, lo, hi);
            total_err += err;
            heap.push(Panel {
                a: lo,
                b: hi,
                value,
                err,
            });
        }
    }

    let stuck_err: f64 = stuck.iter().map(|p| p.err).sum();
    let heap_err: f64 = heap.iter().map(|p| p.err).sum();
    if stuck_err + heap_err > opts.abs_tol {
        return Err(Error::QuadratureFailure {
            panels: splits,
            unresolved: stuck.len() + heap.len(),
            tol: opts.abs_tol,
        });
    }

    // Deterministic accumulation: sort panels by position, then sum.
    let mut panels: Vec<Panel<K>> = heap.into_vec();
    panels.extend(stuck);
    panels.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap());
    let mut out = [0.0f64; K];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = crate::util::neumaier_sum(panels.iter().map(|p| p.value[k]));
    }
    Ok(out)
}

/// Scalar adaptive integration over `[a, b]` with seeded breakpoints.
pub fn adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: QuadOpts,
) -> Result<f64> {
    adaptive_vec(move |x| [f(x)], a, b, breakpoints, opts).map(|v| v[0])
}

// 16-point Gauss–Legendre rule, used where the integrand is analytic on the
// panel and a fixed rule is cheaper than adaptivity (cutoff tables, Riesz
// kernel means).
const XGL16: [f64; 8] = [
    0.095012509837637440185,
    0.281603550779258913230,
    0.458016777657227386342,
    0.617876244402643748447,
    0.755404408355003033895,
    0.865631202387831743880,
    0.944575023073232576078,
    0.989400934991649932596,
];
const WGL16: [f64; 8] = [
    0.189450610455068496285,
    0.182603415044923588867,
    0.169156519395002538189,
    0.149595988816576732081,
    0.124628971255533872052,
    0.095158511682492784810,
    0.062253523938647892863,
    0.027152459411754094852,
];

/// Fixed 16-point Gauss–Legendre integral of `f` over `[a, b]`.
pub fn gauss16(mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for j in 0..8 {
        let dx = half * XGL16[j];
        acc += WGL16[j] * (f(mid - dx) + f(mid + dx));
    }
    acc * half
}

/// Nodes/weights of the 3-point Gauss–Legendre rule on [-1, 1], exposed for
/// per-cell averaging of smooth integrands.
pub const GL3_NODES: [f64; 3] = [-0.774596669241483377036, 0.0, 0.774596669241483377036];
pub const GL3_WEIGHTS: [f64; 3] = [
    0.555555555555555555556,
    0.888888888888888888889,
    0.555555555555555555556,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // K15 integrates degree-22 polynomials exactly; x^7 is trivial.
        let v = adaptive(|x| x * x * x * x * x * x * x, 0.0, 2.0, &[], QuadOpts::default()).unwrap();
        assert!((v - 32.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integral() {
        let v = adaptive(|x| (40.0 * x).sin(), 0.0, 1.0, &[], QuadOpts::with_tol(1e-12)).unwrap();
        let exact = (1.0 - (40.0f64).cos()) / 40.0;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn breakpoints_handle_kinks() {
        let v = adaptive(|x: f64| x.abs(), -1.0, 1.0, &[0.0], QuadOpts::with_tol(1e-13)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vector_components_share_nodes() {
        // f = (g, 1-g): the sum must integrate to the interval length exactly.
        let v = adaptive_vec(
            |x: f64| {
                let g = (x * 13.0).sin().powi(2);
                [g, 1.0 - g]
            },
            0.0,
            3.0,
            &[],
            QuadOpts::with_tol(1e-10),
        )
        .unwrap();
        assert!((v[0] + v[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn integrable_singularity_converges() {
        let v = adaptive(|x: f64| x.powf(-0.5), 1e-12, 1.0, &[], QuadOpts::with_tol(1e-8)).unwrap();
        assert!((v - 2.0).abs() < 1e-5);
    }

    #[test]
    fn gauss16_matches_adaptive_on_smooth() {
        let f = |x: f64| (-x * x).exp();
        let a = gauss16(f, 0.0, 1.0);
        let b = adaptive(f, 0.0, 1.0, &[], QuadOpts::with_tol(1e-14)).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}
