//! Locating and classifying the maxima of fitted throughput surfaces.
//!
//! Interior critical points are found per polynomial patch with a damped
//! Newton iteration on the analytic gradient, then classified through the
//! Hessian's leading principal minors. Lattice points on the hull boundary
//! that dominate their neighbors are added as boundary candidates. The final
//! integer answer is the maximum over those candidates and the whole bounded
//! parameter lattice, which a brute-force oracle reproduces independently.
//!
//! All real-valued points use the `[p, cc, pp]` coordinate order of the
//! surface module.

use crate::model::{ParamBounds, ParamTriple};
use crate::surface::{Argmax, Jet3, SurfaceModel, ThroughputSurface};

/// Second-derivative-test outcome at a critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalClass {
    Max,
    Min,
    Saddle,
    Degenerate,
}

/// A critical point of the fitted surface, or a dominating boundary lattice
/// point (`on_boundary`), in `[p, cc, pp]` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub location: [f64; 3],
    pub value: f64,
    pub class: CriticalClass,
    pub on_boundary: bool,
}

/// Analytic gradient of the surface model at `point`.
pub fn gradient_at(surface: &ThroughputSurface, point: [f64; 3]) -> [f64; 3] {
    surface.jet3(point).grad
}

/// Analytic Hessian of the surface model at `point`; symmetric by
/// construction. On a patch seam the left-closed patch convention applies.
pub fn hessian_at(surface: &ThroughputSurface, point: [f64; 3]) -> [[f64; 3]; 3] {
    surface.jet3(point).hess
}

/// Definiteness of a symmetric 3x3 matrix via leading principal minors:
/// negative definite iff they alternate in sign starting negative.
pub fn classify_hessian(h: &[[f64; 3]; 3]) -> CriticalClass {
    let scale = h
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1e-300);
    let m1 = h[0][0];
    let m2 = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let m3 = det3(h);
    let (t1, t2, t3) = (1e-9 * scale, 1e-9 * scale * scale, 1e-9 * scale.powi(3));
    if m1.abs() <= t1 || m2.abs() <= t2 || m3.abs() <= t3 {
        return CriticalClass::Degenerate;
    }
    match (m1 < 0.0, m2 > 0.0, m3 < 0.0) {
        (true, true, true) => CriticalClass::Max,
        (false, true, false) => CriticalClass::Min,
        _ => CriticalClass::Saddle,
    }
}

/// 2-D variant for surfaces with a single pp sheet, where only the (p, cc)
/// block is meaningful.
fn classify_hessian_2d(h: &[[f64; 3]; 3]) -> CriticalClass {
    let scale = h[0][0]
        .abs()
        .max(h[0][1].abs())
        .max(h[1][1].abs())
        .max(1e-300);
    let m1 = h[0][0];
    let m2 = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if m1.abs() <= 1e-9 * scale || m2.abs() <= 1e-9 * scale * scale {
        return CriticalClass::Degenerate;
    }
    match (m1 < 0.0, m2 > 0.0) {
        (true, true) => CriticalClass::Max,
        (false, true) => CriticalClass::Min,
        _ => CriticalClass::Saddle,
    }
}

fn det3(h: &[[f64; 3]; 3]) -> f64 {
    h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1])
        - h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0])
        + h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0])
}

/// Axis-aligned patch on which the model is one polynomial.
#[derive(Debug, Clone, Copy)]
struct Patch {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl Patch {
    fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.lo[0] + self.hi[0]),
            0.5 * (self.lo[1] + self.hi[1]),
            0.5 * (self.lo[2] + self.hi[2]),
        ]
    }

    fn project(&self, x: [f64; 3]) -> [f64; 3] {
        [
            x[0].clamp(self.lo[0], self.hi[0]),
            x[1].clamp(self.lo[1], self.hi[1]),
            x[2].clamp(self.lo[2], self.hi[2]),
        ]
    }

    fn extent(&self) -> [f64; 3] {
        [
            self.hi[0] - self.lo[0],
            self.hi[1] - self.lo[1],
            self.hi[2] - self.lo[2],
        ]
    }
}

fn patches_of(surface: &ThroughputSurface) -> Vec<Patch> {
    match &surface.model {
        SurfaceModel::Spline(fam) => {
            let xs = fam.sheets()[0].x_knots();
            let ys = fam.sheets()[0].y_knots();
            let pps = fam.pp_knots();
            let mut out = Vec::new();
            // A single sheet still forms (p, cc) patches at its fixed pp.
            let pp_cells: Vec<(f64, f64)> = if pps.len() == 1 {
                vec![(pps[0], pps[0])]
            } else {
                pps.windows(2).map(|w| (w[0], w[1])).collect()
            };
            for i in 0..xs.len() - 1 {
                for j in 0..ys.len() - 1 {
                    for &(plo, phi) in &pp_cells {
                        out.push(Patch {
                            lo: [xs[i], ys[j], plo],
                            hi: [xs[i + 1], ys[j + 1], phi],
                        });
                    }
                }
            }
            out
        }
        SurfaceModel::Regression(_) => vec![Patch {
            lo: [surface.hull.p.0, surface.hull.cc.0, surface.hull.pp.0],
            hi: [surface.hull.p.1, surface.hull.cc.1, surface.hull.pp.1],
        }],
        SurfaceModel::Constant(_) => Vec::new(),
    }
}

fn seeds_for(patch: &Patch, model: &SurfaceModel) -> Vec<[f64; 3]> {
    match model {
        // Interpolation cells are small: the center seed suffices.
        SurfaceModel::Spline(_) => vec![patch.center()],
        // One global polynomial: probe the center and inset corners.
        SurfaceModel::Regression(_) => {
            let mut seeds = vec![patch.center()];
            let ext = patch.extent();
            for mask in 0..8u8 {
                let mut s = [0.0; 3];
                for (axis, slot) in s.iter_mut().enumerate() {
                    let frac = if mask >> axis & 1 == 1 { 0.75 } else { 0.25 };
                    *slot = patch.lo[axis] + frac * ext[axis];
                }
                seeds.push(s);
            }
            seeds
        }
        SurfaceModel::Constant(_) => Vec::new(),
    }
}

/// Solve `m x = rhs` by Gaussian elimination with partial pivoting.
fn solve3(m: &[[f64; 3]; 3], rhs: &[f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0f64; 4]; 3];
    for r in 0..3 {
        a[r][..3].copy_from_slice(&m[r]);
        a[r][3] = rhs[r];
    }
    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
            .unwrap();
        if a[pivot_row][col].abs() <= 1e-300 {
            return None;
        }
        a.swap(col, pivot_row);
        for r in col + 1..3 {
            let factor = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= factor * a[col][c];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for r in (0..3).rev() {
        let mut acc = a[r][3];
        for c in r + 1..3 {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
        if !x[r].is_finite() {
            return None;
        }
    }
    Some(x)
}

/// Newton step on `grad = 0`, Levenberg-style damped when the Hessian is
/// singular or the plain solve blows up.
fn newton_step(jet: &Jet3) -> Option<[f64; 3]> {
    let neg_g = [-jet.grad[0], -jet.grad[1], -jet.grad[2]];
    if let Some(step) = solve3(&jet.hess, &neg_g) {
        return Some(step);
    }
    let scale = jet
        .hess
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    for exp in [-8, -6, -4, -2, 0] {
        let lambda = scale * 10f64.powi(exp);
        let mut damped = jet.hess;
        for (d, row) in damped.iter_mut().enumerate() {
            row[d] += lambda;
        }
        if let Some(step) = solve3(&damped, &neg_g) {
            return Some(step);
        }
    }
    None
}

/// All critical points of the fitted model inside its patches, classified,
/// plus dominating lattice points on the hull boundary (class `Max`,
/// `on_boundary = true`). Degenerate and saddle points are reported with
/// their classification rather than dropped.
pub fn local_maxima(surface: &ThroughputSurface, bounds: &ParamBounds) -> Vec<CriticalPoint> {
    let single_sheet =
        matches!(&surface.model, SurfaceModel::Spline(fam) if fam.sheets().len() == 1);
    let mut found: Vec<CriticalPoint> = Vec::new();
    for patch in patches_of(surface) {
        let grad_dims = if single_sheet { 2 } else { 3 };
        for seed in seeds_for(&patch, &surface.model) {
            let Some(root) = run_newton(surface, &patch, seed, grad_dims) else {
                continue;
            };
            let is_dup = found
                .iter()
                .any(|cp| linf(cp.location, root) <= 1e-6);
            if is_dup {
                continue;
            }
            let jet = surface.jet3(root);
            let class = if single_sheet {
                classify_hessian_2d(&jet.hess)
            } else {
                classify_hessian(&jet.hess)
            };
            found.push(CriticalPoint {
                location: root,
                value: jet.f,
                class,
                on_boundary: false,
            });
        }
    }
    for cand in boundary_candidates(surface, bounds) {
        let loc = cand.params.surface_point();
        if found.iter().any(|cp| linf(cp.location, loc) <= 1e-6) {
            continue;
        }
        found.push(CriticalPoint {
            location: loc,
            value: cand.value,
            class: CriticalClass::Max,
            on_boundary: true,
        });
    }
    found
}

fn linf(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).abs().max((a[1] - b[1]).abs()).max((a[2] - b[2]).abs())
}

/// Newton iteration restricted to a patch. Returns a point inside the patch
/// with (restricted) gradient numerically zero, or None.
fn run_newton(
    surface: &ThroughputSurface,
    patch: &Patch,
    seed: [f64; 3],
    grad_dims: usize,
) -> Option<[f64; 3]> {
    let ext = patch.extent();
    let mut x = seed;
    let mut converged = false;
    for _ in 0..60 {
        let jet = surface.jet3(x);
        let mut step = newton_step(&jet)?;
        for axis in 0..3 {
            let cap = ext[axis].max(1e-12);
            step[axis] = step[axis].clamp(-cap, cap);
        }
        let next = patch.project([x[0] + step[0], x[1] + step[1], x[2] + step[2]]);
        let moved = linf(next, x);
        x = next;
        if moved <= 1e-11 * (1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()))) {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let jet = surface.jet3(x);
    let gscale = 1e-7 * jet.f.abs().max(1.0);
    let grad_ok = jet.grad[..grad_dims].iter().all(|g| g.abs() <= gscale);
    grad_ok.then_some(x)
}

/// Integer hull-boundary points whose surface value dominates every
/// in-hull face neighbor and strictly exceeds at least one.
fn boundary_candidates(surface: &ThroughputSurface, bounds: &ParamBounds) -> Vec<Argmax> {
    let hull = &surface.hull;
    let range = |span: (f64, f64), cap: u32| -> (i64, i64) {
        (
            span.0.ceil().max(1.0) as i64,
            span.1.floor().min(cap as f64) as i64,
        )
    };
    let (p_lo, p_hi) = range(hull.p, bounds.p);
    let (cc_lo, cc_hi) = range(hull.cc, bounds.cc);
    let (pp_lo, pp_hi) = range(hull.pp, bounds.pp);
    let value = |p: i64, cc: i64, pp: i64| {
        surface.eval([p as f64, cc as f64, pp as f64]).value
    };
    let mut out = Vec::new();
    for p in p_lo..=p_hi {
        for cc in cc_lo..=cc_hi {
            for pp in pp_lo..=pp_hi {
                let on_face = p == p_lo
                    || p == p_hi
                    || cc == cc_lo
                    || cc == cc_hi
                    || pp == pp_lo
                    || pp == pp_hi;
                if !on_face {
                    continue;
                }
                let v = value(p, cc, pp);
                let mut dominates = true;
                let mut strict = false;
                let neighbors = [
                    (p - 1, cc, pp),
                    (p + 1, cc, pp),
                    (p, cc - 1, pp),
                    (p, cc + 1, pp),
                    (p, cc, pp - 1),
                    (p, cc, pp + 1),
                ];
                for (np, ncc, npp) in neighbors {
                    if np < p_lo || np > p_hi || ncc < cc_lo || ncc > cc_hi || npp < pp_lo
                        || npp > pp_hi
                    {
                        continue;
                    }
                    let nv = value(np, ncc, npp);
                    if nv > v {
                        dominates = false;
                        break;
                    }
                    if nv < v {
                        strict = true;
                    }
                }
                if dominates && strict {
                    out.push(Argmax {
                        params: ParamTriple::new(cc as u32, p as u32, pp as u32),
                        value: v,
                    });
                }
            }
        }
    }
    out
}

/// Best integer lattice setting: the maximum over the full bounded lattice
/// evaluated through the (hull-clamped, zero-clamped) surface, together with
/// interior maxima snapped to their surrounding lattice corners. Ties break
/// to the lexicographically smallest (cc, p, pp).
pub fn surface_argmax(surface: &ThroughputSurface, bounds: &ParamBounds) -> Argmax {
    let mut best: Option<Argmax> = None;
    let mut consider = |params: ParamTriple, value: f64| match &mut best {
        None => best = Some(Argmax { params, value }),
        Some(b) => {
            if value > b.value || (value == b.value && params < b.params) {
                *b = Argmax { params, value };
            }
        }
    };
    for params in bounds.iter() {
        consider(params, surface.eval(params.surface_point()).value);
    }
    for cp in local_maxima(surface, bounds) {
        if cp.on_boundary || cp.class != CriticalClass::Max {
            continue;
        }
        let snap = |v: f64, cap: u32| -> Vec<u32> {
            let lo = v.floor().clamp(1.0, cap as f64) as u32;
            let hi = v.ceil().clamp(1.0, cap as f64) as u32;
            if lo == hi {
                vec![lo]
            } else {
                vec![lo, hi]
            }
        };
        for p in snap(cp.location[0], bounds.p) {
            for cc in snap(cp.location[1], bounds.cc) {
                for pp in snap(cp.location[2], bounds.pp) {
                    let t = ParamTriple::new(cc, p, pp);
                    consider(t, surface.eval(t.surface_point()).value);
                }
            }
        }
    }
    best.expect("non-empty parameter lattice")
}

/// Independent exhaustive check: evaluate every lattice point of the bounded
/// domain and keep the best, breaking value ties toward the smallest
/// (cc, p, pp). Written as a plain triple loop so it shares no scaffolding
/// with `surface_argmax`.
pub fn grid_argmax_oracle(surface: &ThroughputSurface, bounds: &ParamBounds) -> Argmax {
    let mut best_params = ParamTriple::new(1, 1, 1);
    let mut best_value = f64::NEG_INFINITY;
    for cc in 1..=bounds.cc {
        for p in 1..=bounds.p {
            for pp in 1..=bounds.pp {
                let v = surface.eval([p as f64, cc as f64, pp as f64]).value;
                // Strict improvement only: the scan runs in ascending
                // (cc, p, pp) order, so the first point of a tie wins.
                if v > best_value {
                    best_value = v;
                    best_params = ParamTriple::new(cc, p, pp);
                }
            }
        }
    }
    Argmax {
        params: best_params,
        value: best_value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{
        fit_band_model, Hull, LatticeObservation, LoadBand, SurfaceModel,
    };

    fn obs(cc: u32, p: u32, pp: u32, mean: f64) -> LatticeObservation {
        LatticeObservation {
            params: ParamTriple::new(cc, p, pp),
            mean,
            std: 0.0,
            n: 1,
        }
    }

    fn surface_of(f: impl Fn(f64, f64, f64) -> f64, p_axis: &[u32], cc_axis: &[u32], pp_knots: &[u32]) -> ThroughputSurface {
        let mut observations = Vec::new();
        for &pp in pp_knots {
            for &p in p_axis {
                for &cc in cc_axis {
                    observations.push(obs(cc, p, pp, f(p as f64, cc as f64, pp as f64)));
                }
            }
        }
        let fit = fit_band_model(&observations).unwrap();
        ThroughputSurface {
            cluster_id: 0,
            band: LoadBand::new(4),
            load_tag: LoadBand::new(4).midpoint(),
            model: fit.model,
            confidence: fit.confidence,
            argmax: None,
            region: None,
            low_confidence: fit.low_confidence,
            fill_fraction: fit.fill_fraction,
            hull: fit.hull,
        }
    }

    #[test]
    fn hessian_of_quadratic_bowl_is_diag_minus_two() {
        // th = 200 - (p-5)^2 - (cc-5)^2 on a 9x9 sheet: away from the
        // relaxed ends the spline's curvature approaches the true -2.
        let axis: Vec<u32> = (1..=9).collect();
        let surface = surface_of(
            |p, cc, _| 200.0 - (p - 5.0).powi(2) - (cc - 5.0).powi(2),
            &axis,
            &axis,
            &[8],
        );
        let h = hessian_at(&surface, [5.0, 5.0, 8.0]);
        assert!((h[0][0] + 2.0).abs() <= 0.1, "hpp {}", h[0][0]);
        assert!((h[1][1] + 2.0).abs() <= 0.1, "hcc {}", h[1][1]);
        assert!(h[0][1].abs() <= 0.05, "cross {}", h[0][1]);
    }

    #[test]
    fn hessian_of_affine_data_is_zero() {
        let surface = surface_of(
            |p, cc, pp| 7.0 + 2.0 * p + 3.0 * cc + 0.5 * pp,
            &[1, 3, 5, 7],
            &[1, 2, 4, 6],
            &[2, 6, 10],
        );
        for point in [[2.0, 3.0, 4.0], [4.5, 1.5, 8.0], [6.0, 5.0, 6.0]] {
            let h = hessian_at(&surface, point);
            for row in h {
                for v in row {
                    assert!(v.abs() <= 1e-7, "nonzero curvature {v} at {point:?}");
                }
            }
            // Gradient equals the generator's coefficients everywhere.
            let g = gradient_at(&surface, point);
            assert!((g[0] - 2.0).abs() <= 1e-7);
            assert!((g[1] - 3.0).abs() <= 1e-7);
            assert!((g[2] - 0.5).abs() <= 1e-7);
        }
    }

    #[test]
    fn single_bump_is_found_near_generator_peak() {
        let peak = [6.0, 4.0, 8.0];
        let f = |p: f64, cc: f64, pp: f64| {
            900.0
                * (-((p - peak[0]) / 4.0).powi(2)
                    - ((cc - peak[1]) / 3.0).powi(2)
                    - ((pp - peak[2]) / 5.0).powi(2))
                .exp()
        };
        let surface = surface_of(
            f,
            &(1..=11).collect::<Vec<_>>(),
            &(1..=8).collect::<Vec<_>>(),
            &[2, 4, 6, 8, 10, 12, 14],
        );
        let bounds = ParamBounds {
            cc: 8,
            p: 11,
            pp: 14,
        };
        let interior: Vec<_> = local_maxima(&surface, &bounds)
            .into_iter()
            .filter(|cp| cp.class == CriticalClass::Max && !cp.on_boundary)
            .collect();
        let best = interior
            .iter()
            .max_by(|a, b| a.value.partial_cmp(&b.value).unwrap())
            .expect("no interior maximum found");
        for axis in 0..3 {
            assert!(
                (best.location[axis] - peak[axis]).abs() <= 0.5,
                "axis {axis}: {} vs {}",
                best.location[axis],
                peak[axis]
            );
        }
        // Any further interior maxima are interpolation ripples, far below
        // the real peak.
        for cp in &interior {
            if linf(cp.location, best.location) > 1e-6 {
                assert!(cp.value < 0.5 * best.value, "second peak {cp:?}");
            }
        }
    }

    #[test]
    fn two_bumps_are_both_found() {
        let f = |p: f64, cc: f64, pp: f64| {
            700.0
                * (-((p - 3.0) / 2.5).powi(2)
                    - ((cc - 3.0) / 2.5).powi(2)
                    - ((pp - 4.0) / 4.0).powi(2))
                .exp()
                + 650.0
                    * (-((p - 9.0) / 2.5).powi(2)
                        - ((cc - 7.0) / 2.5).powi(2)
                        - ((pp - 12.0) / 4.0).powi(2))
                    .exp()
        };
        let surface = surface_of(
            f,
            &(1..=11).collect::<Vec<_>>(),
            &(1..=9).collect::<Vec<_>>(),
            &[2, 4, 6, 8, 10, 12, 14],
        );
        let bounds = ParamBounds {
            cc: 9,
            p: 11,
            pp: 14,
        };
        let interior: Vec<_> = local_maxima(&surface, &bounds)
            .into_iter()
            .filter(|cp| cp.class == CriticalClass::Max && !cp.on_boundary)
            .collect();
        for target in [[3.0, 3.0, 4.0], [9.0, 7.0, 12.0]] {
            assert!(
                interior.iter().any(|cp| linf(cp.location, target) <= 0.7),
                "missing bump near {target:?}; found {interior:?}"
            );
        }
    }

    #[test]
    fn monotone_surface_has_only_boundary_maxima() {
        let surface = surface_of(
            |p, cc, pp| 10.0 * p + 6.0 * cc + 3.0 * pp,
            &[1, 2, 4, 6, 8],
            &[1, 2, 4, 6],
            &[1, 4, 8, 12],
        );
        let bounds = ParamBounds { cc: 6, p: 8, pp: 12 };
        let points = local_maxima(&surface, &bounds);
        assert!(points
            .iter()
            .all(|cp| cp.class != CriticalClass::Max || cp.on_boundary));
        // The top corner dominates all neighbors, so it must be a candidate.
        assert!(points.iter().any(|cp| cp.on_boundary
            && cp.location == [8.0, 6.0, 12.0]
            && cp.class == CriticalClass::Max));
    }

    #[test]
    fn flat_surface_argmax_is_origin_by_tie_break() {
        let surface = ThroughputSurface {
            cluster_id: 0,
            band: LoadBand::new(0),
            load_tag: LoadBand::new(0).midpoint(),
            model: SurfaceModel::Constant(42.0),
            confidence: Vec::new(),
            argmax: None,
            region: None,
            low_confidence: false,
            fill_fraction: 0.0,
            hull: Hull {
                p: (1.0, 8.0),
                cc: (1.0, 8.0),
                pp: (1.0, 8.0),
            },
        };
        let bounds = ParamBounds { cc: 8, p: 8, pp: 8 };
        let best = surface_argmax(&surface, &bounds);
        assert_eq!(best.params, ParamTriple::new(1, 1, 1));
        assert_eq!(best.value, 42.0);
        assert_eq!(grid_argmax_oracle(&surface, &bounds).params, best.params);
        // And a flat field produces no dominating boundary candidates.
        assert!(local_maxima(&surface, &bounds).is_empty());
    }

    #[test]
    fn lattice_spike_wins_the_oracle() {
        // Unit-spaced axes so every swept lattice point is a knot; the spike
        // at (p=3, cc=2, pp=2) holds the maximum.
        let f = |p: f64, cc: f64, pp: f64| {
            if (p, cc, pp) == (3.0, 2.0, 2.0) {
                100.0
            } else {
                10.0
            }
        };
        let surface = surface_of(
            f,
            &[1, 2, 3, 4],
            &[1, 2, 3, 4],
            &[1, 2, 3],
        );
        let bounds = ParamBounds { cc: 4, p: 4, pp: 3 };
        let oracle = grid_argmax_oracle(&surface, &bounds);
        assert_eq!(oracle.params, ParamTriple::new(2, 3, 2));
        assert_eq!(surface_argmax(&surface, &bounds).params, oracle.params);
    }

    #[test]
    fn argmax_matches_oracle_on_random_smooth_surfaces() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = rng.gen_range(5.0..50.0);
            let b = rng.gen_range(5.0..40.0);
            let c = rng.gen_range(1.0..20.0);
            let px = rng.gen_range(2.0..7.0);
            let cx = rng.gen_range(2.0..7.0);
            let f = move |p: f64, cc: f64, pp: f64| {
                300.0 + a * (-(p - px).powi(2) / 8.0).exp() + b * (-(cc - cx).powi(2) / 6.0).exp()
                    + c * (pp / (pp + 4.0))
            };
            let surface = surface_of(
                f,
                &[1, 2, 3, 4, 5, 6, 7, 8],
                &[1, 2, 3, 4, 5, 6, 7, 8],
                &[1, 2, 4, 8, 12],
            );
            let bounds = ParamBounds { cc: 8, p: 8, pp: 12 };
            let ours = surface_argmax(&surface, &bounds);
            let oracle = grid_argmax_oracle(&surface, &bounds);
            assert_eq!(ours.params, oracle.params, "seed {seed}");
            assert_eq!(ours.value, oracle.value, "seed {seed}");
        }
    }

    #[test]
    fn argmax_value_dominates_every_lattice_point() {
        let surface = surface_of(
            |p, cc, pp| 50.0 + 3.0 * p - 0.2 * p * p + 2.0 * cc - 0.1 * cc * cc + 0.3 * pp,
            &[1, 2, 4, 6, 8, 10],
            &[1, 2, 4, 6, 8],
            &[1, 4, 8],
        );
        let bounds = ParamBounds { cc: 8, p: 10, pp: 8 };
        let best = surface_argmax(&surface, &bounds);
        for t in bounds.iter() {
            assert!(best.value >= surface.eval(t.surface_point()).value - 1e-9);
        }
    }

    #[test]
    fn classified_maxima_have_alternating_minors() {
        let f = |p: f64, cc: f64, pp: f64| {
            800.0
                * (-((p - 5.0) / 3.0).powi(2)
                    - ((cc - 4.0) / 3.0).powi(2)
                    - ((pp - 6.0) / 4.0).powi(2))
                .exp()
        };
        let surface = surface_of(
            f,
            &(1..=9).collect::<Vec<_>>(),
            &(1..=7).collect::<Vec<_>>(),
            &[2, 4, 6, 8, 10],
        );
        let bounds = ParamBounds { cc: 7, p: 9, pp: 10 };
        let mut saw_max = false;
        for cp in local_maxima(&surface, &bounds) {
            if cp.on_boundary || cp.class != CriticalClass::Max {
                continue;
            }
            saw_max = true;
            let h = hessian_at(&surface, cp.location);
            let m1 = h[0][0];
            let m2 = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            let m3 = det3(&h);
            assert!(m1 < 0.0 && m2 > 0.0 && m3 < 0.0, "minors {m1} {m2} {m3}");
        }
        assert!(saw_max);
    }
}
