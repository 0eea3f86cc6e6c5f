//! Throughput models: interpolating splines, regression baselines, and the
//! per-(cluster, load band) surface that the online sampler consults.
//!
//! All surface-space points use the coordinate order `[p, cc, pp]` (see
//! [`crate::model::ParamTriple::surface_point`]).

pub mod bicubic;
pub mod grid;
pub mod regression;
pub mod spline;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LoadIntensity, ParamTriple};
use crate::regions::SamplingRegion;
pub use bicubic::{BicubicGridSurface, Jet2};
pub use grid::{build_grid, summarize_samples, LatticeObservation, ParamLattice};
pub use regression::{fit_regression, RegressionKind, RegressionModel};
pub use spline::CubicSpline1D;

/// Two-sided z for the default 95% confidence band.
pub const DEFAULT_Z: f64 = 1.96;
/// Floor on σ as a fraction of |μ|, applied when testing confidence
/// membership so single-observation points keep a usable band.
pub const SIGMA_FLOOR_FRAC: f64 = 0.05;
/// Surfaces with more than this fraction of synthesized lattice cells are
/// marked low-confidence and their precomputed argmax is not trusted alone.
pub const LOW_CONFIDENCE_FILL: f64 = 0.5;

/// Number of load-intensity bands of width 0.1 covering [0, 1].
pub const LOAD_BANDS: usize = 10;

/// One of the ten width-0.1 load-intensity bands. Band 0 covers [0, 0.1),
/// band 9 covers [0.9, 1.0].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LoadBand(u8);

impl LoadBand {
    pub fn new(index: u8) -> Self {
        assert!((index as usize) < LOAD_BANDS, "band index out of range");
        LoadBand(index)
    }

    pub fn from_intensity(i: LoadIntensity) -> Self {
        LoadBand(((i.value() * LOAD_BANDS as f64) as usize).min(LOAD_BANDS - 1) as u8)
    }

    pub fn index(&self) -> usize {
        self.0 as usize
    }

    /// Closed-open intensity range `[lo, hi)` (closed at 1.0 for band 9).
    pub fn range(&self) -> (f64, f64) {
        (self.0 as f64 / 10.0, (self.0 as f64 + 1.0) / 10.0)
    }

    /// Band midpoint, used as the surface's load tag.
    pub fn midpoint(&self) -> LoadIntensity {
        LoadIntensity::new(self.0 as f64 / 10.0 + 0.05)
    }
}

impl std::fmt::Display for LoadBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (lo, hi) = self.range();
        write!(f, "[{lo:.1}, {hi:.1})")
    }
}

/// Axis-aligned bounding box of the observed lattice; evaluation outside it
/// clamps to the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hull {
    #[serde(with = "crate::numfmt::pair")]
    pub p: (f64, f64),
    #[serde(with = "crate::numfmt::pair")]
    pub cc: (f64, f64),
    #[serde(with = "crate::numfmt::pair")]
    pub pp: (f64, f64),
}

impl Hull {
    pub fn from_axes(p_axis: &[u32], cc_axis: &[u32], pp_knots: &[u32]) -> Self {
        let span = |axis: &[u32]| (axis[0] as f64, axis[axis.len() - 1] as f64);
        Hull {
            p: span(p_axis),
            cc: span(cc_axis),
            pp: span(pp_knots),
        }
    }

    pub fn contains(&self, point: [f64; 3]) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        inside(point[0], self.p) && inside(point[1], self.cc) && inside(point[2], self.pp)
    }

    /// Clamp `point` into the hull; the flag reports whether clamping moved it.
    pub fn clamp(&self, point: [f64; 3]) -> ([f64; 3], bool) {
        let clamped = [
            point[0].clamp(self.p.0, self.p.1),
            point[1].clamp(self.cc.0, self.cc.1),
            point[2].clamp(self.pp.0, self.pp.1),
        ];
        (clamped, clamped != point)
    }
}

/// Gaussian summary attached to one lattice point. `synthetic` marks cells
/// whose value came from hole filling rather than observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidencePoint {
    #[serde(flatten)]
    pub params: ParamTriple,
    #[serde(with = "crate::numfmt")]
    pub mean: f64,
    #[serde(with = "crate::numfmt")]
    pub std: f64,
    pub n: u32,
    pub synthetic: bool,
}

/// Precomputed best lattice setting of one surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Argmax {
    #[serde(flatten)]
    pub params: ParamTriple,
    #[serde(with = "crate::numfmt")]
    pub value: f64,
}

/// Value, gradient, and Hessian of a surface at one `[p, cc, pp]` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3 {
    pub f: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

/// Interpolating model: one bicubic (p, cc) sheet per pp knot, blended along
/// pp by the shape of a 1-D spline through the sheets' mean levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineFamily {
    /// Knots are the pp levels; values are the per-sheet means. Its pieces
    /// define how evaluation blends between adjacent sheets.
    pp_curve: CubicSpline1D,
    /// One sheet per pp knot, same (p, cc) axes on all sheets.
    sheets: Vec<BicubicGridSurface>,
}

/// Blend weight between bracketing sheets plus its first two pp-derivatives.
struct Blend {
    k: usize,
    w: f64,
    dw: f64,
    ddw: f64,
}

impl SplineFamily {
    /// Assemble from per-pp sheets (strictly increasing pp, shared axes).
    pub fn from_sheets(pp_knots: Vec<f64>, sheets: Vec<BicubicGridSurface>) -> Result<Self> {
        if sheets.is_empty() || sheets.len() != pp_knots.len() {
            return Err(Error::invalid(
                "spline family",
                "need one sheet per pp knot, at least one",
            ));
        }
        if !pp_knots.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid(
                "spline family",
                "pp knots must be strictly increasing",
            ));
        }
        let first = &sheets[0];
        if sheets.iter().any(|s| {
            s.x_knots() != first.x_knots() || s.y_knots() != first.y_knots()
        }) {
            return Err(Error::invalid(
                "spline family",
                "all sheets must share the same (p, cc) axes",
            ));
        }
        let points: Vec<(f64, f64)> = pp_knots
            .iter()
            .zip(&sheets)
            .map(|(&pp, sheet)| (pp, sheet_mean(sheet)))
            .collect();
        let pp_curve = CubicSpline1D::fit(&points)?;
        Ok(SplineFamily { pp_curve, sheets })
    }

    pub fn pp_knots(&self) -> &[f64] {
        self.pp_curve.knots()
    }

    pub fn sheets(&self) -> &[BicubicGridSurface] {
        &self.sheets
    }

    pub fn pp_curve(&self) -> &CubicSpline1D {
        &self.pp_curve
    }

    /// Blend weight for `pp` inside its bracketing interval. The weight
    /// follows the pp_curve's own normalized shape on the interval, so the
    /// pp direction inherits the 1-D spline's curvature; when the curve is
    /// flat across the interval the weight degrades to linear.
    fn blend(&self, pp: f64) -> Blend {
        let knots = self.pp_curve.knots();
        let k = self.pp_curve.locate(pp);
        let (g0, g1) = (self.pp_curve.values()[k], self.pp_curve.values()[k + 1]);
        let dg = g1 - g0;
        let scale = g0.abs().max(g1.abs()).max(1.0);
        if dg.abs() <= 1e-9 * scale {
            let dt = knots[k + 1] - knots[k];
            Blend {
                k,
                w: (pp - knots[k]) / dt,
                dw: 1.0 / dt,
                ddw: 0.0,
            }
        } else {
            Blend {
                k,
                w: (self.pp_curve.eval(pp) - g0) / dg,
                dw: self.pp_curve.deriv(pp) / dg,
                ddw: self.pp_curve.deriv2(pp) / dg,
            }
        }
    }

    /// Unclamped model value at `[p, cc, pp]`.
    pub fn eval_raw(&self, p: f64, cc: f64, pp: f64) -> f64 {
        if self.sheets.len() == 1 {
            return self.sheets[0].eval(p, cc);
        }
        let b = self.blend(pp);
        (1.0 - b.w) * self.sheets[b.k].eval(p, cc) + b.w * self.sheets[b.k + 1].eval(p, cc)
    }

    /// Value plus analytic first/second partials of the raw composition.
    pub fn jet3(&self, p: f64, cc: f64, pp: f64) -> Jet3 {
        if self.sheets.len() == 1 {
            let a = self.sheets[0].jet2(p, cc);
            return Jet3 {
                f: a.f,
                grad: [a.fx, a.fy, 0.0],
                hess: [
                    [a.fxx, a.fxy, 0.0],
                    [a.fxy, a.fyy, 0.0],
                    [0.0, 0.0, 0.0],
                ],
            };
        }
        let b = self.blend(pp);
        let lo = self.sheets[b.k].jet2(p, cc);
        let hi = self.sheets[b.k + 1].jet2(p, cc);
        let mix = |a: f64, z: f64| (1.0 - b.w) * a + b.w * z;
        let gap = |a: f64, z: f64| z - a;
        Jet3 {
            f: mix(lo.f, hi.f),
            grad: [
                mix(lo.fx, hi.fx),
                mix(lo.fy, hi.fy),
                b.dw * gap(lo.f, hi.f),
            ],
            hess: [
                [mix(lo.fxx, hi.fxx), mix(lo.fxy, hi.fxy), b.dw * gap(lo.fx, hi.fx)],
                [mix(lo.fxy, hi.fxy), mix(lo.fyy, hi.fyy), b.dw * gap(lo.fy, hi.fy)],
                [
                    b.dw * gap(lo.fx, hi.fx),
                    b.dw * gap(lo.fy, hi.fy),
                    b.ddw * gap(lo.f, hi.f),
                ],
            ],
        }
    }
}

/// Mean of a sheet's grid values (deterministic row-major summation).
fn sheet_mean(sheet: &BicubicGridSurface) -> f64 {
    let total: f64 = sheet.values().iter().flatten().sum();
    let count = sheet.values().len() * sheet.values()[0].len();
    total / count as f64
}

/// The fitted functional form behind a surface.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceModel {
    /// Interpolating spline family — the primary model.
    Spline(SplineFamily),
    /// Polynomial least-squares baseline, used when the lattice is too
    /// sparse for interpolation.
    Regression(RegressionModel),
    /// Degenerate fallback when even regression is underdetermined.
    Constant(f64),
}

impl SurfaceModel {
    pub fn eval_raw(&self, point: [f64; 3]) -> f64 {
        match self {
            SurfaceModel::Spline(fam) => fam.eval_raw(point[0], point[1], point[2]),
            SurfaceModel::Regression(m) => m.eval(point[0], point[1], point[2]),
            SurfaceModel::Constant(v) => *v,
        }
    }

    pub fn jet3(&self, point: [f64; 3]) -> Jet3 {
        match self {
            SurfaceModel::Spline(fam) => fam.jet3(point[0], point[1], point[2]),
            SurfaceModel::Regression(m) => Jet3 {
                f: m.eval(point[0], point[1], point[2]),
                grad: m.gradient(point[0], point[1], point[2]),
                hess: m.hessian(point[0], point[1], point[2]),
            },
            SurfaceModel::Constant(v) => Jet3 {
                f: *v,
                grad: [0.0; 3],
                hess: [[0.0; 3]; 3],
            },
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SurfaceModel::Spline(_) => "spline",
            SurfaceModel::Regression(m) => match m.kind {
                RegressionKind::Quadratic => "quadratic",
                RegressionKind::Cubic => "cubic",
            },
            SurfaceModel::Constant(_) => "constant",
        }
    }
}

/// Result of evaluating a surface: the clamped-to-zero prediction and
/// whether the query point had to be clamped into the hull first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eval {
    pub value: f64,
    pub clamped: bool,
}

/// Throughput model for one (cluster, load band): the fitted form, the
/// per-lattice-point confidence envelope, and precomputed optima.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputSurface {
    pub cluster_id: u32,
    pub band: LoadBand,
    /// Representative intensity of the band (its midpoint); surfaces are
    /// sorted by this tag when queried.
    pub load_tag: LoadIntensity,
    pub model: SurfaceModel,
    /// Gaussian (μ, σ) at every lattice cell, sorted by (cc, p, pp).
    pub confidence: Vec<ConfidencePoint>,
    /// Filled by the maxima pass before persistence.
    pub argmax: Option<Argmax>,
    /// Cluster-wide sampling region, duplicated onto each band surface.
    pub region: Option<SamplingRegion>,
    pub low_confidence: bool,
    pub fill_fraction: f64,
    pub hull: Hull,
}

impl ThroughputSurface {
    /// Clamp into the hull, evaluate the model, clamp the rate at zero.
    pub fn eval(&self, point: [f64; 3]) -> Eval {
        let (inside, clamped) = self.hull.clamp(point);
        Eval {
            value: self.model.eval_raw(inside).max(0.0),
            clamped,
        }
    }

    /// Raw derivatives of the model (no zero clamp — used by optimization).
    pub fn jet3(&self, point: [f64; 3]) -> Jet3 {
        let (inside, _) = self.hull.clamp(point);
        self.model.jet3(inside)
    }

    /// Stored confidence summary at a lattice point, if that point was part
    /// of this surface's lattice.
    pub fn confidence_at(&self, params: ParamTriple) -> Option<&ConfidencePoint> {
        self.confidence
            .binary_search_by(|c| c.params.cmp(&params))
            .ok()
            .map(|i| &self.confidence[i])
    }

    /// Model prediction at a lattice point: the stored μ when the point is
    /// on the lattice, otherwise the evaluated surface.
    pub fn predict(&self, params: ParamTriple) -> f64 {
        match self.confidence_at(params) {
            Some(c) => c.mean,
            None => self.eval(params.surface_point()).value,
        }
    }

    /// Gaussian band at a lattice point: stored (μ, σ) when present, else
    /// (evaluated value, 0) — the σ floor still applies on top.
    pub fn band_at(&self, params: ParamTriple) -> (f64, f64) {
        match self.confidence_at(params) {
            Some(c) => (c.mean, c.std),
            None => (self.eval(params.surface_point()).value, 0.0),
        }
    }

    /// Membership test of an observed rate in the surface's confidence band
    /// at `params`: |observed − μ| ≤ z·max(σ, 0.05·|μ|).
    pub fn within_confidence(&self, params: ParamTriple, observed: f64, z: f64) -> bool {
        assert!(z > 0.0, "confidence width z must be positive");
        let (mu, sigma) = self.band_at(params);
        let sigma_eff = sigma.max(SIGMA_FLOOR_FRAC * mu.abs());
        (observed - mu).abs() <= z * sigma_eff
    }

    /// Signed position of an observation relative to the band: `Greater`
    /// when above the upper bound, `Less` when below the lower bound.
    pub fn band_position(&self, params: ParamTriple, observed: f64, z: f64) -> std::cmp::Ordering {
        let (mu, sigma) = self.band_at(params);
        let sigma_eff = sigma.max(SIGMA_FLOOR_FRAC * mu.abs());
        if observed > mu + z * sigma_eff {
            std::cmp::Ordering::Greater
        } else if observed < mu - z * sigma_eff {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Equal
        }
    }
}

/// Model, envelope, and lattice metadata fitted from one band's
/// observations; the knowledge base attaches ids, tags, argmax, and region.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedBand {
    pub model: SurfaceModel,
    pub confidence: Vec<ConfidencePoint>,
    pub fill_fraction: f64,
    pub low_confidence: bool,
    pub hull: Hull,
}

/// Fit one band: grid the observations, pick the model class the data can
/// support, and attach the confidence envelope.
///
/// Model selection: interpolating spline family when the lattice spans at
/// least 3×3 in (p, cc); otherwise cubic regression (≥ 20 points), then
/// quadratic (≥ 10), then a constant. A rank-deficient regression degrades
/// one step rather than failing the band.
pub fn fit_band_model(observations: &[LatticeObservation]) -> Result<FittedBand> {
    let lattice = build_grid(observations)?;
    let hull = Hull::from_axes(&lattice.p_axis, &lattice.cc_axis, &lattice.pp_knots);
    let model = select_model(observations, &lattice)?;
    let confidence = confidence_envelope(observations, &lattice);
    Ok(FittedBand {
        model,
        fill_fraction: lattice.fill_fraction,
        low_confidence: lattice.fill_fraction > LOW_CONFIDENCE_FILL,
        hull,
        confidence,
    })
}

fn select_model(
    observations: &[LatticeObservation],
    lattice: &ParamLattice,
) -> Result<SurfaceModel> {
    if lattice.p_axis.len() >= 3 && lattice.cc_axis.len() >= 3 {
        let x: Vec<f64> = lattice.p_axis.iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = lattice.cc_axis.iter().map(|&v| v as f64).collect();
        let sheets = lattice
            .sheets
            .iter()
            .map(|s| BicubicGridSurface::fit(x.clone(), y.clone(), s.values.clone()))
            .collect::<Result<Vec<_>>>()?;
        let pp_knots = lattice.pp_knots.iter().map(|&v| v as f64).collect();
        return Ok(SurfaceModel::Spline(SplineFamily::from_sheets(
            pp_knots, sheets,
        )?));
    }
    let samples: Vec<([f64; 3], f64)> = observations
        .iter()
        .map(|o| (o.params.surface_point(), o.mean))
        .collect();
    let mut kinds = Vec::new();
    if samples.len() >= RegressionKind::Cubic.term_count() {
        kinds.push(RegressionKind::Cubic);
    }
    if samples.len() >= RegressionKind::Quadratic.term_count() {
        kinds.push(RegressionKind::Quadratic);
    }
    for kind in kinds {
        match fit_regression(&samples, kind) {
            Ok(m) => return Ok(SurfaceModel::Regression(m)),
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let mean = samples.iter().map(|(_, th)| th).sum::<f64>() / samples.len() as f64;
    Ok(SurfaceModel::Constant(mean))
}

/// Envelope over every lattice cell: observed cells carry their exact
/// (μ, σ, n); filled cells carry the filled value with σ borrowed as the
/// mean of face-adjacent observed σ (band-wide mean σ when isolated).
fn confidence_envelope(
    observations: &[LatticeObservation],
    lattice: &ParamLattice,
) -> Vec<ConfidencePoint> {
    let by_params: std::collections::BTreeMap<ParamTriple, (f64, u32)> = observations
        .iter()
        .map(|o| (o.params, (o.std, o.n)))
        .collect();
    let band_mean_std = if observations.is_empty() {
        0.0
    } else {
        observations.iter().map(|o| o.std).sum::<f64>() / observations.len() as f64
    };
    let point_at = |pi: usize, ci: usize, ki: usize| ParamTriple {
        cc: lattice.cc_axis[ci],
        p: lattice.p_axis[pi],
        pp: lattice.pp_knots[ki],
    };
    let mut out = Vec::with_capacity(lattice.cell_count());
    for (ki, sheet) in lattice.sheets.iter().enumerate() {
        for pi in 0..lattice.p_axis.len() {
            for ci in 0..lattice.cc_axis.len() {
                let params = point_at(pi, ci, ki);
                if let Some(&(std, n)) = by_params.get(&params) {
                    out.push(ConfidencePoint {
                        params,
                        mean: sheet.values[pi][ci],
                        std,
                        n,
                        synthetic: false,
                    });
                    continue;
                }
                // Face-adjacent observed neighbors in lattice index space.
                let mut neighbor_std = Vec::new();
                let mut visit = |pj: isize, cj: isize, kj: isize| {
                    if pj < 0 || cj < 0 || kj < 0 {
                        return;
                    }
                    let (pj, cj, kj) = (pj as usize, cj as usize, kj as usize);
                    if pj >= lattice.p_axis.len()
                        || cj >= lattice.cc_axis.len()
                        || kj >= lattice.pp_knots.len()
                    {
                        return;
                    }
                    if let Some(&(std, _)) = by_params.get(&point_at(pj, cj, kj)) {
                        neighbor_std.push(std);
                    }
                };
                let (pi_, ci_, ki_) = (pi as isize, ci as isize, ki as isize);
                visit(pi_ - 1, ci_, ki_);
                visit(pi_ + 1, ci_, ki_);
                visit(pi_, ci_ - 1, ki_);
                visit(pi_, ci_ + 1, ki_);
                visit(pi_, ci_, ki_ - 1);
                visit(pi_, ci_, ki_ + 1);
                let std = if neighbor_std.is_empty() {
                    band_mean_std
                } else {
                    neighbor_std.iter().sum::<f64>() / neighbor_std.len() as f64
                };
                out.push(ConfidencePoint {
                    params,
                    mean: sheet.values[pi][ci],
                    std,
                    n: 0,
                    synthetic: true,
                });
            }
        }
    }
    out.sort_by_key(|obs| obs.params);
    out
}
