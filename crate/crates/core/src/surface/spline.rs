//! One-dimensional relaxed (natural) cubic spline interpolation.
//!
//! Given N knots the fit determines N-1 cubic pieces, 4(N-1) coefficients in
//! total, from exactly 4(N-1) conditions: 2(N-1) endpoint interpolations,
//! N-2 first-derivative continuities, N-2 second-derivative continuities,
//! and the two relaxed end conditions g''(x_1) = g''(x_N) = 0. The standard
//! reduction solves a tridiagonal system for the knot second derivatives M_i
//! and recovers the piece coefficients from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt;

/// Natural cubic spline through sorted distinct knots.
///
/// Piece `i` covers `[knots[i], knots[i+1]]` and evaluates as
/// `c0 + c1*s + c2*s^2 + c3*s^3` with `s = x - knots[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineRepr", into = "SplineRepr")]
pub struct CubicSpline1D {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots (zero at both ends by construction).
    m: Vec<f64>,
    pieces: Vec<[f64; 4]>,
    linear_fallback: bool,
}

impl CubicSpline1D {
    /// Fit through `points`; x-duplicates are averaged first. Fewer than 3
    /// distinct x values produce a piecewise-linear fallback, flagged.
    pub fn fit(points: &[(f64, f64)]) -> Result<Self> {
        let (knots, values) = average_duplicates(points)?;
        Ok(Self::from_knots(knots, values))
    }

    /// Build from distinct, strictly increasing knots.
    pub(crate) fn from_knots(knots: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(knots.len(), values.len());
        assert!(
            knots.windows(2).all(|w| w[0] < w[1]),
            "knots must be strictly increasing"
        );
        let n = knots.len();
        if n < 3 {
            let mut pieces = Vec::new();
            if n == 2 {
                let h = knots[1] - knots[0];
                pieces.push([values[0], (values[1] - values[0]) / h, 0.0, 0.0]);
            }
            return CubicSpline1D {
                m: vec![0.0; n],
                pieces,
                knots,
                values,
                linear_fallback: true,
            };
        }
        let m = solve_second_derivatives(&knots, &values);
        let pieces = pieces_from_m(&knots, &values, &m);
        // The fit consumed one unknown per coefficient: 4(N-1) in total.
        assert_eq!(pieces.len() * 4, 4 * (n - 1));
        CubicSpline1D {
            knots,
            values,
            m,
            pieces,
            linear_fallback: false,
        }
    }

    /// Rebuild from persisted parts (knots, values, knot second derivatives).
    pub fn from_parts(
        knots: Vec<f64>,
        values: Vec<f64>,
        m: Vec<f64>,
        linear_fallback: bool,
    ) -> Result<Self> {
        if knots.len() != values.len() || knots.len() != m.len() {
            return Err(Error::invalid("spline parts", "length mismatch"));
        }
        if !knots.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("spline parts", "knots not increasing"));
        }
        let pieces = if linear_fallback {
            let mut p = Vec::new();
            if knots.len() == 2 {
                let h = knots[1] - knots[0];
                p.push([values[0], (values[1] - values[0]) / h, 0.0, 0.0]);
            }
            p
        } else {
            pieces_from_m(&knots, &values, &m)
        };
        Ok(CubicSpline1D {
            knots,
            values,
            m,
            pieces,
            linear_fallback,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.m
    }

    pub fn pieces(&self) -> &[[f64; 4]] {
        &self.pieces
    }

    pub fn is_linear_fallback(&self) -> bool {
        self.linear_fallback
    }

    /// Index of the piece covering `x`: left-closed with the last knot
    /// belonging to the final piece. Outside the span the nearest boundary
    /// piece extrapolates.
    pub fn locate(&self, x: f64) -> usize {
        locate(&self.knots, x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.pieces.is_empty() {
            return self.values.first().copied().unwrap_or(0.0);
        }
        let i = self.locate(x);
        let s = x - self.knots[i];
        let [c0, c1, c2, c3] = self.pieces[i];
        c0 + s * (c1 + s * (c2 + s * c3))
    }

    pub fn deriv(&self, x: f64) -> f64 {
        if self.pieces.is_empty() {
            return 0.0;
        }
        let i = self.locate(x);
        let s = x - self.knots[i];
        let [_, c1, c2, c3] = self.pieces[i];
        c1 + s * (2.0 * c2 + s * 3.0 * c3)
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        if self.pieces.is_empty() {
            return 0.0;
        }
        let i = self.locate(x);
        let s = x - self.knots[i];
        let [_, _, c2, c3] = self.pieces[i];
        2.0 * c2 + 6.0 * c3 * s
    }
}

/// Largest `i` with `knots[i] <= x`, clamped so a valid piece index returns.
pub(crate) fn locate(knots: &[f64], x: f64) -> usize {
    debug_assert!(knots.len() >= 2);
    let n_pieces = knots.len() - 1;
    match knots.binary_search_by(|k| k.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(n_pieces - 1),
        Err(0) => 0,
        Err(i) => (i - 1).min(n_pieces - 1),
    }
}

/// Sort by x and average y over exact x-duplicates.
fn average_duplicates(points: &[(f64, f64)]) -> Result<(Vec<f64>, Vec<f64>)> {
    if points.is_empty() {
        return Err(Error::Fit("spline fit needs at least one point".into()));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Fit("spline fit given non-finite input".into()));
    }
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i].0;
        let mut sum = 0.0;
        let mut count = 0usize;
        while i < sorted.len() && sorted[i].0 == x {
            sum += sorted[i].1;
            count += 1;
            i += 1;
        }
        knots.push(x);
        values.push(sum / count as f64);
    }
    Ok((knots, values))
}

/// Solve the interior tridiagonal system for knot second derivatives.
/// End conditions M_0 = M_{N-1} = 0 are substituted directly.
fn solve_second_derivatives(knots: &[f64], values: &[f64]) -> Vec<f64> {
    let n = knots.len();
    let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    let dim = n - 2;
    let mut diag = vec![0.0; dim];
    let mut rhs = vec![0.0; dim];
    let mut sub = vec![0.0; dim]; // sub[k] multiplies M_{k-1}
    let mut sup = vec![0.0; dim]; // sup[k] multiplies M_{k+1}
    for k in 0..dim {
        let i = k + 1; // knot index
        sub[k] = h[i - 1];
        diag[k] = 2.0 * (h[i - 1] + h[i]);
        sup[k] = h[i];
        rhs[k] = 6.0
            * ((values[i + 1] - values[i]) / h[i] - (values[i] - values[i - 1]) / h[i - 1]);
    }
    // Forward sweep.
    for k in 1..dim {
        // Diagonal dominance of the natural-spline system keeps pivots
        // positive for distinct knots; a zero pivot here is a logic error.
        assert!(diag[k - 1] > 0.0, "singular spline system");
        let w = sub[k] / diag[k - 1];
        diag[k] -= w * sup[k - 1];
        rhs[k] -= w * rhs[k - 1];
    }
    assert!(dim == 0 || diag[dim - 1] > 0.0, "singular spline system");
    // Back substitution.
    let mut interior = vec![0.0; dim];
    if dim > 0 {
        interior[dim - 1] = rhs[dim - 1] / diag[dim - 1];
        for k in (0..dim - 1).rev() {
            interior[k] = (rhs[k] - sup[k] * interior[k + 1]) / diag[k];
        }
    }
    let mut m = vec![0.0; n];
    m[1..n - 1].copy_from_slice(&interior);
    m
}

/// Local piece coefficients from knot values and second derivatives.
fn pieces_from_m(knots: &[f64], values: &[f64], m: &[f64]) -> Vec<[f64; 4]> {
    (0..knots.len() - 1)
        .map(|i| {
            let h = knots[i + 1] - knots[i];
            [
                values[i],
                (values[i + 1] - values[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0,
                m[i] / 2.0,
                (m[i + 1] - m[i]) / (6.0 * h),
            ]
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct SplineRepr {
    #[serde(with = "numfmt::vec")]
    knots: Vec<f64>,
    #[serde(with = "numfmt::vec")]
    values: Vec<f64>,
    #[serde(with = "numfmt::vec")]
    m: Vec<f64>,
    linear_fallback: bool,
}

impl From<CubicSpline1D> for SplineRepr {
    fn from(s: CubicSpline1D) -> Self {
        SplineRepr {
            knots: s.knots,
            values: s.values,
            m: s.m,
            linear_fallback: s.linear_fallback,
        }
    }
}

impl TryFrom<SplineRepr> for CubicSpline1D {
    type Error = Error;

    fn try_from(r: SplineRepr) -> Result<Self> {
        CubicSpline1D::from_parts(r.knots, r.values, r.m, r.linear_fallback)
    }
}
